//! The catalog of deterministic hidden-variable models.
//!
//! * single spin: `X = sgn((P + λ)·a)` for a Bloch vector `P` with `|P| ≤ 1`;
//! * sufficient condition: only the product `XY = sgn(λ₁·λ₂ − a·b)` is defined;
//! * complete: `X = sgn(a·λ₁)`, `Y = sgn(λ₁·λ₂ − a·b)·X`;
//! * local baseline: `X = sgn(a·λ)`, `Y = −sgn(b·λ)` with one shared `λ`.

use std::fmt;

use crate::error::ModelError;
use crate::geometry::{sample_unit_vector, sgn, SeededRng, Sign, UnitVector3, Vector3};

/// Slack allowed on `|P| ≤ 1`.
pub const BLOCH_NORM_SLACK: f64 = 1e-12;

/// A single-spin polarization `P` with `|P| ≤ 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochVector(Vector3);

impl BlochVector {
    pub const ZERO: BlochVector = BlochVector(Vector3::ZERO);

    pub fn new(p: Vector3) -> Result<Self, ModelError> {
        if !p.is_finite() {
            return Err(ModelError::NonFiniteBlochVector);
        }
        let norm = p.norm();
        if norm > 1.0 + BLOCH_NORM_SLACK {
            return Err(ModelError::BlochVectorTooLong { norm });
        }
        Ok(Self(p))
    }

    pub fn as_vector(&self) -> &Vector3 {
        &self.0
    }
}

/// Which model to run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModelSpec {
    SingleSpin { bloch: BlochVector },
    SufficientCondition,
    Complete,
    LocalBaseline,
}

/// What a model reports per trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutcomeKind {
    /// One outcome `X` (single-spin model).
    Single,
    /// Only the product `XY`.
    ProductOnly,
    /// Both outcomes `(X, Y)`.
    Pair,
}

impl ModelSpec {
    pub fn single_spin(p: Vector3) -> Result<Self, ModelError> {
        Ok(ModelSpec::SingleSpin {
            bloch: BlochVector::new(p)?,
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            ModelSpec::SingleSpin { .. } => "single_spin",
            ModelSpec::SufficientCondition => "sufficient_condition",
            ModelSpec::Complete => "complete",
            ModelSpec::LocalBaseline => "local_baseline",
        }
    }

    pub fn outcome_kind(&self) -> OutcomeKind {
        match self {
            ModelSpec::SingleSpin { .. } => OutcomeKind::Single,
            ModelSpec::SufficientCondition => OutcomeKind::ProductOnly,
            ModelSpec::Complete | ModelSpec::LocalBaseline => OutcomeKind::Pair,
        }
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// The two shared hidden variables of the two-party models.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HiddenPair {
    pub lambda1: UnitVector3,
    pub lambda2: UnitVector3,
}

impl HiddenPair {
    pub fn new(lambda1: UnitVector3, lambda2: UnitVector3) -> Self {
        Self { lambda1, lambda2 }
    }

    /// Draws `λ₁` then `λ₂`.
    #[inline]
    pub fn sample(rng: &mut SeededRng) -> Self {
        let lambda1 = sample_unit_vector(rng);
        let lambda2 = sample_unit_vector(rng);
        Self { lambda1, lambda2 }
    }
}

/// Measurement directions of the two parties.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SettingPair {
    pub a: UnitVector3,
    pub b: UnitVector3,
}

impl SettingPair {
    pub fn new(a: UnitVector3, b: UnitVector3) -> Self {
        Self { a, b }
    }

    /// `a` along +z and `b` in the xz-plane at `theta` radians from `a`.
    pub fn planar(theta: f64) -> Self {
        Self {
            a: UnitVector3::Z,
            b: UnitVector3::planar(theta),
        }
    }

    /// `a·b`, clamped into `[-1, 1]`.
    pub fn cos_theta(&self) -> f64 {
        self.a.dot(&self.b).clamp(-1.0, 1.0)
    }

    pub fn theta(&self) -> f64 {
        self.a.angle_to(&self.b)
    }
}

/// Both outcomes of one two-party trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OutcomePair {
    pub x: Sign,
    pub y: Sign,
}

impl OutcomePair {
    pub fn product(&self) -> Sign {
        self.x * self.y
    }
}

/// The value `XY` of the sufficient-condition model.
///
/// There is deliberately no way to get `X` or `Y` out of this.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProductOutcome(Sign);

impl ProductOutcome {
    pub fn product(&self) -> Sign {
        self.0
    }
}

/// The result of one trial of any model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrialOutcome {
    Single(Sign),
    ProductOnly(ProductOutcome),
    Pair(OutcomePair),
}

impl TrialOutcome {
    /// `XY` for two-party outcomes.
    pub fn product(&self) -> Option<Sign> {
        match self {
            TrialOutcome::Single(_) => None,
            TrialOutcome::ProductOnly(p) => Some(p.product()),
            TrialOutcome::Pair(p) => Some(p.product()),
        }
    }
}

#[inline]
pub fn single_spin_outcome(p: &BlochVector, lambda: &UnitVector3, a: &UnitVector3) -> Sign {
    let shifted = *p.as_vector() + Vector3::from(*lambda);
    sgn(shifted.dot(a.as_vector()))
}

#[inline]
pub fn sufficient_condition_product(h: &HiddenPair, s: &SettingPair) -> ProductOutcome {
    ProductOutcome(sgn(h.lambda1.dot(&h.lambda2) - s.a.dot(&s.b)))
}

#[inline]
pub fn complete_outcomes(h: &HiddenPair, s: &SettingPair) -> OutcomePair {
    let x = sgn(s.a.dot(&h.lambda1));
    let y = sgn(h.lambda1.dot(&h.lambda2) - s.a.dot(&s.b)) * x;
    OutcomePair { x, y }
}

#[inline]
pub fn local_baseline_outcomes(lambda: &UnitVector3, s: &SettingPair) -> OutcomePair {
    OutcomePair {
        x: sgn(s.a.dot(lambda)),
        y: -sgn(s.b.dot(lambda)),
    }
}
