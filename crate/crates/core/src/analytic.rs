//! Closed-form predictions used as ground truth for the Monte Carlo runs.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use crate::error::{AnalyticError, ModelError};
use crate::geometry::{cap_solid_angle_above, cap_solid_angle_below, Sign, UnitVector3, Vector3};
use crate::models::{SettingPair, BLOCH_NORM_SLACK};

/// Probabilities of `(+,+)`, `(+,−)`, `(−,+)`, `(−,−)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointProbabilities {
    pub pp: f64,
    pub pm: f64,
    pub mp: f64,
    pub mm: f64,
}

impl JointProbabilities {
    pub fn get(&self, x: Sign, y: Sign) -> f64 {
        match (x, y) {
            (Sign::Plus, Sign::Plus) => self.pp,
            (Sign::Plus, Sign::Minus) => self.pm,
            (Sign::Minus, Sign::Plus) => self.mp,
            (Sign::Minus, Sign::Minus) => self.mm,
        }
    }

    pub fn correlation(&self) -> f64 {
        self.pp + self.mm - self.pm - self.mp
    }

    pub fn cells(&self) -> [f64; 4] {
        [self.pp, self.pm, self.mp, self.mm]
    }
}

/// Four measurement directions for a CHSH combination.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChshSettings {
    pub a: UnitVector3,
    pub a_prime: UnitVector3,
    pub b: UnitVector3,
    pub b_prime: UnitVector3,
}

/// Planar angles (degrees from +z in the xz-plane) of `a`, `a′`, `b`, `b′`
/// at which the singlet correlation reaches `|S| = 2√2`.
pub const STANDARD_CHSH_ANGLES_DEG: [f64; 4] = [0.0, 90.0, 45.0, 135.0];

impl ChshSettings {
    /// Planar settings from four angles in radians.
    pub fn planar(a: f64, a_prime: f64, b: f64, b_prime: f64) -> Self {
        Self {
            a: UnitVector3::planar(a),
            a_prime: UnitVector3::planar(a_prime),
            b: UnitVector3::planar(b),
            b_prime: UnitVector3::planar(b_prime),
        }
    }

    pub fn planar_degrees(angles: [f64; 4]) -> Self {
        let [a, ap, b, bp] = angles.map(f64::to_radians);
        Self::planar(a, ap, b, bp)
    }

    pub fn standard() -> Self {
        Self::planar(0.0, FRAC_PI_2, FRAC_PI_4, 3.0 * FRAC_PI_4)
    }

    /// The four setting pairs in the order `(a,b)`, `(a,b′)`, `(a′,b)`, `(a′,b′)`.
    pub fn pairs(&self) -> [SettingPair; 4] {
        [
            SettingPair::new(self.a, self.b),
            SettingPair::new(self.a, self.b_prime),
            SettingPair::new(self.a_prime, self.b),
            SettingPair::new(self.a_prime, self.b_prime),
        ]
    }
}

/// Coefficients of the four correlations in the CHSH combination, matching [`ChshSettings::pairs`].
pub const CHSH_COEFFICIENTS: [f64; 4] = [1.0, -1.0, 1.0, 1.0];

fn check_cosine(c: f64) -> Result<(), AnalyticError> {
    if !(-1.0..=1.0).contains(&c) {
        return Err(AnalyticError::CosineOutOfRange(c));
    }
    Ok(())
}

/// Singlet correlation `⟨XY⟩ = −a·b`.
pub fn singlet_correlation(s: &SettingPair) -> f64 {
    -s.a.dot(&s.b)
}

pub fn singlet_joint_probabilities(cos_theta: f64) -> Result<JointProbabilities, AnalyticError> {
    check_cosine(cos_theta)?;
    let same = (1.0 - cos_theta) / 4.0;
    let diff = (1.0 + cos_theta) / 4.0;
    Ok(JointProbabilities {
        pp: same,
        pm: diff,
        mp: diff,
        mm: same,
    })
}

/// `P(Y = y | X = x)` for the singlet: the joint cell divided by the uniform
/// marginal `1/2`, i.e. `(1 − x·y·cos θ)/2`.
pub fn singlet_conditional(y_given: Sign, x: Sign, cos_theta: f64) -> f64 {
    debug_assert!((-1.0..=1.0).contains(&cos_theta));
    let xy = (x * y_given).as_f64();
    (1.0 - xy * cos_theta) / 2.0
}

/// Single-spin expectation `⟨X⟩ = P·a`.
pub fn single_spin_expectation(p: &Vector3, a: &UnitVector3) -> Result<f64, AnalyticError> {
    if !p.is_finite() {
        return Err(ModelError::NonFiniteBlochVector.into());
    }
    let norm = p.norm();
    if norm > 1.0 + BLOCH_NORM_SLACK {
        return Err(ModelError::BlochVectorTooLong { norm }.into());
    }
    Ok(p.dot(a.as_vector()))
}

/// The inner sphere integral of `sgn(λ₁·λ₂ − a·b)` over `λ₂` for fixed `λ₁`,
/// computed from cap areas: `(Ω(+) − Ω(−)) / 4π`.
///
/// The result does not depend on `λ₁`, so it also equals the full double integral.
pub fn inner_integral_reduction(s: &SettingPair) -> f64 {
    let c = s.cos_theta();
    let above = cap_solid_angle_above(c).expect("cos_theta is clamped into [-1, 1]");
    let below = cap_solid_angle_below(c).expect("cos_theta is clamped into [-1, 1]");
    (above - below) / (4.0 * PI)
}

fn check_angle(theta: f64) -> Result<(), AnalyticError> {
    if !(0.0..=PI).contains(&theta) {
        return Err(AnalyticError::AngleOutOfRange(theta));
    }
    Ok(())
}

/// Saw-tooth correlation `−1 + 2θ/π` of the local hemisphere model.
pub fn local_baseline_correlation(theta: f64) -> Result<f64, AnalyticError> {
    check_angle(theta)?;
    Ok(-1.0 + 2.0 * theta / PI)
}

/// Joint probabilities of the local hemisphere model at angle `theta`.
///
/// `(+,+)` needs `a·λ > 0` and `b·λ < 0`, a lune of opening `θ`, so it has
/// probability `θ/2π`; the other cells follow by symmetry.
pub fn local_baseline_joint_probabilities(theta: f64) -> Result<JointProbabilities, AnalyticError> {
    check_angle(theta)?;
    let same = theta / (2.0 * PI);
    let diff = (PI - theta) / (2.0 * PI);
    Ok(JointProbabilities {
        pp: same,
        pm: diff,
        mp: diff,
        mm: same,
    })
}

/// `P(Y = +1 | X = +1) − P(Y = +1 | X = −1)` magnitude for the local hemisphere model: `|1 − 2θ/π|`.
pub fn local_baseline_outcome_gap(theta: f64) -> Result<f64, AnalyticError> {
    Ok(local_baseline_correlation(theta)?.abs())
}

/// `E(a,b) − E(a,b′) + E(a′,b) + E(a′,b′)`.
pub fn chsh_value<F>(correlation: F, settings: &ChshSettings) -> f64
where
    F: Fn(&SettingPair) -> f64,
{
    settings
        .pairs()
        .iter()
        .zip(CHSH_COEFFICIENTS)
        .map(|(pair, k)| k * correlation(pair))
        .sum()
}

/// Saw-tooth correlation evaluated on a setting pair.
pub fn local_baseline_correlation_for(s: &SettingPair) -> f64 {
    local_baseline_correlation(s.theta()).expect("angle_to is always in [0, pi]")
}
