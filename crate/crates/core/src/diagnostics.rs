//! Statistical audits of the two-party models: CHSH estimates, marginal
//! (no-signaling) audits, outcome-dependence audits and the per-trial
//! asymmetry probe.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::analytic::{ChshSettings, CHSH_COEFFICIENTS};
use crate::error::{DiagnosticsError, EstimatorError};
use crate::estimator::{
    correlation_estimate, derive_seed, marginal_estimates, run_model, z_score, EstimateWithError,
    Sampling, TrialModel,
};
use crate::geometry::{sample_unit_vector, SeededRng, Sign, UnitVector3};
use crate::models::{
    complete_outcomes, local_baseline_outcomes, HiddenPair, ModelSpec, OutcomeKind, OutcomePair,
    SettingPair,
};

/// Pass/fail threshold for audits.
pub const AUDIT_Z_THRESHOLD: f64 = 5.0;

/// Threshold for estimate-versus-closed-form comparisons.
pub const ESTIMATE_Z_THRESHOLD: f64 = 4.0;

/// Probability that the complete model's `y` changes when both settings are
/// redrawn with λ fixed (see [`asymmetry_probe`]). Pinned from an independent
/// 2·10⁸-probe run with Gaussian-normalized sphere samples.
pub const Y_FLIP_REFERENCE: f64 = 0.449_615;
/// Standard error of [`Y_FLIP_REFERENCE`].
pub const Y_FLIP_REFERENCE_SIGMA: f64 = 3.5e-5;

fn require_pairs<M: TrialModel + ?Sized>(model: &M, what: &'static str) -> Result<(), EstimatorError> {
    match model.outcome_kind() {
        OutcomeKind::Pair => Ok(()),
        OutcomeKind::ProductOnly => Err(EstimatorError::UnsupportedModel {
            model: model.name(),
            what,
            reason: "product-only model defines no marginals",
        }),
        OutcomeKind::Single => Err(EstimatorError::UnsupportedModel {
            model: model.name(),
            what,
            reason: "one party has no partner outcome",
        }),
    }
}

/// A CHSH estimate with its four correlation estimates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChshEstimate {
    pub value: f64,
    pub std_error: f64,
    /// In the order of [`ChshSettings::pairs`].
    pub correlations: [EstimateWithError; 4],
}

impl ChshEstimate {
    pub fn magnitude(&self) -> f64 {
        self.value.abs()
    }
}

/// Estimates the four correlations with seeds derived from `sampling.master_seed`
/// and combines them; errors add in quadrature.
pub fn chsh_scan<M: TrialModel + ?Sized>(
    model: &M,
    settings: &ChshSettings,
    sampling: &Sampling,
) -> Result<ChshEstimate, DiagnosticsError> {
    if model.outcome_kind() == OutcomeKind::Single {
        return Err(EstimatorError::UnsupportedModel {
            model: model.name(),
            what: "CHSH",
            reason: "one party has no partner outcome",
        }
        .into());
    }
    let pairs = settings.pairs();
    let mut correlations = Vec::with_capacity(4);
    for (i, pair) in pairs.iter().enumerate() {
        let run = sampling.with_seed(derive_seed(sampling.master_seed, i as u64));
        let counts = run_model(model, pair, &run)?;
        correlations.push(correlation_estimate(&counts)?);
    }
    let correlations: [EstimateWithError; 4] = correlations
        .try_into()
        .expect("exactly four setting pairs");
    let value = correlations
        .iter()
        .zip(CHSH_COEFFICIENTS)
        .map(|(e, k)| k * e.value)
        .sum();
    let std_error = correlations
        .iter()
        .map(|e| e.std_error * e.std_error)
        .sum::<f64>()
        .sqrt();
    Ok(ChshEstimate {
        value,
        std_error,
        correlations,
    })
}

/// Marginal `⟨X⟩` of party A across a grid of distant settings `b`.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalingAudit {
    pub a: UnitVector3,
    pub setting_grid: Vec<UnitVector3>,
    pub marginals: Vec<EstimateWithError>,
    pub max_pairwise_z: f64,
    pub threshold: f64,
}

impl SignalingAudit {
    pub fn passed(&self) -> bool {
        self.max_pairwise_z < self.threshold
    }
}

/// Estimates `⟨X⟩` at fixed `a` for every `b` in `b_grid` (fresh derived seed
/// per direction) and reports the largest pairwise z-score.
pub fn no_signaling_audit<M: TrialModel + ?Sized>(
    model: &M,
    a: &UnitVector3,
    b_grid: &[UnitVector3],
    sampling: &Sampling,
    threshold: f64,
) -> Result<SignalingAudit, DiagnosticsError> {
    require_pairs(model, "signaling audits")?;
    if b_grid.len() < 2 {
        return Err(DiagnosticsError::GridTooSmall);
    }
    let marginals = b_grid
        .iter()
        .enumerate()
        .map(|(i, b)| {
            let run = sampling.with_seed(derive_seed(sampling.master_seed, i as u64));
            let counts = run_model(model, &SettingPair::new(*a, *b), &run)?;
            Ok(marginal_estimates(&counts)?.0)
        })
        .collect::<Result<Vec<_>, DiagnosticsError>>()?;
    let mut max_pairwise_z: f64 = 0.0;
    for (i, m) in marginals.iter().enumerate() {
        for n in &marginals[i + 1..] {
            let sigma = (m.std_error * m.std_error + n.std_error * n.std_error).sqrt();
            max_pairwise_z = max_pairwise_z.max(z_score(m.value - n.value, sigma));
        }
    }
    Ok(SignalingAudit {
        a: *a,
        setting_grid: b_grid.to_vec(),
        marginals,
        max_pairwise_z,
        threshold,
    })
}

/// Conditional probabilities of `Y = +1` given each value of `X`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutcomeDependenceReport {
    pub cos_theta: f64,
    pub p_y_plus_given_x_plus: EstimateWithError,
    pub p_y_plus_given_x_minus: EstimateWithError,
    pub gap: f64,
    pub gap_std_error: f64,
}

impl OutcomeDependenceReport {
    pub fn gap_z_score(&self, reference: f64) -> f64 {
        z_score(self.gap - reference, self.gap_std_error)
    }
}

pub fn outcome_dependence_audit<M: TrialModel + ?Sized>(
    model: &M,
    s: &SettingPair,
    sampling: &Sampling,
) -> Result<OutcomeDependenceReport, DiagnosticsError> {
    require_pairs(model, "outcome-dependence audits")?;
    let counts = run_model(model, s, sampling)?;
    let c = counts.pair().expect("pair model yields pair counts");
    let seed = counts.master_seed;
    let conditional = |x: Sign| {
        let n_x = c.get(x, Sign::Plus) + c.get(x, Sign::Minus);
        if n_x == 0 {
            return Err(DiagnosticsError::InsufficientData(x));
        }
        Ok(EstimateWithError::proportion(c.get(x, Sign::Plus), n_x, seed)?)
    };
    let plus = conditional(Sign::Plus)?;
    let minus = conditional(Sign::Minus)?;
    Ok(OutcomeDependenceReport {
        cos_theta: s.cos_theta(),
        p_y_plus_given_x_plus: plus,
        p_y_plus_given_x_minus: minus,
        gap: (plus.value - minus.value).abs(),
        gap_std_error: (plus.std_error.powi(2) + minus.std_error.powi(2)).sqrt(),
    })
}

/// How often each party's outcome changes when only the distant setting changes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymmetryProbe {
    pub trials: u64,
    pub master_seed: u64,
    pub x_flips_under_b_change: u64,
    pub y_flips_under_a_change: u64,
}

impl AsymmetryProbe {
    pub fn x_flip_rate_under_b_change(&self) -> f64 {
        self.x_flips_under_b_change as f64 / self.trials as f64
    }

    pub fn y_flip_rate_under_a_change(&self) -> f64 {
        self.y_flips_under_a_change as f64 / self.trials as f64
    }

    pub fn y_flip_estimate(&self) -> EstimateWithError {
        EstimateWithError::proportion(self.y_flips_under_a_change, self.trials, self.master_seed)
            .expect("probe has at least one trial")
    }
}

/// Per probe: draws the hidden variables, then `a`, `b`, `a′`, `b′` uniformly,
/// and records whether `x` changes under `b → b′` and whether `y` changes under `a → a′`.
///
/// Supported for the complete model and the local baseline.
pub fn asymmetry_probe(
    model: &ModelSpec,
    sampling: &Sampling,
) -> Result<AsymmetryProbe, DiagnosticsError> {
    sampling.validate()?;
    let evaluate: fn(&mut SeededRng) -> (bool, bool) = match model {
        ModelSpec::Complete => |rng| {
            let h = HiddenPair::sample(rng);
            flips(rng, |s| complete_outcomes(&h, s))
        },
        ModelSpec::LocalBaseline => |rng| {
            let lambda = sample_unit_vector(rng);
            flips(rng, |s| local_baseline_outcomes(&lambda, s))
        },
        other => {
            return Err(EstimatorError::UnsupportedModel {
                model: other.name(),
                what: "asymmetry probes",
                reason: "probe needs both outcomes of every trial",
            }
            .into())
        }
    };
    let per_shard: Vec<(u64, u64)> = (0..sampling.shards)
        .into_par_iter()
        .map(|shard| {
            let (start, end) = sampling.shard_range(shard);
            let mut rng = SeededRng::new(sampling.master_seed, shard);
            let mut tally = (0u64, 0u64);
            for _ in start..end {
                let (x_flip, y_flip) = evaluate(&mut rng);
                tally.0 += u64::from(x_flip);
                tally.1 += u64::from(y_flip);
            }
            tally
        })
        .collect();
    let (x, y) = per_shard
        .iter()
        .fold((0, 0), |acc, t| (acc.0 + t.0, acc.1 + t.1));
    Ok(AsymmetryProbe {
        trials: sampling.trials,
        master_seed: sampling.master_seed,
        x_flips_under_b_change: x,
        y_flips_under_a_change: y,
    })
}

fn flips<F: Fn(&SettingPair) -> OutcomePair>(rng: &mut SeededRng, outcomes: F) -> (bool, bool) {
    let a = sample_unit_vector(rng);
    let b = sample_unit_vector(rng);
    let a_prime = sample_unit_vector(rng);
    let b_prime = sample_unit_vector(rng);
    let base = outcomes(&SettingPair::new(a, b));
    let moved_b = outcomes(&SettingPair::new(a, b_prime));
    let moved_a = outcomes(&SettingPair::new(a_prime, b));
    (base.x != moved_b.x, base.y != moved_a.y)
}

/// `n` nearly evenly spread directions (Fibonacci lattice).
pub fn fibonacci_directions(n: usize) -> Vec<UnitVector3> {
    let golden_angle = PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let z = 1.0 - (2.0 * i as f64 + 1.0) / n as f64;
            UnitVector3::from_spherical(z.acos(), golden_angle * i as f64)
        })
        .collect()
}
