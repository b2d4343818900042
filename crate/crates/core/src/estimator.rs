//! Monte Carlo engine: sharded, seeded trial runs, outcome tallies and
//! binomial standard errors.
//!
//! A run of `N` trials over `S` shards gives shard `s` the trials
//! `[s·⌈N/S⌉, min((s+1)·⌈N/S⌉, N))` and the stream `SeededRng(seed, s)`.
//! Counts depend only on `(model, settings, N, seed, S)`, never on how many
//! threads execute the shards.

use rayon::prelude::*;

use crate::analytic::JointProbabilities;
use crate::error::EstimatorError;
use crate::geometry::{sample_unit_vector, SeededRng, Sign};
use crate::models::{
    complete_outcomes, local_baseline_outcomes, single_spin_outcome, sufficient_condition_product,
    HiddenPair, ModelSpec, OutcomeKind, SettingPair, TrialOutcome,
};

/// Largest supported trial count.
pub const MAX_TRIALS: u64 = 1 << 62;

/// A trial whose outcomes broke `x·y = sgn(λ₁·λ₂ − a·b)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LawViolation;

/// Anything the engine can run: draws its hidden variables from `rng` and
/// evaluates one trial at `settings`.
pub trait TrialModel: Sync {
    fn name(&self) -> &'static str;

    fn outcome_kind(&self) -> OutcomeKind;

    fn trial(&self, rng: &mut SeededRng, settings: &SettingPair)
        -> Result<TrialOutcome, LawViolation>;
}

impl TrialModel for ModelSpec {
    fn name(&self) -> &'static str {
        ModelSpec::name(self)
    }

    fn outcome_kind(&self) -> OutcomeKind {
        ModelSpec::outcome_kind(self)
    }

    #[inline]
    fn trial(
        &self,
        rng: &mut SeededRng,
        settings: &SettingPair,
    ) -> Result<TrialOutcome, LawViolation> {
        match self {
            ModelSpec::SingleSpin { bloch } => {
                let lambda = sample_unit_vector(rng);
                Ok(TrialOutcome::Single(single_spin_outcome(
                    bloch,
                    &lambda,
                    &settings.a,
                )))
            }
            ModelSpec::SufficientCondition => {
                let h = HiddenPair::sample(rng);
                Ok(TrialOutcome::ProductOnly(sufficient_condition_product(
                    &h, settings,
                )))
            }
            ModelSpec::Complete => {
                let h = HiddenPair::sample(rng);
                let pair = complete_outcomes(&h, settings);
                if pair.product() != sufficient_condition_product(&h, settings).product() {
                    return Err(LawViolation);
                }
                Ok(TrialOutcome::Pair(pair))
            }
            ModelSpec::LocalBaseline => {
                let lambda = sample_unit_vector(rng);
                Ok(TrialOutcome::Pair(local_baseline_outcomes(&lambda, settings)))
            }
        }
    }
}

/// Trial count, seed and shard layout of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Sampling {
    pub trials: u64,
    pub master_seed: u64,
    pub shards: u64,
}

impl Sampling {
    pub fn new(trials: u64, master_seed: u64, shards: u64) -> Result<Self, EstimatorError> {
        let s = Self {
            trials,
            master_seed,
            shards,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<(), EstimatorError> {
        if self.trials == 0 {
            return Err(EstimatorError::NoTrials);
        }
        if self.trials > MAX_TRIALS {
            return Err(EstimatorError::TooManyTrials(self.trials));
        }
        if self.shards == 0 {
            return Err(EstimatorError::NoShards);
        }
        if self.shards > self.trials {
            return Err(EstimatorError::MoreShardsThanTrials {
                shards: self.shards,
                trials: self.trials,
            });
        }
        Ok(())
    }

    /// Same trials and shards, different seed.
    pub fn with_seed(&self, master_seed: u64) -> Self {
        Self {
            master_seed,
            ..*self
        }
    }

    /// Trial range `[start, end)` handled by `shard`.
    pub fn shard_range(&self, shard: u64) -> (u64, u64) {
        let chunk = self.trials.div_ceil(self.shards);
        let start = (shard * chunk).min(self.trials);
        let end = ((shard + 1) * chunk).min(self.trials);
        (start, end)
    }
}

/// A full run description.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunConfig {
    pub model: ModelSpec,
    /// For the single-spin model only `settings.a` is used.
    pub settings: SettingPair,
    pub sampling: Sampling,
}

/// Tally of `+1`/`−1` values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SignCounts {
    pub n_plus: u64,
    pub n_minus: u64,
}

impl SignCounts {
    pub fn total(&self) -> u64 {
        self.n_plus + self.n_minus
    }

    fn record(&mut self, s: Sign) {
        match s {
            Sign::Plus => self.n_plus += 1,
            Sign::Minus => self.n_minus += 1,
        }
    }

    fn merge(&mut self, other: &SignCounts) {
        self.n_plus += other.n_plus;
        self.n_minus += other.n_minus;
    }
}

/// Tally of the four `(X, Y)` cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PairCounts {
    pub n_pp: u64,
    pub n_pm: u64,
    pub n_mp: u64,
    pub n_mm: u64,
}

impl PairCounts {
    pub fn total(&self) -> u64 {
        self.n_pp + self.n_pm + self.n_mp + self.n_mm
    }

    pub fn cells(&self) -> [u64; 4] {
        [self.n_pp, self.n_pm, self.n_mp, self.n_mm]
    }

    pub fn get(&self, x: Sign, y: Sign) -> u64 {
        match (x, y) {
            (Sign::Plus, Sign::Plus) => self.n_pp,
            (Sign::Plus, Sign::Minus) => self.n_pm,
            (Sign::Minus, Sign::Plus) => self.n_mp,
            (Sign::Minus, Sign::Minus) => self.n_mm,
        }
    }

    /// The product tally `XY` implied by the four cells.
    pub fn products(&self) -> SignCounts {
        SignCounts {
            n_plus: self.n_pp + self.n_mm,
            n_minus: self.n_pm + self.n_mp,
        }
    }

    /// Pearson chi-square statistic against the cell probabilities `expected`.
    pub fn chi_square(&self, expected: &JointProbabilities) -> f64 {
        let n = self.total() as f64;
        self.cells()
            .iter()
            .zip(expected.cells())
            .map(|(&obs, p)| {
                let e = n * p;
                let d = obs as f64 - e;
                d * d / e
            })
            .sum()
    }

    fn record(&mut self, x: Sign, y: Sign) {
        match (x, y) {
            (Sign::Plus, Sign::Plus) => self.n_pp += 1,
            (Sign::Plus, Sign::Minus) => self.n_pm += 1,
            (Sign::Minus, Sign::Plus) => self.n_mp += 1,
            (Sign::Minus, Sign::Minus) => self.n_mm += 1,
        }
    }

    fn merge(&mut self, other: &PairCounts) {
        self.n_pp += other.n_pp;
        self.n_pm += other.n_pm;
        self.n_mp += other.n_mp;
        self.n_mm += other.n_mm;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tally {
    Single(SignCounts),
    ProductOnly(SignCounts),
    Pair(PairCounts),
}

impl Tally {
    pub fn empty(kind: OutcomeKind) -> Self {
        match kind {
            OutcomeKind::Single => Tally::Single(SignCounts::default()),
            OutcomeKind::ProductOnly => Tally::ProductOnly(SignCounts::default()),
            OutcomeKind::Pair => Tally::Pair(PairCounts::default()),
        }
    }

    pub fn total(&self) -> u64 {
        match self {
            Tally::Single(c) | Tally::ProductOnly(c) => c.total(),
            Tally::Pair(c) => c.total(),
        }
    }

    /// Returns `false` when the outcome does not fit this tally.
    fn record(&mut self, outcome: TrialOutcome) -> bool {
        match (self, outcome) {
            (Tally::Single(c), TrialOutcome::Single(x)) => c.record(x),
            (Tally::ProductOnly(c), TrialOutcome::ProductOnly(p)) => c.record(p.product()),
            (Tally::Pair(c), TrialOutcome::Pair(p)) => c.record(p.x, p.y),
            _ => return false,
        }
        true
    }
}

/// Outcome tallies of one run, tagged with the seed that produced them.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct JointCounts {
    pub master_seed: u64,
    pub tally: Tally,
}

impl JointCounts {
    pub fn empty(kind: OutcomeKind, master_seed: u64) -> Self {
        Self {
            master_seed,
            tally: Tally::empty(kind),
        }
    }

    pub fn total(&self) -> u64 {
        self.tally.total()
    }

    pub fn pair(&self) -> Option<&PairCounts> {
        match &self.tally {
            Tally::Pair(c) => Some(c),
            _ => None,
        }
    }

    /// Adds `other` into `self`. Tallies must share kind and seed.
    pub fn merge(&mut self, other: &JointCounts) -> Result<(), EstimatorError> {
        if self.master_seed != other.master_seed {
            return Err(EstimatorError::IncompatibleCounts);
        }
        match (&mut self.tally, &other.tally) {
            (Tally::Single(a), Tally::Single(b)) | (Tally::ProductOnly(a), Tally::ProductOnly(b)) => {
                a.merge(b)
            }
            (Tally::Pair(a), Tally::Pair(b)) => a.merge(b),
            _ => return Err(EstimatorError::IncompatibleCounts),
        }
        Ok(())
    }
}

/// A point estimate with its standard error and provenance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateWithError {
    pub value: f64,
    pub std_error: f64,
    pub n: u64,
    pub master_seed: u64,
}

impl EstimateWithError {
    /// Mean of a ±1 observable: `(plus − minus)/n` with error `√((1 − E²)/n)`.
    pub fn sign_mean(plus: u64, minus: u64, master_seed: u64) -> Result<Self, EstimatorError> {
        let n = plus + minus;
        if n == 0 {
            return Err(EstimatorError::EmptyRun);
        }
        let value = (plus as f64 - minus as f64) / n as f64;
        let var = (1.0 - value * value).max(0.0);
        Ok(Self {
            value,
            std_error: (var / n as f64).sqrt(),
            n,
            master_seed,
        })
    }

    /// A binomial proportion `hits/n` with error `√(p(1 − p)/n)`.
    pub fn proportion(hits: u64, n: u64, master_seed: u64) -> Result<Self, EstimatorError> {
        if n == 0 {
            return Err(EstimatorError::EmptyRun);
        }
        let p = hits as f64 / n as f64;
        Ok(Self {
            value: p,
            std_error: (p * (1.0 - p) / n as f64).max(0.0).sqrt(),
            n,
            master_seed,
        })
    }

    /// `|value − reference| / std_error`; zero error gives 0 on an exact match and ∞ otherwise.
    pub fn z_score(&self, reference: f64) -> f64 {
        z_score(self.value - reference, self.std_error)
    }
}

/// `|delta| / sigma` with the zero-sigma convention of [`EstimateWithError::z_score`].
pub fn z_score(delta: f64, sigma: f64) -> f64 {
    if sigma > 0.0 {
        delta.abs() / sigma
    } else if delta == 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

/// Mixes `index` into `master_seed` (SplitMix64 finalizer) to give independent sub-run seeds.
pub fn derive_seed(master_seed: u64, index: u64) -> u64 {
    let mut z = master_seed
        .wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn run_shard<M: TrialModel + ?Sized>(
    model: &M,
    settings: &SettingPair,
    sampling: &Sampling,
    shard: u64,
) -> Result<JointCounts, EstimatorError> {
    let (start, end) = sampling.shard_range(shard);
    let mut rng = SeededRng::new(sampling.master_seed, shard);
    let mut counts = JointCounts::empty(model.outcome_kind(), sampling.master_seed);
    for trial in start..end {
        let outcome = model
            .trial(&mut rng, settings)
            .map_err(|_| EstimatorError::ProductLawViolation { shard, trial })?;
        if !counts.tally.record(outcome) {
            return Err(EstimatorError::UnsupportedModel {
                model: model.name(),
                what: "tallying",
                reason: "trial outcome does not match the declared outcome kind",
            });
        }
    }
    Ok(counts)
}

/// Runs any [`TrialModel`] at fixed settings.
pub fn run_model<M: TrialModel + ?Sized>(
    model: &M,
    settings: &SettingPair,
    sampling: &Sampling,
) -> Result<JointCounts, EstimatorError> {
    sampling.validate()?;
    let shards: Vec<JointCounts> = (0..sampling.shards)
        .into_par_iter()
        .map(|s| run_shard(model, settings, sampling, s))
        .collect::<Result<_, _>>()?;
    let mut total = JointCounts::empty(model.outcome_kind(), sampling.master_seed);
    for c in &shards {
        total.merge(c)?;
    }
    Ok(total)
}

pub fn run_trials(cfg: &RunConfig) -> Result<JointCounts, EstimatorError> {
    run_model(&cfg.model, &cfg.settings, &cfg.sampling)
}

/// `⟨XY⟩` from pair or product-only counts.
pub fn correlation_estimate(counts: &JointCounts) -> Result<EstimateWithError, EstimatorError> {
    let products = match &counts.tally {
        Tally::Pair(c) => c.products(),
        Tally::ProductOnly(c) => *c,
        Tally::Single(_) => {
            return Err(EstimatorError::UnsupportedModel {
                model: "single_spin",
                what: "correlations",
                reason: "one party has no partner outcome",
            })
        }
    };
    EstimateWithError::sign_mean(products.n_plus, products.n_minus, counts.master_seed)
}

/// `(⟨X⟩, ⟨Y⟩)` from pair counts.
pub fn marginal_estimates(
    counts: &JointCounts,
) -> Result<(EstimateWithError, EstimateWithError), EstimatorError> {
    let c = pair_counts(counts, "marginals")?;
    let seed = counts.master_seed;
    let x = EstimateWithError::sign_mean(c.n_pp + c.n_pm, c.n_mp + c.n_mm, seed)?;
    let y = EstimateWithError::sign_mean(c.n_pp + c.n_mp, c.n_pm + c.n_mm, seed)?;
    Ok((x, y))
}

/// Empirical frequencies of `(+,+)`, `(+,−)`, `(−,+)`, `(−,−)`.
pub fn joint_probability_estimates(
    counts: &JointCounts,
) -> Result<[EstimateWithError; 4], EstimatorError> {
    let c = pair_counts(counts, "joint probabilities")?;
    let n = c.total();
    let seed = counts.master_seed;
    let mut out = [EstimateWithError::proportion(0, 1, seed)?; 4];
    for (slot, hits) in out.iter_mut().zip(c.cells()) {
        *slot = EstimateWithError::proportion(hits, n, seed)?;
    }
    Ok(out)
}

/// `⟨X⟩` of the single-spin model.
pub fn spin_expectation_estimate(counts: &JointCounts) -> Result<EstimateWithError, EstimatorError> {
    match &counts.tally {
        Tally::Single(c) => EstimateWithError::sign_mean(c.n_plus, c.n_minus, counts.master_seed),
        _ => Err(EstimatorError::UnsupportedModel {
            model: "two-party",
            what: "single-spin expectations",
            reason: "use correlation or marginal estimates",
        }),
    }
}

fn pair_counts<'a>(
    counts: &'a JointCounts,
    what: &'static str,
) -> Result<&'a PairCounts, EstimatorError> {
    match &counts.tally {
        Tally::Pair(c) if c.total() == 0 => Err(EstimatorError::EmptyRun),
        Tally::Pair(c) => Ok(c),
        Tally::ProductOnly(_) => Err(EstimatorError::UnsupportedModel {
            model: "sufficient_condition",
            what,
            reason: "product-only model defines no marginals",
        }),
        Tally::Single(_) => Err(EstimatorError::UnsupportedModel {
            model: "single_spin",
            what,
            reason: "one party has no partner outcome",
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::UnitVector3;

    fn pair(n_pp: u64, n_pm: u64, n_mp: u64, n_mm: u64) -> JointCounts {
        JointCounts {
            master_seed: 0,
            tally: Tally::Pair(PairCounts {
                n_pp,
                n_pm,
                n_mp,
                n_mm,
            }),
        }
    }

    #[test]
    fn correlation_examples() {
        let e = correlation_estimate(&pair(0, 500, 500, 0)).unwrap();
        assert_eq!((e.value, e.std_error, e.n), (-1.0, 0.0, 1000));
        let e = correlation_estimate(&pair(250, 250, 250, 250)).unwrap();
        assert_eq!(e.value, 0.0);
        assert!((e.std_error - 1.0 / 1000f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn empty_counts_are_an_error() {
        assert_eq!(
            correlation_estimate(&pair(0, 0, 0, 0)),
            Err(EstimatorError::EmptyRun)
        );
        assert_eq!(marginal_estimates(&pair(0, 0, 0, 0)), Err(EstimatorError::EmptyRun));
    }

    #[test]
    fn marginal_examples() {
        let (x, y) = marginal_estimates(&pair(500, 0, 0, 500)).unwrap();
        assert_eq!((x.value, y.value), (0.0, 0.0));
        let (x, y) = marginal_estimates(&pair(3, 1, 0, 0)).unwrap();
        assert_eq!((x.value, y.value), (1.0, 0.5));
    }

    #[test]
    fn product_only_counts_have_no_marginals() {
        let counts = JointCounts {
            master_seed: 0,
            tally: Tally::ProductOnly(SignCounts {
                n_plus: 10,
                n_minus: 5,
            }),
        };
        let err = marginal_estimates(&counts).unwrap_err();
        assert!(err.to_string().contains("defines no marginals"), "{err}");
        assert!(joint_probability_estimates(&counts).is_err());
        assert!(correlation_estimate(&counts).is_ok());
    }

    #[test]
    fn sampling_validation() {
        assert_eq!(Sampling::new(0, 0, 1), Err(EstimatorError::NoTrials));
        assert_eq!(Sampling::new(10, 0, 0), Err(EstimatorError::NoShards));
        assert!(matches!(
            Sampling::new(3, 0, 4),
            Err(EstimatorError::MoreShardsThanTrials { .. })
        ));
        assert!(matches!(
            Sampling::new(MAX_TRIALS + 1, 0, 1),
            Err(EstimatorError::TooManyTrials(_))
        ));
        assert!(Sampling::new(MAX_TRIALS, 0, 1).is_ok());
    }

    #[test]
    fn shard_ranges_cover_every_trial_once() {
        for (n, s) in [(10, 3), (5, 4), (16, 16), (1_000_001, 16), (7, 1)] {
            let sampling = Sampling::new(n, 0, s).unwrap();
            let mut next = 0;
            for shard in 0..s {
                let (start, end) = sampling.shard_range(shard);
                assert_eq!(start, next.min(n));
                assert!(end >= start);
                next = end;
            }
            assert_eq!(next, n);
        }
    }

    #[test]
    fn merge_rejects_mismatched_tallies() {
        let mut a = pair(1, 0, 0, 0);
        let b = JointCounts::empty(OutcomeKind::ProductOnly, 0);
        assert_eq!(a.merge(&b), Err(EstimatorError::IncompatibleCounts));
        let c = JointCounts {
            master_seed: 9,
            ..pair(1, 0, 0, 0)
        };
        assert_eq!(a.merge(&c), Err(EstimatorError::IncompatibleCounts));
    }

    #[test]
    fn z_score_conventions() {
        let e = EstimateWithError::sign_mean(0, 10, 0).unwrap();
        assert_eq!(e.z_score(-1.0), 0.0);
        assert_eq!(e.z_score(-0.5), f64::INFINITY);
        let e = EstimateWithError::sign_mean(60, 40, 0).unwrap();
        assert!((e.z_score(0.0) - 0.2 / (0.96f64 / 100.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn derived_seeds_differ() {
        let seeds: std::collections::HashSet<u64> = (0..1000).map(|i| derive_seed(42, i)).collect();
        assert_eq!(seeds.len(), 1000);
        assert_ne!(derive_seed(0, 0), derive_seed(1, 0));
    }

    #[test]
    fn complete_model_at_equal_settings_never_agrees() {
        let cfg = RunConfig {
            model: ModelSpec::Complete,
            settings: SettingPair::new(UnitVector3::Z, UnitVector3::Z),
            sampling: Sampling::new(100_000, 3, 4).unwrap(),
        };
        let c = *run_trials(&cfg).unwrap().pair().unwrap();
        assert_eq!(c.n_pp + c.n_mm, 0);
        assert_eq!(c.total(), 100_000);
    }

    struct Broken;

    impl TrialModel for Broken {
        fn name(&self) -> &'static str {
            "broken"
        }

        fn outcome_kind(&self) -> OutcomeKind {
            OutcomeKind::Pair
        }

        fn trial(&self, rng: &mut SeededRng, _: &SettingPair) -> Result<TrialOutcome, LawViolation> {
            if rng.uniform() < 1e-3 {
                Err(LawViolation)
            } else {
                Ok(TrialOutcome::Pair(crate::models::OutcomePair {
                    x: Sign::Plus,
                    y: Sign::Plus,
                }))
            }
        }
    }

    #[test]
    fn a_single_law_violation_aborts_the_run() {
        let sampling = Sampling::new(100_000, 0, 4).unwrap();
        let err = run_model(&Broken, &SettingPair::planar(0.0), &sampling).unwrap_err();
        assert!(matches!(err, EstimatorError::ProductLawViolation { .. }));
    }

    mod props {
        use super::super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(32))]

            #[test]
            fn merge_order_does_not_matter(
                parts in proptest::collection::vec((0u64..1000, 0u64..1000, 0u64..1000, 0u64..1000), 1..8),
                rotate in 0usize..8,
            ) {
                let counts: Vec<JointCounts> = parts.iter().map(|&(a, b, c, d)| JointCounts {
                    master_seed: 1,
                    tally: Tally::Pair(PairCounts { n_pp: a, n_pm: b, n_mp: c, n_mm: d }),
                }).collect();
                let fold = |order: &[JointCounts]| {
                    let mut acc = JointCounts::empty(OutcomeKind::Pair, 1);
                    for c in order { acc.merge(c).unwrap(); }
                    acc
                };
                let mut rotated = counts.clone();
                rotated.rotate_left(rotate % counts.len());
                let mut reversed = counts.clone();
                reversed.reverse();
                prop_assert_eq!(fold(&counts), fold(&rotated));
                prop_assert_eq!(fold(&counts), fold(&reversed));
            }

            #[test]
            fn sign_mean_error_formula(plus in 0u64..10_000, minus in 0u64..10_000) {
                prop_assume!(plus + minus > 0);
                let e = EstimateWithError::sign_mean(plus, minus, 0).unwrap();
                let expected = ((1.0 - e.value * e.value).max(0.0) / e.n as f64).sqrt();
                prop_assert!((e.std_error - expected).abs() <= 1e-15);
                prop_assert!(e.std_error >= 0.0);
            }
        }
    }
}
