use anyhow::{bail, ensure, Context, Result};
use hvlab_core::analytic::{
    chsh_value, local_baseline_correlation_for, local_baseline_joint_probabilities,
    local_baseline_outcome_gap, single_spin_expectation, singlet_conditional, singlet_correlation,
    singlet_joint_probabilities, ChshSettings, JointProbabilities,
};
use hvlab_core::diagnostics::{
    asymmetry_probe, chsh_scan, fibonacci_directions, no_signaling_audit,
    outcome_dependence_audit,
};
use hvlab_core::estimator::{
    correlation_estimate, derive_seed, joint_probability_estimates, run_trials,
    spin_expectation_estimate, EstimateWithError, RunConfig, Sampling,
};
use hvlab_core::models::OutcomeKind;
use hvlab_core::{ModelSpec, SettingPair, Sign, UnitVector3};

use crate::output::OutputRecord;
use crate::{AuditKind, Resolved};

/// Number of distant settings probed by the signaling audit.
const SIGNALING_GRID: usize = 16;

const CELL_NAMES: [&str; 4] = ["p_pp", "p_pm", "p_mp", "p_mm"];
const CHSH_TERMS: [&str; 4] = ["E(a,b)", "E(a,b')", "E(a',b)", "E(a',b')"];

pub struct CommandOutput {
    pub records: Vec<OutputRecord>,
    /// `Some` when the command ran an audit.
    pub audit_passed: Option<bool>,
}

impl CommandOutput {
    fn plain(records: Vec<OutputRecord>) -> Self {
        Self {
            records,
            audit_passed: None,
        }
    }
}

fn sampling(r: &Resolved) -> Result<Sampling> {
    Ok(Sampling::new(r.trials, r.seed, r.shards)?)
}

fn check_theta(theta_deg: f64) -> Result<f64> {
    ensure!(
        (0.0..=180.0).contains(&theta_deg),
        "theta {theta_deg} outside [0, 180] degrees"
    );
    Ok(theta_deg.to_radians())
}

fn name(r: &Resolved) -> &'static str {
    r.model.name()
}

/// Closed-form `⟨XY⟩` of the model, if it has one.
fn reference_correlation(model: &ModelSpec, s: &SettingPair) -> Option<f64> {
    match model {
        ModelSpec::Complete | ModelSpec::SufficientCondition => Some(singlet_correlation(s)),
        ModelSpec::LocalBaseline => Some(local_baseline_correlation_for(s)),
        ModelSpec::SingleSpin { .. } => None,
    }
}

fn reference_joint(model: &ModelSpec, s: &SettingPair) -> Result<JointProbabilities> {
    Ok(match model {
        ModelSpec::LocalBaseline => local_baseline_joint_probabilities(s.theta())?,
        _ => singlet_joint_probabilities(s.cos_theta())?,
    })
}

fn no_pairs_reason(model: &ModelSpec) -> &'static str {
    match model.outcome_kind() {
        OutcomeKind::ProductOnly => "product-only model defines no marginals",
        _ => "one party has no partner outcome",
    }
}

/// Parses `start:stop:step` (inclusive) or `a,b,c`.
pub fn parse_theta_grid(spec: &str) -> Result<Vec<f64>> {
    let grid: Vec<f64> = if let Some((start, rest)) = spec.split_once(':') {
        let (stop, step) = rest
            .split_once(':')
            .context("range grid must be start:stop:step")?;
        let start: f64 = start.trim().parse().context("bad grid start")?;
        let stop: f64 = stop.trim().parse().context("bad grid stop")?;
        let step: f64 = step.trim().parse().context("bad grid step")?;
        ensure!(step > 0.0 && step.is_finite(), "grid step must be positive");
        ensure!(stop >= start, "grid stop below start");
        let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
        (0..count).map(|i| start + i as f64 * step).collect()
    } else {
        spec.split(',')
            .map(|t| t.trim().parse::<f64>().with_context(|| format!("bad angle {t:?}")))
            .collect::<Result<_>>()?
    };
    ensure!(!grid.is_empty(), "empty theta grid");
    for &t in &grid {
        check_theta(t)?;
    }
    Ok(grid)
}

fn single_spin_record(r: &Resolved, command: &str, theta_deg: f64) -> Result<OutputRecord> {
    let a = UnitVector3::planar(check_theta(theta_deg)?);
    let counts = run_trials(&RunConfig {
        model: r.model,
        settings: SettingPair::new(a, a),
        sampling: sampling(r)?,
    })?;
    let e = spin_expectation_estimate(&counts)?;
    Ok(OutputRecord::new(command, name(r), "mean_x", e.value, e.n, e.master_seed)
        .theta(theta_deg)
        .std_error(e.std_error)
        .analytic(single_spin_expectation(&r.bloch, &a)?))
}

pub fn correlate(r: &Resolved, theta_deg: f64) -> Result<CommandOutput> {
    if r.model.outcome_kind() == OutcomeKind::Single {
        return Ok(CommandOutput::plain(vec![single_spin_record(
            r,
            "correlate",
            theta_deg,
        )?]));
    }
    let settings = SettingPair::planar(check_theta(theta_deg)?);
    let counts = run_trials(&RunConfig {
        model: r.model,
        settings,
        sampling: sampling(r)?,
    })?;
    let e = correlation_estimate(&counts)?;
    let mut rec = OutputRecord::new("correlate", name(r), "correlation", e.value, e.n, e.master_seed)
        .theta(theta_deg)
        .std_error(e.std_error);
    if let Some(reference) = reference_correlation(&r.model, &settings) {
        rec = rec.analytic(reference);
    }
    Ok(CommandOutput::plain(vec![rec]))
}

/// Every angle reuses the master seed, so `correlate --theta t` with the same
/// flags reproduces the sweep's correlation record at `t`.
pub fn sweep(r: &Resolved, grid: &[f64], with_correlation: bool) -> Result<CommandOutput> {
    let command = if with_correlation { "sweep" } else { "joint-probs" };
    let kind = r.model.outcome_kind();
    if !with_correlation && kind != OutcomeKind::Pair {
        bail!(
            "{} model has no joint probabilities: {}",
            name(r),
            no_pairs_reason(&r.model)
        );
    }
    let mut records = Vec::new();
    for &theta_deg in grid {
        if kind == OutcomeKind::Single {
            records.push(single_spin_record(r, command, theta_deg)?);
            continue;
        }
        let settings = SettingPair::planar(check_theta(theta_deg)?);
        let counts = run_trials(&RunConfig {
            model: r.model,
            settings,
            sampling: sampling(r)?,
        })?;
        if with_correlation {
            let e = correlation_estimate(&counts)?;
            let mut rec = OutputRecord::new(command, name(r), "correlation", e.value, e.n, e.master_seed)
                .theta(theta_deg)
                .std_error(e.std_error);
            if let Some(reference) = reference_correlation(&r.model, &settings) {
                rec = rec.analytic(reference);
            }
            records.push(rec);
        }
        if kind == OutcomeKind::Pair {
            let reference = reference_joint(&r.model, &settings)?;
            let estimates = joint_probability_estimates(&counts)?;
            for ((cell, e), p) in CELL_NAMES.iter().zip(estimates).zip(reference.cells()) {
                records.push(
                    OutputRecord::new(command, name(r), *cell, e.value, e.n, e.master_seed)
                        .theta(theta_deg)
                        .std_error(e.std_error)
                        .analytic(p),
                );
            }
        }
    }
    Ok(CommandOutput::plain(records))
}

pub fn chsh(r: &Resolved, angles_deg: [f64; 4]) -> Result<CommandOutput> {
    ensure!(
        angles_deg.iter().all(|a| a.is_finite()),
        "CHSH angles must be finite"
    );
    let settings = ChshSettings::planar_degrees(angles_deg);
    let est = chsh_scan(&r.model, &settings, &sampling(r)?)?;
    let mut records = Vec::with_capacity(5);
    for (i, ((term, pair), e)) in CHSH_TERMS
        .iter()
        .zip(settings.pairs())
        .zip(est.correlations)
        .enumerate()
    {
        debug_assert_eq!(e.master_seed, derive_seed(r.seed, i as u64));
        let mut rec = OutputRecord::new("chsh", name(r), *term, e.value, e.n, e.master_seed)
            .theta(pair.theta().to_degrees())
            .std_error(e.std_error);
        if let Some(reference) = reference_correlation(&r.model, &pair) {
            rec = rec.analytic(reference);
        }
        records.push(rec);
    }
    let mut total = OutputRecord::new("chsh", name(r), "chsh", est.value, r.trials, r.seed)
        .std_error(est.std_error);
    if reference_correlation(&r.model, &settings.pairs()[0]).is_some() {
        let reference = chsh_value(|s| reference_correlation(&r.model, s).unwrap_or(f64::NAN), &settings);
        total = total.analytic(reference);
    }
    records.push(total);
    Ok(CommandOutput::plain(records))
}

pub fn audit(r: &Resolved, kind: AuditKind, theta_deg: f64, z_threshold: f64) -> Result<CommandOutput> {
    ensure!(z_threshold > 0.0, "--z-threshold must be positive");
    let sampling = sampling(r)?;
    let model = name(r);
    let verdict = |passed: bool| OutputRecord::new("audit", model, "verdict", f64::from(u8::from(passed)), r.trials, r.seed);
    let threshold = OutputRecord::new("audit", model, "z_threshold", z_threshold, r.trials, r.seed);
    let (mut records, passed) = match kind {
        AuditKind::Signaling => {
            let a = UnitVector3::Z;
            let grid = fibonacci_directions(SIGNALING_GRID);
            let report = no_signaling_audit(&r.model, &a, &grid, &sampling, z_threshold)?;
            let mut records: Vec<OutputRecord> = report
                .setting_grid
                .iter()
                .zip(&report.marginals)
                .enumerate()
                .map(|(i, (b, e))| {
                    OutputRecord::new("audit", model, format!("marginal_x[{i}]"), e.value, e.n, e.master_seed)
                        .theta(a.angle_to(b).to_degrees())
                        .std_error(e.std_error)
                        .analytic(0.0)
                })
                .collect();
            records.push(OutputRecord::new(
                "audit",
                model,
                "max_pairwise_z",
                report.max_pairwise_z,
                r.trials,
                r.seed,
            ));
            (records, report.passed())
        }
        AuditKind::OutcomeDependence => {
            let settings = SettingPair::planar(check_theta(theta_deg)?);
            let report = outcome_dependence_audit(&r.model, &settings, &sampling)?;
            let (plus_ref, minus_ref, gap_ref) = match r.model {
                ModelSpec::LocalBaseline => {
                    let p = local_baseline_joint_probabilities(settings.theta())?;
                    (
                        p.pp / (p.pp + p.pm),
                        p.mp / (p.mp + p.mm),
                        local_baseline_outcome_gap(settings.theta())?,
                    )
                }
                _ => {
                    let c = settings.cos_theta();
                    (
                        singlet_conditional(Sign::Plus, Sign::Plus, c),
                        singlet_conditional(Sign::Plus, Sign::Minus, c),
                        c.abs(),
                    )
                }
            };
            let cond = |q: &str, e: EstimateWithError, reference: f64| {
                OutputRecord::new("audit", model, q, e.value, e.n, e.master_seed)
                    .theta(theta_deg)
                    .std_error(e.std_error)
                    .analytic(reference)
            };
            let gap = OutputRecord::new("audit", model, "gap", report.gap, r.trials, r.seed)
                .theta(theta_deg)
                .std_error(report.gap_std_error)
                .analytic(gap_ref);
            let passed = report.gap_z_score(gap_ref) < z_threshold;
            (
                vec![
                    cond("p_y_plus_given_x_plus", report.p_y_plus_given_x_plus, plus_ref),
                    cond("p_y_plus_given_x_minus", report.p_y_plus_given_x_minus, minus_ref),
                    gap,
                ],
                passed,
            )
        }
        AuditKind::Asymmetry => {
            let probe = asymmetry_probe(&r.model, &sampling)?;
            let x = EstimateWithError::proportion(probe.x_flips_under_b_change, probe.trials, probe.master_seed)?;
            let y = probe.y_flip_estimate();
            let records = vec![
                OutputRecord::new("audit", model, "x_flip_rate_under_b_change", x.value, x.n, x.master_seed)
                    .std_error(x.std_error)
                    .analytic(0.0),
                OutputRecord::new("audit", model, "y_flip_rate_under_a_change", y.value, y.n, y.master_seed)
                    .std_error(y.std_error),
            ];
            (records, probe.x_flips_under_b_change == 0)
        }
    };
    records.push(threshold);
    records.push(verdict(passed));
    Ok(CommandOutput {
        records,
        audit_passed: Some(passed),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn range_grid_is_inclusive() {
        let g = parse_theta_grid("0:180:15").unwrap();
        assert_eq!(g.len(), 13);
        assert_eq!(g[12], 180.0);
        assert_eq!(parse_theta_grid("0:90:45").unwrap(), vec![0.0, 45.0, 90.0]);
    }

    #[test]
    fn list_grid() {
        assert_eq!(parse_theta_grid("10, 20,90").unwrap(), vec![10.0, 20.0, 90.0]);
    }

    #[test]
    fn bad_grids() {
        assert!(parse_theta_grid("0:200:10").is_err());
        assert!(parse_theta_grid("0:90").is_err());
        assert!(parse_theta_grid("0:90:0").is_err());
        assert!(parse_theta_grid("-5").is_err());
        assert!(parse_theta_grid("abc").is_err());
    }
}
