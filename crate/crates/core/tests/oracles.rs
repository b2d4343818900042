//! Independent deterministic oracles (sphere quadrature, brute-force sums)
//! for the closed forms the estimators are checked against.

use std::f64::consts::PI;

use hvlab_core::analytic::{
    chsh_value, local_baseline_correlation, local_baseline_correlation_for,
    local_baseline_joint_probabilities, local_baseline_outcome_gap, singlet_correlation,
    ChshSettings,
};
use hvlab_core::geometry::{sgn, UnitVector3};

/// Midpoint rule on the (polar, azimuth) grid with the `sin θ` Jacobian,
/// normalized by 4π.
fn sphere_average<F: Fn(&UnitVector3) -> f64>(n_theta: usize, n_phi: usize, f: F) -> f64 {
    let d_theta = PI / n_theta as f64;
    let d_phi = 2.0 * PI / n_phi as f64;
    let mut acc = 0.0;
    for i in 0..n_theta {
        let theta = (i as f64 + 0.5) * d_theta;
        let w = theta.sin() * d_theta * d_phi;
        let mut ring = 0.0;
        for j in 0..n_phi {
            let phi = (j as f64 + 0.5) * d_phi;
            ring += f(&UnitVector3::from_spherical(theta, phi));
        }
        acc += w * ring;
    }
    acc / (4.0 * PI)
}

#[test]
fn sphere_component_moments() {
    let mean = sphere_average(400, 800, |u| u.z());
    let second = sphere_average(400, 800, |u| u.z() * u.z());
    let second_x = sphere_average(400, 800, |u| u.x() * u.x());
    assert!(mean.abs() < 1e-10, "{mean}");
    assert!((second - 1.0 / 3.0).abs() < 1e-5, "{second}");
    assert!((second_x - 1.0 / 3.0).abs() < 1e-5, "{second_x}");
}

#[test]
fn cap_fraction_by_quadrature() {
    for theta in [PI / 6.0, PI / 2.0, 5.0 * PI / 6.0] {
        let c = theta.cos();
        let frac = sphere_average(2000, 4, |u| if u.z() > c { 1.0 } else { 0.0 });
        assert!((frac - (1.0 - c) / 2.0).abs() < 2e-3, "theta {theta}: {frac}");
    }
}

#[test]
fn baseline_correlation_by_quadrature() {
    let a = UnitVector3::Z;
    for deg in [0.0, 30.0, 45.0, 90.0, 135.0, 180.0] {
        let theta = f64::to_radians(deg);
        // Tilt b out of the grid's symmetry planes.
        let b = UnitVector3::from_spherical(theta, 0.37);
        let e = sphere_average(1200, 2400, |l| {
            -(sgn(a.dot(l)).as_f64()) * sgn(b.dot(l)).as_f64()
        });
        let closed = local_baseline_correlation(theta).unwrap();
        assert!((e - closed).abs() < 3e-3, "θ = {deg}°: quadrature {e} vs {closed}");
    }
}

#[test]
fn baseline_joint_probabilities_and_conditional_gap_by_quadrature() {
    let a = UnitVector3::Z;
    for deg in [20.0, 60.0, 90.0, 150.0] {
        let theta = f64::to_radians(deg);
        let b = UnitVector3::from_spherical(theta, 1.1);
        let cell = |xs: f64, ys: f64| {
            sphere_average(1000, 2000, |l| {
                let x = sgn(a.dot(l)).as_f64();
                let y = -sgn(b.dot(l)).as_f64();
                if x == xs && y == ys {
                    1.0
                } else {
                    0.0
                }
            })
        };
        let (pp, pm, mp, mm) = (cell(1.0, 1.0), cell(1.0, -1.0), cell(-1.0, 1.0), cell(-1.0, -1.0));
        let closed = local_baseline_joint_probabilities(theta).unwrap();
        for (q, c) in [pp, pm, mp, mm].iter().zip(closed.cells()) {
            assert!((q - c).abs() < 3e-3, "θ = {deg}°: {q} vs {c}");
        }
        let gap = (pp / (pp + pm) - mp / (mp + mm)).abs();
        let closed_gap = local_baseline_outcome_gap(theta).unwrap();
        assert!((gap - closed_gap).abs() < 6e-3, "θ = {deg}°: gap {gap} vs {closed_gap}");
    }
    // At orthogonal settings the baseline shows no outcome dependence at all.
    assert_eq!(local_baseline_outcome_gap(PI / 2.0).unwrap(), 0.0);
}

#[test]
fn chsh_references_by_direct_summation() {
    // Differences for (a,b), (a,b'), (a',b), (a',b') at 0°, 90°, 45°, 135°.
    let diffs = [45f64, 135.0, 45.0, 45.0].map(f64::to_radians);
    let signs = [1.0, -1.0, 1.0, 1.0];
    let singlet: f64 = diffs.iter().zip(signs).map(|(d, k)| -k * d.cos()).sum();
    let saw: f64 = diffs
        .iter()
        .zip(signs)
        .map(|(d, k)| k * (-1.0 + 2.0 * d / PI))
        .sum();
    assert!((singlet.abs() - 2.0 * 2f64.sqrt()).abs() < 1e-12);
    assert!((saw.abs() - 2.0).abs() < 1e-12);
    let std = ChshSettings::standard();
    assert!((chsh_value(singlet_correlation, &std) - singlet).abs() < 1e-12);
    assert!((chsh_value(local_baseline_correlation_for, &std) - saw).abs() < 1e-12);
}
