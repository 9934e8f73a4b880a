use super::*;
use crate::scene::{build_scene, GraphFunction, SceneSpec};
use proptest::prelude::*;

fn plane(n: usize, rho: f64, height: f64) -> ClosedSetSample {
    build_scene(&SceneSpec::Plane {
        n,
        rho,
        slope: None,
        height,
    })
    .unwrap()
}

fn bump(n: usize, rho: f64, amplitude: f64, width: f64) -> ClosedSetSample {
    build_scene(&SceneSpec::GraphOfFunction {
        n,
        rho,
        function: GraphFunction::Bump {
            amplitude,
            width,
            level: -amplitude,
        },
        h: None,
    })
    .unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs())
}

#[test]
fn phi_is_continuous_at_both_seams() {
    for gamma_b in [1.5, 7.0, 42.2] {
        let inner = barrier_phi(gamma_b, 1.0 / 16.0);
        let just_out = barrier_phi(gamma_b, 1.0 / 16.0 + 1e-15);
        assert!(rel(inner, just_out) < 1e-12, "{gamma_b}: {inner} vs {just_out}");
        assert_eq!(barrier_phi(gamma_b, 1.0 / 16.0), -(16f64.powf(gamma_b) - 1.0) / gamma_b);
        assert!(barrier_phi(gamma_b, 1.0 - 1e-15).abs() < 1e-12);
        assert_eq!(barrier_phi(gamma_b, 1.0), 0.0);
        assert_eq!(barrier_phi(gamma_b, 3.0), 0.0);
    }
}

proptest! {
    #[test]
    fn phi_is_nondecreasing(gamma_b in 1.1f64..60.0, s in 0.0f64..1.2, t in 0.0f64..1.2) {
        let (lo, hi) = if s <= t { (s, t) } else { (t, s) };
        prop_assert!(barrier_phi(gamma_b, lo) <= barrier_phi(gamma_b, hi));
    }
}

#[test]
fn calibrated_exponent_is_the_first_passing_grid_point() {
    for (n, safety) in [(1, 2.0), (2, 2.0), (2, 10.0), (3, 4.0)] {
        let cal = calibrate_gamma(n, safety).unwrap();
        let required = -(1.0 + 1.0 / safety);
        assert!(cal.worst <= required && cal.margin >= 0.0);
        // The binding point is the outer edge t = 1.
        assert!((cal.binding_t - 1.0).abs() < 1e-12, "{}", cal.binding_t);
        assert!(cal.gamma_b >= 16.0 * n as f64 + 6.0 + 8.0 / safety);
        let prev = cal.gamma_b / 2f64.powf(1.0 / 16.0);
        assert!(scan_expression(n, prev).0 > required);
    }
    assert!(calibrate_gamma(0, 2.0).is_err());
    assert!(calibrate_gamma(2, 1.0).is_err());
}

#[test]
fn theta_is_the_next_power_of_two() {
    for gamma_b in [2.0, 26.9, 42.2] {
        let theta = calibrate_theta(gamma_b);
        let bound = 1024.0 * (16f64.powf(gamma_b) - 1.0) / gamma_b;
        assert!(theta > bound && theta / 2.0 <= bound);
        assert_eq!(theta.log2().fract(), 0.0);
    }
}

#[test]
fn trace_of_a_round_quadratic() {
    for n in 1..=3 {
        let a = 0.7;
        let shape = vec![5; n];
        let origin = vec![-0.2; n];
        let grid = GridFunction::sample(origin, 0.1, shape, |x| 0.5 * a * geom::dot(x, x));
        let mid = vec![2; n];
        let q = graph_trace_q(&grid, &mid, NormalPairing::Lifted).unwrap();
        assert!((q - n as f64 * a).abs() < 1e-9, "{q}");
        assert!(graph_trace_q(&grid, &vec![0; n], NormalPairing::Lifted).is_err());
    }
}

#[test]
fn trace_of_a_tilted_quadratic_matches_closed_form() {
    // ψ = x₁ + x₂²/2 at the origin: ∇ψ = (1, 0), D²ψ = diag(0, 1).
    let grid = GridFunction::sample(vec![-0.1, -0.1], 0.1, vec![3, 3], |x| x[0] + 0.5 * x[1] * x[1]);
    let lifted = graph_trace_q(&grid, &[1, 1], NormalPairing::Lifted).unwrap();
    let unit = graph_trace_q(&grid, &[1, 1], NormalPairing::Unit).unwrap();
    assert!((lifted - 1.0).abs() < 1e-9);
    assert!((unit - 1.0 / 2f64.sqrt()).abs() < 1e-9);
}

#[test]
fn grid_layout_is_row_major() {
    let grid = GridFunction::sample(vec![0.0, 0.0], 1.0, vec![2, 3], |x| 10.0 * x[0] + x[1]);
    assert_eq!(grid.values, vec![0.0, 1.0, 2.0, 10.0, 11.0, 12.0]);
    assert_eq!(grid.unflatten(4), vec![1, 1]);
}

fn spec(n: usize, gamma_b: f64, a: f64, r: f64) -> BarrierSpec {
    BarrierSpec {
        gamma_b,
        opening: a,
        anchor: vec![0.3; n],
        anchor_offset: 0.0,
        center: vec![0.0; n],
        radius: r,
        shift: 0.0,
        theta: calibrate_theta(gamma_b),
    }
}

#[test]
fn calibrated_barrier_is_a_strict_subsolution() {
    for n in [1, 2] {
        let cal = calibrate_gamma(n, 2.0).unwrap();
        for (frac, r) in [(1.0, 0.5), (0.3, 0.25)] {
            let a = frac * max_barrier_opening(cal.gamma_b);
            let s = spec(n, cal.gamma_b, a, r);
            let cert = certify_barrier(&s, 0.99 * a, r / 64.0).unwrap();
            assert!(cert.passed, "n={n} r={r}: {cert:?}");
            assert!(cert.checked > 0);
        }
    }
}

#[test]
fn too_coarse_grid_is_rejected() {
    let s = spec(1, 30.0, 1e-40, 0.5);
    assert!(matches!(
        certify_barrier(&s, 0.0, 0.5 / 32.0),
        Err(Error::GridTooCoarse(_))
    ));
}

#[test]
fn small_exponent_barrier_fails_the_certificate() {
    let s = spec(2, 4.0, 1e-3, 0.5);
    let cert = certify_barrier(&s, 0.0, 0.5 / 64.0).unwrap();
    assert!(!cert.passed);
}

#[test]
fn flat_slide_reproduces_the_touching_offset() {
    let g = bump(2, 1.0 / 32.0, 0.2, 0.3);
    let x = [0.1, -0.2];
    for a in [0.5, 2.0] {
        let p = Paraboloid::new(x.to_vec(), a, 0.0);
        let slide = slide_to_touch(&g, |y| p.eval(y), None).unwrap();
        let t = touching_offset(&g, a, &x).unwrap();
        assert!((slide.shift - t).abs() < 1e-14);
        let direct = crate::paraboloid::contact_points(&g, a, &x, Some(0.0)).unwrap();
        assert_eq!(slide.contacts, direct);
    }
}

#[test]
fn undefined_surface_is_reported() {
    let g = plane(1, 1.0 / 16.0, 0.0);
    let r = slide_to_touch(&g, |y| if y[0] > 0.5 { f64::NAN } else { 0.0 }, None);
    assert!(matches!(r, Err(Error::Domain(_))));
}

fn mtp_params(n: usize, gamma_b: f64, a: f64, r: f64, h: f64) -> MeasureToPointParams {
    MeasureToPointParams {
        h,
        a,
        center: vec![0.0; n],
        radius: r,
        gamma_b,
        theta: calibrate_theta(gamma_b),
        center_spacing: None,
        sweep_spacing: None,
    }
}

#[test]
fn plane_measure_to_point_reaches_the_disc_fraction() {
    let n = 2;
    let g = plane(n, 1.0 / 128.0, 0.0);
    let cal = calibrate_gamma(n, 2.0).unwrap();
    let a = admissible_opening(cal.gamma_b, calibrate_theta(cal.gamma_b));
    let rep = measure_to_point(&g, &mtp_params(n, cal.gamma_b, a, 0.5, 0.0)).unwrap();
    assert_eq!(rep.verdict, Verdict::Holds, "{rep:?}");
    let beta = rep.beta_hat.unwrap();
    let expected = std::f64::consts::PI / 64.0;
    assert!(rel(beta.value, expected) < 0.1, "{} vs {expected}", beta.value);
    let t = rep.slide_shift.unwrap();
    assert!(t > 0.0 && t <= rep.slide_bound);
    assert!(rep.q_slack.unwrap() > 0.0);
}

#[test]
fn bump_measure_to_point_localizes() {
    let n = 1;
    let g = bump(n, 1.0 / 256.0, 0.05, 0.5);
    let cal = calibrate_gamma(n, 2.0).unwrap();
    let a = admissible_opening(cal.gamma_b, calibrate_theta(cal.gamma_b));
    let rep = measure_to_point(&g, &mtp_params(n, cal.gamma_b, a, 0.5, 0.0)).unwrap();
    assert_eq!(rep.verdict, Verdict::Holds, "{rep:?}");
    assert!(rep.localized && rep.sweep_localized);
    assert!(rep.beta_hat.unwrap().value > 0.0);
}

#[test]
fn oversized_opening_violates_the_hypotheses() {
    let g = plane(1, 1.0 / 64.0, 0.0);
    let rep = measure_to_point(&g, &mtp_params(1, 30.0, 0.5, 0.5, 0.0)).unwrap();
    assert_eq!(rep.verdict, Verdict::HypothesisViolated);
    assert!(rep.beta_hat.is_none());
    assert!(!rep.violations.is_empty());
}

#[test]
fn off_center_peak_breaks_localization() {
    // The bump peaks at the origin, outside B(x0, r) for x0 = 0.6.
    let n = 1;
    let g = bump(n, 1.0 / 128.0, 0.05, 0.1);
    let cal = calibrate_gamma(n, 2.0).unwrap();
    let a = admissible_opening(cal.gamma_b, calibrate_theta(cal.gamma_b));
    let mut p = mtp_params(n, cal.gamma_b, a, 0.3, 0.0);
    p.center = vec![0.6];
    let rep = measure_to_point(&g, &p).unwrap();
    assert_eq!(rep.verdict, Verdict::HypothesisViolated, "{rep:?}");
    assert!(rep.beta_hat.is_none());
}

#[test]
fn flat_slab_passes_the_cascade() {
    let n = 2;
    let cal = calibrate_gamma(n, 2.0).unwrap();
    let alpha = calibrate_theta(cal.gamma_b) + 1.0;
    let k = 2;
    let floor = alpha.powi(-(k as i32) - 1);
    let g = plane(n, 1.0 / 64.0, -floor / 96.0);
    let rep = weak_harnack_check(&g, 0.0, alpha, k, 0.1, None).unwrap();
    assert_eq!(rep.verdict, Verdict::Holds, "{rep:?}");
    assert!(rep.monotone && rep.containment);
    assert!(rep.residual <= rep.residual_error + 1e-12);
    assert_eq!(rep.levels.len(), k as usize + 1);
    assert!((rep.beta1_needed.unwrap() - (1.0 - 0.1f64.sqrt())).abs() < 1e-12);
}

#[test]
fn shallow_bump_cascade_grows() {
    let n = 1;
    let cal = calibrate_gamma(n, 2.0).unwrap();
    let alpha = calibrate_theta(cal.gamma_b) + 1.0;
    let k = 3;
    let floor = alpha.powi(-(k as i32) - 1);
    let g = bump(n, 1.0 / 256.0, floor / 100.0, 0.3);
    let rep = weak_harnack_check(&g, 0.0, alpha, k, 0.5, None).unwrap();
    assert!(rep.monotone, "{rep:?}");
    assert!(rep.verdict != Verdict::HypothesisViolated, "{rep:?}");
}

#[test]
fn surface_above_the_plane_is_rejected() {
    let g = plane(1, 1.0 / 64.0, 0.01);
    let rep = weak_harnack_check(&g, 0.0, 4.0, 2, 0.5, None).unwrap();
    assert_eq!(rep.verdict, Verdict::HypothesisViolated);
    assert!(rep.violations.iter().any(|e| matches!(e, Error::Hypothesis { .. })));
}

#[test]
fn contact_sets_grow_with_the_opening() {
    let g = bump(2, 1.0 / 48.0, 0.3, 0.3);
    let centers = Lattice::ball(2, &[0.0, 0.0], 1.0, 1.0 / 24.0).unwrap();
    for (a, b) in [(0.5, 1.0), (1.0, 4.0), (2.0, 2.5)] {
        let rep = opening_monotonicity(&g, a, b, &centers).unwrap();
        assert!(rep.holds, "{rep:?}");
    }
}
