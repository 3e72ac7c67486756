//! Cross-module checks against independent oracles: closed forms, adaptive
//! quadrature, and statistics of the samplers.

use std::f64::consts::{FRAC_PI_2, PI};

use lpiso_core::certificate::{
    build_f, certificate_family, dual_objective, closed_form_certificate, verify_certificate, ConstraintSet, VerifyOptions,
};
use lpiso_core::chord::{
    croke_residual, croke_target, discretize_ball_measure, integrate, sample_chords, santalo_residual,
    santalo_target, Functional,
};
use lpiso_core::lemmas::{
    check_diagonal_maximizer, critical_system, default_box, escape_rays, solve_critical_points, LemmaCase,
};
use lpiso_core::lp::builders::{build_isoperimetric_lp, default_products, FamilyFunction, LpGrid};
use lpiso_core::lp::builders::{build_relative_lp, RelativeRowScaling};
use lpiso_core::lp::{solve, LpStatus};
use lpiso_core::negbound::{
    ch2_counterexample_search, complex_hyperbolic_spectrum, hyp2_lemma_residual, Hyp2Convention,
};
use lpiso_core::prince::{area, gravity, verify_pp, StarDomain};
use lpiso_core::quad;
use lpiso_core::relative::{relative_bound, relative_lp, RelativeCase};
use lpiso_core::spaceform::{ball_from_volume, delta_weight, BallGeometry, ModelParams};

const SIX: [(usize, f64); 6] = [(2, 0.0), (4, 0.0), (2, 1.0), (4, 1.0), (2, -1.0), (4, -1.0)];

fn mp(n: usize, kappa: f64) -> ModelParams {
    ModelParams::new(n, kappa).unwrap()
}

fn lp_optimum(p: ModelParams, v: f64, grid: &LpGrid, family: &[FamilyFunction]) -> f64 {
    let sol = solve(&build_isoperimetric_lp(p, v, grid, family).unwrap(), 1e-8).unwrap();
    assert_eq!(sol.status, LpStatus::Optimal);
    sol.objective
}

#[test]
fn marginal_matches_delta_weight() {
    // Σ mass·g(α) = A ∫ g δⁿ dα for polynomial g of degree ≤ 6.
    let g = |a: f64| 1.0 - 0.5 * a + 0.3 * a.powi(3) - 0.05 * a.powi(6);
    for (n, kappa) in SIX {
        let ball = BallGeometry::from_radius(mp(n, kappa), 0.9).unwrap();
        let mu = discretize_ball_measure(&ball, 96).unwrap();
        let got: f64 = mu.atoms.iter().map(|a| a.mass * g(a.alpha)).sum();
        let want = ball.area * quad::integrate(|a| g(a) * delta_weight(n, a), 0.0, FRAC_PI_2, 1e-14, 1e-13).value;
        assert!((got - want).abs() <= 1e-8 * want.abs(), "({n},{kappa}) {got} vs {want}");
    }
}

#[test]
fn quadrature_residuals_converge() {
    for (n, kappa) in SIX {
        let ball = BallGeometry::from_radius(mp(n, kappa), 0.8).unwrap();
        let mut last = f64::INFINITY;
        for nodes in [8, 32, 128] {
            let mu = discretize_ball_measure(&ball, nodes).unwrap();
            let mut worst = (santalo_residual(&ball, &mu) / santalo_target(&ball)).abs();
            for k in 1..=3 {
                worst = worst.max((croke_residual(&ball, &mu, k).unwrap() / croke_target(&ball, k).unwrap()).abs());
            }
            assert!(worst <= last.max(1e-14), "({n},{kappa}) nodes={nodes}: {worst} after {last}");
            last = worst;
        }
        assert!(last <= 1e-10, "({n},{kappa}): {last}");
    }
}

#[test]
fn monte_carlo_error_decays_like_inverse_sqrt() {
    // RMS error of the Santaló estimate over 16 seeds at N = 10³ … 6.4·10⁴.
    let ball = BallGeometry::from_radius(mp(4, 1.0), 0.8).unwrap();
    let target = santalo_target(&ball);
    let sizes = [1_000usize, 4_000, 16_000, 64_000];
    let mut pts = Vec::new();
    for &n in &sizes {
        let mut ss = 0.0;
        for seed in 0..16u64 {
            let mu = sample_chords(&ball, n, 1000 + seed).unwrap();
            ss += (integrate(&mu, Functional::F4, ball.params).unwrap() - target).powi(2);
        }
        pts.push(((n as f64).ln(), (ss / 16.0).sqrt().ln()));
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / pts.len() as f64;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / pts.len() as f64;
    let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
        / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    assert!((slope + 0.5).abs() <= 0.15, "slope {slope}");
}

#[test]
fn sampling_is_bit_reproducible() {
    let ball = BallGeometry::from_radius(mp(2, -1.0), 1.1).unwrap();
    assert_eq!(sample_chords(&ball, 5000, 9).unwrap(), sample_chords(&ball, 5000, 9).unwrap());
}

#[test]
fn certificates_pass_verification_in_all_six_cases() {
    for (n, kappa) in SIX {
        let cert = closed_form_certificate(mp(n, kappa), 0.7).unwrap();
        let set = if kappa < 0.0 { ConstraintSet::Signed } else { ConstraintSet::Table1 };
        let rep = verify_certificate(&cert, set, &VerifyOptions::default()).unwrap();
        assert!(rep.passed, "({n},{kappa}) {rep:?}");
        // The dual objective at the certificate is the ball's area.
        let ball = BallGeometry::from_radius(mp(n, kappa), 0.7).unwrap();
        let d = dual_objective(&cert).unwrap();
        assert!((d - ball.area).abs() <= 1e-8 * ball.area, "({n},{kappa}) {d} vs {}", ball.area);
    }
    let cert = closed_form_certificate(mp(4, -1.0), 0.7).unwrap();
    let rep = verify_certificate(&cert, ConstraintSet::Table1, &VerifyOptions::default()).unwrap();
    assert!(!rep.passed && rep.sign_flags.contains(&"negative b".to_string()));
}

#[test]
fn euclidean_f_scales_as_r_cubed() {
    let (r1, r2) = (0.6f64, 1.7f64);
    let c1 = closed_form_certificate(mp(4, 0.0), r1).unwrap();
    let c2 = closed_form_certificate(mp(4, 0.0), r2).unwrap();
    let d_exp = (c2.d / c1.d).ln() / (r2 / r1).ln();
    assert!((d_exp - 2.0).abs() <= 1e-6, "{d_exp}");
    for (a, b) in [(0.1, 0.2), (0.7, 1.3), (1.2, 0.4)] {
        let f1 = build_f(&c1, a, b).unwrap().0;
        let f2 = build_f(&c2, a, b).unwrap().0;
        let e = (f2 / f1).ln() / (r2 / r1).ln();
        assert!((e - 3.0).abs() <= 1e-6, "({a},{b}) {e}");
    }
}

#[test]
fn lp_small_volume_limit() {
    // A/√V → 2√π as V → 0, in the plane and on the sphere.
    for kappa in [0.0, 1.0] {
        let p = mp(2, kappa);
        let v = 1e-3;
        let ball = ball_from_volume(p, v).unwrap();
        let mut family = default_products();
        family.push(certificate_family(&closed_form_certificate(p, ball.radius).unwrap()));
        let grid = LpGrid::curve_aligned(&ball, 20, 10, None).unwrap();
        let a = lp_optimum(p, v, &grid, &family);
        let ratio = a / v.sqrt();
        assert!((ratio - 2.0 * PI.sqrt()).abs() <= 0.05 * 2.0 * PI.sqrt(), "kappa={kappa}: {ratio}");
    }
}

#[test]
fn lp_optimum_grows_with_the_family() {
    let p = mp(4, 1.0);
    let ball = BallGeometry::from_radius(p, 0.9).unwrap();
    let grid = LpGrid::curve_aligned(&ball, 20, 10, None).unwrap();
    let products = default_products();
    let cert = certificate_family(&closed_form_certificate(p, ball.radius).unwrap());
    let nested: [Vec<FamilyFunction>; 3] = [
        products[..1].to_vec(),
        products.clone(),
        products.iter().cloned().chain([cert]).collect(),
    ];
    let values: Vec<f64> = nested.iter().map(|f| lp_optimum(p, ball.volume, &grid, f)).collect();
    for w in values.windows(2) {
        assert!(w[1] >= w[0] - 1e-9 * w[0].abs(), "{values:?}");
    }
    assert!((values[2] - ball.area).abs() <= 1e-6 * ball.area, "{values:?}");
}

#[test]
fn lp_refinement_on_dyadic_grids() {
    // Uniform grids that do not contain the chord curve approach A_B from
    // either side; successive differences must shrink.
    let p = mp(2, 0.0);
    let ball = BallGeometry::from_radius(p, 1.0).unwrap();
    let family = default_products();
    let values: Vec<f64> = [(10, 5), (20, 10), (40, 20)]
        .iter()
        .map(|&(ne, na)| lp_optimum(p, ball.volume, &LpGrid::uniform(ne, na, 2.5), &family))
        .collect();
    let diffs: Vec<f64> = values.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    assert!(diffs[1] < diffs[0], "{values:?}");
}

#[test]
fn relative_lp_matches_the_orbifold_bound() {
    for n in [2, 4] {
        for m in [1, 2, 4] {
            let v = if n == 2 { 0.8 } else { 0.3 };
            let case = RelativeCase::new(mp(n, 0.0), m, v).unwrap();
            let rep = relative_lp(&case, 40, 20, RelativeRowScaling::Corrected, 1e-8).unwrap();
            assert_eq!(rep.status, LpStatus::Optimal);
            assert!(rep.relative_error.abs() <= 0.02, "n={n} m={m}: {rep:?}");
        }
    }
    // m = 1 gives the isoperimetric program row for row.
    let p = mp(4, 1.0);
    let ball = ball_from_volume(p, 0.5).unwrap();
    let grid = LpGrid::curve_aligned(&ball, 6, 4, None).unwrap();
    let fam = default_products();
    let a = build_isoperimetric_lp(p, 0.5, &grid, &fam).unwrap();
    let b = build_relative_lp(p, 0.5, 1, &grid, &fam, RelativeRowScaling::Corrected).unwrap();
    assert_eq!(a.to_text(), b.to_text());
    let bound = relative_bound(&RelativeCase::new(p, 1, 0.5).unwrap()).unwrap();
    assert_eq!(bound, ball.area);
}

#[test]
fn diagonal_maximizer_on_fifty_slices() {
    let ps: Vec<f64> = (0..50).map(|i| 0.05 * 1.1f64.powi(i)).collect();
    let rep = check_diagonal_maximizer(LemmaCase::Spherical, &ps, 1e-8).unwrap();
    assert!(rep.passed && rep.max_argmax_error <= 1e-8, "{}", rep.max_argmax_error);
    assert!(rep.min_limit_margin.unwrap() >= 0.0);
    let ps: Vec<f64> = (0..50).map(|i| 0.35 * 1.05f64.powi(i)).collect();
    let rep = check_diagonal_maximizer(LemmaCase::Hyperbolic, &ps, 1e-8).unwrap();
    assert!(rep.passed && rep.max_argmax_error <= 1e-8, "{}", rep.max_argmax_error);
}

#[test]
fn critical_points_lie_on_the_zero_curve() {
    for case in [LemmaCase::Spherical, LemmaCase::Hyperbolic] {
        let rep = solve_critical_points(case, &critical_system(case), &default_box(case), 300, 11).unwrap();
        assert!(!rep.roots.is_empty());
        assert!(rep.max_distance_to_curve <= 1e-6 && rep.max_h_value <= 1e-10, "{case:?} {rep:?}");
        assert!(escape_rays(case).iter().all(|r| r.passed));
    }
}

#[test]
fn hyp2_convention_decides_closure() {
    for r in [0.7, 1.5] {
        let ball = BallGeometry::from_radius(mp(2, -1.0), r).unwrap();
        let mu = discretize_ball_measure(&ball, 128).unwrap();
        let rhs = ball.area * ball.volume - r.tanh() * ball.volume.powi(2);
        let bare = hyp2_lemma_residual(r, &mu, Hyp2Convention::BareVolume).unwrap();
        assert!(bare.abs() <= 1e-7 * rhs.abs(), "r={r}: {bare}");
        let printed = hyp2_lemma_residual(r, &mu, Hyp2Convention::TwoPi).unwrap();
        assert!(printed.abs() > 1e-3 * rhs.abs());
    }
}

#[test]
fn question1_search_is_reproducible_and_short_range_safe() {
    let s = complex_hyperbolic_spectrum();
    let a = ch2_counterexample_search(&s, 10.0, 5.0, 16).unwrap();
    let b = ch2_counterexample_search(&s, 10.0, 5.0, 16).unwrap();
    assert_eq!(a.best_margin.to_bits(), b.best_margin.to_bits());
    assert!(a.found_violation);
    let near = ch2_counterexample_search(&s, 0.1, 0.1, 8).unwrap();
    assert!(near.best_margin >= 0.0, "{}", near.best_margin);
}

#[test]
fn prince_quadrature_oracles() {
    let sq = StarDomain::Square { side: 1.0 };
    assert!((area(&sq).unwrap() - 1.0).abs() <= 1e-10);
    let g = gravity(&sq).unwrap();
    assert!(g < 0.2821);
    // Independent oracle: the square's chord function in closed form.
    let chord = |a: f64| {
        let t = a.abs();
        if t.tan() <= 0.5 { 1.0 / t.cos() } else { 0.5 / t.sin() }
    };
    let want = quad::integrate_pieces(
        |a| chord(a) * a.cos(),
        &[-FRAC_PI_2, -(0.5f64).atan(), 0.0, (0.5f64).atan(), FRAC_PI_2],
        1e-14,
        1e-13,
    )
    .value
        / (2.0 * PI);
    assert!((g - want).abs() <= 1e-10, "{g} vs {want}");
    assert!(verify_pp(&StarDomain::Ellipse { a: 2.0, b: 0.5 }).unwrap() > 0.0);
}
