use std::f64::consts::PI;

use hypspec::geom::ball_volume;
use hypspec::heat::*;
use hypspec::quad::{integrate, QuadOptions};
use hypspec::sensor::SensorSet;
use hypspec::spectral::{solve_modes, TruncatedCusp};
use proptest::prelude::*;

#[test]
fn gaussian_numerator_matches_error_function_form() {
    let o = QuadOptions::rel(1e-13).with_abs(0.0);
    for alpha in [0.1, 0.5, 1.0, 3.0, 20.0] {
        let q = gaussian_integral(alpha, o).unwrap();
        let c = gaussian_integral_closed_form(alpha);
        assert!((q / c - 1.0).abs() < 1e-9, "{alpha}: {q} {c}");
    }
    // value at α = 1 from a plain quadrature of the radial integrand
    let direct = 2.0 * PI * integrate(|s: f64| (-s * s).exp() * s.sinh(), 0.0, 40.0, o).unwrap().value;
    assert!((gaussian_integral_closed_form(1.0) - direct).abs() < 1e-6);
    assert!((direct - 3.721_508_895).abs() < 1e-8);
}

#[test]
fn analytic_bound_below_numeric_quotient() {
    let grid = [0.25, 0.5, 1.0, 2.0, 4.0];
    let rows = gaussian_quotient_grid(&grid, &grid, 4.0).unwrap();
    assert_eq!(rows.len(), 25);
    for r in &rows {
        assert!(r.holds && r.bound > 0.0, "{r:?}");
    }
    assert!((gaussian_quotient_numeric(0.8, 0.8).unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn kernel_normalized_and_monotone() {
    for t in [0.1, 1.0] {
        assert!((heat_kernel_mass(t).unwrap() - 1.0).abs() < 1e-6);
        let mut prev = f64::INFINITY;
        for i in 0..40 {
            let p = h2_heat_kernel(0.2 * i as f64, t).unwrap();
            assert!(p < prev && p > 0.0);
            prev = p;
        }
    }
}

#[test]
fn kernel_short_time_regime() {
    // on-diagonal expansion 4πt p(0, t) = 1 + t·scal/6 + O(t²), scal = -2
    let t = 1e-3;
    let p0 = h2_heat_kernel(0.0, t).unwrap();
    assert!((4.0 * PI * t * p0 - (1.0 - t / 3.0)).abs() < 1e-6);
    let vals: Vec<f64> = (0..=10)
        .map(|i| {
            let d = 0.1 * i as f64;
            ln_h2_heat_kernel(d, t).unwrap() + d * d / (4.0 * t)
        })
        .collect();
    let (lo, hi) = vals.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
    assert!(hi - lo < 1.0, "{vals:?}");
}

#[test]
fn envelope_fit_is_feasible_and_monotone_in_c1() {
    let fit = envelope_fit(&EnvelopeGrid::default()).unwrap();
    assert!(fit.c1.is_finite() && fit.c2.is_finite());
    assert!(fit.all_hold());
    assert_eq!((fit.c1, fit.c2), (H2_C1, H2_C2));
    for s in &fit.samples {
        assert!(s.upper_holds(2.0 * fit.c1, fit.c2) && s.lower_holds(2.0 * fit.c1, fit.c2));
        if s.d == 0.0 {
            let p = s.ln_p.exp();
            assert!(fit.c1 * (fit.c2 * s.t).exp() / ball_volume(s.t.sqrt()) >= p);
        }
    }
    let mut grid = EnvelopeGrid::default();
    grid.t.retain(|t| *t > 0.1);
    assert!(envelope_fit(&grid).is_err());
}

#[test]
fn observability_full_and_nested() {
    let d = TruncatedCusp::new(1.0, 8.0, 200, 4).unwrap();
    let b = solve_modes(&d, 30).unwrap();
    let top = b.modes.last().unwrap().lambda;
    for t in [0.1, 1.0] {
        let c = observability_constant(&SensorSet::full(), t, &b, top).unwrap();
        assert!(c <= (1.0 / t) * (1.0 + 1e-8), "{c}");
        let half = observability_constant(&SensorSet::theta_strip(0.0, 0.5).unwrap(), t, &b, top).unwrap();
        let quarter = observability_constant(&SensorSet::theta_strip(0.0, 0.25).unwrap(), t, &b, top).unwrap();
        assert!(c <= half * (1.0 + 1e-10) && half <= quarter * (1.0 + 1e-10), "{c} {half} {quarter}");
    }
    assert_eq!(observability_constant(&SensorSet::full(), 1.0, &b, 0.1).unwrap(), 0.0);
    let table = observability_table(&SensorSet::empty(), &[1.0], &[top], &b).unwrap();
    assert!(table[0].c_obs.is_infinite());
    let k = kernel_observability_check(&SensorSet::theta_strip(0.0, 0.5).unwrap(), &b, top, 0.05, 0.1, 60).unwrap();
    assert!(k.holds && k.lhs > 0.0, "{k:?}");
}

#[test]
fn heat_flow_contracts() {
    let d = TruncatedCusp::new(1.0, 8.0, 100, 2).unwrap();
    let b = solve_modes(&d, 12).unwrap();
    let w = b.project(&vec![1.0; b.len()], 100.0).unwrap();
    let mut prev = w.norm();
    for i in 1..10 {
        let n = heat_flow(&w, 0.05 * i as f64).norm();
        assert!(n <= prev);
        prev = n;
    }
}

#[test]
fn pipeline_defaults_give_thickness_constants() {
    let p = necessity_pipeline(&CurvatureParams::hyperbolic_plane()).unwrap();
    assert!(p.r > 0.0 && p.delta > 0.0 && p.delta < 1.0);
    assert!(p.beta_k > 4.0 * H2_DOUBLING);
    assert!(-0.5 * p.beta_k * p.r * p.r < (0.5 * p.quotient_bound).ln());
}

proptest! {
    #[test]
    fn bound_monotone(a in 0.1f64..5.0, b in 0.1f64..5.0, da in 0.0f64..2.0, db in 0.0f64..2.0) {
        let base = ln_gaussian_quotient_bound(a, b, 4.0);
        prop_assert!(ln_gaussian_quotient_bound(a + da, b, 4.0) <= base + 1e-12);
        prop_assert!(ln_gaussian_quotient_bound(a, b + db, 4.0) >= base - 1e-12);
    }

    #[test]
    fn pipeline_monotone_in_c2(c2 in 0.05f64..3.0, dc in 0.01f64..1.0) {
        let cp = CurvatureParams { c2, ..CurvatureParams::hyperbolic_plane() };
        let hi = CurvatureParams { c2: c2 + dc, ..cp };
        let (p, q) = (necessity_pipeline(&cp).unwrap(), necessity_pipeline(&hi).unwrap());
        prop_assert!(q.alpha_k > p.alpha_k);
        prop_assert!(q.ln_delta < p.ln_delta);
    }
}
