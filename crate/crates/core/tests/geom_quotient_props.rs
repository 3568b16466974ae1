use hypspec::geom::{dist, HPoint, Mobius};
use hypspec::interval::IntervalSet;
use hypspec::quad::QuadOptions;
use hypspec::quotient::{lifted_norm_sq, quotient_norm_sq, EndModel, GridFunction};
use proptest::prelude::*;

fn point() -> impl Strategy<Value = HPoint> {
    (-4.0..4.0f64, -3.0..3.0f64).prop_map(|(x, ly)| HPoint::new(x, ly.exp()).unwrap())
}

fn mobius() -> impl Strategy<Value = Mobius> {
    (0.2..4.0f64, -4.0..4.0f64, -2.0..2.0f64).prop_map(|(a, b, c)| Mobius::new(a, b, c, (1.0 + b * c) / a).unwrap())
}

fn spans() -> impl Strategy<Value = IntervalSet> {
    prop::collection::vec((-5.0..5.0f64, 0.0..2.0f64), 0..6)
        .prop_map(|v| IntervalSet::from_spans(v.into_iter().map(|(a, w)| (a, a + w)).collect()))
}

proptest! {
    #[test]
    fn mobius_preserves_distance(g in mobius(), p in point(), q in point()) {
        let d = dist(&p, &q);
        let e = dist(&g.apply(&p), &g.apply(&q));
        prop_assert!((d - e).abs() <= 1e-9 * (1.0 + d), "{d} vs {e}");
    }

    #[test]
    fn distance_is_a_metric(p in point(), q in point(), r in point()) {
        prop_assert_eq!(dist(&p, &p), 0.0);
        prop_assert!((dist(&p, &q) - dist(&q, &p)).abs() <= 1e-12 * (1.0 + dist(&p, &q)));
        prop_assert!(dist(&p, &r) <= dist(&p, &q) + dist(&q, &r) + 1e-10);
    }

    #[test]
    fn interval_measure_inclusion_exclusion(a in spans(), b in spans()) {
        let lhs = a.union(&b).measure() + a.intersect(&b).measure();
        prop_assert!((lhs - a.measure() - b.measure()).abs() < 1e-12);
        let c = a.complement_within(-6.0, 8.0);
        prop_assert!((c.measure() + a.clip(-6.0, 8.0).measure() - 14.0).abs() < 1e-12);
    }

    #[test]
    fn wrapped_interval_measure(lo in -3.0..3.0f64, w in 0.0..3.0f64) {
        let s = IntervalSet::wrapped(lo, lo + w, -0.5, 1.0);
        prop_assert!((s.measure() - w.min(1.0)).abs() < 1e-12);
        prop_assert!(s.spans().iter().all(|&(a, b)| a >= -0.5 && b <= 0.5));
    }
}

/// Midpoint sum of `|v|² / y²` over the lifted disk.
fn brute_lifted(v: &GridFunction, end: &EndModel, z: &HPoint, radius: f64, n: usize) -> f64 {
    let d = end.lifted_disk(z, radius).unwrap();
    let h = 2.0 * d.r / n as f64;
    let mut sum = 0.0;
    for i in 0..n {
        let y = d.cy - d.r + (i as f64 + 0.5) * h;
        for j in 0..n {
            let x = d.cx - d.r + (j as f64 + 0.5) * h;
            if (x - d.cx).powi(2) + (y - d.cy).powi(2) < d.r * d.r {
                sum += v.eval_chart(x, y).powi(2) / (y * y);
            }
        }
    }
    sum * h * h
}

#[test]
fn lift_norms_match_midpoint_oracle() {
    let end = EndModel::cusp(1.0).unwrap();
    let v = GridFunction::sample(end, 12, (1.0, 6.0), 8, |s, t| 1.0 + (6.3 * s).cos() * t / 6.0 + 0.3 * (12.6 * s).sin()).unwrap();
    let opts = QuadOptions::rel(1e-10).with_abs(1e-300);
    for (z, r) in [(HPoint::new(0.2, 2.5).unwrap(), 0.3), (HPoint::new(0.1, 2.0).unwrap(), 0.6)] {
        let lifted = lifted_norm_sq(&v, &z, r, opts).unwrap();
        let b = brute_lifted(&v, &end, &z, r, 1200);
        assert!((lifted / b - 1.0).abs() < 2e-4, "{lifted} vs {b}");
    }
}

#[test]
fn quotient_norm_of_constant_is_projected_area() {
    let end = EndModel::cusp(1.0).unwrap();
    let one = GridFunction::sample(end, 8, (1.0, 20.0), 4, |_, _| 1.0).unwrap();
    let z = HPoint::new(0.3, 4.0).unwrap();
    let r = 1.0;
    let d = end.lifted_disk(&z, r).unwrap();
    // each row projects onto min(chord, 1) of the window
    let n = 200_000;
    let h = 2.0 * d.r / n as f64;
    let area: f64 = (0..n)
        .map(|i| {
            let y = d.cy - d.r + (i as f64 + 0.5) * h;
            let chord = 2.0 * (d.r * d.r - (y - d.cy).powi(2)).max(0.0).sqrt();
            chord.min(1.0) / (y * y) * h
        })
        .sum();
    let q = quotient_norm_sq(&one, &z, r, QuadOptions::rel(1e-10).with_abs(1e-300)).unwrap();
    assert!((q / area - 1.0).abs() < 1e-6, "{q} vs {area}");
}
