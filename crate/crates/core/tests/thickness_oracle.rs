use hypspec::geom::{ball_volume, dist, HPoint};
use hypspec::quad::QuadOptions;
use hypspec::quotient::{quotient_distance_lifted, EndModel};
use hypspec::sensor::{SensorNode, SensorSet};
use hypspec::thickness::{
    ball_measure, is_thick, measure_intersection, thickness_profile, BallSpec, ProfileOptions, ProfileRegion,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

/// Monte Carlo over the band `y ∈ [y e^{-R}, y e^{R}]` of the fundamental
/// domain, sampled uniformly for `dx dy / y²` (uniform in `1/y`).
fn mc_quotient_ratio(end: &EndModel, z: &HPoint, r: f64, omega: &SensorSet, n: usize, seed: u64) -> (f64, f64) {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let (ylo, yhi) = (z.y() * (-r).exp(), z.y() * r.exp());
    let band = 1.0 / ylo - 1.0 / yhi;
    let (mut hit_ball, mut hit_cap) = (0usize, 0usize);
    for _ in 0..n {
        let x = rng.random::<f64>() - 0.5;
        let w = 1.0 / yhi + rng.random::<f64>() * band;
        let q = HPoint::new(x, 1.0 / w).unwrap();
        if quotient_distance_lifted(end, z, &q).0 < r {
            hit_ball += 1;
            if omega.contains(q.x(), q.y()) {
                hit_cap += 1;
            }
        }
    }
    (hit_cap as f64 / hit_ball as f64, hit_ball as f64 / n as f64 * band)
}

#[test]
fn strip_on_deep_cusp_matches_monte_carlo() {
    let end = EndModel::cusp(1.0).unwrap();
    let omega = SensorSet::theta_strip(0.0, 0.5).unwrap();
    for &(x, y) in &[(0.1, 20.0), (-0.37, 35.0)] {
        let z = HPoint::new(x, y).unwrap();
        let ball = BallSpec::Quotient { end, center: z, radius: 1.0 };
        let o = QuadOptions::rel(1e-8);
        let vb = ball_measure(&ball, o).unwrap();
        let vc = measure_intersection(&omega, &ball, o).unwrap();
        let (mc_ratio, mc_vol) = mc_quotient_ratio(&end, &z, 1.0, &omega, 1_000_000, 11);
        assert!((vc / vb - mc_ratio).abs() < 0.02 * mc_ratio, "{} vs {mc_ratio}", vc / vb);
        assert!((vb / mc_vol - 1.0).abs() < 0.02, "{vb} vs {mc_vol}");
        assert!((vc / vb - 0.5).abs() < 0.02);
    }
}

#[test]
fn mixed_set_quotient_measure_matches_monte_carlo() {
    let end = EndModel::cusp(2.0).unwrap();
    let omega = SensorSet::new(SensorNode::Union {
        children: vec![
            SensorNode::Disk { cx: 0.2, cy: 2.0, r: 0.4 },
            SensorNode::ThetaStrip { lo: 0.6, hi: 0.7 },
        ],
    })
    .unwrap();
    let z = HPoint::new(0.45, 2.2).unwrap();
    let ball = BallSpec::Quotient { end, center: z, radius: 1.2 };
    let o = QuadOptions::rel(1e-8);
    let ratio = measure_intersection(&omega, &ball, o).unwrap() / ball_measure(&ball, o).unwrap();
    let (mc, _) = mc_quotient_ratio(&end, &z, 1.2, &omega, 400_000, 3);
    assert!((ratio - mc).abs() < 0.01, "{ratio} vs {mc}");
}

#[test]
fn ambient_disk_section_matches_monte_carlo() {
    let omega = SensorSet::new(SensorNode::HalfPlane { a: 1.0, b: -0.5, c: 0.2 }).unwrap();
    let z = HPoint::new(0.0, 1.0).unwrap();
    let r = 1.0;
    let ball = hypspec::geom::GeodesicBall::new(z, r).unwrap();
    let v = measure_intersection(&omega, &BallSpec::Ambient(ball), QuadOptions::rel(1e-9)).unwrap();
    // uniform sampling of the hyperbolic disk by polar coordinates at i
    let mut rng = ChaCha20Rng::seed_from_u64(5);
    let n = 400_000;
    let mut hit = 0;
    for _ in 0..n {
        let u: f64 = rng.random();
        let rho = 2.0 * (u * (0.5 * r).sinh().powi(2)).sqrt().asinh();
        let th = rng.random::<f64>() * std::f64::consts::TAU;
        let q = hypspec::geom::exp_map(&z, rho, th);
        assert!(dist(&z, &q) < r + 1e-12);
        if omega.contains(q.x(), q.y()) {
            hit += 1;
        }
    }
    let mc = hit as f64 / n as f64;
    assert!((v / ball_volume(r) - mc).abs() < 5e-3, "{} vs {mc}", v / ball_volume(r));
}

#[test]
fn strip_profile_is_thick_on_cusp() {
    let omega = SensorSet::theta_strip(0.0, 0.5).unwrap();
    let region = ProfileRegion::Cusp { length: 1.0, y_max: 1e3 };
    let rep = thickness_profile(&omega, region, 1.0, ProfileOptions::default()).unwrap();
    assert!(rep.delta_min >= 0.1, "delta_min {}", rep.delta_min);
    assert!(is_thick(&rep, 0.05));
    assert!(!rep.unverified && rep.certified_on_samples);
    for s in &rep.samples {
        assert!(s.ratio >= 0.0 && s.ratio <= 1.0 + 1e-6);
    }
}

#[test]
fn complement_ratios_sum_to_one() {
    let omega = SensorSet::new(SensorNode::Intersection {
        children: vec![
            SensorNode::ThetaStrip { lo: 0.1, hi: 0.45 },
            SensorNode::Rect { x0: None, x1: None, y0: Some(1.5), y1: Some(6.0) },
        ],
    })
    .unwrap();
    let region = ProfileRegion::Cusp { length: 1.0, y_max: 30.0 };
    let opts = ProfileOptions {
        center_samples: 100,
        quad: QuadOptions::rel(1e-8).with_abs(1e-300),
        ..Default::default()
    };
    let a = thickness_profile(&omega, region, 0.8, opts).unwrap();
    let b = thickness_profile(&omega.complement(), region, 0.8, opts).unwrap();
    assert_eq!(a.samples.len(), b.samples.len());
    for (p, q) in a.samples.iter().zip(&b.samples) {
        assert!((p.ratio + q.ratio - 1.0).abs() < 1e-6, "{p:?} {q:?} {}", p.ratio + q.ratio - 1.0);
    }
}

#[test]
fn monotone_under_inclusion_and_radius_remark() {
    let small = SensorSet::theta_strip(0.0, 0.25).unwrap();
    let big = SensorSet::theta_strip(0.0, 0.5).unwrap();
    let region = ProfileRegion::Funnel { length: 1.0, d_max: 4.0 };
    let opts = ProfileOptions { center_samples: 144, ..Default::default() };
    let r_small = thickness_profile(&small, region, 1.0, opts).unwrap();
    let r_big = thickness_profile(&big, region, 1.0, opts).unwrap();
    assert!(r_small.delta_min <= r_big.delta_min + 1e-9);
    for (p, q) in r_small.samples.iter().zip(&r_big.samples) {
        assert!(p.vol_cap <= q.vol_cap * (1.0 + 1e-6) + 1e-12);
    }
    // on ℍ, B(R0) ⊂ B(2R0) gives delta(2R0) ≥ delta(R0) vol(R0)/vol(2R0)
    let omega = SensorSet::new(SensorNode::Disk { cx: 0.0, cy: 2.0, r: 1.5 }).unwrap();
    let plane = ProfileRegion::Plane { x0: -0.5, x1: 0.5, y0: 1.5, y1: 2.5 };
    let r0 = 0.5;
    let p1 = thickness_profile(&omega, plane, r0, opts).unwrap();
    let p2 = thickness_profile(&omega, plane, 2.0 * r0, opts).unwrap();
    let factor = ball_volume(r0) / ball_volume(2.0 * r0);
    assert!(p1.delta_min > 0.0);
    for (a, b) in p1.samples.iter().zip(&p2.samples) {
        assert!(b.ratio >= a.ratio * factor - 1e-6);
    }
}
