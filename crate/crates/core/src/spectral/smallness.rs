//! Empirical propagation-of-smallness exponents for the harmonic extension.
//!
//! In the chart `X = (θ - θ_c)/y_c`, `Y = y/y_c` the extension solves
//! `div(A ∇W) = 0` with `A = diag(1/Y², 1, 1)`, and on `B(z_c, ρ)` one has
//! `e^{-2ρ} ≤ A ≤ e^{2ρ}`. Sups of `|∇_{t,X,Y} W|` over
//! `K = (-T/2, T/2) × B(z_c, R)`, `Ω = (-T, T) × B(z_c, e^η R)` and
//! `E = {0} × F`, `F ⊂ B(z_c, R)`, are grid maxima.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use super::modes::ModeBasis;
use crate::error::{Error, Result};
use crate::geom::{ball_to_euclidean, GeodesicBall, HPoint};
use crate::rng;
use crate::sensor::SensorSet;

#[derive(Debug, Clone)]
pub struct SmallnessConfig {
    pub theta_c: f64,
    pub y_c: f64,
    pub radius: f64,
    pub eta: f64,
    pub t_max: f64,
    pub cap: f64,
    pub trials: usize,
    pub seed: u64,
    /// `F = B(z_c, e_radius) ∩ ω`.
    pub e_radius: f64,
    pub omega: SensorSet,
    pub theta_samples: usize,
    pub max_rows: usize,
    pub t_samples: usize,
}

impl SmallnessConfig {
    pub fn new(theta_c: f64, y_c: f64, radius: f64, cap: f64) -> Self {
        Self {
            theta_c,
            y_c,
            radius,
            eta: 0.1,
            t_max: 1.0,
            cap,
            trials: 20,
            seed: 0,
            e_radius: 0.5 * radius,
            omega: SensorSet::full(),
            theta_samples: 24,
            max_rows: 48,
            t_samples: 11,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SmallnessTrial {
    pub sup_k: f64,
    pub sup_e: f64,
    pub sup_omega: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SmallnessReport {
    pub trials: Vec<SmallnessTrial>,
    pub skipped: usize,
    /// Unclamped least-squares slope.
    pub raw_slope: f64,
    pub alpha: f64,
    pub c: f64,
    pub holds_on_all: bool,
    /// Bounds of `A` on `B(z_c, e^η R)`: `(e^{-2ρ}, e^{2ρ})` and the sampled range.
    pub ellipticity: (f64, f64),
    pub sampled_ellipticity: (f64, f64),
}

/// Quadratic-form bounds of `A = diag(1/Y², 1, 1)` on a chart ball of radius `ρ`.
pub fn chart_ellipticity(rho: f64) -> (f64, f64) {
    ((-2.0 * rho).exp(), (2.0 * rho).exp())
}

struct Point {
    theta: f64,
    node: usize,
}

fn disk_points(basis: &ModeBasis, cfg: &SmallnessConfig, rho: f64, filter: Option<&SensorSet>) -> Result<Vec<Point>> {
    let c = HPoint::new(cfg.theta_c, cfg.y_c)?;
    let disk = ball_to_euclidean(&GeodesicBall::new(c, rho)?);
    let d = &basis.domain;
    if disk.cy - disk.r <= d.a || disk.cy + disk.r >= d.y_top {
        return Err(Error::OutOfRegion(format!(
            "ball of radius {rho} at height {} leaves ({}, {})",
            cfg.y_c, d.a, d.y_top
        )));
    }
    let nodes = d.nodes();
    // interior nodes only, so that the central y-difference is defined
    let rows: Vec<usize> = (1..nodes.len() - 1).filter(|&i| (nodes[i] - disk.cy).abs() < disk.r).collect();
    let stride = rows.len().div_ceil(cfg.max_rows.max(1)).max(1);
    let mut out = Vec::new();
    for &i in rows.iter().step_by(stride) {
        let y = nodes[i];
        let w = (disk.r * disk.r - (y - disk.cy).powi(2)).max(0.0).sqrt();
        for s in 0..cfg.theta_samples {
            let theta = disk.cx + w * (2.0 * (s as f64 + 0.5) / cfg.theta_samples as f64 - 1.0);
            if filter.is_none_or(|f| f.contains(theta - (theta + 0.5).floor(), y)) {
                out.push(Point { theta, node: i });
            }
        }
    }
    if out.is_empty() {
        return Err(Error::EmptyRegion(format!("no grid point in the ball of radius {rho}")));
    }
    Ok(out)
}

/// `max |∇_{t,X,Y} W|` over points × times.
fn sup_gradient(basis: &ModeBasis, coeffs: &[f64], y_c: f64, pts: &[Point], times: &[f64]) -> f64 {
    let h = basis.domain.step();
    let modes = &basis.modes[..coeffs.len()];
    pts.par_iter()
        .map(|p| {
            let i = p.node;
            let mut best: f64 = 0.0;
            for &t in times {
                let (mut wt, mut wth, mut wy) = (0.0, 0.0, 0.0);
                for (c, m) in coeffs.iter().zip(modes) {
                    let l = m.lambda;
                    let f = m.profile[i];
                    let fy = (m.profile[i + 1] - m.profile[i - 1]) / (2.0 * h);
                    let sc = (l * t).sinh() / l;
                    let a = m.angular.eval(p.theta);
                    wt += c * (l * t).cosh() * a * f;
                    wth += c * sc * m.angular.derivative(p.theta) * f;
                    wy += c * sc * a * fy;
                }
                let g = (wt * wt + y_c * y_c * (wth * wth + wy * wy)).sqrt();
                best = best.max(g);
            }
            best
        })
        .reduce(|| 0.0, f64::max)
}

fn time_grid(t: f64, n: usize) -> Vec<f64> {
    let n = n.max(2);
    (0..n).map(|i| -t + 2.0 * t * i as f64 / (n - 1) as f64).collect()
}

/// Fit `(C, α)` with `sup_K ≤ C sup_E^α sup_Ω^{1-α}` on every trial:
/// least-squares slope for `α` (clamped to `[ε, 1-ε]`), then the least `C`.
pub fn fit_three_quantity(trials: &[SmallnessTrial]) -> Result<(f64, f64, f64)> {
    if trials.is_empty() {
        return Err(Error::DegenerateField("no nondegenerate trial".into()));
    }
    let eps = 1e-3;
    let pts: Vec<(f64, f64)> = trials
        .iter()
        .map(|t| ((t.sup_e / t.sup_omega).ln(), (t.sup_k / t.sup_omega).ln()))
        .collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.5 };
    let alpha = slope.clamp(eps, 1.0 - eps);
    let log_c = pts.iter().map(|(x, y)| y - alpha * x).fold(f64::NEG_INFINITY, f64::max);
    Ok((log_c.exp(), alpha, slope))
}

pub fn three_quantity_holds(t: &SmallnessTrial, c: f64, alpha: f64) -> bool {
    t.sup_k <= c * t.sup_e.powf(alpha) * t.sup_omega.powf(1.0 - alpha) * (1.0 + 1e-12)
}

/// Seeded Gaussian windows on the modes with `λ ≤ Λ`.
pub fn smallness_experiment(basis: &ModeBasis, cfg: &SmallnessConfig) -> Result<SmallnessReport> {
    if !(cfg.radius > 0.0 && cfg.eta > 0.0 && cfg.t_max > 0.0 && cfg.e_radius > 0.0 && cfg.e_radius <= cfg.radius) {
        return Err(Error::InvalidInput("smallness radii and times must be positive, e_radius ≤ R".into()));
    }
    let len = basis.window_len(cfg.cap);
    let big = cfg.eta.exp() * cfg.radius;
    if basis.modes[..len].iter().any(|m| m.lambda * cfg.t_max > super::extension::SINH_GUARD) {
        return Err(Error::Overflow(cfg.cap * cfg.t_max));
    }
    let k_pts = disk_points(basis, cfg, cfg.radius, None)?;
    let o_pts = disk_points(basis, cfg, big, None)?;
    let e_pts = disk_points(basis, cfg, cfg.e_radius, Some(&cfg.omega))?;
    let k_times = time_grid(0.5 * cfg.t_max, cfg.t_samples);
    let o_times = time_grid(cfg.t_max, 2 * cfg.t_samples - 1);
    let mut trials = Vec::new();
    let mut skipped = 0;
    for trial in 0..cfg.trials {
        let mut r = rng::stream(cfg.seed, 0x5a11 + trial as u64);
        // random spectral tilt spreads the trials across frequency profiles
        let tilt = 3.0 * r.random::<f64>() / cfg.cap.max(1e-12);
        let coeffs: Vec<f64> = basis.modes[..len]
            .iter()
            .map(|m| {
                let g: f64 = StandardNormal.sample(&mut r);
                g * (-tilt * m.lambda).exp()
            })
            .collect();
        let sup_omega = sup_gradient(basis, &coeffs, cfg.y_c, &o_pts, &o_times);
        if sup_omega == 0.0 {
            skipped += 1;
            continue;
        }
        let sup_k = sup_gradient(basis, &coeffs, cfg.y_c, &k_pts, &k_times);
        let sup_e = sup_gradient(basis, &coeffs, cfg.y_c, &e_pts, &[0.0]);
        trials.push(SmallnessTrial { sup_k, sup_e, sup_omega });
    }
    let (c, alpha, raw_slope) = fit_three_quantity(&trials)?;
    let holds_on_all = trials.iter().all(|t| three_quantity_holds(t, c, alpha));
    let nodes = basis.domain.nodes();
    let (ymin, ymax) = o_pts.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), p| {
        let y = nodes[p.node] / cfg.y_c;
        (lo.min(y), hi.max(y))
    });
    let a_vals = [1.0, 1.0 / (ymax * ymax), 1.0 / (ymin * ymin)];
    let sampled = (
        a_vals.iter().copied().fold(f64::INFINITY, f64::min),
        a_vals.iter().copied().fold(0.0, f64::max),
    );
    Ok(SmallnessReport {
        trials,
        skipped,
        raw_slope,
        alpha,
        c,
        holds_on_all,
        ellipticity: chart_ellipticity(big),
        sampled_ellipticity: sampled,
    })
}
