//! Funnel and cusp ends as quotients of the half-plane by a cyclic group.
//!
//! * Cusp of horocycle length `ℓ`: group `⟨z ↦ z + 1⟩`, fundamental domain
//!   `[-1/2, 1/2) × (1/ℓ, ∞)`.
//! * Funnel of boundary length `ℓ`: group `⟨z ↦ e^ℓ z⟩`, fundamental domain
//!   `{x < 0 < y, 1 ≤ |z| < e^ℓ}`.
//!
//! Both generators act as translations of the chart coordinate `s` of
//! [`Slicing`], which is what the lift/projection computations rely on.

use std::f64::consts::SQRT_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{ball_to_euclidean, dist, EuclideanDisk, GeodesicBall, HPoint};
use crate::interval::IntervalSet;
use crate::quad::QuadOptions;
use crate::rows::{integrate_disk_rows, Slicing};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum EndModel {
    Funnel { length: f64 },
    Cusp { length: f64 },
}

impl EndModel {
    pub fn funnel(length: f64) -> Result<Self> {
        check_length(length)?;
        Ok(EndModel::Funnel { length })
    }

    pub fn cusp(length: f64) -> Result<Self> {
        check_length(length)?;
        Ok(EndModel::Cusp { length })
    }

    pub fn length(&self) -> f64 {
        match *self {
            EndModel::Funnel { length } | EndModel::Cusp { length } => length,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_length(self.length())
    }

    pub fn slicing(&self) -> Slicing {
        match self {
            EndModel::Funnel { .. } => Slicing::Radial,
            EndModel::Cusp { .. } => Slicing::Horizontal,
        }
    }

    /// Translation length of the generator in the `s` coordinate.
    pub fn period(&self) -> f64 {
        match *self {
            EndModel::Funnel { length } => length,
            EndModel::Cusp { .. } => 1.0,
        }
    }

    /// Start of the fundamental `s`-window `[w0, w0 + period)`.
    pub fn window_start(&self) -> f64 {
        match self {
            EndModel::Funnel { .. } => 0.0,
            EndModel::Cusp { .. } => -0.5,
        }
    }

    /// `generator^k (p)`.
    pub fn translate(&self, p: &HPoint, k: i64) -> HPoint {
        match *self {
            EndModel::Cusp { .. } => HPoint::new_unchecked(p.x() + k as f64, p.y()),
            EndModel::Funnel { length } => {
                let f = (k as f64 * length).exp();
                HPoint::new_unchecked(p.x() * f, p.y() * f)
            }
        }
    }

    /// Whether `p` lies in the lifted region `{Im z > 1/ℓ}` (cusp) or `{Re z < 0}` (funnel).
    pub fn in_lifted_region(&self, p: &HPoint) -> bool {
        match *self {
            EndModel::Cusp { length } => p.y() > 1.0 / length,
            EndModel::Funnel { .. } => p.x() < 0.0,
        }
    }

    pub fn in_fundamental_domain(&self, p: &HPoint) -> bool {
        if !self.in_lifted_region(p) {
            return false;
        }
        let (s, _) = self.slicing().to_chart(p);
        let w0 = self.window_start();
        s >= w0 && s < w0 + self.period()
    }

    /// Representative in the fundamental domain and the power `k` with
    /// `generator^k(representative) = p`.
    pub fn reduce(&self, p: &HPoint) -> Result<(QuotientPoint, i64)> {
        if !self.in_lifted_region(p) {
            return Err(Error::OutOfRegion(format!(
                "({}, {}) is outside the lifted region of {self:?}",
                p.x(),
                p.y()
            )));
        }
        let sl = self.slicing();
        let (s, _) = sl.to_chart(p);
        let w0 = self.window_start();
        let period = self.period();
        let mut k = ((s - w0) / period).floor() as i64;
        let mut rep = self.translate(p, -k);
        // floating point can land exactly on the open end of the window
        for _ in 0..2 {
            let (rs, _) = sl.to_chart(&rep);
            if rs >= w0 + period {
                k += 1;
            } else if rs < w0 {
                k -= 1;
            } else {
                break;
            }
            rep = self.translate(p, -k);
        }
        Ok((QuotientPoint { rep, end: *self }, k))
    }

    pub fn point(&self, p: &HPoint) -> Result<QuotientPoint> {
        Ok(self.reduce(p)?.0)
    }

    /// Number of translates of the fundamental domain met by the lifted ball
    /// `B(center, radius)`.
    pub fn copies_intersected(&self, center: &HPoint, radius: f64) -> Result<usize> {
        let disk = self.lifted_disk(center, radius)?;
        let (lo, hi) = self.slicing().s_extent(&disk);
        let w0 = self.window_start();
        let p = self.period();
        // windows [w0 + kP, w0 + (k+1)P) meeting the open interval (lo, hi)
        let k_lo = ((lo - w0) / p).floor() as i64;
        let k_hi = ((hi - w0) / p).ceil() as i64 - 1;
        Ok((k_hi - k_lo + 1).max(1) as usize)
    }

    /// Euclidean disk of the lifted ball, checked against the lifted region.
    pub fn lifted_disk(&self, center: &HPoint, radius: f64) -> Result<EuclideanDisk> {
        let disk = ball_to_euclidean(&GeodesicBall::new(*center, radius)?);
        match *self {
            EndModel::Cusp { length } => {
                if disk.cy - disk.r <= 1.0 / length {
                    return Err(Error::OutOfRegion(format!(
                        "ball of radius {radius} at height {} crosses the horocycle y = {}",
                        center.y(),
                        1.0 / length
                    )));
                }
            }
            EndModel::Funnel { .. } => {
                if disk.cx + disk.r >= 0.0 {
                    return Err(Error::OutOfRegion(format!(
                        "ball of radius {radius} at ({}, {}) crosses the funnel boundary geodesic",
                        center.x(),
                        center.y()
                    )));
                }
            }
        }
        Ok(disk)
    }

    /// Projection of a lifted row interval onto the fundamental `s`-window.
    pub fn wrap_row(&self, lo: f64, hi: f64) -> IntervalSet {
        IntervalSet::wrapped(lo, hi, self.window_start(), self.period())
    }
}

fn check_length(length: f64) -> Result<()> {
    if !(length > 0.0 && length.is_finite()) {
        return Err(Error::InvalidInput(format!("end length {length} must be positive")));
    }
    Ok(())
}

/// A point of the end, stored as its representative in the fundamental domain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuotientPoint {
    rep: HPoint,
    end: EndModel,
}

impl QuotientPoint {
    pub fn representative(&self) -> &HPoint {
        &self.rep
    }

    pub fn end(&self) -> &EndModel {
        &self.end
    }
}

/// Distance on the quotient, with the translate power realizing it.
///
/// For both ends `cosh d(p, g^k q)` is a convex function of `k` (a quadratic
/// in `k` for the cusp, `A e^{kℓ} + B e^{-kℓ} + C` for the funnel), so the
/// walk from the continuous minimizer stops at the global minimum.
pub fn quotient_distance_lifted(end: &EndModel, p: &HPoint, q: &HPoint) -> (f64, i64) {
    let k0 = match *end {
        EndModel::Cusp { .. } => (p.x() - q.x()).round() as i64,
        EndModel::Funnel { length } => {
            let r = (p.x().hypot(p.y()) / q.x().hypot(q.y())).ln();
            (r / length).round() as i64
        }
    };
    let eval = |k: i64| dist(p, &end.translate(q, k));
    let mut best_k = k0;
    let mut best = eval(k0);
    for dir in [1i64, -1] {
        let mut k = k0 + dir;
        loop {
            let d = eval(k);
            if d < best {
                best = d;
                best_k = k;
                k += dir;
            } else {
                break;
            }
        }
    }
    (best, best_k)
}

pub fn quotient_distance(p: &QuotientPoint, q: &QuotientPoint) -> Result<f64> {
    if p.end != q.end {
        return Err(Error::InvalidInput("points on different ends".into()));
    }
    Ok(quotient_distance_lifted(&p.end, &p.rep, &q.rep).0)
}

/// `c(R) = sqrt(cosh(R/2) - 1) / (sqrt 2 sinh R)`: for a cusp ball meeting `N`
/// copies, every integer `|k| < (N - 2) c(R)` has `d(z, z + k) < R/2`.
pub fn cusp_inclusion_margin(r: f64) -> f64 {
    // cosh(R/2) - 1 = 2 sinh²(R/4)
    let num = SQRT_2 * (0.25 * r).sinh();
    num / (SQRT_2 * r.sinh())
}

/// Samples of a function on the fundamental domain, periodic in `s` and
/// bilinearly interpolated; `τ` is clamped to the sampled range.
#[derive(Debug, Clone)]
pub struct GridFunction {
    end: EndModel,
    n_s: usize,
    tau_min: f64,
    tau_max: f64,
    n_tau: usize,
    /// row-major: `values[i * n_s + j]` at `(s_j, τ_i)`
    values: Vec<f64>,
}

impl GridFunction {
    pub fn sample<F: Fn(f64, f64) -> f64>(
        end: EndModel,
        n_s: usize,
        (tau_min, tau_max): (f64, f64),
        n_tau: usize,
        f: F,
    ) -> Result<Self> {
        if n_s < 2 || n_tau < 2 || !(tau_max > tau_min) {
            return Err(Error::InvalidInput("grid function needs a nondegenerate grid".into()));
        }
        let mut values = Vec::with_capacity(n_s * n_tau);
        let ds = end.period() / n_s as f64;
        for i in 0..n_tau {
            let tau = tau_min + (tau_max - tau_min) * i as f64 / (n_tau - 1) as f64;
            for j in 0..n_s {
                values.push(f(end.window_start() + j as f64 * ds, tau));
            }
        }
        Ok(Self {
            end,
            n_s,
            tau_min,
            tau_max,
            n_tau,
            values,
        })
    }

    pub fn end(&self) -> &EndModel {
        &self.end
    }

    fn tau_nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_tau).map(move |i| {
            self.tau_min + (self.tau_max - self.tau_min) * i as f64 / (self.n_tau - 1) as f64
        })
    }

    /// Node values of the row at `τ` (linear in `τ` between grid rows).
    fn row_values(&self, tau: f64) -> Vec<f64> {
        let u = ((tau - self.tau_min) / (self.tau_max - self.tau_min)).clamp(0.0, 1.0)
            * (self.n_tau - 1) as f64;
        let i = (u.floor() as usize).min(self.n_tau - 2);
        let beta = u - i as f64;
        let a = &self.values[i * self.n_s..(i + 1) * self.n_s];
        let b = &self.values[(i + 1) * self.n_s..(i + 2) * self.n_s];
        a.iter().zip(b).map(|(p, q)| (1.0 - beta) * p + beta * q).collect()
    }

    pub fn eval_chart(&self, s: f64, tau: f64) -> f64 {
        let row = self.row_values(tau);
        let ds = self.end.period() / self.n_s as f64;
        let u = (s - self.end.window_start()).rem_euclid(self.end.period()) / ds;
        let j = (u.floor() as usize).min(self.n_s - 1);
        let frac = u - j as f64;
        (1.0 - frac) * row[j] + frac * row[(j + 1) % self.n_s]
    }

    pub fn eval(&self, p: &HPoint) -> f64 {
        let (s, tau) = self.end.slicing().to_chart(p);
        self.eval_chart(s, tau)
    }

    /// Exact `∫_a^b |v(s, τ)|² ds` along a row of the periodic interpolant.
    fn row_sq_integral(&self, row: &[f64], a: f64, b: f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        let n = self.n_s;
        let period = self.end.period();
        let ds = period / n as f64;
        let w0 = self.end.window_start();
        // ∫_0^u of the square of the linear piece on cell j
        let partial = |j: usize, u: f64| -> f64 {
            let l0 = row[j];
            let l1 = l0 + (row[(j + 1) % n] - l0) * u / ds;
            u * (l0 * l0 + l0 * l1 + l1 * l1) / 3.0
        };
        let mut prefix = Vec::with_capacity(n + 1);
        prefix.push(0.0);
        for j in 0..n {
            prefix.push(prefix[j] + partial(j, ds));
        }
        let full = prefix[n];
        // antiderivative from w0
        let anti = |s: f64| -> f64 {
            let x = (s - w0) / ds;
            let cells = x.floor();
            let k = cells.div_euclid(n as f64);
            let j = (cells - k * n as f64) as usize;
            let j = j.min(n - 1);
            let off = ((x - cells) * ds).clamp(0.0, ds);
            k * full + prefix[j] + partial(j, off)
        };
        anti(b) - anti(a)
    }

    /// Kinks of a row integral over `disk`: grid rows, and the heights where
    /// a row endpoint passes a grid column.
    fn row_breaks(&self, disk: &EuclideanDisk) -> Vec<f64> {
        let sl = self.end.slicing();
        let mut out: Vec<f64> = self.tau_nodes().collect();
        let (lo, hi) = sl.s_extent(disk);
        let ds = self.end.period() / self.n_s as f64;
        let w0 = self.end.window_start();
        let first = ((lo - w0) / ds).ceil() as i64;
        let last = ((hi - w0) / ds).floor() as i64;
        for j in first..=last {
            out.extend(sl.boundary_crossings(disk, w0 + j as f64 * ds));
        }
        out
    }
}

/// Norms entering the lift comparisons for one ball.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LiftNormReport {
    pub copies: usize,
    /// `‖ṽ‖²` over the lifted ball `B_H(z̃, R)`.
    pub lifted_sq: f64,
    /// `‖v‖²` over the quotient ball `B(z, R)`.
    pub quotient_sq: f64,
    /// `‖v‖²` over the quotient ball `B(z, R/2)`.
    pub quotient_half_sq: f64,
    /// `lifted / (N · quotient)`; at most 1.
    pub ratio_hi: f64,
    /// Cusp: `2(N-2)c(R) quotient_half / lifted` (meaningful for `N ≥ 3`);
    /// funnel: `quotient / lifted`. At most 1.
    pub ratio_lo: f64,
    pub upper_holds: bool,
    /// `None` when the lower comparison does not apply (cusp with `N < 3`).
    pub lower_holds: Option<bool>,
}

pub fn lifted_norm_sq(
    v: &GridFunction,
    center: &HPoint,
    radius: f64,
    opts: QuadOptions,
) -> Result<f64> {
    let end = *v.end();
    let disk = end.lifted_disk(center, radius)?;
    let sl = end.slicing();
    let e = integrate_disk_rows(
        sl,
        &disk,
        v.row_breaks(&disk),
        |tau| match sl.row(&disk, tau) {
            Some((a, b)) => v.row_sq_integral(&v.row_values(tau), a, b),
            None => 0.0,
        },
        opts,
    )?;
    Ok(e.value)
}

pub fn quotient_norm_sq(
    v: &GridFunction,
    center: &HPoint,
    radius: f64,
    opts: QuadOptions,
) -> Result<f64> {
    let end = *v.end();
    let disk = end.lifted_disk(center, radius)?;
    let sl = end.slicing();
    let e = integrate_disk_rows(
        sl,
        &disk,
        v.row_breaks(&disk),
        |tau| match sl.row(&disk, tau) {
            Some((a, b)) => {
                let row = v.row_values(tau);
                end.wrap_row(a, b)
                    .spans()
                    .iter()
                    .map(|&(p, q)| v.row_sq_integral(&row, p, q))
                    .sum()
            }
            None => 0.0,
        },
        opts,
    )?;
    Ok(e.value)
}

/// Compare `L²` norms of a function on the fundamental domain and of its
/// periodic lift over a ball centred at `center` (any lift of the point).
pub fn lift_norm_bounds(
    v: &GridFunction,
    center: &HPoint,
    radius: f64,
    tol: f64,
) -> Result<LiftNormReport> {
    let end = *v.end();
    let opts = QuadOptions::rel(1e-2 * tol.max(1e-8)).with_abs(1e-300);
    let copies = end.copies_intersected(center, radius)?;
    let lifted_sq = lifted_norm_sq(v, center, radius, opts)?;
    let quotient_sq = quotient_norm_sq(v, center, radius, opts)?;
    let quotient_half_sq = quotient_norm_sq(v, center, 0.5 * radius, opts)?;
    let n = copies as f64;
    let slack = 1.0 + tol;
    let ratio_hi = if quotient_sq > 0.0 { lifted_sq / (n * quotient_sq) } else { 0.0 };
    let upper_holds = lifted_sq <= n * quotient_sq * slack;
    let (ratio_lo, lower_holds) = match end {
        EndModel::Cusp { .. } => {
            if copies >= 3 {
                let lhs = 2.0 * (n - 2.0) * cusp_inclusion_margin(radius) * quotient_half_sq;
                let r = if lifted_sq > 0.0 { lhs / lifted_sq } else { 0.0 };
                (r, Some(lhs <= lifted_sq * slack))
            } else {
                (0.0, None)
            }
        }
        EndModel::Funnel { .. } => {
            let r = if lifted_sq > 0.0 { quotient_sq / lifted_sq } else { 0.0 };
            (r, Some(quotient_sq <= lifted_sq * slack))
        }
    };
    Ok(LiftNormReport {
        copies,
        lifted_sq,
        quotient_sq,
        quotient_half_sq,
        ratio_hi,
        ratio_lo,
        upper_holds,
        lower_holds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::ball_volume;

    fn pt(x: f64, y: f64) -> HPoint {
        HPoint::new(x, y).unwrap()
    }

    #[test]
    fn reduce_cusp() {
        let end = EndModel::cusp(1.0).unwrap();
        let (q, k) = end.reduce(&pt(2.3, 5.0)).unwrap();
        assert_eq!(k, 2);
        assert!((q.representative().x() - 0.3).abs() < 1e-14);
        let (_, k) = end.reduce(&pt(0.1, 5.0)).unwrap();
        assert_eq!(k, 0);
        assert!(end.reduce(&pt(0.0, 0.5)).is_err());
        // half-open convention
        let (q, k) = end.reduce(&pt(0.5, 2.0)).unwrap();
        assert_eq!(k, 1);
        assert!((q.representative().x() + 0.5).abs() < 1e-15);
    }

    #[test]
    fn reduce_funnel() {
        let end = EndModel::funnel(4f64.ln()).unwrap();
        // |p| = 8 on the ray of angle 3π/4
        let a = 8.0 / SQRT_2;
        let (q, k) = end.reduce(&pt(-a, a)).unwrap();
        assert_eq!(k, 1);
        let r = q.representative();
        assert!((r.x().hypot(r.y()) - 2.0).abs() < 1e-13);
        assert!(end.in_fundamental_domain(r));
        assert!(end.reduce(&pt(1.0, 1.0)).is_err());
    }

    #[test]
    fn cusp_distance_wraps() {
        let end = EndModel::cusp(1.0).unwrap();
        let y = 40.0;
        let p = end.point(&pt(0.0, y)).unwrap();
        let q = end.point(&pt(0.45, y)).unwrap();
        let d = quotient_distance(&p, &q).unwrap();
        let direct = dist(p.representative(), q.representative());
        assert!(d <= direct);
        assert!((d - (1.0 + 0.45f64.powi(2) / (2.0 * y * y)).acosh()).abs() < 1e-12);
        let q2 = end.point(&pt(-0.45, y)).unwrap();
        let d2 = quotient_distance(&q, &q2).unwrap();
        assert!((d2 - (1.0 + 0.1f64.powi(2) / (2.0 * y * y)).acosh()).abs() < 1e-12);
        assert_eq!(quotient_distance(&p, &p).unwrap(), 0.0);
    }

    #[test]
    fn margin_values() {
        assert!((cusp_inclusion_margin(1.0) - 0.214_952).abs() < 1e-6);
        assert!((cusp_inclusion_margin(1e-6) - 0.25).abs() < 1e-9);
    }

    #[test]
    fn copies_small_and_large() {
        let end = EndModel::cusp(1.0).unwrap();
        // euclidean radius y sinh R < 1/4, centred in the copy
        assert_eq!(end.copies_intersected(&pt(0.0, 2.0), 0.1).unwrap(), 1);
        let r = 1.0;
        for &y in &[10.0, 100.0, 1000.0] {
            let n = end.copies_intersected(&pt(0.2, y), r).unwrap() as f64;
            assert!(n - 2.0 <= 2.0 * y * r.sinh());
            assert!((n - 2.0 * y * r.sinh()).abs() <= 2.0);
        }
        assert!(end.copies_intersected(&pt(0.0, 1.5), 1.0).is_err());
    }

    #[test]
    fn constant_function_norms() {
        let end = EndModel::cusp(1.0).unwrap();
        let v = GridFunction::sample(end, 8, (0.5, 200.0), 4, |_, _| 1.0).unwrap();
        let z = pt(0.1, 30.0);
        let rep = lift_norm_bounds(&v, &z, 1.0, 1e-6).unwrap();
        assert!((rep.lifted_sq / ball_volume(1.0) - 1.0).abs() < 1e-8);
        assert!(rep.upper_holds);
        assert_eq!(rep.lower_holds, Some(true));
    }

    #[test]
    fn unwrapped_ball_norms_agree() {
        let end = EndModel::cusp(1.0).unwrap();
        let v = GridFunction::sample(end, 32, (1.0, 4.0), 16, |s, t| {
            (2.0 * std::f64::consts::PI * s).cos() + t
        })
        .unwrap();
        let z = pt(0.0, 2.5);
        let r = 0.05;
        assert_eq!(end.copies_intersected(&z, r).unwrap(), 1);
        let rep = lift_norm_bounds(&v, &z, r, 1e-6).unwrap();
        assert!((rep.lifted_sq - rep.quotient_sq).abs() < 1e-12 * rep.lifted_sq);
    }
}
