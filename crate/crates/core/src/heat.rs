//! Volume doubling, quotients of Gaussian integrals, the exact heat kernel of
//! the hyperbolic plane with fitted Gaussian envelopes, observability
//! constants, and the thickness constants `(R, δ)` they imply.

use std::f64::consts::{LN_2, PI};
use std::io::Write;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erf;

use crate::error::{Error, Result};
use crate::geom::ball_volume;
use crate::quad::{integrate_with_breaks, QuadOptions};
use crate::sensor::SensorSet;
use crate::spectral::gram::gram_matrix;
use crate::spectral::modes::{ModeBasis, SpectralWindow};

/// Doubling constant certified on ℍ² by `4cosh²(r/2) ≤ 4e^r`.
pub const H2_DOUBLING: f64 = 4.0;
/// Envelope constants for ℍ² from [`envelope_fit`] on [`EnvelopeGrid::default`].
pub const H2_C1: f64 = 4.06;
pub const H2_C2: f64 = 0.23;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurvatureParams {
    pub n: u32,
    /// `Ric ≥ -K g`.
    pub k: f64,
    pub c_d: f64,
    pub c1: f64,
    pub c2: f64,
}

impl CurvatureParams {
    pub fn hyperbolic_plane() -> Self {
        Self { n: 2, k: 1.0, c_d: H2_DOUBLING, c1: H2_C1, c2: H2_C2 }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.n > 0
            && self.k >= 0.0
            && [self.c_d, self.c1, self.c2].iter().all(|v| v.is_finite() && *v > 0.0)
            && self.k.is_finite();
        if !ok {
            return Err(Error::InvalidInput(format!("curvature parameters {self:?}")));
        }
        Ok(())
    }
}

impl Default for CurvatureParams {
    fn default() -> Self {
        Self::hyperbolic_plane()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NecessityParams {
    #[serde(rename = "t_K")]
    pub t_k: f64,
    #[serde(rename = "alpha_K")]
    pub alpha_k: f64,
    #[serde(rename = "beta_K")]
    pub beta_k: f64,
    #[serde(rename = "m_K")]
    pub m_k: f64,
    #[serde(rename = "M_K")]
    pub big_m_k: f64,
    #[serde(rename = "M_prime_K")]
    pub big_m_prime_k: f64,
    #[serde(rename = "R")]
    pub r: f64,
    pub delta: f64,
    pub ln_delta: f64,
    /// `gaussian_quotient_bound(α_K, β_K/2, C_D)`.
    pub quotient_bound: f64,
}

// ---------------------------------------------------------------------------
// volume doubling

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DoublingSample {
    pub r: f64,
    pub ratio: f64,
    pub closed_form: f64,
    pub envelope: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterateSample {
    pub n: u32,
    pub r: f64,
    pub ratio: f64,
    pub envelope: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DoublingReport {
    pub c_d: f64,
    pub samples: Vec<DoublingSample>,
    pub iterates: Vec<IterateSample>,
    pub all_hold: bool,
}

/// `vol B(2r) / vol B(r)` on ℍ² against `C_D e^{C_D r}`, and the `n`-fold
/// iterate `vol B(2^n r) / vol B(r) ≤ C_D^n e^{C_D (2^n - 1) r}` for `n ≤ 4`.
pub fn doubling_check(r_grid: &[f64], c_d: f64) -> Result<DoublingReport> {
    if r_grid.iter().any(|r| !(*r > 0.0 && r.is_finite())) || !(c_d > 0.0) {
        return Err(Error::InvalidInput("radii and C_D must be positive".into()));
    }
    let samples: Vec<DoublingSample> = r_grid
        .iter()
        .map(|&r| {
            let ratio = ball_volume(2.0 * r) / ball_volume(r);
            let envelope = c_d * (c_d * r).exp();
            DoublingSample { r, ratio, closed_form: 4.0 * (0.5 * r).cosh().powi(2), envelope, holds: ratio <= envelope }
        })
        .collect();
    let mut iterates = Vec::new();
    for &r in r_grid {
        for n in 1..=4u32 {
            let s = 2f64.powi(n as i32);
            // log form: ratio and envelope overflow quickly
            let ln_ratio = ln_ball_volume(s * r) - ln_ball_volume(r);
            let ln_env = n as f64 * c_d.ln() + c_d * (s - 1.0) * r;
            iterates.push(IterateSample { n, r, ratio: ln_ratio.exp(), envelope: ln_env.exp(), holds: ln_ratio <= ln_env });
        }
    }
    let all_hold = samples.iter().all(|s| s.holds) && iterates.iter().all(|s| s.holds);
    Ok(DoublingReport { c_d, samples, iterates, all_hold })
}

fn ln_sinh(x: f64) -> f64 {
    if x > 20.0 {
        x - LN_2 + (-(-2.0 * x).exp()).ln_1p()
    } else {
        x.sinh().ln()
    }
}

fn ln_ball_volume(r: f64) -> f64 {
    (4.0 * PI).ln() + 2.0 * ln_sinh(0.5 * r)
}

// ---------------------------------------------------------------------------
// quotients of Gaussian integrals

fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// `ln` of `e^{-α} / (1 + Σ_{n≥0} exp(2^{n+1} C_D - 4^n β) C_D^{n+1})`.
pub fn ln_gaussian_quotient_bound(alpha: f64, beta: f64, c_d: f64) -> f64 {
    let mut terms = vec![0.0];
    let ln_cd = c_d.ln();
    for n in 0..64 {
        let t = 2f64.powi(n + 1) * c_d - 4f64.powi(n) * beta + (n + 1) as f64 * ln_cd;
        terms.push(t);
        // beyond the peak the terms fall doubly exponentially
        if t < -690.0 && 4f64.powi(n) * beta > 2f64.powi(n + 1) * c_d {
            break;
        }
    }
    -alpha - log_sum_exp(&terms)
}

/// Lower bound for `∫ e^{-α d²} / ∫ e^{-β d²}` from volume doubling.
pub fn gaussian_quotient_bound(alpha: f64, beta: f64, c_d: f64) -> f64 {
    ln_gaussian_quotient_bound(alpha, beta, c_d).exp()
}

/// `∫_{ℍ²} e^{-α d(z, z₀)²} dvol = π^{3/2} α^{-1/2} e^{1/(4α)} erf(1/(2√α))`.
pub fn gaussian_integral_closed_form(alpha: f64) -> f64 {
    PI.powf(1.5) / alpha.sqrt() * (0.25 / alpha).exp() * erf(0.5 / alpha.sqrt())
}

/// `2π ∫_0^∞ e^{-α s²} sinh s ds` by adaptive quadrature.
pub fn gaussian_integral(alpha: f64, opts: QuadOptions) -> Result<f64> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidInput(format!("alpha = {alpha}")));
    }
    // integrand peaks near s = 1/(2α); beyond s_max it is below e^{-750}
    let peak = 0.5 / alpha;
    let s_max = peak + (750.0 / alpha).sqrt() + 1.0;
    let mut breaks = vec![0.0, peak.min(s_max)];
    let w = (1.0 / alpha).sqrt();
    let mut b = peak + w;
    while b < s_max {
        breaks.push(b);
        b += 2.0 * w;
    }
    breaks.push(s_max);
    breaks.dedup();
    let mut f = |s: f64| {
        let e = -alpha * s * s;
        if s > 20.0 {
            (e + s - LN_2).exp()
        } else {
            e.exp() * s.sinh()
        }
    };
    Ok(2.0 * PI * integrate_with_breaks(&mut f, &breaks, opts)?.value)
}

/// Quotient of the two Gaussian integrals on ℍ² (center-independent).
pub fn gaussian_quotient_numeric(alpha: f64, beta: f64) -> Result<f64> {
    let o = QuadOptions::rel(1e-12).with_abs(0.0);
    Ok(gaussian_integral(alpha, o)? / gaussian_integral(beta, o)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuotientSample {
    pub alpha: f64,
    pub beta: f64,
    pub bound: f64,
    pub numeric: f64,
    pub holds: bool,
}

pub fn gaussian_quotient_grid(alphas: &[f64], betas: &[f64], c_d: f64) -> Result<Vec<QuotientSample>> {
    let mut out = Vec::with_capacity(alphas.len() * betas.len());
    for &alpha in alphas {
        for &beta in betas {
            let bound = gaussian_quotient_bound(alpha, beta, c_d);
            let numeric = gaussian_quotient_numeric(alpha, beta)?;
            out.push(QuotientSample { alpha, beta, bound, numeric, holds: bound <= numeric });
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// exact heat kernel

/// `ln p(d, t)` for `∂_t - Δ` on ℍ²:
/// `p = √2 e^{-t/4} (4πt)^{-3/2} ∫_d^∞ s e^{-s²/(4t)} (cosh s - cosh d)^{-1/2} ds`.
/// With `s = d + u²` the endpoint singularity disappears.
pub fn ln_h2_heat_kernel(d: f64, t: f64) -> Result<f64> {
    if !(t > 0.0 && t.is_finite()) || !(d >= 0.0 && d.is_finite()) {
        return Err(Error::InvalidInput(format!("heat kernel at d = {d}, t = {t}")));
    }
    // factor out e^{-d²/(4t)} and sinh(d)^{-1/2}
    let scale = if d > 0.5 { 0.5 * ln_sinh(d) } else { 0.0 };
    let g = |u: f64| {
        if u <= 0.0 {
            return 0.0;
        }
        let u2 = u * u;
        let expo = -(2.0 * d * u2 + u2 * u2) / (4.0 * t);
        let den = 0.5 * (LN_2 + ln_sinh(d + 0.5 * u2) + ln_sinh(0.5 * u2));
        2.0 * u * (d + u2) * (expo - den + scale).exp()
    };
    let w_max = -d + (d * d + 3200.0 * t).sqrt();
    let u_max = w_max.sqrt();
    // natural width in w = u²: min(2t/d, 2√t)
    let w0 = if d > 0.0 { (2.0 * t / d).min(2.0 * t.sqrt()) } else { 2.0 * t.sqrt() };
    let mut breaks = vec![0.0];
    let mut w = w0;
    while w < w_max {
        breaks.push(w.sqrt());
        w *= 2.0;
    }
    breaks.push(u_max);
    let mut g = g;
    let integral = integrate_with_breaks(&mut g, &breaks, QuadOptions::rel(1e-11).with_abs(0.0))?.value;
    if !(integral > 0.0) {
        return Err(Error::NonConvergent { value: integral, error: f64::NAN, panels: 0 });
    }
    Ok(0.5 * LN_2 - 0.25 * t - 1.5 * (4.0 * PI * t).ln() - d * d / (4.0 * t) + integral.ln() - scale)
}

pub fn h2_heat_kernel(d: f64, t: f64) -> Result<f64> {
    Ok(ln_h2_heat_kernel(d, t)?.exp())
}

/// `2π ∫_0^∞ p(s, t) sinh s ds`.
pub fn heat_kernel_mass(t: f64) -> Result<f64> {
    let s_max = t + 40.0 * t.sqrt() + 5.0;
    let n = 64;
    let breaks: Vec<f64> = (0..=n).map(|i| s_max * i as f64 / n as f64).collect();
    let err = std::cell::Cell::new(None);
    let mut f = |s: f64| match ln_h2_heat_kernel(s, t) {
        Ok(lp) => (lp + ln_sinh(s)).exp(),
        Err(e) => {
            err.set(Some(e));
            0.0
        }
    };
    let v = integrate_with_breaks(&mut f, &breaks, QuadOptions::rel(1e-10).with_abs(0.0))?.value;
    if let Some(e) = err.take() {
        return Err(e);
    }
    Ok(2.0 * PI * v)
}

// ---------------------------------------------------------------------------
// Gaussian envelopes

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvelopeGrid {
    pub d: Vec<f64>,
    pub t: Vec<f64>,
}

impl Default for EnvelopeGrid {
    /// `d ∈ {0, 0.25, …, 5}`, 12 geometric times in `[0.05, 2]`.
    fn default() -> Self {
        let d = (0..=20).map(|i| 0.25 * i as f64).collect();
        let t = (0..12).map(|i| 0.05 * 40f64.powf(i as f64 / 11.0)).collect();
        Self { d, t }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KernelSample {
    pub d: f64,
    pub t: f64,
    pub ln_p: f64,
    /// `ln vol B(√t)`.
    pub ln_vol: f64,
}

impl KernelSample {
    pub fn upper_holds(&self, c1: f64, c2: f64) -> bool {
        let d2 = self.d * self.d;
        self.ln_p <= c1.ln() - self.ln_vol - d2 / (5.0 * self.t) + c2 * (self.t + d2)
    }

    pub fn lower_holds(&self, c1: f64, c2: f64) -> bool {
        let d2 = self.d * self.d;
        self.ln_p >= -c1.ln() - self.ln_vol - d2 / (3.0 * self.t) - c2 * (self.t + d2)
    }
}

pub fn kernel_samples(grid: &EnvelopeGrid) -> Result<Vec<KernelSample>> {
    let pts: Vec<(f64, f64)> = grid.t.iter().flat_map(|&t| grid.d.iter().map(move |&d| (d, t))).collect();
    pts.par_iter()
        .map(|&(d, t)| {
            Ok(KernelSample { d, t, ln_p: ln_h2_heat_kernel(d, t)?, ln_vol: ball_volume(t.sqrt()).ln() })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnvelopeFit {
    pub c1: f64,
    pub c2: f64,
    pub retried: bool,
    pub samples: Vec<KernelSample>,
}

impl EnvelopeFit {
    pub fn all_hold(&self) -> bool {
        self.samples.iter().all(|s| s.upper_holds(self.c1, self.c2) && s.lower_holds(self.c1, self.c2))
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["d", "t", "ln_p", "ln_upper", "ln_lower"])?;
        for s in &self.samples {
            let d2 = s.d * s.d;
            let up = self.c1.ln() - s.ln_vol - d2 / (5.0 * s.t) + self.c2 * (s.t + d2);
            let lo = -self.c1.ln() - s.ln_vol - d2 / (3.0 * s.t) - self.c2 * (s.t + d2);
            wr.serialize((s.d, s.t, s.ln_p, up, lo))?;
        }
        wr.flush()?;
        Ok(())
    }
}

/// `(C₁, C₂)` minimizing `ln C₁ + C₂` over `C₂ ∈ {0, 0.01, …}` with `C₁ ≥ 1`
/// rounded up to two decimals, subject to both envelopes at every sample.
/// The search box `C₁ ≤ 10³, C₂ ≤ 10` is enlarged to `10⁶, 100` once.
pub fn envelope_fit(grid: &EnvelopeGrid) -> Result<EnvelopeFit> {
    let covers = grid.d.iter().any(|d| *d <= 0.0)
        && grid.d.iter().any(|d| *d >= 5.0)
        && grid.t.iter().any(|t| *t <= 0.05)
        && grid.t.iter().any(|t| *t >= 2.0);
    if !covers || grid.t.iter().any(|t| *t <= 0.0) {
        return Err(Error::InvalidInput("envelope grid must cover d ∈ [0, 5], t ∈ [0.05, 2]".into()));
    }
    let samples = kernel_samples(grid)?;
    // constraints ln C₁ + C₂ s_i ≥ a_i
    let cons: Vec<(f64, f64)> = samples
        .iter()
        .flat_map(|s| {
            let d2 = s.d * s.d;
            let q = s.ln_p + s.ln_vol;
            [(s.t + d2, q + d2 / (5.0 * s.t)), (s.t + d2, -q - d2 / (3.0 * s.t))]
        })
        .collect();
    for (attempt, &(c1_max, c2_max)) in [(1e3, 10.0), (1e6, 100.0)].iter().enumerate() {
        let steps = (c2_max / 0.01f64).round() as usize;
        let best = (0..=steps)
            .map(|i| {
                let c2 = 0.01 * i as f64;
                let l = cons.iter().map(|(s, a)| a - c2 * s).fold(0.0, f64::max);
                // two-decimal C₁, rounded up so the constraints stay satisfied
                let c1 = ((l.exp() * 100.0).ceil() / 100.0).max(1.0);
                (c1, c2)
            })
            .filter(|(c1, _)| *c1 <= c1_max)
            .min_by(|a, b| (a.0.ln() + a.1).total_cmp(&(b.0.ln() + b.1)));
        if let Some((c1, c2)) = best {
            let fit = EnvelopeFit { c1, c2, retried: attempt > 0, samples };
            if !fit.all_hold() {
                return Err(Error::DegenerateField("envelope fit violates a sample".into()));
            }
            return Ok(fit);
        }
    }
    Err(Error::NoFeasiblePoint("C₁ ≤ 1e6, C₂ ≤ 100".into()))
}

// ---------------------------------------------------------------------------
// observability

/// Relative threshold below which `Q` counts as singular.
pub const Q_SINGULAR_TOL: f64 = 1e-13;

/// Largest `μ` with `D c = μ Q c` over modes `λ ≤ Λ_cap`, where `D = diag(e^{-2λ²T})`
/// and `Q_{jk} = G^ω_{jk} (1 - e^{-(λ_j² + λ_k²) T}) / (λ_j² + λ_k²)`.
pub fn observability_constant(omega: &SensorSet, t: f64, basis: &ModeBasis, cap: f64) -> Result<f64> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidInput(format!("T = {t}")));
    }
    let len = basis.window_len(cap);
    if len == 0 {
        return Ok(0.0);
    }
    let g = gram_matrix(basis, omega, len)?;
    let l2: Vec<f64> = basis.modes[..len].iter().map(|m| m.lambda * m.lambda).collect();
    let q = observability_q(&g, &l2, t);
    let eig = q.clone().symmetric_eigen().eigenvalues;
    let (lo, hi) = eig.iter().fold((f64::INFINITY, 0.0f64), |(a, b), v| (a.min(*v), b.max(*v)));
    if lo <= Q_SINGULAR_TOL * hi {
        return Err(Error::SingularWindow { min_eigenvalue: lo });
    }
    let chol = q.cholesky().ok_or(Error::SingularWindow { min_eigenvalue: lo })?;
    // L⁻¹ D^{1/2}; C_obs = ‖L⁻¹ D^{1/2}‖²
    let dh = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(len, l2.iter().map(|v| (-v * t).exp())));
    let x = chol
        .l()
        .solve_lower_triangular(&dh)
        .ok_or(Error::SingularWindow { min_eigenvalue: lo })?;
    let m = &x * x.transpose();
    Ok(m.symmetric_eigen().eigenvalues.iter().copied().fold(0.0, f64::max))
}

fn observability_q(g: &DMatrix<f64>, l2: &[f64], t: f64) -> DMatrix<f64> {
    let n = l2.len();
    DMatrix::from_fn(n, n, |j, k| {
        let s = l2[j] + l2[k];
        g[(j, k)] * -(-s * t).exp_m1() / s
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ObservabilitySample {
    pub t: f64,
    pub cap: f64,
    /// `+∞` when `Q` is singular.
    pub c_obs: f64,
}

pub fn observability_table(omega: &SensorSet, times: &[f64], caps: &[f64], basis: &ModeBasis) -> Result<Vec<ObservabilitySample>> {
    let mut out = Vec::new();
    for &t in times {
        for &cap in caps {
            let c_obs = match observability_constant(omega, t, basis, cap) {
                Ok(c) => c,
                Err(Error::SingularWindow { .. }) => f64::INFINITY,
                Err(e) => return Err(e),
            };
            out.push(ObservabilitySample { t, cap, c_obs });
        }
    }
    Ok(out)
}

/// `e^{tΔ}` on a window.
pub fn heat_flow(window: &SpectralWindow, t: f64) -> SpectralWindow {
    let coeffs = window.coeffs.iter().zip(&window.lambdas).map(|(c, l)| c * (-l * l * t).exp()).collect();
    SpectralWindow { cap: window.cap, coeffs, lambdas: window.lambdas.clone() }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KernelObservability {
    /// `∫_M |p(·, z₀, t_K)|²`.
    pub lhs: f64,
    /// `∫_0^{t_K/2} ∫_ω |p(·, z₀, t_K/2 + s)|²`.
    pub observed: f64,
    pub c_obs: f64,
    pub holds: bool,
}

/// Observability applied to the truncated-cusp heat kernel from `z₀ = (θ₀, y_i)`
/// at time `t_K/2`, both sides computed spectrally on the window.
pub fn kernel_observability_check(
    omega: &SensorSet,
    basis: &ModeBasis,
    cap: f64,
    t_k: f64,
    theta0: f64,
    node: usize,
) -> Result<KernelObservability> {
    if node >= basis.domain.n {
        return Err(Error::InvalidInput(format!("node {node} of {}", basis.domain.n)));
    }
    let len = basis.window_len(cap);
    let half = 0.5 * t_k;
    let c_obs = observability_constant(omega, half, basis, cap)?;
    if len == 0 {
        return Ok(KernelObservability { lhs: 0.0, observed: 0.0, c_obs, holds: true });
    }
    let modes = &basis.modes[..len];
    let l2: Vec<f64> = modes.iter().map(|m| m.lambda * m.lambda).collect();
    let phi0: Vec<f64> = modes.iter().map(|m| m.angular.eval(theta0) * m.profile[node]).collect();
    let c: Vec<f64> = phi0.iter().zip(&l2).map(|(p, l)| p * (-l * half).exp()).collect();
    let lhs: f64 = c.iter().zip(&l2).map(|(ci, l)| (ci * (-l * half).exp()).powi(2)).sum();
    let g = gram_matrix(basis, omega, len)?;
    let q = observability_q(&g, &l2, half);
    let cv = nalgebra::DVector::from_vec(c);
    let observed = cv.dot(&(&q * &cv));
    Ok(KernelObservability { lhs, observed, c_obs, holds: lhs <= c_obs * observed * (1.0 + 1e-10) })
}

// ---------------------------------------------------------------------------
// necessity constants

/// Upper end of the radius search `0.1 · 1.1^j`.
pub const R_SEARCH_STEPS: i32 = 400;

/// Constants with `t_K = 1/(10(C₂ + 2C_D))`.
pub fn necessity_pipeline(cp: &CurvatureParams) -> Result<NecessityParams> {
    cp.validate()?;
    necessity_pipeline_at(cp, 1.0 / (10.0 * (cp.c2 + 2.0 * cp.c_d)))
}

/// Constants for an arbitrary `t_K`; fails unless `β_K > 4C_D`.
pub fn necessity_pipeline_at(cp: &CurvatureParams, t_k: f64) -> Result<NecessityParams> {
    cp.validate()?;
    if !(t_k > 0.0 && t_k.is_finite()) {
        return Err(Error::InvalidInput(format!("t_K = {t_k}")));
    }
    let (c1, c2, c_d) = (cp.c1, cp.c2, cp.c_d);
    let beta_k = 2.0 / (5.0 * t_k) - 2.0 * c2;
    if beta_k <= 4.0 * c_d {
        return Err(Error::InfeasibleCurvature { beta_k, four_cd: 4.0 * c_d });
    }
    let alpha_k = 2.0 * (c2 + 1.0 / (3.0 * t_k));
    let m_k = c1.powi(-2) * (-2.0 * c2 * t_k).exp();
    // time integral over (0, t_K/2) taken literally
    let big_m_k = 0.5 * t_k * c1 * c1 * (2.0 * c2 * t_k).exp();
    // one doubling step from √(t_K/2) to √t_K ≤ 2√(t_K/2)
    let step = c_d * (c_d * (0.5 * t_k).sqrt()).exp();
    let big_m_prime_k = big_m_k / m_k * step * step;
    let ln_bound = ln_gaussian_quotient_bound(alpha_k, 0.5 * beta_k, c_d);
    let target = ln_bound - LN_2;
    let r = (0..=R_SEARCH_STEPS)
        .map(|j| 0.1 * 1.1f64.powi(j))
        .find(|r| -0.5 * beta_k * r * r < target)
        .ok_or_else(|| Error::NoFeasiblePoint(format!("radius grid exhausted (ln bound {ln_bound})")))?;
    let ln_delta = -alpha_k * r * r - (2.0 * big_m_prime_k).ln();
    let delta = ln_delta.exp();
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::DegenerateField(format!("delta = {delta} (ln {ln_delta}) outside (0, 1)")));
    }
    Ok(NecessityParams {
        t_k,
        alpha_k,
        beta_k,
        m_k,
        big_m_k,
        big_m_prime_k,
        r,
        delta,
        ln_delta,
        quotient_bound: ln_bound.exp(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn doubling_ratio_closed_form() {
        let rep = doubling_check(&[0.01, 0.5, 1.0, 3.0], H2_DOUBLING).unwrap();
        assert!(rep.all_hold);
        for s in &rep.samples {
            assert!((s.ratio - s.closed_form).abs() < 1e-10 * s.ratio);
        }
        assert!((rep.samples[2].ratio - 5.0862).abs() < 1e-4);
    }

    #[test]
    fn bound_limits() {
        assert!((gaussian_quotient_bound(0.7, 1e6, 4.0) - (-0.7f64).exp()).abs() < 1e-15);
        let b = gaussian_quotient_bound(1.0, 1.0, 4.0);
        assert!(b > 0.0 && b < 1e-8);
        let direct: f64 = 1.0 + (0..8).map(|n| (2f64.powi(n + 1) * 4.0 - 4f64.powi(n)).exp() * 4f64.powi(n + 1)).sum::<f64>();
        assert!((b / ((-1.0f64).exp() / direct) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn worked_example_arithmetic() {
        let p = necessity_pipeline(&CurvatureParams { n: 2, k: 1.0, c_d: 1.0, c1: 1.0, c2: 1.0 }).unwrap();
        assert!((p.t_k - 1.0 / 30.0).abs() < 1e-15);
        assert!((p.beta_k - 10.0).abs() < 1e-12);
        assert!((p.alpha_k - 22.0).abs() < 1e-12);
    }

    #[test]
    fn infeasible_curvature() {
        let cp = CurvatureParams { n: 2, k: 1.0, c_d: 1.0, c1: 1.0, c2: 1.0 };
        // β_K = 2/(5 · 0.1) - 2 = 2 ≤ 4
        assert!(matches!(necessity_pipeline_at(&cp, 0.1), Err(Error::InfeasibleCurvature { .. })));
        let bad = CurvatureParams { c2: -1.0, ..cp };
        assert!(matches!(necessity_pipeline(&bad), Err(Error::InvalidInput(_))));
    }
}
