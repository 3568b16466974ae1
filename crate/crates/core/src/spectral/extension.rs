//! Harmonic extension `v(t) = Σ sinh(λt)/λ c φ`, its PDE residual and the
//! `H³` energy bound.

use rayon::prelude::*;
use serde::Serialize;

use super::modes::{EigenMode, ModeBasis, SpectralWindow};
use crate::error::{Error, Result};

/// Largest admissible `Λ T`.
pub const SINH_GUARD: f64 = 700.0;

#[derive(Debug, Clone)]
pub struct HarmonicExtension {
    pub window: SpectralWindow,
    pub modes: Vec<EigenMode>,
    pub t_max: f64,
    pub t: Vec<f64>,
    pub n_theta: usize,
    pub nodes: Vec<f64>,
    pub h_y: f64,
    /// `values[(it * n_theta + j) * n_y + i]`.
    pub values: Vec<f64>,
}

fn guard(window: &SpectralWindow, t: f64) -> Result<()> {
    let top = window.lambdas.iter().copied().fold(0.0, f64::max).max(if window.cap.is_finite() { window.cap } else { 0.0 });
    if top * t > SINH_GUARD {
        return Err(Error::Overflow(top * t));
    }
    Ok(())
}

/// `sinh(λt)/λ`.
fn sinhc(lambda: f64, t: f64) -> f64 {
    (lambda * t).sinh() / lambda
}

impl HarmonicExtension {
    pub fn n_y(&self) -> usize {
        self.nodes.len()
    }

    pub fn at(&self, it: usize, j: usize, i: usize) -> f64 {
        self.values[(it * self.n_theta + j) * self.n_y() + i]
    }

    pub fn theta(&self, j: usize) -> f64 {
        -0.5 + j as f64 / self.n_theta as f64
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `v` at an arbitrary time on the stored `(θ, y)` grid.
    pub fn slice_at(&self, t: f64, d: TimeDerivative) -> Vec<f64> {
        field_slice(&self.window, &self.modes, t, self.n_theta, d)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimeDerivative {
    Zero,
    First,
    Second,
}

fn field_slice(window: &SpectralWindow, modes: &[EigenMode], t: f64, n_theta: usize, d: TimeDerivative) -> Vec<f64> {
    let n = modes.first().map_or(0, |m| m.profile.len());
    let mut out = vec![0.0; n_theta * n];
    out.par_chunks_mut(n.max(1)).enumerate().for_each(|(j, row)| {
        let th = -0.5 + j as f64 / n_theta as f64;
        for ((c, l), mode) in window.coeffs.iter().zip(&window.lambdas).zip(modes) {
            let tf = match d {
                TimeDerivative::Zero => sinhc(*l, t),
                TimeDerivative::First => (l * t).cosh(),
                TimeDerivative::Second => l * (l * t).sinh(),
            };
            let a = c * tf * mode.angular.eval(th);
            if a != 0.0 {
                row.iter_mut().zip(&mode.profile).for_each(|(v, f)| *v += a * f);
            }
        }
    });
    out
}

/// Samples `v` on `t_points` uniform times in `[-T, T]` (an odd count puts
/// a sample at `t = 0`) and `n_theta` angles.
pub fn harmonic_extension(
    basis: &ModeBasis,
    window: &SpectralWindow,
    t_max: f64,
    t_points: usize,
    n_theta: usize,
) -> Result<HarmonicExtension> {
    if !(t_max > 0.0 && t_max.is_finite()) || t_points < 3 || n_theta < 3 {
        return Err(Error::InvalidInput(format!("extension grid T = {t_max}, {t_points} times, {n_theta} angles")));
    }
    guard(window, t_max)?;
    if window.len() > basis.len() {
        return Err(Error::InvalidInput("window longer than basis".into()));
    }
    let modes = basis.modes[..window.len()].to_vec();
    let t: Vec<f64> = (0..t_points)
        .map(|i| -t_max + 2.0 * t_max * i as f64 / (t_points - 1) as f64)
        .collect();
    let mut values = Vec::with_capacity(t_points * n_theta * basis.domain.n);
    for &ti in &t {
        if window.is_empty() {
            values.extend(std::iter::repeat_n(0.0, n_theta * basis.domain.n));
        } else {
            values.extend(field_slice(window, &modes, ti, n_theta, TimeDerivative::Zero));
        }
    }
    Ok(HarmonicExtension {
        window: window.clone(),
        modes,
        t_max,
        t,
        n_theta,
        nodes: basis.domain.nodes(),
        h_y: basis.domain.step(),
        values,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ResidualMode {
    /// Central differences in `t`, `θ` and `y` on the stored grid.
    FiniteDifference,
    /// Exact `t` and `θ` derivatives; the `y` operator is the discrete one the
    /// modes diagonalize, so the residual is pure rounding.
    Spectral,
}

/// `max |(∂_t² + Δ_g) v| / max |v|` over interior times and all `(θ, y)`
/// nodes (Dirichlet zeros beyond the `y` range).
pub fn extension_residual(ext: &HarmonicExtension, mode: ResidualMode) -> f64 {
    let vmax = ext.max_abs();
    if vmax == 0.0 {
        return 0.0;
    }
    let ny = ext.n_y();
    let nth = ext.n_theta;
    let hy2 = ext.h_y * ext.h_y;
    match mode {
        ResidualMode::FiniteDifference => {
            let ht = ext.t[1] - ext.t[0];
            let hth = 1.0 / nth as f64;
            (1..ext.t.len() - 1)
                .into_par_iter()
                .map(|it| {
                    let mut m: f64 = 0.0;
                    for j in 0..nth {
                        let jp = (j + 1) % nth;
                        let jm = (j + nth - 1) % nth;
                        for i in 0..ny {
                            let v = ext.at(it, j, i);
                            let vtt = (ext.at(it + 1, j, i) - 2.0 * v + ext.at(it - 1, j, i)) / (ht * ht);
                            let vthth = (ext.at(it, jp, i) - 2.0 * v + ext.at(it, jm, i)) / (hth * hth);
                            let up = if i + 1 < ny { ext.at(it, j, i + 1) } else { 0.0 };
                            let dn = if i > 0 { ext.at(it, j, i - 1) } else { 0.0 };
                            let vyy = (up - 2.0 * v + dn) / hy2;
                            let y = ext.nodes[i];
                            m = m.max((vtt + y * y * (vthth + vyy)).abs());
                        }
                    }
                    m
                })
                .reduce(|| 0.0, f64::max)
                / vmax
        }
        ResidualMode::Spectral => {
            // per mode: λ sinh(λt) Θ f + sinh(λt)/λ Θ (y² D² f - 4π²k² y² f)
            let lap: Vec<Vec<f64>> = ext
                .modes
                .iter()
                .map(|mode| {
                    let f = &mode.profile;
                    let k2 = mode.angular.eigenvalue();
                    (0..ny)
                        .map(|i| {
                            let up = if i + 1 < ny { f[i + 1] } else { 0.0 };
                            let dn = if i > 0 { f[i - 1] } else { 0.0 };
                            let y2 = ext.nodes[i] * ext.nodes[i];
                            y2 * ((up - 2.0 * f[i] + dn) / hy2 - k2 * f[i])
                        })
                        .collect()
                })
                .collect();
            ext.t
                .par_iter()
                .map(|&t| {
                    let mut m: f64 = 0.0;
                    let mut row = vec![0.0; ny];
                    for j in 0..nth {
                        let th = ext.theta(j);
                        row.iter_mut().for_each(|v| *v = 0.0);
                        for (((c, l), mode), lf) in
                            ext.window.coeffs.iter().zip(&ext.window.lambdas).zip(&ext.modes).zip(&lap)
                        {
                            let a = c * mode.angular.eval(th);
                            let s = (l * t).sinh();
                            for i in 0..ny {
                                row[i] += a * (l * s * mode.profile[i] + s / l * lf[i]);
                            }
                        }
                        m = row.iter().fold(m, |acc, v| acc.max(v.abs()));
                    }
                    m
                })
                .reduce(|| 0.0, f64::max)
                / vmax
        }
    }
}

/// `∫_{-T}^{T} sinh²(λt) dt / λ²` and `∫_{-T}^{T} cosh²(λt) dt`, each times `e^{-2 s}`.
pub fn time_integrals_scaled(lambda: f64, t: f64, s: f64) -> (f64, f64) {
    let x = lambda * t;
    let e = (-2.0 * s).exp();
    // sinh(2x)/(2λ) e^{-2s} without overflow
    let half = ((2.0 * x - 2.0 * s).exp() - (-2.0 * x - 2.0 * s).exp()) / (4.0 * lambda);
    let sinh_part = if x < 0.1 {
        // (sinh 2x - 2x)/(2λ) by series in u = 2x
        let u = 2.0 * x;
        let u2 = u * u;
        let series = u * u2 / 6.0 * (1.0 + u2 / 20.0 * (1.0 + u2 / 42.0 * (1.0 + u2 / 72.0 * (1.0 + u2 / 110.0))));
        series / (2.0 * lambda) * e
    } else {
        half - t * e
    };
    (sinh_part / (lambda * lambda), half + t * e)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyReport {
    /// `ln ‖w‖_{H³((-T,T) × M)}`; `-∞` for a zero window.
    pub log_norm: f64,
    /// `‖w‖_{H³} / (Λ³ T e^{ΛT} ‖u‖)`.
    pub ratio: f64,
}

/// Spectral `H³` norm of `w = v` on `(-T, T)`, compared with `Λ³ T e^{ΛT} ‖u‖`.
pub fn energy_bound_check(window: &SpectralWindow, t: f64) -> Result<EnergyReport> {
    guard(window, t)?;
    let cap = window.cap;
    let unorm = window.norm();
    if window.is_empty() || unorm == 0.0 {
        return Ok(EnergyReport { log_norm: f64::NEG_INFINITY, ratio: 0.0 });
    }
    let s = cap * t;
    let mut total = 0.0;
    for (c, &l) in window.coeffs.iter().zip(&window.lambdas) {
        let (is, ic) = time_integrals_scaled(l, t, s);
        let w = 1.0 + l * l;
        // j = 0..3: ‖∂_t^j w‖²_{H^{3-j}}
        let l4 = l.powi(4);
        let sum = w.powi(3) * is + w * w * ic + w * l4 * is + l4 * ic;
        total += c * c * sum;
    }
    let log_norm = 0.5 * total.ln() + s;
    let ratio = total.sqrt() / (cap.powi(3) * t * unorm);
    Ok(EnergyReport { log_norm, ratio })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::{integrate, QuadOptions};

    #[test]
    fn closed_form_time_integrals() {
        for &(l, t) in &[(0.3, 0.2), (2.0, 1.5), (7.0, 0.9), (0.01, 3.0)] {
            let o = QuadOptions::rel(1e-13);
            let ns = integrate(|s: f64| (l * s).sinh().powi(2), -t, t, o).unwrap().value / (l * l);
            let nc = integrate(|s: f64| (l * s).cosh().powi(2), -t, t, o).unwrap().value;
            let (a, b) = time_integrals_scaled(l, t, 0.0);
            assert!((a / ns - 1.0).abs() < 1e-8, "{l} {t}: {a} {ns}");
            assert!((b / nc - 1.0).abs() < 1e-8);
        }
    }
}
