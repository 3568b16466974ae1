//! Gram matrices of eigenmodes over a sensor set and the optimal constant
//! `C(Λ) = sup ‖u‖_M / ‖u‖_ω` on the window.

use std::collections::HashMap;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use super::modes::{Angular, ModeBasis};
use crate::error::{Error, Result};
use crate::rows::Slicing;
use crate::sensor::SensorSet;

/// Smallest admissible Gram eigenvalue.
pub const SINGULAR_TOL: f64 = 1e-12;

/// `G_jk = ∫_ω φ_j φ_k dvol` over the first `len` modes: exact `θ`
/// integrals on each row section, discrete weights `h / y_i²` in `y`.
pub fn gram_matrix(basis: &ModeBasis, omega: &SensorSet, len: usize) -> Result<DMatrix<f64>> {
    let len = len.min(basis.len());
    let modes = &basis.modes[..len];
    let nodes = basis.domain.nodes();
    let weights = basis.domain.weights();
    let mut angs: Vec<Angular> = Vec::new();
    let mut slot: HashMap<Angular, usize> = HashMap::new();
    for m in modes {
        slot.entry(m.angular).or_insert_with(|| {
            angs.push(m.angular);
            angs.len() - 1
        });
    }
    let na = angs.len();
    let ids: Vec<usize> = modes.iter().map(|m| slot[&m.angular]).collect();
    let partial: Vec<Vec<f64>> = nodes
        .par_iter()
        .zip(&weights)
        .enumerate()
        .fold(
            || vec![0.0; len * len],
            |mut acc, (i, (y, w))| {
                let sec = omega.row_section(Slicing::Horizontal, *y, -0.5, 0.5);
                if sec.is_empty() {
                    return acc;
                }
                let mut ang = vec![0.0; na * na];
                for p in 0..na {
                    for q in p..na {
                        let v: f64 = sec.spans().iter().map(|&(s0, s1)| angs[p].product_integral(&angs[q], s0, s1)).sum();
                        ang[p * na + q] = v;
                        ang[q * na + p] = v;
                    }
                }
                for j in 0..len {
                    let fj = w * modes[j].profile[i];
                    for k in j..len {
                        acc[j * len + k] += fj * modes[k].profile[i] * ang[ids[j] * na + ids[k]];
                    }
                }
                acc
            },
        )
        .collect();
    let mut g = DMatrix::zeros(len, len);
    for acc in partial {
        for j in 0..len {
            for k in j..len {
                g[(j, k)] += acc[j * len + k];
            }
        }
    }
    for j in 0..len {
        for k in 0..j {
            g[(j, k)] = g[(k, j)];
        }
    }
    Ok(g)
}

pub fn min_eigenvalue(g: &DMatrix<f64>) -> f64 {
    if g.nrows() == 0 {
        return f64::INFINITY;
    }
    g.clone().symmetric_eigen().eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}

/// `C(Λ) = λ_min(G^ω)^{-1/2}` over modes with `λ ≤ Λ`; 1 for an empty window.
pub fn spectral_constant(omega: &SensorSet, cap: f64, basis: &ModeBasis) -> Result<f64> {
    let len = basis.window_len(cap);
    if len == 0 {
        return Ok(1.0);
    }
    let g = gram_matrix(basis, omega, len)?;
    let mu = min_eigenvalue(&g);
    if mu <= SINGULAR_TOL {
        return Err(Error::SingularWindow { min_eigenvalue: mu });
    }
    Ok(mu.powf(-0.5))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConstantSample {
    pub cap: f64,
    pub modes: usize,
    pub min_eigenvalue: f64,
    /// `+∞` when the window is singular.
    pub constant: f64,
}

/// `C(Λ)` on a grid of caps, sharing one Gram matrix (windows nest).
pub fn spectral_constant_profile(omega: &SensorSet, caps: &[f64], basis: &ModeBasis) -> Result<Vec<ConstantSample>> {
    let max_len = caps.iter().map(|c| basis.window_len(*c)).max().unwrap_or(0);
    let g = gram_matrix(basis, omega, max_len)?;
    Ok(caps
        .iter()
        .map(|&cap| {
            let len = basis.window_len(cap);
            let mu = if len == 0 { 1.0 } else { min_eigenvalue(&g.view((0, 0), (len, len)).into_owned()) };
            let constant = if mu <= SINGULAR_TOL { f64::INFINITY } else { mu.powf(-0.5) };
            ConstantSample { cap, modes: len, min_eigenvalue: mu, constant }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExponentialFit {
    pub c0: f64,
    pub rate: f64,
    /// RMS residual of `log C`.
    pub residual: f64,
}

/// Least squares for `log C = log C₀ + c Λ`.
pub fn fit_exponential(caps: &[f64], constants: &[f64]) -> Result<ExponentialFit> {
    if caps.len() != constants.len() || caps.len() < 3 {
        return Err(Error::InvalidInput("need at least 3 matching points".into()));
    }
    if !caps.iter().chain(constants).all(|v| v.is_finite()) || constants.iter().any(|c| *c <= 0.0) {
        return Err(Error::NonFinite("fit input".into()));
    }
    let n = caps.len() as f64;
    let ys: Vec<f64> = constants.iter().map(|c| c.ln()).collect();
    let mx = caps.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = caps.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = caps.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let rate = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let b = my - rate * mx;
    let residual = (caps.iter().zip(&ys).map(|(x, y)| (y - b - rate * x).powi(2)).sum::<f64>() / n).sqrt();
    Ok(ExponentialFit { c0: b.exp(), rate, residual })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_exponential() {
        let caps = [0.0f64, 1.0, 2.0, 3.5];
        let cs: Vec<f64> = caps.iter().map(|l| 2.0 * (3.0 * l).exp()).collect();
        let f = fit_exponential(&caps, &cs).unwrap();
        assert!((f.c0 - 2.0).abs() < 1e-12 && (f.rate - 3.0).abs() < 1e-12 && f.residual < 1e-12);
        let f = fit_exponential(&caps, &[5.0; 4]).unwrap();
        assert!(f.rate.abs() < 1e-15);
        assert!(fit_exponential(&caps, &[1.0, f64::INFINITY, 1.0, 1.0]).is_err());
    }
}
