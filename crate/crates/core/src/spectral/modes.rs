//! Separated eigenmodes `Θ(θ) f(y)` of the truncated cusp and the spectral
//! projector on their span.

use std::f64::consts::{PI, SQRT_2};
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tridiag::SymTridiag;
use crate::error::{Error, Result};

/// `S¹ × (a, Y)` with metric `(dθ² + dy²)/y²`, Dirichlet at both heights,
/// `n` interior nodes in `y` and angular frequencies `|k| ≤ k_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruncatedCusp {
    pub a: f64,
    pub y_top: f64,
    pub n: usize,
    pub k_max: usize,
}

impl TruncatedCusp {
    pub fn new(a: f64, y_top: f64, n: usize, k_max: usize) -> Result<Self> {
        let c = Self { a, y_top, n, k_max };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a > 0.0 && self.y_top > self.a && self.y_top.is_finite()) {
            return Err(Error::InvalidInput(format!("heights a = {}, Y = {}", self.a, self.y_top)));
        }
        if self.n < 16 {
            return Err(Error::InvalidInput(format!("n = {} < 16 grid points", self.n)));
        }
        Ok(())
    }

    pub fn step(&self) -> f64 {
        (self.y_top - self.a) / (self.n + 1) as f64
    }

    pub fn nodes(&self) -> Vec<f64> {
        let h = self.step();
        (1..=self.n).map(|i| self.a + i as f64 * h).collect()
    }

    /// Weights `h / y_i²` of the discrete `L²(dy/y²)` inner product.
    pub fn weights(&self) -> Vec<f64> {
        let h = self.step();
        self.nodes().iter().map(|y| h / (y * y)).collect()
    }

    /// `diag(y) A diag(y)` for `A = -D² + 4π²k²`.
    pub fn radial_operator(&self, k: usize) -> SymTridiag {
        let h = self.step();
        let y = self.nodes();
        let c = 2.0 / (h * h) + 4.0 * PI * PI * (k * k) as f64;
        let d = y.iter().map(|v| v * v * c).collect();
        let e = y.windows(2).map(|w| -w[0] * w[1] / (h * h)).collect();
        SymTridiag { d, e }
    }
}

/// Angular factor, `L²(dθ)`-normalized on a period of length 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Angular {
    Const,
    Cos(usize),
    Sin(usize),
}

impl Angular {
    pub fn k(&self) -> usize {
        match *self {
            Angular::Const => 0,
            Angular::Cos(k) | Angular::Sin(k) => k,
        }
    }

    pub fn eval(&self, theta: f64) -> f64 {
        match *self {
            Angular::Const => 1.0,
            Angular::Cos(k) => SQRT_2 * (2.0 * PI * k as f64 * theta).cos(),
            Angular::Sin(k) => SQRT_2 * (2.0 * PI * k as f64 * theta).sin(),
        }
    }

    pub fn derivative(&self, theta: f64) -> f64 {
        match *self {
            Angular::Const => 0.0,
            Angular::Cos(k) => {
                let w = 2.0 * PI * k as f64;
                -SQRT_2 * w * (w * theta).sin()
            }
            Angular::Sin(k) => {
                let w = 2.0 * PI * k as f64;
                SQRT_2 * w * (w * theta).cos()
            }
        }
    }

    /// `4π²k²`.
    pub fn eigenvalue(&self) -> f64 {
        let w = 2.0 * PI * self.k() as f64;
        w * w
    }

    fn parts(&self) -> (f64, usize, bool) {
        // (amplitude, frequency, is_sin)
        match *self {
            Angular::Const => (1.0, 0, false),
            Angular::Cos(k) => (SQRT_2, k, false),
            Angular::Sin(k) => (SQRT_2, k, true),
        }
    }

    /// `∫_p^q self · other dθ`, exactly.
    pub fn product_integral(&self, other: &Angular, p: f64, q: f64) -> f64 {
        let (ca, ka, sa) = self.parts();
        let (cb, kb, sb) = other.parts();
        // ∫ cos(2π m θ) and ∫ sin(2π m θ) over [p, q]
        let icos = |m: i64| {
            if m == 0 {
                q - p
            } else {
                let w = 2.0 * PI * m as f64;
                ((w * q).sin() - (w * p).sin()) / w
            }
        };
        let isin = |m: i64| {
            if m == 0 {
                0.0
            } else {
                let w = 2.0 * PI * m as f64;
                ((w * p).cos() - (w * q).cos()) / w
            }
        };
        let (a, b) = (ka as i64, kb as i64);
        let v = match (sa, sb) {
            (false, false) => 0.5 * (icos(a - b) + icos(a + b)),
            (true, true) => 0.5 * (icos(a - b) - icos(a + b)),
            (true, false) => 0.5 * (isin(a + b) + isin(a - b)),
            (false, true) => 0.5 * (isin(a + b) - isin(a - b)),
        };
        ca * cb * v
    }
}

/// One eigenmode `φ = Θ(θ) f(y)` with `-Δφ = λ² φ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenMode {
    pub angular: Angular,
    /// Radial index, from 1.
    pub m: usize,
    pub lambda: f64,
    /// `f(y_i)` at the interior nodes, `Σ h f²/y² = 1`.
    pub profile: Vec<f64>,
}

impl EigenMode {
    pub fn k(&self) -> usize {
        self.angular.k()
    }
}

/// Modes ordered by nondecreasing `λ` (ties: by `k`, then cos before sin).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModeBasis {
    pub domain: TruncatedCusp,
    pub modes: Vec<EigenMode>,
}

/// Radial eigenpairs for one `k`: `(λ, f)` with the weighted normalization.
pub fn radial_modes(domain: &TruncatedCusp, k: usize, count: usize) -> Result<Vec<(f64, Vec<f64>)>> {
    domain.validate()?;
    let t = domain.radial_operator(k);
    let (vals, vecs) = t.lowest(count)?;
    let y = domain.nodes();
    let h = domain.step();
    let mut out = Vec::with_capacity(vals.len());
    for (mu, g) in vals.into_iter().zip(vecs) {
        if !(mu > 0.0) {
            return Err(Error::ConvergenceFailure(format!("nonpositive eigenvalue {mu} for k = {k}")));
        }
        // g has unit 2-norm; f = y g with h Σ g² = 1
        let s = h.sqrt().recip();
        let f = g.iter().zip(&y).map(|(gi, yi)| s * gi * yi).collect();
        out.push((mu.sqrt(), f));
    }
    Ok(out)
}

/// The lowest `count` modes over all `|k| ≤ k_max`, completing a cos/sin
/// pair cut by the count.
pub fn solve_modes(domain: &TruncatedCusp, count: usize) -> Result<ModeBasis> {
    domain.validate()?;
    let per_k: Vec<Vec<(f64, Vec<f64>)>> = (0..=domain.k_max)
        .into_par_iter()
        .map(|k| radial_modes(domain, k, count.min(domain.n)))
        .collect::<Result<_>>()?;
    let mut modes = Vec::new();
    for (k, list) in per_k.into_iter().enumerate() {
        for (m, (lambda, f)) in list.into_iter().enumerate() {
            if k == 0 {
                modes.push(EigenMode { angular: Angular::Const, m: m + 1, lambda, profile: f });
            } else {
                modes.push(EigenMode { angular: Angular::Cos(k), m: m + 1, lambda, profile: f.clone() });
                modes.push(EigenMode { angular: Angular::Sin(k), m: m + 1, lambda, profile: f });
            }
        }
    }
    modes.sort_by(|a, b| {
        a.lambda
            .total_cmp(&b.lambda)
            .then(a.k().cmp(&b.k()))
            .then(matches!(a.angular, Angular::Sin(_)).cmp(&matches!(b.angular, Angular::Sin(_))))
    });
    let mut keep = count.min(modes.len());
    if keep > 0 && keep < modes.len() && matches!(modes[keep - 1].angular, Angular::Cos(_)) {
        keep += 1;
    }
    modes.truncate(keep);
    Ok(ModeBasis { domain: *domain, modes })
}

/// Sampled field on `θ_j = -1/2 + j/n_theta` × interior `y` nodes,
/// `values[j * n + i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CuspGrid {
    pub n_theta: usize,
    pub n_y: usize,
    pub values: Vec<f64>,
}

impl CuspGrid {
    pub fn theta(&self, j: usize) -> f64 {
        -0.5 + j as f64 / self.n_theta as f64
    }

    pub fn at(&self, j: usize, i: usize) -> f64 {
        self.values[j * self.n_y + i]
    }
}

impl ModeBasis {
    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn lambdas(&self) -> Vec<f64> {
        self.modes.iter().map(|m| m.lambda).collect()
    }

    /// Number of leading modes with `λ ≤ Λ`.
    pub fn window_len(&self, cap: f64) -> usize {
        self.modes.partition_point(|m| m.lambda <= cap)
    }

    /// `Σ c_j φ_j` on a `θ` grid; exact discrete inverse of [`Self::analyze`]
    /// when `n_theta > 2 k_max`.
    pub fn synthesize(&self, coeffs: &[f64], n_theta: usize) -> Result<CuspGrid> {
        self.check_len(coeffs)?;
        let n = self.domain.n;
        let mut values = vec![0.0; n_theta * n];
        values.par_chunks_mut(n).enumerate().for_each(|(j, row)| {
            let th = -0.5 + j as f64 / n_theta as f64;
            for (c, mode) in coeffs.iter().zip(&self.modes) {
                let a = c * mode.angular.eval(th);
                if a != 0.0 {
                    row.iter_mut().zip(&mode.profile).for_each(|(v, f)| *v += a * f);
                }
            }
        });
        Ok(CuspGrid { n_theta, n_y: n, values })
    }

    /// Discrete `L²` coefficients of a grid field.
    pub fn analyze(&self, grid: &CuspGrid) -> Result<Vec<f64>> {
        if grid.n_y != self.domain.n {
            return Err(Error::InvalidInput("grid height mismatch".into()));
        }
        let w = self.domain.weights();
        let dt = 1.0 / grid.n_theta as f64;
        Ok(self
            .modes
            .par_iter()
            .map(|mode| {
                let mut s = 0.0;
                for j in 0..grid.n_theta {
                    let a = mode.angular.eval(grid.theta(j));
                    let row = &grid.values[j * grid.n_y..(j + 1) * grid.n_y];
                    let r: f64 = row.iter().zip(&mode.profile).zip(&w).map(|((u, f), wi)| u * f * wi).sum();
                    s += a * r;
                }
                s * dt
            })
            .collect())
    }

    /// Discrete `L²(M)` norm of a grid field.
    pub fn grid_norm(&self, grid: &CuspGrid) -> f64 {
        let w = self.domain.weights();
        let dt = 1.0 / grid.n_theta as f64;
        let s: f64 = grid
            .values
            .chunks(grid.n_y)
            .map(|row| row.iter().zip(&w).map(|(u, wi)| u * u * wi).sum::<f64>())
            .sum();
        (s * dt).sqrt()
    }

    fn check_len(&self, coeffs: &[f64]) -> Result<()> {
        if coeffs.len() != self.modes.len() {
            return Err(Error::InvalidInput(format!(
                "{} coefficients for {} modes",
                coeffs.len(),
                self.modes.len()
            )));
        }
        Ok(())
    }

    /// `Π_Λ u`.
    pub fn project(&self, coeffs: &[f64], cap: f64) -> Result<SpectralWindow> {
        self.check_len(coeffs)?;
        let n = self.window_len(cap);
        Ok(SpectralWindow { cap, coeffs: coeffs[..n].to_vec(), lambdas: self.lambdas()[..n].to_vec() })
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let header = serde_json::json!({
            "a": self.domain.a,
            "Y": self.domain.y_top,
            "n": self.domain.n,
            "k_max": self.domain.k_max,
            "modes": self.modes.len(),
        });
        writeln!(w, "# {header}")?;
        let mut wr = csv::Writer::from_writer(w);
        let mut head = vec!["k".to_string(), "parity".into(), "m".into(), "lambda".into()];
        head.extend((0..self.domain.n).map(|i| format!("f{i}")));
        wr.write_record(&head)?;
        for mode in &self.modes {
            let parity = match mode.angular {
                Angular::Const => "const",
                Angular::Cos(_) => "cos",
                Angular::Sin(_) => "sin",
            };
            let mut rec = vec![mode.k().to_string(), parity.into(), mode.m.to_string(), format!("{:e}", mode.lambda)];
            rec.extend(mode.profile.iter().map(|v| format!("{v:e}")));
            wr.write_record(&rec)?;
        }
        wr.flush()?;
        Ok(())
    }

    /// Inverse of [`Self::write_csv`]; other `#` lines are ignored.
    pub fn read_csv<R: std::io::Read>(mut r: R) -> Result<Self> {
        let mut text = String::new();
        r.read_to_string(&mut text)?;
        let mut domain = None;
        let mut body = String::new();
        for line in text.lines() {
            if let Some(rest) = line.strip_prefix('#') {
                if let Ok(v) = serde_json::from_str::<serde_json::Value>(rest.trim()) {
                    let f = |k: &str| v.get(k).and_then(|x| x.as_f64());
                    if let (Some(a), Some(y), Some(n), Some(k)) = (f("a"), f("Y"), f("n"), f("k_max")) {
                        domain = Some(TruncatedCusp::new(a, y, n as usize, k as usize)?);
                    }
                }
            } else {
                body.push_str(line);
                body.push('\n');
            }
        }
        let domain = domain.ok_or_else(|| Error::InvalidInput("mode cache without header".into()))?;
        let mut rd = csv::Reader::from_reader(body.as_bytes());
        let mut modes = Vec::new();
        let bad = |what: &str| Error::InvalidInput(format!("mode cache: bad {what}"));
        for rec in rd.records() {
            let rec = rec?;
            let k: usize = rec.get(0).and_then(|v| v.parse().ok()).ok_or_else(|| bad("k"))?;
            let angular = match rec.get(1) {
                Some("const") => Angular::Const,
                Some("cos") => Angular::Cos(k),
                Some("sin") => Angular::Sin(k),
                _ => return Err(bad("parity")),
            };
            let m = rec.get(2).and_then(|v| v.parse().ok()).ok_or_else(|| bad("m"))?;
            let lambda = rec.get(3).and_then(|v| v.parse().ok()).ok_or_else(|| bad("lambda"))?;
            let profile = rec
                .iter()
                .skip(4)
                .map(|v| v.parse::<f64>().map_err(|_| bad("profile")))
                .collect::<Result<Vec<_>>>()?;
            if profile.len() != domain.n {
                return Err(bad("profile length"));
            }
            modes.push(EigenMode { angular, m, lambda, profile });
        }
        Ok(ModeBasis { domain, modes })
    }
}

/// Coefficients of `Π_Λ u` on the leading modes with `λ ≤ Λ`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralWindow {
    pub cap: f64,
    pub coeffs: Vec<f64>,
    pub lambdas: Vec<f64>,
}

impl SpectralWindow {
    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    /// Coefficients padded with zeros to the full basis.
    pub fn padded(&self, len: usize) -> Vec<f64> {
        let mut v = self.coeffs.clone();
        v.resize(len, 0.0);
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MultiplierReport {
    pub lhs: f64,
    pub sup: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// `‖φ(√-Δ) Π_Λ u‖ ≤ sup_{[0, Λ]} |φ| ‖Π_Λ u‖`; the sup is taken over a
/// dense grid of `[0, Λ]` together with the window frequencies.
pub fn multiplier_bound_check<F: Fn(f64) -> f64>(phi: F, window: &SpectralWindow) -> MultiplierReport {
    let lhs = window
        .coeffs
        .iter()
        .zip(&window.lambdas)
        .map(|(c, l)| (phi(*l) * c).powi(2))
        .sum::<f64>()
        .sqrt();
    let grid = 4096;
    let sup = (0..=grid)
        .map(|i| window.cap * i as f64 / grid as f64)
        .chain(window.lambdas.iter().copied())
        .map(|l| phi(l).abs())
        .fold(0.0, f64::max);
    let rhs = sup * window.norm();
    MultiplierReport { lhs, sup, rhs, holds: lhs <= rhs * (1.0 + 1e-12) }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_cache_round_trip() {
        let d = TruncatedCusp::new(1.0, 4.0, 32, 2).unwrap();
        let b = solve_modes(&d, 8).unwrap();
        let mut buf = b"# config_hash = x\n".to_vec();
        b.write_csv(&mut buf).unwrap();
        let back = ModeBasis::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back.domain, b.domain);
        assert_eq!(back.modes, b.modes);
    }

    #[test]
    fn angular_integrals_orthonormal() {
        let fs = [Angular::Const, Angular::Cos(1), Angular::Sin(1), Angular::Cos(3), Angular::Sin(2)];
        for a in &fs {
            for b in &fs {
                let v = a.product_integral(b, -0.5, 0.5);
                let e = if a == b { 1.0 } else { 0.0 };
                assert!((v - e).abs() < 1e-14, "{a:?} {b:?} {v}");
            }
        }
        // against midpoint quadrature on a sub-interval
        let (p, q) = (0.13, 0.61);
        for a in &fs {
            for b in &fs {
                let n = 20000;
                let h = (q - p) / n as f64;
                let num: f64 = (0..n).map(|i| {
                    let t = p + (i as f64 + 0.5) * h;
                    a.eval(t) * b.eval(t) * h
                }).sum();
                assert!((a.product_integral(b, p, q) - num).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn lower_bound_on_k_modes() {
        let d = TruncatedCusp::new(1.0, 6.0, 200, 3).unwrap();
        let b = solve_modes(&d, 20).unwrap();
        for m in &b.modes {
            assert!(m.lambda > 0.0);
            assert!(m.lambda >= 2.0 * PI * m.k() as f64 * d.a);
        }
        for w in b.modes.windows(2) {
            assert!(w[0].lambda <= w[1].lambda);
        }
    }

    #[test]
    fn weighted_normalization() {
        let d = TruncatedCusp::new(0.5, 4.0, 64, 2).unwrap();
        let b = solve_modes(&d, 10).unwrap();
        let w = d.weights();
        for m in &b.modes {
            let s: f64 = m.profile.iter().zip(&w).map(|(f, wi)| f * f * wi).sum();
            assert!((s - 1.0).abs() < 1e-10);
        }
    }
}
