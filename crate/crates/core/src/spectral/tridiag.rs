//! Symmetric tridiagonal eigenproblems: Sturm bisection for eigenvalues,
//! inverse iteration for eigenvectors.

use crate::error::{Error, Result};

/// Symmetric tridiagonal matrix with diagonal `d` and off-diagonal `e`
/// (`e.len() == d.len() - 1`).
#[derive(Debug, Clone, PartialEq)]
pub struct SymTridiag {
    pub d: Vec<f64>,
    pub e: Vec<f64>,
}

const MAX_BISECT: usize = 400;

impl SymTridiag {
    pub fn new(d: Vec<f64>, e: Vec<f64>) -> Result<Self> {
        if d.is_empty() || e.len() + 1 != d.len() {
            return Err(Error::InvalidInput(format!(
                "tridiagonal sizes {} and {}",
                d.len(),
                e.len()
            )));
        }
        if !d.iter().chain(&e).all(|v| v.is_finite()) {
            return Err(Error::NonFinite("tridiagonal entries".into()));
        }
        Ok(Self { d, e })
    }

    pub fn len(&self) -> usize {
        self.d.len()
    }

    pub fn is_empty(&self) -> bool {
        self.d.is_empty()
    }

    /// Number of eigenvalues strictly below `x`.
    pub fn count_below(&self, x: f64) -> usize {
        let mut count = 0;
        let mut q = 1.0;
        for i in 0..self.d.len() {
            let off = if i == 0 { 0.0 } else { self.e[i - 1] * self.e[i - 1] };
            q = self.d[i] - x - if i == 0 { 0.0 } else { off / q };
            if q == 0.0 {
                q = -f64::EPSILON * (self.d[i].abs() + x.abs() + f64::MIN_POSITIVE);
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// Gershgorin interval containing the spectrum.
    pub fn gershgorin(&self) -> (f64, f64) {
        let n = self.d.len();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let r = if i > 0 { self.e[i - 1].abs() } else { 0.0 } + if i + 1 < n { self.e[i].abs() } else { 0.0 };
            lo = lo.min(self.d[i] - r);
            hi = hi.max(self.d[i] + r);
        }
        (lo, hi)
    }

    /// `j`-th smallest eigenvalue (0-based) by bisection.
    pub fn eigenvalue(&self, j: usize) -> Result<f64> {
        if j >= self.len() {
            return Err(Error::InvalidInput(format!("eigenvalue index {j} of {}", self.len())));
        }
        let (mut lo, mut hi) = self.gershgorin();
        let scale = lo.abs().max(hi.abs());
        for _ in 0..MAX_BISECT {
            let mid = 0.5 * (lo + hi);
            if hi - lo <= 2.0 * f64::EPSILON * (mid.abs() + f64::EPSILON * scale) || mid == lo || mid == hi {
                return Ok(mid);
            }
            if self.count_below(mid) > j {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Err(Error::ConvergenceFailure(format!("bisection for eigenvalue {j}")))
    }

    /// `y = T x`.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut s = self.d[i] * x[i];
                if i > 0 {
                    s += self.e[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    s += self.e[i] * x[i + 1];
                }
                s
            })
            .collect()
    }

    /// Eigenvector for eigenvalue `mu` by inverse iteration, unit 2-norm,
    /// orthogonalized against `previous`.
    pub fn eigenvector(&self, mu: f64, previous: &[Vec<f64>]) -> Result<Vec<f64>> {
        let n = self.len();
        let (lo, hi) = self.gershgorin();
        // shift slightly off the eigenvalue to keep the solve well defined
        let shift = mu + 1e-14 * (hi - lo).max(f64::MIN_POSITIVE);
        let mut x: Vec<f64> = (0..n).map(|i| 1.0 + 0.1 * ((i * 7919 % 101) as f64 / 101.0)).collect();
        let mut last_res = f64::INFINITY;
        for _ in 0..8 {
            orthogonalize(&mut x, previous);
            normalize(&mut x)?;
            x = solve_shifted(self, shift, &x)?;
            orthogonalize(&mut x, previous);
            normalize(&mut x)?;
            let tx = self.matvec(&x);
            let res = tx.iter().zip(&x).map(|(a, b)| (a - mu * b).powi(2)).sum::<f64>().sqrt();
            if res <= 4.0 * f64::EPSILON * hi.abs().max(lo.abs()) || res >= last_res {
                break;
            }
            last_res = res;
        }
        let first = x.iter().copied().find(|v| v.abs() > 1e-300).unwrap_or(1.0);
        if first < 0.0 {
            x.iter_mut().for_each(|v| *v = -*v);
        }
        Ok(x)
    }

    /// Lowest `count` eigenpairs in ascending order.
    pub fn lowest(&self, count: usize) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
        let count = count.min(self.len());
        let mut vals = Vec::with_capacity(count);
        let mut vecs: Vec<Vec<f64>> = Vec::with_capacity(count);
        for j in 0..count {
            let mu = self.eigenvalue(j)?;
            let v = self.eigenvector(mu, &vecs)?;
            vals.push(mu);
            vecs.push(v);
        }
        Ok((vals, vecs))
    }
}

fn orthogonalize(x: &mut [f64], previous: &[Vec<f64>]) {
    for p in previous {
        let c: f64 = x.iter().zip(p).map(|(a, b)| a * b).sum();
        x.iter_mut().zip(p).for_each(|(a, b)| *a -= c * b);
    }
}

fn normalize(x: &mut [f64]) -> Result<()> {
    let n = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(n > 0.0 && n.is_finite()) {
        return Err(Error::ConvergenceFailure("inverse iteration lost the vector".into()));
    }
    x.iter_mut().for_each(|v| *v /= n);
    Ok(())
}

/// Solve `(T - shift I) x = b`: Gaussian elimination with partial pivoting.
fn solve_shifted(t: &SymTridiag, shift: f64, b: &[f64]) -> Result<Vec<f64>> {
    let n = t.len();
    if n == 1 {
        let p = t.d[0] - shift;
        return Ok(vec![b[0] / if p == 0.0 { f64::EPSILON } else { p }]);
    }
    // rows stored as (diag, super, super2) after elimination
    let mut dl: Vec<f64> = t.e.clone();
    let mut dd: Vec<f64> = t.d.iter().map(|v| v - shift).collect();
    let mut du: Vec<f64> = t.e.clone();
    let mut du2 = vec![0.0; n.saturating_sub(2)];
    let mut x = b.to_vec();
    let tiny = f64::EPSILON * t.gershgorin().1.abs().max(1.0);
    for i in 0..n - 1 {
        if dd[i].abs() >= dl[i].abs() {
            if dd[i] == 0.0 {
                dd[i] = tiny;
            }
            let f = dl[i] / dd[i];
            dd[i + 1] -= f * du[i];
            x[i + 1] -= f * x[i];
            dl[i] = 0.0;
        } else {
            let f = dd[i] / dl[i];
            dd[i] = dl[i];
            let tmp = dd[i + 1];
            dd[i + 1] = du[i] - f * tmp;
            if i + 2 < n {
                du2[i] = du[i + 1];
                du[i + 1] *= -f;
            }
            du[i] = tmp;
            x.swap(i, i + 1);
            x[i + 1] -= f * x[i];
        }
    }
    if dd[n - 1] == 0.0 {
        dd[n - 1] = tiny;
    }
    x[n - 1] /= dd[n - 1];
    x[n - 2] = (x[n - 2] - du[n - 2] * x[n - 1]) / dd[n - 2];
    for i in (0..n.saturating_sub(2)).rev() {
        x[i] = (x[i] - du[i] * x[i + 1] - du2[i] * x[i + 2]) / dd[i];
    }
    if !x.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite("tridiagonal solve".into()));
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn sample(n: usize) -> SymTridiag {
        let d = (0..n).map(|i| 2.0 + (i as f64 * 0.37).sin()).collect();
        let e = (0..n - 1).map(|i| -1.0 + 0.3 * (i as f64 * 1.3).cos()).collect();
        SymTridiag::new(d, e).unwrap()
    }

    #[test]
    fn matches_dense_solver() {
        let t = sample(40);
        let mut m = DMatrix::zeros(40, 40);
        for i in 0..40 {
            m[(i, i)] = t.d[i];
            if i + 1 < 40 {
                m[(i, i + 1)] = t.e[i];
                m[(i + 1, i)] = t.e[i];
            }
        }
        let mut dense: Vec<f64> = m.symmetric_eigen().eigenvalues.iter().copied().collect();
        dense.sort_by(f64::total_cmp);
        let (vals, vecs) = t.lowest(40).unwrap();
        for (j, (a, b)) in vals.iter().zip(&dense).enumerate() {
            assert!((a - b).abs() < 1e-12, "{j}: {a} vs {b}");
            let tv = t.matvec(&vecs[j]);
            let res: f64 = tv.iter().zip(&vecs[j]).map(|(p, q)| (p - a * q).powi(2)).sum::<f64>().sqrt();
            assert!(res < 1e-10, "residual {res}");
        }
        for i in 0..40 {
            for j in 0..i {
                let dot: f64 = vecs[i].iter().zip(&vecs[j]).map(|(a, b)| a * b).sum();
                assert!(dot.abs() < 1e-10);
            }
        }
    }

    #[test]
    fn laplacian_spectrum() {
        let n = 50;
        let t = SymTridiag::new(vec![2.0; n], vec![-1.0; n - 1]).unwrap();
        for j in 0..5 {
            let exact = 2.0 - 2.0 * ((j + 1) as f64 * std::f64::consts::PI / (n + 1) as f64).cos();
            assert!((t.eigenvalue(j).unwrap() - exact).abs() < 1e-13);
        }
    }

    #[test]
    fn pivoting_solve() {
        let t = SymTridiag::new(vec![0.0, 1.0, 3.0], vec![2.0, 1.0]).unwrap();
        let x = solve_shifted(&t, 0.0, &[2.0, 4.0, 4.0]).unwrap();
        assert!(t.matvec(&x).iter().zip([2.0, 4.0, 4.0]).all(|(a, b)| (a - b).abs() < 1e-13));
    }
}
