//! Deterministic Gauss–Legendre quadrature with adaptive dyadic refinement,
//! plus the hyperbolic-measure integral over chart rectangles.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;
use std::sync::OnceLock;

use crate::error::{Error, Result};

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Newton iteration on `P_n` from Chebyshev-like initial guesses.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, z);
                dp = d;
                let dz = p / d;
                z -= dz;
                if dz.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, z);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - z * z) * dp * dp);
            nodes[i] = -z;
            nodes[n - 1 - i] = z;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    /// Fixed rule on `[a, b]`.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F, a: f64, b: f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(mid + half * x))
            .sum::<f64>()
            * half
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let dp = n as f64 * (x * p - p0) / (x * x - 1.0);
    (p, dp)
}

/// The default 16-point rule.
pub fn gl16() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(16))
}

#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_panels: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            abs_tol: 0.0,
            rel_tol: 1e-8,
            max_panels: 1 << 20,
        }
    }
}

impl QuadOptions {
    pub fn rel(rel_tol: f64) -> Self {
        Self {
            rel_tol,
            ..Self::default()
        }
    }

    pub fn with_abs(mut self, abs_tol: f64) -> Self {
        self.abs_tol = abs_tol;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
    pub panels: usize,
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn panel<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> Panel {
    let rule = gl16();
    let m = 0.5 * (a + b);
    let whole = rule.integrate(&mut *f, a, b);
    let left = rule.integrate(&mut *f, a, m);
    let right = rule.integrate(&mut *f, m, b);
    Panel {
        a,
        b,
        value: left + right,
        error: (whole - left - right).abs(),
    }
}

/// Globally adaptive 16-point Gauss–Legendre on `[a, b]`: the panel with the
/// largest error estimate is bisected until the total error meets the tolerance.
pub fn integrate<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    opts: QuadOptions,
) -> Result<Estimate> {
    integrate_with_breaks(&mut f, &[a, b], opts)
}

/// Same as [`integrate`] with the initial partition given by `breaks`
/// (sorted, at least two entries). Kinks of the integrand belong here.
pub fn integrate_with_breaks<F: FnMut(f64) -> f64>(
    f: &mut F,
    breaks: &[f64],
    opts: QuadOptions,
) -> Result<Estimate> {
    if breaks.len() < 2 {
        return Ok(Estimate {
            value: 0.0,
            error: 0.0,
            panels: 0,
        });
    }
    let mut heap = BinaryHeap::new();
    let mut value = 0.0;
    let mut error = 0.0;
    for w in breaks.windows(2) {
        if w[1] > w[0] {
            let p = panel(f, w[0], w[1]);
            value += p.value;
            error += p.error;
            heap.push(p);
        }
    }
    let mut panels = heap.len();
    loop {
        let tol = opts.abs_tol.max(opts.rel_tol * value.abs());
        if error <= tol || heap.is_empty() {
            return Ok(Estimate {
                value,
                error,
                panels,
            });
        }
        if panels >= opts.max_panels {
            return Err(Error::NonConvergent {
                value,
                error,
                panels,
            });
        }
        let worst = heap.pop().expect("nonempty");
        let m = 0.5 * (worst.a + worst.b);
        if m <= worst.a || m >= worst.b {
            // cannot split further in floating point
            return Err(Error::NonConvergent {
                value,
                error,
                panels,
            });
        }
        let l = panel(f, worst.a, m);
        let r = panel(f, m, worst.b);
        value += l.value + r.value - worst.value;
        error += l.error + r.error - worst.error;
        heap.push(l);
        heap.push(r);
        panels += 1;
    }
}

/// Integrate over `[a, b]` after the substitution `x = mid - half cos φ`,
/// which removes inverse-square-root and square-root endpoint behaviour
/// (e.g. chord lengths of a disk).
pub fn integrate_cos_substitution<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    opts: QuadOptions,
) -> Result<Estimate> {
    if b <= a {
        return Ok(Estimate {
            value: 0.0,
            error: 0.0,
            panels: 0,
        });
    }
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    integrate(
        |phi| {
            let (s, c) = phi.sin_cos();
            f(mid - half * c) * half * s
        },
        0.0,
        PI,
        opts,
    )
}

/// Sums [`integrate_cos_substitution`] over consecutive segments of `breaks`.
///
/// The relative tolerance applies to the total: each segment is also allowed
/// an absolute error of its share of `rel_tol` times a first-pass estimate,
/// so slivers between nearly coincident breaks do not stall. The estimate is
/// a single 16-point panel over the whole range.
pub fn integrate_segments<F: FnMut(f64) -> f64>(
    mut f: F,
    breaks: &[f64],
    opts: QuadOptions,
) -> Result<Estimate> {
    let segs: Vec<(f64, f64)> = breaks.windows(2).filter(|w| w[1] > w[0]).map(|w| (w[0], w[1])).collect();
    let rough = match (segs.first(), segs.last()) {
        (Some(&(a, _)), Some(&(_, b))) => {
            let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
            gl16().integrate(|p| f(mid - half * p.cos()) * half * p.sin(), 0.0, PI)
        }
        _ => 0.0,
    };
    let floor = opts.rel_tol * rough.abs() / segs.len().max(1) as f64;
    let seg_opts = opts.with_abs(opts.abs_tol.max(floor));
    let mut out = Estimate {
        value: 0.0,
        error: 0.0,
        panels: 0,
    };
    for (a, b) in segs {
        let e = integrate_cos_substitution(&mut f, a, b, seg_opts)?;
        out.value += e.value;
        out.error += e.error;
        out.panels += e.panels;
    }
    Ok(out)
}

/// Sorted, deduplicated breakpoints restricted to `[lo, hi]`, endpoints included.
pub fn clip_breaks(lo: f64, hi: f64, inner: impl IntoIterator<Item = f64>) -> Vec<f64> {
    let mut v: Vec<f64> = inner
        .into_iter()
        .filter(|t| t.is_finite() && *t > lo && *t < hi)
        .collect();
    v.push(lo);
    v.push(hi);
    v.sort_by(f64::total_cmp);
    v.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * (1.0 + b.abs()));
    v
}

/// Chart rectangle `[x0, x1] × [y0, y1]` in the half-plane; `y1 = None`
/// means the rectangle extends to `y = ∞`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChartRect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: Option<f64>,
}

#[derive(Debug, Clone, Copy)]
pub struct HyperbolicQuad {
    pub opts: QuadOptions,
    /// Height above which an unbounded rectangle is closed analytically.
    pub y_tail: f64,
}

impl Default for HyperbolicQuad {
    fn default() -> Self {
        Self {
            opts: QuadOptions::default(),
            y_tail: 1e4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HyperbolicEstimate {
    pub value: f64,
    pub error: f64,
    /// Bound on the analytic tail term, `sup |f(·, y_tail)| · width / y_tail`.
    pub tail_bound: f64,
}

/// `∫∫ f(x, y) dx dy / y²` over a chart rectangle.
///
/// Nested adaptive Gauss–Legendre (inner in `x`, outer in `log y`). For an
/// unbounded rectangle the region above `y_tail` contributes
/// `(1/y_tail) ∫ f(x, y_tail) dx`, exact when `f` does not depend on `y` there.
pub fn hyperbolic_integral<F: Fn(f64, f64) -> f64>(
    f: F,
    rect: ChartRect,
    cfg: HyperbolicQuad,
) -> Result<HyperbolicEstimate> {
    if !(rect.y0 > 0.0) || rect.x1 < rect.x0 {
        return Err(Error::InvalidInput(format!("chart rectangle {rect:?}")));
    }
    let top = match rect.y1 {
        Some(y1) => y1,
        None => cfg.y_tail.max(rect.y0),
    };
    let inner_opts = QuadOptions {
        rel_tol: cfg.opts.rel_tol * 0.1,
        abs_tol: cfg.opts.abs_tol * 0.1,
        ..cfg.opts
    };
    let mut inner_err = 0.0;
    let mut failure = None;
    // outer variable s = ln y, dy / y² = e^{-s} ds
    let outer = integrate(
        |s| {
            let y = s.exp();
            match integrate(|x| f(x, y), rect.x0, rect.x1, inner_opts) {
                Ok(e) => {
                    inner_err += e.error * (-s).exp();
                    e.value * (-s).exp()
                }
                Err(e) => {
                    failure.get_or_insert(e);
                    0.0
                }
            }
        },
        rect.y0.ln(),
        top.ln(),
        cfg.opts,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    let outer = outer?;
    let mut value = outer.value;
    let mut tail_bound = 0.0;
    if rect.y1.is_none() {
        let tail = integrate(|x| f(x, top), rect.x0, rect.x1, inner_opts)?;
        value += tail.value / top;
        let sup = gl16()
            .nodes
            .iter()
            .map(|t| {
                let x = rect.x0 + 0.5 * (t + 1.0) * (rect.x1 - rect.x0);
                f(x, top).abs()
            })
            .fold(0.0, f64::max);
        tail_bound = sup * (rect.x1 - rect.x0) / top;
    }
    Ok(HyperbolicEstimate {
        value,
        error: outer.error + inner_err,
        tail_bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gl_nodes_integrate_polynomials_exactly() {
        let r = GaussLegendre::new(16);
        let s: f64 = r.weights.iter().sum();
        assert!((s - 2.0).abs() < 1e-14);
        // degree 31 is exact
        let v = r.integrate(|x| x.powi(30), -1.0, 1.0);
        assert!((v - 2.0 / 31.0).abs() < 1e-14);
    }

    #[test]
    fn adaptive_handles_kink() {
        let e = integrate(|x: f64| (x - 0.3).abs(), -1.0, 1.0, QuadOptions::rel(1e-12)).unwrap();
        let exact = 0.5 * 1.3 * 1.3 + 0.5 * 0.7 * 0.7;
        assert!((e.value - exact).abs() < 1e-11);
    }

    #[test]
    fn cos_substitution_chord() {
        // area of unit disk from chord lengths
        let e = integrate_cos_substitution(
            |y: f64| 2.0 * (1.0 - y * y).max(0.0).sqrt(),
            -1.0,
            1.0,
            QuadOptions::rel(1e-13),
        )
        .unwrap();
        assert!((e.value - PI).abs() < 1e-12);
    }

    #[test]
    fn nonconvergent_reported() {
        let opts = QuadOptions {
            rel_tol: 1e-15,
            abs_tol: 0.0,
            max_panels: 4,
        };
        let r = integrate(|x: f64| (1.0 / x.abs().max(1e-300)).sqrt(), -1.0, 1.0, opts);
        assert!(matches!(r, Err(Error::NonConvergent { .. })));
    }

    #[test]
    fn cusp_domain_area() {
        for a in [0.5, 1.0, 3.0] {
            let e = hyperbolic_integral(
                |_, _| 1.0,
                ChartRect {
                    x0: 0.0,
                    x1: 1.0,
                    y0: a,
                    y1: None,
                },
                HyperbolicQuad::default(),
            )
            .unwrap();
            assert!((e.value - 1.0 / a).abs() < 1e-10, "{a}: {}", e.value);
        }
    }

    #[test]
    fn zero_weight() {
        let e = hyperbolic_integral(
            |_, _| 0.0,
            ChartRect {
                x0: -1.0,
                x1: 1.0,
                y0: 0.5,
                y1: Some(2.0),
            },
            HyperbolicQuad::default(),
        )
        .unwrap();
        assert_eq!(e.value, 0.0);
    }

    #[test]
    fn smooth_weight_closed_form() {
        // ∫_0^1 ∫_1^2 x² / y² dy dx = (1/3)(1 - 1/2)
        let e = hyperbolic_integral(
            |x, _| x * x,
            ChartRect {
                x0: 0.0,
                x1: 1.0,
                y0: 1.0,
                y1: Some(2.0),
            },
            HyperbolicQuad::default(),
        )
        .unwrap();
        assert!((e.value - 1.0 / 6.0).abs() < 1e-12);
    }
}
