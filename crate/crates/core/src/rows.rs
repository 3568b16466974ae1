//! Row decomposition of disks for integrating against the hyperbolic measure.
//!
//! Cusp-type charts slice the plane into horizontal rows `y = τ`, with the
//! along-row coordinate `s = x` and `dvol = ds dτ / τ²`. Funnel-type charts
//! slice into rays `arg z = τ`, with `s = ln |z|` and `dvol = ds dτ / sin² τ`.
//! In both cases the density depends on `τ` only and the group generator is a
//! translation in `s`, so a geodesic ball meets each row in one `s`-interval.

use crate::error::Result;
use crate::geom::{EuclideanDisk, HPoint};
use crate::quad::{self, Estimate, QuadOptions};

/// Affine parametrisation `t -> (ox + t dx, oy + t dy)` of a line in the chart.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Line {
    pub ox: f64,
    pub oy: f64,
    pub dx: f64,
    pub dy: f64,
}

impl Line {
    pub fn at(&self, t: f64) -> (f64, f64) {
        (self.ox + t * self.dx, self.oy + t * self.dy)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Slicing {
    Horizontal,
    Radial,
}

impl Slicing {
    /// `(s, τ)` coordinates of a point.
    pub fn to_chart(&self, p: &HPoint) -> (f64, f64) {
        match self {
            Slicing::Horizontal => (p.x(), p.y()),
            Slicing::Radial => (p.x().hypot(p.y()).ln(), p.y().atan2(p.x())),
        }
    }

    pub fn from_chart(&self, s: f64, tau: f64) -> HPoint {
        match self {
            Slicing::Horizontal => HPoint::new_unchecked(s, tau),
            Slicing::Radial => {
                let r = s.exp();
                HPoint::new_unchecked(r * tau.cos(), r * tau.sin())
            }
        }
    }

    pub fn density(&self, tau: f64) -> f64 {
        match self {
            Slicing::Horizontal => 1.0 / (tau * tau),
            Slicing::Radial => {
                let s = tau.sin();
                1.0 / (s * s)
            }
        }
    }

    /// The row as a line, together with the map from line parameter to `s`.
    pub fn line(&self, tau: f64) -> Line {
        match self {
            Slicing::Horizontal => Line {
                ox: 0.0,
                oy: tau,
                dx: 1.0,
                dy: 0.0,
            },
            Slicing::Radial => Line {
                ox: 0.0,
                oy: 0.0,
                dx: tau.cos(),
                dy: tau.sin(),
            },
        }
    }

    pub fn t_to_s(&self, t: f64) -> f64 {
        match self {
            Slicing::Horizontal => t,
            Slicing::Radial => t.ln(),
        }
    }

    pub fn s_to_t(&self, s: f64) -> f64 {
        match self {
            Slicing::Horizontal => s,
            Slicing::Radial => s.exp(),
        }
    }

    /// Range of `τ` met by the disk.
    pub fn tau_range(&self, d: &EuclideanDisk) -> (f64, f64) {
        match self {
            Slicing::Horizontal => (d.cy - d.r, d.cy + d.r),
            Slicing::Radial => {
                let c = d.cx.hypot(d.cy);
                let arg = d.cy.atan2(d.cx);
                let half = (d.r / c).min(1.0).asin();
                (arg - half, arg + half)
            }
        }
    }

    /// `s`-interval where the row at `τ` meets the open disk.
    pub fn row(&self, d: &EuclideanDisk, tau: f64) -> Option<(f64, f64)> {
        match self {
            Slicing::Horizontal => {
                let dy = tau - d.cy;
                let w2 = d.r * d.r - dy * dy;
                if w2 <= 0.0 {
                    return None;
                }
                let w = w2.sqrt();
                Some((d.cx - w, d.cx + w))
            }
            Slicing::Radial => {
                let (u, v) = (tau.cos(), tau.sin());
                let b = u * d.cx + v * d.cy;
                let c2 = d.cx * d.cx + d.cy * d.cy - d.r * d.r;
                let disc = b * b - c2;
                if disc <= 0.0 || b <= 0.0 {
                    return None;
                }
                let hi = b + disc.sqrt();
                let lo = c2 / hi;
                Some((lo.ln(), hi.ln()))
            }
        }
    }

    /// Values of `τ` where the disk boundary meets the curve `{s = const}`.
    pub fn boundary_crossings(&self, d: &EuclideanDisk, s: f64) -> Vec<f64> {
        match self {
            Slicing::Horizontal => {
                let w2 = d.r * d.r - (s - d.cx).powi(2);
                if w2 <= 0.0 {
                    return Vec::new();
                }
                let w = w2.sqrt();
                vec![d.cy - w, d.cy + w]
            }
            Slicing::Radial => {
                let rho = s.exp();
                let c = d.cx.hypot(d.cy);
                let cos = (rho * rho + c * c - d.r * d.r) / (2.0 * rho * c);
                if !(cos.abs() < 1.0) {
                    return Vec::new();
                }
                let arg = d.cy.atan2(d.cx);
                let half = cos.acos();
                vec![arg - half, arg + half]
            }
        }
    }

    /// Extent of `s` over the whole disk.
    pub fn s_extent(&self, d: &EuclideanDisk) -> (f64, f64) {
        match self {
            Slicing::Horizontal => (d.cx - d.r, d.cx + d.r),
            Slicing::Radial => {
                let c = d.cx.hypot(d.cy);
                ((c - d.r).ln(), (c + d.r).ln())
            }
        }
    }
}

/// `∫ density(τ) g(τ) dτ` over the `τ`-range of `disk`, where `g` returns the
/// row contribution. Extra kinks of `g` may be supplied in `breaks`.
pub fn integrate_disk_rows<G: FnMut(f64) -> f64>(
    slicing: Slicing,
    disk: &EuclideanDisk,
    breaks: impl IntoIterator<Item = f64>,
    mut g: G,
    opts: QuadOptions,
) -> Result<Estimate> {
    let (lo, hi) = slicing.tau_range(disk);
    let b = quad::clip_breaks(lo, hi, breaks);
    quad::integrate_segments(|tau| slicing.density(tau) * g(tau), &b, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{ball_to_euclidean, ball_volume, GeodesicBall};

    #[test]
    fn ball_volume_by_rows_both_slicings() {
        for &(x, y, r) in &[(0.0, 1.0, 1.0), (-2.0, 0.5, 0.25), (-3.0, 2.0, 2.0)] {
            let ball = GeodesicBall::new(HPoint::new(x, y).unwrap(), r).unwrap();
            let disk = ball_to_euclidean(&ball);
            for sl in [Slicing::Horizontal, Slicing::Radial] {
                let e = integrate_disk_rows(
                    sl,
                    &disk,
                    [],
                    |tau| sl.row(&disk, tau).map_or(0.0, |(a, b)| b - a),
                    QuadOptions::rel(1e-11),
                )
                .unwrap();
                assert!(
                    (e.value / ball_volume(r) - 1.0).abs() < 1e-9,
                    "{sl:?} {x} {y} {r}: {} vs {}",
                    e.value,
                    ball_volume(r)
                );
            }
        }
    }

    #[test]
    fn chart_roundtrip() {
        let p = HPoint::new(-1.3, 0.4).unwrap();
        for sl in [Slicing::Horizontal, Slicing::Radial] {
            let (s, t) = sl.to_chart(&p);
            let q = sl.from_chart(s, t);
            assert!((q.x() - p.x()).abs() < 1e-14 && (q.y() - p.y()).abs() < 1e-14);
        }
    }
}
