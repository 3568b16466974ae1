//! Upper half-plane primitives: points, PSL(2,R) isometries, geodesic balls.
//!
//! The metric is `(dx² + dy²)/y²` with volume form `dx dy / y²`. Geodesic
//! balls are Euclidean disks whose center sits above the hyperbolic center:
//! `B(x + iy, R)` is the disk of center `(x, y cosh R)` and radius `y sinh R`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point `x + iy` of the upper half-plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HPoint {
    x: f64,
    y: f64,
}

impl HPoint {
    pub fn new(x: f64, y: f64) -> Result<Self> {
        if !x.is_finite() || !y.is_finite() {
            return Err(Error::NonFinite(format!("point ({x}, {y})")));
        }
        if y <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "point ({x}, {y}) is not in the upper half-plane"
            )));
        }
        Ok(Self { x, y })
    }

    /// Caller guarantees `y > 0` and finiteness.
    pub(crate) fn new_unchecked(x: f64, y: f64) -> Self {
        debug_assert!(y > 0.0 && x.is_finite() && y.is_finite(), "bad point ({x}, {y})");
        Self { x, y }
    }

    /// The point `i`.
    pub fn i() -> Self {
        Self { x: 0.0, y: 1.0 }
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn y(&self) -> f64 {
        self.y
    }
}

/// Hyperbolic distance.
///
/// Uses `sinh(d/2) = |p - q| / (2 sqrt(y_p y_q))`, which is the identity
/// `cosh d = 1 + |p - q|² / (2 y_p y_q)` rewritten so that small distances
/// keep full relative precision.
pub fn dist(p: &HPoint, q: &HPoint) -> f64 {
    let dx = p.x - q.x;
    let dy = p.y - q.y;
    let euc = dx.hypot(dy);
    2.0 * (euc / (2.0 * (p.y * q.y).sqrt())).asinh()
}

/// `cosh` of the hyperbolic distance, clamped below at 1.
pub fn cosh_dist(p: &HPoint, q: &HPoint) -> f64 {
    let dx = p.x - q.x;
    let dy = p.y - q.y;
    (1.0 + (dx * dx + dy * dy) / (2.0 * p.y * q.y)).max(1.0)
}

/// Orientation-preserving isometry `z -> (az + b)/(cz + d)` with `ad - bc = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mobius {
    a: f64,
    b: f64,
    c: f64,
    d: f64,
}

impl Mobius {
    /// Normalizes by `1/sqrt(det)`; rejects `det <= 0`.
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        if ![a, b, c, d].iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("Mobius coefficients".into()));
        }
        let det = a * d - b * c;
        if det <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "Mobius determinant {det} must be positive"
            )));
        }
        let s = det.sqrt().recip();
        Ok(Self {
            a: a * s,
            b: b * s,
            c: c * s,
            d: d * s,
        })
    }

    pub fn identity() -> Self {
        Self {
            a: 1.0,
            b: 0.0,
            c: 0.0,
            d: 1.0,
        }
    }

    /// `z -> z + t`.
    pub fn translation(t: f64) -> Self {
        Self {
            a: 1.0,
            b: t,
            c: 0.0,
            d: 1.0,
        }
    }

    /// `z -> e^l z`.
    pub fn dilation(l: f64) -> Self {
        Self {
            a: (0.5 * l).exp(),
            b: 0.0,
            c: 0.0,
            d: (-0.5 * l).exp(),
        }
    }

    /// Elliptic rotation of angle `theta` about `i`.
    pub fn rotation_about_i(theta: f64) -> Self {
        let (s, c) = (0.5 * theta).sin_cos();
        Self {
            a: c,
            b: s,
            c: -s,
            d: c,
        }
    }

    pub fn coefficients(&self) -> [f64; 4] {
        [self.a, self.b, self.c, self.d]
    }

    pub fn determinant(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    pub fn apply(&self, p: &HPoint) -> HPoint {
        // (az + b)(c conj(z) + d) / |cz + d|^2
        let (x, y) = (p.x, p.y);
        let den_re = self.c * x + self.d;
        let den_im = self.c * y;
        let den = den_re * den_re + den_im * den_im;
        assert!(den > 0.0, "degenerate Mobius image");
        let num_re = (self.a * x + self.b) * den_re + self.a * y * den_im;
        let im = y / den;
        HPoint::new_unchecked(num_re / den, im)
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Mobius) -> Mobius {
        Mobius {
            a: self.a * other.a + self.b * other.c,
            b: self.a * other.b + self.b * other.d,
            c: self.c * other.a + self.d * other.c,
            d: self.c * other.b + self.d * other.d,
        }
    }

    pub fn inverse(&self) -> Mobius {
        Mobius {
            a: self.d,
            b: -self.b,
            c: -self.c,
            d: self.a,
        }
    }
}

/// The isometry `z -> (z - x)/y`, sending `p = x + iy` to `i`.
pub fn isometry_to_origin(p: &HPoint) -> Mobius {
    let s = p.y.sqrt().recip();
    Mobius {
        a: s,
        b: -p.x * s,
        c: 0.0,
        d: p.y * s,
    }
}

/// Euclidean disk in the plane, `(x - cx)² + (y - cy)² < r²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EuclideanDisk {
    pub cx: f64,
    pub cy: f64,
    pub r: f64,
}

impl EuclideanDisk {
    pub fn contains(&self, x: f64, y: f64) -> bool {
        let dx = x - self.cx;
        let dy = y - self.cy;
        dx * dx + dy * dy < self.r * self.r
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeodesicBall {
    pub center: HPoint,
    pub radius: f64,
}

impl GeodesicBall {
    pub fn new(center: HPoint, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidInput(format!("ball radius {radius}")));
        }
        Ok(Self { center, radius })
    }

    pub fn contains(&self, p: &HPoint) -> bool {
        dist(&self.center, p) < self.radius
    }

    pub fn to_euclidean(&self) -> EuclideanDisk {
        ball_to_euclidean(self)
    }

    pub fn volume(&self) -> f64 {
        ball_volume(self.radius)
    }
}

/// Euclidean realization `B((x, y cosh R), y sinh R)`.
pub fn ball_to_euclidean(b: &GeodesicBall) -> EuclideanDisk {
    let (s, c) = (b.radius.sinh(), b.radius.cosh());
    EuclideanDisk {
        cx: b.center.x,
        cy: b.center.y * c,
        r: b.center.y * s,
    }
}

/// Inverse of [`ball_to_euclidean`] for a disk inside the open upper half-plane.
pub fn euclidean_to_ball(disk: &EuclideanDisk) -> Result<GeodesicBall> {
    if !(disk.r > 0.0 && disk.cy > disk.r) {
        return Err(Error::OutOfRegion(format!(
            "disk center height {} radius {} leaves the upper half-plane",
            disk.cy, disk.r
        )));
    }
    let radius = (disk.r / disk.cy).atanh();
    let y = ((disk.cy - disk.r) * (disk.cy + disk.r)).sqrt();
    GeodesicBall::new(HPoint::new(disk.cx, y)?, radius)
}

/// Area of a hyperbolic disk of radius `r`: `4π sinh²(r/2)`.
pub fn ball_volume(r: f64) -> f64 {
    let s = (0.5 * r).sinh();
    4.0 * PI * s * s
}

/// Hyperbolic point at distance `r` from `center` in direction `theta`
/// (angle measured at `i` after moving `center` to `i`).
pub fn exp_map(center: &HPoint, r: f64, theta: f64) -> HPoint {
    let on_axis = HPoint::new_unchecked(0.0, r.exp());
    let rotated = Mobius::rotation_about_i(theta).apply(&on_axis);
    isometry_to_origin(center).inverse().apply(&rotated)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(x: f64, y: f64) -> HPoint {
        HPoint::new(x, y).unwrap()
    }

    #[test]
    fn rejects_lower_half_plane_and_nan() {
        assert!(HPoint::new(0.0, 0.0).is_err());
        assert!(HPoint::new(0.0, -1.0).is_err());
        assert!(HPoint::new(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn vertical_distance_is_log_ratio() {
        assert!((dist(&pt(0.0, 1.0), &pt(0.0, 2.0)) - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn horizontal_translate_distance() {
        // cosh d = 1 + 1/8
        let d = dist(&pt(0.0, 2.0), &pt(1.0, 2.0));
        assert!((d - 1.125f64.acosh()).abs() < 1e-14);
        assert!((d - 0.494_933).abs() < 1e-6);
    }

    #[test]
    fn distance_zero_iff_equal() {
        let p = pt(0.3, 0.7);
        assert_eq!(dist(&p, &p), 0.0);
        assert!(dist(&p, &pt(0.3 + 1e-12, 0.7)) > 0.0);
    }

    #[test]
    fn mobius_examples() {
        let i = HPoint::i();
        assert_eq!(Mobius::identity().apply(&pt(0.4, 2.0)), pt(0.4, 2.0));
        let l = 1.7;
        let q = Mobius::dilation(l).apply(&i);
        assert!(q.x().abs() < 1e-15 && (q.y() - l.exp()).abs() < 1e-14);
        let q = Mobius::new(1.0, 1.0, 0.0, 1.0).unwrap().apply(&i);
        assert!((q.x() - 1.0).abs() < 1e-15 && (q.y() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn mobius_normalizes_and_rejects() {
        let m = Mobius::new(2.0, 0.0, 0.0, 2.0).unwrap();
        assert!((m.determinant() - 1.0).abs() < 1e-15);
        assert!(Mobius::new(0.0, 1.0, 1.0, 0.0).is_err());
        assert!(Mobius::new(1.0, 0.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn origin_isometry_matrix() {
        let p = pt(-1.5, 0.25);
        let t = isometry_to_origin(&p);
        let q = t.apply(&p);
        assert!(q.x().abs() < 1e-15 && (q.y() - 1.0).abs() < 1e-15);
        let [a, b, c, d] = t.coefficients();
        let s = 1.0 / p.y().sqrt();
        assert!((a - s).abs() < 1e-15 && (b + p.x() * s).abs() < 1e-15);
        assert_eq!(c, 0.0);
        assert!((d - p.y() * s).abs() < 1e-15);
        assert_eq!(isometry_to_origin(&HPoint::i()), Mobius::identity());
    }

    #[test]
    fn ball_examples() {
        let b = GeodesicBall::new(pt(3.0, 2.0), 2f64.ln()).unwrap();
        let e = ball_to_euclidean(&b);
        assert!((e.cx - 3.0).abs() < 1e-15);
        assert!((e.cy - 2.5).abs() < 1e-14);
        assert!((e.r - 1.5).abs() < 1e-14);
        let back = euclidean_to_ball(&e).unwrap();
        assert!((back.radius - b.radius).abs() < 1e-14);
        assert!((back.center.y() - 2.0).abs() < 1e-14);

        let tiny = ball_to_euclidean(&GeodesicBall::new(pt(1.0, 3.0), 1e-9).unwrap());
        assert!((tiny.cy - 3.0).abs() < 1e-12 && tiny.r < 1e-8);
        assert!(euclidean_to_ball(&EuclideanDisk { cx: 0.0, cy: 1.0, r: 1.0 }).is_err());
    }

    #[test]
    fn volume_examples() {
        assert!((ball_volume(2.0) - 17.355_387).abs() < 1e-6);
        let r: f64 = 1e-4;
        assert!((ball_volume(r) / (PI * r * r) - 1.0).abs() < 1e-8);
        let ratio = ball_volume(2.0) / ball_volume(1.0);
        assert!((ratio - 4.0 * 0.5f64.cosh().powi(2)).abs() < 1e-12);
        assert!((ratio - 5.086_2).abs() < 1e-4);
    }

    #[test]
    fn exp_map_distance() {
        let c = pt(0.7, 0.3);
        for k in 0..12 {
            let th = k as f64 * 0.5;
            let q = exp_map(&c, 1.3, th);
            assert!((dist(&c, &q) - 1.3).abs() < 1e-12);
        }
    }
}
