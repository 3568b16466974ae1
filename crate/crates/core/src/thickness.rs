//! Thickness of sensor sets: `vol(B_z(R) ∩ ω) / vol(B_z(R)) ≥ δ` over centres.

use std::io::Write;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{ball_to_euclidean, GeodesicBall, HPoint};
use crate::quad::QuadOptions;
use crate::quotient::EndModel;
use crate::rng;
use crate::rows::{integrate_disk_rows, Slicing};
use crate::sensor::SensorSet;

/// A ball in `ℍ` or in an end.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BallSpec {
    Ambient(GeodesicBall),
    /// Ball on the end around the class of `center` (any lift).
    Quotient {
        end: EndModel,
        center: HPoint,
        radius: f64,
    },
}

impl BallSpec {
    pub fn center(&self) -> HPoint {
        match self {
            BallSpec::Ambient(b) => b.center,
            BallSpec::Quotient { center, .. } => *center,
        }
    }
}

/// `∫_{B ∩ ω} dvol`, by rows. Quotient balls are the wrapped projection of the
/// lifted ball onto the fundamental window, intersected with `ω` there.
pub fn measure_intersection(omega: &SensorSet, ball: &BallSpec, opts: QuadOptions) -> Result<f64> {
    match ball {
        BallSpec::Ambient(b) => {
            let disk = ball_to_euclidean(b);
            let sl = Slicing::Horizontal;
            let e = integrate_disk_rows(
                sl,
                &disk,
                omega.row_breaks(sl),
                |tau| match sl.row(&disk, tau) {
                    Some((lo, hi)) => omega.row_section(sl, tau, lo, hi).measure(),
                    None => 0.0,
                },
                opts,
            )?;
            Ok(e.value)
        }
        BallSpec::Quotient { end, center, radius } => {
            let disk = end.lifted_disk(center, *radius)?;
            let sl = end.slicing();
            let e = integrate_disk_rows(
                sl,
                &disk,
                omega.row_breaks(sl),
                |tau| match sl.row(&disk, tau) {
                    Some((lo, hi)) => {
                        let cover = end.wrap_row(lo, hi);
                        cover.intersect(&omega.fundamental_section(end, tau)).measure()
                    }
                    None => 0.0,
                },
                opts,
            )?;
            Ok(e.value)
        }
    }
}

/// Volume of the ball itself (on an end this is smaller than `4π sinh²(R/2)`
/// once the ball wraps).
pub fn ball_measure(ball: &BallSpec, opts: QuadOptions) -> Result<f64> {
    match ball {
        BallSpec::Ambient(b) => Ok(b.volume()),
        _ => measure_intersection(&SensorSet::full(), ball, opts),
    }
}

/// Centre region for a thickness profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProfileRegion {
    /// Ambient centres with `x ∈ [x0, x1]`, `y ∈ [y0, y1]`, log-stratified in `y`.
    Plane { x0: f64, x1: f64, y0: f64, y1: f64 },
    /// Cusp centres from the lowest height whose ball stays above the
    /// horocycle, up to `y_max`.
    Cusp { length: f64, y_max: f64 },
    /// Funnel centres at distance `(R, d_max]` from the boundary geodesic.
    Funnel { length: f64, d_max: f64 },
}

#[derive(Debug, Clone, Copy)]
pub struct ProfileOptions {
    /// Total stratified centres (rounded to a square grid).
    pub center_samples: usize,
    pub seed: u64,
    pub quad: QuadOptions,
    pub adversarial: bool,
}

impl Default for ProfileOptions {
    fn default() -> Self {
        Self {
            center_samples: 64 * 64,
            seed: 0,
            quad: QuadOptions::rel(1e-6).with_abs(1e-300),
            adversarial: true,
        }
    }
}

pub const DEFAULT_Y_MAX: f64 = 1e3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CenterSample {
    pub center_x: f64,
    pub center_y: f64,
    pub vol_ball: f64,
    pub vol_cap: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ThicknessReport {
    pub radius: f64,
    pub region: ProfileRegion,
    pub delta_min: f64,
    pub argmin: (f64, f64),
    /// `min vol(B ∩ ω)` over the same centres.
    pub mass_min: f64,
    pub mass_argmin: (f64, f64),
    /// Membership may change above the sampled heights.
    pub unverified: bool,
    /// Only sampled centres were checked; `delta_min > 0` on them.
    pub certified_on_samples: bool,
    #[serde(skip)]
    pub samples: Vec<CenterSample>,
}

impl ThicknessReport {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        for s in &self.samples {
            wr.serialize(s)?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn summary_json(&self) -> Result<String> {
        let mut v = serde_json::to_value(self)?;
        v["center_count"] = self.samples.len().into();
        Ok(serde_json::to_string_pretty(&v)?)
    }
}

pub fn is_thick(report: &ThicknessReport, delta: f64) -> bool {
    report.delta_min >= delta
}

fn grid_side(n: usize) -> usize {
    ((n as f64).sqrt().round() as usize).max(1)
}

/// Stratified jittered centres, in the coordinates of the region.
fn stratified_centers(region: &ProfileRegion, radius: f64, n: usize, seed: u64) -> Result<Vec<HPoint>> {
    let side = grid_side(n);
    let mut r = rng::stream(seed, 0x7417);
    let mut out = Vec::with_capacity(side * side);
    let (u_range, v_range) = match *region {
        ProfileRegion::Plane { x0, x1, y0, y1 } => {
            if !(y0 > 0.0 && y1 >= y0 && x1 >= x0) {
                return Err(Error::InvalidInput(format!("profile region {region:?}")));
            }
            ((x0, x1), (y0.ln(), y1.ln()))
        }
        ProfileRegion::Cusp { length, y_max } => {
            EndModel::cusp(length)?;
            let lo = radius - length.ln() + 1e-6;
            if y_max.ln() <= lo {
                return Err(Error::EmptyRegion(format!(
                    "no cusp centre of radius-{radius} ball below y_max = {y_max}"
                )));
            }
            ((-0.5, 0.5), (lo, y_max.ln()))
        }
        ProfileRegion::Funnel { length, d_max } => {
            EndModel::funnel(length)?;
            let lo = radius + 1e-6;
            if d_max <= lo {
                return Err(Error::EmptyRegion(format!("funnel band (R, {d_max}] is empty")));
            }
            ((0.0, length), (lo, d_max))
        }
    };
    for i in 0..side {
        for j in 0..side {
            let a = (j as f64 + r.random::<f64>()) / side as f64;
            let b = (i as f64 + r.random::<f64>()) / side as f64;
            let u = u_range.0 + a * (u_range.1 - u_range.0);
            let v = v_range.0 + b * (v_range.1 - v_range.0);
            out.push(region_point(region, u, v));
        }
    }
    Ok(out)
}

fn region_point(region: &ProfileRegion, u: f64, v: f64) -> HPoint {
    match region {
        ProfileRegion::Plane { .. } | ProfileRegion::Cusp { .. } => HPoint::new_unchecked(u, v.exp()),
        ProfileRegion::Funnel { .. } => {
            // ln|z| = u, distance v to the imaginary axis
            let r = u.exp();
            HPoint::new_unchecked(-r * v.tanh(), r / v.cosh())
        }
    }
}

fn ball_for(region: &ProfileRegion, center: HPoint, radius: f64) -> Result<BallSpec> {
    Ok(match *region {
        ProfileRegion::Plane { .. } => BallSpec::Ambient(GeodesicBall::new(center, radius)?),
        ProfileRegion::Cusp { length, .. } => BallSpec::Quotient {
            end: EndModel::cusp(length)?,
            center,
            radius,
        },
        ProfileRegion::Funnel { length, .. } => BallSpec::Quotient {
            end: EndModel::funnel(length)?,
            center,
            radius,
        },
    })
}

fn admissible(region: &ProfileRegion, p: &HPoint, radius: f64) -> bool {
    match *region {
        ProfileRegion::Plane { x0, x1, y0, y1 } => {
            p.x() >= x0 && p.x() <= x1 && p.y() >= y0 && p.y() <= y1
        }
        ProfileRegion::Cusp { length, y_max } => {
            p.y() * (-radius).exp() > 1.0 / length && p.y() <= y_max
        }
        ProfileRegion::Funnel { d_max, .. } => {
            let d = (-p.x() / p.y()).asinh();
            p.x() < 0.0 && d > radius && d <= d_max
        }
    }
}

/// Evaluate the thickness ratio on stratified centres plus centres on the
/// boundaries of the primitives of `ω`.
pub fn thickness_profile(
    omega: &SensorSet,
    region: ProfileRegion,
    radius: f64,
    opts: ProfileOptions,
) -> Result<ThicknessReport> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::InvalidInput(format!("radius {radius}")));
    }
    let mut centers = stratified_centers(&region, radius, opts.center_samples, opts.seed)?;
    if opts.adversarial {
        let heights: Vec<f64> = match region {
            ProfileRegion::Plane { y0, y1, .. } => vec![y0, (y0 * y1).sqrt(), y1],
            ProfileRegion::Cusp { length, y_max } => {
                let lo = radius.exp() / length * (1.0 + 1e-6);
                vec![lo, (lo * y_max).sqrt(), y_max]
            }
            ProfileRegion::Funnel { .. } => vec![1.0],
        };
        for (x, y) in omega.boundary_probes(&heights) {
            let p = HPoint::new_unchecked(x, y);
            let p = match region {
                ProfileRegion::Plane { .. } => p,
                ProfileRegion::Cusp { length, .. } => EndModel::cusp(length)?.reduce(&p)?.0.representative().to_owned(),
                ProfileRegion::Funnel { length, .. } => {
                    if p.x() >= 0.0 {
                        continue;
                    }
                    EndModel::funnel(length)?.reduce(&p)?.0.representative().to_owned()
                }
            };
            if admissible(&region, &p, radius) {
                centers.push(p);
            }
        }
    }
    let samples: Vec<CenterSample> = centers
        .par_iter()
        .map(|c| {
            let ball = ball_for(&region, *c, radius)?;
            let vol_ball = ball_measure(&ball, opts.quad)?;
            let vol_cap = measure_intersection(omega, &ball, opts.quad)?;
            Ok(CenterSample {
                center_x: c.x(),
                center_y: c.y(),
                vol_ball,
                vol_cap,
                ratio: vol_cap / vol_ball,
            })
        })
        .collect::<Result<_>>()?;
    let pick = |key: fn(&CenterSample) -> f64| {
        samples
            .iter()
            .min_by(|a, b| key(a).total_cmp(&key(b)))
            .map(|s| (key(s), (s.center_x, s.center_y)))
            .unwrap_or((f64::NAN, (f64::NAN, f64::NAN)))
    };
    let (delta_min, argmin) = pick(|s| s.ratio);
    let (mass_min, mass_argmin) = pick(|s| s.vol_cap);
    let unverified = match region {
        ProfileRegion::Cusp { y_max, .. } => {
            omega.stationary_above().is_none_or(|h| h > y_max * (-radius).exp())
        }
        _ => false,
    };
    Ok(ThicknessReport {
        radius,
        region,
        delta_min,
        argmin,
        mass_min,
        mass_argmin,
        unverified,
        certified_on_samples: delta_min > 0.0,
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::ball_volume;

    fn quick() -> ProfileOptions {
        ProfileOptions {
            center_samples: 64,
            ..Default::default()
        }
    }

    #[test]
    fn full_and_empty() {
        let b = BallSpec::Ambient(GeodesicBall::new(HPoint::new(0.3, 2.0).unwrap(), 1.5).unwrap());
        let o = QuadOptions::rel(1e-9);
        let full = measure_intersection(&SensorSet::full(), &b, o).unwrap();
        assert!((full / ball_volume(1.5) - 1.0).abs() < 1e-8);
        assert_eq!(measure_intersection(&SensorSet::empty(), &b, o).unwrap(), 0.0);
    }

    #[test]
    fn unwrapped_quotient_ball_has_full_volume() {
        let end = EndModel::cusp(1.0).unwrap();
        let b = BallSpec::Quotient { end, center: HPoint::new(0.1, 4.0).unwrap(), radius: 0.1 };
        let v = ball_measure(&b, QuadOptions::rel(1e-10)).unwrap();
        assert!((v / ball_volume(0.1) - 1.0).abs() < 1e-8);
        let end = EndModel::funnel(2.0).unwrap();
        let b = BallSpec::Quotient { end, center: HPoint::new(-3.0, 1.0).unwrap(), radius: 0.5 };
        let v = ball_measure(&b, QuadOptions::rel(1e-10)).unwrap();
        assert!((v / ball_volume(0.5) - 1.0).abs() < 1e-8);
    }

    #[test]
    fn below_set_has_zero_ratio_high_up() {
        let omega = SensorSet::below(3.0).unwrap();
        let r = thickness_profile(&omega, ProfileRegion::Cusp { length: 1.0, y_max: 100.0 }, 1.0, quick()).unwrap();
        assert_eq!(r.delta_min, 0.0);
        assert!(r.argmin.1 > 3.0);
        assert!(!r.certified_on_samples);
    }

    #[test]
    fn full_space_is_thick() {
        let r = thickness_profile(&SensorSet::full(), ProfileRegion::Funnel { length: 1.0, d_max: 3.0 }, 0.5, quick()).unwrap();
        assert!((r.delta_min - 1.0).abs() < 1e-12);
        assert!(is_thick(&r, 1.0 - 1e-12));
        let r = thickness_profile(&SensorSet::empty(), ProfileRegion::Plane { x0: 0.0, x1: 1.0, y0: 1.0, y1: 2.0 }, 1.0, quick()).unwrap();
        assert!(!is_thick(&r, 1e-9));
    }
}
