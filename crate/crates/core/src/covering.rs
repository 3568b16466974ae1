//! Saturated `R`-separated sets, covering checks and intersection numbers.
//!
//! Construction is a sweep-ordered greedy pass over a shifted Halton stream
//! followed by vertex refinement: every vertex of the ball arrangement
//! (circle/circle, circle/boundary, region corner) that no open ball covers
//! is nudged into the uncovered cell and added as a new centre, until none
//! remain. The result covers the region with open balls, not only the stream.

use std::f64::consts::{PI, TAU};
use std::io::Write;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{ball_to_euclidean, ball_volume, dist, exp_map, EuclideanDisk, GeodesicBall, HPoint};
use crate::quotient::{quotient_distance_lifted, EndModel};
use crate::rng::{self, Halton2};
use crate::rows::Line;

/// Region to be covered. Quotient regions use the quotient distance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CoverRegion {
    /// `[x0, x1] × [y0, y1]` in `ℍ`.
    Rect { x0: f64, x1: f64, y0: f64, y1: f64 },
    /// Closed geodesic ball in `ℍ`.
    Ball { cx: f64, cy: f64, radius: f64 },
    /// `{x + iy : y ∈ [y0, y1]}`, a geodesic segment.
    VerticalSegment { x: f64, y0: f64, y1: f64 },
    /// Cusp fundamental domain truncated to `y ∈ [1/ℓ, y_max]`.
    Cusp { length: f64, y_max: f64 },
    /// Funnel fundamental domain truncated to distance `≤ d_max` from the
    /// boundary geodesic.
    Funnel { length: f64, d_max: f64 },
}

impl CoverRegion {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            CoverRegion::Rect { x0, x1, y0, y1 } => x1 > x0 && y0 > 0.0 && y1 > y0 && y1.is_finite(),
            CoverRegion::Ball { cy, radius, cx } => cy > 0.0 && radius > 0.0 && cx.is_finite(),
            CoverRegion::VerticalSegment { x, y0, y1 } => x.is_finite() && y0 > 0.0 && y1 > y0 && y1.is_finite(),
            CoverRegion::Cusp { length, y_max } => {
                EndModel::cusp(length)?;
                y_max > 1.0 / length && y_max.is_finite()
            }
            CoverRegion::Funnel { length, d_max } => {
                EndModel::funnel(length)?;
                d_max > 0.0 && d_max.is_finite()
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::EmptyRegion(format!("{self:?}")))
        }
    }

    pub fn end(&self) -> Option<EndModel> {
        match *self {
            CoverRegion::Cusp { length, .. } => Some(EndModel::Cusp { length }),
            CoverRegion::Funnel { length, .. } => Some(EndModel::Funnel { length }),
            _ => None,
        }
    }

    /// Hyperbolic area (length for the segment).
    pub fn measure(&self) -> f64 {
        match *self {
            CoverRegion::Rect { x0, x1, y0, y1 } => (x1 - x0) * (1.0 / y0 - 1.0 / y1),
            CoverRegion::Ball { radius, .. } => ball_volume(radius),
            CoverRegion::VerticalSegment { y0, y1, .. } => (y1 / y0).ln(),
            CoverRegion::Cusp { length, y_max } => length - 1.0 / y_max,
            CoverRegion::Funnel { length, d_max } => length * d_max.sinh(),
        }
    }

    /// 1-Lipschitz key for the distance in use.
    pub fn key(&self, p: &HPoint) -> f64 {
        match self {
            CoverRegion::Funnel { .. } => (-p.x() / p.y()).asinh(),
            _ => p.y().ln(),
        }
    }

    pub fn dist(&self, p: &HPoint, q: &HPoint) -> f64 {
        match self.end() {
            Some(end) => quotient_distance_lifted(&end, p, q).0,
            None => dist(p, q),
        }
    }

    /// Representative in the fundamental window (identity for `ℍ` regions).
    pub fn wrap(&self, p: &HPoint) -> HPoint {
        match self.end() {
            None => *p,
            Some(end) => {
                let sl = end.slicing();
                let (s, _) = sl.to_chart(p);
                let k = ((s - end.window_start()) / end.period()).floor() as i64;
                end.translate(p, -k)
            }
        }
    }

    /// Closed-region membership with relative slack `eps`.
    pub fn contains(&self, p: &HPoint, eps: f64) -> bool {
        match *self {
            CoverRegion::Rect { x0, x1, y0, y1 } => {
                let w = eps * (x1 - x0).max(1.0);
                p.x() >= x0 - w && p.x() <= x1 + w && p.y() >= y0 * (1.0 - eps) && p.y() <= y1 * (1.0 + eps)
            }
            CoverRegion::Ball { cx, cy, radius } => {
                dist(&HPoint::new_unchecked(cx, cy), p) <= radius * (1.0 + eps)
            }
            CoverRegion::VerticalSegment { x, y0, y1 } => {
                (p.x() - x).abs() <= eps * p.y() && p.y() >= y0 * (1.0 - eps) && p.y() <= y1 * (1.0 + eps)
            }
            CoverRegion::Cusp { length, y_max } => {
                p.y() >= (1.0 - eps) / length && p.y() <= y_max * (1.0 + eps)
            }
            CoverRegion::Funnel { d_max, .. } => {
                let d = self.key(p);
                d >= -eps && d <= d_max + eps
            }
        }
    }

    /// Point of the region from a unit square sample, uniform for the area
    /// measure (arc length for the segment).
    pub fn sample(&self, u: f64, v: f64) -> HPoint {
        match *self {
            CoverRegion::Rect { x0, x1, y0, y1 } => {
                let w = 1.0 / y1 + v * (1.0 / y0 - 1.0 / y1);
                HPoint::new_unchecked(x0 + u * (x1 - x0), 1.0 / w)
            }
            CoverRegion::Ball { cx, cy, radius } => {
                let rho = 2.0 * (v.sqrt() * (0.5 * radius).sinh()).asinh();
                exp_map(&HPoint::new_unchecked(cx, cy), rho, TAU * u)
            }
            CoverRegion::VerticalSegment { x, y0, y1 } => {
                HPoint::new_unchecked(x, y0 * ((y1 / y0).ln() * v).exp())
            }
            CoverRegion::Cusp { length, y_max } => {
                let a = 1.0 / length;
                let w = 1.0 / y_max + v * (1.0 / a - 1.0 / y_max);
                HPoint::new_unchecked(u - 0.5, 1.0 / w)
            }
            CoverRegion::Funnel { length, d_max } => {
                // s = ln|z| uniform, cot(arg z) = -w with w uniform in [0, sinh d_max]
                let w = v * d_max.sinh();
                let r = (u * length).exp();
                let n = w.hypot(1.0);
                HPoint::new_unchecked(-r * w / n, r / n)
            }
        }
    }

    /// Boundary curves as chart lines, and corner points.
    fn boundary(&self) -> (Vec<Line>, Vec<EuclideanDisk>, Vec<HPoint>) {
        let hline = |y: f64| Line { ox: 0.0, oy: y, dx: 1.0, dy: 0.0 };
        let vline = |x: f64| Line { ox: x, oy: 0.0, dx: 0.0, dy: 1.0 };
        match *self {
            CoverRegion::Rect { x0, x1, y0, y1 } => (
                vec![hline(y0), hline(y1), vline(x0), vline(x1)],
                vec![],
                [(x0, y0), (x0, y1), (x1, y0), (x1, y1)]
                    .iter()
                    .map(|&(x, y)| HPoint::new_unchecked(x, y))
                    .collect(),
            ),
            CoverRegion::Ball { cx, cy, radius } => {
                let b = GeodesicBall { center: HPoint::new_unchecked(cx, cy), radius };
                (vec![], vec![ball_to_euclidean(&b)], vec![])
            }
            CoverRegion::VerticalSegment { x, y0, y1 } => (
                vec![vline(x)],
                vec![],
                vec![HPoint::new_unchecked(x, y0), HPoint::new_unchecked(x, y1)],
            ),
            CoverRegion::Cusp { length, y_max } => (vec![hline(1.0 / length), hline(y_max)], vec![], vec![]),
            CoverRegion::Funnel { d_max, .. } => {
                let n = d_max.cosh();
                (
                    vec![vline(0.0), Line { ox: 0.0, oy: 0.0, dx: -d_max.sinh() / n, dy: 1.0 / n }],
                    vec![],
                    vec![],
                )
            }
        }
    }

    /// Points at hyperbolic distance `delta` from `p` along admissible directions.
    fn nudges(&self, p: &HPoint, delta: f64) -> Vec<HPoint> {
        match self {
            CoverRegion::VerticalSegment { .. } => vec![
                HPoint::new_unchecked(p.x(), p.y() * delta.exp()),
                HPoint::new_unchecked(p.x(), p.y() * (-delta).exp()),
            ],
            _ => (0..32).map(|k| exp_map(p, delta, k as f64 * PI / 16.0)).collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SeparatedSet {
    pub centers: Vec<HPoint>,
    pub radius: f64,
    pub region: CoverRegion,
    pub samples_used: usize,
    /// Centres added by vertex refinement.
    pub refined: usize,
    /// Uncovered arrangement vertices with no admissible nudge (slivers
    /// thinner than the nudge scale).
    pub unresolved_vertices: usize,
}

impl SeparatedSet {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["x", "y", "R"])?;
        for c in &self.centers {
            wr.serialize((c.x(), c.y(), self.radius))?;
        }
        wr.flush()?;
        Ok(())
    }

    /// Minimal pairwise distance (infinite for fewer than two centres).
    pub fn min_separation(&self) -> f64 {
        let idx = KeyIndex::new(&self.region, &self.centers);
        let mut best = f64::INFINITY;
        for (i, c) in self.centers.iter().enumerate() {
            idx.for_each_near(&self.region, c, best.min(4.0 * self.radius), |j, d| {
                if j != i {
                    best = best.min(d);
                }
            });
        }
        best
    }
}

/// Centres sorted by key for window queries.
struct KeyIndex {
    keys: Vec<f64>,
    points: Vec<(usize, HPoint)>,
}

impl KeyIndex {
    fn new(region: &CoverRegion, centers: &[HPoint]) -> Self {
        let mut v: Vec<(f64, usize, HPoint)> = centers.iter().enumerate().map(|(i, c)| (region.key(c), i, *c)).collect();
        v.sort_by(|a, b| a.0.total_cmp(&b.0));
        Self {
            keys: v.iter().map(|e| e.0).collect(),
            points: v.iter().map(|e| (e.1, e.2)).collect(),
        }
    }

    fn insert(&mut self, region: &CoverRegion, idx: usize, p: HPoint) {
        let k = region.key(&p);
        let pos = self.keys.partition_point(|&x| x < k);
        self.keys.insert(pos, k);
        self.points.insert(pos, (idx, p));
    }

    /// Calls `f(index, distance)` for centres with `distance < r`.
    fn for_each_near<F: FnMut(usize, f64)>(&self, region: &CoverRegion, p: &HPoint, r: f64, mut f: F) {
        let k = region.key(p);
        let lo = self.keys.partition_point(|&x| x <= k - r);
        for e in lo..self.keys.len() {
            if self.keys[e] >= k + r {
                break;
            }
            let (i, q) = self.points[e];
            let d = region.dist(p, &q);
            if d < r {
                f(i, d);
            }
        }
    }

    fn min_dist(&self, region: &CoverRegion, p: &HPoint, r: f64) -> f64 {
        let mut m = f64::INFINITY;
        self.for_each_near(region, p, r, |_, d| m = m.min(d));
        m
    }
}

/// Default stream size: 200 samples per ball volume of the region.
pub fn default_sample_count(region: &CoverRegion, radius: f64) -> usize {
    let per = match region {
        CoverRegion::VerticalSegment { .. } => 2.0 * radius,
        _ => ball_volume(radius),
    };
    ((200.0 * region.measure() / per).ceil() as usize).clamp(200, 5_000_000)
}

pub fn build_maximal_separated(
    region: CoverRegion,
    radius: f64,
    sample_count: usize,
    seed: u64,
) -> Result<SeparatedSet> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::InvalidInput(format!("radius {radius}")));
    }
    region.validate()?;
    if sample_count == 0 {
        return Err(Error::EmptyRegion("no samples".into()));
    }
    let mut samples: Vec<(f64, HPoint)> = Halton2::new(seed)
        .take(sample_count)
        .map(|[u, v]| {
            let p = region.sample(u, v);
            (region.key(&p), p)
        })
        .collect();
    samples.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut centers: Vec<HPoint> = Vec::new();
    let mut index = KeyIndex::new(&region, &[]);
    for (_, p) in &samples {
        if index.min_dist(&region, p, radius) >= radius {
            index.insert(&region, centers.len(), *p);
            centers.push(*p);
        }
    }
    let greedy = centers.len();

    let unresolved = loop {
        let verts = arrangement_vertices(&region, &centers, radius);
        let mut added = 0;
        let mut unresolved = 0;
        for v in verts {
            if !region.contains(&v, 1e-12) || index.min_dist(&region, &v, radius) < radius * (1.0 - 1e-12) {
                continue;
            }
            let mut placed = false;
            for scale in [1e-9, 1e-7, 1e-5, 1e-3] {
                let best = region
                    .nudges(&v, scale * radius)
                    .into_iter()
                    .map(|q| region.wrap(&q))
                    .filter(|q| region.contains(q, 0.0))
                    .map(|q| (index.min_dist(&region, &q, radius), q))
                    .filter(|(d, _)| *d >= radius)
                    .max_by(|a, b| a.0.total_cmp(&b.0));
                if let Some((_, q)) = best {
                    index.insert(&region, centers.len(), q);
                    centers.push(q);
                    added += 1;
                    placed = true;
                    break;
                }
            }
            if !placed && index.min_dist(&region, &v, radius) >= radius {
                unresolved += 1;
            }
        }
        if added == 0 {
            break unresolved;
        }
    };
    Ok(SeparatedSet {
        refined: centers.len() - greedy,
        centers,
        radius,
        region,
        samples_used: sample_count,
        unresolved_vertices: unresolved,
    })
}

fn circle_circle(a: &EuclideanDisk, b: &EuclideanDisk) -> Vec<(f64, f64)> {
    let (dx, dy) = (b.cx - a.cx, b.cy - a.cy);
    let d = dx.hypot(dy);
    if d == 0.0 || d >= a.r + b.r || d <= (a.r - b.r).abs() {
        return vec![];
    }
    let l = (a.r * a.r - b.r * b.r + d * d) / (2.0 * d);
    let h = (a.r * a.r - l * l).max(0.0).sqrt();
    let (ux, uy) = (dx / d, dy / d);
    let (mx, my) = (a.cx + l * ux, a.cy + l * uy);
    vec![(mx - h * uy, my + h * ux), (mx + h * uy, my - h * ux)]
}

fn circle_line(c: &EuclideanDisk, l: &Line) -> Vec<(f64, f64)> {
    let (px, py) = (l.ox - c.cx, l.oy - c.cy);
    let a = l.dx * l.dx + l.dy * l.dy;
    let b = 2.0 * (l.dx * px + l.dy * py);
    let cc = px * px + py * py - c.r * c.r;
    let disc = b * b - 4.0 * a * cc;
    if disc < 0.0 {
        return vec![];
    }
    let s = disc.sqrt();
    vec![l.at((-b - s) / (2.0 * a)), l.at((-b + s) / (2.0 * a))]
}

/// Lifted disks of the centres, including the translates that meet the
/// fundamental window's neighbourhood.
fn lifted_disks(region: &CoverRegion, centers: &[HPoint], radius: f64) -> Vec<(f64, EuclideanDisk)> {
    let mut out = Vec::new();
    for c in centers {
        let base = ball_to_euclidean(&GeodesicBall { center: *c, radius });
        match region.end() {
            None => out.push((region.key(c), base)),
            Some(end) => {
                let sl = end.slicing();
                let (lo, hi) = sl.s_extent(&base);
                let (w0, p) = (end.window_start(), end.period());
                // translates whose s-extent meets [w0 - P, w0 + 2P)
                let k0 = ((w0 - p - hi) / p).floor() as i64;
                let k1 = ((w0 + 2.0 * p - lo) / p).ceil() as i64;
                for k in k0..=k1 {
                    let t = end.translate(c, k);
                    out.push((region.key(c), ball_to_euclidean(&GeodesicBall { center: t, radius })));
                }
            }
        }
    }
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}

fn arrangement_vertices(region: &CoverRegion, centers: &[HPoint], radius: f64) -> Vec<HPoint> {
    let disks = lifted_disks(region, centers, radius);
    let (lines, circles, corners) = region.boundary();
    let mut raw: Vec<(f64, f64)> = (0..disks.len())
        .into_par_iter()
        .flat_map_iter(|i| {
            let (ki, di) = disks[i];
            let mut v = Vec::new();
            for (kj, dj) in &disks[i + 1..] {
                if *kj - ki >= 2.0 * radius {
                    break;
                }
                v.extend(circle_circle(&di, dj));
            }
            for l in &lines {
                v.extend(circle_line(&di, l));
            }
            for c in &circles {
                v.extend(circle_circle(&di, c));
            }
            v
        })
        .collect();
    raw.extend(corners.iter().map(|c| (c.x(), c.y())));
    raw.into_iter()
        .filter(|&(x, y)| y > 0.0 && x.is_finite())
        .map(|(x, y)| region.wrap(&HPoint::new_unchecked(x, y)))
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct CoverageReport {
    pub probes: usize,
    pub covered: usize,
    pub coverage: f64,
    pub violators: Vec<(f64, f64)>,
}

/// Fraction of fresh seeded probes within distance `< R` of a centre.
pub fn verify_covering(s: &SeparatedSet, probe_count: usize, seed: u64) -> CoverageReport {
    let mut r = rng::stream(seed, 0xc0e5);
    let probes: Vec<HPoint> = (0..probe_count)
        .map(|_| {
            let (u, v): (f64, f64) = (r.random(), r.random());
            s.region.sample(u, v)
        })
        .collect();
    verify_points(s, &probes)
}

pub fn verify_points(s: &SeparatedSet, probes: &[HPoint]) -> CoverageReport {
    let idx = KeyIndex::new(&s.region, &s.centers);
    let violators: Vec<(f64, f64)> = probes
        .par_iter()
        .filter(|p| idx.min_dist(&s.region, p, s.radius) >= s.radius)
        .map(|p| (p.x(), p.y()))
        .collect();
    let covered = probes.len() - violators.len();
    CoverageReport {
        probes: probes.len(),
        covered,
        coverage: if probes.is_empty() { 1.0 } else { covered as f64 / probes.len() as f64 },
        violators,
    }
}

/// `max_i #{j : d(x_i, x_j) < r}`, counting `i` itself.
pub fn intersection_number(s: &SeparatedSet, r: f64) -> usize {
    let idx = KeyIndex::new(&s.region, &s.centers);
    s.centers
        .par_iter()
        .map(|c| {
            let mut n = 0;
            idx.for_each_near(&s.region, c, r, |_, _| n += 1);
            n
        })
        .max()
        .unwrap_or(0)
}

/// Packing bound `sinh²(5R/4) / sinh²(R/4)` for `r = 2R`.
pub fn intersection_bound(radius: f64) -> f64 {
    ((1.25 * radius).sinh() / (0.25 * radius).sinh()).powi(2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_ball_gets_one_center() {
        let region = CoverRegion::Ball { cx: 0.0, cy: 1.0, radius: 0.25 };
        let s = build_maximal_separated(region, 1.0, 500, 3).unwrap();
        assert_eq!(s.centers.len(), 1);
        assert_eq!(intersection_number(&s, 2.0), 1);
    }

    #[test]
    fn segment_count() {
        let region = CoverRegion::VerticalSegment { x: 0.0, y0: 1.0, y1: 10f64.exp() };
        let s = build_maximal_separated(region, 1.0, 2000, 1).unwrap();
        assert!((9..=11).contains(&s.centers.len()), "{}", s.centers.len());
        assert_eq!(verify_covering(&s, 10_000, 2).coverage, 1.0);
    }

    #[test]
    fn bound_identity() {
        for r in [0.3f64, 1.0, 2.5] {
            let e = (-0.5 * r).exp();
            let poly = (1.0 + e + e * e + e.powi(3) + e.powi(4)).powi(2) * (2.0 * r).exp();
            assert!((intersection_bound(r) / poly - 1.0).abs() < 1e-12);
            assert!(intersection_bound(r) <= 25.0 * (2.0 * r).exp());
        }
    }
}
