//! Sensor sets: boolean expressions over chart primitives.
//!
//! Membership is evaluated in half-plane coordinates. On a quotient end the
//! set is read on the fundamental domain, i.e. a lifted point belongs to the
//! lifted set iff its representative belongs to the expression.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interval::IntervalSet;
use crate::quotient::EndModel;
use crate::rows::{Line, Slicing};

pub const MAX_DEPTH: usize = 32;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case", deny_unknown_fields)]
pub enum SensorNode {
    Full,
    Empty,
    /// `x0 ≤ x < x1, y0 ≤ y < y1`; a missing bound is unbounded.
    Rect {
        #[serde(default)]
        x0: Option<f64>,
        #[serde(default)]
        x1: Option<f64>,
        #[serde(default)]
        y0: Option<f64>,
        #[serde(default)]
        y1: Option<f64>,
    },
    /// Open Euclidean disk in chart coordinates.
    Disk { cx: f64, cy: f64, r: f64 },
    /// `a x + b y + c > 0`.
    HalfPlane { a: f64, b: f64, c: f64 },
    /// `x mod 1 ∈ [lo, hi)`: an angular strip on a cusp of period 1.
    ThetaStrip { lo: f64, hi: f64 },
    Union { children: Vec<SensorNode> },
    Intersection { children: Vec<SensorNode> },
    Complement { child: Box<SensorNode> },
}

impl SensorNode {
    pub fn depth(&self) -> usize {
        match self {
            SensorNode::Union { children } | SensorNode::Intersection { children } => {
                1 + children.iter().map(|c| c.depth()).max().unwrap_or(0)
            }
            SensorNode::Complement { child } => 1 + child.depth(),
            _ => 1,
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidInput(m));
        match self {
            SensorNode::Rect { x0, x1, y0, y1 } => {
                for v in [x0, x1, y0, y1].into_iter().flatten() {
                    if !v.is_finite() {
                        return bad("rect bound must be finite when given".into());
                    }
                }
                Ok(())
            }
            SensorNode::Disk { cx, cy, r } => {
                if ![cx, cy, r].iter().all(|v| v.is_finite()) || *r <= 0.0 {
                    return bad(format!("disk ({cx}, {cy}, {r})"));
                }
                Ok(())
            }
            SensorNode::HalfPlane { a, b, c } => {
                if ![a, b, c].iter().all(|v| v.is_finite()) || (*a == 0.0 && *b == 0.0) {
                    return bad(format!("half-plane ({a}, {b}, {c})"));
                }
                Ok(())
            }
            SensorNode::ThetaStrip { lo, hi } => {
                if !(lo.is_finite() && hi.is_finite() && *lo >= 0.0 && hi > lo && *hi <= 1.0) {
                    return bad(format!("theta strip [{lo}, {hi}) must satisfy 0 <= lo < hi <= 1"));
                }
                Ok(())
            }
            SensorNode::Union { children } | SensorNode::Intersection { children } => {
                children.iter().try_for_each(|c| c.validate())
            }
            SensorNode::Complement { child } => child.validate(),
            SensorNode::Full | SensorNode::Empty => Ok(()),
        }
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        match self {
            SensorNode::Full => true,
            SensorNode::Empty => false,
            SensorNode::Rect { x0, x1, y0, y1 } => {
                x0.is_none_or(|v| x >= v)
                    && x1.is_none_or(|v| x < v)
                    && y0.is_none_or(|v| y >= v)
                    && y1.is_none_or(|v| y < v)
            }
            SensorNode::Disk { cx, cy, r } => (x - cx).powi(2) + (y - cy).powi(2) < r * r,
            SensorNode::HalfPlane { a, b, c } => a * x + b * y + c > 0.0,
            SensorNode::ThetaStrip { lo, hi } => {
                let f = x.rem_euclid(1.0);
                f >= *lo && f < *hi
            }
            SensorNode::Union { children } => children.iter().any(|c| c.contains(x, y)),
            SensorNode::Intersection { children } => children.iter().all(|c| c.contains(x, y)),
            SensorNode::Complement { child } => !child.contains(x, y),
        }
    }

    /// `{t ∈ [t0, t1) : line(t) ∈ set}`.
    pub fn section(&self, line: &Line, t0: f64, t1: f64) -> IntervalSet {
        match self {
            SensorNode::Full => IntervalSet::single(t0, t1),
            SensorNode::Empty => IntervalSet::empty(),
            SensorNode::Rect { x0, x1, y0, y1 } => {
                let mut lo = t0;
                let mut hi = t1;
                for (o, d, a, b) in [(line.ox, line.dx, x0, x1), (line.oy, line.dy, y0, y1)] {
                    let (l, h) = slab(o, d, *a, *b);
                    lo = lo.max(l);
                    hi = hi.min(h);
                }
                IntervalSet::single(lo, hi)
            }
            SensorNode::Disk { cx, cy, r } => {
                let (px, py) = (line.ox - cx, line.oy - cy);
                let a = line.dx * line.dx + line.dy * line.dy;
                let b = 2.0 * (line.dx * px + line.dy * py);
                let c = px * px + py * py - r * r;
                let disc = b * b - 4.0 * a * c;
                if disc <= 0.0 {
                    return IntervalSet::empty();
                }
                let sq = disc.sqrt();
                // stable roots
                let q = -0.5 * (b + b.signum() * sq);
                let (mut r1, mut r2) = if q != 0.0 { (q / a, c / q) } else { (-sq / (2.0 * a), sq / (2.0 * a)) };
                if r1 > r2 {
                    std::mem::swap(&mut r1, &mut r2);
                }
                IntervalSet::single(r1.max(t0), r2.min(t1))
            }
            SensorNode::HalfPlane { a, b, c } => {
                let alpha = a * line.dx + b * line.dy;
                let beta = a * line.ox + b * line.oy + c;
                if alpha == 0.0 {
                    if beta > 0.0 {
                        IntervalSet::single(t0, t1)
                    } else {
                        IntervalSet::empty()
                    }
                } else if alpha > 0.0 {
                    IntervalSet::single((-beta / alpha).max(t0), t1)
                } else {
                    IntervalSet::single(t0, (-beta / alpha).min(t1))
                }
            }
            SensorNode::ThetaStrip { lo, hi } => {
                if hi - lo >= 1.0 {
                    return IntervalSet::single(t0, t1);
                }
                if line.dx == 0.0 {
                    return if self.contains(line.ox, 0.0) {
                        IntervalSet::single(t0, t1)
                    } else {
                        IntervalSet::empty()
                    };
                }
                let xa = line.ox + t0 * line.dx;
                let xb = line.ox + t1 * line.dx;
                let (xmin, xmax) = (xa.min(xb), xa.max(xb));
                let mut spans = Vec::new();
                let n0 = xmin.floor() as i64 - 1;
                let n1 = xmax.ceil() as i64;
                for n in n0..=n1 {
                    let a = n as f64 + lo;
                    let b = n as f64 + hi;
                    let ta = (a - line.ox) / line.dx;
                    let tb = (b - line.ox) / line.dx;
                    let (l, h) = if ta < tb { (ta, tb) } else { (tb, ta) };
                    spans.push((l.max(t0), h.min(t1)));
                }
                IntervalSet::from_spans(spans)
            }
            SensorNode::Union { children } => children
                .iter()
                .fold(IntervalSet::empty(), |acc, c| acc.union(&c.section(line, t0, t1))),
            SensorNode::Intersection { children } => children
                .iter()
                .fold(IntervalSet::single(t0, t1), |acc, c| acc.intersect(&c.section(line, t0, t1))),
            SensorNode::Complement { child } => child.section(line, t0, t1).complement_within(t0, t1),
        }
    }

    fn collect_breaks(&self, slicing: Slicing, out: &mut Vec<f64>) {
        match self {
            SensorNode::Rect { x0, x1, y0, y1 } => match slicing {
                Slicing::Horizontal => out.extend([*y0, *y1].into_iter().flatten()),
                Slicing::Radial => {
                    // rays through the rectangle corners
                    for x in [*x0, *x1].into_iter().flatten() {
                        for y in [*y0, *y1].into_iter().flatten() {
                            if y > 0.0 {
                                out.push(y.atan2(x));
                            }
                        }
                    }
                }
            },
            SensorNode::Disk { cx, cy, r } => match slicing {
                Slicing::Horizontal => out.extend([cy - r, cy + r]),
                Slicing::Radial => {
                    let c = cx.hypot(*cy);
                    if c > *r {
                        let arg = cy.atan2(*cx);
                        let half = (r / c).asin();
                        out.extend([arg - half, arg + half]);
                    }
                }
            },
            SensorNode::Union { children } | SensorNode::Intersection { children } => {
                children.iter().for_each(|c| c.collect_breaks(slicing, out))
            }
            SensorNode::Complement { child } => child.collect_breaks(slicing, out),
            _ => {}
        }
    }

    /// Height above which membership no longer depends on `y`.
    fn stationary_height(&self) -> Option<f64> {
        match self {
            SensorNode::Full | SensorNode::Empty | SensorNode::ThetaStrip { .. } => Some(0.0),
            SensorNode::Rect { y0, y1, .. } => {
                Some(y0.unwrap_or(0.0).max(y1.unwrap_or(0.0)))
            }
            SensorNode::Disk { cy, r, .. } => Some(cy + r),
            SensorNode::HalfPlane { a, b, c } => {
                if *b == 0.0 {
                    Some(0.0)
                } else if *a == 0.0 {
                    Some((-c / b).max(0.0))
                } else {
                    None
                }
            }
            SensorNode::Union { children } | SensorNode::Intersection { children } => children
                .iter()
                .map(|c| c.stationary_height())
                .try_fold(0.0f64, |acc, h| h.map(|h| acc.max(h))),
            SensorNode::Complement { child } => child.stationary_height(),
        }
    }

    fn boundary_points(&self, heights: &[f64], out: &mut Vec<(f64, f64)>) {
        match self {
            SensorNode::Rect { x0, x1, y0, y1 } => {
                let xs: Vec<f64> = [*x0, *x1].into_iter().flatten().collect();
                let ys: Vec<f64> = [*y0, *y1].into_iter().flatten().collect();
                for &x in &xs {
                    for &y in &ys {
                        out.push((x, y));
                    }
                    for &h in heights {
                        out.push((x, h));
                    }
                }
                let xm = match (x0, x1) {
                    (Some(a), Some(b)) => 0.5 * (a + b),
                    (Some(a), None) => a + 0.5,
                    (None, Some(b)) => b - 0.5,
                    (None, None) => 0.0,
                };
                for &y in &ys {
                    out.push((xm, y));
                }
            }
            SensorNode::Disk { cx, cy, r } => {
                for k in 0..8 {
                    let a = k as f64 * std::f64::consts::FRAC_PI_4;
                    out.push((cx + r * a.cos(), cy + r * a.sin()));
                }
            }
            SensorNode::ThetaStrip { lo, hi } => {
                for &h in heights {
                    out.push((*lo, h));
                    out.push((*hi, h));
                    out.push((0.5 * (lo + hi), h));
                }
            }
            SensorNode::HalfPlane { a, b, c } => {
                if *a == 0.0 && *b != 0.0 {
                    out.push((0.0, -c / b));
                }
            }
            SensorNode::Union { children } | SensorNode::Intersection { children } => {
                children.iter().for_each(|ch| ch.boundary_points(heights, out))
            }
            SensorNode::Complement { child } => child.boundary_points(heights, out),
            SensorNode::Full | SensorNode::Empty => {}
        }
    }
}

fn slab(o: f64, d: f64, lo: Option<f64>, hi: Option<f64>) -> (f64, f64) {
    let lo = lo.unwrap_or(f64::NEG_INFINITY);
    let hi = hi.unwrap_or(f64::INFINITY);
    if d == 0.0 {
        return if o >= lo && o < hi {
            (f64::NEG_INFINITY, f64::INFINITY)
        } else {
            (0.0, 0.0)
        };
    }
    let a = (lo - o) / d;
    let b = (hi - o) / d;
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Validated sensor set `ω`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SensorNode", into = "SensorNode")]
pub struct SensorSet {
    root: SensorNode,
}

impl TryFrom<SensorNode> for SensorSet {
    type Error = Error;

    fn try_from(root: SensorNode) -> Result<Self> {
        Self::new(root)
    }
}

impl From<SensorSet> for SensorNode {
    fn from(s: SensorSet) -> Self {
        s.root
    }
}

impl SensorSet {
    pub fn new(root: SensorNode) -> Result<Self> {
        let depth = root.depth();
        if depth > MAX_DEPTH {
            return Err(Error::InvalidInput(format!(
                "sensor expression depth {depth} exceeds {MAX_DEPTH}"
            )));
        }
        root.validate()?;
        Ok(Self { root })
    }

    pub fn full() -> Self {
        Self {
            root: SensorNode::Full,
        }
    }

    pub fn empty() -> Self {
        Self {
            root: SensorNode::Empty,
        }
    }

    pub fn theta_strip(lo: f64, hi: f64) -> Result<Self> {
        Self::new(SensorNode::ThetaStrip { lo, hi })
    }

    /// `{y < y0}`.
    pub fn below(y0: f64) -> Result<Self> {
        Self::new(SensorNode::Rect {
            x0: None,
            x1: None,
            y0: None,
            y1: Some(y0),
        })
    }

    pub fn complement(&self) -> Self {
        Self {
            root: SensorNode::Complement {
                child: Box::new(self.root.clone()),
            },
        }
    }

    pub fn union(&self, other: &SensorSet) -> Result<Self> {
        Self::new(SensorNode::Union {
            children: vec![self.root.clone(), other.root.clone()],
        })
    }

    pub fn intersection(&self, other: &SensorSet) -> Result<Self> {
        Self::new(SensorNode::Intersection {
            children: vec![self.root.clone(), other.root.clone()],
        })
    }

    pub fn root(&self) -> &SensorNode {
        &self.root
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        self.root.contains(x, y)
    }

    /// Section of the set along a row, in the row's `s` coordinate, over
    /// `[s0, s1)`. The set is evaluated directly in chart coordinates.
    pub fn row_section(&self, slicing: Slicing, tau: f64, s0: f64, s1: f64) -> IntervalSet {
        let line = slicing.line(tau);
        let t0 = slicing.s_to_t(s0);
        let t1 = slicing.s_to_t(s1);
        let sec = self.root.section(&line, t0, t1);
        match slicing {
            Slicing::Horizontal => sec,
            Slicing::Radial => sec.map_monotone(|t| t.ln()),
        }
    }

    /// Section over the fundamental `s`-window of an end.
    pub fn fundamental_section(&self, end: &EndModel, tau: f64) -> IntervalSet {
        let w0 = end.window_start();
        self.row_section(end.slicing(), tau, w0, w0 + end.period())
    }

    /// `τ` values where row sections may change combinatorially.
    pub fn row_breaks(&self, slicing: Slicing) -> Vec<f64> {
        let mut v = Vec::new();
        self.root.collect_breaks(slicing, &mut v);
        v
    }

    /// Height above which membership is independent of `y` (for use on cusps).
    pub fn stationary_above(&self) -> Option<f64> {
        self.root.stationary_height().filter(|h| h.is_finite())
    }

    /// Points on primitive boundaries, used as adversarial thickness centres.
    pub fn boundary_probes(&self, heights: &[f64]) -> Vec<(f64, f64)> {
        let mut v = Vec::new();
        self.root.boundary_points(heights, &mut v);
        v.retain(|(x, y)| x.is_finite() && y.is_finite() && *y > 0.0);
        v
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.root)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let node: SensorNode = serde_json::from_str(s)
            .map_err(|e| Error::InvalidInput(format!("sensor set: {e}")))?;
        Self::new(node)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row_measure(set: &SensorSet, y: f64, a: f64, b: f64) -> f64 {
        set.row_section(Slicing::Horizontal, y, a, b).measure()
    }

    #[test]
    fn strip_sections() {
        let s = SensorSet::theta_strip(0.0, 0.5).unwrap();
        assert!((row_measure(&s, 3.0, -0.5, 0.5) - 0.5).abs() < 1e-15);
        assert!((row_measure(&s, 3.0, -2.0, 3.0) - 2.5).abs() < 1e-14);
        assert!((row_measure(&s, 3.0, 0.25, 0.75) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn disk_and_complement_sections() {
        let d = SensorSet::new(SensorNode::Disk { cx: 0.0, cy: 2.0, r: 1.0 }).unwrap();
        assert!((row_measure(&d, 2.0, -5.0, 5.0) - 2.0).abs() < 1e-14);
        let c = d.complement();
        assert!((row_measure(&c, 2.0, -5.0, 5.0) - 8.0).abs() < 1e-14);
        assert_eq!(row_measure(&d, 3.5, -5.0, 5.0), 0.0);
    }

    #[test]
    fn radial_section_matches_membership() {
        let set = SensorSet::new(SensorNode::Union {
            children: vec![
                SensorNode::Disk { cx: -1.0, cy: 1.0, r: 0.5 },
                SensorNode::Rect { x0: Some(-3.0), x1: Some(-1.5), y0: Some(0.5), y1: Some(2.0) },
            ],
        })
        .unwrap();
        let tau = 2.5f64;
        let sec = set.row_section(Slicing::Radial, tau, -2.0, 2.0);
        for k in 0..400 {
            let s = -2.0 + 4.0 * (k as f64 + 0.5) / 400.0;
            let (x, y) = (s.exp() * tau.cos(), s.exp() * tau.sin());
            assert_eq!(sec.contains(s), set.contains(x, y), "s = {s}");
        }
    }

    #[test]
    fn depth_limit_and_validation() {
        let mut node = SensorNode::Full;
        for _ in 0..40 {
            node = SensorNode::Complement { child: Box::new(node) };
        }
        assert!(SensorSet::new(node).is_err());
        assert!(SensorSet::theta_strip(0.5, 0.2).is_err());
        assert!(SensorSet::new(SensorNode::Disk { cx: 0.0, cy: 1.0, r: -1.0 }).is_err());
    }

    #[test]
    fn json_roundtrip_rejects_unknown() {
        let s = SensorSet::theta_strip(0.0, 0.5).unwrap().union(&SensorSet::below(2.0).unwrap()).unwrap();
        let j = s.to_json().unwrap();
        assert_eq!(SensorSet::from_json(&j).unwrap(), s);
        assert!(SensorSet::from_json(r#"{"node":"disk","cx":0,"cy":1,"r":1,"extra":2}"#).is_err());
    }

    #[test]
    fn stationarity() {
        assert_eq!(SensorSet::theta_strip(0.0, 0.5).unwrap().stationary_above(), Some(0.0));
        assert_eq!(SensorSet::below(3.0).unwrap().stationary_above(), Some(3.0));
        let d = SensorSet::new(SensorNode::Disk { cx: 0.0, cy: 2.0, r: 1.0 }).unwrap();
        assert_eq!(d.stationary_above(), Some(3.0));
        let tilted = SensorSet::new(SensorNode::HalfPlane { a: 1.0, b: 1.0, c: 0.0 }).unwrap();
        assert_eq!(tilted.stationary_above(), None);
    }
}
