//! Finite unions of intervals on a line; used for exact row sections.

/// Sorted, pairwise disjoint, non-empty half-open intervals `[lo, hi)`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct IntervalSet {
    spans: Vec<(f64, f64)>,
}

impl IntervalSet {
    pub fn empty() -> Self {
        Self { spans: Vec::new() }
    }

    pub fn single(lo: f64, hi: f64) -> Self {
        if hi > lo {
            Self {
                spans: vec![(lo, hi)],
            }
        } else {
            Self::empty()
        }
    }

    /// Normalizes arbitrary spans (sorts, drops empties, merges overlaps).
    pub fn from_spans(mut spans: Vec<(f64, f64)>) -> Self {
        spans.retain(|(a, b)| b > a);
        spans.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut out: Vec<(f64, f64)> = Vec::with_capacity(spans.len());
        for (a, b) in spans {
            match out.last_mut() {
                Some(last) if a <= last.1 => last.1 = last.1.max(b),
                _ => out.push((a, b)),
            }
        }
        Self { spans: out }
    }

    pub fn spans(&self) -> &[(f64, f64)] {
        &self.spans
    }

    pub fn is_empty(&self) -> bool {
        self.spans.is_empty()
    }

    pub fn measure(&self) -> f64 {
        self.spans.iter().map(|(a, b)| b - a).sum()
    }

    pub fn contains(&self, t: f64) -> bool {
        self.spans.iter().any(|&(a, b)| t >= a && t < b)
    }

    pub fn union(&self, other: &Self) -> Self {
        let mut v = self.spans.clone();
        v.extend_from_slice(&other.spans);
        Self::from_spans(v)
    }

    pub fn intersect(&self, other: &Self) -> Self {
        let mut out = Vec::new();
        let (mut i, mut j) = (0, 0);
        while i < self.spans.len() && j < other.spans.len() {
            let (a0, a1) = self.spans[i];
            let (b0, b1) = other.spans[j];
            let lo = a0.max(b0);
            let hi = a1.min(b1);
            if hi > lo {
                out.push((lo, hi));
            }
            if a1 < b1 {
                i += 1;
            } else {
                j += 1;
            }
        }
        Self { spans: out }
    }

    /// Complement relative to `[lo, hi)`.
    pub fn complement_within(&self, lo: f64, hi: f64) -> Self {
        let mut out = Vec::new();
        let mut cursor = lo;
        for &(a, b) in &self.spans {
            if b <= lo || a >= hi {
                continue;
            }
            if a > cursor {
                out.push((cursor, a.min(hi)));
            }
            cursor = cursor.max(b);
        }
        if cursor < hi {
            out.push((cursor, hi));
        }
        Self::from_spans(out)
    }

    pub fn clip(&self, lo: f64, hi: f64) -> Self {
        self.intersect(&Self::single(lo, hi))
    }

    /// Affine image `t -> scale * t + shift` (scale > 0).
    pub fn map_affine(&self, scale: f64, shift: f64) -> Self {
        debug_assert!(scale > 0.0);
        Self {
            spans: self
                .spans
                .iter()
                .map(|&(a, b)| (scale * a + shift, scale * b + shift))
                .collect(),
        }
    }

    /// Image under an increasing map.
    pub fn map_monotone<F: Fn(f64) -> f64>(&self, f: F) -> Self {
        Self::from_spans(self.spans.iter().map(|&(a, b)| (f(a), f(b))).collect())
    }

    /// Projection of `[lo, hi)` onto the circle `[w0, w0 + period)`.
    pub fn wrapped(lo: f64, hi: f64, w0: f64, period: f64) -> Self {
        if hi <= lo {
            return Self::empty();
        }
        if hi - lo >= period {
            return Self::single(w0, w0 + period);
        }
        let shift = ((lo - w0) / period).floor() * period;
        let a = lo - shift;
        let b = hi - shift;
        let end = w0 + period;
        if b <= end {
            Self::single(a, b)
        } else {
            Self::from_spans(vec![(a, end), (w0, b - period)])
        }
    }

    /// Periodic extension of a set living in `[w0, w0 + period)`, restricted to `[lo, hi)`.
    pub fn tiled(&self, w0: f64, period: f64, lo: f64, hi: f64) -> Self {
        if hi <= lo || self.is_empty() {
            return Self::empty();
        }
        let k0 = ((lo - w0) / period).floor() as i64;
        let k1 = ((hi - w0) / period).ceil() as i64;
        let mut v = Vec::new();
        for k in k0..=k1 {
            let s = k as f64 * period;
            for &(a, b) in &self.spans {
                v.push(((a + s).max(lo), (b + s).min(hi)));
            }
        }
        Self::from_spans(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn boolean_ops() {
        let a = IntervalSet::from_spans(vec![(0.0, 1.0), (2.0, 3.0)]);
        let b = IntervalSet::single(0.5, 2.5);
        assert_eq!(a.intersect(&b).spans(), &[(0.5, 1.0), (2.0, 2.5)]);
        assert_eq!(a.union(&b).spans(), &[(0.0, 3.0)]);
        assert_eq!(a.complement_within(-1.0, 4.0).spans(), &[(-1.0, 0.0), (1.0, 2.0), (3.0, 4.0)]);
        assert!((a.measure() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn wrapping() {
        let w = IntervalSet::wrapped(0.3, 0.8, -0.5, 1.0);
        assert_eq!(w.spans().len(), 2);
        assert!((w.measure() - 0.5).abs() < 1e-15);
        assert!(w.contains(-0.3) && w.contains(0.4) && !w.contains(0.0));
        assert_eq!(IntervalSet::wrapped(-3.0, 0.0, -0.5, 1.0).spans(), &[(-0.5, 0.5)]);
        let t = IntervalSet::single(0.0, 0.25).tiled(-0.5, 1.0, -1.0, 1.0);
        assert_eq!(t.spans(), &[(-1.0, -0.75), (0.0, 0.25)]);
    }
}
