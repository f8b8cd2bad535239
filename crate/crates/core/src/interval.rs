//! Open subsets of the real line as finite unions of open intervals with exact
//! endpoints, together with their complements, diameters and the
//! co-compactness predicate.

use std::cmp::Ordering;
use std::fmt;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::rational::Rational;

/// A point of the extended real line.
#[derive(Clone, PartialEq, Eq, Hash)]
pub enum Endpoint {
    NegInf,
    Finite(Rational),
    PosInf,
}

impl Endpoint {
    pub fn finite(&self) -> Option<&Rational> {
        match self {
            Endpoint::Finite(x) => Some(x),
            _ => None,
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, Endpoint::Finite(_))
    }

    fn rank(&self) -> u8 {
        match self {
            Endpoint::NegInf => 0,
            Endpoint::Finite(_) => 1,
            Endpoint::PosInf => 2,
        }
    }

    /// Compare against a finite point.
    pub fn cmp_point(&self, x: &Rational) -> Ordering {
        match self {
            Endpoint::NegInf => Ordering::Less,
            Endpoint::Finite(v) => v.cmp(x),
            Endpoint::PosInf => Ordering::Greater,
        }
    }
}

impl From<Rational> for Endpoint {
    fn from(x: Rational) -> Self {
        Endpoint::Finite(x)
    }
}

impl Ord for Endpoint {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Endpoint::Finite(a), Endpoint::Finite(b)) => a.cmp(b),
            _ => self.rank().cmp(&other.rank()),
        }
    }
}

impl PartialOrd for Endpoint {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Endpoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Endpoint::NegInf => f.write_str("-inf"),
            Endpoint::Finite(x) => write!(f, "{x}"),
            Endpoint::PosInf => f.write_str("+inf"),
        }
    }
}

impl fmt::Debug for Endpoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl Serialize for Endpoint {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Endpoint {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Text(String),
            Int(i64),
        }
        match Raw::deserialize(deserializer)? {
            Raw::Int(n) => Ok(Endpoint::Finite(Rational::from_integer(n))),
            Raw::Text(s) => match s.trim() {
                "-inf" => Ok(Endpoint::NegInf),
                "+inf" | "inf" => Ok(Endpoint::PosInf),
                t => t.parse().map(Endpoint::Finite).map_err(D::Error::custom),
            },
        }
    }
}

/// A non-negative extended rational: sizes, distances and Lebesgue numbers.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Extent {
    Finite(Rational),
    Infinite,
}

impl Extent {
    pub fn finite(&self) -> Option<&Rational> {
        match self {
            Extent::Finite(x) => Some(x),
            Extent::Infinite => None,
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, Extent::Infinite)
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Extent::Finite(x) => x.to_f64(),
            Extent::Infinite => f64::INFINITY,
        }
    }
}

impl fmt::Display for Extent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Extent::Finite(x) => write!(f, "{x}"),
            Extent::Infinite => f.write_str("+inf"),
        }
    }
}

impl fmt::Debug for Extent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl Serialize for Extent {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

/// An open interval `(left, right)` with `left < right`.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct OpenInterval {
    pub left: Endpoint,
    pub right: Endpoint,
}

impl OpenInterval {
    pub fn new(left: Endpoint, right: Endpoint) -> Result<Self> {
        if left >= right || left == Endpoint::PosInf || right == Endpoint::NegInf {
            return Err(Error::InvalidInput(format!("malformed open interval ({left}, {right})")));
        }
        Ok(OpenInterval { left, right })
    }

    pub fn contains_point(&self, x: &Rational) -> bool {
        self.left.cmp_point(x) == Ordering::Less && self.right.cmp_point(x) == Ordering::Greater
    }
}

/// A closed, possibly unbounded, interval of the line. Infinite ends are not
/// part of the set; a `lo == hi` segment is a single point.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct ClosedSegment {
    pub lo: Endpoint,
    pub hi: Endpoint,
}

impl ClosedSegment {
    pub fn is_bounded(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }

    pub fn contains_point(&self, x: &Rational) -> bool {
        self.lo.cmp_point(x) != Ordering::Greater && self.hi.cmp_point(x) != Ordering::Less
    }
}

/// Interval with explicit endpoint closedness, used while assembling preimages
/// and balls before they are normalized into an open or closed set.
#[derive(Clone, Debug)]
pub(crate) struct RawInterval {
    pub lo: Endpoint,
    pub lo_closed: bool,
    pub hi: Endpoint,
    pub hi_closed: bool,
}

impl RawInterval {
    pub(crate) fn is_empty(&self) -> bool {
        match self.lo.cmp(&self.hi) {
            Ordering::Less => false,
            Ordering::Equal => !(self.lo_closed && self.hi_closed && self.lo.is_finite()),
            Ordering::Greater => true,
        }
    }

    /// Intersection with another raw interval.
    pub(crate) fn meet(&self, other: &RawInterval) -> RawInterval {
        let (lo, lo_closed) = match self.lo.cmp(&other.lo) {
            Ordering::Greater => (self.lo.clone(), self.lo_closed),
            Ordering::Less => (other.lo.clone(), other.lo_closed),
            Ordering::Equal => (self.lo.clone(), self.lo_closed && other.lo_closed),
        };
        let (hi, hi_closed) = match self.hi.cmp(&other.hi) {
            Ordering::Less => (self.hi.clone(), self.hi_closed),
            Ordering::Greater => (other.hi.clone(), other.hi_closed),
            Ordering::Equal => (self.hi.clone(), self.hi_closed && other.hi_closed),
        };
        RawInterval { lo, lo_closed, hi, hi_closed }
    }
}

/// Sort and merge raw intervals into disjoint, non-touching components.
/// Two pieces sharing an endpoint merge when at least one contains it.
pub(crate) fn merge_raw(mut raw: Vec<RawInterval>) -> Vec<RawInterval> {
    raw.retain(|r| !r.is_empty());
    raw.sort_by(|a, b| a.lo.cmp(&b.lo).then_with(|| b.lo_closed.cmp(&a.lo_closed)));
    let mut out: Vec<RawInterval> = Vec::with_capacity(raw.len());
    for r in raw {
        if let Some(last) = out.last_mut() {
            let joins = match r.lo.cmp(&last.hi) {
                Ordering::Less => true,
                Ordering::Equal => r.lo_closed || last.hi_closed,
                Ordering::Greater => false,
            };
            if joins {
                match r.hi.cmp(&last.hi) {
                    Ordering::Greater => {
                        last.hi = r.hi;
                        last.hi_closed = r.hi_closed;
                    }
                    Ordering::Equal => last.hi_closed |= r.hi_closed,
                    Ordering::Less => {}
                }
                continue;
            }
        }
        out.push(r);
    }
    out
}

/// A normalized open subset of the real line: sorted, pairwise disjoint and
/// non-adjacent open intervals. The empty list is the empty set.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct OpenIntervalSet {
    intervals: Vec<OpenInterval>,
}

impl OpenIntervalSet {
    pub fn empty() -> Self {
        OpenIntervalSet { intervals: Vec::new() }
    }

    pub fn full() -> Self {
        OpenIntervalSet { intervals: vec![OpenInterval { left: Endpoint::NegInf, right: Endpoint::PosInf }] }
    }

    /// Single interval `(left, right)`.
    pub fn interval(left: Endpoint, right: Endpoint) -> Result<Self> {
        Ok(OpenIntervalSet { intervals: vec![OpenInterval::new(left, right)?] })
    }

    /// Convenience constructor from finite rational bounds.
    pub fn between(left: Rational, right: Rational) -> Result<Self> {
        Self::interval(Endpoint::Finite(left), Endpoint::Finite(right))
    }

    /// `(-inf, right)`.
    pub fn below(right: Rational) -> Self {
        OpenIntervalSet { intervals: vec![OpenInterval { left: Endpoint::NegInf, right: Endpoint::Finite(right) }] }
    }

    /// `(left, +inf)`.
    pub fn above(left: Rational) -> Self {
        OpenIntervalSet { intervals: vec![OpenInterval { left: Endpoint::Finite(left), right: Endpoint::PosInf }] }
    }

    /// Union of raw `(left, right)` pairs, merged and sorted.
    pub fn normalize(raw: Vec<(Endpoint, Endpoint)>) -> Result<Self> {
        let mut checked = Vec::with_capacity(raw.len());
        for (l, r) in raw {
            checked.push(OpenInterval::new(l, r)?);
        }
        Ok(Self::from_intervals(checked))
    }

    pub(crate) fn from_intervals(mut ivs: Vec<OpenInterval>) -> Self {
        ivs.sort_by(|a, b| a.left.cmp(&b.left));
        let mut out: Vec<OpenInterval> = Vec::with_capacity(ivs.len());
        for iv in ivs {
            if let Some(last) = out.last_mut() {
                // Open intervals that only share an endpoint stay separate.
                if iv.left < last.right {
                    if iv.right > last.right {
                        last.right = iv.right;
                    }
                    continue;
                }
            }
            out.push(iv);
        }
        OpenIntervalSet { intervals: out }
    }

    /// Build from merged raw pieces that are known to form an open set.
    pub(crate) fn from_open_raw(raw: Vec<RawInterval>) -> Self {
        let merged = merge_raw(raw);
        let intervals = merged
            .into_iter()
            .map(|r| {
                debug_assert!(
                    !(r.lo_closed && r.lo.is_finite()) && !(r.hi_closed && r.hi.is_finite()),
                    "assembled set is not open at {:?}",
                    r
                );
                OpenInterval { left: r.lo, right: r.hi }
            })
            .collect();
        OpenIntervalSet { intervals }
    }

    pub fn intervals(&self) -> &[OpenInterval] {
        &self.intervals
    }

    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.intervals.len() == 1
            && self.intervals[0].left == Endpoint::NegInf
            && self.intervals[0].right == Endpoint::PosInf
    }

    pub fn union(&self, other: &OpenIntervalSet) -> OpenIntervalSet {
        let mut all = self.intervals.clone();
        all.extend(other.intervals.iter().cloned());
        Self::from_intervals(all)
    }

    pub fn intersect(&self, other: &OpenIntervalSet) -> OpenIntervalSet {
        // Walk the longer list only around the components of the shorter one.
        let (small, large) = if self.len() <= other.len() {
            (&self.intervals, &other.intervals)
        } else {
            (&other.intervals, &self.intervals)
        };
        let mut out = Vec::new();
        for a in small {
            let start = large.partition_point(|b| b.right <= a.left);
            for b in &large[start..] {
                if b.left >= a.right {
                    break;
                }
                let left = std::cmp::max(&a.left, &b.left).clone();
                let right = std::cmp::min(&a.right, &b.right).clone();
                if left < right {
                    out.push(OpenInterval { left, right });
                }
            }
        }
        // Pieces come out sorted and disjoint; adjacency is impossible since
        // each lies inside a distinct component pair.
        OpenIntervalSet { intervals: out }
    }

    /// The closed complement `R \ self` as disjoint closed segments.
    pub fn complement(&self) -> Vec<ClosedSegment> {
        let mut out = Vec::new();
        let mut cursor = Endpoint::NegInf;
        for iv in &self.intervals {
            if cursor == Endpoint::NegInf {
                if iv.left != Endpoint::NegInf {
                    out.push(ClosedSegment { lo: Endpoint::NegInf, hi: iv.left.clone() });
                }
            } else {
                out.push(ClosedSegment { lo: cursor.clone(), hi: iv.left.clone() });
            }
            cursor = iv.right.clone();
            if cursor == Endpoint::PosInf {
                return out;
            }
        }
        if self.intervals.is_empty() {
            out.push(ClosedSegment { lo: Endpoint::NegInf, hi: Endpoint::PosInf });
        } else {
            out.push(ClosedSegment { lo: cursor, hi: Endpoint::PosInf });
        }
        out
    }

    /// Complement as an open set: `R \ self` is closed, so this returns the
    /// interior of the complement. Used to build set differences with open sets.
    pub fn complement_interior(&self) -> OpenIntervalSet {
        let ivs = self
            .complement()
            .into_iter()
            .filter(|c| c.lo < c.hi)
            .map(|c| OpenInterval { left: c.lo, right: c.hi })
            .collect();
        OpenIntervalSet { intervals: ivs }
    }

    /// True iff the complement is compact (closed and bounded).
    pub fn is_cocompact(&self) -> bool {
        match (self.intervals.first(), self.intervals.last()) {
            (Some(first), Some(last)) => first.left == Endpoint::NegInf && last.right == Endpoint::PosInf,
            _ => false,
        }
    }

    /// `sup - inf`; zero for the empty set.
    pub fn diameter(&self) -> Extent {
        match (self.intervals.first(), self.intervals.last()) {
            (Some(first), Some(last)) => match (&first.left, &last.right) {
                (Endpoint::Finite(a), Endpoint::Finite(b)) => Extent::Finite(b - a),
                _ => Extent::Infinite,
            },
            _ => Extent::Finite(Rational::zero()),
        }
    }

    /// Smallest and largest endpoints, if nonempty.
    pub fn hull(&self) -> Option<(&Endpoint, &Endpoint)> {
        Some((&self.intervals.first()?.left, &self.intervals.last()?.right))
    }

    pub fn component_containing(&self, x: &Rational) -> Option<&OpenInterval> {
        let idx = self.intervals.partition_point(|iv| iv.right.cmp_point(x) != Ordering::Greater);
        self.intervals.get(idx).filter(|iv| iv.contains_point(x))
    }

    pub fn contains_point(&self, x: &Rational) -> bool {
        self.component_containing(x).is_some()
    }

    /// Exact subset test `other ⊆ self`.
    pub fn contains(&self, other: &OpenIntervalSet) -> bool {
        let mut j = 0;
        for iv in &other.intervals {
            while j < self.intervals.len() && self.intervals[j].right < iv.right {
                j += 1;
            }
            match self.intervals.get(j) {
                Some(outer) if outer.left <= iv.left => {}
                _ => return false,
            }
        }
        true
    }

    /// `inf{|x - y| : y ∉ self}`; zero outside the set, infinite for `R`.
    pub fn dist_to_complement(&self, x: &Rational) -> Extent {
        match self.component_containing(x) {
            None => Extent::Finite(Rational::zero()),
            Some(iv) => match (&iv.left, &iv.right) {
                (Endpoint::NegInf, Endpoint::PosInf) => Extent::Infinite,
                (Endpoint::NegInf, Endpoint::Finite(r)) => Extent::Finite(r - x),
                (Endpoint::Finite(l), Endpoint::PosInf) => Extent::Finite(x - l),
                (Endpoint::Finite(l), Endpoint::Finite(r)) => Extent::Finite(Rational::min_of(&(x - l), &(r - x))),
                _ => unreachable!("normalized intervals have ordered endpoints"),
            },
        }
    }

    /// Image under `x ↦ slope·x + shift` for nonzero `slope`.
    pub fn affine_image(&self, slope: &Rational, shift: &Rational) -> OpenIntervalSet {
        assert!(!slope.is_zero());
        let map = |e: &Endpoint| match e {
            Endpoint::Finite(v) => Endpoint::Finite(&(slope * v) + shift),
            Endpoint::NegInf if slope.is_positive() => Endpoint::NegInf,
            Endpoint::NegInf => Endpoint::PosInf,
            Endpoint::PosInf if slope.is_positive() => Endpoint::PosInf,
            Endpoint::PosInf => Endpoint::NegInf,
        };
        let ivs = self
            .intervals
            .iter()
            .map(|iv| {
                let (a, b) = (map(&iv.left), map(&iv.right));
                if a < b {
                    OpenInterval { left: a, right: b }
                } else {
                    OpenInterval { left: b, right: a }
                }
            })
            .collect();
        Self::from_intervals(ivs)
    }

    /// Every finite endpoint, in order.
    pub fn finite_endpoints(&self) -> impl Iterator<Item = &Rational> {
        self.intervals.iter().flat_map(|iv| [iv.left.finite(), iv.right.finite()]).flatten()
    }
}

impl fmt::Display for OpenIntervalSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.intervals.is_empty() {
            return f.write_str("∅");
        }
        for (i, iv) in self.intervals.iter().enumerate() {
            if i > 0 {
                f.write_str(" ∪ ")?;
            }
            write!(f, "({}, {})", iv.left, iv.right)?;
        }
        Ok(())
    }
}

impl fmt::Debug for OpenIntervalSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[derive(Serialize, Deserialize)]
struct IntervalSetJson {
    intervals: Vec<(Endpoint, Endpoint)>,
}

impl Serialize for OpenIntervalSet {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        IntervalSetJson { intervals: self.intervals.iter().map(|iv| (iv.left.clone(), iv.right.clone())).collect() }
            .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for OpenIntervalSet {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let raw = IntervalSetJson::deserialize(deserializer)?;
        OpenIntervalSet::normalize(raw.intervals).map_err(D::Error::custom)
    }
}
