//! Continuous piecewise-affine self-maps of the real line with rational
//! coefficients: exact evaluation, preimages, images, composition and powers.

use std::cmp::Ordering;
use std::fmt;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::interval::{merge_raw, Endpoint, OpenIntervalSet, RawInterval};
use crate::rational::Rational;

/// Default cap on the number of affine pieces produced by [`PiecewiseAffineMap::power`].
pub const DEFAULT_PIECE_CAP: usize = 1 << 16;

#[derive(Clone, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub struct AffinePiece {
    pub slope: Rational,
    pub intercept: Rational,
}

impl AffinePiece {
    pub fn new(slope: Rational, intercept: Rational) -> Self {
        AffinePiece { slope, intercept }
    }

    pub fn eval(&self, x: &Rational) -> Rational {
        &(&self.slope * x) + &self.intercept
    }

    fn eval_endpoint(&self, x: &Endpoint) -> Endpoint {
        match x {
            Endpoint::Finite(v) => Endpoint::Finite(self.eval(v)),
            inf => match self.slope.signum() {
                0 => Endpoint::Finite(self.intercept.clone()),
                s if (s > 0) == (*inf == Endpoint::PosInf) => Endpoint::PosInf,
                _ => Endpoint::NegInf,
            },
        }
    }

    /// Inverse image of an endpoint under a non-constant piece.
    fn invert_endpoint(&self, y: &Endpoint) -> Endpoint {
        debug_assert!(!self.slope.is_zero());
        match y {
            Endpoint::Finite(v) => Endpoint::Finite(&(v - &self.intercept) / &self.slope),
            Endpoint::NegInf if self.slope.is_positive() => Endpoint::NegInf,
            Endpoint::NegInf => Endpoint::PosInf,
            Endpoint::PosInf if self.slope.is_positive() => Endpoint::PosInf,
            Endpoint::PosInf => Endpoint::NegInf,
        }
    }

    /// `self ∘ inner`.
    fn after(&self, inner: &AffinePiece) -> AffinePiece {
        AffinePiece {
            slope: &self.slope * &inner.slope,
            intercept: &(&self.slope * &inner.intercept) + &self.intercept,
        }
    }
}

/// A compact interval `[left, right]` of the line; `left == right` is a point.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct CompactInterval {
    left: Rational,
    right: Rational,
}

impl CompactInterval {
    pub fn new(left: Rational, right: Rational) -> Result<Self> {
        if left > right {
            return Err(Error::InvalidInput(format!("compact interval [{left}, {right}] has left > right")));
        }
        Ok(CompactInterval { left, right })
    }

    pub fn unit() -> Self {
        CompactInterval { left: Rational::zero(), right: Rational::one() }
    }

    pub fn point(x: Rational) -> Self {
        CompactInterval { left: x.clone(), right: x }
    }

    pub fn left(&self) -> &Rational {
        &self.left
    }

    pub fn right(&self) -> &Rational {
        &self.right
    }

    pub fn length(&self) -> Rational {
        &self.right - &self.left
    }

    pub fn is_point(&self) -> bool {
        self.left == self.right
    }

    pub fn contains_point(&self, x: &Rational) -> bool {
        &self.left <= x && x <= &self.right
    }

    pub fn contains_interval(&self, other: &CompactInterval) -> bool {
        self.left <= other.left && other.right <= self.right
    }

    pub(crate) fn as_raw(&self) -> RawInterval {
        RawInterval {
            lo: Endpoint::Finite(self.left.clone()),
            lo_closed: true,
            hi: Endpoint::Finite(self.right.clone()),
            hi_closed: true,
        }
    }
}

impl fmt::Display for CompactInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.left, self.right)
    }
}

impl Serialize for CompactInterval {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        (&self.left, &self.right).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for CompactInterval {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let (l, r) = <(Rational, Rational)>::deserialize(deserializer)?;
        CompactInterval::new(l, r).map_err(D::Error::custom)
    }
}

/// A continuous map `R → R` that is affine on each region
/// `(-inf, x1], [x1, x2], …, [xk, +inf)`.
///
/// Construction merges adjacent collinear pieces, so the breakpoint list is
/// canonical and two maps are equal iff they agree everywhere.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct PiecewiseAffineMap {
    breakpoints: Vec<Rational>,
    pieces: Vec<AffinePiece>,
}

impl PiecewiseAffineMap {
    pub fn new(breakpoints: Vec<Rational>, pieces: Vec<AffinePiece>) -> Result<Self> {
        if pieces.is_empty() {
            return Err(Error::InvalidInput("a piecewise map needs at least one piece".into()));
        }
        if pieces.len() != breakpoints.len() + 1 {
            return Err(Error::InvalidInput(format!(
                "{} breakpoints require {} pieces, got {}",
                breakpoints.len(),
                breakpoints.len() + 1,
                pieces.len()
            )));
        }
        if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidInput("breakpoints must be strictly increasing".into()));
        }
        for (i, x) in breakpoints.iter().enumerate() {
            if pieces[i].eval(x) != pieces[i + 1].eval(x) {
                return Err(Error::InvalidInput(format!("map is discontinuous at breakpoint {x}")));
            }
        }
        let mut bps = Vec::with_capacity(breakpoints.len());
        let mut ps = vec![pieces[0].clone()];
        for (x, p) in breakpoints.into_iter().zip(pieces.into_iter().skip(1)) {
            if ps.last() == Some(&p) {
                continue;
            }
            bps.push(x);
            ps.push(p);
        }
        Ok(PiecewiseAffineMap { breakpoints: bps, pieces: ps })
    }

    pub fn affine(slope: Rational, intercept: Rational) -> Self {
        PiecewiseAffineMap { breakpoints: Vec::new(), pieces: vec![AffinePiece::new(slope, intercept)] }
    }

    pub fn identity() -> Self {
        Self::affine(Rational::one(), Rational::zero())
    }

    /// `x ↦ 2x`.
    pub fn doubling() -> Self {
        Self::affine(Rational::from_integer(2), Rational::zero())
    }

    /// `x ↦ 1 - |2x - 1|` on the whole line (slopes ±2 beyond `[0, 1]`).
    pub fn tent() -> Self {
        PiecewiseAffineMap {
            breakpoints: vec![Rational::new(1, 2)],
            pieces: vec![
                AffinePiece::new(Rational::from_integer(2), Rational::zero()),
                AffinePiece::new(Rational::from_integer(-2), Rational::from_integer(2)),
            ],
        }
    }

    /// `x ↦ |x|`, a non-surjective perfect map.
    pub fn abs() -> Self {
        PiecewiseAffineMap {
            breakpoints: vec![Rational::zero()],
            pieces: vec![
                AffinePiece::new(Rational::from_integer(-1), Rational::zero()),
                AffinePiece::new(Rational::one(), Rational::zero()),
            ],
        }
    }

    /// Named maps understood by the command line.
    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "doubling" => Some(Self::doubling()),
            "identity" => Some(Self::identity()),
            "tent" | "tent-extended" => Some(Self::tent()),
            "abs" => Some(Self::abs()),
            _ => None,
        }
    }

    pub fn breakpoints(&self) -> &[Rational] {
        &self.breakpoints
    }

    pub fn pieces(&self) -> &[AffinePiece] {
        &self.pieces
    }

    pub fn piece_count(&self) -> usize {
        self.pieces.len()
    }

    fn region(&self, i: usize) -> RawInterval {
        let lo = if i == 0 { Endpoint::NegInf } else { Endpoint::Finite(self.breakpoints[i - 1].clone()) };
        let hi = match self.breakpoints.get(i) {
            Some(x) => Endpoint::Finite(x.clone()),
            None => Endpoint::PosInf,
        };
        RawInterval { lo_closed: lo.is_finite(), lo, hi_closed: hi.is_finite(), hi }
    }

    /// Regions whose closure meets `[lo, hi]`.
    fn regions_meeting(&self, lo: &Endpoint, hi: &Endpoint) -> std::ops::Range<usize> {
        let start = match lo {
            Endpoint::Finite(x) => self.breakpoints.partition_point(|b| b < x),
            _ => 0,
        };
        let end = match hi {
            Endpoint::Finite(x) => self.breakpoints.partition_point(|b| b <= x),
            _ => self.breakpoints.len(),
        };
        start..end + 1
    }

    fn piece_index(&self, x: &Rational) -> usize {
        self.breakpoints.partition_point(|b| b < x)
    }

    pub fn eval(&self, x: &Rational) -> Rational {
        self.pieces[self.piece_index(x)].eval(x)
    }

    /// `f^n(x)`.
    pub fn iterate(&self, x: &Rational, n: usize) -> Rational {
        let mut y = x.clone();
        for _ in 0..n {
            y = self.eval(&y);
        }
        y
    }

    /// Orbit `x, f(x), …, f^{n-1}(x)`.
    pub fn orbit(&self, x: &Rational, n: usize) -> Vec<Rational> {
        let mut out = Vec::with_capacity(n);
        let mut y = x.clone();
        for i in 0..n {
            if i + 1 < n {
                let next = self.eval(&y);
                out.push(std::mem::replace(&mut y, next));
            } else {
                out.push(y.clone());
            }
        }
        out
    }

    /// Preimage of a union of raw intervals (sorted and disjoint), restricted
    /// to `window`. Closedness of targets and window is carried through.
    pub(crate) fn preimage_raw(&self, targets: &[RawInterval], window: &RawInterval) -> Vec<RawInterval> {
        let mut out = Vec::new();
        if targets.is_empty() {
            return out;
        }
        for i in self.regions_meeting(&window.lo, &window.hi) {
            let region = self.region(i).meet(window);
            if region.is_empty() {
                continue;
            }
            let piece = &self.pieces[i];
            if piece.slope.is_zero() {
                let y = &piece.intercept;
                if targets.iter().any(|t| raw_contains(t, y)) {
                    out.push(region);
                }
                continue;
            }
            let (a, b) = (piece.eval_endpoint(&region.lo), piece.eval_endpoint(&region.hi));
            let (img_lo, img_hi) = if a <= b { (a, b) } else { (b, a) };
            let start = targets.partition_point(|t| t.hi < img_lo);
            for t in &targets[start..] {
                if t.lo > img_hi {
                    break;
                }
                let (lo, hi) = (piece.invert_endpoint(&t.lo), piece.invert_endpoint(&t.hi));
                let pre = if piece.slope.is_positive() {
                    RawInterval { lo, lo_closed: t.lo_closed, hi, hi_closed: t.hi_closed }
                } else {
                    RawInterval { lo: hi, lo_closed: t.hi_closed, hi: lo, hi_closed: t.lo_closed }
                };
                let piece_pre = pre.meet(&region);
                if !piece_pre.is_empty() {
                    out.push(piece_pre);
                }
            }
        }
        merge_raw(out)
    }

    /// Exact `f^{-1}(u)`.
    pub fn preimage(&self, u: &OpenIntervalSet) -> OpenIntervalSet {
        let targets: Vec<RawInterval> = u
            .intervals()
            .iter()
            .map(|iv| RawInterval { lo: iv.left.clone(), lo_closed: false, hi: iv.right.clone(), hi_closed: false })
            .collect();
        OpenIntervalSet::from_open_raw(self.preimage_raw(&targets, &whole_line()))
    }

    /// The fiber `f^{-1}(y)` as closed segments (unbounded when the map is
    /// constant on an unbounded region).
    pub fn fiber(&self, y: &Rational) -> Vec<(Endpoint, Endpoint)> {
        let target = RawInterval {
            lo: Endpoint::Finite(y.clone()),
            lo_closed: true,
            hi: Endpoint::Finite(y.clone()),
            hi_closed: true,
        };
        self.preimage_raw(&[target], &whole_line()).into_iter().map(|r| (r.lo, r.hi)).collect()
    }

    /// Image of the closed window as merged closed (possibly unbounded) pieces.
    pub(crate) fn image_raw(&self, window: &RawInterval) -> Vec<RawInterval> {
        let mut out = Vec::new();
        for i in self.regions_meeting(&window.lo, &window.hi) {
            let region = self.region(i).meet(window);
            if region.is_empty() {
                continue;
            }
            let piece = &self.pieces[i];
            let (a, b) = (piece.eval_endpoint(&region.lo), piece.eval_endpoint(&region.hi));
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            out.push(RawInterval { lo_closed: lo.is_finite(), lo, hi_closed: hi.is_finite(), hi });
        }
        merge_raw(out)
    }

    /// `f(K)` for a compact interval: a compact interval by continuity.
    pub fn image_of(&self, k: &CompactInterval) -> CompactInterval {
        let img = self.image_raw(&k.as_raw());
        debug_assert_eq!(img.len(), 1, "image of an interval is connected");
        let lo = img[0].lo.finite().expect("bounded image").clone();
        let hi = img[0].hi.finite().expect("bounded image").clone();
        CompactInterval { left: lo, right: hi }
    }

    /// True iff `f(K) ⊆ K`.
    pub fn maps_into(&self, k: &CompactInterval) -> bool {
        k.contains_interval(&self.image_of(k))
    }

    /// Both unbounded pieces have nonzero slope. For continuous
    /// piecewise-affine maps of the line this is properness, which gives
    /// compact fibers and closedness.
    pub fn is_perfect(&self) -> bool {
        !self.pieces[0].slope.is_zero() && !self.pieces[self.pieces.len() - 1].slope.is_zero()
    }

    /// Strictly monotone and onto `R`, hence a homeomorphism of the line.
    pub fn is_homeomorphism(&self) -> bool {
        let s = self.pieces[0].slope.signum();
        s != 0 && self.pieces.iter().all(|p| p.slope.signum() == s)
    }

    /// True iff the range of the map contains the whole line.
    pub fn is_surjective_onto_line(&self) -> bool {
        let img = self.image_raw(&whole_line());
        img.len() == 1 && img[0].lo == Endpoint::NegInf && img[0].hi == Endpoint::PosInf
    }

    /// True iff `f(K) ⊇ K`.
    pub fn is_surjective_onto_interval(&self, k: &CompactInterval) -> bool {
        self.image_of(k).contains_interval(k)
    }

    /// Largest `|slope|` over pieces whose region meets `K`.
    pub fn max_abs_slope_on(&self, k: &CompactInterval) -> Rational {
        self.regions_meeting(&Endpoint::Finite(k.left.clone()), &Endpoint::Finite(k.right.clone()))
            .map(|i| self.pieces[i].slope.abs())
            .max()
            .unwrap_or_else(Rational::zero)
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &PiecewiseAffineMap) -> PiecewiseAffineMap {
        let mut cuts: Vec<Rational> = inner.breakpoints.clone();
        for i in 0..inner.pieces.len() {
            let region = inner.region(i);
            let piece = &inner.pieces[i];
            if piece.slope.is_zero() {
                continue;
            }
            let (a, b) = (piece.eval_endpoint(&region.lo), piece.eval_endpoint(&region.hi));
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let start = match &lo {
                Endpoint::Finite(v) => self.breakpoints.partition_point(|c| c <= v),
                _ => 0,
            };
            for c in &self.breakpoints[start..] {
                if Endpoint::Finite(c.clone()) >= hi {
                    break;
                }
                cuts.push(&(c - &piece.intercept) / &piece.slope);
            }
        }
        cuts.sort();
        cuts.dedup();
        let mut pieces = Vec::with_capacity(cuts.len() + 1);
        for j in 0..=cuts.len() {
            let rep = match (j.checked_sub(1).map(|k| &cuts[k]), cuts.get(j)) {
                (None, None) => Rational::zero(),
                (None, Some(r)) => r - &Rational::one(),
                (Some(l), None) => l + &Rational::one(),
                (Some(l), Some(r)) => l.midpoint(r),
            };
            let inner_piece = &inner.pieces[inner.piece_index(&rep)];
            let outer_piece = &self.pieces[self.piece_index(&inner_piece.eval(&rep))];
            pieces.push(outer_piece.after(inner_piece));
        }
        PiecewiseAffineMap::new(cuts, pieces).expect("composition of continuous maps is continuous")
    }

    /// `f^m` with an explicit piece-count cap.
    pub fn power_capped(&self, m: usize, cap: usize) -> Result<PiecewiseAffineMap> {
        if m == 0 {
            return Err(Error::InvalidInput("power exponent must be at least 1".into()));
        }
        let mut acc = self.clone();
        for _ in 1..m {
            acc = self.compose(&acc);
            if acc.piece_count() > cap {
                return Err(Error::ResourceLimit(format!("power map exceeds {cap} pieces")));
            }
        }
        Ok(acc)
    }

    pub fn power(&self, m: usize) -> Result<PiecewiseAffineMap> {
        self.power_capped(m, DEFAULT_PIECE_CAP)
    }

    /// Inverse of a homeomorphism.
    pub fn inverse(&self) -> Result<PiecewiseAffineMap> {
        if !self.is_homeomorphism() {
            return Err(Error::InvalidInput("only strictly monotone maps can be inverted".into()));
        }
        let inv: Vec<AffinePiece> = self
            .pieces
            .iter()
            .map(|p| {
                let s = p.slope.recip();
                AffinePiece { intercept: -(&p.intercept * &s), slope: s }
            })
            .collect();
        let mut bps: Vec<Rational> = self.breakpoints.iter().map(|x| self.eval(x)).collect();
        let mut inv = inv;
        if self.pieces[0].slope.is_negative() {
            bps.reverse();
            inv.reverse();
        }
        PiecewiseAffineMap::new(bps, inv)
    }
}

impl fmt::Display for PiecewiseAffineMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, p) in self.pieces.iter().enumerate() {
            if i > 0 {
                write!(f, " | {} | ", self.breakpoints[i - 1])?;
            }
            write!(f, "{}x{:+}", p.slope, p.intercept.to_f64())?;
        }
        Ok(())
    }
}

fn raw_contains(t: &RawInterval, y: &Rational) -> bool {
    let lo_ok = match t.lo.cmp_point(y) {
        Ordering::Less => true,
        Ordering::Equal => t.lo_closed,
        Ordering::Greater => false,
    };
    let hi_ok = match t.hi.cmp_point(y) {
        Ordering::Greater => true,
        Ordering::Equal => t.hi_closed,
        Ordering::Less => false,
    };
    lo_ok && hi_ok
}

pub(crate) fn whole_line() -> RawInterval {
    RawInterval { lo: Endpoint::NegInf, lo_closed: false, hi: Endpoint::PosInf, hi_closed: false }
}

#[derive(Serialize, Deserialize)]
struct MapJson {
    breakpoints: Vec<Rational>,
    pieces: Vec<AffinePiece>,
}

impl Serialize for PiecewiseAffineMap {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        MapJson { breakpoints: self.breakpoints.clone(), pieces: self.pieces.clone() }.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for PiecewiseAffineMap {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let raw = MapJson::deserialize(deserializer)?;
        PiecewiseAffineMap::new(raw.breakpoints, raw.pieces).map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(n, d)
    }

    #[test]
    fn eval_examples() {
        assert_eq!(PiecewiseAffineMap::doubling().eval(&q(3, 1)), q(6, 1));
        assert_eq!(PiecewiseAffineMap::tent().eval(&q(1, 2)), q(1, 1));
        assert_eq!(PiecewiseAffineMap::identity().eval(&q(-7, 3)), q(-7, 3));
        assert_eq!(PiecewiseAffineMap::tent().eval(&q(-1, 1)), q(-2, 1));
        assert_eq!(PiecewiseAffineMap::tent().eval(&q(2, 1)), q(-2, 1));
    }

    #[test]
    fn constructor_rejects_bad_maps() {
        let p = |s: i64, b: i64| AffinePiece::new(q(s, 1), q(b, 1));
        assert!(PiecewiseAffineMap::new(vec![q(0, 1)], vec![p(1, 0), p(2, 1)]).is_err());
        assert!(PiecewiseAffineMap::new(vec![q(1, 1), q(0, 1)], vec![p(1, 0); 3]).is_err());
        assert!(PiecewiseAffineMap::new(vec![], vec![]).is_err());
        // Collinear pieces collapse.
        let m = PiecewiseAffineMap::new(vec![q(0, 1), q(1, 1)], vec![p(1, 0); 3]).unwrap();
        assert_eq!(m, PiecewiseAffineMap::identity());
    }

    #[test]
    fn preimage_examples() {
        let d = PiecewiseAffineMap::doubling();
        assert_eq!(d.preimage(&OpenIntervalSet::above(q(2, 1))), OpenIntervalSet::above(q(1, 1)));
        let t = PiecewiseAffineMap::tent();
        let pre = t.preimage(&OpenIntervalSet::between(q(1, 2), q(2, 1)).unwrap());
        assert_eq!(pre, OpenIntervalSet::between(q(1, 4), q(3, 4)).unwrap());
        // Grid oracle for the same preimage.
        for k in -200..=1200 {
            let x = q(k, 1000);
            let inside = x > q(1, 4) && x < q(3, 4);
            assert_eq!(pre.contains_point(&x), inside, "x = {x}");
        }
        assert!(t.preimage(&OpenIntervalSet::full()).is_full());
        assert!(d.preimage(&OpenIntervalSet::full()).is_full());
        // Constant pieces contribute whole regions.
        let flat = PiecewiseAffineMap::new(
            vec![q(0, 1), q(1, 1)],
            vec![
                AffinePiece::new(q(1, 1), q(0, 1)),
                AffinePiece::new(q(0, 1), q(0, 1)),
                AffinePiece::new(q(1, 1), q(-1, 1)),
            ],
        )
        .unwrap();
        let pre = flat.preimage(&OpenIntervalSet::between(q(-1, 2), q(1, 2)).unwrap());
        assert_eq!(pre, OpenIntervalSet::between(q(-1, 2), q(3, 2)).unwrap());
    }

    #[test]
    fn perfectness_examples() {
        assert!(PiecewiseAffineMap::doubling().is_perfect());
        assert!(!PiecewiseAffineMap::affine(q(0, 1), q(0, 1)).is_perfect());
        assert!(PiecewiseAffineMap::tent().is_perfect());
        let half_flat = PiecewiseAffineMap::new(
            vec![q(0, 1)],
            vec![AffinePiece::new(q(0, 1), q(0, 1)), AffinePiece::new(q(1, 1), q(0, 1))],
        )
        .unwrap();
        assert!(!half_flat.is_perfect());
    }

    #[test]
    fn perfectness_matches_fiber_compactness() {
        let maps = [
            PiecewiseAffineMap::doubling(),
            PiecewiseAffineMap::tent(),
            PiecewiseAffineMap::abs(),
            PiecewiseAffineMap::affine(q(0, 1), q(3, 1)),
            PiecewiseAffineMap::new(
                vec![q(0, 1)],
                vec![AffinePiece::new(q(0, 1), q(0, 1)), AffinePiece::new(q(1, 1), q(0, 1))],
            )
            .unwrap(),
            PiecewiseAffineMap::new(
                vec![q(0, 1), q(1, 1)],
                vec![
                    AffinePiece::new(q(1, 1), q(0, 1)),
                    AffinePiece::new(q(0, 1), q(0, 1)),
                    AffinePiece::new(q(1, 1), q(-1, 1)),
                ],
            )
            .unwrap(),
        ];
        for f in &maps {
            let mut samples: Vec<Rational> = (-20..=20).map(|k| q(k, 4)).collect();
            samples.extend(f.pieces().iter().map(|p| p.intercept.clone()));
            let all_compact = samples.iter().all(|y| f.fiber(y).iter().all(|(a, b)| a.is_finite() && b.is_finite()));
            assert_eq!(f.is_perfect(), all_compact, "map {f}");
        }
    }

    #[test]
    fn power_examples() {
        let d3 = PiecewiseAffineMap::doubling().power(3).unwrap();
        assert_eq!(d3, PiecewiseAffineMap::affine(q(8, 1), q(0, 1)));
        let t = PiecewiseAffineMap::tent();
        let t2 = t.power(2).unwrap();
        assert_eq!(t2.breakpoints(), &[q(1, 4), q(1, 2), q(3, 4)]);
        assert_eq!(t.power(1).unwrap(), t);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let x = q(rng.gen_range(-3000..4000), 1000);
            assert_eq!(t2.eval(&x), t.iterate(&x, 2));
        }
        assert!(t.power_capped(20, 100).is_err());
        assert!(t.power(0).is_err());
        // Lap count of T^n on [0,1] is 2^n.
        for n in 1..=10 {
            let tn = t.power(n).unwrap();
            let interior = tn.breakpoints().iter().filter(|b| **b > q(0, 1) && **b < q(1, 1)).count();
            assert_eq!(interior + 1, 1 << n);
        }
    }

    #[test]
    fn surjectivity_examples() {
        assert!(PiecewiseAffineMap::doubling().is_surjective_onto_line());
        assert!(PiecewiseAffineMap::tent().is_surjective_onto_interval(&CompactInterval::unit()));
        assert!(!PiecewiseAffineMap::abs().is_surjective_onto_line());
        assert!(!PiecewiseAffineMap::tent().is_surjective_onto_line());
        assert!(PiecewiseAffineMap::tent().maps_into(&CompactInterval::unit()));
        assert!(!PiecewiseAffineMap::doubling().maps_into(&CompactInterval::unit()));
    }

    #[test]
    fn inverse_roundtrip() {
        let h = PiecewiseAffineMap::new(
            vec![q(0, 1)],
            vec![AffinePiece::new(q(-2, 1), q(1, 1)), AffinePiece::new(q(-1, 2), q(1, 1))],
        )
        .unwrap();
        let inv = h.inverse().unwrap();
        assert_eq!(inv.compose(&h), PiecewiseAffineMap::identity());
        assert_eq!(h.compose(&inv), PiecewiseAffineMap::identity());
        assert!(PiecewiseAffineMap::tent().inverse().is_err());
    }

    #[test]
    fn json_schema() {
        let text = serde_json::to_string(&PiecewiseAffineMap::tent()).unwrap();
        assert_eq!(
            text,
            r#"{"breakpoints":["1/2"],"pieces":[{"slope":"2","intercept":"0"},{"slope":"-2","intercept":"2"}]}"#
        );
        let back: PiecewiseAffineMap = serde_json::from_str(&text).unwrap();
        assert_eq!(back, PiecewiseAffineMap::tent());
        let bad = r#"{"breakpoints":["0"],"pieces":[{"slope":"1","intercept":"0"},{"slope":"1","intercept":"1"}]}"#;
        assert!(serde_json::from_str::<PiecewiseAffineMap>(bad).is_err());
    }

    // Random continuous maps: pick breakpoints and values, interpolate.
    pub(crate) fn random_map() -> impl Strategy<Value = PiecewiseAffineMap> {
        (proptest::collection::btree_set(-8i64..8, 0..4), proptest::collection::vec(-8i64..8, 5), -3i64..=3, -3i64..=3)
            .prop_map(|(bps, vals, s0, s1)| {
                let bps: Vec<Rational> = bps.into_iter().map(|b| q(b, 2)).collect();
                let vals: Vec<Rational> = vals.into_iter().map(|v| q(v, 3)).collect();
                let mut pieces = Vec::new();
                if bps.is_empty() {
                    pieces.push(AffinePiece::new(q(s0, 1), vals[0].clone()));
                } else {
                    let v = |i: usize| vals[i % vals.len()].clone();
                    let first = q(s0, 1);
                    pieces.push(AffinePiece::new(first.clone(), &v(0) - &(&first * &bps[0])));
                    for i in 0..bps.len() - 1 {
                        let slope = &(&v(i + 1) - &v(i)) / &(&bps[i + 1] - &bps[i]);
                        let icpt = &v(i) - &(&slope * &bps[i]);
                        pieces.push(AffinePiece::new(slope, icpt));
                    }
                    let last = q(s1, 1);
                    let k = bps.len() - 1;
                    pieces.push(AffinePiece::new(last.clone(), &v(k) - &(&last * &bps[k])));
                }
                PiecewiseAffineMap::new(bps, pieces).unwrap()
            })
    }

    fn open_set() -> impl Strategy<Value = OpenIntervalSet> {
        proptest::collection::vec((-10i64..10, 1i64..6, any::<bool>(), any::<bool>()), 0..4).prop_map(|v| {
            let ivs = v
                .into_iter()
                .map(|(a, len, inf_l, inf_r)| {
                    let l = if inf_l && a < -5 { Endpoint::NegInf } else { Endpoint::Finite(q(a, 3)) };
                    let r = if inf_r && a > 5 { Endpoint::PosInf } else { Endpoint::Finite(q(a + len, 3)) };
                    (l, r)
                })
                .collect();
            OpenIntervalSet::normalize(ivs).unwrap()
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(300))]

        #[test]
        fn preimage_membership(f in random_map(), u in open_set(), xs in proptest::collection::vec(-400i64..400, 40)) {
            let pre = f.preimage(&u);
            let mut pts: Vec<Rational> = xs.into_iter().map(|k| q(k, 60)).collect();
            pts.extend(pre.finite_endpoints().cloned());
            pts.extend(f.breakpoints().iter().cloned());
            for x in &pts {
                prop_assert_eq!(pre.contains_point(x), u.contains_point(&f.eval(x)));
            }
        }

        #[test]
        fn preimage_is_lattice_morphism(f in random_map(), a in open_set(), b in open_set()) {
            prop_assert_eq!(f.preimage(&a.intersect(&b)), f.preimage(&a).intersect(&f.preimage(&b)));
            prop_assert_eq!(f.preimage(&a.union(&b)), f.preimage(&a).union(&f.preimage(&b)));
        }

        #[test]
        fn perfect_maps_pull_back_cocompact_sets(f in random_map(), a in open_set()) {
            let rays = OpenIntervalSet::normalize(vec![
                (Endpoint::NegInf, Endpoint::Finite(q(-4, 1))),
                (Endpoint::Finite(q(4, 1)), Endpoint::PosInf),
            ]).unwrap();
            let u = a.union(&rays);
            if f.is_perfect() {
                prop_assert!(f.preimage(&u).is_cocompact());
            }
        }

        #[test]
        fn power_is_additive(f in random_map(), m in 1usize..3, n in 1usize..3, xs in proptest::collection::vec(-100i64..100, 10)) {
            let fm = f.power(m).unwrap();
            let fn_ = f.power(n).unwrap();
            let fmn = f.power(m + n).unwrap();
            prop_assert_eq!(fm.compose(&fn_), fmn.clone());
            for k in xs {
                let x = q(k, 7);
                prop_assert_eq!(fmn.eval(&x), f.iterate(&x, m + n));
            }
        }
    }
}
