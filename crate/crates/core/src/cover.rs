//! Finite open covers of the line or of a compact interval, their join and
//! pullback algebra, and the minimal subcover count `N(U)`.
//!
//! On a compact interval `[a, b]` an element is stored as the canonical
//! open set of the line whose trace on `[a, b]` is the relatively open
//! element: every component meeting `[a, b]` that reaches past `a` (resp.
//! `b`) is extended to `-inf` (resp. `+inf`), and components missing
//! `[a, b]` are dropped. A family of canonical sets covers `[a, b]` iff it
//! covers the line, so a single cell arrangement on the line serves both
//! kinds of space.

use std::collections::HashSet;
use std::fmt;

use fixedbitset::FixedBitSet;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::config::LogBase;
use crate::error::{Error, Result};
use crate::interval::{Endpoint, OpenIntervalSet};
use crate::piecewise::{CompactInterval, PiecewiseAffineMap};
use crate::rational::Rational;
use crate::setcover::SetCoverInstance;

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum Space {
    Line,
    Interval(CompactInterval),
}

impl Space {
    pub fn unit() -> Self {
        Space::Interval(CompactInterval::unit())
    }

    pub fn is_line(&self) -> bool {
        matches!(self, Space::Line)
    }

    /// Canonical representative of the trace of `u` on this space.
    pub fn canonicalize(&self, u: &OpenIntervalSet) -> OpenIntervalSet {
        let k = match self {
            Space::Line => return u.clone(),
            Space::Interval(k) => k,
        };
        let (a, b) = (k.left(), k.right());
        let raw: Vec<(Endpoint, Endpoint)> = u
            .intervals()
            .iter()
            .filter(|iv| iv.left.cmp_point(b).is_lt() && iv.right.cmp_point(a).is_gt())
            .map(|iv| {
                let l = if iv.left.cmp_point(a).is_lt() { Endpoint::NegInf } else { iv.left.clone() };
                let r = if iv.right.cmp_point(b).is_gt() { Endpoint::PosInf } else { iv.right.clone() };
                (l, r)
            })
            .collect();
        OpenIntervalSet::normalize(raw).expect("canonical intervals are well formed")
    }

    /// Checks that `f` maps the space into itself.
    pub fn check_invariant(&self, f: &PiecewiseAffineMap) -> Result<()> {
        match self {
            Space::Line => Ok(()),
            Space::Interval(k) if f.maps_into(k) => Ok(()),
            Space::Interval(k) => {
                Err(Error::NotInvariant(format!("f({k}) = {} is not contained in {k}", f.image_of(k))))
            }
        }
    }

    pub fn is_surjective(&self, f: &PiecewiseAffineMap) -> bool {
        match self {
            Space::Line => f.is_surjective_onto_line(),
            Space::Interval(k) => f.is_surjective_onto_interval(k),
        }
    }
}

impl fmt::Display for Space {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Space::Line => f.write_str("R"),
            Space::Interval(k) => write!(f, "{k}"),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum SpaceJson {
    Named(String),
    Interval { interval: CompactInterval },
}

impl Serialize for Space {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Space::Line => SpaceJson::Named("R".into()),
            Space::Interval(k) => SpaceJson::Interval { interval: k.clone() },
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Space {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        match SpaceJson::deserialize(deserializer)? {
            SpaceJson::Named(s) if s == "R" => Ok(Space::Line),
            SpaceJson::Named(s) => Err(D::Error::custom(format!("unknown space {s:?}"))),
            SpaceJson::Interval { interval } => Ok(Space::Interval(interval)),
        }
    }
}

/// Result of a minimal-subcover search.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Subcover {
    pub size: usize,
    /// Indices into the cover's element list.
    pub witness: Vec<usize>,
    pub exact: bool,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct FiniteCover {
    space: Space,
    elements: Vec<OpenIntervalSet>,
    cocompact: Vec<bool>,
}

/// Validates `elements` as an open cover of `space`.
pub fn make_cover(space: Space, elements: Vec<OpenIntervalSet>) -> Result<FiniteCover> {
    FiniteCover::new(space, elements)
}

impl FiniteCover {
    /// Canonicalizes, drops empty and duplicate elements, and checks that the
    /// union is the whole space.
    pub fn new(space: Space, elements: Vec<OpenIntervalSet>) -> Result<Self> {
        let cover = Self::from_canonical(space.clone(), elements.iter().map(|u| space.canonicalize(u)));
        if cover.elements.is_empty() {
            return Err(Error::NotACover(format!("no nonempty elements for {space}")));
        }
        let union = cover.union();
        if !union.is_full() {
            let gap = union.complement();
            return Err(Error::NotACover(format!(
                "union misses {} of {space}",
                gap.iter().map(|g| format!("[{}, {}]", g.lo, g.hi)).collect::<Vec<_>>().join(", ")
            )));
        }
        Ok(cover)
    }

    fn from_canonical(space: Space, elements: impl IntoIterator<Item = OpenIntervalSet>) -> Self {
        let mut seen = HashSet::new();
        let elements: Vec<OpenIntervalSet> =
            elements.into_iter().filter(|u| !u.is_empty() && seen.insert(u.clone())).collect();
        let cocompact = elements.iter().map(|u| !space.is_line() || u.is_cocompact()).collect();
        FiniteCover { space, elements, cocompact }
    }

    /// The one-element cover `{X}`.
    pub fn trivial(space: Space) -> Self {
        Self::from_canonical(space, [OpenIntervalSet::full()])
    }

    /// `{[a, cut + overlap), (cut - overlap, b]}` on `K = [a, b]`.
    pub fn split_at(k: &CompactInterval, cut: &Rational, overlap: &Rational) -> Result<FiniteCover> {
        FiniteCover::new(
            Space::Interval(k.clone()),
            vec![OpenIntervalSet::below(cut + overlap), OpenIntervalSet::above(cut - overlap)],
        )
    }

    /// The tent map's near-partition of `[0, 1]` at `1/2` with overlap `2^-16`.
    pub fn tent_generating() -> FiniteCover {
        Self::split_at(&CompactInterval::unit(), &Rational::new(1, 2), &Rational::pow2(-16)).expect("valid cover")
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    pub fn elements(&self) -> &[OpenIntervalSet] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Per-element co-compactness. Every relatively open subset of a compact
    /// interval is co-compact, so these are all true off the line.
    pub fn cocompact_flags(&self) -> &[bool] {
        &self.cocompact
    }

    pub fn is_cocompact(&self) -> bool {
        self.cocompact.iter().all(|&c| c)
    }

    pub fn union(&self) -> OpenIntervalSet {
        self.elements.iter().fold(OpenIntervalSet::empty(), |acc, u| acc.union(u))
    }

    /// True iff the whole space is an element.
    pub fn has_full_element(&self) -> bool {
        self.elements.iter().any(|u| u.is_full())
    }

    fn same_space(&self, other: &FiniteCover) -> Result<()> {
        if self.space != other.space {
            return Err(Error::SpaceMismatch(format!("{} vs {}", self.space, other.space)));
        }
        Ok(())
    }

    /// `U ∨ V = {A ∩ B}` without empties or duplicates.
    pub fn join(&self, other: &FiniteCover) -> Result<FiniteCover> {
        self.same_space(other)?;
        let meets = self.elements.iter().flat_map(|a| other.elements.iter().map(move |b| a.intersect(b)));
        Ok(Self::from_canonical(self.space.clone(), meets))
    }

    /// `f^{-1}(U)`. On a compact interval the map must leave it invariant.
    pub fn pullback(&self, f: &PiecewiseAffineMap) -> Result<FiniteCover> {
        self.space.check_invariant(f)?;
        let pre = self.elements.iter().map(|u| self.space.canonicalize(&f.preimage(u)));
        Ok(Self::from_canonical(self.space.clone(), pre))
    }

    /// `self ≺ finer`: every element of `finer` lies in some element of `self`.
    pub fn refines(&self, finer: &FiniteCover) -> Result<bool> {
        self.same_space(finer)?;
        Ok(finer.elements.iter().all(|v| self.elements.iter().any(|u| u.contains(v))))
    }

    /// Keeps only elements not contained in another element. `N` is unchanged.
    pub fn maximal_elements(&self) -> FiniteCover {
        let n = self.elements.len();
        let hulls: Vec<_> = self.elements.iter().map(|e| e.hull().expect("elements are nonempty")).collect();
        let keep: Vec<bool> = (0..n)
            .map(|i| {
                let (lo, hi) = hulls[i];
                !(0..n).any(|j| {
                    j != i
                        && hulls[j].0 <= lo
                        && hulls[j].1 >= hi
                        && self.elements[j].contains(&self.elements[i])
                        && self.elements[j] != self.elements[i]
                })
            })
            .collect();
        let elements = (0..n).filter(|&i| keep[i]).map(|i| self.elements[i].clone()).collect::<Vec<_>>();
        Self::from_canonical(self.space.clone(), elements)
    }

    /// Sub-family of the given indices (must still cover the space).
    pub fn subfamily(&self, indices: &[usize]) -> Result<FiniteCover> {
        let elems = indices
            .iter()
            .map(|&i| {
                self.elements
                    .get(i)
                    .cloned()
                    .ok_or_else(|| Error::InvalidInput(format!("element index {i} out of range")))
            })
            .collect::<Result<Vec<_>>>()?;
        FiniteCover::new(self.space.clone(), elems)
    }

    /// The set-cover instance over the endpoint arrangement of all elements.
    ///
    /// With sorted distinct endpoints `p_0 < … < p_{m-1}` the cells are the
    /// left ray (index 0), the points `p_i` (index `2i+1`), the gaps
    /// `(p_i, p_{i+1})` (index `2i+2`) and the right ray (index `2m`).
    /// Membership is constant on each cell.
    pub fn arrangement(&self) -> SetCoverInstance {
        let mut points: Vec<&Rational> = self.elements.iter().flat_map(|u| u.finite_endpoints()).collect();
        points.sort();
        points.dedup();
        let m = points.len();
        let universe = 2 * m + 1;
        let index = |x: &Rational| points.binary_search(&x).expect("endpoint is in the arrangement");
        let sets = self
            .elements
            .iter()
            .map(|u| {
                let mut b = FixedBitSet::with_capacity(universe);
                for iv in u.intervals() {
                    let lo = match &iv.left {
                        Endpoint::Finite(x) => 2 * index(x) + 2,
                        _ => 0,
                    };
                    let hi = match &iv.right {
                        Endpoint::Finite(x) => 2 * index(x),
                        _ => 2 * m,
                    };
                    b.insert_range(lo..hi + 1);
                }
                b
            })
            .collect();
        SetCoverInstance::new(universe, sets)
    }

    /// `N(U)` with a witness subcover. The witness is re-verified exactly.
    pub fn minimal_subcover(&self, exact_threshold: usize) -> Result<Subcover> {
        let inst = self.arrangement();
        let sol =
            inst.solve(exact_threshold).ok_or_else(|| Error::NotACover("elements do not cover the space".into()))?;
        let union = sol.chosen.iter().fold(OpenIntervalSet::empty(), |acc, &i| acc.union(&self.elements[i]));
        if !union.is_full() {
            return Err(Error::NotACover("solver witness failed exact verification".into()));
        }
        Ok(Subcover { size: sol.chosen.len(), witness: sol.chosen, exact: sol.exact })
    }

    pub fn minimal_subcover_size(&self, exact_threshold: usize) -> Result<usize> {
        Ok(self.minimal_subcover(exact_threshold)?.size)
    }

    /// `H(U) = log N(U)`.
    pub fn cover_entropy(&self, base: LogBase, exact_threshold: usize) -> Result<f64> {
        Ok(base.log(self.minimal_subcover_size(exact_threshold)? as f64))
    }
}

impl fmt::Display for FiniteCover {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} on {}: {{", if self.is_cocompact() { "co-compact cover" } else { "cover" }, self.space)?;
        for (i, u) in self.elements.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{u}")?;
        }
        f.write_str("}")
    }
}

#[derive(Serialize, Deserialize)]
struct CoverJson {
    space: Space,
    elements: Vec<OpenIntervalSet>,
}

impl Serialize for FiniteCover {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        CoverJson { space: self.space.clone(), elements: self.elements.clone() }.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for FiniteCover {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let raw = CoverJson::deserialize(deserializer)?;
        FiniteCover::new(raw.space, raw.elements).map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::DEFAULT_EXACT_THRESHOLD as T;

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(n, d)
    }

    fn set(ivs: &[(Option<Rational>, Option<Rational>)]) -> OpenIntervalSet {
        OpenIntervalSet::normalize(
            ivs.iter()
                .map(|(l, r)| {
                    (
                        l.clone().map_or(Endpoint::NegInf, Endpoint::Finite),
                        r.clone().map_or(Endpoint::PosInf, Endpoint::Finite),
                    )
                })
                .collect(),
        )
        .unwrap()
    }

    fn rays() -> FiniteCover {
        make_cover(Space::Line, vec![OpenIntervalSet::below(q(1, 1)), OpenIntervalSet::above(q(-1, 1))]).unwrap()
    }

    fn unit_pair() -> FiniteCover {
        make_cover(Space::unit(), vec![OpenIntervalSet::below(q(3, 5)), OpenIntervalSet::above(q(2, 5))]).unwrap()
    }

    #[test]
    fn make_cover_examples() {
        let c = rays();
        assert_eq!(c.len(), 2);
        assert_eq!(c.cocompact_flags(), &[false, false]);
        assert!(unit_pair().is_cocompact());
        let err = make_cover(Space::Line, vec![OpenIntervalSet::between(q(0, 1), q(1, 1)).unwrap()]);
        assert!(matches!(err, Err(Error::NotACover(_))));
        let mixed = make_cover(
            Space::Line,
            vec![set(&[(None, Some(q(1, 1))), (Some(q(5, 1)), None)]), OpenIntervalSet::above(q(0, 1))],
        )
        .unwrap();
        assert_eq!(mixed.cocompact_flags(), &[true, false]);
    }

    #[test]
    fn canonical_traces() {
        let k = Space::unit();
        let u =
            set(&[(Some(q(-3, 1)), Some(q(-2, 1))), (Some(q(-1, 2)), Some(q(1, 4))), (Some(q(1, 2)), Some(q(2, 1)))]);
        assert_eq!(k.canonicalize(&u), set(&[(None, Some(q(1, 4))), (Some(q(1, 2)), None)]));
        let point = Space::Interval(CompactInterval::point(q(0, 1)));
        assert!(point.canonicalize(&OpenIntervalSet::between(q(-1, 1), q(1, 1)).unwrap()).is_full());
        assert!(point.canonicalize(&OpenIntervalSet::between(q(0, 1), q(1, 1)).unwrap()).is_empty());
        let not_cover =
            make_cover(Space::unit(), vec![OpenIntervalSet::below(q(1, 2)), OpenIntervalSet::above(q(1, 2))]);
        assert!(not_cover.is_err());
    }

    #[test]
    fn join_examples() {
        let c = rays();
        let j = c.join(&c).unwrap();
        let expected = vec![
            OpenIntervalSet::below(q(1, 1)),
            OpenIntervalSet::between(q(-1, 1), q(1, 1)).unwrap(),
            OpenIntervalSet::above(q(-1, 1)),
        ];
        assert_eq!(j.elements(), expected.as_slice());
        let t = FiniteCover::trivial(Space::Line);
        assert_eq!(c.join(&t).unwrap(), c);
        assert!(c.join(&unit_pair()).is_err());
    }

    #[test]
    fn pullback_examples() {
        let c = rays();
        let p = c.pullback(&PiecewiseAffineMap::doubling()).unwrap();
        assert_eq!(p.elements(), &[OpenIntervalSet::below(q(1, 2)), OpenIntervalSet::above(q(-1, 2))]);
        assert_eq!(c.pullback(&PiecewiseAffineMap::identity()).unwrap(), c);
        // Two branches times two elements give four pieces; the two pieces of
        // the right element meet at the peak and merge.
        let tent = PiecewiseAffineMap::tent();
        let t = unit_pair().pullback(&tent).unwrap();
        let interval_count: usize = t.elements().iter().map(|u| u.len()).sum();
        assert_eq!(interval_count, 3);
        for k in 0..=1000 {
            let x = q(k, 1000);
            let y = tent.eval(&x);
            assert_eq!(t.elements()[0].contains_point(&x), y < q(3, 5));
            assert_eq!(t.elements()[1].contains_point(&x), y > q(2, 5));
        }
        assert!(unit_pair().pullback(&PiecewiseAffineMap::doubling()).is_err());
    }

    #[test]
    fn refinement_facts() {
        let c = rays();
        let d = c.pullback(&PiecewiseAffineMap::doubling()).unwrap();
        assert!(c.refines(&c.join(&d).unwrap()).unwrap());
        let sub = c.subfamily(&[0, 1]).unwrap();
        assert!(sub.refines(&c).unwrap());
        assert!(FiniteCover::trivial(Space::Line).refines(&c).unwrap());
    }

    #[test]
    fn minimal_subcover_examples() {
        let with_full = make_cover(
            Space::Line,
            vec![OpenIntervalSet::below(q(0, 1)), OpenIntervalSet::full(), OpenIntervalSet::above(q(0, 1))],
        )
        .unwrap();
        let s = with_full.minimal_subcover(T).unwrap();
        assert_eq!((s.size, s.witness.as_slice(), s.exact), (1, &[1usize][..], true));
        assert_eq!(unit_pair().minimal_subcover_size(T).unwrap(), 2);
        assert_eq!(unit_pair().cover_entropy(LogBase::E, T).unwrap(), 2f64.ln());
        assert_eq!(with_full.cover_entropy(LogBase::Two, T).unwrap(), 0.0);
    }

    #[test]
    fn maximal_elements_keep_n() {
        let c = rays();
        let j = c.join(&c.pullback(&PiecewiseAffineMap::doubling()).unwrap()).unwrap();
        let m = j.maximal_elements();
        assert!(m.len() <= j.len());
        assert_eq!(m.minimal_subcover_size(T).unwrap(), j.minimal_subcover_size(T).unwrap());
    }

    #[test]
    fn json_schema() {
        let text = serde_json::to_string(&unit_pair()).unwrap();
        assert_eq!(
            text,
            r#"{"space":{"interval":["0","1"]},"elements":[{"intervals":[["-inf","3/5"]]},{"intervals":[["2/5","+inf"]]}]}"#
        );
        let back: FiniteCover = serde_json::from_str(&text).unwrap();
        assert_eq!(back, unit_pair());
        let line: FiniteCover = serde_json::from_str(
            r#"{"space":"R","elements":[{"intervals":[["-inf","1"]]},{"intervals":[["-1","+inf"]]}]}"#,
        )
        .unwrap();
        assert_eq!(line, rays());
        assert!(serde_json::from_str::<FiniteCover>(r#"{"space":"R","elements":[{"intervals":[["0","1"]]}]}"#).is_err());
    }
}
