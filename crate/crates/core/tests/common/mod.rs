#![allow(dead_code)]

use cocompact::interval::{Endpoint, OpenIntervalSet};
use cocompact::{FiniteCover, PiecewiseAffineMap, Rational, Space};

pub fn q(n: i64, d: i64) -> Rational {
    Rational::new(n, d)
}

pub fn fin(n: i64, d: i64) -> Endpoint {
    Endpoint::Finite(q(n, d))
}

/// Whether `set` contains the whole space: all of `R`, or the closed interval.
pub fn covers_space(set: &OpenIntervalSet, space: &Space) -> bool {
    match space {
        Space::Line => set.is_full(),
        Space::Interval(k) => set.complement().iter().all(|seg| {
            let below = matches!(&seg.hi, Endpoint::Finite(h) if h < k.left()) || seg.hi == Endpoint::NegInf;
            let above = matches!(&seg.lo, Endpoint::Finite(l) if l > k.right()) || seg.lo == Endpoint::PosInf;
            below || above
        }),
    }
}

fn subset_covers(elements: &[OpenIntervalSet], space: &Space, k: usize, start: usize, acc: &OpenIntervalSet) -> bool {
    if k == 0 {
        return covers_space(acc, space);
    }
    (start..=elements.len() - k).any(|i| subset_covers(elements, space, k - 1, i + 1, &acc.union(&elements[i])))
}

/// Smallest number of elements whose union is the space, by trying every
/// subset in order of size.
pub fn exhaustive_n(elements: &[OpenIntervalSet], space: &Space) -> Option<usize> {
    (1..=elements.len()).find(|&k| subset_covers(elements, space, k, 0, &OpenIntervalSet::empty()))
}

pub fn exhaustive_cover_n(u: &FiniteCover) -> usize {
    exhaustive_n(u.elements(), u.space()).expect("a cover has a finite subcover")
}

/// Surjectivity of a continuous piecewise-affine map onto the space, from
/// its end slopes on `R` or its extreme values on a compact interval.
pub fn is_onto(f: &PiecewiseAffineMap, space: &Space) -> bool {
    match space {
        Space::Line => {
            let pieces = f.pieces();
            let (first, last) = (&pieces[0].slope, &pieces[pieces.len() - 1].slope);
            let zero = Rational::zero();
            (first > &zero && last > &zero) || (first < &zero && last < &zero)
        }
        Space::Interval(k) => {
            let mut pts = vec![k.left().clone(), k.right().clone()];
            pts.extend(f.breakpoints().iter().filter(|b| *b > k.left() && *b < k.right()).cloned());
            let vals: Vec<Rational> = pts.iter().map(|x| f.eval(x)).collect();
            vals.iter().min() == Some(k.left()) && vals.iter().max() == Some(k.right())
        }
    }
}

/// `f^{-1}(set)` for `f(x) = a x` with `a > 0`.
pub fn scale_preimage(set: &OpenIntervalSet, a: &Rational) -> OpenIntervalSet {
    set.affine_image(&(&Rational::one() / a), &Rational::zero())
}
