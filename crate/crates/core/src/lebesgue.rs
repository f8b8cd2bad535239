//! Lebesgue numbers of interval covers and the spanning-set bound on `N_n`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::bowen::{spanning_number, Grid, GridRule};
use crate::config::Settings;
use crate::cover::{FiniteCover, Space};
use crate::entropy::entropy_sequence;
use crate::error::{Error, Result};
use crate::interval::{Endpoint, Extent, OpenIntervalSet};
use crate::piecewise::{CompactInterval, PiecewiseAffineMap};
use crate::rational::Rational;

/// The largest `δ` such that every subset of the space with diameter below
/// `δ` lies in one element.
///
/// A closed interval `[s, t]` lies in an element iff it lies in one of its
/// components `(c, d)`, so `δ = inf_s max{d - s : c < s < d}`. Between
/// consecutive endpoints that function decreases with slope `-1`, so the
/// infimum is reached at an endpoint or approached from its left.
pub fn lebesgue_number(u: &FiniteCover) -> Extent {
    if u.has_full_element() {
        return Extent::Infinite;
    }
    let comps: Vec<(&Endpoint, &Endpoint)> =
        u.elements().iter().flat_map(|e| e.intervals().iter().map(|iv| (&iv.left, &iv.right))).collect();
    let mut points: Vec<Rational> = u.elements().iter().flat_map(|e| e.finite_endpoints().cloned()).collect();
    let window = match u.space() {
        Space::Line => None,
        Space::Interval(k) => {
            points.push(k.left().clone());
            points.push(k.right().clone());
            Some(k)
        }
    };
    if let Some(k) = window {
        points.retain(|p| k.contains_point(p));
    }
    points.sort();
    points.dedup();

    let reach = |d: &Endpoint, s: &Rational| match d {
        Endpoint::Finite(d) => Extent::Finite(d - s),
        _ => Extent::Infinite,
    };
    let mut best = Extent::Infinite;
    let mut prev: Endpoint = match window {
        Some(_) => Endpoint::PosInf,
        None => Endpoint::NegInf,
    };
    for p in &points {
        let at = Endpoint::Finite(p.clone());
        let here = comps.iter().filter(|(c, d)| **c < at && at < **d).map(|(_, d)| reach(d, p)).max();
        let before = (prev != Endpoint::PosInf)
            .then(|| comps.iter().filter(|(c, d)| **c <= prev && **d >= at).map(|(_, d)| reach(d, p)).max())
            .flatten();
        for v in [here, before].into_iter().flatten() {
            best = best.min(v);
        }
        prev = at;
    }
    best
}

/// Outcome of [`verify_lebesgue`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LebesgueCheck {
    pub passed: bool,
    pub trials: usize,
    /// First open interval found in no element.
    pub witness: Option<(Rational, Rational)>,
}

const SAMPLE_BITS: i32 = 20;

fn sample(rng: &mut ChaCha8Rng, lo: &Rational, width: &Rational) -> Rational {
    let k = rng.gen_range(0..=1i64 << SAMPLE_BITS);
    lo + &(width * &Rational::new(k, 1 << SAMPLE_BITS))
}

/// Draws `trials` open intervals of diameter below `delta`, centred over a
/// range reaching past every endpoint of the cover, and checks each lies in
/// some element.
pub fn verify_lebesgue(u: &FiniteCover, delta: &Extent, trials: usize, seed: u64) -> LebesgueCheck {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ends: Vec<Rational> = u.elements().iter().flat_map(|e| e.finite_endpoints().cloned()).collect();
    let (lo, hi) = match u.space() {
        Space::Interval(k) => (k.left().clone(), k.right().clone()),
        Space::Line => match (ends.iter().min(), ends.iter().max()) {
            (Some(a), Some(b)) => (a.clone(), b.clone()),
            _ => (Rational::zero(), Rational::zero()),
        },
    };
    let span = &(&hi - &lo) + &Rational::one();
    let max_len = match delta {
        Extent::Finite(d) => d.clone(),
        Extent::Infinite => &span * &Rational::from_integer(4),
    };
    let (from, width) = match u.space() {
        Space::Interval(_) => (&lo - &max_len, &span + &(&max_len * &Rational::from_integer(2))),
        Space::Line => (&lo - &span, &span * &Rational::from_integer(3)),
    };
    for _ in 0..trials {
        let center = sample(&mut rng, &from, &width);
        // Strictly below `max_len`.
        let len = &max_len * &Rational::new(rng.gen_range(0..1i64 << SAMPLE_BITS), 1 << SAMPLE_BITS);
        let half = &len / &Rational::from_integer(2);
        let (mut a, mut b) = (&center - &half, &center + &half);
        if let Space::Interval(k) = u.space() {
            if a >= *k.right() || b <= *k.left() {
                continue;
            }
            // Traces reaching an end of `K` extend to infinity.
            if a < *k.left() {
                a = k.left() - &Rational::one();
            }
            if b > *k.right() {
                b = k.right() + &Rational::one();
            }
        }
        if a >= b {
            continue;
        }
        let set = OpenIntervalSet::between(a.clone(), b.clone()).expect("a < b");
        if !u.elements().iter().any(|e| e.contains(&set)) {
            return LebesgueCheck { passed: false, trials, witness: Some((a, b)) };
        }
    }
    LebesgueCheck { passed: true, trials, witness: None }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundRow {
    pub n: usize,
    #[serde(rename = "N")]
    pub big_n: u64,
    pub bound: u64,
    pub ok: bool,
}

/// Report of [`check_spanning_cover_bound`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundReport {
    pub delta: Extent,
    /// Box around the complements of a minimal subcover.
    pub k: Option<CompactInterval>,
    pub rows: Vec<BoundRow>,
    pub seed: u64,
}

impl BoundReport {
    pub fn holds(&self) -> bool {
        self.rows.iter().all(|r| r.ok)
    }
}

/// Checks `N(⋁_{i<n} f^{-i}U) ≤ n·r̂_n(δ/3, K) + 1` for `n = 1..=n_max`, where
/// `r̂_n` is the greedy spanning count (an upper bound on `r_n`).
pub fn check_spanning_cover_bound(
    f: &PiecewiseAffineMap,
    u: &FiniteCover,
    n_max: usize,
    settings: &Settings,
) -> Result<BoundReport> {
    if !f.is_perfect() {
        return Err(Error::NotPerfect("the bound needs a perfect map".into()));
    }
    if !u.is_cocompact() {
        return Err(Error::InvalidInput("the bound needs a co-compact cover".into()));
    }
    let delta = lebesgue_number(u);
    let eps = match &delta {
        Extent::Finite(d) => d / &Rational::from_integer(3),
        Extent::Infinite => {
            let rows = (1..=n_max).map(|n| BoundRow { n, big_n: 1, bound: n as u64 + 1, ok: true }).collect();
            return Ok(BoundReport { delta, k: None, rows, seed: settings.seed });
        }
    };
    let k = match u.space() {
        Space::Interval(k) => k.clone(),
        Space::Line => {
            let sub = u.minimal_subcover(settings.exact_threshold)?;
            // A co-compact element and its complement share their finite endpoints.
            let comp: Vec<Rational> =
                sub.witness.iter().flat_map(|&i| u.elements()[i].finite_endpoints().cloned()).collect();
            let (lo, hi) =
                (comp.iter().min().expect("bounded complements"), comp.iter().max().expect("bounded complements"));
            CompactInterval::new(lo.clone(), hi.clone())?
        }
    };
    let seq = entropy_sequence(f, u, n_max, settings)?;
    let rows = seq
        .counts()
        .iter()
        .enumerate()
        .map(|(i, &big_n)| {
            let n = i + 1;
            let grid = Grid::for_rule(f, &k, n, &eps, &GridRule::Adaptive)?;
            let bound = n as u64 * spanning_number(f, &grid, n, &eps) as u64 + 1;
            Ok(BoundRow { n, big_n, bound, ok: big_n <= bound })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BoundReport { delta, k: Some(k), rows, seed: settings.seed })
}
