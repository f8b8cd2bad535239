//! Co-compact entropy: the sequence `a_n = log N(U ∨ f^{-1}U ∨ … ∨ f^{-(n-1)}U)`,
//! its Fekete estimate, finite cover families, and harnesses for powers,
//! invariant subsystems and conjugacies.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{LogBase, Settings};
use crate::cover::{FiniteCover, Space};
use crate::error::{Error, Result};
use crate::interval::{Endpoint, OpenIntervalSet};
use crate::piecewise::{CompactInterval, PiecewiseAffineMap};
use crate::rational::Rational;
use crate::stats::least_squares;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropyRow {
    pub n: usize,
    #[serde(rename = "N_n")]
    pub big_n: u64,
    pub a_n: f64,
    pub rate: f64,
    pub exact: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EntropySequence {
    pub rows: Vec<EntropyRow>,
    pub log_base: LogBase,
}

impl EntropySequence {
    /// Builds rows from raw counts `N_1, N_2, …`.
    pub fn from_counts(counts: &[(u64, bool)], log_base: LogBase) -> Self {
        let rows = counts
            .iter()
            .enumerate()
            .map(|(i, &(big_n, exact))| {
                let n = i + 1;
                let a_n = log_base.log(big_n as f64);
                EntropyRow { n, big_n, a_n, rate: a_n / n as f64, exact }
            })
            .collect();
        EntropySequence { rows, log_base }
    }

    pub fn counts(&self) -> Vec<u64> {
        self.rows.iter().map(|r| r.big_n).collect()
    }

    pub fn is_exact(&self) -> bool {
        self.rows.iter().all(|r| r.exact)
    }

    /// Pairs `(n, k)` among exact rows with `N_{n+k} > N_n · N_k`.
    pub fn subadditivity_violations(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        let len = self.rows.len();
        for n in 1..=len {
            for k in 1..=len - n {
                let (a, b, c) = (&self.rows[n - 1], &self.rows[k - 1], &self.rows[n + k - 1]);
                if a.exact && b.exact && c.exact && (c.big_n as u128) > (a.big_n as u128) * (b.big_n as u128) {
                    out.push((n, k));
                }
            }
        }
        out
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        for r in &self.rows {
            wtr.serialize(r)?;
        }
        wtr.flush()?;
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimateMethod {
    FeketeMin,
    TailSlope,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EstimateDiagnostics {
    pub slope: f64,
    pub slope_stderr: f64,
    pub converged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EntropyEstimate {
    pub value: f64,
    pub method: EstimateMethod,
    pub n_max: usize,
    pub diagnostics: EstimateDiagnostics,
    /// Some `N_n` came from the greedy fallback (an upper bound).
    pub approximate: bool,
}

/// Fekete estimate `min a_n / n` with a tail-slope diagnostic over the last
/// half of the rows.
pub fn entropy_estimate(seq: &EntropySequence, tolerance: f64) -> Result<EntropyEstimate> {
    estimate_with(seq, EstimateMethod::FeketeMin, tolerance)
}

pub fn estimate_with(seq: &EntropySequence, method: EstimateMethod, tolerance: f64) -> Result<EntropyEstimate> {
    let rows = &seq.rows;
    if rows.is_empty() {
        return Err(Error::InvalidInput("empty entropy sequence".into()));
    }
    let fekete = rows.iter().map(|r| r.rate).fold(f64::INFINITY, f64::min);
    let tail = &rows[rows.len() / 2..];
    let xs: Vec<f64> = tail.iter().map(|r| r.n as f64).collect();
    let ys: Vec<f64> = tail.iter().map(|r| r.a_n).collect();
    let (slope, slope_stderr) = match least_squares(&xs, &ys) {
        Some(fit) => (fit.slope, fit.slope_stderr),
        None => (rows[rows.len() - 1].rate, 0.0),
    };
    let value = match method {
        EstimateMethod::FeketeMin => fekete,
        EstimateMethod::TailSlope => slope.max(0.0),
    };
    Ok(EntropyEstimate {
        value,
        method,
        n_max: rows.len(),
        diagnostics: EstimateDiagnostics { slope, slope_stderr, converged: (fekete - slope).abs() < tolerance },
        approximate: rows.iter().any(|r| !r.exact),
    })
}

fn check_entropy_inputs(f: &PiecewiseAffineMap, u: &FiniteCover, n_max: usize) -> Result<()> {
    if n_max == 0 {
        return Err(Error::InvalidInput("n_max must be at least 1".into()));
    }
    if !f.is_perfect() {
        return Err(Error::NotPerfect(format!("an unbounded piece of {f} is constant")));
    }
    if u.space().is_line() && !u.is_cocompact() {
        return Err(Error::InvalidInput("cover of R has an element that is not co-compact".into()));
    }
    u.space().check_invariant(f)
}

/// Iterates `W_1 = U`, `W_{k+1} = U ∨ f^{-1}(W_k)`, handing each join to `visit`.
/// Elements contained in other elements are discarded, which leaves `N`
/// unchanged at every step.
fn for_each_join(
    f: &PiecewiseAffineMap,
    u: &FiniteCover,
    n_max: usize,
    element_cap: usize,
    mut visit: impl FnMut(usize, &FiniteCover) -> Result<()>,
) -> Result<()> {
    let base = u.maximal_elements();
    let mut w = base.clone();
    for n in 1..=n_max {
        visit(n, &w)?;
        if n < n_max {
            let next = base.join(&w.pullback(f)?)?;
            if next.len() > element_cap {
                return Err(Error::ResourceLimit(format!(
                    "join at n = {} has {} elements (cap {element_cap})",
                    n + 1,
                    next.len()
                )));
            }
            w = next.maximal_elements();
        }
    }
    Ok(())
}

/// The join `⋁_{i<n} f^{-i}(U)` with dominated elements removed.
pub fn iterated_join(f: &PiecewiseAffineMap, u: &FiniteCover, n: usize, settings: &Settings) -> Result<FiniteCover> {
    if n == 0 {
        return Err(Error::InvalidInput("join depth must be at least 1".into()));
    }
    u.space().check_invariant(f)?;
    let mut out = None;
    for_each_join(f, u, n, settings.element_cap, |k, w| {
        if k == n {
            out = Some(w.clone());
        }
        Ok(())
    })?;
    Ok(out.expect("depth reached"))
}

/// Rows `n = 1..=n_max`. Joins are built explicitly while they stay within
/// `settings.element_cap` elements; deeper rows come from the exact word
/// search.
pub fn entropy_sequence(
    f: &PiecewiseAffineMap,
    u: &FiniteCover,
    n_max: usize,
    settings: &Settings,
) -> Result<EntropySequence> {
    check_entropy_inputs(f, u, n_max)?;
    let mut counts: Vec<(u64, bool)> = Vec::with_capacity(n_max);
    let base = u.maximal_elements();
    let mut w = base.clone();
    for n in 1..=n_max {
        let sub = w.minimal_subcover(settings.exact_threshold)?;
        counts.push((sub.size as u64, sub.exact));
        if n == n_max {
            break;
        }
        let next = base.join(&w.pullback(f)?)?.maximal_elements();
        let sparse = sub.size <= WORD_SWITCH_SIZE && next.len() > WORD_SWITCH_RATIO * sub.size;
        if next.len() > settings.element_cap || sparse {
            // Only exact rows certify a lower bound.
            let k0 = counts.iter().filter(|c| c.1).map(|c| c.0).max().unwrap_or(1) as usize;
            let rest = crate::words::word_counts(f, u, n + 1, n_max, k0, settings.state_cap)?;
            counts.extend(rest);
            break;
        }
        w = next;
    }
    Ok(EntropySequence::from_counts(&counts, settings.log_base))
}

/// Joins much larger than their minimal subcover go to the word search early.
const WORD_SWITCH_SIZE: usize = 4;
const WORD_SWITCH_RATIO: usize = 32;

/// Parameters of the default finite cover family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverFamilySpec {
    pub ray_margins: Vec<Rational>,
    pub core_grids: Vec<usize>,
}

impl Default for CoverFamilySpec {
    fn default() -> Self {
        CoverFamilySpec {
            ray_margins: vec![Rational::from_integer(1), Rational::from_integer(2), Rational::from_integer(4)],
            core_grids: vec![0, 2, 4],
        }
    }
}

impl CoverFamilySpec {
    /// Grids of `2^k` cells for `k = 1..=depth`, for compact spaces.
    pub fn binary_grids(depth: u32) -> Self {
        CoverFamilySpec { ray_margins: vec![Rational::one()], core_grids: (1..=depth).map(|k| 1usize << k).collect() }
    }
}

fn grid_intervals(lo: &Rational, hi: &Rational, g: usize) -> Vec<(Rational, Rational)> {
    let w = &(hi - lo) / &Rational::from_integer(g as i64);
    let pad = &w / &Rational::from_integer(4);
    (0..g)
        .map(|i| {
            let start = lo + &(&w * &Rational::from_integer(i as i64));
            (&start - &pad, &(&start + &w) + &pad)
        })
        .collect()
}

/// A deterministic finite family of covers of `space`.
///
/// On the line, margin `M` and grid `g` give the co-compact cover with
/// `L = (-inf, M) ∪ (M+1, +inf)`, `R = (-inf, -M-1) ∪ (-M, +inf)` and `g`
/// overlapping intervals over `[-M, M]` (one interval `(-M, M)` when
/// `g = 0`), each joined with the tails `(-inf, -M-1) ∪ (M+1, +inf)`.
/// On a compact interval, grid `g` gives `g` overlapping relatively open
/// intervals (the trivial cover when `g = 0`) and margins are ignored.
pub fn cover_family(space: &Space, spec: &CoverFamilySpec) -> Result<Vec<FiniteCover>> {
    let mut out = Vec::new();
    match space {
        Space::Line => {
            for m in &spec.ray_margins {
                if !m.is_positive() {
                    return Err(Error::InvalidInput(format!("ray margin {m} must be positive")));
                }
                let one = Rational::one();
                let (neg, m1, neg_m1) = (-m, m + &one, &(-m) - &one);
                let tails = || {
                    vec![
                        (Endpoint::NegInf, Endpoint::Finite(neg_m1.clone())),
                        (Endpoint::Finite(m1.clone()), Endpoint::PosInf),
                    ]
                };
                for &g in &spec.core_grids {
                    let left = OpenIntervalSet::normalize(vec![
                        (Endpoint::NegInf, Endpoint::Finite(m.clone())),
                        (Endpoint::Finite(m1.clone()), Endpoint::PosInf),
                    ])?;
                    let right = OpenIntervalSet::normalize(vec![
                        (Endpoint::NegInf, Endpoint::Finite(neg_m1.clone())),
                        (Endpoint::Finite(neg.clone()), Endpoint::PosInf),
                    ])?;
                    let cores = if g == 0 { vec![(neg.clone(), m.clone())] } else { grid_intervals(&neg, m, g) };
                    let mut elements = vec![left, right];
                    for (a, b) in cores {
                        let mut raw = tails();
                        raw.push((Endpoint::Finite(a), Endpoint::Finite(b)));
                        elements.push(OpenIntervalSet::normalize(raw)?);
                    }
                    let cover = FiniteCover::new(Space::Line, elements)?;
                    debug_assert!(cover.is_cocompact());
                    out.push(cover);
                }
            }
        }
        Space::Interval(k) => {
            for &g in &spec.core_grids {
                let cover = if g == 0 {
                    FiniteCover::trivial(space.clone())
                } else {
                    let elements = grid_intervals(k.left(), k.right(), g)
                        .into_iter()
                        .map(|(a, b)| OpenIntervalSet::between(a, b))
                        .collect::<Result<Vec<_>>>()?;
                    FiniteCover::new(space.clone(), elements)?
                };
                out.push(cover);
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct EntropySup {
    /// Lower bound on `c(f)` over the family.
    pub value: f64,
    pub witness_index: usize,
    pub witness_cover: FiniteCover,
    pub estimates: Vec<EntropyEstimate>,
    pub sequences: Vec<EntropySequence>,
}

/// Maximum Fekete estimate over a cover family. Sequences are computed in
/// parallel; results are independent of scheduling.
pub fn entropy_sup(
    f: &PiecewiseAffineMap,
    family: &[FiniteCover],
    n_max: usize,
    settings: &Settings,
) -> Result<EntropySup> {
    if family.is_empty() {
        return Err(Error::InvalidInput("empty cover family".into()));
    }
    let sequences: Vec<EntropySequence> =
        family.par_iter().map(|u| entropy_sequence(f, u, n_max, settings)).collect::<Result<_>>()?;
    let estimates: Vec<EntropyEstimate> =
        sequences.iter().map(|s| entropy_estimate(s, settings.tolerance)).collect::<Result<_>>()?;
    let mut best = 0;
    for (i, e) in estimates.iter().enumerate() {
        if e.value > estimates[best].value {
            best = i;
        }
    }
    Ok(EntropySup {
        value: estimates[best].value,
        witness_index: best,
        witness_cover: family[best].clone(),
        estimates,
        sequences,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct PowerRow {
    pub n: usize,
    pub n_power: u64,
    pub n_base: u64,
    pub equal: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct PowerReport {
    pub m: usize,
    pub n_max: usize,
    pub rows: Vec<PowerRow>,
    pub estimate_power: f64,
    pub m_times_estimate: f64,
    pub relative_error: f64,
    pub identity_holds: bool,
    pub within_tolerance: bool,
    pub pass: bool,
}

/// Relative tolerance used for `estimate(f^m) ≈ m · estimate(f)`.
pub const POWER_TOLERANCE: f64 = 0.05;

/// Compares the entropy of `f^m` relative to `V = ⋁_{i<m} f^{-i}(U)` with `m`
/// times the entropy of `f` relative to `U`, and checks the exact identity
/// `N(⋁_{j<n} (f^m)^{-j} V) = N(⋁_{j<mn} f^{-j} U)` for `n ≤ n_max`.
pub fn verify_power(
    f: &PiecewiseAffineMap,
    u: &FiniteCover,
    m: usize,
    n_max: usize,
    settings: &Settings,
) -> Result<PowerReport> {
    if m == 0 {
        return Err(Error::InvalidInput("power exponent must be at least 1".into()));
    }
    let g = f.power_capped(m, settings.piece_cap)?;
    let v = iterated_join(f, u, m, settings)?;
    let base = entropy_sequence(f, u, m * n_max, settings)?;
    let power = entropy_sequence(&g, &v, n_max, settings)?;
    let rows: Vec<PowerRow> = (1..=n_max)
        .map(|n| {
            let (n_power, n_base) = (power.rows[n - 1].big_n, base.rows[m * n - 1].big_n);
            PowerRow { n, n_power, n_base, equal: n_power == n_base }
        })
        .collect();
    let estimate_power = entropy_estimate(&power, settings.tolerance)?.value;
    let m_times_estimate = m as f64 * entropy_estimate(&base, settings.tolerance)?.value;
    let relative_error = if m_times_estimate == 0.0 {
        estimate_power.abs()
    } else {
        (estimate_power - m_times_estimate).abs() / m_times_estimate
    };
    let identity_holds = rows.iter().all(|r| r.equal);
    let within_tolerance = relative_error <= POWER_TOLERANCE;
    Ok(PowerReport {
        m,
        n_max,
        rows,
        estimate_power,
        m_times_estimate,
        relative_error,
        identity_holds,
        within_tolerance,
        pass: identity_holds && within_tolerance,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct SubsystemRow {
    pub n: usize,
    pub n_sub: u64,
    pub n_whole: u64,
    pub ok: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct SubsystemReport {
    pub invariant_set: CompactInterval,
    pub lifted_cover: FiniteCover,
    pub rows: Vec<SubsystemRow>,
    pub estimate_sub: f64,
    pub estimate_whole: f64,
    pub pass: bool,
}

/// `U* = {U ∪ (R \ Λ)}` for a cover of `Λ`.
pub fn lift_cover(u_sub: &FiniteCover) -> Result<FiniteCover> {
    let lambda = match u_sub.space() {
        Space::Interval(k) => k,
        Space::Line => return Err(Error::SpaceMismatch("sub-cover must live on a compact interval".into())),
    };
    let outside = OpenIntervalSet::normalize(vec![
        (Endpoint::NegInf, Endpoint::Finite(lambda.left().clone())),
        (Endpoint::Finite(lambda.right().clone()), Endpoint::PosInf),
    ])?;
    let elements = u_sub.elements().iter().map(|c| c.union(&outside)).collect();
    FiniteCover::new(Space::Line, elements)
}

/// Row-wise `N_Λ,n ≤ N_X,n` for `f|_Λ` with `u_sub` against `f` with the lifted cover.
pub fn verify_subsystem(
    f: &PiecewiseAffineMap,
    invariant_set: &CompactInterval,
    u_sub: &FiniteCover,
    n_max: usize,
    settings: &Settings,
) -> Result<SubsystemReport> {
    let space = Space::Interval(invariant_set.clone());
    if u_sub.space() != &space {
        return Err(Error::SpaceMismatch(format!("cover lives on {}, expected {space}", u_sub.space())));
    }
    space.check_invariant(f)?;
    let lifted = lift_cover(u_sub)?;
    let sub = entropy_sequence(f, u_sub, n_max, settings)?;
    let whole = entropy_sequence(f, &lifted, n_max, settings)?;
    let rows: Vec<SubsystemRow> = sub
        .rows
        .iter()
        .zip(&whole.rows)
        .map(|(a, b)| SubsystemRow { n: a.n, n_sub: a.big_n, n_whole: b.big_n, ok: a.big_n <= b.big_n })
        .collect();
    let estimate_sub = entropy_estimate(&sub, settings.tolerance)?.value;
    let estimate_whole = entropy_estimate(&whole, settings.tolerance)?.value;
    let pass = rows.iter().all(|r| r.ok) && estimate_sub <= estimate_whole;
    Ok(SubsystemReport {
        invariant_set: invariant_set.clone(),
        lifted_cover: lifted,
        rows,
        estimate_sub,
        estimate_whole,
        pass,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ConjugacyCoverRow {
    pub cover_index: usize,
    pub counts_g: Vec<u64>,
    pub counts_f: Vec<u64>,
    pub equal: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConjugacyReport {
    pub structural_match: bool,
    pub samples_checked: usize,
    pub covers: Vec<ConjugacyCoverRow>,
    pub pass: bool,
}

/// Number of random sample points used to check `h ∘ f = g ∘ h`.
pub const CONJUGACY_SAMPLES: usize = 1000;

/// For each cover `U` of `g`'s space, checks `N(⋁ g^{-i} U) = N(⋁ f^{-i} h^{-1} U)`.
pub fn verify_conjugacy(
    f: &PiecewiseAffineMap,
    g: &PiecewiseAffineMap,
    h: &PiecewiseAffineMap,
    family: &[FiniteCover],
    n_max: usize,
    settings: &Settings,
) -> Result<ConjugacyReport> {
    if !h.is_homeomorphism() {
        return Err(Error::Conjugacy("h must be strictly monotone with nonzero slopes".into()));
    }
    let lhs = h.compose(f);
    let rhs = g.compose(h);
    let structural_match = lhs == rhs;
    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
    for _ in 0..CONJUGACY_SAMPLES {
        let x = Rational::new(rng.gen_range(-1_000_000..=1_000_000), 1000);
        if h.eval(&f.eval(&x)) != g.eval(&h.eval(&x)) {
            return Err(Error::Conjugacy(format!("h(f({x})) != g(h({x}))")));
        }
    }
    if !structural_match {
        return Err(Error::Conjugacy("h ∘ f and g ∘ h differ as piecewise maps".into()));
    }
    let covers: Vec<ConjugacyCoverRow> = family
        .par_iter()
        .enumerate()
        .map(|(cover_index, u)| {
            if !u.space().is_line() {
                return Err(Error::SpaceMismatch("conjugacy covers must live on R".into()));
            }
            let counts_g = entropy_sequence(g, u, n_max, settings)?.counts();
            let counts_f = entropy_sequence(f, &u.pullback(h)?, n_max, settings)?.counts();
            let equal = counts_g == counts_f;
            Ok(ConjugacyCoverRow { cover_index, counts_g, counts_f, equal })
        })
        .collect::<Result<_>>()?;
    let pass = covers.iter().all(|c| c.equal);
    Ok(ConjugacyReport { structural_match, samples_checked: CONJUGACY_SAMPLES, covers, pass })
}
