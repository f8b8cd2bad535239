//! The full shift on `p` symbols.
//!
//! Points are words of length `horizon`. Covers are partitions into finite
//! unions of cylinders, all stored at one common depth `m`: an element is a
//! sorted list of words of length `m`, each encoded base `p` with the first
//! symbol most significant. The metric is `d(x, y) = 2^{-i}` for the first
//! index `i` where `x` and `y` differ.

use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};

use crate::bowen::{growth_rate, BowenEstimate, ScaleRates, SpanningRecord};
use crate::config::LogBase;
use crate::entropy::EntropySequence;
use crate::error::{Error, Result};
use crate::rational::Rational;

/// Joins with more cells than this are counted by the closed form.
pub const EXPLICIT_CELLS: u64 = 1 << 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShiftSpace {
    p: u32,
    horizon: usize,
}

impl ShiftSpace {
    pub fn new(p: u32, horizon: usize) -> Result<Self> {
        if p < 2 {
            return Err(Error::InvalidInput(format!("need at least 2 symbols, got {p}")));
        }
        if horizon == 0 {
            return Err(Error::InvalidInput("horizon must be positive".into()));
        }
        Ok(ShiftSpace { p, horizon })
    }

    pub fn symbols(&self) -> u32 {
        self.p
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    fn cells(&self, depth: usize) -> Result<u64> {
        u64::from(self.p)
            .checked_pow(depth as u32)
            .ok_or_else(|| Error::ResourceLimit(format!("{}^{depth} words overflow", self.p)))
    }
}

/// A partition of the shift into unions of depth-`m` cylinders.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CylinderPartition {
    space: ShiftSpace,
    depth: usize,
    elements: Vec<Vec<u64>>,
}

impl CylinderPartition {
    /// The `p^k` cylinders of length `k`.
    pub fn cylinders(space: ShiftSpace, k: usize) -> Result<Self> {
        if k == 0 || k > space.horizon {
            return Err(Error::InvalidInput(format!("cylinder length {k} outside 1..={}", space.horizon)));
        }
        let cells = space.cells(k)?;
        if cells > EXPLICIT_CELLS {
            return Err(Error::ResourceLimit(format!("{cells} cylinders")));
        }
        Ok(CylinderPartition { space, depth: k, elements: (0..cells).map(|w| vec![w]).collect() })
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[Vec<u64>] {
        &self.elements
    }

    /// The same partition described at a greater depth.
    fn deepen(&self, depth: usize) -> Result<Self> {
        let extra = self.space.cells(depth - self.depth)?;
        let elements = self
            .elements
            .iter()
            .map(|e| e.iter().flat_map(|&w| (0..extra).map(move |t| w * extra + t)).collect())
            .collect();
        Ok(CylinderPartition { space: self.space, depth, elements })
    }

    /// `σ^{-1}` of every element: a word lies in the preimage iff its tail does.
    pub fn pullback(&self) -> Result<Self> {
        if self.depth + 1 > self.space.horizon {
            return Err(Error::InvalidInput("pullback would pass the horizon".into()));
        }
        let shift = self.space.cells(self.depth)?;
        let elements = self
            .elements
            .iter()
            .map(|e| {
                let mut out: Vec<u64> =
                    (0..u64::from(self.space.p)).flat_map(|a| e.iter().map(move |&w| a * shift + w)).collect();
                out.sort_unstable();
                out
            })
            .collect();
        Ok(CylinderPartition { space: self.space, depth: self.depth + 1, elements })
    }

    /// Nonempty pairwise intersections.
    pub fn join(&self, other: &CylinderPartition) -> Result<Self> {
        if self.space != other.space {
            return Err(Error::SpaceMismatch("different shift spaces".into()));
        }
        let depth = self.depth.max(other.depth);
        if self.space.cells(depth)? > EXPLICIT_CELLS {
            return Err(Error::ResourceLimit(format!("join at depth {depth}")));
        }
        let (a, b) = (self.deepen(depth)?, other.deepen(depth)?);
        let mut elements = Vec::new();
        for x in &a.elements {
            for y in &b.elements {
                let meet: Vec<u64> = x.iter().filter(|w| y.binary_search(w).is_ok()).copied().collect();
                if !meet.is_empty() {
                    elements.push(meet);
                }
            }
        }
        elements.sort();
        Ok(CylinderPartition { space: self.space, depth, elements })
    }
}

/// `N_n` for the generating partition into 1-cylinders. Disjoint elements
/// make `N` the number of nonempty cells of the join; joins up to
/// [`EXPLICIT_CELLS`] cells are built explicitly.
pub fn shift_cover_entropy(space: ShiftSpace, n_max: usize, base: LogBase) -> Result<EntropySequence> {
    if n_max == 0 || n_max + 2 > space.horizon {
        return Err(Error::InvalidInput(format!("n_max = {n_max} needs horizon at least n_max + 2")));
    }
    let u = CylinderPartition::cylinders(space, 1)?;
    let mut counts = Vec::with_capacity(n_max);
    let mut w = u.clone();
    for n in 1..=n_max {
        if let Ok(cells) = space.cells(n) {
            if cells > EXPLICIT_CELLS {
                counts.push((cells, true));
                continue;
            }
        } else {
            return Err(Error::ResourceLimit(format!("{}^{n} overflows", space.p)));
        }
        counts.push((w.len() as u64, true));
        if n < n_max && space.cells(n + 1)? <= EXPLICIT_CELLS {
            w = u.join(&w.pullback()?)?;
        }
    }
    Ok(EntropySequence::from_counts(&counts, base))
}

/// `d_n(x, y) = max_{j<n} d(σ^j x, σ^j y)` on words.
pub fn shift_dn_metric(x: &[u32], y: &[u32], n: usize) -> Rational {
    let Some(i) = x.iter().zip(y).position(|(a, b)| a != b) else {
        return Rational::zero();
    };
    if i < n {
        Rational::one()
    } else {
        Rational::pow2(-((i + 1 - n) as i32))
    }
}

/// Length of the prefix window that decides `(n, eps)`-separation: two
/// points are separated iff they differ within the first `n + E` symbols,
/// with `E = ceil(log2(1/eps)) - 1`. `None` when `eps ≥ 1`.
pub fn separation_window(n: usize, eps: &Rational) -> Option<usize> {
    if eps >= &Rational::one() {
        return None;
    }
    let mut t = 0usize;
    while &Rational::pow2(-(t as i32)) > eps {
        t += 1;
    }
    Some(n + t - 1)
}

/// `r_n = s_n = p^{n+E}`: closed `eps`-balls are exactly the cylinders of the
/// separation window, so both optima equal their number.
pub fn shift_counts(space: ShiftSpace, n: usize, eps: &Rational) -> Result<u64> {
    match separation_window(n, eps) {
        None => Ok(1),
        Some(w) if w > space.horizon => {
            Err(Error::InvalidInput(format!("window {w} exceeds horizon {}", space.horizon)))
        }
        Some(w) => space.cells(w),
    }
}

/// Bowen rates from the exact counts. Records carry a zero grid step.
pub fn shift_bowen_entropy(
    space: ShiftSpace,
    eps_ladder: &[Rational],
    ns: RangeInclusive<usize>,
    base: LogBase,
) -> Result<BowenEstimate> {
    if eps_ladder.is_empty() || eps_ladder.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidInput("eps ladder must be nonempty and strictly decreasing".into()));
    }
    let mut records = Vec::new();
    let mut rates = Vec::new();
    for eps in eps_ladder {
        let mut pts = Vec::new();
        for n in ns.clone() {
            let c = shift_counts(space, n, eps)?;
            records.push(SpanningRecord { n, eps: eps.clone(), r_hat: c, s_hat: c, grid_step: Rational::zero() });
            pts.push((n, c));
        }
        let fit = growth_rate(&pts, base)?;
        rates.push(ScaleRates {
            eps: eps.clone(),
            spanning: fit.slope,
            spanning_stderr: fit.slope_stderr,
            separated: fit.slope,
            separated_stderr: fit.slope_stderr,
        });
    }
    let monotone_trend = rates.windows(2).all(|w| w[1].spanning >= w[0].spanning - 1e-9);
    let h = rates.last().map(|r| r.spanning.max(0.0)).unwrap_or(0.0);
    Ok(BowenEstimate { h, eps_ladder: eps_ladder.to_vec(), rates, monotone_trend, log_base: base, records })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn words(p: u32, len: usize) -> Vec<Vec<u32>> {
        let mut out = vec![vec![]];
        for _ in 0..len {
            out = out.into_iter().flat_map(|w: Vec<u32>| (0..p).map(move |a| [w.clone(), vec![a]].concat())).collect();
        }
        out
    }

    #[test]
    fn cylinder_counts() {
        let s2 = ShiftSpace::new(2, 12).unwrap();
        assert_eq!(CylinderPartition::cylinders(s2, 1).unwrap().len(), 2);
        assert_eq!(CylinderPartition::cylinders(ShiftSpace::new(3, 4).unwrap(), 2).unwrap().len(), 9);
        assert!(CylinderPartition::cylinders(s2, 13).is_err());
        assert!(ShiftSpace::new(1, 4).is_err());
    }

    #[test]
    fn join_enumeration() {
        let s = ShiftSpace::new(2, 12).unwrap();
        let u = CylinderPartition::cylinders(s, 1).unwrap();
        let mut w = u.clone();
        for n in 1..=10usize {
            // Each cell is one cylinder of length n; check against all words.
            assert_eq!(w.len(), 1 << n);
            let mut seen: Vec<u64> = w.elements().iter().flatten().copied().collect();
            seen.sort_unstable();
            assert_eq!(seen, (0..1u64 << n).collect::<Vec<_>>());
            assert!(w.elements().iter().all(|e| e.len() == 1));
            if n < 10 {
                w = u.join(&w.pullback().unwrap()).unwrap();
            }
        }
    }

    #[test]
    fn cover_entropy_exact() {
        for p in [2u32, 3, 5] {
            let seq = shift_cover_entropy(ShiftSpace::new(p, 14).unwrap(), 12, LogBase::E).unwrap();
            for r in &seq.rows {
                assert_eq!(r.big_n, u64::from(p).pow(r.n as u32));
                assert!((r.a_n - r.n as f64 * f64::from(p).ln()).abs() < 1e-9);
            }
        }
        assert!(shift_cover_entropy(ShiftSpace::new(2, 5).unwrap(), 4, LogBase::E).is_err());
    }

    #[test]
    fn window_rule() {
        assert_eq!(separation_window(3, &Rational::new(1, 2)), Some(3));
        assert_eq!(separation_window(3, &Rational::new(1, 3)), Some(4));
        assert_eq!(separation_window(3, &Rational::new(1, 4)), Some(4));
        assert_eq!(separation_window(3, &Rational::one()), None);
    }

    #[test]
    fn separated_by_enumeration() {
        for n in 1..=8usize {
            for eps in [Rational::new(1, 2), Rational::new(1, 5)] {
                let all = words(2, n + 3);
                let mut chosen: Vec<&Vec<u32>> = Vec::new();
                for w in &all {
                    if chosen.iter().all(|c| shift_dn_metric(c, w, n) > eps) {
                        chosen.push(w);
                    }
                }
                let s = ShiftSpace::new(2, n + 3).unwrap();
                assert_eq!(chosen.len() as u64, shift_counts(s, n, &eps).unwrap(), "n={n} eps={eps}");
            }
            assert_eq!(shift_counts(ShiftSpace::new(2, 12).unwrap(), n, &Rational::new(1, 2)).unwrap(), 1 << n);
        }
    }

    #[test]
    fn bowen_rate() {
        let ladder = [Rational::pow2(-2), Rational::pow2(-4)];
        let est = shift_bowen_entropy(ShiftSpace::new(3, 20).unwrap(), &ladder, 1..=10, LogBase::E).unwrap();
        assert!((est.h - 3f64.ln()).abs() < 1e-9);
        // Truncation invariance.
        let longer = shift_bowen_entropy(ShiftSpace::new(3, 40).unwrap(), &ladder, 1..=10, LogBase::E).unwrap();
        assert_eq!(est.records, longer.records);
    }
}
