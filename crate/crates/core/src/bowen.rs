//! Spanning and separated counts for Bowen's entropy on a compact interval.
//!
//! Counts are taken over a uniform grid of `K`. Each greedy step computes the
//! closed `d_n`-ball around a grid point exactly, as the finite union of
//! intervals `K ∩ ⋂_{j<n} f^{-j}[f^j x - ε, f^j x + ε]`, and marks the grid
//! points inside it.

use std::io::Write;
use std::ops::RangeInclusive;

use fixedbitset::FixedBitSet;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::LogBase;
use crate::error::{Error, Result};
use crate::interval::{Endpoint, RawInterval};
use crate::piecewise::{CompactInterval, PiecewiseAffineMap};
use crate::rational::Rational;
use crate::stats::{least_squares, LinearFit};

/// Largest grid the counting routines accept.
pub const MAX_GRID_POINTS: usize = 1 << 25;

/// Largest grid the exhaustive oracles accept.
pub const BRUTE_FORCE_LIMIT: usize = 18;

/// `max_{j<n} |f^j(x) - f^j(y)|`.
pub fn dn_metric(f: &PiecewiseAffineMap, x: &Rational, y: &Rational, n: usize) -> Rational {
    assert!(n >= 1);
    let (mut a, mut b) = (x.clone(), y.clone());
    let mut best = (&a - &b).abs();
    for _ in 1..n {
        a = f.eval(&a);
        b = f.eval(&b);
        best = Rational::max_of(&best, &(&a - &b).abs());
    }
    best
}

/// How the grid step is chosen.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GridRule {
    /// At most the given step; must not exceed `eps/4`.
    Fixed(Rational),
    /// `eps/4` divided by the product of Lipschitz constants of `f` along
    /// `K, f(K), …, f^{n-2}(K)`, rounded down to a dyadic fraction of `|K|`.
    Adaptive,
}

/// Uniform grid `a + i·step`, `i = 0..count`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Grid {
    k: CompactInterval,
    step: Rational,
    count: usize,
}

impl Grid {
    /// The grid with `cells` equal cells on `k` (a single point if `k` is).
    pub fn with_cells(k: &CompactInterval, cells: usize) -> Result<Grid> {
        if k.is_point() {
            return Ok(Grid { k: k.clone(), step: Rational::zero(), count: 1 });
        }
        if cells == 0 || cells >= MAX_GRID_POINTS {
            return Err(Error::ResourceLimit(format!("grid of {cells} cells")));
        }
        let step = &k.length() / &Rational::from_integer(cells as i64);
        Ok(Grid { k: k.clone(), step, count: cells + 1 })
    }

    pub fn for_rule(
        f: &PiecewiseAffineMap,
        k: &CompactInterval,
        n: usize,
        eps: &Rational,
        rule: &GridRule,
    ) -> Result<Grid> {
        if !eps.is_positive() {
            return Err(Error::InvalidInput(format!("eps must be positive, got {eps}")));
        }
        let limit = eps / &Rational::from_integer(4);
        let target = match rule {
            GridRule::Fixed(step) => {
                if !step.is_positive() || step > &limit {
                    return Err(Error::Resolution { step: step.to_string(), limit: limit.to_string() });
                }
                step.clone()
            }
            GridRule::Adaptive => {
                let mut lip = Rational::one();
                let mut img = k.clone();
                for _ in 1..n {
                    lip = &lip * &Rational::max_of(&Rational::one(), &f.max_abs_slope_on(&img));
                    img = f.image_of(&img);
                }
                &limit / &lip
            }
        };
        if k.is_point() {
            return Grid::with_cells(k, 0);
        }
        let len = k.length();
        let cells = match rule {
            GridRule::Fixed(_) => (&len / &target).ceil_i64().unwrap_or(i64::MAX),
            GridRule::Adaptive => {
                let mut cells: i64 = 1;
                while &len / &Rational::from_integer(cells) > target {
                    cells = cells.checked_mul(2).unwrap_or(i64::MAX);
                    if cells as usize >= MAX_GRID_POINTS {
                        break;
                    }
                }
                cells
            }
        };
        Grid::with_cells(k, usize::try_from(cells).unwrap_or(usize::MAX))
    }

    pub fn step(&self) -> &Rational {
        &self.step
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn point(&self, i: usize) -> Rational {
        self.k.left() + &(&self.step * &Rational::from_integer(i as i64))
    }

    pub fn points(&self) -> Vec<Rational> {
        (0..self.count).map(|i| self.point(i)).collect()
    }

    /// Grid indices inside a raw interval contained in `K`.
    fn indices(&self, r: &RawInterval) -> Option<RangeInclusive<usize>> {
        if self.count == 1 {
            return (!r.is_empty()).then_some(0..=0);
        }
        let pos = |e: &Endpoint| match e {
            Endpoint::Finite(v) => (v - self.k.left()) / self.step.clone(),
            _ => unreachable!("ball pieces are bounded"),
        };
        let (lo, hi) = (pos(&r.lo), pos(&r.hi));
        let first = if r.lo_closed || !lo.is_integer() { lo.ceil_i64() } else { lo.ceil_i64().map(|v| v + 1) }?;
        let last = if r.hi_closed || !hi.is_integer() { hi.floor_i64() } else { hi.floor_i64().map(|v| v - 1) }?;
        let first = first.max(0) as usize;
        let last = last.min(self.count as i64 - 1);
        (last >= first as i64).then_some(first..=last as usize)
    }
}

/// The closed `d_n`-ball of radius `eps` around `x`, restricted to `K`.
pub(crate) fn dn_ball(
    f: &PiecewiseAffineMap,
    k: &CompactInterval,
    x: &Rational,
    n: usize,
    eps: &Rational,
) -> Vec<RawInterval> {
    let orbit = f.orbit(x, n);
    let window = |y: &Rational| RawInterval {
        lo: Endpoint::Finite(y - eps),
        lo_closed: true,
        hi: Endpoint::Finite(y + eps),
        hi_closed: true,
    };
    let mut set = vec![window(&orbit[n - 1])];
    for j in (0..n - 1).rev() {
        set = f.preimage_raw(&set, &window(&orbit[j]));
    }
    set.into_iter().map(|r| r.meet(&k.as_raw())).filter(|r| !r.is_empty()).collect()
}

struct Marker<'a> {
    f: &'a PiecewiseAffineMap,
    grid: &'a Grid,
    n: usize,
    eps: &'a Rational,
    marked: FixedBitSet,
    cursor: usize,
}

impl<'a> Marker<'a> {
    fn new(f: &'a PiecewiseAffineMap, grid: &'a Grid, n: usize, eps: &'a Rational) -> Self {
        Marker { f, grid, n, eps, marked: FixedBitSet::with_capacity(grid.len()), cursor: 0 }
    }

    fn next_unmarked(&mut self) -> Option<usize> {
        while self.cursor < self.grid.len() && self.marked.contains(self.cursor) {
            self.cursor += 1;
        }
        (self.cursor < self.grid.len()).then_some(self.cursor)
    }

    fn ball(&self, i: usize) -> Vec<RangeInclusive<usize>> {
        dn_ball(self.f, &self.grid.k, &self.grid.point(i), self.n, self.eps)
            .iter()
            .filter_map(|r| self.grid.indices(r))
            .collect()
    }

    fn mark(&mut self, ranges: &[RangeInclusive<usize>]) {
        for r in ranges {
            self.marked.set_range(*r.start()..*r.end() + 1, true);
        }
    }
}

/// Greedy `(n, eps)`-spanning set of the grid: the leftmost uncovered point
/// is covered by the ball around the rightmost grid point of its own ball
/// component. Returns the number of centers.
pub fn spanning_number(f: &PiecewiseAffineMap, grid: &Grid, n: usize, eps: &Rational) -> usize {
    let mut m = Marker::new(f, grid, n, eps);
    let mut centers = 0;
    while let Some(p) = m.next_unmarked() {
        let around_p = m.ball(p);
        let c = around_p.iter().find(|r| r.contains(&p)).map(|r| *r.end()).unwrap_or(p);
        let ball = if c == p { around_p } else { m.ball(c) };
        m.mark(&ball);
        m.marked.insert(p);
        centers += 1;
    }
    centers
}

/// Greedy maximal `(n, eps)`-separated subset of the grid, scanning left to right.
pub fn separated_number(f: &PiecewiseAffineMap, grid: &Grid, n: usize, eps: &Rational) -> usize {
    let mut m = Marker::new(f, grid, n, eps);
    let mut chosen = 0;
    while let Some(p) = m.next_unmarked() {
        let ball = m.ball(p);
        m.mark(&ball);
        m.marked.insert(p);
        chosen += 1;
    }
    chosen
}

/// Counts at one `(n, eps)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpanningRecord {
    pub n: usize,
    pub eps: Rational,
    pub r_hat: u64,
    pub s_hat: u64,
    pub grid_step: Rational,
}

pub fn spanning_record(
    f: &PiecewiseAffineMap,
    k: &CompactInterval,
    n: usize,
    eps: &Rational,
    rule: &GridRule,
) -> Result<SpanningRecord> {
    if n == 0 {
        return Err(Error::InvalidInput("n must be at least 1".into()));
    }
    let grid = Grid::for_rule(f, k, n, eps, rule)?;
    Ok(SpanningRecord {
        n,
        eps: eps.clone(),
        r_hat: spanning_number(f, &grid, n, eps) as u64,
        s_hat: separated_number(f, &grid, n, eps) as u64,
        grid_step: grid.step.clone(),
    })
}

/// Least-squares slope of `log count` against `n`.
pub fn growth_rate(points: &[(usize, u64)], base: LogBase) -> Result<LinearFit> {
    if points.len() < 3 {
        return Err(Error::DegenerateFit(format!("need at least 3 records, got {}", points.len())));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0 as f64).collect();
    let ys: Vec<f64> = points.iter().map(|p| base.log(p.1 as f64)).collect();
    least_squares(&xs, &ys).ok_or_else(|| Error::DegenerateFit("all records share one n".into()))
}

/// Rates at one scale.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScaleRates {
    pub eps: Rational,
    pub spanning: f64,
    pub spanning_stderr: f64,
    pub separated: f64,
    pub separated_stderr: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BowenEstimate {
    /// Spanning rate at the smallest scale, clamped at zero.
    pub h: f64,
    pub eps_ladder: Vec<Rational>,
    pub rates: Vec<ScaleRates>,
    /// Spanning rates non-decreasing as `eps` shrinks.
    pub monotone_trend: bool,
    pub log_base: LogBase,
    pub records: Vec<SpanningRecord>,
}

pub fn bowen_estimate(
    f: &PiecewiseAffineMap,
    k: &CompactInterval,
    eps_ladder: &[Rational],
    ns: RangeInclusive<usize>,
    rule: &GridRule,
    base: LogBase,
) -> Result<BowenEstimate> {
    if eps_ladder.is_empty() || eps_ladder.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidInput("eps ladder must be nonempty and strictly decreasing".into()));
    }
    if *ns.start() == 0 {
        return Err(Error::InvalidInput("n must be at least 1".into()));
    }
    let tasks: Vec<(usize, &Rational)> = eps_ladder.iter().flat_map(|e| ns.clone().map(move |n| (n, e))).collect();
    let records = tasks.par_iter().map(|(n, e)| spanning_record(f, k, *n, e, rule)).collect::<Result<Vec<_>>>()?;
    let mut rates = Vec::with_capacity(eps_ladder.len());
    for e in eps_ladder {
        let rows: Vec<&SpanningRecord> = records.iter().filter(|r| &r.eps == e).collect();
        let span = growth_rate(&rows.iter().map(|r| (r.n, r.r_hat)).collect::<Vec<_>>(), base)?;
        let sep = growth_rate(&rows.iter().map(|r| (r.n, r.s_hat)).collect::<Vec<_>>(), base)?;
        rates.push(ScaleRates {
            eps: e.clone(),
            spanning: span.slope,
            spanning_stderr: span.slope_stderr,
            separated: sep.slope,
            separated_stderr: sep.slope_stderr,
        });
    }
    let monotone_trend = rates.windows(2).all(|w| w[1].spanning >= w[0].spanning - 1e-9);
    let h = rates.last().map(|r| r.spanning.max(0.0)).unwrap_or(0.0);
    Ok(BowenEstimate { h, eps_ladder: eps_ladder.to_vec(), rates, monotone_trend, log_base: base, records })
}

/// CSV with columns `eps,n,r_hat,s_hat,grid_step`.
pub fn write_records_csv<W: Write>(records: &[SpanningRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["eps", "n", "r_hat", "s_hat", "grid_step"])?;
    for r in records {
        w.write_record([
            r.eps.to_string(),
            r.n.to_string(),
            r.r_hat.to_string(),
            r.s_hat.to_string(),
            r.grid_step.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// `close[i]` has bit `j` set when `d_n(x_i, x_j) ≤ eps`.
fn closeness(f: &PiecewiseAffineMap, points: &[Rational], n: usize, eps: &Rational) -> Result<Vec<u32>> {
    if points.len() > BRUTE_FORCE_LIMIT {
        return Err(Error::ResourceLimit(format!(
            "{} grid points exceed the exhaustive limit {BRUTE_FORCE_LIMIT}",
            points.len()
        )));
    }
    Ok(points
        .iter()
        .map(|x| {
            points.iter().enumerate().filter(|(_, y)| &dn_metric(f, x, y, n) <= eps).fold(0u32, |m, (j, _)| m | 1 << j)
        })
        .collect())
}

/// Fewest grid points whose closed `d_n`-balls cover the grid.
pub fn brute_force_rn(f: &PiecewiseAffineMap, points: &[Rational], n: usize, eps: &Rational) -> Result<usize> {
    let close = closeness(f, points, n, eps)?;
    let full: u32 = if points.is_empty() { 0 } else { u32::MAX >> (32 - points.len()) };
    let best = (0u32..=full)
        .filter(|s| {
            let covered = (0..points.len()).filter(|i| s >> i & 1 == 1).fold(0u32, |m, i| m | close[i]);
            covered == full
        })
        .map(|s| s.count_ones() as usize)
        .min();
    Ok(best.unwrap_or(0))
}

/// Largest `(n, eps)`-separated subset of the grid.
pub fn brute_force_sn(f: &PiecewiseAffineMap, points: &[Rational], n: usize, eps: &Rational) -> Result<usize> {
    let close = closeness(f, points, n, eps)?;
    let full: u32 = if points.is_empty() { 0 } else { u32::MAX >> (32 - points.len()) };
    let best = (0u32..=full)
        .filter(|s| (0..points.len()).filter(|i| s >> i & 1 == 1).all(|i| close[i] & s == 1 << i))
        .map(|s| s.count_ones() as usize)
        .max();
    Ok(best.unwrap_or(0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn q(a: i64, b: i64) -> Rational {
        Rational::new(a, b)
    }

    fn unit() -> CompactInterval {
        CompactInterval::unit()
    }

    #[test]
    fn metric_examples() {
        let d = PiecewiseAffineMap::doubling();
        assert_eq!(dn_metric(&d, &q(0, 1), &q(1, 8), 3), q(1, 2));
        let id = PiecewiseAffineMap::identity();
        assert_eq!(dn_metric(&id, &q(1, 3), &q(-1, 2), 7), q(5, 6));
        assert_eq!(dn_metric(&PiecewiseAffineMap::tent(), &q(0, 1), &q(1, 2), 2), q(1, 1));
    }

    #[test]
    fn ball_matches_metric() {
        let t = PiecewiseAffineMap::tent();
        let grid = Grid::with_cells(&unit(), 256).unwrap();
        let (x, eps, n) = (q(3, 10), q(1, 8), 4);
        let ball = dn_ball(&t, &unit(), &x, n, &eps);
        let inside: Vec<usize> = ball.iter().filter_map(|r| grid.indices(r)).flatten().collect();
        let oracle: Vec<usize> = (0..grid.len()).filter(|&i| dn_metric(&t, &x, &grid.point(i), n) <= eps).collect();
        assert_eq!(inside, oracle);
    }

    #[test]
    fn identity_counts_constant() {
        let id = PiecewiseAffineMap::identity();
        let eps = q(1, 4);
        let grid = Grid::for_rule(&id, &unit(), 1, &eps, &GridRule::Adaptive).unwrap();
        let r1 = spanning_number(&id, &grid, 1, &eps);
        assert!((2..=3).contains(&r1));
        for n in 2..6 {
            assert_eq!(spanning_number(&id, &grid, n, &eps), r1);
        }
        let grid = Grid::with_cells(&unit(), 12).unwrap();
        assert_eq!(separated_number(&id, &grid, 3, &q(1, 3)), 3);
    }

    #[test]
    fn doubling_closed_form() {
        let d = PiecewiseAffineMap::doubling();
        for n in 1..=8 {
            for e in [4, 5, 6] {
                let eps = Rational::pow2(-e);
                let grid = Grid::for_rule(&d, &unit(), n, &eps, &GridRule::Adaptive).unwrap();
                let rec = spanning_record(&d, &unit(), n, &eps, &GridRule::Adaptive).unwrap();
                // A ball spans 2w+1 consecutive grid points.
                let w = (&eps / &(Rational::pow2(n as i32 - 1) * grid.step().clone())).floor_i64().unwrap() as usize;
                let on_grid = grid.len().div_ceil(2 * w + 1) as u64;
                assert_eq!(rec.r_hat, on_grid, "n={n} e={e}");
                assert_eq!(rec.s_hat, grid.len().div_ceil(w + 1) as u64);
                let continuum = 2f64.powi(n as i32 - 1) / (2.0 * eps.to_f64());
                let ratio = rec.r_hat as f64 / continuum;
                assert!((0.85..=1.0 + 2.0 / continuum).contains(&ratio), "n={n} e={e}: ratio {ratio}");
            }
        }
    }

    #[test]
    fn single_point_and_large_eps() {
        let t = PiecewiseAffineMap::tent();
        let rec = spanning_record(&t, &CompactInterval::point(q(1, 3)), 5, &q(1, 10), &GridRule::Adaptive).unwrap();
        assert_eq!((rec.r_hat, rec.s_hat), (1, 1));
        let rec = spanning_record(&t, &unit(), 1, &q(2, 1), &GridRule::Adaptive).unwrap();
        assert_eq!((rec.r_hat, rec.s_hat), (1, 1));
    }

    #[test]
    fn resolution_rule() {
        let d = PiecewiseAffineMap::doubling();
        let err = spanning_record(&d, &unit(), 2, &q(1, 4), &GridRule::Fixed(q(1, 8))).unwrap_err();
        assert!(matches!(err, Error::Resolution { .. }));
        assert!(spanning_record(&d, &unit(), 2, &q(1, 4), &GridRule::Fixed(q(1, 16))).is_ok());
    }

    #[test]
    fn growth_rate_examples() {
        let pts: Vec<(usize, u64)> = (1..=6).map(|n| (n, 3u64 << n)).collect();
        assert!((growth_rate(&pts, LogBase::E).unwrap().slope - 2f64.ln()).abs() < 1e-12);
        let flat: Vec<(usize, u64)> = (1..=6).map(|n| (n, 7)).collect();
        assert_eq!(growth_rate(&flat, LogBase::E).unwrap().slope, 0.0);
        assert!(growth_rate(&pts[..2], LogBase::E).is_err());
    }

    #[test]
    fn doubling_estimate() {
        let ladder = [Rational::pow2(-4), Rational::pow2(-6)];
        let est =
            bowen_estimate(&PiecewiseAffineMap::doubling(), &unit(), &ladder, 4..=9, &GridRule::Adaptive, LogBase::E)
                .unwrap();
        for r in &est.rates {
            assert!((r.spanning - 2f64.ln()).abs() < 0.05);
            assert!((r.separated - 2f64.ln()).abs() < 0.05);
        }
        let id =
            bowen_estimate(&PiecewiseAffineMap::identity(), &unit(), &ladder, 1..=5, &GridRule::Adaptive, LogBase::E)
                .unwrap();
        assert_eq!(id.h, 0.0);
    }

    #[test]
    fn csv_header() {
        let rec = SpanningRecord { n: 2, eps: q(1, 4), r_hat: 3, s_hat: 4, grid_step: q(1, 16) };
        let mut buf = Vec::new();
        write_records_csv(&[rec], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "eps,n,r_hat,s_hat,grid_step\n1/4,2,3,4,1/16\n");
    }

    #[test]
    fn brute_force_identity() {
        let id = PiecewiseAffineMap::identity();
        let grid = Grid::with_cells(&unit(), 5).unwrap();
        let pts = grid.points();
        assert_eq!(brute_force_rn(&id, &pts, 1, &q(9, 10)).unwrap(), 1);
        assert_eq!(brute_force_sn(&id, &pts, 1, &q(9, 10)).unwrap(), 2);
        assert_eq!(brute_force_rn(&id, &pts, 1, &q(1, 5)).unwrap(), 2);
        assert_eq!(brute_force_sn(&id, &pts, 1, &q(1, 5)).unwrap(), 3);
        assert!(brute_force_rn(&id, &Grid::with_cells(&unit(), 18).unwrap().points(), 1, &q(1, 5)).is_err());
    }

    fn tiny_map() -> impl Strategy<Value = PiecewiseAffineMap> {
        prop_oneof![
            Just(PiecewiseAffineMap::identity()),
            Just(PiecewiseAffineMap::doubling()),
            Just(PiecewiseAffineMap::tent()),
            Just(PiecewiseAffineMap::abs()),
            (1i64..4, 1i64..3).prop_map(|(a, b)| PiecewiseAffineMap::affine(q(-a, b), q(1, 3))),
        ]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(50))]

        #[test]
        fn greedy_bounds_hold(f in tiny_map(), cells in 1usize..12, n in 1usize..4, e in 1i64..12) {
            let grid = Grid::with_cells(&unit(), cells).unwrap();
            let pts = grid.points();
            let eps = q(e, 12);
            let r = brute_force_rn(&f, &pts, n, &eps).unwrap();
            let s = brute_force_sn(&f, &pts, n, &eps).unwrap();
            prop_assert!(spanning_number(&f, &grid, n, &eps) >= r);
            prop_assert!(separated_number(&f, &grid, n, &eps) <= s);
            prop_assert!(r <= s);
            prop_assert!(s <= brute_force_rn(&f, &pts, n, &(&eps / &Rational::from_integer(2))).unwrap());
        }

        #[test]
        fn spanning_monotone(n in 1usize..6, e in 3i32..6, slope in 1i64..4) {
            let t = PiecewiseAffineMap::affine(q(slope, 1), q(-1, 5));
            let eps = Rational::pow2(-e);
            let grid = Grid::with_cells(&unit(), 1 << 10).unwrap();
            let a = spanning_number(&t, &grid, n, &eps);
            prop_assert!(spanning_number(&t, &grid, n + 1, &eps) >= a);
            prop_assert!(spanning_number(&t, &grid, n, &(&eps / &Rational::from_integer(2))) >= a);
        }
    }
}
