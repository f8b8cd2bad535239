//! Unweighted set cover over a finite universe.
//!
//! The solver applies forced-set, set-dominance and cell-dominance
//! reductions, splits the instance into independent components, and solves
//! each component exactly by branch and bound when it has at most
//! `threshold` candidate sets. Larger components fall back to greedy, and
//! the result is flagged inexact unless greedy meets the lower bound.

use fixedbitset::FixedBitSet;

/// Work budget (bit operations) above which dominance reductions are skipped.
const DOMINANCE_BUDGET: usize = 300_000_000;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SetCoverSolution {
    /// Indices of the chosen sets, ascending.
    pub chosen: Vec<usize>,
    /// True when `chosen` is a certified minimum.
    pub exact: bool,
}

#[derive(Clone, Debug)]
pub struct SetCoverInstance {
    universe: usize,
    sets: Vec<FixedBitSet>,
}

impl SetCoverInstance {
    pub fn new(universe: usize, sets: Vec<FixedBitSet>) -> Self {
        let sets = sets
            .into_iter()
            .map(|mut s| {
                s.grow(universe);
                assert!(s.len() == universe, "set exceeds the universe");
                s
            })
            .collect();
        SetCoverInstance { universe, sets }
    }

    pub fn from_lists(universe: usize, lists: &[Vec<usize>]) -> Self {
        let sets = lists
            .iter()
            .map(|l| {
                let mut b = FixedBitSet::with_capacity(universe);
                for &c in l {
                    b.insert(c);
                }
                b
            })
            .collect();
        SetCoverInstance { universe, sets }
    }

    pub fn universe(&self) -> usize {
        self.universe
    }

    pub fn set_count(&self) -> usize {
        self.sets.len()
    }

    pub fn is_feasible(&self) -> bool {
        let mut all = FixedBitSet::with_capacity(self.universe);
        for s in &self.sets {
            all.union_with(s);
        }
        all.count_ones(..) == self.universe
    }

    /// Checks that `chosen` covers the universe.
    pub fn is_cover(&self, chosen: &[usize]) -> bool {
        let mut all = FixedBitSet::with_capacity(self.universe);
        for &i in chosen {
            all.union_with(&self.sets[i]);
        }
        all.count_ones(..) == self.universe
    }

    /// Minimum cover, or `None` if the sets do not cover the universe.
    pub fn solve(&self, threshold: usize) -> Option<SetCoverSolution> {
        let problem = Problem { cells: self.universe, sets: self.sets.clone(), ids: (0..self.sets.len()).collect() };
        let mut chosen = Vec::new();
        let exact = solve_problem(problem, threshold, &mut chosen)?;
        chosen.sort_unstable();
        debug_assert!(self.is_cover(&chosen));
        Some(SetCoverSolution { chosen, exact })
    }
}

struct Problem {
    cells: usize,
    sets: Vec<FixedBitSet>,
    ids: Vec<usize>,
}

impl Problem {
    /// Keeps the given cells (re-indexed) and the non-empty survivors of `keep_sets`.
    fn compact(&self, keep_cells: &FixedBitSet, keep_sets: &[bool]) -> Problem {
        let mut remap = vec![usize::MAX; self.cells];
        let mut n = 0;
        for c in keep_cells.ones() {
            remap[c] = n;
            n += 1;
        }
        let mut sets = Vec::new();
        let mut ids = Vec::new();
        for (i, s) in self.sets.iter().enumerate() {
            if !keep_sets[i] {
                continue;
            }
            let mut b = FixedBitSet::with_capacity(n);
            for c in s.ones() {
                if remap[c] != usize::MAX {
                    b.insert(remap[c]);
                }
            }
            if !b.is_clear() {
                sets.push(b);
                ids.push(self.ids[i]);
            }
        }
        Problem { cells: n, sets, ids }
    }

    fn cell_sets(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.cells];
        for (i, s) in self.sets.iter().enumerate() {
            for c in s.ones() {
                out[c].push(i);
            }
        }
        out
    }

    fn words(n: usize) -> usize {
        n / 64 + 1
    }
}

fn full(n: usize) -> FixedBitSet {
    let mut b = FixedBitSet::with_capacity(n);
    b.insert_range(..);
    b
}

/// Applies reductions until none fires. Returns `None` when some cell is
/// uncoverable.
fn reduce(mut p: Problem, chosen: &mut Vec<usize>) -> Option<Problem> {
    loop {
        if p.cells == 0 {
            return Some(p);
        }
        let cell_sets = p.cell_sets();
        if cell_sets.iter().any(|v| v.is_empty()) {
            return None;
        }
        let mut forced = vec![false; p.sets.len()];
        let mut any_forced = false;
        for v in &cell_sets {
            if v.len() == 1 {
                forced[v[0]] = true;
                any_forced = true;
            }
        }
        if any_forced {
            let mut keep_cells = full(p.cells);
            for (i, &f) in forced.iter().enumerate() {
                if f {
                    chosen.push(p.ids[i]);
                    keep_cells.difference_with(&p.sets[i]);
                }
            }
            let keep_sets: Vec<bool> = forced.iter().map(|f| !f).collect();
            p = p.compact(&keep_cells, &keep_sets);
            continue;
        }

        let s = p.sets.len();
        let mut changed = false;
        if s * s * Problem::words(p.cells) <= DOMINANCE_BUDGET {
            let sizes: Vec<usize> = p.sets.iter().map(|b| b.count_ones(..)).collect();
            let mut keep = vec![true; s];
            for i in 0..s {
                for j in 0..s {
                    if i == j || !keep[j] || sizes[i] > sizes[j] {
                        continue;
                    }
                    if p.sets[i].is_subset(&p.sets[j]) && (sizes[i] < sizes[j] || j < i) {
                        keep[i] = false;
                        break;
                    }
                }
            }
            if keep.iter().any(|k| !k) {
                p = p.compact(&full(p.cells), &keep);
                changed = true;
            }
        }
        if changed {
            continue;
        }

        let c = p.cells;
        let s = p.sets.len();
        if c * c * Problem::words(s) <= DOMINANCE_BUDGET {
            let mut cols: Vec<FixedBitSet> = vec![FixedBitSet::with_capacity(s); c];
            for (i, set) in p.sets.iter().enumerate() {
                for cell in set.ones() {
                    cols[cell].insert(i);
                }
            }
            let degree: Vec<usize> = cols.iter().map(|b| b.count_ones(..)).collect();
            let mut keep_cells = full(c);
            for d in 0..c {
                for a in 0..c {
                    if a == d || !keep_cells.contains(a) || degree[a] > degree[d] {
                        continue;
                    }
                    // Covering `a` forces covering `d`.
                    if cols[a].is_subset(&cols[d]) && (degree[a] < degree[d] || a < d) {
                        keep_cells.set(d, false);
                        break;
                    }
                }
            }
            if keep_cells.count_ones(..) < c {
                p = p.compact(&keep_cells, &vec![true; s]);
                changed = true;
            }
        }
        if !changed {
            return Some(p);
        }
    }
}

fn components(p: &Problem) -> Vec<Problem> {
    let mut parent: Vec<usize> = (0..p.cells).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for s in &p.sets {
        let mut it = s.ones();
        if let Some(first) = it.next() {
            let r = find(&mut parent, first);
            for c in it {
                let rc = find(&mut parent, c);
                if rc != r {
                    parent[rc] = r;
                }
            }
        }
    }
    let mut roots: Vec<usize> = Vec::new();
    let label: Vec<usize> = (0..p.cells)
        .map(|c| {
            let r = find(&mut parent, c);
            roots.iter().position(|&x| x == r).unwrap_or_else(|| {
                roots.push(r);
                roots.len() - 1
            })
        })
        .collect();
    if roots.len() <= 1 {
        return Vec::new();
    }
    (0..roots.len())
        .map(|k| {
            let mut cells = FixedBitSet::with_capacity(p.cells);
            cells.extend(label.iter().enumerate().filter(|&(_, &l)| l == k).map(|(c, _)| c));
            let keep: Vec<bool> = p.sets.iter().map(|s| s.ones().next().is_some_and(|c| label[c] == k)).collect();
            p.compact(&cells, &keep)
        })
        .collect()
}

fn solve_problem(p: Problem, threshold: usize, chosen: &mut Vec<usize>) -> Option<bool> {
    let p = reduce(p, chosen)?;
    if p.cells == 0 {
        return Some(true);
    }
    let parts = components(&p);
    if !parts.is_empty() {
        let mut exact = true;
        for part in parts {
            exact &= solve_problem(part, threshold, chosen)?;
        }
        return Some(exact);
    }
    let cell_sets = p.cell_sets();
    let greedy = greedy(&p);
    let none = FixedBitSet::with_capacity(p.sets.len());
    let lb = lower_bound(&p, &cell_sets, &full(p.cells), &none);
    let (best, exact) = if greedy.len() <= lb {
        (greedy, true)
    } else if p.sets.len() <= threshold {
        (branch_and_bound(&p, &cell_sets, greedy), true)
    } else {
        (greedy, false)
    };
    chosen.extend(best.into_iter().map(|i| p.ids[i]));
    Some(exact)
}

fn greedy(p: &Problem) -> Vec<usize> {
    let mut uncovered = full(p.cells);
    let mut picked = Vec::new();
    while !uncovered.is_clear() {
        let (best, gain) = p
            .sets
            .iter()
            .enumerate()
            .map(|(i, s)| (i, s.intersection_count(&uncovered)))
            .fold((usize::MAX, 0), |acc, x| if x.1 > acc.1 { x } else { acc });
        assert!(gain > 0, "greedy called on an infeasible problem");
        uncovered.difference_with(&p.sets[best]);
        picked.push(best);
    }
    // Drop sets made redundant by later picks.
    let mut k = picked.len();
    while k > 0 {
        k -= 1;
        let mut rest = FixedBitSet::with_capacity(p.cells);
        for (j, &s) in picked.iter().enumerate() {
            if j != k {
                rest.union_with(&p.sets[s]);
            }
        }
        if rest.count_ones(..) == p.cells {
            picked.remove(k);
        }
    }
    picked
}

/// Max of the disjoint-cell packing bound and the size bound.
fn lower_bound(p: &Problem, cell_sets: &[Vec<usize>], uncovered: &FixedBitSet, excluded: &FixedBitSet) -> usize {
    let remaining = uncovered.count_ones(..);
    if remaining == 0 {
        return 0;
    }
    let mut cells: Vec<(usize, usize)> =
        uncovered.ones().map(|c| (cell_sets[c].iter().filter(|&&s| !excluded.contains(s)).count(), c)).collect();
    cells.sort_unstable();
    let mut used = FixedBitSet::with_capacity(p.sets.len());
    let mut packing = 0;
    for &(_, c) in &cells {
        let avail = cell_sets[c].iter().filter(|&&s| !excluded.contains(s));
        if avail.clone().all(|&s| !used.contains(s)) {
            packing += 1;
            for &s in avail {
                used.insert(s);
            }
        }
    }
    let max_gain = p
        .sets
        .iter()
        .enumerate()
        .filter(|(i, _)| !excluded.contains(*i))
        .map(|(_, s)| s.intersection_count(uncovered))
        .max()
        .unwrap_or(0);
    let size = if max_gain == 0 { usize::MAX } else { remaining.div_ceil(max_gain) };
    packing.max(size)
}

fn branch_and_bound(p: &Problem, cell_sets: &[Vec<usize>], initial: Vec<usize>) -> Vec<usize> {
    let mut best = initial;
    let mut chosen = Vec::new();
    let excluded = FixedBitSet::with_capacity(p.sets.len());
    search(p, cell_sets, &full(p.cells), &excluded, &mut chosen, &mut best);
    best
}

fn search(
    p: &Problem,
    cell_sets: &[Vec<usize>],
    uncovered: &FixedBitSet,
    excluded: &FixedBitSet,
    chosen: &mut Vec<usize>,
    best: &mut Vec<usize>,
) {
    if uncovered.is_clear() {
        if chosen.len() < best.len() {
            *best = chosen.clone();
        }
        return;
    }
    if chosen.len() + 1 >= best.len() {
        return;
    }
    let lb = lower_bound(p, cell_sets, uncovered, excluded);
    if lb == usize::MAX || chosen.len() + lb >= best.len() {
        return;
    }
    let cell = uncovered
        .ones()
        .min_by_key(|&c| cell_sets[c].iter().filter(|&&s| !excluded.contains(s)).count())
        .expect("nonempty");
    let mut options: Vec<(usize, usize)> = cell_sets[cell]
        .iter()
        .filter(|&&s| !excluded.contains(s))
        .map(|&s| (p.sets[s].intersection_count(uncovered), s))
        .collect();
    options.sort_unstable_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    let mut excl = excluded.clone();
    for (_, s) in options {
        let mut next = uncovered.clone();
        next.difference_with(&p.sets[s]);
        chosen.push(s);
        search(p, cell_sets, &next, &excl, chosen, best);
        chosen.pop();
        excl.insert(s);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute(inst: &SetCoverInstance) -> Option<usize> {
        let s = inst.set_count();
        (0u32..(1 << s))
            .filter(|mask| {
                let chosen: Vec<usize> = (0..s).filter(|i| mask & (1 << i) != 0).collect();
                inst.is_cover(&chosen)
            })
            .map(|m| m.count_ones() as usize)
            .min()
    }

    #[test]
    fn small_examples() {
        let inst = SetCoverInstance::from_lists(5, &[vec![0, 1, 2], vec![2, 3], vec![3, 4], vec![0, 4]]);
        let sol = inst.solve(30).unwrap();
        assert_eq!(sol.chosen.len(), 2);
        assert!(sol.exact);
        assert!(inst.is_cover(&sol.chosen));
        let bad = SetCoverInstance::from_lists(3, &[vec![0], vec![1]]);
        assert!(bad.solve(30).is_none());
        let empty = SetCoverInstance::from_lists(0, &[]);
        assert_eq!(empty.solve(30).unwrap().chosen.len(), 0);
    }

    #[test]
    fn exact_beats_greedy_trap() {
        // A classic instance where greedy picks three sets instead of two.
        let inst = SetCoverInstance::from_lists(6, &[vec![0, 1, 2], vec![3, 4, 5], vec![0, 3], vec![1, 2, 4, 5]]);
        let exact = inst.solve(30).unwrap();
        assert_eq!(exact.chosen.len(), 2);
        assert!(exact.exact);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(400))]

        #[test]
        fn matches_brute_force(
            universe in 1usize..14,
            raw in proptest::collection::vec(proptest::collection::vec(0usize..14, 1..7), 1..12),
        ) {
            let lists: Vec<Vec<usize>> = raw.into_iter().map(|v| v.into_iter().filter(|&c| c < universe).collect()).collect();
            let inst = SetCoverInstance::from_lists(universe, &lists);
            let expected = brute(&inst);
            let got = inst.solve(30);
            prop_assert_eq!(got.as_ref().map(|s| s.chosen.len()), expected);
            if let Some(sol) = got {
                prop_assert!(sol.exact);
                prop_assert!(inst.is_cover(&sol.chosen));
            }
        }

        #[test]
        fn threshold_zero_is_an_upper_bound(
            universe in 1usize..14,
            raw in proptest::collection::vec(proptest::collection::vec(0usize..14, 1..7), 1..12),
        ) {
            let lists: Vec<Vec<usize>> = raw.into_iter().map(|v| v.into_iter().filter(|&c| c < universe).collect()).collect();
            let inst = SetCoverInstance::from_lists(universe, &lists);
            if let (Some(approx), Some(opt)) = (inst.solve(0), brute(&inst)) {
                prop_assert!(approx.chosen.len() >= opt);
                prop_assert!(inst.is_cover(&approx.chosen));
                if approx.exact {
                    prop_assert_eq!(approx.chosen.len(), opt);
                }
            }
        }
    }
}
