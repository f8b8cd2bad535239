//! `N_n` without materializing the full join.
//!
//! An element of `⋁_{i<n} f^{-i}(U)` is `C(s) = ⋂_{i<n} f^{-i}(U_{s_i})` for a
//! word `s`. A `k`-tuple of words of length `n` is viable when the sets
//! `C(s^1), …, C(s^k)` cover the space. Viability passes to prefixes, so the
//! viable tuples of length `n` are among the extensions of viable tuples of
//! length `n - 1`, and `N_n` is the least `k` with a viable tuple. Since
//! `N_n ≥ N_{n-1}` the search for row `n` starts at `k = N_{n-1}`, and a
//! viable tuple of that size settles the row exactly.

use std::collections::{HashMap, HashSet};

use crate::cover::FiniteCover;
use crate::error::{Error, Result};
use crate::interval::OpenIntervalSet;
use crate::piecewise::PiecewiseAffineMap;

#[derive(Default)]
struct Interner {
    sets: Vec<OpenIntervalSet>,
    ids: HashMap<OpenIntervalSet, u32>,
}

impl Interner {
    fn intern(&mut self, s: OpenIntervalSet) -> u32 {
        if let Some(&id) = self.ids.get(&s) {
            return id;
        }
        let id = self.sets.len() as u32;
        self.ids.insert(s.clone(), id);
        self.sets.push(s);
        id
    }
}

struct Search<'a> {
    cover: &'a FiniteCover,
    f: &'a PiecewiseAffineMap,
    symbols: usize,
    /// `pre[m][a] = f^{-m}(U_a)`.
    pre: Vec<Vec<OpenIntervalSet>>,
    sets: Interner,
    state_cap: usize,
}

impl<'a> Search<'a> {
    fn preimages(&mut self, m: usize) -> Result<&[OpenIntervalSet]> {
        while self.pre.len() <= m {
            let last = self.pre.last().expect("level 0 present");
            let next: Vec<OpenIntervalSet> =
                last.iter().map(|u| self.cover.space().canonicalize(&self.f.preimage(u))).collect();
            self.pre.push(next);
        }
        Ok(&self.pre[m])
    }

    fn covers(&self, state: &[u32]) -> bool {
        let mut acc = OpenIntervalSet::empty();
        for &id in state {
            acc = acc.union(&self.sets.sets[id as usize]);
            if acc.is_full() {
                return true;
            }
        }
        acc.is_full()
    }

    /// Viable multisets of `k` base elements.
    fn first_level(&mut self, k: usize) -> Vec<Vec<u32>> {
        let base: Vec<u32> = self.pre[0].clone().into_iter().map(|s| self.sets.intern(s)).collect();
        let mut out = Vec::new();
        let mut pick = Vec::with_capacity(k);
        fn rec(search: &Search, base: &[u32], k: usize, start: usize, pick: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
            if pick.len() == k {
                if search.covers(pick) {
                    let mut s = pick.clone();
                    s.sort_unstable();
                    out.push(s);
                }
                return;
            }
            for i in start..base.len() {
                pick.push(base[i]);
                rec(search, base, k, i, pick, out);
                pick.pop();
            }
        }
        rec(self, &base, k, 0, &mut pick, &mut out);
        out.sort();
        out.dedup();
        self.prune(out)
    }

    /// Extends viable tuples of words of length `m` to length `m + 1`.
    fn extend(&mut self, states: &[Vec<u32>], m: usize) -> Result<(Vec<Vec<u32>>, bool)> {
        self.preimages(m)?;
        let layer = self.pre[m].clone();
        let mut memo: HashMap<(u32, usize), u32> = HashMap::new();
        let mut next: HashSet<Vec<u32>> = HashSet::new();
        for state in states {
            let k = state.len();
            let mut choices = Vec::new();
            symbol_choices(state, self.symbols, &mut vec![0; k], 0, &mut choices);
            for choice in choices {
                let mut ids: Vec<u32> = Vec::with_capacity(k);
                for j in 0..k {
                    let key = (state[j], choice[j]);
                    let id = match memo.get(&key) {
                        Some(&id) => id,
                        None => {
                            let meet = self.sets.sets[state[j] as usize].intersect(&layer[choice[j]]);
                            let id = self.sets.intern(meet);
                            memo.insert(key, id);
                            id
                        }
                    };
                    ids.push(id);
                }
                if self.covers(&ids) {
                    ids.sort_unstable();
                    next.insert(ids);
                }
            }
        }
        let mut out: Vec<Vec<u32>> = next.into_iter().collect();
        out.sort();
        Ok(self.truncate(self.prune(out)))
    }

    fn start(&mut self, k: usize) -> (Vec<Vec<u32>>, bool) {
        let first = self.first_level(k);
        self.truncate(first)
    }

    fn truncate(&self, mut states: Vec<Vec<u32>>) -> (Vec<Vec<u32>>, bool) {
        let cut = states.len() > self.state_cap;
        states.truncate(self.state_cap);
        (states, cut)
    }

    /// Drops tuples holding a set strictly contained in another set of the
    /// level. Enlarging a set keeps a tuple viable, so the enlarged tuple is
    /// itself a state, and its extensions dominate those of the dropped one.
    fn prune(&self, states: Vec<Vec<u32>>) -> Vec<Vec<u32>> {
        let mut ids: Vec<u32> = states.iter().flatten().copied().collect();
        ids.sort_unstable();
        ids.dedup();
        let dominated: HashSet<u32> = ids
            .iter()
            .copied()
            .filter(|&a| {
                let sa = &self.sets.sets[a as usize];
                ids.iter().any(|&b| b != a && self.sets.sets[b as usize].contains(sa))
            })
            .collect();
        if dominated.is_empty() {
            return states;
        }
        states.into_iter().filter(|st| st.iter().all(|id| !dominated.contains(id))).collect()
    }
}

/// Symbol assignments for a sorted tuple; equal sets take non-decreasing
/// symbols, which loses nothing since the tuple is a multiset.
fn symbol_choices(state: &[u32], symbols: usize, choice: &mut Vec<usize>, j: usize, out: &mut Vec<Vec<usize>>) {
    if j == state.len() {
        out.push(choice.clone());
        return;
    }
    let lo = if j > 0 && state[j] == state[j - 1] { choice[j - 1] } else { 0 };
    for a in lo..symbols {
        choice[j] = a;
        symbol_choices(state, symbols, choice, j + 1, out);
    }
}

/// `N_n` for `n = from..=to`, given the certified lower bound `k0 ≤ N_{from-1}`.
///
/// Each level keeps at most `state_cap` tuples (the first ones in sorted
/// order). Finding a viable `k`-tuple proves `N_n ≤ k`; a level that empties
/// without truncation proves `N_n > k`. A row is exact when its value equals
/// the certified lower bound.
pub(crate) fn word_counts(
    f: &PiecewiseAffineMap,
    u: &FiniteCover,
    from: usize,
    to: usize,
    k0: usize,
    state_cap: usize,
) -> Result<Vec<(u64, bool)>> {
    let base = u.maximal_elements();
    let mut search = Search {
        cover: u,
        f,
        symbols: base.len(),
        pre: vec![base.elements().to_vec()],
        sets: Interner::default(),
        state_cap: state_cap.max(1),
    };
    let mut out = Vec::new();
    let mut lower = k0.max(1);
    let mut k = lower;
    let (mut states, mut truncated) = search.start(k);
    let mut level = 1;
    for n in from..=to {
        loop {
            while level < n && !states.is_empty() {
                let (next, cut) = search.extend(&states, level)?;
                states = next;
                truncated |= cut;
                level += 1;
            }
            if level == n && !states.is_empty() {
                out.push((k as u64, k == lower));
                break;
            }
            if !truncated && k == lower {
                lower += 1;
            }
            k += 1;
            if k > MAX_TUPLE {
                return Err(Error::ResourceLimit(format!("word search gave up at k = {k}")));
            }
            (states, truncated) = search.start(k);
            level = 1;
        }
    }
    Ok(out)
}

/// Largest tuple size the word search will try.
const MAX_TUPLE: usize = 12;
