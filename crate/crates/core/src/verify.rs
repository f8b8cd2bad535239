//! Seeded harnesses behind `coent verify`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::bowen::{bowen_estimate, GridRule};
use crate::config::Settings;
use crate::cover::{FiniteCover, Space};
use crate::entropy::{
    cover_family, entropy_estimate, entropy_sequence, entropy_sup, verify_conjugacy, verify_power, verify_subsystem,
    CoverFamilySpec,
};
use crate::error::Result;
use crate::interval::{Endpoint, Extent, OpenIntervalSet};
use crate::lebesgue::{check_spanning_cover_bound, lebesgue_number, verify_lebesgue};
use crate::piecewise::{CompactInterval, PiecewiseAffineMap};
use crate::rational::Rational;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &str, passed: bool, detail: impl Into<String>) -> Self {
        Check { name: name.to_string(), passed, detail: detail.into() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    fn extend(&mut self, other: VerifyReport) {
        self.checks.extend(other.checks);
    }
}

/// Random covers and sets over quarter-integer endpoints.
pub struct CoverSampler {
    rng: ChaCha8Rng,
}

impl CoverSampler {
    pub fn new(seed: u64) -> Self {
        CoverSampler { rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    fn point(&mut self, lo: i64, hi: i64) -> Rational {
        Rational::new(self.rng.gen_range(lo..=hi), 4)
    }

    /// One to three intervals in `[-3, 3]`, possibly unbounded at either end.
    pub fn set(&mut self) -> OpenIntervalSet {
        let k = self.rng.gen_range(1..=3);
        let mut pts: Vec<Rational> = (0..2 * k).map(|_| self.point(-12, 12)).collect();
        pts.sort();
        pts.dedup();
        let mut raw: Vec<(Endpoint, Endpoint)> = pts
            .chunks(2)
            .filter(|c| c.len() == 2)
            .map(|c| (Endpoint::Finite(c[0].clone()), Endpoint::Finite(c[1].clone())))
            .collect();
        if raw.is_empty() {
            raw.push((Endpoint::Finite(pts[0].clone()), Endpoint::PosInf));
        }
        if self.rng.gen_bool(0.3) {
            raw[0].0 = Endpoint::NegInf;
        }
        if self.rng.gen_bool(0.3) {
            let last = raw.len() - 1;
            raw[last].1 = Endpoint::PosInf;
        }
        OpenIntervalSet::normalize(raw).expect("ordered endpoints")
    }

    /// Complement of one or two bounded intervals in `[-3, 3]`.
    pub fn cocompact_set(&mut self) -> OpenIntervalSet {
        let k = self.rng.gen_range(1..=2);
        let mut hole = OpenIntervalSet::empty();
        for _ in 0..k {
            let a = self.point(-12, 11);
            let b = &a + &Rational::new(self.rng.gen_range(1..=8), 4);
            hole = hole.union(&OpenIntervalSet::between(a, b).expect("a < b"));
        }
        hole.complement_interior()
    }

    /// Patches the gaps of `elements` with one extra element and builds the cover.
    fn complete(&mut self, space: Space, mut elements: Vec<OpenIntervalSet>, cocompact: bool) -> FiniteCover {
        let canon: Vec<OpenIntervalSet> = elements.iter().map(|e| space.canonicalize(e)).collect();
        let union = canon.iter().fold(OpenIntervalSet::empty(), |acc, e| acc.union(e));
        if !union.is_full() {
            let patch = if cocompact {
                // Random co-compact elements all contain [49, 51].
                OpenIntervalSet::between(Rational::from_integer(49), Rational::from_integer(51))
                    .expect("a < b")
                    .complement_interior()
            } else {
                gap_patch(&union)
            };
            elements.push(patch);
        }
        FiniteCover::new(space, elements).expect("patched family covers")
    }

    /// A cover of `R` by co-compact sets.
    pub fn cocompact_cover(&mut self) -> FiniteCover {
        let k = self.rng.gen_range(1..=4);
        let els = (0..k).map(|_| self.cocompact_set()).collect();
        self.complete(Space::Line, els, true)
    }

    /// A cover of `R` by arbitrary open sets.
    pub fn line_cover(&mut self) -> FiniteCover {
        let k = self.rng.gen_range(1..=4);
        let els = (0..k).map(|_| self.set()).collect();
        self.complete(Space::Line, els, false)
    }

    /// A cover of `[0, 1]`.
    pub fn unit_cover(&mut self) -> FiniteCover {
        let k = self.rng.gen_range(1..=4);
        let els = (0..k)
            .map(|_| {
                let a = self.point(-1, 4);
                let b = &a + &Rational::new(self.rng.gen_range(1..=3), 4);
                OpenIntervalSet::between(a, b).expect("a < b")
            })
            .collect();
        self.complete(Space::unit(), els, false)
    }

    pub fn pick<T: Clone>(&mut self, items: &[T]) -> T {
        items[self.rng.gen_range(0..items.len())].clone()
    }
}

/// Quarter-neighbourhood of the gaps of `union`.
fn gap_patch(union: &OpenIntervalSet) -> OpenIntervalSet {
    let quarter = Rational::new(1, 4);
    let raw = union
        .complement()
        .into_iter()
        .map(|g| {
            let lo = match g.lo {
                Endpoint::Finite(v) => Endpoint::Finite(&v - &quarter),
                e => e,
            };
            let hi = match g.hi {
                Endpoint::Finite(v) => Endpoint::Finite(&v + &quarter),
                e => e,
            };
            (lo, hi)
        })
        .collect();
    OpenIntervalSet::normalize(raw).expect("ordered endpoints")
}

/// Perfect maps of `R` used by the randomized checks.
pub fn line_maps() -> Vec<PiecewiseAffineMap> {
    vec![
        PiecewiseAffineMap::identity(),
        PiecewiseAffineMap::doubling(),
        PiecewiseAffineMap::tent(),
        PiecewiseAffineMap::abs(),
        PiecewiseAffineMap::affine(Rational::new(-3, 2), Rational::new(1, 3)),
        PiecewiseAffineMap::affine(Rational::new(1, 2), Rational::one()),
    ]
}

/// Maps leaving `[0, 1]` invariant.
pub fn unit_maps() -> Vec<PiecewiseAffineMap> {
    vec![
        PiecewiseAffineMap::identity(),
        PiecewiseAffineMap::tent(),
        PiecewiseAffineMap::affine(Rational::new(1, 2), Rational::zero()),
        PiecewiseAffineMap::affine(Rational::from_integer(-1), Rational::one()),
    ]
}

struct Tally {
    name: &'static str,
    failures: usize,
    first: Option<String>,
}

impl Tally {
    fn new(name: &'static str) -> Self {
        Tally { name, failures: 0, first: None }
    }

    fn record(&mut self, ok: bool, what: impl FnOnce() -> String) {
        if !ok {
            self.failures += 1;
            if self.first.is_none() {
                self.first = Some(what());
            }
        }
    }

    fn finish(self, cases: usize) -> Check {
        let mut detail = format!("{cases} cases, {} failures", self.failures);
        if let Some(f) = self.first {
            detail.push_str(&format!("; first: {f}"));
        }
        Check::new(self.name, self.failures == 0, detail)
    }
}

/// Cover-algebra laws, subadditivity of `a_n` and interval-set lattice laws
/// on `cases` random instances.
pub fn verify_facts(settings: &Settings, cases: usize) -> Result<VerifyReport> {
    let mut s = CoverSampler::new(settings.seed);
    let t = settings.exact_threshold;
    let (lmaps, umaps) = (line_maps(), unit_maps());
    let mut refine = Tally::new("U refined by U v V");
    let mut sub = Tally::new("a subcover refines its cover");
    let mut trivial = Tally::new("N(U) = 1 iff X in U");
    let mut mono = Tally::new("refinement does not decrease N");
    let mut join = Tally::new("N(U v V) <= N(U) N(V)");
    let mut pull = Tally::new("N(f^-1 U) <= N(U), equal for surjective f");
    let mut subadd = Tally::new("subadditivity of a_n");
    let mut lattice = Tally::new("interval-set lattice laws");
    let mut exact = Tally::new("exact subcover sizes");
    for case in 0..cases {
        let (u, v, f) = match case % 3 {
            0 => (s.cocompact_cover(), s.cocompact_cover(), s.pick(&lmaps)),
            1 => (s.line_cover(), s.line_cover(), s.pick(&lmaps)),
            _ => (s.unit_cover(), s.unit_cover(), s.pick(&umaps)),
        };
        let uv = u.join(&v)?;
        let nu = u.minimal_subcover(t)?;
        let nv = v.minimal_subcover(t)?;
        let nuv = uv.minimal_subcover(t)?;
        exact.record(nu.exact && nv.exact && nuv.exact, || format!("{u} / {v}"));
        refine.record(u.refines(&uv)?, || format!("{u} / {v}"));
        let subcover = u.subfamily(&nu.witness)?;
        sub.record(u.refines(&subcover)?, || format!("{u}"));
        trivial.record((nu.size == 1) == u.has_full_element(), || format!("{u}"));
        mono.record(nu.size <= nuv.size && nv.size <= nuv.size, || format!("{u} / {v}"));
        join.record(nuv.size <= nu.size * nv.size, || format!("{u} / {v}"));
        let pulled = u.pullback(&f)?.minimal_subcover(t)?.size;
        let surjective = u.space().is_surjective(&f);
        pull.record(pulled <= nu.size && (!surjective || pulled == nu.size), || {
            format!("{f} on {u}: {pulled} vs {}", nu.size)
        });

        if case % 9 == 0 {
            let seq = entropy_sequence(&f, &u, 6, settings)?;
            subadd.record(seq.subadditivity_violations().is_empty(), || format!("{f} on {u}: {:?}", seq.counts()));
        }

        let (a, b, c) = (s.set(), s.set(), s.set());
        let laws = [
            a.union(&b) == b.union(&a),
            a.intersect(&b) == b.intersect(&a),
            a.union(&b).union(&c) == a.union(&b.union(&c)),
            a.intersect(&b).intersect(&c) == a.intersect(&b.intersect(&c)),
            a.union(&a) == a && a.intersect(&a) == a,
            a.union(&a.intersect(&b)) == a && a.intersect(&a.union(&b)) == a,
            a.intersect(&b.union(&c)) == a.intersect(&b).union(&a.intersect(&c)),
            a.union(&b).contains(&a) && a.contains(&a.intersect(&b)),
            OpenIntervalSet::normalize(a.intervals().iter().map(|iv| (iv.left.clone(), iv.right.clone())).collect())?
                == a,
        ];
        lattice.record(laws.iter().all(|&l| l), || format!("{a} / {b} / {c}"));
    }
    let subadd_cases = (0..cases).filter(|c| c % 9 == 0).count();
    let checks = vec![
        refine.finish(cases),
        sub.finish(cases),
        trivial.finish(cases),
        mono.finish(cases),
        join.finish(cases),
        pull.finish(cases),
        subadd.finish(subadd_cases),
        lattice.finish(cases),
        exact.finish(cases),
    ];
    Ok(VerifyReport { seed: settings.seed, checks })
}

/// Tent map with its near-partition of `[0, 1]`, `m ∈ {2, 3}`, `mn ≤ 12`.
pub fn verify_power_suite(settings: &Settings) -> Result<VerifyReport> {
    let tent = PiecewiseAffineMap::tent();
    let u = FiniteCover::tent_generating();
    let mut checks = Vec::new();
    for m in [2, 3] {
        let rep = verify_power(&tent, &u, m, 12 / m, settings)?;
        checks.push(Check::new(
            &format!("power m={m}"),
            rep.pass,
            format!(
                "identity {} over n <= {}, estimate {:.6} vs m*estimate {:.6} (rel. error {:.2e})",
                rep.identity_holds, rep.n_max, rep.estimate_power, rep.m_times_estimate, rep.relative_error
            ),
        ));
    }
    Ok(VerifyReport { seed: settings.seed, checks })
}

/// Tent map restricted to `[0, 1]` against the whole line, `n ≤ 10`.
pub fn verify_subsystem_suite(settings: &Settings) -> Result<VerifyReport> {
    let rep = verify_subsystem(
        &PiecewiseAffineMap::tent(),
        &CompactInterval::unit(),
        &FiniteCover::tent_generating(),
        10,
        settings,
    )?;
    let worst = rep.rows.iter().filter(|r| !r.ok).map(|r| r.n).collect::<Vec<_>>();
    let check = Check::new(
        "subsystem [0,1] of tent",
        rep.pass,
        format!("estimates {:.6} <= {:.6}; failing rows {worst:?}", rep.estimate_sub, rep.estimate_whole),
    );
    Ok(VerifyReport { seed: settings.seed, checks: vec![check] })
}

/// Doubling map conjugated by `x + 1`, default family, `n ≤ 12`.
pub fn verify_conjugacy_suite(settings: &Settings) -> Result<VerifyReport> {
    let f = PiecewiseAffineMap::doubling();
    let h = PiecewiseAffineMap::affine(Rational::one(), Rational::one());
    let g = h.compose(&f).compose(&h.inverse()?);
    let family = cover_family(&Space::Line, &CoverFamilySpec::default())?;
    let rep = verify_conjugacy(&f, &g, &h, &family, 12, settings)?;
    let unequal = rep.covers.iter().filter(|c| !c.equal).map(|c| c.cover_index).collect::<Vec<_>>();
    let check = Check::new(
        "conjugacy x+1 of doubling",
        rep.pass,
        format!(
            "{} covers, {} samples, structural {}; unequal covers {unequal:?}",
            rep.covers.len(),
            rep.samples_checked,
            rep.structural_match
        ),
    );
    Ok(VerifyReport { seed: settings.seed, checks: vec![check] })
}

/// `covers` random co-compact covers, each with a positive Lebesgue number
/// passing `trials` containment trials.
pub fn verify_lebesgue_suite(settings: &Settings, covers: usize, trials: usize) -> Result<VerifyReport> {
    let mut s = CoverSampler::new(settings.seed);
    let mut tally = Tally::new("positive Lebesgue numbers pass containment trials");
    for i in 0..covers {
        let u = s.cocompact_cover();
        let d = lebesgue_number(&u);
        let positive = d > Extent::Finite(Rational::zero());
        let check = verify_lebesgue(&u, &d, trials, settings.seed.wrapping_add(i as u64));
        tally.record(positive && check.passed, || format!("{u}: delta {d}, witness {:?}", check.witness));
    }
    Ok(VerifyReport { seed: settings.seed, checks: vec![tally.finish(covers)] })
}

/// Spanning bound for doubling and tent with the default co-compact family, `n ≤ 8`.
pub fn verify_bound_suite(settings: &Settings) -> Result<VerifyReport> {
    let family = cover_family(&Space::Line, &CoverFamilySpec::default())?;
    let mut checks = Vec::new();
    for (name, f) in [("doubling", PiecewiseAffineMap::doubling()), ("tent", PiecewiseAffineMap::tent())] {
        let mut tally = Tally::new("spanning bound");
        for (i, u) in family.iter().enumerate() {
            let rep = check_spanning_cover_bound(&f, u, 8, settings)?;
            tally.record(rep.holds(), || format!("cover {i}: {:?}", rep.rows));
        }
        let mut c = tally.finish(family.len());
        c.name = format!("spanning bound, {name}");
        checks.push(c);
    }
    Ok(VerifyReport { seed: settings.seed, checks })
}

/// Subadditivity, `c(id) = 0`, and co-compact estimates against Bowen estimates.
pub fn verify_entropy_suite(settings: &Settings) -> Result<VerifyReport> {
    let family = cover_family(&Space::Line, &CoverFamilySpec::default())?;
    let unit = CompactInterval::unit();
    let ladder = [Rational::pow2(-4), Rational::pow2(-6)];
    let mut checks = Vec::new();

    let id = PiecewiseAffineMap::identity();
    let sup = entropy_sup(&id, &family, 40, settings)?;
    let constant = sup.sequences.iter().all(|s| s.counts().iter().all(|&c| c == s.rows[0].big_n));
    checks.push(Check::new("identity has constant N_n", constant, format!("sup estimate {:.6} at n = 40", sup.value)));

    for (name, f, n_max) in [
        ("doubling", PiecewiseAffineMap::doubling(), 20),
        ("tent", PiecewiseAffineMap::tent(), 10),
        ("identity", id.clone(), 40),
    ] {
        let sup = entropy_sup(&f, &family, n_max, settings)?;
        let violations: usize = sup.sequences.iter().map(|s| s.subadditivity_violations().len()).sum();
        checks.push(Check::new(&format!("subadditivity, {name}"), violations == 0, format!("{violations} violations")));
        let bowen = bowen_estimate(&f, &unit, &ladder, 4..=10, &GridRule::Adaptive, settings.log_base)?;
        checks.push(Check::new(
            &format!("co-compact <= Bowen + 0.05, {name}"),
            sup.value <= bowen.h + 0.05,
            format!("co-compact {:.6}, Bowen {:.6}", sup.value, bowen.h),
        ));
    }

    let tent_seq = entropy_sequence(&PiecewiseAffineMap::tent(), &FiniteCover::tent_generating(), 12, settings)?;
    let est = entropy_estimate(&tent_seq, settings.tolerance)?;
    checks.push(Check::new(
        "tent near-partition estimate",
        (est.value - settings.log_base.from_nats(2f64.ln())).abs() < 1e-9,
        format!("{:.9}", est.value),
    ));
    Ok(VerifyReport { seed: settings.seed, checks })
}

/// Which harness to run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    Facts,
    Power,
    Subsystem,
    Conjugacy,
    Lebesgue,
    Bound,
    All,
}

pub fn run_suite(suite: Suite, settings: &Settings) -> Result<VerifyReport> {
    match suite {
        Suite::Facts => verify_facts(settings, 1000),
        Suite::Power => verify_power_suite(settings),
        Suite::Subsystem => verify_subsystem_suite(settings),
        Suite::Conjugacy => verify_conjugacy_suite(settings),
        Suite::Lebesgue => verify_lebesgue_suite(settings, 200, 10_000),
        Suite::Bound => verify_bound_suite(settings),
        Suite::All => {
            let mut all = VerifyReport { seed: settings.seed, checks: Vec::new() };
            for s in [Suite::Facts, Suite::Power, Suite::Subsystem, Suite::Conjugacy, Suite::Lebesgue, Suite::Bound] {
                all.extend(run_suite(s, settings)?);
            }
            all.extend(verify_entropy_suite(settings)?);
            Ok(all)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn samplers_make_valid_covers() {
        let mut s = CoverSampler::new(3);
        for _ in 0..200 {
            assert!(s.cocompact_cover().is_cocompact());
            assert!(s.line_cover().space().is_line());
            assert!(!s.unit_cover().space().is_line());
        }
    }

    #[test]
    fn facts_small_run() {
        let rep = verify_facts(&Settings::default(), 60).unwrap();
        assert!(rep.passed(), "{:#?}", rep.checks);
    }

    #[test]
    fn power_and_subsystem_suites() {
        let s = Settings::default();
        assert!(verify_power_suite(&s).unwrap().passed());
        assert!(verify_subsystem_suite(&s).unwrap().passed());
    }

    #[test]
    fn lebesgue_small_run() {
        assert!(verify_lebesgue_suite(&Settings::default(), 20, 500).unwrap().passed());
    }
}
