use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use serde_json::json;

use cocompact::bowen::{bowen_estimate, write_records_csv, GridRule};
use cocompact::entropy::{cover_family, entropy_sup, CoverFamilySpec};
use cocompact::shift::{shift_bowen_entropy, shift_cover_entropy, ShiftSpace};
use cocompact::verify::{run_suite, Suite};
use cocompact::{CompactInterval, Error, FiniteCover, LogBase, PiecewiseAffineMap, Rational, Result, Settings, Space};

#[derive(Parser)]
#[command(name = "coent", version, about = "Topological entropies of piecewise-affine maps")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Seed for every randomized step.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Logarithm base for reported entropies: e or 2.
    #[arg(long = "log-base", global = true)]
    log_base: Option<LogBase>,
    /// Largest set-cover component solved exactly.
    #[arg(long = "exact-threshold", global = true)]
    exact_threshold: Option<usize>,
    /// JSON settings file; flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file (CSV for sequences and records, JSON otherwise).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Compute one entropy.
    Entropy {
        #[command(subcommand)]
        kind: EntropyCmd,
    },
    /// Run verification harnesses; exits 1 if any check fails.
    Verify {
        #[arg(value_enum)]
        suite: SuiteArg,
    },
    /// Reproduce a worked example.
    Experiment {
        #[arg(value_enum)]
        which: ExperimentArg,
        #[arg(long, default_value_t = 20)]
        nmax: usize,
    },
}

#[derive(Subcommand)]
enum EntropyCmd {
    /// Co-compact entropy over a finite cover family.
    Cocompact {
        /// Preset name or path to a JSON map.
        #[arg(long, default_value = "doubling")]
        map: String,
        /// `default`, `binary:<depth>`, or a JSON file holding a family spec or a list of covers.
        #[arg(long, default_value = "default")]
        family: String,
        #[arg(long, default_value_t = 20)]
        nmax: usize,
        /// `R` or `a,b`.
        #[arg(long, default_value = "R")]
        space: String,
    },
    /// Bowen entropy on a compact interval.
    Bowen {
        #[arg(long, default_value = "doubling")]
        map: String,
        #[arg(long = "K", default_value = "0,1")]
        k: String,
        /// Decreasing scales, e.g. `2^-4,2^-6,2^-8`.
        #[arg(long, default_value = "2^-4,2^-6,2^-8")]
        eps: String,
        #[arg(long, default_value_t = 4)]
        nmin: usize,
        #[arg(long, default_value_t = 12)]
        nmax: usize,
        /// Fixed grid step instead of the adaptive rule.
        #[arg(long = "grid-step")]
        grid_step: Option<String>,
    },
    /// Cover and Bowen entropy of the full shift.
    Shift {
        #[arg(long)]
        p: u32,
        #[arg(long, default_value_t = 12)]
        nmax: usize,
        #[arg(long, default_value = "2^-2,2^-4")]
        eps: String,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SuiteArg {
    Facts,
    Power,
    Subsystem,
    Conjugacy,
    Lebesgue,
    Bound,
    All,
}

#[derive(Clone, Copy, ValueEnum)]
enum ExperimentArg {
    Doubling,
}

fn settings(g: &Global) -> Result<Settings> {
    let mut s = match &g.config {
        Some(path) => serde_json::from_str(&fs::read_to_string(path)?)?,
        None => Settings::default(),
    };
    if let Some(seed) = g.seed {
        s.seed = seed;
    }
    if let Some(base) = g.log_base {
        s.log_base = base;
    }
    if let Some(t) = g.exact_threshold {
        s.exact_threshold = t;
    }
    Ok(s)
}

/// `p/q`, a decimal, or `2^k`.
fn rational(token: &str) -> Result<Rational> {
    let t = token.trim();
    if let Some(exp) = t.strip_prefix("2^") {
        let k: i32 = exp.parse().map_err(|_| Error::Parse(format!("bad exponent in {t:?}")))?;
        return Ok(Rational::pow2(k));
    }
    Rational::from_str(t).map_err(|e| Error::Parse(e.to_string()))
}

fn rationals(list: &str) -> Result<Vec<Rational>> {
    list.split(',').map(rational).collect()
}

fn interval(text: &str) -> Result<CompactInterval> {
    match rationals(text)?.as_slice() {
        [a, b] => CompactInterval::new(a.clone(), b.clone()),
        _ => Err(Error::Parse(format!("expected `a,b`, got {text:?}"))),
    }
}

fn space(text: &str) -> Result<Space> {
    if text.trim() == "R" {
        Ok(Space::Line)
    } else {
        Ok(Space::Interval(interval(text)?))
    }
}

fn load_map(spec: &str) -> Result<PiecewiseAffineMap> {
    if let Some(f) = PiecewiseAffineMap::preset(spec) {
        return Ok(f);
    }
    let path = Path::new(spec);
    if !path.exists() {
        return Err(Error::InvalidInput(format!("unknown map preset {spec:?}")));
    }
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

#[derive(Deserialize)]
#[serde(untagged)]
enum FamilyFile {
    Spec(CoverFamilySpec),
    Covers(Vec<FiniteCover>),
}

fn load_family(spec: &str, space: &Space) -> Result<(serde_json::Value, Vec<FiniteCover>)> {
    let fam_spec = if spec == "default" {
        CoverFamilySpec::default()
    } else if let Some(depth) = spec.strip_prefix("binary:") {
        let d: u32 = depth.parse().map_err(|_| Error::Parse(format!("bad depth in {spec:?}")))?;
        CoverFamilySpec::binary_grids(d)
    } else {
        match serde_json::from_str(&fs::read_to_string(spec)?)? {
            FamilyFile::Spec(s) => s,
            FamilyFile::Covers(covers) => return Ok((json!({ "file": spec }), covers)),
        }
    };
    let covers = cover_family(space, &fam_spec)?;
    Ok((serde_json::to_value(&fam_spec)?, covers))
}

fn emit_json(value: &serde_json::Value, out: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    match out {
        Some(path) => fs::write(path, text + "\n")?,
        None => writeln!(io::stdout(), "{text}")?,
    }
    Ok(())
}

fn run(cli: Cli) -> Result<bool> {
    let s = settings(&cli.global)?;
    let out = cli.global.out.as_deref();
    match cli.command {
        Command::Entropy { kind: EntropyCmd::Cocompact { map, family, nmax, space: sp } } => {
            let f = load_map(&map)?;
            let sp = space(&sp)?;
            let (fam_json, covers) = load_family(&family, &sp)?;
            let sup = entropy_sup(&f, &covers, nmax, &s)?;
            if let Some(path) = out {
                sup.sequences[sup.witness_index].write_csv(fs::File::create(path)?)?;
            }
            let per_cover: Vec<_> = covers
                .iter()
                .zip(&sup.estimates)
                .zip(&sup.sequences)
                .map(|((u, e), q)| json!({ "cover": u, "estimate": e, "counts": q.counts(), "exact": q.is_exact() }))
                .collect();
            let report = json!({
                "map": f,
                "space": sp.to_string(),
                "family": fam_json,
                "n_max": nmax,
                "log_base": s.log_base,
                "value": sup.value,
                "witness_index": sup.witness_index,
                "witness_cover": sup.witness_cover,
                "covers": per_cover,
            });
            emit_json(&report, None)?;
            Ok(true)
        }
        Command::Entropy { kind: EntropyCmd::Bowen { map, k, eps, nmin, nmax, grid_step } } => {
            let f = load_map(&map)?;
            let k = interval(&k)?;
            let ladder = rationals(&eps)?;
            let rule = match grid_step {
                Some(step) => GridRule::Fixed(rational(&step)?),
                None => GridRule::Adaptive,
            };
            let est = bowen_estimate(&f, &k, &ladder, nmin..=nmax, &rule, s.log_base)?;
            if let Some(path) = out {
                write_records_csv(&est.records, fs::File::create(path)?)?;
            }
            let report = json!({
                "map": f,
                "K": k,
                "h": est.h,
                "log_base": est.log_base,
                "rates": est.rates,
                "monotone_trend": est.monotone_trend,
            });
            emit_json(&report, None)?;
            Ok(true)
        }
        Command::Entropy { kind: EntropyCmd::Shift { p, nmax, eps } } => {
            let ladder = rationals(&eps)?;
            let horizon = nmax + 2 + 64;
            let space = ShiftSpace::new(p, horizon)?;
            let seq = shift_cover_entropy(space, nmax, s.log_base)?;
            let bowen = shift_bowen_entropy(space, &ladder, 1..=nmax, s.log_base)?;
            if let Some(path) = out {
                seq.write_csv(fs::File::create(path)?)?;
            }
            let report = json!({
                "p": p,
                "n_max": nmax,
                "log_base": s.log_base,
                "cover_rate": seq.rows.last().map(|r| r.rate),
                "counts": seq.counts(),
                "bowen": bowen.h,
                "rates": bowen.rates,
            });
            emit_json(&report, None)?;
            Ok(true)
        }
        Command::Verify { suite } => {
            let suite = match suite {
                SuiteArg::Facts => Suite::Facts,
                SuiteArg::Power => Suite::Power,
                SuiteArg::Subsystem => Suite::Subsystem,
                SuiteArg::Conjugacy => Suite::Conjugacy,
                SuiteArg::Lebesgue => Suite::Lebesgue,
                SuiteArg::Bound => Suite::Bound,
                SuiteArg::All => Suite::All,
            };
            let report = run_suite(suite, &s)?;
            for c in &report.checks {
                eprintln!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            emit_json(&serde_json::to_value(&report)?, out)?;
            Ok(report.passed())
        }
        Command::Experiment { which: ExperimentArg::Doubling, nmax } => {
            let f = PiecewiseAffineMap::doubling();
            let covers = cover_family(&Space::Line, &CoverFamilySpec::default())?;
            let sup = entropy_sup(&f, &covers, nmax, &s)?;
            let ladder = [Rational::pow2(-4), Rational::pow2(-6), Rational::pow2(-8)];
            let bowen = bowen_estimate(&f, &CompactInterval::unit(), &ladder, 4..=12, &GridRule::Adaptive, s.log_base)?;
            let report = json!({
                "map": f,
                "log_base": s.log_base,
                "cocompact": {
                    "value": sup.value,
                    "n_max": nmax,
                    "family": CoverFamilySpec::default(),
                    "witness_cover": sup.witness_cover,
                    "counts": sup.sequences.iter().map(|q| q.counts()).collect::<Vec<_>>(),
                },
                "bowen": { "h": bowen.h, "K": CompactInterval::unit(), "rates": bowen.rates },
                "gap": bowen.h - sup.value,
            });
            emit_json(&report, out)?;
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
