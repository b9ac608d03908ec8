use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use obliqua::conditions::{overall, CheckReport, Status};
use obliqua::polyhedral::{check_minimal_representation, equivalence_test, maximal_sets};
use obliqua::scenario::{Construction, Functional, PolygonFile, Scenario, ScenarioError, Terminal};
use obliqua::stats::{ks_statistic, mc_estimate};

/// Exit codes: 0 success, 1 a check or comparison failed, 2 bad input,
/// 3 inconclusive under --strict, 4 a simulation failed.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn config(e: impl std::fmt::Display) -> Self {
        Failure { code: 2, message: e.to_string() }
    }

    fn runtime(e: impl std::fmt::Display) -> Self {
        Failure { code: 4, message: e.to_string() }
    }
}

impl From<ScenarioError> for Failure {
    fn from(e: ScenarioError) -> Self {
        match e {
            ScenarioError::Sim(_) => Failure::runtime(e),
            e => Failure::config(e),
        }
    }
}

type Outcome = Result<u8, Failure>;

#[derive(Parser)]
#[command(name = "obliqua", version, about = "Condition checks and simulation for obliquely reflected diffusions")]
struct Cli {
    /// Worker threads; changes wall time only. 0 picks the core count.
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every condition check on a scenario.
    Check {
        scenario: PathBuf,
        /// Write the JSON report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Exit 3 when some check is inconclusive.
        #[arg(long)]
        strict: bool,
    },
    /// Simulate paths and write per-path CSV files and a summary.
    Simulate {
        scenario: PathBuf,
        #[command(flatten)]
        run: RunFlags,
        #[arg(long)]
        construction: Option<Construction>,
        /// Output directory.
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Simulate even if a condition check fails.
        #[arg(long)]
        force: bool,
    },
    /// Two-sample KS comparison of two constructions.
    Compare {
        scenario: PathBuf,
        #[command(flatten)]
        run: RunFlags,
        #[arg(long, value_delimiter = ',', default_value = "direct,controlled")]
        constructions: Vec<Construction>,
        #[arg(long, default_value = "terminal_x")]
        functional: Functional,
        /// Pass below this KS distance; defaults to the scenario's.
        #[arg(long)]
        threshold: Option<f64>,
        /// Run the second construction on this scenario instead.
        #[arg(long)]
        other: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Dai-Williams checks on a polygon and the cross-check against the
    /// general conditions.
    Dw {
        polygon: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        strict: bool,
    },
}

#[derive(Args, Clone, Copy)]
struct RunFlags {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    paths: Option<u64>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    horizon: Option<f64>,
}

impl RunFlags {
    fn apply(self, sc: &mut Scenario) -> Result<(), Failure> {
        let r = &mut sc.run;
        r.seed = self.seed.unwrap_or(r.seed);
        r.paths = self.paths.unwrap_or(r.paths);
        r.dt = self.dt.unwrap_or(r.dt);
        r.horizon = self.horizon.unwrap_or(r.horizon);
        r.validate().map_err(Failure::config)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.workers).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(4);
        }
    };
    match pool.install(|| run(cli.command)) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(cmd: Command) -> Outcome {
    match cmd {
        Command::Check { scenario, out, strict } => check(&scenario, out.as_deref(), strict),
        Command::Simulate { scenario, run, construction, out, force } => simulate(&scenario, run, construction, &out, force),
        Command::Compare { scenario, run, constructions, functional, threshold, other, out } => {
            compare(&scenario, run, &constructions, functional, threshold, other.as_deref(), out.as_deref())
        }
        Command::Dw { polygon, out, strict } => dw(&polygon, out.as_deref(), strict),
    }
}

fn verdict_code(s: Status, strict: bool) -> u8 {
    match s {
        Status::Pass => 0,
        Status::Fail => 1,
        Status::Inconclusive if strict => 3,
        Status::Inconclusive => 0,
    }
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("outputs serialize");
    s.push('\n');
    s
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| Failure::config(format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn check(path: &Path, out: Option<&Path>, strict: bool) -> Outcome {
    let sc = Scenario::load(path)?;
    let reports = sc.checks()?;
    let status = overall(&reports);
    let doc = json!({
        "command": "check",
        "status": status,
        "provenance": sc.provenance(&[]),
        "reports": reports,
    });
    emit(out, &to_json(&doc))?;
    Ok(verdict_code(status, strict))
}

fn summarize(ts: &[Terminal], seed: u64) -> Value {
    let col = |f: fn(&Terminal) -> f64| mc_estimate(&ts.iter().map(|t| (t.path_id, f(t))).collect::<Vec<_>>(), &[seed]);
    json!({
        "x1": col(|t| t.x.x),
        "x2": col(|t| t.x.y),
        "lambda": col(|t| t.lambda),
    })
}

/// KS distance per component of `f` and the largest of them.
fn ks_block(a: &[Terminal], b: &[Terminal], f: Functional) -> Result<(Vec<f64>, f64), Failure> {
    let cols = |ts: &[Terminal]| {
        let rows: Vec<Vec<f64>> = ts.iter().map(|t| f.components(t)).collect();
        let k = rows.first().map_or(0, Vec::len);
        (0..k).map(|i| rows.iter().map(|r| r[i]).collect::<Vec<_>>()).collect::<Vec<_>>()
    };
    let (ca, cb) = (cols(a), cols(b));
    let ks = ca.iter().zip(&cb).map(|(x, y)| ks_statistic(x, y)).collect::<Result<Vec<_>, _>>().map_err(Failure::config)?;
    let max = ks.iter().copied().fold(0.0, f64::max);
    Ok((ks, max))
}

fn simulate(path: &Path, flags: RunFlags, construction: Option<Construction>, out: &Path, force: bool) -> Outcome {
    let mut sc = Scenario::load(path)?;
    flags.apply(&mut sc)?;
    let c = construction.unwrap_or(sc.run.construction);
    sc.run.construction = c;
    let checks = overall(&sc.checks()?);
    if checks == Status::Fail && !force {
        return Err(Failure { code: 1, message: "condition checks fail; rerun with --force to simulate anyway".into() });
    }
    let (seed, n, dt) = (sc.run.seed, sc.run.paths, sc.run.dt);
    let engine = sc.engine();
    let ts = engine.terminals(c, seed, n, dt).map_err(Failure::runtime)?;

    let io = |e: std::io::Error| Failure::config(format!("cannot write under {}: {e}", out.display()));
    let paths_dir = out.join("paths");
    fs::create_dir_all(&paths_dir).map_err(io)?;
    for id in 0..n.min(sc.run.csv_paths) {
        let rec = engine.record(c, seed, id, dt).map_err(Failure::runtime)?;
        let mut w = BufWriter::new(fs::File::create(paths_dir.join(format!("path_{id:06}.csv"))).map_err(io)?);
        rec.write_csv_every(&mut w, sc.run.thin).map_err(io)?;
        w.flush().map_err(io)?;
    }
    let mut w = BufWriter::new(fs::File::create(out.join("terminal.csv")).map_err(io)?);
    writeln!(w, "path_id,x1,x2,lambda").map_err(io)?;
    for t in &ts {
        writeln!(w, "{},{},{},{}", t.path_id, t.x.x, t.x.y, t.lambda).map_err(io)?;
    }
    w.flush().map_err(io)?;

    let mut seeds = vec![seed];
    let mut doc = json!({
        "command": "simulate",
        "construction": c,
        "checks": checks,
        "n_paths": n,
        "estimates": summarize(&ts, seed),
    });
    if c != Construction::Direct {
        // reference sample on an independent seed
        let rseed = seed.wrapping_add(1);
        seeds.push(rseed);
        let reference = engine.terminals(Construction::Direct, rseed, n, dt).map_err(Failure::runtime)?;
        let (ks, max) = ks_block(&ts, &reference, Functional::TerminalX)?;
        doc["ks_vs_direct"] = json!({
            "reference_seed": rseed,
            "ks_x1": ks[0],
            "ks_x2": ks[1],
            "max": max,
            "threshold": sc.run.ks_threshold,
            "pass": max < sc.run.ks_threshold,
        });
    }
    doc["provenance"] = serde_json::to_value(sc.provenance(&seeds)).expect("provenance serializes");
    fs::write(out.join("summary.json"), to_json(&doc)).map_err(io)?;
    Ok(0)
}

fn compare(
    path: &Path,
    flags: RunFlags,
    cs: &[Construction],
    f: Functional,
    threshold: Option<f64>,
    other: Option<&Path>,
    out: Option<&Path>,
) -> Outcome {
    let [a, b] = cs else {
        return Err(Failure::config(format!("--constructions takes exactly two names, got {}", cs.len())));
    };
    let mut first = Scenario::load(path)?;
    flags.apply(&mut first)?;
    let mut second = match other {
        Some(p) => {
            let mut s = Scenario::load(p)?;
            flags.apply(&mut s)?;
            s
        }
        None => first.clone(),
    };
    // the second sample is independent of the first
    second.run.seed = first.run.seed.wrapping_add(1);
    first.run.construction = *a;
    second.run.construction = *b;
    let threshold = threshold.unwrap_or(first.run.ks_threshold);
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(Failure::config(format!("--threshold must lie in (0, 1], got {threshold}")));
    }
    let seed = first.run.seed;
    let (n, dt) = (first.run.paths, first.run.dt);
    let ta = first.engine().terminals(*a, seed, n, dt).map_err(Failure::runtime)?;
    let tb = second.engine().terminals(*b, second.run.seed, n, dt).map_err(Failure::runtime)?;
    let (ks, max) = ks_block(&ta, &tb, f)?;
    let pass = max < threshold;
    let doc = json!({
        "command": "compare",
        "constructions": [a, b],
        "functional": f,
        "n_paths": n,
        "ks": ks,
        "max_ks": max,
        "threshold": threshold,
        "verdict": if pass { "pass" } else { "fail" },
        "provenance": [first.provenance(&[seed]), second.provenance(&[second.run.seed])],
    });
    emit(out, &to_json(&doc))?;
    Ok(if pass { 0 } else { 1 })
}

fn dw(path: &Path, out: Option<&Path>, strict: bool) -> Outcome {
    let pf = PolygonFile::load(path)?;
    let (p, tol) = (&pf.polygon, &pf.tolerances);
    let min = check_minimal_representation(p, tol).map_err(Failure::config)?;
    let sets = maximal_sets(p, tol).map_err(Failure::config)?;
    let eq = equivalence_test(p, tol).map_err(Failure::config)?;
    let all: Vec<&CheckReport> = std::iter::once(&min.report).chain([&eq.dw]).chain(&eq.general).collect();
    let status = all.iter().fold(Status::Pass, |s, r| s.worst(r.status));
    let doc = json!({
        "command": "dw",
        "status": status,
        "minimality": {
            "minimal": min.minimal,
            "redundant": min.redundant.iter().map(|i| i + 1).collect::<Vec<_>>(),
            "report": min.report,
        },
        "maximal_sets": sets.iter().map(|k| k.iter().map(|i| i + 1).collect::<Vec<_>>()).collect::<Vec<_>>(),
        "dw": eq.dw,
        "general": eq.general,
        "general_status": eq.general_status,
        "equivalence": if eq.agree { "agree" } else { "disagree" },
        "provenance": {
            "polygon": pf.name,
            "polygon_sha256": pf.sha256,
            "tolerance_profile": pf.profile,
            "tolerances": pf.tolerances,
        },
    });
    emit(out, &to_json(&doc))?;
    Ok(verdict_code(status, strict))
}
