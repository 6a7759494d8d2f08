//! The `streamcover` command line.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::error::{Error, Result};
use crate::hardgen::{
    gen_mc, gen_sc, gen_sc_partition, planted_partition_instance, sample_disj, DisjSide,
};
use crate::io::{meta_path, read_instance, write_instance, write_meta};
use crate::oracles::{exact_set_cover, greedy_set_cover, ExactOutcome};
use crate::solver::{solve, SolverConfig, SubSolver};
use crate::stream::{SetStream, StreamOrder};
use crate::system::{Seed, SetSystem};
use crate::verify::{
    check_coverage_lemma, check_element_sampling, check_mc_gap, check_sc_opt_gap,
    check_solver_contract, TrialReport,
};

pub const BENCH_HEADER: [&str; 10] = [
    "instance",
    "n",
    "m",
    "alpha",
    "eps",
    "passes",
    "peak_entries",
    "sol_size",
    "opt_exact",
    "ratio",
];

#[derive(Parser, Debug)]
#[command(
    name = "streamcover",
    version,
    about = "Multi-pass streaming set cover toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Hard set cover instance (disjointness pairs through mapping-extensions).
    GenSc(GenScArgs),
    /// Hard maximum coverage instance (gap-hamming pairs plus random halves).
    GenMc(GenMcArgs),
    /// One disjointness pair over [t], written as a two-set instance.
    GenDisj(GenDisjArgs),
    /// Run the multi-pass streaming solver.
    SolveStream(SolveStreamArgs),
    /// Branch and bound optimum, optionally capped.
    SolveExact(SolveExactArgs),
    /// Greedy cover.
    SolveGreedy(SolveGreedyArgs),
    /// Monte-Carlo lemma checks.
    Verify(VerifyArgs),
    /// Solve every instance of a suite file and write a CSV table.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ThetaArg {
    #[value(name = "0")]
    Zero,
    #[value(name = "1")]
    One,
    Random,
}

impl ThetaArg {
    fn forced(self) -> Option<bool> {
        match self {
            ThetaArg::Zero => Some(false),
            ThetaArg::One => Some(true),
            ThetaArg::Random => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum SideArg {
    Yes,
    No,
    Natural,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum OrderArg {
    Adversarial,
    Random,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum SubSolverArg {
    Exact,
    Greedy,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Lemma {
    Coverage,
    ScOpt,
    Sampling,
    McGap,
    Solver,
}

#[derive(Args, Debug, Clone)]
struct GenScArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    m: usize,
    #[arg(long)]
    t: usize,
    #[arg(long)]
    alpha: usize,
    #[arg(long, value_enum, default_value = "random")]
    theta: ThetaArg,
    /// Include the disjointness pairs and block maps in the metadata.
    #[arg(long)]
    full_meta: bool,
    /// Also draw the random Alice/Bob split of the sets.
    #[arg(long)]
    partition: bool,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug, Clone)]
struct GenMcArgs {
    #[arg(long)]
    m: usize,
    #[arg(long)]
    t1: usize,
    /// Defaults to t1/2.
    #[arg(long)]
    a: Option<usize>,
    /// Defaults to t1/2.
    #[arg(long)]
    b: Option<usize>,
    #[arg(long, value_enum, default_value = "random")]
    theta: ThetaArg,
    #[arg(long)]
    full_meta: bool,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct GenDisjArgs {
    #[arg(long)]
    t: usize,
    #[arg(long, value_enum)]
    side: SideArg,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct SolveStreamArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    alpha: usize,
    #[arg(long)]
    eps: f64,
    #[arg(long)]
    seed: Option<u64>,
    /// Run a single guess instead of the geometric schedule.
    #[arg(long)]
    guess: Option<usize>,
    #[arg(long, value_enum, default_value = "adversarial")]
    order: OrderArg,
    #[arg(long, value_enum, default_value = "exact")]
    subsolver: SubSolverArg,
    #[arg(long)]
    ledger_budget: Option<usize>,
    #[arg(long)]
    json: bool,
}

#[derive(Args, Debug)]
struct SolveExactArgs {
    #[arg(long)]
    input: PathBuf,
    /// Only decide whether a cover of at most this many sets exists.
    #[arg(long)]
    cap: Option<usize>,
}

#[derive(Args, Debug)]
struct SolveGreedyArgs {
    #[arg(long)]
    input: PathBuf,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[arg(long, value_enum)]
    lemma: Lemma,
    #[arg(long)]
    trials: usize,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    s: Option<usize>,
    #[arg(long)]
    u_size: Option<usize>,
    #[arg(long)]
    t: Option<usize>,
    #[arg(long)]
    alpha: Option<usize>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    t1: Option<usize>,
    #[arg(long)]
    a: Option<usize>,
    #[arg(long)]
    b: Option<usize>,
    #[arg(long)]
    planted_opt: Option<usize>,
    /// Print a JSON array instead of key=value lines.
    #[arg(long)]
    json: bool,
}

#[derive(Args, Debug)]
struct BenchArgs {
    #[arg(long)]
    suite: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
}

/// Parses `argv` (including the program name), runs the command and returns
/// the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(out) => {
            print!("{out}");
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_io() {
                2
            } else {
                1
            }
        }
    }
}

fn resolve_seed(seed: Option<u64>) -> Seed {
    Seed(seed.unwrap_or_else(rand::random))
}

fn dispatch(command: Command) -> Result<String> {
    match command {
        Command::GenSc(a) => gen_sc_cmd(a),
        Command::GenMc(a) => gen_mc_cmd(a),
        Command::GenDisj(a) => gen_disj_cmd(a),
        Command::SolveStream(a) => solve_stream_cmd(a),
        Command::SolveExact(a) => solve_exact_cmd(a),
        Command::SolveGreedy(a) => solve_greedy_cmd(a),
        Command::Verify(a) => verify_cmd(a),
        Command::Bench(a) => bench_cmd(a),
    }
}

fn written(out: &Path, system: &SetSystem, seed: Seed) -> String {
    format!(
        "seed={seed}\nwrote={}\nmeta={}\nn={}\nm={}\n",
        out.display(),
        meta_path(out).display(),
        system.universe_size(),
        system.num_sets()
    )
}

fn opt_str<T: ToString>(v: Option<T>) -> String {
    v.map_or("none".to_string(), |v| v.to_string())
}

fn gen_sc_cmd(a: GenScArgs) -> Result<String> {
    let seed = resolve_seed(a.seed);
    let mut rng = seed.rng();
    let mut inst = gen_sc(a.n, a.m, a.t, a.alpha, a.theta.forced(), &mut rng)?;
    inst.seed = Some(seed);
    let labels = a.partition.then(|| gen_sc_partition(&inst, &mut rng));
    write_instance(&inst.system, &a.out)?;
    write_meta(&a.out, &inst.metadata(a.full_meta, labels.as_ref()))?;
    let mut out = written(&a.out, &inst.system, seed);
    let _ = writeln!(
        out,
        "theta={}\ni_star={}",
        inst.theta as u8,
        opt_str(inst.i_star)
    );
    Ok(out)
}

fn gen_mc_cmd(a: GenMcArgs) -> Result<String> {
    let seed = resolve_seed(a.seed);
    let (sa, sb) = (a.a.unwrap_or(a.t1 / 2), a.b.unwrap_or(a.t1 / 2));
    let mut inst = gen_mc(a.m, a.t1, sa, sb, a.theta.forced(), &mut seed.rng())?;
    inst.seed = Some(seed);
    write_instance(&inst.system, &a.out)?;
    write_meta(&a.out, &inst.metadata(a.full_meta))?;
    let mut out = written(&a.out, &inst.system, seed);
    let _ = writeln!(
        out,
        "theta={}\ni_star={}\ntau={}",
        inst.theta as u8,
        opt_str(inst.i_star),
        inst.tau()
    );
    Ok(out)
}

fn gen_disj_cmd(a: GenDisjArgs) -> Result<String> {
    let seed = resolve_seed(a.seed);
    let side = match a.side {
        SideArg::Yes => DisjSide::Yes,
        SideArg::No => DisjSide::No,
        SideArg::Natural => DisjSide::Natural,
    };
    let d = sample_disj(a.t, side, &mut seed.rng())?;
    let system = SetSystem::new(a.t, vec![d.a.clone(), d.b.clone()])?;
    write_instance(&system, &a.out)?;
    // theta carries Z and i_star the common element.
    let meta = json!({
        "generator": "disj",
        "seed": seed.0,
        "params": {"t": a.t, "side": side},
        "theta": d.z as u8,
        "i_star": d.e_star,
    });
    write_meta(&a.out, &meta)?;
    let mut out = written(&a.out, &system, seed);
    let _ = writeln!(out, "z={}\ne_star={}", d.z as u8, opt_str(d.e_star));
    Ok(out)
}

fn join(xs: &[usize]) -> String {
    xs.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

fn solve_stream_cmd(a: SolveStreamArgs) -> Result<String> {
    let seed = resolve_seed(a.seed);
    let system = read_instance(&a.input)?;
    let mut config = SolverConfig::new(a.alpha, a.eps, seed)?;
    config.guess_override = a.guess;
    config.ledger_budget = a.ledger_budget;
    config.subsolver = match a.subsolver {
        SubSolverArg::Exact => SubSolver::Exact,
        SubSolverArg::Greedy => SubSolver::Greedy,
    };
    config.validate()?;
    let order = match a.order {
        OrderArg::Adversarial => StreamOrder::Adversarial,
        OrderArg::Random => StreamOrder::Random(seed.derive(u64::MAX)),
    };
    let mut stream = SetStream::from_system(&system, order);
    let res = solve(&mut stream, &config)?;
    if a.json {
        let doc = json!({"seed": seed.0, "sol_size": res.chosen.len(), "result": res});
        return Ok(serde_json::to_string_pretty(&doc)? + "\n");
    }
    Ok(format!(
        "seed={seed}\nsol_size={}\nfeasible={}\npasses={}\npeak_entries={}\nwinning_guess={}\nchosen={}\n",
        res.chosen.len(),
        res.feasible,
        res.passes_used,
        res.peak_entries,
        res.winning_guess,
        join(&res.chosen)
    ))
}

fn solve_exact_cmd(a: SolveExactArgs) -> Result<String> {
    let system = read_instance(&a.input)?;
    Ok(match exact_set_cover(&system, a.cap)? {
        ExactOutcome::Optimal(r) => format!(
            "opt_size={}\nwitness={}\nnodes_explored={}\n",
            r.opt_size,
            join(&r.witness),
            r.nodes_explored
        ),
        ExactOutcome::ExceedsCap {
            cap,
            nodes_explored,
        } => {
            format!("exceeds_cap={cap}\nnodes_explored={nodes_explored}\n")
        }
    })
}

fn solve_greedy_cmd(a: SolveGreedyArgs) -> Result<String> {
    let system = read_instance(&a.input)?;
    let picks = greedy_set_cover(&system)?;
    Ok(format!(
        "sol_size={}\nchosen={}\n",
        picks.len(),
        join(&picks)
    ))
}

fn verify_cmd(a: VerifyArgs) -> Result<String> {
    let seed = resolve_seed(a.seed);
    let report: TrialReport = match a.lemma {
        Lemma::Coverage => {
            let n = a.n.unwrap_or(4096);
            check_coverage_lemma(
                n,
                a.s.unwrap_or(n / 2),
                a.k.unwrap_or(2),
                a.u_size.unwrap_or(n),
                a.trials,
                seed,
            )?
        }
        Lemma::ScOpt => check_sc_opt_gap(
            a.n.unwrap_or(256),
            a.m.unwrap_or(16),
            a.t.unwrap_or(4),
            a.alpha.unwrap_or(2),
            a.trials,
            seed,
        )?,
        Lemma::Sampling => check_element_sampling(
            a.n.unwrap_or(512),
            a.m.unwrap_or(12),
            a.k.unwrap_or(3),
            a.rho.unwrap_or(0.25),
            a.trials,
            seed,
        )?,
        Lemma::McGap => {
            let t1 = a.t1.unwrap_or(64);
            check_mc_gap(
                a.m.unwrap_or(8),
                t1,
                a.a.unwrap_or(t1 / 2),
                a.b.unwrap_or(t1 / 2),
                a.trials,
                seed,
            )?
        }
        Lemma::Solver => check_solver_contract(
            a.n.unwrap_or(1024),
            a.m.unwrap_or(64),
            a.alpha.unwrap_or(2),
            a.eps.unwrap_or(0.5),
            a.planted_opt.unwrap_or(4),
            a.trials,
            seed,
        )?,
    };
    if a.json {
        return Ok(serde_json::to_string_pretty(&[report])? + "\n");
    }
    Ok(report.to_kv())
}

/// One line of a bench suite.
#[derive(Parser, Debug)]
#[command(no_binary_name = true)]
struct BenchLine {
    #[command(subcommand)]
    source: BenchSource,
    #[arg(long, global = true)]
    alpha: Option<usize>,
    #[arg(long, global = true)]
    eps: Option<f64>,
    /// Row label; defaults to the source kind and line number.
    #[arg(long, global = true)]
    id: Option<String>,
    /// Also compute the exact optimum for the ratio column.
    #[arg(long, global = true)]
    exact: bool,
}

#[derive(Subcommand, Debug)]
enum BenchSource {
    GenSc {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        t: usize,
        #[arg(long, value_enum, default_value = "random")]
        theta: ThetaArg,
    },
    GenMc {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        t1: usize,
        #[arg(long)]
        a: Option<usize>,
        #[arg(long)]
        b: Option<usize>,
        #[arg(long, value_enum, default_value = "random")]
        theta: ThetaArg,
    },
    /// Planted k-partition plus random halves.
    Planted {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        k: usize,
    },
    File {
        #[arg(long)]
        input: PathBuf,
    },
}

impl BenchSource {
    fn kind(&self) -> &'static str {
        match self {
            BenchSource::GenSc { .. } => "gen-sc",
            BenchSource::GenMc { .. } => "gen-mc",
            BenchSource::Planted { .. } => "planted",
            BenchSource::File { .. } => "file",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchRow {
    pub instance: String,
    pub n: usize,
    pub m: usize,
    pub alpha: usize,
    pub eps: f64,
    pub passes: usize,
    pub peak_entries: usize,
    pub sol_size: usize,
    pub opt_exact: Option<usize>,
    pub ratio: Option<f64>,
}

impl BenchRow {
    fn record(&self) -> Vec<String> {
        vec![
            self.instance.clone(),
            self.n.to_string(),
            self.m.to_string(),
            self.alpha.to_string(),
            self.eps.to_string(),
            self.passes.to_string(),
            self.peak_entries.to_string(),
            self.sol_size.to_string(),
            self.opt_exact.map_or(String::new(), |o| o.to_string()),
            self.ratio.map_or(String::new(), |r| format!("{r:.4}")),
        ]
    }
}

fn bench_row(line_no: usize, line: BenchLine, suite_dir: &Path, seed: Seed) -> Result<BenchRow> {
    let alpha = line.alpha.unwrap_or(2);
    let eps = line.eps.unwrap_or(0.5);
    let mut rng = seed.derive(0).rng();
    let system = match &line.source {
        BenchSource::GenSc { n, m, t, theta } => {
            gen_sc(*n, *m, *t, alpha, theta.forced(), &mut rng)?.system
        }
        BenchSource::GenMc { m, t1, a, b, theta } => {
            gen_mc(
                *m,
                *t1,
                a.unwrap_or(t1 / 2),
                b.unwrap_or(t1 / 2),
                theta.forced(),
                &mut rng,
            )?
            .system
        }
        BenchSource::Planted { n, m, k } => planted_partition_instance(*n, *m, *k, &mut rng)?,
        BenchSource::File { input } => read_instance(suite_dir.join(input))?,
    };
    let config = SolverConfig::new(alpha, eps, seed.derive(1))?;
    let mut stream = SetStream::from_system(&system, StreamOrder::Adversarial);
    let res = solve(&mut stream, &config)?;
    let opt_exact = if line.exact {
        exact_set_cover(&system, None)?
            .optimal()
            .map(|r| r.opt_size)
    } else {
        None
    };
    Ok(BenchRow {
        instance: line
            .id
            .clone()
            .unwrap_or_else(|| format!("{}-{line_no}", line.source.kind())),
        n: system.universe_size(),
        m: system.num_sets(),
        alpha,
        eps,
        passes: res.passes_used,
        peak_entries: res.peak_entries,
        sol_size: res.chosen.len(),
        opt_exact,
        ratio: opt_exact.map(|o| res.chosen.len() as f64 / o as f64),
    })
}

/// Parses a suite file: one instance per line, `#` starts a comment.
fn parse_suite(text: &str) -> Result<Vec<(usize, BenchLine)>> {
    let mut lines = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let parsed = BenchLine::try_parse_from(line.split_whitespace()).map_err(|e| {
            let msg = e.to_string();
            let first = msg
                .lines()
                .next()
                .unwrap_or("")
                .trim_start_matches("error: ");
            Error::param(format!("suite line {}: {first}", i + 1))
        })?;
        lines.push((i + 1, parsed));
    }
    Ok(lines)
}

/// Rows sorted by `(n, m, alpha)`; ties keep suite order.
pub fn bench_rows(suite: &Path, seed: Seed) -> Result<Vec<BenchRow>> {
    let text = std::fs::read_to_string(suite).map_err(|e| Error::io(suite, e))?;
    let dir = suite.parent().unwrap_or(Path::new("."));
    let lines = parse_suite(&text)?;
    let mut rows: Vec<BenchRow> = lines
        .into_par_iter()
        .map(|(no, line)| bench_row(no, line, dir, seed.derive(no as u64)))
        .collect::<Result<_>>()?;
    rows.sort_by_key(|r| (r.n, r.m, r.alpha));
    Ok(rows)
}

fn bench_cmd(a: BenchArgs) -> Result<String> {
    let seed = resolve_seed(a.seed);
    let rows = bench_rows(&a.suite, seed)?;
    let csv_err = |e: csv::Error| Error::Invariant(format!("csv: {e}"));
    let mut w = csv::Writer::from_path(&a.out).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(&a.out, io),
        other => Error::Invariant(format!("csv: {other:?}")),
    })?;
    w.write_record(BENCH_HEADER).map_err(csv_err)?;
    for r in &rows {
        w.write_record(r.record()).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io(&a.out, e))?;
    Ok(format!(
        "seed={seed}\nrows={}\nwrote={}\n",
        rows.len(),
        a.out.display()
    ))
}
