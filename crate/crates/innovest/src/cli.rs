//! Subcommands of the `innovest` binary. Human-readable output goes to the
//! writer passed to [`run`]; failures are returned to `main`, which prints
//! them as JSON on stderr.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use innovest_core::estimator::{self, DEFAULT_BURN_IN};
use innovest_core::golden;
use innovest_core::metrics;
use innovest_core::realization::{self, check_feedback_free, to_innovation_form, Tolerances};
use innovest_core::simulation::{Init, SimConfig, Simulate};
use innovest_core::sysid::benchmark::{
    random_feedback_free_system, summarize, Benchmark, BenchmarkConfig, Column, Summary, SYSTEM_SEED, TABLE_COLUMNS,
    TABLE_DIMS,
};
use innovest_core::sysid::{
    build_parameterization, entry_parameterization, identify, BfgsConfig, Case, Dims, FixedBlocks, IdentifyConfig,
};
use innovest_core::{fixtures, Error, InnovationJointModel, Matrix, TriangularJointModel};

use crate::error::{CliError, Result};
use crate::json::{self, ModelDoc};
use crate::report;
use crate::trajectory;

#[derive(Debug, Parser)]
#[command(name = "innovest", version, about = "Minimum error variance estimation of y from w via innovation forms")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Convert a state_space model to its joint forward innovation form.
    InnovationForm(InnovationFormArgs),
    /// Triangularize a joint model and synthesize the estimator of y from w.
    Synthesize(SynthesizeArgs),
    /// Simulate a model and write a trajectory CSV.
    Simulate(SimulateArgs),
    /// Run an estimator over a trajectory and report MSE and VAF.
    Filter(FilterArgs),
    /// Identify an estimator from a trajectory.
    Identify(IdentifyArgs),
    /// Monte Carlo comparison of the identification cases.
    Benchmark(BenchmarkArgs),
    /// Re-run the worked example or a reduced benchmark.
    Reproduce(ReproduceArgs),
}

#[derive(Debug, Args)]
pub struct InnovationFormArgs {
    /// state_space model JSON.
    pub input: PathBuf,
    /// Where to write the innovation_joint JSON.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthesizeArgs {
    /// innovation_joint, triangular_joint or state_space model JSON.
    pub input: PathBuf,
    /// Where to write the estimator JSON.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// Also write the triangular form here.
    #[arg(long)]
    pub triangular: Option<PathBuf>,
    /// Bound on the normalized lower-left residual.
    #[arg(long, default_value_t = 1e-6)]
    pub tol_fb: f64,
    /// Relative singular value threshold for the observability rank.
    #[arg(long, default_value_t = 1e-6)]
    pub rank_tol: f64,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum InitArg {
    Stationary,
    Zero,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Model JSON (state_space, innovation_joint or triangular_joint).
    /// Defaults to the innovation form of the built-in two-state example.
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = InitArg::Stationary)]
    pub init: InitArg,
    /// Leading samples simulated and discarded.
    #[arg(long, default_value_t = 0)]
    pub burn_in: usize,
    /// Include state and noise columns.
    #[arg(long)]
    pub states: bool,
    /// Output CSV; stdout when omitted.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FilterArgs {
    /// estimator JSON.
    #[arg(long)]
    pub estimator: PathBuf,
    /// Trajectory CSV with y and w columns.
    #[arg(long)]
    pub data: PathBuf,
    /// Where to write the ŷ CSV.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// Samples excluded from MSE and VAF.
    #[arg(long, default_value_t = DEFAULT_BURN_IN)]
    pub burn_in: usize,
}

#[derive(Debug, Args)]
pub struct IdentifyArgs {
    /// pred_full, gen_full, pred_partial, gen_partial or generator_entry.
    #[arg(long)]
    pub case: String,
    /// Training trajectory CSV.
    #[arg(long)]
    pub data: PathBuf,
    /// Known triangular_joint model: supplies A22, K22, C22, Q22 for the
    /// partial cases and the whole model for generator_entry.
    #[arg(long)]
    pub fixed: Option<PathBuf>,
    /// Model order when --fixed is not given.
    #[arg(long)]
    pub n_states: Option<usize>,
    /// Order of the input subsystem when --fixed is not given (gen_full).
    #[arg(long)]
    pub p2: Option<usize>,
    /// Free entry of A for generator_entry, 1-based `ROW,COL`.
    #[arg(long, value_delimiter = ',')]
    pub entry: Option<Vec<usize>>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 5)]
    pub restarts: usize,
    #[arg(long, default_value_t = 2000)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 0.1)]
    pub init_scale: f64,
    /// FitResult JSON; stdout when omitted.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args, Clone)]
pub struct BenchmarkArgs {
    /// Repetitions per sample size.
    #[arg(long = "M", alias = "repetitions", default_value_t = 20)]
    pub m: usize,
    /// Training sample sizes.
    #[arg(long = "N", alias = "n-samples", value_delimiter = ',', default_values_t = [150, 1000])]
    pub n: Vec<usize>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Seed of the random benchmark system.
    #[arg(long, default_value_t = SYSTEM_SEED)]
    pub system_seed: u64,
    /// Identified cases.
    #[arg(long, value_delimiter = ',', default_values_t = Case::TABLE.map(|c| c.name().to_string()))]
    pub cases: Vec<String>,
    #[arg(long, default_value_t = 5)]
    pub restarts: usize,
    #[arg(long, default_value_t = 2000)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 5000)]
    pub validation_len: usize,
    /// Writes table.csv, curve.csv, runs.csv and system.json here.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReproduceArgs {
    #[command(subcommand)]
    pub example: Example,
}

#[derive(Debug, Subcommand)]
pub enum Example {
    /// State space → innovation form → triangular form → estimator on the
    /// two-state example, diffed against the two-decimal reference values.
    Sec5 {
        /// Writes the intermediate model JSONs here.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// The identification comparison at reduced scale.
    Sysid {
        #[arg(long = "M", alias = "repetitions", default_value_t = 5)]
        m: usize,
        #[arg(long = "N", alias = "n-samples", value_delimiter = ',', default_values_t = [150, 1000])]
        n: Vec<usize>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
}

pub fn run(cli: Cli, out: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::InnovationForm(a) => innovation_form(&a, out),
        Command::Synthesize(a) => synthesize(&a, out),
        Command::Simulate(a) => simulate(&a, out),
        Command::Filter(a) => filter(&a, out),
        Command::Identify(a) => identify_cmd(&a, out),
        Command::Benchmark(a) => benchmark(&a, out),
        Command::Reproduce(ReproduceArgs { example: Example::Sec5 { out_dir } }) => sec5(out_dir.as_deref(), out),
        Command::Reproduce(ReproduceArgs { example: Example::Sysid { m, n, seed, out_dir } }) => {
            let args = BenchmarkArgs {
                m,
                n,
                seed,
                system_seed: SYSTEM_SEED,
                cases: Case::TABLE.map(|c| c.name().to_string()).to_vec(),
                restarts: 5,
                max_iter: 2000,
                validation_len: 5000,
                out_dir,
            };
            let summaries = benchmark_summaries(&args, out)?;
            print_orderings(&summaries, &args.n, out)
        }
    }
}

fn w(out: &mut dyn Write, s: std::fmt::Arguments<'_>) -> Result<()> {
    out.write_fmt(s).map_err(|source| CliError::Io { path: "<stdout>".into(), source })
}

macro_rules! say {
    ($out:expr, $($arg:tt)*) => { w($out, format_args!("{}\n", format_args!($($arg)*))) };
}

fn print_matrix(out: &mut dyn Write, name: &str, m: &Matrix) -> Result<()> {
    say!(out, "{name} =")?;
    for i in 0..m.nrows() {
        let row: Vec<String> = m.row(i).iter().map(|v| format!("{v:>10.4}")).collect();
        say!(out, "  {}", row.join(" "))?;
    }
    Ok(())
}

fn parse_failure(msg: String) -> CliError {
    CliError::Core(Error::Dimension(msg))
}

fn wrong_kind(doc: &ModelDoc, wanted: &str) -> CliError {
    CliError::Parse(format!("expected a {wanted} model, got {}", doc.kind()))
}

fn innovation_form(a: &InnovationFormArgs, out: &mut dyn Write) -> Result<()> {
    let doc = json::read(&a.input)?;
    let ModelDoc::StateSpace(m) = &doc else { return Err(wrong_kind(&doc, "state_space")) };
    let sol = to_innovation_form(m)?;
    print_matrix(out, "P", &sol.state_cov)?;
    print_matrix(out, "Cbar", &sol.cbar)?;
    print_matrix(out, "Lambda0", &sol.lambda0)?;
    print_matrix(out, "Pi", &sol.riccati.pi)?;
    print_matrix(out, "Delta", &sol.riccati.delta)?;
    print_matrix(out, "K", &sol.riccati.gain)?;
    if let Some(path) = &a.output {
        json::write(path, &ModelDoc::InnovationJoint(sol.model))?;
    }
    Ok(())
}

fn joint_of(doc: ModelDoc) -> Result<InnovationJointModel> {
    match doc {
        ModelDoc::InnovationJoint(m) => Ok(m),
        ModelDoc::StateSpace(m) => Ok(to_innovation_form(&m)?.model),
        ModelDoc::TriangularJoint(t) => Ok(t.assemble()?),
        other => Err(wrong_kind(&other, "joint")),
    }
}

fn synthesize(a: &SynthesizeArgs, out: &mut dyn Write) -> Result<()> {
    let tol = Tolerances { rank_tol: a.rank_tol, tol_fb: a.tol_fb };
    let doc = json::read(&a.input)?;
    let tri = match doc {
        ModelDoc::TriangularJoint(t) => t,
        doc => {
            let joint = joint_of(doc)?;
            joint.validate().into_result()?;
            let fb = check_feedback_free(&joint, tol)?;
            say!(out, "partition p1 = {}, p2 = {}", fb.p1, fb.p2)?;
            say!(out, "feedback residual = {:.3e} (tol {:.1e})", fb.residual, tol.tol_fb)?;
            realization::triangularize(&joint, tol)?
        }
    };
    let est = estimator::synthesize(&tri)?;
    print_matrix(out, "Atil", &est.atil)?;
    print_matrix(out, "Ktil", &est.ktil)?;
    print_matrix(out, "Ctil", &est.ctil)?;
    print_matrix(out, "D0", &est.d0)?;
    if let Some(path) = &a.triangular {
        json::write(path, &ModelDoc::TriangularJoint(tri))?;
    }
    if let Some(path) = &a.output {
        json::write(path, &ModelDoc::Estimator(est))?;
    }
    Ok(())
}

fn simulate(a: &SimulateArgs, out: &mut dyn Write) -> Result<()> {
    let cfg = SimConfig {
        n_samples: a.n,
        seed: a.seed,
        init: match a.init {
            InitArg::Stationary => Init::Stationary,
            InitArg::Zero => Init::Zero,
        },
        burn_in: a.burn_in,
    };
    let mut traj = match &a.model {
        None => fixtures::exact_joint().simulate(&cfg)?,
        Some(path) => match json::read(path)? {
            ModelDoc::StateSpace(m) => m.simulate(&cfg)?,
            ModelDoc::InnovationJoint(m) => m.simulate(&cfg)?,
            ModelDoc::TriangularJoint(t) => t.assemble()?.simulate(&cfg)?,
            other => return Err(wrong_kind(&other, "simulatable")),
        },
    };
    if !a.states {
        traj.x = None;
        traj.e = None;
    }
    match &a.output {
        Some(path) => trajectory::write(path, &traj),
        None => trajectory::write_to(out, &traj),
    }
}

fn filter(a: &FilterArgs, out: &mut dyn Write) -> Result<()> {
    let doc = json::read(&a.estimator)?;
    let ModelDoc::Estimator(est) = &doc else { return Err(wrong_kind(&doc, "estimator")) };
    est.validate().into_result()?;
    let data = trajectory::read(&a.data)?;
    let yhat = estimator::filter(est, &data.w, None)?;
    if data.y.dim() != yhat.dim() {
        return Err(parse_failure(format!("data has p = {}, estimator has p = {}", data.y.dim(), yhat.dim())));
    }
    if a.burn_in >= data.len() {
        return Err(CliError::Core(Error::Empty { what: "trajectory after burn-in" }));
    }
    let y = data.y.skip(a.burn_in);
    let yh = yhat.skip(a.burn_in);
    say!(out, "samples = {} (burn-in {})", y.len(), a.burn_in)?;
    say!(out, "MSE = {:.6}", metrics::mse(&y, &yh)?)?;
    for (i, v) in metrics::vaf_components(&y, &yh)?.iter().enumerate() {
        say!(out, "VAF_{} = {:.2}%", i + 1, v)?;
    }
    if let Some(path) = &a.output {
        let mut wr = csv::Writer::from_writer(Vec::new());
        let mut head = vec![String::from("t")];
        head.extend((1..=yhat.dim()).map(|i| format!("yhat{i}")));
        wr.write_record(&head)?;
        for (t, row) in yhat.rows().enumerate() {
            let mut rec = vec![t.to_string()];
            rec.extend(row.iter().map(|&v| trajectory::format_number(v)));
            wr.write_record(&rec)?;
        }
        let bytes = wr.into_inner().map_err(|e| CliError::Parse(e.to_string()))?;
        std::fs::write(path, bytes).map_err(crate::error::io_err(path))?;
    }
    Ok(())
}

fn read_triangular(path: &Path) -> Result<TriangularJointModel> {
    match json::read(path)? {
        ModelDoc::TriangularJoint(t) => Ok(t),
        other => Err(wrong_kind(&other, "triangular_joint")),
    }
}

fn identify_cmd(a: &IdentifyArgs, out: &mut dyn Write) -> Result<()> {
    let data = trajectory::read(&a.data)?;
    let (p, q) = (data.y.dim(), data.w.dim());
    let fixed = a.fixed.as_deref().map(read_triangular).transpose()?;
    if let Some(t) = &fixed {
        if (t.p, t.q) != (p, q) {
            return Err(parse_failure(format!("fixed model has p={}, q={}; data has p={p}, q={q}", t.p, t.q)));
        }
    }
    let par = if a.case == "generator_entry" {
        let base = fixed.ok_or(CliError::Core(Error::MissingFixedBlocks))?;
        let Some([row, col]) = a.entry.as_deref().and_then(|e| <[usize; 2]>::try_from(e).ok()) else {
            return Err(CliError::Parse("generator_entry needs --entry ROW,COL".into()));
        };
        if row == 0 || col == 0 {
            return Err(CliError::Parse("--entry is 1-based".into()));
        }
        entry_parameterization(base, row - 1, col - 1)?
    } else {
        let case = Case::from_name(&a.case).ok_or_else(|| CliError::Parse(format!("unknown case {:?}", a.case)))?;
        let dims = match &fixed {
            Some(t) => Dims { n: t.n(), p1: t.p1, p2: t.p2, p, q },
            None => {
                let n = a.n_states.ok_or_else(|| CliError::Parse("--n-states or --fixed is required".into()))?;
                let p2 = match (case, a.p2) {
                    (_, Some(p2)) => p2,
                    (Case::GenFull, None) => return Err(CliError::Parse("gen_full needs --p2 or --fixed".into())),
                    _ => 0,
                };
                Dims { n, p1: n.saturating_sub(p2), p2, p, q }
            }
        };
        build_parameterization(case, dims, fixed.as_ref().map(FixedBlocks::of))?
    };
    let cfg = IdentifyConfig {
        restarts: a.restarts,
        init_scale: a.init_scale,
        initial: None,
        seed: a.seed,
        bfgs: BfgsConfig { max_iter: a.max_iter, ..BfgsConfig::default() },
    };
    let fit = identify(&par, &data, &cfg)?;
    let doc = report::fit_json(&fit);
    match &a.output {
        Some(path) => {
            report::write_text(path, &doc)?;
            say!(out, "case = {}", fit.case.name())?;
            say!(out, "parameters = {}", par.theta_dim)?;
            say!(out, "training MSE = {:.6}", fit.training_mse)?;
            say!(out, "converged = {}", fit.converged)?;
            if fit.overparameterized {
                say!(out, "warning: {} samples for {} parameters", data.len(), par.theta_dim)?;
            }
            Ok(())
        }
        None => w(out, format_args!("{doc}")),
    }
}

fn benchmark_config(a: &BenchmarkArgs) -> Result<BenchmarkConfig> {
    let cases = a
        .cases
        .iter()
        .map(|s| Case::from_name(s).ok_or_else(|| CliError::Parse(format!("unknown case {s:?}"))))
        .collect::<Result<Vec<_>>>()?;
    if a.n.is_empty() || a.m == 0 {
        return Err(CliError::Parse("--N and --M must be non-empty and positive".into()));
    }
    Ok(BenchmarkConfig {
        cases,
        n_samples: a.n.clone(),
        repetitions: a.m,
        seed: a.seed,
        validation_len: a.validation_len,
        validation_burn_in: DEFAULT_BURN_IN,
        identify: IdentifyConfig {
            restarts: a.restarts,
            bfgs: BfgsConfig { max_iter: a.max_iter, ..BfgsConfig::default() },
            ..IdentifyConfig::default()
        },
    })
}

fn print_table(out: &mut dyn Write, summaries: &[Summary], n_samples: &[usize], p: usize) -> Result<()> {
    let names: Vec<String> = TABLE_COLUMNS.iter().map(|c| format!("{:>13}", c.name())).collect();
    for &n in n_samples {
        say!(out, "N = {n}")?;
        say!(out, "{:<18}{}", "", names.join(""))?;
        for (name, values) in innovest_core::sysid::benchmark::table_rows(summaries, n, p) {
            let cells: Vec<String> = values
                .iter()
                .map(|v| match v {
                    Some(x) if name == "Total Parameters" => format!("{x:>13.0}"),
                    Some(x) => format!("{x:>13.4}"),
                    None => format!("{:>13}", "-"),
                })
                .collect();
            say!(out, "{name:<18}{}", cells.join(""))?;
        }
        let failed: usize = summaries.iter().filter(|s| s.n_samples == n).map(|s| s.failures).sum();
        if failed > 0 {
            say!(out, "failed runs: {failed}")?;
        }
    }
    Ok(())
}

fn benchmark_summaries(a: &BenchmarkArgs, out: &mut dyn Write) -> Result<Vec<Summary>> {
    let config = benchmark_config(a)?;
    let system = random_feedback_free_system(TABLE_DIMS, a.system_seed)?;
    let bench = Benchmark::new(system, config)?;
    let cells = bench.run();
    let p = bench.dims().p;
    let summaries = summarize(&cells, p);
    print_table(out, &summaries, &a.n, p)?;
    if let Some(dir) = &a.out_dir {
        std::fs::create_dir_all(dir).map_err(crate::error::io_err(dir))?;
        report::write_text(&dir.join("table.csv"), &report::table_csv(&summaries, &a.n, p)?)?;
        report::write_text(&dir.join("curve.csv"), &report::curve_csv(&summaries)?)?;
        report::write_text(&dir.join("runs.csv"), &report::runs_csv(&cells, p)?)?;
        json::write(&dir.join("system.json"), &ModelDoc::TriangularJoint(bench.system.clone()))?;
    }
    Ok(summaries)
}

fn benchmark(a: &BenchmarkArgs, out: &mut dyn Write) -> Result<()> {
    benchmark_summaries(a, out).map(|_| ())
}

fn validation_mse(summaries: &[Summary], column: Column, n: usize) -> Option<f64> {
    summaries.iter().find(|s| s.column == column && s.n_samples == n).and_then(|s| s.validation_mse)
}

fn print_orderings(summaries: &[Summary], n_samples: &[usize], out: &mut dyn Write) -> Result<()> {
    let verdict = |ok: Option<bool>| match ok {
        Some(true) => "holds",
        Some(false) => "violated",
        None => "n/a",
    };
    for &n in n_samples {
        let base = validation_mse(summaries, Column::Optimal, n);
        let ok = Case::TABLE.iter().try_fold(true, |acc, &c| {
            Some(acc && validation_mse(summaries, Column::Identified(c), n)? >= base?)
        });
        say!(out, "N = {n}: every case at or above the optimal estimator: {}", verdict(ok))?;
        let partial = validation_mse(summaries, Column::Identified(Case::GenPartial), n)
            .zip(validation_mse(summaries, Column::Identified(Case::PredPartial), n))
            .map(|(g, p)| g <= p);
        say!(out, "N = {n}: gen_partial at or below pred_partial: {}", verdict(partial))?;
    }
    if let (Some(&lo), Some(&hi)) = (n_samples.iter().min(), n_samples.iter().max()) {
        if lo != hi {
            let ok = TABLE_COLUMNS.iter().try_fold(true, |acc, &c| {
                Some(acc && validation_mse(summaries, c, hi)? <= validation_mse(summaries, c, lo)?)
            });
            say!(out, "validation MSE at N = {hi} at or below N = {lo} for all cases: {}", verdict(ok))?;
        }
    }
    Ok(())
}

fn sec5(out_dir: Option<&Path>, out: &mut dyn Write) -> Result<()> {
    let r = golden::sec5()?;
    say!(out, "{:<16}{:>12}{:>12}{:>10}  status", "quantity", "computed", "reference", "diff")?;
    for c in &r.checks {
        let status = if c.pass() { "ok" } else { "MISMATCH" };
        say!(out, "{:<16}{:>12.4}{:>12.4}{:>10.4}  {status}", c.name, c.got, c.want, c.diff())?;
    }
    say!(out, "partition p1 = {}, p2 = {}; feedback residual = {:.3e}", r.p1, r.p2, r.feedback_residual)?;
    let failed = r.checks.iter().filter(|c| !c.pass()).count();
    say!(out, "{} of {} values within {}; max diff {:.4}", r.checks.len() - failed, r.checks.len(), fixtures::GOLDEN_TOL, r.max_diff())?;
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir).map_err(crate::error::io_err(dir))?;
        let sol = to_innovation_form(&fixtures::state_space())?;
        json::write(&dir.join("state_space.json"), &ModelDoc::StateSpace(fixtures::state_space()))?;
        json::write(&dir.join("innovation_joint.json"), &ModelDoc::InnovationJoint(sol.model))?;
        json::write(&dir.join("triangular_joint.json"), &ModelDoc::TriangularJoint(r.triangular.clone()))?;
        json::write(&dir.join("estimator.json"), &ModelDoc::Estimator(r.estimator.clone()))?;
    }
    if failed > 0 {
        return Err(CliError::GoldenMismatch { failed, max_diff: r.max_diff() });
    }
    Ok(())
}
