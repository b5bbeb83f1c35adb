//! `qot`: solve quadratically regularized transport instances, build
//! confidence intervals, run Monte Carlo suites and print diagnostics.
//!
//! Exit codes: 0 success, 1 input error, 2 solver did not converge,
//! 3 a configured assertion failed (the report is still written).

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use sparse_qot::coupling::{primal_from_dual, primal_objective, support_stats};
use sparse_qot::experiments::{
    run_suite, stats::qq_points, ExperimentConfig, ExperimentReport, Population,
};
use sparse_qot::geometry::{
    gradient_lipschitz_diagnostic, lipschitz_beta_diagnostic, min_section_mass,
    symmetric_beta_grid, vc_sup_deviation_with,
};
use sparse_qot::io::{
    coupling_csv_bytes, fmt_f64, measure_csv_bytes, parse_potentials_csv, potentials_csv_bytes,
    read_measure_csv, string_table_csv_bytes, table_csv_bytes, to_json_bytes, write_atomic,
};
use sparse_qot::limit_law::{cost_ci, cost_variance_plugin, LimitLawModel};
use sparse_qot::measures::{sample_empirical, DiscreteMeasure, DomainSpec};
use sparse_qot::par::Exec;
use sparse_qot::solver::{
    dual_objective, solve_alternating, to_convex_form, PotentialPair, QotProblem, SolveOptions,
    SolveReport,
};
use sparse_qot::Error;

#[derive(Parser, Debug)]
#[command(
    name = "qot",
    version,
    about = "Quadratically regularized optimal transport"
)]
struct Cli {
    /// Worker threads (default: available parallelism; 1 runs sequentially).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve one instance and write potentials, coupling and a summary.
    Solve(SolveArgs),
    /// Plug-in confidence interval for the regularized cost of two samples.
    Ci(CiArgs),
    /// Run a Monte Carlo experiment suite from a JSON config.
    CltSim(CltSimArgs),
    /// Section and operator diagnostics for an instance or a grid population.
    Diagnose(DiagnoseArgs),
    /// Draw an i.i.d. sample from a uniform box and write it as a measure CSV.
    Sample(SampleArgs),
}

/// Flags that may also come from a `--config` JSON file. Flags win.
#[derive(Args, Debug, Default)]
struct Common {
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_sweeps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    level: Option<f64>,
    #[arg(long)]
    grid: Option<usize>,
    /// JSON file with defaults for the flags above.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Deserialize, Debug, Default)]
#[serde(deny_unknown_fields)]
struct FlagFile {
    epsilon: Option<f64>,
    tol: Option<f64>,
    max_sweeps: Option<usize>,
    seed: Option<u64>,
    level: Option<f64>,
    grid: Option<usize>,
}

impl Common {
    fn resolve(mut self) -> Result<Self, Error> {
        if let Some(path) = &self.config {
            let file: FlagFile = serde_json::from_str(&fs::read_to_string(path)?)?;
            self.epsilon = self.epsilon.or(file.epsilon);
            self.tol = self.tol.or(file.tol);
            self.max_sweeps = self.max_sweeps.or(file.max_sweeps);
            self.seed = self.seed.or(file.seed);
            self.level = self.level.or(file.level);
            self.grid = self.grid.or(file.grid);
        }
        Ok(self)
    }

    fn epsilon(&self) -> Result<f64, Error> {
        self.epsilon
            .ok_or_else(|| Error::InvalidArgument("--epsilon is required".into()))
    }

    fn options(&self, problem: &QotProblem) -> SolveOptions {
        let mut opts = SolveOptions::for_problem(problem);
        if let Some(t) = self.tol {
            opts = opts.tol(t);
        }
        if let Some(s) = self.max_sweeps {
            opts = opts.max_iter(s);
        }
        opts
    }
}

#[derive(Args, Debug)]
struct SolveArgs {
    /// First marginal, CSV with columns x1..xd,w.
    #[arg(long)]
    p: PathBuf,
    /// Second marginal.
    #[arg(long)]
    q: PathBuf,
    /// Potentials CSV to start from.
    #[arg(long)]
    warm_start: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct CiArgs {
    /// Sample from the first marginal (measure CSV).
    #[arg(long)]
    p: PathBuf,
    /// Sample from the second marginal.
    #[arg(long)]
    q: PathBuf,
    /// Sample size; defaults to the common row count of both files.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct CltSimArgs {
    /// Experiment config JSON.
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_sweeps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    level: Option<f64>,
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long)]
    replications: Option<usize>,
}

#[derive(Args, Debug)]
struct DiagnoseArgs {
    /// First marginal of an explicit instance.
    #[arg(long, requires = "q", required_unless_present = "experiment")]
    p: Option<PathBuf>,
    #[arg(long, requires = "p")]
    q: Option<PathBuf>,
    /// Experiment config whose population is diagnosed at `grid` and
    /// `grid/2`.
    #[arg(long, conflicts_with_all = ["p", "q"])]
    experiment: Option<PathBuf>,
    /// Half-width of the section level grid, in units of epsilon.
    #[arg(long, default_value_t = 0.25)]
    beta: f64,
    /// Sample size of the empirical-process statistic (population mode).
    #[arg(long, default_value_t = 400)]
    n: usize,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct SampleArgs {
    /// Lower corner, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    lower: Vec<f64>,
    /// Upper corner, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    upper: Vec<f64>,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    seed: u64,
    /// Output CSV file.
    #[arg(long)]
    out: PathBuf,
}

enum Failure {
    Input(Error),
    NotConverged(Error),
    Assertions,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::NotConverged { .. } | Error::TooManyFailures { .. } => Failure::NotConverged(e),
            other => Failure::Input(other),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Input(e.into())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let exec = match cli.threads {
        Some(0) => {
            eprintln!("error: --threads must be positive");
            return ExitCode::from(1);
        }
        Some(1) => Exec::Sequential,
        Some(t) => {
            if let Err(e) = rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build_global()
            {
                eprintln!("error: {e}");
                return ExitCode::from(1);
            }
            Exec::Parallel
        }
        None => Exec::Parallel,
    };
    let outcome = match cli.command {
        Command::Solve(a) => cmd_solve(a),
        Command::Ci(a) => cmd_ci(a),
        Command::CltSim(a) => cmd_clt_sim(a, exec),
        Command::Diagnose(a) => cmd_diagnose(a, exec),
        Command::Sample(a) => cmd_sample(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(Failure::NotConverged(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(Failure::Assertions) => {
            eprintln!("error: at least one assertion failed");
            ExitCode::from(3)
        }
    }
}

fn prepare_dir(dir: &Path) -> Result<(), Error> {
    fs::create_dir_all(dir)?;
    Ok(())
}

/// Writes every file or none: all contents are rendered before the first
/// rename.
fn write_all(dir: &Path, files: Vec<(&str, Vec<u8>)>) -> Result<(), Error> {
    prepare_dir(dir)?;
    for (name, bytes) in files {
        write_atomic(&dir.join(name), &bytes)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct SolveSummary {
    format_version: u32,
    n: usize,
    m: usize,
    epsilon: f64,
    cost: f64,
    dual_value: f64,
    gap: f64,
    residual: f64,
    iterations: usize,
    converged: bool,
    nonzero_count: usize,
    fill_ratio: f64,
    max_density: f64,
}

fn solve_instance(
    p: &Path,
    q: &Path,
    warm: Option<&Path>,
    common: &Common,
) -> Result<(QotProblem, PotentialPair, SolveReport), Error> {
    let problem = QotProblem::new(
        read_measure_csv(p)?,
        read_measure_csv(q)?,
        common.epsilon()?,
    )?;
    let mut opts = common.options(&problem);
    if let Some(w) = warm {
        opts = opts.warm_start(parse_potentials_csv(&fs::read_to_string(w)?, &problem)?);
    }
    let (pot, report) = solve_alternating(&problem, &opts)?;
    Ok((problem, pot, report))
}

fn cmd_solve(args: SolveArgs) -> Result<(), Failure> {
    let common = args.common.resolve()?;
    let (problem, pot, report) =
        solve_instance(&args.p, &args.q, args.warm_start.as_deref(), &common)?;
    let coupling = primal_from_dual(&problem, &pot);
    let cost = primal_objective(&problem, &coupling)?;
    let dual_value = dual_objective(&problem, &pot)?;
    let stats = support_stats(&coupling);
    let summary = SolveSummary {
        format_version: 1,
        n: problem.n(),
        m: problem.m(),
        epsilon: problem.epsilon(),
        cost,
        dual_value,
        gap: cost - dual_value,
        residual: report.final_residual,
        iterations: report.iterations,
        converged: report.converged,
        nonzero_count: stats.nonzero_count,
        fill_ratio: stats.fill_ratio,
        max_density: stats.max_density,
    };
    write_all(
        &args.out,
        vec![
            ("potentials.csv", potentials_csv_bytes(&problem, &pot)?),
            ("coupling.csv", coupling_csv_bytes(&problem, &coupling)?),
            ("summary.json", to_json_bytes(&summary)?),
        ],
    )?;
    Ok(())
}

#[derive(Serialize)]
struct Interval {
    lower: f64,
    upper: f64,
    half_width: f64,
}

#[derive(Serialize)]
struct CiReport {
    format_version: u32,
    n: usize,
    epsilon: f64,
    level: f64,
    cost_hat: f64,
    sigma2_hat: f64,
    interval: Interval,
    iterations: usize,
    residual: f64,
}

fn row_count(path: &Path) -> Result<usize, Error> {
    Ok(read_measure_csv(path)?.len())
}

fn cmd_ci(args: CiArgs) -> Result<(), Failure> {
    let common = args.common.resolve()?;
    let level = common.level.unwrap_or(0.95);
    let n = match args.n {
        Some(n) => n,
        None => {
            let (a, b) = (row_count(&args.p)?, row_count(&args.q)?);
            if a != b {
                return Err(Error::InvalidArgument(format!(
                    "samples have {a} and {b} rows; pass --n"
                ))
                .into());
            }
            a
        }
    };
    let (problem, pot, report) = solve_instance(&args.p, &args.q, None, &common)?;
    let cost_hat = dual_objective(&problem, &pot)?;
    let sigma2_hat = cost_variance_plugin(&problem, &pot);
    let ci = cost_ci(cost_hat, sigma2_hat, n, level)?;
    let out = CiReport {
        format_version: 1,
        n,
        epsilon: problem.epsilon(),
        level,
        cost_hat,
        sigma2_hat,
        interval: Interval {
            lower: ci.lower(),
            upper: ci.upper(),
            half_width: ci.half_width,
        },
        iterations: report.iterations,
        residual: report.final_residual,
    };
    write_all(&args.out, vec![("ci.json", to_json_bytes(&out)?)])?;
    Ok(())
}

fn load_experiment(path: &Path) -> Result<ExperimentConfig, Error> {
    ExperimentConfig::from_json(&fs::read_to_string(path)?)
}

fn plot_tables(report: &ExperimentReport) -> Result<Vec<(&'static str, Vec<u8>)>, Error> {
    let reps: Vec<Vec<String>> = report
        .cost_records
        .iter()
        .map(|r| {
            vec![
                r.n.to_string(),
                r.rep.to_string(),
                fmt_f64(r.cost_hat),
                fmt_f64(r.sigma2_hat),
                u8::from(r.covered).to_string(),
                fmt_f64(r.norm_err),
            ]
        })
        .collect();
    let mut qq = Vec::new();
    for s in report.cost_clt.iter().flatten() {
        for (t, v) in qq_points(&s.normalized_errors) {
            qq.push(vec![s.n as f64, t, v]);
        }
    }
    let rate: Vec<Vec<f64>> = report
        .potential_rate
        .iter()
        .flat_map(|r| &r.points)
        .map(|p| vec![p.n as f64, p.median_error, p.mean_error, p.median_vc])
        .collect();
    Ok(vec![
        (
            "replications.csv",
            string_table_csv_bytes(
                &["n", "rep", "cost_hat", "sigma2_hat", "covered", "norm_err"],
                reps,
            )?,
        ),
        (
            "qq.csv",
            table_csv_bytes(&["n", "normal_quantile", "norm_err"], &qq)?,
        ),
        (
            "rate.csv",
            table_csv_bytes(&["n", "median_error", "mean_error", "median_vc"], &rate)?,
        ),
    ])
}

fn cmd_clt_sim(args: CltSimArgs, exec: Exec) -> Result<(), Failure> {
    let mut config = load_experiment(&args.config)?;
    if let Some(e) = args.epsilon {
        config.epsilon = e;
    }
    if let Some(t) = args.tol {
        config.tol = Some(t);
    }
    if let Some(s) = args.max_sweeps {
        config.max_sweeps = Some(s);
    }
    if let Some(s) = args.seed {
        config.master_seed = s;
    }
    if let Some(l) = args.level {
        config.ci_level = l;
    }
    if let Some(g) = args.grid {
        config.grid = g;
    }
    if let Some(r) = args.replications {
        config.replications = r;
    }
    config.validate()?;
    let report = run_suite(&config, exec)?;
    let mut files = vec![("report.json", to_json_bytes(&report)?)];
    files.extend(plot_tables(&report)?);
    write_all(&args.out, files)?;
    if report.all_passed() {
        Ok(())
    } else {
        Err(Failure::Assertions)
    }
}

type Row = (String, String, f64);

fn row(name: &str, param: impl Into<String>, value: f64) -> Row {
    (name.to_string(), param.into(), value)
}

/// Diagnostics of one solved instance, every row tagged with `tag`.
fn instance_rows(
    problem: &QotProblem,
    pot: &PotentialPair,
    beta: f64,
    tag: &str,
) -> Result<Vec<Row>, Error> {
    let with = |p: &str| {
        if tag.is_empty() {
            p.to_string()
        } else if p.is_empty() {
            tag.to_string()
        } else {
            format!("{tag};{p}")
        }
    };
    let convex = to_convex_form(pot, problem.p(), problem.q())?;
    let swapped = problem.swapped();
    let pot_sw = pot.swapped();
    let convex_sw = to_convex_form(&pot_sw, swapped.p(), swapped.q())?;
    let mut rows = vec![
        row("cost", with(""), dual_objective(problem, pot)?),
        row("sigma2", with(""), cost_variance_plugin(problem, pot)),
        row(
            "min_section_mass",
            with("side=q"),
            min_section_mass(problem, &convex)?,
        ),
        row(
            "min_section_mass",
            with("side=p"),
            min_section_mass(&swapped, &convex_sw)?,
        ),
    ];
    let grid = symmetric_beta_grid(beta * problem.epsilon(), 4);
    let one = |_: &[f64]| 1.0;
    rows.push(row(
        "lipschitz_beta",
        with("probe=mass"),
        lipschitz_beta_diagnostic(problem, &convex, &grid, &[&one])?,
    ));
    for k in 0..problem.dim() {
        let coord = move |y: &[f64]| y[k];
        rows.push(row(
            "lipschitz_beta",
            with(&format!("probe=y{}", k + 1)),
            lipschitz_beta_diagnostic(problem, &convex, &grid, &[&coord])?,
        ));
    }
    let gl = gradient_lipschitz_diagnostic(problem, &convex)?;
    rows.push(row(
        "gradient_lipschitz",
        with("map=barycenter"),
        gl.gradient,
    ));
    rows.push(row("gradient_lipschitz", with("map=mass"), gl.mass));
    let model = LimitLawModel::build(problem.clone(), pot.clone())?.summary();
    rows.push(row("operator_condition", with(""), model.condition));
    rows.push(row("inverse_residual", with(""), model.inverse_residual));
    rows.push(row(
        "covariance_form_gap",
        with(""),
        model.covariance_form_gap,
    ));
    Ok(rows)
}

fn cmd_diagnose(args: DiagnoseArgs, exec: Exec) -> Result<(), Failure> {
    let common = args.common.resolve()?;
    if !(args.beta > 0.0) {
        return Err(Error::InvalidArgument("--beta must be positive".into()).into());
    }
    let rows = match &args.experiment {
        Some(path) => {
            let mut config = load_experiment(path)?;
            if let Some(e) = common.epsilon {
                config.epsilon = e;
            }
            if let Some(g) = common.grid {
                config.grid = g;
            }
            if let Some(s) = common.seed {
                config.master_seed = s;
            }
            config.validate()?;
            population_rows(&config, args.beta, args.n, exec)?
        }
        None => {
            let (p, q) = (args.p.as_ref().unwrap(), args.q.as_ref().unwrap());
            let (problem, pot, report) = solve_instance(p, q, None, &common)?;
            let mut rows = vec![
                row("solve", "iterations", report.iterations as f64),
                row("solve", "residual", report.final_residual),
            ];
            rows.extend(instance_rows(&problem, &pot, args.beta, "")?);
            rows
        }
    };
    let table = rows
        .into_iter()
        .map(|(d, p, v)| vec![d, p, fmt_f64(v)])
        .collect();
    let bytes = string_table_csv_bytes(&["diagnostic", "param", "value"], table)?;
    write_all(&args.out, vec![("diagnostics.csv", bytes)])?;
    Ok(())
}

/// Diagnostics at `grid` and `grid/2`, their absolute differences, and the
/// empirical-process statistic for one sample of size `n`.
fn population_rows(
    config: &ExperimentConfig,
    beta: f64,
    n: usize,
    exec: Exec,
) -> Result<Vec<Row>, Error> {
    let fine = Population::build(config)?;
    let mut rows = instance_rows(
        &fine.problem,
        &fine.pot,
        beta,
        &format!("m={}", fine.problem.n()),
    )?;
    if config.grid >= 2 && !matches!(config.population, DomainSpec::Explicit { .. }) {
        let mut coarse_cfg = config.clone();
        coarse_cfg.grid = config.grid / 2;
        let coarse = Population::build(&coarse_cfg)?;
        let tag = format!("m={}", coarse.problem.n());
        let coarse_rows = instance_rows(&coarse.problem, &coarse.pot, beta, &tag)?;
        let pair = format!("m={} vs m={}", coarse.problem.n(), fine.problem.n());
        for (f, c) in rows.clone().iter().zip(&coarse_rows) {
            let param =
                f.1.split_once(';')
                    .map(|(_, rest)| format!("{pair};{rest}"));
            rows.push(row(
                &format!("stability_{}", f.0),
                param.unwrap_or_else(|| pair.clone()),
                (f.2 - c.2).abs(),
            ));
        }
        rows.extend(coarse_rows);
    }
    let q_n = sample_empirical(&config.population, n, config.master_seed)?;
    let one = |_: &[f64]| 1.0;
    let vc = vc_sup_deviation_with(exec, &fine.problem, &fine.convex, &q_n, &one)?;
    rows.push(row("vc_sup_deviation", format!("n={n};probe=mass"), vc));
    Ok(rows)
}

fn cmd_sample(args: SampleArgs) -> Result<(), Failure> {
    let spec = DomainSpec::uniform_box(args.lower, args.upper)?;
    let m: DiscreteMeasure = sample_empirical(&spec, args.n, args.seed)?;
    write_atomic(&args.out, &measure_csv_bytes(&m)?)?;
    Ok(())
}
