//! Monte Carlo harness for the limit theorems.
//!
//! A population is either a uniform box, sampled continuously and
//! represented by a midpoint quadrature grid for every population quantity,
//! or an explicit discrete measure used as is. Every replication draws its
//! two samples from its own random streams keyed by
//! `(master_seed, n, replication)`, so reports do not depend on scheduling.

mod config;
pub mod stats;

pub use config::{AssertionBands, ExperimentConfig, ExperimentKind};
pub use stats::{fit_rate, ks_distance, RateFit};

use std::time::Instant;

use serde::Serialize;

use crate::coupling::primal_from_dual;
use crate::error::{Error, Result};
use crate::geometry::vc_sup_deviation_with;
use crate::limit_law::{
    cost_ci, cost_variance_plugin, coupling_functional_variance, potentials_limit_cov,
    LimitLawModel, ModelSummary,
};
use crate::measures::{
    quadrature_grid, sample_empirical_with, DiscreteMeasure, DomainSpec, Source,
};
use crate::par::{self, Exec};
use crate::rng::{replication_stream, Role};
use crate::solver::{
    dual_objective, solve_alternating, to_convex_form, ConvexPotentials, PotentialPair, QotProblem,
    SolveOptions,
};

/// Largest tolerated share of failed replications.
pub const MAX_FAILURE_SHARE: f64 = 0.01;
/// Tolerance of the population solves.
pub const POPULATION_TOL: f64 = 1e-13;

/// The solved reference problem.
#[derive(Debug, Clone)]
pub struct Population {
    pub problem: QotProblem,
    pub pot: PotentialPair,
    pub convex: ConvexPotentials,
    pub cost: f64,
    pub sigma2: f64,
    /// Samples are continuous draws rather than atoms of `problem`.
    pub continuous: bool,
    pub source: DomainSpec,
}

fn population_measure(spec: &DomainSpec, grid: usize) -> Result<DiscreteMeasure> {
    match spec {
        DomainSpec::UniformBox { .. } => quadrature_grid(spec, grid),
        DomainSpec::Explicit { measure } => Ok(measure.merge_duplicates()),
    }
}

fn solve_reference(
    spec: &DomainSpec,
    grid: usize,
    epsilon: f64,
) -> Result<(QotProblem, PotentialPair)> {
    let m = population_measure(spec, grid)?;
    let problem = QotProblem::new(m.clone(), m, epsilon)?;
    let opts = SolveOptions::for_problem(&problem).tol(POPULATION_TOL * (1.0 + epsilon));
    let (pot, _) = solve_alternating(&problem, &opts)?;
    Ok((problem, pot))
}

impl Population {
    pub fn build(config: &ExperimentConfig) -> Result<Self> {
        let (problem, pot) = solve_reference(&config.population, config.grid, config.epsilon)?;
        let convex = to_convex_form(&pot, problem.p(), problem.q())?;
        let cost = dual_objective(&problem, &pot)?;
        let sigma2 = cost_variance_plugin(&problem, &pot);
        Ok(Population {
            problem,
            pot,
            convex,
            cost,
            sigma2,
            continuous: matches!(config.population, DomainSpec::UniformBox { .. }),
            source: config.population.clone(),
        })
    }

    /// `(f ⊕ g)` error of extended empirical potentials over all population
    /// atom pairs, and the extended values themselves.
    fn extended_error(&self, emp: &QotProblem, pot: &PotentialPair) -> (f64, Vec<f64>, Vec<f64>) {
        let pp = self.problem.p();
        let pq = self.problem.q();
        let d: Vec<f64> = (0..pp.len())
            .map(|i| emp.f_at(&pot.g, pp.point(i)) - self.pot.f[i])
            .collect();
        let e: Vec<f64> = (0..pq.len())
            .map(|j| emp.g_at(&pot.f, pq.point(j)) - self.pot.g[j])
            .collect();
        let max = |v: &[f64]| v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = |v: &[f64]| v.iter().copied().fold(f64::INFINITY, f64::min);
        let sup = (max(&d) + max(&e)).max(-(min(&d) + min(&e)));
        (sup, d, e)
    }
}

/// Builds the empirical measure of the first `n` points of `draw`, merging
/// repeated atoms of discrete populations into exact `count / n` weights.
fn empirical(draw: &DiscreteMeasure, n: usize, merge: bool) -> Result<DiscreteMeasure> {
    let d = draw.dim();
    let pts = draw.points_flat()[..n * d].to_vec();
    let m = DiscreteMeasure::uniform(d, pts)?;
    if !merge {
        return Ok(m);
    }
    let merged = m.merge_duplicates();
    let weights = merged
        .weights()
        .iter()
        .map(|w| (w * n as f64).round() / n as f64)
        .collect();
    DiscreteMeasure::from_flat(d, merged.points_flat().to_vec(), weights)
}

/// One replication: the two samples and the solved empirical problem.
struct Replica {
    problem: QotProblem,
    pot: PotentialPair,
}

fn raw_draw(
    pop: &Population,
    n: usize,
    stream_n: usize,
    rep: usize,
    role: Role,
    seed: u64,
) -> Result<DiscreteMeasure> {
    let mut rng = replication_stream(seed, stream_n, rep, role);
    sample_empirical_with(Source::from(&pop.source), n, &mut rng)
}

fn solve_options(config: &ExperimentConfig, problem: &QotProblem) -> SolveOptions {
    let mut opts = SolveOptions::for_problem(problem);
    if let Some(t) = config.tol {
        opts = opts.tol(t);
    }
    if let Some(k) = config.max_sweeps {
        opts = opts.max_iter(k);
    }
    opts
}

fn replica(config: &ExperimentConfig, p: DiscreteMeasure, q: DiscreteMeasure) -> Result<Replica> {
    let problem = QotProblem::new(p, q, config.epsilon)?;
    let (pot, _) = solve_alternating(&problem, &solve_options(config, &problem))?;
    Ok(Replica { problem, pot })
}

fn draw_replica(
    config: &ExperimentConfig,
    pop: &Population,
    n: usize,
    rep: usize,
) -> Result<Replica> {
    let merge = !pop.continuous;
    let p = empirical(
        &raw_draw(pop, n, n, rep, Role::SourceP, config.master_seed)?,
        n,
        merge,
    )?;
    let q = empirical(
        &raw_draw(pop, n, n, rep, Role::SourceQ, config.master_seed)?,
        n,
        merge,
    )?;
    replica(config, p, q)
}

/// Runs `body` for every replication, separating convergence failures.
fn replicate<T: Send>(
    exec: Exec,
    replications: usize,
    body: impl Fn(usize) -> Result<T> + Sync + Send,
) -> Result<(Vec<T>, usize)> {
    let results = par::map_range(exec, replications, body);
    let mut ok = Vec::with_capacity(replications);
    let mut failed = 0;
    for r in results {
        match r {
            Ok(v) => ok.push(v),
            Err(Error::NotConverged { .. }) => failed += 1,
            Err(e) => return Err(e),
        }
    }
    if failed as f64 > MAX_FAILURE_SHARE * replications as f64 {
        return Err(Error::TooManyFailures {
            failed,
            total: replications,
        });
    }
    Ok((ok, failed))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CostRecord {
    pub n: usize,
    pub rep: usize,
    pub cost_hat: f64,
    pub sigma2_hat: f64,
    pub covered: bool,
    pub norm_err: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CostCltSummary {
    pub n: usize,
    pub replications: usize,
    pub failed: usize,
    pub coverage: f64,
    /// `sqrt(c (1 − c) / M)`.
    pub coverage_se: f64,
    pub mean_abs_error: f64,
    pub median_abs_error: f64,
    pub mean_half_width: f64,
    pub ks_distance: Option<f64>,
    pub normalized_errors: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RatePoint {
    pub n: usize,
    pub failed: usize,
    pub median_error: f64,
    pub mean_error: f64,
    pub median_vc: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RateSummary {
    pub points: Vec<RatePoint>,
    pub potential_fit: Option<RateFit>,
    pub vc_fit: Option<RateFit>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PotentialsCltSummary {
    pub n: usize,
    pub failed: usize,
    pub eval_pair: (usize, usize),
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub mc_variance: f64,
    pub limit_variance: f64,
    pub relative_error: f64,
    pub ks_distance: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CouplingCltSummary {
    pub n: usize,
    pub failed: usize,
    pub population_value: f64,
    pub mean_error: f64,
    pub mc_variance: f64,
    /// `σ²(η) / ε²`.
    pub theory_variance: f64,
    pub variance_ratio: Option<f64>,
    pub ks_distance: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConsistencySummary {
    pub sample_sizes: Vec<usize>,
    pub errors: Vec<f64>,
    pub final_below_first: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct PopulationSummary {
    pub atoms: usize,
    pub cost: f64,
    pub sigma2: f64,
    /// Cost on the grid with half the resolution (box populations).
    pub coarse_cost: Option<f64>,
    /// CI half-width at the largest sample size from the population `σ²`.
    pub half_width_at_largest_n: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct AssertionOutcome {
    pub name: String,
    pub value: f64,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub format_version: u32,
    pub config: ExperimentConfig,
    pub seed: u64,
    pub population: PopulationSummary,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cost_clt: Option<Vec<CostCltSummary>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub potential_rate: Option<RateSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub potentials_clt: Option<PotentialsCltSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coupling_clt: Option<Vec<CouplingCltSummary>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub consistency: Option<ConsistencySummary>,
    pub assertions: Vec<AssertionOutcome>,
    /// Per-replication cost records, written as CSV rather than JSON.
    #[serde(skip)]
    pub cost_records: Vec<CostRecord>,
    /// Wall-clock seconds; kept out of the JSON so reports stay reproducible.
    #[serde(skip)]
    pub runtime_secs: f64,
}

impl ExperimentReport {
    pub fn all_passed(&self) -> bool {
        self.assertions.iter().all(|a| a.passed)
    }
}

/// Absolute slack when comparing a cost to a degenerate interval.
const COVER_SLACK: f64 = 1e-12;

pub fn cost_clt(
    config: &ExperimentConfig,
    pop: &Population,
    exec: Exec,
) -> Result<(Vec<CostCltSummary>, Vec<CostRecord>)> {
    let mut summaries = Vec::new();
    let mut all = Vec::new();
    for &n in &config.sample_sizes {
        let (records, failed) = replicate(exec, config.replications, |rep| {
            let r = draw_replica(config, pop, n, rep)?;
            let cost_hat = dual_objective(&r.problem, &r.pot)?;
            let sigma2_hat = cost_variance_plugin(&r.problem, &r.pot);
            let ci = cost_ci(cost_hat, sigma2_hat, n, config.ci_level)?;
            let err = cost_hat - pop.cost;
            let covered = err.abs() <= ci.half_width + COVER_SLACK * (1.0 + pop.cost.abs());
            let norm_err = if sigma2_hat > 0.0 {
                (n as f64).sqrt() * err / sigma2_hat.sqrt()
            } else {
                0.0
            };
            Ok(CostRecord {
                n,
                rep,
                cost_hat,
                sigma2_hat,
                covered,
                norm_err,
            })
        })?;
        let k = records.len().max(1) as f64;
        let coverage = records.iter().filter(|r| r.covered).count() as f64 / k;
        let abs: Vec<f64> = records
            .iter()
            .map(|r| (r.cost_hat - pop.cost).abs())
            .collect();
        let z: Vec<f64> = records.iter().map(|r| r.norm_err).collect();
        let hw = records
            .iter()
            .map(|r| cost_ci(r.cost_hat, r.sigma2_hat, n, config.ci_level).map(|c| c.half_width))
            .collect::<Result<Vec<_>>>()?;
        summaries.push(CostCltSummary {
            n,
            replications: config.replications,
            failed,
            coverage,
            coverage_se: (coverage * (1.0 - coverage) / k).sqrt(),
            mean_abs_error: stats::mean(&abs),
            median_abs_error: stats::median(&abs),
            mean_half_width: stats::mean(&hw),
            ks_distance: ks_distance(&z).ok(),
            normalized_errors: z,
        });
        all.extend(records);
    }
    Ok((summaries, all))
}

pub fn potential_rate(
    config: &ExperimentConfig,
    pop: &Population,
    exec: Exec,
) -> Result<RateSummary> {
    let mut points = Vec::new();
    let one = |_: &[f64]| 1.0;
    for &n in &config.sample_sizes {
        let (vals, failed) = replicate(exec, config.replications, |rep| {
            let r = draw_replica(config, pop, n, rep)?;
            let (sup, _, _) = pop.extended_error(&r.problem, &r.pot);
            let vc = vc_sup_deviation_with(
                Exec::Sequential,
                &pop.problem,
                &pop.convex,
                r.problem.q(),
                &one,
            )?;
            Ok((sup, vc))
        })?;
        let errs: Vec<f64> = vals.iter().map(|v| v.0).collect();
        let vcs: Vec<f64> = vals.iter().map(|v| v.1).collect();
        points.push(RatePoint {
            n,
            failed,
            median_error: stats::median(&errs),
            mean_error: stats::mean(&errs),
            median_vc: stats::median(&vcs),
        });
    }
    let ns: Vec<usize> = points.iter().map(|p| p.n).collect();
    let e: Vec<f64> = points.iter().map(|p| p.median_error).collect();
    let v: Vec<f64> = points.iter().map(|p| p.median_vc).collect();
    Ok(RateSummary {
        potential_fit: fit_rate(&ns, &e).ok(),
        vc_fit: fit_rate(&ns, &v).ok(),
        points,
    })
}

fn default_pair(pop: &Population) -> (usize, usize) {
    (pop.problem.n() / 2, pop.problem.m() / 2)
}

/// Pointwise CLT of `√n (fₙ ⊕ gₙ − f ⊕ g)` at the evaluation pair, at the
/// largest sample size.
pub fn potentials_clt(
    config: &ExperimentConfig,
    pop: &Population,
    model: &LimitLawModel,
    exec: Exec,
) -> Result<PotentialsCltSummary> {
    let (i, j) = config.eval_pair.unwrap_or_else(|| default_pair(pop));
    let limit_variance = potentials_limit_cov(model, &[(i, j)])?[(0, 0)];
    let n = config.largest_n();
    let x = pop.problem.p().point(i).to_vec();
    let y = pop.problem.q().point(j).to_vec();
    let (vals, failed) = replicate(exec, config.replications, |rep| {
        let r = draw_replica(config, pop, n, rep)?;
        let fx = r.problem.f_at(&r.pot.g, &x);
        let gy = r.problem.g_at(&r.pot.f, &y);
        Ok((n as f64).sqrt() * (fx + gy - pop.pot.f[i] - pop.pot.g[j]))
    })?;
    let mc_variance = stats::sample_variance(&vals);
    let ks = if limit_variance > 0.0 {
        let m = stats::mean(&vals);
        let z: Vec<f64> = vals
            .iter()
            .map(|v| (v - m) / limit_variance.sqrt())
            .collect();
        ks_distance(&z).ok()
    } else {
        None
    };
    Ok(PotentialsCltSummary {
        n,
        failed,
        eval_pair: (i, j),
        x,
        y,
        mc_variance,
        limit_variance,
        relative_error: relative_gap(mc_variance, limit_variance),
        ks_distance: ks,
    })
}

fn relative_gap(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / b.abs()
    }
}

pub fn coupling_clt(
    config: &ExperimentConfig,
    pop: &Population,
    model: &LimitLawModel,
    exec: Exec,
) -> Result<Vec<CouplingCltSummary>> {
    let eta = config
        .eta
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("coupling_clt needs an eta".into()))?;
    let eps = config.epsilon;
    let theory_variance =
        coupling_functional_variance(model, &eta.on_atoms(&pop.problem))? / (eps * eps);
    let integral = |problem: &QotProblem, pot: &PotentialPair| {
        primal_from_dual(problem, pot)
            .integrate(|i, j| eta.eval(problem.p().point(i), problem.q().point(j)))
    };
    let population_value = integral(&pop.problem, &pop.pot);
    let mut out = Vec::new();
    for &n in &config.sample_sizes {
        let (vals, failed) = replicate(exec, config.replications, |rep| {
            let r = draw_replica(config, pop, n, rep)?;
            Ok((n as f64).sqrt() * (integral(&r.problem, &r.pot) - population_value))
        })?;
        let mc_variance = stats::sample_variance(&vals);
        let (ratio, ks) = if theory_variance > 0.0 {
            let z: Vec<f64> = vals.iter().map(|v| v / theory_variance.sqrt()).collect();
            (Some(mc_variance / theory_variance), ks_distance(&z).ok())
        } else {
            (None, None)
        };
        out.push(CouplingCltSummary {
            n,
            failed,
            population_value,
            mean_error: stats::mean(&vals),
            mc_variance,
            theory_variance,
            variance_ratio: ratio,
            ks_distance: ks,
        });
    }
    Ok(out)
}

/// One nested trajectory: the samples at each size are prefixes of a single
/// draw of the largest size.
pub fn consistency(config: &ExperimentConfig, pop: &Population) -> Result<ConsistencySummary> {
    let top = config.largest_n();
    let merge = !pop.continuous;
    let dp = raw_draw(pop, top, 0, 0, Role::SourceP, config.master_seed)?;
    let dq = raw_draw(pop, top, 0, 0, Role::SourceQ, config.master_seed)?;
    let mut errors = Vec::new();
    for &n in &config.sample_sizes {
        let r = replica(config, empirical(&dp, n, merge)?, empirical(&dq, n, merge)?)?;
        errors.push(pop.extended_error(&r.problem, &r.pot).0);
    }
    let first = errors[0];
    let last = *errors.last().unwrap();
    Ok(ConsistencySummary {
        sample_sizes: config.sample_sizes.clone(),
        final_below_first: last < first || (first == 0.0 && last == 0.0),
        errors,
    })
}

fn band(name: String, value: f64, lower: Option<f64>, upper: Option<f64>) -> AssertionOutcome {
    let passed =
        value.is_finite() && lower.is_none_or(|l| value >= l) && upper.is_none_or(|u| value <= u);
    AssertionOutcome {
        name,
        value,
        lower,
        upper,
        passed,
    }
}

fn check_assertions(config: &ExperimentConfig, report: &ExperimentReport) -> Vec<AssertionOutcome> {
    let a = &config.assertions;
    let mut out = Vec::new();
    if let Some(cost) = &report.cost_clt {
        if let Some([lo, hi]) = a.coverage {
            for s in cost {
                out.push(band(
                    format!("coverage[n={}]", s.n),
                    s.coverage,
                    Some(lo),
                    Some(hi),
                ));
            }
        }
        if let (Some(max), Some(last)) = (a.ks_max, cost.last()) {
            let v = last.ks_distance.unwrap_or(f64::NAN);
            out.push(band(format!("ks[n={}]", last.n), v, None, Some(max)));
        }
    }
    if let Some(frac) = a.grid_bias_fraction {
        if let Some(coarse) = report.population.coarse_cost {
            let gap = (coarse - report.population.cost).abs();
            let hw = report.population.half_width_at_largest_n;
            out.push(band("grid_bias".into(), gap, None, Some(frac * hw)));
        }
    }
    if let (Some([lo, hi]), Some(rate)) = (a.rate_slope, &report.potential_rate) {
        let s = rate.potential_fit.map_or(f64::NAN, |f| f.slope);
        out.push(band("potential_rate_slope".into(), s, Some(lo), Some(hi)));
        let s = rate.vc_fit.map_or(f64::NAN, |f| f.slope);
        out.push(band("vc_rate_slope".into(), s, Some(lo), Some(hi)));
    }
    if let (Some(tol), Some(p)) = (a.potentials_rel_tol, &report.potentials_clt) {
        out.push(band(
            "potentials_variance_rel_error".into(),
            p.relative_error,
            None,
            Some(tol),
        ));
    }
    if let (Some([lo, hi]), Some(c)) = (a.variance_ratio, &report.coupling_clt) {
        if let Some(last) = c.last() {
            let v = last.variance_ratio.unwrap_or(f64::NAN);
            out.push(band(
                format!("variance_ratio[n={}]", last.n),
                v,
                Some(lo),
                Some(hi),
            ));
        }
    }
    if a.consistency_decrease {
        if let Some(c) = &report.consistency {
            let v = if c.final_below_first { 1.0 } else { 0.0 };
            out.push(band("consistency_decrease".into(), v, Some(1.0), None));
        }
    }
    out
}

/// Runs every experiment listed in the config.
pub fn run_suite(config: &ExperimentConfig, exec: Exec) -> Result<ExperimentReport> {
    config.validate()?;
    let start = Instant::now();
    let pop = Population::build(config)?;
    let coarse_cost = match (&config.population, config.grid / 2) {
        (DomainSpec::UniformBox { .. }, half) if half >= 1 => {
            let (p, pot) = solve_reference(&config.population, half, config.epsilon)?;
            Some(dual_objective(&p, &pot)?)
        }
        _ => None,
    };
    let z = cost_ci(0.0, pop.sigma2, config.largest_n(), config.ci_level)?.half_width;
    let needs_model = config.experiments.iter().any(|k| {
        matches!(
            k,
            ExperimentKind::PotentialsClt | ExperimentKind::CouplingClt
        )
    });
    let model = if needs_model {
        Some(LimitLawModel::build(pop.problem.clone(), pop.pot.clone())?)
    } else {
        None
    };
    let mut report = ExperimentReport {
        format_version: 1,
        config: config.clone(),
        seed: config.master_seed,
        population: PopulationSummary {
            atoms: pop.problem.n(),
            cost: pop.cost,
            sigma2: pop.sigma2,
            coarse_cost,
            half_width_at_largest_n: z,
        },
        model: model.as_ref().map(LimitLawModel::summary),
        cost_clt: None,
        potential_rate: None,
        potentials_clt: None,
        coupling_clt: None,
        consistency: None,
        assertions: Vec::new(),
        cost_records: Vec::new(),
        runtime_secs: 0.0,
    };
    for kind in &config.experiments {
        match kind {
            ExperimentKind::CostClt => {
                let (s, r) = cost_clt(config, &pop, exec)?;
                report.cost_clt = Some(s);
                report.cost_records = r;
            }
            ExperimentKind::PotentialRate => {
                report.potential_rate = Some(potential_rate(config, &pop, exec)?)
            }
            ExperimentKind::PotentialsClt => {
                report.potentials_clt = Some(potentials_clt(
                    config,
                    &pop,
                    model.as_ref().expect("built"),
                    exec,
                )?)
            }
            ExperimentKind::CouplingClt => {
                report.coupling_clt = Some(coupling_clt(
                    config,
                    &pop,
                    model.as_ref().expect("built"),
                    exec,
                )?)
            }
            ExperimentKind::Consistency => report.consistency = Some(consistency(config, &pop)?),
        }
    }
    report.assertions = check_assertions(config, &report);
    report.runtime_secs = start.elapsed().as_secs_f64();
    Ok(report)
}

fn run_only(config: &ExperimentConfig, kind: ExperimentKind) -> Result<ExperimentReport> {
    let mut c = config.clone();
    c.experiments = vec![kind];
    run_suite(&c, Exec::default())
}

pub fn run_cost_clt(config: &ExperimentConfig) -> Result<ExperimentReport> {
    run_only(config, ExperimentKind::CostClt)
}

pub fn run_potential_rate(config: &ExperimentConfig) -> Result<ExperimentReport> {
    run_only(config, ExperimentKind::PotentialRate)
}

pub fn run_potentials_clt(config: &ExperimentConfig) -> Result<ExperimentReport> {
    run_only(config, ExperimentKind::PotentialsClt)
}

pub fn run_coupling_clt(config: &ExperimentConfig) -> Result<ExperimentReport> {
    run_only(config, ExperimentKind::CouplingClt)
}

pub fn run_consistency(config: &ExperimentConfig) -> Result<ExperimentReport> {
    run_only(config, ExperimentKind::Consistency)
}
