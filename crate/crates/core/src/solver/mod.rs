//! Dual solver for quadratically regularized optimal transport between two
//! finitely supported measures with cost `c(x, y) = ½‖x − y‖²`.
//!
//! The dual objective is
//!
//! ```text
//! D(f, g) = Σᵢ pᵢ fᵢ + Σⱼ qⱼ gⱼ − (1/2ε) Σᵢⱼ pᵢ qⱼ (ξᵢⱼ)₊²,   ξᵢⱼ = fᵢ + gⱼ − cᵢⱼ,
//! ```
//!
//! concave in `(f, g)` and invariant under the gauge shift `(f + a, g − a)`.
//! Its maximizers satisfy the first-order conditions
//! `Σⱼ qⱼ (ξᵢⱼ)₊ = ε` for every row and `Σᵢ pᵢ (ξᵢⱼ)₊ = ε` for every column.

mod oracle;
mod row;

pub use oracle::{active_set_oracle, ORACLE_MAX_CELLS};
pub use row::{coordinate_update_row, RowSolver};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::DiscreteMeasure;

/// `½‖x − y‖²`.
#[inline]
pub fn half_sq_dist(x: &[f64], y: &[f64]) -> f64 {
    let mut s = 0.0;
    for (a, b) in x.iter().zip(y) {
        let d = a - b;
        s += d * d;
    }
    0.5 * s
}

/// Checked transport cost between two points.
pub fn eval_cost(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    Ok(half_sq_dist(x, y))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CostKind {
    #[default]
    HalfSquaredEuclidean,
}

/// A pair of marginals with regularization strength `epsilon`.
///
/// Zero-weight atoms are removed at construction; `p_index`/`q_index` map the
/// kept atoms back to the caller's indices.
#[derive(Debug, Clone)]
pub struct QotProblem {
    p: DiscreteMeasure,
    q: DiscreteMeasure,
    epsilon: f64,
    cost: CostKind,
    p_index: Vec<usize>,
    q_index: Vec<usize>,
}

impl QotProblem {
    pub fn new(p: DiscreteMeasure, q: DiscreteMeasure, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0) || !epsilon.is_finite() {
            return Err(Error::NonpositiveEpsilon(epsilon));
        }
        if p.dim() != q.dim() {
            return Err(Error::DimensionMismatch {
                expected: p.dim(),
                got: q.dim(),
            });
        }
        let (p, p_index) = p.drop_null_atoms();
        let (q, q_index) = q.drop_null_atoms();
        Ok(QotProblem {
            p,
            q,
            epsilon,
            cost: CostKind::HalfSquaredEuclidean,
            p_index,
            q_index,
        })
    }

    pub fn p(&self) -> &DiscreteMeasure {
        &self.p
    }

    pub fn q(&self) -> &DiscreteMeasure {
        &self.q
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn cost_kind(&self) -> CostKind {
        self.cost
    }

    pub fn n(&self) -> usize {
        self.p.len()
    }

    pub fn m(&self) -> usize {
        self.q.len()
    }

    pub fn dim(&self) -> usize {
        self.p.dim()
    }

    /// Original indices of the kept P atoms.
    pub fn p_index(&self) -> &[usize] {
        &self.p_index
    }

    pub fn q_index(&self) -> &[usize] {
        &self.q_index
    }

    #[inline]
    pub fn cost(&self, i: usize, j: usize) -> f64 {
        half_sq_dist(self.p.point(i), self.q.point(j))
    }

    /// Same marginals with P and Q exchanged.
    pub fn swapped(&self) -> QotProblem {
        QotProblem {
            p: self.q.clone(),
            q: self.p.clone(),
            epsilon: self.epsilon,
            cost: self.cost,
            p_index: self.q_index.clone(),
            q_index: self.p_index.clone(),
        }
    }

    /// Same regularization on new marginals.
    pub fn with_measures(&self, p: DiscreteMeasure, q: DiscreteMeasure) -> Result<QotProblem> {
        QotProblem::new(p, q, self.epsilon)
    }

    /// `ξᵢⱼ = fᵢ + gⱼ − cᵢⱼ`, row-major `n × m`.
    pub fn xi_matrix(&self, pot: &PotentialPair) -> Vec<f64> {
        let m = self.m();
        let mut out = vec![0.0; self.n() * m];
        for (i, row) in out.chunks_exact_mut(m).enumerate() {
            let x = self.p.point(i);
            let fi = pot.f[i];
            for (j, v) in row.iter_mut().enumerate() {
                *v = fi + pot.g[j] - half_sq_dist(x, self.q.point(j));
            }
        }
        out
    }

    /// Potential `f` at an arbitrary point: the exact solution of the row
    /// first-order condition against `Q` and the current `g`.
    pub fn f_at(&self, g: &[f64], x: &[f64]) -> f64 {
        let thresholds: Vec<f64> = (0..self.m())
            .map(|j| half_sq_dist(x, self.q.point(j)) - g[j])
            .collect();
        RowSolver::new().solve(&thresholds, self.q.weights(), self.epsilon)
    }

    /// Potential `g` at an arbitrary point, solved against `P` and `f`.
    pub fn g_at(&self, f: &[f64], y: &[f64]) -> f64 {
        let thresholds: Vec<f64> = (0..self.n())
            .map(|i| half_sq_dist(self.p.point(i), y) - f[i])
            .collect();
        RowSolver::new().solve(&thresholds, self.p.weights(), self.epsilon)
    }
}

/// Representative chosen inside the class `(f + a, g − a)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gauge {
    /// `Σ pᵢ fᵢ = Σ qⱼ gⱼ`.
    MeanBalanced,
    /// No normalization applied.
    Raw,
}

/// Dual potentials on the two supports.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialPair {
    pub f: Vec<f64>,
    pub g: Vec<f64>,
    pub gauge: Gauge,
}

/// Tolerance of the mean-balanced invariant.
pub const GAUGE_TOL: f64 = 1e-10;

impl PotentialPair {
    pub fn new(f: Vec<f64>, g: Vec<f64>) -> Self {
        PotentialPair {
            f,
            g,
            gauge: Gauge::Raw,
        }
    }

    pub fn zeros(problem: &QotProblem) -> Self {
        PotentialPair {
            f: vec![0.0; problem.n()],
            g: vec![0.0; problem.m()],
            gauge: Gauge::MeanBalanced,
        }
    }

    /// `(f + a, g − a)`.
    pub fn shifted(&self, a: f64) -> Self {
        PotentialPair {
            f: self.f.iter().map(|v| v + a).collect(),
            g: self.g.iter().map(|v| v - a).collect(),
            gauge: Gauge::Raw,
        }
    }

    /// Same class with the roles of the marginals exchanged.
    pub fn swapped(&self) -> Self {
        PotentialPair {
            f: self.g.clone(),
            g: self.f.clone(),
            gauge: self.gauge,
        }
    }

    fn check_shape(&self, problem: &QotProblem) -> Result<()> {
        if self.f.len() != problem.n() {
            return Err(Error::DimensionMismatch {
                expected: problem.n(),
                got: self.f.len(),
            });
        }
        if self.g.len() != problem.m() {
            return Err(Error::DimensionMismatch {
                expected: problem.m(),
                got: self.g.len(),
            });
        }
        Ok(())
    }
}

fn weighted_sum(v: &[f64], w: &[f64]) -> f64 {
    v.iter().zip(w).map(|(a, b)| a * b).sum()
}

/// Moves `pot` to the mean-balanced representative: `(f + a, g − a)` with
/// `a = (Σ qⱼ gⱼ − Σ pᵢ fᵢ) / 2`.
pub fn gauge_fix(pot: &PotentialPair, p: &DiscreteMeasure, q: &DiscreteMeasure) -> PotentialPair {
    let a = 0.5 * (weighted_sum(&pot.g, q.weights()) - weighted_sum(&pot.f, p.weights()));
    let mut out = pot.shifted(a);
    out.gauge = Gauge::MeanBalanced;
    out
}

/// `ξᵢⱼ = fᵢ + gⱼ − c(xᵢ, yⱼ)`.
pub fn xi(problem: &QotProblem, pot: &PotentialPair, i: usize, j: usize) -> Result<f64> {
    if i >= pot.f.len() || i >= problem.n() {
        return Err(Error::IndexOutOfRange {
            index: i,
            len: problem.n().min(pot.f.len()),
        });
    }
    if j >= pot.g.len() || j >= problem.m() {
        return Err(Error::IndexOutOfRange {
            index: j,
            len: problem.m().min(pot.g.len()),
        });
    }
    Ok(pot.f[i] + pot.g[j] - problem.cost(i, j))
}

/// Residuals and dual value from a single pass over the grid.
fn residuals_and_dual(problem: &QotProblem, pot: &PotentialPair) -> (Vec<f64>, Vec<f64>, f64) {
    let (n, m) = (problem.n(), problem.m());
    let eps = problem.epsilon;
    let p = problem.p.weights();
    let q = problem.q.weights();
    let mut col = vec![0.0; m];
    let mut r_f = vec![0.0; n];
    let mut penalty = 0.0;
    for i in 0..n {
        let x = problem.p.point(i);
        let fi = pot.f[i];
        let mut row = 0.0;
        let mut row_sq = 0.0;
        for j in 0..m {
            let v = fi + pot.g[j] - half_sq_dist(x, problem.q.point(j));
            if v > 0.0 {
                row += q[j] * v;
                row_sq += q[j] * v * v;
                col[j] += p[i] * v;
            }
        }
        r_f[i] = eps - row;
        penalty += p[i] * row_sq;
    }
    let r_g = col.iter().map(|c| eps - c).collect();
    let dual = weighted_sum(&pot.f, p) + weighted_sum(&pot.g, q) - penalty / (2.0 * eps);
    (r_f, r_g, dual)
}

/// `D(f, g)`; see the module docs.
pub fn dual_objective(problem: &QotProblem, pot: &PotentialPair) -> Result<f64> {
    pot.check_shape(problem)?;
    Ok(residuals_and_dual(problem, pot).2)
}

/// First-order residuals
/// `r_f(i) = ε − Σⱼ qⱼ (ξᵢⱼ)₊` and `r_g(j) = ε − Σᵢ pᵢ (ξᵢⱼ)₊`.
///
/// Sign convention: `∂D/∂fᵢ = (pᵢ/ε)·r_f(i)` and `∂D/∂gⱼ = (qⱼ/ε)·r_g(j)`, so a
/// positive residual means the dual increases when the potential increases.
/// `r/ε` is also the defect of the induced coupling's marginal,
/// `pᵢ − (row mass)ᵢ = pᵢ·r_f(i)/ε`.
pub fn marginal_residuals(
    problem: &QotProblem,
    pot: &PotentialPair,
) -> Result<(Vec<f64>, Vec<f64>)> {
    pot.check_shape(problem)?;
    let (r_f, r_g, _) = residuals_and_dual(problem, pot);
    Ok((r_f, r_g))
}

fn sup_norm(a: &[f64], b: &[f64]) -> f64 {
    a.iter().chain(b).fold(0.0f64, |acc, v| acc.max(v.abs()))
}

/// Per-run diagnostics of an iterative solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    /// Completed sweeps (coordinate ascent) or gradient steps.
    pub iterations: usize,
    /// Sup-norm of the first-order residuals at the returned iterate.
    pub final_residual: f64,
    /// Dual value at the start and after every iteration.
    pub dual_values: Vec<f64>,
    pub converged: bool,
}

/// Stopping rule and optional warm start.
#[derive(Debug, Clone)]
pub struct SolveOptions {
    /// Sup-norm residual target.
    pub tol: f64,
    /// Sweep (or step) budget.
    pub max_iter: usize,
    /// Starting potentials; zeros when absent.
    pub init: Option<PotentialPair>,
}

/// Default residual tolerance relative to `ε`.
pub const DEFAULT_REL_TOL: f64 = 1e-9;

impl SolveOptions {
    pub fn for_problem(problem: &QotProblem) -> Self {
        SolveOptions {
            tol: DEFAULT_REL_TOL * problem.epsilon(),
            max_iter: 100_000,
            init: None,
        }
    }

    pub fn tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }

    pub fn warm_start(mut self, init: PotentialPair) -> Self {
        self.init = Some(init);
        self
    }

    fn start(&self, problem: &QotProblem) -> Result<PotentialPair> {
        if !(self.tol > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "tolerance must be positive, got {}",
                self.tol
            )));
        }
        match &self.init {
            Some(p) => {
                p.check_shape(problem)?;
                Ok(p.clone())
            }
            None => Ok(PotentialPair::zeros(problem)),
        }
    }
}

fn finish(
    problem: &QotProblem,
    pot: PotentialPair,
    report: SolveReport,
) -> Result<(PotentialPair, SolveReport)> {
    let pot = gauge_fix(&pot, &problem.p, &problem.q);
    if report.converged {
        Ok((pot, report))
    } else {
        Err(Error::NotConverged {
            residual: report.final_residual,
            iterations: report.iterations,
            best: Box::new((pot, report)),
        })
    }
}

/// Exact block coordinate ascent: every sweep sets each `fᵢ` (ascending `i`)
/// to the root of its row condition given `g`, then each `gⱼ` given `f`.
/// The dual value never decreases.
pub fn solve_alternating(
    problem: &QotProblem,
    opts: &SolveOptions,
) -> Result<(PotentialPair, SolveReport)> {
    let mut pot = opts.start(problem)?;
    let (n, m) = (problem.n(), problem.m());
    let eps = problem.epsilon;
    let mut rows = RowSolver::new();
    let mut scratch_m = vec![0.0; m];
    let mut scratch_n = vec![0.0; n];

    let (r_f, r_g, dual) = residuals_and_dual(problem, &pot);
    let mut residual = sup_norm(&r_f, &r_g);
    let mut report = SolveReport {
        iterations: 0,
        final_residual: residual,
        dual_values: vec![dual],
        converged: residual <= opts.tol,
    };
    while !report.converged && report.iterations < opts.max_iter {
        for i in 0..n {
            let x = problem.p.point(i);
            for (j, a) in scratch_m.iter_mut().enumerate() {
                *a = half_sq_dist(x, problem.q.point(j)) - pot.g[j];
            }
            pot.f[i] = rows.solve(&scratch_m, problem.q.weights(), eps);
        }
        for j in 0..m {
            let y = problem.q.point(j);
            for (i, a) in scratch_n.iter_mut().enumerate() {
                *a = half_sq_dist(problem.p.point(i), y) - pot.f[i];
            }
            pot.g[j] = rows.solve(&scratch_n, problem.p.weights(), eps);
        }
        let (r_f, r_g, dual) = residuals_and_dual(problem, &pot);
        residual = sup_norm(&r_f, &r_g);
        report.iterations += 1;
        report.dual_values.push(dual);
        report.final_residual = residual;
        report.converged = residual <= opts.tol;
    }
    pot.gauge = Gauge::Raw;
    finish(problem, pot, report)
}

/// Default gradient step: `ε/2`, the reciprocal of the Lipschitz constant of
/// the weight-preconditioned dual gradient.
pub fn default_gradient_step(problem: &QotProblem) -> f64 {
    0.5 * problem.epsilon()
}

/// Simultaneous ascent along the weight-preconditioned dual gradient:
/// `fᵢ ← fᵢ + (step/ε)·r_f(i)`, `gⱼ ← gⱼ + (step/ε)·r_g(j)`.
/// The preconditioned update equals `step · ∇D / weights`; any
/// `step ≤ ε/2` is a monotone ascent.
pub fn solve_gradient(
    problem: &QotProblem,
    step: f64,
    opts: &SolveOptions,
) -> Result<(PotentialPair, SolveReport)> {
    if !(step > 0.0) || !step.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "step must be positive, got {step}"
        )));
    }
    let mut pot = opts.start(problem)?;
    let scale = step / problem.epsilon;
    let (mut r_f, mut r_g, dual) = residuals_and_dual(problem, &pot);
    let mut report = SolveReport {
        iterations: 0,
        final_residual: sup_norm(&r_f, &r_g),
        dual_values: vec![dual],
        converged: false,
    };
    report.converged = report.final_residual <= opts.tol;
    while !report.converged && report.iterations < opts.max_iter {
        for (f, r) in pot.f.iter_mut().zip(&r_f) {
            *f += scale * r;
        }
        for (g, r) in pot.g.iter_mut().zip(&r_g) {
            *g += scale * r;
        }
        let (nf, ng, dual) = residuals_and_dual(problem, &pot);
        r_f = nf;
        r_g = ng;
        report.iterations += 1;
        report.final_residual = sup_norm(&r_f, &r_g);
        report.dual_values.push(dual);
        report.converged = report.final_residual <= opts.tol;
    }
    pot.gauge = Gauge::Raw;
    finish(problem, pot, report)
}

/// Transformed potentials `φᵢ = ‖xᵢ‖²/2 − fᵢ`, `ψⱼ = ‖yⱼ‖²/2 − gⱼ`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexPotentials {
    pub phi: Vec<f64>,
    pub psi: Vec<f64>,
}

impl ConvexPotentials {
    /// `⟨xᵢ, yⱼ⟩ − φᵢ − ψⱼ`, which equals `ξᵢⱼ`.
    pub fn slack(&self, problem: &QotProblem, i: usize, j: usize) -> f64 {
        let dot: f64 = problem
            .p()
            .point(i)
            .iter()
            .zip(problem.q().point(j))
            .map(|(a, b)| a * b)
            .sum();
        dot - self.phi[i] - self.psi[j]
    }
}

pub fn to_convex_form(
    pot: &PotentialPair,
    p: &DiscreteMeasure,
    q: &DiscreteMeasure,
) -> Result<ConvexPotentials> {
    if pot.f.len() != p.len() || pot.g.len() != q.len() {
        return Err(Error::DimensionMismatch {
            expected: p.len() + q.len(),
            got: pot.f.len() + pot.g.len(),
        });
    }
    let half_norm = |x: &[f64]| 0.5 * x.iter().map(|v| v * v).sum::<f64>();
    Ok(ConvexPotentials {
        phi: p
            .points()
            .zip(&pot.f)
            .map(|(x, f)| half_norm(x) - f)
            .collect(),
        psi: q
            .points()
            .zip(&pot.g)
            .map(|(y, g)| half_norm(y) - g)
            .collect(),
    })
}
