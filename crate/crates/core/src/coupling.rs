//! Primal side: the coupling `dπ/d(P⊗Q) = (ξ)₊/ε` induced by potentials,
//! its cost, marginals and sparsity.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::solver::{dual_objective, PotentialPair, QotProblem};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CouplingEntry {
    pub i: usize,
    pub j: usize,
    /// `pᵢ qⱼ · density`.
    pub mass: f64,
    /// `(ξᵢⱼ)₊ / ε`.
    pub density: f64,
}

/// Strictly positive entries of a coupling, sorted by `(i, j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseCoupling {
    pub entries: Vec<CouplingEntry>,
    pub shape: (usize, usize),
    pub total_mass: f64,
}

impl SparseCoupling {
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `∫ η dπ` for a function of the atom indices.
    pub fn integrate(&self, eta: impl Fn(usize, usize) -> f64) -> f64 {
        self.entries.iter().map(|e| e.mass * eta(e.i, e.j)).sum()
    }
}

pub fn primal_from_dual(problem: &QotProblem, pot: &PotentialPair) -> SparseCoupling {
    let eps = problem.epsilon();
    let p = problem.p().weights();
    let q = problem.q().weights();
    let mut entries = Vec::new();
    let mut total = 0.0;
    for i in 0..problem.n() {
        for j in 0..problem.m() {
            let x = pot.f[i] + pot.g[j] - problem.cost(i, j);
            if x > 0.0 {
                let density = x / eps;
                let mass = p[i] * q[j] * density;
                total += mass;
                entries.push(CouplingEntry {
                    i,
                    j,
                    mass,
                    density,
                });
            }
        }
    }
    SparseCoupling {
        entries,
        shape: (problem.n(), problem.m()),
        total_mass: total,
    }
}

/// `Σ mass·c + (ε/2) Σ pᵢqⱼ·density²`.
pub fn primal_objective(problem: &QotProblem, coupling: &SparseCoupling) -> Result<f64> {
    if coupling.shape != (problem.n(), problem.m()) {
        return Err(Error::DimensionMismatch {
            expected: problem.n() * problem.m(),
            got: coupling.shape.0 * coupling.shape.1,
        });
    }
    let eps = problem.epsilon();
    let p = problem.p().weights();
    let q = problem.q().weights();
    Ok(coupling
        .entries
        .iter()
        .map(|e| {
            e.mass * problem.cost(e.i, e.j) + 0.5 * eps * p[e.i] * q[e.j] * e.density * e.density
        })
        .sum())
}

/// Row and column sums of a coupling on the original supports.
#[derive(Debug, Clone, PartialEq)]
pub struct Marginals {
    pub row: Vec<f64>,
    pub col: Vec<f64>,
}

impl Marginals {
    /// Sup-norm deviation from the problem's marginals.
    pub fn defect(&self, problem: &QotProblem) -> f64 {
        let dp = self
            .row
            .iter()
            .zip(problem.p().weights())
            .map(|(a, b)| (a - b).abs());
        let dq = self
            .col
            .iter()
            .zip(problem.q().weights())
            .map(|(a, b)| (a - b).abs());
        dp.chain(dq).fold(0.0, f64::max)
    }
}

pub fn marginals(coupling: &SparseCoupling) -> Marginals {
    let mut row = vec![0.0; coupling.shape.0];
    let mut col = vec![0.0; coupling.shape.1];
    for e in &coupling.entries {
        row[e.i] += e.mass;
        col[e.j] += e.mass;
    }
    Marginals { row, col }
}

/// Primal value of the induced coupling minus the dual value.
///
/// Fails with `InfeasibleCoupling` when the coupling's marginals deviate from
/// `(P, Q)` by more than `10·tol_feas`.
pub fn duality_gap(problem: &QotProblem, pot: &PotentialPair, tol_feas: f64) -> Result<f64> {
    let coupling = primal_from_dual(problem, pot);
    let defect = marginals(&coupling).defect(problem);
    let allowed = 10.0 * tol_feas;
    if !(defect <= allowed) {
        return Err(Error::InfeasibleCoupling { defect, allowed });
    }
    Ok(primal_objective(problem, &coupling)? - dual_objective(problem, pot)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SupportStats {
    pub nonzero_count: usize,
    /// `nonzero_count / (n·m)`.
    pub fill_ratio: f64,
    pub max_density: f64,
}

pub fn support_stats(coupling: &SparseCoupling) -> SupportStats {
    let nonzero_count = coupling.entries.len();
    let cells = coupling.shape.0 * coupling.shape.1;
    SupportStats {
        nonzero_count,
        fill_ratio: if cells == 0 {
            0.0
        } else {
            nonzero_count as f64 / cells as f64
        },
        max_density: coupling
            .entries
            .iter()
            .map(|e| e.density)
            .fold(0.0, f64::max),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::DiscreteMeasure;
    use crate::solver::{solve_alternating, SolveOptions};

    fn line(points: &[f64], weights: &[f64]) -> DiscreteMeasure {
        DiscreteMeasure::from_flat(1, points.to_vec(), weights.to_vec()).unwrap()
    }

    fn two_by_two(eps: f64) -> QotProblem {
        let m = line(&[0.0, 1.0], &[0.5, 0.5]);
        QotProblem::new(m.clone(), m, eps).unwrap()
    }

    #[test]
    fn forced_single_atom() {
        let pr = QotProblem::new(line(&[0.0], &[1.0]), line(&[1.0], &[1.0]), 1.0).unwrap();
        let pot = PotentialPair::new(vec![0.75], vec![0.75]);
        let c = primal_from_dual(&pr, &pot);
        assert_eq!(c.entries.len(), 1);
        assert!((c.entries[0].density - 1.0).abs() < 1e-15);
        assert!((c.entries[0].mass - 1.0).abs() < 1e-15);
        assert!((primal_objective(&pr, &c).unwrap() - 1.0).abs() < 1e-15);
        assert!(duality_gap(&pr, &pot, 1e-9).unwrap().abs() < 1e-15);

        let same = QotProblem::new(line(&[0.0], &[1.0]), line(&[0.0], &[1.0]), 1.0).unwrap();
        let c = primal_from_dual(&same, &PotentialPair::new(vec![0.5], vec![0.5]));
        assert!((primal_objective(&same, &c).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn diagonal_two_by_two() {
        let pr = two_by_two(0.1);
        let pot = PotentialPair::new(vec![0.1, 0.1], vec![0.1, 0.1]);
        let c = primal_from_dual(&pr, &pot);
        assert_eq!(c.entries.len(), 2);
        for e in &c.entries {
            assert_eq!(e.i, e.j);
            assert!((e.density - 2.0).abs() < 1e-12);
            assert!((e.mass - 0.5).abs() < 1e-12);
        }
        assert!((primal_objective(&pr, &c).unwrap() - 0.1).abs() < 1e-12);
        assert!(duality_gap(&pr, &pot, 1e-12).unwrap().abs() <= 1e-10);
        let mg = marginals(&c);
        for v in mg.row.iter().chain(&mg.col) {
            assert!((v - 0.5).abs() < 1e-12);
        }
        let st = support_stats(&c);
        assert_eq!(st.fill_ratio, 0.5);
        assert!((st.max_density - 2.0).abs() < 1e-12);
    }

    #[test]
    fn full_support_at_large_epsilon() {
        let pr = two_by_two(10.0);
        let (pot, _) = solve_alternating(&pr, &SolveOptions::for_problem(&pr)).unwrap();
        assert_eq!(support_stats(&primal_from_dual(&pr, &pot)).fill_ratio, 1.0);
    }

    #[test]
    fn empty_coupling() {
        let pr = two_by_two(0.1);
        let c = primal_from_dual(&pr, &PotentialPair::zeros(&pr));
        assert!(c.is_empty());
        let st = support_stats(&c);
        assert_eq!(
            (st.nonzero_count, st.fill_ratio, st.max_density),
            (0, 0.0, 0.0)
        );
        assert!(matches!(
            duality_gap(&pr, &PotentialPair::zeros(&pr), 1e-9),
            Err(Error::InfeasibleCoupling { .. })
        ));
    }

    #[test]
    fn perturbed_optimum_loses_dual_value() {
        let p = line(&[0.0, 0.4, 1.0], &[0.3, 0.3, 0.4]);
        let q = line(&[0.2, 0.5, 0.9], &[0.5, 0.25, 0.25]);
        let pr = QotProblem::new(p, q, 0.2).unwrap();
        let (pot, _) = solve_alternating(&pr, &SolveOptions::for_problem(&pr)).unwrap();
        let mut bumped = pot.clone();
        bumped.f[1] += 1e-3;
        bumped.g[0] -= 2e-3;
        assert!(duality_gap(&pr, &pot, 1e-9).unwrap().abs() < 1e-10);
        assert!(dual_objective(&pr, &bumped).unwrap() < dual_objective(&pr, &pot).unwrap());
    }

    #[test]
    fn feasibility_matches_residual() {
        let p = line(&[0.0, 0.4, 1.0], &[0.3, 0.3, 0.4]);
        let q = line(&[0.2, 0.5, 0.9], &[0.5, 0.25, 0.25]);
        let pr = QotProblem::new(p, q, 0.05).unwrap();
        let tol = 1e-6 * pr.epsilon();
        let (pot, _) = solve_alternating(&pr, &SolveOptions::for_problem(&pr).tol(tol)).unwrap();
        let d = marginals(&primal_from_dual(&pr, &pot)).defect(&pr);
        assert!(d <= tol / pr.epsilon(), "{d}");
    }
}
