//! Geometry of the optimal support: sections `𝒮ₓ(β) = {y : ξ(x, y) ≥ −β}`,
//! their masses and barycenters, and numerical diagnostics for the Lipschitz
//! regularity of the thickened sections, for the `𝒞^{1,1}` regularity of the
//! potentials and for the VC-type sup-deviation statistic.
//!
//! Section membership is evaluated with the transformed potentials as
//! `φ(x) + ψ(y) ≤ ⟨x, y⟩ + β`, with an absolute slack of [`SECTION_TOL`] so
//! that boundary points are kept despite rounding.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::measures::DiscreteMeasure;
use crate::par::{self, Exec};
use crate::solver::{half_sq_dist, ConvexPotentials, PotentialPair, QotProblem};

/// Rounding slack of the inclusive section inequality.
pub const SECTION_TOL: f64 = 1e-12;
/// Slack values closer than this are one breakpoint of the sup-deviation
/// scan, so that a population atom and an identical sample atom cancel even
/// when their potentials come from different solves.
pub const VC_TIE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SectionReport {
    pub x_index: usize,
    pub beta: f64,
    pub member_indices: Vec<usize>,
    /// Q-mass of the section.
    pub mass: f64,
    /// Q-weighted barycenter of the members; `None` for an empty section.
    pub barycenter: Option<Vec<f64>>,
}

fn check_convex(problem: &QotProblem, convex: &ConvexPotentials) -> Result<()> {
    if convex.phi.len() != problem.n() || convex.psi.len() != problem.m() {
        return Err(Error::DimensionMismatch {
            expected: problem.n() + problem.m(),
            got: convex.phi.len() + convex.psi.len(),
        });
    }
    Ok(())
}

fn slacks_row(problem: &QotProblem, convex: &ConvexPotentials, i: usize) -> Vec<f64> {
    (0..problem.m())
        .map(|j| convex.slack(problem, i, j))
        .collect()
}

pub fn section(
    problem: &QotProblem,
    convex: &ConvexPotentials,
    x_index: usize,
    beta: f64,
) -> Result<SectionReport> {
    check_convex(problem, convex)?;
    if x_index >= problem.n() {
        return Err(Error::IndexOutOfRange {
            index: x_index,
            len: problem.n(),
        });
    }
    let q = problem.q();
    let member_indices: Vec<usize> = (0..problem.m())
        .filter(|&j| convex.slack(problem, x_index, j) >= -beta - SECTION_TOL)
        .collect();
    let mass: f64 = member_indices.iter().map(|&j| q.weight(j)).sum();
    let barycenter = (mass > 0.0).then(|| {
        let mut b = vec![0.0; problem.dim()];
        for &j in &member_indices {
            for (bk, yk) in b.iter_mut().zip(q.point(j)) {
                *bk += q.weight(j) * yk;
            }
        }
        b.iter_mut().for_each(|v| *v /= mass);
        b
    });
    Ok(SectionReport {
        x_index,
        beta,
        member_indices,
        mass,
        barycenter,
    })
}

/// `minᵢ Q(𝒮ₓᵢ)`; zero flags potentials that are not optimal.
pub fn min_section_mass(problem: &QotProblem, convex: &ConvexPotentials) -> Result<f64> {
    check_convex(problem, convex)?;
    let mut min = f64::INFINITY;
    for i in 0..problem.n() {
        min = min.min(section(problem, convex, i, 0.0)?.mass);
    }
    Ok(min)
}

/// `∇φ(xᵢ)`: the barycenter of the section `𝒮ₓᵢ`.
pub fn barycenter_gradient(
    problem: &QotProblem,
    convex: &ConvexPotentials,
    x_index: usize,
) -> Result<Vec<f64>> {
    section(problem, convex, x_index, 0.0)?
        .barycenter
        .ok_or(Error::EmptySection { index: x_index })
}

/// Symmetric grid `−β₀, …, β₀` with `2k + 1` points.
pub fn symmetric_beta_grid(beta0: f64, k: usize) -> Vec<f64> {
    let k = k.max(1);
    (0..=2 * k)
        .map(|s| beta0 * (s as f64 - k as f64) / k as f64)
        .collect()
}

/// Largest difference quotient `|∫_{𝒮ₓ(α)} g dQ − ∫_{𝒮ₓ(β)} g dQ| / |α − β|`
/// over all atoms `x`, adjacent levels of `beta_grid` and probe functions.
/// A test function `g` integrated over sections.
pub type Probe<'a> = &'a (dyn Fn(&[f64]) -> f64 + Sync);

pub fn lipschitz_beta_diagnostic(
    problem: &QotProblem,
    convex: &ConvexPotentials,
    beta_grid: &[f64],
    probes: &[Probe<'_>],
) -> Result<f64> {
    check_convex(problem, convex)?;
    if beta_grid.len() < 2 || beta_grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidArgument(
            "beta grid needs at least two strictly increasing levels".into(),
        ));
    }
    let q = problem.q();
    let probe_weights: Vec<Vec<f64>> = probes
        .iter()
        .map(|g| (0..q.len()).map(|j| q.weight(j) * g(q.point(j))).collect())
        .collect();
    let per_x = par::map_range(Exec::default(), problem.n(), |i| {
        let s = slacks_row(problem, convex, i);
        let mut order: Vec<usize> = (0..s.len()).collect();
        order.sort_by(|&a, &b| s[b].total_cmp(&s[a]));
        let sorted: Vec<f64> = order.iter().map(|&j| s[j]).collect();
        let mut best = 0.0f64;
        for w in &probe_weights {
            let mut prefix = Vec::with_capacity(order.len() + 1);
            prefix.push(0.0);
            for &j in &order {
                prefix.push(prefix.last().unwrap() + w[j]);
            }
            // members of 𝒮ₓ(β): sorted slacks ≥ −β − tol, a prefix
            let integral =
                |beta: f64| prefix[sorted.partition_point(|&v| v >= -beta - SECTION_TOL)];
            for pair in beta_grid.windows(2) {
                let d = (integral(pair[1]) - integral(pair[0])).abs() / (pair[1] - pair[0]);
                best = best.max(d);
            }
        }
        best
    });
    Ok(per_x.into_iter().fold(0.0, f64::max))
}

/// Pairs of distinct atoms that are nearest neighbours of each other's
/// position up to a relative `1e-9` slack (grid neighbours on a tensor grid).
fn neighbour_pairs(m: &DiscreteMeasure) -> Vec<(usize, usize, f64)> {
    let n = m.len();
    let mut pairs = Vec::new();
    for i in 0..n {
        let dists: Vec<f64> = (0..n)
            .map(|k| (2.0 * half_sq_dist(m.point(i), m.point(k))).sqrt())
            .collect();
        let h = dists
            .iter()
            .copied()
            .filter(|&d| d > 0.0)
            .fold(f64::INFINITY, f64::min);
        if !h.is_finite() {
            continue;
        }
        for (k, &d) in dists.iter().enumerate() {
            if k > i && d > 0.0 && d <= h * (1.0 + 1e-9) {
                pairs.push((i, k, d));
            }
        }
    }
    pairs
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GradientLipschitz {
    /// Max of `‖∇φ(x) − ∇φ(x′)‖ / ‖x − x′‖` over neighbouring atoms.
    pub gradient: f64,
    /// Same ratio for the section mass `x ↦ Q(𝒮ₓ)`.
    pub mass: f64,
}

pub fn gradient_lipschitz_diagnostic(
    problem: &QotProblem,
    convex: &ConvexPotentials,
) -> Result<GradientLipschitz> {
    check_convex(problem, convex)?;
    let sections: Vec<SectionReport> = (0..problem.n())
        .map(|i| section(problem, convex, i, 0.0))
        .collect::<Result<_>>()?;
    let mut out = GradientLipschitz {
        gradient: 0.0,
        mass: 0.0,
    };
    for (i, k, d) in neighbour_pairs(problem.p()) {
        let gi = sections[i]
            .barycenter
            .as_ref()
            .ok_or(Error::EmptySection { index: i })?;
        let gk = sections[k]
            .barycenter
            .as_ref()
            .ok_or(Error::EmptySection { index: k })?;
        out.gradient = out.gradient.max((2.0 * half_sq_dist(gi, gk)).sqrt() / d);
        out.mass = out
            .mass
            .max((sections[i].mass - sections[k].mass).abs() / d);
    }
    Ok(out)
}

/// Population potential `ψ` at arbitrary points, from the first-order
/// condition against `P`.
fn psi_at(problem: &QotProblem, convex: &ConvexPotentials, points: &DiscreteMeasure) -> Vec<f64> {
    let f: Vec<f64> = problem
        .p()
        .points()
        .zip(&convex.phi)
        .map(|(x, phi)| 0.5 * x.iter().map(|v| v * v).sum::<f64>() - phi)
        .collect();
    points
        .points()
        .map(|y| 0.5 * y.iter().map(|v| v * v).sum::<f64>() - problem.g_at(&f, y))
        .collect()
}

/// `sup_{x, δ} |∫_{𝒮ₓ(δ)} g d(Q − Qₙ)|` with `Q` the population's second
/// marginal and `x` ranging over its first marginal.
///
/// The statistic is piecewise constant in `δ`, changing only where `δ`
/// crosses a slack value of a `Q` or `Qₙ` atom, so sorting the slacks of
/// each row and scanning the signed prefix sums gives the exact supremum.
pub fn vc_sup_deviation(
    problem_pop: &QotProblem,
    convex_pop: &ConvexPotentials,
    q_n: &DiscreteMeasure,
    probe: &(dyn Fn(&[f64]) -> f64 + Sync),
) -> Result<f64> {
    vc_sup_deviation_with(Exec::default(), problem_pop, convex_pop, q_n, probe)
}

pub fn vc_sup_deviation_with(
    exec: Exec,
    problem_pop: &QotProblem,
    convex_pop: &ConvexPotentials,
    q_n: &DiscreteMeasure,
    probe: &(dyn Fn(&[f64]) -> f64 + Sync),
) -> Result<f64> {
    check_convex(problem_pop, convex_pop)?;
    if q_n.dim() != problem_pop.dim() {
        return Err(Error::DimensionMismatch {
            expected: problem_pop.dim(),
            got: q_n.dim(),
        });
    }
    let q = problem_pop.q();
    let psi_n = psi_at(problem_pop, convex_pop, q_n);
    let w_pop: Vec<f64> = (0..q.len())
        .map(|j| q.weight(j) * probe(q.point(j)))
        .collect();
    let w_emp: Vec<f64> = (0..q_n.len())
        .map(|k| -q_n.weight(k) * probe(q_n.point(k)))
        .collect();
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(u, v)| u * v).sum::<f64>();

    let per_x = par::map_range(exec, problem_pop.n(), |i| {
        let x = problem_pop.p().point(i);
        let phi = convex_pop.phi[i];
        let mut vals: Vec<(f64, f64)> = Vec::with_capacity(q.len() + q_n.len());
        for j in 0..q.len() {
            vals.push((dot(x, q.point(j)) - phi - convex_pop.psi[j], w_pop[j]));
        }
        for k in 0..q_n.len() {
            vals.push((dot(x, q_n.point(k)) - phi - psi_n[k], w_emp[k]));
        }
        vals.sort_by(|a, b| b.0.total_cmp(&a.0));
        let mut best = 0.0f64;
        let mut acc = 0.0;
        let mut k = 0;
        while k < vals.len() {
            let v = vals[k].0;
            while k < vals.len() && vals[k].0 >= v - VC_TIE_TOL {
                acc += vals[k].1;
                k += 1;
            }
            best = best.max(acc.abs());
        }
        best
    });
    Ok(per_x.into_iter().fold(0.0, f64::max))
}

/// `ℳ(β) = {(i, j) : ξᵢⱼ ≥ −β}`, row-major order.
pub fn product_thickening(
    problem: &QotProblem,
    pot: &PotentialPair,
    beta: f64,
) -> Vec<(usize, usize)> {
    let xi = problem.xi_matrix(pot);
    let m = problem.m();
    xi.iter()
        .enumerate()
        .filter(|(_, &v)| v >= -beta - SECTION_TOL)
        .map(|(k, _)| (k / m, k % m))
        .collect()
}

/// `maxₓ ‖∇φₙ(x) − ∇φ(x)‖` over the population atoms `x`, where the empirical
/// potential is extended to `x` through its first-order condition against
/// `Qₙ` and `∇φₙ(x)` is the `Qₙ`-barycenter of the empirical section.
pub fn gradient_difference(
    problem_pop: &QotProblem,
    convex_pop: &ConvexPotentials,
    problem_emp: &QotProblem,
    pot_emp: &PotentialPair,
) -> Result<f64> {
    check_convex(problem_pop, convex_pop)?;
    let qn = problem_emp.q();
    let mut worst = 0.0f64;
    for i in 0..problem_pop.n() {
        let x = problem_pop.p().point(i);
        let f_x = problem_emp.f_at(&pot_emp.g, x);
        let mut mass = 0.0;
        let mut bary = vec![0.0; x.len()];
        for k in 0..qn.len() {
            let y = qn.point(k);
            if f_x + pot_emp.g[k] - half_sq_dist(x, y) >= -SECTION_TOL {
                mass += qn.weight(k);
                for (b, yk) in bary.iter_mut().zip(y) {
                    *b += qn.weight(k) * yk;
                }
            }
        }
        if mass <= 0.0 {
            return Err(Error::EmptySection { index: i });
        }
        bary.iter_mut().for_each(|b| *b /= mass);
        let pop = barycenter_gradient(problem_pop, convex_pop, i)?;
        worst = worst.max((2.0 * half_sq_dist(&bary, &pop)).sqrt());
    }
    Ok(worst)
}
