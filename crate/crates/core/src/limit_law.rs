//! Plug-in limit laws on a discretized population.
//!
//! The linearization of the first-order conditions around the population
//! optimum is governed by `𝕃 = I + 𝔸` where `𝔸` averages the opposite
//! potential over the support sections:
//!
//! ```text
//! 𝔸₁(g)(xᵢ) = Σ_{j ∈ 𝒮ᵢ} qⱼ gⱼ / Q(𝒮ᵢ),    𝔸₂(f)(yⱼ) = Σ_{i ∈ 𝒯ⱼ} pᵢ fᵢ / P(𝒯ⱼ).
//! ```
//!
//! `𝕃` kills the gauge direction `(1, −1)` and is invertible on the quotient.
//! The inverse is computed from the bordered system
//!
//! ```text
//! (I + 𝔸) u − t (1, −1) = v,    Σ pᵢ u_f(i) − Σ qⱼ u_g(j) = 0,
//! ```
//!
//! which returns the mean-balanced representative of the preimage of the
//! class of `v`.

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::geometry::SECTION_TOL;
use crate::rng;
use crate::solver::{PotentialPair, QotProblem};

/// Relative round-trip residual accepted by [`invert_l`].
pub const INVERSE_RESIDUAL_TOL: f64 = 1e-9;
/// Most negative eigenvalue repaired to zero before factorizing a covariance.
pub const PSD_REPAIR_TOL: f64 = 1e-8;

fn on_support(xi: f64) -> bool {
    xi >= -SECTION_TOL
}

/// Section masses `Q(𝒮ᵢ)` and `P(𝒯ⱼ)`.
fn section_masses(problem: &QotProblem, xi: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let (n, m) = (problem.n(), problem.m());
    let p = problem.p().weights();
    let q = problem.q().weights();
    let mut qs = vec![0.0; n];
    let mut pt = vec![0.0; m];
    for i in 0..n {
        for j in 0..m {
            if on_support(xi[i * m + j]) {
                qs[i] += q[j];
                pt[j] += p[i];
            }
        }
    }
    if let Some(i) = qs.iter().position(|&v| v <= 0.0) {
        return Err(Error::EmptySection { index: i });
    }
    if let Some(j) = pt.iter().position(|&v| v <= 0.0) {
        return Err(Error::EmptySection { index: n + j });
    }
    Ok((qs, pt))
}

/// The averaging operator `𝔸` as an `(n + m) × (n + m)` matrix, `f` first.
pub fn build_operator(problem: &QotProblem, pot: &PotentialPair) -> Result<DMatrix<f64>> {
    let (n, m) = (problem.n(), problem.m());
    let xi = problem.xi_matrix(pot);
    let (qs, pt) = section_masses(problem, &xi)?;
    let p = problem.p().weights();
    let q = problem.q().weights();
    let mut a = DMatrix::zeros(n + m, n + m);
    for i in 0..n {
        for j in 0..m {
            if on_support(xi[i * m + j]) {
                a[(i, n + j)] = q[j] / qs[i];
                a[(n + j, i)] = p[i] / pt[j];
            }
        }
    }
    Ok(a)
}

#[derive(Debug, Clone)]
pub struct LInverse {
    /// Maps `v` to the mean-balanced `u` with `(I + 𝔸) u = v` modulo `(1, −1)`.
    pub matrix: DMatrix<f64>,
    /// `‖I + 𝔸‖∞ · ‖𝕃⁻¹‖∞`.
    pub condition: f64,
    /// Worst relative round-trip residual in the quotient norm.
    pub residual: f64,
}

/// `min_a ‖r − a (1, −1)‖∞`.
pub fn quotient_norm(r: &[f64], n: usize) -> f64 {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for (k, &v) in r.iter().enumerate() {
        let s = if k < n { v } else { -v };
        lo = lo.min(s);
        hi = hi.max(s);
    }
    if r.is_empty() {
        0.0
    } else {
        0.5 * (hi - lo)
    }
}

fn inf_norm(m: &DMatrix<f64>) -> f64 {
    m.row_iter()
        .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Inverse of `I + 𝔸` on the quotient by the gauge direction.
///
/// `p` and `q` are the weights fixing the mean-balanced representative.
pub fn invert_l(a: &DMatrix<f64>, p: &[f64], q: &[f64]) -> Result<LInverse> {
    let (n, m) = (p.len(), q.len());
    let size = n + m;
    if a.nrows() != size || a.ncols() != size {
        return Err(Error::DimensionMismatch {
            expected: size,
            got: a.nrows(),
        });
    }
    let mut b = DMatrix::zeros(size + 1, size + 1);
    b.view_mut((0, 0), (size, size)).copy_from(a);
    for k in 0..size {
        b[(k, k)] += 1.0;
        b[(k, size)] = if k < n { -1.0 } else { 1.0 };
    }
    for i in 0..n {
        b[(size, i)] = p[i];
    }
    for j in 0..m {
        b[(size, n + j)] = -q[j];
    }
    let lu = b.lu();
    let rhs = DMatrix::identity(size + 1, size);
    let sol = lu.solve(&rhs).ok_or(Error::SingularOnQuotient)?;
    let matrix = sol.rows(0, size).into_owned();
    if matrix.iter().any(|v| !v.is_finite()) {
        return Err(Error::SingularOnQuotient);
    }

    let mut l = a.clone();
    for k in 0..size {
        l[(k, k)] += 1.0;
    }
    // round trip on a few deterministic probe vectors
    let mut residual = 0.0f64;
    for s in 0..4u64 {
        let v = DVector::from_fn(size, |k, _| {
            let h = (k as u64 + 1)
                .wrapping_mul(0x9E37_79B9_7F4A_7C15)
                .wrapping_add(s.wrapping_mul(0x632B_E59B_D9B4_E019));
            ((h >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        });
        let u = &matrix * &v;
        let r = &l * &u - &v;
        let vn = v.amax().max(f64::MIN_POSITIVE);
        residual = residual.max(quotient_norm(r.as_slice(), n) / vn);
    }
    if !(residual <= INVERSE_RESIDUAL_TOL) {
        return Err(Error::SingularOnQuotient);
    }
    Ok(LInverse {
        condition: inf_norm(&l) * inf_norm(&matrix),
        matrix,
        residual,
    })
}

fn hinge_covariance(h: &DMatrix<f64>, w: &[f64]) -> DMatrix<f64> {
    let wv = DVector::from_column_slice(w);
    let mean = h * &wv;
    let mut hw = h.clone();
    for (j, mut col) in hw.column_iter_mut().enumerate() {
        col *= w[j];
    }
    let mut cov = &hw * h.transpose() - &mean * mean.transpose();
    // exact symmetry
    let k = cov.nrows();
    for r in 0..k {
        for c in 0..r {
            let v = 0.5 * (cov[(r, c)] + cov[(c, r)]);
            cov[(r, c)] = v;
            cov[(c, r)] = v;
        }
    }
    cov
}

/// Covariances of the hinge processes `x ↦ (ξ(x, Y))₊` under `Y ~ Q` and
/// `y ↦ (ξ(X, y))₊` under `X ~ P`, on the atoms.
pub fn gaussian_covariances(
    problem: &QotProblem,
    pot: &PotentialPair,
) -> (DMatrix<f64>, DMatrix<f64>) {
    let (n, m) = (problem.n(), problem.m());
    let xi = problem.xi_matrix(pot);
    let h = DMatrix::from_fn(n, m, |i, j| xi[i * m + j].max(0.0));
    let cov_q = hinge_covariance(&h, problem.q().weights());
    let cov_p = hinge_covariance(&h.transpose(), problem.p().weights());
    (cov_q, cov_p)
}

/// Frobenius distance between the hinge covariances and the ones built from
/// `ξ` without the positive part. Zero when the support is full.
pub fn covariance_form_gap(problem: &QotProblem, pot: &PotentialPair) -> f64 {
    let (n, m) = (problem.n(), problem.m());
    let xi = problem.xi_matrix(pot);
    let raw = DMatrix::from_fn(n, m, |i, j| xi[i * m + j]);
    let h = raw.map(|v| v.max(0.0));
    let dq =
        hinge_covariance(&h, problem.q().weights()) - hinge_covariance(&raw, problem.q().weights());
    let ht = h.transpose();
    let rt = raw.transpose();
    let dp =
        hinge_covariance(&ht, problem.p().weights()) - hinge_covariance(&rt, problem.p().weights());
    (dq.norm_squared() + dp.norm_squared()).sqrt()
}

/// Variance under `P ⊗ Q` of
/// `f(X) + g(Y) − (1/2ε)(Σᵢ pᵢ (ξ(xᵢ, Y))₊² + Σⱼ qⱼ (ξ(X, yⱼ))₊²)`.
///
/// The variable splits as `a(X) + b(Y)`, so the variance is
/// `Var_P(a) + Var_Q(b)`.
pub fn cost_variance_plugin(problem: &QotProblem, pot: &PotentialPair) -> f64 {
    let (n, m) = (problem.n(), problem.m());
    let eps = problem.epsilon();
    let p = problem.p().weights();
    let q = problem.q().weights();
    let xi = problem.xi_matrix(pot);
    let mut a = pot.f.clone();
    let mut b = pot.g.clone();
    for i in 0..n {
        for j in 0..m {
            let h = xi[i * m + j].max(0.0);
            let h2 = h * h / (2.0 * eps);
            a[i] -= q[j] * h2;
            b[j] -= p[i] * h2;
        }
    }
    weighted_variance(&a, p) + weighted_variance(&b, q)
}

/// Two-pass variance of `v` under the probability weights `w`.
pub fn weighted_variance(v: &[f64], w: &[f64]) -> f64 {
    let mean: f64 = v.iter().zip(w).map(|(a, b)| a * b).sum();
    v.iter()
        .zip(w)
        .map(|(a, b)| b * (a - mean) * (a - mean))
        .sum::<f64>()
        .max(0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceInterval {
    pub center: f64,
    pub half_width: f64,
    pub level: f64,
    pub n: usize,
}

impl ConfidenceInterval {
    pub fn lower(&self) -> f64 {
        self.center - self.half_width
    }

    pub fn upper(&self) -> f64 {
        self.center + self.half_width
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lower() <= v && v <= self.upper()
    }
}

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("unit normal")
}

/// Standard normal quantile.
pub fn normal_quantile(prob: f64) -> f64 {
    std_normal().inverse_cdf(prob)
}

pub fn normal_cdf(x: f64) -> f64 {
    std_normal().cdf(x)
}

pub fn cost_ci(cost_hat: f64, sigma2_hat: f64, n: usize, level: f64) -> Result<ConfidenceInterval> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidLevel(level));
    }
    if !(sigma2_hat >= 0.0) || n == 0 {
        return Err(Error::InvalidArgument(format!(
            "need sigma2 >= 0 and n > 0, got {sigma2_hat} and {n}"
        )));
    }
    let z = normal_quantile(0.5 * (1.0 + level));
    Ok(ConfidenceInterval {
        center: cost_hat,
        half_width: z * (sigma2_hat / n as f64).sqrt(),
        level,
        n,
    })
}

/// Test functions for the coupling functional `∫ η dπ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EtaSpec {
    Zero,
    One,
    /// Indicator of `[x_lower, x_upper] × [y_lower, y_upper]` (closed boxes).
    BoxIndicator {
        x_lower: Vec<f64>,
        x_upper: Vec<f64>,
        y_lower: Vec<f64>,
        y_upper: Vec<f64>,
    },
}

impl EtaSpec {
    pub fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        let inside = |v: &[f64], lo: &[f64], hi: &[f64]| {
            v.iter().zip(lo).zip(hi).all(|((v, l), h)| l <= v && v <= h)
        };
        match self {
            EtaSpec::Zero => 0.0,
            EtaSpec::One => 1.0,
            EtaSpec::BoxIndicator {
                x_lower,
                x_upper,
                y_lower,
                y_upper,
            } => {
                if inside(x, x_lower, x_upper) && inside(y, y_lower, y_upper) {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        if let EtaSpec::BoxIndicator {
            x_lower,
            x_upper,
            y_lower,
            y_upper,
        } = self
        {
            for v in [x_lower, x_upper, y_lower, y_upper] {
                if v.len() != dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        got: v.len(),
                    });
                }
            }
        }
        Ok(())
    }

    /// `η(xᵢ, yⱼ)` on the atoms of `problem`, row-major.
    pub fn on_atoms(&self, problem: &QotProblem) -> Vec<f64> {
        let mut out = Vec::with_capacity(problem.n() * problem.m());
        for x in problem.p().points() {
            for y in problem.q().points() {
                out.push(self.eval(x, y));
            }
        }
        out
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ModelSummary {
    pub n: usize,
    pub m: usize,
    pub epsilon: f64,
    pub condition: f64,
    pub inverse_residual: f64,
    pub cost_sigma2: f64,
    pub min_section_mass_q: f64,
    pub min_section_mass_p: f64,
    pub cov_gq_eigen_range: (f64, f64),
    pub cov_gp_eigen_range: (f64, f64),
    pub covariance_form_gap: f64,
}

/// Everything the limit laws need, built once from a solved population.
#[derive(Debug, Clone)]
pub struct LimitLawModel {
    pub pop_problem: QotProblem,
    pub pop_pot: PotentialPair,
    pub a_matrix: DMatrix<f64>,
    pub l_inverse: LInverse,
    pub cov_gq: DMatrix<f64>,
    pub cov_gp: DMatrix<f64>,
    pub cost_sigma2: f64,
    /// `ξ` on the grid, row-major.
    pub xi: Vec<f64>,
    pub section_q: Vec<f64>,
    pub section_p: Vec<f64>,
}

impl LimitLawModel {
    pub fn build(pop_problem: QotProblem, pop_pot: PotentialPair) -> Result<Self> {
        let xi = pop_problem.xi_matrix(&pop_pot);
        let (section_q, section_p) = section_masses(&pop_problem, &xi)?;
        let a_matrix = build_operator(&pop_problem, &pop_pot)?;
        let l_inverse = invert_l(
            &a_matrix,
            pop_problem.p().weights(),
            pop_problem.q().weights(),
        )?;
        let (cov_gq, cov_gp) = gaussian_covariances(&pop_problem, &pop_pot);
        let cost_sigma2 = cost_variance_plugin(&pop_problem, &pop_pot);
        Ok(LimitLawModel {
            pop_problem,
            pop_pot,
            a_matrix,
            l_inverse,
            cov_gq,
            cov_gp,
            cost_sigma2,
            xi,
            section_q,
            section_p,
        })
    }

    pub fn n(&self) -> usize {
        self.pop_problem.n()
    }

    pub fn m(&self) -> usize {
        self.pop_problem.m()
    }

    pub fn summary(&self) -> ModelSummary {
        let range = |c: &DMatrix<f64>| {
            if c.is_empty() {
                return (0.0, 0.0);
            }
            let e = c.clone().symmetric_eigenvalues();
            (e.min(), e.max())
        };
        ModelSummary {
            n: self.n(),
            m: self.m(),
            epsilon: self.pop_problem.epsilon(),
            condition: self.l_inverse.condition,
            inverse_residual: self.l_inverse.residual,
            cost_sigma2: self.cost_sigma2,
            min_section_mass_q: self.section_q.iter().copied().fold(f64::INFINITY, f64::min),
            min_section_mass_p: self.section_p.iter().copied().fold(f64::INFINITY, f64::min),
            cov_gq_eigen_range: range(&self.cov_gq),
            cov_gp_eigen_range: range(&self.cov_gp),
            covariance_form_gap: covariance_form_gap(&self.pop_problem, &self.pop_pot),
        }
    }
}

/// Covariance of the limit of `√n (fₙ ⊕ gₙ − f ⊕ g)` at the given atom pairs.
pub fn potentials_limit_cov(
    model: &LimitLawModel,
    eval_pairs: &[(usize, usize)],
) -> Result<DMatrix<f64>> {
    let (n, m) = (model.n(), model.m());
    let linv = &model.l_inverse.matrix;
    let mut rows = DMatrix::zeros(eval_pairs.len(), n + m);
    for (k, &(i, j)) in eval_pairs.iter().enumerate() {
        if i >= n || j >= m {
            return Err(Error::IndexOutOfRange {
                index: if i >= n { i } else { j },
                len: if i >= n { n } else { m },
            });
        }
        for c in 0..n + m {
            let scale = if c < n {
                1.0 / model.section_q[c]
            } else {
                1.0 / model.section_p[c - n]
            };
            rows[(k, c)] = (linv[(i, c)] + linv[(n + j, c)]) * scale;
        }
    }
    let rf = rows.columns(0, n);
    let rg = rows.columns(n, m);
    let cov = rf * &model.cov_gq * rf.transpose() + rg * &model.cov_gp * rg.transpose();
    Ok(0.5 * (&cov + cov.transpose()))
}

/// `σ²(η)`: variance of the first-order influence of one `(X, Y)` draw on
/// `ε ∫ η dπ`. The limit of `√n ∫ η d(πₙ − π)` is `N(0, σ²(η) / ε²)`.
///
/// `eta` holds `η(xᵢ, yⱼ)` on the grid, row-major.
pub fn coupling_functional_variance(model: &LimitLawModel, eta: &[f64]) -> Result<f64> {
    let (n, m) = (model.n(), model.m());
    if eta.len() != n * m {
        return Err(Error::DimensionMismatch {
            expected: n * m,
            got: eta.len(),
        });
    }
    let eps = model.pop_problem.epsilon();
    let p = model.pop_problem.p().weights();
    let q = model.pop_problem.q().weights();
    let xi = &model.xi;
    if !xi.iter().any(|&v| on_support(v)) {
        return Err(Error::EmptySupport);
    }
    let mut mean = 0.0;
    for i in 0..n {
        for j in 0..m {
            if on_support(xi[i * m + j]) {
                mean += p[i] * q[j] * eta[i * m + j];
            }
        }
    }
    let bar = |k: usize| eta[k] - mean;

    // w = (Σⱼ pᵢ qⱼ η̄ 1{ξ ≥ 0})ᵢ ⊕ (Σᵢ …)ⱼ, pulled back through 𝕃⁻¹
    let mut w = DVector::zeros(n + m);
    for i in 0..n {
        for j in 0..m {
            let k = i * m + j;
            if on_support(xi[k]) {
                let v = p[i] * q[j] * bar(k);
                w[i] += v;
                w[n + j] += v;
            }
        }
    }
    let z = model.l_inverse.matrix.tr_mul(&w);

    // V_X(i): hinge row of xᵢ fed into the g-equations, plus direct term
    let mut vx = vec![0.0; n];
    for (i, v) in vx.iter_mut().enumerate() {
        let mut lin = 0.0;
        let mut direct = 0.0;
        for j in 0..m {
            let h = xi[i * m + j].max(0.0);
            lin += z[n + j] * (h - eps) / model.section_p[j];
            direct += q[j] * bar(i * m + j) * h;
        }
        *v = direct - lin;
    }
    let mut vy = vec![0.0; m];
    for (j, v) in vy.iter_mut().enumerate() {
        let mut lin = 0.0;
        let mut direct = 0.0;
        for i in 0..n {
            let h = xi[i * m + j].max(0.0);
            lin += z[i] * (h - eps) / model.section_q[i];
            direct += p[i] * bar(i * m + j) * h;
        }
        *v = direct - lin;
    }
    Ok(weighted_variance(&vx, p) + weighted_variance(&vy, q))
}

/// Draws from the Gaussian limit of the potentials at `eval_pairs`; one
/// vector per draw.
pub fn sample_limit_gaussian(
    model: &LimitLawModel,
    eval_pairs: &[(usize, usize)],
    seed: u64,
    count: usize,
) -> Result<Vec<Vec<f64>>> {
    let cov = potentials_limit_cov(model, eval_pairs)?;
    let factor = psd_factor(&cov)?;
    let k = eval_pairs.len();
    let mut rng = rng::stream(seed, 0);
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let z = DVector::from_fn(k, |_, _| StandardNormal.sample(&mut rng));
        out.push((&factor * z).as_slice().to_vec());
    }
    Ok(out)
}

/// `V √Λ` from the symmetric eigendecomposition, with eigenvalues in
/// `[−PSD_REPAIR_TOL, 0)` clamped to zero.
pub fn psd_factor(cov: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let eig = cov.clone().symmetric_eigen();
    let mut factor = eig.eigenvectors.clone();
    for (c, &lam) in eig.eigenvalues.iter().enumerate() {
        if lam < -PSD_REPAIR_TOL || !lam.is_finite() {
            return Err(Error::FactorizationFailure(lam));
        }
        let s = lam.max(0.0).sqrt();
        factor.column_mut(c).scale_mut(s);
    }
    Ok(factor)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::DiscreteMeasure;
    use crate::solver::{active_set_oracle, gauge_fix, solve_alternating, SolveOptions};

    fn line(points: &[f64], weights: &[f64]) -> DiscreteMeasure {
        DiscreteMeasure::from_flat(1, points.to_vec(), weights.to_vec()).unwrap()
    }

    fn single() -> (QotProblem, PotentialPair) {
        let pr = QotProblem::new(line(&[0.0], &[1.0]), line(&[1.0], &[1.0]), 1.0).unwrap();
        let pot = active_set_oracle(&pr).unwrap();
        (pr, pot)
    }

    fn diagonal() -> (QotProblem, PotentialPair) {
        let m = line(&[0.0, 1.0], &[0.5, 0.5]);
        let pr = QotProblem::new(m.clone(), m, 0.1).unwrap();
        (pr, PotentialPair::new(vec![0.1, 0.1], vec![0.1, 0.1]))
    }

    #[test]
    fn single_atom_operator() {
        let (pr, pot) = single();
        let a = build_operator(&pr, &pot).unwrap();
        assert_eq!(a, DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]));
        let inv = invert_l(&a, &[1.0], &[1.0]).unwrap();
        let u = &inv.matrix * DVector::from_column_slice(&[1.0, 1.0]);
        assert!((u[0] - 0.5).abs() < 1e-15 && (u[1] - 0.5).abs() < 1e-15);
        // gauge direction maps to zero
        let u = &inv.matrix * DVector::from_column_slice(&[1.0, -1.0]);
        assert!(u.amax() < 1e-15);
    }

    #[test]
    fn diagonal_operator_is_permutation() {
        let (pr, pot) = diagonal();
        let a = build_operator(&pr, &pot).unwrap();
        let expect = DMatrix::from_row_slice(
            4,
            4,
            &[
                0.0, 0.0, 1.0, 0.0, //
                0.0, 0.0, 0.0, 1.0, //
                1.0, 0.0, 0.0, 0.0, //
                0.0, 1.0, 0.0, 0.0,
            ],
        );
        assert_eq!(a, expect);
        // disconnected support: the kernel is two-dimensional
        assert!(matches!(
            invert_l(&a, &[0.5, 0.5], &[0.5, 0.5]),
            Err(Error::SingularOnQuotient)
        ));
    }

    #[test]
    fn empty_section_rejected() {
        let (pr, _) = diagonal();
        assert!(matches!(
            build_operator(&pr, &PotentialPair::new(vec![-1.0, -1.0], vec![0.0, 0.0])),
            Err(Error::EmptySection { .. })
        ));
    }

    #[test]
    fn covariance_examples() {
        let (pr, pot) = diagonal();
        let (cq, cp) = gaussian_covariances(&pr, &pot);
        let expect = DMatrix::from_row_slice(2, 2, &[0.01, -0.01, -0.01, 0.01]);
        assert!((&cq - &expect).amax() < 1e-15);
        assert!((&cp - &expect).amax() < 1e-15);
        assert!(covariance_form_gap(&pr, &pot) > 0.0);

        let p = line(&[0.0, 0.3, 1.0], &[0.2, 0.5, 0.3]);
        let pr = QotProblem::new(p, line(&[0.4], &[1.0]), 0.2).unwrap();
        let (pot, _) = solve_alternating(&pr, &SolveOptions::for_problem(&pr)).unwrap();
        let (cq, _) = gaussian_covariances(&pr, &pot);
        assert_eq!(cq.amax(), 0.0);
    }

    #[test]
    fn cost_variance_examples() {
        let (pr, pot) = single();
        assert_eq!(cost_variance_plugin(&pr, &pot), 0.0);
        let (pr, pot) = diagonal();
        let s = cost_variance_plugin(&pr, &pot);
        assert!((s - cost_variance_plugin(&pr, &pot.shifted(0.37))).abs() < 1e-15);
        // each outcome: 0.1 + 0.1 − (0.5·0.04 + 0.5·0.04)/0.2 = 0
        assert!(s.abs() < 1e-15);
    }

    #[test]
    fn ci_examples() {
        let ci = cost_ci(1.5, 0.0, 10, 0.95).unwrap();
        assert_eq!((ci.lower(), ci.upper()), (1.5, 1.5));
        let ci = cost_ci(0.0, 1.0, 100, 0.95).unwrap();
        assert!((ci.half_width - 0.1959963984540054).abs() < 1e-12);
        let wider = cost_ci(0.0, 1.0, 100, 0.99).unwrap();
        assert!(wider.half_width > ci.half_width);
        assert!(matches!(
            cost_ci(0.0, 1.0, 100, 1.0),
            Err(Error::InvalidLevel(_))
        ));
        assert!(matches!(
            cost_ci(0.0, 1.0, 100, 0.0),
            Err(Error::InvalidLevel(_))
        ));
        assert!((normal_quantile(0.975) - 1.959963984540054).abs() < 1e-12);
        let e = normal_cdf(1.959963984540054) - 0.975;
        assert!(e.abs() < 1e-10, "{e}");
    }

    #[test]
    fn psd_repair() {
        let z = DMatrix::<f64>::zeros(3, 3);
        assert_eq!(psd_factor(&z).unwrap().amax(), 0.0);
        let tiny = DMatrix::from_diagonal(&DVector::from_column_slice(&[1.0, -1e-9]));
        assert!(psd_factor(&tiny).is_ok());
        let bad = DMatrix::from_diagonal(&DVector::from_column_slice(&[1.0, -1e-6]));
        assert!(matches!(
            psd_factor(&bad),
            Err(Error::FactorizationFailure(_))
        ));
    }

    fn grid_model(k: usize, eps: f64) -> LimitLawModel {
        let pts: Vec<f64> = (0..k).map(|i| (i as f64 + 0.5) / k as f64).collect();
        let m = DiscreteMeasure::uniform(1, pts).unwrap();
        let pr = QotProblem::new(m.clone(), m, eps).unwrap();
        let opts = SolveOptions::for_problem(&pr).tol(1e-13);
        let (pot, _) = solve_alternating(&pr, &opts).unwrap();
        LimitLawModel::build(pr, pot).unwrap()
    }

    #[test]
    fn model_on_sparse_grid() {
        let model = grid_model(16, 0.02);
        for r in 0..model.a_matrix.nrows() {
            assert!((model.a_matrix.row(r).sum() - 1.0).abs() < 1e-14);
        }
        let s = model.summary();
        assert!(s.inverse_residual <= INVERSE_RESIDUAL_TOL);
        assert!(s.cov_gq_eigen_range.0 >= -1e-10);
        let ones = vec![1.0; 16 * 16];
        assert!(coupling_functional_variance(&model, &ones).unwrap() < 1e-20);
        let zeros = vec![0.0; 16 * 16];
        assert_eq!(coupling_functional_variance(&model, &zeros).unwrap(), 0.0);
        let cov = potentials_limit_cov(&model, &[(3, 4), (8, 8)]).unwrap();
        assert!(cov[(0, 0)] > 0.0 && cov[(1, 1)] > 0.0);
    }

    #[test]
    fn limit_cov_gauge_invariant() {
        let model = grid_model(8, 0.05);
        let shifted =
            LimitLawModel::build(model.pop_problem.clone(), model.pop_pot.shifted(0.3)).unwrap();
        let pairs = [(0, 0), (2, 5), (7, 7)];
        let a = potentials_limit_cov(&model, &pairs).unwrap();
        let b = potentials_limit_cov(&shifted, &pairs).unwrap();
        assert!((a - b).amax() < 1e-12);
        let fixed = gauge_fix(&model.pop_pot, model.pop_problem.p(), model.pop_problem.q());
        assert!(
            (cost_variance_plugin(&model.pop_problem, &fixed) - model.cost_sigma2).abs() < 1e-15
        );
    }

    #[test]
    fn sampler_is_seeded() {
        let model = grid_model(8, 0.05);
        let a = sample_limit_gaussian(&model, &[(1, 1), (4, 6)], 9, 5).unwrap();
        let b = sample_limit_gaussian(&model, &[(1, 1), (4, 6)], 9, 5).unwrap();
        assert_eq!(a, b);
        let (pr, pot) = single();
        let m = LimitLawModel::build(pr, pot).unwrap();
        let d = sample_limit_gaussian(&m, &[(0, 0)], 1, 3).unwrap();
        assert!(d.iter().all(|v| v[0] == 0.0));
    }
}
