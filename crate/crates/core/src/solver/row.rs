//! Exact scalar solves of the row first-order condition
//! `Σⱼ qⱼ (t − aⱼ)₊ = ε`, where `aⱼ = c(x, yⱼ) − gⱼ` are the hinge thresholds.
//!
//! The left side is continuous, convex, piecewise linear and strictly
//! increasing once it is positive, so the root is unique (also when it sits on
//! a breakpoint).

use crate::error::{Error, Result};

/// Breakpoint scan: sorts the thresholds, walks the prefix sums of `q` and
/// `q·a` and returns the root of the first linear piece that contains it.
///
/// `t` solves `Σⱼ qⱼ (t + gⱼ − c_rowⱼ)₊ = ε`.
pub fn coordinate_update_row(g: &[f64], q: &[f64], c_row: &[f64], epsilon: f64) -> Result<f64> {
    if !(epsilon > 0.0) {
        return Err(Error::NonpositiveEpsilon(epsilon));
    }
    if g.len() != q.len() || c_row.len() != q.len() {
        return Err(Error::DimensionMismatch {
            expected: q.len(),
            got: if g.len() != q.len() {
                g.len()
            } else {
                c_row.len()
            },
        });
    }
    let mut pairs: Vec<(f64, f64)> = c_row
        .iter()
        .zip(g)
        .zip(q)
        .filter(|(_, &w)| w > 0.0)
        .map(|((c, g), &w)| (c - g, w))
        .collect();
    if pairs.is_empty() {
        return Err(Error::InvalidArgument("row weights sum to zero".into()));
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut sq = 0.0;
    let mut sqa = 0.0;
    for k in 0..pairs.len() {
        sq += pairs[k].1;
        sqa += pairs[k].1 * pairs[k].0;
        let t = (epsilon + sqa) / sq;
        if k + 1 == pairs.len() || t <= pairs[k + 1].0 {
            return Ok(t);
        }
    }
    unreachable!("last piece always accepts")
}

/// Allocation-free solver used inside the sweeps.
///
/// Starts from the full active set and repeatedly solves the linear equation
/// on the current set, discarding thresholds at or above the candidate. Each
/// candidate bounds the root from above, so the discarded thresholds are
/// inactive at the root and the final candidate is the same closed form the
/// breakpoint scan produces. Usually one or two passes.
#[derive(Debug, Default, Clone)]
pub struct RowSolver {
    active: Vec<u32>,
}

impl RowSolver {
    pub fn new() -> Self {
        Self::default()
    }

    /// Root of `Σⱼ wⱼ (t − aⱼ)₊ = ε`; assumes `ε > 0` and positive weights.
    pub fn solve(&mut self, thresholds: &[f64], weights: &[f64], epsilon: f64) -> f64 {
        debug_assert_eq!(thresholds.len(), weights.len());
        let mut sq = 0.0;
        let mut sqa = 0.0;
        for (a, w) in thresholds.iter().zip(weights) {
            sq += w;
            sqa += w * a;
        }
        let mut t = (epsilon + sqa) / sq;
        // first pass without materializing the active list
        if thresholds.iter().all(|&a| a < t) {
            return t;
        }
        self.active.clear();
        self.active
            .extend((0..thresholds.len() as u32).filter(|&j| thresholds[j as usize] < t));
        loop {
            let mut sq = 0.0;
            let mut sqa = 0.0;
            for &j in &self.active {
                let j = j as usize;
                sq += weights[j];
                sqa += weights[j] * thresholds[j];
            }
            t = (epsilon + sqa) / sq;
            let before = self.active.len();
            self.active.retain(|&j| thresholds[j as usize] < t);
            if self.active.len() == before {
                return t;
            }
        }
    }
}
