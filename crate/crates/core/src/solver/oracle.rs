//! Brute-force active-set enumeration for tiny instances.
//!
//! For every candidate support `S` of the `n × m` grid the first-order
//! conditions are linear in `(f, g)`. Each connected component of `S` (as a
//! bipartite graph on rows and columns) is solved separately; the relative
//! shifts between components are chosen with Bellman–Ford so that `ξ ≤ 0`
//! holds off the support. The first candidate with `ξ ≥ 0` on `S` and
//! `ξ ≤ 0` off `S` is returned.

use nalgebra::{DMatrix, DVector};

use super::{gauge_fix, PotentialPair, QotProblem};
use crate::error::{Error, Result};

/// Largest grid (`n·m`) the oracle enumerates.
pub const ORACLE_MAX_CELLS: usize = 12;

pub fn active_set_oracle(problem: &QotProblem) -> Result<PotentialPair> {
    let (n, m) = (problem.n(), problem.m());
    let cells = n * m;
    if cells > ORACLE_MAX_CELLS {
        return Err(Error::TooLarge {
            size: cells,
            cap: ORACLE_MAX_CELLS,
        });
    }
    let eps = problem.epsilon();
    let tol = 1e-10 * (1.0 + eps);
    let cost: Vec<f64> = (0..cells).map(|k| problem.cost(k / m, k % m)).collect();
    let p = problem.p().weights();
    let q = problem.q().weights();

    'masks: for mask in 1u32..(1u32 << cells) {
        let on = |i: usize, j: usize| mask & (1 << (i * m + j)) != 0;
        if (0..n).any(|i| (0..m).all(|j| !on(i, j))) || (0..m).any(|j| (0..n).all(|i| !on(i, j))) {
            continue;
        }
        // components over nodes 0..n (rows) and n..n+m (columns)
        let mut parent: Vec<usize> = (0..n + m).collect();
        fn find(parent: &mut [usize], mut a: usize) -> usize {
            while parent[a] != a {
                parent[a] = parent[parent[a]];
                a = parent[a];
            }
            a
        }
        for i in 0..n {
            for j in 0..m {
                if on(i, j) {
                    let (a, b) = (find(&mut parent, i), find(&mut parent, n + j));
                    parent[a] = b;
                }
            }
        }
        let roots: Vec<usize> = (0..n + m).map(|v| find(&mut parent, v)).collect();
        let mut labels: Vec<usize> = roots.clone();
        labels.sort_unstable();
        labels.dedup();
        let comp: Vec<usize> = roots
            .iter()
            .map(|r| labels.binary_search(r).unwrap())
            .collect();

        let mut f = vec![0.0; n];
        let mut g = vec![0.0; m];
        for c in 0..labels.len() {
            let rows: Vec<usize> = (0..n).filter(|&i| comp[i] == c).collect();
            let cols: Vec<usize> = (0..m).filter(|&j| comp[n + j] == c).collect();
            let mass_p: f64 = rows.iter().map(|&i| p[i]).sum();
            let mass_q: f64 = cols.iter().map(|&j| q[j]).sum();
            if (mass_p - mass_q).abs() > 1e-12 {
                continue 'masks;
            }
            let (nr, nc) = (rows.len(), cols.len());
            let size = nr + nc;
            let mut a = DMatrix::<f64>::zeros(size, size);
            let mut b = DVector::<f64>::zeros(size);
            for (r, &i) in rows.iter().enumerate() {
                b[r] = eps;
                for (s, &j) in cols.iter().enumerate() {
                    if on(i, j) {
                        a[(r, r)] += q[j];
                        a[(r, nr + s)] += q[j];
                        b[r] += q[j] * cost[i * m + j];
                    }
                }
            }
            // the last column equation is implied by the others plus mass balance
            for (s, &j) in cols.iter().enumerate().take(nc - 1) {
                let e = nr + s;
                b[e] = eps;
                for (r, &i) in rows.iter().enumerate() {
                    if on(i, j) {
                        a[(e, r)] += p[i];
                        a[(e, nr + s)] += p[i];
                        b[e] += p[i] * cost[i * m + j];
                    }
                }
            }
            let last = size - 1;
            for r in 0..nr {
                a[(last, r)] = 1.0;
            }
            for s in 0..nc {
                a[(last, nr + s)] = -1.0;
            }
            b[last] = 0.0;
            let Some(sol) = a.lu().solve(&b) else {
                continue 'masks;
            };
            if sol.iter().any(|v| !v.is_finite()) {
                continue 'masks;
            }
            let j_last = cols[nc - 1];
            let mut dropped = -eps;
            for (r, &i) in rows.iter().enumerate() {
                if on(i, j_last) {
                    dropped += p[i] * (sol[r] + sol[nr + nc - 1] - cost[i * m + j_last]);
                }
            }
            if dropped.abs() > tol {
                continue 'masks;
            }
            for (r, &i) in rows.iter().enumerate() {
                f[i] = sol[r];
            }
            for (s, &j) in cols.iter().enumerate() {
                g[j] = sol[nr + s];
            }
        }

        // offsets o_c: ξ(i,j) + o_comp(i) − o_comp(j) ≤ 0 off the support
        let k = labels.len();
        let mut off = vec![0.0f64; k];
        let mut edges = Vec::new();
        for i in 0..n {
            for j in 0..m {
                if on(i, j) {
                    continue;
                }
                let x = f[i] + g[j] - cost[i * m + j];
                let (ci, cj) = (comp[i], comp[n + j]);
                if ci == cj {
                    if x > tol {
                        continue 'masks;
                    }
                } else {
                    // o_ci − o_cj ≤ −x
                    edges.push((cj, ci, -x));
                }
            }
        }
        for _ in 0..k {
            let mut changed = false;
            for &(from, to, w) in &edges {
                if off[from] + w < off[to] {
                    off[to] = off[from] + w;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        for i in 0..n {
            f[i] += off[comp[i]];
        }
        for j in 0..m {
            g[j] -= off[comp[n + j]];
        }
        for i in 0..n {
            for j in 0..m {
                let x = f[i] + g[j] - cost[i * m + j];
                if (on(i, j) && x < -tol) || (!on(i, j) && x > tol) {
                    continue 'masks;
                }
            }
        }
        return Ok(gauge_fix(
            &PotentialPair::new(f, g),
            problem.p(),
            problem.q(),
        ));
    }
    Err(Error::NoConsistentActiveSet)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::DiscreteMeasure;

    fn line(points: &[f64], weights: &[f64]) -> DiscreteMeasure {
        DiscreteMeasure::from_flat(1, points.to_vec(), weights.to_vec()).unwrap()
    }

    #[test]
    fn single_atom() {
        let pr = QotProblem::new(line(&[0.0], &[1.0]), line(&[1.0], &[1.0]), 1.0).unwrap();
        let pot = active_set_oracle(&pr).unwrap();
        assert!((pot.f[0] + pot.g[0] - 1.5).abs() < 1e-14);
    }

    #[test]
    fn symmetric_two_by_two_is_diagonal() {
        let m = line(&[0.0, 1.0], &[0.5, 0.5]);
        let pr = QotProblem::new(m.clone(), m, 0.1).unwrap();
        let pot = active_set_oracle(&pr).unwrap();
        for v in pot.f.iter().chain(&pot.g) {
            assert!((v - 0.1).abs() < 1e-14, "{pot:?}");
        }
    }

    #[test]
    fn large_epsilon_is_full() {
        let m = line(&[0.0, 1.0], &[0.5, 0.5]);
        let pr = QotProblem::new(m.clone(), m, 10.0).unwrap();
        let pot = active_set_oracle(&pr).unwrap();
        assert!(pr.xi_matrix(&pot).iter().all(|&v| v > 0.0));
    }

    #[test]
    fn too_large() {
        let m = line(&[0.0, 1.0, 2.0, 3.0], &[0.25; 4]);
        let pr = QotProblem::new(m.clone(), m, 1.0).unwrap();
        assert!(matches!(
            active_set_oracle(&pr),
            Err(Error::TooLarge { .. })
        ));
    }
}
