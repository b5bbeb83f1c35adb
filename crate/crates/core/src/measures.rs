//! Finitely supported probability measures, midpoint quadrature grids for
//! box populations, and i.i.d. empirical sampling.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, StreamRng};

/// Absolute tolerance on the total mass of a measure.
pub const WEIGHT_SUM_TOL: f64 = 1e-12;

/// Default cap on the number of quadrature atoms.
pub const DEFAULT_GRID_CAP: usize = 1_000_000;

/// Support points (row-major, `dim` coordinates each) with probability weights.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure {
    points: Vec<f64>,
    weights: Vec<f64>,
    dim: usize,
}

impl DiscreteMeasure {
    /// Builds a measure from one coordinate vector per atom.
    pub fn new(points: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        let dim = points.first().map(Vec::len).ok_or(Error::EmptyMeasure)?;
        if points.len() != weights.len() {
            return Err(Error::LengthMismatch {
                points: points.len(),
                weights: weights.len(),
            });
        }
        let mut flat = Vec::with_capacity(points.len() * dim);
        for p in &points {
            if p.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: p.len(),
                });
            }
            flat.extend_from_slice(p);
        }
        Self::from_flat(dim, flat, weights)
    }

    /// Builds a measure from a flat row-major coordinate buffer.
    pub fn from_flat(dim: usize, points: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        validate_measure(DiscreteMeasure {
            points,
            weights,
            dim,
        })
    }

    /// Equal weights `1/len` on the given atoms.
    pub fn uniform(dim: usize, points: Vec<f64>) -> Result<Self> {
        if dim == 0 || !points.len().is_multiple_of(dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: points.len(),
            });
        }
        let n = points.len() / dim;
        if n == 0 {
            return Err(Error::EmptyMeasure);
        }
        Self::from_flat(dim, points, vec![1.0 / n as f64; n])
    }

    /// Single atom of unit mass.
    pub fn dirac(point: Vec<f64>) -> Result<Self> {
        Self::new(vec![point], vec![1.0])
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points_flat(&self) -> &[f64] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.points.chunks_exact(self.dim)
    }

    /// Weighted mean of the support points.
    pub fn mean(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.dim];
        for (x, &w) in self.points().zip(&self.weights) {
            for (mk, xk) in m.iter_mut().zip(x) {
                *mk += w * xk;
            }
        }
        m
    }

    /// Removes atoms of zero weight. Returns the kept original indices.
    pub fn drop_null_atoms(&self) -> (DiscreteMeasure, Vec<usize>) {
        let keep: Vec<usize> = (0..self.len()).filter(|&i| self.weights[i] > 0.0).collect();
        if keep.len() == self.len() {
            return (self.clone(), keep);
        }
        let mut points = Vec::with_capacity(keep.len() * self.dim);
        let mut weights = Vec::with_capacity(keep.len());
        for &i in &keep {
            points.extend_from_slice(self.point(i));
            weights.push(self.weights[i]);
        }
        (
            DiscreteMeasure {
                points,
                weights,
                dim: self.dim,
            },
            keep,
        )
    }

    /// Merges atoms with bitwise identical coordinates, keeping the order of
    /// first appearance. The result is the same measure with fewer atoms.
    pub fn merge_duplicates(&self) -> DiscreteMeasure {
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by(|&a, &b| {
            let (pa, pb) = (self.point(a), self.point(b));
            pa.iter()
                .zip(pb)
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.cmp(&b))
        });
        // representative (first index) for each atom
        let mut rep = vec![0usize; self.len()];
        let mut k = 0;
        while k < order.len() {
            let first = order[k];
            let mut end = k;
            while end < order.len() && self.point(order[end]) == self.point(first) {
                rep[order[end]] = first;
                end += 1;
            }
            k = end;
        }
        let mut slot = vec![usize::MAX; self.len()];
        let mut points = Vec::new();
        let mut weights: Vec<f64> = Vec::new();
        for i in 0..self.len() {
            let r = rep[i];
            if slot[r] == usize::MAX {
                slot[r] = weights.len();
                points.extend_from_slice(self.point(r));
                weights.push(0.0);
            }
            weights[slot[r]] += self.weights[i];
        }
        DiscreteMeasure {
            points,
            weights,
            dim: self.dim,
        }
    }

    /// Translates every support point by `shift`.
    pub fn translated(&self, shift: &[f64]) -> Result<DiscreteMeasure> {
        if shift.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: shift.len(),
            });
        }
        let mut points = self.points.clone();
        for x in points.chunks_exact_mut(self.dim) {
            for (xk, s) in x.iter_mut().zip(shift) {
                *xk += s;
            }
        }
        Ok(DiscreteMeasure {
            points,
            weights: self.weights.clone(),
            dim: self.dim,
        })
    }
}

/// Neumaier-compensated sum.
pub(crate) fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut c = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            c += (sum - t) + v;
        } else {
            c += (v - t) + sum;
        }
        sum = t;
    }
    sum + c
}

/// Checks the measure invariants and hands the measure back unchanged.
pub fn validate_measure(m: DiscreteMeasure) -> Result<DiscreteMeasure> {
    if m.dim == 0 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            got: 0,
        });
    }
    if m.weights.is_empty() {
        return Err(Error::EmptyMeasure);
    }
    if m.points.len() != m.weights.len() * m.dim {
        if !m.points.len().is_multiple_of(m.dim) {
            return Err(Error::DimensionMismatch {
                expected: m.dim,
                got: m.points.len() % m.dim,
            });
        }
        return Err(Error::LengthMismatch {
            points: m.points.len() / m.dim,
            weights: m.weights.len(),
        });
    }
    if m.points.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("support points"));
    }
    for (index, &weight) in m.weights.iter().enumerate() {
        if !weight.is_finite() {
            return Err(Error::NonFinite("weights"));
        }
        if weight < 0.0 {
            return Err(Error::NegativeWeight { index, weight });
        }
    }
    let sum = compensated_sum(m.weights.iter().copied());
    if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
        return Err(Error::WeightSumMismatch { sum });
    }
    Ok(m)
}

/// A population family used by the experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DomainSpec {
    /// Uniform distribution on the box `[lower, upper]`.
    UniformBox { lower: Vec<f64>, upper: Vec<f64> },
    /// An explicit finitely supported population.
    Explicit {
        #[serde(with = "measure_serde")]
        measure: DiscreteMeasure,
    },
}

impl DomainSpec {
    pub fn uniform_box(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        let spec = DomainSpec::UniformBox { lower, upper };
        spec.validate()?;
        Ok(spec)
    }

    pub fn unit_interval() -> Self {
        DomainSpec::UniformBox {
            lower: vec![0.0],
            upper: vec![1.0],
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            DomainSpec::UniformBox { lower, .. } => lower.len(),
            DomainSpec::Explicit { measure } => measure.dim(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            DomainSpec::UniformBox { lower, upper } => {
                if lower.is_empty() || lower.len() != upper.len() {
                    return Err(Error::InvalidDomain(format!(
                        "box bounds have lengths {} and {}",
                        lower.len(),
                        upper.len()
                    )));
                }
                if lower.iter().chain(upper).any(|v| !v.is_finite()) {
                    return Err(Error::NonFinite("box bounds"));
                }
                if lower.iter().zip(upper).any(|(l, u)| l >= u) {
                    return Err(Error::InvalidDomain(
                        "box needs lower < upper in every coordinate".into(),
                    ));
                }
                Ok(())
            }
            DomainSpec::Explicit { measure } => validate_measure(measure.clone()).map(|_| ()),
        }
    }
}

mod measure_serde {
    use super::DiscreteMeasure;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    struct Raw {
        points: Vec<Vec<f64>>,
        weights: Vec<f64>,
    }

    pub fn serialize<S: Serializer>(m: &DiscreteMeasure, s: S) -> Result<S::Ok, S::Error> {
        Raw {
            points: m.points().map(<[f64]>::to_vec).collect(),
            weights: m.weights().to_vec(),
        }
        .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DiscreteMeasure, D::Error> {
        let raw = Raw::deserialize(d)?;
        DiscreteMeasure::new(raw.points, raw.weights).map_err(serde::de::Error::custom)
    }
}

/// Midpoint-rule grid with `m_per_axis` cells per axis, ordered
/// lexicographically with the first axis varying slowest.
pub fn quadrature_grid(spec: &DomainSpec, m_per_axis: usize) -> Result<DiscreteMeasure> {
    quadrature_grid_with_cap(spec, m_per_axis, DEFAULT_GRID_CAP)
}

pub fn quadrature_grid_with_cap(
    spec: &DomainSpec,
    m_per_axis: usize,
    cap: usize,
) -> Result<DiscreteMeasure> {
    let (lower, upper) = match spec {
        DomainSpec::UniformBox { lower, upper } => (lower, upper),
        DomainSpec::Explicit { .. } => {
            return Err(Error::InvalidDomain(
                "quadrature grids need a uniform box".into(),
            ))
        }
    };
    spec.validate()?;
    if m_per_axis == 0 {
        return Err(Error::InvalidArgument("m_per_axis must be positive".into()));
    }
    let d = lower.len();
    let total = (0..d).try_fold(1usize, |acc, _| acc.checked_mul(m_per_axis));
    let total = match total {
        Some(t) if t <= cap => t,
        _ => {
            return Err(Error::TooLarge {
                size: total.unwrap_or(usize::MAX),
                cap,
            })
        }
    };
    let axes: Vec<Vec<f64>> = (0..d)
        .map(|k| {
            let h = (upper[k] - lower[k]) / m_per_axis as f64;
            (0..m_per_axis)
                .map(|c| lower[k] + (c as f64 + 0.5) * h)
                .collect()
        })
        .collect();
    let mut points = Vec::with_capacity(total * d);
    let mut idx = vec![0usize; d];
    for _ in 0..total {
        for k in 0..d {
            points.push(axes[k][idx[k]]);
        }
        for k in (0..d).rev() {
            idx[k] += 1;
            if idx[k] < m_per_axis {
                break;
            }
            idx[k] = 0;
        }
    }
    let w = 1.0 / total as f64;
    DiscreteMeasure::from_flat(d, points, vec![w; total])
}

/// Source of i.i.d. draws: a continuous box or a discrete measure.
#[derive(Debug, Clone, Copy)]
pub enum Source<'a> {
    Domain(&'a DomainSpec),
    Measure(&'a DiscreteMeasure),
}

impl<'a> From<&'a DomainSpec> for Source<'a> {
    fn from(d: &'a DomainSpec) -> Self {
        match d {
            DomainSpec::Explicit { measure } => Source::Measure(measure),
            other => Source::Domain(other),
        }
    }
}

impl<'a> From<&'a DiscreteMeasure> for Source<'a> {
    fn from(m: &'a DiscreteMeasure) -> Self {
        Source::Measure(m)
    }
}

/// Empirical measure of `n` i.i.d. draws, stream 0 of `seed`.
pub fn sample_empirical<'a>(
    source: impl Into<Source<'a>>,
    n: usize,
    seed: u64,
) -> Result<DiscreteMeasure> {
    let mut rng = rng::stream(seed, 0);
    sample_empirical_with(source.into(), n, &mut rng)
}

/// Empirical measure of `n` i.i.d. draws from an explicit stream.
pub fn sample_empirical_with(
    source: Source<'_>,
    n: usize,
    rng: &mut StreamRng,
) -> Result<DiscreteMeasure> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "sample size must be positive".into(),
        ));
    }
    match source {
        Source::Domain(DomainSpec::UniformBox { lower, upper }) => {
            source_domain_check(lower, upper)?;
            let d = lower.len();
            let mut points = Vec::with_capacity(n * d);
            for _ in 0..n {
                for k in 0..d {
                    let u: f64 = rng.random();
                    points.push(lower[k] + (upper[k] - lower[k]) * u);
                }
            }
            DiscreteMeasure::uniform(d, points)
        }
        Source::Domain(DomainSpec::Explicit { measure }) | Source::Measure(measure) => {
            let mut cdf = Vec::with_capacity(measure.len());
            let mut acc = 0.0;
            for &w in measure.weights() {
                acc += w;
                cdf.push(acc);
            }
            let d = measure.dim();
            let mut points = Vec::with_capacity(n * d);
            for _ in 0..n {
                let u: f64 = rng.random::<f64>() * acc;
                let k = cdf.partition_point(|&c| c <= u).min(measure.len() - 1);
                // skip zero-weight atoms sitting on the same cdf value
                let k = (k..measure.len())
                    .find(|&j| measure.weight(j) > 0.0)
                    .unwrap_or(k);
                points.extend_from_slice(measure.point(k));
            }
            DiscreteMeasure::uniform(d, points)
        }
    }
}

fn source_domain_check(lower: &[f64], upper: &[f64]) -> Result<()> {
    DomainSpec::UniformBox {
        lower: lower.to_vec(),
        upper: upper.to_vec(),
    }
    .validate()
}
