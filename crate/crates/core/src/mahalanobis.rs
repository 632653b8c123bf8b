//! Squared Mahalanobis abnormality scores.
//!
//! For feature rows `x_t` with sample mean `μ` and covariance `Σ`
//! (normalized by `1/(n−1)`), the abnormality of row `t` is
//!
//! ```text
//! d_t = (x_t − μ)ᵀ (Σ + ε·I)⁻¹ (x_t − μ)
//! ```
//!
//! with no square root taken. `ε` is the smallest value from an escalating
//! schedule for which `Σ + ε·I` admits a Cholesky factor; positional density
//! covariances are frequently singular, so `ε = 0` is tried first and the
//! shrinkage actually applied is recorded alongside the scores.
//!
//! The inverse is never formed: each score is `‖L⁻¹(x_t − μ)‖²` where
//! `L Lᵀ = Σ + ε·I`.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use crate::error::{Error, Result};
use crate::exec::{map_indexed, tree_reduce, Executor};
use crate::featurize::FeatureMatrix;
use crate::linalg::Cholesky;

/// Rows accumulated serially inside one leaf of the reduction tree.
const MOMENT_BLOCK: usize = 256;
const SCORE_BLOCK: usize = 64;

/// Mean vector and covariance of a feature matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentModel {
    mean: Vec<f64>,
    covariance: Vec<f64>,
    samples: usize,
    dim: usize,
}

impl MomentModel {
    /// Wraps precomputed moments (e.g. read back from disk).
    pub fn from_parts(mean: Vec<f64>, covariance: Vec<f64>, samples: usize) -> Result<Self> {
        let dim = mean.len();
        if covariance.len() != dim * dim {
            return Err(Error::Bounds {
                expected: dim * dim,
                found: covariance.len(),
            });
        }
        Ok(MomentModel {
            mean,
            covariance,
            samples,
            dim,
        })
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    /// Row-major `dim × dim` covariance.
    pub fn covariance(&self) -> &[f64] {
        &self.covariance
    }

    pub fn samples(&self) -> usize {
        self.samples
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.covariance[i * self.dim + i]).sum()
    }
}

/// Shrinkage schedule: `0`, then `base · growth^k` for `k = 0..=max_power`
/// where `base = base_factor · trace(Σ) / d`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct EpsilonPolicy {
    pub try_zero: bool,
    pub base_factor: f64,
    pub growth: f64,
    pub max_power: u32,
}

impl Default for EpsilonPolicy {
    fn default() -> Self {
        EpsilonPolicy {
            try_zero: true,
            base_factor: 1e-8,
            growth: 10.0,
            max_power: 8,
        }
    }
}

impl EpsilonPolicy {
    pub fn schedule(&self, trace: f64, dim: usize) -> Vec<f64> {
        let base = self.base_factor * trace / dim.max(1) as f64;
        let mut out = Vec::with_capacity(self.max_power as usize + 2);
        if self.try_zero {
            out.push(0.0);
        }
        let mut eps = base;
        for _ in 0..=self.max_power {
            out.push(eps);
            eps *= self.growth;
        }
        out
    }
}

/// Moments together with the Cholesky factor of `Σ + ε·I`.
#[derive(Debug, Clone, PartialEq)]
pub struct FactoredModel {
    moments: MomentModel,
    epsilon: f64,
    factor: Cholesky,
}

impl FactoredModel {
    /// Reassembles a model from stored parts (no refactorization).
    pub fn from_parts(moments: MomentModel, epsilon: f64, factor: Cholesky) -> Result<Self> {
        if factor.dim() != moments.dim() {
            return Err(Error::Bounds {
                expected: moments.dim(),
                found: factor.dim(),
            });
        }
        Ok(FactoredModel {
            moments,
            epsilon,
            factor,
        })
    }

    pub fn moments(&self) -> &MomentModel {
        &self.moments
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn factor(&self) -> &Cholesky {
        &self.factor
    }

    pub fn dim(&self) -> usize {
        self.moments.dim
    }
}

/// Abnormality scores aligned with corpus ordinals.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreVector {
    pub scores: Vec<f64>,
    /// Shrinkage in effect when the scores were computed.
    pub epsilon: f64,
}

impl ScoreVector {
    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn mean(&self) -> f64 {
        if self.scores.is_empty() {
            return 0.0;
        }
        self.scores.iter().sum::<f64>() / self.scores.len() as f64
    }
}

fn add_into(mut left: Vec<f64>, right: Vec<f64>) -> Vec<f64> {
    left.iter_mut().zip(&right).for_each(|(a, b)| *a += b);
    left
}

/// Two-pass mean and `1/(n−1)` covariance over the rows of `matrix`.
///
/// Each pass reduces fixed 256-row blocks pairwise, so the result does not
/// depend on the executor.
pub fn fit_moments<E: Executor + ?Sized>(exec: &E, matrix: &FeatureMatrix) -> Result<MomentModel> {
    let n = matrix.rows();
    let d = matrix.cols();
    if n < 2 {
        return Err(Error::Fit(alloc::format!(
            "covariance needs at least 2 examples, got {n}"
        )));
    }
    if matrix.values().iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("feature matrix contains non-finite values".into()));
    }

    // sums are taken relative to the first row, so constant columns get an exact mean
    let shift = matrix.row(0);
    let shifted_sums = tree_reduce(
        exec,
        n,
        MOMENT_BLOCK,
        &|rows: Range<usize>| {
            let mut acc = vec![0.0; d];
            for t in rows {
                acc.iter_mut()
                    .zip(matrix.row(t).iter().zip(shift))
                    .for_each(|(a, (x, s))| *a += x - s);
            }
            acc
        },
        &add_into,
    )
    .unwrap_or_default();
    let mean: Vec<f64> = shifted_sums
        .iter()
        .zip(shift)
        .map(|(s, x0)| x0 + s / n as f64)
        .collect();

    // upper triangle of Σ_t (x_t − μ)(x_t − μ)ᵀ
    let scatter = tree_reduce(
        exec,
        n,
        MOMENT_BLOCK,
        &|rows: Range<usize>| {
            let mut acc = vec![0.0; d * d];
            let mut dev = vec![0.0; d];
            for t in rows {
                dev.iter_mut()
                    .zip(matrix.row(t).iter().zip(&mean))
                    .for_each(|(z, (x, m))| *z = x - m);
                for i in 0..d {
                    let a = dev[i];
                    if a == 0.0 {
                        continue;
                    }
                    acc[i * d + i..(i + 1) * d]
                        .iter_mut()
                        .zip(&dev[i..])
                        .for_each(|(s, b)| *s += a * b);
                }
            }
            acc
        },
        &add_into,
    )
    .unwrap_or_default();

    let norm = 1.0 / (n - 1) as f64;
    let mut covariance = vec![0.0; d * d];
    for i in 0..d {
        for j in i..d {
            let v = scatter[i * d + j] * norm;
            covariance[i * d + j] = v;
            covariance[j * d + i] = v;
        }
    }
    Ok(MomentModel {
        mean,
        covariance,
        samples: n,
        dim: d,
    })
}

/// Factors `Σ + ε·I` for the first `ε` in the policy's schedule that yields
/// a positive definite matrix.
pub fn regularized_factorize(model: MomentModel, policy: &EpsilonPolicy) -> Result<FactoredModel> {
    let schedule = policy.schedule(model.trace(), model.dim);
    let mut last = 0.0;
    for &eps in &schedule {
        last = eps;
        if let Some(factor) = Cholesky::factor(&model.covariance, model.dim, eps) {
            return Ok(FactoredModel {
                moments: model,
                epsilon: eps,
                factor,
            });
        }
    }
    Err(Error::Singular { last_epsilon: last })
}

/// Squared Mahalanobis distance of one row from the model mean.
pub fn score(model: &FactoredModel, row: &[f64]) -> Result<f64> {
    let d = model.dim();
    if row.len() != d {
        return Err(Error::Bounds {
            expected: d,
            found: row.len(),
        });
    }
    if row.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("feature row contains non-finite values".into()));
    }
    let dev: Vec<f64> = row.iter().zip(&model.moments.mean).map(|(x, m)| x - m).collect();
    Ok(model.factor.quadratic_form(dev).max(0.0))
}

/// Scores every row of `matrix`.
pub fn score_all<E: Executor + ?Sized>(
    exec: &E,
    model: &FactoredModel,
    matrix: &FeatureMatrix,
) -> Result<ScoreVector> {
    if matrix.cols() != model.dim() {
        return Err(Error::Bounds {
            expected: model.dim(),
            found: matrix.cols(),
        });
    }
    let scores = map_indexed(exec, matrix.rows(), SCORE_BLOCK, &|t| score(model, matrix.row(t)))
        .into_iter()
        .collect::<Result<Vec<f64>>>()?;
    Ok(ScoreVector {
        scores,
        epsilon: model.epsilon,
    })
}
