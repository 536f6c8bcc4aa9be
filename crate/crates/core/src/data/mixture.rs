use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::data::{Sample, SeedSpec};
use crate::error::{ModalError, Result};

/// Finite Gaussian mixture `sum_l w_l N(mean_l, cov_l)`.
///
/// Covariances are stored as nested rows (row-major `d x d`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureSpec {
    pub weights: Vec<f64>,
    pub means: Vec<Vec<f64>>,
    pub covariances: Vec<Vec<Vec<f64>>>,
}

/// Draws together with the index of the generating component.
#[derive(Debug, Clone)]
pub struct LabeledSample {
    pub sample: Sample,
    pub labels: Vec<usize>,
}

impl MixtureSpec {
    /// One-dimensional mixture from weights, means and standard deviations.
    pub fn univariate(weights: &[f64], means: &[f64], sds: &[f64]) -> Result<Self> {
        if weights.len() != means.len() || weights.len() != sds.len() {
            return Err(ModalError::InvalidMixture(
                "weights, means and sds differ in length".into(),
            ));
        }
        let spec = MixtureSpec {
            weights: weights.to_vec(),
            means: means.iter().map(|&m| vec![m]).collect(),
            covariances: sds.iter().map(|&s| vec![vec![s * s]]).collect(),
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Mixture of isotropic Gaussians `N(mean_l, sd_l^2 I)`.
    pub fn spherical(weights: &[f64], means: &[Vec<f64>], sds: &[f64]) -> Result<Self> {
        if weights.len() != means.len() || weights.len() != sds.len() {
            return Err(ModalError::InvalidMixture(
                "weights, means and sds differ in length".into(),
            ));
        }
        let covariances = means
            .iter()
            .zip(sds)
            .map(|(m, s)| {
                let d = m.len();
                (0..d)
                    .map(|i| (0..d).map(|j| if i == j { s * s } else { 0.0 }).collect())
                    .collect()
            })
            .collect();
        let spec = MixtureSpec {
            weights: weights.to_vec(),
            means: means.to_vec(),
            covariances,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Named presets: `gauss` (standard normal), `mw3` (Marron & Wand's
    /// strongly skewed density #3) and `trimodal-sep8` (three unit-variance
    /// bivariate normals on an equilateral triangle of side 8).
    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "gauss" => Self::univariate(&[1.0], &[0.0], &[1.0]),
            "mw3" => {
                // sum_{l=0}^{7} 1/8 N(3((2/3)^l - 1), (2/3)^{2l})
                let r: Vec<f64> = (0..8).map(|l| (2.0f64 / 3.0).powi(l)).collect();
                let means: Vec<f64> = r.iter().map(|q| 3.0 * (q - 1.0)).collect();
                Self::univariate(&[0.125; 8], &means, &r)
            }
            "trimodal-sep8" => {
                let h = 8.0 * 3f64.sqrt() / 2.0;
                Self::spherical(
                    &[1.0 / 3.0; 3],
                    &[vec![0.0, 0.0], vec![8.0, 0.0], vec![4.0, h]],
                    &[1.0; 3],
                )
            }
            other => Err(ModalError::param(format!(
                "unknown preset '{other}' (expected gauss, mw3 or trimodal-sep8)"
            ))),
        }
    }

    pub fn components(&self) -> usize {
        self.weights.len()
    }

    pub fn dim(&self) -> usize {
        self.means.first().map_or(0, Vec::len)
    }

    /// Checks weights (positive, summing to one within 1e-12), shapes, and
    /// symmetric positive-definite covariances.
    pub fn validate(&self) -> Result<()> {
        let l = self.weights.len();
        if l == 0 {
            return Err(ModalError::InvalidMixture("no components".into()));
        }
        if self.means.len() != l || self.covariances.len() != l {
            return Err(ModalError::InvalidMixture(format!(
                "{l} weights but {} means and {} covariances",
                self.means.len(),
                self.covariances.len()
            )));
        }
        if let Some(w) = self.weights.iter().find(|w| !(**w > 0.0) || !w.is_finite()) {
            return Err(ModalError::InvalidMixture(format!(
                "weights must be strictly positive, found {w}"
            )));
        }
        let total: f64 = self.weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(ModalError::InvalidMixture(format!(
                "weights sum to {total}, not 1"
            )));
        }
        let d = self.dim();
        if d == 0 {
            return Err(ModalError::InvalidMixture("zero-dimensional means".into()));
        }
        for (k, (m, c)) in self.means.iter().zip(&self.covariances).enumerate() {
            if m.len() != d || c.len() != d || c.iter().any(|row| row.len() != d) {
                return Err(ModalError::InvalidMixture(format!(
                    "component {k} does not have dimension {d}"
                )));
            }
            if m.iter().chain(c.iter().flatten()).any(|v| !v.is_finite()) {
                return Err(ModalError::InvalidMixture(format!(
                    "component {k} has non-finite parameters"
                )));
            }
            let scale = c.iter().enumerate().map(|(i, r)| r[i].abs()).fold(0.0, f64::max);
            for i in 0..d {
                for j in 0..i {
                    if (c[i][j] - c[j][i]).abs() > 1e-12 * scale.max(1.0) {
                        return Err(ModalError::InvalidMixture(format!(
                            "covariance {k} is not symmetric"
                        )));
                    }
                }
            }
            let min_eig = covariance_matrix(c).symmetric_eigenvalues().min();
            if !(min_eig > 0.0) {
                return Err(ModalError::InvalidMixture(format!(
                    "covariance {k} is not positive definite (min eigenvalue {min_eig})"
                )));
            }
        }
        Ok(())
    }

    pub fn mean(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.dim()];
        for (w, mu) in self.weights.iter().zip(&self.means) {
            for (acc, v) in m.iter_mut().zip(mu) {
                *acc += w * v;
            }
        }
        m
    }

    /// Total covariance `sum w (S + mu mu^T) - mean mean^T`.
    pub fn covariance(&self) -> Vec<Vec<f64>> {
        let d = self.dim();
        let m = self.mean();
        let mut out = vec![vec![0.0; d]; d];
        for ((w, mu), s) in self.weights.iter().zip(&self.means).zip(&self.covariances) {
            for i in 0..d {
                for j in 0..d {
                    out[i][j] += w * (s[i][j] + mu[i] * mu[j]);
                }
            }
        }
        for i in 0..d {
            for j in 0..d {
                out[i][j] -= m[i] * m[j];
            }
        }
        out
    }

    /// For `dim == 1`: the density and its first three derivatives at `x`.
    pub fn univariate_derivatives(&self, x: f64) -> Result<[f64; 4]> {
        self.require_univariate()?;
        let mut out = [0.0; 4];
        for ((w, mu), c) in self.weights.iter().zip(&self.means).zip(&self.covariances) {
            let s = c[0][0].sqrt();
            let z = (x - mu[0]) / s;
            let phi = (-0.5 * z * z).exp() / (s * (2.0 * std::f64::consts::PI).sqrt());
            out[0] += w * phi;
            out[1] += w * phi * (-z / s);
            out[2] += w * phi * (z * z - 1.0) / (s * s);
            out[3] += w * phi * (3.0 * z - z * z * z) / (s * s * s);
        }
        Ok(out)
    }

    /// Global mode of a univariate mixture: dense grid search followed by
    /// Newton polishing on the first derivative.
    pub fn univariate_mode(&self) -> Result<f64> {
        self.require_univariate()?;
        let sds: Vec<f64> = self.covariances.iter().map(|c| c[0][0].sqrt()).collect();
        let lo = self
            .means
            .iter()
            .zip(&sds)
            .map(|(m, s)| m[0] - 4.0 * s)
            .fold(f64::INFINITY, f64::min);
        let hi = self
            .means
            .iter()
            .zip(&sds)
            .map(|(m, s)| m[0] + 4.0 * s)
            .fold(f64::NEG_INFINITY, f64::max);
        let min_sd = sds.iter().copied().fold(f64::INFINITY, f64::min);
        let nodes = (((hi - lo) / (min_sd / 50.0)).ceil() as usize).clamp(2001, 2_000_001);
        let step = (hi - lo) / (nodes - 1) as f64;
        let mut best = (lo, f64::NEG_INFINITY);
        for i in 0..nodes {
            let x = lo + step * i as f64;
            let f = self.univariate_derivatives(x)?[0];
            if f > best.1 {
                best = (x, f);
            }
        }
        let mut x = best.0;
        for _ in 0..50 {
            let d = self.univariate_derivatives(x)?;
            if !(d[2] < 0.0) {
                break;
            }
            let next = x - d[1] / d[2];
            if (next - x).abs() > step {
                break;
            }
            let done = (next - x).abs() <= 1e-15 * (1.0 + x.abs());
            x = next;
            if done {
                break;
            }
        }
        Ok(x)
    }

    fn require_univariate(&self) -> Result<()> {
        if self.dim() != 1 {
            return Err(ModalError::DimensionMismatch {
                expected: 1,
                found: self.dim(),
            });
        }
        Ok(())
    }
}

pub(crate) fn covariance_matrix(c: &[Vec<f64>]) -> DMatrix<f64> {
    let d = c.len();
    DMatrix::from_fn(d, d, |i, j| c[i][j])
}

/// Draws `n` i.i.d. points: a component index by weight, then a Gaussian
/// draw from that component.
pub fn sample_mixture(spec: &MixtureSpec, n: usize, seed: SeedSpec) -> Result<LabeledSample> {
    spec.validate()?;
    if n == 0 {
        return Err(ModalError::param("sample size must be at least 1"));
    }
    let d = spec.dim();
    let factors = spec
        .covariances
        .iter()
        .map(|c| {
            covariance_matrix(c)
                .cholesky()
                .map(|ch| ch.l())
                .ok_or_else(|| ModalError::InvalidMixture("covariance not positive definite".into()))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut cumulative = Vec::with_capacity(spec.components());
    let mut acc = 0.0;
    for w in &spec.weights {
        acc += w;
        cumulative.push(acc);
    }

    let mut rng = seed.rng();
    let mut data = Vec::with_capacity(n * d);
    let mut labels = Vec::with_capacity(n);
    let mut z = DVector::zeros(d);
    for _ in 0..n {
        let u: f64 = rng.gen::<f64>() * acc;
        let k = cumulative
            .iter()
            .position(|&c| u < c)
            .unwrap_or(spec.components() - 1);
        for zi in z.iter_mut() {
            *zi = rng.sample(StandardNormal);
        }
        let x = &factors[k] * &z;
        data.extend(spec.means[k].iter().zip(x.iter()).map(|(m, v)| m + v));
        labels.push(k);
    }
    let sample = Sample::from_flat(data, d, format!("mixture(seed={}, stream={})", seed.seed, seed.stream_id))?;
    Ok(LabeledSample { sample, labels })
}
