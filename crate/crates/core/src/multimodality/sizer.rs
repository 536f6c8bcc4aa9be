use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::data::Sample;
use crate::density::INV_SQRT_2PI;
use crate::error::{ModalError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SizerState {
    Increasing,
    Decreasing,
    Inconclusive,
    Sparse,
}

/// Significance of the KDE slope over a location by bandwidth grid. Rows
/// follow `h_grid`, columns follow `x_grid`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizerMap {
    pub x_grid: Vec<f64>,
    pub h_grid: Vec<f64>,
    pub level: f64,
    pub z: f64,
    pub states: Vec<Vec<SizerState>>,
    pub derivative: Vec<Vec<f64>>,
    pub std_error: Vec<Vec<f64>>,
}

impl SizerMap {
    /// `(|x_grid|, |h_grid|)`.
    pub fn shape(&self) -> (usize, usize) {
        (self.x_grid.len(), self.h_grid.len())
    }

    pub fn state(&self, xi: usize, hi: usize) -> SizerState {
        self.states[hi][xi]
    }

    /// Significant modes in row `hi`: increasing runs later followed by a
    /// decreasing run, ignoring inconclusive and sparse cells between them.
    pub fn significant_modes(&self, hi: usize) -> usize {
        let mut count = 0;
        let mut rising = false;
        for s in &self.states[hi] {
            match s {
                SizerState::Increasing => rising = true,
                SizerState::Decreasing if rising => {
                    count += 1;
                    rising = false;
                }
                _ => {}
            }
        }
        count
    }
}

/// Sum with the positive and negative parts accumulated separately in order
/// of magnitude, so mirror-image inputs cancel exactly.
fn balanced_sum(v: &mut [f64]) -> f64 {
    v.sort_by(|a, b| a.abs().total_cmp(&b.abs()));
    let (mut pos, mut neg) = (0.0, 0.0);
    for x in v.iter() {
        if *x >= 0.0 {
            pos += x;
        } else {
            neg -= x;
        }
    }
    pos - neg
}

/// Pointwise SiZer: at each `(x, h)` the gaussian KDE derivative is compared
/// with `z` standard errors, `z` the two-sided normal quantile at `level`.
/// Cells whose effective sample size `n 2h f(x)` is below 5 are sparse.
pub fn sizer_map(s: &Sample, x_grid: &[f64], h_grid: &[f64], level: f64) -> Result<SizerMap> {
    let data = s.univariate_values()?;
    if !(level > 0.0 && level < 1.0) {
        return Err(ModalError::param("confidence level must lie in (0, 1)"));
    }
    if x_grid.is_empty() || h_grid.is_empty() {
        return Err(ModalError::param("location and bandwidth grids must be non-empty"));
    }
    if h_grid.iter().any(|h| !(*h > 0.0) || !h.is_finite()) || x_grid.iter().any(|x| !x.is_finite()) {
        return Err(ModalError::param("grid values must be finite with positive bandwidths"));
    }
    let z = Normal::new(0.0, 1.0).expect("standard normal").inverse_cdf(0.5 + 0.5 * level);
    let n = data.len() as f64;
    let mut states = Vec::with_capacity(h_grid.len());
    let mut derivative = Vec::with_capacity(h_grid.len());
    let mut std_error = Vec::with_capacity(h_grid.len());
    let mut terms = vec![0.0; data.len()];
    let mut dens = vec![0.0; data.len()];
    for &h in h_grid {
        let (mut srow, mut drow, mut erow) = (Vec::new(), Vec::new(), Vec::new());
        for &x in x_grid {
            for ((t, k), xi) in terms.iter_mut().zip(dens.iter_mut()).zip(data) {
                let u = (x - xi) / h;
                *k = INV_SQRT_2PI * (-0.5 * u * u).exp() / h;
                *t = -u / h * *k;
            }
            let f = dens.iter().sum::<f64>() / n;
            let d = balanced_sum(&mut terms.clone()) / n;
            let var = if data.len() > 1 {
                terms.iter().map(|t| (t - d) * (t - d)).sum::<f64>() / (n - 1.0)
            } else {
                0.0
            };
            let se = (var / n).sqrt();
            let state = if n * 2.0 * h * f < 5.0 {
                SizerState::Sparse
            } else if d > z * se {
                SizerState::Increasing
            } else if d < -z * se {
                SizerState::Decreasing
            } else {
                SizerState::Inconclusive
            };
            srow.push(state);
            drow.push(d);
            erow.push(se);
        }
        states.push(srow);
        derivative.push(drow);
        std_error.push(erow);
    }
    Ok(SizerMap {
        x_grid: x_grid.to_vec(),
        h_grid: h_grid.to_vec(),
        level,
        z,
        states,
        derivative,
        std_error,
    })
}
