//! Conditional modes of Y given X from a product gaussian kernel estimate,
//! traced over a covariate grid, with a local-linear mean baseline.

mod curves;
mod local_linear;

pub use curves::{modal_regression_curves, Branch, BranchPoint, ModalCurveSet};
pub use local_linear::local_linear_regression;

use serde::{Deserialize, Serialize};

use crate::data::Sample;
use crate::density::{WeightedGaussian1d, INV_SQRT_2PI};
use crate::error::{ModalError, Result};

/// Number of weighted-quantile starts for the mode search in y.
const STARTS: usize = 50;

/// Joint sample of `(X, Y)` with a gaussian product kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalModel {
    x: Vec<f64>,
    y: Vec<f64>,
    hx: f64,
    hy: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionalMode {
    pub y: f64,
    /// Estimated conditional density of Y at `y` given the covariate.
    pub density: f64,
}

/// Kernel weights in x of the observations that matter at one covariate value.
struct Local {
    y: Vec<f64>,
    w: Vec<f64>,
    sum: f64,
}

impl ConditionalModel {
    /// First column of `s` is the covariate, second the response.
    pub fn new(s: &Sample, hx: f64, hy: f64) -> Result<Self> {
        if s.dim() != 2 {
            return Err(ModalError::DimensionMismatch { expected: 2, found: s.dim() });
        }
        if !(hx > 0.0 && hy > 0.0 && hx.is_finite() && hy.is_finite()) {
            return Err(ModalError::param("bandwidths must be positive and finite"));
        }
        Ok(ConditionalModel { x: s.column(0), y: s.column(1), hx, hy })
    }

    pub fn bandwidths(&self) -> (f64, f64) {
        (self.hx, self.hy)
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn covariates(&self) -> &[f64] {
        &self.x
    }

    pub fn responses(&self) -> &[f64] {
        &self.y
    }

    /// Weights below 1e-16 of the largest are dropped.
    fn local(&self, x: f64) -> Local {
        let raw: Vec<f64> = self
            .x
            .iter()
            .map(|xi| {
                let u = (x - xi) / self.hx;
                (-0.5 * u * u).exp()
            })
            .collect();
        let cut = 1e-16 * raw.iter().copied().fold(0.0, f64::max);
        let (mut y, mut w) = (Vec::new(), Vec::new());
        for (wi, yi) in raw.iter().zip(&self.y) {
            if *wi > cut {
                y.push(*yi);
                w.push(*wi);
            }
        }
        let sum = w.iter().sum();
        Local { y, w, sum }
    }

    /// `sum_i K_hx(x - X_i)`.
    pub fn local_weight(&self, x: f64) -> f64 {
        self.local(x).sum * INV_SQRT_2PI / self.hx
    }

    fn check_sparse(&self, x: f64, loc: &Local) -> Result<()> {
        let weight = loc.sum * INV_SQRT_2PI / self.hx;
        let required = 5.0 * INV_SQRT_2PI / self.hx;
        if !(weight > required) {
            return Err(ModalError::Sparse { x, weight, required });
        }
        Ok(())
    }

    fn density_from(&self, loc: &Local, y: f64) -> f64 {
        WeightedGaussian1d::new(&loc.y, Some(&loc.w), self.hy).value(y) * INV_SQRT_2PI / (self.hy * loc.sum)
    }

    /// Kernel estimate of the density of Y at `y` given `X = x`.
    pub fn conditional_density(&self, x: f64, y: f64) -> Result<f64> {
        let loc = self.local(x);
        self.check_sparse(x, &loc)?;
        Ok(self.density_from(&loc, y))
    }
}

/// Every local maximum in y of the conditional density estimate at `x`,
/// increasing in y. Starts are weighted quantiles of the responses; terminals
/// within `1e-3 h_y` are one mode.
pub fn conditional_modes(m: &ConditionalModel, x: f64) -> Result<Vec<ConditionalMode>> {
    if !x.is_finite() {
        return Err(ModalError::NonFinite("covariate value".into()));
    }
    let loc = m.local(x);
    m.check_sparse(x, &loc)?;
    let mut order: Vec<usize> = (0..loc.y.len()).collect();
    order.sort_by(|&a, &b| loc.y[a].total_cmp(&loc.y[b]));
    let mut starts = Vec::with_capacity(STARTS);
    let mut acc = 0.0;
    let mut next = 0;
    for &i in &order {
        acc += loc.w[i];
        while next < STARTS && acc >= (next as f64 + 0.5) / STARTS as f64 * loc.sum {
            if starts.last() != Some(&loc.y[i]) {
                starts.push(loc.y[i]);
            }
            next += 1;
        }
    }
    let g = WeightedGaussian1d::new(&loc.y, Some(&loc.w), m.hy);
    let mut found: Vec<(f64, f64)> = starts
        .iter()
        .map(|s| g.climb(*s, 1e-9 * m.hy, 2000))
        .filter(|c| c.is_max)
        .map(|c| (c.location, c.value))
        .collect();
    if found.is_empty() {
        return Err(ModalError::NoConvergentStart { x });
    }
    found.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut groups: Vec<(f64, f64)> = Vec::new();
    for (y, v) in found {
        match groups.last_mut() {
            Some(last) if y - last.0 <= 1e-3 * m.hy => {
                if v > last.1 {
                    *last = (y, v);
                }
            }
            _ => groups.push((y, v)),
        }
    }
    Ok(groups
        .into_iter()
        .map(|(y, _)| ConditionalMode { y, density: m.density_from(&loc, y) })
        .collect())
}
