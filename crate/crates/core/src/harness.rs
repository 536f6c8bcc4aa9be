//! Monte Carlo checks of mode-estimator convergence rates.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{sample_mixture, MixtureSpec, SeedSpec};
use crate::density::{kernel_functionals, KernelDensityModel, KernelSpec};
use crate::error::{ModalError, Result};
use crate::estimators::{kernel_mode, DirectConfig, DirectMethod, GridSearch};

pub const MIN_REPLICATES: usize = 50;

/// Estimator whose error is simulated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum RateEstimator {
    /// Kernel mode with bandwidth `h = c n^-exponent`.
    Kernel { kernel: KernelSpec, c: f64, exponent: f64 },
    /// A direct estimator with fixed tuning.
    Direct { method: DirectMethod, config: DirectConfig },
}

impl RateEstimator {
    /// Gaussian kernel with `h = n^(-1/7)`.
    pub fn romano() -> Self {
        RateEstimator::Kernel { kernel: KernelSpec::Gaussian, c: 1.0, exponent: 1.0 / 7.0 }
    }

    pub fn bandwidth(&self, n: usize) -> Option<f64> {
        match self {
            RateEstimator::Kernel { c, exponent, .. } => Some(c * (n as f64).powf(-exponent)),
            RateEstimator::Direct { .. } => None,
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            RateEstimator::Kernel { kernel, c, exponent } => {
                if !kernel.is_differentiable() {
                    return Err(ModalError::Unsupported("kernel mode needs a differentiable kernel".into()));
                }
                if !(*c > 0.0 && c.is_finite() && *exponent > 0.0 && *exponent < 1.0) {
                    return Err(ModalError::param("bandwidth rule needs c > 0 and exponent in (0, 1)"));
                }
                Ok(())
            }
            RateEstimator::Direct { config, .. } => config.validate(),
        }
    }

    fn estimate(&self, s: crate::data::Sample) -> Result<f64> {
        match self {
            RateEstimator::Kernel { kernel, .. } => {
                let h = self.bandwidth(s.len()).expect("kernel estimators have a bandwidth");
                let m = KernelDensityModel::new(s, vec![h], *kernel)?;
                Ok(kernel_mode(&m, &GridSearch::default())?.location[0])
            }
            RateEstimator::Direct { method, config } => Ok(config.estimate(*method, &s)?.location),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub estimator: RateEstimator,
    pub distribution: String,
    pub mode: f64,
    pub seed: u64,
    pub replicates: usize,
    pub n_grid: Vec<usize>,
    pub rmse: Vec<f64>,
    pub bias: Vec<f64>,
    /// Replicates that failed and were left out, per n.
    pub failures: Vec<usize>,
    /// Least-squares slope of log RMSE on log n.
    pub slope: f64,
    /// Absent with only two sample sizes.
    pub slope_std_error: Option<f64>,
    pub theoretical_slope: Option<f64>,
    /// Asymptotic variance and bias of `(n h^3)^(1/2) (theta_hat - theta)`.
    pub v_k2: Option<f64>,
    pub b_k: Option<f64>,
}

/// Threads from `MODAL_THREADS` when set to a positive integer.
fn pool() -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(t) = std::env::var("MODAL_THREADS").ok().and_then(|v| v.trim().parse::<usize>().ok()) {
        if t > 0 {
            b = b.num_threads(t);
        }
    }
    b.build().map_err(|e| ModalError::param(format!("thread pool: {e}")))
}

fn mode_of(spec: &MixtureSpec) -> Result<f64> {
    if spec.dim() != 1 {
        return Err(ModalError::DimensionMismatch { expected: 1, found: spec.dim() });
    }
    spec.univariate_mode()
}

/// Replicate `r` at sample size `n` draws from its own stream, so results do
/// not depend on thread count or on the other sample sizes simulated.
fn replicate_seed(seed: u64, n: usize, r: usize) -> SeedSpec {
    SeedSpec::with_stream(SeedSpec::new(seed).child(n as u64).seed, r as u64)
}

fn run_replicates(est: &RateEstimator, spec: &MixtureSpec, theta: f64, n: usize, replicates: usize, seed: u64) -> Result<(Vec<f64>, usize)> {
    let outcomes: Vec<Result<f64>> = pool()?.install(|| {
        (0..replicates)
            .into_par_iter()
            .map(|r| {
                let s = sample_mixture(spec, n, replicate_seed(seed, n, r))?.sample;
                est.estimate(s).map(|t| t - theta)
            })
            .collect()
    });
    let mut errors = Vec::with_capacity(replicates);
    let mut first = None;
    let mut failed = 0;
    for o in outcomes {
        match o {
            Ok(e) if e.is_finite() => errors.push(e),
            Ok(_) => {
                failed += 1;
                first.get_or_insert_with(|| "non-finite estimate".to_string());
            }
            Err(e) => {
                failed += 1;
                first.get_or_insert_with(|| e.to_string());
            }
        }
    }
    if failed * 100 > replicates {
        return Err(ModalError::TooManyFailures { n, failed, total: replicates, first: first.unwrap_or_default() });
    }
    Ok((errors, failed))
}

/// Errors `theta_hat - theta` of `replicates` independent estimates at size `n`.
pub fn replicate_errors(est: &RateEstimator, spec: &MixtureSpec, n: usize, replicates: usize, seed: u64) -> Result<Vec<f64>> {
    est.validate()?;
    if n < 2 || replicates == 0 {
        return Err(ModalError::param("need n >= 2 and at least one replicate"));
    }
    let theta = mode_of(spec)?;
    Ok(run_replicates(est, spec, theta, n, replicates, seed)?.0)
}

/// RMSE of `est` on draws from `spec` across `n_grid`, with the fitted
/// log-log slope and, for kernel estimators, the asymptotic constants.
pub fn simulate_rate(
    est: &RateEstimator,
    spec: &MixtureSpec,
    distribution: &str,
    n_grid: &[usize],
    replicates: usize,
    seed: u64,
) -> Result<RateReport> {
    est.validate()?;
    if n_grid.len() < 2 || n_grid[0] < 2 || n_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(ModalError::param("sample sizes must be at least two, strictly increasing, all >= 2"));
    }
    if replicates < MIN_REPLICATES {
        return Err(ModalError::param(format!("at least {MIN_REPLICATES} replicates are required")));
    }
    let theta = mode_of(spec)?;
    let (mut rmse, mut bias, mut failures) = (Vec::new(), Vec::new(), Vec::new());
    for &n in n_grid {
        let (errs, failed) = run_replicates(est, spec, theta, n, replicates, seed)?;
        let k = errs.len() as f64;
        rmse.push((errs.iter().map(|e| e * e).sum::<f64>() / k).sqrt());
        bias.push(errs.iter().sum::<f64>() / k);
        failures.push(failed);
    }
    if rmse.iter().any(|r| !(*r > 0.0)) {
        return Err(ModalError::param("estimator is exact at some n; slope undefined"));
    }
    let xs: Vec<f64> = n_grid.iter().map(|n| (*n as f64).ln()).collect();
    let ys: Vec<f64> = rmse.iter().map(|r| r.ln()).collect();
    let (slope, slope_std_error) = ols_slope(&xs, &ys);

    let (mut theoretical_slope, mut v_k2, mut b_k) = (None, None, None);
    if let RateEstimator::Kernel { kernel, c, exponent } = *est {
        let [f, _, f2, f3] = spec.univariate_derivatives(theta)?;
        let kf = kernel_functionals(kernel);
        // variance part decays as (n h^3)^(-1/2), bias part as h^2
        theoretical_slope = Some((-(1.0 - 3.0 * exponent) / 2.0).max(-2.0 * exponent));
        v_k2 = Some(f / (f2 * f2) * kf.r_kprime);
        b_k = Some(0.5 * c.powf(3.5) * f3 / f2 * kf.mu2);
    }
    Ok(RateReport {
        estimator: *est,
        distribution: distribution.to_string(),
        mode: theta,
        seed,
        replicates,
        n_grid: n_grid.to_vec(),
        rmse,
        bias,
        failures,
        slope,
        slope_std_error,
        theoretical_slope,
        v_k2,
        b_k,
    })
}

fn ols_slope(xs: &[f64], ys: &[f64]) -> (f64, Option<f64>) {
    let k = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / k, ys.iter().sum::<f64>() / k);
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let b = sxy / sxx;
    if xs.len() < 3 {
        return (b, None);
    }
    let ssr: f64 = xs.iter().zip(ys).map(|(x, y)| (y - my - b * (x - mx)).powi(2)).sum();
    (b, Some((ssr / (k - 2.0) / sxx).sqrt()))
}
