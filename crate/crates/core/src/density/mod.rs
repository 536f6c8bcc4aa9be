//! Evaluable density estimators behind a common interface.

mod climb;
mod gmm;
mod kde;
mod kernel;
mod knn;

pub(crate) use climb::WeightedGaussian1d;
pub use gmm::{
    fit_gmm_em, fit_gmm_em_with, parameter_count, select_gmm_bic, EmConfig, GaussianMixtureModel,
    MixtureDensity,
};
pub use kde::{kde_eval, kde_gradient, normal_reference_bandwidth, KernelDensityModel};
pub use kernel::{kernel_functionals, KernelFunctionals, KernelSpec};
pub(crate) use kernel::INV_SQRT_2PI;
pub use knn::{nn_density_eval, unit_ball_volume, NearestNeighborModel};

use crate::error::{ModalError, Result};

/// A density on `R^d` that can be evaluated pointwise, and optionally
/// differentiated.
pub trait DensityModel: Send + Sync {
    fn dim(&self) -> usize;

    fn density(&self, x: &[f64]) -> Result<f64>;

    fn gradient(&self, _x: &[f64]) -> Result<Vec<f64>> {
        Err(ModalError::Unsupported(
            "this density model has no gradient".into(),
        ))
    }

    fn has_gradient(&self) -> bool {
        false
    }

    /// Smallest smoothing length (bandwidth, or component standard deviation).
    fn scale(&self) -> f64;

    /// Box holding essentially all of the mass: data range padded by three
    /// bandwidths, or component means padded by three standard deviations.
    fn support(&self) -> Vec<(f64, f64)>;

    /// Mean-shift fixed-point update, for models that have one.
    fn mean_shift(&self, _x: &[f64]) -> Option<Result<Vec<f64>>> {
        None
    }

    /// Data and bandwidth when this is a 1-d gaussian KDE, which has a
    /// faster mode climber.
    #[doc(hidden)]
    fn gaussian_1d(&self) -> Option<(&[f64], f64)> {
        None
    }
}

pub(crate) fn check_dim(expected: usize, x: &[f64]) -> Result<()> {
    if x.len() != expected {
        return Err(ModalError::DimensionMismatch {
            expected,
            found: x.len(),
        });
    }
    Ok(())
}
