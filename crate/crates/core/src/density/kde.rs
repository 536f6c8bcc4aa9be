use crate::data::Sample;
use crate::density::{check_dim, DensityModel, KernelSpec};
use crate::error::{ModalError, Result};

/// Product-kernel density estimate with one bandwidth per coordinate:
/// `f(x) = n^-1 sum_i prod_j K((x_j - X_ij) / h_j) / h_j`.
#[derive(Debug, Clone)]
pub struct KernelDensityModel {
    sample: Sample,
    bandwidth: Vec<f64>,
    kernel: KernelSpec,
    inv_bandwidth: Vec<f64>,
    norm: f64,
}

/// Normal-reference rule `h_j = s_j (4 / ((d + 2) n))^(1/(d+4))`, rescaled to
/// the kernel's canonical bandwidth for the uniform and Epanechnikov kernels.
pub fn normal_reference_bandwidth(sample: &Sample, kernel: KernelSpec) -> Result<Vec<f64>> {
    let n = sample.len() as f64;
    let d = sample.dim() as f64;
    if sample.len() < 2 {
        return Err(ModalError::param(
            "normal-reference bandwidth needs at least two points",
        ));
    }
    let factor = (4.0 / ((d + 2.0) * n)).powf(1.0 / (d + 4.0));
    let canonical = match kernel {
        KernelSpec::Gaussian => 1.0,
        KernelSpec::Uniform => 1.740_2,
        KernelSpec::Epanechnikov => 2.214_5,
    };
    sample
        .variance()
        .iter()
        .enumerate()
        .map(|(j, v)| {
            if *v > 0.0 {
                Ok(canonical * factor * v.sqrt())
            } else {
                Err(ModalError::param(format!(
                    "coordinate {j} has zero spread; pass an explicit bandwidth"
                )))
            }
        })
        .collect()
}

impl KernelDensityModel {
    /// A single bandwidth value is broadcast to every coordinate.
    pub fn new(sample: Sample, bandwidth: Vec<f64>, kernel: KernelSpec) -> Result<Self> {
        let d = sample.dim();
        let bandwidth = match bandwidth.len() {
            1 => vec![bandwidth[0]; d],
            k if k == d => bandwidth,
            k => {
                return Err(ModalError::DimensionMismatch {
                    expected: d,
                    found: k,
                })
            }
        };
        if let Some(h) = bandwidth.iter().find(|h| !(**h > 0.0) || !h.is_finite()) {
            return Err(ModalError::param(format!("bandwidth must be positive, got {h}")));
        }
        let inv_bandwidth = bandwidth.iter().map(|h| 1.0 / h).collect();
        let norm = 1.0 / (sample.len() as f64 * bandwidth.iter().product::<f64>());
        Ok(KernelDensityModel {
            sample,
            bandwidth,
            kernel,
            inv_bandwidth,
            norm,
        })
    }

    pub fn with_normal_reference(sample: Sample, kernel: KernelSpec) -> Result<Self> {
        let h = normal_reference_bandwidth(&sample, kernel)?;
        Self::new(sample, h, kernel)
    }

    pub fn sample(&self) -> &Sample {
        &self.sample
    }

    pub fn bandwidth(&self) -> &[f64] {
        &self.bandwidth
    }

    pub fn kernel(&self) -> KernelSpec {
        self.kernel
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.sample.dim(), x)?;
        let d = x.len();
        let sum = match (self.kernel, d) {
            (KernelSpec::Gaussian, 1) => {
                let (x0, ih) = (x[0], self.inv_bandwidth[0]);
                self.sample
                    .as_flat()
                    .iter()
                    .map(|xi| {
                        let u = (x0 - xi) * ih;
                        (-0.5 * u * u).exp()
                    })
                    .sum::<f64>()
                    * super::INV_SQRT_2PI
            }
            (KernelSpec::Gaussian, _) => {
                let c = super::INV_SQRT_2PI.powi(d as i32);
                self.sample
                    .points()
                    .map(|p| (-0.5 * self.sq_dist(x, p)).exp())
                    .sum::<f64>()
                    * c
            }
            (k, _) => self
                .sample
                .points()
                .map(|p| {
                    p.iter()
                        .zip(x)
                        .zip(&self.inv_bandwidth)
                        .map(|((pi, xi), ih)| k.eval((xi - pi) * ih))
                        .product::<f64>()
                })
                .sum(),
        };
        Ok(sum * self.norm)
    }

    pub fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.sample.dim(), x)?;
        let d = x.len();
        let mut g = vec![0.0; d];
        match self.kernel {
            KernelSpec::Uniform => {
                return Err(ModalError::Unsupported(
                    "the uniform kernel has no usable gradient".into(),
                ))
            }
            KernelSpec::Gaussian => {
                let c = super::INV_SQRT_2PI.powi(d as i32);
                for p in self.sample.points() {
                    let w = (-0.5 * self.sq_dist(x, p)).exp();
                    for j in 0..d {
                        g[j] -= w * (x[j] - p[j]) * self.inv_bandwidth[j] * self.inv_bandwidth[j];
                    }
                }
                g.iter_mut().for_each(|v| *v *= c);
            }
            k @ KernelSpec::Epanechnikov => {
                let mut vals = vec![0.0; d];
                for p in self.sample.points() {
                    for j in 0..d {
                        vals[j] = k.eval((x[j] - p[j]) * self.inv_bandwidth[j]);
                    }
                    for j in 0..d {
                        let u = (x[j] - p[j]) * self.inv_bandwidth[j];
                        let mut term = k.derivative(u).unwrap_or(0.0) * self.inv_bandwidth[j];
                        if term == 0.0 {
                            continue;
                        }
                        for (l, v) in vals.iter().enumerate() {
                            if l != j {
                                term *= v;
                            }
                        }
                        g[j] += term;
                    }
                }
            }
        }
        g.iter_mut().for_each(|v| *v *= self.norm);
        Ok(g)
    }

    /// Gaussian mean-shift update: the kernel-weighted average of the sample.
    pub fn mean_shift_step(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.sample.dim(), x)?;
        if self.kernel != KernelSpec::Gaussian {
            return Err(ModalError::Unsupported(
                "mean shift is implemented for the gaussian kernel".into(),
            ));
        }
        let exps: Vec<f64> = self
            .sample
            .points()
            .map(|p| -0.5 * self.sq_dist(x, p))
            .collect();
        let top = exps.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut num = vec![0.0; x.len()];
        let mut den = 0.0;
        for (e, p) in exps.iter().zip(self.sample.points()) {
            let w = (e - top).exp();
            den += w;
            for (acc, v) in num.iter_mut().zip(p) {
                *acc += w * v;
            }
        }
        Ok(num.into_iter().map(|v| v / den).collect())
    }

    #[inline]
    fn sq_dist(&self, x: &[f64], p: &[f64]) -> f64 {
        x.iter()
            .zip(p)
            .zip(&self.inv_bandwidth)
            .map(|((a, b), ih)| {
                let u = (a - b) * ih;
                u * u
            })
            .sum()
    }
}

impl DensityModel for KernelDensityModel {
    fn dim(&self) -> usize {
        self.sample.dim()
    }

    fn density(&self, x: &[f64]) -> Result<f64> {
        self.eval(x)
    }

    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        KernelDensityModel::gradient(self, x)
    }

    fn has_gradient(&self) -> bool {
        self.kernel.is_differentiable()
    }

    fn scale(&self) -> f64 {
        self.bandwidth.iter().copied().fold(f64::INFINITY, f64::min)
    }

    fn support(&self) -> Vec<(f64, f64)> {
        self.sample
            .bounds()
            .into_iter()
            .zip(&self.bandwidth)
            .map(|((lo, hi), h)| (lo - 3.0 * h, hi + 3.0 * h))
            .collect()
    }

    fn mean_shift(&self, x: &[f64]) -> Option<Result<Vec<f64>>> {
        (self.kernel == KernelSpec::Gaussian).then(|| self.mean_shift_step(x))
    }

    fn gaussian_1d(&self) -> Option<(&[f64], f64)> {
        (self.kernel == KernelSpec::Gaussian && self.sample.dim() == 1)
            .then(|| (self.sample.as_flat(), self.bandwidth[0]))
    }
}

pub fn kde_eval(m: &KernelDensityModel, x: &[f64]) -> Result<f64> {
    m.eval(x)
}

pub fn kde_gradient(m: &KernelDensityModel, x: &[f64]) -> Result<Vec<f64>> {
    m.gradient(x)
}
