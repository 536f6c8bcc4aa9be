use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::ModalError;

pub(crate) const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Univariate kernel families; multivariate models use their product.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelSpec {
    Gaussian,
    /// Density 1/2 on [-1, 1].
    Uniform,
    /// 3/4 (1 - u^2) on [-1, 1].
    Epanechnikov,
}

/// `R(K')` and `mu_2(K)` for a kernel family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelFunctionals {
    /// Integral of the squared kernel derivative.
    pub r_kprime: f64,
    /// Second moment of the kernel.
    pub mu2: f64,
}

impl KernelSpec {
    #[inline]
    pub fn eval(self, u: f64) -> f64 {
        match self {
            KernelSpec::Gaussian => INV_SQRT_2PI * (-0.5 * u * u).exp(),
            KernelSpec::Uniform => {
                if u.abs() <= 1.0 {
                    0.5
                } else {
                    0.0
                }
            }
            KernelSpec::Epanechnikov => {
                if u.abs() <= 1.0 {
                    0.75 * (1.0 - u * u)
                } else {
                    0.0
                }
            }
        }
    }

    /// Derivative `K'(u)`; `None` for the uniform kernel.
    #[inline]
    pub fn derivative(self, u: f64) -> Option<f64> {
        match self {
            KernelSpec::Gaussian => Some(-u * INV_SQRT_2PI * (-0.5 * u * u).exp()),
            KernelSpec::Uniform => None,
            KernelSpec::Epanechnikov => Some(if u.abs() < 1.0 { -1.5 * u } else { 0.0 }),
        }
    }

    pub fn is_differentiable(self) -> bool {
        !matches!(self, KernelSpec::Uniform)
    }

    /// Radius beyond which the kernel is zero, or numerically negligible
    /// (below 1e-16 of its peak) for the Gaussian.
    pub fn support_radius(self) -> f64 {
        match self {
            KernelSpec::Gaussian => 8.6,
            _ => 1.0,
        }
    }

    pub fn functionals(self) -> KernelFunctionals {
        kernel_functionals(self)
    }
}

/// Closed-form kernel functionals.
pub fn kernel_functionals(kernel: KernelSpec) -> KernelFunctionals {
    match kernel {
        KernelSpec::Gaussian => KernelFunctionals {
            r_kprime: 1.0 / (4.0 * PI.sqrt()),
            mu2: 1.0,
        },
        // K' vanishes almost everywhere
        KernelSpec::Uniform => KernelFunctionals {
            r_kprime: 0.0,
            mu2: 1.0 / 3.0,
        },
        KernelSpec::Epanechnikov => KernelFunctionals {
            r_kprime: 1.5,
            mu2: 0.2,
        },
    }
}

impl fmt::Display for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            KernelSpec::Gaussian => "gaussian",
            KernelSpec::Uniform => "uniform",
            KernelSpec::Epanechnikov => "epanechnikov",
        })
    }
}

impl FromStr for KernelSpec {
    type Err = ModalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "gaussian" | "normal" => Ok(KernelSpec::Gaussian),
            "uniform" | "box" => Ok(KernelSpec::Uniform),
            "epanechnikov" => Ok(KernelSpec::Epanechnikov),
            other => Err(ModalError::param(format!("unknown kernel '{other}'"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Composite Simpson rule on [a, b] with `m` (even) panels.
    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, m: usize) -> f64 {
        let h = (b - a) / m as f64;
        let mut s = f(a) + f(b);
        for i in 1..m {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * f(a + h * i as f64);
        }
        s * h / 3.0
    }

    const ALL: [KernelSpec; 3] = [KernelSpec::Gaussian, KernelSpec::Uniform, KernelSpec::Epanechnikov];

    #[test]
    fn kernels_integrate_to_one() {
        for k in ALL {
            // compact kernels integrated piecewise so the jump at +-1 sits on a node
            let total = match k {
                KernelSpec::Gaussian => simpson(|u| k.eval(u), -12.0, 12.0, 20_000),
                _ => simpson(|u| k.eval(u), -1.0, 1.0, 20_000),
            };
            assert!((total - 1.0).abs() <= 1e-8, "{k}: {total}");
        }
    }

    #[test]
    fn functionals_match_quadrature() {
        for k in [KernelSpec::Gaussian, KernelSpec::Epanechnikov] {
            let (a, b) = if k == KernelSpec::Gaussian { (-12.0, 12.0) } else { (-1.0, 1.0) };
            let mu2 = simpson(|u| u * u * k.eval(u), a, b, 20_000);
            // pull the endpoints inside so the one-sided limit of K' is used
            let r = simpson(|u| k.derivative(u * (1.0 - 1e-15)).unwrap().powi(2), a, b, 20_000);
            let f = kernel_functionals(k);
            assert!((f.mu2 - mu2).abs() < 1e-9, "{k} mu2 {mu2}");
            assert!((f.r_kprime - r).abs() < 1e-9, "{k} R {r}");
        }
        let g = kernel_functionals(KernelSpec::Gaussian);
        assert!((g.r_kprime - 0.141_047).abs() < 1e-6);
        assert_eq!(g.mu2, 1.0);
        let u = kernel_functionals(KernelSpec::Uniform);
        assert_eq!(u.r_kprime, 0.0);
        assert!((u.mu2 - 1.0 / 3.0).abs() < 1e-15);
        assert!((kernel_functionals(KernelSpec::Epanechnikov).mu2 - 0.2).abs() < 1e-15);
        let mu2 = simpson(|u| u * u * 0.5, -1.0, 1.0, 2000);
        assert!((mu2 - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn parse_round_trip() {
        for k in ALL {
            assert_eq!(k.to_string().parse::<KernelSpec>().unwrap(), k);
        }
        assert!("cosine".parse::<KernelSpec>().is_err());
    }
}
