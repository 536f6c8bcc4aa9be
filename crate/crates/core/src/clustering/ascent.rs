use serde::{Deserialize, Serialize};

use crate::density::{DensityModel, WeightedGaussian1d};
use crate::error::{ModalError, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AscentConfig {
    /// Stop once a step is shorter than `tolerance * model.scale()`.
    pub tolerance: f64,
    pub max_iter: usize,
    /// Keep every iterate in `AscentPath::steps`.
    pub record_steps: bool,
}

impl Default for AscentConfig {
    fn default() -> Self {
        AscentConfig {
            tolerance: 1e-8,
            max_iter: 2000,
            record_steps: true,
        }
    }
}

/// A discretised gradient-flow trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AscentPath {
    pub origin: Vec<f64>,
    pub steps: Vec<Vec<f64>>,
    pub terminal: Vec<f64>,
    pub density: f64,
    pub iterations: usize,
    pub converged: bool,
    /// The terminal is stationary but not a local maximum.
    pub saddle: bool,
}

impl AscentPath {
    /// Converged onto a proper local maximum.
    pub fn reached_mode(&self) -> bool {
        self.converged && !self.saddle
    }
}

/// Follows the density upwards from `x`.
///
/// Models with a mean-shift update (gaussian KDE) iterate it directly.
/// Others take `x + t s^2 grad f / f` with `s` the model scale, halving `t`
/// until the density does not drop.
pub fn ascent_path(model: &dyn DensityModel, x: &[f64], cfg: &AscentConfig) -> Result<AscentPath> {
    if x.len() != model.dim() {
        return Err(ModalError::DimensionMismatch {
            expected: model.dim(),
            found: x.len(),
        });
    }
    if !model.has_gradient() {
        return Err(ModalError::Unsupported("ascent needs a differentiable density".into()));
    }
    let scale = model.scale();
    let tol = cfg.tolerance * scale;
    let mut cur = x.to_vec();
    let mut f = model.density(&cur)?;
    let mut steps = Vec::new();
    let mut iterations = 0;
    let mut converged = false;
    while iterations < cfg.max_iter {
        let next = match model.mean_shift(&cur) {
            Some(ms) => ms?,
            None => match line_step(model, &cur, f, scale)? {
                Some(p) => p,
                None => {
                    converged = true;
                    break;
                }
            },
        };
        if next.iter().any(|v| !v.is_finite()) {
            return Err(ModalError::NonFinite("ascent iterate".into()));
        }
        iterations += 1;
        let step = dist(&cur, &next);
        cur = next;
        f = model.density(&cur)?;
        if cfg.record_steps {
            steps.push(cur.clone());
        }
        if step <= tol {
            converged = true;
            break;
        }
    }
    let saddle = converged && !is_local_max(model, &cur, f, 1e-3 * scale)?;
    Ok(AscentPath {
        origin: x.to_vec(),
        steps,
        terminal: cur,
        density: f,
        iterations,
        converged,
        saddle,
    })
}

/// Where an ascent from `x` ends, without recording the path. A 1-d
/// gaussian KDE takes the Newton-accelerated climber.
pub(crate) fn climb_to_mode(model: &dyn DensityModel, x: &[f64], cfg: &AscentConfig) -> Result<AscentPath> {
    if let Some((data, h)) = model.gaussian_1d() {
        if x.len() != 1 {
            return Err(ModalError::DimensionMismatch { expected: 1, found: x.len() });
        }
        let c = WeightedGaussian1d::new(data, None, h).climb(x[0], cfg.tolerance * h, cfg.max_iter);
        let terminal = vec![c.location];
        return Ok(AscentPath {
            origin: x.to_vec(),
            steps: Vec::new(),
            density: model.density(&terminal)?,
            terminal,
            iterations: c.iterations,
            converged: c.converged,
            saddle: c.converged && !c.is_max,
        });
    }
    ascent_path(model, x, &AscentConfig { record_steps: false, ..*cfg })
}

/// One backtracking step, or `None` when no ascent is possible.
fn line_step(model: &dyn DensityModel, x: &[f64], f: f64, scale: f64) -> Result<Option<Vec<f64>>> {
    let g = model.gradient(x)?;
    if g.iter().any(|v| !v.is_finite()) {
        return Err(ModalError::NonFinite("density gradient".into()));
    }
    if !(f > 0.0) || g.iter().all(|v| *v == 0.0) {
        return Ok(None);
    }
    let dir: Vec<f64> = g.iter().map(|v| scale * scale * v / f).collect();
    let mut t = 1.0;
    for _ in 0..60 {
        let cand: Vec<f64> = x.iter().zip(&dir).map(|(a, d)| a + t * d).collect();
        if model.density(&cand)? >= f {
            return Ok(Some(cand));
        }
        t *= 0.5;
    }
    Ok(None)
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Second-difference check along coordinate axes and diagonals.
pub(crate) fn is_local_max(model: &dyn DensityModel, x: &[f64], f: f64, delta: f64) -> Result<bool> {
    let d = x.len();
    let mut dirs: Vec<Vec<f64>> = Vec::new();
    for i in 0..d {
        let mut e = vec![0.0; d];
        e[i] = 1.0;
        dirs.push(e);
        for j in i + 1..d {
            for s in [1.0, -1.0] {
                let mut e = vec![0.0; d];
                e[i] = std::f64::consts::FRAC_1_SQRT_2;
                e[j] = s * std::f64::consts::FRAC_1_SQRT_2;
                dirs.push(e);
            }
        }
    }
    for e in dirs {
        let plus: Vec<f64> = x.iter().zip(&e).map(|(a, b)| a + delta * b).collect();
        let minus: Vec<f64> = x.iter().zip(&e).map(|(a, b)| a - delta * b).collect();
        let (fp, fm) = (model.density(&plus)?, model.density(&minus)?);
        if fp > f || fm > f || fp + fm - 2.0 * f >= 0.0 {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{MixtureSpec, Sample};
    use crate::density::{KernelDensityModel, KernelSpec, MixtureDensity};

    fn kde(v: &[f64], h: f64) -> KernelDensityModel {
        KernelDensityModel::new(Sample::univariate(v.to_vec()).unwrap(), vec![h], KernelSpec::Gaussian).unwrap()
    }

    #[test]
    fn single_point_basin() {
        let m = kde(&[0.0], 1.0);
        for s in [-3.0, 0.5, 7.0] {
            let p = ascent_path(&m, &[s], &AscentConfig::default()).unwrap();
            assert!(p.reached_mode());
            assert!(p.terminal[0].abs() < 1e-12);
        }
    }

    #[test]
    fn symmetric_midpoint_is_flagged() {
        let m = kde(&[-1.0, 1.0], 0.3);
        let p = ascent_path(&m, &[0.0], &AscentConfig::default()).unwrap();
        assert!(p.converged && p.saddle);
        assert_eq!(p.terminal[0], 0.0);
    }

    #[test]
    fn right_mode_matches_dense_grid() {
        let m = kde(&[-1.0, 1.0], 0.3);
        let p = ascent_path(&m, &[0.9], &AscentConfig::default()).unwrap();
        let mut best = (0.0, f64::NEG_INFINITY);
        let mut y = 0.0;
        while y < 2.0 {
            let v = m.eval(&[y]).unwrap();
            if v > best.1 {
                best = (y, v);
            }
            y += 1e-6;
        }
        assert!(p.reached_mode());
        assert!((p.terminal[0] - best.0).abs() < 1e-4);
    }

    #[test]
    fn density_never_drops_along_mean_shift() {
        let s = Sample::from_points(&[vec![0.0, 0.0], vec![1.0, 0.2], vec![0.3, 1.1], vec![3.0, 3.0]]).unwrap();
        let m = KernelDensityModel::new(s, vec![0.6, 0.8], KernelSpec::Gaussian).unwrap();
        let p = ascent_path(&m, &[2.0, 1.5], &AscentConfig::default()).unwrap();
        let mut prev = m.eval(&p.origin).unwrap();
        for x in &p.steps {
            let v = m.eval(x).unwrap();
            assert!(v >= prev - 1e-12);
            prev = v;
        }
        let again = ascent_path(&m, &p.terminal, &AscentConfig::default()).unwrap();
        assert!(dist(&again.terminal, &p.terminal) < 1e-8 * 0.6);
    }

    #[test]
    fn mixture_backtracking_ascent() {
        let spec = MixtureSpec::univariate(&[0.5, 0.5], &[0.0, 6.0], &[1.0, 0.5]).unwrap();
        let m = MixtureDensity::new(spec).unwrap();
        let p = ascent_path(&m, &[4.0], &AscentConfig::default()).unwrap();
        assert!(p.reached_mode());
        assert!((p.terminal[0] - 6.0).abs() < 1e-6);
        assert!(m.gradient(&p.terminal).unwrap()[0].abs() < 1e-6);
    }

    #[test]
    fn uniform_kernel_is_rejected() {
        let m = KernelDensityModel::new(Sample::univariate(vec![0.0]).unwrap(), vec![1.0], KernelSpec::Uniform).unwrap();
        assert!(matches!(ascent_path(&m, &[0.0], &AscentConfig::default()), Err(ModalError::Unsupported(_))));
    }
}
