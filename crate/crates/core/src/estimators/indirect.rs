//! Mode estimates read off a fitted density.

use serde::{Deserialize, Serialize};

use crate::clustering::{ascent_path, AscentConfig};
use crate::density::{
    DensityModel, KernelDensityModel, KernelSpec, NearestNeighborModel, WeightedGaussian1d, INV_SQRT_2PI,
};
use crate::error::{ModalError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeEstimate {
    pub location: Vec<f64>,
    pub density_value: f64,
    pub converged: bool,
    pub iterations: usize,
}

/// Coarse grid used to seed the refinement in `kernel_mode`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSearch {
    /// Nodes per dimension; raised so that spacing stays below `h / 4`.
    pub resolution: usize,
    /// Padding around the data range, in bandwidths.
    pub margin: f64,
    /// Coarse maxima within this fraction of the best are refined too.
    pub keep_fraction: f64,
    pub tolerance: f64,
    pub max_iter: usize,
}

impl Default for GridSearch {
    fn default() -> Self {
        GridSearch {
            resolution: 512,
            margin: 3.0,
            keep_fraction: 0.75,
            tolerance: 1e-8,
            max_iter: 10_000,
        }
    }
}

const MAX_NODES_PER_DIM_MULTI: usize = 128;
const MAX_EXACT_WORK: usize = 4_000_000;

/// Global maximiser of a kernel density estimate: grid argmax followed by
/// hill climbing from every promising coarse maximum.
pub fn kernel_mode(m: &KernelDensityModel, search: &GridSearch) -> Result<ModeEstimate> {
    if !m.kernel().is_differentiable() {
        return Err(ModalError::Unsupported("kernel mode refinement needs a differentiable kernel".into()));
    }
    let d = m.sample().dim();
    if d == 1 && m.kernel() == KernelSpec::Epanechnikov {
        return Ok(epanechnikov_argmax_1d(m));
    }
    let support = m.support();
    let h = m.bandwidth();
    let pad = search.margin - 3.0;
    let axes: Vec<Vec<f64>> = (0..d)
        .map(|j| {
            let (lo, hi) = (support[j].0 - pad * h[j], support[j].1 + pad * h[j]);
            let need = ((hi - lo) / (0.25 * h[j])).ceil() as usize + 1;
            let nodes = if d == 1 {
                search.resolution.max(need)
            } else {
                need.clamp(32, MAX_NODES_PER_DIM_MULTI)
            };
            linspace(lo, hi, nodes.max(16))
        })
        .collect();
    let res: Vec<usize> = axes.iter().map(Vec::len).collect();
    let levels = if d == 1 && m.kernel() == KernelSpec::Gaussian && m.sample().len() * res[0] > MAX_EXACT_WORK {
        binned_gaussian_1d(m.sample().as_flat(), h[0], &axes[0])
    } else {
        eval_grid(m, &axes)?
    };
    if levels.iter().any(|v| !v.is_finite()) {
        return Err(ModalError::NonFinite("density on the search grid".into()));
    }
    let top = levels.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut starts: Vec<(f64, usize)> = local_maxima(&levels, &res)
        .into_iter()
        .filter(|&i| levels[i] >= search.keep_fraction * top)
        .map(|i| (levels[i], i))
        .collect();
    starts.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    starts.truncate(32);
    let mut inits: Vec<Vec<f64>> = starts.into_iter().map(|(_, i)| node(&axes, &res, i)).collect();
    // a grid can step over narrow bumps in several dimensions; the densest
    // observation is a safe extra start when affordable
    let n = m.sample().len();
    if d > 1 && n * n <= MAX_EXACT_WORK * 8 {
        inits.push(sample_point_mode(m)?.location);
    }

    let mut best: Option<ModeEstimate> = None;
    for x0 in inits {
        let cand = refine(m, &x0, search)?;
        let better = match &best {
            None => true,
            Some(b) => {
                cand.density_value > b.density_value
                    || (cand.density_value == b.density_value && cand.location < b.location)
            }
        };
        if better {
            best = Some(cand);
        }
    }
    best.ok_or_else(|| ModalError::NonFinite("no grid maximum".into()))
}

fn refine(m: &KernelDensityModel, x0: &[f64], search: &GridSearch) -> Result<ModeEstimate> {
    let h = m.bandwidth();
    if x0.len() == 1 && m.kernel() == KernelSpec::Gaussian {
        let g = WeightedGaussian1d::new(m.sample().as_flat(), None, h[0]);
        let c = g.climb(x0[0], search.tolerance * h[0], search.max_iter);
        let location = vec![c.location];
        return Ok(ModeEstimate {
            density_value: m.eval(&location)?,
            location,
            converged: c.converged,
            iterations: c.iterations,
        });
    }
    let cfg = AscentConfig {
        tolerance: search.tolerance,
        max_iter: search.max_iter,
        record_steps: false,
    };
    let p = ascent_path(m, x0, &cfg)?;
    Ok(ModeEstimate {
        density_value: m.eval(&p.terminal)?,
        location: p.terminal,
        converged: p.converged,
        iterations: p.iterations,
    })
}

/// Exact global maximiser of a 1-d Epanechnikov estimate, which is a
/// concave quadratic between consecutive breakpoints `X_i +- h`.
fn epanechnikov_argmax_1d(m: &KernelDensityModel) -> ModeEstimate {
    let h = m.bandwidth()[0];
    let data = m.sample().as_flat();
    let shift = data.iter().sum::<f64>() / data.len() as f64;
    // (position, +1 enter / -1 leave, centred datum)
    let mut events: Vec<(f64, f64, f64)> = Vec::with_capacity(2 * data.len());
    for &x in data {
        let c = x - shift;
        events.push((c - h, 1.0, c));
        events.push((c + h, -1.0, c));
    }
    events.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.1.total_cmp(&a.1)));
    let (mut cnt, mut s1, mut s2) = (0.0, 0.0, 0.0);
    let mut best = (events[0].0, f64::NEG_INFINITY);
    let mut pieces = 0;
    for w in 0..events.len() - 1 {
        let (pos, sign, c) = events[w];
        cnt += sign;
        s1 += sign * c;
        s2 += sign * c * c;
        let (lo, hi) = (pos, events[w + 1].0);
        if cnt < 0.5 || hi <= lo {
            continue;
        }
        pieces += 1;
        let x = (s1 / cnt).clamp(lo, hi);
        let v = cnt - (cnt * x * x - 2.0 * x * s1 + s2) / (h * h);
        if v > best.1 {
            best = (x, v);
        }
    }
    let location = vec![best.0 + shift];
    ModeEstimate {
        density_value: m.eval(&location).unwrap_or(f64::NAN),
        location,
        converged: true,
        iterations: pieces,
    }
}

pub(crate) fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![0.5 * (lo + hi)];
    }
    let step = (hi - lo) / (n - 1) as f64;
    (0..n).map(|i| if i + 1 == n { hi } else { lo + step * i as f64 }).collect()
}

/// Row-major node index to coordinates, first axis fastest.
fn node(axes: &[Vec<f64>], res: &[usize], mut idx: usize) -> Vec<f64> {
    axes.iter()
        .zip(res)
        .map(|(a, r)| {
            let v = a[idx % r];
            idx /= r;
            v
        })
        .collect()
}

fn eval_grid(m: &dyn DensityModel, axes: &[Vec<f64>]) -> Result<Vec<f64>> {
    let res: Vec<usize> = axes.iter().map(Vec::len).collect();
    let total: usize = res.iter().product();
    (0..total).map(|i| m.density(&node(axes, &res, i))).collect()
}

/// Nodes at least as high as all 2d axis neighbours, with one node per
/// plateau component.
fn local_maxima(levels: &[f64], res: &[usize]) -> Vec<usize> {
    let total = levels.len();
    let mut out = Vec::new();
    let stride: Vec<usize> = res
        .iter()
        .scan(1, |acc, r| {
            let s = *acc;
            *acc *= r;
            Some(s)
        })
        .collect();
    for i in 0..total {
        let mut ok = true;
        let mut rest = i;
        for (j, r) in res.iter().enumerate() {
            let c = rest % r;
            rest /= r;
            if c > 0 && levels[i - stride[j]] > levels[i] {
                ok = false;
            }
            // on plateaus keep only the first node
            if c > 0 && levels[i - stride[j]] == levels[i] && j == 0 {
                ok = false;
            }
            if c + 1 < *r && levels[i + stride[j]] > levels[i] {
                ok = false;
            }
        }
        if ok {
            out.push(i);
        }
    }
    out
}

/// Gaussian KDE on an equispaced axis from linearly binned counts.
pub(crate) fn binned_gaussian_1d(data: &[f64], h: f64, axis: &[f64]) -> Vec<f64> {
    let g = axis.len();
    let lo = axis[0];
    let dx = (axis[g - 1] - lo) / (g - 1) as f64;
    let mut counts = vec![0.0; g];
    for &x in data {
        let t = ((x - lo) / dx).clamp(0.0, (g - 1) as f64);
        let i = (t.floor() as usize).min(g - 2);
        let f = t - i as f64;
        counts[i] += 1.0 - f;
        counts[i + 1] += f;
    }
    let reach = ((8.0 * h / dx).ceil() as usize).min(g - 1);
    let weights: Vec<f64> = (0..=reach)
        .map(|k| {
            let u = k as f64 * dx / h;
            (-0.5 * u * u).exp()
        })
        .collect();
    let norm = INV_SQRT_2PI / (h * data.len() as f64);
    (0..g)
        .map(|i| {
            let a = i.saturating_sub(reach);
            let b = (i + reach).min(g - 1);
            (a..=b).map(|j| counts[j] * weights[i.abs_diff(j)]).sum::<f64>() * norm
        })
        .collect()
}

/// Density models that can be evaluated at their own sample points.
pub trait SampleDensity {
    fn sample_len(&self) -> usize;
    fn sample_point(&self, i: usize) -> &[f64];
    fn density_at_sample(&self, i: usize) -> Result<f64>;
}

impl SampleDensity for KernelDensityModel {
    fn sample_len(&self) -> usize {
        self.sample().len()
    }

    fn sample_point(&self, i: usize) -> &[f64] {
        self.sample().point(i)
    }

    fn density_at_sample(&self, i: usize) -> Result<f64> {
        self.eval(self.sample().point(i))
    }
}

/// The self distance is excluded, so the value is the leave-one-out density.
impl SampleDensity for NearestNeighborModel {
    fn sample_len(&self) -> usize {
        self.sample().len()
    }

    fn sample_point(&self, i: usize) -> &[f64] {
        self.sample().point(i)
    }

    fn density_at_sample(&self, i: usize) -> Result<f64> {
        self.eval_leave_one_out(i)
    }
}

/// The observation with the highest estimated density; the smallest index
/// wins ties.
pub fn sample_point_mode(m: &dyn SampleDensity) -> Result<ModeEstimate> {
    let n = m.sample_len();
    if n == 0 {
        return Err(ModalError::EmptySample);
    }
    let mut best = (0, f64::NEG_INFINITY);
    for i in 0..n {
        let v = match m.density_at_sample(i) {
            Ok(v) => v,
            Err(ModalError::InfiniteDensity) => f64::INFINITY,
            Err(e) => return Err(e),
        };
        if v > best.1 {
            best = (i, v);
        }
    }
    Ok(ModeEstimate {
        location: m.sample_point(best.0).to_vec(),
        density_value: best.1,
        converged: true,
        iterations: n,
    })
}
