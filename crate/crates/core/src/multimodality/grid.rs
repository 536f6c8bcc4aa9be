use serde::{Deserialize, Serialize};

use crate::clustering::{climb_to_mode, AscentConfig};
use crate::density::DensityModel;
use crate::error::{ModalError, Result};
use crate::estimators::linspace;

/// Minimum nodes per axis for grids evaluated from a model.
pub const MIN_RESOLUTION: usize = 16;

/// Density levels on a rectangular lattice. Nodes are stored row-major with
/// the first axis varying fastest; neighbours differ by one step along one
/// axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalGrid {
    axes: Vec<Vec<f64>>,
    levels: Vec<f64>,
}

impl EvalGrid {
    /// Wraps precomputed levels. Any positive resolution is accepted here;
    /// the minimum only applies to `evaluate`.
    pub fn from_levels(axes: Vec<Vec<f64>>, levels: Vec<f64>) -> Result<Self> {
        if axes.is_empty() || axes.iter().any(Vec::is_empty) {
            return Err(ModalError::param("every grid axis needs at least one node"));
        }
        let total: usize = axes.iter().map(Vec::len).product();
        if levels.len() != total {
            return Err(ModalError::DimensionMismatch { expected: total, found: levels.len() });
        }
        if let Some(i) = levels.iter().position(|v| !v.is_finite()) {
            return Err(ModalError::NonFinite(format!("grid level at node {i}")));
        }
        Ok(EvalGrid { axes, levels })
    }

    /// One-dimensional levels at nodes `0, 1, 2, ...`.
    pub fn from_levels_1d(levels: Vec<f64>) -> Result<Self> {
        let axis = (0..levels.len()).map(|i| i as f64).collect();
        Self::from_levels(vec![axis], levels)
    }

    pub fn evaluate(model: &dyn DensityModel, ranges: &[(f64, f64)], resolution: &[usize]) -> Result<Self> {
        if ranges.len() != model.dim() || resolution.len() != model.dim() {
            return Err(ModalError::DimensionMismatch { expected: model.dim(), found: ranges.len() });
        }
        if let Some(r) = resolution.iter().find(|r| **r < MIN_RESOLUTION) {
            return Err(ModalError::param(format!("grid resolution {r} below {MIN_RESOLUTION}")));
        }
        if ranges.iter().any(|(lo, hi)| !(hi > lo) || !lo.is_finite() || !hi.is_finite()) {
            return Err(ModalError::param("grid ranges must be finite with lo < hi"));
        }
        let axes: Vec<Vec<f64>> = ranges.iter().zip(resolution).map(|(r, n)| linspace(r.0, r.1, *n)).collect();
        let shape: Vec<usize> = resolution.to_vec();
        let total: usize = shape.iter().product();
        let mut x = vec![0.0; axes.len()];
        let mut levels = Vec::with_capacity(total);
        for i in 0..total {
            let mut rest = i;
            for (j, a) in axes.iter().enumerate() {
                x[j] = a[rest % a.len()];
                rest /= a.len();
            }
            levels.push(model.density(&x)?);
        }
        Self::from_levels(axes, levels)
    }

    /// Covers the model's support box with `resolution` nodes per axis.
    pub fn for_model(model: &dyn DensityModel, resolution: usize) -> Result<Self> {
        let support = model.support();
        Self::evaluate(model, &support, &vec![resolution; support.len()])
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(Vec::len).collect()
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn axes(&self) -> &[Vec<f64>] {
        &self.axes
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn multi_index(&self, mut i: usize) -> Vec<usize> {
        self.axes
            .iter()
            .map(|a| {
                let c = i % a.len();
                i /= a.len();
                c
            })
            .collect()
    }

    pub fn coords(&self, i: usize) -> Vec<f64> {
        self.multi_index(i).iter().zip(&self.axes).map(|(c, a)| a[*c]).collect()
    }

    /// Axis neighbours of node `i`.
    pub fn neighbors(&self, i: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(2 * self.dim());
        let mut stride = 1;
        let mut rest = i;
        for a in &self.axes {
            let c = rest % a.len();
            rest /= a.len();
            if c > 0 {
                out.push(i - stride);
            }
            if c + 1 < a.len() {
                out.push(i + stride);
            }
            stride *= a.len();
        }
        out
    }

    pub fn on_boundary(&self, i: usize) -> bool {
        self.multi_index(i).iter().zip(&self.axes).any(|(c, a)| *c == 0 || *c + 1 == a.len())
    }
}

/// A maximal connected set of nodes sharing one level.
#[derive(Debug, Clone)]
pub(crate) struct Plateau {
    pub nodes: Vec<usize>,
    pub level: f64,
    /// Every outside neighbour is strictly lower.
    pub is_max: bool,
    pub boundary: bool,
}

impl Plateau {
    pub fn min_index(&self) -> usize {
        self.nodes[0]
    }

    pub fn center(&self, grid: &EvalGrid) -> Vec<f64> {
        let mut c = vec![0.0; grid.dim()];
        for &i in &self.nodes {
            for (acc, v) in c.iter_mut().zip(grid.coords(i)) {
                *acc += v;
            }
        }
        c.iter_mut().for_each(|v| *v /= self.nodes.len() as f64);
        c
    }
}

/// Plateaus in increasing order of their smallest node, plus the node to
/// plateau map.
pub(crate) fn plateaus(grid: &EvalGrid) -> (Vec<Plateau>, Vec<usize>) {
    let n = grid.len();
    let lv = grid.levels();
    let mut id = vec![usize::MAX; n];
    let mut out = Vec::new();
    for start in 0..n {
        if id[start] != usize::MAX {
            continue;
        }
        let pid = out.len();
        let mut nodes = vec![start];
        id[start] = pid;
        let mut head = 0;
        let mut is_max = true;
        let mut boundary = false;
        while head < nodes.len() {
            let v = nodes[head];
            head += 1;
            boundary |= grid.on_boundary(v);
            for u in grid.neighbors(v) {
                if lv[u] == lv[v] {
                    if id[u] == usize::MAX {
                        id[u] = pid;
                        nodes.push(u);
                    }
                } else if lv[u] > lv[v] {
                    is_max = false;
                }
            }
        }
        nodes.sort_unstable();
        out.push(Plateau { nodes, level: lv[start], is_max, boundary });
    }
    (out, id)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridMode {
    pub location: Vec<f64>,
    /// Model density at `location`.
    pub level: f64,
    /// Plateau center on the grid, before refinement.
    pub grid_location: Vec<f64>,
    /// Moved by an ascent onto the exact local maximum.
    pub refined: bool,
    /// The plateau touches the grid edge.
    pub boundary: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeCount {
    pub count: usize,
    pub modes: Vec<GridMode>,
    /// Two modes sit within two nodes of each other.
    pub too_coarse: bool,
    /// Some mode lies on the grid edge.
    pub boundary: bool,
}

/// Strict local maxima of the grid levels, one per plateau, each refined by
/// an ascent on `model` when it has a gradient.
pub fn count_modes(model: &dyn DensityModel, grid: &EvalGrid) -> Result<ModeCount> {
    if grid.dim() != model.dim() {
        return Err(ModalError::DimensionMismatch { expected: model.dim(), found: grid.dim() });
    }
    let (plats, _) = plateaus(grid);
    let maxima: Vec<&Plateau> = plats.iter().filter(|p| p.is_max).collect();
    let spacing: f64 = grid
        .axes()
        .iter()
        .map(|a| if a.len() > 1 { (a[a.len() - 1] - a[0]) / (a.len() - 1) as f64 } else { 0.0 })
        .fold(0.0, f64::max);
    let reach = 2.0 * spacing * (grid.dim() as f64).sqrt();
    let cfg = AscentConfig { record_steps: false, ..AscentConfig::default() };
    let mut modes = Vec::with_capacity(maxima.len());
    for p in &maxima {
        let center = p.center(grid);
        let mut location = center.clone();
        let mut refined = false;
        if model.has_gradient() && !p.boundary {
            let path = climb_to_mode(model, &center, &cfg)?;
            let moved = path
                .terminal
                .iter()
                .zip(&center)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            if path.reached_mode() && moved <= reach {
                location = path.terminal;
                refined = true;
            }
        }
        modes.push(GridMode {
            level: model.density(&location)?,
            location,
            grid_location: center,
            refined,
            boundary: p.boundary,
        });
    }
    let too_coarse = close_pairs(grid, &maxima);
    modes.sort_by(|a, b| a.grid_location.partial_cmp(&b.grid_location).expect("finite coordinates"));
    Ok(ModeCount {
        count: modes.len(),
        boundary: modes.iter().any(|m| m.boundary),
        modes,
        too_coarse,
    })
}

/// Modes read off the grid alone: plateau centers of strict local maxima.
pub fn grid_modes(grid: &EvalGrid) -> Vec<Vec<f64>> {
    let (plats, _) = plateaus(grid);
    plats.iter().filter(|p| p.is_max).map(|p| p.center(grid)).collect()
}

fn close_pairs(grid: &EvalGrid, maxima: &[&Plateau]) -> bool {
    let idx: Vec<Vec<Vec<usize>>> = maxima
        .iter()
        .map(|p| p.nodes.iter().map(|&i| grid.multi_index(i)).collect())
        .collect();
    for a in 0..idx.len() {
        for b in a + 1..idx.len() {
            for u in &idx[a] {
                for v in &idx[b] {
                    let cheb = u.iter().zip(v).map(|(x, y)| x.abs_diff(*y)).max().unwrap_or(0);
                    if cheb <= 2 {
                        return true;
                    }
                }
            }
        }
    }
    false
}
