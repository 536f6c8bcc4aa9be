use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::local_linear::local_linear;
use super::{conditional_modes, ConditionalMode, ConditionalModel};
use crate::error::{ModalError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BranchPoint {
    pub x: f64,
    pub y: f64,
    pub density: f64,
}

/// A run of conditional modes over consecutive grid points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub id: usize,
    /// Grid index of the first point.
    pub start: usize,
    pub points: Vec<BranchPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModalCurveSet {
    pub x_grid: Vec<f64>,
    pub bandwidths: (f64, f64),
    /// All conditional modes per grid point; `None` where the estimate is
    /// sparse or no start converged.
    pub modes: Vec<Option<Vec<ConditionalMode>>>,
    pub branches: Vec<Branch>,
    /// Highest-density conditional mode per grid point.
    pub global_curve: Vec<Option<f64>>,
    /// Local-linear mean regression with bandwidth `h_x`.
    pub mean_curve: Vec<Option<f64>>,
}

impl ModalCurveSet {
    /// Number of modes at each grid point (0 in gaps).
    pub fn branch_counts(&self) -> Vec<usize> {
        self.modes.iter().map(|m| m.as_ref().map_or(0, Vec::len)).collect()
    }

    /// CSV with header `x,branchId,y,density`, branches in id order.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| ModalError::param(format!("csv export: {e}"));
        w.write_record(["x", "branchId", "y", "density"]).map_err(io)?;
        for b in &self.branches {
            for p in &b.points {
                w.write_record([p.x.to_string(), b.id.to_string(), p.y.to_string(), p.density.to_string()])
                    .map_err(io)?;
            }
        }
        let bytes = w.into_inner().map_err(|e| ModalError::param(format!("csv export: {e}")))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

/// Conditional modes over `x_grid`, linked into branches by nearest-y
/// matching between neighbouring grid points. Links longer than `3 h_y`
/// are refused, ending a branch and starting another.
pub fn modal_regression_curves(m: &ConditionalModel, x_grid: &[f64]) -> Result<ModalCurveSet> {
    if x_grid.is_empty() {
        return Err(ModalError::param("covariate grid must be non-empty"));
    }
    if x_grid.iter().any(|x| !x.is_finite()) || x_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(ModalError::param("covariate grid must be finite and strictly increasing"));
    }
    let modes: Vec<Option<Vec<ConditionalMode>>> = x_grid
        .par_iter()
        .map(|&x| match conditional_modes(m, x) {
            Ok(v) => Ok(Some(v)),
            Err(ModalError::Sparse { .. } | ModalError::NoConvergentStart { .. }) => Ok(None),
            Err(e) => Err(e),
        })
        .collect::<Result<_>>()?;
    let (hx, hy) = m.bandwidths();
    let branches = link(x_grid, &modes, 3.0 * hy);
    let global_curve = modes
        .iter()
        .map(|ms| {
            ms.as_ref().map(|ms| {
                ms.iter()
                    .fold(ms[0], |best, c| if c.density > best.density { *c } else { best })
                    .y
            })
        })
        .collect();
    let mean_curve = local_linear(m.covariates(), m.responses(), x_grid, hx)?;
    Ok(ModalCurveSet {
        x_grid: x_grid.to_vec(),
        bandwidths: (hx, hy),
        modes,
        branches,
        global_curve,
        mean_curve,
    })
}

fn link(x_grid: &[f64], modes: &[Option<Vec<ConditionalMode>>], threshold: f64) -> Vec<Branch> {
    let mut branches: Vec<Branch> = Vec::new();
    // indices into `branches` of those reaching the previous grid point
    let mut open: Vec<usize> = Vec::new();
    for (i, (&x, ms)) in x_grid.iter().zip(modes).enumerate() {
        let Some(ms) = ms else {
            open.clear();
            continue;
        };
        let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
        for (bi, &b) in open.iter().enumerate() {
            let last = branches[b].points.last().expect("branches are non-empty").y;
            for (j, c) in ms.iter().enumerate() {
                let d = (c.y - last).abs();
                if d <= threshold {
                    pairs.push((d, bi, j));
                }
            }
        }
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        let mut taken_branch = vec![false; open.len()];
        let mut owner: Vec<Option<usize>> = vec![None; ms.len()];
        for (_, bi, j) in pairs {
            if !taken_branch[bi] && owner[j].is_none() {
                taken_branch[bi] = true;
                owner[j] = Some(open[bi]);
            }
        }
        let mut next_open = Vec::with_capacity(ms.len());
        for (c, o) in ms.iter().zip(owner) {
            let p = BranchPoint { x, y: c.y, density: c.density };
            let b = match o {
                Some(b) => b,
                None => {
                    branches.push(Branch { id: branches.len(), start: i, points: Vec::new() });
                    branches.len() - 1
                }
            };
            branches[b].points.push(p);
            next_open.push(b);
        }
        open = next_open;
    }
    branches
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cm(ys: &[f64]) -> Option<Vec<ConditionalMode>> {
        Some(ys.iter().map(|y| ConditionalMode { y: *y, density: 1.0 }).collect())
    }

    #[test]
    fn linking_splits_and_gaps() {
        let xs = [0.0, 1.0, 2.0, 3.0, 4.0];
        let modes = vec![cm(&[0.0]), cm(&[0.1, 2.0]), cm(&[0.2, 2.1]), None, cm(&[0.3])];
        let b = link(&xs, &modes, 0.5);
        assert_eq!(b.len(), 3);
        assert_eq!((b[0].start, b[0].points.len()), (0, 3));
        assert_eq!((b[1].start, b[1].points.len()), (1, 2));
        assert_eq!((b[2].start, b[2].points.len()), (4, 1));
    }

    #[test]
    fn far_jump_starts_new_branch() {
        let b = link(&[0.0, 1.0], &[cm(&[0.0]), cm(&[5.0])], 0.5);
        assert_eq!(b.len(), 2);
    }
}
