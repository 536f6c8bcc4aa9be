use serde::{Deserialize, Serialize};

use super::grid::{count_modes, EvalGrid};
use crate::data::Sample;
use crate::density::{KernelDensityModel, KernelSpec};
use crate::error::{ModalError, Result};

pub const MAX_DOUBLINGS: usize = 20;

/// Where the mode tree evaluates each estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeGrid {
    pub resolution: usize,
    /// Defaults to the data range padded by three of the largest bandwidths.
    pub range: Option<(f64, f64)>,
}

impl Default for TreeGrid {
    fn default() -> Self {
        TreeGrid { resolution: 1024, range: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeTreeLevel {
    pub bandwidth: f64,
    pub modes: Vec<f64>,
    pub densities: Vec<f64>,
    /// Index of the nearest mode one level up (at the next larger bandwidth).
    pub parents: Vec<Option<usize>>,
    pub link_distances: Vec<f64>,
    pub too_coarse: bool,
    pub resolution: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeTree {
    pub bandwidths: Vec<f64>,
    pub levels: Vec<ModeTreeLevel>,
    /// Doublings prepended so the largest bandwidth is unimodal.
    pub extensions: usize,
    pub range: (f64, f64),
}

impl ModeTree {
    pub fn counts(&self) -> Vec<usize> {
        self.levels.iter().map(|l| l.modes.len()).collect()
    }
}

fn modes_at(s: &Sample, h: f64, range: (f64, f64), resolution: usize) -> Result<(Vec<f64>, Vec<f64>, bool)> {
    let m = KernelDensityModel::new(s.clone(), vec![h], KernelSpec::Gaussian)?;
    let g = EvalGrid::evaluate(&m, &[range], &[resolution])?;
    let c = count_modes(&m, &g)?;
    Ok((
        c.modes.iter().map(|m| m.location[0]).collect(),
        c.modes.iter().map(|m| m.level).collect(),
        c.too_coarse,
    ))
}

/// Gaussian-KDE modes across a decreasing bandwidth sequence, each linked to
/// the nearest mode at the next larger bandwidth. If the largest bandwidth
/// is not unimodal it is doubled until it is. Levels flagged too coarse, or
/// whose count drops below the next larger bandwidth's, are recomputed once
/// at double resolution.
pub fn mode_tree(s: &Sample, bandwidths: &[f64], grid: &TreeGrid) -> Result<ModeTree> {
    let x = s.univariate_values()?;
    if bandwidths.is_empty() {
        return Err(ModalError::param("at least one bandwidth is required"));
    }
    if bandwidths.iter().any(|h| !(*h > 0.0) || !h.is_finite()) {
        return Err(ModalError::param("bandwidths must be positive"));
    }
    if bandwidths.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(ModalError::param("bandwidths must be strictly decreasing"));
    }
    let (lo, hi) = x.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |a, v| (a.0.min(*v), a.1.max(*v)));
    let range_for = |h: f64| grid.range.unwrap_or((lo - 3.0 * h, hi + 3.0 * h));

    let mut top = bandwidths[0];
    let mut extra = Vec::new();
    let mut doublings = 0;
    loop {
        let (modes, _, _) = modes_at(s, top, range_for(top), grid.resolution)?;
        if modes.len() <= 1 {
            break;
        }
        if doublings == MAX_DOUBLINGS {
            return Err(ModalError::ExtensionExhausted { doublings });
        }
        doublings += 1;
        top *= 2.0;
        extra.push(top);
    }
    extra.reverse();
    let all: Vec<f64> = extra.into_iter().chain(bandwidths.iter().copied()).collect();
    let range = range_for(all[0]);

    let mut raw = Vec::with_capacity(all.len());
    for &h in &all {
        let mut resolution = grid.resolution;
        let (mut modes, mut densities, mut coarse) = modes_at(s, h, range, resolution)?;
        if coarse {
            resolution *= 2;
            (modes, densities, coarse) = modes_at(s, h, range, resolution)?;
        }
        raw.push((modes, densities, coarse, resolution));
    }
    // a count that drops as h shrinks is a grid artefact; re-evaluate both
    // levels once at double resolution
    for i in 1..raw.len() {
        if raw[i].0.len() < raw[i - 1].0.len() {
            for j in [i - 1, i] {
                if raw[j].3 == grid.resolution {
                    let res = 2 * grid.resolution;
                    let (m, d, c) = modes_at(s, all[j], range, res)?;
                    raw[j] = (m, d, c, res);
                }
            }
        }
    }

    let mut levels: Vec<ModeTreeLevel> = Vec::with_capacity(all.len());
    for (&h, (modes, densities, coarse, resolution)) in all.iter().zip(raw) {
        let (parents, link_distances) = match levels.last() {
            None => (vec![None; modes.len()], vec![0.0; modes.len()]),
            Some(prev) => modes
                .iter()
                .map(|m| {
                    let (j, d) = prev
                        .modes
                        .iter()
                        .enumerate()
                        .map(|(j, p)| (j, (p - m).abs()))
                        .fold((usize::MAX, f64::INFINITY), |b, c| if c.1 < b.1 { c } else { b });
                    (Some(j), d)
                })
                .unzip(),
        };
        levels.push(ModeTreeLevel {
            bandwidth: h,
            modes,
            densities,
            parents,
            link_distances,
            too_coarse: coarse,
            resolution,
        });
    }
    Ok(ModeTree { bandwidths: all, levels, extensions: doublings, range })
}
