use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ascent::{climb_to_mode, AscentConfig, AscentPath};
use crate::data::Sample;
use crate::density::{DensityModel, GaussianMixtureModel};
use crate::error::{ModalError, Result};

/// Cluster labels for a set of points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    /// 1-based cluster of each point; `None` marks points whose ascent did
    /// not reach a mode.
    pub labels: Vec<Option<usize>>,
    /// Representative of cluster `l` at index `l - 1`.
    pub representatives: Vec<Vec<f64>>,
    pub r: usize,
    /// Points sitting on a tie between clusters (parametric partitions).
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub boundary: Vec<usize>,
}

impl Partition {
    pub fn unassigned(&self) -> usize {
        self.labels.iter().filter(|l| l.is_none()).count()
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![0; self.r];
        for l in self.labels.iter().flatten() {
            s[l - 1] += 1;
        }
        s
    }

    /// Fraction of points whose label matches `truth` under the best
    /// one-to-one relabelling. Unassigned points count as mismatches.
    pub fn agreement(&self, truth: &[usize]) -> f64 {
        agreement(&self.labels, truth)
    }
}

pub fn agreement(labels: &[Option<usize>], truth: &[usize]) -> f64 {
    assert_eq!(labels.len(), truth.len());
    if labels.is_empty() {
        return 1.0;
    }
    let a = labels.iter().flatten().max().copied().unwrap_or(0);
    let b = truth.iter().max().map_or(0, |m| m + 1);
    let mut table = vec![vec![0usize; b]; a + 1];
    for (l, t) in labels.iter().zip(truth) {
        if let Some(l) = l {
            table[*l][*t] += 1;
        }
    }
    let rows: Vec<usize> = (1..=a).collect();
    let best = best_matching(&table, &rows, &mut vec![false; b]);
    best as f64 / labels.len() as f64
}

/// Largest total of a one-to-one assignment of `rows` to columns.
fn best_matching(table: &[Vec<usize>], rows: &[usize], used: &mut Vec<bool>) -> usize {
    let Some((&r, rest)) = rows.split_first() else {
        return 0;
    };
    // leaving a row unmatched
    let mut best = best_matching(table, rest, used);
    for c in 0..used.len() {
        if !used[c] && table[r][c] > 0 {
            used[c] = true;
            best = best.max(table[r][c] + best_matching(table, rest, used));
            used[c] = false;
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PartitionConfig {
    pub ascent: AscentConfig,
    /// Terminals closer than `merge_tolerance * model.scale()` are one mode.
    pub merge_tolerance: f64,
}

impl Default for PartitionConfig {
    fn default() -> Self {
        PartitionConfig {
            ascent: AscentConfig { record_steps: false, ..AscentConfig::default() },
            merge_tolerance: 1e-3,
        }
    }
}

/// Domains of attraction: every point climbs to a mode and points sharing a
/// mode share a cluster.
pub fn modal_partition(model: &dyn DensityModel, points: &Sample) -> Result<Partition> {
    modal_partition_with(model, points, &PartitionConfig::default())
}

pub fn modal_partition_with(model: &dyn DensityModel, points: &Sample, cfg: &PartitionConfig) -> Result<Partition> {
    if points.dim() != model.dim() {
        return Err(ModalError::DimensionMismatch { expected: model.dim(), found: points.dim() });
    }
    let starts: Vec<&[f64]> = points.points().collect();
    let paths: Vec<AscentPath> = starts
        .par_iter()
        .map(|x| climb_to_mode(model, x, &cfg.ascent))
        .collect::<Result<_>>()?;
    let tol = cfg.merge_tolerance * model.scale();
    Ok(group_terminals(&paths, tol))
}

fn lex(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(std::cmp::Ordering::Equal)
}

/// Leader grouping of terminals in lexicographic order, so the outcome does
/// not depend on evaluation order.
fn group_terminals(paths: &[AscentPath], tol: f64) -> Partition {
    let mut order: Vec<usize> = (0..paths.len()).filter(|&i| paths[i].reached_mode()).collect();
    order.sort_by(|&a, &b| lex(&paths[a].terminal, &paths[b].terminal).then(a.cmp(&b)));
    let mut reps: Vec<Vec<f64>> = Vec::new();
    let mut labels = vec![None; paths.len()];
    for i in order {
        let t = &paths[i].terminal;
        let hit = reps.iter().position(|r| {
            r.iter().zip(t).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt() <= tol
        });
        let l = match hit {
            Some(l) => l,
            None => {
                reps.push(t.clone());
                reps.len() - 1
            }
        };
        labels[i] = Some(l + 1);
    }
    Partition {
        r: reps.len(),
        labels,
        representatives: reps,
        boundary: Vec::new(),
    }
}

/// Assigns each point to the component maximising `pi_l f_l(x)`; exact ties
/// go to the smaller component index and are recorded in `boundary`. Empty
/// components are dropped and the rest renumbered in component order.
pub fn parametric_partition(gmm: &GaussianMixtureModel, points: &Sample) -> Result<Partition> {
    let density = gmm.density();
    let l = density.components();
    let mut raw = Vec::with_capacity(points.len());
    let mut boundary = Vec::new();
    for (i, x) in points.points().enumerate() {
        let logs = density.component_log_densities(x)?;
        let mut best = 0;
        for k in 1..l {
            if logs[k] > logs[best] {
                best = k;
            }
        }
        let tie = (0..l).any(|k| k != best && (logs[k] - logs[best]).abs() <= 1e-12 * logs[best].abs().max(1.0));
        if tie {
            boundary.push(i);
        }
        raw.push(best);
    }
    let mut used = vec![false; l];
    raw.iter().for_each(|k| used[*k] = true);
    let mut relabel = vec![0; l];
    let mut reps = Vec::new();
    for k in 0..l {
        if used[k] {
            reps.push(gmm.spec().means[k].clone());
            relabel[k] = reps.len();
        }
    }
    Ok(Partition {
        labels: raw.iter().map(|k| Some(relabel[*k])).collect(),
        r: reps.len(),
        representatives: reps,
        boundary,
    })
}

/// Modal clustering of the fitted mixture density: components forming one
/// unimodal group end up in one cluster.
pub fn gmm_modal_partition(gmm: &GaussianMixtureModel, points: &Sample) -> Result<Partition> {
    modal_partition(gmm.density(), points)
}
