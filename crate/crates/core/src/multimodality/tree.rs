//! Superlevel-set topology of a gridded density by a union-find sweep.

use serde::{Deserialize, Serialize};

use super::grid::{plateaus, EvalGrid};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeNode {
    /// Level at which the component appears: the mode height for a leaf,
    /// the merge level for an internal node.
    pub birth: f64,
    /// Level at which it joins its parent (the minimum level for the root).
    pub merge: f64,
    pub children: Vec<usize>,
    pub parent: Option<usize>,
    /// Mode location, for leaves.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub mode: Option<Vec<f64>>,
    /// Elder-rule death level, for leaves.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub death: Option<f64>,
}

impl TreeNode {
    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterTree {
    pub nodes: Vec<TreeNode>,
    pub root: usize,
    /// Component count after each distinct level, highest level first.
    pub sweep: Vec<(f64, usize)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PersistencePair {
    pub death: f64,
    pub birth: f64,
    pub mode_location: Vec<f64>,
}

impl PersistencePair {
    pub fn persistence(&self) -> f64 {
        self.birth - self.death
    }
}

impl ClusterTree {
    pub fn leaves(&self) -> impl Iterator<Item = &TreeNode> {
        self.nodes.iter().filter(|n| n.is_leaf())
    }

    pub fn leaf_count(&self) -> usize {
        self.leaves().count()
    }

    /// One pair per leaf in birth order.
    pub fn persistence(&self) -> Vec<PersistencePair> {
        self.leaves()
            .map(|n| PersistencePair {
                death: n.death.expect("leaves carry a death level"),
                birth: n.birth,
                mode_location: n.mode.clone().expect("leaves carry a mode"),
            })
            .collect()
    }
}

struct Component {
    node: usize,
    /// Surviving leaf under the elder rule.
    elder: usize,
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

/// Sweeps plateaus from the highest level down. A plateau with no processed
/// neighbour starts a leaf; one touching several components merges them and
/// every component but the one with the highest birth dies (ties go to the
/// component created first).
pub fn level_set_tree(grid: &EvalGrid) -> ClusterTree {
    let (plats, pid) = plateaus(grid);
    let mut order: Vec<usize> = (0..plats.len()).collect();
    order.sort_by(|&a, &b| {
        plats[b]
            .level
            .total_cmp(&plats[a].level)
            .then(plats[a].min_index().cmp(&plats[b].min_index()))
    });
    let min_level = grid.levels().iter().copied().fold(f64::INFINITY, f64::min);

    let mut uf: Vec<usize> = (0..plats.len()).collect();
    let mut done = vec![false; plats.len()];
    let mut comp: Vec<Option<Component>> = (0..plats.len()).map(|_| None).collect();
    let mut nodes: Vec<TreeNode> = Vec::new();
    let mut live = 0usize;
    let mut sweep: Vec<(f64, usize)> = Vec::new();

    for &p in &order {
        let level = plats[p].level;
        let mut roots: Vec<usize> = Vec::new();
        for &v in &plats[p].nodes {
            for u in grid.neighbors(v) {
                let q = pid[u];
                if q != p && done[q] {
                    let r = find(&mut uf, q);
                    if !roots.contains(&r) {
                        roots.push(r);
                    }
                }
            }
        }
        done[p] = true;
        match roots.len() {
            0 => {
                let id = nodes.len();
                nodes.push(TreeNode {
                    birth: level,
                    merge: f64::NAN,
                    children: Vec::new(),
                    parent: None,
                    mode: Some(plats[p].center(grid)),
                    death: None,
                });
                comp[p] = Some(Component { node: id, elder: id });
                live += 1;
            }
            1 => {
                uf[p] = roots[0];
            }
            _ => {
                // eldest first: highest birth, then earliest created
                roots.sort_by(|&a, &b| {
                    let (ea, eb) = (comp[a].as_ref().unwrap().elder, comp[b].as_ref().unwrap().elder);
                    nodes[eb].birth.total_cmp(&nodes[ea].birth).then(ea.cmp(&eb))
                });
                let id = nodes.len();
                let elder = comp[roots[0]].as_ref().unwrap().elder;
                let mut children = Vec::with_capacity(roots.len());
                for (k, &r) in roots.iter().enumerate() {
                    let c = comp[r].take().unwrap();
                    nodes[c.node].merge = level;
                    nodes[c.node].parent = Some(id);
                    children.push(c.node);
                    if k > 0 {
                        nodes[c.elder].death = Some(level);
                    }
                }
                nodes.push(TreeNode {
                    birth: level,
                    merge: f64::NAN,
                    children,
                    parent: None,
                    mode: None,
                    death: None,
                });
                let keep = roots[0];
                for &r in &roots[1..] {
                    uf[r] = keep;
                }
                uf[p] = keep;
                comp[keep] = Some(Component { node: id, elder });
                live -= roots.len() - 1;
            }
        }
        match sweep.last_mut() {
            Some(last) if last.0 == level => last.1 = live,
            _ => sweep.push((level, live)),
        }
    }

    let mut root = 0;
    for c in comp.iter().flatten() {
        nodes[c.node].merge = min_level;
        if nodes[c.elder].death.is_none() {
            nodes[c.elder].death = Some(min_level);
        }
        root = c.node;
    }
    ClusterTree { nodes, root, sweep }
}

/// Birth and death heights of every superlevel-set component, with the
/// global mode dying at the minimum grid level.
pub fn persistence_diagram(grid: &EvalGrid) -> Vec<PersistencePair> {
    level_set_tree(grid).persistence()
}
