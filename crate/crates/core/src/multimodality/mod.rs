//! Mode counts, mode trees, level-set trees, persistence and SiZer.

mod grid;
mod mode_tree;
mod sizer;
mod tree;

pub use grid::{count_modes, grid_modes, EvalGrid, GridMode, ModeCount, MIN_RESOLUTION};
pub use mode_tree::{mode_tree, ModeTree, ModeTreeLevel, TreeGrid, MAX_DOUBLINGS};
pub use sizer::{sizer_map, SizerMap, SizerState};
pub use tree::{level_set_tree, persistence_diagram, ClusterTree, PersistencePair, TreeNode};
