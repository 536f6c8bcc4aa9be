//! Clusters as domains of attraction of density modes.

mod ascent;
mod partition;

pub use ascent::{ascent_path, AscentConfig, AscentPath};
pub(crate) use ascent::climb_to_mode;
pub use partition::{
    agreement, gmm_modal_partition, modal_partition, modal_partition_with, parametric_partition,
    Partition, PartitionConfig,
};
