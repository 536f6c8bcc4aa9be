//! Point estimators of a single mode.

mod direct;
mod indirect;

pub use direct::{
    chernoff_mode, dalenius_venter_mode, grenander_mode, robertson_cryer_mode, robertson_cryer_mode_with,
    DirectConfig, DirectEstimate, DirectMethod, Diagnostics, SpacingSummary, TieBreak,
};
pub use indirect::{kernel_mode, sample_point_mode, GridSearch, ModeEstimate, SampleDensity};
pub(crate) use indirect::linspace;
