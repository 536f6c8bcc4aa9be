//! Mode estimation, multimodality diagnostics, modal clustering and modal
//! regression.

mod error;

pub mod clustering;
pub mod data;
pub mod density;
pub mod estimators;
pub mod multimodality;
pub mod harness;
pub mod regression;
pub mod render;

pub use error::{ModalError, Result};
