//! Samples, CSV ingestion and seeded synthetic data.

mod csv;
pub(crate) mod mixture;
mod sample;
mod seed;

pub use self::csv::{load_csv, load_csv_reader, Columns};
pub use mixture::{sample_mixture, LabeledSample, MixtureSpec};
pub use sample::{order_statistics, Sample};
pub use seed::SeedSpec;
