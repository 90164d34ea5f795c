//! Stagewise boosting for distributional regression.
//!
//! The crate fits GAMLSS-type models, where every parameter of a response
//! distribution gets its own linear predictor, by semi-constant stagewise
//! updates with best-subset parameter updating, correlation filtering, BIC
//! early stopping and an optional batchwise mode for large data.
//!
//! * [`families`]: response distributions, links, scores and scoring rules.
//! * [`data`]: standardised datasets, CSV ingestion, batch schedules.
//! * [`engine`]: the stagewise fitting loop, threshold descent and refits.
//! * [`baseline`]: gradient boosting and variable deselection for comparison.
//! * [`simlab`]: simulation scenarios, metrics and replication runner.

pub mod baseline;
pub mod data;
pub mod engine;
pub mod error;
pub mod families;
pub mod simlab;

pub use error::{Error, Result};
pub use families::{Family, Link, ParamVector};
