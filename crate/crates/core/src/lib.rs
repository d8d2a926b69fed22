//! Effectiveness measures over TREC runs, correlation between measures,
//! and linear models that predict one measure from others.

pub mod analytics;
pub mod datasets;
pub mod diagnostics;
pub mod error;
pub mod experiments;
pub mod metrics;
pub mod trec_io;

pub use diagnostics::{Diagnosed, Warning, WarningKind};
pub use error::{Error, Result};
pub use metrics::{MetricSpec, TopicEval};
