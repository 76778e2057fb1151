//! Maximum likelihood fitting and goodness-of-fit testing for the
//! left-truncated log-logistic distribution.
//!
//! The fit reduces the two-parameter likelihood to a one-dimensional
//! profile in the shape parameter, after an existence check that detects
//! samples whose likelihood is maximised on the Pareto boundary. Fitted
//! models can be tested with Kolmogorov-Smirnov and Anderson-Darling
//! statistics against embedded Monte Carlo critical values, and the
//! [`montecarlo`] module regenerates those tables.

pub mod distribution;
pub mod error;
pub mod estimation;
pub mod gof;
pub mod montecarlo;
mod numeric;
pub mod rng;

pub use distribution::{ParetoTail, TruncatedLogLogistic};
pub use error::{Error, Result};
pub use estimation::{FitOutcome, FitResult, NormalizedSample, Sample, fit};

pub use gof::{GofReport, GofStatistics, Level, TestKind};
