//! Statistics kernel: least squares, unit-root tests, trends and moving
//! volatilities.

use alloc::string::String;
use alloc::vec::Vec;

use thiserror::Error;

pub mod dist;
pub mod linalg;
pub mod ols;
pub mod series;
pub mod unitroot;

pub use ols::{ols, Design, RegressionResult};
pub use series::{first_difference, moving_vol_log, moving_vol_signed, time_trend, TrendFit};
pub use unitroot::{adf_test, kpss_test, pp_test, AdfOptions, Deterministic, Null, TestResult};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatsError {
    #[error("need at least {needed} observations, got {got}")]
    TooShort { needed: usize, got: usize },
    #[error("column {column} is a linear combination of {preceding:?}")]
    Collinear { column: String, preceding: Vec<String> },
    #[error("{0}")]
    Shape(String),
    #[error("input contains NaN or infinite values")]
    NonFinite,
    #[error("series has zero variance")]
    ZeroVariance,
    #[error("value at index {index} is not positive; use moving_vol_signed for signed series")]
    NonPositive { index: usize },
    #[error("window length {0} is too small")]
    BadWindow(usize),
}
