//! Transaction cost analysis and tick-size event-study toolkit.
//!
//! The crate is `no_std` with `alloc`: every routine here is a pure function
//! of its inputs. File formats, the command-line driver and report rendering
//! live in the companion `tickcost` crate.
//!
//! Module map:
//!
//! * [`market`]: canonical security-day, order and fill records, split and FX
//!   adjustment, sample windows.
//! * [`tca`]: implementation shortfall, market impact and market timing per
//!   order, in exact fixed-point currency.
//! * [`mie`]: seeded Monte-Carlo market impact estimate.
//! * [`stats`]: OLS, unit-root and stationarity tests, trend fits, moving
//!   volatilities.
//! * [`event`]: affected-security rules, before/after comparisons, weighted
//!   cross-sectional aggregates, order buckets.
//! * [`pipeline`]: batch screens and pooled regressions over sample windows.
//! * [`synth`]: synthetic market and order generator with injected effects.

#![no_std]
// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod date;
pub mod event;
pub mod market;
pub mod mie;
pub mod money;
pub mod pipeline;
pub mod rng;
pub mod stats;
pub mod synth;
pub mod tca;

pub use date::Date;
pub use money::{Price, Yen};
