//! Monte-Carlo market impact estimate.
//!
//! A path draws one volume and one price move per trading interval inside
//! the order's window. The order is worked in proportion to the drawn
//! volumes. Each execution crosses the spread by a style-dependent number of
//! ticks, plus one more tick for every multiple of the participation cap the
//! order needs beyond the first. Adverse increments are then accumulated
//! exactly as [`crate::tca::market_impact`] does in standard mode.
//!
//! Because the tick count is non-decreasing in order size and in
//! `1 / participation_rate`, and every path reuses its draws across sizes, the
//! estimate is monotone in both under a fixed seed.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng;
use thiserror::Error;

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;

use crate::market::{Fill, Order, SecurityDay, SecurityId, Side, TickSchedule};
use crate::money::{bps_ratio, Price};
use crate::rng::{substream, Stream};
use crate::Date;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MieError {
    #[error("market profile needs {needed} days of history, only {got} available")]
    InsufficientHistory { needed: usize, got: usize },
    #[error("market profile has an empty {0} distribution")]
    EmptyProfile(&'static str),
    #[error("invalid simulation parameters: {0}")]
    Params(String),
    #[error("nothing to compare")]
    EmptyPairing,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarketProfile {
    pub security_id: SecurityId,
    pub lookback_days: usize,
    pub intervals_per_day: u32,
    /// Tradable shares per interval, one entry per day in the look-back.
    pub volume_dist: Vec<u64>,
    /// Interval price changes.
    pub move_dist: Vec<Price>,
    pub tick_size: Price,
    /// Last close in the look-back; the simulated arrival price.
    pub ref_price: Price,
}

pub const DEFAULT_INTERVALS: u32 = 10;

/// Builds a profile from the last `lookback_days` records of `history`
/// (one security, ascending dates).
///
/// Each day's volume is spread evenly over the intervals; daily
/// close-to-close changes are scaled by `sqrt(1 / intervals)`.
pub fn build_profile(
    history: &[SecurityDay],
    lookback_days: usize,
    intervals_per_day: u32,
    ticks: &TickSchedule,
) -> Result<MarketProfile, MieError> {
    if lookback_days == 0 || intervals_per_day == 0 {
        return Err(MieError::Params("look-back and interval count must be positive".into()));
    }
    if history.len() < lookback_days {
        return Err(MieError::InsufficientHistory { needed: lookback_days, got: history.len() });
    }
    let window = &history[history.len() - lookback_days..];
    let per = intervals_per_day as f64;
    let volume_dist: Vec<u64> =
        window.iter().filter(|d| d.volume > 0.0).map(|d| ((d.volume / per).floor() as u64).max(1)).collect();
    if volume_dist.is_empty() {
        return Err(MieError::EmptyProfile("volume"));
    }
    let scale = (1.0 / per).sqrt();
    let mut move_dist: Vec<Price> = window
        .windows(2)
        .map(|w| Price::from_yen_f64((w[1].close_price - w[0].close_price) * scale).unwrap_or(Price::ZERO))
        .collect();
    if move_dist.is_empty() {
        move_dist.push(Price::ZERO);
    }
    let last = window.last().expect("non-empty look-back");
    let ref_price = Price::from_yen_f64(last.close_price).ok_or(MieError::EmptyProfile("price"))?;
    Ok(MarketProfile {
        security_id: last.security_id.clone(),
        lookback_days,
        intervals_per_day,
        volume_dist,
        move_dist,
        tick_size: ticks.tick_for(last.close_price),
        ref_price,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TradingStyle {
    Passive,
    #[default]
    Neutral,
    Aggressive,
}

impl TradingStyle {
    pub fn ticks_crossed(self) -> i64 {
        match self {
            TradingStyle::Passive => 0,
            TradingStyle::Neutral => 1,
            TradingStyle::Aggressive => 2,
        }
    }
}

impl core::str::FromStr for TradingStyle {
    type Err = MieError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "passive" => Ok(TradingStyle::Passive),
            "neutral" => Ok(TradingStyle::Neutral),
            "aggressive" => Ok(TradingStyle::Aggressive),
            other => Err(MieError::Params(format!("unknown trading style {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimParams {
    /// Share of each interval's volume the order may take, in (0, 1].
    pub participation_rate: f64,
    pub style: TradingStyle,
    pub start_frac: f64,
    pub end_frac: f64,
    pub n_paths: u32,
    pub seed: u64,
}

impl Default for SimParams {
    fn default() -> Self {
        SimParams {
            participation_rate: 0.1,
            style: TradingStyle::Neutral,
            start_frac: 0.0,
            end_frac: 1.0,
            n_paths: 200,
            seed: 0,
        }
    }
}

impl SimParams {
    pub fn validate(&self) -> Result<(), MieError> {
        let p = self.participation_rate;
        if !(p > 0.0 && p <= 1.0) {
            return Err(MieError::Params(format!("participation rate {p} outside (0, 1]")));
        }
        if !(0.0 <= self.start_frac && self.start_frac < self.end_frac && self.end_frac <= 1.0) {
            return Err(MieError::Params(format!(
                "trading window [{}, {}] must satisfy 0 <= start < end <= 1",
                self.start_frac, self.end_frac
            )));
        }
        if self.n_paths == 0 {
            return Err(MieError::Params("need at least one path".into()));
        }
        Ok(())
    }

    /// Intervals `[first, last)` covered by the trading window.
    pub fn interval_range(&self, intervals_per_day: u32) -> (u32, u32) {
        let i = intervals_per_day as f64;
        let first = (self.start_frac * i).floor() as u32;
        let last = ((self.end_frac * i).ceil() as u32).clamp(first + 1, intervals_per_day.max(first + 1));
        (first, last)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MieResult {
    pub mean_bps: f64,
    pub stdev_bps: f64,
    pub mean_executions: f64,
    pub n_paths: u32,
}

/// One simulated path.
#[derive(Debug, Clone, PartialEq)]
pub struct PathOutcome {
    pub impact_bps: f64,
    pub executions: u32,
    /// Drawn interval volumes and the price after each interval's execution.
    pub volumes: Vec<u64>,
    pub prices: Vec<Price>,
    pub ticks_crossed: i64,
}

fn pick<T: Copy>(rng: &mut Stream, v: &[T]) -> T {
    v[rng.random_range(0..v.len())]
}

/// Extra ticks for needing more than one full participation cap.
fn overflow_ticks(order_size: u64, participation_rate: f64, window_volume: u64) -> i64 {
    let cap = participation_rate * window_volume as f64;
    let need = (order_size as f64 / cap).ceil();
    if need.is_finite() {
        (need as i64 - 1).max(0)
    } else {
        i64::MAX / 4
    }
}

/// Path `index` of the simulation; depends only on `(params.seed, index)`.
pub fn simulate_path(order_size: u64, profile: &MarketProfile, params: &SimParams, index: u64) -> PathOutcome {
    let (first, last) = params.interval_range(profile.intervals_per_day);
    let m = (last - first) as usize;
    let mut rng = substream(params.seed, index);
    let mut volumes = Vec::with_capacity(m);
    let mut moves = Vec::with_capacity(m);
    for _ in 0..m {
        volumes.push(pick(&mut rng, &profile.volume_dist));
        moves.push(pick(&mut rng, &profile.move_dist));
    }
    let window_volume: u64 = volumes.iter().sum();
    let ticks = params.style.ticks_crossed() + overflow_ticks(order_size, params.participation_rate, window_volume);
    let push = profile.tick_size.nanos() as i128 * ticks as i128;

    let mut price = profile.ref_price.nanos() as i128;
    let mut prices = Vec::with_capacity(m);
    let mut weighted: i128 = 0;
    for (v, mv) in volumes.iter().zip(&moves) {
        let step = mv.nanos() as i128 + push;
        weighted += *v as i128 * step.max(0);
        price += step;
        prices.push(Price::from_nanos(price.clamp(i64::MIN as i128, i64::MAX as i128) as i64));
    }
    let base = window_volume as i128 * profile.ref_price.nanos() as i128;
    PathOutcome { impact_bps: bps_ratio(weighted, base), executions: m as u32, volumes, prices, ticks_crossed: ticks }
}

/// Mean and sample standard deviation over paths.
pub fn aggregate(paths: &[PathOutcome]) -> MieResult {
    let n = paths.len();
    let mean = paths.iter().map(|p| p.impact_bps).sum::<f64>() / n as f64;
    let stdev = if n > 1 {
        (paths.iter().map(|p| (p.impact_bps - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    let mean_executions = paths.iter().map(|p| p.executions as f64).sum::<f64>() / n as f64;
    MieResult { mean_bps: mean, stdev_bps: stdev, mean_executions, n_paths: n as u32 }
}

pub fn estimate_market_impact(
    order_size: u64,
    profile: &MarketProfile,
    params: &SimParams,
) -> Result<MieResult, MieError> {
    params.validate()?;
    if profile.volume_dist.is_empty() {
        return Err(MieError::EmptyProfile("volume"));
    }
    if profile.move_dist.is_empty() {
        return Err(MieError::EmptyProfile("move"));
    }
    if order_size == 0 {
        return Ok(MieResult { mean_bps: 0.0, stdev_bps: 0.0, mean_executions: 0.0, n_paths: params.n_paths });
    }
    let paths: Vec<PathOutcome> =
        (0..params.n_paths as u64).map(|i| simulate_path(order_size, profile, params, i)).collect();
    Ok(aggregate(&paths))
}

/// The path as a buy order: `order_size` shares per unit of drawn volume in
/// each interval, arriving at the profile's reference price.
pub fn replay_order(path: &PathOutcome, order_size: u64, profile: &MarketProfile) -> Order {
    let fills: Vec<Fill> = path
        .volumes
        .iter()
        .zip(&path.prices)
        .enumerate()
        .map(|(i, (v, p))| Fill { seq: i as u32 + 1, price: *p, shares: v * order_size })
        .collect();
    Order {
        order_id: String::from("mie-path"),
        security_id: profile.security_id.clone(),
        side: Side::Buy,
        arrival_date: Date::from_ordinal(0),
        arrival_price: profile.ref_price,
        total_shares: fills.iter().map(|f| f.shares).sum(),
        fills,
    }
}

/// Mean absolute gap between estimated and realized impact, paired by order.
pub fn calibration_error(pairs: &[(f64, f64)]) -> Result<f64, MieError> {
    if pairs.is_empty() {
        return Err(MieError::EmptyPairing);
    }
    Ok(pairs.iter().map(|(est, real)| (est - real).abs()).sum::<f64>() / pairs.len() as f64)
}
