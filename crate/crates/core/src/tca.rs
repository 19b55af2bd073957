//! Per-order cost decomposition.
//!
//! All currency amounts are exact nano-yen. Internally a cost is positive
//! when it hurts the trader; [`present`] flips the sign for reports that
//! follow the "impact is negative" convention.

use alloc::string::String;
use alloc::vec::Vec;

use thiserror::Error;

use crate::date::Date;
use crate::market::{FxTable, MarketError, Order, SecurityId, Side};
use crate::money::{bps_ratio, Price, Yen};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TcaError {
    #[error("order {0}: arrival notional is zero")]
    ZeroNotional(String),
    #[error("order {0}: daily volume must be positive")]
    ZeroVolume(String),
    #[error(transparent)]
    Market(#[from] MarketError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MiMode {
    /// Every adverse move from the previous fill's price counts.
    #[default]
    Standard,
    /// Only moves that push past the worst price seen so far count.
    NetNewLevels,
}

/// A cost in yen and in basis points of arrival notional.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cost {
    pub ccy: Yen,
    pub bps: f64,
}

impl Cost {
    fn of(ccy: Yen, notional: Yen) -> Cost {
        Cost { ccy, bps: bps_ratio(ccy.nanos(), notional.nanos()) }
    }
}

fn notional(order: &Order) -> Result<Yen, TcaError> {
    let n = order.arrival_notional();
    if n.nanos() <= 0 {
        return Err(TcaError::ZeroNotional(order.order_id.clone()));
    }
    Ok(n)
}

/// Side-signed price: buys lose when it rises, so do sells after the flip.
fn signed(side: Side, p: Price) -> i128 {
    side.sign() as i128 * p.nanos() as i128
}

/// Gain on the paper portfolio had the whole order traded at `P_0` and been
/// marked at `p_t`.
pub fn paper_return(order: &Order, p_t: Price) -> Yen {
    let shares = order.total_shares as i128;
    Yen::from_nanos(shares * (signed(order.side, p_t) - signed(order.side, order.arrival_price)))
}

/// Executed cost against arrival: `sum S_t P_t - S P_0` for buys, mirrored
/// for sells.
pub fn implementation_shortfall(order: &Order) -> Result<Cost, TcaError> {
    let base = notional(order)?;
    let p0 = signed(order.side, order.arrival_price);
    let total: i128 = order.fills.iter().map(|f| f.shares as i128 * (signed(order.side, f.price) - p0)).sum();
    Ok(Cost::of(Yen::from_nanos(total), base))
}

/// Adverse price increments accumulated fill by fill, weighted by shares.
///
/// The reference for the first fill is `P_0`.
pub fn market_impact(order: &Order, mode: MiMode) -> Result<Cost, TcaError> {
    let base = notional(order)?;
    Ok(Cost::of(Yen::from_nanos(impact_nanos(order, mode)), base))
}

fn impact_nanos(order: &Order, mode: MiMode) -> i128 {
    let mut reference = signed(order.side, order.arrival_price);
    let mut total: i128 = 0;
    for f in &order.fills {
        let p = signed(order.side, f.price);
        total += f.shares as i128 * (p - reference).max(0);
        reference = match mode {
            MiMode::Standard => p,
            MiMode::NetNewLevels => reference.max(p),
        };
    }
    total
}

/// Shortfall not explained by the fills' own impact.
pub fn market_timing(order: &Order) -> Result<Cost, TcaError> {
    Ok(decompose(order)?.mt)
}

/// `is = mi + mt`, with `mi` in [`MiMode::Standard`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decomposition {
    pub is: Cost,
    pub mi: Cost,
    pub mt: Cost,
}

pub fn decompose(order: &Order) -> Result<Decomposition, TcaError> {
    let is = implementation_shortfall(order)?;
    let mi = market_impact(order, MiMode::Standard)?;
    let base = order.arrival_notional();
    Ok(Decomposition { is, mi, mt: Cost::of(is.ccy - mi.ccy, base) })
}

/// Shares still to trade at the start of each interval: `W_1 ..= W_{T+1}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TradingTrajectory {
    pub w: Vec<u64>,
}

impl TradingTrajectory {
    /// `S_t = W_t - W_{t+1}` for `t = 1..=T`.
    pub fn interval_shares(&self) -> Vec<u64> {
        self.w.windows(2).map(|p| p[0] - p[1]).collect()
    }
}

/// Intervals without a fill keep `W` flat.
pub fn trajectory(order: &Order) -> TradingTrajectory {
    let horizon = order.horizon() as usize;
    let mut w = Vec::with_capacity(horizon + 1);
    let mut remaining = order.total_shares;
    let mut fills = order.fills.iter().peekable();
    for t in 1..=horizon as u32 {
        w.push(remaining);
        while let Some(f) = fills.next_if(|f| f.seq == t) {
            remaining -= f.shares;
        }
    }
    w.push(remaining);
    TradingTrajectory { w }
}

/// Everything the cost regressions need about one order.
#[derive(Debug, Clone, PartialEq)]
pub struct CostRecord {
    pub order_id: String,
    pub security_id: SecurityId,
    pub side: Side,
    pub arrival_date: Date,
    pub is_ccy: Yen,
    pub mi_ccy: Yen,
    pub mt_ccy: Yen,
    pub is_bps: f64,
    pub mi_bps: f64,
    pub mt_bps: f64,
    /// Order shares as a percentage of the day's volume.
    pub liquidity_demand_pct: f64,
    pub notional_usd: f64,
    pub executions: usize,
}

impl crate::market::Dated for CostRecord {
    fn date(&self) -> Date {
        self.arrival_date
    }
}

pub fn cost_record(order: &Order, daily_volume: f64, fx: &FxTable) -> Result<CostRecord, TcaError> {
    if !(daily_volume.is_finite() && daily_volume > 0.0) {
        return Err(TcaError::ZeroVolume(order.order_id.clone()));
    }
    let d = decompose(order)?;
    let notional_usd = fx.to_usd(order.arrival_notional(), order.arrival_date)?;
    Ok(CostRecord {
        order_id: order.order_id.clone(),
        security_id: order.security_id.clone(),
        side: order.side,
        arrival_date: order.arrival_date,
        is_ccy: d.is.ccy,
        mi_ccy: d.mi.ccy,
        mt_ccy: d.mt.ccy,
        is_bps: d.is.bps,
        mi_bps: d.mi.bps,
        mt_bps: d.mt.bps,
        liquidity_demand_pct: 100.0 * order.total_shares as f64 / daily_volume,
        notional_usd,
        executions: order.executions(),
    })
}

/// Output sign: `negate` reports costs as negative numbers.
pub fn present(value: f64, negate: bool) -> f64 {
    if negate && value != 0.0 {
        -value
    } else {
        value
    }
}
