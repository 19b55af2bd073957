//! Canonical market records: security-days, orders and fills, split and FX
//! adjustment, and the six sample windows.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use thiserror::Error;

use crate::date::Date;
use crate::money::{Price, Yen};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MarketError {
    #[error("{0}")]
    Invalid(String),
    #[error("duplicate record for security {security} on {date}")]
    DuplicateDay { security: SecurityId, date: Date },
    #[error("fill references unknown order {0}")]
    OrphanFill(String),
    #[error("order {order_id}: fills sum to {filled} shares but the order is for {total}")]
    FillMismatch { order_id: String, filled: u64, total: u64 },
    #[error("duplicate order id {0}")]
    DuplicateOrder(String),
    #[error("split ratio for {security} on {ex_date} must be positive, got {ratio}")]
    BadSplitRatio { security: SecurityId, ex_date: Date, ratio: f64 },
    #[error("no USD/JPY rate on or within {lookback} days before {date}")]
    MissingFx { date: Date, lookback: i32 },
    #[error("sample window {label} starts after it ends")]
    BadWindow { label: SampleLabel },
}

/// Exchange security code. Ordered lexicographically.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SecurityId(pub String);

impl SecurityId {
    pub fn new(id: impl Into<String>) -> Self {
        SecurityId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for SecurityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Anything that can be placed on the calendar for sample slicing.
pub trait Dated {
    fn date(&self) -> Date;
}

/// One security on one trading day.
///
/// `volume` is held as a real number: it is an integer share count on input,
/// but split adjustment by a fractional ratio scales it.
#[derive(Debug, Clone, PartialEq)]
pub struct SecurityDay {
    pub security_id: SecurityId,
    pub date: Date,
    pub close_price: f64,
    pub avg_spread: f64,
    pub volume: f64,
    pub trade_count: u64,
}

impl SecurityDay {
    pub fn new(
        security_id: SecurityId,
        date: Date,
        close_price: f64,
        avg_spread: f64,
        volume: f64,
        trade_count: u64,
    ) -> Result<Self, MarketError> {
        let day = SecurityDay { security_id, date, close_price, avg_spread, volume, trade_count };
        day.validate()?;
        Ok(day)
    }

    pub fn validate(&self) -> Result<(), MarketError> {
        let ctx = || format!("{} {}", self.security_id, self.date);
        if !(self.close_price.is_finite() && self.close_price > 0.0) {
            return Err(MarketError::Invalid(format!(
                "{}: close price must be positive, got {}",
                ctx(),
                self.close_price
            )));
        }
        if !(self.avg_spread.is_finite() && self.avg_spread >= 0.0) {
            return Err(MarketError::Invalid(format!(
                "{}: spread must be non-negative, got {}",
                ctx(),
                self.avg_spread
            )));
        }
        if !(self.volume.is_finite() && self.volume >= 0.0) {
            return Err(MarketError::Invalid(format!("{}: volume must be non-negative, got {}", ctx(), self.volume)));
        }
        if self.volume == 0.0 && self.trade_count != 0 {
            return Err(MarketError::Invalid(format!("{}: zero volume with {} trades", ctx(), self.trade_count)));
        }
        Ok(())
    }

    /// Average shares per trade; `None` on a day without trades.
    pub fn trade_size(&self) -> Option<f64> {
        (self.trade_count > 0).then(|| self.volume / self.trade_count as f64)
    }
}

impl Dated for SecurityDay {
    fn date(&self) -> Date {
        self.date
    }
}

/// Sorts security-days by `(security, date)` and rejects duplicates.
pub fn normalize_daily(mut days: Vec<SecurityDay>) -> Result<Vec<SecurityDay>, MarketError> {
    days.sort_by(|a, b| (&a.security_id, a.date).cmp(&(&b.security_id, b.date)));
    for pair in days.windows(2) {
        if pair[0].security_id == pair[1].security_id && pair[0].date == pair[1].date {
            return Err(MarketError::DuplicateDay { security: pair[0].security_id.clone(), date: pair[0].date });
        }
    }
    Ok(days)
}

/// Groups sorted security-days by security.
pub fn by_security(days: &[SecurityDay]) -> BTreeMap<SecurityId, Vec<SecurityDay>> {
    let mut out: BTreeMap<SecurityId, Vec<SecurityDay>> = BTreeMap::new();
    for d in days {
        out.entry(d.security_id.clone()).or_default().push(d.clone());
    }
    for v in out.values_mut() {
        v.sort_by_key(|d| d.date);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Side {
    Buy,
    Sell,
}

impl Side {
    /// +1 for buys, -1 for sells: the sign that turns a price rise into a cost.
    pub fn sign(self) -> i64 {
        match self {
            Side::Buy => 1,
            Side::Sell => -1,
        }
    }

    pub fn flip(self) -> Side {
        match self {
            Side::Buy => Side::Sell,
            Side::Sell => Side::Buy,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Side::Buy => "buy",
            Side::Sell => "sell",
        }
    }
}

impl FromStr for Side {
    type Err = MarketError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "buy" | "b" => Ok(Side::Buy),
            "sell" | "s" => Ok(Side::Sell),
            other => Err(MarketError::Invalid(format!("unknown side {other:?}"))),
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// An execution in trading interval `seq`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Fill {
    pub seq: u32,
    pub price: Price,
    pub shares: u64,
}

/// A fully-filled order with its executions in interval order.
#[derive(Debug, Clone, PartialEq)]
pub struct Order {
    pub order_id: String,
    pub security_id: SecurityId,
    pub side: Side,
    pub arrival_date: Date,
    pub arrival_price: Price,
    pub total_shares: u64,
    pub fills: Vec<Fill>,
}

/// Order fields as they appear before fills are attached.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderHeader {
    pub order_id: String,
    pub security_id: SecurityId,
    pub side: Side,
    pub arrival_date: Date,
    pub arrival_price: Price,
    pub total_shares: u64,
}

impl Order {
    pub fn new(header: OrderHeader, mut fills: Vec<Fill>) -> Result<Order, MarketError> {
        fills.sort_by_key(|f| f.seq);
        let order = Order {
            order_id: header.order_id,
            security_id: header.security_id,
            side: header.side,
            arrival_date: header.arrival_date,
            arrival_price: header.arrival_price,
            total_shares: header.total_shares,
            fills,
        };
        order.validate()?;
        Ok(order)
    }

    pub fn validate(&self) -> Result<(), MarketError> {
        let id = &self.order_id;
        if self.total_shares == 0 {
            return Err(MarketError::Invalid(format!("order {id}: total shares must be positive")));
        }
        if !self.arrival_price.is_positive() {
            return Err(MarketError::Invalid(format!("order {id}: arrival price must be positive")));
        }
        if self.fills.is_empty() {
            return Err(MarketError::FillMismatch { order_id: id.clone(), filled: 0, total: self.total_shares });
        }
        let mut prev_seq = 0u32;
        let mut filled: u64 = 0;
        for f in &self.fills {
            if f.seq <= prev_seq {
                return Err(MarketError::Invalid(format!(
                    "order {id}: fill sequence must be strictly increasing from 1, got {} after {prev_seq}",
                    f.seq
                )));
            }
            if !f.price.is_positive() || f.shares == 0 {
                return Err(MarketError::Invalid(format!(
                    "order {id}: fill {} needs positive price and shares",
                    f.seq
                )));
            }
            prev_seq = f.seq;
            filled = filled.saturating_add(f.shares);
        }
        if filled != self.total_shares {
            return Err(MarketError::FillMismatch { order_id: id.clone(), filled, total: self.total_shares });
        }
        Ok(())
    }

    /// T: the last trading interval with a fill.
    pub fn horizon(&self) -> u32 {
        self.fills.last().map_or(0, |f| f.seq)
    }

    /// N: the number of executions.
    pub fn executions(&self) -> usize {
        self.fills.len()
    }

    /// Arrival notional `total_shares * arrival_price`.
    pub fn arrival_notional(&self) -> Yen {
        self.arrival_price.times(self.total_shares)
    }

    /// Price of the final fill, the natural `P_T`.
    pub fn last_price(&self) -> Price {
        self.fills.last().map_or(self.arrival_price, |f| f.price)
    }
}

impl Dated for Order {
    fn date(&self) -> Date {
        self.arrival_date
    }
}

/// Attaches fills to their orders. Output follows the header order.
pub fn join_orders(headers: Vec<OrderHeader>, fills: Vec<(String, Fill)>) -> Result<Vec<Order>, MarketError> {
    let mut index: BTreeMap<String, usize> = BTreeMap::new();
    for (i, h) in headers.iter().enumerate() {
        if index.insert(h.order_id.clone(), i).is_some() {
            return Err(MarketError::DuplicateOrder(h.order_id.clone()));
        }
    }
    let mut grouped: Vec<Vec<Fill>> = headers.iter().map(|_| Vec::new()).collect();
    for (order_id, fill) in fills {
        match index.get(&order_id) {
            Some(&i) => grouped[i].push(fill),
            None => return Err(MarketError::OrphanFill(order_id)),
        }
    }
    headers.into_iter().zip(grouped).map(|(h, f)| Order::new(h, f)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitRatio {
    pub security_id: SecurityId,
    pub ex_date: Date,
    pub ratio: f64,
}

/// Restates pre-split history in post-split units.
///
/// For every split and every record of that security dated strictly before
/// the ex-date, price and spread are divided by the ratio and volume is
/// multiplied by it. Trade counts are unchanged, so trade size scales with
/// volume. Several splits compose multiplicatively.
pub fn adjust_for_splits(days: &[SecurityDay], splits: &[SplitRatio]) -> Result<Vec<SecurityDay>, MarketError> {
    let mut per_security: BTreeMap<&SecurityId, Vec<&SplitRatio>> = BTreeMap::new();
    let mut seen: BTreeSet<(&SecurityId, Date)> = BTreeSet::new();
    for s in splits {
        if !(s.ratio.is_finite() && s.ratio > 0.0) {
            return Err(MarketError::BadSplitRatio {
                security: s.security_id.clone(),
                ex_date: s.ex_date,
                ratio: s.ratio,
            });
        }
        if !seen.insert((&s.security_id, s.ex_date)) {
            return Err(MarketError::Invalid(format!("two splits for {} on {}", s.security_id, s.ex_date)));
        }
        per_security.entry(&s.security_id).or_default().push(s);
    }
    Ok(days
        .iter()
        .map(|d| {
            let mut out = d.clone();
            if let Some(list) = per_security.get(&d.security_id) {
                let factor: f64 = list.iter().filter(|s| d.date < s.ex_date).map(|s| s.ratio).product();
                if factor != 1.0 {
                    out.close_price /= factor;
                    out.avg_spread /= factor;
                    out.volume *= factor;
                }
            }
            out
        })
        .collect())
}

/// Daily USD/JPY fixings with a bounded look-back for missing days.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FxTable {
    rates: BTreeMap<Date, f64>,
    lookback_days: i32,
}

impl FxTable {
    pub const DEFAULT_LOOKBACK: i32 = 7;

    pub fn new(rates: impl IntoIterator<Item = (Date, f64)>) -> Result<FxTable, MarketError> {
        let mut map = BTreeMap::new();
        for (date, rate) in rates {
            if !(rate.is_finite() && rate > 0.0) {
                return Err(MarketError::Invalid(format!("USD/JPY on {date} must be positive, got {rate}")));
            }
            if map.insert(date, rate).is_some() {
                return Err(MarketError::Invalid(format!("two USD/JPY rates on {date}")));
            }
        }
        Ok(FxTable { rates: map, lookback_days: Self::DEFAULT_LOOKBACK })
    }

    pub fn with_lookback(mut self, days: i32) -> Self {
        self.lookback_days = days;
        self
    }

    /// Rate on `date`, or the nearest earlier fixing within the look-back.
    pub fn rate_on(&self, date: Date) -> Result<f64, MarketError> {
        self.rates
            .range(..=date)
            .next_back()
            .filter(|(d, _)| date.days_since(**d) <= self.lookback_days)
            .map(|(_, r)| *r)
            .ok_or(MarketError::MissingFx { date, lookback: self.lookback_days })
    }

    pub fn iter(&self) -> impl Iterator<Item = (Date, f64)> + '_ {
        self.rates.iter().map(|(d, r)| (*d, *r))
    }

    pub fn len(&self) -> usize {
        self.rates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rates.is_empty()
    }

    /// Converts a yen amount to USD at the rate applicable on `date`.
    pub fn to_usd(&self, notional: Yen, date: Date) -> Result<f64, MarketError> {
        to_usd(notional, date, self)
    }
}

pub fn to_usd(notional: Yen, date: Date, fx: &FxTable) -> Result<f64, MarketError> {
    let rate = fx.rate_on(date)?;
    Ok(notional.to_yen() / rate)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SampleLabel {
    SF,
    S1,
    S2,
    S3,
    S4,
    S5,
}

impl SampleLabel {
    pub const ALL: [SampleLabel; 6] =
        [SampleLabel::SF, SampleLabel::S1, SampleLabel::S2, SampleLabel::S3, SampleLabel::S4, SampleLabel::S5];

    pub fn as_str(self) -> &'static str {
        match self {
            SampleLabel::SF => "SF",
            SampleLabel::S1 => "S1",
            SampleLabel::S2 => "S2",
            SampleLabel::S3 => "S3",
            SampleLabel::S4 => "S4",
            SampleLabel::S5 => "S5",
        }
    }
}

impl fmt::Display for SampleLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SampleLabel {
    type Err = MarketError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SampleLabel::ALL
            .into_iter()
            .find(|l| l.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| MarketError::Invalid(format!("unknown sample {s:?}")))
    }
}

/// An inclusive date range.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SampleWindow {
    pub label: SampleLabel,
    pub start: Date,
    pub end: Date,
}

impl SampleWindow {
    pub fn new(label: SampleLabel, start: Date, end: Date) -> Result<Self, MarketError> {
        if start > end {
            return Err(MarketError::BadWindow { label });
        }
        Ok(SampleWindow { label, start, end })
    }

    pub fn contains(&self, date: Date) -> bool {
        self.start <= date && date <= self.end
    }

    /// The same window with its end pulled in to `end` if that is earlier.
    pub fn truncated(&self, end: Date) -> SampleWindow {
        SampleWindow { end: self.end.min(end), ..*self }
    }
}

pub fn default_windows() -> [SampleWindow; 6] {
    let start = Date::ymd(2013, 7, 1);
    let end = Date::ymd(2014, 12, 10);
    let w = |label, s, e| SampleWindow { label, start: s, end: e };
    [
        w(SampleLabel::SF, start, end),
        w(SampleLabel::S1, start, Date::ymd(2014, 1, 10)),
        w(SampleLabel::S2, Date::ymd(2014, 1, 14), Date::ymd(2014, 7, 18)),
        w(SampleLabel::S3, Date::ymd(2014, 7, 22), end),
        w(SampleLabel::S4, start, Date::ymd(2014, 7, 18)),
        w(SampleLabel::S5, Date::ymd(2014, 1, 15), end),
    ]
}

/// Labels of every window containing `date`, in window order.
pub fn membership(date: Date, windows: &[SampleWindow]) -> Vec<SampleLabel> {
    windows.iter().filter(|w| w.contains(date)).map(|w| w.label).collect()
}

/// Splits a dataset into one subset per window; a record lands in every
/// window that contains its date.
pub fn slice_samples<T: Dated + Clone>(items: &[T], windows: &[SampleWindow]) -> BTreeMap<SampleLabel, Vec<T>> {
    windows.iter().map(|w| (w.label, items.iter().filter(|x| w.contains(x.date())).cloned().collect())).collect()
}

/// Exchange tick schedule: a step function of price.
#[derive(Debug, Clone, PartialEq)]
pub struct TickSchedule {
    /// `(upper price bound inclusive, tick)`, ascending. The last bound is
    /// treated as unbounded.
    steps: Vec<(f64, Price)>,
}

impl TickSchedule {
    pub fn new(steps: Vec<(f64, Price)>) -> Result<Self, MarketError> {
        if steps.is_empty() {
            return Err(MarketError::Invalid("tick schedule needs at least one step".into()));
        }
        if steps.windows(2).any(|w| w[0].0 >= w[1].0) || steps.iter().any(|s| !s.1.is_positive()) {
            return Err(MarketError::Invalid("tick schedule bounds must ascend and ticks be positive".into()));
        }
        Ok(TickSchedule { steps })
    }

    /// Tokyo schedule in force before January 2014.
    pub fn tse_standard() -> Self {
        let y = Price::from_yen;
        TickSchedule {
            steps: alloc::vec![
                (3_000.0, y(1)),
                (5_000.0, y(5)),
                (30_000.0, y(10)),
                (50_000.0, y(50)),
                (300_000.0, y(100)),
                (500_000.0, y(500)),
                (3_000_000.0, y(1_000)),
                (5_000_000.0, y(5_000)),
                (30_000_000.0, y(10_000)),
                (50_000_000.0, y(50_000)),
                (f64::INFINITY, y(100_000)),
            ],
        }
    }

    /// Schedule for index constituents once decimal ticks were introduced.
    pub fn tse_topix100_decimal() -> Self {
        let y = Price::from_yen;
        TickSchedule {
            steps: alloc::vec![
                (1_000.0, Price::from_nanos(100_000_000)),
                (3_000.0, Price::from_nanos(500_000_000)),
                (10_000.0, y(1)),
                (30_000.0, y(5)),
                (100_000.0, y(10)),
                (300_000.0, y(50)),
                (1_000_000.0, y(100)),
                (3_000_000.0, y(500)),
                (10_000_000.0, y(1_000)),
                (30_000_000.0, y(5_000)),
                (f64::INFINITY, y(10_000)),
            ],
        }
    }

    pub fn tick_for(&self, price: f64) -> Price {
        self.steps
            .iter()
            .find(|(bound, _)| price <= *bound)
            .or(self.steps.last())
            .map(|(_, t)| *t)
            .expect("non-empty schedule")
    }
}
