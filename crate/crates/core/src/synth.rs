//! Seeded synthetic market and order data with known effects.
//!
//! Every security, the FX path and every order draw from their own
//! `(seed, index)` substream, so any subset can be regenerated alone and the
//! work can be split across threads without changing a byte.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;
use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::date::Date;
use crate::event::{default_phases, BucketScheme, EventPhase};
use crate::market::{Fill, FxTable, MarketError, Order, OrderHeader, SecurityDay, SecurityId, Side, SplitRatio};
use crate::money::Price;
use crate::rng::{derive_seed, substream, Stream};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SynthError {
    #[error("invalid synthetic config: {0}")]
    Config(String),
    #[error(transparent)]
    Market(#[from] MarketError),
}

const TAG_SECURITY: u64 = 1;
const TAG_FX: u64 = 2;
const TAG_ORDER: u64 = 3;

/// `volume = intercept + per_trade * trades - per_spread_yen * spread`,
/// before noise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VolumeModel {
    pub intercept: f64,
    pub per_trade: f64,
    pub per_spread_yen: f64,
}

/// An MI shift for orders at or above a notional from a date on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodEffect {
    pub from: Date,
    pub min_notional_mm: f64,
    pub bps: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CostModel {
    pub base_bps: f64,
    /// One effect per bucket of `liquidity`.
    pub liquidity: BucketScheme,
    pub liquidity_effects: Vec<f64>,
    /// Notional buckets in millions of USD; orders are drawn bucket-first
    /// with `notional_weights`, log-uniform inside a bucket.
    pub notional: BucketScheme,
    pub notional_effects: Vec<f64>,
    pub notional_weights: Vec<f64>,
    pub min_notional_mm: f64,
    pub max_notional_mm: f64,
    pub period_effects: Vec<PeriodEffect>,
    /// Noise is normal truncated at four standard deviations.
    pub mi_noise_bps: f64,
    pub mt_noise_bps: f64,
}

impl Default for CostModel {
    fn default() -> Self {
        CostModel {
            base_bps: 40.0,
            liquidity: BucketScheme::liquidity_default(),
            liquidity_effects: vec![0.0, 3.0, 6.0, 10.0, 15.0],
            notional: BucketScheme::new(vec![0.0, 1.0, 5.0, 10.0, 25.0], "MM").expect("valid edges"),
            notional_effects: vec![0.0, 2.0, 4.0, 6.0, 8.0],
            notional_weights: vec![0.3, 0.25, 0.15, 0.15, 0.15],
            min_notional_mm: 0.05,
            max_notional_mm: 60.0,
            period_effects: vec![PeriodEffect { from: Date::ymd(2014, 1, 14), min_notional_mm: 10.0, bps: -10.0 }],
            mi_noise_bps: 5.0,
            mt_noise_bps: 10.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    pub security: usize,
    pub ex_date: Date,
    pub ratio: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub n_securities: usize,
    pub start: Date,
    pub end: Date,
    pub phases: Vec<EventPhase>,
    /// Spread multiplier from each phase's ex-date on, for names the phase
    /// rule selects.
    pub spread_step_down: Vec<f64>,
    /// Trade size multiplier for affected names, applied through the trade
    /// count.
    pub trade_size_step_down: f64,
    /// Daily drift of log trade counts.
    pub volume_drift: f64,
    /// Daily log-price volatility.
    pub price_vol: f64,
    pub fx_vol: f64,
    /// Log-spread noise, truncated at 2.5 standard deviations.
    pub spread_noise: f64,
    pub trade_noise: f64,
    /// Additive volume noise in shares.
    pub volume_noise: f64,
    pub volume: VolumeModel,
    /// Spread multiplier applied to every name from the date on.
    pub outlier: Option<(Date, f64)>,
    pub splits: Vec<SplitSpec>,
    pub n_orders: usize,
    pub max_fills: u32,
    pub cost: CostModel,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_securities: 100,
            start: Date::ymd(2013, 7, 1),
            end: Date::ymd(2014, 12, 10),
            phases: default_phases().to_vec(),
            spread_step_down: vec![0.5, 0.5],
            trade_size_step_down: 0.8,
            volume_drift: 0.0005,
            price_vol: 0.015,
            fx_vol: 0.005,
            spread_noise: 0.1,
            trade_noise: 0.15,
            volume_noise: 20_000.0,
            volume: VolumeModel { intercept: 100_000.0, per_trade: 200.0, per_spread_yen: 2_000.0 },
            outlier: Some((Date::ymd(2014, 10, 31), 1.6)),
            splits: vec![
                SplitSpec { security: 3, ex_date: Date::ymd(2014, 4, 1), ratio: 2 },
                SplitSpec { security: 7, ex_date: Date::ymd(2014, 9, 1), ratio: 2 },
            ],
            n_orders: 250_000,
            max_fills: 10,
            cost: CostModel::default(),
            seed: 42,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: String| Err(SynthError::Config(m));
        if self.n_securities == 0 {
            return bad("n_securities must be positive".into());
        }
        if self.start > self.end {
            return bad(format!("start {} after end {}", self.start, self.end));
        }
        let in_range = |d: Date| self.start <= d && d <= self.end;
        if self.phases.len() != self.spread_step_down.len() {
            return bad("one spread_step_down factor per phase".into());
        }
        for (p, f) in self.phases.iter().zip(&self.spread_step_down) {
            if !in_range(p.ex_date) {
                return bad(format!("{} ex-date {} outside the date range", p.label, p.ex_date));
            }
            if !(*f > 0.0 && f.is_finite()) {
                return bad(format!("spread_step_down must be positive, got {f}"));
            }
        }
        let positive =
            [("trade_size_step_down", self.trade_size_step_down), ("volume.per_trade", self.volume.per_trade)];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        let non_negative = [
            ("price_vol", self.price_vol),
            ("fx_vol", self.fx_vol),
            ("spread_noise", self.spread_noise),
            ("trade_noise", self.trade_noise),
            ("volume_noise", self.volume_noise),
            ("volume.intercept", self.volume.intercept),
            ("volume.per_spread_yen", self.volume.per_spread_yen),
            ("cost.mi_noise_bps", self.cost.mi_noise_bps),
            ("cost.mt_noise_bps", self.cost.mt_noise_bps),
        ];
        for (name, v) in non_negative {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(format!("{name} must be non-negative, got {v}"));
            }
        }
        if !self.volume_drift.is_finite() {
            return bad("volume_drift must be finite".into());
        }
        if let Some((d, f)) = self.outlier {
            if !in_range(d) || !(f > 0.0 && f.is_finite()) {
                return bad(format!("outlier ({d}, {f}) needs a date in range and a positive factor"));
            }
        }
        for s in &self.splits {
            if s.security >= self.n_securities || !in_range(s.ex_date) || s.ratio == 0 {
                return bad(format!("split {:?} references a missing security, an out-of-range date or ratio 0", s));
            }
        }
        if self.max_fills == 0 {
            return bad("max_fills must be positive".into());
        }
        let c = &self.cost;
        if c.liquidity_effects.len() != c.liquidity.len()
            || c.notional_effects.len() != c.notional.len()
            || c.notional_weights.len() != c.notional.len()
        {
            return bad("one cost effect and weight per bucket".into());
        }
        if c.notional_weights.iter().any(|w| !(*w >= 0.0)) || c.notional_weights.iter().sum::<f64>() <= 0.0 {
            return bad("notional weights must be non-negative and not all zero".into());
        }
        let edges = c.notional.edges();
        if !(c.min_notional_mm > 0.0 && c.min_notional_mm < edges.get(1).copied().unwrap_or(f64::INFINITY))
            || !(c.max_notional_mm > *edges.last().expect("non-empty"))
        {
            return bad("notional range must span every bucket".into());
        }
        let lowest = c.base_bps
            + c.liquidity_effects.iter().copied().fold(f64::INFINITY, f64::min)
            + c.notional_effects.iter().copied().fold(f64::INFINITY, f64::min)
            + c.period_effects.iter().map(|p| p.bps.min(0.0)).sum::<f64>()
            - 4.0 * c.mi_noise_bps;
        if lowest < 0.0 {
            return bad(format!("infeasible cost model: MI target can reach {lowest:.3} bps"));
        }
        Ok(())
    }

    fn volume_unit(&self) -> u64 {
        self.splits.iter().fold(2, |acc, s| lcm(acc, s.ratio as u64))
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn lcm(a: u64, b: u64) -> u64 {
    a / gcd(a, b) * b
}

/// 2013 and 2014 exchange holidays falling on weekdays.
const HOLIDAYS: [(i32, u32, u32); 22] = [
    (2013, 1, 1),
    (2013, 1, 2),
    (2013, 1, 3),
    (2013, 1, 14),
    (2013, 2, 11),
    (2013, 3, 20),
    (2013, 4, 29),
    (2013, 5, 3),
    (2013, 5, 6),
    (2013, 7, 15),
    (2013, 9, 16),
    (2013, 9, 23),
    (2013, 10, 14),
    (2013, 11, 4),
    (2013, 12, 23),
    (2013, 12, 31),
    (2014, 1, 1),
    (2014, 1, 2),
    (2014, 1, 3),
    (2014, 1, 13),
    (2014, 2, 11),
    (2014, 3, 21),
];

const HOLIDAYS_2014: [(i32, u32, u32); 9] = [
    (2014, 4, 29),
    (2014, 5, 5),
    (2014, 5, 6),
    (2014, 7, 21),
    (2014, 9, 15),
    (2014, 9, 23),
    (2014, 10, 13),
    (2014, 11, 3),
    (2014, 11, 24),
];

/// Weekdays in `[start, end]` minus the listed holidays.
pub fn trading_calendar(start: Date, end: Date) -> Vec<Date> {
    let holidays: BTreeSet<Date> =
        HOLIDAYS.iter().chain(HOLIDAYS_2014.iter()).map(|&(y, m, d)| Date::ymd(y, m, d)).collect();
    let mut out = Vec::new();
    let mut d = start;
    while d <= end {
        if !d.is_weekend() && !holidays.contains(&d) {
            out.push(d);
        }
        d = d.add_days(1);
    }
    out
}

fn normal(rng: &mut Stream) -> f64 {
    rng.sample(StandardNormal)
}

/// Standard normal conditioned on `|z| <= k`.
fn truncated_normal(rng: &mut Stream, k: f64) -> f64 {
    loop {
        let z = normal(rng);
        if z.abs() <= k {
            return z;
        }
    }
}

fn log_uniform(rng: &mut Stream, lo: f64, hi: f64) -> f64 {
    (lo.ln() + rng.random::<f64>() * (hi.ln() - lo.ln())).exp()
}

pub fn security_id(index: usize) -> SecurityId {
    SecurityId::new(format!("{}", 1300 + 17 * index))
}

/// Daily USD/JPY on the calendar, rounded to 0.001.
pub fn generate_fx(cfg: &SynthConfig, calendar: &[Date]) -> Vec<(Date, f64)> {
    let mut rng = substream(derive_seed(cfg.seed, TAG_FX), 0);
    let mut log_rate = 100.0f64.ln();
    calendar
        .iter()
        .map(|d| {
            log_rate += cfg.fx_vol * normal(&mut rng);
            (*d, (log_rate.exp() * 1000.0).round() / 1000.0)
        })
        .collect()
}

/// One security's path in split-adjusted units, plus the raw rows.
#[derive(Debug, Clone, PartialEq)]
pub struct SecurityPath {
    pub security_id: SecurityId,
    pub adjusted: Vec<SecurityDay>,
    pub raw: Vec<SecurityDay>,
    /// Per phase, whether the phase rule selected this name.
    pub affected: Vec<bool>,
}

pub fn generate_security(cfg: &SynthConfig, calendar: &[Date], index: usize) -> Result<SecurityPath, SynthError> {
    let mut rng = substream(derive_seed(cfg.seed, TAG_SECURITY), index as u64);
    let id = security_id(index);
    let n = calendar.len();
    let p0 = log_uniform(&mut rng, 500.0, 12_000.0);
    let turnover = log_uniform(&mut rng, 3e9, 3e11);
    let rel_spread = 3e-4 + rng.random::<f64>() * 9e-4;
    let base_trades = turnover / (cfg.volume.per_trade * p0);
    let base_spread = (rel_spread * p0).max(0.1);

    let mut price = Vec::with_capacity(n);
    let mut log_p = p0.ln();
    for _ in 0..n {
        log_p += cfg.price_vol * normal(&mut rng) - 0.5 * cfg.price_vol * cfg.price_vol;
        price.push(log_p.exp().round().max(1.0));
    }

    let affected: Vec<bool> = cfg
        .phases
        .iter()
        .map(|p| {
            let t = calendar.partition_point(|d| *d < p.ex_date);
            t < n && calendar[t] == p.ex_date && p.rule.matches(price[t])
        })
        .collect();

    let unit = cfg.volume_unit() as f64;
    let mut adjusted = Vec::with_capacity(n);
    for (t, d) in calendar.iter().enumerate() {
        let mut regime = 1.0;
        let mut trade_mult = 1.0;
        for ((p, f), hit) in cfg.phases.iter().zip(&cfg.spread_step_down).zip(&affected) {
            if *hit && *d >= p.ex_date {
                regime *= f;
                trade_mult /= cfg.trade_size_step_down;
            }
        }
        if let Some((od, f)) = cfg.outlier {
            if *d >= od {
                regime *= f;
            }
        }
        let spread_eps = truncated_normal(&mut rng, 2.5);
        let trade_eps = truncated_normal(&mut rng, 4.0);
        let vol_eps = truncated_normal(&mut rng, 4.0);
        let spread = (base_spread * regime * (cfg.spread_noise * spread_eps).exp() * 1000.0).round().max(1.0) / 1000.0;
        let trades = (base_trades * trade_mult * (cfg.volume_drift * t as f64 + cfg.trade_noise * trade_eps).exp())
            .round()
            .max(1.0);
        let exact = cfg.volume.intercept + cfg.volume.per_trade * trades - cfg.volume.per_spread_yen * spread
            + cfg.volume_noise * vol_eps;
        let volume = ((exact / unit).round() * unit).max(unit * trades.max(1.0));
        adjusted.push(SecurityDay::new(id.clone(), *d, price[t], spread, volume, trades as u64)?);
    }

    let raw = adjusted
        .iter()
        .map(|day| {
            let factor: u32 =
                cfg.splits.iter().filter(|s| s.security == index && day.date < s.ex_date).map(|s| s.ratio).product();
            let f = factor as f64;
            SecurityDay {
                close_price: day.close_price * f,
                avg_spread: day.avg_spread * f,
                volume: day.volume / f,
                ..day.clone()
            }
        })
        .collect();
    Ok(SecurityPath { security_id: id, adjusted, raw, affected })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthMarket {
    pub calendar: Vec<Date>,
    /// Security paths in ascending id order.
    pub securities: Vec<SecurityPath>,
    pub splits: Vec<SplitRatio>,
    pub fx: Vec<(Date, f64)>,
}

impl SynthMarket {
    /// Raw rows sorted by `(security, date)`.
    pub fn raw_days(&self) -> Vec<SecurityDay> {
        self.securities.iter().flat_map(|s| s.raw.iter().cloned()).collect()
    }

    pub fn adjusted_days(&self) -> Vec<SecurityDay> {
        self.securities.iter().flat_map(|s| s.adjusted.iter().cloned()).collect()
    }

    pub fn fx_table(&self) -> Result<FxTable, SynthError> {
        Ok(FxTable::new(self.fx.iter().copied())?)
    }

    /// Names the generator treated as affected by phase `i`.
    pub fn affected(&self, phase: usize) -> BTreeSet<SecurityId> {
        self.securities.iter().filter(|s| s.affected[phase]).map(|s| s.security_id.clone()).collect()
    }
}

/// Trading calendar and USD/JPY path shared by every security.
pub type Skeleton = (Vec<Date>, Vec<(Date, f64)>);

pub fn market_skeleton(cfg: &SynthConfig) -> Result<Skeleton, SynthError> {
    cfg.validate()?;
    let calendar = trading_calendar(cfg.start, cfg.end);
    if calendar.is_empty() {
        return Err(SynthError::Config("no trading days in range".into()));
    }
    let fx = generate_fx(cfg, &calendar);
    Ok((calendar, fx))
}

/// Assembles a market from paths generated elsewhere, e.g. in parallel.
pub fn assemble_market(
    cfg: &SynthConfig,
    calendar: Vec<Date>,
    fx: Vec<(Date, f64)>,
    mut securities: Vec<SecurityPath>,
) -> SynthMarket {
    let mut ids: Vec<SecurityId> = securities.iter().map(|s| s.security_id.clone()).collect();
    ids.sort();
    securities.sort_by(|a, b| a.security_id.cmp(&b.security_id));
    let mut splits: Vec<SplitRatio> = cfg
        .splits
        .iter()
        .map(|s| SplitRatio { security_id: security_id(s.security), ex_date: s.ex_date, ratio: s.ratio as f64 })
        .collect();
    splits.sort_by(|a, b| (&a.security_id, a.ex_date).cmp(&(&b.security_id, b.ex_date)));
    SynthMarket { calendar, securities, splits, fx }
}

pub fn generate_market(cfg: &SynthConfig) -> Result<SynthMarket, SynthError> {
    let (calendar, fx) = market_skeleton(cfg)?;
    let securities =
        (0..cfg.n_securities).map(|i| generate_security(cfg, &calendar, i)).collect::<Result<Vec<_>, _>>()?;
    Ok(assemble_market(cfg, calendar, fx, securities))
}

/// What the generator aimed for on one order.
#[derive(Debug, Clone, PartialEq)]
pub struct TruthLabel {
    pub order_id: String,
    pub target_mi_bps: f64,
    /// After clamping to what the fill count allows.
    pub target_mt_bps: f64,
    /// Liquidity, notional and period effects, without base or noise.
    pub bucket_effect_bps: f64,
}

pub fn order_id(index: usize) -> String {
    format!("O{index:07}")
}

/// Fill prices in side-signed nano-yen that realize the targets exactly up
/// to integer rounding. Returns the prices and the realized MT in bps.
///
/// MI goes to the first and last fills; how it splits between them sets the
/// positive part of MT, since an adverse move at fill `j` also costs every
/// share still to trade. Negative MT is a favourable move at the first fill.
fn fill_path(shares: &[u64], p0: i128, mi_bps: f64, mt_bps: f64) -> (Vec<i128>, f64) {
    let n = shares.len();
    let total: u64 = shares.iter().sum();
    let base = total as f64 * p0.abs() as f64;
    let m = (mi_bps * base / 1e4).round();
    let mut inc = vec![0i128; n];
    let mut dec = 0i128;
    let mt_nanos;
    if n == 1 {
        inc[0] = (m / shares[0] as f64).round() as i128;
        if m == 0.0 && mt_bps < 0.0 {
            dec = (-mt_bps * base / 1e4 / total as f64).round() as i128;
        }
        mt_nanos = -(dec * total as i128);
    } else if mt_bps >= 0.0 {
        let rest = (total - shares[0]) as f64;
        let mt_max = m * rest / shares[0] as f64;
        let want = mt_bps * base / 1e4;
        let lambda = if mt_max > 0.0 { (want / mt_max).min(1.0) } else { 0.0 };
        inc[0] = (lambda * m / shares[0] as f64).round() as i128;
        let front = inc[0] * shares[0] as i128;
        inc[n - 1] = ((m - front as f64) / shares[n - 1] as f64).round().max(0.0) as i128;
        mt_nanos = inc[0] * rest as i128;
    } else {
        inc[n - 1] = (m / shares[n - 1] as f64).round() as i128;
        dec = (-mt_bps * base / 1e4 / total as f64).round() as i128;
        mt_nanos = -(dec * total as i128);
    }
    let mut p = p0 - dec;
    let mut out = Vec::with_capacity(n);
    for (j, i) in inc.iter().enumerate() {
        if j == 0 && dec > 0 {
            // A favourable first fill carries no impact.
            debug_assert_eq!(*i, 0);
        }
        p += i;
        out.push(p);
    }
    (out, 1e4 * mt_nanos as f64 / base)
}

fn split_shares(rng: &mut Stream, total: u64, n: usize) -> Vec<u64> {
    let w: Vec<f64> = (0..n).map(|_| 1.0 + rng.random::<f64>()).collect();
    let sum: f64 = w.iter().sum();
    let mut out: Vec<u64> = w.iter().map(|x| ((total as f64 * x / sum).floor() as u64).max(1)).collect();
    let assigned: u64 = out.iter().sum();
    out[n - 1] = (out[n - 1] + total).saturating_sub(assigned).max(1);
    out
}

pub fn generate_order(
    cfg: &SynthConfig,
    market: &SynthMarket,
    fx: &FxTable,
    index: usize,
) -> Result<(Order, TruthLabel), SynthError> {
    let mut rng = substream(derive_seed(cfg.seed, TAG_ORDER), index as u64);
    let c = &cfg.cost;

    let wsum: f64 = c.notional_weights.iter().sum();
    let mut u = rng.random::<f64>() * wsum;
    let mut bucket = c.notional_weights.len() - 1;
    for (b, w) in c.notional_weights.iter().enumerate() {
        if u < *w {
            bucket = b;
            break;
        }
        u -= w;
    }
    let edges = c.notional.edges();
    let lo = if bucket == 0 { c.min_notional_mm } else { edges[bucket] };
    let hi = edges.get(bucket + 1).copied().unwrap_or(c.max_notional_mm);
    let notional_mm = log_uniform(&mut rng, lo, hi);

    let sec = &market.securities[rng.random_range(0..market.securities.len())];
    let day = &sec.raw[rng.random_range(0..sec.raw.len())];
    let side = if rng.random::<bool>() { Side::Buy } else { Side::Sell };
    let rate = fx.rate_on(day.date)?;
    let p0 = Price::from_yen_f64(day.close_price)
        .ok_or_else(|| SynthError::Config(format!("price {} out of range", day.close_price)))?;
    let lots = (notional_mm * 1e6 * rate / day.close_price / 100.0).round().max(1.0) as u64;
    let total = lots * 100;
    let n_fills = rng.random_range(1..=cfg.max_fills) as usize;
    let shares = split_shares(&mut rng, total, n_fills.min(total as usize));

    let header = OrderHeader {
        order_id: order_id(index),
        security_id: sec.security_id.clone(),
        side,
        arrival_date: day.date,
        arrival_price: p0,
        total_shares: total,
    };
    // Buckets come from the realized order, the same way a cost record sees it.
    let realized_usd = fx.to_usd(p0.times(total), day.date)?;
    let liq_pct = 100.0 * total as f64 / day.volume;
    let liq_b = c.liquidity.index(liq_pct).map_err(|e| SynthError::Config(format!("{e}")))?;
    let not_b = c.notional.index(realized_usd / 1e6).map_err(|e| SynthError::Config(format!("{e}")))?;
    let period: f64 = c
        .period_effects
        .iter()
        .filter(|p| day.date >= p.from && realized_usd / 1e6 >= p.min_notional_mm)
        .map(|p| p.bps)
        .sum();
    let effect = c.liquidity_effects[liq_b] + c.notional_effects[not_b] + period;
    let mi = c.base_bps + effect + c.mi_noise_bps * truncated_normal(&mut rng, 4.0);
    if mi < 0.0 {
        return Err(SynthError::Config(format!("order {index}: infeasible MI target {mi}")));
    }
    let mt = c.mt_noise_bps * truncated_normal(&mut rng, 4.0);

    let sign = side.sign() as i128;
    let (signed, mt_real) = fill_path(&shares, sign * p0.nanos() as i128, mi, mt);
    let fills = signed
        .iter()
        .zip(&shares)
        .enumerate()
        .map(|(j, (s, q))| {
            let nanos = i64::try_from(sign * s).ok().filter(|v| *v > 0);
            nanos
                .map(|v| Fill { seq: j as u32 + 1, price: Price::from_nanos(v), shares: *q })
                .ok_or_else(|| SynthError::Config(format!("order {index}: fill price left the valid range")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let order = Order::new(header, fills)?;
    let truth =
        TruthLabel { order_id: order_id(index), target_mi_bps: mi, target_mt_bps: mt_real, bucket_effect_bps: effect };
    Ok((order, truth))
}

pub fn generate_orders(cfg: &SynthConfig, market: &SynthMarket) -> Result<(Vec<Order>, Vec<TruthLabel>), SynthError> {
    let fx = market.fx_table()?;
    let mut orders = Vec::with_capacity(cfg.n_orders);
    let mut truth = Vec::with_capacity(cfg.n_orders);
    for i in 0..cfg.n_orders {
        let (o, t) = generate_order(cfg, market, &fx, i)?;
        orders.push(o);
        truth.push(t);
    }
    Ok((orders, truth))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market::adjust_for_splits;
    use crate::tca::{decompose, market_impact, MiMode};

    fn small() -> SynthConfig {
        SynthConfig { n_securities: 12, n_orders: 3_000, ..SynthConfig::default() }
    }

    #[test]
    fn calendar_has_scheme_dates_and_skips_holidays() {
        let cal = trading_calendar(Date::ymd(2013, 7, 1), Date::ymd(2014, 12, 10));
        assert!(cal.len() > 340 && cal.len() < 380, "{}", cal.len());
        for d in
            [(1, 6), (1, 8), (1, 10), (1, 14), (1, 15), (1, 16), (7, 14), (7, 17), (7, 18), (7, 22), (7, 24), (7, 28)]
        {
            assert!(cal.contains(&Date::ymd(2014, d.0, d.1)));
        }
        assert!(!cal.contains(&Date::ymd(2014, 1, 13)));
        assert!(!cal.contains(&Date::ymd(2014, 7, 21)));
    }

    #[test]
    fn labels_match_tca() {
        let cfg = small();
        let m = generate_market(&cfg).unwrap();
        let (orders, truth) = generate_orders(&cfg, &m).unwrap();
        for (o, t) in orders.iter().zip(&truth) {
            let d = decompose(o).unwrap();
            assert!((d.mi.bps - t.target_mi_bps).abs() < 1e-6, "{} {} {}", o.order_id, d.mi.bps, t.target_mi_bps);
            assert!((d.mt.bps - t.target_mt_bps).abs() < 1e-6, "{} {} {}", o.order_id, d.mt.bps, t.target_mt_bps);
            assert_eq!(d.is.ccy, d.mi.ccy + d.mt.ccy);
        }
    }

    #[test]
    fn zero_and_fixed_mi_paths() {
        let (p, mt) = fill_path(&[100, 200, 300], 1_000_000_000_000, 0.0, 0.0);
        assert!(p.iter().all(|v| *v == 1_000_000_000_000));
        assert_eq!(mt, 0.0);
        let header = OrderHeader {
            order_id: "x".into(),
            security_id: SecurityId::new("1"),
            side: Side::Sell,
            arrival_date: Date::ymd(2014, 1, 6),
            arrival_price: Price::from_yen(1000),
            total_shares: 600,
        };
        let (p, _) = fill_path(&[100, 200, 300], -1_000_000_000_000, 30.0, 5.0);
        let fills = p
            .iter()
            .zip([100, 200, 300])
            .enumerate()
            .map(|(j, (s, q))| Fill { seq: j as u32 + 1, price: Price::from_nanos(-*s as i64), shares: q })
            .collect();
        let order = Order::new(header, fills).unwrap();
        assert!((market_impact(&order, MiMode::Standard).unwrap().bps - 30.0).abs() < 1e-6);
    }

    #[test]
    fn deterministic_per_seed() {
        let cfg = SynthConfig { n_orders: 200, ..small() };
        let a = generate_market(&cfg).unwrap();
        let b = generate_market(&cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(generate_orders(&cfg, &a).unwrap(), generate_orders(&cfg, &b).unwrap());
        let c = generate_market(&SynthConfig { seed: 43, ..cfg }).unwrap();
        assert_ne!(a.securities[0].adjusted, c.securities[0].adjusted);
    }

    #[test]
    fn spreads_halve_for_affected_names() {
        let cfg = SynthConfig { outlier: None, ..small() };
        let m = generate_market(&cfg).unwrap();
        let ex = cfg.phases[0].ex_date;
        let end = cfg.phases[1].ex_date;
        let mut checked = 0;
        for s in m.securities.iter().filter(|s| s.affected[0] && !s.affected[1]) {
            let mean = |f: &dyn Fn(Date) -> bool| {
                let v: Vec<f64> = s.adjusted.iter().filter(|d| f(d.date)).map(|d| d.avg_spread).collect();
                v.iter().sum::<f64>() / v.len() as f64
            };
            let ratio = mean(&|d| d >= ex && d < end) / mean(&|d| d < ex);
            assert!((ratio - 0.5).abs() < 0.025, "{ratio}");
            checked += 1;
        }
        assert!(checked > 0);
    }

    #[test]
    fn zero_noise_without_events_gives_constant_spreads() {
        let cfg = SynthConfig { phases: vec![], spread_step_down: vec![], outlier: None, spread_noise: 0.0, ..small() };
        let m = generate_market(&cfg).unwrap();
        for s in &m.securities {
            assert!(s.adjusted.windows(2).all(|w| w[0].avg_spread == w[1].avg_spread));
        }
    }

    #[test]
    fn raw_rows_adjust_back_exactly() {
        let cfg = small();
        let m = generate_market(&cfg).unwrap();
        assert_eq!(adjust_for_splits(&m.raw_days(), &m.splits).unwrap(), m.adjusted_days());
        assert_ne!(m.raw_days(), m.adjusted_days());
    }

    #[test]
    fn every_bucket_gets_orders() {
        let cfg = SynthConfig { n_orders: 20_000, ..SynthConfig::default() };
        let m = generate_market(&cfg).unwrap();
        let fx = m.fx_table().unwrap();
        let (orders, _) = generate_orders(&cfg, &m).unwrap();
        let days = m.raw_days();
        let index = crate::event::DayIndex::new(&days);
        let schemes = [BucketScheme::liquidity_default(), BucketScheme::notional_a(), BucketScheme::notional_b()];
        let mut counts = [[0usize; 5]; 3];
        for o in &orders {
            let day = index.get(&o.security_id, o.arrival_date).unwrap();
            let usd = fx.to_usd(o.arrival_notional(), o.arrival_date).unwrap() / 1e6;
            let values = [100.0 * o.total_shares as f64 / day.volume, usd, usd];
            for (k, (s, v)) in schemes.iter().zip(values).enumerate() {
                counts[k][s.index(v).unwrap()] += 1;
            }
        }
        for (k, s) in schemes.iter().enumerate() {
            for (label, n) in s.labels().iter().zip(&counts[k]) {
                assert!(n * 100 >= orders.len(), "{label} has {n}");
            }
        }
    }

    #[test]
    fn infeasible_cost_model_rejected() {
        let mut cfg = small();
        cfg.cost.base_bps = 5.0;
        assert!(matches!(cfg.validate(), Err(SynthError::Config(_))));
    }
}
