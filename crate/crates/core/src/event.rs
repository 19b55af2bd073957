//! Tick-size event study: which names a rule change touched, how their
//! spreads and execution sizes moved across the ex-date, cross-sectional
//! aggregates, and order buckets.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use thiserror::Error;

use crate::date::Date;
use crate::market::{SecurityDay, SecurityId};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EventError {
    #[error("no security has records on both {before} and {after}")]
    EmptyOverlap { before: Date, after: Date },
    #[error("no records for the day")]
    EmptyDay,
    #[error("all {0} weights are zero")]
    ZeroWeights(&'static str),
    #[error("cannot bucket {0}: value must be a non-negative number")]
    BadBucketValue(f64),
    #[error("bucket edges must start at 0 and strictly increase")]
    BadEdges,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PhaseLabel {
    Phase1,
    Phase2,
}

impl PhaseLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            PhaseLabel::Phase1 => "Phase1",
            PhaseLabel::Phase2 => "Phase2",
        }
    }
}

impl fmt::Display for PhaseLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Which side of a yen threshold the ex-date close must fall on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PriceRule {
    Above(f64),
    Below(f64),
}

impl PriceRule {
    pub fn matches(self, close: f64) -> bool {
        match self {
            PriceRule::Above(t) => close > t,
            PriceRule::Below(t) => close < t,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventPhase {
    pub label: PhaseLabel,
    pub ex_date: Date,
    pub rule: PriceRule,
}

pub fn default_phases() -> [EventPhase; 2] {
    [
        EventPhase { label: PhaseLabel::Phase1, ex_date: Date::ymd(2014, 1, 14), rule: PriceRule::Above(3000.0) },
        EventPhase { label: PhaseLabel::Phase2, ex_date: Date::ymd(2014, 7, 22), rule: PriceRule::Below(5000.0) },
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SchemeLabel {
    DayBefore,
    WeekBefore,
    WideSpan,
}

impl SchemeLabel {
    pub const ALL: [SchemeLabel; 3] = [SchemeLabel::DayBefore, SchemeLabel::WeekBefore, SchemeLabel::WideSpan];

    pub fn as_str(self) -> &'static str {
        match self {
            SchemeLabel::DayBefore => "DayBefore",
            SchemeLabel::WeekBefore => "WeekBefore",
            SchemeLabel::WideSpan => "WideSpan",
        }
    }
}

impl fmt::Display for SchemeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComparisonScheme {
    pub label: SchemeLabel,
    pub before: Date,
    pub after: Date,
}

/// The three before/after date pairs used for each phase.
pub fn default_schemes(phase: PhaseLabel) -> [ComparisonScheme; 3] {
    let pair = |label, b: (u32, u32), a: (u32, u32)| ComparisonScheme {
        label,
        before: Date::ymd(2014, b.0, b.1),
        after: Date::ymd(2014, a.0, a.1),
    };
    match phase {
        PhaseLabel::Phase1 => [
            pair(SchemeLabel::DayBefore, (1, 10), (1, 14)),
            pair(SchemeLabel::WeekBefore, (1, 8), (1, 15)),
            pair(SchemeLabel::WideSpan, (1, 6), (1, 16)),
        ],
        PhaseLabel::Phase2 => [
            pair(SchemeLabel::DayBefore, (7, 18), (7, 22)),
            pair(SchemeLabel::WeekBefore, (7, 17), (7, 24)),
            pair(SchemeLabel::WideSpan, (7, 14), (7, 28)),
        ],
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Metric {
    Spread,
    /// Shares per trade.
    ExecSize,
}

impl Metric {
    pub const ALL: [Metric; 2] = [Metric::Spread, Metric::ExecSize];

    pub fn as_str(self) -> &'static str {
        match self {
            Metric::Spread => "Spread",
            Metric::ExecSize => "ExecSize",
        }
    }

    pub fn of(self, d: &SecurityDay) -> Option<f64> {
        match self {
            Metric::Spread => Some(d.avg_spread),
            Metric::ExecSize => d.trade_size(),
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Lookup of security-days by `(security, date)`.
#[derive(Debug, Clone, Default)]
pub struct DayIndex<'a> {
    map: BTreeMap<(&'a SecurityId, Date), &'a SecurityDay>,
    universe: BTreeSet<&'a SecurityId>,
}

impl<'a> DayIndex<'a> {
    pub fn new(days: &'a [SecurityDay]) -> Self {
        let mut idx = DayIndex::default();
        for d in days {
            idx.map.insert((&d.security_id, d.date), d);
            idx.universe.insert(&d.security_id);
        }
        idx
    }

    pub fn get(&self, id: &SecurityId, date: Date) -> Option<&'a SecurityDay> {
        self.map.get(&(id, date)).copied()
    }

    pub fn universe(&self) -> impl Iterator<Item = &'a SecurityId> + '_ {
        self.universe.iter().copied()
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct AffectedSet {
    pub affected: BTreeSet<SecurityId>,
    /// Names without an ex-date record; left out of the classification.
    pub missing: Vec<SecurityId>,
}

/// Securities whose split-adjusted ex-date close satisfies the phase rule.
pub fn affected_securities(index: &DayIndex<'_>, phase: &EventPhase) -> AffectedSet {
    let mut out = AffectedSet::default();
    for id in index.universe() {
        match index.get(id, phase.ex_date) {
            Some(d) if phase.rule.matches(d.close_price) => {
                out.affected.insert(id.clone());
            }
            Some(_) => {}
            None => out.missing.push(id.clone()),
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct SecurityChange {
    pub security_id: SecurityId,
    pub affected: bool,
    pub before: Option<f64>,
    pub after: Option<f64>,
    /// `100 (after - before) / before`; missing when either side is missing
    /// or `before` is zero.
    pub pct_change: Option<f64>,
    /// Counted in the summary denominators.
    pub included: bool,
}

impl SecurityChange {
    /// Strict decrease; ties do not count.
    pub fn decreased(&self) -> bool {
        matches!((self.before, self.after), (Some(b), Some(a)) if a < b)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BirdsEyeSummary {
    pub phase: PhaseLabel,
    pub scheme: SchemeLabel,
    pub metric: Metric,
    pub pct_decreased_affected: f64,
    pub pct_decreased_all: f64,
    pub n_affected: usize,
    pub n_all: usize,
    /// One row per security in the universe, ascending id.
    pub per_security: Vec<SecurityChange>,
}

/// Optional restriction to names whose before-date spread exceeds a floor.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CompareOptions {
    pub min_before_spread: Option<f64>,
}

pub fn birdseye_compare(
    index: &DayIndex<'_>,
    affected: &BTreeSet<SecurityId>,
    phase: PhaseLabel,
    scheme: &ComparisonScheme,
    metric: Metric,
    opts: CompareOptions,
) -> Result<BirdsEyeSummary, EventError> {
    let mut per_security = Vec::new();
    let (mut n_all, mut dec_all, mut n_aff, mut dec_aff) = (0usize, 0usize, 0usize, 0usize);
    for id in index.universe() {
        let b = index.get(id, scheme.before);
        let a = index.get(id, scheme.after);
        let before = b.and_then(|d| metric.of(d));
        let after = a.and_then(|d| metric.of(d));
        let passes_filter = match opts.min_before_spread {
            Some(floor) => b.is_some_and(|d| d.avg_spread > floor),
            None => true,
        };
        let pct_change = match (before, after) {
            (Some(bv), Some(av)) if bv != 0.0 => Some(100.0 * (av - bv) / bv),
            _ => None,
        };
        let is_affected = affected.contains(id);
        let change = SecurityChange {
            security_id: id.clone(),
            affected: is_affected,
            before,
            after,
            pct_change,
            included: before.is_some() && after.is_some() && passes_filter,
        };
        if change.included {
            n_all += 1;
            dec_all += change.decreased() as usize;
            if is_affected {
                n_aff += 1;
                dec_aff += change.decreased() as usize;
            }
        }
        per_security.push(change);
    }
    if n_all == 0 {
        return Err(EventError::EmptyOverlap { before: scheme.before, after: scheme.after });
    }
    let pct = |num: usize, den: usize| if den == 0 { 0.0 } else { 100.0 * num as f64 / den as f64 };
    Ok(BirdsEyeSummary {
        phase,
        scheme: scheme.label,
        metric,
        pct_decreased_affected: pct(dec_aff, n_aff),
        pct_decreased_all: pct(dec_all, n_all),
        n_affected: n_aff,
        n_all,
        per_security,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Weighting {
    Equal,
    Volume,
    Trade,
}

impl Weighting {
    pub const ALL: [Weighting; 3] = [Weighting::Equal, Weighting::Volume, Weighting::Trade];

    pub fn as_str(self) -> &'static str {
        match self {
            Weighting::Equal => "EW",
            Weighting::Volume => "VW",
            Weighting::Trade => "TW",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AggMetric {
    Spread,
    Price,
    SpreadOverPrice,
    TradeSize,
}

impl AggMetric {
    pub const ALL: [AggMetric; 4] =
        [AggMetric::Spread, AggMetric::Price, AggMetric::SpreadOverPrice, AggMetric::TradeSize];

    pub fn as_str(self) -> &'static str {
        match self {
            AggMetric::Spread => "Spread",
            AggMetric::Price => "Price",
            AggMetric::SpreadOverPrice => "SpreadOverPrice",
            AggMetric::TradeSize => "TradeSize",
        }
    }

    fn of(self, d: &SecurityDay) -> Option<f64> {
        match self {
            AggMetric::Spread => Some(d.avg_spread),
            AggMetric::Price => Some(d.close_price),
            AggMetric::SpreadOverPrice => Some(d.avg_spread / d.close_price),
            AggMetric::TradeSize => d.trade_size(),
        }
    }
}

/// `sum w_i m_i / sum w_i` over one day's cross-section.
pub fn weighted_aggregate(day: &[SecurityDay], weighting: Weighting, metric: AggMetric) -> Result<f64, EventError> {
    if day.is_empty() {
        return Err(EventError::EmptyDay);
    }
    let (mut num, mut den) = (0.0, 0.0);
    for d in day {
        let Some(m) = metric.of(d) else { continue };
        let w = match weighting {
            Weighting::Equal => 1.0,
            Weighting::Volume => d.volume,
            Weighting::Trade => d.trade_count as f64,
        };
        num += w * m;
        den += w;
    }
    if den == 0.0 {
        return Err(EventError::ZeroWeights(weighting.as_str()));
    }
    Ok(num / den)
}

/// Left-closed, right-open buckets starting at zero; the last is unbounded.
#[derive(Debug, Clone, PartialEq)]
pub struct BucketScheme {
    edges: Vec<f64>,
    labels: Vec<String>,
}

fn fmt_edge(v: f64) -> String {
    if v == (v as i64) as f64 {
        format!("{}", v as i64)
    } else {
        format!("{v}")
    }
}

impl BucketScheme {
    /// `edges` are the lower bounds, starting with 0; `unit` is appended to
    /// each label ("0-1%", "25%+").
    pub fn new(edges: Vec<f64>, unit: &str) -> Result<BucketScheme, EventError> {
        if edges.first() != Some(&0.0)
            || edges.windows(2).any(|w| !(w[0] < w[1]))
            || edges.iter().any(|e| !e.is_finite())
        {
            return Err(EventError::BadEdges);
        }
        let labels = edges
            .iter()
            .enumerate()
            .map(|(i, lo)| match edges.get(i + 1) {
                Some(hi) => format!("{}-{}{unit}", fmt_edge(*lo), fmt_edge(*hi)),
                None => format!("{}{unit}+", fmt_edge(*lo)),
            })
            .collect();
        Ok(BucketScheme { edges, labels })
    }

    pub fn liquidity_default() -> Self {
        BucketScheme::new(alloc::vec![0.0, 1.0, 5.0, 10.0, 25.0], "%").expect("valid edges")
    }

    /// Notional in millions of USD, top bucket from 10MM.
    pub fn notional_a() -> Self {
        BucketScheme::new(alloc::vec![0.0, 1.0, 5.0, 10.0], "MM").expect("valid edges")
    }

    /// Notional in millions of USD, top bucket from 25MM.
    pub fn notional_b() -> Self {
        BucketScheme::new(alloc::vec![0.0, 1.0, 10.0, 25.0], "MM").expect("valid edges")
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn index(&self, value: f64) -> Result<usize, EventError> {
        if !(value >= 0.0) || value.is_infinite() {
            return Err(EventError::BadBucketValue(value));
        }
        Ok(self.edges.iter().rposition(|e| *e <= value).expect("first edge is zero"))
    }

    pub fn label(&self, value: f64) -> Result<&str, EventError> {
        self.index(value).map(|i| self.labels[i].as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NotionalScheme {
    A,
    B,
}

pub fn bucket_liquidity(pct: f64) -> Result<&'static str, EventError> {
    const LABELS: [&str; 5] = ["0-1%", "1-5%", "5-10%", "10-25%", "25%+"];
    const EDGES: [f64; 5] = [0.0, 1.0, 5.0, 10.0, 25.0];
    bucket_fixed(pct, &EDGES, &LABELS)
}

/// `notional_usd` in dollars; edges are in millions.
pub fn bucket_notional(notional_usd: f64, scheme: NotionalScheme) -> Result<&'static str, EventError> {
    let mm = notional_usd / 1e6;
    match scheme {
        NotionalScheme::A => bucket_fixed(mm, &[0.0, 1.0, 5.0, 10.0], &["0-1MM", "1-5MM", "5-10MM", "10MM+"]),
        NotionalScheme::B => bucket_fixed(mm, &[0.0, 1.0, 10.0, 25.0], &["0-1MM", "1-10MM", "10-25MM", "25MM+"]),
    }
}

fn bucket_fixed(v: f64, edges: &[f64], labels: &[&'static str]) -> Result<&'static str, EventError> {
    if !(v >= 0.0) || v.is_infinite() {
        return Err(EventError::BadBucketValue(v));
    }
    Ok(labels[edges.iter().rposition(|e| *e <= v).expect("first edge is zero")])
}
