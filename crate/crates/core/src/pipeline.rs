//! Batch screens and pooled regressions over the sample windows.
//!
//! Per-security work is exposed as separate functions so a caller can fan
//! securities out across threads and reassemble in id order.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::ops::Range;

use thiserror::Error;

use crate::date::Date;
use crate::event::BucketScheme;
use crate::market::{by_security, FxTable, MarketError, SampleLabel, SampleWindow, SecurityDay, SecurityId};
use crate::stats::{
    adf_test, kpss_test, moving_vol_log, moving_vol_signed, ols, pp_test, time_trend, AdfOptions, Design,
    Deterministic, RegressionResult, StatsError, TestResult, TrendFit,
};
use crate::tca::CostRecord;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Market(#[from] MarketError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error("sample {sample}: {message}")]
    Sample { sample: SampleLabel, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Var {
    Volume,
    Spread,
    TradeSize,
    SpreadOverPrice,
    TradeCount,
    Price,
    InversePrice,
    UsdJpy,
}

impl Var {
    pub const ALL: [Var; 8] = [
        Var::Volume,
        Var::Spread,
        Var::TradeSize,
        Var::SpreadOverPrice,
        Var::TradeCount,
        Var::Price,
        Var::InversePrice,
        Var::UsdJpy,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Var::Volume => "volume",
            Var::Spread => "spread",
            Var::TradeSize => "trade_size",
            Var::SpreadOverPrice => "spread_over_price",
            Var::TradeCount => "trade_count",
            Var::Price => "price",
            Var::InversePrice => "inv_price",
            Var::UsdJpy => "usd_jpy",
        }
    }

    fn idx(self) -> usize {
        self as usize
    }

    /// Name of the variable as it enters a regression.
    pub fn name(self, differenced: bool) -> String {
        if differenced {
            format!("d_{}", self.as_str())
        } else {
            self.as_str().to_string()
        }
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One security's aligned daily variables.
#[derive(Debug, Clone, PartialEq)]
pub struct SecuritySeries {
    pub security_id: SecurityId,
    pub dates: Vec<Date>,
    /// Indexed by [`Var`]; trade size is NaN on days without trades.
    pub values: [Vec<f64>; 8],
}

impl SecuritySeries {
    pub fn get(&self, v: Var) -> &[f64] {
        &self.values[v.idx()]
    }

    /// Positions of the dates inside `w`.
    pub fn range(&self, w: &SampleWindow) -> Range<usize> {
        let lo = self.dates.partition_point(|d| *d < w.start);
        let hi = self.dates.partition_point(|d| *d <= w.end);
        lo..hi.max(lo)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Panel {
    /// Ascending security id.
    pub series: Vec<SecuritySeries>,
}

impl Panel {
    /// `days` should already be split-adjusted.
    pub fn build(days: &[SecurityDay], fx: &FxTable) -> Result<Panel, PipelineError> {
        let mut series = Vec::new();
        for (id, rows) in by_security(days) {
            let mut values: [Vec<f64>; 8] = Default::default();
            for v in values.iter_mut() {
                v.reserve(rows.len());
            }
            for d in &rows {
                let rate = fx.rate_on(d.date)?;
                let row = [
                    d.volume,
                    d.avg_spread,
                    d.trade_size().unwrap_or(f64::NAN),
                    d.avg_spread / d.close_price,
                    d.trade_count as f64,
                    d.close_price,
                    1.0 / d.close_price,
                    rate,
                ];
                for (col, x) in values.iter_mut().zip(row) {
                    col.push(x);
                }
            }
            series.push(SecuritySeries { security_id: id, dates: rows.iter().map(|d| d.date).collect(), values });
        }
        Ok(Panel { series })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum UnitRootKind {
    Adf,
    Pp,
    Kpss,
}

impl UnitRootKind {
    pub const ALL: [UnitRootKind; 3] = [UnitRootKind::Adf, UnitRootKind::Pp, UnitRootKind::Kpss];

    pub fn as_str(self) -> &'static str {
        match self {
            UnitRootKind::Adf => "ADF",
            UnitRootKind::Pp => "PP",
            UnitRootKind::Kpss => "KPSS",
        }
    }

    pub fn run(self, x: &[f64]) -> Result<TestResult, StatsError> {
        match self {
            UnitRootKind::Adf => adf_test(x, AdfOptions::default()),
            UnitRootKind::Pp => pp_test(x, Deterministic::Constant),
            UnitRootKind::Kpss => kpss_test(x, Deterministic::Constant),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StationarityCell {
    pub security_id: SecurityId,
    pub variable: Var,
    pub differenced: bool,
    pub sample: SampleLabel,
    pub test: UnitRootKind,
    /// `Err` carries the reason the cell was skipped.
    pub outcome: Result<TestResult, String>,
}

fn finite_slice(x: &[f64]) -> Result<&[f64], String> {
    if x.iter().all(|v| v.is_finite()) {
        Ok(x)
    } else {
        Err("missing values".into())
    }
}

/// ADF, PP and KPSS on every variable, in levels and first differences, per
/// sample.
pub fn screen_security_stationarity(s: &SecuritySeries, windows: &[SampleWindow]) -> Vec<StationarityCell> {
    let mut out = Vec::new();
    for v in Var::ALL {
        for differenced in [false, true] {
            for w in windows {
                let raw = &s.get(v)[s.range(w)];
                let series: Result<Vec<f64>, String> = finite_slice(raw).map(|x| {
                    if differenced {
                        x.windows(2).map(|p| p[1] - p[0]).collect()
                    } else {
                        x.to_vec()
                    }
                });
                for test in UnitRootKind::ALL {
                    let outcome =
                        series.as_ref().map_err(Clone::clone).and_then(|x| test.run(x).map_err(|e| e.to_string()));
                    out.push(StationarityCell {
                        security_id: s.security_id.clone(),
                        variable: v,
                        differenced,
                        sample: w.label,
                        test,
                        outcome,
                    });
                }
            }
        }
    }
    out
}

pub fn stationarity_screen(panel: &Panel, windows: &[SampleWindow]) -> Vec<StationarityCell> {
    panel.series.iter().flat_map(|s| screen_security_stationarity(s, windows)).collect()
}

/// Count of securities rejecting at 5% for one (variable, sample, test).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StationaritySummary {
    pub variable: Var,
    pub differenced: bool,
    pub sample: SampleLabel,
    pub test: UnitRootKind,
    pub n_reject: usize,
    pub n_tested: usize,
    pub n_skipped: usize,
}

type CellKey = (Var, bool, SampleLabel, UnitRootKind);

pub fn summarize_stationarity(cells: &[StationarityCell]) -> Vec<StationaritySummary> {
    let mut map: BTreeMap<CellKey, (usize, usize, usize)> = BTreeMap::new();
    for c in cells {
        let e = map.entry((c.variable, c.differenced, c.sample, c.test)).or_default();
        match &c.outcome {
            Ok(r) => {
                e.1 += 1;
                e.0 += r.reject_at_5pct as usize;
            }
            Err(_) => e.2 += 1,
        }
    }
    map.into_iter()
        .map(|((variable, differenced, sample, test), (n_reject, n_tested, n_skipped))| StationaritySummary {
            variable,
            differenced,
            sample,
            test,
            n_reject,
            n_tested,
            n_skipped,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrendCell {
    pub security_id: SecurityId,
    pub variable: Var,
    pub sample: SampleLabel,
    pub outcome: Result<TrendFit, String>,
}

/// Linear trend of every variable per sample, with window ends pulled in to
/// `end` when given.
pub fn screen_security_trend(s: &SecuritySeries, windows: &[SampleWindow], end: Option<Date>) -> Vec<TrendCell> {
    let mut out = Vec::new();
    for v in Var::ALL {
        for w in windows {
            let w = end.map_or(*w, |e| w.truncated(e));
            let outcome = finite_slice(&s.get(v)[s.range(&w)]).and_then(|x| time_trend(x).map_err(|e| e.to_string()));
            out.push(TrendCell { security_id: s.security_id.clone(), variable: v, sample: w.label, outcome });
        }
    }
    out
}

pub fn trend_screen(panel: &Panel, windows: &[SampleWindow], end: Option<Date>) -> Vec<TrendCell> {
    panel.series.iter().flat_map(|s| screen_security_trend(s, windows, end)).collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrendSummary {
    pub variable: Var,
    pub sample: SampleLabel,
    pub n_increasing: usize,
    /// Increasing with slope p-value below 0.05.
    pub n_increasing_significant: usize,
    pub n_tested: usize,
    pub n_skipped: usize,
}

pub fn summarize_trend(cells: &[TrendCell]) -> Vec<TrendSummary> {
    let mut map: BTreeMap<(Var, SampleLabel), [usize; 4]> = BTreeMap::new();
    for c in cells {
        let e = map.entry((c.variable, c.sample)).or_default();
        match &c.outcome {
            Ok(f) => {
                e[2] += 1;
                e[0] += f.increasing as usize;
                e[1] += (f.increasing && f.slope_p_value < 0.05) as usize;
            }
            Err(_) => e[3] += 1,
        }
    }
    map.into_iter()
        .map(|((variable, sample), c)| TrendSummary {
            variable,
            sample,
            n_increasing: c[0],
            n_increasing_significant: c[1],
            n_tested: c[2],
            n_skipped: c[3],
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolicyEntry {
    pub differenced: bool,
    /// Share of securities whose ADF rejected a unit root, when the policy
    /// came from a screen.
    pub adf_reject_frac: Option<f64>,
}

/// Which variables enter regressions as first differences.
#[derive(Debug, Clone, PartialEq)]
pub struct DifferencingPolicy {
    entries: BTreeMap<Var, PolicyEntry>,
}

impl Default for DifferencingPolicy {
    /// Price, its inverse and the exchange rate differenced; the rest in levels.
    fn default() -> Self {
        let entries = Var::ALL
            .into_iter()
            .map(|v| {
                let differenced = matches!(v, Var::Price | Var::InversePrice | Var::UsdJpy);
                (v, PolicyEntry { differenced, adf_reject_frac: None })
            })
            .collect();
        DifferencingPolicy { entries }
    }
}

impl DifferencingPolicy {
    pub const DEFAULT_THRESHOLD: f64 = 0.5;

    /// Differences a variable when fewer than `threshold` of the securities
    /// reject a unit root (ADF, levels) in `sample`.
    pub fn from_screen(cells: &[StationarityCell], sample: SampleLabel, threshold: f64) -> Self {
        let mut policy = DifferencingPolicy::default();
        for s in summarize_stationarity(cells) {
            if s.sample != sample || s.test != UnitRootKind::Adf || s.differenced || s.n_tested == 0 {
                continue;
            }
            let frac = s.n_reject as f64 / s.n_tested as f64;
            policy
                .entries
                .insert(s.variable, PolicyEntry { differenced: frac < threshold, adf_reject_frac: Some(frac) });
        }
        policy
    }

    pub fn with(mut self, v: Var, differenced: bool) -> Self {
        self.entries.insert(v, PolicyEntry { differenced, adf_reject_frac: None });
        self
    }

    pub fn is_differenced(&self, v: Var) -> bool {
        self.entries.get(&v).is_some_and(|e| e.differenced)
    }

    pub fn entry(&self, v: Var) -> PolicyEntry {
        self.entries[&v]
    }

    pub fn name(&self, v: Var) -> String {
        v.name(self.is_differenced(v))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum VolVar {
    Price,
    Spread,
    Volume,
    TradeCount,
    UsdJpy,
}

impl VolVar {
    pub const ALL: [VolVar; 5] = [VolVar::Price, VolVar::Spread, VolVar::Volume, VolVar::TradeCount, VolVar::UsdJpy];

    pub fn var(self) -> Var {
        match self {
            VolVar::Price => Var::Price,
            VolVar::Spread => Var::Spread,
            VolVar::Volume => Var::Volume,
            VolVar::TradeCount => Var::TradeCount,
            VolVar::UsdJpy => Var::UsdJpy,
        }
    }

    pub fn name(self) -> String {
        format!("vol_{}", self.var().as_str())
    }
}

/// Regression inputs for one security, aligned with its dates. Missing
/// values are NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct SecurityFeatures {
    pub security_id: SecurityId,
    pub dates: Vec<Date>,
    /// Variables after the differencing policy.
    pub x: [Vec<f64>; 8],
    /// Trailing volatilities, windows ending on the row's date.
    pub vol: [Vec<f64>; 5],
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSet {
    pub policy: DifferencingPolicy,
    pub securities: Vec<SecurityFeatures>,
}

pub const VOL_WINDOW: usize = 90;
pub const SIGNED_MA_WINDOW: usize = 5;

/// Log-return volatility when the series is positive, the smoothed
/// percent-change version otherwise; NaN where undefined.
pub fn trailing_vol(x: &[f64], window: usize) -> Vec<f64> {
    let out = if x.iter().all(|v| v.is_finite() && *v > 0.0) {
        moving_vol_log(x, window)
    } else {
        moving_vol_signed(x, SIGNED_MA_WINDOW, window)
    };
    match out {
        Ok(v) => v.into_iter().map(|o| o.unwrap_or(f64::NAN)).collect(),
        Err(_) => vec![f64::NAN; x.len()],
    }
}

pub fn security_features(s: &SecuritySeries, policy: &DifferencingPolicy, vol_window: usize) -> SecurityFeatures {
    let mut x: [Vec<f64>; 8] = Default::default();
    for v in Var::ALL {
        let src = s.get(v);
        x[v.idx()] = if policy.is_differenced(v) {
            core::iter::once(f64::NAN).chain(src.windows(2).map(|w| w[1] - w[0])).collect()
        } else {
            src.to_vec()
        };
    }
    let mut vol: [Vec<f64>; 5] = Default::default();
    for (i, vv) in VolVar::ALL.into_iter().enumerate() {
        vol[i] = trailing_vol(s.get(vv.var()), vol_window);
    }
    SecurityFeatures { security_id: s.security_id.clone(), dates: s.dates.clone(), x, vol }
}

pub fn build_features(panel: &Panel, policy: &DifferencingPolicy, vol_window: usize) -> FeatureSet {
    FeatureSet {
        policy: policy.clone(),
        securities: panel.series.iter().map(|s| security_features(s, policy, vol_window)).collect(),
    }
}

/// One pooled observation.
#[derive(Debug, Clone, PartialEq)]
pub struct RegRow {
    pub security: u32,
    pub date: Date,
    pub y: f64,
    pub x: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RowSet {
    pub names: Vec<String>,
    pub rows: Vec<RegRow>,
}

impl RowSet {
    pub fn filter(&self, w: &SampleWindow) -> RowSet {
        RowSet { names: self.names.clone(), rows: self.rows.iter().filter(|r| w.contains(r.date)).cloned().collect() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct FitOptions {
    /// Subtract per-security means from response and regressors, no intercept.
    pub demean: bool,
}

/// Pooled OLS on the rows dated inside `w`.
pub fn fit_rows(set: &RowSet, w: &SampleWindow, opts: FitOptions) -> Result<RegressionResult, PipelineError> {
    let rows: Vec<&RegRow> = set.rows.iter().filter(|r| w.contains(r.date)).collect();
    let k = set.names.len();
    let mut y: Vec<f64> = rows.iter().map(|r| r.y).collect();
    let mut cols: Vec<Vec<f64>> = (0..k).map(|j| rows.iter().map(|r| r.x[j]).collect()).collect();
    if opts.demean {
        let mut groups: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
        for (i, r) in rows.iter().enumerate() {
            groups.entry(r.security).or_default().push(i);
        }
        for idx in groups.values() {
            for col in core::iter::once(&mut y).chain(cols.iter_mut()) {
                let mean = idx.iter().map(|&i| col[i]).sum::<f64>() / idx.len() as f64;
                idx.iter().for_each(|&i| col[i] -= mean);
            }
        }
    }
    let mut design = Design::new();
    for (name, c) in set.names.iter().zip(cols) {
        design.push(name.clone(), c);
    }
    ols(&y, &design, !opts.demean).map_err(|e| PipelineError::Sample { sample: w.label, message: e.to_string() })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum VolumeVariant {
    /// Volume on spread, trade count and controls.
    V1,
    /// Volume on spread and controls.
    V2,
    /// Trade count on spread and controls.
    V3,
}

impl VolumeVariant {
    pub const ALL: [VolumeVariant; 3] = [VolumeVariant::V1, VolumeVariant::V2, VolumeVariant::V3];

    pub fn as_str(self) -> &'static str {
        match self {
            VolumeVariant::V1 => "V1",
            VolumeVariant::V2 => "V2",
            VolumeVariant::V3 => "V3",
        }
    }

    pub fn response(self) -> Var {
        match self {
            VolumeVariant::V3 => Var::TradeCount,
            _ => Var::Volume,
        }
    }

    pub fn regressors(self) -> Vec<Var> {
        let mut v = vec![Var::Spread];
        if self == VolumeVariant::V1 {
            v.push(Var::TradeCount);
        }
        v.extend([Var::SpreadOverPrice, Var::InversePrice, Var::UsdJpy]);
        v
    }
}

/// How many trading days the regressors trail the response.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Lag {
    None,
    OneDay,
    OneWeek,
}

impl Lag {
    pub const ALL: [Lag; 3] = [Lag::None, Lag::OneDay, Lag::OneWeek];

    pub fn days(self) -> usize {
        match self {
            Lag::None => 0,
            Lag::OneDay => 1,
            Lag::OneWeek => 5,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Lag::None => "lag0",
            Lag::OneDay => "lag1",
            Lag::OneWeek => "lag5",
        }
    }
}

/// Rows for one security; `security` is its position in the feature set.
pub fn volume_rows_for(f: &SecurityFeatures, security: u32, variant: VolumeVariant, lag: Lag) -> Vec<RegRow> {
    let regs = variant.regressors();
    let resp = &f.x[variant.response().idx()];
    let l = lag.days();
    (l..f.dates.len())
        .filter_map(|t| {
            let x: Vec<f64> = regs.iter().map(|v| f.x[v.idx()][t - l]).collect();
            let y = resp[t];
            (y.is_finite() && x.iter().all(|v| v.is_finite())).then(|| RegRow { security, date: f.dates[t], y, x })
        })
        .collect()
}

pub fn volume_rows(features: &FeatureSet, variant: VolumeVariant, lag: Lag) -> RowSet {
    let names = variant.regressors().into_iter().map(|v| features.policy.name(v)).collect();
    let rows =
        features.securities.iter().enumerate().flat_map(|(i, f)| volume_rows_for(f, i as u32, variant, lag)).collect();
    RowSet { names, rows }
}

pub fn volume_regression(
    features: &FeatureSet,
    w: &SampleWindow,
    variant: VolumeVariant,
    lag: Lag,
    opts: FitOptions,
) -> Result<RegressionResult, PipelineError> {
    fit_rows(&volume_rows(features, variant, lag), w, opts)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CostMetric {
    Is,
    Mi,
    Mt,
}

impl CostMetric {
    pub const ALL: [CostMetric; 3] = [CostMetric::Is, CostMetric::Mi, CostMetric::Mt];

    pub fn as_str(self) -> &'static str {
        match self {
            CostMetric::Is => "IS",
            CostMetric::Mi => "MI",
            CostMetric::Mt => "MT",
        }
    }
}

/// An order joined with its arrival-day features.
#[derive(Debug, Clone, PartialEq)]
pub struct CostRow {
    pub security: u32,
    pub date: Date,
    pub is_bps: f64,
    pub mi_bps: f64,
    pub mt_bps: f64,
    pub liq_pct: f64,
    pub notional_usd: f64,
    pub x: Vec<f64>,
}

impl CostRow {
    pub fn metric(&self, m: CostMetric) -> f64 {
        match m {
            CostMetric::Is => self.is_bps,
            CostMetric::Mi => self.mi_bps,
            CostMetric::Mt => self.mt_bps,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CostRows {
    /// Names of the continuous regressors in `CostRow::x`.
    pub names: Vec<String>,
    pub rows: Vec<CostRow>,
    /// Orders without a feature row or with undefined features.
    pub dropped: usize,
}

const COST_VARS: [Var; 4] = [Var::Spread, Var::SpreadOverPrice, Var::InversePrice, Var::UsdJpy];

/// Joins each cost record to its security's features on the arrival date.
pub fn cost_rows(records: &[CostRecord], features: &FeatureSet) -> CostRows {
    let mut names: Vec<String> = COST_VARS.iter().map(|v| features.policy.name(*v)).collect();
    names.push("notional_usd_mm".into());
    names.push("executions".into());
    names.extend(VolVar::ALL.iter().map(|v| v.name()));

    let index: BTreeMap<&SecurityId, usize> =
        features.securities.iter().enumerate().map(|(i, f)| (&f.security_id, i)).collect();
    let mut rows = Vec::with_capacity(records.len());
    let mut dropped = 0;
    for r in records {
        let hit = index.get(&r.security_id).and_then(|&i| {
            let f = &features.securities[i];
            f.dates.binary_search(&r.arrival_date).ok().map(|t| (i, f, t))
        });
        let Some((i, f, t)) = hit else {
            dropped += 1;
            continue;
        };
        let mut x: Vec<f64> = COST_VARS.iter().map(|v| f.x[v.idx()][t]).collect();
        x.push(r.notional_usd / 1e6);
        x.push(r.executions as f64);
        x.extend(f.vol.iter().map(|c| c[t]));
        if !x.iter().all(|v| v.is_finite()) {
            dropped += 1;
            continue;
        }
        rows.push(CostRow {
            security: i as u32,
            date: r.arrival_date,
            is_bps: r.is_bps,
            mi_bps: r.mi_bps,
            mt_bps: r.mt_bps,
            liq_pct: r.liquidity_demand_pct,
            notional_usd: r.notional_usd,
            x,
        });
    }
    CostRows { names, rows, dropped }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CostSpec {
    pub metric: CostMetric,
    pub liquidity: BucketScheme,
    /// Edges in millions of USD.
    pub notional: BucketScheme,
    pub interactions: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CostFit {
    pub result: RegressionResult,
    pub warnings: Vec<String>,
}

pub fn liq_dummy_name(label: &str) -> String {
    format!("liq_{label}")
}

pub fn notional_dummy_name(label: &str) -> String {
    format!("notional_{label}")
}

/// Cost metric on continuous regressors plus bucket dummies. The lowest
/// bucket of each scheme is the benchmark; a dummy with no members in the
/// sample is dropped and reported in `warnings`.
pub fn cost_regression(data: &CostRows, w: &SampleWindow, spec: &CostSpec) -> Result<CostFit, PipelineError> {
    let rows: Vec<&CostRow> = data.rows.iter().filter(|r| w.contains(r.date)).collect();
    let sample_err = |message: String| PipelineError::Sample { sample: w.label, message };
    let mut liq = Vec::with_capacity(rows.len());
    let mut notional = Vec::with_capacity(rows.len());
    for r in &rows {
        liq.push(spec.liquidity.index(r.liq_pct).map_err(|e| sample_err(e.to_string()))?);
        notional.push(spec.notional.index(r.notional_usd / 1e6).map_err(|e| sample_err(e.to_string()))?);
    }
    let y: Vec<f64> = rows.iter().map(|r| r.metric(spec.metric)).collect();
    let mut design = Design::new();
    for (j, name) in data.names.iter().enumerate() {
        design.push(name.clone(), rows.iter().map(|r| r.x[j]).collect());
    }
    let mut warnings = Vec::new();
    let mut dummy = |name: String, member: &dyn Fn(usize) -> bool, design: &mut Design| {
        let col: Vec<f64> = (0..rows.len()).map(|i| if member(i) { 1.0 } else { 0.0 }).collect();
        if col.iter().any(|v| *v != 0.0) {
            design.push(name, col);
        } else {
            warnings.push(format!("{}: no orders in {name}; dummy dropped", w.label));
        }
    };
    for (b, label) in spec.liquidity.labels().iter().enumerate().skip(1) {
        dummy(liq_dummy_name(label), &|i| liq[i] == b, &mut design);
    }
    for (b, label) in spec.notional.labels().iter().enumerate().skip(1) {
        dummy(notional_dummy_name(label), &|i| notional[i] == b, &mut design);
    }
    if spec.interactions {
        for (a, la) in spec.liquidity.labels().iter().enumerate().skip(1) {
            for (b, lb) in spec.notional.labels().iter().enumerate().skip(1) {
                dummy(format!("liq_{la}:notional_{lb}"), &|i| liq[i] == a && notional[i] == b, &mut design);
            }
        }
    }
    let result = ols(&y, &design, true).map_err(|e| sample_err(e.to_string()))?;
    Ok(CostFit { result, warnings })
}
