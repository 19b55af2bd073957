use std::collections::BTreeMap;
use std::path::Path;

use log::{info, warn};
use rayon::prelude::*;
use tickcost_core::event::{weighted_aggregate, AggMetric, Weighting};
use tickcost_core::market::{SampleWindow, SecurityDay};
use tickcost_core::pipeline::{
    build_features, cost_regression, cost_rows, fit_rows, screen_security_stationarity, screen_security_trend,
    summarize_stationarity, summarize_trend, trailing_vol, CostMetric, CostRows, CostSpec, DifferencingPolicy,
    FeatureSet, FitOptions, Lag, Panel, StationarityCell, TrendCell, Var, VolumeVariant,
};
use tickcost_core::stats::RegressionResult;
use tickcost_core::tca::{present, CostRecord};
use tickcost_core::Date;

use super::{compute_costs, ensure_dir, load_market, load_orders, write_text};
use crate::config::{Differencing, RunConfig};
use crate::csvio::{num, opt, TableWriter};
use crate::error::{CliError, Result};
use crate::svg::{line_chart, Series};

pub const REGRESSIONS_FILE: &str = "regressions.csv";

/// Counts of what a deepdive run wrote.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DeepdiveSummary {
    pub csv_files: Vec<String>,
    pub svg_files: Vec<String>,
    pub volume_groups: usize,
    pub cost_groups: usize,
}

struct Outputs<'a> {
    dir: &'a Path,
    summary: DeepdiveSummary,
}

impl Outputs<'_> {
    fn table(&mut self, name: &str, header: &[&str]) -> Result<TableWriter> {
        self.summary.csv_files.push(name.to_string());
        TableWriter::create(&self.dir.join(name), header)
    }

    fn svg(&mut self, name: &str, body: String) -> Result<()> {
        self.summary.svg_files.push(name.to_string());
        write_text(&self.dir.join(name), &body)
    }
}

/// Cross-sectional aggregates by date, keyed `(weighting, metric)`.
struct Aggregates {
    dates: Vec<Date>,
    series: BTreeMap<(String, String), Vec<Option<f64>>>,
}

fn aggregates(days: &[SecurityDay]) -> Aggregates {
    let mut by_date: BTreeMap<Date, Vec<SecurityDay>> = BTreeMap::new();
    for d in days {
        by_date.entry(d.date).or_default().push(d.clone());
    }
    let dates: Vec<Date> = by_date.keys().copied().collect();
    let mut series: BTreeMap<(String, String), Vec<Option<f64>>> = BTreeMap::new();
    for w in Weighting::ALL {
        for m in AggMetric::ALL {
            let v = by_date.values().map(|day| weighted_aggregate(day, w, m).ok()).collect();
            series.insert((w.as_str().into(), m.as_str().into()), v);
        }
    }
    let sum = |f: fn(&SecurityDay) -> f64| by_date.values().map(|day| Some(day.iter().map(f).sum())).collect();
    series.insert(("SUM".into(), "Volume".into()), sum(|d| d.volume));
    series.insert(("SUM".into(), "TradeCount".into()), sum(|d| d.trade_count as f64));
    Aggregates { dates, series }
}

impl Aggregates {
    fn get(&self, w: &str, m: &str) -> &[Option<f64>] {
        &self.series[&(w.to_string(), m.to_string())]
    }

    fn chart(&self, title: &str, pick: &[(&str, &str)]) -> String {
        let labels: Vec<String> = self.dates.iter().map(Date::to_string).collect();
        let series: Vec<Series> =
            pick.iter().map(|(w, m)| Series { name: format!("{w} {m}"), values: self.get(w, m).to_vec() }).collect();
        line_chart(title, &labels, &series)
    }
}

/// Mean IS, MI and MT per arrival date.
struct DailyCosts {
    dates: Vec<Date>,
    counts: Vec<usize>,
    means: [Vec<f64>; 3],
}

fn daily_costs(records: &[CostRecord], negate: bool) -> DailyCosts {
    let mut acc: BTreeMap<Date, (usize, [f64; 3])> = BTreeMap::new();
    for r in records {
        let e = acc.entry(r.arrival_date).or_insert((0, [0.0; 3]));
        e.0 += 1;
        e.1[0] += r.is_bps;
        e.1[1] += r.mi_bps;
        e.1[2] += r.mt_bps;
    }
    let mut out = DailyCosts { dates: Vec::new(), counts: Vec::new(), means: Default::default() };
    for (d, (n, s)) in acc {
        out.dates.push(d);
        out.counts.push(n);
        for (mean, sum) in out.means.iter_mut().zip(s) {
            mean.push(present(sum / n as f64, negate));
        }
    }
    out
}

fn to_opt(v: &[f64]) -> Vec<Option<f64>> {
    v.iter().map(|x| x.is_finite().then_some(*x)).collect()
}

/// Gaps (days with no value) are left out before the volatility is taken
/// and the result is spread back onto the full date axis.
fn vol_with_gaps(values: &[Option<f64>], window: usize) -> Vec<Option<f64>> {
    let present: Vec<(usize, f64)> = values.iter().enumerate().filter_map(|(i, v)| v.map(|x| (i, x))).collect();
    let xs: Vec<f64> = present.iter().map(|p| p.1).collect();
    let vol = trailing_vol(&xs, window);
    let mut out = vec![None; values.len()];
    for ((i, _), v) in present.iter().zip(vol) {
        out[*i] = v.is_finite().then_some(v);
    }
    out
}

fn cell_error(kind: &str, sample: &SampleWindow, spec: &str, e: impl std::fmt::Display) -> CliError {
    CliError::Data(format!("{kind} regression {spec} in {}: {e}", sample.label))
}

fn write_regression(
    w: &mut TableWriter,
    pipeline: &str,
    sample: &SampleWindow,
    spec: &str,
    r: &RegressionResult,
) -> Result<()> {
    for (i, name) in r.names.iter().enumerate() {
        w.row([
            pipeline.to_string(),
            sample.label.to_string(),
            spec.to_string(),
            name.clone(),
            num(r.coefficients[i]),
            num(r.std_errors[i]),
            num(r.t_stats[i]),
            num(r.p_values[i]),
            num(r.adj_r_squared),
            r.n_obs.to_string(),
        ])?;
    }
    Ok(())
}

fn write_trend(out: &mut Outputs<'_>, file: &str, cells: &[TrendCell]) -> Result<()> {
    let mut w = out.table(file, &["security_id", "variable", "sample", "slope", "p_value", "increasing"])?;
    for c in cells {
        let (slope, p, inc) = match &c.outcome {
            Ok(t) => (num(t.slope), num(t.slope_p_value), t.increasing.to_string()),
            Err(_) => (String::new(), String::new(), String::new()),
        };
        w.row([c.security_id.to_string(), c.variable.as_str().to_string(), c.sample.to_string(), slope, p, inc])?;
    }
    w.finish()?;
    Ok(())
}

fn run_volume(
    features: &FeatureSet,
    windows: &[SampleWindow],
    opts: FitOptions,
) -> Result<Vec<(SampleWindow, String, RegressionResult)>> {
    let mut cells = Vec::new();
    for variant in VolumeVariant::ALL {
        for lag in Lag::ALL {
            let rows = tickcost_core::pipeline::volume_rows(features, variant, lag);
            let spec = format!("{}_{}", variant.as_str(), lag.as_str());
            let fits: Vec<Result<(SampleWindow, String, RegressionResult)>> = windows
                .par_iter()
                .map(|w| {
                    fit_rows(&rows, w, opts)
                        .map(|r| (*w, spec.clone(), r))
                        .map_err(|e| cell_error("volume", w, &spec, e))
                })
                .collect();
            for f in fits {
                cells.push(f?);
            }
        }
    }
    Ok(cells)
}

fn run_costs(cfg: &RunConfig, data: &CostRows) -> Result<Vec<(SampleWindow, String, RegressionResult)>> {
    let mut specs = Vec::new();
    for metric in [CostMetric::Is, CostMetric::Mi, CostMetric::Mt] {
        for (tag, notional) in [("A", &cfg.notional_a), ("B", &cfg.notional_b)] {
            let spec = CostSpec {
                metric,
                liquidity: cfg.liquidity.clone(),
                notional: notional.clone(),
                interactions: cfg.deepdive.interactions,
            };
            for w in &cfg.windows {
                specs.push((format!("{}_{tag}", metric.as_str()), *w, spec.clone()));
            }
        }
    }
    let fits: Vec<_> = specs.par_iter().map(|(_, w, spec)| cost_regression(data, w, spec)).collect();
    let mut out = Vec::new();
    for ((name, w, _), fit) in specs.into_iter().zip(fits) {
        let fit = fit.map_err(|e| cell_error("cost", &w, &name, e))?;
        for msg in &fit.warnings {
            warn!("cost regression {name} in {}: {msg}", w.label);
        }
        out.push((w, name, fit.result));
    }
    Ok(out)
}

pub fn run(cfg: &RunConfig) -> Result<DeepdiveSummary> {
    ensure_dir(&cfg.out)?;
    let market = load_market(&cfg.data)?;
    if market.adjusted.is_empty() {
        return Err(CliError::Data(format!("{}: no daily records", cfg.data.display())));
    }
    let orders = load_orders(&cfg.data)?;
    let records = compute_costs(&market, &orders);
    drop(orders);
    let dd = &cfg.deepdive;
    let mut out = Outputs { dir: &cfg.out, summary: DeepdiveSummary::default() };

    // Aggregates and their charts.
    let agg = aggregates(&market.adjusted);
    let mut w = out.table("aggregates.csv", &["date", "weighting", "metric", "value"])?;
    for (i, d) in agg.dates.iter().enumerate() {
        for ((wt, m), v) in &agg.series {
            w.row([d.to_string(), wt.clone(), m.clone(), opt(v[i])])?;
        }
    }
    w.finish()?;
    let weighted = |m: &'static str| Weighting::ALL.map(|w| (w.as_str(), m));
    out.svg("spreads.svg", agg.chart("Average spread (yen)", &weighted("Spread")))?;
    out.svg("spread_over_price.svg", agg.chart("Spread over price", &weighted("SpreadOverPrice")))?;
    out.svg("trade_size.svg", agg.chart("Average trade size (shares)", &weighted("TradeSize")))?;
    out.svg("volume.svg", agg.chart("Total volume (shares)", &[("SUM", "Volume")]))?;
    out.svg("trades.svg", agg.chart("Total number of trades", &[("SUM", "TradeCount")]))?;

    let costs = daily_costs(&records, cfg.negate);
    let mut w = out.table("costs_daily.csv", &["date", "n_orders", "is_bps", "mi_bps", "mt_bps"])?;
    for (i, d) in costs.dates.iter().enumerate() {
        w.row([
            d.to_string(),
            costs.counts[i].to_string(),
            num(costs.means[0][i]),
            num(costs.means[1][i]),
            num(costs.means[2][i]),
        ])?;
    }
    w.finish()?;
    let cost_labels: Vec<String> = costs.dates.iter().map(Date::to_string).collect();
    let cost_series: Vec<Series> = ["IS", "MI", "MT"]
        .iter()
        .zip(&costs.means)
        .map(|(n, v)| Series { name: format!("{n} (bps)"), values: to_opt(v) })
        .collect();
    out.svg("costs.svg", line_chart("Daily mean cost (bps)", &cost_labels, &cost_series))?;

    // Moving volatilities of the market-level series and of daily costs.
    let fx: Vec<Option<f64>> = agg.dates.iter().map(|d| market.fx.rate_on(*d).ok()).collect();
    let market_vol: Vec<(&str, Vec<Option<f64>>)> = vec![
        ("EW Spread", vol_with_gaps(agg.get("EW", "Spread"), dd.vol_window)),
        ("EW Price", vol_with_gaps(agg.get("EW", "Price"), dd.vol_window)),
        ("SUM Volume", vol_with_gaps(agg.get("SUM", "Volume"), dd.vol_window)),
        ("SUM TradeCount", vol_with_gaps(agg.get("SUM", "TradeCount"), dd.vol_window)),
        ("USDJPY", vol_with_gaps(&fx, dd.vol_window)),
    ];
    let cost_vol: Vec<(&str, Vec<Option<f64>>)> = ["IS", "MI", "MT"]
        .iter()
        .zip(&costs.means)
        .map(|(n, v)| (*n, vol_with_gaps(&to_opt(v), dd.vol_window)))
        .collect();
    let mut w = out.table("volatility.csv", &["date", "series", "value"])?;
    for (i, d) in agg.dates.iter().enumerate() {
        for (name, v) in &market_vol {
            w.row([d.to_string(), name.to_string(), opt(v[i])])?;
        }
    }
    for (i, d) in costs.dates.iter().enumerate() {
        for (name, v) in &cost_vol {
            w.row([d.to_string(), format!("{name} bps"), opt(v[i])])?;
        }
    }
    w.finish()?;
    let labels: Vec<String> = agg.dates.iter().map(Date::to_string).collect();
    let to_series = |v: &[(&str, Vec<Option<f64>>)]| -> Vec<Series> {
        v.iter().map(|(n, s)| Series { name: n.to_string(), values: s.clone() }).collect()
    };
    out.svg("volatility.svg", line_chart("Moving volatility", &labels, &to_series(&market_vol)))?;
    out.svg(
        "cost_volatility.svg",
        line_chart("Moving volatility of daily mean cost", &cost_labels, &to_series(&cost_vol)),
    )?;

    // Stationarity and trend screens, fanned out per security.
    let panel = Panel::build(&market.adjusted, &market.fx).map_err(|e| CliError::Data(e.to_string()))?;
    let windows = &cfg.windows;
    let stationarity: Vec<StationarityCell> =
        panel.series.par_iter().map(|s| screen_security_stationarity(s, windows)).collect::<Vec<_>>().concat();
    let skipped = stationarity.iter().filter(|c| c.outcome.is_err()).count();
    if skipped > 0 {
        warn!("stationarity: {skipped} of {} cells skipped", stationarity.len());
    }
    let mut w = out.table(
        "stationarity.csv",
        &["security_id", "variable", "sample", "test", "statistic", "p_value", "reject_5pct"],
    )?;
    for c in &stationarity {
        let (stat, p, rej) = match &c.outcome {
            Ok(t) => (num(t.statistic), num(t.p_value), t.reject_at_5pct.to_string()),
            Err(_) => (String::new(), String::new(), String::new()),
        };
        w.row([
            c.security_id.to_string(),
            c.variable.name(c.differenced),
            c.sample.to_string(),
            c.test.as_str().into(),
            stat,
            p,
            rej,
        ])?;
    }
    w.finish()?;
    let mut w =
        out.table("stationarity_summary.csv", &["variable", "sample", "test", "n_reject", "n_tested", "n_skipped"])?;
    for s in summarize_stationarity(&stationarity) {
        w.row([
            s.variable.name(s.differenced),
            s.sample.to_string(),
            s.test.as_str().into(),
            s.n_reject.to_string(),
            s.n_tested.to_string(),
            s.n_skipped.to_string(),
        ])?;
    }
    w.finish()?;

    let mut trend_summary = Vec::new();
    for (end, file) in [(None, "trend.csv".to_string()), (Some(dd.trend_end), format!("trend_to_{}.csv", dd.trend_end))]
    {
        let cells: Vec<TrendCell> =
            panel.series.par_iter().map(|s| screen_security_trend(s, windows, end)).collect::<Vec<_>>().concat();
        write_trend(&mut out, &file, &cells)?;
        let label = end.map_or_else(|| "full".to_string(), |d| d.to_string());
        trend_summary.extend(summarize_trend(&cells).into_iter().map(|s| (label.clone(), s)));
    }
    let mut w = out.table(
        "trend_summary.csv",
        &["end", "variable", "sample", "n_increasing", "n_increasing_significant", "n_tested", "n_skipped"],
    )?;
    for (end, s) in trend_summary {
        w.row([
            end,
            s.variable.as_str().into(),
            s.sample.to_string(),
            s.n_increasing.to_string(),
            s.n_increasing_significant.to_string(),
            s.n_tested.to_string(),
            s.n_skipped.to_string(),
        ])?;
    }
    w.finish()?;

    // Differencing policy and regressions.
    let policy = match dd.differencing {
        Differencing::Default => DifferencingPolicy::default(),
        Differencing::Screen => {
            if !windows.iter().any(|w| w.label == dd.policy_sample) {
                return Err(CliError::Validation(format!(
                    "policy sample {} is not a configured window",
                    dd.policy_sample
                )));
            }
            DifferencingPolicy::from_screen(&stationarity, dd.policy_sample, dd.threshold)
        }
    };
    drop(stationarity);
    let mut w = out.table("policy.csv", &["variable", "differenced", "adf_reject_frac"])?;
    for v in Var::ALL {
        let e = policy.entry(v);
        w.row([v.as_str().to_string(), e.differenced.to_string(), opt(e.adf_reject_frac)])?;
    }
    w.finish()?;
    info!(
        "differenced: {}",
        Var::ALL.iter().filter(|v| policy.is_differenced(**v)).map(|v| v.as_str()).collect::<Vec<_>>().join(", ")
    );

    let features = build_features(&panel, &policy, dd.vol_window);
    let opts = FitOptions { demean: dd.demean };
    let volume = run_volume(&features, windows, opts)?;
    let data = cost_rows(&records, &features);
    if data.dropped > 0 {
        warn!("cost regressions: {} orders without a feature row dropped", data.dropped);
    }
    drop(records);
    let cost = run_costs(cfg, &data)?;

    let mut w = out.table(
        REGRESSIONS_FILE,
        &["pipeline", "sample", "spec", "regressor", "coef", "std_err", "t_stat", "p_value", "adj_r2", "n_obs"],
    )?;
    for (win, spec, r) in &volume {
        write_regression(&mut w, "volume", win, spec, r)?;
    }
    for (win, spec, r) in &cost {
        write_regression(&mut w, "cost", win, spec, r)?;
    }
    w.finish()?;
    out.summary.volume_groups = volume.len();
    out.summary.cost_groups = cost.len();
    info!(
        "deepdive wrote {} tables and {} charts; {} volume and {} cost regressions",
        out.summary.csv_files.len(),
        out.summary.svg_files.len(),
        volume.len(),
        cost.len()
    );
    Ok(out.summary)
}
