use log::{info, warn};
use tickcost_core::event::{
    affected_securities, birdseye_compare, BirdsEyeSummary, CompareOptions, DayIndex, EventError, Metric,
};

use super::{ensure_dir, load_market, write_text};
use crate::config::RunConfig;
use crate::csvio::{num, opt, TableWriter};
use crate::error::{CliError, Result};
use crate::svg::{bar_chart, Series};

pub const DETAIL_FILE: &str = "birdseye.csv";
pub const SUMMARY_FILE: &str = "birdseye_summary.csv";
pub const CHART_FILE: &str = "birdseye.svg";

/// Runs every configured (phase, scheme) pair for both metrics on
/// split-adjusted data.
pub fn compare_all(cfg: &RunConfig, index: &DayIndex<'_>) -> Result<Vec<BirdsEyeSummary>> {
    let opts = CompareOptions { min_before_spread: cfg.min_before_spread };
    let mut out = Vec::new();
    for phase in &cfg.phases {
        let set = affected_securities(index, phase);
        if !set.missing.is_empty() {
            warn!("{}: {} securities have no record on the ex-date", phase.label, set.missing.len());
        }
        info!("{}: {} affected securities", phase.label, set.affected.len());
        for (_, scheme) in cfg.schemes.iter().filter(|(p, _)| *p == phase.label) {
            for metric in Metric::ALL {
                match birdseye_compare(index, &set.affected, phase.label, scheme, metric, opts) {
                    Ok(s) => out.push(s),
                    Err(e @ EventError::EmptyOverlap { .. }) => {
                        warn!("{} {} {}: {e}; skipped", phase.label, scheme.label.as_str(), metric.as_str())
                    }
                    Err(e) => return Err(CliError::Data(e.to_string())),
                }
            }
        }
    }
    Ok(out)
}

pub fn run(cfg: &RunConfig) -> Result<Vec<BirdsEyeSummary>> {
    ensure_dir(&cfg.out)?;
    let market = load_market(&cfg.data)?;
    if market.adjusted.is_empty() {
        return Err(CliError::Data(format!("{}: no daily records", cfg.data.display())));
    }
    let index = DayIndex::new(&market.adjusted);
    let summaries = compare_all(cfg, &index)?;

    let mut w = TableWriter::create(
        &cfg.out.join(DETAIL_FILE),
        &["phase", "scheme", "metric", "security_id", "affected", "before", "after", "pct_change"],
    )?;
    for s in &summaries {
        for c in &s.per_security {
            w.row([
                s.phase.to_string(),
                s.scheme.as_str().to_string(),
                s.metric.as_str().to_string(),
                c.security_id.to_string(),
                c.affected.to_string(),
                opt(c.before),
                opt(c.after),
                opt(c.pct_change),
            ])?;
        }
    }
    w.finish()?;

    let mut w = TableWriter::create(
        &cfg.out.join(SUMMARY_FILE),
        &["phase", "scheme", "metric", "pct_decreased_affected", "pct_decreased_all", "n_affected", "n_all"],
    )?;
    for s in &summaries {
        w.row([
            s.phase.to_string(),
            s.scheme.as_str().to_string(),
            s.metric.as_str().to_string(),
            num(s.pct_decreased_affected),
            num(s.pct_decreased_all),
            s.n_affected.to_string(),
            s.n_all.to_string(),
        ])?;
    }
    w.finish()?;

    let mut categories: Vec<String> = Vec::new();
    for s in &summaries {
        let c = format!("{} {}", s.phase, s.scheme.as_str());
        if !categories.contains(&c) {
            categories.push(c);
        }
    }
    let series: Vec<Series> = Metric::ALL
        .iter()
        .map(|&m| Series {
            name: format!("{} affected", m.as_str()),
            values: categories
                .iter()
                .map(|c| {
                    summaries
                        .iter()
                        .find(|s| s.metric == m && format!("{} {}", s.phase, s.scheme.as_str()) == *c)
                        .map(|s| s.pct_decreased_affected)
                })
                .collect(),
        })
        .collect();
    write_text(
        &cfg.out.join(CHART_FILE),
        &bar_chart("Share of affected names with a decrease (%)", &categories, &series),
    )?;
    Ok(summaries)
}
