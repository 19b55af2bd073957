use std::collections::{BTreeMap, BTreeSet, HashMap};

use log::{info, warn};
use rayon::prelude::*;
use tickcost_core::event::{affected_securities, DayIndex};
use tickcost_core::market::{by_security, Order, SecurityDay, SecurityId, TickSchedule};
use tickcost_core::mie::{build_profile, calibration_error, estimate_market_impact, MieResult, SimParams};
use tickcost_core::rng::derive_seed;
use tickcost_core::Date;

use super::{compute_costs, ensure_dir, load_market, load_orders};
use crate::config::RunConfig;
use crate::csvio::{num, TableWriter};
use crate::error::{CliError, Result};

pub const MIE_FILE: &str = "mie.csv";
pub const CALIBRATION_FILE: &str = "mie_calibration.csv";

#[derive(Debug, Clone, PartialEq)]
pub struct MieSummary {
    pub rows: usize,
    pub skipped_securities: usize,
    pub calibration_pairs: usize,
    pub calibration_mae_bps: Option<f64>,
}

/// Names on the decimal tick schedule as of `date`: affected by a phase
/// whose ex-date has passed.
struct TickRegime {
    switches: Vec<(Date, BTreeSet<SecurityId>)>,
}

impl TickRegime {
    fn schedule(&self, id: &SecurityId, date: Date) -> TickSchedule {
        if self.switches.iter().any(|(ex, set)| *ex <= date && set.contains(id)) {
            TickSchedule::tse_topix100_decimal()
        } else {
            TickSchedule::tse_standard()
        }
    }
}

/// `(order_shares, result, seed)`.
type SizeEstimate = (u64, MieResult, u64);

fn params_for(base: &SimParams, seed: u64, ordinal: u64) -> SimParams {
    SimParams { seed: derive_seed(seed, ordinal), ..*base }
}

pub fn run(cfg: &RunConfig) -> Result<MieSummary> {
    ensure_dir(&cfg.out)?;
    cfg.mie.params.validate().map_err(|e| CliError::Validation(e.to_string()))?;
    let market = load_market(&cfg.data)?;
    let index = DayIndex::new(&market.adjusted);
    let regime = TickRegime {
        switches: cfg.phases.iter().map(|p| (p.ex_date, affected_securities(&index, p).affected)).collect(),
    };
    let histories: BTreeMap<SecurityId, Vec<SecurityDay>> = by_security(&market.adjusted);
    let ordinals: BTreeMap<&SecurityId, u64> = histories.keys().zip(0u64..).collect();
    let mie = &cfg.mie;

    let work: Vec<(&SecurityId, &Vec<SecurityDay>)> = histories.iter().collect();
    let estimates: Vec<std::result::Result<Vec<SizeEstimate>, String>> = work
        .par_iter()
        .map(|(id, hist)| {
            let last = hist.last().map(|d| d.date).ok_or("no history")?;
            let ticks = regime.schedule(id, last);
            let profile = build_profile(hist, mie.lookback_days, mie.intervals, &ticks).map_err(|e| e.to_string())?;
            let params = params_for(&mie.params, cfg.seed, ordinals[id]);
            mie.sizes
                .iter()
                .map(|&size| {
                    estimate_market_impact(size, &profile, &params)
                        .map(|r| (size, r, params.seed))
                        .map_err(|e| e.to_string())
                })
                .collect()
        })
        .collect();

    let mut w = TableWriter::create(
        &cfg.out.join(MIE_FILE),
        &["security_id", "order_shares", "mean_bps", "stdev_bps", "mean_executions", "n_paths", "seed"],
    )?;
    let mut skipped = 0;
    for ((id, _), est) in work.iter().zip(estimates) {
        match est {
            Ok(rows) => {
                for (size, r, seed) in rows {
                    w.row([
                        id.to_string(),
                        size.to_string(),
                        num(r.mean_bps),
                        num(r.stdev_bps),
                        num(r.mean_executions),
                        r.n_paths.to_string(),
                        seed.to_string(),
                    ])?;
                }
            }
            Err(e) => {
                skipped += 1;
                warn!("mie: security {id}: {e}; skipped");
            }
        }
    }
    let rows = w.finish()?;

    // Calibration: the first orders by id with a full look-back before
    // their arrival day, each estimated from that history alone.
    let mut orders = load_orders(&cfg.data)?;
    orders.sort_by(|a, b| a.order_id.cmp(&b.order_id));
    orders.retain(|o| {
        histories
            .get(&o.security_id)
            .is_some_and(|h| h.partition_point(|d| d.date < o.arrival_date) >= mie.lookback_days)
    });
    orders.truncate(mie.calibration_orders);
    let realized = compute_costs(&market, &orders);
    let by_id: HashMap<&str, &Order> = orders.iter().map(|o| (o.order_id.as_str(), o)).collect();
    let pairs: Vec<std::result::Result<(u64, f64, f64), String>> = realized
        .par_iter()
        .map(|rec| {
            let order = by_id[rec.order_id.as_str()];
            let hist = histories.get(&order.security_id).ok_or("unknown security")?;
            let cut = hist.partition_point(|d| d.date < order.arrival_date);
            let ticks = regime.schedule(&order.security_id, order.arrival_date);
            let profile =
                build_profile(&hist[..cut], mie.lookback_days, mie.intervals, &ticks).map_err(|e| e.to_string())?;
            let params = params_for(&mie.params, cfg.seed, ordinals[&order.security_id]);
            let est = estimate_market_impact(order.total_shares, &profile, &params).map_err(|e| e.to_string())?;
            Ok((order.total_shares, est.mean_bps, rec.mi_bps))
        })
        .collect();

    let mut w = TableWriter::create(
        &cfg.out.join(CALIBRATION_FILE),
        &["order_id", "security_id", "order_shares", "estimated_bps", "realized_bps"],
    )?;
    let mut ok = Vec::new();
    for (rec, pair) in realized.iter().zip(pairs) {
        match pair {
            Ok((shares, est, real)) => {
                w.row([rec.order_id.clone(), rec.security_id.to_string(), shares.to_string(), num(est), num(real)])?;
                ok.push((est, real));
            }
            Err(e) => warn!("mie calibration: order {}: {e}; skipped", rec.order_id),
        }
    }
    w.finish()?;
    let mae = calibration_error(&ok).ok();
    if let Some(m) = mae {
        info!("mie calibration over {} orders: mean absolute error {m} bps", ok.len());
    }
    Ok(MieSummary { rows, skipped_securities: skipped, calibration_pairs: ok.len(), calibration_mae_bps: mae })
}
