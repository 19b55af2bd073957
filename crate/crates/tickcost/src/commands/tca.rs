use std::collections::HashMap;

use log::{info, warn};
use tickcost_core::event::BucketScheme;
use tickcost_core::tca::{market_impact, present, MiMode};

use super::{compute_costs, ensure_dir, load_market, load_orders, TRUTH_FILE};
use crate::config::RunConfig;
use crate::csvio::{self, num, TableWriter};
use crate::error::{CliError, Result};

pub const COSTS_FILE: &str = "costs.csv";

const HEADER: [&str; 12] = [
    "order_id",
    "security_id",
    "side",
    "arrival_date",
    "is_bps",
    "mi_bps",
    "mt_bps",
    "liq_pct",
    "notional_usd",
    "liq_bucket",
    "notional_bucket_a",
    "notional_bucket_b",
];

#[derive(Debug, Clone, PartialEq)]
pub struct TcaSummary {
    pub rows: usize,
    pub skipped: usize,
    /// Largest `|mi_bps - target|` when a truth file sits next to the data.
    pub max_truth_error: Option<f64>,
}

fn label(scheme: &BucketScheme, v: f64) -> Result<String> {
    scheme.label(v).map(str::to_string).map_err(|e| CliError::Data(e.to_string()))
}

pub fn run(cfg: &RunConfig) -> Result<TcaSummary> {
    ensure_dir(&cfg.out)?;
    let market = load_market(&cfg.data)?;
    let orders = load_orders(&cfg.data)?;
    let records = compute_costs(&market, &orders);
    let nnl: Option<HashMap<&str, f64>> = (cfg.mi_mode == MiMode::NetNewLevels).then(|| {
        orders
            .iter()
            .filter_map(|o| market_impact(o, MiMode::NetNewLevels).ok().map(|c| (o.order_id.as_str(), c.bps)))
            .collect()
    });

    let mut header: Vec<&str> = HEADER.to_vec();
    if nnl.is_some() {
        header.push("mi_nnl_bps");
    }
    let mut w = TableWriter::create(&cfg.out.join(COSTS_FILE), &header)?;
    for r in &records {
        let mm = r.notional_usd / 1e6;
        let mut fields = vec![
            r.order_id.clone(),
            r.security_id.to_string(),
            r.side.as_str().to_string(),
            r.arrival_date.to_string(),
            num(present(r.is_bps, cfg.negate)),
            num(present(r.mi_bps, cfg.negate)),
            num(present(r.mt_bps, cfg.negate)),
            num(r.liquidity_demand_pct),
            num(r.notional_usd),
            label(&cfg.liquidity, r.liquidity_demand_pct)?,
            label(&cfg.notional_a, mm)?,
            label(&cfg.notional_b, mm)?,
        ];
        if let Some(map) = &nnl {
            fields.push(num(present(map[r.order_id.as_str()], cfg.negate)));
        }
        w.row(fields)?;
    }
    let rows = w.finish()?;

    let truth_path = cfg.data.join(TRUTH_FILE);
    let max_truth_error = if truth_path.is_file() {
        let truth: HashMap<String, f64> =
            csvio::read_truth(&truth_path)?.into_iter().map(|t| (t.order_id, t.target_mi_bps)).collect();
        let mut worst: f64 = 0.0;
        for r in &records {
            match truth.get(&r.order_id) {
                Some(t) => worst = worst.max((r.mi_bps - t).abs()),
                None => warn!("order {}: no truth label", r.order_id),
            }
        }
        info!("max |mi_bps - target_mi_bps| = {worst:e}");
        Some(worst)
    } else {
        None
    };
    Ok(TcaSummary { rows, skipped: orders.len() - records.len(), max_truth_error })
}
