//! Subcommand implementations. Each reads its inputs from the configured
//! data directory and writes into the output directory; nothing else.

pub mod birdseye;
pub mod deepdive;
pub mod gen;
pub mod mie;
pub mod tca;

use std::path::{Path, PathBuf};

use log::warn;
use rayon::prelude::*;
use tickcost_core::event::DayIndex;
use tickcost_core::market::{adjust_for_splits, FxTable, Order, SecurityDay, SplitRatio};
use tickcost_core::tca::{cost_record, CostRecord};

use crate::csvio;
use crate::error::{CliError, Result};

pub const DAILY_FILE: &str = "daily.csv";
pub const ORDERS_FILE: &str = "orders.csv";
pub const FILLS_FILE: &str = "fills.csv";
pub const FX_FILE: &str = "fx.csv";
pub const SPLITS_FILE: &str = "splits.csv";
pub const TRUTH_FILE: &str = "truth.csv";

/// Daily data as recorded and restated for splits.
pub struct Market {
    pub raw: Vec<SecurityDay>,
    pub adjusted: Vec<SecurityDay>,
    pub splits: Vec<SplitRatio>,
    pub fx: FxTable,
}

fn existing(dir: &Path, name: &str) -> Result<PathBuf> {
    let p = dir.join(name);
    if p.is_file() {
        Ok(p)
    } else {
        Err(CliError::Data(format!("{}: missing input file", p.display())))
    }
}

/// Reads daily, FX and (if present) split files from `dir`.
pub fn load_market(dir: &Path) -> Result<Market> {
    let raw = csvio::read_daily(&existing(dir, DAILY_FILE)?)?;
    let fx = FxTable::new(csvio::read_fx(&existing(dir, FX_FILE)?)?)
        .map_err(|e| CliError::Data(format!("{}: {e}", dir.join(FX_FILE).display())))?;
    let splits_path = dir.join(SPLITS_FILE);
    let splits = if splits_path.is_file() { csvio::read_splits(&splits_path)? } else { Vec::new() };
    let adjusted =
        adjust_for_splits(&raw, &splits).map_err(|e| CliError::Data(format!("{}: {e}", splits_path.display())))?;
    Ok(Market { raw, adjusted, splits, fx })
}

pub fn load_orders(dir: &Path) -> Result<Vec<Order>> {
    csvio::read_orders(&existing(dir, ORDERS_FILE)?, &existing(dir, FILLS_FILE)?)
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

/// Cost records for every order that joins to a daily record and an FX
/// rate; the rest are reported and skipped. Liquidity demand uses the
/// recorded (unadjusted) volume of the arrival day.
pub fn compute_costs(market: &Market, orders: &[Order]) -> Vec<CostRecord> {
    let index = DayIndex::new(&market.raw);
    let results: Vec<std::result::Result<CostRecord, String>> = orders
        .par_iter()
        .map(|o| {
            let day = index
                .get(&o.security_id, o.arrival_date)
                .ok_or_else(|| format!("no daily record for {} on {}", o.security_id, o.arrival_date))?;
            cost_record(o, day.volume, &market.fx).map_err(|e| e.to_string())
        })
        .collect();
    let mut out = Vec::with_capacity(results.len());
    for (o, r) in orders.iter().zip(results) {
        match r {
            Ok(rec) => out.push(rec),
            Err(e) => warn!("order {}: {e}; skipped", o.order_id),
        }
    }
    out
}
