use std::path::Path;

use log::info;
use rayon::prelude::*;
use sha2::{Digest, Sha256};
use tickcost_core::synth::{assemble_market, generate_order, generate_security, market_skeleton, SynthMarket};

use super::{ensure_dir, DAILY_FILE, FILLS_FILE, FX_FILE, ORDERS_FILE, SPLITS_FILE, TRUTH_FILE};
use crate::config::RunConfig;
use crate::csvio::{self, TableWriter};
use crate::error::{CliError, Result};

pub const MANIFEST_FILE: &str = "manifest.csv";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub file: String,
    pub rows: usize,
    pub sha256: String,
}

fn digest(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// Builds the synthetic market in parallel over securities.
pub fn build_market(cfg: &RunConfig) -> Result<SynthMarket> {
    let synth = &cfg.synth;
    let (calendar, fx) = market_skeleton(synth).map_err(|e| CliError::Validation(e.to_string()))?;
    let securities = (0..synth.n_securities)
        .into_par_iter()
        .map(|i| generate_security(synth, &calendar, i))
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| CliError::Validation(e.to_string()))?;
    Ok(assemble_market(synth, calendar, fx, securities))
}

/// Writes daily, order, fill, FX, split and truth files plus a manifest.
pub fn run(cfg: &RunConfig) -> Result<Vec<ManifestEntry>> {
    ensure_dir(&cfg.out)?;
    let market = build_market(cfg)?;
    let fx = market.fx_table().map_err(|e| CliError::Validation(e.to_string()))?;
    let generated = (0..cfg.synth.n_orders)
        .into_par_iter()
        .map(|i| generate_order(&cfg.synth, &market, &fx, i))
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| CliError::Validation(e.to_string()))?;
    let (orders, truth): (Vec<_>, Vec<_>) = generated.into_iter().unzip();

    let out = &cfg.out;
    let mut rows = vec![(DAILY_FILE, csvio::write_daily(&out.join(DAILY_FILE), &market.raw_days())?)];
    let (n_orders, n_fills) = csvio::write_orders(&out.join(ORDERS_FILE), &out.join(FILLS_FILE), &orders)?;
    rows.push((ORDERS_FILE, n_orders));
    rows.push((FILLS_FILE, n_fills));
    rows.push((FX_FILE, csvio::write_fx(&out.join(FX_FILE), &market.fx)?));
    rows.push((SPLITS_FILE, csvio::write_splits(&out.join(SPLITS_FILE), &market.splits)?));
    rows.push((TRUTH_FILE, csvio::write_truth(&out.join(TRUTH_FILE), &truth)?));

    let mut manifest = Vec::new();
    for (file, n) in rows {
        manifest.push(ManifestEntry { file: file.to_string(), rows: n, sha256: digest(&out.join(file))? });
    }
    let mut w = TableWriter::create(&out.join(MANIFEST_FILE), &["file", "rows", "sha256", "seed"])?;
    for m in &manifest {
        w.row([m.file.clone(), m.rows.to_string(), m.sha256.clone(), cfg.seed.to_string()])?;
    }
    w.finish()?;
    info!("generated {} securities, {} orders with seed {}", cfg.synth.n_securities, n_orders, cfg.seed);
    Ok(manifest)
}
