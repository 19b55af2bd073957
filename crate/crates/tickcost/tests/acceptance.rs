//! Acceptance criteria, one PASS/FAIL line each. Exits non-zero if any
//! criterion fails.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::Rng;
use rand_distr::StandardNormal;
use tickcost_core::market::{Fill, Order, OrderHeader, SecurityDay, SecurityId, Side};
use tickcost_core::mie::{build_profile, estimate_market_impact, MarketProfile, SimParams, TradingStyle};
use tickcost_core::money::Price;
use tickcost_core::pipeline::{
    build_features, volume_regression, volume_rows, DifferencingPolicy, FitOptions, Lag, Panel, VolumeVariant,
    VOL_WINDOW,
};
use tickcost_core::rng::{substream, Stream};
use tickcost_core::stats::{
    adf_test, kpss_test, moving_vol_log, moving_vol_signed, ols, pp_test, AdfOptions, Design, Deterministic,
};
use tickcost_core::synth::{generate_market, generate_orders, SynthConfig};
use tickcost_core::tca::{decompose, implementation_shortfall, market_impact, MiMode};
use tickcost_core::{market::TickSchedule, Date};

// Tolerances and thresholds.
const AC1_ORDERS: usize = 10_000;
const AC1_BPS_REL: f64 = 1e-9;
const AC1_BUDGET: Duration = Duration::from_secs(5);
const AC2_ORDERS: usize = 1_000;
const AC2_MAX_FILLS: u32 = 10;
const AC2_REL: f64 = 1e-12;
const AC3_DESIGNS: usize = 100;
const AC3_MAX_N: usize = 1000;
const AC3_MAX_K: usize = 10;
const AC3_REL: f64 = 1e-8;
const AC4_RUNS: u64 = 1_000;
const AC4_N: usize = 500;
const AC4_SIZE_BAND: (f64, f64) = (0.03, 0.07);
const AC4_MIN_POWER: f64 = 0.80;
const AC4_PHI: f64 = 0.5;
const AC4_BUDGET: Duration = Duration::from_secs(60);
const AC6_EFFECT_BPS: f64 = -10.0;
const AC6_TOL_BPS: f64 = 2.0;
const AC6_BUDGET: Duration = Duration::from_secs(60);
const AC7_MAX_P: f64 = 0.01;
const AC7_ZERO_NOISE_REL: f64 = 1e-6;
const AC8_TOL: f64 = 1e-9;
const AC9_DEGENERATE_BPS: f64 = 100.0;
const AC10_BUDGET: Duration = Duration::from_secs(120);

struct Report {
    failed: usize,
}

impl Report {
    fn line(&mut self, id: &str, name: &str, result: Result<String, String>) {
        match result {
            Ok(detail) => println!("{id} PASS {name}: {detail}"),
            Err(detail) => {
                self.failed += 1;
                println!("{id} FAIL {name}: {detail}");
            }
        }
    }
}

fn check(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn rel_close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()) || a == b
}

fn normal(rng: &mut Stream) -> f64 {
    rng.sample(StandardNormal)
}

// AC1

fn ac1() -> Result<String, String> {
    let t0 = Instant::now();
    let cfg = SynthConfig { n_securities: 20, n_orders: AC1_ORDERS, ..SynthConfig::default() };
    let market = generate_market(&cfg).map_err(|e| e.to_string())?;
    let (orders, _) = generate_orders(&cfg, &market).map_err(|e| e.to_string())?;
    let mut sides = [0usize; 2];
    let mut worst: f64 = 0.0;
    for o in &orders {
        sides[(o.side == Side::Sell) as usize] += 1;
        let d = decompose(o).map_err(|e| e.to_string())?;
        // Shortfall recomputed from the fills, independent of the decomposition.
        let sign = o.side.sign() as i128;
        let p0 = o.arrival_price.nanos() as i128;
        let is_oracle: i128 = o.fills.iter().map(|f| f.shares as i128 * sign * (f.price.nanos() as i128 - p0)).sum();
        check(d.is.ccy.nanos() == is_oracle, || {
            format!("{}: shortfall {} vs {is_oracle}", o.order_id, d.is.ccy.nanos())
        })?;
        for mode in [MiMode::Standard, MiMode::NetNewLevels] {
            let is = implementation_shortfall(o).map_err(|e| e.to_string())?;
            let mi = market_impact(o, mode).map_err(|e| e.to_string())?;
            let mt_ccy = match mode {
                MiMode::Standard => d.mt.ccy,
                MiMode::NetNewLevels => is.ccy - mi.ccy,
            };
            check(is.ccy == mi.ccy + mt_ccy, || format!("{} {mode:?}: currency identity broken", o.order_id))?;
            let mt_bps = match mode {
                MiMode::Standard => d.mt.bps,
                MiMode::NetNewLevels => mt_ccy.bps_of(o.arrival_notional()),
            };
            let gap = (is.bps - (mi.bps + mt_bps)).abs() / is.bps.abs().max(1.0);
            worst = worst.max(gap);
        }
    }
    let elapsed = t0.elapsed();
    check(sides[0] > 0 && sides[1] > 0, || format!("sides {sides:?}"))?;
    check(worst < AC1_BPS_REL, || format!("bps gap {worst:e}"))?;
    check(elapsed < AC1_BUDGET, || format!("took {elapsed:?}"))?;
    Ok(format!("{} orders ({} buy, {} sell), max bps gap {worst:e}, {elapsed:.2?}", orders.len(), sides[0], sides[1]))
}

// AC2

fn random_order(rng: &mut Stream, i: usize) -> Order {
    let side = if rng.random_bool(0.5) { Side::Buy } else { Side::Sell };
    let p0 = rng.random_range(100_000i64..10_000_000) * 1_000_000; // 0.001 yen steps
    let n_fills = rng.random_range(1..=AC2_MAX_FILLS);
    let mut p = p0;
    let fills: Vec<Fill> = (0..n_fills)
        .map(|k| {
            p = (p + rng.random_range(-50i64..=50) * 100_000_000).max(1_000_000);
            Fill { seq: k + 1, price: Price::from_nanos(p), shares: rng.random_range(1..=5_000) * 100 }
        })
        .collect();
    let header = OrderHeader {
        order_id: format!("R{i}"),
        security_id: SecurityId::new("1301"),
        side,
        arrival_date: Date::ymd(2014, 3, 3),
        arrival_price: Price::from_nanos(p0),
        total_shares: fills.iter().map(|f| f.shares).sum(),
    };
    Order::new(header, fills).expect("valid random order")
}

/// Walks the fills with the adverse-move rules written out directly.
fn mi_oracle(o: &Order) -> (f64, f64) {
    let s = o.side.sign() as i128;
    let p0 = s * o.arrival_price.nanos() as i128;
    let signed: Vec<i128> = o.fills.iter().map(|f| s * f.price.nanos() as i128).collect();
    let (mut standard, mut nnl) = (0i128, 0i128);
    for (t, f) in o.fills.iter().enumerate() {
        let prev = if t == 0 { p0 } else { signed[t - 1] };
        standard += f.shares as i128 * (signed[t] - prev).max(0);
        let extreme = signed[..t].iter().copied().fold(p0, i128::max);
        nnl += f.shares as i128 * (signed[t] - extreme).max(0);
    }
    let base = o.total_shares as f64 * o.arrival_price.nanos() as f64;
    (1e4 * standard as f64 / base, 1e4 * nnl as f64 / base)
}

fn ac2() -> Result<String, String> {
    let mut rng = substream(2, 0);
    let mut worst: f64 = 0.0;
    for i in 0..AC2_ORDERS {
        let o = random_order(&mut rng, i);
        let (std_o, nnl_o) = mi_oracle(&o);
        let std = market_impact(&o, MiMode::Standard).map_err(|e| e.to_string())?.bps;
        let nnl = market_impact(&o, MiMode::NetNewLevels).map_err(|e| e.to_string())?.bps;
        for (got, want) in [(std, std_o), (nnl, nnl_o)] {
            check(rel_close(got, want, AC2_REL), || format!("{}: {got} vs oracle {want}", o.order_id))?;
            if want != 0.0 {
                worst = worst.max((got - want).abs() / want.abs());
            }
        }
        check(std >= nnl && nnl >= 0.0, || format!("{}: standard {std}, net-new-levels {nnl}", o.order_id))?;
    }
    Ok(format!("{AC2_ORDERS} orders, max relative gap {worst:e}"))
}

// AC3

/// Inverse of a small symmetric positive definite matrix by Gauss-Jordan
/// elimination with partial pivoting.
fn invert(mut a: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let p = a.len();
    let mut inv: Vec<Vec<f64>> = (0..p).map(|i| (0..p).map(|j| (i == j) as u8 as f64).collect()).collect();
    for c in 0..p {
        let piv = (c..p).max_by(|&x, &y| a[x][c].abs().total_cmp(&a[y][c].abs())).unwrap();
        a.swap(c, piv);
        inv.swap(c, piv);
        let d = a[c][c];
        for j in 0..p {
            a[c][j] /= d;
            inv[c][j] /= d;
        }
        for r in 0..p {
            if r != c {
                let f = a[r][c];
                for j in 0..p {
                    a[r][j] -= f * a[c][j];
                    inv[r][j] -= f * inv[c][j];
                }
            }
        }
    }
    inv
}

struct NormalEq {
    coef: Vec<f64>,
    se: Vec<f64>,
    adj_r2: f64,
}

fn normal_equations(y: &[f64], cols: &[Vec<f64>]) -> NormalEq {
    let n = y.len();
    let mut a: Vec<Vec<f64>> = vec![vec![1.0; n]];
    a.extend(cols.iter().cloned());
    let p = a.len();
    let xtx: Vec<Vec<f64>> =
        (0..p).map(|i| (0..p).map(|j| (0..n).map(|r| a[i][r] * a[j][r]).sum()).collect()).collect();
    let xty: Vec<f64> = (0..p).map(|i| (0..n).map(|r| a[i][r] * y[r]).sum()).collect();
    let inv = invert(xtx);
    let coef: Vec<f64> = (0..p).map(|i| (0..p).map(|j| inv[i][j] * xty[j]).sum()).collect();
    let ssr: f64 = (0..n).map(|r| (y[r] - (0..p).map(|i| coef[i] * a[i][r]).sum::<f64>()).powi(2)).sum();
    let mean = y.iter().sum::<f64>() / n as f64;
    let sst: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    let s2 = ssr / (n - p) as f64;
    let se = (0..p).map(|i| (s2 * inv[i][i]).sqrt()).collect();
    let adj_r2 = 1.0 - (ssr / (n - p) as f64) / (sst / (n - 1) as f64);
    NormalEq { coef, se, adj_r2 }
}

fn ac3() -> Result<String, String> {
    let mut rng = substream(3, 0);
    let mut worst: f64 = 0.0;
    for d in 0..AC3_DESIGNS {
        let k = rng.random_range(1..=AC3_MAX_K);
        let n = rng.random_range(k + 12..=AC3_MAX_N);
        let cols: Vec<Vec<f64>> =
            (0..k).map(|_| (0..n).map(|_| rng.random_range(-3.0..3.0) + 2.0 * normal(&mut rng)).collect()).collect();
        let beta: Vec<f64> = (0..=k).map(|_| rng.random_range(-5.0..5.0)).collect();
        let y: Vec<f64> = (0..n)
            .map(|r| {
                beta[0]
                    + (0..k).map(|j| beta[j + 1] * cols[j][r]).sum::<f64>()
                    + rng.random_range(0.1..3.0) * normal(&mut rng)
            })
            .collect();
        let mut design = Design::new();
        for (j, c) in cols.iter().enumerate() {
            design.push(format!("x{j}"), c.clone());
        }
        let fit = ols(&y, &design, true).map_err(|e| format!("design {d}: {e}"))?;
        let oracle = normal_equations(&y, &cols);
        let pairs = fit
            .coefficients
            .iter()
            .zip(&oracle.coef)
            .chain(fit.std_errors.iter().zip(&oracle.se))
            .chain([(&fit.adj_r_squared, &oracle.adj_r2)]);
        for (got, want) in pairs {
            check(rel_close(*got, *want, AC3_REL), || format!("design {d} (n={n}, k={k}): {got} vs {want}"))?;
            worst = worst.max((got - want).abs() / want.abs().max(f64::MIN_POSITIVE));
        }
    }
    Ok(format!("{AC3_DESIGNS} designs, max relative gap {worst:e}"))
}

// AC4

fn random_walk(rng: &mut Stream, n: usize) -> Vec<f64> {
    let mut x = 0.0;
    (0..n)
        .map(|_| {
            x += normal(rng);
            x
        })
        .collect()
}

fn ar1(rng: &mut Stream, n: usize, phi: f64) -> Vec<f64> {
    let mut x = normal(rng) / (1.0 - phi * phi).sqrt();
    (0..n)
        .map(|_| {
            x = phi * x + normal(rng);
            x
        })
        .collect()
}

fn ac4() -> Result<String, String> {
    let t0 = Instant::now();
    let det = Deterministic::Constant;
    let adf =
        |x: &[f64]| adf_test(x, AdfOptions { deterministic: det, ..AdfOptions::default() }).map(|r| r.reject_at_5pct);
    let pp = |x: &[f64]| pp_test(x, det).map(|r| r.reject_at_5pct);
    let kpss = |x: &[f64]| kpss_test(x, det).map(|r| r.reject_at_5pct);
    // [adf rw, pp rw, kpss wn, adf ar, pp ar, kpss rw]
    let mut hits = [0u64; 6];
    for run in 0..AC4_RUNS {
        let mut rng = substream(4, run);
        let rw = random_walk(&mut rng, AC4_N);
        let wn: Vec<f64> = (0..AC4_N).map(|_| normal(&mut rng)).collect();
        let ar = ar1(&mut rng, AC4_N, AC4_PHI);
        let outcomes = [adf(&rw), pp(&rw), kpss(&wn), adf(&ar), pp(&ar), kpss(&rw)];
        for (h, o) in hits.iter_mut().zip(outcomes) {
            *h += o.map_err(|e| format!("run {run}: {e}"))? as u64;
        }
    }
    let elapsed = t0.elapsed();
    let f = hits.map(|h| h as f64 / AC4_RUNS as f64);
    let detail = format!(
        "size ADF {:.3} PP {:.3} KPSS {:.3}; power ADF {:.3} PP {:.3} KPSS {:.3}; {elapsed:.2?}",
        f[0], f[1], f[2], f[3], f[4], f[5]
    );
    let in_band = |x: f64| (AC4_SIZE_BAND.0..=AC4_SIZE_BAND.1).contains(&x);
    check(f[..3].iter().all(|x| in_band(*x)), || detail.clone())?;
    check(f[3..].iter().all(|x| *x >= AC4_MIN_POWER), || detail.clone())?;
    check(elapsed < AC4_BUDGET, || detail.clone())?;
    Ok(detail)
}

// AC7 (zero-noise part)

fn ac7_zero_noise() -> Result<String, String> {
    let cfg = SynthConfig { n_securities: 20, n_orders: 0, splits: Vec::new(), ..SynthConfig::default() };
    let market = generate_market(&cfg).map_err(|e| e.to_string())?;
    let (a, b, c) = (100_000.0, 200.0, -2_000.0);
    let days: Vec<SecurityDay> = market
        .adjusted_days()
        .into_iter()
        .map(|d| {
            let volume = a + b * d.trade_count as f64 + c * d.avg_spread;
            SecurityDay::new(d.security_id, d.date, d.close_price, d.avg_spread, volume, d.trade_count).unwrap()
        })
        .collect();
    let fx = market.fx_table().map_err(|e| e.to_string())?;
    let panel = Panel::build(&days, &fx).map_err(|e| e.to_string())?;
    let features = build_features(&panel, &DifferencingPolicy::default(), VOL_WINDOW);
    let windows = tickcost_core::market::default_windows();
    let fit = volume_regression(&features, &windows[0], VolumeVariant::V1, Lag::None, FitOptions::default())
        .map_err(|e| e.to_string())?;
    // Injected coefficients are compared relative to their size; coefficients
    // that should vanish are compared in standardized units, since their raw
    // size depends on the regressor's scale.
    let rows = volume_rows(&features, VolumeVariant::V1, Lag::None).filter(&windows[0]);
    let sd = |v: &[f64]| {
        let m = v.iter().sum::<f64>() / v.len() as f64;
        (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
    };
    let y_sd = sd(&rows.rows.iter().map(|r| r.y).collect::<Vec<_>>());
    let (mut worst_rel, mut worst_std) = (0.0f64, 0.0f64);
    for (name, coef) in fit.names.iter().zip(&fit.coefficients) {
        let truth = match name.as_str() {
            "const" => Some(a),
            "trade_count" => Some(b),
            "spread" => Some(c),
            _ => None,
        };
        match truth {
            Some(t) => {
                let err = (coef - t).abs() / t.abs();
                check(err <= AC7_ZERO_NOISE_REL, || format!("{name}: {coef} vs {t}"))?;
                worst_rel = worst_rel.max(err);
            }
            None => {
                let j = rows.names.iter().position(|n| n == name).ok_or_else(|| format!("{name} not in rows"))?;
                let x_sd = sd(&rows.rows.iter().map(|r| r.x[j]).collect::<Vec<_>>());
                let std = (coef * x_sd / y_sd).abs();
                check(std <= AC7_ZERO_NOISE_REL, || format!("{name}: standardized {std:e}"))?;
                worst_std = worst_std.max(std);
            }
        }
    }
    Ok(format!("zero-noise V1: injected max relative error {worst_rel:e}, others max standardized {worst_std:e}"))
}

// AC8

fn direct_log_vol(x: &[f64], window: usize, t: usize) -> f64 {
    let r: Vec<f64> = (t + 1 - window..=t).map(|j| (x[j] / x[j - 1]).ln()).collect();
    let m = r.iter().sum::<f64>() / r.len() as f64;
    (r.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (r.len() - 1) as f64).sqrt()
}

fn direct_signed_vol(y: &[f64], ma: usize, window: usize, t: usize) -> Option<f64> {
    let avg = |s: usize| y[s + 1 - ma..=s].iter().sum::<f64>() / ma as f64;
    let changes: Vec<f64> = (t + 1 - window..=t)
        .filter(|&s| s >= ma && avg(s - 1).abs() > 1e-9)
        .map(|s| (avg(s) - avg(s - 1)) / avg(s - 1).abs())
        .collect();
    if changes.len() < 2 {
        return None;
    }
    let m = changes.iter().sum::<f64>() / changes.len() as f64;
    Some((changes.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (changes.len() - 1) as f64).sqrt())
}

fn ac8() -> Result<String, String> {
    let mut rng = substream(8, 0);
    let mut worst: f64 = 0.0;
    for case in 0..50 {
        let n = rng.random_range(40..400);
        let window = rng.random_range(2..30);
        let ma = rng.random_range(1..8);
        let mut level: f64 = rng.random_range(1.0..1000.0);
        let x: Vec<f64> = (0..n)
            .map(|_| {
                level *= (0.02 * normal(&mut rng)).exp();
                level
            })
            .collect();
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0) + 0.5 * normal(&mut rng)).collect();
        let log = moving_vol_log(&x, window).map_err(|e| e.to_string())?;
        let signed = moving_vol_signed(&y, ma, window).map_err(|e| e.to_string())?;
        let k: f64 = rng.random_range(0.01..100.0);
        let scaled: Vec<f64> = x.iter().map(|v| v * k).collect();
        let log_scaled = moving_vol_log(&scaled, window).map_err(|e| e.to_string())?;
        for t in 0..n {
            let want = (t >= window).then(|| direct_log_vol(&x, window, t));
            match (log[t], want) {
                (Some(g), Some(w)) => {
                    check((g - w).abs() <= AC8_TOL, || format!("case {case} log t={t}: {g} vs {w}"))?;
                    worst = worst.max((g - w).abs());
                }
                (None, None) => {}
                (g, w) => return Err(format!("case {case} log t={t}: {g:?} vs {w:?}")),
            }
            match (log[t], log_scaled[t]) {
                (Some(g), Some(s)) => {
                    check((g - s).abs() <= AC8_TOL, || format!("case {case} scale t={t}: {g} vs {s}"))?
                }
                (None, None) => {}
                _ => return Err(format!("case {case}: scaling changed definedness at {t}")),
            }
            let want = (t + 1 >= ma + window).then(|| direct_signed_vol(&y, ma, window, t)).flatten();
            match (signed[t], want) {
                (Some(g), Some(w)) => {
                    check((g - w).abs() <= AC8_TOL, || format!("case {case} signed t={t}: {g} vs {w}"))?;
                    worst = worst.max((g - w).abs());
                }
                (None, None) => {}
                (g, w) => return Err(format!("case {case} signed t={t}: {g:?} vs {w:?}")),
            }
        }
    }
    for c in [7.5, -3.0] {
        let flat = vec![c; 120];
        let s = moving_vol_signed(&flat, 5, 20).map_err(|e| e.to_string())?;
        check(s.iter().flatten().all(|v| *v == 0.0), || format!("signed vol of constant {c} not zero"))?;
    }
    let l = moving_vol_log(&[42.0; 120], 20).map_err(|e| e.to_string())?;
    check(l.iter().flatten().all(|v| *v == 0.0), || "log vol of a constant not zero".into())?;
    Ok(format!("50 random series, max abs gap {worst:e}; constants give zeros"))
}

// AC9

fn ac9() -> Result<String, String> {
    let degenerate = MarketProfile {
        security_id: SecurityId::new("1301"),
        lookback_days: 1,
        intervals_per_day: 1,
        volume_dist: vec![1_000_000],
        move_dist: vec![Price::ZERO],
        tick_size: Price::from_yen(1),
        ref_price: Price::from_yen(100),
    };
    let params = SimParams { style: TradingStyle::Neutral, n_paths: 50, seed: 9, ..SimParams::default() };
    let r = estimate_market_impact(100, &degenerate, &params).map_err(|e| e.to_string())?;
    check(r.mean_bps == AC9_DEGENERATE_BPS && r.stdev_bps == 0.0, || format!("degenerate case gave {r:?}"))?;

    let cfg = SynthConfig { n_securities: 5, n_orders: 0, splits: Vec::new(), ..SynthConfig::default() };
    let market = generate_market(&cfg).map_err(|e| e.to_string())?;
    let grid = [0u64, 1_000, 5_000, 10_000, 50_000, 100_000, 500_000, 1_000_000, 5_000_000];
    let params = SimParams { n_paths: 200, seed: 99, ..SimParams::default() };
    let mut checked = 0;
    for sec in &market.securities {
        let profile = build_profile(&sec.adjusted, 20, 10, &TickSchedule::tse_standard()).map_err(|e| e.to_string())?;
        let means: Vec<f64> = grid
            .iter()
            .map(|s| estimate_market_impact(*s, &profile, &params).map(|r| r.mean_bps))
            .collect::<Result<_, _>>()
            .map_err(|e| e.to_string())?;
        check(means[0] == 0.0, || format!("{}: mean_bps(0) = {}", sec.security_id, means[0]))?;
        check(means.windows(2).all(|w| w[0] <= w[1]), || format!("{}: not monotone {means:?}", sec.security_id))?;
        let again = estimate_market_impact(100_000, &profile, &params).map_err(|e| e.to_string())?;
        let first = estimate_market_impact(100_000, &profile, &params).map_err(|e| e.to_string())?;
        check(
            format!("{} {}", first.mean_bps, first.stdev_bps) == format!("{} {}", again.mean_bps, again.stdev_bps),
            || "fixed seed not reproducible".into(),
        )?;
        checked += 1;
    }
    Ok(format!(
        "degenerate case 100 bps exactly; {checked} profiles monotone over {} sizes and reproducible",
        grid.len()
    ))
}

// AC10 and the dataset-level criteria that read its outputs

struct PipelineRun {
    elapsed: Duration,
    deepdive: Duration,
    files: BTreeMap<String, Vec<u8>>,
}

fn run_pipeline(root: &Path) -> Result<PipelineRun, String> {
    let bin = env!("CARGO_BIN_EXE_tickcost");
    let (data, out) = (root.join("data"), root.join("out"));
    let t0 = Instant::now();
    let mut deepdive = Duration::ZERO;
    for (cmd, dir) in [("gen", &data), ("tca", &out), ("birdseye", &out), ("deepdive", &out)] {
        let t = Instant::now();
        let o = Command::new(bin)
            .args([cmd, "--data", data.to_str().unwrap(), "--out", dir.to_str().unwrap()])
            .env("TICKCOST_LOG", "warn")
            .output()
            .map_err(|e| e.to_string())?;
        if !o.status.success() {
            return Err(format!("{cmd} exited with {:?}: {}", o.status.code(), String::from_utf8_lossy(&o.stderr)));
        }
        if cmd == "deepdive" {
            deepdive = t.elapsed();
        }
    }
    let elapsed = t0.elapsed();
    let mut files = BTreeMap::new();
    for (tag, dir) in [("data", &data), ("out", &out)] {
        for e in fs::read_dir(dir).map_err(|e| e.to_string())? {
            let p = e.map_err(|e| e.to_string())?.path();
            files.insert(
                format!("{tag}/{}", p.file_name().unwrap().to_string_lossy()),
                fs::read(&p).map_err(|e| e.to_string())?,
            );
        }
    }
    Ok(PipelineRun { elapsed, deepdive, files })
}

fn table(run: &PipelineRun, name: &str) -> Result<Vec<BTreeMap<String, String>>, String> {
    let bytes = run.files.get(name).ok_or_else(|| format!("{name} missing"))?;
    let mut r = csv::Reader::from_reader(bytes.as_slice());
    let header: Vec<String> = r.headers().map_err(|e| e.to_string())?.iter().map(String::from).collect();
    r.records()
        .map(|rec| {
            rec.map(|rec| header.iter().cloned().zip(rec.iter().map(String::from)).collect()).map_err(|e| e.to_string())
        })
        .collect()
}

fn ac5(run: &PipelineRun) -> Result<String, String> {
    let rows: Vec<_> =
        table(run, "out/birdseye_summary.csv")?.into_iter().filter(|r| r["metric"] == "Spread").collect();
    check(rows.len() == 6, || format!("{} spread rows, expected 6", rows.len()))?;
    for r in &rows {
        check(r["pct_decreased_affected"] == "100", || {
            format!("{} {}: {}% of affected names decreased", r["phase"], r["scheme"], r["pct_decreased_affected"])
        })?;
    }
    Ok("100% of affected names decreased in all 6 phase/scheme pairs".into())
}

fn ac6(run: &PipelineRun) -> Result<String, String> {
    let regs = table(run, "out/regressions.csv")?;
    let coef = |sample: &str, spec: &str, name: &str| -> Result<f64, String> {
        regs.iter()
            .find(|r| r["pipeline"] == "cost" && r["sample"] == sample && r["spec"] == spec && r["regressor"] == name)
            .ok_or_else(|| format!("{spec} {sample} {name} missing"))
            .and_then(|r| r["coef"].parse::<f64>().map_err(|e| e.to_string()))
    };
    let n_orders = table(run, "data/orders.csv")?.len();
    check(n_orders >= 200_000, || format!("only {n_orders} orders"))?;
    let mut diffs = Vec::new();
    for (spec, name) in [("MI_A", "notional_10MM+"), ("MI_B", "notional_10-25MM"), ("MI_B", "notional_25MM+")] {
        let base = coef("S1", spec, name)?;
        for sample in ["S2", "S3", "S5"] {
            let d = coef(sample, spec, name)? - base;
            check((d - AC6_EFFECT_BPS).abs() <= AC6_TOL_BPS, || format!("{spec} {name} {sample} - S1 = {d}"))?;
            diffs.push(d);
        }
    }
    check(run.deepdive < AC6_BUDGET, || format!("deepdive took {:?}", run.deepdive))?;
    let (lo, hi) = diffs.iter().fold((f64::MAX, f64::MIN), |(a, b), d| (a.min(*d), b.max(*d)));
    Ok(format!("{n_orders} orders; top-bucket shifts vs S1 in [{lo:.2}, {hi:.2}] bps; deepdive {:.2?}", run.deepdive))
}

fn ac7(run: &PipelineRun) -> Result<String, String> {
    let regs = table(run, "out/regressions.csv")?;
    let row = |name: &str| {
        regs.iter()
            .find(|r| {
                r["pipeline"] == "volume" && r["sample"] == "SF" && r["spec"] == "V1_lag0" && r["regressor"] == name
            })
            .ok_or_else(|| format!("V1 {name} missing"))
    };
    let parse = |r: &BTreeMap<String, String>, k: &str| r[k].parse::<f64>().map_err(|e| e.to_string());
    let (s, t) = (row("spread")?, row("trade_count")?);
    let (sc, sp, tc, tp) = (parse(s, "coef")?, parse(s, "p_value")?, parse(t, "coef")?, parse(t, "p_value")?);
    check(sc < 0.0 && sp < AC7_MAX_P, || format!("spread coef {sc}, p {sp}"))?;
    check(tc > 0.0 && tp < AC7_MAX_P, || format!("trade_count coef {tc}, p {tp}"))?;
    let zero = ac7_zero_noise()?;
    Ok(format!("spread {sc:.1} (p {sp:e}), trade_count {tc:.3} (p {tp:e}); {zero}"))
}

fn ac10(first: &PipelineRun, second: &PipelineRun) -> Result<String, String> {
    check(first.files.keys().eq(second.files.keys()), || "different file sets".into())?;
    for (name, bytes) in &first.files {
        check(second.files[name] == *bytes, || format!("{name} differs between runs"))?;
    }
    let slowest = first.elapsed.max(second.elapsed);
    check(slowest < AC10_BUDGET, || format!("pipeline took {slowest:?}"))?;
    Ok(format!(
        "{} files byte-identical across runs; {:.2?} and {:.2?}",
        first.files.len(),
        first.elapsed,
        second.elapsed
    ))
}

fn main() {
    let mut report = Report { failed: 0 };
    report.line("AC1", "decomposition identity", ac1());
    report.line("AC2", "market impact oracle", ac2());
    report.line("AC3", "OLS oracle", ac3());
    report.line("AC4", "unit-root calibration", ac4());

    let dirs = (tempfile::tempdir().expect("temp dir"), tempfile::tempdir().expect("temp dir"));
    let runs = run_pipeline(dirs.0.path()).and_then(|a| run_pipeline(dirs.1.path()).map(|b| (a, b)));
    match &runs {
        Ok((first, _)) => {
            report.line("AC5", "bird's-eye spread pattern", ac5(first));
            report.line("AC6", "cost-regression recovery", ac6(first));
            report.line("AC7", "volume-regression signs", ac7(first));
        }
        Err(e) => {
            for (id, name) in [
                ("AC5", "bird's-eye spread pattern"),
                ("AC6", "cost-regression recovery"),
                ("AC7", "volume-regression signs"),
            ] {
                report.line(id, name, Err(format!("pipeline failed: {e}")));
            }
        }
    }
    report.line("AC8", "moving-volatility oracles", ac8());
    report.line("AC9", "MIE properties", ac9());
    report.line(
        "AC10",
        "end-to-end determinism and scale",
        runs.as_ref().map_err(Clone::clone).and_then(|(a, b)| ac10(a, b)),
    );

    println!("{} of 10 criteria passed", 10 - report.failed);
    if report.failed > 0 {
        std::process::exit(1);
    }
}
