//! Augmented Dickey-Fuller, Phillips-Perron and KPSS tests.
//!
//! Dickey-Fuller p-values are read off a table of the τ distribution by
//! linear interpolation, first in `1/n` across sample sizes and then across
//! quantile levels. The tail levels (1% to 10% and 90% to 99%) are Fuller's
//! published values; the interior levels were filled in by simulating the
//! statistic (400k replications per sample size). Statistics beyond the
//! table are clamped to its edge and flagged approximate.

use alloc::vec;
use alloc::vec::Vec;

use super::linalg::Qr;
use super::ols::{ols, Design};
use super::StatsError;
#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Null {
    UnitRoot,
    Stationary,
}

/// Deterministic terms in the test regression.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Deterministic {
    #[default]
    Constant,
    ConstantTrend,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
    pub lags_used: usize,
    pub n_obs: usize,
    pub null: Null,
    pub reject_at_5pct: bool,
    /// The statistic fell outside the table and the p-value was clamped.
    pub approximate: bool,
}

impl TestResult {
    fn new(statistic: f64, (p_value, approximate): (f64, bool), lags_used: usize, n_obs: usize, null: Null) -> Self {
        TestResult { statistic, p_value, lags_used, n_obs, null, reject_at_5pct: p_value < 0.05, approximate }
    }
}

pub const MIN_LEN: usize = 25;

const TAU_LEVELS: [f64; 15] =
    [0.01, 0.025, 0.05, 0.10, 0.20, 0.30, 0.40, 0.50, 0.60, 0.70, 0.80, 0.90, 0.95, 0.975, 0.99];

/// `(1/n, quantiles)` rows; the last row is the limit.
type TauRows = [(f64, [f64; 15]); 6];

#[allow(clippy::approx_constant)] // table quantiles, not pi
const TAU_CONSTANT: TauRows = [
    (
        1.0 / 25.0,
        [-3.75, -3.33, -3.00, -2.63, -2.24, -1.97, -1.74, -1.53, -1.33, -1.10, -0.80, -0.37, 0.00, 0.34, 0.72],
    ),
    (
        1.0 / 50.0,
        [-3.58, -3.22, -2.93, -2.60, -2.23, -1.97, -1.75, -1.55, -1.35, -1.13, -0.84, -0.40, -0.03, 0.29, 0.66],
    ),
    (
        1.0 / 100.0,
        [-3.51, -3.17, -2.89, -2.58, -2.22, -1.97, -1.76, -1.56, -1.35, -1.13, -0.85, -0.42, -0.05, 0.26, 0.63],
    ),
    (
        1.0 / 250.0,
        [-3.46, -3.14, -2.88, -2.57, -2.22, -1.97, -1.76, -1.56, -1.36, -1.14, -0.86, -0.42, -0.06, 0.24, 0.62],
    ),
    (
        1.0 / 500.0,
        [-3.44, -3.13, -2.87, -2.57, -2.22, -1.97, -1.76, -1.57, -1.37, -1.14, -0.86, -0.43, -0.07, 0.24, 0.61],
    ),
    (0.0, [-3.43, -3.12, -2.86, -2.57, -2.22, -1.97, -1.76, -1.57, -1.37, -1.15, -0.86, -0.44, -0.07, 0.23, 0.60]),
];

const TAU_TREND: TauRows = [
    (
        1.0 / 25.0,
        [-4.38, -3.95, -3.60, -3.24, -2.83, -2.56, -2.34, -2.14, -1.94, -1.74, -1.50, -1.14, -0.80, -0.50, -0.15],
    ),
    (
        1.0 / 50.0,
        [-4.15, -3.80, -3.50, -3.18, -2.81, -2.56, -2.35, -2.16, -1.98, -1.78, -1.55, -1.19, -0.87, -0.58, -0.24],
    ),
    (
        1.0 / 100.0,
        [-4.04, -3.73, -3.45, -3.15, -2.81, -2.56, -2.36, -2.17, -1.99, -1.79, -1.57, -1.22, -0.90, -0.62, -0.28],
    ),
    (
        1.0 / 250.0,
        [-3.99, -3.69, -3.43, -3.13, -2.80, -2.56, -2.36, -2.18, -2.00, -1.81, -1.58, -1.23, -0.92, -0.64, -0.31],
    ),
    (
        1.0 / 500.0,
        [-3.98, -3.68, -3.42, -3.13, -2.80, -2.56, -2.36, -2.18, -2.00, -1.81, -1.58, -1.24, -0.93, -0.65, -0.32],
    ),
    (0.0, [-3.96, -3.66, -3.41, -3.12, -2.79, -2.56, -2.36, -2.18, -2.00, -1.81, -1.58, -1.25, -0.94, -0.66, -0.33]),
];

fn tau_table(det: Deterministic) -> &'static TauRows {
    match det {
        Deterministic::Constant => &TAU_CONSTANT,
        Deterministic::ConstantTrend => &TAU_TREND,
    }
}

/// Critical values for sample size `n`, interpolated linearly in `1/n`.
pub fn tau_critical_values(det: Deterministic, n: usize) -> [f64; 15] {
    let rows = tau_table(det);
    let inv = 1.0 / n.max(1) as f64;
    if inv >= rows[0].0 {
        return rows[0].1;
    }
    let i = rows.iter().position(|r| r.0 <= inv).unwrap_or(rows.len() - 1);
    let (hi, lo) = (&rows[i - 1], &rows[i]);
    let w = (inv - lo.0) / (hi.0 - lo.0);
    let mut out = [0.0; 15];
    for (k, o) in out.iter_mut().enumerate() {
        *o = lo.1[k] + w * (hi.1[k] - lo.1[k]);
    }
    out
}

/// Left-tail probability of a Dickey-Fuller τ statistic.
pub fn tau_p_value(det: Deterministic, stat: f64, n: usize) -> (f64, bool) {
    interpolate_p(&tau_critical_values(det, n), &TAU_LEVELS, stat)
}

/// Piecewise-linear map from ascending `cvs` to `levels`, clamped at the ends.
fn interpolate_p(cvs: &[f64], levels: &[f64], stat: f64) -> (f64, bool) {
    let last = cvs.len() - 1;
    if stat < cvs[0] {
        return (levels[0], true);
    }
    if stat > cvs[last] {
        return (levels[last], true);
    }
    for k in 0..last {
        if stat <= cvs[k + 1] {
            let span = cvs[k + 1] - cvs[k];
            let w = if span > 0.0 { (stat - cvs[k]) / span } else { 0.0 };
            return (levels[k] + w * (levels[k + 1] - levels[k]), false);
        }
    }
    (levels[last], false)
}

fn check_series(x: &[f64]) -> Result<(), StatsError> {
    if x.len() < MIN_LEN {
        return Err(StatsError::TooShort { needed: MIN_LEN, got: x.len() });
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    Ok(())
}

fn check_varies(x: &[f64]) -> Result<(), StatsError> {
    if x.iter().all(|v| *v == x[0]) {
        return Err(StatsError::ZeroVariance);
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AdfOptions {
    /// Upper bound on augmentation lags; default `floor(12 (n/100)^(1/4))`.
    pub max_lags: Option<usize>,
    pub deterministic: Deterministic,
}

/// Critical |t| for keeping the last augmentation lag.
pub const LAG_PRUNE_T: f64 = 1.645;

pub fn schwert_max_lag(n: usize) -> usize {
    (12.0 * (n as f64 / 100.0).powf(0.25)).floor() as usize
}

/// Rows `start..dx.len()` of `dx_t` on deterministic terms, `x_{t}` (the level
/// before the change) and `lags` lagged changes.
fn adf_design(x: &[f64], dx: &[f64], lags: usize, start: usize, det: Deterministic) -> (Vec<f64>, Vec<Vec<f64>>) {
    let rows = start..dx.len();
    let y: Vec<f64> = dx[rows.clone()].to_vec();
    let mut cols = vec![vec![1.0; y.len()]];
    if det == Deterministic::ConstantTrend {
        cols.push(rows.clone().map(|t| t as f64).collect());
    }
    cols.push(rows.clone().map(|t| x[t]).collect());
    for j in 1..=lags {
        cols.push(rows.clone().map(|t| dx[t - j]).collect());
    }
    (y, cols)
}

pub fn adf_test(x: &[f64], opts: AdfOptions) -> Result<TestResult, StatsError> {
    check_series(x)?;
    check_varies(x)?;
    let dx: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let det_cols = match opts.deterministic {
        Deterministic::Constant => 1,
        Deterministic::ConstantTrend => 2,
    };
    // Leave at least ten residual degrees of freedom on the common sample.
    let cap = (dx.len().saturating_sub(det_cols + 11)) / 2;
    let max_lag = opts.max_lags.unwrap_or_else(|| schwert_max_lag(x.len())).min(cap);

    // General-to-specific on a common sample: one factorization serves
    // every nested lag order.
    let mut lags = 0;
    if max_lag > 0 {
        let (y, cols) = adf_design(x, &dx, max_lag, max_lag, opts.deterministic);
        let nobs = y.len();
        let qr = Qr::new(&cols);
        let mut qty = y;
        qr.apply_qt(&mut qty);
        // tail[m] = sum of squares of qty[m..].
        let mut tail = vec![0.0; nobs + 1];
        for i in (0..nobs).rev() {
            tail[i] = tail[i + 1] + qty[i] * qty[i];
        }
        let base = det_cols + 1;
        for k in (1..=max_lag).rev() {
            let j = base + k - 1;
            let rjj = qr.rdiag()[j];
            if rjj.abs() < super::linalg::RANK_TOL || qr.rdiag()[..j].iter().any(|d| d.abs() < super::linalg::RANK_TOL)
            {
                continue;
            }
            let sigma = (tail[j + 1] / (nobs - (j + 1)) as f64).sqrt();
            if sigma == 0.0 {
                lags = k;
                break;
            }
            let t = rjj.signum() * qty[j] / sigma;
            if t.abs() >= LAG_PRUNE_T {
                lags = k;
                break;
            }
        }
    }

    let (y, cols) = adf_design(x, &dx, lags, lags, opts.deterministic);
    let mut design = Design::new();
    for (i, c) in cols.into_iter().enumerate().skip(1) {
        let name = if i == det_cols {
            "level"
        } else if i < det_cols {
            "trend"
        } else {
            "lag"
        };
        design.push(name, c);
    }
    let fit = ols(&y, &design, true)?;
    let level = det_cols;
    let stat = fit.t_stats[level];
    Ok(TestResult::new(stat, tau_p_value(opts.deterministic, stat, fit.n_obs), lags, fit.n_obs, Null::UnitRoot))
}

/// Bartlett-weighted long-run variance of `u` with `lags` autocovariances.
pub fn newey_west(u: &[f64], lags: usize) -> f64 {
    let n = u.len() as f64;
    let gamma = |j: usize| u[j..].iter().zip(u).map(|(a, b)| a * b).sum::<f64>() / n;
    let mut lr = gamma(0);
    for j in 1..=lags.min(u.len().saturating_sub(1)) {
        lr += 2.0 * (1.0 - j as f64 / (lags as f64 + 1.0)) * gamma(j);
    }
    lr
}

pub fn pp_bandwidth(n: usize) -> usize {
    (4.0 * (n as f64 / 100.0).powf(2.0 / 9.0)).floor() as usize
}

/// Phillips-Perron Z_t with a constant (and optional trend).
pub fn pp_test(x: &[f64], det: Deterministic) -> Result<TestResult, StatsError> {
    check_series(x)?;
    check_varies(x)?;
    let dx: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let (y, cols) = adf_design(x, &dx, 0, 0, det);
    let mut design = Design::new();
    let level = cols.len() - 1;
    for (i, c) in cols.into_iter().enumerate().skip(1) {
        design.push(if i == level { "level" } else { "trend" }, c);
    }
    let fit = ols(&y, &design, true)?;
    let n = fit.n_obs as f64;
    let k = fit.coefficients.len() as f64;
    let lags = pp_bandwidth(fit.n_obs);
    let gamma0 = fit.ssr / n;
    let lambda2 = newey_west(&fit.residuals, lags);
    if !(lambda2 > 0.0) {
        return Err(StatsError::ZeroVariance);
    }
    let s = (fit.ssr / (n - k)).sqrt();
    let se = fit.std_errors[level];
    let t = fit.t_stats[level];
    let stat = (gamma0 / lambda2).sqrt() * t - 0.5 * (lambda2 - gamma0) / lambda2.sqrt() * (n * se / s);
    Ok(TestResult::new(stat, tau_p_value(det, stat, fit.n_obs), lags, fit.n_obs, Null::UnitRoot))
}

pub fn kpss_bandwidth(n: usize) -> usize {
    (4.0 * (n as f64 / 100.0).powf(0.25)).floor() as usize
}

const KPSS_LEVELS: [f64; 4] = [0.10, 0.05, 0.025, 0.01];
const KPSS_LEVEL_CV: [f64; 4] = [0.347, 0.463, 0.574, 0.739];
const KPSS_TREND_CV: [f64; 4] = [0.119, 0.146, 0.176, 0.216];

/// KPSS with the null of level (or trend) stationarity.
///
/// A constant series has statistic 0 and the largest tabulated p-value.
pub fn kpss_test(x: &[f64], det: Deterministic) -> Result<TestResult, StatsError> {
    check_series(x)?;
    let n = x.len();
    let resid: Vec<f64> = match det {
        Deterministic::Constant => {
            let mean = x.iter().map(|v| v - x[0]).sum::<f64>() / n as f64;
            x.iter().map(|v| (v - x[0]) - mean).collect()
        }
        Deterministic::ConstantTrend => {
            let t: Vec<f64> = (0..n).map(|i| i as f64).collect();
            ols(x, &Design::new().with("trend", t), true)?.residuals
        }
    };
    let lags = kpss_bandwidth(n);
    let mut partial = 0.0;
    let mut eta = 0.0;
    for r in &resid {
        partial += r;
        eta += partial * partial;
    }
    eta /= (n * n) as f64;
    let lambda2 = newey_west(&resid, lags);
    let stat = if eta == 0.0 || !(lambda2 > 0.0) { 0.0 } else { eta / lambda2 };
    let cvs = match det {
        Deterministic::Constant => KPSS_LEVEL_CV,
        Deterministic::ConstantTrend => KPSS_TREND_CV,
    };
    Ok(TestResult::new(stat, interpolate_p(&cvs, &KPSS_LEVELS, stat), lags, n, Null::Stationary))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn random_walk(seed: u64, n: usize) -> Vec<f64> {
        let mut rng = substream(seed, 0);
        let mut level = 0.0;
        (0..n)
            .map(|_| {
                level += rng.sample::<f64, _>(StandardNormal);
                level
            })
            .collect()
    }

    fn ar1(seed: u64, n: usize, phi: f64) -> Vec<f64> {
        let mut rng = substream(seed, 1);
        let mut v = 0.0;
        (0..n)
            .map(|_| {
                v = phi * v + rng.sample::<f64, _>(StandardNormal);
                v
            })
            .collect()
    }

    #[test]
    fn tables_are_monotone() {
        for rows in [&TAU_CONSTANT, &TAU_TREND] {
            for r in rows.iter() {
                assert!(r.1.windows(2).all(|w| w[0] < w[1]));
            }
        }
    }

    #[test]
    fn p_value_hits_table_levels() {
        let (p, approx) = tau_p_value(Deterministic::Constant, -2.86, 1_000_000_000);
        assert!((p - 0.05).abs() < 1e-6 && !approx);
        let (p, approx) = tau_p_value(Deterministic::Constant, -9.0, 500);
        assert_eq!((p, approx), (0.01, true));
        let (p, approx) = tau_p_value(Deterministic::Constant, 3.0, 500);
        assert_eq!((p, approx), (0.99, true));
        // Between the 100 and 250 rows.
        let cv = tau_critical_values(Deterministic::Constant, 150);
        assert!(cv[2] < -2.88 && cv[2] > -2.89);
    }

    #[test]
    fn constant_series() {
        assert_eq!(adf_test(&[3.0; 100], AdfOptions::default()), Err(StatsError::ZeroVariance));
        assert_eq!(pp_test(&[3.0; 100], Deterministic::Constant), Err(StatsError::ZeroVariance));
        let k = kpss_test(&[3.0; 100], Deterministic::Constant).unwrap();
        assert_eq!(k.statistic, 0.0);
        assert_eq!(k.p_value, 0.10);
        assert!(!k.reject_at_5pct);
        assert!(adf_test(&[1.0; 10], AdfOptions::default()).is_err());
    }

    #[test]
    fn verdicts_on_clear_cases() {
        let rw = random_walk(3, 500);
        let ar = ar1(3, 500, 0.5);
        assert!(adf_test(&ar, AdfOptions::default()).unwrap().reject_at_5pct);
        assert!(pp_test(&ar, Deterministic::Constant).unwrap().reject_at_5pct);
        assert!(kpss_test(&rw, Deterministic::Constant).unwrap().reject_at_5pct);
        let dx: Vec<f64> = rw.windows(2).map(|w| w[1] - w[0]).collect();
        assert!(adf_test(&dx, AdfOptions::default()).unwrap().reject_at_5pct);
        let trend =
            adf_test(&ar, AdfOptions { max_lags: Some(4), deterministic: Deterministic::ConstantTrend }).unwrap();
        assert!(trend.reject_at_5pct && trend.lags_used <= 4);
    }

    #[test]
    fn adf_matches_direct_fit_at_chosen_lag() {
        let rw = random_walk(11, 300);
        let r = adf_test(&rw, AdfOptions::default()).unwrap();
        let dx: Vec<f64> = rw.windows(2).map(|w| w[1] - w[0]).collect();
        let p = r.lags_used;
        let rows = p..dx.len();
        let mut d = Design::new().with("level", rows.clone().map(|t| rw[t]).collect());
        for j in 1..=p {
            d.push("lag", rows.clone().map(|t| dx[t - j]).collect());
        }
        let fit = ols(&dx[p..], &d, true).unwrap();
        assert!((fit.t_stats[1] - r.statistic).abs() < 1e-10);
        assert_eq!(r.n_obs, dx.len() - p);
    }

    #[test]
    fn newey_west_white_noise_close_to_variance() {
        let u: Vec<f64> = ar1(5, 20_000, 0.0);
        let lr = newey_west(&u, 10);
        assert!((lr - 1.0).abs() < 0.05);
    }
}
