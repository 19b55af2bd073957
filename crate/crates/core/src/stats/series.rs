//! Differencing, linear trend fits and moving volatilities.

use alloc::vec;
use alloc::vec::Vec;

use super::dist::student_t_two_sided;
use super::StatsError;
#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;

pub fn first_difference(x: &[f64]) -> Result<Vec<f64>, StatsError> {
    if x.len() < 2 {
        return Err(StatsError::TooShort { needed: 2, got: x.len() });
    }
    Ok(x.windows(2).map(|w| w[1] - w[0]).collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrendFit {
    pub intercept: f64,
    pub slope: f64,
    pub slope_std_err: f64,
    pub slope_p_value: f64,
    pub increasing: bool,
}

/// Least-squares line through `(t, x_t)`, `t = 0, 1, ..`.
///
/// Values are centred on `x_0` before the cross-product, so a constant
/// series gets a slope of exactly zero.
pub fn time_trend(x: &[f64]) -> Result<TrendFit, StatsError> {
    let n = x.len();
    if n < 3 {
        return Err(StatsError::TooShort { needed: 3, got: n });
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let tbar = (n - 1) as f64 / 2.0;
    let x0 = x[0];
    let stt: f64 = (0..n).map(|t| (t as f64 - tbar).powi(2)).sum();
    let stx: f64 = x.iter().enumerate().map(|(t, v)| (t as f64 - tbar) * (v - x0)).sum();
    let slope = stx / stt;
    let mean_dev = x.iter().map(|v| v - x0).sum::<f64>() / n as f64;
    let intercept = x0 + mean_dev - slope * tbar;
    let ssr: f64 = x
        .iter()
        .enumerate()
        .map(|(t, v)| {
            let r = (v - x0) - (mean_dev + slope * (t as f64 - tbar));
            r * r
        })
        .sum();
    let df = (n - 2) as f64;
    let se = (ssr / df / stt).sqrt();
    let p = if se > 0.0 {
        student_t_two_sided(slope / se, df)
    } else if slope == 0.0 {
        1.0
    } else {
        0.0
    };
    Ok(TrendFit { intercept, slope, slope_std_err: se, slope_p_value: p, increasing: slope > 0.0 })
}

/// Sample standard deviation (n - 1 denominator), two-pass.
pub fn sample_stdev(v: &[f64]) -> f64 {
    let n = v.len();
    if n < 2 {
        return 0.0;
    }
    let mean = v.iter().sum::<f64>() / n as f64;
    let ss: f64 = v.iter().map(|x| (x - mean) * (x - mean)).sum();
    (ss / (n - 1) as f64).sqrt()
}

/// Trailing standard deviation of log returns.
///
/// Position `t` (for `t >= window`) covers the returns ending at
/// `x[t-window+1] .. x[t]`; earlier positions are `None`. The result has the
/// same length as the input, with `n - window` defined values.
pub fn moving_vol_log(x: &[f64], window: usize) -> Result<Vec<Option<f64>>, StatsError> {
    if window < 2 {
        return Err(StatsError::BadWindow(window));
    }
    if x.len() < window + 1 {
        return Err(StatsError::TooShort { needed: window + 1, got: x.len() });
    }
    if let Some(i) = x.iter().position(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(StatsError::NonPositive { index: i });
    }
    let returns: Vec<f64> = x.windows(2).map(|w| (w[1] / w[0]).ln()).collect();
    let mut out = vec![None; x.len()];
    for t in window..x.len() {
        out[t] = Some(sample_stdev(&returns[t - window..t]));
    }
    Ok(out)
}

/// Volatility of a series that may change sign or touch zero.
///
/// The series is smoothed with a trailing mean of `ma_window`, turned into
/// relative changes `(m_t - m_{t-1}) / |m_{t-1}|`, and the standard
/// deviation is taken over the trailing `vol_window` positions. Positions
/// where `|m_{t-1}| <= 1e-9` are skipped inside the window.
pub fn moving_vol_signed(y: &[f64], ma_window: usize, vol_window: usize) -> Result<Vec<Option<f64>>, StatsError> {
    const EPS: f64 = 1e-9;
    if ma_window == 0 {
        return Err(StatsError::BadWindow(ma_window));
    }
    if vol_window < 2 {
        return Err(StatsError::BadWindow(vol_window));
    }
    let n = y.len();
    let needed = ma_window + vol_window + 1;
    if n < needed {
        return Err(StatsError::TooShort { needed, got: n });
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let mut ma = vec![f64::NAN; n];
    for t in ma_window - 1..n {
        ma[t] = y[t + 1 - ma_window..=t].iter().sum::<f64>() / ma_window as f64;
    }
    let mut pct: Vec<Option<f64>> = vec![None; n];
    for t in ma_window..n {
        let prev = ma[t - 1];
        if prev.abs() > EPS {
            pct[t] = Some((ma[t] - prev) / prev.abs());
        }
    }
    let mut out = vec![None; n];
    let mut buf = Vec::with_capacity(vol_window);
    for t in ma_window + vol_window - 1..n {
        buf.clear();
        buf.extend(pct[t + 1 - vol_window..=t].iter().flatten());
        if buf.len() >= 2 {
            out[t] = Some(sample_stdev(&buf));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;
    use proptest::prelude::*;
    use rand::Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn differences() {
        assert_eq!(first_difference(&[1.0, 3.0, 6.0]).unwrap(), vec![2.0, 3.0]);
        assert_eq!(first_difference(&[4.0; 5]).unwrap(), vec![0.0; 4]);
        assert!(first_difference(&[1.0]).is_err());
    }

    #[test]
    fn exact_trend() {
        let x: Vec<f64> = (0..50).map(|t| 1.0 + 0.01 * t as f64).collect();
        let f = time_trend(&x).unwrap();
        assert!((f.slope - 0.01).abs() < 1e-12);
        assert!((f.intercept - 1.0).abs() < 1e-12);
        assert!(f.slope_p_value < 1e-10);
        assert!(f.increasing);

        let flat = time_trend(&[0.1; 40]).unwrap();
        assert_eq!(flat.slope, 0.0);
        assert!(!flat.increasing);
        assert_eq!(flat.slope_p_value, 1.0);
    }

    #[test]
    fn noisy_trend_recovery() {
        let mut rng = substream(42, 0);
        let x: Vec<f64> =
            (0..300).map(|t| 1.0 + 0.01 * t as f64 + 0.05 * rng.sample::<f64, _>(StandardNormal)).collect();
        let f = time_trend(&x).unwrap();
        assert!((f.slope - 0.01).abs() < 0.002);
    }

    #[test]
    fn log_vol_alternating_closed_form() {
        let w = 90;
        let x: Vec<f64> = (0..200).map(|i| if i % 2 == 0 { 100.0 } else { 101.0 }).collect();
        let v = moving_vol_log(&x, w).unwrap();
        assert_eq!(v.len(), 200);
        assert_eq!(v.iter().flatten().count(), 200 - w);
        assert!(v[..w].iter().all(Option::is_none));
        // Returns alternate +-a with a = ln(1.01); an even window has mean 0.
        let a = 1.01f64.ln();
        let expected = a * (w as f64 / (w as f64 - 1.0)).sqrt();
        for s in v.iter().flatten() {
            assert!((s - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn log_vol_errors_and_constants() {
        assert!(matches!(moving_vol_log(&[1.0, -1.0, 2.0, 3.0], 2), Err(StatsError::NonPositive { index: 1 })));
        assert!(moving_vol_log(&[1.0; 5], 5).is_err());
        assert!(moving_vol_log(&[7.5; 100], 90).unwrap().iter().flatten().all(|v| *v == 0.0));
    }

    #[test]
    fn signed_vol_handles_sign_flips_and_zeros() {
        let y: Vec<f64> = (0..150).map(|i| if i < 60 { -3.0 + 0.1 * i as f64 } else { (i as f64).sin() }).collect();
        let v = moving_vol_signed(&y, 5, 90).unwrap();
        assert!(v.iter().flatten().all(|x| x.is_finite()));
        assert!(v.iter().flatten().count() > 0);
        let z = moving_vol_signed(&[0.0; 120], 5, 90).unwrap();
        assert!(z.iter().all(Option::is_none));
        let c = moving_vol_signed(&[-2.0; 120], 5, 90).unwrap();
        assert!(c.iter().flatten().all(|v| *v == 0.0));
    }

    proptest! {
        #[test]
        fn log_vol_scale_invariant(seed in any::<u64>(), k in 0.01f64..1000.0) {
            let mut rng = substream(seed, 0);
            let mut p = 100.0;
            let x: Vec<f64> = (0..150).map(|_| { p *= (0.02 * rng.sample::<f64, _>(StandardNormal)).exp(); p }).collect();
            let scaled: Vec<f64> = x.iter().map(|v| v * k).collect();
            let a = moving_vol_log(&x, 90).unwrap();
            let b = moving_vol_log(&scaled, 90).unwrap();
            for (u, v) in a.iter().zip(&b) {
                match (u, v) {
                    (Some(u), Some(v)) => prop_assert!((u - v).abs() < 1e-9),
                    (None, None) => {}
                    _ => prop_assert!(false),
                }
            }
        }

        #[test]
        fn trend_sign_affine_invariant(seed in any::<u64>(), a in -100.0f64..100.0, b in 0.01f64..100.0) {
            let mut rng = substream(seed, 1);
            let x: Vec<f64> = (0..60).map(|t| 0.05 * t as f64 + rng.sample::<f64, _>(StandardNormal)).collect();
            let y: Vec<f64> = x.iter().map(|v| a + b * v).collect();
            let f = time_trend(&x).unwrap();
            let g = time_trend(&y).unwrap();
            prop_assert_eq!(f.increasing, g.increasing);
        }
    }
}
