//! Ordinary least squares with classical standard errors.

use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use super::dist::student_t_two_sided;
use super::linalg::Qr;
use super::StatsError;
#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;

/// Named regressor columns of equal length.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Design {
    pub names: Vec<String>,
    pub columns: Vec<Vec<f64>>,
}

impl Design {
    pub fn new() -> Design {
        Design::default()
    }

    pub fn push(&mut self, name: impl Into<String>, values: Vec<f64>) -> &mut Self {
        self.names.push(name.into());
        self.columns.push(values);
        self
    }

    pub fn with(mut self, name: impl Into<String>, values: Vec<f64>) -> Self {
        self.push(name, values);
        self
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegressionResult {
    /// Regressor names; `"const"` first when an intercept was fitted.
    pub names: Vec<String>,
    pub coefficients: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub t_stats: Vec<f64>,
    pub p_values: Vec<f64>,
    pub r_squared: f64,
    pub adj_r_squared: f64,
    pub n_obs: usize,
    pub ssr: f64,
    pub residuals: Vec<f64>,
}

impl RegressionResult {
    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn coef(&self, name: &str) -> Option<f64> {
        self.index_of(name).map(|i| self.coefficients[i])
    }

    pub fn df_resid(&self) -> usize {
        self.n_obs - self.coefficients.len()
    }
}

pub const INTERCEPT: &str = "const";

/// Fits `y = X b + e`.
///
/// R² is centred when an intercept is present and uncentred otherwise; a
/// response with zero total variation gets R² = 0.
pub fn ols(y: &[f64], x: &Design, intercept: bool) -> Result<RegressionResult, StatsError> {
    let n = y.len();
    let mut names = Vec::with_capacity(x.len() + 1);
    let mut cols = Vec::with_capacity(x.len() + 1);
    if intercept {
        names.push(INTERCEPT.to_string());
        cols.push(vec![1.0; n]);
    }
    for (name, c) in x.names.iter().zip(&x.columns) {
        if c.len() != n {
            return Err(StatsError::Shape(alloc::format!("column {name} has {} rows, response has {n}", c.len())));
        }
        names.push(name.clone());
        cols.push(c.clone());
    }
    let p = cols.len();
    if p == 0 {
        return Err(StatsError::Shape("no regressors".into()));
    }
    if n <= p {
        return Err(StatsError::TooShort { needed: p + 1, got: n });
    }
    if y.iter().chain(cols.iter().flatten()).any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }

    let qr = Qr::new(&cols);
    if let Some(j) = qr.first_dependent() {
        return Err(StatsError::Collinear { column: names[j].clone(), preceding: names[..j].to_vec() });
    }
    let mut qty = y.to_vec();
    qr.apply_qt(&mut qty);
    let scaled = qr.solve_leading(&qty, p);
    let coefficients: Vec<f64> = scaled.iter().zip(&qr.scale).map(|(b, s)| b / s).collect();

    let mut residuals = y.to_vec();
    for (c, b) in cols.iter().zip(&coefficients) {
        residuals.iter_mut().zip(c).for_each(|(r, v)| *r -= b * v);
    }
    let ssr: f64 = residuals.iter().map(|r| r * r).sum();
    let df = (n - p) as f64;
    let sigma2 = ssr / df;
    let gram = qr.inv_gram_diag(p);
    let std_errors: Vec<f64> = gram.iter().zip(&qr.scale).map(|(g, s)| (sigma2 * g).sqrt() / s).collect();
    let (t_stats, p_values): (Vec<f64>, Vec<f64>) = coefficients
        .iter()
        .zip(&std_errors)
        .map(|(&b, &se)| {
            if se > 0.0 {
                let t = b / se;
                (t, student_t_two_sided(t, df))
            } else if b == 0.0 {
                (0.0, 1.0)
            } else {
                (b.signum() * f64::INFINITY, 0.0)
            }
        })
        .unzip();

    let (sst, sst_df) = if intercept {
        let mean = y.iter().sum::<f64>() / n as f64;
        (y.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>(), (n - 1) as f64)
    } else {
        (y.iter().map(|v| v * v).sum::<f64>(), n as f64)
    };
    let (r_squared, adj_r_squared) =
        if sst > 0.0 { (1.0 - ssr / sst, 1.0 - (ssr / df) / (sst / sst_df)) } else { (0.0, 0.0) };

    Ok(RegressionResult {
        names,
        coefficients,
        std_errors,
        t_stats,
        p_values,
        r_squared,
        adj_r_squared,
        n_obs: n,
        ssr,
        residuals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;
    use proptest::prelude::*;
    use rand::Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn exact_line() {
        let y = [1.0, 2.0, 3.0];
        let r = ols(&y, &Design::new().with("x", vec![1.0, 2.0, 3.0]), true).unwrap();
        assert!((r.coefficients[1] - 1.0).abs() < 1e-12);
        assert!(r.coefficients[0].abs() < 1e-12);
        assert!((r.r_squared - 1.0).abs() < 1e-12);
        assert_eq!(r.names, ["const", "x"]);
    }

    #[test]
    fn constant_only_gives_mean() {
        let mut rng = substream(1, 0);
        let y: Vec<f64> = (0..50).map(|_| rng.random::<f64>()).collect();
        let mean = y.iter().sum::<f64>() / 50.0;
        let r = ols(&y, &Design::new().with("one", vec![1.0; 50]), false).unwrap();
        assert!((r.coefficients[0] - mean).abs() < 1e-13);
    }

    #[test]
    fn errors() {
        let y = [1.0, 2.0, 3.0, 4.0];
        let x = Design::new().with("a", vec![1.0, 2.0, 3.0, 5.0]).with("b", vec![2.0, 4.0, 6.0, 10.0]);
        match ols(&y, &x, true) {
            Err(StatsError::Collinear { column, .. }) => assert_eq!(column, "b"),
            other => panic!("{other:?}"),
        }
        let short = Design::new().with("a", vec![1.0, 2.0]);
        assert!(matches!(ols(&[1.0, 2.0], &short, true), Err(StatsError::TooShort { .. })));
        let ragged = Design::new().with("a", vec![1.0]);
        assert!(matches!(ols(&y, &ragged, true), Err(StatsError::Shape(_))));
    }

    #[test]
    fn perfect_fit_has_infinite_t() {
        let y = [3.0, 5.0, 7.0, 9.0];
        let r = ols(&y, &Design::new().with("x", vec![1.0, 2.0, 3.0, 4.0]), true).unwrap();
        assert!(r.std_errors[1] < 1e-12);
        assert!(r.p_values[1] < 1e-12);
    }

    proptest! {
        #[test]
        fn residuals_orthogonal(seed in any::<u64>(), n in 12usize..120, k in 1usize..6) {
            let mut rng = substream(seed, 0);
            let mut x = Design::new();
            for j in 0..k {
                x.push(alloc::format!("x{j}"), (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect());
            }
            let y: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal) * 3.0 + 1.0).collect();
            let r = ols(&y, &x, true).unwrap();
            let ynorm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
            let ones = vec![1.0; n];
            for c in core::iter::once(&ones).chain(&x.columns) {
                let dot: f64 = c.iter().zip(&r.residuals).map(|(a, b)| a * b).sum();
                prop_assert!(dot.abs() < 1e-8 * ynorm);
            }
            prop_assert!(r.adj_r_squared <= 1.0);
        }
    }
}
