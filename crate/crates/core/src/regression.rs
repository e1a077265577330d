//! Linear ridge regression and the two performance measures (RMSE, Pearson CC).

use crate::error::{Error, Result};
use crate::linalg::{dot, spd_solve, Matrix};

/// Ridge parameter used by every learner unless configured otherwise.
pub const DEFAULT_SIGMA: f64 = 0.01;

/// How the intercept enters the fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Intercept {
    /// Constant-1 column appended and penalised together with the weights.
    #[default]
    Penalized,
    /// No intercept; bias is fixed at zero.
    None,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RidgeModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub sigma: f64,
}

impl RidgeModel {
    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn predict_one(&self, x: &[f64]) -> f64 {
        dot(&self.weights, x) + self.bias
    }

    pub fn predict(&self, x: &Matrix) -> Result<Vec<f64>> {
        if x.cols() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: x.cols() });
        }
        Ok(x.row_iter().map(|r| self.predict_one(r)).collect())
    }
}

/// Fits ridge regression with a penalised intercept.
pub fn ridge_fit(x: &Matrix, y: &[f64], sigma: f64) -> Result<RidgeModel> {
    ridge_fit_with(x, y, sigma, Intercept::Penalized)
}

/// Minimises `‖A·w − y‖² + σ‖w‖²` by solving `(AᵀA + σI)·w = Aᵀy`, where `A`
/// is `X` optionally augmented with a constant column.
pub fn ridge_fit_with(x: &Matrix, y: &[f64], sigma: f64, intercept: Intercept) -> Result<RidgeModel> {
    let (n, d) = (x.rows(), x.cols());
    if n == 0 || d == 0 {
        return Err(Error::invalid("ridge needs at least one sample and one feature"));
    }
    if y.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: y.len() });
    }
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::invalid(format!("ridge parameter {sigma} must be finite and >= 0")));
    }
    if x.as_slice().iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("ridge input".into()));
    }

    let p = match intercept {
        Intercept::Penalized => d + 1,
        Intercept::None => d,
    };
    let mut lhs = Matrix::zeros(p, p);
    let mut rhs = vec![0.0; p];
    let mut a = vec![1.0; p];
    for (row, &yi) in x.row_iter().zip(y) {
        a[..d].copy_from_slice(row);
        for i in 0..p {
            let ai = a[i];
            rhs[i] += ai * yi;
            for j in i..p {
                lhs[(i, j)] += ai * a[j];
            }
        }
    }
    for i in 0..p {
        lhs[(i, i)] += sigma;
        for j in 0..i {
            lhs[(i, j)] = lhs[(j, i)];
        }
    }
    let mut w = spd_solve(&lhs, &rhs)?;
    let bias = if intercept == Intercept::Penalized { w.pop().unwrap_or(0.0) } else { 0.0 };
    Ok(RidgeModel { weights: w, bias, sigma })
}

pub fn rmse(y: &[f64], yhat: &[f64]) -> Result<f64> {
    if y.len() != yhat.len() {
        return Err(Error::DimensionMismatch { expected: y.len(), got: yhat.len() });
    }
    if y.is_empty() {
        return Err(Error::invalid("rmse of empty vectors"));
    }
    let mse = y.iter().zip(yhat).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / y.len() as f64;
    Ok(mse.sqrt())
}

/// Pearson correlation. `degenerate` is set when either side is constant, in
/// which case `value` is 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Correlation {
    pub value: f64,
    pub degenerate: bool,
}

pub fn pearson_cc(y: &[f64], yhat: &[f64]) -> Result<Correlation> {
    if y.len() != yhat.len() {
        return Err(Error::DimensionMismatch { expected: y.len(), got: yhat.len() });
    }
    if y.len() < 2 {
        return Err(Error::invalid("correlation needs at least two points"));
    }
    let n = y.len() as f64;
    let my = y.iter().sum::<f64>() / n;
    let mh = yhat.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in y.iter().zip(yhat) {
        let (da, db) = (a - my, b - mh);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    let flat = |ss: f64, v: &[f64]| {
        let scale = v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        ss <= (f64::EPSILON * scale).powi(2) * n
    };
    if flat(sxx, y) || flat(syy, yhat) {
        return Ok(Correlation { value: 0.0, degenerate: true });
    }
    Ok(Correlation { value: (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0), degenerate: false })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_design_without_intercept() {
        let y = [0.3, -1.2, 2.5, 4.0];
        let m = ridge_fit_with(&Matrix::identity(4), &y, 0.01, Intercept::None).unwrap();
        for (w, t) in m.weights.iter().zip(y) {
            assert!((w - t / 1.01).abs() < 1e-14);
        }
        assert_eq!(m.bias, 0.0);
    }

    #[test]
    fn constant_target_is_absorbed_by_bias() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x = Matrix::from_vec(40, 3, (0..120).map(|_| rng.random::<f64>()).collect()).unwrap();
        let y = vec![0.7; 40];
        let m = ridge_fit(&x, &y, 1e-6).unwrap();
        assert!(rmse(&y, &m.predict(&x).unwrap()).unwrap() < 1e-3);
    }

    #[test]
    fn objective_gradient_vanishes() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..50 {
            let (n, d) = (rng.random_range(2..40), rng.random_range(1..12));
            let x = Matrix::from_vec(n, d, (0..n * d).map(|_| rng.random_range(-2.0..2.0)).collect()).unwrap();
            let y: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let m = ridge_fit(&x, &y, 0.01).unwrap();
            // ∇ = 2·Aᵀ(Aw − y) + 2σw over the augmented vector
            let resid: Vec<f64> = (0..n).map(|i| m.predict_one(x.row(i)) - y[i]).collect();
            let mut g: Vec<f64> = (0..d)
                .map(|j| 2.0 * (0..n).map(|i| x[(i, j)] * resid[i]).sum::<f64>() + 2.0 * 0.01 * m.weights[j])
                .collect();
            g.push(2.0 * resid.iter().sum::<f64>() + 2.0 * 0.01 * m.bias);
            assert!(g.iter().all(|v| v.abs() < 1e-8), "{g:?}");
        }
    }

    #[test]
    fn predict_basics() {
        let m = RidgeModel { weights: vec![0.0, 0.0], bias: 0.25, sigma: 0.01 };
        assert_eq!(m.predict(&Matrix::zeros(3, 2)).unwrap(), vec![0.25; 3]);
        let m = RidgeModel { weights: vec![2.0], bias: 1.0, sigma: 0.01 };
        assert_eq!(m.predict(&Matrix::from_rows(&[[3.0]]).unwrap()).unwrap(), vec![7.0]);
        assert!(m.predict(&Matrix::zeros(1, 2)).is_err());
    }

    #[test]
    fn ridge_input_errors() {
        let x = Matrix::zeros(3, 2);
        assert!(ridge_fit(&x, &[1.0, 2.0], 0.01).is_err());
        assert!(ridge_fit(&x, &[1.0, 2.0, f64::NAN], 0.01).is_err());
        assert!(ridge_fit(&x, &[1.0, 2.0, 3.0], -1.0).is_err());
        assert!(ridge_fit(&Matrix::zeros(0, 2), &[], 0.01).is_err());
    }

    #[test]
    fn rmse_examples() {
        assert_eq!(rmse(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(rmse(&[0.0, 0.0], &[1.0, 1.0]).unwrap(), 1.0);
        assert_eq!(rmse(&[0.0, 2.0], &[1.0, 1.0]).unwrap(), 1.0);
        assert!(rmse(&[0.0], &[1.0, 1.0]).is_err());
    }

    #[test]
    fn pearson_examples() {
        let y = [1.0, 2.0, 3.0];
        assert!((pearson_cc(&y, &y).unwrap().value - 1.0).abs() < 1e-15);
        assert!((pearson_cc(&y, &[-1.0, -2.0, -3.0]).unwrap().value + 1.0).abs() < 1e-15);
        // 3 / sqrt(2 · 14/3)
        let r = pearson_cc(&y, &[1.0, 2.0, 4.0]).unwrap();
        assert!((r.value - 0.981_980_506_061_965_7).abs() < 1e-12);
        let flat = pearson_cc(&y, &[0.4, 0.4, 0.4]).unwrap();
        assert_eq!(flat, Correlation { value: 0.0, degenerate: true });
        assert!(pearson_cc(&[1.0], &[1.0]).is_err());
        assert!(pearson_cc(&y, &[1.0]).is_err());
    }
}
