//! Bootstrap committees and the two informativeness scores built on them.

use std::collections::BTreeSet;

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{norm2, Matrix};
use crate::regression::{ridge_fit, RidgeModel};

/// Committee size used when none is configured.
pub const DEFAULT_COMMITTEE_SIZE: usize = 4;

const MAX_REDRAWS: usize = 10;

/// Per-candidate predictions of every committee member: one row per
/// candidate, one column per model.
#[derive(Debug, Clone, PartialEq)]
pub struct CommitteePredictions {
    preds: Matrix,
}

impl CommitteePredictions {
    pub fn new(preds: Matrix) -> Result<Self> {
        if preds.cols() < 1 {
            return Err(Error::invalid("committee must have at least one member"));
        }
        Ok(Self { preds })
    }

    pub fn from_models(models: &[RidgeModel], x: &Matrix) -> Result<Self> {
        let mut preds = Matrix::zeros(x.rows(), models.len());
        for (p, m) in models.iter().enumerate() {
            for (i, v) in m.predict(x)?.into_iter().enumerate() {
                preds[(i, p)] = v;
            }
        }
        Self::new(preds)
    }

    pub fn len(&self) -> usize {
        self.preds.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.preds.rows() == 0
    }

    pub fn committee_size(&self) -> usize {
        self.preds.cols()
    }

    pub fn row(&self, n: usize) -> &[f64] {
        self.preds.row(n)
    }
}

/// Fits `size` ridge models, each on a with-replacement resample of the
/// labeled set. A resample with fewer than two distinct points is redrawn up
/// to ten times and then kept as is.
pub fn bootstrap_committee<R: Rng + ?Sized>(
    x: &Matrix,
    y: &[f64],
    size: usize,
    sigma: f64,
    rng: &mut R,
) -> Result<Vec<RidgeModel>> {
    let n = x.rows();
    if n < 2 {
        return Err(Error::invalid(format!("bootstrap needs at least 2 labeled samples, got {n}")));
    }
    if size < 2 {
        return Err(Error::invalid("committee needs at least 2 members"));
    }
    if y.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: y.len() });
    }
    let mut models = Vec::with_capacity(size);
    let mut idx = vec![0usize; n];
    for _ in 0..size {
        for attempt in 0..=MAX_REDRAWS {
            idx.iter_mut().for_each(|i| *i = rng.random_range(0..n));
            let distinct: BTreeSet<_> = idx.iter().collect();
            if distinct.len() >= 2 || attempt == MAX_REDRAWS {
                break;
            }
        }
        let xs = x.select_rows(&idx);
        let ys: Vec<f64> = idx.iter().map(|&i| y[i]).collect();
        models.push(ridge_fit(&xs, &ys, sigma)?);
    }
    Ok(models)
}

/// Mean taken relative to the first entry, so identical members give an
/// exact mean and a zero spread.
#[inline]
fn mean(v: &[f64]) -> f64 {
    let v0 = v[0];
    v0 + v.iter().map(|x| x - v0).sum::<f64>() / v.len() as f64
}

/// Committee variance per candidate, divided by the committee size.
pub fn qbc_scores(cp: &CommitteePredictions) -> Vec<f64> {
    (0..cp.len())
        .map(|n| {
            let row = cp.row(n);
            let m = mean(row);
            row.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / row.len() as f64
        })
        .collect()
}

/// Expected model change of a linear learner: the mean absolute deviation of
/// the committee predictions times the candidate's feature norm.
pub fn emcm_scores(cp: &CommitteePredictions, x: &Matrix) -> Result<Vec<f64>> {
    if x.rows() != cp.len() {
        return Err(Error::DimensionMismatch { expected: cp.len(), got: x.rows() });
    }
    Ok((0..cp.len())
        .map(|n| {
            let row = cp.row(n);
            let m = mean(row);
            let mad = row.iter().map(|v| (v - m).abs()).sum::<f64>() / row.len() as f64;
            mad * norm2(x.row(n))
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cp(rows: &[&[f64]]) -> CommitteePredictions {
        CommitteePredictions::new(Matrix::from_rows(rows).unwrap()).unwrap()
    }

    #[test]
    fn qbc_examples() {
        let s = qbc_scores(&cp(&[&[0.4, 0.4, 0.4], &[1.0, 2.0, 3.0]]));
        assert_eq!(s[0], 0.0);
        assert!((s[1] - 2.0 / 3.0).abs() < 1e-10);
        let swapped = qbc_scores(&cp(&[&[0.4, 0.4, 0.4], &[3.0, 1.0, 2.0]]));
        assert_eq!(s, swapped);
    }

    #[test]
    fn emcm_examples() {
        let x = Matrix::from_rows(&[[3.0, 4.0]]).unwrap();
        assert_eq!(emcm_scores(&cp(&[&[1.0, 3.0]]), &x).unwrap(), vec![5.0]);
        assert_eq!(emcm_scores(&cp(&[&[2.0, 2.0]]), &x).unwrap(), vec![0.0]);
        let scaled = Matrix::from_rows(&[[-6.0, -8.0]]).unwrap();
        assert_eq!(emcm_scores(&cp(&[&[1.0, 3.0]]), &scaled).unwrap(), vec![10.0]);
        assert!(emcm_scores(&cp(&[&[1.0, 3.0]]), &Matrix::zeros(2, 2)).is_err());
    }

    #[test]
    fn bootstrap_preconditions() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let x = Matrix::from_rows(&[[1.0]]).unwrap();
        assert!(bootstrap_committee(&x, &[1.0], 4, 0.01, &mut rng).is_err());
        let x = Matrix::from_rows(&[[1.0], [2.0]]).unwrap();
        assert!(bootstrap_committee(&x, &[1.0, 2.0], 1, 0.01, &mut rng).is_err());
    }

    #[test]
    fn constant_targets_give_constant_models() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = Matrix::from_vec(10, 2, (0..20).map(|_| rng.random::<f64>()).collect()).unwrap();
        let y = vec![0.6; 10];
        let models = bootstrap_committee(&x, &y, 5, 1e-8, &mut rng).unwrap();
        for m in &models {
            for p in m.predict(&x).unwrap() {
                assert!((p - 0.6).abs() < 1e-4);
            }
        }
    }

    #[test]
    fn bootstrap_is_seeded() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = Matrix::from_vec(8, 3, (0..24).map(|_| rng.random::<f64>()).collect()).unwrap();
        let y: Vec<f64> = (0..8).map(|_| rng.random::<f64>()).collect();
        let a = bootstrap_committee(&x, &y, 4, 0.01, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        let b = bootstrap_committee(&x, &y, 4, 0.01, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a[0], a[1]);
    }
}
