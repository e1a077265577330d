//! Drowsiness targets and theta band-power features.
//!
//! The pipeline starts from per-epoch band powers (one column per channel)
//! and per-epoch response times:
//!
//! ```text
//! powers ─ to_db ─ reject_channels(> 20 dB) ─ zscore_columns ─ pca_fit(95 %) ─ project_and_scale ─ features in [0, 1]
//! tau    ─ drowsiness_index ─ moving_average(9 epochs) ─ targets
//! ```

use std::io::Read;
use std::path::Path;

use crate::dataset::{Dataset, SampleId};
use crate::error::{Error, Result};
use crate::linalg::{sym_eig, Matrix};

pub const DEFAULT_TAU0: f64 = 1.0;
/// Channels whose peak exceeds this many dB are discarded.
pub const MAX_CHANNEL_DB: f64 = 20.0;
pub const DEFAULT_VARIANCE_KEPT: f64 = 0.95;
/// 90 s of smoothing at one sample every 10 s.
pub const DEFAULT_SMOOTHING_WINDOW: usize = 9;

/// Maps a response time to a drowsiness index in [0, 1).
pub fn drowsiness_index(tau: f64, tau0: f64) -> Result<f64> {
    if !tau.is_finite() || !tau0.is_finite() {
        return Err(Error::NonFinite("response time".into()));
    }
    if tau < 0.0 {
        return Err(Error::invalid(format!("negative response time {tau}")));
    }
    // (1 − e^−t)/(1 + e^−t) = tanh(t/2)
    Ok(((tau - tau0) / 2.0).tanh().max(0.0))
}

/// Trailing moving average; the first `window − 1` outputs average over
/// whatever history exists.
pub fn moving_average(series: &[f64], window: usize) -> Result<Vec<f64>> {
    if series.is_empty() {
        return Err(Error::invalid("empty series"));
    }
    if window == 0 || window > series.len() {
        return Err(Error::invalid(format!("window {window} must be in 1..={}", series.len())));
    }
    let mut out = Vec::with_capacity(series.len());
    let mut sum = 0.0;
    for (i, &v) in series.iter().enumerate() {
        sum += v;
        if i >= window {
            sum -= series[i - window];
        }
        out.push(sum / (i + 1).min(window) as f64);
    }
    Ok(out)
}

/// Per-epoch band powers, one column per channel.
#[derive(Debug, Clone, PartialEq)]
pub struct BandPowerTable {
    powers: Matrix,
    channel_names: Vec<String>,
}

impl BandPowerTable {
    pub fn new(powers: Matrix, channel_names: Vec<String>) -> Result<Self> {
        if channel_names.len() != powers.cols() {
            return Err(Error::DimensionMismatch { expected: powers.cols(), got: channel_names.len() });
        }
        if let Some(p) = powers.as_slice().iter().position(|&v| !(v > 0.0) || !v.is_finite()) {
            return Err(Error::invalid(format!(
                "band power at epoch {}, channel {} must be positive and finite",
                p / powers.cols(),
                channel_names[p % powers.cols()]
            )));
        }
        Ok(Self { powers, channel_names })
    }

    pub fn powers(&self) -> &Matrix {
        &self.powers
    }

    pub fn channel_names(&self) -> &[String] {
        &self.channel_names
    }

    /// Reads `epoch,ch_<name>,...`. Returns the epoch column alongside.
    pub fn read_csv<R: Read>(reader: R, origin: &Path) -> Result<(Vec<i64>, Self)> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let header = rdr.headers().map_err(|e| Error::parse(origin, e.to_string()))?.clone();
        if header.get(0) != Some("epoch") {
            return Err(Error::parse(origin, "first column must be `epoch`"));
        }
        let mut names = Vec::new();
        for h in header.iter().skip(1) {
            let name = h
                .strip_prefix("ch_")
                .ok_or_else(|| Error::parse(origin, format!("column `{h}` lacks the `ch_` prefix")))?;
            names.push(name.to_string());
        }
        if names.is_empty() {
            return Err(Error::parse(origin, "no channel columns"));
        }
        let mut epochs = Vec::new();
        let mut data = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| Error::parse(origin, e.to_string()))?;
            epochs.push(rec[0].parse().map_err(|_| Error::parse(origin, format!("bad epoch {:?}", &rec[0])))?);
            for cell in rec.iter().skip(1) {
                data.push(cell.parse::<f64>().map_err(|_| Error::parse(origin, format!("not a number: {cell:?}")))?);
            }
        }
        let powers = Matrix::from_vec(epochs.len(), names.len(), data)?;
        Ok((epochs, Self::new(powers, names)?))
    }
}

/// Reads `epoch,tau`.
pub fn read_response_times<R: Read>(reader: R, origin: &Path) -> Result<(Vec<i64>, Vec<f64>)> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header = rdr.headers().map_err(|e| Error::parse(origin, e.to_string()))?.clone();
    if header.len() != 2 || &header[0] != "epoch" || &header[1] != "tau" {
        return Err(Error::parse(origin, "header must be `epoch,tau`"));
    }
    let mut epochs = Vec::new();
    let mut taus = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::parse(origin, e.to_string()))?;
        epochs.push(rec[0].parse().map_err(|_| Error::parse(origin, format!("bad epoch {:?}", &rec[0])))?);
        taus.push(rec[1].parse().map_err(|_| Error::parse(origin, format!("bad tau {:?}", &rec[1])))?);
    }
    Ok((epochs, taus))
}

/// `10·log10(power)`, element-wise.
pub fn to_db(powers: &BandPowerTable) -> Matrix {
    let p = powers.powers();
    let data = p.as_slice().iter().map(|v| 10.0 * v.log10()).collect();
    Matrix::from_vec(p.rows(), p.cols(), data).expect("finite logs of positive values")
}

/// Drops every column whose maximum exceeds [`MAX_CHANNEL_DB`]. Returns the
/// surviving matrix and the indices of rejected columns.
pub fn reject_channels(db: &Matrix) -> Result<(Matrix, Vec<usize>)> {
    if db.cols() == 0 {
        return Err(Error::invalid("no channels"));
    }
    let (mut kept, mut rejected) = (Vec::new(), Vec::new());
    for j in 0..db.cols() {
        let peak = db.column(j).into_iter().fold(f64::NEG_INFINITY, f64::max);
        if peak > MAX_CHANNEL_DB {
            rejected.push(j);
        } else {
            kept.push(j);
        }
    }
    if kept.is_empty() {
        return Err(Error::invalid("every channel exceeds the dB limit"));
    }
    Ok((db.select_cols(&kept), rejected))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ColumnStats {
    pub mean: Vec<f64>,
    pub sd: Vec<f64>,
}

/// Standardises each column to mean 0 and (population) standard deviation 1.
pub fn zscore_columns(x: &Matrix) -> Result<(Matrix, ColumnStats)> {
    let n = x.rows() as f64;
    if x.rows() == 0 {
        return Err(Error::invalid("no rows"));
    }
    let mut z = x.clone();
    let mut stats = ColumnStats { mean: Vec::new(), sd: Vec::new() };
    for j in 0..x.cols() {
        let col = x.column(j);
        let mean = col.iter().sum::<f64>() / n;
        let sd = (col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
        if !(sd > 0.0) {
            return Err(Error::invalid(format!("column {j} is constant")));
        }
        for i in 0..x.rows() {
            z[(i, j)] = (x[(i, j)] - mean) / sd;
        }
        stats.mean.push(mean);
        stats.sd.push(sd);
    }
    Ok((z, stats))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    /// d × q, orthonormal columns.
    pub components: Matrix,
    pub explained_variance: Vec<f64>,
    /// Fraction of total variance captured by the kept components.
    pub variance_ratio_kept: f64,
}

impl PcaModel {
    pub fn n_components(&self) -> usize {
        self.components.cols()
    }

    /// `(X − mean)·components`
    pub fn transform(&self, x: &Matrix) -> Result<Matrix> {
        if x.cols() != self.mean.len() {
            return Err(Error::DimensionMismatch { expected: self.mean.len(), got: x.cols() });
        }
        let mut centred = x.clone();
        for i in 0..x.rows() {
            for (v, m) in centred.row_mut(i).iter_mut().zip(&self.mean) {
                *v -= m;
            }
        }
        centred.matmul(&self.components)
    }

    pub fn inverse_transform(&self, scores: &Matrix) -> Result<Matrix> {
        let mut back = scores.matmul(&self.components.transpose())?;
        for i in 0..back.rows() {
            for (v, m) in back.row_mut(i).iter_mut().zip(&self.mean) {
                *v += m;
            }
        }
        Ok(back)
    }
}

/// Column covariance (divisor n − 1).
pub fn covariance(x: &Matrix) -> (Vec<f64>, Matrix) {
    let (n, d) = (x.rows(), x.cols());
    let mean: Vec<f64> = (0..d).map(|j| x.column(j).iter().sum::<f64>() / n as f64).collect();
    let mut c = Matrix::zeros(d, d);
    for r in x.row_iter() {
        for i in 0..d {
            let di = r[i] - mean[i];
            for j in i..d {
                c[(i, j)] += di * (r[j] - mean[j]);
            }
        }
    }
    let denom = (n.max(2) - 1) as f64;
    for i in 0..d {
        for j in i..d {
            c[(i, j)] /= denom;
            c[(j, i)] = c[(i, j)];
        }
    }
    (mean, c)
}

/// Principal components of the columns of `z`, keeping the fewest leading
/// components whose cumulative variance ratio reaches `variance_threshold`.
/// Each component's largest-magnitude entry is made positive.
pub fn pca_fit(z: &Matrix, variance_threshold: f64) -> Result<PcaModel> {
    let (n, d) = (z.rows(), z.cols());
    if d == 0 || n <= d {
        return Err(Error::invalid(format!("PCA needs more rows than columns, got {n}×{d}")));
    }
    if !(variance_threshold > 0.0 && variance_threshold <= 1.0) {
        return Err(Error::invalid("variance threshold must lie in (0, 1]"));
    }
    let (mean, cov) = covariance(z);
    let eig = sym_eig(&cov)?;
    let values: Vec<f64> = eig.values.iter().map(|v| v.max(0.0)).collect();
    let total: f64 = values.iter().sum();
    if !(total > 0.0) {
        return Err(Error::invalid("data has zero variance"));
    }
    let mut q = 0;
    let mut kept = 0.0;
    while q < d {
        kept += values[q];
        q += 1;
        // small slack so an exact 0.95 split is not lost to rounding
        if kept / total >= variance_threshold - 1e-12 {
            break;
        }
    }
    let mut components = eig.vectors.select_cols(&(0..q).collect::<Vec<_>>());
    for c in 0..q {
        let col = components.column(c);
        let lead = col.iter().copied().fold(0.0_f64, |m, v| if v.abs() > m.abs() { v } else { m });
        if lead < 0.0 {
            for i in 0..d {
                components[(i, c)] = -components[(i, c)];
            }
        }
    }
    Ok(PcaModel {
        mean,
        components,
        explained_variance: values[..q].to_vec(),
        variance_ratio_kept: (kept / total).min(1.0),
    })
}

/// Projects onto the components and min-max scales every score column to [0, 1]
/// over the rows given.
pub fn project_and_scale(model: &PcaModel, z: &Matrix) -> Result<Matrix> {
    let mut s = model.transform(z)?;
    min_max_columns(&mut s)?;
    Ok(s)
}

pub fn min_max_columns(s: &mut Matrix) -> Result<()> {
    for j in 0..s.cols() {
        let col = s.column(j);
        let lo = col.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !(hi > lo) {
            return Err(Error::invalid(format!("score column {j} has zero range")));
        }
        for i in 0..s.rows() {
            s[(i, j)] = ((s[(i, j)] - lo) / (hi - lo)).clamp(0.0, 1.0);
        }
    }
    Ok(())
}

/// Summary of a feature extraction run.
#[derive(Debug, Clone)]
pub struct FeatureReport {
    pub rejected_channels: Vec<String>,
    pub n_components: usize,
    pub variance_ratio_kept: f64,
}

/// Runs the whole pipeline. Epochs are matched by number; ids are the epoch numbers.
pub fn build_feature_dataset(
    epochs: &[i64],
    powers: &BandPowerTable,
    tau_epochs: &[i64],
    taus: &[f64],
    tau0: f64,
    window: usize,
    variance_threshold: f64,
) -> Result<(Dataset, FeatureReport)> {
    if epochs != tau_epochs {
        return Err(Error::invalid("band-power and response-time epochs differ"));
    }
    if epochs.iter().any(|&e| e < 0) {
        return Err(Error::invalid("epoch numbers must be non-negative"));
    }
    let raw_y = taus.iter().map(|&t| drowsiness_index(t, tau0)).collect::<Result<Vec<_>>>()?;
    let y = moving_average(&raw_y, window.min(raw_y.len()).max(1))?;

    let db = to_db(powers);
    let (kept, rejected) = reject_channels(&db)?;
    let (z, _) = zscore_columns(&kept)?;
    let pca = pca_fit(&z, variance_threshold)?;
    let features = project_and_scale(&pca, &z)?;
    let ids = epochs.iter().map(|&e| SampleId(e as u64)).collect();
    let report = FeatureReport {
        rejected_channels: rejected.iter().map(|&j| powers.channel_names()[j].clone()).collect(),
        n_components: pca.n_components(),
        variance_ratio_kept: pca.variance_ratio_kept,
    };
    Ok((Dataset::new(features, y, ids)?, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn drowsiness_examples() {
        assert_eq!(drowsiness_index(1.0, 1.0).unwrap(), 0.0);
        assert_eq!(drowsiness_index(0.5, 1.0).unwrap(), 0.0);
        // (1 − e⁻¹)/(1 + e⁻¹) evaluated directly
        let e = (-1.0f64).exp();
        let want = (1.0 - e) / (1.0 + e);
        assert!((drowsiness_index(2.0, 1.0).unwrap() - want).abs() < 1e-15);
        assert!((want - 0.462117).abs() < 1e-6);
        assert!(drowsiness_index(20.0, 1.0).unwrap() > 0.9999);
        assert!(drowsiness_index(f64::NAN, 1.0).is_err());
        assert!(drowsiness_index(-1.0, 1.0).is_err());
    }

    #[test]
    fn moving_average_examples() {
        assert_eq!(moving_average(&[0.0, 1.0, 2.0, 3.0], 2).unwrap(), vec![0.0, 0.5, 1.5, 2.5]);
        assert_eq!(moving_average(&[4.0; 6], 3).unwrap(), vec![4.0; 6]);
        let s = [1.0, -2.0, 7.5];
        assert_eq!(moving_average(&s, 1).unwrap(), s.to_vec());
        assert!(moving_average(&[], 1).is_err());
        assert!(moving_average(&s, 4).is_err());
        assert!(moving_average(&s, 0).is_err());
    }

    #[test]
    fn moving_average_keeps_the_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let n = 20_000;
        let s: Vec<f64> = (0..n).map(|_| 3.0 + rng.sample::<f64, _>(StandardNormal)).collect();
        let m = moving_average(&s, 9).unwrap();
        let mean = m.iter().sum::<f64>() / n as f64;
        assert!((mean - 3.0).abs() < 4.0 / (n as f64).sqrt());
    }

    fn table(rows: &[&[f64]]) -> BandPowerTable {
        let m = Matrix::from_rows(rows).unwrap();
        let names = (0..m.cols()).map(|j| format!("c{j}")).collect();
        BandPowerTable::new(m, names).unwrap()
    }

    #[test]
    fn db_conversion() {
        let db = to_db(&table(&[&[1.0, 100.0, 10f64.powf(2.5)]]));
        assert_eq!(db.row(0)[0], 0.0);
        assert_eq!(db.row(0)[1], 20.0);
        assert!((db.row(0)[2] - 25.0).abs() < 1e-12);
        let bad = BandPowerTable::new(Matrix::from_rows(&[[0.0]]).unwrap(), vec!["a".into()]);
        assert!(bad.is_err());
    }

    #[test]
    fn channel_rejection() {
        let db = Matrix::from_rows(&[[1.0, 20.0], [3.0, 2.0]]).unwrap();
        let (kept, rej) = reject_channels(&db).unwrap();
        assert!(rej.is_empty());
        assert_eq!(kept, db);

        let db = Matrix::from_rows(&[[1.0, 20.01], [3.0, 2.0]]).unwrap();
        assert_eq!(reject_channels(&db).unwrap().1, vec![1]);

        let db =
            Matrix::from_rows(&[[1.0, 25.0, 3.0, 2.0, 5.0], [2.0, 3.0, 4.0, 25.0, 6.0], [1.0, 2.0, 3.0, 4.0, 5.0]])
                .unwrap();
        let (kept, rej) = reject_channels(&db).unwrap();
        assert_eq!(rej, vec![1, 3]);
        assert_eq!(kept.cols(), 3);
        assert_eq!(kept.column(1), vec![3.0, 4.0, 3.0]);

        assert!(reject_channels(&Matrix::from_rows(&[[21.0]]).unwrap()).is_err());
    }

    #[test]
    fn zscore_examples() {
        let (z, _) = zscore_columns(&Matrix::from_rows(&[[-1.0, 0.0], [1.0, 2.0]]).unwrap()).unwrap();
        assert_eq!(z.column(0), vec![-1.0, 1.0]);
        assert_eq!(z.column(1), vec![-1.0, 1.0]);
        assert!(zscore_columns(&Matrix::from_rows(&[[3.0], [3.0]]).unwrap()).is_err());

        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = Matrix::from_vec(50, 4, (0..200).map(|_| rng.random_range(-5.0..9.0)).collect()).unwrap();
        let (z, _) = zscore_columns(&x).unwrap();
        for j in 0..4 {
            let c = z.column(j);
            let m = c.iter().sum::<f64>() / 50.0;
            let sd = (c.iter().map(|v| (v - m).powi(2)).sum::<f64>() / 50.0).sqrt();
            assert!(m.abs() < 1e-10 && (sd - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn pca_on_a_line() {
        let rows: Vec<[f64; 2]> = (0..10).map(|i| [i as f64, 2.0 * i as f64]).collect();
        let m = pca_fit(&Matrix::from_rows(&rows).unwrap(), 0.95).unwrap();
        assert_eq!(m.n_components(), 1);
        assert!((m.variance_ratio_kept - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pca_isotropic_keeps_both() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x = Matrix::from_vec(2000, 2, (0..4000).map(|_| rng.sample(StandardNormal)).collect()).unwrap();
        let m = pca_fit(&x, 0.95).unwrap();
        assert_eq!(m.n_components(), 2);
    }

    #[test]
    fn pca_components_are_eigenpairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (n, d) = (200, 8);
        let mix = Matrix::from_vec(d, d, (0..d * d).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
        let raw = Matrix::from_vec(n, d, (0..n * d).map(|_| rng.sample(StandardNormal)).collect()).unwrap();
        let x = raw.matmul(&mix).unwrap();
        let m = pca_fit(&x, 0.95).unwrap();
        let (_, cov) = covariance(&x);
        let q = m.n_components();
        let ctc = m.components.transpose().matmul(&m.components).unwrap();
        for i in 0..q {
            let v = m.components.column(i);
            let cv = cov.matvec(&v).unwrap();
            for (a, b) in cv.iter().zip(&v) {
                assert!((a - m.explained_variance[i] * b).abs() < 1e-8);
            }
            for j in 0..q {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((ctc[(i, j)] - want).abs() < 1e-10);
            }
            let lead = v.iter().copied().fold(0.0_f64, |a, b| if b.abs() > a.abs() { b } else { a });
            assert!(lead > 0.0);
        }
        assert!(m.explained_variance.windows(2).all(|w| w[0] >= w[1]));
        assert!(m.variance_ratio_kept >= 0.95);

        // reconstruction keeps at least the threshold share of variance
        let back = m.inverse_transform(&m.transform(&x).unwrap()).unwrap();
        let (_, cb) = covariance(&back);
        assert!(cb.trace() / cov.trace() >= 0.95 - 1e-12);
    }

    #[test]
    fn pca_preconditions() {
        assert!(pca_fit(&Matrix::zeros(2, 2), 0.95).is_err());
        assert!(pca_fit(&Matrix::identity(3).select_rows(&[0, 1, 2, 0]), 0.0).is_err());
    }

    #[test]
    fn min_max_scaling() {
        let mut s = Matrix::from_rows(&[[-2.0], [0.0], [2.0]]).unwrap();
        min_max_columns(&mut s).unwrap();
        assert_eq!(s.column(0), vec![0.0, 0.5, 1.0]);
        let mut flat = Matrix::from_rows(&[[1.0], [1.0]]).unwrap();
        assert!(min_max_columns(&mut flat).is_err());
    }

    #[test]
    fn pipeline_end_to_end() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let n = 120;
        let names: Vec<String> = (0..6).map(|j| format!("c{j}")).collect();
        let mut p = Matrix::zeros(n, 6);
        for i in 0..n {
            let drift = (i as f64 / 20.0).sin();
            for j in 0..6 {
                // channel 5 peaks above 20 dB
                let base = if j == 5 { 150.0 } else { 5.0 };
                p[(i, j)] = base * (1.0 + 0.3 * drift + 0.1 * rng.random::<f64>());
            }
        }
        let table = BandPowerTable::new(p, names).unwrap();
        let epochs: Vec<i64> = (0..n as i64).collect();
        let taus: Vec<f64> = (0..n).map(|i| 0.5 + 2.0 * rng.random::<f64>() + i as f64 / 60.0).collect();
        let (ds, report) = build_feature_dataset(&epochs, &table, &epochs, &taus, 1.0, 9, 0.95).unwrap();
        assert_eq!(report.rejected_channels, vec!["c5".to_string()]);
        assert_eq!(ds.len(), n);
        assert!(ds.features().as_slice().iter().all(|v| (0.0..=1.0).contains(v)));
        assert!(ds.targets().iter().all(|v| (0.0..1.0).contains(v)));
        assert!(report.variance_ratio_kept >= 0.95);
    }
}
