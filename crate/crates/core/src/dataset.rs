//! Sample pools: CSV ingestion, pool drawing, synthetic subjects and the
//! labeled/unlabeled/blacklisted bookkeeping of one active-learning run.

use std::collections::BTreeSet;
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Stable identifier of a sample, assigned at load or generation time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SampleId(pub u64);

impl fmt::Display for SampleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Feature matrix with aligned targets and ids.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Matrix,
    targets: Vec<f64>,
    ids: Vec<SampleId>,
}

impl Dataset {
    pub fn new(features: Matrix, targets: Vec<f64>, ids: Vec<SampleId>) -> Result<Self> {
        let n = features.rows();
        if n == 0 {
            return Err(Error::invalid("dataset has no samples"));
        }
        if features.cols() == 0 {
            return Err(Error::invalid("dataset has no feature columns"));
        }
        if targets.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: targets.len() });
        }
        if ids.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: ids.len() });
        }
        if let Some(i) = targets.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("target of row {i}")));
        }
        if let Some(i) = features.as_slice().iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("feature row {}", i / features.cols())));
        }
        Ok(Self { features, targets, ids })
    }

    /// Dataset whose ids are the row numbers.
    pub fn with_sequential_ids(features: Matrix, targets: Vec<f64>) -> Result<Self> {
        let ids = (0..features.rows() as u64).map(SampleId).collect();
        Self::new(features, targets, ids)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.targets.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.features.cols()
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn ids(&self) -> &[SampleId] {
        &self.ids
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.features.row(i)
    }

    /// Rows at the given positions, in the given order.
    pub fn subset(&self, idx: &[usize]) -> Dataset {
        Dataset {
            features: self.features.select_rows(idx),
            targets: idx.iter().map(|&i| self.targets[i]).collect(),
            ids: idx.iter().map(|&i| self.ids[i]).collect(),
        }
    }

    /// Writes `id,f0,...,f{d-1},y`. Values use the shortest representation that
    /// parses back to the identical `f64`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["id".to_string()];
        header.extend((0..self.dim()).map(|j| format!("f{j}")));
        header.push("y".into());
        w.write_record(&header)?;
        let mut rec = Vec::with_capacity(self.dim() + 2);
        for i in 0..self.len() {
            rec.clear();
            rec.push(self.ids[i].to_string());
            rec.extend(self.row(i).iter().map(|v| format!("{v:?}")));
            rec.push(format!("{:?}", self.targets[i]));
            w.write_record(&rec)?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
        self.write_csv(std::io::BufWriter::new(f))
    }

    /// Parses a CSV with a `y` column, an optional `id` column and numeric
    /// feature columns. `origin` is only used in error messages.
    pub fn read_csv<R: Read>(reader: R, origin: &Path) -> Result<Dataset> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let header = rdr.headers().map_err(|e| Error::parse(origin, e.to_string()))?.clone();
        let y_col = header.iter().position(|h| h == "y").ok_or_else(|| Error::parse(origin, "missing `y` column"))?;
        let id_col = header.iter().position(|h| h == "id");
        let feat_cols: Vec<usize> = (0..header.len()).filter(|&j| j != y_col && Some(j) != id_col).collect();
        if feat_cols.is_empty() {
            return Err(Error::parse(origin, "no feature columns"));
        }

        let mut data = Vec::new();
        let mut targets = Vec::new();
        let mut ids = Vec::new();
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| Error::parse(origin, e.to_string()))?;
            let row = line + 2;
            let num = |j: usize| -> Result<f64> {
                let cell = &rec[j];
                let v: f64 = cell.parse().map_err(|_| {
                    Error::parse(origin, format!("row {row}, column `{}`: not a number: {cell:?}", &header[j]))
                })?;
                if !v.is_finite() {
                    return Err(Error::parse(origin, format!("row {row}, column `{}`: non-finite value", &header[j])));
                }
                Ok(v)
            };
            for &j in &feat_cols {
                data.push(num(j)?);
            }
            targets.push(num(y_col)?);
            ids.push(match id_col {
                Some(j) => SampleId(
                    rec[j].parse().map_err(|_| Error::parse(origin, format!("row {row}: bad id {:?}", &rec[j])))?,
                ),
                None => SampleId(line as u64),
            });
        }
        if targets.is_empty() {
            return Err(Error::parse(origin, "no data rows"));
        }
        let unique: BTreeSet<_> = ids.iter().collect();
        if unique.len() != ids.len() {
            return Err(Error::parse(origin, "duplicate sample ids"));
        }
        let features = Matrix::from_vec(targets.len(), feat_cols.len(), data)?;
        Dataset::new(features, targets, ids)
    }

    pub fn load_csv(path: &Path) -> Result<Dataset> {
        let f = std::fs::File::open(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
        Self::read_csv(std::io::BufReader::new(f), path)
    }
}

/// Number of samples kept by [`draw_pool`]: `fraction·n` rounded half-up.
pub fn pool_size(n: usize, fraction: f64) -> usize {
    (fraction * n as f64 + 0.5).floor() as usize
}

/// Uniform random subset without replacement of size `round(fraction·N)`.
pub fn draw_pool<R: Rng + ?Sized>(ds: &Dataset, fraction: f64, rng: &mut R) -> Result<Dataset> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::invalid(format!("pool fraction {fraction} not in (0, 1]")));
    }
    let m = pool_size(ds.len(), fraction);
    if m == 0 {
        return Err(Error::invalid("pool would be empty"));
    }
    let picked = index::sample(rng, ds.len(), m).into_vec();
    Ok(ds.subset(&picked))
}

/// Parameters of a synthetic linear-regression subject with planted outliers.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub n_samples: usize,
    pub n_features: usize,
    pub noise_sd: f64,
    pub outlier_fraction: f64,
    pub outlier_scale: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self { n_samples: 360, n_features: 10, noise_sd: 0.2, outlier_fraction: 0.02, outlier_scale: 2.5, seed: 0 }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_features == 0 {
            return Err(Error::invalid("n_features must be at least 1"));
        }
        if self.n_samples < self.n_features + 2 {
            return Err(Error::invalid("n_samples must be at least n_features + 2"));
        }
        if !(0.0..0.5).contains(&self.outlier_fraction) {
            return Err(Error::invalid("outlier_fraction must lie in [0, 0.5)"));
        }
        if !(self.outlier_scale > 1.0) || !self.outlier_scale.is_finite() {
            return Err(Error::invalid("outlier_scale must be > 1"));
        }
        if !(self.noise_sd >= 0.0) || !self.noise_sd.is_finite() {
            return Err(Error::invalid("noise_sd must be finite and >= 0"));
        }
        Ok(())
    }

    pub fn outlier_count(&self) -> usize {
        pool_size(self.n_samples, self.outlier_fraction)
    }
}

/// Hidden generator state, kept for oracles.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthMeta {
    /// Linear map from features to the rescaled target (before noise).
    pub weights: Vec<f64>,
    pub bias: f64,
    /// Rows whose features were displaced far from the unit cube. Their
    /// targets still follow the original features.
    pub outliers: Vec<SampleId>,
}

#[derive(Debug, Clone)]
pub struct SynthSubject {
    pub dataset: Dataset,
    pub meta: SynthMeta,
}

/// Generates one synthetic subject.
///
/// Inliers are uniform in the unit cube with targets `w·x + b + ε`, min-max
/// scaled to [0, 1]. Outliers come in tight groups of one or two points at
/// distance at least `outlier_scale` from the cube centre.
pub fn synth_generate(cfg: &SynthConfig) -> Result<SynthSubject> {
    cfg.validate()?;
    let (n, d) = (cfg.n_samples, cfg.n_features);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let w: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
    let b: f64 = rng.sample(StandardNormal);
    let mut x = Matrix::zeros(n, d);
    for i in 0..n {
        for v in x.row_mut(i) {
            *v = rng.random::<f64>();
        }
    }
    let noise = Normal::new(0.0, cfg.noise_sd).map_err(|e| Error::invalid(e.to_string()))?;
    let raw: Vec<f64> = x.row_iter().map(|r| crate::linalg::dot(r, &w) + b + noise.sample(&mut rng)).collect();
    let lo = raw.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = raw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let range = if hi > lo { hi - lo } else { 1.0 };
    let targets: Vec<f64> = raw.iter().map(|v| (v - lo) / range).collect();

    let n_out = cfg.outlier_count();
    let mut outliers: Vec<usize> = index::sample(&mut rng, n, n_out).into_vec();
    for group in outliers.chunks(2) {
        let mut dir: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let len = crate::linalg::norm2(&dir).max(f64::MIN_POSITIVE);
        let dist = cfg.outlier_scale * (1.1 + 0.5 * rng.random::<f64>());
        dir.iter_mut().for_each(|v| *v = 0.5 + dist * *v / len);
        for &i in group {
            for (dst, &c) in x.row_mut(i).iter_mut().zip(&dir) {
                *dst = c + 0.01 * rng.sample::<f64, _>(StandardNormal);
            }
        }
    }
    outliers.sort_unstable();

    let dataset = Dataset::with_sequential_ids(x, targets)?;
    let meta = SynthMeta {
        weights: w.iter().map(|v| v / range).collect(),
        bias: (b - lo) / range,
        outliers: outliers.into_iter().map(|i| SampleId(i as u64)).collect(),
    };
    Ok(SynthSubject { dataset, meta })
}

/// Partition of pool positions into labeled, unlabeled and blacklisted sets.
///
/// Positions index rows of the pool [`Dataset`]; labeled order is the order of
/// selection.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelState {
    n: usize,
    labeled: Vec<usize>,
    unlabeled: BTreeSet<usize>,
    blacklisted: BTreeSet<usize>,
    batches: Vec<Vec<usize>>,
}

impl LabelState {
    pub fn new(n: usize) -> Self {
        Self { n, labeled: Vec::new(), unlabeled: (0..n).collect(), blacklisted: BTreeSet::new(), batches: Vec::new() }
    }

    pub fn pool_len(&self) -> usize {
        self.n
    }

    pub fn labeled(&self) -> &[usize] {
        &self.labeled
    }

    pub fn unlabeled(&self) -> &BTreeSet<usize> {
        &self.unlabeled
    }

    pub fn blacklisted(&self) -> &BTreeSet<usize> {
        &self.blacklisted
    }

    pub fn batches(&self) -> &[Vec<usize>] {
        &self.batches
    }

    pub fn is_labeled(&self, i: usize) -> bool {
        i < self.n && !self.unlabeled.contains(&i) && !self.blacklisted.contains(&i)
    }

    /// Every position that still lacks a label, blacklisted ones included.
    pub fn not_labeled(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.unlabeled.union(&self.blacklisted).copied().collect();
        v.sort_unstable();
        v
    }

    /// Moves a batch from unlabeled to labeled and records it.
    pub fn label_batch(&mut self, batch: &[usize]) -> Result<()> {
        let distinct: BTreeSet<_> = batch.iter().collect();
        if distinct.len() != batch.len() {
            return Err(Error::invalid("batch contains duplicates"));
        }
        if let Some(i) = batch.iter().find(|i| !self.unlabeled.contains(i)) {
            return Err(Error::invalid(format!("position {i} is not an unlabeled candidate")));
        }
        for i in batch {
            self.unlabeled.remove(i);
        }
        self.labeled.extend_from_slice(batch);
        self.batches.push(batch.to_vec());
        Ok(())
    }

    /// Removes positions from the candidate set for the rest of the run.
    pub fn blacklist(&mut self, idx: &[usize]) -> Result<()> {
        if let Some(i) = idx.iter().find(|i| !self.unlabeled.contains(i) && !self.blacklisted.contains(i)) {
            return Err(Error::invalid(format!("cannot blacklist labeled position {i}")));
        }
        for i in idx {
            self.unlabeled.remove(i);
            self.blacklisted.insert(*i);
        }
        Ok(())
    }

    /// Checks the partition invariant.
    pub fn validate(&self) -> Result<()> {
        let labeled: BTreeSet<usize> = self.labeled.iter().copied().collect();
        if labeled.len() != self.labeled.len() {
            return Err(Error::invalid("a position was labeled twice"));
        }
        let total = labeled.len() + self.unlabeled.len() + self.blacklisted.len();
        if total != self.n {
            return Err(Error::invalid(format!("partition covers {total} of {} positions", self.n)));
        }
        let mut all = labeled.clone();
        for s in [&self.unlabeled, &self.blacklisted] {
            for &i in s {
                if i >= self.n || !all.insert(i) {
                    return Err(Error::invalid(format!("position {i} overlaps or is out of range")));
                }
            }
        }
        let flat: Vec<usize> = self.batches.iter().flatten().copied().collect();
        if flat != self.labeled {
            return Err(Error::invalid("batch history does not match labeled order"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::path::PathBuf;

    fn parse(text: &str) -> Result<Dataset> {
        Dataset::read_csv(text.as_bytes(), &PathBuf::from("inline.csv"))
    }

    #[test]
    fn three_row_file() {
        let ds = parse("f0,f1,y\n1,2,3\n4,5,6\n7,8,9\n").unwrap();
        assert_eq!((ds.len(), ds.dim()), (3, 2));
        assert_eq!(ds.targets(), &[3.0, 6.0, 9.0]);
        assert_eq!(ds.ids()[2], SampleId(2));
    }

    #[test]
    fn id_column_is_honoured() {
        let ds = parse("id,f0,y\n10,1,2\n4,3,4\n").unwrap();
        assert_eq!(ds.ids(), &[SampleId(10), SampleId(4)]);
        assert_eq!(ds.dim(), 1);
    }

    #[test]
    fn csv_errors() {
        assert!(parse("y\n1\n2\n").is_err());
        assert!(parse("f0,f1\n1,2\n").is_err());
        assert!(parse("f0,y\n1,NaN\n").is_err());
        assert!(parse("f0,y\n1,inf\n").is_err());
        assert!(parse("f0,y\n1,2\n3\n").is_err());
        assert!(parse("f0,y\nabc,2\n").is_err());
        assert!(Dataset::load_csv(Path::new("/definitely/not/here.csv")).is_err());
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = Matrix::from_vec(20, 3, (0..60).map(|_| rng.random::<f64>() * 1e3 - 500.0).collect()).unwrap();
        let y = (0..20).map(|_| rng.random::<f64>()).collect();
        let ds = Dataset::with_sequential_ids(x, y).unwrap();
        let mut buf = Vec::new();
        ds.write_csv(&mut buf).unwrap();
        let back = Dataset::read_csv(buf.as_slice(), Path::new("buf")).unwrap();
        assert_eq!(back, ds);
    }

    fn ramp(n: usize) -> Dataset {
        let x = Matrix::from_vec(n, 1, (0..n).map(|i| i as f64).collect()).unwrap();
        Dataset::with_sequential_ids(x, (0..n).map(|i| 2.0 * i as f64).collect()).unwrap()
    }

    #[test]
    fn pool_of_eighty_percent() {
        let ds = ramp(360);
        let pool = draw_pool(&ds, 0.8, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        assert_eq!(pool.len(), 288);
        let ids: BTreeSet<_> = pool.ids().iter().collect();
        assert_eq!(ids.len(), 288);
        for i in 0..pool.len() {
            let id = pool.ids()[i].0 as usize;
            assert_eq!(pool.row(i)[0], id as f64);
            assert_eq!(pool.targets()[i], 2.0 * id as f64);
        }
    }

    #[test]
    fn full_pool_is_a_permutation() {
        let ds = ramp(50);
        let pool = draw_pool(&ds, 1.0, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let mut ids: Vec<_> = pool.ids().to_vec();
        assert_ne!(ids, ds.ids());
        ids.sort();
        assert_eq!(ids, ds.ids());
    }

    #[test]
    fn pool_draw_is_seeded() {
        let ds = ramp(100);
        let a = draw_pool(&ds, 0.5, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        let b = draw_pool(&ds, 0.5, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        assert_eq!(a, b);
        assert!(draw_pool(&ds, 0.0, &mut ChaCha8Rng::seed_from_u64(4)).is_err());
        assert!(draw_pool(&ds, 1.5, &mut ChaCha8Rng::seed_from_u64(4)).is_err());
        assert!(draw_pool(&ramp(1), 0.2, &mut ChaCha8Rng::seed_from_u64(4)).is_err());
    }

    #[test]
    fn rounding_is_half_up() {
        assert_eq!(pool_size(10, 0.25), 3);
        assert_eq!(pool_size(360, 0.02), 7);
        assert_eq!(pool_size(360, 0.8), 288);
    }

    #[test]
    fn synth_outlier_count_and_envelope() {
        let cfg = SynthConfig::default();
        let s = synth_generate(&cfg).unwrap();
        assert_eq!(s.meta.outliers.len(), 7);
        let centre = vec![0.5; cfg.n_features];
        for &SampleId(i) in &s.meta.outliers {
            let r = s.dataset.row(i as usize);
            let dist = crate::linalg::squared_distance(r, &centre).sqrt();
            assert!(dist >= cfg.outlier_scale);
        }
        assert!(s.dataset.targets().iter().all(|y| (0.0..=1.0).contains(y)));

        let clean = synth_generate(&SynthConfig { outlier_fraction: 0.0, ..cfg }).unwrap();
        assert!(clean.meta.outliers.is_empty());
        assert!(clean.dataset.features().as_slice().iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn synth_is_reproducible_and_validated() {
        let cfg = SynthConfig::default();
        assert_eq!(synth_generate(&cfg).unwrap().dataset, synth_generate(&cfg).unwrap().dataset);
        for bad in [
            SynthConfig { n_samples: 11, ..cfg.clone() },
            SynthConfig { outlier_fraction: 0.5, ..cfg.clone() },
            SynthConfig { outlier_scale: 1.0, ..cfg.clone() },
            SynthConfig { n_features: 0, ..cfg.clone() },
        ] {
            assert!(synth_generate(&bad).is_err());
        }
    }

    #[test]
    fn noiseless_meta_reproduces_targets() {
        let s = synth_generate(&SynthConfig { noise_sd: 0.0, outlier_fraction: 0.0, ..Default::default() }).unwrap();
        for i in 0..s.dataset.len() {
            let pred = crate::linalg::dot(s.dataset.row(i), &s.meta.weights) + s.meta.bias;
            assert!((pred - s.dataset.targets()[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn label_state_partition() {
        let mut st = LabelState::new(6);
        st.validate().unwrap();
        st.label_batch(&[4, 1]).unwrap();
        st.blacklist(&[0]).unwrap();
        st.label_batch(&[2]).unwrap();
        st.validate().unwrap();
        assert_eq!(st.labeled(), &[4, 1, 2]);
        assert_eq!(st.not_labeled(), vec![0, 3, 5]);
        assert!(st.label_batch(&[0]).is_err());
        assert!(st.label_batch(&[3, 3]).is_err());
        assert!(st.label_batch(&[1]).is_err());
        assert!(st.blacklist(&[4]).is_err());
        assert!(st.is_labeled(4) && !st.is_labeled(0) && !st.is_labeled(3));
        st.validate().unwrap();
    }
}
