//! Repeated pool draws, per-batch evaluation, learning curves and
//! percentage improvements.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use crate::committee::DEFAULT_COMMITTEE_SIZE;
use crate::dataset::{draw_pool, pool_size, Dataset};
use crate::error::{Error, Result};
use crate::regression::{pearson_cc, rmse, RidgeModel, DEFAULT_SIGMA};
use crate::seed::{RunSeeds, Stream};
use crate::strategies::{run_strategy, RunTrace, StrategySpec, DEFAULT_BATCH_SIZE, DEFAULT_GAMMA};

pub const DEFAULT_BATCHES: usize = 12;
pub const DEFAULT_POOL_FRACTION: f64 = 0.8;
pub const DEFAULT_RUNS: usize = 30;
pub const DEFAULT_STRATEGIES: [&str; 8] = ["bl", "qbc", "eqbc", "emcm", "eemcm", "eemcm1", "eemcm2", "eemcm3"];

/// Set in `cc_flag` when the correlation was undefined (reported as 0).
pub const FLAG_CC_DEGENERATE: u8 = 1;
/// Set in `cc_flag` when no unlabeled pool samples remained and the metrics
/// were computed on the labeled set.
pub const FLAG_TRAIN_ONLY: u8 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Metric {
    Rmse,
    Cc,
}

impl Metric {
    pub const ALL: [Metric; 2] = [Metric::Rmse, Metric::Cc];
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::Rmse => "rmse",
            Metric::Cc => "cc",
        })
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rmse" => Ok(Metric::Rmse),
            "cc" => Ok(Metric::Cc),
            _ => Err(Error::invalid(format!("unknown metric `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub strategies: Vec<StrategySpec>,
    pub k: usize,
    pub batches: usize,
    pub pool_fraction: f64,
    pub runs: usize,
    pub master_seed: u64,
    pub sigma: f64,
    pub gamma: f64,
    pub committee_size: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            strategies: DEFAULT_STRATEGIES.iter().map(|s| s.parse().expect("built-in name")).collect(),
            k: DEFAULT_BATCH_SIZE,
            batches: DEFAULT_BATCHES,
            pool_fraction: DEFAULT_POOL_FRACTION,
            runs: DEFAULT_RUNS,
            master_seed: 0,
            sigma: DEFAULT_SIGMA,
            gamma: DEFAULT_GAMMA,
            committee_size: DEFAULT_COMMITTEE_SIZE,
        }
    }
}

impl ExperimentConfig {
    /// Strategy specs with the shared `k`, `gamma`, `P` and `sigma` applied.
    pub fn resolved_strategies(&self) -> Vec<StrategySpec> {
        self.strategies
            .iter()
            .map(|s| StrategySpec {
                k: self.k,
                gamma: self.gamma,
                committee_size: self.committee_size,
                sigma: self.sigma,
                ..s.clone()
            })
            .collect()
    }

    pub fn validate(&self, subjects: &[Dataset]) -> Result<()> {
        if self.strategies.is_empty() {
            return Err(Error::invalid("no strategies selected"));
        }
        let mut seen = Vec::new();
        for s in self.resolved_strategies() {
            s.validate()?;
            let name = s.name();
            if seen.contains(&name) {
                return Err(Error::invalid(format!("strategy `{name}` listed twice")));
            }
            seen.push(name);
        }
        if self.runs == 0 {
            return Err(Error::invalid("runs must be at least 1"));
        }
        if self.batches == 0 {
            return Err(Error::invalid("batches must be at least 1"));
        }
        if !(self.pool_fraction > 0.0 && self.pool_fraction <= 1.0) {
            return Err(Error::invalid("pool_fraction must lie in (0, 1]"));
        }
        if subjects.is_empty() {
            return Err(Error::invalid("no subjects"));
        }
        for (i, s) in subjects.iter().enumerate() {
            let pool = pool_size(s.len(), self.pool_fraction);
            if self.batches * self.k > pool {
                return Err(Error::invalid(format!(
                    "subject {i}: {} batches of {} exceed the pool of {pool}",
                    self.batches, self.k
                )));
            }
            if s.dim() != subjects[0].dim() {
                return Err(Error::DimensionMismatch { expected: subjects[0].dim(), got: s.dim() });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub subject: String,
    pub strategy: String,
    pub run: usize,
    pub m: usize,
    pub rmse: f64,
    pub cc: f64,
    pub cc_flag: u8,
}

impl ResultRow {
    pub fn value(&self, metric: Metric) -> f64 {
        match metric {
            Metric::Rmse => self.rmse,
            Metric::Cc => self.cc,
        }
    }
}

/// Rows sorted by (subject, strategy, run, m), with subjects and strategies
/// in their configured order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ResultsTable {
    rows: Vec<ResultRow>,
}

impl ResultsTable {
    pub fn from_rows(rows: Vec<ResultRow>) -> Self {
        Self { rows }
    }

    pub fn rows(&self) -> &[ResultRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Strategy names in order of first appearance.
    pub fn strategies(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for r in &self.rows {
            if !out.contains(&r.strategy) {
                out.push(r.strategy.clone());
            }
        }
        out
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["subject", "strategy", "run", "m", "rmse", "cc", "cc_flag"])?;
        for r in &self.rows {
            w.write_record([
                r.subject.clone(),
                r.strategy.clone(),
                r.run.to_string(),
                r.m.to_string(),
                format!("{:?}", r.rmse),
                format!("{:?}", r.cc),
                r.cc_flag.to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::Io { path: "<results>".into(), source: e })?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path).map_err(|e| Error::Io { path: path.into(), source: e })?;
        self.write_csv(std::io::BufWriter::new(f))
    }

    pub fn read_csv<R: Read>(reader: R, origin: &Path) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let header = rdr.headers().map_err(|e| Error::parse(origin, e.to_string()))?.clone();
        let col = |name: &str| {
            header
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| Error::parse(origin, format!("missing column `{name}`")))
        };
        let [cs, cst, cr, cm, crm, ccc, cf] = ["subject", "strategy", "run", "m", "rmse", "cc", "cc_flag"].map(col);
        let (cs, cst, cr, cm, crm, ccc, cf) = (cs?, cst?, cr?, cm?, crm?, ccc?, cf?);
        let mut rows = Vec::new();
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| Error::parse(origin, e.to_string()))?;
            let bad = |what: &str| Error::parse(origin, format!("row {}: bad {what}", line + 2));
            let rmse: f64 = rec[crm].parse().map_err(|_| bad("rmse"))?;
            let cc: f64 = rec[ccc].parse().map_err(|_| bad("cc"))?;
            if !(rmse >= 0.0) || !rmse.is_finite() {
                return Err(bad("rmse"));
            }
            if !(-1.0..=1.0).contains(&cc) {
                return Err(bad("cc"));
            }
            rows.push(ResultRow {
                subject: rec[cs].to_string(),
                strategy: rec[cst].to_string(),
                run: rec[cr].parse().map_err(|_| bad("run"))?,
                m: rec[cm].parse().map_err(|_| bad("m"))?,
                rmse,
                cc,
                cc_flag: rec[cf].parse().map_err(|_| bad("cc_flag"))?,
            });
        }
        if rows.is_empty() {
            return Err(Error::parse(origin, "no result rows"));
        }
        Ok(Self { rows })
    }

    pub fn load_csv(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path).map_err(|e| Error::Io { path: path.into(), source: e })?;
        Self::read_csv(std::io::BufReader::new(f), path)
    }
}

/// Metrics of one fitted model after batch `m`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub m: usize,
    pub rmse: f64,
    pub cc: f64,
    pub flag: u8,
    pub n_labeled: usize,
    pub n_evaluated: usize,
}

/// Evaluates `model` on every pool sample outside `labeled`, or on the
/// labeled set itself when nothing else is left.
pub fn evaluate(pool: &Dataset, labeled: &[usize], model: &RidgeModel, m: usize) -> Result<Evaluation> {
    let mut is_lab = vec![false; pool.len()];
    for &i in labeled {
        is_lab[i] = true;
    }
    let mut eval: Vec<usize> = (0..pool.len()).filter(|&i| !is_lab[i]).collect();
    let mut flag = 0;
    if eval.is_empty() {
        eval = labeled.to_vec();
        flag |= FLAG_TRAIN_ONLY;
    }
    debug_assert!(flag & FLAG_TRAIN_ONLY != 0 || eval.iter().all(|&i| !is_lab[i]));
    let y: Vec<f64> = eval.iter().map(|&i| pool.targets()[i]).collect();
    let yhat = model.predict(&pool.features().select_rows(&eval))?;
    let e = rmse(&y, &yhat)?;
    let cc = if y.len() >= 2 {
        let c = pearson_cc(&y, &yhat)?;
        if c.degenerate {
            flag |= FLAG_CC_DEGENERATE;
        }
        c.value
    } else {
        flag |= FLAG_CC_DEGENERATE;
        0.0
    };
    Ok(Evaluation { m, rmse: e, cc, flag, n_labeled: labeled.len(), n_evaluated: eval.len() })
}

/// One strategy's trajectory on one pool.
#[derive(Debug, Clone)]
pub struct StrategyRun {
    pub strategy: String,
    pub trace: RunTrace,
    pub evaluations: Vec<Evaluation>,
}

/// Every strategy run on the same pool draw.
#[derive(Debug, Clone)]
pub struct UnitRun {
    pub subject: usize,
    pub run: usize,
    pub pool: Dataset,
    pub strategies: Vec<StrategyRun>,
}

/// Draws the pool for `(subject, run)` and executes every strategy on it.
pub fn run_unit(data: &Dataset, cfg: &ExperimentConfig, subject: usize, run: usize) -> Result<UnitRun> {
    let seeds = RunSeeds::new(cfg.master_seed, subject, run);
    let pool = draw_pool(data, cfg.pool_fraction, &mut seeds.rng(Stream::PoolDraw, 0))?;
    let mut strategies = Vec::with_capacity(cfg.strategies.len());
    for spec in cfg.resolved_strategies() {
        let trace = run_strategy(&pool, &spec, cfg.batches, &seeds)?;
        let mut labeled = Vec::new();
        let mut evaluations = Vec::with_capacity(cfg.batches);
        for (b, model) in trace.state.batches().iter().zip(&trace.models) {
            labeled.extend_from_slice(b);
            evaluations.push(evaluate(&pool, &labeled, model, evaluations.len() + 1)?);
        }
        strategies.push(StrategyRun { strategy: spec.name(), trace, evaluations });
    }
    Ok(UnitRun { subject, run, pool, strategies })
}

#[cfg(feature = "parallel")]
fn map_units<T: Send>(units: &[(usize, usize)], f: impl Fn(usize, usize) -> T + Sync + Send) -> Vec<T> {
    use rayon::prelude::*;
    units.par_iter().map(|&(s, r)| f(s, r)).collect()
}

#[cfg(not(feature = "parallel"))]
fn map_units<T: Send>(units: &[(usize, usize)], f: impl Fn(usize, usize) -> T + Sync + Send) -> Vec<T> {
    units.iter().map(|&(s, r)| f(s, r)).collect()
}

/// Runs every strategy on `runs` pool draws per subject. `names` label the
/// subjects in the output; the table is sorted the same way whatever the
/// thread count.
pub fn run_experiment(cfg: &ExperimentConfig, subjects: &[Dataset], names: &[String]) -> Result<ResultsTable> {
    cfg.validate(subjects)?;
    if names.len() != subjects.len() {
        return Err(Error::DimensionMismatch { expected: subjects.len(), got: names.len() });
    }
    let units: Vec<(usize, usize)> = (0..subjects.len()).flat_map(|s| (0..cfg.runs).map(move |r| (s, r))).collect();
    let done = map_units(&units, |s, r| {
        run_unit(&subjects[s], cfg, s, r).map(|u| {
            u.strategies.into_iter().enumerate().map(|(si, sr)| (si, sr.strategy, sr.evaluations)).collect::<Vec<_>>()
        })
    });

    let mut keyed = Vec::new();
    for (&(s, r), unit) in units.iter().zip(done) {
        for (si, name, evals) in unit? {
            for e in evals {
                keyed.push((
                    (s, si, r, e.m),
                    ResultRow {
                        subject: names[s].clone(),
                        strategy: name.clone(),
                        run: r,
                        m: e.m,
                        rmse: e.rmse,
                        cc: e.cc,
                        cc_flag: e.flag,
                    },
                ));
            }
        }
    }
    keyed.sort_by_key(|(k, _)| *k);
    Ok(ResultsTable::from_rows(keyed.into_iter().map(|(_, r)| r).collect()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurvePoint {
    pub strategy: String,
    pub m: usize,
    pub metric: Metric,
    pub mean: f64,
    /// Sample standard deviation of the per-subject means (0 for one subject).
    pub sd: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LearningCurves {
    pub points: Vec<CurvePoint>,
}

impl LearningCurves {
    /// `(m, mean)` for one strategy and metric, ascending in `m`.
    pub fn series(&self, strategy: &str, metric: Metric) -> Vec<(usize, f64)> {
        self.points.iter().filter(|p| p.strategy == strategy && p.metric == metric).map(|p| (p.m, p.mean)).collect()
    }

    pub fn mean_at(&self, strategy: &str, metric: Metric, m: usize) -> Option<f64> {
        self.points.iter().find(|p| p.strategy == strategy && p.metric == metric && p.m == m).map(|p| p.mean)
    }

    /// `strategy,m,metric,mean,sd`
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["strategy", "m", "metric", "mean", "sd"])?;
        for p in &self.points {
            w.write_record([
                p.strategy.clone(),
                p.m.to_string(),
                p.metric.to_string(),
                format!("{:?}", p.mean),
                format!("{:?}", p.sd),
            ])?;
        }
        w.flush().map_err(|e| Error::Io { path: "<curves>".into(), source: e })?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path).map_err(|e| Error::Io { path: path.into(), source: e })?;
        self.write_csv(std::io::BufWriter::new(f))
    }
}

/// Mean over runs within each subject, then mean and sd across subjects.
/// Points are ordered by strategy (first appearance), metric, then `m`.
pub fn learning_curves(rt: &ResultsTable) -> LearningCurves {
    // subject → (sum, count)
    type PerSubject<'a> = BTreeMap<&'a str, (f64, usize)>;
    let mut acc: HashMap<(&str, usize, Metric), PerSubject> = HashMap::new();
    for r in rt.rows() {
        for metric in Metric::ALL {
            let e = acc.entry((&r.strategy, r.m, metric)).or_default().entry(&r.subject).or_insert((0.0, 0));
            e.0 += r.value(metric);
            e.1 += 1;
        }
    }
    let order = rt.strategies();
    let mut keys: Vec<_> = acc.keys().copied().collect();
    keys.sort_by_key(|&(s, m, metric)| (order.iter().position(|o| o == s), metric, m));
    let points = keys
        .into_iter()
        .map(|key| {
            let subject_means: Vec<f64> = acc[&key].values().map(|(s, c)| s / *c as f64).collect();
            let n = subject_means.len() as f64;
            let mean = subject_means.iter().sum::<f64>() / n;
            let sd = if subject_means.len() > 1 {
                (subject_means.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
            } else {
                0.0
            };
            CurvePoint { strategy: key.0.to_string(), m: key.1, metric: key.2, mean, sd }
        })
        .collect();
    LearningCurves { points }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImprovementPoint {
    pub m: usize,
    /// `None` where the baseline is zero.
    pub value: Option<f64>,
}

/// Percentage improvement of curve `a` over curve `b`; positive means `a` is better.
pub fn pct_improvement(a: &[(usize, f64)], b: &[(usize, f64)], metric: Metric) -> Result<Vec<ImprovementPoint>> {
    if a.len() != b.len() || a.iter().zip(b).any(|(x, y)| x.0 != y.0) {
        return Err(Error::invalid("curves are not on the same m grid"));
    }
    Ok(a.iter()
        .zip(b)
        .map(|(&(m, va), &(_, vb))| {
            let value = match metric {
                Metric::Rmse if vb != 0.0 => Some(100.0 * (vb - va) / vb),
                Metric::Cc if vb != 0.0 => Some(100.0 * (va - vb) / vb.abs()),
                _ => None,
            };
            ImprovementPoint { m, value }
        })
        .collect())
}

/// Writes `pair,m,metric,value,flag` for every reported pair present in the
/// curves. Gaps have an empty value and flag 1.
pub fn write_improvements<W: Write>(curves: &LearningCurves, pairs: &[(&str, &str)], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["pair", "m", "metric", "value", "flag"])?;
    for &(a, b) in pairs {
        for metric in Metric::ALL {
            let (sa, sb) = (curves.series(a, metric), curves.series(b, metric));
            if sa.is_empty() || sb.is_empty() {
                continue;
            }
            for p in pct_improvement(&sa, &sb, metric)? {
                let (value, flag) = match p.value {
                    Some(v) => (format!("{v:?}"), "0"),
                    None => (String::new(), "1"),
                };
                w.write_record([format!("{a}_vs_{b}"), p.m.to_string(), metric.to_string(), value, flag.to_string()])?;
            }
        }
    }
    w.flush().map_err(|e| Error::Io { path: "<improvement>".into(), source: e })?;
    Ok(())
}
