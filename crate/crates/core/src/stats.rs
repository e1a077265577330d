//! Dunn's rank-based pairwise comparisons with Benjamini–Hochberg adjustment.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::path::Path;

use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::harness::{Metric, ResultsTable};

pub const DEFAULT_ALPHA: f64 = 0.05;

/// The five strategies ranked jointly at every `m`.
pub const MAIN_STRATEGIES: [&str; 5] = ["bl", "qbc", "eqbc", "emcm", "eemcm"];

/// Reported pairs, first-listed strategy is the one hypothesised better.
pub const REPORTED_PAIRS: [(&str, &str); 6] =
    [("qbc", "bl"), ("eqbc", "bl"), ("emcm", "bl"), ("eemcm", "bl"), ("eqbc", "qbc"), ("eemcm", "emcm")];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    LowerBetter,
    HigherBetter,
}

impl Direction {
    pub fn for_metric(metric: Metric) -> Self {
        match metric {
            Metric::Rmse => Direction::LowerBetter,
            Metric::Cc => Direction::HigherBetter,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Sidedness {
    /// Alternative: the first group of the pair is better.
    #[default]
    OneSided,
    TwoSided,
}

/// Which p-values are adjusted together.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FdrFamily {
    /// The six pairs within each `m`.
    #[default]
    PerBatch,
    /// Every cell of the table at once.
    WholeTable,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StatsOptions {
    pub sidedness: Sidedness,
    pub family: FdrFamily,
    pub alpha: f64,
}

impl Default for StatsOptions {
    fn default() -> Self {
        Self { sidedness: Sidedness::OneSided, family: FdrFamily::PerBatch, alpha: DEFAULT_ALPHA }
    }
}

/// Mid-ranks (1-based) of `values`, plus the size of every tie group.
pub fn mid_ranks(values: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut ties = Vec::new();
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && values[order[j]] == values[order[i]] {
            j += 1;
        }
        // positions i..j share the average of ranks i+1..=j
        let r = (i + j + 1) as f64 / 2.0;
        for &o in &order[i..j] {
            ranks[o] = r;
        }
        if j - i > 1 {
            ties.push(j - i);
        }
        i = j;
    }
    (ranks, ties)
}

/// Raw p-values of Dunn's test for each pair, ranking all groups jointly.
pub fn dunn_pairwise(groups: &[Vec<f64>], pairs: &[(usize, usize)], direction: Direction) -> Result<Vec<f64>> {
    dunn_pairwise_with(groups, pairs, direction, Sidedness::OneSided)
}

pub fn dunn_pairwise_with(
    groups: &[Vec<f64>],
    pairs: &[(usize, usize)],
    direction: Direction,
    sidedness: Sidedness,
) -> Result<Vec<f64>> {
    if groups.len() < 2 {
        return Err(Error::invalid("Dunn's test needs at least two groups"));
    }
    if let Some(g) = groups.iter().position(|g| g.len() < 2) {
        return Err(Error::invalid(format!("group {g} has fewer than two observations")));
    }
    if groups.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("Dunn's test input".into()));
    }
    if let Some(&(i, j)) = pairs.iter().find(|&&(i, j)| i >= groups.len() || j >= groups.len()) {
        return Err(Error::invalid(format!("pair ({i}, {j}) out of range")));
    }

    let pooled: Vec<f64> = groups.iter().flatten().copied().collect();
    let (ranks, ties) = mid_ranks(&pooled);
    let mut mean_rank = Vec::with_capacity(groups.len());
    let mut at = 0;
    for g in groups {
        mean_rank.push(ranks[at..at + g.len()].iter().sum::<f64>() / g.len() as f64);
        at += g.len();
    }

    let nt = pooled.len() as f64;
    let tie_term: f64 = ties.iter().map(|&t| (t as f64).powi(3) - t as f64).sum::<f64>() / (12.0 * (nt - 1.0));
    let var = nt * (nt + 1.0) / 12.0 - tie_term;
    let normal = Normal::standard();

    Ok(pairs
        .iter()
        .map(|&(i, j)| {
            let se2 = var * (1.0 / groups[i].len() as f64 + 1.0 / groups[j].len() as f64);
            if !(se2 > 1e-12 * nt * nt) {
                return match sidedness {
                    Sidedness::OneSided => 0.5,
                    Sidedness::TwoSided => 1.0,
                };
            }
            let z = (mean_rank[i] - mean_rank[j]) / se2.sqrt();
            match sidedness {
                Sidedness::OneSided => match direction {
                    Direction::LowerBetter => normal.cdf(z),
                    Direction::HigherBetter => normal.cdf(-z),
                },
                Sidedness::TwoSided => (2.0 * normal.cdf(-z.abs())).min(1.0),
            }
        })
        .collect())
}

/// Benjamini–Hochberg step-up adjustment, returned in input order.
pub fn bh_fdr(pvals: &[f64]) -> Result<Vec<f64>> {
    if let Some(p) = pvals.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::invalid(format!("p-value {p} outside [0, 1]")));
    }
    let n = pvals.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| pvals[a].total_cmp(&pvals[b]));
    let mut adj = vec![0.0; n];
    let mut running = 1.0_f64;
    for (rank, &i) in order.iter().enumerate().rev() {
        running = running.min(pvals[i] * n as f64 / (rank + 1) as f64);
        // the max only absorbs rounding in p·n/rank
        adj[i] = running.min(1.0).max(pvals[i]);
    }
    Ok(adj)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonCell {
    pub m: usize,
    pub better: String,
    pub worse: String,
    pub metric: Metric,
    pub p_raw: f64,
    pub p_adj: f64,
    pub significant: bool,
}

impl ComparisonCell {
    pub fn pair_label(&self) -> String {
        format!("{}_vs_{}", self.better, self.worse)
    }
}

/// One row per `m`, six cells per row, stored flat in `(m, pair)` order.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonTable {
    pub metric: Metric,
    pub cells: Vec<ComparisonCell>,
}

impl ComparisonTable {
    pub fn cell(&self, m: usize, better: &str, worse: &str) -> Option<&ComparisonCell> {
        self.cells.iter().find(|c| c.m == m && c.better == better && c.worse == worse)
    }

    pub fn batches(&self) -> Vec<usize> {
        let mut ms: Vec<usize> = self.cells.iter().map(|c| c.m).collect();
        ms.dedup();
        ms
    }

    /// `m,pair,metric,p_raw,p_adj,significant`
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["m", "pair", "metric", "p_raw", "p_adj", "significant"])?;
        for c in &self.cells {
            w.write_record([
                c.m.to_string(),
                c.pair_label(),
                c.metric.to_string(),
                format!("{:?}", c.p_raw),
                format!("{:?}", c.p_adj),
                u8::from(c.significant).to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::Io { path: "<table>".into(), source: e })?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path).map_err(|e| Error::Io { path: path.into(), source: e })?;
        self.write_csv(std::io::BufWriter::new(f))
    }
}

impl fmt::Display for ComparisonTable {
    /// Plain-text grid with one line per `m`; significant cells carry a `*`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:>3}", "m")?;
        for (a, b) in REPORTED_PAIRS {
            write!(f, " {:>14}", format!("{a}/{b}"))?;
        }
        writeln!(f)?;
        for m in self.batches() {
            write!(f, "{m:>3}")?;
            for (a, b) in REPORTED_PAIRS {
                match self.cell(m, a, b) {
                    Some(c) => write!(f, " {:>13.4}{}", c.p_adj, if c.significant { '*' } else { ' ' })?,
                    None => write!(f, " {:>14}", "-")?,
                }
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// Dunn + FDR table for one metric. Groups at each `m` hold one value per
/// (subject, run) for each of the five main strategies.
pub fn comparison_table(rt: &ResultsTable, metric: Metric, opts: &StatsOptions) -> Result<ComparisonTable> {
    let present = rt.strategies();
    for s in MAIN_STRATEGIES {
        if !present.iter().any(|p| p == s) {
            return Err(Error::MissingStrategy(s.to_string()));
        }
    }
    let index = |name: &str| MAIN_STRATEGIES.iter().position(|s| *s == name).expect("main strategy");
    let pairs: Vec<(usize, usize)> = REPORTED_PAIRS.iter().map(|&(a, b)| (index(a), index(b))).collect();

    // m → strategy → values in (subject, run) order
    let mut by_m: BTreeMap<usize, Vec<Vec<f64>>> = BTreeMap::new();
    for r in rt.rows() {
        if let Some(g) = MAIN_STRATEGIES.iter().position(|s| *s == r.strategy) {
            by_m.entry(r.m).or_insert_with(|| vec![Vec::new(); MAIN_STRATEGIES.len()])[g].push(r.value(metric));
        }
    }

    let direction = Direction::for_metric(metric);
    let mut cells = Vec::new();
    for (&m, groups) in &by_m {
        let raw = dunn_pairwise_with(groups, &pairs, direction, opts.sidedness)?;
        for (&(a, b), p) in REPORTED_PAIRS.iter().zip(raw) {
            cells.push(ComparisonCell {
                m,
                better: a.to_string(),
                worse: b.to_string(),
                metric,
                p_raw: p,
                p_adj: f64::NAN,
                significant: false,
            });
        }
    }
    match opts.family {
        FdrFamily::PerBatch => {
            for chunk in cells.chunks_mut(REPORTED_PAIRS.len()) {
                adjust(chunk)?;
            }
        }
        FdrFamily::WholeTable => adjust(&mut cells)?,
    }
    for c in &mut cells {
        c.significant = c.p_adj < opts.alpha;
    }
    Ok(ComparisonTable { metric, cells })
}

fn adjust(cells: &mut [ComparisonCell]) -> Result<()> {
    let raw: Vec<f64> = cells.iter().map(|c| c.p_raw).collect();
    for (c, a) in cells.iter_mut().zip(bh_fdr(&raw)?) {
        c.p_adj = a;
    }
    Ok(())
}
