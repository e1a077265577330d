//! Batch sample-selection strategies.
//!
//! Three baselines (random, query-by-committee, expected model change) and
//! the enhancement layer that can be switched on piecewise:
//!
//! * **representative initialisation** - the first batch is the set of
//!   closest-to-centroid samples of a k-means partition of the pool, after
//!   repeatedly discarding clusters no larger than `max(1, γN)`;
//! * **outlier blacklist** - samples discarded by that loop are never
//!   offered for labeling;
//! * **diversity** - later batches pre-select the top `2k` candidates,
//!   cluster them into `k` groups and label the best-scored member of each.
//!
//! All positions are rows of the pool [`Dataset`]. Score ties are broken by
//! the lowest [`SampleId`].

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use rand::Rng;

use crate::clustering::{closest_to_centroid, kmeans, Clustering};
use crate::committee::{bootstrap_committee, emcm_scores, qbc_scores, CommitteePredictions, DEFAULT_COMMITTEE_SIZE};
use crate::dataset::{Dataset, LabelState, SampleId};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::regression::{ridge_fit, RidgeModel, DEFAULT_SIGMA};
use crate::seed::{derive, RunSeeds, Stream};

pub const DEFAULT_GAMMA: f64 = 0.02;
pub const DEFAULT_BATCH_SIZE: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Base {
    Random,
    Qbc,
    Emcm,
}

/// Informativeness measure used after the first batch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scorer {
    Qbc,
    Emcm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct EnhancementFlags {
    pub representative_init: bool,
    pub outlier_blacklist: bool,
    pub diversity: bool,
}

impl EnhancementFlags {
    pub const NONE: Self = Self { representative_init: false, outlier_blacklist: false, diversity: false };
    pub const ALL: Self = Self { representative_init: true, outlier_blacklist: true, diversity: true };

    /// Exactly one enhancement: 1 = initialisation, 2 = blacklist, 3 = diversity.
    pub fn only(which: u8) -> Option<Self> {
        match which {
            1 => Some(Self { representative_init: true, ..Self::NONE }),
            2 => Some(Self { outlier_blacklist: true, ..Self::NONE }),
            3 => Some(Self { diversity: true, ..Self::NONE }),
            _ => None,
        }
    }

    fn single(&self) -> Option<u8> {
        (1..=3).find(|&i| Self::only(i) == Some(*self))
    }
}

/// A selection algorithm together with its parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct StrategySpec {
    pub base: Base,
    pub flags: EnhancementFlags,
    pub k: usize,
    pub gamma: f64,
    pub committee_size: usize,
    pub sigma: f64,
}

impl StrategySpec {
    pub fn new(base: Base, flags: EnhancementFlags) -> Self {
        Self {
            base,
            flags,
            k: DEFAULT_BATCH_SIZE,
            gamma: DEFAULT_GAMMA,
            committee_size: DEFAULT_COMMITTEE_SIZE,
            sigma: DEFAULT_SIGMA,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::invalid("batch size k must be at least 1"));
        }
        if !(0.0..0.5).contains(&self.gamma) {
            return Err(Error::invalid("gamma must lie in [0, 0.5)"));
        }
        if self.base != Base::Random && self.committee_size < 2 {
            return Err(Error::invalid("committee size must be at least 2"));
        }
        if self.base == Base::Random && self.flags.diversity {
            return Err(Error::invalid("diversity needs an informativeness score"));
        }
        if !(self.sigma >= 0.0) {
            return Err(Error::invalid("sigma must be >= 0"));
        }
        Ok(())
    }

    fn scorer(&self) -> Option<Scorer> {
        match self.base {
            Base::Random => None,
            Base::Qbc => Some(Scorer::Qbc),
            Base::Emcm => Some(Scorer::Emcm),
        }
    }

    /// Short lowercase name: `bl`, `qbc`, `eqbc`, `emcm`, `eemcm`, `eemcm2`, ...
    pub fn name(&self) -> String {
        let stem = match self.base {
            Base::Random => "bl",
            Base::Qbc => "qbc",
            Base::Emcm => "emcm",
        };
        let f = self.flags;
        if f == EnhancementFlags::NONE {
            stem.to_string()
        } else if f == EnhancementFlags::ALL && self.base != Base::Random {
            format!("e{stem}")
        } else if let (Some(i), true) = (f.single(), self.base != Base::Random) {
            format!("e{stem}{i}")
        } else {
            let mut s = stem.to_string();
            if f.representative_init {
                s.push_str("+init");
            }
            if f.outlier_blacklist {
                s.push_str("+blacklist");
            }
            if f.diversity {
                s.push_str("+diversity");
            }
            s
        }
    }
}

impl fmt::Display for StrategySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for StrategySpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        let (base, rest) = if s == "bl" {
            return Ok(StrategySpec::new(Base::Random, EnhancementFlags::NONE));
        } else if let Some(r) = s.strip_prefix("eqbc") {
            (Base::Qbc, Some(r))
        } else if let Some(r) = s.strip_prefix("eemcm") {
            (Base::Emcm, Some(r))
        } else if s == "qbc" {
            (Base::Qbc, None)
        } else if s == "emcm" {
            (Base::Emcm, None)
        } else {
            return Err(Error::invalid(format!("unknown strategy `{s}`")));
        };
        let flags = match rest {
            None => EnhancementFlags::NONE,
            Some("") => EnhancementFlags::ALL,
            Some(r) => r
                .parse::<u8>()
                .ok()
                .and_then(EnhancementFlags::only)
                .ok_or_else(|| Error::invalid(format!("unknown strategy `{s}`")))?,
        };
        Ok(StrategySpec::new(base, flags))
    }
}

/// Result of one selection step.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchSelection {
    /// Pool positions to label, in selection order.
    pub chosen: Vec<usize>,
    /// Pool positions flagged as outliers in this step.
    pub newly_blacklisted: Vec<usize>,
    pub diagnostics: Diagnostics,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Diagnostics {
    Random,
    TopK { candidates: Vec<usize>, scores: Vec<f64> },
    Init(InitDiagnostics),
    Diverse(DiversityDiagnostics),
}

#[derive(Debug, Clone, PartialEq)]
pub struct InitDiagnostics {
    /// `max(1, γN)`
    pub threshold: f64,
    /// Number of k-means passes run.
    pub rounds: usize,
    /// Pool positions that survived removal; rows of the final clustering.
    pub survivors: Vec<usize>,
    pub clustering: Clustering,
    /// Every position removed by the size test, in removal order.
    pub removed: Vec<usize>,
    /// Removal stopped early because fewer than `k` samples would remain.
    pub guard_triggered: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiversityDiagnostics {
    /// Top-`2k` pool positions by score, best first.
    pub preselected: Vec<usize>,
    pub scores: Vec<f64>,
    /// Partition of `preselected`; `None` when no more than `k` were available.
    pub clustering: Option<Clustering>,
}

/// Orders candidates by score, best first, ties by lowest id.
fn rank_by_score(candidates: &[usize], scores: &[f64], ids: &[SampleId]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..candidates.len()).collect();
    order.sort_by(|&a, &b| {
        scores[b].partial_cmp(&scores[a]).unwrap_or(Ordering::Equal).then(ids[candidates[a]].cmp(&ids[candidates[b]]))
    });
    order
}

/// Uniform draw without replacement of `min(k, |unlabeled|)` positions.
pub fn select_random<R: Rng + ?Sized>(state: &LabelState, k: usize, rng: &mut R) -> Result<BatchSelection> {
    let pool: Vec<usize> = state.unlabeled().iter().copied().collect();
    if pool.is_empty() {
        return Err(Error::NoCandidates);
    }
    let m = k.min(pool.len());
    let chosen = index::sample(rng, pool.len(), m).into_iter().map(|i| pool[i]).collect();
    Ok(BatchSelection { chosen, newly_blacklisted: Vec::new(), diagnostics: Diagnostics::Random })
}

/// The `k` highest-scored candidates, ties by lowest id.
pub fn select_top_k(candidates: &[usize], scores: &[f64], ids: &[SampleId], k: usize) -> Result<BatchSelection> {
    if scores.len() != candidates.len() {
        return Err(Error::DimensionMismatch { expected: candidates.len(), got: scores.len() });
    }
    let chosen = rank_by_score(candidates, scores, ids).into_iter().take(k).map(|i| candidates[i]).collect();
    Ok(BatchSelection {
        chosen,
        newly_blacklisted: Vec::new(),
        diagnostics: Diagnostics::TopK { candidates: candidates.to_vec(), scores: scores.to_vec() },
    })
}

/// Representative first batch with outlier removal.
///
/// Clusters the pool into `k` groups, drops every cluster with at most
/// `max(1, γN)` members (N = pool size, fixed), and repeats until all clusters
/// pass. Then picks the closest-to-centroid sample of each cluster. Removal
/// stops if it would leave fewer than `k` samples.
pub fn ebmal_init(x: &Matrix, ids: &[SampleId], k: usize, gamma: f64, seed: u64) -> Result<BatchSelection> {
    let n = x.rows();
    if ids.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: ids.len() });
    }
    if k == 0 || n < k {
        return Err(Error::invalid(format!("pool of {n} cannot supply a batch of {k}")));
    }
    let threshold = (gamma * n as f64).max(1.0);
    let mut survivors: Vec<usize> = (0..n).collect();
    survivors.sort_by_key(|&i| ids[i]);
    let mut removed = Vec::new();
    let mut guard_triggered = false;
    let mut rounds = 0;

    let (sub, clustering) = loop {
        let sub = x.select_rows(&survivors);
        let cl = kmeans(&sub, k, derive(seed, &[rounds as u64]))?;
        rounds += 1;
        let small: Vec<usize> = (0..k).filter(|&c| cl.sizes[c] as f64 <= threshold).collect();
        if small.is_empty() {
            break (sub, cl);
        }
        let drop: Vec<usize> = (0..survivors.len()).filter(|&i| small.contains(&cl.assignments[i])).collect();
        if survivors.len() - drop.len() < k {
            guard_triggered = true;
            break (sub, cl);
        }
        removed.extend(drop.iter().map(|&i| survivors[i]));
        let mut keep = vec![true; survivors.len()];
        drop.iter().for_each(|&i| keep[i] = false);
        survivors = survivors.iter().zip(&keep).filter(|(_, &kp)| kp).map(|(&p, _)| p).collect();
    };

    let chosen =
        (0..k).map(|c| closest_to_centroid(&sub, &clustering, c).map(|i| survivors[i])).collect::<Result<Vec<_>>>()?;
    Ok(BatchSelection {
        chosen,
        newly_blacklisted: removed.clone(),
        diagnostics: Diagnostics::Init(InitDiagnostics {
            threshold,
            rounds,
            survivors,
            clustering,
            removed,
            guard_triggered,
        }),
    })
}

/// Diversity-aware batch: take the top `2k` candidates by score, cluster them
/// into `k` groups and keep the best-scored member of each group.
pub fn ebmal_select(
    x: &Matrix,
    ids: &[SampleId],
    candidates: &[usize],
    scores: &[f64],
    k: usize,
    seed: u64,
) -> Result<BatchSelection> {
    if candidates.is_empty() {
        return Err(Error::NoCandidates);
    }
    if scores.len() != candidates.len() {
        return Err(Error::DimensionMismatch { expected: candidates.len(), got: scores.len() });
    }
    if k == 0 {
        return Err(Error::invalid("batch size k must be at least 1"));
    }
    let ranked = rank_by_score(candidates, scores, ids);
    let top: Vec<usize> = ranked.into_iter().take(2 * k).collect();
    let preselected: Vec<usize> = top.iter().map(|&i| candidates[i]).collect();
    let top_scores: Vec<f64> = top.iter().map(|&i| scores[i]).collect();

    if preselected.len() <= k {
        return Ok(BatchSelection {
            chosen: preselected.clone(),
            newly_blacklisted: Vec::new(),
            diagnostics: Diagnostics::Diverse(DiversityDiagnostics {
                preselected,
                scores: top_scores,
                clustering: None,
            }),
        });
    }

    let cl = kmeans(&x.select_rows(&preselected), k, seed)?;
    // `preselected` is already sorted best-first, so the first member seen
    // in each cluster is its best one.
    let mut best: Vec<Option<usize>> = vec![None; k];
    for (i, &c) in cl.assignments.iter().enumerate() {
        if best[c].is_none() {
            best[c] = Some(i);
        }
    }
    let chosen = best.into_iter().flatten().map(|i| preselected[i]).collect();
    Ok(BatchSelection {
        chosen,
        newly_blacklisted: Vec::new(),
        diagnostics: Diagnostics::Diverse(DiversityDiagnostics {
            preselected,
            scores: top_scores,
            clustering: Some(cl),
        }),
    })
}

/// Committee scores for `candidates`, from a committee trained on the labeled set.
pub fn score_candidates<R: Rng + ?Sized>(
    scorer: Scorer,
    pool: &Dataset,
    labeled: &[usize],
    candidates: &[usize],
    committee_size: usize,
    sigma: f64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let xl = pool.features().select_rows(labeled);
    let yl: Vec<f64> = labeled.iter().map(|&i| pool.targets()[i]).collect();
    let models = bootstrap_committee(&xl, &yl, committee_size, sigma, rng)?;
    let xc = pool.features().select_rows(candidates);
    let cp = CommitteePredictions::from_models(&models, &xc)?;
    match scorer {
        Scorer::Qbc => Ok(qbc_scores(&cp)),
        Scorer::Emcm => emcm_scores(&cp, &xc),
    }
}

/// Full trajectory of one strategy on one pool.
#[derive(Debug, Clone)]
pub struct RunTrace {
    pub state: LabelState,
    pub selections: Vec<BatchSelection>,
    /// Ridge model fitted on all labels after each batch.
    pub models: Vec<RidgeModel>,
}

/// Runs `batches` selection rounds and fits a ridge model after each.
///
/// Batch 1 is representative when that enhancement is on, random otherwise.
/// Later batches use the committee score, with or without the diversity
/// step. A batch that finds no candidates is recorded empty. With fewer than
/// two labels a committee cannot be bootstrapped and the batch is random.
pub fn run_strategy(pool: &Dataset, spec: &StrategySpec, batches: usize, seeds: &RunSeeds) -> Result<RunTrace> {
    spec.validate()?;
    let x = pool.features();
    let mut state = LabelState::new(pool.len());
    let mut selections = Vec::with_capacity(batches);
    let mut models = Vec::with_capacity(batches);

    for m in 1..=batches {
        let sel = if state.unlabeled().is_empty() {
            BatchSelection { chosen: Vec::new(), newly_blacklisted: Vec::new(), diagnostics: Diagnostics::Random }
        } else if m == 1 {
            first_batch(pool, spec, &mut state, seeds)?
        } else {
            later_batch(pool, spec, &state, m, seeds)?
        };
        state.label_batch(&sel.chosen)?;
        debug_assert!(state.validate().is_ok());
        let lab = state.labeled();
        let model = if lab.is_empty() {
            RidgeModel { weights: vec![0.0; pool.dim()], bias: 0.0, sigma: spec.sigma }
        } else {
            let y: Vec<f64> = lab.iter().map(|&i| pool.targets()[i]).collect();
            ridge_fit(&x.select_rows(lab), &y, spec.sigma)?
        };
        models.push(model);
        selections.push(sel);
    }
    Ok(RunTrace { state, selections, models })
}

fn first_batch(
    pool: &Dataset,
    spec: &StrategySpec,
    state: &mut LabelState,
    seeds: &RunSeeds,
) -> Result<BatchSelection> {
    let flags = spec.flags;
    let init_seed = seeds.seed(Stream::InitClustering, 1);
    if flags.representative_init {
        let mut sel = ebmal_init(pool.features(), pool.ids(), spec.k, spec.gamma, init_seed)?;
        if flags.outlier_blacklist {
            state.blacklist(&sel.newly_blacklisted)?;
        } else {
            sel.newly_blacklisted.clear();
        }
        return Ok(sel);
    }
    let mut flagged = Vec::new();
    if flags.outlier_blacklist {
        // same outlier detection as the representative initialisation,
        // without using its picks
        let probe = ebmal_init(pool.features(), pool.ids(), spec.k, spec.gamma, init_seed)?;
        flagged = probe.newly_blacklisted;
        state.blacklist(&flagged)?;
    }
    let mut sel = select_random(state, spec.k, &mut seeds.rng(Stream::RandomBatch, 1))?;
    sel.newly_blacklisted = flagged;
    Ok(sel)
}

fn later_batch(
    pool: &Dataset,
    spec: &StrategySpec,
    state: &LabelState,
    m: usize,
    seeds: &RunSeeds,
) -> Result<BatchSelection> {
    let scorer = match spec.scorer() {
        Some(s) if state.labeled().len() >= 2 => s,
        _ => return select_random(state, spec.k, &mut seeds.rng(Stream::RandomBatch, m)),
    };
    let candidates: Vec<usize> = state.unlabeled().iter().copied().collect();
    let scores = score_candidates(
        scorer,
        pool,
        state.labeled(),
        &candidates,
        spec.committee_size,
        spec.sigma,
        &mut seeds.rng(Stream::Bootstrap, m),
    )?;
    if spec.flags.diversity {
        ebmal_select(
            pool.features(),
            pool.ids(),
            &candidates,
            &scores,
            spec.k,
            seeds.seed(Stream::DiversityClustering, m),
        )
    } else {
        select_top_k(&candidates, &scores, pool.ids(), spec.k)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn seq_ids(n: usize) -> Vec<SampleId> {
        (0..n as u64).map(SampleId).collect()
    }

    #[test]
    fn names_round_trip() {
        for name in ["bl", "qbc", "eqbc", "emcm", "eemcm", "eemcm1", "eemcm2", "eemcm3", "eqbc1", "eqbc2", "eqbc3"] {
            let s: StrategySpec = name.parse().unwrap();
            assert_eq!(s.name(), name);
        }
        assert!("eemcm4".parse::<StrategySpec>().is_err());
        assert!("foo".parse::<StrategySpec>().is_err());
        let s = StrategySpec::new(
            Base::Qbc,
            EnhancementFlags { representative_init: true, diversity: true, ..EnhancementFlags::NONE },
        );
        assert_eq!(s.name(), "qbc+init+diversity");
    }

    #[test]
    fn random_exhausts_small_pool() {
        let mut st = LabelState::new(5);
        st.label_batch(&[0, 1]).unwrap();
        let sel = select_random(&st, 5, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        let mut c = sel.chosen.clone();
        c.sort();
        assert_eq!(c, vec![2, 3, 4]);
        st.label_batch(&[2, 3, 4]).unwrap();
        assert!(matches!(select_random(&st, 1, &mut ChaCha8Rng::seed_from_u64(0)), Err(Error::NoCandidates)));
    }

    #[test]
    fn random_is_seeded() {
        let st = LabelState::new(50);
        let a = select_random(&st, 5, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        let b = select_random(&st, 5, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn top_k_examples() {
        let ids = seq_ids(3);
        let sel = select_top_k(&[0, 1, 2], &[0.1, 0.9, 0.5], &ids, 2).unwrap();
        assert_eq!(sel.chosen, vec![1, 2]);
        let sel = select_top_k(&[2, 0, 1], &[0.3, 0.3, 0.3], &ids, 2).unwrap();
        assert_eq!(sel.chosen, vec![0, 1]);
        let sel = select_top_k(&[0, 1], &[0.3, 0.5], &ids, 5).unwrap();
        assert_eq!(sel.chosen, vec![1, 0]);
    }

    #[test]
    fn top_k_uses_ids_not_positions() {
        let ids = vec![SampleId(9), SampleId(2), SampleId(5)];
        let sel = select_top_k(&[0, 1, 2], &[1.0, 1.0, 1.0], &ids, 2).unwrap();
        assert_eq!(sel.chosen, vec![1, 2]);
    }

    fn blobs(centres: &[[f64; 2]], per: usize, spread: f64, seed: u64) -> Matrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut rows = Vec::new();
        for c in centres {
            for _ in 0..per {
                rows.push([c[0] + spread * (rng.random::<f64>() - 0.5), c[1] + spread * (rng.random::<f64>() - 0.5)]);
            }
        }
        Matrix::from_rows(&rows).unwrap()
    }

    #[test]
    fn init_on_clean_blobs_picks_one_per_blob() {
        let centres = [[0.0, 0.0], [10.0, 0.0], [0.0, 10.0], [10.0, 10.0], [5.0, 20.0]];
        let x = blobs(&centres, 20, 1.0, 1);
        let sel = ebmal_init(&x, &seq_ids(100), 5, 0.02, 7).unwrap();
        assert!(sel.newly_blacklisted.is_empty());
        let mut blob_of: Vec<usize> = sel.chosen.iter().map(|&p| p / 20).collect();
        blob_of.sort();
        assert_eq!(blob_of, vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn init_blacklists_planted_pair() {
        let mut rows: Vec<[f64; 2]> = Vec::new();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..98 {
            rows.push([rng.random(), rng.random()]);
        }
        rows.push([100.0, 100.0]);
        rows.push([100.01, 100.0]);
        let x = Matrix::from_rows(&rows).unwrap();
        let sel = ebmal_init(&x, &seq_ids(100), 5, 0.02, 3).unwrap();
        let Diagnostics::Init(diag) = &sel.diagnostics else { panic!() };
        assert_eq!(diag.threshold, 2.0);
        assert!(sel.newly_blacklisted.contains(&98) && sel.newly_blacklisted.contains(&99));
        assert!(!sel.chosen.contains(&98) && !sel.chosen.contains(&99));
        assert_eq!(sel.chosen.len(), 5);
    }

    #[test]
    fn init_guard_keeps_k_samples() {
        let x = Matrix::from_rows(&[[0.0], [1.0], [2.0]]).unwrap();
        let sel = ebmal_init(&x, &seq_ids(3), 3, 0.0, 0).unwrap();
        let Diagnostics::Init(diag) = &sel.diagnostics else { panic!() };
        assert!(diag.guard_triggered);
        let mut c = sel.chosen.clone();
        c.sort();
        assert_eq!(c, vec![0, 1, 2]);
        assert!(ebmal_init(&x, &seq_ids(3), 4, 0.0, 0).is_err());
    }

    #[test]
    fn diversity_picks_best_of_each_pair() {
        // k = 3 tight pairs, far apart; the better of each pair alternates
        let x =
            Matrix::from_rows(&[[0.0, 0.0], [0.01, 0.0], [5.0, 0.0], [5.01, 0.0], [0.0, 5.0], [0.0, 5.01]]).unwrap();
        let scores = [0.9, 0.95, 0.5, 0.4, 0.7, 0.8];
        let cands: Vec<usize> = (0..6).collect();
        let sel = ebmal_select(&x, &seq_ids(6), &cands, &scores, 3, 1).unwrap();
        let mut c = sel.chosen.clone();
        c.sort();
        assert_eq!(c, vec![1, 2, 5]);
    }

    #[test]
    fn diversity_with_k1_is_top1() {
        let x = Matrix::from_rows(&[[0.0], [1.0], [3.0], [7.0]]).unwrap();
        let sel = ebmal_select(&x, &seq_ids(4), &[0, 1, 2, 3], &[0.2, 0.1, 0.6, 0.5], 1, 0).unwrap();
        assert_eq!(sel.chosen, vec![2]);
    }

    #[test]
    fn diversity_small_candidate_set() {
        let x = Matrix::from_rows(&[[0.0], [1.0], [3.0]]).unwrap();
        let sel = ebmal_select(&x, &seq_ids(3), &[0, 2], &[0.2, 0.6], 3, 0).unwrap();
        assert_eq!(sel.chosen, vec![2, 0]);
        assert!(matches!(ebmal_select(&x, &seq_ids(3), &[], &[], 3, 0), Err(Error::NoCandidates)));
    }

    #[test]
    fn diversity_equal_scores_take_lowest_id_per_cluster() {
        let x = Matrix::from_rows(&[[0.0], [0.1], [10.0], [10.1]]).unwrap();
        let sel = ebmal_select(&x, &seq_ids(4), &[3, 2, 1, 0], &[1.0; 4], 2, 0).unwrap();
        let mut c = sel.chosen.clone();
        c.sort();
        assert_eq!(c, vec![0, 2]);
    }

    #[test]
    fn validation() {
        let mut s: StrategySpec = "eemcm".parse().unwrap();
        s.k = 0;
        assert!(s.validate().is_err());
        let s = StrategySpec { gamma: 0.5, ..StrategySpec::new(Base::Qbc, EnhancementFlags::NONE) };
        assert!(s.validate().is_err());
        let s = StrategySpec::new(Base::Random, EnhancementFlags::only(3).unwrap());
        assert!(s.validate().is_err());
    }
}
