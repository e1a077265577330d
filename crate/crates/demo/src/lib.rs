//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Each export takes a JSON request string and returns a JSON response. The
//! plain Rust functions behind them are public so they can be tested natively.

use albatch::dataset::{synth_generate, Dataset, SynthConfig};
use albatch::features::{drowsiness_index, moving_average};
use albatch::harness::{learning_curves, run_experiment, ExperimentConfig, Metric};
use albatch::seed::RunSeeds;
use albatch::strategies::{run_strategy, Diagnostics, StrategySpec};
use serde::{Deserialize, Serialize};
use wasm_bindgen::prelude::*;

#[derive(Debug, Deserialize)]
#[serde(default)]
pub struct SelectionRequest {
    pub strategy: String,
    pub n_samples: usize,
    pub outlier_fraction: f64,
    pub k: usize,
    pub batches: usize,
    pub seed: u64,
}

impl Default for SelectionRequest {
    fn default() -> Self {
        Self { strategy: "eemcm".into(), n_samples: 150, outlier_fraction: 0.04, k: 5, batches: 4, seed: 1 }
    }
}

#[derive(Debug, Serialize)]
pub struct SelectionResponse {
    /// `[x0, x1]` per pool sample.
    pub points: Vec<[f64; 2]>,
    pub targets: Vec<f64>,
    /// Batch number (1-based) per sample, 0 when never labeled.
    pub batch: Vec<usize>,
    pub blacklisted: Vec<usize>,
    pub planted_outliers: Vec<usize>,
    /// Centroids of the first-batch clustering, when the strategy has one.
    pub init_centroids: Vec<[f64; 2]>,
}

/// Runs one strategy on a 2-D synthetic pool and reports which samples each
/// batch picked.
pub fn select(req: &SelectionRequest) -> Result<SelectionResponse, String> {
    let spec: StrategySpec = req.strategy.parse().map_err(|e: albatch::Error| e.to_string())?;
    let spec = StrategySpec { k: req.k, ..spec };
    let subject = synth_generate(&SynthConfig {
        n_samples: req.n_samples,
        n_features: 2,
        outlier_fraction: req.outlier_fraction,
        seed: req.seed,
        ..SynthConfig::default()
    })
    .map_err(|e| e.to_string())?;
    let pool: &Dataset = &subject.dataset;
    let trace = run_strategy(pool, &spec, req.batches, &RunSeeds::new(req.seed, 0, 0)).map_err(|e| e.to_string())?;

    let mut batch = vec![0; pool.len()];
    for (m, b) in trace.state.batches().iter().enumerate() {
        for &i in b {
            batch[i] = m + 1;
        }
    }
    let init_centroids = match trace.selections.first().map(|s| &s.diagnostics) {
        Some(Diagnostics::Init(d)) => d.clustering.centroids.row_iter().map(|r| [r[0], r[1]]).collect(),
        _ => Vec::new(),
    };
    let planted_outliers =
        pool.ids().iter().enumerate().filter(|(_, id)| subject.meta.outliers.contains(id)).map(|(i, _)| i).collect();
    Ok(SelectionResponse {
        points: pool.features().row_iter().map(|r| [r[0], r[1]]).collect(),
        targets: pool.targets().to_vec(),
        batch,
        blacklisted: trace.state.blacklisted().iter().copied().collect(),
        planted_outliers,
        init_centroids,
    })
}

#[derive(Debug, Deserialize)]
#[serde(default)]
pub struct CurvesRequest {
    pub strategies: Vec<String>,
    pub subjects: usize,
    pub n_samples: usize,
    pub runs: usize,
    pub batches: usize,
    pub seed: u64,
}

impl Default for CurvesRequest {
    fn default() -> Self {
        Self {
            strategies: vec!["bl".into(), "qbc".into(), "emcm".into(), "eemcm".into()],
            subjects: 3,
            n_samples: 150,
            runs: 4,
            batches: 8,
            seed: 0,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct Series {
    pub strategy: String,
    pub m: Vec<usize>,
    pub rmse: Vec<f64>,
    pub cc: Vec<f64>,
}

/// Mean learning curves on a small synthetic suite.
pub fn curves(req: &CurvesRequest) -> Result<Vec<Series>, String> {
    let strategies = req
        .strategies
        .iter()
        .map(|s| s.parse())
        .collect::<albatch::Result<Vec<StrategySpec>>>()
        .map_err(|e| e.to_string())?;
    let cfg = ExperimentConfig {
        strategies,
        runs: req.runs,
        batches: req.batches,
        master_seed: req.seed,
        ..Default::default()
    };
    let subjects = (0..req.subjects)
        .map(|i| {
            let s =
                SynthConfig { n_samples: req.n_samples, seed: req.seed.wrapping_add(i as u64), ..Default::default() };
            synth_generate(&s).map(|s| s.dataset)
        })
        .collect::<albatch::Result<Vec<_>>>()
        .map_err(|e| e.to_string())?;
    let names: Vec<String> = (0..subjects.len()).map(|i| format!("s{i}")).collect();
    let rt = run_experiment(&cfg, &subjects, &names).map_err(|e| e.to_string())?;
    let lc = learning_curves(&rt);
    Ok(rt
        .strategies()
        .into_iter()
        .map(|s| {
            let rmse = lc.series(&s, Metric::Rmse);
            Series {
                m: rmse.iter().map(|p| p.0).collect(),
                rmse: rmse.iter().map(|p| p.1).collect(),
                cc: lc.series(&s, Metric::Cc).iter().map(|p| p.1).collect(),
                strategy: s,
            }
        })
        .collect())
}

#[derive(Debug, Deserialize)]
#[serde(default)]
pub struct DrowsinessRequest {
    pub tau0: f64,
    pub window: usize,
    /// Response times to smooth; a grid of the mapping is always returned.
    pub taus: Vec<f64>,
}

impl Default for DrowsinessRequest {
    fn default() -> Self {
        Self { tau0: 1.0, window: 9, taus: Vec::new() }
    }
}

#[derive(Debug, Serialize)]
pub struct DrowsinessResponse {
    pub grid_tau: Vec<f64>,
    pub grid_y: Vec<f64>,
    pub y: Vec<f64>,
    pub smoothed: Vec<f64>,
}

pub fn drowsiness(req: &DrowsinessRequest) -> Result<DrowsinessResponse, String> {
    let grid_tau: Vec<f64> = (0..=200).map(|i| i as f64 * 0.04).collect();
    let index = |t: &f64| drowsiness_index(*t, req.tau0).map_err(|e| e.to_string());
    let grid_y = grid_tau.iter().map(index).collect::<Result<_, _>>()?;
    let y: Vec<f64> = req.taus.iter().map(index).collect::<Result<_, _>>()?;
    // a window longer than the series averages the whole prefix
    let window = req.window.clamp(1, y.len().max(1));
    let smoothed = if y.is_empty() { Vec::new() } else { moving_average(&y, window).map_err(|e| e.to_string())? };
    Ok(DrowsinessResponse { grid_tau, grid_y, y, smoothed })
}

fn call<Q: for<'de> Deserialize<'de>, A: Serialize>(
    request: &str,
    f: impl FnOnce(&Q) -> Result<A, String>,
) -> Result<String, String> {
    let req: Q = serde_json::from_str(request).map_err(|e| format!("bad request: {e}"))?;
    serde_json::to_string(&f(&req)?).map_err(|e| e.to_string())
}

#[wasm_bindgen(js_name = selectBatches)]
pub fn select_batches_js(request: &str) -> Result<String, JsValue> {
    call(request, select).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = learningCurves)]
pub fn learning_curves_js(request: &str) -> Result<String, JsValue> {
    call(request, curves).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = drowsinessCurve)]
pub fn drowsiness_curve_js(request: &str) -> Result<String, JsValue> {
    call(request, drowsiness).map_err(|e| JsValue::from_str(&e))
}
