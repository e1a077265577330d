use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use albatch::config::{parse_strategies, ConfigFile, KEYS};
use albatch::dataset::Dataset;
use albatch::features::{
    build_feature_dataset, read_response_times, BandPowerTable, DEFAULT_SMOOTHING_WINDOW, DEFAULT_TAU0,
    DEFAULT_VARIANCE_KEPT,
};
use albatch::harness::{learning_curves, run_experiment, write_improvements, Metric, ResultsTable};
use albatch::stats::{comparison_table, FdrFamily, Sidedness, StatsOptions, DEFAULT_ALPHA, REPORTED_PAIRS};
use albatch::Error;
use clap::{Args, Parser, Subcommand, ValueEnum};

fn config_keys_help() -> String {
    let mut s = String::from("Config file keys (`key = value`, `#` starts a comment):\n");
    for k in KEYS {
        s.push_str(&format!("  {:<17} {} [default: {}]\n", k.key, k.help, k.default));
    }
    s
}

#[derive(Parser)]
#[command(name = "albatch", version, about = "Batch-mode active learning for regression benchmarks")]
#[command(after_long_help = config_keys_help())]
struct Cli {
    /// Worker threads for the benchmark (defaults to all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Setup {
    /// `key = value` configuration file; see `albatch --help` for keys.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Master seed; overrides `master_seed` from the config.
    #[arg(long, env = "ALBATCH_SEED")]
    seed: Option<u64>,
}

impl Setup {
    fn load(&self) -> albatch::Result<ConfigFile> {
        let mut cfg = match &self.config {
            Some(p) => ConfigFile::load(p)?,
            None => ConfigFile::default(),
        };
        if let Some(s) = self.seed {
            cfg.experiment.master_seed = s;
        }
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic suite as subject_<i>.csv plus meta.csv.
    Synth {
        #[command(flatten)]
        setup: Setup,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run every strategy on every subject and write results, curves and improvements.
    Run {
        #[command(flatten)]
        setup: Setup,
        /// Directory of subject CSVs (`id,x0..,y`); a synthetic suite is generated when absent.
        #[arg(long)]
        data: Option<PathBuf>,
        /// Comma-separated strategy names, e.g. `bl,emcm,eemcm`.
        #[arg(long)]
        strategies: Option<String>,
        /// Pool draws per subject.
        #[arg(long)]
        runs: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Dunn tests with FDR control on a results table.
    Stats {
        #[arg(long)]
        results: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Which p-values are adjusted together.
        #[arg(long, value_enum, default_value_t = Family::PerBatch)]
        fdr_family: Family,
        /// Test for any difference instead of the first strategy being better.
        #[arg(long)]
        two_sided: bool,
        #[arg(long, default_value_t = DEFAULT_ALPHA)]
        alpha: f64,
    },
    /// Learning curves and percentage improvements from a results table.
    Curves {
        #[arg(long)]
        results: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Turn band powers and response times into a subject CSV.
    Features {
        /// `epoch,ch_<name>,...` band powers (linear units).
        #[arg(long)]
        band_powers: PathBuf,
        /// `epoch,tau` response times in seconds.
        #[arg(long)]
        response_times: PathBuf,
        /// Alert response time.
        #[arg(long, default_value_t = DEFAULT_TAU0)]
        tau0: f64,
        /// Trailing moving-average window in samples.
        #[arg(long, default_value_t = DEFAULT_SMOOTHING_WINDOW)]
        window: usize,
        /// Share of variance the kept components must explain.
        #[arg(long, default_value_t = DEFAULT_VARIANCE_KEPT)]
        variance: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    PerBatch,
    WholeTable,
}

fn create_dir(dir: &Path) -> albatch::Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::Io { path: dir.into(), source: e })
}

fn create(path: &Path) -> albatch::Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::Io { path: path.into(), source: e })
}

fn open(path: &Path) -> albatch::Result<File> {
    File::open(path).map_err(|e| Error::Io { path: path.into(), source: e })
}

fn synth(setup: &Setup, out: &Path) -> albatch::Result<()> {
    let cfg = setup.load()?;
    let suite = cfg.synth_suite()?;
    create_dir(out)?;
    let mut meta = String::from("subject,field,value\n");
    for (i, s) in suite.iter().enumerate() {
        s.dataset.save_csv(&out.join(format!("subject_{i}.csv")))?;
        for (j, w) in s.meta.weights.iter().enumerate() {
            meta.push_str(&format!("{i},w{j},{w:?}\n"));
        }
        meta.push_str(&format!("{i},bias,{:?}\n", s.meta.bias));
        for id in &s.meta.outliers {
            meta.push_str(&format!("{i},outlier,{}\n", id.0));
        }
    }
    let path = out.join("meta.csv");
    fs::write(&path, meta).map_err(|e| Error::Io { path, source: e })?;
    eprintln!("wrote {} subjects to {}", suite.len(), out.display());
    Ok(())
}

/// Loads every `*.csv` in `dir` except meta.csv, sorted by file name.
fn load_subjects(dir: &Path) -> albatch::Result<(Vec<Dataset>, Vec<String>)> {
    let entries = fs::read_dir(dir).map_err(|e| Error::Io { path: dir.into(), source: e })?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "csv") && p.file_name().is_some_and(|n| n != "meta.csv"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(Error::InvalidInput(format!("no subject CSVs in {}", dir.display())));
    }
    let names = paths.iter().map(|p| p.file_stem().unwrap_or_default().to_string_lossy().into_owned()).collect();
    let data = paths.iter().map(|p| Dataset::load_csv(p)).collect::<albatch::Result<_>>()?;
    Ok((data, names))
}

fn write_curves(rt: &ResultsTable, out: &Path) -> albatch::Result<()> {
    let curves = learning_curves(rt);
    curves.save_csv(&out.join("curves.csv"))?;
    write_improvements(&curves, &REPORTED_PAIRS, create(&out.join("improvement.csv"))?)
}

fn run(
    setup: &Setup,
    data: Option<&Path>,
    strategies: Option<&str>,
    runs: Option<usize>,
    out: &Path,
) -> albatch::Result<()> {
    let mut cfg = setup.load()?;
    if let Some(list) = strategies {
        cfg.experiment.strategies = parse_strategies(list)?;
    }
    if let Some(r) = runs {
        cfg.experiment.runs = r;
    }
    let (subjects, names) = match data {
        Some(dir) => load_subjects(dir)?,
        None => {
            let suite = cfg.synth_suite()?;
            let names = (0..suite.len()).map(|i| format!("subject_{i}")).collect();
            (suite.into_iter().map(|s| s.dataset).collect(), names)
        }
    };
    let rt = run_experiment(&cfg.experiment, &subjects, &names)?;
    create_dir(out)?;
    rt.save_csv(&out.join("results.csv"))?;
    write_curves(&rt, out)?;
    eprintln!("{} rows written to {}", rt.len(), out.display());
    Ok(())
}

fn stats(results: &Path, out: &Path, opts: &StatsOptions) -> albatch::Result<()> {
    let rt = ResultsTable::load_csv(results)?;
    create_dir(out)?;
    for metric in Metric::ALL {
        let table = comparison_table(&rt, metric, opts)?;
        table.save_csv(&out.join(format!("stats_{metric}.csv")))?;
        println!("{table}");
    }
    Ok(())
}

fn features(
    band_powers: &Path,
    response_times: &Path,
    tau0: f64,
    window: usize,
    variance: f64,
    out: &Path,
) -> albatch::Result<()> {
    let (epochs, powers) = BandPowerTable::read_csv(open(band_powers)?, band_powers)?;
    let (tau_epochs, taus) = read_response_times(open(response_times)?, response_times)?;
    let (ds, report) = build_feature_dataset(&epochs, &powers, &tau_epochs, &taus, tau0, window, variance)?;
    ds.save_csv(out)?;
    eprintln!(
        "{} samples, {} components ({:.1}% variance), rejected channels: {}",
        ds.len(),
        report.n_components,
        100.0 * report.variance_ratio_kept,
        if report.rejected_channels.is_empty() { "none".to_string() } else { report.rejected_channels.join(", ") },
    );
    Ok(())
}

fn dispatch(cli: Cli) -> albatch::Result<()> {
    if let Some(n) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::InvalidInput(format!("--jobs: {e}")))?;
    }
    match cli.command {
        Command::Synth { setup, out } => synth(&setup, &out),
        Command::Run { setup, data, strategies, runs, out } => {
            run(&setup, data.as_deref(), strategies.as_deref(), runs, &out)
        }
        Command::Stats { results, out, fdr_family, two_sided, alpha } => {
            let opts = StatsOptions {
                sidedness: if two_sided { Sidedness::TwoSided } else { Sidedness::OneSided },
                family: match fdr_family {
                    Family::PerBatch => FdrFamily::PerBatch,
                    Family::WholeTable => FdrFamily::WholeTable,
                },
                alpha,
            };
            stats(&results, &out, &opts)
        }
        Command::Curves { results, out } => {
            let rt = ResultsTable::load_csv(&results)?;
            create_dir(&out)?;
            write_curves(&rt, &out)
        }
        Command::Features { band_powers, response_times, tau0, window, variance, out } => {
            features(&band_powers, &response_times, tau0, window, variance, &out)
        }
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_input_error() { 2 } else { 1 })
        }
    }
}
