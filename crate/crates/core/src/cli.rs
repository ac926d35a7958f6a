//! `axlesim` command-line front end.
//!
//! Exit codes: 0 success, 2 invalid input or configuration, 3 numerical
//! failure (divergence, training blow-up, undefined R²), 4 I/O error.
//! `AXLESIM_THREADS` caps the number of worker threads.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::FileConfig;
use crate::dataset::{generate_dataset, vehicle_inputs, Dataset, INPUTS, TARGET_LABELS};
use crate::manifest::{manifest_path, RunManifest};
use crate::plot::{self, CsvTable};
use crate::sensitivity::{
    compute_sensitivity, sobol_first_order, SensitivityMatrix, SimulatorEvaluator, SurrogateEvaluator,
};
use crate::surrogate::{
    dataset_matrices, evaluate, read_checkpoint, train_model, write_checkpoint, write_trace_csv, ModelKind,
};
use crate::{response_metrics, sdpi, simulate, Error, MetricVector, Result, RoadProfile, VehicleParams};

pub const THREADS_ENV: &str = "AXLESIM_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "axlesim",
    version,
    about = "Multi-axle half-car ride simulation and surrogate modelling"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate one vehicle over a road and report its response metrics.
    Simulate(SimulateArgs),
    /// Write a random road profile CSV.
    GenRoad(GenRoadArgs),
    /// Sample vehicle parameters, simulate each and write a training set.
    GenDataset(GenDatasetArgs),
    /// Train an MTL-DBN-DNN or a plain DNN on a dataset CSV.
    Train(TrainArgs),
    /// Parameter sensitivity matrix from a checkpoint or the simulator.
    Sensitivity(SensitivityArgs),
    /// Render PNG charts from CSV outputs.
    Plot(PlotArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// TOML configuration; built-in reference vehicle when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Overrides `[road] seed`.
    #[arg(long)]
    pub road_seed: Option<u64>,
    /// Use a perfectly flat road.
    #[arg(long)]
    pub flat: bool,
    /// Reference vehicle for SDPI; the built-in reference vehicle when omitted.
    #[arg(long)]
    pub baseline: Option<PathBuf>,
    /// Response CSV.
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the metrics block to this file.
    #[arg(long)]
    pub metrics: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GenRoadArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Overrides `[road] seed`.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides the road length in metres.
    #[arg(long)]
    pub length: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct GenDatasetArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Overrides `[sampling] sample_count`.
    #[arg(long)]
    pub samples: Option<usize>,
    /// Worker threads; defaults to the available cores, capped by AXLESIM_THREADS.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Relative half-range applied to every input, overriding `[sampling] ranges`.
    #[arg(long)]
    pub range: Option<f64>,
    /// Overrides `[sampling] seed`.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Dataset CSV.
    #[arg(long)]
    pub out: PathBuf,
    /// Generation report (row count, divergences, timing).
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    Mtl,
    Dnn,
}

impl From<ModelArg> for ModelKind {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Mtl => ModelKind::Mtl,
            ModelArg::Dnn => ModelKind::Dnn,
        }
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Dataset CSV from `gen-dataset`.
    #[arg(long)]
    pub dataset: PathBuf,
    /// TOML configuration whose `[train]` section supplies defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "mtl")]
    pub model: ModelArg,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Fine-tuning learning rate.
    #[arg(long)]
    pub lr: Option<f64>,
    /// Checkpoint file.
    #[arg(long)]
    pub out: PathBuf,
    /// Per-epoch validation trace CSV.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Test-split evaluation report.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SensitivityMode {
    /// One-at-a-time sweeps.
    Oat,
    /// First-order Sobol indices.
    Sobol,
}

#[derive(Debug, Args)]
pub struct SensitivityArgs {
    /// Surrogate checkpoint used as the evaluator.
    #[arg(long, conflicts_with = "exact", required_unless_present = "exact")]
    pub checkpoint: Option<PathBuf>,
    /// Evaluate with the full simulator instead of a surrogate.
    #[arg(long)]
    pub exact: bool,
    /// Baseline vehicle, road and simulation settings.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "oat")]
    pub mode: SensitivityMode,
    /// Points per OAT sweep.
    #[arg(long, default_value_t = 11)]
    pub grid: usize,
    /// Relative half-range of every sweep, overriding `[sampling] ranges`.
    #[arg(long)]
    pub range: Option<f64>,
    /// Base sample count for Sobol mode.
    #[arg(long, default_value_t = 1024)]
    pub samples: usize,
    /// Seed for Sobol mode.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Normalized matrix CSV.
    #[arg(long)]
    pub out: PathBuf,
    /// Heatmap PNG.
    #[arg(long)]
    pub image: Option<PathBuf>,
    /// Text report with column argmaxes and discrepancies.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    #[command(subcommand)]
    pub kind: PlotKind,
}

#[derive(Debug, Subcommand)]
pub enum PlotKind {
    /// Validation MAPE curves. With several traces, compares their `--column`.
    Trace {
        #[arg(long = "trace", required = true)]
        traces: Vec<PathBuf>,
        #[arg(long, default_value = "mape_avg")]
        column: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Heatmap of a sensitivity matrix CSV.
    Heatmap {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Time histories from a response CSV.
    Response {
        #[arg(long)]
        response: PathBuf,
        /// Comma-separated column names.
        #[arg(long, value_delimiter = ',', default_value = "z_s_ddot[m/s^2]")]
        channels: Vec<String>,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Thread cap from `AXLESIM_THREADS`, if set to a positive integer.
pub fn thread_cap() -> Option<usize> {
    std::env::var(THREADS_ENV)
        .ok()?
        .trim()
        .parse()
        .ok()
        .filter(|&n: &usize| n > 0)
}

/// Requested workers (or all cores), never above the environment cap.
pub fn resolve_workers(requested: Option<usize>) -> usize {
    let n = requested.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let n = thread_cap().map_or(n, |cap| n.min(cap));
    n.max(1)
}

fn load_config(path: Option<&Path>) -> Result<FileConfig> {
    match path {
        Some(p) => FileConfig::load(p),
        None => Ok(FileConfig::default()),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path)?))
}

fn start_manifest(manifest: &RunManifest, out: &Path) -> Result<PathBuf> {
    let p = manifest_path(out);
    manifest.write(&p)?;
    Ok(p)
}

fn finish_manifest(mut manifest: RunManifest, path: &Path) -> Result<()> {
    manifest.finish();
    manifest.write(path)
}

fn metrics_block(m: &MetricVector, sdpi: Option<f64>) -> String {
    let mut s = String::new();
    for (name, v) in MetricVector::NAMES.iter().zip(m.to_array()) {
        s.push_str(&format!("{name} = {}\n", crate::fmt::f64_17(v)));
    }
    match sdpi {
        Some(v) => s.push_str(&format!("sdpi = {}\n", crate::fmt::f64_17(v))),
        None => s.push_str("sdpi = undefined (baseline metrics are zero)\n"),
    }
    s
}

fn cmd_simulate(a: &SimulateArgs, argv: &[String]) -> Result<String> {
    let mut cfg = load_config(a.config.as_deref())?;
    if let Some(seed) = a.road_seed {
        cfg.road.spec.seed = seed;
    }
    if a.flat {
        cfg.road.flat = true;
    }
    let vehicle = cfg.vehicle()?;
    let baseline = match &a.baseline {
        Some(p) => FileConfig::load(p)?.vehicle()?,
        None => VehicleParams::reference(),
    };
    let mut manifest = RunManifest::new("simulate", argv.to_vec(), cfg.clone())
        .seed("road", cfg.road.spec.seed)
        .output("response", &a.out);
    if let Some(m) = &a.metrics {
        manifest = manifest.output("metrics", m);
    }
    let mpath = start_manifest(&manifest, &a.out)?;

    let road = cfg.road_profile()?;
    let resp = simulate(&vehicle, &road, &cfg.sim)?;
    resp.write_csv(create(&a.out)?)?;
    let metrics = response_metrics(&resp, &cfg.sim)?.vector();
    let base = response_metrics(&simulate(&baseline, &road, &cfg.sim)?, &cfg.sim)?.vector();
    let index = match sdpi(&metrics, &base) {
        Ok(v) => Some(v),
        Err(Error::Normalization(_)) => None,
        Err(e) => return Err(e),
    };
    let block = metrics_block(&metrics, index);
    if let Some(p) = &a.metrics {
        std::fs::write(p, &block)?;
    }
    finish_manifest(manifest, &mpath)?;
    Ok(block)
}

fn cmd_gen_road(a: &GenRoadArgs, argv: &[String]) -> Result<String> {
    let mut cfg = load_config(a.config.as_deref())?;
    if let Some(seed) = a.seed {
        cfg.road.spec.seed = seed;
    }
    if let Some(len) = a.length {
        cfg.road.spec.length = len;
        cfg.road.auto_length = Some(false);
    }
    let manifest = RunManifest::new("gen-road", argv.to_vec(), cfg.clone())
        .seed("road", cfg.road.spec.seed)
        .output("road", &a.out);
    let mpath = start_manifest(&manifest, &a.out)?;
    let road = crate::road::generate_profile(&cfg.road_spec())?;
    road.write_csv(create(&a.out)?)?;
    finish_manifest(manifest, &mpath)?;
    Ok(format!(
        "samples = {}\nrms = {}\n",
        road.elevations.len(),
        crate::fmt::f64_17(road.rms())
    ))
}

fn cmd_gen_dataset(a: &GenDatasetArgs, argv: &[String]) -> Result<String> {
    let mut cfg = load_config(a.config.as_deref())?;
    if let Some(n) = a.samples {
        cfg.sampling.sample_count = n;
    }
    if let Some(r) = a.range {
        cfg.sampling.ranges = crate::config::ScalarOrList::Scalar(r);
    }
    if let Some(s) = a.seed {
        cfg.sampling.seed = s;
    }
    let spec = cfg.sampling.to_spec()?;
    let baseline = cfg.vehicle()?;
    let workers = resolve_workers(a.workers);
    let mut manifest = RunManifest::new("gen-dataset", argv.to_vec(), cfg.clone())
        .seed("road", cfg.road.spec.seed)
        .seed("sampling", spec.seed)
        .output("dataset", &a.out);
    if let Some(r) = &a.report {
        manifest = manifest.output("report", r);
    }
    manifest.notes.push(format!("workers = {workers}"));
    let mpath = start_manifest(&manifest, &a.out)?;

    let road = cfg.road_profile()?;
    log::info!("simulating {} samples on {workers} workers", spec.sample_count);
    let (ds, report) = generate_dataset(&spec, &baseline, &road, &cfg.sim, workers)?;
    ds.write_csv(create(&a.out)?)?;
    let text = report.render();
    if let Some(p) = &a.report {
        std::fs::write(p, &text)?;
    }
    finish_manifest(manifest, &mpath)?;
    Ok(text)
}

fn cmd_train(a: &TrainArgs, argv: &[String]) -> Result<String> {
    let mut cfg = load_config(a.config.as_deref())?;
    let t = &mut cfg.train.config;
    if let Some(e) = a.epochs {
        t.epochs = e;
    }
    if let Some(b) = a.batch {
        t.batch_size = b;
    }
    if let Some(s) = a.seed {
        t.seed = s;
    }
    if let Some(lr) = a.lr {
        t.finetune_lr = lr;
    }
    t.validate()?;
    cfg.train.arch.validate(crate::dataset::TARGETS)?;
    let mut manifest = RunManifest::new("train", argv.to_vec(), cfg.clone())
        .seed("train", cfg.train.config.seed)
        .output("checkpoint", &a.out);
    manifest.notes.push(format!("dataset = {}", a.dataset.display()));
    manifest
        .notes
        .push(format!("model = {}", ModelKind::from(a.model).as_str()));
    if let Some(p) = &a.trace {
        manifest = manifest.output("trace", p);
    }
    if let Some(p) = &a.report {
        manifest = manifest.output("report", p);
    }
    let mpath = start_manifest(&manifest, &a.out)?;

    let ds = Dataset::read_csv(open(&a.dataset)?)?;
    let model = train_model(a.model.into(), &ds, &cfg.train.arch, &cfg.train.config)?;
    write_checkpoint(&model.net, create(&a.out)?)?;
    if let Some(p) = &a.trace {
        write_trace_csv(&model.trace, crate::dataset::TARGETS, create(p)?)?;
    }

    let mut text = format!(
        "model = {}\nrows = {} (train {}, validation {}, test {})\nepochs = {}\n",
        model.net.kind.as_str(),
        ds.len(),
        model.split.train.len(),
        model.split.validation.len(),
        model.split.test.len(),
        model.trace.len()
    );
    if !model.split.test.is_empty() {
        let (x, y) = dataset_matrices(&ds, &model.split.test);
        let e = evaluate(&model.net, x.view(), y.view())?;
        text.push_str(&format!("test mape_avg = {}\n", crate::fmt::f64_17(e.mape_avg)));
        for (t, label) in TARGET_LABELS.iter().enumerate() {
            let r2 = e.r2[t].map_or("undefined".to_string(), crate::fmt::f64_17);
            text.push_str(&format!(
                "test {label}: mape = {}, r2 = {r2}\n",
                crate::fmt::f64_17(e.mape[t])
            ));
        }
    }
    if let Some(p) = &a.report {
        std::fs::write(p, &text)?;
    }
    finish_manifest(manifest, &mpath)?;
    Ok(text)
}

/// Argmax of each column plus any expected-pattern mismatches.
pub fn sensitivity_report(m: &SensitivityMatrix) -> String {
    let mut s = String::new();
    for (t, label) in TARGET_LABELS.iter().enumerate() {
        let arg = m.column_argmax(t).map_or("none", |p| p.label());
        s.push_str(&format!("{label}: dominant input {arg}\n"));
    }
    let d = m.qualitative_discrepancies();
    if d.is_empty() {
        s.push_str("expected pattern reproduced: a_rms <- m_s, theta_ddot_rms <- I_y\n");
    }
    for msg in d {
        s.push_str(&format!("DISCREPANCY: {msg}\n"));
    }
    s
}

fn cmd_sensitivity(a: &SensitivityArgs, argv: &[String]) -> Result<String> {
    let mut cfg = load_config(a.config.as_deref())?;
    if let Some(r) = a.range {
        cfg.sampling.ranges = crate::config::ScalarOrList::Scalar(r);
    }
    let ranges = cfg.sampling.to_spec()?.ranges;
    let vehicle = cfg.vehicle()?;
    let base: [f64; INPUTS] = vehicle_inputs(&vehicle);
    let mut manifest = RunManifest::new("sensitivity", argv.to_vec(), cfg.clone()).output("matrix", &a.out);
    if a.mode == SensitivityMode::Sobol {
        manifest = manifest.seed("sobol", a.seed);
    }
    if a.exact {
        manifest = manifest.seed("road", cfg.road.spec.seed);
    }
    if let Some(p) = &a.checkpoint {
        manifest.notes.push(format!("checkpoint = {}", p.display()));
    }
    if let Some(p) = &a.image {
        manifest = manifest.output("image", p);
    }
    if let Some(p) = &a.report {
        manifest = manifest.output("report", p);
    }
    let mpath = start_manifest(&manifest, &a.out)?;

    let run = |eval: &dyn crate::sensitivity::Evaluator| match a.mode {
        SensitivityMode::Oat => compute_sensitivity(eval, &base, &ranges, a.grid),
        SensitivityMode::Sobol => sobol_first_order(eval, &base, &ranges, a.samples, a.seed),
    };
    let matrix = if a.exact {
        let road: RoadProfile = cfg.road_profile()?;
        let eval = SimulatorEvaluator::new(vehicle.clone(), &road, cfg.sim.clone())?;
        run(&eval)?
    } else {
        let path = a.checkpoint.as_ref().expect("clap enforces --checkpoint or --exact");
        let net = read_checkpoint(open(path)?)?;
        run(&SurrogateEvaluator(&net))?
    };
    matrix.write_csv(create(&a.out)?)?;
    if let Some(p) = &a.image {
        let title = if a.exact {
            "SENSITIVITY (SIMULATOR)"
        } else {
            "SENSITIVITY (SURROGATE)"
        };
        let img = plot::heatmap_from_csv(open(&a.out)?, title)?;
        plot::save_png(&img, p)?;
    }
    let text = sensitivity_report(&matrix);
    if let Some(p) = &a.report {
        std::fs::write(p, &text)?;
    }
    finish_manifest(manifest, &mpath)?;
    Ok(text)
}

fn cmd_plot(a: &PlotArgs) -> Result<String> {
    match &a.kind {
        PlotKind::Trace { traces, column, out } => {
            let chart = if traces.len() == 1 {
                plot::trace_chart(&CsvTable::load(&traces[0])?, "VALIDATION MAPE")?
            } else {
                let tables = traces
                    .iter()
                    .map(|p| {
                        let label = p
                            .file_stem()
                            .map_or(String::new(), |s| s.to_string_lossy().into_owned());
                        CsvTable::load(p).map(|t| (label, t))
                    })
                    .collect::<Result<Vec<_>>>()?;
                plot::compare_traces(&tables, column, "TRAINING CONVERGENCE")?
            };
            plot::save_png(&chart.render(), out)?;
            Ok(format!("wrote {}\n", out.display()))
        }
        PlotKind::Heatmap { matrix, out } => {
            let img = plot::heatmap_from_csv(open(matrix)?, "SENSITIVITY")?;
            plot::save_png(&img, out)?;
            Ok(format!("wrote {}\n", out.display()))
        }
        PlotKind::Response {
            response,
            channels,
            out,
        } => {
            let table = CsvTable::load(response)?;
            let chart = plot::response_chart(&table, channels, "RESPONSE")?;
            plot::save_png(&chart.render(), out)?;
            Ok(format!("wrote {}\n", out.display()))
        }
    }
}

pub fn execute(cli: &Cli, argv: &[String]) -> Result<String> {
    if let Some(cap) = thread_cap() {
        // Only the first call in a process can size the global pool.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(cap).build_global();
    }
    match &cli.command {
        Command::Simulate(a) => cmd_simulate(a, argv),
        Command::GenRoad(a) => cmd_gen_road(a, argv),
        Command::GenDataset(a) => cmd_gen_dataset(a, argv),
        Command::Train(a) => cmd_train(a, argv),
        Command::Sensitivity(a) => cmd_sensitivity(a, argv),
        Command::Plot(a) => cmd_plot(a),
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code. Output goes to stdout, errors to stderr.
pub fn run<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let args: Vec<String> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli, &args[1.min(args.len())..]) {
        Ok(text) => {
            let mut out = std::io::stdout().lock();
            let _ = out.write_all(text.as_bytes());
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
