//! Command-line front end.

use std::ffi::OsString;
use std::fs;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use pcmxbar_core::analysis::{emulate_cohort, fit_drift_per_level, last_second_psd, level_spectra};
use pcmxbar_core::crossbar::Crossbar;
use pcmxbar_core::drift::DriftParams;
use pcmxbar_core::inference::{conductance_snapshot, evaluate_seeds, seed_bands, MappedMlp, MlpModel};
use pcmxbar_core::mapping::{encode_weights, Activation};
use pcmxbar_core::rng;
use pcmxbar_core::Matrix;
use rand::Rng;
use serde::Serialize;

use crate::binfmt::{read_matrix, write_matrix};
use crate::config::Config;
use crate::error::{AppError, AppResult};
use crate::idx::{default_mnist_dir, load_mnist, Split};
use crate::model::{load_model, save_model};
use crate::tracestore::{read_store, write_store};
use crate::train::{reference_accuracy, train_mlp, TrainConfig};

/// Exit code for unknown subcommands and malformed arguments.
pub const EXIT_USAGE: i32 = 64;

#[derive(Debug, Parser)]
#[command(name = "pcmxbar", version, about = "PCM crossbar emulator")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Global {
    /// Master seed; overrides the config file.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// JSON configuration (`"schema": 1`).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Emulate one device and store its trace.
    CellTrace(CellTraceArgs),
    /// Emulate a multi-level device cohort.
    Cohort(CohortArgs),
    /// Fit the drift exponent of every level of a trace store.
    FitDrift(InputArgs),
    /// Fit the 1/f coefficient of every level of a trace store.
    FitPsd(InputArgs),
    /// Encode weights (or a whole model) into target conductances.
    Encode(EncodeArgs),
    /// One crossbar multiply from files.
    Mvm(MvmArgs),
    /// Accuracy of a model over emulated time.
    Infer(InferArgs),
    /// Conductance histograms of a programmed model.
    Snapshot(SnapshotArgs),
    /// Crossbar and inference throughput.
    Bench(BenchArgs),
    /// Train a reference model on MNIST.
    Train(TrainArgs),
}

#[derive(Debug, Args)]
pub struct CellTraceArgs {
    /// Programmed conductance, µS.
    #[arg(long, default_value_t = 10.0)]
    pub g0: f64,
    /// Fixed drift exponent (otherwise drawn from the config distribution).
    #[arg(long)]
    pub nu: Option<f64>,
    /// Read duration, s.
    #[arg(long)]
    pub duration: Option<f64>,
    /// Sampling rate, Hz.
    #[arg(long)]
    pub fs: Option<f64>,
    #[arg(long)]
    pub no_noise: bool,
}

#[derive(Debug, Args)]
pub struct CohortArgs {
    /// Comma-separated target levels, µS.
    #[arg(long, value_delimiter = ',')]
    pub levels: Option<Vec<f64>>,
    #[arg(long)]
    pub devices: Option<usize>,
    #[arg(long)]
    pub duration: Option<f64>,
    #[arg(long)]
    pub fs: Option<f64>,
    #[arg(long)]
    pub no_noise: bool,
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Trace store directory.
    #[arg(long)]
    pub input: PathBuf,
}

#[derive(Debug, Args)]
pub struct EncodeArgs {
    /// Raw weight matrix (XBARG1, outputs × inputs).
    #[arg(long, conflicts_with = "model")]
    pub weights: Option<PathBuf>,
    /// Model directory; encodes the full two-layer layout.
    #[arg(long)]
    pub model: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MvmArgs {
    /// Target conductances (XBARG1, rows × cols, µS).
    #[arg(long)]
    pub conductances: PathBuf,
    /// Row voltages (XBARG1, rows × batch, V).
    #[arg(long)]
    pub voltages: PathBuf,
    /// Emulated time, s (default t0).
    #[arg(long)]
    pub t: Option<f64>,
    #[arg(long)]
    pub no_noise: bool,
}

#[derive(Debug, Args)]
pub struct InferArgs {
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub mnist: Option<PathBuf>,
    /// Evaluate only the first N test images.
    #[arg(long)]
    pub limit: Option<usize>,
    /// Number of seeds, starting at the run seed.
    #[arg(long)]
    pub seeds: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SnapshotArgs {
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Comma-separated emulated times, s.
    #[arg(long, value_delimiter = ',')]
    pub t: Option<Vec<f64>>,
    #[arg(long)]
    pub bins: Option<usize>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, default_value_t = 1034)]
    pub rows: usize,
    #[arg(long, default_value_t = 520)]
    pub cols: usize,
    #[arg(long, default_value_t = 256)]
    pub batch: usize,
    #[arg(long, default_value_t = 3)]
    pub iters: usize,
    /// Model for the pipelined inference benchmark (random weights if absent).
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub no_noise: bool,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub mnist: Option<PathBuf>,
    #[arg(long, default_value_t = 5)]
    pub epochs: usize,
    #[arg(long, default_value_t = 250)]
    pub hidden: usize,
    #[arg(long, default_value_t = 0.1)]
    pub lr: f32,
    #[arg(long, default_value_t = 32)]
    pub batch: usize,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::CellTrace(_) => "cell-trace",
            Command::Cohort(_) => "cohort",
            Command::FitDrift(_) => "fit-drift",
            Command::FitPsd(_) => "fit-psd",
            Command::Encode(_) => "encode",
            Command::Mvm(_) => "mvm",
            Command::Infer(_) => "infer",
            Command::Snapshot(_) => "snapshot",
            Command::Bench(_) => "bench",
            Command::Train(_) => "train",
        }
    }
}

/// Machine-readable record written next to every command's outputs.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub seed: u64,
    pub config_hash: String,
    pub threads: usize,
    pub wall_time_s: f64,
    pub outputs: Vec<String>,
}

struct Ctx {
    cfg: Config,
    seed: u64,
    out: PathBuf,
    outputs: Vec<String>,
}

impl Ctx {
    fn path(&mut self, name: &str) -> PathBuf {
        self.outputs.push(name.to_string());
        self.out.join(name)
    }

    fn csv(&mut self, name: &str, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> AppResult<()> {
        let path = self.path(name);
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(header)?;
        for r in rows {
            w.write_record(r)?;
        }
        w.flush().map_err(|e| AppError::io(&path, e))
    }

    fn json(&mut self, name: &str, value: &impl Serialize) -> AppResult<()> {
        let path = self.path(name);
        let text = serde_json::to_string_pretty(value).expect("report serialises");
        fs::write(&path, text + "\n").map_err(|e| AppError::io(&path, e))
    }

    fn model_dir(&self, flag: &Option<PathBuf>) -> AppResult<PathBuf> {
        flag.clone()
            .or_else(|| self.cfg.infer.model.clone())
            .ok_or_else(|| AppError::Config("no model given (--model or infer.model)".into()))
    }

    fn mnist_dir(&self, flag: &Option<PathBuf>) -> AppResult<PathBuf> {
        flag.clone()
            .or_else(|| self.cfg.infer.mnist_dir.clone())
            .or_else(default_mnist_dir)
            .ok_or_else(|| AppError::Data("MNIST directory not found (--mnist or $PCMXBAR_MNIST_DIR)".into()))
    }

    fn drift(&self) -> AppResult<DriftParams> {
        self.cfg.drift_params()
    }
}

/// Parses `argv` and runs the command; returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(cli: Cli) -> AppResult<()> {
    let start = Instant::now();
    let cfg = match &cli.global.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    let seed = cli.global.seed.or(cfg.seed).unwrap_or(0);
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.global.threads {
        if n == 0 {
            return Err(AppError::Config("--threads must be at least 1".into()));
        }
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| AppError::Config(e.to_string()))?;
    fs::create_dir_all(&cli.global.out).map_err(|e| AppError::io(&cli.global.out, e))?;
    let mut ctx = Ctx {
        cfg,
        seed,
        out: cli.global.out.clone(),
        outputs: Vec::new(),
    };
    pool.install(|| dispatch(&mut ctx, &cli.command))?;
    let manifest = RunManifest {
        tool: "pcmxbar",
        version: env!("CARGO_PKG_VERSION"),
        command: cli.command.name(),
        seed,
        config_hash: ctx.cfg.hash(),
        threads: pool.current_num_threads(),
        wall_time_s: start.elapsed().as_secs_f64(),
        outputs: ctx.outputs.clone(),
    };
    ctx.json("manifest.json", &manifest)
}

fn dispatch(ctx: &mut Ctx, cmd: &Command) -> AppResult<()> {
    match cmd {
        Command::CellTrace(a) => cell_trace(ctx, a),
        Command::Cohort(a) => cohort(ctx, a),
        Command::FitDrift(a) => fit_drift(ctx, a),
        Command::FitPsd(a) => fit_psd(ctx, a),
        Command::Encode(a) => encode(ctx, a),
        Command::Mvm(a) => mvm(ctx, a),
        Command::Infer(a) => infer(ctx, a),
        Command::Snapshot(a) => snapshot(ctx, a),
        Command::Bench(a) => bench(ctx, a),
        Command::Train(a) => train(ctx, a),
    }
}

fn store_dir(ctx: &mut Ctx) -> PathBuf {
    ctx.outputs.push("store.json".into());
    ctx.out.clone()
}

fn cell_trace(ctx: &mut Ctx, a: &CellTraceArgs) -> AppResult<()> {
    let mut params = ctx.cfg.cohort_params(ctx.seed)?;
    if let Some(nu) = a.nu {
        params.drift = DriftParams::new(nu, 0.0, params.drift.t0)?;
    }
    params.enable_noise &= !a.no_noise;
    let duration = a.duration.unwrap_or(ctx.cfg.cohort.duration);
    let fs = a.fs.unwrap_or(ctx.cfg.noise.fs);
    let store = emulate_cohort(&[a.g0], 1, duration, fs, &params)?;
    write_store(&store_dir(ctx), &store)?;
    let d = &store.levels[0].devices[0];
    println!(
        "device at {} µS, nu = {:.4}: {} decimated samples, {} tail samples",
        a.g0,
        d.nu,
        d.g.len(),
        d.tail.len()
    );
    Ok(())
}

fn cohort(ctx: &mut Ctx, a: &CohortArgs) -> AppResult<()> {
    let mut params = ctx.cfg.cohort_params(ctx.seed)?;
    params.enable_noise &= !a.no_noise;
    let levels = a.levels.clone().unwrap_or_else(|| ctx.cfg.cohort.levels.clone());
    let devices = a.devices.unwrap_or(ctx.cfg.cohort.devices_per_level);
    let duration = a.duration.unwrap_or(ctx.cfg.cohort.duration);
    let fs = a.fs.unwrap_or(ctx.cfg.noise.fs);
    let store = emulate_cohort(&levels, devices, duration, fs, &params)?;
    write_store(&store_dir(ctx), &store)?;
    println!("{} levels x {devices} devices over {duration} s at {fs} Hz", levels.len());
    Ok(())
}

fn fit_drift(ctx: &mut Ctx, a: &InputArgs) -> AppResult<()> {
    let store = read_store(&a.input)?;
    let fits = fit_drift_per_level(&store)?;
    for f in &fits {
        println!("level {} µS: nu_hat = {:.4}, g0_hat = {:.4} µS", f.level, f.fit.nu_hat, f.fit.g0_hat);
    }
    ctx.csv(
        "drift_fit.csv",
        &["level", "nu_hat", "g0_hat"],
        fits.iter()
            .map(|f| vec![f.level.to_string(), f.fit.nu_hat.to_string(), f.fit.g0_hat.to_string()]),
    )
}

fn fit_psd(ctx: &mut Ctx, a: &InputArgs) -> AppResult<()> {
    let store = read_store(&a.input)?;
    let fits = last_second_psd(&store)?;
    for f in &fits {
        println!("level {} µS: Q_hat = {:.3e}, gamma_hat = {:.3}", f.level, f.q_hat, f.gamma_hat);
    }
    ctx.csv(
        "psd_fit.csv",
        &["level", "q_hat", "gamma_hat"],
        fits.iter()
            .map(|f| vec![f.level.to_string(), f.q_hat.to_string(), f.gamma_hat.to_string()]),
    )?;
    for (k, (_, psd)) in level_spectra(&store)?.iter().enumerate() {
        let (f, p) = psd.positive();
        ctx.csv(
            &format!("psd_level_{k:02}.csv"),
            &["freq", "psd"],
            f.iter().zip(p).map(|(f, p)| vec![f.to_string(), p.to_string()]),
        )?;
    }
    Ok(())
}

#[derive(Serialize)]
struct EncodeReport {
    rows: usize,
    cols: usize,
    scales: Vec<f64>,
}

fn encode(ctx: &mut Ctx, a: &EncodeArgs) -> AppResult<()> {
    let mapping = ctx.cfg.mapping()?;
    let (g, scales) = match (&a.weights, &a.model) {
        (Some(w), None) => {
            let e = encode_weights(&read_matrix(w)?, &mapping)?;
            (e.g, vec![e.scale])
        }
        (None, Some(m)) => {
            let mapped = MappedMlp::new(load_model(m)?, mapping)?;
            (mapped.conductances, mapped.scales.to_vec())
        }
        _ => return Err(AppError::Config("give exactly one of --weights or --model".into())),
    };
    write_matrix(&ctx.path("conductances.xbarg"), &g)?;
    println!("{}x{} conductances, scale {:?} µS per unit", g.rows(), g.cols(), scales);
    ctx.json(
        "encode.json",
        &EncodeReport {
            rows: g.rows(),
            cols: g.cols(),
            scales,
        },
    )
}

fn mvm(ctx: &mut Ctx, a: &MvmArgs) -> AppResult<()> {
    let g = read_matrix(&a.conductances)?;
    let v = read_matrix(&a.voltages)?;
    if v.rows() != g.rows() {
        return Err(AppError::Data(format!(
            "{} voltage rows for a crossbar with {} rows",
            v.rows(),
            g.rows()
        )));
    }
    let mut cfg = ctx.cfg.crossbar(g.rows(), g.cols(), ctx.seed)?;
    cfg.enable_noise &= !a.no_noise;
    let mut x = Crossbar::new(cfg)?;
    x.load_conductances(&g, &ctx.drift()?)?;
    let t = a.t.unwrap_or(x.t0());
    let i = x.mvm_batch(&v, t)?;
    write_matrix(&ctx.path("currents.xbarg"), &i)?;
    ctx.csv(
        "currents.csv",
        &["column", "lane", "current_a"],
        (0..i.rows()).flat_map(|c| {
            let row = i.row(c).to_vec();
            row.into_iter()
                .enumerate()
                .map(move |(b, v)| vec![c.to_string(), b.to_string(), v.to_string()])
        }),
    )?;
    println!("{} columns x {} lanes at t = {t} s", i.rows(), i.cols());
    Ok(())
}

#[derive(Serialize)]
struct InferReport {
    n_images: usize,
    seeds: Vec<u64>,
    float_accuracy: f64,
    time_points: Vec<f64>,
}

fn infer(ctx: &mut Ctx, a: &InferArgs) -> AppResult<()> {
    let model = load_model(&ctx.model_dir(&a.model)?)?;
    let mut test = load_mnist(&ctx.mnist_dir(&a.mnist)?, Split::Test)?;
    if let Some(n) = a.limit.or(ctx.cfg.infer.limit) {
        test = test.head(n);
    }
    let n_seeds = a.seeds.or(ctx.cfg.infer.seeds).unwrap_or(1);
    if n_seeds == 0 {
        return Err(AppError::Config("at least one seed is required".into()));
    }
    let seeds: Vec<u64> = (0..n_seeds as u64).map(|k| ctx.seed.wrapping_add(k)).collect();
    let (float_accuracy, _) = reference_accuracy(&model, &test)?;
    let mapped = MappedMlp::new(model, ctx.cfg.mapping()?)?;
    let base = ctx.cfg.crossbar(mapped.layout.rows, mapped.layout.cols, ctx.seed)?;
    let schedule = ctx.cfg.schedule()?;
    let tables = evaluate_seeds(
        &mapped,
        &base,
        &ctx.drift()?,
        &schedule,
        &test.images,
        &test.labels,
        &seeds,
    )?;
    ctx.csv(
        "accuracy.csv",
        &["t_seconds", "accuracy", "n_images", "seed"],
        tables.iter().flat_map(|t| {
            t.rows.iter().map(move |r| {
                vec![
                    r.t.to_string(),
                    r.accuracy.to_string(),
                    r.n_images.to_string(),
                    t.seed.to_string(),
                ]
            })
        }),
    )?;
    let bands = seed_bands(&tables)?;
    ctx.csv(
        "accuracy_band.csv",
        &["t_seconds", "mean", "std", "median", "min", "max"],
        bands.iter().map(|b| {
            [b.t, b.mean, b.std, b.median, b.min, b.max]
                .iter()
                .map(|v| v.to_string())
                .collect()
        }),
    )?;
    println!("float accuracy {:.4} on {} images", float_accuracy, test.len());
    for b in &bands {
        println!("t = {:>12.6e} s  accuracy {:.4} ± {:.4}", b.t, b.mean, b.std);
    }
    ctx.json(
        "infer.json",
        &InferReport {
            n_images: test.len(),
            seeds,
            float_accuracy,
            time_points: schedule.time_points,
        },
    )
}

fn snapshot(ctx: &mut Ctx, a: &SnapshotArgs) -> AppResult<()> {
    let mapped = MappedMlp::new(load_model(&ctx.model_dir(&a.model)?)?, ctx.cfg.mapping()?)?;
    let base = ctx.cfg.crossbar(mapped.layout.rows, mapped.layout.cols, ctx.seed)?;
    let x = mapped.build_crossbar(&base, &ctx.drift()?)?;
    let times = a.t.clone().unwrap_or_else(|| ctx.cfg.snapshot.times.clone());
    let bins = a.bins.unwrap_or(ctx.cfg.snapshot.bins);
    let groups = ctx.cfg.groups()?;
    let mut means = Vec::new();
    for (k, &t) in times.iter().enumerate() {
        let hist = conductance_snapshot(&x, t, bins, &groups)?;
        let mut rows = Vec::new();
        for (gi, h) in hist.iter().enumerate() {
            for (b, c) in h.counts.iter().enumerate() {
                rows.push(vec![
                    gi.to_string(),
                    h.edges[b].to_string(),
                    h.edges[b + 1].to_string(),
                    c.to_string(),
                ]);
            }
            means.push(vec![
                t.to_string(),
                gi.to_string(),
                h.group.lo.to_string(),
                h.group.hi.to_string(),
                h.count.to_string(),
                h.mean.to_string(),
            ]);
            println!("t = {t:e} s group {gi}: {} devices, mean {:.4} µS", h.count, h.mean);
        }
        ctx.csv(
            &format!("histogram_{k:02}.csv"),
            &["group", "bin_left", "bin_right", "count"],
            rows,
        )?;
    }
    ctx.csv(
        "group_means.csv",
        &["t_seconds", "group", "lo", "hi", "count", "mean"],
        means,
    )
}

#[derive(Serialize)]
struct BenchReport {
    rows: usize,
    cols: usize,
    batch: usize,
    iters: usize,
    threads: usize,
    noise: bool,
    us_per_mvm: f64,
    mvm_per_s: f64,
    inference_images_per_s: Option<f64>,
}

fn random_matrix(rows: usize, cols: usize, seed: u64, stream: u64, lo: f64, hi: f64) -> Matrix {
    let mut r = rng::substream(seed, 0x6265_6e63_685f_7631, stream, 0);
    Matrix::from_fn(rows, cols, |_, _| r.random_range(lo..hi))
}

fn bench(ctx: &mut Ctx, a: &BenchArgs) -> AppResult<()> {
    if a.iters == 0 || a.batch == 0 {
        return Err(AppError::Config("iters and batch must be positive".into()));
    }
    let drift = ctx.drift()?;
    let mut cfg = ctx.cfg.crossbar(a.rows, a.cols, ctx.seed)?;
    cfg.enable_noise &= !a.no_noise;
    let noise = cfg.enable_noise;
    let mut x = Crossbar::new(cfg.clone())?;
    x.load_conductances(&random_matrix(a.rows, a.cols, ctx.seed, 0, 0.0, 5.0), &drift)?;
    let v = random_matrix(a.rows, a.batch, ctx.seed, 1, 0.0, 0.2);
    let t = 3600.0;
    let start = Instant::now();
    for _ in 0..a.iters {
        x.mvm_batch(&v, t)?;
    }
    let per_mvm = start.elapsed().as_secs_f64() / (a.iters * a.batch) as f64;

    let model = match &a.model {
        Some(m) => Some(load_model(m)?),
        None => {
            let (i, h, o) = (784, 250, 10);
            (a.rows == i + h && a.cols == 2 * h + 2 * o).then(|| {
                let w1 = random_matrix(h, i, ctx.seed, 2, -1.0, 1.0);
                let w2 = random_matrix(o, h, ctx.seed, 3, -1.0, 1.0);
                MlpModel::new(w1, w2, [Activation::Relu, Activation::Identity], [1.0, 10.0])
                    .expect("valid random model")
            })
        }
    };
    let images_per_s = match model {
        Some(m) => {
            let mapped = MappedMlp::new(m, ctx.cfg.mapping()?)?;
            let mut xi = mapped.build_crossbar(&cfg, &drift)?;
            let imgs = random_matrix(a.batch, mapped.layout.layer1.rows.len(), ctx.seed, 4, 0.0, 1.0);
            let start = Instant::now();
            for _ in 0..a.iters {
                mapped.forward_batch(&mut xi, &imgs, &[t])?;
            }
            Some((a.iters * a.batch) as f64 / start.elapsed().as_secs_f64())
        }
        None => None,
    };
    let report = BenchReport {
        rows: a.rows,
        cols: a.cols,
        batch: a.batch,
        iters: a.iters,
        threads: rayon::current_num_threads(),
        noise,
        us_per_mvm: per_mvm * 1e6,
        mvm_per_s: 1.0 / per_mvm,
        inference_images_per_s: images_per_s,
    };
    println!(
        "{}x{} crossbar, batch {}, {} threads, noise {}: {:.1} µs/MVM ({:.0} MVM/s)",
        a.rows,
        a.cols,
        a.batch,
        report.threads,
        if noise { "on" } else { "off" },
        report.us_per_mvm,
        report.mvm_per_s
    );
    if let Some(ips) = images_per_s {
        println!("pipelined two-layer inference: {ips:.0} images/s");
    }
    ctx.json("bench.json", &report)
}

fn train(ctx: &mut Ctx, a: &TrainArgs) -> AppResult<()> {
    let dir = ctx.mnist_dir(&a.mnist)?;
    let train_set = load_mnist(&dir, Split::Train)?;
    let test = load_mnist(&dir, Split::Test)?;
    let cfg = TrainConfig {
        hidden: a.hidden,
        epochs: a.epochs,
        batch: a.batch,
        learning_rate: a.lr,
        seed: ctx.seed,
    };
    let model = train_mlp(&train_set, 10, &cfg)?;
    let (acc, _) = reference_accuracy(&model, &test)?;
    println!("test accuracy {acc:.4}, hidden calibration {:.4}", model.input_scales[1]);
    let path = ctx.path("model");
    save_model(&path, &model, Some(acc))?;
    Ok(())
}
