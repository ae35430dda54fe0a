use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde_json::json;

use heatload_core::analysis::{acf, cross_correlation, decompose, parcor, rolling_stats};
use heatload_core::datagen::{self, GenConfig};
use heatload_core::pipeline::{
    self, BaselineConfig, ForecastMode, ForecastReport, Method, PipelineConfig, Window, WindowSpec,
    ZeroPolicy,
};
use heatload_core::series::{
    differentiate_shift, format_timestamp, read_csv, write_raw_csv, write_regular_csv, Unit,
};
use heatload_core::{Model, Swarm};

mod config;
mod output;

use config::FileConfig;
use output::{emit, Output};

#[derive(Parser, Debug)]
#[command(name = "heatload", version, about = "Heat-load forecasting on accumulated meter data")]
struct Cli {
    /// Seed for data generation and the particle swarm.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(short, long, global = true)]
    out: Option<PathBuf>,
    /// Overwrite existing outputs.
    #[arg(long, global = true)]
    force: bool,
    /// Worker threads (default: all cores).
    #[arg(long, global = true, value_parser = clap::value_parser!(u16).range(1..))]
    workers: Option<u16>,
    /// `key = value` file; flags take precedence over it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a synthetic dataset.
    Generate(GenerateArgs),
    /// Correlograms, decomposition and rolling statistics of one window.
    Analyze(AnalyzeArgs),
    /// Tune and train one model per window.
    Train(TrainArgs),
    /// 24-hour forecast of one window from a saved model.
    Forecast(ForecastArgs),
    /// Aggregate forecast reports.
    Evaluate(EvaluateArgs),
    /// PSO-kSVR against ARIMA and seasonal naive, per test month.
    Compare(CompareArgs),
}

#[derive(Args, Debug)]
struct GenerateArgs {
    /// default, noiseless or year.
    #[arg(long)]
    preset: Option<String>,
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    days: Option<u32>,
    /// Load noise standard deviation, kWh.
    #[arg(long)]
    noise_stddev: Option<f64>,
}

#[derive(Args, Debug)]
struct DataArgs {
    /// Directory holding consumption.csv and temperature.csv.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    consumption: Option<PathBuf>,
    #[arg(long)]
    temperature: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct AnalyzeArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    window: Option<usize>,
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    max_lag: Option<u32>,
    /// Seasonal period in steps.
    #[arg(long)]
    period: Option<usize>,
    #[arg(long)]
    rolling_window: Option<usize>,
}

#[derive(Args, Debug)]
struct TuneArgs {
    #[arg(long)]
    particles: Option<usize>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    inertia: Option<f64>,
    #[arg(long)]
    c1: Option<f64>,
    #[arg(long)]
    c2: Option<f64>,
    /// KKT tolerance of the SVR solver.
    #[arg(long)]
    svr_tol: Option<f64>,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum ModeArg {
    Recursive,
    OpenLoop,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum ZeroArg {
    Error,
    DynamicRangeOffset,
}

macro_rules! from_str_via_value_enum {
    ($t:ty) => {
        impl FromStr for $t {
            type Err = String;
            fn from_str(s: &str) -> Result<Self, String> {
                <$t as ValueEnum>::from_str(s, true)
            }
        }
    };
}
from_str_via_value_enum!(ModeArg);
from_str_via_value_enum!(ZeroArg);

#[derive(Args, Debug)]
struct ForecastOpts {
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    /// Time shift, in steps, applied when differencing the forecast.
    #[arg(long)]
    tau: Option<usize>,
    #[arg(long, value_enum)]
    zero_policy: Option<ZeroArg>,
}

#[derive(Args, Debug)]
struct TrainArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Train only this window (default: all).
    #[arg(long)]
    window: Option<usize>,
    #[command(flatten)]
    tune: TuneArgs,
    /// Also write the per-iteration tuning trace.
    #[arg(long)]
    trace: bool,
}

#[derive(Args, Debug)]
struct ForecastArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long)]
    window: Option<usize>,
    #[command(flatten)]
    opts: ForecastOpts,
}

#[derive(Args, Debug)]
struct EvaluateArgs {
    /// Report files or directories containing report_*.json.
    #[arg(required = true)]
    reports: Vec<PathBuf>,
}

#[derive(Args, Debug)]
struct CompareArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    tune: TuneArgs,
    #[command(flatten)]
    opts: ForecastOpts,
    #[arg(long)]
    max_p: Option<usize>,
    #[arg(long)]
    max_q: Option<usize>,
}

struct Ctx {
    file: FileConfig,
    seed: Option<u64>,
    effective: serde_json::Map<String, serde_json::Value>,
}

impl Ctx {
    fn note<V: serde::Serialize>(&mut self, key: &str, value: &V) {
        self.effective
            .insert(key.to_string(), serde_json::to_value(value).unwrap_or_default());
    }

    fn data_paths(&mut self, d: &DataArgs) -> Result<(PathBuf, PathBuf)> {
        let dir: Option<PathBuf> = self.file.pick_opt(d.data.clone(), "data")?;
        let from_dir = |name: &str| dir.as_ref().map(|p| p.join(name));
        let c = self
            .file
            .pick_opt(d.consumption.clone(), "consumption")?
            .or_else(|| from_dir("consumption.csv"))
            .ok_or_else(|| anyhow!("no input: pass --data or --consumption/--temperature"))?;
        let t = self
            .file
            .pick_opt(d.temperature.clone(), "temperature")?
            .or_else(|| from_dir("temperature.csv"))
            .ok_or_else(|| anyhow!("no input: pass --data or --consumption/--temperature"))?;
        for p in [&c, &t] {
            if !p.is_file() {
                bail!("input file {} does not exist", p.display());
            }
        }
        self.note("consumption", &c);
        self.note("temperature", &t);
        Ok((c, t))
    }

    fn windows(&mut self, d: &DataArgs) -> Result<Vec<Window<f64>>> {
        let (c, t) = self.data_paths(d)?;
        let open = |p: &Path, unit| -> Result<_> {
            let f = std::fs::File::open(p).with_context(|| format!("opening {}", p.display()))?;
            read_csv::<f64, _>(f, unit).with_context(|| format!("reading {}", p.display()))
        };
        let raw_c = open(&c, Unit::KwhAccumulated)?;
        let raw_t = open(&t, Unit::DegC)?;
        let spec = WindowSpec::default();
        let (acc, temp) = pipeline::align(&raw_c, &raw_t, spec.step)?;
        let windows = pipeline::make_windows(&acc, &temp, &spec)?;
        if windows.is_empty() {
            bail!(
                "inputs cover {} hourly points; one window needs {}",
                acc.len(),
                spec.window_steps() + 1
            );
        }
        Ok(windows)
    }

    fn pso(&mut self, t: &TuneArgs) -> Result<(Swarm, f64)> {
        let d = Swarm::default();
        let cfg = Swarm {
            n_particles: self.file.pick(t.particles, "particles", d.n_particles)?,
            n_iterations: self.file.pick(t.iterations, "iterations", d.n_iterations)?,
            inertia: self.file.pick(t.inertia, "inertia", d.inertia)?,
            c1: self.file.pick(t.c1, "c1", d.c1)?,
            c2: self.file.pick(t.c2, "c2", d.c2)?,
            rng_seed: self.file.pick(self.seed, "seed", d.rng_seed)?,
            ..d
        };
        cfg.validate()?;
        let tol = self
            .file
            .pick(t.svr_tol, "svr_tol", heatload_core::ksvr::DEFAULT_TOL)?;
        if !(tol > 0.0) {
            bail!("--svr-tol must be > 0");
        }
        self.note("pso", &cfg);
        self.note("svr_tol", &tol);
        Ok((cfg, tol))
    }

    fn pipeline(&mut self, t: &TuneArgs, o: &ForecastOpts) -> Result<PipelineConfig<f64>> {
        let (pso, svr_tol) = self.pso(t)?;
        let mode = match self.file.pick(o.mode, "mode", ModeArg::Recursive)? {
            ModeArg::Recursive => ForecastMode::Recursive,
            ModeArg::OpenLoop => ForecastMode::OpenLoop,
        };
        let zero_policy = match self
            .file
            .pick(o.zero_policy, "zero_policy", ZeroArg::DynamicRangeOffset)?
        {
            ZeroArg::Error => ZeroPolicy::Error,
            ZeroArg::DynamicRangeOffset => ZeroPolicy::DynamicRangeOffset,
        };
        let cfg = PipelineConfig {
            pso,
            svr_tol,
            mode,
            tau: self.file.pick(o.tau, "tau", 1)?,
            zero_policy,
            ..PipelineConfig::default()
        };
        self.note("mode", &cfg.mode);
        self.note("tau", &cfg.tau);
        self.note("zero_policy", &cfg.zero_policy);
        self.note("window_spec", &cfg.window);
        Ok(cfg)
    }
}

/// Each window gets its own swarm seed so windows are independent.
fn window_config(base: &PipelineConfig<f64>, window: usize) -> PipelineConfig<f64> {
    let mut cfg = base.clone();
    cfg.pso.rng_seed = base.pso.rng_seed.wrapping_add(window as u64);
    cfg
}

fn select_window(windows: &[Window<f64>], index: usize) -> Result<&Window<f64>> {
    windows
        .get(index)
        .ok_or_else(|| anyhow!("window {index} out of range (have {})", windows.len()))
}

fn csv_bytes(f: impl FnOnce(&mut Vec<u8>) -> heatload_core::Result<()>) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}

fn cmd_generate(ctx: &mut Ctx, a: &GenerateArgs, out: &mut Output) -> Result<()> {
    let preset: String = ctx.file.pick(a.preset.clone(), "preset", "default".into())?;
    let mut cfg =
        GenConfig::preset(&preset).ok_or_else(|| anyhow!("unknown preset `{preset}`"))?;
    if let Some(days) = ctx.file.pick_opt(a.days.map(|d| d as usize), "days")? {
        if days == 0 {
            bail!("--days must be >= 1");
        }
        cfg.days = days;
    }
    if let Some(s) = ctx.file.pick_opt(a.noise_stddev, "noise_stddev")? {
        cfg.noise_stddev = s;
    }
    if let Some(seed) = ctx.file.pick_opt(ctx.seed, "seed")? {
        cfg.rng_seed = seed;
    }
    cfg.validate()?;
    ctx.note("preset", &preset);
    ctx.note("generator", &cfg);
    let names = ["consumption.csv", "temperature.csv", "true_load.csv", "config.json"];
    out.claim(&names.map(String::from))?;
    let g = datagen::generate(&cfg)?;
    out.write(names[0], &csv_bytes(|b| write_raw_csv(&g.raw_consumption, b))?)?;
    out.write(names[1], &csv_bytes(|b| write_raw_csv(&g.raw_temperature, b))?)?;
    out.write(names[2], &csv_bytes(|b| write_regular_csv(&g.true_load, b))?)?;
    out.write_json(names[3], &cfg)?;
    emit(&json!({
        "command": "generate",
        "days": cfg.days,
        "consumption_points": g.raw_consumption.len(),
        "temperature_points": g.raw_temperature.len(),
        "true_load_mean": g.true_load.values().iter().sum::<f64>() / g.true_load.len() as f64,
    }));
    Ok(())
}

fn columns(rows: impl Iterator<Item = String>, header: &str) -> Vec<u8> {
    let mut s = format!("# {header}\n");
    for r in rows {
        s.push_str(&r);
        s.push('\n');
    }
    s.into_bytes()
}

fn cmd_analyze(ctx: &mut Ctx, a: &AnalyzeArgs, out: &mut Output) -> Result<()> {
    let index = ctx.file.pick(a.window, "window", 0)?;
    let max_lag = ctx.file.pick(a.max_lag.map(|v| v as usize), "max_lag", 48)?;
    if max_lag == 0 {
        bail!("--max-lag must be >= 1");
    }
    let period = ctx.file.pick(a.period, "period", 24)?;
    let rolling = ctx.file.pick(a.rolling_window, "rolling_window", 24)?;
    ctx.note("window", &index);
    ctx.note("max_lag", &max_lag);
    ctx.note("period", &period);
    ctx.note("rolling_window", &rolling);
    let windows = ctx.windows(&a.data)?;
    let w = select_window(&windows, index)?;
    let names: Vec<String> = [
        "acf.json",
        "acf.dat",
        "parcor.json",
        "parcor.dat",
        "ccf.json",
        "ccf.dat",
        "decomposition.json",
        "decomposition.dat",
        "rolling.dat",
    ]
    .map(String::from)
    .to_vec();
    out.claim(&names)?;

    // hourly load on grid indices 1..=n, temperature on the same instants
    let load = differentiate_shift(&w.accumulated, 0)?;
    let temp = w.temperature.slice(1, w.temperature.len());
    let r_acf = acf(&load, max_lag)?;
    let r_parcor = parcor(&load, max_lag)?;
    let r_ccf = cross_correlation(&load, &temp, max_lag)?;
    for (stem, r) in [("acf", &r_acf), ("parcor", &r_parcor), ("ccf", &r_ccf)] {
        out.write_json(&format!("{stem}.json"), r)?;
        out.write(&format!("{stem}.dat"), r.to_plot_data().as_bytes())?;
        emit(&json!({
            "command": "analyze",
            "analysis": stem,
            "lag1": r.at(1),
            "band": r.confidence_band,
            "fraction_inside_band": r.fraction_inside_band(),
        }));
    }
    let d = decompose(&load, period)?;
    out.write_json("decomposition.json", &d)?;
    let rows = (0..load.len()).map(|i| {
        format!(
            "{} {} {} {} {}",
            format_timestamp(load.timestamp(i)),
            load.values()[i],
            d.trend.values()[i],
            d.seasonal.values()[i],
            d.residual.values()[i]
        )
    });
    out.write(
        "decomposition.dat",
        &columns(rows, "timestamp observed trend seasonal residual"),
    )?;
    let (means, vars) = rolling_stats(load.values(), rolling)?;
    let rows = means.iter().zip(&vars).enumerate().map(|(i, (m, v))| {
        format!("{} {m} {v}", format_timestamp(load.timestamp(i + rolling - 1)))
    });
    out.write("rolling.dat", &columns(rows, "window_end mean variance"))?;
    let resid_var = {
        let r = d.residual.values();
        let m = r.iter().sum::<f64>() / r.len() as f64;
        r.iter().map(|v| (v - m).powi(2)).sum::<f64>() / r.len() as f64
    };
    emit(&json!({
        "command": "analyze",
        "analysis": "decomposition",
        "period": period,
        "seasonal_amplitude": d.seasonal.values().iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        "residual_variance": resid_var,
    }));
    Ok(())
}

fn model_name(window: usize) -> String {
    format!("model_w{window:03}.json")
}

fn cmd_train(ctx: &mut Ctx, a: &TrainArgs, out: &mut Output) -> Result<()> {
    let (pso, svr_tol) = ctx.pso(&a.tune)?;
    let trace = ctx.file.flag(a.trace, "trace")?;
    let only = ctx.file.pick_opt(a.window, "window")?;
    ctx.note("trace", &trace);
    ctx.note("window", &only);
    let windows = ctx.windows(&a.data)?;
    let selected: Vec<&Window<f64>> = match only {
        Some(i) => vec![select_window(&windows, i)?],
        None => windows.iter().collect(),
    };
    let mut names = Vec::new();
    for w in &selected {
        names.push(model_name(w.index));
        if trace {
            names.push(format!("trace_w{:03}.json", w.index));
        }
    }
    out.claim(&names)?;
    let results: Vec<_> = selected
        .par_iter()
        .map(|w| {
            let mut cfg = pso.clone();
            cfg.rng_seed = pso.rng_seed.wrapping_add(w.index as u64);
            pipeline::tune_and_train(&w.train, &w.validation, &cfg, svr_tol)
        })
        .collect();
    for (w, r) in selected.iter().zip(results) {
        let (model, tuning) = r.with_context(|| format!("training window {}", w.index))?;
        out.write(&model_name(w.index), model.to_json()?.as_bytes())?;
        if trace {
            out.write_json(&format!("trace_w{:03}.json", w.index), &tuning)?;
        }
        emit(&json!({
            "command": "train",
            "window": w.index,
            "c": model.hyper.c,
            "gamma": model.hyper.gamma,
            "epsilon": model.hyper.epsilon,
            "validation_mse": tuning.best_fitness,
            "support_vectors": model.support_vectors.len(),
            "converged": model.converged,
        }));
    }
    Ok(())
}

fn report_line(command: &str, r: &ForecastReport<f64>) -> serde_json::Value {
    json!({
        "command": command,
        "window": r.window,
        "model": r.model.name(),
        "rmse": r.rmse,
        "mape_percent": r.mape_percent,
        "mape_offset_used": r.mape_offset_used,
    })
}

fn cmd_forecast(ctx: &mut Ctx, a: &ForecastArgs, out: &mut Output) -> Result<()> {
    let model_path: PathBuf = ctx
        .file
        .pick_opt(a.model.clone(), "model")?
        .ok_or_else(|| anyhow!("--model is required"))?;
    let text = std::fs::read_to_string(&model_path)
        .with_context(|| format!("reading model {}", model_path.display()))?;
    let model = Model::from_json(&text).with_context(|| format!("loading {}", model_path.display()))?;
    let index = ctx.file.pick(a.window, "window", 0)?;
    ctx.note("model", &model_path);
    ctx.note("window", &index);
    let cfg = ctx.pipeline(&TuneArgs::none(), &a.opts)?;
    let windows = ctx.windows(&a.data)?;
    let w = select_window(&windows, index)?;
    let names = [format!("report_w{index:03}.json"), format!("forecast_w{index:03}.dat")];
    out.claim(&names)?;
    let report = pipeline::forecast_window(&model, w, &cfg)?;
    out.write_json(&names[0], &report)?;
    out.write(&names[1], report.to_plot_data().as_bytes())?;
    emit(&report_line("forecast", &report));
    Ok(())
}

impl TuneArgs {
    fn none() -> Self {
        Self {
            particles: None,
            iterations: None,
            inertia: None,
            c1: None,
            c2: None,
            svr_tol: None,
        }
    }
}

fn collect_reports(paths: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for p in paths {
        if p.is_dir() {
            let mut found: Vec<PathBuf> = std::fs::read_dir(p)?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| {
                    f.file_name()
                        .and_then(|n| n.to_str())
                        .is_some_and(|n| n.starts_with("report_") && n.ends_with(".json"))
                })
                .collect();
            found.sort();
            files.extend(found);
        } else if p.is_file() {
            files.push(p.clone());
        } else {
            bail!("{} does not exist", p.display());
        }
    }
    if files.is_empty() {
        bail!("no report_*.json files found");
    }
    Ok(files)
}

fn cmd_evaluate(ctx: &mut Ctx, a: &EvaluateArgs, out: &mut Output) -> Result<()> {
    let files = collect_reports(&a.reports)?;
    ctx.note("reports", &files);
    out.claim(&["summary.json".to_string()])?;
    let mut reports: Vec<ForecastReport<f64>> = Vec::with_capacity(files.len());
    for f in &files {
        let text = std::fs::read_to_string(f)?;
        reports.push(serde_json::from_str(&text).with_context(|| format!("parsing {}", f.display()))?);
    }
    let mut per_model = serde_json::Map::new();
    for m in [Method::PsoKsvr, Method::Arima, Method::SeasonalNaive] {
        let rs: Vec<ForecastReport<f64>> = reports.iter().filter(|r| r.model == m).cloned().collect();
        if rs.is_empty() {
            continue;
        }
        let s = pipeline::summarize(&rs);
        emit(&json!({
            "command": "evaluate",
            "model": m.name(),
            "n": s.rmse.n,
            "rmse_mean": s.rmse.mean,
            "rmse_std": s.rmse.std,
            "mape_mean": s.mape_percent.mean,
            "mape_std": s.mape_percent.std,
        }));
        per_model.insert(m.name().to_string(), serde_json::to_value(s)?);
    }
    out.write_json("summary.json", &per_model)?;
    Ok(())
}

fn cmd_compare(ctx: &mut Ctx, a: &CompareArgs, out: &mut Output) -> Result<()> {
    let base = ctx.pipeline(&a.tune, &a.opts)?;
    let d = BaselineConfig::default();
    let baseline = BaselineConfig {
        max_p: ctx.file.pick(a.max_p, "max_p", d.max_p)?,
        max_q: ctx.file.pick(a.max_q, "max_q", d.max_q)?,
        ..d
    };
    ctx.note("baseline", &baseline);
    let windows = ctx.windows(&a.data)?;
    out.claim(&["compare.json".into(), "compare.md".into()])?;
    let per_window: Vec<Result<Vec<ForecastReport<f64>>>> = windows
        .par_iter()
        .map(|w| {
            let cfg = window_config(&base, w.index);
            let run = pipeline::run_window(w, &cfg)?;
            let [arima, naive] = pipeline::baseline_reports(w, &cfg, &baseline)?;
            Ok(vec![run.report, arima, naive])
        })
        .collect();
    let mut reports = Vec::with_capacity(windows.len());
    for (w, r) in windows.iter().zip(per_window) {
        let r = r.with_context(|| format!("window {}", w.index))?;
        for rep in &r {
            emit(&report_line("compare", rep));
        }
        reports.push(r);
    }
    let months: Vec<u32> = windows.iter().map(pipeline::test_month).collect();
    let table = pipeline::monthly_table(&months, &reports)?;
    let per_window: Vec<_> = reports
        .iter()
        .zip(&months)
        .map(|(r, m)| {
            json!({
                "window": r[0].window,
                "month": m,
                "start": format_timestamp(r[0].actual_load.start()),
                "hyper": r[0].hyper,
                "methods": r.iter().map(|x| json!({
                    "model": x.model.name(),
                    "rmse": x.rmse,
                    "mape_percent": x.mape_percent,
                })).collect::<Vec<_>>(),
            })
        })
        .collect();
    out.write_json("compare.json", &json!({ "table": table, "windows": per_window }))?;
    out.write("compare.md", table.to_markdown().as_bytes())?;
    for row in &table.rows {
        emit(&json!({
            "command": "compare",
            "month": row.month,
            "winner": row.winner.name(),
            "methods": row.methods,
        }));
    }
    emit(&json!({
        "command": "compare",
        "summary": table.overall,
        "wins": table.wins.iter().map(|(m, n)| json!({"model": m.name(), "months": n})).collect::<Vec<_>>(),
    }));
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let file = match &cli.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    let workers: Option<u16> = file.pick_opt(cli.workers, "workers")?;
    if let Some(n) = workers {
        if n == 0 {
            bail!("--workers must be >= 1");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n as usize)
            .build_global()
            .context("configuring the worker pool")?;
    }
    let out_dir: PathBuf = file.pick(cli.out.clone(), "out", PathBuf::from("."))?;
    let force = file.flag(cli.force, "force")?;
    let mut ctx = Ctx {
        seed: cli.seed,
        file,
        effective: serde_json::Map::new(),
    };
    let command = match &cli.command {
        Command::Generate(_) => "generate",
        Command::Analyze(_) => "analyze",
        Command::Train(_) => "train",
        Command::Forecast(_) => "forecast",
        Command::Evaluate(_) => "evaluate",
        Command::Compare(_) => "compare",
    };
    ctx.note("command", &command);
    ctx.note("seed", &ctx.file.pick_opt(ctx.seed, "seed")?);
    ctx.note("workers", &workers);
    ctx.note("out", &out_dir);
    let mut out = Output::create(&out_dir, force)?;
    let result = match &cli.command {
        Command::Generate(a) => cmd_generate(&mut ctx, a, &mut out),
        Command::Analyze(a) => cmd_analyze(&mut ctx, a, &mut out),
        Command::Train(a) => cmd_train(&mut ctx, a, &mut out),
        Command::Forecast(a) => cmd_forecast(&mut ctx, a, &mut out),
        Command::Evaluate(a) => cmd_evaluate(&mut ctx, a, &mut out),
        Command::Compare(a) => cmd_compare(&mut ctx, a, &mut out),
    };
    let result = result.and_then(|()| {
        let cfg = serde_json::Value::Object(ctx.effective.clone());
        emit(&json!({ "effective_config": cfg }));
        // refreshed on every run, like the manifest
        out.refresh_json("effective_config.json", &cfg)
    });
    // a refusal happens before anything is written; leave the directory alone
    if result.is_ok() || !out.is_empty() {
        out.finish(result.is_ok())?;
    }
    result
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
