//! `seqcast`: EDA, training, forecasting and model comparison from the
//! command line.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.

mod config;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use config::RunConfig;
use seqcast::data::{
    business_days, clean, eda_report, parse_csv, parse_date, synth_ohlcv, synth_series,
    AdfFrequency, EdaReport, OhlcvSeries,
};
use seqcast::forecast::{
    bar_chart_svg, compare, forecast_csv, forecast_svg, recursive_forecast, PreparedData, Series,
};
use seqcast::models::{load_weights, write_weights, ModelKind, ModelParams};
use seqcast::training::{train, EpochRecord, TrainHistory};

#[derive(Parser)]
#[command(name = "seqcast", version, about = "Univariate price forecasting with LSTM, GRU and Transformer models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct Common {
    /// TOML run configuration; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// OHLCV CSV input.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    horizon: Option<usize>,
    /// Directory that receives every output file.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print the merged canonical config and exit.
    #[arg(long)]
    print_config: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Clean the data, summarize it by month and run ADF tests.
    Eda {
        #[command(flatten)]
        common: Common,
        /// Run ADF on monthly mean highs or on daily highs.
        #[arg(long)]
        adf_frequency: Option<AdfFrequency>,
    },
    /// Train one model and write its weights and training log.
    Train {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        model: ModelKind,
    },
    /// Forecast past the end of the data with previously trained weights.
    Forecast {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        model: ModelKind,
        /// Weights file; defaults to `<out>/<model>.weights`.
        #[arg(long)]
        weights: Option<PathBuf>,
    },
    /// Train all three models on one split and compare their forecasts.
    Compare {
        #[command(flatten)]
        common: Common,
    },
    /// Write a synthetic OHLCV fixture.
    Synth {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        rows: Option<usize>,
    },
}

enum CliError {
    Usage(String),
    Runtime(String),
}

impl From<seqcast::Error> for CliError {
    fn from(e: seqcast::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

type CliResult<T = ()> = Result<T, CliError>;

fn load_config(common: &Common) -> CliResult<RunConfig> {
    let mut cfg = match &common.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| {
                CliError::Usage(format!("cannot read config {}: {e}", path.display()))
            })?;
            RunConfig::from_toml(&text)
                .map_err(|e| CliError::Usage(format!("invalid config {}: {e}", path.display())))?
        }
        None => RunConfig::default(),
    };
    if let Some(d) = &common.data {
        cfg.data_path = Some(d.clone());
    }
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if let Some(h) = common.horizon {
        cfg.horizon = h;
    }
    if let Some(o) = &common.out {
        cfg.output_dir = o.clone();
    }
    cfg.validate().map_err(CliError::Usage)?;
    Ok(cfg)
}

/// Parses and cleans the configured data file.
fn load_data(cfg: &RunConfig) -> CliResult<(OhlcvSeries, seqcast::data::CleanReport)> {
    let path = cfg
        .data_path
        .as_ref()
        .ok_or_else(|| CliError::Usage("no data file given (use --data or data_path)".into()))?;
    if !path.is_file() {
        return Err(CliError::Usage(format!(
            "data file {} does not exist",
            path.display()
        )));
    }
    let raw = parse_csv(path)?;
    Ok(clean(&raw)?)
}

/// Collects outputs and writes them only once everything has succeeded.
struct Outputs {
    dir: PathBuf,
    files: Vec<(String, String)>,
}

impl Outputs {
    fn new(dir: &Path) -> Self {
        Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        }
    }

    fn add(&mut self, name: impl Into<String>, contents: String) {
        self.files.push((name.into(), contents));
    }

    fn json<T: Serialize>(&mut self, name: impl Into<String>, value: &T) -> CliResult {
        let text = serde_json::to_string_pretty(value)
            .map_err(|e| CliError::Runtime(e.to_string()))?;
        self.add(name, text + "\n");
        Ok(())
    }

    fn commit(self) -> CliResult {
        let io = |p: &Path, e: std::io::Error| CliError::Runtime(format!("{}: {e}", p.display()));
        fs::create_dir_all(&self.dir).map_err(|e| io(&self.dir, e))?;
        for (name, contents) in &self.files {
            let path = self.dir.join(name);
            fs::write(&path, contents).map_err(|e| io(&path, e))?;
            println!("wrote {}", path.display());
        }
        Ok(())
    }
}

fn ndjson(records: &[EpochRecord]) -> String {
    records
        .iter()
        .map(|r| serde_json::to_string(r).expect("plain record") + "\n")
        .collect()
}

#[derive(Serialize)]
struct EdaArtifact<'a> {
    config: &'a RunConfig,
    #[serde(flatten)]
    report: &'a EdaReport,
}

const MONTHS: [&str; 12] = [
    "Jan", "Feb", "Mar", "Apr", "May", "Jun", "Jul", "Aug", "Sep", "Oct", "Nov", "Dec",
];

fn cmd_eda(cfg: &RunConfig) -> CliResult {
    let (series, missing) = load_data(cfg)?;
    let report = eda_report(&series, missing, cfg.adf_frequency)?;
    let labels: Vec<String> = MONTHS.iter().map(|m| m.to_string()).collect();
    let pick = |f: fn(&seqcast::data::MonthEntry) -> Option<f64>| {
        report.monthwise.iter().map(|m| f(m).unwrap_or(f64::NAN)).collect()
    };
    let svg = bar_chart_svg(
        "Month-wise mean open and close",
        &labels,
        &[
            Series {
                name: "mean open".into(),
                values: pick(|m| m.mean_open),
            },
            Series {
                name: "mean close".into(),
                values: pick(|m| m.mean_close),
            },
        ],
    );
    let mut out = Outputs::new(&cfg.output_dir);
    out.json(
        "eda.json",
        &EdaArtifact {
            config: cfg,
            report: &report,
        },
    )?;
    out.add("eda.svg", svg);
    out.commit()?;
    println!(
        "rows {}  ADF level p={:.4}  differenced p={:.4}",
        report.n_rows, report.adf.level.p_value, report.adf.differenced.p_value
    );
    Ok(())
}

#[derive(Serialize)]
struct TrainArtifact<'a> {
    config: &'a RunConfig,
    model: ModelKind,
    history: &'a TrainHistory,
}

fn cmd_train(cfg: &RunConfig, model: ModelKind) -> CliResult {
    let (series, _) = load_data(cfg)?;
    let data = PreparedData::new(&series, cfg.lookback, cfg.horizon, cfg.val_frac)?;
    let spec = cfg.model_spec(model);
    let mut log = Vec::new();
    let (params, history) = train(&spec.architecture, &data.train, &data.val, &spec.train, &mut |r| {
        eprintln!(
            "{model} epoch {:>3}  train {:.6}  val {:.6}",
            r.epoch, r.train_loss, r.val_loss
        );
        log.push(*r);
    })
    .map_err(|e| CliError::Runtime(format!("{model}: {e}")))?;
    let mut out = Outputs::new(&cfg.output_dir);
    out.add(format!("{model}.weights"), write_weights(&params));
    out.add(format!("{model}.log.ndjson"), ndjson(&log));
    out.json(
        format!("{model}.history.json"),
        &TrainArtifact {
            config: cfg,
            model,
            history: &history,
        },
    )?;
    out.commit()?;
    println!(
        "best epoch {} of {}",
        history.best_epoch,
        history.val_loss.len()
    );
    Ok(())
}

#[derive(Serialize)]
struct ForecastArtifact<'a> {
    config: &'a RunConfig,
    model: ModelKind,
    weights: String,
    dates: Vec<String>,
    forecast: &'a [f64],
}

fn cmd_forecast(cfg: &RunConfig, model: ModelKind, weights: Option<&Path>) -> CliResult {
    let default_path = cfg.output_dir.join(format!("{model}.weights"));
    let weights = weights.unwrap_or(&default_path);
    if !weights.is_file() {
        return Err(CliError::Usage(format!(
            "weights file {} does not exist (run `seqcast train --model {model}` first)",
            weights.display()
        )));
    }
    let (series, _) = load_data(cfg)?;
    let params: ModelParams = load_weights(weights, Some(model))?;
    // The scaler is refit on the same training split the weights were
    // trained on; the window is the end of the whole series.
    let data = PreparedData::new(&series, cfg.lookback, cfg.horizon, cfg.val_frac)?;
    let closes = series.closes();
    let window = data
        .scaler
        .transform_all(&closes[closes.len() - cfg.lookback..]);
    let forecast = recursive_forecast(&params, &window, cfg.horizon, &data.scaler)?;
    let last = series.last_date().expect("non-empty after cleaning");
    let dates: Vec<String> = business_days(last.succ_opt().expect("date in range"), cfg.horizon)
        .iter()
        .map(|d| d.format("%Y-%m-%d").to_string())
        .collect();
    let mut csv = String::from("date,forecast\n");
    for (d, v) in dates.iter().zip(&forecast) {
        csv.push_str(&format!("{d},{v}\n"));
    }
    let mut out = Outputs::new(&cfg.output_dir);
    out.add(format!("{model}.forecast.csv"), csv);
    out.json(
        format!("{model}.forecast.json"),
        &ForecastArtifact {
            config: cfg,
            model,
            weights: weights.display().to_string(),
            dates,
            forecast: &forecast,
        },
    )?;
    out.commit()
}

fn cmd_compare(cfg: &RunConfig) -> CliResult {
    let (series, _) = load_data(cfg)?;
    let (report, runs) = compare(&series, &cfg.compare_config())?;
    let mut out = Outputs::new(&cfg.output_dir);
    out.add(
        "report.json",
        report.to_json()?,
    );
    out.add("forecast.csv", forecast_csv(&report));
    out.add("forecast.svg", forecast_svg(&report));
    for run in &runs {
        let kind = run.spec.kind();
        out.add(format!("{kind}.weights"), write_weights(&run.params));
        out.add(format!("{kind}.log.ndjson"), ndjson(&run.log));
    }
    out.commit()?;
    println!("{:<12} {:>9} {:>10} {:>12} {:>10}", "model", "R2", "MAE", "MSE", "RMSE");
    for m in &report.models {
        println!(
            "{:<12} {:>9.4} {:>10.4} {:>12.4} {:>10.4}",
            m.name.name(),
            m.metrics.r2,
            m.metrics.mae,
            m.metrics.mse,
            m.metrics.rmse
        );
    }
    Ok(())
}

fn cmd_synth(cfg: &RunConfig) -> CliResult {
    let start = parse_date(&cfg.synth.start_date).expect("validated");
    let closes = synth_series(cfg.synth.series, cfg.synth.rows, cfg.seed)?;
    let series = synth_ohlcv(&closes, start, cfg.seed)?;
    let mut out = Outputs::new(&cfg.output_dir);
    out.add("synthetic.csv", series.to_csv_string());
    out.commit()
}

fn run(cli: Cli) -> CliResult {
    let common = match &cli.command {
        Command::Eda { common, .. }
        | Command::Train { common, .. }
        | Command::Forecast { common, .. }
        | Command::Compare { common }
        | Command::Synth { common, .. } => common,
    };
    let mut cfg = load_config(common)?;
    match &cli.command {
        Command::Eda {
            adf_frequency: Some(f),
            ..
        } => cfg.adf_frequency = *f,
        Command::Synth { rows: Some(r), .. } => {
            cfg.synth.rows = *r;
            cfg.validate().map_err(CliError::Usage)?;
        }
        _ => {}
    }
    if common.print_config {
        print!("{}", cfg.to_toml());
        return Ok(());
    }
    match &cli.command {
        Command::Eda { .. } => cmd_eda(&cfg),
        Command::Train { model, .. } => cmd_train(&cfg, *model),
        Command::Forecast { model, weights, .. } => cmd_forecast(&cfg, *model, weights.as_deref()),
        Command::Compare { .. } => cmd_compare(&cfg),
        Command::Synth { .. } => cmd_synth(&cfg),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
