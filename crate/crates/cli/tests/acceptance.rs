//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.
//!
//! Run with `cargo test -p seqcast-cli --test acceptance`.

use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use seqcast::data::{
    adf_test, make_windows, parse_csv_str, parse_date, synth_ohlcv, synth_series, LagSelection, Scaler, SynthKind,
};
use seqcast::forecast::{compare, compute_metrics, CompareConfig, ModelSpec};
use seqcast::models::{Architecture, Forecaster, ModelKind, ModelParams};
use seqcast::numerics::{grad_check, Matrix, ParamSet, Rng};
use seqcast::training::TrainConfig;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn secs(d: Duration) -> String {
    format!("{:.2}s", d.as_secs_f64())
}

// ---------------------------------------------------------------------------
// 1. Gradient fidelity

fn perturbed(arch: &Architecture, seed: u64) -> ModelParams {
    let mut rng = Rng::new(seed);
    let mut p = ModelParams::init(arch, &mut rng).unwrap();
    // Move biases and norm parameters off their initial values so every
    // path carries a gradient.
    p.visit_mut(&mut |name, m| {
        if name.contains('b') || name.contains("ln") {
            for v in m.as_mut_slice() {
                *v += 0.3 * (rng.uniform() - 0.5);
            }
        }
    });
    p
}

fn gradient_fidelity() -> Outcome {
    let start = Instant::now();
    let cases = [
        (
            Architecture::Lstm {
                hidden: 4,
                forget_bias: 1.0,
            },
            5,
        ),
        (Architecture::Gru { hidden: 4 }, 5),
        (
            Architecture::Transformer {
                d_model: 8,
                heads: 2,
                layers: 1,
                d_ff: 16,
                positional: true,
            },
            6,
        ),
    ];
    let mut parts = Vec::new();
    for (arch, steps) in cases {
        let mut worst = 0.0f64;
        for seed in 0..5u64 {
            let p = perturbed(&arch, 100 + seed);
            let mut rng = Rng::new(900 + seed);
            let inputs = Matrix::from_fn(1, steps, |_, _| rng.uniform());
            let target = rng.uniform();
            let loss = |q: &ModelParams| (q.predict_batch(&inputs).unwrap()[0] - target).powi(2);
            let (y, cache) = p.forward_batch(&inputs).map_err(|e| e.to_string())?;
            let grad = p
                .backward_batch(&cache, &[2.0 * (y[0] - target)])
                .map_err(|e| e.to_string())?;
            let err = grad_check(loss, &p, &grad, 1e-5).map_err(|e| e.to_string())?;
            worst = worst.max(err);
        }
        ensure(worst < 1e-4, || format!("{}: max relative error {worst:.3e}", arch.kind()))?;
        parts.push(format!("{} {worst:.1e}", arch.kind()));
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(30), || format!("took {}", secs(elapsed)))?;
    Ok(format!("max rel err {} in {}", parts.join(", "), secs(elapsed)))
}

// ---------------------------------------------------------------------------
// 2. Metric identities

fn metric_identities() -> Outcome {
    let mut rng = Rng::new(7);
    for case in 0..1000 {
        let n = 2 + (rng.next_u64() % 60) as usize;
        let scale = 10f64.powf(rng.uniform_range(-2.0, 3.0));
        let y: Vec<f64> = (0..n).map(|_| scale * rng.normal()).collect();
        let p: Vec<f64> = y.iter().map(|v| v + scale * rng.normal()).collect();
        let m = compute_metrics(&y, &p).map_err(|e| format!("case {case}: {e}"))?;
        ensure((m.rmse * m.rmse - m.mse).abs() <= 1e-9 * m.mse.max(1.0), || {
            format!("case {case}: rmse² {} vs mse {}", m.rmse * m.rmse, m.mse)
        })?;
        ensure(m.mae <= m.rmse * (1.0 + 1e-12), || {
            format!("case {case}: mae {} > rmse {}", m.mae, m.rmse)
        })?;
        let own = compute_metrics(&y, &y).map_err(|e| e.to_string())?;
        ensure(own.r2 == 1.0, || format!("case {case}: r2(y, y) = {}", own.r2))?;
        let mean = y.iter().sum::<f64>() / n as f64;
        let flat = compute_metrics(&y, &vec![mean; n]).map_err(|e| e.to_string())?;
        ensure(flat.r2.abs() <= 1e-12, || format!("case {case}: r2(y, mean) = {}", flat.r2))?;
    }
    Ok("1000 random pairs".into())
}

// ---------------------------------------------------------------------------
// 3. ADF correctness

/// Frozen from statsmodels `adfuller(x, maxlag=lag, regression="c", autolag=None)`.
const ADF_REFERENCE: &[(&str, usize, f64)] = &[
    ("random_walk", 0, -1.3624610058155164),
    ("random_walk", 4, -1.3451575805811498),
    ("ar_half", 0, -11.89266563374639),
    ("ar_half", 4, -8.554293368287725),
];

fn adf_column(name: &str) -> Vec<f64> {
    let text = include_str!("../../core/tests/fixtures/adf_series.csv");
    let mut lines = text.lines();
    let col = lines
        .next()
        .unwrap()
        .split(',')
        .position(|c| c == name)
        .expect("fixture column");
    lines
        .map(|l| l.split(',').nth(col).unwrap().parse().unwrap())
        .collect()
}

fn adf_correctness() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for &(name, lag, expected) in ADF_REFERENCE {
        let r = adf_test(&adf_column(name), LagSelection::Fixed(lag)).map_err(|e| e.to_string())?;
        let diff = (r.statistic - expected).abs();
        ensure(diff < 1e-6, || {
            format!("{name} lag {lag}: {} vs {expected}", r.statistic)
        })?;
        worst = worst.max(diff);
    }
    let rw = adf_test(&adf_column("random_walk"), LagSelection::default()).map_err(|e| e.to_string())?;
    ensure(rw.p_value > 0.10, || format!("random walk p = {}", rw.p_value))?;
    let wn = adf_test(&adf_column("white_noise"), LagSelection::default()).map_err(|e| e.to_string())?;
    ensure(wn.p_value < 0.01, || format!("white noise p = {}", wn.p_value))?;
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(5), || format!("took {}", secs(elapsed)))?;
    Ok(format!(
        "max |Δstat| {worst:.1e}, random walk p {:.3}, white noise p {:.1e}, {}",
        rw.p_value,
        wn.p_value,
        secs(elapsed)
    ))
}

// ---------------------------------------------------------------------------
// 4. Learning check

fn learning_check() -> Outcome {
    let closes = synth_series(SynthKind::default_sine(), 1000, 0).map_err(|e| e.to_string())?;
    let series = synth_ohlcv(&closes, parse_date("2015-01-02").unwrap(), 0).map_err(|e| e.to_string())?;
    let mut parts = Vec::new();
    let mut failures = Vec::new();
    for kind in ModelKind::ALL {
        let cfg = CompareConfig {
            lookback: 60,
            horizon: 30,
            val_frac: 0.1,
            models: vec![ModelSpec {
                architecture: Architecture::default_for(kind),
                train: TrainConfig::default(),
            }],
            parallel: false,
        };
        let start = Instant::now();
        let (_, runs) = compare(&series, &cfg).map_err(|e| format!("{kind}: {e}"))?;
        let elapsed = start.elapsed();
        let run = &runs[0];
        let (test_r2, val_r2) = (run.metrics.r2, run.val_metrics.r2);
        parts.push(format!(
            "{kind} test R² {test_r2:.4} val R² {val_r2:.4} {}",
            secs(elapsed)
        ));
        if !(test_r2 >= 0.8) {
            failures.push(format!("{kind} test R² {test_r2:.4} < 0.8"));
        }
        if kind == ModelKind::Lstm && !(val_r2 >= 0.9) {
            failures.push(format!("lstm val R² {val_r2:.4} < 0.9"));
        }
        if elapsed >= Duration::from_secs(120) {
            failures.push(format!("{kind} took {}", secs(elapsed)));
        }
    }
    if failures.is_empty() {
        Ok(parts.join("; "))
    } else {
        Err(format!("{} ({})", failures.join("; "), parts.join("; ")))
    }
}

// ---------------------------------------------------------------------------
// 5 and 7. Pipeline runs through the binary

const PIPELINE_CONFIG: &str = r#"
seed = 3
lookback = 20
horizon = 30
parallel = true

[synth]
rows = 400

[synth.series]
kind = "sine"
amplitude = 20.0
period = 40.0
offset = 250.0
noise = 0.5

[lstm]
hidden = 6
[lstm.train]
max_epochs = 4
patience = 4

[gru]
hidden = 6
[gru.train]
max_epochs = 4
patience = 4

[transformer]
d_model = 8
heads = 2
layers = 1
d_ff = 16
[transformer.train]
max_epochs = 4
patience = 4
"#;

fn seqcast(dir: &Path, args: &[&str]) -> Result<(), String> {
    let o = Command::new(env!("CARGO_BIN_EXE_seqcast"))
        .current_dir(dir)
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    ensure(o.status.success(), || {
        format!("seqcast {args:?} failed: {}", String::from_utf8_lossy(&o.stderr))
    })
}

fn pipeline_workspace() -> Result<tempfile::TempDir, String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    fs::write(dir.path().join("run.toml"), PIPELINE_CONFIG).map_err(|e| e.to_string())?;
    seqcast(dir.path(), &["synth", "--config", "run.toml", "--out", "data"])?;
    Ok(dir)
}

fn run_compare(dir: &Path, out: &str) -> Result<(), String> {
    seqcast(
        dir,
        &["compare", "--config", "run.toml", "--data", "data/synthetic.csv", "--out", out],
    )
}

fn read(path: &Path) -> Result<Vec<u8>, String> {
    fs::read(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn determinism() -> Outcome {
    let dir = pipeline_workspace()?;
    run_compare(dir.path(), "a")?;
    run_compare(dir.path(), "b")?;
    let mut files = vec!["report.json".to_string()];
    files.extend(ModelKind::ALL.iter().map(|k| format!("{k}.weights")));
    for f in &files {
        let a = read(&dir.path().join("a").join(f))?;
        let b = read(&dir.path().join("b").join(f))?;
        ensure(a == b, || format!("{f} differs between runs"))?;
    }
    Ok(format!("{} files byte-identical", files.len()))
}

fn forecast_contract() -> Outcome {
    let dir = pipeline_workspace()?;
    run_compare(dir.path(), "out")?;
    let out = dir.path().join("out");
    let report: serde_json::Value =
        serde_json::from_slice(&read(&out.join("report.json"))?).map_err(|e| e.to_string())?;
    let actual: Vec<f64> = report["dataset"]["actual"]
        .as_array()
        .ok_or("report has no actual values")?
        .iter()
        .filter_map(|v| v.as_f64())
        .collect();
    ensure(actual.len() == 30, || format!("{} actual values", actual.len()))?;
    let lo = actual.iter().copied().fold(f64::INFINITY, f64::min);
    for m in report["models"].as_array().ok_or("report has no models")? {
        let name = m["name"].as_str().unwrap_or("?");
        let f = m["forecast"].as_array().ok_or("model has no forecast")?;
        ensure(f.len() == 30, || format!("{name}: {} values", f.len()))?;
        let values: Vec<f64> = f.iter().filter_map(|v| v.as_f64()).collect();
        ensure(values.len() == 30 && values.iter().all(|v| v.is_finite()), || {
            format!("{name}: non-finite forecast")
        })?;
        // The series lives near 250; scaled output would sit near [0, 1].
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        ensure(min > 0.5 * lo, || format!("{name}: forecast not in price units (min {min})"))?;
    }
    let csv = String::from_utf8(read(&out.join("forecast.csv"))?).map_err(|e| e.to_string())?;
    ensure(csv.lines().count() == 31, || format!("forecast.csv has {} lines", csv.lines().count()))?;
    ensure(csv.starts_with("date,actual,lstm,gru,transformer\n"), || "forecast.csv header".into())?;
    let svg = String::from_utf8(read(&out.join("forecast.svg"))?).map_err(|e| e.to_string())?;
    ensure(svg.starts_with("<svg") && svg.contains("<polyline"), || "forecast.svg malformed".into())?;
    Ok("3 models × 30 finite price-scale values; forecast.csv and forecast.svg written".into())
}

// ---------------------------------------------------------------------------
// 6. Data-layer exactness

const TABLE_ROWS: &str = "\
,Date,Open,High,Low,Close,Volume
0,2015/1/2,14.858,14.883333,14.217333,14.620667,71466000
1,2015/1/5,14.303333,14.433333,13.810667,14.006,80527500
";

fn data_layer() -> Outcome {
    let s = parse_csv_str(TABLE_ROWS, "table.csv").map_err(|e| e.to_string())?;
    let bars = s.bars();
    ensure(bars.len() == 2, || format!("{} rows parsed", bars.len()))?;
    let expected = [
        ("2015-01-02", [14.858, 14.883333, 14.217333, 14.620667, 71466000.0]),
        ("2015-01-05", [14.303333, 14.433333, 13.810667, 14.006, 80527500.0]),
    ];
    for (b, (date, fields)) in bars.iter().zip(expected) {
        ensure(b.date.to_string() == date, || format!("date {} vs {date}", b.date))?;
        let got = [b.open, b.high, b.low, b.close, b.volume];
        ensure(got == fields, || format!("{date}: {got:?} vs {fields:?}"))?;
    }

    let mut rng = Rng::new(11);
    let values: Vec<f64> = (0..5000).map(|_| rng.uniform_range(-500.0, 500.0)).collect();
    let scaler = Scaler::fit(&values).map_err(|e| e.to_string())?;
    let back = scaler.inverse_all(&scaler.transform_all(&values));
    let worst = values
        .iter()
        .zip(&back)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    ensure(worst < 1e-12, || format!("scaler round-trip error {worst:.3e}"))?;

    for _ in 0..100 {
        let n = 2 + (rng.next_u64() % 400) as usize;
        let lookback = 1 + (rng.next_u64() % (n as u64 - 1)) as usize;
        let values: Vec<f64> = (0..n).map(|i| i as f64).collect();
        let w = make_windows(&values, lookback).map_err(|e| e.to_string())?;
        ensure(w.len() == n - lookback, || {
            format!("n {n} lookback {lookback}: {} windows", w.len())
        })?;
    }
    Ok(format!("2 rows exact, scaler round-trip {worst:.1e}, 100 window counts"))
}

// ---------------------------------------------------------------------------

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 7] = [
        ("gradient fidelity", gradient_fidelity),
        ("metric identities", metric_identities),
        ("ADF correctness", adf_correctness),
        ("learning check", learning_check),
        ("pipeline determinism", determinism),
        ("data-layer exactness", data_layer),
        ("forecast contract", forecast_contract),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = panic::catch_unwind(AssertUnwindSafe(check))
            .unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("[PASS] {}. {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("[FAIL] {}. {name}: {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
