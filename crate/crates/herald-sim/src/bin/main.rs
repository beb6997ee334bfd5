//! Command-line front end: single gate runs, parameter sweeps over the
//! detuning axis, effective-model inspection, and detuning tuning.

use std::io::Write;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use herald_sim::effective::{
    closed_form_model, delta_n_weak_drive, effective_operators_numeric, gamma_target,
    tune_detunings_dfs, tune_detunings_nonlocal, SECTORS,
};
use herald_sim::model::{build_dfs_model, build_nonlocal_model, PhysicalParams};
use herald_sim::protocol::{run_cphase_dfs, run_cphase_nonlocal, GateLevel, GateResult, RunConfig};
use herald_sim::SimError;

#[derive(Parser)]
#[command(
    name = "herald-sim",
    about = "Heralded cavity-mediated CPHASE gate simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// JSON configuration file.
    #[arg(long)]
    config: Option<String>,
    /// Override a config field, e.g. --set lambda=10 (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output path (CSV for sweeps, JSON otherwise; stdout if omitted).
    #[arg(long)]
    out: Option<String>,
    /// Worker threads for sweeps (default: HERALD_SIM_WORKERS or all cores).
    #[arg(long)]
    workers: Option<usize>,
    /// Level of description: full | effective | analytic.
    #[arg(long)]
    level: Option<String>,
    /// Print a gnuplot snippet for the produced CSV and exit.
    #[arg(long = "gnuplot-hint", default_value_t = false)]
    gnuplot_hint: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run a single heralded gate and print the result as JSON.
    Gate(CommonArgs),
    /// Sweep the E2 detuning for each cooperativity and write a CSV.
    Sweep(CommonArgs),
    /// Dump the effective sector table for all derivation paths.
    Effective(CommonArgs),
    /// Print tuned detunings for the configured setup.
    Tune(CommonArgs),
    /// Sweep preset for the three-cavity gate figure.
    Fig2(CommonArgs),
    /// Sweep preset for the two-cavity gate figure.
    Fig4(CommonArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Variant {
    Nonlocal,
    Dfs,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum Axis {
    List(Vec<f64>),
    Range { start: f64, stop: f64, step: f64 },
}

impl Axis {
    fn values(&self) -> Result<Vec<f64>, String> {
        match self {
            Axis::List(v) => {
                if v.is_empty() {
                    Err("empty value list".into())
                } else {
                    Ok(v.clone())
                }
            }
            Axis::Range { start, stop, step } => {
                if *step <= 0.0 || stop < start {
                    return Err("range needs step > 0 and stop >= start".into());
                }
                let mut out = Vec::new();
                let mut x = *start;
                let mut k = 0;
                while x <= stop + 1e-9 * step {
                    out.push(x);
                    k += 1;
                    x = start + k as f64 * step;
                }
                Ok(out)
            }
        }
    }
}

fn default_level() -> String {
    "full".into()
}
fn default_n_max() -> u32 {
    1
}
fn default_cap() -> u32 {
    2
}
fn default_tol() -> f64 {
    1e-9
}
fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepConfig {
    variant: Variant,
    #[serde(alias = "C_values")]
    c_values: Vec<f64>,
    lambda: f64,
    #[serde(alias = "delta_E2_over_gamma")]
    #[serde(alias = "Delta_E2_over_gamma")]
    delta_e2_over_gamma: Axis,
    #[serde(default = "default_true")]
    caption_rules: bool,
    #[serde(default = "default_level")]
    level: String,
    #[serde(default = "default_n_max")]
    n_max: u32,
    #[serde(default = "default_cap")]
    excitation_cap: u32,
    #[serde(default = "default_tol")]
    tol: f64,
    #[serde(default)]
    output_path: Option<String>,
    #[serde(default)]
    workers: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct PointConfig {
    variant: Variant,
    #[serde(alias = "c")]
    #[serde(rename = "C")]
    cooperativity: f64,
    lambda: f64,
    #[serde(alias = "delta_E2_over_gamma")]
    #[serde(alias = "Delta_E2_over_gamma")]
    delta_e2_over_gamma: f64,
    #[serde(default = "default_true")]
    caption_rules: bool,
    #[serde(default = "default_level")]
    level: String,
    #[serde(default = "default_n_max")]
    n_max: u32,
    #[serde(default = "default_cap")]
    excitation_cap: u32,
    #[serde(default = "default_tol")]
    tol: f64,
}

struct CliError {
    code: u8,
    msg: String,
}

impl CliError {
    fn config(msg: impl Into<String>) -> CliError {
        CliError {
            code: 1,
            msg: msg.into(),
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        let code = match &e {
            SimError::HeraldImpossible { .. } => 2,
            SimError::IntegratorFailure(_) => 3,
            _ => 1,
        };
        CliError {
            code,
            msg: e.to_string(),
        }
    }
}

fn load_config(args: &CommonArgs, preset: Option<Value>) -> Result<Value, CliError> {
    let mut value = match (&args.config, preset) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::config(format!("cannot read {path}: {e}")))?;
            serde_json::from_str::<Value>(&text)
                .map_err(|e| CliError::config(format!("{path}: {e}")))?
        }
        (None, Some(preset)) => preset,
        (None, None) => return Err(CliError::config("--config is required for this subcommand")),
    };
    for kv in &args.set {
        let (key, raw) = kv
            .split_once('=')
            .ok_or_else(|| CliError::config(format!("--set needs KEY=VALUE, got `{kv}`")))?;
        let parsed = serde_json::from_str::<Value>(raw).unwrap_or(Value::String(raw.to_string()));
        let obj = value
            .as_object_mut()
            .ok_or_else(|| CliError::config("config must be a JSON object"))?;
        obj.insert(key.to_string(), parsed);
    }
    if let Some(level) = &args.level {
        let obj = value.as_object_mut().unwrap();
        obj.insert("level".into(), Value::String(level.clone()));
    }
    Ok(value)
}

fn parse_level(s: &str) -> Result<GateLevel, CliError> {
    match s {
        "full" => Ok(GateLevel::FullME),
        "effective" => Ok(GateLevel::EffectiveME),
        "analytic" => Ok(GateLevel::Analytic),
        other => Err(CliError::config(format!(
            "unknown level `{other}` (expected full | effective | analytic)"
        ))),
    }
}

fn tuned_params(
    variant: Variant,
    cooperativity: f64,
    lambda: f64,
    de2_over_gamma: f64,
) -> Result<PhysicalParams, SimError> {
    let p = PhysicalParams::from_caption(
        cooperativity,
        lambda,
        de2_over_gamma,
        variant == Variant::Dfs,
    );
    match variant {
        Variant::Nonlocal => Ok(tune_detunings_nonlocal(&p)?.0),
        Variant::Dfs => Ok(tune_detunings_dfs(&p)?.0),
    }
}

fn run_point(cfg: &PointConfig) -> Result<GateResult, SimError> {
    if !cfg.caption_rules {
        return Err(SimError::Config(
            "only caption_rules parameterization is supported".into(),
        ));
    }
    if cfg.tol <= 0.0 {
        return Err(SimError::Config("tol must be positive".into()));
    }
    let p = tuned_params(
        cfg.variant,
        cfg.cooperativity,
        cfg.lambda,
        cfg.delta_e2_over_gamma,
    )?;
    let level = match cfg.level.as_str() {
        "full" => GateLevel::FullME,
        "effective" => GateLevel::EffectiveME,
        _ => GateLevel::Analytic,
    };
    let run_cfg = RunConfig {
        n_max: cfg.n_max,
        excitation_cap: Some(cfg.excitation_cap),
        samples: 1,
    };
    match cfg.variant {
        Variant::Nonlocal => run_cphase_nonlocal(&p, level, &run_cfg),
        Variant::Dfs => run_cphase_dfs(&p, level, &run_cfg),
    }
}

fn cmd_gate(args: &CommonArgs) -> Result<(), CliError> {
    let value = load_config(args, None)?;
    let cfg: PointConfig =
        serde_json::from_value(value).map_err(|e| CliError::config(e.to_string()))?;
    parse_level(&cfg.level)?;
    let result = run_point(&cfg)?;
    let text = serde_json::to_string_pretty(&result).expect("serialize");
    emit(args, &text)?;
    Ok(())
}

const CSV_HEADER: &str =
    "C,lambda,delta_E2_over_gamma,t_CZ_gamma,P_numeric,P_analytic,infidelity,leakage,runtime_s,integrator_steps";

const GNUPLOT_HINT: &str = r#"# gnuplot snippet for sweep CSVs
set datafile separator ','
set key autotitle columnhead
set xlabel 'Delta_E2 / gamma'
plot 'sweep.csv' using 3:5 with linespoints title 'P numeric', \
     'sweep.csv' using 3:6 with lines title 'P analytic'
# for infidelity: set logscale y; plot 'sweep.csv' using 3:7 with linespoints
"#;

fn cmd_sweep(args: &CommonArgs, preset: Option<Value>) -> Result<(), CliError> {
    if args.gnuplot_hint {
        print!("{GNUPLOT_HINT}");
        return Ok(());
    }
    let value = load_config(args, preset)?;
    let cfg: SweepConfig =
        serde_json::from_value(value).map_err(|e| CliError::config(e.to_string()))?;
    parse_level(&cfg.level)?;
    let de2_values = cfg.delta_e2_over_gamma.values().map_err(CliError::config)?;
    if cfg.c_values.is_empty() {
        return Err(CliError::config("empty c_values"));
    }
    if !cfg.caption_rules {
        return Err(CliError::config(
            "only caption_rules parameterization is supported for sweeps",
        ));
    }
    if cfg.tol <= 0.0 {
        return Err(CliError::config("tol must be positive"));
    }

    let workers = args
        .workers
        .or(cfg.workers)
        .or_else(|| {
            std::env::var("HERALD_SIM_WORKERS")
                .ok()
                .and_then(|v| v.parse().ok())
        })
        .unwrap_or_else(num_cpus);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| CliError::config(e.to_string()))?;

    let mut points: Vec<(f64, f64)> = Vec::new();
    for &cval in &cfg.c_values {
        for &de2 in &de2_values {
            points.push((cval, de2));
        }
    }
    points.sort_by(|a, b| a.partial_cmp(b).unwrap());

    use rayon::prelude::*;
    let rows: Vec<Result<String, SimError>> = pool.install(|| {
        points
            .par_iter()
            .map(|&(cval, de2)| {
                let pc = PointConfig {
                    variant: cfg.variant,
                    cooperativity: cval,
                    lambda: cfg.lambda,
                    delta_e2_over_gamma: de2,
                    caption_rules: true,
                    level: cfg.level.clone(),
                    n_max: cfg.n_max,
                    excitation_cap: cfg.excitation_cap,
                    tol: cfg.tol,
                };
                let start = Instant::now();
                let r = run_point(&pc)?;
                let runtime = start.elapsed().as_secs_f64();
                Ok(format!(
                    "{},{},{},{},{},{},{},{},{:.3},{}",
                    cval,
                    cfg.lambda,
                    de2,
                    r.t_gate * r.params_echo.gamma,
                    r.p_success,
                    r.p_analytic,
                    r.infidelity,
                    r.leakage,
                    runtime,
                    r.integrator_steps
                ))
            })
            .collect()
    });

    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&row?);
        out.push('\n');
    }
    let path = args.out.clone().or(cfg.output_path);
    match path {
        Some(p) => std::fs::write(&p, out)
            .map_err(|e| CliError::config(format!("cannot write {p}: {e}")))?,
        None => print!("{out}"),
    }
    Ok(())
}

fn num_cpus() -> usize {
    std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
}

fn cmd_effective(args: &CommonArgs) -> Result<(), CliError> {
    let value = load_config(args, None)?;
    let cfg: PointConfig =
        serde_json::from_value(value).map_err(|e| CliError::config(e.to_string()))?;
    let p = tuned_params(
        cfg.variant,
        cfg.cooperativity,
        cfg.lambda,
        cfg.delta_e2_over_gamma,
    )
    .map_err(CliError::from)?;

    let numeric = match cfg.variant {
        Variant::Nonlocal => {
            let m = build_nonlocal_model(&p, 1, Some(1)).map_err(CliError::from)?;
            effective_operators_numeric(&m).map_err(CliError::from)?
        }
        Variant::Dfs => {
            let m = build_dfs_model(&p, 1, Some(1)).map_err(CliError::from)?;
            effective_operators_numeric(&m).map_err(CliError::from)?
        }
    };

    let mut sectors = Vec::new();
    for &(m, n) in &SECTORS {
        let num = numeric.sector((m, n));
        let mut entry = json!({
            "sector": [m, n],
            "numeric": num,
        });
        if cfg.variant == Variant::Nonlocal {
            let closed = closed_form_model(&p).map_err(CliError::from)?;
            let cl = closed.sector((m, n)).clone();
            let gap = (num.delta - cl.delta).abs() / cl.delta.abs().max(1e-300);
            let (weak, warn) = delta_n_weak_drive(&p, m, n).map_err(CliError::from)?;
            entry["closed_form"] = serde_json::to_value(&cl).unwrap();
            entry["weak_drive"] = serde_json::to_value(&weak).unwrap();
            entry["weak_drive_warn"] = json!(warn);
            entry["delta_gap_numeric_vs_closed"] = json!(gap);
        }
        sectors.push(entry);
    }
    let dump = json!({
        "params": p,
        "gamma_target": gamma_target(&p),
        "sectors": sectors,
    });
    emit(
        args,
        &serde_json::to_string_pretty(&dump).expect("serialize"),
    )?;
    Ok(())
}

fn cmd_tune(args: &CommonArgs) -> Result<(), CliError> {
    let value = load_config(args, None)?;
    let cfg: PointConfig =
        serde_json::from_value(value).map_err(|e| CliError::config(e.to_string()))?;
    let p = PhysicalParams::from_caption(
        cfg.cooperativity,
        cfg.lambda,
        cfg.delta_e2_over_gamma,
        cfg.variant == Variant::Dfs,
    );
    let dump = match cfg.variant {
        Variant::Nonlocal => {
            let (tuned, gamma) = tune_detunings_nonlocal(&p).map_err(CliError::from)?;
            json!({ "params": tuned, "gamma_target": gamma })
        }
        Variant::Dfs => {
            let (tuned, shifts) = tune_detunings_dfs(&p).map_err(CliError::from)?;
            json!({ "params": tuned, "shifts": [shifts.0, shifts.1, shifts.2] })
        }
    };
    emit(
        args,
        &serde_json::to_string_pretty(&dump).expect("serialize"),
    )?;
    Ok(())
}

fn emit(args: &CommonArgs, text: &str) -> Result<(), CliError> {
    match &args.out {
        Some(p) => std::fs::write(p, format!("{text}\n"))
            .map_err(|e| CliError::config(format!("cannot write {p}: {e}"))),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn fig2_preset() -> Value {
    json!({
        "variant": "nonlocal",
        "c_values": [100.0, 600.0],
        "lambda": 10.0,
        "delta_e2_over_gamma": { "start": 60.0, "stop": 240.0, "step": 20.0 },
        "caption_rules": true,
        "level": "full"
    })
}

fn fig4_preset() -> Value {
    json!({
        "variant": "dfs",
        "c_values": [100.0, 600.0],
        "lambda": 1.84,
        "delta_e2_over_gamma": { "start": 60.0, "stop": 240.0, "step": 20.0 },
        "caption_rules": true,
        "level": "full"
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Gate(args) => cmd_gate(args),
        Command::Sweep(args) => cmd_sweep(args, None),
        Command::Effective(args) => cmd_effective(args),
        Command::Tune(args) => cmd_tune(args),
        Command::Fig2(args) => cmd_sweep(args, Some(fig2_preset())),
        Command::Fig4(args) => cmd_sweep(args, Some(fig4_preset())),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let _ = writeln!(std::io::stderr(), "error: {}", e.msg);
            ExitCode::from(e.code)
        }
    }
}
