//! Experiment front-end: `qforge <experiment> --config file.json [--seed S]
//! [--workers W] [--out DIR]`.
//!
//! A config file is one JSON object. The keys `seed`, `workers`, `out` and
//! `experiment` configure the run; every other key is an experiment
//! parameter. Flags override the file. Each run writes CSV data and a
//! `meta.json` into `<out>/<experiment>-<id>/`, where the id hashes the
//! resolved parameters and seed.

pub mod experiments;

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::Parser;
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

pub use experiments::{RunOutput, EXPERIMENTS};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical contract violated: {0}")]
    Numerical(String),
    #[error("io error: {0}")]
    Io(String),
}

impl CliError {
    /// 2 for configuration problems, 3 for numerical-contract violations,
    /// 1 for I/O failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

pub(crate) fn io_err(e: impl std::fmt::Display) -> CliError {
    CliError::Io(e.to_string())
}

#[derive(Debug, Clone, Parser)]
#[command(
    name = "qforge",
    version,
    about = "Seeded quantum-simulation experiments"
)]
pub struct Args {
    /// One of the registered experiments, or `summary` to aggregate a report directory.
    pub experiment: String,
    /// JSON config file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads; results do not depend on this.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Report directory (default `reports`).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Parameter override, value parsed as JSON when possible.
    #[arg(long = "param", value_name = "KEY=VALUE")]
    pub params: Vec<String>,
    #[arg(long)]
    pub target_size: Option<usize>,
    #[arg(long)]
    pub max_repeats: Option<usize>,
    #[arg(long)]
    pub path_file: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub name: String,
    pub params: Map<String, Value>,
    /// `None` selects the experiment's default seed.
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub out: PathBuf,
}

impl ExperimentConfig {
    pub fn new(name: &str) -> Self {
        Self {
            name: name.to_string(),
            params: Map::new(),
            seed: None,
            workers: None,
            out: PathBuf::from("reports"),
        }
    }

    pub fn with_param(mut self, key: &str, value: Value) -> Self {
        self.params.insert(key.to_string(), value);
        self
    }

    /// Merges the config file (if any) and the flags.
    pub fn from_args(args: &Args) -> Result<Self, CliError> {
        let mut cfg = Self::new(&args.experiment);
        if let Some(path) = &args.config {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("--config {}: {e}", path.display())))?;
            let v: Value = serde_json::from_str(&text)
                .map_err(|e| CliError::Config(format!("--config {}: {e}", path.display())))?;
            let Value::Object(map) = v else {
                return Err(CliError::Config(
                    "config file must hold a JSON object".into(),
                ));
            };
            for (k, v) in map {
                match k.as_str() {
                    "experiment" => {
                        if v.as_str() != Some(cfg.name.as_str()) {
                            return Err(CliError::Config(format!(
                                "field `experiment`: file names {v}, command line names '{}'",
                                cfg.name
                            )));
                        }
                    }
                    "seed" => cfg.seed = Some(field_u64("seed", &v)?),
                    "workers" => cfg.workers = Some(field_u64("workers", &v)? as usize),
                    "out" => {
                        cfg.out = PathBuf::from(v.as_str().ok_or_else(|| {
                            CliError::Config("field `out`: expected a string".into())
                        })?)
                    }
                    _ => {
                        cfg.params.insert(k, v);
                    }
                }
            }
        }
        for kv in &args.params {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("--param '{kv}': expected KEY=VALUE")))?;
            let value = serde_json::from_str(v).unwrap_or_else(|_| Value::String(v.to_string()));
            cfg.params.insert(k.to_string(), value);
        }
        if let Some(t) = args.target_size {
            cfg.params.insert("target_size".into(), json!(t));
        }
        if let Some(r) = args.max_repeats {
            cfg.params.insert("max_repeats".into(), json!(r));
        }
        if let Some(p) = &args.path_file {
            cfg.params
                .insert("path_file".into(), json!(p.to_string_lossy()));
        }
        if args.seed.is_some() {
            cfg.seed = args.seed;
        }
        if args.workers.is_some() {
            cfg.workers = args.workers;
        }
        if let Some(o) = &args.out {
            cfg.out = o.clone();
        }
        if cfg.workers == Some(0) {
            return Err(CliError::Config(
                "field `workers`: must be at least 1".into(),
            ));
        }
        Ok(cfg)
    }
}

fn field_u64(name: &str, v: &Value) -> Result<u64, CliError> {
    v.as_u64()
        .ok_or_else(|| CliError::Config(format!("field `{name}`: expected a non-negative integer")))
}

fn run_id(name: &str, params: &Value, seed: u64) -> String {
    let mut h = Sha256::new();
    h.update(name.as_bytes());
    h.update(params.to_string().as_bytes());
    h.update(seed.to_le_bytes());
    h.finalize()[..4]
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Runs one experiment and writes its report directory, which is returned.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<PathBuf, CliError> {
    if !EXPERIMENTS.contains(&cfg.name.as_str()) {
        return Err(CliError::Config(format!(
            "unknown experiment '{}'; expected one of {}",
            cfg.name,
            EXPERIMENTS.join(", ")
        )));
    }
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = cfg.workers {
        builder = builder.num_threads(w);
    }
    let pool = builder.build().map_err(io_err)?;
    let start = Instant::now();
    let out = pool.install(|| experiments::dispatch(cfg))?;
    let wall = start.elapsed().as_secs_f64();
    let dir = cfg.out.join(format!(
        "{}-{}",
        cfg.name,
        run_id(&cfg.name, &out.params, out.seed)
    ));
    std::fs::create_dir_all(&dir).map_err(io_err)?;
    for (file, content) in &out.files {
        std::fs::write(dir.join(file), content).map_err(io_err)?;
    }
    let meta = json!({
        "experiment": cfg.name,
        "seed": out.seed,
        "workers": pool.current_num_threads(),
        "config": out.params,
        "wall_time_s": wall,
        "engine": { "name": env!("CARGO_PKG_NAME"), "version": env!("CARGO_PKG_VERSION") },
        "files": out.files.iter().map(|(f, _)| f.clone()).collect::<Vec<_>>(),
        "metrics": out.metrics,
    });
    let text = serde_json::to_string_pretty(&meta).map_err(io_err)?;
    std::fs::write(dir.join("meta.json"), text).map_err(io_err)?;
    Ok(dir)
}

fn read_meta(path: &Path) -> Result<Option<Value>, CliError> {
    let file = path.join("meta.json");
    if !file.is_file() {
        return Ok(None);
    }
    let text = std::fs::read_to_string(&file).map_err(io_err)?;
    serde_json::from_str(&text)
        .map(Some)
        .map_err(|e| CliError::Config(format!("{}: {e}", file.display())))
}

/// Aggregates every `meta.json` in `dir` and its immediate subdirectories
/// into `dir/summary.json`, which is also returned.
pub fn emit_summary(dir: &Path) -> Result<Value, CliError> {
    let mut metas = Vec::new();
    if let Some(m) = read_meta(dir)? {
        metas.push((String::from("."), m));
    }
    let mut subdirs: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| CliError::Config(format!("{}: {e}", dir.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    subdirs.sort();
    for p in subdirs {
        if let Some(m) = read_meta(&p)? {
            let name = p
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default();
            metas.push((name, m));
        }
    }
    if metas.is_empty() {
        return Err(CliError::Config(format!(
            "no run metadata in {}",
            dir.display()
        )));
    }
    let mut runs = Vec::new();
    let mut best: Map<String, Value> = Map::new();
    let mut curves: Map<String, Value> = Map::new();
    let mut timings: Map<String, Value> = Map::new();
    for (name, m) in &metas {
        let exp = m["experiment"].as_str().unwrap_or("unknown").to_string();
        runs.push(json!({
            "run": name,
            "experiment": exp,
            "seed": m["seed"],
            "wall_time_s": m["wall_time_s"],
            "metrics": m["metrics"],
        }));
        timings.insert(name.clone(), m["wall_time_s"].clone());
        if let Some(e) = m["metrics"]["best_energy"].as_f64() {
            let slot = best.entry(exp.clone()).or_insert(json!(e));
            if slot.as_f64().is_some_and(|b| e < b) {
                *slot = json!(e);
            }
        }
        if let (Some(size), Some(curve)) =
            (m["metrics"]["size"].as_u64(), m["metrics"].get("curve"))
        {
            let entry = curves.entry(exp).or_insert_with(|| json!({}));
            entry[size.to_string()] = curve.clone();
        }
    }
    let summary = json!({
        "runs": runs,
        "best_energy": best,
        "entropy_curves": curves,
        "wall_time_s": timings,
    });
    let text = serde_json::to_string_pretty(&summary).map_err(io_err)?;
    std::fs::write(dir.join("summary.json"), text).map_err(io_err)?;
    Ok(summary)
}

/// Entry point behind the binary; returns the process exit code.
pub fn main_with(args: Args) -> i32 {
    let result = if args.experiment == "summary" {
        let dir = args.out.clone().unwrap_or_else(|| PathBuf::from("reports"));
        emit_summary(&dir).map(|_| println!("{}", dir.join("summary.json").display()))
    } else {
        ExperimentConfig::from_args(&args)
            .and_then(|cfg| run_experiment(&cfg))
            .map(|dir| println!("{}", dir.display()))
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("qforge: {e}");
            e.exit_code()
        }
    }
}
