//! Batch front-end: configuration, dispatch and output files.
//!
//! Layout of an output directory:
//!
//! ```text
//! manifest.json            config echo, version, per-run timings and paths
//! summary.jsonl            one aggregate line, then per-run or per-check lines
//! trajectory.csv           single runs
//! trajectories/run_NNNNNN.csv
//! ```

mod config;
mod output;

use std::io;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde::Serialize;
use serde_json::{json, Map, Value};

pub use config::{
    parse_config, parse_document, serialize_config, ConfigError, ExperimentConfig, ExperimentKind,
    InitConfig, ModelConfig, ObjectiveConfig, OutputFormat,
};
pub use output::{
    csv_header, csv_row, emit_trajectory, json_lines, record_json, trajectory_csv,
    trajectory_json_lines,
};

use crate::analysis::{
    claim6_dichotomy_check, convergence_basin_experiment, line_search_property_suite,
    remark_inequality_experiment, BasinConfig, Claim6Config, ObjectiveTag, RemarkReport,
    DEFAULT_HESSIAN_STEP, DEFAULT_HESSIAN_TOL,
};
use crate::optimizers::{run_method, Trajectory};

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const INVARIANT_VIOLATION: i32 = 1;
    pub const CONFIG: i32 = 2;
    pub const IO: i32 = 3;
    pub const RUN: i32 = 4;
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(#[from] ConfigError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("run failed: {0}")]
    Run(#[from] crate::error::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => exit::CONFIG,
            CliError::Io { .. } => exit::IO,
            CliError::Run(_) => exit::RUN,
        }
    }

    fn io(path: &Path, source: io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunEntry {
    pub index: usize,
    pub wall_clock_seconds: f64,
    pub path: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub config: ExperimentConfig,
    pub summary_path: PathBuf,
    pub total_wall_clock_seconds: f64,
    pub runs: Vec<RunEntry>,
}

#[derive(Debug)]
pub struct ExperimentOutcome {
    pub manifest: RunManifest,
    pub manifest_path: PathBuf,
    /// Falsified invariants; nonzero means the process should fail.
    pub violations: usize,
}

impl ExperimentOutcome {
    pub fn exit_code(&self) -> i32 {
        if self.violations == 0 {
            exit::OK
        } else {
            exit::INVARIANT_VIOLATION
        }
    }
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    output::write_file(path, bytes).map_err(|e| CliError::io(path, e))
}

/// Collects per-run files written from worker threads.
struct RunSink {
    dir: PathBuf,
    width: usize,
    format: OutputFormat,
    entries: Mutex<Vec<RunEntry>>,
    error: Mutex<Option<CliError>>,
}

impl RunSink {
    fn new(cfg: &ExperimentConfig) -> Self {
        Self {
            dir: cfg.output_dir.join("trajectories"),
            width: cfg.samples.saturating_sub(1).to_string().len().max(6),
            format: cfg.format,
            entries: Mutex::new(Vec::new()),
            error: Mutex::new(None),
        }
    }

    fn accept(&self, index: usize, t: &Trajectory, elapsed: Duration) {
        let path = self.dir.join(format!(
            "run_{index:0w$}.{}",
            self.format.extension(),
            w = self.width
        ));
        match emit_trajectory(t, self.format, &path) {
            Ok(()) => self.entries.lock().unwrap().push(RunEntry {
                index,
                wall_clock_seconds: elapsed.as_secs_f64(),
                path,
            }),
            Err(e) => {
                self.error
                    .lock()
                    .unwrap()
                    .get_or_insert(CliError::io(&path, e));
            }
        }
    }

    fn finish(self) -> Result<Vec<RunEntry>, CliError> {
        if let Some(e) = self.error.into_inner().unwrap() {
            return Err(e);
        }
        let mut entries = self.entries.into_inner().unwrap();
        entries.sort_by_key(|e| e.index);
        Ok(entries)
    }
}

fn tagged(record: &str, value: impl Serialize) -> Value {
    let mut map = Map::new();
    map.insert("record".into(), json!(record));
    if let Value::Object(fields) = serde_json::to_value(value).expect("plain data serializes") {
        map.extend(fields);
    }
    Value::Object(map)
}

fn remark_lines(report: &RemarkReport, lines: &mut Vec<Value>) {
    lines.push(json!({
        "record": "remark",
        "instances": report.instances,
        "checked": report.checked,
        "exhausted": report.exhausted,
        "violations": report.violations.len(),
        "exceeds_min": report.exceeds_min,
        "exceeds_min_frequency": report.exceeds_min_frequency,
        "passed": report.passed(),
    }));
    for v in &report.violations {
        lines.push(tagged("violation", v));
    }
}

/// Runs the experiment described by a validated `cfg` and writes its files
/// under `cfg.output_dir`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutcome, CliError> {
    cfg.validate()?;
    let start = Instant::now();
    let dir = &cfg.output_dir;
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let summary_path = dir.join("summary.jsonl");
    let params = cfg.params();
    let run = cfg.run_options();
    let objective = cfg.objective.build();
    let model = cfg.model.as_ref().map(|m| m.build());

    let mut lines: Vec<Value> = Vec::new();
    let mut violations = 0;
    let runs = match cfg.kind {
        ExperimentKind::Single => {
            let method = cfg.method.expect("validated method");
            let z0 = objective.point(cfg.start_point())?;
            let t0 = Instant::now();
            let t = run_method(method, &objective, &z0, &params, model.as_deref(), &run)?;
            let elapsed = t0.elapsed();
            let path = dir.join(format!("trajectory.{}", cfg.format.extension()));
            emit_trajectory(&t, cfg.format, &path).map_err(|e| CliError::io(&path, e))?;
            lines.push(json!({
                "record": "summary",
                "kind": cfg.kind.as_str(),
                "method": method,
                "verdict": t.verdict.kind,
                "iterations": t.iterations(),
                "final_point": t.final_point(),
                "final_gradient_norm": t.verdict.final_gradient_norm,
            }));
            vec![RunEntry {
                index: 0,
                wall_clock_seconds: elapsed.as_secs_f64(),
                path,
            }]
        }
        ExperimentKind::Sweep | ExperimentKind::Basin => {
            let method = cfg.method.expect("validated method");
            let basin = BasinConfig {
                method,
                objective_tag: match cfg.objective {
                    ObjectiveConfig::ExampleG2d {} => ObjectiveTag::ExampleG2d,
                    _ => ObjectiveTag::Custom,
                },
                objective,
                model,
                samples: cfg.samples,
                init_box: cfg.sample_box(),
                base_params: params,
                perturbation: cfg.init.perturbation,
                run,
                classify: cfg.kind == ExperimentKind::Basin,
                hessian_step: DEFAULT_HESSIAN_STEP,
                hessian_tol: DEFAULT_HESSIAN_TOL,
                seed: cfg.seed,
            };
            let sink = RunSink::new(cfg);
            let report = convergence_basin_experiment(&basin, |i, t, d| sink.accept(i, t, d))?;
            let runs = sink.finish()?;
            let mut head = json!({
                "record": "summary",
                "kind": cfg.kind.as_str(),
                "method": method,
                "samples": report.samples,
                "verdict_counts": report.verdict_counts,
                "critical_fraction": report.critical_fraction(),
            });
            if cfg.kind == ExperimentKind::Basin {
                head["class_counts"] = json!(report.class_counts);
                head["minimum_or_origin_fraction"] = json!(report.minimum_or_origin_fraction());
            }
            lines.push(head);
            lines.extend(report.outcomes.iter().map(|o| tagged("run", o)));
            runs
        }
        ExperimentKind::Claim6 => {
            let model = cfg
                .model
                .as_ref()
                .and_then(|m| m.example())
                .expect("validated example model");
            let mut c6 = Claim6Config::new(cfg.samples, params, model, cfg.seed);
            c6.init_box = cfg.sample_box();
            c6.run = run;
            let sink = RunSink::new(cfg);
            let report = claim6_dichotomy_check(&c6, |i, t, d| sink.accept(i, t, d))?;
            let runs = sink.finish()?;
            violations += report.anomalies;
            lines.push(json!({
                "record": "summary",
                "kind": cfg.kind.as_str(),
                "samples": report.samples,
                "off_axis_limit": report.off_axis_limit,
                "axis_cluster": report.axis_cluster,
                "anomalies": report.anomalies,
                "passed": report.passed(),
            }));
            lines.extend(report.outcomes.iter().map(|o| tagged("run", o)));
            runs
        }
        ExperimentKind::RemarkCheck | ExperimentKind::Invariants => {
            let t0 = Instant::now();
            let report = remark_inequality_experiment(cfg.samples, cfg.seed)?;
            violations += report.violations.len();
            let properties = if cfg.kind == ExperimentKind::Invariants {
                line_search_property_suite(cfg.samples, cfg.seed)
            } else {
                Vec::new()
            };
            violations += properties.iter().map(|p| p.violations).sum::<usize>();
            lines.push(json!({
                "record": "summary",
                "kind": cfg.kind.as_str(),
                "samples": cfg.samples,
                "violations": violations,
                "passed": violations == 0,
                "wall_clock_seconds": t0.elapsed().as_secs_f64(),
            }));
            remark_lines(&report, &mut lines);
            for p in &properties {
                let mut v = tagged("property", p);
                v["passed"] = json!(p.passed());
                lines.push(v);
            }
            Vec::new()
        }
    };

    write(&summary_path, json_lines(&lines).as_bytes())?;
    let manifest = RunManifest {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        config: cfg.clone(),
        summary_path,
        total_wall_clock_seconds: start.elapsed().as_secs_f64(),
        runs,
    };
    let manifest_path = dir.join("manifest.json");
    let body = serde_json::to_string_pretty(&manifest).expect("plain data serializes");
    write(&manifest_path, body.as_bytes())?;
    Ok(ExperimentOutcome {
        manifest,
        manifest_path,
        violations,
    })
}
