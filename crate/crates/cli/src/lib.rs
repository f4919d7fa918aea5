//! Run descriptors, dispatch and result files for the `vir-lab` binary.

pub mod error;
pub mod experiments;
pub mod inputs;
pub mod output;
pub mod payloads;

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

pub use error::{CliError, CliResult};
pub use output::{Outcome, Table, Verdict};
pub use payloads::{Experiment, Plan};

pub const OUTPUT_ENV: &str = "VIR_LAB_OUT";
pub const DEFAULT_OUTPUT_DIR: &str = "vir-lab-out";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunDescriptor {
    pub experiment: Experiment,
    /// Experiment-specific; missing or `null` means all defaults.
    #[serde(default)]
    pub payload: Value,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

impl RunDescriptor {
    pub fn defaults(experiment: Experiment) -> Self {
        Self {
            experiment,
            payload: experiment.default_payload(),
            seed: 0,
            output_dir: None,
        }
    }

    pub fn parse(text: &str) -> CliResult<Self> {
        serde_json::from_str(text).map_err(|e| CliError::DescriptorInvalid(e.to_string()))
    }

    pub fn from_path(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    /// Parse and check the payload against the experiment's schema.
    pub fn plan(&self) -> CliResult<Plan> {
        payloads::plan(self.experiment, &self.payload)
            .map_err(|e| CliError::DescriptorInvalid(format!("{}: {e}", self.experiment.name())))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub descriptor: RunDescriptor,
    pub seed: u64,
    pub wall_time_seconds: f64,
    pub csv_path: PathBuf,
    pub rows: usize,
    pub summary: Map<String, Value>,
    pub verdicts: Vec<Verdict>,
    pub passed: bool,
}

/// Run without writing anything.
pub fn evaluate(d: &RunDescriptor) -> CliResult<Outcome> {
    experiments::execute(&d.plan()?, d.seed)
}

/// Run `d` and write `<experiment>.csv` and `<experiment>.report.json`
/// into `out_dir`.
pub fn run(d: &RunDescriptor, out_dir: &Path) -> CliResult<RunReport> {
    let plan = d.plan()?;
    let start = Instant::now();
    let outcome = experiments::execute(&plan, d.seed)?;
    let wall = start.elapsed().as_secs_f64();
    let name = d.experiment.name();
    let csv_path = output::csv_path(out_dir, name);
    output::write_file(&csv_path, &outcome.table.to_csv())?;
    let report = RunReport {
        descriptor: d.clone(),
        seed: d.seed,
        wall_time_seconds: wall,
        csv_path,
        rows: outcome.table.len(),
        passed: outcome.passed(),
        summary: outcome.summary,
        verdicts: outcome.verdicts,
    };
    let json = serde_json::to_string_pretty(&report).expect("reports serialize");
    output::write_file(&output::report_path(out_dir, name), &(json + "\n"))?;
    Ok(report)
}

/// `--out`, then `VIR_LAB_OUT`, then the descriptor, then the default.
pub fn resolve_output_dir(flag: Option<&Path>, env: Option<OsString>, d: &RunDescriptor) -> PathBuf {
    if let Some(p) = flag {
        return p.to_path_buf();
    }
    if let Some(e) = env.filter(|e| !e.is_empty()) {
        return PathBuf::from(e);
    }
    d.output_dir.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR))
}

#[derive(Debug, Clone, Serialize)]
pub struct FieldDoc {
    pub name: &'static str,
    #[serde(rename = "type")]
    pub kind: &'static str,
    pub meaning: &'static str,
}

#[derive(Debug, Clone, Serialize)]
pub struct CatalogEntry {
    pub name: &'static str,
    pub description: &'static str,
    pub fields: Vec<FieldDoc>,
    pub defaults: Value,
}

pub fn catalog() -> Vec<CatalogEntry> {
    Experiment::ALL
        .iter()
        .map(|&e| CatalogEntry {
            name: e.name(),
            description: e.description(),
            fields: e
                .fields()
                .iter()
                .map(|&(name, kind, meaning)| FieldDoc { name, kind, meaning })
                .collect(),
            defaults: e.default_payload(),
        })
        .collect()
}
