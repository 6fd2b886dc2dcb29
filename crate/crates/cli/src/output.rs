use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use main_effects::evaluation::OrmseReport;
use main_effects::{EffectCurve, ExperimentConfig};
use serde::Serialize;

use crate::CliError;

pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))
}

/// `x,value` rows for one curve.
pub fn write_curve(path: &Path, curve: &EffectCurve) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["x", "value"])?;
    for (x, v) in curve.grid().iter().zip(curve.values()) {
        w.serialize((x, v))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

/// Provenance of one invocation. Timestamps live only here.
#[derive(Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config: Option<ExperimentConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data: Option<PathBuf>,
    pub predictor: String,
    pub seed: u64,
    pub rows: usize,
    pub dims: usize,
    /// Per-dimension (min, max) used to map inputs to the unit interval.
    pub normalizer: Vec<(f64, f64)>,
    pub queries: BTreeMap<String, u64>,
    pub outputs: Vec<PathBuf>,
    pub started_at: String,
    pub finished_at: String,
}

impl RunManifest {
    pub const FILE: &'static str = "manifest.json";
}

#[derive(Serialize)]
struct OrmseRow<'a> {
    function: &'a str,
    dependence: &'a str,
    method: &'a str,
    rep: usize,
    seed: u64,
    ormse: f64,
    queries: u64,
    wall_ms: Option<f64>,
}

/// One row per method and repetition. `wall_ms` is left empty unless
/// `timings` is set, so repeated runs produce identical files.
pub fn write_ormse_csv(path: &Path, reports: &[OrmseReport], timings: bool) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path)?;
    for r in reports {
        w.serialize(OrmseRow {
            function: &r.function,
            dependence: &r.dependence,
            method: r.method.as_str(),
            rep: r.rep,
            seed: r.seed,
            ormse: r.ormse,
            queries: r.queries,
            wall_ms: timings.then_some(r.wall_ms),
        })?;
    }
    w.flush()?;
    Ok(())
}
