//! Result emission: CSV tables with lossless float formatting and a JSON
//! manifest describing the run.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::ScenarioConfig;
use crate::error::{HarnessError, Result};

/// Formats a float with 17 significant digits, enough to round-trip any
/// IEEE double exactly.
pub fn float_field(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".to_string()
    } else if x > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

/// Writes one CSV file with the given header and pre-formatted rows.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let io_err = |e: std::io::Error| HarnessError::Io {
        path: path.to_path_buf(),
        source: e,
    };
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => io_err(io),
            other => HarnessError::Config(format!("{}: {other:?}", path.display())),
        })?;
    let emit = |r: csv::Result<()>| {
        r.map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => io_err(io),
            other => HarnessError::Config(format!("{}: {other:?}", path.display())),
        })
    };
    emit(w.write_record(header))?;
    for row in rows {
        debug_assert_eq!(row.len(), header.len(), "row width must match the header");
        emit(w.write_record(row))?;
    }
    w.flush().map_err(io_err)?;
    Ok(())
}

/// Description of one emitted file, recorded in the manifest.
#[derive(Debug, Clone, Serialize)]
pub struct FileRecord {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: usize,
}

/// JSON sidecar capturing everything needed to rerun and to parse the CSVs.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    /// Version of the CSV/JSON schemas in this directory.
    pub schema_version: u32,
    pub tool: String,
    pub experiment: String,
    pub config: ScenarioConfig,
    pub derived: DerivedQuantities,
    pub files: Vec<FileRecord>,
    /// Wall-clock timings per stage. Informational; excluded from any
    /// reproducibility comparison.
    pub timings_ms: BTreeMap<String, f64>,
}

/// Values computed from the configuration that downstream tooling usually
/// wants without redoing the math.
#[derive(Debug, Serialize)]
pub struct DerivedQuantities {
    /// Reference SNR on linear scale.
    pub p_bar_linear: f64,
    /// Effective SNR at the near range edge, array gain excluded.
    pub rho: f64,
    /// Interference-free direction budget of the array/sector pair.
    pub direction_budget: usize,
    /// Terminal count the run actually used, when a single count applies.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub users: Option<usize>,
    /// Sweep counts, for sweep runs.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_values: Option<Vec<usize>>,
}

/// Collects files and timings for one experiment directory, then writes the
/// manifest alongside them.
pub struct Emitter {
    dir: PathBuf,
    files: Vec<FileRecord>,
    timings_ms: BTreeMap<String, f64>,
}

impl Emitter {
    pub fn new(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir).map_err(|e| HarnessError::Io {
            path: dir.to_path_buf(),
            source: e,
        })?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
            timings_ms: BTreeMap::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Writes `name` as CSV and records it for the manifest.
    pub fn table(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
        write_csv(&self.dir.join(name), header, rows)?;
        self.files.push(FileRecord {
            name: name.to_string(),
            columns: header.iter().map(|c| c.to_string()).collect(),
            rows: rows.len(),
        });
        Ok(())
    }

    pub fn timing(&mut self, stage: &str, ms: f64) {
        self.timings_ms.insert(stage.to_string(), ms);
    }

    /// Writes `manifest.json` and returns the emitted file list.
    pub fn finish(
        self,
        experiment: &str,
        cfg: &ScenarioConfig,
        derived: DerivedQuantities,
    ) -> Result<Vec<FileRecord>> {
        let manifest = RunManifest {
            schema_version: 1,
            tool: format!("swarm-sim {}", env!("CARGO_PKG_VERSION")),
            experiment: experiment.to_string(),
            config: cfg.clone(),
            derived,
            files: self.files.clone(),
            timings_ms: self.timings_ms,
        };
        let path = self.dir.join("manifest.json");
        let text = serde_json::to_string_pretty(&manifest)
            .map_err(|e| HarnessError::Config(format!("manifest serialization: {e}")))?;
        std::fs::write(&path, text + "\n").map_err(|e| HarnessError::Io {
            path,
            source: e,
        })?;
        Ok(self.files)
    }
}
