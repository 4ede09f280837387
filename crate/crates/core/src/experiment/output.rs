//! Result records and the on-disk output layout.
//!
//! Every run writes `counts.csv`, `estimates.jsonl` and `report.txt`
//! (plus suite-specific files), then `manifest.json` with SHA-256 checksums of
//! the others. Timing lives only in the manifest so the data files are
//! bit-identical across reruns.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use super::config::ExperimentConfig;
use crate::stats::EstimateWithError;

/// Schema line at the top of `counts.csv`.
pub const COUNTS_SCHEMA: &str = "# voterdyn counts v1";

/// One estimate with the settings that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateRecord {
    pub estimator: String,
    pub parameters: BTreeMap<String, Value>,
    pub value: f64,
    pub std_error: f64,
    pub replications: usize,
    pub seed: u64,
}

impl EstimateRecord {
    pub fn new(estimator: &str, estimate: &EstimateWithError, seed: u64) -> Self {
        Self {
            estimator: estimator.to_string(),
            parameters: BTreeMap::new(),
            value: estimate.value,
            std_error: estimate.std_error,
            replications: estimate.replications,
            seed,
        }
    }

    pub fn with(mut self, key: &str, value: impl Serialize) -> Self {
        self.parameters.insert(
            key.to_string(),
            serde_json::to_value(value).expect("serializable parameter"),
        );
        self
    }
}

/// Pass/fail outcome of one check with its numbers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: &str, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.to_string(),
            passed,
            detail: detail.into(),
        }
    }

    pub fn line(&self) -> String {
        format!(
            "{} {}: {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.detail
        )
    }
}

/// Everything a suite produces.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SuiteOutput {
    pub checks: Vec<Check>,
    pub records: Vec<EstimateRecord>,
    /// Free-form report lines printed before the checks.
    pub report: Vec<String>,
    /// `(file name, contents)` pairs such as `counts.csv`.
    pub files: Vec<(String, String)>,
}

impl SuiteOutput {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn report_text(&self) -> String {
        let mut lines = self.report.clone();
        lines.extend(self.checks.iter().map(Check::line));
        let mut text = lines.join("\n");
        text.push('\n');
        text
    }

    pub fn records_jsonl(&self) -> String {
        self.records
            .iter()
            .map(|r| serde_json::to_string(r).expect("records serialize") + "\n")
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub tool_version: String,
    /// The effective configuration in INI form.
    pub config: String,
    pub started_unix: f64,
    pub finished_unix: f64,
    pub wall_time_seconds: f64,
    /// File name to hex SHA-256.
    pub checksums: BTreeMap<String, String>,
}

fn unix_now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0.0, |d| d.as_secs_f64())
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Start time of a run; call [`RunClock::finish`] once the suite is done.
pub struct RunClock {
    started: f64,
    instant: std::time::Instant,
}

impl RunClock {
    pub fn start() -> Self {
        Self {
            started: unix_now(),
            instant: std::time::Instant::now(),
        }
    }

    /// Writes the suite files and the manifest into `dir`.
    pub fn finish(
        self,
        dir: &Path,
        command: &str,
        config: &ExperimentConfig,
        out: &SuiteOutput,
    ) -> std::io::Result<PathBuf> {
        fs::create_dir_all(dir)?;
        let mut files: Vec<(String, String)> = out.files.clone();
        if !files.iter().any(|(name, _)| name == "counts.csv") {
            files.push((
                "counts.csv".into(),
                format!("{COUNTS_SCHEMA}\nreplication,time,pattern,count\n"),
            ));
        }
        files.push(("estimates.jsonl".into(), out.records_jsonl()));
        files.push(("report.txt".into(), out.report_text()));
        let mut checksums = BTreeMap::new();
        for (name, contents) in &files {
            fs::write(dir.join(name), contents)?;
            checksums.insert(name.clone(), sha256_hex(contents.as_bytes()));
        }
        let manifest = RunManifest {
            command: command.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config: config.to_ini(),
            started_unix: self.started,
            finished_unix: unix_now(),
            wall_time_seconds: self.instant.elapsed().as_secs_f64(),
            checksums,
        };
        let path = dir.join("manifest.json");
        fs::write(
            &path,
            serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n",
        )?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn records_serialize_to_one_line() {
        let r = EstimateRecord::new("mean", &EstimateWithError::new(1.5, 0.25, 10), 3).with("t", 1.0);
        let out = SuiteOutput {
            records: vec![r.clone()],
            ..Default::default()
        };
        let line = out.records_jsonl();
        assert_eq!(line.lines().count(), 1);
        let back: EstimateRecord = serde_json::from_str(line.trim()).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn manifest_checksums_match_files() {
        let dir = tempfile::tempdir().unwrap();
        let out = SuiteOutput {
            checks: vec![Check::new("demo", true, "ok")],
            ..Default::default()
        };
        let path = RunClock::start()
            .finish(dir.path(), "simulate", &ExperimentConfig::default(), &out)
            .unwrap();
        let manifest: RunManifest = serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap();
        for (name, sum) in &manifest.checksums {
            assert_eq!(&sha256_hex(&fs::read(dir.path().join(name)).unwrap()), sum);
        }
        assert_eq!(
            fs::read_to_string(dir.path().join("report.txt")).unwrap(),
            "PASS demo: ok\n"
        );
    }

    #[test]
    fn sha256_of_empty_input() {
        assert_eq!(
            sha256_hex(b""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
    }
}
