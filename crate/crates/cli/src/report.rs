//! Deterministic report bundles: a human-readable summary, per-node CSV
//! tables, the settings and aggregate value tables, and a machine-readable
//! manifest carrying the input hash.
//!
//! Re-running the same scenario with the same build produces byte-identical
//! bundles: no timestamps, no absolute paths, floats rendered with Rust's
//! shortest round-trip formatting ('.' separator, locale-independent).
//! Every numeric the summary mentions is registered through
//! [`BundleWriter::setting`] or [`BundleWriter::record`], so it also appears
//! in settings.csv or aggregates.csv.

use std::fmt::Display;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::scenario::sha256_hex;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct VerdictFlags {
    pub not_closed: bool,
    pub not_injective: bool,
    pub not_stable: bool,
}

impl VerdictFlags {
    /// 0 when everything certified; 2 when any verdict is NotClosed,
    /// not-injective or not-stable (errors exit 1 before a bundle exists).
    pub fn exit_code(&self) -> i32 {
        if self.not_closed || self.not_injective || self.not_stable {
            2
        } else {
            0
        }
    }
}

#[derive(Debug, Clone)]
pub struct ReportBundle {
    pub dir: PathBuf,
    pub files: Vec<PathBuf>,
    pub flags: VerdictFlags,
}

#[derive(Serialize)]
struct Manifest<'a> {
    version: &'a str,
    scenario: &'a str,
    scenario_sha256: &'a str,
    settings: Vec<(String, String)>,
    flags: VerdictFlags,
    exit_code: i32,
    files: Vec<ManifestFile>,
}

#[derive(Serialize)]
struct ManifestFile {
    name: String,
    sha256: String,
}

/// Accumulates the whole bundle in memory and writes it in one deterministic
/// pass. Output writing is single-threaded by construction.
pub struct BundleWriter {
    out_dir: PathBuf,
    summary: String,
    settings: Vec<(String, String)>,
    aggregates: Vec<(String, String, String)>,
    csv_files: Vec<(String, String)>,
    pub flags: VerdictFlags,
}

pub fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

pub fn fmt_opt_f64(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

impl BundleWriter {
    pub fn new(out_dir: &Path) -> Self {
        BundleWriter {
            out_dir: out_dir.to_path_buf(),
            summary: String::new(),
            settings: Vec::new(),
            aggregates: Vec::new(),
            csv_files: Vec::new(),
            flags: VerdictFlags::default(),
        }
    }

    pub fn line(&mut self, text: impl AsRef<str>) {
        self.summary.push_str(text.as_ref());
        self.summary.push('\n');
    }

    pub fn blank(&mut self) {
        self.summary.push('\n');
    }

    /// Registers an effective setting and returns its rendered value for use
    /// in summary text.
    pub fn setting(&mut self, key: &str, value: impl Display) -> String {
        let rendered = value.to_string();
        self.settings.push((key.to_string(), rendered.clone()));
        rendered
    }

    /// Registers a per-task aggregate value and returns its rendered form;
    /// summary text must use the returned string so that no number exists
    /// only in the summary.
    pub fn record(&mut self, task: impl Into<String>, key: impl Into<String>, value: impl Display) -> String {
        let rendered = value.to_string();
        self.aggregates.push((task.into(), key.into(), rendered.clone()));
        rendered
    }

    pub fn add_csv(&mut self, name: &str, header: &str, rows: &[String]) {
        let mut content = String::with_capacity(rows.len() * 32 + header.len() + 1);
        content.push_str(header);
        content.push('\n');
        for row in rows {
            content.push_str(row);
            content.push('\n');
        }
        self.csv_files.push((name.to_string(), content));
    }

    /// Writes summary.txt, settings.csv, aggregates.csv, the task CSVs and
    /// manifest.json, hashing each file into the manifest.
    pub fn finish(self, scenario_name: &str, scenario_sha256: &str) -> std::io::Result<ReportBundle> {
        std::fs::create_dir_all(&self.out_dir)?;
        let mut files: Vec<(String, String)> = Vec::new();

        files.push(("summary.txt".to_string(), self.summary));

        let mut settings_csv = String::from("key,value\n");
        for (k, v) in &self.settings {
            settings_csv.push_str(&format!("{k},{v}\n"));
        }
        files.push(("settings.csv".to_string(), settings_csv));

        let mut aggregates_csv = String::from("task,key,value\n");
        for (task, key, value) in &self.aggregates {
            aggregates_csv.push_str(&format!("{task},{key},{value}\n"));
        }
        files.push(("aggregates.csv".to_string(), aggregates_csv));

        files.extend(self.csv_files);

        let manifest = Manifest {
            version: "1",
            scenario: scenario_name,
            scenario_sha256,
            settings: self.settings,
            flags: self.flags,
            exit_code: self.flags.exit_code(),
            files: files
                .iter()
                .map(|(name, content)| ManifestFile {
                    name: name.clone(),
                    sha256: sha256_hex(content.as_bytes()),
                })
                .collect(),
        };
        let mut manifest_json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        manifest_json.push('\n');
        files.push(("manifest.json".to_string(), manifest_json));

        let mut paths = Vec::with_capacity(files.len());
        for (name, content) in files {
            let path = self.out_dir.join(&name);
            std::fs::write(&path, content.as_bytes())?;
            paths.push(path);
        }
        Ok(ReportBundle { dir: self.out_dir, files: paths, flags: self.flags })
    }
}
