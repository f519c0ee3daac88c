//! Run reports and CSV tables.
//!
//! Floats are written with 17 significant digits in scientific notation, and
//! maps keep a fixed key order, so a rerun with the same config and seed
//! reproduces every file byte for byte.

use std::collections::BTreeMap;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use crate::config::Experiment;

/// `x` with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Pretty JSON with fixed-precision floats.
struct FixedFloats<'a>(PrettyFormatter<'a>);

impl Formatter for FixedFloats<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        w.write_all(fmt_f64(value).as_bytes())
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }

    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }

    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }

    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }

    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }

    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }

    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

/// Serializes with fixed-precision floats, pretty-printed.
pub fn to_json(value: &impl Serialize) -> serde_json::Result<Vec<u8>> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, FixedFloats(PrettyFormatter::new()));
    value.serialize(&mut ser)?;
    out.push(b'\n');
    Ok(out)
}

/// Hex SHA-256 of the fixed-precision JSON form of `value`.
pub fn hash(value: &impl Serialize) -> serde_json::Result<String> {
    let digest = Sha256::digest(to_json(value)?);
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    /// `value ≤ bound`.
    AtMost,
    /// `value > bound`.
    Above,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub relation: Relation,
    pub bound: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub command: String,
    pub status: &'static str,
    pub seed: Option<u64>,
    pub config_hash: String,
    pub versions: BTreeMap<&'static str, &'static str>,
    pub tolerances: BTreeMap<&'static str, f64>,
    pub warnings: Vec<String>,
    pub checks: Vec<Check>,
    pub artifacts: Vec<String>,
    pub results: Map<String, Value>,
    pub config: Value,
}

impl Report {
    pub fn new(command: &str, exp: &Experiment) -> serde_json::Result<Self> {
        let mut tolerances: BTreeMap<&'static str, f64> = exp.tolerances().table().into_iter().collect();
        tolerances.insert("solver_tol", exp.config.solver.tol);
        tolerances.insert("cluster_tol", exp.config.solver.cluster_tol);
        let versions = BTreeMap::from([
            ("mflab", env!("CARGO_PKG_VERSION")),
            ("mflab-core", mflab_core::VERSION),
            ("report-format", "1"),
        ]);
        Ok(Self {
            command: command.to_string(),
            status: "pass",
            seed: exp.config.run.seed,
            config_hash: hash(&exp.config)?,
            versions,
            tolerances,
            warnings: exp.model.warnings().to_vec(),
            checks: Vec::new(),
            artifacts: Vec::new(),
            results: Map::new(),
            config: serde_json::to_value(&exp.config)?,
        })
    }

    fn push(&mut self, name: String, value: f64, relation: Relation, bound: f64) -> bool {
        let passed = match relation {
            Relation::AtMost => value <= bound,
            Relation::Above => value > bound,
        };
        if !passed {
            log::warn!("check failed: {name} = {value:e} (bound {bound:e})");
            self.status = "fail";
        }
        self.checks.push(Check { name, value, relation, bound, passed });
        passed
    }

    /// Asserts `value ≤ bound`; NaN fails.
    pub fn at_most(&mut self, name: impl Into<String>, value: f64, bound: f64) -> bool {
        self.push(name.into(), value, Relation::AtMost, bound)
    }

    /// Asserts `value > bound`; NaN fails.
    pub fn above(&mut self, name: impl Into<String>, value: f64, bound: f64) -> bool {
        self.push(name.into(), value, Relation::Above, bound)
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn result(&mut self, key: &str, value: impl Serialize) -> anyhow::Result<()> {
        self.results.insert(key.to_string(), serde_json::to_value(value)?);
        Ok(())
    }

    /// Writes a CSV table into `dir` and records it as an artifact.
    pub fn table(&mut self, dir: &Path, name: &str, header: &[&str], rows: &[Vec<String>]) -> anyhow::Result<()> {
        let mut w = csv::Writer::from_path(dir.join(name))?;
        w.write_record(header)?;
        for row in rows {
            w.write_record(row)?;
        }
        w.flush()?;
        self.artifacts.push(name.to_string());
        Ok(())
    }

    /// Records a file written by other means.
    pub fn artifact(&mut self, name: &str) {
        self.artifacts.push(name.to_string());
    }

    pub fn write(&self, dir: &Path) -> anyhow::Result<PathBuf> {
        let path = dir.join("report.json");
        std::fs::write(&path, to_json(self)?)?;
        Ok(path)
    }
}
