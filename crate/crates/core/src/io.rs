//! File formats: curve/configuration/report JSON, configuration and measure
//! CSV, and the run manifest. Floats in CSV carry 17 significant digits, so
//! every format round-trips exactly.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::energy::{ConfigPoint, Configuration, Mode};
use crate::equilibrium::DiscreteMeasure;
use crate::error::{Error, Result};
use crate::geometry::{lift_unchecked, GeneratorCurve};

pub const CONFIG_CSV_HEADER: [&str; 5] = ["t", "phi", "x", "y", "zeta"];
pub const MEASURE_CSV_HEADER: [&str; 4] = ["t", "x", "y", "weight"];

fn io_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Io { path: path.display().to_string(), message: e.to_string() }
}

/// `{:.16e}`: 17 significant digits, enough to round-trip any `f64`.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

fn parse_float(field: &str, what: &'static str) -> Result<f64> {
    field.trim().parse().map_err(|e| Error::Format { what, message: format!("`{field}`: {e}") })
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Format { what: "JSON value", message: e.to_string() })?;
    s.push('\n');
    Ok(s)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, to_json(value)?).map_err(|e| io_err(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path, what: &'static str) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Format { what, message: e.to_string() })
}

/// Generator curve from its JSON form, validated.
pub fn read_curve(path: &Path) -> Result<GeneratorCurve> {
    let curve: GeneratorCurve = read_json(path, "curve file")?;
    curve.validate()?;
    Ok(curve)
}

pub fn read_config_json(path: &Path) -> Result<Configuration> {
    let c: Configuration = read_json(path, "configuration file")?;
    c.validate()?;
    Ok(c)
}

/// Configuration rows `t,phi,x,y,zeta`; `phi` is empty in curve mode and
/// `zeta` is then 0.
pub fn config_to_csv(config: &Configuration) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::Format { what: "configuration CSV", message: e.to_string() };
    w.write_record(CONFIG_CSV_HEADER).map_err(csv_err)?;
    for p in &config.points {
        let z = config.curve.eval_unchecked(p.t);
        let q = lift_unchecked(z, p.phi.unwrap_or(0.0));
        let phi = p.phi.map(format_float).unwrap_or_default();
        w.write_record([format_float(p.t), phi, format_float(q.x), format_float(q.y), format_float(q.zeta)])
            .map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Format { what: "configuration CSV", message: e.to_string() })?;
    String::from_utf8(bytes).map_err(|e| Error::Format { what: "configuration CSV", message: e.to_string() })
}

pub fn write_config_csv(path: &Path, config: &Configuration) -> Result<()> {
    fs::write(path, config_to_csv(config)?).map_err(|e| io_err(path, e))
}

/// Rebuilds a configuration on `curve` from the `t` and `phi` columns.
pub fn read_config_csv(path: &Path, curve: GeneratorCurve) -> Result<Configuration> {
    let mut r = csv::Reader::from_path(path).map_err(|e| io_err(path, e))?;
    check_header(&mut r, &CONFIG_CSV_HEADER, "configuration CSV")?;
    let mut points = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| Error::Format { what: "configuration CSV", message: e.to_string() })?;
        let t = parse_float(&rec[0], "configuration CSV")?;
        let phi = match rec[1].trim() {
            "" => None,
            s => Some(parse_float(s, "configuration CSV")?),
        };
        points.push(ConfigPoint { t, phi });
    }
    let mode = if points.first().is_some_and(|p| p.phi.is_some()) { Mode::Surface3D } else { Mode::Curve1D };
    let c = Configuration { mode, curve, points };
    c.validate()?;
    Ok(c)
}

fn check_header<R: std::io::Read>(r: &mut csv::Reader<R>, expect: &[&str], what: &'static str) -> Result<()> {
    let header = r.headers().map_err(|e| Error::Format { what, message: e.to_string() })?;
    if header.iter().ne(expect.iter().copied()) {
        return Err(Error::Format { what, message: format!("expected columns {}", expect.join(",")) });
    }
    Ok(())
}

/// Measure rows `t,x,y,weight`.
pub fn measure_to_csv(m: &DiscreteMeasure) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::Format { what: "measure CSV", message: e.to_string() };
    w.write_record(MEASURE_CSV_HEADER).map_err(csv_err)?;
    for ((t, z), wt) in m.params.iter().zip(&m.nodes).zip(&m.weights) {
        w.write_record([format_float(*t), format_float(z.x), format_float(z.y), format_float(*wt)])
            .map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Format { what: "measure CSV", message: e.to_string() })?;
    String::from_utf8(bytes).map_err(|e| Error::Format { what: "measure CSV", message: e.to_string() })
}

pub fn write_measure_csv(path: &Path, m: &DiscreteMeasure) -> Result<()> {
    fs::write(path, measure_to_csv(m)?).map_err(|e| io_err(path, e))
}

pub fn read_measure_csv(path: &Path) -> Result<DiscreteMeasure> {
    let mut r = csv::Reader::from_path(path).map_err(|e| io_err(path, e))?;
    check_header(&mut r, &MEASURE_CSV_HEADER, "measure CSV")?;
    let mut m = DiscreteMeasure { nodes: Vec::new(), params: Vec::new(), weights: Vec::new() };
    for rec in r.records() {
        let rec = rec.map_err(|e| Error::Format { what: "measure CSV", message: e.to_string() })?;
        let v: Vec<f64> = (0..4).map(|i| parse_float(&rec[i], "measure CSV")).collect::<Result<_>>()?;
        m.params.push(v[0]);
        m.nodes.push(crate::geometry::PlanePoint::new(v[1], v[2]));
        m.weights.push(v[3]);
    }
    if m.is_empty() {
        return Err(Error::EmptyInput("measure CSV has no rows"));
    }
    Ok(m)
}

/// Everything needed to repeat a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub args: Vec<String>,
    pub curve: GeneratorCurve,
    pub kernel: String,
    /// Point count (optimize) or node count (equilibrium).
    pub count: usize,
    pub seed: Option<u64>,
    /// Solver settings as used.
    pub options: serde_json::Value,
    pub tool_version: String,
    /// Seconds since the Unix epoch; `SOURCE_DATE_EPOCH` when set.
    pub started_unix: u64,
    pub finished_unix: u64,
    pub outputs: Vec<String>,
}

pub const MANIFEST_FILE: &str = "manifest.json";

/// Wall clock in Unix seconds, overridden by `SOURCE_DATE_EPOCH` for
/// reproducible output.
pub fn timestamp() -> u64 {
    if let Some(v) = std::env::var("SOURCE_DATE_EPOCH").ok().and_then(|s| s.trim().parse().ok()) {
        return v;
    }
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

pub fn write_manifest(dir: &Path, manifest: &RunManifest) -> Result<()> {
    write_json(&dir.join(MANIFEST_FILE), manifest)
}

pub fn read_manifest(dir: &Path) -> Result<RunManifest> {
    read_json(&dir.join(MANIFEST_FILE), "manifest")
}

/// Either input format accepted by the plotter.
#[derive(Debug, Clone, PartialEq)]
pub enum PlotInput {
    Configuration(Configuration),
    Measure(DiscreteMeasure),
}

/// Sniffs a plot input: configuration JSON, or measure CSV by header.
pub fn read_plot_input(path: &Path, curve: Option<&GeneratorCurve>) -> Result<PlotInput> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let first = text.lines().next().unwrap_or_default().trim();
    if first.starts_with('{') {
        return Ok(PlotInput::Configuration(read_config_json(path)?));
    }
    if first == MEASURE_CSV_HEADER.join(",") {
        let m = read_measure_csv(path)?;
        m.validate()?;
        return Ok(PlotInput::Measure(m));
    }
    if first == CONFIG_CSV_HEADER.join(",") {
        let curve = curve.ok_or_else(|| Error::Format {
            what: "plot input",
            message: "a configuration CSV needs the curve (pass --curve)".into(),
        })?;
        return Ok(PlotInput::Configuration(read_config_csv(path, curve.clone())?));
    }
    Err(Error::Format { what: "plot input", message: format!("unrecognized header `{first}`") })
}
