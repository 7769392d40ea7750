//! CSV and JSON artifacts with provenance sidecars.
//!
//! Numbers are written with 17 significant digits so they parse back to the
//! same `f64`. Every CSV `x.csv` gets an `x.meta.json` next to it; JSON
//! outputs carry the same block under a `"provenance"` key.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use collarflow_core::fields::{MapField, TargetSpec};
use collarflow_core::geometry::{CollarGrid, CollarParams, SNodeMap};
use collarflow_core::quad_diff::QuadDiffField;
use collarflow_core::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub version: String,
    pub config_sha256: String,
    pub seed: u64,
    pub command: String,
}

impl Provenance {
    pub fn new(config_json: &str, seed: u64, command: &str) -> Self {
        Self {
            version: format!("collarflow {VERSION}"),
            config_sha256: sha256_hex(config_json.as_bytes()),
            seed,
            command: command.to_string(),
        }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "NaN".to_string()
    } else if x > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

fn meta_path(path: &Path) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
    path.with_file_name(format!("{stem}.meta.json"))
}

pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

/// Writes a numeric CSV with a mandatory header and a meta sidecar.
pub fn write_csv(
    path: &Path,
    header: &[&str],
    rows: impl IntoIterator<Item = Vec<f64>>,
    prov: &Provenance,
    extra: Value,
) -> Result<(), CliError> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(|e| CliError::format(path, e.to_string()))?;
    w.write_record(header).map_err(|e| CliError::format(path, e.to_string()))?;
    for r in rows {
        debug_assert_eq!(r.len(), header.len());
        w.write_record(r.iter().map(|&x| fmt_f64(x)))
            .map_err(|e| CliError::format(path, e.to_string()))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))?;
    let meta = serde_json::json!({ "provenance": prov, "columns": header, "meta": extra });
    write_json_raw(&meta_path(path), &meta)
}

fn write_json_raw(path: &Path, v: &Value) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(v).expect("json value serialises");
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

/// Writes `body` (an object) with a `"provenance"` entry added.
pub fn write_json(path: &Path, mut body: Value, prov: &Provenance) -> Result<(), CliError> {
    if let Value::Object(m) = &mut body {
        m.insert("provenance".into(), serde_json::to_value(prov).expect("provenance"));
    }
    write_json_raw(path, &body)
}

/// Reads a numeric CSV: header and rows.
pub fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>), CliError> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| CliError::format(path, e.to_string()))?;
    let header = r
        .headers()
        .map_err(|e| CliError::format(path, e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect::<Vec<_>>();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| CliError::format(path, e.to_string()))?;
        let row = rec
            .iter()
            .map(|x| x.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| CliError::format(path, format!("line {}: {e}", rows.len() + 2)))?;
        if row.len() != header.len() {
            return Err(CliError::format(path, format!("line {}: wrong column count", rows.len() + 2)));
        }
        rows.push(row);
    }
    Ok((header, rows))
}

/// Grid description stored alongside field files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridMeta {
    pub ell: f64,
    pub s_max: f64,
    pub n_s: usize,
    pub n_theta: usize,
    /// Arctan stretching strength; absent for uniform nodes.
    #[serde(default)]
    pub stretch: Option<f64>,
}

impl GridMeta {
    pub fn of(g: &CollarGrid) -> Self {
        let stretch = match g.map() {
            SNodeMap::Uniform => None,
            SNodeMap::ArctanStretched { strength } => Some(strength),
        };
        Self { ell: g.ell(), s_max: g.s_max(), n_s: g.n_s(), n_theta: g.n_theta(), stretch }
    }

    pub fn build(&self) -> Result<Arc<CollarGrid>, CliError> {
        let map = match self.stretch {
            None => SNodeMap::Uniform,
            Some(strength) => SNodeMap::ArctanStretched { strength },
        };
        let p = CollarParams::new(self.ell)?;
        Ok(Arc::new(CollarGrid::with_map(p, self.s_max, self.n_s, self.n_theta, map)?))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TargetMeta {
    FlatTorus { periods: Vec<Option<f64>> },
    RoundSphere { dim: usize },
}

impl TargetMeta {
    pub fn of(t: &TargetSpec) -> Self {
        match t {
            TargetSpec::FlatTorus { periods } => TargetMeta::FlatTorus { periods: periods.clone() },
            TargetSpec::RoundSphere { dim } => TargetMeta::RoundSphere { dim: *dim },
        }
    }

    pub fn spec(&self) -> TargetSpec {
        match self {
            TargetMeta::FlatTorus { periods } => TargetSpec::flat_torus(periods.clone()),
            TargetMeta::RoundSphere { dim } => TargetSpec::round_sphere(*dim),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct FieldMeta {
    grid: GridMeta,
    target: TargetMeta,
    winding: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct QdMeta {
    grid: GridMeta,
}

fn read_meta<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let mp = meta_path(path);
    let text = fs::read_to_string(&mp).map_err(|e| CliError::io(&mp, e))?;
    let v: Value = serde_json::from_str(&text).map_err(|e| CliError::format(&mp, e.to_string()))?;
    let meta = v.get("meta").cloned().ok_or_else(|| CliError::format(&mp, "missing \"meta\""))?;
    serde_json::from_value(meta).map_err(|e| CliError::format(&mp, e.to_string()))
}

fn check_nodes(path: &Path, rows: &[Vec<f64>], g: &CollarGrid) -> Result<(), CliError> {
    if rows.len() != g.len() {
        return Err(CliError::format(path, format!("expected {} rows, found {}", g.len(), rows.len())));
    }
    for i in 0..g.n_s() {
        for j in 0..g.n_theta() {
            let r = &rows[g.index(i, j)];
            let ok = (r[0] - g.s_nodes()[i]).abs() <= 1e-12 * (1.0 + g.s_max())
                && (r[1] - g.theta_nodes()[j]).abs() <= 1e-12;
            if !ok {
                return Err(CliError::format(path, format!("row {} is not node ({i}, {j})", g.index(i, j) + 2)));
            }
        }
    }
    Ok(())
}

/// `s, theta, u1, …, ud` (lifted values).
pub fn write_map_field(path: &Path, u: &MapField, prov: &Provenance) -> Result<(), CliError> {
    let g = u.grid();
    let d = u.dim();
    let mut header = vec!["s".to_string(), "theta".to_string()];
    header.extend((1..=d).map(|k| format!("u{k}")));
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let rows = (0..g.n_s()).flat_map(|i| {
        (0..g.n_theta()).map(move |j| {
            let mut r = vec![g.s_nodes()[i], g.theta_nodes()[j]];
            r.extend_from_slice(u.at(i, j));
            r
        })
    });
    let meta = FieldMeta { grid: GridMeta::of(g), target: TargetMeta::of(u.target()), winding: u.winding().to_vec() };
    write_csv(path, &header_refs, rows.collect::<Vec<_>>(), prov, serde_json::to_value(meta).expect("meta"))
}

pub fn read_map_field(path: &Path) -> Result<MapField, CliError> {
    let meta: FieldMeta = read_meta(path)?;
    let (header, rows) = read_csv(path)?;
    let target = meta.target.spec();
    let d = target.dim();
    if header.len() != d + 2 || header[0] != "s" || header[1] != "theta" {
        return Err(CliError::format(path, "header must be s,theta,u1..ud"));
    }
    let g = meta.grid.build()?;
    check_nodes(path, &rows, &g)?;
    let values = rows.iter().flat_map(|r| r[2..].iter().copied()).collect();
    Ok(MapField::new(g, target, values, meta.winding)?)
}

/// `s, theta, re_psi, im_psi`.
pub fn write_qd_field(path: &Path, f: &QuadDiffField, prov: &Provenance) -> Result<(), CliError> {
    let g = f.grid();
    let rows: Vec<Vec<f64>> = (0..g.n_s())
        .flat_map(|i| {
            (0..g.n_theta()).map(move |j| {
                let p = f.psi()[g.index(i, j)];
                vec![g.s_nodes()[i], g.theta_nodes()[j], p.re, p.im]
            })
        })
        .collect();
    let meta = QdMeta { grid: GridMeta::of(g) };
    write_csv(path, &["s", "theta", "re_psi", "im_psi"], rows, prov, serde_json::to_value(meta).expect("meta"))
}

pub fn read_qd_field(path: &Path) -> Result<QuadDiffField, CliError> {
    let meta: QdMeta = read_meta(path)?;
    let (header, rows) = read_csv(path)?;
    if header != ["s", "theta", "re_psi", "im_psi"] {
        return Err(CliError::format(path, "header must be s,theta,re_psi,im_psi"));
    }
    let g = meta.grid.build()?;
    check_nodes(path, &rows, &g)?;
    let psi = rows.iter().map(|r| Complex64::new(r[2], r[3])).collect();
    Ok(QuadDiffField::new(g, psi)?)
}
