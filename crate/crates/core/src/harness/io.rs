//! Output serialization: raw little-endian f64 arrays (complex interleaved)
//! with JSON sidecars, binary PGM previews, and CSV tables.
//!
//! Every artifact file `X` is accompanied by a sidecar `X.json` embedding
//! the config hash; rewriting an artifact whose sidecar carries a different
//! hash is refused unless forced.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::num::ScalarField;

use super::HarnessError;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Sidecar {
    pub dtype: String,
    /// `[n_frames, height, width]` for stacks, `[len]` for flat arrays,
    /// `[rows]` for CSV tables.
    pub shape: Vec<usize>,
    pub field: ScalarField,
    pub config_hash: String,
    /// Intensity window used for 8-bit PGM scaling.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pgm_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pgm_max: Option<f64>,
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".json");
    path.with_file_name(name)
}

/// Refuse to overwrite an artifact generated under a different config.
fn guard_overwrite(path: &Path, hash: &str, force: bool) -> Result<(), HarnessError> {
    if force || !path.exists() {
        return Ok(());
    }
    let sc_path = sidecar_path(path);
    let existing = fs::read_to_string(&sc_path).ok().and_then(|text| {
        serde_json::from_str::<Sidecar>(&text)
            .ok()
            .map(|sc| sc.config_hash)
    });
    match existing {
        Some(h) if h == hash => Ok(()),
        _ => Err(HarnessError::HashMismatch {
            path: path.to_path_buf(),
        }),
    }
}

fn write_with_sidecar(
    path: &Path,
    bytes: &[u8],
    sidecar: &Sidecar,
    force: bool,
) -> Result<(), HarnessError> {
    guard_overwrite(path, &sidecar.config_hash, force)?;
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::write(path, bytes)?;
    let json = serde_json::to_string_pretty(sidecar).expect("sidecar serializes");
    fs::write(sidecar_path(path), json)?;
    Ok(())
}

/// Write a real f64 array (little-endian) with its sidecar.
pub fn write_real_array(
    path: &Path,
    data: &[f64],
    shape: Vec<usize>,
    config_hash: &str,
    force: bool,
) -> Result<(), HarnessError> {
    let mut bytes = Vec::with_capacity(data.len() * 8);
    for v in data {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    let sidecar = Sidecar {
        dtype: "f64".into(),
        shape,
        field: ScalarField::Real,
        config_hash: config_hash.into(),
        pgm_min: None,
        pgm_max: None,
    };
    write_with_sidecar(path, &bytes, &sidecar, force)
}

/// Write a complex array as interleaved real/imaginary f64 pairs.
pub fn write_complex_array(
    path: &Path,
    data: &[Complex64],
    shape: Vec<usize>,
    config_hash: &str,
    force: bool,
) -> Result<(), HarnessError> {
    let mut bytes = Vec::with_capacity(data.len() * 16);
    for v in data {
        bytes.extend_from_slice(&v.re.to_le_bytes());
        bytes.extend_from_slice(&v.im.to_le_bytes());
    }
    let sidecar = Sidecar {
        dtype: "f64".into(),
        shape,
        field: ScalarField::Complex,
        config_hash: config_hash.into(),
        pgm_min: None,
        pgm_max: None,
    };
    write_with_sidecar(path, &bytes, &sidecar, force)
}

pub fn read_sidecar(path: &Path) -> Result<Sidecar, HarnessError> {
    let text = fs::read_to_string(sidecar_path(path)).map_err(|e| {
        HarnessError::Config(format!(
            "missing sidecar for {}: {e}",
            path.display()
        ))
    })?;
    serde_json::from_str(&text)
        .map_err(|e| HarnessError::Config(format!("bad sidecar for {}: {e}", path.display())))
}

/// Read a real array and its sidecar.
pub fn read_real_array(path: &Path) -> Result<(Vec<f64>, Sidecar), HarnessError> {
    let sidecar = read_sidecar(path)?;
    let bytes = fs::read(path)?;
    if sidecar.field != ScalarField::Real {
        return Err(HarnessError::Config(format!(
            "{} is complex, expected real",
            path.display()
        )));
    }
    if bytes.len() % 8 != 0 {
        return Err(HarnessError::Config(format!(
            "{}: length not a multiple of 8",
            path.display()
        )));
    }
    let data = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok((data, sidecar))
}

/// Read either field; complex files are returned as interleaved pairs
/// collapsed into `Complex64`.
pub fn read_any_array(path: &Path) -> Result<(Vec<Complex64>, Sidecar), HarnessError> {
    let sidecar = read_sidecar(path)?;
    let bytes = fs::read(path)?;
    let reals: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let data = match sidecar.field {
        ScalarField::Real => reals.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        ScalarField::Complex => reals
            .chunks_exact(2)
            .map(|p| Complex64::new(p[0], p[1]))
            .collect(),
    };
    Ok((data, sidecar))
}

/// Write an 8-bit binary PGM (P5) preview with per-file min/max scaling
/// recorded in the sidecar.
pub fn write_pgm(
    path: &Path,
    data: &[f64],
    width: usize,
    height: usize,
    config_hash: &str,
    force: bool,
) -> Result<(), HarnessError> {
    assert_eq!(data.len(), width * height);
    let lo = data.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = data.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let span = if hi > lo { hi - lo } else { 1.0 };
    let mut bytes = Vec::with_capacity(32 + data.len());
    write!(&mut bytes, "P5\n{width} {height}\n255\n").unwrap();
    for &v in data {
        let level = ((v - lo) / span * 255.0).round().clamp(0.0, 255.0) as u8;
        bytes.push(level);
    }
    let sidecar = Sidecar {
        dtype: "pgm".into(),
        shape: vec![height, width],
        field: ScalarField::Real,
        config_hash: config_hash.into(),
        pgm_min: Some(lo),
        pgm_max: Some(hi),
    };
    write_with_sidecar(path, &bytes, &sidecar, force)
}

/// Write a CSV table with a header row; cells are preformatted strings.
pub fn write_csv(
    path: &Path,
    header: &[&str],
    rows: &[Vec<String>],
    config_hash: &str,
    force: bool,
) -> Result<(), HarnessError> {
    let mut text = String::new();
    text.push_str(&header.join(","));
    text.push('\n');
    for row in rows {
        text.push_str(&row.join(","));
        text.push('\n');
    }
    let sidecar = Sidecar {
        dtype: "csv".into(),
        shape: vec![rows.len()],
        field: ScalarField::Real,
        config_hash: config_hash.into(),
        pgm_min: None,
        pgm_max: None,
    };
    write_with_sidecar(path, text.as_bytes(), &sidecar, force)
}

/// Canonical float formatting for CSV cells (shortest round-trip form).
pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else {
        format!("{v}")
    }
}
