//! Plain-text and JSON serialisation.
//!
//! Floats are written with Rust's shortest round-trip formatting, so a
//! write/read cycle reproduces every value bit for bit. Lines starting
//! with `#` are comments.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::ensembles::{Provenance, SpectraEnsemble};
use crate::error::{Result, RmtError};
use crate::spectra::{DensityHistogram, Spectrum};

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> RmtError + '_ {
    move |source| RmtError::Io { path: path.display().to_string(), source }
}

pub fn write_text(path: impl AsRef<Path>, text: &str) -> Result<()> {
    let path = path.as_ref();
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    fs::write(path, text).map_err(io_err(path))
}

pub fn read_text(path: impl AsRef<Path>) -> Result<String> {
    let path = path.as_ref();
    fs::read_to_string(path).map_err(io_err(path))
}

fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn parse_row(line_no: usize, line: &str) -> Result<Vec<f64>> {
    line.split([',', '\t', ' '])
        .filter(|f| !f.is_empty())
        .map(|f| f.parse::<f64>().map_err(|e| RmtError::Parse { line: line_no, msg: format!("{f:?}: {e}") }))
        .collect()
}

/// Delimited table with a commented header line.
pub fn format_table(header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> String {
    let mut out = format!("# {}\n", header.join(","));
    for r in rows {
        let cells: Vec<String> = r.iter().map(|v| v.to_string()).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn write_table(path: impl AsRef<Path>, header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> Result<()> {
    write_text(path, &format_table(header, rows))
}

/// Rows of numbers from a table written by [`write_table`] (or any
/// comma/tab/space delimited numeric file).
pub fn read_table(path: impl AsRef<Path>) -> Result<Vec<Vec<f64>>> {
    let text = read_text(path)?;
    data_lines(&text).map(|(i, l)| parse_row(i, l)).collect()
}

/// One value per line.
pub fn write_values(path: impl AsRef<Path>, header: &str, values: &[f64]) -> Result<()> {
    write_table(path, &[header], values.iter().map(|&v| vec![v]))
}

/// Every number in the file, in order.
pub fn read_values(path: impl AsRef<Path>) -> Result<Vec<f64>> {
    Ok(read_table(path)?.into_iter().flatten().collect())
}

pub fn write_spectrum(path: impl AsRef<Path>, s: &Spectrum) -> Result<()> {
    write_values(path, "lambda", &s.lambdas)
}

pub fn read_spectrum(path: impl AsRef<Path>, t_window: usize) -> Result<Spectrum> {
    let v = read_values(path)?;
    if v.is_empty() {
        return Err(RmtError::Empty("spectrum file"));
    }
    Ok(Spectrum::new(v, t_window))
}

/// `edge,height` rows: the left edge and height of each bin, then the last
/// right edge with height 0 so the file draws as a closed step plot.
pub fn format_histogram(h: &DensityHistogram) -> String {
    let mut rows: Vec<Vec<f64>> = h.heights.iter().zip(&h.bin_edges).map(|(&y, &x)| vec![x, y]).collect();
    rows.push(vec![*h.bin_edges.last().expect("edges"), 0.0]);
    format_table(&["edge", "height"], rows)
}

pub fn write_histogram(path: impl AsRef<Path>, h: &DensityHistogram) -> Result<()> {
    write_text(path, &format_histogram(h))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumSummary {
    pub n: usize,
    pub t: usize,
    pub c: f64,
    pub min_eigenvalue: f64,
    pub max_eigenvalue: f64,
    pub mean_eigenvalue: f64,
}

impl SpectrumSummary {
    pub fn of(s: &Spectrum) -> Self {
        Self {
            n: s.n_assets,
            t: s.t_window,
            c: s.c_ratio(),
            min_eigenvalue: s.min(),
            max_eigenvalue: s.max(),
            mean_eigenvalue: s.mean(),
        }
    }
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

pub fn write_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    write_text(path, &to_json(value)?)
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: impl AsRef<Path>) -> Result<T> {
    Ok(serde_json::from_str(&read_text(path)?)?)
}

/// Sidecar describing an ensemble file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleMeta {
    pub n: usize,
    pub t: usize,
    pub count: usize,
    pub seed: u64,
    pub provenance: Provenance,
    /// Generator parameters, e.g. alpha for the power-law ensemble.
    #[serde(default)]
    pub params: serde_json::Map<String, serde_json::Value>,
}

pub fn sidecar_path(path: impl AsRef<Path>) -> PathBuf {
    let mut p = path.as_ref().as_os_str().to_owned();
    p.push(".json");
    PathBuf::from(p)
}

/// One ascending spectrum per line.
pub fn format_ensemble(e: &SpectraEnsemble) -> String {
    let mut out = format!("# {} spectra, n={}, t={}\n", e.len(), e.n, e.t);
    for s in &e.spectra {
        let cells: Vec<String> = s.lambdas.iter().map(|v| v.to_string()).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// Writes the ensemble and its `.json` sidecar.
pub fn write_ensemble(
    path: impl AsRef<Path>,
    e: &SpectraEnsemble,
    params: serde_json::Map<String, serde_json::Value>,
) -> Result<()> {
    let path = path.as_ref();
    write_text(path, &format_ensemble(e))?;
    let meta = EnsembleMeta { n: e.n, t: e.t, count: e.len(), seed: e.seed, provenance: e.provenance, params };
    write_json(sidecar_path(path), &meta)
}

/// Reads an ensemble file. Shape and provenance come from the sidecar when
/// present; otherwise `t_hint` is required.
pub fn read_ensemble(path: impl AsRef<Path>, t_hint: Option<usize>) -> Result<SpectraEnsemble> {
    let path = path.as_ref();
    let side = sidecar_path(path);
    let meta: Option<EnsembleMeta> = if side.exists() { Some(read_json(&side)?) } else { None };
    let t = match (&meta, t_hint) {
        (_, Some(t)) => t,
        (Some(m), None) => m.t,
        (None, None) => {
            return Err(RmtError::InvalidParameter(format!(
                "no sidecar {} and no window length given",
                side.display()
            )))
        }
    };
    let text = read_text(path)?;
    let spectra = data_lines(&text).map(|(i, l)| Ok(Spectrum::new(parse_row(i, l)?, t))).collect::<Result<Vec<_>>>()?;
    let (prov, seed) = meta.as_ref().map_or((Provenance::SampledWl, 0), |m| (m.provenance, m.seed));
    let e = SpectraEnsemble::new(spectra, prov, seed)?;
    if let Some(m) = &meta {
        if m.n != e.n || m.count != e.len() {
            return Err(RmtError::Shape(format!(
                "sidecar says {} spectra of size {}, file has {} of size {}",
                m.count,
                m.n,
                e.len(),
                e.n
            )));
        }
    }
    Ok(e)
}
