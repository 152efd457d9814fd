//! Flat `key = value` config files.
//!
//! Entries become `--key value` flags spliced in right after the
//! subcommand name, ahead of anything typed on the command line. Since
//! later occurrences override earlier ones, explicit flags always win.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};

pub fn parse_config(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            bail!("config line {}: expected key = value, got {line:?}", i + 1);
        };
        let key = k.trim().replace('_', "-");
        if key.is_empty() || key.contains(char::is_whitespace) {
            bail!("config line {}: bad key {:?}", i + 1, k.trim());
        }
        if key == "config" {
            bail!("config line {}: config files do not nest", i + 1);
        }
        out.push((key, v.trim().to_owned()));
    }
    Ok(out)
}

fn config_path(argv: &[OsString]) -> Result<Option<PathBuf>> {
    let mut found = None;
    let mut it = argv.iter().skip(1);
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            let v = it.next().context("--config needs a path")?;
            found = Some(PathBuf::from(v));
        } else if let Some(v) = s.strip_prefix("--config=") {
            found = Some(PathBuf::from(v));
        }
    }
    Ok(found)
}

/// Splices config entries into `argv`. Returns `argv` unchanged when no
/// `--config` is given.
pub fn expand_args(argv: Vec<OsString>, subcommands: &[&str]) -> Result<Vec<OsString>> {
    let Some(path) = config_path(&argv)? else { return Ok(argv) };
    let entries = load(&path)?;
    let Some(pos) = argv.iter().position(|a| subcommands.iter().any(|s| a == *s)) else {
        bail!("--config given without a subcommand");
    };
    let mut out: Vec<OsString> = argv[..=pos].to_vec();
    for (k, v) in entries {
        out.push(format!("--{k}").into());
        out.push(v.into());
    }
    out.extend_from_slice(&argv[pos + 1..]);
    Ok(out)
}

fn load(path: &Path) -> Result<Vec<(String, String)>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    parse_config(&text).with_context(|| format!("in config {}", path.display()))
}
