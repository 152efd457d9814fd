//! Per-invocation bookkeeping: every file written goes through [`Run`],
//! which lists it in a `.manifest.json` next to the outputs.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use anyhow::Result;
use rmt_core::ensembles::SpectraEnsemble;
use rmt_core::io;
use rmt_core::spectra::DensityHistogram;
use serde::Serialize;

use crate::args::Cli;

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub argv: Vec<String>,
    /// Fully resolved arguments, defaults included.
    pub params: serde_json::Value,
    /// Recipe defaults filled in at run time.
    pub resolved: serde_json::Map<String, serde_json::Value>,
    pub seed: u64,
    pub threads: Option<usize>,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub checks: Vec<Check>,
    pub warnings: Vec<String>,
    pub version: String,
    pub started_unix_seconds: f64,
    pub wall_clock_seconds: f64,
}

pub struct Run {
    pub out_dir: PathBuf,
    pub seed: u64,
    label: String,
    m: RunManifest,
    start: Instant,
}

impl Run {
    pub fn new(cli: &Cli, argv: &[OsString], command: &str, label: &str) -> Result<Self> {
        let started = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0);
        let m = RunManifest {
            command: command.to_owned(),
            argv: argv.iter().map(|a| a.to_string_lossy().into_owned()).collect(),
            params: serde_json::to_value(cli)?,
            resolved: serde_json::Map::new(),
            seed: cli.seed,
            threads: cli.threads,
            inputs: Vec::new(),
            outputs: Vec::new(),
            checks: Vec::new(),
            warnings: Vec::new(),
            version: env!("CARGO_PKG_VERSION").to_owned(),
            started_unix_seconds: started,
            wall_clock_seconds: 0.0,
        };
        Ok(Self { out_dir: cli.out_dir.clone(), seed: cli.seed, label: label.to_owned(), m, start: Instant::now() })
    }

    pub fn resolve(&mut self, key: &str, value: impl Serialize) -> Result<()> {
        self.m.resolved.insert(key.to_owned(), serde_json::to_value(value)?);
        Ok(())
    }

    pub fn input(&mut self, p: &Path) {
        self.m.inputs.push(p.display().to_string());
    }

    /// Registers an output under the output directory.
    pub fn out(&mut self, name: impl AsRef<Path>) -> PathBuf {
        let p = self.out_dir.join(name);
        self.m.outputs.push(p.display().to_string());
        p
    }

    pub fn warn(&mut self, msg: impl Into<String>) {
        let msg = msg.into();
        eprintln!("warning: {msg}");
        self.m.warnings.push(msg);
    }

    pub fn warn_all(&mut self, msgs: impl IntoIterator<Item = String>) {
        for w in msgs {
            self.warn(w);
        }
    }

    pub fn check(&mut self, name: &str, passed: bool, detail: impl Into<String>) {
        let detail = detail.into();
        if !passed {
            eprintln!("check failed: {name}: {detail}");
        }
        self.m.checks.push(Check { name: name.to_owned(), passed, detail });
    }

    pub fn values(&mut self, name: impl AsRef<Path>, header: &str, v: &[f64]) -> Result<()> {
        let p = self.out(name);
        Ok(io::write_values(p, header, v)?)
    }

    pub fn table(&mut self, name: impl AsRef<Path>, header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> Result<()> {
        let p = self.out(name);
        Ok(io::write_table(p, header, rows)?)
    }

    pub fn histogram(&mut self, name: impl AsRef<Path>, h: &DensityHistogram) -> Result<()> {
        let p = self.out(name);
        Ok(io::write_histogram(p, h)?)
    }

    pub fn json<T: Serialize>(&mut self, name: impl AsRef<Path>, v: &T) -> Result<()> {
        let p = self.out(name);
        Ok(io::write_json(p, v)?)
    }

    pub fn text(&mut self, name: impl AsRef<Path>, s: &str) -> Result<()> {
        let p = self.out(name);
        Ok(io::write_text(p, s)?)
    }

    pub fn ensemble(
        &mut self,
        name: impl AsRef<Path>,
        e: &SpectraEnsemble,
        params: serde_json::Map<String, serde_json::Value>,
    ) -> Result<()> {
        let p = self.out(name);
        self.m.outputs.push(io::sidecar_path(&p).display().to_string());
        Ok(io::write_ensemble(p, e, params)?)
    }

    /// Writes the manifest; true when every check passed.
    pub fn finish(mut self) -> Result<bool> {
        self.m.wall_clock_seconds = self.start.elapsed().as_secs_f64();
        let ok = self.m.checks.iter().all(|c| c.passed);
        // commands name the manifest after their main (first) output so
        // repeated runs into one directory keep separate records
        let path = match (self.label.is_empty(), self.m.outputs.first()) {
            (true, Some(first)) => sibling(Path::new(first), ".manifest.json"),
            (true, None) => self.out_dir.join(format!("{}.manifest.json", self.m.command)),
            (false, _) => self.out_dir.join(format!("{}.manifest.json", self.label)),
        };
        io::write_json(&path, &self.m)?;
        for o in &self.m.outputs {
            println!("{o}");
        }
        println!("{}", path.display());
        Ok(ok)
    }
}

/// `dir/stem<suffix>` for a main output `dir/stem.ext`.
pub fn sibling(main: &Path, suffix: &str) -> PathBuf {
    let stem = main.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    main.with_file_name(format!("{stem}{suffix}"))
}
