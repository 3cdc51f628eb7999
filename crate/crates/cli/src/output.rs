//! File emission. Every JSON file is `{kind, meta, data}`; every CSV file
//! starts with a `#` line carrying the same metadata, then a header row.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use halfspace_scattering::{Cutoffs, Tolerances};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::CliError;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Meta {
    pub version: String,
    pub config_hash: String,
    pub cutoffs: Cutoffs,
    pub tolerances: Tolerances,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<f64>,
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    kind: &'a str,
    meta: &'a Meta,
    data: &'a T,
}

pub struct Sink {
    pub dir: PathBuf,
    pub base: Meta,
    written: Vec<PathBuf>,
}

impl Sink {
    pub fn new(dir: &Path, cfg: &RunConfig) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
        let base = Meta {
            version: env!("CARGO_PKG_VERSION").to_string(),
            config_hash: cfg.hash(),
            cutoffs: cfg.cutoffs,
            tolerances: cfg.tolerances,
            seed: cfg.seed(),
            k: None,
        };
        Ok(Self { dir: dir.to_path_buf(), base, written: vec![] })
    }

    pub fn meta(&self, k: Option<f64>) -> Meta {
        Meta { k, ..self.base.clone() }
    }

    pub fn json<T: Serialize>(&mut self, name: &str, kind: &str, k: Option<f64>, data: &T) -> Result<(), CliError> {
        let path = self.dir.join(name);
        let meta = self.meta(k);
        let mut w = BufWriter::new(File::create(&path)?);
        serde_json::to_writer_pretty(&mut w, &Envelope { kind, meta: &meta, data })?;
        writeln!(w)?;
        w.flush()?;
        self.written.push(path);
        Ok(())
    }

    pub fn csv<R: Serialize>(&mut self, name: &str, k: Option<f64>, header: &[&str], rows: &[R]) -> Result<(), CliError> {
        let path = self.dir.join(name);
        let mut f = BufWriter::new(File::create(&path)?);
        let m = self.meta(k);
        let kk = m.k.map(|k| format!(" k={k}")).unwrap_or_default();
        writeln!(
            f,
            "# halfspace {} config={} modes={} v_cutoff={} samples={} seed={}{kk}",
            m.version, m.config_hash, m.cutoffs.modes, m.cutoffs.v_cutoff, m.cutoffs.samples, m.seed
        )?;
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(f);
        w.write_record(header)?;
        for r in rows {
            w.serialize(r)?;
        }
        w.flush()?;
        self.written.push(path);
        Ok(())
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }
}

/// `{stem}_k{i:03}.{ext}` for the i-th fiber of the sweep.
pub fn per_k(stem: &str, i: usize, ext: &str) -> String {
    format!("{stem}_k{i:03}.{ext}")
}
