use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::CliResult;

pub const RECORD_FILE: &str = "run_record.json";
pub const SUMMARY_FILE: &str = "summary.txt";

#[derive(Clone, Debug, Serialize)]
pub struct Artifact {
    pub path: String,
    pub sha256: String,
}

/// Full configuration, seed and artifact hashes of one invocation.
#[derive(Debug, Serialize)]
pub struct RunRecord {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config: RunConfig,
    pub seed: Option<u64>,
    pub threads: usize,
    pub inputs: Vec<Artifact>,
    pub outputs: Vec<Artifact>,
}

pub fn sha256_file(path: &Path) -> CliResult<String> {
    Ok(hex::encode(Sha256::digest(std::fs::read(path)?)))
}

/// Collects everything a command writes under its output directory.
#[derive(Debug)]
pub struct Outputs {
    pub dir: PathBuf,
    files: Vec<Artifact>,
    inputs: Vec<PathBuf>,
    summary: String,
}

impl Outputs {
    pub fn new(dir: &Path, inputs: &[PathBuf]) -> CliResult<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
            inputs: inputs.iter().map(|p| p.canonicalize().unwrap_or_else(|_| p.clone())).collect(),
            summary: String::new(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    fn guard(&self, path: &Path) -> CliResult<()> {
        let target = path.canonicalize().unwrap_or_else(|_| path.to_path_buf());
        if self.inputs.contains(&target) {
            return Err(crate::config_error(format!("refusing to overwrite input {}", path.display())));
        }
        Ok(())
    }

    pub fn write(&mut self, name: &str, bytes: impl AsRef<[u8]>) -> CliResult<()> {
        let path = self.path(name);
        self.guard(&path)?;
        std::fs::write(&path, bytes)?;
        self.register(name)
    }

    /// Records a file some library routine already wrote.
    pub fn register(&mut self, name: &str) -> CliResult<()> {
        let sha256 = sha256_file(&self.path(name))?;
        self.files.retain(|a| a.path != name);
        self.files.push(Artifact {
            path: name.to_string(),
            sha256,
        });
        Ok(())
    }

    pub fn check_writable(&self, names: &[&str]) -> CliResult<()> {
        names.iter().try_for_each(|n| self.guard(&self.path(n)))
    }

    pub fn line(&mut self, text: impl AsRef<str>) {
        println!("{}", text.as_ref());
        self.summary.push_str(text.as_ref());
        self.summary.push('\n');
    }

    /// Writes the summary and the run record; the record lists itself last
    /// without a hash.
    pub fn finish(mut self, command: &str, config: &RunConfig, seed: Option<u64>, threads: usize) -> CliResult<()> {
        let summary = std::mem::take(&mut self.summary);
        self.write(SUMMARY_FILE, summary)?;
        let inputs = self
            .inputs
            .iter()
            .map(|p| {
                Ok(Artifact {
                    path: p.display().to_string(),
                    sha256: sha256_file(p)?,
                })
            })
            .collect::<CliResult<Vec<_>>>()?;
        let mut outputs = self.files.clone();
        outputs.sort_by(|a, b| a.path.cmp(&b.path));
        let record = RunRecord {
            tool: "resa".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            config: config.clone(),
            seed,
            threads,
            inputs,
            outputs,
        };
        let path = self.path(RECORD_FILE);
        self.guard(&path)?;
        std::fs::write(path, serde_json::to_string_pretty(&record)? + "\n")?;
        Ok(())
    }
}
