use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Serialize;

/// Output directory with overwrite protection, atomic writes and a manifest
/// of what was completed.
pub struct Output {
    dir: PathBuf,
    force: bool,
    written: Vec<String>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    complete: bool,
    artifacts: &'a [String],
}

impl Output {
    pub fn create(dir: &Path, force: bool) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            force,
            written: Vec::new(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    /// Refuses up front when any of `names` exists and `--force` is off.
    pub fn claim(&self, names: &[String]) -> Result<()> {
        if self.force {
            return Ok(());
        }
        let taken: Vec<&str> = names
            .iter()
            .filter(|n| self.path(n).exists())
            .map(|n| n.as_str())
            .collect();
        if !taken.is_empty() {
            bail!(
                "refusing to overwrite {} in {} (use --force)",
                taken.join(", "),
                self.dir.display()
            );
        }
        Ok(())
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let target = self.path(name);
        if !self.force && target.exists() {
            bail!("refusing to overwrite {} (use --force)", target.display());
        }
        write_atomic(&target, bytes)?;
        self.written.push(name.to_string());
        Ok(())
    }

    pub fn write_json<S: Serialize>(&mut self, name: &str, value: &S) -> Result<()> {
        let mut s = serde_json::to_string_pretty(value)?;
        s.push('\n');
        self.write(name, s.as_bytes())
    }

    pub fn is_empty(&self) -> bool {
        self.written.is_empty()
    }

    /// Writes a bookkeeping file that is replaced on every run.
    pub fn refresh_json<S: Serialize>(&mut self, name: &str, value: &S) -> Result<()> {
        let mut s = serde_json::to_string_pretty(value)?;
        s.push('\n');
        write_atomic(&self.path(name), s.as_bytes())?;
        self.written.push(name.to_string());
        Ok(())
    }

    /// Records what was written. Called on success and on failure.
    pub fn finish(&self, complete: bool) -> Result<()> {
        let mut s = serde_json::to_string_pretty(&Manifest {
            complete,
            artifacts: &self.written,
        })?;
        s.push('\n');
        write_atomic(&self.path("manifest.json"), s.as_bytes())
    }
}

fn write_atomic(target: &Path, bytes: &[u8]) -> Result<()> {
    let name = target
        .file_name()
        .and_then(|n| n.to_str())
        .context("output path has no file name")?;
    let tmp = target.with_file_name(format!(".{name}.tmp"));
    let mut f = fs::File::create(&tmp).with_context(|| format!("creating {}", tmp.display()))?;
    f.write_all(bytes)?;
    f.sync_all()?;
    drop(f);
    fs::rename(&tmp, target).with_context(|| format!("renaming to {}", target.display()))?;
    Ok(())
}

/// One JSON object per line on stdout.
pub fn emit(value: &serde_json::Value) {
    println!("{value}");
}
