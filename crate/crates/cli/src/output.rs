use std::fs;
use std::path::{Path, PathBuf};

use crate::error::CliError;

/// Buffered output files. Commands add every artifact here and flush once at
/// the end, so a failure part-way through a run leaves no partial outputs
/// behind.
#[derive(Debug, Default)]
pub struct OutputSet {
    root: PathBuf,
    files: Vec<(String, Vec<u8>)>,
}

impl OutputSet {
    pub fn new(root: &Path) -> Self {
        Self {
            root: root.to_path_buf(),
            files: Vec::new(),
        }
    }

    pub fn add(&mut self, name: &str, bytes: impl Into<Vec<u8>>) {
        self.files.push((name.to_string(), bytes.into()));
    }

    /// Write everything under the root directory, creating it if needed, and
    /// list each written file on stdout.
    pub fn flush(self) -> Result<(), CliError> {
        fs::create_dir_all(&self.root).map_err(|err| {
            CliError::Runtime(format!(
                "cannot create output directory {}: {err}",
                self.root.display()
            ))
        })?;
        for (name, bytes) in &self.files {
            let path = self.root.join(name);
            fs::write(&path, bytes).map_err(|err| {
                CliError::Runtime(format!("cannot write {}: {err}", path.display()))
            })?;
            println!("wrote {}", path.display());
        }
        Ok(())
    }
}
