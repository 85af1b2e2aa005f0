use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::CliError;

/// Everything a subcommand produces. Files are only written once the
/// whole computation has succeeded.
#[derive(Debug, Default, Clone, PartialEq, Eq)]
pub struct Outputs {
    pub files: Vec<(String, Vec<u8>)>,
    pub stdout: String,
}

impl Outputs {
    pub fn file(&mut self, name: &str, contents: impl Into<Vec<u8>>) {
        self.files.push((name.to_string(), contents.into()));
    }

    pub fn say(&mut self, line: impl AsRef<str>) {
        self.stdout.push_str(line.as_ref());
        self.stdout.push('\n');
    }

    pub fn get(&self, name: &str) -> Option<&[u8]> {
        self.files.iter().find(|(n, _)| n == name).map(|(_, b)| b.as_slice())
    }

    /// Writes every file into `dir` through temporary files that are only
    /// renamed into place after all of them were written.
    pub fn write_to(&self, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
        if self.files.is_empty() {
            return Ok(Vec::new());
        }
        let io = |what: &str, p: &Path, e: std::io::Error| CliError::Runtime(format!("{what} {}: {e}", p.display()));
        std::fs::create_dir_all(dir).map_err(|e| io("cannot create", dir, e))?;
        let mut staged = Vec::with_capacity(self.files.len());
        for (name, bytes) in &self.files {
            let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| io("cannot stage output in", dir, e))?;
            tmp.write_all(bytes).and_then(|_| tmp.flush()).map_err(|e| io("cannot write", tmp.path(), e))?;
            staged.push((tmp, dir.join(name)));
        }
        let mut written = Vec::new();
        for (tmp, target) in staged {
            tmp.persist(&target).map_err(|e| io("cannot write", &target, e.error))?;
            written.push(target);
        }
        Ok(written)
    }
}
