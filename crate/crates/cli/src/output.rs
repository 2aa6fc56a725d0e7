//! Output staging. Every file a command produces is rendered in memory first
//! and only then written, each through a temporary file renamed into place,
//! so a failing command leaves no partial outputs.

use std::io::Write;
use std::path::{Path, PathBuf};

use tempfile::NamedTempFile;

use crate::error::CliError;

#[derive(Default)]
pub struct Outputs {
    staged: Vec<(PathBuf, Vec<u8>)>,
}

impl Outputs {
    pub fn new() -> Self {
        Self::default()
    }

    /// Renders one output. `-` means standard output.
    pub fn stage(
        &mut self,
        path: &Path,
        render: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>,
    ) -> Result<(), CliError> {
        let mut buf = Vec::new();
        render(&mut buf).map_err(|e| CliError::Internal(format!("rendering {}: {e}", path.display())))?;
        self.staged.push((path.to_owned(), buf));
        Ok(())
    }

    pub fn commit(self) -> Result<(), CliError> {
        let mut temps = Vec::new();
        let mut stdout = Vec::new();
        for (path, bytes) in self.staged {
            if path.as_os_str() == "-" {
                stdout.push(bytes);
                continue;
            }
            let dir = match path.parent() {
                Some(p) if !p.as_os_str().is_empty() => p.to_owned(),
                _ => PathBuf::from("."),
            };
            let io_err = |e: std::io::Error| CliError::Data(format!("{}: {e}", path.display()));
            let mut tmp = NamedTempFile::new_in(&dir).map_err(io_err)?;
            tmp.write_all(&bytes).map_err(io_err)?;
            tmp.as_file().sync_all().map_err(io_err)?;
            temps.push((path, tmp));
        }
        for (path, tmp) in temps {
            tmp.persist(&path)
                .map_err(|e| CliError::Data(format!("{}: {}", path.display(), e.error)))?;
        }
        let out = std::io::stdout();
        let mut lock = out.lock();
        for bytes in stdout {
            lock.write_all(&bytes)
                .and_then(|_| lock.flush())
                .map_err(|e| CliError::Data(format!("stdout: {e}")))?;
        }
        Ok(())
    }
}
