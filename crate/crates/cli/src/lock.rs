use std::fs::{File, OpenOptions};
use std::io::{ErrorKind, Write};
use std::path::{Path, PathBuf};

use crate::error::{CliError, CliResult};

/// Exclusive campaign lock; the file is removed on drop.
#[derive(Debug)]
pub struct CampaignLock {
    path: PathBuf,
    _file: File,
}

impl CampaignLock {
    pub fn acquire(dir: &Path) -> CliResult<Self> {
        let path = dir.join("state.lock");
        match OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(mut file) => {
                // best effort: the pid only helps humans clean up stale locks
                let _ = writeln!(file, "{}", std::process::id());
                Ok(Self { path, _file: file })
            }
            Err(e) if e.kind() == ErrorKind::AlreadyExists => Err(CliError::Locked(path)),
            Err(e) => Err(CliError::io(path)(e)),
        }
    }
}

impl Drop for CampaignLock {
    fn drop(&mut self) {
        let _ = std::fs::remove_file(&self.path);
    }
}
