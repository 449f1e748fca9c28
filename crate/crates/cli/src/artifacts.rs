//! Output files. Each artifact is written, read back with its own parser and
//! checked before the run counts as successful.

use std::fs;
use std::path::{Path, PathBuf};

use entangle_core::{Error, Result};

pub struct Artifacts {
    dir: PathBuf,
    pub written: Vec<PathBuf>,
}

impl Artifacts {
    pub fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Writes `bytes` to `name` and hands the file's contents to `check`.
    pub fn write(&mut self, name: &str, bytes: &[u8], check: impl FnOnce(&[u8]) -> Result<()>) -> Result<PathBuf> {
        let path = self.dir.join(name);
        fs::write(&path, bytes).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        let back = fs::read(&path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        check(&back).map_err(|e| Error::Io(format!("{} failed validation: {e}", path.display())))?;
        self.written.push(path.clone());
        Ok(path)
    }

    /// Writes an artifact whose reader and writer must reproduce it byte for byte.
    pub fn write_round_trip<T>(
        &mut self,
        name: &str,
        value: &T,
        write: impl Fn(&T) -> Result<Vec<u8>>,
        read: impl Fn(&[u8]) -> Result<T>,
    ) -> Result<PathBuf> {
        let bytes = write(value)?;
        self.write(name, &bytes, |back| {
            let again = write(&read(back)?)?;
            if again != bytes {
                return Err(Error::Io("write -> read -> write is not byte-identical".into()));
            }
            Ok(())
        })
    }
}

/// Collects the output of a writer into a buffer.
pub fn to_bytes(f: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}
