use std::io::{self, Write};
use std::path::Path;

use tempfile::NamedTempFile;

/// Run `write` against `path` or standard output. A file is written to a
/// temporary sibling first and renamed into place, so readers never see a
/// partial file and a failed run leaves the old contents.
pub fn with_output<T>(
    path: Option<&Path>,
    write: impl FnOnce(&mut dyn Write) -> Result<T, String>,
) -> Result<T, String> {
    match path {
        None => {
            let stdout = io::stdout();
            let mut lock = io::BufWriter::new(stdout.lock());
            let v = write(&mut lock)?;
            lock.flush().map_err(|e| format!("writing output: {e}"))?;
            Ok(v)
        }
        Some(p) => {
            let dir = match p.parent() {
                Some(d) if !d.as_os_str().is_empty() => d,
                _ => Path::new("."),
            };
            let mut tmp = NamedTempFile::new_in(dir)
                .map_err(|e| format!("cannot create a file in {}: {e}", dir.display()))?;
            let v = {
                let mut buf = io::BufWriter::new(tmp.as_file_mut());
                let v = write(&mut buf)?;
                buf.flush().map_err(|e| format!("writing {}: {e}", p.display()))?;
                v
            };
            tmp.persist(p)
                .map_err(|e| format!("cannot write {}: {}", p.display(), e.error))?;
            Ok(v)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn failed_writes_keep_the_old_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.txt");
        with_output(Some(&path), |w| write!(w, "first").map_err(|e| e.to_string())).unwrap();
        let err = with_output(Some(&path), |w| {
            write!(w, "partial").unwrap();
            Err::<(), _>("stopped".to_string())
        });
        assert!(err.is_err());
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "first");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
