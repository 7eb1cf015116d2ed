use std::io::{self, Write};
use std::path::Path;

/// Writes `path` by filling a temp file in the same directory and renaming
/// it over the target. If `fill` fails the target is untouched and the temp
/// file is removed.
pub fn atomic_write_with<F>(path: &Path, fill: F) -> io::Result<()>
where
    F: FnOnce(&mut dyn Write) -> io::Result<()>,
{
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::Builder::new()
        .prefix(".travisgo-")
        .suffix(".tmp")
        .tempfile_in(dir)?;
    fill(tmp.as_file_mut())?;
    tmp.as_file_mut().flush()?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

pub fn atomic_write(path: &Path, bytes: &[u8]) -> io::Result<()> {
    atomic_write_with(path, |w| w.write_all(bytes))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn replaces_contents() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.travisgo");
        atomic_write(&path, b"one").unwrap();
        atomic_write(&path, b"two").unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), b"two");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }

    #[test]
    fn interrupted_write_leaves_original() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.travisgo");
        std::fs::write(&path, b"original contents").unwrap();
        let err = atomic_write_with(&path, |w| {
            w.write_all(b"half of the new")?;
            Err(io::Error::other("injected fault"))
        })
        .unwrap_err();
        assert_eq!(err.to_string(), "injected fault");
        assert_eq!(std::fs::read(&path).unwrap(), b"original contents");
        let leftovers: Vec<_> = std::fs::read_dir(dir.path()).unwrap().collect();
        assert_eq!(leftovers.len(), 1, "temp file left behind");
    }
}
