pub mod fit;
pub mod propagate;
pub mod qfi;
pub mod simulate;

use crate::CliError;
use std::io::Write;
use std::path::Path;

/// Write `content` to the path, or to stdout when no path is given.
pub fn emit(out: Option<&Path>, content: &str) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, content)
            .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            match stdout.write_all(content.as_bytes()) {
                Ok(()) => Ok(()),
                // Downstream closed the pipe (e.g. head); not our error.
                Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
                Err(e) => Err(CliError::Io(format!("cannot write to stdout: {e}"))),
            }
        }
    }
}

/// Insert a suffix before the file extension: out.csv -> out.<suffix>.csv.
pub fn suffixed_path(base: &Path, suffix: &str) -> std::path::PathBuf {
    let stem = base.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
    let ext = base.extension().and_then(|s| s.to_str()).unwrap_or("csv");
    base.with_file_name(format!("{stem}.{suffix}.{ext}"))
}
