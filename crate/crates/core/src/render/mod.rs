//! Output artifacts: SVG plots and JSON diagnostic reports.

pub mod report;
pub mod svg;

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::plot::{Figure, PlotSpec};

pub use report::{CheckKind, CheckRecord, DiagnosticReport, InputDigest, SCHEMA_VERSION};
pub use svg::{render_figure, render_svg};

/// Write through a temporary file in the target directory, then rename.
pub fn write_atomic(path: impl AsRef<Path>, bytes: &[u8]) -> Result<()> {
    let path = path.as_ref();
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut builder = tempfile::Builder::new();
    // tempfiles default to 0600; keep the usual mode for artifacts
    #[cfg(unix)]
    builder.permissions(std::os::unix::fs::PermissionsExt::from_mode(0o644));
    let mut tmp = builder.tempfile_in(dir).map_err(|e| Error::io(path, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

pub fn write_svg(spec: &PlotSpec, path: impl AsRef<Path>) -> Result<()> {
    write_atomic(path, render_svg(spec).as_bytes())
}

pub fn write_figure(fig: &Figure, path: impl AsRef<Path>) -> Result<()> {
    write_atomic(path, render_figure(fig).as_bytes())
}
