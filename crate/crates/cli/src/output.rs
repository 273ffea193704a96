//! CSV, sidecar and plot files.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::plot::{self, Series};
use crate::CliError;

pub const CSV_HEADER: &str = "t,n_a,n_b,re_cross";

/// Four-column trace in the CSV schema.
pub struct Trace<'a> {
    pub t: &'a [f64],
    pub n_a: &'a [f64],
    pub n_b: &'a [f64],
    pub re_cross: &'a [f64],
}

/// Twelve significant digits, `.` as decimal point regardless of locale.
pub fn num(v: f64) -> String {
    format!("{v:.11e}")
}

pub fn csv(tr: &Trace<'_>) -> String {
    let mut s = String::with_capacity(64 * tr.t.len());
    s.push_str(CSV_HEADER);
    s.push('\n');
    for i in 0..tr.t.len() {
        let _ = writeln!(s, "{},{},{},{}", num(tr.t[i]), num(tr.n_a[i]), num(tr.n_b[i]), num(tr.re_cross[i]));
    }
    s
}

pub fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    fs::write(path, contents).map_err(|e| CliError::io(path, e))?;
    log::info!("wrote {}", path.display());
    Ok(())
}

/// Writes an SVG; failures are reported and swallowed.
pub fn write_plot(path: &Path, title: &str, series: &[Series<'_>]) -> Option<PathBuf> {
    let result = plot::render(title, "t", series).map_err(|e| e.to_string()).and_then(|svg| {
        write(path, &svg).map_err(|e| e.to_string())
    });
    match result {
        Ok(()) => Some(path.to_path_buf()),
        Err(e) => {
            log::warn!("plot {} skipped: {e}", path.display());
            None
        }
    }
}
