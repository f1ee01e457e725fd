pub mod hydro;
pub mod relax;
pub mod rigid;
pub mod selfsim;
pub mod verify_all;

use std::path::Path;

use crate::error::{CliError, CliResult};

/// Writes `rows` under `header` as RFC 4180 CSV.
pub fn write_csv(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> CliResult<()> {
    let wrap = |source: csv::Error| CliError::Csv {
        path: path.display().to_string(),
        source,
    };
    let mut w = csv::Writer::from_path(path).map_err(wrap)?;
    w.write_record(header).map_err(wrap)?;
    for row in rows {
        w.write_record(&row).map_err(wrap)?;
    }
    w.flush().map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}
