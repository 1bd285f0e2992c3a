use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

/// Writes `bytes` to a sibling temp file and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = std::path::PathBuf::from(tmp);
    {
        let mut f = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
        f.write_all(bytes).map_err(|e| Error::io(&tmp, e))?;
        f.sync_all().map_err(|e| Error::io(&tmp, e))?;
    }
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

/// Serializes records with a header row into a CSV file, atomically.
pub fn write_csv<S: CsvRow>(path: &Path, header: &[&str], rows: &[S]) -> Result<()> {
    write_atomic(path, &csv_bytes(header, rows)?)
}

pub fn csv_bytes<S: CsvRow>(header: &[&str], rows: &[S]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(row.fields())?;
    }
    w.into_inner().map_err(|e| Error::Config(e.to_string()))
}

/// A CSV row as a fixed-order list of string fields.
pub trait CsvRow {
    fn fields(&self) -> Vec<String>;
}

impl CsvRow for Vec<String> {
    fn fields(&self) -> Vec<String> {
        self.clone()
    }
}
