use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};

/// First line of every CSV the harness writes.
pub const SCHEMA_LINE: &str = "# schema=1";

/// `runs/sweep.csv` → `runs/sweep.summary.csv`.
pub fn summary_path(out: &Path) -> PathBuf {
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    out.with_file_name(format!("{stem}.summary.csv"))
}

/// Write the schema line, a header and one row per record. `trailer` is
/// appended as a final comment line. An empty slice writes no header.
pub fn write_csv<T: Serialize>(path: &Path, rows: &[T], trailer: Option<&str>) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let mut file = BufWriter::new(File::create(path)?);
    write_csv_to(&mut file, rows, trailer)?;
    file.flush()?;
    Ok(())
}

/// As [`write_csv`], to any writer.
pub fn write_csv_to<W: Write, T: Serialize>(
    mut out: W,
    rows: &[T],
    trailer: Option<&str>,
) -> Result<()> {
    writeln!(out, "{SCHEMA_LINE}")?;
    {
        let mut w = csv::Writer::from_writer(&mut out);
        for r in rows {
            w.serialize(r)?;
        }
        w.flush()?;
    }
    if let Some(t) = trailer {
        let t = t.trim_start_matches('#').trim();
        writeln!(out, "# {t}")?;
    }
    Ok(())
}

/// Read rows written by [`write_csv`], rejecting files without the schema line.
pub fn read_csv<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let mut reader = BufReader::new(File::open(path)?);
    let mut first = String::new();
    reader.read_line(&mut first)?;
    if first.trim_end() != SCHEMA_LINE {
        return Err(Error::invalid(format!(
            "{}: expected '{SCHEMA_LINE}' as the first line",
            path.display()
        )));
    }
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(reader);
    let rows = r
        .deserialize()
        .collect::<std::result::Result<Vec<T>, _>>()?;
    Ok(rows)
}
