//! CSV formats and atomic file output.

use std::io::Write;
use std::path::{Path, PathBuf};

use eislife_core::ImpedanceSpectrum;

use crate::failure::{CmdResult, Failure};

pub const SPECTRUM_HEADER: [&str; 3] = ["freq_hz", "re_ohm", "im_ohm"];
pub const MANIFEST_HEADER: [&str; 3] = ["file", "age_hours", "cell_id"];

/// Shortest representation that parses back to the same value.
pub fn num(v: f64) -> String {
    format!("{v:?}")
}

/// Writes `bytes` through a temporary file in the target directory, then
/// renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> CmdResult {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    };
    std::fs::create_dir_all(&dir).map_err(|e| Failure::io(&dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(&dir).map_err(|e| Failure::io(&dir, e))?;
    tmp.write_all(bytes).map_err(|e| Failure::io(path, e))?;
    tmp.persist(path).map_err(|e| Failure::io(path, e.error))?;
    Ok(())
}

/// A small CSV table with an optional `# ...` provenance line on top.
pub struct Table {
    comment: Option<String>,
    writer: csv::Writer<Vec<u8>>,
}

impl Table {
    pub fn new<I, S>(comment: Option<String>, header: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        let mut writer = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        writer.write_record(header).expect("in-memory write");
        Self { comment, writer }
    }

    pub fn row<I, S>(&mut self, fields: I)
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.writer.write_record(fields).expect("in-memory write");
    }

    pub fn into_bytes(self) -> Vec<u8> {
        let body = self.writer.into_inner().expect("in-memory flush");
        let mut out = Vec::with_capacity(body.len() + 64);
        if let Some(c) = self.comment {
            out.extend_from_slice(b"# ");
            out.extend_from_slice(c.as_bytes());
            out.push(b'\n');
        }
        out.extend_from_slice(&body);
        out
    }
}

fn reader(path: &Path, comments: bool) -> Result<csv::Reader<std::fs::File>, String> {
    let mut b = csv::ReaderBuilder::new();
    b.trim(csv::Trim::All);
    if comments {
        b.comment(Some(b'#'));
    }
    b.from_path(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn parse_f64(s: &str, what: &str, line: usize) -> Result<f64, String> {
    s.parse::<f64>()
        .map_err(|_| format!("line {line}: {what} is not a number: {s:?}"))
}

fn check_header(path: &Path, got: &csv::StringRecord, want: &[&str]) -> Result<(), String> {
    if got.iter().eq(want.iter().copied()) {
        Ok(())
    } else {
        Err(format!(
            "{}: expected header {}, found {}",
            path.display(),
            want.join(","),
            got.iter().collect::<Vec<_>>().join(",")
        ))
    }
}

/// Reads a `freq_hz,re_ohm,im_ohm` file. The result is not yet validated.
pub fn read_spectrum(path: &Path, age_hours: f64, cell_id: &str) -> Result<ImpedanceSpectrum, String> {
    let mut rdr = reader(path, false)?;
    let header = rdr.headers().map_err(|e| format!("{}: {e}", path.display()))?.clone();
    check_header(path, &header, &SPECTRUM_HEADER)?;
    let (mut f, mut re, mut im) = (Vec::new(), Vec::new(), Vec::new());
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| format!("{}: {e}", path.display()))?;
        if rec.len() != 3 {
            return Err(format!("{}: line {line}: expected 3 fields", path.display()));
        }
        f.push(parse_f64(&rec[0], "freq_hz", line)?);
        re.push(parse_f64(&rec[1], "re_ohm", line)?);
        im.push(parse_f64(&rec[2], "im_ohm", line)?);
    }
    Ok(ImpedanceSpectrum::new(f, re, im, age_hours, cell_id))
}

pub fn spectrum_csv(s: &ImpedanceSpectrum) -> Vec<u8> {
    let mut t = Table::new(None, SPECTRUM_HEADER);
    for i in 0..s.len() {
        t.row([num(s.freqs_hz[i]), num(s.re_ohm[i]), num(s.im_ohm[i])]);
    }
    t.into_bytes()
}

pub struct ManifestEntry {
    /// Path as written in the manifest.
    pub file: String,
    /// Path resolved against the manifest's directory.
    pub path: PathBuf,
    pub age_hours: f64,
    pub cell_id: String,
}

pub fn read_manifest(path: &Path) -> CmdResult<Vec<ManifestEntry>> {
    let mut rdr = reader(path, false).map_err(Failure::parse)?;
    let header = rdr
        .headers()
        .map_err(|e| Failure::parse(format!("{}: {e}", path.display())))?
        .clone();
    check_header(path, &header, &MANIFEST_HEADER).map_err(Failure::parse)?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| Failure::parse(format!("{}: {e}", path.display())))?;
        if rec.len() != 3 {
            return Err(Failure::parse(format!("{}: line {line}: expected 3 fields", path.display())));
        }
        let age = parse_f64(&rec[1], "age_hours", line).map_err(Failure::parse)?;
        if !(age.is_finite() && age >= 0.0) {
            return Err(Failure::parse(format!("{}: line {line}: age_hours must be >= 0", path.display())));
        }
        out.push(ManifestEntry {
            file: rec[0].to_string(),
            path: base.join(&rec[0]),
            age_hours: age,
            cell_id: rec[2].to_string(),
        });
    }
    if out.is_empty() {
        return Err(Failure::parse(format!("{}: manifest has no entries", path.display())));
    }
    Ok(out)
}

pub const RESERVED_COLUMNS: [&str; 3] = ["age_hours", "cell_id", "flags"];

pub struct FeatureRow {
    /// `None` where the cell is empty (flagged rows).
    pub values: Vec<Option<f64>>,
    pub age_hours: f64,
    pub cell_id: String,
    pub flags: String,
}

pub struct FeatureTable {
    pub names: Vec<String>,
    pub rows: Vec<FeatureRow>,
}

/// Reads a features table: every column other than `age_hours`, `cell_id`
/// and `flags` is a feature. Lines starting with `#` are ignored.
pub fn read_features(path: &Path) -> CmdResult<FeatureTable> {
    let err = |m: String| Failure::parse(format!("{}: {m}", path.display()));
    let mut rdr = reader(path, true).map_err(Failure::parse)?;
    let header = rdr.headers().map_err(|e| err(e.to_string()))?.clone();
    let find = |name: &str| header.iter().position(|h| h == name);
    let (Some(age_col), Some(cell_col)) = (find("age_hours"), find("cell_id")) else {
        return Err(Failure::schema(format!(
            "{}: features table needs age_hours and cell_id columns",
            path.display()
        )));
    };
    let flag_col = find("flags");
    let feature_cols: Vec<usize> = (0..header.len())
        .filter(|&c| !RESERVED_COLUMNS.contains(&&header[c]))
        .collect();
    let names: Vec<String> = feature_cols.iter().map(|&c| header[c].to_string()).collect();
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| err(e.to_string()))?;
        let line = i + 2;
        if rec.len() != header.len() {
            return Err(err(format!("row {line}: expected {} fields", header.len())));
        }
        let values = feature_cols
            .iter()
            .map(|&c| {
                if rec[c].is_empty() {
                    Ok(None)
                } else {
                    parse_f64(&rec[c], &header[c], line).map(Some)
                }
            })
            .collect::<Result<Vec<_>, _>>()
            .map_err(err)?;
        rows.push(FeatureRow {
            values,
            age_hours: parse_f64(&rec[age_col], "age_hours", line).map_err(err)?,
            cell_id: rec[cell_col].to_string(),
            flags: flag_col.map(|c| rec[c].to_string()).unwrap_or_default(),
        });
    }
    Ok(FeatureTable { names, rows })
}
