//! Dataset and embedding file formats.
//!
//! * CSV input: comma separated numeric fields, optional header line,
//!   optional integer label column.
//! * Embedding text: a `"n d"` header followed by one `"row v1 .. vd"` line
//!   per row. Values use the shortest representation that parses back to the
//!   identical float, so a save/load round trip is exact.
//! * Model checkpoint: a `W` section and a `THETA` section, each an embedding
//!   text block.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::Real;

/// Reads a numeric CSV file. When `label_column` is set, that column is split
/// off as integer row labels.
pub fn load_csv<T: Real>(
    path: impl AsRef<Path>,
    has_header: bool,
    label_column: Option<usize>,
) -> Result<Matrix<T>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file, path, has_header, label_column)
}

/// Like [`load_csv`], reading from any source; `origin` names it in errors.
pub fn read_csv<T: Real, R: Read>(
    reader: R,
    origin: &Path,
    has_header: bool,
    label_column: Option<usize>,
) -> Result<Matrix<T>> {
    let parse_err = |line: u64, message: String| Error::Parse {
        path: origin.to_path_buf(),
        line,
        message,
    };
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let mut width: Option<usize> = None;
    let mut data = Vec::new();
    let mut labels = Vec::new();
    let mut rows = 0usize;
    let mut record = csv::StringRecord::new();
    loop {
        let more = rdr.read_record(&mut record).map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(line, e.to_string())
        })?;
        if !more {
            break;
        }
        let line = record.position().map_or(rows as u64 + 1, |p| p.line());
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        match width {
            None => {
                if let Some(lc) = label_column {
                    if lc >= record.len() {
                        return Err(parse_err(
                            line,
                            format!("label column {lc} out of range for {} fields", record.len()),
                        ));
                    }
                }
                width = Some(record.len());
            }
            Some(w) if w != record.len() => {
                return Err(parse_err(
                    line,
                    format!("ragged row: expected {w} fields, found {}", record.len()),
                ));
            }
            Some(_) => {}
        }
        for (col, field) in record.iter().enumerate() {
            let value: f64 = field.parse().map_err(|_| {
                parse_err(line, format!("field {} is not numeric: {field:?}", col + 1))
            })?;
            if !value.is_finite() {
                return Err(parse_err(line, format!("field {} is not finite", col + 1)));
            }
            if Some(col) == label_column {
                if value.fract() != 0.0 || value.abs() > 9.0e15 {
                    return Err(parse_err(
                        line,
                        format!("label {field:?} is not an integer"),
                    ));
                }
                labels.push(value as i64);
            } else {
                data.push(T::lit(value));
            }
        }
        rows += 1;
    }

    let Some(width) = width else {
        return Err(parse_err(1, "empty file".to_string()));
    };
    let cols = width - usize::from(label_column.is_some());
    let matrix = Matrix::from_vec(rows, cols, data)?;
    if label_column.is_some() {
        matrix.with_labels(labels)
    } else {
        Ok(matrix)
    }
}

pub fn save_embedding<T: Real>(z: &Matrix<T>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    write_embedding(z, &mut out).map_err(|e| Error::io(path, e))?;
    out.flush().map_err(|e| Error::io(path, e))
}

pub fn write_embedding<T: Real, W: Write>(z: &Matrix<T>, out: &mut W) -> std::io::Result<()> {
    writeln!(out, "{} {}", z.rows(), z.cols())?;
    for (i, row) in z.iter_rows().enumerate() {
        write!(out, "{i}")?;
        for &v in row {
            write!(out, " {}", format_real(v))?;
        }
        writeln!(out)?;
    }
    Ok(())
}

pub fn load_embedding<T: Real>(path: impl AsRef<Path>) -> Result<Matrix<T>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut lines = LineReader::new(BufReader::new(file), path);
    read_embedding_block(&mut lines)
}

/// Writes `W` and `θ` as two embedding blocks under `W` / `THETA` headers.
pub fn save_checkpoint<T: Real>(
    w: &Matrix<T>,
    theta: &Matrix<T>,
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    write_checkpoint(w, theta, &mut out)
        .and_then(|_| out.flush())
        .map_err(|e| Error::io(path, e))
}

pub fn write_checkpoint<T: Real, W: Write>(
    w: &Matrix<T>,
    theta: &Matrix<T>,
    out: &mut W,
) -> std::io::Result<()> {
    writeln!(out, "W")?;
    write_embedding(w, out)?;
    writeln!(out, "THETA")?;
    write_embedding(theta, out)
}

pub fn load_checkpoint<T: Real>(path: impl AsRef<Path>) -> Result<(Matrix<T>, Matrix<T>)> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut lines = LineReader::new(BufReader::new(file), path);
    lines.expect_marker("W")?;
    let w = read_embedding_block(&mut lines)?;
    lines.expect_marker("THETA")?;
    let theta = read_embedding_block(&mut lines)?;
    Ok((w, theta))
}

/// Shortest decimal that round-trips; scientific notation for very large or
/// very small magnitudes.
pub fn format_real<T: Real>(v: T) -> String {
    let a = v.abs();
    if a == T::zero() || (a >= T::lit(1e-5) && a < T::lit(1e16)) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

struct LineReader<'a, R> {
    inner: R,
    path: &'a Path,
    line: u64,
    buf: String,
}

impl<'a, R: BufRead> LineReader<'a, R> {
    fn new(inner: R, path: &'a Path) -> Self {
        Self {
            inner,
            path,
            line: 0,
            buf: String::new(),
        }
    }

    fn next_line(&mut self) -> Result<Option<&str>> {
        self.buf.clear();
        let read = self
            .inner
            .read_line(&mut self.buf)
            .map_err(|e| Error::io(self.path, e))?;
        if read == 0 {
            return Ok(None);
        }
        self.line += 1;
        Ok(Some(self.buf.trim_end_matches(['\n', '\r'])))
    }

    fn error(&self, message: impl Into<String>) -> Error {
        Error::Parse {
            path: self.path.to_path_buf(),
            line: self.line,
            message: message.into(),
        }
    }

    fn expect_marker(&mut self, marker: &str) -> Result<()> {
        match self.next_line()? {
            Some(l) if l.trim() == marker => Ok(()),
            Some(l) => {
                let msg = format!("expected section {marker:?}, found {l:?}");
                Err(self.error(msg))
            }
            None => Err(self.error(format!("missing section {marker:?}"))),
        }
    }
}

fn read_embedding_block<T: Real, R: BufRead>(lines: &mut LineReader<'_, R>) -> Result<Matrix<T>> {
    let header = match lines.next_line()? {
        Some(h) => h.to_string(),
        None => return Err(lines.error("missing header")),
    };
    let dims: Vec<usize> = header
        .split_whitespace()
        .map(str::parse)
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| lines.error(format!("malformed header {header:?}")))?;
    let [rows, cols] = dims[..] else {
        return Err(lines.error(format!("malformed header {header:?}, expected \"n d\"")));
    };

    let mut data = Vec::with_capacity(rows * cols);
    for expected in 0..rows {
        let Some(line) = lines.next_line()?.map(str::to_owned) else {
            return Err(lines.error(format!("header promises {rows} rows, found {expected}")));
        };
        let mut fields = line.split_whitespace();
        let index: usize = fields
            .next()
            .and_then(|f| f.parse().ok())
            .ok_or_else(|| lines.error("missing row index"))?;
        if index != expected {
            return Err(lines.error(format!("row index {index}, expected {expected}")));
        }
        let before = data.len();
        for field in fields {
            let v: T = field
                .parse()
                .map_err(|_| lines.error(format!("unparseable value {field:?}")))?;
            if !v.is_finite() {
                return Err(lines.error(format!("non-finite value {field:?}")));
            }
            data.push(v);
        }
        if data.len() - before != cols {
            let msg = format!("row has {} values, header says {cols}", data.len() - before);
            return Err(lines.error(msg));
        }
    }
    Matrix::from_vec(rows, cols, data)
}
