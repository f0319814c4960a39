//! Serialization: matrices as CSV with a `# rows,cols` header and
//! 17-significant-digit decimal floats, records as JSON. LF line endings
//! throughout; CSV/JSON round-trip losslessly.

use crate::error::{Error, Result};
use crate::linalg::Mat;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

/// 17 significant digits round-trips every finite f64.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn matrix_to_csv(m: &Mat) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# {},{}", m.rows(), m.cols());
    for i in 0..m.rows() {
        let row: Vec<String> = m.row(i).iter().map(|&v| fmt_f64(v)).collect();
        let _ = writeln!(s, "{}", row.join(","));
    }
    s
}

pub fn matrix_from_csv(text: &str, origin: &str) -> Result<Mat> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::Parse {
        path: origin.to_string(),
        reason: "empty matrix file".into(),
    })?;
    let dims = header.trim_start_matches('#').trim();
    let (r, c) = dims.split_once(',').ok_or_else(|| Error::Parse {
        path: origin.to_string(),
        reason: format!("bad header '{header}'"),
    })?;
    let rows: usize = r.trim().parse().map_err(|_| Error::Parse {
        path: origin.to_string(),
        reason: format!("bad row count '{r}'"),
    })?;
    let cols: usize = c.trim().parse().map_err(|_| Error::Parse {
        path: origin.to_string(),
        reason: format!("bad col count '{c}'"),
    })?;
    let mut data = Vec::with_capacity(rows * cols);
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        for tok in line.split(',') {
            let v: f64 = tok.trim().parse().map_err(|_| Error::Parse {
                path: origin.to_string(),
                reason: format!("bad float '{tok}' on data line {}", i + 1),
            })?;
            data.push(v);
        }
    }
    if data.len() != rows * cols {
        return Err(Error::Parse {
            path: origin.to_string(),
            reason: format!("expected {} values, found {}", rows * cols, data.len()),
        });
    }
    Ok(Mat::from_vec(rows, cols, data))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut f = std::fs::File::create(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    f.write_all(text.as_bytes()).map_err(|e| Error::Io {
        path: path.display().to_string(),
        source: e,
    })
}

pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        source: e,
    })
}

pub fn write_matrix_csv(path: &Path, m: &Mat) -> Result<()> {
    write_text(path, &matrix_to_csv(m))
}

pub fn read_matrix_csv(path: &Path) -> Result<Mat> {
    matrix_from_csv(&read_text(path)?, &path.display().to_string())
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Parse {
        path: path.display().to_string(),
        reason: e.to_string(),
    })?;
    text.push('\n');
    write_text(path, &text)
}
