//! Plain-text matrix files.
//!
//! ```text
//! # rows=2
//! # cols=3
//! 1,2,3
//! 4,5,6.5
//! ```
//!
//! Header lines start with `#`. `rows=` and `cols=` are required; other
//! `key=value` pairs are ignored. Values are written with the shortest
//! representation that parses back to the identical `f64`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::mat::Mat;
use crate::error::{Error, Result};

pub fn format_matrix(m: &Mat) -> String {
    let mut s = String::with_capacity(m.rows() * m.cols() * 20);
    let _ = writeln!(s, "# rows={}", m.rows());
    let _ = writeln!(s, "# cols={}", m.cols());
    for i in 0..m.rows() {
        for (j, v) in m.row(i).iter().enumerate() {
            if j > 0 {
                s.push(',');
            }
            let _ = write!(s, "{v:?}");
        }
        s.push('\n');
    }
    s
}

pub fn parse_matrix(text: &str, origin: &str) -> Result<Mat> {
    let err = |msg: String| Error::Parse {
        path: origin.to_string(),
        msg,
    };
    let mut rows = None;
    let mut cols = None;
    let mut data = Vec::new();
    let mut seen_rows = 0usize;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(header) = line.strip_prefix('#') {
            for tok in header.split_whitespace() {
                if let Some((k, v)) = tok.split_once('=') {
                    let parse = || {
                        v.parse::<usize>()
                            .map_err(|e| err(format!("line {}: bad {k}: {e}", lineno + 1)))
                    };
                    match k {
                        "rows" => rows = Some(parse()?),
                        "cols" => cols = Some(parse()?),
                        _ => {}
                    }
                }
            }
            continue;
        }
        let before = data.len();
        for field in line.split(',') {
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|e| err(format!("line {}: {e}", lineno + 1)))?;
            data.push(v);
        }
        if let Some(c) = cols {
            if data.len() - before != c {
                return Err(err(format!(
                    "line {}: expected {c} values, found {}",
                    lineno + 1,
                    data.len() - before
                )));
            }
        }
        seen_rows += 1;
    }
    let rows = rows.ok_or_else(|| err("missing '# rows=' header".into()))?;
    let cols = cols.ok_or_else(|| err("missing '# cols=' header".into()))?;
    if seen_rows != rows {
        return Err(err(format!("header says {rows} rows, found {seen_rows}")));
    }
    Mat::from_vec(rows, cols, data).map_err(|e| err(e.to_string()))
}

pub fn write_matrix(path: &Path, m: &Mat) -> Result<()> {
    fs::write(path, format_matrix(m))?;
    Ok(())
}

pub fn read_matrix(path: &Path) -> Result<Mat> {
    let text = fs::read_to_string(path)?;
    parse_matrix(&text, &path.display().to_string())
}
