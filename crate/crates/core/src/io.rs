//! Matrix files.
//!
//! Binary layout: the magic bytes `APKR`, a little-endian `u16` format
//! version, `u64` rows and `u64` cols, then `rows·cols` little-endian `f64`
//! values in row-major order. A path ending in `.csv` is read and written as
//! plain CSV instead, one matrix row per line.

use crate::{DenseMatrix, Error, Result};
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

pub const MAGIC: &[u8; 4] = b"APKR";
pub const FORMAT_VERSION: u16 = 1;
const HEADER_LEN: usize = 4 + 2 + 8 + 8;

fn is_csv(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

pub fn write_matrix(path: impl AsRef<Path>, m: &DenseMatrix) -> Result<()> {
    let path = path.as_ref();
    let file = fs::File::create(path)?;
    let mut w = BufWriter::new(file);
    if is_csv(path) {
        write_csv(&mut w, m)?;
    } else {
        w.write_all(&encode(m))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_matrix(path: impl AsRef<Path>) -> Result<DenseMatrix> {
    let path = path.as_ref();
    if is_csv(path) {
        read_csv(BufReader::new(fs::File::open(path)?))
    } else {
        let mut bytes = Vec::new();
        fs::File::open(path)?.read_to_end(&mut bytes)?;
        decode(&bytes)
    }
}

/// Binary encoding of a matrix.
pub fn encode(m: &DenseMatrix) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * m.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(m.nrows() as u64).to_le_bytes());
    out.extend_from_slice(&(m.ncols() as u64).to_le_bytes());
    for row in m.row_iter() {
        for v in row.iter() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

pub fn decode(bytes: &[u8]) -> Result<DenseMatrix> {
    if bytes.len() < HEADER_LEN || &bytes[..4] != MAGIC {
        return Err(Error::Format("missing APKR header".into()));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != FORMAT_VERSION {
        return Err(Error::Format(format!("unsupported format version {version}")));
    }
    let word = |at: usize| u64::from_le_bytes(bytes[at..at + 8].try_into().expect("8 bytes"));
    let (rows, cols) = (word(6), word(14));
    let count = rows
        .checked_mul(cols)
        .and_then(|c| usize::try_from(c).ok())
        .ok_or_else(|| Error::Format(format!("{rows}x{cols} overflows")))?;
    let body = &bytes[HEADER_LEN..];
    if body.len() != count.checked_mul(8).unwrap_or(usize::MAX) {
        return Err(Error::Format(format!(
            "{rows}x{cols} matrix needs {} payload bytes, found {}",
            count.saturating_mul(8),
            body.len()
        )));
    }
    let values: Vec<f64> = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    Ok(DenseMatrix::from_row_slice(rows as usize, cols as usize, &values))
}

fn write_csv(w: &mut impl Write, m: &DenseMatrix) -> Result<()> {
    for row in m.row_iter() {
        let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    Ok(())
}

fn read_csv(r: impl BufRead) -> Result<DenseMatrix> {
    let mut values = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let row: Vec<f64> = line
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Format(format!("line {}: {e}: {t:?}", i + 1)))
            })
            .collect::<Result<_>>()?;
        match cols {
            None => cols = Some(row.len()),
            Some(c) if c != row.len() => {
                return Err(Error::Format(format!(
                    "line {} has {} fields, expected {c}",
                    i + 1,
                    row.len()
                )))
            }
            _ => {}
        }
        values.extend(row);
        rows += 1;
    }
    Ok(DenseMatrix::from_row_slice(rows, cols.unwrap_or(0), &values))
}

/// A vector stored as an `n × 1` matrix; a `1 × n` file is accepted too.
pub fn read_vector(path: impl AsRef<Path>) -> Result<Vec<f64>> {
    let m = read_matrix(path)?;
    if m.ncols() != 1 && m.nrows() != 1 {
        return Err(Error::Format(format!("expected a vector, found a {}x{} matrix", m.nrows(), m.ncols())));
    }
    Ok(m.iter().copied().collect())
}

pub fn write_vector(path: impl AsRef<Path>, v: &[f64]) -> Result<()> {
    write_matrix(path, &DenseMatrix::from_column_slice(v.len(), 1, v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::gaussian;

    #[test]
    fn binary_layout() {
        let m = DenseMatrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let bytes = encode(&m);
        assert_eq!(&bytes[..4], b"APKR");
        assert_eq!(&bytes[4..6], &[1, 0]);
        assert_eq!(u64::from_le_bytes(bytes[6..14].try_into().unwrap()), 2);
        assert_eq!(u64::from_le_bytes(bytes[14..22].try_into().unwrap()), 3);
        assert_eq!(f64::from_le_bytes(bytes[22..30].try_into().unwrap()), 1.0);
        assert_eq!(f64::from_le_bytes(bytes[30..38].try_into().unwrap()), 2.0);
        assert_eq!(bytes.len(), 22 + 48);
        assert_eq!(decode(&bytes).unwrap(), m);
    }

    #[test]
    fn rejects_corrupt_input() {
        let mut bytes = encode(&DenseMatrix::identity(2, 2));
        assert!(decode(&bytes[..10]).is_err());
        bytes.pop();
        assert!(matches!(decode(&bytes), Err(Error::Format(_))));
        let mut bad = encode(&DenseMatrix::identity(2, 2));
        bad[4] = 9;
        assert!(decode(&bad).is_err());
        bad[0] = b'X';
        assert!(decode(&bad).is_err());
    }

    #[test]
    fn file_round_trips() {
        let dir = std::env::temp_dir().join(format!("apkr-io-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let m = gaussian(5, 3, 1);
        for name in ["m.bin", "m.csv"] {
            let p = dir.join(name);
            write_matrix(&p, &m).unwrap();
            assert_eq!(read_matrix(&p).unwrap(), m, "{name}");
        }
        let v = vec![1.5, -2.0, 3.25];
        write_vector(dir.join("v.csv"), &v).unwrap();
        assert_eq!(read_vector(dir.join("v.csv")).unwrap(), v);
        fs::write(dir.join("bad.csv"), "1,2\n3\n").unwrap();
        assert!(read_matrix(dir.join("bad.csv")).is_err());
        fs::remove_dir_all(&dir).unwrap();
    }
}
