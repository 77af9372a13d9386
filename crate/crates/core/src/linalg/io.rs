//! Matrix file formats.
//!
//! * CSV: comma separated, one row per line, no header.
//! * Binary: magic `SKGC`, `u64` rows, `u64` cols (little endian), then
//!   row-major little-endian `f64` entries.

use std::io::{BufRead, Read, Write};

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

pub const MAGIC: &[u8; 4] = b"SKGC";

pub fn write_csv<W: Write>(m: &DenseMatrix, mut w: W) -> Result<()> {
    for i in 0..m.rows() {
        let line = m
            .row(i)
            .iter()
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join(",");
        writeln!(w, "{line}")?;
    }
    Ok(())
}

pub fn read_csv<R: BufRead>(r: R) -> Result<DenseMatrix> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in r.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|s| {
                s.trim().parse::<f64>().map_err(|e| {
                    Error::Format(format!("line {}: {:?}: {e}", lineno + 1, s.trim()))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(Error::Format(format!(
                    "line {}: expected {} fields, found {}",
                    lineno + 1,
                    first.len(),
                    row.len()
                )));
            }
        }
        rows.push(row);
    }
    let m = DenseMatrix::from_rows(&rows)?;
    if !m.is_finite() {
        return Err(Error::Format("non-finite entry".into()));
    }
    Ok(m)
}

pub fn write_binary<W: Write>(m: &DenseMatrix, mut w: W) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&(m.rows() as u64).to_le_bytes())?;
    w.write_all(&(m.cols() as u64).to_le_bytes())?;
    for v in m.as_slice() {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_binary<R: Read>(mut r: R) -> Result<DenseMatrix> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format(format!("bad magic {magic:?}")));
    }
    let mut word = [0u8; 8];
    r.read_exact(&mut word)?;
    let rows = u64::from_le_bytes(word) as usize;
    r.read_exact(&mut word)?;
    let cols = u64::from_le_bytes(word) as usize;
    let len = rows
        .checked_mul(cols)
        .ok_or_else(|| Error::Format("dimensions overflow".into()))?;
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() != len * 8 {
        return Err(Error::Format(format!(
            "expected {} payload bytes, found {}",
            len * 8,
            bytes.len()
        )));
    }
    let data = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    let m = DenseMatrix::from_vec(rows, cols, data)?;
    if !m.is_finite() {
        return Err(Error::Format("non-finite entry".into()));
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn csv_and_binary_round_trip(
            rows in 1usize..6,
            cols in 1usize..6,
            seed in proptest::collection::vec(-1e6f64..1e6, 36),
        ) {
            let m = DenseMatrix::from_fn(rows, cols, |i, j| seed[i * 6 + j]);
            let mut buf = Vec::new();
            write_csv(&m, &mut buf).unwrap();
            prop_assert_eq!(&read_csv(buf.as_slice()).unwrap(), &m);
            let mut bin = Vec::new();
            write_binary(&m, &mut bin).unwrap();
            prop_assert_eq!(bin.len(), 20 + 8 * rows * cols);
            prop_assert_eq!(&read_binary(bin.as_slice()).unwrap(), &m);
        }
    }

    #[test]
    fn binary_header_layout() {
        let m = DenseMatrix::from_rows(&[[1.5, -2.0]]).unwrap();
        let mut bin = Vec::new();
        write_binary(&m, &mut bin).unwrap();
        assert_eq!(&bin[..4], b"SKGC");
        assert_eq!(u64::from_le_bytes(bin[4..12].try_into().unwrap()), 1);
        assert_eq!(u64::from_le_bytes(bin[12..20].try_into().unwrap()), 2);
        assert_eq!(f64::from_le_bytes(bin[20..28].try_into().unwrap()), 1.5);
    }

    #[test]
    fn malformed_inputs_are_rejected() {
        assert!(read_csv("1,2\n3\n".as_bytes()).is_err());
        assert!(read_csv("1,x\n".as_bytes()).is_err());
        assert!(read_binary(&b"XXXX"[..]).is_err());
        let mut bin = Vec::new();
        write_binary(&DenseMatrix::zeros(2, 2), &mut bin).unwrap();
        bin.pop();
        assert!(read_binary(bin.as_slice()).is_err());
    }
}
