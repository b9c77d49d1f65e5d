//! Grid function serialization.
//!
//! Binary layout: `d` and `n` as little-endian `u64`, followed by `n^d`
//! little-endian IEEE-754 `f64` values in storage (axis-major) order.

use std::io::{Read, Write};

use super::{GridFunction, TorusGrid};
use crate::error::{Error, Result};

pub fn write_binary<W: Write>(f: &GridFunction, mut w: W) -> Result<()> {
    let grid = f.grid();
    w.write_all(&(grid.dim() as u64).to_le_bytes())?;
    w.write_all(&(grid.n() as u64).to_le_bytes())?;
    for v in f.values() {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_binary<R: Read>(mut r: R) -> Result<GridFunction> {
    let mut word = [0u8; 8];
    r.read_exact(&mut word)?;
    let dim = u64::from_le_bytes(word);
    r.read_exact(&mut word)?;
    let n = u64::from_le_bytes(word);
    if dim > 2 || n > 1 << 16 {
        return Err(Error::InvalidParameter(format!("implausible header d={dim}, n={n}")));
    }
    let grid = TorusGrid::new(dim as usize, n as usize)?;
    let mut values = Vec::with_capacity(grid.len());
    for _ in 0..grid.len() {
        r.read_exact(&mut word)?;
        values.push(f64::from_le_bytes(word));
    }
    GridFunction::new(grid, values)
}

/// CSV with one index column per axis followed by `value`.
pub fn write_csv<W: Write>(f: &GridFunction, w: W) -> Result<()> {
    let grid = f.grid();
    let mut out = csv::Writer::from_writer(w);
    if grid.dim() == 1 {
        out.write_record(["i", "value"])?;
    } else {
        out.write_record(["i", "j", "value"])?;
    }
    for (idx, v) in f.values().iter().enumerate() {
        let [a, b] = grid.unflatten(idx);
        if grid.dim() == 1 {
            out.write_record([a.to_string(), v.to_string()])?;
        } else {
            out.write_record([a.to_string(), b.to_string(), v.to_string()])?;
        }
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binary_layout() {
        let g = TorusGrid::new(1, 16).unwrap();
        let f = GridFunction::from_fn(g, |[x, _]| x).unwrap();
        let mut buf = Vec::new();
        write_binary(&f, &mut buf).unwrap();
        assert_eq!(buf.len(), 16 + 16 * 8);
        assert_eq!(&buf[..8], &1u64.to_le_bytes());
        assert_eq!(&buf[8..16], &16u64.to_le_bytes());
        assert_eq!(&buf[16 + 8..16 + 16], &(1.0f64 / 16.0).to_le_bytes());
        assert_eq!(read_binary(&buf[..]).unwrap(), f);
    }

    #[test]
    fn truncated_binary_fails() {
        let g = TorusGrid::new(2, 16).unwrap();
        let mut buf = Vec::new();
        write_binary(&GridFunction::constant(g, 2.0), &mut buf).unwrap();
        buf.truncate(100);
        assert!(read_binary(&buf[..]).is_err());
    }

    #[test]
    fn csv_has_index_columns() {
        let g = TorusGrid::new(2, 16).unwrap();
        let f = GridFunction::constant(g, 0.5);
        let mut buf = Vec::new();
        write_csv(&f, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("i,j,value"));
        assert_eq!(lines.next(), Some("0,0,0.5"));
        assert_eq!(text.lines().count(), 1 + 256);
    }
}
