//! Binary matrix dumps for debugging.
//!
//! Layout, all little-endian: `u64 rows`, `u64 cols`, then `rows * cols`
//! complex entries in row-major order, each as `f64 re, f64 im`. Several
//! matrices may be concatenated in one file.

use std::io::{self, Read, Write};

use crate::{CMatrix, Cx};

pub fn write_matrix<W: Write>(out: &mut W, m: &CMatrix<f64>) -> io::Result<()> {
    out.write_all(&(m.nrows() as u64).to_le_bytes())?;
    out.write_all(&(m.ncols() as u64).to_le_bytes())?;
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            let v = m[(r, c)];
            out.write_all(&v.re.to_le_bytes())?;
            out.write_all(&v.im.to_le_bytes())?;
        }
    }
    Ok(())
}

/// Reads one matrix; `Ok(None)` at a clean end of stream.
pub fn read_matrix<R: Read>(input: &mut R) -> io::Result<Option<CMatrix<f64>>> {
    let mut word = [0u8; 8];
    match input.read_exact(&mut word) {
        Ok(()) => {}
        Err(e) if e.kind() == io::ErrorKind::UnexpectedEof => return Ok(None),
        Err(e) => return Err(e),
    }
    let rows = u64::from_le_bytes(word) as usize;
    input.read_exact(&mut word)?;
    let cols = u64::from_le_bytes(word) as usize;
    let mut m = CMatrix::zeros(rows, cols);
    for r in 0..rows {
        for c in 0..cols {
            input.read_exact(&mut word)?;
            let re = f64::from_le_bytes(word);
            input.read_exact(&mut word)?;
            let im = f64::from_le_bytes(word);
            m[(r, c)] = Cx::new(re, im);
        }
    }
    Ok(Some(m))
}
