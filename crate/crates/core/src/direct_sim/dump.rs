//! Binary trajectory dumps: a plain sequence of records of five
//! little-endian `f64` values `(t, p, q, y, x)`, no header.

use crate::model::FullState;
use std::io::{self, Read, Write};

/// Bytes per record.
pub const RECORD_BYTES: usize = 40;

pub fn write_record<W: Write>(w: &mut W, t: f64, s: &FullState) -> io::Result<()> {
    let mut buf = [0u8; RECORD_BYTES];
    for (k, v) in [t, s.p, s.q, s.y, s.x].into_iter().enumerate() {
        buf[8 * k..8 * k + 8].copy_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)
}

/// Writes all records and returns their number.
pub fn write_dump<W: Write, I: IntoIterator<Item = (f64, FullState)>>(
    w: &mut W,
    records: I,
) -> io::Result<usize> {
    let mut n = 0;
    for (t, s) in records {
        write_record(w, t, &s)?;
        n += 1;
    }
    w.flush()?;
    Ok(n)
}

/// Reads a whole dump; a trailing partial record is an `UnexpectedEof` error.
pub fn read_dump<R: Read>(r: &mut R) -> io::Result<Vec<(f64, FullState)>> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() % RECORD_BYTES != 0 {
        return Err(io::Error::new(
            io::ErrorKind::UnexpectedEof,
            format!(
                "dump length {} is not a multiple of {RECORD_BYTES}",
                bytes.len()
            ),
        ));
    }
    Ok(bytes
        .chunks_exact(RECORD_BYTES)
        .map(|c| {
            let f = |k: usize| f64::from_le_bytes(c[8 * k..8 * k + 8].try_into().expect("8 bytes"));
            (f(0), FullState::new(f(1), f(2), f(3), f(4)))
        })
        .collect())
}
