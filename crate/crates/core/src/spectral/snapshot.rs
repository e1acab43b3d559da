//! Field snapshot formats.
//!
//! Binary layout (all little-endian):
//!
//! ```text
//! offset  size  field
//!      0     8  magic "KK1SNAP1"
//!      8     8  u64  point count N
//!     16     8  f64  domain length L
//!     24     8  f64  time t
//!     32    8N  f64  u[0..N]
//! ```
//!
//! The CSV form has header `t,x,u` and one row per grid point; frames are
//! consecutive runs of rows sharing the same `t`.

use std::fmt::Write as _;

use thiserror::Error;

use super::grid::Grid;

pub const MAGIC: &[u8; 8] = b"KK1SNAP1";
const HEADER_LEN: usize = 32;

#[derive(Debug, Error, PartialEq)]
pub enum SnapshotError {
    #[error("snapshot truncated: {len} bytes, need at least {need}")]
    Truncated { len: usize, need: usize },
    #[error("bad magic header")]
    BadMagic,
    #[error("point count {0} is not a power of two >= 64")]
    BadPointCount(u64),
    #[error("payload holds {actual} bytes, header promises {expected}")]
    LengthMismatch { expected: u64, actual: usize },
    #[error("non-finite {0} in snapshot")]
    NonFinite(&'static str),
    #[error("domain length must be positive")]
    BadLength,
    #[error("csv line {line}: {msg}")]
    Csv { line: usize, msg: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldSnapshot {
    pub length: f64,
    pub t: f64,
    pub u: Vec<f64>,
}

impl FieldSnapshot {
    pub fn grid(&self) -> Grid {
        Grid::new(self.length, self.u.len()).expect("decoded snapshots satisfy grid invariants")
    }
}

pub fn encode(length: f64, t: f64, u: &[f64]) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * u.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(u.len() as u64).to_le_bytes());
    out.extend_from_slice(&length.to_le_bytes());
    out.extend_from_slice(&t.to_le_bytes());
    for v in u {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

fn read_f64(bytes: &[u8], at: usize) -> f64 {
    f64::from_le_bytes(bytes[at..at + 8].try_into().expect("8-byte slice"))
}

pub fn decode(bytes: &[u8]) -> Result<FieldSnapshot, SnapshotError> {
    if bytes.len() < HEADER_LEN {
        return Err(SnapshotError::Truncated { len: bytes.len(), need: HEADER_LEN });
    }
    if &bytes[..8] != MAGIC {
        return Err(SnapshotError::BadMagic);
    }
    let n = u64::from_le_bytes(bytes[8..16].try_into().expect("8-byte slice"));
    if n < Grid::MIN_POINTS as u64 || !n.is_power_of_two() || n > (1 << 32) {
        return Err(SnapshotError::BadPointCount(n));
    }
    let payload = bytes.len() - HEADER_LEN;
    if payload as u64 != n * 8 {
        return Err(SnapshotError::LengthMismatch { expected: n * 8, actual: payload });
    }
    let length = read_f64(bytes, 16);
    let t = read_f64(bytes, 24);
    if !length.is_finite() {
        return Err(SnapshotError::NonFinite("domain length"));
    }
    if length <= 0.0 {
        return Err(SnapshotError::BadLength);
    }
    if !t.is_finite() {
        return Err(SnapshotError::NonFinite("time"));
    }
    let u: Vec<f64> = bytes[HEADER_LEN..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    if u.iter().any(|v| !v.is_finite()) {
        return Err(SnapshotError::NonFinite("field value"));
    }
    Ok(FieldSnapshot { length, t, u })
}

/// Formats a float with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_csv_frame(out: &mut String, grid: &Grid, t: f64, u: &[f64]) {
    for (j, v) in u.iter().enumerate() {
        let _ = writeln!(out, "{},{},{}", fmt_f64(t), fmt_f64(grid.x(j)), fmt_f64(*v));
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsvFrame {
    pub t: f64,
    pub x: Vec<f64>,
    pub u: Vec<f64>,
}

pub fn parse_csv(text: &str) -> Result<Vec<CsvFrame>, SnapshotError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == "t,x,u" => {}
        _ => return Err(SnapshotError::Csv { line: 1, msg: "expected header `t,x,u`".into() }),
    }
    let mut frames: Vec<CsvFrame> = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let err = |msg: String| SnapshotError::Csv { line: i + 1, msg };
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(err(format!("expected 3 fields, found {}", fields.len())));
        }
        let mut vals = [0.0; 3];
        for (slot, f) in vals.iter_mut().zip(&fields) {
            *slot = f.trim().parse::<f64>().map_err(|e| err(format!("{e}: {f:?}")))?;
            if !slot.is_finite() {
                return Err(err("non-finite value".into()));
            }
        }
        let [t, x, u] = vals;
        match frames.last_mut() {
            Some(f) if f.t == t => {
                f.x.push(x);
                f.u.push(u);
            }
            _ => frames.push(CsvFrame { t, x: vec![x], u: vec![u] }),
        }
    }
    Ok(frames)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rejects_malformed() {
        assert!(matches!(decode(b"KK1SNAP"), Err(SnapshotError::Truncated { .. })));
        let mut good = encode(10.0, 0.5, &[0.25; 64]);
        assert!(decode(&good).is_ok());
        good[0] = b'X';
        assert_eq!(decode(&good), Err(SnapshotError::BadMagic));

        let short = encode(10.0, 0.5, &[0.25; 64]);
        assert!(matches!(decode(&short[..short.len() - 8]), Err(SnapshotError::LengthMismatch { .. })));
        assert_eq!(decode(&encode(10.0, 0.0, &[0.0; 48])), Err(SnapshotError::BadPointCount(48)));
        assert_eq!(decode(&encode(-1.0, 0.0, &[0.0; 64])), Err(SnapshotError::BadLength));
        let mut nan = vec![0.0; 64];
        nan[7] = f64::NAN;
        assert_eq!(decode(&encode(1.0, 0.0, &nan)), Err(SnapshotError::NonFinite("field value")));
    }

    #[test]
    fn csv_frames() {
        let g = Grid::new(8.0, 64).unwrap();
        let mut s = String::from("t,x,u\n");
        write_csv_frame(&mut s, &g, 0.0, &vec![1.0; 64]);
        write_csv_frame(&mut s, &g, 0.5, &vec![2.0; 64]);
        let frames = parse_csv(&s).unwrap();
        assert_eq!(frames.len(), 2);
        assert_eq!(frames[1].u.len(), 64);
        assert_eq!(frames[0].x[1], g.x(1));
        assert!(parse_csv("t,x\n").is_err());
        assert!(parse_csv("t,x,u\n1,2\n").is_err());
        assert!(parse_csv("t,x,u\n1,2,zz\n").is_err());
    }

    proptest! {
        #[test]
        fn binary_round_trip(len in 0.1f64..1e3, t in -1e3f64..1e3, seed in any::<u64>(), pow in 6u32..10) {
            let n = 1usize << pow;
            let u: Vec<f64> = (0..n).map(|j| ((seed ^ j as u64) as f64).sin()).collect();
            let snap = decode(&encode(len, t, &u)).unwrap();
            prop_assert_eq!(snap.u, u);
            prop_assert_eq!(snap.t.to_bits(), t.to_bits());
            prop_assert_eq!(snap.length.to_bits(), len.to_bits());
        }

        #[test]
        fn decode_never_panics(bytes in proptest::collection::vec(any::<u8>(), 0..600)) {
            let _ = decode(&bytes);
        }
    }
}
