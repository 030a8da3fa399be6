//! Binary snapshots.
//!
//! Layout, all little-endian:
//!
//! | offset | size | content                                  |
//! |--------|------|------------------------------------------|
//! | 0      | 8    | magic `MSWSNAP\0`                        |
//! | 8      | 4    | format version (`u32`, currently 1)      |
//! | 12     | 4    | endianness tag `0x01020304` (`u32`)      |
//! | 16     | 4    | `n` (`u32`)                              |
//! | 20     | 4    | reserved, zero                           |
//! | 24     | 8    | `L` (`f64`)                              |
//! | 32     | 8    | `t` (`f64`)                              |
//! | 40     | 8    | `gamma` (`f64`)                          |
//! | 48     | 8    | `epsilon` (`f64`)                        |
//! | 56     | ...  | eight arrays of `n^3` `f64`              |
//!
//! The arrays are `Re u`, `Im u`, `A_x`, `A_y`, `A_z`, `At_x`, `At_y`, `At_z`,
//! each in the solver's flat order `(ix * n + iy) * n + iz`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use mswave_core::spectral::{Grid, ScalarField, VectorField};
use mswave_core::state::SimState;
use mswave_core::{Error, Result};
use num_complex::Complex64;

pub const MAGIC: [u8; 8] = *b"MSWSNAP\0";
pub const VERSION: u32 = 1;
pub const ENDIAN_TAG: u32 = 0x0102_0304;
pub const HEADER_LEN: usize = 56;

/// Header fields of a snapshot.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Header {
    pub version: u32,
    pub n: u32,
    pub len: f64,
    pub t: f64,
    pub gamma: f64,
    pub epsilon: f64,
}

fn bad(msg: impl Into<String>) -> Error {
    Error::Snapshot(msg.into())
}

/// Serializes a state into bytes.
pub fn encode(state: &SimState) -> Vec<u8> {
    let g = state.grid();
    let np = g.points();
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * 8 * np);
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&ENDIAN_TAG.to_le_bytes());
    out.extend_from_slice(&(g.n() as u32).to_le_bytes());
    out.extend_from_slice(&0u32.to_le_bytes());
    for x in [g.len(), state.t, state.gamma, state.epsilon] {
        out.extend_from_slice(&x.to_le_bytes());
    }
    let u = state.u.values();
    for part in [0, 1] {
        for z in u {
            let x = if part == 0 { z.re } else { z.im };
            out.extend_from_slice(&x.to_le_bytes());
        }
    }
    for v in [&state.a, &state.at] {
        for c in v.comps() {
            for z in c.values() {
                out.extend_from_slice(&z.re.to_le_bytes());
            }
        }
    }
    out
}

fn u32_at(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(b[at..at + 4].try_into().expect("4 bytes"))
}

fn f64_at(b: &[u8], at: usize) -> f64 {
    f64::from_le_bytes(b[at..at + 8].try_into().expect("8 bytes"))
}

/// Parses and checks the header.
pub fn decode_header(bytes: &[u8]) -> Result<Header> {
    if bytes.len() < HEADER_LEN {
        return Err(bad(format!("{} bytes is shorter than the {HEADER_LEN}-byte header", bytes.len())));
    }
    if bytes[..8] != MAGIC {
        return Err(bad("bad magic; not an mswave snapshot"));
    }
    let version = u32_at(bytes, 8);
    if version != VERSION {
        return Err(bad(format!("unsupported format version {version} (expected {VERSION})")));
    }
    let tag = u32_at(bytes, 12);
    if tag != ENDIAN_TAG {
        return Err(bad(format!("endianness tag {tag:#010x} does not match {ENDIAN_TAG:#010x}")));
    }
    let n = u32_at(bytes, 16);
    if u32_at(bytes, 20) != 0 {
        return Err(bad("reserved header field is not zero"));
    }
    let h = Header { version, n, len: f64_at(bytes, 24), t: f64_at(bytes, 32), gamma: f64_at(bytes, 40), epsilon: f64_at(bytes, 48) };
    if !(n >= 8 && n.is_power_of_two() && n <= 1024) {
        return Err(bad(format!("grid size {n} is not a power of two in [8, 1024]")));
    }
    if ![h.len, h.t, h.gamma, h.epsilon].iter().all(|x| x.is_finite()) {
        return Err(bad("non-finite header value"));
    }
    Ok(h)
}

/// Rebuilds a state; the Coulomb gauge is not re-checked here.
pub fn decode(bytes: &[u8]) -> Result<SimState> {
    let h = decode_header(bytes)?;
    let grid = Grid::new(h.n as usize, h.len).map_err(|e| bad(e.to_string()))?;
    let np = grid.points();
    let expected = HEADER_LEN + 8 * 8 * np;
    if bytes.len() != expected {
        return Err(bad(format!("size {} does not match n = {} (expected {expected} bytes)", bytes.len(), h.n)));
    }
    let array = |k: usize| -> Vec<f64> {
        let start = HEADER_LEN + 8 * k * np;
        (0..np).map(|i| f64_at(bytes, start + 8 * i)).collect()
    };
    let (re, im) = (array(0), array(1));
    let u = ScalarField::from_values(&grid, re.iter().zip(&im).map(|(&a, &b)| Complex64::new(a, b)).collect())?;
    let real = |k: usize| ScalarField::from_values(&grid, array(k).into_iter().map(|x| Complex64::new(x, 0.0)).collect());
    let a = VectorField::new([real(2)?, real(3)?, real(4)?])?;
    let at = VectorField::new([real(5)?, real(6)?, real(7)?])?;
    SimState::new_unchecked(h.t, u, a, at, h.gamma, h.epsilon).map_err(|e| bad(e.to_string()))
}

pub fn write(state: &SimState, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(&encode(state))?;
    w.flush()?;
    Ok(())
}

pub fn read(path: &Path) -> Result<SimState> {
    let mut bytes = Vec::new();
    BufReader::new(File::open(path)?).read_to_end(&mut bytes)?;
    decode(&bytes).map_err(|e| match e {
        Error::Snapshot(m) => bad(format!("{}: {m}", path.display())),
        other => other,
    })
}

/// Snapshot file name for a step index.
pub fn file_name(step: usize) -> String {
    format!("snap_{step:08}.bin")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn state() -> SimState {
        let g = Grid::new(8, 6.0).unwrap();
        let u = ScalarField::from_fn(&g, |x| Complex64::new(x[0].sin(), x[1].cos() * 0.3));
        let a = mswave_core::spectral::leray_project(&VectorField::from_real_fn(&g, |x| [x[1].sin(), x[2].cos(), x[0].sin()]));
        SimState::new(0.25, u, a.clone(), a.scale(-0.5), 2.5, 1e-3).unwrap()
    }

    #[test]
    fn round_trip_is_bitwise() {
        let s = state();
        let bytes = encode(&s);
        assert_eq!(bytes.len(), HEADER_LEN + 64 * 512);
        let back = decode(&bytes).unwrap();
        assert_eq!(back.t.to_bits(), s.t.to_bits());
        assert_eq!(back.gamma, s.gamma);
        assert_eq!(back.epsilon, s.epsilon);
        assert_eq!(back.u.values(), s.u.values());
        for c in 0..3 {
            assert_eq!(back.a.comps()[c].values(), s.a.comps()[c].values());
            assert_eq!(back.at.comps()[c].values(), s.at.comps()[c].values());
        }
    }

    #[test]
    fn corrupted_headers_are_rejected() {
        let bytes = encode(&state());
        let mut m = bytes.clone();
        m[0] = b'X';
        assert!(matches!(decode(&m), Err(Error::Snapshot(_))));
        let mut v = bytes.clone();
        v[8] = 2;
        assert!(decode(&v).unwrap_err().to_string().contains("version"));
        let mut e = bytes.clone();
        e[12..16].copy_from_slice(&ENDIAN_TAG.to_be_bytes());
        assert!(decode(&e).unwrap_err().to_string().contains("endianness"));
        let mut n = bytes.clone();
        n[16] = 16;
        assert!(decode(&n).unwrap_err().to_string().contains("size"));
        assert!(decode(&bytes[..HEADER_LEN + 10]).is_err());
        assert!(decode(&bytes[..20]).is_err());
    }
}
