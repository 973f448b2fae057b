//! Binary configuration files.
//!
//! Layout (little-endian): `"PERC1"` | u32 side | u64 seed | f64 p |
//! `ceil(side²/8)` bytes of the row-major bitset, LSB-first within a byte.

use std::io::{Read, Write};

use thiserror::Error;

use super::Configuration;
use crate::lattice::LatticeBox;

pub const MAGIC: &[u8; 5] = b"PERC1";

#[derive(Debug, Error)]
pub enum ConfigIoError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad magic {0:?}, expected \"PERC1\"")]
    BadMagic([u8; 5]),
    #[error("side must be positive")]
    ZeroSide,
    #[error("padding bits beyond site {0} are set")]
    DirtyPadding(usize),
}

pub fn write_configuration<W: Write>(cfg: &Configuration, mut w: W) -> Result<(), ConfigIoError> {
    let n_sites = cfg.domain().len();
    w.write_all(MAGIC)?;
    w.write_all(&cfg.side().to_le_bytes())?;
    w.write_all(&cfg.seed.to_le_bytes())?;
    w.write_all(&cfg.p.to_le_bytes())?;
    let n_bytes = n_sites.div_ceil(8);
    let bytes: Vec<u8> = cfg
        .words()
        .iter()
        .flat_map(|word| word.to_le_bytes())
        .take(n_bytes)
        .collect();
    w.write_all(&bytes)?;
    Ok(())
}

/// Read a configuration of `Λ_side`.
pub fn read_configuration<R: Read>(mut r: R) -> Result<Configuration, ConfigIoError> {
    let mut magic = [0u8; 5];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(ConfigIoError::BadMagic(magic));
    }
    let mut b4 = [0u8; 4];
    let mut b8 = [0u8; 8];
    r.read_exact(&mut b4)?;
    let side = u32::from_le_bytes(b4);
    if side == 0 {
        return Err(ConfigIoError::ZeroSide);
    }
    r.read_exact(&mut b8)?;
    let seed = u64::from_le_bytes(b8);
    r.read_exact(&mut b8)?;
    let p = f64::from_le_bytes(b8);
    let bx = LatticeBox::lambda(side);
    let n_sites = bx.len();
    let mut bytes = vec![0u8; n_sites.div_ceil(8)];
    r.read_exact(&mut bytes)?;
    let mut words = vec![0u64; n_sites.div_ceil(64)];
    for (i, byte) in bytes.iter().enumerate() {
        words[i / 8] |= (*byte as u64) << (8 * (i % 8));
    }
    let tail = n_sites % 64;
    if tail != 0 && words.last().unwrap() >> tail != 0 {
        return Err(ConfigIoError::DirtyPadding(n_sites));
    }
    Ok(Configuration::from_raw(bx, words, seed, p))
}
