//! Per-channel look-up tables for the superposed 16QAM scheme.
//!
//! For each coherence slot the relaxed minimum-BER problem is solved once per
//! possible QPSK input vector and per antenna block, giving two tables: a
//! 2N/3-antenna table for the quadrant stream and an N/3-antenna table for
//! the offset stream. Transmission is then a pair of table lookups plus a
//! stack. The amplitude factor 2 on the quadrant stream is realized only by
//! its larger antenna share (coherent gain scales with block size); every
//! antenna radiates the same per-antenna power.
//!
//! A debug dump format is provided (see [`LutPair::write_to`]): magic
//! `OBMLUT01`, then M, N, block1, block2 as little-endian u32, then the
//! quadrant table followed by the offset table. Each table entry is one
//! transmit vector packed at 2 bits per antenna (bit1 = Re sign, bit0 = Im
//! sign, positive = 1), each entry padded to a byte boundary. Achieved
//! objectives are not stored; loaded tables report NaN for them.

use std::io::{Read, Write};

use rayon::prelude::*;

use crate::channel::ChannelRealization;
use crate::constellation::{split_qam16, Qam16Symbol, QpskSymbol};
use crate::mber::{solve, MberProblem, SolverConfig};
use crate::{Error, Result};

/// Largest supported user count; the tables have 4^M entries each.
pub const MAX_LUT_USERS: usize = 8;

const DUMP_MAGIC: &[u8; 8] = b"OBMLUT01";

/// Table index of a QPSK input vector: user m contributes digit
/// `2·[Re > 0] + [Im > 0]` in base 4, user 0 least significant. Bijective on
/// O₂^M ↔ [0, 4^M).
pub fn lut_index(target: &[QpskSymbol]) -> usize {
    target
        .iter()
        .enumerate()
        .map(|(m, q)| q.index() << (2 * m))
        .sum()
}

/// Inverse of [`lut_index`].
pub fn target_from_index(index: usize, n_users: usize) -> Vec<QpskSymbol> {
    (0..n_users)
        .map(|m| QpskSymbol::from_index((index >> (2 * m)) & 3))
        .collect()
}

/// One solved table: a quantized transmit vector (and the objective that
/// produced it) for every possible QPSK input vector.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecoderLut {
    block_size: usize,
    entries: Vec<Vec<QpskSymbol>>,
    objectives: Vec<f64>,
}

impl PrecoderLut {
    pub fn block_size(&self) -> usize {
        self.block_size
    }

    /// Number of entries, 4^M.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entry(&self, index: usize) -> &[QpskSymbol] {
        &self.entries[index]
    }

    /// det(P) achieved by the stored vector; NaN on tables read from a dump.
    pub fn objective(&self, index: usize) -> f64 {
        self.objectives[index]
    }
}

/// The two tables of one coherence slot.
#[derive(Debug, Clone, PartialEq)]
pub struct LutPair {
    n_users: usize,
    n_antennas: usize,
    /// Table for the quadrant stream (first antenna block).
    pub quadrant: PrecoderLut,
    /// Table for the offset stream (second antenna block).
    pub offset: PrecoderLut,
}

/// Solves 2·4^M relaxed problems for this channel and stores the quantized
/// solutions. Entries are solved independently (and in parallel) but stored
/// in index order, so the result is deterministic.
pub fn build_luts(channel: &ChannelRealization, config: &SolverConfig) -> Result<LutPair> {
    let m = channel.n_users();
    if m > MAX_LUT_USERS {
        return Err(Error::TooManyUsers {
            m,
            max: MAX_LUT_USERS,
        });
    }
    let quadrant = build_single_lut(channel.block1(), m, config)?;
    let offset = build_single_lut(channel.block2(), m, config)?;
    Ok(LutPair {
        n_users: m,
        n_antennas: channel.n_antennas(),
        quadrant,
        offset,
    })
}

fn build_single_lut(
    block: nalgebra::DMatrix<num_complex::Complex64>,
    n_users: usize,
    config: &SolverConfig,
) -> Result<PrecoderLut> {
    let block_size = block.ncols();
    let table_len = 4usize.pow(n_users as u32);
    let solved: Vec<(Vec<QpskSymbol>, f64)> = (0..table_len)
        .into_par_iter()
        .map(|index| {
            let target = target_from_index(index, n_users);
            let problem = MberProblem::new(block.clone(), target)?;
            let result = solve(&problem, config);
            Ok((result.x_quantized, result.objective))
        })
        .collect::<Result<_>>()?;
    let (entries, objectives) = solved.into_iter().unzip();
    Ok(PrecoderLut {
        block_size,
        entries,
        objectives,
    })
}

impl LutPair {
    pub fn n_users(&self) -> usize {
        self.n_users
    }

    pub fn n_antennas(&self) -> usize {
        self.n_antennas
    }

    /// Maps one 16QAM input vector to the length-N transmit vector: split
    /// into QPSK streams, look both tables up, stack. The stored vectors are
    /// already quantized, so this is exactly what the DACs radiate.
    pub fn map_symbols(&self, s: &[Qam16Symbol]) -> Result<Vec<QpskSymbol>> {
        if s.len() != self.n_users {
            return Err(Error::LengthMismatch {
                left: s.len(),
                right: self.n_users,
            });
        }
        let (quadrants, offsets) = split_qam16(s);
        let x1 = self.quadrant.entry(lut_index(&quadrants));
        let x2 = self.offset.entry(lut_index(&offsets));
        let mut x = Vec::with_capacity(self.n_antennas);
        x.extend_from_slice(x1);
        x.extend_from_slice(x2);
        Ok(x)
    }

    /// Serializes both tables in the packed debug format.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(DUMP_MAGIC)?;
        for v in [
            self.n_users as u32,
            self.n_antennas as u32,
            self.quadrant.block_size as u32,
            self.offset.block_size as u32,
        ] {
            w.write_all(&v.to_le_bytes())?;
        }
        for lut in [&self.quadrant, &self.offset] {
            for entry in &lut.entries {
                w.write_all(&pack_entry(entry))?;
            }
        }
        Ok(())
    }

    /// Reads a dump produced by [`LutPair::write_to`]. Objectives are not
    /// part of the format and come back as NaN.
    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != DUMP_MAGIC {
            return Err(Error::LutFormat("bad magic".into()));
        }
        let mut word = [0u8; 4];
        let mut next_u32 = |r: &mut R| -> Result<usize> {
            r.read_exact(&mut word)?;
            Ok(u32::from_le_bytes(word) as usize)
        };
        let n_users = next_u32(&mut r)?;
        let n_antennas = next_u32(&mut r)?;
        let block1 = next_u32(&mut r)?;
        let block2 = next_u32(&mut r)?;
        if n_users == 0 || n_users > MAX_LUT_USERS {
            return Err(Error::LutFormat(format!("unsupported user count {n_users}")));
        }
        if block1 + block2 != n_antennas || block1 == 0 || block2 == 0 {
            return Err(Error::LutFormat(format!(
                "inconsistent blocks {block1}+{block2} != {n_antennas}"
            )));
        }
        let read_lut = |r: &mut R, block_size: usize| -> Result<PrecoderLut> {
            let table_len = 4usize.pow(n_users as u32);
            let mut entries = Vec::with_capacity(table_len);
            let mut buf = vec![0u8; entry_bytes(block_size)];
            for _ in 0..table_len {
                r.read_exact(&mut buf)?;
                entries.push(unpack_entry(&buf, block_size));
            }
            Ok(PrecoderLut {
                block_size,
                entries,
                objectives: vec![f64::NAN; table_len],
            })
        };
        let quadrant = read_lut(&mut r, block1)?;
        let offset = read_lut(&mut r, block2)?;
        Ok(Self {
            n_users,
            n_antennas,
            quadrant,
            offset,
        })
    }
}

fn entry_bytes(block_size: usize) -> usize {
    (2 * block_size).div_ceil(8)
}

fn pack_entry(entry: &[QpskSymbol]) -> Vec<u8> {
    let mut bytes = vec![0u8; entry_bytes(entry.len())];
    for (i, q) in entry.iter().enumerate() {
        let bits = (q.index() as u8) & 0b11;
        bytes[i / 4] |= bits << (2 * (i % 4));
    }
    bytes
}

fn unpack_entry(bytes: &[u8], block_size: usize) -> Vec<QpskSymbol> {
    (0..block_size)
        .map(|i| QpskSymbol::from_index(((bytes[i / 4] >> (2 * (i % 4))) & 0b11) as usize))
        .collect()
}
