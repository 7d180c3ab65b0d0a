//! Channel realization and its column partition.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::{Error, Result};

/// Default fraction of antennas assigned to the quadrant stream.
pub const DEFAULT_SPLIT_RATIO: f64 = 2.0 / 3.0;

/// One M×N downlink channel matrix together with its column partition into
/// the quadrant-stream block (first `n_block1` columns) and the offset-stream
/// block (the rest).
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    matrix: DMatrix<Complex64>,
    n_block1: usize,
}

impl ChannelRealization {
    /// Wraps a matrix with the default 2/3–1/3 antenna split.
    pub fn new(matrix: DMatrix<Complex64>) -> Result<Self> {
        Self::with_split_ratio(matrix, DEFAULT_SPLIT_RATIO)
    }

    /// Wraps a matrix, assigning `round(ratio·N)` antennas (clamped so both
    /// blocks are nonempty) to the quadrant stream.
    pub fn with_split_ratio(matrix: DMatrix<Complex64>, ratio: f64) -> Result<Self> {
        let (m, n) = matrix.shape();
        if m == 0 || n < 2 {
            return Err(Error::InvalidConfig(format!(
                "channel must have at least 1 user and 2 antennas, got {m}x{n}"
            )));
        }
        if !(ratio > 0.0 && ratio < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "split ratio must lie in (0, 1), got {ratio}"
            )));
        }
        let n_block1 = ((ratio * n as f64).round() as usize).clamp(1, n - 1);
        Ok(Self { matrix, n_block1 })
    }

    pub fn n_users(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn n_antennas(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn n_block1(&self) -> usize {
        self.n_block1
    }

    pub fn n_block2(&self) -> usize {
        self.n_antennas() - self.n_block1
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    /// Columns serving the quadrant stream (M × n_block1).
    pub fn block1(&self) -> DMatrix<Complex64> {
        self.matrix.columns(0, self.n_block1).into_owned()
    }

    /// Columns serving the offset stream (M × n_block2).
    pub fn block2(&self) -> DMatrix<Complex64> {
        self.matrix
            .columns(self.n_block1, self.n_block2())
            .into_owned()
    }
}
