//! Link-level simulator for a 1-bit quantized massive MU-MISO downlink
//! carrying 16QAM symbols.
//!
//! The transmitter maps each 16QAM input onto two QPSK streams, precodes both
//! with a per-channel minimum-BER look-up table and superposes them over the
//! air through a 2/3–1/3 antenna split ([`lut`]). A quantized Wiener filter
//! baseline with a post-quantization analog power stage lives in [`qwf`].
//! Receivers scale blindly with a per-user gain estimated from received
//! samples only ([`receiver`]). [`sim`] runs seeded Monte-Carlo BER sweeps
//! over both schemes.

pub mod channel;
pub mod constellation;
pub mod lut;
pub mod mber;
pub mod qwf;
pub mod receiver;
pub mod rng;
pub mod sim;

use num_complex::Complex64;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A complex value that is not a constellation point where one was required.
    #[error("value {0} is not a valid constellation point")]
    InvalidSymbol(Complex64),
    /// Bit-stream length not divisible by the symbol width.
    #[error("bit count {0} is not a multiple of {1}")]
    BadBitCount(usize, usize),
    /// LUT precoding is table-driven; the table has 4^M entries.
    #[error("{m} users would need a 4^{m}-entry LUT; the supported maximum is {max} users")]
    TooManyUsers { m: usize, max: usize },
    /// Receive samples unusable for blind gain estimation.
    #[error("degenerate receive samples: {0}")]
    DegenerateSamples(&'static str),
    /// Paired sequences of different lengths.
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    /// Linear-system solve failed.
    #[error("singular system matrix: {0}")]
    SingularMatrix(String),
    /// Rejected configuration.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    /// Malformed LUT dump.
    #[error("LUT file format: {0}")]
    LutFormat(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
