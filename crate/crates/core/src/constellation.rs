//! Symbol alphabets and bit maps.
//!
//! Two alphabets matter here: the QPSK set (the only thing a 1-bit DAC can
//! radiate) and the 16QAM set obtained by superposing two QPSK symbols,
//! `s = 2*q1 + q2`. All 16QAM points therefore have components in
//! {±1/√2, ±3/√2} and the constellation has average energy 5; no unit-energy
//! rescaling is applied anywhere, the receive gain absorbs absolute scale.
//!
//! Bit labeling: each 16QAM symbol carries four bits, two on the quadrant
//! QPSK symbol and two on the offset one, each pair sign-mapped per
//! quadrature component with bit 1 ↔ positive.

use num_complex::Complex64;

use crate::{Error, Result};

/// Component magnitude of a QPSK symbol, 1/√2.
pub const QPSK_COMPONENT: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Average energy E|s|² of the superposed 16QAM set (exactly 4 + 1).
pub const QAM16_AVG_ENERGY: f64 = 5.0;

/// Bits carried by one 16QAM symbol.
pub const QAM16_BITS_PER_SYMBOL: usize = 4;

/// Component-wise tolerance when validating externally supplied values.
const SYMBOL_TOL: f64 = 1e-12;

/// One of the four points (±1 ± j)/√2.
///
/// Stored as the two component signs, so comparisons and table indexing are
/// exact; the complex value is materialized on demand.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct QpskSymbol {
    re_positive: bool,
    im_positive: bool,
}

impl QpskSymbol {
    pub fn new(re_positive: bool, im_positive: bool) -> Self {
        Self {
            re_positive,
            im_positive,
        }
    }

    /// 1-bit quantization of an arbitrary complex value: component signs are
    /// kept, magnitudes are discarded. An exactly-zero component resolves to
    /// the positive side, so the map is total and deterministic.
    pub fn quantize(x: Complex64) -> Self {
        Self::new(x.re >= 0.0, x.im >= 0.0)
    }

    /// Validates that `value` is one of the four QPSK points.
    pub fn try_from_value(value: Complex64) -> Result<Self> {
        let sym = Self::new(value.re > 0.0, value.im > 0.0);
        let ideal = sym.value();
        if (value.re - ideal.re).abs() <= SYMBOL_TOL && (value.im - ideal.im).abs() <= SYMBOL_TOL {
            Ok(sym)
        } else {
            Err(Error::InvalidSymbol(value))
        }
    }

    pub fn value(self) -> Complex64 {
        Complex64::new(
            component(self.re_positive),
            component(self.im_positive),
        )
    }

    pub fn re_positive(self) -> bool {
        self.re_positive
    }

    pub fn im_positive(self) -> bool {
        self.im_positive
    }

    /// Two-bit index 2·[Re > 0] + [Im > 0], in 0..4.
    pub fn index(self) -> usize {
        (self.re_positive as usize) << 1 | self.im_positive as usize
    }

    pub fn from_index(index: usize) -> Self {
        debug_assert!(index < 4);
        Self::new(index & 0b10 != 0, index & 0b01 != 0)
    }

    /// All four QPSK points in index order.
    pub fn all() -> impl Iterator<Item = QpskSymbol> {
        (0..4).map(Self::from_index)
    }
}

fn component(positive: bool) -> f64 {
    if positive {
        QPSK_COMPONENT
    } else {
        -QPSK_COMPONENT
    }
}

/// Quantizes every entry to the QPSK alphabet (the per-antenna 1-bit DAC pair).
pub fn quantize_1bit(x: &[Complex64]) -> Vec<QpskSymbol> {
    x.iter().copied().map(QpskSymbol::quantize).collect()
}

/// One point of the 16-point superposition set {2·q1 + q2 : q1, q2 ∈ QPSK}.
///
/// `quadrant` is the coarse QPSK symbol (carries the factor 2), `offset` the
/// fine one; the pair determines the value exactly and bijectively.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Qam16Symbol {
    quadrant: QpskSymbol,
    offset: QpskSymbol,
}

impl Qam16Symbol {
    pub fn new(quadrant: QpskSymbol, offset: QpskSymbol) -> Self {
        Self { quadrant, offset }
    }

    /// Validates that `value` lies on the 16QAM grid and splits it.
    pub fn try_from_value(value: Complex64) -> Result<Self> {
        let quadrant = QpskSymbol::new(value.re > 0.0, value.im > 0.0);
        let residual = value - quadrant.value() * 2.0;
        let offset = QpskSymbol::new(residual.re > 0.0, residual.im > 0.0);
        let sym = Self::new(quadrant, offset);
        let ideal = sym.value();
        if (value.re - ideal.re).abs() <= SYMBOL_TOL && (value.im - ideal.im).abs() <= SYMBOL_TOL {
            Ok(sym)
        } else {
            Err(Error::InvalidSymbol(value))
        }
    }

    pub fn value(self) -> Complex64 {
        self.quadrant.value() * 2.0 + self.offset.value()
    }

    pub fn quadrant(self) -> QpskSymbol {
        self.quadrant
    }

    pub fn offset(self) -> QpskSymbol {
        self.offset
    }

    /// All 16 points, quadrant-major in index order.
    pub fn all() -> impl Iterator<Item = Qam16Symbol> {
        (0..16).map(|i| Self::new(QpskSymbol::from_index(i >> 2), QpskSymbol::from_index(i & 3)))
    }
}

/// Splits a 16QAM vector into its quadrant and offset QPSK streams, so that
/// `2·quadrant + offset` reconstructs the input entrywise.
pub fn split_qam16(s: &[Qam16Symbol]) -> (Vec<QpskSymbol>, Vec<QpskSymbol>) {
    let quadrants = s.iter().map(|sym| sym.quadrant()).collect();
    let offsets = s.iter().map(|sym| sym.offset()).collect();
    (quadrants, offsets)
}

/// Maps bits to 16QAM symbols, four bits per symbol: (b1, b2) sign-label the
/// quadrant's real and imaginary parts, (b3, b4) the offset's.
pub fn bits_to_symbols(bits: &[bool]) -> Result<Vec<Qam16Symbol>> {
    if bits.len() % QAM16_BITS_PER_SYMBOL != 0 {
        return Err(Error::BadBitCount(bits.len(), QAM16_BITS_PER_SYMBOL));
    }
    Ok(bits
        .chunks_exact(QAM16_BITS_PER_SYMBOL)
        .map(|b| {
            Qam16Symbol::new(
                QpskSymbol::new(b[0], b[1]),
                QpskSymbol::new(b[2], b[3]),
            )
        })
        .collect())
}

/// Inverse of [`bits_to_symbols`].
pub fn symbols_to_bits(symbols: &[Qam16Symbol]) -> Vec<bool> {
    let mut bits = Vec::with_capacity(symbols.len() * QAM16_BITS_PER_SYMBOL);
    for sym in symbols {
        bits.push(sym.quadrant().re_positive());
        bits.push(sym.quadrant().im_positive());
        bits.push(sym.offset().re_positive());
        bits.push(sym.offset().im_positive());
    }
    bits
}
