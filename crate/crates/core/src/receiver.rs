//! Blind per-user receive scaling, hard detection and error counting.
//!
//! Each user scales its samples with one real gain
//!
//! ```text
//! g = (E|Re s| + E|Im s|) / (mean|Re y| + mean|Im y|)
//! ```
//!
//! whose numerator is known analytically from the transmit constellation
//! (2√2 for the superposed 16QAM set), so no noise statistics and no channel
//! knowledge are needed. Detection is per-axis threshold slicing at
//! {−√2, 0, √2}, equivalent to nearest-neighbor over the 16 points.

use num_complex::Complex64;

use crate::constellation::{symbols_to_bits, Qam16Symbol, QpskSymbol, QAM16_BITS_PER_SYMBOL};
use crate::{Error, Result};

/// E|Re s| + E|Im s| of the superposed 16QAM set: 2·((1/√2 + 3/√2)/2) = 2√2.
pub const QAM16_ABS_COMPONENT_SUM: f64 = 2.0 * std::f64::consts::SQRT_2;

/// Axis decision thresholds sit at ±√2 (and zero).
const OUTER_THRESHOLD: f64 = std::f64::consts::SQRT_2;

/// Per-user receive gains for one coherence slot.
#[derive(Debug, Clone, PartialEq)]
pub struct ReceiveFilter {
    gains: Vec<f64>,
}

impl ReceiveFilter {
    /// Estimates one gain per user from that user's received samples. With
    /// `training_prefix = Some(t)` only the first t samples enter the
    /// estimate; default is the whole block.
    pub fn estimate(
        samples_per_user: &[Vec<Complex64>],
        training_prefix: Option<usize>,
    ) -> Result<Self> {
        let gains = samples_per_user
            .iter()
            .map(|samples| {
                let used = match training_prefix {
                    Some(t) => &samples[..t.min(samples.len())],
                    None => samples.as_slice(),
                };
                estimate_gain(used)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { gains })
    }

    pub fn gains(&self) -> &[f64] {
        &self.gains
    }

    pub fn gain(&self, user: usize) -> f64 {
        self.gains[user]
    }
}

/// Blind gain estimate for one user.
pub fn estimate_gain(samples: &[Complex64]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::DegenerateSamples("no samples"));
    }
    let sum: f64 = samples.iter().map(|y| y.re.abs() + y.im.abs()).sum();
    let denominator = sum / samples.len() as f64;
    if !(denominator > 0.0 && denominator.is_finite()) {
        return Err(Error::DegenerateSamples("all-zero samples"));
    }
    Ok(QAM16_ABS_COMPONENT_SUM / denominator)
}

/// MMSE-optimal scaling for the SISO AWGN reference chain ŝ = g(s + η),
/// with `snr` linear.
pub fn optimal_siso_gain(snr: f64) -> f64 {
    1.0 / (1.0 + 1.0 / snr)
}

/// Hard decision: nearest 16QAM point. Exact threshold ties resolve toward
/// the larger coordinate, so the map is total and deterministic.
pub fn detect(y: Complex64) -> Qam16Symbol {
    let (re_quadrant, re_offset) = slice_axis(y.re);
    let (im_quadrant, im_offset) = slice_axis(y.im);
    Qam16Symbol::new(
        QpskSymbol::new(re_quadrant, im_quadrant),
        QpskSymbol::new(re_offset, im_offset),
    )
}

/// One axis: returns (quadrant sign positive, offset sign positive). An
/// outer cell's offset aligns with its quadrant (3 = 2 + 1), an inner cell's
/// opposes it (1 = 2 − 1).
fn slice_axis(x: f64) -> (bool, bool) {
    if x >= OUTER_THRESHOLD {
        (true, true)
    } else if x >= 0.0 {
        (true, false)
    } else if x >= -OUTER_THRESHOLD {
        (false, true)
    } else {
        (false, false)
    }
}

/// Error totals of one detection pass.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DetectionReport {
    pub symbol_errors: u64,
    pub bit_errors: u64,
    pub symbols_total: u64,
    pub bits_total: u64,
}

impl DetectionReport {
    pub fn merge(&mut self, other: &DetectionReport) {
        self.symbol_errors += other.symbol_errors;
        self.bit_errors += other.bit_errors;
        self.symbols_total += other.symbols_total;
        self.bits_total += other.bits_total;
    }

    pub fn ber(&self) -> f64 {
        self.bit_errors as f64 / self.bits_total as f64
    }
}

/// Compares sent and detected symbol streams. Symbol errors by constellation
/// point inequality (exact, the symbols are sign tuples), bit errors through
/// the bit map applied to both sides.
pub fn count_errors(sent: &[Qam16Symbol], detected: &[Qam16Symbol]) -> Result<DetectionReport> {
    if sent.len() != detected.len() {
        return Err(Error::LengthMismatch {
            left: sent.len(),
            right: detected.len(),
        });
    }
    let mut report = DetectionReport {
        symbols_total: sent.len() as u64,
        bits_total: (sent.len() * QAM16_BITS_PER_SYMBOL) as u64,
        ..Default::default()
    };
    let sent_bits = symbols_to_bits(sent);
    let detected_bits = symbols_to_bits(detected);
    for (a, b) in sent.iter().zip(detected.iter()) {
        if a != b {
            report.symbol_errors += 1;
        }
    }
    for (a, b) in sent_bits.iter().zip(detected_bits.iter()) {
        if a != b {
            report.bit_errors += 1;
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constellation::QPSK_COMPONENT;
    use crate::rng::rng_from_seed;
    use rand::Rng;

    const S: f64 = QPSK_COMPONENT;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn gain_is_one_on_uniform_constellation_samples() {
        let mut rng = rng_from_seed(42);
        let points: Vec<Qam16Symbol> = Qam16Symbol::all().collect();
        let samples: Vec<Complex64> = (0..1_000_000)
            .map(|_| points[rng.random_range(0..16)].value())
            .collect();
        let g = estimate_gain(&samples).unwrap();
        assert!((g - 1.0).abs() < 0.01, "g = {g}");
        // scale equivariance is exact: g(c·y) = g(y)/c
        let doubled: Vec<Complex64> = samples.iter().map(|y| y * 2.0).collect();
        let g2 = estimate_gain(&doubled).unwrap();
        assert!((g2 - g / 2.0).abs() < 1e-12);
    }

    #[test]
    fn gain_rejects_degenerate_input() {
        assert!(estimate_gain(&[]).is_err());
        assert!(estimate_gain(&[c(0.0, 0.0); 8]).is_err());
    }

    #[test]
    fn filter_estimates_per_user_and_honors_training_prefix() {
        let exact: Vec<Complex64> = Qam16Symbol::all().map(|s| s.value()).collect();
        let half: Vec<Complex64> = exact.iter().map(|y| y * 0.5).collect();
        let filter = ReceiveFilter::estimate(&[exact.clone(), half], None).unwrap();
        assert!((filter.gain(0) - 1.0).abs() < 1e-12);
        assert!((filter.gain(1) - 2.0).abs() < 1e-12);

        // prefix shorter than the block only sees the first samples
        let skewed = vec![c(3.0 * S, 3.0 * S), c(S, S)];
        let full = ReceiveFilter::estimate(&[skewed.clone()], None).unwrap();
        let prefix = ReceiveFilter::estimate(&[skewed], Some(1)).unwrap();
        assert!(prefix.gain(0) < full.gain(0));
    }

    #[test]
    fn detect_recovers_points_under_small_noise() {
        let s = Qam16Symbol::try_from_value(c(3.0 * S, S)).unwrap();
        assert_eq!(detect(s.value() + c(0.01, 0.01)), s);
        for point in Qam16Symbol::all() {
            assert_eq!(detect(point.value()), point);
        }
    }

    #[test]
    fn detect_tie_breaks_toward_larger_coordinate() {
        let origin = detect(c(0.0, 0.0));
        assert_eq!(origin.value(), c(S, S));
        let edge = detect(c(OUTER_THRESHOLD, -OUTER_THRESHOLD));
        assert_eq!(edge.value(), c(3.0 * S, -S));
    }

    #[test]
    fn slicer_agrees_with_nearest_neighbor_search() {
        let mut rng = rng_from_seed(7);
        for _ in 0..10_000 {
            let y = c(rng.random_range(-4.0..4.0), rng.random_range(-4.0..4.0));
            let sliced = detect(y);
            let nearest = Qam16Symbol::all()
                .min_by(|a, b| {
                    (y - a.value())
                        .norm_sqr()
                        .partial_cmp(&(y - b.value()).norm_sqr())
                        .unwrap()
                })
                .unwrap();
            assert_eq!(
                sliced, nearest,
                "y = {y}: slicer {:?} vs nearest {:?}",
                sliced, nearest
            );
        }
    }

    #[test]
    fn gain_and_slicer_commute() {
        // detect(g·y) equals slicing y against thresholds divided by g
        let mut rng = rng_from_seed(8);
        for _ in 0..1000 {
            let y = c(rng.random_range(-6.0..6.0), rng.random_range(-6.0..6.0));
            let g = rng.random_range(0.1..3.0);
            let scaled_threshold_slice = |x: f64| -> (bool, bool) {
                let t = OUTER_THRESHOLD / g;
                if x >= t {
                    (true, true)
                } else if x >= 0.0 {
                    (true, false)
                } else if x >= -t {
                    (false, true)
                } else {
                    (false, false)
                }
            };
            let (rq, ro) = scaled_threshold_slice(y.re);
            let (iq, io) = scaled_threshold_slice(y.im);
            let expected =
                Qam16Symbol::new(QpskSymbol::new(rq, iq), QpskSymbol::new(ro, io));
            assert_eq!(detect(y * g), expected);
        }
    }

    #[test]
    fn count_errors_on_identical_streams_is_zero() {
        let sent: Vec<Qam16Symbol> = Qam16Symbol::all().collect();
        let report = count_errors(&sent, &sent).unwrap();
        assert_eq!(report.symbol_errors, 0);
        assert_eq!(report.bit_errors, 0);
        assert_eq!(report.symbols_total, 16);
        assert_eq!(report.bits_total, 64);
    }

    #[test]
    fn offset_only_error_costs_one_bit() {
        let sent = Qam16Symbol::new(QpskSymbol::new(true, true), QpskSymbol::new(true, true));
        let detected =
            Qam16Symbol::new(QpskSymbol::new(true, true), QpskSymbol::new(false, true));
        let report = count_errors(&[sent], &[detected]).unwrap();
        assert_eq!(report.symbol_errors, 1);
        assert_eq!(report.bit_errors, 1);
    }

    #[test]
    fn antipodal_error_costs_four_bits() {
        let sent = Qam16Symbol::new(QpskSymbol::new(true, true), QpskSymbol::new(true, true));
        let detected =
            Qam16Symbol::new(QpskSymbol::new(false, false), QpskSymbol::new(false, false));
        let report = count_errors(&[sent], &[detected]).unwrap();
        assert_eq!(report.symbol_errors, 1);
        assert_eq!(report.bit_errors, 4);
    }

    #[test]
    fn count_errors_rejects_mismatched_lengths() {
        let sent: Vec<Qam16Symbol> = Qam16Symbol::all().collect();
        assert!(count_errors(&sent, &sent[..4]).is_err());
    }

    #[test]
    fn bit_errors_bounded_by_four_per_symbol_error() {
        let mut rng = rng_from_seed(9);
        let all: Vec<Qam16Symbol> = Qam16Symbol::all().collect();
        let sent: Vec<Qam16Symbol> = (0..500).map(|_| all[rng.random_range(0..16)]).collect();
        let detected: Vec<Qam16Symbol> = (0..500).map(|_| all[rng.random_range(0..16)]).collect();
        let report = count_errors(&sent, &detected).unwrap();
        assert!(report.bit_errors <= 4 * report.symbol_errors);
        assert_eq!(report.bits_total, 4 * report.symbols_total);
    }
}
