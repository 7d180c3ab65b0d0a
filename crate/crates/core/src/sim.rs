//! Seeded Monte-Carlo BER experiments over the downlink chain.
//!
//! A sweep runs one point per transmit-power value; a point runs
//! `n_channels` independent coherence slots; a slot draws a Gaussian channel,
//! builds the scheme's precoder, pushes `n_symbols` random 16QAM vectors
//! through `y = √(E_tx/N)·H·x_Q + η` (equal allocation, MBER-sup) or
//! `y = H·D·x_Q + η` (QWF), estimates the blind receive gains from the whole
//! block and counts bit errors against the sent stream.
//!
//! Every random stream is derived from (seed, sweep point, channel index,
//! role), so slots may be executed on any number of workers in any order and
//! the merged result is still bit-identical.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::channel::{ChannelRealization, DEFAULT_SPLIT_RATIO};
use crate::constellation::{
    bits_to_symbols, Qam16Symbol, QAM16_AVG_ENERGY, QAM16_BITS_PER_SYMBOL,
};
use crate::lut::build_luts;
use crate::mber::SolverConfig;
use crate::qwf::build_qwf;
use crate::receiver::{count_errors, detect, estimate_gain, optimal_siso_gain, DetectionReport, ReceiveFilter};
use crate::rng::{derive_seed, stream_rng, StreamKind};
use crate::{Error, Result};

/// Curve label: which transmit scheme (or SISO reference chain) produced a
/// record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    /// Superposed LUT precoding with equal power allocation.
    MberSup,
    /// Quantized Wiener filter with the analog power stage.
    Qwf,
    /// SISO AWGN chain scaled with the blindly estimated gain.
    SisoGainEst,
    /// SISO AWGN chain scaled with the MMSE-optimal gain.
    SisoGainOpt,
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::MberSup => "mber-sup",
            Scheme::Qwf => "qwf",
            Scheme::SisoGainEst => "siso-g-est",
            Scheme::SisoGainOpt => "siso-g-opt",
        })
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mber-sup" => Ok(Scheme::MberSup),
            "qwf" => Ok(Scheme::Qwf),
            "siso-g-est" => Ok(Scheme::SisoGainEst),
            "siso-g-opt" => Ok(Scheme::SisoGainOpt),
            other => Err(Error::InvalidConfig(format!("unknown scheme '{other}'"))),
        }
    }
}

/// Full description of one downlink experiment.
#[derive(Debug, Clone)]
pub struct SimConfig {
    pub scheme: Scheme,
    pub n_antennas: usize,
    pub n_users: usize,
    /// Transmit powers in dB relative to the unit-variance receiver noise.
    pub etx_grid_db: Vec<f64>,
    pub n_channels: usize,
    /// Symbol vectors per channel realization.
    pub n_symbols: usize,
    pub rng_seed: u64,
    pub solver: SolverConfig,
    /// Fraction of antennas carrying the quadrant stream.
    pub split_ratio: f64,
}

impl SimConfig {
    /// Desk-scale defaults: 10 channels, 10⁴ symbols, E_tx = 5 dB, seed 1.
    pub fn new(scheme: Scheme, n_antennas: usize, n_users: usize) -> Self {
        Self {
            scheme,
            n_antennas,
            n_users,
            etx_grid_db: vec![5.0],
            n_channels: 10,
            n_symbols: 10_000,
            rng_seed: 1,
            solver: SolverConfig::default(),
            split_ratio: DEFAULT_SPLIT_RATIO,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !matches!(self.scheme, Scheme::MberSup | Scheme::Qwf) {
            return Err(Error::InvalidConfig(format!(
                "downlink runs support mber-sup and qwf, not {}",
                self.scheme
            )));
        }
        if self.n_antennas < 3 {
            return Err(Error::InvalidConfig(format!(
                "need at least 3 antennas for the 2/3-1/3 split, got {}",
                self.n_antennas
            )));
        }
        if self.n_users < 1 || self.n_users > self.n_antennas {
            return Err(Error::InvalidConfig(format!(
                "need 1 <= users <= antennas, got {} users, {} antennas",
                self.n_users, self.n_antennas
            )));
        }
        if self.scheme == Scheme::MberSup {
            if self.n_users > crate::lut::MAX_LUT_USERS {
                return Err(Error::TooManyUsers {
                    m: self.n_users,
                    max: crate::lut::MAX_LUT_USERS,
                });
            }
            let n1 = ((self.split_ratio * self.n_antennas as f64).round() as usize)
                .clamp(1, self.n_antennas - 1);
            let n2 = self.n_antennas - n1;
            if n1 < self.n_users || n2 < self.n_users {
                return Err(Error::InvalidConfig(format!(
                    "each antenna block must serve all users: blocks ({n1}, {n2}) vs {} users",
                    self.n_users
                )));
            }
        }
        if self.etx_grid_db.is_empty() {
            return Err(Error::InvalidConfig("empty E_tx grid".into()));
        }
        if self.n_channels == 0 || self.n_symbols == 0 {
            return Err(Error::InvalidConfig(
                "channel and symbol counts must be positive".into(),
            ));
        }
        if !(self.split_ratio > 0.0 && self.split_ratio < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "split ratio must lie in (0, 1), got {}",
                self.split_ratio
            )));
        }
        Ok(())
    }
}

/// One measured operating point.
#[derive(Debug, Clone, PartialEq)]
pub struct BerRecord {
    pub scheme: Scheme,
    pub n_antennas: usize,
    pub n_users: usize,
    pub etx_db: f64,
    pub ber: f64,
    pub bit_errors: u64,
    pub bits_total: u64,
    pub channels_used: usize,
    pub seed: u64,
}

/// One CN(0, 1) sample: independent N(0, 1/2) real and imaginary parts.
pub fn unit_cn_sample<R: Rng>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// i.i.d. CN(0, 1) channel matrix wrapped with the default antenna split.
pub fn draw_channel<R: Rng>(rng: &mut R, n_users: usize, n_antennas: usize) -> Result<ChannelRealization> {
    ChannelRealization::new(gaussian_matrix(rng, n_users, n_antennas))
}

fn gaussian_matrix<R: Rng>(rng: &mut R, m: usize, n: usize) -> DMatrix<Complex64> {
    DMatrix::from_fn(m, n, |_, _| unit_cn_sample(rng))
}

/// Runs one sweep point: `n_channels` seeded coherence slots at the given
/// transmit power, aggregated into one record. Slots run in parallel but are
/// merged in index order; a slot failure aborts the whole point.
pub fn run_point(config: &SimConfig, etx_db: f64) -> Result<BerRecord> {
    config.validate()?;
    let etx = 10f64.powf(etx_db / 10.0);
    let reports: Vec<DetectionReport> = (0..config.n_channels)
        .into_par_iter()
        .map(|index| simulate_channel(config, etx, index))
        .collect::<Result<_>>()?;
    let mut total = DetectionReport::default();
    for report in &reports {
        total.merge(report);
    }
    Ok(BerRecord {
        scheme: config.scheme,
        n_antennas: config.n_antennas,
        n_users: config.n_users,
        etx_db,
        ber: total.bit_errors as f64 / total.bits_total as f64,
        bit_errors: total.bit_errors,
        bits_total: total.bits_total,
        channels_used: config.n_channels,
        seed: config.rng_seed,
    })
}

fn simulate_channel(config: &SimConfig, etx: f64, index: usize) -> Result<DetectionReport> {
    let m = config.n_users;
    let n = config.n_antennas;

    let mut channel_rng = stream_rng(config.rng_seed, index, StreamKind::Channel);
    let channel = ChannelRealization::with_split_ratio(
        gaussian_matrix(&mut channel_rng, m, n),
        config.split_ratio,
    )?;
    let mut bit_rng = stream_rng(config.rng_seed, index, StreamKind::Payload);
    let mut noise_rng = stream_rng(config.rng_seed, index, StreamKind::Noise);

    let (luts, qwf) = match config.scheme {
        Scheme::MberSup => (Some(build_luts(&channel, &config.solver)?), None),
        Scheme::Qwf => (None, Some(build_qwf(&channel, etx, QAM16_AVG_ENERGY)?)),
        _ => unreachable!("validated"),
    };

    let h = channel.matrix();
    let amp = (etx / n as f64).sqrt();
    let mut sent: Vec<Qam16Symbol> = Vec::with_capacity(config.n_symbols * m);
    let mut received: Vec<Vec<Complex64>> =
        vec![Vec::with_capacity(config.n_symbols); m];
    let mut bits = vec![false; m * QAM16_BITS_PER_SYMBOL];

    for _ in 0..config.n_symbols {
        for bit in bits.iter_mut() {
            *bit = bit_rng.random();
        }
        let symbols = bits_to_symbols(&bits)?;
        let x: DVector<Complex64> = match (&luts, &qwf) {
            (Some(pair), _) => {
                let quantized = pair.map_symbols(&symbols)?;
                DVector::from_iterator(n, quantized.iter().map(|q| q.value() * amp))
            }
            (_, Some(precoder)) => DVector::from_vec(precoder.transmit(&symbols)?),
            _ => unreachable!(),
        };
        let r = h * &x;
        for user in 0..m {
            received[user].push(r[user] + unit_cn_sample(&mut noise_rng));
        }
        sent.extend_from_slice(&symbols);
    }

    let filter = ReceiveFilter::estimate(&received, None)?;
    let mut detected = Vec::with_capacity(sent.len());
    for slot in 0..config.n_symbols {
        for user in 0..m {
            detected.push(detect(received[user][slot] * filter.gain(user)));
        }
    }
    count_errors(&sent, &detected)
}

const POINT_TAG: u64 = 0x50;
const GAIN_CHECK_TAG: u64 = 0x47;

/// Runs every grid point of the config, each under its own derived seed.
pub fn run_sweep(config: &SimConfig) -> Result<Vec<BerRecord>> {
    run_sweep_with(config, |_| {})
}

/// [`run_sweep`] with a per-completed-point callback (progress reporting).
pub fn run_sweep_with(
    config: &SimConfig,
    mut on_point: impl FnMut(&BerRecord),
) -> Result<Vec<BerRecord>> {
    config.validate()?;
    let mut records = Vec::with_capacity(config.etx_grid_db.len());
    for (i, &etx_db) in config.etx_grid_db.iter().enumerate() {
        let point = SimConfig {
            rng_seed: derive_seed(config.rng_seed, POINT_TAG, i as u64),
            etx_grid_db: vec![etx_db],
            ..config.clone()
        };
        let record = run_point(&point, etx_db)?;
        on_point(&record);
        records.push(record);
    }
    Ok(records)
}

/// SISO AWGN accuracy check of the blind gain: for each SNR point, the same
/// noisy 16QAM block is detected once with the estimated gain and once with
/// the MMSE-optimal one, giving paired records (estimated first).
pub fn run_gain_check(
    snr_grid_db: &[f64],
    n_symbols: usize,
    seed: u64,
) -> Result<Vec<BerRecord>> {
    if snr_grid_db.is_empty() || n_symbols == 0 {
        return Err(Error::InvalidConfig(
            "gain check needs a nonempty SNR grid and symbols".into(),
        ));
    }
    let mut records = Vec::with_capacity(2 * snr_grid_db.len());
    for (i, &snr_db) in snr_grid_db.iter().enumerate() {
        let point_seed = derive_seed(seed, GAIN_CHECK_TAG, i as u64);
        let mut bit_rng = stream_rng(point_seed, 0, StreamKind::Payload);
        let mut noise_rng = stream_rng(point_seed, 0, StreamKind::Noise);

        let snr = 10f64.powf(snr_db / 10.0);
        let noise_scale = (QAM16_AVG_ENERGY / snr).sqrt();

        let mut bits = vec![false; QAM16_BITS_PER_SYMBOL];
        let mut sent = Vec::with_capacity(n_symbols);
        let mut samples = Vec::with_capacity(n_symbols);
        for _ in 0..n_symbols {
            for bit in bits.iter_mut() {
                *bit = bit_rng.random();
            }
            let symbol = bits_to_symbols(&bits)?[0];
            sent.push(symbol);
            samples.push(symbol.value() + unit_cn_sample(&mut noise_rng) * noise_scale);
        }

        let gains = [
            (Scheme::SisoGainEst, estimate_gain(&samples)?),
            (Scheme::SisoGainOpt, optimal_siso_gain(snr)),
        ];
        for (scheme, gain) in gains {
            let detected: Vec<Qam16Symbol> =
                samples.iter().map(|&y| detect(y * gain)).collect();
            let report = count_errors(&sent, &detected)?;
            records.push(BerRecord {
                scheme,
                n_antennas: 1,
                n_users: 1,
                etx_db: snr_db,
                ber: report.bit_errors as f64 / report.bits_total as f64,
                bit_errors: report.bit_errors,
                bits_total: report.bits_total,
                channels_used: 1,
                seed: point_seed,
            });
        }
    }
    Ok(records)
}
