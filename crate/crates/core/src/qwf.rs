//! Quantized Wiener filter baseline.
//!
//! Linear MMSE-derived precoder that models the 1-bit DAC distortion through
//! the Gaussian-input decorrelation factor ρ_q = 1 − 2/π:
//!
//! ```text
//! A     = HᴴH − ρ_q·nondiag(HᴴH) + (M/E_tx)·I_N
//! P     = (1/g)·A⁻¹·Hᴴ
//! g     = √(σ_s²(1−ρ_q)/E_tx) · √(tr(A⁻²·HᴴH))
//! ```
//!
//! The digital output is 1-bit quantized and then passed through a diagonal
//! analog stage D that restores the per-antenna power profile the linear
//! precoder asked for: d_n ∝ √(E|[P·s]_n|²) = σ_s·‖row n of P‖, normalized so
//! Σ d_n² = E_tx. The quantizer output is unit-modulus per antenna, so the
//! radiated power is exactly E_tx for every symbol.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::channel::ChannelRealization;
use crate::constellation::{quantize_1bit, Qam16Symbol};
use crate::{Error, Result};

/// 1-bit quantizer decorrelation factor for Gaussian inputs, 1 − 2/π.
pub const RHO_Q: f64 = 1.0 - std::f64::consts::FRAC_2_PI;

/// Built QWF stage for one channel realization.
#[derive(Debug, Clone)]
pub struct QwfPrecoder {
    digital: DMatrix<Complex64>,
    g_qwf: f64,
    analog: DVector<f64>,
    rho_q: f64,
    e_tx: f64,
}

impl QwfPrecoder {
    /// N×M digital precoding matrix P.
    pub fn digital(&self) -> &DMatrix<Complex64> {
        &self.digital
    }

    pub fn g_qwf(&self) -> f64 {
        self.g_qwf
    }

    /// Diagonal analog per-antenna gains d_n.
    pub fn analog(&self) -> &DVector<f64> {
        &self.analog
    }

    pub fn rho_q(&self) -> f64 {
        self.rho_q
    }

    pub fn e_tx(&self) -> f64 {
        self.e_tx
    }

    /// Full transmit chain for one symbol vector: D·Q(P·s).
    pub fn transmit(&self, s: &[Qam16Symbol]) -> Result<Vec<Complex64>> {
        if s.len() != self.digital.ncols() {
            return Err(Error::LengthMismatch {
                left: s.len(),
                right: self.digital.ncols(),
            });
        }
        let sv = DVector::from_iterator(s.len(), s.iter().map(|q| q.value()));
        let pre = &self.digital * sv;
        let quantized = quantize_1bit(pre.as_slice());
        Ok(quantized
            .iter()
            .zip(self.analog.iter())
            .map(|(q, &d)| q.value() * d)
            .collect())
    }
}

/// Builds the QWF precoder for one channel. `e_tx` is linear transmit power,
/// `sigma_s2` the input constellation's average symbol energy.
pub fn build_qwf(channel: &ChannelRealization, e_tx: f64, sigma_s2: f64) -> Result<QwfPrecoder> {
    build_qwf_with_rho(channel, e_tx, sigma_s2, RHO_Q)
}

/// Same as [`build_qwf`] with an explicit decorrelation factor; ρ = 0 reduces
/// to the unquantized regularized Wiener filter.
pub fn build_qwf_with_rho(
    channel: &ChannelRealization,
    e_tx: f64,
    sigma_s2: f64,
    rho: f64,
) -> Result<QwfPrecoder> {
    if e_tx <= 0.0 || sigma_s2 <= 0.0 {
        return Err(Error::InvalidConfig(format!(
            "e_tx and sigma_s2 must be positive, got {e_tx}, {sigma_s2}"
        )));
    }
    let h = channel.matrix();
    let (m, n) = h.shape();
    let h_adj = h.adjoint();
    let gram = &h_adj * h; // HᴴH, N×N

    // A = HᴴH − ρ·nondiag(HᴴH) + (M/E_tx)·I = (1−ρ)·HᴴH + ρ·diag(HᴴH) + (M/E_tx)·I
    let mut a = &gram * Complex64::from(1.0 - rho);
    for i in 0..n {
        a[(i, i)] += gram[(i, i)] * Complex64::from(rho) + Complex64::from(m as f64 / e_tx);
    }

    let lu = a.lu();
    let solve_or_singular = |rhs: &DMatrix<Complex64>, lu: &nalgebra::LU<Complex64, nalgebra::Dyn, nalgebra::Dyn>| {
        lu.solve(rhs).ok_or_else(|| {
            Error::SingularMatrix(format!(
                "{n}x{n} QWF system, |det| = {:.3e}",
                lu.determinant().norm()
            ))
        })
    };
    let x = solve_or_singular(&h_adj, &lu)?; // A⁻¹Hᴴ, N×M
    let y = solve_or_singular(&x, &lu)?; // A⁻²Hᴴ, N×M

    // tr(A⁻²·HᴴH) = tr(H·A⁻²·Hᴴ); Hermitian positive, so real
    let trace = (h * &y).trace().re.max(0.0);
    let g_qwf = (sigma_s2 * (1.0 - rho) / e_tx).sqrt() * trace.sqrt();
    if !(g_qwf.is_finite() && g_qwf > 0.0) {
        return Err(Error::SingularMatrix(format!(
            "degenerate QWF gain g = {g_qwf}"
        )));
    }
    let digital = x * Complex64::from(1.0 / g_qwf);

    // analog gains d_n ∝ √(E|[P·s]_n|²), scaled so Σ d_n² = e_tx
    let row_power: Vec<f64> = (0..n)
        .map(|i| sigma_s2 * digital.row(i).iter().map(|z| z.norm_sqr()).sum::<f64>())
        .collect();
    let total: f64 = row_power.iter().sum();
    if !(total.is_finite() && total > 0.0) {
        return Err(Error::SingularMatrix(
            "all-zero digital precoder rows".into(),
        ));
    }
    let scale = (e_tx / total).sqrt();
    let analog = DVector::from_iterator(n, row_power.iter().map(|p| scale * p.sqrt()));

    Ok(QwfPrecoder {
        digital,
        g_qwf,
        analog,
        rho_q: rho,
        e_tx,
    })
}
