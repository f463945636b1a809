//! Closed-form rate-gap and feedback-scaling expressions.
//!
//! With N receive antennas and effective-channel quantization, the high-SNR
//! per-user gap to perfect-CSIT zero forcing splits into an SNR-independent
//! loss from the smaller effective channel norm and a quantization term:
//!
//! ```text
//!   gap <= delta_a + log2(1 + P (M-N+1)/M E[sin^2])
//!   delta_a = log2(e) sum_{l=M-N+1}^{M-1} 1/l
//!   E[sin^2] ~ 2^(-B/(M-N)) C(M-1, N-1)^(-1/(M-N))
//! ```
//!
//! Setting the gap to a target `r` and solving for B gives the bit-scaling
//! law implemented by [`bits_required`]. Its dB form uses the 3 dB per
//! doubling convention (`P_dB / 3` in place of `log2 P`), so the inversion is
//! exact at [`doubling_power`] rather than at `10^(P_dB/10)`.

use std::f64::consts::LOG2_E;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Inputs of the bit-scaling law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingInputs {
    pub m: usize,
    pub n: usize,
    pub snr_db: f64,
    /// Target per-user rate gap in bps/Hz.
    pub rate_gap: f64,
}

fn check_antennas(m: usize, n: usize) -> Result<()> {
    if m < 2 || n == 0 || n >= m {
        return Err(Error::Domain(format!(
            "need M >= 2 and 1 <= N <= M-1, got M = {m}, N = {n}"
        )));
    }
    Ok(())
}

/// `sum_{l=M-N+1}^{M-1} 1/l`.
fn harmonic_tail(m: usize, n: usize) -> f64 {
    (m - n + 1..m).map(|l| 1.0 / l as f64).sum()
}

/// `log2 C(n, k)`, summed in log space so large M cannot overflow.
pub fn log2_binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    (0..k)
        .map(|i| ((n - i) as f64).log2() - ((i + 1) as f64).log2())
        .sum()
}

/// Linear power at which `log2 P = P_dB / 3`.
pub fn doubling_power(snr_db: f64) -> f64 {
    (snr_db / 3.0).exp2()
}

/// `10^(P_dB / 10)`.
pub fn db_to_linear(snr_db: f64) -> f64 {
    10f64.powf(snr_db / 10.0)
}

/// Rate loss (bits) from the effective channel's reduced degrees of freedom.
pub fn delta_a(m: usize, n: usize) -> Result<f64> {
    check_antennas(m, n)?;
    Ok(LOG2_E * harmonic_tail(m, n))
}

/// Extreme-value approximation of the mean quantization error
/// `E[sin^2]` for `bits` feedback bits (real-valued so that it can be
/// evaluated at the unrounded output of [`bits_required`]).
pub fn quant_error_approx(bits: f64, m: usize, n: usize) -> Result<f64> {
    check_antennas(m, n)?;
    let d = (m - n) as f64;
    Ok((-(bits + log2_binomial(m - 1, n - 1)) / d).exp2())
}

/// Approximate high-SNR per-user rate gap (bps/Hz) at linear power `p`.
pub fn rate_gap_bound(p: f64, bits: f64, m: usize, n: usize) -> Result<f64> {
    if !(p >= 0.0) {
        return Err(Error::Domain(format!("power must be nonnegative, got {p}")));
    }
    let ratio = (m - n + 1) as f64 / m as f64;
    Ok(delta_a(m, n)? + (p * ratio * quant_error_approx(bits, m, n)?).ln_1p() * LOG2_E)
}

/// The constant `c = 2^r e^{-sum 1/l} - 1`; must be positive for the target
/// gap to be reachable.
pub fn scaling_constant(m: usize, n: usize, rate_gap: f64) -> Result<f64> {
    check_antennas(m, n)?;
    Ok(rate_gap.exp2() * (-harmonic_tail(m, n)).exp() - 1.0)
}

/// Feedback bits per user needed to keep the per-user gap at `rate_gap`
/// (real-valued; callers round up).
///
/// For N = 1 and r = 1 this is `(M-1)/3 * P_dB`.
pub fn bits_required(inputs: &ScalingInputs) -> Result<f64> {
    let ScalingInputs {
        m,
        n,
        snr_db,
        rate_gap,
    } = *inputs;
    if !(rate_gap > 0.0) {
        return Err(Error::Domain(format!(
            "rate gap must be positive, got {rate_gap}"
        )));
    }
    let c = scaling_constant(m, n, rate_gap)?;
    if !(c > 0.0) {
        return Err(Error::InfeasibleTarget { r: rate_gap, c });
    }
    let d = (m - n) as f64;
    Ok(d / 3.0 * snr_db
        - d * c.log2()
        - d * (m as f64 / (m - n + 1) as f64).log2()
        - log2_binomial(m - 1, n - 1))
}

/// Rounds a real-valued bit budget up to an integer. Values within `1e-9` of
/// an integer snap to it, so that exact results such as 30 are not pushed to
/// 31 by rounding noise.
pub fn ceil_bits(bits: f64) -> i64 {
    (bits - 1e-9).ceil() as i64
}

/// Approximate feedback saved by N antennas relative to one antenna at the
/// same target gap of 1 bps/Hz.
pub fn feedback_savings(m: usize, n: usize, snr_db: f64) -> Result<f64> {
    check_antennas(m, n)?;
    let k = (n - 1) as f64;
    Ok(k / 3.0 * snr_db + log2_binomial(m - 1, n - 1) - k * LOG2_E)
}

/// Exact difference of the scaling law between one and N antennas.
pub fn feedback_savings_exact(m: usize, n: usize, snr_db: f64, rate_gap: f64) -> Result<f64> {
    let one = bits_required(&ScalingInputs {
        m,
        n: 1,
        snr_db,
        rate_gap,
    })?;
    let many = bits_required(&ScalingInputs {
        m,
        n,
        snr_db,
        rate_gap,
    })?;
    Ok(one - many)
}
