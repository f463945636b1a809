//! Limited-feedback MIMO downlink simulation with effective-channel
//! quantization.
//!
//! An M-antenna transmitter serves M users over Rayleigh block fading. Each
//! user has N receive antennas, combines them into a single effective
//! channel chosen to be easy to quantize, and feeds back B bits: the index
//! of a random-vector-quantization (RVQ) codeword. The transmitter zero
//! forces on the fed-back codewords.
//!
//! Modules:
//!
//! * [`linalg`]: small complex vector/matrix kernel.
//! * [`rng`]: reproducible per-(trial, user, purpose) random streams.
//! * [`quantize`]: RVQ codebooks and the single-antenna, antenna-selection
//!   and effective-channel quantizers.
//! * [`precoding`]: zero-forcing beamformers, SINR and sum rate.
//! * [`sim`]: Monte Carlo trials and SNR sweeps.
//! * [`analysis`]: closed-form rate-gap bound and feedback-bit scaling law.
//! * [`stats`]: integer-parameter Beta/Gamma CDFs, KS tests, isotropy checks.
//! * [`validation`]: empirical checks of the quantization-error, isotropy
//!   and effective-norm laws.

pub mod analysis;
pub mod error;
pub mod linalg;
pub mod precoding;
pub mod quantize;
pub mod rng;
pub mod sim;
pub mod stats;
pub mod validation;

pub use num_complex::Complex64;

pub use analysis::{
    bits_required, ceil_bits, db_to_linear, delta_a, feedback_savings, feedback_savings_exact,
    quant_error_approx, rate_gap_bound, ScalingInputs,
};
pub use error::{Error, Result};
pub use linalg::{gram_schmidt, inner, invert_square, normal_solve, CMatrix, CVector};
pub use precoding::{perfect_csit_rate, sinr, sum_rate, zfbf_vectors, BeamformerSet};
pub use quantize::{
    generate_codebook, quantization_error_of, quantize_antenna_selection, quantize_effective,
    quantize_single, Codebook, QuantizationResult,
};
pub use rng::{sample_gaussian, sample_isotropic_unit, Purpose, RngStream};
pub use sim::{
    run_experiment, run_trial, BitsRule, CodebookPolicy, ExperimentConfig, ExperimentResult,
    GridPoint, TrialRecord,
};
pub use stats::FitReport;
