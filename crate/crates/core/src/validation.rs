//! Empirical checks of the distributional laws behind the rate analysis.
//!
//! Each sample is an independent (channel, codebook) pair quantized with
//! [`quantize_effective`]. The collected quantities are compared against:
//!
//! * the max of `2^B` iid Beta(N, M-N) variables (`cos_sq`),
//! * isotropy on the unit sphere of `C^M` (effective channel direction),
//! * Gamma(M-N+1, 1) (`||h_eff||^2`),
//! * the extreme-value approximation of `E[sin^2]`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::quant_error_approx;
use crate::error::{Error, Result};
use crate::linalg::CVector;
use crate::quantize::{generate_codebook, quantize_effective};
use crate::rng::{Purpose, RngStream};
use crate::stats::{
    gamma_cdf, isotropy_report, ks_test, max_beta_cdf, Check, FitReport, IsotropyThresholds,
};

pub const KS_THRESHOLD: f64 = 0.02;
pub const MEAN_REL_TOL: f64 = 0.01;
pub const QUANT_ERROR_REL_TOL: f64 = 0.15;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationConfig {
    pub m: usize,
    pub n: usize,
    pub bits: u32,
    pub samples: usize,
    pub seed: u64,
    /// Added to the Gamma shape of the norm check. Nonzero values exist only
    /// to confirm that the check can fail.
    #[serde(default)]
    pub shape_offset: i32,
}

impl Default for ValidationConfig {
    fn default() -> Self {
        Self {
            m: 4,
            n: 2,
            bits: 8,
            samples: 100_000,
            seed: 1,
            shape_offset: 0,
        }
    }
}

/// Per-sample quantities of effective-channel quantization.
#[derive(Debug, Clone, Default)]
pub struct EffectiveSamples {
    pub cos_sq: Vec<f64>,
    pub eff_norm_sq: Vec<f64>,
    /// `h_eff / ||h_eff||`.
    pub directions: Vec<CVector>,
}

/// Quantizes `samples` independent M x N channels, each with its own
/// `bits`-bit codebook. Sample `t` uses the streams `(seed, t, 0, *)`.
pub fn collect_effective_samples(
    m: usize,
    n: usize,
    bits: u32,
    samples: usize,
    seed: u64,
) -> Result<EffectiveSamples> {
    let results = (0..samples as u64)
        .into_par_iter()
        .map(|t| {
            let h = RngStream::new(seed, t, 0, Purpose::Channel)
                .sampler()
                .gaussian_matrix(m, n);
            let cb = generate_codebook(&RngStream::new(seed, t, 0, Purpose::Codebook), bits, m)?;
            quantize_effective(&h, &cb)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = EffectiveSamples::default();
    for r in results {
        out.cos_sq.push(r.cos_sq);
        out.eff_norm_sq.push(r.eff_norm_sq);
        out.directions.push(r.s_proj);
    }
    Ok(out)
}

fn check_dims(m: usize, n: usize) -> Result<()> {
    if m < 2 || n == 0 || n > m {
        return Err(Error::Domain(format!(
            "need 1 <= N <= M, M >= 2; got M = {m}, N = {n}"
        )));
    }
    Ok(())
}

/// `cos_sq` against the max of `2^bits` iid Beta(N, M-N). For N = M the
/// error is identically zero and the check is on `max sin_sq` instead.
pub fn quantization_law_report(
    s: &EffectiveSamples,
    m: usize,
    n: usize,
    bits: u32,
) -> Result<FitReport> {
    check_dims(m, n)?;
    if n == m {
        let worst = s.cos_sq.iter().map(|c| 1.0 - c).fold(0.0, f64::max);
        let mut r = FitReport::from_samples(&s.cos_sq)?
            .named("quantization_error_law", "cos_sq = 1 (N = M)");
        r.push_check(Check::at_most("max_sin_sq", worst, 1e-10));
        return Ok(r);
    }
    let (a, b) = (n as u32, (m - n) as u32);
    let count = 1u64 << bits;
    let cdf = |x: f64| max_beta_cdf(x.clamp(0.0, 1.0), a, b, count).unwrap_or(f64::NAN);
    Ok(ks_test(&s.cos_sq, cdf, KS_THRESHOLD)?.named(
        "quantization_error_law",
        format!("max of {count} iid Beta({a}, {b})"),
    ))
}

/// Direction of the effective channel against isotropy on `C^M`. The probe
/// comes from the stream `(seed, 0, 0, Probe)`.
pub fn isotropy_law_report(s: &EffectiveSamples, m: usize, seed: u64) -> Result<FitReport> {
    let probe = RngStream::new(seed, 0, 0, Purpose::Probe)
        .sampler()
        .isotropic_unit(m);
    Ok(
        isotropy_report(&s.directions, &probe, IsotropyThresholds::default())?.named(
            "effective_direction_isotropy",
            format!("isotropic on the unit sphere of C^{m}"),
        ),
    )
}

/// `||h_eff||^2` against Gamma(M-N+1+shape_offset, 1), plus a mean check.
pub fn norm_law_report(
    s: &EffectiveSamples,
    m: usize,
    n: usize,
    shape_offset: i32,
) -> Result<FitReport> {
    check_dims(m, n)?;
    let shape = (m - n + 1) as i64 + i64::from(shape_offset);
    if shape < 1 {
        return Err(Error::Domain(format!("gamma shape {shape} < 1")));
    }
    let shape = shape as u32;
    let cdf = |x: f64| gamma_cdf(x, shape).unwrap_or(f64::NAN);
    Ok(ks_test(&s.eff_norm_sq, cdf, KS_THRESHOLD)?
        .named("effective_norm_law", format!("Gamma({shape}, 1)"))
        .with_mean_check(f64::from(shape), MEAN_REL_TOL))
}

/// Sample mean of `sin_sq` against the extreme-value approximation. Not
/// defined for N = M.
pub fn quant_error_mean_report(
    s: &EffectiveSamples,
    m: usize,
    n: usize,
    bits: u32,
) -> Result<FitReport> {
    let approx = quant_error_approx(f64::from(bits), m, n)?;
    let sin_sq: Vec<f64> = s.cos_sq.iter().map(|c| 1.0 - c).collect();
    Ok(FitReport::from_samples(&sin_sq)?
        .named(
            "quant_error_approximation",
            format!(
                "2^(-{bits}/{d}) C({m1}, {n1})^(-1/{d})",
                d = m - n,
                m1 = m - 1,
                n1 = n - 1
            ),
        )
        .with_mean_check(approx, QUANT_ERROR_REL_TOL))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationSummary {
    pub config: ValidationConfig,
    pub reports: Vec<FitReport>,
    pub pass: bool,
}

/// Runs every suite on one shared sample set.
pub fn run_validation(cfg: &ValidationConfig) -> Result<ValidationSummary> {
    check_dims(cfg.m, cfg.n)?;
    let s = collect_effective_samples(cfg.m, cfg.n, cfg.bits, cfg.samples, cfg.seed)?;
    let mut reports = vec![
        quantization_law_report(&s, cfg.m, cfg.n, cfg.bits)?,
        isotropy_law_report(&s, cfg.m, cfg.seed)?,
        norm_law_report(&s, cfg.m, cfg.n, cfg.shape_offset)?,
    ];
    if cfg.n < cfg.m {
        reports.push(quant_error_mean_report(&s, cfg.m, cfg.n, cfg.bits)?);
    }
    let pass = reports.iter().all(|r| r.pass);
    Ok(ValidationSummary {
        config: cfg.clone(),
        reports,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(m: usize, n: usize, bits: u32, shape_offset: i32) -> ValidationConfig {
        ValidationConfig {
            m,
            n,
            bits,
            samples: 20_000,
            seed: 3,
            shape_offset,
        }
    }

    #[test]
    fn suites_pass_on_small_sample() {
        let s = run_validation(&small(4, 2, 6, 0)).unwrap();
        assert_eq!(s.reports.len(), 4);
        // 2e4 samples: isotropy covariance bound 0.01 is ~2.7 sigma, KS 0.02 ~2.8 sigma
        assert!(s.pass, "{:#?}", s.reports);
    }

    #[test]
    fn wrong_shape_fails() {
        let s = run_validation(&small(4, 2, 6, 1)).unwrap();
        assert!(!s.pass);
        let norm = s
            .reports
            .iter()
            .find(|r| r.name == "effective_norm_law")
            .unwrap();
        assert!(!norm.pass);
        assert_eq!(norm.reference, "Gamma(4, 1)");
    }

    #[test]
    fn single_antenna_uses_full_gamma() {
        let s = run_validation(&small(4, 1, 6, 0)).unwrap();
        let norm = s
            .reports
            .iter()
            .find(|r| r.name == "effective_norm_law")
            .unwrap();
        assert_eq!(norm.reference, "Gamma(4, 1)");
        assert!(norm.pass, "{norm:?}");
    }

    #[test]
    fn square_receivers() {
        // Exp(1) has the widest relative spread; 2e4 samples put the 1% mean check at 1.4 sigma
        let s = run_validation(&ValidationConfig {
            samples: 100_000,
            ..small(3, 3, 4, 0)
        })
        .unwrap();
        assert_eq!(s.reports.len(), 3);
        let norm = s
            .reports
            .iter()
            .find(|r| r.name == "effective_norm_law")
            .unwrap();
        assert_eq!(norm.reference, "Gamma(1, 1)");
        assert!(s.pass, "{:#?}", s.reports);
    }

    #[test]
    fn deterministic() {
        let a = collect_effective_samples(4, 2, 4, 500, 9).unwrap();
        let b = collect_effective_samples(4, 2, 4, 500, 9).unwrap();
        assert_eq!(a.cos_sq, b.cos_sq);
        assert_eq!(a.directions, b.directions);
    }
}
