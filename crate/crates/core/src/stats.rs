//! Reference distributions and goodness-of-fit checks.
//!
//! The laws that describe effective-channel quantization only ever involve
//! integer parameters, so the CDFs below use the finite closed forms
//! (binomial sum for the regularized incomplete beta, Erlang sum for the
//! gamma) instead of general special-function approximations.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Minimum sample size accepted by [`ks_test`].
pub const KS_MIN_SAMPLES: usize = 100;

/// Minimum sample size accepted by [`isotropy_report`].
pub const ISOTROPY_MIN_SAMPLES: usize = 1000;

fn binomial(n: u32, k: u32) -> f64 {
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * f64::from(n - i) / f64::from(i + 1))
}

fn check_beta_args(x: f64, a: u32, b: u32) -> Result<()> {
    if a == 0 || b == 0 {
        return Err(Error::Domain(format!(
            "beta parameters must be >= 1, got ({a}, {b})"
        )));
    }
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain(format!("beta argument {x} outside [0, 1]")));
    }
    Ok(())
}

/// `sum_{j in range} C(n, j) x^j (1-x)^(n-j)` with `n = a + b - 1`.
fn binomial_tail(x: f64, n: u32, range: std::ops::Range<u32>) -> f64 {
    let y = 1.0 - x;
    range
        .map(|j| binomial(n, j) * x.powi(j as i32) * y.powi((n - j) as i32))
        .sum()
}

/// CDF of Beta(a, b) for integer parameters.
pub fn beta_cdf(x: f64, a: u32, b: u32) -> Result<f64> {
    check_beta_args(x, a, b)?;
    let n = a + b - 1;
    Ok(binomial_tail(x, n, a..n + 1).clamp(0.0, 1.0))
}

/// Survival function `1 - beta_cdf`, accurate when the CDF is close to 1.
pub fn beta_sf(x: f64, a: u32, b: u32) -> Result<f64> {
    check_beta_args(x, a, b)?;
    let n = a + b - 1;
    Ok(binomial_tail(x, n, 0..a).clamp(0.0, 1.0))
}

/// CDF of the maximum of `count` iid Beta(a, b) variables.
pub fn max_beta_cdf(x: f64, a: u32, b: u32, count: u64) -> Result<f64> {
    if count == 0 {
        return Err(Error::Domain("count must be >= 1".into()));
    }
    let sf = beta_sf(x, a, b)?;
    // F^n = exp(n ln(1 - sf)); avoids losing sf to rounding when F ~ 1
    Ok((count as f64 * (-sf).ln_1p()).exp())
}

/// CDF of Gamma(shape, 1) for integer shape (the Erlang distribution).
pub fn gamma_cdf(x: f64, shape: u32) -> Result<f64> {
    if shape == 0 {
        return Err(Error::Domain("gamma shape must be >= 1".into()));
    }
    if x.is_nan() {
        return Err(Error::Domain("gamma argument is NaN".into()));
    }
    if x <= 0.0 {
        return Ok(0.0);
    }
    if x.is_infinite() {
        return Ok(1.0);
    }
    let k = f64::from(shape);
    if x < k {
        // lower series e^-x sum_{j>=k} x^j / j!
        let mut term = (k * x.ln() - x - ln_factorial(shape)).exp();
        let mut sum = 0.0;
        let mut j = k;
        while term > 1e-18 * sum || sum == 0.0 {
            sum += term;
            j += 1.0;
            term *= x / j;
            if term == 0.0 {
                break;
            }
        }
        Ok(sum.clamp(0.0, 1.0))
    } else {
        // upper sum e^-x sum_{j<k} x^j / j!
        let mut term = (-x).exp();
        let mut q = 0.0;
        for j in 0..shape {
            q += term;
            term *= x / f64::from(j + 1);
        }
        Ok((1.0 - q).clamp(0.0, 1.0))
    }
}

fn ln_factorial(n: u32) -> f64 {
    (2..=n).map(|k| f64::from(k).ln()).sum()
}

/// One threshold test inside a [`FitReport`]: passes when `value <= limit`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub metric: String,
    pub value: f64,
    pub limit: f64,
    pub pass: bool,
}

impl Check {
    pub fn at_most(metric: impl Into<String>, value: f64, limit: f64) -> Self {
        Self {
            metric: metric.into(),
            value,
            limit,
            pass: value <= limit,
        }
    }
}

/// Outcome of a distributional check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub name: String,
    /// Human-readable description of the reference law.
    pub reference: String,
    pub n_samples: usize,
    pub ks_statistic: Option<f64>,
    pub mean_obs: f64,
    pub mean_ref: Option<f64>,
    pub checks: Vec<Check>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    pub pass: bool,
}

impl FitReport {
    fn new(n_samples: usize, mean_obs: f64) -> Self {
        Self {
            name: String::new(),
            reference: String::new(),
            n_samples,
            ks_statistic: None,
            mean_obs,
            mean_ref: None,
            checks: Vec::new(),
            notes: Vec::new(),
            pass: true,
        }
    }

    /// A report carrying only the sample mean; checks are added by the caller.
    pub fn from_samples(samples: &[f64]) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptySample);
        }
        Ok(Self::new(samples.len(), mean(samples)))
    }

    pub fn named(mut self, name: impl Into<String>, reference: impl Into<String>) -> Self {
        self.name = name.into();
        self.reference = reference.into();
        self
    }

    pub fn push_check(&mut self, check: Check) {
        self.pass &= check.pass;
        self.checks.push(check);
    }

    /// Adds a relative-error check of the sample mean against `mean_ref`.
    pub fn with_mean_check(mut self, mean_ref: f64, rel_tol: f64) -> Self {
        self.mean_ref = Some(mean_ref);
        let rel = ((self.mean_obs - mean_ref) / mean_ref).abs();
        self.push_check(Check::at_most("mean_rel_error", rel, rel_tol));
        self
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.notes.push(note.into());
        self
    }
}

fn mean(samples: &[f64]) -> f64 {
    samples.iter().sum::<f64>() / samples.len() as f64
}

fn sorted(samples: &[f64]) -> Result<Vec<f64>> {
    if samples.iter().any(|x| x.is_nan()) {
        return Err(Error::Domain("NaN in sample".into()));
    }
    let mut v = samples.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// One-sample Kolmogorov-Smirnov statistic `sup |F_n - F|`.
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptySample);
    }
    let xs = sorted(samples)?;
    let n = xs.len() as f64;
    let d = xs.iter().enumerate().fold(0.0f64, |d, (i, &x)| {
        let f = cdf(x);
        let above = (i + 1) as f64 / n - f;
        let below = f - i as f64 / n;
        d.max(above).max(below)
    });
    Ok(d)
}

/// Kolmogorov-Smirnov test of `samples` against `cdf` with a fixed threshold
/// on the statistic.
pub fn ks_test<F: Fn(f64) -> f64>(samples: &[f64], cdf: F, threshold: f64) -> Result<FitReport> {
    if samples.is_empty() {
        return Err(Error::EmptySample);
    }
    if samples.len() < KS_MIN_SAMPLES {
        return Err(Error::Domain(format!(
            "KS test needs at least {KS_MIN_SAMPLES} samples, got {}",
            samples.len()
        )));
    }
    let d = ks_statistic(samples, cdf)?;
    let mut report = FitReport::new(samples.len(), mean(samples));
    report.ks_statistic = Some(d);
    report.push_check(Check::at_most("ks_statistic", d, threshold));
    Ok(report)
}

/// Two-sample Kolmogorov-Smirnov statistic `sup |F_a - F_b|`.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySample);
    }
    let a = sorted(a)?;
    let b = sorted(b)?;
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d = 0.0f64;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}

/// Asymptotic critical value of the two-sample KS statistic at level `alpha`.
pub fn ks_two_sample_critical(na: usize, nb: usize, alpha: f64) -> f64 {
    let c = (-(alpha / 2.0).ln() / 2.0).sqrt();
    let (na, nb) = (na as f64, nb as f64);
    c * ((na + nb) / (na * nb)).sqrt()
}

/// Pass thresholds for [`isotropy_report`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IsotropyThresholds {
    /// Bound on the norm of the sample mean, as a multiple of `1/sqrt(n)`
    /// (the RMS norm of the mean under isotropy).
    pub mean_norm_sigmas: f64,
    /// Bound on the largest entry of `|C - I/M|`.
    pub covariance: f64,
    /// Bound on the probe-projection KS statistic.
    pub ks: f64,
}

impl Default for IsotropyThresholds {
    fn default() -> Self {
        Self {
            mean_norm_sigmas: 5.0,
            covariance: 0.01,
            ks: 0.02,
        }
    }
}

/// Checks that unit vectors look isotropic: sample mean near zero, sample
/// covariance near `I/M`, and `|<probe, v>|^2` distributed as Beta(1, M-1).
pub fn isotropy_report(
    vectors: &[impl AsRef<[Complex64]>],
    probe: &[Complex64],
    thresholds: IsotropyThresholds,
) -> Result<FitReport> {
    let n = vectors.len();
    if n < ISOTROPY_MIN_SAMPLES {
        return Err(Error::Domain(format!(
            "isotropy check needs at least {ISOTROPY_MIN_SAMPLES} vectors, got {n}"
        )));
    }
    let m = probe.len();
    if m < 2 {
        return Err(Error::Domain("isotropy needs dimension >= 2".into()));
    }
    let mut mean_vec = vec![Complex64::new(0.0, 0.0); m];
    let mut cov = vec![Complex64::new(0.0, 0.0); m * m];
    let mut proj = Vec::with_capacity(n);
    for v in vectors {
        let v = v.as_ref();
        if v.len() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                got: v.len(),
            });
        }
        for i in 0..m {
            mean_vec[i] += v[i];
            for j in 0..m {
                cov[i * m + j] += v[i] * v[j].conj();
            }
        }
        proj.push(crate::linalg::inner_unchecked(probe, v).norm_sqr());
    }
    let nf = n as f64;
    let mean_norm = mean_vec
        .iter()
        .map(|z| (z / nf).norm_sqr())
        .sum::<f64>()
        .sqrt();
    let mut cov_dev = 0.0f64;
    for i in 0..m {
        for j in 0..m {
            let target = if i == j { 1.0 / m as f64 } else { 0.0 };
            cov_dev = cov_dev.max((cov[i * m + j] / nf - target).norm());
        }
    }
    let b = (m - 1) as u32;
    let ks = ks_statistic(&proj, |x| {
        beta_cdf(x.clamp(0.0, 1.0), 1, b).unwrap_or(f64::NAN)
    })?;

    let mut report = FitReport::new(n, mean(&proj)).named(
        "isotropy",
        format!("isotropic on the unit sphere of C^{m}; probe projection ~ Beta(1, {b})"),
    );
    report.mean_ref = Some(1.0 / m as f64);
    report.ks_statistic = Some(ks);
    report.push_check(Check::at_most(
        "mean_vector_norm",
        mean_norm,
        thresholds.mean_norm_sigmas / nf.sqrt(),
    ));
    report.push_check(Check::at_most(
        "covariance_deviation",
        cov_dev,
        thresholds.covariance,
    ));
    report.push_check(Check::at_most("ks_statistic", ks, thresholds.ks));
    let probe_txt: Vec<String> = probe
        .iter()
        .map(|z| format!("{:.6}{:+.6}i", z.re, z.im))
        .collect();
    Ok(report.with_note(format!("probe = [{}]", probe_txt.join(", "))))
}

/// Standard normal quantile (Acklam's rational approximation, relative error
/// below 1.2e-9).
pub fn normal_quantile(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969683028665376e1,
        2.209460984245205e2,
        -2.759285104469687e2,
        1.383_577_518_672_69e2,
        -3.066479806614716e1,
        2.506628277459239,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e1,
        1.615858368580409e2,
        -1.556989798598866e2,
        6.680131188771972e1,
        -1.328068155288572e1,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-3,
        -3.223964580411365e-1,
        -2.400758277161838,
        -2.549732539343734,
        4.374664141464968,
        2.938163982698783,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-3,
        3.224671290700398e-1,
        2.445134137142996,
        3.754408661907416,
    ];
    const LOW: f64 = 0.02425;
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    if p < LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        -normal_quantile(1.0 - p)
    }
}

/// Normal-approximation confidence interval; returns `(mean, half_width)`.
pub fn mean_ci(samples: &[f64], level: f64) -> Result<(f64, f64)> {
    if samples.len() < 2 {
        return Err(Error::Domain(format!(
            "confidence interval needs at least 2 samples, got {}",
            samples.len()
        )));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::Domain(format!(
            "confidence level {level} outside (0, 1)"
        )));
    }
    let n = samples.len() as f64;
    let m = mean(samples);
    let var = samples.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
    let z = normal_quantile(0.5 + level / 2.0);
    Ok((m, z * var.sqrt() / n.sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{Purpose, RngStream};

    /// Composite Simpson integration, used as an independent oracle.
    fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for i in 1..n {
            let x = a + i as f64 * h;
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(x);
        }
        s * h / 3.0
    }

    #[test]
    fn beta_closed_forms() {
        for &x in &[0.0f64, 0.1, 0.37, 0.5, 0.9, 1.0] {
            for b in 1..6 {
                let expected = 1.0 - (1.0 - x).powi(b as i32);
                assert!((beta_cdf(x, 1, b).unwrap() - expected).abs() < 1e-14);
            }
        }
        assert!((beta_cdf(0.5, 2, 2).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn beta_matches_quadrature() {
        // Beta(2, 3) density 12 x (1 - x)^2
        let pdf = |t: f64| 12.0 * t * (1.0 - t).powi(2);
        for i in 0..=20 {
            let x = i as f64 / 20.0;
            let q = simpson(pdf, 0.0, x, 2000);
            assert!((beta_cdf(x, 2, 3).unwrap() - q).abs() < 1e-9, "x = {x}");
        }
    }

    #[test]
    fn beta_domain_errors() {
        assert!(beta_cdf(-0.1, 1, 1).is_err());
        assert!(beta_cdf(1.1, 1, 1).is_err());
        assert!(beta_cdf(0.5, 0, 1).is_err());
        assert!(beta_sf(0.5, 1, 0).is_err());
    }

    #[test]
    fn beta_sf_complements_cdf() {
        for &x in &[0.05, 0.3, 0.8] {
            let s = beta_sf(x, 3, 4).unwrap() + beta_cdf(x, 3, 4).unwrap();
            assert!((s - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn max_beta_special_cases() {
        assert!((max_beta_cdf(0.3, 2, 3, 1).unwrap() - beta_cdf(0.3, 2, 3).unwrap()).abs() < 1e-14);
        assert_eq!(max_beta_cdf(1.0, 2, 3, 256).unwrap(), 1.0);
        assert!(max_beta_cdf(0.5, 2, 2, 0).is_err());
    }

    #[test]
    fn max_beta_matches_simulated_pairwise_maxima() {
        // Beta(2, 2) draws via the projection of isotropic vectors onto a
        // 2-dimensional coordinate subspace of C^4.
        let mut s = RngStream::new(5, 0, 0, Purpose::Test).sampler();
        let samples: Vec<f64> = (0..100_000)
            .map(|_| {
                let mut draw = || {
                    let w = s.isotropic_unit(4);
                    w[0].norm_sqr() + w[1].norm_sqr()
                };
                draw().max(draw())
            })
            .collect();
        let r = ks_test(&samples, |x| max_beta_cdf(x, 2, 2, 2).unwrap(), 0.01).unwrap();
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn gamma_closed_forms_and_quadrature() {
        for &x in &[0.0, 0.01, 0.5, 1.0, 3.0, 10.0] {
            assert!((gamma_cdf(x, 1).unwrap() - (1.0 - (-x).exp())).abs() < 1e-14);
        }
        let q = simpson(|t| 0.5 * t * t * (-t).exp(), 0.0, 3.0, 4000);
        assert!((gamma_cdf(3.0, 3).unwrap() - q).abs() < 1e-9);
        assert_eq!(gamma_cdf(-1.0, 2).unwrap(), 0.0);
        assert!(gamma_cdf(1.0, 0).is_err());
        // both branches agree around the switch point
        let lo = gamma_cdf(4.0 - 1e-12, 4).unwrap();
        let hi = gamma_cdf(4.0, 4).unwrap();
        assert!((lo - hi).abs() < 1e-11);
    }

    #[test]
    fn gamma_matches_channel_power() {
        let mut s = RngStream::new(6, 0, 0, Purpose::Test).sampler();
        let samples: Vec<f64> = (0..100_000)
            .map(|_| s.gaussian_vector(4).norm_sqr())
            .collect();
        let r = ks_test(&samples, |x| gamma_cdf(x, 4).unwrap(), 0.01).unwrap();
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn ks_hand_computed_uniform() {
        // against U(0,1): i/n - x_i = .1 .2 0 .1 .05, x_i - (i-1)/n = .1 0 .2 .1 .15
        let mut samples = vec![0.1, 0.2, 0.6, 0.7, 0.95];
        let d = ks_statistic(&samples, |x| x).unwrap();
        assert!((d - 0.2).abs() < 1e-15);
        samples.reverse();
        assert!((ks_statistic(&samples, |x| x).unwrap() - 0.2).abs() < 1e-15);
    }

    #[test]
    fn ks_null_and_power() {
        let mut s = RngStream::new(7, 0, 0, Purpose::Test).sampler();
        let u: Vec<f64> = (0..100_000).map(|_| s.uniform()).collect();
        let r = ks_test(&u, |x| x.clamp(0.0, 1.0), 0.006).unwrap();
        assert!(r.pass, "{r:?}");
        let shifted: Vec<f64> = u.iter().map(|x| x + 0.1).collect();
        let r = ks_test(&shifted, |x| x.clamp(0.0, 1.0), 0.006).unwrap();
        assert!(!r.pass);
        assert!(r.ks_statistic.unwrap() >= 0.1 - 0.006);
    }

    #[test]
    fn ks_errors() {
        assert_eq!(ks_test(&[], |x| x, 0.1).unwrap_err(), Error::EmptySample);
        assert!(ks_test(&[0.5; 10], |x| x, 0.1).is_err());
    }

    #[test]
    fn two_sample_ks() {
        assert_eq!(ks_two_sample(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(ks_two_sample(&[1.0, 2.0], &[3.0, 4.0]).unwrap(), 1.0);
        assert!((ks_two_sample(&[1.0, 3.0], &[2.0, 4.0]).unwrap() - 0.5).abs() < 1e-15);
        let c = ks_two_sample_critical(10_000, 10_000, 0.01);
        assert!((c - 0.02302).abs() < 1e-4, "{c}");
    }

    #[test]
    fn isotropy_accepts_sampler_and_rejects_constant() {
        let mut s = RngStream::new(8, 0, 0, Purpose::Test).sampler();
        let vs: Vec<_> = (0..100_000).map(|_| s.isotropic_unit(4)).collect();
        let probe = RngStream::new(8, 0, 0, Purpose::Probe)
            .sampler()
            .isotropic_unit(4);
        let r = isotropy_report(&vs, &probe, IsotropyThresholds::default()).unwrap();
        assert!(r.pass, "{r:?}");

        let e1 = vec![crate::linalg::CVector::basis(4, 0); 2000];
        let r = isotropy_report(&e1, &probe, IsotropyThresholds::default()).unwrap();
        assert!(!r.pass);
        assert!(isotropy_report(&vs[..10], &probe, IsotropyThresholds::default()).is_err());
        assert!(isotropy_report(&vs, &probe[..3], IsotropyThresholds::default()).is_err());
    }

    #[test]
    fn normal_quantile_reference_points() {
        assert!((normal_quantile(0.975) - 1.959963984540054).abs() < 1e-8);
        assert!(normal_quantile(0.5).abs() < 1e-12);
        assert!((normal_quantile(0.01) + 2.3263478740408408).abs() < 1e-8);
    }

    #[test]
    fn ci_examples() {
        let (m, hw) = mean_ci(&[3.0; 50], 0.95).unwrap();
        assert_eq!((m, hw), (3.0, 0.0));
        let alt: Vec<f64> = (0..10_000).map(|i| (i % 2) as f64).collect();
        let (m, hw) = mean_ci(&alt, 0.95).unwrap();
        assert!((m - 0.5).abs() < 1e-12);
        assert!((hw - 0.0098).abs() < 1e-4, "{hw}");
        assert!(mean_ci(&[1.0], 0.95).is_err());
    }

    #[test]
    fn ci_coverage() {
        let runs = 1000;
        let mut covered = 0;
        for run in 0..runs {
            let mut s = RngStream::new(10, run, 0, Purpose::Test).sampler();
            let u: Vec<f64> = (0..200).map(|_| s.uniform()).collect();
            let (m, hw) = mean_ci(&u, 0.95).unwrap();
            if (m - 0.5).abs() <= hw {
                covered += 1;
            }
        }
        let rate = covered as f64 / runs as f64;
        // binomial sd at 1000 runs is ~0.007
        assert!((0.925..=0.975).contains(&rate), "coverage {rate}");
    }
}
