//! Monte Carlo estimation of ergodic sum rates.
//!
//! A trial is one fading block: K = M users each draw an M x N channel,
//! quantize it with effective-channel quantization, and the transmitter zero
//! forces on the fed-back codewords. Noise is never sampled; the SINR is a
//! deterministic function of channels and beamformers, so averages run over
//! fading and codebooks only.
//!
//! Every random draw in trial `t` comes from the streams
//! `(seed, t, user, purpose)`, which makes results independent of how trials
//! are spread over threads. Trial streams do not depend on the SNR point, so
//! all points of a sweep see the same channels (common random numbers).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{bits_required, ceil_bits, db_to_linear, ScalingInputs};
use crate::error::{Error, Result};
use crate::linalg::{CMatrix, CVector};
use crate::precoding::{perfect_csit_rate, sinr, sum_rate, zfbf_vectors};
use crate::quantize::{generate_codebook, quantize_effective, Codebook, MAX_BITS};
use crate::rng::{Purpose, RngStream, MAX_TRIALS};
use crate::stats::mean_ci;

/// Trial slot reserved for the codebooks of [`CodebookPolicy::Fixed`].
const FIXED_CODEBOOK_TRIAL: u64 = MAX_TRIALS - 1;

/// Dropped-trial fraction above which a grid point carries a warning.
pub const DROP_WARNING_FRACTION: f64 = 0.01;

/// How the number of feedback bits is chosen at each SNR point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BitsRule {
    Fixed {
        bits: u32,
    },
    /// Scale B with SNR to hold the per-user gap at `rate_gap` (rounded up,
    /// at least 1 bit).
    Scaling {
        rate_gap: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CodebookPolicy {
    /// Fresh codebooks every fading block (averages over codebooks too).
    PerBlock,
    /// One codebook per user for the whole experiment. Faster, but the
    /// estimate is conditional on that particular draw.
    Fixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Transmit antennas; also the number of users.
    pub m: usize,
    /// Receive antennas per user.
    pub n: usize,
    pub snr_db: Vec<f64>,
    pub bits_rule: BitsRule,
    pub trials: u64,
    pub seed: u64,
    pub codebook_policy: CodebookPolicy,
}

impl ExperimentConfig {
    pub fn users(&self) -> usize {
        self.m
    }

    pub fn validate(&self) -> Result<()> {
        if self.m < 2 || self.m > 255 {
            return Err(Error::Domain(format!(
                "M must be in [2, 255], got {}",
                self.m
            )));
        }
        if self.n == 0 || self.n > self.m {
            return Err(Error::Domain(format!(
                "N must be in [1, M = {}], got {}",
                self.m, self.n
            )));
        }
        if self.trials == 0 || self.trials >= FIXED_CODEBOOK_TRIAL {
            return Err(Error::Domain(format!(
                "trials must be >= 1, got {}",
                self.trials
            )));
        }
        if self.snr_db.is_empty() {
            return Err(Error::Domain("empty SNR grid".into()));
        }
        if let Some(x) = self.snr_db.iter().find(|x| !x.is_finite()) {
            return Err(Error::Domain(format!("non-finite SNR {x}")));
        }
        match self.bits_rule {
            BitsRule::Fixed { bits } => check_bits(bits)?,
            BitsRule::Scaling { rate_gap } if !(rate_gap > 0.0) => {
                return Err(Error::Domain(format!(
                    "rate gap must be positive, got {rate_gap}"
                )))
            }
            BitsRule::Scaling { .. } => {}
        }
        Ok(())
    }

    /// Integer bits used at `snr_db`, plus the unrounded scaling-law value
    /// when the scaling rule applies.
    pub fn resolve_bits(&self, snr_db: f64) -> Result<(u32, Option<f64>)> {
        match self.bits_rule {
            BitsRule::Fixed { bits } => check_bits(bits).map(|_| (bits, None)),
            BitsRule::Scaling { rate_gap } => {
                let raw = bits_required(&ScalingInputs {
                    m: self.m,
                    n: self.n,
                    snr_db,
                    rate_gap,
                })?;
                let bits = ceil_bits(raw).max(1);
                if bits > i64::from(MAX_BITS) {
                    return Err(Error::Capacity {
                        bits: bits.min(i64::from(u32::MAX)) as u32,
                        max: MAX_BITS,
                    });
                }
                Ok((bits as u32, Some(raw)))
            }
        }
    }
}

fn check_bits(bits: u32) -> Result<()> {
    if bits == 0 {
        return Err(Error::Domain("feedback bits must be >= 1".into()));
    }
    if bits > MAX_BITS {
        return Err(Error::Capacity {
            bits,
            max: MAX_BITS,
        });
    }
    Ok(())
}

/// Outcome of one fading block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub sinrs: Vec<f64>,
    /// Quantization error of each user.
    pub sin_sq: Vec<f64>,
    /// Sum rate with quantized feedback.
    pub rate_fb: f64,
    /// Sum rate of perfect-CSIT zero forcing on an independent single-antenna
    /// channel draw.
    pub rate_zf: f64,
    /// Largest `|q_hat_i^H v_j|`, `i != j`.
    pub zf_leakage: f64,
    /// Set when a channel or beamformer stack was numerically singular; such
    /// trials are excluded from averages.
    pub dropped: bool,
}

impl TrialRecord {
    fn dropped(m: usize) -> Self {
        Self {
            sinrs: vec![0.0; m],
            sin_sq: Vec::new(),
            rate_fb: 0.0,
            rate_zf: 0.0,
            zf_leakage: 0.0,
            dropped: true,
        }
    }
}

/// Channel of `user` in trial `trial`.
pub fn user_channel(cfg: &ExperimentConfig, trial: u64, user: usize) -> CMatrix {
    RngStream::new(cfg.seed, trial, user, Purpose::Channel)
        .sampler()
        .gaussian_matrix(cfg.m, cfg.n)
}

/// Per-block codebook of `user` in trial `trial`.
pub fn user_codebook(
    cfg: &ExperimentConfig,
    trial: u64,
    user: usize,
    bits: u32,
) -> Result<Codebook> {
    generate_codebook(
        &RngStream::new(cfg.seed, trial, user, Purpose::Codebook),
        bits,
        cfg.m,
    )
}

/// The experiment-wide codebooks used by [`CodebookPolicy::Fixed`].
pub fn fixed_codebooks(cfg: &ExperimentConfig, bits: u32) -> Result<Vec<Codebook>> {
    (0..cfg.users())
        .map(|u| user_codebook(cfg, FIXED_CODEBOOK_TRIAL, u, bits))
        .collect()
}

fn baseline_rate(cfg: &ExperimentConfig, trial: u64, p: f64) -> Result<f64> {
    let channels: Vec<CVector> = (0..cfg.users())
        .map(|u| {
            RngStream::new(cfg.seed, trial, u, Purpose::Baseline)
                .sampler()
                .gaussian_vector(cfg.m)
        })
        .collect();
    perfect_csit_rate(&channels, p)
}

/// Runs one trial with the given per-user codebooks.
pub fn run_trial_with_codebooks(
    cfg: &ExperimentConfig,
    p: f64,
    trial: u64,
    codebooks: &[Codebook],
) -> Result<TrialRecord> {
    let m = cfg.users();
    if codebooks.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: codebooks.len(),
        });
    }
    let mut quantized = Vec::with_capacity(m);
    for (u, cb) in codebooks.iter().enumerate() {
        match quantize_effective(&user_channel(cfg, trial, u), cb) {
            Ok(q) => quantized.push(q),
            Err(Error::DegenerateChannel { .. }) => return Ok(TrialRecord::dropped(m)),
            Err(e) => return Err(e),
        }
    }
    let q_hats: Vec<&CVector> = quantized.iter().map(|q| &q.q_hat).collect();
    let bf = match zfbf_vectors(&q_hats) {
        Ok(bf) => bf,
        Err(Error::IllConditioned { .. }) => return Ok(TrialRecord::dropped(m)),
        Err(e) => return Err(e),
    };
    let rate_zf = match baseline_rate(cfg, trial, p) {
        Ok(r) => r,
        Err(Error::IllConditioned { .. }) => return Ok(TrialRecord::dropped(m)),
        Err(e) => return Err(e),
    };
    let sinrs = quantized
        .iter()
        .enumerate()
        .map(|(i, q)| sinr(&q.h_eff, &bf, i, p))
        .collect::<Result<Vec<f64>>>()?;
    Ok(TrialRecord {
        rate_fb: sum_rate(&sinrs),
        sinrs,
        sin_sq: quantized.iter().map(|q| q.sin_sq).collect(),
        rate_zf,
        zf_leakage: bf.max_leakage(&q_hats),
        dropped: false,
    })
}

/// Runs trial `trial` at linear power `p` with `bits` feedback bits per user.
pub fn run_trial(cfg: &ExperimentConfig, p: f64, bits: u32, trial: u64) -> Result<TrialRecord> {
    check_bits(bits)?;
    let codebooks = match cfg.codebook_policy {
        CodebookPolicy::PerBlock => (0..cfg.users())
            .map(|u| user_codebook(cfg, trial, u, bits))
            .collect::<Result<Vec<_>>>()?,
        CodebookPolicy::Fixed => fixed_codebooks(cfg, bits)?,
    };
    run_trial_with_codebooks(cfg, p, trial, &codebooks)
}

/// Aggregated statistics at one SNR point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub snr_db: f64,
    pub n_rx: usize,
    pub bits: u32,
    /// Unrounded scaling-law bits, when the scaling rule is in use.
    pub bits_unrounded: Option<f64>,
    pub trials: u64,
    pub dropped: u64,
    pub rate_fb_mean: f64,
    /// 95% half-width; `None` with fewer than two kept trials.
    pub rate_fb_ci: Option<f64>,
    pub rate_zf_mean: f64,
    pub rate_zf_ci: Option<f64>,
    /// `rate_zf_mean - rate_fb_mean` (sum rate).
    pub gap: f64,
    /// 95% half-width of the paired per-trial gap.
    pub gap_ci: Option<f64>,
    pub mean_sin_sq: f64,
    pub warning: Option<String>,
}

impl GridPoint {
    pub fn per_user_gap(&self, m: usize) -> f64 {
        self.gap / m as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub points: Vec<GridPoint>,
}

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        f64::NAN
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

fn half_width(xs: &[f64]) -> Option<f64> {
    mean_ci(xs, 0.95).ok().map(|(_, hw)| hw)
}

fn aggregate(
    cfg: &ExperimentConfig,
    snr_db: f64,
    bits: u32,
    bits_unrounded: Option<f64>,
    records: &[TrialRecord],
) -> GridPoint {
    let kept: Vec<&TrialRecord> = records.iter().filter(|r| !r.dropped).collect();
    let fb: Vec<f64> = kept.iter().map(|r| r.rate_fb).collect();
    let zf: Vec<f64> = kept.iter().map(|r| r.rate_zf).collect();
    let diff: Vec<f64> = kept.iter().map(|r| r.rate_zf - r.rate_fb).collect();
    let sin_sq: Vec<f64> = kept.iter().flat_map(|r| r.sin_sq.iter().copied()).collect();
    let dropped = (records.len() - kept.len()) as u64;
    let warning = (dropped as f64 > DROP_WARNING_FRACTION * records.len() as f64).then(|| {
        format!(
            "{dropped} of {} trials dropped as ill-conditioned at {snr_db} dB",
            records.len()
        )
    });
    let (rate_fb_mean, rate_zf_mean) = (mean(&fb), mean(&zf));
    GridPoint {
        snr_db,
        n_rx: cfg.n,
        bits,
        bits_unrounded,
        trials: records.len() as u64,
        dropped,
        rate_fb_mean,
        rate_fb_ci: half_width(&fb),
        rate_zf_mean,
        rate_zf_ci: half_width(&zf),
        gap: rate_zf_mean - rate_fb_mean,
        gap_ci: half_width(&diff),
        mean_sin_sq: mean(&sin_sq),
        warning,
    }
}

/// Runs all SNR points of `cfg`. Trials execute on the current rayon pool;
/// results do not depend on its size.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    cfg.validate()?;
    let mut points = Vec::with_capacity(cfg.snr_db.len());
    for &snr_db in &cfg.snr_db {
        let (bits, raw) = cfg.resolve_bits(snr_db)?;
        let p = db_to_linear(snr_db);
        let fixed = match cfg.codebook_policy {
            CodebookPolicy::Fixed => Some(fixed_codebooks(cfg, bits)?),
            CodebookPolicy::PerBlock => None,
        };
        let records = (0..cfg.trials)
            .into_par_iter()
            .map(|t| match &fixed {
                Some(cbs) => run_trial_with_codebooks(cfg, p, t, cbs),
                None => run_trial(cfg, p, bits, t),
            })
            .collect::<Result<Vec<_>>>()?;
        points.push(aggregate(cfg, snr_db, bits, raw, &records));
    }
    Ok(ExperimentResult {
        config: cfg.clone(),
        points,
    })
}
