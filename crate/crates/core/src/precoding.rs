//! Zero-forcing beamforming and rate computation.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{inner_unchecked, invert_square, CMatrix, CVector};

/// Unit-norm zero-forcing beamformers, one per user.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamformerSet {
    vectors: Vec<CVector>,
}

impl BeamformerSet {
    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn vector(&self, i: usize) -> &CVector {
        &self.vectors[i]
    }

    pub fn vectors(&self) -> &[CVector] {
        &self.vectors
    }

    /// Largest `|d_i^H v_j|` over `i != j`, where `d_i` are the directions
    /// the set was designed for.
    pub fn max_leakage(&self, directions: &[impl AsRef<[Complex64]>]) -> f64 {
        let mut worst = 0.0f64;
        for (i, d) in directions.iter().enumerate() {
            for (j, v) in self.vectors.iter().enumerate() {
                if i != j {
                    worst = worst.max(inner_unchecked(d.as_ref(), v).norm());
                }
            }
        }
        worst
    }
}

/// Zero-forcing beamformers for the directions `q_hats`: `v_j` is unit norm
/// and orthogonal to every `q_hat_i` with `i != j`.
///
/// With `Q = [q_1 .. q_M]`, row `j` of `Q^{-1}` annihilates every column but
/// the `j`-th, so `v_j` is its conjugate, normalized.
///
/// Fails with [`Error::IllConditioned`] when the directions are nearly
/// dependent; simulations treat that as a dropped trial.
pub fn zfbf_vectors(q_hats: &[impl AsRef<[Complex64]>]) -> Result<BeamformerSet> {
    let m = q_hats.len();
    if m == 0 {
        return Err(Error::Domain("no users".into()));
    }
    let q = CMatrix::from_columns(q_hats)?;
    if q.rows() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: q.rows(),
        });
    }
    let inv = invert_square(&q)?;
    let vectors = (0..m)
        .map(|j| {
            let row: CVector = inv.row(j).iter().map(|z| z.conj()).collect();
            row.normalized()
                .expect("rows of an invertible matrix are nonzero")
        })
        .collect();
    Ok(BeamformerSet { vectors })
}

/// SINR of user `i` with channel `h_eff`, equal power `P / M` per beam and
/// unit-variance noise.
pub fn sinr(h_eff: &[Complex64], bf: &BeamformerSet, i: usize, p: f64) -> Result<f64> {
    let m = bf.len();
    if i >= m {
        return Err(Error::Domain(format!(
            "user {i} out of range for {m} beams"
        )));
    }
    if let Some(v) = bf.vectors.first() {
        if v.len() != h_eff.len() {
            return Err(Error::DimensionMismatch {
                expected: v.len(),
                got: h_eff.len(),
            });
        }
    }
    if !(p > 0.0) {
        return Err(Error::Domain(format!("power must be positive, got {p}")));
    }
    let per_beam = p / m as f64;
    let mut signal = 0.0;
    let mut interference = 0.0;
    for (j, v) in bf.vectors.iter().enumerate() {
        let g = per_beam * inner_unchecked(h_eff, v).norm_sqr();
        if j == i {
            signal = g;
        } else {
            interference += g;
        }
    }
    Ok(signal / (1.0 + interference))
}

/// `sum_i log2(1 + sinr_i)`.
pub fn sum_rate(sinrs: &[f64]) -> f64 {
    sinrs.iter().map(|s| s.ln_1p()).sum::<f64>() * std::f64::consts::LOG2_E
}

/// Sum rate of zero forcing with perfect channel knowledge on single-antenna
/// channels: the beamformers null all interference, leaving
/// `sum_i log2(1 + (P/M) |h_i^H v_i|^2)`.
pub fn perfect_csit_rate(channels: &[impl AsRef<[Complex64]>], p: f64) -> Result<f64> {
    let bf = zfbf_vectors(channels)?;
    debug_assert!({
        let scale = channels
            .iter()
            .map(|h| crate::linalg::norm_sqr(h.as_ref()).sqrt())
            .fold(1.0, f64::max);
        bf.max_leakage(channels) < 1e-8 * scale
    });
    let per_beam = p / channels.len() as f64;
    let sinrs: Vec<f64> = channels
        .iter()
        .zip(bf.vectors())
        .map(|(h, v)| per_beam * inner_unchecked(h.as_ref(), v).norm_sqr())
        .collect();
    Ok(sum_rate(&sinrs))
}
