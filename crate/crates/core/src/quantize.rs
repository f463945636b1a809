//! RVQ codebooks and channel-direction quantization.
//!
//! Three quantizers share one result type:
//!
//! * [`quantize_single`]: a single receive antenna picks the codeword with the
//!   largest `|h^H w|`.
//! * [`quantize_antenna_selection`]: each of the N antennas is quantized with its
//!   own codebook and only the best antenna is used.
//! * [`quantize_effective`]: the N antennas are linearly combined. The receiver
//!   picks the codeword closest to the span of its channel columns, projects
//!   it onto that span and solves for the combiner that produces the
//!   projected direction.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{inner_unchecked, normal_solve, orthonormal_basis, CMatrix, CVector};
use crate::rng::RngStream;

/// Largest supported number of feedback bits.
pub const MAX_BITS: u32 = 24;

/// `2^bits` isotropic unit vectors in `C^dim`, stored contiguously.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    bits: u32,
    dim: usize,
    data: Vec<Complex64>,
}

impl Codebook {
    /// Builds a codebook from explicit vectors, normalizing each one.
    ///
    /// The number of vectors does not have to be a power of two; `bits` is
    /// then `ceil(log2(len))`. Used for planted codebooks in tests and for
    /// concatenating codebooks.
    pub fn from_vectors(vectors: &[impl AsRef<[Complex64]>]) -> Result<Self> {
        let dim = vectors
            .first()
            .map(|v| v.as_ref().len())
            .ok_or_else(|| Error::Domain("empty codebook".into()))?;
        let mut data = Vec::with_capacity(vectors.len() * dim);
        for v in vectors {
            let v = CVector::new(v.as_ref().to_vec());
            if v.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: v.len(),
                });
            }
            data.extend_from_slice(&v.normalized().ok_or(Error::ZeroVector)?);
        }
        let bits = usize::BITS - (vectors.len() - 1).leading_zeros();
        Ok(Self { bits, dim, data })
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn vector(&self, index: usize) -> &[Complex64] {
        &self.data[index * self.dim..(index + 1) * self.dim]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[Complex64]> + '_ {
        self.data.chunks_exact(self.dim)
    }
}

/// Draws `2^bits` independent isotropic unit vectors in `C^dim`.
///
/// Codewords are drawn in order from one stream, so the codebook for `b` bits
/// is a prefix of the codebook for `b + 1` bits from the same stream.
pub fn generate_codebook(stream: &RngStream, bits: u32, dim: usize) -> Result<Codebook> {
    if bits > MAX_BITS {
        return Err(Error::Capacity {
            bits,
            max: MAX_BITS,
        });
    }
    if bits == 0 {
        return Err(Error::Domain("a codebook needs at least 1 bit".into()));
    }
    if dim < 2 {
        return Err(Error::Domain(format!(
            "codebook dimension must be >= 2, got {dim}"
        )));
    }
    let size = 1usize << bits;
    let mut data = vec![Complex64::new(0.0, 0.0); size * dim];
    let mut sampler = stream.sampler();
    for chunk in data.chunks_exact_mut(dim) {
        sampler.fill_isotropic_unit(chunk);
    }
    Ok(Codebook { bits, dim, data })
}

/// A quantized channel direction together with the receive combiner that
/// realizes it.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizationResult {
    /// Index of the chosen codeword in its codebook.
    pub index: usize,
    /// The chosen codeword, i.e. the direction fed back to the transmitter.
    pub q_hat: CVector,
    /// `cos^2` of the angle between `q_hat` and the effective channel.
    pub cos_sq: f64,
    pub sin_sq: f64,
    /// Unit-norm direction of the effective channel.
    pub s_proj: CVector,
    /// Unit-norm receive combining weights.
    pub gamma: CVector,
    /// `H gamma`.
    pub h_eff: CVector,
    /// `||h_eff||^2`.
    pub eff_norm_sq: f64,
}

fn check_codebook(dim: usize, cb: &Codebook) -> Result<()> {
    if cb.dim() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: cb.dim(),
        });
    }
    Ok(())
}

/// Index of the largest score; the lowest index wins ties.
fn argmax(scores: impl Iterator<Item = f64>) -> (usize, f64) {
    let mut best = (0, f64::NEG_INFINITY);
    for (j, s) in scores.enumerate() {
        if s > best.1 {
            best = (j, s);
        }
    }
    best
}

/// Quantizes a single-antenna channel to the codeword maximizing `|h^H w|`.
pub fn quantize_single(h: &[Complex64], cb: &Codebook) -> Result<QuantizationResult> {
    check_codebook(h.len(), cb)?;
    let h_norm_sq = crate::linalg::norm_sqr(h);
    if !(h_norm_sq > 0.0) {
        return Err(Error::ZeroVector);
    }
    let (index, best) = argmax(cb.iter().map(|w| inner_unchecked(h, w).norm_sqr()));
    let cos_sq = (best / h_norm_sq).clamp(0.0, 1.0);
    let h = CVector::new(h.to_vec());
    Ok(QuantizationResult {
        index,
        q_hat: CVector::new(cb.vector(index).to_vec()),
        cos_sq,
        sin_sq: 1.0 - cos_sq,
        s_proj: h.normalized().expect("nonzero"),
        gamma: CVector::basis(1, 0),
        eff_norm_sq: h_norm_sq,
        h_eff: h,
    })
}

/// `sum_k |w^H q_k|^2` for an orthonormal basis `{q_k}`.
#[inline]
fn subspace_score(w: &[Complex64], basis: &[CVector]) -> f64 {
    basis.iter().map(|q| inner_unchecked(w, q).norm_sqr()).sum()
}

/// Effective-channel quantization of an M x N channel.
///
/// 1. Pick the codeword with the smallest angle to `span(H)`, i.e. the one
///    maximizing `sum_k |w^H q_k|^2` over an orthonormal basis of the span.
/// 2. Project it onto `span(H)` and normalize: `s_proj`.
/// 3. Solve `H v = s_proj` by least squares; `gamma = v / ||v||`, so that
///    `h_eff = H gamma` points along `s_proj` with `||h_eff|| = 1 / ||v||`.
pub fn quantize_effective(h: &CMatrix, cb: &Codebook) -> Result<QuantizationResult> {
    let (m, n) = (h.rows(), h.cols());
    check_codebook(m, cb)?;
    if n > m {
        return Err(Error::Domain(format!(
            "N = {n} receive antennas exceeds M = {m}"
        )));
    }
    let basis = orthonormal_basis(h)?;
    let (index, best) = argmax(cb.iter().map(|w| subspace_score(w, &basis)));
    let q_hat = CVector::new(cb.vector(index).to_vec());

    // projection of q_hat onto span(H): sum_k q_k (q_k^H q_hat)
    let mut proj = CVector::zeros(m);
    for q in &basis {
        let c = inner_unchecked(q, &q_hat);
        for (p, qi) in proj.iter_mut().zip(q.iter()) {
            *p += c * qi;
        }
    }
    // q_hat orthogonal to span(H) only happens with probability zero
    let s_proj = proj
        .normalized()
        .ok_or(Error::DegenerateChannel { column: 0 })?;

    let v = normal_solve(h, &s_proj)?;
    let v_norm_sq = v.norm_sqr();
    let gamma = v.scaled(Complex64::new(1.0 / v_norm_sq.sqrt(), 0.0));
    let h_eff = h.mul_vec(&gamma)?;
    let eff_norm_sq = 1.0 / v_norm_sq;
    debug_assert!(
        (eff_norm_sq - h_eff.norm_sqr()).abs() <= 1e-8 * eff_norm_sq.max(1.0),
        "1/||v||^2 = {eff_norm_sq} but ||H gamma||^2 = {}",
        h_eff.norm_sqr()
    );

    let cos_sq = best.clamp(0.0, 1.0);
    Ok(QuantizationResult {
        index,
        q_hat,
        cos_sq,
        sin_sq: 1.0 - cos_sq,
        s_proj,
        gamma,
        h_eff,
        eff_norm_sq,
    })
}

/// Antenna selection: quantize every column of `H` with its own codebook and
/// keep the antenna with the smallest quantization error.
///
/// The winner's `gamma` is the standard basis vector selecting that antenna.
pub fn quantize_antenna_selection(h: &CMatrix, cbs: &[Codebook]) -> Result<QuantizationResult> {
    let n = h.cols();
    if cbs.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: cbs.len(),
        });
    }
    let mut best: Option<(usize, QuantizationResult)> = None;
    for (k, cb) in cbs.iter().enumerate() {
        let r = quantize_single(&h.column(k), cb)?;
        if best.as_ref().map_or(true, |(_, b)| r.cos_sq > b.cos_sq) {
            best = Some((k, r));
        }
    }
    let (k, mut r) = best.expect("at least one antenna");
    r.gamma = CVector::basis(n, k);
    Ok(r)
}

/// `sin^2` of the angle between `w` and `span(H)`.
pub fn quantization_error_of(h: &CMatrix, w: &[Complex64]) -> Result<f64> {
    if w.len() != h.rows() {
        return Err(Error::DimensionMismatch {
            expected: h.rows(),
            got: w.len(),
        });
    }
    let w_norm_sq = crate::linalg::norm_sqr(w);
    if !(w_norm_sq > 0.0) {
        return Err(Error::ZeroVector);
    }
    let basis = orthonormal_basis(h)?;
    Ok((1.0 - subspace_score(w, &basis) / w_norm_sq).clamp(0.0, 1.0))
}
