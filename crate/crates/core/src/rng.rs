//! Reproducible random streams.
//!
//! Every random quantity in a simulation is drawn from a stream identified by
//! `(seed, trial, user, purpose)`. The seed keys a ChaCha8 generator and the
//! remaining triple is packed into ChaCha's 64-bit stream selector:
//!
//! ```text
//!   bits 63..16  trial index   (< 2^48)
//!   bits 15..8   user index    (< 256)
//!   bits  7..0   purpose tag
//! ```
//!
//! Distinct triples therefore address disjoint keystreams of the same cipher,
//! and a trial's samples never depend on which worker thread produced them.
//!
//! Samplers:
//!
//! * uniform `[0, 1)`: the top 53 bits of one `next_u64`, times `2^-53`;
//! * `CN(0, 1)`: two `rand_distr::StandardNormal` (ziggurat) draws, real part
//!   first, each scaled by `1/sqrt(2)` so that `E|z|^2 = 1`;
//! * isotropic unit vectors: a `CN(0, I)` vector scaled to unit norm.
//!
//! `rand_distr` treats changes to sampled values as breaking, so sequences
//! are stable within its 0.5 series.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::linalg::{CMatrix, CVector};

pub const MAX_TRIALS: u64 = 1 << 48;

/// What a stream is used for; part of the stream identity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum Purpose {
    /// A user's M x N channel matrix.
    Channel = 1,
    /// A user's RVQ codebook.
    Codebook = 2,
    /// Single-antenna channels of the perfect-CSIT benchmark.
    Baseline = 3,
    /// Probe direction of the isotropy check.
    Probe = 4,
    /// Extra codebooks of the antenna-selection scheme (one per antenna).
    SelectionCodebook = 5,
    Test = 255,
}

/// Identity of one random stream. Cheap to copy; two equal values always
/// yield the same sample sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngStream {
    pub seed: u64,
    pub trial: u64,
    pub user: u8,
    pub purpose: Purpose,
}

impl RngStream {
    pub fn new(seed: u64, trial: u64, user: usize, purpose: Purpose) -> Self {
        assert!(trial < MAX_TRIALS, "trial index {trial} out of range");
        let user = u8::try_from(user).expect("user index must fit in 8 bits");
        Self {
            seed,
            trial,
            user,
            purpose,
        }
    }

    pub fn stream_id(&self) -> u64 {
        (self.trial << 16) | (u64::from(self.user) << 8) | self.purpose as u64
    }

    /// Same stream identity with a different purpose.
    pub fn with_purpose(self, purpose: Purpose) -> Self {
        Self { purpose, ..self }
    }

    /// Same stream identity for a different user.
    pub fn with_user(self, user: usize) -> Self {
        Self::new(self.seed, self.trial, user, self.purpose)
    }

    pub fn sampler(&self) -> Sampler {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id());
        Sampler { rng }
    }
}

/// A positioned generator for one stream.
pub struct Sampler {
    rng: ChaCha8Rng,
}

impl Sampler {
    /// Uniform on `[0, 1)` with 53 bits of resolution.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// One circularly-symmetric `CN(0, 1)` draw.
    #[inline]
    pub fn complex_gaussian(&mut self) -> Complex64 {
        let re: f64 = StandardNormal.sample(&mut self.rng);
        let im: f64 = StandardNormal.sample(&mut self.rng);
        Complex64::new(re * FRAC_1_SQRT_2, im * FRAC_1_SQRT_2)
    }

    pub fn gaussian_vector(&mut self, dim: usize) -> CVector {
        (0..dim).map(|_| self.complex_gaussian()).collect()
    }

    /// Writes an isotropic unit vector into `out`.
    pub fn fill_isotropic_unit(&mut self, out: &mut [Complex64]) {
        loop {
            let mut norm_sqr = 0.0;
            for z in out.iter_mut() {
                *z = self.complex_gaussian();
                norm_sqr += z.norm_sqr();
            }
            // an all-zero draw has probability zero but would not normalize
            if norm_sqr > 0.0 {
                let scale = 1.0 / norm_sqr.sqrt();
                for z in out.iter_mut() {
                    *z *= scale;
                }
                return;
            }
        }
    }

    pub fn isotropic_unit(&mut self, dim: usize) -> CVector {
        let mut v = CVector::zeros(dim);
        self.fill_isotropic_unit(&mut v);
        v
    }

    /// An `rows x cols` matrix of iid `CN(0, 1)` entries, drawn column by
    /// column so that the first `k` columns do not depend on `cols`.
    pub fn gaussian_matrix(&mut self, rows: usize, cols: usize) -> CMatrix {
        let columns: Vec<CVector> = (0..cols).map(|_| self.gaussian_vector(rows)).collect();
        CMatrix::from_columns(&columns).expect("nonempty dimensions")
    }
}

/// A `CN(0, I_dim)` vector from `stream`.
pub fn sample_gaussian(stream: &RngStream, dim: usize) -> CVector {
    assert!(dim >= 1, "dimension must be positive");
    stream.sampler().gaussian_vector(dim)
}

/// A unit vector uniformly distributed on the complex sphere in `C^dim`.
pub fn sample_isotropic_unit(stream: &RngStream, dim: usize) -> CVector {
    assert!(dim >= 1, "dimension must be positive");
    stream.sampler().isotropic_unit(dim)
}
