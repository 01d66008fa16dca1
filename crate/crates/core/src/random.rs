//! Seeded random matrices for probes and tests.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::linalg::{c, CMatrix};

/// Random anti-Hermitian matrix with entries uniform in the unit square,
/// deterministic in `seed`.
pub fn random_anti_hermitian(dim: usize, seed: u64) -> CMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = CMatrix::from_fn(dim, dim, |_, _| {
        Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    });
    (&m - m.adjoint()) * c(0.5)
}

/// Random real diagonal matrix with entries in `[-1, 1)`.
pub fn random_diagonal(dim: usize, seed: u64) -> CMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d: Vec<Complex64> = (0..dim).map(|_| c(rng.gen_range(-1.0..1.0))).collect();
    CMatrix::from_diagonal(&nalgebra::DVector::from_vec(d))
}
