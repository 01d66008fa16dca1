//! Dense complex linear algebra used by the quantum lift.
//!
//! Hermitian problems go through nalgebra's `SymmetricEigen`. Unitary
//! matrices are diagonalised through a rotated Cayley transform, which turns
//! them into a Hermitian matrix with the same eigenvectors and a monotone map
//! of the eigenphases. That keeps permutation matrices (where shifted QR
//! tends to stall) and near-identity unitaries (where `(U + U†)/2` loses half
//! the digits of small phases) both well conditioned.

use std::f64::consts::{PI, TAU};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

pub const I: Complex64 = Complex64::new(0.0, 1.0);

#[inline]
pub fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// `[a, b] = ab − ba`.
pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

/// Largest entry modulus.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

pub fn hermitian_deviation(m: &CMatrix) -> f64 {
    max_abs_diff(m, &m.adjoint())
}

pub fn unitarity_deviation(u: &CMatrix) -> f64 {
    let n = u.nrows();
    max_abs_diff(&(u.adjoint() * u), &CMatrix::identity(n, n))
}

/// `(m + m†) / 2`.
pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * c(0.5)
}

/// Tolerance for approximate predicates at a given Hilbert-space dimension.
pub fn default_tolerance(dim: usize) -> f64 {
    if dim <= 256 {
        1e-9
    } else {
        1e-7
    }
}

/// Eigenpairs of a Hermitian matrix, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    /// Eigenvectors as columns, in the order of `values`.
    pub vectors: CMatrix,
}

impl HermitianEigen {
    pub fn new(h: &CMatrix) -> Result<Self> {
        let n = check_square(h)?;
        let (diag, vecs) = jacobi_eigen(&hermitian_part(h), true);
        let vecs = vecs.expect("vectors requested");
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| diag[a].total_cmp(&diag[b]));
        let values = order.iter().map(|&i| diag[i]).collect();
        let vectors = CMatrix::from_fn(n, n, |r, col| vecs[(r, order[col])]);
        Ok(Self { values, vectors })
    }

    /// `V f(Λ) V†`.
    pub fn apply(&self, f: impl Fn(f64) -> Complex64) -> CMatrix {
        let scaled = CMatrix::from_fn(self.vectors.nrows(), self.vectors.ncols(), |r, col| {
            self.vectors[(r, col)] * f(self.values[col])
        });
        scaled * self.vectors.adjoint()
    }

    /// Largest `‖H v − λ v‖` over the eigenpairs.
    pub fn max_residual(&self, h: &CMatrix) -> f64 {
        (0..self.values.len())
            .map(|k| {
                let v = self.vectors.column(k);
                (h * v - v * c(self.values[k])).norm()
            })
            .fold(0.0, f64::max)
    }
}

pub fn hermitian_eigenvalues(h: &CMatrix) -> Result<Vec<f64>> {
    check_square(h)?;
    let (mut v, _) = jacobi_eigen(&hermitian_part(h), false);
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// Cyclic complex Jacobi iteration on a Hermitian matrix.
///
/// Each rotation first removes the phase of `a_pq` and then applies the real
/// symmetric 2×2 rotation, so the diagonal stays exactly real. Sweeps stop
/// once the off-diagonal Frobenius norm drops below `1e-15·‖A‖_F`.
fn jacobi_eigen(h: &CMatrix, want_vectors: bool) -> (Vec<f64>, Option<CMatrix>) {
    let n = h.nrows();
    // Column-major working copy: a[r + c * n].
    let mut a: Vec<Complex64> = h.as_slice().to_vec();
    let mut v = want_vectors.then(|| CMatrix::identity(n, n));
    for i in 0..n {
        a[i + i * n].im = 0.0;
    }
    let total: f64 = a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let target = 1e-15 * total;
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|col| (0..n).filter(move |&r| r != col).map(move |r| (r, col)))
            .map(|(r, col)| a[r + col * n].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off <= target || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p + q * n];
                let r = apq.norm();
                if r == 0.0 || r < 1e-300 {
                    continue;
                }
                let app = a[p + p * n].re;
                let aqq = a[q + q * n].re;
                let theta = (aqq - app) / (2.0 * r);
                let t = if theta == 0.0 {
                    1.0
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let cs = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * cs;
                let phase = apq / r; // e^{iφ}
                let phase_c = phase.conj();
                // A ← A J: columns p, q.
                for k in 0..n {
                    let akp = a[k + p * n];
                    let akq = a[k + q * n];
                    a[k + p * n] = akp * cs - akq * phase_c * sn;
                    a[k + q * n] = akp * sn + akq * phase_c * cs;
                }
                // A ← J† A: rows p, q.
                for k in 0..n {
                    let apk = a[p + k * n];
                    let aqk = a[q + k * n];
                    a[p + k * n] = apk * cs - aqk * phase * sn;
                    a[q + k * n] = apk * sn + aqk * phase * cs;
                }
                a[p + q * n] = Complex64::new(0.0, 0.0);
                a[q + p * n] = Complex64::new(0.0, 0.0);
                a[p + p * n] = Complex64::new(app - t * r, 0.0);
                a[q + q * n] = Complex64::new(aqq + t * r, 0.0);
                if let Some(v) = v.as_mut() {
                    for k in 0..n {
                        let vkp = v[(k, p)];
                        let vkq = v[(k, q)];
                        v[(k, p)] = vkp * cs - vkq * phase_c * sn;
                        v[(k, q)] = vkp * sn + vkq * phase_c * cs;
                    }
                }
            }
        }
    }
    ((0..n).map(|i| a[i + i * n].re).collect(), v)
}

/// Eigendecomposition `U = V diag(e^{iθ}) V†` of a unitary matrix, phases in
/// `[0, 2π)` ascending.
#[derive(Debug, Clone)]
pub struct UnitaryEigen {
    pub phases: Vec<f64>,
    pub vectors: CMatrix,
}

impl UnitaryEigen {
    pub fn new(u: &CMatrix) -> Result<Self> {
        let n = check_square(u)?;
        let dev = unitarity_deviation(u);
        if dev > 1e-8 {
            return Err(Error::NotUnitary(dev));
        }
        let alpha = cayley_rotation(u)?;
        let ident = CMatrix::identity(n, n);
        let w = u * Complex64::from_polar(1.0, alpha);
        let lhs = &ident + &w;
        let rhs = &ident - &w;
        let x = lhs
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::InvariantViolated("Cayley transform is singular".into()))?;
        let k = hermitian_part(&(x * I));
        let eig = HermitianEigen::new(&k)?;
        let mut pairs: Vec<(f64, usize)> = eig
            .values
            .iter()
            .enumerate()
            .map(|(i, &mu)| ((2.0 * mu.atan() - alpha).rem_euclid(TAU), i))
            .collect();
        // Phases that land a hair below 2π belong at 0.
        for p in &mut pairs {
            if TAU - p.0 < 1e-14 {
                p.0 = 0.0;
            }
        }
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let phases = pairs.iter().map(|p| p.0).collect();
        let vectors = CMatrix::from_fn(n, n, |r, col| eig.vectors[(r, pairs[col].1)]);
        Ok(Self { phases, vectors })
    }

    /// `V diag(f(θ)) V†`.
    pub fn apply(&self, f: impl Fn(f64) -> Complex64) -> CMatrix {
        let scaled = CMatrix::from_fn(self.vectors.nrows(), self.vectors.ncols(), |r, col| {
            self.vectors[(r, col)] * f(self.phases[col])
        });
        scaled * self.vectors.adjoint()
    }

    pub fn max_residual(&self, u: &CMatrix) -> f64 {
        (0..self.phases.len())
            .map(|k| {
                let v = self.vectors.column(k);
                (u * v - v * Complex64::from_polar(1.0, self.phases[k])).norm()
            })
            .fold(0.0, f64::max)
    }
}

/// Picks a rotation `α` such that `e^{iα}U` keeps its spectrum away from −1.
///
/// The cosines of the eigenphases come from the Hermitian part; each one
/// pins a phase to `±acos`, so a gap among all candidate angles is a gap in
/// the true spectrum.
fn cayley_rotation(u: &CMatrix) -> Result<f64> {
    let cosines = hermitian_eigenvalues(&hermitian_part(u))?;
    let mut angles: Vec<f64> = cosines
        .iter()
        .flat_map(|&cv| {
            let a = cv.clamp(-1.0, 1.0).acos();
            [a, (TAU - a).rem_euclid(TAU)]
        })
        .collect();
    angles.sort_by(f64::total_cmp);
    let mut best_gap = TAU - angles[angles.len() - 1] + angles[0];
    let mut mid = (angles[angles.len() - 1] + best_gap / 2.0).rem_euclid(TAU);
    for w in angles.windows(2) {
        let gap = w[1] - w[0];
        if gap > best_gap {
            best_gap = gap;
            mid = w[0] + gap / 2.0;
        }
    }
    Ok(PI - mid)
}

fn check_square(m: &CMatrix) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch(m.nrows(), m.ncols()));
    }
    Ok(m.nrows())
}

/// Principal logarithm of a unitary matrix: eigenphases mapped to `(−π, π]`.
pub fn principal_log_unitary(u: &CMatrix) -> Result<CMatrix> {
    let eig = UnitaryEigen::new(u)?;
    Ok(eig.apply(|theta| I * principal_phase(theta)))
}

/// Maps a phase to `(−π, π]`.
pub fn principal_phase(theta: f64) -> f64 {
    let t = theta.rem_euclid(TAU);
    if t > PI {
        t - TAU
    } else {
        t
    }
}

/// `e^{A}` for anti-Hermitian `A`, via the Hermitian matrix `iA`.
pub fn expm_anti_hermitian(a: &CMatrix) -> Result<CMatrix> {
    let h = a * I;
    let eig = HermitianEigen::new(&h)?;
    Ok(eig.apply(|lambda| Complex64::from_polar(1.0, -lambda)))
}

/// `e^{−i t H}` for Hermitian `H`.
pub fn exp_i_hermitian(h: &CMatrix, t: f64) -> Result<CMatrix> {
    let eig = HermitianEigen::new(h)?;
    Ok(eig.apply(|lambda| Complex64::from_polar(1.0, -t * lambda)))
}

/// General matrix exponential: scaling and squaring with a degree-18 Taylor
/// polynomial.
pub fn expm(a: &CMatrix) -> Result<CMatrix> {
    let n = check_square(a)?;
    let norm1 = (0..n)
        .map(|col| a.column(col).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max);
    let squarings = if norm1 > 0.5 {
        (norm1 / 0.5).log2().ceil() as i32
    } else {
        0
    };
    let scaled = a * c(0.5f64.powi(squarings));
    let mut result = CMatrix::identity(n, n);
    let mut term = CMatrix::identity(n, n);
    for k in 1..=18 {
        term = &term * &scaled * c(1.0 / k as f64);
        result += &term;
    }
    for _ in 0..squarings {
        result = &result * &result;
    }
    Ok(result)
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    CMatrix::from_fn(ar * br, ac * bc, |r, col| a[(r / br, col / bc)] * b[(r % br, col % bc)])
}
