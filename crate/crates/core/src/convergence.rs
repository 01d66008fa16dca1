//! Convergence of the BCH series along the ray `s = t = ε`.
//!
//! For each `ε` the exact generator `R(ε) = log(e^{εP} e^{εQ})` is compared
//! against the truncations `R_k(ε)`. The series can only converge while the
//! eigenvalues of `R/i` fit inside a window of width `2π`. The principal
//! logarithm always fits, so the spread that decides divergence is measured
//! on the branch the series itself points at: every eigenphase is lifted by
//! multiples of `2π` towards the leading term `ε(P+Q)/i`.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bch::{bch_truncation, check_order};
use crate::error::{Error, Result};
use crate::linalg::{
    c, commutator, hermitian_deviation, max_abs, principal_phase, CMatrix, HermitianEigen, UnitaryEigen, I,
};

/// Spread of `R/i` at which the series is flagged as divergent.
pub const DIVERGENCE_THRESHOLD: f64 = TAU;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub eps: f64,
    /// Frobenius norms `‖R_k(ε) − R_exact(ε)‖`, one per requested order.
    pub errors: Vec<f64>,
    /// Spread of the principal eigenphases of `R_exact/i` (always below 2π).
    pub principal_spread: f64,
    /// Spread of `R/i` on the branch picked by the leading term `ε(P+Q)`.
    pub branch_spread: f64,
    pub diverged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub dim: usize,
    pub orders: Vec<usize>,
    pub threshold: f64,
    pub commuting: bool,
    pub rows: Vec<ConvergenceRow>,
    /// Smallest grid `ε` whose branch spread reaches the threshold.
    pub divergence_onset: Option<f64>,
}

impl ConvergenceReport {
    /// `errors[order]` across the grid.
    pub fn errors_for(&self, order: usize) -> Option<Vec<f64>> {
        let k = self.orders.iter().position(|&o| o == order)?;
        Some(self.rows.iter().map(|r| r.errors[k]).collect())
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("eps");
        for k in &self.orders {
            out.push_str(&format!(",error_order_{k}"));
        }
        out.push_str(",principal_spread,branch_spread,diverged\n");
        for r in &self.rows {
            out.push_str(&format!("{:e}", r.eps));
            for e in &r.errors {
                out.push_str(&format!(",{e:e}"));
            }
            out.push_str(&format!(
                ",{:e},{:e},{}\n",
                r.principal_spread, r.branch_spread, r.diverged
            ));
        }
        out
    }
}

/// `e^{εP}` for anti-Hermitian `P`, reusing one eigendecomposition of `iP`.
struct ExpRay {
    eig: HermitianEigen,
}

impl ExpRay {
    fn new(p: &CMatrix) -> Result<Self> {
        Ok(Self {
            eig: HermitianEigen::new(&(p * I))?,
        })
    }

    /// `iP = V diag(λ) V†`, so `e^{εP} = V diag(e^{−iελ}) V†`.
    fn at(&self, eps: f64) -> CMatrix {
        self.eig.apply(|l| Complex64::from_polar(1.0, -eps * l))
    }
}

fn spread(values: &[f64]) -> f64 {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    hi - lo
}

/// Nearest representative of `theta + 2πm` to `target`.
fn lift_near(theta: f64, target: f64) -> f64 {
    theta + TAU * ((target - theta) / TAU).round()
}

/// Eigenphases of `U` closer than this (on the circle) share a cluster.
const CLUSTER_TOL: f64 = 1e-8;

/// Logarithm of `U` on the branch selected by the leading BCH term.
///
/// Each eigenphase cluster of `U` is lifted by `2π` multiples to the
/// eigenvalues of `reference` compressed onto that cluster. Returns the
/// lifted phases (the spectrum of `R/i`) and the matching eigenvectors.
pub fn reference_branch_log(u: &CMatrix, reference: &CMatrix) -> Result<(Vec<f64>, CMatrix)> {
    let eig = UnitaryEigen::new(u)?;
    let n = eig.phases.len();
    // Phases are ascending in [0, 2π); start clusters after the widest gap
    // so no cluster straddles the cut.
    let gap_after = |i: usize| {
        let next = if i + 1 < n {
            eig.phases[i + 1]
        } else {
            eig.phases[0] + TAU
        };
        next - eig.phases[i]
    };
    let first = (0..n)
        .max_by(|&a, &b| gap_after(a).total_cmp(&gap_after(b)))
        .map_or(0, |i| (i + 1) % n);
    let order: Vec<usize> = (0..n).map(|k| (first + k) % n).collect();
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for (pos, &j) in order.iter().enumerate() {
        let joins = pos > 0 && gap_after(order[pos - 1]) < CLUSTER_TOL;
        match clusters.last_mut() {
            Some(cl) if joins => cl.push(j),
            _ => clusters.push(vec![j]),
        }
    }
    let mut phases = Vec::with_capacity(n);
    let mut vectors = CMatrix::zeros(n, n);
    for cl in clusters {
        let vc = CMatrix::from_fn(n, cl.len(), |r, k| eig.vectors[(r, cl[k])]);
        let compressed = vc.adjoint() * reference * &vc;
        let local = HermitianEigen::new(&compressed)?;
        let rotated = &vc * &local.vectors;
        let theta = eig.phases[cl[0]];
        for (k, &target) in local.values.iter().enumerate() {
            vectors.set_column(phases.len(), &rotated.column(k));
            phases.push(lift_near(theta, target));
        }
    }
    Ok((phases, vectors))
}

fn frobenius(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Runs the probe for anti-Hermitian `P`, `Q` over an ascending grid of
/// positive scales.
///
/// Commuting pairs are handled in closed form: `log(e^{εP}e^{εQ}) = ε(P+Q)`
/// whenever the spectrum of `ε(P+Q)/i` lies inside `(−π, π)`.
pub fn convergence_probe(p: &CMatrix, q: &CMatrix, eps_grid: &[f64], orders: &[usize]) -> Result<ConvergenceReport> {
    if p.nrows() != p.ncols() || p.shape() != q.shape() {
        return Err(Error::DimensionMismatch(p.nrows(), q.nrows()));
    }
    for &k in orders {
        check_order(k)?;
    }
    if eps_grid.is_empty() || eps_grid.iter().any(|e| !(e.is_finite() && *e > 0.0)) {
        return Err(Error::InvalidState(
            "scale grid must be non-empty, finite and positive".into(),
        ));
    }
    if eps_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidState("scale grid must be strictly ascending".into()));
    }
    let scale = max_abs(p).max(max_abs(q)).max(1.0);
    for m in [p, q] {
        if hermitian_deviation(&(m * I)) > 1e-12 * scale {
            return Err(Error::InvalidState("generators must be anti-Hermitian".into()));
        }
    }
    let dim = p.nrows();
    let commuting = max_abs(&commutator(p, q)) == 0.0;
    let pr = ExpRay::new(p)?;
    let qr = ExpRay::new(q)?;
    let generator = (p + q) * (-I);
    let sum_phases = if commuting {
        Some(HermitianEigen::new(&generator)?)
    } else {
        None
    };

    let mut rows = Vec::with_capacity(eps_grid.len());
    for &eps in eps_grid {
        let ps = p * c(eps);
        let qs = q * c(eps);
        let u = pr.at(eps) * qr.at(eps);
        let eig = UnitaryEigen::new(&u)?;
        let principal: Vec<f64> = eig.phases.iter().map(|&t| principal_phase(t)).collect();
        let closed_form = sum_phases
            .as_ref()
            .filter(|e| e.values.iter().all(|v| (eps * v).abs() < PI))
            .map(|_| &ps + &qs);
        let exact = closed_form.unwrap_or_else(|| eig.apply(|t| I * principal_phase(t)));
        let errors = orders
            .iter()
            .map(|&k| Ok(frobenius(&(bch_truncation(&ps, &qs, k)? - &exact))))
            .collect::<Result<Vec<f64>>>()?;
        let (lifted, _) = reference_branch_log(&u, &(&generator * c(eps)))?;
        let branch_spread = spread(&lifted);
        rows.push(ConvergenceRow {
            eps,
            errors,
            principal_spread: spread(&principal),
            branch_spread,
            diverged: branch_spread >= DIVERGENCE_THRESHOLD,
        });
    }
    let divergence_onset = rows.iter().find(|r| r.diverged).map(|r| r.eps);
    Ok(ConvergenceReport {
        dim,
        orders: orders.to_vec(),
        threshold: DIVERGENCE_THRESHOLD,
        commuting,
        rows,
        divergence_onset,
    })
}

/// Least-squares slope of `log10 err` against `log10 ε`.
pub fn log_log_slope(eps: &[f64], err: &[f64]) -> f64 {
    let xs: Vec<f64> = eps.iter().map(|e| e.log10()).collect();
    let ys: Vec<f64> = err.iter().map(|e| e.log10()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let num: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    num / den
}
