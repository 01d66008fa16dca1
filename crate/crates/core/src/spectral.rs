//! Spectra, vacuum structure and classical oracles for lifted automata.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::automaton::Automaton;
use crate::basis::OntologicalBasis;
use crate::error::{Error, Result};
use crate::hamiltonian::HamiltonianBundle;
use crate::lift::{build_evolution, site_value_beable};
use crate::linalg::{hermitian_eigenvalues, max_abs, CMatrix, CVector, HermitianEigen};
use crate::operator::DenseOperator;
use crate::rule::Rule;

/// Eigenvalues closer than this to the lowest one count as ground states.
pub const DEGENERACY_TOL: f64 = 1e-8;

/// Cycle structure of the classical epoch map over the whole basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleOracle {
    /// One entry per cycle, in order of the cycle's smallest basis index.
    pub cycle_lengths: Vec<usize>,
    /// `∪ {2πm/c : m = 0..c}` over the cycles, ascending in `[0, 2π)`.
    pub predicted_phases: Vec<f64>,
}

impl CycleOracle {
    pub fn dim(&self) -> usize {
        self.cycle_lengths.iter().sum()
    }
}

/// Runs `step_epoch` from every basis configuration, claiming each one
/// exactly once.
pub fn classical_cycle_decomposition(basis: &OntologicalBasis, rule: &Rule) -> Result<CycleOracle> {
    if rule.modulus() != basis.modulus() || rule.arity() != basis.spec().neighbor_count() {
        return Err(Error::InvalidRule("rule does not match the lattice".into()));
    }
    let automaton = Automaton::with_rule(basis.spec(), rule.clone());
    let dim = basis.dim();
    let mut visited = vec![false; dim];
    let mut cycle_lengths = Vec::new();
    for start in 0..dim {
        if visited[start] {
            continue;
        }
        let mut len = 0;
        let mut state = basis.decode_state(start);
        loop {
            let idx = basis.encode_state(&state);
            if visited[idx] {
                if idx != start {
                    return Err(Error::InvariantViolated(format!(
                        "epoch map is not a permutation: state {idx} reached twice"
                    )));
                }
                break;
            }
            visited[idx] = true;
            len += 1;
            state = automaton.step_epoch(&state);
        }
        cycle_lengths.push(len);
    }
    let mut predicted_phases: Vec<f64> = cycle_lengths
        .iter()
        .flat_map(|&c| (0..c).map(move |m| TAU * m as f64 / c as f64))
        .collect();
    predicted_phases.sort_by(f64::total_cmp);
    Ok(CycleOracle {
        cycle_lengths,
        predicted_phases,
    })
}

/// Bottleneck distance between two phase multisets on the circle.
///
/// On the circle the optimal bottleneck matching pairs the sorted lists up
/// to a cyclic shift, so every shift is tried.
pub fn phase_multiset_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch(a.len(), b.len()));
    }
    let sorted = |v: &[f64]| {
        let mut s: Vec<f64> = v.iter().map(|t| t.rem_euclid(TAU)).collect();
        s.sort_by(f64::total_cmp);
        s
    };
    let (a, b) = (sorted(a), sorted(b));
    let n = a.len();
    let circ = |x: f64, y: f64| {
        let d = (x - y).rem_euclid(TAU);
        d.min(TAU - d)
    };
    let mut best = if n == 0 { 0.0 } else { f64::INFINITY };
    for shift in 0..n {
        let mut worst: f64 = 0.0;
        for j in 0..n {
            worst = worst.max(circ(a[j], b[(j + shift) % n]));
            if worst >= best {
                break;
            }
        }
        best = best.min(worst);
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub dim: usize,
    pub order: usize,
    pub energy_units: String,
    pub exact_eigenvalues: Vec<f64>,
    pub truncated_eigenvalues: Vec<f64>,
    /// Lowest eigenvalue of the exact Hamiltonian.
    pub ground_energy: f64,
    pub ground_degeneracy: usize,
    /// Distance from the ground energy to the next distinct level.
    pub spectral_gap: Option<f64>,
    pub truncated_ground_energy: f64,
    /// `‖H v − λ v‖` per eigenpair, in the order of the eigenvalue lists.
    pub exact_residuals: Vec<f64>,
    pub truncated_residuals: Vec<f64>,
    /// `1e-9·‖H‖` for each Hamiltonian.
    pub exact_residual_bound: f64,
    pub truncated_residual_bound: f64,
    /// `Σ_x min-eig(H(x))` over the local densities of the truncation.
    pub density_bound: f64,
    pub density_bound_holds: bool,
}

impl SpectrumReport {
    /// `index,exact,truncated` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("index,exact,truncated\n");
        for (i, (e, t)) in self
            .exact_eigenvalues
            .iter()
            .zip(&self.truncated_eigenvalues)
            .enumerate()
        {
            out.push_str(&format!("{i},{e:e},{t:e}\n"));
        }
        out
    }
}

fn residuals(h: &CMatrix, values: &[f64], vectors: &CMatrix) -> Vec<f64> {
    values
        .iter()
        .enumerate()
        .map(|(k, &l)| {
            let v = vectors.column(k);
            (h * v - v * crate::linalg::c(l)).norm()
        })
        .collect()
}

fn spectral_norm_bound(values: &[f64]) -> f64 {
    values.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Spectra of both Hamiltonians plus the local lower bound on the
/// truncated ground energy. Fails if an invariant of the report breaks.
pub fn spectrum(bundle: &HamiltonianBundle) -> Result<SpectrumReport> {
    let exact = &bundle.exact;
    let mut order: Vec<usize> = (0..exact.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| exact.eigenvalues[a].total_cmp(&exact.eigenvalues[b]));
    let exact_values: Vec<f64> = order.iter().map(|&k| exact.eigenvalues[k]).collect();
    let n = exact_values.len();
    let exact_vectors = CMatrix::from_fn(n, n, |r, col| exact.eigenvectors[(r, order[col])]);
    let exact_residuals = residuals(&exact.matrix, &exact_values, &exact_vectors);

    let trunc = HermitianEigen::new(&bundle.h_truncated)?;
    let truncated_residuals = residuals(&bundle.h_truncated, &trunc.values, &trunc.vectors);

    let ground_energy = exact_values[0];
    let ground_degeneracy = exact_values
        .iter()
        .take_while(|&&e| e - ground_energy <= DEGENERACY_TOL)
        .count();
    let spectral_gap = exact_values.get(ground_degeneracy).map(|e| e - ground_energy);

    let mut density_bound = 0.0;
    for site in bundle.density.sites() {
        density_bound += hermitian_eigenvalues(&bundle.density.density_at(site))?[0];
    }
    let truncated_ground_energy = trunc.values[0];
    let scale = max_abs(&bundle.h_truncated).max(1.0);
    let density_bound_holds = truncated_ground_energy >= density_bound - 1e-10 * scale;

    let exact_residual_bound = 1e-9 * spectral_norm_bound(&exact_values).max(1.0);
    let truncated_residual_bound = 1e-9 * spectral_norm_bound(&trunc.values).max(1.0);
    let report = SpectrumReport {
        dim: n,
        order: bundle.order,
        energy_units: "inverse single time steps (hbar = 1, dt = 1)".into(),
        exact_eigenvalues: exact_values,
        truncated_eigenvalues: trunc.values.clone(),
        ground_energy,
        ground_degeneracy,
        spectral_gap,
        truncated_ground_energy,
        exact_residuals,
        truncated_residuals,
        exact_residual_bound,
        truncated_residual_bound,
        density_bound,
        density_bound_holds,
    };
    if !report.density_bound_holds {
        return Err(Error::InvariantViolated(format!(
            "truncated ground energy {} below the density bound {}",
            report.truncated_ground_energy, report.density_bound
        )));
    }
    let worst = |r: &[f64]| r.iter().copied().fold(0.0, f64::max);
    if worst(&report.exact_residuals) > report.exact_residual_bound
        || worst(&report.truncated_residuals) > report.truncated_residual_bound
    {
        return Err(Error::InvariantViolated("eigenpair residual above 1e-9·‖H‖".into()));
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntanglementReport {
    pub cut: Vec<usize>,
    pub complement: Vec<usize>,
    pub ground_energy: f64,
    pub ground_degeneracy: usize,
    pub degenerate: bool,
    /// How the state was picked from the ground space.
    pub representative: String,
    /// Basis index whose projection defines the representative.
    pub representative_seed: usize,
    pub entropy_nats: f64,
    /// `min(|A|, |B|)·ln N`.
    pub max_entropy_nats: f64,
    pub log_base: String,
}

/// Entanglement entropy of the exact vacuum across `cut | complement`.
///
/// The ground space of `H_exact` is usually degenerate. The representative
/// is the normalised projection onto it of the lowest-index basis state
/// with a non-vanishing projection; it does not depend on how the
/// eigensolver chose its basis inside the ground space.
pub fn vacuum_entanglement(
    bundle: &HamiltonianBundle,
    basis: &OntologicalBasis,
    cut: &[usize],
) -> Result<EntanglementReport> {
    let complement = basis.complement(cut)?;
    if cut.is_empty() || complement.is_empty() {
        return Err(Error::InvalidCut("both sides of the cut must be non-empty".into()));
    }
    let dim = basis.dim();
    if bundle.exact.eigenvectors.nrows() != dim {
        return Err(Error::DimensionMismatch(bundle.exact.eigenvectors.nrows(), dim));
    }
    let exact = &bundle.exact;
    let e0 = exact.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    let ground: Vec<usize> = (0..dim)
        .filter(|&k| exact.eigenvalues[k] - e0 <= DEGENERACY_TOL)
        .collect();
    let vg = CMatrix::from_fn(dim, ground.len(), |r, k| exact.eigenvectors[(r, ground[k])]);

    // P e_i = V_g (V_g† e_i): the coefficients are conjugated row i of V_g.
    let (seed, psi) = (0..dim)
        .find_map(|i| {
            let coeffs: CVector = vg.row(i).adjoint();
            let v = &vg * coeffs;
            let norm = v.norm();
            (norm > 1e-6).then(|| (i, v / crate::linalg::c(norm)))
        })
        .ok_or_else(|| Error::InvariantViolated("empty ground space".into()))?;

    let n = basis.modulus() as usize;
    let a_dim = n.pow(cut.len() as u32);
    let b_dim = n.pow(complement.len() as u32);
    let index_of = |j: usize, sites: &[usize]| {
        sites
            .iter()
            .rev()
            .fold(0usize, |acc, &s| acc * n + basis.digit(j, s) as usize)
    };
    let mut m = CMatrix::zeros(a_dim, b_dim);
    for j in 0..dim {
        m[(index_of(j, cut), index_of(j, &complement))] += psi[j];
    }
    let rho = &m * m.adjoint();
    let entropy_nats = hermitian_eigenvalues(&rho)?
        .into_iter()
        .filter(|&p| p > 1e-15)
        .map(|p| -p * p.ln())
        .sum::<f64>()
        .max(0.0);
    Ok(EntanglementReport {
        cut: cut.to_vec(),
        complement: complement.clone(),
        ground_energy: e0,
        ground_degeneracy: ground.len(),
        degenerate: ground.len() > 1,
        representative: "normalised projection of the lowest-index basis state onto the ground space".into(),
        representative_seed: seed,
        entropy_nats,
        max_entropy_nats: cut.len().min(complement.len()) as f64 * (n as f64).ln(),
        log_base: "e".into(),
    })
}

/// `U^{−k} B U^{k}` for the site-value beable `B`; negative `k` runs the
/// evolution backwards.
///
/// For a permutation `U|j⟩ = |σ(j)⟩`, conjugation is the index relabelling
/// `(U† M U)[r, c] = M[σ(r), σ(c)]`, which keeps every entry exact.
pub fn heisenberg_beable(basis: &OntologicalBasis, rule: &Rule, site: usize, epochs: i64) -> Result<DenseOperator> {
    let beable = site_value_beable(basis, site)?;
    let images = build_evolution(basis, rule)?.u_images;
    let dim = basis.dim();
    let step: Vec<usize> = if epochs >= 0 {
        images
    } else {
        let mut inv = vec![0; dim];
        for (j, &img) in images.iter().enumerate() {
            inv[img] = j;
        }
        inv
    };
    let mut m = beable.matrix;
    for _ in 0..epochs.unsigned_abs() {
        m = CMatrix::from_fn(dim, dim, |r, col| m[(step[r], step[col])]);
    }
    DenseOperator::new(m)
}

/// `index,eigenvalue` rows.
pub fn eigenvalue_csv(values: &[f64]) -> String {
    let mut out = String::from("index,eigenvalue\n");
    for (i, v) in values.iter().enumerate() {
        out.push_str(&format!("{i},{v:e}\n"));
    }
    out
}
