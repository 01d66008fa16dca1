//! Hamiltonian densities from the BCH series and the exact Hamiltonian
//! `U = e^{−2iH}`.
//!
//! Substituting `P = −i a`, `Q = −i b` and `R = −2i H` into the series turns
//! each degree into a lattice sum of local commutators:
//!
//! ```text
//! H₁(x) = ½ a(x) + ½ b(x)
//! H₂(x) = −(i/4) Σ_y [a(x), b(y)]
//! H₃(x) = −(1/24) Σ_{y₁,y₂} [a(x) − b(x), [a(y₁), b(y₂)]]
//! H₄(x) = (i/48) Σ [[a(x), [a(y₁), b(y₂)]], b(y₃)]
//! ```
//!
//! A multi-site term belongs to the site of its first generator argument.
//! Sums only run over site tuples whose commutators can be non-zero.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::basis::OntologicalBasis;
use crate::bch::{bch_truncation, check_order};
use crate::error::{Error, Result};
use crate::lattice::LatticeSpec;
use crate::lift::{build_evolution, LocalGenerators};
use crate::linalg::{c, commutator, hermitian_deviation, max_abs, max_abs_diff, CMatrix, UnitaryEigen, I};
use crate::operator::{DenseOperator, OperatorJson};
use crate::rule::Rule;

/// Eigenphases closer than this to the branch cut are placed at zero.
pub const BRANCH_SNAP: f64 = 1e-10;

/// Per-site, per-degree local Hamiltonian terms.
#[derive(Debug, Clone)]
pub struct DensityTerms {
    pub order: usize,
    /// `(site, degree) → H_degree(site)`; absent entries vanish identically.
    pub terms: BTreeMap<(usize, usize), CMatrix>,
    dim: usize,
}

impl DensityTerms {
    /// `Σ_{j ≤ order} H_j(site)`.
    pub fn density_at(&self, site: usize) -> CMatrix {
        self.terms
            .range((site, 1)..=(site, self.order))
            .fold(CMatrix::zeros(self.dim, self.dim), |acc, (_, m)| acc + m)
    }

    /// Sum of every local term: the truncated Hamiltonian.
    pub fn total(&self) -> CMatrix {
        self.terms
            .values()
            .fold(CMatrix::zeros(self.dim, self.dim), |acc, m| acc + m)
    }

    pub fn sites(&self) -> BTreeSet<usize> {
        self.terms.keys().map(|&(s, _)| s).collect()
    }
}

fn adjacent(spec: &LatticeSpec, x: usize) -> Vec<usize> {
    let mut n = spec.neighbors(x);
    n.sort_unstable();
    n.dedup();
    n
}

fn within(spec: &LatticeSpec, x: usize, sites: &[usize], radius: usize) -> Vec<usize> {
    sites
        .iter()
        .copied()
        .filter(|&y| spec.distance(x, y) <= radius)
        .collect()
}

/// Local terms of the BCH Hamiltonian through `order`.
pub fn hamiltonian_density(gens: &LocalGenerators, spec: &LatticeSpec, order: usize) -> Result<DensityTerms> {
    check_order(order)?;
    let dim = gens.even.first().map(|(_, m)| m.nrows()).unwrap_or(0);
    let a: BTreeMap<usize, &CMatrix> = gens.even.iter().map(|(s, m)| (*s, m)).collect();
    let b: BTreeMap<usize, &CMatrix> = gens.odd.iter().map(|(s, m)| (*s, m)).collect();
    let odd_sites: Vec<usize> = b.keys().copied().collect();

    // [a(y1), b(y2)] for adjacent pairs, computed once.
    let mut ab: BTreeMap<(usize, usize), CMatrix> = BTreeMap::new();
    if order >= 2 {
        for (&y1, a1) in &a {
            for y2 in adjacent(spec, y1) {
                ab.insert((y1, y2), commutator(a1, b[&y2]));
            }
        }
    }

    let mut terms = BTreeMap::new();
    for (&x, ax) in &a {
        terms.insert((x, 1), *ax * c(0.5));
    }
    for (&x, bx) in &b {
        terms.insert((x, 1), *bx * c(0.5));
    }

    if order >= 2 {
        for &x in a.keys() {
            let sum = adjacent(spec, x)
                .iter()
                .fold(CMatrix::zeros(dim, dim), |acc, y| acc + &ab[&(x, *y)]);
            terms.insert((x, 2), sum * (I * -0.25));
        }
    }

    if order >= 3 {
        for (&x, ax) in &a {
            // a(x) fails to commute with [a(y1), b(y2)] only through b(y2).
            let inner = ab
                .iter()
                .filter(|((_, y2), _)| spec.distance(x, *y2) == 1)
                .fold(CMatrix::zeros(dim, dim), |acc, (_, m)| acc + m);
            terms.insert((x, 3), commutator(ax, &inner) * c(-1.0 / 24.0));
        }
        for (&x, bx) in &b {
            let inner = ab
                .iter()
                .filter(|((y1, _), _)| spec.distance(x, *y1) == 1)
                .fold(CMatrix::zeros(dim, dim), |acc, (_, m)| acc + m);
            // Generator slot is a(x) − b(x) = −b(x) on odd sites.
            terms.insert((x, 3), commutator(bx, &inner) * c(1.0 / 24.0));
        }
    }

    if order >= 4 {
        for (&x, ax) in &a {
            let inner = ab
                .iter()
                .filter(|((_, y2), _)| spec.distance(x, *y2) == 1)
                .fold(CMatrix::zeros(dim, dim), |acc, (_, m)| acc + m);
            let nested = commutator(ax, &inner);
            let b_near = within(spec, x, &odd_sites, 3)
                .iter()
                .fold(CMatrix::zeros(dim, dim), |acc, y| acc + b[y]);
            terms.insert((x, 4), commutator(&nested, &b_near) * (I / 48.0));
        }
    }

    Ok(DensityTerms { order, terms, dim })
}

/// `H_k` from the global series: `R_k(−ia, −ib) = −2i H_k`.
pub fn global_truncated_hamiltonian(a_total: &CMatrix, b_total: &CMatrix, order: usize) -> Result<CMatrix> {
    let r = bch_truncation(&(a_total * -I), &(b_total * -I), order)?;
    Ok(r * (I * 0.5))
}

/// Exact Hamiltonian with `e^{−2iH} = U`.
#[derive(Debug, Clone)]
pub struct ExactHamiltonian {
    pub matrix: CMatrix,
    /// Eigenvalues in the order the branch offsets were applied (ascending
    /// principal value).
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: CMatrix,
    pub branch_offsets: Vec<i64>,
}

/// Eigendecomposes `U` and assigns each eigenvector the energy `φ/2`, where
/// `e^{−iφ}` is its eigenvalue and `φ ∈ [0, 2π) + 2π·offset`.
///
/// Offsets are indexed by eigenpair in ascending principal `φ`; an empty
/// slice selects the principal branch, giving energies in `[0, π)`.
pub fn exact_hamiltonian(u: &CMatrix, branch_offsets: &[i64]) -> Result<ExactHamiltonian> {
    let eig = UnitaryEigen::new(u)?;
    let n = u.nrows();
    if !branch_offsets.is_empty() && branch_offsets.len() != n {
        return Err(Error::InvalidState(format!(
            "branch offsets need {n} entries, got {}",
            branch_offsets.len()
        )));
    }
    let mut pairs: Vec<(f64, usize)> = eig
        .phases
        .iter()
        .enumerate()
        .map(|(k, &theta)| {
            let mut phi = (-theta).rem_euclid(TAU);
            if phi < BRANCH_SNAP || TAU - phi < BRANCH_SNAP {
                phi = 0.0;
            }
            (phi, k)
        })
        .collect();
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
    let eigenvalues: Vec<f64> = pairs
        .iter()
        .enumerate()
        .map(|(j, &(phi, _))| (phi + TAU * branch_offsets.get(j).copied().unwrap_or(0) as f64) / 2.0)
        .collect();
    let vectors = CMatrix::from_fn(n, n, |r, col| eig.vectors[(r, pairs[col].1)]);
    let scaled = CMatrix::from_fn(n, n, |r, col| vectors[(r, col)] * eigenvalues[col]);
    let matrix = crate::linalg::hermitian_part(&(scaled * vectors.adjoint()));
    Ok(ExactHamiltonian {
        matrix,
        eigenvalues,
        eigenvectors: vectors,
        branch_offsets: if branch_offsets.is_empty() {
            vec![0; n]
        } else {
            branch_offsets.to_vec()
        },
    })
}

/// Diagnostics recorded while assembling a bundle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BundleChecks {
    /// `max |Σ local terms − global truncation|`.
    pub assembly_max_diff: f64,
    /// Scale the assembly difference is judged against.
    pub assembly_scale: f64,
    /// `max |e^{−2iH_exact} − U|`.
    pub reconstruction_max_diff: f64,
    /// `max |[H_exact, U]|`.
    pub exact_commutator_with_u: f64,
    pub truncated_hermitian_deviation: f64,
    pub exact_hermitian_deviation: f64,
}

impl BundleChecks {
    pub fn assembly_ok(&self) -> bool {
        self.assembly_max_diff <= ASSEMBLY_TOL * self.assembly_scale
    }

    pub fn reconstruction_ok(&self) -> bool {
        self.reconstruction_max_diff <= RECONSTRUCTION_TOL && self.exact_commutator_with_u <= RECONSTRUCTION_TOL
    }
}

/// Relative tolerance on the assembly identity.
pub const ASSEMBLY_TOL: f64 = 1e-12;
/// Absolute tolerance on `e^{−2iH} = U` and `[H, U] = 0`.
pub const RECONSTRUCTION_TOL: f64 = 1e-10;

/// Everything derived from one (lattice, rule, order) instance.
#[derive(Debug, Clone)]
pub struct HamiltonianBundle {
    pub order: usize,
    pub density: DensityTerms,
    pub h_truncated: CMatrix,
    pub h_global: CMatrix,
    pub exact: ExactHamiltonian,
    pub u: CMatrix,
    pub checks: BundleChecks,
}

impl HamiltonianBundle {
    pub fn build(
        basis: &OntologicalBasis,
        rule: &Rule,
        order: usize,
        generator_offsets: &[i64],
        branch_offsets: &[i64],
    ) -> Result<Self> {
        check_order(order)?;
        let gens = LocalGenerators::build(basis, rule, generator_offsets)?;
        let density = hamiltonian_density(&gens, basis.spec(), order)?;
        let h_truncated = density.total();
        let h_global = global_truncated_hamiltonian(&gens.a_total(), &gens.b_total(), order)?;
        let u = build_evolution(basis, rule)?.u.matrix;
        let exact = exact_hamiltonian(&u, branch_offsets)?;
        let reconstructed = crate::linalg::exp_i_hermitian(&exact.matrix, 2.0)?;
        let checks = BundleChecks {
            assembly_max_diff: max_abs_diff(&h_truncated, &h_global),
            assembly_scale: max_abs(&h_global).max(1.0),
            reconstruction_max_diff: max_abs_diff(&reconstructed, &u),
            exact_commutator_with_u: max_abs(&commutator(&exact.matrix, &u)),
            truncated_hermitian_deviation: hermitian_deviation(&h_truncated),
            exact_hermitian_deviation: hermitian_deviation(&exact.matrix),
        };
        Ok(Self {
            order,
            density,
            h_truncated,
            h_global,
            exact,
            u,
            checks,
        })
    }

    /// Fails with `InvariantViolated` unless the assembly identity and the
    /// reconstruction of `U` both hold.
    pub fn verify(&self) -> Result<()> {
        if !self.checks.assembly_ok() {
            return Err(Error::InvariantViolated(format!(
                "assembly identity off by {:e} (scale {:e})",
                self.checks.assembly_max_diff, self.checks.assembly_scale
            )));
        }
        if !self.checks.reconstruction_ok() {
            return Err(Error::InvariantViolated(format!(
                "exact Hamiltonian reconstruction off by {:e}, [H, U] = {:e}",
                self.checks.reconstruction_max_diff, self.checks.exact_commutator_with_u
            )));
        }
        Ok(())
    }

    pub fn to_report(&self, basis: &OntologicalBasis, include_local_terms: bool) -> BundleReport {
        let json = |m: &CMatrix| {
            DenseOperator::new(m.clone())
                .expect("square and finite")
                .to_json(basis.convention())
        };
        BundleReport {
            order: self.order,
            dim: basis.dim(),
            convention: basis.convention().to_string(),
            energy_units: "inverse single time steps (hbar = 1, dt = 1)".into(),
            branch_offsets: self.exact.branch_offsets.clone(),
            exact_eigenvalues: self.exact.eigenvalues.clone(),
            checks: self.checks.clone(),
            local_terms: if include_local_terms {
                self.density
                    .terms
                    .iter()
                    .map(|(&(site, degree), m)| LocalTermJson {
                        site,
                        degree,
                        operator: json(m),
                    })
                    .collect()
            } else {
                Vec::new()
            },
            h_truncated: json(&self.h_truncated),
            h_exact: json(&self.exact.matrix),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LocalTermJson {
    pub site: usize,
    pub degree: usize,
    pub operator: OperatorJson,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BundleReport {
    pub order: usize,
    pub dim: usize,
    pub convention: String,
    pub energy_units: String,
    pub branch_offsets: Vec<i64>,
    pub exact_eigenvalues: Vec<f64>,
    pub checks: BundleChecks,
    pub local_terms: Vec<LocalTermJson>,
    pub h_truncated: OperatorJson,
    pub h_exact: OperatorJson,
}

/// True when `op` acts as the identity on the tensor factor of `site`.
pub fn acts_trivially_on(basis: &OntologicalBasis, op: &CMatrix, site: usize, tol: f64) -> bool {
    let n = basis.modulus();
    let dim = basis.dim();
    for i in 0..dim {
        if basis.digit(i, site) != 0 {
            continue;
        }
        for j in 0..dim {
            if basis.digit(j, site) != 0 {
                continue;
            }
            let base = op[(i, j)];
            for u in 0..n {
                for v in 0..n {
                    let z = op[(basis.with_digit(i, site, u), basis.with_digit(j, site, v))];
                    let expected = if u == v { base } else { Complex64::new(0.0, 0.0) };
                    if (z - expected).norm() > tol {
                        return false;
                    }
                }
            }
        }
    }
    true
}

/// Sites on which `op` acts non-trivially.
pub fn support(basis: &OntologicalBasis, op: &CMatrix, tol: f64) -> Vec<usize> {
    (0..basis.spec().cell_count())
        .filter(|&s| !acts_trivially_on(basis, op, s, tol))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lift::{build_site_update, translation_operator};
    use crate::linalg::hermitian_eigenvalues;
    use crate::rule::RuleSpec;

    fn instance(len: usize, n: u32, rule: &RuleSpec) -> (OntologicalBasis, Rule) {
        let spec = LatticeSpec::ring(len, n).unwrap();
        (
            OntologicalBasis::new(&spec, 4096).unwrap(),
            rule.compile(&spec).unwrap(),
        )
    }

    #[test]
    fn zero_rule_gives_zero_terms() {
        let spec = LatticeSpec::ring(4, 2).unwrap();
        let (basis, rule) = instance(4, 2, &RuleSpec::zero(&spec).unwrap());
        let bundle = HamiltonianBundle::build(&basis, &rule, 4, &[], &[]).unwrap();
        assert!(bundle.density.terms.values().all(|m| max_abs(m) == 0.0));
        assert_eq!(max_abs(&bundle.exact.matrix), 0.0);
    }

    #[test]
    fn assembly_identity_all_orders() {
        for n in [2u32, 3] {
            let (basis, rule) = instance(4, n, &RuleSpec::SeededTable { seed: 17 });
            for order in 1..=4 {
                let bundle = HamiltonianBundle::build(&basis, &rule, order, &[], &[]).unwrap();
                assert!(bundle.checks.assembly_ok(), "n={n} order={order} {:?}", bundle.checks);
                bundle.verify().unwrap();
            }
        }
    }

    #[test]
    fn second_order_matches_printed_density() {
        let (basis, rule) = instance(4, 2, &RuleSpec::LinearSum);
        let gens = LocalGenerators::build(&basis, &rule, &[]).unwrap();
        let d = hamiltonian_density(&gens, basis.spec(), 2).unwrap();
        let expected = commutator(&gens.a_total(), &gens.b_total()) * (I * -0.25);
        let h2: CMatrix = d
            .terms
            .iter()
            .filter(|((_, deg), _)| *deg == 2)
            .fold(CMatrix::zeros(16, 16), |acc, (_, m)| acc + m);
        assert!(max_abs_diff(&h2, &expected) < 1e-12);
    }

    #[test]
    fn local_terms_are_hermitian_and_local() {
        let (basis, rule) = instance(8, 2, &RuleSpec::SeededTable { seed: 3 });
        let gens = LocalGenerators::build(&basis, &rule, &[]).unwrap();
        let d = hamiltonian_density(&gens, basis.spec(), 3).unwrap();
        for (&(site, degree), m) in &d.terms {
            assert!(hermitian_deviation(m) < 1e-12);
            for s in support(&basis, m, 1e-12) {
                assert!(
                    basis.spec().distance(site, s) <= degree,
                    "site {site} degree {degree} touches {s}"
                );
            }
        }
    }

    #[test]
    fn far_densities_commute_exactly() {
        let (basis, rule) = instance(6, 2, &RuleSpec::SeededTable { seed: 12 });
        let gens = LocalGenerators::build(&basis, &rule, &[]).unwrap();
        let d = hamiltonian_density(&gens, basis.spec(), 1).unwrap();
        let h0 = d.density_at(0);
        let h3 = d.density_at(3);
        assert_eq!(max_abs(&commutator(&h0, &h3)), 0.0);
        assert!(max_abs(&commutator(&h0, &d.density_at(1))) > 1e-6);
    }

    #[test]
    fn exact_hamiltonian_of_identity() {
        let ex = exact_hamiltonian(&CMatrix::identity(5, 5), &[]).unwrap();
        assert_eq!(max_abs(&ex.matrix), 0.0);
    }

    #[test]
    fn principal_energies_lie_in_half_open_range() {
        let (basis, rule) = instance(4, 3, &RuleSpec::SeededTable { seed: 2 });
        let b = HamiltonianBundle::build(&basis, &rule, 1, &[], &[]).unwrap();
        assert!(b
            .exact
            .eigenvalues
            .iter()
            .all(|&e| (0.0..std::f64::consts::PI).contains(&e)));
        assert!(b.checks.reconstruction_ok(), "{:?}", b.checks);
    }

    #[test]
    fn branch_offsets_shift_by_multiples_of_pi() {
        let (basis, rule) = instance(4, 2, &RuleSpec::SeededTable { seed: 6 });
        let u = build_evolution(&basis, &rule).unwrap().u.matrix;
        let base = exact_hamiltonian(&u, &[]).unwrap();
        let offsets: Vec<i64> = (0..16).map(|k| (k % 3) as i64 - 1).collect();
        let shifted = exact_hamiltonian(&u, &offsets).unwrap();
        for (k, (a, b)) in base.eigenvalues.iter().zip(&shifted.eigenvalues).enumerate() {
            assert!((b - a - std::f64::consts::PI * offsets[k] as f64).abs() < 1e-12);
        }
        let rec = crate::linalg::exp_i_hermitian(&shifted.matrix, 2.0).unwrap();
        assert!(max_abs_diff(&rec, &u) < 1e-10);
        assert!(exact_hamiltonian(&u, &[1, 2]).is_err());
    }

    #[test]
    fn ground_state_bound_holds() {
        let (basis, rule) = instance(4, 2, &RuleSpec::SeededTable { seed: 5 });
        let b = HamiltonianBundle::build(&basis, &rule, 3, &[], &[]).unwrap();
        let e0 = hermitian_eigenvalues(&b.h_truncated).unwrap()[0];
        let bound: f64 = b
            .density
            .sites()
            .iter()
            .map(|&s| hermitian_eigenvalues(&b.density.density_at(s)).unwrap()[0])
            .sum();
        assert!(e0 >= bound - 1e-12);
    }

    #[test]
    fn truncated_hamiltonian_is_translation_invariant() {
        let (basis, rule) = instance(6, 2, &RuleSpec::SeededTable { seed: 9 });
        let t = translation_operator(&basis, &[2]).unwrap().matrix;
        for order in 1..=4 {
            let b = HamiltonianBundle::build(&basis, &rule, order, &[], &[]).unwrap();
            assert!(max_abs(&commutator(&b.h_truncated, &t)) < 1e-10, "order {order}");
        }
    }

    #[test]
    fn exact_hamiltonian_generates_site_update_free_evolution() {
        // With Q ≡ 0 except one even site, U = A(0) and the exact log agrees
        // with the single-site update.
        let (basis, rule) = instance(4, 2, &RuleSpec::LinearSum);
        let a0 = build_site_update(&basis, &rule, 0).unwrap().matrix;
        let ex = exact_hamiltonian(&a0, &[]).unwrap();
        let rec = crate::linalg::exp_i_hermitian(&ex.matrix, 2.0).unwrap();
        assert!(max_abs_diff(&rec, &a0) < 1e-12);
    }
}
