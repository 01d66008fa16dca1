//! Permutation evolution operators and their local generators.
//!
//! `A(x)` (even `x`) and `B(x)` (odd `x`) shift the value at `x` by
//! `Q(neighbours)`; `A`, `B` are the products over each sublattice and
//! `U = A·B`. The generators `a(x) = P(x)·Q(neighbours)` use the shift
//! generator `P` with `e^{iP}|X⟩ = |X − 1 mod N⟩`, so `A(x) = e^{−i a(x)}`.

use std::f64::consts::TAU;

use num_complex::Complex64;

use crate::basis::OntologicalBasis;
use crate::error::{Error, Result};
use crate::linalg::{c, CMatrix};
use crate::operator::DenseOperator;
use crate::rule::Rule;

fn check_site(basis: &OntologicalBasis, site: usize) -> Result<()> {
    if site >= basis.spec().cell_count() {
        return Err(Error::InvalidSite {
            site: vec![site as i64],
            extents: basis.spec().extents().to_vec(),
        });
    }
    Ok(())
}

fn check_rule(basis: &OntologicalBasis, rule: &Rule) -> Result<()> {
    if rule.modulus() != basis.modulus() || rule.arity() != basis.spec().neighbor_count() {
        return Err(Error::InvalidRule(format!(
            "rule (N={}, arity {}) does not match lattice (N={}, arity {})",
            rule.modulus(),
            rule.arity(),
            basis.modulus(),
            basis.spec().neighbor_count()
        )));
    }
    Ok(())
}

/// `Q` evaluated on the neighbours of `site` in basis state `index`.
fn increment(basis: &OntologicalBasis, rule: &Rule, nbrs: &[usize], index: usize, buf: &mut Vec<u32>) -> u32 {
    buf.clear();
    buf.extend(nbrs.iter().map(|&s| basis.digit(index, s)));
    rule.eval(buf)
}

/// Images of every basis state under the single-site update at `site`.
pub fn site_update_images(basis: &OntologicalBasis, rule: &Rule, site: usize) -> Result<Vec<usize>> {
    check_site(basis, site)?;
    check_rule(basis, rule)?;
    let n = basis.modulus();
    let nbrs = basis.spec().neighbors(site);
    let mut buf = Vec::with_capacity(nbrs.len());
    Ok((0..basis.dim())
        .map(|j| {
            let q = increment(basis, rule, &nbrs, j, &mut buf);
            basis.with_digit(j, site, (basis.digit(j, site) + q) % n)
        })
        .collect())
}

/// 0/1 matrix with `M[images[j], j] = 1`.
pub fn permutation_matrix(images: &[usize]) -> CMatrix {
    let n = images.len();
    let mut m = CMatrix::zeros(n, n);
    for (col, &row) in images.iter().enumerate() {
        m[(row, col)] = c(1.0);
    }
    m
}

/// `A(x)` for an even site, `B(x)` for an odd one.
pub fn build_site_update(basis: &OntologicalBasis, rule: &Rule, site: usize) -> Result<DenseOperator> {
    DenseOperator::new(permutation_matrix(&site_update_images(basis, rule, site)?))
}

/// The sublattice products and the two-step evolution operator.
#[derive(Debug, Clone)]
pub struct Evolution {
    pub a: DenseOperator,
    pub b: DenseOperator,
    pub u: DenseOperator,
    /// `U|j⟩ = |u_images[j]⟩`.
    pub u_images: Vec<usize>,
}

fn compose_sublattice(basis: &OntologicalBasis, rule: &Rule, sites: &[usize]) -> Result<Vec<usize>> {
    let mut images: Vec<usize> = (0..basis.dim()).collect();
    for &s in sites {
        let step = site_update_images(basis, rule, s)?;
        for img in images.iter_mut() {
            *img = step[*img];
        }
    }
    Ok(images)
}

/// `A = Π A(x)`, `B = Π B(x)`, `U = A·B`. Products of permutation matrices are
/// formed by composing the index maps, so every entry stays exactly 0 or 1.
pub fn build_evolution(basis: &OntologicalBasis, rule: &Rule) -> Result<Evolution> {
    check_rule(basis, rule)?;
    let a_images = compose_sublattice(basis, rule, &basis.spec().even_sites())?;
    let b_images = compose_sublattice(basis, rule, &basis.spec().odd_sites())?;
    let u_images: Vec<usize> = b_images.iter().map(|&j| a_images[j]).collect();
    Ok(Evolution {
        a: DenseOperator::new(permutation_matrix(&a_images))?,
        b: DenseOperator::new(permutation_matrix(&b_images))?,
        u: DenseOperator::new(permutation_matrix(&u_images))?,
        u_images,
    })
}

/// Single-site shift generator `P` with `e^{iP}|X⟩ = |X − 1 mod N⟩`.
///
/// Built in the discrete Fourier basis `f_k(X) = e^{2πikX/N}/√N`, where the
/// down-shift has eigenvalue `e^{2πik/N}`. `offsets[k]` adds `2π·offsets[k]`
/// to mode `k` (the branch knob); an empty slice means the principal branch
/// with eigenphases in `[0, 2π)`.
pub fn build_shift_generator(modulus: u32, offsets: &[i64]) -> Result<DenseOperator> {
    if modulus < 2 {
        return Err(Error::InvalidModulus(modulus));
    }
    let n = modulus as usize;
    if !offsets.is_empty() && offsets.len() != n {
        return Err(Error::InvalidRule(format!(
            "branch offsets need {n} entries, got {}",
            offsets.len()
        )));
    }
    let norm = 1.0 / (n as f64).sqrt();
    let fourier = CMatrix::from_fn(n, n, |x, k| {
        Complex64::from_polar(norm, TAU * (k * x) as f64 / n as f64)
    });
    let eig = (0..n).map(|k| {
        let off = offsets.get(k).copied().unwrap_or(0) as f64;
        TAU * (k as f64 / n as f64 + off)
    });
    let mut scaled = fourier.clone();
    for (k, lambda) in eig.enumerate() {
        scaled.column_mut(k).scale_mut(lambda);
    }
    let p = scaled * fourier.adjoint();
    DenseOperator::new(crate::linalg::hermitian_part(&p)).map(|op| op.with_tolerance(1e-12))
}

/// `a(x)` (even `x`) or `b(x)` (odd `x`): the shift generator on the site
/// factor times the diagonal `Q(neighbours)` on the opposite sublattice.
pub fn build_local_generator(
    basis: &OntologicalBasis,
    rule: &Rule,
    site: usize,
    offsets: &[i64],
) -> Result<DenseOperator> {
    check_site(basis, site)?;
    check_rule(basis, rule)?;
    let p = build_shift_generator(basis.modulus(), offsets)?.matrix;
    let n = basis.modulus();
    let nbrs = basis.spec().neighbors(site);
    let mut buf = Vec::with_capacity(nbrs.len());
    let dim = basis.dim();
    let mut m = CMatrix::zeros(dim, dim);
    for j in 0..dim {
        let q = increment(basis, rule, &nbrs, j, &mut buf);
        if q == 0 {
            continue;
        }
        let dj = basis.digit(j, site) as usize;
        for di in 0..n {
            let i = basis.with_digit(j, site, di);
            m[(i, j)] = p[(di as usize, dj)] * c(q as f64);
        }
    }
    DenseOperator::new(m)
}

/// All local generators of a lattice, keyed by site.
#[derive(Debug, Clone)]
pub struct LocalGenerators {
    pub even: Vec<(usize, CMatrix)>,
    pub odd: Vec<(usize, CMatrix)>,
}

impl LocalGenerators {
    pub fn build(basis: &OntologicalBasis, rule: &Rule, offsets: &[i64]) -> Result<Self> {
        let build = |sites: Vec<usize>| -> Result<Vec<(usize, CMatrix)>> {
            sites
                .into_iter()
                .map(|s| Ok((s, build_local_generator(basis, rule, s, offsets)?.matrix)))
                .collect()
        };
        Ok(Self {
            even: build(basis.spec().even_sites())?,
            odd: build(basis.spec().odd_sites())?,
        })
    }

    /// `a = Σ_even a(x)`.
    pub fn a_total(&self) -> CMatrix {
        sum(self.even.iter().map(|(_, m)| m))
    }

    /// `b = Σ_odd b(x)`.
    pub fn b_total(&self) -> CMatrix {
        sum(self.odd.iter().map(|(_, m)| m))
    }

    /// Generator at a site, whichever sublattice it is on.
    pub fn at(&self, site: usize) -> Option<&CMatrix> {
        self.even
            .iter()
            .chain(&self.odd)
            .find(|(s, _)| *s == site)
            .map(|(_, m)| m)
    }
}

fn sum<'a>(mut it: impl Iterator<Item = &'a CMatrix>) -> CMatrix {
    let first = it.next().expect("at least one site").clone();
    it.fold(first, |acc, m| acc + m)
}

/// Diagonal beable reading the value at `site`.
pub fn site_value_beable(basis: &OntologicalBasis, site: usize) -> Result<DenseOperator> {
    check_site(basis, site)?;
    let d: Vec<Complex64> = (0..basis.dim()).map(|j| c(basis.digit(j, site) as f64)).collect();
    DenseOperator::new(CMatrix::from_diagonal(&nalgebra::DVector::from_vec(d)))
}

/// Lattice translation by `shift` acting on configurations: the value at
/// site `s` moves to `s + shift`.
pub fn translation_operator(basis: &OntologicalBasis, shift: &[i64]) -> Result<DenseOperator> {
    let spec = basis.spec();
    if shift.len() != spec.dims() {
        return Err(Error::InvalidSite {
            site: shift.to_vec(),
            extents: spec.extents().to_vec(),
        });
    }
    let targets: Vec<usize> = (0..spec.cell_count()).map(|s| spec.translate(s, shift)).collect();
    let images: Vec<usize> = (0..basis.dim())
        .map(|j| {
            targets
                .iter()
                .enumerate()
                .fold(0, |out, (s, &t)| basis.with_digit(out, t, basis.digit(j, s)))
        })
        .collect();
    DenseOperator::new(permutation_matrix(&images))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automaton::{Automaton, AutomatonState};
    use crate::lattice::LatticeSpec;
    use crate::linalg::{commutator, exp_i_hermitian, expm, hermitian_eigenvalues, max_abs, max_abs_diff, I};
    use crate::operator::OperatorClass;
    use crate::rule::RuleSpec;

    fn setup(len: usize, n: u32, rule: &RuleSpec) -> (OntologicalBasis, Rule) {
        let spec = LatticeSpec::ring(len, n).unwrap();
        (
            OntologicalBasis::new(&spec, 4096).unwrap(),
            rule.compile(&spec).unwrap(),
        )
    }

    #[test]
    fn zero_rule_site_update_is_identity() {
        let spec = LatticeSpec::ring(4, 3).unwrap();
        let (basis, rule) = setup(4, 3, &RuleSpec::zero(&spec).unwrap());
        for s in 0..4 {
            let op = build_site_update(&basis, &rule, s).unwrap();
            assert_eq!(op.matrix, CMatrix::identity(81, 81));
        }
        let evo = build_evolution(&basis, &rule).unwrap();
        assert_eq!(evo.u.matrix, CMatrix::identity(81, 81));
        assert!(build_local_generator(&basis, &rule, 0, &[])
            .unwrap()
            .matrix
            .iter()
            .all(|z| *z == c(0.0)));
    }

    #[test]
    fn site_updates_are_permutations() {
        let (basis, rule) = setup(4, 3, &RuleSpec::SeededTable { seed: 1 });
        for s in 0..4 {
            let op = build_site_update(&basis, &rule, s).unwrap();
            assert!(op.is_exact_permutation());
            assert_ne!(op.classify(), OperatorClass::Superimposable);
        }
    }

    #[test]
    fn even_site_update_hand_example() {
        let (basis, rule) = setup(4, 2, &RuleSpec::LinearSum);
        let from = AutomatonState::new(basis.spec().clone(), vec![0, 0], vec![1, 0]).unwrap();
        let to = AutomatonState::new(basis.spec().clone(), vec![1, 0], vec![1, 0]).unwrap();
        let a0 = build_site_update(&basis, &rule, 0).unwrap();
        let j = basis.encode_state(&from);
        let i = basis.encode_state(&to);
        assert_eq!(a0.matrix[(i, j)], c(1.0));
    }

    #[test]
    fn evolution_matches_classical_epoch() {
        let (basis, rule) = setup(6, 2, &RuleSpec::SeededTable { seed: 4 });
        let evo = build_evolution(&basis, &rule).unwrap();
        let auto = Automaton::with_rule(basis.spec(), rule.clone());
        assert!(evo.u.is_exact_permutation());
        for j in 0..basis.dim() {
            let next = auto.step_epoch(&basis.decode_state(j));
            assert_eq!(evo.u_images[j], basis.encode_state(&next));
            assert_eq!(evo.u.matrix[(basis.encode_state(&next), j)], c(1.0));
        }
        assert_eq!(evo.u.matrix, &evo.a.matrix * &evo.b.matrix);
    }

    #[test]
    fn site_updates_on_one_sublattice_commute() {
        let (basis, rule) = setup(6, 2, &RuleSpec::SeededTable { seed: 8 });
        let evens: Vec<CMatrix> = basis
            .spec()
            .even_sites()
            .iter()
            .map(|&s| build_site_update(&basis, &rule, s).unwrap().matrix)
            .collect();
        for x in &evens {
            for y in &evens {
                assert!(commutator(x, y).iter().all(|z| *z == c(0.0)));
            }
        }
    }

    #[test]
    fn shift_generator_spectrum_and_exponential() {
        for n in [2u32, 3, 5] {
            let p = build_shift_generator(n, &[]).unwrap();
            let eig = hermitian_eigenvalues(&p.matrix).unwrap();
            for (k, &e) in eig.iter().enumerate() {
                assert!((e - TAU * k as f64 / n as f64).abs() < 1e-12);
            }
            // e^{iP} = e^{−i(−P)}.
            let shift = exp_i_hermitian(&p.matrix, -1.0).unwrap();
            let mut down = CMatrix::zeros(n as usize, n as usize);
            for x in 0..n as usize {
                down[((x + n as usize - 1) % n as usize, x)] = c(1.0);
            }
            assert!(max_abs_diff(&shift, &down) < 1e-12);
            assert!(max_abs_diff(&expm(&(&p.matrix * I)).unwrap(), &down) < 1e-12);
        }
        assert!(matches!(build_shift_generator(1, &[]), Err(Error::InvalidModulus(1))));
        assert!(build_shift_generator(3, &[0, 1]).is_err());
    }

    #[test]
    fn shift_generator_branch_offsets_keep_exponential() {
        let p = build_shift_generator(3, &[1, -1, 2]).unwrap();
        let eig = hermitian_eigenvalues(&p.matrix).unwrap();
        let expected = [TAU * (1.0 / 3.0 - 1.0), TAU, TAU * (2.0 / 3.0 + 2.0)];
        for (e, x) in eig.iter().zip(expected) {
            assert!((e - x).abs() < 1e-12);
        }
        let principal = build_shift_generator(3, &[]).unwrap();
        let a = exp_i_hermitian(&p.matrix, -1.0).unwrap();
        let b = exp_i_hermitian(&principal.matrix, -1.0).unwrap();
        assert!(max_abs_diff(&a, &b) < 1e-11);
    }

    #[test]
    fn local_generator_exponentiates_to_site_update() {
        for n in [2u32, 3] {
            let (basis, rule) = setup(4, n, &RuleSpec::SeededTable { seed: 21 });
            for s in 0..4 {
                let g = build_local_generator(&basis, &rule, s, &[]).unwrap();
                assert!(crate::linalg::hermitian_deviation(&g.matrix) < 1e-12);
                let e = exp_i_hermitian(&g.matrix, 1.0).unwrap();
                let upd = build_site_update(&basis, &rule, s).unwrap();
                assert!(max_abs_diff(&e, &upd.matrix) < 1e-9);
            }
        }
    }

    #[test]
    fn coupled_generator_is_superimposable() {
        let (basis, rule) = setup(4, 2, &RuleSpec::LinearSum);
        let g = build_local_generator(&basis, &rule, 0, &[]).unwrap();
        assert_eq!(g.classify(), OperatorClass::Superimposable);
        assert!(max_abs(&g.matrix) > 0.0);
    }

    #[test]
    fn generator_commutators_vanish_exactly_off_the_light_cone() {
        for (len, n) in [(4usize, 3u32), (6, 2)] {
            let (basis, rule) = setup(len, n, &RuleSpec::SeededTable { seed: 2 });
            let gens = LocalGenerators::build(&basis, &rule, &[]).unwrap();
            let same = |list: &[(usize, CMatrix)]| {
                list.iter()
                    .all(|(_, x)| list.iter().all(|(_, y)| max_abs(&commutator(x, y)) == 0.0))
            };
            assert!(same(&gens.even) && same(&gens.odd));
            for (xs, a) in &gens.even {
                for (ys, b) in &gens.odd {
                    let adjacent = basis.spec().distance(*xs, *ys) == 1;
                    assert_eq!(max_abs(&commutator(a, b)) != 0.0, adjacent, "sites {xs} {ys}");
                }
            }
        }
    }

    #[test]
    fn evolution_is_changeable_and_maps_beables_to_beables() {
        let (basis, rule) = setup(4, 2, &RuleSpec::LinearSum);
        let evo = build_evolution(&basis, &rule).unwrap();
        assert_eq!(evo.u.classify(), OperatorClass::Changeable);
        let gens = LocalGenerators::build(&basis, &rule, &[]).unwrap();
        assert_eq!(
            DenseOperator::new(gens.a_total()).unwrap().classify(),
            OperatorClass::Superimposable
        );
        for s in 0..4 {
            let b = site_value_beable(&basis, s).unwrap();
            let moved = crate::operator::conjugate_beable(&b, &evo.u).unwrap();
            assert_eq!(moved.classify(), OperatorClass::Beable);
            // U B U⁻¹ reads the value the site had one epoch earlier.
            for j in 0..basis.dim() {
                let from = evo.u_images.iter().position(|&i| i == j).unwrap();
                assert_eq!(moved.matrix[(j, j)], c(basis.digit(from, s) as f64));
            }
        }
    }

    #[test]
    fn translation_is_permutation_and_cycles() {
        let (basis, _) = setup(6, 2, &RuleSpec::LinearSum);
        let t = translation_operator(&basis, &[2]).unwrap();
        assert!(t.is_exact_permutation());
        let t3 = &t.matrix * &t.matrix * &t.matrix;
        assert_eq!(t3, CMatrix::identity(64, 64));
    }

    #[test]
    fn invalid_site_and_mismatched_rule() {
        let (basis, rule) = setup(4, 2, &RuleSpec::LinearSum);
        assert!(matches!(
            build_site_update(&basis, &rule, 4),
            Err(Error::InvalidSite { .. })
        ));
        let other = RuleSpec::LinearSum.compile(&LatticeSpec::ring(4, 3).unwrap()).unwrap();
        assert!(matches!(
            build_site_update(&basis, &other, 0),
            Err(Error::InvalidRule(_))
        ));
    }
}
