//! Dense operators over the ontological basis and their classification into
//! beables, changeables and superimposables.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{default_tolerance, CMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OperatorClass {
    /// Diagonal in the ontological basis.
    Beable,
    /// One non-vanishing entry per row and column.
    Changeable,
    Superimposable,
}

impl fmt::Display for OperatorClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OperatorClass::Beable => "beable",
            OperatorClass::Changeable => "changeable",
            OperatorClass::Superimposable => "superimposable",
        })
    }
}

/// Square complex matrix plus the absolute tolerance used by approximate
/// predicates.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseOperator {
    pub matrix: CMatrix,
    pub tolerance: f64,
}

impl DenseOperator {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::DimensionMismatch(matrix.nrows(), matrix.ncols()));
        }
        if matrix.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidState("operator has non-finite entries".into()));
        }
        let tolerance = default_tolerance(matrix.nrows());
        Ok(Self { matrix, tolerance })
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    fn vanishes(&self, z: &Complex64) -> bool {
        z.norm() <= self.tolerance
    }

    pub fn classify(&self) -> OperatorClass {
        let n = self.dim();
        let m = &self.matrix;
        let off_diagonal = (0..n).any(|r| (0..n).any(|col| r != col && !self.vanishes(&m[(r, col)])));
        if !off_diagonal {
            return OperatorClass::Beable;
        }
        let mut col_counts = vec![0usize; n];
        for r in 0..n {
            let mut row_count = 0;
            for col in 0..n {
                if !self.vanishes(&m[(r, col)]) {
                    row_count += 1;
                    col_counts[col] += 1;
                }
            }
            if row_count != 1 {
                return OperatorClass::Superimposable;
            }
        }
        if col_counts.iter().all(|&k| k == 1) {
            OperatorClass::Changeable
        } else {
            OperatorClass::Superimposable
        }
    }

    /// True when every entry is exactly 0 or 1 with one 1 per row and column.
    pub fn is_exact_permutation(&self) -> bool {
        let n = self.dim();
        let zero = Complex64::new(0.0, 0.0);
        let one = Complex64::new(1.0, 0.0);
        let mut col_counts = vec![0usize; n];
        for r in 0..n {
            let mut ones = 0;
            for (col, count) in col_counts.iter_mut().enumerate() {
                let z = self.matrix[(r, col)];
                if z == one {
                    ones += 1;
                    *count += 1;
                } else if z != zero {
                    return false;
                }
            }
            if ones != 1 {
                return false;
            }
        }
        col_counts.iter().all(|&k| k == 1)
    }

    /// Inverse of a changeable: the transpose with reciprocal weights.
    pub fn changeable_inverse(&self) -> Result<DenseOperator> {
        self.expect_class(OperatorClass::Changeable, true)?;
        let n = self.dim();
        let mut inv = CMatrix::zeros(n, n);
        for r in 0..n {
            for col in 0..n {
                let z = self.matrix[(r, col)];
                if !self.vanishes(&z) {
                    inv[(col, r)] = z.inv();
                }
            }
        }
        Ok(DenseOperator {
            matrix: inv,
            tolerance: self.tolerance,
        })
    }

    fn expect_class(&self, expected: OperatorClass, allow_beable: bool) -> Result<()> {
        let found = self.classify();
        // A diagonal with non-vanishing entries is also a phase-weighted
        // permutation (the identity one).
        let ok = found == expected
            || (allow_beable
                && found == OperatorClass::Beable
                && (0..self.dim()).all(|i| !self.vanishes(&self.matrix[(i, i)])));
        if ok {
            Ok(())
        } else {
            Err(Error::ClassMismatch {
                expected: expected.to_string(),
                found: found.to_string(),
            })
        }
    }

    pub fn to_json(&self, convention: &str) -> OperatorJson {
        OperatorJson {
            dim: self.dim(),
            convention: convention.to_string(),
            entries: (0..self.dim())
                .flat_map(|r| (0..self.dim()).map(move |col| (r, col)))
                .map(|(r, col)| {
                    let z = self.matrix[(r, col)];
                    [z.re, z.im]
                })
                .collect(),
        }
    }

    pub fn from_json(json: &OperatorJson) -> Result<Self> {
        let n = json.dim;
        if json.entries.len() != n * n {
            return Err(Error::Parse(format!(
                "operator of dim {n} needs {} entries, got {}",
                n * n,
                json.entries.len()
            )));
        }
        Self::new(CMatrix::from_fn(n, n, |r, col| {
            let [re, im] = json.entries[r * n + col];
            Complex64::new(re, im)
        }))
    }

    /// Sparse `row,col,re,im` triplets of the non-vanishing entries.
    pub fn to_triplet_csv(&self) -> String {
        let mut out = String::from("row,col,re,im\n");
        for r in 0..self.dim() {
            for col in 0..self.dim() {
                let z = self.matrix[(r, col)];
                if !self.vanishes(&z) {
                    out.push_str(&format!("{r},{col},{},{}\n", z.re, z.im));
                }
            }
        }
        out
    }
}

/// JSON form of an operator: row-major `[re, im]` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorJson {
    pub dim: usize,
    pub convention: String,
    pub entries: Vec<[f64; 2]>,
}

/// `B′ = C B C⁻¹` for a beable `B` and changeable `C`; `B′` is again a beable
/// and satisfies `B′ C = C B`.
pub fn conjugate_beable(beable: &DenseOperator, changeable: &DenseOperator) -> Result<DenseOperator> {
    if beable.dim() != changeable.dim() {
        return Err(Error::DimensionMismatch(beable.dim(), changeable.dim()));
    }
    beable.expect_class(OperatorClass::Beable, false)?;
    let inverse = changeable.changeable_inverse()?;
    DenseOperator::new(&changeable.matrix * &beable.matrix * &inverse.matrix)
        .map(|op| op.with_tolerance(beable.tolerance))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, max_abs_diff};
    use crate::random::{random_anti_hermitian, random_diagonal};

    fn perm(images: &[usize]) -> DenseOperator {
        let n = images.len();
        let mut m = CMatrix::zeros(n, n);
        for (col, &r) in images.iter().enumerate() {
            m[(r, col)] = c(1.0);
        }
        DenseOperator::new(m).unwrap()
    }

    #[test]
    fn classes() {
        let d = DenseOperator::new(random_diagonal(5, 1)).unwrap();
        assert_eq!(d.classify(), OperatorClass::Beable);
        let p = perm(&[2, 0, 1, 4, 3]);
        assert_eq!(p.classify(), OperatorClass::Changeable);
        assert!(p.is_exact_permutation());
        let mut weighted = p.matrix.clone();
        weighted[(2, 0)] = Complex64::from_polar(1.0, 0.7);
        let w = DenseOperator::new(weighted).unwrap();
        assert_eq!(w.classify(), OperatorClass::Changeable);
        assert!(!w.is_exact_permutation());
        let s = DenseOperator::new(random_anti_hermitian(4, 2)).unwrap();
        assert_eq!(s.classify(), OperatorClass::Superimposable);
    }

    #[test]
    fn two_entries_in_a_column_is_superimposable() {
        let mut m = CMatrix::zeros(2, 2);
        m[(0, 0)] = c(1.0);
        m[(1, 0)] = c(1.0);
        assert_eq!(DenseOperator::new(m).unwrap().classify(), OperatorClass::Superimposable);
    }

    #[test]
    fn tolerance_hides_tiny_entries() {
        let mut m = CMatrix::identity(3, 3);
        m[(0, 1)] = c(1e-12);
        assert_eq!(DenseOperator::new(m.clone()).unwrap().classify(), OperatorClass::Beable);
        let strict = DenseOperator::new(m).unwrap().with_tolerance(0.0);
        assert_eq!(strict.classify(), OperatorClass::Superimposable);
    }

    #[test]
    fn conjugation_by_identity() {
        let b = DenseOperator::new(random_diagonal(4, 3)).unwrap();
        let id = DenseOperator::new(CMatrix::identity(4, 4)).unwrap();
        assert_eq!(conjugate_beable(&b, &id).unwrap().matrix, b.matrix);
    }

    #[test]
    fn conjugation_permutes_diagonal() {
        let b = DenseOperator::new(random_diagonal(5, 8)).unwrap();
        let p = perm(&[3, 0, 4, 1, 2]);
        let b2 = conjugate_beable(&b, &p).unwrap();
        assert_eq!(b2.classify(), OperatorClass::Beable);
        assert!(max_abs_diff(&(&b2.matrix * &p.matrix), &(&p.matrix * &b.matrix)) < 1e-15);
        let mut before: Vec<f64> = (0..5).map(|i| b.matrix[(i, i)].re).collect();
        let mut after: Vec<f64> = (0..5).map(|i| b2.matrix[(i, i)].re).collect();
        before.sort_by(f64::total_cmp);
        after.sort_by(f64::total_cmp);
        assert_eq!(before, after);
    }

    #[test]
    fn conjugation_rejects_wrong_classes() {
        let s = DenseOperator::new(random_anti_hermitian(3, 1)).unwrap();
        let p = perm(&[1, 2, 0]);
        assert!(matches!(conjugate_beable(&s, &p), Err(Error::ClassMismatch { .. })));
        let b = DenseOperator::new(random_diagonal(3, 1)).unwrap();
        assert!(matches!(conjugate_beable(&b, &s), Err(Error::ClassMismatch { .. })));
        assert!(matches!(conjugate_beable(&p, &p), Err(Error::ClassMismatch { .. })));
    }

    #[test]
    fn json_round_trip_and_triplets() {
        let p = perm(&[1, 0, 2]);
        let json = p.to_json("test");
        assert_eq!(DenseOperator::from_json(&json).unwrap(), p);
        assert_eq!(p.to_triplet_csv(), "row,col,re,im\n0,1,1,0\n1,0,1,0\n2,2,1,0\n");
        let bad = OperatorJson {
            dim: 2,
            convention: String::new(),
            entries: vec![[0.0, 0.0]; 3],
        };
        assert!(DenseOperator::from_json(&bad).is_err());
    }

    #[test]
    fn rejects_non_square_and_nan() {
        assert!(DenseOperator::new(CMatrix::zeros(2, 3)).is_err());
        let mut m = CMatrix::zeros(2, 2);
        m[(0, 0)] = c(f64::NAN);
        assert!(DenseOperator::new(m).is_err());
    }
}
