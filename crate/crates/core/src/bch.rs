//! Baker–Campbell–Hausdorff truncations of `log(e^P e^Q)`.
//!
//! Through degree four the series reads
//!
//! ```text
//! R = P + Q + ½[P,Q] + (1/12)[P,[P,Q]] + (1/12)[[P,Q],Q] + (1/24)[[P,[P,Q]],Q] + …
//! ```

use crate::error::{Error, Result};
use crate::linalg::{c, commutator, CMatrix};

pub const MAX_ORDER: usize = 4;

pub(crate) fn check_order(order: usize) -> Result<()> {
    if (1..=MAX_ORDER).contains(&order) {
        Ok(())
    } else {
        Err(Error::InvalidOrder(order))
    }
}

fn check_pair(p: &CMatrix, q: &CMatrix) -> Result<()> {
    if p.nrows() != p.ncols() {
        return Err(Error::DimensionMismatch(p.nrows(), p.ncols()));
    }
    if p.shape() != q.shape() {
        return Err(Error::DimensionMismatch(p.nrows(), q.nrows()));
    }
    Ok(())
}

/// Homogeneous degree-`degree` term of the series (degree 1..=4).
pub fn bch_term(p: &CMatrix, q: &CMatrix, degree: usize) -> Result<CMatrix> {
    check_pair(p, q)?;
    check_order(degree)?;
    Ok(match degree {
        1 => p + q,
        2 => commutator(p, q) * c(0.5),
        3 => {
            let pq = commutator(p, q);
            (commutator(p, &pq) + commutator(&pq, q)) * c(1.0 / 12.0)
        }
        _ => {
            let ppq = commutator(p, &commutator(p, q));
            commutator(&ppq, q) * c(1.0 / 24.0)
        }
    })
}

/// `R_k`: the series truncated after degree `order`.
pub fn bch_truncation(p: &CMatrix, q: &CMatrix, order: usize) -> Result<CMatrix> {
    check_pair(p, q)?;
    check_order(order)?;
    let mut r = bch_term(p, q, 1)?;
    for k in 2..=order {
        r += bch_term(p, q, k)?;
    }
    Ok(r)
}

/// Result of the conjugacy-class reduction.
#[derive(Debug, Clone)]
pub struct SdReduction {
    /// Conjugating generator `F`.
    pub f: CMatrix,
    /// `e^F R e^{−F}` through the printed order: odd in `S`, even in `D`.
    pub reduced: CMatrix,
}

/// With `S = (P+Q)/2` and `D = (P−Q)/2`,
/// `F = −½D + (1/24)[S,[S,D]]` and `R_reduced = 2S − (1/12)[D,[S,D]]`.
///
/// `order` selects how much of each expansion is kept: below 3 only the
/// leading terms `−½D` and `2S` are returned.
pub fn sd_reduction(p: &CMatrix, q: &CMatrix, order: usize) -> Result<SdReduction> {
    check_pair(p, q)?;
    check_order(order)?;
    let s = (p + q) * c(0.5);
    let d = (p - q) * c(0.5);
    let mut f = &d * c(-0.5);
    let mut reduced = &s * c(2.0);
    if order >= 3 {
        let sd = commutator(&s, &d);
        f += commutator(&s, &sd) * c(1.0 / 24.0);
        reduced -= commutator(&d, &sd) * c(1.0 / 12.0);
    }
    Ok(SdReduction { f, reduced })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{expm, max_abs_diff, principal_log_unitary};
    use crate::random::{random_anti_hermitian, random_diagonal};

    fn log_log_slope(eps: &[f64], err: &[f64]) -> f64 {
        let xs: Vec<f64> = eps.iter().map(|e| e.log10()).collect();
        let ys: Vec<f64> = err.iter().map(|e| e.log10()).collect();
        let n = xs.len() as f64;
        let mx = xs.iter().sum::<f64>() / n;
        let my = ys.iter().sum::<f64>() / n;
        let num: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let den: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
        num / den
    }

    #[test]
    fn commuting_pair_truncates_to_sum() {
        let p = random_diagonal(4, 1);
        let q = random_diagonal(4, 2);
        for k in 1..=4 {
            assert!(max_abs_diff(&bch_truncation(&p, &q, k).unwrap(), &(&p + &q)) < 1e-15);
        }
    }

    #[test]
    fn order_and_shape_errors() {
        let p = random_anti_hermitian(3, 1);
        assert!(matches!(bch_truncation(&p, &p, 0), Err(Error::InvalidOrder(0))));
        assert!(matches!(bch_truncation(&p, &p, 5), Err(Error::InvalidOrder(5))));
        let q = random_anti_hermitian(4, 1);
        assert!(matches!(bch_truncation(&p, &q, 2), Err(Error::DimensionMismatch(..))));
        assert!(sd_reduction(&p, &q, 2).is_err());
    }

    #[test]
    fn exp_of_fourth_order_truncation_is_fifth_order_accurate() {
        let p0 = random_anti_hermitian(4, 31);
        let q0 = random_anti_hermitian(4, 32);
        let eps = [1e-1, 1e-2, 1e-3];
        let errs: Vec<f64> = eps
            .iter()
            .map(|&e| {
                let p = &p0 * c(e);
                let q = &q0 * c(e);
                let lhs = expm(&bch_truncation(&p, &q, 4).unwrap()).unwrap();
                let rhs = expm(&p).unwrap() * expm(&q).unwrap();
                max_abs_diff(&lhs, &rhs)
            })
            .collect();
        let slope = log_log_slope(&eps, &errs);
        assert!((slope - 5.0).abs() < 0.5, "slope {slope}, errors {errs:?}");
    }

    #[test]
    fn sd_reduction_trivial_cases() {
        let p = random_anti_hermitian(4, 5);
        let r = sd_reduction(&p, &p, 3).unwrap();
        assert!(r.f.iter().all(|z| z.norm() == 0.0));
        assert!(max_abs_diff(&r.reduced, &(&p * c(2.0))) < 1e-15);
        let m = &p * c(-1.0);
        let r = sd_reduction(&p, &m, 3).unwrap();
        assert!(r.reduced.iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn sd_reduction_remainder_is_fifth_order() {
        let p0 = random_anti_hermitian(4, 41);
        let q0 = random_anti_hermitian(4, 42);
        let eps = [1e-1, 1e-2, 1e-3];
        let errs: Vec<f64> = eps
            .iter()
            .map(|&e| {
                let p = &p0 * c(e);
                let q = &q0 * c(e);
                let r = principal_log_unitary(&(expm(&p).unwrap() * expm(&q).unwrap())).unwrap();
                let red = sd_reduction(&p, &q, 4).unwrap();
                let conj = expm(&red.f).unwrap() * r * expm(&(-&red.f)).unwrap();
                max_abs_diff(&conj, &red.reduced)
            })
            .collect();
        let slope = log_log_slope(&eps, &errs);
        assert!((slope - 5.0).abs() < 0.5, "slope {slope}, errors {errs:?}");
    }
}
