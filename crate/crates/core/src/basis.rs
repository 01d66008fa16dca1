//! Ontological basis: one Hilbert-space basis vector per classical
//! configuration.

use serde::Serialize;

use crate::automaton::AutomatonState;
use crate::error::{Error, Result};
use crate::lattice::LatticeSpec;

/// Default cap on the Hilbert-space dimension.
pub const DEFAULT_DIM_CAP: usize = 4096;

/// Human-readable statement of the index encoding, echoed in every report.
pub const BASIS_CONVENTION: &str = "mixed-radix base N; digit k is the value at the k-th site in \
     the order (even sites ascending, then odd sites ascending); digit 0 least significant";

/// Mixed-radix index map over all `N^cells` configurations.
#[derive(Debug, Clone, Serialize)]
pub struct OntologicalBasis {
    spec: LatticeSpec,
    dim: usize,
    /// Linear site index of each digit position.
    site_order: Vec<usize>,
    /// Digit position of each linear site index.
    position: Vec<usize>,
    powers: Vec<usize>,
}

impl OntologicalBasis {
    pub fn new(spec: &LatticeSpec, cap: usize) -> Result<Self> {
        let n = spec.modulus() as u128;
        let cells = spec.cell_count() as u32;
        let required = n.checked_pow(cells).unwrap_or(u128::MAX);
        if required > cap as u128 {
            return Err(Error::DimensionCap { required, cap });
        }
        let dim = required as usize;
        let site_order: Vec<usize> = spec.even_sites().into_iter().chain(spec.odd_sites()).collect();
        let mut position = vec![0; spec.cell_count()];
        for (p, &s) in site_order.iter().enumerate() {
            position[s] = p;
        }
        let powers = (0..spec.cell_count())
            .map(|p| (spec.modulus() as usize).pow(p as u32))
            .collect();
        Ok(Self {
            spec: spec.clone(),
            dim,
            site_order,
            position,
            powers,
        })
    }

    pub fn spec(&self) -> &LatticeSpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn modulus(&self) -> u32 {
        self.spec.modulus()
    }

    pub fn convention(&self) -> &'static str {
        BASIS_CONVENTION
    }

    /// Sites in digit order.
    pub fn site_order(&self) -> &[usize] {
        &self.site_order
    }

    pub fn position_of(&self, site: usize) -> usize {
        self.position[site]
    }

    /// Value at `site` in the configuration with basis index `index`.
    #[inline]
    pub fn digit(&self, index: usize, site: usize) -> u32 {
        ((index / self.powers[self.position[site]]) % self.modulus() as usize) as u32
    }

    /// Index of the configuration obtained by setting `site` to `value`.
    #[inline]
    pub fn with_digit(&self, index: usize, site: usize, value: u32) -> usize {
        let p = self.powers[self.position[site]];
        let old = (index / p) % self.modulus() as usize;
        index - old * p + value as usize * p
    }

    /// Encodes digits given in digit order.
    pub fn encode(&self, digits: &[u32]) -> usize {
        digits.iter().zip(&self.powers).map(|(&d, &p)| d as usize * p).sum()
    }

    pub fn decode(&self, index: usize) -> Vec<u32> {
        let n = self.modulus() as usize;
        let mut rest = index;
        (0..self.site_order.len())
            .map(|_| {
                let d = rest % n;
                rest /= n;
                d as u32
            })
            .collect()
    }

    /// Digit order is even sites then odd sites, so the digits are exactly
    /// `x_values` followed by `y_values`.
    pub fn encode_state(&self, state: &AutomatonState) -> usize {
        let digits: Vec<u32> = state.x_values.iter().chain(&state.y_values).copied().collect();
        self.encode(&digits)
    }

    pub fn decode_state(&self, index: usize) -> AutomatonState {
        let digits = self.decode(index);
        let half = self.spec.half_count();
        AutomatonState::new(self.spec.clone(), digits[..half].to_vec(), digits[half..].to_vec())
            .expect("decoded digits are in range")
    }

    /// Sites belonging to the complement of `sites`, validated as a partition.
    pub fn complement(&self, sites: &[usize]) -> Result<Vec<usize>> {
        let cells = self.spec.cell_count();
        let mut seen = vec![false; cells];
        for &s in sites {
            if s >= cells || seen[s] {
                return Err(Error::InvalidCut(format!("site {s} is out of range or repeated")));
            }
            seen[s] = true;
        }
        Ok((0..cells).filter(|&s| !seen[s]).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn dimensions() {
        let d = |len, n| {
            OntologicalBasis::new(&LatticeSpec::ring(len, n).unwrap(), 4096)
                .unwrap()
                .dim()
        };
        assert_eq!(d(2, 2), 4);
        assert_eq!(d(4, 2), 16);
        assert_eq!(d(4, 3), 81);
    }

    #[test]
    fn cap_error_names_required_size() {
        let spec = LatticeSpec::ring(8, 3).unwrap();
        match OntologicalBasis::new(&spec, 4096) {
            Err(Error::DimensionCap { required, cap }) => {
                assert_eq!(required, 6561);
                assert_eq!(cap, 4096);
            }
            other => panic!("unexpected {other:?}"),
        }
        let huge = LatticeSpec::new(vec![64, 64], 5).unwrap();
        assert!(matches!(
            OntologicalBasis::new(&huge, 4096),
            Err(Error::DimensionCap {
                required: u128::MAX,
                ..
            })
        ));
    }

    #[test]
    fn even_sites_are_low_digits() {
        let b = OntologicalBasis::new(&LatticeSpec::ring(4, 2).unwrap(), 4096).unwrap();
        assert_eq!(b.site_order(), &[0, 2, 1, 3]);
        // X = (0, 0), Y = (1, 0): only site 1 is set, digit position 2.
        let s = AutomatonState::new(b.spec().clone(), vec![0, 0], vec![1, 0]).unwrap();
        assert_eq!(b.encode_state(&s), 4);
        assert_eq!(b.digit(4, 1), 1);
        assert_eq!(b.with_digit(4, 0, 1), 5);
    }

    #[test]
    fn complement_validates_partition() {
        let b = OntologicalBasis::new(&LatticeSpec::ring(4, 2).unwrap(), 4096).unwrap();
        assert_eq!(b.complement(&[0, 1]).unwrap(), vec![2, 3]);
        assert!(b.complement(&[0, 0]).is_err());
        assert!(b.complement(&[7]).is_err());
    }

    proptest! {
        #[test]
        fn decode_encode_round_trip(len in 1usize..=3, n in 2u32..=4, raw in any::<usize>()) {
            let spec = LatticeSpec::ring(2 * len, n).unwrap();
            let b = OntologicalBasis::new(&spec, 4096).unwrap();
            let idx = raw % b.dim();
            prop_assert_eq!(b.encode(&b.decode(idx)), idx);
            prop_assert_eq!(b.encode_state(&b.decode_state(idx)), idx);
        }
    }
}
