//! Periodic hypercubic lattice geometry with an even/odd checkerboard.
//!
//! Sites are addressed either by coordinate vectors or by a linear index in
//! row-major order (axis 0 slowest). A site is *even* when the sum of its
//! coordinates is even. Every extent is even, so the checkerboard survives
//! the periodic wrap.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Geometry and value range of an automaton.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LatticeSpec {
    extents: Vec<usize>,
    modulus: u32,
}

impl LatticeSpec {
    pub fn new(extents: Vec<usize>, modulus: u32) -> Result<Self> {
        if extents.is_empty() {
            return Err(Error::InvalidLattice("at least one dimension required".into()));
        }
        if let Some(&bad) = extents.iter().find(|&&e| e == 0 || e % 2 != 0) {
            return Err(Error::InvalidLattice(format!(
                "extent {bad} must be a positive even integer"
            )));
        }
        if modulus < 2 {
            return Err(Error::InvalidModulus(modulus));
        }
        extents
            .iter()
            .try_fold(1usize, |acc, &e| acc.checked_mul(e))
            .ok_or_else(|| Error::InvalidLattice("cell count overflows".into()))?;
        Ok(Self { extents, modulus })
    }

    /// One-dimensional ring of `len` cells.
    pub fn ring(len: usize, modulus: u32) -> Result<Self> {
        Self::new(vec![len], modulus)
    }

    pub fn dims(&self) -> usize {
        self.extents.len()
    }

    pub fn extents(&self) -> &[usize] {
        &self.extents
    }

    pub fn modulus(&self) -> u32 {
        self.modulus
    }

    pub fn cell_count(&self) -> usize {
        self.extents.iter().product()
    }

    /// Number of sites on each sublattice.
    pub fn half_count(&self) -> usize {
        self.cell_count() / 2
    }

    /// Number of nearest neighbours, which is also the arity of the rule.
    pub fn neighbor_count(&self) -> usize {
        2 * self.dims()
    }

    pub fn index_of(&self, coord: &[usize]) -> usize {
        coord.iter().zip(&self.extents).fold(0, |acc, (&c, &e)| acc * e + c)
    }

    pub fn coord_of(&self, mut index: usize) -> Vec<usize> {
        let mut coord = vec![0; self.dims()];
        for axis in (0..self.dims()).rev() {
            coord[axis] = index % self.extents[axis];
            index /= self.extents[axis];
        }
        coord
    }

    /// Validates a signed coordinate and returns the linear index.
    pub fn checked_index(&self, coord: &[i64]) -> Result<usize> {
        let ok = coord.len() == self.dims()
            && coord
                .iter()
                .zip(&self.extents)
                .all(|(&c, &e)| c >= 0 && (c as u64) < e as u64);
        if !ok {
            return Err(Error::InvalidSite {
                site: coord.to_vec(),
                extents: self.extents.clone(),
            });
        }
        Ok(coord
            .iter()
            .zip(&self.extents)
            .fold(0, |acc, (&c, &e)| acc * e + c as usize))
    }

    pub fn is_even(&self, index: usize) -> bool {
        self.coord_of(index).iter().sum::<usize>() % 2 == 0
    }

    /// Even sites in ascending linear order.
    pub fn even_sites(&self) -> Vec<usize> {
        (0..self.cell_count()).filter(|&i| self.is_even(i)).collect()
    }

    /// Odd sites in ascending linear order.
    pub fn odd_sites(&self) -> Vec<usize> {
        (0..self.cell_count()).filter(|&i| !self.is_even(i)).collect()
    }

    /// Position of a site within its own sublattice list.
    pub fn sublattice_ordinal(&self, index: usize) -> usize {
        // Row-major order keeps each sublattice interleaved, so the ordinal
        // is the number of same-parity sites with a smaller index.
        let parity = self.is_even(index);
        (0..index).filter(|&i| self.is_even(i) == parity).count()
    }

    /// Nearest neighbours of a site in the fixed order
    /// (axis 0 minus, axis 0 plus, axis 1 minus, ...), wrapping periodically.
    pub fn neighbors(&self, index: usize) -> Vec<usize> {
        let coord = self.coord_of(index);
        let mut out = Vec::with_capacity(self.neighbor_count());
        for axis in 0..self.dims() {
            let e = self.extents[axis];
            for step in [e - 1, 1] {
                let mut c = coord.clone();
                c[axis] = (c[axis] + step) % e;
                out.push(self.index_of(&c));
            }
        }
        out
    }

    /// Minimal-image signed displacement from `from` to `to` along each axis.
    pub fn displacement(&self, from: usize, to: usize) -> Vec<i64> {
        let a = self.coord_of(from);
        let b = self.coord_of(to);
        a.iter()
            .zip(&b)
            .zip(&self.extents)
            .map(|((&a, &b), &e)| {
                let e = e as i64;
                let mut d = (b as i64 - a as i64).rem_euclid(e);
                if d > e / 2 {
                    d -= e;
                }
                d
            })
            .collect()
    }

    /// Periodic L1 distance.
    pub fn distance(&self, a: usize, b: usize) -> usize {
        self.displacement(a, b).iter().map(|d| d.unsigned_abs() as usize).sum()
    }

    /// Site reached from `index` by the given signed shift (periodic).
    pub fn translate(&self, index: usize, shift: &[i64]) -> usize {
        let coord: Vec<usize> = self
            .coord_of(index)
            .iter()
            .zip(shift)
            .zip(&self.extents)
            .map(|((&c, &s), &e)| (c as i64 + s).rem_euclid(e as i64) as usize)
            .collect();
        self.index_of(&coord)
    }
}
