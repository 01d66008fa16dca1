//! Reversible second-order automaton on the even/odd checkerboard.
//!
//! The field is stored per sublattice: `x` holds the even sites, `y` the odd
//! sites, each in ascending linear order. One epoch applies the odd update
//! `B` and then the even update `A`, matching `U = A·B` acting on states.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::LatticeSpec;
use crate::rule::{Rule, RuleSpec};

/// Field values at one epoch.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AutomatonState {
    pub spec: LatticeSpec,
    pub x_values: Vec<u32>,
    pub y_values: Vec<u32>,
    pub epoch: i64,
}

impl AutomatonState {
    pub fn new(spec: LatticeSpec, x_values: Vec<u32>, y_values: Vec<u32>) -> Result<Self> {
        let half = spec.half_count();
        if x_values.len() != half || y_values.len() != half {
            return Err(Error::InvalidState(format!(
                "expected {half} values per sublattice, got {} even and {} odd",
                x_values.len(),
                y_values.len()
            )));
        }
        let n = spec.modulus();
        if let Some(v) = x_values.iter().chain(&y_values).find(|&&v| v >= n) {
            return Err(Error::InvalidState(format!("value {v} out of range mod {n}")));
        }
        Ok(Self {
            spec,
            x_values,
            y_values,
            epoch: 0,
        })
    }

    pub fn zeros(spec: &LatticeSpec) -> Self {
        let half = spec.half_count();
        Self {
            spec: spec.clone(),
            x_values: vec![0; half],
            y_values: vec![0; half],
            epoch: 0,
        }
    }

    /// Uniformly random field from a seeded ChaCha8 stream.
    pub fn random(spec: &LatticeSpec, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = spec.modulus();
        let cells: Vec<u32> = (0..spec.cell_count()).map(|_| rng.gen_range(0..n)).collect();
        Self::from_cells(spec, &cells).expect("generated values are in range")
    }

    /// Builds a state from a full field indexed by linear site index.
    pub fn from_cells(spec: &LatticeSpec, cells: &[u32]) -> Result<Self> {
        if cells.len() != spec.cell_count() {
            return Err(Error::InvalidState(format!(
                "expected {} cells, got {}",
                spec.cell_count(),
                cells.len()
            )));
        }
        let x = spec.even_sites().iter().map(|&s| cells[s]).collect();
        let y = spec.odd_sites().iter().map(|&s| cells[s]).collect();
        Self::new(spec.clone(), x, y)
    }

    /// Full field indexed by linear site index.
    pub fn cells(&self) -> Vec<u32> {
        let mut cells = vec![0; self.spec.cell_count()];
        for (&s, &v) in self.spec.even_sites().iter().zip(&self.x_values) {
            cells[s] = v;
        }
        for (&s, &v) in self.spec.odd_sites().iter().zip(&self.y_values) {
            cells[s] = v;
        }
        cells
    }

    pub fn value_at(&self, site: usize) -> u32 {
        let k = self.spec.sublattice_ordinal(site);
        if self.spec.is_even(site) {
            self.x_values[k]
        } else {
            self.y_values[k]
        }
    }

    /// Same field, ignoring the epoch counter.
    pub fn same_field(&self, other: &Self) -> bool {
        self.spec == other.spec && self.x_values == other.x_values && self.y_values == other.y_values
    }
}

/// A lattice and compiled rule with precomputed neighbour tables.
#[derive(Debug, Clone)]
pub struct Automaton {
    spec: LatticeSpec,
    rule: Rule,
    // For each even ordinal, ordinals of its (odd) neighbours in rule order.
    even_nbrs: Vec<Vec<usize>>,
    odd_nbrs: Vec<Vec<usize>>,
}

impl Automaton {
    pub fn new(spec: &LatticeSpec, rule: &RuleSpec) -> Result<Self> {
        Ok(Self::with_rule(spec, rule.compile(spec)?))
    }

    pub fn with_rule(spec: &LatticeSpec, rule: Rule) -> Self {
        let mut ordinal = vec![0; spec.cell_count()];
        let evens = spec.even_sites();
        let odds = spec.odd_sites();
        for (k, &s) in evens.iter().enumerate() {
            ordinal[s] = k;
        }
        for (k, &s) in odds.iter().enumerate() {
            ordinal[s] = k;
        }
        let table = |sites: &[usize]| -> Vec<Vec<usize>> {
            sites
                .iter()
                .map(|&s| spec.neighbors(s).into_iter().map(|n| ordinal[n]).collect())
                .collect()
        };
        Self {
            even_nbrs: table(&evens),
            odd_nbrs: table(&odds),
            spec: spec.clone(),
            rule,
        }
    }

    pub fn spec(&self) -> &LatticeSpec {
        &self.spec
    }

    pub fn rule(&self) -> &Rule {
        &self.rule
    }

    fn check(&self, state: &AutomatonState) {
        assert_eq!(state.spec, self.spec, "state belongs to a different lattice");
    }

    /// Values at the nearest neighbours of `site`, in the rule's argument order.
    pub fn neighbor_tuple(&self, state: &AutomatonState, site: &[i64]) -> Result<Vec<u32>> {
        self.check(state);
        let index = self.spec.checked_index(site)?;
        let k = self.spec.sublattice_ordinal(index);
        Ok(if self.spec.is_even(index) {
            self.even_nbrs[k].iter().map(|&j| state.y_values[j]).collect()
        } else {
            self.odd_nbrs[k].iter().map(|&j| state.x_values[j]).collect()
        })
    }

    /// Increment for even ordinal `k` given the odd field.
    #[inline]
    pub(crate) fn even_increment(&self, k: usize, y: &[u32], buf: &mut Vec<u32>) -> u32 {
        buf.clear();
        buf.extend(self.even_nbrs[k].iter().map(|&j| y[j]));
        self.rule.eval(buf)
    }

    #[inline]
    pub(crate) fn odd_increment(&self, k: usize, x: &[u32], buf: &mut Vec<u32>) -> u32 {
        buf.clear();
        buf.extend(self.odd_nbrs[k].iter().map(|&j| x[j]));
        self.rule.eval(buf)
    }

    /// Even-site update `A` (forward) or its inverse, visiting even ordinals in
    /// the given order. Each update reads only the odd field, so the order
    /// cannot change the result.
    pub fn update_even_in_order(&self, state: &mut AutomatonState, order: &[usize], forward: bool) {
        let n = self.rule.modulus();
        let mut buf = Vec::with_capacity(self.rule.arity());
        for &k in order {
            let q = self.even_increment(k, &state.y_values, &mut buf);
            let x = &mut state.x_values[k];
            *x = if forward { (*x + q) % n } else { (*x + n - q) % n };
        }
    }

    fn update_odd(&self, state: &mut AutomatonState, forward: bool) {
        let n = self.rule.modulus();
        let mut buf = Vec::with_capacity(self.rule.arity());
        for k in 0..state.y_values.len() {
            let q = self.odd_increment(k, &state.x_values, &mut buf);
            let y = &mut state.y_values[k];
            *y = if forward { (*y + q) % n } else { (*y + n - q) % n };
        }
    }

    fn update_even(&self, state: &mut AutomatonState, forward: bool) {
        let order: Vec<usize> = (0..state.x_values.len()).collect();
        self.update_even_in_order(state, &order, forward);
    }

    /// `X(x) ← X(x) + Q(neighbouring Y) mod N` on every even site.
    pub fn half_step_even(&self, state: &AutomatonState) -> AutomatonState {
        self.check(state);
        let mut s = state.clone();
        self.update_even(&mut s, true);
        s
    }

    /// `Y(x) ← Y(x) + Q(neighbouring X) mod N` on every odd site.
    pub fn half_step_odd(&self, state: &AutomatonState) -> AutomatonState {
        self.check(state);
        let mut s = state.clone();
        self.update_odd(&mut s, true);
        s
    }

    pub fn half_step_even_inverse(&self, state: &AutomatonState) -> AutomatonState {
        self.check(state);
        let mut s = state.clone();
        self.update_even(&mut s, false);
        s
    }

    pub fn half_step_odd_inverse(&self, state: &AutomatonState) -> AutomatonState {
        self.check(state);
        let mut s = state.clone();
        self.update_odd(&mut s, false);
        s
    }

    /// One epoch (two single time steps): odd update, then even update.
    pub fn step_epoch(&self, state: &AutomatonState) -> AutomatonState {
        let mut s = state.clone();
        self.step_in_place(&mut s);
        s
    }

    pub fn step_epoch_inverse(&self, state: &AutomatonState) -> AutomatonState {
        let mut s = state.clone();
        self.step_inverse_in_place(&mut s);
        s
    }

    pub fn step_in_place(&self, state: &mut AutomatonState) {
        self.check(state);
        self.update_odd(state, true);
        self.update_even(state, true);
        state.epoch += 1;
    }

    pub fn step_inverse_in_place(&self, state: &mut AutomatonState) {
        self.check(state);
        self.update_even(state, false);
        self.update_odd(state, false);
        state.epoch -= 1;
    }

    /// Advances `epochs` epochs; negative counts run backwards.
    pub fn run(&self, state: &AutomatonState, epochs: i64) -> AutomatonState {
        let mut s = state.clone();
        for _ in 0..epochs.unsigned_abs() {
            if epochs >= 0 {
                self.step_in_place(&mut s);
            } else {
                self.step_inverse_in_place(&mut s);
            }
        }
        s
    }
}
