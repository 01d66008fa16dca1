//! Update functions `Q` for the automaton.
//!
//! A rule maps the ordered tuple of neighbour values (see
//! [`LatticeSpec::neighbors`](crate::lattice::LatticeSpec::neighbors)) to an
//! increment modulo `N`. Every family is compiled into a dense lookup table
//! indexed by the tuple read as a base-`N` number, first element most
//! significant.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::LatticeSpec;

/// Largest lookup table we are willing to materialise.
pub const MAX_TABLE_LEN: usize = 1 << 24;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum RuleSpec {
    /// Sum of the neighbour values mod N.
    LinearSum,
    /// Table filled from a ChaCha8 stream seeded with `seed`.
    SeededTable { seed: u64 },
    /// Full table in index order (tuple as a base-N number, first entry most
    /// significant).
    ExplicitTable { values: Vec<u32> },
}

impl RuleSpec {
    /// The identity rule `Q ≡ 0` as an explicit table.
    pub fn zero(lattice: &LatticeSpec) -> Result<Self> {
        Ok(RuleSpec::ExplicitTable {
            values: vec![0; table_len(lattice)?],
        })
    }

    /// Builds an explicit table from `tuple -> value` entries; every tuple must
    /// be present.
    pub fn from_entries(lattice: &LatticeSpec, entries: &BTreeMap<Vec<u32>, u32>) -> Result<Self> {
        let len = table_len(lattice)?;
        let arity = lattice.neighbor_count();
        let n = lattice.modulus();
        let mut values = vec![None; len];
        for (tuple, &v) in entries {
            if tuple.len() != arity {
                return Err(Error::InvalidRule(format!(
                    "tuple {tuple:?} has {} entries, expected {arity}",
                    tuple.len()
                )));
            }
            if tuple.iter().any(|&t| t >= n) {
                return Err(Error::InvalidRule(format!("tuple {tuple:?} out of range mod {n}")));
            }
            if v >= n {
                return Err(Error::InvalidRule(format!("value {v} out of range mod {n}")));
            }
            values[tuple_index(tuple, n)] = Some(v);
        }
        let values = values
            .into_iter()
            .enumerate()
            .map(|(i, v)| {
                v.ok_or_else(|| Error::InvalidRule(format!("table is missing tuple {:?}", index_tuple(i, arity, n))))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(RuleSpec::ExplicitTable { values })
    }

    /// Parses the text table format: one `t0,t1,... -> value` line per tuple.
    /// Blank lines and `#` comments are ignored; parentheses around the tuple
    /// are optional.
    pub fn parse_table(lattice: &LatticeSpec, text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = || Error::Parse(format!("line {}: expected `tuple -> value`, got {raw:?}", lineno + 1));
            let (lhs, rhs) = line.split_once("->").ok_or_else(bad)?;
            let lhs = lhs.trim().trim_start_matches('(').trim_end_matches(')');
            let tuple = lhs
                .split(|c: char| c == ',' || c.is_whitespace())
                .filter(|s| !s.is_empty())
                .map(|s| s.parse::<u32>().map_err(|_| bad()))
                .collect::<Result<Vec<_>>>()?;
            let value = rhs.trim().parse::<u32>().map_err(|_| bad())?;
            if entries.insert(tuple.clone(), value).is_some() {
                return Err(Error::Parse(format!("line {}: duplicate tuple {tuple:?}", lineno + 1)));
            }
        }
        Self::from_entries(lattice, &entries)
    }

    pub fn family_name(&self) -> &'static str {
        match self {
            RuleSpec::LinearSum => "linear-sum",
            RuleSpec::SeededTable { .. } => "seeded-table",
            RuleSpec::ExplicitTable { .. } => "explicit-table",
        }
    }

    pub fn compile(&self, lattice: &LatticeSpec) -> Result<Rule> {
        let n = lattice.modulus();
        let arity = lattice.neighbor_count();
        let len = table_len(lattice)?;
        let table = match self {
            RuleSpec::LinearSum => (0..len)
                .map(|i| index_tuple(i, arity, n).iter().sum::<u32>() % n)
                .collect(),
            RuleSpec::SeededTable { seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                (0..len).map(|_| rng.gen_range(0..n)).collect()
            }
            RuleSpec::ExplicitTable { values } => {
                if values.len() != len {
                    return Err(Error::InvalidRule(format!(
                        "explicit table has {} entries, expected {len}",
                        values.len()
                    )));
                }
                if let Some(v) = values.iter().find(|&&v| v >= n) {
                    return Err(Error::InvalidRule(format!("value {v} out of range mod {n}")));
                }
                values.clone()
            }
        };
        Ok(Rule {
            table,
            modulus: n,
            arity,
        })
    }
}

fn table_len(lattice: &LatticeSpec) -> Result<usize> {
    (lattice.modulus() as usize)
        .checked_pow(lattice.neighbor_count() as u32)
        .filter(|&l| l <= MAX_TABLE_LEN)
        .ok_or_else(|| {
            Error::InvalidRule(format!(
                "lookup table for N={} with {} neighbours exceeds {MAX_TABLE_LEN} entries",
                lattice.modulus(),
                lattice.neighbor_count()
            ))
        })
}

fn tuple_index(tuple: &[u32], n: u32) -> usize {
    tuple.iter().fold(0, |acc, &t| acc * n as usize + t as usize)
}

fn index_tuple(mut index: usize, arity: usize, n: u32) -> Vec<u32> {
    let mut tuple = vec![0; arity];
    for slot in tuple.iter_mut().rev() {
        *slot = (index % n as usize) as u32;
        index /= n as usize;
    }
    tuple
}

/// A compiled update function.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rule {
    table: Vec<u32>,
    modulus: u32,
    arity: usize,
}

impl Rule {
    #[inline]
    pub fn eval(&self, tuple: &[u32]) -> u32 {
        debug_assert_eq!(tuple.len(), self.arity);
        self.table[tuple_index(tuple, self.modulus)]
    }

    pub fn modulus(&self) -> u32 {
        self.modulus
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn is_zero(&self) -> bool {
        self.table.iter().all(|&v| v == 0)
    }

    /// Distinct values the table attains.
    pub fn attained_values(&self) -> Vec<u32> {
        let mut v = self.table.clone();
        v.sort_unstable();
        v.dedup();
        v
    }

    pub fn to_spec(&self) -> RuleSpec {
        RuleSpec::ExplicitTable {
            values: self.table.clone(),
        }
    }

    /// Renders the table in the `tuple -> value` text format.
    pub fn to_table_text(&self) -> String {
        let mut out = String::new();
        for (i, v) in self.table.iter().enumerate() {
            let tuple = index_tuple(i, self.arity, self.modulus);
            let parts: Vec<String> = tuple.iter().map(u32::to_string).collect();
            let _ = writeln!(out, "{} -> {v}", parts.join(","));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ring(n: u32) -> LatticeSpec {
        LatticeSpec::ring(4, n).unwrap()
    }

    #[test]
    fn linear_sum_table() {
        let r = RuleSpec::LinearSum.compile(&ring(3)).unwrap();
        assert_eq!(r.eval(&[2, 2]), 1);
        assert_eq!(r.eval(&[1, 0]), 1);
        assert_eq!(r.eval(&[0, 0]), 0);
    }

    #[test]
    fn seeded_table_is_deterministic_and_in_range() {
        let l = LatticeSpec::new(vec![4, 4], 5).unwrap();
        let a = RuleSpec::SeededTable { seed: 9 }.compile(&l).unwrap();
        let b = RuleSpec::SeededTable { seed: 9 }.compile(&l).unwrap();
        let c = RuleSpec::SeededTable { seed: 10 }.compile(&l).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(a.table.iter().all(|&v| v < 5));
        assert_eq!(a.table.len(), 625);
    }

    #[test]
    fn explicit_table_must_be_complete() {
        let l = ring(2);
        let mut entries = BTreeMap::new();
        entries.insert(vec![0, 0], 1);
        entries.insert(vec![0, 1], 0);
        entries.insert(vec![1, 0], 0);
        assert!(matches!(
            RuleSpec::from_entries(&l, &entries),
            Err(Error::InvalidRule(_))
        ));
        entries.insert(vec![1, 1], 1);
        let spec = RuleSpec::from_entries(&l, &entries).unwrap();
        assert_eq!(
            spec,
            RuleSpec::ExplicitTable {
                values: vec![1, 0, 0, 1]
            }
        );
    }

    #[test]
    fn explicit_values_out_of_range() {
        let spec = RuleSpec::ExplicitTable {
            values: vec![0, 1, 2, 0],
        };
        assert!(spec.compile(&ring(2)).is_err());
        let short = RuleSpec::ExplicitTable { values: vec![0, 1] };
        assert!(short.compile(&ring(2)).is_err());
    }

    #[test]
    fn table_text_round_trips() {
        let l = ring(3);
        let rule = RuleSpec::SeededTable { seed: 3 }.compile(&l).unwrap();
        let text = rule.to_table_text();
        let parsed = RuleSpec::parse_table(&l, &text).unwrap().compile(&l).unwrap();
        assert_eq!(parsed, rule);
    }

    #[test]
    fn parse_accepts_parentheses_and_comments() {
        let l = ring(2);
        let text = "# xor\n(0, 0) -> 0\n(0, 1) -> 1\n(1, 0) -> 1\n(1, 1) -> 0\n";
        let rule = RuleSpec::parse_table(&l, text).unwrap().compile(&l).unwrap();
        assert_eq!(rule.eval(&[1, 0]), 1);
        assert!(RuleSpec::parse_table(&l, "0,0 => 1").is_err());
        assert!(RuleSpec::parse_table(&l, "0,0 -> 1\n0,0 -> 1").is_err());
    }

    #[test]
    fn zero_rule() {
        let r = RuleSpec::zero(&ring(5)).unwrap().compile(&ring(5)).unwrap();
        assert!(r.is_zero());
        assert_eq!(r.attained_values(), vec![0]);
    }
}
