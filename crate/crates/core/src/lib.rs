//! Time-reversible cellular automata and their exact quantum description.
//!
//! The classical side ([`automaton`], [`pattern`]) evolves second-order
//! automata on a periodic checkerboard. The quantum side lifts small
//! instances onto the ontological basis ([`basis`], [`lift`]), builds
//! Hamiltonians from the Baker–Campbell–Hausdorff series and from the exact
//! logarithm of the evolution operator ([`bch`], [`hamiltonian`],
//! [`convergence`]), and analyses their spectra ([`spectral`]).

pub mod automaton;
pub mod basis;
pub mod bch;
pub mod convergence;
pub mod error;
pub mod hamiltonian;
pub mod lattice;
pub mod lift;
pub mod linalg;
pub mod operator;
pub mod pattern;
pub mod random;
pub mod rule;
pub mod spectral;

pub use automaton::{Automaton, AutomatonState};
pub use basis::{OntologicalBasis, BASIS_CONVENTION, DEFAULT_DIM_CAP};
pub use error::{Error, Result};
pub use lattice::LatticeSpec;
pub use operator::{conjugate_beable, DenseOperator, OperatorClass, OperatorJson};
pub use rule::{Rule, RuleSpec};
