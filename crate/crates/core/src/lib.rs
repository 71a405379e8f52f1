// Negated float comparisons are deliberate: they reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// Index loops over several parallel arrays read closer to the maths than zipped iterators.
#![allow(clippy::needless_range_loop)]

//! Transverse instability analysis of line solitary waves in two-dimensional Hamiltonian
//! dispersive models: Evans functions, spectral search, Fourier collocation and nonlinear
//! pseudo-spectral simulation.

pub mod colloc;
pub mod error;
pub mod evans;
pub mod models;
pub mod odecore;
pub mod poly;
pub mod simulate;
pub mod spectral;
pub mod verify;
pub mod specfind;
pub mod wedge;

pub use error::{Error, Result};
pub use models::{ModelName, ModelSpec, SymbolTable};
