//! Computational laboratory for exponential sums twisted by Hecke
//! eigenvalues: exact Ramanujan tau tables, Dirichlet characters and Gauss
//! sums, Farey dissections driven by the map `h(x) = f'(x) + x f''(x)`, the
//! second-order phase approximation, direct exponential-sum evaluation and
//! Piatetski-Shapiro prime experiments.

pub mod arith;
pub mod characters;
pub mod dd;
pub mod error;
pub mod expsum;
pub mod farey;
pub mod hecke;
pub mod phase;
pub mod psprimes;
pub mod sum;
pub mod verify;

pub use error::{Error, Result};
