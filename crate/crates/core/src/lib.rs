//! Multi-pass streaming set cover: an element-sampling solver with explicit
//! pass and space accounting, exact and greedy oracles, generators for the
//! hard set cover and maximum coverage distributions, and Monte-Carlo checks
//! of the lemmas they rest on.

pub mod bits;
pub mod cli;
pub mod error;
pub mod hardgen;
pub mod io;
pub mod oracles;
pub mod solver;
pub mod stream;
pub mod system;
pub mod verify;

pub use error::{Error, ParseError, Result};
pub use solver::{solve, SolveResult, SolverConfig, SubSolver};
pub use stream::{SetStream, SpaceLedger, StreamOrder};
pub use system::{coverage, is_feasible_cover, ElementSet, Rng, Seed, SetSystem};
