//! Exact generalized ancestor potentials: Heisenberg and Virasoro mode
//! operators, the direct Givental pipeline, cut-and-join recursion and a
//! solver driven by Virasoro constraints.

pub mod cutjoin;
pub mod error;
pub mod generators;
pub mod giventaldata;
pub mod modeops;
pub mod scalarseries;
pub mod tpoly;
pub mod virasoro;
pub mod virgroup;

pub use error::{Error, Result};

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/introduction.md")]
pub struct BookIntroduction;

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/operators.md")]
pub struct BookOperators;

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/config.md")]
pub struct BookConfig;

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/solvers.md")]
pub struct BookSolvers;

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/cli.md")]
pub struct BookCli;

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/checks.md")]
pub struct BookChecks;
