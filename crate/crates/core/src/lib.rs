//! Statistical and statistical-fuzzy convergence diagnostics for finite
//! prefixes of real sequences.
//!
//! Every limit statement in this crate is evaluated as a finite surrogate:
//! "density zero" becomes "empirical density at most `alpha`", "for
//! sufficiently large n" becomes "on the trailing tail window". Verdicts
//! always carry the parameters they were computed with.
//!
//! Module map:
//!
//! * [`sequence`] finite sequences, generators, elementwise arithmetic
//! * [`density`] index sets, empirical density, deviation sets
//! * [`convergence`] statistical (r-)convergence, classical r-limits on
//!   tails, statistical r-fundamentality, dense-subsequence extraction
//! * [`fuzzy`] empirical defect, membership, fuzzy-limit profiles
//! * [`stats`] partial means/variances and the bridge-theorem checks
//! * [`corpus`] the built-in bounded corpus and theorem suite
//! * [`io`] CSV / JSONL ingestion and serialization
//! * [`cli`] the `statconv` command line

pub mod cli;
pub mod convergence;
pub mod corpus;
pub mod density;
pub mod error;
pub mod fuzzy;
pub mod io;
pub mod sequence;
pub mod stats;

pub use error::{Error, Result};
