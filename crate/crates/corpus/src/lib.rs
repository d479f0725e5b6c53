//! Seeded end-to-end checks for the example programs under `corpus/`.
//!
//! The manifest (`corpus.json`) names each program, its entry function,
//! and a check kind. [`run_case`] regenerates a case's inputs from the
//! manifest seed and case index, runs the program, and judges the outcome
//! against an oracle evaluated in exact rational arithmetic:
//!
//! - `round` / `encode`: the returned integer is within 1 of x (of x*2^n);
//! - `pivot`: the returned index is in range and its entry is nonzero;
//! - `gauss`: the returned vector carries the planted unit coordinate and
//!   the residual against the original matrix stays below 2^(p+5);
//! - `trisection`: the result encloses the unique root of the bound test
//!   function (located to 2^-80 by exact sign bisection) at width 2^p;
//! - `exp`: the result meets a directed-rounding compound-interest
//!   bracket of e^x;
//! - `bisection-diverges`: the partial midpoint test exhausts its budget
//!   on the adversarial input and still works off it.
//!
//! Every oracle is independent of the evaluator: integers and rationals
//! are compared exactly, and the only floating point anywhere is the
//! slope fit in the acceptance suite.

pub mod manifest;
pub mod oracle;
pub mod runner;

pub use manifest::{default_dir, Manifest, ProgramSpec};
pub use oracle::{exp_bracket, pow2, rational_of_dyadic, real_of_rational};
pub use runner::{case_seed, load_program, padded_array, run_case, LoadedProgram};
