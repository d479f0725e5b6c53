//! Verification conditions for annotated programs with soft guards.
//!
//! The pipeline: parse and sort-check a program, read its `//@`
//! annotations, run a weakest-precondition pass over each annotated
//! function, and emit one closed first-order condition per proof
//! obligation. Conditions can be compared against stored `.vc` files up
//! to the documented normalization, searched for counterexamples by
//! exact rational sampling, and exported as SMT-LIB scripts.

pub mod formula;
pub mod parser;
pub mod sampler;
pub mod smt;
pub mod term;
pub mod wp;

pub use formula::{alpha_equivalent, false_f, Formula};
pub use parser::{parse_formula, parse_term, parse_vc_file, ParseError, SortEnv, VcFile};
pub use sampler::{
    sample_check, Counterexample, SampleConfig, SampleError, SampleOutcome, DEFAULT_SAMPLES,
    DEFAULT_SEED,
};
pub use smt::{smt_document, write_smt_dir};
pub use term::{FSort, Term};
pub use wp::{
    annotation_env, generate_vcs, wp_assign, wp_if_choose, wp_stmts, wp_while_choose,
    LoopContract, Vc, VcError, VcOrigin,
};
