//! Bernstein-type operators that fix `e_0` and `e_j`, together with the
//! machinery needed to check their approximation behaviour numerically:
//! moduli of smoothness, direct-estimate right-hand sides, iterates and
//! Voronovskaya-type asymptotics.

pub mod asymptotics;
pub mod basis;
pub mod bounds;
pub mod cli;
pub mod error;
pub mod function;
pub mod iterates;
pub mod moduli;
pub mod operators;

pub use basis::{basis_row, bernstein_basis, eval_bernstein_form, BernsteinForm, GridSpec};
pub use error::{Error, Result};
pub use function::{builtin_corpus, FunctionHandle, Smoothness};
pub use operators::{
    akr_first_moment, akr_nodes, akr_second_moment, apply_akr, apply_bernstein, apply_king,
    apply_tau, d_n_profile, king_rn, AkrNodes, TauSpec,
};
