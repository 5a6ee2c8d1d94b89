//! Finite-dimensional real twisted spectral triples.
//!
//! The crate builds triples `(𝒜, ℋ, D; ρ)` with a real structure `J` and
//! grading `Γ` from dense matrices, checks their axioms as residuals, and
//! implements the twisted fluctuation machinery on top: twisted one-forms
//! and their opposites ([`forms`]), Morita self-equivalence through right
//! and left modules ([`morita`]), twisted gauge transformations and the
//! self-adjointness certificate ([`gauge`]), and a lattice version of the
//! minimal twist of a flat torus ([`manifold`]).
//!
//! Every identity is reported as a [`opcore::Comparison`] so that callers
//! can see how far from its threshold a check landed.

pub mod algebra;
pub mod cli;

pub mod error;
pub mod fixtures;
pub mod forms;
pub mod gauge;
pub mod io;

pub mod manifold;
pub mod morita;
pub mod opcore;
pub mod sampling;
pub mod triple;

pub use algebra::{AlgebraElement, Automorphism, Representation, StarAlgebra};
pub use error::{Error, Result};
pub use forms::{Side, TwistedOneForm};
pub use gauge::{GaugeUnitary, SelfAdjointnessCertificate};
pub use morita::{BalancedSpace, Connection, HermitianModule, ModuleSide};
pub use opcore::{AntilinearOp, Comparison, LinearOp, Tolerance, C64};
pub use triple::{validate_triple, KOSignature, RealTwistedTriple, ValidationReport};

/// Version string recorded in every report.
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
