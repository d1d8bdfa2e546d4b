//! Exact verification of Mumford-type isometries among determinant-of-
//! cohomology lines and Deligne pairings on marked curves, together with
//! numerical kernels for the spectral invariants behind the metrics
//! (Selberg zeta values, Barnes double gamma, regularized determinants,
//! theta norms, Eisenstein series) and a genus-1 grid laboratory for the
//! Green's-function axioms.
//!
//! The symbolic side ([`line`](mod@line), [`pairing`], [`chern`], [`dsl`], [`suites`])
//! works over exact rationals and decides claimed isometries by normal-form
//! equality. The numeric side ([`spectral`], [`torus`]) is floating point
//! with explicit truncation reporting.

pub mod chern;
pub mod dsl;
pub mod error;
pub mod io;
pub mod line;
pub mod pairing;
pub mod spectral;
pub mod suites;
pub mod torus;

pub use error::{Error, Result};
pub use line::{deligne_constant, ConstExpr, ConstSym, CurveContext, Gen, MetrizedLineExpr, Rat};
pub use pairing::{
    deligne_pair, lambda_expand, normalize, verify_identity, IdentityClaim, PairingVector, RuleSet,
    Verdict,
};
