//! Constructive pullbacks of exact differential forms from constant
//! "universal" forms.
//!
//! The crate builds, from a triangulated manifold and a primitive `φ` of an
//! exact k-form `ω = dφ`, an explicit immersion `f` into a Euclidean space
//! carrying the constant form `β = Σ_j dx_j¹ ∧ ⋯ ∧ dx_j^k` with `f*β = ω`, and
//! certifies the linear-algebraic regularity statements behind it exactly.
//!
//! Layers, bottom up:
//! - [`multilinear`]: constant alternating forms and linear pullbacks;
//! - [`smoothfn`]: expression DAGs with value and gradient evaluation;
//! - [`forms`]: differential forms, `d`, pullback, the homotopy operator;
//! - [`covering`]: simplicial complexes and the ball-family covering;
//! - [`regularity`]: contraction-rank certificates and dimension counts;
//! - [`immersion`]: local immersions, assembly, shrinking, verification.

pub mod covering;
pub mod error;
pub mod fixtures;
pub mod forms;
pub mod immersion;
pub mod io;
pub mod linalg;
pub mod multilinear;
pub mod poly;
pub mod regularity;
pub mod sampling;
pub mod smoothfn;
pub mod scalar;
pub mod tuple;

pub use error::{Error, Result};
pub use forms::{DifferentialForm, SmoothMap, VectorField};
pub use multilinear::{standard_beta, AltForm, LinearMap};
pub use poly::Poly;
pub use scalar::{Rational, Scalar};
pub use smoothfn::SmoothFn;
pub use tuple::{binomial, IndexTuple};
