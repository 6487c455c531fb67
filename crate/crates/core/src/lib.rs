//! Continuous semiconjugacies from perturbed lattice actions on `T^n` to
//! their linear models.
//!
//! A generator acts on the torus through a lift `x ↦ A x + δ(x mod 1)` with
//! `A` unimodular and `δ` periodic. For every word `w` with a nontrivial
//! expanding subspace `E(w)`, the correction `φ` that makes `ψ = id + φ`
//! equivariant is forced on `E(w)` by the convergent series
//!
//! ```text
//! φ_E(m) = Σ_{i ≥ 1} P_E A_w^{-i} α(w, F_w^{i-1}(m)),
//! ```
//!
//! where `α(w, ·)` is the displacement cocycle. Projections from a spanning
//! set of words are assembled by least squares, and the result is checked
//! against every generator.
//!
//! Grid data, maps and the solver are generic over [`Scalar`] (`f32` or
//! `f64`); the aliases below fix `f64`.

pub mod error;
pub mod examples;
pub mod io;
pub mod scalar;
pub mod semiconj;
pub mod spectral;
pub mod torusmap;
pub mod verify;
pub mod word;

pub use error::{Error, Result};
pub use scalar::Scalar;
pub use spectral::IntMatrix;
pub use word::{Letter, Word};

pub type GridFunctionF64 = torusmap::GridFunction<f64>;
pub type GridFunctionF32 = torusmap::GridFunction<f32>;
pub type TorusMapF64 = torusmap::TorusMap<f64>;
pub type TorusMapF32 = torusmap::TorusMap<f32>;
pub type ActionSpecF64 = torusmap::ActionSpec<f64>;
pub type ActionSpecF32 = torusmap::ActionSpec<f32>;
pub type SemiconjugacyResultF64 = semiconj::SemiconjugacyResult<f64>;
pub type SemiconjugacyResultF32 = semiconj::SemiconjugacyResult<f32>;
