//! The cocycle `α`, the series on expanding subspaces, least-squares assembly
//! across words, and the full solve producing `ψ = id + φ₂`.
//!
//! Sign convention: `φ₂(x) = A_w^{-1} φ₂(F_w x) + A_w^{-1} α(w, x)`, which is
//! exactly `ψ ∘ F_w = A_w ∘ ψ` for `ψ = id + φ₂`.

mod assemble;
mod cocycle;
mod series;
mod solve;

pub use assemble::{assemble, Assembly};
pub use cocycle::{generator_cocycle, word_cocycle, CocycleField};
pub use series::{series_solve_on_e, PartialSolution, SeriesBudget};
pub use solve::{
    functional_equation_residual, solve_full, ErrorBudget, SemiconjugacyResult, SolveConfig, Verdict, WordSolve,
    WordStrategy,
};
