//! Torus maps `x ↦ A x + δ(x mod 1)` with gridded displacements.

mod action;
mod grid;
mod map;

pub use action::{ActionSpec, WordStep};
pub use grid::GridFunction;
pub use map::{compose, HomeoReport, InvertOptions, TorusMap};
