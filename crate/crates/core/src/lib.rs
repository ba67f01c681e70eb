//! Exact p-adic minimisation of models `(λ, H)`: `H` a quadratic form in the
//! six Plücker coordinates `z12, …, z34`, `λ` a nonzero rational, subject to
//! `det(λx𝐆 - 𝐇) = -λ^6 f6^-1 f(x)` for a fixed sextic `f`.

#![allow(clippy::needless_range_loop)]

pub mod arith;
pub mod cli;
pub mod error;
pub mod fixtures;
pub mod linalg;
pub mod minimise;
pub mod model;
pub mod weights;
