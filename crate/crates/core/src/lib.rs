//! Counting functions of smooth and rough integers, de Bruijn's approximants
//! Λ, V, V*, W, the error terms Δ, Q, Q*, R, R*, and numerical verification of
//! the exact identities linking them.
//!
//! Everything numerical is generic over [`Real`] (`f32` or `f64`); the aliases
//! below fix the scalar.

pub mod arith;
pub mod bounds;
pub mod caps;
mod chebyshev;
pub mod context;
pub mod debruijn;
pub mod error;
pub mod error_terms;
pub mod identity;
pub mod quadrature;
pub mod scalar;
pub mod special;

pub use caps::ResourceCaps;
pub use error::{Error, Result};
pub use scalar::Real;

pub type Tables64 = context::Tables<f64>;
pub type Context64 = context::Context<f64>;
pub type SpecialFunctionTable64 = special::SpecialFunctionTable<f64>;
pub type MertensData64 = arith::MertensData<f64>;
pub type Query64 = debruijn::Query<f64>;

pub type Tables32 = context::Tables<f32>;
pub type Context32 = context::Context<f32>;
pub type SpecialFunctionTable32 = special::SpecialFunctionTable<f32>;
pub type MertensData32 = arith::MertensData<f32>;
pub type Query32 = debruijn::Query<f32>;
