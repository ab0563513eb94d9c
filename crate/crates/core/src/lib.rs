//! Exact arithmetic for the Maass space of hermitian modular forms of degree
//! two over an imaginary quadratic field of odd class number, together with
//! the Hecke operators at split and inert primes and their descent to tuples
//! of elliptic modular forms.

pub mod arith;
pub mod classical;
pub mod descent;
pub mod class_base;
pub mod error;
pub mod field;
pub mod forms;
pub mod hecke;
pub mod hermlat;
pub mod json;
pub mod maass;
pub mod matrix;

pub use error::{Error, Result};
