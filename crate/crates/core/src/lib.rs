//! Restricted averaging operators over finite fields: field arithmetic,
//! characters and Gauss sums, Fourier analysis on F_q^d, varieties, operator
//! norm estimation, exponent-region geometry, and q-sweeps.

pub mod error;
pub mod exponent;
pub mod field;
pub mod chars;
pub mod fourier;
pub mod varieties;
pub mod averaging;
pub mod regions;
pub mod experiments;

pub use error::{Error, Result};
pub use exponent::{Exponent, Rational};
pub use field::{FieldElement, Prime};
