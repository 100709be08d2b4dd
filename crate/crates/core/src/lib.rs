//! Exact construction and verification of Drinfel'd twists through the
//! Fedosov fixed-point method.

#![allow(clippy::needless_range_loop)]

pub mod connection;
pub mod enveloping;
pub mod error;
pub mod fedosov;
pub mod io;
pub mod lie;
pub mod linalg;
pub mod positivity;
pub mod scalar;
pub mod twist;
pub mod udf;
pub mod weyl;

pub use error::{Error, Result};
pub use scalar::{Coef, GaussianRational, Rational, Scalar, TruncatedSeries};
