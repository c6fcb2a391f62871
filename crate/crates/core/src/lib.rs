//! Pre-Schwarzian derivative of logharmonic mappings `f = h * conj(g)`.
//!
//! The crate is layered bottom-up:
//!
//! - [`series`]: truncated complex Taylor series, the numeric substrate.
//! - [`expr`]: a small expression language compiled to series.
//! - [`map`]: logharmonic maps, dilatation, Wirtinger derivatives, Jacobian.
//! - [`preschwarzian`]: analytic, harmonic and logharmonic pre-Schwarzians.
//! - [`transforms`]: chain rule, power post-composition, best affine
//!   approximation and the rotation partner.
//! - [`criteria`]: grid-supremum univalence checks.
//! - [`oracle`]: finite differences, closed-form inversion, jet fitting and
//!   brute-force injectivity, independent of the series path.
//! - [`corpus`]: the seeded random test maps.
//! - [`verify`]: dual-route property suites run by `verify`.
//! - [`cli`]: the command-line front end.

pub mod cli;
pub mod corpus;
pub mod criteria;
pub mod error;
pub mod expr;
pub mod map;
pub mod oracle;
pub mod preschwarzian;
pub mod report;
pub mod series;
pub mod transforms;
pub mod verify;

pub use error::{Error, Result};
pub use map::{HarmonicLift, LogharmonicMap};
pub use num_complex::Complex64;
pub use series::TaylorSeries;
