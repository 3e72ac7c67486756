//! Numerical toolkit for the linear-programming approach to isoperimetric
//! inequalities under curvature bounds.
//!
//! The crate reconstructs the dual certificates `(a, b, c, d, f)` that
//! certify `A_M >= |∂B^n_κ(V_M)|` in dimensions 2 and 4, checks the chord
//! measure identities (Santaló, Croke) on model balls, solves discretized
//! versions of the linear programs, and verifies the technical lemmas the
//! certificates rely on.
//!
//! Modules:
//! - [`spaceform`]: candle functions, model balls, chord angle function `T`.
//! - [`chord`]: the chord measure of a model ball, quadrature and Monte Carlo.
//! - [`lp`]: a dense simplex solver with duality certificates, and the
//!   discretized isoperimetric programs.
//! - [`certificate`]: dual variables from the consistency equation and the
//!   supremum function `f`.
//! - [`lemmas`]: the `(t, p, q)` reformulation and nonnegativity of `H`.
//! - [`negbound`]: negative curvature bounds and the complex hyperbolic
//!   counterexample.
//! - [`prince`]: the planar gravity problem.
//! - [`relative`]: the `m`-geodesic relative inequality.

pub mod certificate;
pub mod chord;
pub mod error;
pub mod lemmas;
pub mod lp;
pub mod negbound;
pub mod poly;
pub mod prince;
pub mod quad;
pub mod relative;
pub mod spaceform;

pub use error::{Error, Result};
pub use spaceform::{BallGeometry, CurvatureSpectrum, ModelParams};
