//! Finite-mode laboratory for quasi-free states of Klein-Gordon fields on
//! 1+1-dimensional globally hyperbolic spacetimes with a circular Cauchy
//! surface.
//!
//! The crate is organised bottom-up:
//!
//! - [`grid`]: the periodic spatial lattice, metric profiles and the
//!   time-dependent weighted inner product.
//! - [`opcalc`]: weighted operators, the discrete spatial Klein-Gordon
//!   operator and spectral functional calculus.
//! - [`states`]: vacuum, thermal and ground/KMS covariances, state
//!   validation, purity and n-point functions.
//! - [`propagators`]: closed-form static propagator kernels.
//! - [`evolution`]: the symplectic Cauchy evolution, transport of
//!   covariances, in/out vacua and wave operators.
//! - [`hadamard`]: the Riccati construction of pure Hadamard states.
//! - [`calderon`]: Euclidean Green's functions and Calderón projectors.
//! - [`conformal`]: conformal rescalings of covariances in two dimensions.
//! - [`cli`]: the JSON-configured batch front end used by the `qfc` binary.
//!
//! Hermitian forms on doubled Cauchy data `(f₀, f₁)` are stored as operator
//! matrices together with the [`grid::WeightVector`] that pairs them, so the
//! form is `((f|λg)) = f* W λ g` with `W = diag(w, w)`. Norms and positivity
//! checks are taken in the orthonormal frame `W^{1/2}·W^{-1/2}`.

pub mod calderon;
pub mod cli;
pub mod conformal;
pub mod error;
pub mod evolution;
pub mod grid;
pub mod hadamard;
pub mod linalg;
pub mod opcalc;
pub mod propagators;
pub mod states;

pub use error::{Error, Result};
pub use linalg::{CMat, CVec, C64};
