//! Finite-scale laboratory for Möbius disjointness.
//!
//! Every quantity here is a finite Cesàro average, truncated Euler product or
//! exact prime sum standing in for a limit that cannot be computed directly:
//!
//! * [`sieve`]: segmented sieves for μ, μ², μ_r, λ and arbitrary 1-bounded
//!   multiplicative functions, plus a factorization oracle and a binary cache.
//! * [`mean_state`]: Cesàro inner products along cutoff ladders, the shift
//!   action and e-period defects.
//! * [`correlation`]: shift correlations of μ_r against Mirsky's Euler product.
//! * [`short_progression`]: second moments of Möbius sums in short progressions.
//! * [`pretentious`]: the Granville–Soundararajan distance and its minimizers.
//! * [`dirichlet`]: Dirichlet characters and mean squares of Dirichlet polynomials.
//! * [`anqie_flow`]: window censuses and rigidity of the square-free flow.
//! * [`verify`]: the acceptance grid shared by the test suite and the CLI.

pub mod anqie_flow;
pub mod correlation;
pub mod dirichlet;
pub mod error;
pub mod mean_state;
pub mod numerics;
pub mod pretentious;
pub mod short_progression;
pub mod sieve;
pub mod verify;

pub use error::{LabError, Result};
pub use num_complex::Complex64;
pub use sieve::{MultiplicativeSpec, SeqWindow};
