//! Exact values of μ, μ², μ_r, λ and general 1-bounded multiplicative
//! functions on large ranges, with a factorization oracle for checking them.

pub mod cache;
pub mod oracle;
pub mod segmented;
pub mod spec;
pub mod window;

pub use cache::{FunctionTag, SieveCache};
pub use oracle::{euler_phi, prime_divisors, FactorizationOracle};
pub use segmented::{
    evaluate_spec, liouville_sieve, mobius_sieve, mobius_sieve_blocked, power_free_sieve,
    primes_up_to, sum_spec,
};
pub use spec::{MultiplicativeSpec, SpecKind};
pub use window::{SeqWindow, ValuesRef};
