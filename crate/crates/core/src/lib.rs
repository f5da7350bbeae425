//! Incomplete Gauss sums modulo primes and the counting problems behind
//! their estimation.
//!
//! * [`modarith`]: prime-field arithmetic and additive characters.
//! * [`expsum`]: compensated evaluation of `Σ e_q(a n^k)` and maximisation scans.
//! * [`counters`]: exact solution counts for mean value systems, naive and
//!   meet-in-the-middle.
//! * [`bounds`]: closed-form bounds, the induction parameters, and regime
//!   comparison.
//! * [`harness`]: verification suites, sweeps, and report formatting used by
//!   the `gausslab` binary.

pub mod bounds;
pub mod counters;
pub mod expsum;
pub mod harness;
pub mod modarith;

pub use expsum::{ComplexValue, SumSpec};
pub use modarith::{is_prime, PrimeModulus, Residue};
