//! Shared domain types and exact/log-domain arithmetic.

pub mod bignat;
pub mod logvalue;
pub mod partition;
pub mod prob;
pub mod rational;
pub mod weights;

pub use bignat::{binomial, factorial, ln_big, ln_rational, log_binomial, BigNat};
pub use logvalue::{log_sum_exp, LogValue};
pub use partition::{partitions_of, Partition};
pub use prob::ProbVector;
pub use rational::{parse_rational, rat, rat_int, rationalize, rationalize_vec, Rational};
pub use weights::{WeightVector, WeightedVector};
