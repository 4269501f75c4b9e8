//! Exact samplers, closed-form moments and a statistical verification
//! harness for the external branches of a Kingman coalescent tree.
//!
//! * [`coalescent`]: waiting times, merge histories, labeled histories and
//!   the external-length functionals.
//! * [`urn`]: the embedded urn chain, its box-scheme and permutation
//!   representations, and exact rational laws.
//! * [`moments`] and [`limits`]: closed forms and limit laws.
//! * [`stats`] and [`suite`]: goodness-of-fit machinery and the verification
//!   suites.

pub mod coalescent;
pub mod error;
pub mod law;
pub mod limits;
pub mod moments;
pub mod rng;
pub mod runner;
pub mod simulate;
pub mod stats;
pub mod suite;
pub mod urn;

pub use coalescent::{
    hat_external_length, sample_labeled_history, sample_merge_history, sample_rho_single,
    sample_waiting_times, scaled_point_pattern, single_branch_length, total_external_length,
    window_external_length, CoalescentTimes, LabeledHistory, MergeHistory, ScaledPointPattern,
};
pub use error::{Error, Result};
pub use law::{ExactLaw, LawEntry};
pub use limits::LimitLaw;
pub use moments::MomentOracle;
pub use rng::{replicate_stream, StreamRng};
pub use runner::run_replicates;
pub use simulate::{simulate, StatisticKind, StatisticSpec};
pub use stats::{EmpiricalSample, TestReport};
pub use suite::Suite;
pub use urn::{PermutationPair, UrnPath};
