//! Finite-MDP library for simulation-based approximate policy iteration with
//! multi-step lookahead and linear value-function approximation.
//!
//! The pieces, bottom up:
//!
//! - [`mdp`]: the dense finite model and exact dynamic-programming oracles
//!   (Bellman operators, exact policy values, value iteration, lookahead
//!   policies).
//! - [`rollout`]: seeded Monte Carlo policy evaluation at a set of anchor
//!   states, with quantified truncation bias.
//! - [`features`]: linear function approximation over the anchors — the
//!   oblique projector, exact least-squares fits, the inner gradient-descent
//!   loop, and the projection-error constant `delta2`.
//! - [`driver`]: the two outer stochastic-approximation loops (least-squares
//!   and gradient-descent variants) with full per-iteration traces.
//! - [`bounds`]: closed-form asymptotic error bounds and the empirical check
//!   of a recorded run against them.
//! - [`gen`]: Garnet and chain generators for experiments.
//!
//! All computations are deterministic given their seeds; see
//! [`stream::RngStream`] for the substream scheme.

// `!(x >= 0.0)`-style validation must reject NaN along with the out-of-range
// values; the dense kernels read best with indexed loops.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

pub mod bounds;
pub mod driver;
pub mod error;
pub mod features;
pub mod gen;
pub mod linalg;
pub mod mdp;
pub mod rollout;
pub mod schedule;
pub mod stream;

pub use crate::driver::{Algorithm, RunConfig, RunRecord};
pub use crate::error::{Assumption, Error, Result};
pub use crate::features::{Delta2, Delta2Mode, FeatureProjector, GdConfig};
pub use crate::mdp::{Mdp, Policy, ValueVector};
pub use crate::rollout::{NoiseStats, RolloutConfig};
pub use crate::schedule::{EtaSchedule, Schedule};
pub use crate::stream::RngStream;
