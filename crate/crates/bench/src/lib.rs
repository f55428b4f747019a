//! Shared fixtures for the benchmarks.

use lapi::features::{aggregation_features, FeatureProjector};
use lapi::gen::generate_garnet;
use lapi::Mdp;

/// A mid-sized random model: 200 states, 5 actions, branching 8.
pub fn bench_mdp() -> Mdp {
    generate_garnet(200, 5, 8, 42, 0.9, 0.0).unwrap()
}

/// Aggregation projector over the bench model, anchored on every state.
pub fn bench_projector(num_states: usize, groups: usize) -> FeatureProjector {
    let phi = aggregation_features(num_states, groups).unwrap();
    FeatureProjector::new(phi, (0..num_states).collect()).unwrap()
}
