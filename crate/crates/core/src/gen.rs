//! Built-in MDP generators for experiments and tests.

use rand::RngExt;

use crate::error::{Error, Result};
use crate::mdp::Mdp;
use crate::stream::RngStream;

/// Random MDP with sparse uniform transitions ("Garnet" ensemble).
///
/// For each (state, action) pair, `branching` distinct next states are chosen
/// uniformly and given normalized uniform probabilities; expected costs are
/// uniform in [0, 1]. Deterministic in the seed.
pub fn generate_garnet(
    num_states: usize,
    num_actions: usize,
    branching: usize,
    seed: u64,
    discount: f64,
    cost_noise_halfwidth: f64,
) -> Result<Mdp> {
    if num_states == 0 || num_actions == 0 {
        return Err(Error::invalid("state and action counts must be positive"));
    }
    if branching == 0 || branching > num_states {
        return Err(Error::invalid(format!(
            "branching must lie in [1, {num_states}], got {branching}"
        )));
    }
    let mut rng = RngStream::new(seed).rng();
    let mut transitions = vec![0.0; num_states * num_actions * num_states];
    let mut costs = Vec::with_capacity(num_states * num_actions);
    let mut pool: Vec<usize> = (0..num_states).collect();
    for i in 0..num_states {
        for u in 0..num_actions {
            // partial Fisher-Yates picks `branching` distinct successors
            for slot in 0..branching {
                let pick = rng.random_range(slot..num_states);
                pool.swap(slot, pick);
            }
            let mut masses = Vec::with_capacity(branching);
            let mut total = 0.0;
            for _ in 0..branching {
                let u01: f64 = rng.random();
                let m = 1.0 - u01; // in (0, 1], keeps the sum positive
                masses.push(m);
                total += m;
            }
            let base = (i * num_actions + u) * num_states;
            for (slot, &j) in pool[..branching].iter().enumerate() {
                transitions[base + j] = masses[slot] / total;
            }
            let c: f64 = rng.random();
            costs.push(cost_noise_halfwidth + (1.0 - 2.0 * cost_noise_halfwidth) * c);
        }
    }
    Mdp::with_cost_noise(
        num_states,
        num_actions,
        transitions,
        costs,
        discount,
        cost_noise_halfwidth,
    )
}

/// Deterministic single-action chain: state `i` moves to `i + 1` at cost 1,
/// the last state self-loops at cost 0. The policy value is known in closed
/// form: `J(i) = sum_{t < n-1-i} alpha^t`.
pub fn generate_chain(num_states: usize, discount: f64) -> Result<Mdp> {
    if num_states == 0 {
        return Err(Error::invalid("state count must be positive"));
    }
    let mut transitions = vec![0.0; num_states * num_states];
    let mut costs = vec![1.0; num_states];
    for i in 0..num_states {
        let next = if i + 1 < num_states { i + 1 } else { i };
        transitions[i * num_states + next] = 1.0;
    }
    costs[num_states - 1] = 0.0;
    Mdp::new(num_states, 1, transitions, costs, discount)
}

/// Closed-form policy value of the chain from [`generate_chain`].
pub fn chain_value(num_states: usize, discount: f64) -> Vec<f64> {
    (0..num_states)
        .map(|i| {
            let steps = num_states - 1 - i;
            let mut total = 0.0;
            let mut d = 1.0;
            for _ in 0..steps {
                total += d;
                d *= discount;
            }
            total
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::{exact_policy_value, Policy};

    #[test]
    fn garnet_rows_have_exact_branching_support() {
        let mdp = generate_garnet(20, 4, 3, 7, 0.9, 0.0).unwrap();
        for i in 0..20 {
            for u in 0..4 {
                let support = mdp
                    .transition_row(i, u)
                    .iter()
                    .filter(|&&p| p > 0.0)
                    .count();
                assert_eq!(support, 3, "row ({i},{u})");
            }
        }
    }

    #[test]
    fn garnet_full_branching_fully_supported() {
        let mdp = generate_garnet(6, 2, 6, 1, 0.5, 0.0).unwrap();
        for i in 0..6 {
            for u in 0..2 {
                assert!(mdp.transition_row(i, u).iter().all(|&p| p > 0.0));
            }
        }
    }

    #[test]
    fn garnet_is_seed_deterministic() {
        let a = generate_garnet(8, 3, 2, 42, 0.8, 0.05).unwrap();
        let b = generate_garnet(8, 3, 2, 42, 0.8, 0.05).unwrap();
        assert_eq!(a, b);
        let c = generate_garnet(8, 3, 2, 43, 0.8, 0.05).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn garnet_rejects_bad_branching() {
        assert!(generate_garnet(5, 2, 0, 0, 0.5, 0.0).is_err());
        assert!(generate_garnet(5, 2, 6, 0, 0.5, 0.0).is_err());
    }

    #[test]
    fn chain_matches_closed_form() {
        for (n, alpha, expected) in [
            (2, 0.5, vec![1.0, 0.0]),
            (1, 0.5, vec![0.0]),
            (3, 0.5, vec![1.5, 1.0, 0.0]),
        ] {
            let mdp = generate_chain(n, alpha).unwrap();
            let j = exact_policy_value(&mdp, &Policy::new(vec![0; n])).unwrap();
            for (a, b) in j.iter().zip(&expected) {
                assert!((a - b).abs() < 1e-12, "n = {n}");
            }
            let closed = chain_value(n, alpha);
            for (a, b) in closed.iter().zip(&expected) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }
}
