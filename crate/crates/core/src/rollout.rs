//! Seeded Monte Carlo rollouts for policy evaluation.
//!
//! A rollout simulates the chain induced by a fixed policy for `truncation_len`
//! steps and returns the discounted cost sum. The estimate is unbiased for the
//! infinite-horizon value up to the truncation tail `alpha^L / (1 - alpha)`;
//! [`default_truncation`] picks the smallest `L` that pushes that tail below a
//! requested tolerance.

use rand::RngExt;

use crate::error::{Error, Result};
use crate::mdp::{Mdp, Policy, ValueVector};
use crate::stream::RngStream;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RolloutConfig {
    /// Steps simulated per trajectory (L).
    pub truncation_len: usize,
    /// Independent trajectories averaged per anchor state (N).
    pub trajectories_per_state: usize,
}

impl RolloutConfig {
    pub fn new(truncation_len: usize, trajectories_per_state: usize) -> Result<Self> {
        if truncation_len == 0 || trajectories_per_state == 0 {
            return Err(Error::invalid(
                "truncation length and trajectory count must be at least 1",
            ));
        }
        Ok(RolloutConfig {
            truncation_len,
            trajectories_per_state,
        })
    }
}

/// Sampling statistics for one batch of anchor evaluations.
///
/// The trajectory spread is always available; the noise fields compare the
/// estimates against an exact policy value and are only filled when a
/// reference is attached (diagnostics — the algorithms themselves never see
/// the exact value).
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseStats {
    /// Per-anchor sample standard deviation across the N trajectories.
    pub traj_std: Vec<f64>,
    /// Per-anchor estimation error mean, `est(i) - J(i)`.
    pub noise_mean: Option<Vec<f64>>,
    /// Sup norm of the estimation error. The error is defined as zero off the
    /// anchor set, so the sup ranges over the anchors.
    pub noise_sup: Option<f64>,
}

impl NoiseStats {
    /// Fills the noise fields from an exact policy value.
    pub fn measure_against(&mut self, estimates: &[f64], anchors: &[usize], exact: &ValueVector) {
        let mean: Vec<f64> = estimates
            .iter()
            .zip(anchors)
            .map(|(est, &i)| est - exact[i])
            .collect();
        let sup = mean.iter().fold(0.0_f64, |m, w| m.max(w.abs()));
        self.noise_mean = Some(mean);
        self.noise_sup = Some(sup);
    }
}

/// Smallest `L` with `alpha^L / (1 - alpha) <= tail_tol`, clamped to >= 1.
pub fn default_truncation(alpha: f64, tail_tol: f64) -> Result<usize> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )));
    }
    if !(tail_tol > 0.0) {
        return Err(Error::invalid(format!(
            "tail tolerance must be positive, got {tail_tol}"
        )));
    }
    let target = tail_tol * (1.0 - alpha);
    let guess = (target.ln() / alpha.ln()).ceil();
    let mut len = if guess.is_finite() && guess >= 1.0 {
        guess as usize
    } else {
        1
    };
    // The log-formula guess can be off by one at exact-integer crossings;
    // settle it against the defining inequality directly.
    while len > 1 && alpha.powi(len as i32 - 1) <= target {
        len -= 1;
    }
    while alpha.powi(len as i32) > target {
        len += 1;
    }
    Ok(len)
}

/// One truncated discounted-cost trajectory from `start_state`.
fn simulate_trajectory(
    mdp: &Mdp,
    policy: &Policy,
    start_state: usize,
    truncation_len: usize,
    stream: RngStream,
) -> f64 {
    let mut rng = stream.rng();
    let alpha = mdp.discount();
    let rho = mdp.cost_noise_halfwidth();
    let mut state = start_state;
    let mut discount = 1.0;
    let mut total = 0.0;
    for _ in 0..truncation_len {
        let action = policy.action(state);
        let mut cost = mdp.cost(state, action);
        if rho > 0.0 {
            let u: f64 = rng.random();
            cost += rho * (2.0 * u - 1.0);
        }
        total += discount * cost;
        discount *= alpha;
        // inverse-CDF draw over the dense transition row
        let u: f64 = rng.random();
        let row = mdp.transition_row(state, action);
        let mut acc = 0.0;
        let mut next = row.len() - 1;
        for (j, &p) in row.iter().enumerate() {
            acc += p;
            if u < acc {
                next = j;
                break;
            }
        }
        state = next;
    }
    total
}

/// Average of N independent truncated rollouts under `policy` from
/// `start_state`. Deterministic in `(mdp, policy, cfg, stream)`.
pub fn rollout_estimate(
    mdp: &Mdp,
    policy: &Policy,
    start_state: usize,
    cfg: &RolloutConfig,
    stream: RngStream,
) -> Result<f64> {
    if start_state >= mdp.num_states() {
        return Err(Error::invalid(format!(
            "start state {start_state} out of range (|S| = {})",
            mdp.num_states()
        )));
    }
    if policy.len() != mdp.num_states() {
        return Err(Error::invalid("policy length does not match the model"));
    }
    let n = cfg.trajectories_per_state;
    let mut sum = 0.0;
    for t in 0..n {
        sum += simulate_trajectory(
            mdp,
            policy,
            start_state,
            cfg.truncation_len,
            stream.child(t as u64),
        );
    }
    Ok(sum / n as f64)
}

/// Rollout estimates for every anchor state, in anchor order, plus sampling
/// statistics. Each (anchor, trajectory) pair draws from its own substream.
pub fn evaluate_on_anchors(
    mdp: &Mdp,
    policy: &Policy,
    anchors: &[usize],
    cfg: &RolloutConfig,
    stream: RngStream,
) -> Result<(Vec<f64>, NoiseStats)> {
    if anchors.is_empty() {
        return Err(Error::invalid("anchor set must be non-empty"));
    }
    let mut seen = vec![false; mdp.num_states()];
    for &a in anchors {
        if a >= mdp.num_states() {
            return Err(Error::invalid(format!(
                "anchor state {a} out of range (|S| = {})",
                mdp.num_states()
            )));
        }
        if seen[a] {
            return Err(Error::invalid(format!("duplicate anchor state {a}")));
        }
        seen[a] = true;
    }
    if policy.len() != mdp.num_states() {
        return Err(Error::invalid("policy length does not match the model"));
    }

    let n = cfg.trajectories_per_state;
    let mut estimates = Vec::with_capacity(anchors.len());
    let mut traj_std = Vec::with_capacity(anchors.len());
    for (pos, &a) in anchors.iter().enumerate() {
        let anchor_stream = stream.child(pos as u64);
        let mut samples = Vec::with_capacity(n);
        for t in 0..n {
            samples.push(simulate_trajectory(
                mdp,
                policy,
                a,
                cfg.truncation_len,
                anchor_stream.child(t as u64),
            ));
        }
        let mean = samples.iter().sum::<f64>() / n as f64;
        let var = if n > 1 {
            samples.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / (n - 1) as f64
        } else {
            0.0
        };
        estimates.push(mean);
        traj_std.push(var.sqrt());
    }
    Ok((
        estimates,
        NoiseStats {
            traj_std,
            noise_mean: None,
            noise_sup: None,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::exact_policy_value;

    fn single_state(cost: f64, alpha: f64) -> Mdp {
        Mdp::new(1, 1, vec![1.0], vec![cost], alpha).unwrap()
    }

    fn chain2(alpha: f64) -> Mdp {
        Mdp::new(2, 1, vec![0.0, 1.0, 0.0, 1.0], vec![1.0, 0.0], alpha).unwrap()
    }

    #[test]
    fn deterministic_loop_matches_geometric_partial_sum() {
        let mdp = single_state(1.0, 0.5);
        let cfg = RolloutConfig::new(20, 3).unwrap();
        let est =
            rollout_estimate(&mdp, &Policy::new(vec![0]), 0, &cfg, RngStream::new(1)).unwrap();
        // sum_{t<20} 0.5^t = 2 * (1 - 2^-20), exact in f64
        let expected = 2.0 * (1.0 - 0.5_f64.powi(20));
        assert_eq!(est, expected);
    }

    #[test]
    fn zero_costs_give_zero_estimate() {
        let mdp = single_state(0.0, 0.9);
        for seed in [0, 1, 99] {
            let cfg = RolloutConfig::new(7, 2).unwrap();
            let est = rollout_estimate(&mdp, &Policy::new(vec![0]), 0, &cfg, RngStream::new(seed))
                .unwrap();
            assert_eq!(est, 0.0);
        }
    }

    #[test]
    fn chain_start_pays_only_first_step() {
        let mdp = chain2(0.5);
        let cfg = RolloutConfig::new(30, 1).unwrap();
        let est =
            rollout_estimate(&mdp, &Policy::new(vec![0, 0]), 0, &cfg, RngStream::new(3)).unwrap();
        assert_eq!(est, 1.0);
    }

    #[test]
    fn invalid_start_state_rejected() {
        let mdp = single_state(0.5, 0.5);
        let cfg = RolloutConfig::new(5, 1).unwrap();
        assert!(rollout_estimate(&mdp, &Policy::new(vec![0]), 1, &cfg, RngStream::new(0)).is_err());
    }

    #[test]
    fn anchors_zero_cost() {
        let mdp = single_state(0.0, 0.5);
        let cfg = RolloutConfig::new(5, 2).unwrap();
        let (est, _) =
            evaluate_on_anchors(&mdp, &Policy::new(vec![0]), &[0], &cfg, RngStream::new(0))
                .unwrap();
        assert_eq!(est, vec![0.0]);
    }

    #[test]
    fn anchors_geometric_partial_sum() {
        let mdp = single_state(1.0, 0.5);
        let cfg = RolloutConfig::new(20, 4).unwrap();
        let (est, _) =
            evaluate_on_anchors(&mdp, &Policy::new(vec![0]), &[0], &cfg, RngStream::new(0))
                .unwrap();
        assert_eq!(est, vec![2.0 * (1.0 - 0.5_f64.powi(20))]);
    }

    #[test]
    fn identical_streams_identical_outputs() {
        let mdp =
            Mdp::with_cost_noise(2, 1, vec![0.3, 0.7, 0.6, 0.4], vec![0.5, 0.4], 0.8, 0.1).unwrap();
        let cfg = RolloutConfig::new(25, 3).unwrap();
        let policy = Policy::new(vec![0, 0]);
        let (a, _) = evaluate_on_anchors(&mdp, &policy, &[0, 1], &cfg, RngStream::new(42)).unwrap();
        let (b, _) = evaluate_on_anchors(&mdp, &policy, &[0, 1], &cfg, RngStream::new(42)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn duplicate_anchor_rejected() {
        let mdp = chain2(0.5);
        let cfg = RolloutConfig::new(5, 1).unwrap();
        let policy = Policy::new(vec![0, 0]);
        assert!(evaluate_on_anchors(&mdp, &policy, &[0, 0], &cfg, RngStream::new(0)).is_err());
        assert!(evaluate_on_anchors(&mdp, &policy, &[0, 5], &cfg, RngStream::new(0)).is_err());
        assert!(evaluate_on_anchors(&mdp, &policy, &[], &cfg, RngStream::new(0)).is_err());
    }

    #[test]
    fn truncation_solves_inequality() {
        // alpha = 0.5, tol = 2^-20: need 0.5^L * 2 <= 2^-20, so L >= 21
        assert_eq!(default_truncation(0.5, 0.5_f64.powi(20)).unwrap(), 21);
        // clamp at 1
        assert_eq!(default_truncation(0.5, 1.0).unwrap(), 1);
        assert_eq!(default_truncation(0.5, 10.0).unwrap(), 1);
    }

    #[test]
    fn truncation_matches_brute_force_scan() {
        for &(alpha, tol) in &[(0.9, 1e-6), (0.3, 1e-4), (0.99, 1e-3), (0.5, 1e-9)] {
            let len = default_truncation(alpha, tol).unwrap();
            let mut scan = 1usize;
            while alpha.powi(scan as i32) / (1.0 - alpha) > tol {
                scan += 1;
            }
            assert_eq!(len, scan, "alpha = {alpha}, tol = {tol}");
        }
    }

    #[test]
    fn estimates_stay_in_value_range() {
        let mdp = Mdp::with_cost_noise(
            3,
            2,
            vec![
                0.5, 0.25, 0.25, 0.1, 0.8, 0.1, // state 0
                0.3, 0.3, 0.4, 1.0, 0.0, 0.0, // state 1
                0.0, 0.5, 0.5, 0.2, 0.2, 0.6, // state 2
            ],
            vec![0.5, 0.9, 0.1, 0.5, 0.3, 0.7],
            0.9,
            0.1,
        )
        .unwrap();
        let bound = 1.0 / (1.0 - mdp.discount());
        let cfg = RolloutConfig::new(50, 2).unwrap();
        for seed in 0..20 {
            let policy = Policy::new(vec![seed as usize % 2, 0, 1]);
            let (est, _) =
                evaluate_on_anchors(&mdp, &policy, &[0, 1, 2], &cfg, RngStream::new(seed)).unwrap();
            for e in est {
                assert!(
                    (0.0..=bound).contains(&e),
                    "estimate {e} outside [0, {bound}]"
                );
            }
        }
    }

    #[test]
    fn unbiased_up_to_truncation_on_random_chain() {
        // 5-state model with noisy costs; average many rollouts per state and
        // compare to the exact policy value within tail bias + 3 standard errors.
        let mut transitions = Vec::new();
        let mut costs = Vec::new();
        let states = 5;
        let mut rng = RngStream::new(2024).rng();
        for _ in 0..states {
            let mut row = vec![0.0; states];
            let mut total = 0.0;
            for p in row.iter_mut() {
                let u: f64 = rng.random();
                *p = u;
                total += u;
            }
            for p in row.iter_mut() {
                *p /= total;
            }
            transitions.extend_from_slice(&row);
            let c: f64 = rng.random();
            costs.push(0.1 + 0.8 * c);
        }
        let mdp = Mdp::with_cost_noise(states, 1, transitions, costs, 0.5, 0.1).unwrap();
        let policy = Policy::new(vec![0; states]);
        let exact = exact_policy_value(&mdp, &policy).unwrap();

        let len = 40;
        let total = 4000;
        let cfg = RolloutConfig::new(len, total).unwrap();
        let tail = 0.5_f64.powi(len as i32) / 0.5;
        let (est, stats) =
            evaluate_on_anchors(&mdp, &policy, &[0, 1, 2, 3, 4], &cfg, RngStream::new(5)).unwrap();
        for (i, e) in est.iter().enumerate() {
            let stderr = stats.traj_std[i] / (total as f64).sqrt();
            let err = (e - exact[i]).abs();
            assert!(
                err <= tail + 3.0 * stderr,
                "state {i}: err {err} > tail {tail} + 3*stderr {stderr}"
            );
        }
    }

    #[test]
    fn noise_stats_measure_against_exact() {
        let mdp = single_state(1.0, 0.5);
        let cfg = RolloutConfig::new(40, 2).unwrap();
        let policy = Policy::new(vec![0]);
        let (est, mut stats) =
            evaluate_on_anchors(&mdp, &policy, &[0], &cfg, RngStream::new(0)).unwrap();
        let exact = exact_policy_value(&mdp, &policy).unwrap();
        stats.measure_against(&est, &[0], &exact);
        let sup = stats.noise_sup.unwrap();
        assert!(sup <= 2.0 / (1.0 - mdp.discount()));
        assert_eq!(stats.noise_mean.as_ref().unwrap().len(), 1);
    }
}
