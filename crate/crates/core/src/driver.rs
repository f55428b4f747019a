//! Outer stochastic-approximation loops.
//!
//! Both algorithms repeat the same four moves: extract the H-step lookahead
//! policy of the current iterate, estimate that policy's value at the anchor
//! states by Monte Carlo rollout, fit the feature weights to the estimates
//! (exact least squares, or a budgeted gradient-descent loop toward it), and
//! blend the fitted values into the iterate with step size `gamma_k`:
//!
//! `V_{k+1} = (1 - gamma_k) V_k + gamma_k * (Phi theta_{k+1})`
//!
//! Runs are deterministic given the seed; iteration `k` draws from the
//! substream derived from `(seed, k)`, so the two variants can share noise
//! realizations for trace comparison.

use crate::error::{Assumption, Error, Result};
use crate::features::{FeatureProjector, GdConfig};
use crate::mdp::{
    bellman_optimality_apply, bellman_policy_apply, exact_policy_value, lookahead_policy, Mdp,
    Policy, ValueVector,
};
use crate::rollout::{evaluate_on_anchors, RolloutConfig};
use crate::schedule::Schedule;
use crate::stream::RngStream;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    LeastSquares,
    GradientDescent,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub algorithm: Algorithm,
    /// Lookahead depth H >= 1.
    pub lookahead_h: usize,
    /// Outer iteration count K.
    pub iterations: usize,
    pub gamma: Schedule,
    /// Inner-loop configuration; required for the gradient-descent variant.
    pub gd: Option<GdConfig>,
    pub rollout: RolloutConfig,
    /// Starting iterate; zero when absent.
    pub v0: Option<ValueVector>,
    pub seed: u64,
    /// When set, each iteration also computes the exact value of the current
    /// lookahead policy to record noise statistics and the projected-value
    /// residual. The algorithms themselves never read these.
    pub diagnostics: bool,
}

/// Per-iteration trace entry. `value` is the post-update iterate `V_{k+1}`;
/// the error fields describe the pre-update iterate `V_k`.
#[derive(Debug, Clone)]
pub struct IterationRecord {
    pub k: usize,
    pub gamma: f64,
    /// Lookahead policy extracted from `V_k`.
    pub policy: Policy,
    /// Anchor estimates of the lookahead policy's value.
    pub estimates: Vec<f64>,
    /// Fitted weights (the inner-loop output for the gradient variant).
    pub theta: Vec<f64>,
    /// Inner gradient steps spent this iteration (gradient variant only).
    pub eta: Option<usize>,
    /// `V_{k+1}`.
    pub value: ValueVector,
    /// `||V_k - J*||_inf`, when an oracle was supplied.
    pub sup_error: Option<f64>,
    /// `min_i (V_k(i) - J*(i))`, when an oracle was supplied.
    pub min_gap: Option<f64>,
    /// `||T V_k - V_k||_inf`.
    pub bellman_residual: f64,
    /// Per-anchor trajectory standard deviations.
    pub traj_std: Vec<f64>,
    /// Sup norm of the estimation noise (diagnostics only).
    pub noise_sup: Option<f64>,
    /// `||T_greedy(V_{k+1}) (M J^mu) - M J^mu||_inf` (diagnostics only).
    pub projected_residual: Option<f64>,
}

/// Assumption bookkeeping for a run. Diagnostic-only schedules run with their
/// flag set to false instead of aborting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AssumptionFlags {
    /// Assumption 4 holds for the outer step sizes.
    pub step_sizes_ok: bool,
    /// Assumption 7 holds for the inner step counts (gradient variant).
    pub eta_growing: Option<bool>,
    /// The checked Assumption 5 contraction factor (gradient variant).
    pub alpha_prime: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    /// First iteration index of the tail window (last 20% of the run).
    pub tail_start: usize,
    /// Max of `sup_error` over the tail window.
    pub tail_max_sup_error: Option<f64>,
    /// Standard error of `sup_error` over the tail window.
    pub tail_sup_error_stderr: Option<f64>,
    /// Min of `min_gap` over the tail window.
    pub tail_min_gap: Option<f64>,
    /// Max of `||V_k||_inf` over the whole run, including the start point.
    pub max_value_sup: f64,
    /// Max recorded noise sup norm (diagnostics only).
    pub max_noise_sup: Option<f64>,
    /// Max recorded projected-value residual (diagnostics only).
    pub max_projected_residual: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct RunRecord {
    pub algorithm: Algorithm,
    pub initial_value: ValueVector,
    pub iterations: Vec<IterationRecord>,
    pub flags: AssumptionFlags,
    pub summary: RunSummary,
}

impl RunRecord {
    /// Iteration records in the tail window.
    pub fn tail(&self) -> &[IterationRecord] {
        &self.iterations[self.summary.tail_start..]
    }

    /// Every distinct policy the run visited.
    pub fn visited_policies(&self) -> Vec<Policy> {
        let mut seen = std::collections::HashSet::new();
        let mut out = Vec::new();
        for rec in &self.iterations {
            if seen.insert(rec.policy.clone()) {
                out.push(rec.policy.clone());
            }
        }
        out
    }
}

/// The stochastic-approximation blend `(1 - gamma) v + gamma * fitted`.
/// Exposed so traces can be replayed bit-for-bit.
pub fn sa_update(v: &ValueVector, fitted: &ValueVector, gamma: f64) -> ValueVector {
    let out: Vec<f64> = v
        .iter()
        .zip(fitted.iter())
        .map(|(a, b)| (1.0 - gamma) * a + gamma * b)
        .collect();
    ValueVector::from_vec(out)
}

/// First index of the tail window: the last 20% of `iterations`.
pub fn tail_start(iterations: usize) -> usize {
    iterations - iterations.div_ceil(5)
}

/// Runs the least-squares variant.
pub fn run_algorithm_ls(
    mdp: &Mdp,
    fp: &FeatureProjector,
    cfg: &RunConfig,
    oracle: Option<&ValueVector>,
) -> Result<RunRecord> {
    if cfg.algorithm != Algorithm::LeastSquares {
        return Err(Error::invalid(
            "run_algorithm_ls requires the least-squares algorithm",
        ));
    }
    run(mdp, fp, cfg, oracle)
}

/// Runs the gradient-descent variant.
pub fn run_algorithm_gd(
    mdp: &Mdp,
    fp: &FeatureProjector,
    cfg: &RunConfig,
    oracle: Option<&ValueVector>,
) -> Result<RunRecord> {
    if cfg.algorithm != Algorithm::GradientDescent {
        return Err(Error::invalid(
            "run_algorithm_gd requires the gradient-descent algorithm",
        ));
    }
    run(mdp, fp, cfg, oracle)
}

/// Runs either variant. All assumption checks happen before iteration 0.
pub fn run(
    mdp: &Mdp,
    fp: &FeatureProjector,
    cfg: &RunConfig,
    oracle: Option<&ValueVector>,
) -> Result<RunRecord> {
    mdp.validate()?;
    if fp.num_states() != mdp.num_states() {
        return Err(Error::invalid(format!(
            "feature matrix covers {} states, model has {}",
            fp.num_states(),
            mdp.num_states()
        )));
    }
    if cfg.lookahead_h == 0 {
        return Err(Error::invalid("lookahead depth must be at least 1"));
    }
    if cfg.iterations == 0 {
        return Err(Error::invalid("iteration count must be at least 1"));
    }
    if let Some(v0) = &cfg.v0 {
        if v0.len() != mdp.num_states() {
            return Err(Error::invalid(format!(
                "starting iterate has length {}, expected {}",
                v0.len(),
                mdp.num_states()
            )));
        }
    }
    if let Some(j) = oracle {
        if j.len() != mdp.num_states() {
            return Err(Error::invalid("oracle length does not match the model"));
        }
    }
    if !cfg.gamma.robbins_monro() && !cfg.gamma.diagnostic_only() {
        return Err(Error::assumption(
            Assumption::StepSizes,
            "outer step-size schedule is not square-summable with divergent sum",
        ));
    }

    let gd = match cfg.algorithm {
        Algorithm::LeastSquares => None,
        Algorithm::GradientDescent => {
            let gd = cfg.gd.as_ref().ok_or_else(|| {
                Error::invalid("gradient-descent runs need an inner-loop configuration")
            })?;
            let contraction = fp.alpha_prime(gd.beta)?;
            if !(contraction < 1.0) {
                return Err(Error::assumption(
                    Assumption::GdContraction,
                    format!("spectral norm {contraction} >= 1 at beta = {}", gd.beta),
                ));
            }
            if !gd.eta.growing() && !gd.eta.diagnostic_only() {
                return Err(Error::assumption(
                    Assumption::GrowingInnerSteps,
                    "inner step counts do not grow without bound",
                ));
            }
            Some((gd, contraction))
        }
    };

    let flags = AssumptionFlags {
        step_sizes_ok: cfg.gamma.robbins_monro(),
        eta_growing: gd.as_ref().map(|(g, _)| g.eta.growing()),
        alpha_prime: gd.as_ref().map(|(_, a)| *a),
    };

    let initial_value = cfg
        .v0
        .clone()
        .unwrap_or_else(|| ValueVector::zeros(mdp.num_states()));
    let root = RngStream::new(cfg.seed);

    let mut v = initial_value.clone();
    let mut records = Vec::with_capacity(cfg.iterations);
    let mut max_value_sup = v.sup_norm();
    for k in 0..cfg.iterations {
        let stream = root.child(k as u64);
        let policy = lookahead_policy(mdp, &v, cfg.lookahead_h)?;
        let (estimates, mut stats) =
            evaluate_on_anchors(mdp, &policy, fp.anchors(), &cfg.rollout, stream)?;
        let (theta, fitted, eta) = match (cfg.algorithm, &gd) {
            (Algorithm::LeastSquares, _) => {
                let (theta, fitted) = fp.least_squares_fit(&estimates)?;
                (theta, fitted, None)
            }
            (Algorithm::GradientDescent, Some((gd_cfg, _))) => {
                let steps = gd_cfg.eta.value(k);
                let (theta, fitted) = fp.gd_inner_loop(&estimates, gd_cfg.beta, steps)?;
                (theta, fitted, Some(steps))
            }
            (Algorithm::GradientDescent, None) => unreachable!("checked above"),
        };
        let gamma = cfg.gamma.value(k);
        let next = sa_update(&v, &fitted, gamma);

        let (tv, _) = bellman_optimality_apply(mdp, &v)?;
        let bellman_residual = tv.sup_dist(&v);
        let (sup_error, min_gap) = match oracle {
            Some(j_star) => {
                let sup = v.sup_dist(j_star);
                let gap = v
                    .iter()
                    .zip(j_star.iter())
                    .map(|(a, b)| a - b)
                    .fold(f64::INFINITY, f64::min);
                (Some(sup), Some(gap))
            }
            None => (None, None),
        };

        let mut projected_residual = None;
        if cfg.diagnostics {
            let j_policy = exact_policy_value(mdp, &policy)?;
            stats.measure_against(&estimates, fp.anchors(), &j_policy);
            let projected = fp.project(&j_policy)?;
            let greedy = lookahead_policy(mdp, &next, 1)?;
            let applied = bellman_policy_apply(mdp, &greedy, &projected)?;
            projected_residual = Some(applied.sup_dist(&projected));
        }

        max_value_sup = max_value_sup.max(next.sup_norm());
        records.push(IterationRecord {
            k,
            gamma,
            policy,
            estimates,
            theta,
            eta,
            value: next.clone(),
            sup_error,
            min_gap,
            bellman_residual,
            traj_std: stats.traj_std,
            noise_sup: stats.noise_sup,
            projected_residual,
        });
        v = next;
    }

    let start = tail_start(cfg.iterations);
    let tail = &records[start..];
    let tail_errors: Vec<f64> = tail.iter().filter_map(|r| r.sup_error).collect();
    let (tail_max_sup_error, tail_sup_error_stderr) = if tail_errors.is_empty() {
        (None, None)
    } else {
        let max = tail_errors.iter().fold(0.0_f64, |m, &e| m.max(e));
        let mean = tail_errors.iter().sum::<f64>() / tail_errors.len() as f64;
        let var = tail_errors
            .iter()
            .map(|e| (e - mean) * (e - mean))
            .sum::<f64>()
            / tail_errors.len() as f64;
        let stderr = (var / tail_errors.len() as f64).sqrt();
        (Some(max), Some(stderr))
    };
    let tail_min_gap = tail
        .iter()
        .filter_map(|r| r.min_gap)
        .fold(None, |acc: Option<f64>, g| {
            Some(acc.map_or(g, |a| a.min(g)))
        });
    let max_noise_sup = records
        .iter()
        .filter_map(|r| r.noise_sup)
        .fold(None, |acc: Option<f64>, s| {
            Some(acc.map_or(s, |a| a.max(s)))
        });
    let max_projected_residual = records
        .iter()
        .filter_map(|r| r.projected_residual)
        .fold(None, |acc: Option<f64>, s| {
            Some(acc.map_or(s, |a| a.max(s)))
        });

    Ok(RunRecord {
        algorithm: cfg.algorithm,
        initial_value,
        iterations: records,
        flags,
        summary: RunSummary {
            tail_start: start,
            tail_max_sup_error,
            tail_sup_error_stderr,
            tail_min_gap,
            max_value_sup,
            max_noise_sup,
            max_projected_residual,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{identity_features, FeatureProjector};
    use crate::gen::generate_garnet;
    use crate::linalg::Mat;
    use crate::mdp::optimal_value;
    use crate::schedule::EtaSchedule;

    fn zero_mdp() -> Mdp {
        Mdp::new(
            2,
            2,
            vec![0.0, 1.0, 1.0, 0.0, 0.5, 0.5, 1.0, 0.0],
            vec![0.0; 4],
            0.5,
        )
        .unwrap()
    }

    fn tabular_fp(n: usize) -> FeatureProjector {
        FeatureProjector::new(identity_features(n), (0..n).collect()).unwrap()
    }

    fn ls_config(iterations: usize, seed: u64) -> RunConfig {
        RunConfig {
            algorithm: Algorithm::LeastSquares,
            lookahead_h: 1,
            iterations,
            gamma: Schedule::harmonic(1.0, 1.0).unwrap(),
            gd: None,
            rollout: RolloutConfig::new(30, 1).unwrap(),
            v0: None,
            seed,
            diagnostics: true,
        }
    }

    #[test]
    fn zero_mdp_stays_at_zero() {
        let mdp = zero_mdp();
        let fp = tabular_fp(2);
        let (j_star, _) = optimal_value(&mdp, 1e-10).unwrap();
        let record = run_algorithm_ls(&mdp, &fp, &ls_config(50, 3), Some(&j_star)).unwrap();
        for rec in &record.iterations {
            assert_eq!(rec.value.as_slice(), &[0.0, 0.0]);
            assert_eq!(rec.sup_error, Some(0.0));
        }
        assert_eq!(record.summary.tail_max_sup_error, Some(0.0));
    }

    #[test]
    fn unit_gamma_tabular_run_is_policy_iteration() {
        // gamma = 1, identity features, exact rollouts: V_{k+1} = J-hat of the
        // greedy policy, i.e. classical policy iteration up to rollout noise.
        // On a deterministic 3-state model it reaches the optimum quickly.
        let mdp = generate_garnet(3, 2, 1, 11, 0.5, 0.0).unwrap();
        let fp = tabular_fp(3);
        let (j_star, _) = optimal_value(&mdp, 1e-12).unwrap();
        let cfg = RunConfig {
            gamma: Schedule::constant(1.0).unwrap(),
            rollout: RolloutConfig::new(60, 1).unwrap(),
            iterations: 12,
            ..ls_config(12, 0)
        };
        let record = run_algorithm_ls(&mdp, &fp, &cfg, Some(&j_star)).unwrap();
        let last = record.iterations.last().unwrap();
        // branching 1 makes trajectories deterministic, so the fit is exact up
        // to truncation bias
        assert!(last.value.sup_dist(&j_star) < 1e-6);
        assert!(
            !record.flags.step_sizes_ok,
            "constant gamma violates Assumption 4"
        );
    }

    #[test]
    fn update_identity_holds_exactly() {
        let mdp = generate_garnet(4, 2, 2, 5, 0.7, 0.1).unwrap();
        let fp = tabular_fp(4);
        let cfg = ls_config(25, 9);
        let record = run_algorithm_ls(&mdp, &fp, &cfg, None).unwrap();
        let mut prev = record.initial_value.clone();
        for rec in &record.iterations {
            let fitted = ValueVector::from_vec(fp.phi().matvec(&rec.theta));
            let expected = sa_update(&prev, &fitted, rec.gamma);
            assert_eq!(rec.value, expected, "iteration {}", rec.k);
            prev = rec.value.clone();
        }
    }

    #[test]
    fn identical_seeds_identical_records() {
        let mdp = generate_garnet(4, 3, 2, 1, 0.6, 0.05).unwrap();
        let fp = tabular_fp(4);
        let cfg = ls_config(15, 77);
        let a = run_algorithm_ls(&mdp, &fp, &cfg, None).unwrap();
        let b = run_algorithm_ls(&mdp, &fp, &cfg, None).unwrap();
        for (ra, rb) in a.iterations.iter().zip(&b.iterations) {
            assert_eq!(ra.value, rb.value);
            assert_eq!(ra.estimates, rb.estimates);
            assert_eq!(ra.policy, rb.policy);
        }
    }

    #[test]
    fn wrapper_rejects_mismatched_algorithm() {
        let mdp = zero_mdp();
        let fp = tabular_fp(2);
        let cfg = ls_config(5, 0);
        assert!(run_algorithm_gd(&mdp, &fp, &cfg, None).is_err());
        let gd_cfg = RunConfig {
            algorithm: Algorithm::GradientDescent,
            gd: Some(GdConfig::new(0.5, EtaSchedule::linear(1, 1).unwrap()).unwrap()),
            ..cfg
        };
        assert!(run_algorithm_ls(&mdp, &fp, &gd_cfg, None).is_err());
    }

    #[test]
    fn gd_without_inner_config_is_rejected() {
        let mdp = zero_mdp();
        let fp = tabular_fp(2);
        let cfg = RunConfig {
            algorithm: Algorithm::GradientDescent,
            ..ls_config(5, 0)
        };
        assert!(run(&mdp, &fp, &cfg, None).is_err());
    }

    #[test]
    fn gd_non_contracting_beta_fails_before_iteration_zero() {
        let mdp = zero_mdp();
        let fp = tabular_fp(2);
        let cfg = RunConfig {
            algorithm: Algorithm::GradientDescent,
            gd: Some(GdConfig::new(2.5, EtaSchedule::linear(1, 1).unwrap()).unwrap()),
            ..ls_config(5, 0)
        };
        let err = run(&mdp, &fp, &cfg, None).unwrap_err();
        assert!(err.to_string().contains("Assumption 5"), "{err}");
    }

    #[test]
    fn gd_scalar_unit_step_matches_ls_bitwise() {
        // d = 1, PhiD = [[1]], beta = 1: the inner loop solves exactly in one
        // step, so the gradient trace equals the least-squares trace.
        let mdp = generate_garnet(3, 2, 2, 21, 0.5, 0.1).unwrap();
        let phi = Mat::from_rows(&[vec![1.0], vec![0.4], vec![0.7]]).unwrap();
        let fp = FeatureProjector::new(phi, vec![0]).unwrap();
        let base = RunConfig {
            rollout: RolloutConfig::new(40, 2).unwrap(),
            ..ls_config(30, 5)
        };
        let gd_cfg = RunConfig {
            algorithm: Algorithm::GradientDescent,
            gd: Some(GdConfig::new(1.0, EtaSchedule::constant(1).unwrap()).unwrap()),
            ..base.clone()
        };
        let ls = run_algorithm_ls(&mdp, &fp, &base, None).unwrap();
        let gd = run_algorithm_gd(&mdp, &fp, &gd_cfg, None).unwrap();
        for (a, b) in ls.iterations.iter().zip(&gd.iterations) {
            assert_eq!(a.value, b.value, "iteration {}", a.k);
        }
        assert_eq!(gd.flags.eta_growing, Some(false));
    }

    #[test]
    fn gd_zero_costs_stay_zero() {
        let mdp = zero_mdp();
        let fp = tabular_fp(2);
        let cfg = RunConfig {
            algorithm: Algorithm::GradientDescent,
            gd: Some(GdConfig::new(0.5, EtaSchedule::linear(1, 2).unwrap()).unwrap()),
            ..ls_config(20, 1)
        };
        let record = run(&mdp, &fp, &cfg, None).unwrap();
        for rec in &record.iterations {
            assert_eq!(rec.value.as_slice(), &[0.0, 0.0]);
        }
        assert_eq!(record.flags.eta_growing, Some(true));
    }

    #[test]
    fn gd_fitted_values_approach_ls_geometrically() {
        // Constant eta sweeps: the per-iteration gap to the least-squares trace
        // shrinks at least at rate alpha_prime^eta.
        let mdp = generate_garnet(6, 2, 3, 8, 0.5, 0.0).unwrap();
        let phi = crate::features::aggregation_features(6, 2).unwrap();
        let fp = FeatureProjector::new(phi, (0..6).collect()).unwrap();
        let beta = 0.5 / fp.normal_spectral_radius();
        let alpha_prime = fp.alpha_prime(beta).unwrap();
        let base = RunConfig {
            rollout: RolloutConfig::new(40, 1).unwrap(),
            iterations: 40,
            ..ls_config(40, 13)
        };
        let ls = run_algorithm_ls(&mdp, &fp, &base, None).unwrap();
        let fit_scale = ls
            .iterations
            .iter()
            .map(|r| ValueVector::from_vec(fp.phi().matvec(&r.theta)).sup_norm())
            .fold(0.0_f64, f64::max);
        let mut prev_gap = f64::INFINITY;
        for eta in [4usize, 8, 12] {
            let cfg = RunConfig {
                algorithm: Algorithm::GradientDescent,
                gd: Some(GdConfig::new(beta, EtaSchedule::constant(eta).unwrap()).unwrap()),
                ..base.clone()
            };
            let gd = run_algorithm_gd(&mdp, &fp, &cfg, None).unwrap();
            let mut gap = 0.0_f64;
            for (a, b) in ls.iterations.iter().zip(&gd.iterations) {
                // compare the per-iteration fitted vectors under shared noise
                if a.policy == b.policy {
                    let fa = ValueVector::from_vec(fp.phi().matvec(&a.theta));
                    let fb = ValueVector::from_vec(fp.phi().matvec(&b.theta));
                    gap = gap.max(fa.sup_dist(&fb));
                }
            }
            assert!(
                gap <= alpha_prime.powi(eta as i32) * fit_scale * (1.0 + 1e-9) + 1e-12,
                "eta = {eta}: gap {gap}"
            );
            assert!(gap <= prev_gap + 1e-15);
            prev_gap = gap;
        }
    }

    #[test]
    fn values_remain_bounded() {
        let mdp = generate_garnet(5, 3, 2, 30, 0.9, 0.05).unwrap();
        let fp = tabular_fp(5);
        let cfg = RunConfig {
            rollout: RolloutConfig::new(80, 1).unwrap(),
            iterations: 300,
            ..ls_config(300, 4)
        };
        let record = run_algorithm_ls(&mdp, &fp, &cfg, None).unwrap();
        // identity features: delta2 = 0, so 2 / (1 - alpha) bounds everything
        assert!(record.summary.max_value_sup <= 2.0 / (1.0 - mdp.discount()));
    }

    #[test]
    fn diagnostics_satisfy_projected_residual_bound() {
        use crate::bounds::projected_residual_bound;
        use crate::features::{aggregation_features, delta2_estimate, Delta2Mode};
        let mdp = generate_garnet(6, 2, 3, 2, 0.5, 0.0).unwrap();
        let phi = aggregation_features(6, 2).unwrap();
        let fp = FeatureProjector::new(phi, (0..6).collect()).unwrap();
        let delta2 = delta2_estimate(&mdp, &fp, Delta2Mode::Enumerate).unwrap();
        assert!(delta2.exact);
        let cfg = RunConfig {
            lookahead_h: 2,
            iterations: 150,
            rollout: RolloutConfig::new(31, 1).unwrap(),
            ..ls_config(150, 8)
        };
        let record = run_algorithm_ls(&mdp, &fp, &cfg, None).unwrap();
        let bound = projected_residual_bound(delta2.value, mdp.discount());
        let worst = record.summary.max_projected_residual.unwrap();
        assert!(worst <= bound, "{worst} > {bound}");
        // and the iterates stay inside the coarse envelope
        let envelope = 2.0 / (1.0 - mdp.discount()) + 2.0 * delta2.value;
        assert!(record.summary.max_value_sup <= envelope);
    }

    #[test]
    fn tail_window_is_last_fifth() {
        assert_eq!(tail_start(20000), 16000);
        assert_eq!(tail_start(5), 4);
        assert_eq!(tail_start(1), 0);
        assert_eq!(tail_start(4), 3);
    }
}
