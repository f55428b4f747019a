//! Linear value-function approximation over an anchor set.
//!
//! Values are modeled as `phi(i)' * theta` for a per-state feature row
//! `phi(i)`. Estimates are gathered only at the anchor states `D`; fitting a
//! least-squares `theta` on the anchors and evaluating everywhere is the
//! oblique projection `M = Phi (PhiD' PhiD)^-1 PhiD' P`, where `P` selects the
//! anchor rows. The inner gradient-descent loop iterates toward the same fit
//! without forming the inverse.

use rand::RngExt;

use crate::error::{Assumption, Error, Result};
use crate::linalg::{self, LuFactor, Mat};
use crate::mdp::{exact_policy_value, Mdp, Policy, ValueVector};
use crate::schedule::EtaSchedule;
use crate::stream::RngStream;

/// Relative singular-value threshold for the anchor rank check.
pub const RANK_TOL: f64 = 1e-10;

/// Policy-count cap for exact enumeration in [`delta2_estimate`].
pub const ENUMERATION_CAP: u128 = 1_000_000;

/// Feature matrix, anchor set, and the derived projector.
#[derive(Debug, Clone)]
pub struct FeatureProjector {
    phi: Mat,
    anchors: Vec<usize>,
    phi_d: Mat,
    selector: Mat,
    projector_m: Mat,
    normal: Mat,
    normal_lu: LuFactor,
    normal_eigenvalues: Vec<f64>,
}

impl FeatureProjector {
    /// Builds the projector for `phi` (one row per state) and the anchor set.
    ///
    /// Fails with an Assumption 3 violation if the anchor rows of `phi` are
    /// rank deficient (smallest singular value below `RANK_TOL` times the
    /// largest).
    pub fn new(phi: Mat, anchors: Vec<usize>) -> Result<Self> {
        let num_states = phi.rows();
        let dim = phi.cols();
        if anchors.is_empty() {
            return Err(Error::invalid("anchor set must be non-empty"));
        }
        let mut seen = vec![false; num_states];
        for &a in &anchors {
            if a >= num_states {
                return Err(Error::invalid(format!(
                    "anchor state {a} out of range (|S| = {num_states})"
                )));
            }
            if seen[a] {
                return Err(Error::invalid(format!("duplicate anchor state {a}")));
            }
            seen[a] = true;
        }
        if anchors.len() < dim {
            return Err(Error::assumption(
                Assumption::FeatureRank,
                format!(
                    "{} anchors cannot span {dim} feature dimensions",
                    anchors.len()
                ),
            ));
        }

        let phi_d = Mat::from_fn(anchors.len(), dim, |r, c| phi.get(anchors[r], c));
        let selector = Mat::from_fn(anchors.len(), num_states, |r, c| {
            if anchors[r] == c {
                1.0
            } else {
                0.0
            }
        });

        let phi_d_t = phi_d.transpose();
        let normal = phi_d_t.matmul(&phi_d);
        let normal_eigenvalues: Vec<f64> = linalg::sym_eigenvalues(&normal)
            .into_iter()
            .map(|l| l.max(0.0))
            .collect();
        let sigma_max = normal_eigenvalues.last().copied().unwrap_or(0.0).sqrt();
        let sigma_min = normal_eigenvalues.first().copied().unwrap_or(0.0).sqrt();
        if !(sigma_min > RANK_TOL * sigma_max) || sigma_max == 0.0 {
            return Err(Error::assumption(
                Assumption::FeatureRank,
                format!(
                    "anchor feature rows are rank deficient \
                     (singular values range [{sigma_min:.3e}, {sigma_max:.3e}])"
                ),
            ));
        }

        let normal_lu = LuFactor::new(&normal)?;

        // M = Phi * (PhiD' PhiD)^-1 * PhiD' * P, assembled column block first
        let mut inv_phi_d_t = Mat::zeros(dim, anchors.len());
        for col in 0..anchors.len() {
            let rhs: Vec<f64> = (0..dim).map(|r| phi_d_t.get(r, col)).collect();
            let solved = normal_lu.solve(&rhs);
            for r in 0..dim {
                inv_phi_d_t.set(r, col, solved[r]);
            }
        }
        let anchor_block = phi.matmul(&inv_phi_d_t); // |S| x |D|
        let mut projector_m = Mat::zeros(num_states, num_states);
        for (col, &a) in anchors.iter().enumerate() {
            for r in 0..num_states {
                projector_m.set(r, a, anchor_block.get(r, col));
            }
        }

        Ok(FeatureProjector {
            phi,
            anchors,
            phi_d,
            selector,
            projector_m,
            normal,
            normal_lu,
            normal_eigenvalues,
        })
    }

    pub fn num_states(&self) -> usize {
        self.phi.rows()
    }

    pub fn dim(&self) -> usize {
        self.phi.cols()
    }

    pub fn phi(&self) -> &Mat {
        &self.phi
    }

    pub fn anchors(&self) -> &[usize] {
        &self.anchors
    }

    pub fn phi_d(&self) -> &Mat {
        &self.phi_d
    }

    pub fn selector(&self) -> &Mat {
        &self.selector
    }

    pub fn projector(&self) -> &Mat {
        &self.projector_m
    }

    /// Applies the projector to a full state vector.
    pub fn project(&self, v: &ValueVector) -> Result<ValueVector> {
        if v.len() != self.num_states() {
            return Err(Error::invalid(format!(
                "vector has length {}, expected {}",
                v.len(),
                self.num_states()
            )));
        }
        Ok(ValueVector::from_vec(self.projector_m.matvec(v.as_slice())))
    }

    /// Least-squares fit of anchor `targets`: returns the weight vector and
    /// the fitted values `Phi * theta` for every state.
    pub fn least_squares_fit(&self, targets: &[f64]) -> Result<(Vec<f64>, ValueVector)> {
        if targets.len() != self.anchors.len() {
            return Err(Error::invalid(format!(
                "got {} targets for {} anchors",
                targets.len(),
                self.anchors.len()
            )));
        }
        let rhs = self.phi_d_transpose_apply(targets);
        let theta = self.normal_lu.solve(&rhs);
        let fitted = ValueVector::from_vec(self.phi.matvec(&theta));
        Ok((theta, fitted))
    }

    /// `steps` exact-gradient updates toward the least-squares fit, starting
    /// from the zero weight vector with step size `beta`.
    ///
    /// Fails with an Assumption 5 violation unless the iteration contracts,
    /// i.e. `alpha_prime(beta) < 1`.
    pub fn gd_inner_loop(
        &self,
        targets: &[f64],
        beta: f64,
        steps: usize,
    ) -> Result<(Vec<f64>, ValueVector)> {
        if targets.len() != self.anchors.len() {
            return Err(Error::invalid(format!(
                "got {} targets for {} anchors",
                targets.len(),
                self.anchors.len()
            )));
        }
        if steps == 0 {
            return Err(Error::invalid("inner step count must be at least 1"));
        }
        let contraction = self.alpha_prime(beta)?;
        if !(contraction < 1.0) {
            return Err(Error::assumption(
                Assumption::GdContraction,
                format!("spectral norm {contraction} >= 1 at beta = {beta}"),
            ));
        }
        let dim = self.dim();
        let rhs = self.phi_d_transpose_apply(targets);
        let mut theta = vec![0.0; dim];
        let mut grad = vec![0.0; dim];
        for _ in 0..steps {
            // grad = PhiD'PhiD * theta - PhiD' * targets
            for r in 0..dim {
                let row = self.normal.row(r);
                let mut acc = 0.0;
                for (a, t) in row.iter().zip(&theta) {
                    acc += a * t;
                }
                grad[r] = acc - rhs[r];
            }
            for (t, g) in theta.iter_mut().zip(&grad) {
                *t -= beta * g;
            }
        }
        let fitted = ValueVector::from_vec(self.phi.matvec(&theta));
        Ok((theta, fitted))
    }

    /// Spectral norm of `I - beta * PhiD' PhiD`, from the cached eigenvalues
    /// of the normal matrix.
    pub fn alpha_prime(&self, beta: f64) -> Result<f64> {
        if !(beta > 0.0) {
            return Err(Error::invalid(format!("beta must be positive, got {beta}")));
        }
        Ok(self
            .normal_eigenvalues
            .iter()
            .fold(0.0_f64, |m, &l| m.max((1.0 - beta * l).abs())))
    }

    /// Largest eigenvalue of the normal matrix; handy for picking `beta`.
    pub fn normal_spectral_radius(&self) -> f64 {
        self.normal_eigenvalues.last().copied().unwrap_or(0.0)
    }

    fn phi_d_transpose_apply(&self, targets: &[f64]) -> Vec<f64> {
        let dim = self.dim();
        let mut out = vec![0.0; dim];
        for (r, &t) in targets.iter().enumerate() {
            let row = self.phi_d.row(r);
            for (o, &p) in out.iter_mut().zip(row) {
                *o += p * t;
            }
        }
        out
    }
}

/// Gradient-descent configuration for the inner loop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GdConfig {
    pub beta: f64,
    pub eta: EtaSchedule,
}

impl GdConfig {
    pub fn new(beta: f64, eta: EtaSchedule) -> Result<Self> {
        if !(beta > 0.0) {
            return Err(Error::invalid(format!("beta must be positive, got {beta}")));
        }
        Ok(GdConfig { beta, eta })
    }
}

/// How to search the policy space when estimating the projection error.
#[derive(Debug, Clone)]
pub enum Delta2Mode<'a> {
    /// Every deterministic policy; exact, only allowed below [`ENUMERATION_CAP`].
    Enumerate,
    /// `count` policies drawn uniformly with the given seed; a lower bound.
    Sample { count: usize, seed: u64 },
    /// A fixed list of policies (e.g. the ones a run visited); a lower bound.
    Observed(&'a [Policy]),
}

/// The projection-error constant: max over policies of
/// `|| M J_policy - J_policy ||_inf`, with a flag telling whether the policy
/// space was covered exactly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Delta2 {
    pub value: f64,
    pub exact: bool,
}

/// Estimates the projection error over a policy set chosen by `mode`.
/// Non-enumerate modes yield a lower bound (`exact = false`).
pub fn delta2_estimate(mdp: &Mdp, fp: &FeatureProjector, mode: Delta2Mode) -> Result<Delta2> {
    if fp.num_states() != mdp.num_states() {
        return Err(Error::invalid(format!(
            "feature matrix covers {} states, model has {}",
            fp.num_states(),
            mdp.num_states()
        )));
    }
    let residual = |policy: &Policy| -> Result<f64> {
        let j = exact_policy_value(mdp, policy)?;
        let projected = fp.project(&j)?;
        Ok(projected.sup_dist(&j))
    };
    match mode {
        Delta2Mode::Enumerate => {
            let count = (mdp.num_actions() as u128).checked_pow(mdp.num_states() as u32);
            match count {
                Some(c) if c <= ENUMERATION_CAP => {}
                _ => {
                    return Err(Error::Unsupported(format!(
                        "enumeration over |A|^|S| = {}^{} policies exceeds the cap of {}; \
                         use sample mode",
                        mdp.num_actions(),
                        mdp.num_states(),
                        ENUMERATION_CAP
                    )))
                }
            }
            let mut worst = 0.0_f64;
            let mut actions = vec![0usize; mdp.num_states()];
            loop {
                worst = worst.max(residual(&Policy::new(actions.clone()))?);
                // mixed-radix increment over the policy space
                let mut pos = 0;
                loop {
                    if pos == actions.len() {
                        return Ok(Delta2 {
                            value: worst,
                            exact: true,
                        });
                    }
                    actions[pos] += 1;
                    if actions[pos] < mdp.num_actions() {
                        break;
                    }
                    actions[pos] = 0;
                    pos += 1;
                }
            }
        }
        Delta2Mode::Sample { count, seed } => {
            let mut worst = 0.0_f64;
            let mut rng = RngStream::new(seed).rng();
            for _ in 0..count {
                let actions: Vec<usize> = (0..mdp.num_states())
                    .map(|_| rng.random_range(0..mdp.num_actions()))
                    .collect();
                worst = worst.max(residual(&Policy::new(actions))?);
            }
            Ok(Delta2 {
                value: worst,
                exact: false,
            })
        }
        Delta2Mode::Observed(policies) => {
            let mut worst = 0.0_f64;
            for policy in policies {
                worst = worst.max(residual(policy)?);
            }
            Ok(Delta2 {
                value: worst,
                exact: false,
            })
        }
    }
}

/// Tabular (one-hot per state) features: `Phi = I`.
pub fn identity_features(num_states: usize) -> Mat {
    Mat::identity(num_states)
}

/// State-aggregation features: states in a group share a one-hot feature.
/// State `i` belongs to group `i * groups / num_states`, giving contiguous
/// blocks of near-equal size.
pub fn aggregation_features(num_states: usize, groups: usize) -> Result<Mat> {
    if groups == 0 || groups > num_states {
        return Err(Error::invalid(format!(
            "group count must lie in [1, {num_states}], got {groups}"
        )));
    }
    Ok(Mat::from_fn(num_states, groups, |i, g| {
        if aggregation_group(i, num_states, groups) == g {
            1.0
        } else {
            0.0
        }
    }))
}

/// Group index of `state` under the contiguous-block aggregation.
pub fn aggregation_group(state: usize, num_states: usize, groups: usize) -> usize {
    state * groups / num_states
}

/// The first state of each aggregation group; a canonical anchor choice that
/// always satisfies the rank assumption for aggregation features.
pub fn aggregation_representatives(num_states: usize, groups: usize) -> Vec<usize> {
    let mut reps = Vec::with_capacity(groups);
    let mut current = usize::MAX;
    for i in 0..num_states {
        let g = aggregation_group(i, num_states, groups);
        if g != current {
            reps.push(i);
            current = g;
        }
    }
    reps
}
