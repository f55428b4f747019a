//! Finite MDP model and exact dynamic-programming oracles.
//!
//! The model is dense: the transition kernel is stored as one `f64` per
//! (state, action, next state) triple. Target instances stay at a few
//! thousand states, where dense storage keeps everything self-contained.

use crate::error::{Assumption, Error, Result};
use crate::linalg::{self, Mat};

/// Tolerance for "each transition row sums to one".
pub const KERNEL_SUM_TOL: f64 = 1e-12;

/// A finite Markov decision process with discounted costs.
///
/// Stage costs are expectations `g(i, u)` in `[0, 1]`; simulation may add
/// symmetric uniform noise of half-width `cost_noise_halfwidth`, and the
/// constructor enforces `rho <= g <= 1 - rho` so sampled costs stay in
/// `[0, 1]` (Assumption 1).
#[derive(Debug, Clone, PartialEq)]
pub struct Mdp {
    num_states: usize,
    num_actions: usize,
    /// P[(i*A + u)*S + j] = probability of j given (i, u).
    transitions: Vec<f64>,
    /// g[i*A + u] = expected cost of action u in state i.
    costs: Vec<f64>,
    cost_noise_halfwidth: f64,
    discount: f64,
}

impl Mdp {
    /// Validates and builds a model. `transitions` is indexed
    /// `(i*num_actions + u)*num_states + j`, `costs` is `i*num_actions + u`.
    pub fn new(
        num_states: usize,
        num_actions: usize,
        transitions: Vec<f64>,
        costs: Vec<f64>,
        discount: f64,
    ) -> Result<Self> {
        Self::with_cost_noise(num_states, num_actions, transitions, costs, discount, 0.0)
    }

    pub fn with_cost_noise(
        num_states: usize,
        num_actions: usize,
        transitions: Vec<f64>,
        costs: Vec<f64>,
        discount: f64,
        cost_noise_halfwidth: f64,
    ) -> Result<Self> {
        if num_states == 0 || num_actions == 0 {
            return Err(Error::invalid("state and action counts must be positive"));
        }
        if !(discount > 0.0 && discount < 1.0) {
            return Err(Error::invalid(format!(
                "discount must lie in (0, 1), got {discount}"
            )));
        }
        if transitions.len() != num_states * num_actions * num_states {
            return Err(Error::invalid(format!(
                "transition table has {} entries, expected {}",
                transitions.len(),
                num_states * num_actions * num_states
            )));
        }
        if costs.len() != num_states * num_actions {
            return Err(Error::invalid(format!(
                "cost table has {} entries, expected {}",
                costs.len(),
                num_states * num_actions
            )));
        }
        if !(0.0..=0.5).contains(&cost_noise_halfwidth) {
            return Err(Error::invalid(format!(
                "cost noise half-width must lie in [0, 0.5], got {cost_noise_halfwidth}"
            )));
        }
        let mdp = Mdp {
            num_states,
            num_actions,
            transitions,
            costs,
            cost_noise_halfwidth,
            discount,
        };
        mdp.validate()?;
        Ok(mdp)
    }

    /// Re-checks the structural invariants and Assumption 1.
    pub fn validate(&self) -> Result<()> {
        for i in 0..self.num_states {
            for u in 0..self.num_actions {
                let row = self.transition_row(i, u);
                let mut sum = 0.0;
                for (j, &p) in row.iter().enumerate() {
                    if !(p >= 0.0) {
                        return Err(Error::invalid(format!(
                            "P[{i},{u},{j}] = {p} is negative or NaN"
                        )));
                    }
                    sum += p;
                }
                if (sum - 1.0).abs() > KERNEL_SUM_TOL {
                    return Err(Error::invalid(format!(
                        "transition row ({i},{u}) sums to {sum}, expected 1"
                    )));
                }
                let g = self.cost(i, u);
                let rho = self.cost_noise_halfwidth;
                if !(g >= rho && g <= 1.0 - rho) {
                    return Err(Error::assumption(
                        Assumption::CostRange,
                        format!("g({i},{u}) = {g} outside [{rho}, {}]", 1.0 - rho),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn discount(&self) -> f64 {
        self.discount
    }

    pub fn cost_noise_halfwidth(&self) -> f64 {
        self.cost_noise_halfwidth
    }

    #[inline]
    pub fn cost(&self, state: usize, action: usize) -> f64 {
        self.costs[state * self.num_actions + action]
    }

    /// Transition probabilities out of `(state, action)`, one entry per next state.
    #[inline]
    pub fn transition_row(&self, state: usize, action: usize) -> &[f64] {
        let base = (state * self.num_actions + action) * self.num_states;
        &self.transitions[base..base + self.num_states]
    }

    fn check_value_len(&self, v: &ValueVector) -> Result<()> {
        if v.len() != self.num_states {
            return Err(Error::invalid(format!(
                "value vector has length {}, expected {}",
                v.len(),
                self.num_states
            )));
        }
        Ok(())
    }

    fn check_policy(&self, policy: &Policy) -> Result<()> {
        if policy.len() != self.num_states {
            return Err(Error::invalid(format!(
                "policy has length {}, expected {}",
                policy.len(),
                self.num_states
            )));
        }
        for (i, &u) in policy.actions().iter().enumerate() {
            if u >= self.num_actions {
                return Err(Error::invalid(format!(
                    "policy action {u} at state {i} out of range (|A| = {})",
                    self.num_actions
                )));
            }
        }
        Ok(())
    }
}

/// A deterministic policy: one action index per state.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Policy {
    actions: Vec<usize>,
}

impl Policy {
    pub fn new(actions: Vec<usize>) -> Self {
        Policy { actions }
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    #[inline]
    pub fn action(&self, state: usize) -> usize {
        self.actions[state]
    }

    pub fn actions(&self) -> &[usize] {
        &self.actions
    }
}

/// A real vector indexed by states.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueVector(Vec<f64>);

impl ValueVector {
    pub fn zeros(n: usize) -> Self {
        ValueVector(vec![0.0; n])
    }

    pub fn from_vec(values: Vec<f64>) -> Self {
        ValueVector(values)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn sup_norm(&self) -> f64 {
        linalg::sup_norm(&self.0)
    }

    pub fn sup_dist(&self, other: &ValueVector) -> f64 {
        linalg::sup_dist(&self.0, &other.0)
    }

    pub fn iter(&self) -> std::slice::Iter<'_, f64> {
        self.0.iter()
    }
}

impl std::ops::Index<usize> for ValueVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl From<Vec<f64>> for ValueVector {
    fn from(v: Vec<f64>) -> Self {
        ValueVector(v)
    }
}

/// Applies the policy operator: returns `g_mu + alpha * P_mu * v`.
pub fn bellman_policy_apply(mdp: &Mdp, policy: &Policy, v: &ValueVector) -> Result<ValueVector> {
    mdp.check_value_len(v)?;
    mdp.check_policy(policy)?;
    let alpha = mdp.discount();
    let out = (0..mdp.num_states())
        .map(|i| {
            let u = policy.action(i);
            let row = mdp.transition_row(i, u);
            let mut acc = 0.0;
            for (p, vj) in row.iter().zip(v.as_slice()) {
                acc += p * vj;
            }
            mdp.cost(i, u) + alpha * acc
        })
        .collect();
    Ok(ValueVector(out))
}

/// Applies the optimality operator and returns the minimizing (greedy) policy.
/// Ties break toward the lowest action index.
pub fn bellman_optimality_apply(mdp: &Mdp, v: &ValueVector) -> Result<(ValueVector, Policy)> {
    mdp.check_value_len(v)?;
    let alpha = mdp.discount();
    let n = mdp.num_states();
    let mut values = Vec::with_capacity(n);
    let mut actions = Vec::with_capacity(n);
    for i in 0..n {
        let mut best = f64::INFINITY;
        let mut best_u = 0;
        for u in 0..mdp.num_actions() {
            let row = mdp.transition_row(i, u);
            let mut acc = 0.0;
            for (p, vj) in row.iter().zip(v.as_slice()) {
                acc += p * vj;
            }
            let q = mdp.cost(i, u) + alpha * acc;
            if q < best {
                best = q;
                best_u = u;
            }
        }
        values.push(best);
        actions.push(best_u);
    }
    Ok((ValueVector(values), Policy::new(actions)))
}

/// Exact policy value: the unique solution of `J = g_mu + alpha * P_mu * J`,
/// obtained by a direct linear solve. The system matrix `I - alpha * P_mu`
/// is strictly diagonally dominant, hence always nonsingular.
pub fn exact_policy_value(mdp: &Mdp, policy: &Policy) -> Result<ValueVector> {
    mdp.check_policy(policy)?;
    let n = mdp.num_states();
    let alpha = mdp.discount();
    let a = Mat::from_fn(n, n, |i, j| {
        let p = mdp.transition_row(i, policy.action(i))[j];
        let diag = if i == j { 1.0 } else { 0.0 };
        diag - alpha * p
    });
    let g: Vec<f64> = (0..n).map(|i| mdp.cost(i, policy.action(i))).collect();
    Ok(ValueVector(linalg::solve(&a, &g)?))
}

/// Value iteration from the zero vector to within `tol` of the optimal value.
///
/// Stops once the optimality-operator residual drops below
/// `tol * (1 - alpha) / alpha`, which guarantees the returned iterate is
/// within `tol` of the fixed point in sup norm. Also returns the greedy
/// policy of the returned iterate.
pub fn optimal_value(mdp: &Mdp, tol: f64) -> Result<(ValueVector, Policy)> {
    if !(tol > 0.0) {
        return Err(Error::invalid(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    let alpha = mdp.discount();
    let threshold = tol * (1.0 - alpha) / alpha;
    let mut v = ValueVector::zeros(mdp.num_states());
    loop {
        let (tv, _) = bellman_optimality_apply(mdp, &v)?;
        let residual = tv.sup_dist(&v);
        v = tv;
        if residual <= threshold {
            let (_, policy) = bellman_optimality_apply(mdp, &v)?;
            return Ok((v, policy));
        }
    }
}

/// The H-step lookahead policy for `v`: the greedy policy of `T^{h-1} v`.
/// With `h = 1` this is exactly the greedy policy of `v`.
pub fn lookahead_policy(mdp: &Mdp, v: &ValueVector, h: usize) -> Result<Policy> {
    if h == 0 {
        return Err(Error::invalid("lookahead depth must be at least 1"));
    }
    mdp.check_value_len(v)?;
    let mut w = v.clone();
    for _ in 0..h - 1 {
        let (next, _) = bellman_optimality_apply(mdp, &w)?;
        w = next;
    }
    let (_, policy) = bellman_optimality_apply(mdp, &w)?;
    Ok(policy)
}
