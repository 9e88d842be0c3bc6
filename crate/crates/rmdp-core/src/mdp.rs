//! Tabular MDP representation, exact policy evaluation, nominal solving,
//! and the per-state-action transition value vectors.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;

/// Tolerance for "sums to one" checks on probability vectors.
pub const STOCHASTIC_TOL: f64 = 1e-12;
/// Per-component fixed-point residual accepted from policy evaluation.
pub const EVAL_RESIDUAL_TOL: f64 = 1e-10;
/// Iteration cap shared by the value-iteration style solvers.
pub const ITERATION_CAP: u64 = 1_000_000;

/// A finite MDP with per-transition rewards and a successor support mask.
///
/// Tensors are stored row-major as `[s][a][s']`. The support mask marks
/// which successors are reachable at all; it comes from the prior, not
/// from data.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularMdp {
    num_states: usize,
    num_actions: usize,
    rewards: Vec<f64>,
    discount: f64,
    initial_dist: Vec<f64>,
    support: Vec<bool>,
}

impl TabularMdp {
    pub fn new(
        num_states: usize,
        num_actions: usize,
        rewards: Vec<f64>,
        discount: f64,
        initial_dist: Vec<f64>,
        support: Vec<bool>,
    ) -> Result<Self> {
        if num_states == 0 || num_actions == 0 {
            return Err(Error::InvalidInput(format!(
                "need at least one state and action, got S={num_states}, A={num_actions}"
            )));
        }
        let len = num_states * num_actions * num_states;
        if rewards.len() != len || support.len() != len || initial_dist.len() != num_states {
            return Err(Error::InvalidInput(format!(
                "tensor sizes do not match S={num_states}, A={num_actions}"
            )));
        }
        if !(0.0..1.0).contains(&discount) {
            return Err(Error::InvalidInput(format!(
                "discount must satisfy 0 <= gamma < 1, got {discount}"
            )));
        }
        if initial_dist.iter().any(|&p| p < 0.0)
            || math::abs(math::sum(&initial_dist) - 1.0) > STOCHASTIC_TOL
        {
            return Err(Error::InvalidInput(
                "initial distribution must be a probability vector".into(),
            ));
        }
        for s in 0..num_states {
            for a in 0..num_actions {
                let base = (s * num_actions + a) * num_states;
                if !support[base..base + num_states].iter().any(|&m| m) {
                    return Err(Error::InvalidInput(format!(
                        "state-action ({s},{a}) has no supported successor"
                    )));
                }
            }
        }
        Ok(Self {
            num_states,
            num_actions,
            rewards,
            discount,
            initial_dist,
            support,
        })
    }

    #[inline]
    pub fn num_states(&self) -> usize {
        self.num_states
    }

    #[inline]
    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    #[inline]
    pub fn discount(&self) -> f64 {
        self.discount
    }

    #[inline]
    pub fn initial_dist(&self) -> &[f64] {
        &self.initial_dist
    }

    #[inline]
    pub fn row_index(&self, state: usize, action: usize) -> usize {
        state * self.num_actions + action
    }

    #[inline]
    pub fn reward_row(&self, state: usize, action: usize) -> &[f64] {
        let base = self.row_index(state, action) * self.num_states;
        &self.rewards[base..base + self.num_states]
    }

    #[inline]
    pub fn support_row(&self, state: usize, action: usize) -> &[bool] {
        let base = self.row_index(state, action) * self.num_states;
        &self.support[base..base + self.num_states]
    }

    pub fn supported_successors(&self, state: usize, action: usize) -> Vec<usize> {
        self.support_row(state, action)
            .iter()
            .enumerate()
            .filter_map(|(i, &m)| m.then_some(i))
            .collect()
    }
}

/// One transition function `P : (s,a) -> Delta^S`, stored as `[s][a][s']`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionModel {
    num_states: usize,
    num_actions: usize,
    probs: Vec<f64>,
}

impl TransitionModel {
    pub fn new(num_states: usize, num_actions: usize, probs: Vec<f64>) -> Result<Self> {
        if probs.len() != num_states * num_actions * num_states {
            return Err(Error::InvalidInput(
                "transition tensor size does not match dimensions".into(),
            ));
        }
        let model = Self {
            num_states,
            num_actions,
            probs,
        };
        for s in 0..num_states {
            for a in 0..num_actions {
                let row = model.row(s, a);
                let sum = math::sum(row);
                if row.iter().any(|&p| p < 0.0) || math::abs(sum - 1.0) > STOCHASTIC_TOL {
                    return Err(Error::NonStochasticRow {
                        state: s,
                        action: a,
                        sum,
                    });
                }
            }
        }
        Ok(model)
    }

    /// Checks that the model places no mass outside the MDP's support mask.
    pub fn validate_support(&self, mdp: &TabularMdp) -> Result<()> {
        if self.num_states != mdp.num_states() || self.num_actions != mdp.num_actions() {
            return Err(Error::InvalidInput("model/MDP dimension mismatch".into()));
        }
        for s in 0..self.num_states {
            for a in 0..self.num_actions {
                let row = self.row(s, a);
                let mask = mdp.support_row(s, a);
                for sp in 0..self.num_states {
                    if row[sp] > 0.0 && !mask[sp] {
                        return Err(Error::SupportViolation {
                            state: s,
                            action: a,
                            successor: sp,
                        });
                    }
                }
            }
        }
        Ok(())
    }

    #[inline]
    pub fn num_states(&self) -> usize {
        self.num_states
    }

    #[inline]
    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    #[inline]
    pub fn row(&self, state: usize, action: usize) -> &[f64] {
        let base = (state * self.num_actions + action) * self.num_states;
        &self.probs[base..base + self.num_states]
    }
}

/// Deterministic stationary policy.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Policy {
    actions: Vec<usize>,
}

impl Policy {
    pub fn new(actions: Vec<usize>, num_actions: usize) -> Result<Self> {
        if actions.iter().any(|&a| a >= num_actions) {
            return Err(Error::InvalidInput("policy action out of range".into()));
        }
        Ok(Self { actions })
    }

    #[inline]
    pub fn action(&self, state: usize) -> usize {
        self.actions[state]
    }

    #[inline]
    pub fn actions(&self) -> &[usize] {
        &self.actions
    }
}

/// State values, either nominal or robust.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueFunction {
    pub values: Vec<f64>,
}

impl ValueFunction {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite value entry".into()));
        }
        Ok(Self { values })
    }

    pub fn zeros(num_states: usize) -> Self {
        Self {
            values: vec![0.0; num_states],
        }
    }
}

/// Exact policy evaluation: solves `(I - gamma * P_pi) v = r_pi`.
///
/// The returned values satisfy the Bellman evaluation equation with a
/// per-component residual below [`EVAL_RESIDUAL_TOL`].
pub fn policy_evaluate(
    mdp: &TabularMdp,
    model: &TransitionModel,
    policy: &Policy,
) -> Result<ValueFunction> {
    check_dims(mdp, model, Some(policy))?;
    let n = mdp.num_states();
    let gamma = mdp.discount();
    let mut a = vec![0.0; n * n];
    let mut b = vec![0.0; n];
    for s in 0..n {
        let act = policy.action(s);
        let row = model.row(s, act);
        let rewards = mdp.reward_row(s, act);
        for sp in 0..n {
            a[s * n + sp] = if s == sp { 1.0 } else { 0.0 } - gamma * row[sp];
        }
        b[s] = math::dot(row, rewards);
    }
    let v = math::solve_dense(&a, &b, n)
        .ok_or_else(|| Error::InvalidInput("singular evaluation system".into()))?;

    // Fixed-point residual in the Bellman form rather than the linear form.
    let mut residual = 0.0f64;
    for s in 0..n {
        let act = policy.action(s);
        let row = model.row(s, act);
        let rewards = mdp.reward_row(s, act);
        let mut backup = 0.0;
        let mut c = 0.0;
        for sp in 0..n {
            let term = row[sp] * (rewards[sp] + gamma * v[sp]) - c;
            let t = backup + term;
            c = (t - backup) - term;
            backup = t;
        }
        residual = residual.max(math::abs(backup - v[s]));
    }
    if residual > EVAL_RESIDUAL_TOL {
        return Err(Error::NoConvergence {
            iterations: 0,
            residual,
        });
    }
    ValueFunction::new(v)
}

/// Discounted return `rho(pi, P) = p0^T v`.
pub fn return_of(mdp: &TabularMdp, model: &TransitionModel, policy: &Policy) -> Result<f64> {
    let v = policy_evaluate(mdp, model, policy)?;
    Ok(math::dot(mdp.initial_dist(), &v.values))
}

/// Value iteration on the standard Bellman optimality operator.
///
/// Stops when the sup-norm change drops below `tol * (1 - gamma) / (2 gamma)`,
/// which makes the returned values `tol`-optimal in the sup norm.
pub fn solve_nominal(
    mdp: &TabularMdp,
    model: &TransitionModel,
    tol: f64,
) -> Result<(ValueFunction, Policy)> {
    check_dims(mdp, model, None)?;
    if tol <= 0.0 {
        return Err(Error::InvalidInput("tolerance must be positive".into()));
    }
    let n = mdp.num_states();
    let gamma = mdp.discount();
    let threshold = stopping_threshold(tol, gamma);
    let mut v = vec![0.0; n];
    let mut next = vec![0.0; n];
    let mut iterations = 0u64;
    loop {
        for (s, slot) in next.iter_mut().enumerate() {
            *slot = (0..mdp.num_actions())
                .map(|a| math::dot(model.row(s, a), mdp.reward_row(s, a)) + gamma * math::dot(model.row(s, a), &v))
                .fold(f64::NEG_INFINITY, f64::max);
        }
        iterations += 1;
        let change = math::sup_norm_diff(&next, &v);
        core::mem::swap(&mut v, &mut next);
        if change <= threshold {
            break;
        }
        if iterations >= ITERATION_CAP {
            return Err(Error::NoConvergence {
                iterations,
                residual: change,
            });
        }
    }
    let value = ValueFunction::new(v)?;
    let policy = greedy_policy(mdp, model, &value);
    Ok((value, policy))
}

pub(crate) fn stopping_threshold(tol: f64, gamma: f64) -> f64 {
    if gamma > 0.0 {
        tol * (1.0 - gamma) / (2.0 * gamma)
    } else {
        f64::INFINITY
    }
}

/// Greedy policy w.r.t. `v`; ties broken toward the lowest action index.
pub fn greedy_policy(mdp: &TabularMdp, model: &TransitionModel, v: &ValueFunction) -> Policy {
    let gamma = mdp.discount();
    let actions = (0..mdp.num_states())
        .map(|s| {
            let mut best = f64::NEG_INFINITY;
            let mut best_a = 0;
            for a in 0..mdp.num_actions() {
                let row = model.row(s, a);
                let q = math::dot(row, mdp.reward_row(s, a)) + gamma * math::dot(row, &v.values);
                if q > best {
                    best = q;
                    best_a = a;
                }
            }
            best_a
        })
        .collect();
    Policy { actions }
}

/// Transition value vectors `z_{s,a} = r_{s,a} + gamma * v`, flattened
/// `[s][a][s']` like the reward tensor.
pub fn compute_z(mdp: &TabularMdp, v: &ValueFunction) -> Vec<f64> {
    let n = mdp.num_states();
    let gamma = mdp.discount();
    let mut z = vec![0.0; n * mdp.num_actions() * n];
    for s in 0..n {
        for a in 0..mdp.num_actions() {
            let base = mdp.row_index(s, a) * n;
            let rewards = mdp.reward_row(s, a);
            for sp in 0..n {
                z[base + sp] = rewards[sp] + gamma * v.values[sp];
            }
        }
    }
    z
}

fn check_dims(mdp: &TabularMdp, model: &TransitionModel, policy: Option<&Policy>) -> Result<()> {
    if model.num_states() != mdp.num_states() || model.num_actions() != mdp.num_actions() {
        return Err(Error::InvalidInput("model/MDP dimension mismatch".into()));
    }
    if let Some(p) = policy {
        if p.actions.len() != mdp.num_states() {
            return Err(Error::InvalidInput("policy/MDP dimension mismatch".into()));
        }
    }
    Ok(())
}
