//! Robust Bellman operator, robust value iteration, and robust policy
//! returns for SA-rectangular weighted-norm ambiguity sets.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;
use crate::mdp::{self, Policy, TabularMdp, ValueFunction};
use crate::norms::{worst_case_expectation, BallSpec, NormKind, Sense};

/// One ball per state-action pair; the norm kind is shared across pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct AmbiguitySet {
    kind: NormKind,
    num_states: usize,
    num_actions: usize,
    balls: Vec<BallSpec>,
}

impl AmbiguitySet {
    pub fn new(
        kind: NormKind,
        num_states: usize,
        num_actions: usize,
        balls: Vec<BallSpec>,
    ) -> Result<Self> {
        if balls.len() != num_states * num_actions {
            return Err(Error::InvalidBall("ball count != S * A".into()));
        }
        for b in &balls {
            if b.kind != kind {
                return Err(Error::InvalidBall("mixed norm kinds".into()));
            }
            if b.nominal.len() != num_states {
                return Err(Error::InvalidBall("ball dimension != S".into()));
            }
        }
        Ok(Self {
            kind,
            num_states,
            num_actions,
            balls,
        })
    }

    #[inline]
    pub fn kind(&self) -> NormKind {
        self.kind
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
    pub fn ball(&self, state: usize, action: usize) -> &BallSpec {
        &self.balls[state * self.num_actions + action]
    }

    pub fn balls(&self) -> &[BallSpec] {
        &self.balls
    }
}

/// Output of robust value iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct RobustSolution {
    pub value: ValueFunction,
    pub policy: Policy,
    pub robust_return: f64,
    pub iterations: u64,
    pub residual: f64,
}

fn check_dims(mdp: &TabularMdp, amb: &AmbiguitySet) -> Result<()> {
    if amb.num_states() != mdp.num_states() || amb.num_actions() != mdp.num_actions() {
        return Err(Error::InvalidInput(
            "ambiguity set / MDP dimension mismatch".into(),
        ));
    }
    Ok(())
}

/// Worst-case action value `min_{p in ball} p'(r_{s,a} + gamma v)`.
fn robust_q(mdp: &TabularMdp, amb: &AmbiguitySet, v: &[f64], s: usize, a: usize) -> Result<f64> {
    let gamma = mdp.discount();
    let rewards = mdp.reward_row(s, a);
    let z: Vec<f64> = (0..mdp.num_states())
        .map(|sp| rewards[sp] + gamma * v[sp])
        .collect();
    Ok(worst_case_expectation(&z, amb.ball(s, a), Sense::Min)?.value)
}

/// One application of the robust Bellman optimality operator.
pub fn robust_bellman_apply(
    mdp: &TabularMdp,
    amb: &AmbiguitySet,
    v: &ValueFunction,
) -> Result<ValueFunction> {
    check_dims(mdp, amb)?;
    let mut out = vec![0.0; mdp.num_states()];
    for (s, slot) in out.iter_mut().enumerate() {
        let mut best = f64::NEG_INFINITY;
        for a in 0..mdp.num_actions() {
            best = best.max(robust_q(mdp, amb, &v.values, s, a)?);
        }
        *slot = best;
    }
    ValueFunction::new(out)
}

/// Iterates the robust Bellman operator from zero to its fixed point,
/// then extracts the greedy robust policy and the robust return.
pub fn robust_value_iteration(
    mdp: &TabularMdp,
    amb: &AmbiguitySet,
    tol: f64,
) -> Result<RobustSolution> {
    check_dims(mdp, amb)?;
    if tol <= 0.0 {
        return Err(Error::InvalidInput("tolerance must be positive".into()));
    }
    let threshold = mdp::stopping_threshold(tol, mdp.discount());
    let mut v = ValueFunction::zeros(mdp.num_states());
    let mut iterations = 0u64;
    let residual;
    loop {
        let next = robust_bellman_apply(mdp, amb, &v)?;
        iterations += 1;
        let change = math::sup_norm_diff(&next.values, &v.values);
        v = next;
        if change <= threshold {
            residual = change;
            break;
        }
        if iterations >= mdp::ITERATION_CAP {
            return Err(Error::NoConvergence {
                iterations,
                residual: change,
            });
        }
    }
    let policy = robust_greedy_policy(mdp, amb, &v)?;
    let robust_return = math::dot(mdp.initial_dist(), &v.values);
    Ok(RobustSolution {
        value: v,
        policy,
        robust_return,
        iterations,
        residual,
    })
}

/// Greedy policy w.r.t. the robust action values; lowest-index ties.
pub fn robust_greedy_policy(
    mdp: &TabularMdp,
    amb: &AmbiguitySet,
    v: &ValueFunction,
) -> Result<Policy> {
    check_dims(mdp, amb)?;
    let mut actions = Vec::with_capacity(mdp.num_states());
    for s in 0..mdp.num_states() {
        let mut best = f64::NEG_INFINITY;
        let mut best_a = 0;
        for a in 0..mdp.num_actions() {
            let q = robust_q(mdp, amb, &v.values, s, a)?;
            if q > best {
                best = q;
                best_a = a;
            }
        }
        actions.push(best_a);
    }
    Policy::new(actions, mdp.num_actions())
}

/// Worst-case return of a fixed policy: the fixed point of the
/// policy-restricted robust operator, weighted by the initial distribution.
pub fn robust_return_of_policy(
    mdp: &TabularMdp,
    amb: &AmbiguitySet,
    policy: &Policy,
    tol: f64,
) -> Result<f64> {
    check_dims(mdp, amb)?;
    if policy.actions().len() != mdp.num_states() {
        return Err(Error::InvalidInput("policy/MDP dimension mismatch".into()));
    }
    if tol <= 0.0 {
        return Err(Error::InvalidInput("tolerance must be positive".into()));
    }
    let threshold = mdp::stopping_threshold(tol, mdp.discount());
    let mut v = vec![0.0; mdp.num_states()];
    let mut next = vec![0.0; mdp.num_states()];
    let mut iterations = 0u64;
    loop {
        for s in 0..mdp.num_states() {
            next[s] = robust_q(mdp, amb, &v, s, policy.action(s))?;
        }
        iterations += 1;
        let change = math::sup_norm_diff(&next, &v);
        core::mem::swap(&mut v, &mut next);
        if change <= threshold {
            break;
        }
        if iterations >= mdp::ITERATION_CAP {
            return Err(Error::NoConvergence {
                iterations,
                residual: change,
            });
        }
    }
    Ok(math::dot(mdp.initial_dist(), &v))
}
