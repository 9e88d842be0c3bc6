//! Weighted norms and exact worst-case linear optimization over
//! weighted-norm balls intersected with the probability simplex.
//!
//! The inner adversarial problem is
//!
//! ```text
//!   min / max  p' z
//!   s.t.       p in Delta^S,  ||p - pbar||_{kind,w} <= psi,
//!              p_i = 0 wherever w_i = +inf
//! ```
//!
//! Both norm kinds admit exact combinatorial solutions: the L-inf ball
//! intersected with the simplex is a box-constrained simplex (greedy fill),
//! and the L1 ball is solved by a parametric mass-transfer scheme that is
//! exact up to floating-point roundoff. Infinite weights mark unreachable
//! successors and are removed by dimension reduction before optimization.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;

/// Which weighted norm defines the ball.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormKind {
    WeightedL1,
    WeightedLInf,
}

/// Optimization sense for the inner problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Min,
    Max,
}

/// One per-state-action ambiguity ball.
#[derive(Debug, Clone, PartialEq)]
pub struct BallSpec {
    pub kind: NormKind,
    pub nominal: Vec<f64>,
    pub weights: Vec<f64>,
    pub budget: f64,
}

impl BallSpec {
    pub fn new(kind: NormKind, nominal: Vec<f64>, weights: Vec<f64>, budget: f64) -> Result<Self> {
        if nominal.len() != weights.len() || nominal.is_empty() {
            return Err(Error::InvalidBall("dimension mismatch".into()));
        }
        if nominal.iter().any(|&p| p < 0.0)
            || math::abs(math::sum(&nominal) - 1.0) > crate::mdp::STOCHASTIC_TOL
        {
            return Err(Error::InvalidBall("nominal is not on the simplex".into()));
        }
        for (i, &w) in weights.iter().enumerate() {
            if !(w > 0.0) {
                return Err(Error::InvalidBall(format!("weight {i} is not positive")));
            }
            if w == f64::INFINITY && nominal[i] != 0.0 {
                return Err(Error::InvalidBall(format!(
                    "infinite weight on successor {i} with positive nominal mass"
                )));
            }
        }
        if !(budget >= 0.0) {
            return Err(Error::InvalidBall("budget must be nonnegative".into()));
        }
        Ok(Self {
            kind,
            nominal,
            weights,
            budget,
        })
    }

    /// Membership test (simplex membership of `p` is assumed).
    pub fn contains(&self, p: &[f64]) -> bool {
        let mut diff = Vec::with_capacity(p.len());
        for i in 0..p.len() {
            diff.push(p[i] - self.nominal[i]);
        }
        weighted_norm(&diff, &self.weights, self.kind) <= self.budget
    }
}

/// `sum_i w_i |x_i|` (L1) or `max_i w_i |x_i|` (L-inf). An infinite weight
/// paired with a nonzero component yields `+inf`, signaling a support
/// violation; paired with zero it contributes nothing.
pub fn weighted_norm(x: &[f64], w: &[f64], kind: NormKind) -> f64 {
    debug_assert_eq!(x.len(), w.len());
    let term = |i: usize| {
        if w[i] == f64::INFINITY {
            if x[i] == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            w[i] * math::abs(x[i])
        }
    };
    match kind {
        NormKind::WeightedL1 => {
            let mut s = 0.0;
            let mut c = 0.0;
            for i in 0..x.len() {
                let t = term(i) - c;
                let u = s + t;
                c = (u - s) - t;
                s = u;
            }
            s
        }
        NormKind::WeightedLInf => (0..x.len()).map(term).fold(0.0, f64::max),
    }
}

/// Result of the inner problem: the optimal value and an attaining
/// distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct WorstCase {
    pub value: f64,
    pub witness: Vec<f64>,
}

/// Exact optimum of `p' z` over the ball intersected with the simplex.
pub fn worst_case_expectation(z: &[f64], ball: &BallSpec, sense: Sense) -> Result<WorstCase> {
    if z.len() != ball.nominal.len() {
        return Err(Error::InvalidBall("z/ball dimension mismatch".into()));
    }
    // Dimension reduction: successors with infinite weight are pinned to 0.
    let active: Vec<usize> = (0..z.len())
        .filter(|&i| ball.weights[i] != f64::INFINITY)
        .collect();
    if active.is_empty() {
        return Err(Error::InvalidBall("no reachable successor".into()));
    }
    let zr: Vec<f64> = active
        .iter()
        .map(|&i| match sense {
            Sense::Min => z[i],
            Sense::Max => -z[i],
        })
        .collect();
    let pr: Vec<f64> = active.iter().map(|&i| ball.nominal[i]).collect();
    let wr: Vec<f64> = active.iter().map(|&i| ball.weights[i]).collect();

    let witness_r = match ball.kind {
        NormKind::WeightedL1 => l1_minimize(&zr, &pr, &wr, ball.budget),
        NormKind::WeightedLInf => linf_minimize(&zr, &pr, &wr, ball.budget),
    };

    let mut witness = vec![0.0; z.len()];
    for (k, &i) in active.iter().enumerate() {
        witness[i] = witness_r[k];
    }
    Ok(WorstCase {
        value: math::dot(&witness, z),
        witness,
    })
}

/// Span `beta_z(w, psi)`: the largest difference of expectations of `z`
/// between two members of the ball.
pub fn span(z: &[f64], ball: &BallSpec) -> Result<f64> {
    let hi = worst_case_expectation(z, ball, Sense::Max)?;
    let lo = worst_case_expectation(z, ball, Sense::Min)?;
    Ok(hi.value - lo.value)
}

/// Upper bound on the span via the dual norm: `2 psi ||z - lambda 1||_*`,
/// where the dual of weighted-L1(w) is weighted-Linf(1/w) and vice versa.
/// Infinite weights drop out (their dual weight is zero).
pub fn dual_norm_bound(z: &[f64], w: &[f64], psi: f64, lambda: f64, kind: NormKind) -> f64 {
    debug_assert_eq!(z.len(), w.len());
    let dual = match kind {
        NormKind::WeightedL1 => NormKind::WeightedLInf,
        NormKind::WeightedLInf => NormKind::WeightedL1,
    };
    let inv_w: Vec<f64> = w.iter().map(|&wi| 1.0 / wi).collect();
    let centered: Vec<f64> = z
        .iter()
        .zip(w)
        .map(|(&zi, &wi)| if wi == f64::INFINITY { 0.0 } else { zi - lambda })
        .collect();
    2.0 * psi * weighted_norm(&centered, &inv_w, dual)
}

/// Minimize `p' z` over the simplex intersected with the weighted
/// L-infinity ball: a box-constrained simplex filled greedily from the
/// smallest z upward.
fn linf_minimize(z: &[f64], pbar: &[f64], w: &[f64], psi: f64) -> Vec<f64> {
    let n = z.len();
    let mut lo = vec![0.0; n];
    let mut hi = vec![0.0; n];
    for i in 0..n {
        let slack = psi / w[i];
        lo[i] = (pbar[i] - slack).max(0.0);
        hi[i] = (pbar[i] + slack).min(1.0);
    }
    let mut p = lo.clone();
    let mut remaining = 1.0 - math::sum(&lo);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| z[a].total_cmp(&z[b]).then(a.cmp(&b)));
    for &i in &order {
        if remaining <= 0.0 {
            break;
        }
        let add = (hi[i] - lo[i]).min(remaining);
        p[i] += add;
        remaining -= add;
    }
    // pbar is feasible, so the box always has room for the leftover mass;
    // any residue here is pure roundoff and is folded into the best slot.
    if remaining > 0.0 {
        p[order[0]] += remaining;
    }
    p
}

/// Minimize `p' z` over the simplex intersected with the weighted L1 ball.
///
/// Mass moves from "donor" states (high z) to "receiver" states (low z);
/// a unit moved from i to j consumes `w_i + w_j` of the budget. With a
/// multiplier `mu >= 0` on the budget, the best receiver minimizes
/// `z_j + mu w_j` and a donor is strictly profitable when
/// `z_i - mu w_i` exceeds that envelope. The budget consumed by the strict
/// donors is non-increasing in `mu`, so a bisection brackets the critical
/// multiplier between two adjacent configurations, which are then blended
/// to spend the budget exactly. At the critical multiplier every blending
/// direction improves the objective at the same rate, so the blend order
/// does not affect the value.
fn l1_minimize(z: &[f64], pbar: &[f64], w: &[f64], psi: f64) -> Vec<f64> {
    let n = z.len();
    if n == 1 {
        return vec![1.0];
    }

    // Receiver envelope and the budget used by the strict-donor config.
    // Receiver ties prefer the lighter weight, then the lower index.
    let receiver = |mu: f64| -> usize {
        let mut best = 0usize;
        let mut best_key = z[0] + mu * w[0];
        for j in 1..n {
            let key = z[j] + mu * w[j];
            if key < best_key || (key == best_key && w[j] < w[best]) {
                best = j;
                best_key = key;
            }
        }
        best
    };
    let config_budget = |mu: f64| -> f64 {
        let r = receiver(mu);
        let env = z[r] + mu * w[r];
        let mut used = 0.0;
        for i in 0..n {
            if pbar[i] > 0.0 && z[i] - mu * w[i] > env {
                used += pbar[i] * (w[i] + w[r]);
            }
        }
        used
    };

    let apply = |mu: f64, p: &mut [f64]| -> (usize, f64, Vec<bool>) {
        let r = receiver(mu);
        let env = z[r] + mu * w[r];
        let mut used = 0.0;
        let mut donor = vec![false; n];
        for i in 0..n {
            if pbar[i] > 0.0 && z[i] - mu * w[i] > env {
                donor[i] = true;
                used += pbar[i] * (w[i] + w[r]);
                p[r] += pbar[i];
                p[i] = 0.0;
            }
        }
        (r, used, donor)
    };

    // Unconstrained case: the budget admits shipping every profitable donor
    // at mu = 0, i.e. all mass above the minimum z moves there.
    if config_budget(0.0) <= psi {
        let mut p = pbar.to_vec();
        apply(0.0, &mut p);
        return p;
    }

    // Beyond mu_max no transfer is profitable, so the config budget is 0.
    let zmax = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let zmin = z.iter().cloned().fold(f64::INFINITY, f64::min);
    let wmin = w.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut mu_lo = 0.0;
    let mut mu_hi = (zmax - zmin) / (2.0 * wmin) + 1.0;
    debug_assert!(config_budget(mu_hi) <= psi);
    for _ in 0..200 {
        let mid = 0.5 * (mu_lo + mu_hi);
        if mid <= mu_lo || mid >= mu_hi {
            break;
        }
        if config_budget(mid) > psi {
            mu_lo = mid;
        } else {
            mu_hi = mid;
        }
    }

    // Base configuration at mu_hi fits inside the budget.
    let mut p = pbar.to_vec();
    let (ra, used_a, donor_a) = apply(mu_hi, &mut p);
    let mut remaining = psi - used_a;

    // Blending knobs toward the (over-budget) mu_lo configuration:
    //  - redirect mass already shipped to ra onto rb;
    //  - ship the donors that become profitable at mu_lo to rb.
    // Each knob has a linear gain and budget rate; spend best-rate first.
    let rb = receiver(mu_lo);
    struct Knob {
        kind: KnobKind,
        rate: f64,
        gain: f64,
        cost: f64,
        capacity: f64,
    }
    enum KnobKind {
        Redirect,
        Ship(usize),
    }
    let mut knobs: Vec<Knob> = Vec::new();
    if rb != ra && z[ra] > z[rb] {
        let shipped: f64 = (0..n).filter(|&i| donor_a[i]).map(|i| pbar[i]).sum();
        let cost = w[rb] - w[ra];
        if shipped > 0.0 {
            knobs.push(Knob {
                kind: KnobKind::Redirect,
                rate: if cost > 0.0 {
                    (z[ra] - z[rb]) / cost
                } else {
                    f64::INFINITY
                },
                gain: z[ra] - z[rb],
                cost,
                capacity: shipped,
            });
        }
    }
    {
        let env = z[rb] + mu_lo * w[rb];
        for i in 0..n {
            if i == ra || i == rb || donor_a[i] || pbar[i] == 0.0 {
                continue;
            }
            if z[i] - mu_lo * w[i] > env && z[i] > z[rb] {
                let cost = w[i] + w[rb];
                knobs.push(Knob {
                    kind: KnobKind::Ship(i),
                    rate: (z[i] - z[rb]) / cost,
                    gain: z[i] - z[rb],
                    cost,
                    capacity: pbar[i],
                });
            }
        }
    }
    knobs.sort_by(|a, b| b.rate.total_cmp(&a.rate));
    for knob in &knobs {
        if knob.gain <= 0.0 {
            continue;
        }
        let amount = if knob.cost <= 0.0 {
            knob.capacity
        } else {
            knob.capacity.min(remaining / knob.cost)
        };
        if amount <= 0.0 {
            if remaining <= 0.0 {
                break;
            }
            continue;
        }
        match knob.kind {
            KnobKind::Redirect => {
                p[ra] -= amount;
                p[rb] += amount;
            }
            KnobKind::Ship(i) => {
                p[i] -= amount;
                p[rb] += amount;
            }
        }
        if knob.cost > 0.0 {
            remaining -= amount * knob.cost;
        }
    }
    p
}
