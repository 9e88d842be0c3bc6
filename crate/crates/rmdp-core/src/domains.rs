//! Built-in benchmark MDPs: RiverSwim, machine replacement, population
//! growth, inventory management, and a small three-successor example with
//! a Dirichlet posterior.
//!
//! Where the literature describes a domain without printing every
//! parameter, the constants below are documented reconstructions; the
//! discount factors are likewise defaults, so comparisons against these
//! domains should be ordering-based rather than absolute.

use alloc::vec;
use alloc::vec::Vec;

use crate::bayes::DirichletPosterior;
use crate::error::{Error, Result};
use crate::math;
use crate::mdp::{TabularMdp, TransitionModel};

/// Which built-in domain to generate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DomainName {
    RiverSwim,
    MachineReplacement,
    PopulationGrowth,
    Inventory,
    Example1,
}

/// Generator parameters; `None` fields take the per-domain defaults.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DomainSpec {
    pub name: DomainName,
    pub size: Option<usize>,
    pub discount: Option<f64>,
}

impl DomainSpec {
    pub fn new(name: DomainName) -> Self {
        Self {
            name,
            size: None,
            discount: None,
        }
    }

    pub fn build(&self) -> Result<(TabularMdp, TransitionModel)> {
        match self.name {
            DomainName::RiverSwim => {
                if self.size.is_some() {
                    return Err(Error::InvalidInput("riverswim has a fixed size".into()));
                }
                Ok(riverswim(self.discount.unwrap_or(0.95))?)
            }
            DomainName::MachineReplacement => {
                if self.size.is_some() {
                    return Err(Error::InvalidInput(
                        "machine replacement has a fixed size".into(),
                    ));
                }
                Ok(machine_replacement(self.discount.unwrap_or(0.90))?)
            }
            DomainName::PopulationGrowth => {
                population_growth(self.size.unwrap_or(51), self.discount.unwrap_or(0.95))
            }
            DomainName::Inventory => {
                inventory(self.size.unwrap_or(31), self.discount.unwrap_or(0.95))
            }
            DomainName::Example1 => {
                let (mdp, posterior) = example1(self.discount.unwrap_or(0.95))?;
                let model = posterior.mean_model()?;
                Ok((mdp, model))
            }
        }
    }
}

struct Builder {
    s: usize,
    a: usize,
    probs: Vec<f64>,
    rewards: Vec<f64>,
}

impl Builder {
    fn new(s: usize, a: usize) -> Self {
        Self {
            s,
            a,
            probs: vec![0.0; s * a * s],
            rewards: vec![0.0; s * a * s],
        }
    }

    fn set(&mut self, s: usize, a: usize, sp: usize, p: f64, r: f64) {
        let idx = (s * self.a + a) * self.s + sp;
        self.probs[idx] = p;
        self.rewards[idx] = r;
    }

    fn finish(self, discount: f64, p0: Vec<f64>) -> Result<(TabularMdp, TransitionModel)> {
        let support: Vec<bool> = self.probs.iter().map(|&p| p > 0.0).collect();
        let mdp = TabularMdp::new(self.s, self.a, self.rewards, discount, p0, support)?;
        let model = TransitionModel::new(self.s, self.a, self.probs)?;
        model.validate_support(&mdp)?;
        Ok((mdp, model))
    }
}

/// Six-state swimmer: swimming left with the current is deterministic and
/// pays a small reward at the leftmost bank; swimming right advances only
/// sometimes but pays a large reward at the rightmost state.
pub fn riverswim(discount: f64) -> Result<(TabularMdp, TransitionModel)> {
    const LEFT: usize = 0;
    const RIGHT: usize = 1;
    let mut b = Builder::new(6, 2);
    for s in 0..6 {
        if s == 0 {
            b.set(0, LEFT, 0, 1.0, 5.0);
        } else {
            b.set(s, LEFT, s - 1, 1.0, 0.0);
        }
    }
    b.set(0, RIGHT, 0, 0.7, 0.0);
    b.set(0, RIGHT, 1, 0.3, 0.0);
    for s in 1..5 {
        b.set(s, RIGHT, s - 1, 0.1, 0.0);
        b.set(s, RIGHT, s, 0.6, 0.0);
        b.set(s, RIGHT, s + 1, 0.3, 0.0);
    }
    b.set(5, RIGHT, 4, 0.7, 0.0);
    b.set(5, RIGHT, 5, 0.3, 10_000.0);
    let mut p0 = vec![0.0; 6];
    p0[1] = 0.5;
    p0[2] = 0.5;
    b.finish(discount, p0)
}

/// Ten deterioration levels, operate vs. repair. Operating is free until
/// the machine is badly worn; repairing costs a little and usually resets
/// the machine. Constants reconstructed; all rewards are costs.
pub fn machine_replacement(discount: f64) -> Result<(TabularMdp, TransitionModel)> {
    const OPERATE: usize = 0;
    const REPAIR: usize = 1;
    let n = 10;
    let mut b = Builder::new(n, 2);
    for s in 0..n {
        let wear_cost = match s {
            8 => -10.0,
            9 => -20.0,
            _ => 0.0,
        };
        if s + 1 < n {
            b.set(s, OPERATE, s, 0.8, wear_cost);
            b.set(s, OPERATE, s + 1, 0.2, wear_cost);
        } else {
            b.set(s, OPERATE, s, 1.0, wear_cost);
        }
        if s == 0 {
            b.set(s, REPAIR, 0, 1.0, -2.0);
        } else {
            b.set(s, REPAIR, 0, 0.9, -2.0);
            b.set(s, REPAIR, s, 0.1, -2.0);
        }
    }
    let mut p0 = vec![0.0; n];
    p0[0] = 1.0;
    b.finish(discount, p0)
}

/// Pest-population model: without control the population grows by a
/// factor of 1.4, with (costly) control it shrinks by a factor of 0.8;
/// the next level is spread over the three cells around the rounded
/// target and renormalized at the boundary. Damage scales with the
/// population. Constants reconstructed.
pub fn population_growth(size: usize, discount: f64) -> Result<(TabularMdp, TransitionModel)> {
    const NOTHING: usize = 0;
    const CONTROL: usize = 1;
    if size < 2 {
        return Err(Error::InvalidInput("need at least two levels".into()));
    }
    let mut b = Builder::new(size, 2);
    for s in 0..size {
        for a in 0..2 {
            let reward = -4.0 * s as f64 - if a == CONTROL { 40.0 } else { 0.0 };
            if s == 0 {
                b.set(0, a, 0, 1.0, reward);
                continue;
            }
            let growth = if a == NOTHING { 1.4 } else { 0.8 };
            let target = math::round(growth * s as f64) as i64;
            let cells = [
                (target - 1, 0.25),
                (target, 0.5),
                (target + 1, 0.25),
            ];
            let mut mass = vec![0.0; size];
            let mut total = 0.0;
            for &(c, p) in &cells {
                if c >= 0 && (c as usize) < size {
                    mass[c as usize] += p;
                    total += p;
                } else if c >= size as i64 {
                    mass[size - 1] += p;
                    total += p;
                }
                // mass pushed below zero is truncated away
            }
            for (sp, &m) in mass.iter().enumerate() {
                if m > 0.0 {
                    b.set(s, a, sp, m / total, reward);
                }
            }
        }
    }
    let mut p0 = vec![0.0; size];
    p0[(size / 5).max(1)] = 1.0;
    b.finish(discount, p0)
}

/// Inventory control with order-quantity actions. Demand per period is a
/// discretized normal with mean `S/4` and standard deviation `S/6`,
/// clipped to the state range and renormalized. Purchase, sale, and
/// holding prices are 2.49, 3.99, and 0.03.
pub fn inventory(size: usize, discount: f64) -> Result<(TabularMdp, TransitionModel)> {
    if size < 2 {
        return Err(Error::InvalidInput("need at least two levels".into()));
    }
    const PURCHASE: f64 = 2.49;
    const SALE: f64 = 3.99;
    const HOLDING: f64 = 0.03;

    let mean = size as f64 / 4.0;
    let sd = size as f64 / 6.0;
    let mut demand = vec![0.0; size];
    for (d, slot) in demand.iter_mut().enumerate() {
        let lo = if d == 0 {
            0.0
        } else {
            math::normal_cdf(d as f64 - 0.5, mean, sd)
        };
        let hi = if d == size - 1 {
            1.0
        } else {
            math::normal_cdf(d as f64 + 0.5, mean, sd)
        };
        *slot = hi - lo;
    }
    let total = math::sum(&demand);
    for p in demand.iter_mut() {
        *p /= total;
    }

    let mut b = Builder::new(size, size);
    for s in 0..size {
        for a in 0..size {
            let order = a.min(size - 1 - s);
            let available = s + order;
            // All demand at or above the available stock lands in state 0.
            let mut row = vec![0.0; size];
            for (d, &p) in demand.iter().enumerate() {
                let sold = d.min(available);
                row[available - sold] += p;
            }
            for (sp, &p) in row.iter().enumerate() {
                if p > 0.0 {
                    let sold = (available - sp) as f64;
                    let reward = SALE * sold - PURCHASE * order as f64 - HOLDING * sp as f64;
                    b.set(s, a, sp, p, reward);
                }
            }
        }
    }
    let mut p0 = vec![0.0; size];
    p0[0] = 1.0;
    b.finish(discount, p0)
}

/// Four states, one action: state 0 transitions to one of three absorbing
/// terminals with rewards `[0.25, 0.25, -1]`; the transition row carries a
/// Dirichlet(10, 10, 1) posterior. The discount is immaterial because the
/// terminals pay nothing.
pub fn example1(discount: f64) -> Result<(TabularMdp, DirichletPosterior)> {
    let n = 4;
    let mut rewards = vec![0.0; n * n];
    let mut support = vec![false; n * n];
    let mut alpha = vec![0.0; n * n];
    let terminal_rewards = [0.25, 0.25, -1.0];
    for t in 0..3 {
        rewards[t + 1] = terminal_rewards[t];
        support[t + 1] = true;
    }
    alpha[1] = 10.0;
    alpha[2] = 10.0;
    alpha[3] = 1.0;
    for t in 1..n {
        support[t * n + t] = true;
        alpha[t * n + t] = 1.0;
    }
    let mut p0 = vec![0.0; n];
    p0[0] = 1.0;
    let mdp = TabularMdp::new(n, 1, rewards, discount, p0, support)?;
    let posterior = DirichletPosterior::new(n, 1, alpha)?;
    Ok((mdp, posterior))
}
