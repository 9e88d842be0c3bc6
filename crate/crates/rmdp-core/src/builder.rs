//! Ambiguity-set construction: weight (shape) optimization, budget (size)
//! optimization from posterior samples or concentration inequalities, and
//! the end-to-end assembly.
//!
//! The assembly proceeds in four steps: solve the nominal model, compute
//! budgets for uniform weights, optimize the weights against the nominal
//! transition values, and re-optimize the budgets for the new weights.

use alloc::vec::Vec;

use crate::bayes::PosteriorSampleSet;
use crate::error::{Error, Result};
use crate::math;
use crate::mdp::{compute_z, solve_nominal, Policy, TabularMdp, TransitionModel, ValueFunction};
use crate::norms::{weighted_norm, BallSpec, NormKind};
use crate::solver::AmbiguitySet;

/// Zero-gap clamp applied before weight normalization so every produced
/// weight stays strictly positive.
pub const WEIGHT_CLAMP: f64 = 1e-3;

/// Per-successor weights; finite entries have unit Euclidean norm, `+inf`
/// marks unreachable successors.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector {
    weights: Vec<f64>,
}

impl WeightVector {
    /// Normalizes the finite entries to unit Euclidean norm.
    pub fn new(mut weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidInput("empty weight vector".into()));
        }
        let mut sq = 0.0;
        for &w in &weights {
            if !(w > 0.0) {
                return Err(Error::InvalidInput("weights must be positive".into()));
            }
            if w != f64::INFINITY {
                sq += w * w;
            }
        }
        if sq == 0.0 {
            return Err(Error::InvalidInput("no finite weight entry".into()));
        }
        let norm = math::sqrt(sq);
        for w in weights.iter_mut() {
            if *w != f64::INFINITY {
                *w /= norm;
            }
        }
        Ok(Self { weights })
    }

    /// `1/sqrt(m)` on the `m` supported successors, `+inf` elsewhere.
    /// Used when a formula degenerates inside the optimized path, which
    /// keeps the unreachable-successor mask.
    pub fn uniform(support: &[bool]) -> Self {
        let m = support.iter().filter(|&&b| b).count();
        let v = 1.0 / math::sqrt(m as f64);
        Self {
            weights: support
                .iter()
                .map(|&b| if b { v } else { f64::INFINITY })
                .collect(),
        }
    }

    /// The baseline weighting `1/sqrt(S) * 1` over all `S` successors.
    ///
    /// The uniform baseline is the plain unweighted norm (scaled to unit
    /// Euclidean norm); it does not mask unreachable successors, which is
    /// a feature of the optimized weights only.
    pub fn uniform_full(len: usize) -> Self {
        let v = 1.0 / math::sqrt(len as f64);
        Self {
            weights: alloc::vec![v; len],
        }
    }

    #[inline]
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn finite(&self) -> Vec<f64> {
        self.weights
            .iter()
            .cloned()
            .filter(|w| *w != f64::INFINITY)
            .collect()
    }
}

/// Norm center for the weight formulas: median of `z` for L1 balls,
/// midrange for L-infinity balls.
pub fn default_lambda(z: &[f64], kind: NormKind) -> f64 {
    match kind {
        NormKind::WeightedL1 => math::median(z),
        NormKind::WeightedLInf => {
            let hi = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let lo = z.iter().cloned().fold(f64::INFINITY, f64::min);
            0.5 * (hi + lo)
        }
    }
}

/// Closed-form span-bound minimizing weights for a fixed center `lambda`.
///
/// With `b_i = |z_i - lambda|`: the L1-ball optimum is proportional to
/// `b_i^(1/3)` and the L-infinity-ball optimum to `b_i`; zero gaps are
/// clamped to [`WEIGHT_CLAMP`] and the result is renormalized. A constant
/// `z` falls back to uniform weights.
pub fn optimize_weights_analytic(
    z: &[f64],
    support: &[bool],
    lambda: f64,
    kind: NormKind,
) -> WeightVector {
    debug_assert_eq!(z.len(), support.len());
    let mut b: Vec<f64> = Vec::with_capacity(z.len());
    let mut any_positive = false;
    for i in 0..z.len() {
        if support[i] {
            let bi = math::abs(z[i] - lambda);
            if bi > 0.0 {
                any_positive = true;
            }
            b.push(bi);
        }
    }
    if !any_positive {
        return WeightVector::uniform(support);
    }
    let mut raw: Vec<f64> = b
        .iter()
        .map(|&bi| {
            let bi = if bi == 0.0 { WEIGHT_CLAMP } else { bi };
            match kind {
                NormKind::WeightedL1 => math::cbrt(bi),
                NormKind::WeightedLInf => bi,
            }
        })
        .collect();
    let norm = math::sqrt(raw.iter().map(|w| w * w).sum());
    for w in raw.iter_mut() {
        *w /= norm;
    }
    let mut out = Vec::with_capacity(z.len());
    let mut k = 0;
    for &sup in support {
        if sup {
            out.push(raw[k]);
            k += 1;
        } else {
            out.push(f64::INFINITY);
        }
    }
    WeightVector { weights: out }
}

/// Weights minimizing the conic span bound `psi * ||z - lambda 1||_2` with
/// the center jointly optimized; for L1 balls. For a fixed center the
/// optimal cone variables collapse to `g = |z - lambda 1|`, reducing the
/// program to minimizing the Euclidean distance to a constant vector, so
/// the optimal center is the mean of the supported `z` entries.
pub fn optimize_weights_socp(z: &[f64], support: &[bool], psi: f64) -> (WeightVector, f64) {
    debug_assert_eq!(z.len(), support.len());
    let zs: Vec<f64> = (0..z.len()).filter(|&i| support[i]).map(|i| z[i]).collect();
    let lambda = math::mean(&zs);
    let c = math::sqrt(
        zs.iter()
            .map(|&zi| (zi - lambda) * (zi - lambda))
            .sum::<f64>(),
    );
    let bound = psi * c;
    let weights = optimize_weights_analytic(z, support, lambda, NormKind::WeightedLInf);
    (weights, bound)
}

/// Norm preference heuristic: pick the L1 ball when the spread of the
/// value function as measured for the L1 bound exceeds the L-infinity
/// counterpart (`sqrt(S)`-scaled); ties go to L-infinity.
pub fn choose_norm(v: &ValueFunction) -> NormKind {
    let vals = &v.values;
    let vbar = math::mean(vals);
    let vmed = math::median(vals);
    let l1: f64 = vals.iter().map(|&x| math::abs(x - vbar)).sum();
    let linf = vals.iter().map(|&x| math::abs(x - vmed)).fold(0.0, f64::max);
    if l1 > math::sqrt(vals.len() as f64) * linf {
        NormKind::WeightedL1
    } else {
        NormKind::WeightedLInf
    }
}

/// 1-indexed ascending order-statistic index used for the credible-region
/// quantile: `ceil((1 - delta / (S A)) n)`, clamped to `[1, n]`.
pub fn credible_quantile_index(n: usize, delta: f64, states: usize, actions: usize) -> usize {
    let frac = 1.0 - delta / (states * actions) as f64;
    let idx = math::ceil(frac * n as f64) as usize;
    idx.clamp(1, n)
}

/// Budgets from posterior samples: per state-action pair the nominal is
/// the sample mean and the budget is the credible quantile of the sample
/// distances from it.
pub fn bayes_budget(
    samples: &PosteriorSampleSet,
    weights: &[WeightVector],
    kind: NormKind,
    delta: f64,
) -> Result<Vec<(Vec<f64>, f64)>> {
    let (s_count, a_count) = (samples.num_states(), samples.num_actions());
    if weights.len() != s_count * a_count {
        return Err(Error::InvalidInput("weight vector count != S * A".into()));
    }
    if !(delta > 0.0 && delta < 0.5) {
        return Err(Error::InvalidInput("delta must lie in (0, 0.5)".into()));
    }
    let mean = samples.mean_model()?;
    let idx = credible_quantile_index(samples.len(), delta, s_count, a_count);
    let mut out = Vec::with_capacity(s_count * a_count);
    for s in 0..s_count {
        for a in 0..a_count {
            let w = weights[s * a_count + a].weights();
            let pbar = mean.row(s, a);
            let mut dists = Vec::with_capacity(samples.len());
            for model in samples.models() {
                let row = model.row(s, a);
                let diff: Vec<f64> = (0..s_count).map(|sp| row[sp] - pbar[sp]).collect();
                let d = weighted_norm(&diff, w, kind);
                if d == f64::INFINITY {
                    let sp = (0..s_count)
                        .find(|&sp| w[sp] == f64::INFINITY && row[sp] != 0.0)
                        .unwrap_or(0);
                    return Err(Error::SupportViolation {
                        state: s,
                        action: a,
                        successor: sp,
                    });
                }
                dists.push(d);
            }
            dists.sort_unstable_by(f64::total_cmp);
            out.push((pbar.to_vec(), dists[idx - 1]));
        }
    }
    Ok(out)
}

/// Which concentration inequality sizes the frequentist budgets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Inequality {
    HoeffdingLInf,
    HoeffdingL1,
    BernsteinL1,
}

impl Inequality {
    pub fn norm_kind(self) -> NormKind {
        match self {
            Inequality::HoeffdingLInf => NormKind::WeightedLInf,
            Inequality::HoeffdingL1 | Inequality::BernsteinL1 => NormKind::WeightedL1,
        }
    }
}

/// Sample counts and confidence level for frequentist budget construction.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequentistSpec {
    counts: Vec<u64>,
    confidence: f64,
    inequality: Inequality,
}

impl FrequentistSpec {
    /// `counts` holds the per-state-action sample counts, flattened `[s][a]`.
    pub fn new(counts: Vec<u64>, confidence: f64, inequality: Inequality) -> Result<Self> {
        if counts.iter().any(|&n| n == 0) {
            return Err(Error::InvalidInput(
                "every state-action pair needs at least one sample".into(),
            ));
        }
        if !(confidence > 0.0 && confidence < 0.5) {
            return Err(Error::InvalidInput("delta must lie in (0, 0.5)".into()));
        }
        Ok(Self {
            counts,
            confidence,
            inequality,
        })
    }

    #[inline]
    pub fn confidence(&self) -> f64 {
        self.confidence
    }

    #[inline]
    pub fn inequality(&self) -> Inequality {
        self.inequality
    }

    #[inline]
    pub fn count(&self, state: usize, action: usize, num_actions: usize) -> u64 {
        self.counts[state * num_actions + action]
    }

    /// Budget for one state-action pair under the selected inequality.
    pub fn budget(&self, n: u64, w: &WeightVector, states: usize, actions: usize) -> f64 {
        let wf = w.finite();
        match self.inequality {
            Inequality::HoeffdingLInf => {
                hoeffding_linf_budget(n, self.confidence, states, actions, &wf)
            }
            Inequality::HoeffdingL1 => {
                hoeffding_l1_budget(n, self.confidence, states, actions, &wf)
            }
            Inequality::BernsteinL1 => {
                bernstein_l1_budget(n, self.confidence, states, actions, &wf)
            }
        }
    }
}

/// Smallest budget whose union-bound failure probability is at most
/// `delta`, found by bisection to absolute tolerance 1e-10. The right
///-hand sides are strictly decreasing in the budget, so the crossing is
/// unique; the bracket is doubled from 1 until it clears `delta`.
fn bisect_budget(rhs: impl Fn(f64) -> f64, delta: f64) -> f64 {
    if rhs(0.0) <= delta {
        return 0.0;
    }
    let mut hi = 1.0;
    while rhs(hi) >= delta {
        hi *= 2.0;
        if hi > 1e15 {
            break;
        }
    }
    let mut lo = 0.0;
    while hi - lo > 1e-10 {
        let mid = 0.5 * (lo + hi);
        if rhs(mid) > delta {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// Weighted L-infinity Hoeffding budget:
/// `2 S A sum_i exp(-2 psi^2 n / w_i^2) <= delta`.
pub fn hoeffding_linf_budget(n: u64, delta: f64, states: usize, actions: usize, w: &[f64]) -> f64 {
    let factor = 2.0 * (states * actions) as f64;
    let nf = n as f64;
    bisect_budget(
        |psi| {
            factor
                * w.iter()
                    .map(|&wi| math::exp(-2.0 * psi * psi * nf / (wi * wi)))
                    .sum::<f64>()
        },
        delta,
    )
}

/// Weighted L1 Hoeffding budget. The inequality requires the weights in
/// non-increasing order:
/// `2 S A sum_{i=1}^{m-1} 2^{m-i} exp(-psi^2 n / (2 w_i^2)) <= delta`.
pub fn hoeffding_l1_budget(n: u64, delta: f64, states: usize, actions: usize, w: &[f64]) -> f64 {
    let mut ws = w.to_vec();
    ws.sort_unstable_by(|a, b| b.total_cmp(a));
    let m = ws.len();
    if m <= 1 {
        return 0.0;
    }
    let factor = 2.0 * (states * actions) as f64;
    let nf = n as f64;
    bisect_budget(
        |psi| {
            factor
                * (0..m - 1)
                    .map(|i| {
                        math::powf(2.0, (m - 1 - i) as f64)
                            * math::exp(-psi * psi * nf / (2.0 * ws[i] * ws[i]))
                    })
                    .sum::<f64>()
        },
        delta,
    )
}

/// Weighted L1 Bernstein budget:
/// `2 S A sum_{i=1}^{m-1} 2^{m-i} exp(-3 psi^2 n / (6 w_i^2 + 4 psi w_i)) <= delta`.
pub fn bernstein_l1_budget(n: u64, delta: f64, states: usize, actions: usize, w: &[f64]) -> f64 {
    let mut ws = w.to_vec();
    ws.sort_unstable_by(|a, b| b.total_cmp(a));
    let m = ws.len();
    if m <= 1 {
        return 0.0;
    }
    let factor = 2.0 * (states * actions) as f64;
    let nf = n as f64;
    bisect_budget(
        |psi| {
            factor
                * (0..m - 1)
                    .map(|i| {
                        math::powf(2.0, (m - 1 - i) as f64)
                            * math::exp(
                                -3.0 * psi * psi * nf / (6.0 * ws[i] * ws[i] + 4.0 * psi * ws[i]),
                            )
                    })
                    .sum::<f64>()
        },
        delta,
    )
}

/// How the ball weights are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShapeMode {
    Uniform,
    Analytic,
    Socp,
}

/// Where the budgets (and the nominal model) come from.
pub enum BudgetSource<'a> {
    Bayesian {
        samples: &'a PosteriorSampleSet,
        delta: f64,
    },
    Frequentist {
        nominal: &'a TransitionModel,
        spec: &'a FrequentistSpec,
    },
}

/// Intermediate artifacts of the assembly, persisted by the CLI for audit.
#[derive(Debug, Clone)]
pub struct BuildArtifacts {
    pub nominal: TransitionModel,
    pub nominal_value: ValueFunction,
    pub nominal_policy: Policy,
    /// Transition values for the nominal solve, flattened `[s][a][s']`.
    pub z: Vec<f64>,
    pub uniform_budgets: Vec<f64>,
    pub weights: Vec<WeightVector>,
    pub budgets: Vec<f64>,
}

fn budgets_for(
    mdp: &TabularMdp,
    source: &BudgetSource<'_>,
    weights: &[WeightVector],
    kind: NormKind,
) -> Result<Vec<f64>> {
    match source {
        BudgetSource::Bayesian { samples, delta } => Ok(bayes_budget(
            samples, weights, kind, *delta,
        )?
        .into_iter()
        .map(|(_, psi)| psi)
        .collect()),
        BudgetSource::Frequentist { spec, .. } => {
            let a_count = mdp.num_actions();
            let mut out = Vec::with_capacity(weights.len());
            for s in 0..mdp.num_states() {
                for a in 0..a_count {
                    let n = spec.count(s, a, a_count);
                    out.push(spec.budget(n, &weights[s * a_count + a], mdp.num_states(), a_count));
                }
            }
            Ok(out)
        }
    }
}

/// Full ambiguity-set assembly: nominal solve, uniform-weight budgets,
/// weight optimization, budget re-optimization.
///
/// In frequentist mode the weights are optimized from the same dataset
/// that sizes the budgets; callers wanting a clean split should pass an
/// empirical model built from a disjoint dataset.
pub fn build_ambiguity_set(
    mdp: &TabularMdp,
    source: &BudgetSource<'_>,
    kind: NormKind,
    shape_mode: ShapeMode,
    tol: f64,
) -> Result<(AmbiguitySet, BuildArtifacts)> {
    let nominal = match source {
        BudgetSource::Bayesian { samples, .. } => samples.mean_model()?,
        BudgetSource::Frequentist { nominal, .. } => (*nominal).clone(),
    };
    nominal.validate_support(mdp)?;
    let (s_count, a_count) = (mdp.num_states(), mdp.num_actions());

    let (v_prime, pi_prime) = solve_nominal(mdp, &nominal, tol)?;
    let z = compute_z(mdp, &v_prime);

    let uniform: Vec<WeightVector> = (0..s_count * a_count)
        .map(|_| WeightVector::uniform_full(s_count))
        .collect();
    let uniform_budgets = budgets_for(mdp, source, &uniform, kind)?;

    let weights: Vec<WeightVector> = match shape_mode {
        ShapeMode::Uniform => uniform,
        ShapeMode::Analytic => {
            let mut out = Vec::with_capacity(s_count * a_count);
            for s in 0..s_count {
                for a in 0..a_count {
                    let base = mdp.row_index(s, a) * s_count;
                    let z_row = &z[base..base + s_count];
                    let support = mdp.support_row(s, a);
                    let zs: Vec<f64> = (0..s_count)
                        .filter(|&sp| support[sp])
                        .map(|sp| z_row[sp])
                        .collect();
                    let lambda = default_lambda(&zs, kind);
                    out.push(optimize_weights_analytic(z_row, support, lambda, kind));
                }
            }
            out
        }
        ShapeMode::Socp => {
            if kind != NormKind::WeightedL1 {
                return Err(Error::InvalidInput(
                    "conic weight optimization applies to L1 balls only".into(),
                ));
            }
            let mut out = Vec::with_capacity(s_count * a_count);
            for s in 0..s_count {
                for a in 0..a_count {
                    let base = mdp.row_index(s, a) * s_count;
                    let z_row = &z[base..base + s_count];
                    let support = mdp.support_row(s, a);
                    let psi = uniform_budgets[s * a_count + a];
                    let (w, _) = optimize_weights_socp(z_row, support, psi);
                    out.push(w);
                }
            }
            out
        }
    };

    let budgets = match shape_mode {
        ShapeMode::Uniform => uniform_budgets.clone(),
        _ => budgets_for(mdp, source, &weights, kind)?,
    };

    let mut balls = Vec::with_capacity(s_count * a_count);
    for s in 0..s_count {
        for a in 0..a_count {
            let idx = s * a_count + a;
            balls.push(BallSpec::new(
                kind,
                nominal.row(s, a).to_vec(),
                weights[idx].weights().to_vec(),
                budgets[idx],
            )?);
        }
    }
    let amb = AmbiguitySet::new(kind, s_count, a_count, balls)?;
    Ok((
        amb,
        BuildArtifacts {
            nominal,
            nominal_value: v_prime,
            nominal_policy: pi_prime,
            z,
            uniform_budgets,
            weights,
            budgets,
        },
    ))
}
