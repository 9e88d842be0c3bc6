//! Dirichlet-posterior modeling over transition functions: conjugate
//! updates from transition datasets, posterior sampling, and empirical
//! validation of the percentile guarantee.

use alloc::vec;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};

use crate::error::{Error, Result};
use crate::math;
use crate::mdp::{return_of, solve_nominal, Policy, TabularMdp, TransitionModel};
use crate::solver::AmbiguitySet;

/// Transition counts tallied from observed `(s, a, s')` triples.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransitionDataset {
    num_states: usize,
    num_actions: usize,
    counts: Vec<u64>,
}

impl TransitionDataset {
    pub fn new(num_states: usize, num_actions: usize) -> Self {
        Self {
            num_states,
            num_actions,
            counts: vec![0; num_states * num_actions * num_states],
        }
    }

    pub fn from_triples(
        num_states: usize,
        num_actions: usize,
        triples: &[(usize, usize, usize)],
    ) -> Result<Self> {
        let mut ds = Self::new(num_states, num_actions);
        for &(s, a, sp) in triples {
            ds.record(s, a, sp)?;
        }
        Ok(ds)
    }

    pub fn record(&mut self, state: usize, action: usize, next: usize) -> Result<()> {
        if state >= self.num_states || action >= self.num_actions || next >= self.num_states {
            return Err(Error::InvalidInput("transition index out of range".into()));
        }
        self.counts[(state * self.num_actions + action) * self.num_states + next] += 1;
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
    pub fn count(&self, state: usize, action: usize, next: usize) -> u64 {
        self.counts[(state * self.num_actions + action) * self.num_states + next]
    }

    /// Number of observed transitions out of `(s, a)`.
    pub fn row_total(&self, state: usize, action: usize) -> u64 {
        let base = (state * self.num_actions + action) * self.num_states;
        self.counts[base..base + self.num_states].iter().sum()
    }

    pub fn triples(&self) -> Vec<(usize, usize, usize)> {
        let mut out = Vec::new();
        for s in 0..self.num_states {
            for a in 0..self.num_actions {
                for sp in 0..self.num_states {
                    for _ in 0..self.count(s, a, sp) {
                        out.push((s, a, sp));
                    }
                }
            }
        }
        out
    }
}

/// Independent Dirichlet distributions over the rows of the transition
/// function; zero concentration marks off-support successors.
#[derive(Debug, Clone, PartialEq)]
pub struct DirichletPosterior {
    num_states: usize,
    num_actions: usize,
    alpha: Vec<f64>,
}

impl DirichletPosterior {
    pub fn new(num_states: usize, num_actions: usize, alpha: Vec<f64>) -> Result<Self> {
        if alpha.len() != num_states * num_actions * num_states {
            return Err(Error::InvalidInput(
                "concentration tensor size mismatch".into(),
            ));
        }
        if alpha.iter().any(|&a| a < 0.0 || !a.is_finite()) {
            return Err(Error::InvalidInput(
                "concentrations must be finite and nonnegative".into(),
            ));
        }
        for s in 0..num_states {
            for a in 0..num_actions {
                let base = (s * num_actions + a) * num_states;
                if !alpha[base..base + num_states].iter().any(|&x| x > 0.0) {
                    return Err(Error::InvalidInput(
                        "a state-action row has no positive concentration".into(),
                    ));
                }
            }
        }
        Ok(Self {
            num_states,
            num_actions,
            alpha,
        })
    }

    /// Uniform prior: concentration 1 on every supported successor.
    pub fn uniform_prior(mdp: &TabularMdp) -> Self {
        let n = mdp.num_states();
        let mut alpha = vec![0.0; n * mdp.num_actions() * n];
        for s in 0..n {
            for a in 0..mdp.num_actions() {
                let base = mdp.row_index(s, a) * n;
                for (sp, &m) in mdp.support_row(s, a).iter().enumerate() {
                    if m {
                        alpha[base + sp] = 1.0;
                    }
                }
            }
        }
        Self {
            num_states: n,
            num_actions: mdp.num_actions(),
            alpha,
        }
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
    pub fn alpha_row(&self, state: usize, action: usize) -> &[f64] {
        let base = (state * self.num_actions + action) * self.num_states;
        &self.alpha[base..base + self.num_states]
    }

    /// Conjugate update: `alpha_post = alpha_prior + counts`.
    pub fn updated(&self, dataset: &TransitionDataset) -> Result<Self> {
        if dataset.num_states() != self.num_states || dataset.num_actions() != self.num_actions {
            return Err(Error::InvalidInput(
                "dataset/posterior dimension mismatch".into(),
            ));
        }
        let mut alpha = self.alpha.clone();
        for s in 0..self.num_states {
            for a in 0..self.num_actions {
                for sp in 0..self.num_states {
                    let c = dataset.count(s, a, sp);
                    if c > 0 {
                        let idx = (s * self.num_actions + a) * self.num_states + sp;
                        if alpha[idx] == 0.0 {
                            return Err(Error::SupportViolation {
                                state: s,
                                action: a,
                                successor: sp,
                            });
                        }
                        alpha[idx] += c as f64;
                    }
                }
            }
        }
        Ok(Self {
            num_states: self.num_states,
            num_actions: self.num_actions,
            alpha,
        })
    }

    /// Posterior mean transition model: `alpha / sum(alpha)` per row.
    pub fn mean_model(&self) -> Result<TransitionModel> {
        let n = self.num_states;
        let mut probs = vec![0.0; self.alpha.len()];
        for s in 0..n {
            for a in 0..self.num_actions {
                let row = self.alpha_row(s, a);
                let total = math::sum(row);
                let base = (s * self.num_actions + a) * n;
                for sp in 0..n {
                    probs[base + sp] = row[sp] / total;
                }
            }
        }
        TransitionModel::new(n, self.num_actions, probs)
    }
}

/// A batch of posterior draws, reproducible from the recorded seed.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorSampleSet {
    num_states: usize,
    num_actions: usize,
    seed: u64,
    models: Vec<TransitionModel>,
}

impl PosteriorSampleSet {
    pub fn from_models(models: Vec<TransitionModel>, seed: u64) -> Result<Self> {
        let first = models
            .first()
            .ok_or_else(|| Error::InvalidInput("empty sample set".into()))?;
        let (s, a) = (first.num_states(), first.num_actions());
        if models
            .iter()
            .any(|m| m.num_states() != s || m.num_actions() != a)
        {
            return Err(Error::InvalidInput("inconsistent sample dimensions".into()));
        }
        Ok(Self {
            num_states: s,
            num_actions: a,
            seed,
            models,
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
    pub fn len(&self) -> usize {
        self.models.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.models.is_empty()
    }

    #[inline]
    pub fn seed(&self) -> u64 {
        self.seed
    }

    #[inline]
    pub fn models(&self) -> &[TransitionModel] {
        &self.models
    }

    /// Sample-mean transition model (the Algorithm 3 nominal).
    pub fn mean_model(&self) -> Result<TransitionModel> {
        let n = self.num_states;
        let mut probs = vec![0.0; n * self.num_actions * n];
        let inv = 1.0 / self.models.len() as f64;
        for s in 0..n {
            for a in 0..self.num_actions {
                let base = (s * self.num_actions + a) * n;
                for sp in 0..n {
                    let col: Vec<f64> = self.models.iter().map(|m| m.row(s, a)[sp]).collect();
                    probs[base + sp] = math::sum(&col) * inv;
                }
            }
        }
        TransitionModel::new(n, self.num_actions, probs)
    }
}

/// Draws `n` independent transition functions from the posterior. Each
/// sample owns its own counter-mode RNG stream, so the output is bitwise
/// reproducible for a fixed seed regardless of evaluation order.
pub fn sample_posterior(
    posterior: &DirichletPosterior,
    n: usize,
    seed: u64,
) -> Result<PosteriorSampleSet> {
    if n == 0 {
        return Err(Error::InvalidInput("need at least one sample".into()));
    }
    let s_count = posterior.num_states();
    let a_count = posterior.num_actions();
    let mut models = Vec::with_capacity(n);
    for k in 0..n {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(k as u64);
        let mut probs = vec![0.0; s_count * a_count * s_count];
        for s in 0..s_count {
            for a in 0..a_count {
                let alpha = posterior.alpha_row(s, a);
                let base = (s * a_count + a) * s_count;
                sample_dirichlet(alpha, &mut rng, &mut probs[base..base + s_count]);
            }
        }
        models.push(TransitionModel::new(s_count, a_count, probs)?);
    }
    PosteriorSampleSet::from_models(models, seed)
}

/// One Dirichlet draw via normalized independent gamma variates.
fn sample_dirichlet(alpha: &[f64], rng: &mut ChaCha8Rng, out: &mut [f64]) {
    let mut total = 0.0;
    for (i, &a) in alpha.iter().enumerate() {
        if a > 0.0 {
            let g = Gamma::new(a, 1.0).expect("positive shape");
            out[i] = g.sample(rng);
            total += out[i];
        } else {
            out[i] = 0.0;
        }
    }
    if total <= 0.0 {
        // Essentially impossible for the shapes used here; fall back to the
        // normalized concentration to keep the row stochastic.
        total = math::sum(alpha);
        out.copy_from_slice(alpha);
    }
    for p in out.iter_mut() {
        *p /= total;
    }
}

/// Fraction of sampled models on which the policy's return meets `rho_hat`
/// (up to a small slack absorbing evaluation roundoff).
pub fn empirical_guarantee_check(
    mdp: &TabularMdp,
    samples: &PosteriorSampleSet,
    policy: &Policy,
    rho_hat: f64,
) -> Result<f64> {
    let mut hits = 0usize;
    for model in samples.models() {
        if return_of(mdp, model, policy)? >= rho_hat - 1e-9 {
            hits += 1;
        }
    }
    Ok(hits as f64 / samples.len() as f64)
}

/// Fraction of sampled models contained in every ball simultaneously.
pub fn empirical_set_coverage(samples: &PosteriorSampleSet, amb: &AmbiguitySet) -> f64 {
    let mut hits = 0usize;
    'outer: for model in samples.models() {
        for s in 0..samples.num_states() {
            for a in 0..samples.num_actions() {
                if !amb.ball(s, a).contains(model.row(s, a)) {
                    continue 'outer;
                }
            }
        }
        hits += 1;
    }
    hits as f64 / samples.len() as f64
}

/// Solves each sampled model to optimality and returns the delta-quantile
/// of the optimal returns (ascending order statistic; delta = 0 gives the
/// minimum).
pub fn percentile_of_best_response(
    mdp: &TabularMdp,
    samples: &PosteriorSampleSet,
    delta: f64,
    tol: f64,
) -> Result<f64> {
    let mut optima = Vec::with_capacity(samples.len());
    for model in samples.models() {
        let (v, _) = solve_nominal(mdp, model, tol)?;
        optima.push(math::dot(mdp.initial_dist(), &v.values));
    }
    optima.sort_unstable_by(f64::total_cmp);
    let n = optima.len();
    let idx = (math::ceil(delta * n as f64) as usize).max(1).min(n);
    Ok(optima[idx - 1])
}
