//! End-to-end driver: dataset simulation, ambiguity-set assembly, the
//! robust solve, the experiment grid, and the posterior guarantee check.

use std::path::PathBuf;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rmdp_core::bayes::{
    empirical_guarantee_check, empirical_set_coverage, sample_posterior, DirichletPosterior,
    PosteriorSampleSet, TransitionDataset,
};
use rmdp_core::builder::{
    build_ambiguity_set, BudgetSource, BuildArtifacts, FrequentistSpec, Inequality, ShapeMode,
};
use rmdp_core::domains::{example1, DomainName, DomainSpec};
use rmdp_core::math;
use rmdp_core::mdp::{TabularMdp, TransitionModel};
use rmdp_core::norms::NormKind;
use rmdp_core::solver::{robust_value_iteration, AmbiguitySet, RobustSolution};

use crate::formats;

/// Salt separating the dataset stream from the posterior-sample streams.
const DATASET_SALT: u64 = 0x6b8f_0a3d_91c2_e574;
/// Salt separating validation samples from construction samples.
const VALIDATION_SALT: u64 = 0x1f83_d9ab_fb41_bd6b;

/// Where the nominal model and ball budgets come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Bayesian,
    Frequentist,
}

/// Full description of one pipeline run; `seeds` spans the grid axis.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub domain: DomainSpec,
    pub mode: Mode,
    pub norm: NormKind,
    pub shape: ShapeMode,
    pub delta: f64,
    /// Posterior samples used to size credible regions (Bayesian mode).
    pub sample_count: usize,
    /// Simulated transitions per state-action pair.
    pub dataset_size: usize,
    pub seeds: Vec<u64>,
    pub output_dir: Option<PathBuf>,
    pub tol: f64,
    /// Use Bernstein instead of Hoeffding budgets (frequentist L1 only).
    pub bernstein: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            domain: DomainSpec::new(DomainName::RiverSwim),
            mode: Mode::Bayesian,
            norm: NormKind::WeightedL1,
            shape: ShapeMode::Analytic,
            delta: 0.05,
            sample_count: 20,
            dataset_size: 20,
            seeds: vec![0],
            output_dir: None,
            tol: 1e-3,
            bernstein: false,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta < 0.5) {
            bail!("delta must lie in (0, 0.5), got {}", self.delta);
        }
        if self.sample_count == 0 {
            bail!("need at least one posterior sample");
        }
        if self.dataset_size == 0 {
            bail!("need at least one transition per state-action pair");
        }
        if self.seeds.is_empty() {
            bail!("need at least one seed");
        }
        if !(self.tol > 0.0) {
            bail!("tolerance must be positive");
        }
        Ok(())
    }

    fn inequality(&self) -> Inequality {
        match (self.norm, self.bernstein) {
            (NormKind::WeightedLInf, _) => Inequality::HoeffdingLInf,
            (NormKind::WeightedL1, false) => Inequality::HoeffdingL1,
            (NormKind::WeightedL1, true) => Inequality::BernsteinL1,
        }
    }
}

/// One cell of the output table.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub method: String,
    pub delta: f64,
    pub robust_return: f64,
    pub nominal_return: f64,
    pub normalized_loss: f64,
    pub wall_time_s: f64,
    pub seed: u64,
    pub discount: f64,
}

/// A grid cell that failed; the run continues past it.
#[derive(Debug, Clone)]
pub struct CellFailure {
    pub method: String,
    pub seed: u64,
    pub message: String,
}

/// Everything produced by one Algorithm-1 run, kept for auditing and for
/// the downstream guarantee check.
pub struct RunOutput {
    pub mdp: TabularMdp,
    pub true_model: TransitionModel,
    pub amb: AmbiguitySet,
    pub artifacts: BuildArtifacts,
    pub solution: RobustSolution,
    pub posterior: Option<DirichletPosterior>,
    pub samples: Option<PosteriorSampleSet>,
}

impl RunOutput {
    /// Return of the nominal-model solve, the normalizer of Tables 1-2.
    pub fn nominal_return(&self) -> f64 {
        math::dot(self.mdp.initial_dist(), &self.artifacts.nominal_value.values)
    }
}

/// `(rho_bar - rho_hat) / |rho_bar|`; falls back to the raw gap when the
/// normalizer vanishes.
pub fn normalized_loss(nominal_return: f64, robust_return: f64) -> f64 {
    let gap = nominal_return - robust_return;
    if nominal_return == 0.0 {
        gap
    } else {
        gap / nominal_return.abs()
    }
}

pub fn method_label(norm: NormKind, shape: ShapeMode) -> String {
    let shape = match shape {
        ShapeMode::Uniform => "uniform",
        ShapeMode::Analytic => "optimized",
        ShapeMode::Socp => "socp",
    };
    let norm = match norm {
        NormKind::WeightedL1 => "l1",
        NormKind::WeightedLInf => "linf",
    };
    format!("{shape}-{norm}")
}

/// Draws `per_row` transitions from every state-action pair of the true
/// model; a uniform data collection scheme across state-action pairs.
pub fn sample_dataset(
    model: &TransitionModel,
    per_row: usize,
    rng: &mut ChaCha8Rng,
) -> Result<TransitionDataset> {
    let (s_count, a_count) = (model.num_states(), model.num_actions());
    let mut dataset = TransitionDataset::new(s_count, a_count);
    for s in 0..s_count {
        for a in 0..a_count {
            let row = model.row(s, a);
            for _ in 0..per_row {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                let mut pick = s_count - 1;
                for (sp, &p) in row.iter().enumerate() {
                    acc += p;
                    if u < acc {
                        pick = sp;
                        break;
                    }
                }
                dataset.record(s, a, pick)?;
            }
        }
    }
    Ok(dataset)
}

/// Draws a dataset by rolling out a uniformly random behavior policy from
/// the initial distribution instead of sampling each row in isolation.
pub fn sample_dataset_trajectory(
    model: &TransitionModel,
    mdp: &TabularMdp,
    steps: usize,
    rng: &mut ChaCha8Rng,
) -> Result<TransitionDataset> {
    let (s_count, a_count) = (model.num_states(), model.num_actions());
    let mut dataset = TransitionDataset::new(s_count, a_count);
    let draw = |rng: &mut ChaCha8Rng, p: &[f64]| -> usize {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (i, &pi) in p.iter().enumerate() {
            acc += pi;
            if u < acc {
                return i;
            }
        }
        p.len() - 1
    };
    let mut s = draw(rng, mdp.initial_dist());
    for _ in 0..steps {
        let a = rng.random_range(0..a_count);
        let sp = draw(rng, model.row(s, a));
        dataset.record(s, a, sp)?;
        s = sp;
    }
    Ok(dataset)
}

fn empirical_model(
    dataset: &TransitionDataset,
    s_count: usize,
    a_count: usize,
) -> Result<TransitionModel> {
    let mut probs = vec![0.0; s_count * a_count * s_count];
    for s in 0..s_count {
        for a in 0..a_count {
            let total = dataset.row_total(s, a);
            if total == 0 {
                bail!("state {s} action {a} has no observations");
            }
            let base = (s * a_count + a) * s_count;
            for sp in 0..s_count {
                probs[base + sp] = dataset.count(s, a, sp) as f64 / total as f64;
            }
        }
    }
    Ok(TransitionModel::new(s_count, a_count, probs)?)
}

/// Runs the four assembly lines (nominal solve, uniform-weight budgets,
/// weight optimization, budget re-optimization) followed by the robust
/// solve, and persists the intermediate artifacts when an output
/// directory is configured.
pub fn run_algorithm1(config: &ExperimentConfig, seed: u64) -> Result<RunOutput> {
    config.validate()?;
    let (mdp, true_model) = config.domain.build()?;
    let (s_count, a_count) = (mdp.num_states(), mdp.num_actions());

    let mut posterior_out = None;
    let mut samples_out = None;
    let (amb, artifacts) = match config.mode {
        Mode::Bayesian => {
            let posterior = if config.domain.name == DomainName::Example1 {
                // The example chain ships its posterior directly.
                example1(mdp.discount())?.1
            } else {
                let mut rng = ChaCha8Rng::seed_from_u64(seed ^ DATASET_SALT);
                let dataset = sample_dataset(&true_model, config.dataset_size, &mut rng)?;
                DirichletPosterior::uniform_prior(&mdp).updated(&dataset)?
            };
            let samples = sample_posterior(&posterior, config.sample_count, seed)?;
            let source = BudgetSource::Bayesian {
                samples: &samples,
                delta: config.delta,
            };
            let built = build_ambiguity_set(&mdp, &source, config.norm, config.shape, config.tol)?;
            posterior_out = Some(posterior);
            samples_out = Some(samples);
            built
        }
        Mode::Frequentist => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ DATASET_SALT);
            let dataset = sample_dataset(&true_model, config.dataset_size, &mut rng)?;
            let nominal = empirical_model(&dataset, s_count, a_count)?;
            let counts: Vec<u64> = (0..s_count * a_count)
                .map(|idx| dataset.row_total(idx / a_count, idx % a_count))
                .collect();
            let spec = FrequentistSpec::new(counts, config.delta, config.inequality())?;
            let source = BudgetSource::Frequentist {
                nominal: &nominal,
                spec: &spec,
            };
            build_ambiguity_set(&mdp, &source, config.norm, config.shape, config.tol)?
        }
    };

    let solution = robust_value_iteration(&mdp, &amb, config.tol)
        .context("robust value iteration did not converge")?;

    if let Some(dir) = &config.output_dir {
        std::fs::create_dir_all(dir)?;
        let label = method_label(config.norm, config.shape);
        formats::write_ambiguity_csv(&dir.join(format!("{label}-seed{seed}-ambiguity.csv")), &amb)?;
        let audit = render_artifacts(&mdp, &artifacts);
        std::fs::write(dir.join(format!("{label}-seed{seed}-artifacts.txt")), audit)?;
    }

    Ok(RunOutput {
        mdp,
        true_model,
        amb,
        artifacts,
        solution,
        posterior: posterior_out,
        samples: samples_out,
    })
}

/// Deterministic text dump of the intermediate assembly quantities.
fn render_artifacts(mdp: &TabularMdp, artifacts: &BuildArtifacts) -> String {
    use std::fmt::Write as _;
    let (s_count, a_count) = (mdp.num_states(), mdp.num_actions());
    let mut out = String::new();
    let _ = writeln!(out, "nominal_value: {:?}", artifacts.nominal_value.values);
    let _ = writeln!(out, "nominal_policy: {:?}", artifacts.nominal_policy.actions());
    for s in 0..s_count {
        for a in 0..a_count {
            let idx = s * a_count + a;
            let base = mdp.row_index(s, a) * s_count;
            let _ = writeln!(out, "z[{s},{a}]: {:?}", &artifacts.z[base..base + s_count]);
            let _ = writeln!(out, "uniform_budget[{s},{a}]: {}", artifacts.uniform_budgets[idx]);
            let _ = writeln!(out, "weights[{s},{a}]: {:?}", artifacts.weights[idx].weights());
            let _ = writeln!(out, "budget[{s},{a}]: {}", artifacts.budgets[idx]);
        }
    }
    out
}

/// Runs every (method, seed) cell of the grid, recording per-cell
/// failures without aborting, and emits the CSV plus aligned-text table.
pub fn run_experiment(
    base: &ExperimentConfig,
    methods: &[(NormKind, ShapeMode)],
) -> Result<(Vec<ResultRow>, Vec<CellFailure>)> {
    base.validate()?;
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for &(norm, shape) in methods {
        let label = method_label(norm, shape);
        for &seed in &base.seeds {
            let mut config = base.clone();
            config.norm = norm;
            config.shape = shape;
            let start = Instant::now();
            match run_algorithm1(&config, seed) {
                Ok(out) => {
                    let nominal_return = out.nominal_return();
                    rows.push(ResultRow {
                        method: label.clone(),
                        delta: base.delta,
                        robust_return: out.solution.robust_return,
                        nominal_return,
                        normalized_loss: normalized_loss(
                            nominal_return,
                            out.solution.robust_return,
                        ),
                        wall_time_s: start.elapsed().as_secs_f64(),
                        seed,
                        discount: out.mdp.discount(),
                    });
                }
                Err(err) => failures.push(CellFailure {
                    method: label.clone(),
                    seed,
                    message: format!("{err:#}"),
                }),
            }
        }
    }
    if let Some(dir) = &base.output_dir {
        std::fs::create_dir_all(dir)?;
        formats::write_results_csv(&dir.join("results.csv"), &rows)?;
        std::fs::write(
            dir.join("results.txt"),
            formats::format_results_table(&rows),
        )?;
    }
    Ok((rows, failures))
}

/// Median of the normalized losses of one method across seeds.
pub fn median_loss(rows: &[ResultRow], method: &str) -> Option<f64> {
    let mut losses: Vec<f64> = rows
        .iter()
        .filter(|r| r.method == method)
        .map(|r| r.normalized_loss)
        .collect();
    if losses.is_empty() {
        return None;
    }
    losses.sort_unstable_by(f64::total_cmp);
    let n = losses.len();
    Some(if n % 2 == 1 {
        losses[n / 2]
    } else {
        0.5 * (losses[n / 2 - 1] + losses[n / 2])
    })
}

/// Outcome of the posterior guarantee check.
#[derive(Debug, Clone, Copy)]
pub struct GuaranteeReport {
    pub fraction: f64,
    pub coverage: f64,
    pub threshold: f64,
    pub pass: bool,
}

/// Draws fresh posterior samples (disjoint stream from construction) and
/// checks the empirical percentile guarantee; the set-coverage figure is
/// reported but never used as a pass criterion, since containment is
/// sufficient, not necessary.
pub fn validate_guarantee(
    output: &RunOutput,
    delta: f64,
    fresh_count: usize,
    seed: u64,
) -> Result<GuaranteeReport> {
    let posterior = output
        .posterior
        .as_ref()
        .context("guarantee validation requires a Bayesian run")?;
    let fresh = sample_posterior(posterior, fresh_count, seed ^ VALIDATION_SALT)?;
    let fraction = empirical_guarantee_check(
        &output.mdp,
        &fresh,
        &output.solution.policy,
        output.solution.robust_return,
    )?;
    let coverage = empirical_set_coverage(&fresh, &output.amb);
    let threshold = 1.0 - delta - 0.02;
    Ok(GuaranteeReport {
        fraction,
        coverage,
        threshold,
        pass: fraction >= threshold,
    })
}
