//! `rmdp`: percentile-criterion policies for tabular MDPs via robust MDPs
//! with optimized weighted-norm ambiguity sets.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use rmdp_cli::config::{
    load_config, parse_domain_name, parse_mode, parse_norm, parse_seeds, parse_shape,
    render_config,
};
use rmdp_cli::formats;
use rmdp_cli::pipeline::{
    method_label, normalized_loss, run_algorithm1, run_experiment, validate_guarantee,
    ExperimentConfig, Mode,
};
use rmdp_core::builder::ShapeMode;
use rmdp_core::domains::DomainSpec;
use rmdp_core::norms::NormKind;

#[derive(Parser)]
#[command(name = "rmdp", about = "Robust-MDP percentile-criterion toolkit", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonOpts {
    /// Flat key=value config file; command-line flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Domain: riverswim, machine-replacement, population-growth,
    /// inventory, or example1.
    #[arg(long)]
    domain: Option<String>,
    /// Domain size parameter (population-growth, inventory).
    #[arg(long)]
    size: Option<usize>,
    /// Discount factor override.
    #[arg(long)]
    discount: Option<f64>,
    /// bayesian or frequentist.
    #[arg(long)]
    mode: Option<String>,
    /// l1 or linf.
    #[arg(long)]
    norm: Option<String>,
    /// uniform, analytic, or socp.
    #[arg(long)]
    shape: Option<String>,
    /// Confidence level in (0, 0.5).
    #[arg(long)]
    delta: Option<f64>,
    /// Posterior samples used to size credible regions.
    #[arg(long)]
    samples: Option<usize>,
    /// Simulated transitions per state-action pair.
    #[arg(long)]
    dataset_size: Option<usize>,
    /// Comma-separated seed list.
    #[arg(long)]
    seeds: Option<String>,
    /// Directory for persisted artifacts and result tables.
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Solver tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// Use Bernstein instead of Hoeffding budgets (frequentist L1).
    #[arg(long)]
    bernstein: bool,
}

impl CommonOpts {
    fn build(&self) -> Result<ExperimentConfig> {
        let mut config = ExperimentConfig::default();
        if let Some(path) = &self.config {
            config = load_config(&config, path)?;
        }
        if let Some(domain) = &self.domain {
            config.domain = DomainSpec::new(parse_domain_name(domain)?);
        }
        if let Some(size) = self.size {
            config.domain.size = Some(size);
        }
        if let Some(discount) = self.discount {
            config.domain.discount = Some(discount);
        }
        if let Some(mode) = &self.mode {
            config.mode = parse_mode(mode)?;
        }
        if let Some(norm) = &self.norm {
            config.norm = parse_norm(norm)?;
        }
        if let Some(shape) = &self.shape {
            config.shape = parse_shape(shape)?;
        }
        if let Some(delta) = self.delta {
            config.delta = delta;
        }
        if let Some(samples) = self.samples {
            config.sample_count = samples;
        }
        if let Some(dataset_size) = self.dataset_size {
            config.dataset_size = dataset_size;
        }
        if let Some(seeds) = &self.seeds {
            config.seeds = parse_seeds(seeds)?;
        }
        if let Some(dir) = &self.output_dir {
            config.output_dir = Some(dir.clone());
        }
        if let Some(tol) = self.tol {
            config.tol = tol;
        }
        if self.bernstein {
            config.bernstein = true;
        }
        config.validate()?;
        Ok(config)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run the ambiguity-shape optimization pipeline once and print the
    /// robust return.
    Solve(CommonOpts),
    /// Run the full method grid (uniform/optimized x l1/linf) over all
    /// seeds and emit result tables.
    Bench(CommonOpts),
    /// Run the pipeline, then check the percentile guarantee on fresh
    /// posterior samples; exits 1 if the guarantee fails.
    Validate {
        #[command(flatten)]
        opts: CommonOpts,
        /// Fresh posterior samples for the check.
        #[arg(long, default_value_t = 1000)]
        fresh_samples: usize,
    },
    /// Write a built-in domain as an MDP CSV file.
    ExportDomain {
        #[command(flatten)]
        opts: CommonOpts,
        /// Destination file.
        #[arg(long)]
        output: PathBuf,
    },
}

/// 0 = ok, 1 = validation failure, 2 = error.
fn run() -> Result<u8> {
    let cli = Cli::parse();
    match cli.command {
        Command::Solve(opts) => {
            let config = opts.build()?;
            let seed = config.seeds[0];
            print!("{}", render_config(&config));
            let out = run_algorithm1(&config, seed)?;
            let nominal = out.nominal_return();
            let robust = out.solution.robust_return;
            println!("method={}", method_label(config.norm, config.shape));
            println!("seed={seed}");
            println!("nominal_return={nominal}");
            println!("robust_return={robust}");
            println!("normalized_loss={}", normalized_loss(nominal, robust));
            println!("iterations={}", out.solution.iterations);
            println!("residual={}", out.solution.residual);
            Ok(0)
        }
        Command::Bench(opts) => {
            let config = opts.build()?;
            print!("{}", render_config(&config));
            let methods = [
                (NormKind::WeightedL1, ShapeMode::Uniform),
                (NormKind::WeightedL1, ShapeMode::Analytic),
                (NormKind::WeightedLInf, ShapeMode::Uniform),
                (NormKind::WeightedLInf, ShapeMode::Analytic),
            ];
            let (rows, failures) = run_experiment(&config, &methods)?;
            print!("{}", formats::format_results_table(&rows));
            for failure in &failures {
                eprintln!(
                    "cell failed: method={} seed={}: {}",
                    failure.method, failure.seed, failure.message
                );
            }
            Ok(if failures.is_empty() { 0 } else { 1 })
        }
        Command::Validate {
            opts,
            fresh_samples,
        } => {
            let config = opts.build()?;
            if config.mode != Mode::Bayesian {
                anyhow::bail!("the guarantee check requires bayesian mode");
            }
            let seed = config.seeds[0];
            print!("{}", render_config(&config));
            let out = run_algorithm1(&config, seed)?;
            let report = validate_guarantee(&out, config.delta, fresh_samples, seed)?;
            println!("robust_return={}", out.solution.robust_return);
            println!("guarantee_fraction={}", report.fraction);
            println!("set_coverage={}", report.coverage);
            println!("threshold={}", report.threshold);
            println!("pass={}", report.pass);
            Ok(if report.pass { 0 } else { 1 })
        }
        Command::ExportDomain { opts, output } => {
            let config = opts.build()?;
            let (mdp, model) = config.domain.build()?;
            formats::write_mdp_csv(&output, &mdp, &model)?;
            println!(
                "wrote {} ({} states, {} actions)",
                output.display(),
                mdp.num_states(),
                mdp.num_actions()
            );
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}
