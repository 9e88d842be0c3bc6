//! Flat key=value configuration files. Every field of the experiment
//! configuration has a key; unknown keys are errors, `#` starts a
//! comment, and all effective values can be echoed back out so outputs
//! are self-describing.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use rmdp_core::builder::ShapeMode;
use rmdp_core::domains::{DomainName, DomainSpec};
use rmdp_core::norms::NormKind;

use crate::pipeline::{ExperimentConfig, Mode};

pub fn parse_domain_name(token: &str) -> Result<DomainName> {
    match token {
        "riverswim" => Ok(DomainName::RiverSwim),
        "machine-replacement" => Ok(DomainName::MachineReplacement),
        "population-growth" => Ok(DomainName::PopulationGrowth),
        "inventory" => Ok(DomainName::Inventory),
        "example1" => Ok(DomainName::Example1),
        "cartpole" => bail!(
            "the cart-pole domain is not supported: it has a continuous \
             state space, while this tool covers tabular MDPs only \
             (try: riverswim, machine-replacement, population-growth, \
             inventory, example1)"
        ),
        other => bail!("unknown domain {other:?}"),
    }
}

pub fn domain_token(name: DomainName) -> &'static str {
    match name {
        DomainName::RiverSwim => "riverswim",
        DomainName::MachineReplacement => "machine-replacement",
        DomainName::PopulationGrowth => "population-growth",
        DomainName::Inventory => "inventory",
        DomainName::Example1 => "example1",
    }
}

pub fn parse_mode(token: &str) -> Result<Mode> {
    match token {
        "bayesian" => Ok(Mode::Bayesian),
        "frequentist" => Ok(Mode::Frequentist),
        other => bail!("unknown mode {other:?} (expected bayesian or frequentist)"),
    }
}

pub fn parse_norm(token: &str) -> Result<NormKind> {
    match token {
        "l1" => Ok(NormKind::WeightedL1),
        "linf" => Ok(NormKind::WeightedLInf),
        other => bail!("unknown norm {other:?} (expected l1 or linf)"),
    }
}

pub fn parse_shape(token: &str) -> Result<ShapeMode> {
    match token {
        "uniform" => Ok(ShapeMode::Uniform),
        "analytic" => Ok(ShapeMode::Analytic),
        "socp" => Ok(ShapeMode::Socp),
        other => bail!("unknown shape mode {other:?} (expected uniform, analytic, or socp)"),
    }
}

pub fn parse_seeds(token: &str) -> Result<Vec<u64>> {
    token
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| {
            s.trim()
                .parse::<u64>()
                .with_context(|| format!("bad seed {s:?}"))
        })
        .collect()
}

/// Applies `key=value` lines from `text` on top of `base`.
pub fn apply_config_text(base: &ExperimentConfig, text: &str) -> Result<ExperimentConfig> {
    let mut config = base.clone();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .with_context(|| format!("line {}: expected key=value", lineno + 1))?;
        let (key, value) = (key.trim(), value.trim());
        match key {
            "domain" => config.domain = DomainSpec::new(parse_domain_name(value)?),
            "size" => config.domain.size = Some(value.parse()?),
            "discount" => config.domain.discount = Some(value.parse()?),
            "mode" => config.mode = parse_mode(value)?,
            "norm" => config.norm = parse_norm(value)?,
            "shape" => config.shape = parse_shape(value)?,
            "delta" => config.delta = value.parse()?,
            "samples" => config.sample_count = value.parse()?,
            "dataset_size" => config.dataset_size = value.parse()?,
            "seeds" => config.seeds = parse_seeds(value)?,
            "output_dir" => config.output_dir = Some(PathBuf::from(value)),
            "tol" => config.tol = value.parse()?,
            "bernstein" => config.bernstein = value.parse()?,
            other => bail!("line {}: unknown key {other:?}", lineno + 1),
        }
    }
    Ok(config)
}

pub fn load_config(base: &ExperimentConfig, path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))?;
    apply_config_text(base, &text)
}

/// Renders every effective value back in config syntax.
pub fn render_config(config: &ExperimentConfig) -> String {
    let mut out = String::new();
    out.push_str(&format!("domain={}\n", domain_token(config.domain.name)));
    if let Some(size) = config.domain.size {
        out.push_str(&format!("size={size}\n"));
    }
    if let Some(discount) = config.domain.discount {
        out.push_str(&format!("discount={discount}\n"));
    }
    out.push_str(&format!(
        "mode={}\n",
        match config.mode {
            Mode::Bayesian => "bayesian",
            Mode::Frequentist => "frequentist",
        }
    ));
    out.push_str(&format!(
        "norm={}\n",
        match config.norm {
            NormKind::WeightedL1 => "l1",
            NormKind::WeightedLInf => "linf",
        }
    ));
    out.push_str(&format!(
        "shape={}\n",
        match config.shape {
            ShapeMode::Uniform => "uniform",
            ShapeMode::Analytic => "analytic",
            ShapeMode::Socp => "socp",
        }
    ));
    out.push_str(&format!("delta={}\n", config.delta));
    out.push_str(&format!("samples={}\n", config.sample_count));
    out.push_str(&format!("dataset_size={}\n", config.dataset_size));
    let seeds: Vec<String> = config.seeds.iter().map(u64::to_string).collect();
    out.push_str(&format!("seeds={}\n", seeds.join(",")));
    if let Some(dir) = &config.output_dir {
        out.push_str(&format!("output_dir={}\n", dir.display()));
    }
    out.push_str(&format!("tol={}\n", config.tol));
    out.push_str(&format!("bernstein={}\n", config.bernstein));
    out
}
