//! File formats: MDP, dataset, posterior-sample, and ambiguity-set CSVs,
//! plus the result table emitters.
//!
//! All floating-point fields are written with the shortest
//! round-trippable representation, so `parse(emit(x)) == x` bitwise.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use rmdp_core::bayes::{PosteriorSampleSet, TransitionDataset};
use rmdp_core::mdp::{TabularMdp, TransitionModel};
use rmdp_core::norms::{BallSpec, NormKind};
use rmdp_core::solver::AmbiguitySet;

use crate::pipeline::ResultRow;

fn fmt_f64(x: f64) -> String {
    if x == f64::INFINITY {
        "inf".to_string()
    } else {
        format!("{x}")
    }
}

fn parse_f64(s: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .with_context(|| format!("bad numeric field {s:?}"))
}

fn parse_usize(s: &str) -> Result<usize> {
    s.trim()
        .parse::<usize>()
        .with_context(|| format!("bad index field {s:?}"))
}

/// Splits leading `# key=value` lines from the CSV body.
fn split_preamble(text: &str) -> (Vec<(String, String)>, String) {
    let mut pairs = Vec::new();
    let mut body = String::new();
    let mut in_body = false;
    for line in text.lines() {
        if !in_body && line.starts_with('#') {
            if let Some((k, v)) = line[1..].split_once('=') {
                pairs.push((k.trim().to_string(), v.trim().to_string()));
            }
        } else {
            in_body = true;
            body.push_str(line);
            body.push('\n');
        }
    }
    (pairs, body)
}

/// Emits an MDP plus its true/nominal model. Rows are written only for
/// supported transitions; the discount and initial distribution ride in a
/// `#`-prefixed header block.
pub fn write_mdp_csv(path: &Path, mdp: &TabularMdp, model: &TransitionModel) -> Result<()> {
    let mut out = String::new();
    writeln!(out, "# discount={}", fmt_f64(mdp.discount()))?;
    let p0: Vec<String> = mdp
        .initial_dist()
        .iter()
        .enumerate()
        .filter(|(_, &p)| p > 0.0)
        .map(|(s, &p)| format!("{s}:{}", fmt_f64(p)))
        .collect();
    writeln!(out, "# initial={}", p0.join(";"))?;
    writeln!(out, "idstatefrom,idaction,idstateto,probability,reward")?;
    for s in 0..mdp.num_states() {
        for a in 0..mdp.num_actions() {
            let support = mdp.support_row(s, a);
            let probs = model.row(s, a);
            let rewards = mdp.reward_row(s, a);
            for sp in 0..mdp.num_states() {
                if support[sp] {
                    writeln!(
                        out,
                        "{s},{a},{sp},{},{}",
                        fmt_f64(probs[sp]),
                        fmt_f64(rewards[sp])
                    )?;
                }
            }
        }
    }
    fs::write(path, out).with_context(|| format!("writing {}", path.display()))
}

/// Parses the format written by [`write_mdp_csv`]. Rows absent from the
/// file are outside the support mask.
pub fn read_mdp_csv(path: &Path) -> Result<(TabularMdp, TransitionModel)> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let (pairs, body) = split_preamble(&text);
    let mut discount = None;
    let mut initial_pairs: Vec<(usize, f64)> = Vec::new();
    for (k, v) in &pairs {
        match k.as_str() {
            "discount" => discount = Some(parse_f64(v)?),
            "initial" => {
                for item in v.split(';').filter(|s| !s.is_empty()) {
                    let (s, p) = item
                        .split_once(':')
                        .context("initial entries must be state:probability")?;
                    initial_pairs.push((parse_usize(s)?, parse_f64(p)?));
                }
            }
            _ => bail!("unknown header key {k:?}"),
        }
    }
    let discount = discount.context("missing `# discount=` header")?;
    if initial_pairs.is_empty() {
        bail!("missing `# initial=` header");
    }

    let mut reader = csv::Reader::from_reader(body.as_bytes());
    let mut rows: Vec<(usize, usize, usize, f64, f64)> = Vec::new();
    let mut num_states = initial_pairs.iter().map(|&(s, _)| s + 1).max().unwrap();
    let mut num_actions = 1;
    for record in reader.records() {
        let record = record?;
        if record.len() != 5 {
            bail!("expected 5 columns, got {}", record.len());
        }
        let s = parse_usize(&record[0])?;
        let a = parse_usize(&record[1])?;
        let sp = parse_usize(&record[2])?;
        num_states = num_states.max(s + 1).max(sp + 1);
        num_actions = num_actions.max(a + 1);
        rows.push((s, a, sp, parse_f64(&record[3])?, parse_f64(&record[4])?));
    }

    let volume = num_states * num_actions * num_states;
    let mut probs = vec![0.0; volume];
    let mut rewards = vec![0.0; volume];
    let mut support = vec![false; volume];
    for (s, a, sp, p, r) in rows {
        let idx = (s * num_actions + a) * num_states + sp;
        probs[idx] = p;
        rewards[idx] = r;
        support[idx] = true;
    }
    let mut p0 = vec![0.0; num_states];
    for (s, p) in initial_pairs {
        p0[s] = p;
    }
    let mdp = TabularMdp::new(num_states, num_actions, rewards, discount, p0, support)?;
    let model = TransitionModel::new(num_states, num_actions, probs)?;
    model.validate_support(&mdp)?;
    Ok((mdp, model))
}

/// Emits one line per observed transition; repeated triples encode counts.
pub fn write_dataset_csv(path: &Path, dataset: &TransitionDataset) -> Result<()> {
    let mut out = String::from("idstatefrom,idaction,idstateto\n");
    for (s, a, sp) in dataset.triples() {
        writeln!(out, "{s},{a},{sp}")?;
    }
    fs::write(path, out).with_context(|| format!("writing {}", path.display()))
}

pub fn read_dataset_csv(
    path: &Path,
    num_states: usize,
    num_actions: usize,
) -> Result<TransitionDataset> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let mut dataset = TransitionDataset::new(num_states, num_actions);
    for record in reader.records() {
        let record = record?;
        if record.len() != 3 {
            bail!("expected 3 columns, got {}", record.len());
        }
        dataset.record(
            parse_usize(&record[0])?,
            parse_usize(&record[1])?,
            parse_usize(&record[2])?,
        )?;
    }
    Ok(dataset)
}

/// One long CSV holding every posterior sample, suitable for externally
/// generated (e.g. MCMC) posteriors too.
pub fn write_samples_csv(path: &Path, samples: &PosteriorSampleSet) -> Result<()> {
    let mut out = String::from("sample_id,idstatefrom,idaction,idstateto,probability\n");
    for (k, model) in samples.models().iter().enumerate() {
        for s in 0..model.num_states() {
            for a in 0..model.num_actions() {
                for (sp, &p) in model.row(s, a).iter().enumerate() {
                    if p > 0.0 {
                        writeln!(out, "{k},{s},{a},{sp},{}", fmt_f64(p))?;
                    }
                }
            }
        }
    }
    fs::write(path, out).with_context(|| format!("writing {}", path.display()))
}

pub fn read_samples_csv(
    path: &Path,
    num_states: usize,
    num_actions: usize,
) -> Result<PosteriorSampleSet> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let volume = num_states * num_actions * num_states;
    let mut raw: Vec<Vec<f64>> = Vec::new();
    for record in reader.records() {
        let record = record?;
        if record.len() != 5 {
            bail!("expected 5 columns, got {}", record.len());
        }
        let k = parse_usize(&record[0])?;
        let s = parse_usize(&record[1])?;
        let a = parse_usize(&record[2])?;
        let sp = parse_usize(&record[3])?;
        while raw.len() <= k {
            raw.push(vec![0.0; volume]);
        }
        raw[k][(s * num_actions + a) * num_states + sp] = parse_f64(&record[4])?;
    }
    let models = raw
        .into_iter()
        .map(|probs| TransitionModel::new(num_states, num_actions, probs))
        .collect::<rmdp_core::Result<Vec<_>>>()?;
    Ok(PosteriorSampleSet::from_models(models, 0)?)
}

fn kind_token(kind: NormKind) -> &'static str {
    match kind {
        NormKind::WeightedL1 => "l1",
        NormKind::WeightedLInf => "linf",
    }
}

fn parse_kind(token: &str) -> Result<NormKind> {
    match token {
        "l1" => Ok(NormKind::WeightedL1),
        "linf" => Ok(NormKind::WeightedLInf),
        other => bail!("unknown norm kind {other:?}"),
    }
}

/// Persists an ambiguity set: one row per (state, action, successor) with
/// the nominal probability, weight, and the ball budget repeated per row.
pub fn write_ambiguity_csv(path: &Path, amb: &AmbiguitySet) -> Result<()> {
    let mut out = String::new();
    writeln!(out, "# kind={}", kind_token(amb.kind()))?;
    writeln!(out, "idstatefrom,idaction,idstateto,nominal,weight,budget")?;
    for s in 0..amb.num_states() {
        for a in 0..amb.num_actions() {
            let ball = amb.ball(s, a);
            for sp in 0..amb.num_states() {
                writeln!(
                    out,
                    "{s},{a},{sp},{},{},{}",
                    fmt_f64(ball.nominal[sp]),
                    fmt_f64(ball.weights[sp]),
                    fmt_f64(ball.budget)
                )?;
            }
        }
    }
    fs::write(path, out).with_context(|| format!("writing {}", path.display()))
}

pub fn read_ambiguity_csv(path: &Path) -> Result<AmbiguitySet> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let (pairs, body) = split_preamble(&text);
    let kind = pairs
        .iter()
        .find(|(k, _)| k == "kind")
        .map(|(_, v)| parse_kind(v))
        .context("missing `# kind=` header")??;

    let mut reader = csv::Reader::from_reader(body.as_bytes());
    let mut rows: Vec<(usize, usize, usize, f64, f64, f64)> = Vec::new();
    let (mut num_states, mut num_actions) = (0, 0);
    for record in reader.records() {
        let record = record?;
        if record.len() != 6 {
            bail!("expected 6 columns, got {}", record.len());
        }
        let s = parse_usize(&record[0])?;
        let a = parse_usize(&record[1])?;
        let sp = parse_usize(&record[2])?;
        num_states = num_states.max(s + 1).max(sp + 1);
        num_actions = num_actions.max(a + 1);
        let weight = if record[4].trim() == "inf" {
            f64::INFINITY
        } else {
            parse_f64(&record[4])?
        };
        rows.push((s, a, sp, parse_f64(&record[3])?, weight, parse_f64(&record[5])?));
    }

    let mut nominal = vec![vec![0.0; num_states]; num_states * num_actions];
    let mut weights = vec![vec![f64::INFINITY; num_states]; num_states * num_actions];
    let mut budgets = vec![0.0; num_states * num_actions];
    for (s, a, sp, p, w, psi) in rows {
        let idx = s * num_actions + a;
        nominal[idx][sp] = p;
        weights[idx][sp] = w;
        budgets[idx] = psi;
    }
    let mut balls = Vec::with_capacity(num_states * num_actions);
    for idx in 0..num_states * num_actions {
        balls.push(BallSpec::new(
            kind,
            nominal[idx].clone(),
            weights[idx].clone(),
            budgets[idx],
        )?);
    }
    Ok(AmbiguitySet::new(kind, num_states, num_actions, balls)?)
}

const RESULT_HEADER: &str =
    "method,delta,robust_return,nominal_return,normalized_loss,wall_time_s,seed,discount";

pub fn write_results_csv(path: &Path, rows: &[ResultRow]) -> Result<()> {
    let mut out = String::from(RESULT_HEADER);
    out.push('\n');
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.method,
            fmt_f64(r.delta),
            fmt_f64(r.robust_return),
            fmt_f64(r.nominal_return),
            fmt_f64(r.normalized_loss),
            fmt_f64(r.wall_time_s),
            r.seed,
            fmt_f64(r.discount)
        )?;
    }
    fs::write(path, out).with_context(|| format!("writing {}", path.display()))
}

pub fn read_results_csv(path: &Path) -> Result<Vec<ResultRow>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record?;
        if record.len() != 8 {
            bail!("expected 8 columns, got {}", record.len());
        }
        rows.push(ResultRow {
            method: record[0].to_string(),
            delta: parse_f64(&record[1])?,
            robust_return: parse_f64(&record[2])?,
            nominal_return: parse_f64(&record[3])?,
            normalized_loss: parse_f64(&record[4])?,
            wall_time_s: parse_f64(&record[5])?,
            seed: record[6].trim().parse::<u64>()?,
            discount: parse_f64(&record[7])?,
        });
    }
    Ok(rows)
}

/// Aligned-text rendering of a result table.
pub fn format_results_table(rows: &[ResultRow]) -> String {
    let headers = [
        "method",
        "delta",
        "robust",
        "nominal",
        "loss",
        "time[s]",
        "seed",
        "gamma",
    ];
    let mut cells: Vec<[String; 8]> = Vec::with_capacity(rows.len());
    for r in rows {
        cells.push([
            r.method.clone(),
            format!("{:.4}", r.delta),
            format!("{:.6}", r.robust_return),
            format!("{:.6}", r.nominal_return),
            format!("{:.4}", r.normalized_loss),
            format!("{:.3}", r.wall_time_s),
            r.seed.to_string(),
            format!("{:.4}", r.discount),
        ]);
    }
    let mut widths: Vec<usize> = headers.iter().map(|h| h.len()).collect();
    for row in &cells {
        for (i, c) in row.iter().enumerate() {
            widths[i] = widths[i].max(c.len());
        }
    }
    let mut out = String::new();
    for (i, h) in headers.iter().enumerate() {
        let _ = write!(out, "{:>width$}  ", h, width = widths[i]);
    }
    out.push('\n');
    for row in &cells {
        for (i, c) in row.iter().enumerate() {
            let _ = write!(out, "{:>width$}  ", c, width = widths[i]);
        }
        out.push('\n');
    }
    out
}
