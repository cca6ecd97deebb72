use std::path::Path;

use ccl_core::bounds::{constants, lemma1_slack_with, BoundConstants};
use ccl_core::domain::{TableModel, TaskDistribution};
use ccl_core::losses::decomposition_residual;
use ccl_core::rng::{stream_rng, Stream};
use ccl_core::trainer::{finite_diff_check, Batch, Encoder, EncoderConfig, Objective};
use rand::Rng;
use serde::Serialize;
use serde_json::json;

use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};
use crate::output::{ensure_dir, write_json, write_manifest};

const E2: f64 = std::f64::consts::E * std::f64::consts::E;

/// One checked property and the worst value seen. `worst` is a slack
/// (must stay above `-tolerance`) for the sandwich rows and an error
/// (must stay below `tolerance`) otherwise.
#[derive(Debug, Clone, Serialize)]
pub struct PropertyRow {
    pub name: String,
    pub k: Option<usize>,
    pub trials: usize,
    pub worst: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub passed: bool,
    pub failing: Vec<String>,
    pub properties: Vec<PropertyRow>,
}

fn error_row(name: &str, k: Option<usize>, trials: usize, worst: f64, tolerance: f64) -> PropertyRow {
    PropertyRow {
        name: name.into(),
        k,
        trials,
        worst,
        tolerance,
        passed: worst <= tolerance,
    }
}

fn slack_row(name: &str, k: usize, trials: usize, worst: f64, tolerance: f64) -> PropertyRow {
    PropertyRow {
        name: name.into(),
        k: Some(k),
        trials,
        worst,
        tolerance,
        passed: worst >= -tolerance,
    }
}

fn random_dist<R: Rng>(rng: &mut R, max_points: usize) -> CliResult<TaskDistribution> {
    let n = rng.random_range(2..=max_points);
    let points: Vec<Vec<f64>> = (0..n).map(|i| vec![i as f64]).collect();
    let labels: Vec<usize> = (0..n).map(|i| if i < 2 { i } else { rng.random_range(0..2) }).collect();
    let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..1.0)).collect();
    let total: f64 = raw.iter().sum();
    TaskDistribution::new(1, points, labels, raw.iter().map(|m| m / total).collect())
        .map_err(|e| CliError::core(e, "random distribution"))
}

fn random_tables<R: Rng>(rng: &mut R, dist: &TaskDistribution) -> CliResult<(TableModel, TableModel)> {
    let dim = rng.random_range(2..=4);
    let a = TableModel::random(dist.points(), dim, rng).map_err(|e| CliError::core(e, "random model"))?;
    let b = TableModel::random(dist.points(), dim, rng).map_err(|e| CliError::core(e, "random model"))?;
    Ok((a, b))
}

fn constant_rows(c: &BoundConstants) -> Vec<PropertyRow> {
    let k = c.k;
    let alpha = 2.0 * E2 / (k as f64 + E2);
    let beta = 2.0 - alpha + alpha * (alpha / 2.0).ln();
    let ke2 = k as f64 * E2;
    let beta_prime = -alpha * (1.0 + ke2).ln() - 2.0 * ke2 / (1.0 + ke2);
    let mut accum_err = 0.0f64;
    for t in 2..=10usize {
        let direct: f64 = (2..=t).map(|s| (s - 1) as f64 * c.alpha.powi((t - s) as i32)).sum();
        accum_err = accum_err.max((c.accumulation(t) - direct).abs() / direct.abs().max(1.0));
    }
    let signs_ok = c.alpha > 1.0 && c.beta > 0.0 && c.beta_prime < 0.0;
    let mut rows = vec![
        error_row("alpha_closed_form", Some(k), 1, (c.alpha - alpha).abs(), 1e-12),
        error_row("beta_closed_form", Some(k), 1, (c.beta - beta).abs(), 1e-12),
        error_row("beta_prime_closed_form", Some(k), 1, (c.beta_prime - beta_prime).abs(), 1e-12),
        error_row("accumulation_sum", Some(k), 9, accum_err, 1e-9),
        error_row("constant_signs", Some(k), 1, if signs_ok { 0.0 } else { 1.0 }, 0.0),
    ];
    if k == 1 {
        rows.push(error_row(
            "single_negative_beta_prime",
            Some(1),
            1,
            (c.beta_prime_single_negative() - c.beta_prime).abs(),
            1e-12,
        ));
    }
    rows
}

pub fn verify_suite(cfg: &ExperimentConfig) -> CliResult<VerifyReport> {
    let v = &cfg.verify;
    let mut rows = Vec::new();
    for &k in &v.ks {
        let exact = constants(k).map_err(|e| CliError::core(e, "constants"))?;
        let used = BoundConstants::from_alpha(k, exact.alpha + v.alpha_offset);
        rows.extend(constant_rows(&used));

        let mut rng = stream_rng(cfg.seed, Stream::Trials, k as u64);
        let (mut upper, mut lower) = (f64::INFINITY, f64::INFINITY);
        for _ in 0..v.lemma_trials {
            let dist = random_dist(&mut rng, v.max_points)?;
            let (cur, prev) = random_tables(&mut rng, &dist)?;
            let s = lemma1_slack_with(&used, &cur, &prev, &dist).map_err(|e| CliError::core(e, "sandwich trial"))?;
            upper = upper.min(s.upper);
            lower = lower.min(s.lower);
        }
        rows.push(slack_row("sandwich_upper_slack", k, v.lemma_trials, upper, 1e-10));
        rows.push(slack_row("sandwich_lower_slack", k, v.lemma_trials, lower, 1e-10));

        let mut rng = stream_rng(cfg.seed, Stream::Trials, 1000 + k as u64);
        let mut residual = 0.0f64;
        for _ in 0..v.residual_trials {
            let dist = random_dist(&mut rng, v.max_points)?;
            let (cur, prev) = random_tables(&mut rng, &dist)?;
            let r = decomposition_residual(&cur, &prev, &dist, k).map_err(|e| CliError::core(e, "residual trial"))?;
            residual = residual.max(r.abs());
        }
        rows.push(error_row("decomposition_residual", Some(k), v.residual_trials, residual, 1e-10));
    }

    let mut grad_err = 0.0f64;
    let enc_cfg = EncoderConfig {
        hidden: vec![6],
        output_dim: 4,
        ..EncoderConfig::default()
    };
    for s in 0..v.gradient_seeds as u64 {
        let seed = cfg.seed.wrapping_add(s);
        let mut rng = stream_rng(seed, Stream::Trials, 2000);
        let enc = Encoder::init(3, &enc_cfg, seed).map_err(|e| CliError::core(e, "gradient check"))?;
        let prev = Encoder::init(3, &enc_cfg, seed ^ 0x5eed).map_err(|e| CliError::core(e, "gradient check"))?;
        let views: Vec<Vec<f64>> = (0..8).map(|_| (0..3).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let labels = [0, 0, 1, 1, 0, 0, 2, 2];
        let obj = Objective {
            prev: Some(&prev),
            lambda: rng.random_range(0.1..2.0),
            temperatures: cfg.run.temperatures,
            divide_by_views: true,
        };
        let batch = Batch {
            views: &views,
            labels: &labels,
        };
        let err = finite_diff_check(&enc, batch, &obj, 1e-6).map_err(|e| CliError::core(e, "gradient check"))?;
        grad_err = grad_err.max(err);
    }
    rows.push(error_row("gradient_relative_error", None, v.gradient_seeds, grad_err, 1e-4));

    let failing: Vec<String> = rows
        .iter()
        .filter(|r| !r.passed)
        .map(|r| match r.k {
            Some(k) => format!("{} (k={k})", r.name),
            None => r.name.clone(),
        })
        .collect();
    Ok(VerifyReport {
        passed: failing.is_empty(),
        failing,
        properties: rows,
    })
}

pub fn run(cfg: &ExperimentConfig, out: &Path) -> CliResult<()> {
    ensure_dir(out)?;
    write_manifest(out, "verify", cfg, json!({}))?;
    let report = verify_suite(cfg)?;
    write_json(&out.join("verify_report.json"), &report)?;
    println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
    if report.passed {
        Ok(())
    } else {
        Err(CliError::Violation(report.failing.join(", ")))
    }
}
