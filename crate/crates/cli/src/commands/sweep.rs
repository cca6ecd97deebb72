use std::path::Path;

use ccl_core::continual::LambdaMode;
use rayon::prelude::*;
use serde_json::json;

use super::train::run_in_memory;
use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};
use crate::output::{ensure_dir, write_csv, write_manifest};

/// One `--vary key=v1,v2,…` axis.
#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub key: String,
    pub values: Vec<String>,
}

const KEYS: [&str; 4] = ["lambda0", "kappa", "mode", "seed"];

pub fn parse_axes(specs: &[String]) -> CliResult<Vec<Axis>> {
    let mut axes: Vec<Axis> = Vec::new();
    for spec in specs {
        let (key, values) = spec
            .split_once('=')
            .ok_or_else(|| CliError::config(format!("--vary `{spec}` is not key=v1,v2,…")))?;
        let key = key.trim();
        if !KEYS.contains(&key) {
            return Err(CliError::config(format!("cannot vary `{key}`; choose from {KEYS:?}")));
        }
        if axes.iter().any(|a| a.key == key) {
            return Err(CliError::config(format!("`{key}` is varied twice")));
        }
        let values: Vec<String> = values.split(',').map(|v| v.trim().to_string()).filter(|v| !v.is_empty()).collect();
        if values.is_empty() {
            return Err(CliError::config(format!("`{key}` has no values")));
        }
        axes.push(Axis {
            key: key.to_string(),
            values,
        });
    }
    Ok(axes)
}

fn apply(cfg: &mut ExperimentConfig, key: &str, value: &str) -> CliResult<()> {
    let bad = || CliError::config(format!("`{value}` is not a valid {key}"));
    match key {
        "lambda0" => cfg.run.schedule.lambda0 = value.parse().map_err(|_| bad())?,
        "kappa" => cfg.run.schedule.kappa = value.parse().map_err(|_| bad())?,
        "mode" => cfg.run.schedule.mode = serde_json::from_value::<LambdaMode>(json!(value)).map_err(|_| bad())?,
        "seed" => {
            cfg.seed = value.parse().map_err(|_| bad())?;
            cfg.run.seed = cfg.seed;
        }
        _ => unreachable!("axes are checked on parse"),
    }
    Ok(())
}

/// Every combination of the non-seed axes, in axis order.
fn cells(axes: &[&Axis]) -> Vec<Vec<String>> {
    axes.iter().fold(vec![Vec::new()], |acc, a| {
        acc.iter()
            .flat_map(|prefix| {
                a.values.iter().map(move |v| {
                    let mut c = prefix.clone();
                    c.push(v.clone());
                    c
                })
            })
            .collect()
    })
}

struct Job {
    cell: usize,
    cfg: ExperimentConfig,
}

struct Outcome {
    accuracy: Option<f64>,
    final_lambda: Option<f64>,
    error: Option<CliError>,
}

fn run_job(job: &Job) -> Outcome {
    let result = job
        .cfg
        .scenario
        .tasks(job.cfg.seed)
        .and_then(|tasks| run_in_memory(&job.cfg, &tasks));
    match result {
        Ok(state) => Outcome {
            accuracy: state.trace.probe.as_ref().map(|p| 100.0 * p.average),
            final_lambda: state.trace.tasks.last().and_then(|r| r.lambda),
            error: None,
        },
        Err(e) => Outcome {
            accuracy: None,
            final_lambda: None,
            error: Some(e),
        },
    }
}

/// Sample mean and standard deviation (zero for a single value).
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

pub fn run(cfg: &ExperimentConfig, out: &Path, vary: &[String], threads: usize) -> CliResult<()> {
    let axes = parse_axes(vary)?;
    let grid_axes: Vec<&Axis> = axes.iter().filter(|a| a.key != "seed").collect();
    let seeds: Vec<String> = axes
        .iter()
        .find(|a| a.key == "seed")
        .map(|a| a.values.clone())
        .unwrap_or_else(|| vec![cfg.seed.to_string()]);
    let cell_values = cells(&grid_axes);

    let mut jobs = Vec::new();
    for (c, values) in cell_values.iter().enumerate() {
        for seed in &seeds {
            let mut job_cfg = cfg.clone();
            for (a, v) in grid_axes.iter().zip(values) {
                apply(&mut job_cfg, &a.key, v)?;
            }
            apply(&mut job_cfg, "seed", seed)?;
            job_cfg.validate()?;
            jobs.push(Job { cell: c, cfg: job_cfg });
        }
    }
    ensure_dir(out)?;
    write_manifest(
        out,
        "sweep",
        cfg,
        json!({ "vary": vary, "threads": threads, "runs": jobs.len() }),
    )?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::config(format!("worker pool: {e}")))?;
    let outcomes: Vec<Outcome> = pool.install(|| jobs.par_iter().map(run_job).collect());

    let keys: Vec<&str> = grid_axes.iter().map(|a| a.key.as_str()).collect();
    let mut run_rows = Vec::new();
    for (job, o) in jobs.iter().zip(&outcomes) {
        let mut row = cell_values[job.cell].clone();
        row.push(job.cfg.seed.to_string());
        row.push(o.accuracy.map(|a| format!("{a:.2}")).unwrap_or_default());
        row.push(o.final_lambda.map(|l| l.to_string()).unwrap_or_default());
        row.push(o.error.as_ref().map(|e| e.to_string()).unwrap_or_default());
        run_rows.push(row);
    }
    let mut header: Vec<&str> = keys.clone();
    header.extend(["seed", "accuracy", "final_lambda", "error"]);
    write_csv(&out.join("runs.csv"), &header, &run_rows)?;

    let mut cell_rows = Vec::new();
    for (c, values) in cell_values.iter().enumerate() {
        let mine: Vec<&Outcome> = jobs.iter().zip(&outcomes).filter(|(j, _)| j.cell == c).map(|(_, o)| o).collect();
        let acc: Vec<f64> = mine.iter().filter_map(|o| o.accuracy).collect();
        let failures = mine.len() - acc.len();
        let mut row = values.clone();
        row.push(mine.len().to_string());
        row.push(failures.to_string());
        if acc.is_empty() {
            row.extend([String::new(), String::new(), String::new()]);
        } else {
            let (m, s) = mean_std(&acc);
            row.extend([format!("{m:.2}"), format!("{s:.2}"), format!("{m:.2} ± {s:.2}")]);
        }
        println!("{}", row.join("  "));
        cell_rows.push(row);
    }
    let mut header: Vec<&str> = keys;
    header.extend(["runs", "failures", "mean_accuracy", "std_accuracy", "accuracy"]);
    write_csv(&out.join("sweep.csv"), &header, &cell_rows)?;

    match outcomes.into_iter().filter_map(|o| o.error).max_by_key(|e| e.code()) {
        None => Ok(()),
        Some(e) => Err(e),
    }
}
