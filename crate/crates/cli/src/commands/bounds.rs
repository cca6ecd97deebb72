use std::path::{Path, PathBuf};

use ccl_core::bounds::{bound_curve, sweep_turning_point, turning_point, BoundInput, CurvePoint, LambdaSpec};
use ccl_core::continual::ExperimentTrace;
use ccl_core::domain::MixtureWeights;
use serde::Serialize;
use serde_json::json;

use crate::config::{parse_grid, ExperimentConfig, Scenario};
use crate::error::{CliError, CliResult};
use crate::output::{ensure_dir, read_json, write_csv, write_json, write_manifest};

#[derive(Debug, Serialize)]
struct BoundsSummary {
    source: String,
    k: usize,
    turning_point: f64,
    /// First grid point from which the upper bound stays constant.
    swept_turning_point: Option<f64>,
    non_increasing: bool,
    flat_beyond_turning_point: bool,
    skipped_lambdas: Vec<f64>,
    points: usize,
}

fn input_from_trace(path: &Path) -> CliResult<BoundInput> {
    let trace: ExperimentTrace = read_json(path)?;
    let report = trace.bounds.ok_or_else(|| {
        CliError::config(format!(
            "{} has no bound report; train with `run.bounds` set",
            path.display()
        ))
    })?;
    let weights = report
        .weights
        .iter()
        .enumerate()
        .map(|(i, w)| MixtureWeights::new(i + 2, w.clone()))
        .collect::<ccl_core::Result<Vec<_>>>()
        .map_err(|e| CliError::core(e, "trace weights"))?;
    Ok(BoundInput {
        k: report.constants.k,
        train_losses: report.train_losses,
        weights,
        lambdas: LambdaSpec::Fixed(1.0),
        min_con: Some(report.min_con),
        surrogate: report.surrogate,
    })
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
}

pub fn run(cfg: &ExperimentConfig, out: &Path, trace: Option<PathBuf>) -> CliResult<()> {
    let (input, source, is_example) = match (&trace, &cfg.scenario) {
        (Some(p), _) => (input_from_trace(p)?, p.display().to_string(), false),
        (None, Scenario::Example(spec)) => (
            spec.bound_input(cfg.k, LambdaSpec::Fixed(1.0))
                .map_err(|e| CliError::core(e, "example scenario"))?,
            "example scenario".to_string(),
            true,
        ),
        (None, _) => {
            return Err(CliError::config(
                "bounds needs an example scenario or --trace with a bound report",
            ))
        }
    };
    let star = turning_point(&input.weights).map_err(|e| CliError::core(e, "turning point"))?;
    let grid = match &cfg.grid {
        Some(g) => parse_grid(g)?,
        None => parse_grid(&format!("0:{}:201", (2.0 * star).max(1.0)))?,
    };
    ensure_dir(out)?;
    write_manifest(out, "bounds", cfg, json!({ "trace": trace, "grid_points": grid.len() }))?;

    let (curve, skipped) = bound_curve(&input, &grid).map_err(|e| CliError::core(e, "bound curve"))?;
    for l in &skipped {
        eprintln!("warning: skipped λ = {l}: a γ_t is zero there");
    }
    let non_increasing = curve.windows(2).all(|w| w[1].upper <= w[0].upper || close(w[1].upper, w[0].upper));
    let tail: Vec<&CurvePoint> = curve.iter().filter(|p| p.lambda >= star).collect();
    let flat = tail.windows(2).all(|w| close(w[0].upper, w[1].upper));
    let rows: Vec<Vec<String>> = curve
        .iter()
        .map(|p| vec![p.lambda.to_string(), p.upper.to_string(), p.lower.to_string()])
        .collect();
    write_csv(&out.join("bounds.csv"), &["lambda", "upper", "lower"], &rows)?;
    let summary = BoundsSummary {
        source,
        k: input.k,
        turning_point: star,
        swept_turning_point: sweep_turning_point(&curve, 1e-12),
        non_increasing,
        flat_beyond_turning_point: flat,
        skipped_lambdas: skipped,
        points: curve.len(),
    };
    write_json(&out.join("bounds_report.json"), &summary)?;
    println!("{}", serde_json::to_string_pretty(&summary).expect("summary serializes"));
    if is_example && !(non_increasing && flat) {
        return Err(CliError::Violation("upper bound is not non-increasing and flat beyond λ*".into()));
    }
    Ok(())
}
