use std::path::Path;

use ccl_core::continual::linear_probe;
use ccl_core::domain::EmbeddingModel;
use ccl_core::trainer::Checkpoint;
use serde_json::json;

use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};
use crate::output::{ensure_dir, write_csv, write_json, write_manifest};

/// Probes a checkpoint on the tasks it has seen. The classifier trains on
/// every seen task's training split, or on the last one only with
/// `last_task_only`.
pub fn run(cfg: &ExperimentConfig, out: &Path, checkpoint: &Path, last_task_only: bool) -> CliResult<()> {
    let ck = Checkpoint::load(checkpoint).map_err(|e| CliError::core(e, format!("loading {}", checkpoint.display())))?;
    let tasks = cfg.scenario.tasks(cfg.seed)?;
    if ck.task == 0 || ck.task > tasks.len() {
        return Err(CliError::config(format!(
            "checkpoint is for task {} but the scenario has {} tasks",
            ck.task,
            tasks.len()
        )));
    }
    if ck.encoder.input_dim() != tasks[0].train.dimension() {
        return Err(CliError::config(format!(
            "checkpoint expects {}-dimensional inputs, data has {}",
            ck.encoder.input_dim(),
            tasks[0].train.dimension()
        )));
    }
    ensure_dir(out)?;
    write_manifest(
        out,
        "probe",
        cfg,
        json!({ "checkpoint": checkpoint, "last_task_only": last_task_only }),
    )?;

    let seen = &tasks[..ck.task];
    let fit = if last_task_only { &seen[seen.len() - 1..] } else { seen };
    let points: Vec<Vec<f64>> = fit.iter().flat_map(|s| s.train.points().to_vec()).collect();
    let labels: Vec<usize> = fit.iter().flat_map(|s| s.train.labels().to_vec()).collect();
    let mut classes: Vec<usize> = seen.iter().flat_map(|s| s.classes().to_vec()).collect();
    classes.sort_unstable();
    classes.dedup();
    let tests: Vec<_> = seen.iter().map(|s| s.test.clone()).collect();
    let report = linear_probe(&ck.encoder, &points, &labels, &tests, &classes, &cfg.run.probe, cfg.seed)
        .map_err(|e| CliError::core(e, "probe"))?;
    if !report.untrainable_classes.is_empty() {
        eprintln!(
            "warning: classes {:?} have no training samples and cannot be predicted",
            report.untrainable_classes
        );
    }

    write_json(&out.join("probe.json"), &report)?;
    let mut rows: Vec<Vec<String>> = report
        .per_task
        .iter()
        .enumerate()
        .map(|(t, a)| vec![(t + 1).to_string(), format!("{:.2}", 100.0 * a)])
        .collect();
    rows.push(vec!["average".into(), format!("{:.2}", 100.0 * report.average)]);
    write_csv(&out.join("probe.csv"), &["task", "accuracy"], &rows)?;
    for r in &rows {
        println!("{:>8}  {}", r[0], r[1]);
    }
    Ok(())
}
