use std::path::{Path, PathBuf};
use std::time::Instant;

use ccl_core::continual::{resume_sequence, RunState};
use ccl_core::data::TaskSplit;
use ccl_core::trainer::Checkpoint;
use serde_json::json;

use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};
use crate::output::{ensure_dir, read_json, write_csv, write_json, write_manifest};

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Runs the whole sequence without touching the filesystem.
pub fn run_in_memory(cfg: &ExperimentConfig, tasks: &[TaskSplit]) -> CliResult<RunState> {
    let state = RunState::fresh(&cfg.run).map_err(|e| CliError::core(e, "initial state"))?;
    resume_sequence(state, tasks, &cfg.run, &mut |_| Ok(None)).map_err(|e| CliError::core(e, "training"))
}

fn write_outputs(out: &Path, state: &RunState) -> CliResult<()> {
    write_json(&out.join("trace.json"), &state.trace)?;
    let rows: Vec<Vec<String>> = state
        .trace
        .epochs
        .iter()
        .map(|r| {
            vec![
                r.task.to_string(),
                r.epoch.to_string(),
                r.l_con.to_string(),
                opt(r.l_dis),
                opt(r.lambda),
            ]
        })
        .collect();
    write_csv(&out.join("epochs.csv"), &["task", "epoch", "l_con", "l_dis", "lambda"], &rows)
}

pub fn run(cfg: &ExperimentConfig, out: &Path, resume: Option<PathBuf>) -> CliResult<()> {
    let start = Instant::now();
    let tasks = cfg.scenario.tasks(cfg.seed)?;
    let state = match &resume {
        None => RunState::fresh(&cfg.run).map_err(|e| CliError::core(e, "initial state"))?,
        Some(p) => {
            let s: RunState = read_json(p)?;
            if s.trace.seed != cfg.seed {
                return Err(CliError::config(format!(
                    "{} was produced with seed {}, config has {}",
                    p.display(),
                    s.trace.seed,
                    cfg.seed
                )));
            }
            s
        }
    };
    ensure_dir(&out.join("checkpoints"))?;
    ensure_dir(&out.join("state"))?;
    write_manifest(
        out,
        "train",
        cfg,
        json!({ "resume": resume, "tasks": tasks.len() }),
    )?;

    let mut save = |s: &RunState| -> ccl_core::Result<Option<String>> {
        let rec = s.trace.tasks.last().expect("a task just finished");
        let name = format!("checkpoints/task{}.ckpt", rec.task);
        Checkpoint {
            encoder: s.encoder.clone().expect("trained encoder"),
            seed: cfg.seed,
            task: rec.task,
            lambda_t: rec.lambda,
            temperatures: cfg.run.temperatures,
        }
        .save(&out.join(&name))?;
        // The sequence records the reference only after this callback
        // returns, so the saved state gets it here.
        let mut saved = s.clone();
        saved.trace.tasks.last_mut().expect("a task just finished").checkpoint = Some(name.clone());
        let state_path = out.join(format!("state/task{}.json", rec.task));
        let text = serde_json::to_string(&saved).expect("state serializes");
        std::fs::write(state_path, text)?;
        Ok(Some(name))
    };
    let done = state.completed;
    let state = resume_sequence(state, &tasks, &cfg.run, &mut save).map_err(|e| {
        let ctx = format!("training from task {}", done + 1);
        CliError::core(e, ctx)
    })?;
    write_outputs(out, &state)?;

    let probe = state.trace.probe.as_ref().expect("probe runs after the last task");
    let lambdas: Vec<String> = state.trace.tasks.iter().map(|r| opt(r.lambda)).collect();
    println!(
        "trained {} tasks in {:.1}s; average probe accuracy {:.2}%; lambda per task [{}]",
        state.completed,
        start.elapsed().as_secs_f64(),
        100.0 * probe.average,
        lambdas.join(", ")
    );
    if let Some(b) = &state.trace.bounds {
        println!(
            "bounds: lower {:.4} realized {} upper {:.4}",
            b.lower,
            opt(b.realized_test_loss),
            b.upper
        );
        if b.sandwich_holds(1e-9) == Some(false) {
            return Err(CliError::Violation("realized test loss outside the bounds".into()));
        }
    }
    Ok(())
}
