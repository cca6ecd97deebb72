use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::augment::Augmentation;
use super::buffer::{ReplayBuffer, Sample};
use super::probe::{linear_probe, ProbeConfig, ProbeReport};
use super::schedule::{LambdaMode, LambdaSchedule, ScheduleConfig};
use crate::bounds::{compute_u, sequence_report, BoundReport, LambdaSpec, SequenceInput, SurrogateConfig, SurrogateMode};
use crate::data::TaskSplit;
use crate::domain::{EmbeddingModel, MixtureWeights, TableModel};
use crate::losses::Temperatures;
use crate::rng::{stream_rng, Stream};
use crate::trainer::{grad_total, sgd_step, Batch, Encoder, EncoderConfig, Objective, Sgd, SgdConfig};
use crate::{Error, Result};

/// Exact bound evaluation after the last task.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsConfig {
    /// Negatives in the population losses.
    pub k: usize,
    #[serde(default)]
    pub surrogate: SurrogateMode,
}

/// Everything that determines a run besides the data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub encoder: EncoderConfig,
    #[serde(default)]
    pub sgd: SgdConfig,
    #[serde(default)]
    pub temperatures: Temperatures,
    #[serde(default)]
    pub schedule: ScheduleConfig,
    #[serde(default = "default_buffer")]
    pub buffer_size: usize,
    #[serde(default)]
    pub augmentation: Augmentation,
    #[serde(default)]
    pub probe: ProbeConfig,
    #[serde(default)]
    pub bounds: Option<BoundsConfig>,
    #[serde(default)]
    pub seed: u64,
}

fn default_buffer() -> usize {
    50
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            encoder: EncoderConfig::default(),
            sgd: SgdConfig::default(),
            temperatures: Temperatures::default(),
            schedule: ScheduleConfig::default(),
            buffer_size: default_buffer(),
            augmentation: Augmentation::default(),
            probe: ProbeConfig::default(),
            bounds: None,
            seed: 0,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.sgd.validate()?;
        self.schedule.validate()?;
        let t = &self.temperatures;
        if !(t.contrastive > 0.0 && t.current > 0.0 && t.past > 0.0) {
            return Err(Error::InvalidArgument("temperatures must be positive".into()));
        }
        if self.encoder.output_dim < 2 || self.encoder.hidden.contains(&0) {
            return Err(Error::InvalidArgument("encoder widths must be positive and the output at least 2".into()));
        }
        if let Some(b) = self.bounds {
            if b.k == 0 {
                return Err(Error::InvalidArgument("bound evaluation needs k ≥ 1".into()));
            }
        }
        Ok(())
    }
}

/// One row of the per-epoch log.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRow {
    pub task: usize,
    pub epoch: usize,
    pub l_con: f64,
    pub l_dis: Option<f64>,
    pub lambda: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskRecord {
    pub task: usize,
    pub train_size: usize,
    /// Final-epoch mean of the summed batch SupCon loss.
    pub l_con: f64,
    /// Final-epoch mean of the summed batch IRD loss; absent on task 1.
    pub l_dis: Option<f64>,
    pub lambda: Option<f64>,
    /// Threshold-scheduler quantity `U_t` (threshold mode only).
    pub u: Option<f64>,
    /// Estimated seen-task weights from the buffer at the start of the task.
    pub seen_weights: Option<Vec<f64>>,
    /// Buffer samples per source task after the task.
    pub buffer_composition: BTreeMap<usize, usize>,
    pub checkpoint: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentTrace {
    pub seed: u64,
    pub tasks: Vec<TaskRecord>,
    pub epochs: Vec<EpochRow>,
    pub probe: Option<ProbeReport>,
    pub bounds: Option<BoundReport>,
}

/// Everything carried across task boundaries; enough to resume a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunState {
    /// Tasks completed so far.
    pub completed: usize,
    pub encoder: Option<Encoder>,
    /// Frozen model after each completed task.
    pub snapshots: Vec<Encoder>,
    pub buffer: ReplayBuffer,
    pub schedule: LambdaSchedule,
    pub trace: ExperimentTrace,
}

impl RunState {
    pub fn fresh(cfg: &RunConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(RunState {
            completed: 0,
            encoder: None,
            snapshots: Vec::new(),
            buffer: ReplayBuffer::new(cfg.buffer_size),
            schedule: LambdaSchedule::new(cfg.schedule)?,
            trace: ExperimentTrace {
                seed: cfg.seed,
                tasks: Vec::new(),
                epochs: Vec::new(),
                probe: None,
                bounds: None,
            },
        })
    }
}

fn task_samples(split: &TaskSplit, task: usize) -> Vec<Sample> {
    split
        .train
        .points()
        .iter()
        .zip(split.train.labels())
        .map(|(p, &label)| Sample {
            point: p.clone(),
            label,
            task,
        })
        .collect()
}

/// Buffer shares of tasks `1..t`, add-one smoothed so every weight is
/// positive.
fn buffer_weights(buffer: &ReplayBuffer, task: usize) -> Result<MixtureWeights> {
    let comp = buffer.composition();
    let total = buffer.len() as f64 + (task - 1) as f64;
    let w = (1..task)
        .map(|j| (*comp.get(&j).unwrap_or(&0) as f64 + 1.0) / total)
        .collect();
    MixtureWeights::new(task, w)
}

/// Trains on task `state.completed + 1` and folds the results into `state`.
pub fn run_task(state: &mut RunState, split: &TaskSplit, cfg: &RunConfig) -> Result<()> {
    let task = state.completed + 1;
    if split.train.is_empty() {
        return Err(Error::EmptyTask { task });
    }
    let t64 = task as u64;
    let prev = state.encoder.clone();
    let mut enc = match &prev {
        Some(e) => {
            if e.input_dim() != split.train.dimension() {
                return Err(Error::DimensionMismatch {
                    expected: e.input_dim(),
                    found: split.train.dimension(),
                });
            }
            e.clone()
        }
        None => Encoder::init(split.train.dimension(), &cfg.encoder, cfg.seed)?,
    };
    let lambda = if task >= 2 {
        Some(state.schedule.adaptive_lambda(task)?)
    } else {
        None
    };
    let seen_weights = if task >= 2 {
        Some(buffer_weights(&state.buffer, task)?)
    } else {
        None
    };

    // D = D_t ∪ M
    let mut data = task_samples(split, task);
    data.extend(state.buffer.items().iter().cloned());

    let objective = Objective {
        prev: prev.as_ref(),
        lambda: lambda.unwrap_or(0.0),
        temperatures: cfg.temperatures,
        divide_by_views: cfg.sgd.divide_by_views,
    };
    let mut opt = Sgd::new(&cfg.sgd, enc.params().len())?;
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut batch_rng = stream_rng(cfg.seed, Stream::Batching, t64);
    let mut aug_rng = stream_rng(cfg.seed, Stream::Augment, t64);
    let mut last = (0.0, None);
    for epoch in 0..cfg.sgd.epochs {
        order.shuffle(&mut batch_rng);
        let (mut con, mut dis, mut batches) = (0.0, 0.0, 0usize);
        for chunk in order.chunks(cfg.sgd.batch_size) {
            let mut views = Vec::with_capacity(2 * chunk.len());
            let mut labels = Vec::with_capacity(2 * chunk.len());
            for &i in chunk {
                for _ in 0..2 {
                    views.push(cfg.augmentation.apply(&data[i].point, &mut aug_rng));
                    labels.push(data[i].label);
                }
            }
            let (loss, grad) = grad_total(&enc, Batch { views: &views, labels: &labels }, &objective)?;
            sgd_step(&mut enc, &grad, &mut opt).map_err(|e| match e {
                Error::NonFiniteGradient { index } => Error::InvalidArgument(format!(
                    "task {task}, epoch {epoch}: gradient component {index} is not finite"
                )),
                e => e,
            })?;
            con += loss.contrastive;
            dis += loss.distillation.unwrap_or(0.0);
            batches += 1;
        }
        let n = batches as f64;
        let row = EpochRow {
            task,
            epoch: epoch + 1,
            l_con: con / n,
            l_dis: prev.as_ref().map(|_| dis / n),
            lambda,
        };
        state.trace.epochs.push(row);
        last = (row.l_con, row.l_dis);
    }

    // Buffer update from the D_t stream.
    let mut stream = task_samples(split, task);
    let mut buf_rng = stream_rng(cfg.seed, Stream::Buffer, t64);
    stream.shuffle(&mut buf_rng);
    for s in stream {
        state.buffer.offer(s, &mut buf_rng);
    }

    let (l_con, l_dis) = last;
    if let Some(d) = l_dis {
        state.schedule.record(task, l_con, d)?;
    }
    let mut u = None;
    if task >= 2 && cfg.schedule.mode == LambdaMode::Theorem2 {
        let mut losses: Vec<f64> = state.trace.tasks.iter().map(|r| r.u_proxy()).collect();
        losses.push(l_con + lambda.unwrap_or(0.0) * l_dis.unwrap_or(0.0));
        let mut weights: Vec<MixtureWeights> = state
            .trace
            .tasks
            .iter()
            .filter_map(|r| r.seen_weights.as_ref())
            .enumerate()
            .map(|(i, w)| MixtureWeights::new(i + 2, w.clone()))
            .collect::<Result<_>>()?;
        weights.push(seen_weights.clone().expect("task ≥ 2"));
        let value = compute_u(&losses, task, lambda.expect("task ≥ 2"), &weights, 1)?;
        state.schedule.observe_u(task, value);
        u = Some(value);
    }

    state.trace.tasks.push(TaskRecord {
        task,
        train_size: split.train.len(),
        l_con,
        l_dis,
        lambda,
        u,
        seen_weights: seen_weights.map(|w| w.weights().to_vec()),
        buffer_composition: state.buffer.composition(),
        checkpoint: None,
    });
    state.snapshots.push(enc.clone());
    state.encoder = Some(enc);
    state.completed = task;
    Ok(())
}

impl TaskRecord {
    /// Final-epoch `L̂_con + λ L̂_dis`, the threshold scheduler's stand-in
    /// for `L_train`.
    fn u_proxy(&self) -> f64 {
        self.l_con + self.lambda.unwrap_or(0.0) * self.l_dis.unwrap_or(0.0)
    }
}

/// Seen-task weights proportional to training-set sizes.
fn size_weights(tasks: &[TaskSplit], task: usize) -> Result<MixtureWeights> {
    let sizes: Vec<f64> = tasks[..task - 1].iter().map(|s| s.train.len() as f64).collect();
    let total: f64 = sizes.iter().sum();
    MixtureWeights::new(task, sizes.iter().map(|s| s / total).collect())
}

/// Probe on the last task plus the buffer, scored on every task's test split.
pub fn final_probe(state: &RunState, tasks: &[TaskSplit], cfg: &RunConfig) -> Result<ProbeReport> {
    let enc = state
        .encoder
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("no trained encoder to probe".into()))?;
    let last = &tasks[state.completed - 1];
    let mut points = last.train.points().to_vec();
    let mut labels = last.train.labels().to_vec();
    for s in state.buffer.items() {
        points.push(s.point.clone());
        labels.push(s.label);
    }
    let mut classes: Vec<usize> = tasks[..state.completed].iter().flat_map(|s| s.classes().to_vec()).collect();
    classes.sort_unstable();
    classes.dedup();
    let tests: Vec<_> = tasks[..state.completed].iter().map(|s| s.test.clone()).collect();
    linear_probe(enc, &points, &labels, &tests, &classes, &cfg.probe, cfg.seed)
}

/// Exact bounds for the completed sequence, with table snapshots of every
/// task model over all training points.
pub fn evaluate_bounds(state: &RunState, tasks: &[TaskSplit], k: usize, surrogate: SurrogateMode) -> Result<BoundReport> {
    let done = &tasks[..state.completed];
    let points: Vec<Vec<f64>> = done.iter().flat_map(|s| s.train.points().to_vec()).collect();
    let tables = state
        .snapshots
        .iter()
        .map(|e| TableModel::snapshot(e, &points))
        .collect::<Result<Vec<_>>>()?;
    let dists: Vec<_> = done.iter().map(|s| s.train.clone()).collect();
    let lambdas: Vec<f64> = state.trace.tasks[1..].iter().map(|r| r.lambda.unwrap_or(0.0)).collect();
    let input = SequenceInput {
        models: tables.iter().map(|t| t as &dyn EmbeddingModel).collect(),
        tasks: &dists,
        weights: (2..=done.len()).map(|t| size_weights(done, t)).collect::<Result<_>>()?,
        lambdas: LambdaSpec::PerTask(lambdas),
        k,
        surrogate,
        surrogate_config: SurrogateConfig::default(),
    };
    sequence_report(&input)
}

/// Continues `state` through the remaining tasks. `on_task` runs after each
/// task and may return a checkpoint reference to record.
pub fn resume_sequence(
    mut state: RunState,
    tasks: &[TaskSplit],
    cfg: &RunConfig,
    on_task: &mut dyn FnMut(&RunState) -> Result<Option<String>>,
) -> Result<RunState> {
    if tasks.is_empty() {
        return Err(Error::InvalidArgument("a run needs at least one task".into()));
    }
    if state.completed > tasks.len() {
        return Err(Error::InvalidArgument(format!(
            "state has {} completed tasks but the sequence has {}",
            state.completed,
            tasks.len()
        )));
    }
    while state.completed < tasks.len() {
        let next = &tasks[state.completed];
        run_task(&mut state, next, cfg)?;
        let reference = on_task(&state)?;
        state.trace.tasks.last_mut().expect("task just ran").checkpoint = reference;
    }
    state.trace.probe = Some(final_probe(&state, tasks, cfg)?);
    if let Some(b) = cfg.bounds {
        if tasks.len() >= 2 {
            state.trace.bounds = Some(evaluate_bounds(&state, tasks, b.k, b.surrogate)?);
        }
    }
    Ok(state)
}

/// Algorithm loop over all tasks from a fresh state.
pub fn run_sequence(tasks: &[TaskSplit], cfg: &RunConfig) -> Result<RunState> {
    resume_sequence(RunState::fresh(cfg)?, tasks, cfg, &mut |_| Ok(None))
}
