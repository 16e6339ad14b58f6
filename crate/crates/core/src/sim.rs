//! Round-based Monte Carlo harness.
//!
//! Each round one worker is matched to one task, the vote is drawn from the
//! worker's skill, and the allocator's view of the task is refreshed. In
//! oracle mode every round brings a fresh worker whose skill is revealed; in
//! inference mode a worker stays for `labels_per_worker` rounds, never sees the
//! same task twice, and skills are only known through online mean-field
//! estimates.

use rayon::prelude::*;

use crate::aggregation::{classify, logit, weight};
use crate::domain::{
    generate_label, sample_skill, stream_rng, BeliefState, ExperimentConfig, Label, LabelRecord,
    LabelStore, Mode, PolicyKind, Stream,
};
use crate::error::{Error, Result};
use crate::inference::{fit, online_update, FitOptions, MeanFieldState, Prior};
use crate::policy::{AllocationView, Allocator, TaskSet};

/// Bound on `|z_i|` derived from a saturated posterior.
pub const LOGODDS_CLAMP: f64 = 50.0;

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    /// Fraction of the `M` tasks classified correctly.
    pub accuracy: f64,
    /// `labels_per_task[k]` = number of tasks that received `k` labels.
    pub labels_per_task: Vec<usize>,
    pub mean_abs_logodds: f64,
    pub rounds_executed: usize,
    pub unassignable_workers: usize,
    pub workers_used: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReplicationStats {
    pub mean_accuracy: f64,
    /// Sample standard deviation over `sqrt(n)`.
    pub standard_error: f64,
    pub n: usize,
}

/// Mean and standard error of per-replication accuracies.
pub fn replication_stats(accuracies: &[f64]) -> ReplicationStats {
    let n = accuracies.len();
    let mean = accuracies.iter().sum::<f64>() / n as f64;
    let se = if n > 1 {
        let var = accuracies.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        (var / n as f64).sqrt()
    } else {
        f64::NAN
    };
    ReplicationStats { mean_accuracy: mean, standard_error: se, n }
}

/// One replication of `cfg`.
pub fn run_once(cfg: &ExperimentConfig, replication: u64) -> Result<RunResult> {
    run_traced(cfg, replication).map(|(r, _)| r)
}

/// [`run_once`] that also returns every collected vote in arrival order.
pub fn run_traced(cfg: &ExperimentConfig, replication: u64) -> Result<(RunResult, Vec<LabelRecord>)> {
    cfg.validate()?;
    let mut truth_rng = stream_rng(cfg.seed, replication, Stream::TrueLabels);
    let truths: Vec<Label> = (0..cfg.num_tasks).map(|_| Label::coin(&mut truth_rng)).collect();
    match cfg.mode {
        Mode::Oracle => run_oracle(cfg, replication, &truths),
        Mode::Inference(prior) => run_inference(cfg, replication, &truths, prior),
    }
}

fn histogram(counts: &[usize]) -> Vec<usize> {
    let max = counts.iter().copied().max().unwrap_or(0);
    let mut h = vec![0; max + 1];
    for &c in counts {
        h[c] += 1;
    }
    h
}

fn run_oracle(
    cfg: &ExperimentConfig,
    replication: u64,
    truths: &[Label],
) -> Result<(RunResult, Vec<LabelRecord>)> {
    let m = cfg.num_tasks;
    let mut skill_rng = stream_rng(cfg.seed, replication, Stream::Skills);
    let mut vote_rng = stream_rng(cfg.seed, replication, Stream::Votes);
    let mut tie_rng = stream_rng(cfg.seed, replication, Stream::Ties);
    let allocator = Allocator::new(cfg.policy, cfg.tie_break);

    let mut belief = BeliefState::new(m);
    let mut counts = vec![0usize; m];
    let mut trace = Vec::with_capacity(cfg.budget);
    let eligible = TaskSet::all(m);

    for worker in 0..cfg.budget {
        let skill = sample_skill(&cfg.population, &mut skill_rng);
        let view = AllocationView {
            logodds: &belief.task_logodds,
            label_counts: &counts,
            skill,
            eligible: &eligible,
        };
        let task = allocator.select(&view, &mut tie_rng)?;
        let label = generate_label(truths[task], skill, &mut vote_rng);
        let z = belief.task_logodds[task] + label.sign() * weight(skill)?;
        belief.set_logodds(task, z);
        counts[task] += 1;
        trace.push(LabelRecord { task, worker, label });
    }

    let correct = (0..m)
        .filter(|&i| classify(belief.task_logodds[i], &mut tie_rng) == truths[i])
        .count();
    let mean_abs = belief.task_logodds.iter().map(|z| z.abs()).sum::<f64>() / m as f64;
    let result = RunResult {
        accuracy: correct as f64 / m as f64,
        labels_per_task: histogram(&counts),
        mean_abs_logodds: mean_abs,
        rounds_executed: trace.len(),
        unassignable_workers: 0,
        workers_used: cfg.budget,
    };
    Ok((result, trace))
}

fn run_inference(
    cfg: &ExperimentConfig,
    replication: u64,
    truths: &[Label],
    prior: Prior,
) -> Result<(RunResult, Vec<LabelRecord>)> {
    let m = cfg.num_tasks;
    let mut skill_rng = stream_rng(cfg.seed, replication, Stream::Skills);
    let mut vote_rng = stream_rng(cfg.seed, replication, Stream::Votes);
    let mut tie_rng = stream_rng(cfg.seed, replication, Stream::Ties);
    let allocator = Allocator::new(cfg.policy, cfg.tie_break);

    let mut store = LabelStore::with_tasks(m);
    let mut state = MeanFieldState::empty(m, 0, prior);
    let mut belief = BeliefState::new(m);
    let mut counts = vec![0usize; m];
    let mut trace = Vec::with_capacity(cfg.budget);
    let mut unassignable = 0;

    let mut worker = 0usize;
    let mut skill = sample_skill(&cfg.population, &mut skill_rng);
    let mut remaining = cfg.labels_per_worker;

    while trace.len() < cfg.budget {
        let eligible = TaskSet::excluding(m, store.worker_records(worker).map(|r| r.task));
        let estimate = state.skills.get(worker).copied().unwrap_or(prior.mean());
        let view = AllocationView {
            logodds: &belief.task_logodds,
            label_counts: &counts,
            skill: estimate,
            eligible: &eligible,
        };
        let task = match allocator.select(&view, &mut tie_rng) {
            Ok(t) => t,
            Err(Error::NoEligibleTask) => {
                // the worker leaves early; the round is not charged
                unassignable += 1;
                worker += 1;
                skill = sample_skill(&cfg.population, &mut skill_rng);
                remaining = cfg.labels_per_worker;
                continue;
            }
            Err(e) => return Err(e),
        };
        let label = generate_label(truths[task], skill, &mut vote_rng);
        let record = LabelRecord { task, worker, label };
        store.insert(task, worker, label)?;
        online_update(&mut state, &store, record, prior);
        belief.set_posterior(task, state.posteriors[task], LOGODDS_CLAMP);
        counts[task] += 1;
        trace.push(record);

        remaining -= 1;
        if remaining == 0 {
            worker += 1;
            skill = sample_skill(&cfg.population, &mut skill_rng);
            remaining = cfg.labels_per_worker;
        }
    }

    let fitted = fit(&store, prior, FitOptions::default())?;
    let mut correct = 0;
    let mut abs_sum = 0.0;
    for (i, truth) in truths.iter().enumerate() {
        let predicted = fitted.decision(i).unwrap_or_else(|| Label::coin(&mut tie_rng));
        if predicted == *truth {
            correct += 1;
        }
        abs_sum += logit(fitted.posteriors[i]).clamp(-LOGODDS_CLAMP, LOGODDS_CLAMP).abs();
    }
    let workers_used = if remaining == cfg.labels_per_worker { worker } else { worker + 1 };
    let result = RunResult {
        accuracy: correct as f64 / m as f64,
        labels_per_task: histogram(&counts),
        mean_abs_logodds: abs_sum / m as f64,
        rounds_executed: trace.len(),
        unassignable_workers: unassignable,
        workers_used,
    };
    Ok((result, trace))
}

/// All replications of `cfg`, aggregated in replication order.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ReplicationStats> {
    if cfg.replications < 2 {
        return Err(Error::Config(format!(
            "need at least 2 replications for a standard error, got {}",
            cfg.replications
        )));
    }
    cfg.validate()?;
    let accuracies = (0..cfg.replications as u64)
        .into_par_iter()
        .map(|r| run_once(cfg, r).map(|res| res.accuracy))
        .collect::<Result<Vec<f64>>>()?;
    Ok(replication_stats(&accuracies))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    /// Number of tasks `M`, keeping the budget per task fixed.
    Tasks,
    /// Budget per task `B / M`.
    BudgetRatio,
    /// Labels contributed by each worker.
    LabelsPerWorker,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::Tasks => "tasks",
            SweepAxis::BudgetRatio => "budget_ratio",
            SweepAxis::LabelsPerWorker => "labels_per_worker",
        }
    }

    pub fn parse(s: &str) -> Option<SweepAxis> {
        match s {
            "tasks" => Some(SweepAxis::Tasks),
            "budget_ratio" => Some(SweepAxis::BudgetRatio),
            "labels_per_worker" => Some(SweepAxis::LabelsPerWorker),
            _ => None,
        }
    }

    /// `base` moved to `value` along this axis.
    pub fn apply(self, base: &ExperimentConfig, value: f64) -> Result<ExperimentConfig> {
        if !(value > 0.0 && value.is_finite()) {
            return Err(Error::Config(format!("{} point {value} must be positive", self.name())));
        }
        let mut cfg = base.clone();
        match self {
            SweepAxis::Tasks => {
                if value.fract() != 0.0 {
                    return Err(Error::Config(format!("task count {value} must be an integer")));
                }
                let ratio = base.budget as f64 / base.num_tasks as f64;
                cfg.num_tasks = value as usize;
                cfg.budget = (ratio * value).round() as usize;
            }
            SweepAxis::BudgetRatio => {
                cfg.budget = (value * base.num_tasks as f64).round() as usize;
            }
            SweepAxis::LabelsPerWorker => {
                if value.fract() != 0.0 {
                    return Err(Error::Config(format!("labels per worker {value} must be an integer")));
                }
                cfg.labels_per_worker = value as usize;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Policies compared by [`sweep`].
pub const SWEEP_POLICIES: [PolicyKind; 2] = [PolicyKind::Uniform, PolicyKind::Uncertainty];

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub value: f64,
    pub results: Vec<(PolicyKind, Result<ReplicationStats>)>,
}

/// Runs every policy at every point of `axis`. A failing point is recorded
/// and the sweep moves on.
pub fn sweep(base: &ExperimentConfig, axis: SweepAxis, points: &[f64]) -> Result<Vec<SweepPoint>> {
    sweep_policies(base, axis, points, &SWEEP_POLICIES)
}

pub fn sweep_policies(
    base: &ExperimentConfig,
    axis: SweepAxis,
    points: &[f64],
    policies: &[PolicyKind],
) -> Result<Vec<SweepPoint>> {
    if points.is_empty() {
        return Err(Error::Config("sweep needs at least one point".into()));
    }
    Ok(points
        .iter()
        .map(|&value| {
            let results = policies
                .iter()
                .map(|&policy| {
                    let stats = axis.apply(&ExperimentConfig { policy, ..base.clone() }, value)
                        .and_then(|cfg| run_experiment(&cfg));
                    (policy, stats)
                })
                .collect();
            SweepPoint { value, results }
        })
        .collect())
}
