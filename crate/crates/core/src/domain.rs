//! Core data types shared by the rest of the crate: labels, skill populations,
//! the sparse label store, belief state and experiment configuration.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inference::Prior;

/// Random generator used throughout the crate.
pub type SimRng = ChaCha8Rng;

/// Independent purposes a replication draws randomness for. Each purpose gets
/// its own ChaCha stream so that, e.g., swapping the allocation policy does not
/// perturb the sequence of true labels or worker skills.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    TrueLabels = 0,
    Skills = 1,
    Votes = 2,
    Ties = 3,
}

/// Derives the generator for `(seed, replication, purpose)`.
///
/// Streams are addressed directly, so replications can run in any order.
pub fn stream_rng(seed: u64, replication: u64, purpose: Stream) -> SimRng {
    let mut rng = SimRng::seed_from_u64(seed);
    rng.set_stream((replication << 2) | purpose as u64);
    rng
}

/// A binary label in {+1, -1}.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    Pos,
    Neg,
}

impl Label {
    pub fn from_sign(v: i8) -> Option<Label> {
        match v {
            1 => Some(Label::Pos),
            -1 => Some(Label::Neg),
            _ => None,
        }
    }

    pub fn value(self) -> i8 {
        match self {
            Label::Pos => 1,
            Label::Neg => -1,
        }
    }

    pub fn sign(self) -> f64 {
        f64::from(self.value())
    }

    pub fn flip(self) -> Label {
        match self {
            Label::Pos => Label::Neg,
            Label::Neg => Label::Pos,
        }
    }

    /// Fair coin over {+1, -1}.
    pub fn coin<R: Rng + ?Sized>(rng: &mut R) -> Label {
        if rng.random::<bool>() {
            Label::Pos
        } else {
            Label::Neg
        }
    }
}

impl std::ops::Neg for Label {
    type Output = Label;
    fn neg(self) -> Label {
        self.flip()
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Pos => f.write_str("+1"),
            Label::Neg => f.write_str("-1"),
        }
    }
}

/// Population law of worker accuracies.
#[derive(Debug, Clone, PartialEq)]
pub enum SkillDistribution {
    Beta { alpha: f64, beta: f64 },
    Dirac { p: f64 },
    /// Finite support: `(skill, mass)` pairs.
    Empirical { points: Vec<(f64, f64)> },
}

impl SkillDistribution {
    pub fn beta(alpha: f64, beta: f64) -> Result<Self> {
        let d = SkillDistribution::Beta { alpha, beta };
        d.validate()?;
        Ok(d)
    }

    pub fn dirac(p: f64) -> Result<Self> {
        let d = SkillDistribution::Dirac { p };
        d.validate()?;
        Ok(d)
    }

    pub fn empirical(points: Vec<(f64, f64)>) -> Result<Self> {
        let d = SkillDistribution::Empirical { points };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            SkillDistribution::Beta { alpha, beta } => {
                if !(alpha.is_finite() && beta.is_finite() && *alpha > 0.0 && *beta > 0.0) {
                    return Err(Error::InvalidDistribution(format!(
                        "Beta parameters must be positive, got ({alpha}, {beta})"
                    )));
                }
            }
            SkillDistribution::Dirac { p } => {
                if !(*p > 0.0 && *p < 1.0) {
                    return Err(Error::InvalidDistribution(format!(
                        "Dirac skill must lie in (0,1), got {p}"
                    )));
                }
            }
            SkillDistribution::Empirical { points } => {
                if points.is_empty() {
                    return Err(Error::InvalidDistribution("empty support".into()));
                }
                let mut total = 0.0;
                for &(p, mass) in points {
                    if !(p > 0.0 && p < 1.0) {
                        return Err(Error::InvalidDistribution(format!(
                            "support point {p} outside (0,1)"
                        )));
                    }
                    if !(mass >= 0.0 && mass.is_finite()) {
                        return Err(Error::InvalidDistribution(format!(
                            "negative mass {mass}"
                        )));
                    }
                    total += mass;
                }
                if (total - 1.0).abs() > 1e-9 {
                    return Err(Error::InvalidDistribution(format!(
                        "masses sum to {total}, expected 1"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn mean(&self) -> f64 {
        match self {
            SkillDistribution::Beta { alpha, beta } => alpha / (alpha + beta),
            SkillDistribution::Dirac { p } => *p,
            SkillDistribution::Empirical { points } => points.iter().map(|(p, m)| p * m).sum(),
        }
    }
}

/// A crowd member with a fixed probability of answering correctly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Worker {
    pub id: usize,
    pub skill: f64,
}

impl Worker {
    pub fn new(id: usize, skill: f64) -> Result<Self> {
        if !(skill > 0.0 && skill < 1.0) {
            return Err(Error::Domain(format!("worker skill {skill} outside (0,1)")));
        }
        Ok(Worker { id, skill })
    }
}

// Beta draws can round to exactly 0 or 1 for extreme parameters.
const SKILL_EPS: f64 = 1e-12;

/// Draws one worker skill from `dist`.
pub fn sample_skill<R: Rng + ?Sized>(dist: &SkillDistribution, rng: &mut R) -> f64 {
    match dist {
        SkillDistribution::Dirac { p } => *p,
        SkillDistribution::Beta { alpha, beta } => {
            let b = Beta::new(*alpha, *beta).expect("validated Beta parameters");
            b.sample(rng).clamp(SKILL_EPS, 1.0 - SKILL_EPS)
        }
        SkillDistribution::Empirical { points } => {
            let u: f64 = rng.random();
            let mut acc = 0.0;
            for &(p, mass) in points {
                acc += mass;
                if u < acc {
                    return p;
                }
            }
            // u landed in the rounding gap above the cumulative sum
            points.iter().rev().find(|(_, m)| *m > 0.0).map_or(points[0].0, |(p, _)| *p)
        }
    }
}

/// Returns `truth` with probability `p` and its negation otherwise.
pub fn generate_label<R: Rng + ?Sized>(truth: Label, p: f64, rng: &mut R) -> Label {
    if rng.random::<f64>() < p {
        truth
    } else {
        truth.flip()
    }
}

/// One collected vote.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LabelRecord {
    pub task: usize,
    pub worker: usize,
    pub label: Label,
}

/// Sparse collection of votes with per-task and per-worker views.
///
/// A `(task, worker)` pair can appear at most once.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LabelStore {
    records: Vec<LabelRecord>,
    by_task: Vec<Vec<usize>>,
    by_worker: Vec<Vec<usize>>,
}

impl LabelStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// A store that already knows about `num_tasks` tasks, labeled or not.
    pub fn with_tasks(num_tasks: usize) -> Self {
        LabelStore {
            records: Vec::new(),
            by_task: vec![Vec::new(); num_tasks],
            by_worker: Vec::new(),
        }
    }

    pub fn from_records<I>(records: I) -> Result<Self>
    where
        I: IntoIterator<Item = LabelRecord>,
    {
        let mut store = LabelStore::new();
        for r in records {
            store.insert(r.task, r.worker, r.label)?;
        }
        Ok(store)
    }

    pub fn has_label(&self, task: usize, worker: usize) -> bool {
        self.by_worker
            .get(worker)
            .is_some_and(|ids| ids.iter().any(|&k| self.records[k].task == task))
    }

    /// Appends a vote. Duplicate pairs are rejected and leave the store unchanged.
    pub fn insert(&mut self, task: usize, worker: usize, label: Label) -> Result<()> {
        if self.has_label(task, worker) {
            return Err(Error::DuplicateLabel { task, worker });
        }
        if self.by_task.len() <= task {
            self.by_task.resize(task + 1, Vec::new());
        }
        if self.by_worker.len() <= worker {
            self.by_worker.resize(worker + 1, Vec::new());
        }
        let idx = self.records.len();
        self.records.push(LabelRecord { task, worker, label });
        self.by_task[task].push(idx);
        self.by_worker[worker].push(idx);
        Ok(())
    }

    pub fn records(&self) -> &[LabelRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn num_tasks(&self) -> usize {
        self.by_task.len()
    }

    pub fn num_workers(&self) -> usize {
        self.by_worker.len()
    }

    /// Votes received by `task` (the set N_i), in arrival order.
    pub fn task_records(&self, task: usize) -> impl Iterator<Item = &LabelRecord> + '_ {
        self.by_task
            .get(task)
            .into_iter()
            .flatten()
            .map(move |&k| &self.records[k])
    }

    /// Votes cast by `worker` (the set N_j), in arrival order.
    pub fn worker_records(&self, worker: usize) -> impl Iterator<Item = &LabelRecord> + '_ {
        self.by_worker
            .get(worker)
            .into_iter()
            .flatten()
            .map(move |&k| &self.records[k])
    }

    pub fn task_count(&self, task: usize) -> usize {
        self.by_task.get(task).map_or(0, Vec::len)
    }

    pub fn worker_count(&self, worker: usize) -> usize {
        self.by_worker.get(worker).map_or(0, Vec::len)
    }

    /// Rebuilds both views from the raw records and checks they match.
    pub fn indexes_consistent(&self) -> bool {
        let mut by_task = vec![Vec::new(); self.by_task.len()];
        let mut by_worker = vec![Vec::new(); self.by_worker.len()];
        for (k, r) in self.records.iter().enumerate() {
            if r.task >= by_task.len() || r.worker >= by_worker.len() {
                return false;
            }
            by_task[r.task].push(k);
            by_worker[r.worker].push(k);
        }
        by_task == self.by_task && by_worker == self.by_worker
    }

    /// Same votes with every label negated.
    pub fn flipped(&self) -> LabelStore {
        let mut out = self.clone();
        for r in &mut out.records {
            r.label = r.label.flip();
        }
        out
    }
}

/// Per-task log-odds and posteriors plus per-worker skill estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct BeliefState {
    pub task_logodds: Vec<f64>,
    pub task_posteriors: Vec<f64>,
    pub worker_estimates: Vec<f64>,
}

impl BeliefState {
    pub fn new(num_tasks: usize) -> Self {
        BeliefState {
            task_logodds: vec![0.0; num_tasks],
            task_posteriors: vec![0.5; num_tasks],
            worker_estimates: Vec::new(),
        }
    }

    /// Sets z_i and keeps the posterior in sync.
    pub fn set_logodds(&mut self, task: usize, z: f64) {
        self.task_logodds[task] = z;
        self.task_posteriors[task] = crate::aggregation::logistic(z);
    }

    /// Sets mu_i(+1); z_i becomes its logit clamped to `[-clamp, clamp]`.
    pub fn set_posterior(&mut self, task: usize, mu: f64, clamp: f64) {
        self.task_posteriors[task] = mu;
        self.task_logodds[task] = crate::aggregation::logit(mu).clamp(-clamp, clamp);
    }
}

/// Allocation rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    Uniform,
    Uncertainty,
    GreedyInfoGain,
}

impl PolicyKind {
    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::Uniform => "uniform",
            PolicyKind::Uncertainty => "uncertainty",
            PolicyKind::GreedyInfoGain => "greedy_info_gain",
        }
    }
}

/// Whether true skills are revealed to the allocator or must be inferred.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Mode {
    Oracle,
    Inference(Prior),
}

/// How equal-priority tasks are ordered by the allocation rules.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TieBreak {
    #[default]
    LowestId,
    Random,
}

/// Declarative description of one simulated experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub num_tasks: usize,
    pub budget: usize,
    pub labels_per_worker: usize,
    pub population: SkillDistribution,
    pub policy: PolicyKind,
    pub mode: Mode,
    pub replications: usize,
    pub seed: u64,
    pub tie_break: TieBreak,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.population.validate()?;
        if self.num_tasks == 0 {
            return Err(Error::Config("num_tasks must be positive".into()));
        }
        if self.budget == 0 {
            return Err(Error::Config("budget must be positive".into()));
        }
        if self.labels_per_worker == 0 {
            return Err(Error::Config("labels_per_worker must be positive".into()));
        }
        if self.replications == 0 {
            return Err(Error::Config("replications must be positive".into()));
        }
        if self.policy == PolicyKind::Uniform && self.budget < self.num_tasks {
            return Err(Error::Config(format!(
                "uniform allocation needs budget >= num_tasks ({} < {})",
                self.budget, self.num_tasks
            )));
        }
        if self.labels_per_worker > self.num_tasks {
            return Err(Error::Config(format!(
                "labels_per_worker ({}) exceeds num_tasks ({})",
                self.labels_per_worker, self.num_tasks
            )));
        }
        if let Mode::Inference(prior) = self.mode {
            prior.validate()?;
            if prior.alpha <= prior.beta {
                return Err(Error::Config(format!(
                    "inference prior needs alpha > beta to fix the label orientation, got ({}, {})",
                    prior.alpha, prior.beta
                )));
            }
        }
        Ok(())
    }
}
