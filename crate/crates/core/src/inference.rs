//! Approximate mean-field estimation of task posteriors and worker skills.
//!
//! The E-step scores each task from the current skill estimates; the M-step
//! re-estimates every skill as a Beta-smoothed average of the posterior mass
//! the worker's votes agree with. Both exist in batch form ([`fit`]) and as a
//! single-arrival refresh ([`online_update`]).

use serde::{Deserialize, Serialize};

use crate::aggregation::logistic;
use crate::domain::{Label, LabelRecord, LabelStore};
use crate::error::{Error, Result};

/// Beta prior on worker skill.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prior {
    pub alpha: f64,
    pub beta: f64,
}

impl Prior {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        let p = Prior { alpha, beta };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.beta > 0.0 && self.alpha.is_finite() && self.beta.is_finite())
        {
            return Err(Error::Config(format!(
                "prior parameters must be positive, got ({}, {})",
                self.alpha, self.beta
            )));
        }
        Ok(())
    }

    pub fn mean(&self) -> f64 {
        self.alpha / (self.alpha + self.beta)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    Converged,
    MaxIterations,
    /// State produced by online updates rather than batch iteration.
    Online,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeanFieldState {
    /// mu_i(+1) per task.
    pub posteriors: Vec<f64>,
    /// Estimated skill per worker.
    pub skills: Vec<f64>,
    pub iteration_count: usize,
    pub stop: StopReason,
}

impl MeanFieldState {
    /// Nothing observed: every task at 0.5, every worker at the prior mean.
    pub fn empty(num_tasks: usize, num_workers: usize, prior: Prior) -> Self {
        MeanFieldState {
            posteriors: vec![0.5; num_tasks],
            skills: vec![prior.mean(); num_workers],
            iteration_count: 0,
            stop: StopReason::Online,
        }
    }

    /// Hard decision `sign(mu_i(+1) - 1/2)`; `None` on an exact tie.
    pub fn decision(&self, task: usize) -> Option<Label> {
        let mu = self.posteriors[task];
        if mu > 0.5 {
            Some(Label::Pos)
        } else if mu < 0.5 {
            Some(Label::Neg)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions { tol: 1e-6, max_iter: 100 }
    }
}

/// mu_i(+1) for one task given skill estimates, via normalized log products.
pub fn task_posterior(store: &LabelStore, task: usize, skills: &[f64]) -> f64 {
    let mut log_pos = 0.0;
    let mut log_neg = 0.0;
    for r in store.task_records(task) {
        let p = skills[r.worker];
        let (agree, disagree) = (p.ln(), (-p).ln_1p());
        match r.label {
            Label::Pos => {
                log_pos += agree;
                log_neg += disagree;
            }
            Label::Neg => {
                log_pos += disagree;
                log_neg += agree;
            }
        }
    }
    let m = log_pos.max(log_neg);
    if !m.is_finite() {
        // a vote from a worker pinned at 0 or 1 decides the task outright
        return logistic(log_pos - log_neg);
    }
    let a = (log_pos - m).exp();
    let b = (log_neg - m).exp();
    a / (a + b)
}

/// E-step over every task in the store. Unlabeled tasks get 0.5.
pub fn e_step(store: &LabelStore, skills: &[f64]) -> Vec<f64> {
    (0..store.num_tasks())
        .map(|i| task_posterior(store, i, skills))
        .collect()
}

/// Skill estimate for one worker given task posteriors.
pub fn worker_skill(store: &LabelStore, worker: usize, posteriors: &[f64], prior: Prior) -> f64 {
    let mut agreement = 0.0;
    let mut n = 0usize;
    for r in store.worker_records(worker) {
        let mu = posteriors[r.task];
        agreement += match r.label {
            Label::Pos => mu,
            Label::Neg => 1.0 - mu,
        };
        n += 1;
    }
    (agreement + prior.alpha) / (n as f64 + prior.alpha + prior.beta)
}

/// M-step over every worker in the store.
pub fn m_step(store: &LabelStore, posteriors: &[f64], prior: Prior) -> Vec<f64> {
    (0..store.num_workers())
        .map(|j| worker_skill(store, j, posteriors, prior))
        .collect()
}

/// Alternating E/M iteration, exposed step by step.
#[derive(Debug, Clone)]
pub struct MeanField<'a> {
    store: &'a LabelStore,
    prior: Prior,
    posteriors: Vec<f64>,
    skills: Vec<f64>,
    iterations: usize,
}

impl<'a> MeanField<'a> {
    /// Starts from every skill at the prior mean.
    pub fn new(store: &'a LabelStore, prior: Prior) -> Self {
        let skills = vec![prior.mean(); store.num_workers()];
        Self::with_skills(store, prior, skills)
    }

    /// Warm start from given skill estimates (missing workers get the prior mean).
    pub fn with_skills(store: &'a LabelStore, prior: Prior, mut skills: Vec<f64>) -> Self {
        skills.resize(store.num_workers().max(skills.len()), prior.mean());
        MeanField {
            store,
            prior,
            posteriors: vec![0.5; store.num_tasks()],
            skills,
            iterations: 0,
        }
    }

    /// One E-step followed by one M-step; returns the largest posterior change.
    pub fn step(&mut self) -> f64 {
        let next = e_step(self.store, &self.skills);
        let change = next
            .iter()
            .zip(&self.posteriors)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        self.posteriors = next;
        self.skills = m_step(self.store, &self.posteriors, self.prior);
        self.iterations += 1;
        change
    }

    pub fn posteriors(&self) -> &[f64] {
        &self.posteriors
    }

    pub fn skills(&self) -> &[f64] {
        &self.skills
    }

    pub fn run(mut self, opts: FitOptions) -> MeanFieldState {
        let stop = loop {
            let change = self.step();
            if change <= opts.tol {
                break StopReason::Converged;
            }
            if self.iterations >= opts.max_iter {
                break StopReason::MaxIterations;
            }
        };
        MeanFieldState {
            posteriors: self.posteriors,
            skills: self.skills,
            iteration_count: self.iterations,
            stop,
        }
    }
}

/// Batch fit from the prior mean until the posteriors stop moving.
pub fn fit(store: &LabelStore, prior: Prior, opts: FitOptions) -> Result<MeanFieldState> {
    if !(opts.tol > 0.0) || opts.max_iter == 0 {
        return Err(Error::Precondition(format!(
            "fit needs tol > 0 and max_iter >= 1, got {:?}",
            opts
        )));
    }
    Ok(MeanField::new(store, prior).run(opts))
}

/// Folds one newly inserted vote into `state`: the voted task's posterior is
/// recomputed from the current skills, then the voter's skill from the
/// current posteriors. Nothing else changes.
pub fn online_update(
    state: &mut MeanFieldState,
    store: &LabelStore,
    record: LabelRecord,
    prior: Prior,
) {
    debug_assert!(store.has_label(record.task, record.worker));
    if state.posteriors.len() < store.num_tasks() {
        state.posteriors.resize(store.num_tasks(), 0.5);
    }
    if state.skills.len() < store.num_workers() {
        state.skills.resize(store.num_workers(), prior.mean());
    }
    state.posteriors[record.task] = task_posterior(store, record.task, &state.skills);
    state.skills[record.worker] = worker_skill(store, record.worker, &state.posteriors, prior);
    state.stop = StopReason::Online;
}
