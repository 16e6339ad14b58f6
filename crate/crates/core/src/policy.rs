//! Worker-to-task allocation rules.
//!
//! Three rules are provided: uniform (fewest labels first), uncertainty
//! sampling (smallest `|z_i|` first) and greedy expected information gain.
//! Every rule takes the set of tasks the arriving worker may still label.

use rand::Rng;

use crate::aggregation::{logistic, logit, softplus};
use crate::domain::{PolicyKind, TieBreak};
use crate::error::{Error, Result};

/// Set of task ids an arriving worker is allowed to label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaskSet {
    mask: Vec<bool>,
}

impl TaskSet {
    pub fn all(num_tasks: usize) -> Self {
        TaskSet { mask: vec![true; num_tasks] }
    }

    pub fn from_fn(num_tasks: usize, f: impl Fn(usize) -> bool) -> Self {
        TaskSet { mask: (0..num_tasks).map(f).collect() }
    }

    /// Every task except those in `excluded`.
    pub fn excluding(num_tasks: usize, excluded: impl IntoIterator<Item = usize>) -> Self {
        let mut set = Self::all(num_tasks);
        for i in excluded {
            if i < num_tasks {
                set.mask[i] = false;
            }
        }
        set
    }

    pub fn contains(&self, task: usize) -> bool {
        self.mask.get(task).copied().unwrap_or(false)
    }

    pub fn remove(&mut self, task: usize) {
        if let Some(m) = self.mask.get_mut(task) {
            *m = false;
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.mask.iter().enumerate().filter(|(_, &m)| m).map(|(i, _)| i)
    }

    pub fn is_empty(&self) -> bool {
        !self.mask.iter().any(|&m| m)
    }

    pub fn len(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }
}

/// Signed vote increment `x = ±w` with `w = ln(p/(1-p))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VoteIncrement {
    pub magnitude: f64,
    pub value: f64,
}

impl VoteIncrement {
    /// Increment produced by a vote of a worker with skill `p` that agrees
    /// (`agrees = true`) or disagrees with the positive class.
    pub fn new(p: f64, agrees: bool) -> Self {
        let w = logit(p);
        let value = if agrees { w } else { -w };
        VoteIncrement { magnitude: value.abs(), value }
    }
}

/// KL divergence between the task posterior after and before a step `x`
/// applied to log-odds `z`.
pub fn info_gain(z: f64, x: f64) -> f64 {
    let after = z + x;
    let kl = x * logistic(after) + softplus(z) - softplus(after);
    kl.max(0.0)
}

/// Information gain of assigning a worker with skill `p` to a task at
/// log-odds `z`, averaged over the two possible votes.
///
/// The vote is `+w` with probability `q p + (1-q)(1-p)` where `q` is the
/// current posterior of the positive class.
pub fn expected_info_gain(z: f64, p: f64) -> f64 {
    let w = logit(p);
    let q = logistic(z);
    let prob_pos = q * p + (1.0 - q) * (1.0 - p);
    prob_pos * info_gain(z, w) + (1.0 - prob_pos) * info_gain(z, -w)
}

/// How far the expected gain at `z` falls below its value at `z = 0`.
///
/// The expected gain is the mutual information between the next vote and the
/// true class, `h(pi) - h(p)`, so the shortfall is `ln 2 - h(pi)` with
/// `pi - 1/2 = (2p - 1) tanh(z/2) / 2`. Computed this way it keeps full
/// relative precision near `z = 0`, where the gain itself is flat to machine
/// precision.
pub fn gain_shortfall(z: f64, p: f64) -> f64 {
    // even in u; working with |u| keeps it exactly so, which std's atanh
    // alone does not
    let u = ((2.0 * p - 1.0) * (0.5 * z).tanh()).abs();
    // ln 2 - h((1+u)/2) = [ln(1-u^2) + 2u atanh(u)] / 2
    (0.5 * ((-u * u).ln_1p() + 2.0 * u * u.atanh())).max(0.0)
}

// Lowest-id argmin over the eligible tasks, keys compared lexicographically.
fn argmin_by<F>(eligible: &TaskSet, key: F) -> Result<usize>
where
    F: Fn(usize) -> (f64, f64),
{
    let mut best: Option<(usize, (f64, f64))> = None;
    for i in eligible.iter() {
        let k = key(i);
        match best {
            Some((_, bk)) if k >= bk => {}
            _ => best = Some((i, k)),
        }
    }
    best.map(|(i, _)| i).ok_or(Error::NoEligibleTask)
}

// Uniformly random choice among the exact minimizers.
fn argmin_random<F, R>(eligible: &TaskSet, key: F, rng: &mut R) -> Result<usize>
where
    F: Fn(usize) -> (f64, f64),
    R: Rng + ?Sized,
{
    let mut best = (f64::INFINITY, f64::INFINITY);
    let mut ties: Vec<usize> = Vec::new();
    for i in eligible.iter() {
        let k = key(i);
        if k < best {
            best = k;
            ties.clear();
            ties.push(i);
        } else if k == best {
            ties.push(i);
        }
    }
    if ties.is_empty() {
        return Err(Error::NoEligibleTask);
    }
    Ok(ties[rng.random_range(0..ties.len())])
}

/// Eligible task with the smallest `|z_i|`; ties go to the lowest id.
pub fn select_uncertainty(logodds: &[f64], eligible: &TaskSet) -> Result<usize> {
    argmin_by(eligible, |i| (logodds[i].abs(), 0.0))
}

/// Eligible task with the largest expected information gain for a worker of
/// skill `p`; ties go to the lowest id.
///
/// Equal shortfalls are split by `|z_i|`. The shortfall is strictly
/// increasing in `|z_i|`, so this only matters where rounding flattens it:
/// log-odds a few ulps apart, or `|z_i|` large enough to saturate `tanh`.
pub fn select_greedy_ig(logodds: &[f64], p: f64, eligible: &TaskSet) -> Result<usize> {
    argmin_by(eligible, |i| ig_key(logodds[i], p))
}

fn ig_key(z: f64, p: f64) -> (f64, f64) {
    // a spammer gains nothing anywhere, so every task ties
    let tiebreak = if p == 0.5 { 0.0 } else { z.abs() };
    (gain_shortfall(z, p), tiebreak)
}

/// Eligible task with the fewest labels; ties go to the lowest id.
pub fn select_uniform(label_counts: &[usize], eligible: &TaskSet) -> Result<usize> {
    argmin_by(eligible, |i| (label_counts[i] as f64, 0.0))
}

/// What an allocation rule may look at when a worker arrives.
#[derive(Debug, Clone, Copy)]
pub struct AllocationView<'a> {
    pub logodds: &'a [f64],
    pub label_counts: &'a [usize],
    /// Skill of the arriving worker as known to the allocator.
    pub skill: f64,
    pub eligible: &'a TaskSet,
}

/// A configured allocation rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Allocator {
    pub kind: PolicyKind,
    pub tie_break: TieBreak,
}

impl Allocator {
    pub fn new(kind: PolicyKind, tie_break: TieBreak) -> Self {
        Allocator { kind, tie_break }
    }

    /// Picks a task. `rng` is consulted only for random tie-breaking.
    pub fn select<R: Rng + ?Sized>(&self, view: &AllocationView<'_>, rng: &mut R) -> Result<usize> {
        let key = |i: usize| -> (f64, f64) {
            match self.kind {
                PolicyKind::Uniform => (view.label_counts[i] as f64, 0.0),
                PolicyKind::Uncertainty => (view.logodds[i].abs(), 0.0),
                PolicyKind::GreedyInfoGain => ig_key(view.logodds[i], view.skill),
            }
        };
        match self.tie_break {
            TieBreak::LowestId => argmin_by(view.eligible, key),
            TieBreak::Random => argmin_random(view.eligible, key, rng),
        }
    }
}
