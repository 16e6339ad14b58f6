//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use crowd_alloc::aggregation::logit;
use crowd_alloc::domain::{sample_skill, SimRng, SkillDistribution};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};

/// Majority-vote accuracy of `r` votes by enumerating all `2^r` outcomes.
pub fn enumerate_majority(p: f64, r: usize) -> f64 {
    let mut total = 0.0;
    for mask in 0u32..(1 << r) {
        let correct = mask.count_ones() as usize;
        let prob = p.powi(correct as i32) * (1.0 - p).powi((r - correct) as i32);
        if 2 * correct > r {
            total += prob;
        } else if 2 * correct == r {
            total += 0.5 * prob;
        }
    }
    total
}

/// Expected steps and exit-at-top probability of a +-1 walk started at 0 and
/// absorbed at +-k, by first-step analysis solved as a linear system.
pub fn first_step(p: f64, k: usize) -> (f64, f64) {
    let n = 2 * k - 1;
    let q = 1.0 - p;
    let mut a = DMatrix::<f64>::identity(n, n);
    let steps = DVector::<f64>::from_element(n, 1.0);
    let mut top = DVector::<f64>::zeros(n);
    for i in 0..n {
        if i + 1 < n {
            a[(i, i + 1)] = -p;
        } else {
            top[i] = p;
        }
        if i > 0 {
            a[(i, i - 1)] = -q;
        }
    }
    let lu = a.lu();
    let e = lu.solve(&steps).expect("nonsingular");
    let h = lu.solve(&top).expect("nonsingular");
    (e[k - 1], h[k - 1])
}

/// Mean and standard error.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// One vote increment for a task whose true label is +1.
pub fn draw_increment(pop: &SkillDistribution, rng: &mut SimRng) -> f64 {
    let p = sample_skill(pop, rng);
    let w = logit(p);
    if rng.random::<f64>() < p {
        w
    } else {
        -w
    }
}

pub struct WalkSample {
    pub steps: (f64, f64),
    pub accuracy: (f64, f64),
}

/// Simulated walks absorbed at `+-z_b` (reaching within a relative 1e-9).
pub fn mc_bounded(pop: &SkillDistribution, z_b: f64, n: usize, seed: u64) -> WalkSample {
    let mut rng = SimRng::seed_from_u64(seed);
    let mut steps = Vec::with_capacity(n);
    let mut hits = Vec::with_capacity(n);
    let edge = z_b * (1.0 - 1e-9);
    for _ in 0..n {
        let mut z = 0.0f64;
        let mut k = 0;
        while z.abs() < edge {
            z += draw_increment(pop, &mut rng);
            k += 1;
        }
        steps.push(k as f64);
        hits.push(if z > 0.0 { 1.0 } else { 0.0 });
    }
    WalkSample { steps: mean_se(&steps), accuracy: mean_se(&hits) }
}

/// Simulated accuracy of `r` votes, ties scored one half.
pub fn mc_unbounded(pop: &SkillDistribution, r: usize, n: usize, seed: u64) -> (f64, f64) {
    let mut rng = SimRng::seed_from_u64(seed);
    let scores: Vec<f64> = (0..n)
        .map(|_| {
            let z: f64 = (0..r).map(|_| draw_increment(pop, &mut rng)).sum();
            if z.abs() < 1e-9 {
                0.5
            } else if z > 0.0 {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    mean_se(&scores)
}

/// Direct transcription of one mean-field round on a list of
/// `(task, worker, label)` triples, for cross-checking.
pub fn naive_round(
    votes: &[(usize, usize, i8)],
    tasks: usize,
    skills: &[f64],
    alpha: f64,
    beta: f64,
) -> (Vec<f64>, Vec<f64>) {
    let mu: Vec<f64> = (0..tasks)
        .map(|i| {
            let (mut a, mut b) = (1.0, 1.0);
            for &(t, w, l) in votes.iter().filter(|v| v.0 == i) {
                let _ = t;
                let p = skills[w];
                if l > 0 {
                    a *= p;
                    b *= 1.0 - p;
                } else {
                    a *= 1.0 - p;
                    b *= p;
                }
            }
            a / (a + b)
        })
        .collect();
    let p: Vec<f64> = (0..skills.len())
        .map(|j| {
            let mine: Vec<_> = votes.iter().filter(|v| v.1 == j).collect();
            let agree: f64 = mine
                .iter()
                .map(|&&(t, _, l)| if l > 0 { mu[t] } else { 1.0 - mu[t] })
                .sum();
            (agree + alpha) / (mine.len() as f64 + alpha + beta)
        })
        .collect();
    (mu, p)
}
