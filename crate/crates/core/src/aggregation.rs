//! Label fusion: the weighted log-odds rule, its confidence, and the
//! majority-vote special case for homogeneous crowds.

use rand::Rng;

use crate::domain::Label;
use crate::error::{Error, Result};

/// `1 / (1 + e^{-z})` without overflow for large `|z|`.
pub fn logistic(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(p / (1 - p))`, computed as `ln p - ln(1 - p)`.
pub fn logit(p: f64) -> f64 {
    p.ln() - (-p).ln_1p()
}

/// `ln(1 + e^x)`.
pub fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// Vote weight `ln(p/(1-p))` of a worker with skill `p`.
pub fn weight(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain(format!(
            "skill {p} gives an infinite vote weight"
        )));
    }
    Ok(logit(p))
}

/// Weighted sum of votes, `sum_j l_ij * ln(p_j / (1 - p_j))`.
pub fn log_odds(labels: &[(Label, f64)]) -> Result<f64> {
    labels
        .iter()
        .try_fold(0.0, |acc, &(l, p)| Ok(acc + l.sign() * weight(p)?))
}

/// Sign of `z`; an exact zero is settled by a fair coin from `rng`.
pub fn classify<R: Rng + ?Sized>(z: f64, rng: &mut R) -> Label {
    if z > 0.0 {
        Label::Pos
    } else if z < 0.0 {
        Label::Neg
    } else {
        Label::coin(rng)
    }
}

/// Probability that the prediction `sign(z)` is correct: `e^|z| / (1 + e^|z|)`.
pub fn confidence(z: f64) -> f64 {
    logistic(z.abs())
}

/// Unweighted vote; ties use the same coin as [`classify`].
pub fn majority_vote<R: Rng + ?Sized>(labels: &[Label], rng: &mut R) -> Label {
    let sum: i64 = labels.iter().map(|l| i64::from(l.value())).sum();
    classify(sum as f64, rng)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AggregateResult {
    pub logodds: f64,
    pub predicted: Label,
    pub confidence: f64,
}

/// Runs the full aggregation rule on one task's votes.
pub fn aggregate<R: Rng + ?Sized>(labels: &[(Label, f64)], rng: &mut R) -> Result<AggregateResult> {
    let z = log_odds(labels)?;
    Ok(AggregateResult {
        logodds: z,
        predicted: classify(z, rng),
        confidence: confidence(z),
    })
}
