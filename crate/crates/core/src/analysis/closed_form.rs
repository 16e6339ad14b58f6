//! Closed forms for a homogeneous crowd, where every worker has skill `p` and
//! weighted aggregation reduces to majority voting.

use crate::aggregation::logit;
use crate::error::{Error, Result};

/// Expected votes per task under active learning with threshold `z_b`:
/// `(2 e^z_B / (1 + e^z_B) - 1) z_B / ((2p - 1) ln(p / (1 - p)))`.
pub fn homogeneous_expected_steps(p: f64, z_b: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain(format!("skill {p} outside (0,1)")));
    }
    if p == 0.5 {
        return Err(Error::Domain("zero drift at p = 0.5".into()));
    }
    if !(z_b > 0.0) {
        return Err(Error::Precondition(format!("threshold {z_b} must be positive")));
    }
    // 2 e^z/(1+e^z) - 1 == tanh(z/2)
    Ok((0.5 * z_b).tanh() * z_b / ((2.0 * p - 1.0) * logit(p)))
}

/// Majority-vote accuracy of an odd number `r_u` of votes:
/// `sum_{r >= ceil(r_u/2)} C(r_u, r) p^r (1-p)^(r_u-r)`.
pub fn homogeneous_uniform_accuracy(p: f64, r_u: usize) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain(format!("skill {p} outside (0,1)")));
    }
    if r_u % 2 == 0 {
        return Err(Error::Precondition(format!(
            "r_u must be odd, got {r_u}"
        )));
    }
    let q = 1.0 - p;
    let mut total = 0.0;
    let mut coeff = 1.0; // C(r_u, r) for r = r_u, r_u - 1, ...
    for r in (r_u.div_ceil(2)..=r_u).rev() {
        total += coeff * p.powi(r as i32) * q.powi((r_u - r) as i32);
        coeff = coeff * r as f64 / (r_u - r + 1) as f64;
    }
    Ok(total)
}
