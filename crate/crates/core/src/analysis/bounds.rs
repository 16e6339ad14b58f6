//! Moment-based bounds: the gambler's-ruin bound on active learning's label
//! cost and the concentration bound on uniform allocation's error.

use super::density::Density;
use crate::error::{Error, Result};

/// Default support bound as a multiple of the standard deviation.
pub const DEFAULT_GAMMA_FACTOR: f64 = 5.0;

/// First two moments of a vote density plus a bound on its support.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentSummary {
    pub mean: f64,
    pub variance: f64,
    /// `gamma`, with the density assumed to live in `[-gamma, gamma]`.
    pub support_bound: f64,
}

impl MomentSummary {
    pub fn with_support_bound(self, gamma: f64) -> Self {
        MomentSummary { support_bound: gamma, ..self }
    }

    pub fn std_dev(&self) -> f64 {
        self.variance.sqrt()
    }
}

/// Mean and variance by quadrature over the density's support points, with
/// `gamma = 5 sd`.
pub fn moments(votes: &Density) -> MomentSummary {
    moments_with_gamma(votes, DEFAULT_GAMMA_FACTOR)
}

pub fn moments_with_gamma(votes: &Density, gamma_factor: f64) -> MomentSummary {
    let atoms = votes.atoms();
    let mass: f64 = atoms.iter().map(|(_, m)| m).sum();
    let mean = atoms.iter().map(|(z, m)| z * m).sum::<f64>() / mass;
    let variance = atoms.iter().map(|(z, m)| (z - mean).powi(2) * m).sum::<f64>() / mass;
    MomentSummary {
        mean,
        variance,
        support_bound: gamma_factor * variance.sqrt(),
    }
}

/// Root `rho_0 != 1` of `E[rho^X] = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RhoRoot {
    /// Solved numerically.
    pub numeric: f64,
    /// The moment approximation `2 E / Var`.
    pub approx: f64,
}

// ln E[e^{sX}] via log-sum-exp.
fn cumulant(atoms: &[(f64, f64)], ln_mass: f64, s: f64) -> f64 {
    let peak = atoms
        .iter()
        .filter(|(_, m)| *m > 0.0)
        .map(|(z, _)| s * z)
        .fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = atoms
        .iter()
        .filter(|(_, m)| *m > 0.0)
        .map(|(z, m)| m * (s * z - peak).exp())
        .sum();
    peak + sum.ln() - ln_mass
}

/// Solves `E[rho^X] = 1` for `rho != 1` by bisection on `s = ln rho`.
pub fn rho_root(votes: &Density) -> Result<RhoRoot> {
    let m = moments(votes);
    if m.mean == 0.0 || !m.mean.is_finite() {
        return Err(Error::Precondition("rho_0 needs a nonzero mean".into()));
    }
    let atoms = votes.atoms();
    let ln_mass = atoms.iter().map(|(_, w)| w).sum::<f64>().ln();
    let phi = |s: f64| cumulant(&atoms, ln_mass, s);
    // The cumulant is convex with slope `mean` at 0, so the other root lies
    // on the side opposite the drift.
    let dir = -m.mean.signum();
    let mut near = dir * (m.mean.abs() / m.variance.max(f64::MIN_POSITIVE)).min(1.0);
    let mut halvings = 0;
    while phi(near) >= 0.0 {
        near *= 0.5;
        halvings += 1;
        if halvings > 60 {
            return Err(Error::NoSignChange("cumulant never negative near 0".into()));
        }
    }
    let mut far = 2.0 * near;
    while phi(far) <= 0.0 {
        far *= 2.0;
        if far.abs() > 1e4 {
            return Err(Error::NoSignChange(
                "distribution has no mass against its drift".into(),
            ));
        }
    }
    let (mut a, mut b) = (near, far);
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if phi(mid) < 0.0 {
            a = mid;
        } else {
            b = mid;
        }
        if (b - a).abs() < 1e-15 * b.abs().max(1.0) {
            break;
        }
    }
    Ok(RhoRoot {
        numeric: (0.5 * (a + b)).exp(),
        approx: 2.0 * m.mean / m.variance,
    })
}

/// Upper bound on `E(r_a)` for threshold `z_b`:
/// `((2 z_B + gamma) (rho^(z_B + gamma) - 1) / (rho^(2 z_B + gamma) - 1) - z_B) / E`.
pub fn gambler_ruin_bound(m: &MomentSummary, rho0: f64, z_b: f64) -> Result<f64> {
    if !(rho0 > 0.0) || rho0 == 1.0 {
        return Err(Error::Precondition(format!("rho_0 = {rho0} must be positive and != 1")));
    }
    if !(m.mean > 0.0) {
        return Err(Error::Precondition("the bound needs a positive drift".into()));
    }
    let g = m.support_bound;
    let ratio = (rho0.powf(z_b + g) - 1.0) / (rho0.powf(2.0 * z_b + g) - 1.0);
    Ok(((2.0 * z_b + g) * ratio - z_b) / m.mean)
}

/// `1 / (1 + r_u E^2 / Var)`, a Cantelli bound on the probability that `r_u`
/// votes aggregate to the wrong sign. `1 -` this is a lower bound on accuracy.
pub fn chernoff_bound(m: &MomentSummary, r_u: usize) -> Result<f64> {
    if m.mean == 0.0 {
        return Err(Error::Precondition("the bound needs a nonzero mean".into()));
    }
    if r_u == 0 {
        return Err(Error::Precondition("r_u must be positive".into()));
    }
    Ok(1.0 / (1.0 + r_u as f64 * m.mean * m.mean / m.variance))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::density::{population_vote_density, GridSpec};
    use crate::domain::SkillDistribution;

    fn votes(pop: SkillDistribution) -> Density {
        population_vote_density(&pop, GridSpec::default()).unwrap()
    }

    #[test]
    fn dirac_moments() {
        let m = moments(&votes(SkillDistribution::dirac(0.8).unwrap()));
        let l4 = 4f64.ln();
        assert!((m.mean - 0.6 * l4).abs() < 1e-12);
        assert!((m.mean - 0.8318).abs() < 1e-4);
        assert!((m.variance - l4 * l4 * (1.0 - 0.36)).abs() < 1e-12);
        assert!((m.variance - 1.2296).abs() < 1e-3);
        assert!((m.support_bound - 5.0 * m.variance.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn spammer_moments() {
        let m = moments(&votes(SkillDistribution::dirac(0.5).unwrap()));
        assert_eq!(m.mean, 0.0);
        assert!(rho_root(&votes(SkillDistribution::dirac(0.5).unwrap())).is_err());
    }

    #[test]
    fn dirac_rho_root() {
        let r = rho_root(&votes(SkillDistribution::dirac(0.8).unwrap())).unwrap();
        // 0.8 y + 0.2 / y = 1 with y = rho^{ln 4}
        assert!((r.numeric.powf(4f64.ln()) - 0.25).abs() < 1e-12);
        assert!(r.numeric < 1.0);
    }

    #[test]
    fn rho_root_for_negative_drift_is_above_one() {
        // hand-built two-point law with negative mean
        let l = crate::analysis::density::LatticePdf::new(1.0, vec![0.7, 0.0, 0.3]).unwrap();
        let r = rho_root(&Density::Lattice(l)).unwrap();
        assert!(r.numeric > 1.0);
        let lhs = 0.7 / r.numeric + 0.3 * r.numeric;
        assert!((lhs - 1.0).abs() < 1e-12);
    }

    #[test]
    fn one_sided_law_has_no_root() {
        let l = crate::analysis::density::LatticePdf::new(1.0, vec![0.0, 0.4, 0.6]).unwrap();
        assert!(matches!(rho_root(&Density::Lattice(l)), Err(Error::NoSignChange(_))));
    }

    #[test]
    fn chernoff_vanishes_asymptotically() {
        let m = moments(&votes(SkillDistribution::beta(4.0, 2.0).unwrap()));
        assert!(chernoff_bound(&m, 1_000_000).unwrap() < 1e-5);
    }

    #[test]
    fn bound_preconditions() {
        let m = MomentSummary { mean: 0.5, variance: 1.0, support_bound: 5.0 };
        assert!(gambler_ruin_bound(&m, 1.0, 2.0).is_err());
        assert!(gambler_ruin_bound(&m, -0.3, 2.0).is_err());
        let neg = MomentSummary { mean: -0.5, ..m };
        assert!(gambler_ruin_bound(&neg, 0.3, 2.0).is_err());
        let zero = MomentSummary { mean: 0.0, ..m };
        assert!(chernoff_bound(&zero, 3).is_err());
    }
}
