//! Random walks of a task's log-odds.
//!
//! Under active learning a task keeps receiving votes until `|z| >= z_B`,
//! which makes its log-odds a walk absorbed at `±z_B`. Under uniform
//! allocation it receives exactly `r_u` votes, an unbounded walk of fixed
//! length. Both are propagated here by repeated convolution with the vote
//! density.

use super::closed_form::homogeneous_expected_steps;
use super::convolve::{ConvolutionMethod, Convolver};
use super::density::Density;
use crate::aggregation::confidence;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WalkOptions {
    /// Stop once the mass still inside `(-z_B, z_B)` drops below this.
    pub tol: f64,
    pub max_steps: usize,
    pub method: ConvolutionMethod,
}

impl Default for WalkOptions {
    fn default() -> Self {
        WalkOptions {
            tol: 1e-6,
            max_steps: 100_000,
            method: ConvolutionMethod::Auto,
        }
    }
}

/// Outcome of a bounded walk.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WalkReport {
    /// Expected number of votes until absorption, `E(r_a)`.
    pub expected_steps: f64,
    /// Probability of absorption at `+z_B` given a positive true label.
    pub exit_accuracy: f64,
    /// Mass still unabsorbed when the series was cut.
    pub residual_mass: f64,
    pub steps_computed: usize,
    pub converged: bool,
    pub exit_mass_upper: f64,
    pub exit_mass_lower: f64,
}

// Positions this close (relatively) to a lattice threshold count as reaching it.
const LATTICE_REL_TOL: f64 = 1e-9;

// Fractions of the support point at offset `j` lying below -z_B, inside
// (-z_B, z_B) and above z_B. Grid points own a cell of width `spacing`;
// lattice points are exact atoms.
#[derive(Debug, Clone, Copy)]
struct Boundary {
    spacing: f64,
    z_b: f64,
    cells: bool,
}

impl Boundary {
    fn new(density: &Density, z_b: f64) -> Self {
        match density {
            Density::Grid(g) => Boundary { spacing: g.step(), z_b, cells: true },
            Density::Lattice(l) => Boundary { spacing: l.unit(), z_b, cells: false },
        }
    }

    // Largest |offset| with a nonzero inside fraction.
    fn inner_reach(&self) -> usize {
        let r = if self.cells {
            (self.z_b / self.spacing + 0.5).ceil() - 1.0
        } else {
            (self.z_b * (1.0 - LATTICE_REL_TOL) / self.spacing).ceil() - 1.0
        };
        r.max(0.0) as usize
    }

    // (below, inside, above)
    fn split(&self, j: i64) -> (f64, f64, f64) {
        let x = j as f64 * self.spacing;
        if self.cells {
            let h = self.spacing;
            let above = ((x + 0.5 * h - self.z_b) / h).clamp(0.0, 1.0);
            let below = ((-self.z_b - (x - 0.5 * h)) / h).clamp(0.0, 1.0);
            (below, (1.0 - above - below).max(0.0), above)
        } else {
            let edge = self.z_b * (1.0 - LATTICE_REL_TOL);
            if x >= edge {
                (0.0, 0.0, 1.0)
            } else if x <= -edge {
                (1.0, 0.0, 0.0)
            } else {
                (0.0, 1.0, 0.0)
            }
        }
    }
}

fn kernel(density: &Density) -> (Vec<f64>, usize) {
    match density {
        Density::Grid(g) => (g.masses(), g.half_points()),
        Density::Lattice(l) => (l.masses().to_vec(), l.half_points()),
    }
}

fn mean_of(density: &Density) -> f64 {
    let atoms = density.atoms();
    let mass: f64 = atoms.iter().map(|(_, m)| m).sum();
    atoms.iter().map(|(z, m)| z * m).sum::<f64>() / mass
}

/// Expected absorption time and exit side of the walk started at 0 with
/// increments drawn from `votes`, absorbed once `|z| >= z_b`.
///
/// The series over steps is cut when the unabsorbed mass drops below
/// `opts.tol`; the remainder is charged `k + 2 z_B / mean` further steps and
/// split between the two exits in proportion to what has exited so far.
pub fn bounded_walk(votes: &Density, z_b: f64, opts: WalkOptions) -> Result<WalkReport> {
    if !(z_b > 0.0 && z_b.is_finite()) {
        return Err(Error::Precondition(format!("threshold {z_b} must be positive")));
    }
    if !(opts.tol > 0.0) {
        return Err(Error::Precondition("walk tolerance must be positive".into()));
    }
    let boundary = Boundary::new(votes, z_b);
    let reach = boundary.inner_reach();
    let (kernel, kernel_half) = kernel(votes);
    let mut conv = Convolver::new(kernel.clone(), opts.method);

    let mut current = kernel;
    let mut center = kernel_half;
    let mut survivors = vec![0.0; 2 * reach + 1];
    let (mut upper, mut lower, mut expected) = (0.0, 0.0, 0.0);
    let mut surviving = 0.0;
    let mut k = 0;
    let mut converged = false;

    while k < opts.max_steps {
        k += 1;
        survivors.iter_mut().for_each(|s| *s = 0.0);
        let (mut up_k, mut low_k) = (0.0, 0.0);
        for (i, &m) in current.iter().enumerate() {
            if m == 0.0 {
                continue;
            }
            let j = i as i64 - center as i64;
            let (below, inside, above) = boundary.split(j);
            up_k += m * above;
            low_k += m * below;
            if inside > 0.0 && j.unsigned_abs() as usize <= reach {
                survivors[(j + reach as i64) as usize] = m * inside;
            }
        }
        upper += up_k;
        lower += low_k;
        expected += k as f64 * (up_k + low_k);
        surviving = survivors.iter().sum();
        if surviving < opts.tol {
            converged = true;
            break;
        }
        current = conv.apply(&survivors);
        center = reach + kernel_half;
    }

    let mean = mean_of(votes);
    let tail_steps = if mean > 0.0 { k as f64 + 2.0 * z_b / mean } else { k as f64 };
    expected += surviving.max(0.0) * tail_steps;
    let exited = upper + lower;
    let up_share = if exited > 0.0 { upper / exited } else { 0.5 };
    Ok(WalkReport {
        expected_steps: expected,
        exit_accuracy: upper + surviving.max(0.0) * up_share,
        residual_mass: surviving.max(0.0),
        steps_computed: k,
        converged,
        exit_mass_upper: upper,
        exit_mass_lower: lower,
    })
}

/// Accuracy of `r_u` votes aggregated by the weighted rule: the mass of the
/// `r_u`-fold convolution of `votes` above zero, with mass exactly at zero
/// counted half (the tie coin).
pub fn unbounded_accuracy(votes: &Density, r_u: usize) -> Result<f64> {
    unbounded_accuracy_with(votes, r_u, ConvolutionMethod::Auto)
}

pub fn unbounded_accuracy_with(votes: &Density, r_u: usize, method: ConvolutionMethod) -> Result<f64> {
    if r_u == 0 {
        return Err(Error::Precondition("at least one vote per task is needed".into()));
    }
    let (kernel, half) = kernel(votes);
    let mut conv = Convolver::new(kernel.clone(), method);
    let mut sum = kernel;
    for _ in 1..r_u {
        sum = conv.apply(&sum);
    }
    // the r_u-fold sum is centred at r_u * half
    let center = r_u * half;
    let above: f64 = sum[center + 1..].iter().sum();
    Ok(above + 0.5 * sum[center])
}

/// A threshold matched to a labelling budget.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Calibration {
    pub target_steps: f64,
    pub z_threshold: f64,
    pub report: WalkReport,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrateOptions {
    /// Accept when `|E(r_a) - r_u| <= rel_tol * r_u`.
    pub rel_tol: f64,
    pub max_iter: usize,
    /// How many times the initial bracket may be doubled.
    pub max_expansions: usize,
    pub walk: WalkOptions,
}

impl Default for CalibrateOptions {
    fn default() -> Self {
        CalibrateOptions {
            rel_tol: 1e-3,
            max_iter: 200,
            max_expansions: 3,
            walk: WalkOptions::default(),
        }
    }
}

/// Finds `z_B` with `E(r_a) = r_u` by bisection.
///
/// For a homogeneous crowd (two-atom lattice) the exact walk's `E(r_a)` is a
/// step function of `z_B`, so the inversion runs on the closed form, which
/// interpolates it and is exact at lattice thresholds; the reported exit
/// accuracy is then the no-overshoot value `e^z_B / (1 + e^z_B)`. For `r_u = 1`
/// such a crowd needs any threshold below one vote weight and half the weight
/// is returned.
pub fn calibrate(votes: &Density, r_u: f64, opts: CalibrateOptions) -> Result<Calibration> {
    if !(r_u >= 1.0) || !r_u.is_finite() {
        return Err(Error::Unattainable {
            target: r_u,
            lo: 0.0,
            hi: 0.0,
            e_lo: 1.0,
            e_hi: 1.0,
        });
    }
    if let Some(p) = votes.as_lattice().and_then(|l| l.homogeneous_skill()) {
        return calibrate_homogeneous(votes, p, r_u, opts);
    }

    let eval = |z: f64| {
        let rep = bounded_walk(votes, z, opts.walk)?;
        if rep.converged {
            Ok(rep)
        } else {
            Err(Error::NotConverged(format!(
                "walk at z_B = {z} still holds {:.3e} after {} steps",
                rep.residual_mass, rep.steps_computed
            )))
        }
    };
    let tol = opts.rel_tol * r_u;
    let mut lo = 0.0;
    let mut e_lo = 1.0;
    let mut hi = votes.half_width();
    let mut hi_report = eval(hi)?;
    let mut expansions = 0;
    while hi_report.expected_steps < r_u - tol {
        if expansions == opts.max_expansions {
            return Err(Error::Unattainable {
                target: r_u,
                lo,
                hi,
                e_lo,
                e_hi: hi_report.expected_steps,
            });
        }
        lo = hi;
        e_lo = hi_report.expected_steps;
        hi *= 2.0;
        hi_report = eval(hi)?;
        expansions += 1;
    }
    if (hi_report.expected_steps - r_u).abs() <= tol {
        return Ok(Calibration { target_steps: r_u, z_threshold: hi, report: hi_report });
    }
    for _ in 0..opts.max_iter {
        let mid = 0.5 * (lo + hi);
        let rep = eval(mid)?;
        if (rep.expected_steps - r_u).abs() <= tol {
            return Ok(Calibration { target_steps: r_u, z_threshold: mid, report: rep });
        }
        if rep.expected_steps < r_u {
            lo = mid;
            e_lo = rep.expected_steps;
        } else {
            hi = mid;
            hi_report = rep;
        }
    }
    Err(Error::Unattainable {
        target: r_u,
        lo,
        hi,
        e_lo,
        e_hi: hi_report.expected_steps,
    })
}

fn calibrate_homogeneous(votes: &Density, p: f64, r_u: f64, opts: CalibrateOptions) -> Result<Calibration> {
    let unit = votes.as_lattice().map(|l| l.unit()).unwrap_or(1.0);
    if (r_u - 1.0).abs() < 1e-12 {
        let z = 0.5 * unit;
        let report = bounded_walk(votes, z, opts.walk)?;
        return Ok(Calibration { target_steps: r_u, z_threshold: z, report });
    }
    let steps = |z: f64| homogeneous_expected_steps(p, z);
    let mut hi = unit.max(1.0);
    let mut guard = 0;
    while steps(hi)? < r_u {
        hi *= 2.0;
        guard += 1;
        if guard > 60 {
            return Err(Error::Unattainable { target: r_u, lo: 0.0, hi, e_lo: 0.0, e_hi: steps(hi)? });
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if steps(mid)? < r_u {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-13 * hi {
            break;
        }
    }
    let z = 0.5 * (lo + hi);
    let e = steps(z)?;
    let acc = confidence(z);
    Ok(Calibration {
        target_steps: r_u,
        z_threshold: z,
        report: WalkReport {
            expected_steps: e,
            exit_accuracy: acc,
            residual_mass: 0.0,
            steps_computed: 0,
            converged: true,
            exit_mass_upper: acc,
            exit_mass_lower: 1.0 - acc,
        },
    })
}
