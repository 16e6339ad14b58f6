use rayon::prelude::*;
use statrs::distribution::{Beta as BetaDist, Continuous};

use super::config::Config;
use super::output::OutputRow;
use crate::analysis::{
    calibrate, chernoff_bound, gambler_ruin_bound, homogeneous_expected_steps,
    homogeneous_uniform_accuracy, moments_with_gamma, population_vote_density, rho_root,
    unbounded_accuracy, weight_density, CalibrateOptions, Calibration, Density, WalkOptions,
    TRUNCATION_WARNING,
};
use crate::domain::{ExperimentConfig, SkillDistribution};
use crate::error::{Error, Result};
use crate::sim::{replication_stats, run_once, RunResult};

/// Rows produced by a command plus anything worth telling the user.
#[derive(Debug, Clone, Default)]
pub struct Report {
    pub rows: Vec<OutputRow>,
    pub warnings: Vec<String>,
    /// First error of a partially failed command; the rows are still valid.
    pub failure: Option<Error>,
}

struct RowSink<'a> {
    id: &'a str,
    seed: u64,
    rows: Vec<OutputRow>,
}

impl RowSink<'_> {
    fn push(&mut self, axis: (&str, f64), policy: &str, metric: &str, value: f64, stderr: f64) {
        debug_assert!(super::output::METRICS.contains(&metric), "{metric}");
        self.rows.push(OutputRow {
            experiment_id: self.id.to_string(),
            axis_name: axis.0.to_string(),
            axis_value: axis.1,
            policy: policy.to_string(),
            metric_name: metric.to_string(),
            value,
            stderr,
            seed: self.seed,
        });
    }
}

fn calibrate_options(cfg: &Config) -> CalibrateOptions {
    CalibrateOptions {
        walk: WalkOptions {
            tol: cfg.analysis.tol,
            max_steps: cfg.analysis.max_steps,
            ..WalkOptions::default()
        },
        ..CalibrateOptions::default()
    }
}

fn vote_density_for(cfg: &Config, warnings: &mut Vec<String>) -> Result<(SkillDistribution, Density)> {
    let pop = cfg.population.to_distribution()?;
    let votes = population_vote_density(&pop, cfg.analysis.grid()?)?;
    if votes.truncated_mass() > TRUNCATION_WARNING {
        warnings.push(format!(
            "grid [-{h}, {h}] drops {:.3e} of the vote mass; widen analysis.half_width",
            votes.truncated_mass(),
            h = cfg.analysis.half_width
        ));
    }
    Ok((pop, votes))
}

/// `Ok(None)` when the target cannot be reached.
fn try_calibrate(votes: &Density, r_u: f64, opts: CalibrateOptions) -> Result<Option<Calibration>> {
    match calibrate(votes, r_u, opts) {
        Ok(c) => Ok(Some(c)),
        Err(Error::Unattainable { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

fn as_count(r_u: f64) -> Option<usize> {
    (r_u >= 1.0 && r_u.fract() == 0.0 && r_u < 1e9).then_some(r_u as usize)
}

fn push_calibration(sink: &mut RowSink<'_>, r_u: f64, cal: Option<&Calibration>) {
    let axis = ("r_u", r_u);
    match cal {
        Some(c) => {
            sink.push(axis, "active", "calibrated", 1.0, 0.0);
            sink.push(axis, "active", "z_threshold", c.z_threshold, 0.0);
            sink.push(axis, "active", "expected_steps", c.report.expected_steps, 0.0);
            sink.push(axis, "active", "residual_mass", c.report.residual_mass, 0.0);
        }
        None => {
            sink.push(axis, "active", "calibrated", 0.0, 0.0);
            sink.push(axis, "active", "z_threshold", f64::NAN, 0.0);
            sink.push(axis, "active", "expected_steps", f64::NAN, 0.0);
        }
    }
}

/// Theory tables: moments, calibrated thresholds, both walks, both bounds
/// and, for a homogeneous crowd, the closed forms.
pub fn cmd_analyze(cfg: &Config) -> Result<Report> {
    let mut report = Report::default();
    let (pop, votes) = vote_density_for(cfg, &mut report.warnings)?;
    let mut sink = RowSink { id: &cfg.id, seed: cfg.seed, rows: Vec::new() };

    let m = moments_with_gamma(&votes, cfg.analysis.gamma_factor);
    let rho = rho_root(&votes)?;
    let pop_axis = ("population", 0.0);
    sink.push(pop_axis, "population", "mean", m.mean, 0.0);
    sink.push(pop_axis, "population", "variance", m.variance, 0.0);
    sink.push(pop_axis, "population", "support_bound", m.support_bound, 0.0);
    sink.push(pop_axis, "population", "rho0", rho.numeric, 0.0);
    sink.push(pop_axis, "population", "rho0_approx", rho.approx, 0.0);
    sink.push(pop_axis, "population", "truncated_mass", votes.truncated_mass(), 0.0);

    if cfg.analysis.densities {
        push_densities(cfg, &pop, &votes, &mut sink)?;
    }

    let opts = calibrate_options(cfg);
    let homogeneous = match pop {
        SkillDistribution::Dirac { p } => Some(p),
        _ => None,
    };
    let calibrations = cfg
        .analysis
        .r_u
        .par_iter()
        .map(|&r_u| try_calibrate(&votes, r_u, opts))
        .collect::<Result<Vec<_>>>()?;
    for (&r_u, cal) in cfg.analysis.r_u.iter().zip(&calibrations) {
        let axis = ("r_u", r_u);
        push_calibration(&mut sink, r_u, cal.as_ref());
        if let Some(c) = cal {
            sink.push(axis, "active", "accuracy", c.report.exit_accuracy, 0.0);
            if m.mean > 0.0 {
                sink.push(axis, "active", "bound_upper", gambler_ruin_bound(&m, rho.numeric, c.z_threshold)?, 0.0);
            }
            if let Some(p) = homogeneous {
                let e = homogeneous_expected_steps(p, c.z_threshold)?;
                sink.push(axis, "active_closed_form", "expected_steps", e, 0.0);
            }
        } else {
            report.warnings.push(format!("r_u = {r_u} is not attainable by any threshold"));
        }
        if let Some(n) = as_count(r_u) {
            sink.push(axis, "uniform", "accuracy", unbounded_accuracy(&votes, n)?, 0.0);
            sink.push(axis, "uniform", "bound_lower_accuracy", 1.0 - chernoff_bound(&m, n)?, 0.0);
            if let (Some(p), true) = (homogeneous, n % 2 == 1) {
                let a = homogeneous_uniform_accuracy(p, n)?;
                sink.push(axis, "uniform_closed_form", "accuracy", a, 0.0);
            }
        }
    }
    if !cfg.analysis.homogeneous_skills.is_empty() {
        push_homogeneous(cfg, &mut sink, &mut report.warnings)?;
    }
    report.rows = sink.rows;
    Ok(report)
}

/// Active against uniform accuracy for homogeneous crowds of each skill.
fn push_homogeneous(cfg: &Config, sink: &mut RowSink<'_>, warnings: &mut Vec<String>) -> Result<()> {
    let r_u = cfg.analysis.r_u[0];
    let opts = calibrate_options(cfg);
    let rows = cfg
        .analysis
        .homogeneous_skills
        .par_iter()
        .map(|&p| {
            let votes = population_vote_density(&SkillDistribution::dirac(p)?, cfg.analysis.grid()?)?;
            let cal = try_calibrate(&votes, r_u, opts)?;
            // weighted voting turns an adversarial crowd into its mirror image
            let uniform = match as_count(r_u) {
                Some(n) => Some(unbounded_accuracy(&votes, n)?),
                None => None,
            };
            Ok((p, cal, uniform))
        })
        .collect::<Result<Vec<_>>>()?;
    for (p, cal, uniform) in rows {
        let axis = ("p", p);
        match cal {
            Some(c) => {
                sink.push(axis, "active", "z_threshold", c.z_threshold, 0.0);
                sink.push(axis, "active", "accuracy", c.report.exit_accuracy, 0.0);
            }
            None => warnings.push(format!("p = {p}: r_u = {r_u} is not attainable")),
        }
        if let Some(a) = uniform {
            sink.push(axis, "uniform", "accuracy", a, 0.0);
        }
    }
    Ok(())
}

fn push_densities(cfg: &Config, pop: &SkillDistribution, votes: &Density, sink: &mut RowSink<'_>) -> Result<()> {
    let stride = cfg.analysis.density_stride;
    let weights = weight_density(pop, cfg.analysis.grid()?)?;
    for (metric, d) in [("weight_density", &weights), ("vote_density", votes)] {
        match d {
            Density::Grid(g) => {
                for i in (0..g.len()).step_by(stride) {
                    sink.push(("z", g.z(i)), "population", metric, g.values()[i], 0.0);
                }
            }
            Density::Lattice(_) => {
                for (z, mass) in d.atoms().into_iter().filter(|(_, m)| *m > 0.0) {
                    sink.push(("z", z), "population", metric, mass, 0.0);
                }
            }
        }
    }
    match pop {
        SkillDistribution::Beta { alpha, beta } => {
            let law = BetaDist::new(*alpha, *beta).map_err(|e| Error::InvalidDistribution(e.to_string()))?;
            for k in 1..200 {
                let p = k as f64 / 200.0;
                sink.push(("p", p), "population", "skill_density", law.pdf(p), 0.0);
            }
        }
        SkillDistribution::Dirac { p } => sink.push(("p", *p), "population", "skill_density", 1.0, 0.0),
        SkillDistribution::Empirical { points } => {
            for &(p, mass) in points {
                sink.push(("p", p), "population", "skill_density", mass, 0.0);
            }
        }
    }
    Ok(())
}

/// `(r_u, z_B, E(r_a), residual)` for every configured `r_u`. Unattainable
/// targets are flagged rather than fatal.
pub fn cmd_calibrate(cfg: &Config) -> Result<Report> {
    let mut report = Report::default();
    let (_, votes) = vote_density_for(cfg, &mut report.warnings)?;
    let opts = calibrate_options(cfg);
    let calibrations = cfg
        .analysis
        .r_u
        .par_iter()
        .map(|&r_u| try_calibrate(&votes, r_u, opts))
        .collect::<Result<Vec<_>>>()?;
    let mut sink = RowSink { id: &cfg.id, seed: cfg.seed, rows: Vec::new() };
    for (&r_u, cal) in cfg.analysis.r_u.iter().zip(&calibrations) {
        if cal.is_none() {
            report.warnings.push(format!("r_u = {r_u} is not attainable by any threshold"));
        }
        push_calibration(&mut sink, r_u, cal.as_ref());
    }
    report.rows = sink.rows;
    Ok(report)
}

/// Every replication of `cfg`, in replication order.
pub fn run_replications(cfg: &ExperimentConfig) -> Result<Vec<RunResult>> {
    cfg.validate()?;
    (0..cfg.replications as u64)
        .into_par_iter()
        .map(|r| run_once(cfg, r))
        .collect()
}

fn unlabeled_fraction(r: &RunResult) -> f64 {
    let m: usize = r.labels_per_task.iter().sum();
    r.labels_per_task.first().copied().unwrap_or(0) as f64 / m as f64
}

/// Monte Carlo accuracy per policy, at one point or along a sweep.
pub fn cmd_simulate(cfg: &Config) -> Result<Report> {
    let base = cfg.base_experiment()?;
    if base.replications < 2 {
        return Err(Error::Config(format!(
            "experiment.replications must be at least 2, got {}",
            base.replications
        )));
    }
    let mut report = Report::default();
    let mut sink = RowSink { id: &cfg.id, seed: cfg.seed, rows: Vec::new() };
    let points: Vec<(&str, f64, Option<crate::sim::SweepAxis>)> = match &cfg.sweep {
        Some(s) => {
            let axis = s.axis()?;
            s.points.iter().map(|&v| (axis.name(), v, Some(axis))).collect()
        }
        None => vec![("none", 0.0, None)],
    };
    for (axis_name, value, axis) in points {
        for policy in cfg.policies() {
            let with_policy = ExperimentConfig { policy, ..base.clone() };
            let cfg_at = match axis {
                Some(a) => a.apply(&with_policy, value),
                None => with_policy.validate().map(|_| with_policy),
            };
            let outcome = cfg_at.and_then(|c| run_replications(&c));
            match outcome {
                Ok(runs) => {
                    let acc: Vec<f64> = runs.iter().map(|r| r.accuracy).collect();
                    let s = replication_stats(&acc);
                    sink.push((axis_name, value), policy.name(), "accuracy", s.mean_accuracy, s.standard_error);
                    let unl: Vec<f64> = runs.iter().map(unlabeled_fraction).collect();
                    let u = replication_stats(&unl);
                    sink.push((axis_name, value), policy.name(), "unlabeled_fraction", u.mean_accuracy, u.standard_error);
                }
                Err(e) => {
                    report.warnings.push(format!("{axis_name} = {value}, {}: {e}", policy.name()));
                    report.failure.get_or_insert(e);
                }
            }
        }
    }
    report.rows = sink.rows;
    Ok(report)
}
