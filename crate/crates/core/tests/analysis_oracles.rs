mod common;

use common::{enumerate_majority, first_step, mc_bounded, mc_unbounded};
use crowd_alloc::aggregation::logit;
use crowd_alloc::analysis::*;
use crowd_alloc::SkillDistribution;

fn votes(pop: &SkillDistribution) -> Density {
    population_vote_density(pop, GridSpec::default()).unwrap()
}

fn beta42() -> SkillDistribution {
    SkillDistribution::beta(4.0, 2.0).unwrap()
}

#[test]
fn uniform_accuracy_matches_enumeration() {
    for r in [1usize, 3, 5, 7, 9, 11] {
        for k in 0..9 {
            let p = 0.55 + 0.05 * k as f64;
            let exact = enumerate_majority(p, r);
            assert!((homogeneous_uniform_accuracy(p, r).unwrap() - exact).abs() < 1e-12);
            let d = votes(&SkillDistribution::dirac(p).unwrap());
            assert!((unbounded_accuracy(&d, r).unwrap() - exact).abs() < 1e-12, "p={p} r={r}");
        }
    }
}

#[test]
fn even_uniform_budget_splits_ties() {
    let d = votes(&SkillDistribution::dirac(0.7).unwrap());
    for r in [2usize, 4, 8] {
        assert!((unbounded_accuracy(&d, r).unwrap() - enumerate_majority(0.7, r)).abs() < 1e-12);
    }
}

#[test]
fn expected_steps_match_first_step_analysis() {
    for k in 0..9 {
        let p = 0.55 + 0.05 * k as f64;
        let w = logit(p);
        let d = votes(&SkillDistribution::dirac(p).unwrap());
        for level in 1..=6 {
            let (e, hit) = first_step(p, level);
            let z = level as f64 * w;
            assert!((homogeneous_expected_steps(p, z).unwrap() - e).abs() < 1e-9);
            let walk = bounded_walk(&d, z, WalkOptions { tol: 1e-14, ..Default::default() }).unwrap();
            assert!((walk.expected_steps - e).abs() < 1e-9, "p={p} level={level}");
            assert!((walk.exit_accuracy - hit).abs() < 1e-9);
        }
    }
}

#[test]
fn bounded_walk_matches_monte_carlo_for_beta_population() {
    let pop = beta42();
    let d = votes(&pop);
    let z_b = 3.0;
    let walk = bounded_walk(&d, z_b, WalkOptions::default()).unwrap();
    let mc = mc_bounded(&pop, z_b, 40_000, 11);
    assert!((walk.expected_steps - mc.steps.0).abs() < 3.5 * mc.steps.1, "{walk:?}");
    assert!((walk.exit_accuracy - mc.accuracy.0).abs() < 3.5 * mc.accuracy.1);
    let (acc, se) = mc_unbounded(&pop, 4, 40_000, 12);
    assert!((unbounded_accuracy(&d, 4).unwrap() - acc).abs() < 3.5 * se);
}

#[test]
fn lattice_and_grid_agree_away_from_lattice_levels() {
    // two nearly equal skills are binned onto the grid; one is exact atoms
    let atoms = votes(&SkillDistribution::dirac(0.8).unwrap());
    let grid = votes(&SkillDistribution::empirical(vec![(0.8, 0.5), (0.800001, 0.5)]).unwrap());
    assert!(grid.as_grid().is_some());
    let w = logit(0.8);
    for levels in [1.5, 2.5, 4.5] {
        let z = levels * w;
        let a = bounded_walk(&atoms, z, WalkOptions::default()).unwrap();
        let g = bounded_walk(&grid, z, WalkOptions::default()).unwrap();
        assert!((a.expected_steps - g.expected_steps).abs() < 1e-3 * a.expected_steps, "{a:?} {g:?}");
        assert!((a.exit_accuracy - g.exit_accuracy).abs() < 1e-4);
    }
    for r in [3usize, 6] {
        let a = unbounded_accuracy(&atoms, r).unwrap();
        let g = unbounded_accuracy(&grid, r).unwrap();
        assert!((a - g).abs() < 1e-3, "r={r}: {a} vs {g}");
    }
}

#[test]
fn calibration_is_monotone_in_budget() {
    let d = votes(&beta42());
    let mut last = 0.0;
    for r in 2..=20 {
        let c = calibrate(&d, r as f64, CalibrateOptions::default()).unwrap();
        assert!(c.z_threshold >= last, "r_u={r}");
        assert!((c.report.expected_steps - r as f64).abs() <= 1e-3 * r as f64);
        last = c.z_threshold;
    }
}

#[test]
fn calibration_examples() {
    let dirac = votes(&SkillDistribution::dirac(0.8).unwrap());
    let c = calibrate(&dirac, 3.0, CalibrateOptions::default()).unwrap();
    assert!((c.report.expected_steps - 3.0).abs() <= 3e-3);
    let beta = votes(&beta42());
    let c = calibrate(&beta, 2.0, CalibrateOptions::default()).unwrap();
    assert!(c.report.converged && c.report.residual_mass < 1e-6);
    assert!(matches!(
        calibrate(&beta, 0.5, CalibrateOptions::default()),
        Err(crowd_alloc::Error::Unattainable { .. })
    ));
}

#[test]
fn active_beats_uniform_for_beta_population_past_small_budgets() {
    let d = votes(&beta42());
    for r in 2..=20usize {
        let c = calibrate(&d, r as f64, CalibrateOptions::default()).unwrap();
        assert!(c.report.exit_accuracy > unbounded_accuracy(&d, r).unwrap(), "r_u={r}");
    }
}

#[test]
fn rho_root_is_inverse_e_for_every_vote_density() {
    for pop in [
        beta42(),
        SkillDistribution::beta(16.0, 8.0).unwrap(),
        SkillDistribution::beta(2.0, 2.5).unwrap(),
        SkillDistribution::dirac(0.8).unwrap(),
        SkillDistribution::dirac(0.6).unwrap(),
    ] {
        let r = rho_root(&votes(&pop)).unwrap();
        assert!((r.numeric - (-1f64).exp()).abs() < 1e-6, "{pop:?}: {r:?}");
    }
    // the moment approximation is close for the near-normal Beta(16,8)
    let m = moments(&votes(&SkillDistribution::beta(16.0, 8.0).unwrap()));
    let approx = (-2.0 * m.mean / m.variance).exp();
    assert!((approx - (-1f64).exp()).abs() < 0.1 * (-1f64).exp());
}

#[test]
fn vote_moments_match_sampling() {
    let pop = beta42();
    let m = moments(&votes(&pop));
    let mut rng = <crowd_alloc::domain::SimRng as rand::SeedableRng>::seed_from_u64(3);
    let xs: Vec<f64> = (0..200_000).map(|_| common::draw_increment(&pop, &mut rng)).collect();
    let (mean, se) = common::mean_se(&xs);
    assert!((m.mean - mean).abs() < 4.0 * se, "{} vs {}", m.mean, mean);
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (xs.len() - 1) as f64;
    assert!((m.variance - var).abs() < 0.02 * var);
}

#[test]
fn bounds_dominate_exact_values() {
    for pop in [beta42(), SkillDistribution::beta(16.0, 8.0).unwrap(), SkillDistribution::dirac(0.8).unwrap()] {
        let d = votes(&pop);
        let m = moments(&d);
        let rho = rho_root(&d).unwrap().numeric;
        for r in 2..=20usize {
            let c = calibrate(&d, r as f64, CalibrateOptions::default()).unwrap();
            let walk = bounded_walk(&d, c.z_threshold, WalkOptions::default()).unwrap();
            let bound = gambler_ruin_bound(&m, rho, c.z_threshold).unwrap();
            assert!(bound >= walk.expected_steps, "{pop:?} r_u={r}: {bound} < {}", walk.expected_steps);
            let acc = unbounded_accuracy(&d, r).unwrap();
            assert!(1.0 - chernoff_bound(&m, r).unwrap() <= acc);
        }
    }
}
