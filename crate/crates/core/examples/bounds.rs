//! Moment bounds next to the exact values they bound.

use crowd_alloc::analysis::{
    bounded_walk, calibrate, chernoff_bound, gambler_ruin_bound, moments, population_vote_density,
    rho_root, unbounded_accuracy, CalibrateOptions, GridSpec, WalkOptions,
};
use crowd_alloc::SkillDistribution;

fn main() -> crowd_alloc::Result<()> {
    let votes = population_vote_density(&SkillDistribution::beta(4.0, 2.0)?, GridSpec::default())?;
    let m = moments(&votes);
    let rho = rho_root(&votes)?;
    println!(
        "mean {:.4}, variance {:.4}, gamma {:.3}, rho0 {:.6} (approx {:.4})",
        m.mean, m.variance, m.support_bound, rho.numeric, rho.approx
    );

    println!("r_u  E(r_a)   bound    accuracy  lower");
    for r in [2usize, 5, 10, 20] {
        let c = calibrate(&votes, r as f64, CalibrateOptions::default())?;
        let exact = bounded_walk(&votes, c.z_threshold, WalkOptions::default())?.expected_steps;
        let bound = gambler_ruin_bound(&m, rho.numeric, c.z_threshold)?;
        let acc = unbounded_accuracy(&votes, r)?;
        let lower = 1.0 - chernoff_bound(&m, r)?;
        println!("{r:3}  {exact:7.3}  {bound:7.3}  {acc:.5}   {lower:.5}");
    }
    Ok(())
}
