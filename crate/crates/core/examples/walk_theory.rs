//! Predicted accuracy of uniform and active allocation for a crowd.

use crowd_alloc::analysis::{
    bounded_walk, calibrate, population_vote_density, unbounded_accuracy, CalibrateOptions, GridSpec,
    WalkOptions,
};
use crowd_alloc::SkillDistribution;

fn main() -> crowd_alloc::Result<()> {
    let crowd = SkillDistribution::beta(4.0, 2.0)?;
    let votes = population_vote_density(&crowd, GridSpec::default())?;

    println!("r_u   z_B     uniform   active");
    for r in [2usize, 4, 6, 10, 15, 20] {
        let c = calibrate(&votes, r as f64, CalibrateOptions::default())?;
        let uniform = unbounded_accuracy(&votes, r)?;
        println!("{r:3}  {:6.3}  {uniform:.5}  {:.5}", c.z_threshold, c.report.exit_accuracy);
    }

    let walk = bounded_walk(&votes, 3.0, WalkOptions::default())?;
    println!(
        "threshold 3.0: {:.3} votes per task, accuracy {:.4}",
        walk.expected_steps, walk.exit_accuracy
    );
    Ok(())
}
