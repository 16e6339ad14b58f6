//! A small budget sweep with skills learned online.

use crowd_alloc::domain::{ExperimentConfig, Mode, PolicyKind, TieBreak};
use crowd_alloc::sim::{sweep, SweepAxis};
use crowd_alloc::{Prior, SkillDistribution};

fn main() -> crowd_alloc::Result<()> {
    let base = ExperimentConfig {
        num_tasks: 100,
        budget: 500,
        labels_per_worker: 10,
        population: SkillDistribution::beta(4.0, 2.0)?,
        policy: PolicyKind::Uniform,
        mode: Mode::Inference(Prior::new(4.0, 2.0)?),
        replications: 20,
        seed: 2013,
        tie_break: TieBreak::LowestId,
    };

    println!("B/M  policy       accuracy  se");
    for point in sweep(&base, SweepAxis::BudgetRatio, &[2.0, 5.0, 10.0])? {
        for (policy, stats) in point.results {
            let s = stats?;
            println!("{:3}  {:11}  {:.4}    {:.4}", point.value, policy.name(), s.mean_accuracy, s.standard_error);
        }
    }
    Ok(())
}
