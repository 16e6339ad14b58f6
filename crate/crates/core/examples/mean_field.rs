//! Estimating worker skills and task labels when skills are unknown.

use crowd_alloc::domain::{generate_label, sample_skill, SimRng};
use crowd_alloc::inference::{fit, FitOptions, Prior};
use crowd_alloc::{Label, LabelStore, SkillDistribution};
use rand::SeedableRng;

fn main() -> crowd_alloc::Result<()> {
    let mut rng = SimRng::seed_from_u64(7);
    let (tasks, workers, per_task) = (300, 40, 7);
    let crowd = SkillDistribution::beta(4.0, 2.0)?;

    let truth: Vec<Label> = (0..tasks).map(|_| Label::coin(&mut rng)).collect();
    let skills: Vec<f64> = (0..workers).map(|_| sample_skill(&crowd, &mut rng)).collect();

    let mut store = LabelStore::with_tasks(tasks);
    for (t, &ell) in truth.iter().enumerate() {
        for k in 0..per_task {
            let w = (t * 3 + k * 5) % workers;
            store.insert(t, w, generate_label(ell, skills[w], &mut rng))?;
        }
    }

    let state = fit(&store, Prior::new(4.0, 2.0)?, FitOptions::default())?;
    println!("{} iterations, stop: {:?}", state.iteration_count, state.stop);

    let correct = (0..tasks)
        .filter(|&t| state.decision(t) == Some(truth[t]))
        .count();
    println!("accuracy: {:.3}", correct as f64 / tasks as f64);

    let err: f64 = skills.iter().zip(&state.skills).map(|(a, b)| (a - b).abs()).sum::<f64>() / workers as f64;
    println!("mean |skill error|: {err:.3}");
    for w in 0..5 {
        println!("worker {w}: true {:.3}, estimated {:.3}", skills[w], state.skills[w]);
    }
    Ok(())
}
