//! Uncertainty sampling and greedy information gain pick the same task.

use crowd_alloc::policy::{expected_info_gain, select_greedy_ig, select_uncertainty, TaskSet};

fn main() -> crowd_alloc::Result<()> {
    let z = [2.1, -0.4, 3.7, 0.9, -1.6];
    let all = TaskSet::all(z.len());

    println!("   z    EIG(p=0.7)  EIG(p=0.9)");
    for zi in z {
        println!("{zi:5.1}  {:10.5}  {:10.5}", expected_info_gain(zi, 0.7), expected_info_gain(zi, 0.9));
    }

    println!("uncertainty picks task {}", select_uncertainty(&z, &all)?);
    for p in [0.55, 0.7, 0.9, 0.3] {
        println!("greedy gain with p = {p} picks task {}", select_greedy_ig(&z, p, &all)?);
    }

    let without = TaskSet::excluding(z.len(), [1]);
    println!("with task 1 excluded: {}", select_uncertainty(&z, &without)?);
    Ok(())
}
