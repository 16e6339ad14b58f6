//! Weighted voting on one task with known worker skills.

use crowd_alloc::aggregation::{aggregate, majority_vote, weight};
use crowd_alloc::domain::SimRng;
use crowd_alloc::Label;
use rand::SeedableRng;

fn main() -> crowd_alloc::Result<()> {
    let mut rng = SimRng::seed_from_u64(1);

    // one expert says -1, three mediocre workers say +1
    let votes = [(Label::Neg, 0.95), (Label::Pos, 0.6), (Label::Pos, 0.6), (Label::Pos, 0.6)];
    for (label, p) in votes {
        println!("label {:+} from skill {p:.2} -> weight {:.3}", label.value(), weight(p)?);
    }

    let plain: Vec<Label> = votes.iter().map(|v| v.0).collect();
    let r = aggregate(&votes, &mut rng)?;
    println!("majority vote: {:+}", majority_vote(&plain, &mut rng).value());
    println!(
        "weighted vote: {:+} (log-odds {:.3}, confidence {:.3})",
        r.predicted.value(),
        r.logodds,
        r.confidence
    );
    Ok(())
}
