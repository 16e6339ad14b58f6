mod common;

use crowd_alloc::aggregation::{logistic, weight};
use crowd_alloc::domain::{Label, LabelRecord, LabelStore, SimRng};
use crowd_alloc::inference::*;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

fn record(t: usize, w: usize, l: i8) -> LabelRecord {
    LabelRecord { task: t, worker: w, label: Label::from_sign(l).unwrap() }
}

/// Random store with no duplicate (task, worker) pairs.
fn random_store(rng: &mut SimRng, tasks: usize, workers: usize, density: f64) -> LabelStore {
    let mut s = LabelStore::with_tasks(tasks);
    for t in 0..tasks {
        for w in 0..workers {
            if rng.random::<f64>() < density {
                s.insert(t, w, Label::coin(rng)).unwrap();
            }
        }
    }
    s
}

#[test]
fn two_by_two_toy_by_hand() {
    // worker 0 says (+, +), worker 1 says (+, -); prior Beta(2, 1)
    let votes = [(0, 0, 1i8), (1, 0, 1), (0, 1, 1), (1, 1, -1)];
    let store = LabelStore::from_records(votes.iter().map(|&(t, w, l)| record(t, w, l))).unwrap();
    let prior = Prior::new(2.0, 1.0).unwrap();

    // round 1 from p = 2/3 for both workers:
    //   task 0: both agree -> (4/9) / (4/9 + 1/9) = 0.8
    //   task 1: one each   -> 0.5
    //   worker 0: (0.8 + 0.5 + 2) / (2 + 3) = 0.66
    //   worker 1: (0.8 + 0.5 + 2) / 5       = 0.66
    // round 2 from p = 0.66: task 0 -> 0.66^2 / (0.66^2 + 0.34^2)
    let t0 = 0.66f64.powi(2) / (0.66f64.powi(2) + 0.34f64.powi(2));
    let p2 = (t0 + 0.5 + 2.0) / 5.0;

    let mut mf = MeanField::new(&store, prior);
    mf.step();
    assert!((mf.posteriors()[0] - 0.8).abs() < 1e-9);
    assert!((mf.posteriors()[1] - 0.5).abs() < 1e-9);
    assert!((mf.skills()[0] - 0.66).abs() < 1e-9);
    assert!((mf.skills()[1] - 0.66).abs() < 1e-9);
    mf.step();
    assert!((mf.posteriors()[0] - t0).abs() < 1e-9);
    assert!((mf.posteriors()[1] - 0.5).abs() < 1e-9);
    assert!((mf.skills()[0] - p2).abs() < 1e-9);

    // and the naive transcription agrees
    let (_, p) = common::naive_round(&votes, 2, &[2.0 / 3.0; 2], 2.0, 1.0);
    let (mu, _) = common::naive_round(&votes, 2, &p, 2.0, 1.0);
    assert!((mu[0] - t0).abs() < 1e-12);
}

#[test]
fn batch_iteration_matches_naive_transcription() {
    let mut rng = SimRng::seed_from_u64(41);
    for _ in 0..20 {
        let store = random_store(&mut rng, 6, 5, 0.6);
        let votes: Vec<_> = store.records().iter().map(|r| (r.task, r.worker, r.label.value())).collect();
        let prior = Prior::new(3.0, 1.5).unwrap();
        let mut mf = MeanField::new(&store, prior);
        let mut skills = vec![prior.mean(); store.num_workers()];
        for _ in 0..5 {
            mf.step();
            let (mu, p) = common::naive_round(&votes, store.num_tasks(), &skills, 3.0, 1.5);
            for (a, b) in mf.posteriors().iter().zip(&mu) {
                assert!((a - b).abs() < 1e-12);
            }
            for (a, b) in mf.skills().iter().zip(&p) {
                assert!((a - b).abs() < 1e-12);
            }
            skills = p;
        }
    }
}

#[test]
fn label_flip_symmetry_every_iteration() {
    let mut rng = SimRng::seed_from_u64(7);
    for _ in 0..100 {
        let store = random_store(&mut rng, 8, 6, 0.5);
        let flipped = store.flipped();
        let prior = Prior::new(rng.random_range(1.5..6.0), rng.random_range(0.5..1.5)).unwrap();
        let mut a = MeanField::new(&store, prior);
        let mut b = MeanField::new(&flipped, prior);
        for _ in 0..15 {
            a.step();
            b.step();
            for (x, y) in a.posteriors().iter().zip(b.posteriors()) {
                assert!((x - (1.0 - y)).abs() < 1e-12);
            }
            for (x, y) in a.skills().iter().zip(b.skills()) {
                assert!((x - y).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn fit_ignores_record_order() {
    let mut rng = SimRng::seed_from_u64(8);
    for _ in 0..30 {
        let store = random_store(&mut rng, 7, 6, 0.5);
        let mut recs = store.records().to_vec();
        recs.shuffle(&mut rng);
        let mut shuffled = LabelStore::with_tasks(store.num_tasks());
        for r in recs {
            shuffled.insert(r.task, r.worker, r.label).unwrap();
        }
        let prior = Prior::new(4.0, 2.0).unwrap();
        let a = fit(&store, prior, FitOptions::default()).unwrap();
        let b = fit(&shuffled, prior, FitOptions::default()).unwrap();
        assert_eq!(a.iteration_count, b.iteration_count);
        for (x, y) in a.posteriors.iter().zip(&b.posteriors) {
            assert!((x - y).abs() < 1e-12);
        }
        for (x, y) in a.skills.iter().zip(&b.skills) {
            assert!((x - y).abs() < 1e-12);
        }
    }
}

#[test]
fn strong_prior_pins_skills_and_recovers_weighted_vote() {
    let mut rng = SimRng::seed_from_u64(9);
    let store = random_store(&mut rng, 10, 8, 0.6);
    let prior = Prior::new(0.75e9, 0.25e9).unwrap();
    let out = fit(&store, prior, FitOptions::default()).unwrap();
    let w = weight(0.75).unwrap();
    for (j, p) in out.skills.iter().enumerate() {
        assert!((p - 0.75).abs() < 1e-7, "worker {j}");
    }
    for i in 0..store.num_tasks() {
        let z: f64 = store.task_records(i).map(|r| r.label.sign() * w).sum();
        assert!((out.posteriors[i] - logistic(z)).abs() < 1e-6);
    }
}

#[test]
fn equal_skills_decide_by_majority() {
    let mut rng = SimRng::seed_from_u64(10);
    for _ in 0..20 {
        let store = random_store(&mut rng, 9, 5, 1.0);
        for p in [0.55, 0.7, 0.95] {
            let mu = e_step(&store, &[p; 5]);
            for (i, m) in mu.iter().enumerate() {
                let votes: i32 = store.task_records(i).map(|r| r.label.value() as i32).sum();
                assert_eq!(*m > 0.5, votes > 0, "task {i} votes {votes}");
            }
        }
    }
}

#[test]
fn online_update_is_a_restricted_full_step() {
    let mut rng = SimRng::seed_from_u64(11);
    let prior = Prior::new(4.0, 2.0).unwrap();
    for _ in 0..100 {
        let (tasks, workers) = (rng.random_range(2..8), rng.random_range(1..6));
        let mut pairs: Vec<(usize, usize)> =
            (0..tasks).flat_map(|t| (0..workers).map(move |w| (t, w))).collect();
        pairs.shuffle(&mut rng);
        pairs.truncate(rng.random_range(1..=pairs.len()));

        let mut store = LabelStore::with_tasks(tasks);
        let mut state = MeanFieldState::empty(tasks, 0, prior);
        for (t, w) in pairs {
            let rec = LabelRecord { task: t, worker: w, label: Label::coin(&mut rng) };
            store.insert(t, w, rec.label).unwrap();
            let before = state.clone();
            online_update(&mut state, &store, rec, prior);

            // oracle: full steps, then keep only the touched entries
            let mut skills = before.skills.clone();
            skills.resize(store.num_workers(), prior.mean());
            let mu_full = e_step(&store, &skills);
            let mut mu = before.posteriors.clone();
            mu[t] = mu_full[t];
            let p_full = m_step(&store, &mu, prior);
            for i in 0..tasks {
                let expect = if i == t { mu_full[i] } else { before.posteriors[i] };
                assert!((state.posteriors[i] - expect).abs() < 1e-12);
            }
            for j in 0..store.num_workers() {
                let expect = if j == w { p_full[j] } else { skills[j] };
                assert!((state.skills[j] - expect).abs() < 1e-12);
            }
        }

        // replay equivalence: one E-step from the online skills equals the
        // first iteration of a fit warm-started at those skills
        let replayed = e_step(&store, &state.skills);
        let mut warm = MeanField::with_skills(&store, prior, state.skills.clone());
        warm.step();
        for (a, b) in replayed.iter().zip(warm.posteriors()) {
            assert!((a - b).abs() < 1e-9);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn posteriors_and_skills_stay_in_range(seed in any::<u64>(), density in 0.1f64..1.0) {
        let mut rng = SimRng::seed_from_u64(seed);
        let store = random_store(&mut rng, 6, 6, density);
        let out = fit(&store, Prior::new(4.0, 2.0).unwrap(), FitOptions::default()).unwrap();
        for mu in &out.posteriors {
            prop_assert!((0.0..=1.0).contains(mu));
        }
        for p in &out.skills {
            prop_assert!(*p > 0.0 && *p < 1.0);
        }
        prop_assert!(out.iteration_count >= 1 && out.iteration_count <= 100);
    }
}
