mod common;

use common::linucb_oracle_mismatch;
use metahunt::bandit::{
    adjust, select, ArmState, Candidate, ContextVec, PolicyConfig, PolicyKind, DIM,
};
use metahunt::metamorph::StrategyId;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

#[test]
fn matches_dense_recomputation_over_1000_sequences() {
    assert_eq!(linucb_oracle_mismatch(1000), None);
}

#[test]
fn worked_values() {
    let x = ContextVec([1.0, 0.0, 0.0, 0.0, 0.7, 0.2]);
    let u = ArmState::default()
        .ucb(&x, &PolicyConfig::default(), 0.2)
        .unwrap();
    assert!((u - 1.53f64.sqrt()).abs() <= 1e-9);
    assert!((adjust(1.0, 0.2, 0.5) - (-0.1f64).exp()).abs() <= 1e-9);
}

/// Cumulative reward of a policy on a stationary linear environment.
fn linear_env(policy: PolicyKind, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let theta: Vec<[f64; DIM]> = (0..4)
        .map(|_| {
            let mut t = [0.0; DIM];
            for v in &mut t {
                *v = rng.random_range(0.0..1.0);
            }
            t
        })
        .collect();
    let noise = Normal::new(0.0, 0.1).unwrap();
    let cfg = PolicyConfig {
        policy,
        ..Default::default()
    };
    let mut arms = vec![ArmState::default(); 4];
    let mut total = 0.0;
    for _ in 0..2000 {
        let contexts: Vec<ContextVec> = StrategyId::ALL
            .iter()
            .map(|&a| ContextVec::new(a, rng.random(), 0.0))
            .collect();
        let cands: Vec<Candidate> = StrategyId::ALL
            .iter()
            .map(|&a| Candidate {
                id: a,
                state: &arms[a.index()],
                context: contexts[a.index()],
                f_a: 0.0,
            })
            .collect();
        let chosen = select(&cands, &cfg, &mut rng).unwrap();
        let x = contexts[chosen.index()];
        let mean: f64 =
            x.0.iter()
                .zip(&theta[chosen.index()])
                .map(|(a, b)| a * b)
                .sum();
        let r = mean + noise.sample(&mut rng);
        total += r;
        arms[chosen.index()].update(&x, r);
    }
    total
}

#[test]
fn linucb_beats_random_on_linear_environment() {
    let wins = (0..10)
        .filter(|&s| linear_env(PolicyKind::Linucb, s) > linear_env(PolicyKind::Random, s))
        .count();
    assert!(wins >= 9, "LinUCB won {wins}/10");
}

proptest! {
    #[test]
    fn a_stays_identity_plus_outer_products(
        pulls in prop::collection::vec((0usize..4, 0.0f64..1.0, 0.0f64..1.0, -1.0f64..2.0), 0..60)
    ) {
        let mut arm = ArmState::default();
        let mut want = [[0.0; DIM]; DIM];
        for (i, row) in want.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        for (a, h, f, r) in &pulls {
            let x = ContextVec::new(StrategyId::ALL[*a], *h, *f);
            arm.update(&x, *r);
            for i in 0..DIM {
                for j in 0..DIM {
                    want[i][j] += x.0[i] * x.0[j];
                }
            }
        }
        for i in 0..DIM {
            for j in 0..DIM {
                prop_assert!((arm.a[i][j] - want[i][j]).abs() <= 1e-12);
            }
        }
        prop_assert_eq!(arm.pulls, pulls.len() as u64);
    }

    #[test]
    fn penalty_shrinks_positive_estimates(r in 0.0f64..10.0, f1 in 0.0f64..1.0, f2 in 0.0f64..1.0, beta in 0.0f64..2.0) {
        let (lo, hi) = if f1 <= f2 { (f1, f2) } else { (f2, f1) };
        prop_assert!(adjust(r, hi, beta) <= adjust(r, lo, beta) + 1e-15);
        prop_assert!(adjust(r, lo, beta) <= r + 1e-15);
    }
}
