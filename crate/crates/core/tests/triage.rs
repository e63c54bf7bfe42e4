mod common;

use common::{family_a, family_b};
use metahunt::difftest::{mock_synthesize, MockBug, MockBugProfile, RunOutcome};
use metahunt::hdl::parse;
use metahunt::triage::{
    cosine, featurize, frequency, mask, tokenize, ClusterRegistry, DEFAULT_THRESHOLD, REFIT_EVERY,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn two_families_give_two_pure_clusters() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut reg = ClusterRegistry::default();
    let mut ids = [Vec::new(), Vec::new()];
    for i in 0..200u64 {
        let fam = rng.random_range(0..2);
        let log = if fam == 0 {
            family_a(&mut rng)
        } else {
            family_b(&mut rng)
        };
        let a = reg.assign_cluster(&featurize(&log).unwrap(), i);
        ids[fam].push((i, a.id()));
    }
    assert_eq!(reg.len(), 2);
    for fam in &ids {
        let c = fam[0].1;
        assert!(fam.iter().all(|(_, id)| *id == c));
        let members = &reg.clusters.iter().find(|k| k.id == c).unwrap().members;
        let mut want: Vec<u64> = fam.iter().map(|(i, _)| *i).collect();
        let mut got = members.clone();
        want.sort();
        got.sort();
        assert_eq!(got, want);
    }
}

#[test]
fn disjoint_vocabularies_are_far_apart() {
    let a = featurize("alpha beta gamma delta epsilon").unwrap();
    let b = featurize("zulu yankee xray whiskey victor").unwrap();
    assert!(cosine(&a.vector, &b.vector).unwrap() <= 0.1);
}

#[test]
fn mock_crash_logs_share_one_cluster() {
    let profile = MockBugProfile::only(&[MockBug::DeepTernaryCrash]);
    let mut reg = ClusterRegistry::default();
    for i in 0..10u32 {
        let src = format!(
            "module m{i}(input [3:0] a, input b, output [3:0] y); \
             assign y = b ? (a[0] ? (a[1] ? (a[2] ? (a[3] ? a + 4'd{i} : a) : a) : a) : a) : a ^ 4'd{}; endmodule",
            i + 1
        );
        let d = parse(&src).unwrap();
        let run = mock_synthesize(&d, &profile);
        let RunOutcome::Crash { log, .. } = run.outcome else {
            panic!("expected crash")
        };
        reg.assign_cluster(&featurize(&log).unwrap(), u64::from(i));
    }
    assert_eq!(reg.len(), 1);
    assert_eq!(reg.clusters[0].count, 10);
}

#[test]
fn empty_log_is_rejected() {
    assert!(featurize("   \n").is_err());
}

#[test]
fn frequency_is_share_of_observations() {
    assert_eq!(frequency(&[], 1), 0.0);
    assert!((frequency(&[3, 1], 8) - 0.5).abs() < 1e-12);
    assert!((frequency(&[2], 10) - 0.2).abs() < 1e-12);
    assert_eq!(frequency(&[9], 4), 1.0);
}

fn arb_log() -> impl Strategy<Value = String> {
    prop::collection::vec("[a-z_]{3,8}", 2..12).prop_map(|w| w.join(" "))
}

proptest! {
    #[test]
    fn masking_ignores_numbers_addresses_and_paths(
        words in arb_log(),
        n1 in any::<u32>(), n2 in any::<u32>(),
        a1 in any::<u64>(), a2 in any::<u64>(),
        p1 in "[a-z]{1,6}", p2 in "[a-z]{1,6}",
    ) {
        let l1 = format!("{words} line {n1} at 0x{a1:x} in /tmp/{p1}/x.v");
        let l2 = format!("{words} line {n2} at 0x{a2:x} in /tmp/{p2}/x.v");
        let (m1, m2) = (mask(&l1), mask(&l2));
        prop_assert_eq!(tokenize(&m1), tokenize(&m2));
        let (f1, f2) = (featurize(&l1).unwrap(), featurize(&l2).unwrap());
        prop_assert!(cosine(&f1.vector, &f2.vector).unwrap() > 1.0 - 1e-9);
    }

    #[test]
    fn features_are_unit_vectors(log in arb_log()) {
        let f = featurize(&log).unwrap();
        let n: f64 = f.vector.iter().map(|x| x * x).sum::<f64>().sqrt();
        prop_assert!((n - 1.0).abs() < 1e-9);
    }

    #[test]
    fn reassigning_a_member_is_idempotent(logs in prop::collection::vec(arb_log(), 1..20)) {
        let mut reg = ClusterRegistry::new(DEFAULT_THRESHOLD);
        let feats: Vec<_> = logs.iter().map(|l| featurize(l).unwrap()).collect();
        let mut ids = Vec::new();
        for (i, f) in feats.iter().enumerate() {
            ids.push(reg.assign_cluster(f, i as u64).id());
        }
        // A log lands in the cluster it was assigned to when nothing changed since.
        let last = feats.len() - 1;
        let again = reg.assign_cluster(&feats[last], last as u64);
        prop_assert!(!again.is_new());
        prop_assert_eq!(again.id(), ids[last]);
    }

    #[test]
    fn counters_sum_to_observations(logs in prop::collection::vec(arb_log(), 1..(2 * REFIT_EVERY + 5))) {
        let mut reg = ClusterRegistry::new(DEFAULT_THRESHOLD);
        for (i, l) in logs.iter().enumerate() {
            reg.assign_cluster(&featurize(l).unwrap(), i as u64);
        }
        let total: u64 = reg.clusters.iter().map(|c| c.count).sum();
        prop_assert_eq!(total, logs.len() as u64);
        prop_assert_eq!(reg.total_observations(), logs.len() as u64);
        for c in &reg.clusters {
            prop_assert_eq!(c.count, c.members.len() as u64);
        }
        let counts: Vec<u64> = reg.clusters.iter().map(|c| c.count).collect();
        let f = frequency(&counts, logs.len() as u64);
        prop_assert!((0.0..=1.0).contains(&f));
    }
}
