mod common;

use std::cell::Cell;

use common::{brute_force_minima, constants, fails, planted, surviving_items};
use metahunt::hdl::{parse, Design};
use metahunt::reducer::{reduce, reduce_with_cap, ReduceError};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn planted_triggers_reduce_to_the_brute_force_minimum() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for case in 0..50 {
        let k = rng.random_range(1..=2);
        let (d, marked) = planted(&mut rng, k);
        let r = reduce(&d, &mut |x: &Design| fails(x, k)).unwrap();
        assert!(fails(&r.design, k), "case {case}");
        assert!(!r.non_minimal);
        let got = r.design.modules[0].items.len();
        let minima = brute_force_minima(&d, k);
        assert_eq!(minima, vec![marked], "case {case}");
        assert_eq!(surviving_items(&d, &r.design), minima[0], "case {case}");
        // 1-minimal: no single item can go.
        for i in 0..got {
            let mut sub = r.design.clone();
            sub.modules[0].items.remove(i);
            assert!(!fails(&sub, k), "case {case} item {i}");
        }
    }
}

#[test]
fn passing_input_is_rejected() {
    let (d, _) = planted(&mut ChaCha8Rng::seed_from_u64(1), 1);
    assert_eq!(
        reduce(&d, &mut |_: &Design| false).unwrap_err(),
        ReduceError::NotFailing
    );
}

#[test]
fn flaky_predicate_is_rejected() {
    let (d, _) = planted(&mut ChaCha8Rng::seed_from_u64(1), 1);
    let flip = Cell::new(false);
    let mut p = |_: &Design| {
        flip.set(!flip.get());
        flip.get()
    };
    assert!(matches!(
        reduce(&d, &mut p),
        Err(ReduceError::FlakyPredicate(_))
    ));
}

#[test]
fn cap_marks_result_non_minimal() {
    let k = 2;
    let (d, _) = planted(&mut ChaCha8Rng::seed_from_u64(5), k);
    let r = reduce_with_cap(&d, &mut |x: &Design| fails(x, k), 4).unwrap();
    assert!(r.non_minimal);
    assert!(fails(&r.design, k));
}

#[test]
fn removing_a_module_removes_its_instances() {
    let d = parse(
        "module t(input [1:0] a, output [1:0] y, output [1:0] z); \
         s u(.a(a), .y(y)); assign z = a ^ 2'd3; endmodule\n\
         module s(input [1:0] a, output [1:0] y); assign y = ~a; endmodule",
    )
    .unwrap();
    let r = reduce(&d, &mut |x: &Design| constants(x).contains(&3)).unwrap();
    assert_eq!(r.design.modules.len(), 1);
    assert_eq!(r.design.modules[0].items.len(), 1);
}
