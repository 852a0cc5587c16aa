mod common;

use std::f64::consts::PI;

use common::{interval, rng, y_tree};
use hardy_tree_core::partition::{exact_n, sandwich_check};
use hardy_tree_core::{
    a_value, approx_numbers_p2, compute_m, compute_n, random, AOptions, DiscretizedOperator, PNorm, PartitionOptions,
    Resolution, Subtree,
};

fn opts(cells: usize) -> PartitionOptions {
    PartitionOptions { a: AOptions::with_resolution(cells).unwrap(), ..PartitionOptions::default() }
}

#[test]
fn interval_counts_match_closed_form() {
    let (t, one) = interval(1.0);
    let k = Subtree::whole(&t);
    let o = opts(512);
    for eps in [0.1, 0.07, 0.045] {
        let n = compute_n(&t, &one, &one, &k, PNorm::TWO, eps, &o).unwrap();
        assert_eq!(n.n_upper, (1.0 / (PI * eps)).ceil() as usize, "eps = {eps}");
        let m = compute_m(&t, &one, &one, &k, PNorm::TWO, eps, &o).unwrap();
        assert_eq!(m.m_lower, (1.0 / (PI * eps)).floor() as usize, "eps = {eps}");
        // every full piece has length πε
        for g in &n.partition.parts[..n.n_upper - 1] {
            assert!((g.length() - PI * eps).abs() < 1e-4, "{}", g.length());
        }
    }
}

#[test]
fn large_eps_gives_one_part_and_no_packing() {
    let w = y_tree();
    let k = w.whole();
    let o = opts(128);
    let whole = a_value(&w.tree, &w.u, &w.v, &k, PNorm::TWO, &o.a).unwrap().value;
    let n = compute_n(&w.tree, &w.u, &w.v, &k, PNorm::TWO, whole * 1.01, &o).unwrap();
    assert_eq!(n.n_upper, 1);
    let m = compute_m(&w.tree, &w.u, &w.v, &k, PNorm::TWO, whole * 1.01, &o).unwrap();
    assert_eq!(m.m_lower, 0);
    assert!(compute_n(&w.tree, &w.u, &w.v, &k, PNorm::TWO, 0.0, &o).is_err());
}

#[test]
fn greedy_is_within_one_of_exhaustive_on_y_tree() {
    let w = y_tree();
    let k = w.whole();
    let o = opts(128);
    for q in [PNorm::ONE, PNorm::TWO] {
        for eps in [0.5, 0.3, 0.2] {
            let greedy = compute_n(&w.tree, &w.u, &w.v, &k, q, eps, &o).unwrap().n_upper;
            let exact = exact_n(&w.tree, &w.u, &w.v, &k, q, eps, &o.a).unwrap();
            assert!(greedy <= exact + 1, "p = {}, eps = {eps}: greedy {greedy}, exhaustive {exact}", q.p());
        }
    }
}

#[test]
fn packing_is_a_third_of_covering() {
    let mut r = rng(29);
    let o = opts(128);
    for _ in 0..4 {
        let w = random::weighted_tree(&mut r, 4).unwrap();
        let k = w.whole();
        let whole = a_value(&w.tree, &w.u, &w.v, &k, PNorm::TWO, &o.a).unwrap().value;
        for split in [2.0, 4.5] {
            let eps = whole / split;
            let n = compute_n(&w.tree, &w.u, &w.v, &k, PNorm::TWO, eps, &o).unwrap();
            let m = compute_m(&w.tree, &w.u, &w.v, &k, PNorm::TWO, eps, &o).unwrap();
            assert!(3 * (m.m_lower + 1) >= n.n_upper, "N = {}, M = {}", n.n_upper, m.m_lower);
        }
    }
}

#[test]
fn sandwich_on_interval_uses_analytic_spectrum() {
    let (t, one) = interval(1.0);
    let k = Subtree::whole(&t);
    let o = opts(1024);
    let n = compute_n(&t, &one, &one, &k, PNorm::TWO, 0.1, &o).unwrap();
    let m = compute_m(&t, &one, &one, &k, PNorm::TWO, 0.1, &o).unwrap();
    let op = DiscretizedOperator::at_anchor(&t, &one, &one, &k, PNorm::TWO, Resolution::new(1024).unwrap()).unwrap();
    let s = approx_numbers_p2(&op, 8).unwrap();
    let rep = sandwich_check(&n, &m, &s, PNorm::TWO, 1, 1e-3);
    assert!(rep.passed());
    assert_eq!((rep.n_upper, rep.m_lower), (4, 3));
    assert!((rep.a_n_plus_1.unwrap() - 2.0 / (9.0 * PI)).abs() < 1e-4);
    assert!((rep.a_m.unwrap() - 2.0 / (5.0 * PI)).abs() < 1e-4);
}

#[test]
fn packing_parts_exceed_eps_after_refinement() {
    let w = y_tree();
    let k = w.whole();
    let o = opts(128);
    let m = compute_m(&w.tree, &w.u, &w.v, &k, PNorm::TWO, 0.2, &o).unwrap();
    assert!(m.m_lower >= 2);
    let fine = AOptions::with_resolution(512).unwrap();
    for g in &m.parts {
        let a = a_value(&w.tree, &w.u, &w.v, g, PNorm::TWO, &fine).unwrap().value;
        assert!(a > 0.2 - m.tol - 1e-4, "{a}");
    }
}
