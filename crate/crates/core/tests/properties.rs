mod common;

use common::{p, res, rng};
use hardy_tree_core::asymptotics::{lq_norm, norm_lower_bound, sigma_table, weak_lq_norm};
use hardy_tree_core::operator::{op_norm, GridOperator, NormOptions};
use hardy_tree_core::weights::{integrate, lp_norm};
use hardy_tree_core::{
    a_value, compute_m, compute_n, random, AOptions, DiscretizedOperator, PNorm, PartitionOptions, Subtree, TreePoint,
    WeightedTree,
};
use proptest::prelude::*;
use rand::Rng;

fn config() -> ProptestConfig {
    ProptestConfig { cases: 16, ..ProptestConfig::default() }
}

fn tree(seed: u64, edges: usize) -> (WeightedTree, rand_chacha::ChaCha8Rng) {
    let mut r = rng(seed);
    let w = random::weighted_tree(&mut r, edges).unwrap();
    (w, r)
}

fn a(w: &WeightedTree, u: &hardy_tree_core::StepWeight, v: &hardy_tree_core::StepWeight, k: &Subtree, q: PNorm) -> f64 {
    a_value(&w.tree, u, v, k, q, &AOptions::with_resolution(128).unwrap()).unwrap().value
}

fn partition_opts() -> PartitionOptions {
    PartitionOptions { a: AOptions::with_resolution(128).unwrap(), ..PartitionOptions::default() }
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn adjoint_identity(seed in any::<u64>(), edges in 1usize..6) {
        let (w, mut r) = tree(seed, edges);
        let k = w.whole();
        let op = DiscretizedOperator::at_anchor(&w.tree, &w.u, &w.v, &k, PNorm::TWO, res(96)).unwrap();
        let n = op.len();
        let f: Vec<f64> = (0..n).map(|_| r.random_range(-1.0..1.0)).collect();
        let h: Vec<f64> = (0..n).map(|_| r.random_range(-1.0..1.0)).collect();
        let tf = op.apply_vec(&f).unwrap();
        let mut th = vec![0.0; n];
        op.adjoint(&h, &mut th);
        let q = op.q();
        let lhs: f64 = (0..n).map(|i| q[i] * tf[i] * h[i]).sum();
        let rhs: f64 = (0..n).map(|i| q[i] * f[i] * th[i]).sum();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
    }

    #[test]
    fn a_is_homogeneous(seed in any::<u64>(), edges in 1usize..5, c in 0.1f64..10.0) {
        let (w, _) = tree(seed, edges);
        let k = w.whole();
        for q in [PNorm::ONE, PNorm::TWO, PNorm::INF] {
            let base = a(&w, &w.u, &w.v, &k, q);
            let scaled_u = a(&w, &w.u.scaled(c), &w.v, &k, q);
            let scaled_v = a(&w, &w.u, &w.v.scaled(c), &k, q);
            prop_assert!((scaled_u - c * base).abs() <= 1e-9 * c * base, "p = {}: {scaled_u} vs {}", q.p(), c * base);
            prop_assert!((scaled_v - c * base).abs() <= 1e-9 * c * base, "p = {}: {scaled_v} vs {}", q.p(), c * base);
        }
    }

    #[test]
    fn a_is_lipschitz_in_u_and_v(seed in any::<u64>(), edges in 1usize..5) {
        let (w, mut r) = tree(seed, edges);
        let k = w.whole();
        let t = &w.tree;
        for q in [PNorm::ONE, PNorm::TWO] {
            let base = a(&w, &w.u, &w.v, &k, q);
            let u2 = random::perturb(&mut r, &w.u, 0.5);
            let du = w.u.zip(&u2, |x, y| (x - y).abs());
            let bound = lp_norm(t, &w.v, q, &k) * lp_norm(t, &du, q.conj(), &k);
            let gap = (a(&w, &u2, &w.v, &k, q) - base).abs();
            prop_assert!(gap <= bound + 1e-6 * base, "u, p = {}: {gap} > {bound}", q.p());
            let v2 = random::perturb(&mut r, &w.v, 0.5);
            let dv = w.v.zip(&v2, |x, y| (x - y).abs());
            let bound = 2.0 * lp_norm(t, &dv, q, &k) * lp_norm(t, &w.u, q.conj(), &k);
            let gap = (a(&w, &w.u, &v2, &k, q) - base).abs();
            prop_assert!(gap <= bound + 1e-6 * base, "v, p = {}: {gap} > {bound}", q.p());
        }
    }

    #[test]
    fn a_is_monotone_under_inclusion(seed in any::<u64>(), edges in 1usize..5) {
        let (w, mut r) = tree(seed, edges);
        let t = &w.tree;
        let whole = w.whole();
        let cuts: Vec<TreePoint> = (0..2)
            .map(|_| {
                let e = r.random_range(0..t.edge_count());
                t.point_on(e, t.len(e) * r.random_range(0.05..0.95))
            })
            .collect();
        let inner = Subtree::from_anchor_and_cuts(t, TreePoint::ROOT, &cuts).unwrap();
        for q in [PNorm::ONE, PNorm::TWO, PNorm::INF] {
            let big = a(&w, &w.u, &w.v, &whole, q);
            let small = a(&w, &w.u, &w.v, &inner, q);
            prop_assert!(small <= big * (1.0 + 1e-3), "p = {}: {small} > {big}", q.p());
        }
    }

    #[test]
    fn greedy_partition_is_valid(seed in any::<u64>(), edges in 1usize..5, split in 1.5f64..5.0) {
        let (w, _) = tree(seed, edges);
        let k = w.whole();
        let opts = partition_opts();
        let eps = a(&w, &w.u, &w.v, &k, PNorm::TWO) / split;
        let n = compute_n(&w.tree, &w.u, &w.v, &k, PNorm::TWO, eps, &opts).unwrap();
        prop_assert!(n.partition.validate(&w.tree).is_valid());
        prop_assert_eq!(n.n_upper, n.partition.parts.len());
        let total: f64 = n.partition.parts.iter().map(Subtree::length).sum();
        prop_assert!((total - k.length()).abs() <= 1e-9 * k.length());
        prop_assert!(n.partition.parts.iter().all(|g| g.is_connected(&w.tree)));
        prop_assert!(n.a_values.iter().all(|&x| x <= eps * (1.0 + 1e-9)));
        let m = compute_m(&w.tree, &w.u, &w.v, &k, PNorm::TWO, eps, &opts).unwrap();
        prop_assert!(m.a_values.iter().all(|&x| x > eps));
        for (i, x) in m.parts.iter().enumerate() {
            for y in &m.parts[i + 1..] {
                prop_assert!(x.overlap(y) <= 1e-9);
            }
        }
    }

    #[test]
    fn counts_are_monotone_in_eps(seed in any::<u64>(), edges in 1usize..4) {
        let (w, _) = tree(seed, edges);
        let k = w.whole();
        let opts = partition_opts();
        let whole = a(&w, &w.u, &w.v, &k, PNorm::TWO);
        let mut last: Option<(usize, usize)> = None;
        for split in [1.5, 3.0, 6.0] {
            let eps = whole / split;
            let n = compute_n(&w.tree, &w.u, &w.v, &k, PNorm::TWO, eps, &opts).unwrap().n_upper;
            let m = compute_m(&w.tree, &w.u, &w.v, &k, PNorm::TWO, eps, &opts).unwrap().m_lower;
            if let Some((n0, m0)) = last {
                prop_assert!(n >= n0 && m >= m0, "eps = {eps}: N {n0} -> {n}, M {m0} -> {m}");
            }
            last = Some((n, m));
        }
    }

    #[test]
    fn weak_norm_is_below_strong(xs in prop::collection::vec(-10.0f64..10.0, 0..40), q in 1.0f64..6.0) {
        prop_assert!(weak_lq_norm(&xs, q) <= lq_norm(&xs, q) * (1.0 + 1e-12) + 1e-300);
    }

    #[test]
    fn sigma_masses_are_consistent(seed in any::<u64>(), edges in 1usize..6, x in 1.2f64..4.0) {
        let (w, _) = tree(seed, edges);
        let q = p(x);
        let table = sigma_table(&w.tree, &w.u, &w.v, q).unwrap();
        for e in &table.entries {
            let lhs = e.sigma.powf(x);
            prop_assert!((lhs - 2f64.powi(e.k) * e.mu).abs() <= 1e-12 * lhs.max(1e-300));
        }
        for &(k, s) in &table.sigma_k {
            let parts: f64 = table.entries.iter().filter(|e| e.k == k).map(|e| e.sigma.powf(x)).sum();
            prop_assert!((s.powf(x) - parts).abs() <= 1e-12 * parts);
        }
        let mu_total: f64 = table.entries.iter().map(|e| e.mu).sum();
        let v_total = integrate(&w.tree, &w.v, &w.whole(), |y| y.powf(x));
        prop_assert!(mu_total <= v_total * (1.0 + 1e-12));
    }

    #[test]
    fn lower_bound_is_below_norm(seed in any::<u64>(), edges in 1usize..5) {
        let (w, _) = tree(seed, edges);
        let k = w.whole();
        for q in [PNorm::ONE, PNorm::TWO, PNorm::INF] {
            let op = DiscretizedOperator::new(&w.tree, &w.u, &w.v, &k, TreePoint::ROOT, q, res(256), &[]).unwrap();
            let norm = op_norm(&op, &NormOptions::default()).value;
            let lower = norm_lower_bound(&w.tree, &w.u, &w.v, q, 16);
            prop_assert!(lower <= norm * (1.0 + 1e-2), "p = {}: {lower} > {norm}", q.p());
        }
    }
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn rooting_keeps_length_and_weights(seed in any::<u64>(), edges in 1usize..7) {
        let mut r = rng(seed);
        let t = random::tree(&mut r, edges, 0.3, 1.5).unwrap();
        let u = random::step_weight(&mut r, &t, 3, 0.2, 2.0).unwrap();
        let total = t.total_length();
        let one = hardy_tree_core::StepWeight::constant(&t, 1.0);
        let w = WeightedTree::new(t.clone(), random::location(&mut r, &t), &u, &one).unwrap();
        prop_assert!((w.tree.tree().total_length() - total).abs() <= 1e-12 * total);
        let k = w.whole();
        prop_assert!(k.is_connected(&w.tree));
        // ∫ u v with v ≡ 1 does not depend on where the tree is rooted
        let direct: f64 = (0..t.edge_count()).map(|e| u.pieces(e).iter().map(|(l, x)| l * x).sum::<f64>()).sum();
        prop_assert!((w.integral_uv() - direct).abs() <= 1e-12 * direct);
    }
}
