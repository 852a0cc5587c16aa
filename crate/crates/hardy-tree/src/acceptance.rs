//! The acceptance suite run by `verify`.
//!
//! Criteria 1 to 10 are computed here. Criterion 11 (two `verify` runs with the same
//! seed give identical bytes) compares two rendered outputs with [`determinism`].

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use hardy_tree_core::asymptotics::{
    boundedness_check, endpoint_targets, level_family, lq_bound_checks, p1_inf_bounds, regular_tree_bound,
    sigma_table, Endpoint,
};
use hardy_tree_core::partition::{exact_n, sandwich_check};
use hardy_tree_core::tree::root_at;
use hardy_tree_core::weights::lp_norm;
use hardy_tree_core::{
    a_value, compute_m, compute_n, op_norm, random, AOptions, DiscretizedOperator, Location, MetricTree,
    NormOptions, PNorm, PartitionOptions, Resolution, StepWeight, WeightedTree,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::commands::{packing_norms, spectrum};
use crate::error::CliError;
use crate::fixtures::{self, Fixture};

#[derive(Debug, Clone, PartialEq)]
pub struct CriterionResult {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl CriterionResult {
    /// `PASS  3 interval partition count: ...`
    pub fn line(&self) -> String {
        format!("{} {:>2} {}: {}", if self.passed { "PASS" } else { "FAIL" }, self.id, self.name, self.detail)
    }
}

/// The criteria `verify` computes.
pub const SUITE: [u8; 10] = [1, 2, 3, 4, 5, 6, 7, 8, 9, 10];

pub fn name(id: u8) -> &'static str {
    match id {
        1 => "volterra spectrum",
        2 => "asymptotic law",
        3 => "interval partition count",
        4 => "sandwich",
        5 => "packing/covering ratio",
        6 => "root invariance",
        7 => "lipschitz",
        8 => "boundedness",
        9 => "sigma suite",
        10 => "p=1,inf interval bounds",
        11 => "determinism",
        _ => "unknown",
    }
}

/// Runs the given criteria; results come back in the order asked for.
pub fn run(seed: u64, ids: &[u8]) -> Result<Vec<CriterionResult>, CliError> {
    ids.par_iter().map(|&id| criterion(id, seed)).collect()
}

pub fn criterion(id: u8, seed: u64) -> Result<CriterionResult, CliError> {
    let (passed, detail) = match id {
        1 => volterra()?,
        2 => asymptotic_law()?,
        3 => interval_count()?,
        4 => sandwich()?,
        5 => packing_ratio(seed)?,
        6 => root_invariance(seed)?,
        7 => lipschitz(seed)?,
        8 => boundedness()?,
        9 => sigma_suite()?,
        10 => interval_bounds(seed)?,
        _ => return Err(CliError::Usage(format!("no criterion {id} in the suite"))),
    };
    Ok(CriterionResult { id, name: name(id), passed, detail })
}

/// Criterion 11 on two rendered `verify` outputs.
pub fn determinism(first: &[u8], second: &[u8]) -> CriterionResult {
    let passed = first == second;
    let detail = if passed {
        format!("{} identical bytes", first.len())
    } else {
        let at = first.iter().zip(second).position(|(a, b)| a != b).unwrap_or(first.len().min(second.len()));
        format!("outputs differ from byte {at}")
    };
    CriterionResult { id: 11, name: name(11), passed, detail }
}

fn rng(seed: u64, id: u8) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ u64::from(id).wrapping_mul(0x9e37_79b9_7f4a_7c15))
}

fn load_all() -> Result<Vec<(Fixture, WeightedTree)>, CliError> {
    fixtures::ALL.iter().map(|f| Ok((*f, f.load()?.weighted))).collect()
}

fn res(cells: usize) -> Resolution {
    Resolution::new(cells).expect("positive cell count")
}

fn a_opts(cells: usize) -> AOptions {
    AOptions { resolution: res(cells), ..AOptions::default() }
}

fn rel(a: f64, b: f64) -> f64 {
    let s = a.abs().max(b.abs());
    if s == 0.0 {
        0.0
    } else {
        (a - b).abs() / s
    }
}

fn volterra() -> Result<(bool, String), CliError> {
    let w = fixtures::UNIT_INTERVAL.load()?.weighted;
    let start = Instant::now();
    let s = spectrum(&w, res(2000), 10)?;
    let elapsed = start.elapsed();
    let worst = s
        .values
        .iter()
        .enumerate()
        .map(|(i, a)| {
            let exact = 2.0 / ((2 * i + 1) as f64 * PI);
            (a - exact).abs() / exact
        })
        .fold(0.0, f64::max);
    let passed = s.values.len() == 10 && worst <= 1e-3 && elapsed <= Duration::from_secs(60);
    Ok((passed, format!("worst relative error {worst:.3e} for n <= 10 on 2000 cells")))
}

fn asymptotic_law() -> Result<(bool, String), CliError> {
    let w = fixtures::BINARY_DEPTH3.load()?.weighted;
    let s = spectrum(&w, res(2048), 60)?;
    let target = w.integral_uv() / PI;
    let dev = |n: usize| ((n as f64 * s.values[n - 1]) - target).abs() / target;
    let at_60 = dev(60);
    let rises: Vec<usize> = (51..=60).filter(|&n| dev(n) > dev(n - 1)).collect();
    let passed = at_60 <= 0.1 && rises.is_empty();
    Ok((
        passed,
        format!(
            "|n a_n - 6/pi| / (6/pi) = {at_60:.3e} at n = 60; deviation grows at {} of 10 steps in n = 50..60 {:?}",
            rises.len(),
            rises
        ),
    ))
}

fn interval_count() -> Result<(bool, String), CliError> {
    let w = fixtures::UNIT_INTERVAL.load()?.weighted;
    let k = w.whole();
    let eps = [0.2, 0.1, 0.05, 0.02, 0.01];
    let counts = eps
        .par_iter()
        .map(|&e| Ok(compute_n(&w.tree, &w.u, &w.v, &k, PNorm::TWO, e, &PartitionOptions::default())?.n_upper))
        .collect::<Result<Vec<_>, CliError>>()?;
    let expected: Vec<usize> = eps.iter().map(|e| (1.0 / (PI * e)).ceil() as usize).collect();
    let last = 0.01 * counts[4] as f64;
    let dev = (last - 1.0 / PI).abs() * PI;
    let passed = counts == expected && dev <= 0.05;
    Ok((passed, format!("N = {counts:?}, expected {expected:?}; eps N at 0.01 off 1/pi by {dev:.3e}")))
}

/// `ε = α_2 ∫uv / s` for these `s`. Half-integers are avoided: on the interval and the
/// Y-tree they put `ε` exactly on a singular value.
pub const SANDWICH_SPLITS: [f64; 3] = [1.7, 3.3, 6.9];

fn sandwich_eps(w: &WeightedTree) -> Vec<f64> {
    let target = w.integral_uv() / PI;
    SANDWICH_SPLITS.iter().map(|n| target / n).collect()
}

fn sandwich() -> Result<(bool, String), CliError> {
    let trees = load_all()?;
    let slack = 5e-3;
    let per_fixture = trees
        .par_iter()
        .map(|(f, w)| {
            let k = w.whole();
            let opts = PartitionOptions::default();
            let mut rows = Vec::new();
            for eps in sandwich_eps(w) {
                let n = compute_n(&w.tree, &w.u, &w.v, &k, PNorm::TWO, eps, &opts)?;
                let m = compute_m(&w.tree, &w.u, &w.v, &k, PNorm::TWO, eps, &opts)?;
                rows.push((n, m));
            }
            let need = rows.iter().map(|(n, m)| n.n_upper.max(m.m_lower) + 1).max().unwrap_or(1);
            let spec = spectrum(w, res(2048), need)?;
            let reports: Vec<_> = rows
                .iter()
                .map(|(n, m)| sandwich_check(n, m, &spec, PNorm::TWO, w.tree.edge_count(), slack))
                .collect();
            Ok((f.name, reports))
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let mut total = 0;
    let mut ok = 0;
    let mut worst_upper: f64 = 0.0;
    let mut worst_lower = f64::INFINITY;
    let mut failed = Vec::new();
    for (name, reports) in &per_fixture {
        for r in reports {
            total += 1;
            if r.passed() {
                ok += 1;
            } else {
                failed.push(format!("{name}@{:.4}", r.eps));
            }
            if let Some(a) = r.a_n_plus_1 {
                worst_upper = worst_upper.max(a / (r.gamma * r.eps));
            }
            if let Some(a) = r.a_m {
                worst_lower = worst_lower.min(a / r.eps);
            }
        }
    }
    Ok((
        ok == total,
        format!(
            "{ok}/{total} (fixture, eps) pairs pass; max a_(N+1)/(gamma eps) = {worst_upper:.4}, min a_M/eps = {worst_lower:.4}{}",
            if failed.is_empty() { String::new() } else { format!("; failing {}", failed.join(" ")) }
        ),
    ))
}

pub const RANDOM_INSTANCES: usize = 50;

fn packing_ratio(seed: u64) -> Result<(bool, String), CliError> {
    let mut r = rng(seed, 5);
    let cases = (0..RANDOM_INSTANCES)
        .map(|_| {
            let edges = r.random_range(1..=5);
            let w = random::weighted_tree(&mut r, edges)?;
            Ok((w, r.random_range(1.5..4.0)))
        })
        .collect::<Result<Vec<(WeightedTree, f64)>, CliError>>()?;
    let opts = a_opts(128);
    let outcomes = cases
        .par_iter()
        .map(|(w, split)| {
            let k = w.whole();
            let a = a_value(&w.tree, &w.u, &w.v, &k, PNorm::TWO, &opts)?.value;
            let eps = a / split;
            let m = compute_m(&w.tree, &w.u, &w.v, &k, PNorm::TWO, eps, &PartitionOptions { a: opts, ..Default::default() })?;
            let n = exact_n(&w.tree, &w.u, &w.v, &k, PNorm::TWO, eps, &opts)?;
            Ok((m.m_lower, n))
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let violations = outcomes.iter().filter(|(m, n)| 3 * (m + 1) < *n).count();
    let worst = outcomes.iter().map(|(m, n)| (m + 1) as f64 / *n as f64).fold(f64::INFINITY, f64::min);
    Ok((
        violations == 0,
        format!("{violations} violations of M + 1 >= N_exact / 3 over {RANDOM_INSTANCES} random trees; min (M + 1) / N_exact = {worst:.3}"),
    ))
}

fn root_invariance(seed: u64) -> Result<(bool, String), CliError> {
    let trees = load_all()?;
    let mut r = rng(seed, 6);
    let roots: Vec<_> = trees
        .iter()
        .map(|(_, w)| {
            let b1 = w.tree.point(random::location(&mut r, w.tree.tree()))?;
            let b2 = w.tree.point(random::location(&mut r, w.tree.tree()))?;
            Ok((b1, b2))
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let out = trees
        .par_iter()
        .zip(&roots)
        .map(|((_, w), &(b1, b2))| {
            let k = w.whole();
            let at = |b| a_value(&w.tree, &w.u, &w.v, &k, PNorm::TWO, &AOptions { root: Some(b), ..a_opts(512) });
            let (a1, a2) = (at(b1)?.value, at(b2)?.value);
            let deflated = a_value(&w.tree, &w.u, &w.v, &k, PNorm::TWO, &a_opts(512))?.value;
            let mor = a_value(&w.tree, &w.u, &w.v, &k, PNorm::TWO, &AOptions { min_over_roots: true, ..a_opts(512) })?.value;
            Ok((rel(a1, a2), rel(deflated, mor)))
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let worst_root = out.iter().map(|x| x.0).fold(0.0, f64::max);
    let worst_mor = out.iter().map(|x| x.1).fold(0.0, f64::max);
    Ok((
        worst_root <= 1e-6 && worst_mor <= 1e-4,
        format!("max relative gap between two roots {worst_root:.3e}; deflated vs min over roots {worst_mor:.3e}"),
    ))
}

pub const PERTURBATIONS: usize = 200;

fn lipschitz(seed: u64) -> Result<(bool, String), CliError> {
    let trees = load_all()?;
    let seeds: Vec<u64> = {
        let mut r = rng(seed, 7);
        trees.iter().map(|_| r.random()).collect()
    };
    let per = trees
        .par_iter()
        .zip(&seeds)
        .map(|((_, w), &s)| {
            let mut r = ChaCha8Rng::seed_from_u64(s);
            let (t, k) = (&w.tree, w.whole());
            let opts = a_opts(256);
            let a = |u: &StepWeight, v: &StepWeight, p| a_value(t, u, v, &k, p, &opts).map(|x| x.value);
            let base = [a(&w.u, &w.v, PNorm::ONE)?, a(&w.u, &w.v, PNorm::TWO)?];
            let mut violations = 0;
            let mut worst: f64 = 0.0;
            for i in 0..PERTURBATIONS {
                let (p, a0) = if i % 2 == 0 { (PNorm::TWO, base[1]) } else { (PNorm::ONE, base[0]) };
                let pc = p.conj();
                let u2 = random::perturb(&mut r, &w.u, 0.5);
                let v2 = random::perturb(&mut r, &w.v, 0.5);
                let du = w.u.zip(&u2, |x, y| (x - y).abs());
                let dv = w.v.zip(&v2, |x, y| (x - y).abs());
                let au = a(&u2, &w.v, p)?;
                let av = a(&w.u, &v2, p)?;
                let rhs_u = lp_norm(t, &w.v, p, &k) * lp_norm(t, &du, pc, &k);
                let rhs_v = 2.0 * lp_norm(t, &dv, p, &k) * lp_norm(t, &w.u, pc, &k);
                for (lhs, rhs, other) in [((au - a0).abs(), rhs_u, au), ((av - a0).abs(), rhs_v, av)] {
                    if lhs > rhs + 1e-6 * a0.max(other) {
                        violations += 1;
                    }
                    if rhs > 0.0 {
                        worst = worst.max(lhs / rhs);
                    }
                }
            }
            Ok((violations, worst))
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let violations: usize = per.iter().map(|x| x.0).sum();
    let worst = per.iter().map(|x| x.1).fold(0.0, f64::max);
    Ok((
        violations == 0,
        format!(
            "{violations} violations over {} perturbations of u and of v on {} fixtures; max |dA| / bound = {worst:.3}",
            PERTURBATIONS,
            trees.len()
        ),
    ))
}

pub const BOUNDEDNESS_EXPONENTS: [f64; 5] = [1.0, 1.5, 2.0, 3.0, f64::INFINITY];

fn boundedness() -> Result<(bool, String), CliError> {
    let trees = [fixtures::UNIT_INTERVAL.load()?.weighted, fixtures::Y_TREE.load()?.weighted];
    let jobs: Vec<(usize, f64)> = (0..trees.len()).flat_map(|i| BOUNDEDNESS_EXPONENTS.map(|p| (i, p))).collect();
    let out = jobs
        .par_iter()
        .map(|&(i, p)| {
            let w = &trees[i];
            let p = PNorm::new(p)?;
            let op = DiscretizedOperator::at_anchor(&w.tree, &w.u, &w.v, &w.whole(), p, res(512))?;
            let norm = op_norm(&op, &NormOptions::default()).value;
            let family = level_family(&w.tree, &w.u, p, 64)?;
            Ok(boundedness_check(&w.tree, &w.u, &w.v, p, &family, norm, 1e-6)?)
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let ok = out.iter().filter(|b| b.lower_ok && b.within_four).count();
    let lo = out.iter().filter_map(|b| b.ratio).fold(f64::INFINITY, f64::min);
    let hi = out.iter().filter_map(|b| b.ratio).fold(0.0, f64::max);
    Ok((
        ok == out.len(),
        format!("{ok}/{} (tree, p) cases with A_hat <= |T| <= 4 A_hat; |T| / A_hat in [{lo:.4}, {hi:.4}]", out.len()),
    ))
}

fn sigma_suite() -> Result<(bool, String), CliError> {
    let trees = load_all()?;
    let out = trees
        .par_iter()
        .map(|(f, w)| {
            let p = PNorm::TWO;
            let tab = sigma_table(&w.tree, &w.u, &w.v, p)?;
            let op = DiscretizedOperator::at_anchor(&w.tree, &w.u, &w.v, &w.whole(), p, res(1024))?;
            let norm = op_norm(&op, &NormOptions::default()).value;
            let spec = spectrum(w, res(1024), 40)?;
            let opts = PartitionOptions::default();
            let packings = sandwich_eps(w)
                .into_iter()
                .map(|eps| packing_norms(w, p, eps, &opts))
                .collect::<Result<Vec<_>, CliError>>()?;
            let mut ok = true;
            let mut finite = true;
            for q in [1.0, 2.0] {
                let r = lq_bound_checks(&spec, &tab, q, norm, &packings, 1e-6)?;
                ok &= r.asserted_ok();
                finite &= r.ratios_finite();
            }
            let regular = regular_tree_bound(&w.tree, &tab).ok().map(|b| (b.max_b, b.bound));
            Ok((f.name, ok, finite, tab.sup_sigma() / norm, regular))
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let passed = out.iter().all(|x| x.1 && x.2);
    let worst = out.iter().map(|x| x.3).fold(0.0, f64::max);
    let failing: Vec<&str> = out.iter().filter(|x| !(x.1 && x.2)).map(|x| x.0).collect();
    let regular: Vec<String> =
        out.iter().filter_map(|x| x.4.map(|(b, bound)| format!("{}: max B = {b} vs {bound}", x.0))).collect();
    Ok((
        passed,
        format!(
            "max sup sigma / |T| = {worst:.4}; packing bounds q = 1, 2 and finite ratios on {} fixtures{}{}",
            out.len(),
            if failing.is_empty() { String::new() } else { format!("; failing {}", failing.join(" ")) },
            if regular.is_empty() { String::new() } else { format!("; {}", regular.join(", ")) }
        ),
    ))
}

pub const INTERVAL_INSTANCES: usize = 100;

fn interval_bounds(seed: u64) -> Result<(bool, String), CliError> {
    let mut r = rng(seed, 10);
    let cases: Vec<[f64; 5]> = (0..INTERVAL_INSTANCES)
        .map(|_| {
            let len = r.random_range(0.5..2.0);
            [len, len * r.random_range(0.2..0.8), r.random_range(0.5..2.0), r.random_range(0.1..2.0), r.random_range(0.1..2.0)]
        })
        .collect();
    let out = cases
        .par_iter()
        .map(|&[len, cut, gamma, g1, g2]| {
            let mt = MetricTree::interval(len)?;
            let fixed = StepWeight::constant(&mt, gamma);
            let varying = StepWeight::new(vec![vec![(cut, g1), (len - cut, g2)]])?;
            let t = root_at(mt, Location::Vertex(0))?;
            let k = hardy_tree_core::Subtree::whole(&t);
            let mut ok = true;
            let mut target_gap: f64 = 0.0;
            for which in [Endpoint::Infinity, Endpoint::One] {
                let (u, v) = match which {
                    Endpoint::Infinity => (&fixed, &varying),
                    Endpoint::One => (&varying, &fixed),
                };
                ok &= p1_inf_bounds(&t, u, v, &k, which, &a_opts(256), 1e-6)?.passed();
                let (tu, tv) = endpoint_targets(&t, u, v);
                let exact = gamma * (cut * g1 + (len - cut) * g2);
                target_gap = target_gap.max(rel(tu, exact)).max(rel(tv, exact));
            }
            Ok((ok, target_gap))
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let ok = out.iter().filter(|x| x.0).count();
    let gap = out.iter().map(|x| x.1).fold(0.0, f64::max);
    Ok((
        ok == out.len() && gap <= 1e-12,
        format!("{ok}/{} random two-step weights satisfy both endpoint bounds; target integrals off by {gap:.1e}", out.len()),
    ))
}
