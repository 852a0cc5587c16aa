//! One function per subcommand. Each returns a [`Report`]; writing files is left to [`crate::run`].

use hardy_tree_core::asymptotics::{
    alpha_p, boundedness_check, endpoint_targets, level_family, lq_bound_checks, norm_lower_bound,
    p1_inf_bounds, regular_tree_bound, sigma_table, Endpoint, PackingNorms,
};
use hardy_tree_core::operator::norm_at_root;
use hardy_tree_core::partition::{exact_n, scan_row, ScanTable, ORACLE_MAX_EDGES};
use hardy_tree_core::tree::{Seg, TreePoint};
use hardy_tree_core::{
    a_value, approx_numbers_p2, compute_m, compute_n, op_norm, AOptions, DiscretizedOperator, Error, PNorm,
    PartitionOptions, Resolution, RootedTree, SingularSpectrum, Subtree, WeightedTree,
};
use rayon::prelude::*;

use crate::acceptance;
use crate::config::{Command, RunConfig};
use crate::error::CliError;
use crate::format::LoadedTree;
use crate::output::{Report, Table, Value};
use crate::plot::Plot;

/// Cells per piece used by the exhaustive `N` oracle in `partition`.
pub const ORACLE_GRID: usize = 128;

pub fn dispatch(cfg: &RunConfig) -> Result<Report, CliError> {
    if cfg.command == Command::Verify {
        return verify(cfg);
    }
    let tree = cfg.input.as_ref().expect("checked by RunConfig").load()?;
    match cfg.command {
        Command::Validate => Ok(validate(&tree)),
        Command::Norm => norm(cfg, &tree.weighted),
        Command::Afun => afun(cfg, &tree.weighted),
        Command::Approx => approx(cfg, &tree.weighted),
        Command::Partition => partition(cfg, &tree.weighted),
        Command::Scan => scan(cfg, &tree.weighted),
        Command::Sigma => sigma(cfg, &tree.weighted),
        Command::Bounds => bounds(cfg, &tree.weighted),
        Command::Verify => unreachable!(),
    }
}

pub fn a_options(cfg: &RunConfig) -> AOptions {
    AOptions { resolution: cfg.grid, norm: cfg.norm_options(), ..AOptions::default() }
}

pub fn partition_options(cfg: &RunConfig) -> PartitionOptions {
    PartitionOptions { a: a_options(cfg), ..PartitionOptions::default() }
}

pub fn point_label(pt: Option<TreePoint>) -> String {
    match pt {
        None => String::new(),
        Some(TreePoint { edge: None, .. }) => "root".into(),
        Some(TreePoint { edge: Some(e), down }) => format!("e{e}@{down}"),
    }
}

/// `e<edge>[lo;hi]` pieces in root-oriented offsets, joined by spaces.
pub fn segments_label(k: &Subtree) -> String {
    k.segs().iter().map(|s| format!("e{}[{};{}]", s.edge, s.lo, s.hi)).collect::<Vec<_>>().join(" ")
}

pub fn spectrum(w: &WeightedTree, res: Resolution, count: usize) -> Result<SingularSpectrum, CliError> {
    let op = DiscretizedOperator::at_anchor(&w.tree, &w.u, &w.v, &w.whole(), PNorm::TWO, res)?;
    Ok(approx_numbers_p2(&op, count)?)
}

fn validate(tree: &LoadedTree) -> Report {
    let w = &tree.weighted;
    let mt = w.tree.tree();
    let mut summary = Table::new("tree", &["name", "vertices", "edges", "total_length", "integral_uv"]);
    summary.push(vec![
        tree.name.as_str().into(),
        tree.file.vertices.len().into(),
        tree.file.edges.len().into(),
        mt.total_length().into(),
        w.integral_uv().into(),
    ]);
    let mut edges = Table::new("edges", &["id", "from", "to", "length", "u_pieces", "v_pieces"]);
    for e in &tree.file.edges {
        edges.push(vec![
            Value::Int(e.id as i64),
            Value::Int(e.from as i64),
            Value::Int(e.to as i64),
            e.length.into(),
            e.u.len().into(),
            e.v.len().into(),
        ]);
    }
    Report { tables: vec![summary, edges], ..Report::default() }
}

fn norm(cfg: &RunConfig, w: &WeightedTree) -> Result<Report, CliError> {
    let op = DiscretizedOperator::at_anchor(&w.tree, &w.u, &w.v, &w.whole(), cfg.p, cfg.grid)?;
    let est = op_norm(&op, &cfg.norm_options());
    let lower = norm_lower_bound(&w.tree, &w.u, &w.v, cfg.p, 64);
    let mut t = Table::new("norm", &["p", "cells", "norm", "method", "stagnated", "iterations", "lower_bound"]);
    t.push(vec![
        cfg.p.p().into(),
        op.len().into(),
        est.value.into(),
        format!("{:?}", est.method).into(),
        est.stagnated.into(),
        est.iterations.into(),
        lower.into(),
    ]);
    Ok(Report { tables: vec![t], ..Report::default() })
}

fn afun(cfg: &RunConfig, w: &WeightedTree) -> Result<Report, CliError> {
    let a = a_value(&w.tree, &w.u, &w.v, &w.whole(), cfg.p, &a_options(cfg))?;
    let mut t = Table::new("afun", &["p", "cells", "a", "method", "root", "stagnated"]);
    t.push(vec![
        cfg.p.p().into(),
        cfg.grid.cells().into(),
        a.value.into(),
        format!("{:?}", a.method).into(),
        point_label(a.root).into(),
        a.stagnated.into(),
    ]);
    Ok(Report { tables: vec![t], ..Report::default() })
}

fn require_p2(p: PNorm) -> Result<(), CliError> {
    if p.is_two() {
        Ok(())
    } else {
        Err(Error::UnsupportedExponent { p: p.p(), reason: "approximation numbers are computed for p = 2 only" }.into())
    }
}

fn spectrum_table(s: &SingularSpectrum, target: f64) -> Table {
    let mut t = Table::new("spectrum", &["n", "a_n", "n_a_n", "target", "rel_dev"]);
    for (i, &a) in s.values.iter().enumerate() {
        let na = (i + 1) as f64 * a;
        let dev = if target > 0.0 { Value::Num((na - target).abs() / target) } else { Value::Missing };
        t.push(vec![(i + 1).into(), a.into(), na.into(), target.into(), dev]);
    }
    t
}

fn approx(cfg: &RunConfig, w: &WeightedTree) -> Result<Report, CliError> {
    require_p2(cfg.p)?;
    let s = spectrum(w, cfg.grid, cfg.n_max)?;
    let target = w.integral_uv() / std::f64::consts::PI;
    let mut failures = Vec::new();
    if !s.converged {
        failures.push("singular values did not converge".to_string());
    }
    let plot = Plot {
        title: "n a_n against the limit".into(),
        x_label: "n".into(),
        y_label: "n a_n".into(),
        points: s.values.iter().enumerate().map(|(i, a)| ((i + 1) as f64, (i + 1) as f64 * a)).collect(),
        target,
    };
    Ok(Report { tables: vec![spectrum_table(&s, target)], failures, plot: Some(plot) })
}

fn partition(cfg: &RunConfig, w: &WeightedTree) -> Result<Report, CliError> {
    let eps = cfg.eps_start;
    let k = w.whole();
    let opts = partition_options(cfg);
    let n = compute_n(&w.tree, &w.u, &w.v, &k, cfg.p, eps, &opts)?;
    let m = compute_m(&w.tree, &w.u, &w.v, &k, cfg.p, eps, &opts)?;
    // the oracle needs many A evaluations; only the direct methods are fast enough
    let exact = if k.segs().len() <= ORACLE_MAX_EDGES && (cfg.p.is_one() || cfg.p.is_two()) {
        let res = Resolution::new(ORACLE_GRID.min(cfg.grid.cells()))?;
        Some(exact_n(&w.tree, &w.u, &w.v, &k, cfg.p, eps, &AOptions { resolution: res, ..a_options(cfg) })?)
    } else {
        None
    };
    let mut counts = Table::new("counts", &["eps", "n_upper", "n_exact", "m_lower", "tol", "estimate_only"]);
    counts.push(vec![
        eps.into(),
        n.n_upper.into(),
        exact.into(),
        m.m_lower.into(),
        n.tol.max(m.tol).into(),
        n.estimate_only.into(),
    ]);
    let mut parts = Table::new("parts", &["set", "index", "length", "a", "segments"]);
    for (i, (g, a)) in n.partition.parts.iter().zip(&n.a_values).enumerate() {
        parts.push(vec!["cover".into(), i.into(), g.length().into(), (*a).into(), segments_label(g).into()]);
    }
    for (i, (g, a)) in m.parts.iter().zip(&m.a_values).enumerate() {
        parts.push(vec!["packing".into(), i.into(), g.length().into(), (*a).into(), segments_label(g).into()]);
    }
    Ok(Report { tables: vec![counts, parts], ..Report::default() })
}

fn scan(cfg: &RunConfig, w: &WeightedTree) -> Result<Report, CliError> {
    let k = w.whole();
    let opts = partition_options(cfg);
    let alpha = alpha_p(cfg.p, &cfg.norm_options())?;
    let integral = w.integral_uv();
    let target = alpha.value * integral;
    let rows = cfg
        .schedule()
        .par_iter()
        .map(|&eps| scan_row(&w.tree, &w.u, &w.v, &k, cfg.p, eps, &opts))
        .collect::<Result<Vec<_>, _>>()?;
    let table = ScanTable::from_rows(rows, target);

    let mut summary = Table::new("summary", &["alpha_p", "alpha_err", "alpha_exact", "integral_uv", "target", "monotone"]);
    summary.push(vec![
        alpha.value.into(),
        alpha.error.into(),
        alpha.exact.into(),
        integral.into(),
        target.into(),
        table.monotone.into(),
    ]);
    let mut tables = vec![summary];
    if cfg.p.is_two() {
        tables.push(spectrum_table(&spectrum(w, cfg.grid, cfg.n_max)?, target));
    }
    let mut t = Table::new(
        "scan",
        &["eps", "n_upper", "m_lower", "eps_n", "eps_m", "rel_dev_n", "tol", "flagged", "target"],
    );
    for r in &table.rows {
        let dev = if target > 0.0 { Value::Num((r.eps_n - target).abs() / target) } else { Value::Missing };
        t.push(vec![
            r.eps.into(),
            r.n_upper.into(),
            r.m_lower.into(),
            r.eps_n.into(),
            r.eps_m.into(),
            dev,
            r.tol.into(),
            r.flagged.into(),
            target.into(),
        ]);
    }
    tables.push(t);
    let plot = Plot {
        title: "eps N(eps) against the limit".into(),
        x_label: "eps".into(),
        y_label: "eps N".into(),
        points: table.rows.iter().map(|r| (r.eps, r.eps_n)).collect(),
        target,
    };
    Ok(Report { tables, failures: Vec::new(), plot: Some(plot) })
}

fn sigma(cfg: &RunConfig, w: &WeightedTree) -> Result<Report, CliError> {
    let tab = sigma_table(&w.tree, &w.u, &w.v, cfg.p)?;
    let mut summary = Table::new("summary", &["k_min", "k_max", "sup_sigma", "dropped_mass", "entries"]);
    summary.push(vec![
        tab.k_min.into(),
        tab.k_max.into(),
        tab.sup_sigma().into(),
        tab.dropped_mass.into(),
        tab.entries.len().into(),
    ]);
    let mut t = Table::new("sigma", &["k", "i", "mu", "sigma", "B"]);
    for e in &tab.entries {
        t.push(vec![e.k.into(), e.i.into(), e.mu.into(), e.sigma.into(), e.b.into()]);
    }
    Ok(Report { tables: vec![summary, t], ..Report::default() })
}

const BOUND_COLUMNS: [&str; 8] = ["check", "q", "eps", "lhs", "middle", "rhs", "ratio", "ok"];

fn bound_row(check: &str, q: Option<f64>, eps: Option<f64>, lhs: f64, middle: Option<f64>, rhs: f64, ok: Option<bool>) -> Vec<Value> {
    let ratio = if rhs != 0.0 { Value::Num(lhs / rhs) } else { Value::Missing };
    vec![check.into(), q.into(), eps.into(), lhs.into(), middle.into(), rhs.into(), ratio, ok.into()]
}

/// Norms of the greedy packing parts, each rooted at its own anchor.
pub fn packing_norms(
    w: &WeightedTree,
    p: PNorm,
    eps: f64,
    opts: &PartitionOptions,
) -> Result<PackingNorms, CliError> {
    let m = compute_m(&w.tree, &w.u, &w.v, &w.whole(), p, eps, opts)?;
    let part_norms = m
        .parts
        .iter()
        .map(|g| norm_at_root(&w.tree, &w.u, &w.v, g, g.anchor(&w.tree), p, opts.a.resolution, &opts.a.norm).map(|e| e.value))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(PackingNorms { eps, part_norms })
}

/// The whole of edge `e`.
pub fn edge_subtree(t: &RootedTree, e: usize) -> Result<Subtree, CliError> {
    Ok(Subtree::from_segments(t, vec![Seg { edge: e, lo: 0.0, hi: t.len(e) }])?)
}

fn bounds(cfg: &RunConfig, w: &WeightedTree) -> Result<Report, CliError> {
    const REL_TOL: f64 = 1e-6;
    let (t, u, v, p) = (&w.tree, &w.u, &w.v, cfg.p);
    let mut table = Table::new("bounds", &BOUND_COLUMNS);
    let mut failures = Vec::new();
    let mut check = |table: &mut Table, row: Vec<Value>, ok: bool, what: String| {
        table.push(row);
        if !ok {
            failures.push(what);
        }
    };

    let op = DiscretizedOperator::at_anchor(t, u, v, &w.whole(), p, cfg.grid)?;
    let norm = op_norm(&op, &cfg.norm_options()).value;
    let family = level_family(t, u, p, 64)?;
    let b = boundedness_check(t, u, v, p, &family, norm, REL_TOL)?;
    check(&mut table, bound_row("a_hat<=norm", None, None, b.a_hat, None, norm, Some(b.lower_ok)), b.lower_ok, "Â ≤ ‖T‖".into());
    let within = b.within_four;
    check(
        &mut table,
        bound_row("norm<=4a_hat", None, None, norm, None, 4.0 * b.a_hat, Some(within)),
        within,
        "‖T‖ ≤ 4Â".into(),
    );

    if !(p.is_one() || p.is_inf()) {
        let tab = sigma_table(t, u, v, p)?;
        let spec = if p.is_two() {
            spectrum(w, cfg.grid, cfg.n_max)?
        } else {
            SingularSpectrum { values: Vec::new(), cells: 0, converged: true }
        };
        let opts = partition_options(cfg);
        let packings = cfg
            .schedule()
            .par_iter()
            .map(|&eps| packing_norms(w, p, eps, &opts))
            .collect::<Result<Vec<_>, _>>()?;
        for q in [1.0, 2.0] {
            let r = lq_bound_checks(&spec, &tab, q, norm, &packings, REL_TOL)?;
            if q == 1.0 {
                check(
                    &mut table,
                    bound_row("sup_sigma<=norm", None, None, r.sup_sigma, None, norm, Some(r.sup_ok)),
                    r.sup_ok,
                    "sup σ ≤ ‖T‖".into(),
                );
            }
            for pb in &r.packing {
                check(
                    &mut table,
                    bound_row("packing", Some(q), Some(pb.eps), pb.lhs, Some(pb.middle), pb.rhs, Some(pb.ok)),
                    pb.ok,
                    format!("packing inequality at q = {q}, ε = {}", pb.eps),
                );
            }
            for (name, ratio) in [
                ("ratio_weighted", r.ratio_weighted),
                ("ratio_levels", r.ratio_levels),
                ("ratio_weak", r.ratio_weak),
                ("ratio_reverse", r.ratio_reverse),
            ] {
                if let Some(x) = ratio {
                    table.push(vec![name.into(), q.into(), Value::Missing, Value::Missing, Value::Missing, Value::Missing, x.into(), Value::Missing]);
                }
            }
            check(
                &mut table,
                bound_row("weak<=strong", Some(q), None, 0.0, None, 0.0, Some(r.weak_below_strong)),
                r.weak_below_strong,
                format!("weak l^q ≤ l^q at q = {q}"),
            );
        }
        if let Ok(rb) = regular_tree_bound(t, &tab) {
            check(
                &mut table,
                bound_row("regular_tree_B", None, None, rb.max_b as f64, None, rb.bound, Some(rb.ok)),
                rb.ok,
                "B_{k,i} bound on the regular tree".into(),
            );
        }
    }

    let a = a_options(cfg);
    for e in 0..t.edge_count() {
        let k = edge_subtree(t, e)?;
        for which in [Endpoint::Infinity, Endpoint::One] {
            let name = match which {
                Endpoint::Infinity => format!("interval_inf_e{e}"),
                Endpoint::One => format!("interval_one_e{e}"),
            };
            match p1_inf_bounds(t, u, v, &k, which, &a, REL_TOL) {
                Ok(ib) => {
                    let ok = ib.passed();
                    check(
                        &mut table,
                        bound_row(&name, None, None, ib.rearranged, Some(ib.a_s), ib.a_delta, Some(ok)),
                        ok,
                        format!("{name} interval inequalities"),
                    );
                }
                // the fixed weight is not constant on this edge
                Err(Error::Domain(_)) => {}
                Err(e) => return Err(e.into()),
            }
        }
    }
    let (tu, tv) = endpoint_targets(t, u, v);
    table.push(bound_row("target_u_vs", None, None, tu, None, tv, None));
    Ok(Report { tables: vec![table], failures, plot: None })
}

fn verify(cfg: &RunConfig) -> Result<Report, CliError> {
    let results = acceptance::run(cfg.seed, &acceptance::SUITE)?;
    let mut t = Table::new("acceptance", &["criterion", "name", "passed", "detail"]);
    let mut failures = Vec::new();
    for r in &results {
        t.push(vec![(r.id as usize).into(), r.name.into(), r.passed.into(), r.detail.as_str().into()]);
        if !r.passed {
            failures.push(format!("criterion {} ({}): {}", r.id, r.name, r.detail));
        }
    }
    Ok(Report { tables: vec![t], failures, plot: None })
}
