//! The counting functions `N(K, ε)` and `M(K, ε)`: greedy covers and packings,
//! an exhaustive oracle for small trees, and the scan of `ε N(ε)`.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::operator::{a_value, AOptions, SingularSpectrum};
use crate::tree::{Partition, RootedTree, Seg, Subtree, SNAP};
use crate::weights::{integral_product, PNorm, StepWeight};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PartitionOptions {
    pub a: AOptions,
    /// Bisection stops when the cut is known to within this fraction of the edge length.
    pub bisect_rel_tol: f64,
    /// Re-evaluate every part at half resolution to estimate the grid tolerance.
    pub estimate_tol: bool,
}

impl Default for PartitionOptions {
    fn default() -> Self {
        Self { a: AOptions::default(), bisect_rel_tol: 1e-6, estimate_tol: true }
    }
}

/// A cover of `K` by subtrees with `A ≤ ε`.
#[derive(Debug, Clone)]
pub struct EpsPartitionResult {
    pub eps: f64,
    pub partition: Partition,
    pub a_values: Vec<f64>,
    pub n_upper: usize,
    pub n_exact: Option<usize>,
    /// Grid-induced uncertainty of the `A` values.
    pub tol: f64,
    /// `p ∈ {1, ∞}`: `A` is not continuous along edges, counts are estimates only.
    pub estimate_only: bool,
}

/// Non-overlapping subtrees of `K` with `A > ε`.
#[derive(Debug, Clone)]
pub struct EpsPackingResult {
    pub eps: f64,
    pub parts: Vec<Subtree>,
    pub a_values: Vec<f64>,
    pub m_lower: usize,
    pub tol: f64,
    pub estimate_only: bool,
}

struct Greedy<'a> {
    t: &'a RootedTree,
    u: &'a StepWeight,
    v: &'a StepWeight,
    k: &'a Subtree,
    p: PNorm,
    eps: f64,
    opts: &'a PartitionOptions,
    packing: bool,
    out: Vec<(Subtree, f64)>,
}

impl Greedy<'_> {
    fn a(&self, r: &Subtree) -> Result<f64> {
        Ok(a_value(self.t, self.u, self.v, r, self.p, &self.opts.a)?.value)
    }

    fn vertex_pending(&mut self, w: usize) -> Result<(Subtree, f64)> {
        let t = self.t;
        let mut kids = Vec::new();
        for &c in t.child_edges(w) {
            if let Some(s) = self.k.seg_on(c).copied() {
                if s.lo <= SNAP {
                    kids.push(self.seg_pending(s)?);
                }
            }
        }
        kids.sort_by(|a, b| a.1.total_cmp(&b.1));
        let top = Subtree::point(t.vertex_point(w));
        let (mut acc, mut a_acc) = (top.clone(), 0.0);
        for (r, ar) in kids {
            if r.is_degenerate() {
                continue;
            }
            if acc.is_degenerate() {
                acc = r;
                a_acc = ar;
                continue;
            }
            let cand = acc.union(&r);
            let ac = self.a(&cand)?;
            if ac <= self.eps {
                acc = cand;
                a_acc = ac;
            } else if self.packing {
                self.out.push((cand, ac));
                acc = top.clone();
                a_acc = 0.0;
            } else {
                self.out.push((r, ar));
            }
        }
        Ok((acc, a_acc))
    }

    /// Processes `s` and everything below it; returns the open region hanging from its top.
    fn seg_pending(&mut self, s: Seg) -> Result<(Subtree, f64)> {
        let t = self.t;
        let e = s.edge;
        let (mut pend, mut a_p) = if s.hi >= t.len(e) - SNAP {
            self.vertex_pending(t.child_vertex(e))?
        } else {
            (Subtree::point(t.point_on(e, s.hi)), 0.0)
        };
        let tol = (t.len(e) * self.opts.bisect_rel_tol).max(1e-12);
        let mut x = s.hi;
        while x > s.lo + SNAP {
            let ext = |y: f64| pend.with_seg(Seg { edge: e, lo: y, hi: x });
            let full = ext(s.lo);
            let a_full = self.a(&full)?;
            if a_full <= self.eps {
                pend = full;
                a_p = a_full;
                break;
            }
            // feasible at `hi`, infeasible at `lo`
            let (mut lo, mut hi) = (s.lo, x);
            let (mut a_lo, mut a_hi) = (a_full, a_p);
            while hi - lo > tol {
                let mid = 0.5 * (lo + hi);
                let am = self.a(&ext(mid))?;
                if am <= self.eps {
                    hi = mid;
                    a_hi = am;
                } else {
                    lo = mid;
                    a_lo = am;
                }
            }
            if self.packing {
                self.out.push((ext(lo), a_lo));
                x = lo;
            } else if x - hi > tol {
                self.out.push((ext(hi), a_hi));
                x = hi;
            } else if !pend.is_degenerate() {
                self.out.push((pend.clone(), a_p));
            } else {
                let y = (x - tol).max(s.lo);
                let piece = ext(y);
                let ap = self.a(&piece)?;
                self.out.push((piece, ap));
                x = y;
            }
            pend = Subtree::point(t.point_on(e, x));
            a_p = 0.0;
        }
        Ok((pend, a_p))
    }

    fn run(&mut self) -> Result<(Subtree, f64)> {
        let t = self.t;
        let anchor = self.k.anchor(t);
        match anchor.edge {
            Some(e) if anchor.down < t.len(e) - SNAP => {
                let s = *self.k.seg_on(e).ok_or_else(|| Error::InvalidSubtree("anchor off the subtree".into()))?;
                self.seg_pending(s)
            }
            _ => {
                let w = match anchor.edge {
                    None => t.root(),
                    Some(e) => t.child_vertex(e),
                };
                self.vertex_pending(w)
            }
        }
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if eps.is_nan() || eps <= 0.0 {
        return Err(Error::Domain(format!("ε must be positive, got {eps}")));
    }
    Ok(())
}

fn grid_tol(
    t: &RootedTree,
    u: &StepWeight,
    v: &StepWeight,
    parts: &[(Subtree, f64)],
    p: PNorm,
    opts: &PartitionOptions,
) -> Result<f64> {
    if !opts.estimate_tol {
        return Ok(0.0);
    }
    let mut coarse = opts.a;
    coarse.resolution = crate::grid::Resolution::new((opts.a.resolution.cells() / 2).max(2))?;
    let mut tol: f64 = 0.0;
    for (r, a) in parts {
        let ac = a_value(t, u, v, r, p, &coarse)?.value;
        tol = tol.max((ac - a).abs());
    }
    Ok(tol)
}

/// Greedy leaf-to-root cover of `k` by subtrees with `A ≤ ε`; its size bounds `N(K, ε)` above.
pub fn compute_n(
    t: &RootedTree,
    u: &StepWeight,
    v: &StepWeight,
    k: &Subtree,
    p: PNorm,
    eps: f64,
    opts: &PartitionOptions,
) -> Result<EpsPartitionResult> {
    check_eps(eps)?;
    let mut g = Greedy { t, u, v, k, p, eps, opts, packing: false, out: Vec::new() };
    if k.is_degenerate() {
        g.out.push((k.clone(), 0.0));
    } else {
        let whole = g.a(k)?;
        if whole <= eps {
            g.out.push((k.clone(), whole));
        } else {
            let (last, a_last) = g.run()?;
            if !last.is_degenerate() {
                g.out.push((last, a_last));
            }
        }
    }
    let tol = grid_tol(t, u, v, &g.out, p, opts)?;
    let partition = Partition { parent: k.clone(), parts: g.out.iter().map(|x| x.0.clone()).collect() };
    if !k.is_degenerate() {
        partition.check(t)?;
    }
    Ok(EpsPartitionResult {
        eps,
        n_upper: g.out.len(),
        a_values: g.out.iter().map(|x| x.1).collect(),
        partition,
        n_exact: None,
        tol,
        estimate_only: p.is_one() || p.is_inf(),
    })
}

/// Greedy packing: grow from the leaves and claim each region as soon as `A > ε`;
/// its size bounds `M(K, ε)` below.
pub fn compute_m(
    t: &RootedTree,
    u: &StepWeight,
    v: &StepWeight,
    k: &Subtree,
    p: PNorm,
    eps: f64,
    opts: &PartitionOptions,
) -> Result<EpsPackingResult> {
    check_eps(eps)?;
    let mut g = Greedy { t, u, v, k, p, eps, opts, packing: true, out: Vec::new() };
    if !k.is_degenerate() && g.a(k)? > eps {
        g.run()?;
    }
    let tol = grid_tol(t, u, v, &g.out, p, opts)?;
    Ok(EpsPackingResult {
        eps,
        m_lower: g.out.len(),
        a_values: g.out.iter().map(|x| x.1).collect(),
        parts: g.out.into_iter().map(|x| x.0).collect(),
        tol,
        estimate_only: p.is_one() || p.is_inf(),
    })
}

/// Cut positions per piece of `K` in the exhaustive oracle.
pub const ORACLE_ATOMS: usize = 32;
/// Largest number of pieces of `K` the oracle accepts.
pub const ORACLE_MAX_EDGES: usize = 8;

type Bits = [u64; 4];

fn bit(i: usize) -> Bits {
    let mut b = [0; 4];
    b[i / 64] |= 1 << (i % 64);
    b
}

fn or(a: &Bits, b: &Bits) -> Bits {
    [a[0] | b[0], a[1] | b[1], a[2] | b[2], a[3] | b[3]]
}

fn subset(a: &Bits, b: &Bits) -> bool {
    (0..4).all(|i| a[i] & !b[i] == 0)
}

fn is_empty(a: &Bits) -> bool {
    a.iter().all(|x| *x == 0)
}

fn count(a: &Bits) -> u32 {
    a.iter().map(|x| x.count_ones()).sum()
}

/// Keeps states not dominated by one with fewer closed parts and a smaller open region.
fn prune(mut states: Vec<(usize, Bits)>) -> Vec<(usize, Bits)> {
    states.sort_by(|a, b| a.0.cmp(&b.0).then(count(&a.1).cmp(&count(&b.1))).then(a.1.cmp(&b.1)));
    states.dedup();
    let mut kept: Vec<(usize, Bits)> = Vec::new();
    for s in states {
        if !kept.iter().any(|k| k.0 <= s.0 && subset(&k.1, &s.1)) {
            kept.push(s);
        }
    }
    kept
}

struct Oracle<'a> {
    t: &'a RootedTree,
    u: &'a StepWeight,
    v: &'a StepWeight,
    k: &'a Subtree,
    p: PNorm,
    eps: f64,
    opts: &'a AOptions,
    seg_base: Vec<usize>,
    cache: BTreeMap<Bits, f64>,
}

impl Oracle<'_> {
    fn region(&self, b: &Bits) -> Result<Subtree> {
        let mut segs = Vec::new();
        for (si, s) in self.k.segs().iter().enumerate() {
            let h = s.length() / ORACLE_ATOMS as f64;
            let mut j = 0;
            while j < ORACLE_ATOMS {
                let idx = self.seg_base[si] + j;
                if b[idx / 64] >> (idx % 64) & 1 == 1 {
                    let start = j;
                    while j < ORACLE_ATOMS && {
                        let idx = self.seg_base[si] + j;
                        b[idx / 64] >> (idx % 64) & 1 == 1
                    } {
                        j += 1;
                    }
                    let hi = if j == ORACLE_ATOMS { s.hi } else { s.lo + h * j as f64 };
                    segs.push(Seg { edge: s.edge, lo: s.lo + h * start as f64, hi });
                } else {
                    j += 1;
                }
            }
        }
        Subtree::from_segments(self.t, segs)
    }

    fn feasible(&mut self, b: &Bits) -> Result<bool> {
        if let Some(a) = self.cache.get(b) {
            return Ok(*a <= self.eps);
        }
        let r = self.region(b)?;
        let a = a_value(self.t, self.u, self.v, &r, self.p, self.opts)?.value;
        self.cache.insert(*b, a);
        Ok(a <= self.eps)
    }

    fn seg_index(&self, e: usize) -> Option<usize> {
        self.k.segs().iter().position(|s| s.edge == e)
    }

    fn seg_states(&mut self, si: usize) -> Result<Vec<(usize, Bits)>> {
        let s = self.k.segs()[si];
        let mut states = if s.hi >= self.t.len(s.edge) - SNAP {
            self.vertex_states(self.t.child_vertex(s.edge))?
        } else {
            vec![(0, [0; 4])]
        };
        for j in (0..ORACLE_ATOMS).rev() {
            let atom = bit(self.seg_base[si] + j);
            if !self.feasible(&atom)? {
                return Err(Error::Infeasible(format!("a single oracle cell already has A > {}", self.eps)));
            }
            let mut next = Vec::new();
            for (c, r) in states {
                let joined = or(&r, &atom);
                if self.feasible(&joined)? {
                    next.push((c, joined));
                }
                if !is_empty(&r) {
                    next.push((c + 1, atom));
                }
            }
            states = prune(next);
        }
        Ok(states)
    }

    fn vertex_states(&mut self, w: usize) -> Result<Vec<(usize, Bits)>> {
        let kids: Vec<usize> = self
            .t
            .child_edges(w)
            .iter()
            .filter_map(|&e| self.seg_index(e))
            .filter(|&si| self.k.segs()[si].lo <= SNAP)
            .collect();
        // closed count and the open groups meeting at `w`
        let mut acc: Vec<(usize, Vec<Bits>)> = vec![(0, Vec::new())];
        for si in kids {
            let sub = self.seg_states(si)?;
            let mut next: Vec<(usize, Vec<Bits>)> = Vec::new();
            for (c, gs) in &acc {
                for (cj, rj) in &sub {
                    if is_empty(rj) {
                        next.push((c + cj, gs.clone()));
                        continue;
                    }
                    let mut alone = gs.clone();
                    alone.push(*rj);
                    next.push((c + cj, alone));
                    for gi in 0..gs.len() {
                        let m = or(&gs[gi], rj);
                        if self.feasible(&m)? {
                            let mut merged = gs.clone();
                            merged[gi] = m;
                            next.push((c + cj, merged));
                        }
                    }
                }
            }
            for (_, gs) in next.iter_mut() {
                gs.sort();
            }
            next.sort();
            next.dedup();
            acc = next;
        }
        let mut out = Vec::new();
        for (c, gs) in acc {
            out.push((c + gs.len(), [0; 4]));
            for g in &gs {
                out.push((c + gs.len() - 1, *g));
            }
        }
        Ok(prune(out))
    }
}

/// The least number of parts with `A ≤ ε` among partitions whose cuts lie on a grid of
/// [`ORACLE_ATOMS`] equal pieces per segment of `k`. Bounds `N(K, ε)` above and equals the
/// minimum over that grid exactly.
pub fn exact_n(
    t: &RootedTree,
    u: &StepWeight,
    v: &StepWeight,
    k: &Subtree,
    p: PNorm,
    eps: f64,
    opts: &AOptions,
) -> Result<usize> {
    check_eps(eps)?;
    if k.is_degenerate() {
        return Ok(1);
    }
    if k.segs().len() > ORACLE_MAX_EDGES {
        return Err(Error::Domain(format!(
            "exact oracle supports at most {ORACLE_MAX_EDGES} pieces, got {}",
            k.segs().len()
        )));
    }
    let seg_base = (0..k.segs().len()).map(|i| i * ORACLE_ATOMS).collect();
    let mut o = Oracle { t, u, v, k, p, eps, opts, seg_base, cache: BTreeMap::new() };
    let anchor = k.anchor(t);
    let finals = match anchor.edge {
        Some(e) if anchor.down < t.len(e) - SNAP => {
            let si = o.seg_index(e).ok_or_else(|| Error::InvalidSubtree("anchor off the subtree".into()))?;
            o.seg_states(si)?
        }
        _ => {
            let w = match anchor.edge {
                None => t.root(),
                Some(e) => t.child_vertex(e),
            };
            o.vertex_states(w)?
        }
    };
    finals
        .iter()
        .map(|(c, r)| c + usize::from(!is_empty(r)))
        .min()
        .ok_or_else(|| Error::Infeasible("no admissible partition on the oracle grid".into()))
}

/// `γ_p` in `a_{N+1} ≤ γ_p ε` for compact operators.
pub fn gamma_p(p: PNorm) -> f64 {
    if p.is_one() {
        2.0
    } else {
        1.0
    }
}

/// Both sides of `a_{N+1} ≤ γ_p ε` and `a_M ≥ ε`.
#[derive(Debug, Clone, PartialEq)]
pub struct SandwichReport {
    pub eps: f64,
    pub n_upper: usize,
    pub m_lower: usize,
    pub gamma: f64,
    /// `None` when the spectrum is too short.
    pub a_n_plus_1: Option<f64>,
    pub upper_ok: bool,
    /// `None` when `M = 0`.
    pub a_m: Option<f64>,
    pub lower_ok: bool,
    /// Relative slack allowed on the lower side.
    pub slack: f64,
    /// `M + 1 ≥ N / 3`.
    pub packing_ratio_ok: bool,
    /// `N − 3 #E(K)`, shown next to `N / 3`.
    pub edge_bound: i64,
}

impl SandwichReport {
    pub fn passed(&self) -> bool {
        self.upper_ok && self.lower_ok
    }
}

pub fn sandwich_check(
    n: &EpsPartitionResult,
    m: &EpsPackingResult,
    spectrum: &SingularSpectrum,
    p: PNorm,
    edges: usize,
    slack: f64,
) -> SandwichReport {
    let gamma = gamma_p(p);
    let eps = n.eps;
    let a_n_plus_1 = spectrum.values.get(n.n_upper).copied();
    let upper_ok = a_n_plus_1.map(|a| a <= gamma * eps * (1.0 + 1e-9)).unwrap_or(true);
    let a_m = if m.m_lower == 0 { None } else { spectrum.values.get(m.m_lower - 1).copied() };
    let lower_ok = match (m.m_lower, a_m) {
        (0, _) => true,
        (_, Some(a)) => a >= eps * (1.0 - slack),
        (_, None) => false,
    };
    SandwichReport {
        eps,
        n_upper: n.n_upper,
        m_lower: m.m_lower,
        gamma,
        a_n_plus_1,
        upper_ok,
        a_m,
        lower_ok,
        slack,
        packing_ratio_ok: 3 * (m.m_lower + 1) >= n.n_upper,
        edge_bound: n.n_upper as i64 - 3 * edges as i64,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanRow {
    pub eps: f64,
    pub n_upper: usize,
    pub n_exact: Option<usize>,
    pub m_lower: usize,
    pub eps_n: f64,
    pub eps_m: f64,
    pub tol: f64,
    /// The grid tolerance is not small against `ε`.
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanTable {
    pub rows: Vec<ScanRow>,
    /// `α_p ∫ |u||v|`.
    pub target: f64,
    /// `|ε N − target|` never increases down the schedule.
    pub monotone: bool,
}

impl ScanTable {
    pub fn from_rows(rows: Vec<ScanRow>, target: f64) -> Self {
        let monotone = rows
            .windows(2)
            .all(|w| (w[1].eps_n - target).abs() <= (w[0].eps_n - target).abs() + 1e-12 * target.abs().max(1.0));
        Self { rows, target, monotone }
    }
}

/// A geometric schedule `ε₀ f^j`, `j < count`.
pub fn geometric_schedule(start: f64, factor: f64, count: usize) -> Result<Vec<f64>> {
    check_eps(start)?;
    if !(factor > 0.0 && factor < 1.0) {
        return Err(Error::Domain(format!("ε factor must lie in (0, 1), got {factor}")));
    }
    let mut out = Vec::with_capacity(count);
    let mut e = start;
    for _ in 0..count {
        out.push(e);
        e *= factor;
    }
    Ok(out)
}

/// One row of the scan of `ε N(ε)` and `ε M(ε)`.
pub fn scan_row(
    t: &RootedTree,
    u: &StepWeight,
    v: &StepWeight,
    k: &Subtree,
    p: PNorm,
    eps: f64,
    opts: &PartitionOptions,
) -> Result<ScanRow> {
    let n = compute_n(t, u, v, k, p, eps, opts)?;
    let m = compute_m(t, u, v, k, p, eps, opts)?;
    let tol = n.tol.max(m.tol);
    Ok(ScanRow {
        eps,
        n_upper: n.n_upper,
        n_exact: None,
        m_lower: m.m_lower,
        eps_n: eps * n.n_upper as f64,
        eps_m: eps * m.m_lower as f64,
        tol,
        flagged: tol > 0.01 * eps,
    })
}

/// `ε N(ε)` and `ε M(ε)` over a strictly decreasing schedule, against `α_p ∫|u||v|`.
#[allow(clippy::too_many_arguments)]
pub fn asymptotic_scan(
    t: &RootedTree,
    u: &StepWeight,
    v: &StepWeight,
    k: &Subtree,
    p: PNorm,
    schedule: &[f64],
    alpha_p: f64,
    opts: &PartitionOptions,
) -> Result<ScanTable> {
    if schedule.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Domain("ε schedule must be strictly decreasing".into()));
    }
    let abs_u = u.map(f64::abs);
    let abs_v = v.map(f64::abs);
    let target = alpha_p * integral_product(t, &abs_u, &abs_v, k);
    let rows = schedule.iter().map(|&e| scan_row(t, u, v, k, p, e, opts)).collect::<Result<Vec<_>>>()?;
    Ok(ScanTable::from_rows(rows, target))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Resolution;
    use crate::tree::{root_at, Location, MetricTree};
    use core::f64::consts::PI;

    fn unit() -> (RootedTree, StepWeight) {
        let t = root_at(MetricTree::interval(1.0).unwrap(), Location::Vertex(0)).unwrap();
        let one = StepWeight::constant(t.tree(), 1.0);
        (t, one)
    }

    fn opts(cells: usize) -> PartitionOptions {
        PartitionOptions {
            a: AOptions { resolution: Resolution::new(cells).unwrap(), ..AOptions::default() },
            ..PartitionOptions::default()
        }
    }

    #[test]
    fn interval_counts() {
        let (t, one) = unit();
        let k = Subtree::whole(&t);
        let o = opts(256);
        let n = compute_n(&t, &one, &one, &k, PNorm::TWO, 0.1, &o).unwrap();
        assert_eq!(n.n_upper, 4);
        assert!(n.partition.validate(&t).is_valid());
        assert!(n.a_values.iter().all(|a| *a <= 0.1 + n.tol + 1e-9));
        let m = compute_m(&t, &one, &one, &k, PNorm::TWO, 0.1, &o).unwrap();
        assert_eq!(m.m_lower, 3);
        assert!(m.a_values.iter().all(|a| *a > 0.1));
        let big = compute_n(&t, &one, &one, &k, PNorm::TWO, 0.5, &o).unwrap();
        assert_eq!(big.n_upper, 1);
        assert_eq!(compute_m(&t, &one, &one, &k, PNorm::TWO, 0.5, &o).unwrap().m_lower, 0);
        assert!(compute_n(&t, &one, &one, &k, PNorm::TWO, 0.0, &o).is_err());
    }

    #[test]
    fn interval_pieces_have_equal_length() {
        let (t, one) = unit();
        let k = Subtree::whole(&t);
        let n = compute_n(&t, &one, &one, &k, PNorm::TWO, 0.05, &opts(256)).unwrap();
        for part in &n.partition.parts[..n.n_upper - 1] {
            assert!((part.length() - 0.05 * PI).abs() < 2e-3, "{}", part.length());
        }
    }

    #[test]
    fn oracle_matches_interval() {
        let (t, one) = unit();
        let k = Subtree::whole(&t);
        let a = AOptions { resolution: Resolution::new(64).unwrap(), ..AOptions::default() };
        assert_eq!(exact_n(&t, &one, &one, &k, PNorm::TWO, 0.1, &a).unwrap(), 4);
        assert_eq!(exact_n(&t, &one, &one, &k, PNorm::TWO, 1.0, &a).unwrap(), 1);
    }

    #[test]
    fn sandwich_on_interval() {
        let (t, one) = unit();
        let k = Subtree::whole(&t);
        let o = opts(256);
        let n = compute_n(&t, &one, &one, &k, PNorm::TWO, 0.1, &o).unwrap();
        let m = compute_m(&t, &one, &one, &k, PNorm::TWO, 0.1, &o).unwrap();
        let values: Vec<f64> = (1..=10).map(|j| 2.0 / ((2 * j - 1) as f64 * PI)).collect();
        let spec = SingularSpectrum { values, cells: 0, converged: true };
        let r = sandwich_check(&n, &m, &spec, PNorm::TWO, 1, 5e-3);
        assert!(r.passed() && r.packing_ratio_ok);
        assert!((r.a_n_plus_1.unwrap() - 2.0 / (9.0 * PI)).abs() < 1e-12);
    }

    #[test]
    fn zero_weight_scan() {
        let (t, one) = unit();
        let zero = StepWeight::constant(t.tree(), 0.0);
        let k = Subtree::whole(&t);
        let s = geometric_schedule(0.1, 0.5, 3).unwrap();
        let table = asymptotic_scan(&t, &zero, &one, &k, PNorm::TWO, &s, 1.0 / PI, &opts(64)).unwrap();
        assert!(table.rows.iter().all(|r| r.n_upper == 1 && r.m_lower == 0));
        assert_eq!(table.target, 0.0);
        assert!(geometric_schedule(0.1, 1.5, 3).is_err());
    }
}
