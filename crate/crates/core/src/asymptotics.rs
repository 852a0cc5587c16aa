//! Dyadic level sets of `U`, the sequences `σ_{k,i}`, the constant `α_p`, the
//! boundedness sandwich and the inequality checks built on them.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;

use crate::grid::Resolution;
use crate::operator::{a_value, norm_at_root, AOptions, NormOptions, SingularSpectrum};
use crate::tree::{MetricTree, RootedTree, Seg, Subtree, TreePoint, SNAP};
use crate::weights::{
    edge_integral, integrate, primitive_at_vertices, rearrange_steps, PNorm, StepWeight,
};
use crate::{Error, Result};

/// A value with a discretization error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
    /// Known in closed form.
    pub exact: bool,
}

/// Richardson extrapolation from values on successively doubled grids.
#[derive(Debug, Clone, PartialEq)]
pub struct Richardson {
    pub grids: Vec<usize>,
    pub values: Vec<f64>,
    pub extrapolated: f64,
    pub error: f64,
    /// `log2` of the ratio of successive differences, when defined.
    pub observed_order: Option<f64>,
}

/// Grids used by refinement studies.
pub const REFINEMENT_GRIDS: [usize; 4] = [256, 512, 1024, 2048];

/// Extrapolates assuming error `O(h^order)` under grid doubling.
pub fn richardson(grids: &[usize], values: &[f64], order: f64) -> Result<Richardson> {
    if values.len() < 2 || values.len() != grids.len() {
        return Err(Error::Domain("need at least two grids with one value each".into()));
    }
    let n = values.len();
    let f = 2f64.powf(order) - 1.0;
    let diff = values[n - 1] - values[n - 2];
    let observed_order = if n >= 3 {
        let d1 = (values[n - 2] - values[n - 3]).abs();
        let d2 = diff.abs();
        (d1 > 0.0 && d2 > 0.0).then(|| (d1 / d2).log2())
    } else {
        None
    };
    Ok(Richardson {
        grids: grids.to_vec(),
        values: values.to_vec(),
        extrapolated: values[n - 1] + diff / f,
        error: diff.abs() / f,
        observed_order,
    })
}

/// Runs `f` on each of [`REFINEMENT_GRIDS`] and extrapolates with order 2.
pub fn refinement_study(mut f: impl FnMut(Resolution) -> Result<f64>) -> Result<Richardson> {
    let mut values = Vec::with_capacity(REFINEMENT_GRIDS.len());
    for &n in &REFINEMENT_GRIDS {
        values.push(f(Resolution::new(n)?)?);
    }
    richardson(&REFINEMENT_GRIDS, &values, 2.0)
}

/// `α_p = A((0, 1), 1, 1)`.
pub fn alpha_p(p: PNorm, opts: &NormOptions) -> Result<Estimate> {
    if p.is_two() {
        return Ok(Estimate { value: 1.0 / PI, error: 0.0, exact: true });
    }
    if p.is_one() || p.is_inf() {
        return Ok(Estimate { value: 0.5, error: 0.0, exact: true });
    }
    // by symmetry the midpoint is the best root on the interval
    let t = crate::tree::root_at(MetricTree::interval(1.0)?, crate::tree::Location::Vertex(0))?;
    let one = StepWeight::constant(t.tree(), 1.0);
    let k = Subtree::whole(&t);
    let mid = t.point_on(0, 0.5);
    let r = refinement_study(|res| Ok(norm_at_root(&t, &one, &one, &k, mid, p, res, opts)?.value))?;
    Ok(Estimate { value: r.extrapolated, error: r.error, exact: false })
}

/// `‖{x}‖_{l^q}` and the weak norm `sup_t t #{|x| > t}^{1/q}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceNorms {
    pub values: Vec<f64>,
    pub q: f64,
    pub lq: f64,
    pub weak: f64,
}

impl SequenceNorms {
    pub fn new(values: Vec<f64>, q: f64) -> Self {
        let lq = lq_norm(&values, q);
        let weak = weak_lq_norm(&values, q);
        Self { values, q, lq, weak }
    }
}

pub fn lq_norm(x: &[f64], q: f64) -> f64 {
    if q.is_infinite() {
        return x.iter().fold(0.0, |m, v| m.max(v.abs()));
    }
    x.iter().map(|v| v.abs().powf(q)).sum::<f64>().powf(1.0 / q)
}

pub fn weak_lq_norm(x: &[f64], q: f64) -> f64 {
    let mut s: Vec<f64> = x.iter().map(|v| v.abs()).collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s.iter().enumerate().map(|(j, v)| v * ((j + 1) as f64).powf(1.0 / q)).fold(0.0, f64::max)
}

/// One component `Z_{k,i}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SigmaEntry {
    pub k: i32,
    pub i: usize,
    pub part: Subtree,
    pub mu: f64,
    pub sigma: f64,
    pub b: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SigmaTable {
    pub p: PNorm,
    pub entries: Vec<SigmaEntry>,
    /// `(k, σ_k)` for every admissible `k` that was kept, largest `k` first.
    pub sigma_k: Vec<(i32, f64)>,
    /// Largest admissible `k`.
    pub k_max: Option<i32>,
    /// Smallest `k` examined before the tail was dropped.
    pub k_min: Option<i32>,
    /// Upper bound on the dropped `Σ σ_k^p`.
    pub dropped_mass: f64,
}

impl SigmaTable {
    pub fn sigmas(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.sigma).collect()
    }

    pub fn sup_sigma(&self) -> f64 {
        self.entries.iter().map(|e| e.sigma).fold(0.0, f64::max)
    }

    /// `B_{k,i}^{1/p'} σ_{k,i}`.
    pub fn weighted(&self) -> Vec<f64> {
        let pc = self.p.conj().p();
        self.entries.iter().map(|e| (e.b as f64).powf(1.0 / pc) * e.sigma).collect()
    }

    /// `Σ_i B_{k,i}^{1/p'} σ_{k,i}` for each `k`.
    pub fn weighted_per_k(&self) -> Vec<f64> {
        let w = self.weighted();
        self.sigma_k
            .iter()
            .map(|(k, _)| self.entries.iter().zip(&w).filter(|(e, _)| e.k == *k).map(|(_, x)| x).sum())
            .collect()
    }
}

/// Pieces `(edge, lo, hi)` of `{L ≤ U < H}` on one edge, closed, with `U` built from `r`-th powers.
fn level_pieces(t: &RootedTree, u: &StepWeight, r: f64, u_top: &[f64], e: usize, lo_lvl: f64, hi_lvl: f64) -> Vec<Seg> {
    let mut out = Vec::new();
    let mut base = u_top[t.parent_vertex(e)];
    for (a, b, val) in u.down_pieces(t, e) {
        let slope = val.powf(r);
        let end = base + slope * (b - a);
        let (x1, x2) = if slope > 0.0 {
            let x1 = a + ((lo_lvl - base) / slope).max(0.0);
            let x2 = if hi_lvl.is_finite() { a + ((hi_lvl - base) / slope).min(b - a) } else { b };
            (x1.min(b), x2.max(a))
        } else if base >= lo_lvl && base < hi_lvl {
            (a, b)
        } else {
            (b, b)
        };
        if x2 - x1 > SNAP {
            match out.last_mut() {
                Some(Seg { hi, .. }) if (*hi - x1).abs() <= SNAP => *hi = x2,
                _ => out.push(Seg { edge: e, lo: x1, hi: x2 }),
            }
        }
        base = end;
    }
    out
}

/// Connected components of a union of edge pieces, joined through vertices.
fn components(t: &RootedTree, segs: Vec<Seg>) -> Vec<Subtree> {
    let n = segs.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    let mut at: Vec<(usize, usize)> = Vec::new();
    for (i, s) in segs.iter().enumerate() {
        if s.lo <= SNAP {
            at.push((t.parent_vertex(s.edge), i));
        }
        if s.hi >= t.len(s.edge) - SNAP {
            at.push((t.child_vertex(s.edge), i));
        }
    }
    at.sort_unstable();
    for w in at.windows(2) {
        if w[0].0 == w[1].0 {
            let (a, b) = (find(&mut parent, w[0].1), find(&mut parent, w[1].1));
            parent[a] = b;
        }
    }
    let mut groups: Vec<(usize, Vec<Seg>)> = Vec::new();
    for (i, s) in segs.iter().enumerate() {
        let r = find(&mut parent, i);
        match groups.iter_mut().find(|g| g.0 == r) {
            Some(g) => g.1.push(*s),
            None => groups.push((r, vec![*s])),
        }
    }
    groups.into_iter().filter_map(|(_, s)| Subtree::from_segments(t, s).ok()).collect()
}

/// `B = #ends − 1`, where the ends are the boundary points, the tree leaves inside, and the anchor.
fn boundary_count(t: &RootedTree, z: &Subtree) -> usize {
    let mut ends = z.ends(t);
    let a = z.anchor(t);
    if !ends.iter().any(|x| x.same(&a)) {
        ends.push(a);
    }
    ends.len().saturating_sub(1)
}

/// Maximal number of levels examined below the top admissible one.
const MAX_LEVELS: usize = 2000;

/// The components of `Z_k = cl{2^{kp'/p} ≤ U < 2^{(k+1)p'/p}}` and their `σ`, `B`,
/// for `U(x) = ∫_a^x u^{p'}` from the tree root.
pub fn sigma_table(t: &RootedTree, u: &StepWeight, v: &StepWeight, p: PNorm) -> Result<SigmaTable> {
    if p.is_one() || p.is_inf() {
        return Err(Error::UnsupportedExponent { p: p.p(), reason: "the σ sequences need 1 < p < ∞" });
    }
    let pp = p.p();
    let pc = p.conj().p();
    let whole = Subtree::whole(t);
    let total_u = integrate(t, u, &whole, |x| x.powf(pc));
    let empty = SigmaTable { p, entries: Vec::new(), sigma_k: Vec::new(), k_max: None, k_min: None, dropped_mass: 0.0 };
    if total_u <= 0.0 {
        return Ok(empty);
    }
    let u_top = primitive_at_vertices(t, u, pc);
    let k_max = (total_u.powf(pp / pc)).log2().floor() as i32;
    let level = |k: i32| 2f64.powf(k as f64 * pc / pp);
    let mut entries = Vec::new();
    let mut sigma_k = Vec::new();
    let mut running = 0.0;
    let mut k = k_max;
    let mut dropped_mass = 0.0;
    for _ in 0..MAX_LEVELS {
        let (lo, hi) = (level(k), level(k + 1));
        let mut segs = Vec::new();
        for e in 0..t.edge_count() {
            segs.extend(level_pieces(t, u, pc, &u_top, e, lo, if k == k_max { f64::INFINITY } else { hi }));
        }
        let comps = components(t, segs);
        let found = !comps.is_empty();
        let mut sk = 0.0;
        for (i, z) in comps.into_iter().enumerate() {
            let mu = integrate(t, v, &z, |x| x.powf(pp));
            let sp = 2f64.powi(k) * mu;
            sk += sp;
            let b = boundary_count(t, &z);
            entries.push(SigmaEntry { k, i: i + 1, part: z, mu, sigma: sp.powf(1.0 / pp), b });
        }
        if found {
            sigma_k.push((k, sk.powf(1.0 / pp)));
        }
        running += sk;
        // mass that could still appear below this level
        let mut below = Vec::new();
        for e in 0..t.edge_count() {
            below.extend(level_pieces(t, u, pc, &u_top, e, f64::NEG_INFINITY, lo));
        }
        let rest: f64 = below
            .iter()
            .map(|s| crate::weights::edge_integral(t, v, s.edge, s.lo, s.hi, pp))
            .sum::<f64>()
            * 2f64.powi(k);
        if rest <= 1e-12 * running || rest == 0.0 {
            dropped_mass = rest;
            break;
        }
        dropped_mass = rest;
        k -= 1;
    }
    if sigma_k.is_empty() {
        return Ok(SigmaTable { k_max: Some(k_max), ..empty });
    }
    Ok(SigmaTable { p, entries, sigma_k, k_max: Some(k_max), k_min: Some(k), dropped_mass })
}

/// `sup_x ‖u χ_{(a,x)}‖_{p'} ‖v χ_{x ⪯ ·}‖_p` over breakpoints and `samples` points per edge.
pub fn norm_lower_bound(t: &RootedTree, u: &StepWeight, v: &StepWeight, p: PNorm, samples: usize) -> f64 {
    let pc = p.conj();
    let nv = t.tree().vertex_count();
    // `∫ u^{p'}` (or sup u) from the root to each vertex
    let mut up = vec![0.0; nv];
    // `∫ v^p` (or sup v) over everything below each vertex
    let mut down = vec![0.0; nv];
    let acc_u = |a: f64, b: f64| if pc.is_inf() { a.max(b) } else { a + b };
    let acc_v = |a: f64, b: f64| if p.is_inf() { a.max(b) } else { a + b };
    let seg_u = |e: usize, lo: f64, hi: f64| -> f64 {
        if pc.is_inf() {
            u.down_pieces(t, e).iter().filter(|q| q.1.min(hi) - q.0.max(lo) > SNAP).map(|q| q.2).fold(0.0, f64::max)
        } else {
            edge_integral(t, u, e, lo, hi, pc.p())
        }
    };
    let seg_v = |e: usize, lo: f64, hi: f64| -> f64 {
        if p.is_inf() {
            v.down_pieces(t, e).iter().filter(|q| q.1.min(hi) - q.0.max(lo) > SNAP).map(|q| q.2).fold(0.0, f64::max)
        } else {
            edge_integral(t, v, e, lo, hi, p.p())
        }
    };
    for &w in t.order() {
        if let Some(e) = t.parent_edge(w) {
            up[w] = acc_u(up[t.parent_vertex(e)], seg_u(e, 0.0, t.len(e)));
        }
    }
    for &w in t.order().iter().rev() {
        if let Some(e) = t.parent_edge(w) {
            let pv = t.parent_vertex(e);
            down[pv] = acc_v(down[pv], acc_v(down[w], seg_v(e, 0.0, t.len(e))));
        }
    }
    let fu = |x: f64| if pc.is_inf() { x } else { x.powf(1.0 / pc.p()) };
    let fv = |x: f64| if p.is_inf() { x } else { x.powf(1.0 / p.p()) };
    let mut best: f64 = 0.0;
    for e in 0..t.edge_count() {
        let len = t.len(e);
        let mut xs: Vec<f64> = (0..=samples).map(|j| len * j as f64 / samples.max(1) as f64).collect();
        for (a, b, _) in u.down_pieces(t, e).into_iter().chain(v.down_pieces(t, e)) {
            xs.push(a);
            xs.push(b);
        }
        let top = t.parent_vertex(e);
        let bottom = t.child_vertex(e);
        for x in xs {
            let a = acc_u(up[top], seg_u(e, 0.0, x));
            let b = acc_v(down[bottom], seg_v(e, x, len));
            best = best.max(fu(a) * fv(b));
        }
    }
    best
}

/// `α_K = inf{‖f‖_p : ∫_a^t |f||u| = 1 for all t ∈ ∂K}`, with `a` the anchor of `K`.
/// `None` when `K` has no boundary point (no constraint).
pub fn alpha_k(t: &RootedTree, u: &StepWeight, k: &Subtree, p: PNorm) -> Result<Option<f64>> {
    if k.is_degenerate() {
        return Err(Error::InvalidSubtree("α_K needs a subtree of positive length".into()));
    }
    let anchor = k.anchor(t);
    let tops: Vec<Seg> = match anchor.edge {
        Some(e) if anchor.down < t.len(e) - SNAP => k.seg_on(e).copied().into_iter().collect(),
        _ => {
            let w = match anchor.edge {
                None => t.root(),
                Some(e) => t.child_vertex(e),
            };
            t.child_edges(w).iter().filter_map(|&c| k.seg_on(c).copied()).filter(|s| s.lo <= SNAP).collect()
        }
    };
    let kappa = parallel(t, u, k, p, &tops)?;
    match kappa {
        None => Ok(None),
        Some(c) if c <= 0.0 => Err(Error::Infeasible("u vanishes on a path to the boundary".into())),
        Some(c) => {
            if p.is_one() || p.is_inf() {
                Ok(Some(1.0 / c))
            } else {
                // here `c` is the combined ρ = Σ κ^{1-p}
                Ok(Some(c.powf(1.0 / p.p())))
            }
        }
    }
}

/// Combines branches hanging from one point. For `1 < p < ∞` returns `ρ = Σ κ_j^{1−p}`
/// (infinite when a branch has `κ = 0`), otherwise the combined `κ`.
fn parallel(t: &RootedTree, u: &StepWeight, k: &Subtree, p: PNorm, segs: &[Seg]) -> Result<Option<f64>> {
    let mut ks = Vec::new();
    for s in segs {
        if let Some(c) = series(t, u, k, p, *s)? {
            ks.push(c);
        }
    }
    if ks.is_empty() {
        return Ok(None);
    }
    if p.is_inf() {
        return Ok(Some(ks.iter().copied().fold(f64::INFINITY, f64::min)));
    }
    if p.is_one() {
        if ks.iter().any(|c| *c <= 0.0) {
            return Err(Error::Infeasible("u vanishes on a path to the boundary".into()));
        }
        return Ok(Some(1.0 / ks.iter().map(|c| 1.0 / c).sum::<f64>()));
    }
    if ks.iter().any(|c| *c <= 0.0) {
        return Err(Error::Infeasible("u vanishes on a path to the boundary".into()));
    }
    Ok(Some(ks.iter().map(|c| c.powf(1.0 - p.p())).sum()))
}

/// `κ` of a piece and everything of `K` below it; `None` without boundary points below.
fn series(t: &RootedTree, u: &StepWeight, k: &Subtree, p: PNorm, s: Seg) -> Result<Option<f64>> {
    let e = s.edge;
    let below = if s.hi < t.len(e) - SNAP {
        Some(0.0)
    } else {
        let w = t.child_vertex(e);
        let kids: Vec<Seg> = t.child_edges(w).iter().filter_map(|&c| k.seg_on(c).copied()).filter(|c| c.lo <= SNAP).collect();
        if kids.is_empty() {
            if t.is_leaf(w) {
                None
            } else {
                Some(0.0)
            }
        } else {
            match parallel(t, u, k, p, &kids)? {
                None => None,
                Some(x) if p.is_one() || p.is_inf() => Some(x),
                Some(rho) => Some(rho.powf(1.0 / (1.0 - p.p()))),
            }
        }
    };
    let Some(below) = below else { return Ok(None) };
    let here = if p.is_one() {
        u.down_pieces(t, e).iter().filter(|q| q.1.min(s.hi) - q.0.max(s.lo) > SNAP).map(|q| q.2).fold(0.0, f64::max)
    } else if p.is_inf() {
        edge_integral(t, u, e, s.lo, s.hi, 1.0)
    } else {
        edge_integral(t, u, e, s.lo, s.hi, p.conj().p())
    };
    Ok(Some(if p.is_one() { here.max(below) } else { here + below }))
}

/// Subtrees `cl{U_r < L}` containing the root for `levels` equally spaced `L`,
/// with `U_r = ∫_a^x u^r`, `r = p'` (or 1 when `p = 1`).
pub fn level_family(t: &RootedTree, u: &StepWeight, p: PNorm, levels: usize) -> Result<Vec<Subtree>> {
    let r = if p.is_one() { 1.0 } else { p.conj().p() };
    let u_top = primitive_at_vertices(t, u, r);
    let top = u_top.iter().copied().fold(0.0, f64::max);
    let mut out: Vec<Subtree> = Vec::new();
    for j in 1..=levels {
        let lvl = top * j as f64 / (levels + 1) as f64;
        let mut cuts = Vec::new();
        for e in 0..t.edge_count() {
            let below = level_pieces(t, u, r, &u_top, e, f64::NEG_INFINITY, lvl);
            if let Some(s) = below.iter().find(|s| s.lo <= SNAP) {
                if s.hi < t.len(e) - SNAP || u_top[t.child_vertex(e)] >= lvl {
                    cuts.push(t.point_on(e, s.hi));
                }
            } else if u_top[t.parent_vertex(e)] >= lvl {
                continue;
            } else {
                cuts.push(t.point_on(e, 0.0));
            }
        }
        let k = Subtree::from_anchor_and_cuts(t, TreePoint::ROOT, &cuts)?;
        if !k.is_degenerate() && !out.contains(&k) {
            out.push(k);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundednessReport {
    /// `max_K ‖v χ_{Γ∖K}‖_p / α_K` over the family.
    pub a_hat: f64,
    pub norm: f64,
    /// `‖T‖ / Â`, when `Â > 0`.
    pub ratio: Option<f64>,
    /// `Â ≤ ‖T‖` up to the relative tolerance.
    pub lower_ok: bool,
    pub within_four: bool,
    pub family_size: usize,
    pub skipped: usize,
}

/// Compares `‖T‖` with `Â` from a family of subtrees containing the root.
pub fn boundedness_check(
    t: &RootedTree,
    u: &StepWeight,
    v: &StepWeight,
    p: PNorm,
    family: &[Subtree],
    norm: f64,
    rel_tol: f64,
) -> Result<BoundednessReport> {
    if family.is_empty() {
        return Err(Error::Domain("empty family of subtrees".into()));
    }
    let whole = Subtree::whole(t);
    let mut a_hat: f64 = 0.0;
    let mut skipped = 0;
    for k in family {
        let alpha = match alpha_k(t, u, k, p) {
            Ok(Some(a)) if a > 0.0 => a,
            Ok(_) | Err(Error::Infeasible(_)) => {
                skipped += 1;
                continue;
            }
            Err(e) => return Err(e),
        };
        let rest = complement(t, &whole, k);
        let vn = rest.iter().map(|s| lp_seg(t, v, p, s)).fold(0.0, |a, b| if p.is_inf() { f64::max(a, b) } else { a + b });
        let vn = if p.is_inf() { vn } else { vn.powf(1.0 / p.p()) };
        a_hat = a_hat.max(vn / alpha);
    }
    let ratio = (a_hat > 0.0).then(|| norm / a_hat);
    Ok(BoundednessReport {
        a_hat,
        norm,
        ratio,
        lower_ok: a_hat <= norm * (1.0 + rel_tol) + 1e-300,
        within_four: ratio.map(|r| r <= 4.0 * (1.0 + rel_tol)).unwrap_or(norm <= 1e-300),
        family_size: family.len(),
        skipped,
    })
}

fn lp_seg(t: &RootedTree, v: &StepWeight, p: PNorm, s: &Seg) -> f64 {
    if p.is_inf() {
        v.down_pieces(t, s.edge).iter().filter(|q| q.1.min(s.hi) - q.0.max(s.lo) > SNAP).map(|q| q.2).fold(0.0, f64::max)
    } else {
        edge_integral(t, v, s.edge, s.lo, s.hi, p.p())
    }
}

fn complement(t: &RootedTree, whole: &Subtree, k: &Subtree) -> Vec<Seg> {
    let mut out = Vec::new();
    for s in whole.segs() {
        match k.seg_on(s.edge) {
            None => out.push(*s),
            Some(c) => {
                if c.lo > s.lo + SNAP {
                    out.push(Seg { edge: s.edge, lo: s.lo, hi: c.lo });
                }
                if c.hi < s.hi - SNAP {
                    out.push(Seg { edge: s.edge, lo: c.hi, hi: s.hi });
                }
            }
        }
    }
    let _ = t;
    out
}

/// Both sides of `ε^q M ≤ Σ ‖T_l‖^q ≤ (2^{2/p+2})^q S` at one `ε`.
#[derive(Debug, Clone, PartialEq)]
pub struct PackingBound {
    pub eps: f64,
    pub m: usize,
    pub lhs: f64,
    pub middle: f64,
    pub rhs: f64,
    pub ok: bool,
}

/// Norms of the parts of a packing at one `ε`, each rooted at its own anchor.
#[derive(Debug, Clone, PartialEq)]
pub struct PackingNorms {
    pub eps: f64,
    pub part_norms: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LqReport {
    pub p: f64,
    pub q: f64,
    pub sup_sigma: f64,
    pub norm: f64,
    /// `sup σ_{k,i} ≤ ‖T‖`.
    pub sup_ok: bool,
    pub packing: Vec<PackingBound>,
    /// `‖a‖_{l^q} / ‖B^{1/p'} σ‖_{l^q}` for `q ≤ p`.
    pub ratio_weighted: Option<f64>,
    /// `‖a‖_{l^q} / ‖σ_k‖_{l^q}` for `q > p`.
    pub ratio_levels: Option<f64>,
    /// Weak-`l^q` counterpart of whichever of the two applies.
    pub ratio_weak: Option<f64>,
    /// `‖σ_{k,i}‖_{l^q} / ‖a‖_{l^q}`.
    pub ratio_reverse: Option<f64>,
    /// Weak `l^q` never exceeds `l^q` for any sequence above.
    pub weak_below_strong: bool,
}

impl LqReport {
    /// The inequalities with explicit constants.
    pub fn asserted_ok(&self) -> bool {
        self.sup_ok && self.packing.iter().all(|b| b.ok) && self.weak_below_strong
    }

    pub fn ratios_finite(&self) -> bool {
        [self.ratio_weighted, self.ratio_levels, self.ratio_weak, self.ratio_reverse]
            .iter()
            .flatten()
            .all(|r| r.is_finite())
    }
}

fn ratio(a: f64, b: f64) -> Option<f64> {
    (b > 0.0).then(|| a / b)
}

/// Evaluates the `l^q` inequalities between approximation numbers and the `σ` sequences.
pub fn lq_bound_checks(
    spectrum: &SingularSpectrum,
    table: &SigmaTable,
    q: f64,
    norm: f64,
    packings: &[PackingNorms],
    rel_tol: f64,
) -> Result<LqReport> {
    if q.is_nan() || q < 1.0 {
        return Err(Error::Domain(format!("q must be at least 1, got {q}")));
    }
    let p = table.p.p();
    let pc = table.p.conj().p();
    let sup_sigma = table.sup_sigma();
    let c = 2f64.powf(2.0 / p + 2.0).powf(q);
    let weighted: f64 = table.entries.iter().map(|e| (e.b as f64).powf(q / pc) * e.sigma.powf(q)).sum();
    let levels: f64 = table.sigma_k.iter().map(|(_, s)| s.powf(q)).sum();
    let rhs = c * if q <= p { weighted } else { levels };
    let packing = packings
        .iter()
        .map(|pk| {
            let m = pk.part_norms.len();
            let lhs = pk.eps.powf(q) * m as f64;
            let middle: f64 = pk.part_norms.iter().map(|x| x.powf(q)).sum();
            let ok = lhs <= middle * (1.0 + rel_tol) && middle <= rhs * (1.0 + rel_tol);
            PackingBound { eps: pk.eps, m, lhs, middle, rhs, ok }
        })
        .collect();
    let a = SequenceNorms::new(spectrum.values.clone(), q);
    let w = SequenceNorms::new(table.weighted(), q);
    let wk = SequenceNorms::new(table.weighted_per_k(), q);
    let sk = SequenceNorms::new(table.sigma_k.iter().map(|x| x.1).collect(), q);
    let s = SequenceNorms::new(table.sigmas(), q);
    let weak_below_strong = [&a, &w, &wk, &sk, &s].iter().all(|x| x.weak <= x.lq * (1.0 + 1e-12));
    let (ratio_weighted, ratio_levels, ratio_weak) = if q <= p {
        (ratio(a.lq, w.lq), None, ratio(a.weak, wk.weak))
    } else {
        (None, ratio(a.lq, sk.lq), ratio(a.weak, sk.weak))
    };
    Ok(LqReport {
        p,
        q,
        sup_sigma,
        norm,
        sup_ok: sup_sigma <= norm * (1.0 + rel_tol),
        packing,
        ratio_weighted,
        ratio_levels,
        ratio_weak,
        ratio_reverse: ratio(s.lq, a.lq),
        weak_below_strong,
    })
}

/// The bound `B_{k,i} ≤ b^{⌈log 2 / log μ₁ + 1⌉}` on a tree where every vertex except the root has `b` children or none.
#[derive(Debug, Clone, PartialEq)]
pub struct RegularTreeBound {
    pub b: usize,
    pub mu1: f64,
    pub bound: f64,
    pub max_b: usize,
    pub ok: bool,
}

pub fn regular_tree_bound(t: &RootedTree, table: &SigmaTable) -> Result<RegularTreeBound> {
    // the root may carry a single trunk edge
    let internal: Vec<usize> =
        (0..t.tree().vertex_count()).filter(|&w| w != t.root() && !t.is_leaf(w)).collect();
    let b = internal.first().map(|&w| t.child_edges(w).len()).unwrap_or(0);
    if b == 0 || internal.iter().any(|&w| t.child_edges(w).len() != b) {
        return Err(Error::Domain("tree is not regular".into()));
    }
    let mut mu1 = f64::INFINITY;
    for e in 0..t.edge_count() {
        let y = t.vertex_depth(t.parent_vertex(e));
        let z = t.vertex_depth(t.child_vertex(e));
        if y > 0.0 {
            mu1 = mu1.min(z / y);
        }
    }
    if mu1.is_nan() || mu1 <= 1.0 || !mu1.is_finite() {
        return Err(Error::Domain("edge lengths do not grow geometrically".into()));
    }
    let bound = (b as f64).powf((2f64.ln() / mu1.ln() + 1.0).ceil());
    let max_b = table.entries.iter().map(|e| e.b).max().unwrap_or(0);
    Ok(RegularTreeBound { b, mu1, bound, max_b, ok: max_b as f64 <= bound })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Endpoint {
    /// `p = ∞`: `u ≡ γ`, `v` varies.
    Infinity,
    /// `p = 1`: `v ≡ γ`, `u` varies.
    One,
}

/// The interval inequalities for `p ∈ {1, ∞}` on one interval.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalBounds {
    pub which: Endpoint,
    pub gamma: f64,
    pub delta: f64,
    pub length: f64,
    /// `A(I; ·)` with the varying weight replaced by `δ`.
    pub a_delta: f64,
    /// `A(I; ·)` with the local supremum of the varying weight.
    pub a_s: f64,
    /// `c |γ| sup_t t g*(t)` with `c = 1/2` or `1/4`.
    pub rearranged: f64,
    pub order_ok: bool,
    pub lower_ok: bool,
    /// `(α, gap, bound)` for the gap inequality.
    pub gaps: Vec<(f64, f64, f64)>,
    pub gaps_ok: bool,
    /// `p = 1` only: `A` does not decrease when `u` grows.
    pub monotone_ok: Option<bool>,
}

impl IntervalBounds {
    pub fn passed(&self) -> bool {
        self.order_ok && self.lower_ok && self.gaps_ok && self.monotone_ok.unwrap_or(true)
    }
}

/// The values of `α` used in the gap inequality.
pub const GAP_ALPHAS: [f64; 5] = [1.5, 2.0, 4.0, 8.0, 16.0];

/// Lower and gap bounds for `A` on an interval when `p ∈ {1, ∞}`.
pub fn p1_inf_bounds(
    t: &RootedTree,
    u: &StepWeight,
    v: &StepWeight,
    interval: &Subtree,
    which: Endpoint,
    opts: &AOptions,
    rel_tol: f64,
) -> Result<IntervalBounds> {
    if interval.segs().len() != 1 {
        return Err(Error::Domain("the interval bounds need a subtree inside one edge".into()));
    }
    let s = interval.segs()[0];
    let (fixed, varying, p) = match which {
        Endpoint::Infinity => (u, v, PNorm::INF),
        Endpoint::One => (v, u, PNorm::ONE),
    };
    let on = |w: &StepWeight| -> Vec<(f64, f64)> {
        w.down_pieces(t, s.edge)
            .into_iter()
            .filter_map(|(a, b, val)| {
                let len = b.min(s.hi) - a.max(s.lo);
                (len > SNAP).then_some((len, val))
            })
            .collect()
    };
    let fixed_steps = on(fixed);
    let gamma = fixed_steps.first().map(|x| x.1).unwrap_or(0.0);
    if fixed_steps.iter().any(|x| (x.1 - gamma).abs() > 1e-12 * gamma.abs().max(1.0)) {
        return Err(Error::Domain("the fixed weight must be constant on the interval".into()));
    }
    let steps = on(varying);
    let delta = steps.iter().map(|x| x.1).fold(0.0, f64::max);
    let length = s.length();
    let c = match which {
        Endpoint::Infinity => 0.5,
        Endpoint::One => 0.25,
    };
    let a_delta = 0.5 * gamma.abs() * delta * length;
    let a_s = a_value(t, u, v, interval, p, opts)?.value;
    let mut pos = 0.0;
    let mut sup_tg: f64 = 0.0;
    for (len, val) in rearrange_steps(&steps) {
        pos += len;
        sup_tg = sup_tg.max(pos * val);
    }
    let rearranged = c * gamma.abs() * sup_tg;
    let slack = |x: f64| x * rel_tol + 1e-14;
    let gap_int: f64 = steps.iter().map(|(len, val)| len * gamma.abs() * (delta - val)).sum();
    let gaps: Vec<(f64, f64, f64)> = GAP_ALPHAS
        .iter()
        .map(|&al| (al, a_delta - a_s, al / 2.0 * gap_int + gamma.abs() * delta * length / (2.0 * al)))
        .collect();
    let gaps_ok = gaps.iter().all(|(_, g, b)| *g <= b + slack(a_delta));
    let monotone_ok = match which {
        Endpoint::Infinity => None,
        Endpoint::One => {
            // lower `u` to its smallest value on the interval
            let lowest = steps.iter().map(|x| x.1).fold(f64::INFINITY, f64::min);
            let u2 = u.map(|x| x.min(lowest));
            let a2 = a_value(t, &u2, v, interval, p, opts)?.value;
            Some(a2 <= a_s + slack(a_s))
        }
    };
    Ok(IntervalBounds {
        which,
        gamma,
        delta,
        length,
        a_delta,
        a_s,
        rearranged,
        order_ok: a_s <= a_delta + slack(a_delta),
        lower_ok: rearranged <= a_s + slack(a_s),
        gaps,
        gaps_ok,
        monotone_ok,
    })
}

/// `∫ |u| |v_s|` and `∫ |u_s| |v|`; for step weights both equal `∫ |u||v|`
/// since the local suprema differ from the weights only at jumps.
pub fn endpoint_targets(t: &RootedTree, u: &StepWeight, v: &StepWeight) -> (f64, f64) {
    let whole = Subtree::whole(t);
    let x = crate::weights::integral_product(t, u, v, &whole);
    (x, x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::{root_at, Location};
    use approx::assert_relative_eq;

    fn interval(len: f64) -> (RootedTree, StepWeight) {
        let t = root_at(MetricTree::interval(len).unwrap(), Location::Vertex(0)).unwrap();
        let one = StepWeight::constant(t.tree(), 1.0);
        (t, one)
    }

    #[test]
    fn sigma_table_on_0_4() {
        let (t, one) = interval(4.0);
        let tab = sigma_table(&t, &one, &one, PNorm::TWO).unwrap();
        let find = |k: i32| tab.entries.iter().find(|e| e.k == k).unwrap();
        let z0 = find(0);
        assert_relative_eq!(z0.part.segs()[0].lo, 1.0, epsilon = 1e-12);
        assert_relative_eq!(z0.part.segs()[0].hi, 2.0, epsilon = 1e-12);
        assert_relative_eq!(z0.sigma, 1.0, epsilon = 1e-12);
        assert_eq!(z0.b, 1);
        let z1 = find(1);
        assert_relative_eq!(z1.sigma, 2.0, epsilon = 1e-12);
        assert_eq!(z1.b, 1);
        assert_eq!(tab.k_max, Some(2));
        assert!(tab.entries.iter().all(|e| e.k <= 1));
        for e in &tab.entries {
            assert!(e.b <= 1);
        }
    }

    #[test]
    fn sigma_table_zero_u() {
        let (t, one) = interval(1.0);
        let zero = StepWeight::constant(t.tree(), 0.0);
        assert!(sigma_table(&t, &zero, &one, PNorm::TWO).unwrap().entries.is_empty());
        assert!(sigma_table(&t, &one, &one, PNorm::ONE).is_err());
    }

    #[test]
    fn lower_bound_on_unit_interval() {
        let (t, one) = interval(1.0);
        assert_relative_eq!(norm_lower_bound(&t, &one, &one, PNorm::TWO, 256), 0.5, epsilon = 1e-12);
        let zero = StepWeight::constant(t.tree(), 0.0);
        assert_eq!(norm_lower_bound(&t, &zero, &one, PNorm::TWO, 64), 0.0);
    }

    #[test]
    fn alpha_k_examples() {
        let (t, one) = interval(2.0);
        let k = Subtree::from_segments(&t, vec![Seg { edge: 0, lo: 0.0, hi: 1.0 }]).unwrap();
        assert_relative_eq!(alpha_k(&t, &one, &k, PNorm::TWO).unwrap().unwrap(), 1.0, epsilon = 1e-12);
        let two = one.scaled(2.0);
        assert_relative_eq!(alpha_k(&t, &two, &k, PNorm::TWO).unwrap().unwrap(), 0.5, epsilon = 1e-12);
        let zero = StepWeight::constant(t.tree(), 0.0);
        assert!(matches!(alpha_k(&t, &zero, &k, PNorm::TWO), Err(Error::Infeasible(_))));
        let star = root_at(MetricTree::star(&[2.0, 2.0]).unwrap(), Location::Vertex(0)).unwrap();
        let one = StepWeight::constant(star.tree(), 1.0);
        let k = Subtree::from_segments(
            &star,
            vec![Seg { edge: 0, lo: 0.0, hi: 1.0 }, Seg { edge: 1, lo: 0.0, hi: 1.0 }],
        )
        .unwrap();
        assert_relative_eq!(alpha_k(&star, &one, &k, PNorm::TWO).unwrap().unwrap(), 2f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn boundedness_on_interval() {
        let (t, one) = interval(1.0);
        let fam = level_family(&t, &one, PNorm::TWO, 63).unwrap();
        let r = boundedness_check(&t, &one, &one, PNorm::TWO, &fam, 2.0 / PI, 1e-9).unwrap();
        assert_relative_eq!(r.a_hat, 0.5, epsilon = 1e-12);
        assert!(r.lower_ok && r.within_four);
        assert!(boundedness_check(&t, &one, &one, PNorm::TWO, &[], 1.0, 0.0).is_err());
    }

    #[test]
    fn weak_norm_examples() {
        let x = [3.0, 1.0, 2.0];
        assert_relative_eq!(weak_lq_norm(&x, 1.0), 4.0);
        assert_relative_eq!(lq_norm(&x, 1.0), 6.0);
        assert_relative_eq!(weak_lq_norm(&x, f64::INFINITY), 3.0);
    }

    #[test]
    fn anchors_of_alpha_p() {
        let o = NormOptions::default();
        assert_relative_eq!(alpha_p(PNorm::TWO, &o).unwrap().value, 1.0 / PI);
        assert_relative_eq!(alpha_p(PNorm::INF, &o).unwrap().value, 0.5);
        assert_relative_eq!(alpha_p(PNorm::ONE, &o).unwrap().value, 0.5);
    }

    #[test]
    fn richardson_recovers_quadratic() {
        let g = [256, 512, 1024];
        let v: Vec<f64> = g.iter().map(|n| 1.0 + 3.0 / (*n as f64).powi(2)).collect();
        let r = richardson(&g, &v, 2.0).unwrap();
        assert_relative_eq!(r.extrapolated, 1.0, epsilon = 1e-12);
        assert_relative_eq!(r.observed_order.unwrap(), 2.0, epsilon = 1e-9);
    }
}
