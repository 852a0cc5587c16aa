//! The discretized Hardy operator, its norms, the quotient quantity `A(K)`,
//! approximation numbers and finite-rank approximants.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::grid::{Grid, Resolution};
use crate::linalg::{golden_section_min, top_eigenpairs};
use crate::tree::{Partition, RootedTree, Subtree, TreePoint};
use crate::weights::{mu, PNorm, StepWeight};
use crate::{Error, Result};

/// A linear map on functions sampled at the cells of a grid with quadrature weights `q`.
pub trait GridOperator {
    fn dim(&self) -> usize;
    fn q(&self) -> &[f64];
    fn apply(&self, f: &[f64], out: &mut [f64]);
    /// Adjoint with respect to `<f, g> = Σ q f g`.
    fn adjoint(&self, h: &[f64], out: &mut [f64]);
}

/// `T_{b,K} f(x) = v(x) ∫_b^x u f` on a midpoint grid of `K` rooted at `b`.
#[derive(Debug, Clone)]
pub struct DiscretizedOperator {
    grid: Grid,
    q: Vec<f64>,
    p: PNorm,
}

impl DiscretizedOperator {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        t: &RootedTree,
        u: &StepWeight,
        v: &StepWeight,
        k: &Subtree,
        root: TreePoint,
        p: PNorm,
        res: Resolution,
        extra: &[TreePoint],
    ) -> Result<Self> {
        let grid = Grid::build(t, u, v, k, root, res, extra)?;
        let q = grid.weights();
        Ok(Self { grid, q, p })
    }

    /// Rooted at the point of `k` nearest the tree root.
    pub fn at_anchor(
        t: &RootedTree,
        u: &StepWeight,
        v: &StepWeight,
        k: &Subtree,
        p: PNorm,
        res: Resolution,
    ) -> Result<Self> {
        Self::new(t, u, v, k, k.anchor(t), p, res, &[])
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn p(&self) -> PNorm {
        self.p
    }

    pub fn len(&self) -> usize {
        self.q.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q.is_empty()
    }

    pub fn u(&self) -> Vec<f64> {
        self.grid.cells().iter().map(|c| c.u).collect()
    }

    pub fn v(&self) -> Vec<f64> {
        self.grid.cells().iter().map(|c| c.v).collect()
    }

    /// `(Tf)(x_i)` at every cell midpoint.
    pub fn apply_vec(&self, f: &[f64]) -> Result<Vec<f64>> {
        if f.len() != self.len() {
            return Err(Error::Shape { expected: self.len(), got: f.len() });
        }
        let mut out = vec![0.0; self.len()];
        GridOperator::apply(self, f, &mut out);
        Ok(out)
    }

    /// Row-major kernel matrix `M` with `(Tf)_i = Σ_j M_ij f_j`.
    pub fn dense(&self) -> Vec<f64> {
        let n = self.len();
        let cells = self.grid.cells();
        let mut m = vec![0.0; n * n];
        for i in 0..n {
            let ci = &cells[i];
            m[i * n + i] = 0.5 * ci.v * ci.u * ci.q;
            let mut cur = ci.parent;
            while let Some(j) = cur {
                m[i * n + j] = ci.v * cells[j].u * cells[j].q;
                cur = cells[j].parent;
            }
        }
        m
    }

    /// `∫ u` from the grid root to the far end of each cell.
    fn u_to_far_end(&self) -> Vec<f64> {
        let cells = self.grid.cells();
        let mut acc = vec![0.0; cells.len()];
        for (i, c) in cells.iter().enumerate() {
            acc[i] = c.parent.map(|p| acc[p]).unwrap_or(0.0) + c.u * c.q;
        }
        acc
    }

    /// `∫ v` over everything beyond the near end of each cell (the cell included).
    fn v_from_near_end(&self, power: f64) -> Vec<f64> {
        let cells = self.grid.cells();
        let mut acc: Vec<f64> = cells.iter().map(|c| c.v.powf(power) * c.q).collect();
        for i in (0..cells.len()).rev() {
            if let Some(p) = cells[i].parent {
                acc[p] += acc[i];
            }
        }
        acc
    }
}

impl GridOperator for DiscretizedOperator {
    fn dim(&self) -> usize {
        self.q.len()
    }

    fn q(&self) -> &[f64] {
        &self.q
    }

    fn apply(&self, f: &[f64], out: &mut [f64]) {
        let cells = self.grid.cells();
        let mut pref = vec![0.0; cells.len()];
        for (i, c) in cells.iter().enumerate() {
            let base = c.parent.map(|p| pref[p]).unwrap_or(0.0);
            let g = c.u * c.q * f[i];
            pref[i] = base + g;
            out[i] = c.v * (base + 0.5 * g);
        }
    }

    fn adjoint(&self, h: &[f64], out: &mut [f64]) {
        let cells = self.grid.cells();
        let mut below = vec![0.0; cells.len()];
        for i in (0..cells.len()).rev() {
            let c = &cells[i];
            let w = c.v * c.q * h[i];
            out[i] = c.u * (below[i] + 0.5 * w);
            if let Some(p) = c.parent {
                below[p] += below[i] + w;
            }
        }
    }
}

/// `(I − Π_v) T`, with `Π_v` the orthogonal projection onto `v` in the weighted `L²`.
struct Deflated<'a> {
    op: &'a DiscretizedOperator,
    v: Vec<f64>,
    vv: f64,
}

impl Deflated<'_> {
    fn project_out(&self, h: &mut [f64]) {
        if self.vv <= 0.0 {
            return;
        }
        let q = self.op.q();
        let c: f64 = h.iter().zip(&self.v).zip(q).map(|((h, v), q)| h * v * q).sum::<f64>() / self.vv;
        for (hi, vi) in h.iter_mut().zip(&self.v) {
            *hi -= c * vi;
        }
    }
}

impl GridOperator for Deflated<'_> {
    fn dim(&self) -> usize {
        self.op.dim()
    }

    fn q(&self) -> &[f64] {
        self.op.q()
    }

    fn apply(&self, f: &[f64], out: &mut [f64]) {
        self.op.apply(f, out);
        self.project_out(out);
    }

    fn adjoint(&self, h: &[f64], out: &mut [f64]) {
        let mut g = h.to_vec();
        self.project_out(&mut g);
        self.op.adjoint(&g, out);
    }
}

/// `Σ q |f|^p` to the power `1/p` (maximum of `|f|` for `p = ∞`).
pub fn grid_p_norm(f: &[f64], q: &[f64], p: PNorm) -> f64 {
    if p.is_inf() {
        f.iter().zip(q).filter(|(_, q)| **q > 0.0).map(|(x, _)| x.abs()).fold(0.0, f64::max)
    } else {
        let r = p.p();
        f.iter().zip(q).map(|(x, q)| q * x.abs().powf(r)).sum::<f64>().powf(1.0 / r)
    }
}

/// Singular values of `op` between weighted `L²` spaces, largest first, with right singular vectors
/// (as grid functions).
pub fn singular_values<O: GridOperator>(op: &O, count: usize, seed: u64) -> (Vec<f64>, Vec<Vec<f64>>, bool) {
    let n = op.dim();
    let sq: Vec<f64> = op.q().iter().map(|q| q.sqrt()).collect();
    let gram = |x: &[f64], y: &mut [f64]| {
        let f: Vec<f64> = x.iter().zip(&sq).map(|(x, s)| x / s).collect();
        let mut tf = vec![0.0; n];
        op.apply(&f, &mut tf);
        op.adjoint(&tf, y);
        for (yi, s) in y.iter_mut().zip(&sq) {
            *yi *= s;
        }
    };
    let out = top_eigenpairs(n, count, gram, seed);
    let vals = out.values.iter().map(|l| l.max(0.0).sqrt()).collect();
    let vecs = out.vectors.into_iter().map(|z| z.iter().zip(&sq).map(|(z, s)| z / s).collect()).collect();
    (vals, vecs, out.converged)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormOptions {
    /// Random nonnegative starts for the nonlinear power iteration.
    pub starts: usize,
    pub max_iter: usize,
    /// Iterations over which the relative gain is measured.
    pub window: usize,
    pub gain_tol: f64,
    pub seed: u64,
}

impl Default for NormOptions {
    fn default() -> Self {
        Self { starts: 12, max_iter: 5000, window: 50, gain_tol: 1e-8, seed: 0x5eed }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormMethod {
    ClosedForm,
    Krylov,
    /// Nonlinear power iteration; the value is a lower bound.
    Ascent,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormEstimate {
    pub value: f64,
    pub method: NormMethod,
    /// The ascent hit its iteration cap before the gain criterion was met.
    pub stagnated: bool,
    pub iterations: usize,
}

/// `‖T‖` on `L^p` of the grid.
pub fn op_norm(op: &DiscretizedOperator, opts: &NormOptions) -> NormEstimate {
    let p = op.p();
    if op.is_empty() {
        return NormEstimate { value: 0.0, method: NormMethod::ClosedForm, stagnated: false, iterations: 0 };
    }
    let cells = op.grid().cells();
    if p.is_inf() {
        let far = op.u_to_far_end();
        let value = cells.iter().zip(&far).map(|(c, s)| c.v * s).fold(0.0, f64::max);
        return NormEstimate { value, method: NormMethod::ClosedForm, stagnated: false, iterations: 0 };
    }
    if p.is_one() {
        let below = op.v_from_near_end(1.0);
        let value = cells.iter().zip(&below).map(|(c, s)| c.u * s).fold(0.0, f64::max);
        return NormEstimate { value, method: NormMethod::ClosedForm, stagnated: false, iterations: 0 };
    }
    if p.is_two() {
        let (s, _, conv) = singular_values(op, 1, opts.seed);
        return NormEstimate { value: s[0], method: NormMethod::Krylov, stagnated: !conv, iterations: 0 };
    }
    ascent_norm(op, p, opts)
}

/// `‖T‖_{p→p}` of any grid operator (Krylov for `p = 2`, power iteration otherwise).
pub fn norm_of<O: GridOperator>(op: &O, p: PNorm, opts: &NormOptions) -> NormEstimate {
    if op.dim() == 0 {
        return NormEstimate { value: 0.0, method: NormMethod::ClosedForm, stagnated: false, iterations: 0 };
    }
    if p.is_two() {
        let (s, _, conv) = singular_values(op, 1, opts.seed);
        return NormEstimate { value: s[0], method: NormMethod::Krylov, stagnated: !conv, iterations: 0 };
    }
    ascent_norm(op, p, opts)
}

fn dual_map(x: f64, r: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x.signum() * x.abs().powf(r - 1.0)
    }
}

/// Multi-start nonlinear power iteration `f ← φ_{p'}(T* φ_p(Tf))`.
pub fn ascent_norm<O: GridOperator>(op: &O, p: PNorm, opts: &NormOptions) -> NormEstimate {
    let n = op.dim();
    let q = op.q();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut starts: Vec<Vec<f64>> = Vec::new();
    if p.p() > 1.0 && p.p().is_finite() {
        let (_, vecs, _) = singular_values(op, 1, opts.seed);
        if let Some(v) = vecs.into_iter().next() {
            let s: f64 = v.iter().sum();
            starts.push(v.iter().map(|x| if s < 0.0 { -x } else { *x }).collect());
        }
    }
    for _ in 0..opts.starts {
        starts.push((0..n).map(|_| rng.random::<f64>() + 1e-3).collect());
    }
    let mut best = NormEstimate { value: 0.0, method: NormMethod::Ascent, stagnated: false, iterations: 0 };
    let pp = p.p();
    let pc = p.conj().p();
    let mut tf = vec![0.0; n];
    let mut g = vec![0.0; n];
    for mut f in starts {
        let nf = grid_p_norm(&f, q, p);
        if nf == 0.0 {
            continue;
        }
        f.iter_mut().for_each(|x| *x /= nf);
        let mut history: Vec<f64> = Vec::new();
        let mut ratio = 0.0;
        let mut stagnated = true;
        let mut it = 0;
        while it < opts.max_iter {
            op.apply(&f, &mut tf);
            ratio = grid_p_norm(&tf, q, p);
            history.push(ratio);
            if ratio == 0.0 {
                stagnated = false;
                break;
            }
            if history.len() > opts.window {
                let old = history[history.len() - 1 - opts.window];
                if (ratio - old) <= opts.gain_tol * ratio {
                    stagnated = false;
                    break;
                }
            }
            let h: Vec<f64> = tf.iter().map(|&x| dual_map(x, pp)).collect();
            op.adjoint(&h, &mut g);
            for (fi, gi) in f.iter_mut().zip(&g) {
                *fi = dual_map(*gi, pc);
            }
            let nf = grid_p_norm(&f, q, p);
            if nf == 0.0 {
                stagnated = false;
                break;
            }
            f.iter_mut().for_each(|x| *x /= nf);
            it += 1;
        }
        if ratio > best.value {
            best = NormEstimate { value: ratio, method: NormMethod::Ascent, stagnated, iterations: it };
        }
    }
    best
}

/// Ordered singular values `s₁ ≥ s₂ ≥ …` of a discretized operator.
#[derive(Debug, Clone, PartialEq)]
pub struct SingularSpectrum {
    pub values: Vec<f64>,
    pub cells: usize,
    pub converged: bool,
}

/// The first `count` approximation numbers at `p = 2`.
pub fn approx_numbers_p2(op: &DiscretizedOperator, count: usize) -> Result<SingularSpectrum> {
    if !op.p().is_two() {
        return Err(Error::UnsupportedExponent { p: op.p().p(), reason: "approximation numbers need p = 2" });
    }
    let (mut values, _, converged) = singular_values(op, count, 0x5eed);
    values.resize(count, 0.0);
    for i in 1..values.len() {
        if values[i] > values[i - 1] {
            values[i] = values[i - 1];
        }
    }
    Ok(SingularSpectrum { values, cells: op.len(), converged })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AMethod {
    ZeroMeasure,
    /// `‖(I − Π_v) T‖` at `p = 2`.
    Deflated,
    /// `min_b ‖T_{b,K}‖` over a grid of roots with golden-section refinement.
    MinOverRoots,
    /// Supremum over point masses, exact for `p = 1`.
    DeltaExtremal,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AOptions {
    pub resolution: Resolution,
    pub samples_per_segment: usize,
    pub refine: bool,
    /// Use the minimum over roots even when `p = 2`.
    pub min_over_roots: bool,
    /// Random starts per candidate root during the scan.
    pub scan_starts: usize,
    pub norm: NormOptions,
    /// Grid root for the direct methods; defaults to the anchor.
    pub root: Option<TreePoint>,
}

impl Default for AOptions {
    fn default() -> Self {
        Self {
            resolution: Resolution::default(),
            samples_per_segment: 16,
            refine: true,
            min_over_roots: false,
            scan_starts: 2,
            norm: NormOptions::default(),
            root: None,
        }
    }
}

impl AOptions {
    pub fn with_resolution(cells: usize) -> Result<Self> {
        Ok(Self { resolution: Resolution::new(cells)?, ..Self::default() })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AValue {
    pub value: f64,
    pub method: AMethod,
    /// Minimizing root for [`AMethod::MinOverRoots`].
    pub root: Option<TreePoint>,
    pub stagnated: bool,
}

/// `A(K)`: the norm of `T_K` modulo multiples of `v`.
pub fn a_value(
    t: &RootedTree,
    u: &StepWeight,
    v: &StepWeight,
    k: &Subtree,
    p: PNorm,
    opts: &AOptions,
) -> Result<AValue> {
    if mu(t, v, p, k) == 0.0 || k.is_degenerate() {
        return Ok(AValue { value: 0.0, method: AMethod::ZeroMeasure, root: None, stagnated: false });
    }
    if p.is_one() {
        if opts.min_over_roots {
            return Err(Error::UnsupportedExponent { p: 1.0, reason: "the minimum over roots needs 1 < p" });
        }
        return delta_extremal(t, u, v, k, opts);
    }
    if p.is_two() && !opts.min_over_roots {
        let root = opts.root.unwrap_or_else(|| k.anchor(t));
        let op = DiscretizedOperator::new(t, u, v, k, root, p, opts.resolution, &[])?;
        let vv = op.v();
        let vnorm: f64 = vv.iter().zip(op.q()).map(|(v, q)| v * v * q).sum();
        let d = Deflated { op: &op, v: vv, vv: vnorm };
        let (s, _, conv) = singular_values(&d, 1, opts.norm.seed);
        return Ok(AValue { value: s[0], method: AMethod::Deflated, root: None, stagnated: !conv });
    }
    min_over_roots(t, u, v, k, p, opts)
}

fn delta_extremal(t: &RootedTree, u: &StepWeight, v: &StepWeight, k: &Subtree, opts: &AOptions) -> Result<AValue> {
    let root = opts.root.unwrap_or_else(|| k.anchor(t));
    let op = DiscretizedOperator::new(t, u, v, k, root, PNorm::ONE, opts.resolution, &[])?;
    let below = op.v_from_near_end(1.0);
    let total: f64 = op.grid().cells().iter().map(|c| c.v * c.q).sum();
    let half = 0.5 * total;
    let mut best: f64 = 0.0;
    for (c, &near) in op.grid().cells().iter().zip(&below) {
        let far = near - c.v * c.q;
        let x = half.clamp(far, near);
        best = best.max(c.u * x.min(total - x));
    }
    Ok(AValue { value: best, method: AMethod::DeltaExtremal, root: None, stagnated: false })
}

/// `‖T_{b,K}‖` on `L^p(K)`.
#[allow(clippy::too_many_arguments)]
pub fn norm_at_root(
    t: &RootedTree,
    u: &StepWeight,
    v: &StepWeight,
    k: &Subtree,
    b: TreePoint,
    p: PNorm,
    res: Resolution,
    opts: &NormOptions,
) -> Result<NormEstimate> {
    let op = DiscretizedOperator::new(t, u, v, k, b, p, res, &[])?;
    Ok(op_norm(&op, opts))
}

/// Candidate roots: every segment end plus `samples` interior points per segment,
/// grouped per segment in order of increasing offset.
fn root_candidates(t: &RootedTree, k: &Subtree, samples: usize) -> Vec<(usize, Vec<f64>)> {
    k.segs()
        .iter()
        .map(|s| {
            let xs = (0..=samples + 1).map(|j| s.lo + (s.hi - s.lo) * j as f64 / (samples + 1) as f64).collect();
            let _ = t;
            (s.edge, xs)
        })
        .collect()
}

fn min_over_roots(
    t: &RootedTree,
    u: &StepWeight,
    v: &StepWeight,
    k: &Subtree,
    p: PNorm,
    opts: &AOptions,
) -> Result<AValue> {
    let scan = NormOptions { starts: opts.scan_starts.min(opts.norm.starts), ..opts.norm };
    let eval = |b: TreePoint, o: &NormOptions| -> Result<NormEstimate> {
        norm_at_root(t, u, v, k, b, p, opts.resolution, o)
    };
    let cands = root_candidates(t, k, opts.samples_per_segment);
    let mut seen: Vec<(TreePoint, f64)> = Vec::new();
    let mut best: Option<(TreePoint, f64, usize, usize)> = None;
    let mut stagnated = false;
    for (si, (e, xs)) in cands.iter().enumerate() {
        for (xi, &x) in xs.iter().enumerate() {
            let b = t.point_on(*e, x);
            let val = match seen.iter().find(|(q, _)| q.same(&b)) {
                Some(&(_, val)) => val,
                None => {
                    let est = eval(b, &scan)?;
                    stagnated |= est.stagnated;
                    seen.push((b, est.value));
                    est.value
                }
            };
            let better = match best {
                None => true,
                Some((bb, bv, _, _)) => {
                    val < bv * (1.0 - 1e-12) || (val <= bv * (1.0 + 1e-12) && b.cmp_lex(&bb).is_lt())
                }
            };
            if better {
                best = Some((b, val, si, xi));
            }
        }
    }
    let (mut bp, mut bv, si, xi) = best.ok_or_else(|| Error::InvalidSubtree("no candidate roots".into()))?;
    if opts.refine {
        // intervals next to the best sample on every segment touching it
        let mut intervals: Vec<(usize, f64, f64)> = Vec::new();
        for (e, xs) in &cands {
            for (j, &x) in xs.iter().enumerate() {
                if t.point_on(*e, x).same(&bp) {
                    if j > 0 {
                        intervals.push((*e, xs[j - 1], x));
                    }
                    if j + 1 < xs.len() {
                        intervals.push((*e, x, xs[j + 1]));
                    }
                }
            }
        }
        let _ = (si, xi);
        for (e, a, b) in intervals {
            let tol = (t.len(e) * 1e-6).max(1e-12);
            let mut err = None;
            let (x, fx) = golden_section_min(
                |x| match eval(t.point_on(e, x), &scan) {
                    Ok(est) => est.value,
                    Err(er) => {
                        err = Some(er);
                        f64::INFINITY
                    }
                },
                a,
                b,
                tol,
            );
            if let Some(er) = err {
                return Err(er);
            }
            if fx < bv * (1.0 - 1e-12) {
                bv = fx;
                bp = t.point_on(e, x);
            }
        }
    }
    if scan.starts < opts.norm.starts && !p.is_inf() && !p.is_two() {
        let est = eval(bp, &opts.norm)?;
        stagnated = est.stagnated;
        bv = est.value.max(bv);
    }
    Ok(AValue { value: bv, method: AMethod::MinOverRoots, root: Some(bp), stagnated })
}

/// The scalar `c_f` minimizing `‖Tf − c v‖_p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArgminShift {
    pub c: f64,
    /// `v` vanishes on the grid, so every `c` is optimal.
    pub degenerate: bool,
}

/// Minimizes `c ↦ ‖tf − c v‖_p` on a grid with weights `q`.
pub fn argmin_shift(tf: &[f64], v: &[f64], q: &[f64], p: PNorm) -> Result<ArgminShift> {
    if tf.len() != v.len() || q.len() != v.len() {
        return Err(Error::Shape { expected: v.len(), got: tf.len().min(q.len()) });
    }
    if p.is_one() {
        return Err(Error::UnsupportedExponent { p: 1.0, reason: "the minimizing shift is unique only for p > 1" });
    }
    let active: Vec<usize> = (0..v.len()).filter(|&i| v[i] > 0.0 && q[i] > 0.0).collect();
    if active.is_empty() {
        return Ok(ArgminShift { c: 0.0, degenerate: true });
    }
    if p.is_two() {
        let num: f64 = active.iter().map(|&i| q[i] * tf[i] * v[i]).sum();
        let den: f64 = active.iter().map(|&i| q[i] * v[i] * v[i]).sum();
        return Ok(ArgminShift { c: num / den, degenerate: false });
    }
    let ratios = active.iter().map(|&i| tf[i] / v[i]);
    let lo = ratios.clone().fold(f64::INFINITY, f64::min);
    let hi = ratios.fold(f64::NEG_INFINITY, f64::max);
    if hi - lo <= 0.0 {
        return Ok(ArgminShift { c: lo, degenerate: false });
    }
    let r = p.p();
    let objective = |c: f64| -> f64 {
        if p.is_inf() {
            active.iter().map(|&i| (tf[i] - c * v[i]).abs()).fold(0.0, f64::max)
        } else {
            active.iter().map(|&i| q[i] * (tf[i] - c * v[i]).abs().powf(r)).sum()
        }
    };
    let tol = 1e-10 * lo.abs().max(hi.abs()).max(f64::MIN_POSITIVE);
    let (c, _) = golden_section_min(objective, lo, hi, tol);
    Ok(ArgminShift { c, degenerate: false })
}

/// `T − P` for the rank-`N` operator `P f = v ℓ_{part(x)}(f)` built from a partition.
#[derive(Debug, Clone)]
pub struct FiniteRankApproximant {
    op: DiscretizedOperator,
    part_of: Vec<usize>,
    funcs: Vec<Vec<f64>>,
    v: Vec<f64>,
}

impl FiniteRankApproximant {
    /// For `p = 2` each part uses the `μ`-average functional; otherwise the functional
    /// `∫_{a_i}^{b_i} f u` with `b_i` the minimizing root of the part.
    pub fn new(
        t: &RootedTree,
        u: &StepWeight,
        v: &StepWeight,
        k: &Subtree,
        partition: &Partition,
        p: PNorm,
        opts: &AOptions,
    ) -> Result<Self> {
        partition.check(t)?;
        if partition.parent.overlap(k) < k.length() - 1e-9 || (partition.parent.length() - k.length()).abs() > 1e-9 {
            return Err(Error::InvalidPartition("partition parent differs from the subtree".into()));
        }
        let anchors: Vec<TreePoint> = partition.parts.iter().map(|g| g.anchor(t)).collect();
        let mut extra: Vec<TreePoint> = anchors.clone();
        for g in &partition.parts {
            for s in g.segs() {
                extra.push(t.point_on(s.edge, s.lo));
                extra.push(t.point_on(s.edge, s.hi));
            }
        }
        let mut targets: Vec<Option<TreePoint>> = vec![None; partition.parts.len()];
        if !p.is_two() {
            if p.is_one() {
                return Err(Error::UnsupportedExponent { p: 1.0, reason: "the approximant needs 1 < p" });
            }
            let sub = AOptions { min_over_roots: true, ..*opts };
            for (i, g) in partition.parts.iter().enumerate() {
                if mu(t, v, p, g) > 0.0 && !g.is_degenerate() {
                    let a = a_value(t, u, v, g, p, &sub)?;
                    targets[i] = a.root;
                    if let Some(b) = a.root {
                        extra.push(b);
                    }
                }
            }
        }
        let op = DiscretizedOperator::new(t, u, v, k, k.anchor(t), p, opts.resolution, &extra)?;
        let grid = op.grid();
        let cells = grid.cells();
        let n = cells.len();
        let mut part_of = vec![usize::MAX; n];
        for (i, g) in partition.parts.iter().enumerate() {
            for c in grid.cells_in(t, g) {
                part_of[c] = i;
            }
        }
        if part_of.contains(&usize::MAX) {
            return Err(Error::InvalidPartition("a grid cell lies in no part".into()));
        }
        let mut funcs = vec![vec![0.0; n]; partition.parts.len()];
        for (i, f) in funcs.iter_mut().enumerate() {
            let upper = grid.path_to(t, anchors[i]);
            for &j in &upper {
                f[j] += cells[j].u * cells[j].q;
            }
            if p.is_two() {
                let z: f64 = (0..n).filter(|&c| part_of[c] == i).map(|c| cells[c].v * cells[c].v * cells[c].q).sum();
                if z <= 0.0 {
                    continue;
                }
                let mut below = vec![0.0; n];
                for c in (0..n).rev() {
                    if part_of[c] != i {
                        continue;
                    }
                    let w = cells[c].v * cells[c].v * cells[c].q;
                    f[c] += cells[c].u * cells[c].q * (below[c] + 0.5 * w) / z;
                    if let Some(par) = cells[c].parent {
                        if part_of[par] == i {
                            below[par] += below[c] + w;
                        }
                    }
                }
            } else if let Some(b) = targets[i] {
                let to_b = grid.path_to(t, b);
                for &j in &to_b {
                    if !upper.contains(&j) {
                        f[j] += cells[j].u * cells[j].q;
                    }
                }
            }
        }
        let v = op.v();
        Ok(Self { op, part_of, funcs, v })
    }

    pub fn rank(&self) -> usize {
        self.funcs.len()
    }

    pub fn operator(&self) -> &DiscretizedOperator {
        &self.op
    }

    /// `P f`.
    pub fn apply_p(&self, f: &[f64]) -> Vec<f64> {
        let vals: Vec<f64> = self.funcs.iter().map(|l| crate::linalg::dot(l, f)).collect();
        self.part_of.iter().zip(&self.v).map(|(&i, v)| v * vals[i]).collect()
    }

    /// `‖T − P‖`.
    pub fn residual_norm(&self, opts: &NormOptions) -> NormEstimate {
        norm_of(self, self.op.p(), opts)
    }
}

impl GridOperator for FiniteRankApproximant {
    fn dim(&self) -> usize {
        self.op.dim()
    }

    fn q(&self) -> &[f64] {
        self.op.q()
    }

    fn apply(&self, f: &[f64], out: &mut [f64]) {
        self.op.apply(f, out);
        let pf = self.apply_p(f);
        for (o, x) in out.iter_mut().zip(pf) {
            *o -= x;
        }
    }

    fn adjoint(&self, h: &[f64], out: &mut [f64]) {
        self.op.adjoint(h, out);
        let q = self.op.q();
        let mut s = vec![0.0; self.funcs.len()];
        for c in 0..h.len() {
            s[self.part_of[c]] += self.v[c] * q[c] * h[c];
        }
        for j in 0..out.len() {
            let mut acc = 0.0;
            for (l, si) in self.funcs.iter().zip(&s) {
                acc += l[j] * si;
            }
            out[j] -= acc / q[j];
        }
    }
}

/// `A` of an interval with constant weights: `|u||v||I| α_p`, for tests and reports.
pub fn constant_interval_a(u: f64, v: f64, len: f64, alpha: f64) -> f64 {
    u.abs() * v.abs() * len * alpha
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::{root_at, Location, MetricTree, Seg};
    use approx::assert_relative_eq;

    fn unit(n: usize) -> (RootedTree, StepWeight, Subtree, Resolution) {
        let t = root_at(MetricTree::interval(1.0).unwrap(), Location::Vertex(0)).unwrap();
        let one = StepWeight::constant(t.tree(), 1.0);
        let k = Subtree::whole(&t);
        (t, one, k, Resolution::new(n).unwrap())
    }

    #[test]
    fn apply_constant_gives_identity_primitive() {
        let (t, one, k, res) = unit(100);
        let op = DiscretizedOperator::at_anchor(&t, &one, &one, &k, PNorm::TWO, res).unwrap();
        let tf = op.apply_vec(&vec![1.0; op.len()]).unwrap();
        for (c, y) in op.grid().cells().iter().zip(&tf) {
            assert!((y - c.mid()).abs() < 1e-12);
        }
        assert!(op.apply_vec(&[1.0]).is_err());
        let z = op.apply_vec(&vec![0.0; op.len()]).unwrap();
        assert!(z.iter().all(|x| *x == 0.0));
    }

    #[test]
    fn adjoint_matches_dense_transpose() {
        let t = root_at(MetricTree::star(&[1.0, 0.5, 2.0]).unwrap(), Location::Edge { edge: 2, offset: 0.7 }).unwrap();
        let u = StepWeight::new(vec![vec![(0.5, 1.0), (0.5, 2.0)], vec![(0.5, 3.0)], vec![(2.0, 0.5)]]).unwrap();
        let u = t.map_weight(&u);
        let v = t.map_weight(&StepWeight::new(vec![vec![(1.0, 2.0)], vec![(0.5, 1.0)], vec![(2.0, 1.5)]]).unwrap());
        let k = Subtree::whole(&t);
        let op = DiscretizedOperator::at_anchor(&t, &u, &v, &k, PNorm::TWO, Resolution::new(40).unwrap()).unwrap();
        let n = op.len();
        let m = op.dense();
        let f: Vec<f64> = (0..n).map(|i| ((i * 7) % 5) as f64 - 2.0).collect();
        let h: Vec<f64> = (0..n).map(|i| ((i * 3) % 7) as f64 - 3.0).collect();
        let tf = op.apply_vec(&f).unwrap();
        let mut ts = vec![0.0; n];
        op.adjoint(&h, &mut ts);
        for i in 0..n {
            let row: f64 = (0..n).map(|j| m[i * n + j] * f[j]).sum();
            assert!((row - tf[i]).abs() < 1e-12);
        }
        let q = op.q();
        let lhs: f64 = (0..n).map(|i| q[i] * tf[i] * h[i]).sum();
        let rhs: f64 = (0..n).map(|i| q[i] * f[i] * ts[i]).sum();
        assert_relative_eq!(lhs, rhs, max_relative = 1e-12);
    }

    #[test]
    fn closed_form_norms() {
        let (t, one, k, res) = unit(200);
        let op = DiscretizedOperator::at_anchor(&t, &one, &one, &k, PNorm::INF, res).unwrap();
        assert_relative_eq!(op_norm(&op, &NormOptions::default()).value, 1.0, max_relative = 1e-12);
        let op = DiscretizedOperator::at_anchor(&t, &one, &one, &k, PNorm::ONE, res).unwrap();
        assert_relative_eq!(op_norm(&op, &NormOptions::default()).value, 1.0, max_relative = 1e-12);
        let zero = StepWeight::constant(t.tree(), 0.0);
        let op = DiscretizedOperator::at_anchor(&t, &zero, &one, &k, PNorm::TWO, res).unwrap();
        assert_eq!(op_norm(&op, &NormOptions::default()).value, 0.0);
    }

    #[test]
    fn volterra_norm_p2() {
        let (t, one, k, _) = unit(2);
        let op = DiscretizedOperator::at_anchor(&t, &one, &one, &k, PNorm::TWO, Resolution::new(2000).unwrap())
            .unwrap();
        let est = op_norm(&op, &NormOptions::default());
        assert_relative_eq!(est.value, 2.0 / core::f64::consts::PI, max_relative = 1e-3);
    }

    #[test]
    fn approx_numbers_need_p2() {
        let (t, one, k, res) = unit(64);
        let op = DiscretizedOperator::at_anchor(&t, &one, &one, &k, PNorm::new(3.0).unwrap(), res).unwrap();
        assert!(approx_numbers_p2(&op, 3).is_err());
        let zero = StepWeight::constant(t.tree(), 0.0);
        let op = DiscretizedOperator::at_anchor(&t, &zero, &one, &k, PNorm::TWO, res).unwrap();
        assert!(approx_numbers_p2(&op, 4).unwrap().values.iter().all(|x| *x == 0.0));
    }

    #[test]
    fn a_value_anchors() {
        let (t, one, k, _) = unit(2);
        let opts = AOptions::with_resolution(1024).unwrap();
        let a = a_value(&t, &one, &one, &k, PNorm::TWO, &opts).unwrap();
        assert_relative_eq!(a.value, 1.0 / core::f64::consts::PI, max_relative = 1e-3);
        let a = a_value(&t, &one, &one, &k, PNorm::INF, &opts).unwrap();
        assert_relative_eq!(a.value, 0.5, max_relative = 1e-6);
        let a = a_value(&t, &one, &one, &k, PNorm::ONE, &opts).unwrap();
        assert_relative_eq!(a.value, 0.5, max_relative = 1e-12);
        let zero = StepWeight::constant(t.tree(), 0.0);
        let a = a_value(&t, &one, &zero, &k, PNorm::TWO, &opts).unwrap();
        assert_eq!((a.value, a.method), (0.0, AMethod::ZeroMeasure));
    }

    #[test]
    fn constant_weights_scale_like_lemma() {
        let t = root_at(MetricTree::interval(2.5).unwrap(), Location::Vertex(0)).unwrap();
        let u = StepWeight::constant(t.tree(), 3.0);
        let v = StepWeight::constant(t.tree(), 0.4);
        let k = Subtree::whole(&t);
        let opts = AOptions::with_resolution(1024).unwrap();
        let a = a_value(&t, &u, &v, &k, PNorm::TWO, &opts).unwrap();
        assert_relative_eq!(a.value, constant_interval_a(3.0, 0.4, 2.5, 1.0 / core::f64::consts::PI), max_relative = 1e-4);
    }

    #[test]
    fn shift_examples() {
        let q = [0.25; 4];
        let v = [1.0, 2.0, 0.5, 1.0];
        let zero = [0.0; 4];
        let tf: Vec<f64> = v.iter().map(|x| 1.7 * x).collect();
        for p in [PNorm::TWO, PNorm::new(3.0).unwrap(), PNorm::INF] {
            assert_eq!(argmin_shift(&zero, &v, &q, p).unwrap().c, 0.0);
            assert_relative_eq!(argmin_shift(&tf, &v, &q, p).unwrap().c, 1.7, max_relative = 1e-9);
        }
        assert!(argmin_shift(&tf, &[0.0; 4], &q, PNorm::TWO).unwrap().degenerate);
    }

    #[test]
    fn shift_is_strict_minimizer() {
        let q = [0.2; 5];
        let v = [1.0, 0.5, 2.0, 1.5, 1.0];
        let tf = [0.3, -0.2, 1.1, 0.9, 0.0];
        let p = PNorm::new(3.0).unwrap();
        let c = argmin_shift(&tf, &v, &q, p).unwrap().c;
        let obj = |c: f64| -> f64 { (0..5).map(|i| q[i] * (tf[i] - c * v[i]).abs().powi(3)).sum() };
        assert!(obj(c) < obj(c + 1e-4) && obj(c) < obj(c - 1e-4));
    }

    #[test]
    fn trivial_partition_approximant() {
        let (t, one, k, _) = unit(2);
        let opts = AOptions::with_resolution(1000).unwrap();
        let part = Partition { parent: k.clone(), parts: vec![k.clone()] };
        let fr = FiniteRankApproximant::new(&t, &one, &one, &k, &part, PNorm::TWO, &opts).unwrap();
        assert_eq!(fr.rank(), 1);
        assert_relative_eq!(fr.residual_norm(&NormOptions::default()).value, 1.0 / core::f64::consts::PI, max_relative = 1e-3);
        let pieces: Vec<Subtree> = (0..4)
            .map(|i| Subtree::from_segments(&t, vec![Seg { edge: 0, lo: i as f64 / 4.0, hi: (i + 1) as f64 / 4.0 }]).unwrap())
            .collect();
        let part = Partition { parent: k.clone(), parts: pieces };
        let fr = FiniteRankApproximant::new(&t, &one, &one, &k, &part, PNorm::TWO, &opts).unwrap();
        assert_relative_eq!(
            fr.residual_norm(&NormOptions::default()).value,
            1.0 / (4.0 * core::f64::consts::PI),
            max_relative = 1e-3
        );
    }
}
