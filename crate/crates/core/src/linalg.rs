//! Small dense and Krylov eigen-solvers used by the operator module.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Eigen-decomposition of a symmetric `n × n` row-major matrix by cyclic Jacobi.
/// Returns eigenvalues in descending order and matching eigenvectors as rows.
pub fn jacobi_eigen(n: usize, mut a: Vec<f64>) -> (Vec<f64>, Vec<Vec<f64>>) {
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let scale: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
    for _sweep in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                off += a[i * n + j] * a[i * n + j];
            }
        }
        if off.sqrt() <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| a[j * n + j].total_cmp(&a[i * n + i]));
    let vals = idx.iter().map(|&i| a[i * n + i]).collect();
    let vecs = idx.iter().map(|&i| (0..n).map(|k| v[k * n + i]).collect()).collect();
    (vals, vecs)
}

/// Leading eigenpairs of a symmetric positive semi-definite operator.
#[derive(Debug, Clone)]
pub struct TopEigen {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
    pub converged: bool,
}

/// Dimension up to which the operator is assembled densely.
const DENSE_LIMIT: usize = 64;

/// Top `count` eigenpairs of the symmetric PSD map `apply` on `R^n`, by block Krylov
/// with full reorthogonalization and Rayleigh–Ritz, growing the basis until the
/// Ritz residuals fall below `1e-9` of the leading eigenvalue.
pub fn top_eigenpairs(n: usize, count: usize, apply: impl Fn(&[f64], &mut [f64]), seed: u64) -> TopEigen {
    let count = count.min(n);
    if n == 0 || count == 0 {
        return TopEigen { values: Vec::new(), vectors: Vec::new(), converged: true };
    }
    if n <= DENSE_LIMIT {
        let mut m = vec![0.0; n * n];
        let mut e = vec![0.0; n];
        let mut col = vec![0.0; n];
        for j in 0..n {
            e.iter_mut().for_each(|x| *x = 0.0);
            e[j] = 1.0;
            apply(&e, &mut col);
            for i in 0..n {
                m[i * n + j] = col[i];
            }
        }
        symmetrize(n, &mut m);
        let (vals, vecs) = jacobi_eigen(n, m);
        return TopEigen {
            values: vals.into_iter().take(count).collect(),
            vectors: vecs.into_iter().take(count).collect(),
            converged: true,
        };
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let block = count.clamp(1, 8);
    let mut dim = (2 * count + 40).min(n);
    let cap = n.min(1200.max(4 * count + 80));
    loop {
        let out = krylov_pass(n, count, block, dim, &apply, &mut rng);
        if out.converged || dim >= cap {
            return out;
        }
        dim = (dim * 2).min(cap);
    }
}

fn symmetrize(n: usize, m: &mut [f64]) {
    for i in 0..n {
        for j in i + 1..n {
            let s = 0.5 * (m[i * n + j] + m[j * n + i]);
            m[i * n + j] = s;
            m[j * n + i] = s;
        }
    }
}

fn random_vec(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..n).map(|_| rng.random::<f64>() - 0.5).collect()
}

/// Orthogonalizes `x` against `basis` twice; returns the remaining norm ratio.
fn orthogonalize(basis: &[Vec<f64>], x: &mut [f64]) -> f64 {
    let before = norm2(x);
    for _ in 0..2 {
        for b in basis {
            let c = dot(b, x);
            axpy(-c, b, x);
        }
    }
    if before == 0.0 {
        0.0
    } else {
        norm2(x) / before
    }
}

fn krylov_pass(
    n: usize,
    count: usize,
    block: usize,
    dim: usize,
    apply: &impl Fn(&[f64], &mut [f64]),
    rng: &mut ChaCha8Rng,
) -> TopEigen {
    let mut q: Vec<Vec<f64>> = Vec::with_capacity(dim);
    let mut mq: Vec<Vec<f64>> = Vec::with_capacity(dim);
    let mut pending: Vec<Vec<f64>> = (0..block).map(|_| random_vec(n, rng)).collect();
    while q.len() < dim {
        let mut added = Vec::new();
        for mut x in pending.drain(..) {
            if q.len() >= dim {
                break;
            }
            let ratio = orthogonalize(&q, &mut x);
            if ratio < 1e-10 {
                continue;
            }
            let nx = norm2(&x);
            x.iter_mut().for_each(|v| *v /= nx);
            let mut y = vec![0.0; n];
            apply(&x, &mut y);
            q.push(x);
            mq.push(y.clone());
            added.push(y);
        }
        if q.len() >= dim || q.len() >= n {
            break;
        }
        if added.is_empty() {
            // invariant subspace reached: restart with fresh directions
            pending = (0..block).map(|_| random_vec(n, rng)).collect();
        } else {
            pending = added;
        }
    }
    let m = q.len();
    let mut h = vec![0.0; m * m];
    for i in 0..m {
        for j in i..m {
            let s = 0.5 * (dot(&q[i], &mq[j]) + dot(&q[j], &mq[i]));
            h[i * m + j] = s;
            h[j * m + i] = s;
        }
    }
    let (vals, ys) = jacobi_eigen(m, h);
    let take = count.min(m);
    let top = vals.first().copied().unwrap_or(0.0).abs().max(f64::MIN_POSITIVE);
    let mut converged = true;
    let mut vectors = Vec::with_capacity(take);
    for (theta, y) in vals.iter().zip(&ys).take(take) {
        let mut z = vec![0.0; n];
        let mut mz = vec![0.0; n];
        for (k, &c) in y.iter().enumerate() {
            axpy(c, &q[k], &mut z);
            axpy(c, &mq[k], &mut mz);
        }
        axpy(-theta, &z, &mut mz);
        if m < n && norm2(&mz) > 1e-9 * top {
            converged = false;
        }
        vectors.push(z);
    }
    TopEigen { values: vals.into_iter().take(take).collect(), vectors, converged }
}

/// Minimizes a function on `[a, b]` by golden-section search.
pub fn golden_section_min(mut f: impl FnMut(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    let mut iter = 0;
    while (b - a).abs() > tol && iter < 200 {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
        iter += 1;
    }
    if fc <= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}
