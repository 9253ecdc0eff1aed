//! Test-side reference implementations. None of these call into the
//! library's algorithms; they only share the matrix type.
#![allow(dead_code)]

use faer::{c64, Mat};

pub type M = Mat<c64>;

pub fn c(re: f64, im: f64) -> c64 {
    c64::new(re, im)
}

pub fn eye(n: usize) -> M {
    Mat::from_fn(n, n, |i, j| if i == j { c(1.0, 0.0) } else { c(0.0, 0.0) })
}

pub fn sx() -> M {
    Mat::from_fn(2, 2, |i, j| if i != j { c(1.0, 0.0) } else { c(0.0, 0.0) })
}

pub fn sy() -> M {
    let mut m = Mat::zeros(2, 2);
    m[(0, 1)] = c(0.0, -1.0);
    m[(1, 0)] = c(0.0, 1.0);
    m
}

pub fn sz() -> M {
    let mut m = Mat::zeros(2, 2);
    m[(0, 0)] = c(1.0, 0.0);
    m[(1, 1)] = c(-1.0, 0.0);
    m
}

pub fn kron2(a: &M, b: &M) -> M {
    let (ar, ac, br, bc) = (a.nrows(), a.ncols(), b.nrows(), b.ncols());
    Mat::from_fn(ar * br, ac * bc, |i, j| a[(i / br, j / bc)] * b[(i % br, j % bc)])
}

/// Tensor product of single-site operators, site 0 leftmost.
pub fn chain(ops: &[M]) -> M {
    ops.iter().skip(1).fold(ops[0].clone(), |acc, o| kron2(&acc, o))
}

/// `op` on `site` of an `n`-site chain, identity elsewhere.
pub fn local(op: &M, site: usize, n: usize) -> M {
    let ops: Vec<M> = (0..n).map(|k| if k == site { op.clone() } else { eye(2) }).collect();
    chain(&ops)
}

pub fn fro(m: &M) -> f64 {
    let mut s = 0.0;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            s += m[(i, j)].norm_sqr();
        }
    }
    s.sqrt()
}

pub fn diff(a: &M, b: &M) -> f64 {
    fro(&(a - b))
}

/// `exp(A)` by scaling and squaring of a truncated Taylor series.
pub fn expm(a: &M) -> M {
    let n = a.nrows();
    let norm = fro(a);
    let mut s = 0;
    while norm / 2f64.powi(s) > 0.25 {
        s += 1;
    }
    let scaled = Mat::from_fn(n, n, |i, j| a[(i, j)] / 2f64.powi(s));
    let mut term = eye(n);
    let mut sum = eye(n);
    for k in 1..=18 {
        term = &term * &scaled;
        term = Mat::from_fn(n, n, |i, j| term[(i, j)] / k as f64);
        sum = &sum + &term;
    }
    for _ in 0..s {
        sum = &sum * &sum;
    }
    sum
}

/// Reduced operator on the kept qubits by explicit index summation over
/// matching traced bits. Site 0 is the most significant bit.
pub fn ptrace(rho: &M, n: usize, keep: &[usize]) -> M {
    let k = keep.len();
    let dk = 1usize << k;
    let sub = |idx: usize| -> usize {
        keep.iter().fold(0, |acc, &s| (acc << 1) | ((idx >> (n - 1 - s)) & 1))
    };
    let traced_mask: usize =
        (0..n).filter(|s| !keep.contains(s)).map(|s| 1usize << (n - 1 - s)).sum();
    let mut out: M = Mat::zeros(dk, dk);
    for i in 0..1usize << n {
        for j in 0..1usize << n {
            if i & traced_mask == j & traced_mask {
                out[(sub(i), sub(j))] += rho[(i, j)];
            }
        }
    }
    out
}

pub fn matpow(m: &M, n: u32) -> M {
    let mut out = eye(m.nrows());
    for _ in 0..n {
        out = &out * m;
    }
    out
}

pub fn apply_vec(m: &M, v: &[c64]) -> Vec<c64> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)] * v[j]).sum()).collect()
}

pub fn vnorm(v: &[c64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn vdiff(a: &[c64], b: &[c64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt()
}

/// Row-stacked vector of a square matrix.
pub fn rowvec(m: &M) -> Vec<c64> {
    let n = m.nrows();
    (0..n * n).map(|k| m[(k / n, k % n)]).collect()
}

pub fn unrowvec(v: &[c64], n: usize) -> M {
    Mat::from_fn(n, n, |i, j| v[i * n + j])
}

pub fn sc(m: &M, s: f64) -> M {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] * s)
}
