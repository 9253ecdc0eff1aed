//! Small dense complex-matrix helpers shared by the rest of the crate.

use faer::{c64, Mat, MatRef};

pub type CMat = Mat<c64>;

pub const ZERO: c64 = c64 { re: 0.0, im: 0.0 };
pub const ONE: c64 = c64 { re: 1.0, im: 0.0 };
pub const I: c64 = c64 { re: 0.0, im: 1.0 };

pub fn identity(n: usize) -> CMat {
    Mat::identity(n, n)
}

pub fn kron(a: MatRef<'_, c64>, b: MatRef<'_, c64>) -> CMat {
    let (ar, ac) = (a.nrows(), a.ncols());
    let (br, bc) = (b.nrows(), b.ncols());
    let mut out = Mat::zeros(ar * br, ac * bc);
    for i in 0..ar {
        for j in 0..ac {
            let aij = a[(i, j)];
            if aij == ZERO {
                continue;
            }
            for k in 0..br {
                for l in 0..bc {
                    out[(i * br + k, j * bc + l)] = aij * b[(k, l)];
                }
            }
        }
    }
    out
}

pub fn trace(m: MatRef<'_, c64>) -> c64 {
    (0..m.nrows().min(m.ncols())).map(|i| m[(i, i)]).sum()
}

/// Frobenius norm.
pub fn fro(m: MatRef<'_, c64>) -> f64 {
    m.norm_l2()
}

pub fn max_abs(m: MatRef<'_, c64>) -> f64 {
    let mut best = 0.0f64;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            best = best.max(m[(i, j)].norm());
        }
    }
    best
}

/// `‖M - M†‖_F`.
pub fn hermiticity_deviation(m: MatRef<'_, c64>) -> f64 {
    let n = m.nrows();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            acc += (m[(i, j)] - m[(j, i)].conj()).norm_sqr();
        }
    }
    acc.sqrt()
}

/// `‖U†U - I‖_F`.
pub fn unitarity_deviation(u: MatRef<'_, c64>) -> f64 {
    let g = u.adjoint() * u;
    fro((g - identity(u.nrows())).as_ref())
}

pub fn commutator(a: MatRef<'_, c64>, b: MatRef<'_, c64>) -> CMat {
    a * b - b * a
}

pub fn scale(m: MatRef<'_, c64>, s: c64) -> CMat {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| s * m[(i, j)])
}

pub fn outer(v: &[c64]) -> CMat {
    Mat::from_fn(v.len(), v.len(), |i, j| v[i] * v[j].conj())
}

pub fn vec_norm(v: &[c64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `Tr(A† B)`, the Hilbert-Schmidt inner product.
pub fn hs_inner(a: MatRef<'_, c64>, b: MatRef<'_, c64>) -> c64 {
    let mut acc = ZERO;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            acc += a[(i, j)].conj() * b[(i, j)];
        }
    }
    acc
}

/// Rotates a vector so its largest-magnitude entry is real and positive.
/// Ties go to the lowest index, which makes eigenvector output reproducible.
pub fn fix_phase(v: &mut [c64]) {
    let mut best = 0usize;
    let mut best_abs = -1.0;
    for (k, z) in v.iter().enumerate() {
        let a = z.norm();
        if a > best_abs * (1.0 + 1e-12) {
            best = k;
            best_abs = a;
        }
    }
    if best_abs <= 0.0 {
        return;
    }
    let phase = v[best].conj() / best_abs;
    for z in v.iter_mut() {
        *z *= phase;
    }
}

pub fn col_to_vec(m: MatRef<'_, c64>, j: usize) -> Vec<c64> {
    (0..m.nrows()).map(|i| m[(i, j)]).collect()
}

/// Row-stacked vectorisation: `v[i * n + j] = A[i, j]`.
pub fn vectorize(m: MatRef<'_, c64>) -> Vec<c64> {
    let (r, c) = (m.nrows(), m.ncols());
    let mut v = Vec::with_capacity(r * c);
    for i in 0..r {
        for j in 0..c {
            v.push(m[(i, j)]);
        }
    }
    v
}

pub fn unvectorize(v: &[c64], n: usize) -> CMat {
    debug_assert_eq!(v.len(), n * n);
    Mat::from_fn(n, n, |i, j| v[i * n + j])
}

pub fn matvec(m: MatRef<'_, c64>, v: &[c64]) -> Vec<c64> {
    let mut out = vec![ZERO; m.nrows()];
    for j in 0..m.ncols() {
        let vj = v[j];
        if vj == ZERO {
            continue;
        }
        for (i, o) in out.iter_mut().enumerate() {
            *o += m[(i, j)] * vj;
        }
    }
    out
}

pub fn log2_exact(n: usize) -> Option<usize> {
    if n.is_power_of_two() {
        Some(n.trailing_zeros() as usize)
    } else {
        None
    }
}

/// Least-squares slope, intercept and coefficient of determination.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    (slope, intercept, r2)
}
