//! Non-Hermitian eigendecomposition of a channel superoperator and the
//! spectral statistics built on it.

use std::cmp::Ordering;
use std::io::Write;

use faer::linalg::solvers::DenseSolveCore;
use faer::{c64, Mat};
use serde::Serialize;

use crate::channel::SuperoperatorMatrix;
use crate::error::{Error, Result};
use crate::linalg::{self, CMat, ZERO};
use crate::spin_ops::DenseOperator;

/// Above this eigenvalue condition number a spectrum is treated as defective.
pub const DEFECTIVITY_THRESHOLD: f64 = 1e6;
pub const DEFAULT_HISTOGRAM_BINS: usize = 60;
pub const DEFAULT_CLUSTER_WINDOW: f64 = 0.15;

/// One eigenvalue with its right eigenoperator (unit Frobenius norm) and the
/// biorthonormal left eigenoperator, `Tr(left† right) = 1`.
#[derive(Debug, Clone)]
pub struct EigenMode {
    pub lambda: c64,
    pub right: CMat,
    pub left: CMat,
    /// `‖M v - lambda v‖` for the normalised right vector.
    pub residual: f64,
    /// Eigenvalue condition number `‖left‖ ‖right‖`; diverges at an
    /// exceptional point.
    pub defectivity_score: f64,
}

impl EigenMode {
    pub fn magnitude(&self) -> f64 {
        self.lambda.norm()
    }
}

/// Modes sorted by `|lambda|` descending (ties: real part, then imaginary
/// part, descending).
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub modes: Vec<EigenMode>,
    pub system_dim: usize,
    /// `1 / sigma_min` of the matrix of normalised right eigenvectors.
    pub basis_condition: f64,
}

pub fn compare_eigenvalues(a: &c64, b: &c64) -> Ordering {
    b.norm()
        .total_cmp(&a.norm())
        .then(b.re.total_cmp(&a.re))
        .then(b.im.total_cmp(&a.im))
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn eigenvalues(&self) -> Vec<c64> {
        self.modes.iter().map(|m| m.lambda).collect()
    }

    pub fn spectral_radius(&self) -> f64 {
        self.modes.iter().map(|m| m.magnitude()).fold(0.0, f64::max)
    }

    pub fn max_residual(&self) -> f64 {
        self.modes.iter().map(|m| m.residual).fold(0.0, f64::max)
    }

    pub fn max_defectivity(&self) -> f64 {
        self.modes.iter().map(|m| m.defectivity_score).fold(0.0, f64::max)
    }

    pub fn is_defective(&self) -> bool {
        !(self.max_defectivity() <= DEFECTIVITY_THRESHOLD)
    }

    /// Default realness tolerance, `1e-8` times the spectral radius.
    pub fn default_tol_im(&self) -> f64 {
        1e-8 * self.spectral_radius().max(f64::MIN_POSITIVE)
    }

    /// `max_{i,j} |Tr(left_i† right_j) - delta_ij|`.
    pub fn biorthonormality_error(&self) -> f64 {
        let mut worst = 0.0f64;
        for (i, a) in self.modes.iter().enumerate() {
            for (j, b) in self.modes.iter().enumerate() {
                let target = if i == j { 1.0 } else { 0.0 };
                let v = linalg::hs_inner(a.left.as_ref(), b.right.as_ref());
                worst = worst.max((v - c64::new(target, 0.0)).norm());
            }
        }
        worst
    }

    /// Largest distance from any eigenvalue to the nearest conjugate of
    /// another (or the same) eigenvalue.
    pub fn conjugate_pairing_distance(&self) -> f64 {
        let ev = self.eigenvalues();
        conjugate_pairing_distance(&ev)
    }

    /// Index of the mode closest to `lambda = 1`.
    pub fn unit_mode(&self) -> Option<usize> {
        (0..self.len()).min_by(|&a, &b| {
            let da = (self.modes[a].lambda - c64::new(1.0, 0.0)).norm();
            let db = (self.modes[b].lambda - c64::new(1.0, 0.0)).norm();
            da.total_cmp(&db)
        })
    }

    /// Hermitised, trace-normalised right eigenoperator of the mode nearest
    /// `lambda = 1`: the channel's fixed-point state.
    pub fn fixed_point_state(&self) -> Option<CMat> {
        let k = self.unit_mode()?;
        let r = &self.modes[k].right;
        let herm = Mat::from_fn(r.nrows(), r.ncols(), |i, j| (r[(i, j)] + r[(j, i)].conj()) * 0.5);
        let tr = linalg::trace(herm.as_ref());
        if tr.norm() < 1e-14 {
            return None;
        }
        Some(linalg::scale(herm.as_ref(), tr.inv()))
    }

    /// `sum_m lambda_m right_m Tr(left_m† .)` as a matrix on row-stacked
    /// vectors.
    pub fn reconstruct_superoperator(&self) -> CMat {
        let n = self.len();
        let mut m: CMat = Mat::zeros(n, n);
        for mode in &self.modes {
            let r = linalg::vectorize(mode.right.as_ref());
            let l = linalg::vectorize(mode.left.as_ref());
            for i in 0..n {
                let ri = mode.lambda * r[i];
                for j in 0..n {
                    m[(i, j)] += ri * l[j].conj();
                }
            }
        }
        m
    }
}

pub fn conjugate_pairing_distance(ev: &[c64]) -> f64 {
    ev.iter()
        .map(|a| ev.iter().map(|b| (a.conj() - b).norm()).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max)
}

/// Eigenvalues only, in spectrum order; cheaper than [`full_spectrum`].
pub fn eigenvalues(m: &SuperoperatorMatrix) -> Result<Vec<c64>> {
    matrix_eigenvalues(&m.matrix)
}

/// Eigenvalues of any square matrix, sorted like a [`Spectrum`].
pub fn matrix_eigenvalues(m: &CMat) -> Result<Vec<c64>> {
    check_finite_matrix(m)?;
    let mut ev = m.eigenvalues().map_err(|e| Error::EigenSolver(format!("{e:?}")))?;
    ev.sort_by(compare_eigenvalues);
    Ok(ev)
}

fn check_finite(m: &SuperoperatorMatrix) -> Result<()> {
    check_finite_matrix(&m.matrix)
}

fn check_finite_matrix(mat: &CMat) -> Result<()> {
    for j in 0..mat.ncols() {
        for i in 0..mat.nrows() {
            let z = mat[(i, j)];
            if !(z.re.is_finite() && z.im.is_finite()) {
                return Err(Error::InvalidArgument("superoperator has non-finite entries".into()));
            }
        }
    }
    Ok(())
}

pub fn full_spectrum(m: &SuperoperatorMatrix) -> Result<Spectrum> {
    check_finite(m)?;
    let n = m.dim();
    let d = m.system_dim;
    let evd = m.matrix.eigen().map_err(|e| Error::EigenSolver(format!("{e:?}")))?;
    let s = evd.S().column_vector();
    let u = evd.U();

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| compare_eigenvalues(&s[a], &s[b]).then(a.cmp(&b)));

    let mut v: CMat = Mat::zeros(n, n);
    let mut lambdas = Vec::with_capacity(n);
    for (dst, &src) in order.iter().enumerate() {
        let mut col = linalg::col_to_vec(u, src);
        let norm = linalg::vec_norm(&col);
        if !(norm > 0.0) {
            return Err(Error::EigenSolver("zero eigenvector".into()));
        }
        for z in &mut col {
            *z /= norm;
        }
        linalg::fix_phase(&mut col);
        for (i, z) in col.into_iter().enumerate() {
            v[(i, dst)] = z;
        }
        lambdas.push(s[src]);
    }

    let sv = v.singular_values().map_err(|e| Error::EigenSolver(format!("{e:?}")))?;
    let sigma_min = sv.iter().copied().fold(f64::INFINITY, f64::min);
    let basis_condition = if sigma_min > 0.0 { 1.0 / sigma_min } else { f64::INFINITY };
    let w = v.partial_piv_lu().inverse();

    let mv = &m.matrix * &v;
    let modes = (0..n)
        .map(|k| {
            let lambda = lambdas[k];
            let residual = (0..n)
                .map(|i| (mv[(i, k)] - lambda * v[(i, k)]).norm_sqr())
                .sum::<f64>()
                .sqrt();
            let left_vec: Vec<c64> = (0..n).map(|j| w[(k, j)].conj()).collect();
            let mut score = linalg::vec_norm(&left_vec);
            if !score.is_finite() {
                score = f64::INFINITY;
            }
            EigenMode {
                lambda,
                right: linalg::unvectorize(&linalg::col_to_vec(v.as_ref(), k), d),
                left: linalg::unvectorize(&left_vec, d),
                residual,
                defectivity_score: score,
            }
        })
        .collect();
    Ok(Spectrum { modes, system_dim: d, basis_condition })
}

/// `c_m = Tr(left_m† rho0)`.
pub fn decompose_state(spectrum: &Spectrum, rho0: &DenseOperator) -> Result<Vec<c64>> {
    if rho0.dim() != spectrum.system_dim {
        return Err(Error::DimensionMismatch { expected: spectrum.system_dim, found: rho0.dim() });
    }
    if spectrum.is_defective() {
        return Err(Error::Defective { score: spectrum.max_defectivity() });
    }
    Ok(spectrum
        .modes
        .iter()
        .map(|m| linalg::hs_inner(m.left.as_ref(), rho0.matrix()))
        .collect())
}

/// `sum_m lambda_m^n c_m right_m`.
pub fn evolve_by_modes(spectrum: &Spectrum, coefficients: &[c64], n_r: u32) -> CMat {
    let d = spectrum.system_dim;
    let mut out: CMat = Mat::zeros(d, d);
    for (mode, c) in spectrum.modes.iter().zip(coefficients) {
        let w = mode.lambda.powu(n_r) * c;
        if w == ZERO {
            continue;
        }
        out += linalg::scale(mode.right.as_ref(), w);
    }
    out
}

/// Realness classification of a spectrum.
#[derive(Debug, Clone, Default)]
pub struct RealClassification {
    pub real: Vec<usize>,
    /// `(upper, lower)` half-plane members of each conjugate pair.
    pub pairs: Vec<(usize, usize)>,
    pub anomalies: Vec<usize>,
}

/// Labels modes with `|Im lambda| <= tol_im` real and pairs the rest
/// greedily with their nearest conjugate partner. Unpaired complex modes
/// are returned as anomalies.
pub fn classify_real_report(spectrum: &Spectrum, tol_im: f64) -> RealClassification {
    let ev = spectrum.eigenvalues();
    let pair_tol = 1e-8 * spectrum.spectral_radius().max(1.0) + tol_im;
    let mut out = RealClassification::default();
    let mut upper = Vec::new();
    let mut lower = Vec::new();
    for (k, z) in ev.iter().enumerate() {
        if z.im.abs() <= tol_im {
            out.real.push(k);
        } else if z.im > 0.0 {
            upper.push(k);
        } else {
            lower.push(k);
        }
    }
    let mut used = vec![false; lower.len()];
    for &a in &upper {
        let target = ev[a].conj();
        let best = lower
            .iter()
            .enumerate()
            .filter(|(p, _)| !used[*p])
            .min_by(|x, y| (ev[*x.1] - target).norm().total_cmp(&(ev[*y.1] - target).norm()));
        match best {
            Some((p, &b)) if (ev[b] - target).norm() <= pair_tol => {
                used[p] = true;
                out.pairs.push((a, b));
            }
            _ => out.anomalies.push(a),
        }
    }
    out.anomalies.extend(lower.iter().enumerate().filter(|(p, _)| !used[*p]).map(|(_, &b)| b));
    out.anomalies.sort_unstable();
    out
}

pub fn classify_real(spectrum: &Spectrum, tol_im: f64) -> Result<RealClassification> {
    let report = classify_real_report(spectrum, tol_im);
    if !report.anomalies.is_empty() {
        return Err(Error::UnpairedComplex { count: report.anomalies.len() });
    }
    Ok(report)
}

/// Magnitude law of the uniform disk of radius `1/sqrt(N_b)`:
/// `p(x) = 2x / r^2` on `[0, r]`.
#[derive(Debug, Clone, Copy)]
pub struct TriangularLaw {
    pub radius: f64,
}

impl TriangularLaw {
    pub fn pdf(&self, x: f64) -> f64 {
        if (0.0..=self.radius).contains(&x) {
            2.0 * x / (self.radius * self.radius)
        } else {
            0.0
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else if x >= self.radius {
            1.0
        } else {
            (x / self.radius).powi(2)
        }
    }
}

/// `bath_dim` is `N_b`, the number of bath basis states.
pub fn triangular_reference(bath_dim: usize) -> TriangularLaw {
    TriangularLaw { radius: 1.0 / (bath_dim as f64).sqrt() }
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectralStats {
    pub bin_edges: Vec<f64>,
    /// Probability per unit `|lambda|`.
    pub densities: Vec<f64>,
    pub real_fraction: f64,
    pub threshold: f64,
    /// Real modes with `|lambda|` above the threshold.
    pub outliers: Vec<usize>,
    /// Fraction of all modes with `|lambda|` above the threshold.
    pub above_threshold_fraction: f64,
    /// Kolmogorov-Smirnov distance of the non-outlier magnitudes to the
    /// triangular law.
    pub ks_distance: f64,
    pub minus_one_cluster: Vec<usize>,
}

impl SpectralStats {
    /// Probability mass carried by the `k` heaviest bins.
    pub fn top_bins_mass(&self, k: usize) -> f64 {
        let mut mass: Vec<f64> = self
            .densities
            .iter()
            .zip(self.bin_edges.windows(2))
            .map(|(d, e)| d * (e[1] - e[0]))
            .collect();
        mass.sort_by(|a, b| b.total_cmp(a));
        mass.iter().take(k).sum()
    }

    pub fn total_mass(&self) -> f64 {
        self.top_bins_mass(self.densities.len())
    }
}

pub fn ks_distance(sample: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    if sample.is_empty() {
        return 0.0;
    }
    let mut xs = sample.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            ((i + 1) as f64 / n - f).max(f - i as f64 / n)
        })
        .fold(0.0, f64::max)
}

pub fn magnitude_histogram(spectrum: &Spectrum, bins: usize, bath_dim: usize) -> Result<SpectralStats> {
    if bins < 10 {
        return Err(Error::InvalidArgument(format!("histogram needs at least 10 bins, got {bins}")));
    }
    if spectrum.is_empty() {
        return Err(Error::InvalidArgument("empty spectrum".into()));
    }
    let law = triangular_reference(bath_dim);
    let tol_im = spectrum.default_tol_im();
    let mags: Vec<f64> = spectrum.modes.iter().map(|m| m.magnitude()).collect();
    let top = mags.iter().copied().fold(0.0, f64::max);
    let hi = if top > 0.0 { top } else { 1.0 };
    let width = hi / bins as f64;
    let mut counts = vec![0usize; bins];
    for &x in &mags {
        let b = ((x / width) as usize).min(bins - 1);
        counts[b] += 1;
    }
    let n = mags.len() as f64;
    let bin_edges: Vec<f64> = (0..=bins).map(|k| k as f64 * width).collect();
    let densities: Vec<f64> = counts.iter().map(|&c| c as f64 / (n * width)).collect();

    let outliers: Vec<usize> = find_outliers(spectrum, bath_dim, tol_im)
        .into_iter()
        .filter(|o| o.is_real)
        .map(|o| o.index)
        .collect();
    let bulk: Vec<f64> = mags
        .iter()
        .enumerate()
        .filter(|(k, _)| !outliers.contains(k))
        .map(|(_, &x)| x)
        .collect();
    let real_fraction =
        spectrum.modes.iter().filter(|m| m.lambda.im.abs() <= tol_im).count() as f64 / n;
    let above = mags.iter().filter(|&&x| x > law.radius).count() as f64 / n;
    let cluster = minus_one_cluster(spectrum, DEFAULT_CLUSTER_WINDOW)?
        .into_iter()
        .map(|c| c.index)
        .collect();
    Ok(SpectralStats {
        bin_edges,
        densities,
        real_fraction,
        threshold: law.radius,
        outliers,
        above_threshold_fraction: above,
        ks_distance: ks_distance(&bulk, |x| law.cdf(x)),
        minus_one_cluster: cluster,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Outlier {
    pub index: usize,
    pub lambda: c64,
    pub is_real: bool,
}

/// Modes with `|lambda| > 1/sqrt(N_b)`.
pub fn find_outliers(spectrum: &Spectrum, bath_dim: usize, tol_im: f64) -> Vec<Outlier> {
    let r = triangular_reference(bath_dim).radius;
    spectrum
        .modes
        .iter()
        .enumerate()
        .filter(|(_, m)| m.magnitude() > r)
        .map(|(index, m)| Outlier { index, lambda: m.lambda, is_real: m.lambda.im.abs() <= tol_im })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClusterMode {
    pub index: usize,
    pub lambda: c64,
    pub magnitude: f64,
    pub is_real: bool,
}

/// Modes within `window` of `lambda = -1` (period-doubling candidates).
pub fn minus_one_cluster(spectrum: &Spectrum, window: f64) -> Result<Vec<ClusterMode>> {
    if !(window > 0.0 && window < 0.5) {
        return Err(Error::InvalidArgument(format!("cluster window {window} outside (0, 0.5)")));
    }
    let tol_im = spectrum.default_tol_im();
    Ok(spectrum
        .modes
        .iter()
        .enumerate()
        .filter(|(_, m)| (m.lambda + c64::new(1.0, 0.0)).norm() < window)
        .map(|(index, m)| ClusterMode {
            index,
            lambda: m.lambda,
            magnitude: m.magnitude(),
            is_real: m.lambda.im.abs() <= tol_im,
        })
        .collect())
}

#[derive(Debug, Serialize)]
struct SpectrumRow {
    index: usize,
    re: f64,
    im: f64,
    abs: f64,
    residual: f64,
    is_real: bool,
    is_outlier: bool,
}

/// `index,re,im,abs,residual,is_real,is_outlier`.
pub fn write_spectrum_csv<W: Write>(spectrum: &Spectrum, bath_dim: usize, out: W) -> Result<()> {
    let tol_im = spectrum.default_tol_im();
    let r = triangular_reference(bath_dim).radius;
    let mut w = csv::Writer::from_writer(out);
    for (index, m) in spectrum.modes.iter().enumerate() {
        w.serialize(SpectrumRow {
            index,
            re: m.lambda.re,
            im: m.lambda.im,
            abs: m.magnitude(),
            residual: m.residual,
            is_real: m.lambda.im.abs() <= tol_im,
            is_outlier: m.magnitude() > r,
        })?;
    }
    w.flush()?;
    Ok(())
}
