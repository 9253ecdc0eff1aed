//! Parameter sweeps of the channel spectrum, eigenvalue band tracking,
//! exceptional-point localisation and the Jordan-chain expansion used at
//! (near-)defective points.

use std::io::Write;

use faer::linalg::solvers::DenseSolveCore;
use faer::{c64, Mat, MatRef};
use pathfinding::prelude::{kuhn_munkres_min, Matrix};
use rayon::prelude::*;
use serde::Serialize;

use crate::channel::{reset_channel, superoperator_matrix, SuperoperatorMatrix};
use crate::error::{Error, Result};
use crate::hamiltonians::Model;
use crate::linalg::{self, CMat, ZERO};
use crate::spectra::{self, compare_eigenvalues};
use crate::spin_ops::ChainLayout;

/// Anything whose spectrum can be evaluated at a scalar parameter value.
pub trait ParametricFamily: Sync {
    fn parameter(&self) -> &str;
    fn eigenvalues_at(&self, value: f64) -> Result<Vec<c64>>;
}

/// A closure-defined matrix family, e.g. a hand-built 2x2 EP model.
pub struct MatrixFamily<F> {
    name: String,
    build: F,
}

impl<F: Fn(f64) -> CMat + Sync> MatrixFamily<F> {
    pub fn new(name: impl Into<String>, build: F) -> Self {
        Self { name: name.into(), build }
    }

    pub fn matrix_at(&self, value: f64) -> CMat {
        (self.build)(value)
    }
}

impl<F: Fn(f64) -> CMat + Sync> ParametricFamily for MatrixFamily<F> {
    fn parameter(&self) -> &str {
        &self.name
    }

    fn eigenvalues_at(&self, value: f64) -> Result<Vec<c64>> {
        spectra::matrix_eigenvalues(&(self.build)(value))
    }
}

/// Reset channels of one model along one parameter.
#[derive(Debug, Clone)]
pub struct SweepGrid {
    parameter: String,
    values: Vec<f64>,
    base: Model,
    layout: ChainLayout,
    t: f64,
}

impl SweepGrid {
    pub fn new(
        parameter: impl Into<String>,
        values: Vec<f64>,
        base: Model,
        layout: ChainLayout,
        t: f64,
    ) -> Result<Self> {
        let parameter = parameter.into();
        if values.len() < 3 {
            return Err(Error::InsufficientPoints { needed: 3, found: values.len() });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("sweep values must be finite".into()));
        }
        let up = values.windows(2).all(|w| w[1] > w[0]);
        let down = values.windows(2).all(|w| w[1] < w[0]);
        if !(up || down) {
            return Err(Error::InvalidArgument("sweep values must be strictly monotone".into()));
        }
        base.param(&parameter)?;
        if !t.is_finite() {
            return Err(Error::InvalidArgument(format!("evolution time {t} is not finite")));
        }
        Ok(Self { parameter, values, base, layout, t })
    }

    pub fn linspace(
        parameter: impl Into<String>,
        min: f64,
        max: f64,
        points: usize,
        base: Model,
        layout: ChainLayout,
        t: f64,
    ) -> Result<Self> {
        let values = linspace(min, max, points);
        Self::new(parameter, values, base, layout, t)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn base(&self) -> &Model {
        &self.base
    }

    pub fn layout(&self) -> ChainLayout {
        self.layout
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn model_at(&self, value: f64) -> Result<Model> {
        self.base.with_param(&self.parameter, value)
    }

    pub fn superoperator_at(&self, value: f64) -> Result<SuperoperatorMatrix> {
        let k = reset_channel(&self.model_at(value)?, self.layout, self.t)?;
        Ok(superoperator_matrix(&k))
    }
}

impl ParametricFamily for SweepGrid {
    fn parameter(&self) -> &str {
        &self.parameter
    }

    fn eigenvalues_at(&self, value: f64) -> Result<Vec<c64>> {
        spectra::eigenvalues(&self.superoperator_at(value)?)
    }
}

pub fn linspace(min: f64, max: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![min],
        _ => (0..points).map(|k| min + (max - min) * k as f64 / (points - 1) as f64).collect(),
    }
}

pub fn logspace(lo_exp: f64, hi_exp: f64, points: usize) -> Vec<f64> {
    linspace(lo_exp, hi_exp, points).into_iter().map(|e| 10f64.powf(e)).collect()
}

/// Eigenvalues at one grid point.
#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub index: usize,
    pub value: f64,
    pub eigenvalues: Vec<c64>,
}

#[derive(Debug, Clone)]
pub struct SweepFailure {
    pub index: usize,
    pub value: f64,
    pub message: String,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub parameter: String,
    pub points: Vec<SweepPoint>,
    pub failures: Vec<SweepFailure>,
}

pub fn sweep_spectrum(grid: &SweepGrid) -> SweepResult {
    sweep_family(grid, grid.values())
}

/// Evaluates every point independently (in parallel); failures are recorded
/// and the remaining points kept, in grid order.
pub fn sweep_family<F: ParametricFamily>(family: &F, values: &[f64]) -> SweepResult {
    let results: Vec<(usize, f64, Result<Vec<c64>>)> = values
        .par_iter()
        .enumerate()
        .map(|(index, &value)| (index, value, family.eigenvalues_at(value)))
        .collect();
    let mut points = Vec::new();
    let mut failures = Vec::new();
    for (index, value, r) in results {
        match r {
            Ok(eigenvalues) => points.push(SweepPoint { index, value, eigenvalues }),
            Err(e) => {
                log::warn!("sweep point {index} ({value}) failed: {e}");
                failures.push(SweepFailure { index, value, message: e.to_string() });
            }
        }
    }
    SweepResult { parameter: family.parameter().to_string(), points, failures }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Matching {
    /// Nearest neighbour, bands processed in descending `|lambda|`.
    #[default]
    Greedy,
    /// Minimal total distance (Hungarian algorithm).
    Optimal,
}

#[derive(Debug, Clone, Copy)]
pub struct TrackConfig {
    pub matching: Matching,
    /// Track every band for EP localisation instead of the top decile.
    pub all_bands: bool,
    /// A step is flagged as a possible crossing when the matched distance
    /// exceeds this fraction of the distance to the runner-up candidate.
    pub crossing_ratio: f64,
}

impl Default for TrackConfig {
    fn default() -> Self {
        Self { matching: Matching::Greedy, all_bands: false, crossing_ratio: 0.5 }
    }
}

/// `bands[b][p]` is the eigenvalue of band `b` at point `p`. Bands are
/// labelled by descending real part at the first point; bands `0..selected`
/// are the ones used for EP localisation.
#[derive(Debug, Clone)]
pub struct BandTrack {
    pub parameter: String,
    pub values: Vec<f64>,
    pub bands: Vec<Vec<c64>>,
    /// `distances[b][s]`: matching distance of band `b` from point `s` to `s+1`.
    pub distances: Vec<Vec<f64>>,
    pub crossings: Vec<Vec<bool>>,
    pub selected: usize,
}

impl BandTrack {
    pub fn band_count(&self) -> usize {
        self.bands.len()
    }

    pub fn point_count(&self) -> usize {
        self.values.len()
    }

    pub fn eigenvalues_at(&self, p: usize) -> Vec<c64> {
        self.bands.iter().map(|b| b[p]).collect()
    }

    pub fn max_step_distance(&self) -> f64 {
        self.distances.iter().flatten().copied().fold(0.0, f64::max)
    }

    pub fn crossing_count(&self) -> usize {
        self.crossings.iter().flatten().filter(|&&c| c).count()
    }
}

fn compare_by_re(a: &c64, b: &c64) -> std::cmp::Ordering {
    b.re.total_cmp(&a.re).then(b.im.total_cmp(&a.im))
}

pub fn track_bands(sweep: &SweepResult, config: &TrackConfig) -> Result<BandTrack> {
    let pts = &sweep.points;
    if pts.len() < 2 {
        return Err(Error::InsufficientPoints { needed: 2, found: pts.len() });
    }
    let n = pts[0].eigenvalues.len();
    if let Some(p) = pts.iter().find(|p| p.eigenvalues.len() != n) {
        return Err(Error::DimensionMismatch { expected: n, found: p.eigenvalues.len() });
    }
    let mut start = pts[0].eigenvalues.clone();
    start.sort_by(compare_by_re);
    let mut bands: Vec<Vec<c64>> = start.iter().map(|&z| vec![z]).collect();
    let mut distances = vec![Vec::with_capacity(pts.len() - 1); n];
    let mut crossings = vec![Vec::with_capacity(pts.len() - 1); n];

    for p in &pts[1..] {
        let prev: Vec<c64> = bands.iter().map(|b| *b.last().unwrap()).collect();
        let next = &p.eigenvalues;
        let assignment = match config.matching {
            Matching::Greedy => greedy_assignment(&prev, next),
            Matching::Optimal => optimal_assignment(&prev, next),
        };
        for (b, &target) in assignment.iter().enumerate() {
            let d = (next[target] - prev[b]).norm();
            let runner_up = next
                .iter()
                .enumerate()
                .filter(|&(k, _)| k != target)
                .map(|(_, z)| (z - prev[b]).norm())
                .fold(f64::INFINITY, f64::min);
            bands[b].push(next[target]);
            distances[b].push(d);
            crossings[b].push(d > 1e-12 && d > config.crossing_ratio * runner_up);
        }
    }
    let selected = if config.all_bands { n } else { n.div_ceil(10).max(2).min(n) };
    Ok(BandTrack {
        parameter: sweep.parameter.clone(),
        values: pts.iter().map(|p| p.value).collect(),
        bands,
        distances,
        crossings,
        selected,
    })
}

/// `result[b]` is the index in `next` assigned to `prev[b]`.
fn greedy_assignment(prev: &[c64], next: &[c64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..prev.len()).collect();
    order.sort_by(|&a, &b| compare_eigenvalues(&prev[a], &prev[b]).then(a.cmp(&b)));
    let mut used = vec![false; next.len()];
    let mut out = vec![0; prev.len()];
    for b in order {
        let mut best = usize::MAX;
        let mut best_d = f64::INFINITY;
        for (k, z) in next.iter().enumerate() {
            if used[k] {
                continue;
            }
            let d = (z - prev[b]).norm();
            if d < best_d {
                best = k;
                best_d = d;
            }
        }
        used[best] = true;
        out[b] = best;
    }
    out
}

fn optimal_assignment(prev: &[c64], next: &[c64]) -> Vec<usize> {
    let scale = 1e12;
    let weights = Matrix::from_fn(prev.len(), next.len(), |(i, j)| {
        ((next[j] - prev[i]).norm() * scale).round() as i64
    });
    kuhn_munkres_min(&weights).1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ComplexCount {
    pub count: usize,
    /// Odd counts contradict conjugate closure and signal numerical trouble.
    pub odd: bool,
}

pub fn count_complex(eigenvalues: &[c64], tol_im: f64) -> ComplexCount {
    let count = eigenvalues.iter().filter(|z| z.im.abs() > tol_im).count();
    ComplexCount { count, odd: count % 2 == 1 }
}

/// `rel * max|lambda|`, the realness tolerance used along sweeps.
pub fn sweep_tol_im(eigenvalues: &[c64], rel: f64) -> f64 {
    rel * eigenvalues.iter().map(|z| z.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE)
}

#[derive(Debug, Clone, Copy)]
pub struct BisectionConfig {
    pub resolution: f64,
    pub max_iter: usize,
    pub tol_im_rel: f64,
}

impl Default for BisectionConfig {
    fn default() -> Self {
        Self { resolution: 1e-4, max_iter: 200, tol_im_rel: 1e-6 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EpRecord {
    pub j_star: f64,
    /// Last parameter value at which the pair was real.
    pub real_side: f64,
    /// First parameter value at which the pair was complex.
    pub complex_side: f64,
    pub bands: (usize, usize),
    /// The pair at `real_side`.
    #[serde(skip)]
    pub real_pair: (c64, c64),
    #[serde(skip)]
    pub lambda_star: c64,
    pub exponent: Option<f64>,
    pub fit_r2: Option<f64>,
    pub converged: bool,
    /// Grid step `s` (between points `s` and `s+1`) where the pair split.
    pub grid_step: usize,
}

impl EpRecord {
    pub fn bracket_width(&self) -> f64 {
        (self.complex_side - self.real_side).abs()
    }

    /// `+1` when the pair is complex above `j_star`, `-1` otherwise.
    pub fn direction(&self) -> f64 {
        (self.complex_side - self.real_side).signum()
    }
}

/// Brackets every pair of tracked bands that leaves the real axis between
/// two grid points and refines it by bisection.
pub fn locate_eps<F: ParametricFamily>(
    family: &F,
    track: &BandTrack,
    config: &BisectionConfig,
) -> Result<Vec<EpRecord>> {
    let candidates = ep_candidates(track, config.tol_im_rel);
    candidates
        .into_par_iter()
        .map(|(step, a, b)| {
            let record = EpRecord {
                j_star: 0.5 * (track.values[step] + track.values[step + 1]),
                real_side: track.values[step],
                complex_side: track.values[step + 1],
                bands: (a, b),
                real_pair: (track.bands[a][step], track.bands[b][step]),
                lambda_star: 0.5 * (track.bands[a][step] + track.bands[b][step]),
                exponent: None,
                fit_r2: None,
                converged: false,
                grid_step: step,
            };
            refine_ep(family, record, config)
        })
        .collect()
}

/// `(step, band_a, band_b)` for every real-to-complex transition among the
/// selected bands.
pub fn ep_candidates(track: &BandTrack, tol_im_rel: f64) -> Vec<(usize, usize, usize)> {
    let mut out = Vec::new();
    for s in 0..track.point_count().saturating_sub(1) {
        let now = track.eigenvalues_at(s);
        let next = track.eigenvalues_at(s + 1);
        let tol_now = sweep_tol_im(&now, tol_im_rel);
        let tol_next = sweep_tol_im(&next, tol_im_rel);
        let splits = |b: usize| now[b].im.abs() <= tol_now && next[b].im.abs() > tol_next;
        let mut seen: Vec<(usize, usize)> = Vec::new();
        for a in 0..track.selected {
            if !splits(a) {
                continue;
            }
            let target = next[a].conj();
            let partner = (0..track.band_count())
                .filter(|&b| b != a && splits(b))
                .min_by(|&x, &y| (next[x] - target).norm().total_cmp(&(next[y] - target).norm()));
            match partner {
                Some(b) => {
                    let key = (a.min(b), a.max(b));
                    if !seen.contains(&key) {
                        seen.push(key);
                        out.push((s, key.0, key.1));
                    }
                }
                None => log::warn!("band {a} turned complex at step {s} without a partner"),
            }
        }
    }
    out
}

fn nearest_pair(eigs: &[c64], a: c64, b: c64) -> (usize, usize) {
    let nearest = |target: c64, skip: Option<usize>| {
        (0..eigs.len())
            .filter(|&k| Some(k) != skip)
            .min_by(|&x, &y| (eigs[x] - target).norm().total_cmp(&(eigs[y] - target).norm()))
            .unwrap_or(0)
    };
    let ia = nearest(a, None);
    let ib = nearest(b, Some(ia));
    (ia, ib)
}

/// Continues the bisection of `record` until its bracket is below
/// `config.resolution` or `max_iter` evaluations were spent.
pub fn refine_ep<F: ParametricFamily>(
    family: &F,
    mut record: EpRecord,
    config: &BisectionConfig,
) -> Result<EpRecord> {
    let (mut lo, mut hi) = (record.real_side, record.complex_side);
    let (mut la, mut lb) = record.real_pair;
    let mut iter = 0;
    while (hi - lo).abs() > config.resolution && iter < config.max_iter {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        let eigs = family.eigenvalues_at(mid)?;
        let tol = sweep_tol_im(&eigs, config.tol_im_rel);
        let (ia, ib) = nearest_pair(&eigs, la, lb);
        if eigs[ia].im.abs() > tol && eigs[ib].im.abs() > tol {
            hi = mid;
        } else {
            lo = mid;
            la = eigs[ia];
            lb = eigs[ib];
        }
        iter += 1;
    }
    record.real_side = lo;
    record.complex_side = hi;
    record.real_pair = (la, lb);
    record.lambda_star = 0.5 * (la + lb);
    record.j_star = 0.5 * (lo + hi);
    record.converged = (hi - lo).abs() <= config.resolution;
    if !record.converged {
        log::warn!(
            "EP bisection stopped with bracket {:.3e} after {iter} steps",
            (hi - lo).abs()
        );
    }
    Ok(record)
}

/// Offsets from `j_star` on the complex side used for the local fit.
#[derive(Debug, Clone)]
pub struct EpFitConfig {
    pub refine: BisectionConfig,
    pub deltas: Vec<f64>,
}

impl Default for EpFitConfig {
    fn default() -> Self {
        Self {
            refine: BisectionConfig { resolution: 1e-12, ..BisectionConfig::default() },
            deltas: logspace(-9.0, -6.0, 8),
        }
    }
}

/// Spectra at `j_star + direction * delta` for each offset, tracked as bands.
pub fn local_track<F: ParametricFamily>(family: &F, ep: &EpRecord, deltas: &[f64]) -> Result<BandTrack> {
    let values: Vec<f64> = deltas.iter().map(|d| ep.j_star + ep.direction() * d).collect();
    let sweep = sweep_family(family, &values);
    if let Some(f) = sweep.failures.first() {
        return Err(Error::EigenSolver(f.message.clone()));
    }
    track_bands(&sweep, &TrackConfig { all_bands: true, ..TrackConfig::default() })
}

#[derive(Debug, Clone, Serialize)]
pub struct ExponentFit {
    pub exponent: f64,
    pub intercept: f64,
    pub r2: f64,
    /// `(|J - j_star|, |Im lambda|)` pairs used in the fit.
    pub points: Vec<(f64, f64)>,
}

/// Log-log slope of the pair's imaginary part against `|J - j_star|` over
/// the points of `track` on the complex side of the EP.
pub fn fit_sqrt_exponent(track: &BandTrack, ep: &EpRecord) -> Result<ExponentFit> {
    let dir = ep.direction();
    let post: Vec<usize> =
        (0..track.point_count()).filter(|&p| (track.values[p] - ep.j_star) * dir > 0.0).collect();
    if post.len() < 5 {
        return Err(Error::InsufficientPoints { needed: 5, found: post.len() });
    }
    let first = track.eigenvalues_at(post[0]);
    let (a, b) = nearest_pair(&first, ep.lambda_star, ep.lambda_star);
    let points: Vec<(f64, f64)> = post
        .iter()
        .map(|&p| {
            let split = 0.5 * (track.bands[a][p].im - track.bands[b][p].im).abs();
            ((track.values[p] - ep.j_star).abs(), split)
        })
        .filter(|&(d, s)| d > 0.0 && s > 0.0)
        .collect();
    if points.len() < 5 {
        return Err(Error::InsufficientPoints { needed: 5, found: points.len() });
    }
    let x: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let y: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let (exponent, intercept, r2) = linalg::linear_fit(&x, &y);
    Ok(ExponentFit { exponent, intercept, r2, points })
}

/// Refines `ep` to the fit resolution, tracks the pair locally and stores
/// the fitted exponent on the record.
pub fn fit_ep<F: ParametricFamily>(
    family: &F,
    ep: &EpRecord,
    config: &EpFitConfig,
) -> Result<(EpRecord, ExponentFit)> {
    let mut ep = refine_ep(family, ep.clone(), &config.refine)?;
    let track = local_track(family, &ep, &config.deltas)?;
    let fit = fit_sqrt_exponent(&track, &ep)?;
    ep.exponent = Some(fit.exponent);
    ep.fit_r2 = Some(fit.r2);
    Ok((ep, fit))
}

/// Generalised eigenvectors `rho^(0..order)` of a matrix at `lambda`, with
/// `(M - lambda) rho^(d) = rho^(d-1)`, and the matching dual vectors.
#[derive(Debug, Clone)]
pub struct JordanChain {
    pub lambda: c64,
    pub order: usize,
    pub right: Vec<Vec<c64>>,
    /// `left[d]` pairs with `right[d]`: `<left[d], right[e]> = delta_de`.
    pub left: Vec<Vec<c64>>,
    /// `‖(M - lambda) rho^(d) - rho^(d-1)‖`.
    pub residuals: Vec<f64>,
}

/// Largest chain residual accepted, relative to `max(1, ‖M‖_F)`.
pub const JORDAN_RESIDUAL_TOL: f64 = 1e-4;

struct ShiftedSvd {
    u: CMat,
    s: Vec<f64>,
    v: CMat,
    null_dim: usize,
}

impl ShiftedSvd {
    fn new(a: MatRef<'_, c64>) -> Result<Self> {
        let svd = a.svd().map_err(|e| Error::EigenSolver(format!("{e:?}")))?;
        let s: Vec<f64> = (0..a.ncols()).map(|k| svd.S()[k].re).collect();
        let smax = s.iter().copied().fold(0.0, f64::max);
        let null_dim = s.iter().filter(|&&x| x <= 1e-10 * smax).count().max(1);
        Ok(Self { u: svd.U().to_owned(), s, v: svd.V().to_owned(), null_dim })
    }

    /// Right singular vector of the smallest singular value.
    fn null_vector(&self) -> Vec<c64> {
        linalg::col_to_vec(self.v.as_ref(), self.s.len() - 1)
    }

    /// Minimum-norm least-squares solution with the null directions dropped.
    fn pinv_solve(&self, b: &[c64]) -> Vec<c64> {
        let n = self.s.len();
        let keep = n - self.null_dim;
        let mut x = vec![ZERO; self.v.nrows()];
        for k in 0..keep {
            let coeff: c64 = (0..self.u.nrows()).map(|i| self.u[(i, k)].conj() * b[i]).sum::<c64>() / self.s[k];
            for (i, xi) in x.iter_mut().enumerate() {
                *xi += self.v[(i, k)] * coeff;
            }
        }
        x
    }
}

fn shifted(m: MatRef<'_, c64>, lambda: c64) -> CMat {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| if i == j { m[(i, j)] - lambda } else { m[(i, j)] })
}

pub fn jordan_chain(m: MatRef<'_, c64>, lambda: c64, order: usize) -> Result<JordanChain> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch { expected: m.nrows(), found: m.ncols() });
    }
    if order == 0 || order > m.nrows() {
        return Err(Error::InvalidArgument(format!("chain order {order} outside 1..={}", m.nrows())));
    }
    let a = shifted(m, lambda);
    let scale = linalg::fro(m).max(1.0);
    let svd = ShiftedSvd::new(a.as_ref())?;

    let mut right = vec![svd.null_vector()];
    let mut residuals = vec![vec_norm_of(&linalg::matvec(a.as_ref(), &right[0]))];
    for d in 1..order {
        let x = svd.pinv_solve(&right[d - 1]);
        let ax = linalg::matvec(a.as_ref(), &x);
        let r: Vec<c64> = ax.iter().zip(&right[d - 1]).map(|(p, q)| p - q).collect();
        residuals.push(vec_norm_of(&r));
        right.push(x);
    }
    let worst = residuals.iter().copied().fold(0.0, f64::max);
    if !(worst <= JORDAN_RESIDUAL_TOL * scale) {
        return Err(Error::JordanOrder { order, residual: worst });
    }

    let ah = a.adjoint().to_owned();
    let svd_h = ShiftedSvd::new(ah.as_ref())?;
    // adjoint chain runs the other way: top dual vector is the left null vector
    let mut dual = vec![svd_h.null_vector()];
    for d in 1..order {
        let x = svd_h.pinv_solve(&dual[d - 1]);
        dual.push(x);
    }
    dual.reverse();
    let g = Mat::from_fn(order, order, |i, j| {
        dual[i].iter().zip(&right[j]).map(|(l, r)| l.conj() * r).sum::<c64>()
    });
    let g_inv = g.partial_piv_lu().inverse();
    // left = dual * g^{-dagger}
    let left = (0..order)
        .map(|j| {
            (0..m.nrows())
                .map(|i| (0..order).map(|k| dual[k][i] * g_inv[(j, k)].conj()).sum())
                .collect()
        })
        .collect();
    Ok(JordanChain { lambda, order, right, left, residuals })
}

fn vec_norm_of(v: &[c64]) -> f64 {
    linalg::vec_norm(v)
}

/// A complete basis of generalised eigenvectors: one chain per eigenvalue
/// (order 1 for ordinary modes).
#[derive(Debug, Clone)]
pub struct GeneralizedBasis {
    pub chains: Vec<JordanChain>,
    /// Columns are the chain vectors in chain order.
    pub matrix: CMat,
    pub dual: CMat,
}

impl GeneralizedBasis {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn new(chains: Vec<JordanChain>) -> Result<Self> {
        let n = chains.first().map_or(0, |c| c.right[0].len());
        let total: usize = chains.iter().map(|c| c.order).sum();
        if total != n {
            return Err(Error::IncompleteBasis(format!("{total} chain vectors for dimension {n}")));
        }
        let cols: Vec<&Vec<c64>> = chains.iter().flat_map(|c| c.right.iter()).collect();
        let matrix = Mat::from_fn(n, n, |i, j| cols[j][i]);
        let sv = matrix.singular_values().map_err(|e| Error::EigenSolver(format!("{e:?}")))?;
        let smax = sv.iter().copied().fold(0.0, f64::max);
        let smin = sv.iter().copied().fold(f64::INFINITY, f64::min);
        if !(smin > 1e-13 * smax) {
            return Err(Error::IncompleteBasis(format!(
                "generalised basis is singular (sigma ratio {:.3e})",
                smin / smax
            )));
        }
        let dual = matrix.partial_piv_lu().inverse();
        Ok(Self { chains, matrix, dual })
    }

    /// Eigendecomposition of `m` with each `(lambda, order)` cluster of
    /// `order` eigenvalues nearest `lambda` replaced by a Jordan chain at
    /// their mean.
    pub fn from_matrix(m: MatRef<'_, c64>, defective: &[(c64, usize)]) -> Result<Self> {
        let n = m.nrows();
        let evd = m.eigen().map_err(|e| Error::EigenSolver(format!("{e:?}")))?;
        let s = evd.S().column_vector();
        let u = evd.U();
        let mut taken = vec![false; n];
        let mut chains = Vec::new();
        for &(target, order) in defective {
            let mut idx: Vec<usize> = (0..n).filter(|&k| !taken[k]).collect();
            idx.sort_by(|&a, &b| (s[a] - target).norm().total_cmp(&(s[b] - target).norm()));
            idx.truncate(order);
            if idx.len() < order {
                return Err(Error::IncompleteBasis("not enough eigenvalues for the chain".into()));
            }
            let mean = idx.iter().map(|&k| s[k]).sum::<c64>() / order as f64;
            for &k in &idx {
                taken[k] = true;
            }
            chains.push(jordan_chain(m, mean, order)?);
        }
        let mut ordinary: Vec<usize> = (0..n).filter(|&k| !taken[k]).collect();
        ordinary.sort_by(|&a, &b| compare_eigenvalues(&s[a], &s[b]).then(a.cmp(&b)));
        for k in ordinary {
            let mut v = linalg::col_to_vec(u, k);
            let norm = linalg::vec_norm(&v);
            for z in &mut v {
                *z /= norm;
            }
            linalg::fix_phase(&mut v);
            chains.push(JordanChain {
                lambda: s[k],
                order: 1,
                residuals: vec![vec_norm_of(&residual_of(m, s[k], &v))],
                right: vec![v],
                left: Vec::new(),
            });
        }
        let mut basis = Self::new(chains)?;
        basis.fill_left();
        Ok(basis)
    }

    fn fill_left(&mut self) {
        let mut col = 0;
        for chain in &mut self.chains {
            chain.left = (0..chain.order)
                .map(|d| (0..self.dual.ncols()).map(|j| self.dual[(col + d, j)].conj()).collect())
                .collect();
            col += chain.order;
        }
    }

    /// `c^(d)` per chain: the coordinates of `v` in the generalised basis.
    pub fn coefficients(&self, v: &[c64]) -> Result<Vec<Vec<c64>>> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: v.len() });
        }
        let flat = linalg::matvec(self.dual.as_ref(), v);
        let mut out = Vec::with_capacity(self.chains.len());
        let mut col = 0;
        for chain in &self.chains {
            out.push(flat[col..col + chain.order].to_vec());
            col += chain.order;
        }
        Ok(out)
    }
}

fn residual_of(m: MatRef<'_, c64>, lambda: c64, v: &[c64]) -> Vec<c64> {
    linalg::matvec(m, v).iter().zip(v).map(|(a, b)| a - lambda * b).collect()
}

fn binomial(n: u64, k: u64) -> f64 {
    if k > n {
        return 0.0;
    }
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `M^n v = sum_chains sum_d sum_k C(n,k) lambda^(n-k) c^(d+k) rho^(d)`.
pub fn iterate_jordan(basis: &GeneralizedBasis, coefficients: &[Vec<c64>], n_r: u32) -> Result<Vec<c64>> {
    if coefficients.len() != basis.chains.len() {
        return Err(Error::IncompleteBasis(format!(
            "{} coefficient blocks for {} chains",
            coefficients.len(),
            basis.chains.len()
        )));
    }
    let n = basis.dim();
    let mut out = vec![ZERO; n];
    for (chain, c) in basis.chains.iter().zip(coefficients) {
        if c.len() != chain.order {
            return Err(Error::IncompleteBasis("coefficient block does not match chain order".into()));
        }
        for d in 0..chain.order {
            let mut w = ZERO;
            for k in 0..chain.order - d {
                if k as u32 > n_r {
                    break;
                }
                w += chain.lambda.powu(n_r - k as u32) * c[d + k] * binomial(n_r as u64, k as u64);
            }
            if w == ZERO {
                continue;
            }
            for (o, r) in out.iter_mut().zip(&chain.right[d]) {
                *o += w * r;
            }
        }
    }
    Ok(out)
}

#[derive(Serialize)]
struct BandRow {
    value: f64,
    band: usize,
    re: f64,
    im: f64,
}

/// `value,band,re,im` for the selected bands.
pub fn write_bands_csv<W: Write>(track: &BandTrack, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for (p, &value) in track.values.iter().enumerate() {
        for b in 0..track.selected {
            let z = track.bands[b][p];
            w.serialize(BandRow { value, band: b, re: z.re, im: z.im })?;
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct EpRow {
    j_star: f64,
    re_lambda_star: f64,
    im_lambda_star: f64,
    exponent: Option<f64>,
    r2: Option<f64>,
    bracket: f64,
    band_a: usize,
    band_b: usize,
    converged: bool,
}

/// `j_star,re_lambda_star,im_lambda_star,exponent,r2,bracket,band_a,band_b,converged`.
pub fn write_eps_csv<W: Write>(eps: &[EpRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for ep in eps {
        w.serialize(EpRow {
            j_star: ep.j_star,
            re_lambda_star: ep.lambda_star.re,
            im_lambda_star: ep.lambda_star.im,
            exponent: ep.exponent,
            r2: ep.fit_r2,
            bracket: ep.bracket_width(),
            band_a: ep.bands.0,
            band_b: ep.bands.1,
            converged: ep.converged,
        })?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct ComplexCountRow {
    pub value: f64,
    pub count: usize,
    pub tracked_count: usize,
    pub odd: bool,
}

pub fn complex_counts(track: &BandTrack, tol_im_rel: f64) -> Vec<ComplexCountRow> {
    (0..track.point_count())
        .map(|p| {
            let eigs = track.eigenvalues_at(p);
            let tol = sweep_tol_im(&eigs, tol_im_rel);
            let all = count_complex(&eigs, tol);
            let tracked = count_complex(&eigs[..track.selected], tol);
            ComplexCountRow { value: track.values[p], count: all.count, tracked_count: tracked.count, odd: all.odd }
        })
        .collect()
}

/// Number of `+2` (or larger) jumps summed over the sweep, in pairs.
pub fn ep_jump_count(counts: &[ComplexCountRow]) -> usize {
    counts.windows(2).map(|w| w[1].count.saturating_sub(w[0].count)).sum::<usize>() / 2
}

pub fn write_complex_count_csv<W: Write>(rows: &[ComplexCountRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct FitRow {
    ep: usize,
    delta: f64,
    splitting: f64,
}

/// `ep,delta,splitting` for each local fit.
pub fn write_ep_fit_csv<W: Write>(fits: &[(usize, ExponentFit)], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for (ep, fit) in fits {
        for &(delta, splitting) in &fit.points {
            w.serialize(FitRow { ep: *ep, delta, splitting })?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::ONE;

    fn two_by_two(c: f64) -> impl Fn(f64) -> CMat + Sync {
        move |j: f64| {
            let mut m: CMat = Mat::zeros(2, 2);
            m[(0, 0)] = c64::new(0.4 + c, 0.0);
            m[(1, 1)] = c64::new(0.4 - c, 0.0);
            m[(0, 1)] = c64::new(j, 0.0);
            m[(1, 0)] = c64::new(-j, 0.0);
            m
        }
    }

    #[test]
    fn grid_validation() {
        let layout = ChainLayout::new(1, 1).unwrap();
        let model = Model::Aah(crate::hamiltonians::AahParams::new(1.0, 0.1, 0.1));
        assert!(SweepGrid::new("jz", vec![0.0, 1.0], model, layout, 1.0).is_err());
        assert!(SweepGrid::new("jz", vec![0.0, 1.0, 0.5], model, layout, 1.0).is_err());
        assert!(SweepGrid::new("jxxx", vec![0.0, 0.5, 1.0], model, layout, 1.0).is_err());
        assert!(SweepGrid::new("jz", vec![1.0, 0.5, 0.0], model, layout, 1.0).is_ok());
    }

    #[test]
    fn constant_spectra_give_constant_bands() {
        let fam = MatrixFamily::new("j", |_| Mat::from_fn(3, 3, |i, j| if i == j { c64::new(i as f64, 0.0) } else { ZERO }));
        let sweep = sweep_family(&fam, &[0.0, 1.0, 2.0]);
        let track = track_bands(&sweep, &TrackConfig::default()).unwrap();
        for b in &track.bands {
            assert!(b.iter().all(|z| *z == b[0]));
        }
        assert_eq!(track.max_step_distance(), 0.0);
    }

    #[test]
    fn slow_crossing_keeps_labels() {
        // two eigenvalues passing close to each other linearly
        let fam = MatrixFamily::new("j", |j: f64| {
            Mat::from_fn(2, 2, |r, c| match (r, c) {
                (0, 0) => c64::new(0.5 + j, 0.0),
                (1, 1) => c64::new(0.5 - j, 0.01),
                _ => ZERO,
            })
        });
        let values = linspace(-0.1, 0.1, 21);
        let sweep = sweep_family(&fam, &values);
        for matching in [Matching::Greedy, Matching::Optimal] {
            let track = track_bands(&sweep, &TrackConfig { matching, ..TrackConfig::default() }).unwrap();
            let band = track.bands.iter().find(|b| b[0].im.abs() < 1e-15).unwrap();
            for (p, z) in band.iter().enumerate() {
                assert!((z.re - (0.5 + values[p])).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn count_complex_small() {
        let ev = [ONE, c64::new(0.0, 0.5), c64::new(0.0, -0.5)];
        assert_eq!(count_complex(&ev, 1e-9), ComplexCount { count: 2, odd: false });
        assert!(count_complex(&ev[..2], 1e-9).odd);
    }

    #[test]
    fn analytic_ep_is_located() {
        let c = 0.0371;
        let fam = MatrixFamily::new("j", two_by_two(c));
        let sweep = sweep_family(&fam, &linspace(0.0, 0.1, 11));
        let track = track_bands(&sweep, &TrackConfig::default()).unwrap();
        let eps = locate_eps(&fam, &track, &BisectionConfig::default()).unwrap();
        assert_eq!(eps.len(), 1);
        assert!((eps[0].j_star - c).abs() < 1e-4);
        let (ep, fit) = fit_ep(&fam, &eps[0], &EpFitConfig::default()).unwrap();
        assert!((ep.j_star - c).abs() < 1e-10);
        assert!((fit.exponent - 0.5).abs() < 0.02, "{}", fit.exponent);
    }

    #[test]
    fn no_transition_no_eps() {
        let fam = MatrixFamily::new("j", two_by_two(1.0));
        let sweep = sweep_family(&fam, &linspace(0.0, 0.1, 5));
        let track = track_bands(&sweep, &TrackConfig::default()).unwrap();
        assert!(locate_eps(&fam, &track, &BisectionConfig::default()).unwrap().is_empty());
    }

    #[test]
    fn exact_sqrt_data_fits_half() {
        let ep = EpRecord {
            j_star: 0.0,
            real_side: -1e-12,
            complex_side: 1e-12,
            bands: (0, 1),
            real_pair: (ONE, ONE),
            lambda_star: ONE,
            exponent: None,
            fit_r2: None,
            converged: true,
            grid_step: 0,
        };
        let values = logspace(-6.0, -2.0, 9);
        let bands = vec![
            values.iter().map(|v| c64::new(1.0, v.sqrt())).collect(),
            values.iter().map(|v| c64::new(1.0, -v.sqrt())).collect(),
        ];
        let n = values.len();
        let track = BandTrack {
            parameter: "j".into(),
            values,
            bands,
            distances: vec![vec![0.0; n - 1]; 2],
            crossings: vec![vec![false; n - 1]; 2],
            selected: 2,
        };
        let fit = fit_sqrt_exponent(&track, &ep).unwrap();
        assert!((fit.exponent - 0.5).abs() < 1e-6);
    }

    #[test]
    fn canonical_jordan_block() {
        let lambda = c64::new(0.5, 0.0);
        let m = Mat::from_fn(2, 2, |i, j| match (i, j) {
            (0, 0) | (1, 1) => lambda,
            (0, 1) => ONE,
            _ => ZERO,
        });
        let chain = jordan_chain(m.as_ref(), lambda, 2).unwrap();
        assert!((chain.right[0][0].norm() - 1.0).abs() < 1e-12 && chain.right[0][1].norm() < 1e-12);
        assert!(chain.residuals.iter().all(|&r| r < 1e-12));
        let basis = GeneralizedBasis::new(vec![chain]).unwrap();
        let v = vec![c64::new(0.3, 0.1), c64::new(-0.7, 0.2)];
        let c = basis.coefficients(&v).unwrap();
        let got = iterate_jordan(&basis, &c, 3).unwrap();
        let m3 = &m * &m * &m;
        assert!((m3[(0, 1)] - 3.0 * lambda * lambda).norm() < 1e-14);
        let want = linalg::matvec(m3.as_ref(), &v);
        for (a, b) in got.iter().zip(&want) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn diagonalisable_matrix_rejects_order_two() {
        let m = Mat::from_fn(2, 2, |i, j| if i == j { c64::new(i as f64, 0.0) } else { ZERO });
        assert!(matches!(jordan_chain(m.as_ref(), ZERO, 2), Err(Error::JordanOrder { .. })));
    }

    #[test]
    fn chain_duals_are_biorthogonal() {
        let lambda = c64::new(0.2, 0.1);
        let m = Mat::from_fn(3, 3, |i, j| match (i, j) {
            (0, 0) | (1, 1) => lambda,
            (0, 1) => c64::new(0.7, 0.0),
            (2, 2) => c64::new(-0.4, 0.0),
            (0, 2) => c64::new(0.3, 0.0),
            _ => ZERO,
        });
        let basis = GeneralizedBasis::from_matrix(m.as_ref(), &[(lambda, 2)]).unwrap();
        let chain = &basis.chains[0];
        let own = jordan_chain(m.as_ref(), lambda, 2).unwrap();
        for d in 0..2 {
            for e in 0..2 {
                let ip: c64 = own.left[d].iter().zip(&own.right[e]).map(|(l, r)| l.conj() * r).sum();
                let want = if d == e { 1.0 } else { 0.0 };
                assert!((ip - c64::new(want, 0.0)).norm() < 1e-10);
            }
        }
        assert_eq!(chain.order, 2);
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(10, 3), 120.0);
        assert_eq!(binomial(2, 3), 0.0);
    }
}
