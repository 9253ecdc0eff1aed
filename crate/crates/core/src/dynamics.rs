//! Observables of the iterated channel and diagnostics of its eigenmodes:
//! rescaled overlaps with Hamiltonian eigenstates, scar detection, Rényi-2
//! mutual information with an ancilla, and the imbalance.

use std::io::Write;

use faer::{c64, Mat};
use rayon::prelude::*;
use serde::Serialize;

use crate::channel::{apply_channel, extend_with_ancilla, reset_channel, system_magnetization, JointBasis, KrausSet};
use crate::error::{Error, Result};
use crate::hamiltonians::{ConstrainedBasis, HermitianEigen, Model};
use crate::linalg::{self, CMat};
use crate::spectra::{EigenMode, Spectrum};
use crate::spin_ops::{
    ghz_state, neel_state, partial_trace, site_spin, BasisTag, ChainLayout, DenseOperator, PureState,
};

/// Bath-reset projection `<0_b|Psi>` below this norm leaves the overlap undefined.
pub const MIN_PROJECTION_NORM: f64 = 1e-12;

/// Tolerance on per-step growth of the mutual information.
pub const MONOTONICITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Serialize)]
pub struct OverlapRecord {
    pub mode: usize,
    pub re: f64,
    pub im: f64,
    pub abs: f64,
    pub xi: f64,
    pub reference: String,
}

/// System state `rho_Psi = <0_b|Psi><Psi|0_b> / Tr(...)` of a joint
/// eigenstate with the bath in its reset configuration.
pub fn reset_projection(psi: &PureState, basis: &JointBasis) -> Result<Vec<c64>> {
    if psi.tag() != basis.tag() {
        return Err(Error::BasisMismatch { left: psi.tag(), right: basis.tag() });
    }
    if psi.dim() != basis.joint_dim() {
        return Err(Error::DimensionMismatch { expected: basis.joint_dim(), found: psi.dim() });
    }
    let mut p = basis.bath_projection(psi.amplitudes(), 0);
    let norm = linalg::vec_norm(&p);
    if !(norm >= MIN_PROJECTION_NORM) {
        return Err(Error::UndefinedOverlap { norm });
    }
    for z in &mut p {
        *z /= norm;
    }
    Ok(p)
}

/// `xi = N_s |Tr(rho_Psi rho_m)|` for a unit-norm right eigenoperator.
pub fn eigen_overlap(mode: &EigenMode, psi: &PureState, basis: &JointBasis) -> Result<f64> {
    let p = reset_projection(psi, basis)?;
    Ok(overlap_with_projection(&mode.right, &p))
}

fn overlap_with_projection(right: &CMat, p: &[c64]) -> f64 {
    let n = p.len();
    let norm = linalg::fro(right.as_ref());
    let mut acc = c64::new(0.0, 0.0);
    for i in 0..n {
        let pi = p[i].conj();
        if pi == linalg::ZERO {
            continue;
        }
        for j in 0..n {
            acc += pi * right[(i, j)] * p[j];
        }
    }
    n as f64 * acc.norm() / norm
}

pub fn overlaps(spectrum: &Spectrum, psi: &PureState, basis: &JointBasis, reference: &str) -> Result<Vec<OverlapRecord>> {
    let p = reset_projection(psi, basis)?;
    Ok(spectrum
        .modes
        .iter()
        .enumerate()
        .map(|(mode, m)| OverlapRecord {
            mode,
            re: m.lambda.re,
            im: m.lambda.im,
            abs: m.magnitude(),
            xi: overlap_with_projection(&m.right, &p),
            reference: reference.to_string(),
        })
        .collect())
}

/// `-ln Tr(rho_L^2)` for the left half (sites `0..n/2`) of an `n`-qubit
/// pure state given in the full basis.
pub fn half_chain_renyi2(amps: &[c64], n: usize) -> Result<f64> {
    if amps.len() != 1usize << n {
        return Err(Error::DimensionMismatch { expected: 1 << n, found: amps.len() });
    }
    let right = n - n / 2;
    let a = Mat::from_fn(1 << (n / 2), 1 << right, |l, r| amps[(l << right) | r]);
    let rho = &a * a.adjoint();
    let purity = linalg::hs_inner(rho.as_ref(), rho.as_ref()).re;
    if !(purity > 0.0) {
        return Err(Error::NonPositivePurity { value: purity });
    }
    Ok(-purity.ln())
}

#[derive(Debug, Clone, Serialize)]
pub struct ScarState {
    pub index: usize,
    pub energy: f64,
    pub entropy: f64,
}

#[derive(Debug, Clone)]
pub struct ScarScan {
    pub scars: Vec<ScarState>,
    /// Half-chain Rényi-2 entropy of every eigenstate, in energy order.
    pub entropies: Vec<f64>,
    /// Median entropy over the middle two-thirds of the spectrum.
    pub bulk_median: f64,
}

/// The `count` lowest-entanglement eigenstates among the middle two-thirds
/// of the spectrum of a constrained-basis Hamiltonian.
pub fn scar_candidates(eig: &HermitianEigen, basis: &ConstrainedBasis, count: usize) -> Result<ScarScan> {
    let d = eig.dim();
    if d != basis.dim() {
        return Err(Error::DimensionMismatch { expected: basis.dim(), found: d });
    }
    let (lo, hi) = (d / 6, d - d / 6);
    if hi - lo < count.max(1) || d < 6 {
        return Err(Error::InvalidArgument(format!("dimension {d} too small to exclude spectral edges")));
    }
    let n = basis.n_sites();
    let entropies: Vec<f64> = (0..d)
        .map(|k| half_chain_renyi2(&basis.embed(eig.state(k).amplitudes()), n))
        .collect::<Result<_>>()?;
    let mut middle: Vec<usize> = (lo..hi).collect();
    middle.sort_by(|&a, &b| entropies[a].total_cmp(&entropies[b]).then(a.cmp(&b)));
    let mut sorted: Vec<f64> = (lo..hi).map(|k| entropies[k]).collect();
    sorted.sort_by(f64::total_cmp);
    let m = sorted.len();
    let bulk_median = if m % 2 == 1 { sorted[m / 2] } else { 0.5 * (sorted[m / 2 - 1] + sorted[m / 2]) };
    let scars = middle
        .into_iter()
        .take(count)
        .map(|index| ScarState { index, energy: eig.energies[index], entropy: entropies[index] })
        .collect();
    Ok(ScarScan { scars, entropies, bulk_median })
}

/// Mean of [`eigen_overlap`] against each scar state.
pub fn scar_overlap_avg(mode: &EigenMode, scars: &[PureState], basis: &JointBasis) -> Result<f64> {
    if scars.is_empty() {
        return Err(Error::InvalidArgument("no scar states given".into()));
    }
    let mut acc = 0.0;
    for s in scars {
        acc += eigen_overlap(mode, s, basis)?;
    }
    Ok(acc / scars.len() as f64)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Qmi {
    pub s: f64,
    pub purity_a: f64,
    pub purity_s: f64,
    pub purity_as: f64,
}

fn purity(rho: &DenseOperator) -> Result<f64> {
    let p = linalg::hs_inner(rho.matrix(), rho.matrix()).re;
    if !(p > 0.0) {
        return Err(Error::NonPositivePurity { value: p });
    }
    Ok(p)
}

/// `S = -ln Tr rho_a^2 - ln Tr rho_s^2 + ln Tr rho_as^2` with the ancilla as
/// the most significant qubit.
pub fn renyi2_qmi(rho_as: &DenseOperator) -> Result<Qmi> {
    let n = linalg::log2_exact(rho_as.dim())
        .filter(|&n| n >= 2)
        .ok_or_else(|| Error::InvalidArgument(format!("dimension {} is not 2 x 2^n_s", rho_as.dim())))?;
    let rho_a = partial_trace(rho_as, &[0])?;
    let sys: Vec<usize> = (1..n).collect();
    let rho_s = partial_trace(rho_as, &sys)?;
    let (pa, ps, pas) = (purity(&rho_a)?, purity(&rho_s)?, purity(rho_as)?);
    Ok(Qmi { s: -pa.ln() - ps.ln() + pas.ln(), purity_a: pa, purity_s: ps, purity_as: pas })
}

/// `B = sum_i Tr(rho_t S^z_i) Tr(rho_0 S^z_i)` with `S^z = sigma^z / 2`.
pub fn imbalance(rho_t: &DenseOperator, rho_0: &DenseOperator, n_s: usize) -> Result<f64> {
    let dim = 1usize << n_s;
    for r in [rho_t, rho_0] {
        if r.dim() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: r.dim() });
        }
    }
    let sz = |r: &DenseOperator, i: usize| -> f64 {
        (0..dim).map(|b| r.get(b, b).re * 0.5 * site_spin(b, i, n_s)).sum()
    };
    Ok((0..n_s).map(|i| sz(rho_t, i) * sz(rho_0, i)).sum())
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct TrajectoryRecord {
    #[serde(rename = "n_K")]
    pub n_k: usize,
    #[serde(rename = "S")]
    pub s: f64,
    #[serde(rename = "B")]
    pub b: f64,
    pub sz: f64,
    pub purity_a: f64,
    pub purity_s: f64,
    pub purity_as: f64,
}

/// Iterates the channel `n_max` times on two initial states: an
/// ancilla+system GHZ state under `I (x) K` for the mutual information, and
/// the Néel state of the system for the imbalance and magnetisation.
pub fn qmi_trajectory(k: &KrausSet, n_max: usize) -> Result<Vec<TrajectoryRecord>> {
    if k.tag() != BasisTag::System {
        return Err(Error::BasisMismatch { left: k.tag(), right: BasisTag::System });
    }
    let n_s = linalg::log2_exact(k.dim())
        .ok_or_else(|| Error::InvalidArgument(format!("system dimension {} is not 2^n_s", k.dim())))?;
    let ext = extend_with_ancilla(k);
    let mut rho_as = ghz_state(n_s + 1)?.density().relabel(BasisTag::AncillaSystem);
    let rho_0 = neel_state(n_s)?.density().relabel(BasisTag::System);
    let mut rho_t = rho_0.clone();
    let mut out = Vec::with_capacity(n_max + 1);
    for n_k in 0..=n_max {
        let q = renyi2_qmi(&rho_as)?;
        out.push(TrajectoryRecord {
            n_k,
            s: q.s,
            b: imbalance(&rho_t, &rho_0, n_s)?,
            sz: system_magnetization(&rho_t, n_s),
            purity_a: q.purity_a,
            purity_s: q.purity_s,
            purity_as: q.purity_as,
        });
        if n_k < n_max {
            rho_as = apply_channel(&ext, &rho_as)?;
            rho_t = apply_channel(k, &rho_t)?;
        }
    }
    for w in out.windows(2) {
        if w[1].s > w[0].s + MONOTONICITY_TOL {
            log::warn!("mutual information grew by {:.3e} at n_K = {}", w[1].s - w[0].s, w[1].n_k);
        }
    }
    Ok(out)
}

/// Largest per-step increase of `S` along a trajectory (negative when
/// strictly decreasing).
pub fn max_qmi_increase(traj: &[TrajectoryRecord]) -> f64 {
    traj.windows(2).map(|w| w[1].s - w[0].s).fold(f64::NEG_INFINITY, f64::max)
}

#[derive(Debug, Clone, Serialize)]
pub struct PhaseScanRow {
    #[serde(rename = "J_z")]
    pub jz: f64,
    #[serde(rename = "S")]
    pub s: f64,
    #[serde(rename = "B_plus_1")]
    pub b_plus_1: f64,
}

#[derive(Debug, Clone)]
pub struct PhaseScan {
    pub rows: Vec<PhaseScanRow>,
    pub failures: Vec<(f64, String)>,
}

/// Final `S` and `B + 1` after `n_k` iterations for each `J_z`.
pub fn phase_scan(base: &Model, layout: ChainLayout, t: f64, jz_values: &[f64], n_k: usize) -> PhaseScan {
    let results: Vec<(f64, Result<PhaseScanRow>)> = jz_values
        .par_iter()
        .map(|&jz| {
            let row = base.with_param("jz", jz).and_then(|m| reset_channel(&m, layout, t)).and_then(|k| {
                let traj = qmi_trajectory(&k, n_k)?;
                let last = traj[traj.len() - 1];
                Ok(PhaseScanRow { jz, s: last.s, b_plus_1: last.b + 1.0 })
            });
            (jz, row)
        })
        .collect();
    let mut scan = PhaseScan { rows: Vec::new(), failures: Vec::new() };
    for (jz, r) in results {
        match r {
            Ok(row) => scan.rows.push(row),
            Err(e) => {
                log::warn!("phase scan point J_z = {jz} failed: {e}");
                scan.failures.push((jz, e.to_string()));
            }
        }
    }
    scan
}

pub fn write_csv<T: Serialize, W: Write>(rows: &[T], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{ONE, ZERO};
    use crate::spin_ops::product_state;

    #[test]
    fn qmi_of_product_and_ghz() {
        let prod = product_state("010").unwrap().density().relabel(BasisTag::AncillaSystem);
        assert!(renyi2_qmi(&prod).unwrap().s.abs() < 1e-12);
        let ghz = ghz_state(3).unwrap().density().relabel(BasisTag::AncillaSystem);
        assert!((renyi2_qmi(&ghz).unwrap().s - 2.0 * 2f64.ln()).abs() < 1e-12);
        let mut classical: CMat = Mat::zeros(8, 8);
        classical[(0, 0)] = c64::new(0.5, 0.0);
        classical[(7, 7)] = c64::new(0.5, 0.0);
        let cl = DenseOperator::new(BasisTag::AncillaSystem, classical).unwrap();
        assert!((renyi2_qmi(&cl).unwrap().s - 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn neel_imbalance() {
        let neel = neel_state(4).unwrap().density().relabel(BasisTag::System);
        assert!((imbalance(&neel, &neel, 4).unwrap() - 1.0).abs() < 1e-14);
        let mixed = DenseOperator::new(BasisTag::System, linalg::scale(linalg::identity(16).as_ref(), c64::new(1.0 / 16.0, 0.0))).unwrap();
        assert!(imbalance(&mixed, &neel, 4).unwrap().abs() < 1e-14);
        let flipped = product_state("1010").unwrap().density().relabel(BasisTag::System);
        assert!((imbalance(&flipped, &neel, 4).unwrap() + 1.0).abs() < 1e-14);
        assert!(imbalance(&neel, &neel, 3).is_err());
    }

    #[test]
    fn identity_channel_keeps_qmi() {
        let k = KrausSet::new(vec![linalg::identity(4)], BasisTag::System).unwrap();
        let traj = qmi_trajectory(&k, 3).unwrap();
        for r in &traj {
            assert!((r.s - 2.0 * 2f64.ln()).abs() < 1e-12);
            assert!((r.b - 0.5).abs() < 1e-14);
        }
    }

    #[test]
    fn product_state_entropy_vanishes() {
        let amps = product_state("0110").unwrap();
        assert!(half_chain_renyi2(amps.amplitudes(), 4).unwrap().abs() < 1e-14);
        // Bell pair across the cut
        let mut bell = vec![ZERO; 4];
        bell[0] = ONE * std::f64::consts::FRAC_1_SQRT_2;
        bell[3] = ONE * std::f64::consts::FRAC_1_SQRT_2;
        assert!((half_chain_renyi2(&bell, 2).unwrap() - 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn self_overlap_of_pure_state_is_dimension() {
        let layout = ChainLayout::new(2, 1).unwrap();
        let basis = JointBasis::full(layout);
        // joint |psi> = |phi>_s |0>_b with phi = (|00> + i|11>)/sqrt 2
        let mut amps = vec![ZERO; 8];
        amps[0] = ONE;
        amps[6] = c64::new(0.0, 1.0);
        let psi = PureState::new(BasisTag::Full, amps).unwrap();
        let p = reset_projection(&psi, &basis).unwrap();
        let rho = linalg::outer(&p);
        let norm = linalg::fro(rho.as_ref());
        let mode = EigenMode {
            lambda: ONE,
            right: linalg::scale(rho.as_ref(), c64::new(1.0 / norm, 0.0)),
            left: rho.clone(),
            residual: 0.0,
            defectivity_score: 1.0,
        };
        assert!((eigen_overlap(&mode, &psi, &basis).unwrap() - 4.0).abs() < 1e-12);
        let mut off = vec![ZERO; 8];
        off[1] = ONE;
        let orth = PureState::new(BasisTag::Full, off).unwrap();
        assert!(matches!(eigen_overlap(&mode, &orth, &basis), Err(Error::UndefinedOverlap { .. })));
    }
}
