//! Dense spin-chain Hamiltonians (open boundaries, `hbar = 1`).
//!
//! Energies are measured in units of the XY coupling `J2` for the AAH family
//! and of the Rabi scale for PXP.

use std::collections::HashMap;

use faer::{c64, Mat, Side};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, ONE};
use crate::channel::JointBasis;
use crate::spin_ops::{apply_pauli_string, Axis, BasisTag, ChainLayout, DenseOperator, PureState};

/// Inverse golden ratio times `2 pi`.
pub fn default_omega() -> f64 {
    2.0 * std::f64::consts::PI * (5f64.sqrt() - 1.0) / 2.0
}

/// Interacting Aubry-Andre-Harper chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AahParams {
    pub j2: f64,
    pub jzz: f64,
    pub jz: f64,
    #[serde(default = "default_omega")]
    pub omega: f64,
}

impl AahParams {
    pub fn new(j2: f64, jzz: f64, jz: f64) -> Self {
        Self { j2, jzz, jz, omega: default_omega() }
    }
}

/// AAH chain plus a three-body `sigma^x sigma^x sigma^x` term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct XxxParams {
    pub aah: AahParams,
    pub jxxx: f64,
}

/// Anisotropic XY(Z) chain with the same quasiperiodic field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct XxParams {
    pub jxx: f64,
    pub jyy: f64,
    pub jzz: f64,
    pub jz: f64,
    #[serde(default = "default_omega")]
    pub omega: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PxpParams {
    pub rabi: f64,
}

/// Basis a PXP Hamiltonian is written in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PxpBasis {
    Full,
    Constrained,
}

type Term = (f64, Vec<(usize, Axis)>);

fn from_terms(n: usize, terms: &[Term]) -> DenseOperator {
    let dim = 1usize << n;
    let mut mat: CMat = Mat::zeros(dim, dim);
    for (coeff, ops) in terms {
        if *coeff == 0.0 {
            continue;
        }
        for col in 0..dim {
            let (row, ph) = apply_pauli_string(col, ops, n);
            mat[(row, col)] += ph * *coeff;
        }
    }
    DenseOperator::new(BasisTag::Full, mat).expect("square by construction")
}

fn chain_terms(n: usize, jxx: f64, jyy: f64, jzz: f64, jz: f64, omega: f64) -> Vec<Term> {
    let mut terms = Vec::new();
    for m in 0..n.saturating_sub(1) {
        terms.push((jxx, vec![(m, Axis::X), (m + 1, Axis::X)]));
        terms.push((jyy, vec![(m, Axis::Y), (m + 1, Axis::Y)]));
        terms.push((jzz, vec![(m, Axis::Z), (m + 1, Axis::Z)]));
    }
    for m in 0..n {
        terms.push((jz * (omega * m as f64).cos(), vec![(m, Axis::Z)]));
    }
    terms
}

fn check_sites(n_h: usize, min: usize) -> Result<()> {
    if n_h < min {
        return Err(Error::InvalidArgument(format!("chain needs at least {min} sites, got {n_h}")));
    }
    if n_h > 20 {
        return Err(Error::InvalidArgument(format!("{n_h} sites is beyond dense storage")));
    }
    Ok(())
}

pub fn build_aah(params: &AahParams, n_h: usize) -> Result<DenseOperator> {
    check_sites(n_h, 2)?;
    let terms = chain_terms(n_h, params.j2, params.j2, params.jzz, params.jz, params.omega);
    Ok(from_terms(n_h, &terms))
}

pub fn build_xxx(params: &XxxParams, n_h: usize) -> Result<DenseOperator> {
    check_sites(n_h, 3)?;
    let a = &params.aah;
    let mut terms = chain_terms(n_h, a.j2, a.j2, a.jzz, a.jz, a.omega);
    for m in 1..n_h - 1 {
        terms.push((params.jxxx, vec![(m - 1, Axis::X), (m, Axis::X), (m + 1, Axis::X)]));
    }
    Ok(from_terms(n_h, &terms))
}

pub fn build_xx(params: &XxParams, n_h: usize) -> Result<DenseOperator> {
    check_sites(n_h, 1)?;
    let terms = chain_terms(n_h, params.jxx, params.jyy, params.jzz, params.jz, params.omega);
    Ok(from_terms(n_h, &terms))
}

/// Blockade-constrained subspace: bit strings with no two adjacent `1`s,
/// in ascending index order.
#[derive(Debug, Clone)]
pub struct ConstrainedBasis {
    n: usize,
    states: Vec<usize>,
    lookup: HashMap<usize, usize>,
}

impl ConstrainedBasis {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 || n > 24 {
            return Err(Error::InvalidArgument(format!("constrained chain of {n} sites")));
        }
        let states: Vec<usize> = (0..1usize << n).filter(|&s| s & (s >> 1) == 0).collect();
        let lookup = states.iter().enumerate().map(|(i, &s)| (s, i)).collect();
        Ok(Self { n, states, lookup })
    }

    pub fn n_sites(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[usize] {
        &self.states
    }

    pub fn index_of(&self, bits: usize) -> Option<usize> {
        self.lookup.get(&bits).copied()
    }

    /// Embeds a constrained-basis vector into the full `2^n` basis.
    pub fn embed(&self, amps: &[c64]) -> Vec<c64> {
        let mut out = vec![linalg::ZERO; 1 << self.n];
        for (k, &s) in self.states.iter().enumerate() {
            out[s] = amps[k];
        }
        out
    }
}

/// `(Omega/2) sum_m P0_{m-1} sigma^x_m P0_{m+1}` with `P0_{-1} = P0_{n} = 1`.
pub fn build_pxp(params: &PxpParams, n_h: usize, basis: PxpBasis) -> Result<DenseOperator> {
    check_sites(n_h, 1)?;
    let half = c64::new(params.rabi / 2.0, 0.0);
    let flippable = |s: usize, m: usize| -> bool {
        let left_free = m == 0 || (s >> (n_h - m)) & 1 == 0;
        let right_free = m + 1 == n_h || (s >> (n_h - 2 - m)) & 1 == 0;
        left_free && right_free
    };
    match basis {
        PxpBasis::Full => {
            let dim = 1usize << n_h;
            let mut mat: CMat = Mat::zeros(dim, dim);
            for s in 0..dim {
                for m in 0..n_h {
                    if flippable(s, m) {
                        mat[(s ^ (1 << (n_h - 1 - m)), s)] += half;
                    }
                }
            }
            DenseOperator::new(BasisTag::Full, mat)
        }
        PxpBasis::Constrained => {
            let cb = ConstrainedBasis::new(n_h)?;
            let mut mat: CMat = Mat::zeros(cb.dim(), cb.dim());
            for (col, &s) in cb.states().iter().enumerate() {
                for m in 0..n_h {
                    if flippable(s, m) {
                        let t = s ^ (1 << (n_h - 1 - m));
                        let row = cb.index_of(t).expect("flip with free neighbours stays constrained");
                        mat[(row, col)] += half;
                    }
                }
            }
            DenseOperator::new(BasisTag::Constrained, mat)
        }
    }
}

/// `1 - n_m n_{m+1}` on the full basis, `n = |1><1|`.
pub fn blockade_projector(bond: usize, n_h: usize) -> Result<DenseOperator> {
    if bond + 1 >= n_h {
        return Err(Error::SiteOutOfRange { site: bond + 1, n_sites: n_h });
    }
    let dim = 1usize << n_h;
    let mask = 0b11usize << (n_h - 2 - bond);
    let mat = Mat::from_fn(dim, dim, |i, j| {
        if i == j && i & mask != mask {
            ONE
        } else {
            linalg::ZERO
        }
    });
    DenseOperator::new(BasisTag::Full, mat)
}

/// One of the four chain models, as used by the runner and the sweeps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Model {
    Aah(AahParams),
    Xxx(XxxParams),
    Xx(XxParams),
    Pxp(PxpParams),
}

impl Model {
    pub fn name(&self) -> &'static str {
        match self {
            Model::Aah(_) => "aah",
            Model::Xxx(_) => "xxx",
            Model::Xx(_) => "xx",
            Model::Pxp(_) => "pxp",
        }
    }

    /// PXP lives in the blockade subspace; the others in the full basis.
    pub fn hamiltonian(&self, n_h: usize) -> Result<DenseOperator> {
        match self {
            Model::Aah(p) => build_aah(p, n_h),
            Model::Xxx(p) => build_xxx(p, n_h),
            Model::Xx(p) => build_xx(p, n_h),
            Model::Pxp(p) => build_pxp(p, n_h, PxpBasis::Constrained),
        }
    }

    pub fn joint_basis(&self, layout: ChainLayout) -> Result<JointBasis> {
        match self {
            Model::Pxp(_) => JointBasis::constrained(layout),
            _ => Ok(JointBasis::full(layout)),
        }
    }

    /// Parameter names accepted by [`Model::with_param`].
    pub fn param_names(&self) -> &'static [&'static str] {
        match self {
            Model::Aah(_) => &["j2", "jzz", "jz", "omega"],
            Model::Xxx(_) => &["j2", "jzz", "jz", "omega", "jxxx"],
            Model::Xx(_) => &["jxx", "jyy", "jzz", "jz", "omega", "jxx_jyy"],
            Model::Pxp(_) => &["rabi"],
        }
    }

    pub fn param(&self, name: &str) -> Result<f64> {
        let v = match (self, name) {
            (Model::Aah(p), "j2") | (Model::Xxx(XxxParams { aah: p, .. }), "j2") => p.j2,
            (Model::Aah(p), "jzz") | (Model::Xxx(XxxParams { aah: p, .. }), "jzz") => p.jzz,
            (Model::Aah(p), "jz") | (Model::Xxx(XxxParams { aah: p, .. }), "jz") => p.jz,
            (Model::Aah(p), "omega") | (Model::Xxx(XxxParams { aah: p, .. }), "omega") => p.omega,
            (Model::Xxx(p), "jxxx") => p.jxxx,
            (Model::Xx(p), "jxx") | (Model::Xx(p), "jxx_jyy") => p.jxx,
            (Model::Xx(p), "jyy") => p.jyy,
            (Model::Xx(p), "jzz") => p.jzz,
            (Model::Xx(p), "jz") => p.jz,
            (Model::Xx(p), "omega") => p.omega,
            (Model::Pxp(p), "rabi") => p.rabi,
            _ => return Err(self.unknown_param(name)),
        };
        Ok(v)
    }

    /// Copy of the model with one parameter replaced. `jxx_jyy` moves both
    /// XY couplings of the anisotropic model together.
    pub fn with_param(&self, name: &str, value: f64) -> Result<Model> {
        let mut m = *self;
        match (&mut m, name) {
            (Model::Aah(p), "j2") | (Model::Xxx(XxxParams { aah: p, .. }), "j2") => p.j2 = value,
            (Model::Aah(p), "jzz") | (Model::Xxx(XxxParams { aah: p, .. }), "jzz") => p.jzz = value,
            (Model::Aah(p), "jz") | (Model::Xxx(XxxParams { aah: p, .. }), "jz") => p.jz = value,
            (Model::Aah(p), "omega") | (Model::Xxx(XxxParams { aah: p, .. }), "omega") => {
                p.omega = value
            }
            (Model::Xxx(p), "jxxx") => p.jxxx = value,
            (Model::Xx(p), "jxx") => p.jxx = value,
            (Model::Xx(p), "jyy") => p.jyy = value,
            (Model::Xx(p), "jxx_jyy") => {
                p.jxx = value;
                p.jyy = value;
            }
            (Model::Xx(p), "jzz") => p.jzz = value,
            (Model::Xx(p), "jz") => p.jz = value,
            (Model::Xx(p), "omega") => p.omega = value,
            (Model::Pxp(p), "rabi") => p.rabi = value,
            _ => return Err(self.unknown_param(name)),
        }
        Ok(m)
    }

    fn unknown_param(&self, name: &str) -> Error {
        Error::InvalidArgument(format!(
            "model '{}' has no parameter '{name}' (expected one of {:?})",
            self.name(),
            self.param_names()
        ))
    }
}

/// Eigenvalues in ascending order with orthonormal eigenvectors as columns.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub tag: BasisTag,
    pub energies: Vec<f64>,
    pub vectors: CMat,
}

impl HermitianEigen {
    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    pub fn state(&self, k: usize) -> PureState {
        PureState::new(self.tag, linalg::col_to_vec(self.vectors.as_ref(), k))
            .expect("eigenvectors are normalised")
    }

    pub fn ground(&self) -> PureState {
        self.state(0)
    }

    pub fn top(&self) -> PureState {
        self.state(self.dim() - 1)
    }

    /// Index `floor(dim / 2)` of the ascending spectrum.
    pub fn median(&self) -> PureState {
        self.state(self.dim() / 2)
    }

    /// `‖V diag(E) V† - H‖_F`.
    pub fn reconstruction_residual(&self, h: &DenseOperator) -> f64 {
        let n = self.dim();
        let scaled = Mat::from_fn(n, n, |i, j| self.vectors[(i, j)] * self.energies[j]);
        let rec = &scaled * self.vectors.adjoint();
        linalg::fro((rec - h.matrix()).as_ref())
    }
}

pub fn hermitian_eigensystem(h: &DenseOperator) -> Result<HermitianEigen> {
    let dev = h.hermiticity_deviation();
    if dev > 1e-10 * h.fro_norm().max(1.0) {
        return Err(Error::NotHermitian { deviation: dev });
    }
    let evd = h
        .matrix()
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::EigenSolver(format!("{e:?}")))?;
    let n = h.dim();
    let s = evd.S().column_vector();
    let energies: Vec<f64> = (0..n).map(|i| s[i].re).collect();
    let u = evd.U();
    let mut vectors: CMat = Mat::zeros(n, n);
    for j in 0..n {
        let mut col = linalg::col_to_vec(u, j);
        linalg::fix_phase(&mut col);
        for (i, z) in col.into_iter().enumerate() {
            vectors[(i, j)] = z;
        }
    }
    Ok(HermitianEigen { tag: h.tag(), energies, vectors })
}
