//! Reset channels: joint unitary evolution, bath projection onto the reset
//! state, and the Kraus / superoperator representations of the result.
//!
//! Vectorisation is row-stacking everywhere (`vec(A)[i*n + j] = A[i, j]`),
//! so the superoperator is `M = sum_m K_m (x) conj(K_m)`.

use faer::{c64, Mat};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonians::{hermitian_eigensystem, ConstrainedBasis, Model};
use crate::linalg::{self, CMat, ZERO};
use crate::spin_ops::{index_magnetization, BasisTag, ChainLayout, DenseOperator};

pub const COMPLETENESS_TOL: f64 = 1e-9;
pub const UNITARITY_TOL: f64 = 1e-9;

/// Factorisation of a joint basis into system and bath configurations.
#[derive(Debug, Clone)]
pub struct JointBasis {
    layout: ChainLayout,
    constrained: Option<ConstrainedBasis>,
    system_configs: Vec<usize>,
    bath_configs: Vec<usize>,
}

impl JointBasis {
    pub fn full(layout: ChainLayout) -> Self {
        Self {
            layout,
            constrained: None,
            system_configs: (0..layout.system_dim()).collect(),
            bath_configs: (0..layout.bath_dim()).collect(),
        }
    }

    /// Blockade subspace of the whole chain. System and bath configurations
    /// are the blockade-valid strings of each block; a joint configuration is
    /// present only if the bond across the block boundary is also valid.
    pub fn constrained(layout: ChainLayout) -> Result<Self> {
        let cb = ConstrainedBasis::new(layout.n_h())?;
        let valid = |bits: usize| bits & (bits >> 1) == 0;
        Ok(Self {
            layout,
            constrained: Some(cb),
            system_configs: (0..layout.system_dim()).filter(|&s| valid(s)).collect(),
            bath_configs: (0..layout.bath_dim()).filter(|&b| valid(b)).collect(),
        })
    }

    pub fn layout(&self) -> &ChainLayout {
        &self.layout
    }

    pub fn is_constrained(&self) -> bool {
        self.constrained.is_some()
    }

    pub fn tag(&self) -> BasisTag {
        if self.is_constrained() {
            BasisTag::Constrained
        } else {
            BasisTag::Full
        }
    }

    pub fn joint_dim(&self) -> usize {
        match &self.constrained {
            Some(cb) => cb.dim(),
            None => self.layout.joint_dim(),
        }
    }

    pub fn system_dim(&self) -> usize {
        self.system_configs.len()
    }

    pub fn bath_count(&self) -> usize {
        self.bath_configs.len()
    }

    /// System configurations as `n_s`-bit strings, in basis order.
    pub fn system_configs(&self) -> &[usize] {
        &self.system_configs
    }

    pub fn bath_configs(&self) -> &[usize] {
        &self.bath_configs
    }

    /// Joint-basis index of (system config `s`, bath config `b`), both given
    /// as positions in their config lists.
    pub fn joint_index(&self, s: usize, b: usize) -> Option<usize> {
        let bits = (self.system_configs[s] << self.layout.n_b()) | self.bath_configs[b];
        match &self.constrained {
            Some(cb) => cb.index_of(bits),
            None => Some(bits),
        }
    }

    /// `<b|psi>` for a joint vector: the system amplitudes with the bath in
    /// configuration `b`.
    pub fn bath_projection(&self, amps: &[c64], b: usize) -> Vec<c64> {
        (0..self.system_dim())
            .map(|s| self.joint_index(s, b).map_or(ZERO, |j| amps[j]))
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct Propagator {
    pub u: DenseOperator,
    pub t: f64,
}

/// `U = exp(-i H t)` from the Hermitian eigendecomposition of `H`.
pub fn propagate(h: &DenseOperator, t: f64) -> Result<Propagator> {
    let eig = hermitian_eigensystem(h)?;
    let n = eig.dim();
    let phased = Mat::from_fn(n, n, |i, j| {
        eig.vectors[(i, j)] * c64::from_polar(1.0, -eig.energies[j] * t)
    });
    let u = &phased * eig.vectors.adjoint();
    let dev = linalg::unitarity_deviation(u.as_ref());
    if dev > UNITARITY_TOL {
        return Err(Error::NotUnitary { deviation: dev });
    }
    Ok(Propagator { u: DenseOperator::new(h.tag(), u)?, t })
}

/// Kraus operators `K_m` of a channel on a system (or ancilla + system) space.
#[derive(Debug, Clone)]
pub struct KrausSet {
    operators: Vec<CMat>,
    tag: BasisTag,
    reset_index: usize,
}

impl KrausSet {
    /// Validates shapes and completeness.
    pub fn new(operators: Vec<CMat>, tag: BasisTag) -> Result<Self> {
        Self::with_reset(operators, tag, 0)
    }

    fn with_reset(operators: Vec<CMat>, tag: BasisTag, reset_index: usize) -> Result<Self> {
        let Some(first) = operators.first() else {
            return Err(Error::InvalidArgument("empty Kraus set".into()));
        };
        let d = first.nrows();
        for k in &operators {
            if k.nrows() != d || k.ncols() != d {
                return Err(Error::DimensionMismatch { expected: d, found: k.nrows().max(k.ncols()) });
            }
        }
        let set = Self { operators, tag, reset_index };
        let residual = set.completeness_residual();
        if !(residual < COMPLETENESS_TOL) {
            return Err(Error::Completeness { residual });
        }
        Ok(set)
    }

    pub fn operators(&self) -> &[CMat] {
        &self.operators
    }

    pub fn len(&self) -> usize {
        self.operators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.operators.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.operators[0].nrows()
    }

    pub fn tag(&self) -> BasisTag {
        self.tag
    }

    pub fn reset_index(&self) -> usize {
        self.reset_index
    }

    /// `‖sum_m K_m† K_m - I‖_F`.
    pub fn completeness_residual(&self) -> f64 {
        let d = self.dim();
        let mut acc: CMat = Mat::zeros(d, d);
        for k in &self.operators {
            acc += k.adjoint() * k;
        }
        linalg::fro((acc - linalg::identity(d)).as_ref())
    }
}

/// `K_m = <m|_b U |reset>_b`, one operator per bath configuration.
pub fn kraus_from_unitary(prop: &Propagator, basis: &JointBasis) -> Result<KrausSet> {
    kraus_from_unitary_with_reset(prop, basis, 0)
}

pub fn kraus_from_unitary_with_reset(
    prop: &Propagator,
    basis: &JointBasis,
    reset_index: usize,
) -> Result<KrausSet> {
    if prop.u.tag() != basis.tag() {
        return Err(Error::BasisMismatch { left: prop.u.tag(), right: basis.tag() });
    }
    if prop.u.dim() != basis.joint_dim() {
        return Err(Error::DimensionMismatch { expected: basis.joint_dim(), found: prop.u.dim() });
    }
    if reset_index >= basis.bath_count() {
        return Err(Error::InvalidArgument(format!(
            "reset index {reset_index} exceeds {} bath configurations",
            basis.bath_count()
        )));
    }
    let ds = basis.system_dim();
    let inputs: Vec<usize> = (0..ds)
        .map(|s| {
            basis.joint_index(s, reset_index).ok_or_else(|| {
                Error::InvalidArgument(format!("reset configuration invalid next to system config {s}"))
            })
        })
        .collect::<Result<_>>()?;
    let u = prop.u.matrix();
    let operators = (0..basis.bath_count())
        .map(|m| {
            Mat::from_fn(ds, ds, |out, inp| {
                basis.joint_index(out, m).map_or(ZERO, |row| u[(row, inputs[inp])])
            })
        })
        .collect();
    KrausSet::with_reset(operators, BasisTag::System, reset_index)
}

/// Hamiltonian -> propagator -> Kraus set, in the basis natural to the model.
pub fn reset_channel(model: &Model, layout: ChainLayout, t: f64) -> Result<KrausSet> {
    let basis = model.joint_basis(layout)?;
    let h = model.hamiltonian(layout.n_h())?;
    let prop = propagate(&h, t)?;
    kraus_from_unitary(&prop, &basis)
}

/// `sum_m K_m rho K_m†`.
pub fn apply_channel(k: &KrausSet, rho: &DenseOperator) -> Result<DenseOperator> {
    if rho.tag() != k.tag() {
        return Err(Error::BasisMismatch { left: rho.tag(), right: k.tag() });
    }
    if rho.dim() != k.dim() {
        return Err(Error::DimensionMismatch { expected: k.dim(), found: rho.dim() });
    }
    let r = rho.matrix();
    let mut out: CMat = Mat::zeros(k.dim(), k.dim());
    for km in k.operators() {
        out += km * r * km.adjoint();
    }
    DenseOperator::new(k.tag(), out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Vectorization {
    RowStacking,
}

#[derive(Debug, Clone)]
pub struct SuperoperatorMatrix {
    pub matrix: CMat,
    pub system_dim: usize,
    pub convention: Vectorization,
}

impl SuperoperatorMatrix {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn apply(&self, rho: &DenseOperator) -> Result<DenseOperator> {
        if rho.dim() != self.system_dim {
            return Err(Error::DimensionMismatch { expected: self.system_dim, found: rho.dim() });
        }
        let v = linalg::matvec(self.matrix.as_ref(), &linalg::vectorize(rho.matrix()));
        DenseOperator::new(rho.tag(), linalg::unvectorize(&v, self.system_dim))
    }
}

pub fn superoperator_matrix(k: &KrausSet) -> SuperoperatorMatrix {
    let d = k.dim();
    let mut m: CMat = Mat::zeros(d * d, d * d);
    for km in k.operators() {
        let conj = km.conjugate().to_owned();
        m += linalg::kron(km.as_ref(), conj.as_ref());
    }
    SuperoperatorMatrix { matrix: m, system_dim: d, convention: Vectorization::RowStacking }
}

/// `K_m -> I_2 (x) K_m`, the ancilla being the most significant qubit.
pub fn extend_with_ancilla(k: &KrausSet) -> KrausSet {
    let id = linalg::identity(2);
    let operators = k.operators().iter().map(|km| linalg::kron(id.as_ref(), km.as_ref())).collect();
    KrausSet { operators, tag: BasisTag::AncillaSystem, reset_index: k.reset_index }
}

/// Largest `|M|` entry carrying `|i><j|` to an operator-basis element whose
/// magnetisation grade `S_z(i) + S_z(j)` is lower. With the bath reset to
/// `|0...0>` (all `sigma^z = +1`) and a U(1)-symmetric Hamiltonian these
/// entries vanish: the grade can only move toward the bath's sector.
pub fn grading_violation(m: &SuperoperatorMatrix, n_s: usize) -> f64 {
    let d = m.system_dim;
    let grade = |v: usize| index_magnetization(v / d, n_s) + index_magnetization(v % d, n_s);
    let grades: Vec<i64> = (0..d * d).map(grade).collect();
    let mut worst = 0.0f64;
    for col in 0..d * d {
        for row in 0..d * d {
            if grades[row] < grades[col] {
                worst = worst.max(m.matrix[(row, col)].norm());
            }
        }
    }
    worst
}

/// `Tr(rho sum_i sigma^z_i)` for a system-space density matrix.
pub fn system_magnetization(rho: &DenseOperator, n_s: usize) -> f64 {
    (0..rho.dim()).map(|b| rho.get(b, b).re * index_magnetization(b, n_s) as f64).sum()
}
