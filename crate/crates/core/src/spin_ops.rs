//! Qubit-chain operators and states on the computational basis.
//!
//! Site 0 is the most significant bit of a basis index, and `|0>` is the
//! `sigma^z = +1` eigenstate. The bath occupies the last `n_b` sites of the
//! chain.

use faer::{c64, Mat, MatRef};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, I, ONE, ZERO};

/// Bookkeeping for a system of `n_s` qubits followed by a bath of `n_b` qubits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ChainLayout {
    n_s: usize,
    n_b: usize,
}

impl ChainLayout {
    pub fn new(n_s: usize, n_b: usize) -> Result<Self> {
        if n_s == 0 || n_b == 0 {
            return Err(Error::InvalidArgument(format!(
                "layout needs n_s >= 1 and n_b >= 1 (got n_s = {n_s}, n_b = {n_b})"
            )));
        }
        if n_s + n_b > 24 {
            return Err(Error::InvalidArgument(format!(
                "chain of {} qubits is beyond dense storage",
                n_s + n_b
            )));
        }
        Ok(Self { n_s, n_b })
    }

    pub fn n_s(&self) -> usize {
        self.n_s
    }

    pub fn n_b(&self) -> usize {
        self.n_b
    }

    pub fn n_h(&self) -> usize {
        self.n_s + self.n_b
    }

    pub fn system_dim(&self) -> usize {
        1 << self.n_s
    }

    pub fn bath_dim(&self) -> usize {
        1 << self.n_b
    }

    pub fn joint_dim(&self) -> usize {
        1 << self.n_h()
    }

    /// Bath sites, `n_s .. n_h`.
    pub fn bath_sites(&self) -> std::ops::Range<usize> {
        self.n_s..self.n_h()
    }

    pub fn system_sites(&self) -> std::ops::Range<usize> {
        0..self.n_s
    }
}

/// Which basis a dense operator or state is expressed in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BasisTag {
    /// Computational basis of the whole system + bath chain.
    Full,
    /// Rydberg-blockade (Fibonacci) subspace of the whole chain.
    Constrained,
    /// System block only.
    System,
    /// Bath block only.
    Bath,
    /// Reference ancilla (most significant qubit) tensored with the system.
    AncillaSystem,
    /// Result of a generic partial trace.
    Reduced,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
    Z,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Block {
    System,
    Bath,
    All,
}

/// Square complex matrix labelled with its basis.
#[derive(Debug, Clone)]
pub struct DenseOperator {
    tag: BasisTag,
    mat: CMat,
}

impl DenseOperator {
    pub fn new(tag: BasisTag, mat: CMat) -> Result<Self> {
        if mat.nrows() != mat.ncols() {
            return Err(Error::DimensionMismatch { expected: mat.nrows(), found: mat.ncols() });
        }
        Ok(Self { tag, mat })
    }

    pub fn zeros(tag: BasisTag, dim: usize) -> Self {
        Self { tag, mat: Mat::zeros(dim, dim) }
    }

    pub fn identity(tag: BasisTag, dim: usize) -> Self {
        Self { tag, mat: linalg::identity(dim) }
    }

    pub fn tag(&self) -> BasisTag {
        self.tag
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> MatRef<'_, c64> {
        self.mat.as_ref()
    }

    pub fn into_matrix(self) -> CMat {
        self.mat
    }

    pub fn relabel(mut self, tag: BasisTag) -> Self {
        self.tag = tag;
        self
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.tag != other.tag {
            return Err(Error::BasisMismatch { left: self.tag, right: other.tag });
        }
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: other.dim() });
        }
        Ok(())
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        Ok(Self { tag: self.tag, mat: &self.mat * &other.mat })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        Ok(Self { tag: self.tag, mat: &self.mat + &other.mat })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        Ok(Self { tag: self.tag, mat: &self.mat - &other.mat })
    }

    pub fn scale(&self, s: c64) -> Self {
        Self { tag: self.tag, mat: linalg::scale(self.mat.as_ref(), s) }
    }

    pub fn commutator(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        Ok(Self { tag: self.tag, mat: linalg::commutator(self.mat.as_ref(), other.mat.as_ref()) })
    }

    pub fn adjoint(&self) -> Self {
        Self { tag: self.tag, mat: self.mat.adjoint().to_owned() }
    }

    pub fn trace(&self) -> c64 {
        linalg::trace(self.mat.as_ref())
    }

    pub fn fro_norm(&self) -> f64 {
        linalg::fro(self.mat.as_ref())
    }

    pub fn hermiticity_deviation(&self) -> f64 {
        linalg::hermiticity_deviation(self.mat.as_ref())
    }

    pub fn kron(&self, other: &Self, tag: BasisTag) -> Self {
        Self { tag, mat: linalg::kron(self.mat.as_ref(), other.mat.as_ref()) }
    }

    pub fn get(&self, i: usize, j: usize) -> c64 {
        self.mat[(i, j)]
    }
}

/// Normalised state vector.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    tag: BasisTag,
    amps: Vec<c64>,
}

impl PureState {
    /// Normalises `amps`; a zero vector is rejected.
    pub fn new(tag: BasisTag, mut amps: Vec<c64>) -> Result<Self> {
        let norm = linalg::vec_norm(&amps);
        if norm < 1e-300 || !norm.is_finite() {
            return Err(Error::InvalidArgument("state vector has zero norm".into()));
        }
        for a in &mut amps {
            *a /= norm;
        }
        Ok(Self { tag, amps })
    }

    pub fn tag(&self) -> BasisTag {
        self.tag
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[c64] {
        &self.amps
    }

    pub fn relabel(mut self, tag: BasisTag) -> Self {
        self.tag = tag;
        self
    }

    pub fn density(&self) -> DenseOperator {
        DenseOperator { tag: self.tag, mat: linalg::outer(&self.amps) }
    }
}

/// Bit of `site` in basis index `index` for a chain of `n` sites.
#[inline]
pub fn site_bit(index: usize, site: usize, n: usize) -> usize {
    (index >> (n - 1 - site)) & 1
}

/// `sigma^z` eigenvalue (+1 for `|0>`, -1 for `|1>`) of `site` in `index`.
#[inline]
pub fn site_spin(index: usize, site: usize, n: usize) -> f64 {
    1.0 - 2.0 * site_bit(index, site, n) as f64
}

/// Total `sum_m sigma^z_m` of a basis index over `n` sites.
pub fn index_magnetization(index: usize, n: usize) -> i64 {
    n as i64 - 2 * (index & ((1usize << n) - 1)).count_ones() as i64
}

/// Applies a product of Paulis to basis state `index`, returning the image
/// index and the phase it picks up.
pub fn apply_pauli_string(index: usize, ops: &[(usize, Axis)], n: usize) -> (usize, c64) {
    let mut out = index;
    let mut phase = ONE;
    // Apply right-to-left so the string reads as an operator product.
    for &(site, axis) in ops.iter().rev() {
        let mask = 1usize << (n - 1 - site);
        let up = out & mask == 0;
        match axis {
            Axis::X => out ^= mask,
            Axis::Y => {
                phase *= if up { I } else { -I };
                out ^= mask;
            }
            Axis::Z => {
                if !up {
                    phase = -phase;
                }
            }
        }
    }
    (out, phase)
}

fn check_site(site: usize, n_sites: usize) -> Result<()> {
    if n_sites == 0 || site >= n_sites {
        return Err(Error::SiteOutOfRange { site, n_sites });
    }
    Ok(())
}

/// `sigma^axis` acting on `site` of an `n_sites` chain.
pub fn pauli_on_site(axis: Axis, site: usize, n_sites: usize) -> Result<DenseOperator> {
    check_site(site, n_sites)?;
    let dim = 1usize << n_sites;
    let mut mat = Mat::zeros(dim, dim);
    for col in 0..dim {
        let (row, ph) = apply_pauli_string(col, &[(site, axis)], n_sites);
        mat[(row, col)] = ph;
    }
    Ok(DenseOperator { tag: BasisTag::Full, mat })
}

/// `|0><0|` on `site`.
pub fn projector0_on_site(site: usize, n_sites: usize) -> Result<DenseOperator> {
    check_site(site, n_sites)?;
    let dim = 1usize << n_sites;
    let mut mat = Mat::zeros(dim, dim);
    for b in 0..dim {
        if site_bit(b, site, n_sites) == 0 {
            mat[(b, b)] = ONE;
        }
    }
    Ok(DenseOperator { tag: BasisTag::Full, mat })
}

/// Computational basis state from a string of `0`/`1` characters.
pub fn product_state(bits: &str) -> Result<PureState> {
    if bits.is_empty() {
        return Err(Error::InvalidArgument("empty bit string".into()));
    }
    let n = bits.len();
    if n > 30 {
        return Err(Error::InvalidArgument(format!("{n} qubits is beyond dense storage")));
    }
    let mut index = 0usize;
    for c in bits.chars() {
        index <<= 1;
        match c {
            '0' => {}
            '1' => index |= 1,
            other => {
                return Err(Error::InvalidArgument(format!("bit string contains '{other}'")));
            }
        }
    }
    let mut amps = vec![ZERO; 1 << n];
    amps[index] = ONE;
    PureState::new(BasisTag::Full, amps)
}

/// `(|0...0> + |1...1>)/sqrt(2)` on `n` qubits.
pub fn ghz_state(n: usize) -> Result<PureState> {
    if n == 0 || n > 30 {
        return Err(Error::InvalidArgument(format!("GHZ state needs 1..=30 qubits, got {n}")));
    }
    let dim = 1usize << n;
    let mut amps = vec![ZERO; dim];
    amps[0] = ONE;
    amps[dim - 1] = ONE;
    PureState::new(BasisTag::Full, amps)
}

/// `|0101...>` on `n` qubits.
pub fn neel_state(n: usize) -> Result<PureState> {
    if n == 0 {
        return Err(Error::InvalidArgument("Neel state needs at least one qubit".into()));
    }
    let bits: String = (0..n).map(|k| if k % 2 == 0 { '0' } else { '1' }).collect();
    product_state(&bits)
}

/// Traces out every qubit not listed in `keep`. Kept qubits retain their
/// relative order, with the lowest site as the most significant bit.
pub fn partial_trace(op: &DenseOperator, keep: &[usize]) -> Result<DenseOperator> {
    if op.tag == BasisTag::Constrained {
        return Err(Error::BasisMismatch { left: op.tag, right: BasisTag::Full });
    }
    let dim = op.dim();
    let n = linalg::log2_exact(dim)
        .ok_or_else(|| Error::InvalidArgument(format!("dimension {dim} is not a power of two")))?;
    let mut kept: Vec<usize> = keep.to_vec();
    kept.sort_unstable();
    kept.dedup();
    if kept.len() != keep.len() {
        return Err(Error::InvalidArgument("duplicate sites in keep set".into()));
    }
    for &s in &kept {
        check_site(s, n)?;
    }
    let traced: Vec<usize> = (0..n).filter(|s| !kept.contains(s)).collect();

    let scatter = |sub: usize, sites: &[usize]| -> usize {
        let k = sites.len();
        sites
            .iter()
            .enumerate()
            .map(|(pos, &site)| ((sub >> (k - 1 - pos)) & 1) << (n - 1 - site))
            .fold(0, |a, b| a | b)
    };
    let dk = 1usize << kept.len();
    let dt = 1usize << traced.len();
    let kept_full: Vec<usize> = (0..dk).map(|a| scatter(a, &kept)).collect();
    let traced_full: Vec<usize> = (0..dt).map(|t| scatter(t, &traced)).collect();

    let m = op.matrix();
    let out = Mat::from_fn(dk, dk, |a, b| {
        let (ia, ib) = (kept_full[a], kept_full[b]);
        traced_full.iter().map(|&t| m[(ia | t, ib | t)]).sum()
    });
    Ok(DenseOperator { tag: BasisTag::Reduced, mat: out })
}

/// `Tr_b` on the full joint basis, returning a system-space operator.
pub fn trace_out_bath(op: &DenseOperator, layout: &ChainLayout) -> Result<DenseOperator> {
    if op.tag != BasisTag::Full {
        return Err(Error::BasisMismatch { left: op.tag, right: BasisTag::Full });
    }
    if op.dim() != layout.joint_dim() {
        return Err(Error::DimensionMismatch { expected: layout.joint_dim(), found: op.dim() });
    }
    let keep: Vec<usize> = layout.system_sites().collect();
    Ok(partial_trace(op, &keep)?.relabel(BasisTag::System))
}

/// `sum_m sigma^z_m` over an `n`-qubit register.
pub fn total_sz(n: usize) -> Result<DenseOperator> {
    if n == 0 || n > 30 {
        return Err(Error::InvalidArgument(format!("total S_z needs 1..=30 qubits, got {n}")));
    }
    let dim = 1usize << n;
    let mut mat = Mat::zeros(dim, dim);
    for b in 0..dim {
        mat[(b, b)] = c64::new(index_magnetization(b, n) as f64, 0.0);
    }
    Ok(DenseOperator { tag: BasisTag::Full, mat })
}

/// Total `S_z` restricted to one block of a layout, on that block's own space.
pub fn total_sz_block(layout: &ChainLayout, block: Block) -> DenseOperator {
    let (n, tag) = match block {
        Block::System => (layout.n_s(), BasisTag::System),
        Block::Bath => (layout.n_b(), BasisTag::Bath),
        Block::All => (layout.n_h(), BasisTag::Full),
    };
    total_sz(n).expect("layout sizes are validated").relabel(tag)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> c64 {
        c64::new(re, 0.0)
    }

    #[test]
    fn single_site_x() {
        let x = pauli_on_site(Axis::X, 0, 1).unwrap();
        assert_eq!(x.get(0, 1), c(1.0));
        assert_eq!(x.get(1, 0), c(1.0));
        assert_eq!(x.get(0, 0), ZERO);
    }

    #[test]
    fn z_on_most_significant_site() {
        let z = pauli_on_site(Axis::Z, 0, 2).unwrap();
        let diag: Vec<f64> = (0..4).map(|i| z.get(i, i).re).collect();
        assert_eq!(diag, vec![1.0, 1.0, -1.0, -1.0]);
    }

    #[test]
    fn site_out_of_range() {
        assert!(matches!(
            pauli_on_site(Axis::Y, 3, 3),
            Err(Error::SiteOutOfRange { site: 3, n_sites: 3 })
        ));
        assert!(projector0_on_site(5, 2).is_err());
    }

    #[test]
    fn paulis_square_to_identity() {
        for axis in [Axis::X, Axis::Y, Axis::Z] {
            for site in 0..3 {
                let p = pauli_on_site(axis, site, 3).unwrap();
                let sq = p.matmul(&p).unwrap();
                let id = DenseOperator::identity(BasisTag::Full, 8);
                assert!(sq.sub(&id).unwrap().fro_norm() < 1e-14);
                assert!(p.hermiticity_deviation() < 1e-14);
            }
        }
    }

    #[test]
    fn projector_properties() {
        let p = projector0_on_site(0, 1).unwrap();
        assert_eq!(p.get(0, 0), ONE);
        assert_eq!(p.get(1, 1), ZERO);

        let p = projector0_on_site(2, 4).unwrap();
        assert!(p.matmul(&p).unwrap().sub(&p).unwrap().fro_norm() < 1e-14);
        assert!((p.trace().re - 8.0).abs() < 1e-14);
        // P0 + (1 - Z)/2 = I
        let z = pauli_on_site(Axis::Z, 2, 4).unwrap();
        let id = DenseOperator::identity(BasisTag::Full, 16);
        let p1 = id.sub(&z).unwrap().scale(c(0.5));
        assert!(p.add(&p1).unwrap().sub(&id).unwrap().fro_norm() < 1e-14);
    }

    #[test]
    fn state_constructors() {
        let s = product_state("00").unwrap();
        assert_eq!(s.amplitudes(), &[ONE, ZERO, ZERO, ZERO]);
        let g = ghz_state(2).unwrap();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert!((g.amplitudes()[0].re - r).abs() < 1e-15);
        assert!((g.amplitudes()[3].re - r).abs() < 1e-15);
        let n = neel_state(3).unwrap();
        assert_eq!(n.amplitudes()[0b010], ONE);
        assert!(product_state("").is_err());
        assert!(product_state("0a").is_err());
    }

    #[test]
    fn bell_pair_reduces_to_maximally_mixed() {
        let bell = ghz_state(2).unwrap().density();
        let r = partial_trace(&bell, &[0]).unwrap();
        assert!((r.get(0, 0).re - 0.5).abs() < 1e-15);
        assert!((r.get(1, 1).re - 0.5).abs() < 1e-15);
        assert!(r.get(0, 1).norm() < 1e-15);
    }

    #[test]
    fn partial_trace_rejects_constrained_basis() {
        let op = DenseOperator::identity(BasisTag::Constrained, 4);
        assert!(matches!(partial_trace(&op, &[0]), Err(Error::BasisMismatch { .. })));
    }

    #[test]
    fn total_sz_small() {
        let s = total_sz(1).unwrap();
        assert_eq!((s.get(0, 0).re, s.get(1, 1).re), (1.0, -1.0));
        let s = total_sz(2).unwrap();
        let d: Vec<f64> = (0..4).map(|i| s.get(i, i).re).collect();
        assert_eq!(d, vec![2.0, 0.0, 0.0, -2.0]);
    }

    #[test]
    fn binary_ops_check_tags() {
        let a = DenseOperator::identity(BasisTag::Full, 2);
        let b = DenseOperator::identity(BasisTag::System, 2);
        assert!(matches!(a.matmul(&b), Err(Error::BasisMismatch { .. })));
    }

    #[test]
    fn layout_validation() {
        assert!(ChainLayout::new(0, 2).is_err());
        let l = ChainLayout::new(2, 3).unwrap();
        assert_eq!((l.n_h(), l.system_dim(), l.bath_dim()), (5, 4, 8));
        assert_eq!(l.bath_sites(), 2..5);
    }
}
