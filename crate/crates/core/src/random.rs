//! Seeded random matrices and states for oracles and property checks.

use faer::{c64, Mat};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linalg::{self, CMat};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn ginibre<R: Rng>(dim: usize, rng: &mut R) -> CMat {
    Mat::from_fn(dim, dim, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        c64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
    })
}

/// Haar-distributed unitary: QR of a Ginibre matrix with the phases of
/// `diag(R)` folded back into `Q`.
pub fn haar_unitary(dim: usize, seed: u64) -> CMat {
    let g = ginibre(dim, &mut rng(seed));
    let qr = g.qr();
    let q = qr.compute_Q();
    let r = qr.R();
    Mat::from_fn(dim, dim, |i, j| {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { c64::new(1.0, 0.0) };
        q[(i, j)] * phase
    })
}

/// `G G† / Tr(G G†)`, full rank with probability one.
pub fn random_density<R: Rng>(dim: usize, rng: &mut R) -> CMat {
    let g = ginibre(dim, rng);
    let rho = &g * g.adjoint();
    let tr = linalg::trace(rho.as_ref());
    linalg::scale(rho.as_ref(), tr.inv())
}

/// Random single-qubit pure states on each of `n` sites, as a product vector
/// (site 0 most significant).
pub fn random_product_state<R: Rng>(n: usize, rng: &mut R) -> Vec<c64> {
    let mut v = vec![c64::new(1.0, 0.0)];
    for _ in 0..n {
        let theta: f64 = rng.gen_range(0.0..std::f64::consts::PI);
        let phi: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        let q = [c64::new((theta / 2.0).cos(), 0.0), c64::from_polar((theta / 2.0).sin(), phi)];
        v = v.iter().flat_map(|a| q.iter().map(move |b| a * b)).collect();
    }
    v
}
