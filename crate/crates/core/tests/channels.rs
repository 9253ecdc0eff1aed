mod common;

use common::*;
use faer::Mat;
use resetlab::channel::{
    apply_channel, kraus_from_unitary, propagate, reset_channel, superoperator_matrix, JointBasis, Propagator,
};
use resetlab::hamiltonians::{build_xxx, AahParams, Model, XxxParams};
use resetlab::random::{haar_unitary, random_density, rng};
use resetlab::spectra::{decompose_state, evolve_by_modes, full_spectrum};
use resetlab::spin_ops::{BasisTag, ChainLayout, DenseOperator};

fn xxx(jxxx: f64) -> XxxParams {
    XxxParams { aah: AahParams::new(1.0, 0.1, 0.1), jxxx }
}

#[test]
fn propagator_matches_taylor_exponential() {
    let h = build_xxx(&xxx(2.0), 6).unwrap();
    let t = 3.0;
    let ours = propagate(&h, t).unwrap().u.matrix().to_owned();
    let minus_iht = Mat::from_fn(64, 64, |i, j| h.get(i, j) * c(0.0, -t));
    assert!(diff(&ours, &expm(&minus_iht)) < 1e-10);
}

#[test]
fn kraus_operators_are_bath_blocks_of_the_unitary() {
    let layout = ChainLayout::new(3, 3).unwrap();
    let h = build_xxx(&xxx(2.0), 6).unwrap();
    let t = 2.0;
    let minus_iht = Mat::from_fn(64, 64, |i, j| h.get(i, j) * c(0.0, -t));
    let u = expm(&minus_iht);
    let k = reset_channel(&Model::Xxx(xxx(2.0)), layout, t).unwrap();
    assert_eq!(k.len(), 8);
    for (m, km) in k.operators().iter().enumerate() {
        let oracle = Mat::from_fn(8, 8, |s_out, s_in| u[(s_out * 8 + m, s_in * 8)]);
        assert!(diff(km, &oracle) < 1e-10, "K_{m}");
    }
    assert!(k.completeness_residual() < 1e-9);
}

#[test]
fn superoperator_columns_are_images_of_matrix_units() {
    let k = reset_channel(&Model::Xxx(xxx(2.0)), ChainLayout::new(2, 2).unwrap(), 5.0).unwrap();
    let sup = superoperator_matrix(&k);
    let d = 4;
    for i in 0..d {
        for j in 0..d {
            let unit = Mat::from_fn(d, d, |a, b| if a == i && b == j { c(1.0, 0.0) } else { c(0.0, 0.0) });
            let mut image: M = Mat::zeros(d, d);
            for km in k.operators() {
                image = &image + &(km * &unit * km.adjoint());
            }
            let col = rowvec(&image);
            for (r, z) in col.iter().enumerate() {
                assert!((sup.matrix[(r, i * d + j)] - z).norm() < 1e-14);
            }
        }
    }
}

fn swap_channel() -> resetlab::channel::KrausSet {
    let mut s: M = Mat::zeros(4, 4);
    for (i, j) in [(0, 0), (1, 2), (2, 1), (3, 3)] {
        s[(i, j)] = c(1.0, 0.0);
    }
    let prop = Propagator { u: DenseOperator::new(BasisTag::Full, s).unwrap(), t: 0.0 };
    kraus_from_unitary(&prop, &JointBasis::full(ChainLayout::new(1, 1).unwrap())).unwrap()
}

#[test]
fn swap_reset_replaces_the_state() {
    let k = swap_channel();
    let mut r = rng(3);
    let rho = DenseOperator::new(BasisTag::System, random_density(2, &mut r)).unwrap();
    let out = apply_channel(&k, &rho).unwrap();
    let zero = Mat::from_fn(2, 2, |i, j| if i == 0 && j == 0 { c(1.0, 0.0) } else { c(0.0, 0.0) });
    assert!(diff(&out.matrix().to_owned(), &zero) < 1e-15);

    let spec = full_spectrum(&superoperator_matrix(&k)).unwrap();
    let ev = spec.eigenvalues();
    assert!((ev[0] - c(1.0, 0.0)).norm() < 1e-12);
    for z in &ev[1..] {
        assert!(z.norm() < 1e-12);
    }
    let fixed = spec.fixed_point_state().unwrap();
    assert!(diff(&fixed, &zero) < 1e-12);
}

fn haar_channel(seed: u64) -> resetlab::channel::KrausSet {
    let u = haar_unitary(16, seed);
    let prop = Propagator { u: DenseOperator::new(BasisTag::Full, u).unwrap(), t: 0.0 };
    kraus_from_unitary(&prop, &JointBasis::full(ChainLayout::new(2, 2).unwrap())).unwrap()
}

#[test]
fn random_channel_spectrum_reconstructs_the_matrix() {
    for seed in [1, 2, 3] {
        let sup = superoperator_matrix(&haar_channel(seed));
        let spec = full_spectrum(&sup).unwrap();
        assert_eq!(spec.len(), 16);
        assert!(spec.max_residual() < 1e-10);
        assert!(spec.biorthonormality_error() < 1e-9);
        assert!(diff(&spec.reconstruct_superoperator(), &sup.matrix) < 1e-9);
        assert!(spec.conjugate_pairing_distance() < 1e-8);
        assert!((spec.modes[0].lambda - c(1.0, 0.0)).norm() < 1e-10);
    }
}

#[test]
fn eigen_expansion_matches_direct_powering() {
    let sup = superoperator_matrix(&haar_channel(7));
    let spec = full_spectrum(&sup).unwrap();
    let mut r = rng(8);
    let rho = random_density(4, &mut r);
    let coeffs = decompose_state(&spec, &DenseOperator::new(BasisTag::System, rho.clone()).unwrap()).unwrap();
    for n_r in [0, 1, 3, 10] {
        let direct = unrowvec(&apply_vec(&matpow(&sup.matrix, n_r), &rowvec(&rho)), 4);
        let predicted = evolve_by_modes(&spec, &coeffs, n_r);
        assert!(diff(&predicted, &direct) < 1e-9 * fro(&direct).max(1e-3), "n_r = {n_r}");
    }
}
