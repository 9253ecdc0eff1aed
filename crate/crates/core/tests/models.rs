mod common;

use common::*;
use faer::Mat;
use resetlab::hamiltonians::{
    blockade_projector, build_aah, build_pxp, build_xx, build_xxx, default_omega, AahParams, ConstrainedBasis,
    PxpBasis, PxpParams, XxParams, XxxParams,
};
use resetlab::random::{random_density, rng};
use resetlab::spin_ops::{
    ghz_state, neel_state, partial_trace, pauli_on_site, product_state, total_sz, Axis, BasisTag, DenseOperator,
};

fn dense(m: M) -> DenseOperator {
    DenseOperator::new(BasisTag::Full, m).unwrap()
}

#[test]
fn site_paulis_match_kronecker_products() {
    for n in 1..=4 {
        for site in 0..n {
            for (axis, p) in [(Axis::X, sx()), (Axis::Y, sy()), (Axis::Z, sz())] {
                let ours = pauli_on_site(axis, site, n).unwrap();
                let oracle = local(&p, site, n);
                assert!(diff(&ours.matrix().to_owned(), &oracle) < 1e-15, "n={n} site={site} {axis:?}");
            }
        }
    }
}

#[test]
fn partial_trace_matches_index_summation() {
    let mut r = rng(11);
    let n = 4;
    let rho = random_density(1 << n, &mut r);
    let op = dense(rho.clone());
    for keep in [vec![0], vec![3], vec![0, 2], vec![1, 3], vec![0, 1, 2], vec![1, 2, 3]] {
        let ours = partial_trace(&op, &keep).unwrap();
        let oracle = ptrace(&rho, n, &keep);
        assert!(diff(&ours.matrix().to_owned(), &oracle) < 1e-14, "keep {keep:?}");
    }
}

#[test]
fn partial_trace_of_product_factorises() {
    let a = product_state("01").unwrap().density().matrix().to_owned();
    let b = ghz_state(2).unwrap().density().matrix().to_owned();
    let joint = dense(kron2(&a, &b));
    let left = partial_trace(&joint, &[0, 1]).unwrap();
    let right = partial_trace(&joint, &[2, 3]).unwrap();
    assert!(diff(&left.matrix().to_owned(), &a) < 1e-15);
    assert!(diff(&right.matrix().to_owned(), &b) < 1e-15);
}

#[test]
fn states_follow_msb_convention() {
    let s = product_state("100").unwrap();
    assert_eq!(s.amplitudes()[4], c(1.0, 0.0));
    let neel = neel_state(4).unwrap();
    assert_eq!(neel.amplitudes()[0b0101], c(1.0, 0.0));
    let sz_total = total_sz(3).unwrap();
    assert_eq!(sz_total.get(0, 0).re, 3.0);
    assert_eq!(sz_total.get(7, 7).re, -3.0);
}

fn xy_chain(n: usize, jxx: f64, jyy: f64, jzz: f64, jz: f64, omega: f64) -> M {
    let dim = 1 << n;
    let mut h: M = Mat::zeros(dim, dim);
    for m in 0..n - 1 {
        let pair = |p: &M| {
            let ops: Vec<M> = (0..n).map(|k| if k == m || k == m + 1 { p.clone() } else { eye(2) }).collect();
            chain(&ops)
        };
        h = &h + &sc(&pair(&sx()), jxx);
        h = &h + &sc(&pair(&sy()), jyy);
        h = &h + &sc(&pair(&sz()), jzz);
    }
    for m in 0..n {
        h = &h + &sc(&local(&sz(), m, n), jz * (omega * m as f64).cos());
    }
    h
}

#[test]
fn aah_and_xx_match_operator_sums() {
    let n = 5;
    let p = AahParams::new(1.0, 0.3, 0.7);
    let oracle = xy_chain(n, 1.0, 1.0, 0.3, 0.7, default_omega());
    assert!(diff(&build_aah(&p, n).unwrap().matrix().to_owned(), &oracle) < 1e-12);

    let q = XxParams { jxx: 0.8, jyy: 1.0, jzz: 0.1, jz: 0.4, omega: 1.3 };
    let oracle = xy_chain(n, 0.8, 1.0, 0.1, 0.4, 1.3);
    assert!(diff(&build_xx(&q, n).unwrap().matrix().to_owned(), &oracle) < 1e-12);
}

#[test]
fn three_body_term_matches_operator_sum() {
    let n = 5;
    let p = XxxParams { aah: AahParams::new(1.0, 0.1, 0.1), jxxx: 2.0 };
    let mut oracle = xy_chain(n, 1.0, 1.0, 0.1, 0.1, default_omega());
    for m in 1..n - 1 {
        let ops: Vec<M> = (0..n).map(|k| if k + 1 >= m && k <= m + 1 { sx() } else { eye(2) }).collect();
        oracle = &oracle + &sc(&chain(&ops), 2.0);
    }
    assert!(diff(&build_xxx(&p, n).unwrap().matrix().to_owned(), &oracle) < 1e-12);
}

#[test]
fn pxp_matches_projector_construction() {
    let n = 6;
    let p0 = Mat::from_fn(2, 2, |i, j| if i == 0 && j == 0 { c(1.0, 0.0) } else { c(0.0, 0.0) });
    let dim = 1 << n;
    let mut oracle: M = Mat::zeros(dim, dim);
    for m in 0..n {
        let ops: Vec<M> = (0..n)
            .map(|k| {
                if k == m {
                    sx()
                } else if k + 1 == m || k == m + 1 {
                    p0.clone()
                } else {
                    eye(2)
                }
            })
            .collect();
        oracle = &oracle + &sc(&chain(&ops), 0.5);
    }
    let full = build_pxp(&PxpParams { rabi: 1.0 }, n, PxpBasis::Full).unwrap();
    assert!(diff(&full.matrix().to_owned(), &oracle) < 1e-14);

    // The constrained matrix is the full one restricted to blockade states.
    let cb = ConstrainedBasis::new(n).unwrap();
    assert_eq!(cb.dim(), 21);
    let con = build_pxp(&PxpParams { rabi: 1.0 }, n, PxpBasis::Constrained).unwrap();
    let states = cb.states();
    let restricted = Mat::from_fn(cb.dim(), cb.dim(), |i, j| oracle[(states[i], states[j])]);
    assert!(diff(&con.matrix().to_owned(), &restricted) < 1e-14);

    for bond in 0..n - 1 {
        let proj = blockade_projector(bond, n).unwrap();
        assert!(full.commutator(&proj).unwrap().fro_norm() < 1e-14);
    }
}

#[test]
fn constrained_dimension_is_fibonacci() {
    let fib = [2, 3, 5, 8, 13, 21, 34, 55, 89, 144];
    for (k, &f) in fib.iter().enumerate() {
        assert_eq!(ConstrainedBasis::new(k + 1).unwrap().dim(), f);
    }
}
