//! Four-mode protocols and definite-parity Kraus splitting.

mod common;

use common::rng;
use fermigauss::jw_fock::CMat;
use fermigauss::locc_sim::{
    apply_kraus, parity_operator, parity_split, run_protocol, seed4_protocol, seed4_symmetric_protocol,
    verify_deterministic, DeterminismCheck,
};
use fermigauss::slocc::seed_4mode_gabcd;
use nalgebra::Matrix2;
use num_complex::Complex64;
use rand::Rng;

fn cx(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn diag(d: [Complex64; 2]) -> Matrix2<Complex64> {
    Matrix2::new(d[0], cx(0.0, 0.0), cx(0.0, 0.0), d[1])
}

fn id() -> Matrix2<Complex64> {
    Matrix2::identity()
}

#[test]
fn seed4_identity_diagonal_is_trivial() {
    let seed = seed_4mode_gabcd(cx(1.0, 0.0), cx(1.0, 0.0), cx(1.0, 0.0), cx(-1.0, 0.0)).unwrap();
    let p = seed4_protocol([cx(1.0, 0.0), cx(1.0, 0.0)]).unwrap();
    for b in run_protocol(&seed, &p).unwrap() {
        assert!(b.state.overlap(&seed) > 1.0 - 1e-12);
    }
}

#[test]
fn seed4_protocol_reaches_target() {
    let seed = seed_4mode_gabcd(cx(1.0, 0.0), cx(1.0, 0.0), cx(1.0, 0.0), cx(-1.0, 0.0)).unwrap();
    let d1 = [cx(1.0, 0.0), cx(2.0, 0.0)];
    let target = seed.apply_product(&[diag(d1), id(), id(), id()]).unwrap();
    let p = seed4_protocol(d1).unwrap();
    assert_eq!(run_protocol(&seed, &p).unwrap().len(), 2);
    assert!(verify_deterministic(&seed, &target, &p, 1e-9, DeterminismCheck::Both).unwrap());
}

#[test]
fn seed4_protocol_any_gabcd_seed() {
    let mut r = rng(21);
    for _ in 0..20 {
        let mut z = || Complex64::from_polar(r.random_range(0.2..1.5), r.random_range(-3.0..3.0));
        let seed = seed_4mode_gabcd(z(), z(), z(), z()).unwrap();
        let d1 = [z(), z()];
        let target = seed.apply_product(&[diag(d1), id(), id(), id()]).unwrap();
        let p = seed4_protocol(d1).unwrap();
        assert!(verify_deterministic(&seed, &target, &p, 1e-9, DeterminismCheck::Exact).unwrap());
    }
}

#[test]
fn symmetric_seed_two_site_protocol() {
    let a = cx(0.8, 0.3);
    let seed = seed_4mode_gabcd(a, a, a * cx(0.0, 1.0), a * cx(0.0, 1.0)).unwrap();
    let d2 = [cx(1.5, 0.0), cx(0.5, 0.2)];
    let d3 = [cx(0.7, -0.1), cx(1.2, 0.0)];
    let target = seed.apply_product(&[id(), diag(d2), diag(d3), id()]).unwrap();
    let p = seed4_symmetric_protocol(d2, d3).unwrap();
    let branches = run_protocol(&seed, &p).unwrap();
    assert_eq!(branches.len(), 4);
    for b in &branches {
        assert!(b.state.overlap(&target) > 1.0 - 1e-12, "branch {:?}", b.transcript);
    }
}

#[test]
fn parity_split_matches_on_fermionic_basis() {
    let mut r = rng(22);
    for n in 1..=3 {
        let d = 1usize << n;
        let a = CMat::from_fn(d, d, |_, _| cx(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)));
        let p = parity_operator(n);
        let h = cx(0.5f64.sqrt(), 0.0);
        let mixed = vec![&a * h, &p * &a * &p * h];
        let (even, odd) = parity_split(&a);
        assert!((&even + &odd - &a).norm() < 1e-15);
        assert!((&p * &even * &p - &even).norm() < 1e-15);
        assert!((&p * &odd * &p + &odd).norm() < 1e-15);
        let split = vec![even, odd];
        for row in 0..d {
            for col in 0..d {
                if (row.count_ones() + col.count_ones()) % 2 != 0 {
                    continue;
                }
                let mut unit = CMat::zeros(d, d);
                unit[(row, col)] = cx(1.0, 0.0);
                let diff = apply_kraus(&mixed, &unit) - apply_kraus(&split, &unit);
                assert!(diff.norm() < 1e-13, "n={n} E_{row}{col}");
            }
        }
    }
}
