//! Seeded samplers for matrices, covariance matrices and local operations.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::gfs_cm::{CovarianceMatrix, LocalOrthogonalSet};
use crate::matalg::direct_sum;

fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

/// Gaussian antisymmetric matrix.
pub fn random_antisymmetric<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DMatrix<f64> {
    let mut a = DMatrix::zeros(dim, dim);
    for i in 0..dim {
        for j in i + 1..dim {
            let v = normal(rng);
            a[(i, j)] = v;
            a[(j, i)] = -v;
        }
    }
    a
}

/// Haar-distributed orthogonal matrix.
pub fn random_orthogonal<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DMatrix<f64> {
    let g = DMatrix::from_fn(dim, dim, |_, _| normal(rng));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..dim {
        if r[(j, j)] < 0.0 {
            for i in 0..dim {
                q[(i, j)] = -q[(i, j)];
            }
        }
    }
    q
}

/// Haar-distributed special orthogonal matrix.
pub fn random_special_orthogonal<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DMatrix<f64> {
    let mut q = random_orthogonal(dim, rng);
    if dim > 0 && q.determinant() < 0.0 {
        for i in 0..dim {
            q[(i, 0)] = -q[(i, 0)];
        }
    }
    q
}

/// Mixed CM `Oᵀ (⊕ −μ_k J2) O` with `μ_k` uniform in `[-1, 1]`.
pub fn random_physical_cm<R: Rng + ?Sized>(modes: usize, rng: &mut R) -> CovarianceMatrix {
    let mus: Vec<f64> = (0..modes).map(|_| rng.random_range(-1.0..1.0)).collect();
    cm_from_mus(&mus, rng)
}

/// Pure CM `Oᵀ (⊕ −J2) O`.
pub fn random_pure_cm<R: Rng + ?Sized>(modes: usize, rng: &mut R) -> CovarianceMatrix {
    let mus = vec![1.0; modes];
    cm_from_mus(&mus, rng)
}

fn cm_from_mus<R: Rng + ?Sized>(mus: &[f64], rng: &mut R) -> CovarianceMatrix {
    let blocks: Vec<DMatrix<f64>> = mus
        .iter()
        .map(|&m| DMatrix::from_row_slice(2, 2, &[0.0, -m, m, 0.0]))
        .collect();
    let core = direct_sum(&blocks);
    let o = random_special_orthogonal(2 * mus.len(), rng);
    CovarianceMatrix::new_unchecked(o.transpose() * core * o)
}

/// Uniform angles with random flips (or none).
pub fn random_local_orthogonals<R: Rng + ?Sized>(
    modes: usize,
    with_flips: bool,
    rng: &mut R,
) -> LocalOrthogonalSet {
    let angles = (0..modes)
        .map(|_| rng.random_range(-std::f64::consts::PI..std::f64::consts::PI))
        .collect();
    let flips = (0..modes)
        .map(|_| with_flips && rng.random_bool(0.5))
        .collect();
    LocalOrthogonalSet::new(angles, flips).expect("lengths match")
}

/// Complex Gaussian vector, normalized.
pub fn random_unit_vector<R: Rng + ?Sized>(len: usize, rng: &mut R) -> DVector<Complex64> {
    let v = DVector::from_fn(len, |_, _| Complex64::new(normal(rng), normal(rng)));
    let n = v.norm();
    v / Complex64::new(n, 0.0)
}

/// Random complex number with standard normal parts.
pub fn random_complex<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    Complex64::new(normal(rng), normal(rng))
}
