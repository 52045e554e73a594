//! Independent oracles shared by the integration tests. Nothing here calls
//! into the library's Jordan–Wigner or standard-form code.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn pauli(k: char) -> CMat {
    let z = c(0.0, 0.0);
    let o = c(1.0, 0.0);
    let i = c(0.0, 1.0);
    match k {
        'I' => CMat::from_row_slice(2, 2, &[o, z, z, o]),
        'X' => CMat::from_row_slice(2, 2, &[z, o, o, z]),
        'Y' => CMat::from_row_slice(2, 2, &[z, -i, i, z]),
        'Z' => CMat::from_row_slice(2, 2, &[o, z, z, -o]),
        _ => unreachable!(),
    }
}

/// Kronecker product of Pauli letters, first letter on the most significant bit.
pub fn pauli_string(s: &str) -> CMat {
    s.chars().fold(CMat::identity(1, 1), |acc, k| acc.kronecker(&pauli(k)))
}

/// `c_{2j−1} = Z…Z X I…I`, `c_{2j} = Z…Z Y I…I` (0-based vector).
pub fn majoranas(n: usize) -> Vec<CMat> {
    let mut out = Vec::with_capacity(2 * n);
    for j in 0..n {
        for p in ['X', 'Y'] {
            let s: String = (0..n)
                .map(|k| if k < j { 'Z' } else if k == j { p } else { 'I' })
                .collect();
            out.push(pauli_string(&s));
        }
    }
    out
}

pub fn random_antisymmetric<R: Rng>(dim: usize, scale: f64, rng: &mut R) -> DMatrix<f64> {
    let mut a = DMatrix::zeros(dim, dim);
    for i in 0..dim {
        for j in i + 1..dim {
            let x: f64 = rng.random_range(-1.0..1.0) * scale;
            a[(i, j)] = x;
            a[(j, i)] = -x;
        }
    }
    a
}

/// `(i/4) Σ_kl G_kl c_k c_l`.
pub fn quadratic_hamiltonian(g: &DMatrix<f64>, cs: &[CMat]) -> CMat {
    let d = cs[0].nrows();
    let mut h = CMat::zeros(d, d);
    for k in 0..cs.len() {
        for l in 0..cs.len() {
            if k != l && g[(k, l)] != 0.0 {
                h += &cs[k] * &cs[l] * c(0.0, 0.25 * g[(k, l)]);
            }
        }
    }
    (&h + h.adjoint()) * c(0.5, 0.0)
}

/// `e^{−H} / tr e^{−H}` by Hermitian eigendecomposition.
pub fn gibbs(h: &CMat) -> CMat {
    let eig = h.clone().symmetric_eigen();
    let emin = eig.eigenvalues.min();
    let w = eig.eigenvalues.map(|e| c((-(e - emin)).exp(), 0.0));
    let u = &eig.eigenvectors;
    let rho = u * CMat::from_diagonal(&w) * u.adjoint();
    let tr = rho.trace();
    rho / tr
}

pub fn ground_state(h: &CMat) -> CVec {
    let eig = h.clone().symmetric_eigen();
    let k = eig.eigenvalues.imin();
    eig.eigenvectors.column(k).into_owned()
}

/// `γ_kl = i tr(ρ c_k c_l)` for `k ≠ l`.
pub fn oracle_cm(rho: &CMat, cs: &[CMat]) -> DMatrix<f64> {
    let m = cs.len();
    let mut g = DMatrix::zeros(m, m);
    for k in 0..m {
        for l in 0..m {
            if k != l {
                g[(k, l)] = (c(0.0, 1.0) * (rho * &cs[k] * &cs[l]).trace()).re;
            }
        }
    }
    g
}

/// All strictly increasing index sets (0-based) of even size `2..=max_order`.
pub fn even_subsets(m: usize, max_order: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for mask in 1u32..(1 << m) {
        let k = mask.count_ones() as usize;
        if k % 2 == 0 && k <= max_order {
            out.push((0..m).filter(|&i| mask >> i & 1 == 1).collect());
        }
    }
    out
}

pub fn ordered_product(cs: &[CMat], idx: &[usize]) -> CMat {
    let d = cs[0].nrows();
    idx.iter().fold(CMat::identity(d, d), |acc, &i| acc * &cs[i])
}

/// `i^p tr(ρ P)` for a product of `2p` Majoranas.
pub fn moment(rho: &CMat, prod: &CMat, order: usize) -> Complex64 {
    let mut t = c(0.0, 0.0);
    for r in 0..rho.nrows() {
        for k in 0..rho.ncols() {
            t += rho[(r, k)] * prod[(k, r)];
        }
    }
    c(0.0, 1.0).powu((order / 2) as u32) * t
}

pub fn rot2(a: f64) -> nalgebra::Matrix2<f64> {
    nalgebra::Matrix2::new(a.cos(), a.sin(), -a.sin(), a.cos())
}

fn local_matrix(angles: &[f64], flips: u32) -> DMatrix<f64> {
    let n = angles.len();
    let mut o = DMatrix::zeros(2 * n, 2 * n);
    for (i, &a) in angles.iter().enumerate() {
        let mut b = rot2(a);
        if flips >> i & 1 == 1 {
            b.row_mut(1).neg_mut();
        }
        o.view_mut((2 * i, 2 * i), (2, 2)).copy_from(&b);
    }
    o
}

fn glu_distance(a: &DMatrix<f64>, b: &DMatrix<f64>, angles: &[f64], flips: u32) -> f64 {
    let o = local_matrix(angles, flips);
    (&o * a * o.transpose() - b).norm()
}

/// `min ‖O a Oᵀ − b‖_F` over local rotations and Z flips, by grid search
/// followed by coordinate descent from the best grid points.
pub fn brute_force_glu_distance(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let n = a.nrows() / 2;
    let grid = 12usize;
    let step = std::f64::consts::TAU / grid as f64;
    let mut best = f64::INFINITY;
    for flips in 0..(1u32 << n) {
        let mut starts: Vec<(f64, Vec<f64>)> = Vec::new();
        for code in 0..grid.pow(n as u32) {
            let mut x = code;
            let angles: Vec<f64> = (0..n)
                .map(|_| {
                    let k = x % grid;
                    x /= grid;
                    k as f64 * step
                })
                .collect();
            starts.push((glu_distance(a, b, &angles, flips), angles));
        }
        starts.sort_by(|p, q| p.0.partial_cmp(&q.0).unwrap());
        for (mut f, mut x) in starts.into_iter().take(3) {
            let mut h = step / 2.0;
            while h > 1e-12 {
                let mut improved = false;
                for i in 0..n {
                    for s in [h, -h] {
                        x[i] += s;
                        let g = glu_distance(a, b, &x, flips);
                        if g < f {
                            f = g;
                            improved = true;
                        } else {
                            x[i] -= s;
                        }
                    }
                }
                if !improved {
                    h *= 0.5;
                }
            }
            best = best.min(f);
        }
    }
    best
}
