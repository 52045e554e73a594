//! Numerical kernels for real antisymmetric matrices.

use nalgebra::{DMatrix, Matrix2};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Absolute tolerance for the antisymmetry check.
pub const EPS_SYM: f64 = 1e-12;
/// Relative threshold for equal singular values and vanishing blocks.
pub const EPS_DEG: f64 = 1e-10;

/// The symplectic unit `[[0,1],[-1,0]]`.
pub fn j2() -> Matrix2<f64> {
    Matrix2::new(0.0, 1.0, -1.0, 0.0)
}

/// `R(a) = [[cos a, sin a], [-sin a, cos a]] = exp(a J2)`.
pub fn rot2(a: f64) -> Matrix2<f64> {
    let (s, c) = a.sin_cos();
    Matrix2::new(c, s, -s, c)
}

/// Angle `a` with `rot2(a) == m` for `m` in SO(2).
pub fn rot2_angle(m: &Matrix2<f64>) -> f64 {
    m[(0, 1)].atan2(m[(0, 0)])
}

/// Largest absolute entry of `a + aᵀ`.
pub fn antisymmetry_residual(a: &DMatrix<f64>) -> f64 {
    let n = a.nrows();
    let mut r: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            r = r.max((a[(i, j)] + a[(j, i)]).abs());
        }
    }
    r
}

/// Real antisymmetric matrix of even dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct AntisymmetricMatrix(DMatrix<f64>);

impl AntisymmetricMatrix {
    /// Validates and stores `(m - mᵀ)/2`.
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::NotSquare {
                rows: m.nrows(),
                cols: m.ncols(),
            });
        }
        if m.nrows() % 2 == 1 {
            return Err(Error::OddDimension(m.nrows()));
        }
        let r = antisymmetry_residual(&m);
        if r > EPS_SYM {
            return Err(Error::NotAntisymmetric(r));
        }
        Ok(Self::from_unchecked(m))
    }

    /// Projects onto the antisymmetric part without checking.
    pub fn from_unchecked(m: DMatrix<f64>) -> Self {
        let t = m.transpose();
        AntisymmetricMatrix((m - t) * 0.5)
    }

    pub fn zeros(dim: usize) -> Self {
        AntisymmetricMatrix(DMatrix::zeros(dim, dim))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    pub fn pfaffian(&self) -> f64 {
        pfaffian_unchecked(&self.0)
    }
}

/// Orthogonal block diagonalization `O A Oᵀ = ⊕ β_k J2`.
#[derive(Debug, Clone)]
pub struct BlockDiagonalForm {
    pub rotation: DMatrix<f64>,
    pub couplings: Vec<f64>,
}

impl BlockDiagonalForm {
    /// `⊕ β_k J2`.
    pub fn block_matrix(&self) -> DMatrix<f64> {
        let blocks: Vec<DMatrix<f64>> = self
            .couplings
            .iter()
            .map(|&b| DMatrix::from_row_slice(2, 2, &[0.0, b, -b, 0.0]))
            .collect();
        direct_sum(&blocks)
    }
}

/// Pfaffian of a real antisymmetric matrix.
pub fn pfaffian(a: &DMatrix<f64>) -> Result<f64> {
    if a.nrows() != a.ncols() {
        return Err(Error::NotSquare {
            rows: a.nrows(),
            cols: a.ncols(),
        });
    }
    if a.nrows() % 2 == 1 {
        return Err(Error::OddDimension(a.nrows()));
    }
    let r = antisymmetry_residual(a);
    if r > EPS_SYM {
        return Err(Error::NotAntisymmetric(r));
    }
    Ok(pfaffian_unchecked(a))
}

fn pfaffian_unchecked(a: &DMatrix<f64>) -> f64 {
    let n = a.nrows();
    match n {
        0 => 1.0,
        2 => a[(0, 1)],
        4 => {
            a[(0, 1)] * a[(2, 3)] - a[(0, 2)] * a[(1, 3)] + a[(0, 3)] * a[(1, 2)]
        }
        _ => pfaffian_parlett_reid(a.clone()),
    }
}

/// Skew tridiagonalization with partial pivoting.
fn pfaffian_parlett_reid(mut a: DMatrix<f64>) -> f64 {
    let n = a.nrows();
    let mut pf = 1.0;
    let mut k = 0;
    while k + 1 < n {
        let mut kp = k + 1;
        let mut best = a[(k + 1, k)].abs();
        for i in k + 2..n {
            if a[(i, k)].abs() > best {
                best = a[(i, k)].abs();
                kp = i;
            }
        }
        if kp != k + 1 {
            a.swap_rows(k + 1, kp);
            a.swap_columns(k + 1, kp);
            pf = -pf;
        }
        if a[(k + 1, k)] == 0.0 {
            return 0.0;
        }
        let piv = a[(k, k + 1)];
        pf *= piv;
        if k + 2 < n {
            let tau: Vec<f64> = (k + 2..n).map(|j| a[(k, j)] / piv).collect();
            let col: Vec<f64> = (k + 2..n).map(|i| a[(i, k + 1)]).collect();
            let m = n - k - 2;
            for r in 0..m {
                for c in 0..m {
                    a[(k + 2 + r, k + 2 + c)] += tau[r] * col[c] - col[r] * tau[c];
                }
            }
        }
        k += 2;
    }
    pf
}

fn gram_schmidt_rows(o: &mut DMatrix<f64>) {
    let n = o.nrows();
    gram_schmidt_rows_prefix(o, n);
}

/// Orthogonal block diagonalization of an antisymmetric matrix.
///
/// Couplings are sorted by decreasing modulus and made non-negative,
/// except that a negative sign forced by `det O = +1` sits in the last block.
pub fn antisymmetric_normal_form(a: &DMatrix<f64>) -> Result<BlockDiagonalForm> {
    if a.nrows() != a.ncols() {
        return Err(Error::NotSquare {
            rows: a.nrows(),
            cols: a.ncols(),
        });
    }
    let dim = a.nrows();
    if dim % 2 == 1 {
        return Err(Error::OddDimension(dim));
    }
    let r = antisymmetry_residual(a);
    if r > EPS_SYM.max(EPS_SYM * a.norm()) {
        return Err(Error::NotAntisymmetric(r));
    }
    let n = dim / 2;
    if n == 0 {
        return Ok(BlockDiagonalForm {
            rotation: DMatrix::zeros(0, 0),
            couplings: vec![],
        });
    }
    let a = AntisymmetricMatrix::from_unchecked(a.clone()).into_matrix();
    let scale = a.norm();
    let tol = EPS_DEG * scale.max(f64::MIN_POSITIVE);

    // iA is Hermitian; each β > 0 eigenvector z = x + i y spans a block.
    let h = a.map(|v| Complex64::new(0.0, v));
    let eig = nalgebra::SymmetricEigen::new(h);
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&p, &q| eig.eigenvalues[q].partial_cmp(&eig.eigenvalues[p]).unwrap());

    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(dim);
    for &k in order.iter().take(n) {
        if eig.eigenvalues[k] <= tol {
            break;
        }
        let z = eig.eigenvectors.column(k);
        let s2 = std::f64::consts::SQRT_2;
        rows.push(z.iter().map(|c| s2 * c.im).collect());
        rows.push(z.iter().map(|c| s2 * c.re).collect());
    }
    // complete the kernel with standard basis vectors
    let mut o = DMatrix::zeros(dim, dim);
    for (i, r) in rows.iter().enumerate() {
        for j in 0..dim {
            o[(i, j)] = r[j];
        }
    }
    let mut filled = rows.len();
    gram_schmidt_rows_prefix(&mut o, filled);
    let mut cand = 0;
    while filled < dim && cand < dim {
        let mut v = nalgebra::DVector::<f64>::zeros(dim);
        v[cand] = 1.0;
        for _ in 0..2 {
            for i in 0..filled {
                let d = o.row(i).transpose().dot(&v);
                v -= o.row(i).transpose() * d;
            }
        }
        let nv = v.norm();
        if nv > 1e-6 {
            for j in 0..dim {
                o[(filled, j)] = v[j] / nv;
            }
            filled += 1;
        }
        cand += 1;
    }
    gram_schmidt_rows(&mut o);

    let b = &o * &a * o.transpose();
    let mut blocks: Vec<(f64, usize)> = (0..n).map(|k| (b[(2 * k, 2 * k + 1)], k)).collect();
    blocks.sort_by(|x, y| y.0.abs().partial_cmp(&x.0.abs()).unwrap());
    let mut o2 = DMatrix::zeros(dim, dim);
    for (pos, &(beta, k)) in blocks.iter().enumerate() {
        let sgn = if beta < 0.0 { -1.0 } else { 1.0 };
        for j in 0..dim {
            o2[(2 * pos, j)] = o[(2 * k, j)];
            o2[(2 * pos + 1, j)] = sgn * o[(2 * k + 1, j)];
        }
    }
    if o2.determinant() < 0.0 {
        for j in 0..dim {
            o2[(dim - 1, j)] = -o2[(dim - 1, j)];
        }
    }
    let b = &o2 * &a * o2.transpose();
    let couplings = (0..n).map(|k| 0.5 * (b[(2 * k, 2 * k + 1)] - b[(2 * k + 1, 2 * k)])).collect();
    Ok(BlockDiagonalForm {
        rotation: o2,
        couplings,
    })
}

fn gram_schmidt_rows_prefix(o: &mut DMatrix<f64>, count: usize) {
    for _ in 0..2 {
        for i in 0..count {
            for j in 0..i {
                let d = o.row(i).dot(&o.row(j));
                let rj = o.row(j).clone_owned();
                let mut ri = o.row_mut(i);
                ri -= rj * d;
            }
            let nr = o.row(i).norm();
            if nr > 0.0 {
                o.row_mut(i).scale_mut(1.0 / nr);
            }
        }
    }
}

/// `O_left · M · O_rightᵀ = diag(d, d')` with both factors in SO(2), `d ≥ |d'|`.
#[derive(Debug, Clone, Copy)]
pub struct Svd2 {
    pub left: Matrix2<f64>,
    pub d: f64,
    pub d_prime: f64,
    pub right: Matrix2<f64>,
}

impl Svd2 {
    /// Singular values coincide within `eps` (relative to `d`).
    pub fn is_degenerate(&self, eps: f64) -> bool {
        self.d - self.d_prime.abs() < eps * self.d.max(f64::MIN_POSITIVE)
    }
}

/// Singular value decomposition restricted to SO(2) factors.
pub fn svd2_so(m: &Matrix2<f64>) -> Svd2 {
    let (a, b, c, d) = (m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
    let e = 0.5 * (a + d);
    let f = 0.5 * (a - d);
    let g = 0.5 * (b + c);
    let h = 0.5 * (c - b);
    let q = e.hypot(h);
    let r = f.hypot(g);
    let a1 = g.atan2(f);
    let a2 = h.atan2(e);
    let theta = 0.5 * (a2 - a1);
    let phi = 0.5 * (a2 + a1);
    // M = Rstd(φ) diag(q + r, q - r) Rstd(θ), Rstd(x) = rot2(-x)
    Svd2 {
        left: rot2(phi),
        d: q + r,
        d_prime: q - r,
        right: rot2(-theta),
    }
}

/// Block-diagonal assembly.
pub fn direct_sum(blocks: &[DMatrix<f64>]) -> DMatrix<f64> {
    let r: usize = blocks.iter().map(|b| b.nrows()).sum();
    let c: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = DMatrix::zeros(r, c);
    let (mut i, mut j) = (0, 0);
    for b in blocks {
        out.view_mut((i, j), (b.nrows(), b.ncols())).copy_from(b);
        i += b.nrows();
        j += b.ncols();
    }
    out
}

/// `‖O Oᵀ − I‖_max` and determinant.
pub fn orthogonality_defect(o: &DMatrix<f64>) -> f64 {
    let n = o.nrows();
    if o.ncols() != n {
        return f64::INFINITY;
    }
    (o * o.transpose() - DMatrix::<f64>::identity(n, n)).amax()
}

/// Checks that `o` is special orthogonal within `tol`.
pub fn is_special_orthogonal(o: &DMatrix<f64>, tol: f64) -> bool {
    orthogonality_defect(o) <= tol && (o.determinant() - 1.0).abs() <= tol
}

/// Largest singular value.
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone()
        .singular_values()
        .iter()
        .cloned()
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::random_antisymmetric;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn pfaffian_small_cases() {
        let j = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        assert_eq!(pfaffian(&j).unwrap(), 1.0);
        assert_eq!(pfaffian(&DMatrix::zeros(4, 4)).unwrap(), 0.0);
        assert_eq!(pfaffian(&DMatrix::zeros(0, 0)).unwrap(), 1.0);
        assert!(matches!(
            pfaffian(&DMatrix::zeros(3, 3)),
            Err(Error::OddDimension(3))
        ));
        let mut bad = j.clone();
        bad[(1, 0)] = 0.0;
        assert!(matches!(pfaffian(&bad), Err(Error::NotAntisymmetric(_))));
    }

    #[test]
    fn pfaffian_of_direct_sum_is_product() {
        let b = |x: f64| DMatrix::from_row_slice(2, 2, &[0.0, x, -x, 0.0]);
        let a = direct_sum(&[b(2.0), b(-3.0), b(0.5)]);
        assert!((pfaffian(&a).unwrap() + 3.0).abs() < 1e-14);
    }

    #[test]
    fn pfaffian_squared_is_determinant() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for dim in [2usize, 4, 6, 8, 10] {
            let a = random_antisymmetric(dim, &mut rng);
            let pf = pfaffian(&a).unwrap();
            let det = a.determinant();
            assert!((pf * pf - det).abs() <= 1e-9 * det.abs().max(1.0));
        }
    }

    #[test]
    fn large_pfaffian_matches_closed_form_on_embedded_block() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a4 = random_antisymmetric(4, &mut rng);
        let a = direct_sum(&[a4.clone(), DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0])]);
        assert!((pfaffian(&a).unwrap() - pfaffian(&a4).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn normal_form_reorders_blocks() {
        let b = |x: f64| DMatrix::from_row_slice(2, 2, &[0.0, x, -x, 0.0]);
        let a = direct_sum(&[b(0.3), b(0.7)]);
        let nf = antisymmetric_normal_form(&a).unwrap();
        assert!((nf.couplings[0] - 0.7).abs() < 1e-12);
        assert!((nf.couplings[1] - 0.3).abs() < 1e-12);
        let o = &nf.rotation;
        assert!(is_special_orthogonal(o, 1e-10));
        assert!((o * &a * o.transpose() - nf.block_matrix()).norm() < 1e-9);
    }

    #[test]
    fn normal_form_vacuum() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        let nf = antisymmetric_normal_form(&a).unwrap();
        assert!((nf.couplings[0].abs() - 1.0).abs() < 1e-12);
        let o = &nf.rotation;
        assert!((o * &a * o.transpose() - nf.block_matrix()).norm() < 1e-12);
        assert!(is_special_orthogonal(o, 1e-10));
    }

    #[test]
    fn normal_form_with_kernel() {
        let a = DMatrix::zeros(4, 4);
        let nf = antisymmetric_normal_form(&a).unwrap();
        assert_eq!(nf.couplings, vec![0.0, 0.0]);
        assert!(is_special_orthogonal(&nf.rotation, 1e-12));
    }

    #[test]
    fn svd2_examples() {
        let s = svd2_so(&Matrix2::identity());
        assert_eq!((s.d, s.d_prime), (1.0, 1.0));
        assert!((s.left - Matrix2::identity()).norm() < 1e-15);
        assert!((s.right - Matrix2::identity()).norm() < 1e-15);

        let m = Matrix2::new(1.0, 0.0, 0.0, -2.0);
        let s = svd2_so(&m);
        assert!((s.d - 2.0).abs() < 1e-14 && (s.d_prime + 1.0).abs() < 1e-14);
        let d = s.left * m * s.right.transpose();
        assert!((d - Matrix2::new(2.0, 0.0, 0.0, -1.0)).norm() < 1e-14);

        let m = rot2(0.4) * 1.7;
        let s = svd2_so(&m);
        assert!(s.is_degenerate(EPS_DEG));
        assert!((s.d - 1.7).abs() < 1e-14 && (s.d_prime - 1.7).abs() < 1e-14);

        let s = svd2_so(&Matrix2::zeros());
        assert_eq!((s.d, s.d_prime), (0.0, 0.0));
        assert!((s.left - Matrix2::identity()).norm() < 1e-15);
    }

    #[test]
    fn direct_sum_shapes() {
        assert_eq!(direct_sum(&[]).shape(), (0, 0));
        let a = direct_sum(&[DMatrix::from_element(1, 1, 2.0), DMatrix::identity(2, 2)]);
        assert_eq!(a.shape(), (3, 3));
        assert_eq!(a[(0, 0)], 2.0);
        assert_eq!(a[(2, 2)], 1.0);
        assert_eq!(a[(0, 1)], 0.0);
    }

    #[test]
    fn rot2_angle_round_trip() {
        for a in [-3.0, -1.0, 0.0, 0.5, 2.9] {
            assert!((rot2_angle(&rot2(a)) - a).abs() < 1e-14);
        }
        assert!((rot2(0.3) * j2() - j2() * rot2(0.3)).norm() < 1e-15);
    }
}
