//! Covariance matrices of Gaussian fermionic states.

use nalgebra::{DMatrix, Matrix2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matalg::{
    antisymmetric_normal_form, antisymmetry_residual, direct_sum, is_special_orthogonal,
    pfaffian, rot2, rot2_angle, spectral_norm, AntisymmetricMatrix, EPS_DEG, EPS_SYM,
};

/// Tolerance on the largest singular value for physicality.
pub const PHYSICAL_TOL: f64 = 1e-9;
/// Frobenius tolerance on `γ² + I` for purity.
pub const PURE_TOL: f64 = 1e-8;

/// Real antisymmetric `2n × 2n` matrix `γ_kl = (i/2) tr(ρ [c_k, c_l])`.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceMatrix {
    modes: usize,
    gamma: AntisymmetricMatrix,
}

impl CovarianceMatrix {
    /// Checks shape and antisymmetry. Physicality is reported, not enforced.
    pub fn new(gamma: DMatrix<f64>) -> Result<Self> {
        let gamma = AntisymmetricMatrix::new(gamma)?;
        Ok(CovarianceMatrix {
            modes: gamma.dim() / 2,
            gamma,
        })
    }

    /// Antisymmetrizes without checking.
    pub fn new_unchecked(gamma: DMatrix<f64>) -> Self {
        let gamma = AntisymmetricMatrix::from_unchecked(gamma);
        CovarianceMatrix {
            modes: gamma.dim() / 2,
            gamma,
        }
    }

    /// Maximally mixed state.
    pub fn zeros(modes: usize) -> Self {
        Self::new_unchecked(DMatrix::zeros(2 * modes, 2 * modes))
    }

    /// Vacuum `⊕ −J2`.
    pub fn vacuum(modes: usize) -> Self {
        let b = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        Self::new_unchecked(direct_sum(&vec![b; modes]))
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn gamma(&self) -> &DMatrix<f64> {
        self.gamma.matrix()
    }

    /// The 2×2 block coupling modes `i` and `j` (0-based).
    pub fn block(&self, i: usize, j: usize) -> Matrix2<f64> {
        let g = self.gamma();
        Matrix2::new(
            g[(2 * i, 2 * j)],
            g[(2 * i, 2 * j + 1)],
            g[(2 * i + 1, 2 * j)],
            g[(2 * i + 1, 2 * j + 1)],
        )
    }

    pub fn max_singular_value(&self) -> f64 {
        spectral_norm(self.gamma())
    }

    pub fn is_physical(&self) -> bool {
        self.max_singular_value() <= 1.0 + PHYSICAL_TOL
    }

    pub fn purity_residual(&self) -> f64 {
        let g = self.gamma();
        let n = g.nrows();
        (g * g + DMatrix::<f64>::identity(n, n)).norm()
    }

    pub fn is_pure(&self) -> bool {
        self.purity_residual() < PURE_TOL
    }

    /// Williamson moduli `|μ_k|`, non-increasing.
    pub fn williamson_spectrum(&self) -> Vec<f64> {
        antisymmetric_normal_form(self.gamma())
            .map(|nf| nf.couplings.iter().map(|b| b.abs()).collect())
            .unwrap_or_default()
    }

    /// Restriction to a subset of modes, in the given order.
    pub fn restrict(&self, modes: &[usize]) -> CovarianceMatrix {
        let idx: Vec<usize> = modes.iter().flat_map(|&m| [2 * m, 2 * m + 1]).collect();
        let g = self.gamma();
        CovarianceMatrix::new_unchecked(DMatrix::from_fn(idx.len(), idx.len(), |r, c| {
            g[(idx[r], idx[c])]
        }))
    }

    /// `γ ⊕ γ'` for the tensor product of the two states.
    pub fn direct_sum(&self, other: &CovarianceMatrix) -> CovarianceMatrix {
        CovarianceMatrix::new_unchecked(direct_sum(&[self.gamma().clone(), other.gamma().clone()]))
    }
}

/// Per-mode `Ō_i = Z^{m_i} R(α_i)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalOrthogonalSet {
    pub angles: Vec<f64>,
    pub flips: Vec<bool>,
}

impl LocalOrthogonalSet {
    pub fn new(angles: Vec<f64>, flips: Vec<bool>) -> Result<Self> {
        if angles.len() != flips.len() {
            return Err(Error::SizeMismatch {
                expected: angles.len(),
                found: flips.len(),
            });
        }
        Ok(LocalOrthogonalSet { angles, flips })
    }

    pub fn identity(modes: usize) -> Self {
        LocalOrthogonalSet {
            angles: vec![0.0; modes],
            flips: vec![false; modes],
        }
    }

    /// Decomposes 2×2 orthogonal matrices into flip bit and angle.
    pub fn from_matrices(ms: &[Matrix2<f64>]) -> Self {
        let z = Matrix2::new(1.0, 0.0, 0.0, -1.0);
        let mut angles = Vec::with_capacity(ms.len());
        let mut flips = Vec::with_capacity(ms.len());
        for m in ms {
            let flip = m.determinant() < 0.0;
            let r = if flip { z * m } else { *m };
            angles.push(rot2_angle(&r));
            flips.push(flip);
        }
        LocalOrthogonalSet { angles, flips }
    }

    pub fn modes(&self) -> usize {
        self.angles.len()
    }

    pub fn matrix(&self, i: usize) -> Matrix2<f64> {
        let r = rot2(self.angles[i]);
        if self.flips[i] {
            Matrix2::new(1.0, 0.0, 0.0, -1.0) * r
        } else {
            r
        }
    }

    /// `⊕ Ō_i`.
    pub fn full_matrix(&self) -> DMatrix<f64> {
        let blocks: Vec<DMatrix<f64>> = (0..self.modes())
            .map(|i| {
                let m = self.matrix(i);
                DMatrix::from_row_slice(2, 2, &[m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]])
            })
            .collect();
        direct_sum(&blocks)
    }
}

/// Assignment of modes to parties.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bipartition {
    labels: Vec<usize>,
}

impl Bipartition {
    /// `labels[i]` is the party of mode `i`.
    pub fn new(labels: Vec<usize>) -> Self {
        Bipartition { labels }
    }

    /// First `k` modes to party 0, the rest to party 1.
    pub fn split_at(modes: usize, k: usize) -> Self {
        Bipartition {
            labels: (0..modes).map(|i| usize::from(i >= k)).collect(),
        }
    }

    /// One party per mode.
    pub fn singletons(modes: usize) -> Self {
        Bipartition {
            labels: (0..modes).collect(),
        }
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn modes(&self) -> usize {
        self.labels.len()
    }

    pub fn party_count(&self) -> usize {
        self.labels.iter().max().map_or(0, |m| m + 1)
    }

    pub fn modes_of(&self, party: usize) -> Vec<usize> {
        (0..self.labels.len())
            .filter(|&i| self.labels[i] == party)
            .collect()
    }

    fn check(&self, modes: usize) -> Result<()> {
        if self.labels.len() != modes {
            return Err(Error::SizeMismatch {
                expected: modes,
                found: self.labels.len(),
            });
        }
        Ok(())
    }
}

/// Outcome of [`validate_cm`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CmReport {
    pub antisymmetric: bool,
    pub physical: bool,
    pub pure: bool,
    pub williamson_spectrum: Vec<f64>,
}

/// Antisymmetry, physicality, purity and Williamson moduli of a candidate CM.
pub fn validate_cm(gamma: &DMatrix<f64>) -> Result<CmReport> {
    if gamma.nrows() != gamma.ncols() || gamma.nrows() % 2 == 1 {
        return Err(Error::DimensionMismatch {
            expected: 2 * (gamma.nrows() / 2),
            found: gamma.ncols(),
        });
    }
    let antisymmetric = antisymmetry_residual(gamma) <= EPS_SYM;
    let cm = CovarianceMatrix::new_unchecked(gamma.clone());
    let physical = spectral_norm(gamma) <= 1.0 + PHYSICAL_TOL;
    let pure = antisymmetric && cm.is_pure();
    Ok(CmReport {
        antisymmetric,
        physical,
        pure,
        williamson_spectrum: cm.williamson_spectrum(),
    })
}

/// `basisᵀ (⊕ −tanh(β_k/2) J2) basis`.
pub fn thermal_cm(betas: &[f64], basis: &DMatrix<f64>) -> Result<CovarianceMatrix> {
    let dim = 2 * betas.len();
    if basis.nrows() != dim || basis.ncols() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: basis.nrows(),
        });
    }
    if !is_special_orthogonal(basis, 1e-10) {
        return Err(Error::NotSpecialOrthogonal);
    }
    let blocks: Vec<DMatrix<f64>> = betas
        .iter()
        .map(|&b| {
            let mu = (b / 2.0).tanh();
            DMatrix::from_row_slice(2, 2, &[0.0, -mu, mu, 0.0])
        })
        .collect();
    Ok(CovarianceMatrix::new_unchecked(
        basis.transpose() * direct_sum(&blocks) * basis,
    ))
}

/// `i^p tr(ρ c_{j1} ⋯ c_{j2p}) = Pf(γ[J, J])` for strictly increasing 1-based indices.
pub fn wick_moment(cm: &CovarianceMatrix, indices: &[usize]) -> Result<f64> {
    let dim = 2 * cm.modes();
    if indices.len() % 2 == 1 {
        return Err(Error::BadIndices(format!("odd count {}", indices.len())));
    }
    for (k, &j) in indices.iter().enumerate() {
        if j == 0 || j > dim {
            return Err(Error::BadIndices(format!("index {j} outside 1..={dim}")));
        }
        if k > 0 && indices[k - 1] >= j {
            return Err(Error::BadIndices("indices not strictly increasing".into()));
        }
    }
    let g = cm.gamma();
    let sub = DMatrix::from_fn(indices.len(), indices.len(), |r, c| {
        g[(indices[r] - 1, indices[c] - 1)]
    });
    pfaffian(&sub)
}

/// `(⊕ Ō_i) γ (⊕ Ō_i)ᵀ`.
pub fn apply_local_orthogonal(
    cm: &CovarianceMatrix,
    ops: &LocalOrthogonalSet,
) -> Result<CovarianceMatrix> {
    if ops.modes() != cm.modes() {
        return Err(Error::SizeMismatch {
            expected: cm.modes(),
            found: ops.modes(),
        });
    }
    let o = ops.full_matrix();
    Ok(CovarianceMatrix::new_unchecked(&o * cm.gamma() * o.transpose()))
}

fn cross_index(partition: &Bipartition, dim: usize) -> (Vec<usize>, Vec<usize>) {
    let a: Vec<usize> = (0..dim).filter(|&k| partition.labels[k / 2] == 0).collect();
    let b: Vec<usize> = (0..dim).filter(|&k| partition.labels[k / 2] != 0).collect();
    (a, b)
}

/// Direct-sum test: every block between different parties vanishes.
pub fn is_s2pi_separable_cm(cm: &CovarianceMatrix, partition: &Bipartition) -> Result<bool> {
    partition.check(cm.modes())?;
    let g = cm.gamma();
    let tol = EPS_DEG * g.norm();
    let l = &partition.labels;
    for r in 0..g.nrows() {
        for c in 0..g.ncols() {
            if l[r / 2] != l[c / 2] && g[(r, c)].abs() > tol {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Inter-party correlation block `C` (party 0 against the rest).
pub fn correlation_block(cm: &CovarianceMatrix, partition: &Bipartition) -> Result<DMatrix<f64>> {
    partition.check(cm.modes())?;
    let g = cm.gamma();
    let (a, b) = cross_index(partition, g.nrows());
    Ok(DMatrix::from_fn(a.len(), b.len(), |r, c| g[(a[r], b[c])]))
}

/// Numerical rank of the inter-party correlation block.
pub fn correlation_rank(cm: &CovarianceMatrix, partition: &Bipartition) -> Result<usize> {
    let c = correlation_block(cm, partition)?;
    if c.is_empty() {
        return Ok(0);
    }
    let tol = EPS_DEG * cm.gamma().norm();
    Ok(c.singular_values().iter().filter(|&&s| s > tol).count())
}

/// CM of two copies with each party holding both of its copies' modes.
pub fn two_copies(
    cm: &CovarianceMatrix,
    partition: &Bipartition,
) -> Result<(CovarianceMatrix, Bipartition)> {
    partition.check(cm.modes())?;
    let n = cm.modes();
    let doubled = cm.direct_sum(cm);
    let mut order = Vec::with_capacity(2 * n);
    let mut labels = Vec::with_capacity(2 * n);
    for p in 0..partition.party_count() {
        for copy in 0..2 {
            for m in partition.modes_of(p) {
                order.push(copy * n + m);
                labels.push(p);
            }
        }
    }
    Ok((doubled.restrict(&order), Bipartition::new(labels)))
}

/// `(1 − 2p) γ0` with `γ0` pairing Majoranas 1 and 3 of a two-mode system.
pub fn fixture_gamma_p(p: f64) -> Result<CovarianceMatrix> {
    if !(0.0..=0.5).contains(&p) {
        return Err(Error::OutOfRange {
            value: p,
            lo: 0.0,
            hi: 0.5,
        });
    }
    let mut g = DMatrix::zeros(4, 4);
    g[(0, 2)] = 1.0 - 2.0 * p;
    g[(2, 0)] = -(1.0 - 2.0 * p);
    Ok(CovarianceMatrix::new_unchecked(g))
}
