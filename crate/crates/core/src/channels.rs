//! Gaussian channels in Choi–Jamiolkowski form: the CJ state has CM
//! `E = [[A, B], [−Bᵀ, D]]` (output modes first) and the channel acts as
//! `Γ ↦ A + B Γ (D Γ + I)⁻¹ Bᵀ`.
//!
//! A channel counts as Gaussian separable when `E` is block diagonal across
//! the parties, each party owning its own output and input modes.

use nalgebra::{DMatrix, Matrix2};
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gfs_cm::{Bipartition, CovarianceMatrix, LocalOrthogonalSet, PHYSICAL_TOL, PURE_TOL};
use crate::matalg::{antisymmetry_residual, orthogonality_defect, EPS_DEG, EPS_SYM};
use crate::random::random_pure_cm;

/// Condition-number cutoff for `D Γ + I`.
const PENCIL_RCOND: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianChannel {
    in_modes: usize,
    out_modes: usize,
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    d: DMatrix<f64>,
}

impl GaussianChannel {
    /// Checks shapes, antisymmetry of `A` and `D`, and physicality of the CJ CM.
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>, d: DMatrix<f64>) -> Result<Self> {
        let ch = Self::new_unchecked(a, b, d)?;
        for m in [&ch.a, &ch.d] {
            let r = antisymmetry_residual(m);
            if r > EPS_SYM.max(EPS_SYM * m.norm()) {
                return Err(Error::NotAntisymmetric(r));
            }
        }
        let s = ch.cj_matrix().singular_values().max();
        if s > 1.0 + PHYSICAL_TOL {
            return Err(Error::NotPhysical(s));
        }
        Ok(ch)
    }

    /// Shape checks only.
    pub fn new_unchecked(a: DMatrix<f64>, b: DMatrix<f64>, d: DMatrix<f64>) -> Result<Self> {
        for m in [&a, &d] {
            if m.nrows() != m.ncols() {
                return Err(Error::NotSquare {
                    rows: m.nrows(),
                    cols: m.ncols(),
                });
            }
            if m.nrows() % 2 != 0 {
                return Err(Error::OddDimension(m.nrows()));
            }
        }
        if b.nrows() != a.nrows() {
            return Err(Error::DimensionMismatch {
                expected: a.nrows(),
                found: b.nrows(),
            });
        }
        if b.ncols() != d.nrows() {
            return Err(Error::DimensionMismatch {
                expected: d.nrows(),
                found: b.ncols(),
            });
        }
        Ok(GaussianChannel {
            in_modes: d.nrows() / 2,
            out_modes: a.nrows() / 2,
            a,
            b,
            d,
        })
    }

    /// Slices a CJ CM whose first `out_modes` modes are the output.
    pub fn from_cj(e: &CovarianceMatrix, out_modes: usize) -> Result<Self> {
        let g = e.gamma();
        let total = g.nrows();
        if 2 * out_modes > total {
            return Err(Error::DimensionMismatch {
                expected: total / 2,
                found: out_modes,
            });
        }
        let m2 = 2 * out_modes;
        let n2 = total - m2;
        Self::new(
            g.view((0, 0), (m2, m2)).into_owned(),
            g.view((0, m2), (m2, n2)).into_owned(),
            g.view((m2, m2), (n2, n2)).into_owned(),
        )
    }

    pub fn identity(modes: usize) -> Self {
        glu_channel(&DMatrix::identity(2 * modes, 2 * modes)).expect("identity is orthogonal")
    }

    pub fn in_modes(&self) -> usize {
        self.in_modes
    }

    pub fn out_modes(&self) -> usize {
        self.out_modes
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }

    pub fn d(&self) -> &DMatrix<f64> {
        &self.d
    }

    fn cj_matrix(&self) -> DMatrix<f64> {
        let (m2, n2) = (2 * self.out_modes, 2 * self.in_modes);
        let mut e = DMatrix::zeros(m2 + n2, m2 + n2);
        e.view_mut((0, 0), (m2, m2)).copy_from(&self.a);
        e.view_mut((0, m2), (m2, n2)).copy_from(&self.b);
        e.view_mut((m2, 0), (n2, m2)).copy_from(&(-self.b.transpose()));
        e.view_mut((m2, m2), (n2, n2)).copy_from(&self.d);
        e
    }

    /// Tensor product; the result orders modes as `self` then `other`.
    pub fn tensor(&self, other: &GaussianChannel) -> GaussianChannel {
        let block = |x: &DMatrix<f64>, y: &DMatrix<f64>| {
            let mut z = DMatrix::zeros(x.nrows() + y.nrows(), x.ncols() + y.ncols());
            z.view_mut((0, 0), x.shape()).copy_from(x);
            z.view_mut(x.shape(), y.shape()).copy_from(y);
            z
        };
        GaussianChannel {
            in_modes: self.in_modes + other.in_modes,
            out_modes: self.out_modes + other.out_modes,
            a: block(&self.a, &other.a),
            b: block(&self.b, &other.b),
            d: block(&self.d, &other.d),
        }
    }
}

/// CJ covariance matrix `[[A, B], [−Bᵀ, D]]`.
pub fn cj_cm(ch: &GaussianChannel) -> CovarianceMatrix {
    CovarianceMatrix::new_unchecked(ch.cj_matrix())
}

/// `A + B Γ (D Γ + I)⁻¹ Bᵀ`.
pub fn apply_channel_cm(ch: &GaussianChannel, gamma: &CovarianceMatrix) -> Result<CovarianceMatrix> {
    let g = gamma.gamma();
    if g.nrows() != 2 * ch.in_modes {
        return Err(Error::DimensionMismatch {
            expected: ch.in_modes,
            found: gamma.modes(),
        });
    }
    let n2 = g.nrows();
    let pencil = &ch.d * g + DMatrix::identity(n2, n2);
    let inv = checked_inverse(pencil)?;
    let out = &ch.a + &ch.b * g * inv * ch.b.transpose();
    // remove rounding asymmetry
    let out = (&out - out.transpose()) * 0.5;
    Ok(CovarianceMatrix::new_unchecked(out))
}

fn checked_inverse(m: DMatrix<f64>) -> Result<DMatrix<f64>> {
    if m.nrows() == 0 {
        return Ok(m);
    }
    let sv = m.singular_values();
    if sv.min() <= PENCIL_RCOND * sv.max().max(1.0) {
        return Err(Error::SingularPencil);
    }
    m.try_inverse().ok_or(Error::SingularPencil)
}

/// Conjugation `Γ ↦ O Γ Oᵀ` as the channel `(0, O, 0)`.
pub fn glu_channel(o: &DMatrix<f64>) -> Result<GaussianChannel> {
    if o.nrows() != o.ncols() {
        return Err(Error::NotSquare {
            rows: o.nrows(),
            cols: o.ncols(),
        });
    }
    if orthogonality_defect(o) > 1e-10 {
        return Err(Error::NotOrthogonal);
    }
    let n2 = o.nrows();
    GaussianChannel::new_unchecked(DMatrix::zeros(n2, n2), o.clone(), DMatrix::zeros(n2, n2))
}

/// `second ∘ first`: applying the result equals applying `first`, then `second`.
pub fn compose(second: &GaussianChannel, first: &GaussianChannel) -> Result<GaussianChannel> {
    if second.in_modes != first.out_modes {
        return Err(Error::DimensionMismatch {
            expected: first.out_modes,
            found: second.in_modes,
        });
    }
    let k2 = first.a.nrows();
    let id = DMatrix::<f64>::identity(k2, k2);
    // (I + D₂A₁)⁻¹ and its transpose (I + A₁D₂)⁻¹
    let left = checked_inverse(&id + &second.d * &first.a)?;
    let right = checked_inverse(&id + &first.a * &second.d)?;
    let a = &second.a + &second.b * &first.a * &left * second.b.transpose();
    let b = &second.b * &right * &first.b;
    let d = &first.d + first.b.transpose() * &second.d * &right * &first.b;
    let sym = |x: DMatrix<f64>| (&x - x.transpose()) * 0.5;
    GaussianChannel::new_unchecked(sym(a), b, sym(d))
}

fn party_labels(ch: &GaussianChannel, partition: &Bipartition) -> Result<Vec<usize>> {
    let labels = partition.labels();
    if labels.len() == ch.out_modes + ch.in_modes {
        Ok(labels.to_vec())
    } else if ch.out_modes == ch.in_modes && labels.len() == ch.in_modes {
        Ok(labels.iter().chain(labels.iter()).copied().collect())
    } else {
        Err(Error::BadPartition(format!(
            "{} labels for a channel with {} output and {} input modes",
            labels.len(),
            ch.out_modes,
            ch.in_modes
        )))
    }
}

/// CJ CM block diagonal across the parties.
///
/// `partition` labels either every mode of the CJ state (outputs first, then
/// inputs) or, for square channels, each mode index shared by its input and
/// output.
pub fn is_product_channel(ch: &GaussianChannel, partition: &Bipartition) -> Result<bool> {
    let labels = party_labels(ch, partition)?;
    let e = ch.cj_matrix();
    let tol = EPS_DEG * e.norm().max(1.0);
    for (i, &li) in labels.iter().enumerate() {
        for (j, &lj) in labels.iter().enumerate() {
            if li == lj {
                continue;
            }
            for r in 0..2 {
                for c in 0..2 {
                    if e[(2 * i + r, 2 * j + c)].abs() > tol {
                        return Ok(false);
                    }
                }
            }
        }
    }
    Ok(true)
}

/// One pure, fully entangled output of [`gsep_triviality_probe`].
#[derive(Debug, Clone, Serialize)]
pub struct ProbeHit {
    pub sample: usize,
    pub fitted: LocalOrthogonalSet,
    /// `‖Γ_out − O Γ Oᵀ‖_F` for the fitted local orthogonal `O`.
    pub residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ProbeReport {
    pub samples: usize,
    pub pure_outputs: usize,
    pub hits: Vec<ProbeHit>,
    /// Smallest purity residual seen over all outputs.
    pub min_purity_residual: f64,
}

/// No proper subset of modes is decoupled from its complement.
pub fn is_fully_entangled(cm: &CovarianceMatrix, tol: f64) -> bool {
    let n = cm.modes();
    if n <= 1 {
        return true;
    }
    let g = cm.gamma();
    // mode 0 always in the subset; enumerate the rest
    for mask in 0..(1u32 << (n - 1)) - 1 {
        let inside = |k: usize| k == 0 || (mask >> (k - 1)) & 1 == 1;
        let mut cross = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                if inside(i) && !inside(j) {
                    for r in 0..2 {
                        for c in 0..2 {
                            cross = cross.max(g[(2 * i + r, 2 * j + c)].abs());
                        }
                    }
                }
            }
        }
        if cross <= tol {
            return false;
        }
    }
    true
}

/// Nearest orthogonal matrix (polar factor).
fn polar(m: &Matrix2<f64>) -> Matrix2<f64> {
    let svd = m.svd(true, true);
    svd.u.unwrap() * svd.v_t.unwrap()
}

/// Samples random pure CMs, pushes them through a product channel, and
/// records outputs that are pure and fully entangled together with the best
/// local orthogonal explaining them. Statistical only.
pub fn gsep_triviality_probe<R: Rng + ?Sized>(
    ch: &GaussianChannel,
    samples: usize,
    rng: &mut R,
) -> Result<ProbeReport> {
    let n = ch.in_modes;
    if ch.out_modes != n || !is_product_channel(ch, &Bipartition::singletons(n))? {
        return Err(Error::NotSeparableChannel);
    }
    let blocks: Vec<Matrix2<f64>> = (0..n)
        .map(|k| {
            let v = ch.b.fixed_view::<2, 2>(2 * k, 2 * k);
            polar(&v.into_owned())
        })
        .collect();
    let fitted = LocalOrthogonalSet::from_matrices(&blocks);
    let o = fitted.full_matrix();
    let mut report = ProbeReport {
        samples,
        pure_outputs: 0,
        hits: Vec::new(),
        min_purity_residual: f64::INFINITY,
    };
    for s in 0..samples {
        let g = random_pure_cm(n, rng);
        let out = match apply_channel_cm(ch, &g) {
            Ok(x) => x,
            Err(Error::SingularPencil) => continue,
            Err(e) => return Err(e),
        };
        let pr = out.purity_residual();
        report.min_purity_residual = report.min_purity_residual.min(pr);
        if pr >= PURE_TOL {
            continue;
        }
        report.pure_outputs += 1;
        if is_fully_entangled(&out, 1e-8) && is_fully_entangled(&g, 1e-8) {
            let residual = (out.gamma() - &o * g.gamma() * o.transpose()).norm();
            report.hits.push(ProbeHit {
                sample: s,
                fitted: fitted.clone(),
                residual,
            });
        }
    }
    Ok(report)
}
