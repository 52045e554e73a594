//! Jordan-Wigner representation on `n` qubits, mode 1 as the most significant bit.

use std::collections::HashMap;
use std::sync::{Arc, LazyLock, RwLock};

use nalgebra::{DMatrix, DVector, Matrix2};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::gfs_cm::CovarianceMatrix;
use crate::matalg::antisymmetric_normal_form;

pub type CVec = DVector<Complex64>;
pub type CMat = DMatrix<Complex64>;

/// Largest mode count for state vectors.
pub const MAX_MODES: usize = 8;
/// Largest mode count where the doubled space `4ⁿ` is materialized.
pub const MAX_DOUBLED_MODES: usize = 6;
/// Parity leakage threshold.
pub const PARITY_TOL: f64 = 1e-10;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Pure state over `2ⁿ` Fock basis states.
#[derive(Debug, Clone, PartialEq)]
pub struct FockVector {
    modes: usize,
    amps: CVec,
}

impl FockVector {
    /// Normalizes the amplitudes.
    pub fn new(modes: usize, amps: CVec) -> Result<Self> {
        if modes > MAX_MODES {
            return Err(Error::TooLarge {
                modes,
                max: MAX_MODES,
            });
        }
        if amps.len() != 1 << modes {
            return Err(Error::SizeMismatch {
                expected: 1 << modes,
                found: amps.len(),
            });
        }
        let nrm = amps.norm();
        if !(nrm > 1e-300) || !nrm.is_finite() {
            return Err(Error::InvalidState("zero or non-finite norm".into()));
        }
        Ok(FockVector {
            modes,
            amps: amps.unscale(nrm),
        })
    }

    pub fn from_slice(modes: usize, amps: &[Complex64]) -> Result<Self> {
        Self::new(modes, CVec::from_column_slice(amps))
    }

    pub fn from_real(modes: usize, amps: &[f64]) -> Result<Self> {
        Self::new(modes, CVec::from_iterator(amps.len(), amps.iter().map(|&a| Complex64::new(a, 0.0))))
    }

    /// Sum of basis states given as bit strings such as `"011"`.
    pub fn from_bitstrings(terms: &[(&str, Complex64)]) -> Result<Self> {
        let modes = terms
            .first()
            .map(|t| t.0.len())
            .ok_or_else(|| Error::InvalidState("no terms".into()))?;
        let mut amps = CVec::zeros(1 << modes);
        for (bits, a) in terms {
            if bits.len() != modes {
                return Err(Error::InvalidState(format!("bit string `{bits}` has wrong length")));
            }
            let k = usize::from_str_radix(bits, 2)
                .map_err(|_| Error::InvalidState(format!("bad bit string `{bits}`")))?;
            amps[k] += a;
        }
        Self::new(modes, amps)
    }

    /// Basis state `|k⟩`.
    pub fn basis(modes: usize, k: usize) -> Result<Self> {
        let mut amps = CVec::zeros(1 << modes);
        if k >= amps.len() {
            return Err(Error::IndexOutOfRange {
                index: k,
                max: amps.len() - 1,
            });
        }
        amps[k] = ONE;
        Self::new(modes, amps)
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn amplitudes(&self) -> &CVec {
        &self.amps
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &FockVector) -> Complex64 {
        self.amps.dotc(&other.amps)
    }

    /// `|⟨self|other⟩|`.
    pub fn overlap(&self, other: &FockVector) -> f64 {
        self.inner(other).norm()
    }

    /// `Some(false)` for even support, `Some(true)` for odd, `None` if mixed.
    pub fn parity(&self) -> Option<bool> {
        let (e, o) = parity_weights(&self.amps);
        if e.sqrt() * o.sqrt() >= PARITY_TOL {
            None
        } else {
            Some(o > e)
        }
    }

    pub fn to_density(&self) -> FockDensity {
        FockDensity {
            modes: self.modes,
            matrix: &self.amps * self.amps.adjoint(),
        }
    }

    /// Applies a single-qubit operator on mode `site` (0-based), renormalizing.
    pub fn apply_site(&self, site: usize, op: &Matrix2<Complex64>) -> Result<FockVector> {
        FockVector::new(self.modes, apply_site_op(&self.amps, self.modes, site, op))
    }

    /// Applies `⊗ op_i` over all modes, renormalizing.
    pub fn apply_product(&self, ops: &[Matrix2<Complex64>]) -> Result<FockVector> {
        if ops.len() != self.modes {
            return Err(Error::SizeMismatch {
                expected: self.modes,
                found: ops.len(),
            });
        }
        let mut v = self.amps.clone();
        for (s, op) in ops.iter().enumerate() {
            v = apply_site_op(&v, self.modes, s, op);
        }
        FockVector::new(self.modes, v)
    }
}

fn parity_weights(v: &CVec) -> (f64, f64) {
    let mut e = 0.0;
    let mut o = 0.0;
    for (k, a) in v.iter().enumerate() {
        if k.count_ones() % 2 == 0 {
            e += a.norm_sqr();
        } else {
            o += a.norm_sqr();
        }
    }
    (e, o)
}

/// Bit of mode `site` (0-based) in basis index `k`.
#[inline]
pub fn mode_bit(k: usize, modes: usize, site: usize) -> usize {
    (k >> (modes - 1 - site)) & 1
}

/// `(⊗ ... op_site ...) v` on the raw amplitude vector, no normalization.
pub fn apply_site_op(v: &CVec, modes: usize, site: usize, op: &Matrix2<Complex64>) -> CVec {
    let shift = modes - 1 - site;
    let mask = 1usize << shift;
    let mut out = CVec::zeros(v.len());
    for k in 0..v.len() {
        if k & mask != 0 {
            continue;
        }
        let (a0, a1) = (v[k], v[k | mask]);
        out[k] = op[(0, 0)] * a0 + op[(0, 1)] * a1;
        out[k | mask] = op[(1, 0)] * a0 + op[(1, 1)] * a1;
    }
    out
}

/// Dense density operator over `2ⁿ` Fock states.
#[derive(Debug, Clone, PartialEq)]
pub struct FockDensity {
    modes: usize,
    matrix: CMat,
}

impl FockDensity {
    /// Checks Hermiticity, unit trace and positivity (within `-1e-10`).
    pub fn new(modes: usize, matrix: CMat) -> Result<Self> {
        let dim = 1usize << modes;
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::SizeMismatch {
                expected: dim,
                found: matrix.nrows(),
            });
        }
        let herm = (&matrix - matrix.adjoint()).norm();
        if herm > 1e-10 {
            return Err(Error::InvalidState(format!("not Hermitian ({herm:.3e})")));
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > 1e-10 || tr.im.abs() > 1e-10 {
            return Err(Error::InvalidState(format!("trace {tr} is not 1")));
        }
        let matrix = (&matrix + matrix.adjoint()) * Complex64::new(0.5, 0.0);
        let min = nalgebra::SymmetricEigen::new(matrix.clone())
            .eigenvalues
            .min();
        if min < -1e-10 {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:.3e}")));
        }
        Ok(FockDensity { modes, matrix })
    }

    /// Skips validation.
    pub fn from_unchecked(modes: usize, matrix: CMat) -> Self {
        FockDensity { modes, matrix }
    }

    pub fn maximally_mixed(modes: usize) -> Self {
        let d = 1usize << modes;
        FockDensity {
            modes,
            matrix: CMat::identity(d, d).unscale(d as f64),
        }
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }
}

/// States in either representation.
pub trait FockState {
    fn modes(&self) -> usize;
    /// `‖P_e ρ P_o‖_F`.
    fn parity_leak(&self) -> f64;
    /// `i tr(ρ c_k c_l)` for 1-based `k ≠ l`.
    fn majorana_correlator(&self, k: usize, l: usize) -> Complex64;
}

impl FockState for FockVector {
    fn modes(&self) -> usize {
        self.modes
    }
    fn parity_leak(&self) -> f64 {
        let (e, o) = parity_weights(&self.amps);
        e.sqrt() * o.sqrt()
    }
    fn majorana_correlator(&self, k: usize, l: usize) -> Complex64 {
        let w = apply_majorana(&apply_majorana(&self.amps, self.modes, l), self.modes, k);
        I * self.amps.dotc(&w)
    }
}

impl FockState for FockDensity {
    fn modes(&self) -> usize {
        self.modes
    }
    fn parity_leak(&self) -> f64 {
        let d = self.matrix.nrows();
        let mut s = 0.0;
        for r in 0..d {
            for c in 0..d {
                if r.count_ones() % 2 == 0 && c.count_ones() % 2 == 1 {
                    s += self.matrix[(r, c)].norm_sqr();
                }
            }
        }
        s.sqrt()
    }
    fn majorana_correlator(&self, k: usize, l: usize) -> Complex64 {
        // tr(ρ c_k c_l) = Σ_j (c_k c_l)[σ(j), j]... via column action
        let d = self.matrix.nrows();
        let mut s = ZERO;
        for j in 0..d {
            let (j1, p1) = majorana_action(l, self.modes, j);
            let (j2, p2) = majorana_action(k, self.modes, j1);
            s += self.matrix[(j, j2)] * p1 * p2;
        }
        I * s
    }
}

/// True iff parity-offdiagonal blocks vanish.
pub fn is_fermionic<S: FockState + ?Sized>(state: &S) -> bool {
    state.parity_leak() < PARITY_TOL
}

/// `c_i |k⟩ = phase |k'⟩` for 1-based Majorana index `i`.
#[inline]
pub fn majorana_action(i: usize, modes: usize, k: usize) -> (usize, Complex64) {
    let site = (i - 1) / 2;
    let shift = modes - 1 - site;
    let before = (k >> (shift + 1)).count_ones();
    let bit = (k >> shift) & 1;
    let sign = if before % 2 == 0 { 1.0 } else { -1.0 };
    let phase = if i % 2 == 1 {
        Complex64::new(sign, 0.0)
    } else if bit == 0 {
        Complex64::new(0.0, sign)
    } else {
        Complex64::new(0.0, -sign)
    };
    (k ^ (1 << shift), phase)
}

/// `c_i v` without materializing the operator.
pub fn apply_majorana(v: &CVec, modes: usize, i: usize) -> CVec {
    let mut out = CVec::zeros(v.len());
    for k in 0..v.len() {
        let (k2, p) = majorana_action(i, modes, k);
        out[k2] = p * v[k];
    }
    out
}

/// Dense Jordan-Wigner Majorana operator.
#[derive(Debug, Clone)]
pub struct MajoranaOp {
    pub index: usize,
    pub matrix: Arc<CMat>,
}

static MAJORANA_CACHE: LazyLock<RwLock<HashMap<(usize, usize), Arc<CMat>>>> =
    LazyLock::new(|| RwLock::new(HashMap::new()));

/// `c_{2j−1} = Z^{⊗(j−1)} X I…`, `c_{2j} = Z^{⊗(j−1)} Y I…`.
pub fn majorana_matrix(i: usize, modes: usize) -> Result<MajoranaOp> {
    if i == 0 || i > 2 * modes {
        return Err(Error::IndexOutOfRange {
            index: i,
            max: 2 * modes,
        });
    }
    if modes > MAX_MODES {
        return Err(Error::TooLarge {
            modes,
            max: MAX_MODES,
        });
    }
    if let Some(m) = MAJORANA_CACHE.read().unwrap().get(&(i, modes)) {
        return Ok(MajoranaOp {
            index: i,
            matrix: m.clone(),
        });
    }
    let d = 1usize << modes;
    let mut m = CMat::zeros(d, d);
    for k in 0..d {
        let (k2, p) = majorana_action(i, modes, k);
        m[(k2, k)] = p;
    }
    let m = Arc::new(m);
    MAJORANA_CACHE
        .write()
        .unwrap()
        .entry((i, modes))
        .or_insert_with(|| m.clone());
    Ok(MajoranaOp { index: i, matrix: m })
}

/// `Λ = Σ_i c_i ⊗ c_i` acting on the doubled space.
#[derive(Debug, Clone, Copy)]
pub struct LambdaOperator {
    modes: usize,
}

/// The operator `Λ` for `n ≤ 6` modes.
pub fn lambda_operator(modes: usize) -> Result<LambdaOperator> {
    if modes > MAX_DOUBLED_MODES {
        return Err(Error::TooLarge {
            modes,
            max: MAX_DOUBLED_MODES,
        });
    }
    Ok(LambdaOperator { modes })
}

impl LambdaOperator {
    pub fn modes(&self) -> usize {
        self.modes
    }

    /// `Λ v` for `v` indexed as `a·2ⁿ + b`.
    pub fn apply(&self, v: &CVec) -> CVec {
        let n = self.modes;
        let d = 1usize << n;
        let mut out = CVec::zeros(d * d);
        for i in 1..=2 * n {
            for a in 0..d {
                let (a2, pa) = majorana_action(i, n, a);
                for b in 0..d {
                    let (b2, pb) = majorana_action(i, n, b);
                    out[a2 * d + b2] += pa * pb * v[a * d + b];
                }
            }
        }
        out
    }

    /// Dense `4ⁿ × 4ⁿ` matrix.
    pub fn to_dense(&self) -> CMat {
        let n = self.modes;
        let d = 1usize << n;
        let mut m = CMat::zeros(d * d, d * d);
        for i in 1..=2 * n {
            for a in 0..d {
                let (a2, pa) = majorana_action(i, n, a);
                for b in 0..d {
                    let (b2, pb) = majorana_action(i, n, b);
                    m[(a2 * d + b2, a * d + b)] += pa * pb;
                }
            }
        }
        m
    }
}

/// `‖Λ(ψ ⊗ ψ)‖`.
pub fn lambda_residual(psi: &FockVector) -> f64 {
    let n = psi.modes;
    let d = 1usize << n;
    let v = &psi.amps;
    let mut out = vec![ZERO; d * d];
    for i in 1..=2 * n {
        let w = apply_majorana(v, n, i);
        for a in 0..d {
            if w[a] == ZERO {
                continue;
            }
            for b in 0..d {
                out[a * d + b] += w[a] * w[b];
            }
        }
    }
    out.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Pure-state Gaussianity test `Λ(ψ ⊗ ψ) = 0`.
pub fn is_gaussian_pure(psi: &FockVector) -> Result<bool> {
    if !is_fermionic(psi) {
        return Err(Error::NotFermionic);
    }
    Ok(lambda_residual(psi) < 1e-9)
}

/// `‖[Λ, x ⊗ x]‖_F` for an even operator.
pub fn lambda_commutator_norm(x: &CMat, modes: usize) -> Result<f64> {
    let d = 1usize << modes;
    if x.nrows() != d || x.ncols() != d {
        return Err(Error::SizeMismatch {
            expected: d,
            found: x.nrows(),
        });
    }
    if modes > MAX_DOUBLED_MODES {
        return Err(Error::TooLarge {
            modes,
            max: MAX_DOUBLED_MODES,
        });
    }
    let mut odd = 0.0;
    for r in 0..d {
        for c in 0..d {
            if (r.count_ones() + c.count_ones()) % 2 == 1 {
                odd += x[(r, c)].norm_sqr();
            }
        }
    }
    if odd.sqrt() > PARITY_TOL * x.norm().max(1.0) {
        return Err(Error::NotEven);
    }
    let m = 2 * modes;
    // left[i] = c_i x, right[i] = x c_i
    let mut left = vec![CMat::zeros(d, d); m];
    let mut right = vec![CMat::zeros(d, d); m];
    for i in 0..m {
        for k in 0..d {
            let (k2, p) = majorana_action(i + 1, modes, k);
            for c in 0..d {
                left[i][(k2, c)] = p * x[(k, c)];
                right[i][(c, k2)] = x[(c, k)] * p;
            }
        }
    }
    let mut total = 0.0;
    let mut u = vec![ZERO; m];
    let mut w = vec![ZERO; m];
    for p in 0..d {
        for r in 0..d {
            for i in 0..m {
                u[i] = left[i][(p, r)];
                w[i] = right[i][(p, r)];
            }
            for q in 0..d {
                for s in 0..d {
                    let mut e = ZERO;
                    for i in 0..m {
                        e += u[i] * left[i][(q, s)] - w[i] * right[i][(q, s)];
                    }
                    total += e.norm_sqr();
                }
            }
        }
    }
    Ok(total.sqrt())
}

/// Operator Gaussianity test `[Λ, x ⊗ x] = 0`.
pub fn is_gaussian_operator(x: &CMat, modes: usize) -> Result<bool> {
    let r = lambda_commutator_norm(x, modes)?;
    Ok(r < 1e-8 * x.norm_squared())
}

/// Determinant test `det ρ_e = det ρ_o` for two modes.
pub fn is_gaussian_two_mode(rho: &FockDensity) -> Result<bool> {
    if rho.modes != 2 {
        return Err(Error::WrongModeCount {
            expected: 2,
            found: rho.modes,
        });
    }
    let m = &rho.matrix;
    let det = |a: usize, b: usize| m[(a, a)] * m[(b, b)] - m[(a, b)] * m[(b, a)];
    Ok((det(0, 3) - det(1, 2)).norm() < 1e-10)
}

/// `ψᵀ (X ⊗ Y ⊗ X ⊗ Y) ψ`.
pub fn xyxy_invariant(psi: &FockVector) -> Result<Complex64> {
    if psi.modes != 4 {
        return Err(Error::WrongModeCount {
            expected: 4,
            found: psi.modes,
        });
    }
    let x = pauli_x();
    let y = pauli_y();
    let mut v = psi.amps.clone();
    for (s, op) in [x, y, x, y].iter().enumerate() {
        v = apply_site_op(&v, 4, s, op);
    }
    Ok(psi.amps.dot(&v))
}

/// Four-mode pure-state test `⟨ψ*|XYXY|ψ⟩ = 0` in the computational basis.
pub fn is_gaussian_four_mode_pure(psi: &FockVector) -> Result<bool> {
    Ok(xyxy_invariant(psi)?.norm() < 1e-9)
}

/// `γ_kl = i tr(ρ c_k c_l)` for `k ≠ l`.
pub fn cm_from_state<S: FockState + ?Sized>(state: &S) -> Result<CovarianceMatrix> {
    if !is_fermionic(state) {
        return Err(Error::NotFermionic);
    }
    let dim = 2 * state.modes();
    let mut g = DMatrix::zeros(dim, dim);
    for k in 0..dim {
        for l in k + 1..dim {
            let v = state.majorana_correlator(k + 1, l + 1).re;
            g[(k, l)] = v;
            g[(l, k)] = -v;
        }
    }
    Ok(CovarianceMatrix::new_unchecked(g))
}

/// `i^p ⟨ψ| c_{j1} ⋯ c_{j2p} |ψ⟩` evaluated with explicit operators.
pub fn jw_moment(psi: &FockVector, indices: &[usize]) -> Complex64 {
    let mut v = psi.amps.clone();
    for &j in indices.iter().rev() {
        v = apply_majorana(&v, psi.modes, j);
    }
    let p = indices.len() / 2;
    I.powu(p as u32) * psi.amps.dotc(&v)
}

/// `i^p tr(ρ c_{j1} ⋯ c_{j2p})` evaluated with explicit operators.
pub fn jw_moment_density(rho: &FockDensity, indices: &[usize]) -> Complex64 {
    let d = rho.matrix.nrows();
    let mut s = ZERO;
    for j in 0..d {
        let mut k = j;
        let mut ph = ONE;
        for &i in indices.iter().rev() {
            let (k2, p) = majorana_action(i, rho.modes, k);
            k = k2;
            ph *= p;
        }
        s += rho.matrix[(j, k)] * ph;
    }
    let p = indices.len() / 2;
    I.powu(p as u32) * s
}

/// Density operator of the Gaussian state with CM `γ`.
///
/// Built as `2⁻ⁿ ∏_k (I + i β_k c'_{2k−1} c'_{2k})` with `c' = O c` from the
/// block normal form `O γ Oᵀ = ⊕ β_k J2`.
pub fn density_from_cm(cm: &CovarianceMatrix) -> Result<FockDensity> {
    let n = cm.modes();
    if n > MAX_DOUBLED_MODES {
        return Err(Error::TooLarge {
            modes: n,
            max: MAX_DOUBLED_MODES,
        });
    }
    if !cm.is_physical() {
        return Err(Error::NotPhysical(cm.max_singular_value()));
    }
    let nf = antisymmetric_normal_form(cm.gamma())?;
    let d = 1usize << n;
    let cs: Vec<Arc<CMat>> = (1..=2 * n)
        .map(|i| majorana_matrix(i, n).map(|m| m.matrix))
        .collect::<Result<_>>()?;
    let rotated = |row: usize| -> CMat {
        let mut m = CMat::zeros(d, d);
        for (b, c) in cs.iter().enumerate() {
            let w = nf.rotation[(row, b)];
            if w != 0.0 {
                m += c.as_ref() * Complex64::new(w, 0.0);
            }
        }
        m
    };
    let mut rho = CMat::identity(d, d).unscale(d as f64);
    for (k, &beta) in nf.couplings.iter().enumerate() {
        let f = CMat::identity(d, d) + rotated(2 * k) * rotated(2 * k + 1) * (I * beta);
        rho = rho * f;
    }
    let rho = (&rho + rho.adjoint()) * Complex64::new(0.5, 0.0);
    Ok(FockDensity::from_unchecked(n, rho))
}

/// State vector of a pure Gaussian CM (global phase fixed by the largest amplitude).
pub fn vector_from_cm(cm: &CovarianceMatrix) -> Result<FockVector> {
    if !cm.is_pure() {
        return Err(Error::NotPure);
    }
    let rho = density_from_cm(cm)?;
    let eig = nalgebra::SymmetricEigen::new(rho.matrix.clone());
    let k = eig.eigenvalues.imax();
    let v = eig.eigenvectors.column(k).clone_owned();
    let big = v.iter().cloned().max_by(|a, b| a.norm().partial_cmp(&b.norm()).unwrap()).unwrap();
    let phase = big.conj() / big.norm();
    FockVector::new(cm.modes(), v * phase)
}

/// Exchanges modes `site` and `site+1` (1-based) with phase `(−1)^{k_i k_{i+1}}`.
pub fn fermionic_swap(psi: &FockVector, site: usize) -> Result<FockVector> {
    let n = psi.modes;
    if site == 0 || site >= n {
        return Err(Error::IndexOutOfRange {
            index: site,
            max: n.saturating_sub(1),
        });
    }
    let mut out = CVec::zeros(psi.amps.len());
    for k in 0..psi.amps.len() {
        let (k2, s) = swap_index(k, n, site - 1);
        out[k2] = psi.amps[k] * s;
    }
    Ok(FockVector {
        modes: n,
        amps: out,
    })
}

fn swap_index(k: usize, modes: usize, site: usize) -> (usize, f64) {
    let a = mode_bit(k, modes, site);
    let b = mode_bit(k, modes, site + 1);
    let sa = modes - 1 - site;
    let sb = sa - 1;
    let k2 = (k & !(1 << sa) & !(1 << sb)) | (b << sa) | (a << sb);
    (k2, if a & b == 1 { -1.0 } else { 1.0 })
}

/// Fermionic swap on a density operator.
pub fn fermionic_swap_density(rho: &FockDensity, site: usize) -> Result<FockDensity> {
    let n = rho.modes;
    if site == 0 || site >= n {
        return Err(Error::IndexOutOfRange {
            index: site,
            max: n.saturating_sub(1),
        });
    }
    let d = rho.matrix.nrows();
    let map: Vec<(usize, f64)> = (0..d).map(|k| swap_index(k, n, site - 1)).collect();
    let mut out = CMat::zeros(d, d);
    for r in 0..d {
        for c in 0..d {
            out[(map[r].0, map[c].0)] = rho.matrix[(r, c)] * (map[r].1 * map[c].1);
        }
    }
    Ok(FockDensity {
        modes: n,
        matrix: out,
    })
}

/// Traces out mode `mode` (1-based) after swapping it to the last position.
pub fn fermionic_partial_trace(rho: &FockDensity, mode: usize) -> Result<FockDensity> {
    let n = rho.modes;
    if mode == 0 || mode > n {
        return Err(Error::IndexOutOfRange {
            index: mode,
            max: n,
        });
    }
    let mut r = rho.clone();
    for s in mode..n {
        r = fermionic_swap_density(&r, s)?;
    }
    let d = 1usize << (n - 1);
    let mut out = CMat::zeros(d, d);
    for a in 0..d {
        for b in 0..d {
            out[(a, b)] = r.matrix[(2 * a, 2 * b)] + r.matrix[(2 * a + 1, 2 * b + 1)];
        }
    }
    Ok(FockDensity {
        modes: n - 1,
        matrix: out,
    })
}

/// Reduced state of one mode (0-based) of a pure state.
pub fn single_mode_reduction(psi: &FockVector, site: usize) -> Matrix2<Complex64> {
    let n = psi.modes;
    let shift = n - 1 - site;
    let mask = 1usize << shift;
    let after_mask = mask - 1;
    let mut r = Matrix2::zeros();
    for k in 0..psi.amps.len() {
        if k & mask != 0 {
            continue;
        }
        let a0 = psi.amps[k];
        let a1 = psi.amps[k | mask];
        // moving the mode past the later ones costs (−1)^{#later} when occupied
        let s = if (k & after_mask).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
        r[(0, 0)] += a0 * a0.conj();
        r[(1, 1)] += a1 * a1.conj();
        r[(0, 1)] += a0 * a1.conj() * s;
        r[(1, 0)] += a1 * a0.conj() * s;
    }
    r
}

/// `Σ_k (1 + (−1)^{h(k)}) |k⟩`, normalized.
pub fn ghz_hadamard_state(modes: usize) -> Result<FockVector> {
    if modes < 2 {
        return Err(Error::OutOfRange {
            value: modes as f64,
            lo: 2.0,
            hi: MAX_MODES as f64,
        });
    }
    if modes > MAX_MODES {
        return Err(Error::TooLarge {
            modes,
            max: MAX_MODES,
        });
    }
    let amps = CVec::from_fn(1 << modes, |k, _| {
        if k.count_ones() % 2 == 0 {
            ONE
        } else {
            ZERO
        }
    });
    FockVector::new(modes, amps)
}

/// `(4F − 1)/3 |ψ⁻⟩⟨ψ⁻| + (1 − F)/3 · I`.
pub fn werner_state(f: f64) -> Result<FockDensity> {
    if !(0.0..=1.0).contains(&f) {
        return Err(Error::OutOfRange {
            value: f,
            lo: 0.0,
            hi: 1.0,
        });
    }
    let s = 1.0 / 2f64.sqrt();
    let psi = CVec::from_vec(vec![ZERO, Complex64::new(s, 0.0), Complex64::new(-s, 0.0), ZERO]);
    let m = &psi * psi.adjoint() * Complex64::new((4.0 * f - 1.0) / 3.0, 0.0)
        + CMat::identity(4, 4) * Complex64::new((1.0 - f) / 3.0, 0.0);
    Ok(FockDensity::from_unchecked(2, m))
}

pub fn pauli_x() -> Matrix2<Complex64> {
    Matrix2::new(ZERO, ONE, ONE, ZERO)
}

pub fn pauli_y() -> Matrix2<Complex64> {
    Matrix2::new(ZERO, -I, I, ZERO)
}

pub fn pauli_z() -> Matrix2<Complex64> {
    Matrix2::new(ONE, ZERO, ZERO, -ONE)
}
