//! Iterative normal form, criticality and SLOCC classes of pure states.

use nalgebra::Matrix2;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::jw_fock::{is_fermionic, single_mode_reduction, CVec, FockVector};
use crate::matalg::EPS_DEG;

/// Cumulative squared-norm threshold for the null cone.
pub const EPS_NULL: f64 = 1e-10;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// How [`normal_form_iterate`] stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    CriticalReached,
    NullCone,
    MaxIterPlateau,
}

/// Record of the normal-form iteration.
#[derive(Debug, Clone)]
pub struct NormalFormTrace {
    /// Completed sweeps over all sites.
    pub iterations: usize,
    /// Cumulative squared norm after each local step.
    pub norm_history: Vec<f64>,
    /// Normalized state; `None` in the null cone.
    pub final_state: Option<FockVector>,
    /// Accumulated diagonal operator per site, `[D_00, D_11]`.
    pub local_ops_product: Vec<[Complex64; 2]>,
    pub verdict: Verdict,
}

/// Trace distance-style deviation `‖ρ_i − I/2‖_1` of a 2×2 Hermitian reduction.
fn deviation_from_mixed(r: &Matrix2<Complex64>) -> f64 {
    let a = r[(0, 0)].re - 0.5;
    let d = r[(1, 1)].re - 0.5;
    let b = r[(0, 1)].norm();
    let mean = 0.5 * (a + d);
    let rad = (0.25 * (a - d) * (a - d) + b * b).sqrt();
    (mean + rad).abs() + (mean - rad).abs()
}

fn critical_unchecked(psi: &FockVector, tol: f64) -> bool {
    (0..psi.modes()).all(|s| deviation_from_mixed(&single_mode_reduction(psi, s)) <= tol)
}

/// Every single-mode reduction is within `tol` of `I/2` in trace norm.
pub fn is_critical(psi: &FockVector, tol: f64) -> Result<bool> {
    if !is_fermionic(psi) {
        return Err(Error::NotFermionic);
    }
    Ok(critical_unchecked(psi, tol))
}

/// Sweeps determinant-one diagonal operators over the sites until all
/// single-mode reductions are maximally mixed or the norm vanishes.
pub fn normal_form_iterate(psi: &FockVector, max_iter: usize, tol: f64) -> Result<NormalFormTrace> {
    if !is_fermionic(psi) {
        return Err(Error::NotFermionic);
    }
    let n = psi.modes();
    let mut state = psi.amplitudes().clone();
    let mut cumulative = 1.0;
    let mut history = Vec::new();
    let mut ops = vec![[ONE, ONE]; n];
    let mut iterations = 0;
    let mut current = psi.clone();
    let verdict = loop {
        if critical_unchecked(&current, tol) {
            break Verdict::CriticalReached;
        }
        if iterations >= max_iter {
            break Verdict::MaxIterPlateau;
        }
        let mut null = false;
        for site in 0..n {
            let r = single_mode_reduction(&current, site);
            let (p0, p1) = (r[(0, 0)].re, r[(1, 1)].re);
            let prod = p0 * p1;
            if !(prod > 0.0) {
                cumulative = 0.0;
                history.push(0.0);
                null = true;
                break;
            }
            let q = prod.powf(0.25);
            let x = [q / p0.sqrt(), q / p1.sqrt()];
            let shift = n - 1 - site;
            for k in 0..state.len() {
                state[k] *= x[(k >> shift) & 1];
            }
            ops[site][0] *= x[0];
            ops[site][1] *= x[1];
            let nrm2 = state.norm_squared();
            cumulative *= nrm2;
            history.push(cumulative);
            state.unscale_mut(nrm2.sqrt());
            current = FockVector::new(n, state.clone())?;
            if cumulative < EPS_NULL {
                null = true;
                break;
            }
        }
        iterations += 1;
        if null {
            break Verdict::NullCone;
        }
    };
    Ok(NormalFormTrace {
        iterations,
        norm_history: history,
        final_state: (verdict != Verdict::NullCone).then_some(current),
        local_ops_product: ops,
        verdict,
    })
}

/// SLOCC class label.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "label")]
pub enum SloccLabel {
    Separable,
    Biseparable { partition: String },
    GHZ3,
    W3,
    #[serde(rename = "G_abcd")]
    Gabcd { a: Complex64, b: Complex64, c: Complex64, d: Complex64 },
    #[serde(rename = "L_abc2")]
    Labc2 { a: Complex64, b: Complex64, c: Complex64 },
    #[serde(rename = "L_a2b2")]
    La2b2 { a: Complex64, b: Complex64 },
    NullCone4,
    NonGaussian { family: String },
    Unclassified,
}

impl SloccLabel {
    pub fn name(&self) -> &'static str {
        match self {
            SloccLabel::Separable => "Separable",
            SloccLabel::Biseparable { .. } => "Biseparable",
            SloccLabel::GHZ3 => "GHZ3",
            SloccLabel::W3 => "W3",
            SloccLabel::Gabcd { .. } => "G_abcd",
            SloccLabel::Labc2 { .. } => "L_abc2",
            SloccLabel::La2b2 { .. } => "L_a2b2",
            SloccLabel::NullCone4 => "NullCone4",
            SloccLabel::NonGaussian { .. } => "NonGaussian",
            SloccLabel::Unclassified => "Unclassified",
        }
    }
}

/// Even-parity amplitudes on `|000⟩, |011⟩, |101⟩, |110⟩` (after `X⊗X⊗X` for odd states).
pub fn three_mode_amplitudes(psi: &FockVector) -> Result<[Complex64; 4]> {
    if psi.modes() != 3 {
        return Err(Error::WrongModeCount {
            expected: 3,
            found: psi.modes(),
        });
    }
    let v = psi.amplitudes();
    match psi.parity() {
        None => Err(Error::NotFermionic),
        Some(false) => Ok([v[0b000], v[0b011], v[0b101], v[0b110]]),
        Some(true) => Ok([v[0b111], v[0b100], v[0b010], v[0b001]]),
    }
}

/// GHZ, W, biseparable or separable by the zero pattern of the amplitudes.
pub fn classify_3mode(psi: &FockVector) -> Result<SloccLabel> {
    let a = three_mode_amplitudes(psi)?;
    let max = a.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let nonzero: Vec<usize> = (0..4).filter(|&i| a[i].norm() >= EPS_DEG * max).collect();
    Ok(match nonzero.len() {
        4 => SloccLabel::GHZ3,
        3 => SloccLabel::W3,
        2 => {
            // the separated mode is the one whose occupation is shared by both terms
            let bits = [0b000usize, 0b011, 0b101, 0b110];
            let (x, y) = (bits[nonzero[0]], bits[nonzero[1]]);
            let same = !(x ^ y) & 0b111;
            let mode = (0..3).find(|m| same & (1 << (2 - m)) != 0).unwrap_or(0);
            let rest: Vec<String> = (0..3).filter(|&m| m != mode).map(|m| (m + 1).to_string()).collect();
            SloccLabel::Biseparable {
                partition: format!("{}|{}", mode + 1, rest.join("")),
            }
        }
        _ => SloccLabel::Separable,
    })
}

fn state4(terms: &[(usize, Complex64)]) -> Result<FockVector> {
    let mut v = CVec::zeros(16);
    for &(k, a) in terms {
        v[k] += a;
    }
    if v.norm() == 0.0 {
        return Err(Error::AllZero);
    }
    FockVector::new(4, v)
}

/// `a|Φ⁺⟩^{⊗2} + b|Φ⁻⟩^{⊗2} + c|Ψ⁺⟩^{⊗2} + d|Ψ⁻⟩^{⊗2}` on pairs (1,2), (3,4).
pub fn seed_4mode_gabcd(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Result<FockVector> {
    if [a, b, c, d].iter().all(|z| *z == ZERO) {
        return Err(Error::AllZero);
    }
    // Bell states as (two-bit index, amplitude) with 1/√2 dropped
    let phi_p = [(0b00, 1.0), (0b11, 1.0)];
    let phi_m = [(0b00, 1.0), (0b11, -1.0)];
    let psi_p = [(0b01, 1.0), (0b10, 1.0)];
    let psi_m = [(0b01, 1.0), (0b10, -1.0)];
    let mut terms = Vec::new();
    for (w, pair) in [(a, phi_p), (b, phi_m), (c, psi_p), (d, psi_m)] {
        for &(i, x) in &pair {
            for &(j, y) in &pair {
                terms.push(((i << 2) | j, w * (x * y)));
            }
        }
    }
    state4(&terms)
}

/// `(a+b)/2 (|0000⟩+|1111⟩) + (a−b)/2 (|0011⟩+|1100⟩) + c(|0101⟩+|1010⟩) + |0110⟩`.
pub fn seed_4mode_labc2(a: Complex64, b: Complex64, c: Complex64) -> Result<FockVector> {
    let p = (a + b) * 0.5;
    let m = (a - b) * 0.5;
    state4(&[
        (0b0000, p),
        (0b1111, p),
        (0b0011, m),
        (0b1100, m),
        (0b0101, c),
        (0b1010, c),
        (0b0110, ONE),
    ])
}

/// `a(|0000⟩+|1111⟩) + b(|0101⟩+|1010⟩) + |0110⟩ + |0011⟩`.
pub fn seed_4mode_la2b2(a: Complex64, b: Complex64) -> Result<FockVector> {
    state4(&[
        (0b0000, a),
        (0b1111, a),
        (0b0101, b),
        (0b1010, b),
        (0b0110, ONE),
        (0b0011, ONE),
    ])
}

/// `|1100⟩ + |1111⟩ + |1010⟩ + |0110⟩`.
pub fn seed_4mode_nullcone() -> FockVector {
    state4(&[(0b1100, ONE), (0b1111, ONE), (0b1010, ONE), (0b0110, ONE)]).expect("non-zero")
}

/// Applies the algebraic Gaussianity condition of a four-mode family.
pub fn classify_4mode_seed(params: &[Complex64], family: &str) -> Result<SloccLabel> {
    let scale = params.iter().map(|z| z.norm_sqr()).sum::<f64>().max(1.0);
    let zero = |z: Complex64| z.norm() <= 1e-9 * scale;
    let need = |k: usize| {
        if params.len() == k {
            Ok(())
        } else {
            Err(Error::SizeMismatch {
                expected: k,
                found: params.len(),
            })
        }
    };
    let non_gaussian = || SloccLabel::NonGaussian {
        family: family.to_string(),
    };
    Ok(match family {
        "G_abcd" => {
            need(4)?;
            let (a, b, c, d) = (params[0], params[1], params[2], params[3]);
            if zero(a * b + c * d) {
                SloccLabel::Gabcd { a, b, c, d }
            } else {
                non_gaussian()
            }
        }
        "L_abc2" => {
            need(3)?;
            let (a, b, c) = (params[0], params[1], params[2]);
            if zero(a * b + c * c) {
                SloccLabel::Labc2 { a, b, c }
            } else {
                non_gaussian()
            }
        }
        "L_a2b2" => {
            need(2)?;
            let (a, b) = (params[0], params[1]);
            if zero(a * a + b * b) {
                SloccLabel::La2b2 { a, b }
            } else {
                non_gaussian()
            }
        }
        "NullCone4" => SloccLabel::NullCone4,
        other => return Err(Error::UnknownFamily(other.to_string())),
    })
}
