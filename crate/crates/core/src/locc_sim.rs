//! Local instruments with Kraus operators `X^k·D`, branching protocols and
//! the symmetry-averaging feasibility problem behind deterministic
//! local transformations.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector, Matrix2};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::glu_standard::{standard_form, StandardFormResult};
use crate::jw_fock::{apply_site_op, cm_from_state, CMat, FockVector};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Branches below this probability are dropped.
pub const BRANCH_CUTOFF: f64 = 1e-12;
/// Completeness tolerance of an instrument.
pub const COMPLETENESS_TOL: f64 = 1e-9;
/// Residual below which the feasibility problem counts as solved.
pub const FEASIBILITY_TOL: f64 = 1e-8;

/// `X^flip · diag(d0, d1)` on one mode (1-based `site`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalKraus {
    pub site: usize,
    pub flip: bool,
    pub diag: [Complex64; 2],
}

impl LocalKraus {
    pub fn new(site: usize, flip: bool, diag: [Complex64; 2]) -> Self {
        LocalKraus { site, flip, diag }
    }

    pub fn identity(site: usize) -> Self {
        Self::new(site, false, [ONE, ONE])
    }

    pub fn x(site: usize) -> Self {
        Self::new(site, true, [ONE, ONE])
    }

    /// `Y = X · diag(i, −i)`.
    pub fn y(site: usize) -> Self {
        Self::new(site, true, [I, -I])
    }

    pub fn z(site: usize) -> Self {
        Self::new(site, false, [ONE, -ONE])
    }

    pub fn matrix(&self) -> Matrix2<Complex64> {
        let [d0, d1] = self.diag;
        if self.flip {
            Matrix2::new(ZERO, d1, d0, ZERO)
        } else {
            Matrix2::new(d0, ZERO, ZERO, d1)
        }
    }
}

/// One local measurement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instrument {
    pub site: usize,
    pub branches: Vec<LocalKraus>,
}

impl Instrument {
    /// Checks that all branches act on `site` and `Σ K†K = I`.
    pub fn new(site: usize, branches: Vec<LocalKraus>) -> Result<Self> {
        if let Some(b) = branches.iter().find(|b| b.site != site) {
            return Err(Error::BadIndices(format!(
                "branch on site {} in instrument for site {site}",
                b.site
            )));
        }
        let ins = Instrument { site, branches };
        let r = ins.completeness_residual();
        if r > COMPLETENESS_TOL {
            return Err(Error::IncompleteInstrument(r));
        }
        Ok(ins)
    }

    pub fn trivial(site: usize) -> Self {
        Instrument {
            site,
            branches: vec![LocalKraus::identity(site)],
        }
    }

    /// `{D, D X} / √tr(D†D)`.
    pub fn diagonal_pair(site: usize, d: [Complex64; 2]) -> Result<Self> {
        if d.iter().any(|z| z.norm() == 0.0) {
            return Err(Error::SingularDiagonal);
        }
        let s = (d[0].norm_sqr() + d[1].norm_sqr()).sqrt();
        let k0 = LocalKraus::new(site, false, [d[0] / s, d[1] / s]);
        // D X = X · diag(d1, d0)
        let k1 = LocalKraus::new(site, true, [d[1] / s, d[0] / s]);
        Instrument::new(site, vec![k0, k1])
    }

    /// `‖Σ K†K − I‖_max`.
    pub fn completeness_residual(&self) -> f64 {
        let mut s = Matrix2::<Complex64>::zeros();
        for b in &self.branches {
            let m = b.matrix();
            s += m.adjoint() * m;
        }
        (s - Matrix2::identity()).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

/// Instrument plus outcome-dependent corrections keyed by transcript prefix
/// (outcomes joined by commas, e.g. `"0,1"`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Round {
    pub instrument: Instrument,
    #[serde(default)]
    pub corrections: BTreeMap<String, Vec<LocalKraus>>,
}

/// Finite sequence of rounds.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Protocol {
    pub rounds: Vec<Round>,
}

/// A surviving branch with its accumulated per-site operators.
#[derive(Debug, Clone)]
pub struct BranchOutcome {
    pub probability: f64,
    pub state: FockVector,
    pub transcript: Vec<usize>,
    pub operators: Vec<Matrix2<Complex64>>,
}

impl BranchOutcome {
    pub fn transcript_key(&self) -> String {
        transcript_key(&self.transcript)
    }
}

fn transcript_key(t: &[usize]) -> String {
    t.iter().map(|k| k.to_string()).collect::<Vec<_>>().join(",")
}

fn check_site(site: usize, modes: usize) -> Result<()> {
    if site == 0 || site > modes {
        return Err(Error::IndexOutOfRange {
            index: site,
            max: modes,
        });
    }
    Ok(())
}

fn apply_local(
    v: &crate::jw_fock::CVec,
    modes: usize,
    k: &LocalKraus,
) -> Result<crate::jw_fock::CVec> {
    check_site(k.site, modes)?;
    Ok(apply_site_op(v, modes, k.site - 1, &k.matrix()))
}

fn expand(
    branch: &BranchOutcome,
    ins: &Instrument,
) -> Result<Vec<BranchOutcome>> {
    let n = branch.state.modes();
    check_site(ins.site, n)?;
    let r = ins.completeness_residual();
    if r > COMPLETENESS_TOL {
        return Err(Error::IncompleteInstrument(r));
    }
    let mut out = Vec::new();
    for (b, k) in ins.branches.iter().enumerate() {
        let v = apply_local(branch.state.amplitudes(), n, k)?;
        let p = v.norm_squared();
        if p < BRANCH_CUTOFF {
            continue;
        }
        let mut ops = branch.operators.clone();
        ops[k.site - 1] = k.matrix() * ops[k.site - 1];
        let mut transcript = branch.transcript.clone();
        transcript.push(b);
        out.push(BranchOutcome {
            probability: branch.probability * p,
            state: FockVector::new(n, v)?,
            transcript,
            operators: ops,
        });
    }
    Ok(out)
}

fn root(psi: &FockVector) -> BranchOutcome {
    BranchOutcome {
        probability: 1.0,
        state: psi.clone(),
        transcript: vec![],
        operators: vec![Matrix2::identity(); psi.modes()],
    }
}

/// Branches of one measurement; post-states normalized.
pub fn apply_instrument(psi: &FockVector, ins: &Instrument) -> Result<Vec<BranchOutcome>> {
    expand(&root(psi), ins)
}

/// Expands every branch of every round and applies the matching corrections.
pub fn run_protocol(psi: &FockVector, protocol: &Protocol) -> Result<Vec<BranchOutcome>> {
    let mut branches = vec![root(psi)];
    for round in &protocol.rounds {
        let mut next = Vec::new();
        for b in &branches {
            for mut child in expand(b, &round.instrument)? {
                if let Some(fix) = round.corrections.get(&child.transcript_key()) {
                    let n = child.state.modes();
                    let mut v = child.state.amplitudes().clone();
                    for k in fix {
                        v = apply_local(&v, n, k)?;
                        child.operators[k.site - 1] = k.matrix() * child.operators[k.site - 1];
                    }
                    child.state = FockVector::new(n, v)?;
                }
                next.push(child);
            }
        }
        branches = next;
    }
    Ok(branches)
}

/// Two rounds on sites 1 and 2 measuring `{D_i, D_i X}`; site 3 applies
/// `X^{k1+k2}`. Maps the three-mode GHZ state to `D1⊗D2⊗I` applied to it.
pub fn ghz3_protocol(d1: [f64; 2], d2: [f64; 2]) -> Result<Protocol> {
    let c = |d: [f64; 2]| [Complex64::new(d[0], 0.0), Complex64::new(d[1], 0.0)];
    let r1 = Round {
        instrument: Instrument::diagonal_pair(1, c(d1))?,
        corrections: BTreeMap::new(),
    };
    let mut fix = BTreeMap::new();
    fix.insert("0,1".to_string(), vec![LocalKraus::x(3)]);
    fix.insert("1,0".to_string(), vec![LocalKraus::x(3)]);
    let r2 = Round {
        instrument: Instrument::diagonal_pair(2, c(d2))?,
        corrections: fix,
    };
    Ok(Protocol {
        rounds: vec![r1, r2],
    })
}

/// [`ghz3_protocol`] without the correction on site 3.
pub fn ghz3_protocol_uncorrected(d1: [f64; 2], d2: [f64; 2]) -> Result<Protocol> {
    let mut p = ghz3_protocol(d1, d2)?;
    for r in &mut p.rounds {
        r.corrections.clear();
    }
    Ok(p)
}

/// Site 1 measures `{D1, D1 X}`; on the second outcome sites 2–4 apply `X`.
pub fn seed4_protocol(d1: [Complex64; 2]) -> Result<Protocol> {
    let mut fix = BTreeMap::new();
    fix.insert(
        "1".to_string(),
        vec![LocalKraus::x(2), LocalKraus::x(3), LocalKraus::x(4)],
    );
    Ok(Protocol {
        rounds: vec![Round {
            instrument: Instrument::diagonal_pair(1, d1)?,
            corrections: fix,
        }],
    })
}

/// Sites 2 and 3 measure `{D, D X}`; outcomes are undone with the symmetries
/// `Z⊗X⊗I⊗Y` and `Y⊗I⊗X⊗Z` of seeds with `a = b`, `c = d = i a`.
pub fn seed4_symmetric_protocol(d2: [Complex64; 2], d3: [Complex64; 2]) -> Result<Protocol> {
    let mut fix2 = BTreeMap::new();
    fix2.insert("1".to_string(), vec![LocalKraus::z(1), LocalKraus::y(4)]);
    let mut fix3 = BTreeMap::new();
    for k in ["0,1", "1,1"] {
        fix3.insert(k.to_string(), vec![LocalKraus::y(1), LocalKraus::z(4)]);
    }
    Ok(Protocol {
        rounds: vec![
            Round {
                instrument: Instrument::diagonal_pair(2, d2)?,
                corrections: fix2,
            },
            Round {
                instrument: Instrument::diagonal_pair(3, d3)?,
                corrections: fix3,
            },
        ],
    })
}

/// Which notion of equality [`verify_deterministic`] applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DeterminismCheck {
    /// `|⟨branch|target⟩| > 1 − tol`.
    Exact,
    /// Equal CM standard forms within `tol`.
    UpToGlu,
    /// Both of the above.
    #[default]
    Both,
}

/// Every branch of the protocol ends in the target state.
pub fn verify_deterministic(
    input: &FockVector,
    target: &FockVector,
    protocol: &Protocol,
    tol: f64,
    check: DeterminismCheck,
) -> Result<bool> {
    let branches = run_protocol(input, protocol)?;
    let target_sf: Option<StandardFormResult> = match check {
        DeterminismCheck::Exact => None,
        _ => Some(standard_form(&cm_from_state(target)?)?),
    };
    for b in &branches {
        if check != DeterminismCheck::UpToGlu && b.state.overlap(target) <= 1.0 - tol {
            return Ok(false);
        }
        if let Some(sf) = &target_sf {
            let s = standard_form(&cm_from_state(&b.state)?)?;
            if (s.s_gamma.gamma() - sf.s_gamma.gamma()).norm() >= tol {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Even and odd parts `(A ± P A P)/2` of an operator.
pub fn parity_split(a: &CMat) -> (CMat, CMat) {
    let d = a.nrows();
    let mut even = CMat::zeros(d, d);
    let mut odd = CMat::zeros(d, d);
    for r in 0..d {
        for c in 0..d {
            if (r.count_ones() + c.count_ones()) % 2 == 0 {
                even[(r, c)] = a[(r, c)];
            } else {
                odd[(r, c)] = a[(r, c)];
            }
        }
    }
    (even, odd)
}

/// Parity operator `(−1)^{N}` on `n` modes.
pub fn parity_operator(modes: usize) -> CMat {
    let d = 1usize << modes;
    CMat::from_fn(d, d, |r, c| {
        if r != c {
            ZERO
        } else if r.count_ones() % 2 == 0 {
            ONE
        } else {
            -ONE
        }
    })
}

/// `Σ_k K ρ K†`.
pub fn apply_kraus(kraus: &[CMat], rho: &CMat) -> CMat {
    let d = rho.nrows();
    let mut out = CMat::zeros(d, d);
    for k in kraus {
        out += k * rho * k.adjoint();
    }
    out
}

/// Solution of the symmetry-averaging problem `Σ p_i S_i† H S_i = r G`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SepFeasibility {
    pub feasible: bool,
    pub weights: Vec<f64>,
    pub residual: f64,
}

fn check_positive(m: &CMat) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    if (m - m.adjoint()).norm() > 1e-10 * m.norm().max(1.0) {
        return Err(Error::NotPositive);
    }
    let ev = nalgebra::SymmetricEigen::new(m.clone()).eigenvalues;
    if ev.min() <= 0.0 {
        return Err(Error::NotPositive);
    }
    Ok(())
}

/// `⟨ψ|H|ψ⟩ / ⟨ψ|G|ψ⟩`.
pub fn gour_ratio(seed: &FockVector, g: &CMat, h: &CMat) -> f64 {
    let v = seed.amplitudes();
    let num = v.dotc(&(h * v)).re;
    let den = v.dotc(&(g * v)).re;
    num / den
}

/// Minimum-norm point of the convex hull of the columns of `p` (Wolfe's
/// active-set method). Returns convex weights.
pub fn min_norm_simplex(p: &DMatrix<f64>) -> Vec<f64> {
    let m = p.ncols();
    let scale = p.column_iter().map(|c| c.norm_squared()).fold(0.0, f64::max).max(1e-300);
    let eps = 1e-15 * scale;
    let start = (0..m)
        .min_by(|&i, &j| p.column(i).norm().partial_cmp(&p.column(j).norm()).unwrap())
        .expect("at least one column");
    let mut support = vec![start];
    let mut lambda = vec![1.0];
    let point = |support: &[usize], w: &[f64]| {
        let mut x = DVector::zeros(p.nrows());
        for (&k, &wk) in support.iter().zip(w) {
            x += p.column(k) * wk;
        }
        x
    };
    let mut x = point(&support, &lambda);
    for _major in 0..10 * m + 10 {
        let (j, best) = (0..m)
            .map(|i| (i, x.dot(&p.column(i))))
            .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
            .unwrap();
        if x.norm_squared() - best <= eps || support.contains(&j) {
            break;
        }
        support.push(j);
        lambda.push(0.0);
        for _minor in 0..10 * m + 10 {
            // affine minimizer over the current support
            let k = support.len();
            let mut kkt = DMatrix::zeros(k + 1, k + 1);
            let mut rhs = DVector::zeros(k + 1);
            for a in 0..k {
                for b in 0..k {
                    kkt[(a, b)] = p.column(support[a]).dot(&p.column(support[b]));
                }
                kkt[(a, k)] = 1.0;
                kkt[(k, a)] = 1.0;
            }
            rhs[k] = 1.0;
            let sol = kkt
                .svd(true, true)
                .solve(&rhs, 1e-14 * scale)
                .unwrap_or_else(|_| DVector::zeros(k + 1));
            let alpha: Vec<f64> = (0..k).map(|a| sol[a]).collect();
            if alpha.iter().all(|&v| v > 1e-14) {
                lambda = alpha;
                break;
            }
            let mut theta = 1.0f64;
            for a in 0..k {
                if alpha[a] <= 1e-14 && lambda[a] - alpha[a] > 0.0 {
                    theta = theta.min(lambda[a] / (lambda[a] - alpha[a]));
                }
            }
            for a in 0..k {
                lambda[a] = theta * alpha[a] + (1.0 - theta) * lambda[a];
            }
            let keep: Vec<bool> = lambda.iter().map(|&v| v > 1e-14).collect();
            let mut a = 0;
            support.retain(|_| {
                a += 1;
                keep[a - 1]
            });
            lambda.retain(|&v| v > 1e-14);
            let t: f64 = lambda.iter().sum();
            lambda.iter_mut().for_each(|v| *v /= t);
        }
        x = point(&support, &lambda);
    }
    let mut w = vec![0.0; m];
    for (&k, &v) in support.iter().zip(&lambda) {
        w[k] = v;
    }
    w
}

/// `‖Σ p_i S_i† H S_i − r G‖_F`.
pub fn sep_residual(g: &CMat, h: &CMat, symmetries: &[CMat], r: f64, p: &[f64]) -> f64 {
    let mut s = g * Complex64::new(-r, 0.0);
    for (sym, &w) in symmetries.iter().zip(p) {
        s += sym.adjoint() * h * sym * Complex64::new(w, 0.0);
    }
    s.norm()
}

/// Minimizes `‖Σ p_i S_i† H S_i − r G‖_F` over the probability simplex.
pub fn sep_feasibility(g: &CMat, h: &CMat, symmetries: &[CMat], r: f64) -> Result<SepFeasibility> {
    if symmetries.is_empty() {
        return Err(Error::EmptySymmetryList);
    }
    check_positive(g)?;
    check_positive(h)?;
    let d = g.nrows();
    if h.nrows() != d || symmetries.iter().any(|s| s.nrows() != d || s.ncols() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: h.nrows(),
        });
    }
    // on the simplex Σ p_i S_i†HS_i − rG = Σ p_i (S_i†HS_i − rG)
    let cols: Vec<CMat> = symmetries
        .iter()
        .map(|s| s.adjoint() * h * s - g * Complex64::new(r, 0.0))
        .collect();
    let mut pts = DMatrix::zeros(2 * d * d, cols.len());
    for (j, c) in cols.iter().enumerate() {
        for (k, z) in c.iter().enumerate() {
            pts[(2 * k, j)] = z.re;
            pts[(2 * k + 1, j)] = z.im;
        }
    }
    let weights = min_norm_simplex(&pts);
    let residual = sep_residual(g, h, symmetries, r, &weights);
    Ok(SepFeasibility {
        feasible: residual < FEASIBILITY_TOL,
        weights,
        residual,
    })
}

/// Tensor product of single-site 2×2 operators.
pub fn kron_all(ops: &[Matrix2<Complex64>]) -> CMat {
    let mut out = CMat::identity(1, 1);
    for o in ops {
        let m = CMat::from_row_slice(2, 2, &[o[(0, 0)], o[(0, 1)], o[(1, 0)], o[(1, 1)]]);
        out = out.kronecker(&m);
    }
    out
}
