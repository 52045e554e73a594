//! Canonical representative of a CM under local orthogonal transformations.
//!
//! Each mode is its own party. Diagonal blocks are made non-negative with Z
//! flips; off-diagonal blocks are visited in row-major order and reduced by
//! SO(2) rotations. Modes whose angles are tied together by earlier blocks
//! form components; a component carries either one free angle or only a
//! global sign. Modes with a vanishing diagonal block try every flip pattern
//! and keep the lexicographically largest result.

use nalgebra::{DMatrix, Matrix2};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gfs_cm::{apply_local_orthogonal, Bipartition, CovarianceMatrix, LocalOrthogonalSet};
use crate::matalg::{rot2, rot2_angle, svd2_so, EPS_DEG};

/// Default Frobenius tolerance for comparing standard forms.
pub const EQUIVALENCE_TOL: f64 = 1e-7;

/// Options for [`standard_form_with`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StandardFormConfig {
    /// Permit Z flips (`m_i = 1`); when false every `m_i = 0`.
    pub allow_z_flips: bool,
}

impl Default for StandardFormConfig {
    fn default() -> Self {
        StandardFormConfig {
            allow_z_flips: true,
        }
    }
}

/// One step of the reduction; modes are 1-based.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum Decision {
    /// Flip chosen so the diagonal block is non-negative.
    DiagonalSign { mode: usize, lambda: f64, flipped: bool },
    /// Flips of modes with vanishing diagonal block, chosen among all patterns.
    FreeFlips { modes: Vec<usize>, flipped: Vec<bool>, candidates: usize },
    /// Two free angles fixed by the SO(2) SVD of the block.
    PairSvd { i: usize, j: usize, d: f64, d_prime: f64 },
    /// Block proportional to an orthogonal matrix ties the angle of `j` to `i`.
    Proportional { i: usize, j: usize, rotation: bool },
    /// One free side fixed by a one-sided decomposition of the block.
    OneSided { i: usize, j: usize, free: usize, degenerate: bool },
    /// Only a global sign was left; first non-zero entry made positive.
    SignConvention { i: usize, j: usize, negated: bool },
    /// Free angle of a connected component fixed by a block inside it.
    Internal { i: usize, j: usize, degenerate: bool },
    /// Block left unchanged by the remaining freedom.
    Invariant { i: usize, j: usize },
    /// Remaining free angles set to zero.
    Residual { modes: Vec<usize> },
}

/// Output of [`standard_form`].
#[derive(Debug, Clone)]
pub struct StandardFormResult {
    pub s_gamma: CovarianceMatrix,
    pub ops: LocalOrthogonalSet,
    pub decision_log: Vec<Decision>,
}

struct Component {
    members: Vec<usize>,
    continuous: bool,
}

struct Canonicalizer {
    cur: DMatrix<f64>,
    rot: Vec<Matrix2<f64>>,
    comp_of: Vec<usize>,
    sign: Vec<f64>,
    comps: Vec<Component>,
    tol: f64,
    log: Vec<Decision>,
}

/// Rotation and reflection parts of a 2×2 block: `M = a·R(φ) + b·Z R(ψ)`.
struct Parts {
    a: f64,
    phi: f64,
    b: f64,
    psi: f64,
}

fn parts(m: &Matrix2<f64>) -> Parts {
    let p = 0.5 * (m[(0, 0)] + m[(1, 1)]);
    let q = 0.5 * (m[(0, 1)] - m[(1, 0)]);
    let u = 0.5 * (m[(0, 0)] - m[(1, 1)]);
    let v = 0.5 * (m[(0, 1)] + m[(1, 0)]);
    Parts {
        a: p.hypot(q),
        phi: q.atan2(p),
        b: u.hypot(v),
        psi: v.atan2(u),
    }
}

/// `true` when the orthogonal factor needs a sign change to have
/// `(1,1) ≥ 0`, or `(1,1) = 0` and `(1,2) ≥ 0`.
fn needs_negation(o11: f64, o12: f64) -> bool {
    if o11.abs() <= EPS_DEG {
        o12 < 0.0
    } else {
        o11 < 0.0
    }
}

impl Canonicalizer {
    fn new(gamma: DMatrix<f64>, tol: f64) -> Self {
        let n = gamma.nrows() / 2;
        Canonicalizer {
            cur: gamma,
            rot: vec![Matrix2::identity(); n],
            comp_of: (0..n).collect(),
            sign: vec![1.0; n],
            comps: (0..n)
                .map(|i| Component {
                    members: vec![i],
                    continuous: true,
                })
                .collect(),
            tol,
            log: Vec::new(),
        }
    }

    fn block(&self, i: usize, j: usize) -> Matrix2<f64> {
        let g = &self.cur;
        Matrix2::new(
            g[(2 * i, 2 * j)],
            g[(2 * i, 2 * j + 1)],
            g[(2 * i + 1, 2 * j)],
            g[(2 * i + 1, 2 * j + 1)],
        )
    }

    fn rotate_mode(&mut self, k: usize, r: &Matrix2<f64>) {
        self.rot[k] = r * self.rot[k];
        let dim = self.cur.nrows();
        for c in 0..dim {
            let (x, y) = (self.cur[(2 * k, c)], self.cur[(2 * k + 1, c)]);
            self.cur[(2 * k, c)] = r[(0, 0)] * x + r[(0, 1)] * y;
            self.cur[(2 * k + 1, c)] = r[(1, 0)] * x + r[(1, 1)] * y;
        }
        for row in 0..dim {
            let (x, y) = (self.cur[(row, 2 * k)], self.cur[(row, 2 * k + 1)]);
            self.cur[(row, 2 * k)] = x * r[(0, 0)] + y * r[(0, 1)];
            self.cur[(row, 2 * k + 1)] = x * r[(1, 0)] + y * r[(1, 1)];
        }
    }

    fn rotate_comp(&mut self, c: usize, t: f64) {
        let members = self.comps[c].members.clone();
        for k in members {
            let r = rot2(self.sign[k] * t);
            self.rotate_mode(k, &r);
        }
    }

    fn negate_comp(&mut self, c: usize) {
        let members = self.comps[c].members.clone();
        let m = -Matrix2::<f64>::identity();
        for k in members {
            self.rotate_mode(k, &m);
        }
    }

    /// Moves the members of `cj` into `ci`, scaling their signs by `factor`.
    fn merge(&mut self, ci: usize, cj: usize, continuous: bool, factor: f64) {
        let moved = std::mem::take(&mut self.comps[cj].members);
        for &k in &moved {
            self.comp_of[k] = ci;
            self.sign[k] *= factor;
        }
        self.comps[ci].members.extend(moved);
        self.comps[ci].continuous = continuous;
    }

    fn run(mut self) -> Self {
        let n = self.rot.len();
        for i in 0..n {
            for j in i + 1..n {
                self.visit(i, j);
            }
        }
        let mut free = Vec::new();
        for c in &self.comps {
            if c.continuous && !c.members.is_empty() {
                let mut m: Vec<usize> = c.members.iter().map(|k| k + 1).collect();
                m.sort_unstable();
                free.extend(m);
            }
        }
        if !free.is_empty() {
            self.log.push(Decision::Residual { modes: free });
        }
        self
    }

    fn visit(&mut self, i: usize, j: usize) {
        let m = self.block(i, j);
        let (li, lj) = (i + 1, j + 1);
        if m.norm() <= self.tol {
            return;
        }
        let ci = self.comp_of[i];
        let cj = self.comp_of[j];
        let tol = self.tol;
        let pt = parts(&m);
        let degenerate = pt.a.min(pt.b) <= tol;
        if ci == cj {
            if !self.comps[ci].continuous {
                self.log.push(Decision::Invariant { i: li, j: lj });
                return;
            }
            let same = self.sign[i] == self.sign[j];
            // equal signs rotate the reflection part, opposite signs the rotation part
            let moving = if same { pt.b } else { pt.a };
            if moving <= tol {
                self.log.push(Decision::Invariant { i: li, j: lj });
                return;
            }
            let a = if degenerate {
                if same {
                    0.5 * pt.psi
                } else {
                    -0.5 * pt.phi
                }
            } else {
                let s = m * m.transpose();
                0.5 * (2.0 * s[(0, 1)]).atan2(s[(0, 0)] - s[(1, 1)])
            };
            let t = self.sign[i] * a;
            self.rotate_comp(ci, t);
            self.comps[ci].continuous = false;
            self.log.push(Decision::Internal {
                i: li,
                j: lj,
                degenerate,
            });
            return;
        }
        let (ci_cont, cj_cont) = (self.comps[ci].continuous, self.comps[cj].continuous);
        match (ci_cont, cj_cont) {
            (true, true) => {
                if !degenerate {
                    let svd = svd2_so(&m);
                    let ti = self.sign[i] * rot2_angle(&svd.left);
                    let tj = self.sign[j] * rot2_angle(&svd.right);
                    self.rotate_comp(ci, ti);
                    self.rotate_comp(cj, tj);
                    self.merge(ci, cj, false, 1.0);
                    self.log.push(Decision::PairSvd {
                        i: li,
                        j: lj,
                        d: svd.d,
                        d_prime: svd.d_prime,
                    });
                } else {
                    let rotation = pt.b <= pt.a;
                    let x = if rotation { pt.phi } else { pt.psi };
                    let tj = self.sign[j] * x;
                    self.rotate_comp(cj, tj);
                    let target = if rotation { self.sign[i] } else { -self.sign[i] };
                    let factor = self.sign[j] * target;
                    self.merge(ci, cj, true, factor);
                    self.log.push(Decision::Proportional {
                        i: li,
                        j: lj,
                        rotation,
                    });
                }
            }
            (false, true) => {
                // column side free: block becomes Õ·D
                let x = if degenerate {
                    if pt.b <= pt.a {
                        pt.phi
                    } else {
                        pt.psi
                    }
                } else {
                    let svd = svd2_so(&m);
                    let l = svd.left;
                    let mut x = rot2_angle(&svd.right);
                    if needs_negation(l[(0, 0)], l[(1, 0)]) {
                        x += std::f64::consts::PI;
                    }
                    x
                };
                let tj = self.sign[j] * x;
                self.rotate_comp(cj, tj);
                self.merge(ci, cj, false, 1.0);
                self.log.push(Decision::OneSided {
                    i: li,
                    j: lj,
                    free: lj,
                    degenerate,
                });
            }
            (true, false) => {
                // row side free: block becomes D·Õ
                let x = if degenerate {
                    if pt.b <= pt.a {
                        -pt.phi
                    } else {
                        pt.psi
                    }
                } else {
                    let svd = svd2_so(&m);
                    let r = svd.right;
                    let mut x = rot2_angle(&svd.left);
                    if needs_negation(r[(0, 0)], r[(0, 1)]) {
                        x += std::f64::consts::PI;
                    }
                    x
                };
                let ti = self.sign[i] * x;
                self.rotate_comp(ci, ti);
                self.merge(ci, cj, false, 1.0);
                self.log.push(Decision::OneSided {
                    i: li,
                    j: lj,
                    free: li,
                    degenerate,
                });
            }
            (false, false) => {
                let first = [m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]]
                    .into_iter()
                    .find(|v| v.abs() > tol)
                    .unwrap_or(0.0);
                let negated = first < 0.0;
                if negated {
                    self.negate_comp(cj);
                }
                self.merge(ci, cj, false, 1.0);
                self.log.push(Decision::SignConvention {
                    i: li,
                    j: lj,
                    negated,
                });
            }
        }
    }
}

/// Upper off-diagonal blocks, row-major.
fn offdiag_key(g: &DMatrix<f64>) -> Vec<f64> {
    let n = g.nrows() / 2;
    let mut k = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            k.extend([
                g[(2 * i, 2 * j)],
                g[(2 * i, 2 * j + 1)],
                g[(2 * i + 1, 2 * j)],
                g[(2 * i + 1, 2 * j + 1)],
            ]);
        }
    }
    k
}

/// `true` if `a` is lexicographically larger than `b` beyond `tol`.
fn lex_greater(a: &[f64], b: &[f64], tol: f64) -> bool {
    for (x, y) in a.iter().zip(b) {
        if x > &(y + tol) {
            return true;
        }
        if x < &(y - tol) {
            return false;
        }
    }
    false
}

fn flip_mode(g: &mut DMatrix<f64>, k: usize) {
    let dim = g.nrows();
    for c in 0..dim {
        g[(2 * k + 1, c)] = -g[(2 * k + 1, c)];
    }
    for r in 0..dim {
        g[(r, 2 * k + 1)] = -g[(r, 2 * k + 1)];
    }
}

/// Standard form with Z flips allowed.
pub fn standard_form(cm: &CovarianceMatrix) -> Result<StandardFormResult> {
    standard_form_with(cm, &StandardFormConfig::default())
}

/// Standard form of a CM with one mode per party.
pub fn standard_form_with(
    cm: &CovarianceMatrix,
    config: &StandardFormConfig,
) -> Result<StandardFormResult> {
    if !cm.is_physical() {
        return Err(Error::NotPhysical(cm.max_singular_value()));
    }
    let n = cm.modes();
    let g = cm.gamma();
    let tol = EPS_DEG * g.norm();
    let mut log = Vec::new();
    let mut base_flips = vec![false; n];
    let mut free = Vec::new();
    for k in 0..n {
        let lambda = g[(2 * k, 2 * k + 1)];
        if !config.allow_z_flips {
            continue;
        }
        if lambda.abs() > tol {
            base_flips[k] = lambda < 0.0;
            log.push(Decision::DiagonalSign {
                mode: k + 1,
                lambda,
                flipped: lambda < 0.0,
            });
        } else {
            free.push(k);
        }
    }
    let mut best: Option<(Vec<bool>, Canonicalizer, Vec<f64>)> = None;
    let candidates = 1usize << free.len();
    for mask in 0..candidates {
        let mut flips = base_flips.clone();
        for (b, &k) in free.iter().enumerate() {
            flips[k] = (mask >> b) & 1 == 1;
        }
        let mut pre = g.clone();
        for k in 0..n {
            if flips[k] {
                flip_mode(&mut pre, k);
            }
        }
        let canon = Canonicalizer::new(pre, tol).run();
        let key = offdiag_key(&canon.cur);
        let better = match &best {
            None => true,
            Some((_, _, bk)) => lex_greater(&key, bk, tol),
        };
        if better {
            best = Some((flips, canon, key));
        }
    }
    let (flips, canon, _) = best.expect("at least one candidate");
    if !free.is_empty() {
        log.push(Decision::FreeFlips {
            modes: free.iter().map(|k| k + 1).collect(),
            flipped: free.iter().map(|&k| flips[k]).collect(),
            candidates,
        });
    }
    log.extend(canon.log);
    let z = Matrix2::new(1.0, 0.0, 0.0, -1.0);
    let mats: Vec<Matrix2<f64>> = (0..n)
        .map(|k| if flips[k] { canon.rot[k] * z } else { canon.rot[k] })
        .collect();
    let ops = LocalOrthogonalSet::from_matrices(&mats);
    let s_gamma = apply_local_orthogonal(cm, &ops)?;
    Ok(StandardFormResult {
        s_gamma,
        ops,
        decision_log: log,
    })
}

/// Standard form after checking that every party holds exactly one mode.
pub fn standard_form_partitioned(
    cm: &CovarianceMatrix,
    partition: &Bipartition,
    config: &StandardFormConfig,
) -> Result<StandardFormResult> {
    if partition.modes() != cm.modes() {
        return Err(Error::SizeMismatch {
            expected: cm.modes(),
            found: partition.modes(),
        });
    }
    for p in 0..partition.party_count() {
        if partition.modes_of(p).len() > 1 {
            return Err(Error::MoreThanOneModePerParty(p));
        }
    }
    standard_form_with(cm, config)
}

/// Local-orthogonal equivalence by comparing standard forms.
pub fn glu_equivalent(a: &CovarianceMatrix, b: &CovarianceMatrix, tol: f64) -> Result<bool> {
    glu_equivalent_with(a, b, tol, &StandardFormConfig::default())
}

pub fn glu_equivalent_with(
    a: &CovarianceMatrix,
    b: &CovarianceMatrix,
    tol: f64,
    config: &StandardFormConfig,
) -> Result<bool> {
    Ok(standard_form_distance(a, b, config)? < tol)
}

/// Frobenius distance between the two standard forms.
pub fn standard_form_distance(
    a: &CovarianceMatrix,
    b: &CovarianceMatrix,
    config: &StandardFormConfig,
) -> Result<f64> {
    if a.modes() != b.modes() {
        return Err(Error::SizeMismatch {
            expected: a.modes(),
            found: b.modes(),
        });
    }
    let sa = standard_form_with(a, config)?;
    let sb = standard_form_with(b, config)?;
    Ok((sa.s_gamma.gamma() - sb.s_gamma.gamma()).norm())
}

/// Parameters of a three-mode standard form.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ThreeModeParams {
    pub lambda: [f64; 3],
    pub d12: f64,
    pub d12_prime: f64,
    pub d13: f64,
    pub d13_prime: f64,
    pub l1: f64,
    pub l2: f64,
    pub m1: f64,
    pub m2: f64,
    pub m12: f64,
    pub m21: f64,
}

/// Outcome of [`validate_3mode_standard_form`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThreeModeValidation {
    pub valid: bool,
    /// Case label such as `"A1"`, or `"unvalidated"` outside the covered regime.
    pub matched_case: Option<String>,
    pub description: String,
    pub params: ThreeModeParams,
}

/// Case labels with their defining conditions.
pub const THREE_MODE_CASES: &[(&str, &str)] = &[
    ("A1", "d12 > |d'12|, d13 > |d'13|, l1^2 + l2^2 = 1 with l1 > 0 or (l1 = 0, l2 > 0)"),
    ("A2", "d12 > |d'12|, d13 = |d'13| != 0, l1 = 1, l2 = 0"),
    ("A3", "d12 > |d'12|, gamma13 = 0, gamma23 = O'D with d23 > |d'23| and l'1 > 0 or (l'1 = 0, l'2 > 0)"),
    ("A4", "d12 > |d'12|, gamma13 = 0, m1 = |m2| != 0, m12 = m21 = 0"),
    ("B1", "d12 = |d'12| != 0, d13 > |d'13|, l1 = 1, l2 = 0"),
    ("B2", "d12 = |d'12| != 0, d13 = |d'13| != 0, l1 = 1, l2 = 0, gamma23 = DO' with d23 > |d'23|"),
    ("B3", "d12 = |d'12| != 0, d13 = |d'13| != 0, l1 = 1, l2 = 0, gamma23 proportional to O(2), d'12 d'13 det(gamma23) > 0"),
    ("B4", "d12 = |d'12| != 0, d13 = |d'13| != 0, l1 = 1, l2 = 0, m1 = |m2| != 0, m12 = m21 = 0, d'12 d'13 m2 < 0"),
    ("B5", "d12 = |d'12| != 0, gamma13 = 0, m1 > |m2|, m12 = m21 = 0"),
    ("B6", "d12 = |d'12| != 0, gamma13 = 0, m1 = |m2| != 0, m12 = m21 = 0"),
    ("B7", "d12 = |d'12| != 0, d13 = |d'13| != 0, l1 = 1, l2 = 0, gamma23 = 0"),
    ("C1", "gamma12 = 0, d13 > |d'13|, l1 = 1, l2 = 0, gamma23 = DO' with d23 > |d'23| and l'1 > 0 or (l'1 = 0, l'2 > 0)"),
    ("C2", "gamma12 = 0, d13 > |d'13|, l1 = 1, l2 = 0, m1 = |m2| != 0, m12 = m21 = 0"),
    ("C3", "gamma12 = 0, d13 = |d'13| != 0, l1 = 1, l2 = 0, m1 > |m2|, m12 = m21 = 0"),
    ("C4", "gamma12 = 0, d13 = |d'13| != 0, l1 = 1, l2 = 0, m1 = |m2| != 0, m12 = m21 = 0"),
];

const VALIDATION_TOL: f64 = 1e-8;

/// `[[l1 d, l2 d'], [−l2 d, l1 d']]` decomposition.
fn od_form(m: &Matrix2<f64>, tol: f64) -> Option<(f64, f64, f64, f64)> {
    let d = m[(0, 0)].hypot(m[(1, 0)]);
    if d <= tol {
        return None;
    }
    let l1 = m[(0, 0)] / d;
    let l2 = -m[(1, 0)] / d;
    let dp = l2 * m[(0, 1)] + l1 * m[(1, 1)];
    let rec = Matrix2::new(l1 * d, l2 * dp, -l2 * d, l1 * dp);
    ((rec - m).amax() <= tol).then_some((d, dp, l1, l2))
}

/// `[[d l1, d l2], [−d' l2, d' l1]]` decomposition.
fn do_form(m: &Matrix2<f64>, tol: f64) -> Option<(f64, f64, f64, f64)> {
    let d = m[(0, 0)].hypot(m[(0, 1)]);
    if d <= tol {
        return None;
    }
    let l1 = m[(0, 0)] / d;
    let l2 = m[(0, 1)] / d;
    let dp = l1 * m[(1, 1)] - l2 * m[(1, 0)];
    let rec = Matrix2::new(d * l1, d * l2, -dp * l2, dp * l1);
    ((rec - m).amax() <= tol).then_some((d, dp, l1, l2))
}

/// Checks a three-mode standard form against the enumerated case list.
pub fn validate_3mode_standard_form(s: &CovarianceMatrix) -> Result<ThreeModeValidation> {
    if s.modes() != 3 {
        return Err(Error::WrongModeCount {
            expected: 3,
            found: s.modes(),
        });
    }
    let tol = VALIDATION_TOL;
    let g = s.gamma();
    let b12 = s.block(0, 1);
    let b13 = s.block(0, 2);
    let b23 = s.block(1, 2);
    let mut p = ThreeModeParams {
        lambda: [g[(0, 1)], g[(2, 3)], g[(4, 5)]],
        d12: b12[(0, 0)],
        d12_prime: b12[(1, 1)],
        m1: b23[(0, 0)],
        m2: b23[(1, 1)],
        m12: b23[(0, 1)],
        m21: b23[(1, 0)],
        ..Default::default()
    };
    let zero13 = b13.amax() <= tol;
    if !zero13 {
        if let Some((d, dp, l1, l2)) = od_form(&b13, tol) {
            p.d13 = d;
            p.d13_prime = dp;
            p.l1 = l1;
            p.l2 = l2;
        }
    }
    let unvalidated = |reason: &str, p: ThreeModeParams| ThreeModeValidation {
        valid: false,
        matched_case: Some("unvalidated".into()),
        description: reason.into(),
        params: p,
    };
    let invalid = |reason: &str, p: ThreeModeParams| ThreeModeValidation {
        valid: false,
        matched_case: None,
        description: reason.into(),
        params: p,
    };
    if p.lambda.iter().any(|l| l.abs() <= tol) {
        return Ok(unvalidated("a diagonal block vanishes", p));
    }
    let zero12 = b12.amax() <= tol;
    let zero23 = b23.amax() <= tol;
    if (zero12 && zero13) || (zero12 && zero23) || (zero13 && zero23) {
        return Ok(unvalidated("a mode factorizes", p));
    }
    if p.lambda.iter().any(|&l| l < 0.0) {
        return Ok(invalid("negative diagonal block", p));
    }
    if b12[(0, 1)].abs() > tol || b12[(1, 0)].abs() > tol {
        return Ok(invalid("gamma12 is not diagonal", p));
    }
    if !zero13 && od_form(&b13, tol).is_none() {
        return Ok(invalid("gamma13 does not fit the template", p));
    }

    let gt = |a: f64, b: f64| a > b + tol;
    let eq = |a: f64, b: f64| (a - b).abs() <= tol;
    let diag23 = p.m12.abs() <= tol && p.m21.abs() <= tol;
    let l_id = eq(p.l1, 1.0) && p.l2.abs() <= tol;
    let d13_gt = !zero13 && gt(p.d13, p.d13_prime.abs());
    let d13_eq = !zero13 && eq(p.d13, p.d13_prime.abs());
    let m_eq = diag23 && eq(p.m1, p.m2.abs()) && p.m1 > tol;
    let m_gt = diag23 && gt(p.m1, p.m2.abs());
    let sign_ok = |l1: f64, l2: f64| l1 > tol || (l1.abs() <= tol && l2 > tol);
    let od23 = od_form(&b23, tol)
        .filter(|&(d, dp, l1, l2)| gt(d, dp.abs()) && sign_ok(l1, l2));
    let do23 = do_form(&b23, tol);
    let pt23 = parts(&b23);
    let prop23 = !zero23 && pt23.a.min(pt23.b) <= tol;
    let det23 = b23.determinant();

    let case = if gt(p.d12, p.d12_prime.abs()) {
        if d13_gt && eq(p.l1 * p.l1 + p.l2 * p.l2, 1.0) && sign_ok(p.l1, p.l2) {
            Some("A1")
        } else if d13_eq && l_id {
            Some("A2")
        } else if zero13 && od23.is_some() {
            Some("A3")
        } else if zero13 && m_eq {
            Some("A4")
        } else {
            None
        }
    } else if eq(p.d12, p.d12_prime.abs()) && p.d12 > tol {
        let d_prod = p.d12_prime * p.d13_prime;
        if d13_gt && l_id {
            Some("B1")
        } else if d13_eq && l_id && zero23 {
            Some("B7")
        } else if d13_eq && l_id && prop23 && d_prod * det23 > 0.0 {
            Some("B3")
        } else if d13_eq && l_id && m_eq && d_prod * p.m2 < 0.0 {
            Some("B4")
        } else if d13_eq && l_id && do23.is_some_and(|(d, dp, _, _)| gt(d, dp.abs())) {
            Some("B2")
        } else if zero13 && m_gt {
            Some("B5")
        } else if zero13 && m_eq {
            Some("B6")
        } else {
            None
        }
    } else if zero12 {
        let do_ok = do23
            .is_some_and(|(d, dp, l1, l2)| gt(d, dp.abs()) && sign_ok(l1, l2));
        if d13_gt && l_id && do_ok {
            Some("C1")
        } else if d13_gt && l_id && m_eq {
            Some("C2")
        } else if d13_eq && l_id && m_gt {
            Some("C3")
        } else if d13_eq && l_id && m_eq {
            Some("C4")
        } else {
            None
        }
    } else {
        None
    };
    Ok(match case {
        Some(c) => {
            let desc = THREE_MODE_CASES
                .iter()
                .find(|(k, _)| *k == c)
                .map(|(_, d)| *d)
                .unwrap_or("");
            ThreeModeValidation {
                valid: true,
                matched_case: Some(c.into()),
                description: desc.into(),
                params: p,
            }
        }
        None => invalid("no case matches", p),
    })
}

/// Coordinates of a pure two-mode standard form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Pure2ModeParams {
    pub lambda: f64,
    pub d: f64,
    pub d_prime: f64,
    pub maximally_entangled: bool,
}

/// Reads `λ` and `d` off a pure two-mode standard form.
pub fn pure_2mode_params(s: &CovarianceMatrix) -> Result<Pure2ModeParams> {
    if s.modes() != 2 {
        return Err(Error::WrongModeCount {
            expected: 2,
            found: s.modes(),
        });
    }
    if !s.is_pure() {
        return Err(Error::NotPure);
    }
    let tol = VALIDATION_TOL;
    let g = s.gamma();
    let (l1, l2) = (g[(0, 1)], g[(2, 3)]);
    let (d, dp) = (g[(0, 2)], g[(1, 3)]);
    if g[(0, 3)].abs() > tol || g[(1, 2)].abs() > tol {
        return Err(Error::NotStandardForm("off-diagonal block is not diagonal".into()));
    }
    if l1 < -tol || l2 < -tol {
        return Err(Error::NotStandardForm("negative diagonal block".into()));
    }
    if d < dp.abs() - tol {
        return Err(Error::NotStandardForm("d < |d'|".into()));
    }
    Ok(Pure2ModeParams {
        lambda: l1,
        d,
        d_prime: dp,
        maximally_entangled: l1.abs() <= tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jw_fock::{cm_from_state, FockVector};
    use crate::random::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn three_mode(a: [f64; 4]) -> CovarianceMatrix {
        let mut v = [0.0; 8];
        v[0b000] = a[0];
        v[0b011] = a[1];
        v[0b101] = a[2];
        v[0b110] = a[3];
        cm_from_state(&FockVector::from_real(3, &v).unwrap()).unwrap()
    }

    #[test]
    fn transformation_reproduces_output() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for n in 2..=4 {
            let cm = random_physical_cm(n, &mut rng);
            let r = standard_form(&cm).unwrap();
            let again = apply_local_orthogonal(&cm, &r.ops).unwrap();
            assert!((again.gamma() - r.s_gamma.gamma()).norm() < 1e-9);
        }
    }

    #[test]
    fn idempotent_and_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for n in 2..=4 {
            for _ in 0..20 {
                let cm = random_physical_cm(n, &mut rng);
                let s = standard_form(&cm).unwrap().s_gamma;
                let s2 = standard_form(&s).unwrap();
                assert!((s2.s_gamma.gamma() - s.gamma()).norm() < 1e-9);
                let ops = random_local_orthogonals(n, true, &mut rng);
                let moved = apply_local_orthogonal(&cm, &ops).unwrap();
                let s3 = standard_form(&moved).unwrap().s_gamma;
                assert!((s3.gamma() - s.gamma()).norm() < 1e-7);
            }
        }
    }

    #[test]
    fn worked_three_mode_example() {
        let r = 23f64.sqrt();
        let cm = three_mode([1.0 / r, 3.0 / r, 3.0 / r, 2.0 / r]);
        let s = standard_form(&cm).unwrap().s_gamma;
        let g = s.gamma();
        let e = |x: f64| x / 23.0;
        let expect = [
            ((0, 1), e(3.0)),
            ((2, 3), e(3.0)),
            ((4, 5), e(13.0)),
            ((0, 2), e(22.0)),
            ((1, 3), e(14.0)),
            ((0, 3), 0.0),
            ((1, 2), 0.0),
            ((0, 4), 0.0),
            ((0, 5), e(6.0)),
            ((1, 4), -e(18.0)),
            ((1, 5), 0.0),
            ((2, 4), e(6.0)),
            ((3, 5), e(18.0)),
            ((2, 5), 0.0),
            ((3, 4), 0.0),
        ];
        for ((r, c), v) in expect {
            assert!((g[(r, c)] - v).abs() < 1e-9, "entry ({r},{c}) = {} vs {v}", g[(r, c)]);
        }
        let v = validate_3mode_standard_form(&s).unwrap();
        assert!(v.valid, "{v:?}");
        assert_eq!(v.matched_case.as_deref(), Some("A1"));
        assert!((v.params.l1).abs() < 1e-9 && (v.params.l2 - 1.0).abs() < 1e-9);
    }

    #[test]
    fn w_state_is_degenerate_case() {
        let s3 = 1.0 / 3f64.sqrt();
        let cm = three_mode([0.0, s3, s3, s3]);
        let s = standard_form(&cm).unwrap().s_gamma;
        let v = validate_3mode_standard_form(&s).unwrap();
        assert!(v.valid, "{v:?}");
        assert_eq!(v.matched_case.as_deref(), Some("B3"));
        for (i, j) in [(0, 1), (0, 2), (1, 2)] {
            let b = s.block(i, j);
            assert!((b * b.transpose() - Matrix2::identity() * (4.0 / 9.0)).norm() < 1e-9);
            assert!(b.determinant() > 0.0);
        }
        for (i, j) in [(0, 1), (0, 2)] {
            assert!((s.block(i, j) - Matrix2::identity() * (2.0 / 3.0)).norm() < 1e-9);
        }
    }

    #[test]
    fn ghz_has_vanishing_diagonal_blocks() {
        let cm = three_mode([0.5; 4]);
        let s = standard_form(&cm).unwrap().s_gamma;
        let v = validate_3mode_standard_form(&s).unwrap();
        assert!(!v.valid);
        assert_eq!(v.matched_case.as_deref(), Some("unvalidated"));
    }

    #[test]
    fn invalid_hand_built_form() {
        let mut g = DMatrix::zeros(6, 6);
        let mut set = |r: usize, c: usize, v: f64| {
            g[(r, c)] = v;
            g[(c, r)] = -v;
        };
        set(0, 1, 0.3);
        set(2, 3, 0.3);
        set(4, 5, 0.3);
        set(0, 2, 0.1);
        set(1, 3, 0.4);
        set(0, 4, 0.2);
        set(1, 5, 0.1);
        set(2, 4, 0.2);
        set(3, 5, 0.1);
        let v = validate_3mode_standard_form(&CovarianceMatrix::new(g).unwrap()).unwrap();
        assert!(!v.valid);
    }

    #[test]
    fn pure_two_mode() {
        for th in [0.1, 0.4, 0.7, 1.2] {
            let (c, s) = (f64::cos(th), f64::sin(th));
            let psi = FockVector::from_real(2, &[c, 0.0, 0.0, s]).unwrap();
            let sf = standard_form(&cm_from_state(&psi).unwrap()).unwrap().s_gamma;
            let p = pure_2mode_params(&sf).unwrap();
            assert!((p.lambda - (2.0 * th).cos().abs()).abs() < 1e-9);
            assert!((p.lambda.powi(2) + p.d.powi(2) - 1.0).abs() < 1e-9);
            assert!((p.d + p.d_prime).abs() < 1e-9 || p.lambda < 1e-9);
        }
        let h = 1.0 / 2f64.sqrt();
        let phi = FockVector::from_real(2, &[h, 0.0, 0.0, h]).unwrap();
        let sf = standard_form(&cm_from_state(&phi).unwrap()).unwrap().s_gamma;
        let p = pure_2mode_params(&sf).unwrap();
        assert!(p.maximally_entangled);
        assert!((p.d - 1.0).abs() < 1e-12 && (p.d_prime - 1.0).abs() < 1e-12);

        let vac = FockVector::from_real(2, &[1.0, 0.0, 0.0, 0.0]).unwrap();
        let sf = standard_form(&cm_from_state(&vac).unwrap()).unwrap().s_gamma;
        let p = pure_2mode_params(&sf).unwrap();
        assert!((p.lambda - 1.0).abs() < 1e-12 && p.d.abs() < 1e-12 && !p.maximally_entangled);
        assert_eq!(pure_2mode_params(&CovarianceMatrix::zeros(2)), Err(Error::NotPure));
    }

    #[test]
    fn standard_input_gives_identity_ops() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let s = standard_form(&random_physical_cm(3, &mut rng)).unwrap().s_gamma;
        let r = standard_form(&s).unwrap();
        for i in 0..3 {
            assert!((r.ops.matrix(i) - Matrix2::identity()).norm() < 1e-9);
        }
    }

    #[test]
    fn no_flip_mode_keeps_determinants() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let cm = random_physical_cm(3, &mut rng);
        let cfg = StandardFormConfig {
            allow_z_flips: false,
        };
        let r = standard_form_with(&cm, &cfg).unwrap();
        assert!(r.ops.flips.iter().all(|f| !f));
        let ops = random_local_orthogonals(3, false, &mut rng);
        let moved = apply_local_orthogonal(&cm, &ops).unwrap();
        assert!(glu_equivalent_with(&cm, &moved, EQUIVALENCE_TOL, &cfg).unwrap());
    }

    #[test]
    fn party_checks_and_errors() {
        let cm = CovarianceMatrix::zeros(2);
        let bad = Bipartition::new(vec![0, 0]);
        assert_eq!(
            standard_form_partitioned(&cm, &bad, &StandardFormConfig::default()).err(),
            Some(Error::MoreThanOneModePerParty(0))
        );
        let unphysical = CovarianceMatrix::new_unchecked(DMatrix::from_row_slice(
            2,
            2,
            &[0.0, 1.5, -1.5, 0.0],
        ));
        assert!(matches!(standard_form(&unphysical), Err(Error::NotPhysical(_))));
        assert!(glu_equivalent(&cm, &CovarianceMatrix::zeros(3), 1e-7).is_err());
    }
}
