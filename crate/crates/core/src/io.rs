//! JSON file formats for covariance matrices, states, channels and protocols.

use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channels::GaussianChannel;
use crate::error::{Error, Result};
use crate::gfs_cm::CovarianceMatrix;
use crate::jw_fock::{CMat, FockDensity, FockVector};
use crate::locc_sim::{Instrument, LocalKraus, Protocol, Round};

/// A real number or a `[re, im]` pair.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ComplexJson {
    Real(f64),
    Pair([f64; 2]),
}

impl From<ComplexJson> for Complex64 {
    fn from(c: ComplexJson) -> Self {
        match c {
            ComplexJson::Real(x) => Complex64::new(x, 0.0),
            ComplexJson::Pair([re, im]) => Complex64::new(re, im),
        }
    }
}

impl From<Complex64> for ComplexJson {
    fn from(z: Complex64) -> Self {
        ComplexJson::Pair([z.re, z.im])
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CmFile {
    pub modes: usize,
    pub gamma: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StateFile {
    pub modes: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitudes: Option<Vec<ComplexJson>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density: Option<Vec<Vec<ComplexJson>>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChannelFile {
    pub in_modes: usize,
    pub out_modes: usize,
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    #[serde(rename = "B")]
    pub b: Vec<Vec<f64>>,
    #[serde(rename = "D")]
    pub d: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KrausFile {
    #[serde(default)]
    pub site: Option<usize>,
    #[serde(default)]
    pub flip: u8,
    pub diag: [ComplexJson; 2],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RoundFile {
    pub site: usize,
    pub branches: Vec<KrausFile>,
    #[serde(default)]
    pub corrections: BTreeMap<String, Vec<KrausFile>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProtocolFile {
    pub rounds: Vec<RoundFile>,
}

/// Pure or mixed state read from a state file.
#[derive(Debug, Clone)]
pub enum StateInput {
    Vector(FockVector),
    Density(FockDensity),
}

impl StateInput {
    pub fn modes(&self) -> usize {
        match self {
            StateInput::Vector(v) => v.modes(),
            StateInput::Density(d) => d.modes(),
        }
    }
}

fn parse_err(e: serde_json::Error) -> Error {
    Error::Parse(e.to_string())
}

pub fn read_to_string(path: impl AsRef<Path>) -> Result<String> {
    let p = path.as_ref();
    std::fs::read_to_string(p).map_err(|e| Error::Parse(format!("{}: {e}", p.display())))
}

fn rows_to_matrix(rows: &[Vec<f64>], nrows: usize, ncols: usize, what: &str) -> Result<DMatrix<f64>> {
    if rows.len() != nrows || rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::Parse(format!("{what}: expected {nrows}x{ncols} entries")));
    }
    Ok(DMatrix::from_fn(nrows, ncols, |r, c| rows[r][c]))
}

fn matrix_to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

pub fn cm_from_file(f: &CmFile) -> Result<CovarianceMatrix> {
    let g = rows_to_matrix(&f.gamma, 2 * f.modes, 2 * f.modes, "gamma")?;
    CovarianceMatrix::new(g)
}

pub fn cm_to_file(cm: &CovarianceMatrix) -> CmFile {
    CmFile {
        modes: cm.modes(),
        gamma: matrix_to_rows(cm.gamma()),
    }
}

pub fn parse_cm(text: &str) -> Result<CovarianceMatrix> {
    cm_from_file(&serde_json::from_str(text).map_err(parse_err)?)
}

pub fn cm_to_json(cm: &CovarianceMatrix) -> serde_json::Value {
    serde_json::to_value(cm_to_file(cm)).expect("plain data")
}

pub fn state_from_file(f: &StateFile) -> Result<StateInput> {
    let dim = 1usize << f.modes;
    match (&f.amplitudes, &f.density) {
        (Some(a), None) => {
            let amps: Vec<Complex64> = a.iter().map(|&z| z.into()).collect();
            if amps.len() != dim {
                return Err(Error::SizeMismatch {
                    expected: dim,
                    found: amps.len(),
                });
            }
            Ok(StateInput::Vector(FockVector::from_slice(f.modes, &amps)?))
        }
        (None, Some(rows)) => {
            if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
                return Err(Error::Parse(format!("density: expected {dim}x{dim} entries")));
            }
            let m = CMat::from_fn(dim, dim, |r, c| rows[r][c].into());
            Ok(StateInput::Density(FockDensity::new(f.modes, m)?))
        }
        _ => Err(Error::Parse(
            "state needs exactly one of \"amplitudes\" or \"density\"".into(),
        )),
    }
}

pub fn parse_state(text: &str) -> Result<StateInput> {
    state_from_file(&serde_json::from_str(text).map_err(parse_err)?)
}

pub fn vector_to_json(psi: &FockVector) -> serde_json::Value {
    let f = StateFile {
        modes: psi.modes(),
        amplitudes: Some(psi.amplitudes().iter().map(|&z| z.into()).collect()),
        density: None,
    };
    serde_json::to_value(f).expect("plain data")
}

pub fn channel_from_file(f: &ChannelFile) -> Result<GaussianChannel> {
    let (m2, n2) = (2 * f.out_modes, 2 * f.in_modes);
    GaussianChannel::new(
        rows_to_matrix(&f.a, m2, m2, "A")?,
        rows_to_matrix(&f.b, m2, n2, "B")?,
        rows_to_matrix(&f.d, n2, n2, "D")?,
    )
}

pub fn channel_to_file(ch: &GaussianChannel) -> ChannelFile {
    ChannelFile {
        in_modes: ch.in_modes(),
        out_modes: ch.out_modes(),
        a: matrix_to_rows(ch.a()),
        b: matrix_to_rows(ch.b()),
        d: matrix_to_rows(ch.d()),
    }
}

pub fn parse_channel(text: &str) -> Result<GaussianChannel> {
    channel_from_file(&serde_json::from_str(text).map_err(parse_err)?)
}

fn kraus_from_file(k: &KrausFile, default_site: Option<usize>) -> Result<LocalKraus> {
    let site = k
        .site
        .or(default_site)
        .ok_or_else(|| Error::Parse("correction entry without \"site\"".into()))?;
    if k.flip > 1 {
        return Err(Error::Parse(format!("flip must be 0 or 1, got {}", k.flip)));
    }
    Ok(LocalKraus::new(site, k.flip == 1, [k.diag[0].into(), k.diag[1].into()]))
}

fn kraus_to_file(k: &LocalKraus, with_site: bool) -> KrausFile {
    KrausFile {
        site: with_site.then_some(k.site),
        flip: k.flip as u8,
        diag: [k.diag[0].into(), k.diag[1].into()],
    }
}

pub fn protocol_from_file(f: &ProtocolFile) -> Result<Protocol> {
    let mut rounds = Vec::with_capacity(f.rounds.len());
    for r in &f.rounds {
        let branches = r
            .branches
            .iter()
            .map(|k| kraus_from_file(k, Some(r.site)))
            .collect::<Result<Vec<_>>>()?;
        let mut corrections = BTreeMap::new();
        for (key, ks) in &r.corrections {
            let ops = ks
                .iter()
                .map(|k| kraus_from_file(k, None))
                .collect::<Result<Vec<_>>>()?;
            corrections.insert(key.clone(), ops);
        }
        rounds.push(Round {
            instrument: Instrument::new(r.site, branches)?,
            corrections,
        });
    }
    Ok(Protocol { rounds })
}

pub fn protocol_to_file(p: &Protocol) -> ProtocolFile {
    ProtocolFile {
        rounds: p
            .rounds
            .iter()
            .map(|r| RoundFile {
                site: r.instrument.site,
                branches: r.instrument.branches.iter().map(|k| kraus_to_file(k, false)).collect(),
                corrections: r
                    .corrections
                    .iter()
                    .map(|(k, v)| (k.clone(), v.iter().map(|x| kraus_to_file(x, true)).collect()))
                    .collect(),
            })
            .collect(),
    }
}

pub fn parse_protocol(text: &str) -> Result<Protocol> {
    protocol_from_file(&serde_json::from_str(text).map_err(parse_err)?)
}
