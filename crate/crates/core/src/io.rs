//! JSON file formats for channels, constraint sets and thermal solutions.
//!
//! Matrices are nested row lists of `[re, im]` pairs. Hermitian matrices are
//! read from their upper triangle; the lower triangle is mirrored, and
//! diagonal imaginary parts are dropped.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::channel::{QuantumChannel, ReferenceState};
use crate::constraints::ConstraintSet;
use crate::error::{Error, Result};
use crate::linalg::{c, ComplexMatrix, HermitianOperator};
use crate::solver::{Residuals, ThermalSolution};

/// Version tag written into every output document.
pub const FORMAT_VERSION: u32 = 1;

pub type MatrixData = Vec<Vec<[f64; 2]>>;

pub fn matrix_to_data(m: &ComplexMatrix) -> MatrixData {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect()).collect()
}

pub fn hermitian_to_data(h: &HermitianOperator) -> MatrixData {
    // emit exactly Hermitian data
    let m = h.matrix();
    let n = m.nrows();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let z = if i == j { c(m[(i, i)].re, 0.0) } else if i < j { m[(i, j)] } else { m[(j, i)].conj() };
                    [z.re, z.im]
                })
                .collect()
        })
        .collect()
}

pub fn hermitian_from_data(data: &MatrixData) -> Result<HermitianOperator> {
    let n = data.len();
    if n == 0 || data.iter().any(|row| row.len() != n) {
        return Err(Error::Format("matrix must be a non-empty square list of rows".into()));
    }
    if data.iter().flatten().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Format("matrix entries must be finite".into()));
    }
    let m = ComplexMatrix::from_fn(n, n, |i, j| {
        if i == j {
            c(data[i][i][0], 0.0)
        } else if i < j {
            c(data[i][j][0], data[i][j][1])
        } else {
            c(data[j][i][0], -data[j][i][1])
        }
    });
    HermitianOperator::new(m)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelFile {
    pub d_in: usize,
    pub d_out: usize,
    pub choi: MatrixData,
}

impl ChannelFile {
    pub fn from_channel(ch: &QuantumChannel) -> Self {
        Self { d_in: ch.d_in(), d_out: ch.d_out(), choi: hermitian_to_data(ch.choi()) }
    }

    pub fn to_channel(&self) -> Result<QuantumChannel> {
        let choi = hermitian_from_data(&self.choi)?;
        if choi.dim() != self.d_in * self.d_out {
            return Err(Error::Format(format!(
                "Choi matrix has dimension {}, expected d_out·d_in = {}",
                choi.dim(),
                self.d_in * self.d_out
            )));
        }
        QuantumChannel::with_tolerance(self.d_in, self.d_out, choi, 1e-7)
    }
}

pub fn read_channel(path: &Path) -> Result<QuantumChannel> {
    let text = fs::read_to_string(path)?;
    let file: ChannelFile = serde_json::from_str(&text)?;
    file.to_channel()
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintRecord {
    #[serde(rename = "C")]
    pub c: MatrixData,
    pub q: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

/// Constraint documents: a bare list of records (square channel inferred from
/// the operator size), an explicit object with dimensions, or a named preset
/// with its parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ConstraintFile {
    List(Vec<ConstraintRecord>),
    Explicit { d_in: usize, d_out: usize, constraints: Vec<ConstraintRecord> },
    Preset(PresetSpec),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PresetSpec {
    pub preset: String,
    #[serde(flatten)]
    pub params: serde_json::Map<String, serde_json::Value>,
}

impl ConstraintFile {
    pub fn to_constraint_set(&self) -> Result<ConstraintSet> {
        match self {
            ConstraintFile::List(items) => {
                let dim = items.first().map(|r| r.c.len()).unwrap_or(4);
                let d = (dim as f64).sqrt().round() as usize;
                if d * d != dim {
                    return Err(Error::Format(format!(
                        "cannot infer square channel dimensions from a {dim}×{dim} operator; use the object form"
                    )));
                }
                records_to_set(d, d, items)
            }
            ConstraintFile::Explicit { d_in, d_out, constraints } => records_to_set(*d_in, *d_out, constraints),
            ConstraintFile::Preset(p) => crate::presets::constraint_registry().build(&p.preset, &p.params),
        }
    }
}

fn records_to_set(d_in: usize, d_out: usize, items: &[ConstraintRecord]) -> Result<ConstraintSet> {
    let mut cs = ConstraintSet::new(d_in, d_out);
    for (k, r) in items.iter().enumerate() {
        let label = r.label.clone().unwrap_or_else(|| format!("c{k}"));
        cs.push(label, hermitian_from_data(&r.c)?, r.q)?;
    }
    Ok(cs)
}

pub fn constraint_records(cs: &ConstraintSet) -> Vec<ConstraintRecord> {
    cs.items()
        .iter()
        .map(|c| ConstraintRecord { c: hermitian_to_data(&c.op), q: c.value, label: Some(c.label.clone()) })
        .collect()
}

pub fn read_constraints(path: &Path) -> Result<ConstraintSet> {
    let text = fs::read_to_string(path)?;
    let file: ConstraintFile = serde_json::from_str(&text)?;
    file.to_constraint_set()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResidualsFile {
    pub constraint: f64,
    pub cptp: f64,
    pub gibbs_form: Option<f64>,
    pub entropy_identity: f64,
    pub optimality: Option<f64>,
}

/// A solved thermal channel with its dual data and the constraints it was
/// solved for.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolutionFile {
    pub format_version: u32,
    pub seed: u64,
    pub d_in: usize,
    pub d_out: usize,
    pub choi: MatrixData,
    pub constraints: Vec<ConstraintRecord>,
    pub mu: Vec<f64>,
    pub phi: MatrixData,
    pub f_bar: MatrixData,
    pub free_energy: MatrixData,
    pub entropy: f64,
    pub boundary_flag: bool,
    pub dual_norm: f64,
    pub multipliers: Vec<f64>,
    pub residuals: ResidualsFile,
}

impl SolutionFile {
    pub fn new(th: &ThermalSolution, cs: &ConstraintSet, seed: u64) -> Result<Self> {
        let r = &th.residuals;
        Ok(Self {
            format_version: FORMAT_VERSION,
            seed,
            d_in: th.channel.d_in(),
            d_out: th.channel.d_out(),
            choi: hermitian_to_data(th.channel.choi()),
            constraints: constraint_records(cs),
            mu: th.mu.clone(),
            phi: hermitian_to_data(th.phi.operator()),
            f_bar: hermitian_to_data(&th.f_bar),
            free_energy: hermitian_to_data(&th.free_energy()?),
            entropy: th.entropy,
            boundary_flag: th.boundary_flag,
            dual_norm: th.dual_norm,
            multipliers: th.multipliers.clone(),
            residuals: ResidualsFile {
                constraint: r.constraint,
                cptp: r.cptp,
                gibbs_form: r.gibbs_form,
                entropy_identity: r.entropy_identity,
                optimality: r.optimality,
            },
        })
    }

    pub fn constraint_set(&self) -> Result<ConstraintSet> {
        records_to_set(self.d_in, self.d_out, &self.constraints)
    }

    pub fn to_solution(&self) -> Result<ThermalSolution> {
        if self.format_version != FORMAT_VERSION {
            return Err(Error::Format(format!("unsupported format_version {}", self.format_version)));
        }
        let channel = ChannelFile { d_in: self.d_in, d_out: self.d_out, choi: self.choi.clone() }.to_channel()?;
        if self.mu.len() != self.constraints.len() {
            return Err(Error::Format("one multiplier per constraint expected".into()));
        }
        let r = &self.residuals;
        Ok(ThermalSolution {
            channel,
            mu: self.mu.clone(),
            f_bar: hermitian_from_data(&self.f_bar)?,
            phi: ReferenceState::new(hermitian_from_data(&self.phi)?)?,
            entropy: self.entropy,
            residuals: Residuals {
                constraint: r.constraint,
                cptp: r.cptp,
                gibbs_form: r.gibbs_form,
                entropy_identity: r.entropy_identity,
                optimality: r.optimality,
            },
            boundary_flag: self.boundary_flag,
            dual_norm: self.dual_norm,
            multipliers: self.multipliers.clone(),
        })
    }
}

pub fn read_solution(path: &Path) -> Result<SolutionFile> {
    let text = fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}
