//! JSON documents written by the scalar commands. Schemas live in `docs/schemas`.

use serde::Serialize;
use thermal_channel::io::MatrixData;

#[derive(Debug, Serialize)]
pub struct EntropyOutput {
    pub format_version: u32,
    pub command: &'static str,
    pub channel: String,
    pub seed: u64,
    pub restarts: usize,
    pub value: f64,
    pub phi: MatrixData,
}

/// `value` is `null` when the divergence is infinite (support failure).
#[derive(Debug, Serialize)]
pub struct RelentOutput {
    pub format_version: u32,
    pub command: &'static str,
    pub a: String,
    pub b: String,
    pub seed: u64,
    pub restarts: usize,
    pub infinite: bool,
    pub value: Option<f64>,
    pub phi: Option<MatrixData>,
}

#[derive(Debug, Serialize)]
pub struct DiamondOutput {
    pub format_version: u32,
    pub command: &'static str,
    pub a: String,
    pub b: String,
    pub value: f64,
    pub approximate: bool,
}

#[derive(Debug, Serialize)]
pub struct VerifyOutput {
    pub format_version: u32,
    pub command: &'static str,
    pub solution_seed: u64,
    pub constraint: f64,
    pub cptp: f64,
    pub gibbs_form: Option<f64>,
    pub entropy_identity: f64,
    pub optimality: Option<f64>,
    pub limit_regime: bool,
    pub passed: bool,
}
