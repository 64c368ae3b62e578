//! Named presets for constraint sets and channels, looked up by name from
//! configuration files and the command line.

use serde_json::{Map, Value};

use crate::channel::{self, QuantumChannel};
use crate::constraints::{
    average_energy_constraints, output_observable_constraint, output_observable_for_states,
    pauli_correlation_constraints, strict_conservation_constraints, tomographically_complete_states, ConstraintSet,
};
use crate::error::{Error, Result};
use crate::io::{hermitian_from_data, MatrixData};
use crate::linalg::{pauli, ComplexMatrix, HermitianOperator};

pub type Params = Map<String, Value>;

pub trait ConstraintPreset: Send + Sync {
    fn name(&self) -> &'static str;
    fn summary(&self) -> &'static str;
    fn build(&self, params: &Params) -> Result<ConstraintSet>;
}

pub trait ChannelPreset: Send + Sync {
    fn name(&self) -> &'static str;
    fn summary(&self) -> &'static str;
    fn build(&self, args: &[f64]) -> Result<QuantumChannel>;
}

pub struct Registry<T: ?Sized> {
    entries: Vec<Box<T>>,
}

impl<T: ?Sized> Registry<T> {
    pub fn iter(&self) -> impl Iterator<Item = &T> {
        self.entries.iter().map(|b| b.as_ref())
    }
}

impl Registry<dyn ConstraintPreset> {
    pub fn get(&self, name: &str) -> Result<&dyn ConstraintPreset> {
        self.iter().find(|p| p.name() == name).ok_or_else(|| Error::UnknownName(name.to_string()))
    }

    pub fn build(&self, name: &str, params: &Params) -> Result<ConstraintSet> {
        self.get(name)?.build(params)
    }
}

impl Registry<dyn ChannelPreset> {
    pub fn get(&self, name: &str) -> Result<&dyn ChannelPreset> {
        self.iter().find(|p| p.name() == name).ok_or_else(|| Error::UnknownName(name.to_string()))
    }

    /// Parses `name` or `name:a,b,...`.
    pub fn build_spec(&self, spec: &str) -> Result<QuantumChannel> {
        let (name, rest) = spec.split_once(':').unwrap_or((spec, ""));
        let args = rest
            .split(',')
            .filter(|s| !s.trim().is_empty())
            .map(|s| s.trim().parse::<f64>().map_err(|_| Error::InvalidParameter(format!("bad preset argument `{s}`"))))
            .collect::<Result<Vec<_>>>()?;
        self.get(name)?.build(&args)
    }
}

pub fn constraint_registry() -> Registry<dyn ConstraintPreset> {
    Registry {
        entries: vec![
            Box::new(NoConstraints),
            Box::new(GibbsOutput),
            Box::new(StrictConservation),
            Box::new(AverageEnergy),
            Box::new(PauliCorrelations),
        ],
    }
}

pub fn channel_registry() -> Registry<dyn ChannelPreset> {
    Registry {
        entries: vec![
            Box::new(Simple("identity", "identity channel [d=2]", |a| Ok(channel::identity(arg_usize(a, 0, 2)?)))),
            Box::new(Simple("depolarizing", "qubit depolarizing channel, p", |a| channel::depolarizing(arg(a, 0)?))),
            Box::new(Simple("completely_depolarizing", "ρ ↦ 1/d [d=2]", |a| {
                let d = arg_usize(a, 0, 2)?;
                Ok(channel::completely_depolarizing(d, d))
            })),
            Box::new(Simple("amplitude_damping", "qubit amplitude damping, gamma", |a| {
                channel::amplitude_damping(arg(a, 0)?)
            })),
            Box::new(Simple("dephasing", "complete dephasing in the computational basis [d=2]", |a| {
                let d = arg_usize(a, 0, 2)?;
                channel::dephasing(&ComplexMatrix::identity(d, d))
            })),
            Box::new(Simple("pauli", "Pauli channel, p_I,p_X,p_Y,p_Z", |a| {
                channel::pauli_channel(arg(a, 0)?, arg(a, 1)?, arg(a, 2)?, arg(a, 3)?)
            })),
            Box::new(Simple("gibbs_replacer", "replaces the input by exp(−βZ)/Z, beta", |a| {
                channel::gibbs_replacer(&pauli::z(), arg(a, 0)?, 2)
            })),
            Box::new(Simple("unitary_x", "qubit bit flip", |_| channel::unitary_channel(pauli::x().matrix()))),
            Box::new(Simple("random", "random qubit channel, seed [,d_env=2]", |a| {
                let seed = arg(a, 0)?;
                if seed < 0.0 || seed.fract() != 0.0 {
                    return Err(Error::InvalidParameter("random channel seed must be a non-negative integer".into()));
                }
                channel::random_channel(2, 2, arg_usize(a, 1, 2)?, seed as u64)
            })),
        ],
    }
}

struct Simple(&'static str, &'static str, fn(&[f64]) -> Result<QuantumChannel>);

impl ChannelPreset for Simple {
    fn name(&self) -> &'static str {
        self.0
    }

    fn summary(&self) -> &'static str {
        self.1
    }

    fn build(&self, args: &[f64]) -> Result<QuantumChannel> {
        (self.2)(args)
    }
}

fn arg(a: &[f64], i: usize) -> Result<f64> {
    a.get(i).copied().ok_or_else(|| Error::InvalidParameter(format!("missing preset argument #{}", i + 1)))
}

fn arg_usize(a: &[f64], i: usize, default: usize) -> Result<usize> {
    match a.get(i) {
        None => Ok(default),
        Some(v) if *v >= 1.0 && v.fract() == 0.0 => Ok(*v as usize),
        Some(v) => Err(Error::InvalidParameter(format!("expected a positive integer, got {v}"))),
    }
}

fn param_f64(p: &Params, key: &str) -> Result<Option<f64>> {
    match p.get(key) {
        None | Some(Value::Null) => Ok(None),
        Some(v) => v.as_f64().map(Some).ok_or_else(|| Error::InvalidParameter(format!("`{key}` must be a number"))),
    }
}

fn param_usize(p: &Params, key: &str) -> Result<Option<usize>> {
    match p.get(key) {
        None | Some(Value::Null) => Ok(None),
        Some(v) => v
            .as_u64()
            .filter(|&n| n >= 1)
            .map(|n| Some(n as usize))
            .ok_or_else(|| Error::InvalidParameter(format!("`{key}` must be a positive integer"))),
    }
}

fn param_operator(p: &Params, key: &str, default: &str) -> Result<HermitianOperator> {
    match p.get(key) {
        None | Some(Value::Null) => parse_operator(default),
        Some(Value::String(s)) => parse_operator(s),
        Some(v) => {
            let data: MatrixData = serde_json::from_value(v.clone())?;
            hermitian_from_data(&data)
        }
    }
}

/// Parses operator expressions: sums of weighted Pauli strings such as
/// `ZI+IZ` or `0.5*X-Y`, or `diag(a,b,...)`.
pub fn parse_operator(s: &str) -> Result<HermitianOperator> {
    let s: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let bad = || Error::InvalidParameter(format!("cannot parse operator `{s}`"));
    if let Some(inner) = s.strip_prefix("diag(").and_then(|r| r.strip_suffix(')')) {
        let vals = inner.split(',').map(|v| v.parse::<f64>().map_err(|_| bad())).collect::<Result<Vec<_>>>()?;
        if vals.is_empty() {
            return Err(bad());
        }
        return Ok(HermitianOperator::from_real_diagonal(&vals));
    }
    let mut terms: Vec<(f64, String)> = Vec::new();
    let mut cur = String::new();
    for ch in s.chars() {
        if (ch == '+' || ch == '-') && !cur.is_empty() && !cur.ends_with('*') && !cur.ends_with('e') {
            terms.push(split_term(&cur).ok_or_else(bad)?);
            cur.clear();
        }
        cur.push(ch);
    }
    terms.push(split_term(&cur).ok_or_else(bad)?);
    let len = terms[0].1.len();
    if len == 0 || terms.iter().any(|t| t.1.len() != len) {
        return Err(bad());
    }
    let mut acc: Option<HermitianOperator> = None;
    for (w, word) in terms {
        let mut op: Option<HermitianOperator> = None;
        for ch in word.chars() {
            let f = pauli::by_name(ch).ok_or_else(bad)?;
            op = Some(match op {
                None => f,
                Some(o) => o.kron(&f),
            });
        }
        let op = op.ok_or_else(bad)?.scaled(w);
        acc = Some(match acc {
            None => op,
            Some(a) => a.add(&op),
        });
    }
    acc.ok_or_else(bad)
}

fn split_term(t: &str) -> Option<(f64, String)> {
    let (sign, body) = match t.strip_prefix('-') {
        Some(b) => (-1.0, b),
        None => (1.0, t.strip_prefix('+').unwrap_or(t)),
    };
    match body.split_once('*') {
        Some((coef, word)) => Some((sign * coef.parse::<f64>().ok()?, word.to_string())),
        None => Some((sign, body.to_string())),
    }
}

struct NoConstraints;

impl ConstraintPreset for NoConstraints {
    fn name(&self) -> &'static str {
        "none"
    }

    fn summary(&self) -> &'static str {
        "no constraints; params d_in [2], d_out [d_in]"
    }

    fn build(&self, p: &Params) -> Result<ConstraintSet> {
        let d_in = param_usize(p, "d_in")?.unwrap_or(2);
        let d_out = param_usize(p, "d_out")?.unwrap_or(d_in);
        Ok(ConstraintSet::new(d_in, d_out))
    }
}

struct GibbsOutput;

impl ConstraintPreset for GibbsOutput {
    fn name(&self) -> &'static str {
        "gibbs_output"
    }

    fn summary(&self) -> &'static str {
        "fixed output energy tr[H N(1/d)] = q; params H [Z], q [−tanh 1], all_inputs [false]"
    }

    fn build(&self, p: &Params) -> Result<ConstraintSet> {
        let h = param_operator(p, "H", "Z")?;
        let q = param_f64(p, "q")?.unwrap_or(-(1f64).tanh());
        let d_in = param_usize(p, "d_in")?.unwrap_or(h.dim());
        let all = match p.get("all_inputs") {
            None | Some(Value::Null) => false,
            Some(v) => v.as_bool().ok_or_else(|| Error::InvalidParameter("`all_inputs` must be a boolean".into()))?,
        };
        if all {
            output_observable_for_states(&h, &tomographically_complete_states(d_in), q)
        } else {
            output_observable_constraint(&h, &HermitianOperator::identity(d_in).scaled(1.0 / d_in as f64), q)
        }
    }
}

struct StrictConservation;

impl ConstraintPreset for StrictConservation {
    fn name(&self) -> &'static str {
        "strict_conservation"
    }

    fn summary(&self) -> &'static str {
        "outputs stay in the input's energy eigenspace; params H [ZI+IZ]"
    }

    fn build(&self, p: &Params) -> Result<ConstraintSet> {
        strict_conservation_constraints(&param_operator(p, "H", "ZI+IZ")?, None)
    }
}

struct AverageEnergy;

impl ConstraintPreset for AverageEnergy {
    fn name(&self) -> &'static str {
        "avg_energy"
    }

    fn summary(&self) -> &'static str {
        "average energy conserved on every input; params H [Z] (or H_A, H_B)"
    }

    fn build(&self, p: &Params) -> Result<ConstraintSet> {
        let h = param_operator(p, "H", "Z")?;
        let h_a = if p.contains_key("H_A") { param_operator(p, "H_A", "Z")? } else { h.clone() };
        let h_b = if p.contains_key("H_B") { param_operator(p, "H_B", "Z")? } else { h };
        average_energy_constraints(&h_a, &h_b)
    }
}

struct PauliCorrelations;

impl ConstraintPreset for PauliCorrelations {
    fn name(&self) -> &'static str {
        "pauli"
    }

    fn summary(&self) -> &'static str {
        "T(P) = c_P P for P = X, Y, Z; params c (all three) or c_x, c_y, c_z"
    }

    fn build(&self, p: &Params) -> Result<ConstraintSet> {
        let common = param_f64(p, "c")?;
        let get = |k: &str| -> Result<f64> {
            param_f64(p, k)?
                .or(common)
                .ok_or_else(|| Error::InvalidParameter(format!("pauli preset needs `{k}` or `c`")))
        };
        pauli_correlation_constraints(get("c_x")?, get("c_y")?, get("c_z")?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn operator_expressions() {
        let h = parse_operator("ZI+IZ").unwrap();
        assert_eq!(h.dim(), 4);
        assert!(h.max_abs_diff(&HermitianOperator::from_real_diagonal(&[2.0, 0.0, 0.0, -2.0])) < 1e-15);
        let h = parse_operator("0.5*X - Z").unwrap();
        assert!(h.max_abs_diff(&pauli::x().scaled(0.5).sub(&pauli::z())) < 1e-15);
        let h = parse_operator("diag(-1,0,1)").unwrap();
        assert_eq!(h.dim(), 3);
        assert!(parse_operator("ZQ").is_err());
        assert!(parse_operator("Z+ZZ").is_err());
        assert!(parse_operator("1e-3*Z").is_ok());
    }

    #[test]
    fn registries_resolve_names() {
        let reg = constraint_registry();
        for name in ["none", "gibbs_output", "strict_conservation", "avg_energy"] {
            assert!(reg.build(name, &Params::new()).is_ok(), "{name}");
        }
        let mut p = Params::new();
        p.insert("c".into(), Value::from(0.4));
        assert_eq!(reg.build("pauli", &p).unwrap().len(), 3);
        assert!(matches!(reg.build("nope", &p), Err(Error::UnknownName(_))));
        let ch = channel_registry();
        assert!(ch.build_spec("depolarizing:0.2").is_ok());
        assert!(ch.build_spec("random:3").is_ok());
        assert!(ch.build_spec("depolarizing").is_err());
        assert!(ch.build_spec("random:-1").is_err());
    }
}
