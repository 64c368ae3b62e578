//! Linear Choi-matrix constraints `tr[C^j J] = q_j` and builders for the
//! standard families.

use crate::channel::QuantumChannel;
use crate::error::{Error, Result};
use crate::linalg::{c, eig_hermitian, matrix_function, ComplexMatrix, HermitianOperator, MatrixFunction, ONE, ZERO};

#[derive(Debug, Clone)]
pub struct Constraint {
    pub label: String,
    /// Operator on `B ⊗ R`.
    pub op: HermitianOperator,
    pub value: f64,
}

#[derive(Debug, Clone)]
pub struct ConstraintSet {
    d_in: usize,
    d_out: usize,
    items: Vec<Constraint>,
}

impl ConstraintSet {
    pub fn new(d_in: usize, d_out: usize) -> Self {
        Self { d_in, d_out, items: Vec::new() }
    }

    pub fn d_in(&self) -> usize {
        self.d_in
    }

    pub fn d_out(&self) -> usize {
        self.d_out
    }

    pub fn items(&self) -> &[Constraint] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn push(&mut self, label: impl Into<String>, op: HermitianOperator, value: f64) -> Result<()> {
        let label = label.into();
        if op.dim() != self.d_in * self.d_out {
            return Err(Error::DimensionMismatch(format!(
                "constraint `{label}` has dimension {}, expected {}",
                op.dim(),
                self.d_in * self.d_out
            )));
        }
        if !value.is_finite() {
            return Err(Error::NonFinite(format!("value of constraint `{label}`")));
        }
        if self.items.iter().any(|c| c.label == label) {
            return Err(Error::InvalidParameter(format!("duplicate constraint label `{label}`")));
        }
        self.items.push(Constraint { label, op, value });
        Ok(())
    }

    pub fn extend(&mut self, other: ConstraintSet) -> Result<()> {
        if other.d_in != self.d_in || other.d_out != self.d_out {
            return Err(Error::DimensionMismatch("constraint sets act on different systems".into()));
        }
        for c in other.items {
            self.push(c.label, c.op, c.value)?;
        }
        Ok(())
    }

    /// `max_j |tr[C^j J] − q_j|`
    pub fn residual(&self, ch: &QuantumChannel) -> f64 {
        self.items
            .iter()
            .map(|c| (c.op.inner(ch.choi()) - c.value).abs())
            .fold(0.0, f64::max)
    }
}

/// `C = Q_B ⊗ ρ_A^t`: fixes `tr[Q N(ρ)] = q`.
pub fn io_constraint(rho_a: &HermitianOperator, q_b: &HermitianOperator) -> HermitianOperator {
    q_b.kron(&rho_a.transpose())
}

/// Single-constraint set fixing the expectation of `H_B` on the output of `ρ_A`.
pub fn output_observable_constraint(h_b: &HermitianOperator, rho_a: &HermitianOperator, q: f64) -> Result<ConstraintSet> {
    let mut cs = ConstraintSet::new(rho_a.dim(), h_b.dim());
    cs.push("output", io_constraint(rho_a, h_b), q)?;
    Ok(cs)
}

/// Same output expectation imposed for every state of `states`.
pub fn output_observable_for_states(h_b: &HermitianOperator, states: &[HermitianOperator], q: f64) -> Result<ConstraintSet> {
    let d_in = states.first().map(|s| s.dim()).ok_or_else(|| Error::InvalidParameter("no input states".into()))?;
    let mut cs = ConstraintSet::new(d_in, h_b.dim());
    for (k, rho) in states.iter().enumerate() {
        cs.push(format!("output[{k}]"), io_constraint(rho, h_b), q)?;
    }
    Ok(cs)
}

/// The computational basis states plus `(|j⟩±|k⟩)/√2` and `(|j⟩±i|k⟩)/√2`
/// for `j < k`; for `d = 2` these are the six stabilizer states.
pub fn tomographically_complete_states(d: usize) -> Vec<HermitianOperator> {
    let mut out = Vec::with_capacity(d * d + d * (d - 1));
    let ket = |entries: &[(usize, num_complex::Complex64)]| {
        let mut v = vec![ZERO; d];
        for &(i, z) in entries {
            v[i] = z;
        }
        HermitianOperator::outer(&v)
    };
    for k in 0..d {
        out.push(ket(&[(k, ONE)]));
    }
    let s = std::f64::consts::FRAC_1_SQRT_2;
    for j in 0..d {
        for k in (j + 1)..d {
            for phase in [c(s, 0.0), c(-s, 0.0), c(0.0, s), c(0.0, -s)] {
                out.push(ket(&[(j, c(s, 0.0)), (k, phase)]));
            }
        }
    }
    out
}

/// The six single-qubit stabilizer states in a fixed order:
/// `|0⟩, |1⟩, |+⟩, |−⟩, |+i⟩, |−i⟩`.
pub fn stabilizer_states() -> Vec<HermitianOperator> {
    tomographically_complete_states(2)
}

/// Real dimension of the span of a set of Hermitian operators.
pub fn span_rank(ops: &[HermitianOperator]) -> usize {
    let k = ops.len();
    if k == 0 {
        return 0;
    }
    let mut gram = nalgebra::DMatrix::<f64>::zeros(k, k);
    for i in 0..k {
        for j in i..k {
            let g = ops[i].inner(&ops[j]);
            gram[(i, j)] = g;
            gram[(j, i)] = g;
        }
    }
    let eig = nalgebra::SymmetricEigen::new(gram);
    let max = eig.eigenvalues.iter().fold(0.0f64, |m, v| m.max(*v));
    eig.eigenvalues.iter().filter(|&&v| v > 1e-10 * max.max(1e-300)).count()
}

/// Average-energy conservation `tr[H_B N(ρ)] = tr[H_A ρ]` for every `ρ` in
/// `states`, encoded as
/// `C = H_B ⊗ ρ^t − 1_B ⊗ (ρ^{1/2} H_A ρ^{1/2})^t` with `q = 0`.
pub fn average_energy_constraints_for(
    h_a: &HermitianOperator,
    h_b: &HermitianOperator,
    states: &[HermitianOperator],
) -> Result<ConstraintSet> {
    let d_a = h_a.dim();
    if span_rank(states) < d_a * d_a {
        return Err(Error::RankDeficient { rank: span_rank(states), expected: d_a * d_a });
    }
    let mut cs = ConstraintSet::new(d_a, h_b.dim());
    let id_b = HermitianOperator::identity(h_b.dim());
    for (k, rho) in states.iter().enumerate() {
        if rho.dim() != d_a {
            return Err(Error::DimensionMismatch("input state does not act on A".into()));
        }
        let s = matrix_function(rho, MatrixFunction::Sqrt)?;
        let e = h_a.sandwich(&s);
        let op = io_constraint(rho, h_b).sub(&id_b.kron(&e.transpose()));
        cs.push(format!("energy[{k}]"), op, 0.0)?;
    }
    Ok(cs)
}

pub fn average_energy_constraints(h_a: &HermitianOperator, h_b: &HermitianOperator) -> Result<ConstraintSet> {
    average_energy_constraints_for(h_a, h_b, &tomographically_complete_states(h_a.dim()))
}

/// Eigenspaces of `H`, grouping eigenvalues closer than `tol`.
#[derive(Debug, Clone)]
pub struct Eigenspace {
    pub energy: f64,
    /// Orthonormal basis as columns.
    pub basis: ComplexMatrix,
}

impl Eigenspace {
    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn projector(&self) -> HermitianOperator {
        HermitianOperator::hermitian_part(&(&self.basis * self.basis.adjoint()))
    }

    /// Embeds an operator on the eigenspace into the full space.
    pub fn embed(&self, x: &HermitianOperator) -> HermitianOperator {
        HermitianOperator::hermitian_part(&(&self.basis * x.matrix() * self.basis.adjoint()))
    }
}

pub fn eigenspaces(h: &HermitianOperator, tol: f64) -> Result<Vec<Eigenspace>> {
    let spec = eig_hermitian(h)?;
    let mut out: Vec<Eigenspace> = Vec::new();
    let mut start = 0;
    let n = spec.dim();
    while start < n {
        let mut end = start + 1;
        while end < n && spec.values[end] - spec.values[start] <= tol {
            end += 1;
        }
        let energy = spec.values[start..end].iter().sum::<f64>() / (end - start) as f64;
        let basis = spec.vectors.columns(start, end - start).into_owned();
        out.push(Eigenspace { energy, basis });
        start = end;
    }
    Ok(out)
}

/// Strict energy conservation: for every eigenspace `E`, every state `ρ` of its
/// spanning set and every other eigenspace `E'`,
/// `tr[(Π_{E'} ⊗ ρ^t) J] = 0`. `spanning` supplies one set of states per
/// eigenspace (in ascending energy order, on the full space); `None` uses the
/// tomographically complete set of each eigenspace.
pub fn strict_conservation_constraints(
    h: &HermitianOperator,
    spanning: Option<&[Vec<HermitianOperator>]>,
) -> Result<ConstraintSet> {
    let spaces = eigenspaces(h, 1e-9)?;
    let d = h.dim();
    let sets: Vec<Vec<HermitianOperator>> = match spanning {
        Some(s) => {
            if s.len() != spaces.len() {
                return Err(Error::DimensionMismatch(format!(
                    "{} spanning sets for {} eigenspaces",
                    s.len(),
                    spaces.len()
                )));
            }
            s.to_vec()
        }
        None => spaces
            .iter()
            .map(|sp| tomographically_complete_states(sp.dim()).iter().map(|r| sp.embed(r)).collect())
            .collect(),
    };
    let mut cs = ConstraintSet::new(d, d);
    for (e, (space, set)) in spaces.iter().zip(&sets).enumerate() {
        // the set must span all operators supported on the eigenspace
        let proj = space.projector();
        for rho in set {
            if rho.dim() != d || rho.sub(&rho.sandwich(&proj)).frobenius() > 1e-9 {
                return Err(Error::InvalidParameter(format!("spanning state not supported on eigenspace {e}")));
            }
        }
        let rank = span_rank(set);
        if rank < space.dim() * space.dim() {
            return Err(Error::RankDeficient { rank, expected: space.dim() * space.dim() });
        }
        for (k, rho) in set.iter().enumerate() {
            for (f, other) in spaces.iter().enumerate() {
                if f == e {
                    continue;
                }
                cs.push(format!("block[{e}->{f}][{k}]"), io_constraint(rho, &other.projector()), 0.0)?;
            }
        }
    }
    Ok(cs)
}

/// `T(P) = c_P P` for `P ∈ {X, Y, Z}`, encoded as `C_P = (P ⊗ P^t)/2`, `q = c_P`.
pub fn pauli_correlation_constraints(cx: f64, cy: f64, cz: f64) -> Result<ConstraintSet> {
    use crate::linalg::pauli;
    let mut cs = ConstraintSet::new(2, 2);
    for (name, p, v) in [("X", pauli::x(), cx), ("Y", pauli::y(), cy), ("Z", pauli::z(), cz)] {
        cs.push(format!("pauli[{name}]"), p.kron(&p.transpose()).scaled(0.5), v)?;
    }
    Ok(cs)
}
