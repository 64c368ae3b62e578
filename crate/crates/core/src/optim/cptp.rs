//! Linear minimization over the set of CPTP Choi matrices.

use crate::channel::QuantumChannel;
use crate::error::{Error, Result};
use crate::linalg::{eig_hermitian, hermitian_basis, id_kron, matrix_function, trace_first, HermitianOperator, MatrixFunction};
use crate::optim::sdp::{sdp_solve, SdpConstraint, SdpOptions, SdpProblem};

/// `argmin tr[G J]` over `{J ⪰ 0, tr_B J = 1_R}` on `B ⊗ R`.
pub fn cptp_linear_minimize(g: &HermitianOperator, d_in: usize, d_out: usize) -> Result<QuantumChannel> {
    cptp_linear_minimize_with(g, d_in, d_out, &SdpOptions::default())
}

pub fn cptp_linear_minimize_with(
    g: &HermitianOperator,
    d_in: usize,
    d_out: usize,
    opts: &SdpOptions,
) -> Result<QuantumChannel> {
    if g.dim() != d_in * d_out {
        return Err(Error::DimensionMismatch(format!(
            "objective has dimension {}, expected {}",
            g.dim(),
            d_in * d_out
        )));
    }
    let constraints = hermitian_basis(d_in)
        .into_iter()
        .map(|e| {
            let rhs = e.trace();
            SdpConstraint { terms: vec![Some(HermitianOperator::identity(d_out).kron(&e))], rhs }
        })
        .collect();
    // Shifting G by a multiple of the identity leaves the argmin unchanged and
    // keeps the dual slack well scaled.
    let p = SdpProblem { blocks: vec![d_in * d_out], objective: vec![Some(g.clone())], constraints };
    let sol = sdp_solve(&p, opts)?;
    let j = repair_choi(&sol.primal[0], d_in, d_out)?;
    QuantumChannel::with_tolerance(d_in, d_out, j, 1e-8)
}

/// Removes residual solver error: clips negative Choi eigenvalues and
/// restores `tr_B J = 1_R` exactly by a congruence on R.
pub fn repair_choi(j: &HermitianOperator, d_in: usize, d_out: usize) -> Result<HermitianOperator> {
    let spec = eig_hermitian(j)?;
    let clipped = spec.map(|l| l.max(0.0));
    let x = HermitianOperator::hermitian_part(&trace_first(clipped.matrix(), d_out, d_in));
    let s = matrix_function(&x, MatrixFunction::InvSqrt)?;
    Ok(clipped.sandwich(&HermitianOperator::hermitian_part(&id_kron(d_out, s.matrix()))))
}
