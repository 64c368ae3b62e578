//! Thermal channels: the fixed-reference maximum-entropy problem, the outer
//! search over reference states, and structure checks on the result.
//!
//! For a full-rank reference `φ` write `τ = (1 ⊗ √φ) J (1 ⊗ √φ)`. Maximizing
//! `S(B|R)_τ` over CPTP maps is then an ordinary maxent problem for `τ` with
//! marginal constraints `tr_B τ = φ` and scaled constraint observables
//! `H^j = (1 ⊗ φ^{-1/2}) C^j (1 ⊗ φ^{-1/2})`. Its solution has the form
//! `τ = exp(−1 − 1 ⊗ Λ − Σ_j μ_j H^j)`, which maps back to
//!
//! ```text
//! J = φ^{-1/2} exp(φ^{-1/2} (1 ⊗ F̄ − Σ_j μ_j C^j) φ^{-1/2}) φ^{-1/2},
//! F̄ = −φ − √φ Λ √φ,
//! ```
//!
//! and the attained value is `S(B|R) = −tr F + Σ_j μ_j q_j` with
//! `F = F̄ − φ log φ`.

use crate::channel::{complementary, QuantumChannel, ReferenceState};
use crate::constraints::ConstraintSet;
use crate::error::{Error, Result};
use crate::linalg::{
    eig_hermitian, hermitian_basis, id_kron, matrix_function, ComplexMatrix, HermitianOperator, MatrixFunction,
};
use crate::metrics::{output_conditional_entropy, BlochParametrization};
use crate::optim::cptp::repair_choi;
use crate::optim::local_search::{LocalSearch, RestartCenter};
use crate::optim::maxent::{maxent_solve_from, MaxEntOptions, MaxEntProblem};

#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    /// Constraint tolerance of the inner maxent solve.
    pub tol: f64,
    pub restarts: usize,
    pub seed: u64,
    /// Reference states with a smallest eigenvalue below this are excluded
    /// from the outer search.
    pub phi_floor: f64,
    /// Smallest Choi eigenvalue below which the solution is treated as lying
    /// on the boundary of the CP cone.
    pub cone_floor: f64,
    /// Spread of the independent outer restarts (Bloch coordinates).
    pub jitter: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { tol: 1e-10, restarts: 4, seed: 0, phi_floor: 1e-4, cone_floor: 1e-7, jitter: 0.5 }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Residuals {
    /// `max_j |tr[C^j J] − q_j|`
    pub constraint: f64,
    /// Larger of the CP and TP violations.
    pub cptp: f64,
    /// Frobenius distance between the Choi matrix and its exponential form.
    pub gibbs_form: Option<f64>,
    /// `|S + tr F − Σ μ_j q_j|`
    pub entropy_identity: f64,
    /// `min_c ‖log φ_A − T̂†(log T̂(φ_A)) − c·1‖_F`
    pub optimality: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct ThermalSolution {
    pub channel: QuantumChannel,
    /// Chemical potentials, one per constraint.
    pub mu: Vec<f64>,
    /// Trace-preservation multiplier `F̄` on R.
    pub f_bar: HermitianOperator,
    pub phi: ReferenceState,
    /// `S(B|R)` of the channel output at `φ`.
    pub entropy: f64,
    pub residuals: Residuals,
    /// The optimum sits on the boundary (duals diverge); the channel is the
    /// best interior approximation of the limit.
    pub boundary_flag: bool,
    pub dual_norm: f64,
    /// Full dual vector of the inner solve (marginal block first), usable as
    /// a warm start.
    pub multipliers: Vec<f64>,
}

impl ThermalSolution {
    /// `F = F̄ − φ log φ`.
    pub fn free_energy(&self) -> Result<HermitianOperator> {
        let log = matrix_function(self.phi.operator(), MatrixFunction::Log)?;
        Ok(self.f_bar.sub(&self.phi.operator().mul_hermitian(&log)))
    }
}

fn lift_r(d_b: usize, x: &HermitianOperator) -> HermitianOperator {
    HermitianOperator::hermitian_part(&id_kron(d_b, x.matrix()))
}

/// Thermal channel with respect to a fixed full-rank reference `φ`.
pub fn thermal_given_phi(cs: &ConstraintSet, phi: &ReferenceState, tol: f64) -> Result<ThermalSolution> {
    thermal_given_phi_from(cs, phi, tol, None)
}

/// As [`thermal_given_phi`], warm-starting the dual solve from the
/// `multipliers` of a previous solution.
pub fn thermal_given_phi_from(
    cs: &ConstraintSet,
    phi: &ReferenceState,
    tol: f64,
    start: Option<&[f64]>,
) -> Result<ThermalSolution> {
    let (da, db) = (cs.d_in(), cs.d_out());
    if phi.dim() != da {
        return Err(Error::DimensionMismatch(format!("reference has dimension {}, channel input is {da}", phi.dim())));
    }
    let si = phi.inv_sqrt()?;
    let si_br = lift_r(db, &si);
    let basis = hermitian_basis(da);
    let mut operators = Vec::with_capacity(basis.len() + cs.len());
    let mut values = Vec::with_capacity(basis.len() + cs.len());
    for e in &basis {
        operators.push(lift_r(db, e));
        values.push(e.inner(phi.operator()));
    }
    for c in cs.items() {
        operators.push(c.op.sandwich(&si_br));
        values.push(c.value);
    }
    let problem = MaxEntProblem { operators, values };
    let (sol, diverged) = match maxent_solve_from(&problem, &MaxEntOptions::with_tol(tol), start) {
        Ok(s) => (s, false),
        Err(Error::DualDivergence { best, norm }) => {
            // A dual ray that leaves the constraints violated certifies infeasibility.
            if best.kkt_residual > 1e-4 {
                let dir: Vec<f64> = best.lambdas.iter().map(|l| l / norm).collect();
                return Err(Error::Infeasible {
                    message: format!(
                        "constraints cannot be met by any channel (residual {:e} with diverging multipliers)",
                        best.kkt_residual
                    ),
                    direction: dir,
                });
            }
            (*best, true)
        }
        Err(e) => return Err(e),
    };
    let nb = basis.len();
    let mut lambda_r = HermitianOperator::zeros(da);
    for (l, e) in sol.lambdas[..nb].iter().zip(&basis) {
        lambda_r = lambda_r.axpy(*l, e);
    }
    let mu: Vec<f64> = sol.lambdas[nb..].to_vec();
    let f_bar = phi.operator().add(&lambda_r.sandwich(phi.sqrt())).scaled(-1.0);
    let raw = sol.tau.sandwich(&si_br);
    let choi = repair_choi(&raw, da, db)?;
    let channel = QuantumChannel::with_tolerance(da, db, choi, 1e-7)?;
    let entropy = output_conditional_entropy(&channel, phi)?;
    let dual_norm = sol.lambdas.iter().map(|l| l * l).sum::<f64>().sqrt();
    let mut th = ThermalSolution {
        channel,
        mu,
        f_bar,
        phi: phi.clone(),
        entropy,
        residuals: Residuals::default(),
        boundary_flag: diverged,
        dual_norm,
        multipliers: sol.lambdas.clone(),
    };
    let diag = th.channel.diagnostics();
    th.residuals.constraint = cs.residual(&th.channel);
    th.residuals.cptp = diag.cp_violation.max(diag.tp_violation);
    th.residuals.entropy_identity = entropy_identity_gap(&th, cs)?;
    if !th.boundary_flag {
        th.residuals.gibbs_form = Some(gibbs_form_residual(&th, cs)?);
    }
    Ok(th)
}

/// Minimizes the fixed-reference value over full-rank references.
pub fn thermal_channel(cs: &ConstraintSet, opts: &SolverOptions) -> Result<ThermalSolution> {
    let da = cs.d_in();
    let bloch = BlochParametrization::new(da);
    let x0 = vec![0.0; bloch.num_params()];
    // surfaces infeasibility and dimension errors before the search
    let first = thermal_given_phi(cs, &ReferenceState::maximally_mixed(da), opts.tol)?;
    let mut warm: Vec<f64> = first.multipliers.clone();
    let value = |x: &[f64]| -> f64 {
        let phi = match bloch.state(x) {
            Ok(p) => p,
            Err(_) => return f64::INFINITY,
        };
        if phi.min_eigenvalue() < opts.phi_floor {
            return f64::INFINITY;
        }
        match thermal_given_phi_from(cs, &phi, opts.tol, Some(&warm)) {
            Ok(s) => {
                warm = s.multipliers;
                s.entropy
            }
            Err(_) => f64::INFINITY,
        }
    };
    let search = LocalSearch {
        restarts: opts.restarts,
        seed: opts.seed,
        jitter: Some(opts.jitter),
        center: RestartCenter::Initial,
        ..LocalSearch::default()
    };
    let best = search.minimize(value, &x0);
    let mut sol = if best.value < first.entropy {
        thermal_given_phi(cs, &bloch.state(&best.x)?, opts.tol)?
    } else {
        first
    };
    let y = sol.phi.min_eigenvalue();
    let j_min = eig_hermitian(sol.channel.choi())?.min();
    if j_min < opts.cone_floor || y < 10.0 * opts.phi_floor {
        sol.boundary_flag = true;
        sol.residuals.gibbs_form = None;
    }
    if !sol.boundary_flag {
        sol.residuals.optimality = Some(optimality_residual(&sol.channel, &sol.phi)?);
    }
    Ok(sol)
}

/// `|S + tr F − Σ μ_j q_j|`
pub fn entropy_identity_gap(th: &ThermalSolution, cs: &ConstraintSet) -> Result<f64> {
    let f = th.free_energy()?;
    let muq: f64 = th.mu.iter().zip(cs.items()).map(|(m, c)| m * c.value).sum();
    Ok((th.entropy + f.trace() - muq).abs())
}

/// Frobenius distance between `J` and
/// `φ^{-1/2} exp(φ^{-1/2}(1 ⊗ F̄ − Σ μ_j C^j)φ^{-1/2}) φ^{-1/2}`.
pub fn gibbs_form_residual(th: &ThermalSolution, cs: &ConstraintSet) -> Result<f64> {
    let db = cs.d_out();
    let si = lift_r(db, &th.phi.inv_sqrt()?);
    let mut x = lift_r(db, &th.f_bar);
    for (m, c) in th.mu.iter().zip(cs.items()) {
        x = x.axpy(-m, &c.op);
    }
    let expo = matrix_function(&x.sandwich(&si), MatrixFunction::Exp)?;
    Ok(expo.sandwich(&si).sub(th.channel.choi()).frobenius())
}

/// Stationarity of the reference state:
/// `min_c ‖log φ_A − T̂†(log T̂(φ_A)) − c·1‖_F` with `φ_A = φ_R^t`.
pub fn optimality_residual(ch: &QuantumChannel, phi: &ReferenceState) -> Result<f64> {
    let (_, dil) = complementary(ch)?;
    let phi_a = phi.operator().transpose();
    let env = dil.complementary_channel().apply(&phi_a)?;
    let log_env = matrix_function(&env, MatrixFunction::Log)?;
    let l = matrix_function(&phi_a, MatrixFunction::Log)?.sub(&dil.complementary_adjoint(&log_env));
    let d = l.dim();
    let shift = l.trace() / d as f64;
    Ok(l.sub(&HermitianOperator::identity(d).scaled(shift)).frobenius())
}

/// Residual report for a solved instance.
#[derive(Debug, Clone, PartialEq)]
pub struct StructureReport {
    pub gibbs_form: Option<f64>,
    pub entropy_identity: f64,
    pub constraint: f64,
    /// Set when the Gibbs-form check is skipped in the boundary regime.
    pub limit_regime: bool,
}

pub fn verify_structure(th: &ThermalSolution, cs: &ConstraintSet) -> Result<StructureReport> {
    let limit_regime = th.boundary_flag;
    Ok(StructureReport {
        gibbs_form: if limit_regime { None } else { Some(gibbs_form_residual(th, cs)?) },
        entropy_identity: entropy_identity_gap(th, cs)?,
        constraint: cs.residual(&th.channel),
        limit_regime,
    })
}

/// Tangent directions at `J` that keep every constraint and trace
/// preservation: the orthogonal complement of `{C^j} ∪ {1_B ⊗ E_r}`.
pub fn feasible_tangent_basis(cs: &ConstraintSet) -> Vec<HermitianOperator> {
    let (da, db) = (cs.d_in(), cs.d_out());
    let n = da * db;
    let mut fixed: Vec<HermitianOperator> = hermitian_basis(da).iter().map(|e| lift_r(db, e)).collect();
    fixed.extend(cs.items().iter().map(|c| c.op.clone()));
    // Gram–Schmidt of the fixed directions, then of the full basis against them
    let mut ortho: Vec<HermitianOperator> = Vec::new();
    let push = |v: &HermitianOperator, ortho: &mut Vec<HermitianOperator>| -> bool {
        let mut w = v.clone();
        for _ in 0..2 {
            for o in ortho.iter() {
                w = w.axpy(-o.inner(&w), o);
            }
        }
        let nrm = w.frobenius();
        if nrm > 1e-9 {
            ortho.push(w.scaled(1.0 / nrm));
            true
        } else {
            false
        }
    };
    for f in &fixed {
        push(f, &mut ortho);
    }
    let k = ortho.len();
    for b in hermitian_basis(n) {
        push(&b, &mut ortho);
    }
    ortho.split_off(k)
}

trait MulHermitian {
    fn mul_hermitian(&self, other: &HermitianOperator) -> HermitianOperator;
}

impl MulHermitian for HermitianOperator {
    /// Product of two commuting Hermitian operators.
    fn mul_hermitian(&self, other: &HermitianOperator) -> HermitianOperator {
        let m: ComplexMatrix = self.matrix() * other.matrix();
        HermitianOperator::hermitian_part(&m)
    }
}
