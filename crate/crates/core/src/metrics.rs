//! Entropies and distances for states and channels (natural logarithms).

use crate::channel::{QuantumChannel, ReferenceState};
use crate::error::{Error, Result};
use crate::linalg::{
    c, eig_hermitian, hermitian_basis, id_kron, trace_first, traceless_basis, ComplexMatrix, HermitianOperator, Spectrum,
};
use crate::optim::local_search::{LocalSearch, RestartCenter};
use crate::optim::sdp::{sdp_solve, SdpConstraint, SdpOptions, SdpProblem};

/// Eigenvalues at or below this count as outside the support.
pub const SUPPORT_TOL: f64 = 1e-10;

/// Tolerance used to accept an operator as a density matrix.
pub const STATE_TOL: f64 = 1e-8;

/// Default restarts for the reference-state searches.
pub const DEFAULT_RESTARTS: usize = 16;

/// Parameter radius beyond which reference states are indistinguishable from
/// the rank-deficient limit (eigenvalue ratios below `e^{-2·40}`).
pub const PARAM_RADIUS: f64 = 40.0;

/// Full-rank reference states `φ(x) = exp(Σ x_i B_i) / tr exp(Σ x_i B_i)` over
/// the generalized Gell-Mann basis `B_i`.
#[derive(Debug, Clone)]
pub struct BlochParametrization {
    dim: usize,
    basis: Vec<HermitianOperator>,
}

impl BlochParametrization {
    pub fn new(dim: usize) -> Self {
        Self { dim, basis: traceless_basis(dim) }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_params(&self) -> usize {
        self.basis.len()
    }

    pub fn generator(&self, x: &[f64]) -> HermitianOperator {
        let mut g = ComplexMatrix::zeros(self.dim, self.dim);
        for (xi, b) in x.iter().zip(&self.basis) {
            g += b.matrix() * c(*xi, 0.0);
        }
        HermitianOperator::hermitian_part(&g)
    }

    /// `x` pulled back onto the ball of radius [`PARAM_RADIUS`]. Maximizers
    /// on the pure-state boundary would otherwise send searches to infinity.
    pub fn clamp(&self, x: &[f64]) -> Vec<f64> {
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > PARAM_RADIUS {
            x.iter().map(|v| v * PARAM_RADIUS / norm).collect()
        } else {
            x.to_vec()
        }
    }

    /// `φ(x)`, evaluated at the clamped parameters.
    pub fn state(&self, x: &[f64]) -> Result<ReferenceState> {
        let spec = eig_hermitian(&self.generator(&self.clamp(x)))?;
        let top = spec.max();
        let e = spec.map(|l| (l - top).exp());
        let z = e.trace();
        if !z.is_finite() || z <= 0.0 {
            return Err(Error::NonFinite("reference-state normalization".into()));
        }
        ReferenceState::new(e.scaled(1.0 / z))
    }

    /// Parameters of a full-rank state, `x_i = tr[B_i log φ] / 2`.
    pub fn params_of(&self, phi: &ReferenceState) -> Result<Vec<f64>> {
        let log = crate::linalg::matrix_function(phi.operator(), crate::linalg::MatrixFunction::Log)?;
        Ok(self.basis.iter().map(|b| 0.5 * b.inner(&log)).collect())
    }
}

fn check_state(rho: &HermitianOperator, spec: &Spectrum) -> Result<()> {
    let tr = rho.trace();
    if (tr - 1.0).abs() > STATE_TOL || spec.min() < -STATE_TOL {
        return Err(Error::InvalidState(format!(
            "expected a density matrix (trace {tr}, smallest eigenvalue {:e})",
            spec.min()
        )));
    }
    Ok(())
}

fn entropy_of_spectrum(values: &[f64]) -> f64 {
    values.iter().filter(|&&l| l > 0.0).map(|&l| -l * l.ln()).sum()
}

pub fn von_neumann(rho: &HermitianOperator) -> Result<f64> {
    let spec = eig_hermitian(rho)?;
    check_state(rho, &spec)?;
    Ok(entropy_of_spectrum(&spec.values))
}

/// `S(B|R) = S(BR) − S(R)` for a state on `B ⊗ R`.
pub fn conditional_entropy(tau: &HermitianOperator, d_b: usize, d_r: usize) -> Result<f64> {
    if tau.dim() != d_b * d_r {
        return Err(Error::DimensionMismatch(format!("state of dimension {} is not {d_b}·{d_r}", tau.dim())));
    }
    let s_br = von_neumann(tau)?;
    let tau_r = HermitianOperator::hermitian_part(&trace_first(tau.matrix(), d_b, d_r));
    Ok(s_br - von_neumann(&tau_r)?)
}

/// Umegaki relative entropy `D(ρ‖σ)`, `+∞` off support.
pub fn relative_entropy(rho: &HermitianOperator, sigma: &HermitianOperator) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch("relative entropy of states with different dimensions".into()));
    }
    let sr = eig_hermitian(rho)?;
    check_state(rho, &sr)?;
    let ss = eig_hermitian(sigma)?;
    check_state(sigma, &ss)?;
    Ok(relative_entropy_spectral(&sr, &ss))
}

/// `D(ρ‖σ)` for positive operators from their spectra (no normalization checks).
pub(crate) fn relative_entropy_spectral(sr: &Spectrum, ss: &Spectrum) -> f64 {
    let n = sr.dim();
    // ⟨s_j|ρ|s_j⟩ = Σ_i λ_i |⟨s_j|r_i⟩|²
    let overlap = ss.vectors.adjoint() * &sr.vectors;
    let mut cross = 0.0;
    for j in 0..n {
        let mut w = 0.0;
        for i in 0..n {
            w += sr.values[i].max(0.0) * overlap[(j, i)].norm_sqr();
        }
        if ss.values[j] <= SUPPORT_TOL {
            if w > SUPPORT_TOL {
                return f64::INFINITY;
            }
            continue;
        }
        cross += w * ss.values[j].ln();
    }
    let neg = -entropy_of_spectrum(&sr.values.iter().map(|l| l.max(0.0)).collect::<Vec<_>>());
    (neg - cross).max(0.0)
}

/// `D(ρ‖σ)` without a support test, for pairs already known to satisfy
/// `supp ρ ⊆ supp σ`: vanishing eigenvalues of `σ` contribute only through
/// their (equally vanishing) `ρ` weight.
pub(crate) fn relative_entropy_interior(sr: &Spectrum, ss: &Spectrum) -> f64 {
    let n = sr.dim();
    let overlap = ss.vectors.adjoint() * &sr.vectors;
    let mut cross = 0.0;
    for j in 0..n {
        let w: f64 = (0..n).map(|i| sr.values[i].max(0.0) * overlap[(j, i)].norm_sqr()).sum();
        if w > 0.0 {
            cross += w * ss.values[j].max(1e-300).ln();
        }
    }
    let neg = -entropy_of_spectrum(&sr.values.iter().map(|l| l.max(0.0)).collect::<Vec<_>>());
    (neg - cross).max(0.0)
}

/// Options for the reference-state searches behind channel entropy and channel
/// relative entropy.
#[derive(Debug, Clone)]
pub struct ReferenceSearch {
    pub restarts: usize,
    pub seed: u64,
    /// Starting point in Bloch coordinates (defaults to the maximally mixed state).
    pub start: Option<Vec<f64>>,
    /// Spread of the independent restarts around the start.
    pub jitter: f64,
    /// Initial simplex edge; smaller values suit warm starts.
    pub step: f64,
    /// Simplex size at which a local run stops.
    pub xtol: f64,
    /// Relative value spread at which a local run stops once the simplex is
    /// smaller than `flat_size`.
    pub ftol: f64,
    pub flat_size: f64,
}

impl ReferenceSearch {
    pub fn new(restarts: usize, seed: u64) -> Self {
        Self { restarts, seed, start: None, jitter: 1.0, step: 0.25, xtol: 1e-9, ftol: 1e-12, flat_size: 1e-3 }
    }

    pub(crate) fn searcher(&self) -> LocalSearch {
        LocalSearch {
            restarts: self.restarts,
            seed: self.seed,
            jitter: Some(self.jitter),
            center: RestartCenter::Initial,
            step: self.step,
            xtol: self.xtol,
            ftol: self.ftol,
            flat_size: self.flat_size,
            ..LocalSearch::default()
        }
    }
}

#[derive(Debug, Clone)]
pub struct ReferenceOptimum {
    pub value: f64,
    pub x: Vec<f64>,
    pub phi: ReferenceState,
}

/// `S(B|R)` of the channel output for reference `φ`.
pub fn output_conditional_entropy(ch: &QuantumChannel, phi: &ReferenceState) -> Result<f64> {
    let tau = ch.apply_with_reference(phi)?;
    conditional_entropy(&tau, ch.d_out(), ch.d_in())
}

/// Channel entropy `min_φ S(B|R)`, clamped to `[−log d_A, log d_B]`.
pub fn channel_entropy(ch: &QuantumChannel, restarts: usize, seed: u64) -> Result<(f64, ReferenceState)> {
    let r = channel_entropy_with(ch, &ReferenceSearch::new(restarts, seed))?;
    Ok((r.value, r.phi))
}

pub fn channel_entropy_with(ch: &QuantumChannel, opts: &ReferenceSearch) -> Result<ReferenceOptimum> {
    let bloch = BlochParametrization::new(ch.d_in());
    let f = |x: &[f64]| -> f64 {
        bloch
            .state(x)
            .and_then(|phi| output_conditional_entropy(ch, &phi))
            .unwrap_or(f64::INFINITY)
    };
    let x0 = opts.start.clone().unwrap_or_else(|| vec![0.0; bloch.num_params()]);
    let r = opts.searcher().minimize(f, &x0);
    if !r.value.is_finite() {
        return Err(Error::NonFinite("channel entropy search".into()));
    }
    let (lo, hi) = (-(ch.d_in() as f64).ln(), (ch.d_out() as f64).ln());
    debug_assert!(r.value >= lo - 1e-8 && r.value <= hi + 1e-8, "channel entropy {} outside window", r.value);
    Ok(ReferenceOptimum { value: r.value.clamp(lo, hi), phi: bloch.state(&r.x)?, x: bloch.clamp(&r.x) })
}

/// `D(N(φ) ‖ M(φ))` on `B ⊗ R` for one reference.
pub fn reference_relative_entropy(n: &QuantumChannel, m: &QuantumChannel, phi: &ReferenceState) -> Result<f64> {
    let rho = n.apply_with_reference(phi)?;
    let sigma = m.apply_with_reference(phi)?;
    Ok(relative_entropy_spectral(&eig_hermitian(&rho)?, &eig_hermitian(&sigma)?))
}

/// Reference-maximized relative entropy `max_φ D(N(φ) ‖ M(φ))`.
pub fn channel_relative_entropy(n: &QuantumChannel, m: &QuantumChannel, restarts: usize, seed: u64) -> Result<f64> {
    Ok(channel_relative_entropy_with(n, m, &ReferenceSearch::new(restarts, seed))?.value)
}

pub fn channel_relative_entropy_with(
    n: &QuantumChannel,
    m: &QuantumChannel,
    opts: &ReferenceSearch,
) -> Result<ReferenceOptimum> {
    n.same_shape(m)?;
    let bloch = BlochParametrization::new(n.d_in());
    let x0 = opts.start.clone().unwrap_or_else(|| vec![0.0; bloch.num_params()]);
    // Support inclusion is the same for every full-rank reference; test it
    // at the maximally mixed one, where the support cut is best conditioned.
    let mixed = ReferenceState::maximally_mixed(n.d_in());
    if reference_relative_entropy(n, m, &mixed)?.is_infinite() {
        return Ok(ReferenceOptimum { value: f64::INFINITY, phi: bloch.state(&x0)?, x: x0 });
    }
    // Past the support test, near-singular references must not trip the
    // absolute support cut.
    let f = |x: &[f64]| -> f64 {
        let eval = || -> Result<f64> {
            let phi = bloch.state(x)?;
            let sr = eig_hermitian(&n.apply_with_reference(&phi)?)?;
            let ss = eig_hermitian(&m.apply_with_reference(&phi)?)?;
            Ok(relative_entropy_interior(&sr, &ss))
        };
        eval().map(|v| -v).unwrap_or(f64::INFINITY)
    };
    let r = opts.searcher().minimize(f, &x0);
    Ok(ReferenceOptimum { value: -r.value, phi: bloch.state(&r.x)?, x: bloch.clamp(&r.x) })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiamondDistance {
    /// `½‖N − M‖⋄ ∈ [0, 1]`
    pub value: f64,
    /// True when the SDP failed and the value is the multi-start lower bound.
    pub approximate: bool,
}

/// `½‖N − M‖⋄` from the semidefinite characterization
/// `max tr[J_Δ W]` subject to `0 ⪯ W ⪯ 1_B ⊗ ρ`, `tr ρ = 1`.
pub fn diamond_distance(n: &QuantumChannel, m: &QuantumChannel) -> Result<DiamondDistance> {
    n.same_shape(m)?;
    match diamond_sdp(n, m) {
        Ok(v) => Ok(DiamondDistance { value: v.clamp(0.0, 1.0), approximate: false }),
        Err(Error::NotConverged { .. }) | Err(Error::NonFinite(_)) => {
            Ok(DiamondDistance { value: diamond_oracle(n, m, 64, 0)?.clamp(0.0, 1.0), approximate: true })
        }
        Err(e) => Err(e),
    }
}

fn diamond_sdp(n: &QuantumChannel, m: &QuantumChannel) -> Result<f64> {
    let (da, db) = (n.d_in(), n.d_out());
    let delta = n.choi().sub(m.choi());
    if delta.frobenius() == 0.0 {
        return Ok(0.0);
    }
    // blocks: W, S (slack of 1⊗ρ − W), ρ
    let mut constraints: Vec<SdpConstraint> = hermitian_basis(da * db)
        .into_iter()
        .map(|e| {
            let er = HermitianOperator::hermitian_part(&trace_first(e.matrix(), db, da));
            SdpConstraint { terms: vec![Some(e.clone()), Some(e), Some(er.scaled(-1.0))], rhs: 0.0 }
        })
        .collect();
    constraints.push(SdpConstraint { terms: vec![None, None, Some(HermitianOperator::identity(da))], rhs: 1.0 });
    let p = SdpProblem {
        blocks: vec![da * db, da * db, da],
        objective: vec![Some(delta.scaled(-1.0)), None, None],
        constraints,
    };
    let sol = sdp_solve(&p, &SdpOptions::default())?;
    Ok(-sol.value)
}

/// Lower bound on `½‖N − M‖⋄` by maximizing `½‖√φ (J_N − J_M) √φ‖₁` over
/// references `φ = AA†/tr(AA†)` (pure bipartite inputs), multi-start.
pub fn diamond_oracle(n: &QuantumChannel, m: &QuantumChannel, restarts: usize, seed: u64) -> Result<f64> {
    n.same_shape(m)?;
    let (da, db) = (n.d_in(), n.d_out());
    let delta = n.choi().sub(m.choi());
    let f = |x: &[f64]| -> f64 {
        let a = ComplexMatrix::from_fn(da, da, |i, j| c(x[2 * (i * da + j)], x[2 * (i * da + j) + 1]));
        let aa = HermitianOperator::hermitian_part(&(&a * a.adjoint()));
        let tr = aa.trace();
        if tr <= 1e-300 {
            return f64::INFINITY;
        }
        let eval = || -> Result<f64> {
            let s = eig_hermitian(&aa.scaled(1.0 / tr))?.map(|l| l.max(0.0).sqrt());
            let out = delta.sandwich(&HermitianOperator::hermitian_part(&id_kron(db, s.matrix())));
            Ok(-0.5 * crate::linalg::trace_norm_hermitian(&out)?)
        };
        eval().unwrap_or(f64::INFINITY)
    };
    let mut x0 = vec![0.0; 2 * da * da];
    for i in 0..da {
        x0[2 * (i * da + i)] = 1.0;
    }
    let search = LocalSearch {
        restarts,
        seed,
        jitter: Some(1.0),
        center: RestartCenter::Initial,
        ..LocalSearch::default()
    };
    Ok(-search.minimize(f, &x0).value)
}
