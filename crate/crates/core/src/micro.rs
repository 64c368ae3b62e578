//! n-copy typicality experiments for i.i.d. channels.
//!
//! Everything lives on `B^n R^n` with the ordering `B_1…B_n R_1…R_n`, the same
//! as [`QuantumChannel::tensor_power`]. Dense objects are capped at
//! [`DENSE_CAP`]; i.i.d. channels and mixtures of them are evaluated from
//! single-copy data instead.

use std::collections::BTreeMap;

use crate::channel::{QuantumChannel, ReferenceState};
use crate::constraints::ConstraintSet;
use crate::error::{Error, Result};
use crate::linalg::{eig_hermitian, operator_norm, partial_trace, permute_subsystems, ComplexMatrix, HermitianOperator};
use crate::metrics::relative_entropy;
use crate::solver::ThermalSolution;

/// Largest dense dimension `(d_B d_R)^n` materialized.
pub const DENSE_CAP: usize = 4096;

/// Eigenvalues closer than this to the window edge count as inside.
pub const WINDOW_TOL: f64 = 1e-9;

/// `H^σ = (1_B ⊗ σ^{−1/2}) C (1_B ⊗ σ^{−1/2})`, rejecting references below
/// the floor `y`.
pub fn scaled_observable(c: &HermitianOperator, sigma: &ReferenceState, y: f64) -> Result<HermitianOperator> {
    let d_r = sigma.dim();
    if c.dim() % d_r != 0 {
        return Err(Error::DimensionMismatch(format!("operator of size {} is not on B ⊗ R with d_R = {d_r}", c.dim())));
    }
    let lmin = sigma.min_eigenvalue();
    if lmin < y {
        return Err(Error::EigenvalueBelowFloor { eigenvalue: lmin, floor: y });
    }
    let inv = HermitianOperator::identity(c.dim() / d_r).kron(&sigma.inv_sqrt()?);
    Ok(c.sandwich(&inv))
}

fn check_cap(dim: usize, n: usize) -> Result<usize> {
    let total = (dim as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    if total > DENSE_CAP as u128 {
        return Err(Error::DimensionCap { dim: total.min(usize::MAX as u128) as usize, cap: DENSE_CAP });
    }
    Ok(total as usize)
}

/// `(1/n) Σ_i base_i` on `B^n R^n`.
#[derive(Debug, Clone)]
pub struct SampleAverageObservable {
    pub base: HermitianOperator,
    pub d_b: usize,
    pub d_r: usize,
    pub n: usize,
    pub operator: HermitianOperator,
}

/// Reorders `(BR)^{⊗n}` into `B^n R^n`.
fn interleaved_to_grouped(m: &HermitianOperator, d_b: usize, d_r: usize, n: usize) -> Result<HermitianOperator> {
    let dims: Vec<usize> = (0..n).flat_map(|_| [d_b, d_r]).collect();
    let perm: Vec<usize> = (0..n).map(|i| 2 * i).chain((0..n).map(|i| 2 * i + 1)).collect();
    Ok(HermitianOperator::hermitian_part(&permute_subsystems(m.matrix(), &dims, &perm)?))
}

pub fn sample_average(base: &HermitianOperator, d_b: usize, n: usize) -> Result<SampleAverageObservable> {
    if n == 0 {
        return Err(Error::InvalidParameter("sample average needs n ≥ 1".into()));
    }
    if d_b == 0 || base.dim() % d_b != 0 {
        return Err(Error::DimensionMismatch(format!("operator of size {} is not on B ⊗ R with d_B = {d_b}", base.dim())));
    }
    let d_r = base.dim() / d_b;
    let total = check_cap(base.dim(), n)?;
    let id = HermitianOperator::identity(base.dim());
    let mut sum = HermitianOperator::zeros(total);
    for i in 0..n {
        let mut term = if i == 0 { base.clone() } else { id.clone() };
        for k in 1..n {
            term = term.kron(if k == i { base } else { &id });
        }
        sum = sum.add(&term);
    }
    let operator = interleaved_to_grouped(&sum.scaled(1.0 / n as f64), d_b, d_r, n)?;
    Ok(SampleAverageObservable { base: base.clone(), d_b, d_r, n, operator })
}

/// Projector onto the eigenspaces of a sample average outside `[q − η, q + η]`.
#[derive(Debug, Clone)]
pub struct WindowProjector {
    pub observable: SampleAverageObservable,
    pub center: f64,
    pub half_width: f64,
    pub projector: HermitianOperator,
}

/// The eigenbasis of the sample average is the product of single-copy
/// eigenbases, so the projector is assembled from the spectral projectors of
/// `base` instead of diagonalizing the `(d_B d_R)^n` operator.
pub fn window(obs: &SampleAverageObservable, q: f64, eta: f64) -> Result<WindowProjector> {
    if !(eta >= 0.0) || !q.is_finite() {
        return Err(Error::InvalidParameter(format!("window q = {q}, η = {eta}")));
    }
    let groups = spectral_projectors(&obs.base)?;
    let mut counts = vec![0usize; groups.len()];
    let dim = obs.operator.dim();
    let interleaved = match outside_projector(&groups, obs.n, obs.n, &mut counts, q, eta) {
        Some(p) => HermitianOperator::hermitian_part(&p),
        None => HermitianOperator::zeros(dim),
    };
    let projector = interleaved_to_grouped(&interleaved, obs.d_b, obs.d_r, obs.n)?;
    Ok(WindowProjector { observable: obs.clone(), center: q, half_width: eta, projector })
}

/// Distinct eigenvalues of `base` (merged within [`WINDOW_TOL`]) with their
/// spectral projectors.
fn spectral_projectors(base: &HermitianOperator) -> Result<Vec<(f64, ComplexMatrix)>> {
    let spec = eig_hermitian(base)?;
    let mut groups: Vec<(f64, ComplexMatrix)> = Vec::new();
    for (k, &l) in spec.values.iter().enumerate() {
        let v = HermitianOperator::outer(&spec.column(k)).into_matrix();
        match groups.last_mut() {
            Some((e, p)) if (l - *e).abs() <= WINDOW_TOL => *p += v,
            _ => groups.push((l, v)),
        }
    }
    Ok(groups)
}

/// Sum of `Π_{k_1} ⊗ … ⊗ Π_{k_m}` over the outcome strings of the remaining
/// `m` copies whose overall mean leaves the window; `None` when empty.
fn outside_projector(
    groups: &[(f64, ComplexMatrix)],
    n: usize,
    m: usize,
    counts: &mut Vec<usize>,
    q: f64,
    eta: f64,
) -> Option<ComplexMatrix> {
    if m == 0 {
        let mean = counts.iter().zip(groups).map(|(&c, (e, _))| c as f64 * e).sum::<f64>() / n as f64;
        return outside(mean, q, eta).then(|| ComplexMatrix::identity(1, 1));
    }
    let mut acc: Option<ComplexMatrix> = None;
    for k in 0..groups.len() {
        counts[k] += 1;
        let rest = outside_projector(groups, n, m - 1, counts, q, eta);
        counts[k] -= 1;
        if let Some(r) = rest {
            let term = groups[k].1.kronecker(&r);
            acc = Some(match acc {
                None => term,
                Some(a) => a + term,
            });
        }
    }
    acc
}

fn outside(l: f64, q: f64, eta: f64) -> bool {
    (l - q).abs() > eta + WINDOW_TOL
}

/// An n-copy channel `A^n → B^n`: explicit, i.i.d., or a finite mixture.
#[derive(Debug, Clone)]
pub enum NCopyChannel {
    Explicit { channel: QuantumChannel, n: usize, d_in: usize, d_out: usize },
    Iid { channel: QuantumChannel, n: usize },
    Mixture { n: usize, parts: Vec<(f64, NCopyChannel)> },
}

impl NCopyChannel {
    /// Wraps a channel on `A^n → B^n` given the single-copy dimensions.
    pub fn explicit(channel: QuantumChannel, n: usize, d_in: usize, d_out: usize) -> Result<Self> {
        if n == 0 || channel.d_in() != d_in.pow(n as u32) || channel.d_out() != d_out.pow(n as u32) {
            return Err(Error::DimensionMismatch(format!(
                "{}→{} channel is not an {n}-copy channel of {d_in}→{d_out}",
                channel.d_in(),
                channel.d_out()
            )));
        }
        Ok(Self::Explicit { channel, n, d_in, d_out })
    }

    pub fn iid(channel: QuantumChannel, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("n-copy channel needs n ≥ 1".into()));
        }
        Ok(Self::Iid { channel, n })
    }

    /// `Σ w_k parts_k` with nonnegative weights summing to one.
    pub fn mixture(parts: Vec<(f64, NCopyChannel)>) -> Result<Self> {
        let Some(first) = parts.first() else {
            return Err(Error::InvalidParameter("empty mixture".into()));
        };
        let (n, dims) = (first.1.n(), first.1.single_copy_dims());
        if parts.iter().any(|(w, p)| !(*w >= 0.0) || p.n() != n || p.single_copy_dims() != dims) {
            return Err(Error::InvalidParameter("mixture parts need nonnegative weights and matching shapes".into()));
        }
        let total: f64 = parts.iter().map(|(w, _)| w).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!("mixture weights sum to {total}")));
        }
        Ok(Self::Mixture { n, parts })
    }

    pub fn n(&self) -> usize {
        match self {
            Self::Explicit { n, .. } | Self::Iid { n, .. } | Self::Mixture { n, .. } => *n,
        }
    }

    /// `(d_A, d_B)` of one copy.
    pub fn single_copy_dims(&self) -> (usize, usize) {
        match self {
            Self::Explicit { d_in, d_out, .. } => (*d_in, *d_out),
            Self::Iid { channel, .. } => (channel.d_in(), channel.d_out()),
            Self::Mixture { parts, .. } => parts[0].1.single_copy_dims(),
        }
    }

    /// Materializes the channel (subject to the dense cap).
    pub fn to_explicit(&self) -> Result<QuantumChannel> {
        match self {
            Self::Explicit { channel, .. } => Ok(channel.clone()),
            Self::Iid { channel, n } => {
                check_cap(channel.d_in() * channel.d_out(), *n)?;
                channel.tensor_power(*n)
            }
            Self::Mixture { parts, .. } => {
                let mut acc: Option<HermitianOperator> = None;
                let mut dims = (0, 0);
                for (w, p) in parts {
                    let ch = p.to_explicit()?;
                    dims = (ch.d_in(), ch.d_out());
                    let term = ch.choi().scaled(*w);
                    acc = Some(match acc {
                        None => term,
                        Some(a) => a.add(&term),
                    });
                }
                QuantumChannel::with_tolerance(dims.0, dims.1, acc.expect("non-empty"), 1e-9)
            }
        }
    }
}

/// Outcome distribution of `base` measured on `τ`: distinct eigenvalues with
/// their probabilities `tr[P_e τ]`.
fn outcome_distribution(base: &HermitianOperator, tau: &HermitianOperator) -> Result<Vec<(f64, f64)>> {
    let spec = eig_hermitian(base)?;
    let mut groups: Vec<(f64, f64)> = Vec::new();
    for (k, &l) in spec.values.iter().enumerate() {
        let v = spec.column(k);
        let p = HermitianOperator::outer(&v).inner(tau);
        match groups.last_mut() {
            Some((e, w)) if (l - *e).abs() <= WINDOW_TOL => *w += p,
            _ => groups.push((l, p)),
        }
    }
    Ok(groups)
}

/// `P(|mean of n i.i.d. draws − q| > η)`, summed over multinomial count
/// vectors.
fn multinomial_tail(dist: &[(f64, f64)], n: usize, q: f64, eta: f64) -> f64 {
    // log n! table
    let lf: Vec<f64> = (0..=n).scan(0.0, |acc, k| {
        if k > 0 {
            *acc += (k as f64).ln();
        }
        Some(*acc)
    })
    .collect();
    let k = dist.len();
    let mut counts = vec![0usize; k];
    let mut tail = 0.0;
    fn rec(
        idx: usize,
        left: usize,
        counts: &mut Vec<usize>,
        dist: &[(f64, f64)],
        n: usize,
        lf: &[f64],
        q: f64,
        eta: f64,
        tail: &mut f64,
    ) {
        if idx + 1 == dist.len() {
            counts[idx] = left;
            let mean = counts.iter().zip(dist).map(|(&c, &(e, _))| c as f64 * e).sum::<f64>() / n as f64;
            if outside(mean, q, eta) {
                let mut logp = lf[n];
                for (&c, &(_, p)) in counts.iter().zip(dist) {
                    if c > 0 {
                        if p <= 0.0 {
                            return;
                        }
                        logp += c as f64 * p.ln() - lf[c];
                    }
                }
                *tail += logp.exp();
            }
            return;
        }
        for c in 0..=left {
            counts[idx] = c;
            rec(idx + 1, left - c, counts, dist, n, lf, q, eta, tail);
        }
    }
    rec(0, n, &mut counts, dist, n, &lf, q, eta, &mut tail);
    tail.clamp(0.0, 1.0)
}

/// `tr[{H̄ ∉ [q ± η]} ch_n(σ^{⊗n})]` for the purified reference `σ`.
pub fn tail_probability(ch_n: &NCopyChannel, sigma: &ReferenceState, wp: &WindowProjector) -> Result<f64> {
    let obs = &wp.observable;
    let (d_in, d_out) = ch_n.single_copy_dims();
    if ch_n.n() != obs.n || d_out != obs.d_b || d_in != obs.d_r || sigma.dim() != d_in {
        return Err(Error::DimensionMismatch("channel, reference and window disagree in shape".into()));
    }
    let t = match ch_n {
        NCopyChannel::Explicit { channel, n, .. } => {
            let state = channel.apply_with_reference(&sigma.tensor_power(*n))?;
            wp.projector.inner(&state)
        }
        NCopyChannel::Iid { channel, n } => {
            let tau = channel.apply_with_reference(sigma)?;
            multinomial_tail(&outcome_distribution(&obs.base, &tau)?, *n, wp.center, wp.half_width)
        }
        NCopyChannel::Mixture { parts, .. } => {
            let mut acc = 0.0;
            for (w, p) in parts {
                acc += w * tail_probability(p, sigma, wp)?;
            }
            acc
        }
    };
    Ok(t.clamp(0.0, 1.0))
}

/// Tail probability for an i.i.d. channel without materializing anything on
/// `B^n R^n` (no dimension cap).
pub fn iid_tail(
    channel: &QuantumChannel,
    sigma: &ReferenceState,
    base: &HermitianOperator,
    n: usize,
    q: f64,
    eta: f64,
) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidParameter("n ≥ 1 required".into()));
    }
    let tau = channel.apply_with_reference(sigma)?;
    if base.dim() != tau.dim() {
        return Err(Error::DimensionMismatch("observable and channel output differ in size".into()));
    }
    Ok(multinomial_tail(&outcome_distribution(base, &tau)?, n, q, eta))
}

/// Copy-averaged single-copy output `ω = (1/n) Σ_i tr_{n∖i}[ch_n(φ^{⊗n})]`.
pub fn averaged_marginal(ch_n: &NCopyChannel, phi: &ReferenceState) -> Result<HermitianOperator> {
    match ch_n {
        NCopyChannel::Iid { channel, .. } => channel.apply_with_reference(phi),
        NCopyChannel::Mixture { parts, .. } => {
            let mut acc: Option<HermitianOperator> = None;
            for (w, p) in parts {
                let term = averaged_marginal(p, phi)?.scaled(*w);
                acc = Some(match acc {
                    None => term,
                    Some(a) => a.add(&term),
                });
            }
            Ok(acc.expect("non-empty"))
        }
        NCopyChannel::Explicit { channel, n, d_in, d_out } => {
            let state = channel.apply_with_reference(&phi.tensor_power(*n))?;
            let dims: Vec<usize> = std::iter::repeat_n(*d_out, *n).chain(std::iter::repeat_n(*d_in, *n)).collect();
            let mut acc = HermitianOperator::zeros(d_in * d_out);
            for i in 0..*n {
                let m = partial_trace(state.matrix(), &dims, &[i, n + i])?;
                acc = acc.add(&HermitianOperator::hermitian_part(&m));
            }
            Ok(acc.scaled(1.0 / *n as f64))
        }
    }
}

/// `D(ω ‖ T(φ))` with `T` the thermal channel; `+∞` on support failure.
pub fn reduced_marginal_check(ch_n: &NCopyChannel, phi: &ReferenceState, th: &ThermalSolution) -> Result<f64> {
    let (d_in, d_out) = ch_n.single_copy_dims();
    if d_in != th.channel.d_in() || d_out != th.channel.d_out() {
        return Err(Error::DimensionMismatch("n-copy channel and thermal channel differ in shape".into()));
    }
    let omega = averaged_marginal(ch_n, phi)?;
    let target = th.channel.apply_with_reference(phi)?;
    relative_entropy(&omega, &target)
}

/// Window and floor parameters at one `n`; the primed values belong to the
/// second (converse) half of the construction and are optional here.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MicrocanonicalParams {
    pub n: usize,
    pub eta: f64,
    pub y: f64,
    pub nu: f64,
    pub eta_prime: Option<f64>,
    pub y_prime: Option<f64>,
    pub nu_prime: Option<f64>,
}

impl MicrocanonicalParams {
    pub fn new(n: usize, eta: f64, y: f64, nu: f64, d_r: usize) -> Result<Self> {
        let p = Self { n, eta, y, nu, eta_prime: None, y_prime: None, nu_prime: None };
        p.validate(d_r)?;
        Ok(p)
    }

    pub fn validate(&self, d_r: usize) -> Result<()> {
        if self.n == 0 || !(self.eta > 0.0) || !(self.nu > 1.0) {
            return Err(Error::InvalidParameter(format!("need n ≥ 1, η > 0, ν > 1 (got {self:?})")));
        }
        let y_max = 1.0 / (self.nu * d_r as f64);
        if !(self.y > 0.0 && self.y < y_max) {
            return Err(Error::InvalidParameter(format!("floor y = {} outside (0, 1/(ν d_R)) = (0, {y_max})", self.y)));
        }
        Ok(())
    }
}

/// How window and floor parameters scale with `n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ParamSchedule {
    Fixed { eta: f64, y: f64, nu: f64 },
    /// `η = c_min n^{−γ}`, `η′ = η/2`, `y = y′ = n^{−γ}`, `ν = ν′ = 3/2`, with
    /// `y` capped just below `1/(ν d_R)` (the power law only enters the
    /// admissible range at astronomically large `n`).
    Regime { gamma: f64, c_min: f64 },
}

/// Fraction of the admissible floor `1/(ν d_R)` used when the regime's `y`
/// exceeds it.
pub const FLOOR_CAP_FRACTION: f64 = 0.9;

impl ParamSchedule {
    pub fn at(&self, n: usize, d_r: usize) -> Result<MicrocanonicalParams> {
        match *self {
            ParamSchedule::Fixed { eta, y, nu } => MicrocanonicalParams::new(n, eta, y, nu, d_r),
            ParamSchedule::Regime { gamma, c_min } => {
                if !(gamma > 0.0 && gamma < 1.0 / 16.0) {
                    return Err(Error::InvalidParameter(format!("regime exponent γ = {gamma} outside (0, 1/16)")));
                }
                let nu = 1.5;
                let scale = (n as f64).powf(-gamma);
                let y = scale.min(FLOOR_CAP_FRACTION / (nu * d_r as f64));
                let eta = c_min * scale;
                let mut p = MicrocanonicalParams::new(n, eta, y, nu, d_r)?;
                p.eta_prime = Some(eta / 2.0);
                p.y_prime = Some(y);
                p.nu_prime = Some(nu);
                Ok(p)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConcentrationRow {
    pub j: usize,
    pub sigma_id: usize,
    pub n: usize,
    pub eta: f64,
    pub y: f64,
    pub tail: f64,
    /// Least-squares slope of `log tail` against `n` for this `(j, σ)`;
    /// `−∞` once a tail vanishes exactly, NaN with fewer than two points.
    pub fitted_slope: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConcentrationTable {
    pub rows: Vec<ConcentrationRow>,
}

impl ConcentrationTable {
    pub const CSV_HEADER: &'static str = "j,sigma_id,n,eta,y,tail,fitted_slope";

    /// Fitted slopes per `(j, σ)`.
    pub fn slopes(&self) -> BTreeMap<(usize, usize), f64> {
        self.rows.iter().map(|r| ((r.j, r.sigma_id), r.fitted_slope)).collect()
    }

    /// Every series whose first tail is above `1e-14` must decay.
    pub fn check_slopes(&self) -> Result<()> {
        for ((j, s), slope) in self.slopes() {
            let first = self.rows.iter().find(|r| r.j == j && r.sigma_id == s).expect("series present");
            if first.tail > 1e-14 && !(slope < 0.0) {
                return Err(Error::InvalidState(format!(
                    "tail of constraint {j} at reference {s} does not decay (fitted slope {slope})"
                )));
            }
        }
        Ok(())
    }

    pub fn to_csv(&self, extra_header: &[(&str, String)]) -> String {
        use crate::learner::fmt_f64;
        let mut out = format!("# format_version={}\n", crate::io::FORMAT_VERSION);
        for (k, v) in extra_header {
            out.push_str(&format!("# {k}={v}\n"));
        }
        out.push_str(Self::CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.j,
                r.sigma_id,
                r.n,
                fmt_f64(r.eta),
                fmt_f64(r.y),
                fmt_f64(r.tail),
                fmt_f64(r.fitted_slope)
            ));
        }
        out
    }
}

/// Least-squares slope of `ln t` against `n`.
pub fn fit_log_slope(points: &[(usize, f64)]) -> f64 {
    if points.iter().any(|&(_, t)| t <= 0.0) && points.iter().any(|&(_, t)| t > 0.0) {
        return f64::NEG_INFINITY;
    }
    if points.len() < 2 || points.iter().all(|&(_, t)| t <= 0.0) {
        return f64::NAN;
    }
    let k = points.len() as f64;
    let mx = points.iter().map(|p| p.0 as f64).sum::<f64>() / k;
    let my = points.iter().map(|p| p.1.ln()).sum::<f64>() / k;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for &(n, t) in points {
        let dx = n as f64 - mx;
        sxy += dx * (t.ln() - my);
        sxx += dx * dx;
    }
    sxy / sxx
}

/// Tails of `T^{⊗n}` for every constraint `j`, reference `σ` and `n`, with
/// the windows centred on the constraint values.
pub fn iid_concentration_experiment(
    th: &ThermalSolution,
    cs: &ConstraintSet,
    sigmas: &[ReferenceState],
    n_range: &[usize],
    schedule: &ParamSchedule,
) -> Result<ConcentrationTable> {
    let ch = &th.channel;
    if cs.d_in() != ch.d_in() || cs.d_out() != ch.d_out() {
        return Err(Error::DimensionMismatch("constraint set and thermal channel differ in shape".into()));
    }
    let viol = cs.residual(ch);
    if viol > 1e-6 {
        return Err(Error::InvalidState(format!("thermal channel violates its constraints by {viol:e}")));
    }
    let mut rows = Vec::new();
    for (j, con) in cs.items().iter().enumerate() {
        for (sid, sigma) in sigmas.iter().enumerate() {
            let mut series = Vec::with_capacity(n_range.len());
            for &n in n_range {
                let p = schedule.at(n, ch.d_in())?;
                let h = scaled_observable(&con.op, sigma, p.y)?;
                let tail = iid_tail(ch, sigma, &h, n, con.value, p.eta)?;
                series.push(ConcentrationRow { j, sigma_id: sid, n, eta: p.eta, y: p.y, tail, fitted_slope: f64::NAN });
            }
            let slope = fit_log_slope(&series.iter().map(|r| (r.n, r.tail)).collect::<Vec<_>>());
            rows.extend(series.into_iter().map(|r| ConcentrationRow { fitted_slope: slope, ..r }));
        }
    }
    Ok(ConcentrationTable { rows })
}

/// `Σ_j |μ_j| (η + 2 ‖C^j‖ ε / y)`: the single-copy deviation allowed for a
/// channel whose windows leak at most `ε`.
pub fn marginal_bound(th: &ThermalSolution, cs: &ConstraintSet, eta: f64, epsilon: f64, y: f64) -> Result<f64> {
    if th.mu.len() != cs.len() {
        return Err(Error::DimensionMismatch("multipliers and constraints differ in number".into()));
    }
    let mut total = 0.0;
    for (mu, con) in th.mu.iter().zip(cs.items()) {
        total += mu.abs() * (eta + 2.0 * operator_norm(&con.op)? * epsilon / y);
    }
    Ok(total)
}

/// Largest window leakage `max_{j,σ} tail` of an n-copy channel.
pub fn measured_leakage(
    ch_n: &NCopyChannel,
    cs: &ConstraintSet,
    sigmas: &[ReferenceState],
    params: &MicrocanonicalParams,
) -> Result<f64> {
    let d_b = ch_n.single_copy_dims().1;
    let mut worst: f64 = 0.0;
    for con in cs.items() {
        for sigma in sigmas {
            let h = scaled_observable(&con.op, sigma, params.y)?;
            let wp = window(&sample_average(&h, d_b, ch_n.n())?, con.value, params.eta)?;
            worst = worst.max(tail_probability(ch_n, sigma, &wp)?);
        }
    }
    Ok(worst)
}
