//! Online minimum-relative-entropy channel learning from Pauli expectation
//! estimates.
//!
//! Each round draws an observable `E = P ⊗ ρ^t` (a Pauli on the output, a
//! stabilizer state on the input), estimates `tr[P N(ρ)]` from shots, and moves
//! the model to
//! `argmin_J D(J ‖ M) + η (s − tr[E J])²` over CPTP Choi matrices, where
//! `D` is the reference-maximized relative entropy.

use std::time::Instant;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};

use crate::channel::{completely_depolarizing, QuantumChannel, ReferenceState};
use crate::constraints::stabilizer_states;
use crate::error::{Error, Result};
use crate::linalg::{eig_hermitian, pauli, HermitianOperator, Spectrum};
use crate::metrics::{
    channel_relative_entropy_with, diamond_distance, relative_entropy_interior, BlochParametrization,
    ReferenceSearch,
};
use crate::optim::cptp_linear_minimize;

pub const NUM_OBSERVABLES: usize = 18;
pub const PAULI_NAMES: [char; 3] = ['X', 'Y', 'Z'];
pub const STATE_NAMES: [&str; 6] = ["0", "1", "+", "-", "+i", "-i"];

/// Weight of the completely depolarizing channel mixed into the previous
/// model before each update.
pub const MODEL_FLOOR: f64 = 1e-8;

/// Simplex size at which the learner's reference searches stop; the
/// divergence is quadratic around its maximizer, so values are exact to ~1e-14.
const SEARCH_XTOL: f64 = 1e-7;
const SEARCH_FTOL: f64 = 1e-10;

/// Initial simplex edge for warm-started searches inside a line search.
const WARM_STEP: f64 = 0.05;

/// One of the 18 single-qubit observables `P ⊗ ρ^t`; `id = 6·pauli + input`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ObservableSpec {
    pub pauli: usize,
    pub input_state: usize,
    pub id: usize,
}

impl ObservableSpec {
    pub fn from_id(id: usize) -> Result<Self> {
        if id >= NUM_OBSERVABLES {
            return Err(Error::InvalidParameter(format!("observable id {id} out of range 0..{NUM_OBSERVABLES}")));
        }
        Ok(Self { pauli: id / 6, input_state: id % 6, id })
    }

    pub fn pauli_operator(&self) -> HermitianOperator {
        pauli::by_name(PAULI_NAMES[self.pauli]).expect("valid pauli")
    }

    pub fn input(&self) -> HermitianOperator {
        stabilizer_states().swap_remove(self.input_state)
    }

    /// `E = P ⊗ ρ^t`, so that `tr[E J] = tr[P N(ρ)]`.
    pub fn operator(&self) -> HermitianOperator {
        self.pauli_operator().kron(&self.input().transpose())
    }

    pub fn name(&self) -> String {
        format!("{}|{}", PAULI_NAMES[self.pauli], STATE_NAMES[self.input_state])
    }
}

/// Uniform draw over the 18 observables.
pub fn sample_observable<R: Rng + ?Sized>(rng: &mut R) -> ObservableSpec {
    ObservableSpec::from_id(rng.random_range(0..NUM_OBSERVABLES)).expect("in range")
}

/// Running ±1 outcome tallies per observable.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EstimateAggregator {
    counts: [u64; NUM_OBSERVABLES],
    sums: [i64; NUM_OBSERVABLES],
}

impl EstimateAggregator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&mut self, obs: &ObservableSpec, shots: u64, plus: u64) {
        debug_assert!(plus <= shots);
        self.counts[obs.id] += shots;
        self.sums[obs.id] += 2 * plus as i64 - shots as i64;
    }

    pub fn count(&self, obs: &ObservableSpec) -> u64 {
        self.counts[obs.id]
    }

    pub fn sum(&self, obs: &ObservableSpec) -> i64 {
        self.sums[obs.id]
    }

    pub fn estimate(&self, obs: &ObservableSpec) -> Option<f64> {
        match self.counts[obs.id] {
            0 => None,
            n => Some(self.sums[obs.id] as f64 / n as f64),
        }
    }
}

/// Shot budget per measurement; `Exact` disables shot noise.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shots {
    Finite(u64),
    Exact,
}

/// True expectation `tr[P N(ρ)]`, rejecting channels whose value leaves
/// `[−1, 1]`.
pub fn expectation(true_ch: &QuantumChannel, obs: &ObservableSpec) -> Result<f64> {
    if true_ch.d_in() != 2 || true_ch.d_out() != 2 {
        return Err(Error::DimensionMismatch("the learner works with qubit channels".into()));
    }
    let mean = true_ch.choi().inner(&obs.operator());
    if !mean.is_finite() || mean.abs() > 1.0 + 1e-9 {
        return Err(Error::InvalidState(format!("expectation {mean} of a ±1 observable outside [−1, 1]")));
    }
    Ok(mean.clamp(-1.0, 1.0))
}

/// Draws ±1 outcomes with the channel's expectation, folds them into `agg`
/// and returns the aggregated running mean for this observable.
pub fn measure<R: Rng + ?Sized>(
    true_ch: &QuantumChannel,
    obs: &ObservableSpec,
    shots: Shots,
    rng: &mut R,
    agg: &mut EstimateAggregator,
) -> Result<f64> {
    let mean = expectation(true_ch, obs)?;
    let n = match shots {
        Shots::Exact => return Ok(mean),
        Shots::Finite(0) => return Err(Error::InvalidParameter("shots must be at least 1".into())),
        Shots::Finite(n) => n,
    };
    let p_plus = (0.5 * (1.0 + mean)).clamp(0.0, 1.0);
    let plus = Binomial::new(n, p_plus).map_err(|e| Error::InvalidParameter(e.to_string()))?.sample(rng);
    agg.record(obs, n, plus);
    Ok(agg.estimate(obs).expect("just recorded"))
}

#[derive(Debug, Clone)]
pub struct UpdateOptions {
    pub max_iterations: usize,
    /// Stop once an accepted step decreases the objective by less than this.
    pub decrease_tol: f64,
    /// Restarts of the reference-state maximization.
    pub restarts: usize,
    pub seed: u64,
    pub floor: f64,
}

impl Default for UpdateOptions {
    fn default() -> Self {
        Self { max_iterations: 200, decrease_tol: 1e-7, restarts: 8, seed: 0, floor: MODEL_FLOOR }
    }
}

#[derive(Debug, Clone)]
pub struct UpdateResult {
    pub channel: QuantumChannel,
    pub objective: f64,
    pub initial_objective: f64,
    pub iterations: usize,
    /// Objective after every accepted step (starting value first).
    pub history: Vec<f64>,
}

/// The convex update objective `f(J) = max_φ D(√φJ√φ ‖ √φM√φ) + η (s − tr[E J])²`.
pub struct UpdateObjective<'a> {
    model: &'a QuantumChannel,
    e: HermitianOperator,
    s: f64,
    eta: f64,
}

/// Objective value together with the maximizing reference.
#[derive(Debug, Clone)]
pub struct ObjectiveValue {
    pub value: f64,
    pub divergence: f64,
    pub x: Vec<f64>,
    pub phi: ReferenceState,
}

impl<'a> UpdateObjective<'a> {
    pub fn new(model: &'a QuantumChannel, obs: &ObservableSpec, s: f64, eta: f64) -> Self {
        Self { model, e: obs.operator(), s, eta }
    }

    pub fn loss(&self, j: &HermitianOperator) -> f64 {
        let r = self.s - self.e.inner(j);
        r * r
    }

    pub fn evaluate(&self, j: &QuantumChannel, search: &ReferenceSearch) -> Result<ObjectiveValue> {
        let bloch = BlochParametrization::new(j.d_in());
        let d_out = j.d_out();
        let div = |x: &[f64]| -> Result<f64> {
            let phi = bloch.state(x)?;
            let sq = lift(phi.sqrt(), d_out);
            let sr = eig_hermitian(&j.choi().sandwich(&sq))?;
            let ss = eig_hermitian(&self.model.choi().sandwich(&sq))?;
            Ok(relative_entropy_interior(&sr, &ss))
        };
        let x0 = search.start.clone().unwrap_or_else(|| vec![0.0; bloch.num_params()]);
        let r = search.searcher().minimize(|x| div(x).map(|v| -v).unwrap_or(f64::INFINITY), &x0);
        let divergence = -r.value;
        if !divergence.is_finite() {
            return Err(Error::NonFinite("relative entropy to the floored model".into()));
        }
        Ok(ObjectiveValue {
            value: divergence + self.eta * self.loss(j.choi()),
            divergence,
            phi: bloch.state(&r.x)?,
            x: bloch.clamp(&r.x),
        })
    }

    /// Gradient of the objective at `j` with the reference frozen at `phi`.
    fn gradient(&self, j: &HermitianOperator, phi: &ReferenceState, log_sigma: &HermitianOperator) -> Result<HermitianOperator> {
        let sq = lift(phi.sqrt(), self.model.d_out());
        let rho = j.sandwich(&sq);
        // Rank-deficient iterates: the clamp keeps the direction finite and
        // pointing back into the interior.
        let log_rho = eig_hermitian(&rho)?.map(|l| l.max(1e-30).ln());
        let g = log_rho.sub(log_sigma).sandwich(&sq);
        Ok(g.axpy(-2.0 * self.eta * (self.s - self.e.inner(j)), &self.e))
    }

    fn frozen(&self, phi: &ReferenceState) -> Result<Frozen> {
        let sq = lift(phi.sqrt(), self.model.d_out());
        let sigma = eig_hermitian(&self.model.choi().sandwich(&sq))?;
        Ok(Frozen { sq, sigma })
    }
}

struct Frozen {
    sq: HermitianOperator,
    sigma: Spectrum,
}

fn lift(sqrt_phi: &HermitianOperator, d_out: usize) -> HermitianOperator {
    HermitianOperator::identity(d_out).kron(sqrt_phi)
}

/// Golden-section minimization of a unimodal function on `[0, 1]`.
pub fn golden_section<F: FnMut(f64) -> f64>(mut f: F, tol: f64) -> (f64, f64) {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (0.0, 1.0);
    let mut x1 = b - r * (b - a);
    let mut x2 = a + r * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while b - a > tol {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - r * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + r * (b - a);
            f2 = f(x2);
        }
    }
    // the endpoints are candidates too
    let mut best = if f1 <= f2 { (x1, f1) } else { (x2, f2) };
    for t in [0.0, 1.0] {
        let v = f(t);
        if v < best.1 {
            best = (t, v);
        }
    }
    best
}

/// One learner update by conditional gradient over the CPTP set.
///
/// The reference maximizer is refreshed after every step (warm-started from
/// the previous one, with the full restart budget at the start); gradients
/// use the envelope rule at that maximizer, and the step size comes from an
/// exact line search with the reference frozen, followed by backtracking on
/// the true objective so accepted steps never increase it.
pub fn update(
    m_prev: &QuantumChannel,
    obs: &ObservableSpec,
    s: f64,
    eta: f64,
    opts: &UpdateOptions,
) -> Result<UpdateResult> {
    if !(eta > 0.0 && eta < 1.0) {
        return Err(Error::InvalidParameter(format!("learning rate η = {eta} must lie in (0, 1)")));
    }
    if !s.is_finite() {
        return Err(Error::NonFinite("estimate".into()));
    }
    let (d_in, d_out) = (m_prev.d_in(), m_prev.d_out());
    let model = m_prev.floored(opts.floor);
    let obj = UpdateObjective::new(&model, obs, s, eta);

    let full = ReferenceSearch { xtol: SEARCH_XTOL,
            ftol: SEARCH_FTOL, ..ReferenceSearch::new(opts.restarts, opts.seed) };
    let mut j = m_prev.clone();
    let mut cur = obj.evaluate(&j, &full)?;
    let initial = cur.value;
    let mut history = vec![cur.value];
    let mut iterations = 0;

    while iterations < opts.max_iterations {
        iterations += 1;
        let fr = obj.frozen(&cur.phi)?;
        let log_sigma = fr.sigma.map(|l| l.max(1e-300).ln());
        let g = obj.gradient(j.choi(), &cur.phi, &log_sigma)?;
        let v = cptp_linear_minimize(&g, d_in, d_out)?;
        let dir = v.choi().sub(j.choi());
        // Frank–Wolfe gap: no descent direction left.
        if g.inner(&dir) > -opts.decrease_tol * 1e-3 {
            break;
        }
        let rho_j = j.choi().sandwich(&fr.sq);
        let rho_d = dir.sandwich(&fr.sq);
        let frozen_f = |gamma: f64| -> f64 {
            let rho = rho_j.axpy(gamma, &rho_d);
            let d = eig_hermitian(&rho).map(|sr| relative_entropy_interior(&sr, &fr.sigma)).unwrap_or(f64::INFINITY);
            d + eta * obj.loss(&j.choi().axpy(gamma, &dir))
        };
        let (mut gamma, _) = golden_section(frozen_f, 1e-9);

        let mut accepted = None;
        let warm = ReferenceSearch {
            start: Some(cur.x.clone()),
            step: WARM_STEP,
            flat_size: f64::INFINITY,
            xtol: SEARCH_XTOL,
            ftol: SEARCH_FTOL,
            ..ReferenceSearch::new(0, opts.seed)
        };
        for _ in 0..30 {
            if gamma <= 0.0 {
                break;
            }
            let cand = QuantumChannel::from_trusted(d_in, d_out, j.choi().axpy(gamma, &dir));
            let val = obj.evaluate(&cand, &warm)?;
            if val.value <= cur.value {
                accepted = Some((cand, val));
                break;
            }
            gamma *= 0.5;
        }
        let Some((cand, val)) = accepted else { break };
        let decrease = cur.value - val.value;
        debug_assert!(decrease >= 0.0);
        j = cand;
        cur = val;
        history.push(cur.value);
        if decrease < opts.decrease_tol {
            break;
        }
    }

    // Final check of the maximizer with the full restart budget, warm-started.
    let last = ReferenceSearch {
        start: Some(cur.x.clone()),
        xtol: SEARCH_XTOL,
            ftol: SEARCH_FTOL,
        ..ReferenceSearch::new(opts.restarts, opts.seed.wrapping_add(1))
    };
    let fin = obj.evaluate(&j, &last)?;
    let objective = fin.value.max(cur.value);
    let j = crate::optim::cptp::repair_choi(j.choi(), d_in, d_out)?;
    let channel = QuantumChannel::with_tolerance(d_in, d_out, j, 1e-7)?;
    Ok(UpdateResult { channel, objective, initial_objective: initial, iterations, history })
}

/// One row of a learning trace. `t = 0` is the initial model and carries no
/// observable, estimate or loss.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub t: usize,
    pub obs_id: Option<usize>,
    pub s: Option<f64>,
    /// `(s − tr[E M^(t−1)])²`, the loss incurred before the update.
    pub loss: Option<f64>,
    /// `D(M^(t) ‖ N_true)`, `+∞` off support.
    pub rel_entropy: f64,
    /// `D(M^(t) ‖ floored N_true)`, always finite.
    pub rel_entropy_floored: f64,
    pub diamond: f64,
    pub seconds: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LearningTrace {
    pub seed: u64,
    pub eta: f64,
    pub shots: Shots,
    pub rows: Vec<TraceRow>,
}

impl LearningTrace {
    pub fn first(&self) -> &TraceRow {
        &self.rows[0]
    }

    pub fn last(&self) -> &TraceRow {
        self.rows.last().expect("trace has the initial row")
    }

    pub const CSV_HEADER: &'static str = "t,obs_id,s,loss,rel_entropy,rel_entropy_floored,diamond,seconds";

    /// CSV with `#`-prefixed header lines carrying the format version and run
    /// parameters. Floats use the shortest round-trip representation.
    pub fn to_csv(&self, extra_header: &[(&str, String)]) -> String {
        let mut out = String::new();
        out.push_str(&format!("# format_version={}\n", crate::io::FORMAT_VERSION));
        out.push_str(&format!("# seed={}\n# eta={}\n", self.seed, self.eta));
        match self.shots {
            Shots::Finite(n) => out.push_str(&format!("# shots={n}\n")),
            Shots::Exact => out.push_str("# shots=exact\n"),
        }
        for (k, v) in extra_header {
            out.push_str(&format!("# {k}={v}\n"));
        }
        out.push_str(Self::CSV_HEADER);
        out.push('\n');
        let opt = |v: Option<f64>| v.map(fmt_f64).unwrap_or_default();
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                r.t,
                r.obs_id.map(|i| i.to_string()).unwrap_or_default(),
                opt(r.s),
                opt(r.loss),
                fmt_f64(r.rel_entropy),
                fmt_f64(r.rel_entropy_floored),
                fmt_f64(r.diamond),
                opt(r.seconds)
            ));
        }
        out
    }
}

pub(crate) fn fmt_f64(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{v:?}")
    }
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub iterations: usize,
    pub eta: f64,
    pub shots: Shots,
    pub seed: u64,
    pub update: UpdateOptions,
    /// Restarts for the trace's relative-entropy column.
    pub metric_restarts: usize,
    /// Fill the `seconds` column (wall-clock, not reproducible).
    pub timing: bool,
}

impl RunOptions {
    pub fn new(iterations: usize, seed: u64) -> Self {
        Self {
            iterations,
            eta: 0.15,
            shots: Shots::Finite(100),
            seed,
            update: UpdateOptions::default(),
            metric_restarts: 8,
            timing: false,
        }
    }
}

struct TraceMetrics<'a> {
    target: &'a QuantumChannel,
    floored: QuantumChannel,
    restarts: usize,
    seed: u64,
    warm: Option<Vec<f64>>,
    warm_floored: Option<Vec<f64>>,
}

impl TraceMetrics<'_> {
    fn row(&mut self, t: usize, m: &QuantumChannel) -> Result<(f64, f64, f64)> {
        let mut search = ReferenceSearch {
            xtol: SEARCH_XTOL,
            ftol: SEARCH_FTOL,
            ..ReferenceSearch::new(self.restarts, self.seed ^ (t as u64).wrapping_mul(0x9E37_79B9))
        };
        search.start = self.warm.clone();
        let r = channel_relative_entropy_with(m, self.target, &search)?;
        let rel = r.value;
        if rel.is_finite() {
            self.warm = Some(r.x);
        }
        search.start = self.warm_floored.clone();
        let rf = channel_relative_entropy_with(m, &self.floored, &search)?;
        self.warm_floored = Some(rf.x);
        let diamond = diamond_distance(m, self.target)?.value;
        Ok((rel, rf.value, diamond))
    }
}

/// Runs the learner for `opts.iterations` rounds from the completely
/// depolarizing channel. Deterministic given the seed (apart from `seconds`).
pub fn run(true_ch: &QuantumChannel, opts: &RunOptions) -> Result<LearningTrace> {
    if true_ch.d_in() != 2 || true_ch.d_out() != 2 {
        return Err(Error::DimensionMismatch("the learner works with qubit channels".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut agg = EstimateAggregator::new();
    let mut metrics = TraceMetrics {
        target: true_ch,
        floored: true_ch.floored(MODEL_FLOOR),
        restarts: opts.metric_restarts,
        seed: opts.seed,
        warm: None,
        warm_floored: None,
    };
    let mut model = completely_depolarizing(2, 2);
    let (rel, relf, dia) = metrics.row(0, &model)?;
    let mut rows = vec![TraceRow {
        t: 0,
        obs_id: None,
        s: None,
        loss: None,
        rel_entropy: rel,
        rel_entropy_floored: relf,
        diamond: dia,
        seconds: opts.timing.then_some(0.0),
    }];
    let clock = Instant::now();
    for t in 1..=opts.iterations {
        let obs = sample_observable(&mut rng);
        let s = measure(true_ch, &obs, opts.shots, &mut rng, &mut agg)?;
        let loss = {
            let r = s - model.choi().inner(&obs.operator());
            r * r
        };
        let uopts = UpdateOptions { seed: opts.update.seed ^ t as u64, ..opts.update.clone() };
        model = update(&model, &obs, s, opts.eta, &uopts)?.channel;
        let (rel, relf, dia) = metrics.row(t, &model)?;
        rows.push(TraceRow {
            t,
            obs_id: Some(obs.id),
            s: Some(s),
            loss: Some(loss),
            rel_entropy: rel,
            rel_entropy_floored: relf,
            diamond: dia,
            seconds: opts.timing.then(|| clock.elapsed().as_secs_f64()),
        });
    }
    Ok(LearningTrace { seed: opts.seed, eta: opts.eta, shots: opts.shots, rows })
}
