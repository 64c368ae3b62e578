//! Quantum channels in the Choi representation.
//!
//! The Choi matrix of `N: A → B` is `J = (N ⊗ id_R)(Φ_{A:R})` with the
//! unnormalized `|Φ⟩ = Σ_j |j⟩_A |j⟩_R`, stored on `B ⊗ R` (output factor
//! first). Complete positivity is `J ⪰ 0`; trace preservation is
//! `tr_B J = 1_R`. Then `N(ρ) = tr_R[J (1_B ⊗ ρ^t)]`, with the transpose taken
//! in the computational basis that defines `Φ`.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{
    c, eig_hermitian, id_kron, matrix_function, permute_subsystems, trace_first, trace_second, ComplexMatrix,
    HermitianOperator, MatrixFunction, ONE, ZERO,
};

/// Default CP/TP tolerance accepted by [`QuantumChannel::new`].
pub const CPTP_TOL: f64 = 1e-9;

/// Eigenvalue cut applied to the Choi spectrum when extracting Kraus operators.
pub const CHOI_RANK_CUT: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct QuantumChannel {
    d_in: usize,
    d_out: usize,
    choi: HermitianOperator,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CptpDiagnostic {
    /// `max(0, −λ_min(J))`
    pub cp_violation: f64,
    /// `‖tr_B J − 1_R‖_F`
    pub tp_violation: f64,
}

impl CptpDiagnostic {
    pub fn within(&self, tol: f64) -> bool {
        self.cp_violation <= tol && self.tp_violation <= tol
    }
}

pub fn is_cptp(choi: &HermitianOperator, d_in: usize, d_out: usize) -> Result<CptpDiagnostic> {
    if choi.dim() != d_in * d_out {
        return Err(Error::DimensionMismatch(format!(
            "Choi dimension {} does not match d_out·d_in = {}",
            choi.dim(),
            d_in * d_out
        )));
    }
    let spec = eig_hermitian(choi)?;
    let tr_b = trace_first(choi.matrix(), d_out, d_in);
    let tp = (tr_b - ComplexMatrix::identity(d_in, d_in)).norm();
    Ok(CptpDiagnostic { cp_violation: (-spec.min()).max(0.0), tp_violation: tp })
}

impl QuantumChannel {
    pub fn new(d_in: usize, d_out: usize, choi: HermitianOperator) -> Result<Self> {
        Self::with_tolerance(d_in, d_out, choi, CPTP_TOL)
    }

    pub fn with_tolerance(d_in: usize, d_out: usize, choi: HermitianOperator, tol: f64) -> Result<Self> {
        let diag = is_cptp(&choi, d_in, d_out)?;
        if !diag.within(tol) {
            return Err(Error::InvalidParameter(format!(
                "Choi matrix is not CPTP: cp violation {:e}, tp violation {:e}",
                diag.cp_violation, diag.tp_violation
            )));
        }
        Ok(Self { d_in, d_out, choi })
    }

    /// Skips validation; callers guarantee the invariants.
    pub(crate) fn from_trusted(d_in: usize, d_out: usize, choi: HermitianOperator) -> Self {
        debug_assert_eq!(choi.dim(), d_in * d_out);
        Self { d_in, d_out, choi }
    }

    pub fn d_in(&self) -> usize {
        self.d_in
    }

    pub fn d_out(&self) -> usize {
        self.d_out
    }

    pub fn choi(&self) -> &HermitianOperator {
        &self.choi
    }

    pub fn diagnostics(&self) -> CptpDiagnostic {
        is_cptp(&self.choi, self.d_in, self.d_out).expect("dimensions fixed at construction")
    }

    /// Choi state `J / d_in`.
    pub fn normalized_choi(&self) -> HermitianOperator {
        self.choi.scaled(1.0 / self.d_in as f64)
    }

    pub fn apply(&self, rho: &HermitianOperator) -> Result<HermitianOperator> {
        if rho.dim() != self.d_in {
            return Err(Error::DimensionMismatch(format!("input has dimension {}, channel expects {}", rho.dim(), self.d_in)));
        }
        let x = self.choi.matrix() * id_kron(self.d_out, &rho.matrix().transpose());
        Ok(HermitianOperator::hermitian_part(&trace_second(&x, self.d_out, self.d_in)))
    }

    /// Output on `B ⊗ R` for the purified input `φ_R^{1/2}|Φ⟩`.
    pub fn apply_with_reference(&self, phi: &ReferenceState) -> Result<HermitianOperator> {
        if phi.dim() != self.d_in {
            return Err(Error::DimensionMismatch(format!(
                "reference has dimension {}, channel input is {}",
                phi.dim(),
                self.d_in
            )));
        }
        Ok(self.apply_with_sqrt(phi.sqrt()))
    }

    /// `(1 ⊗ s) J (1 ⊗ s)` for a Hermitian `s` on R.
    pub fn apply_with_sqrt(&self, s: &HermitianOperator) -> HermitianOperator {
        // block by block: each (b, b') block of J is sandwiched by s
        let (db, dr) = (self.d_out, self.d_in);
        let j = self.choi.matrix();
        let sm = s.matrix();
        let mut out = ComplexMatrix::zeros(db * dr, db * dr);
        for b in 0..db {
            for b2 in 0..db {
                let blk = sm * j.view((b * dr, b2 * dr), (dr, dr)) * sm;
                out.view_mut((b * dr, b2 * dr), (dr, dr)).copy_from(&blk);
            }
        }
        HermitianOperator::hermitian_part(&out)
    }

    /// Convex combination `(1−w)·self + w·other`.
    pub fn mix(&self, other: &QuantumChannel, w: f64) -> Result<QuantumChannel> {
        self.same_shape(other)?;
        let choi = self.choi.scaled(1.0 - w).axpy(w, &other.choi);
        Ok(Self { d_in: self.d_in, d_out: self.d_out, choi })
    }

    /// Mixes in a weight `eps` of the completely depolarizing channel.
    pub fn floored(&self, eps: f64) -> QuantumChannel {
        self.mix(&completely_depolarizing(self.d_in, self.d_out), eps).expect("same shape")
    }

    pub fn same_shape(&self, other: &QuantumChannel) -> Result<()> {
        if self.d_in != other.d_in || self.d_out != other.d_out {
            return Err(Error::DimensionMismatch(format!(
                "channels {}→{} and {}→{} differ in shape",
                self.d_in, self.d_out, other.d_in, other.d_out
            )));
        }
        Ok(())
    }

    /// Kraus operators `K_k` (`d_out × d_in`) from the Choi spectrum.
    pub fn kraus(&self) -> Result<Vec<ComplexMatrix>> {
        let spec = eig_hermitian(&self.choi)?;
        let scale = spec.max().max(1.0);
        let mut out = Vec::new();
        for j in (0..spec.dim()).rev() {
            let l = spec.values[j];
            if l <= CHOI_RANK_CUT * scale {
                continue;
            }
            let s = l.sqrt();
            let k = ComplexMatrix::from_fn(self.d_out, self.d_in, |b, a| spec.vectors[(b * self.d_in + a, j)] * s);
            out.push(k);
        }
        Ok(out)
    }

    /// `N^{⊗n}` as an explicit channel on `A^n → B^n` (outputs `B_1…B_n`, then
    /// references `R_1…R_n`).
    pub fn tensor_power(&self, n: usize) -> Result<QuantumChannel> {
        if n == 0 {
            return Err(Error::InvalidParameter("tensor power needs n ≥ 1".into()));
        }
        let mut choi = self.choi.matrix().clone();
        for _ in 1..n {
            choi = choi.kronecker(self.choi.matrix());
        }
        let dims: Vec<usize> = (0..n).flat_map(|_| [self.d_out, self.d_in]).collect();
        let perm: Vec<usize> = (0..n).map(|i| 2 * i).chain((0..n).map(|i| 2 * i + 1)).collect();
        let choi = permute_subsystems(&choi, &dims, &perm)?;
        Ok(Self::from_trusted(self.d_in.pow(n as u32), self.d_out.pow(n as u32), HermitianOperator::hermitian_part(&choi)))
    }
}

/// Reference state `φ_R` of the purified input `φ_R^{1/2}|Φ_{A:R}⟩`.
#[derive(Debug, Clone)]
pub struct ReferenceState {
    phi: HermitianOperator,
    sqrt: HermitianOperator,
}

impl ReferenceState {
    pub fn new(phi: HermitianOperator) -> Result<Self> {
        let tr = phi.trace();
        if (tr - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidState(format!("reference state has trace {tr}")));
        }
        let spec = eig_hermitian(&phi)?;
        if spec.min() < -1e-12 {
            return Err(Error::InvalidState(format!("reference state has eigenvalue {:e}", spec.min())));
        }
        let sqrt = spec.map(|l| l.max(0.0).sqrt());
        Ok(Self { phi, sqrt })
    }

    pub fn maximally_mixed(d: usize) -> Self {
        let phi = HermitianOperator::identity(d).scaled(1.0 / d as f64);
        let sqrt = HermitianOperator::identity(d).scaled((1.0 / d as f64).sqrt());
        Self { phi, sqrt }
    }

    pub fn dim(&self) -> usize {
        self.phi.dim()
    }

    pub fn operator(&self) -> &HermitianOperator {
        &self.phi
    }

    pub fn sqrt(&self) -> &HermitianOperator {
        &self.sqrt
    }

    pub fn min_eigenvalue(&self) -> f64 {
        eig_hermitian(&self.phi).map(|s| s.min()).unwrap_or(0.0)
    }

    pub fn inv_sqrt(&self) -> Result<HermitianOperator> {
        matrix_function(&self.phi, MatrixFunction::InvSqrt)
    }

    /// `φ^{⊗n}`
    pub fn tensor_power(&self, n: usize) -> ReferenceState {
        let mut phi = self.phi.clone();
        let mut sqrt = self.sqrt.clone();
        for _ in 1..n {
            phi = phi.kron(&self.phi);
            sqrt = sqrt.kron(&self.sqrt);
        }
        Self { phi, sqrt }
    }
}

/// Stinespring isometry `V: A → B ⊗ E`, `V = Σ_k K_k ⊗ |k⟩_E`.
#[derive(Debug, Clone)]
pub struct Dilation {
    pub kraus: Vec<ComplexMatrix>,
    pub d_in: usize,
    pub d_out: usize,
}

impl Dilation {
    pub fn env_dim(&self) -> usize {
        self.kraus.len()
    }

    /// Isometry matrix with rows indexed by `b·d_E + k`.
    pub fn isometry(&self) -> ComplexMatrix {
        let de = self.env_dim();
        ComplexMatrix::from_fn(self.d_out * de, self.d_in, |row, a| self.kraus[row % de][(row / de, a)])
    }

    /// Channel `A → B` recovered by tracing out E.
    pub fn channel(&self) -> QuantumChannel {
        QuantumChannel::from_trusted(self.d_in, self.d_out, choi_from_kraus(&self.kraus, self.d_in, self.d_out))
    }

    /// Complementary channel `A → E`, `T̂(ρ)_{kl} = tr[K_k ρ K_l†]`.
    pub fn complementary_channel(&self) -> QuantumChannel {
        let de = self.env_dim();
        let d = self.d_in;
        let mut j = ComplexMatrix::zeros(de * d, de * d);
        for k in 0..de {
            for l in 0..de {
                for a in 0..d {
                    for a2 in 0..d {
                        let mut acc = ZERO;
                        for b in 0..self.d_out {
                            acc += self.kraus[k][(b, a)] * self.kraus[l][(b, a2)].conj();
                        }
                        j[(k * d + a, l * d + a2)] = acc;
                    }
                }
            }
        }
        QuantumChannel::from_trusted(d, de, HermitianOperator::hermitian_part(&j))
    }

    /// Heisenberg-picture complementary map `T̂†(X) = Σ_{kl} X_{lk} K_l† K_k`.
    pub fn complementary_adjoint(&self, x: &HermitianOperator) -> HermitianOperator {
        let de = self.env_dim();
        let mut out = ComplexMatrix::zeros(self.d_in, self.d_in);
        for k in 0..de {
            for l in 0..de {
                let w = x.matrix()[(l, k)];
                if w == ZERO {
                    continue;
                }
                out += (self.kraus[l].adjoint() * &self.kraus[k]) * w;
            }
        }
        HermitianOperator::hermitian_part(&out)
    }
}

/// Stinespring dilation and complementary channel from the Choi spectrum.
pub fn complementary(ch: &QuantumChannel) -> Result<(QuantumChannel, Dilation)> {
    let dil = Dilation { kraus: ch.kraus()?, d_in: ch.d_in, d_out: ch.d_out };
    let rebuilt = dil.channel();
    let err = rebuilt.choi.sub(&ch.choi).frobenius();
    if err > 1e-8 * ch.choi.frobenius().max(1.0) {
        return Err(Error::NonFinite(format!("dilation reproduces the channel only to {err:e}")));
    }
    Ok((dil.complementary_channel(), dil))
}

pub fn choi_from_kraus(kraus: &[ComplexMatrix], d_in: usize, d_out: usize) -> HermitianOperator {
    let n = d_in * d_out;
    let mut j = ComplexMatrix::zeros(n, n);
    for k in kraus {
        let v = ComplexMatrix::from_fn(n, 1, |i, _| k[(i / d_in, i % d_in)]);
        j += &v * v.adjoint();
    }
    HermitianOperator::hermitian_part(&j)
}

pub fn from_kraus(kraus: &[ComplexMatrix]) -> Result<QuantumChannel> {
    let first = kraus.first().ok_or_else(|| Error::InvalidParameter("empty Kraus list".into()))?;
    let (d_out, d_in) = first.shape();
    if kraus.iter().any(|k| k.shape() != (d_out, d_in)) {
        return Err(Error::DimensionMismatch("Kraus operators differ in shape".into()));
    }
    QuantumChannel::new(d_in, d_out, choi_from_kraus(kraus, d_in, d_out))
}

/// Unnormalized `Φ_{B:R}` on `d ⊗ d`.
pub fn max_entangled(d: usize) -> HermitianOperator {
    let mut v = vec![ZERO; d * d];
    for j in 0..d {
        v[j * d + j] = ONE;
    }
    HermitianOperator::outer(&v)
}

pub fn identity(d: usize) -> QuantumChannel {
    QuantumChannel::from_trusted(d, d, max_entangled(d))
}

/// `ρ ↦ tr(ρ)·1_B/d_B`
pub fn completely_depolarizing(d_in: usize, d_out: usize) -> QuantumChannel {
    let n = d_in * d_out;
    QuantumChannel::from_trusted(d_in, d_out, HermitianOperator::identity(n).scaled(1.0 / d_out as f64))
}

fn check_prob(name: &str, p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) || !p.is_finite() {
        return Err(Error::InvalidParameter(format!("{name} = {p} must lie in [0, 1]")));
    }
    Ok(())
}

/// `ρ ↦ (1−p)ρ + p·tr(ρ)·1/d` on a qudit of dimension `d`.
pub fn depolarizing_d(d: usize, p: f64) -> Result<QuantumChannel> {
    check_prob("p", p)?;
    let choi = max_entangled(d).scaled(1.0 - p).add(&HermitianOperator::identity(d * d).scaled(p / d as f64));
    Ok(QuantumChannel::from_trusted(d, d, choi))
}

/// Qubit depolarizing channel `ρ ↦ (1−p)ρ + p·1/2`.
pub fn depolarizing(p: f64) -> Result<QuantumChannel> {
    depolarizing_d(2, p)
}

/// Complete dephasing in the orthonormal basis given by the columns of `basis`.
pub fn dephasing(basis: &ComplexMatrix) -> Result<QuantumChannel> {
    let d = basis.nrows();
    if basis.ncols() != d || (basis.adjoint() * basis - ComplexMatrix::identity(d, d)).norm() > 1e-10 {
        return Err(Error::InvalidParameter("dephasing basis must be a unitary matrix".into()));
    }
    let kraus: Vec<ComplexMatrix> = (0..d)
        .map(|k| {
            let v = basis.column(k);
            &v * v.adjoint()
        })
        .collect();
    Ok(QuantumChannel::from_trusted(d, d, choi_from_kraus(&kraus, d, d)))
}

pub fn amplitude_damping(gamma: f64) -> Result<QuantumChannel> {
    check_prob("gamma", gamma)?;
    let k0 = ComplexMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, c((1.0 - gamma).sqrt(), 0.0)]);
    let k1 = ComplexMatrix::from_row_slice(2, 2, &[ZERO, c(gamma.sqrt(), 0.0), ZERO, ZERO]);
    Ok(QuantumChannel::from_trusted(2, 2, choi_from_kraus(&[k0, k1], 2, 2)))
}

pub fn pauli_channel(p_i: f64, p_x: f64, p_y: f64, p_z: f64) -> Result<QuantumChannel> {
    let ps = [p_i, p_x, p_y, p_z];
    for p in ps {
        check_prob("Pauli probability", p)?;
    }
    let total: f64 = ps.iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidParameter(format!("Pauli probabilities sum to {total}")));
    }
    use crate::linalg::pauli;
    let kraus: Vec<ComplexMatrix> = [pauli::i(), pauli::x(), pauli::y(), pauli::z()]
        .iter()
        .zip(ps)
        .map(|(s, p)| s.matrix() * c(p.sqrt(), 0.0))
        .collect();
    Ok(QuantumChannel::from_trusted(2, 2, choi_from_kraus(&kraus, 2, 2)))
}

/// Replaces every input by `e^{−βH}/Z`.
pub fn gibbs_replacer(h: &HermitianOperator, beta: f64, d_in: usize) -> Result<QuantumChannel> {
    let g = gibbs_state(h, beta)?;
    Ok(QuantumChannel::from_trusted(d_in, h.dim(), g.kron(&HermitianOperator::identity(d_in))))
}

/// `e^{−βH}/tr e^{−βH}`, shifted for numerical range.
pub fn gibbs_state(h: &HermitianOperator, beta: f64) -> Result<HermitianOperator> {
    if !beta.is_finite() {
        return Err(Error::InvalidParameter("inverse temperature must be finite".into()));
    }
    let spec = eig_hermitian(h)?;
    let shift = if beta >= 0.0 { spec.min() } else { spec.max() };
    let g = spec.map(|e| (-beta * (e - shift)).exp());
    let z = g.trace();
    Ok(g.scaled(1.0 / z))
}

pub fn unitary_channel(u: &ComplexMatrix) -> Result<QuantumChannel> {
    let d = u.nrows();
    if u.ncols() != d || (u.adjoint() * u - ComplexMatrix::identity(d, d)).norm() > 1e-10 {
        return Err(Error::InvalidParameter("matrix is not unitary".into()));
    }
    Ok(QuantumChannel::from_trusted(d, d, choi_from_kraus(std::slice::from_ref(u), d, d)))
}

/// Random channel from a Gaussian Stinespring isometry `A → B ⊗ E`
/// orthonormalized by QR.
pub fn random_channel(d_in: usize, d_out: usize, d_env: usize, seed: u64) -> Result<QuantumChannel> {
    if d_out * d_env < d_in {
        return Err(Error::InvalidParameter(format!(
            "isometry needs d_out·d_env ≥ d_in ({}·{} < {})",
            d_out, d_env, d_in
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = d_out * d_env;
    let mut g = DMatrix::zeros(rows, d_in);
    for j in 0..d_in {
        for i in 0..rows {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            g[(i, j)] = c(re, im);
        }
    }
    let q = g.qr().q();
    let kraus: Vec<ComplexMatrix> = (0..d_env)
        .map(|e| ComplexMatrix::from_fn(d_out, d_in, |b, a| q[(b * d_env + e, a)]))
        .collect();
    QuantumChannel::new(d_in, d_out, choi_from_kraus(&kraus, d_in, d_out))
}
