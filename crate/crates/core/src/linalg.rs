//! Dense complex linear algebra for Hermitian operators.
//!
//! Matrices are `nalgebra` dense complex matrices. Multipartite operators use
//! row-major subsystem ordering: on `X ⊗ Y` the pair `(i_x, i_y)` sits at index
//! `i_x * dim_y + i_y`.

use std::cmp::Ordering;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type ComplexMatrix = DMatrix<Complex64>;

/// Relative asymmetry accepted when validating Hermitian input.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Eigenvalue floor for `log` and `inv_sqrt`.
pub const EIGEN_FLOOR: f64 = 1e-12;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[inline]
pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// A square complex matrix equal to its conjugate transpose.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator {
    matrix: ComplexMatrix,
}

impl HermitianOperator {
    /// Validates symmetry to `1e-12 · max|entry|` and exactly symmetrizes.
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "operator must be square, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let mut scale = 0.0f64;
        let mut dev = 0.0f64;
        let n = matrix.nrows();
        for i in 0..n {
            for j in 0..n {
                let z = matrix[(i, j)];
                if !z.re.is_finite() || !z.im.is_finite() {
                    return Err(Error::NonFinite("operator entry".into()));
                }
                scale = scale.max(z.norm());
                dev = dev.max((z - matrix[(j, i)].conj()).norm());
            }
        }
        let tolerance = HERMITIAN_TOL * scale;
        if dev > tolerance {
            return Err(Error::NotHermitian { deviation: dev, tolerance });
        }
        Ok(Self::hermitian_part(&matrix))
    }

    /// `(M + M†)/2`, for internally produced matrices that are Hermitian up to
    /// round-off.
    pub fn hermitian_part(m: &ComplexMatrix) -> Self {
        let mut h = m + m.adjoint();
        h.scale_mut(0.5);
        Self { matrix: h }
    }

    pub fn zeros(dim: usize) -> Self {
        Self { matrix: ComplexMatrix::zeros(dim, dim) }
    }

    pub fn identity(dim: usize) -> Self {
        Self { matrix: ComplexMatrix::identity(dim, dim) }
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = ComplexMatrix::zeros(n, n);
        for (i, d) in diag.iter().enumerate() {
            m[(i, i)] = c(*d, 0.0);
        }
        Self { matrix: m }
    }

    /// Rank-one projector `|v⟩⟨v|` (not normalized).
    pub fn outer(v: &[Complex64]) -> Self {
        let n = v.len();
        let m = ComplexMatrix::from_fn(n, n, |i, j| v[i] * v[j].conj());
        Self { matrix: m }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    /// `tr(A B)` for Hermitian `A`, `B` (always real).
    pub fn inner(&self, other: &HermitianOperator) -> f64 {
        hs_inner(&self.matrix, &other.matrix)
    }

    pub fn frobenius(&self) -> f64 {
        self.matrix.norm()
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { matrix: self.matrix.map(|z| z * s) }
    }

    pub fn add(&self, other: &HermitianOperator) -> Self {
        Self { matrix: &self.matrix + &other.matrix }
    }

    pub fn sub(&self, other: &HermitianOperator) -> Self {
        Self { matrix: &self.matrix - &other.matrix }
    }

    /// `self + s·other`
    pub fn axpy(&self, s: f64, other: &HermitianOperator) -> Self {
        Self { matrix: &self.matrix + other.matrix.map(|z| z * s) }
    }

    /// Transpose in the computational basis.
    pub fn transpose(&self) -> Self {
        Self { matrix: self.matrix.transpose() }
    }

    /// `X·self·X†`
    pub fn conjugate_by(&self, x: &ComplexMatrix) -> Self {
        Self::hermitian_part(&(x * &self.matrix * x.adjoint()))
    }

    /// `B·self·B` for Hermitian `B`.
    pub fn sandwich(&self, b: &HermitianOperator) -> Self {
        Self::hermitian_part(&(&b.matrix * &self.matrix * &b.matrix))
    }

    pub fn kron(&self, other: &HermitianOperator) -> Self {
        Self { matrix: tensor(&self.matrix, &other.matrix) }
    }

    pub fn max_abs_diff(&self, other: &HermitianOperator) -> f64 {
        (&self.matrix - &other.matrix).iter().fold(0.0, |m, z| m.max(z.norm()))
    }
}

/// `tr(A B)` real part; exact for Hermitian operands.
pub fn hs_inner(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    let n = a.nrows();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            let x = a[(i, j)];
            let y = b[(j, i)];
            acc += x.re * y.re - x.im * y.im;
        }
    }
    acc
}

/// Eigen-decomposition of a Hermitian operator, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors stored as columns.
    pub vectors: ComplexMatrix,
}

impl Spectrum {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn min(&self) -> f64 {
        self.values[0]
    }

    pub fn max(&self) -> f64 {
        *self.values.last().expect("non-empty spectrum")
    }

    /// `V·diag(f(λ))·V†`
    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> HermitianOperator {
        let n = self.dim();
        let fv: Vec<f64> = self.values.iter().map(|&l| f(l)).collect();
        let mut scaled = self.vectors.clone();
        for j in 0..n {
            for i in 0..n {
                scaled[(i, j)] *= fv[j];
            }
        }
        HermitianOperator::hermitian_part(&(scaled * self.vectors.adjoint()))
    }

    pub fn reconstruct(&self) -> HermitianOperator {
        self.map(|l| l)
    }

    /// Projector onto the span of eigenvectors whose eigenvalue satisfies `keep`.
    pub fn projector<F: Fn(f64) -> bool>(&self, keep: F) -> HermitianOperator {
        self.map(|l| if keep(l) { 1.0 } else { 0.0 })
    }

    pub fn column(&self, j: usize) -> Vec<Complex64> {
        self.vectors.column(j).iter().copied().collect()
    }
}

/// Hermitian eigen-decomposition with a deterministic output convention:
/// eigenvalues ascending, each eigenvector's first non-negligible component
/// made real positive, and exact ties ordered lexicographically by entries.
pub fn eig_hermitian(h: &HermitianOperator) -> Result<Spectrum> {
    let n = h.dim();
    if n == 0 {
        return Ok(Spectrum { values: vec![], vectors: ComplexMatrix::zeros(0, 0) });
    }
    let eig = SymmetricEigen::new(h.matrix.clone());
    let vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    if vals.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("eigenvalue".into()));
    }
    let mut cols: Vec<(f64, Vec<Complex64>)> = (0..n)
        .map(|j| {
            let mut v: Vec<Complex64> = eig.eigenvectors.column(j).iter().copied().collect();
            fix_phase(&mut v);
            (vals[j], v)
        })
        .collect();
    let scale = vals.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    cols.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal));
    // exact ties only; near-degenerate pairs keep their eigenvalue order
    let tie = 1e-14 * scale;
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && (cols[end].0 - cols[start].0).abs() <= tie {
            end += 1;
        }
        if end - start > 1 {
            cols[start..end].sort_by(|a, b| lex_cmp(&a.1, &b.1));
        }
        start = end;
    }
    let values = cols.iter().map(|c| c.0).collect();
    let vectors = ComplexMatrix::from_fn(n, n, |i, j| cols[j].1[i]);
    Ok(Spectrum { values, vectors })
}

fn fix_phase(v: &mut [Complex64]) {
    let max = v.iter().fold(0.0f64, |m, z| m.max(z.norm()));
    if max == 0.0 {
        return;
    }
    if let Some(p) = v.iter().find(|z| z.norm() > 1e-12 * max.max(1e-300)) {
        let phase = p.conj() / p.norm();
        for z in v.iter_mut() {
            *z *= phase;
        }
    }
}

fn lex_cmp(a: &[Complex64], b: &[Complex64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.re.partial_cmp(&y.re).unwrap_or(Ordering::Equal) {
            Ordering::Equal => {}
            o => return o,
        }
        match x.im.partial_cmp(&y.im).unwrap_or(Ordering::Equal) {
            Ordering::Equal => {}
            o => return o,
        }
    }
    Ordering::Equal
}

/// Scalar functions applied through the eigenbasis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MatrixFunction {
    Exp,
    Log,
    Sqrt,
    InvSqrt,
    Power(f64),
}

pub fn matrix_function(h: &HermitianOperator, f: MatrixFunction) -> Result<HermitianOperator> {
    let spec = eig_hermitian(h)?;
    apply_function(&spec, f)
}

pub fn apply_function(spec: &Spectrum, f: MatrixFunction) -> Result<HermitianOperator> {
    match f {
        MatrixFunction::Exp => Ok(spec.map(f64::exp)),
        MatrixFunction::Log => {
            check_floor(spec, EIGEN_FLOOR)?;
            Ok(spec.map(f64::ln))
        }
        MatrixFunction::InvSqrt => {
            check_floor(spec, EIGEN_FLOOR)?;
            Ok(spec.map(|l| 1.0 / l.sqrt()))
        }
        MatrixFunction::Sqrt => {
            // small negative round-off is clipped; anything else is rejected
            if spec.dim() > 0 && spec.min() < -1e-10 * spec.max().abs().max(1.0) {
                return Err(Error::EigenvalueBelowFloor { eigenvalue: spec.min(), floor: 0.0 });
            }
            Ok(spec.map(|l| l.max(0.0).sqrt()))
        }
        MatrixFunction::Power(t) => {
            if t.fract() != 0.0 || t < 0.0 {
                check_floor(spec, EIGEN_FLOOR)?;
            }
            Ok(spec.map(|l| l.powf(t)))
        }
    }
}

fn check_floor(spec: &Spectrum, floor: f64) -> Result<()> {
    if spec.dim() > 0 && spec.min() < floor {
        return Err(Error::EigenvalueBelowFloor { eigenvalue: spec.min(), floor });
    }
    Ok(())
}

/// Kronecker product `X ⊗ Y`.
pub fn tensor(x: &ComplexMatrix, y: &ComplexMatrix) -> ComplexMatrix {
    x.kronecker(y)
}

/// `1_{d} ⊗ X`
pub fn id_kron(d: usize, x: &ComplexMatrix) -> ComplexMatrix {
    tensor(&ComplexMatrix::identity(d, d), x)
}

/// `X ⊗ 1_{d}`
pub fn kron_id(x: &ComplexMatrix, d: usize) -> ComplexMatrix {
    tensor(x, &ComplexMatrix::identity(d, d))
}

fn check_dims(n: usize, dims: &[usize]) -> Result<()> {
    let prod: usize = dims.iter().product();
    if prod != n {
        return Err(Error::DimensionMismatch(format!(
            "subsystem dims {dims:?} multiply to {prod}, matrix has dimension {n}"
        )));
    }
    Ok(())
}

fn digits(mut idx: usize, dims: &[usize], out: &mut [usize]) {
    for k in (0..dims.len()).rev() {
        out[k] = idx % dims[k];
        idx /= dims[k];
    }
}

/// Traces out every subsystem not listed in `keep`. Kept subsystems retain
/// their relative order.
pub fn partial_trace(x: &ComplexMatrix, dims: &[usize], keep: &[usize]) -> Result<ComplexMatrix> {
    let n = x.nrows();
    if x.ncols() != n {
        return Err(Error::DimensionMismatch("partial trace of non-square matrix".into()));
    }
    check_dims(n, dims)?;
    let mut keep_sorted = keep.to_vec();
    keep_sorted.sort_unstable();
    keep_sorted.dedup();
    if keep_sorted.iter().any(|&k| k >= dims.len()) {
        return Err(Error::DimensionMismatch(format!("keep {keep:?} out of range for {dims:?}")));
    }
    let kdims: Vec<usize> = keep_sorted.iter().map(|&k| dims[k]).collect();
    let m: usize = kdims.iter().product();
    let mut out = ComplexMatrix::zeros(m, m);
    let ns = dims.len();
    let mut di = vec![0usize; ns];
    let mut dj = vec![0usize; ns];
    let traced: Vec<usize> = (0..ns).filter(|k| !keep_sorted.contains(k)).collect();
    for i in 0..n {
        digits(i, dims, &mut di);
        let mut ki = 0;
        for &k in &keep_sorted {
            ki = ki * dims[k] + di[k];
        }
        for j in 0..n {
            digits(j, dims, &mut dj);
            if traced.iter().any(|&t| di[t] != dj[t]) {
                continue;
            }
            let mut kj = 0;
            for &k in &keep_sorted {
                kj = kj * dims[k] + dj[k];
            }
            out[(ki, kj)] += x[(i, j)];
        }
    }
    Ok(out)
}

/// `tr_B X` for `X` on `B ⊗ R`.
pub fn trace_first(x: &ComplexMatrix, db: usize, dr: usize) -> ComplexMatrix {
    let mut out = ComplexMatrix::zeros(dr, dr);
    for b in 0..db {
        for r in 0..dr {
            for s in 0..dr {
                out[(r, s)] += x[(b * dr + r, b * dr + s)];
            }
        }
    }
    out
}

/// `tr_R X` for `X` on `B ⊗ R`.
pub fn trace_second(x: &ComplexMatrix, db: usize, dr: usize) -> ComplexMatrix {
    let mut out = ComplexMatrix::zeros(db, db);
    for b in 0..db {
        for c in 0..db {
            let mut acc = ZERO;
            for r in 0..dr {
                acc += x[(b * dr + r, c * dr + r)];
            }
            out[(b, c)] = acc;
        }
    }
    out
}

/// Reorders tensor factors: output factor `k` is input factor `perm[k]`.
pub fn permute_subsystems(x: &ComplexMatrix, dims: &[usize], perm: &[usize]) -> Result<ComplexMatrix> {
    let n = x.nrows();
    check_dims(n, dims)?;
    let mut seen = vec![false; dims.len()];
    if perm.len() != dims.len() || perm.iter().any(|&p| p >= dims.len() || std::mem::replace(&mut seen[p], true)) {
        return Err(Error::DimensionMismatch(format!("{perm:?} is not a permutation of {} factors", dims.len())));
    }
    let new_dims: Vec<usize> = perm.iter().map(|&p| dims[p]).collect();
    let mut map = vec![0usize; n];
    let mut d = vec![0usize; dims.len()];
    for (i, slot) in map.iter_mut().enumerate() {
        digits(i, dims, &mut d);
        let mut j = 0;
        for (k, &p) in perm.iter().enumerate() {
            j = j * new_dims[k] + d[p];
        }
        *slot = j;
    }
    let mut out = ComplexMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            out[(map[i], map[j])] = x[(i, j)];
        }
    }
    Ok(out)
}

/// Sum of singular values.
pub fn trace_norm(x: &ComplexMatrix) -> f64 {
    if x.nrows() == 0 {
        return 0.0;
    }
    x.clone().singular_values().iter().sum()
}

/// Trace norm of a Hermitian operator, `Σ|λ_i|`.
pub fn trace_norm_hermitian(h: &HermitianOperator) -> Result<f64> {
    Ok(eig_hermitian(h)?.values.iter().map(|v| v.abs()).sum())
}

/// Largest absolute eigenvalue.
pub fn operator_norm(h: &HermitianOperator) -> Result<f64> {
    let s = eig_hermitian(h)?;
    Ok(s.min().abs().max(s.max().abs()))
}

/// Orthonormal Hermitian basis (generalized Gell-Mann, normalized so that
/// `tr(E_i E_j) = δ_ij`), identity direction first.
pub fn hermitian_basis(d: usize) -> Vec<HermitianOperator> {
    let mut out = Vec::with_capacity(d * d);
    out.push(HermitianOperator::identity(d).scaled(1.0 / (d as f64).sqrt()));
    out.extend(traceless_basis(d).into_iter().map(|b| b.scaled(std::f64::consts::FRAC_1_SQRT_2)));
    out
}

/// Generalized Gell-Mann matrices, `tr(B_i B_j) = 2δ_ij`.
pub fn traceless_basis(d: usize) -> Vec<HermitianOperator> {
    let mut out = Vec::with_capacity(d * d - 1);
    for j in 0..d {
        for k in (j + 1)..d {
            let mut m = ComplexMatrix::zeros(d, d);
            m[(j, k)] = ONE;
            m[(k, j)] = ONE;
            out.push(HermitianOperator { matrix: m });
            let mut m = ComplexMatrix::zeros(d, d);
            m[(j, k)] = c(0.0, -1.0);
            m[(k, j)] = c(0.0, 1.0);
            out.push(HermitianOperator { matrix: m });
        }
    }
    for l in 1..d {
        let norm = (2.0 / (l * (l + 1)) as f64).sqrt();
        let mut diag = vec![0.0; d];
        for v in diag.iter_mut().take(l) {
            *v = norm;
        }
        diag[l] = -(l as f64) * norm;
        out.push(HermitianOperator::from_real_diagonal(&diag));
    }
    out
}

pub mod pauli {
    use super::*;

    pub fn i() -> HermitianOperator {
        HermitianOperator::identity(2)
    }

    pub fn x() -> HermitianOperator {
        HermitianOperator { matrix: ComplexMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]) }
    }

    pub fn y() -> HermitianOperator {
        HermitianOperator {
            matrix: ComplexMatrix::from_row_slice(2, 2, &[ZERO, c(0.0, -1.0), c(0.0, 1.0), ZERO]),
        }
    }

    pub fn z() -> HermitianOperator {
        HermitianOperator::from_real_diagonal(&[1.0, -1.0])
    }

    pub fn by_name(ch: char) -> Option<HermitianOperator> {
        match ch.to_ascii_uppercase() {
            'I' => Some(i()),
            'X' => Some(x()),
            'Y' => Some(y()),
            'Z' => Some(z()),
            _ => None,
        }
    }
}
