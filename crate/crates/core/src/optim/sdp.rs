//! Small dense semidefinite programs over Hermitian block variables.
//!
//! Standard form:
//!
//! ```text
//! minimize   Σ_b tr[C_b X_b]
//! subject to Σ_b tr[A_ib X_b] = b_i,   X_b ⪰ 0
//! ```
//!
//! Complex blocks are embedded as real symmetric matrices of twice the size
//! (`H = R + iI ↦ [[R, −I], [I, R]]`); the embedded problem is solved with an
//! infeasible primal-dual path-following method using the HKM direction.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::linalg::{c, ComplexMatrix, HermitianOperator};

#[derive(Debug, Clone)]
pub struct SdpConstraint {
    /// One operator per cone block; `None` means zero on that block.
    pub terms: Vec<Option<HermitianOperator>>,
    pub rhs: f64,
}

#[derive(Debug, Clone)]
pub struct SdpProblem {
    pub blocks: Vec<usize>,
    pub objective: Vec<Option<HermitianOperator>>,
    pub constraints: Vec<SdpConstraint>,
}

#[derive(Debug, Clone)]
pub struct SdpSolution {
    pub value: f64,
    pub dual_value: f64,
    pub primal: Vec<HermitianOperator>,
    pub dual: Vec<f64>,
    pub gap: f64,
    /// `Σ_b |tr[X_b Z_b]|` at termination.
    pub complementarity: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct SdpOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Centering parameter of the path-following step.
    pub sigma: f64,
    pub step_fraction: f64,
}

impl Default for SdpOptions {
    fn default() -> Self {
        Self { tol: 1e-9, max_iter: 200, sigma: 0.15, step_fraction: 0.95 }
    }
}

type Block = DMatrix<f64>;

fn embed(h: &ComplexMatrix) -> Block {
    let n = h.nrows();
    let mut m = Block::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let z = h[(i, j)];
            m[(i, j)] = z.re;
            m[(i + n, j + n)] = z.re;
            m[(i + n, j)] = z.im;
            m[(i, j + n)] = -z.im;
        }
    }
    m
}

fn unembed(m: &Block) -> HermitianOperator {
    let n = m.nrows() / 2;
    let x = ComplexMatrix::from_fn(n, n, |i, j| {
        let re = 0.5 * (m[(i, j)] + m[(i + n, j + n)]);
        let im = 0.5 * (m[(i + n, j)] - m[(i, j + n)]);
        c(re, im)
    });
    HermitianOperator::hermitian_part(&x)
}

fn dot(a: &[Block], b: &[Block]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.dot(y)).sum()
}

fn dot_sparse(a: &[Option<Block>], b: &[Block]) -> f64 {
    a.iter().zip(b).filter_map(|(x, y)| x.as_ref().map(|x| x.dot(y))).sum()
}

fn sym(m: &Block) -> Block {
    (m + m.transpose()) * 0.5
}

/// Largest `α` with `X + α dX ⪰ 0` (∞ if the direction never leaves the cone).
fn max_step(x: &[Block], dx: &[Block]) -> Result<f64> {
    let mut best = f64::INFINITY;
    for (xb, db) in x.iter().zip(dx) {
        let l = xb.clone().cholesky().ok_or_else(|| Error::NonFinite("iterate lost definiteness".into()))?;
        let linv = l.l().try_inverse().ok_or_else(|| Error::NonFinite("singular Cholesky factor".into()))?;
        let m = sym(&(&linv * db * linv.transpose()));
        let lmin = SymmetricEigen::new(m).eigenvalues.min();
        if lmin < 0.0 {
            best = best.min(-1.0 / lmin);
        }
    }
    Ok(best)
}

pub fn sdp_solve(p: &SdpProblem, opts: &SdpOptions) -> Result<SdpSolution> {
    let nb = p.blocks.len();
    if p.objective.len() != nb || p.constraints.iter().any(|c| c.terms.len() != nb) {
        return Err(Error::DimensionMismatch("every SDP operator needs one entry per block".into()));
    }
    let check = |h: &Option<HermitianOperator>, b: usize| -> Result<()> {
        match h {
            Some(h) if h.dim() != p.blocks[b] => Err(Error::DimensionMismatch(format!(
                "block {b} has dimension {}, operator has {}",
                p.blocks[b],
                h.dim()
            ))),
            _ => Ok(()),
        }
    };
    for b in 0..nb {
        check(&p.objective[b], b)?;
        for con in &p.constraints {
            check(&con.terms[b], b)?;
        }
    }
    let m = p.constraints.len();
    // tr(H1 H2) = ½ tr(emb H1 · emb H2)
    let emb_half = |h: &Option<HermitianOperator>| h.as_ref().map(|h| embed(h.matrix()) * 0.5);
    let cmat: Vec<Block> = (0..nb)
        .map(|b| emb_half(&p.objective[b]).unwrap_or_else(|| Block::zeros(2 * p.blocks[b], 2 * p.blocks[b])))
        .collect();
    let amat: Vec<Vec<Option<Block>>> = p.constraints.iter().map(|con| con.terms.iter().map(emb_half).collect()).collect();
    let bvec = DVector::from_iterator(m, p.constraints.iter().map(|c| c.rhs));
    let ntot: usize = p.blocks.iter().map(|d| 2 * d).sum();

    let a_norm = amat
        .iter()
        .map(|a| a.iter().flatten().map(|x| x.norm_squared()).sum::<f64>().sqrt())
        .fold(0.0, f64::max);
    let c_norm = cmat.iter().map(|x| x.norm_squared()).sum::<f64>().sqrt();
    let b_norm = bvec.norm();
    let x0 = 10f64.max((ntot as f64).sqrt()).max(
        amat.iter()
            .zip(bvec.iter())
            .map(|(a, b)| (1.0 + b.abs()) / (1.0 + a.iter().flatten().map(|x| x.norm()).sum::<f64>()))
            .fold(0.0, f64::max),
    );
    let z0 = 10f64.max((ntot as f64).sqrt()).max(c_norm).max(a_norm);
    let mut x: Vec<Block> = p.blocks.iter().map(|d| Block::identity(2 * d, 2 * d) * x0).collect();
    let mut z: Vec<Block> = p.blocks.iter().map(|d| Block::identity(2 * d, 2 * d) * z0).collect();
    let mut y = DVector::<f64>::zeros(m);

    let a_op = |xs: &[Block]| DVector::from_iterator(m, amat.iter().map(|a| dot_sparse(a, xs)));
    let at_op = |yv: &DVector<f64>| -> Vec<Block> {
        let mut out: Vec<Block> = p.blocks.iter().map(|d| Block::zeros(2 * d, 2 * d)).collect();
        for (i, a) in amat.iter().enumerate() {
            if yv[i] == 0.0 {
                continue;
            }
            for (o, ab) in out.iter_mut().zip(a) {
                if let Some(ab) = ab {
                    *o += ab * yv[i];
                }
            }
        }
        out
    };

    let mut last_gap = f64::INFINITY;
    for it in 0..opts.max_iter {
        let rp = &bvec - a_op(&x);
        let aty = at_op(&y);
        let rd: Vec<Block> = (0..nb).map(|b| &cmat[b] - &z[b] - &aty[b]).collect();
        let pobj = dot(&cmat, &x);
        let dobj = bvec.dot(&y);
        let xz = dot(&x, &z);
        let mu = xz / ntot as f64;
        let gap = (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs());
        let pinf = rp.norm() / (1.0 + b_norm);
        let dinf = rd.iter().map(|r| r.norm_squared()).sum::<f64>().sqrt() / (1.0 + c_norm);
        last_gap = gap;
        if gap <= opts.tol && pinf <= opts.tol && dinf <= opts.tol {
            let primal = x.iter().map(unembed).collect();
            return Ok(SdpSolution {
                value: pobj,
                dual_value: dobj,
                primal,
                dual: y.iter().copied().collect(),
                gap: (pobj - dobj).abs(),
                complementarity: xz.abs(),
                iterations: it,
            });
        }
        let zinv: Vec<Block> = z
            .iter()
            .map(|zb| {
                zb.clone()
                    .cholesky()
                    .map(|ch| ch.inverse())
                    .ok_or_else(|| Error::NonFinite("dual slack lost definiteness".into()))
            })
            .collect::<Result<_>>()?;
        // Schur complement M_ij = <A_i, X A_j Z^{-1}>
        let xaz: Vec<Vec<Block>> = amat
            .iter()
            .map(|a| {
                (0..nb)
                    .map(|b| match &a[b] {
                        Some(ab) => &x[b] * ab * &zinv[b],
                        None => Block::zeros(x[b].nrows(), x[b].ncols()),
                    })
                    .collect()
            })
            .collect();
        let mut schur = DMatrix::<f64>::zeros(m, m);
        for i in 0..m {
            for j in i..m {
                let v = dot_sparse(&amat[i], &xaz[j]);
                schur[(i, j)] = v;
                schur[(j, i)] = v;
            }
        }
        let sigma = opts.sigma;
        // R = σμ Z^{-1} − X − X Rd Z^{-1}
        let r: Vec<Block> = (0..nb)
            .map(|b| &zinv[b] * (sigma * mu) - &x[b] - &x[b] * &rd[b] * &zinv[b])
            .collect();
        let rhs = &rp - a_op(&r);
        let dy = match schur.clone().cholesky() {
            Some(ch) => ch.solve(&rhs),
            None => schur.lu().solve(&rhs).ok_or_else(|| Error::NonFinite("singular Schur complement".into()))?,
        };
        let atdy = at_op(&dy);
        let dz: Vec<Block> = (0..nb).map(|b| &rd[b] - &atdy[b]).collect();
        let dx: Vec<Block> = (0..nb).map(|b| sym(&(&r[b] + &x[b] * &atdy[b] * &zinv[b]))).collect();
        let ap = (opts.step_fraction * max_step(&x, &dx)?).min(1.0);
        let ad = (opts.step_fraction * max_step(&z, &dz)?).min(1.0);
        for b in 0..nb {
            x[b] += &dx[b] * ap;
            z[b] += &dz[b] * ad;
            x[b] = sym(&x[b]);
            z[b] = sym(&z[b]);
        }
        y += dy * ad;
    }
    Err(Error::NotConverged { iterations: opts.max_iter, gap: last_gap })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{hermitian_basis, pauli};

    #[test]
    fn trace_above_identity() {
        // min tr(X) with X = I + S, S ⪰ 0: variables (X, S) and X − S = I
        let basis = hermitian_basis(2);
        let constraints = basis
            .iter()
            .map(|e| SdpConstraint { terms: vec![Some(e.clone()), Some(e.scaled(-1.0))], rhs: e.trace() })
            .collect();
        let p = SdpProblem {
            blocks: vec![2, 2],
            objective: vec![Some(HermitianOperator::identity(2)), None],
            constraints,
        };
        let s = sdp_solve(&p, &SdpOptions::default()).unwrap();
        assert!((s.value - 2.0).abs() < 1e-7, "value {}", s.value);
    }

    #[test]
    fn top_eigenvalue_of_z() {
        let p = SdpProblem {
            blocks: vec![2],
            objective: vec![Some(pauli::z().scaled(-1.0))],
            constraints: vec![SdpConstraint { terms: vec![Some(HermitianOperator::identity(2))], rhs: 1.0 }],
        };
        let s = sdp_solve(&p, &SdpOptions::default()).unwrap();
        assert!((-s.value - 1.0).abs() < 1e-7);
        assert!(s.gap <= 1e-7);
    }

    #[test]
    fn complex_objective_is_respected() {
        // max tr(Y X) over density matrices = 1, attained at |+i><+i|
        let p = SdpProblem {
            blocks: vec![2],
            objective: vec![Some(pauli::y().scaled(-1.0))],
            constraints: vec![SdpConstraint { terms: vec![Some(HermitianOperator::identity(2))], rhs: 1.0 }],
        };
        let s = sdp_solve(&p, &SdpOptions::default()).unwrap();
        assert!((s.value + 1.0).abs() < 1e-7);
        let x = &s.primal[0];
        assert!((x.matrix()[(1, 0)].im - 0.5).abs() < 1e-4);
    }

    #[test]
    fn mismatched_blocks_rejected() {
        let p = SdpProblem {
            blocks: vec![3],
            objective: vec![Some(pauli::z())],
            constraints: vec![],
        };
        assert!(matches!(sdp_solve(&p, &SdpOptions::default()), Err(Error::DimensionMismatch(_))));
    }
}
