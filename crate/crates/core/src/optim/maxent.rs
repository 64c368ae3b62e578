//! Maximum-entropy problems with linear expectation constraints, solved in the
//! dual.
//!
//! For constraints `tr[A_k τ] = b_k` the entropy maximizer has the exponential
//! form `τ(λ) = exp(−1 − Σ_k λ_k A_k)` and the multipliers minimize the convex
//! dual `g(λ) = tr τ(λ) + Σ_k λ_k b_k`. We run a damped Newton method on `g`
//! with the exact Hessian, obtained from the Fréchet derivative of `exp` in the
//! eigenbasis of the exponent.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::linalg::{eig_hermitian, ComplexMatrix, HermitianOperator, Spectrum};

#[derive(Debug, Clone)]
pub struct MaxEntProblem {
    pub operators: Vec<HermitianOperator>,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
pub struct MaxEntOptions {
    /// Stop once `max_k |tr[A_k τ] − b_k| ≤ tol`.
    pub tol: f64,
    /// Dual norm above which the solve reports divergence.
    pub lambda_max: f64,
    pub max_iter: usize,
    pub hessian_reg: f64,
}

impl Default for MaxEntOptions {
    fn default() -> Self {
        Self { tol: 1e-10, lambda_max: 1e4, max_iter: 400, hessian_reg: 1e-10 }
    }
}

impl MaxEntOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self { tol, ..Self::default() }
    }
}

#[derive(Debug, Clone)]
pub struct MaxEntSolution {
    /// One multiplier per input constraint (minimum-norm choice when the
    /// operators are linearly dependent).
    pub lambdas: Vec<f64>,
    pub tau: HermitianOperator,
    pub dual_value: f64,
    /// `max_k |tr[A_k τ] − b_k|`
    pub kkt_residual: f64,
    pub iterations: usize,
    /// Dual objective after every accepted Newton step.
    pub dual_history: Vec<f64>,
}

impl MaxEntSolution {
    /// `−tr[τ log τ]`, evaluated from the exponential form.
    pub fn entropy(&self, problem: &MaxEntProblem) -> f64 {
        // log τ = −1 − Σ λ_k A_k
        let tr = self.tau.trace();
        let mut s = tr;
        for (l, a) in self.lambdas.iter().zip(&problem.operators) {
            s += l * a.inner(&self.tau);
        }
        s
    }
}

/// Reduced, orthonormalized form of a constraint system.
struct Reduced {
    ops: Vec<HermitianOperator>,
    vals: Vec<f64>,
    /// Maps reduced multipliers back: λ = back · ν.
    back: DMatrix<f64>,
    /// Gram eigenvalue of each reduced direction.
    gram: Vec<f64>,
}

fn reduce(p: &MaxEntProblem) -> Result<Reduced> {
    let k = p.operators.len();
    let n = p.operators[0].dim();
    let mut gram = DMatrix::<f64>::zeros(k, k);
    for i in 0..k {
        for j in i..k {
            let g = p.operators[i].inner(&p.operators[j]);
            gram[(i, j)] = g;
            gram[(j, i)] = g;
        }
    }
    let eig = SymmetricEigen::new(gram);
    let gmax = eig.eigenvalues.iter().fold(0.0f64, |m, v| m.max(*v));
    let bscale = 1.0 + p.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut keep = Vec::new();
    for m in 0..k {
        let g = eig.eigenvalues[m];
        let v = eig.eigenvectors.column(m);
        if g > 1e-12 * gmax {
            keep.push(m);
        } else {
            let combo: f64 = v.iter().zip(&p.values).map(|(a, b)| a * b).sum();
            if combo.abs() > 1e-7 * bscale {
                return Err(Error::Infeasible {
                    message: format!(
                        "linearly dependent constraints carry inconsistent values (mismatch {combo:e})"
                    ),
                    direction: v.iter().copied().collect(),
                });
            }
        }
    }
    // deterministic order of the reduced directions
    keep.sort_by(|a, b| eig.eigenvalues[*b].partial_cmp(&eig.eigenvalues[*a]).unwrap());
    let mut back = DMatrix::<f64>::zeros(k, keep.len());
    let mut ops = Vec::with_capacity(keep.len());
    let mut vals = Vec::with_capacity(keep.len());
    let gram: Vec<f64> = keep.iter().map(|&m| eig.eigenvalues[m]).collect();
    for (col, &m) in keep.iter().enumerate() {
        let s = 1.0 / eig.eigenvalues[m].sqrt();
        let v = eig.eigenvectors.column(m);
        // fix the sign of each direction for reproducibility
        let pivot = v.iter().copied().find(|x| x.abs() > 1e-12).unwrap_or(1.0);
        let sign = if pivot < 0.0 { -s } else { s };
        let mut acc = ComplexMatrix::zeros(n, n);
        let mut val = 0.0;
        for j in 0..k {
            let w = v[j] * sign;
            back[(j, col)] = w;
            if w != 0.0 {
                acc += p.operators[j].matrix().map(|z| z * w);
                val += w * p.values[j];
            }
        }
        ops.push(HermitianOperator::hermitian_part(&acc));
        vals.push(val);
    }
    Ok(Reduced { ops, vals, back, gram })
}

struct Point {
    nu: Vec<f64>,
    spec: Spectrum,
    tau: HermitianOperator,
    dual: f64,
}

fn evaluate(red: &Reduced, nu: &[f64], n: usize) -> Result<Option<Point>> {
    let mut expo = ComplexMatrix::from_diagonal_element(n, n, num_complex::Complex64::new(-1.0, 0.0));
    for (l, b) in nu.iter().zip(&red.ops) {
        if *l != 0.0 {
            expo -= b.matrix().map(|z| z * *l);
        }
    }
    let spec = eig_hermitian(&HermitianOperator::hermitian_part(&expo))?;
    if spec.max() > 700.0 {
        return Ok(None);
    }
    let tau = spec.map(f64::exp);
    let dual = tau.trace() + nu.iter().zip(&red.vals).map(|(a, b)| a * b).sum::<f64>();
    if !dual.is_finite() {
        return Ok(None);
    }
    Ok(Some(Point { nu: nu.to_vec(), spec, tau, dual }))
}

fn divided_exp(a: f64, b: f64) -> f64 {
    let d = a - b;
    let m = 0.5 * (a + b);
    if d.abs() < 1e-8 {
        m.exp() * (1.0 + d * d / 24.0)
    } else {
        m.exp() * ((0.5 * d).sinh() / (0.5 * d))
    }
}

fn hessian(red: &Reduced, pt: &Point) -> DMatrix<f64> {
    let n = pt.spec.dim();
    let m = red.ops.len();
    let v = &pt.spec.vectors;
    let vh = v.adjoint();
    let rotated: Vec<ComplexMatrix> = red.ops.iter().map(|b| &vh * b.matrix() * v).collect();
    let mut f = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            f[(i, j)] = divided_exp(pt.spec.values[i], pt.spec.values[j]);
        }
    }
    let mut h = DMatrix::<f64>::zeros(m, m);
    for a in 0..m {
        for b in a..m {
            let (x, y) = (&rotated[a], &rotated[b]);
            let mut acc = 0.0;
            for i in 0..n {
                for j in 0..n {
                    let p = x[(i, j)];
                    let q = y[(i, j)];
                    acc += (p.re * q.re + p.im * q.im) * f[(i, j)];
                }
            }
            h[(a, b)] = acc;
            h[(b, a)] = acc;
        }
    }
    h
}

fn residual(p: &MaxEntProblem, tau: &HermitianOperator) -> f64 {
    p.operators
        .iter()
        .zip(&p.values)
        .map(|(a, b)| (a.inner(tau) - b).abs())
        .fold(0.0, f64::max)
}

/// Solves `max S(τ)` subject to `tr[A_k τ] = b_k` through the dual.
pub fn maxent_solve(p: &MaxEntProblem, opts: &MaxEntOptions) -> Result<MaxEntSolution> {
    maxent_solve_from(p, opts, None)
}

/// As [`maxent_solve`], starting the Newton iteration from the multipliers
/// `start` (one per constraint) when given.
pub fn maxent_solve_from(p: &MaxEntProblem, opts: &MaxEntOptions, start: Option<&[f64]>) -> Result<MaxEntSolution> {
    if p.operators.is_empty() || p.operators.len() != p.values.len() {
        return Err(Error::InvalidParameter("maxent problem needs one value per constraint operator".into()));
    }
    let n = p.operators[0].dim();
    if p.operators.iter().any(|a| a.dim() != n) {
        return Err(Error::DimensionMismatch("constraint operators must share a dimension".into()));
    }
    if p.values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("constraint value".into()));
    }
    let red = reduce(p)?;
    let m = red.ops.len();
    let origin = evaluate(&red, &vec![0.0; m], n)?.ok_or_else(|| Error::NonFinite("dual value".into()))?;
    let mut pt = match start {
        Some(l) if l.len() == p.operators.len() && l.iter().all(|v| v.is_finite()) => {
            // project onto the reduced coordinates: ν_c = g_c · (back_c · λ)
            let nu: Vec<f64> = (0..m)
                .map(|col| red.gram[col] * red.back.column(col).iter().zip(l).map(|(a, b)| a * b).sum::<f64>())
                .collect();
            match evaluate(&red, &nu, n)? {
                Some(w) if w.dual < origin.dual => w,
                _ => origin,
            }
        }
        _ => origin,
    };
    let mut history = vec![pt.dual];
    let lift = |nu: &[f64]| -> Vec<f64> { (&red.back * DVector::from_column_slice(nu)).iter().copied().collect() };
    let finish = |pt: &Point, history: Vec<f64>, it: usize| -> MaxEntSolution {
        let lambdas = lift(&pt.nu);
        MaxEntSolution {
            kkt_residual: residual(p, &pt.tau),
            lambdas,
            tau: pt.tau.clone(),
            dual_value: pt.dual,
            iterations: it,
            dual_history: history,
        }
    };
    for it in 0..opts.max_iter {
        let res = residual(p, &pt.tau);
        if res <= opts.tol {
            return Ok(finish(&pt, history, it));
        }
        let grad = DVector::from_iterator(m, red.ops.iter().zip(&red.vals).map(|(b, c)| c - b.inner(&pt.tau)));
        let mut h = hessian(&red, &pt);
        for i in 0..m {
            h[(i, i)] += opts.hessian_reg;
        }
        let step = match h.clone().cholesky() {
            Some(ch) => -ch.solve(&grad),
            None => -h.lu().solve(&grad).ok_or_else(|| Error::NonFinite("Newton system".into()))?,
        };
        let slope = grad.dot(&step);
        let try_at = |t: f64| -> Result<Option<Point>> {
            let nu: Vec<f64> = pt.nu.iter().zip(step.iter()).map(|(a, d)| a + t * d).collect();
            evaluate(&red, &nu, n)
        };
        let armijo = |cand: &Point, t: f64| cand.dual <= pt.dual + 1e-4 * t * slope;
        let mut t = 1.0;
        let mut accepted: Option<Point> = None;
        while t > 1e-14 {
            if let Some(cand) = try_at(t)? {
                // Near the optimum the decrease drops below round-off in the
                // dual value; accept a full step that shrinks the gradient.
                let flat = t == 1.0
                    && cand.dual <= pt.dual + 1e-13 * pt.dual.abs().max(1.0)
                    && grad_norm(&red, &cand) < 0.5 * grad.norm();
                if (armijo(&cand, t) && cand.dual < pt.dual) || flat {
                    accepted = Some(cand);
                    break;
                }
            }
            t *= 0.5;
        }
        // far from the optimum along exponential tails a unit step is too short
        if t == 1.0 {
            let mut tt = 2.0;
            while tt <= 64.0 {
                match try_at(tt)? {
                    Some(cand) if armijo(&cand, tt) && cand.dual < accepted.as_ref().map_or(pt.dual, |a| a.dual) => {
                        accepted = Some(cand);
                        tt *= 2.0;
                    }
                    _ => break,
                }
            }
        }
        match accepted {
            Some(next) => {
                debug_assert!(next.dual <= pt.dual + 1e-13 * pt.dual.abs().max(1.0));
                pt = next;
                history.push(pt.dual);
            }
            None => {
                // no representable decrease left: round-off floor
                let sol = finish(&pt, history, it);
                if sol.kkt_residual <= 1e3 * opts.tol {
                    return Ok(sol);
                }
                let norm = norm(&sol.lambdas);
                if norm > 50.0 {
                    return Err(Error::DualDivergence { norm, best: Box::new(sol) });
                }
                return Err(Error::NotConverged { iterations: it, gap: sol.kkt_residual });
            }
        }
        let lam = lift(&pt.nu);
        let ln = norm(&lam);
        if ln > opts.lambda_max {
            return Err(Error::DualDivergence { norm: ln, best: Box::new(finish(&pt, history, it + 1)) });
        }
    }
    let sol = finish(&pt, history, opts.max_iter);
    if sol.kkt_residual <= opts.tol {
        return Ok(sol);
    }
    let norm = norm(&sol.lambdas);
    if norm > 50.0 {
        Err(Error::DualDivergence { norm, best: Box::new(sol) })
    } else {
        Err(Error::NotConverged { iterations: opts.max_iter, gap: sol.kkt_residual })
    }
}

fn grad_norm(red: &Reduced, pt: &Point) -> f64 {
    red.ops.iter().zip(&red.vals).map(|(b, c)| (c - b.inner(&pt.tau)).powi(2)).sum::<f64>().sqrt()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}
