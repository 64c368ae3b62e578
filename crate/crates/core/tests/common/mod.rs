//! Test-side helpers and oracles. Nothing here calls into the library's
//! eigensolver wrappers, so the oracles stay independent of the code under test.
#![allow(dead_code)]

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thermal_channel::linalg::{ComplexMatrix, HermitianOperator};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(d: usize, seed: u64) -> ComplexMatrix {
    let mut r = rng(seed);
    DMatrix::from_fn(d, d, |_, _| {
        let re: f64 = StandardNormal.sample(&mut r);
        let im: f64 = StandardNormal.sample(&mut r);
        Complex64::new(re, im)
    })
}

pub fn random_hermitian(d: usize, seed: u64) -> HermitianOperator {
    let g = gaussian(d, seed);
    HermitianOperator::hermitian_part(&(&g + g.adjoint()))
}

/// Full-rank density matrix `G G† / tr(G G†)`.
pub fn random_state(d: usize, seed: u64) -> HermitianOperator {
    let g = gaussian(d, seed);
    let m = &g * g.adjoint();
    let t = m.trace().re;
    HermitianOperator::hermitian_part(&(m / Complex64::new(t, 0.0)))
}

/// Eigenvalues from nalgebra directly.
pub fn eigenvalues(h: &HermitianOperator) -> Vec<f64> {
    let mut v: Vec<f64> = h.matrix().clone().symmetric_eigen().eigenvalues.iter().copied().collect();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v
}

pub fn entropy_of(p: &[f64]) -> f64 {
    p.iter().filter(|&&x| x > 0.0).map(|&x| -x * x.ln()).sum()
}

pub fn von_neumann(rho: &HermitianOperator) -> f64 {
    entropy_of(&eigenvalues(rho))
}

/// `ln` of a positive-definite matrix via nalgebra's eigendecomposition.
pub fn log_pd(h: &HermitianOperator) -> ComplexMatrix {
    let e = h.matrix().clone().symmetric_eigen();
    let d = DMatrix::from_diagonal(&e.eigenvalues.map(|l| Complex64::new(l.max(1e-300).ln(), 0.0)));
    &e.eigenvectors * d * e.eigenvectors.adjoint()
}

/// `tr ρ (ln ρ − ln σ)` for full-rank σ.
pub fn relative_entropy(rho: &HermitianOperator, sigma: &HermitianOperator) -> f64 {
    let lr = log_pd(rho);
    let ls = log_pd(sigma);
    (rho.matrix() * (lr - ls)).trace().re
}

/// `ρ = (1 + r·σ)/2` for a Bloch vector.
pub fn qubit_state(r: [f64; 3]) -> HermitianOperator {
    let m = DMatrix::from_row_slice(
        2,
        2,
        &[
            Complex64::new(1.0 + r[2], 0.0),
            Complex64::new(r[0], -r[1]),
            Complex64::new(r[0], r[1]),
            Complex64::new(1.0 - r[2], 0.0),
        ],
    ) / Complex64::new(2.0, 0.0);
    HermitianOperator::hermitian_part(&m)
}

/// Roughly uniform Fibonacci-sphere directions.
pub fn sphere(points: usize) -> Vec<[f64; 3]> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..points)
        .map(|k| {
            let z = 1.0 - 2.0 * (k as f64 + 0.5) / points as f64;
            let r = (1.0 - z * z).sqrt();
            let t = golden * k as f64;
            [r * t.cos(), r * t.sin(), z]
        })
        .collect()
}

/// Bloch-ball grid of qubit states with `shells · directions` points; radii
/// stop short of the pure states.
pub fn bloch_grid(shells: usize, directions: usize, r_max: f64) -> Vec<HermitianOperator> {
    let mut out = vec![qubit_state([0.0; 3])];
    for s in 1..=shells {
        let r = r_max * s as f64 / shells as f64;
        for d in sphere(directions) {
            out.push(qubit_state([r * d[0], r * d[1], r * d[2]]));
        }
    }
    out
}

pub fn sqrt_psd(h: &HermitianOperator) -> HermitianOperator {
    let e = h.matrix().clone().symmetric_eigen();
    let d = DMatrix::from_diagonal(&e.eigenvalues.map(|l| Complex64::new(l.max(0.0).sqrt(), 0.0)));
    HermitianOperator::hermitian_part(&(&e.eigenvectors * d * e.eigenvectors.adjoint()))
}

/// `(1_B ⊗ √φ) J (1_B ⊗ √φ)`: the channel output on the purification of `φ`.
pub fn extended_output(choi: &HermitianOperator, phi: &HermitianOperator) -> HermitianOperator {
    let d_r = phi.dim();
    let s = HermitianOperator::identity(choi.dim() / d_r).kron(&sqrt_psd(phi));
    choi.sandwich(&s)
}

/// `S(B|R)` of the extended output.
pub fn conditional_entropy_at(choi: &HermitianOperator, phi: &HermitianOperator) -> f64 {
    let tau = extended_output(choi, phi);
    von_neumann(&tau) - von_neumann(phi)
}

/// Bisection root of a monotone function on `[lo, hi]`.
pub fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64) -> f64 {
    let flo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (f(mid) > 0.0) == (flo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Inverse temperature with `⟨H⟩_β = e` for a diagonal Hamiltonian with the
/// given levels (`e` strictly between the extreme levels).
pub fn scalar_gibbs_beta(levels: &[f64], e: f64) -> f64 {
    let mean = |b: f64| {
        let m = levels.iter().cloned().fold(f64::INFINITY, f64::min);
        let w: Vec<f64> = levels.iter().map(|l| (-b * (l - m)).exp()).collect();
        let z: f64 = w.iter().sum();
        levels.iter().zip(&w).map(|(l, w)| l * w).sum::<f64>() / z
    };
    bisect(|b| mean(b) - e, -200.0, 200.0)
}

pub fn gibbs_probs(levels: &[f64], beta: f64) -> Vec<f64> {
    let m = levels.iter().cloned().fold(f64::INFINITY, f64::min);
    let w: Vec<f64> = levels.iter().map(|l| (-beta * (l - m)).exp()).collect();
    let z: f64 = w.iter().sum();
    w.iter().map(|x| x / z).collect()
}

pub fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}
