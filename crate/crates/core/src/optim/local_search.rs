//! Derivative-free local minimization (Nelder–Mead with seeded restarts).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Where restarts are centred.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RestartCenter {
    /// Jitter around the best point found so far.
    Best,
    /// Jitter around the initial point (independent multi-start).
    Initial,
}

#[derive(Debug, Clone, Copy)]
pub struct LocalSearch {
    pub restarts: usize,
    pub seed: u64,
    /// Restart jitter scale; defaults to `0.1·‖x0‖ + 0.1`.
    pub jitter: Option<f64>,
    pub center: RestartCenter,
    /// Initial simplex edge length.
    pub step: f64,
    pub ftol: f64,
    pub xtol: f64,
    /// Largest simplex for which a flat spread (`ftol`) ends a run.
    pub flat_size: f64,
    /// Evaluation budget per local run.
    pub max_evals: usize,
}

impl Default for LocalSearch {
    fn default() -> Self {
        Self {
            restarts: 0,
            seed: 0,
            jitter: None,
            center: RestartCenter::Best,
            step: 0.25,
            ftol: 1e-12,
            xtol: 1e-9,
            flat_size: 1e-3,
            max_evals: 4000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SearchResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
}

impl LocalSearch {
    pub fn new(restarts: usize, seed: u64) -> Self {
        Self { restarts, seed, ..Self::default() }
    }

    pub fn minimize<F: FnMut(&[f64]) -> f64>(&self, mut f: F, x0: &[f64]) -> SearchResult {
        let mut evals = 0usize;
        let mut best_x = x0.to_vec();
        let mut best_f = f(x0);
        evals += 1;
        let norm0 = x0.iter().map(|v| v * v).sum::<f64>().sqrt();
        let jitter = self.jitter.unwrap_or(0.1 * norm0 + 0.1);
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        for run in 0..=self.restarts {
            let start: Vec<f64> = if run == 0 {
                x0.to_vec()
            } else {
                let centre = match self.center {
                    RestartCenter::Best => &best_x,
                    RestartCenter::Initial => x0,
                };
                centre
                    .iter()
                    .map(|c| {
                        let g: f64 = StandardNormal.sample(&mut rng);
                        c + jitter * g
                    })
                    .collect()
            };
            let (x, fx, used) = nelder_mead(&mut f, &start, self);
            evals += used;
            if fx < best_f {
                best_f = fx;
                best_x = x;
            }
        }
        SearchResult { x: best_x, value: best_f, evaluations: evals }
    }
}

/// `local_search_minimize(f, x0, restarts, seed)` with default tolerances.
pub fn local_search_minimize<F: FnMut(&[f64]) -> f64>(f: F, x0: &[f64], restarts: usize, seed: u64) -> (Vec<f64>, f64) {
    let r = LocalSearch::new(restarts, seed).minimize(f, x0);
    (r.x, r.value)
}

fn sanitize(v: f64) -> f64 {
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}

fn nelder_mead<F: FnMut(&[f64]) -> f64>(f: &mut F, x0: &[f64], o: &LocalSearch) -> (Vec<f64>, f64, usize) {
    let n = x0.len();
    let mut evals = 0usize;
    let mut eval = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        sanitize(f(x))
    };
    if n == 0 {
        let v = eval(x0, &mut evals);
        return (vec![], v, evals);
    }
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    let v0 = eval(x0, &mut evals);
    simplex.push((x0.to_vec(), v0));
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += o.step;
        let v = eval(&x, &mut evals);
        simplex.push((x, v));
    }
    let (alpha, gamma, rho, shrink) = (1.0, 2.0, 0.5, 0.5);
    while evals < o.max_evals {
        simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal));
        let fbest = simplex[0].1;
        let fworst = simplex[n].1;
        let spread = (fworst - fbest).abs();
        let size = simplex[1..]
            .iter()
            .map(|(x, _)| x.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        let flat = spread <= o.ftol * (fbest.abs() + 1.0) || !fworst.is_finite() && !fbest.is_finite();
        if size <= o.xtol || flat && size <= o.flat_size {
            break;
        }
        let mut centroid = vec![0.0; n];
        for (x, _) in &simplex[..n] {
            for (c, v) in centroid.iter_mut().zip(x) {
                *c += v / n as f64;
            }
        }
        let along = |t: f64| -> Vec<f64> {
            centroid.iter().zip(&simplex[n].0).map(|(c, w)| c + t * (c - w)).collect()
        };
        let xr = along(alpha);
        let fr = eval(&xr, &mut evals);
        if fr < simplex[0].1 {
            let xe = along(gamma);
            let fe = eval(&xe, &mut evals);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
        } else {
            let (xc, fc) = if fr < simplex[n].1 {
                let xc = along(rho);
                let fc = eval(&xc, &mut evals);
                (xc, fc)
            } else {
                let xc = along(-rho);
                let fc = eval(&xc, &mut evals);
                (xc, fc)
            };
            if fc < simplex[n].1.min(fr) {
                simplex[n] = (xc, fc);
            } else {
                let best = simplex[0].0.clone();
                for s in simplex.iter_mut().skip(1) {
                    let x: Vec<f64> = best.iter().zip(&s.0).map(|(b, v)| b + shrink * (v - b)).collect();
                    let v = eval(&x, &mut evals);
                    *s = (x, v);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal));
    let (x, v) = simplex.swap_remove(0);
    (x, v, evals)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_bowl() {
        let (x, f) = local_search_minimize(|x| x.iter().map(|v| v * v).sum(), &[1.0, 1.0], 0, 1);
        assert!(x.iter().all(|v| v.abs() < 1e-6), "{x:?}");
        assert!(f < 1e-12);
    }

    #[test]
    fn rosenbrock_with_restarts() {
        let rosen = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let (x, f) = local_search_minimize(rosen, &[-1.2, 1.0], 5, 11);
        assert!(f <= 1e-6, "f = {f}, x = {x:?}");
    }

    #[test]
    fn constant_function_returns_start() {
        let (x, f) = local_search_minimize(|_| 3.0, &[0.4, -0.2, 1.0], 3, 2);
        assert_eq!(x, vec![0.4, -0.2, 1.0]);
        assert_eq!(f, 3.0);
    }

    #[test]
    fn deterministic_given_seed() {
        let f = |x: &[f64]| (x[0] - 0.3).powi(2) + (x[1] + 0.1).powi(4) + (3.0 * x[0]).sin();
        let a = LocalSearch::new(4, 99).minimize(f, &[0.0, 0.0]);
        let b = LocalSearch::new(4, 99).minimize(f, &[0.0, 0.0]);
        assert_eq!(a.x, b.x);
        assert_eq!(a.value, b.value);
    }
}
