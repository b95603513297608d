//! Maximisation of state functionals over the density-operator manifold.
//!
//! States are parametrised as `ρ = A A† / Tr[A A†]` with `A` a general complex
//! matrix, so every iterate is feasible. The local search is gradient ascent
//! with central-difference gradients, a BFGS-preconditioned direction and a
//! backtracking line search. Restarts run in parallel on independent RNG
//! streams and are merged by maximum, ties going to the lower restart index.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::Result;
use crate::qmath::{ComplexMatrix, DensityOperator};
use crate::sampling::{ginibre, haar_unitary, seeded_rng};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerConfig {
    /// Random starts in addition to the maximally mixed start.
    pub restarts: usize,
    pub max_iter: usize,
    pub grad_tol: f64,
    pub fd_step: f64,
    pub seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            restarts: 16,
            max_iter: 500,
            grad_tol: 1e-7,
            fd_step: 1e-5,
            seed: 0,
        }
    }
}

/// Best point found by [`maximize_over_states`].
#[derive(Debug, Clone)]
pub struct Maximum {
    pub value: f64,
    pub state: DensityOperator,
    /// False when the winning restart hit the iteration cap; `value` is then best-so-far.
    pub converged: bool,
    pub iterations: usize,
    pub restart: usize,
}

/// Maps `2d²` real parameters to `A A† / Tr[A A†]`.
pub fn state_from_params(x: &[f64], dim: usize) -> ComplexMatrix {
    let a = params_to_matrix(x, dim);
    let m = &a * &a.adjoint();
    let tr = m.trace().re;
    m.scale(1.0 / tr)
}

fn params_to_matrix(x: &[f64], dim: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(dim, dim, |i, j| {
        let k = 2 * (i * dim + j);
        Complex64::new(x[k], x[k + 1])
    })
}

fn matrix_to_params(a: &ComplexMatrix) -> Vec<f64> {
    a.as_slice().iter().flat_map(|z| [z.re, z.im]).collect()
}

fn normalize(x: &mut [f64]) {
    let n = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if n > 0.0 {
        x.iter_mut().for_each(|v| *v /= n);
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

struct Local {
    value: f64,
    x: Vec<f64>,
    converged: bool,
    iterations: usize,
}

/// Maximises `objective` over `dim`-dimensional density matrices.
///
/// The objective receives the (unvalidated, PSD by construction) density matrix.
pub fn maximize_over_states<F>(dim: usize, objective: F, cfg: &OptimizerConfig) -> Result<Maximum>
where
    F: Fn(&ComplexMatrix) -> Result<f64> + Sync,
{
    let f = |x: &[f64]| objective(&state_from_params(x, dim));
    let runs: Vec<Result<Local>> = (0..=cfg.restarts)
        .into_par_iter()
        .map(|r| {
            let start = if r == 0 {
                ComplexMatrix::identity(dim)
            } else {
                let mut rng = seeded_rng(cfg.seed, r as u64);
                ginibre(&mut rng, dim, dim)
            };
            ascend(&f, matrix_to_params(&start), cfg)
        })
        .collect();

    let mut best: Option<(usize, Local)> = None;
    for (r, run) in runs.into_iter().enumerate() {
        let run = run?;
        if best.as_ref().is_none_or(|(_, b)| run.value > b.value) {
            best = Some((r, run));
        }
    }
    let (restart, local) = best.expect("at least one start");
    Ok(Maximum {
        value: local.value,
        state: DensityOperator::from_matrix_unchecked(state_from_params(&local.x, dim)),
        converged: local.converged,
        iterations: local.iterations,
        restart,
    })
}

fn gradient(f: &impl Fn(&[f64]) -> Result<f64>, x: &[f64], h: f64) -> Result<Vec<f64>> {
    let mut xp = x.to_vec();
    let mut g = vec![0.0; x.len()];
    for k in 0..x.len() {
        let orig = xp[k];
        xp[k] = orig + h;
        let up = f(&xp)?;
        xp[k] = orig - h;
        let down = f(&xp)?;
        xp[k] = orig;
        g[k] = (up - down) / (2.0 * h);
    }
    Ok(g)
}

fn ascend(f: &impl Fn(&[f64]) -> Result<f64>, mut x: Vec<f64>, cfg: &OptimizerConfig) -> Result<Local> {
    let n = x.len();
    normalize(&mut x);
    let mut fx = f(&x)?;
    let mut g = gradient(f, &x, cfg.fd_step)?;
    // inverse-Hessian estimate for the minimisation of -f
    let identity = |n: usize| -> Vec<f64> {
        let mut m = vec![0.0; n * n];
        (0..n).for_each(|i| m[i * n + i] = 1.0);
        m
    };
    let mut hinv = identity(n);
    let mut fresh = true;

    for iter in 0..cfg.max_iter {
        let gnorm = dot(&g, &g).sqrt();
        if gnorm < cfg.grad_tol {
            return Ok(Local { value: fx, x, converged: true, iterations: iter });
        }
        // ascent direction d = H g
        let mut d: Vec<f64> = (0..n).map(|i| dot(&hinv[i * n..(i + 1) * n], &g)).collect();
        let mut slope = dot(&g, &d);
        if !(slope > 0.0) {
            hinv = identity(n);
            d = g.clone();
            slope = gnorm * gnorm;
            fresh = true;
        }
        let mut t = if fresh { (0.1 / gnorm).min(1.0) } else { 1.0 };
        let mut accepted = None;
        for _ in 0..60 {
            let mut xn: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + t * b).collect();
            normalize(&mut xn);
            let fnew = f(&xn)?;
            if fnew >= fx + 1e-4 * t * slope {
                accepted = Some((xn, fnew));
                break;
            }
            t *= 0.5;
        }
        let Some((xn, fnew)) = accepted else {
            if fresh {
                // no progress along the raw gradient: numerically stationary
                let converged = gnorm < cfg.grad_tol * 1e3;
                return Ok(Local { value: fx, x, converged, iterations: iter });
            }
            hinv = identity(n);
            fresh = true;
            continue;
        };
        let gn = gradient(f, &xn, cfg.fd_step)?;
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        // gradient change of -f
        let y: Vec<f64> = g.iter().zip(&gn).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-14 {
            let hy: Vec<f64> = (0..n).map(|i| dot(&hinv[i * n..(i + 1) * n], &y)).collect();
            let yhy = dot(&y, &hy);
            let rho = 1.0 / sy;
            for i in 0..n {
                for j in 0..n {
                    hinv[i * n + j] += (1.0 + yhy * rho) * rho * s[i] * s[j] - rho * (hy[i] * s[j] + s[i] * hy[j]);
                }
            }
            fresh = false;
        }
        x = xn;
        fx = fnew;
        g = gn;
    }
    let converged = dot(&g, &g).sqrt() < cfg.grad_tol;
    Ok(Local { value: fx, x, converged, iterations: cfg.max_iter })
}

/// Derivative-free compass search; returns the improved point and value.
pub fn compass_search(
    f: &impl Fn(&[f64]) -> Result<f64>,
    mut x: Vec<f64>,
    initial_step: f64,
    min_step: f64,
    max_evals: usize,
) -> Result<(Vec<f64>, f64)> {
    let mut fx = f(&x)?;
    let mut step = initial_step;
    let mut evals = 1;
    while step > min_step && evals < max_evals {
        let mut improved = false;
        for k in 0..x.len() {
            for sign in [1.0, -1.0] {
                let orig = x[k];
                x[k] = orig + sign * step;
                let v = f(&x)?;
                evals += 1;
                if v > fx {
                    fx = v;
                    improved = true;
                    break;
                }
                x[k] = orig;
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    Ok((x, fx))
}

/// Brute-force grid settings for [`grid_oracle`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridConfig {
    /// Eigenvalue simplex resolution: eigenvalues are multiples of `1/simplex_steps`.
    pub simplex_steps: usize,
    /// Eigenbases: the computational basis plus `n_bases - 1` Haar-random ones.
    pub n_bases: usize,
    /// Best grid points refined by compass search (0 disables the polish).
    pub polish: usize,
    pub seed: u64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            simplex_steps: 20,
            n_bases: 200,
            polish: 4,
            seed: 1,
        }
    }
}

fn compositions(total: usize, parts: usize) -> Vec<Vec<usize>> {
    if parts == 1 {
        return vec![vec![total]];
    }
    let mut out = Vec::new();
    for first in 0..=total {
        for mut rest in compositions(total - first, parts - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// Grid search over eigenvalue simplex × eigenbases, optionally polished.
///
/// Uses no gradients, so it is an independent check of [`maximize_over_states`].
pub fn grid_oracle<F>(dim: usize, objective: F, cfg: &GridConfig) -> Result<f64>
where
    F: Fn(&ComplexMatrix) -> Result<f64> + Sync,
{
    let spectra: Vec<Vec<f64>> = compositions(cfg.simplex_steps, dim)
        .into_iter()
        .map(|c| c.into_iter().map(|k| k as f64 / cfg.simplex_steps as f64).collect())
        .collect();
    let mut rng = seeded_rng(cfg.seed, 0);
    let bases: Vec<ComplexMatrix> = (0..cfg.n_bases.max(1))
        .map(|b| {
            if b == 0 {
                ComplexMatrix::identity(dim)
            } else {
                haar_unitary(&mut rng, dim).matrix().clone()
            }
        })
        .collect();
    let scored: Vec<Result<Vec<(f64, usize, usize)>>> = bases
        .par_iter()
        .enumerate()
        .map(|(bi, u)| {
            spectra
                .iter()
                .enumerate()
                .map(|(si, lam)| {
                    let rho = u.sandwich(&ComplexMatrix::diag(lam));
                    Ok((objective(&rho)?, bi, si))
                })
                .collect()
        })
        .collect();
    let mut all = Vec::new();
    for s in scored {
        all.extend(s?);
    }
    all.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut best = all.first().map(|t| t.0).unwrap_or(f64::NEG_INFINITY);

    let f = |x: &[f64]| objective(&state_from_params(x, dim));
    let polished: Vec<Result<f64>> = all
        .iter()
        .take(cfg.polish)
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&&(_, bi, si)| {
            let sqrt_diag = ComplexMatrix::diag(&spectra[si].iter().map(|l| l.sqrt()).collect::<Vec<_>>());
            let a = &bases[bi] * &sqrt_diag;
            let (_, v) = compass_search(&f, matrix_to_params(&a), 0.05, 1e-9, 200_000)?;
            Ok(v)
        })
        .collect();
    for p in polished {
        best = best.max(p?);
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmath::{psd_eigenvalues, entropy_from_eigenvalues};

    fn entropy(m: &ComplexMatrix) -> Result<f64> {
        Ok(entropy_from_eigenvalues(&psd_eigenvalues(m)?))
    }

    #[test]
    fn params_give_valid_states() {
        let mut rng = seeded_rng(5, 0);
        let a = ginibre(&mut rng, 3, 3);
        let rho = state_from_params(&matrix_to_params(&a), 3);
        assert!(DensityOperator::new(rho).is_ok());
    }

    #[test]
    fn entropy_maximum_is_log_d() {
        let cfg = OptimizerConfig { restarts: 3, ..Default::default() };
        let m = maximize_over_states(3, entropy, &cfg).unwrap();
        assert!((m.value - 3f64.ln()).abs() < 1e-9);
        assert!(m.converged);
    }

    #[test]
    fn finds_off_centre_maximum() {
        // -Tr[(ρ - σ)²] peaks at σ
        let sigma = ComplexMatrix::from_rows(&[
            vec![Complex64::new(0.7, 0.0), Complex64::new(0.1, 0.2)],
            vec![Complex64::new(0.1, -0.2), Complex64::new(0.3, 0.0)],
        ])
        .unwrap();
        let obj = |r: &ComplexMatrix| -> Result<f64> {
            let d = r - &sigma;
            Ok(-(d.inner(&d)).re)
        };
        let cfg = OptimizerConfig { restarts: 2, ..Default::default() };
        let m = maximize_over_states(2, obj, &cfg).unwrap();
        assert!(m.value > -1e-10);
        assert!(m.state.matrix().max_abs_diff(&sigma) < 1e-5);
    }

    #[test]
    fn deterministic_across_runs() {
        let cfg = OptimizerConfig { restarts: 4, seed: 9, ..Default::default() };
        let obj = |r: &ComplexMatrix| -> Result<f64> { Ok(entropy(r)? - r[(0, 0)].re) };
        let a = maximize_over_states(2, obj, &cfg).unwrap();
        let b = maximize_over_states(2, obj, &cfg).unwrap();
        assert_eq!(a.value.to_bits(), b.value.to_bits());
        assert_eq!(a.restart, b.restart);
    }

    #[test]
    fn oracle_agrees_on_entropy() {
        let v = grid_oracle(2, entropy, &GridConfig { n_bases: 5, ..Default::default() }).unwrap();
        assert!((v - 2f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn compositions_count() {
        assert_eq!(compositions(4, 3).len(), 15);
        assert!(compositions(4, 3).iter().all(|c| c.iter().sum::<usize>() == 4));
    }
}
