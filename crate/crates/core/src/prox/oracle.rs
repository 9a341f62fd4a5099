//! Black-box convex minimizer used as an independent check on the closed
//! forms and on the ADMM solver.
//!
//! Quasi-Newton descent on finite-difference gradients (BFGS with a weak
//! Wolfe bracketing line search, which keeps working on nonsmooth convex
//! functions), random restarts, and a final direct-search polish along
//! random and coordinate directions.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

#[derive(Debug, Clone)]
pub struct OracleOptions {
    pub restarts: usize,
    pub max_iters: usize,
    pub seed: u64,
    /// Standard deviation of random starting points.
    pub init_scale: f64,
    /// Extra starting points tried before the random ones.
    pub starts: Vec<Vec<f64>>,
    pub polish_rounds: usize,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self {
            restarts: 4,
            max_iters: 2000,
            seed: 0x5eed,
            init_scale: 1.0,
            starts: Vec::new(),
            polish_rounds: 4000,
        }
    }
}

/// Minimizes `objective` over `R^dim`; `tol` is the target accuracy in
/// objective value.
pub fn oracle_minimize<F: Fn(&[f64]) -> f64>(objective: F, dim: usize, tol: f64) -> Vec<f64> {
    oracle_minimize_with(objective, dim, tol, &OracleOptions::default())
}

pub fn oracle_minimize_with<F: Fn(&[f64]) -> f64>(
    objective: F,
    dim: usize,
    tol: f64,
    opts: &OracleOptions,
) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut starts: Vec<Vec<f64>> = vec![vec![0.0; dim]];
    starts.extend(opts.starts.iter().cloned());
    for _ in 0..opts.restarts {
        starts.push(
            (0..dim)
                .map(|_| opts.init_scale * rng.sample::<f64, _>(StandardNormal))
                .collect(),
        );
    }

    let mut best: Option<(Vec<f64>, f64)> = None;
    for start in starts {
        let mut x = bfgs(&objective, start, opts.max_iters, tol, 1e-6);
        x = bfgs(&objective, x, opts.max_iters, tol, 1e-9);
        let fx = objective(&x);
        if best.as_ref().map_or(true, |(_, fb)| fx < *fb) {
            best = Some((x, fx));
        }
    }
    let (x, _) = best.expect("at least one start");
    polish(&objective, x, opts.polish_rounds, &mut rng)
}

fn fd_grad<F: Fn(&[f64]) -> f64>(f: &F, x: &[f64], h: f64, g: &mut [f64]) {
    let mut xp = x.to_vec();
    for i in 0..x.len() {
        let step = h * (1.0 + x[i].abs());
        xp[i] = x[i] + step;
        let fp = f(&xp);
        xp[i] = x[i] - step;
        let fm = f(&xp);
        xp[i] = x[i];
        g[i] = (fp - fm) / (2.0 * step);
    }
}

fn bfgs<F: Fn(&[f64]) -> f64>(f: &F, mut x: Vec<f64>, max_iters: usize, tol: f64, h: f64) -> Vec<f64> {
    let n = x.len();
    let mut hinv = identity(n);
    let mut fx = f(&x);
    let mut g = vec![0.0; n];
    fd_grad(f, &x, h, &mut g);
    let mut g_new = vec![0.0; n];
    let mut trial = vec![0.0; n];
    let mut stalls = 0;

    for _ in 0..max_iters {
        let mut d: Vec<f64> = (0..n).map(|i| -(0..n).map(|j| hinv[i * n + j] * g[j]).sum::<f64>()).collect();
        let mut slope: f64 = d.iter().zip(&g).map(|(a, b)| a * b).sum();
        if !(slope < 0.0) {
            hinv = identity(n);
            d = g.iter().map(|v| -v).collect();
            slope = -g.iter().map(|v| v * v).sum::<f64>();
            if slope == 0.0 {
                break;
            }
        }

        // Weak Wolfe bracketing line search.
        let (mut lo, mut hi, mut t) = (0.0_f64, f64::INFINITY, 1.0_f64);
        let mut accepted: Option<(f64, f64)> = None;
        for _ in 0..60 {
            for i in 0..n {
                trial[i] = x[i] + t * d[i];
            }
            let ft = f(&trial);
            if !(ft <= fx + 1e-4 * t * slope) {
                hi = t;
            } else {
                fd_grad(f, &trial, h, &mut g_new);
                let s2: f64 = g_new.iter().zip(&d).map(|(a, b)| a * b).sum();
                if s2 < 0.9 * slope {
                    lo = t;
                    accepted = Some((t, ft));
                } else {
                    accepted = Some((t, ft));
                    break;
                }
            }
            t = if hi.is_finite() { 0.5 * (lo + hi) } else { 2.0 * lo.max(t) };
            if hi.is_finite() && hi - lo < 1e-16 * (1.0 + lo) {
                break;
            }
        }

        let Some((t, ft)) = accepted else {
            stalls += 1;
            if stalls > 2 {
                break;
            }
            hinv = identity(n);
            continue;
        };
        for i in 0..n {
            trial[i] = x[i] + t * d[i];
        }
        fd_grad(f, &trial, h, &mut g_new);
        let s: Vec<f64> = (0..n).map(|i| trial[i] - x[i]).collect();
        let y: Vec<f64> = (0..n).map(|i| g_new[i] - g[i]).collect();
        let sy: f64 = s.iter().zip(&y).map(|(a, b)| a * b).sum();
        let decrease = fx - ft;
        x.copy_from_slice(&trial);
        g.copy_from_slice(&g_new);
        fx = ft;
        if sy > 1e-300 {
            bfgs_update(&mut hinv, &s, &y, sy);
        }
        if decrease <= 1e-4 * tol {
            stalls += 1;
            if stalls > 20 {
                break;
            }
        } else {
            stalls = 0;
        }
    }
    x
}

fn identity(n: usize) -> Vec<f64> {
    let mut m = vec![0.0; n * n];
    for i in 0..n {
        m[i * n + i] = 1.0;
    }
    m
}

/// `H ← (I − ρ s yᵀ) H (I − ρ y sᵀ) + ρ s sᵀ`
fn bfgs_update(h: &mut [f64], s: &[f64], y: &[f64], sy: f64) {
    let n = s.len();
    let rho = 1.0 / sy;
    let hy: Vec<f64> = (0..n).map(|i| (0..n).map(|j| h[i * n + j] * y[j]).sum()).collect();
    let yhy: f64 = y.iter().zip(&hy).map(|(a, b)| a * b).sum();
    for i in 0..n {
        for j in 0..n {
            h[i * n + j] += -rho * (hy[i] * s[j] + s[i] * hy[j]) + (rho * rho * yhy + rho) * s[i] * s[j];
        }
    }
}

/// Direct search along random and coordinate directions with a shrinking step.
fn polish<F: Fn(&[f64]) -> f64>(f: &F, mut x: Vec<f64>, rounds: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let n = x.len();
    if n == 0 {
        return x;
    }
    let mut fx = f(&x);
    let mut step = 1e-3 * (1.0 + x.iter().map(|v| v.abs()).fold(0.0, f64::max));
    let mut trial = vec![0.0; n];
    let mut fails = 0;
    for r in 0..rounds {
        let dir: Vec<f64> = if r % 2 == 0 {
            let mut v: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            let nv = v.iter().map(|a| a * a).sum::<f64>().sqrt();
            v.iter_mut().for_each(|a| *a /= nv);
            v
        } else {
            let mut v = vec![0.0; n];
            v[(r / 2) % n] = 1.0;
            v
        };
        let mut improved = false;
        for sign in [1.0, -1.0] {
            for i in 0..n {
                trial[i] = x[i] + sign * step * dir[i];
            }
            let ft = f(&trial);
            if ft < fx {
                fx = ft;
                x.copy_from_slice(&trial);
                improved = true;
                step *= 2.0;
                break;
            }
        }
        if !improved {
            fails += 1;
            if fails >= 2 * n {
                step *= 0.5;
                fails = 0;
            }
        } else {
            fails = 0;
        }
        if step < 1e-14 {
            break;
        }
    }
    x
}
