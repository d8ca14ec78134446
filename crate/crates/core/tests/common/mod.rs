//! Shared helpers for the integration tests and the acceptance suite.
#![allow(dead_code, clippy::needless_range_loop)]

use radelast::step_minimizer::Step;
use radelast::{init_state, Preset, StaggeredGrid, State, StoredEnergyModel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Step functional of the default model written out from its definition,
/// sharing no code with the library assembly.
pub struct OracleStep {
    n: usize,
    tau: f64,
    alpha0: Vec<f64>,
    beta0: Vec<f64>,
    gamma0: Vec<f64>,
    v0: Vec<f64>,
    /// Per cell: discrete rho^{2/3} and rho^{1/3}.
    ra: Vec<f64>,
    rc: Vec<f64>,
    /// Per vertex: psi weight, g weight, rho^{2/3}, alpha0^{2/3}, alpha0^{1/3}.
    wp: Vec<f64>,
    wg: Vec<f64>,
    r23: Vec<f64>,
    a23: Vec<f64>,
    a13: Vec<f64>,
}

impl OracleStep {
    pub fn new(s: &State, tau: f64) -> Self {
        let n = s.beta.len();
        let h = 1.0 / n as f64;
        let third = 1.0 / 3.0;
        let r = |k: usize| k as f64 * h;
        // rho^{2/3} and rho^{1/3} seen by a cell, from integrating d(rho^{1/3}) and d(rho^{2/3})
        let ra: Vec<f64> = (1..=n)
            .map(|i| h / (3.0 * (r(i).powf(third) - r(i - 1).powf(third))))
            .collect();
        let rc: Vec<f64> = (1..=n)
            .map(|i| 2.0 * h / (3.0 * (r(i).powf(2.0 * third) - r(i - 1).powf(2.0 * third))))
            .collect();
        let mut wp = vec![0.0; n + 1];
        let mut wg = vec![0.0; n + 1];
        for k in 1..n {
            wp[k] = 1.5 * r(k).powf(third) * (ra[k] - ra[k - 1]);
            wg[k] = 3.0 * r(k).powf(2.0 * third) * (rc[k] - rc[k - 1]);
        }
        wp[n] = 1.0 - wp.iter().sum::<f64>();
        wg[n] = 1.0 - wg.iter().sum::<f64>();
        OracleStep {
            n,
            tau,
            alpha0: s.alpha.clone(),
            beta0: s.beta.clone(),
            gamma0: s.gamma.clone(),
            v0: s.v.clone(),
            ra,
            rc,
            wp,
            wg,
            r23: (0..=n).map(|k| r(k).powf(2.0 * third)).collect(),
            a23: s.alpha.iter().map(|a| a.powf(2.0 * third)).collect(),
            a13: s.alpha.iter().map(|a| a.powf(third)).collect(),
        }
    }

    /// `I(v)` for interior velocities, `+inf` when a cell of alpha folds.
    pub fn value(&self, vi: &[f64]) -> f64 {
        let n = self.n;
        let h = 1.0 / n as f64;
        let mut v = vec![0.0];
        v.extend_from_slice(vi);
        v.push(0.0);
        let lift_a = |k: usize| self.alpha0[k] + 3.0 * self.tau * self.a23[k] * v[k];
        let lift_g = |k: usize| self.gamma0[k] + 2.0 * self.tau * self.a13[k] * v[k];
        let (ra, rc) = (&self.ra, &self.rc);

        let mut total = 0.0;
        for k in 0..=n {
            let w = if k == 0 || k == n { 0.5 * h } else { h };
            total += 0.5 * w * (v[k] - self.v0[k]).powi(2);
        }
        for i in 1..=n {
            let ap = (lift_a(i) - lift_a(i - 1)) / h;
            if ap <= 0.0 {
                return f64::INFINITY;
            }
            let beta = self.beta0[i - 1] + 3.0 * self.tau * (v[i] - v[i - 1]) / h;
            let gp = (lift_g(i) - lift_g(i - 1)) / h;
            let phi = (ra[i - 1] * beta).powi(6);
            let g = (1.5 * rc[i - 1] * gp).powi(2);
            total += h * (phi + 2.0 * g + ap * ap + 1.0 / ap);
        }
        for k in 1..=n {
            let rho = k as f64 * h;
            total += self.wp[k] * 2.0 * (lift_a(k) / rho).powi(2)
                + self.wg[k] * (lift_g(k) / self.r23[k]).powi(2);
        }
        total
    }

    /// Fourth-order central difference gradient.
    pub fn fd_gradient(&self, v: &[f64], step: f64) -> Vec<f64> {
        let mut g = vec![0.0; v.len()];
        let mut w = v.to_vec();
        for i in 0..v.len() {
            let at = |w: &mut Vec<f64>, d: f64| {
                w[i] = v[i] + d;
                self.value(w)
            };
            let f2 = at(&mut w, 2.0 * step);
            let f1 = at(&mut w, step);
            let m1 = at(&mut w, -step);
            let m2 = at(&mut w, -2.0 * step);
            w[i] = v[i];
            g[i] = (-f2 + 8.0 * f1 - 8.0 * m1 + m2) / (12.0 * step);
        }
        g
    }

    /// Gradient descent on the finite-difference gradient from zero velocity,
    /// with Barzilai-Borwein step lengths safeguarded by Armijo backtracking.
    /// Stops once the gradient max-norm is below `grad_tol (1 + |I|)`, the same
    /// scaling the library uses. Returns the interior velocities.
    pub fn minimize(&self, grad_tol: f64, max_iter: usize) -> Vec<f64> {
        let fd = 1e-4;
        let mut v = vec![0.0; self.n - 1];
        let mut f = self.value(&v);
        let mut g = self.fd_gradient(&v, fd);
        let mut t = 1e-3;
        for _ in 0..max_iter {
            if max_abs(&g) <= grad_tol * (1.0 + f.abs()) {
                break;
            }
            let g2: f64 = g.iter().map(|x| x * x).sum();
            let (trial, ft) = loop {
                let trial: Vec<f64> = v.iter().zip(&g).map(|(a, b)| a - t * b).collect();
                let ft = self.value(&trial);
                if ft <= f - 1e-4 * t * g2 {
                    break (trial, ft);
                }
                t *= 0.5;
                if t < 1e-16 {
                    // the finite-difference gradient is at its noise floor
                    return v;
                }
            };
            let gt = self.fd_gradient(&trial, fd);
            let s: Vec<f64> = trial.iter().zip(&v).map(|(a, b)| a - b).collect();
            let y: Vec<f64> = gt.iter().zip(&g).map(|(a, b)| a - b).collect();
            let sy: f64 = s.iter().zip(&y).map(|(a, b)| a * b).sum();
            let ss: f64 = s.iter().map(|a| a * a).sum();
            t = if sy > 0.0 { ss / sy } else { 1e-3 };
            v = trial;
            f = ft;
            g = gt;
        }
        v
    }
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

pub fn max_abs(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Perturbed initial state on an `n`-cell grid.
pub fn perturbed(n: usize, seed: u64) -> (StaggeredGrid, State) {
    let grid = StaggeredGrid::new(n).unwrap();
    let s = init_state(
        &Preset::Perturbed {
            epsilon: 0.05,
            modes: 2,
            seed,
        },
        1.0,
        &grid,
    )
    .unwrap();
    (grid, s)
}

/// Random interior velocities at which the step functional is finite.
pub fn random_feasible(step: &Step, rng: &mut ChaCha8Rng, scale: f64) -> Vec<f64> {
    let mut s = scale;
    loop {
        let v: Vec<f64> = (0..step.dim()).map(|_| rng.random_range(-s..s)).collect();
        if step.value(&v).is_some() {
            return v;
        }
        s *= 0.5;
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn default_model() -> StoredEnergyModel {
    StoredEnergyModel::default()
}
