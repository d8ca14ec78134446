//! One time step: minimize kinetic plus stored energy over the new velocity.
//!
//! The deformation fields are affine in the velocity,
//! `alpha = alpha0 + 3 tau alpha0^{2/3} v`, `beta = beta0 + 3 tau v'`,
//! `gamma = gamma0 + 2 tau alpha0^{1/3} v`, so the step is an unconstrained
//! convex problem in the interior vertex velocities. The barrier in `h` keeps
//! every cell difference of `alpha` positive along the Newton iteration.

use serde::{Deserialize, Serialize};

use crate::banded::SymBanded;
use crate::grid::StaggeredGrid;
use crate::kinematics::{gamma_from_alpha, omega_jacobian, xi_assemble};
use crate::stored_energy::StoredEnergyModel;
use crate::Error;

/// Fields at one time level on a [`StaggeredGrid`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct State {
    /// Vertex values, `alpha[0] = 0`, `alpha[N]` is the boundary value.
    pub alpha: Vec<f64>,
    /// Cell values, length `N`.
    pub beta: Vec<f64>,
    /// Vertex values.
    pub gamma: Vec<f64>,
    /// Vertex values, zero at both ends.
    pub v: Vec<f64>,
}

impl State {
    /// Smallest cell difference `(alpha_i - alpha_{i-1}) / h`.
    pub fn min_alpha_prime(&self, grid: &StaggeredGrid) -> f64 {
        grid.cell_diff(&self.alpha)
            .into_iter()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn max_speed(&self) -> f64 {
        self.v.iter().fold(0.0, |m, x| m.max(x.abs()))
    }
}

/// Cell and vertex stored-energy densities of a state.
///
/// Cell `i` holds `phi(A beta) + 2 g(3/2 C gamma') + h(alpha')` (to be weighted by
/// the spacing); vertex `k` holds its weighted `psi` and `g` terms. Returns `None`
/// when some cell difference of `alpha` is not positive.
pub fn energy_parts(
    grid: &StaggeredGrid,
    model: &StoredEnergyModel,
    alpha: &[f64],
    beta: &[f64],
    gamma: &[f64],
) -> Option<(Vec<f64>, Vec<f64>)> {
    let n = grid.n;
    let h = grid.h;
    let mut cells = Vec::with_capacity(n);
    for i in 1..=n {
        let ap = (alpha[i] - alpha[i - 1]) / h;
        if !(ap > 0.0) {
            return None;
        }
        let gp = (gamma[i] - gamma[i - 1]) / h;
        let j = i - 1;
        cells.push(
            model.phi.value(grid.face_a[j] * beta[j])
                + 2.0 * model.g.value(1.5 * grid.face_c[j] * gp)
                + model.h.value(ap),
        );
    }
    let mut verts = vec![0.0; n + 1];
    for k in 1..=n {
        if alpha[k] < 0.0 {
            return None;
        }
        verts[k] = grid.w_psi[k] * 2.0 * model.psi.value(alpha[k] / grid.x[k])
            + grid.w_g[k] * model.g.value(gamma[k] / grid.x23[k]);
    }
    Some((cells, verts))
}

/// Newton iteration controls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NewtonOptions {
    /// Stop when `max |grad| <= grad_tol * (1 + |I|)`.
    pub grad_tol: f64,
    pub max_iterations: usize,
    pub armijo: f64,
    pub backtrack: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions {
            grad_tol: 1e-10,
            max_iterations: 200,
            armijo: 1e-4,
            backtrack: 0.5,
        }
    }
}

/// The minimization problem of one time step.
#[derive(Debug, Clone)]
pub struct Step<'a> {
    pub grid: &'a StaggeredGrid,
    pub model: &'a StoredEnergyModel,
    pub state0: &'a State,
    pub tau: f64,
    /// `alpha0^{2/3}` per vertex.
    a0: Vec<f64>,
    /// `alpha0^{1/3}` per vertex.
    b0: Vec<f64>,
}

/// Value, gradient and tridiagonal Hessian of the step functional in the
/// interior velocities `v_1..v_{N-1}`.
#[derive(Debug, Clone)]
pub struct Assembled {
    pub value: f64,
    pub grad: Vec<f64>,
    pub hess: SymBanded,
}

impl<'a> Step<'a> {
    pub fn new(
        grid: &'a StaggeredGrid,
        model: &'a StoredEnergyModel,
        state0: &'a State,
        tau: f64,
    ) -> Self {
        let b0: Vec<f64> = state0.alpha.iter().map(|a| a.max(0.0).cbrt()).collect();
        let a0 = b0.iter().map(|b| b * b).collect();
        Step {
            grid,
            model,
            state0,
            tau,
            a0,
            b0,
        }
    }

    /// Number of unknowns.
    pub fn dim(&self) -> usize {
        self.grid.n - 1
    }

    /// Vertex velocities with zeros at the origin and at the boundary.
    pub fn full_velocity(&self, interior: &[f64]) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.grid.n + 1);
        v.push(0.0);
        v.extend_from_slice(interior);
        v.push(0.0);
        v
    }

    /// Affine lift of a full velocity vector to `(alpha, beta, gamma)`.
    pub fn lift(&self, v: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let s = self.state0;
        let t = self.tau;
        let h = self.grid.h;
        let alpha = (0..v.len())
            .map(|k| s.alpha[k] + 3.0 * t * self.a0[k] * v[k])
            .collect();
        let beta = (0..self.grid.n)
            .map(|j| s.beta[j] + 3.0 * t * (v[j + 1] - v[j]) / h)
            .collect();
        let gamma = (0..v.len())
            .map(|k| s.gamma[k] + 2.0 * t * self.b0[k] * v[k])
            .collect();
        (alpha, beta, gamma)
    }

    /// Lifted state for interior velocities.
    pub fn lifted_state(&self, interior: &[f64]) -> State {
        let v = self.full_velocity(interior);
        let (alpha, beta, gamma) = self.lift(&v);
        State {
            alpha,
            beta,
            gamma,
            v,
        }
    }

    fn kinetic(&self, v: &[f64]) -> f64 {
        let v0 = &self.state0.v;
        (0..v.len())
            .map(|k| self.grid.w_v[k] * 0.5 * (v[k] - v0[k]).powi(2))
            .sum()
    }

    /// Value of the step functional, or `None` outside the feasible set.
    pub fn value(&self, interior: &[f64]) -> Option<f64> {
        let v = self.full_velocity(interior);
        let (alpha, beta, gamma) = self.lift(&v);
        let (cells, verts) = energy_parts(self.grid, self.model, &alpha, &beta, &gamma)?;
        let val =
            self.kinetic(&v) + verts.iter().sum::<f64>() + self.grid.h * cells.iter().sum::<f64>();
        val.is_finite().then_some(val)
    }

    /// Exact value, gradient and Hessian, or `None` outside the feasible set.
    pub fn assemble(&self, interior: &[f64]) -> Option<Assembled> {
        let value = self.value(interior)?;
        let g = self.grid;
        let m = self.model;
        let n = g.n;
        let h = g.h;
        let t = self.tau;
        let v = self.full_velocity(interior);
        let (alpha, beta, gamma) = self.lift(&v);
        let mut grad = vec![0.0; n - 1];
        let mut hess = SymBanded::zeros(n - 1, 1);

        // vertex terms
        for k in 1..n {
            let j = k - 1;
            let mut d1 = g.w_v[k] * (v[k] - self.state0.v[k]);
            let mut d2 = g.w_v[k];
            let ds = 3.0 * t * self.a0[k] / g.x[k];
            let (_, p1, p2) = m.psi.eval(alpha[k] / g.x[k]);
            d1 += g.w_psi[k] * 2.0 * p1 * ds;
            d2 += g.w_psi[k] * 2.0 * p2 * ds * ds;
            let dr = 2.0 * t * self.b0[k] / g.x23[k];
            let (_, q1, q2) = m.g.eval(gamma[k] / g.x23[k]);
            d1 += g.w_g[k] * q1 * dr;
            d2 += g.w_g[k] * q2 * dr * dr;
            grad[j] += d1;
            hess.add(j, j, d2);
        }

        // cell terms, each a function of a linear form in (v_{i-1}, v_i)
        for i in 1..=n {
            let c = i - 1;
            let a_i = g.face_a[c];
            let c_i = g.face_c[c];
            let ap = (alpha[i] - alpha[i - 1]) / h;
            let gp = (gamma[i] - gamma[i - 1]) / h;
            let (_, f1, f2) = m.phi.eval(a_i * beta[c]);
            let (_, g1, g2) = m.g.eval(1.5 * c_i * gp);
            let (_, h1, h2) = m.h.eval(ap);
            let lf = [-3.0 * t * a_i / h, 3.0 * t * a_i / h];
            let lg = [
                -3.0 * t * c_i * self.b0[i - 1] / h,
                3.0 * t * c_i * self.b0[i] / h,
            ];
            let lh = [-3.0 * t * self.a0[i - 1] / h, 3.0 * t * self.a0[i] / h];
            let verts = [i - 1, i];
            for p in 0..2 {
                let kp = verts[p];
                if kp == 0 || kp == n {
                    continue;
                }
                grad[kp - 1] += h * (f1 * lf[p] + 2.0 * g1 * lg[p] + h1 * lh[p]);
                for q in 0..=p {
                    let kq = verts[q];
                    if kq == 0 || kq == n {
                        continue;
                    }
                    let e =
                        h * (f2 * lf[p] * lf[q] + 2.0 * g2 * lg[p] * lg[q] + h2 * lh[p] * lh[q]);
                    hess.add(kp - 1, kq - 1, e);
                }
            }
        }
        Some(Assembled { value, grad, hess })
    }
}

/// Outcome of [`minimize_step`].
#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub state: State,
    pub iterations: usize,
    /// Max-norm of the gradient at the returned iterate.
    pub grad_norm: f64,
    pub value: f64,
}

fn max_abs(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Newton direction `-H^{-1} g`, shifting the diagonal if the factorization fails.
fn newton_direction(a: &Assembled) -> Vec<f64> {
    let mut hess = a.hess.clone();
    let mut shift = 1e-12 * a.hess.max_diagonal().max(1e-300);
    loop {
        if let Ok(chol) = hess.cholesky() {
            return chol.solve(&a.grad).into_iter().map(|x| -x).collect();
        }
        hess = a.hess.clone();
        hess.add_diagonal(shift);
        shift *= 10.0;
    }
}

/// Minimizes the step functional starting from the interior velocities `v_init`
/// (`None` means zero, which is always feasible).
pub fn minimize_step(
    grid: &StaggeredGrid,
    model: &StoredEnergyModel,
    state0: &State,
    tau: f64,
    v_init: Option<&[f64]>,
    opts: &NewtonOptions,
) -> Result<StepResult, Error> {
    minimize_step_limited(grid, model, state0, tau, v_init, opts, None)
}

/// As [`minimize_step`], optionally stopping after `max_steps` Newton updates
/// whether or not the tolerance is met.
pub fn minimize_step_limited(
    grid: &StaggeredGrid,
    model: &StoredEnergyModel,
    state0: &State,
    tau: f64,
    v_init: Option<&[f64]>,
    opts: &NewtonOptions,
    max_steps: Option<usize>,
) -> Result<StepResult, Error> {
    let step = Step::new(grid, model, state0, tau);
    let mut v = match v_init {
        Some(v) => {
            if v.len() != step.dim() {
                return Err(Error::InfeasibleStart(format!(
                    "expected {} velocities, got {}",
                    step.dim(),
                    v.len()
                )));
            }
            v.to_vec()
        }
        None => vec![0.0; step.dim()],
    };
    let mut cur = step.assemble(&v).ok_or_else(|| {
        Error::InfeasibleStart("lifted alpha has a non-positive cell difference".into())
    })?;
    let mut iterations = 0;
    loop {
        let gnorm = max_abs(&cur.grad);
        let done =
            gnorm <= opts.grad_tol * (1.0 + cur.value.abs()) || max_steps == Some(iterations);
        if done {
            return Ok(StepResult {
                state: step.lifted_state(&v),
                iterations,
                grad_norm: gnorm,
                value: cur.value,
            });
        }
        if iterations == opts.max_iterations {
            return Err(Error::MaxIterations {
                iterations,
                grad_norm: gnorm,
                best: Box::new(step.lifted_state(&v)),
            });
        }
        let dv = newton_direction(&cur);
        let slope: f64 = dv.iter().zip(&cur.grad).map(|(a, b)| a * b).sum();
        // near the minimum the decrease drops below the rounding of the value
        let noise = 4.0 * f64::EPSILON * (1.0 + cur.value.abs());
        let mut t = 1.0;
        let next = loop {
            let trial: Vec<f64> = v.iter().zip(&dv).map(|(a, b)| a + t * b).collect();
            if let Some(f) = step.value(&trial) {
                if f <= cur.value + opts.armijo * t * slope + noise {
                    break trial;
                }
            }
            t *= opts.backtrack;
            if t < 1e-30 {
                return Err(Error::LineSearch {
                    iteration: iterations,
                });
            }
        };
        v = next;
        cur = step.assemble(&v).ok_or(Error::LineSearch {
            iteration: iterations,
        })?;
        iterations += 1;
    }
}

/// Pointwise defect of the integrated Euler-Lagrange identity
/// `3 rho^{2/3} G1(rho) + int_rho^1 (s^{-1/3} G2 + (v - v0)/tau) ds = const`.
#[derive(Debug, Clone, PartialEq)]
pub struct ElResidual {
    /// Per cell, after removing the fitted constant.
    pub defect: Vec<f64>,
    /// Least-squares constant over the cells inside the window.
    pub constant: f64,
    /// Cells with midpoint below this are excluded from the fit and the max.
    pub window: f64,
    pub max_defect: f64,
}

/// Evaluates the Euler-Lagrange identity at a stepped state.
///
/// `G1` is taken on cells and `G2` on vertices, with `grad G` at the new state and
/// the jacobian of omega at the old one.
pub fn el_residual(
    grid: &StaggeredGrid,
    model: &StoredEnergyModel,
    state0: &State,
    new: &State,
    tau: f64,
    window: f64,
) -> Result<ElResidual, Error> {
    let n = grid.n;
    let h = grid.h;
    let ap = grid.cell_diff(&new.alpha);
    let gp = grid.cell_diff(&new.gamma);
    let ap0 = grid.cell_diff(&state0.alpha);

    let mut lhs = Vec::with_capacity(n);
    for c in 0..n {
        let m = grid.mid[c];
        let a = 0.5 * (new.alpha[c] + new.alpha[c + 1]);
        let gm = 0.5 * (new.gamma[c] + new.gamma[c + 1]);
        let a0 = 0.5 * (state0.alpha[c] + state0.alpha[c + 1]);
        let xi = xi_assemble(a, new.beta[c], gm, ap[c], gp[c], m);
        let grad = model.grad_g(&xi, m)?;
        let jac = omega_jacobian(&gamma_from_alpha(a0, ap0[c], m)?, m);
        let g1: f64 = (0..7).map(|i| grad[i] * jac[i][0]).sum();
        lhs.push(3.0 * m.powf(2.0 / 3.0) * g1);
    }

    let bv = grid.cells_to_vertices(&new.beta);
    let apv = grid.cells_to_vertices(&ap);
    let gpv = grid.cells_to_vertices(&gp);
    let ap0v = grid.cells_to_vertices(&ap0);
    let mut f = vec![0.0; n + 1];
    for k in 1..=n {
        let x = grid.x[k];
        let xi = xi_assemble(new.alpha[k], bv[k], new.gamma[k], apv[k], gpv[k], x);
        let grad = model.grad_g(&xi, x)?;
        let jac = omega_jacobian(&gamma_from_alpha(state0.alpha[k], ap0v[k], x)?, x);
        let g2: f64 = (0..7).map(|i| grad[i] * (jac[i][1] + jac[i][2])).sum();
        f[k] = g2 / grid.x13[k] + (new.v[k] - state0.v[k]) / tau;
    }

    // tail[c] integrates f over [mid_c, 1]
    let mut raw = vec![0.0; n];
    let mut tail = 0.5 * h * f[n];
    for c in (0..n).rev() {
        raw[c] = lhs[c] + tail;
        tail += h * f[c];
    }

    let inside: Vec<usize> = (0..n).filter(|&c| grid.mid[c] >= window).collect();
    let constant = if inside.is_empty() {
        0.0
    } else {
        inside.iter().map(|&c| raw[c]).sum::<f64>() / inside.len() as f64
    };
    let defect: Vec<f64> = raw.iter().map(|d| d - constant).collect();
    let max_defect = inside.iter().fold(0.0, |m: f64, &c| m.max(defect[c].abs()));
    Ok(ElResidual {
        defect,
        constant,
        window,
        max_defect,
    })
}

/// Discrete entropy inequality at interior vertices `1..N-1`, in density form:
/// `(eta - eta0) / tau - d/drho (flux)`, where the flux is the work of the cell
/// stresses against the new velocity. Non-positive up to rounding for a
/// converged step.
pub fn entropy_defect(
    grid: &StaggeredGrid,
    model: &StoredEnergyModel,
    state0: &State,
    new: &State,
    tau: f64,
) -> Result<Vec<f64>, Error> {
    let n = grid.n;
    let h = grid.h;
    let inadmissible = || Error::Domain("state has a non-positive cell difference".into());
    let (c1, v1) =
        energy_parts(grid, model, &new.alpha, &new.beta, &new.gamma).ok_or_else(inadmissible)?;
    let (c0, v0) = energy_parts(grid, model, &state0.alpha, &state0.beta, &state0.gamma)
        .ok_or_else(inadmissible)?;
    let b: Vec<f64> = state0.alpha.iter().map(|a| a.max(0.0).cbrt()).collect();
    let a: Vec<f64> = b.iter().map(|x| x * x).collect();
    let v = &new.v;

    let mut flux = Vec::with_capacity(n);
    for i in 1..=n {
        let c = i - 1;
        let ap = (new.alpha[i] - new.alpha[i - 1]) / h;
        let gp = (new.gamma[i] - new.gamma[i - 1]) / h;
        let p = 3.0 * grid.face_a[c] * model.phi.d1(grid.face_a[c] * new.beta[c]);
        let q = 6.0 * grid.face_c[c] * model.g.d1(1.5 * grid.face_c[c] * gp);
        let s = 3.0 * model.h.d1(ap);
        flux.push(
            0.5 * (p * (v[i] + v[i - 1])
                + q * (b[i] * v[i] + b[i - 1] * v[i - 1])
                + s * (a[i] * v[i] + a[i - 1] * v[i - 1])),
        );
    }
    Ok((1..n)
        .map(|k| {
            let deta = grid.w_v[k] * 0.5 * (v[k] * v[k] - state0.v[k] * state0.v[k])
                + (v1[k] - v0[k])
                + 0.5 * h * (c1[k - 1] - c0[k - 1])
                + 0.5 * h * (c1[k] - c0[k]);
            (deta / tau - (flux[k] - flux[k - 1])) / h
        })
        .collect())
}

/// Largest violation of the two algebraic relations linking `alpha'` to the
/// increments of `beta` and `gamma'` over one step, on cells with midpoint
/// at least `window`:
/// `alpha' = alpha0'/3 (1 + 2 alpha/alpha0) + (beta - beta0) alpha0^{2/3}` and
/// `alpha' = alpha0'/3 (2 + alpha/alpha0) + 3/2 (gamma' - gamma0') alpha0^{1/3}`.
pub fn regularity_defect(
    grid: &StaggeredGrid,
    state0: &State,
    new: &State,
    window: f64,
) -> (f64, f64) {
    let ap = grid.cell_diff(&new.alpha);
    let ap0 = grid.cell_diff(&state0.alpha);
    let gp = grid.cell_diff(&new.gamma);
    let gp0 = grid.cell_diff(&state0.gamma);
    let mut worst = (0.0f64, 0.0f64);
    for c in 0..grid.n {
        if grid.mid[c] < window {
            continue;
        }
        let a = 0.5 * (new.alpha[c] + new.alpha[c + 1]);
        let a0 = 0.5 * (state0.alpha[c] + state0.alpha[c + 1]);
        let b0 = a0.cbrt();
        let r = a / a0;
        let e1 =
            ap[c] - (ap0[c] / 3.0 * (1.0 + 2.0 * r) + (new.beta[c] - state0.beta[c]) * b0 * b0);
        let e2 = ap[c] - (ap0[c] / 3.0 * (2.0 + r) + 1.5 * (gp[c] - gp0[c]) * b0);
        worst.0 = worst.0.max(e1.abs());
        worst.1 = worst.1.max(e2.abs());
    }
    worst
}
