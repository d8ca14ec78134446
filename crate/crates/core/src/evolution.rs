//! Time loop, initial data and per-step diagnostics.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::grid::StaggeredGrid;
use crate::step_minimizer::{
    el_residual, energy_parts, entropy_defect, minimize_step, NewtonOptions, State,
};
use crate::stored_energy::StoredEnergyModel;
use crate::Error;

/// Initial deformation profiles. All start at rest.
#[derive(Debug, Clone, PartialEq)]
pub enum Preset {
    /// `alpha0 = lambda^3 rho`.
    Homogeneous,
    /// `alpha0 = lambda^3 rho (1 + eps sin(pi rho))`, plus `modes` extra seeded
    /// terms `eps c_k sin(k pi rho) / k^2` with `c_k` uniform in `[-1, 1]`.
    Perturbed { epsilon: f64, modes: u32, seed: u64 },
    /// `alpha0 = lambda^3 rho (a + (1 - a) rho)`: material near the centre is
    /// compressed by the factor `a`.
    CompressedCore { core: f64 },
    /// `alpha0` given as an expression in `rho`, `lambda` and `lambda_b`.
    Expression(String),
}

impl Preset {
    /// Evaluates the initial `alpha` at the vertices.
    pub fn alpha(&self, lambda: f64, x: &[f64]) -> Result<Vec<f64>, Error> {
        let lb = lambda.powi(3);
        let pi = std::f64::consts::PI;
        match self {
            Preset::Homogeneous => Ok(x.iter().map(|r| lb * r).collect()),
            Preset::Perturbed {
                epsilon,
                modes,
                seed,
            } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let coef: Vec<f64> = (0..*modes).map(|_| rng.random_range(-1.0..=1.0)).collect();
                Ok(x.iter()
                    .map(|&r| {
                        let mut s = (pi * r).sin();
                        for (j, c) in coef.iter().enumerate() {
                            let k = (j + 2) as f64;
                            s += c * (k * pi * r).sin() / (k * k);
                        }
                        lb * r * (1.0 + epsilon * s)
                    })
                    .collect())
            }
            Preset::CompressedCore { core } => Ok(x
                .iter()
                .map(|r| lb * r * (core + (1.0 - core) * r))
                .collect()),
            Preset::Expression(src) => {
                let tree = evalexpr::build_operator_tree::<evalexpr::DefaultNumericTypes>(src)
                    .map_err(|e| Error::Config(format!("preset expression: {e}")))?;
                let mut ctx = evalexpr::HashMapContext::<evalexpr::DefaultNumericTypes>::new();
                use evalexpr::ContextWithMutableVariables;
                let set = |ctx: &mut evalexpr::HashMapContext, k: &str, v: f64| {
                    ctx.set_value(k.into(), evalexpr::Value::Float(v))
                        .map_err(|e| Error::Config(format!("preset expression: {e}")))
                };
                set(&mut ctx, "lambda", lambda)?;
                set(&mut ctx, "lambda_b", lb)?;
                set(&mut ctx, "pi", pi)?;
                x.iter()
                    .map(|&r| {
                        set(&mut ctx, "rho", r)?;
                        tree.eval_number_with_context(&ctx).map_err(|e| {
                            Error::Config(format!("preset expression at rho={r}: {e}"))
                        })
                    })
                    .collect()
            }
        }
    }
}

/// Builds an admissible state at rest from a preset.
pub fn init_state(preset: &Preset, lambda: f64, grid: &StaggeredGrid) -> Result<State, Error> {
    if !(lambda > 0.0) {
        return Err(Error::Inadmissible(format!(
            "lambda = {lambda} must be positive"
        )));
    }
    let lb = lambda.powi(3);
    let mut alpha = preset.alpha(lambda, &grid.x)?;
    let n = grid.n;
    if alpha[0].abs() > 1e-12 * lb {
        return Err(Error::Inadmissible(format!(
            "alpha0(0) = {} must vanish",
            alpha[0]
        )));
    }
    if (alpha[n] - lb).abs() > 1e-12 * lb {
        return Err(Error::Inadmissible(format!(
            "alpha0(1) = {} differs from lambda^3 = {lb}",
            alpha[n]
        )));
    }
    alpha[0] = 0.0;
    alpha[n] = lb;
    if let Some(c) = grid.cell_diff(&alpha).iter().position(|&d| !(d > 0.0)) {
        return Err(Error::Inadmissible(format!(
            "alpha0 not increasing on cell {}",
            c + 1
        )));
    }
    // beta0 = (w_i - w_{i-1}) / (R_i - R_{i-1}) / A_i with w = alpha^{1/3}
    let w: Vec<f64> = alpha.iter().map(|a| a.cbrt()).collect();
    let beta = (1..=n)
        .map(|i| (w[i] - w[i - 1]) / (grid.x13[i] - grid.x13[i - 1]) / grid.face_a[i - 1])
        .collect();
    let gamma = w.iter().map(|x| x * x).collect();
    Ok(State {
        alpha,
        beta,
        gamma,
        v: vec![0.0; n + 1],
    })
}

/// Total energy: kinetic plus stored.
pub fn energy(
    grid: &StaggeredGrid,
    model: &StoredEnergyModel,
    state: &State,
) -> Result<f64, Error> {
    let (cells, verts) = energy_parts(grid, model, &state.alpha, &state.beta, &state.gamma)
        .ok_or_else(|| Error::Domain("state has a non-positive cell difference".into()))?;
    let kinetic: f64 = (0..=grid.n)
        .map(|k| grid.w_v[k] * 0.5 * state.v[k] * state.v[k])
        .sum();
    Ok(kinetic + verts.iter().sum::<f64>() + grid.h * cells.iter().sum::<f64>())
}

/// Cavity radius estimate: `alpha` extrapolated linearly from the first two
/// interior vertices to the origin, clamped at zero, then the cube root.
pub fn cavity_radius(state: &State) -> f64 {
    (2.0 * state.alpha[1] - state.alpha[2]).max(0.0).cbrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepDiagnostics {
    pub step: usize,
    pub t: f64,
    pub energy: f64,
    /// NaN for the initial row.
    pub max_entropy_defect: f64,
    /// NaN for the initial row.
    pub max_el_defect: f64,
    pub min_alpha_prime: f64,
    pub cavity_radius: f64,
    pub newton_iters: usize,
}

/// Parameters of a run that the time loop needs.
#[derive(Debug, Clone)]
pub struct RunSpec {
    pub model: StoredEnergyModel,
    pub n: usize,
    pub tau: f64,
    pub steps: usize,
    pub lambda: f64,
    pub preset: Preset,
    pub newton: NewtonOptions,
    /// Cells with midpoint below this are left out of the EL defect.
    pub el_window: f64,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub grid: StaggeredGrid,
    pub states: Vec<State>,
    pub diagnostics: Vec<StepDiagnostics>,
}

impl Trajectory {
    pub fn energies(&self) -> Vec<f64> {
        self.diagnostics.iter().map(|d| d.energy).collect()
    }
}

/// Result of [`run`]; on solver failure the trajectory holds every completed step.
#[derive(Debug)]
pub struct RunOutcome {
    pub trajectory: Trajectory,
    pub error: Option<Error>,
}

/// Diagnostics of one completed step.
pub fn step_diagnostics(
    grid: &StaggeredGrid,
    model: &StoredEnergyModel,
    state0: &State,
    new: &State,
    tau: f64,
    el_window: f64,
) -> Result<(f64, f64, f64), Error> {
    let e = energy(grid, model, new)?;
    let ent = entropy_defect(grid, model, state0, new, tau)?
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max);
    let el = el_residual(grid, model, state0, new, tau, el_window)?.max_defect;
    Ok((e, ent, el))
}

/// Advances the preset initial state by `steps` minimizing movements.
pub fn run(spec: &RunSpec) -> Result<RunOutcome, Error> {
    let grid = StaggeredGrid::new(spec.n)?;
    let s0 = init_state(&spec.preset, spec.lambda, &grid)?;
    let e0 = energy(&grid, &spec.model, &s0)?;
    let mut traj = Trajectory {
        diagnostics: vec![StepDiagnostics {
            step: 0,
            t: 0.0,
            energy: e0,
            max_entropy_defect: f64::NAN,
            max_el_defect: f64::NAN,
            min_alpha_prime: s0.min_alpha_prime(&grid),
            cavity_radius: cavity_radius(&s0),
            newton_iters: 0,
        }],
        states: vec![s0],
        grid,
    };
    for j in 1..=spec.steps {
        let prev = traj.states.last().unwrap();
        let res = minimize_step(&traj.grid, &spec.model, prev, spec.tau, None, &spec.newton)
            .and_then(|r| {
                let d = step_diagnostics(
                    &traj.grid,
                    &spec.model,
                    prev,
                    &r.state,
                    spec.tau,
                    spec.el_window,
                )?;
                Ok((r, d))
            });
        let (r, (e, ent, el)) = match res {
            Ok(x) => x,
            Err(err) => {
                return Ok(RunOutcome {
                    trajectory: traj,
                    error: Some(Error::AtStep {
                        step: j,
                        source: Box::new(err),
                    }),
                })
            }
        };
        traj.diagnostics.push(StepDiagnostics {
            step: j,
            t: j as f64 * spec.tau,
            energy: e,
            max_entropy_defect: ent,
            max_el_defect: el,
            min_alpha_prime: r.state.min_alpha_prime(&traj.grid),
            cavity_radius: cavity_radius(&r.state),
            newton_iters: r.iterations,
        });
        traj.states.push(r.state);
    }
    Ok(RunOutcome {
        trajectory: traj,
        error: None,
    })
}

/// One-step defects at one grid size.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceLevel {
    pub n: usize,
    pub el_defect: f64,
    pub max_entropy_defect: f64,
}

/// Energy dissipated over a fixed horizon at one time step.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeLevel {
    pub tau: f64,
    pub steps: usize,
    pub dissipation: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Refinement {
    pub space: Vec<SpaceLevel>,
    pub el_orders: Vec<f64>,
    /// Smallest `C` with `max entropy defect <= C h^2` on every level.
    pub entropy_constant: f64,
    pub time: Vec<TimeLevel>,
    /// Ratios of successive dissipations; about 2 for a first-order scheme.
    pub dissipation_ratios: Vec<f64>,
}

/// Grid refinement of the EL and entropy defects after one step from the
/// preset, and time refinement of the energy dissipated over
/// `horizon_steps * spec.tau` at grid size `spec.n`.
pub fn refinement_study(
    spec: &RunSpec,
    levels: &[usize],
    halvings: usize,
    horizon_steps: usize,
) -> Result<Refinement, Error> {
    let mut space = Vec::new();
    for &n in levels {
        let grid = StaggeredGrid::new(n)?;
        let s0 = init_state(&spec.preset, spec.lambda, &grid)?;
        let r = minimize_step(&grid, &spec.model, &s0, spec.tau, None, &spec.newton)?;
        let (_, ent, el) =
            step_diagnostics(&grid, &spec.model, &s0, &r.state, spec.tau, spec.el_window)?;
        space.push(SpaceLevel {
            n,
            el_defect: el,
            max_entropy_defect: ent,
        });
    }
    let el: Vec<f64> = space.iter().map(|l| l.el_defect).collect();
    let entropy_constant = space
        .iter()
        .map(|l| l.max_entropy_defect.max(0.0) * (l.n * l.n) as f64)
        .fold(0.0, f64::max);

    let mut time = Vec::new();
    for k in 0..=halvings {
        let scale = 1usize << k;
        let sub = RunSpec {
            tau: spec.tau / scale as f64,
            steps: horizon_steps * scale,
            ..spec.clone()
        };
        let out = run(&sub)?;
        if let Some(e) = out.error {
            return Err(e);
        }
        let e = out.trajectory.energies();
        time.push(TimeLevel {
            tau: sub.tau,
            steps: sub.steps,
            dissipation: e[0] - e[e.len() - 1],
        });
    }
    let dissipation_ratios = time
        .windows(2)
        .map(|w| w[0].dissipation / w[1].dissipation)
        .collect();
    Ok(Refinement {
        el_orders: crate::grid::observed_orders(&el),
        space,
        entropy_constant,
        time,
        dissipation_ratios,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(preset: Preset, lambda: f64, n: usize, steps: usize) -> RunSpec {
        RunSpec {
            model: StoredEnergyModel::default(),
            n,
            tau: 1e-3,
            steps,
            lambda,
            preset,
            newton: NewtonOptions::default(),
            el_window: 0.25,
        }
    }

    #[test]
    fn homogeneous_energy_is_eight() {
        let grid = StaggeredGrid::new(32).unwrap();
        let s = init_state(&Preset::Homogeneous, 1.0, &grid).unwrap();
        let e = energy(&grid, &StoredEnergyModel::default(), &s).unwrap();
        assert!((e - 8.0).abs() < 1e-12, "{e}");
    }

    #[test]
    fn constant_velocity_adds_kinetic_energy() {
        let grid = StaggeredGrid::new(32).unwrap();
        let mut s = init_state(&Preset::Homogeneous, 1.0, &grid).unwrap();
        s.v.iter_mut().for_each(|v| *v = 0.3);
        let e = energy(&grid, &StoredEnergyModel::default(), &s).unwrap();
        assert!((e - 8.0 - 0.045).abs() < 1e-12, "{e}");
    }

    #[test]
    fn homogeneous_stretch_two_has_unit_ratio_beta() {
        let grid = StaggeredGrid::new(16).unwrap();
        let s = init_state(&Preset::Homogeneous, 2.0, &grid).unwrap();
        for c in 0..16 {
            assert!((grid.face_a[c] * s.beta[c] - 2.0).abs() < 1e-12);
        }
        for k in 1..=16 {
            assert!((s.alpha[k] / grid.x[k] - 8.0).abs() < 1e-12);
        }
    }

    #[test]
    fn presets_are_admissible() {
        let grid = StaggeredGrid::new(64).unwrap();
        for p in [
            Preset::Perturbed {
                epsilon: 0.05,
                modes: 0,
                seed: 0,
            },
            Preset::Perturbed {
                epsilon: 0.05,
                modes: 4,
                seed: 7,
            },
            Preset::CompressedCore { core: 0.2 },
            Preset::Expression("lambda_b * rho * (1 + 0.1 * rho * (1 - rho))".into()),
        ] {
            let s = init_state(&p, 1.0, &grid).unwrap();
            assert!(s.min_alpha_prime(&grid) > 0.0, "{p:?}");
        }
    }

    #[test]
    fn inadmissible_presets_are_rejected() {
        let grid = StaggeredGrid::new(16).unwrap();
        let cavity = Preset::Expression("0.1 + (lambda_b - 0.1) * rho".into());
        assert!(matches!(
            init_state(&cavity, 1.0, &grid),
            Err(Error::Inadmissible(_))
        ));
        let folded = Preset::Perturbed {
            epsilon: 3.0,
            modes: 0,
            seed: 0,
        };
        assert!(matches!(
            init_state(&folded, 1.0, &grid),
            Err(Error::Inadmissible(_))
        ));
        let wrong_end = Preset::Expression("rho".into());
        assert!(init_state(&wrong_end, 2.0, &grid).is_err());
        assert!(init_state(&Preset::Expression("rho +".into()), 1.0, &grid).is_err());
    }

    #[test]
    fn homogeneous_run_stays_put() {
        let out = run(&spec(Preset::Homogeneous, 1.0, 16, 3)).unwrap();
        assert!(out.error.is_none());
        for d in &out.trajectory.diagnostics {
            assert!((d.energy - 8.0).abs() < 1e-12);
        }
        assert!(out.trajectory.states.iter().all(|s| s.max_speed() <= 1e-10));
    }

    #[test]
    fn perturbed_run_dissipates() {
        let out = run(&spec(
            Preset::Perturbed {
                epsilon: 0.05,
                modes: 0,
                seed: 0,
            },
            1.0,
            32,
            10,
        ))
        .unwrap();
        let e = out.trajectory.energies();
        assert!(e.windows(2).all(|w| w[1] < w[0]), "{e:?}");
    }

    #[test]
    fn refinement_reports_orders_and_first_order_dissipation() {
        let s = spec(
            Preset::Perturbed {
                epsilon: 0.05,
                modes: 0,
                seed: 0,
            },
            1.0,
            32,
            1,
        );
        let r = refinement_study(&s, &[16, 32, 64], 1, 5).unwrap();
        assert_eq!(r.space.len(), 3);
        assert!(r.el_orders.iter().all(|&o| o > 1.5), "{:?}", r.el_orders);
        assert_eq!(r.time[1].steps, 10);
        assert!(r.time.iter().all(|l| l.dissipation > 0.0));
        assert!(
            (r.dissipation_ratios[0] - 2.0).abs() < 0.2,
            "{:?}",
            r.dissipation_ratios
        );
    }
}
