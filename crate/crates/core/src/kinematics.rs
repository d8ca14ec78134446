//! Volume-coordinate kinematics.
//!
//! With `rho = R^3` and `alpha = w^3` the radial deformation `w(R)` is described by
//! `alpha(rho)`. The principal stretches, the null-Lagrangian map `omega` and the
//! reduced strain vector are all closed-form in `(alpha, alpha', rho)`.

use crate::grid::{GridSpec, Scheme};
use crate::stored_energy::Xi;
use crate::Error;

/// Principal stretches `(v1, v2, v3)` in volume coordinates. Radial states have `v2 == v3`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaTriple(pub [f64; 3]);

impl GammaTriple {
    pub fn det(&self) -> f64 {
        self.0[0] * self.0[1] * self.0[2]
    }
}

/// Partials `d omega^i / d v_j`, row `i`, column `j`.
pub type OmegaJacobian = [[f64; 3]; 7];

/// Samples of a radial profile on the volume coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct RhoProfile {
    pub rho: Vec<f64>,
    pub alpha: Vec<f64>,
    pub gamma: Vec<f64>,
}

/// Maps samples `w(R)` to `alpha(rho) = w^3`, `gamma = alpha^{2/3}` at `rho = R^3`.
pub fn to_rho_frame(r: &[f64], w: &[f64]) -> Result<RhoProfile, Error> {
    if r.len() != w.len() {
        return Err(Error::Domain("R and w sample counts differ".into()));
    }
    if let Some(&bad) = w.iter().find(|&&x| x < 0.0) {
        return Err(Error::Domain(format!("negative radius {bad}")));
    }
    for k in 1..w.len() {
        if !(w[k] > w[k - 1]) || !(r[k] > r[k - 1]) {
            return Err(Error::Domain(format!(
                "profile not increasing at sample {k}"
            )));
        }
    }
    Ok(RhoProfile {
        rho: r.iter().map(|x| x * x * x).collect(),
        alpha: w.iter().map(|x| x * x * x).collect(),
        gamma: w.iter().map(|x| x * x).collect(),
    })
}

/// Inverse of [`to_rho_frame`]: returns `(R, w)`.
pub fn from_rho_frame(p: &RhoProfile) -> (Vec<f64>, Vec<f64>) {
    (
        p.rho.iter().map(|x| x.cbrt()).collect(),
        p.alpha.iter().map(|x| x.cbrt()).collect(),
    )
}

/// Stretches `(alpha' (rho/alpha)^{2/3}, (alpha/rho)^{1/3}, (alpha/rho)^{1/3})`.
pub fn gamma_from_alpha(alpha: f64, alpha_prime: f64, rho: f64) -> Result<GammaTriple, Error> {
    if !(alpha > 0.0) {
        return Err(Error::Domain(format!("alpha = {alpha} must be positive")));
    }
    let s = (alpha / rho).cbrt();
    Ok(GammaTriple([alpha_prime / (s * s), s, s]))
}

/// Reduced strain vector from the four fields and the derivatives of `alpha`, `gamma`.
pub fn xi_assemble(
    alpha: f64,
    beta: f64,
    gamma: f64,
    alpha_prime: f64,
    gamma_prime: f64,
    rho: f64,
) -> Xi {
    let r13 = rho.cbrt();
    let r23 = r13 * r13;
    let a = alpha / rho;
    let s = 1.5 * gamma_prime * r23;
    [beta * r23, a, a, gamma / r13, s, s, alpha_prime * r23]
}

/// `omega(V; rho) = (v1, v2^3, v3^3, v2 v3 R, v1 v3 R, v1 v2 R, v1 v2 v3 R^2)` with `R = rho^{1/3}`.
pub fn omega(v: &GammaTriple, rho: f64) -> [f64; 7] {
    let [v1, v2, v3] = v.0;
    let r13 = rho.cbrt();
    [
        v1,
        v2 * v2 * v2,
        v3 * v3 * v3,
        v2 * v3 * r13,
        v1 * v3 * r13,
        v1 * v2 * r13,
        v1 * v2 * v3 * r13 * r13,
    ]
}

pub fn omega_jacobian(v: &GammaTriple, rho: f64) -> OmegaJacobian {
    let [v1, v2, v3] = v.0;
    let r13 = rho.cbrt();
    let r23 = r13 * r13;
    [
        [1.0, 0.0, 0.0],
        [0.0, 3.0 * v2 * v2, 0.0],
        [0.0, 0.0, 3.0 * v3 * v3],
        [0.0, v3 * r13, v2 * r13],
        [v3 * r13, 0.0, v1 * r13],
        [v2 * r13, v1 * r13, 0.0],
        [v2 * v3 * r23, v1 * v3 * r23, v1 * v2 * r23],
    ]
}

/// Rows of omega whose first column is not identically zero.
pub const TRANSPORTED: [usize; 4] = [1, 5, 6, 7];

fn check_index(index: usize) -> Result<usize, Error> {
    if TRANSPORTED.contains(&index) {
        Ok(index - 1)
    } else {
        Err(Error::Domain(format!(
            "null-Lagrangian index {index} not in {{1,5,6,7}}"
        )))
    }
}

/// Discrete residual of
/// `-3 rho^{2/3} d/drho (omega^i_{,1}) + rho^{-1/3} (omega^i_{,2} + omega^i_{,3})`
/// evaluated on every grid node, with `alpha'` and the outer derivative taken by
/// [`GridSpec::ddr`]. `index` is 1-based.
pub fn null_lagrangian_residual(
    grid: &GridSpec,
    alpha: &[f64],
    index: usize,
) -> Result<Vec<f64>, Error> {
    let row = check_index(index)?;
    if row == 0 {
        return Ok(vec![0.0; grid.len()]);
    }
    let ap = grid.ddr(alpha);
    let mut first = Vec::with_capacity(grid.len());
    let mut rest = Vec::with_capacity(grid.len());
    for k in 0..grid.len() {
        let rho = grid.nodes[k];
        let g = gamma_from_alpha(alpha[k], ap[k], rho)?;
        let j = omega_jacobian(&g, rho);
        first.push(j[row][0]);
        rest.push(j[row][1] + j[row][2]);
    }
    let d = grid.ddr(&first);
    Ok((0..grid.len())
        .map(|k| -3.0 * grid.r23[k] * d[k] + rest[k] / grid.r13[k])
        .collect())
}

/// Residual of the transport identity `d/dt omega^i = 3 rho^{2/3} d/drho(omega^i_{,1} v)`
/// for a path `alpha(rho, t)` with velocity `v = d/dt alpha^{1/3}`.
///
/// The time derivative is a centered difference with step `dt`; spatial derivatives
/// use [`GridSpec::ddr`].
pub fn transport_residual(
    grid: &GridSpec,
    alpha: impl Fn(f64, f64) -> f64,
    velocity: impl Fn(f64, f64) -> f64,
    t: f64,
    dt: f64,
    index: usize,
) -> Result<Vec<f64>, Error> {
    let row = check_index(index)?;
    let omega_at = |time: f64| -> Result<(Vec<f64>, Vec<f64>), Error> {
        let a: Vec<f64> = grid.nodes.iter().map(|&r| alpha(r, time)).collect();
        let ap = grid.ddr(&a);
        let mut om = Vec::with_capacity(a.len());
        let mut flux = Vec::with_capacity(a.len());
        for k in 0..a.len() {
            let rho = grid.nodes[k];
            let g = gamma_from_alpha(a[k], ap[k], rho)?;
            om.push(omega(&g, rho)[row]);
            flux.push(omega_jacobian(&g, rho)[row][0] * velocity(rho, time));
        }
        Ok((om, flux))
    };
    let (plus, _) = omega_at(t + dt)?;
    let (minus, _) = omega_at(t - dt)?;
    let (_, flux) = omega_at(t)?;
    let dflux = grid.ddr(&flux);
    Ok((0..grid.len())
        .map(|k| (plus[k] - minus[k]) / (2.0 * dt) - 3.0 * grid.r23[k] * dflux[k])
        .collect())
}

/// Errors of one identity over a sequence of grids.
#[derive(Debug, Clone, PartialEq)]
pub struct IdentityRow {
    pub label: String,
    pub errors: Vec<f64>,
    pub orders: Vec<f64>,
}

/// Test profile of the null-Lagrangian study.
pub fn study_profile(rho: f64) -> f64 {
    rho + 0.1 * rho * rho
}

/// Max-norm residuals of the null-Lagrangian identities (on the profile
/// [`study_profile`]) and of the transport identities (on the path
/// `alpha = rho (1 + t rho / 10)^3` at `t = 1/2`, whose velocity is
/// `rho^{4/3} / 10`), over nodes with `rho >= window`.
pub fn identity_study(
    levels: &[usize],
    scheme: Scheme,
    window: f64,
) -> Result<Vec<IdentityRow>, Error> {
    let grids: Vec<GridSpec> = levels
        .iter()
        .map(|&n| GridSpec::new(n, scheme))
        .collect::<Result<_, _>>()?;
    let windowed = |g: &GridSpec, r: Vec<f64>| {
        r.iter()
            .zip(&g.nodes)
            .filter(|(_, &x)| x >= window)
            .fold(0.0f64, |m, (e, _)| m.max(e.abs()))
    };
    let mut rows = Vec::new();
    for index in TRANSPORTED {
        let mut errors = Vec::new();
        for g in &grids {
            let alpha: Vec<f64> = g.nodes.iter().map(|&r| study_profile(r)).collect();
            errors.push(windowed(g, null_lagrangian_residual(g, &alpha, index)?));
        }
        let orders = crate::grid::observed_orders(&errors);
        rows.push(IdentityRow {
            label: format!("null-Lagrangian {index}"),
            errors,
            orders,
        });
    }
    let path = |r: f64, t: f64| r * (1.0 + 0.1 * t * r).powi(3);
    let vel = |r: f64, _t: f64| 0.1 * r * r.cbrt();
    for index in TRANSPORTED {
        let mut errors = Vec::new();
        for g in &grids {
            let res = transport_residual(g, path, vel, 0.5, g.spacing(), index)?;
            errors.push(windowed(g, res));
        }
        let orders = crate::grid::observed_orders(&errors);
        rows.push(IdentityRow {
            label: format!("transport {index}"),
            errors,
            orders,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stored_energy::StoredEnergyModel;

    #[test]
    fn identity_and_homogeneous_stretches() {
        assert_eq!(gamma_from_alpha(0.3, 1.0, 0.3).unwrap().0, [1.0, 1.0, 1.0]);
        let g = gamma_from_alpha(8.0 * 0.4, 8.0, 0.4).unwrap().0;
        for v in g {
            assert!((v - 2.0).abs() < 1e-14);
        }
        assert!(gamma_from_alpha(0.0, 1.0, 0.5).is_err());
    }

    #[test]
    fn omega_jacobian_at_identity() {
        let j = omega_jacobian(&GammaTriple([1.0; 3]), 1.0);
        let col: Vec<f64> = j.iter().map(|r| r[0]).collect();
        assert_eq!(col, vec![1.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
        assert_eq!(j[1][1], 3.0);
    }

    #[test]
    fn omega_jacobian_matches_differences() {
        let v = GammaTriple([1.3, 0.7, 0.9]);
        let rho = 0.37;
        let j = omega_jacobian(&v, rho);
        let e = 1e-6;
        for c in 0..3 {
            let mut p = v;
            let mut m = v;
            p.0[c] += e;
            m.0[c] -= e;
            let (op, om) = (omega(&p, rho), omega(&m, rho));
            for r in 0..7 {
                let fd = (op[r] - om[r]) / (2.0 * e);
                assert!((fd - j[r][c]).abs() <= 1e-8 * (1.0 + j[r][c].abs()));
            }
        }
    }

    #[test]
    fn homogeneous_xi() {
        let rho: f64 = 0.216;
        let r13 = rho.cbrt();
        let xi = xi_assemble(rho, 1.0 / (r13 * r13), r13 * r13, 1.0, 2.0 / 3.0 / r13, rho);
        let expect = [1.0, 1.0, 1.0, r13, r13, r13, r13 * r13];
        for k in 0..7 {
            assert!((xi[k] - expect[k]).abs() < 1e-14, "{k}");
        }
    }

    #[test]
    fn xi_energy_equals_stretch_energy() {
        let m = StoredEnergyModel::default();
        let (alpha, ap, rho) = (0.5f64, 1.7f64, 0.4f64);
        let beta = ap / alpha.powf(2.0 / 3.0);
        let gamma = alpha.powf(2.0 / 3.0);
        let gp = 2.0 / 3.0 * ap / alpha.cbrt();
        let xi = xi_assemble(alpha, beta, gamma, ap, gp, rho);
        let g = gamma_from_alpha(alpha, ap, rho).unwrap();
        let a = m.eval_g(&xi, rho).unwrap();
        let b = m.eval_stretches(g.0);
        assert!((a - b).abs() <= 1e-12 * b.abs());
    }

    #[test]
    fn rho_frame_round_trip() {
        let r: Vec<f64> = (1..=10).map(|k| k as f64 / 10.0).collect();
        let w: Vec<f64> = r.iter().map(|x| 2.0 * x).collect();
        let p = to_rho_frame(&r, &w).unwrap();
        for k in 0..r.len() {
            assert!((p.alpha[k] - 8.0 * p.rho[k]).abs() < 1e-14);
        }
        let (r2, w2) = from_rho_frame(&p);
        for k in 0..r.len() {
            assert!((r2[k] - r[k]).abs() < 1e-14 && (w2[k] - w[k]).abs() < 1e-14);
        }
        let mut bad = w.clone();
        bad[3] = bad[2];
        assert!(to_rho_frame(&r, &bad).is_err());
    }

    #[test]
    fn first_index_residual_is_zero() {
        let grid = GridSpec::new(16, Scheme::CellCentered).unwrap();
        let a: Vec<f64> = grid.nodes.iter().map(|r| r + 0.3 * r * r).collect();
        assert!(null_lagrangian_residual(&grid, &a, 1)
            .unwrap()
            .iter()
            .all(|&x| x == 0.0));
        assert!(null_lagrangian_residual(&grid, &a, 2).is_err());
    }

    #[test]
    fn identities_converge_at_second_order_away_from_origin() {
        for scheme in [Scheme::CellCentered, Scheme::ShiftedUniform] {
            let rows = identity_study(&[32, 64, 128], scheme, 0.25).unwrap();
            assert!(rows[0].errors.iter().all(|&e| e == 0.0));
            for row in &rows[1..] {
                assert!(row.orders.iter().all(|&p| p >= 1.9), "{scheme:?} {row:?}");
            }
        }
    }
}
