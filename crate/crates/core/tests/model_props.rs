use proptest::prelude::*;
use radelast::kinematics::{
    from_rho_frame, gamma_from_alpha, omega, to_rho_frame, xi_assemble, GammaTriple,
};
use radelast::{StoredEnergyModel, Xi};

fn xi_strategy() -> impl Strategy<Value = (Xi, f64)> {
    (
        prop::array::uniform6(-2.0f64..2.0),
        0.1f64..3.0,
        0.05f64..1.0,
    )
        .prop_map(|(a, d, rho)| ([a[0], a[1], a[2], a[3], a[4], a[5], d], rho))
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

proptest! {
    #[test]
    fn reduced_energy_is_midpoint_convex((a, rho) in xi_strategy(), (b, _) in xi_strategy()) {
        let m = StoredEnergyModel::default();
        let mid: Xi = std::array::from_fn(|i| 0.5 * (a[i] + b[i]));
        let defect = 0.5 * (m.eval_g(&a, rho).unwrap() + m.eval_g(&b, rho).unwrap()) - m.eval_g(&mid, rho).unwrap();
        prop_assert!(defect >= -1e-12, "defect {defect:e}");
    }

    #[test]
    fn gradient_and_hessian_match_differences((xi, rho) in xi_strategy()) {
        let m = StoredEnergyModel::default();
        let g = m.grad_g(&xi, rho).unwrap();
        let hd = m.hess_g_diag(&xi, rho).unwrap();
        for i in 0..7 {
            let d = 1e-6 * xi[i].abs().max(1e-2);
            let (mut p, mut q) = (xi, xi);
            p[i] += d;
            q[i] -= d;
            let fd = (m.eval_g(&p, rho).unwrap() - m.eval_g(&q, rho).unwrap()) / (2.0 * d);
            prop_assert!(rel(fd, g[i]) < 1e-6, "grad {i}: {fd} vs {}", g[i]);
            let fd2 = (m.grad_g(&p, rho).unwrap()[i] - m.grad_g(&q, rho).unwrap()[i]) / (2.0 * d);
            prop_assert!(rel(fd2, hd[i]) < 1e-6, "hess {i}: {fd2} vs {}", hd[i]);
            prop_assert!(hd[i] >= 0.0);
        }
    }

    #[test]
    fn stretch_product_is_the_volume_derivative(alpha in 0.01f64..5.0, ap in 0.01f64..5.0, rho in 0.01f64..1.0) {
        let v = gamma_from_alpha(alpha, ap, rho).unwrap();
        prop_assert!(rel(v.det(), ap) < 1e-13);
        prop_assert_eq!(v.0[1], v.0[2]);
    }

    #[test]
    fn energy_of_omega_is_energy_of_stretches(v in prop::array::uniform3(0.1f64..3.0), rho in 0.01f64..1.0) {
        let m = StoredEnergyModel::default();
        let w = m.eval_g(&omega(&GammaTriple(v), rho), rho).unwrap();
        prop_assert!(rel(w, m.eval_stretches(v)) < 1e-12);
    }

    #[test]
    fn assembled_xi_matches_omega_for_radial_states(alpha in 0.01f64..5.0, ap in 0.01f64..5.0, rho in 0.01f64..1.0) {
        let gamma = alpha.powf(2.0 / 3.0);
        let beta = ap / alpha.powf(2.0 / 3.0);
        let gp = 2.0 / 3.0 * ap / alpha.cbrt();
        let xi = xi_assemble(alpha, beta, gamma, ap, gp, rho);
        let om = omega(&gamma_from_alpha(alpha, ap, rho).unwrap(), rho);
        for i in 0..7 {
            prop_assert!(rel(xi[i], om[i]) < 1e-12, "entry {}: {} vs {}", i + 1, xi[i], om[i]);
        }
    }

    #[test]
    fn psi_is_phi_of_cube_root(x in 1e-3f64..1e3, p in 1.0f64..3.0) {
        let m = StoredEnergyModel::power(p, 2.0, 1.0, 1.0, 2.0, 1.0);
        prop_assert!(rel(m.psi.value(x), m.phi.value(x.cbrt())) < 1e-12);
    }

    #[test]
    fn rho_frame_round_trip(steps in prop::collection::vec(0.01f64..1.0, 2..20)) {
        let r: Vec<f64> = (1..=steps.len()).map(|k| k as f64 / steps.len() as f64).collect();
        let w: Vec<f64> = steps.iter().scan(0.0, |s, d| { *s += d; Some(*s) }).collect();
        let p = to_rho_frame(&r, &w).unwrap();
        let (r2, w2) = from_rho_frame(&p);
        for k in 0..r.len() {
            prop_assert!(rel(r[k], r2[k]) < 1e-14 && rel(w[k], w2[k]) < 1e-14);
        }
    }
}

#[test]
fn degenerate_volume_is_rejected() {
    let m = StoredEnergyModel::default();
    assert!(m.eval_g(&[1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 0.0], 0.5).is_err());
    assert!(gamma_from_alpha(0.0, 1.0, 0.5).is_err());
}
