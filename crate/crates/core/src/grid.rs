//! Uniform meshes on the volume coordinate `rho in (0, 1]`.
//!
//! [`GridSpec`] is a node set with quadrature weights and a three-point derivative;
//! it is used for identity checks and post-processing. [`StaggeredGrid`] is the
//! mesh of the time stepper: velocities and positions on vertices `k/N`, the
//! stretch field `beta` on cells whose midpoints are the cell-centered nodes.

use serde::{Deserialize, Serialize};

use crate::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Midpoints `(i - 1/2)/N` plus a boundary node at 1.
    CellCentered,
    /// `i/N` for `i = 1..N`.
    ShiftedUniform,
}

impl std::str::FromStr for Scheme {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "cell_centered" => Ok(Scheme::CellCentered),
            "shifted_uniform" => Ok(Scheme::ShiftedUniform),
            _ => Err(format!("unknown grid scheme {s:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub n: usize,
    pub scheme: Scheme,
    /// Strictly increasing in `(0, 1]`; the last node is `rho = 1`.
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    /// `rho^{1/3}` per node.
    pub r13: Vec<f64>,
    /// `rho^{2/3}` per node.
    pub r23: Vec<f64>,
}

impl GridSpec {
    pub fn new(n: usize, scheme: Scheme) -> Result<Self, Error> {
        if n < 4 {
            return Err(Error::Grid(format!("N = {n} is below the minimum of 4")));
        }
        let h = 1.0 / n as f64;
        let (nodes, weights) = match scheme {
            Scheme::CellCentered => {
                let mut nodes: Vec<f64> = (1..=n).map(|i| (i as f64 - 0.5) * h).collect();
                nodes.push(1.0);
                let mut w = vec![h; n];
                w.push(0.0);
                (nodes, w)
            }
            Scheme::ShiftedUniform => {
                let nodes: Vec<f64> = (1..=n).map(|i| i as f64 * h).collect();
                // trapezoid on [h, 1] plus linear extrapolation on [0, h]
                let mut w = vec![h; n];
                w[0] = 2.0 * h;
                w[1] = 0.5 * h;
                w[n - 1] = 0.5 * h;
                (nodes, w)
            }
        };
        let r13: Vec<f64> = nodes.iter().map(|x| x.cbrt()).collect();
        let r23 = r13.iter().map(|x| x * x).collect();
        Ok(GridSpec {
            n,
            scheme,
            nodes,
            weights,
            r13,
            r23,
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Largest node spacing.
    pub fn spacing(&self) -> f64 {
        1.0 / self.n as f64
    }

    pub fn integrate(&self, f: &[f64]) -> f64 {
        self.weights.iter().zip(f).map(|(w, x)| w * x).sum()
    }

    /// Three-point derivative: centered in the interior, one-sided at both ends.
    /// Exact on quadratics, second order on smooth functions.
    pub fn ddr(&self, f: &[f64]) -> Vec<f64> {
        let x = &self.nodes;
        let n = x.len();
        let mut d = vec![0.0; n];
        for i in 0..n {
            let c = i.clamp(1, n - 2);
            d[i] = lagrange3_slope([x[c - 1], x[c], x[c + 1]], [f[c - 1], f[c], f[c + 1]], x[i]);
        }
        d
    }
}

/// Derivative at `t` of the quadratic through three points.
fn lagrange3_slope(x: [f64; 3], f: [f64; 3], t: f64) -> f64 {
    let [x0, x1, x2] = x;
    let w0 = ((t - x1) + (t - x2)) / ((x0 - x1) * (x0 - x2));
    let w1 = ((t - x0) + (t - x2)) / ((x1 - x0) * (x1 - x2));
    let w2 = ((t - x0) + (t - x1)) / ((x2 - x0) * (x2 - x1));
    w0 * f[0] + w1 * f[1] + w2 * f[2]
}

/// `log2(e_k / e_{k+1})` for errors under successive grid doubling.
pub fn observed_orders(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

/// Mesh of the time stepper.
///
/// Vertices `x_k = k/N`, `k = 0..=N`; cell `i` (1-based, `i = 1..=N`) spans
/// `[x_{i-1}, x_i]`. The metric factors are the divided differences of the
/// cube-root map, so that for the exact profile of a homogeneous stretch every
/// discrete argument of the stored energy is exact.
#[derive(Debug, Clone, PartialEq)]
pub struct StaggeredGrid {
    pub n: usize,
    pub h: f64,
    /// Vertex positions, length `N + 1`.
    pub x: Vec<f64>,
    pub x13: Vec<f64>,
    pub x23: Vec<f64>,
    /// Cell midpoints, length `N`; `mid[i - 1]` is cell `i`.
    pub mid: Vec<f64>,
    /// Discrete `rho^{2/3}` on cells: `h / (3 (R_i - R_{i-1}))`.
    pub face_a: Vec<f64>,
    /// Discrete `rho^{1/3}` on cells: `2h / (3 (R_i^2 - R_{i-1}^2))`.
    pub face_c: Vec<f64>,
    /// Vertex weight of the `psi` terms.
    pub w_psi: Vec<f64>,
    /// Vertex weight of the `g(gamma / rho^{2/3})` term.
    pub w_g: Vec<f64>,
    /// Vertex weight of the kinetic energy (trapezoid).
    pub w_v: Vec<f64>,
}

impl StaggeredGrid {
    pub fn new(n: usize) -> Result<Self, Error> {
        if n < 4 {
            return Err(Error::Grid(format!("N = {n} is below the minimum of 4")));
        }
        let h = 1.0 / n as f64;
        let x: Vec<f64> = (0..=n).map(|k| k as f64 * h).collect();
        let x13: Vec<f64> = x.iter().map(|v| v.cbrt()).collect();
        let x23: Vec<f64> = x13.iter().map(|v| v * v).collect();
        let mid = (1..=n).map(|i| (i as f64 - 0.5) * h).collect();
        let face_a: Vec<f64> = (1..=n).map(|i| h / (3.0 * (x13[i] - x13[i - 1]))).collect();
        let face_c: Vec<f64> = (1..=n)
            .map(|i| 2.0 * h / (3.0 * (x23[i] - x23[i - 1])))
            .collect();

        // Interior vertex weights balance the cell stresses of a homogeneous
        // stretch; the boundary vertex takes the remainder so each family sums to 1.
        let mut w_psi = vec![0.0; n + 1];
        let mut w_g = vec![0.0; n + 1];
        for k in 1..n {
            w_psi[k] = 1.5 * x13[k] * (face_a[k] - face_a[k - 1]);
            w_g[k] = 3.0 * x23[k] * (face_c[k] - face_c[k - 1]);
        }
        w_psi[n] = 1.0 - w_psi.iter().sum::<f64>();
        w_g[n] = 1.0 - w_g.iter().sum::<f64>();
        let mut w_v = vec![h; n + 1];
        w_v[0] = 0.5 * h;
        w_v[n] = 0.5 * h;
        Ok(StaggeredGrid {
            n,
            h,
            x,
            x13,
            x23,
            mid,
            face_a,
            face_c,
            w_psi,
            w_g,
            w_v,
        })
    }

    /// Cell differences `(f_i - f_{i-1}) / h`, length `N`.
    pub fn cell_diff(&self, f: &[f64]) -> Vec<f64> {
        f.windows(2).map(|w| (w[1] - w[0]) / self.h).collect()
    }

    /// Vertex-centered values of a cell field: averages of neighbours inside,
    /// nearest cell at the origin and linear extrapolation at `rho = 1`.
    pub fn cells_to_vertices(&self, c: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut v = Vec::with_capacity(n + 1);
        v.push(c[0]);
        for k in 1..n {
            v.push(0.5 * (c[k - 1] + c[k]));
        }
        v.push(1.5 * c[n - 1] - 0.5 * c[n - 2]);
        v
    }
}
