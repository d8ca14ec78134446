//! Polyconvex stored energy in the radial reduction.
//!
//! The energy is a sum of convex scalar pieces `phi`, `psi`, `g`, `h` applied to
//! the entries of the reduced strain vector; see [`StoredEnergyModel::eval_g`]
//! for the scaling of each argument in the volume coordinate.

use std::fmt;

use crate::Error;

/// Number of entries in the reduced strain vector.
pub const XI_LEN: usize = 7;

/// Reduced strain vector: stretch, area and volume measures in volume coordinates.
///
/// Entries 2/3 and 5/6 coincide for radial states.
pub type Xi = [f64; XI_LEN];

/// A scalar convex building block with closed-form derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Component {
    /// `c |x|^e`
    Power { c: f64, e: f64 },
    /// `c x^n`, signed. Used to build models that violate convexity in tests.
    Monomial { c: f64, n: i32 },
    /// `a d^r + b d^{-s}` on `d > 0`.
    Barrier { a: f64, r: f64, b: f64, s: f64 },
}

impl Component {
    /// Value and first two derivatives at `x`.
    pub fn eval(&self, x: f64) -> (f64, f64, f64) {
        match *self {
            Component::Power { c, e } => {
                let ax = x.abs();
                if ax == 0.0 {
                    let d2 = if e == 2.0 {
                        2.0 * c
                    } else if e < 2.0 {
                        f64::INFINITY
                    } else {
                        0.0
                    };
                    return (0.0, 0.0, d2);
                }
                let v = c * ax.powf(e);
                (v, e * v / x, e * (e - 1.0) * v / (x * x))
            }
            Component::Monomial { c, n } => {
                let nf = n as f64;
                let v = c * x.powi(n);
                let d1 = if n >= 1 { c * nf * x.powi(n - 1) } else { 0.0 };
                let d2 = if n >= 2 {
                    c * nf * (nf - 1.0) * x.powi(n - 2)
                } else {
                    0.0
                };
                (v, d1, d2)
            }
            Component::Barrier { a, r, b, s } => {
                let up = a * x.powf(r);
                let down = b * x.powf(-s);
                (
                    up + down,
                    (r * up - s * down) / x,
                    (r * (r - 1.0) * up + s * (s + 1.0) * down) / (x * x),
                )
            }
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        self.eval(x).0
    }

    pub fn d1(&self, x: f64) -> f64 {
        self.eval(x).1
    }

    pub fn d2(&self, x: f64) -> f64 {
        self.eval(x).2
    }
}

impl fmt::Display for Component {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Component::Power { c, e } => write!(f, "{c}|x|^{e}"),
            Component::Monomial { c, n } => write!(f, "{c}x^{n}"),
            Component::Barrier { a, r, b, s } => write!(f, "{a}d^{r} + {b}d^-{s}"),
        }
    }
}

/// Selects one of the four scalar functions of a model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Which {
    Phi,
    Psi,
    G,
    H,
}

impl Which {
    pub fn parse(s: &str) -> Option<Which> {
        match s {
            "phi" => Some(Which::Phi),
            "psi" => Some(Which::Psi),
            "g" => Some(Which::G),
            "h" => Some(Which::H),
            _ => None,
        }
    }
}

/// The quadruple `(phi, psi, g, h)` with growth exponents.
///
/// `psi` is kept as its own closed form and should agree with `phi(x^{1/3})`
/// for `x > 0`; the auditor checks this.
#[derive(Debug, Clone, PartialEq)]
pub struct StoredEnergyModel {
    pub phi: Component,
    pub psi: Component,
    pub g: Component,
    pub h: Component,
    /// Growth exponent of `psi` (so `phi` grows like `|x|^{3p}`).
    pub p: f64,
    /// Growth exponent of `g`.
    pub q: f64,
    pub c1: f64,
    pub c2: f64,
}

impl Default for StoredEnergyModel {
    /// `phi = x^6`, `psi = x^2`, `g = x^2`, `h = d^2 + 1/d`.
    fn default() -> Self {
        StoredEnergyModel::power(2.0, 2.0, 1.0, 1.0, 2.0, 1.0)
    }
}

impl StoredEnergyModel {
    /// Power-law family: `phi = c1|x|^{3p}`, `psi = c1|x|^p`, `g = c2|x|^q`,
    /// `h = d^r + d^{-s}`.
    pub fn power(p: f64, q: f64, c1: f64, c2: f64, r: f64, s: f64) -> Self {
        StoredEnergyModel {
            phi: Component::Power { c: c1, e: 3.0 * p },
            psi: Component::Power { c: c1, e: p },
            g: Component::Power { c: c2, e: q },
            h: Component::Barrier {
                a: 1.0,
                r,
                b: 1.0,
                s,
            },
            p,
            q,
            c1,
            c2,
        }
    }

    fn component(&self, which: Which) -> &Component {
        match which {
            Which::Phi => &self.phi,
            Which::Psi => &self.psi,
            Which::G => &self.g,
            Which::H => &self.h,
        }
    }

    /// Value, first and second derivative of one component.
    pub fn eval_component(&self, which: Which, x: f64) -> Result<(f64, f64, f64), Error> {
        if which == Which::H && !(x > 0.0) {
            return Err(Error::Domain(format!(
                "h evaluated at non-positive argument {x}"
            )));
        }
        Ok(self.component(which).eval(x))
    }

    /// Reduced energy `G(xi; rho)`.
    pub fn eval_g(&self, xi: &Xi, rho: f64) -> Result<f64, Error> {
        let r13 = rho.cbrt();
        let r23 = r13 * r13;
        let det = xi[6] / r23;
        if !(det > 0.0) {
            return Err(Error::Domain(format!("xi7 = {} is not positive", xi[6])));
        }
        Ok(self.phi.value(xi[0])
            + self.psi.value(xi[1])
            + self.psi.value(xi[2])
            + self.g.value(xi[3] / r13)
            + self.g.value(xi[4] / r13)
            + self.g.value(xi[5] / r13)
            + self.h.value(det))
    }

    /// Partial derivatives of [`eval_g`](Self::eval_g) in each entry of `xi`.
    pub fn grad_g(&self, xi: &Xi, rho: f64) -> Result<Xi, Error> {
        let r13 = rho.cbrt();
        let r23 = r13 * r13;
        let det = xi[6] / r23;
        if !(det > 0.0) {
            return Err(Error::Domain(format!("xi7 = {} is not positive", xi[6])));
        }
        Ok([
            self.phi.d1(xi[0]),
            self.psi.d1(xi[1]),
            self.psi.d1(xi[2]),
            self.g.d1(xi[3] / r13) / r13,
            self.g.d1(xi[4] / r13) / r13,
            self.g.d1(xi[5] / r13) / r13,
            self.h.d1(det) / r23,
        ])
    }

    /// Diagonal of the Hessian of `G` in `xi` (the energy is separable).
    pub fn hess_g_diag(&self, xi: &Xi, rho: f64) -> Result<Xi, Error> {
        let r13 = rho.cbrt();
        let r23 = r13 * r13;
        let det = xi[6] / r23;
        if !(det > 0.0) {
            return Err(Error::Domain(format!("xi7 = {} is not positive", xi[6])));
        }
        Ok([
            self.phi.d2(xi[0]),
            self.psi.d2(xi[1]),
            self.psi.d2(xi[2]),
            self.g.d2(xi[3] / r13) / r23,
            self.g.d2(xi[4] / r13) / r23,
            self.g.d2(xi[5] / r13) / r23,
            self.h.d2(det) / (r23 * r23),
        ])
    }

    /// Stored energy as a function of the principal stretches,
    /// `phi(v1) + psi(v2^3) + psi(v3^3) + g(v2 v3) + g(v1 v3) + g(v1 v2) + h(v1 v2 v3)`.
    pub fn eval_stretches(&self, v: [f64; 3]) -> f64 {
        let [v1, v2, v3] = v;
        self.phi.value(v1)
            + self.psi.value(v2 * v2 * v2)
            + self.psi.value(v3 * v3 * v3)
            + self.g.value(v2 * v3)
            + self.g.value(v1 * v3)
            + self.g.value(v1 * v2)
            + self.h.value(v1 * v2 * v3)
    }
}

/// One line of an [`AuditReport`].
#[derive(Debug, Clone)]
pub struct AuditEntry {
    pub name: &'static str,
    pub passed: bool,
    /// Sample point and value that decided the outcome.
    pub witness: String,
}

#[derive(Debug, Clone)]
pub struct AuditReport {
    pub entries: Vec<AuditEntry>,
}

impl AuditReport {
    pub fn all_passed(&self) -> bool {
        self.entries.iter().all(|e| e.passed)
    }

    pub fn passed(&self, name: &str) -> bool {
        self.entries
            .iter()
            .filter(|e| e.name == name)
            .all(|e| e.passed)
    }
}

impl fmt::Display for AuditReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in &self.entries {
            let tag = if e.passed { "PASS" } else { "FAIL" };
            writeln!(f, "{tag} {:<18} {}", e.name, e.witness)?;
        }
        Ok(())
    }
}

/// Sampling ranges for [`audit_assumptions`].
#[derive(Debug, Clone)]
pub struct AuditSampling {
    /// Decades scanned on each side of 1, e.g. 6 means `[1e-6, 1e6]`.
    pub decades: i32,
    /// Samples per decade.
    pub per_decade: usize,
    /// Blow-up threshold for `h` near 0 and `h(d)/d` at infinity.
    pub blowup: f64,
    /// Relative spread tolerated in the tail of a limit ratio.
    pub limit_rtol: f64,
}

impl Default for AuditSampling {
    fn default() -> Self {
        AuditSampling {
            decades: 6,
            per_decade: 8,
            blowup: 1e3,
            limit_rtol: 1e-3,
        }
    }
}

fn geometric(lo_exp: i32, hi_exp: i32, per_decade: usize) -> Vec<f64> {
    let n = (hi_exp - lo_exp) as usize * per_decade;
    (0..=n)
        .map(|k| 10f64.powf(lo_exp as f64 + k as f64 / per_decade as f64))
        .collect()
}

/// Numerically checks the standing assumptions on the model by sampling.
pub fn audit_assumptions(model: &StoredEnergyModel, sampling: &AuditSampling) -> AuditReport {
    let d = sampling.decades;
    let small: Vec<f64> = geometric(-d, 0, sampling.per_decade);
    let large: Vec<f64> = geometric(0, d, sampling.per_decade);
    let mut entries = Vec::new();

    // A1: h blows up at 0 and is superlinear at infinity.
    {
        let mut passed = true;
        let mut witness = String::new();
        // only the decades below 1e-1 are required to be monotone
        let near_zero = &small[..small.len() - sampling.per_decade];
        for w in near_zero.windows(2) {
            if !(model.h.value(w[0]) > model.h.value(w[1])) {
                passed = false;
                witness = format!("h not decreasing towards 0 at d={:.3e}", w[0]);
                break;
            }
        }
        let h0 = model.h.value(small[0]);
        if passed && !(h0 >= sampling.blowup) {
            passed = false;
            witness = format!(
                "h({:.1e}) = {h0:.3e} below {:.1e}",
                small[0], sampling.blowup
            );
        }
        if passed {
            witness = format!("h({:.1e}) = {h0:.3e}", small[0]);
        }
        entries.push(AuditEntry {
            name: "A1 h(0+)=inf",
            passed,
            witness,
        });

        let ratio = |x: f64| model.h.value(x) / x;
        let far = &large[sampling.per_decade..];
        let mut passed = far.windows(2).all(|w| ratio(w[1]) > ratio(w[0]));
        let top = *large.last().unwrap();
        let rt = ratio(top);
        passed &= rt >= sampling.blowup;
        let witness = format!("h(d)/d at d={top:.1e} is {rt:.3e}");
        entries.push(AuditEntry {
            name: "A1 h(d)/d->inf",
            passed,
            witness,
        });
    }

    // A2: convexity and nonnegativity on symmetric samples.
    {
        let mut xs: Vec<f64> = large.iter().chain(small.iter()).copied().collect();
        xs.extend(large.iter().chain(small.iter()).map(|x| -x));
        xs.push(0.0);
        for (name, c) in [
            ("A2 phi", &model.phi),
            ("A2 psi", &model.psi),
            ("A2 g", &model.g),
        ] {
            let bad = xs.iter().copied().find(|&x| {
                let (v, _, d2) = c.eval(x);
                v < 0.0 || d2 < 0.0
            });
            let witness = match bad {
                Some(x) => {
                    let (v, _, d2) = c.eval(x);
                    format!("x={x:.3e} value={v:.3e} d2={d2:.3e}")
                }
                None => format!("{} samples in [-1e{d},1e{d}]", xs.len()),
            };
            entries.push(AuditEntry {
                name,
                passed: bad.is_none(),
                witness,
            });
        }
        let ds: Vec<f64> = small.iter().chain(large.iter()).copied().collect();
        let bad = ds.iter().copied().find(|&x| {
            let (v, _, d2) = model.h.eval(x);
            v < 0.0 || !(d2 > 0.0)
        });
        let witness = match bad {
            Some(x) => format!("d={x:.3e} h''={:.3e}", model.h.d2(x)),
            None => format!("{} samples in [1e-{d},1e{d}]", ds.len()),
        };
        entries.push(AuditEntry {
            name: "A2 h",
            passed: bad.is_none(),
            witness,
        });
    }

    // A3: growth ratios settle to a finite positive limit.
    {
        let checks: [(&'static str, &Component, f64); 3] = [
            ("A3 phi/x^3p", &model.phi, 3.0 * model.p),
            ("A3 psi/x^p", &model.psi, model.p),
            ("A3 g/x^q", &model.g, model.q),
        ];
        let exps_ok = model.p > 1.0 && model.q > 1.0;
        for (name, c, e) in checks {
            let tail = &large[large.len() - sampling.per_decade..];
            let ratios: Vec<f64> = tail.iter().map(|&x| c.value(x) / x.powf(e)).collect();
            let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = ratios.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let passed =
                exps_ok && lo > 0.0 && hi.is_finite() && (hi - lo) <= sampling.limit_rtol * hi;
            let witness = format!("ratio in [{lo:.6e}, {hi:.6e}] for x in 1e{}..1e{d}", d - 1);
            entries.push(AuditEntry {
                name,
                passed,
                witness,
            });
        }
    }

    // A4: derivative growth ratios stay bounded.
    {
        let checks: [(&'static str, &Component, f64); 3] = [
            ("A4 phi'/x^(3p-1)", &model.phi, 3.0 * model.p - 1.0),
            ("A4 psi'/x^(p-1)", &model.psi, model.p - 1.0),
            ("A4 g'/x^q", &model.g, model.q),
        ];
        for (name, c, e) in checks {
            let ratios: Vec<f64> = large.iter().map(|&x| c.d1(x).abs() / x.powf(e)).collect();
            let half = ratios.len() / 2;
            let early = ratios[..half].iter().cloned().fold(0.0, f64::max);
            let late = ratios[half..].iter().cloned().fold(0.0, f64::max);
            let passed = late.is_finite() && late <= 2.0 * early.max(f64::MIN_POSITIVE);
            let witness = format!("sup over first half {early:.3e}, second half {late:.3e}");
            entries.push(AuditEntry {
                name,
                passed,
                witness,
            });
        }
    }

    // psi(x) = phi(x^{1/3}) on positive samples.
    {
        let mut worst = 0.0f64;
        let mut at = 0.0;
        for &x in small.iter().chain(large.iter()) {
            let a = model.psi.value(x);
            let b = model.phi.value(x.cbrt());
            let err = (a - b).abs() / (1.0 + a.abs());
            if err > worst {
                worst = err;
                at = x;
            }
        }
        entries.push(AuditEntry {
            name: "psi=phi(x^1/3)",
            passed: worst <= 1e-12,
            witness: format!("max rel err {worst:.3e} at x={at:.3e}"),
        });
    }

    AuditReport { entries }
}
