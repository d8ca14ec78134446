use serde::{Deserialize, Serialize};

use crate::evolution::{Preset, RunSpec};
use crate::grid::Scheme;
use crate::step_minimizer::NewtonOptions;
use crate::stored_energy::StoredEnergyModel;
use crate::Error;

/// Environment variables `RADELAST_A__B=value` override key `a.b`.
pub const ENV_PREFIX: &str = "RADELAST_";

/// TOML integers are signed, so larger seeds could not be written back.
pub const MAX_SEED: u64 = i64::MAX as u64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Seeds the random modes of the perturbed preset.
    #[serde(default)]
    pub seed: u64,
    pub tau: f64,
    pub steps: usize,
    /// Boundary stretch; `alpha(1) = lambda^3`.
    pub lambda: f64,
    #[serde(default)]
    pub model: ModelConfig,
    pub grid: GridConfig,
    pub preset: PresetConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

/// Power-law model `phi = c1|x|^{3p}`, `psi = c1|x|^p`, `g = c2|x|^q`,
/// `h = d^h_growth + d^-h_blowup`. `name = "default"` requires the default values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    pub name: String,
    pub p: f64,
    pub q: f64,
    pub c1: f64,
    pub c2: f64,
    pub h_growth: f64,
    pub h_blowup: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            name: "default".into(),
            p: 2.0,
            q: 2.0,
            c1: 1.0,
            c2: 1.0,
            h_growth: 2.0,
            h_blowup: 1.0,
        }
    }
}

impl ModelConfig {
    pub fn build(&self) -> StoredEnergyModel {
        StoredEnergyModel::power(
            self.p,
            self.q,
            self.c1,
            self.c2,
            self.h_growth,
            self.h_blowup,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n: usize,
    /// Node family used by the identity checks; the time stepper always uses
    /// vertices `k/N` with cell midpoints.
    #[serde(default = "default_scheme")]
    pub scheme: Scheme,
}

fn default_scheme() -> Scheme {
    Scheme::CellCentered
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PresetKind {
    Homogeneous,
    Perturbed,
    CompressedCore,
    Expression,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PresetConfig {
    pub kind: PresetKind,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    /// Extra seeded Fourier modes for the perturbed preset.
    #[serde(default)]
    pub modes: u32,
    #[serde(default = "default_core")]
    pub core: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expression: Option<String>,
}

fn default_epsilon() -> f64 {
    0.05
}

fn default_core() -> f64 {
    0.2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub grad_tol: f64,
    pub max_iterations: usize,
    pub armijo: f64,
    pub backtrack: f64,
    /// Cells with midpoint below this are excluded from the EL defect.
    pub el_window: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let n = NewtonOptions::default();
        SolverConfig {
            grad_tol: n.grad_tol,
            max_iterations: n.max_iterations,
            armijo: n.armijo,
            backtrack: n.backtrack,
            el_window: 0.25,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: String,
    /// Write a snapshot every this many steps; 0 keeps only the first and last.
    pub snapshot_every: usize,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: "out".into(),
            snapshot_every: 0,
        }
    }
}

fn invalid(field: &str, why: impl std::fmt::Display) -> Error {
    Error::Config(format!("{field}: {why}"))
}

impl RunConfig {
    /// Parses and validates a TOML document.
    pub fn parse(text: &str) -> Result<RunConfig, Error> {
        let table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        Self::from_table(table)
    }

    /// As [`parse`](Self::parse), after applying environment overrides.
    pub fn parse_with_env(
        text: &str,
        vars: impl IntoIterator<Item = (String, String)>,
    ) -> Result<RunConfig, Error> {
        let mut table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        apply_env(&mut table, vars)?;
        Self::from_table(table)
    }

    fn from_table(table: toml::Table) -> Result<RunConfig, Error> {
        let cfg: RunConfig = table
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), Error> {
        let pos = |name: &str, x: f64| {
            if x > 0.0 && x.is_finite() {
                Ok(())
            } else {
                Err(invalid(
                    name,
                    format!("must be positive and finite, got {x}"),
                ))
            }
        };
        if self.seed > MAX_SEED {
            return Err(invalid(
                "seed",
                format!("must be at most {MAX_SEED}, got {}", self.seed),
            ));
        }
        pos("tau", self.tau)?;
        pos("lambda", self.lambda)?;
        if self.grid.n < 4 {
            return Err(invalid(
                "grid.n",
                format!("must be at least 4, got {}", self.grid.n),
            ));
        }
        let m = &self.model;
        match m.name.as_str() {
            "default" => {
                let d = ModelConfig::default();
                if *m != d {
                    return Err(invalid(
                        "model.name",
                        "\"default\" does not take parameters; use \"power\"",
                    ));
                }
            }
            "power" => {}
            other => return Err(invalid("model.name", format!("unknown model {other:?}"))),
        }
        if !(m.p > 1.0) {
            return Err(invalid("model.p", format!("must exceed 1, got {}", m.p)));
        }
        if !(m.q > 1.0) {
            return Err(invalid("model.q", format!("must exceed 1, got {}", m.q)));
        }
        pos("model.c1", m.c1)?;
        pos("model.c2", m.c2)?;
        if !(m.h_growth > 1.0) {
            return Err(invalid(
                "model.h_growth",
                format!("must exceed 1, got {}", m.h_growth),
            ));
        }
        pos("model.h_blowup", m.h_blowup)?;
        let p = &self.preset;
        if !p.epsilon.is_finite() {
            return Err(invalid("preset.epsilon", "must be finite"));
        }
        if !(p.core > 0.0 && p.core <= 1.0) {
            return Err(invalid(
                "preset.core",
                format!("must lie in (0, 1], got {}", p.core),
            ));
        }
        if p.kind == PresetKind::Expression && p.expression.is_none() {
            return Err(invalid(
                "preset.expression",
                "required for kind = \"expression\"",
            ));
        }
        let s = &self.solver;
        pos("solver.grad_tol", s.grad_tol)?;
        if s.max_iterations == 0 {
            return Err(invalid("solver.max_iterations", "must be at least 1"));
        }
        if !(s.armijo > 0.0 && s.armijo < 1.0) {
            return Err(invalid(
                "solver.armijo",
                format!("must lie in (0, 1), got {}", s.armijo),
            ));
        }
        if !(s.backtrack > 0.0 && s.backtrack < 1.0) {
            return Err(invalid(
                "solver.backtrack",
                format!("must lie in (0, 1), got {}", s.backtrack),
            ));
        }
        if !(s.el_window >= 0.0 && s.el_window < 1.0) {
            return Err(invalid(
                "solver.el_window",
                format!("must lie in [0, 1), got {}", s.el_window),
            ));
        }
        Ok(())
    }

    pub fn preset(&self) -> Preset {
        let p = &self.preset;
        match p.kind {
            PresetKind::Homogeneous => Preset::Homogeneous,
            PresetKind::Perturbed => Preset::Perturbed {
                epsilon: p.epsilon,
                modes: p.modes,
                seed: self.seed,
            },
            PresetKind::CompressedCore => Preset::CompressedCore { core: p.core },
            PresetKind::Expression => Preset::Expression(p.expression.clone().unwrap_or_default()),
        }
    }

    pub fn run_spec(&self) -> RunSpec {
        RunSpec {
            model: self.model.build(),
            n: self.grid.n,
            tau: self.tau,
            steps: self.steps,
            lambda: self.lambda,
            preset: self.preset(),
            newton: NewtonOptions {
                grad_tol: self.solver.grad_tol,
                max_iterations: self.solver.max_iterations,
                armijo: self.solver.armijo,
                backtrack: self.solver.backtrack,
            },
            el_window: self.solver.el_window,
        }
    }
}

/// Applies `RADELAST_*` overrides to a parsed document. Nested keys are joined
/// with `__`; values are read as TOML literals, falling back to strings.
pub fn apply_env(
    table: &mut toml::Table,
    vars: impl IntoIterator<Item = (String, String)>,
) -> Result<(), Error> {
    let mut vars: Vec<(String, String)> = vars
        .into_iter()
        .filter(|(k, _)| k.starts_with(ENV_PREFIX))
        .collect();
    vars.sort();
    for (key, raw) in vars {
        let path: Vec<String> = key[ENV_PREFIX.len()..]
            .split("__")
            .map(|s| s.to_ascii_lowercase())
            .collect();
        if path.iter().any(|s| s.is_empty()) {
            return Err(Error::Config(format!("{key}: malformed override key")));
        }
        let value = match format!("v = {raw}").parse::<toml::Table>() {
            Ok(mut t) => t.remove("v").unwrap(),
            Err(_) => toml::Value::String(raw.clone()),
        };
        let mut cur = &mut *table;
        for seg in &path[..path.len() - 1] {
            let entry = cur
                .entry(seg.clone())
                .or_insert_with(|| toml::Value::Table(toml::Table::new()));
            cur = entry
                .as_table_mut()
                .ok_or_else(|| Error::Config(format!("{key}: {seg} is not a section")))?;
        }
        cur.insert(path[path.len() - 1].clone(), value);
    }
    Ok(())
}
