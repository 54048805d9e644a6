use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{self, Bindings, ExprError};
use crate::model::{Coupling, SusyModel};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{field}: {source}")]
    Expr { field: String, source: ExprError },
    #[error("{field}: {message}")]
    Invalid { field: String, message: String },
}

impl ConfigError {
    fn invalid(field: &str, message: impl Into<String>) -> Self {
        ConfigError::Invalid {
            field: field.to_string(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConditions {
    pub x0: f64,
    pub v0: f64,
    /// Soul coefficient of `q` on `ψ̄₀ψ₀` and its velocity.
    pub q00: f64,
    pub qdot00: f64,
    #[serde(default = "unit_amplitude")]
    pub psi0: [f64; 2],
}

fn unit_amplitude() -> [f64; 2] {
    [1.0, 0.0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Window {
    pub t_max: f64,
    pub out_stride: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub quad_tol: f64,
    pub root_tol: f64,
    pub ode_tol: f64,
    pub compare_tol: f64,
    pub resid_tol: f64,
    pub energy_tol: f64,
    pub jacobi_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            quad_tol: 1e-10,
            root_tol: 1e-12,
            ode_tol: 1e-10,
            compare_tol: 1e-5,
            resid_tol: 1e-6,
            energy_tol: 1e-8,
            jacobi_tol: 1e-7,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub name: Option<String>,
    pub potential: String,
    #[serde(default = "susy")]
    pub coupling: String,
    #[serde(default)]
    pub constants: BTreeMap<String, f64>,
    pub ics: InitialConditions,
    pub window: Window,
    #[serde(default)]
    pub tolerances: Tolerances,
    /// Compare the HJ and oracle paths; `false` runs the HJ checks alone.
    #[serde(default = "enabled")]
    pub compare: bool,
    /// Lower limit of the action integrals; defaults to `x0`.
    #[serde(default)]
    pub action_origin: Option<f64>,
    #[serde(default)]
    pub outputs: Option<PathBuf>,
}

fn susy() -> String {
    "susy".to_string()
}

fn enabled() -> bool {
    true
}

/// Numeric fields a sweep may vary, besides constants and the energy `E`.
pub const NUMERIC_FIELDS: [&str; 13] = [
    "x0",
    "v0",
    "q00",
    "qdot00",
    "t_max",
    "out_stride",
    "quad_tol",
    "root_tol",
    "ode_tol",
    "compare_tol",
    "resid_tol",
    "energy_tol",
    "jacobi_tol",
];

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let cfg: ScenarioConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn bindings(&self) -> Bindings {
        self.constants.iter().map(|(k, v)| (k.clone(), *v)).collect()
    }

    pub fn psi0(&self) -> Complex64 {
        Complex64::new(self.ics.psi0[0], self.ics.psi0[1])
    }

    pub fn model(&self) -> Result<SusyModel, ConfigError> {
        let consts = self.bindings();
        let expr_err = |field: &str| {
            let field = field.to_string();
            move |source| ConfigError::Expr { field, source }
        };
        let v = expr::parse(&self.potential, &consts).map_err(expr_err("potential"))?;
        let coupling = if self.coupling.trim() == "susy" {
            Coupling::Susy
        } else {
            Coupling::Expr(expr::parse(&self.coupling, &consts).map_err(expr_err("coupling"))?)
        };
        SusyModel::new(v, coupling, &consts).map_err(expr_err("constants"))
    }

    /// Checks every field; the returned model is ready to use.
    pub fn validate(&self) -> Result<SusyModel, ConfigError> {
        let model = self.model()?;
        let finite = [
            ("ics.x0", self.ics.x0),
            ("ics.v0", self.ics.v0),
            ("ics.q00", self.ics.q00),
            ("ics.qdot00", self.ics.qdot00),
            ("ics.psi0", self.ics.psi0[0]),
            ("ics.psi0", self.ics.psi0[1]),
        ];
        for (field, value) in finite {
            if !value.is_finite() {
                return Err(ConfigError::invalid(field, "must be finite"));
            }
        }
        if !(self.window.t_max > 0.0) || !self.window.t_max.is_finite() {
            return Err(ConfigError::invalid("window.t_max", "must be positive"));
        }
        if !(self.window.out_stride > 0.0) || !self.window.out_stride.is_finite() {
            return Err(ConfigError::invalid("window.out_stride", "must be positive"));
        }
        if self.window.out_stride > self.window.t_max {
            return Err(ConfigError::invalid("window.out_stride", "exceeds t_max"));
        }
        let t = &self.tolerances;
        for (field, value) in [
            ("tolerances.quad_tol", t.quad_tol),
            ("tolerances.root_tol", t.root_tol),
            ("tolerances.ode_tol", t.ode_tol),
            ("tolerances.compare_tol", t.compare_tol),
            ("tolerances.resid_tol", t.resid_tol),
            ("tolerances.energy_tol", t.energy_tol),
            ("tolerances.jacobi_tol", t.jacobi_tol),
        ] {
            if !(value > 0.0) || !value.is_finite() {
                return Err(ConfigError::invalid(field, "must be positive"));
            }
        }
        if self.ics.v0 == 0.0 {
            return Err(ConfigError::invalid("ics.v0", "turning point at t=0"));
        }
        if self.compare && (self.psi0().norm() - 1.0).abs() > 1e-12 {
            return Err(ConfigError::invalid("ics.psi0", "modulus must be 1 when comparing"));
        }
        if let Some(origin) = self.action_origin {
            if !origin.is_finite() {
                return Err(ConfigError::invalid("action_origin", "must be finite"));
            }
        }
        Ok(model)
    }

    /// Sets a numeric field or constant by name. `E` rescales `v0` to the
    /// requested energy, keeping its sign.
    pub fn set_param(&mut self, name: &str, value: f64) -> Result<(), ConfigError> {
        let ics = &mut self.ics;
        let tol = &mut self.tolerances;
        let slot = match name {
            "x0" => &mut ics.x0,
            "v0" => &mut ics.v0,
            "q00" => &mut ics.q00,
            "qdot00" => &mut ics.qdot00,
            "t_max" => &mut self.window.t_max,
            "out_stride" => &mut self.window.out_stride,
            "quad_tol" => &mut tol.quad_tol,
            "root_tol" => &mut tol.root_tol,
            "ode_tol" => &mut tol.ode_tol,
            "compare_tol" => &mut tol.compare_tol,
            "resid_tol" => &mut tol.resid_tol,
            "energy_tol" => &mut tol.energy_tol,
            "jacobi_tol" => &mut tol.jacobi_tol,
            "E" => {
                let model = self.model()?;
                let k = model
                    .kinetic(value, self.ics.x0)
                    .map_err(|source| ConfigError::Expr { field: "potential".into(), source })?;
                if k < 0.0 {
                    return Err(ConfigError::invalid("E", format!("{value} is below V²(x0)/2")));
                }
                let sign = if self.ics.v0 < 0.0 { -1.0 } else { 1.0 };
                self.ics.v0 = sign * k.sqrt();
                return Ok(());
            }
            other => match self.constants.get_mut(other) {
                Some(c) => c,
                None => {
                    return Err(ConfigError::invalid(
                        "param",
                        format!("unknown parameter `{other}`"),
                    ))
                }
            },
        };
        *slot = value;
        Ok(())
    }

    /// Whether [`Self::set_param`] accepts `name`.
    pub fn has_param(&self, name: &str) -> bool {
        name == "E" || NUMERIC_FIELDS.contains(&name) || self.constants.contains_key(name)
    }
}

pub fn load_config(path: impl AsRef<Path>) -> Result<ScenarioConfig, ConfigError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    ScenarioConfig::from_json(&text)
}
