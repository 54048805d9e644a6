use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    ComparisonFail,
    ConfigError,
    NumericalError,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Pass => 0,
            Status::ComparisonFail => 1,
            Status::ConfigError => 2,
            Status::NumericalError => 3,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::ComparisonFail => "comparison_fail",
            Status::ConfigError => "config_error",
            Status::NumericalError => "numerical_error",
        }
    }
}

/// One thresholded quantity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tol: f64,
    pub passed: bool,
}

impl Check {
    pub fn at_most(name: &str, value: f64, tol: f64) -> Self {
        Self {
            name: name.to_string(),
            value,
            tol,
            passed: value <= tol,
        }
    }

    pub fn flag(name: &str, ok: bool) -> Self {
        Self {
            name: name.to_string(),
            value: if ok { 1.0 } else { 0.0 },
            tol: 1.0,
            passed: ok,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintSummary {
    pub convention: String,
    pub bracket_f1_f2: [f64; 2],
    pub second_class: bool,
    pub hamiltonian_reproduced: bool,
    pub reduction_deviation: f64,
    pub flow_consistent: bool,
    pub multipliers_momentum_free: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantsSummary {
    pub energy: f64,
    pub a: f64,
    pub branch_sign: f64,
    pub origin: f64,
}

/// Largest absolute HJ-minus-oracle difference per channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Deviations {
    pub x: f64,
    pub q0: f64,
    pub a_re: f64,
    pub a_im: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub name: String,
    pub status: Status,
    pub error: Option<String>,
    pub constraints: Option<ConstraintSummary>,
    pub constants: Option<ConstantsSummary>,
    pub deviations: Option<Deviations>,
    /// Per-component residual maxima along the trajectory.
    pub residuals_trajectory: Option<[f64; 5]>,
    /// Per-component residual maxima on a 10×10 grid.
    pub residuals_grid: Option<[f64; 5]>,
    pub energy_drift: Option<f64>,
    pub amplitude_modulus_drift: Option<f64>,
    pub jacobi_a_variation: Option<f64>,
    pub jacobi_phi1_variation: Option<f64>,
    pub checks: Vec<Check>,
}

impl ComparisonReport {
    pub fn new(name: &str) -> Self {
        Self {
            name: name.to_string(),
            status: Status::Pass,
            error: None,
            constraints: None,
            constants: None,
            deviations: None,
            residuals_trajectory: None,
            residuals_grid: None,
            energy_drift: None,
            amplitude_modulus_drift: None,
            jacobi_a_variation: None,
            jacobi_phi1_variation: None,
            checks: Vec::new(),
        }
    }

    pub fn fail(&mut self, status: Status, error: impl ToString) {
        self.status = status;
        self.error = Some(error.to_string());
    }

    /// Settles the status from the checks unless an error already did.
    pub fn finish(&mut self) {
        if self.status == Status::Pass && self.checks.iter().any(|c| !c.passed) {
            self.status = Status::ComparisonFail;
        }
    }

    pub fn exit_code(&self) -> i32 {
        self.status.exit_code()
    }

    pub fn max_residual(&self) -> Option<f64> {
        let t = self.residuals_trajectory?;
        let g = self.residuals_grid?;
        Some(t.iter().chain(&g).fold(0.0, |m, v| m.max(*v)))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "scenario: {}", self.name);
        let _ = writeln!(out, "status: {} (exit {})", self.status.as_str(), self.exit_code());
        if let Some(e) = &self.error {
            let _ = writeln!(out, "error: {e}");
        }
        if let Some(c) = &self.constraints {
            let _ = writeln!(out, "bracket convention: {}", c.convention);
            let _ = writeln!(
                out,
                "{{F1,F2}} = {} + {}i",
                c.bracket_f1_f2[0], c.bracket_f1_f2[1]
            );
        }
        if let Some(c) = &self.constants {
            let _ = writeln!(
                out,
                "constants: E = {}, A = {}, branch = {}, origin = {}",
                c.energy, c.a, c.branch_sign, c.origin
            );
        }
        for c in &self.checks {
            let _ = writeln!(
                out,
                "{:<4} {:<28} {:e} (tol {:e})",
                if c.passed { "ok" } else { "FAIL" },
                c.name,
                c.value,
                c.tol
            );
        }
        out
    }

    pub fn write(&self, dir: &Path) -> io::Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("report.json"), self.to_json())?;
        fs::write(dir.join("report.txt"), self.to_text())
    }
}
