use std::fs;
use std::io;
use std::path::Path;

use num_complex::Complex64;

use super::config::ScenarioConfig;
use super::report::{Check, ComparisonReport, ConstantsSummary, ConstraintSummary, Deviations, Status};
use crate::grassmann::GrassmannElement;
use crate::hj::{self, HjError, HjSettings, HjSolver};
use crate::model::SusyModel;
use crate::oracle::{self, OdeSettings, OracleState};
use crate::phase_space;

/// Trajectory CSV columns, in order.
pub const CSV_HEADER: [&str; 9] = [
    "t", "x_hj", "x_ode", "q0_hj", "q0_ode", "a_re", "a_im", "energy", "resid_max",
];

/// Fermion amplitudes must keep unit modulus to this accuracy.
pub const MODULUS_TOL: f64 = 1e-10;

const CONSTRAINT_POINTS: usize = 32;
const CONSTRAINT_SEED: u64 = 0x5eed;
const GRID: usize = 10;

/// One output sample. `q0_*` are soul coefficients on `ψ̄₀ψ₀`; `a_*` is the
/// HJ fermion amplitude; `energy` is the oracle body energy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryRow {
    pub t: f64,
    pub x_hj: f64,
    pub x_ode: Option<f64>,
    pub q0_hj: f64,
    pub q0_ode: Option<f64>,
    pub a_re: f64,
    pub a_im: f64,
    pub energy: Option<f64>,
    pub resid_max: f64,
}

impl TrajectoryRow {
    fn fields(&self) -> [String; 9] {
        let num = |v: f64| format!("{v:?}");
        let opt = |v: Option<f64>| v.map(num).unwrap_or_default();
        [
            num(self.t),
            num(self.x_hj),
            opt(self.x_ode),
            num(self.q0_hj),
            opt(self.q0_ode),
            num(self.a_re),
            num(self.a_im),
            opt(self.energy),
            num(self.resid_max),
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioRun {
    pub report: ComparisonReport,
    pub rows: Vec<TrajectoryRow>,
}

impl ScenarioRun {
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(CSV_HEADER).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row.fields()).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii output")
    }

    /// Writes `trajectory.csv`, `report.txt` and `report.json` into `dir`.
    pub fn write(&self, dir: &Path) -> io::Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("trajectory.csv"), self.to_csv())?;
        self.report.write(dir)
    }
}

/// HJ-side samples before any comparison.
struct HjSamples {
    t: Vec<f64>,
    x: Vec<f64>,
    soul: Vec<f64>,
    amplitude: Vec<Complex64>,
    residual: Vec<[f64; 5]>,
}

fn scenario_name(cfg: &ScenarioConfig) -> String {
    cfg.name.clone().unwrap_or_else(|| "scenario".to_string())
}

fn sample_times(cfg: &ScenarioConfig) -> Vec<f64> {
    let stride = cfg.window.out_stride;
    let n = cfg.window.t_max / stride;
    let count = if (n - n.round()).abs() <= 1e-9 * n.max(1.0) {
        n.round() as usize
    } else {
        n.floor() as usize
    };
    (0..=count).map(|k| k as f64 * stride).collect()
}

fn constraint_summary(model: &SusyModel, x0: f64) -> Result<ConstraintSummary, phase_space::PhaseSpaceError> {
    let points = phase_space::sample_points(x0, 1.0, CONSTRAINT_POINTS, CONSTRAINT_SEED);
    let check = phase_space::select_convention(model, &points)?;
    Ok(ConstraintSummary {
        convention: check.convention.to_string(),
        bracket_f1_f2: [check.bracket_f1_f2.re, check.bracket_f1_f2.im],
        second_class: check.second_class,
        hamiltonian_reproduced: check.hamiltonian_reproduced,
        reduction_deviation: check.reduction_deviation,
        flow_consistent: check.flow_consistent,
        multipliers_momentum_free: check.multipliers_momentum_free && check.passed(),
    })
}

fn constraints_ok(c: &ConstraintSummary) -> bool {
    c.second_class && c.hamiltonian_reproduced && c.flow_consistent && c.multipliers_momentum_free
}

/// Runs only the constraint-algebra verification.
pub fn verify_constraints(cfg: &ScenarioConfig) -> ComparisonReport {
    let mut report = ComparisonReport::new(&scenario_name(cfg));
    let model = match cfg.validate() {
        Ok(m) => m,
        Err(e) => {
            report.fail(Status::ConfigError, e);
            return report;
        }
    };
    match constraint_summary(&model, cfg.ics.x0) {
        Ok(c) => {
            report.checks.push(Check::flag("second_class", c.second_class));
            report.checks.push(Check::at_most(
                "hamiltonian_reproduced",
                c.reduction_deviation,
                phase_space::IDENTITY_TOL,
            ));
            report.checks.push(Check::flag("fermion_flow", c.flow_consistent));
            report.checks.push(Check::flag("multipliers_momentum_free", c.multipliers_momentum_free));
            report.constraints = Some(c);
        }
        Err(e) => report.fail(Status::NumericalError, e),
    }
    report.finish();
    report
}

/// Runs the full pipeline; every failure ends up in the report.
pub fn run_scenario(cfg: &ScenarioConfig) -> ScenarioRun {
    let mut report = ComparisonReport::new(&scenario_name(cfg));
    let model = match cfg.validate() {
        Ok(m) => m,
        Err(e) => {
            report.fail(Status::ConfigError, e);
            return ScenarioRun { report, rows: Vec::new() };
        }
    };

    match constraint_summary(&model, cfg.ics.x0) {
        Ok(c) => {
            report.checks.push(Check::flag("constraint_algebra", constraints_ok(&c)));
            report.constraints = Some(c);
        }
        Err(e) => {
            report.fail(Status::NumericalError, e);
            return ScenarioRun { report, rows: Vec::new() };
        }
    }

    let times = sample_times(cfg);
    let hj = match run_hj(cfg, &model, &times, &mut report) {
        Ok(s) => s,
        Err(e) => {
            report.fail(Status::NumericalError, e);
            return ScenarioRun { report, rows: Vec::new() };
        }
    };

    let traj = if cfg.compare {
        let s0 = OracleState::initial(cfg.ics.x0, cfg.ics.v0, cfg.ics.q00, cfg.ics.qdot00);
        let settings = OdeSettings {
            tol: cfg.tolerances.ode_tol,
            ..OdeSettings::default()
        };
        match oracle::integrate(&s0, &model, cfg.window.t_max, cfg.window.out_stride, &settings) {
            Ok(t) if t.states.len() == times.len() => Some(t),
            Ok(t) => {
                report.fail(
                    Status::NumericalError,
                    format!("oracle produced {} samples, expected {}", t.states.len(), times.len()),
                );
                return ScenarioRun { report, rows: Vec::new() };
            }
            Err(e) => {
                report.fail(Status::NumericalError, e);
                return ScenarioRun { report, rows: Vec::new() };
            }
        }
    } else {
        None
    };

    let energies: Option<Vec<f64>> = match &traj {
        Some(t) => match t.states.iter().map(|s| s.energy(&model)).collect() {
            Ok(e) => Some(e),
            Err(e) => {
                report.fail(Status::NumericalError, e);
                return ScenarioRun { report, rows: Vec::new() };
            }
        },
        None => None,
    };

    let mut rows = Vec::with_capacity(times.len());
    for k in 0..times.len() {
        let state = traj.as_ref().map(|t| t.states[k]);
        rows.push(TrajectoryRow {
            t: times[k],
            x_hj: hj.x[k],
            x_ode: state.map(|s| s.x),
            q0_hj: hj::series_coefficient(hj.soul[k]),
            q0_ode: state.map(|s| s.q0),
            a_re: hj.amplitude[k].re,
            a_im: hj.amplitude[k].im,
            energy: energies.as_ref().map(|e| e[k]),
            resid_max: hj.residual[k].iter().fold(0.0, |m, v| m.max(*v)),
        });
    }
    debug_assert_eq!(hj.t, times);

    let tol = &cfg.tolerances;
    if let (Some(traj), Some(energies)) = (&traj, &energies) {
        let amps = oracle::fermion_amplitude(traj, cfg.psi0());
        let mut dev = Deviations {
            x: 0.0,
            q0: 0.0,
            a_re: 0.0,
            a_im: 0.0,
        };
        for (row, a) in rows.iter().zip(&amps) {
            dev.x = dev.x.max((row.x_hj - row.x_ode.unwrap_or(f64::NAN)).abs());
            dev.q0 = dev.q0.max((row.q0_hj - row.q0_ode.unwrap_or(f64::NAN)).abs());
            dev.a_re = dev.a_re.max((row.a_re - a.re).abs());
            dev.a_im = dev.a_im.max((row.a_im - a.im).abs());
        }
        let e0 = energies[0];
        let drift = energies.iter().fold(0.0f64, |m, e| m.max((e - e0).abs())) / e0;
        report.energy_drift = Some(drift);
        report.checks.push(Check::at_most("oracle_energy_drift", drift, tol.energy_tol));
        report.checks.push(Check::at_most("deviation_x", dev.x, tol.compare_tol));
        report.checks.push(Check::at_most("deviation_q0", dev.q0, tol.compare_tol));
        report.checks.push(Check::at_most("deviation_a_re", dev.a_re, tol.compare_tol));
        report.checks.push(Check::at_most("deviation_a_im", dev.a_im, tol.compare_tol));
        report.deviations = Some(dev);
    }

    report.finish();
    ScenarioRun { report, rows }
}

fn run_hj(
    cfg: &ScenarioConfig,
    model: &SusyModel,
    times: &[f64],
    report: &mut ComparisonReport,
) -> Result<HjSamples, HjError> {
    let settings = HjSettings {
        quad_tol: cfg.tolerances.quad_tol,
        root_tol: cfg.tolerances.root_tol,
        ..HjSettings::default()
    };
    let solver = HjSolver::new(model, settings);
    let ics = &cfg.ics;
    // the closed form tracks the ψ₀ψ̄₀ coefficient
    let soul0 = hj::series_coefficient(ics.q00);
    let mut constants = solver.constants_from_ics(ics.x0, ics.v0, soul0, hj::series_coefficient(ics.qdot00))?;
    if let Some(origin) = cfg.action_origin {
        constants.origin = origin;
    }
    report.constants = Some(ConstantsSummary {
        energy: constants.energy,
        a: constants.a,
        branch_sign: constants.branch_sign,
        origin: constants.origin,
    });
    let a = constants.a;
    let body = solver.body(constants.energy, ics.x0, constants.branch_sign)?;
    let comps = solver.action_components(constants)?;
    let h = settings.fd_step;
    let psi0 = cfg.psi0();

    let mut samples = HjSamples {
        t: Vec::with_capacity(times.len()),
        x: Vec::with_capacity(times.len()),
        soul: Vec::with_capacity(times.len()),
        amplitude: Vec::with_capacity(times.len()),
        residual: Vec::with_capacity(times.len()),
    };
    for &t in times {
        let x = body.position(t)?;
        samples.t.push(t);
        samples.x.push(x);
        samples.soul.push(body.soul_at(a, soul0, x)?);
        samples.amplitude.push(body.fermion_amplitude_at(psi0, x)?);
        samples.residual.push(hj::hj_residual(&comps, model, x, t, h)?);
    }

    let lo = samples.x.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = samples.x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let t_max = times.last().copied().unwrap_or(0.0);
    let xs: Vec<f64> = (0..GRID).map(|i| lo + (hi - lo) * i as f64 / (GRID - 1) as f64).collect();
    let ts: Vec<f64> = (0..GRID).map(|i| t_max * i as f64 / (GRID - 1) as f64).collect();
    let grid = hj::residual_grid(&comps, model, &xs, &ts, h)?;
    let along = samples
        .residual
        .iter()
        .fold([0.0f64; 5], |mut m, r| {
            for (a, b) in m.iter_mut().zip(r) {
                *a = a.max(*b);
            }
            m
        });
    let worst = |r: &[f64; 5]| r.iter().fold(0.0f64, |m, v| m.max(*v));
    report.residuals_trajectory = Some(along);
    report.residuals_grid = Some(grid);
    let resid_tol = cfg.tolerances.resid_tol;
    report.checks.push(Check::at_most("hj_residual_trajectory", worst(&along), resid_tol));
    report.checks.push(Check::at_most("hj_residual_grid", worst(&grid), resid_tol));

    let modulus = samples
        .amplitude
        .iter()
        .fold(0.0f64, |m, a| m.max((a.norm() - psi0.norm()).abs()));
    report.amplitude_modulus_drift = Some(modulus);
    report.checks.push(Check::at_most("amplitude_modulus", modulus, MODULUS_TOL));

    let (var_a, var_phi1) = jacobi_variation(&comps, &samples)?;
    report.jacobi_a_variation = Some(var_a);
    report.jacobi_phi1_variation = Some(var_phi1);
    report.checks.push(Check::at_most("jacobi_a", var_a, cfg.tolerances.jacobi_tol));
    report.checks.push(Check::at_most("jacobi_phi1", var_phi1, cfg.tolerances.jacobi_tol));
    Ok(samples)
}

/// Variation of `∂S/∂A` and `∂S/∂φ₁` along the extracted trajectory.
fn jacobi_variation(comps: &hj::ActionComponents<'_, '_>, s: &HjSamples) -> Result<(f64, f64), HjError> {
    let psi_gen = GrassmannElement::psi0();
    let psibar_gen = GrassmannElement::psibar0();
    let pair = &psi_gen * &psibar_gen;
    let mut first: Option<(GrassmannElement, GrassmannElement)> = None;
    let (mut var_a, mut var_phi1) = (0.0f64, 0.0f64);
    for k in 0..s.t.len() {
        let q = &GrassmannElement::scalar(2, s.x[k]) + &pair.scale(s.soul[k]);
        let psi = psi_gen.scale(s.amplitude[k]);
        let psibar = psibar_gen.scale(s.amplitude[k].conj());
        let ja = comps.jacobi_a(&q, s.t[k], &psi, &psibar)?;
        let jp = comps.jacobi_phi1(&q, s.t[k], &psi)?;
        match &first {
            None => first = Some((ja, jp)),
            Some((a0, p0)) => {
                var_a = var_a.max((&ja - a0).max_abs());
                var_phi1 = var_phi1.max((&jp - p0).max_abs());
            }
        }
    }
    Ok((var_a, var_phi1))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn free_cfg() -> ScenarioConfig {
        ScenarioConfig::from_json(
            r#"{
            "name": "free",
            "potential": "0",
            "coupling": "0",
            "ics": {"x0": 0, "v0": 1, "q00": 0.2, "qdot00": -0.5},
            "window": {"t_max": 5, "out_stride": 0.5},
            "tolerances": {"compare_tol": 1e-8}
        }"#,
        )
        .unwrap()
    }

    #[test]
    fn free_scenario_passes() {
        let run = run_scenario(&free_cfg());
        assert_eq!(run.report.status, Status::Pass, "{}", run.report.to_text());
        assert_eq!(run.rows.len(), 11);
        let dev = run.report.deviations.unwrap();
        assert!(dev.x <= 1e-8 && dev.q0 <= 1e-8);
    }

    #[test]
    fn csv_schema() {
        let run = run_scenario(&free_cfg());
        let csv = run.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), CSV_HEADER.join(","));
        assert_eq!(lines.count(), 11);
        assert!(csv.lines().nth(1).unwrap().starts_with("0.0,0.0,0.0,0.2,0.2,1.0,"));
    }

    #[test]
    fn turning_point_is_a_numerical_error() {
        let mut cfg = free_cfg();
        cfg.potential = "q".into();
        cfg.coupling = "susy".into();
        cfg.window.t_max = 2.0;
        let run = run_scenario(&cfg);
        assert_eq!(run.report.status, Status::NumericalError);
        assert!(run.report.error.as_deref().unwrap().contains("turning point"));
        assert_eq!(run.report.exit_code(), 3);
        assert!(run.rows.is_empty());
    }

    #[test]
    fn verify_only() {
        let mut cfg = free_cfg();
        cfg.potential = "q^2".into();
        cfg.coupling = "susy".into();
        let report = verify_constraints(&cfg);
        assert_eq!(report.status, Status::Pass, "{}", report.to_text());
        assert!(report.constraints.unwrap().second_class);
    }
}
