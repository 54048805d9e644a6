//! Acceptance suite: one pass/fail line per criterion, nonzero exit on any failure.

use std::f64::consts::PI;
use std::panic::{self, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use susy_hj::expr::Bindings;
use susy_hj::grassmann::{GrassmannElement, Parity};
use susy_hj::hj::{HjError, HjSettings, HjSolver};
use susy_hj::model::SusyModel;
use susy_hj::oracle::{self, OdeSettings, OracleState};
use susy_hj::phase_space::{self, BracketConvention};
use susy_hj::scenario::{run_scenario, ScenarioConfig, ScenarioRun, Status};

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn free_config() -> ScenarioConfig {
    ScenarioConfig::from_json(
        r#"{
        "name": "free",
        "potential": "0",
        "coupling": "0",
        "ics": {"x0": 0, "v0": 1, "q00": 0.2, "qdot00": -0.5},
        "window": {"t_max": 5, "out_stride": 0.1},
        "tolerances": {"compare_tol": 1e-8},
        "action_origin": -0.25
    }"#,
    )
    .expect("free config")
}

fn harmonic_config() -> ScenarioConfig {
    ScenarioConfig::from_json(
        r#"{
        "name": "susy_harmonic",
        "potential": "q",
        "coupling": "susy",
        "ics": {"x0": 0, "v0": 1, "q00": 0, "qdot00": 0.3},
        "window": {"t_max": 1.2, "out_stride": 0.05},
        "tolerances": {"compare_tol": 1e-5},
        "action_origin": -0.25
    }"#,
    )
    .expect("harmonic config")
}

fn timed_run(cfg: &ScenarioConfig) -> (ScenarioRun, Duration) {
    let start = Instant::now();
    let run = run_scenario(cfg);
    (run, start.elapsed())
}

fn max_abs_diff(a: impl Iterator<Item = (f64, f64)>) -> f64 {
    a.fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

fn oracle_equivalence_free() -> Outcome {
    let (run, elapsed) = timed_run(&free_config());
    ensure(run.report.status == Status::Pass, || run.report.to_text())?;
    let dx = max_abs_diff(run.rows.iter().map(|r| (r.x_hj, r.x_ode.unwrap())));
    let dq = max_abs_diff(run.rows.iter().map(|r| (r.q0_hj, r.q0_ode.unwrap())));
    // analytic straight lines as a third opinion
    let analytic = max_abs_diff(run.rows.iter().map(|r| (r.q0_hj, 0.2 - 0.5 * r.t)));
    ensure(run.rows.last().unwrap().t == 5.0, || "window not covered".into())?;
    ensure(dx <= 1e-8, || format!("max|dx| = {dx:e}"))?;
    ensure(dq <= 1e-8, || format!("max|dq0| = {dq:e}"))?;
    ensure(analytic <= 1e-8, || format!("q0 vs q00 + qdot00 t: {analytic:e}"))?;
    ensure(elapsed < Duration::from_secs(1), || format!("runtime {elapsed:?}"))?;
    Ok(format!("max|dx| = {dx:.1e}, max|dq0| = {dq:.1e}, {elapsed:.2?}"))
}

fn oracle_equivalence_harmonic() -> Outcome {
    let cfg = harmonic_config();
    let (run, elapsed) = timed_run(&cfg);
    ensure(run.report.status == Status::Pass, || run.report.to_text())?;
    let model = cfg.validate().unwrap();
    let s0 = OracleState::initial(0.0, 1.0, 0.0, 0.3);
    let traj = oracle::integrate(&s0, &model, 1.2, 0.05, &OdeSettings::default()).map_err(|e| e.to_string())?;
    let amps = oracle::fermion_amplitude(&traj, Complex64::new(1.0, 0.0));
    let dx = max_abs_diff(run.rows.iter().map(|r| (r.x_hj, r.x_ode.unwrap())));
    let dq = max_abs_diff(run.rows.iter().map(|r| (r.q0_hj, r.q0_ode.unwrap())));
    let da = run
        .rows
        .iter()
        .zip(&amps)
        .map(|(r, a)| (Complex64::new(r.a_re, r.a_im) - a).norm())
        .fold(0.0, f64::max);
    let dsin = max_abs_diff(run.rows.iter().map(|r| (r.x_hj, r.t.sin())));
    ensure(run.rows.len() == 25, || format!("{} samples", run.rows.len()))?;
    ensure(dx <= 1e-6, || format!("max|dx| = {dx:e}"))?;
    ensure(dq <= 1e-5, || format!("max|dq0| = {dq:e}"))?;
    ensure(da <= 1e-6, || format!("max|da| = {da:e}"))?;
    ensure(dsin <= 1e-6, || format!("x vs sin t: {dsin:e}"))?;
    ensure(elapsed < Duration::from_secs(2), || format!("runtime {elapsed:?}"))?;
    Ok(format!(
        "max|dx| = {dx:.1e}, max|dq0| = {dq:.1e}, max|da| = {da:.1e}, {elapsed:.2?}"
    ))
}

fn hj_residuals() -> Outcome {
    let mut worst = 0.0f64;
    for cfg in [free_config(), harmonic_config()] {
        let run = run_scenario(&cfg);
        let grid = run.report.residuals_grid.ok_or_else(|| run.report.to_text())?;
        let along = run.report.residuals_trajectory.ok_or_else(|| run.report.to_text())?;
        for (k, r) in grid.iter().chain(&along).enumerate() {
            ensure(*r <= 1e-6, || format!("{}: component {} = {r:e}", cfg.name.clone().unwrap(), k % 5))?;
            worst = worst.max(*r);
        }
    }
    Ok(format!("max residual {worst:.1e} over 10x10 grids and trajectories"))
}

fn constraint_algebra() -> Outcome {
    let points = phase_space::sample_points(0.0, 1.5, 32, 2024);
    let conv = BracketConvention::default();
    let none = Bindings::new();
    let mut worst = 0.0f64;
    for (v, u) in [("q", None), ("q^3 - q", None), ("sin(q) + q", Some("exp(q)")), ("tanh(q)", Some("2*q"))] {
        let model = SusyModel::parse(v, u, &none).map_err(|e| e.to_string())?;
        let check = phase_space::check_constraint_algebra(&model, conv, &points).map_err(|e| e.to_string())?;
        ensure(check.second_class && check.bracket_f1_f2.norm() > 0.0, || format!("{v}: not second class"))?;
        ensure(check.identity_deviation <= 1e-10, || {
            format!("{v}: back-substitution deviates by {:e}", check.identity_deviation)
        })?;
        ensure(check.passed(), || format!("{v}: {check:?}"))?;
        worst = worst.max(check.identity_deviation);
    }
    let (f1, f2) = phase_space::build_constraints();
    let bracket = phase_space::graded_poisson(&f1, &f2, conv);
    let value = bracket
        .as_constant(&points, &none)
        .map_err(|e| e.to_string())?
        .ok_or("{F1,F2} is not constant")?;
    ensure(value.norm() > 0.5, || format!("{{F1,F2}} = {value}"))?;

    let free_fermion = SusyModel::parse("q", Some("0"), &none).map_err(|e| e.to_string())?;
    let (l1, l2) = phase_space::solve_multipliers(&free_fermion, conv, &points).map_err(|e| e.to_string())?;
    ensure(l1.is_zero() && l2.is_zero(), || "U = 0 gives nonzero multipliers".into())?;
    Ok(format!("{{F1,F2}} = {value}, back-substitution deviation {worst:.1e}, U=0 multipliers vanish"))
}

fn random_element(rng: &mut ChaCha8Rng, n: usize, parity: Option<Parity>) -> GrassmannElement {
    let terms = (0..1u64 << n).filter_map(|mask| {
        let keep = parity.map_or(true, |p| Parity::of_mask(mask) == p);
        let c = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let indices: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
        keep.then_some((indices, c))
    });
    GrassmannElement::from_terms(n, terms)
}

fn random_parity(rng: &mut ChaCha8Rng) -> Parity {
    if rng.gen_bool(0.5) {
        Parity::Even
    } else {
        Parity::Odd
    }
}

fn grassmann_laws() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1000);
    let mut worst = 0.0f64;
    let mut checks = 0;
    let mut record = |d: f64, what: &str| -> Result<(), String> {
        checks += 1;
        worst = worst.max(d);
        ensure(d <= 1e-12, || format!("{what} violated by {d:e}"))
    };
    for k in 0..200 {
        let n = [2, 4, 6][k % 3];
        let (a, b, c) = (
            random_element(&mut rng, n, None),
            random_element(&mut rng, n, None),
            random_element(&mut rng, n, None),
        );
        record((&(&(&a * &b) * &c) - &(&a * &(&b * &c))).max_abs(), "associativity")?;

        let (pa, pb) = (random_parity(&mut rng), random_parity(&mut rng));
        let (x, y) = (random_element(&mut rng, n, Some(pa)), random_element(&mut rng, n, Some(pb)));
        let swapped = (&y * &x).scale(pa.exchange_sign(pb));
        record((&(&x * &y) - &swapped).max_abs(), "graded commutativity")?;

        let odd = random_element(&mut rng, n, Some(Parity::Odd));
        record((&odd * &odd).max_abs(), "nilpotency")?;

        let conj_a = a.conj().map_err(|e| e.to_string())?;
        record((&conj_a.conj().unwrap() - &a).max_abs(), "conjugation involution")?;

        let lhs = (&a * &b).conj().unwrap();
        let rhs = &b.conj().unwrap() * &conj_a;
        record((&lhs - &rhs).max_abs(), "conjugation antihomomorphism")?;
    }
    Ok(format!("{checks} randomized checks, max deviation {worst:.1e}"))
}

fn conservation() -> Outcome {
    let model = SusyModel::parse("q", None, &Bindings::new()).map_err(|e| e.to_string())?;
    let s0 = OracleState::initial(0.0, 1.0, 0.0, 0.3);
    let traj = oracle::integrate(&s0, &model, 20.0, 0.1, &OdeSettings::default()).map_err(|e| e.to_string())?;
    let e0 = s0.energy(&model).unwrap();
    let drift = traj
        .states
        .iter()
        .map(|s| (s.energy(&model).unwrap() - e0).abs() / e0)
        .fold(0.0, f64::max);
    ensure(drift <= 1e-8, || format!("energy drift {drift:e}"))?;

    // ψ̄ψ with ψ = a ψ₀, ψ̄ = ā ψ̄₀
    let a0 = Complex64::from_polar(1.0, 0.7);
    let bilinear = |a: Complex64| {
        let psi = GrassmannElement::psi0().scale(a);
        let psibar = GrassmannElement::psibar0().scale(a.conj());
        &psibar * &psi
    };
    let start = bilinear(a0);
    let bilinear_drift = oracle::fermion_amplitude(&traj, a0)
        .into_iter()
        .map(|a| (&bilinear(a) - &start).max_abs())
        .fold(0.0, f64::max);
    ensure(bilinear_drift <= 1e-12, || format!("psibar psi drift {bilinear_drift:e}"))?;

    let solver = HjSolver::new(&model, HjSettings::default());
    let body = solver.body(0.5, 0.0, 1.0).map_err(|e| e.to_string())?;
    let mut modulus = 0.0f64;
    for k in 0..=24 {
        let a = body.fermion_amplitude(a0, 0.05 * k as f64).map_err(|e| e.to_string())?;
        modulus = modulus.max((a.norm() - 1.0).abs());
    }
    ensure(modulus <= 1e-10, || format!("HJ amplitude modulus drift {modulus:e}"))?;
    Ok(format!(
        "energy drift {drift:.1e}, psibar psi drift {bilinear_drift:.1e}, |a| drift {modulus:.1e}"
    ))
}

fn jacobi_constancy() -> Outcome {
    let mut worst = 0.0f64;
    for cfg in [free_config(), harmonic_config()] {
        let run = run_scenario(&cfg);
        let name = cfg.name.clone().unwrap();
        let va = run.report.jacobi_a_variation.ok_or_else(|| run.report.to_text())?;
        let vp = run.report.jacobi_phi1_variation.ok_or_else(|| run.report.to_text())?;
        ensure(va <= 1e-7, || format!("{name}: dS/dA varies by {va:e}"))?;
        ensure(vp <= 1e-7, || format!("{name}: dS/dphi1 varies by {vp:e}"))?;
        worst = worst.max(va).max(vp);
    }

    // the constants themselves are nonzero with the shifted origin
    let model = SusyModel::parse("q", None, &Bindings::new()).unwrap();
    let solver = HjSolver::new(&model, HjSettings::default());
    let mut c = solver.constants_from_ics(0.0, 1.0, 0.0, -0.3).map_err(|e| e.to_string())?;
    c.origin = -0.25;
    let comps = solver.action_components(c).map_err(|e| e.to_string())?;
    let q = GrassmannElement::scalar(2, 0.0);
    let psi = GrassmannElement::psi0();
    let psibar = GrassmannElement::psibar0();
    let ja = comps.jacobi_a(&q, 0.0, &psi, &psibar).map_err(|e| e.to_string())?;
    let expected = 0.25f64.asin();
    ensure((ja.coeff_of(&[0, 1]).re - expected).abs() < 1e-10, || format!("dS/dA at t=0: {ja}"))?;
    Ok(format!("max variation {worst:.1e}; dS/dA(0) = {:.6} psi psibar", ja.coeff_of(&[0, 1]).re))
}

fn round_trip_and_guards() -> Outcome {
    let none = Bindings::new();
    let mut worst = 0.0f64;
    for (v, u, x0, v0, t_max) in [
        ("q", None, 0.0, 1.0, 1.5),
        ("q + 0.2*q^3", Some("1 + 0.5*q^2"), 0.1, -1.2, 0.8),
        ("0", Some("0"), 0.0, 1.0, 5.0),
    ] {
        let model = SusyModel::parse(v, u, &none).map_err(|e| e.to_string())?;
        let solver = HjSolver::new(&model, HjSettings::default());
        let energy = model.energy(x0, v0).unwrap();
        let body = solver.body(energy, x0, v0.signum()).map_err(|e| e.to_string())?;
        for k in 0..=60 {
            let t = t_max * k as f64 / 60.0;
            let x = body.position(t).map_err(|e| e.to_string())?;
            let back = v0.signum() * solver.time_of_flight(energy, x0, x).map_err(|e| e.to_string())?;
            worst = worst.max((back - t).abs());
        }
    }
    ensure(worst <= 1e-9, || format!("round trip error {worst:e}"))?;

    let model = SusyModel::parse("q", None, &none).unwrap();
    let solver = HjSolver::new(&model, HjSettings::default());
    for t in [PI / 2.0 + 1e-3, 2.0, 3.0] {
        match solver.body_trajectory(0.5, 0.0, 1.0, t) {
            Err(e) if e.is_turning_point() => {}
            other => return Err(format!("t = {t}: expected turning-point error, got {other:?}")),
        }
    }
    match solver.time_of_flight(0.5, 0.0, 1.5) {
        Err(HjError::TurningPoint { .. }) => {}
        other => return Err(format!("forbidden quadrature returned {other:?}")),
    }

    let mut cfg = harmonic_config();
    cfg.window.t_max = 2.0;
    let run = run_scenario(&cfg);
    ensure(run.report.status == Status::NumericalError && run.rows.is_empty(), || run.report.to_text())?;
    ensure(
        run.report.error.as_deref().is_some_and(|e| e.contains("turning point")),
        || run.report.to_text(),
    )?;
    ensure(run.report.exit_code() != 0, || "zero exit".into())?;

    let mut cfg = harmonic_config();
    cfg.ics.v0 = 0.0;
    let run = run_scenario(&cfg);
    ensure(
        run.report.status == Status::ConfigError
            && run.report.error.as_deref().is_some_and(|e| e.contains("turning point at t=0")),
        || run.report.to_text(),
    )?;
    Ok(format!("round trip error {worst:.1e}; turning points rejected"))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("1 oracle equivalence, free particle", oracle_equivalence_free),
        ("2 oracle equivalence, SUSY oscillator", oracle_equivalence_harmonic),
        ("3 HJ residuals", hj_residuals),
        ("4 constraint algebra", constraint_algebra),
        ("5 Grassmann law suite", grassmann_laws),
        ("6 conservation", conservation),
        ("7 Jacobi constancy", jacobi_constancy),
        ("8 round trip and turning-point guards", round_trip_and_guards),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (name, check) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let outcome = panic::catch_unwind(AssertUnwindSafe(check))
            .unwrap_or_else(|p| {
                let msg = p
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_else(|| "panic".into());
                Err(format!("panicked: {msg}"))
            });
        match outcome {
            Ok(detail) => println!("PASS criterion {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {name}: {detail}");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
