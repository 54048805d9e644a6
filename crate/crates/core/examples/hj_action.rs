//! Closed-form action for the SUSY oscillator V = q, its residuals, and the
//! trajectories extracted from it.

use num_complex::Complex64;
use susy_hj::expr::Bindings;
use susy_hj::hj::{self, ActionField, HjSettings, HjSolver};
use susy_hj::model::SusyModel;

fn main() {
    let model = SusyModel::parse("q", None, &Bindings::new()).unwrap();
    let solver = HjSolver::new(&model, HjSettings::default());

    // x0 = 0, v0 = 1; the ψ₀ψ̄₀ soul coefficient starts at 0 with velocity 0.3
    let mut constants = solver.constants_from_ics(0.0, 1.0, 0.0, 0.3).unwrap();
    constants.origin = -0.25;
    println!("E = {}, A = {}", constants.energy, constants.a);

    let comps = solver.action_components(constants.clone()).unwrap();
    let (x, t) = (0.4, 0.3);
    println!("S0({x}, {t}) = {:.10}", comps.s0(x, t).unwrap());
    println!("S2({x}, {t}) = {}", comps.s2(x, t).unwrap());
    let r = hj::hj_residual(&comps, &model, x, t, 1e-5).unwrap();
    println!("residuals: {:.2e} {:.2e} {:.2e} {:.2e} {:.2e}", r[0], r[1], r[2], r[3], r[4]);

    let body = solver.body(constants.energy, 0.0, constants.branch_sign).unwrap();
    println!("{:>5} {:>12} {:>12} {:>12} {:>22}", "t", "x", "sin t", "soul", "a");
    for k in 0..=6 {
        let t = 0.2 * k as f64;
        let x = body.position(t).unwrap();
        let soul = body.soul_at(constants.a, 0.0, x).unwrap();
        let a = body.fermion_amplitude_at(Complex64::new(1.0, 0.0), x).unwrap();
        println!("{t:5.2} {x:12.9} {:12.9} {soul:12.9} {a:22.9}", t.sin());
    }

    match body.position(2.0) {
        Err(e) => println!("t = 2: {e}"),
        Ok(x) => println!("t = 2: unexpectedly got {x}"),
    }
}
