//! Integrating the component Euler-Lagrange equations through turning points.

use num_complex::Complex64;
use susy_hj::expr::Bindings;
use susy_hj::model::SusyModel;
use susy_hj::oracle::{self, OdeSettings, OracleState};

fn main() {
    let model = SusyModel::parse("q + 0.2*q^3", Some("1 + 0.5*q^2"), &Bindings::new()).unwrap();
    let s0 = OracleState::initial(0.1, 1.2, 0.05, 0.3);
    let traj = oracle::integrate(&s0, &model, 20.0, 2.0, &OdeSettings::default()).unwrap();
    let amps = oracle::fermion_amplitude(&traj, Complex64::new(0.6, 0.8));
    let e0 = s0.energy(&model).unwrap();

    println!("{:>5} {:>12} {:>12} {:>12} {:>10}", "t", "x", "q0", "theta", "dE/E");
    for (s, a) in traj.states.iter().zip(&amps) {
        let drift = (s.energy(&model).unwrap() - e0) / e0;
        println!("{:5.1} {:12.8} {:12.8} {:12.8} {drift:10.1e}  |a| = {:.15}", s.t, s.x, s.q0, s.theta, a.norm());
    }
}
