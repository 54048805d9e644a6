//! Second-class constraints of the SUSY Lagrangian and their multipliers.

use susy_hj::expr::Bindings;
use susy_hj::model::SusyModel;
use susy_hj::phase_space::{self, BracketConvention};

fn main() {
    let model = SusyModel::parse("q^3 - q", None, &Bindings::new()).unwrap();
    let conv = BracketConvention::default();
    let points = phase_space::sample_points(0.0, 1.0, 32, 7);

    let (f1, f2) = phase_space::build_constraints();
    println!("F1 = {f1}");
    println!("F2 = {f2}");
    println!("{{F1,F2}} = {}", phase_space::graded_poisson(&f1, &f2, conv));

    let (l1, l2) = phase_space::solve_multipliers(&model, conv, &points).unwrap();
    println!("lambda1 = {l1}");
    println!("lambda2 = {l2}");
    println!("H       = {}", phase_space::reduced_hamiltonian(&model));

    let check = phase_space::select_convention(&model, &points).unwrap();
    println!("convention: {}", check.convention);
    println!(
        "second class {}, H reproduced {} (deviation {:e}), fermion flow {}",
        check.second_class, check.hamiltonian_reproduced, check.identity_deviation, check.flow_consistent
    );
}
