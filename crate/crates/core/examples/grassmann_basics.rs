//! Arithmetic in the two-generator algebra spanned by ψ₀ and ψ̄₀.

use num_complex::Complex64;
use susy_hj::expr::{self, Bindings};
use susy_hj::grassmann::GrassmannElement;

fn main() {
    let psi = GrassmannElement::psi0();
    let psibar = GrassmannElement::psibar0();

    println!("psi psibar     = {}", &psi * &psibar);
    println!("psibar psi     = {}", &psibar * &psi);
    println!("psi psi        = {}", &psi * &psi);

    // conjugation swaps the pair and reverses products
    let z = psi.scale(Complex64::new(0.0, 2.0));
    println!("conj(2i psi)   = {}", z.conj().unwrap());
    let sigma = &psibar * &psi;
    println!("conj(psibar psi) = {}", sigma.conj().unwrap());

    // an even supernumber q = x + n ψ̄₀ψ₀ and a function of it
    let q = &GrassmannElement::scalar(2, 0.7) + &sigma.scale(0.3);
    let (body, soul) = q.split();
    println!("body {body}, soul {soul}");

    let consts = Bindings::new();
    let f = expr::parse("sin(q)", &consts).unwrap();
    let lifted = q.lift(&f, &consts).unwrap();
    println!("sin(q)         = {lifted}");
    println!("check: sin(0.7) = {:.12}, 0.3 cos(0.7) = {:.12}", 0.7f64.sin(), 0.3 * 0.7f64.cos());
}
