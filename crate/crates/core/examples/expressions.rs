//! Parsing, evaluating and differentiating superpotentials.

use susy_hj::expr::{self, Bindings};

fn main() {
    let consts = Bindings::new().with("omega", 1.5).with("g", 0.2);
    let v = expr::parse("omega*q + g*q^3", &consts).unwrap();
    let dv = v.diff();
    println!("V   = {v}");
    println!("V'  = {dv}");
    println!("V'' = {}", dv.diff());

    for q in [-1.0, 0.0, 0.5] {
        println!("q = {q:5}: V = {:.6}, V' = {:.6}", v.eval(q, &consts).unwrap(), dv.eval(q, &consts).unwrap());
    }

    // printing round-trips through the parser
    let again = expr::parse(&dv.to_string(), &consts).unwrap();
    assert_eq!(again.eval(0.3, &consts).unwrap(), dv.eval(0.3, &consts).unwrap());

    for bad in ["q +", "sin(q", "q^0.5", "lambda*q"] {
        println!("{bad:12} -> {}", expr::parse(bad, &consts).unwrap_err());
    }
    let root = expr::parse("sqrt(q)", &consts).unwrap();
    println!("sqrt(-1)     -> {}", root.eval(-1.0, &consts).unwrap_err());
}
