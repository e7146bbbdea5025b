use std::time::Instant;
use schubert_core::eval::*;
use schubert_core::perm::*;

fn main() {
    let w16 = LayeredSpec::new(vec![1, 1, 4, 10]).unwrap().realize();
    let t0 = Instant::now();
    let e = upsilon_cotransition(&w16, AddArith::Exact, EvalMode::Bfs).unwrap();
    println!("n16 exact: {} in {:.1}s", e.to_decimal_string(), t0.elapsed().as_secs_f64());
    let t0 = Instant::now();
    let f = upsilon_descent(&w16, DescentArith::Float).unwrap();
    println!("n16 descent-float: {} in {:.1}s", f.to_decimal_string(), t0.elapsed().as_secs_f64());
    let t0 = Instant::now();
    let cf = upsilon_cotransition(&w16, AddArith::Float, EvalMode::Bfs).unwrap();
    println!("n16 cotransition-float: {} in {:.1}s", cf.to_decimal_string(), t0.elapsed().as_secs_f64());
}
