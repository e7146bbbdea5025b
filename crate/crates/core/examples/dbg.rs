use std::time::Instant;

use schubert_core::eval::*;
use schubert_core::perm::*;

fn timed(label: &str, w: &Perm, arith: AddArith) {
    let t0 = Instant::now();
    let v = upsilon_cotransition(w, arith, EvalMode::Bfs).unwrap();
    println!(
        "{label}: {} in {:.2}s",
        v.to_decimal_string(),
        t0.elapsed().as_secs_f64()
    );
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let which = args.get(1).map(String::as_str).unwrap_or("all");

    if which == "n15" || which == "all" {
        let w15 = LayeredSpec::new(vec![1, 1, 4, 9]).unwrap().realize();
        timed("n15 exact", &w15, AddArith::Exact);
        let t0 = Instant::now();
        let f = upsilon_descent(&w15, DescentArith::Float).unwrap();
        println!(
            "n15 descent-float: {} in {:.2}s approx={}",
            f.to_decimal_string(),
            t0.elapsed().as_secs_f64(),
            f.approximate()
        );
        let t0 = Instant::now();
        let r = upsilon_descent(&w15, DescentArith::Rational).unwrap();
        println!(
            "n15 descent-rational: {} in {:.2}s",
            r.to_decimal_string(),
            t0.elapsed().as_secs_f64()
        );
    }

    if which == "n17" || which == "all" {
        let layered = LayeredSpec::new(vec![1, 2, 4, 10]).unwrap().realize();
        timed("w(1,2,4,10)", &layered, AddArith::Exact);
        let w_star = layered.apply_transposition(7, 8).unwrap();
        timed("w*", &w_star, AddArith::Exact);
        let u_star: Perm = "1,3,2,8,6,5,17,4,16,15,14,13,12,11,10,9,7".parse().unwrap();
        timed("u*", &u_star, AddArith::Exact);
        let vm = std::fs::read_to_string("/proc/self/status").unwrap();
        for line in vm.lines() {
            if line.starts_with("VmHWM") {
                println!("{line}");
            }
        }
    }

    if which == "trans17" {
        let layered = LayeredSpec::new(vec![1, 2, 4, 10]).unwrap().realize();
        let t0 = Instant::now();
        let v = upsilon_transition(&layered, AddArith::Exact).unwrap();
        println!(
            "transition w(1,2,4,10): {} in {:.2}s",
            v.to_decimal_string(),
            t0.elapsed().as_secs_f64()
        );
    }
}
