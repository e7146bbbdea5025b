use std::collections::HashMap;
use schubert_core::perm::*;

fn upsilon_dfs(code: u128, n: usize, level: usize, memo: &mut HashMap<u128, f64>) -> f64 {
    if level == 0 {
        return 1.0;
    }
    if let Some(&v) = memo.get(&code) {
        return v;
    }
    let mut buf = [0u8; 25];
    unpack5(code, n, &mut buf);
    let mut acc = 0.0f64;
    for i in 1..n {
        if buf[i - 1] > buf[i] {
            let child = pack5_swap_adjacent(code, i);
            acc += i as f64 / level as f64 * upsilon_dfs(child, n, level - 1, memo);
        }
    }
    memo.insert(code, acc);
    acc
}

fn main() {
    let w = LayeredSpec::new(vec![1, 1, 4, 9]).unwrap().realize();
    let w = w.strip_trailing_fixed_points();
    let mut memo = HashMap::new();
    let v = upsilon_dfs(pack5(w.entries()), w.n(), w.length(), &mut memo);
    println!("memoized dfs descent-double n15: {:.0}", v);
    println!("memo size: {}", memo.len());
    // also the other operand order
    fn dfs2(code: u128, n: usize, level: usize, memo: &mut HashMap<u128, f64>) -> f64 {
        if level == 0 { return 1.0; }
        if let Some(&v) = memo.get(&code) { return v; }
        let mut buf = [0u8; 25];
        unpack5(code, n, &mut buf);
        let mut acc = 0.0f64;
        for i in 1..n {
            if buf[i - 1] > buf[i] {
                acc += i as f64 * dfs2(pack5_swap_adjacent(code, i), n, level - 1, memo) / level as f64;
            }
        }
        memo.insert(code, acc);
        acc
    }
    let mut memo2 = HashMap::new();
    let v2 = dfs2(pack5(w.entries()), w.n(), w.length(), &mut memo2);
    println!("variant order: {:.0}", v2);
}
