//! Search for permutations maximizing Υ: exhaustive dual-frontier sweep of
//! S_n, Cayley-ball neighborhood search, and the layered-permutation
//! optimum.

use std::collections::HashMap;
use std::collections::HashSet;
use std::sync::atomic::{AtomicBool, AtomicI64, Ordering};
use std::sync::Mutex;

use num_bigint::BigUint;
use thiserror::Error;

use crate::eval::{
    cotransition_descend_levels, default_frontier_cap, descent_ascend_levels, upsilon_cotransition,
    AddArith, EvalError, EvalMode,
};
use crate::perm::{compositions, pack5, unpack5, LayeredSpec, Perm, MAX_PACKED_WIDTH};

#[derive(Debug, Error)]
pub enum SearchError {
    #[error("full search limited to n <= 13, got {0}")]
    TooLarge(usize),
    #[error("frontier entry cap exceeded; per-level maxima up to the abort are attached")]
    MemoryCap { partial: Vec<(usize, BigUint)> },
    #[error(transparent)]
    Eval(#[from] EvalError),
}

#[derive(Clone, Debug)]
pub struct SearchOutcome {
    pub n: usize,
    pub best_value: BigUint,
    /// Every argmax permutation found, sorted by packed code.
    pub best_perms: Vec<Perm>,
    pub per_level_max: Vec<(usize, BigUint)>,
    pub method: &'static str,
    /// False when a budget cut the search short.
    pub exhausted: bool,
}

impl SearchOutcome {
    pub fn best_perm(&self) -> &Perm {
        &self.best_perms[0]
    }
}

/// Exhaustive search over S_n by two cooperating workers: one sweeps levels
/// upward from the identity by the descent recurrence, the other downward
/// from w0 by the cotransition recurrence. Each publishes its current level
/// and stops once the other has passed it; both track per-level maxima, so
/// the union covers every level.
pub fn full_search(n: usize, frontier_cap: Option<usize>) -> Result<SearchOutcome, SearchError> {
    if n > 13 {
        return Err(SearchError::TooLarge(n));
    }
    if n == 1 {
        return Ok(SearchOutcome {
            n,
            best_value: BigUint::from(1u32),
            best_perms: vec![Perm::identity(1)],
            per_level_max: vec![(0, BigUint::from(1u32))],
            method: "full",
            exhausted: true,
        });
    }
    let cap = frontier_cap.unwrap_or_else(default_frontier_cap);
    let lmax = n * (n - 1) / 2;
    let level_max: Mutex<Vec<Option<(u128, Vec<u128>)>>> = Mutex::new(vec![None; lmax + 1]);
    let asc_done = AtomicI64::new(-1);
    let desc_done = AtomicI64::new(lmax as i64 + 1);
    let abort = AtomicBool::new(false);

    let record = |level: usize, frontier: &[(u128, u128)]| {
        let mut best: u128 = 0;
        let mut arg: Vec<u128> = Vec::new();
        for &(code, val) in frontier {
            match val.cmp(&best) {
                std::cmp::Ordering::Greater => {
                    best = val;
                    arg.clear();
                    arg.push(code);
                }
                std::cmp::Ordering::Equal => arg.push(code),
                std::cmp::Ordering::Less => {}
            }
        }
        level_max.lock().unwrap()[level] = Some((best, arg));
    };

    let (asc_result, desc_result) = std::thread::scope(|scope| {
        let ascending = scope.spawn(|| {
            descent_ascend_levels(n, cap, |level, frontier| {
                record(level, frontier);
                asc_done.store(level as i64, Ordering::SeqCst);
                let next = level as i64 + 1;
                !abort.load(Ordering::SeqCst)
                    && next < desc_done.load(Ordering::SeqCst)
                    && next <= lmax as i64
            })
            .inspect_err(|_| abort.store(true, Ordering::SeqCst))
        });
        let descending = scope.spawn(|| {
            cotransition_descend_levels(n, cap, |level, frontier| {
                record(level, frontier);
                desc_done.store(level as i64, Ordering::SeqCst);
                let next = level as i64 - 1;
                !abort.load(Ordering::SeqCst) && next > asc_done.load(Ordering::SeqCst) && next >= 0
            })
            .inspect_err(|_| abort.store(true, Ordering::SeqCst))
        });
        (ascending.join().unwrap(), descending.join().unwrap())
    });

    let levels = level_max.into_inner().unwrap();
    let partial = || {
        levels
            .iter()
            .enumerate()
            .filter_map(|(l, e)| e.as_ref().map(|(v, _)| (l, BigUint::from(*v))))
            .collect::<Vec<_>>()
    };
    for r in [asc_result, desc_result] {
        match r {
            Err(EvalError::FrontierCap(_)) => {
                return Err(SearchError::MemoryCap { partial: partial() })
            }
            Err(e) => return Err(e.into()),
            Ok(()) => {}
        }
    }

    let mut per_level_max = Vec::with_capacity(lmax + 1);
    let mut best: u128 = 0;
    let mut arg: Vec<u128> = Vec::new();
    for (level, entry) in levels.iter().enumerate() {
        let (v, codes) = entry
            .as_ref()
            .unwrap_or_else(|| panic!("level {level} not covered by either worker"));
        per_level_max.push((level, BigUint::from(*v)));
        match v.cmp(&best) {
            std::cmp::Ordering::Greater => {
                best = *v;
                arg = codes.clone();
            }
            std::cmp::Ordering::Equal => arg.extend_from_slice(codes),
            std::cmp::Ordering::Less => {}
        }
    }
    arg.sort_unstable();
    arg.dedup();
    let mut buf = [0u8; MAX_PACKED_WIDTH];
    let best_perms = arg
        .iter()
        .map(|&code| {
            unpack5(code, n, &mut buf);
            Perm::new(buf[..n].to_vec()).expect("packed codes decode to permutations")
        })
        .collect();
    Ok(SearchOutcome {
        n,
        best_value: BigUint::from(best),
        best_perms,
        per_level_max,
        method: "full",
        exhausted: true,
    })
}

/// Evaluates Υ over the Cayley ball of the given radius around `center`
/// (all transpositions, not only adjacent ones), deduplicated by packed
/// code. An optional budget caps the number of evaluations; hitting it
/// returns the best so far, flagged. Evaluations fan out over `threads`.
pub fn neighborhood_search(
    center: &Perm,
    radius: usize,
    budget: Option<u64>,
    threads: usize,
) -> Result<SearchOutcome, SearchError> {
    assert!(radius >= 1);
    let n = center.n();
    if n > MAX_PACKED_WIDTH {
        return Err(EvalError::TooWide(n, MAX_PACKED_WIDTH).into());
    }
    let mut ball: HashSet<u128> = HashSet::new();
    ball.insert(pack5(center.entries()));
    let mut frontier = vec![center.clone()];
    for _ in 0..radius {
        let mut next = Vec::new();
        for w in &frontier {
            for a in 1..n {
                for b in a + 1..=n {
                    let v = w.apply_transposition(a, b).unwrap();
                    if ball.insert(pack5(v.entries())) {
                        next.push(v);
                    }
                }
            }
        }
        frontier = next;
    }
    let mut codes: Vec<u128> = ball.into_iter().collect();
    codes.sort_unstable();
    let mut exhausted = true;
    if let Some(b) = budget {
        if (codes.len() as u64) > b {
            codes.truncate(b as usize);
            exhausted = false;
        }
    }
    let threads = threads.max(1);
    let chunk = codes.len().div_ceil(threads);
    let results: Mutex<Vec<(u128, BigUint)>> = Mutex::new(Vec::with_capacity(codes.len()));
    let failure: Mutex<Option<EvalError>> = Mutex::new(None);
    std::thread::scope(|scope| {
        let results = &results;
        let failure = &failure;
        for piece in codes.chunks(chunk.max(1)) {
            scope.spawn(move || {
                let mut buf = [0u8; MAX_PACKED_WIDTH];
                let mut local = Vec::with_capacity(piece.len());
                for &code in piece {
                    unpack5(code, n, &mut buf);
                    let w = Perm::new(buf[..n].to_vec()).unwrap();
                    match upsilon_cotransition(&w, AddArith::Exact, EvalMode::Bfs) {
                        Ok(v) => local.push((code, v.as_biguint().unwrap())),
                        Err(e) => {
                            *failure.lock().unwrap() = Some(e);
                            return;
                        }
                    }
                }
                results.lock().unwrap().extend(local);
            });
        }
    });
    if let Some(e) = failure.into_inner().unwrap() {
        return Err(e.into());
    }
    let mut results = results.into_inner().unwrap();
    results.sort_unstable_by(|a, b| a.0.cmp(&b.0));
    let best_value = results.iter().map(|(_, v)| v).max().cloned().unwrap();
    let mut buf = [0u8; MAX_PACKED_WIDTH];
    let best_perms: Vec<Perm> = results
        .iter()
        .filter(|(_, v)| *v == best_value)
        .map(|&(code, _)| {
            unpack5(code, n, &mut buf);
            Perm::new(buf[..n].to_vec()).unwrap()
        })
        .collect();
    Ok(SearchOutcome {
        n,
        best_value,
        best_perms,
        per_level_max: Vec::new(),
        method: "neighborhood",
        exhausted,
    })
}

/// Enumerates all compositions of n in lexicographic order, evaluating the
/// layered permutation of each by the exact cotransition sweep; ties keep
/// the lexicographically smallest composition. Trailing singleton blocks are
/// fixed points, so stripped duplicates share one evaluation.
pub fn optimal_layered(n: usize) -> Result<(LayeredSpec, BigUint), SearchError> {
    assert!(n >= 1);
    let mut best: Option<(LayeredSpec, BigUint)> = None;
    let mut memo: HashMap<u128, BigUint> = HashMap::new();
    for blocks in compositions(n) {
        let spec = LayeredSpec::new(blocks).expect("compositions have positive parts");
        let w = spec.realize().strip_trailing_fixed_points();
        let key = pack5(w.entries());
        let value = match memo.get(&key) {
            Some(v) => v.clone(),
            None => {
                let v = upsilon_cotransition(&w, AddArith::Exact, EvalMode::Bfs)?
                    .as_biguint()
                    .unwrap();
                memo.insert(key, v.clone());
                v
            }
        };
        match &best {
            Some((_, b)) if *b >= value => {}
            _ => best = Some((spec, value)),
        }
    }
    Ok(best.expect("at least one composition exists"))
}
