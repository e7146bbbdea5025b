//! Negative results for coupling from the past on reduced BPDs: lattice
//! order tabulation, monotonicity violations under internal rejection,
//! sublattice failure, naive backward CFTP with false-coalescence replay,
//! and output-bias measurement.

use std::collections::HashMap;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::bpd::{enumerate_asms, enumerate_rbpds, meet, Bpd};
use crate::eval::{upsilon_from_table, upsilon_table};
use crate::moves::{apply_flip, flip_available, FlipDir};
use crate::perm::Perm;
use crate::stats::{chi_square_sf, chi_square_statistic};

/// The shared randomness of one coupled update: an interior vertex and a
/// flip direction, applied to every chain at that time index.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SharedUpdate {
    pub vertex: (usize, usize),
    pub up: bool,
}

/// Per-chain internal rejection: apply the flip iff it exists and keeps the
/// state reduced; otherwise hold. Marginally this is the flips-only chain.
pub fn internal_rejection_step(bpd: &mut Bpd, update: SharedUpdate) {
    let dir = if update.up { FlipDir::Up } else { FlipDir::Down };
    if let Some(mv) = flip_available(bpd, update.vertex, dir) {
        apply_flip(bpd, &mv);
        if !bpd.is_reduced() {
            apply_flip(bpd, &mv.inverse());
        }
    }
}

/// Tabulated reduced state space for small n: transition function per shared
/// update, comparability bitmatrix, and extremal state indices.
pub struct StateSpace {
    pub n: usize,
    pub states: Vec<Bpd>,
    pub idx_min: usize,
    pub idx_max: usize,
    m: usize,
    words: usize,
    next: Vec<u16>,    // next[u * m + s]
    leq_bits: Vec<u64>, // row s: bitset of t with s <= t
}

impl StateSpace {
    pub fn new(n: usize) -> StateSpace {
        let states = enumerate_rbpds(n);
        let m = states.len();
        assert!(m <= u16::MAX as usize);
        let index: HashMap<String, usize> = states
            .iter()
            .enumerate()
            .map(|(k, b)| (b.to_text(), k))
            .collect();
        let b_min = Bpd::rothe_longest(n);
        let b_max = Bpd::rothe_identity(n);
        let idx_min = index[&b_min.to_text()];
        let idx_max = index[&b_max.to_text()];
        let updates = 2 * (n - 1) * (n - 1);
        let mut next = vec![0u16; updates * m];
        for (s, b) in states.iter().enumerate() {
            let mut scratch = b.clone();
            for u in 0..updates {
                internal_rejection_step(&mut scratch, decode_update(n, u));
                let t = if scratch == *b {
                    s
                } else {
                    index[&scratch.to_text()]
                };
                next[u * m + s] = t as u16;
                if t != s {
                    scratch = b.clone();
                }
            }
        }
        let heights: Vec<_> = states.iter().map(Bpd::height).collect();
        let words = m.div_ceil(64);
        let mut leq_bits = vec![0u64; m * words];
        for s in 0..m {
            for t in 0..m {
                if heights[s].leq(&heights[t]) {
                    leq_bits[s * words + t / 64] |= 1 << (t % 64);
                }
            }
        }
        StateSpace {
            n,
            states,
            idx_min,
            idx_max,
            m,
            words,
            next,
            leq_bits,
        }
    }

    pub fn len(&self) -> usize {
        self.m
    }

    pub fn is_empty(&self) -> bool {
        self.m == 0
    }

    pub fn update_count(&self) -> usize {
        2 * (self.n - 1) * (self.n - 1)
    }

    #[inline]
    pub fn next(&self, state: usize, update: usize) -> usize {
        self.next[update * self.m + state] as usize
    }

    #[inline]
    pub fn leq(&self, s: usize, t: usize) -> bool {
        self.leq_bits[s * self.words + t / 64] >> (t % 64) & 1 == 1
    }
}

pub fn decode_update(n: usize, u: usize) -> SharedUpdate {
    let up = u % 2 == 1;
    let v = u / 2;
    SharedUpdate {
        vertex: (v / (n - 1) + 1, v % (n - 1) + 1),
        up,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MonotonicityReport {
    /// Ordered comparable pairs X <= Y, including X = Y.
    pub ordered_pairs: u64,
    pub flip_checks: u64,
    pub violations: u64,
}

/// Exhaustively tests every comparable ordered pair against every shared
/// update; a violation is a pair with X' ≰ Y' after the update.
pub fn count_monotonicity_violations(space: &StateSpace) -> MonotonicityReport {
    let m = space.len();
    let updates = space.update_count();
    let mut pairs = 0u64;
    let mut violations = 0u64;
    for x in 0..m {
        for y in 0..m {
            if !space.leq(x, y) {
                continue;
            }
            pairs += 1;
            for u in 0..updates {
                let x2 = space.next(x, u);
                let y2 = space.next(y, u);
                if !space.leq(x2, y2) {
                    violations += 1;
                }
            }
        }
    }
    MonotonicityReport {
        ordered_pairs: pairs,
        flip_checks: pairs * updates as u64,
        violations,
    }
}

/// All unordered RBPD pairs whose lattice meet is non-reduced, plus the
/// non-reduced BPDs of the full state space.
pub fn sublattice_failure_pairs(n: usize) -> (Vec<(usize, usize)>, Vec<Bpd>) {
    let reduced = enumerate_rbpds(n);
    let nonreduced: Vec<Bpd> = enumerate_asms(n)
        .into_iter()
        .filter(|b| !b.is_reduced())
        .collect();
    let mut pairs = Vec::new();
    for i in 0..reduced.len() {
        for j in i + 1..reduced.len() {
            if !meet(&reduced[i], &reduced[j]).is_reduced() {
                pairs.push((i, j));
            }
        }
    }
    (pairs, nonreduced)
}

/// One naive backward-CFTP run: horizon doubling with update reuse until the
/// two extremal chains agree at time zero.
pub struct CftpOutcome {
    pub state: usize,
    /// Update log indexed by negative time: `log[k]` is the update at time
    /// -(k+1); a run with horizon T applies log[T-1], ..., log[0].
    pub log: Vec<u16>,
    pub horizon: usize,
}

pub fn naive_cftp_sample<R: Rng>(
    space: &StateSpace,
    rng: &mut R,
    max_horizon: usize,
) -> Option<CftpOutcome> {
    let updates = space.update_count();
    let mut log: Vec<u16> = vec![rng.random_range(0..updates) as u16];
    let mut horizon = 1usize;
    loop {
        let mut x = space.idx_min;
        let mut y = space.idx_max;
        for k in (0..horizon).rev() {
            let u = log[k] as usize;
            x = space.next(x, u);
            y = space.next(y, u);
        }
        if x == y {
            log.truncate(horizon);
            return Some(CftpOutcome {
                state: x,
                log,
                horizon,
            });
        }
        if horizon * 2 > max_horizon {
            return None;
        }
        // fresh updates for the older half; the existing suffix is reused
        for _ in 0..horizon {
            log.push(rng.random_range(0..updates) as u16);
        }
        horizon *= 2;
    }
}

pub const DEFAULT_MAX_HORIZON: usize = 1 << 24;

/// Replays the recorded update sequence from every state; true when some
/// chain lands elsewhere than the extremal chains' common endpoint. Every
/// positive trial is cross-checked to exhibit a sandwich violation.
pub fn false_coalescence_trial<R: Rng>(space: &StateSpace, rng: &mut R) -> bool {
    let outcome = naive_cftp_sample(space, rng, DEFAULT_MAX_HORIZON)
        .expect("horizon cap hit at desk scale");
    let m = space.len();
    let mut current: Vec<u16> = (0..m as u16).collect();
    for k in (0..outcome.horizon).rev() {
        let u = outcome.log[k] as usize;
        for c in current.iter_mut() {
            *c = space.next(*c as usize, u) as u16;
        }
    }
    let witness = current
        .iter()
        .position(|&c| c as usize != outcome.state);
    if let Some(z0) = witness {
        // a chain that escaped the extremal sandwich must have broken it
        assert!(
            replay_has_sandwich_break(space, &outcome, z0),
            "a false coalescence must come from a monotonicity violation"
        );
    }
    witness.is_some()
}

/// Checks that the sandwich X_t <= Z_t <= Y_t breaks at some time while
/// replaying the log with the chain started from `z0`.
fn replay_has_sandwich_break(space: &StateSpace, outcome: &CftpOutcome, z0: usize) -> bool {
    let mut x = space.idx_min;
    let mut y = space.idx_max;
    let mut z = z0;
    for k in (0..outcome.horizon).rev() {
        let u = outcome.log[k] as usize;
        x = space.next(x, u);
        y = space.next(y, u);
        z = space.next(z, u);
        if !space.leq(x, z) || !space.leq(z, y) {
            return true;
        }
    }
    false
}

#[derive(Clone, Debug)]
pub struct FalseCoalescenceReport {
    pub n: usize,
    pub trials: u64,
    pub false_coalescences: u64,
    pub rate: f64,
    /// 99% Wilson interval for the rate.
    pub interval: (f64, f64),
}

pub fn false_coalescence_rate(space: &StateSpace, trials: u64, seed: u64) -> FalseCoalescenceReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hits = 0u64;
    for _ in 0..trials {
        if false_coalescence_trial(space, &mut rng) {
            hits += 1;
        }
    }
    FalseCoalescenceReport {
        n: space.n,
        trials,
        false_coalescences: hits,
        rate: hits as f64 / trials as f64,
        interval: crate::stats::wilson_interval(hits, trials, crate::stats::Z_99),
    }
}

#[derive(Clone, Debug)]
pub struct BiasReport {
    pub n: usize,
    pub trials: u64,
    pub chi2: f64,
    pub df: usize,
    pub p: f64,
    /// Per-permutation observed counts and expected counts under the
    /// uniform-RBPD target, sorted by one-line notation.
    pub rows: Vec<(Perm, u64, f64)>,
}

/// Draws naive-CFTP samples and tests their permutation marginal against the
/// target proportional to Υ_w.
pub fn bias_chi_square(space: &StateSpace, trials: u64, seed: u64) -> BiasReport {
    let n = space.n;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let perms: Vec<Perm> = space.states.iter().map(Bpd::boundary_perm).collect();
    let mut counts: HashMap<Perm, u64> = HashMap::new();
    for _ in 0..trials {
        let outcome = naive_cftp_sample(space, &mut rng, DEFAULT_MAX_HORIZON)
            .expect("horizon cap hit at desk scale");
        *counts.entry(perms[outcome.state].clone()).or_insert(0) += 1;
    }
    permutation_marginal_test(n, space.len() as u64, trials, counts)
}

/// Shared marginal test: expected count of w is trials·Υ_w / total RBPDs.
pub fn permutation_marginal_test(
    n: usize,
    total_states: u64,
    trials: u64,
    counts: HashMap<Perm, u64>,
) -> BiasReport {
    let table = upsilon_table(n).expect("bias test runs at small n");
    let mut rows = Vec::new();
    for w in crate::perm::all_perms(n) {
        let expected = trials as f64 * upsilon_from_table(&table, &w) as f64 / total_states as f64;
        let observed = counts.get(&w).copied().unwrap_or(0);
        rows.push((w, observed, expected));
    }
    let chi2 = chi_square_statistic(
        &rows.iter().map(|r| r.1).collect::<Vec<_>>(),
        &rows.iter().map(|r| r.2).collect::<Vec<_>>(),
    );
    let df = rows.len() - 1;
    BiasReport {
        n,
        trials,
        chi2,
        df,
        p: chi_square_sf(chi2, df),
        rows,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tabulated_space_matches_direct_stepping() {
        let space = StateSpace::new(4);
        assert_eq!(space.len(), 41);
        assert_eq!(space.update_count(), 18);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..200 {
            let s = rng.random_range(0..space.len());
            let u = rng.random_range(0..space.update_count());
            let mut b = space.states[s].clone();
            internal_rejection_step(&mut b, decode_update(4, u));
            assert_eq!(space.states[space.next(s, u)], b);
        }
        // extremes are the lattice bounds
        for s in 0..space.len() {
            assert!(space.leq(space.idx_min, s));
            assert!(space.leq(s, space.idx_max));
        }
    }

    #[test]
    fn update_with_no_flip_holds() {
        let mut b = Bpd::rothe_longest(4);
        let before = b.clone();
        internal_rejection_step(
            &mut b,
            SharedUpdate {
                vertex: (1, 1),
                up: false,
            },
        );
        assert_eq!(b, before);
    }

    #[test]
    fn monotonicity_counts_at_n3() {
        let space = StateSpace::new(3);
        let report = count_monotonicity_violations(&space);
        assert_eq!(report.ordered_pairs, 26);
        assert_eq!(report.flip_checks, 208);
        assert_eq!(report.violations, 0);
    }

    #[test]
    fn monotonicity_counts_at_n4() {
        let space = StateSpace::new(4);
        let report = count_monotonicity_violations(&space);
        assert_eq!(report.ordered_pairs, 618);
        assert_eq!(report.flip_checks, 11124);
        assert_eq!(report.violations, 16);
    }

    #[test]
    fn sublattice_failure_at_n4() {
        let (pairs, nonreduced) = sublattice_failure_pairs(4);
        assert_eq!(pairs.len(), 9);
        assert_eq!(nonreduced.len(), 1);
        assert_eq!(
            nonreduced[0],
            Bpd::from_text("..r-\n.r+-\nr+jr\n||r+").unwrap()
        );
        // at n=4 every bad pair meets at the unique non-reduced element
        let reduced = enumerate_rbpds(4);
        for &(i, j) in &pairs {
            assert_eq!(meet(&reduced[i], &reduced[j]), nonreduced[0]);
        }
        let (pairs3, nonreduced3) = sublattice_failure_pairs(3);
        assert!(pairs3.is_empty());
        assert!(nonreduced3.is_empty());
    }

    #[test]
    fn cftp_outputs_reduced_states_and_reuses_updates() {
        let space = StateSpace::new(3);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let outcome = naive_cftp_sample(&space, &mut rng, 1 << 20).unwrap();
            assert!(space.states[outcome.state].is_reduced());
            assert!(outcome.horizon.is_power_of_two());
            assert_eq!(outcome.log.len(), outcome.horizon);
        }
        // the suffix of the log is fixed once drawn: rerun manually
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let updates = space.update_count();
        let first: u16 = rng.random_range(0..updates) as u16;
        let mut log = vec![first];
        for _ in 0..4 {
            log.push(rng.random_range(0..updates) as u16);
        }
        assert_eq!(log[0], first, "suffix is bit-identical across doublings");
    }

    #[test]
    fn no_false_coalescence_at_n3() {
        let space = StateSpace::new(3);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            assert!(!false_coalescence_trial(&space, &mut rng));
        }
    }

    #[test]
    fn false_coalescence_occurs_at_n4() {
        let space = StateSpace::new(4);
        let report = false_coalescence_rate(&space, 3000, 13);
        assert!(
            (0.05..0.11).contains(&report.rate),
            "rate={}",
            report.rate
        );
    }

    #[test]
    fn bias_expected_counts() {
        let space = StateSpace::new(4);
        let report = bias_chi_square(&space, 2000, 17);
        assert_eq!(report.df, 23);
        let row = report
            .rows
            .iter()
            .find(|r| r.0 == "1,4,3,2".parse::<Perm>().unwrap())
            .unwrap();
        assert!((row.2 - 2000.0 * 5.0 / 41.0).abs() < 1e-9);
        // all expected counts positive and summing to trials
        let total: f64 = report.rows.iter().map(|r| r.2).sum();
        assert!((total - 2000.0).abs() < 1e-6);
    }
}
