//! Ergodic uniform sampler over reduced BPDs: 2×2 flips mixed with
//! rectangular droops/undroops, with configurable rectangle-size proposal
//! distributions, burn-in/thinning, and statistics accumulation.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::bpd::{Bpd, HeightGrid};
use crate::moves::{apply_droop, apply_flip, apply_undroop, flip_available, DroopRect, FlipDir};
use crate::perm::Perm;

/// Distribution over droop-rectangle offsets, truncated at the available
/// range. All four families are sampled exactly (integer draws only).
#[derive(Clone, Copy, PartialEq, Eq, Debug, Default)]
pub enum RectDist {
    /// P(k) ∝ 2^{-k}
    #[default]
    Geometric,
    Uniform,
    /// P(k) ∝ 1/k
    LogUniform,
    /// P(k) ∝ 1/(max+1-k)
    ReverseLogUniform,
}

#[derive(Clone, Copy, Debug)]
pub struct ProposalConfig {
    pub flip_probability: f64,
    pub rect_dist: RectDist,
}

impl Default for ProposalConfig {
    fn default() -> Self {
        ProposalConfig {
            flip_probability: 0.75,
            rect_dist: RectDist::Geometric,
        }
    }
}

#[derive(Clone, Debug, Default)]
pub enum StartState {
    /// The Rothe BPD of w0, the lattice minimum; the recommended start.
    #[default]
    RotheLongest,
    /// The Rothe BPD of the identity, the lattice maximum.
    RotheIdentity,
    Given(Box<Bpd>),
}

#[derive(Clone, Debug)]
pub struct ChainConfig {
    pub n: usize,
    pub seed: u64,
    /// Stream splitting: the chain RNG is seeded with `seed ^ chain_index`.
    pub chain_index: u64,
    pub start: StartState,
    pub burn_in: u64,
    pub thinning: u64,
    pub samples: u64,
    pub proposal: ProposalConfig,
    pub keep_samples: bool,
    pub keep_heights: bool,
}

impl ChainConfig {
    pub fn new(n: usize, seed: u64) -> Self {
        ChainConfig {
            n,
            seed,
            chain_index: 0,
            start: StartState::default(),
            burn_in: 10_000_000,
            thinning: 100_000,
            samples: 100,
            proposal: ProposalConfig::default(),
            keep_samples: false,
            keep_heights: false,
        }
    }
}

/// Accumulated collection-phase statistics. Mergeable across chains; merge
/// chains in index order for deterministic traces.
#[derive(Clone, Debug)]
pub struct SampleStats {
    pub n: usize,
    pub count: u64,
    /// Row-major n×n counts: entry (i,j) counts samples with w(i) = j.
    pub perm_matrix_sum: Vec<u64>,
    /// Row-major (n+1)×(n+1) sums of the height function.
    pub height_sum: Vec<u64>,
    /// Boundary length of each collected sample, in collection order.
    pub length_trace: Vec<u32>,
    pub samples: Option<Vec<Perm>>,
    pub heights: Option<Vec<HeightGrid>>,
}

impl SampleStats {
    pub fn new(n: usize, keep_samples: bool, keep_heights: bool) -> Self {
        SampleStats {
            n,
            count: 0,
            perm_matrix_sum: vec![0; n * n],
            height_sum: vec![0; (n + 1) * (n + 1)],
            length_trace: Vec::new(),
            samples: keep_samples.then(Vec::new),
            heights: keep_heights.then(Vec::new),
        }
    }

    pub fn record(&mut self, bpd: &Bpd) {
        let n = self.n;
        let w = bpd.boundary_perm();
        self.count += 1;
        for i in 1..=n {
            self.perm_matrix_sum[(i - 1) * n + (w.at(i) - 1)] += 1;
        }
        let h = bpd.height();
        for (sum, v) in self.height_sum.iter_mut().zip(h.values()) {
            *sum += *v as u64;
        }
        self.length_trace.push(bpd.inversion_count() as u32);
        if let Some(samples) = &mut self.samples {
            samples.push(w);
        }
        if let Some(heights) = &mut self.heights {
            heights.push(h);
        }
    }

    /// Associative, order-independent on the grid sums; traces concatenate
    /// in call order.
    pub fn merge(mut self, other: SampleStats) -> SampleStats {
        assert_eq!(self.n, other.n);
        self.count += other.count;
        for (a, b) in self.perm_matrix_sum.iter_mut().zip(&other.perm_matrix_sum) {
            *a += b;
        }
        for (a, b) in self.height_sum.iter_mut().zip(&other.height_sum) {
            *a += b;
        }
        self.length_trace.extend(other.length_trace);
        self.samples = match (self.samples, other.samples) {
            (Some(mut a), Some(b)) => {
                a.extend(b);
                Some(a)
            }
            _ => None,
        };
        self.heights = match (self.heights, other.heights) {
            (Some(mut a), Some(b)) => {
                a.extend(b);
                Some(a)
            }
            _ => None,
        };
        self
    }

    /// Average height function as a flat (n+1)×(n+1) grid.
    pub fn average_height(&self) -> Vec<f64> {
        self.height_sum
            .iter()
            .map(|&s| s as f64 / self.count as f64)
            .collect()
    }

    /// Average permutation matrix, row-major n×n.
    pub fn average_perm_matrix(&self) -> Vec<f64> {
        self.perm_matrix_sum
            .iter()
            .map(|&s| s as f64 / self.count as f64)
            .collect()
    }
}

/// A proposed move: a flip at an interior vertex or a droop/undroop
/// rectangle (its mode is decided by the current state).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Move {
    Flip { vertex: (usize, usize), up: bool },
    Rect(DroopRect),
}

/// Exact sampling from the truncated offset distribution on 1..=max.
pub fn sample_offset<R: Rng>(rng: &mut R, dist: RectDist, max: usize) -> usize {
    debug_assert!(max >= 1);
    match dist {
        RectDist::Geometric => loop {
            // run of fair coins; retry on truncation overflow
            let mut k = 1;
            while k <= max && rng.random::<bool>() {
                k += 1;
            }
            if k <= max {
                return k;
            }
        },
        RectDist::Uniform => rng.random_range(1..=max),
        RectDist::LogUniform => loop {
            // accept k with probability 1/k
            let k = rng.random_range(1..=max);
            if rng.random_range(0..k) == 0 {
                return k;
            }
        },
        RectDist::ReverseLogUniform => {
            max + 1 - sample_offset(rng, RectDist::LogUniform, max)
        }
    }
}

/// One proposal: with `flip_probability` a uniform interior vertex and fair
/// direction; otherwise a rectangle with uniform SE corner on {2..n}² and
/// offsets from the configured distribution. Each rectangle is proposed with
/// probability independent of the state, pairing every droop with its
/// undroop.
pub fn propose<R: Rng>(rng: &mut R, cfg: &ProposalConfig, n: usize) -> Move {
    debug_assert!(n >= 2);
    if rng.random_bool(cfg.flip_probability) {
        let vertex = (rng.random_range(1..n), rng.random_range(1..n));
        let up = rng.random::<bool>();
        Move::Flip { vertex, up }
    } else {
        let bi = rng.random_range(2..=n);
        let bj = rng.random_range(2..=n);
        let di = sample_offset(rng, cfg.rect_dist, bi - 1);
        let dj = sample_offset(rng, cfg.rect_dist, bj - 1);
        Move::Rect(DroopRect {
            top: bi - di,
            bottom: bi,
            left: bj - dj,
            right: bj,
        })
    }
}

/// One chain step: apply the proposed move if legal, else hold. Rejected
/// proposals still count as steps. Returns whether the move was accepted.
pub fn step<R: Rng>(bpd: &mut Bpd, rng: &mut R, cfg: &ProposalConfig) -> bool {
    let accepted = match propose(rng, cfg, bpd.n()) {
        Move::Flip { vertex, up } => {
            let dir = if up { FlipDir::Up } else { FlipDir::Down };
            match flip_available(bpd, vertex, dir) {
                Some(mv) => {
                    apply_flip(bpd, &mv);
                    if bpd.is_reduced() {
                        true
                    } else {
                        apply_flip(bpd, &mv.inverse());
                        false
                    }
                }
                None => false,
            }
        }
        Move::Rect(rect) => {
            apply_droop(bpd, &rect).is_ok() || apply_undroop(bpd, &rect).is_ok()
        }
    };
    debug_assert!(bpd.is_reduced());
    accepted
}

/// Runs burn-in then `samples` collections at the thinning interval.
/// Deterministic for a given seed and chain index. Reducedness is asserted
/// through the cached counts each step and against a full cache rebuild
/// every 10^4 steps.
pub fn run_chain(cfg: &ChainConfig) -> SampleStats {
    let mut bpd = match &cfg.start {
        StartState::RotheLongest => Bpd::rothe_longest(cfg.n),
        StartState::RotheIdentity => Bpd::rothe_identity(cfg.n),
        StartState::Given(b) => (**b).clone(),
    };
    assert!(cfg.thinning >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ cfg.chain_index);
    let mut stats = SampleStats::new(cfg.n, cfg.keep_samples, cfg.keep_heights);
    let mut steps: u64 = 0;
    let tick = |bpd: &mut Bpd, rng: &mut ChaCha8Rng, steps: &mut u64| {
        step(bpd, rng, &cfg.proposal);
        *steps += 1;
        if *steps % 10_000 == 0 {
            assert!(bpd.caches_consistent(), "incremental caches drifted");
        }
    };
    for _ in 0..cfg.burn_in {
        tick(&mut bpd, &mut rng, &mut steps);
    }
    for _ in 0..cfg.samples {
        for _ in 0..cfg.thinning {
            tick(&mut bpd, &mut rng, &mut steps);
        }
        stats.record(&bpd);
    }
    stats
}

/// Pearson correlation of consecutive trace values; None when fewer than
/// three points or the trace is constant.
pub fn lag1_autocorrelation(trace: &[u32]) -> Option<f64> {
    if trace.len() < 3 {
        return None;
    }
    let xs: Vec<f64> = trace[..trace.len() - 1].iter().map(|&v| v as f64).collect();
    let ys: Vec<f64> = trace[1..].iter().map(|&v| v as f64).collect();
    crate::stats::pearson(&xs, &ys)
}

/// Geweke-style burn-in diagnostic: z-score comparing the mean of the first
/// `frac_a` of the trace against the last `frac_b`, under an independence
/// approximation. Exposed for inspection, never used as a gate.
pub fn geweke_z(trace: &[u32], frac_a: f64, frac_b: f64) -> Option<f64> {
    let len = trace.len();
    let na = (len as f64 * frac_a) as usize;
    let nb = (len as f64 * frac_b) as usize;
    if na < 2 || nb < 2 || na + nb > len {
        return None;
    }
    let a: Vec<f64> = trace[..na].iter().map(|&v| v as f64).collect();
    let b: Vec<f64> = trace[len - nb..].iter().map(|&v| v as f64).collect();
    let (ma, va) = crate::stats::mean_var(&a)?;
    let (mb, vb) = crate::stats::mean_var(&b)?;
    let denom = (va / a.len() as f64 + vb / b.len() as f64).sqrt();
    (denom > 0.0).then(|| (ma - mb) / denom)
}

/// Discrete mixed derivative of an averaged height grid: the n×n grid of
/// window second differences.
pub fn mixed_difference(n: usize, avg_height: &[f64]) -> Vec<f64> {
    assert_eq!(avg_height.len(), (n + 1) * (n + 1));
    let at = |i: usize, j: usize| avg_height[i * (n + 1) + j];
    let mut out = Vec::with_capacity(n * n);
    for i in 1..=n {
        for j in 1..=n {
            out.push(at(i, j) - at(i - 1, j) - at(i, j - 1) + at(i - 1, j - 1));
        }
    }
    out
}

/// Pointwise fluctuation h_t - h̄ of one sample against the running average.
pub fn fluctuation(h: &HeightGrid, avg_height: &[f64]) -> Vec<f64> {
    assert_eq!(avg_height.len(), (h.n + 1) * (h.n + 1));
    h.values()
        .iter()
        .zip(avg_height)
        .map(|(&v, &a)| v as f64 - a)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn offsets_forced_and_normalized() {
        let mut r = rng(1);
        for dist in [
            RectDist::Geometric,
            RectDist::Uniform,
            RectDist::LogUniform,
            RectDist::ReverseLogUniform,
        ] {
            assert_eq!(sample_offset(&mut r, dist, 1), 1);
        }
        // geometric at max=2: P(1)=2/3, P(2)=1/3
        let mut counts = [0u64; 2];
        for _ in 0..300_000 {
            counts[sample_offset(&mut r, RectDist::Geometric, 2) - 1] += 1;
        }
        let p1 = counts[0] as f64 / 300_000.0;
        assert!((p1 - 2.0 / 3.0).abs() < 0.005, "p1={p1}");
    }

    #[test]
    fn offset_frequencies_match_targets() {
        // empirical frequencies vs exact weights at max=10, 3-sigma bounds
        let max = 10;
        let trials = 1_000_000u64;
        let weights = |dist: RectDist, k: usize| -> f64 {
            match dist {
                RectDist::Geometric => 0.5f64.powi(k as i32),
                RectDist::Uniform => 1.0,
                RectDist::LogUniform => 1.0 / k as f64,
                RectDist::ReverseLogUniform => 1.0 / (max + 1 - k) as f64,
            }
        };
        for dist in [
            RectDist::Geometric,
            RectDist::Uniform,
            RectDist::LogUniform,
            RectDist::ReverseLogUniform,
        ] {
            let mut r = rng(7 + dist as u64);
            let mut counts = vec![0u64; max];
            for _ in 0..trials {
                counts[sample_offset(&mut r, dist, max) - 1] += 1;
            }
            let total: f64 = (1..=max).map(|k| weights(dist, k)).sum();
            for k in 1..=max {
                let p = weights(dist, k) / total;
                let sigma = (trials as f64 * p * (1.0 - p)).sqrt();
                let diff = counts[k - 1] as f64 - trials as f64 * p;
                // 4 sigma per bin keeps the family-wise error tiny over
                // the 40 bins checked here
                assert!(
                    diff.abs() < 4.0 * sigma + 1.0,
                    "{dist:?} k={k}: diff {diff:.1}, sigma {sigma:.1}"
                );
            }
        }
    }

    #[test]
    fn proposal_split_and_rect_marginal() {
        let n = 6;
        let cfg = ProposalConfig::default();
        let mut r = rng(11);
        let trials = 1_000_000;
        let mut flips = 0u64;
        let mut corner_counts: HashMap<(usize, usize), u64> = HashMap::new();
        for _ in 0..trials {
            match propose(&mut r, &cfg, n) {
                Move::Flip { vertex, up: _ } => {
                    flips += 1;
                    assert!((1..n).contains(&vertex.0) && (1..n).contains(&vertex.1));
                }
                Move::Rect(rect) => {
                    assert!(rect.top < rect.bottom && rect.left < rect.right);
                    *corner_counts.entry((rect.bottom, rect.right)).or_insert(0) += 1;
                }
            }
        }
        let p = flips as f64 / trials as f64;
        let sigma = (0.75 * 0.25 / trials as f64).sqrt();
        assert!((p - 0.75).abs() < 4.0 * sigma, "flip fraction {p}");
        // SE corner uniform over the (n-1)^2 choices
        let rects = trials - flips;
        let expect = rects as f64 / 25.0;
        for count in corner_counts.values() {
            let diff = *count as f64 - expect;
            let sigma = (rects as f64 * (1.0 / 25.0) * (24.0 / 25.0)).sqrt();
            assert!(diff.abs() < 4.0 * sigma);
        }
        assert_eq!(corner_counts.len(), 25);
    }

    #[test]
    fn minimum_rejects_down_flips() {
        let mut b = Bpd::rothe_longest(3);
        for i in 1..3 {
            for j in 1..3 {
                assert!(flip_available(&b, (i, j), FlipDir::Down).is_none());
            }
        }
        // the chain holds on rejected proposals
        let before = b.clone();
        let mut r = rng(3);
        let cfg = ProposalConfig {
            flip_probability: 1.0 - 1e-12,
            ..Default::default()
        };
        let mut rejected = false;
        for _ in 0..50 {
            if !step(&mut b, &mut r, &cfg) {
                rejected = true;
                break;
            }
        }
        assert!(rejected || b == before || b.is_reduced());
    }

    #[test]
    fn chain_visits_all_states_at_n4() {
        let mut b = Bpd::rothe_longest(4);
        let mut r = rng(5);
        let cfg = ProposalConfig::default();
        let mut seen: HashMap<String, u64> = HashMap::new();
        for _ in 0..200_000 {
            step(&mut b, &mut r, &cfg);
            *seen.entry(b.to_text()).or_insert(0) += 1;
        }
        assert_eq!(seen.len(), 41, "all reduced states visited");
    }

    #[test]
    fn determinism_and_merge() {
        let mut cfg = ChainConfig::new(4, 42);
        cfg.burn_in = 500;
        cfg.thinning = 10;
        cfg.samples = 50;
        let a = run_chain(&cfg);
        let b = run_chain(&cfg);
        assert_eq!(a.length_trace, b.length_trace);
        assert_eq!(a.count, 50);
        // row and column sums of the permutation matrix equal the count
        for i in 0..4 {
            let row: u64 = (0..4).map(|j| a.perm_matrix_sum[i * 4 + j]).sum();
            let col: u64 = (0..4).map(|j| a.perm_matrix_sum[j * 4 + i]).sum();
            assert_eq!(row, a.count);
            assert_eq!(col, a.count);
        }
        let mut cfg2 = cfg.clone();
        cfg2.chain_index = 1;
        let c = run_chain(&cfg2);
        assert_ne!(a.length_trace, c.length_trace, "streams split");
        let merged = a.clone().merge(c);
        assert_eq!(merged.count, 100);
        let zero = SampleStats::new(4, false, false);
        assert_eq!(zero.count, 0);
    }

    #[test]
    fn lag1_examples() {
        let alternating: Vec<u32> = (0..100).map(|k| k % 2).collect();
        let r = lag1_autocorrelation(&alternating).unwrap();
        assert!((r + 1.0).abs() < 1e-9, "r={r}");
        assert!(lag1_autocorrelation(&[1, 1, 1, 1]).is_none());
        assert!(lag1_autocorrelation(&[1, 2]).is_none());
        // iid uniform trace decorrelates
        let mut r0 = rng(9);
        let iid: Vec<u32> = (0..100_000).map(|_| r0.random_range(0..100)).collect();
        let rho = lag1_autocorrelation(&iid).unwrap();
        assert!(rho.abs() < 0.02, "rho={rho}");
    }

    #[test]
    fn mixed_difference_of_single_sample_is_its_asm() {
        let b = Bpd::rothe(&"3,1,4,2".parse::<Perm>().unwrap());
        let mut stats = SampleStats::new(4, false, true);
        stats.record(&b);
        let avg = stats.average_height();
        let md = mixed_difference(4, &avg);
        let asm = crate::bpd::asm_of(&b);
        for i in 1..=4 {
            for j in 1..=4 {
                assert!((md[(i - 1) * 4 + (j - 1)] - asm.at(i, j) as f64).abs() < 1e-12);
            }
        }
        assert!((md.iter().sum::<f64>() - 4.0).abs() < 1e-9);
        let fluct = fluctuation(&stats.heights.as_ref().unwrap()[0], &avg);
        assert!(fluct.iter().all(|&v| v.abs() < 1e-12));
    }

    #[test]
    fn geweke_on_stationary_trace_is_small() {
        let mut r0 = rng(13);
        let trace: Vec<u32> = (0..20_000).map(|_| r0.random_range(0..50)).collect();
        let z = geweke_z(&trace, 0.1, 0.5).unwrap();
        assert!(z.abs() < 4.0, "z={z}");
    }
}
