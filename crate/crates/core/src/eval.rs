//! The descent, transition, and cotransition recurrences for the principal
//! specialization Υ_w, under exact, rational, and float arithmetic, plus
//! brute-force oracles used for validation.

use std::collections::HashMap;

use arrayvec::ArrayVec;
use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use thiserror::Error;

use crate::perm::{pack5, pack5_swap, pack5_swap_adjacent, unpack5, Perm, MAX_PACKED_WIDTH};
use crate::ratio::Rat128;

/// Values above 2^53 cannot be trusted as integers in float mode.
pub const FLOAT_EXACT_LIMIT: f64 = 9007199254740992.0;

/// Default memo-table entry cap for exact arithmetic.
pub const MEMO_CAP_EXACT: usize = 1 << 27;
/// Default memo-table entry cap for the float (double) variant.
pub const MEMO_CAP_FLOAT: usize = 3 << 26;

const DEFAULT_FRONTIER_CAP: usize = 1 << 28;
const SORT_REDUCE_CHUNK: usize = 1 << 21;

/// Default entry cap for BFS frontiers. Overridable through the environment
/// because it is a memory cap; everything else is an explicit argument.
pub fn default_frontier_cap() -> usize {
    std::env::var("SCHUBERT_FRONTIER_CAP")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or(DEFAULT_FRONTIER_CAP)
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EvalError {
    #[error("rational arithmetic overflowed 128 bits; exactness lost")]
    RationalOverflow,
    #[error("width {0} exceeds the packed evaluation limit {1}")]
    TooWide(usize, usize),
    #[error("frontier exceeded the entry cap of {0}")]
    FrontierCap(usize),
    #[error("cotransition index is undefined for the longest permutation")]
    NoCotransitionIndex,
    #[error("reduced-word oracle limited to length {0}, got {1}")]
    OracleTooLong(usize, usize),
    #[error("reduced-word sum not divisible by l!: implementation bug")]
    OracleNonIntegral,
    #[error("u128 accumulator overflow")]
    CountOverflow,
}

/// Tri-backend carrier for Υ_w.
#[derive(Clone, Debug, PartialEq)]
pub enum EvalValue {
    ExactInt(BigUint),
    Rational(Rat128),
    Float(f64),
}

impl EvalValue {
    /// Decimal rendering; exact integers never go through floating point.
    pub fn to_decimal_string(&self) -> String {
        match self {
            EvalValue::ExactInt(v) => v.to_string(),
            EvalValue::Rational(r) => {
                if r.is_integer() {
                    r.num().to_string()
                } else {
                    format!("{}/{}", r.num(), r.den())
                }
            }
            EvalValue::Float(v) => {
                // print the float's exact integer value when it has one,
                // instead of the shortest round-trip decimal
                if v.is_finite() && *v >= 0.0 && v.fract() == 0.0 && *v < u128::MAX as f64 {
                    format!("{}", *v as u128)
                } else {
                    format!("{v}")
                }
            }
        }
    }

    /// True when the value is only approximate (float mode beyond 2^53).
    pub fn approximate(&self) -> bool {
        match self {
            EvalValue::Float(v) => *v > FLOAT_EXACT_LIMIT,
            _ => false,
        }
    }

    pub fn as_biguint(&self) -> Option<BigUint> {
        match self {
            EvalValue::ExactInt(v) => Some(v.clone()),
            EvalValue::Rational(r) if r.is_integer() => Some(BigUint::from(r.num())),
            _ => None,
        }
    }

    pub fn as_f64(&self) -> f64 {
        match self {
            EvalValue::ExactInt(v) => v.to_f64().unwrap_or(f64::INFINITY),
            EvalValue::Rational(r) => r.to_f64(),
            EvalValue::Float(v) => *v,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DescentArith {
    Rational,
    Float,
}

/// Which sum of the descent formula to expand: over descents of `w`
/// (children `w·s_i`) or of `w^{-1}` (children `s_i·w`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum DescentStrategy {
    #[default]
    Direct,
    Inverse,
}

/// Arithmetic for the addition-only recurrences.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AddArith {
    Exact,
    Float,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum EvalMode {
    #[default]
    Bfs,
    Dfs,
}

#[derive(Clone, Copy, Debug, Default)]
pub struct EvalOptions {
    /// Strip trailing fixed points before evaluating. On unless running
    /// stability experiments.
    pub no_strip: bool,
    /// Memo entry cap; defaults to 2^27 (exact) or 3·2^26 (float).
    pub memo_cap: Option<usize>,
    /// BFS frontier entry cap; defaults to `default_frontier_cap()`.
    pub frontier_cap: Option<usize>,
}

impl EvalOptions {
    fn prepared(&self, w: &Perm) -> Perm {
        if self.no_strip {
            w.clone()
        } else {
            w.strip_trailing_fixed_points()
        }
    }

    fn memo_cap_for(&self, arith_is_float: bool) -> usize {
        self.memo_cap.unwrap_or(if arith_is_float {
            MEMO_CAP_FLOAT
        } else {
            MEMO_CAP_EXACT
        })
    }

    fn cap(&self) -> usize {
        self.frontier_cap.unwrap_or_else(default_frontier_cap)
    }
}

/// Hash table from packed permutation to value with a hard entry cap;
/// insertions beyond the cap are skipped (recomputation stays correct).
pub struct MemoTable<V> {
    map: HashMap<u128, V>,
    cap: usize,
}

impl<V> MemoTable<V> {
    pub fn new(cap: usize) -> Self {
        MemoTable {
            map: HashMap::new(),
            cap,
        }
    }

    pub fn get(&self, key: &u128) -> Option<&V> {
        self.map.get(key)
    }

    pub fn insert(&mut self, key: u128, value: V) {
        if self.map.len() < self.cap {
            self.map.insert(key, value);
        }
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

// ---------------------------------------------------------------------------
// accumulator traits

trait Weight: Clone {
    fn one() -> Self;
    fn add_from(&mut self, other: &Self) -> Result<(), EvalError>;
    fn mul_frac(&self, num: u64, den: u64) -> Result<Self, EvalError>;
}

impl Weight for Rat128 {
    fn one() -> Self {
        Rat128::ONE
    }
    fn add_from(&mut self, other: &Self) -> Result<(), EvalError> {
        *self = self
            .checked_add(other)
            .map_err(|_| EvalError::RationalOverflow)?;
        Ok(())
    }
    fn mul_frac(&self, num: u64, den: u64) -> Result<Self, EvalError> {
        self.checked_mul_frac(num, den)
            .map_err(|_| EvalError::RationalOverflow)
    }
}

impl Weight for f64 {
    fn one() -> Self {
        1.0
    }
    fn add_from(&mut self, other: &Self) -> Result<(), EvalError> {
        *self += *other;
        Ok(())
    }
    fn mul_frac(&self, num: u64, den: u64) -> Result<Self, EvalError> {
        // the weight num/den is formed first, as written in the recurrence
        Ok(self * (num as f64 / den as f64))
    }
}

trait Count: Clone {
    fn zero() -> Self;
    fn one() -> Self;
    fn add_from(&mut self, other: &Self) -> Result<(), EvalError>;
    fn into_value(self) -> EvalValue;
}

impl Count for u128 {
    fn zero() -> Self {
        0
    }
    fn one() -> Self {
        1
    }
    fn add_from(&mut self, other: &Self) -> Result<(), EvalError> {
        *self = self.checked_add(*other).ok_or(EvalError::CountOverflow)?;
        Ok(())
    }
    fn into_value(self) -> EvalValue {
        EvalValue::ExactInt(BigUint::from(self))
    }
}

impl Count for BigUint {
    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn add_from(&mut self, other: &Self) -> Result<(), EvalError> {
        *self += other;
        Ok(())
    }
    fn into_value(self) -> EvalValue {
        EvalValue::ExactInt(self)
    }
}

impl Count for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn add_from(&mut self, other: &Self) -> Result<(), EvalError> {
        *self += *other;
        Ok(())
    }
    fn into_value(self) -> EvalValue {
        EvalValue::Float(self)
    }
}

// ---------------------------------------------------------------------------
// chunked sort-reduce

/// Accumulates (key, value) emissions, collapsing duplicate keys by summation
/// in ascending key order. Chunking bounds the scratch memory of one sort.
struct SortReduce<V> {
    runs: Vec<Vec<(u128, V)>>,
    cur: Vec<(u128, V)>,
    cap: usize,
}

impl<V: Count> SortReduce<V> {
    fn new(cap: usize) -> Self {
        SortReduce {
            runs: Vec::new(),
            cur: Vec::new(),
            cap,
        }
    }

    fn push(&mut self, key: u128, value: V) -> Result<(), EvalError> {
        self.cur.push((key, value));
        if self.cur.len() >= SORT_REDUCE_CHUNK {
            self.flush()?;
        }
        Ok(())
    }

    fn flush(&mut self) -> Result<(), EvalError> {
        if self.cur.is_empty() {
            return Ok(());
        }
        let mut chunk = std::mem::take(&mut self.cur);
        reduce_in_place(&mut chunk)?;
        let total: usize = self.runs.iter().map(Vec::len).sum::<usize>() + chunk.len();
        if total > self.cap {
            return Err(EvalError::FrontierCap(self.cap));
        }
        self.runs.push(chunk);
        Ok(())
    }

    fn finish(mut self) -> Result<Vec<(u128, V)>, EvalError> {
        self.flush()?;
        let mut runs = self.runs;
        while runs.len() > 1 {
            // merge the two smallest runs first to keep total work near-linear
            runs.sort_by_key(|r| std::cmp::Reverse(r.len()));
            let a = runs.pop().unwrap();
            let b = runs.pop().unwrap();
            runs.push(merge_two(a, b)?);
        }
        Ok(runs.pop().unwrap_or_default())
    }
}

fn reduce_in_place<V: Count>(chunk: &mut Vec<(u128, V)>) -> Result<(), EvalError> {
    chunk.sort_unstable_by_key(|&(k, _)| k);
    let mut out = 0;
    for i in 0..chunk.len() {
        if out > 0 && chunk[out - 1].0 == chunk[i].0 {
            let v = chunk[i].1.clone();
            chunk[out - 1].1.add_from(&v)?;
        } else {
            chunk.swap(out, i);
            out += 1;
        }
    }
    chunk.truncate(out);
    Ok(())
}

fn merge_two<V: Count>(a: Vec<(u128, V)>, b: Vec<(u128, V)>) -> Result<Vec<(u128, V)>, EvalError> {
    let mut out: Vec<(u128, V)> = Vec::with_capacity(a.len() + b.len());
    let mut ia = a.into_iter().peekable();
    let mut ib = b.into_iter().peekable();
    loop {
        let take_a = match (ia.peek(), ib.peek()) {
            (Some(&(ka, _)), Some(&(kb, _))) => ka <= kb,
            (Some(_), None) => true,
            (None, Some(_)) => false,
            (None, None) => break,
        };
        let (k, v) = if take_a {
            ia.next().unwrap()
        } else {
            ib.next().unwrap()
        };
        if let Some(last) = out.last_mut() {
            if last.0 == k {
                last.1.add_from(&v)?;
                continue;
            }
        }
        out.push((k, v));
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// descent formula (BFS sort-reduce, level by level toward the identity)

pub fn upsilon_descent(w: &Perm, arith: DescentArith) -> Result<EvalValue, EvalError> {
    upsilon_descent_opts(w, arith, DescentStrategy::Direct, &EvalOptions::default())
}

pub fn upsilon_descent_opts(
    w: &Perm,
    arith: DescentArith,
    strategy: DescentStrategy,
    opts: &EvalOptions,
) -> Result<EvalValue, EvalError> {
    let w = match strategy {
        DescentStrategy::Direct => w.clone(),
        // the Des(w^{-1}) sum expands the same tree as the direct sum at w^{-1}
        DescentStrategy::Inverse => w.inverse(),
    };
    let w = opts.prepared(&w);
    match arith {
        DescentArith::Rational => Ok(EvalValue::Rational(descent_bfs::<Rat128>(&w, opts.cap())?)),
        DescentArith::Float => Ok(EvalValue::Float(descent_bfs::<f64>(&w, opts.cap())?)),
    }
}

fn descent_bfs<W: Weight>(w: &Perm, cap: usize) -> Result<W, EvalError> {
    let n = w.n();
    if n > MAX_PACKED_WIDTH {
        return Err(EvalError::TooWide(n, MAX_PACKED_WIDTH));
    }
    let lw = w.length();
    let mut frontier: Vec<(u128, W)> = vec![(pack5(w.entries()), W::one())];
    let mut buf = [0u8; MAX_PACKED_WIDTH];
    // level = common length of the current frontier, threaded downward
    for level in (1..=lw).rev() {
        let mut emitted: Vec<(u128, W)> = Vec::new();
        for (code, coef) in &frontier {
            unpack5(*code, n, &mut buf);
            for i in 1..n {
                if buf[i - 1] > buf[i] {
                    let child = pack5_swap_adjacent(*code, i);
                    emitted.push((child, coef.mul_frac(i as u64, level as u64)?));
                }
            }
            if emitted.len() > cap {
                return Err(EvalError::FrontierCap(cap));
            }
        }
        emitted.sort_unstable_by_key(|&(k, _)| k);
        let mut reduced: Vec<(u128, W)> = Vec::new();
        for (k, v) in emitted {
            if let Some(last) = reduced.last_mut() {
                if last.0 == k {
                    last.1.add_from(&v)?;
                    continue;
                }
            }
            reduced.push((k, v));
        }
        frontier = reduced;
    }
    debug_assert_eq!(frontier.len(), 1);
    debug_assert_eq!(frontier[0].0, pack5(Perm::identity(n).entries()));
    Ok(frontier.pop().unwrap().1)
}

// ---------------------------------------------------------------------------
// transition formula (iterative DFS with memoization)

/// The pivot (r, s) of the transition recurrence; absent iff `w` is dominant.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TransitionPivot {
    pub r: usize,
    pub s: usize,
}

pub fn transition_pivot(w: &Perm) -> Option<TransitionPivot> {
    let e = w.entries();
    let n = e.len();
    let mut mins = [u8::MAX; MAX_PACKED_WIDTH + 1];
    let mut pm = u8::MAX;
    for r in 1..=n.min(MAX_PACKED_WIDTH) {
        mins[r] = pm;
        pm = pm.min(e[r - 1]);
    }
    for r in (2..n).rev() {
        let wr = e[r - 1];
        let pm = mins[r];
        for s in (r + 1..=n).rev() {
            let ws = e[s - 1];
            if ws < wr && ws > pm {
                return Some(TransitionPivot { r, s });
            }
        }
    }
    None
}

pub fn upsilon_transition(w: &Perm, arith: AddArith) -> Result<EvalValue, EvalError> {
    upsilon_transition_opts(w, arith, &EvalOptions::default())
}

pub fn upsilon_transition_opts(
    w: &Perm,
    arith: AddArith,
    opts: &EvalOptions,
) -> Result<EvalValue, EvalError> {
    let w = opts.prepared(w);
    if w.n() > MAX_PACKED_WIDTH {
        return Err(EvalError::TooWide(w.n(), MAX_PACKED_WIDTH));
    }
    match arith {
        AddArith::Exact => {
            let cap = opts.memo_cap_for(false);
            match transition_dfs::<u128>(&w, cap) {
                Err(EvalError::CountOverflow) => {
                    Ok(transition_dfs::<BigUint>(&w, cap)?.into_value())
                }
                other => Ok(other?.into_value()),
            }
        }
        AddArith::Float => Ok(transition_dfs::<f64>(&w, opts.memo_cap_for(true))?.into_value()),
    }
}

// children of a non-dominant w: v = w·(r,s) at length l-1, then every cover
// v·(i,r), i < r, at length l (same level, hence DFS rather than BFS)
fn transition_children(
    code: u128,
    n: usize,
    buf: &mut [u8; MAX_PACKED_WIDTH],
) -> Option<ArrayVec<u128, { MAX_PACKED_WIDTH + 1 }>> {
    unpack5(code, n, buf);
    let mut mins = [u8::MAX; MAX_PACKED_WIDTH + 1];
    let mut pm = u8::MAX;
    for r in 1..=n {
        mins[r] = pm;
        pm = pm.min(buf[r - 1]);
    }
    let mut pivot: Option<(usize, usize)> = None;
    'outer: for r in (2..n).rev() {
        let wr = buf[r - 1];
        let pm = mins[r];
        for s in (r + 1..=n).rev() {
            let ws = buf[s - 1];
            if ws < wr && ws > pm {
                pivot = Some((r, s));
                break 'outer;
            }
        }
    }
    let (r, s) = pivot?;
    let vcode = pack5_swap(code, r, s);
    let mut children = ArrayVec::new();
    children.push(vcode);
    // covers v·(i,r), scanning i downward; m = best middle value below v_r
    let vr = buf[s - 1]; // v(r) = w(s) after the swap
    let mut m = 0u8;
    for i in (1..r).rev() {
        let vi = buf[i - 1]; // v(i) = w(i) for i < r
        if vi < vr && vi > m {
            children.push(pack5_swap(vcode, i, r));
            m = vi;
        }
    }
    Some(children)
}

struct TransFrame<C> {
    code: u128,
    acc: C,
    children: ArrayVec<u128, { MAX_PACKED_WIDTH + 1 }>,
    next: usize,
}

fn transition_dfs<C: Count>(w: &Perm, memo_cap: usize) -> Result<C, EvalError> {
    let n = w.n();
    let root = pack5(w.entries());
    let mut buf = [0u8; MAX_PACKED_WIDTH];
    let Some(children) = transition_children(root, n, &mut buf) else {
        return Ok(C::one()); // dominant
    };
    let mut memo: MemoTable<C> = MemoTable::new(memo_cap);
    let mut stack = vec![TransFrame {
        code: root,
        acc: C::zero(),
        children,
        next: 0,
    }];
    loop {
        let next_child = {
            let frame = stack.last_mut().unwrap();
            if frame.next < frame.children.len() {
                frame.next += 1;
                Some(frame.children[frame.next - 1])
            } else {
                None
            }
        };
        match next_child {
            Some(child) => {
                if let Some(v) = memo.get(&child) {
                    let v = v.clone();
                    stack.last_mut().unwrap().acc.add_from(&v)?;
                    continue;
                }
                match transition_children(child, n, &mut buf) {
                    None => {
                        let one = C::one();
                        stack.last_mut().unwrap().acc.add_from(&one)?;
                        memo.insert(child, one);
                    }
                    Some(grand) => stack.push(TransFrame {
                        code: child,
                        acc: C::zero(),
                        children: grand,
                        next: 0,
                    }),
                }
            }
            None => {
                let done = stack.pop().unwrap();
                memo.insert(done.code, done.acc.clone());
                match stack.last_mut() {
                    Some(parent) => parent.acc.add_from(&done.acc)?,
                    None => return Ok(done.acc),
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// cotransition formula

/// `min{j : j + w(j) <= n}`; undefined exactly at w0.
pub fn cotransition_index(w: &Perm) -> Result<usize, EvalError> {
    let n = w.n();
    (1..=n)
        .find(|&j| j + w.at(j) <= n)
        .ok_or(EvalError::NoCotransitionIndex)
}

fn cotransition_index_raw(e: &[u8]) -> Option<usize> {
    let n = e.len();
    (1..=n).find(|&j| j + e[j - 1] as usize <= n)
}

/// Packed codes of the formula's parents of `e`: Bruhat covers `v = w·(a,b)`
/// with `v(i) != w(i)` at the cotransition index `i`, i.e. covers with `i`
/// as one endpoint.
fn cotransition_parents(
    code: u128,
    e: &[u8],
    out: &mut ArrayVec<u128, { 2 * MAX_PACKED_WIDTH }>,
) {
    out.clear();
    let n = e.len();
    let Some(i) = cotransition_index_raw(e) else {
        return;
    };
    let wi = e[i - 1];
    // covers (i, b), b > i: keep the least admissible upper value while scanning
    let mut bound = u8::MAX;
    for b in i + 1..=n {
        let wb = e[b - 1];
        if wb > wi && wb < bound {
            out.push(pack5_swap(code, i, b));
            bound = wb;
        }
    }
    // covers (a, i), a < i
    let mut m = 0u8;
    for a in (1..i).rev() {
        let wa = e[a - 1];
        if wa < wi && wa > m {
            out.push(pack5_swap(code, a, i));
            m = wa;
        }
    }
}

pub fn upsilon_cotransition(
    w: &Perm,
    arith: AddArith,
    mode: EvalMode,
) -> Result<EvalValue, EvalError> {
    upsilon_cotransition_opts(w, arith, mode, &EvalOptions::default())
}

pub fn upsilon_cotransition_opts(
    w: &Perm,
    arith: AddArith,
    mode: EvalMode,
    opts: &EvalOptions,
) -> Result<EvalValue, EvalError> {
    let w = opts.prepared(w);
    if w.n() > MAX_PACKED_WIDTH {
        return Err(EvalError::TooWide(w.n(), MAX_PACKED_WIDTH));
    }
    match (arith, mode) {
        (AddArith::Exact, EvalMode::Bfs) => match cotransition_bfs::<u128>(&w, opts.cap()) {
            Err(EvalError::CountOverflow) => {
                Ok(cotransition_bfs::<BigUint>(&w, opts.cap())?.into_value())
            }
            other => Ok(other?.into_value()),
        },
        (AddArith::Float, EvalMode::Bfs) => {
            Ok(cotransition_bfs::<f64>(&w, opts.cap())?.into_value())
        }
        (AddArith::Exact, EvalMode::Dfs) => {
            let cap = opts.memo_cap_for(false);
            match cotransition_dfs::<u128>(&w, cap) {
                Err(EvalError::CountOverflow) => {
                    Ok(cotransition_dfs::<BigUint>(&w, cap)?.into_value())
                }
                other => Ok(other?.into_value()),
            }
        }
        (AddArith::Float, EvalMode::Dfs) => {
            Ok(cotransition_dfs::<f64>(&w, opts.memo_cap_for(true))?.into_value())
        }
    }
}

fn cotransition_bfs<C: Count>(w: &Perm, cap: usize) -> Result<C, EvalError> {
    let n = w.n();
    let lmax = n * (n - 1) / 2;
    let lw = w.length();
    let mut frontier: Vec<(u128, C)> = vec![(pack5(w.entries()), C::one())];
    let mut buf = [0u8; MAX_PACKED_WIDTH];
    let mut parents = ArrayVec::new();
    for _level in lw..lmax {
        let mut sr = SortReduce::new(cap);
        for (code, coef) in &frontier {
            unpack5(*code, n, &mut buf);
            cotransition_parents(*code, &buf[..n], &mut parents);
            for &p in &parents {
                sr.push(p, coef.clone())?;
            }
        }
        frontier = sr.finish()?;
    }
    debug_assert_eq!(frontier.len(), 1);
    debug_assert_eq!(frontier[0].0, pack5(Perm::longest(n).entries()));
    Ok(frontier.pop().unwrap().1)
}

fn cotransition_dfs<C: Count>(w: &Perm, memo_cap: usize) -> Result<C, EvalError> {
    fn rec<C: Count>(
        code: u128,
        n: usize,
        w0: u128,
        memo: &mut MemoTable<C>,
    ) -> Result<C, EvalError> {
        if code == w0 {
            return Ok(C::one());
        }
        if let Some(v) = memo.get(&code) {
            return Ok(v.clone());
        }
        let mut buf = [0u8; MAX_PACKED_WIDTH];
        unpack5(code, n, &mut buf);
        let mut parents = ArrayVec::new();
        cotransition_parents(code, &buf[..n], &mut parents);
        let mut acc = C::zero();
        for p in parents {
            let v = rec(p, n, w0, memo)?;
            acc.add_from(&v)?;
        }
        memo.insert(code, acc.clone());
        Ok(acc)
    }

    let n = w.n();
    let w0 = pack5(Perm::longest(n).entries());
    let mut memo: MemoTable<C> = MemoTable::new(memo_cap);
    rec(pack5(w.entries()), n, w0, &mut memo)
}

// ---------------------------------------------------------------------------
// whole-group level sweeps (shared by the max search and the test suites)

/// Walks every permutation of S_n by ascending length, supplying each level's
/// exact Υ values as sorted (packed code, value) pairs. The visitor returns
/// false to stop early.
pub fn descent_ascend_levels<F>(n: usize, cap: usize, mut visit: F) -> Result<(), EvalError>
where
    F: FnMut(usize, &[(u128, u128)]) -> bool,
{
    if n > MAX_PACKED_WIDTH {
        return Err(EvalError::TooWide(n, MAX_PACKED_WIDTH));
    }
    let lmax = n * (n - 1) / 2;
    let mut frontier: Vec<(u128, u128)> = vec![(pack5(Perm::identity(n).entries()), 1)];
    if !visit(0, &frontier) {
        return Ok(());
    }
    let mut buf = [0u8; MAX_PACKED_WIDTH];
    for level in 1..=lmax {
        let mut sr = SortReduce::new(cap);
        for (code, val) in &frontier {
            unpack5(*code, n, &mut buf);
            for i in 1..n {
                // ascent of v: u = v·s_i has descent at i and length `level`
                if buf[i - 1] < buf[i] {
                    let weighted = val.checked_mul(i as u128).ok_or(EvalError::CountOverflow)?;
                    sr.push(pack5_swap_adjacent(*code, i), weighted)?;
                }
            }
        }
        frontier = sr.finish()?;
        for (_, v) in frontier.iter_mut() {
            assert_eq!(*v % level as u128, 0, "descent sum must divide the level");
            *v /= level as u128;
        }
        if !visit(level, &frontier) {
            return Ok(());
        }
    }
    Ok(())
}

/// Walks every permutation of S_n by descending length from w0, supplying
/// each level's exact Υ values. The visitor returns false to stop early.
pub fn cotransition_descend_levels<F>(n: usize, cap: usize, mut visit: F) -> Result<(), EvalError>
where
    F: FnMut(usize, &[(u128, u128)]) -> bool,
{
    if n > MAX_PACKED_WIDTH {
        return Err(EvalError::TooWide(n, MAX_PACKED_WIDTH));
    }
    let lmax = n * (n - 1) / 2;
    let mut frontier: Vec<(u128, u128)> = vec![(pack5(Perm::longest(n).entries()), 1)];
    if !visit(lmax, &frontier) {
        return Ok(());
    }
    let mut buf = [0u8; MAX_PACKED_WIDTH];
    let mut wbuf = [0u8; MAX_PACKED_WIDTH];
    for level in (0..lmax).rev() {
        let mut sr = SortReduce::new(cap);
        for (code, val) in &frontier {
            unpack5(*code, n, &mut buf);
            // scatter Υ_v to every w covered by v whose cotransition index is
            // an endpoint of the covering transposition
            let v = &buf[..n];
            for a in 1..=n {
                let va = v[a - 1];
                let mut bound = 0u8;
                for b in a + 1..=n {
                    let vb = v[b - 1];
                    if vb < va && vb > bound {
                        bound = vb;
                        wbuf[..n].copy_from_slice(v);
                        wbuf.swap(a - 1, b - 1);
                        if let Some(i) = cotransition_index_raw(&wbuf[..n]) {
                            if i == a || i == b {
                                sr.push(pack5_swap(*code, a, b), *val)?;
                            }
                        }
                    }
                }
            }
        }
        frontier = sr.finish()?;
        if !visit(level, &frontier) {
            return Ok(());
        }
    }
    Ok(())
}

/// Exact Υ for every permutation of S_n, keyed by packed code. Swept from w0
/// by the cotransition recurrence, independent of the descent path.
pub fn upsilon_table(n: usize) -> Result<HashMap<u128, u128>, EvalError> {
    assert!(n <= 10, "full table limited to n <= 10");
    let mut table = HashMap::new();
    cotransition_descend_levels(n, default_frontier_cap(), |_, level| {
        table.extend(level.iter().copied());
        true
    })?;
    Ok(table)
}

pub fn upsilon_from_table(table: &HashMap<u128, u128>, w: &Perm) -> u128 {
    table[&pack5(w.entries())]
}

// ---------------------------------------------------------------------------
// oracles

/// Evaluates (1/l!)·Σ a_1···a_l over explicitly enumerated reduced words.
/// Deliberately enumerates one word at a time with no sharing, as an
/// independent check of the recurrences.
pub fn upsilon_reduced_words_oracle(w: &Perm) -> Result<EvalValue, EvalError> {
    const MAX_LEN: usize = 12;
    let l = w.length();
    if l > MAX_LEN {
        return Err(EvalError::OracleTooLong(MAX_LEN, l));
    }
    fn rec(e: &mut [u8], remaining: usize, prod: u64, sum: &mut u128) {
        if remaining == 0 {
            *sum += prod as u128;
            return;
        }
        for i in 1..e.len() {
            if e[i - 1] > e[i] {
                e.swap(i - 1, i);
                rec(e, remaining - 1, prod * i as u64, sum);
                e.swap(i - 1, i);
            }
        }
    }
    let mut e = w.entries().to_vec();
    let mut sum = 0u128;
    rec(&mut e, l, 1, &mut sum);
    let fact: u128 = (1..=l as u128).product();
    if sum % fact != 0 {
        return Err(EvalError::OracleNonIntegral);
    }
    Ok(EvalValue::ExactInt(BigUint::from(sum / fact)))
}

/// Counts of reduced staircase pipe dreams per boundary permutation, by
/// exhaustive enumeration of all cross subsets (n <= 7).
pub fn pipedream_counts(n: usize) -> HashMap<Perm, u64> {
    assert!((1..=7).contains(&n), "pipe-dream oracle limited to n <= 7");
    // staircase cells (i,j), i+j <= n, in reading order: rows top to bottom,
    // right to left within a row; a cross at (i,j) is the letter i+j-1
    let mut letters = Vec::new();
    for i in 1..n {
        for j in (1..=n - i).rev() {
            letters.push(i + j - 1);
        }
    }
    let cells = letters.len();
    let mut counts: HashMap<Perm, u64> = HashMap::new();
    for mask in 0u32..(1u32 << cells) {
        let mut e: Vec<u8> = (1..=n as u8).collect();
        let mut crosses = 0u32;
        for (bit, &a) in letters.iter().enumerate() {
            if mask >> bit & 1 == 1 {
                e.swap(a - 1, a);
                crosses += 1;
            }
        }
        let w = Perm::new(e).unwrap();
        if w.length() as u32 == crosses {
            *counts.entry(w).or_insert(0) += 1;
        }
    }
    counts
}

pub fn upsilon_pipedream_oracle(w: &Perm) -> EvalValue {
    let counts = pipedream_counts(w.n());
    EvalValue::ExactInt(BigUint::from(counts.get(w).copied().unwrap_or(0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::perm::all_perms;

    fn p(s: &str) -> Perm {
        s.parse().unwrap()
    }

    fn exact(v: &EvalValue) -> u128 {
        v.as_biguint().unwrap().to_u128().unwrap()
    }

    #[test]
    fn descent_small_values() {
        assert_eq!(
            exact(&upsilon_descent(&Perm::identity(4), DescentArith::Rational).unwrap()),
            1
        );
        assert_eq!(
            exact(&upsilon_descent(&p("1,4,3,2"), DescentArith::Rational).unwrap()),
            5
        );
        assert_eq!(
            exact(&upsilon_descent(&p("2,1,4,3"), DescentArith::Rational).unwrap()),
            3
        );
    }

    #[test]
    fn descent_inverse_strategy_agrees() {
        for w in all_perms(5) {
            let a = exact(&upsilon_descent(&w, DescentArith::Rational).unwrap());
            let b = exact(
                &upsilon_descent_opts(
                    &w,
                    DescentArith::Rational,
                    DescentStrategy::Inverse,
                    &EvalOptions::default(),
                )
                .unwrap(),
            );
            assert_eq!(a, b, "w={w}");
        }
    }

    #[test]
    fn transition_pivot_examples() {
        assert_eq!(transition_pivot(&Perm::longest(4)), None);
        assert_eq!(
            transition_pivot(&p("1,3,2")),
            Some(TransitionPivot { r: 2, s: 3 })
        );
        assert_eq!(
            transition_pivot(&p("1,4,3,2")),
            Some(TransitionPivot { r: 3, s: 4 })
        );
        // brute-force scan of the definition over S4
        for w in all_perms(4) {
            let mut best: Option<(usize, usize)> = None;
            for r in (1..=4).rev() {
                let is3 =
                    (1..r).any(|i| (r + 1..=4).any(|s| w.at(i) < w.at(s) && w.at(s) < w.at(r)));
                if is3 {
                    let s = (r + 1..=4)
                        .rev()
                        .find(|&s| w.at(s) < w.at(r) && (1..r).any(|i| w.at(i) < w.at(s)))
                        .unwrap();
                    best = Some((r, s));
                    break;
                }
            }
            assert_eq!(transition_pivot(&w).map(|t| (t.r, t.s)), best, "w={w}");
            assert_eq!(transition_pivot(&w).is_none(), w.is_dominant());
            if let Some(t) = transition_pivot(&w) {
                let v = w.apply_transposition(t.r, t.s).unwrap();
                assert_eq!(v.length(), w.length() - 1);
            }
        }
    }

    #[test]
    fn transition_small_values() {
        assert_eq!(
            exact(&upsilon_transition(&Perm::longest(5), AddArith::Exact).unwrap()),
            1
        );
        assert_eq!(
            exact(&upsilon_transition(&p("1,4,3,2"), AddArith::Exact).unwrap()),
            5
        );
    }

    #[test]
    fn cotransition_index_examples() {
        assert_eq!(cotransition_index(&Perm::identity(4)).unwrap(), 1);
        assert_eq!(cotransition_index(&p("2,1,4,3")).unwrap(), 1);
        // 1 + w(1) = 4 <= n already, so the minimal index is 1
        assert_eq!(cotransition_index(&p("3,4,2,1")).unwrap(), 1);
        assert_eq!(cotransition_index(&p("4,3,1,2")).unwrap(), 3);
        assert!(cotransition_index(&Perm::longest(5)).is_err());
    }

    #[test]
    fn cotransition_small_values() {
        for mode in [EvalMode::Bfs, EvalMode::Dfs] {
            assert_eq!(
                exact(&upsilon_cotransition(&Perm::longest(4), AddArith::Exact, mode).unwrap()),
                1
            );
            assert_eq!(
                exact(&upsilon_cotransition(&p("1,4,3,2"), AddArith::Exact, mode).unwrap()),
                5
            );
        }
    }

    #[test]
    fn three_formulas_agree_on_s5() {
        for w in all_perms(5) {
            let d = exact(&upsilon_descent(&w, DescentArith::Rational).unwrap());
            let t = exact(&upsilon_transition(&w, AddArith::Exact).unwrap());
            let cb = exact(&upsilon_cotransition(&w, AddArith::Exact, EvalMode::Bfs).unwrap());
            let cd = exact(&upsilon_cotransition(&w, AddArith::Exact, EvalMode::Dfs).unwrap());
            assert_eq!(d, t, "w={w}");
            assert_eq!(d, cb, "w={w}");
            assert_eq!(d, cd, "w={w}");
        }
    }

    #[test]
    fn reduced_word_oracle_matches() {
        assert_eq!(
            exact(&upsilon_reduced_words_oracle(&Perm::identity(3)).unwrap()),
            1
        );
        assert_eq!(exact(&upsilon_reduced_words_oracle(&p("1,4,3,2")).unwrap()), 5);
        for w in all_perms(5) {
            let o = exact(&upsilon_reduced_words_oracle(&w).unwrap());
            let d = exact(&upsilon_descent(&w, DescentArith::Rational).unwrap());
            assert_eq!(o, d, "w={w}");
        }
    }

    #[test]
    fn pipedream_oracle_small() {
        let counts = pipedream_counts(4);
        assert_eq!(counts[&p("1,4,3,2")], 5);
        assert_eq!(counts.values().sum::<u64>(), 41);
        assert_eq!(exact(&upsilon_pipedream_oracle(&Perm::identity(3))), 1);
    }

    #[test]
    fn table_matches_per_perm_eval() {
        let table = upsilon_table(5).unwrap();
        assert_eq!(table.len(), 120);
        for w in all_perms(5) {
            let t = upsilon_from_table(&table, &w);
            let c = exact(&upsilon_cotransition(&w, AddArith::Exact, EvalMode::Bfs).unwrap());
            assert_eq!(t, c, "w={w}");
        }
    }

    #[test]
    fn ascend_levels_match_table() {
        let table = upsilon_table(5).unwrap();
        let mut seen = 0usize;
        descent_ascend_levels(5, default_frontier_cap(), |_, level| {
            for &(code, val) in level {
                assert_eq!(table[&code], val);
                seen += 1;
            }
            true
        })
        .unwrap();
        assert_eq!(seen, 120);
    }

    #[test]
    fn stripping_leaves_value_unchanged() {
        let w = p("1,3,2,4,5");
        let opts = EvalOptions {
            no_strip: true,
            ..Default::default()
        };
        let unstripped =
            upsilon_cotransition_opts(&w, AddArith::Exact, EvalMode::Bfs, &opts).unwrap();
        let stripped = upsilon_cotransition(&w, AddArith::Exact, EvalMode::Bfs).unwrap();
        assert_eq!(exact(&unstripped), exact(&stripped));
    }

    #[test]
    fn float_mode_flagging() {
        let small = upsilon_cotransition(&p("1,4,3,2"), AddArith::Float, EvalMode::Bfs).unwrap();
        assert!(!small.approximate());
        assert_eq!(small, EvalValue::Float(5.0));
        assert!(EvalValue::Float(FLOAT_EXACT_LIMIT * 4.0).approximate());
    }

    #[test]
    fn memo_cap_skips_insertions() {
        let mut memo: MemoTable<u32> = MemoTable::new(2);
        memo.insert(1, 10);
        memo.insert(2, 20);
        memo.insert(3, 30); // beyond cap, skipped
        assert_eq!(memo.get(&1), Some(&10));
        assert_eq!(memo.get(&2), Some(&20));
        assert_eq!(memo.get(&3), None);
        assert_eq!(memo.len(), 2);
    }

    #[test]
    fn frontier_cap_is_enforced() {
        let opts = EvalOptions {
            frontier_cap: Some(1),
            ..Default::default()
        };
        let r = upsilon_descent_opts(
            &p("4,3,2,1"),
            DescentArith::Rational,
            DescentStrategy::Direct,
            &opts,
        );
        assert!(matches!(r, Err(EvalError::FrontierCap(1))));
    }

    #[test]
    fn decimal_rendering() {
        assert_eq!(
            EvalValue::ExactInt(BigUint::from(12345u32)).to_decimal_string(),
            "12345"
        );
        assert_eq!(EvalValue::Float(23399330089073392.0).to_decimal_string(),
            "23399330089073392");
    }
}
