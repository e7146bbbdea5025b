//! Permutations in one-line notation, packed codes, and layered constructions.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// Largest width representable by the 5-bit packed code.
pub const MAX_PACKED_WIDTH: usize = 25;
/// Largest width representable by the compact 4-bit packed code.
pub const MAX_COMPACT_WIDTH: usize = 16;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PermError {
    #[error("permutation must be nonempty")]
    Empty,
    #[error("entry {0} out of range 1..={1}")]
    OutOfRange(usize, usize),
    #[error("entry {0} repeated: not a bijection")]
    NotBijection(usize),
    #[error("cannot parse `{0}` as a permutation entry")]
    BadEntry(String),
    #[error("positions ({0},{1}) invalid for a transposition on n={2}")]
    BadTransposition(usize, usize, usize),
    #[error("width {0} exceeds packed limit {1}")]
    TooWide(usize, usize),
    #[error("block sizes must be positive")]
    EmptyBlock,
}

/// A permutation of `{1..n}` in one-line notation: `entries[i-1] = w(i)`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Perm {
    entries: Vec<u8>,
}

impl Perm {
    pub fn new(entries: Vec<u8>) -> Result<Self, PermError> {
        let n = entries.len();
        if n == 0 {
            return Err(PermError::Empty);
        }
        let mut seen = vec![false; n];
        for &v in &entries {
            let v = v as usize;
            if v < 1 || v > n {
                return Err(PermError::OutOfRange(v, n));
            }
            if std::mem::replace(&mut seen[v - 1], true) {
                return Err(PermError::NotBijection(v));
            }
        }
        Ok(Perm { entries })
    }

    pub fn from_slice(entries: &[usize]) -> Result<Self, PermError> {
        if entries.iter().any(|&v| v > u8::MAX as usize) {
            return Err(PermError::OutOfRange(
                *entries.iter().max().unwrap(),
                entries.len(),
            ));
        }
        Self::new(entries.iter().map(|&v| v as u8).collect())
    }

    pub fn identity(n: usize) -> Self {
        Perm {
            entries: (1..=n as u8).collect(),
        }
    }

    /// The longest element `w0 = (n, n-1, ..., 1)`.
    pub fn longest(n: usize) -> Self {
        Perm {
            entries: (1..=n as u8).rev().collect(),
        }
    }

    pub fn n(&self) -> usize {
        self.entries.len()
    }

    /// `w(i)` with 1-based `i`.
    pub fn at(&self, i: usize) -> usize {
        self.entries[i - 1] as usize
    }

    pub fn entries(&self) -> &[u8] {
        &self.entries
    }

    pub fn is_identity(&self) -> bool {
        self.entries.iter().enumerate().all(|(k, &v)| v as usize == k + 1)
    }

    pub fn is_longest(&self) -> bool {
        let n = self.n();
        self.entries
            .iter()
            .enumerate()
            .all(|(k, &v)| v as usize == n - k)
    }

    pub fn inverse(&self) -> Perm {
        let mut inv = vec![0u8; self.n()];
        for (i, &v) in self.entries.iter().enumerate() {
            inv[v as usize - 1] = (i + 1) as u8;
        }
        Perm { entries: inv }
    }

    /// Number of inversions `#{(i,j): i<j, w(i)>w(j)}`.
    pub fn length(&self) -> usize {
        let mut inv = 0;
        for i in 0..self.entries.len() {
            for j in i + 1..self.entries.len() {
                if self.entries[i] > self.entries[j] {
                    inv += 1;
                }
            }
        }
        inv
    }

    /// Descent set `{i : w(i) > w(i+1)}`, 1-based positions.
    pub fn descents(&self) -> Vec<usize> {
        (1..self.n())
            .filter(|&i| self.entries[i - 1] > self.entries[i])
            .collect()
    }

    /// Major index: sum of descent positions.
    pub fn maj(&self) -> usize {
        self.descents().iter().sum()
    }

    /// Right multiplication by the transposition `(a,b)`: swaps entries at positions `a < b`.
    pub fn apply_transposition(&self, a: usize, b: usize) -> Result<Perm, PermError> {
        if a == 0 || b == 0 || a >= b || b > self.n() {
            return Err(PermError::BadTransposition(a, b, self.n()));
        }
        let mut e = self.entries.clone();
        e.swap(a - 1, b - 1);
        Ok(Perm { entries: e })
    }

    /// `w · s_i` (unchecked positions `i, i+1`).
    pub fn swap_adjacent(&self, i: usize) -> Perm {
        let mut e = self.entries.clone();
        e.swap(i - 1, i);
        Perm { entries: e }
    }

    /// All `(a,b)` with `w·(a,b)` covering `w` in Bruhat order:
    /// `a < b`, `w(a) < w(b)`, and no `a < k < b` with `w(a) < w(k) < w(b)`.
    pub fn bruhat_covers(&self) -> Vec<(usize, usize)> {
        let n = self.n();
        let mut out = Vec::new();
        for a in 1..=n {
            let wa = self.entries[a - 1];
            // Scanning right, a middle value in (wa, wb) kills every later b;
            // tracking the best (smallest) admissible upper bound avoids the k-loop.
            let mut bound = u8::MAX;
            for b in a + 1..=n {
                let wb = self.entries[b - 1];
                if wb > wa && wb < bound {
                    out.push((a, b));
                    bound = wb;
                }
            }
        }
        out
    }

    /// All `(a,b)` with `w·(a,b)` covered by `w`: `a < b`, `w(a) > w(b)`,
    /// no middle value strictly between.
    pub fn bruhat_cocovers(&self) -> Vec<(usize, usize)> {
        let n = self.n();
        let mut out = Vec::new();
        for a in 1..=n {
            let wa = self.entries[a - 1];
            let mut bound = 0u8;
            for b in a + 1..=n {
                let wb = self.entries[b - 1];
                if wb < wa && wb > bound {
                    out.push((a, b));
                    bound = wb;
                }
            }
        }
        out
    }

    /// Rothe diagram `{(i,j) : w(i) > j and w^{-1}(j) > i}`, row/column 1-based.
    pub fn rothe_diagram(&self) -> Vec<(usize, usize)> {
        let inv = self.inverse();
        let n = self.n();
        let mut cells = Vec::new();
        for i in 1..=n {
            for j in 1..=n {
                if self.at(i) > j && inv.at(j) > i {
                    cells.push((i, j));
                }
            }
        }
        cells
    }

    /// Drops the maximal suffix of fixed points; the empty result is mapped to
    /// the 1-element identity.
    pub fn strip_trailing_fixed_points(&self) -> Perm {
        let mut m = self.n();
        while m > 1 && self.entries[m - 1] as usize == m {
            m -= 1;
        }
        if m == 1 && self.entries[0] == 1 {
            return Perm::identity(1);
        }
        Perm {
            entries: self.entries[..m].to_vec(),
        }
    }

    /// Embeds into `S_m` by appending fixed points.
    pub fn extend_to(&self, m: usize) -> Perm {
        assert!(m >= self.n());
        let mut e = self.entries.clone();
        e.extend(self.n() as u8 + 1..=m as u8);
        Perm { entries: e }
    }

    /// True iff no index acts as the "3" of a 132 pattern
    /// (no `i < r < s` with `w(i) < w(s) < w(r)`).
    pub fn is_dominant(&self) -> bool {
        let n = self.n();
        let mut prefix_min = u8::MAX;
        for r in 1..=n {
            let wr = self.entries[r - 1];
            for s in r + 1..=n {
                let ws = self.entries[s - 1];
                if ws < wr && ws > prefix_min {
                    return false;
                }
            }
            prefix_min = prefix_min.min(wr);
        }
        true
    }

    pub fn pack(&self) -> Result<PackedPerm, PermError> {
        if self.n() > MAX_PACKED_WIDTH {
            return Err(PermError::TooWide(self.n(), MAX_PACKED_WIDTH));
        }
        Ok(PackedPerm {
            code: pack5(&self.entries),
            width: self.n() as u8,
        })
    }

    pub fn pack_compact(&self) -> Result<CompactPerm, PermError> {
        if self.n() > MAX_COMPACT_WIDTH {
            return Err(PermError::TooWide(self.n(), MAX_COMPACT_WIDTH));
        }
        Ok(CompactPerm {
            code: pack4(&self.entries),
            width: self.n() as u8,
        })
    }
}

impl fmt::Display for Perm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in self.entries.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for Perm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Perm({self})")
    }
}

impl FromStr for Perm {
    type Err = PermError;

    /// Comma-separated one-line notation; whitespace around entries is ignored.
    fn from_str(s: &str) -> Result<Self, PermError> {
        let mut entries = Vec::new();
        for part in s.split(',') {
            let part = part.trim();
            let v: usize = part
                .parse()
                .map_err(|_| PermError::BadEntry(part.to_string()))?;
            if v == 0 || v > u8::MAX as usize {
                return Err(PermError::OutOfRange(v, u8::MAX as usize));
            }
            entries.push(v as u8);
        }
        Perm::new(entries)
    }
}

/// 128-bit packed code: position `i` (1-based) occupies bits `[5(i-1), 5i)`
/// storing `w(i) - 1`; unused high bits are zero, so equal permutations of
/// equal width share one canonical code.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct PackedPerm {
    pub code: u128,
    pub width: u8,
}

impl PackedPerm {
    pub fn unpack(&self) -> Perm {
        let mut e = vec![0u8; self.width as usize];
        unpack5(self.code, self.width as usize, &mut e);
        Perm { entries: e }
    }
}

/// 64-bit compact variant, 4 bits per position, for `n <= 16`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct CompactPerm {
    pub code: u64,
    pub width: u8,
}

impl CompactPerm {
    pub fn unpack(&self) -> Perm {
        let mut e = vec![0u8; self.width as usize];
        for (i, v) in e.iter_mut().enumerate() {
            *v = ((self.code >> (4 * i)) & 0xf) as u8 + 1;
        }
        Perm { entries: e }
    }
}

pub fn pack5(entries: &[u8]) -> u128 {
    let mut code = 0u128;
    for (i, &v) in entries.iter().enumerate() {
        code |= ((v - 1) as u128) << (5 * i);
    }
    code
}

pub fn unpack5(code: u128, n: usize, out: &mut [u8]) {
    for (i, v) in out.iter_mut().enumerate().take(n) {
        *v = ((code >> (5 * i)) & 31) as u8 + 1;
    }
}

pub fn pack4(entries: &[u8]) -> u64 {
    let mut code = 0u64;
    for (i, &v) in entries.iter().enumerate() {
        code |= ((v - 1) as u64) << (4 * i);
    }
    code
}

/// `w · s_i` on the packed code, 1-based `i`: swaps the 5-bit fields of
/// positions `i` and `i+1` with two shifted xors.
pub fn pack5_swap_adjacent(code: u128, i: usize) -> u128 {
    let sh = 5 * (i - 1);
    let a = (code >> sh) & 31;
    let b = (code >> (sh + 5)) & 31;
    let d = a ^ b;
    code ^ (d << sh) ^ (d << (sh + 5))
}

/// Swap of arbitrary 1-based positions `a < b` on the packed code.
pub fn pack5_swap(code: u128, a: usize, b: usize) -> u128 {
    let sa = 5 * (a - 1);
    let sb = 5 * (b - 1);
    let x = (code >> sa) & 31;
    let y = (code >> sb) & 31;
    let d = x ^ y;
    code ^ (d << sa) ^ (d << sb)
}

/// A composition `(b_1, ..., b_k)` of `n`; `realize` reverses each consecutive
/// block of `1..n`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct LayeredSpec {
    blocks: Vec<usize>,
}

impl LayeredSpec {
    pub fn new(blocks: Vec<usize>) -> Result<Self, PermError> {
        if blocks.is_empty() || blocks.iter().any(|&b| b == 0) {
            return Err(PermError::EmptyBlock);
        }
        Ok(LayeredSpec { blocks })
    }

    pub fn blocks(&self) -> &[usize] {
        &self.blocks
    }

    pub fn n(&self) -> usize {
        self.blocks.iter().sum()
    }

    pub fn realize(&self) -> Perm {
        let mut entries = Vec::with_capacity(self.n());
        let mut start = 1usize;
        for &b in &self.blocks {
            entries.extend((start..start + b).rev().map(|v| v as u8));
            start += b;
        }
        Perm { entries }
    }

    /// Length of the layered permutation: sum of `C(b_i, 2)`.
    pub fn length(&self) -> usize {
        self.blocks.iter().map(|&b| b * (b - 1) / 2).sum()
    }
}

impl fmt::Display for LayeredSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (k, b) in self.blocks.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{b}")?;
        }
        write!(f, ")")
    }
}

/// All compositions of `n` in lexicographic order.
pub fn compositions(n: usize) -> Vec<Vec<usize>> {
    fn rec(n: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if n == 0 {
            out.push(cur.clone());
            return;
        }
        for first in 1..=n {
            cur.push(first);
            rec(n - first, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, &mut Vec::new(), &mut out);
    out
}

/// All permutations of `S_n` in lexicographic one-line order.
pub fn all_perms(n: usize) -> Vec<Perm> {
    let mut out = Vec::new();
    let mut cur: Vec<u8> = (1..=n as u8).collect();
    loop {
        out.push(Perm {
            entries: cur.clone(),
        });
        // next_permutation
        let Some(i) = (0..n - 1).rev().find(|&i| cur[i] < cur[i + 1]) else {
            break;
        };
        let j = (i + 1..n).rev().find(|&j| cur[j] > cur[i]).unwrap();
        cur.swap(i, j);
        cur[i + 1..].reverse();
    }
    out
}
