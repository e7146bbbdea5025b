//! Bumpless pipe dreams: the six-tile grid model, pipe tracing, reducedness,
//! height functions, the ASM lattice order, and exhaustive small-n
//! enumeration.
//!
//! Grid coordinates are (row, column) from the northwest corner, 1-based.
//! Pipes enter through the south boundary (one per column) and exit through
//! the east boundary (one per row), always traveling north or east. The
//! boundary permutation w satisfies: the pipe exiting at row r entered at
//! column w(r), so the Rothe construction of w traces back to w itself.

use std::fmt;

use thiserror::Error;

use crate::perm::Perm;

pub const NONE_COLOR: u16 = u16::MAX;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BpdError {
    #[error("unknown tile character `{0}`")]
    BadChar(char),
    #[error("grid is not square: row {0} has {1} tiles, expected {2}")]
    NotSquare(usize, usize, usize),
    #[error("edge mismatch at row {0}, column {1}")]
    EdgeMismatch(usize, usize),
    #[error("boundary condition violated at row {0}, column {1}")]
    BadBoundary(usize, usize),
    #[error("height grid invalid at ({0},{1})")]
    BadHeight(usize, usize),
    #[error("rectangle is not droopable")]
    NotDroopable,
    #[error("rectangle is not undroopable")]
    NotUndroopable,
}

/// The six tile kinds. The declaration order is the canonical enumeration
/// order used for deterministic listings.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Tile {
    Empty,
    Cross,
    Horizontal,
    Vertical,
    RElbow,
    JElbow,
}

pub const ALL_TILES: [Tile; 6] = [
    Tile::Empty,
    Tile::Cross,
    Tile::Horizontal,
    Tile::Vertical,
    Tile::RElbow,
    Tile::JElbow,
];

impl Tile {
    pub fn char(self) -> char {
        match self {
            Tile::Empty => '.',
            Tile::Cross => '+',
            Tile::Horizontal => '-',
            Tile::Vertical => '|',
            Tile::RElbow => 'r',
            Tile::JElbow => 'j',
        }
    }

    pub fn from_char(c: char) -> Result<Tile, BpdError> {
        Ok(match c {
            '.' => Tile::Empty,
            '+' => Tile::Cross,
            '-' => Tile::Horizontal,
            '|' => Tile::Vertical,
            'r' => Tile::RElbow,
            'j' => Tile::JElbow,
            other => return Err(BpdError::BadChar(other)),
        })
    }

    pub fn occupies_north(self) -> bool {
        matches!(self, Tile::Cross | Tile::Vertical | Tile::JElbow)
    }

    pub fn occupies_south(self) -> bool {
        matches!(self, Tile::Cross | Tile::Vertical | Tile::RElbow)
    }

    pub fn occupies_east(self) -> bool {
        matches!(self, Tile::Cross | Tile::Horizontal | Tile::RElbow)
    }

    pub fn occupies_west(self) -> bool {
        matches!(self, Tile::Cross | Tile::Horizontal | Tile::JElbow)
    }

    pub fn index(self) -> usize {
        match self {
            Tile::Empty => 0,
            Tile::Cross => 1,
            Tile::Horizontal => 2,
            Tile::Vertical => 3,
            Tile::RElbow => 4,
            Tile::JElbow => 5,
        }
    }
}

/// (n+1)×(n+1) corner-sum height values h(i,j), 0 <= i,j <= n, from the NW
/// corner. Zero along the north and west vertex rows; h(n,n) = n.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct HeightGrid {
    pub n: usize,
    values: Vec<i32>,
}

impl HeightGrid {
    pub fn at(&self, i: usize, j: usize) -> i32 {
        self.values[i * (self.n + 1) + j]
    }

    pub fn values(&self) -> &[i32] {
        &self.values
    }

    pub fn leq(&self, other: &HeightGrid) -> bool {
        assert_eq!(self.n, other.n);
        self.values
            .iter()
            .zip(other.values.iter())
            .all(|(a, b)| a <= b)
    }

    fn pointwise(&self, other: &HeightGrid, f: impl Fn(i32, i32) -> i32) -> HeightGrid {
        assert_eq!(self.n, other.n);
        HeightGrid {
            n: self.n,
            values: self
                .values
                .iter()
                .zip(other.values.iter())
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn min_with(&self, other: &HeightGrid) -> HeightGrid {
        self.pointwise(other, i32::min)
    }

    pub fn max_with(&self, other: &HeightGrid) -> HeightGrid {
        self.pointwise(other, i32::max)
    }

    /// The mixed second difference h(i,j) - h(i-1,j) - h(i,j-1) + h(i-1,j-1).
    pub fn mixed_difference(&self) -> Asm {
        let n = self.n;
        let mut entries = vec![0i8; n * n];
        for i in 1..=n {
            for j in 1..=n {
                let d = self.at(i, j) - self.at(i - 1, j) - self.at(i, j - 1)
                    + self.at(i - 1, j - 1);
                entries[(i - 1) * n + (j - 1)] = d as i8;
            }
        }
        Asm { n, entries }
    }
}

/// n×n matrix with entries in {-1,0,1}, rows and columns summing to 1 with
/// partial sums in {0,1}.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Asm {
    pub n: usize,
    entries: Vec<i8>,
}

impl Asm {
    pub fn at(&self, i: usize, j: usize) -> i8 {
        self.entries[(i - 1) * self.n + (j - 1)]
    }

    pub fn entries(&self) -> &[i8] {
        &self.entries
    }

    pub fn is_valid(&self) -> bool {
        let n = self.n;
        for i in 1..=n {
            let mut sum = 0;
            for j in 1..=n {
                sum += self.at(i, j) as i32;
                if !(0..=1).contains(&sum) {
                    return false;
                }
            }
            if sum != 1 {
                return false;
            }
        }
        for j in 1..=n {
            let mut sum = 0;
            for i in 1..=n {
                sum += self.at(i, j) as i32;
                if !(0..=1).contains(&sum) {
                    return false;
                }
            }
            if sum != 1 {
                return false;
            }
        }
        true
    }
}

/// An n×n bumpless pipe dream with cached pipe colors and boundary data.
///
/// The color of a pipe is its south entry column. `h_colors[b][j]` is the
/// color crossing the horizontal edge between rows b and b+1 at column j
/// (b = 0 is the north boundary); `v_colors[i][b]` crosses the vertical edge
/// between columns b and b+1 at row i (b = 0 is the west boundary).
#[derive(Clone, PartialEq, Eq)]
pub struct Bpd {
    n: usize,
    tiles: Vec<Tile>,
    h_colors: Vec<u16>, // (n+1) * n
    v_colors: Vec<u16>, // n * (n+1)
    boundary: Vec<u8>,  // boundary[r-1] = entry column of the pipe exiting row r
    cross_count: usize,
    inversion_count: usize,
}

impl Bpd {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn tile(&self, i: usize, j: usize) -> Tile {
        self.tiles[(i - 1) * self.n + (j - 1)]
    }

    pub fn tiles(&self) -> &[Tile] {
        &self.tiles
    }

    pub(crate) fn set_tile(&mut self, i: usize, j: usize, t: Tile) {
        self.tiles[(i - 1) * self.n + (j - 1)] = t;
    }

    pub fn cross_count(&self) -> usize {
        self.cross_count
    }

    pub fn inversion_count(&self) -> usize {
        self.inversion_count
    }

    /// The cached boundary permutation: entry column per exit row.
    pub fn boundary_perm(&self) -> Perm {
        Perm::new(self.boundary.clone()).expect("boundary is a bijection")
    }

    /// Reduced iff the cross count equals the inversion count of the
    /// boundary permutation.
    pub fn is_reduced(&self) -> bool {
        self.cross_count == self.inversion_count
    }

    pub(crate) fn h_color(&self, b: usize, j: usize) -> u16 {
        self.h_colors[b * self.n + (j - 1)]
    }

    pub(crate) fn set_h_color(&mut self, b: usize, j: usize, c: u16) {
        self.h_colors[b * self.n + (j - 1)] = c;
    }

    pub(crate) fn v_color(&self, i: usize, b: usize) -> u16 {
        self.v_colors[(i - 1) * (self.n + 1) + b]
    }

    pub(crate) fn set_v_color(&mut self, i: usize, b: usize, c: u16) {
        self.v_colors[(i - 1) * (self.n + 1) + b] = c;
    }

    pub(crate) fn set_boundary_entry(&mut self, row: usize, col: u8) {
        self.boundary[row - 1] = col;
    }

    pub(crate) fn set_counts(&mut self, crosses: usize, inversions: usize) {
        self.cross_count = crosses;
        self.inversion_count = inversions;
    }

    /// Builds a validated BPD from tiles, tracing every pipe.
    pub fn from_tiles(n: usize, tiles: Vec<Tile>) -> Result<Bpd, BpdError> {
        assert_eq!(tiles.len(), n * n);
        let at = |i: usize, j: usize| tiles[(i - 1) * n + (j - 1)];
        // edge compatibility and boundary conditions
        for i in 1..=n {
            for j in 1..=n {
                let t = at(i, j);
                let north_occ = if i == 1 { false } else { at(i - 1, j).occupies_south() };
                if t.occupies_north() != north_occ && i == 1 {
                    return Err(BpdError::BadBoundary(i, j));
                }
                if i > 1 && t.occupies_north() != at(i - 1, j).occupies_south() {
                    return Err(BpdError::EdgeMismatch(i, j));
                }
                let west_occ = if j == 1 { false } else { at(i, j - 1).occupies_east() };
                if t.occupies_west() != west_occ && j == 1 {
                    return Err(BpdError::BadBoundary(i, j));
                }
                if j > 1 && t.occupies_west() != at(i, j - 1).occupies_east() {
                    return Err(BpdError::EdgeMismatch(i, j));
                }
                if i == n && !t.occupies_south() {
                    return Err(BpdError::BadBoundary(i, j));
                }
                if j == n && !t.occupies_east() {
                    return Err(BpdError::BadBoundary(i, j));
                }
            }
        }
        let mut bpd = Bpd {
            n,
            tiles,
            h_colors: vec![NONE_COLOR; (n + 1) * n],
            v_colors: vec![NONE_COLOR; n * (n + 1)],
            boundary: vec![0; n],
            cross_count: 0,
            inversion_count: 0,
        };
        bpd.rebuild_caches();
        Ok(bpd)
    }

    /// Retraces every pipe and recomputes all caches from the tiles alone.
    pub(crate) fn rebuild_caches(&mut self) {
        let n = self.n;
        for c in self.h_colors.iter_mut() {
            *c = NONE_COLOR;
        }
        for c in self.v_colors.iter_mut() {
            *c = NONE_COLOR;
        }
        for k in 1..=n {
            let exit = self.trace_pipe(k);
            self.boundary[exit - 1] = k as u8;
        }
        self.cross_count = self
            .tiles
            .iter()
            .filter(|&&t| t == Tile::Cross)
            .count();
        self.inversion_count = Perm::new(self.boundary.clone())
            .expect("boundary bijection")
            .length();
    }

    /// Follows the pipe entering at south column k to its east exit row,
    /// coloring every edge it crosses.
    fn trace_pipe(&mut self, k: usize) -> usize {
        self.set_h_color(self.n, k, k as u16);
        self.walk_strand(self.n, k, true, k as u16)
    }

    /// Walks a strand from cell (i,j), entered heading north (through its
    /// south edge) or east (through its west edge), recoloring every edge it
    /// exits through; returns the east-boundary exit row. Pipes only travel
    /// north and east.
    pub(crate) fn walk_strand(
        &mut self,
        mut i: usize,
        mut j: usize,
        mut heading_north: bool,
        color: u16,
    ) -> usize {
        let n = self.n;
        loop {
            let t = self.tile(i, j);
            let exit_north = if heading_north {
                match t {
                    Tile::Vertical | Tile::Cross => true,
                    Tile::RElbow => false,
                    other => panic!("strand heading north into {other:?} at ({i},{j})"),
                }
            } else {
                match t {
                    Tile::Horizontal | Tile::Cross => false,
                    Tile::JElbow => true,
                    other => panic!("strand heading east into {other:?} at ({i},{j})"),
                }
            };
            if exit_north {
                self.set_h_color(i - 1, j, color);
                i -= 1;
                heading_north = true;
            } else {
                self.set_v_color(i, j, color);
                if j == n {
                    return i;
                }
                j += 1;
                heading_north = false;
            }
        }
    }

    /// The Rothe BPD of w: empty tiles exactly on the Rothe diagram, an
    /// r-elbow at each (i, w(i)), rays filled with verticals, horizontals,
    /// and crosses.
    pub fn rothe(w: &Perm) -> Bpd {
        let n = w.n();
        let inv = w.inverse();
        let mut tiles = Vec::with_capacity(n * n);
        for i in 1..=n {
            for j in 1..=n {
                let t = if w.at(i) == j {
                    Tile::RElbow
                } else if w.at(i) > j && inv.at(j) > i {
                    Tile::Empty
                } else {
                    let vertical = i > inv.at(j);
                    let horizontal = j > w.at(i);
                    match (vertical, horizontal) {
                        (true, true) => Tile::Cross,
                        (true, false) => Tile::Vertical,
                        (false, true) => Tile::Horizontal,
                        (false, false) => unreachable!("cell is dot, empty, or on a ray"),
                    }
                };
                tiles.push(t);
            }
        }
        Bpd::from_tiles(n, tiles).expect("Rothe construction is valid")
    }

    pub fn rothe_identity(n: usize) -> Bpd {
        Bpd::rothe(&Perm::identity(n))
    }

    pub fn rothe_longest(n: usize) -> Bpd {
        Bpd::rothe(&Perm::longest(n))
    }

    /// Corner-sum height function; h(i,j) counts the pipes crossed by a dual
    /// path from the NW corner, i.e. level lines of h are the pipes.
    pub fn height(&self) -> HeightGrid {
        let n = self.n;
        let mut values = vec![0i32; (n + 1) * (n + 1)];
        for i in 1..=n {
            for j in 1..=n {
                let above = values[(i - 1) * (n + 1) + j];
                let e = self.tile(i, j).occupies_east();
                values[i * (n + 1) + j] = above + i32::from(e);
            }
        }
        HeightGrid { n, values }
    }

    pub fn to_text(&self) -> String {
        let mut s = String::with_capacity(self.n * (self.n + 1));
        for i in 1..=self.n {
            for j in 1..=self.n {
                s.push(self.tile(i, j).char());
            }
            if i < self.n {
                s.push('\n');
            }
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Bpd, BpdError> {
        let rows: Vec<&str> = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .collect();
        let n = rows.len();
        let mut tiles = Vec::with_capacity(n * n);
        for (i, row) in rows.iter().enumerate() {
            let mut count = 0;
            for c in row.chars() {
                tiles.push(Tile::from_char(c)?);
                count += 1;
            }
            if count != n {
                return Err(BpdError::NotSquare(i + 1, count, n));
            }
        }
        Bpd::from_tiles(n, tiles)
    }

    /// Verifies cached colors and counts against a from-scratch rebuild.
    pub fn caches_consistent(&self) -> bool {
        let mut copy = self.clone();
        copy.rebuild_caches();
        copy == *self
    }
}

impl fmt::Debug for Bpd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Bpd(n={})\n{}", self.n, self.to_text())
    }
}

/// Re-derives the boundary permutation by tracing the tile grid.
pub fn trace_boundary(bpd: &Bpd) -> Perm {
    let mut copy = bpd.clone();
    copy.rebuild_caches();
    copy.boundary_perm()
}

pub fn leq(a: &Bpd, b: &Bpd) -> bool {
    a.height().leq(&b.height())
}

/// Lattice meet: pointwise minimum of heights (closer to the Rothe BPD of
/// w0, the unique minimum).
pub fn meet(a: &Bpd, b: &Bpd) -> Bpd {
    bpd_from_height(&a.height().min_with(&b.height())).expect("meet of valid heights is valid")
}

/// Lattice join: pointwise maximum of heights.
pub fn join(a: &Bpd, b: &Bpd) -> Bpd {
    bpd_from_height(&a.height().max_with(&b.height())).expect("join of valid heights is valid")
}

pub fn asm_of(bpd: &Bpd) -> Asm {
    bpd.height().mixed_difference()
}

pub fn height_grid_from_values(n: usize, values: Vec<i32>) -> Result<HeightGrid, BpdError> {
    if values.len() != (n + 1) * (n + 1) {
        return Err(BpdError::BadHeight(0, 0));
    }
    Ok(HeightGrid { n, values })
}

/// Rebuilds the unique BPD whose height function is `h`.
pub fn bpd_from_height(h: &HeightGrid) -> Result<Bpd, BpdError> {
    let n = h.n;
    for i in 0..=n {
        if h.at(0, i) != 0 || h.at(i, 0) != 0 {
            return Err(BpdError::BadHeight(0, i));
        }
        if h.at(i, n) != i as i32 || h.at(n, i) != i as i32 {
            return Err(BpdError::BadHeight(i, n));
        }
    }
    for i in 1..=n {
        for j in 1..=n {
            let row_step = h.at(i, j) - h.at(i, j - 1);
            let col_step = h.at(i, j) - h.at(i - 1, j);
            if !(0..=1).contains(&row_step) || !(0..=1).contains(&col_step) {
                return Err(BpdError::BadHeight(i, j));
            }
        }
    }
    let mut tiles = Vec::with_capacity(n * n);
    for i in 1..=n {
        for j in 1..=n {
            let north = h.at(i - 1, j) - h.at(i - 1, j - 1) == 1;
            let south = h.at(i, j) - h.at(i, j - 1) == 1;
            let west = h.at(i, j - 1) - h.at(i - 1, j - 1) == 1;
            let east = h.at(i, j) - h.at(i - 1, j) == 1;
            let tile = match (north, south, east, west) {
                (false, false, false, false) => Tile::Empty,
                (true, true, true, true) => Tile::Cross,
                (false, false, true, true) => Tile::Horizontal,
                (true, true, false, false) => Tile::Vertical,
                (false, true, true, false) => Tile::RElbow,
                (true, false, false, true) => Tile::JElbow,
                _ => return Err(BpdError::BadHeight(i, j)),
            };
            tiles.push(tile);
        }
    }
    Bpd::from_tiles(n, tiles)
}

/// All n×n BPDs (equivalently, ASMs) in row-major lexicographic tile order.
pub fn enumerate_asms(n: usize) -> Vec<Bpd> {
    assert!(n <= 6, "exhaustive enumeration limited to n <= 6");
    enumerate_grids(n)
        .into_iter()
        .map(|tiles| Bpd::from_tiles(n, tiles).expect("generator emits valid grids"))
        .collect()
}

/// All reduced n×n BPDs, in the same deterministic order.
pub fn enumerate_rbpds(n: usize) -> Vec<Bpd> {
    enumerate_asms(n).into_iter().filter(Bpd::is_reduced_ref).collect()
}

impl Bpd {
    fn is_reduced_ref(self: &Bpd) -> bool {
        self.is_reduced()
    }
}

/// Row-by-row backtracking over tiles compatible with the carried edge
/// profile; used by the small-n enumerators and the stuck-state scan.
pub fn for_each_grid(n: usize, mut f: impl FnMut(&[Tile])) {
    let mut tiles: Vec<Tile> = Vec::with_capacity(n * n);
    // north occupancy carried into the current row, per column
    let mut carry = vec![false; n + 1];
    rec(n, &mut tiles, &mut carry, false, &mut f);

    fn rec(
        n: usize,
        tiles: &mut Vec<Tile>,
        carry: &mut [bool],
        west: bool,
        f: &mut impl FnMut(&[Tile]),
    ) {
        let idx = tiles.len();
        if idx == n * n {
            f(tiles);
            return;
        }
        let i = idx / n + 1;
        let j = idx % n + 1;
        let north = carry[j];
        let last_row = i == n;
        let last_col = j == n;
        for t in ALL_TILES {
            if t.occupies_north() != north || t.occupies_west() != west {
                continue;
            }
            if last_row && !t.occupies_south() {
                continue;
            }
            if last_col && !t.occupies_east() {
                continue;
            }
            tiles.push(t);
            let saved = carry[j];
            carry[j] = t.occupies_south();
            let next_west = if last_col { false } else { t.occupies_east() };
            rec(n, tiles, carry, next_west, f);
            carry[j] = saved;
            tiles.pop();
        }
    }
}

fn enumerate_grids(n: usize) -> Vec<Vec<Tile>> {
    let mut out = Vec::new();
    for_each_grid(n, |tiles| out.push(tiles.to_vec()));
    out
}
