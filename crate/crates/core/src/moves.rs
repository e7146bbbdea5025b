//! Local 2×2 flips and rectangular droops/undroops on BPDs, with stuck-state
//! detection and flip-graph connectivity checks.
//!
//! The flip table is generated at first use by brute force over all 6^4
//! window fillings grouped by their outer edge profile, rather than
//! transcribed by hand; the sixteen resulting pairs are pinned in tests.

use std::collections::{HashMap, HashSet, VecDeque};
use std::sync::OnceLock;

use crate::bpd::{enumerate_rbpds, for_each_grid, Bpd, BpdError, Tile, ALL_TILES, NONE_COLOR};
use crate::perm::Perm;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum FlipDir {
    Up,
    Down,
}

impl FlipDir {
    pub fn opposite(self) -> FlipDir {
        match self {
            FlipDir::Up => FlipDir::Down,
            FlipDir::Down => FlipDir::Up,
        }
    }
}

/// Flip taxonomy: drips touch no cross, cross changes create or annihilate
/// one, relocations shift a cross between opposite corners.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum FlipKind {
    Drip,
    CrossChange,
    CrossRelocation,
}

/// A 2×2 flip at the interior vertex (i,j), 1 <= i,j <= n-1; the window is
/// rows i..i+1, columns j..j+1 in row-major order [NW, NE, SW, SE].
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct FlipMove {
    pub vertex: (usize, usize),
    pub direction: FlipDir,
    pub kind: FlipKind,
    pub before: [Tile; 4],
    pub after: [Tile; 4],
}

impl FlipMove {
    pub fn inverse(&self) -> FlipMove {
        FlipMove {
            vertex: self.vertex,
            direction: self.direction.opposite(),
            kind: self.kind,
            before: self.after,
            after: self.before,
        }
    }
}

/// A droop/undroop rectangle, rows [top, bottom] and columns [left, right].
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct DroopRect {
    pub top: usize,
    pub bottom: usize,
    pub left: usize,
    pub right: usize,
}

// ---------------------------------------------------------------------------
// flip table

fn window_code(w: [Tile; 4]) -> u16 {
    w.iter().fold(0u16, |acc, t| acc * 6 + t.index() as u16)
}

fn window_tiles(code: u16) -> [Tile; 4] {
    let mut c = code;
    let mut out = [Tile::Empty; 4];
    for k in (0..4).rev() {
        out[k] = ALL_TILES[(c % 6) as usize];
        c /= 6;
    }
    out
}

fn window_crosses(w: &[Tile; 4]) -> usize {
    w.iter().filter(|&&t| t == Tile::Cross).count()
}

fn internally_compatible(w: &[Tile; 4]) -> bool {
    let [nw, ne, sw, se] = *w;
    nw.occupies_east() == ne.occupies_west()
        && nw.occupies_south() == sw.occupies_north()
        && ne.occupies_south() == se.occupies_north()
        && sw.occupies_east() == se.occupies_west()
}

fn outer_signature(w: &[Tile; 4]) -> u8 {
    let [nw, ne, sw, se] = *w;
    u8::from(nw.occupies_north())
        | u8::from(ne.occupies_north()) << 1
        | u8::from(nw.occupies_west()) << 2
        | u8::from(sw.occupies_west()) << 3
        | u8::from(sw.occupies_south()) << 4
        | u8::from(se.occupies_south()) << 5
        | u8::from(ne.occupies_east()) << 6
        | u8::from(se.occupies_east()) << 7
}

struct FlipTable {
    up: Vec<Option<(u16, FlipKind)>>,
    down: Vec<Option<(u16, FlipKind)>>,
}

fn flip_table() -> &'static FlipTable {
    static TABLE: OnceLock<FlipTable> = OnceLock::new();
    TABLE.get_or_init(build_flip_table)
}

fn build_flip_table() -> FlipTable {
    let mut by_sig: HashMap<u8, Vec<u16>> = HashMap::new();
    for code in 0..1296u16 {
        let w = window_tiles(code);
        if internally_compatible(&w) {
            by_sig.entry(outer_signature(&w)).or_default().push(code);
        }
    }
    let mut up = vec![None; 1296];
    let mut down = vec![None; 1296];
    for group in by_sig.values() {
        assert!(
            group.len() <= 2,
            "a window boundary admits at most two tilings"
        );
        if let [x, y] = group[..] {
            let wx = window_tiles(x);
            let wy = window_tiles(y);
            // the up state raises the height at the shared interior vertex,
            // i.e. its NW tile gains the south edge
            let sx = wx[0].occupies_south();
            let sy = wy[0].occupies_south();
            assert_ne!(sx, sy, "flip partners must differ at the center");
            let (lo, hi) = if sx { (y, x) } else { (x, y) };
            let (clo, chi) = (
                window_crosses(&window_tiles(lo)),
                window_crosses(&window_tiles(hi)),
            );
            let kind = if clo == 0 && chi == 0 {
                FlipKind::Drip
            } else if clo != chi {
                FlipKind::CrossChange
            } else {
                FlipKind::CrossRelocation
            };
            up[lo as usize] = Some((hi, kind));
            down[hi as usize] = Some((lo, kind));
        }
    }
    FlipTable { up, down }
}

fn read_window(bpd: &Bpd, i: usize, j: usize) -> [Tile; 4] {
    [
        bpd.tile(i, j),
        bpd.tile(i, j + 1),
        bpd.tile(i + 1, j),
        bpd.tile(i + 1, j + 1),
    ]
}

/// The flip at `vertex` in the given direction, if the window admits one.
pub fn flip_available(bpd: &Bpd, vertex: (usize, usize), direction: FlipDir) -> Option<FlipMove> {
    let (i, j) = vertex;
    debug_assert!(i >= 1 && i < bpd.n() && j >= 1 && j < bpd.n());
    let before = read_window(bpd, i, j);
    let code = window_code(before);
    let table = flip_table();
    let entry = match direction {
        FlipDir::Up => table.up[code as usize],
        FlipDir::Down => table.down[code as usize],
    };
    entry.map(|(partner, kind)| FlipMove {
        vertex,
        direction,
        kind,
        before,
        after: window_tiles(partner),
    })
}

/// Applies the flip in place, retracing the affected pipes to the boundary
/// and updating the boundary permutation, cross count, and inversion count
/// incrementally.
pub fn apply_flip(bpd: &mut Bpd, mv: &FlipMove) {
    let (i, j) = mv.vertex;
    debug_assert_eq!(read_window(bpd, i, j), mv.before, "move must match window");
    bpd.set_tile(i, j, mv.after[0]);
    bpd.set_tile(i, j + 1, mv.after[1]);
    bpd.set_tile(i + 1, j, mv.after[2]);
    bpd.set_tile(i + 1, j + 1, mv.after[3]);
    // interior window edges are recolored by the rewalks below
    bpd.set_v_color(i, j, NONE_COLOR);
    bpd.set_v_color(i + 1, j, NONE_COLOR);
    bpd.set_h_color(i, j, NONE_COLOR);
    bpd.set_h_color(i, j + 1, NONE_COLOR);
    // strands can only enter through the window's south and west outer edges
    let mut exits: [(usize, u16); 4] = [(0, 0); 4];
    let mut count = 0;
    for (si, sj) in [(i + 1, j), (i + 1, j + 1)] {
        let c = bpd.h_color(si, sj);
        if c != NONE_COLOR {
            exits[count] = (bpd.walk_strand(si, sj, true, c), c);
            count += 1;
        }
    }
    for wi in [i, i + 1] {
        let c = bpd.v_color(wi, j - 1);
        if c != NONE_COLOR {
            exits[count] = (bpd.walk_strand(wi, j, false, c), c);
            count += 1;
        }
    }
    let old = bpd.boundary_perm();
    let mut neu = old.entries().to_vec();
    let mut changed: [usize; 4] = [0; 4];
    let mut nchanged = 0;
    for &(row, color) in &exits[..count] {
        if neu[row - 1] != color as u8 {
            neu[row - 1] = color as u8;
            changed[nchanged] = row;
            nchanged += 1;
        }
    }
    let delta_inv = inversion_delta(old.entries(), &neu, &changed[..nchanged]);
    for &(row, color) in &exits[..count] {
        bpd.set_boundary_entry(row, color as u8);
    }
    let delta_cross =
        window_crosses(&mv.after) as i64 - window_crosses(&mv.before) as i64;
    let crosses = (bpd.cross_count() as i64 + delta_cross) as usize;
    let inversions = (bpd.inversion_count() as i64 + delta_inv) as usize;
    bpd.set_counts(crosses, inversions);
}

fn inversion_delta(old: &[u8], neu: &[u8], changed: &[usize]) -> i64 {
    let n = old.len();
    let mut delta = 0i64;
    for (k, &r) in changed.iter().enumerate() {
        for pos in 1..=n {
            if pos == r || changed[..k].contains(&pos) {
                continue;
            }
            let (lo, hi) = if pos < r { (pos, r) } else { (r, pos) };
            let before = old[lo - 1] > old[hi - 1];
            let after = neu[lo - 1] > neu[hi - 1];
            delta += i64::from(after) - i64::from(before);
        }
    }
    delta
}

/// Applies the flip on a scratch basis and reports whether the result stays
/// reduced; the workspace is restored before returning.
pub fn flip_preserves_reducedness(bpd: &mut Bpd, mv: &FlipMove) -> bool {
    apply_flip(bpd, mv);
    let ok = bpd.is_reduced();
    apply_flip(bpd, &mv.inverse());
    ok
}

// ---------------------------------------------------------------------------
// droops and undroops

/// NW corner r-elbow, SE corner empty, NE horizontal, SW vertical, no elbows
/// off the corners. Border membership is then forced by edge compatibility.
pub fn droopable(bpd: &Bpd, r: &DroopRect) -> bool {
    rect_ok(bpd, r)
        && bpd.tile(r.top, r.left) == Tile::RElbow
        && bpd.tile(r.bottom, r.right) == Tile::Empty
        && bpd.tile(r.top, r.right) == Tile::Horizontal
        && bpd.tile(r.bottom, r.left) == Tile::Vertical
        && borders_clear(bpd, r)
}

/// Inverse configuration: NW empty, SE j-elbow, NE and SW r-elbows.
pub fn undroopable(bpd: &Bpd, r: &DroopRect) -> bool {
    rect_ok(bpd, r)
        && bpd.tile(r.top, r.left) == Tile::Empty
        && bpd.tile(r.bottom, r.right) == Tile::JElbow
        && bpd.tile(r.top, r.right) == Tile::RElbow
        && bpd.tile(r.bottom, r.left) == Tile::RElbow
        && borders_clear(bpd, r)
}

fn rect_ok(bpd: &Bpd, r: &DroopRect) -> bool {
    r.top >= 1 && r.top < r.bottom && r.bottom <= bpd.n() && r.left >= 1 && r.left < r.right
        && r.right <= bpd.n()
}

fn borders_clear(bpd: &Bpd, r: &DroopRect) -> bool {
    for i in r.top + 1..r.bottom {
        for j in r.left + 1..r.right {
            if matches!(bpd.tile(i, j), Tile::RElbow | Tile::JElbow) {
                return false;
            }
        }
    }
    for j in r.left + 1..r.right {
        if matches!(bpd.tile(r.top, j), Tile::RElbow | Tile::JElbow)
            || matches!(bpd.tile(r.bottom, j), Tile::RElbow | Tile::JElbow)
        {
            return false;
        }
    }
    for i in r.top + 1..r.bottom {
        if matches!(bpd.tile(i, r.left), Tile::RElbow | Tile::JElbow)
            || matches!(bpd.tile(i, r.right), Tile::RElbow | Tile::JElbow)
        {
            return false;
        }
    }
    true
}

/// Moves the NW r-elbow to a j-elbow at SE: north and west borders retract,
/// south and east borders extend, interior tiles unchanged. Preserves the
/// boundary permutation, cross count, and reducedness.
pub fn apply_droop(bpd: &mut Bpd, r: &DroopRect) -> Result<(), BpdError> {
    if !droopable(bpd, r) {
        return Err(BpdError::NotDroopable);
    }
    let color = bpd.h_color(r.bottom, r.left);
    debug_assert_ne!(color, NONE_COLOR);
    bpd.set_tile(r.top, r.left, Tile::Empty);
    bpd.set_tile(r.bottom, r.right, Tile::JElbow);
    bpd.set_tile(r.top, r.right, Tile::RElbow);
    bpd.set_tile(r.bottom, r.left, Tile::RElbow);
    for j in r.left + 1..r.right {
        let north = match bpd.tile(r.top, j) {
            Tile::Horizontal => Tile::Empty,
            Tile::Cross => Tile::Vertical,
            other => unreachable!("north border tile {other:?}"),
        };
        bpd.set_tile(r.top, j, north);
        let south = match bpd.tile(r.bottom, j) {
            Tile::Empty => Tile::Horizontal,
            Tile::Vertical => Tile::Cross,
            other => unreachable!("south border tile {other:?}"),
        };
        bpd.set_tile(r.bottom, j, south);
    }
    for i in r.top + 1..r.bottom {
        let west = match bpd.tile(i, r.left) {
            Tile::Vertical => Tile::Empty,
            Tile::Cross => Tile::Horizontal,
            other => unreachable!("west border tile {other:?}"),
        };
        bpd.set_tile(i, r.left, west);
        let east = match bpd.tile(i, r.right) {
            Tile::Empty => Tile::Vertical,
            Tile::Horizontal => Tile::Cross,
            other => unreachable!("east border tile {other:?}"),
        };
        bpd.set_tile(i, r.right, east);
    }
    refresh_rect_colors(bpd, r, color);
    Ok(())
}

pub fn apply_undroop(bpd: &mut Bpd, r: &DroopRect) -> Result<(), BpdError> {
    if !undroopable(bpd, r) {
        return Err(BpdError::NotUndroopable);
    }
    let color = bpd.h_color(r.bottom, r.left);
    debug_assert_ne!(color, NONE_COLOR);
    bpd.set_tile(r.top, r.left, Tile::RElbow);
    bpd.set_tile(r.bottom, r.right, Tile::Empty);
    bpd.set_tile(r.top, r.right, Tile::Horizontal);
    bpd.set_tile(r.bottom, r.left, Tile::Vertical);
    for j in r.left + 1..r.right {
        let north = match bpd.tile(r.top, j) {
            Tile::Empty => Tile::Horizontal,
            Tile::Vertical => Tile::Cross,
            other => unreachable!("north border tile {other:?}"),
        };
        bpd.set_tile(r.top, j, north);
        let south = match bpd.tile(r.bottom, j) {
            Tile::Horizontal => Tile::Empty,
            Tile::Cross => Tile::Vertical,
            other => unreachable!("south border tile {other:?}"),
        };
        bpd.set_tile(r.bottom, j, south);
    }
    for i in r.top + 1..r.bottom {
        let west = match bpd.tile(i, r.left) {
            Tile::Empty => Tile::Vertical,
            Tile::Horizontal => Tile::Cross,
            other => unreachable!("west border tile {other:?}"),
        };
        bpd.set_tile(i, r.left, west);
        let east = match bpd.tile(i, r.right) {
            Tile::Vertical => Tile::Empty,
            Tile::Cross => Tile::Horizontal,
            other => unreachable!("east border tile {other:?}"),
        };
        bpd.set_tile(i, r.right, east);
    }
    refresh_rect_colors(bpd, r, color);
    Ok(())
}

/// Clears edge colors inside the rectangle that lost their strand, then
/// rewalks the relocated pipe; transit pipes keep their paths and colors.
fn refresh_rect_colors(bpd: &mut Bpd, r: &DroopRect, color: u16) {
    for i in r.top..=r.bottom {
        for j in r.left..=r.right {
            let t = bpd.tile(i, j);
            if i > r.top && !t.occupies_north() {
                bpd.set_h_color(i - 1, j, NONE_COLOR);
            }
            if j > r.left && !t.occupies_west() {
                bpd.set_v_color(i, j - 1, NONE_COLOR);
            }
        }
    }
    let exit = bpd.walk_strand(r.bottom, r.left, true, color);
    debug_assert_eq!(
        bpd.boundary_perm().at(exit),
        color as usize,
        "droops preserve the boundary permutation"
    );
}

pub fn droopable_rects(bpd: &Bpd) -> Vec<DroopRect> {
    let n = bpd.n();
    let mut out = Vec::new();
    for top in 1..n {
        for bottom in top + 1..=n {
            for left in 1..n {
                for right in left + 1..=n {
                    let r = DroopRect {
                        top,
                        bottom,
                        left,
                        right,
                    };
                    if droopable(bpd, &r) {
                        out.push(r);
                    }
                }
            }
        }
    }
    out
}

pub fn undroopable_rects(bpd: &Bpd) -> Vec<DroopRect> {
    let n = bpd.n();
    let mut out = Vec::new();
    for top in 1..n {
        for bottom in top + 1..=n {
            for left in 1..n {
                for right in left + 1..=n {
                    let r = DroopRect {
                        top,
                        bottom,
                        left,
                        right,
                    };
                    if undroopable(bpd, &r) {
                        out.push(r);
                    }
                }
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// stuck states, the length-reducing flip, connectivity

/// A reduced BPD other than the maximum that admits no reducedness-preserving
/// up flip.
pub fn is_stuck(bpd: &Bpd) -> bool {
    debug_assert!(bpd.is_reduced());
    if bpd.boundary_perm().is_identity() {
        return false;
    }
    let n = bpd.n();
    let mut scratch = bpd.clone();
    for i in 1..n {
        for j in 1..n {
            if let Some(mv) = flip_available(&scratch, (i, j), FlipDir::Up) {
                if flip_preserves_reducedness(&mut scratch, &mv) {
                    return false;
                }
            }
        }
    }
    true
}

/// The type-(b) up flip on the Rothe BPD of `w` that annihilates the topmost
/// cross in the leftmost cross column, reducing the boundary length by one.
pub fn rothe_reducing_flip(w: &Perm) -> FlipMove {
    assert!(!w.is_identity(), "the identity admits no reducing flip");
    let b = Bpd::rothe(w);
    let n = b.n();
    let (ci, cj) = (1..=n)
        .flat_map(|j| (1..=n).map(move |i| (i, j)))
        .find(|&(i, j)| b.tile(i, j) == Tile::Cross)
        .expect("a non-identity Rothe BPD contains a cross");
    debug_assert_eq!(
        b.tile(ci - 1, cj - 1),
        Tile::Empty,
        "cell NW of the chosen cross is empty"
    );
    let mv = flip_available(&b, (ci - 1, cj - 1), FlipDir::Up)
        .expect("the window admits the annihilating flip");
    debug_assert_eq!(mv.kind, FlipKind::CrossChange);
    mv
}

/// All stuck reduced BPDs of size n, streamed from the full enumeration,
/// plus the count of transpose orbits. Exhaustive: intended for n <= 8.
pub fn stuck_rbpds(n: usize) -> (Vec<Bpd>, usize) {
    let mut stuck = Vec::new();
    for_each_grid(n, |tiles| {
        if tiles.iter().filter(|&&t| t == Tile::Cross).count() > n * (n - 1) / 2 {
            return;
        }
        let b = Bpd::from_tiles(n, tiles.to_vec()).expect("enumerated grids are valid");
        if b.is_reduced() && is_stuck(&b) {
            stuck.push(b);
        }
    });
    let mut seen: HashSet<String> = HashSet::new();
    let mut orbits = 0;
    for b in &stuck {
        let key = b.to_text();
        if seen.contains(&key) {
            continue;
        }
        orbits += 1;
        seen.insert(key);
        seen.insert(b.transpose().to_text());
    }
    (stuck, orbits)
}

/// BFS connectivity of the reduced-BPD graph under reducedness-preserving
/// flips, optionally adding droops and undroops.
pub fn flip_graph_connected(n: usize, with_droops: bool) -> bool {
    let states = enumerate_rbpds(n);
    let index: HashMap<String, usize> = states
        .iter()
        .enumerate()
        .map(|(k, b)| (b.to_text(), k))
        .collect();
    let mut visited = vec![false; states.len()];
    let mut queue = VecDeque::new();
    visited[0] = true;
    queue.push_back(0);
    let mut seen = 1;
    while let Some(cur) = queue.pop_front() {
        for nb in neighbors(&states[cur], with_droops) {
            let k = index[&nb.to_text()];
            if !visited[k] {
                visited[k] = true;
                seen += 1;
                queue.push_back(k);
            }
        }
    }
    seen == states.len()
}

fn neighbors(bpd: &Bpd, with_droops: bool) -> Vec<Bpd> {
    let n = bpd.n();
    let mut scratch = bpd.clone();
    let mut out = Vec::new();
    for i in 1..n {
        for j in 1..n {
            for dir in [FlipDir::Up, FlipDir::Down] {
                if let Some(mv) = flip_available(&scratch, (i, j), dir) {
                    apply_flip(&mut scratch, &mv);
                    if scratch.is_reduced() {
                        out.push(scratch.clone());
                    }
                    apply_flip(&mut scratch, &mv.inverse());
                }
            }
        }
    }
    if with_droops {
        for r in droopable_rects(bpd) {
            let mut b = bpd.clone();
            apply_droop(&mut b, &r).unwrap();
            out.push(b);
        }
        for r in undroopable_rects(bpd) {
            let mut b = bpd.clone();
            apply_undroop(&mut b, &r).unwrap();
            out.push(b);
        }
    }
    out
}

impl Bpd {
    /// Reflection along the main diagonal; swaps the boundary permutation
    /// with its inverse.
    pub fn transpose(&self) -> Bpd {
        let n = self.n();
        let mut tiles = Vec::with_capacity(n * n);
        for i in 1..=n {
            for j in 1..=n {
                let t = match self.tile(j, i) {
                    Tile::Horizontal => Tile::Vertical,
                    Tile::Vertical => Tile::Horizontal,
                    other => other,
                };
                tiles.push(t);
            }
        }
        Bpd::from_tiles(n, tiles).expect("transpose of a valid grid is valid")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::perm::all_perms;

    fn p(s: &str) -> Perm {
        s.parse().unwrap()
    }

    #[test]
    fn flip_table_has_sixteen_pairs() {
        let table = flip_table();
        assert_eq!(table.up.iter().flatten().count(), 16);
        assert_eq!(table.down.iter().flatten().count(), 16);
        let mut drips = 0;
        let mut changes = 0;
        let mut moves = 0;
        for entry in table.up.iter().flatten() {
            match entry.1 {
                FlipKind::Drip => drips += 1,
                FlipKind::CrossChange => changes += 1,
                FlipKind::CrossRelocation => moves += 1,
            }
        }
        assert_eq!((drips, changes, moves), (4, 8, 4));
    }

    #[test]
    fn flip_table_matches_pinned_list() {
        // the sixteen up flips, transcribed from the full tile-by-tile list
        use Tile::{Cross as C, Empty as E, Horizontal as H, JElbow as J, RElbow as R, Vertical as V};
        let catalog: [([Tile; 4], [Tile; 4], FlipKind); 16] = [
            ([E, R, H, J], [R, H, J, E], FlipKind::Drip),
            ([E, R, R, J], [R, H, V, E], FlipKind::Drip),
            ([E, V, H, J], [R, J, J, E], FlipKind::Drip),
            ([E, V, R, J], [R, J, V, E], FlipKind::Drip),
            ([J, R, H, J], [C, H, J, E], FlipKind::CrossChange),
            ([J, R, R, J], [C, H, V, E], FlipKind::CrossChange),
            ([J, V, H, J], [C, J, J, E], FlipKind::CrossChange),
            ([J, V, R, J], [C, J, V, E], FlipKind::CrossChange),
            ([E, R, H, C], [R, H, J, R], FlipKind::CrossChange),
            ([E, R, R, C], [R, H, V, R], FlipKind::CrossChange),
            ([E, V, H, C], [R, J, J, R], FlipKind::CrossChange),
            ([E, V, R, C], [R, J, V, R], FlipKind::CrossChange),
            ([J, R, H, C], [C, H, J, R], FlipKind::CrossRelocation),
            ([J, R, R, C], [C, H, V, R], FlipKind::CrossRelocation),
            ([J, V, H, C], [C, J, J, R], FlipKind::CrossRelocation),
            ([J, V, R, C], [C, J, V, R], FlipKind::CrossRelocation),
        ];
        let table = flip_table();
        for (lo, hi, kind) in catalog {
            let got = table.up[window_code(lo) as usize];
            assert_eq!(got, Some((window_code(hi), kind)), "{lo:?} -> {hi:?}");
            let back = table.down[window_code(hi) as usize];
            assert_eq!(back, Some((window_code(lo), kind)));
        }
    }

    #[test]
    fn extremes_admit_no_moves_in_their_direction() {
        let b_id = Bpd::rothe_identity(4);
        let b_w0 = Bpd::rothe_longest(4);
        for i in 1..4 {
            for j in 1..4 {
                assert!(flip_available(&b_id, (i, j), FlipDir::Up).is_none());
                assert!(flip_available(&b_w0, (i, j), FlipDir::Down).is_none());
            }
        }
    }

    #[test]
    fn available_flips_match_window_retiling_oracle() {
        // oracle: all 6^4 window fillings compatible with the outer profile
        let states = crate::bpd::enumerate_asms(4);
        assert_eq!(states.len(), 42);
        let mut total_available = 0usize;
        let mut total_oracle = 0usize;
        for b in &states {
            for i in 1..4 {
                for j in 1..4 {
                    let cur = read_window(b, i, j);
                    let sig = outer_signature(&cur);
                    let alternatives: Vec<u16> = (0..1296u16)
                        .filter(|&c| {
                            let w = window_tiles(c);
                            internally_compatible(&w)
                                && outer_signature(&w) == sig
                                && w != cur
                        })
                        .collect();
                    total_oracle += alternatives.len();
                    for dir in [FlipDir::Up, FlipDir::Down] {
                        if let Some(mv) = flip_available(b, (i, j), dir) {
                            total_available += 1;
                            assert!(alternatives.contains(&window_code(mv.after)));
                        }
                    }
                }
            }
        }
        assert_eq!(total_available, total_oracle);
        assert!(total_available > 0);
    }

    #[test]
    fn flips_are_height_local_and_involutive() {
        for b in crate::bpd::enumerate_asms(4) {
            for i in 1..4 {
                for j in 1..4 {
                    for dir in [FlipDir::Up, FlipDir::Down] {
                        let Some(mv) = flip_available(&b, (i, j), dir) else {
                            continue;
                        };
                        let mut x = b.clone();
                        apply_flip(&mut x, &mv);
                        assert!(x.caches_consistent(), "incremental caches agree");
                        let h0 = b.height();
                        let h1 = x.height();
                        let mut diffs = 0;
                        for vi in 0..=4 {
                            for vj in 0..=4 {
                                if h0.at(vi, vj) != h1.at(vi, vj) {
                                    diffs += 1;
                                    assert_eq!((vi, vj), (i, j));
                                    let want = match dir {
                                        FlipDir::Up => 1,
                                        FlipDir::Down => -1,
                                    };
                                    assert_eq!(h1.at(vi, vj) - h0.at(vi, vj), want);
                                }
                            }
                        }
                        assert_eq!(diffs, 1);
                        if mv.kind == FlipKind::Drip {
                            assert_eq!(x.boundary_perm(), b.boundary_perm());
                        }
                        apply_flip(&mut x, &mv.inverse());
                        assert_eq!(x, b, "up-then-down restores the state");
                    }
                }
            }
        }
    }

    #[test]
    fn reducedness_filter_matches_recount() {
        for b in crate::bpd::enumerate_rbpds(4) {
            let mut scratch = b.clone();
            for i in 1..4 {
                for j in 1..4 {
                    for dir in [FlipDir::Up, FlipDir::Down] {
                        let Some(mv) = flip_available(&b, (i, j), dir) else {
                            continue;
                        };
                        let fast = flip_preserves_reducedness(&mut scratch, &mv);
                        assert_eq!(scratch, b, "workspace restored");
                        let mut full = b.clone();
                        apply_flip(&mut full, &mv);
                        full.rebuild_caches();
                        assert_eq!(fast, full.is_reduced());
                    }
                }
            }
        }
    }

    #[test]
    fn monotonicity_violation_scenario() {
        // two ordered states with identical windows at the marked vertex,
        // where only the higher one accepts the shared down flip
        let x = Bpd::from_text("..r-\n.r+-\nr++-\n|||r").unwrap();
        let y = Bpd::from_text("..r-\nr-+-\n|r+-\n|||r").unwrap();
        assert_eq!(x.boundary_perm(), p("3,2,1,4"));
        assert_eq!(y.boundary_perm(), p("3,1,2,4"));
        assert!(crate::bpd::leq(&x, &y));
        let vertex = (3, 3);
        let mv_x = flip_available(&x, vertex, FlipDir::Down).unwrap();
        let mv_y = flip_available(&y, vertex, FlipDir::Down).unwrap();
        assert_eq!(mv_x.before, mv_y.before);
        let mut xs = x.clone();
        let mut ys = y.clone();
        assert!(!flip_preserves_reducedness(&mut xs, &mv_x));
        assert!(flip_preserves_reducedness(&mut ys, &mv_y));
        // accepting only in y breaks the order
        let mut y2 = y.clone();
        apply_flip(&mut y2, &mv_y);
        assert!(!crate::bpd::leq(&x, &y2));
    }

    #[test]
    fn droop_three_by_three_golden() {
        let before = Bpd::from_text("..r--\n.r+--\nr++--\n|||.r\n|||r+").unwrap();
        let mut b = before.clone();
        let rect = DroopRect {
            top: 2,
            bottom: 4,
            left: 2,
            right: 4,
        };
        assert!(droopable(&b, &rect));
        apply_droop(&mut b, &rect).unwrap();
        assert_eq!(b.to_text(), "..r--\n..|r-\nr-++-\n|r+jr\n|||r+");
        assert!(b.caches_consistent());
        assert_eq!(b.boundary_perm(), before.boundary_perm());
        assert_eq!(b.cross_count(), before.cross_count());
        apply_undroop(&mut b, &rect).unwrap();
        assert_eq!(b, before);
    }

    #[test]
    fn droops_preserve_everything_exhaustively() {
        for b in crate::bpd::enumerate_rbpds(4) {
            for r in droopable_rects(&b) {
                let mut x = b.clone();
                apply_droop(&mut x, &r).unwrap();
                assert!(x.caches_consistent());
                assert_eq!(x.boundary_perm(), b.boundary_perm());
                assert_eq!(x.cross_count(), b.cross_count());
                assert!(x.is_reduced());
                apply_undroop(&mut x, &r).unwrap();
                assert_eq!(x, b);
            }
            let bad = DroopRect {
                top: 1,
                bottom: 2,
                left: 1,
                right: 2,
            };
            if !droopable(&b, &bad) {
                assert!(apply_droop(&mut b.clone(), &bad).is_err());
            }
        }
    }

    #[test]
    fn rothe_reachable_by_droops_alone() {
        // every w-RBPD arises from the Rothe BPD by a sequence of droops
        for n in [3usize, 4] {
            let mut reachable: HashSet<String> = HashSet::new();
            let mut queue: VecDeque<Bpd> = all_perms(n).iter().map(Bpd::rothe).collect();
            for b in &queue {
                reachable.insert(b.to_text());
            }
            while let Some(b) = queue.pop_front() {
                for r in droopable_rects(&b) {
                    let mut x = b.clone();
                    apply_droop(&mut x, &r).unwrap();
                    if reachable.insert(x.to_text()) {
                        queue.push_back(x);
                    }
                }
            }
            assert_eq!(reachable.len(), enumerate_rbpds(n).len());
        }
    }

    #[test]
    fn reducing_flip_drops_length_by_one() {
        let s1 = p("2,1");
        let mv = rothe_reducing_flip(&s1);
        let mut b = Bpd::rothe(&s1);
        apply_flip(&mut b, &mv);
        assert_eq!(b, Bpd::rothe_identity(2));

        for w in all_perms(5) {
            if w.is_identity() {
                continue;
            }
            let mv = rothe_reducing_flip(&w);
            let mut b = Bpd::rothe(&w);
            apply_flip(&mut b, &mv);
            assert!(b.is_reduced());
            let w2 = b.boundary_perm();
            assert_eq!(w2.length(), w.length() - 1, "w={w}");
            // the result differs from w by one transposition
            let diff: Vec<usize> = (1..=5).filter(|&i| w.at(i) != w2.at(i)).collect();
            assert_eq!(diff.len(), 2);
            assert_eq!(
                w.apply_transposition(diff[0], diff[1]).unwrap(),
                w2
            );
        }
    }

    #[test]
    fn no_stuck_states_small_n() {
        for n in 3..=5 {
            for b in enumerate_rbpds(n) {
                assert!(!is_stuck(&b), "n={n}");
            }
        }
    }

    #[test]
    fn connectivity_small() {
        assert!(flip_graph_connected(3, false));
        assert!(flip_graph_connected(4, false));
        assert!(flip_graph_connected(3, true));
        assert!(flip_graph_connected(4, true));
    }

    #[test]
    fn transpose_inverts_boundary() {
        for w in all_perms(4) {
            let b = Bpd::rothe(&w);
            assert_eq!(b.transpose().boundary_perm(), w.inverse());
        }
    }
}
