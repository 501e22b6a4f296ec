//! 2D digital topology on the pixel grid.
//!
//! Foreground and background use complementary adjacencies, `(4, 8)` or
//! `(8, 4)`. A pixel is *simple* when its topology numbers are both one:
//! flipping it then changes neither the foreground nor the background
//! component structure.
//!
//! Geodesic neighborhoods are always restricted to the punctured 3x3 window
//! `N8*(x)`. For 8-adjacency the geodesic set is `N8*(x) ∩ S`; for
//! 4-adjacency it is the two-step set `N4²(x, S)`, i.e. the axial members of
//! `S` together with the members of `S` in the window that are 4-adjacent to
//! one of them.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::grid::{BinaryMask, Shape};

/// Pixel adjacency.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Connectivity {
    Four,
    Eight,
}

const AXIAL: [(isize, isize); 4] = [(-1, 0), (0, -1), (0, 1), (1, 0)];
const FULL: [(isize, isize); 8] = [
    (-1, -1),
    (-1, 0),
    (-1, 1),
    (0, -1),
    (0, 1),
    (1, -1),
    (1, 0),
    (1, 1),
];

impl Connectivity {
    /// Neighbor offsets, excluding the pixel itself.
    pub fn offsets(self) -> &'static [(isize, isize)] {
        match self {
            Connectivity::Four => &AXIAL,
            Connectivity::Eight => &FULL,
        }
    }

    pub fn from_number(n: u32) -> Result<Self> {
        match n {
            4 => Ok(Connectivity::Four),
            8 => Ok(Connectivity::Eight),
            _ => Err(Error::InvalidParameter {
                name: "connectivity",
                reason: format!("expected 4 or 8, got {n}"),
            }),
        }
    }

    pub fn number(self) -> u32 {
        match self {
            Connectivity::Four => 4,
            Connectivity::Eight => 8,
        }
    }

    #[inline]
    fn adjacent(self, dr: isize, dc: isize) -> bool {
        match self {
            Connectivity::Four => dr.abs() + dc.abs() == 1,
            Connectivity::Eight => dr.abs().max(dc.abs()) == 1,
        }
    }
}

/// Foreground/background adjacency pair; the two must differ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ConnectivityPair {
    foreground: Connectivity,
    background: Connectivity,
}

impl ConnectivityPair {
    /// 4-connected foreground, 8-connected background.
    pub const FG4_BG8: ConnectivityPair = ConnectivityPair {
        foreground: Connectivity::Four,
        background: Connectivity::Eight,
    };
    /// 8-connected foreground, 4-connected background.
    pub const FG8_BG4: ConnectivityPair = ConnectivityPair {
        foreground: Connectivity::Eight,
        background: Connectivity::Four,
    };

    pub fn new(foreground: Connectivity, background: Connectivity) -> Result<Self> {
        if foreground == background {
            return Err(Error::InvalidParameter {
                name: "connectivity",
                reason: "foreground and background adjacency must differ".into(),
            });
        }
        Ok(ConnectivityPair {
            foreground,
            background,
        })
    }

    pub fn foreground(&self) -> Connectivity {
        self.foreground
    }

    pub fn background(&self) -> Connectivity {
        self.background
    }

    /// The pair with foreground and background roles exchanged.
    pub fn swapped(&self) -> Self {
        ConnectivityPair {
            foreground: self.background,
            background: self.foreground,
        }
    }
}

impl Default for ConnectivityPair {
    fn default() -> Self {
        Self::FG4_BG8
    }
}

impl fmt::Display for ConnectivityPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}-{}",
            self.foreground.number(),
            self.background.number()
        )
    }
}

impl FromStr for ConnectivityPair {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "4-8" => Ok(Self::FG4_BG8),
            "8-4" => Ok(Self::FG8_BG4),
            _ => Err(Error::InvalidParameter {
                name: "connectivity",
                reason: format!("expected `4-8` or `8-4`, got `{s}`"),
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PixelCoord {
    pub row: usize,
    pub col: usize,
}

impl PixelCoord {
    pub fn new(row: usize, col: usize) -> Self {
        PixelCoord { row, col }
    }

    fn offset(self, shape: Shape, dr: isize, dc: isize) -> PixelCoord {
        let (row, col) = shape.coords(
            shape.wrapped_index(self.row as isize + dr, self.col as isize + dc),
        );
        PixelCoord { row, col }
    }
}

/// `N_conn(x)` including `x`, with periodic wrapping.
pub fn neighborhood(x: PixelCoord, conn: Connectivity, shape: Shape) -> Vec<PixelCoord> {
    std::iter::once(x)
        .chain(
            conn.offsets()
                .iter()
                .map(|&(dr, dc)| x.offset(shape, dr, dc)),
        )
        .collect()
}

/// Membership of the 3x3 window around a pixel; `[1][1]` is the pixel itself.
type Window = [[bool; 3]; 3];

fn window(x: PixelCoord, mask: &BinaryMask) -> Window {
    let mut w = [[false; 3]; 3];
    for (i, row) in w.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = mask.get_wrapped(x.row as isize + i as isize - 1, x.col as isize + j as isize - 1);
        }
    }
    w
}

fn complement(w: &Window) -> Window {
    let mut out = *w;
    for row in out.iter_mut() {
        for cell in row.iter_mut() {
            *cell = !*cell;
        }
    }
    out
}

/// Geodesic neighborhood of the window center with respect to the set `set`.
fn geodesic(set: &Window, conn: Connectivity) -> Window {
    let mut out = [[false; 3]; 3];
    match conn {
        Connectivity::Eight => {
            for &(dr, dc) in &FULL {
                let (i, j) = ((dr + 1) as usize, (dc + 1) as usize);
                out[i][j] = set[i][j];
            }
        }
        Connectivity::Four => {
            for &(ar, ac) in &AXIAL {
                let (ai, aj) = ((ar + 1) as usize, (ac + 1) as usize);
                if !set[ai][aj] {
                    continue;
                }
                // N4(y) ∩ N8*(x) ∩ S for the axial member y.
                for &(dr, dc) in &FULL {
                    let (i, j) = ((dr + 1) as usize, (dc + 1) as usize);
                    let (er, ec) = (dr - ar, dc - ac);
                    if set[i][j] && er.abs() + ec.abs() <= 1 {
                        out[i][j] = true;
                    }
                }
            }
        }
    }
    out
}

/// Components of a set restricted to the punctured window (no wrapping).
fn window_components(set: &Window, conn: Connectivity) -> u8 {
    let mut seen = [[false; 3]; 3];
    let mut count = 0;
    for si in 0..3 {
        for sj in 0..3 {
            if (si, sj) == (1, 1) || !set[si][sj] || seen[si][sj] {
                continue;
            }
            count += 1;
            seen[si][sj] = true;
            let mut stack = vec![(si, sj)];
            while let Some((i, j)) = stack.pop() {
                for ni in 0..3 {
                    for nj in 0..3 {
                        if (ni, nj) == (1, 1) || !set[ni][nj] || seen[ni][nj] {
                            continue;
                        }
                        if conn.adjacent(ni as isize - i as isize, nj as isize - j as isize) {
                            seen[ni][nj] = true;
                            stack.push((ni, nj));
                        }
                    }
                }
            }
        }
    }
    count
}

fn window_members(w: &Window, x: PixelCoord, shape: Shape) -> Vec<PixelCoord> {
    FULL.iter()
        .filter(|&&(dr, dc)| w[(dr + 1) as usize][(dc + 1) as usize])
        .map(|&(dr, dc)| x.offset(shape, dr, dc))
        .collect()
}

/// Geodesic neighborhoods of a pixel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeodesicNeighborhoods {
    /// Geodesic neighborhood in the foreground, under the foreground adjacency.
    pub foreground: Vec<PixelCoord>,
    /// Geodesic neighborhood in the background, under the background adjacency.
    pub background: Vec<PixelCoord>,
}

pub fn geodesic_neighborhoods(
    x: PixelCoord,
    mask: &BinaryMask,
    pair: ConnectivityPair,
) -> GeodesicNeighborhoods {
    let w = window(x, mask);
    let shape = mask.shape();
    GeodesicNeighborhoods {
        foreground: window_members(&geodesic(&w, pair.foreground), x, shape),
        background: window_members(&geodesic(&complement(&w), pair.background), x, shape),
    }
}

/// Topology numbers `(T_fg, T_bg)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TopologyNumbers {
    pub foreground: u8,
    pub background: u8,
}

impl TopologyNumbers {
    pub fn is_simple(&self) -> bool {
        self.foreground == 1 && self.background == 1
    }
}

fn window_topology_numbers(w: &Window, pair: ConnectivityPair) -> TopologyNumbers {
    TopologyNumbers {
        foreground: window_components(&geodesic(w, pair.foreground), pair.foreground),
        background: window_components(&geodesic(&complement(w), pair.background), pair.background),
    }
}

/// Topology numbers of `x`. The result depends only on the eight neighbors of
/// `x`, so it is the same whether `x` itself is counted as foreground or not.
pub fn topology_numbers(x: PixelCoord, mask: &BinaryMask, pair: ConnectivityPair) -> TopologyNumbers {
    window_topology_numbers(&window(x, mask), pair)
}

/// Encodes the eight neighbors as a bit pattern in `FULL` order.
fn neighbor_pattern(x: PixelCoord, mask: &BinaryMask) -> u8 {
    let mut pattern = 0u8;
    for (bit, &(dr, dc)) in FULL.iter().enumerate() {
        if mask.get_wrapped(x.row as isize + dr, x.col as isize + dc) {
            pattern |= 1 << bit;
        }
    }
    pattern
}

fn pattern_window(pattern: u8) -> Window {
    let mut w = [[false; 3]; 3];
    for (bit, &(dr, dc)) in FULL.iter().enumerate() {
        w[(dr + 1) as usize][(dc + 1) as usize] = pattern & (1 << bit) != 0;
    }
    w
}

fn simple_table(pair: ConnectivityPair) -> &'static [bool; 256] {
    static FG4: OnceLock<[bool; 256]> = OnceLock::new();
    static FG8: OnceLock<[bool; 256]> = OnceLock::new();
    let cell = match pair.foreground {
        Connectivity::Four => &FG4,
        Connectivity::Eight => &FG8,
    };
    cell.get_or_init(|| {
        let mut table = [false; 256];
        for (pattern, entry) in table.iter_mut().enumerate() {
            *entry = window_topology_numbers(&pattern_window(pattern as u8), pair).is_simple();
        }
        table
    })
}

/// Whether flipping `x` preserves topology. Applies to both removal of a
/// foreground pixel and addition of a background pixel.
#[inline]
pub fn is_simple(x: PixelCoord, mask: &BinaryMask, pair: ConnectivityPair) -> bool {
    simple_table(pair)[neighbor_pattern(x, mask) as usize]
}

/// Per-pixel component labels: 0 outside the set, `1..=count` inside.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComponentLabeling {
    pub labels: Vec<u32>,
    pub count: usize,
}

/// Labels the connected components of the foreground of `mask`.
pub fn label_components(mask: &BinaryMask, conn: Connectivity, periodic: bool) -> ComponentLabeling {
    label_set(mask.shape(), mask.bits(), true, conn, periodic)
}

/// Number of components of the foreground (`value = true`) or background
/// (`value = false`) of `mask`.
pub fn count_components(mask: &BinaryMask, value: bool, conn: Connectivity, periodic: bool) -> usize {
    label_set(mask.shape(), mask.bits(), value, conn, periodic).count
}

/// `(foreground, background)` component counts on the periodic grid.
pub fn component_counts(mask: &BinaryMask, pair: ConnectivityPair) -> (usize, usize) {
    (
        count_components(mask, true, pair.foreground, true),
        count_components(mask, false, pair.background, true),
    )
}

fn label_set(
    shape: Shape,
    bits: &[bool],
    value: bool,
    conn: Connectivity,
    periodic: bool,
) -> ComponentLabeling {
    let (rows, cols) = (shape.rows() as isize, shape.cols() as isize);
    let mut labels = vec![0u32; bits.len()];
    let mut count = 0u32;
    let mut queue = VecDeque::new();
    for start in 0..bits.len() {
        if bits[start] != value || labels[start] != 0 {
            continue;
        }
        count += 1;
        labels[start] = count;
        queue.push_back(start);
        while let Some(i) = queue.pop_front() {
            let (r, c) = shape.coords(i);
            for &(dr, dc) in conn.offsets() {
                let (nr, nc) = (r as isize + dr, c as isize + dc);
                let j = if periodic {
                    shape.wrapped_index(nr, nc)
                } else if (0..rows).contains(&nr) && (0..cols).contains(&nc) {
                    shape.index(nr as usize, nc as usize)
                } else {
                    continue;
                };
                if bits[j] == value && labels[j] == 0 {
                    labels[j] = count;
                    queue.push_back(j);
                }
            }
        }
    }
    ComponentLabeling {
        labels,
        count: count as usize,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn mask_from(rows: usize, cols: usize, on: &[(usize, usize)]) -> BinaryMask {
        let mut m = BinaryMask::zeros(Shape::new(rows, cols).unwrap());
        for &(r, c) in on {
            m.set(r, c, true);
        }
        m
    }

    fn sorted(mut v: Vec<PixelCoord>) -> Vec<PixelCoord> {
        v.sort();
        v
    }

    fn coords(v: &[(usize, usize)]) -> Vec<PixelCoord> {
        sorted(v.iter().map(|&(r, c)| PixelCoord::new(r, c)).collect())
    }

    #[test]
    fn neighborhood_examples() {
        let s5 = Shape::new(5, 5).unwrap();
        let n = neighborhood(PixelCoord::new(2, 2), Connectivity::Four, s5);
        assert_eq!(sorted(n), coords(&[(2, 2), (1, 2), (3, 2), (2, 1), (2, 3)]));

        let s4 = Shape::new(4, 4).unwrap();
        let n = neighborhood(PixelCoord::new(0, 0), Connectivity::Eight, s4);
        assert_eq!(n.len(), 9);
        assert!(n.contains(&PixelCoord::new(3, 3)));

        let s3 = Shape::new(3, 3).unwrap();
        let n = sorted(neighborhood(PixelCoord::new(1, 1), Connectivity::Eight, s3));
        let all: Vec<_> = (0..3).flat_map(|r| (0..3).map(move |c| (r, c))).collect();
        assert_eq!(n, coords(&all));
    }

    #[test]
    fn geodesic_isolated_and_interior() {
        let isolated = mask_from(5, 5, &[(2, 2)]);
        let g = geodesic_neighborhoods(PixelCoord::new(2, 2), &isolated, ConnectivityPair::FG4_BG8);
        assert!(g.foreground.is_empty());
        assert_eq!(g.background.len(), 8);

        let block: Vec<_> = (1..4).flat_map(|r| (1..4).map(move |c| (r, c))).collect();
        let m = mask_from(5, 5, &block);
        let g = geodesic_neighborhoods(PixelCoord::new(2, 2), &m, ConnectivityPair::FG4_BG8);
        assert_eq!(g.foreground.len(), 8);
        assert!(g.background.is_empty());
    }

    #[test]
    fn geodesic_horizontal_bar() {
        let m = mask_from(3, 3, &[(1, 0), (1, 1), (1, 2)]);
        let g = geodesic_neighborhoods(PixelCoord::new(1, 1), &m, ConnectivityPair::FG4_BG8);
        assert_eq!(sorted(g.foreground), coords(&[(1, 0), (1, 2)]));
        assert_eq!(
            sorted(g.background),
            coords(&[(0, 0), (0, 1), (0, 2), (2, 0), (2, 1), (2, 2)])
        );
    }

    #[test]
    fn geodesic_excludes_unreachable_diagonal() {
        // Diagonal (0,0) is not 4-adjacent to any axial foreground neighbor.
        let m = mask_from(5, 5, &[(1, 1), (2, 3)]);
        let g = geodesic_neighborhoods(PixelCoord::new(2, 2), &m, ConnectivityPair::FG4_BG8);
        assert_eq!(g.foreground, vec![PixelCoord::new(2, 3)]);
        let t = topology_numbers(PixelCoord::new(2, 2), &m, ConnectivityPair::FG4_BG8);
        assert_eq!(t.foreground, 1);
    }

    #[test]
    fn topology_number_examples() {
        let pair = ConnectivityPair::FG4_BG8;
        let bar = mask_from(3, 5, &[(1, 0), (1, 1), (1, 2), (1, 3), (1, 4)]);
        // The rows above and below the bar are separate 8-components.
        let t = topology_numbers(PixelCoord::new(1, 2), &bar, pair);
        assert_eq!((t.foreground, t.background), (2, 2));
        assert!(!is_simple(PixelCoord::new(1, 2), &bar, pair));

        let end = mask_from(5, 5, &[(2, 2), (2, 3)]);
        let t = topology_numbers(PixelCoord::new(2, 2), &end, pair);
        assert_eq!((t.foreground, t.background), (1, 1));
        assert!(is_simple(PixelCoord::new(2, 2), &end, pair));

        let iso = mask_from(5, 5, &[(2, 2)]);
        let t = topology_numbers(PixelCoord::new(2, 2), &iso, pair);
        assert_eq!((t.foreground, t.background), (0, 1));

        let block: Vec<_> = (1..4).flat_map(|r| (1..4).map(move |c| (r, c))).collect();
        let solid = mask_from(5, 5, &block);
        assert!(!is_simple(PixelCoord::new(2, 2), &solid, pair));
    }

    #[test]
    fn center_membership_is_irrelevant() {
        let pair = ConnectivityPair::FG4_BG8;
        let mut m = mask_from(5, 5, &[(2, 3)]);
        let out = topology_numbers(PixelCoord::new(2, 2), &m, pair);
        m.set(2, 2, true);
        let inside = topology_numbers(PixelCoord::new(2, 2), &m, pair);
        assert_eq!(out, inside);
    }

    #[test]
    fn labeling_examples() {
        let s = Shape::new(4, 4).unwrap();
        assert_eq!(label_components(&BinaryMask::zeros(s), Connectivity::Four, false).count, 0);

        let diag = mask_from(4, 4, &[(1, 1), (2, 2)]);
        assert_eq!(label_components(&diag, Connectivity::Four, false).count, 2);
        assert_eq!(label_components(&diag, Connectivity::Eight, false).count, 1);

        let checker = BinaryMask::from_fn(s, |r, c| (r + c) % 2 == 0);
        assert_eq!(checker.count_ones(), 8);
        assert_eq!(label_components(&checker, Connectivity::Four, false).count, 8);
    }

    #[test]
    fn periodic_labeling_joins_across_edges() {
        let m = mask_from(5, 5, &[(2, 0), (2, 4)]);
        assert_eq!(count_components(&m, true, Connectivity::Four, false), 2);
        assert_eq!(count_components(&m, true, Connectivity::Four, true), 1);
    }

    #[test]
    fn pair_parsing() {
        assert_eq!("4-8".parse::<ConnectivityPair>().unwrap(), ConnectivityPair::FG4_BG8);
        assert_eq!("8-4".parse::<ConnectivityPair>().unwrap(), ConnectivityPair::FG8_BG4);
        assert!("4-4".parse::<ConnectivityPair>().is_err());
        assert!(ConnectivityPair::new(Connectivity::Eight, Connectivity::Eight).is_err());
    }

    fn small_mask() -> impl Strategy<Value = BinaryMask> {
        (5usize..9, 5usize..9).prop_flat_map(|(r, c)| {
            proptest::collection::vec(any::<bool>(), r * c)
                .prop_map(move |bits| BinaryMask::new(r, c, bits).unwrap())
        })
    }

    proptest! {
        #[test]
        fn topology_numbers_are_local(m in small_mask(), seed in any::<u64>(), fg8 in any::<bool>()) {
            let pair = if fg8 { ConnectivityPair::FG8_BG4 } else { ConnectivityPair::FG4_BG8 };
            let s = m.shape();
            let x = PixelCoord::new(seed as usize % s.rows(), (seed >> 16) as usize % s.cols());
            let before = topology_numbers(x, &m, pair);
            prop_assert!(before.foreground <= 4 && before.background <= 4);
            let window: Vec<_> = neighborhood(x, Connectivity::Eight, s);
            let mut perturbed = m.clone();
            for i in 0..s.len() {
                let (r, c) = s.coords(i);
                if !window.contains(&PixelCoord::new(r, c)) && (i as u64 ^ seed).is_multiple_of(3) {
                    perturbed.set(r, c, !m.get(r, c));
                }
            }
            prop_assert_eq!(topology_numbers(x, &perturbed, pair), before);
            prop_assert_eq!(is_simple(x, &m, pair), before.is_simple());
        }

        #[test]
        fn periodic_count_is_translation_invariant(m in small_mask(), dr in 0usize..9, dc in 0usize..9, eight in any::<bool>()) {
            let conn = if eight { Connectivity::Eight } else { Connectivity::Four };
            let s = m.shape();
            let shifted = BinaryMask::from_fn(s, |r, c| m.get((r + dr) % s.rows(), (c + dc) % s.cols()));
            prop_assert_eq!(
                label_components(&m, conn, true).count,
                label_components(&shifted, conn, true).count
            );
        }

        #[test]
        fn labels_agree_with_count(m in small_mask()) {
            let lab = label_components(&m, Connectivity::Four, true);
            let max = lab.labels.iter().copied().max().unwrap_or(0) as usize;
            prop_assert_eq!(max, lab.count);
            for (i, &l) in lab.labels.iter().enumerate() {
                prop_assert_eq!(l > 0, m.bits()[i]);
            }
        }
    }
}
