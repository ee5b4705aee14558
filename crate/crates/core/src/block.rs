//! Near-lattice packing of a single rectangle of bounded eccentricity.
//!
//! A rectangle `R` with `M n0^{-t} ≤ w(R) ≤ h(R) ≤ 3M n0^{-t}` receives the
//! `M1·M2` consecutive squares `n0 ≤ n < n0 + M1·M2`, indexed
//! `n_{i,j} = n0 + j·M1 + i`. Row `j` is pushed flush against the right edge
//! of `R` and column `i` is stacked from the bottom edge, so neighbouring
//! squares touch exactly and only small rectangles are left over: one hole
//! between every 2×2 group of squares ("surround"), a sliver left of every
//! row, a sliver above every column, and one corner piece.
//!
//! All coordinates are built in a portrait frame (`w` along x) and mapped
//! back with an exact axis swap when `R` is wider than tall.
//!
//! The x-coordinates are chained right to left so that, in floating point,
//! `x_{i,j} + side_{i,j}` evaluates to exactly `x_{i+1,j}` (and to the right
//! edge of `R` for the last column). The y-coordinates are chained bottom to
//! top with `y_{i,j+1} = y_{i,j} + side_{i,j}`. Touching squares therefore
//! share their edges bit for bit.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{unweighted_perim, Frame, PlacedSquare, Rect, ResidualTag};
use crate::series::{side, Params};
use crate::sum::NeumaierSum;

/// Relative tolerance for snapping `w·n0^t` onto an integer and for the
/// bounded-eccentricity inequalities.
pub const GRID_SNAP: f64 = 1e-9;

/// Gaps with an extent below this multiple of `n0^{-t}` are dropped.
pub const DEGENERATE_EXTENT: f64 = 1e-15;

/// Containment slack, as a multiple of `n0^{-t}`.
pub const CONTAINMENT_SLACK: f64 = 1e-12;

/// The inequality of a block precondition that failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Inequality {
    /// `M n0^{-t} <= w(R)`
    MinWidth,
    /// `h(R) <= 3M n0^{-t}`
    MaxHeight,
    /// `M1 n0^{-t} <= w(R) < (M1+1) n0^{-t}`
    GridWidth,
    /// `M2 n0^{-t} <= h(R) < (M2+1) n0^{-t}`
    GridHeight,
    /// `1 <= M1 <= M2`
    GridOrder,
}

impl Inequality {
    pub fn formula(&self) -> &'static str {
        match self {
            Inequality::MinWidth => "M n0^-t <= w(R)",
            Inequality::MaxHeight => "h(R) <= 3M n0^-t",
            Inequality::GridWidth => "M1 n0^-t <= w(R) < (M1+1) n0^-t",
            Inequality::GridHeight => "M2 n0^-t <= h(R) < (M2+1) n0^-t",
            Inequality::GridOrder => "1 <= M1 <= M2",
        }
    }
}

impl std::fmt::Display for Inequality {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.formula())
    }
}

#[derive(Debug, Clone, PartialEq, Error, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BlockError {
    /// `lhs <= rhs` was required; `margin = rhs - lhs` is negative.
    #[error("block precondition {inequality} violated: {lhs} > {rhs} (margin {margin})")]
    Precondition {
        inequality: Inequality,
        lhs: f64,
        rhs: f64,
        margin: f64,
    },
    #[error("square ({i}, {j}) leaves the block by {margin}")]
    Containment { i: u64, j: u64, margin: f64 },
    #[error("lattice index ({i}, {j}) outside {m1} x {m2}")]
    IndexOutOfRange { i: u64, j: u64, m1: u64, m2: u64 },
    #[error("degenerate or non-finite block rectangle")]
    InvalidRect,
    #[error("expected {expected} squares in lexicographic order, got {got}")]
    SquareLayout { expected: usize, got: usize },
}

fn violation(inequality: Inequality, lhs: f64, rhs: f64) -> BlockError {
    BlockError::Precondition {
        inequality,
        lhs,
        rhs,
        margin: rhs - lhs,
    }
}

/// `⌊len / unit⌋`, rounding up when the quotient is within `GRID_SNAP` of
/// the next integer.
fn grid_floor(len: f64, unit: f64) -> u64 {
    let q = len / unit;
    let k = q.floor();
    if k + 1.0 - q <= GRID_SNAP * q {
        k as u64 + 1
    } else {
        k as u64
    }
}

/// Grid dimensions `(M1, M2)` for a rectangle of bounded eccentricity.
///
/// `M1 = ⌊w(R) n0^t⌋`, `M2 = ⌊h(R) n0^t⌋`, both clamped to at most `3M`
/// so that `w = 3M n0^{-t}` exactly is accepted.
pub fn choose_m1_m2(rect: &Rect, n0: u64, params: &Params) -> Result<(u64, u64), BlockError> {
    if !rect.is_valid() {
        return Err(BlockError::InvalidRect);
    }
    let unit = side(n0, params.t());
    let m = params.m();
    let (w, h) = (rect.width(), rect.height());
    let lo = m as f64 * unit;
    let hi = 3.0 * m as f64 * unit;
    if w < lo * (1.0 - GRID_SNAP) {
        return Err(violation(Inequality::MinWidth, lo, w));
    }
    if h > hi * (1.0 + GRID_SNAP) {
        return Err(violation(Inequality::MaxHeight, h, hi));
    }
    let m1 = grid_floor(w, unit).clamp(m, 3 * m);
    let m2 = grid_floor(h, unit).clamp(m1, 3 * m);
    Ok((m1, m2))
}

/// `n_{i,j} = n0 + j·M1 + i`.
pub fn lex_index(i: u64, j: u64, n0: u64, m1: u64, m2: u64) -> Result<u64, BlockError> {
    if i >= m1 || j >= m2 {
        return Err(BlockError::IndexOutOfRange { i, j, m1, m2 });
    }
    Ok(n0 + j * m1 + i)
}

/// A validated block: target rectangle, first index and grid shape.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockSpec {
    rect: Rect,
    frame: Frame,
    n0: u64,
    t: f64,
    m1: u64,
    m2: u64,
}

impl BlockSpec {
    /// Block with an explicit grid. Checks only the floor relations
    /// between the grid and the rectangle, not the scale `M`.
    pub fn new(rect: Rect, n0: u64, t: f64, m1: u64, m2: u64) -> Result<Self, BlockError> {
        if !rect.is_valid() {
            return Err(BlockError::InvalidRect);
        }
        if m1 == 0 || m1 > m2 {
            return Err(violation(Inequality::GridOrder, m1 as f64, m2 as f64));
        }
        let unit = side(n0, t);
        let (w, h) = (rect.width(), rect.height());
        let lo_w = m1 as f64 * unit;
        if w < lo_w * (1.0 - GRID_SNAP) {
            return Err(violation(Inequality::GridWidth, lo_w, w));
        }
        let hi_w = (m1 + 1) as f64 * unit;
        if w > hi_w * (1.0 + GRID_SNAP) {
            return Err(violation(Inequality::GridWidth, w, hi_w));
        }
        let lo_h = m2 as f64 * unit;
        if h < lo_h * (1.0 - GRID_SNAP) {
            return Err(violation(Inequality::GridHeight, lo_h, h));
        }
        let hi_h = (m2 + 1) as f64 * unit;
        if h > hi_h * (1.0 + GRID_SNAP) {
            return Err(violation(Inequality::GridHeight, h, hi_h));
        }
        Ok(Self {
            rect,
            frame: Frame::portrait_for(&rect),
            n0,
            t,
            m1,
            m2,
        })
    }

    /// Block whose grid is chosen from the run parameters.
    pub fn from_params(rect: Rect, n0: u64, params: &Params) -> Result<Self, BlockError> {
        let (m1, m2) = choose_m1_m2(&rect, n0, params)?;
        Self::new(rect, n0, params.t(), m1, m2)
    }

    pub fn rect(&self) -> Rect {
        self.rect
    }

    pub fn frame(&self) -> Frame {
        self.frame
    }

    /// The target in the portrait frame.
    pub fn local_rect(&self) -> Rect {
        self.frame.rect(&self.rect)
    }

    pub fn n0(&self) -> u64 {
        self.n0
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn m1(&self) -> u64 {
        self.m1
    }

    pub fn m2(&self) -> u64 {
        self.m2
    }

    pub fn count(&self) -> u64 {
        self.m1 * self.m2
    }

    /// First index after the block, `n0 + M1·M2`.
    pub fn n0_next(&self) -> u64 {
        self.n0 + self.count()
    }

    /// `n0^{-t}`, the lattice spacing the block is measured in.
    pub fn unit(&self) -> f64 {
        side(self.n0, self.t)
    }
}

/// An `x` with `x + side == right` in floating point, if one exists.
fn exact_left_edge(right: f64, side: f64) -> Option<f64> {
    let mut x = right - side;
    for _ in 0..4 {
        let e = x + side;
        if e == right {
            return Some(x);
        }
        x = if e < right {
            x.next_up()
        } else {
            x.next_down()
        };
    }
    None
}

/// Left edge and side of a square whose right edge lands exactly on
/// `right`.
///
/// When `side` sits exactly half an ulp off the coordinate grid every sum
/// `x + side` is a tie and rounding to even may skip `right`; the side is
/// then moved by a few ulps (well inside the 1e-15 relative accuracy of
/// `n^{-t}`). As a last resort the square stops short of `right`, leaving a
/// one-ulp sliver rather than an overlap. That happens when `x` lies in a
/// coarser binade than `right`, which needs negative coordinates; packings
/// built by the engine live in the first quadrant.
fn abutting(right: f64, side: f64) -> (f64, f64) {
    let (mut up, mut down) = (side, side);
    for _ in 0..4 {
        if let Some(x) = exact_left_edge(right, down) {
            return (x, down);
        }
        if let Some(x) = exact_left_edge(right, up) {
            return (x, up);
        }
        down = down.next_down();
        up = up.next_up();
    }
    let mut x = right - side;
    while x + side > right {
        x = x.next_down();
    }
    (x, side)
}

/// Local (portrait-frame) lattice coordinates, indexed `j·M1 + i`.
#[derive(Debug, Clone)]
struct Lattice {
    m1: usize,
    m2: usize,
    x: Vec<f64>,
    y: Vec<f64>,
    s: Vec<f64>,
}

impl Lattice {
    fn build(spec: &BlockSpec, side_of: impl Fn(u64) -> f64) -> Self {
        let (m1, m2) = (spec.m1 as usize, spec.m2 as usize);
        let local = spec.local_rect();
        let count = m1 * m2;
        let mut s: Vec<f64> = (0..count as u64).map(|k| side_of(spec.n0 + k)).collect();
        let mut x = vec![0.0; count];
        let mut y = vec![0.0; count];
        for j in 0..m2 {
            let mut right = local.x1;
            for i in (0..m1).rev() {
                let k = j * m1 + i;
                (x[k], s[k]) = abutting(right, s[k]);
                right = x[k];
            }
        }
        for i in 0..m1 {
            let mut bottom = local.y0;
            for j in 0..m2 {
                let k = j * m1 + i;
                y[k] = bottom;
                bottom = y[k] + s[k];
            }
        }
        Self { m1, m2, x, y, s }
    }

    fn from_squares(spec: &BlockSpec, squares: &[PlacedSquare]) -> Result<Self, BlockError> {
        let count = spec.count() as usize;
        let in_order = squares
            .iter()
            .enumerate()
            .all(|(k, sq)| sq.n == spec.n0 + k as u64);
        if squares.len() != count || !in_order {
            return Err(BlockError::SquareLayout {
                expected: count,
                got: squares.len(),
            });
        }
        let local: Vec<PlacedSquare> = squares.iter().map(|sq| spec.frame.square(sq)).collect();
        Ok(Self {
            m1: spec.m1 as usize,
            m2: spec.m2 as usize,
            x: local.iter().map(|sq| sq.x).collect(),
            y: local.iter().map(|sq| sq.y).collect(),
            s: local.iter().map(|sq| sq.side).collect(),
        })
    }

    fn k(&self, i: usize, j: usize) -> usize {
        j * self.m1 + i
    }

    fn check_containment(&self, spec: &BlockSpec) -> Result<(), BlockError> {
        let local = spec.local_rect();
        let slack = CONTAINMENT_SLACK * spec.unit();
        for j in 0..self.m2 {
            let k = self.k(0, j);
            let margin = self.x[k] - local.x0;
            if margin < -slack {
                return Err(BlockError::Containment {
                    i: 0,
                    j: j as u64,
                    margin,
                });
            }
        }
        for i in 0..self.m1 {
            let k = self.k(i, self.m2 - 1);
            let margin = local.y1 - (self.y[k] + self.s[k]);
            if margin < -slack {
                return Err(BlockError::Containment {
                    i: i as u64,
                    j: (self.m2 - 1) as u64,
                    margin,
                });
            }
        }
        Ok(())
    }

    fn squares(&self, spec: &BlockSpec) -> Vec<PlacedSquare> {
        (0..self.x.len())
            .map(|k| {
                spec.frame.square(&PlacedSquare {
                    n: spec.n0 + k as u64,
                    side: self.s[k],
                    x: self.x[k],
                    y: self.y[k],
                })
            })
            .collect()
    }
}

/// Which of the four leftover families a gap belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GapKind {
    /// Hole enclosed by a 2×2 group of squares.
    Surround,
    /// Sliver between the left edge of the block and a row.
    Left,
    /// Sliver between the top of a column and the top edge of the block.
    Top,
    /// Piece above the leftmost column and left of the top row.
    Corner,
}

impl From<GapKind> for ResidualTag {
    fn from(kind: GapKind) -> Self {
        match kind {
            GapKind::Surround => ResidualTag::Surround,
            GapKind::Left => ResidualTag::Left,
            GapKind::Top => ResidualTag::Top,
            GapKind::Corner => ResidualTag::Corner,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gap {
    pub rect: Rect,
    pub kind: GapKind,
}

/// Gap rectangles of a block plus what was dropped as degenerate.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GapSet {
    pub gaps: Vec<Gap>,
    pub dropped: usize,
    pub discarded_area: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GapCensus {
    pub surround: usize,
    pub left: usize,
    pub top: usize,
    pub corner: usize,
}

impl GapCensus {
    pub fn of(gaps: &[Gap]) -> Self {
        let mut c = GapCensus::default();
        for g in gaps {
            match g.kind {
                GapKind::Surround => c.surround += 1,
                GapKind::Left => c.left += 1,
                GapKind::Top => c.top += 1,
                GapKind::Corner => c.corner += 1,
            }
        }
        c
    }

    /// Counts of a grid with no degenerate gaps.
    pub fn expected(m1: u64, m2: u64) -> Self {
        Self {
            surround: ((m1 - 1) * (m2 - 1)) as usize,
            left: m2 as usize,
            top: m1 as usize,
            corner: 1,
        }
    }

    pub fn total(&self) -> usize {
        self.surround + self.left + self.top + self.corner
    }
}

/// Squares of the block in lexicographic order `n0, n0+1, …`.
pub fn place_squares(spec: &BlockSpec) -> Result<Vec<PlacedSquare>, BlockError> {
    let lattice = Lattice::build(spec, |n| side(n, spec.t));
    lattice.check_containment(spec)?;
    Ok(lattice.squares(spec))
}

/// The gap rectangles left around `squares` (as returned by
/// [`place_squares`]) inside the block.
pub fn enumerate_gaps(spec: &BlockSpec, squares: &[PlacedSquare]) -> Result<GapSet, BlockError> {
    let lat = Lattice::from_squares(spec, squares)?;
    Ok(gaps_of(spec, &lat))
}

fn gaps_of(spec: &BlockSpec, lat: &Lattice) -> GapSet {
    let local = spec.local_rect();
    let min_extent = DEGENERATE_EXTENT * spec.unit();
    let (m1, m2) = (lat.m1, lat.m2);
    let mut out = GapSet::default();
    let mut discarded = NeumaierSum::new();
    let mut push = |r: Rect, kind: GapKind| {
        if r.dx() >= min_extent && r.dy() >= min_extent {
            out.gaps.push(Gap {
                rect: spec.frame.rect(&r),
                kind,
            });
        } else {
            out.dropped += 1;
            discarded += r.dx().max(0.0) * r.dy().max(0.0);
        }
    };
    for j in 0..m2.saturating_sub(1) {
        for i in 0..m1 - 1 {
            let (a, b, c) = (lat.k(i + 1, j), lat.k(i + 1, j + 1), lat.k(i, j + 1));
            push(
                Rect::new(lat.x[a], lat.y[b], lat.x[b], lat.y[c]),
                GapKind::Surround,
            );
        }
    }
    for j in 0..m2 {
        let k = lat.k(0, j);
        push(
            Rect::new(local.x0, lat.y[k], lat.x[k], lat.y[k] + lat.s[k]),
            GapKind::Left,
        );
    }
    for i in 0..m1 {
        let k = lat.k(i, m2 - 1);
        push(
            Rect::new(lat.x[k], lat.y[k] + lat.s[k], lat.x[k] + lat.s[k], local.y1),
            GapKind::Top,
        );
    }
    let k = lat.k(0, m2 - 1);
    push(
        Rect::new(local.x0, lat.y[k] + lat.s[k], lat.x[k], local.y1),
        GapKind::Corner,
    );
    out.discarded_area = discarded.value();
    out
}

/// Outcome of packing one block.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockResult {
    pub spec: BlockSpec,
    pub squares: Vec<PlacedSquare>,
    pub gaps: Vec<Gap>,
    pub n0_next: u64,
    pub dropped: usize,
    pub discarded_area: f64,
}

impl BlockResult {
    pub fn census(&self) -> GapCensus {
        GapCensus::of(&self.gaps)
    }

    /// Unweighted perimeter of the gap family.
    pub fn gap_perimeter(&self) -> f64 {
        unweighted_perim(self.gaps.iter().map(|g| &g.rect))
    }

    pub fn square_perimeter(&self) -> f64 {
        self.squares
            .iter()
            .map(|s| 4.0 * s.side)
            .sum::<NeumaierSum>()
            .value()
    }

    pub fn square_area(&self) -> f64 {
        self.squares
            .iter()
            .map(|s| s.area())
            .sum::<NeumaierSum>()
            .value()
    }

    pub fn gap_area(&self) -> f64 {
        self.gaps
            .iter()
            .map(|g| g.rect.area())
            .sum::<NeumaierSum>()
            .value()
    }

    /// Largest gap extent in units of `n0^{-t}`.
    pub fn max_gap_extent(&self) -> f64 {
        let unit = self.spec.unit();
        self.gaps
            .iter()
            .map(|g| g.rect.height() / unit)
            .fold(0.0, f64::max)
    }
}

/// Pack a validated block.
pub fn pack_spec(spec: &BlockSpec) -> Result<BlockResult, BlockError> {
    let lattice = Lattice::build(spec, |n| side(n, spec.t));
    lattice.check_containment(spec)?;
    let squares = lattice.squares(spec);
    let GapSet {
        gaps,
        dropped,
        discarded_area,
    } = gaps_of(spec, &lattice);
    Ok(BlockResult {
        spec: *spec,
        squares,
        gaps,
        n0_next: spec.n0_next(),
        dropped,
        discarded_area,
    })
}

/// Pack `rect` with squares `n0 ≤ n < n0 + M1·M2`, choosing the grid from
/// `params`.
pub fn pack_block(rect: &Rect, n0: u64, params: &Params) -> Result<BlockResult, BlockError> {
    let spec = BlockSpec::from_params(*rect, n0, params)?;
    pack_spec(&spec)
}
