//! Axis-aligned rectangles, placed squares and residual families.
//!
//! The width of a rectangle is its smaller sidelength and the height its
//! larger one, whatever the axis orientation.

use std::cmp::Ordering;
use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::sum::NeumaierSum;

/// Closed axis-aligned rectangle `[x0, x1] × [y0, y1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Rect {
    pub const fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Self { x0, y0, x1, y1 }
    }

    pub fn from_origin(x0: f64, y0: f64, dx: f64, dy: f64) -> Self {
        Self::new(x0, y0, x0 + dx, y0 + dy)
    }

    pub fn is_valid(&self) -> bool {
        self.x0.is_finite()
            && self.y0.is_finite()
            && self.x1.is_finite()
            && self.y1.is_finite()
            && self.x0 < self.x1
            && self.y0 < self.y1
    }

    pub fn dx(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn dy(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn width(&self) -> f64 {
        self.dx().min(self.dy())
    }

    pub fn height(&self) -> f64 {
        self.dx().max(self.dy())
    }

    pub fn area(&self) -> f64 {
        self.dx() * self.dy()
    }

    /// True when the x-extent is the width (the rectangle stands upright).
    pub fn is_portrait(&self) -> bool {
        self.dx() <= self.dy()
    }

    /// Area of the intersection of the two interiors (0 when they only touch).
    pub fn overlap_area(&self, other: &Rect) -> f64 {
        let ox = self.x1.min(other.x1) - self.x0.max(other.x0);
        let oy = self.y1.min(other.y1) - self.y0.max(other.y0);
        if ox > 0.0 && oy > 0.0 {
            ox * oy
        } else {
            0.0
        }
    }

    pub fn scaled(&self, factor: f64) -> Rect {
        Rect::new(
            self.x0 * factor,
            self.y0 * factor,
            self.x1 * factor,
            self.y1 * factor,
        )
    }
}

/// `w(R)^δ · h(R)`, one rectangle's share of the weighted perimeter.
pub fn weighted_perim_term(r: &Rect, delta: f64) -> f64 {
    r.width().powf(delta) * r.height()
}

/// `Σ 2(w + h)` over a collection.
pub fn unweighted_perim<'a, I>(rects: I) -> f64
where
    I: IntoIterator<Item = &'a Rect>,
{
    rects
        .into_iter()
        .map(|r| 2.0 * (r.width() + r.height()))
        .sum::<NeumaierSum>()
        .value()
}

/// Square `n` of sidelength `n^{-t}` with its lower-left corner.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlacedSquare {
    pub n: u64,
    pub side: f64,
    pub x: f64,
    pub y: f64,
}

impl PlacedSquare {
    pub fn rect(&self) -> Rect {
        Rect::new(self.x, self.y, self.x + self.side, self.y + self.side)
    }

    pub fn area(&self) -> f64 {
        self.side * self.side
    }
}

/// Coordinate frame used to run portrait-only constructions on landscape
/// rectangles.
///
/// `Transposed` swaps the axes, a reflection across the line `y = x`. Unlike
/// a reflection anchored at an arbitrary corner it involves no arithmetic,
/// so mapping back and forth is exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Frame {
    Identity,
    Transposed,
}

impl Frame {
    /// Frame in which `r` is portrait.
    pub fn portrait_for(r: &Rect) -> Frame {
        if r.is_portrait() {
            Frame::Identity
        } else {
            Frame::Transposed
        }
    }

    pub fn point(&self, x: f64, y: f64) -> (f64, f64) {
        match self {
            Frame::Identity => (x, y),
            Frame::Transposed => (y, x),
        }
    }

    pub fn rect(&self, r: &Rect) -> Rect {
        match self {
            Frame::Identity => *r,
            Frame::Transposed => Rect::new(r.y0, r.x0, r.y1, r.x1),
        }
    }

    pub fn square(&self, sq: &PlacedSquare) -> PlacedSquare {
        let (x, y) = self.point(sq.x, sq.y);
        PlacedSquare { x, y, ..*sq }
    }
}

/// Reflect `r` into the swapped-axes frame, returning the frame that maps
/// contents back. Applying the frame twice is the identity.
pub fn transpose_frame(r: &Rect) -> (Rect, Frame) {
    (Frame::Transposed.rect(r), Frame::Transposed)
}

/// Where a residual rectangle came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResidualTag {
    /// The starting square.
    Initial,
    /// What is left of a split rectangle after carving off the strip column.
    Remainder,
    /// A strip that was carved but not block-packed before the run stopped.
    Strip,
    Surround,
    Left,
    Top,
    Corner,
    /// A rectangle of unspecified origin (external certificates).
    Other,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Residual {
    pub rect: Rect,
    pub tag: ResidualTag,
}

pub type ResidualId = usize;

/// Ordering key for "widest first, then smallest (y0, x0)".
#[derive(Debug, Clone, Copy)]
struct WidthKey {
    width: f64,
    y0: f64,
    x0: f64,
    id: ResidualId,
}

impl WidthKey {
    fn of(id: ResidualId, r: &Rect) -> Self {
        Self {
            width: r.width(),
            y0: r.y0,
            x0: r.x0,
            id,
        }
    }
}

impl Ord for WidthKey {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .width
            .total_cmp(&self.width)
            .then(self.y0.total_cmp(&other.y0))
            .then(self.x0.total_cmp(&other.x0))
            .then(self.id.cmp(&other.id))
    }
}

impl PartialOrd for WidthKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for WidthKey {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for WidthKey {}

/// Index of a rectangle of maximal width; ties go to the smallest
/// `(y0, x0)`.
pub fn select_widest(rects: &[Rect]) -> Option<usize> {
    rects
        .iter()
        .enumerate()
        .map(|(i, r)| WidthKey::of(i, r))
        .min()
        .map(|k| k.id)
}

/// The residual family ℛ with cached total area and weighted perimeter.
#[derive(Debug, Clone)]
pub struct Family {
    delta: f64,
    slots: Vec<Option<Residual>>,
    by_width: BTreeSet<WidthKey>,
    area: NeumaierSum,
    wperim: NeumaierSum,
}

impl Family {
    pub fn new(delta: f64) -> Self {
        Self {
            delta,
            slots: Vec::new(),
            by_width: BTreeSet::new(),
            area: NeumaierSum::new(),
            wperim: NeumaierSum::new(),
        }
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn insert(&mut self, rect: Rect, tag: ResidualTag) -> ResidualId {
        debug_assert!(rect.is_valid(), "invalid rectangle {rect:?}");
        let id = self.slots.len();
        self.slots.push(Some(Residual { rect, tag }));
        self.by_width.insert(WidthKey::of(id, &rect));
        self.area += rect.area();
        self.wperim += weighted_perim_term(&rect, self.delta);
        id
    }

    pub fn remove(&mut self, id: ResidualId) -> Option<Residual> {
        let res = self.slots.get_mut(id)?.take()?;
        self.by_width.remove(&WidthKey::of(id, &res.rect));
        self.area -= res.rect.area();
        self.wperim -= weighted_perim_term(&res.rect, self.delta);
        Some(res)
    }

    pub fn get(&self, id: ResidualId) -> Option<&Residual> {
        self.slots.get(id)?.as_ref()
    }

    pub fn widest(&self) -> Option<(ResidualId, &Residual)> {
        let key = self.by_width.first()?;
        Some((key.id, self.slots[key.id].as_ref()?))
    }

    pub fn len(&self) -> usize {
        self.by_width.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_width.is_empty()
    }

    /// Live residuals in insertion order.
    pub fn iter(&self) -> impl Iterator<Item = &Residual> + '_ {
        self.slots.iter().flatten()
    }

    pub fn area(&self) -> f64 {
        self.area.value()
    }

    pub fn weighted_perimeter(&self) -> f64 {
        self.wperim.value()
    }

    pub fn recompute_area(&self) -> f64 {
        self.iter()
            .map(|r| r.rect.area())
            .sum::<NeumaierSum>()
            .value()
    }

    pub fn recompute_weighted_perimeter(&self) -> f64 {
        self.iter()
            .map(|r| weighted_perim_term(&r.rect, self.delta))
            .sum::<NeumaierSum>()
            .value()
    }

    pub fn max_height(&self) -> f64 {
        self.iter().map(|r| r.rect.height()).fold(0.0, f64::max)
    }

    pub fn max_width(&self) -> f64 {
        self.widest().map_or(0.0, |(_, r)| r.rect.width())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const UNIT: Rect = Rect::new(0.0, 0.0, 1.0, 1.0);

    #[test]
    fn width_and_height() {
        assert_eq!(UNIT.width(), 1.0);
        assert_eq!(UNIT.height(), 1.0);
        let tall = Rect::new(0.0, 0.0, 2.0, 3.0);
        let wide = Rect::new(0.0, 0.0, 3.0, 2.0);
        assert_eq!(tall.width(), 2.0);
        assert_eq!(wide.width(), 2.0);
        assert_eq!(tall.height(), 3.0);
        assert_eq!(wide.height(), 3.0);
    }

    #[test]
    fn weighted_terms() {
        assert_eq!(weighted_perim_term(&UNIT, 0.37), 1.0);
        let r = Rect::new(0.0, 0.0, 0.25, 0.5);
        assert!((weighted_perim_term(&r, 0.25) - 0.5 * 0.5f64.sqrt()).abs() < 1e-15);
        let narrower = Rect::new(0.0, 0.0, 0.2, 0.5);
        assert!(weighted_perim_term(&narrower, 0.25) < weighted_perim_term(&r, 0.25));
    }

    #[test]
    fn unweighted_perimeters() {
        assert_eq!(unweighted_perim([&UNIT]), 4.0);
        assert_eq!(unweighted_perim([&UNIT, &UNIT]), 8.0);
        assert_eq!(unweighted_perim([&Rect::new(0.0, 0.0, 2.0, 3.0)]), 10.0);
    }

    #[test]
    fn transpose_examples() {
        let (sq, frame) = transpose_frame(&UNIT);
        assert_eq!(sq, UNIT);
        assert_eq!(frame, Frame::Transposed);
        let (r, frame) = transpose_frame(&Rect::new(0.0, 0.0, 2.0, 3.0));
        assert_eq!(r, Rect::new(0.0, 0.0, 3.0, 2.0));
        assert_eq!(frame.point(0.5, 1.0), (1.0, 0.5));
    }

    #[test]
    fn overlap_of_touching_and_offset_squares() {
        let right = Rect::new(1.0, 0.0, 2.0, 1.0);
        assert_eq!(UNIT.overlap_area(&right), 0.0);
        let shifted = Rect::new(0.9, 0.0, 1.9, 1.0);
        assert!((UNIT.overlap_area(&shifted) - 0.1).abs() < 1e-15);
    }

    #[test]
    fn widest_tie_break() {
        let rects = [
            Rect::new(0.0, 0.0, 0.3, 1.0),
            Rect::new(1.0, 2.0, 1.5, 3.0),
            Rect::new(2.0, 1.0, 2.5, 3.0),
        ];
        assert_eq!(select_widest(&rects), Some(2));
        assert_eq!(select_widest(&rects[..1]), Some(0));
        assert_eq!(select_widest(&[]), None);
    }

    #[test]
    fn family_tracks_widest() {
        let mut fam = Family::new(0.25);
        let a = fam.insert(Rect::new(0.0, 0.0, 1.0, 2.0), ResidualTag::Other);
        let b = fam.insert(Rect::new(1.0, 0.0, 1.5, 2.0), ResidualTag::Other);
        assert_eq!(fam.widest().unwrap().0, a);
        fam.remove(a).unwrap();
        assert_eq!(fam.widest().unwrap().0, b);
        assert!(fam.remove(a).is_none());
        assert_eq!(fam.len(), 1);
        assert!((fam.area() - 1.0).abs() < 1e-15);
    }

    fn arb_rect() -> impl Strategy<Value = Rect> {
        (-10.0f64..10.0, -10.0f64..10.0, 1e-3f64..5.0, 1e-3f64..5.0)
            .prop_map(|(x, y, dx, dy)| Rect::from_origin(x, y, dx, dy))
    }

    proptest! {
        #[test]
        fn width_le_height(r in arb_rect()) {
            prop_assert!(r.width() <= r.height());
            prop_assert_eq!(r.width() * r.height(), r.dx() * r.dy());
        }

        #[test]
        fn weighted_term_at_most_half_perimeter(r in arb_rect(), delta in 0.01f64..0.99) {
            prop_assume!(r.width() <= 1.0);
            let half = unweighted_perim([&r]) / 2.0;
            prop_assert!(weighted_perim_term(&r, delta) <= half);
        }

        #[test]
        fn frame_is_involutive(x in -1e3f64..1e3, y in -1e3f64..1e3, r in arb_rect()) {
            let f = Frame::Transposed;
            let (a, b) = f.point(x, y);
            prop_assert_eq!(f.point(a, b), (x, y));
            prop_assert_eq!(f.rect(&f.rect(&r)), r);
            prop_assert!(Frame::portrait_for(&r).rect(&r).is_portrait());
        }

        #[test]
        fn widest_is_scale_invariant(rs in prop::collection::vec(arb_rect(), 1..30), lambda in 0.1f64..10.0) {
            let scaled: Vec<Rect> = rs.iter().map(|r| r.scaled(lambda)).collect();
            let i = select_widest(&rs).unwrap();
            let j = select_widest(&scaled).unwrap();
            let (a, b) = (rs[i].width() * lambda, scaled[j].width());
            prop_assert!((a - b).abs() <= 1e-12 * b);
        }

        #[test]
        fn family_caches_match_recomputation(
            rs in prop::collection::vec(arb_rect(), 1..60),
            removals in prop::collection::vec(any::<prop::sample::Index>(), 0..40),
        ) {
            let mut fam = Family::new(0.3);
            let ids: Vec<_> = rs.iter().map(|r| fam.insert(*r, ResidualTag::Other)).collect();
            for ix in removals {
                fam.remove(ids[ix.index(ids.len())]);
            }
            let area = fam.recompute_area();
            let wp = fam.recompute_weighted_perimeter();
            prop_assert!((fam.area() - area).abs() <= 1e-12 * area.max(1e-300) + 1e-13);
            prop_assert!((fam.weighted_perimeter() - wp).abs() <= 1e-12 * wp.max(1e-300) + 1e-13);
            let live: Vec<Rect> = fam.iter().map(|r| r.rect).collect();
            match fam.widest() {
                Some((_, w)) => prop_assert_eq!(Some(w.rect), select_widest(&live).map(|i| live[i])),
                None => prop_assert!(live.is_empty()),
            }
        }
    }
}
