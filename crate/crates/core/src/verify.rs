//! Independent checks on a packing.
//!
//! Nothing here trusts the producer: sides are recomputed from `(n, t)`,
//! areas are re-summed and overlaps are found geometrically.

use serde::{Deserialize, Serialize};

use crate::certificate::{Certificate, CertificateKind};
use crate::geometry::{weighted_perim_term, Rect};
use crate::series::{perimeter_budget, side, tail_sum};
use crate::sum::NeumaierSum;

/// Overlap area tolerated per pair, relative to `L²`.
pub const OVERLAP_SLACK: f64 = 1e-12;
/// Containment margin tolerated, relative to `L`.
pub const CONTAINMENT_TOL: f64 = 1e-12;
/// Tiling identity tolerance, relative to `area(outer)`.
pub const TILING_TOL: f64 = 1e-12;
pub const RESIDUAL_TAIL_TOL: f64 = 1e-8;
pub const SIDE_TOL: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Overlap {
    pub a: usize,
    pub b: usize,
    pub area: f64,
}

/// All pairs `a < b` whose interiors meet in more than `slack` area,
/// sorted by `(a, b)`.
///
/// Sweep over x with a segment tree over the compressed y endpoints.
/// Exact contact along an edge never produces a candidate.
pub fn overlaps(rects: &[Rect], slack: f64) -> Vec<Overlap> {
    let mut ys: Vec<f64> = rects.iter().flat_map(|r| [r.y0, r.y1]).collect();
    ys.sort_by(f64::total_cmp);
    ys.dedup();
    let slot = |y: f64| ys.partition_point(|&v| v < y);

    // (x, is_insert, id); removals sort before insertions at equal x.
    let mut events: Vec<(f64, bool, usize)> = Vec::with_capacity(2 * rects.len());
    for (id, r) in rects.iter().enumerate() {
        if r.x1 > r.x0 && r.y1 > r.y0 {
            events.push((r.x0, true, id));
            events.push((r.x1, false, id));
        }
    }
    events.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

    let cells = ys.len().saturating_sub(1).max(1);
    let mut tree = SegmentTree::new(cells);
    let mut stamp = vec![usize::MAX; rects.len()];
    let mut found = Vec::new();
    let mut hits = Vec::new();
    for (_, insert, id) in events {
        let r = &rects[id];
        let (lo, hi) = (slot(r.y0), slot(r.y1));
        if insert {
            hits.clear();
            tree.query(lo, hi, &mut hits);
            for &other in &hits {
                if stamp[other] == id {
                    continue;
                }
                stamp[other] = id;
                let area = r.overlap_area(&rects[other]);
                if area > slack {
                    found.push(Overlap {
                        a: other.min(id),
                        b: other.max(id),
                        area,
                    });
                }
            }
            tree.insert(lo, hi, id);
        } else {
            tree.remove(lo, hi, id);
        }
    }
    found.sort_by_key(|o| (o.a, o.b));
    found
}

/// Reference O(N²) version of [`overlaps`].
pub fn overlaps_bruteforce(rects: &[Rect], slack: f64) -> Vec<Overlap> {
    let mut found = Vec::new();
    for a in 0..rects.len() {
        for b in a + 1..rects.len() {
            let area = rects[a].overlap_area(&rects[b]);
            if area > slack {
                found.push(Overlap { a, b, area });
            }
        }
    }
    found
}

/// Segment tree over elementary y cells; ids live on canonical nodes.
struct SegmentTree {
    cells: usize,
    lists: Vec<Vec<usize>>,
    /// Number of stored ids in each subtree.
    load: Vec<usize>,
}

impl SegmentTree {
    fn new(cells: usize) -> Self {
        let size = 4 * cells;
        Self {
            cells,
            lists: vec![Vec::new(); size],
            load: vec![0; size],
        }
    }

    fn insert(&mut self, lo: usize, hi: usize, id: usize) {
        if lo < hi {
            self.update(1, 0, self.cells, lo, hi, id, true);
        }
    }

    fn remove(&mut self, lo: usize, hi: usize, id: usize) {
        if lo < hi {
            self.update(1, 0, self.cells, lo, hi, id, false);
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn update(
        &mut self,
        node: usize,
        l: usize,
        r: usize,
        lo: usize,
        hi: usize,
        id: usize,
        add: bool,
    ) {
        if hi <= l || r <= lo {
            return;
        }
        if lo <= l && r <= hi {
            let list = &mut self.lists[node];
            if add {
                list.push(id);
            } else if let Some(pos) = list.iter().position(|&v| v == id) {
                list.swap_remove(pos);
            }
        } else {
            let mid = (l + r) / 2;
            self.update(2 * node, l, mid, lo, hi, id, add);
            self.update(2 * node + 1, mid, r, lo, hi, id, add);
        }
        self.load[node] = self.lists[node].len()
            + if r - l > 1 {
                self.load[2 * node] + self.load[2 * node + 1]
            } else {
                0
            };
    }

    /// Every stored id whose cell range meets `[lo, hi)`; may repeat ids.
    fn query(&self, lo: usize, hi: usize, out: &mut Vec<usize>) {
        if lo < hi {
            self.visit(1, 0, self.cells, lo, hi, out);
        }
    }

    fn visit(&self, node: usize, l: usize, r: usize, lo: usize, hi: usize, out: &mut Vec<usize>) {
        if hi <= l || r <= lo || self.load[node] == 0 {
            return;
        }
        out.extend_from_slice(&self.lists[node]);
        if r - l > 1 {
            let mid = (l + r) / 2;
            if lo <= l && r <= hi {
                self.collect(2 * node, l, mid, out);
                self.collect(2 * node + 1, mid, r, out);
            } else {
                self.visit(2 * node, l, mid, lo, hi, out);
                self.visit(2 * node + 1, mid, r, lo, hi, out);
            }
        }
    }

    fn collect(&self, node: usize, l: usize, r: usize, out: &mut Vec<usize>) {
        if self.load[node] == 0 {
            return;
        }
        out.extend_from_slice(&self.lists[node]);
        if r - l > 1 {
            let mid = (l + r) / 2;
            self.collect(2 * node, l, mid, out);
            self.collect(2 * node + 1, mid, r, out);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ItemKind {
    Square,
    Residual,
}

/// Position of an item in a certificate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ItemRef {
    pub kind: ItemKind,
    pub index: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisjointnessCheck {
    pub pass: bool,
    pub violations: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub first: Option<(ItemRef, ItemRef, f64)>,
    pub max_overlap_area: f64,
    pub slack: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContainmentCheck {
    pub pass: bool,
    /// Smallest distance from an item to the outer boundary; negative when
    /// it protrudes.
    pub worst_margin: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub worst_item: Option<ItemRef>,
    pub tolerance: f64,
}

/// Worst margin of `items` inside `outer`, with the offending index.
pub fn containment_margin(items: &[Rect], outer: &Rect) -> Option<(usize, f64)> {
    items
        .iter()
        .enumerate()
        .map(|(k, r)| {
            let m = (r.x0 - outer.x0)
                .min(r.y0 - outer.y0)
                .min(outer.x1 - r.x1)
                .min(outer.y1 - r.y1);
            (k, m)
        })
        .min_by(|a, b| a.1.total_cmp(&b.1))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContiguityCheck {
    pub pass: bool,
    pub expected: u64,
    pub found: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub first_mismatch: Option<ItemRef>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SideCheck {
    pub pass: bool,
    pub worst_rel_err: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub worst_item: Option<ItemRef>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccountingCheck {
    pub squares_area: f64,
    pub residuals_area: f64,
    pub discarded_area: f64,
    pub outer_area: f64,
    /// `outer - squares - residuals - discarded`.
    pub tiling_gap: f64,
    pub tiling_rel_err: f64,
    pub tiling_pass: bool,
    /// Residual area against `Σ_{n≥n_hi} n^{-2t}`; run certificates only.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residual_vs_tail_rel_err: Option<f64>,
    pub residual_vs_tail_pass: bool,
    pub weighted_perimeter: f64,
    pub budget: f64,
    /// Informational; exceeding 1 is a finding, not a failure.
    pub wtr_ratio: f64,
    pub max_height: f64,
    pub height_bound: f64,
    pub height_pass: bool,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VerifyLevel {
    #[default]
    Fast,
    /// Also runs the O(N²) pair check and compares.
    FullBruteforce,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub level: VerifyLevel,
    pub well_formed: bool,
    pub disjointness: DisjointnessCheck,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bruteforce_agrees: Option<bool>,
    pub containment: ContainmentCheck,
    pub accounting: AccountingCheck,
    pub index_contiguity: ContiguityCheck,
    pub sides: SideCheck,
}

impl VerificationReport {
    pub fn pass(&self) -> bool {
        self.well_formed
            && self.disjointness.pass
            && self.bruteforce_agrees != Some(false)
            && self.containment.pass
            && self.accounting.tiling_pass
            && self.accounting.residual_vs_tail_pass
            && self.accounting.height_pass
            && self.index_contiguity.pass
            && self.sides.pass
    }

    /// Names of the failing checks.
    pub fn failures(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        let checks = [
            (self.well_formed, "well_formed"),
            (self.disjointness.pass, "disjointness"),
            (
                self.bruteforce_agrees != Some(false),
                "bruteforce_agreement",
            ),
            (self.containment.pass, "containment"),
            (self.accounting.tiling_pass, "tiling_identity"),
            (self.accounting.residual_vs_tail_pass, "residual_vs_tail"),
            (self.accounting.height_pass, "height_bound"),
            (self.index_contiguity.pass, "index_contiguity"),
            (self.sides.pass, "sides"),
        ];
        for (ok, name) in checks {
            if !ok {
                out.push(name);
            }
        }
        out
    }
}

fn item_ref(cert: &Certificate, k: usize) -> ItemRef {
    let ns = cert.squares.len();
    if k < ns {
        ItemRef {
            kind: ItemKind::Square,
            index: k,
            n: Some(cert.squares[k].n),
        }
    } else {
        ItemRef {
            kind: ItemKind::Residual,
            index: k - ns,
            n: None,
        }
    }
}

fn well_formed(cert: &Certificate) -> bool {
    let rect_ok = |r: &Rect| {
        [r.x0, r.y0, r.x1, r.y1].iter().all(|v| v.is_finite()) && r.x0 <= r.x1 && r.y0 <= r.y1
    };
    rect_ok(&cert.outer)
        && cert.discarded_area.is_finite()
        && cert.n_range.0 <= cert.n_range.1
        && cert
            .squares
            .iter()
            .all(|s| s.n >= 1 && s.side.is_finite() && s.side > 0.0 && rect_ok(&s.rect()))
        && cert.residual_rects().all(|r| rect_ok(&r))
}

/// Scale `L` of a certificate: the longer side of the outer rectangle.
pub fn scale(cert: &Certificate) -> f64 {
    cert.outer.dx().max(cert.outer.dy())
}

pub fn check_disjoint(cert: &Certificate, rects: &[Rect]) -> DisjointnessCheck {
    let l = scale(cert);
    let slack = OVERLAP_SLACK * l * l;
    let found = overlaps(rects, slack);
    disjointness_from(cert, &found, slack)
}

fn disjointness_from(cert: &Certificate, found: &[Overlap], slack: f64) -> DisjointnessCheck {
    DisjointnessCheck {
        pass: found.is_empty(),
        violations: found.len(),
        first: found
            .first()
            .map(|o| (item_ref(cert, o.a), item_ref(cert, o.b), o.area)),
        max_overlap_area: found.iter().map(|o| o.area).fold(0.0, f64::max),
        slack,
    }
}

pub fn check_containment(cert: &Certificate, rects: &[Rect]) -> ContainmentCheck {
    let tolerance = -CONTAINMENT_TOL * scale(cert);
    match containment_margin(rects, &cert.outer) {
        Some((k, m)) => ContainmentCheck {
            pass: m >= tolerance,
            worst_margin: m,
            worst_item: Some(item_ref(cert, k)),
            tolerance,
        },
        None => ContainmentCheck {
            pass: true,
            worst_margin: 0.0,
            worst_item: None,
            tolerance,
        },
    }
}

pub fn check_contiguity(cert: &Certificate) -> ContiguityCheck {
    let (lo, hi) = cert.n_range;
    let mut ns: Vec<(u64, usize)> = cert
        .squares
        .iter()
        .enumerate()
        .map(|(k, s)| (s.n, k))
        .collect();
    ns.sort_unstable();
    let first_mismatch = ns
        .iter()
        .zip(lo..)
        .find(|((n, _), want)| n != want)
        .map(|((_, k), _)| *k)
        .or_else(|| (ns.len() as u64 > hi - lo).then(|| ns[(hi - lo) as usize].1));
    ContiguityCheck {
        pass: ns.len() as u64 == hi - lo && first_mismatch.is_none(),
        expected: hi - lo,
        found: ns.len(),
        first_mismatch: first_mismatch.map(|k| item_ref(cert, k)),
    }
}

pub fn check_sides(cert: &Certificate) -> SideCheck {
    let t = cert.params.t();
    let worst = cert
        .squares
        .iter()
        .enumerate()
        .map(|(k, s)| {
            let exact = side(s.n, t);
            (k, ((s.side - exact) / exact).abs())
        })
        .max_by(|a, b| a.1.total_cmp(&b.1));
    match worst {
        Some((k, err)) => SideCheck {
            pass: err <= SIDE_TOL,
            worst_rel_err: err,
            worst_item: Some(item_ref(cert, k)),
        },
        None => SideCheck {
            pass: true,
            worst_rel_err: 0.0,
            worst_item: None,
        },
    }
}

pub fn check_accounting(cert: &Certificate) -> AccountingCheck {
    let t = cert.params.t();
    let delta = cert.params.delta();
    let squares_area = cert
        .squares
        .iter()
        .map(|s| s.side * s.side)
        .sum::<NeumaierSum>()
        .value();
    let residuals_area = cert
        .residual_rects()
        .map(|r| r.area())
        .sum::<NeumaierSum>()
        .value();
    let outer_area = cert.outer.area();
    let tiling_gap = [
        outer_area,
        -squares_area,
        -residuals_area,
        -cert.discarded_area,
    ]
    .into_iter()
    .sum::<NeumaierSum>()
    .value();
    let tiling_rel_err = (tiling_gap / outer_area).abs();

    let n_hi = cert.n_range.1.max(1);
    let residual_vs_tail_rel_err = (cert.kind == CertificateKind::Run).then(|| {
        let tail = tail_sum(2.0 * t, n_hi).map(|v| v.value).unwrap_or(f64::NAN);
        ((residuals_area - tail) / tail).abs()
    });
    let weighted_perimeter = cert
        .residual_rects()
        .map(|r| weighted_perim_term(&r, delta))
        .sum::<NeumaierSum>()
        .value();
    let budget = perimeter_budget(t, cert.params.m(), n_hi);
    let max_height = cert
        .residual_rects()
        .map(|r| r.height())
        .fold(0.0, f64::max);
    let height_bound = cert.outer.height();
    AccountingCheck {
        squares_area,
        residuals_area,
        discarded_area: cert.discarded_area,
        outer_area,
        tiling_gap,
        tiling_rel_err,
        tiling_pass: tiling_rel_err <= TILING_TOL,
        residual_vs_tail_rel_err,
        residual_vs_tail_pass: residual_vs_tail_rel_err.is_none_or(|e| e <= RESIDUAL_TAIL_TOL),
        weighted_perimeter,
        budget,
        wtr_ratio: weighted_perimeter / budget,
        max_height,
        height_bound,
        height_pass: max_height <= height_bound * (1.0 + CONTAINMENT_TOL),
    }
}

/// Footprints of all squares followed by all residuals.
pub fn footprints(cert: &Certificate) -> Vec<Rect> {
    cert.squares
        .iter()
        .map(|s| s.rect())
        .chain(cert.residual_rects())
        .collect()
}

pub fn verify(cert: &Certificate, level: VerifyLevel) -> VerificationReport {
    let rects = footprints(cert);
    let disjointness = check_disjoint(cert, &rects);
    let bruteforce_agrees = (level == VerifyLevel::FullBruteforce).then(|| {
        let brute = overlaps_bruteforce(&rects, disjointness.slack);
        disjointness_from(cert, &brute, disjointness.slack) == disjointness
    });
    VerificationReport {
        level,
        well_formed: well_formed(cert),
        disjointness,
        bruteforce_agrees,
        containment: check_containment(cert, &rects),
        accounting: check_accounting(cert),
        index_contiguity: check_contiguity(cert),
        sides: check_sides(cert),
    }
}
