//! The packing loop.
//!
//! Starting from a single square of area `Σ_{n≥n0} n^{-2t}`, every step
//!
//! 1. takes a residual rectangle `R` of maximal width,
//! 2. carves a column of width `M n^{-t}` off `R` (requires
//!    `w(R) ≥ 2M n^{-t}`, otherwise the run terminates with an error) and
//!    cuts it into strips of height in `[M n^{-t}, 2M n^{-t})`,
//! 3. packs every strip as a near-lattice block, advancing the running index,
//! 4. replaces `R` by the uncut remainder and the gaps of all blocks.
//!
//! The residual family always has area `Σ_{n≥n_current} n^{-2t}`; the
//! weighted perimeter is tracked against its budget at every step and a
//! violation is recorded, not fatal.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::block::{pack_spec, BlockError, BlockSpec, DEGENERATE_EXTENT};
use crate::geometry::{weighted_perim_term, Family, Frame, PlacedSquare, Rect, ResidualTag};
use crate::series::{side, tail_sum, Params};
use crate::sum::NeumaierSum;

/// Relative slack on the split threshold and strip cutting.
const SPLIT_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EngineError {
    /// No residual rectangle is wide enough to carve a strip column from.
    #[error("widest residual has width {width} < 2M n^-t = {threshold} at n = {n_current}")]
    WidthTooSmall {
        width: f64,
        threshold: f64,
        n_current: u64,
    },
    /// A strip failed the block precondition for its running index.
    #[error("strip {strip} at n = {n_current}: {source}")]
    Block {
        strip: usize,
        n_current: u64,
        source: BlockError,
    },
    #[error("residual family is empty")]
    EmptyFamily,
}

/// Result of carving a rectangle.
#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    /// `R0`, of dimensions `(w(R) - M n^{-t}) × h(R)`.
    pub remainder: Option<Rect>,
    /// Strips of dimensions `M n^{-t} × h_i`, stacked from the corner
    /// nearest the origin.
    pub strips: Vec<Rect>,
    /// `m ≤ n^t`; holds whenever `h(R) ≤ 1`.
    pub crude_bound_holds: bool,
}

/// Carve the strip column off `r` at running index `n_current`.
pub fn split(r: &Rect, n_current: u64, params: &Params) -> Result<Split, EngineError> {
    let unit = side(n_current, params.t());
    let strip_w = params.m() as f64 * unit;
    let threshold = 2.0 * strip_w;
    if r.width() < threshold * (1.0 - SPLIT_SLACK) {
        return Err(EngineError::WidthTooSmall {
            width: r.width(),
            threshold,
            n_current,
        });
    }
    let frame = Frame::portrait_for(r);
    let local = frame.rect(r);
    let cut = local.x0 + strip_w;
    let remainder = (local.x1 - cut >= DEGENERATE_EXTENT * unit)
        .then(|| frame.rect(&Rect::new(cut, local.y0, local.x1, local.y1)));
    let x1 = if remainder.is_some() { cut } else { local.x1 };

    let mut strips = Vec::new();
    let mut bottom = local.y0;
    let mut k = 0u32;
    while local.y1 - bottom >= threshold * (1.0 - SPLIT_SLACK) {
        k += 1;
        let top = local.y0 + f64::from(k) * strip_w;
        strips.push(frame.rect(&Rect::new(local.x0, bottom, x1, top)));
        bottom = top;
    }
    strips.push(frame.rect(&Rect::new(local.x0, bottom, x1, local.y1)));
    let crude_bound_holds = strips.len() as f64 <= (n_current as f64).powf(params.t());
    Ok(Split {
        remainder,
        strips,
        crude_bound_holds,
    })
}

/// When a run stops short of an error.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Limits {
    /// Stop once at least this many squares are placed.
    pub budget: Option<u64>,
    /// Never place index `n_max` or beyond.
    pub n_max: Option<u64>,
    pub max_steps: Option<usize>,
}

impl Limits {
    pub fn budget(squares: u64) -> Self {
        Self {
            budget: Some(squares),
            ..Self::default()
        }
    }
}

/// Bookkeeping for one step (step 0 describes the initial state).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub n_start: u64,
    pub n_end: u64,
    pub strips: usize,
    pub blocks: usize,
    /// Smallest and largest `M1·M2` among the blocks of the step.
    pub min_jump: u64,
    pub max_jump: u64,
    /// `n_end / n_start`.
    pub jump_ratio: f64,
    pub selected_width: f64,
    pub family_len: usize,
    pub area: f64,
    pub tail: f64,
    pub area_rel_err: f64,
    /// `area(placed) + area(family)` against the starting tail.
    pub conservation_rel_err: f64,
    pub wperim: f64,
    pub budget: f64,
    pub budget_ratio: f64,
    pub wperim_removed: f64,
    pub wperim_remainder: f64,
    pub wperim_gaps: f64,
    pub wperim_returned: f64,
    /// `-removed + remainder + gaps + returned`.
    pub wperim_delta: f64,
    /// Mismatch between the previous direct sum plus `wperim_delta` and a
    /// fresh direct sum over the new family.
    pub decomposition_rel_err: f64,
    pub max_height: f64,
    pub crude_bound_holds: bool,
    /// Every rectangle added this step is at most as wide as the one removed.
    pub no_width_inflation: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepOutcome {
    Progressed,
    BudgetReached,
    IndexCapReached,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum Termination {
    BudgetReached,
    IndexCapReached,
    StepLimit,
    Failed { error: EngineError },
}

impl Termination {
    pub fn is_failure(&self) -> bool {
        matches!(self, Termination::Failed { .. })
    }

    pub fn label(&self) -> &'static str {
        match self {
            Termination::BudgetReached => "budget_reached",
            Termination::IndexCapReached => "index_cap_reached",
            Termination::StepLimit => "step_limit",
            Termination::Failed {
                error: EngineError::WidthTooSmall { .. },
            } => "width_too_small",
            Termination::Failed {
                error: EngineError::Block { .. },
            } => "block_precondition",
            Termination::Failed {
                error: EngineError::EmptyFamily,
            } => "empty_family",
        }
    }
}

/// The packing in progress.
#[derive(Debug, Clone)]
pub struct PackingState {
    params: Params,
    outer: Rect,
    n_current: u64,
    family: Family,
    placed: Vec<PlacedSquare>,
    placed_area: NeumaierSum,
    ledger: Vec<StepRecord>,
    discarded_area: f64,
    initial_tail: f64,
    last_wperim_direct: f64,
}

impl PackingState {
    /// A single square of area `Σ_{n≥n0} n^{-2t}` at the origin.
    pub fn init(params: Params) -> Self {
        let n0 = params.n0();
        let tail = tail_sum(2.0 * params.t(), n0)
            .expect("2t > 1 for valid params")
            .value;
        let s = tail.sqrt();
        let outer = Rect::new(0.0, 0.0, s, s);
        let mut family = Family::new(params.delta());
        family.insert(outer, ResidualTag::Initial);
        let wperim = family.recompute_weighted_perimeter();
        let budget = params.perimeter_budget(n0);
        let area = family.area();
        let record = StepRecord {
            step: 0,
            n_start: n0,
            n_end: n0,
            strips: 0,
            blocks: 0,
            min_jump: 0,
            max_jump: 0,
            jump_ratio: 1.0,
            selected_width: 0.0,
            family_len: 1,
            area,
            tail,
            area_rel_err: ((area - tail) / tail).abs(),
            conservation_rel_err: ((area - tail) / tail).abs(),
            wperim,
            budget,
            budget_ratio: wperim / budget,
            wperim_removed: 0.0,
            wperim_remainder: 0.0,
            wperim_gaps: 0.0,
            wperim_returned: 0.0,
            wperim_delta: 0.0,
            decomposition_rel_err: 0.0,
            max_height: s,
            crude_bound_holds: true,
            no_width_inflation: true,
        };
        Self {
            params,
            outer,
            n_current: n0,
            family,
            placed: Vec::new(),
            placed_area: NeumaierSum::new(),
            ledger: vec![record],
            discarded_area: 0.0,
            initial_tail: tail,
            last_wperim_direct: wperim,
        }
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    pub fn outer(&self) -> Rect {
        self.outer
    }

    /// Next index to be placed.
    pub fn n_current(&self) -> u64 {
        self.n_current
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn placed(&self) -> &[PlacedSquare] {
        &self.placed
    }

    pub fn ledger(&self) -> &[StepRecord] {
        &self.ledger
    }

    pub fn discarded_area(&self) -> f64 {
        self.discarded_area
    }

    pub fn placed_area(&self) -> f64 {
        self.placed_area.value()
    }

    /// Side of the starting square, the height bound for every residual.
    pub fn initial_height(&self) -> f64 {
        self.outer.height()
    }

    /// Placed indices are exactly `n0, n0+1, …, n_current-1` in order.
    pub fn indices_contiguous(&self) -> bool {
        self.placed.len() as u64 == self.n_current - self.params.n0()
            && self
                .placed
                .iter()
                .zip(self.params.n0()..)
                .all(|(sq, n)| sq.n == n)
    }

    fn limit_before_block(&self, limits: &Limits, spec: &BlockSpec) -> Option<StepOutcome> {
        if let Some(budget) = limits.budget {
            if self.placed.len() as u64 >= budget {
                return Some(StepOutcome::BudgetReached);
            }
        }
        if let Some(cap) = limits.n_max.or(self.params.n_max()) {
            if spec.n0_next() > cap {
                return Some(StepOutcome::IndexCapReached);
            }
        }
        None
    }

    fn limit_before_step(&self, limits: &Limits) -> Option<StepOutcome> {
        if let Some(budget) = limits.budget {
            if self.placed.len() as u64 >= budget {
                return Some(StepOutcome::BudgetReached);
            }
        }
        if let Some(cap) = limits.n_max.or(self.params.n_max()) {
            if self.n_current >= cap {
                return Some(StepOutcome::IndexCapReached);
            }
        }
        None
    }

    /// One pass of select / split / pack / replace.
    ///
    /// On a block failure the strips not yet packed are returned to the
    /// family, so the state stays a valid packing, and the step is still
    /// recorded in the ledger.
    pub fn step(&mut self, limits: &Limits) -> Result<StepOutcome, EngineError> {
        if let Some(stop) = self.limit_before_step(limits) {
            return Ok(stop);
        }
        let (id, selected) = match self.family.widest() {
            Some((id, res)) => (id, res.rect),
            None => return Err(EngineError::EmptyFamily),
        };
        let n_start = self.n_current;
        let split = split(&selected, n_start, &self.params)?;

        let delta = self.params.delta();
        let width = selected.width();
        let mut inflation = false;
        let mut track = |r: &Rect| inflation |= r.width() > width;

        self.family.remove(id);
        let wperim_removed = weighted_perim_term(&selected, delta);
        let mut wperim_remainder = 0.0;
        if let Some(r0) = split.remainder {
            track(&r0);
            self.family.insert(r0, ResidualTag::Remainder);
            wperim_remainder = weighted_perim_term(&r0, delta);
        }

        let mut gaps_wp = NeumaierSum::new();
        let mut returned_wp = NeumaierSum::new();
        let mut outcome = StepOutcome::Progressed;
        let mut failure = None;
        let (mut blocks, mut min_jump, mut max_jump) = (0usize, u64::MAX, 0u64);

        for (k, strip) in split.strips.iter().enumerate() {
            let packed =
                BlockSpec::from_params(*strip, self.n_current, &self.params).and_then(|spec| {
                    match self.limit_before_block(limits, &spec) {
                        Some(stop) => Ok(Err(stop)),
                        None => pack_spec(&spec).map(Ok),
                    }
                });
            let result = match packed {
                Ok(Ok(result)) => result,
                Ok(Err(stop)) => {
                    outcome = stop;
                    self.return_strips(&split.strips[k..], &mut returned_wp);
                    break;
                }
                Err(source) => {
                    failure = Some(EngineError::Block {
                        strip: k,
                        n_current: self.n_current,
                        source,
                    });
                    self.return_strips(&split.strips[k..], &mut returned_wp);
                    break;
                }
            };
            let jump = result.n0_next - self.n_current;
            min_jump = min_jump.min(jump);
            max_jump = max_jump.max(jump);
            blocks += 1;
            for sq in &result.squares {
                self.placed_area += sq.area();
            }
            self.placed.extend_from_slice(&result.squares);
            for gap in &result.gaps {
                track(&gap.rect);
                self.family.insert(gap.rect, gap.kind.into());
                gaps_wp += weighted_perim_term(&gap.rect, delta);
            }
            self.discarded_area += result.discarded_area;
            self.n_current = result.n0_next;
        }

        let wperim_gaps = gaps_wp.value();
        let wperim_returned = returned_wp.value();
        let wperim_delta = [
            -wperim_removed,
            wperim_remainder,
            wperim_gaps,
            wperim_returned,
        ]
        .into_iter()
        .sum::<NeumaierSum>()
        .value();
        let direct = self.family.recompute_weighted_perimeter();
        let decomposition_rel_err =
            ((self.last_wperim_direct + wperim_delta - direct) / direct).abs();
        self.last_wperim_direct = direct;

        let area = self.family.area();
        let tail = tail_sum(2.0 * self.params.t(), self.n_current)
            .expect("2t > 1")
            .value;
        let total = self.placed_area.value() + area + self.discarded_area;
        let budget = self.params.perimeter_budget(self.n_current);
        let wperim = self.family.weighted_perimeter();
        self.ledger.push(StepRecord {
            step: self.ledger.len(),
            n_start,
            n_end: self.n_current,
            strips: split.strips.len(),
            blocks,
            min_jump: if blocks == 0 { 0 } else { min_jump },
            max_jump,
            jump_ratio: self.n_current as f64 / n_start as f64,
            selected_width: width,
            family_len: self.family.len(),
            area,
            tail,
            area_rel_err: ((area - tail) / tail).abs(),
            conservation_rel_err: ((total - self.initial_tail) / self.initial_tail).abs(),
            wperim,
            budget,
            budget_ratio: wperim / budget,
            wperim_removed,
            wperim_remainder,
            wperim_gaps,
            wperim_returned,
            wperim_delta,
            decomposition_rel_err,
            max_height: self.family.max_height(),
            crude_bound_holds: split.crude_bound_holds,
            no_width_inflation: !inflation,
        });

        match failure {
            Some(err) => Err(err),
            None => Ok(outcome),
        }
    }

    fn return_strips(&mut self, strips: &[Rect], wp: &mut NeumaierSum) {
        for s in strips {
            self.family.insert(*s, ResidualTag::Strip);
            *wp += weighted_perim_term(s, self.params.delta());
        }
    }

    /// Step until a limit is hit or the algorithm terminates with an error.
    /// With no limits at all the loop only ends on an error.
    pub fn run(&mut self, limits: &Limits) -> RunReport {
        let mut steps = 0usize;
        let termination = loop {
            if limits.max_steps.is_some_and(|cap| steps >= cap) {
                break Termination::StepLimit;
            }
            match self.step(limits) {
                Ok(StepOutcome::Progressed) => steps += 1,
                Ok(StepOutcome::BudgetReached) => break Termination::BudgetReached,
                Ok(StepOutcome::IndexCapReached) => break Termination::IndexCapReached,
                Err(error) => break Termination::Failed { error },
            }
        };
        self.report(termination)
    }

    pub fn report(&self, termination: Termination) -> RunReport {
        let tail = tail_sum(2.0 * self.params.t(), self.n_current).expect("2t > 1");
        let residual_area = self.family.area();
        let ledger = &self.ledger;
        let max_of = |f: fn(&StepRecord) -> f64| ledger.iter().map(f).fold(0.0, f64::max);
        let height_non_increasing = ledger
            .windows(2)
            .all(|w| w[1].max_height <= w[0].max_height);
        RunReport {
            params: self.params,
            status: if termination.is_failure() {
                RunStatus::TerminatedWithError
            } else {
                RunStatus::Complete
            },
            termination,
            steps: ledger.len() - 1,
            squares_placed: self.placed.len() as u64,
            n_start: self.params.n0(),
            n_final: self.n_current,
            residual_area,
            tail,
            residual_rel_err: ((residual_area - tail.value) / tail.value).abs(),
            max_area_rel_err: max_of(|r| r.area_rel_err),
            max_conservation_rel_err: max_of(|r| r.conservation_rel_err),
            max_decomposition_rel_err: max_of(|r| r.decomposition_rel_err),
            initial_height: self.initial_height(),
            max_family_height: self.family.max_height(),
            height_non_increasing,
            indices_contiguous: self.indices_contiguous(),
            max_budget_ratio: max_of(|r| r.budget_ratio),
            first_budget_violation: ledger.iter().find(|r| r.budget_ratio > 1.0).map(|r| r.step),
            max_jump_ratio: max_of(|r| r.jump_ratio),
            discarded_area: self.discarded_area,
            trajectory: ledger
                .iter()
                .map(|r| TrajectoryPoint {
                    n: r.n_end,
                    wperim: r.wperim,
                    budget: r.budget,
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunStatus {
    Complete,
    /// The algorithm's own failure branch fired; a valid outcome.
    TerminatedWithError,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub n: u64,
    pub wperim: f64,
    pub budget: f64,
}

/// Summary of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub params: Params,
    pub status: RunStatus,
    pub termination: Termination,
    pub steps: usize,
    pub squares_placed: u64,
    pub n_start: u64,
    pub n_final: u64,
    pub residual_area: f64,
    pub tail: crate::series::SeriesValue,
    pub residual_rel_err: f64,
    pub max_area_rel_err: f64,
    pub max_conservation_rel_err: f64,
    pub max_decomposition_rel_err: f64,
    pub initial_height: f64,
    pub max_family_height: f64,
    pub height_non_increasing: bool,
    pub indices_contiguous: bool,
    pub max_budget_ratio: f64,
    pub first_budget_violation: Option<usize>,
    pub max_jump_ratio: f64,
    pub discarded_area: f64,
    pub trajectory: Vec<TrajectoryPoint>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(t: f64, m: u64, n0: u64) -> Params {
        Params::new(t, m, n0).unwrap()
    }

    fn strip_heights(split: &Split, unit: f64) -> Vec<f64> {
        split.strips.iter().map(|s| s.height() / unit).collect()
    }

    #[test]
    fn split_exact_multiples() {
        let p = params(0.75, 4, 1000);
        let n = 5000;
        let ms = 4.0 * side(n, 0.75);
        let r = Rect::new(0.0, 0.0, 2.5 * ms, 5.0 * ms);
        let split = split(&r, n, &p).unwrap();
        let hs = strip_heights(&split, ms);
        assert_eq!(hs.len(), 5);
        assert!(hs.iter().all(|h| (h - 1.0).abs() < 1e-12));
        let r0 = split.remainder.unwrap();
        assert!((r0.dx() - 1.5 * ms).abs() < 1e-12 * ms);
        assert_eq!(r0.dy(), r.dy());
        assert!(split.crude_bound_holds);
    }

    #[test]
    fn split_fractional_height() {
        let p = params(0.75, 4, 1000);
        let n = 5000;
        let ms = 4.0 * side(n, 0.75);
        let r = Rect::new(0.0, 0.0, 2.0 * ms, 4.5 * ms);
        let hs = strip_heights(&split(&r, n, &p).unwrap(), ms);
        assert_eq!(hs.len(), 4);
        assert!((hs[3] - 1.5).abs() < 1e-12);
        let total: f64 = split(&r, n, &p)
            .unwrap()
            .strips
            .iter()
            .map(|s| s.dy())
            .sum();
        assert!((total - r.dy()).abs() < 1e-15);
    }

    #[test]
    fn split_at_threshold_height() {
        let p = params(0.75, 4, 1000);
        let n = 5000;
        let ms = 4.0 * side(n, 0.75);
        let r = Rect::new(0.0, 0.0, 2.0 * ms, 2.0 * ms);
        let hs = strip_heights(&split(&r, n, &p).unwrap(), ms);
        assert_eq!(hs.len(), 2);
        assert!(hs.iter().all(|h| (h - 1.0).abs() < 1e-12));
    }

    #[test]
    fn split_landscape_carves_along_x() {
        let p = params(0.75, 4, 1000);
        let n = 5000;
        let ms = 4.0 * side(n, 0.75);
        let r = Rect::new(0.0, 0.0, 3.0 * ms, 2.5 * ms);
        let split = split(&r, n, &p).unwrap();
        for s in &split.strips {
            assert_eq!(s.y0, 0.0);
            assert!((s.dy() - ms).abs() < 1e-12 * ms);
        }
        assert_eq!(split.strips.last().unwrap().x1, r.x1);
        assert_eq!(split.remainder.unwrap().y1, r.y1);
    }

    #[test]
    fn split_rejects_narrow() {
        let p = params(0.75, 4, 1000);
        let n = 5000;
        let ms = 4.0 * side(n, 0.75);
        let r = Rect::new(0.0, 0.0, 1.9 * ms, 5.0 * ms);
        match split(&r, n, &p) {
            Err(EngineError::WidthTooSmall {
                width,
                threshold,
                n_current,
            }) => {
                assert_eq!(n_current, n);
                assert!((threshold - 2.0 * ms).abs() < 1e-15);
                assert!(width < threshold);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn init_state() {
        let p = params(0.75, 8, 2);
        let st = PackingState::init(p);
        let expected = tail_sum(1.5, 2).unwrap().value;
        assert!((st.outer().area() - expected).abs() < 1e-15 * expected);
        let rec = &st.ledger()[0];
        let s = st.outer().dx();
        assert!((rec.wperim - s.powf(1.25)).abs() < 1e-14);
        assert_eq!(st.placed().len(), 0);
        assert!(st.indices_contiguous());
    }

    #[test]
    fn zero_budget_leaves_initial_state() {
        let p = params(0.75, 8, 100_000);
        let mut st = PackingState::init(p);
        let report = st.run(&Limits::budget(0));
        assert_eq!(report.termination, Termination::BudgetReached);
        assert_eq!(report.squares_placed, 0);
        assert_eq!(report.steps, 0);
        assert_eq!(st.family().len(), 1);
    }

    #[test]
    fn infeasible_parameters_fail_cleanly() {
        let p = params(0.75, 4, 10);
        let mut st = PackingState::init(p);
        let report = st.run(&Limits::budget(1000));
        assert_eq!(report.status, RunStatus::TerminatedWithError);
        match report.termination {
            Termination::Failed {
                error:
                    EngineError::WidthTooSmall {
                        width,
                        threshold,
                        n_current,
                    },
            } => {
                assert_eq!(n_current, 10);
                assert!(width < threshold);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn one_step_bookkeeping() {
        let p = params(0.75, 8, 100_000);
        let mut st = PackingState::init(p);
        let before = st.family().area();
        let outcome = st.step(&Limits::default()).unwrap();
        assert_eq!(outcome, StepOutcome::Progressed);
        let rec = st.ledger()[1].clone();
        let m = p.m();
        let count = st.placed().len() as u64;
        assert!(count >= rec.strips as u64 * m * m && count <= 9 * rec.strips as u64 * m * m);
        assert!(rec.min_jump >= m * m && rec.max_jump <= 9 * m * m);
        let removed = crate::series::partial_sum(1.5, rec.n_start, rec.n_end - 1);
        let after = st.family().area();
        assert!(((before - removed - after) / after).abs() < 1e-10);
        assert!(rec.area_rel_err < 1e-8);
        assert!(rec.decomposition_rel_err < 1e-12);
        assert!(rec.no_width_inflation);
        assert!(st.indices_contiguous());
    }

    #[test]
    fn budget_stops_between_blocks() {
        let p = params(0.75, 8, 100_000);
        let mut st = PackingState::init(p);
        let report = st.run(&Limits::budget(500));
        assert_eq!(report.termination, Termination::BudgetReached);
        assert!(report.squares_placed >= 500 && report.squares_placed < 500 + 9 * 64);
        assert!(report.residual_rel_err < 1e-8);
        assert!(report.indices_contiguous);
        let strips = st
            .family()
            .iter()
            .filter(|r| r.tag == ResidualTag::Strip)
            .count();
        assert!(strips > 0);
    }

    #[test]
    fn index_cap_is_not_straddled() {
        let p = params(0.75, 8, 100_000);
        let mut st = PackingState::init(p);
        let cap = 100_000 + 1000;
        let report = st.run(&Limits {
            n_max: Some(cap),
            ..Limits::default()
        });
        assert_eq!(report.termination, Termination::IndexCapReached);
        assert!(report.n_final <= cap);
        assert!(report.n_final + 9 * 64 > cap);
    }
}
