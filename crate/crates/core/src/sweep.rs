//! Parameter sweeps.

use std::io;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::engine::{Limits, PackingState};
use crate::series::{Params, ParamsError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub t: Vec<f64>,
    #[serde(rename = "M")]
    pub m: Vec<u64>,
    pub n0: Vec<u64>,
    pub budget: u64,
}

impl SweepGrid {
    /// Points in grid order: `t` outermost, `n0` innermost.
    pub fn points(&self) -> Result<Vec<Params>, ParamsError> {
        let mut out = Vec::with_capacity(self.t.len() * self.m.len() * self.n0.len());
        for &t in &self.t {
            for &m in &self.m {
                for &n0 in &self.n0 {
                    out.push(Params::new(t, m, n0)?);
                }
            }
        }
        Ok(out)
    }
}

/// One CSV line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub t: f64,
    #[serde(rename = "M")]
    pub m: u64,
    pub n0: u64,
    pub squares_placed: u64,
    /// `none` when the budget was reached.
    pub failure_mode: String,
    pub max_budget_ratio: f64,
    pub wall_time_ms: u64,
}

pub fn run_point(params: Params, budget: u64) -> SweepRow {
    let start = Instant::now();
    let mut state = PackingState::init(params);
    let report = state.run(&Limits::budget(budget));
    let failure_mode = if report.termination.is_failure() {
        report.termination.label()
    } else {
        "none"
    };
    SweepRow {
        t: params.t(),
        m: params.m(),
        n0: params.n0(),
        squares_placed: report.squares_placed,
        failure_mode: failure_mode.to_owned(),
        max_budget_ratio: report.max_budget_ratio,
        wall_time_ms: start.elapsed().as_millis() as u64,
    }
}

/// Rows in grid order regardless of scheduling.
pub fn run_sweep(grid: &SweepGrid) -> Result<Vec<SweepRow>, ParamsError> {
    let points = grid.points()?;
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        Ok(points
            .par_iter()
            .map(|p| run_point(*p, grid.budget))
            .collect())
    }
    #[cfg(not(feature = "parallel"))]
    {
        Ok(points.iter().map(|p| run_point(*p, grid.budget)).collect())
    }
}

pub fn write_csv<W: io::Write>(rows: &[SweepRow], out: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: io::Read>(input: R) -> Result<Vec<SweepRow>, csv::Error> {
    csv::Reader::from_reader(input).deserialize().collect()
}

/// A larger `n0` placed fewer squares before stopping, at fixed `(t, M)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityFinding {
    pub t: f64,
    #[serde(rename = "M")]
    pub m: u64,
    pub n0_lo: u64,
    pub n0_hi: u64,
    pub placed_lo: u64,
    pub placed_hi: u64,
}

/// Compare consecutive `n0` values for each `(t, M)`. Counts are capped at
/// `budget`, since a run that reached it says nothing beyond that.
pub fn monotonicity_findings(rows: &[SweepRow], budget: u64) -> Vec<MonotonicityFinding> {
    let mut sorted: Vec<&SweepRow> = rows.iter().collect();
    sorted.sort_by(|a, b| {
        a.t.total_cmp(&b.t)
            .then(a.m.cmp(&b.m))
            .then(a.n0.cmp(&b.n0))
    });
    sorted
        .windows(2)
        .filter(|w| w[0].t == w[1].t && w[0].m == w[1].m)
        .filter_map(|w| {
            let (lo, hi) = (
                w[0].squares_placed.min(budget),
                w[1].squares_placed.min(budget),
            );
            (hi < lo).then(|| MonotonicityFinding {
                t: w[0].t,
                m: w[0].m,
                n0_lo: w[0].n0,
                n0_hi: w[1].n0,
                placed_lo: lo,
                placed_hi: hi,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(t: f64, m: u64, n0: u64, placed: u64) -> SweepRow {
        SweepRow {
            t,
            m,
            n0,
            squares_placed: placed,
            failure_mode: "none".into(),
            max_budget_ratio: 0.5,
            wall_time_ms: 1,
        }
    }

    #[test]
    fn csv_header_and_round_trip() {
        let rows = vec![row(0.75, 8, 1000, 10), row(0.6, 4, 100, 7)];
        let mut buf = Vec::new();
        write_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(
            text.starts_with("t,M,n0,squares_placed,failure_mode,max_budget_ratio,wall_time_ms\n")
        );
        assert_eq!(read_csv(buf.as_slice()).unwrap(), rows);
    }

    #[test]
    fn findings_respect_budget_cap() {
        let rows = vec![
            row(0.75, 8, 100, 50),
            row(0.75, 8, 1000, 40),
            row(0.75, 8, 10000, 1010),
            row(0.75, 8, 100000, 1000),
        ];
        let f = monotonicity_findings(&rows, 1000);
        assert_eq!(f.len(), 1);
        assert_eq!((f[0].n0_lo, f[0].n0_hi), (100, 1000));
    }

    #[test]
    fn single_point_matches_direct_run() {
        let grid = SweepGrid {
            t: vec![0.75],
            m: vec![8],
            n0: vec![1000],
            budget: 2000,
        };
        let rows = run_sweep(&grid).unwrap();
        let p = Params::new(0.75, 8, 1000).unwrap();
        let mut st = PackingState::init(p);
        let report = st.run(&Limits::budget(2000));
        assert_eq!(rows[0].squares_placed, report.squares_placed);
        assert_eq!(rows[0].max_budget_ratio, report.max_budget_ratio);
    }
}
