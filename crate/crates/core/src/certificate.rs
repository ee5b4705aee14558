//! Serialized packing state.
//!
//! Reals are written as JSON numbers in shortest round-trip form, so
//! `from_json(to_json(c)) == c` bit for bit.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::block::BlockResult;
use crate::engine::{PackingState, StepRecord, Termination};
use crate::geometry::{PlacedSquare, Rect, Residual, ResidualTag};
use crate::series::Params;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CertificateError {
    #[error("malformed certificate: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported schema version {0}")]
    Schema(u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CertificateKind {
    /// Engine state; `outer` is the initial square of area `Σ_{n≥n_lo} n^{-2t}`.
    Run,
    /// One block; `outer` is the packed rectangle.
    Block,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualRecord {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
    pub tag: ResidualTag,
}

impl ResidualRecord {
    pub fn rect(&self) -> Rect {
        Rect::new(self.x0, self.y0, self.x1, self.y1)
    }
}

impl From<&Residual> for ResidualRecord {
    fn from(r: &Residual) -> Self {
        Self {
            x0: r.rect.x0,
            y0: r.rect.y0,
            x1: r.rect.x1,
            y1: r.rect.y1,
            tag: r.tag,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockGrid {
    pub m1: u64,
    pub m2: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub schema_version: u32,
    pub kind: CertificateKind,
    pub params: Params,
    pub outer: Rect,
    /// Half-open: squares `n_lo ≤ n < n_hi` are placed.
    pub n_range: (u64, u64),
    pub squares: Vec<PlacedSquare>,
    pub residuals: Vec<ResidualRecord>,
    #[serde(default)]
    pub discarded_area: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub block: Option<BlockGrid>,
    #[serde(default)]
    pub ledger: Vec<StepRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub termination: Option<Termination>,
}

impl Certificate {
    pub fn from_state(state: &PackingState, termination: Option<Termination>) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            kind: CertificateKind::Run,
            params: *state.params(),
            outer: state.outer(),
            n_range: (state.params().n0(), state.n_current()),
            squares: state.placed().to_vec(),
            residuals: state.family().iter().map(ResidualRecord::from).collect(),
            discarded_area: state.discarded_area(),
            block: None,
            ledger: state.ledger().to_vec(),
            termination,
        }
    }

    /// `params` supplies `t` and `n0`; the grid is taken from the block.
    pub fn from_block(result: &BlockResult, params: Params) -> Self {
        let spec = &result.spec;
        Self {
            schema_version: SCHEMA_VERSION,
            kind: CertificateKind::Block,
            params,
            outer: spec.rect(),
            n_range: (spec.n0(), spec.n0_next()),
            squares: result.squares.clone(),
            residuals: result
                .gaps
                .iter()
                .map(|g| {
                    ResidualRecord::from(&Residual {
                        rect: g.rect,
                        tag: g.kind.into(),
                    })
                })
                .collect(),
            discarded_area: result.discarded_area,
            block: Some(BlockGrid {
                m1: spec.m1(),
                m2: spec.m2(),
            }),
            ledger: Vec::new(),
            termination: None,
        }
    }

    pub fn residual_rects(&self) -> impl Iterator<Item = Rect> + '_ {
        self.residuals.iter().map(ResidualRecord::rect)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("certificate serializes")
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("certificate serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, CertificateError> {
        let cert: Certificate = serde_json::from_str(s)?;
        if cert.schema_version != SCHEMA_VERSION {
            return Err(CertificateError::Schema(cert.schema_version));
        }
        Ok(cert)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::Limits;

    #[test]
    fn run_certificate_round_trips_bitwise() {
        let p = Params::new(0.75, 8, 100_000).unwrap();
        let mut st = PackingState::init(p);
        let report = st.run(&Limits::budget(300));
        let cert = Certificate::from_state(&st, Some(report.termination));
        let back = Certificate::from_json(&cert.to_json()).unwrap();
        assert_eq!(back, cert);
        for (a, b) in cert.squares.iter().zip(&back.squares) {
            assert_eq!(a.x.to_bits(), b.x.to_bits());
            assert_eq!(a.side.to_bits(), b.side.to_bits());
        }
    }

    #[test]
    fn schema_version_is_checked() {
        let p = Params::new(0.75, 8, 100).unwrap();
        let mut cert = Certificate::from_state(&PackingState::init(p), None);
        cert.schema_version = 99;
        assert!(matches!(
            Certificate::from_json(&cert.to_json()),
            Err(CertificateError::Schema(99))
        ));
    }

    #[test]
    fn params_use_uppercase_m() {
        let p = Params::new(0.75, 8, 100).unwrap();
        let json = Certificate::from_state(&PackingState::init(p), None).to_json();
        assert!(json.contains("\"M\":8"));
        assert!(json.contains("\"n_range\":[100,100]"));
    }
}
