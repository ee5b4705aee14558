use squarepack::block::{pack_spec, BlockSpec};
use squarepack::certificate::Certificate;
use squarepack::engine::{Limits, PackingState};
use squarepack::series::{self, side, Params};
use squarepack::svg::{render, SvgOptions};
use squarepack::verify::{verify, VerifyLevel};
use squarepack::Rect;
use wasm_bindgen::prelude::*;

/// Largest run the page will attempt.
pub const MAX_BUDGET: u32 = 50_000;

#[wasm_bindgen]
pub struct Rendering {
    svg: String,
    summary: String,
}

#[wasm_bindgen]
impl Rendering {
    #[wasm_bindgen(getter)]
    pub fn svg(&self) -> String {
        self.svg.clone()
    }

    /// JSON summary of the run.
    #[wasm_bindgen(getter)]
    pub fn summary(&self) -> String {
        self.summary.clone()
    }
}

pub fn block_demo(m1: u32, m2: u32, t: f64, n0: u32) -> Result<Rendering, String> {
    let params =
        Params::new(t, u64::from(m1.max(m2)).max(2), u64::from(n0)).map_err(|e| e.to_string())?;
    let unit = side(params.n0(), t);
    let rect = Rect::new(
        0.0,
        0.0,
        (f64::from(m1) + 0.5) * unit,
        (f64::from(m2) + 0.5) * unit,
    );
    let block = BlockSpec::new(rect, params.n0(), t, u64::from(m1), u64::from(m2))
        .and_then(|s| pack_spec(&s))
        .map_err(|e| e.to_string())?;
    let cert = Certificate::from_block(&block, params);
    let report = verify(&cert, VerifyLevel::FullBruteforce);
    let census = block.census();
    let summary = serde_json::json!({
        "squares": block.squares.len(),
        "gaps": census,
        "verified": report.pass(),
    });
    Ok(Rendering {
        svg: render(&cert, &SvgOptions::default()),
        summary: summary.to_string(),
    })
}

pub fn pack(t: f64, m: u32, n0: u32, budget: u32) -> Result<Rendering, String> {
    let params = Params::new(t, u64::from(m), u64::from(n0)).map_err(|e| e.to_string())?;
    let mut state = PackingState::init(params);
    let run = state.run(&Limits::budget(u64::from(budget.min(MAX_BUDGET))));
    let cert = Certificate::from_state(&state, Some(run.termination.clone()));
    let report = verify(&cert, VerifyLevel::Fast);
    let summary = serde_json::json!({
        "status": run.status,
        "termination": run.termination.label(),
        "squares": run.squares_placed,
        "n_final": run.n_final,
        "residuals": cert.residuals.len(),
        "max_budget_ratio": run.max_budget_ratio,
        "verified": report.pass(),
    });
    Ok(Rendering {
        svg: render(&cert, &SvgOptions::default()),
        summary: summary.to_string(),
    })
}

/// Pack one block of `m1 × m2` squares starting at index `n0`.
#[wasm_bindgen(js_name = blockDemo)]
pub fn block_demo_js(m1: u32, m2: u32, t: f64, n0: u32) -> Result<Rendering, JsError> {
    block_demo(m1, m2, t, n0).map_err(|e| JsError::new(&e))
}

/// Run the engine until `budget` squares are placed or it stops.
#[wasm_bindgen(js_name = pack)]
pub fn pack_js(t: f64, m: u32, n0: u32, budget: u32) -> Result<Rendering, JsError> {
    pack(t, m, n0, budget).map_err(|e| JsError::new(&e))
}

/// `Σ_{n≥n0} n^{-s}`, or NaN outside `s > 1`.
#[wasm_bindgen(js_name = tailSum)]
pub fn tail_sum(s: f64, n0: u32) -> f64 {
    series::tail_sum(s, u64::from(n0).max(1)).map_or(f64::NAN, |v| v.value)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn figure_block() {
        let r = block_demo(3, 4, 0.75, 1_000_000).unwrap();
        assert_eq!(r.svg.matches(r#"class="square""#).count(), 12);
        assert_eq!(r.svg.matches(r#"class="residual""#).count(), 14);
        assert!(r.summary.contains(r#""verified":true"#));
    }

    #[test]
    fn small_run() {
        let r = pack(0.75, 8, 100_000, 500).unwrap();
        assert!(r.summary.contains(r#""verified":true"#));
        assert!(pack(1.0, 8, 100, 10).is_err());
    }

    #[test]
    fn tail() {
        let v = tail_sum(2.0, 2);
        assert!((v - (std::f64::consts::PI.powi(2) / 6.0 - 1.0)).abs() < 1e-15);
        assert!(tail_sum(1.0, 2).is_nan());
    }
}
