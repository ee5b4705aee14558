//! Run parameters and the power series behind area targets and perimeter
//! budgets.
//!
//! Tails `Σ_{n≥n0} n^{-s}` and long partial sums are evaluated with a short
//! compensated direct sum followed by an Euler–Maclaurin expansion whose
//! remainder is bounded by the magnitude of the last Bernoulli term kept
//! (the periodic Bernoulli polynomial `P_{2p}` satisfies `|P_{2p}| ≤ |B_{2p}|`
//! and `x^{-s}` has derivatives of constant sign).

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sum::NeumaierSum;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParamsError {
    #[error("exponent t = {0} outside the open interval (1/2, 1)")]
    ExponentOutOfRange(f64),
    #[error("t + delta*t = {0} is not below 1")]
    DeltaCondition(f64),
    #[error("block scale M = {0} must be at least 2")]
    BlockScale(u64),
    #[error("starting index n0 = {0} must be at least 2")]
    StartIndex(u64),
    #[error("n_max = {n_max} must exceed n0 = {n0}")]
    IndexCap { n0: u64, n_max: u64 },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SeriesError {
    #[error("series with exponent s = {0} diverges (need s > 1)")]
    Divergent(f64),
    #[error("summation must start at n >= 1")]
    ZeroIndex,
}

/// Global configuration of a packing run.
///
/// `delta` is never stored; it is always recomputed as `1 - t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams", into = "RawParams")]
pub struct Params {
    t: f64,
    m: u64,
    n0: u64,
    n_max: Option<u64>,
}

#[derive(Serialize, Deserialize)]
struct RawParams {
    t: f64,
    #[serde(rename = "M")]
    m: u64,
    n0: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    n_max: Option<u64>,
}

impl TryFrom<RawParams> for Params {
    type Error = ParamsError;

    fn try_from(raw: RawParams) -> Result<Self, Self::Error> {
        let p = Params::new(raw.t, raw.m, raw.n0)?;
        match raw.n_max {
            Some(cap) => p.with_n_max(cap),
            None => Ok(p),
        }
    }
}

impl From<Params> for RawParams {
    fn from(p: Params) -> Self {
        RawParams {
            t: p.t,
            m: p.m,
            n0: p.n0,
            n_max: p.n_max,
        }
    }
}

impl Params {
    pub fn new(t: f64, m: u64, n0: u64) -> Result<Self, ParamsError> {
        if !(t > 0.5 && t < 1.0) {
            return Err(ParamsError::ExponentOutOfRange(t));
        }
        let delta = 1.0 - t;
        if t + delta * t >= 1.0 {
            return Err(ParamsError::DeltaCondition(t + delta * t));
        }
        if m < 2 {
            return Err(ParamsError::BlockScale(m));
        }
        if n0 < 2 {
            return Err(ParamsError::StartIndex(n0));
        }
        Ok(Self {
            t,
            m,
            n0,
            n_max: None,
        })
    }

    pub fn with_n_max(mut self, n_max: u64) -> Result<Self, ParamsError> {
        if n_max < self.n0 {
            return Err(ParamsError::IndexCap { n0: self.n0, n_max });
        }
        self.n_max = Some(n_max);
        Ok(self)
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn delta(&self) -> f64 {
        1.0 - self.t
    }

    /// Block scale `M`.
    pub fn m(&self) -> u64 {
        self.m
    }

    pub fn n0(&self) -> u64 {
        self.n0
    }

    pub fn n_max(&self) -> Option<u64> {
        self.n_max
    }

    /// Exponent `t + δt` of the perimeter-budget series.
    pub fn budget_exponent(&self) -> f64 {
        self.t + self.delta() * self.t
    }

    /// Right-hand side of the weighted-perimeter invariant at index `n0`.
    pub fn perimeter_budget(&self, n0: u64) -> f64 {
        perimeter_budget(self.t, self.m, n0)
    }
}

/// Sidelength `n^{-t}` of square `n`.
///
/// Every module goes through this routine so equal indices give
/// bit-identical sides.
#[inline]
pub fn side(n: u64, t: f64) -> f64 {
    (n as f64).powf(-t)
}

/// A series value together with a certified absolute error bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesValue {
    pub value: f64,
    pub error_bound: f64,
}

impl SeriesValue {
    pub fn lower(&self) -> f64 {
        self.value - self.error_bound
    }

    pub fn upper(&self) -> f64 {
        self.value + self.error_bound
    }

    pub fn contains(&self, x: f64) -> bool {
        (x - self.value).abs() <= self.error_bound
    }
}

/// `B_{2k} / (2k)!` for k = 1..=8.
const BERNOULLI_OVER_FACTORIAL: [f64; 8] = [
    1.0 / 12.0,
    -1.0 / 720.0,
    1.0 / 30240.0,
    -1.0 / 1209600.0,
    1.0 / 47900160.0,
    -691.0 / 1307674368000.0,
    1.0 / 74724249600.0,
    -3617.0 / 10670622842880000.0,
];

/// Below this index terms are summed directly before switching to
/// Euler–Maclaurin.
const EM_START: u64 = 64;

/// Ranges no longer than this are always summed term by term.
const DIRECT_LIMIT: u64 = 1 << 16;

/// Relative slack covering libm `pow` and the compensated sum's rounding.
const ROUNDING_SLACK: f64 = 16.0 * f64::EPSILON;

fn direct_sum(s: f64, a: u64, b: u64) -> f64 {
    let mut acc = NeumaierSum::new();
    for n in a..=b {
        acc += (n as f64).powf(-s);
    }
    acc.value()
}

/// Euler–Maclaurin correction terms `Σ_k B_{2k}/(2k)! (s)_{2k-1} x^{1-s-2k}`
/// at a single point, returned with the magnitude of the last term.
fn em_corrections(s: f64, x: f64) -> (f64, f64) {
    let mut acc = NeumaierSum::new();
    // (s)_{2k-1} x^{-s-2k+1}, starting at k = 1: s * x^{-s-1}
    let mut rising = s;
    let mut power = x.powf(-s - 1.0);
    let inv_x2 = 1.0 / (x * x);
    let mut last = 0.0;
    for (k, coeff) in BERNOULLI_OVER_FACTORIAL.iter().enumerate() {
        let term = coeff * rising * power;
        acc += term;
        last = term.abs();
        let two_k = 2.0 * (k as f64 + 1.0);
        rising *= (s + two_k - 1.0) * (s + two_k);
        power *= inv_x2;
    }
    (acc.value(), last)
}

/// `Σ_{n=n0}^∞ n^{-s}` with a certified error bound.
pub fn tail_sum(s: f64, n0: u64) -> Result<SeriesValue, SeriesError> {
    if s.is_nan() || s <= 1.0 {
        return Err(SeriesError::Divergent(s));
    }
    if n0 == 0 {
        return Err(SeriesError::ZeroIndex);
    }
    let start = n0.max(EM_START);
    let head = if n0 < start {
        direct_sum(s, n0, start - 1)
    } else {
        0.0
    };
    let x = start as f64;
    let integral = x.powf(1.0 - s) / (s - 1.0);
    let half = 0.5 * x.powf(-s);
    let (corr, last) = em_corrections(s, x);
    let mut acc = NeumaierSum::new();
    for v in [head, integral, half, corr] {
        acc += v;
    }
    let value = acc.value();
    Ok(SeriesValue {
        value,
        error_bound: last + ROUNDING_SLACK * value.abs(),
    })
}

/// `∫_a^b x^{-s} dx` without cancellation for `s` near 1.
fn power_integral(s: f64, a: f64, b: f64) -> f64 {
    let log_ratio = ((b - a) / a).ln_1p();
    if s == 1.0 {
        return log_ratio;
    }
    let e = 1.0 - s;
    a.powf(e) * (e * log_ratio).exp_m1() / e
}

/// `Σ_{n=a}^{b} n^{-s}`; an empty range (`a > b`) sums to zero.
///
/// Short ranges are summed directly with compensation; long ranges use a
/// direct head plus an Euler–Maclaurin body, keeping the relative error
/// near machine precision for any length.
pub fn partial_sum(s: f64, a: u64, b: u64) -> f64 {
    assert!(a >= 1, "partial_sum: index 0 has no term n^-s");
    if a > b {
        return 0.0;
    }
    if b - a < DIRECT_LIMIT {
        return direct_sum(s, a, b);
    }
    let start = a.max(EM_START);
    let head = if a < start {
        direct_sum(s, a, start - 1)
    } else {
        0.0
    };
    let (xa, xb) = (start as f64, b as f64);
    let integral = power_integral(s, xa, xb);
    let ends = 0.5 * (xa.powf(-s) + xb.powf(-s));
    let (ca, _) = em_corrections(s, xa);
    let (cb, _) = em_corrections(s, xb);
    let mut acc = NeumaierSum::new();
    for v in [head, integral, ends, ca, -cb] {
        acc += v;
    }
    acc.value()
}

/// `M^{-1+δ/2} Σ_{n=1}^{n0-1} n^{-(t+δt)}`, with `δ = 1 - t`.
pub fn perimeter_budget(t: f64, m: u64, n0: u64) -> f64 {
    let delta = 1.0 - t;
    let scale = (m as f64).powf(-1.0 + 0.5 * delta);
    scale * partial_sum(t + delta * t, 1, n0.saturating_sub(1))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn params_reject_out_of_range() {
        assert!(matches!(
            Params::new(1.0, 8, 10),
            Err(ParamsError::ExponentOutOfRange(_))
        ));
        assert!(matches!(
            Params::new(0.5, 8, 10),
            Err(ParamsError::ExponentOutOfRange(_))
        ));
        assert!(matches!(
            Params::new(0.75, 1, 10),
            Err(ParamsError::BlockScale(1))
        ));
        assert!(matches!(
            Params::new(0.75, 4, 1),
            Err(ParamsError::StartIndex(1))
        ));
        assert!(Params::new(0.75, 4, 100).unwrap().with_n_max(50).is_err());
    }

    #[test]
    fn delta_is_derived() {
        let p = Params::new(0.8, 4, 10).unwrap();
        assert_eq!(p.delta(), 1.0 - 0.8);
        assert!(p.budget_exponent() < 1.0);
    }

    #[test]
    fn params_json_uses_capital_m() {
        let p = Params::new(0.75, 8, 1000).unwrap();
        let json = serde_json::to_string(&p).unwrap();
        assert_eq!(json, r#"{"t":0.75,"M":8,"n0":1000}"#);
        let back: Params = serde_json::from_str(&json).unwrap();
        assert_eq!(back, p);
        assert!(serde_json::from_str::<Params>(r#"{"t":1.0,"M":8,"n0":1000}"#).is_err());
    }

    #[test]
    fn basel_tails() {
        // π²/6 − 1 and π²/6
        let v = tail_sum(2.0, 2).unwrap();
        let expected = std::f64::consts::PI.powi(2) / 6.0 - 1.0;
        assert!(v.contains(expected), "{v:?} vs {expected}");
        assert!(v.error_bound <= 1e-14 * v.value);
        let v1 = tail_sum(2.0, 1).unwrap();
        assert!(rel(v1.value, 1.644_934_066_848_226_4) < 1e-15);
    }

    #[test]
    fn tails_against_high_precision_reference() {
        // Hurwitz zeta values evaluated at 40 digits.
        let cases = [
            (1.5, 1_000_000, 0.002_000_000_500_000_125_f64),
            (1.5, 2, 1.612_375_348_685_488_3),
            (1.1, 7, 8.292_047_056_894_308),
            (1.8, 1000, 0.004_978_330_764_932_133),
        ];
        for (s, n0, expected) in cases {
            let v = tail_sum(s, n0).unwrap();
            assert!(
                v.contains(expected) || rel(v.value, expected) < 2e-16,
                "s={s} n0={n0}"
            );
            assert!(
                rel(v.value, expected) < 1e-14,
                "s={s} n0={n0}: {} vs {expected}",
                v.value
            );
            assert!(v.error_bound <= 1e-14 * v.value);
        }
    }

    #[test]
    fn tail_rejects_divergent() {
        assert_eq!(tail_sum(1.0, 5), Err(SeriesError::Divergent(1.0)));
        assert!(tail_sum(0.3, 5).is_err());
        assert_eq!(tail_sum(2.0, 0), Err(SeriesError::ZeroIndex));
    }

    #[test]
    fn partial_sum_small_cases() {
        assert_eq!(partial_sum(1.3, 7, 7), 7f64.powf(-1.3));
        assert!(rel(partial_sum(1.0, 1, 4), 25.0 / 12.0) < 1e-15);
        assert_eq!(partial_sum(1.0, 5, 4), 0.0);
    }

    #[test]
    fn partial_sum_long_ranges() {
        // ζ(s) − ζ(s, b+1) at 40 digits
        let cases = [
            (1.2, 1, 1_000_000, 5.276_103_800_485_515),
            (0.9375, 1, 999_999, 22.514_623_938_023_09),
            (0.9375, 1, 100_000_000, 35.169_088_411_629_1),
            (1.0, 1, 1_000_000_000, 21.300_481_502_347_944),
            (0.84, 10, 123_456, 31.826_330_195_141_006),
        ];
        for (s, a, b, expected) in cases {
            let v = partial_sum(s, a, b);
            assert!(
                rel(v, expected) < 1e-13,
                "s={s} [{a},{b}]: {v} vs {expected}"
            );
        }
    }

    #[test]
    fn budget_values() {
        assert_eq!(perimeter_budget(0.75, 1, 2), 1.0);
        let b = Params::new(0.75, 16, 1_000_000)
            .unwrap()
            .perimeter_budget(1_000_000);
        assert!(rel(b, 1.990_030_407_805_137) < 1e-13);
        assert!(perimeter_budget(0.75, 16, 2_000_000) >= b);
    }

    #[test]
    fn side_matches_pow() {
        assert_eq!(side(4, 0.5), 0.5);
        assert_eq!(side(1, 0.7), 1.0);
    }
}
