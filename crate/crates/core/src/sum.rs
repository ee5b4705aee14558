//! Compensated (Kahan–Babuška–Neumaier) accumulation.

use std::iter::Sum;
use std::ops::{AddAssign, SubAssign};

/// Running sum that carries the rounding error of every addition in a
/// separate compensation term.
#[derive(Debug, Default, Clone, Copy, PartialEq)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub const fn new() -> Self {
        Self {
            sum: 0.0,
            comp: 0.0,
        }
    }

    #[inline]
    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.comp += (self.sum - t) + value;
        } else {
            self.comp += (value - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl AddAssign<f64> for NeumaierSum {
    fn add_assign(&mut self, rhs: f64) {
        self.add(rhs);
    }
}

impl SubAssign<f64> for NeumaierSum {
    fn sub_assign(&mut self, rhs: f64) {
        self.add(-rhs);
    }
}

impl Sum<f64> for NeumaierSum {
    fn sum<I: Iterator<Item = f64>>(iter: I) -> Self {
        let mut acc = NeumaierSum::new();
        for v in iter {
            acc.add(v);
        }
        acc
    }
}

/// Compensated sum of an iterator of values.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    values.into_iter().sum::<NeumaierSum>().value()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cancellation() {
        let mut s = NeumaierSum::new();
        for v in [1e200, 0.1, 0.2, 0.3, -1e200] {
            s += v;
        }
        assert!((s.value() - 0.6).abs() < 1e-15);
    }

    #[test]
    fn add_then_subtract_returns_to_zero() {
        let values: Vec<f64> = (1..1000).map(|k| 1.0 / k as f64).collect();
        let mut s = NeumaierSum::new();
        for &v in &values {
            s += v;
        }
        for &v in &values {
            s -= v;
        }
        assert!(s.value().abs() < 1e-15);
    }
}
