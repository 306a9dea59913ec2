//! Piecewise-linear conversion curves.
//!
//! A curve maps an input resource quantity to an output quantity through a
//! breakpoint table. Both breakpoint series must be strictly increasing,
//! which makes every curve invertible and keeps curve composition total.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Absolute tolerance for treating two breakpoints as the same point.
pub const BREAKPOINT_EPS: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PwlError {
    #[error("breakpoint series must have equal lengths >= 2 (got {source_len} and {target_len})")]
    BadShape { source_len: usize, target_len: usize },
    #[error("source series is not strictly increasing at index {0}")]
    NonIncreasingSource(usize),
    #[error("target series is not strictly increasing at index {0}")]
    NonIncreasingTarget(usize),
    #[error("breakpoint value at index {0} is not finite")]
    NonFinite(usize),
    #[error("argument {x} outside curve domain [{lo}, {hi}]")]
    OutOfDomain { x: f64, lo: f64, hi: f64 },
}

/// A monotone-increasing piecewise-linear map given by breakpoint abscissae
/// (`source`) and ordinates (`target`).
///
/// Deserialized curves are not trusted; [`PiecewiseLinear::validate`] reports
/// violations and every constructing operation runs it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseLinear {
    pub source: Vec<f64>,
    pub target: Vec<f64>,
}

impl PiecewiseLinear {
    /// Builds a validated curve.
    pub fn new(source: Vec<f64>, target: Vec<f64>) -> Result<Self, PwlError> {
        let curve = Self { source, target };
        curve.validate()?;
        Ok(curve)
    }

    /// Convenience constructor for a single linear segment through two points.
    pub fn linear(x0: f64, x1: f64, y0: f64, y1: f64) -> Result<Self, PwlError> {
        Self::new(vec![x0, x1], vec![y0, y1])
    }

    /// Checks the type invariants: equal lengths >= 2, both series strictly
    /// increasing, all values finite.
    pub fn validate(&self) -> Result<(), PwlError> {
        if self.source.len() != self.target.len() || self.source.len() < 2 {
            return Err(PwlError::BadShape {
                source_len: self.source.len(),
                target_len: self.target.len(),
            });
        }
        for (i, (&x, &y)) in self.source.iter().zip(&self.target).enumerate() {
            if !x.is_finite() || !y.is_finite() {
                return Err(PwlError::NonFinite(i));
            }
            if i > 0 {
                if x <= self.source[i - 1] {
                    return Err(PwlError::NonIncreasingSource(i));
                }
                if y <= self.target[i - 1] {
                    return Err(PwlError::NonIncreasingTarget(i));
                }
            }
        }
        Ok(())
    }

    /// Number of breakpoints (the ρ of the size accounting).
    pub fn breakpoint_count(&self) -> usize {
        self.source.len()
    }

    /// Number of linear segments, ρ − 1.
    pub fn segment_count(&self) -> usize {
        self.source.len() - 1
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.source[0], *self.source.last().unwrap())
    }

    pub fn range(&self) -> (f64, f64) {
        (self.target[0], *self.target.last().unwrap())
    }

    /// Slope of segment `k` (between breakpoints k and k+1).
    pub fn slope(&self, k: usize) -> f64 {
        (self.target[k + 1] - self.target[k]) / (self.source[k + 1] - self.source[k])
    }

    /// Smallest segment slope; strictly positive for a valid curve.
    pub fn min_slope(&self) -> f64 {
        (0..self.segment_count())
            .map(|k| self.slope(k))
            .fold(f64::INFINITY, f64::min)
    }

    /// Linear interpolation; exact at breakpoints.
    pub fn eval(&self, x: f64) -> Result<f64, PwlError> {
        let (lo, hi) = self.domain();
        // Tolerate representation noise at the ends, reject genuine excursions.
        if x < lo - BREAKPOINT_EPS || x > hi + BREAKPOINT_EPS {
            return Err(PwlError::OutOfDomain { x, lo, hi });
        }
        let x = x.clamp(lo, hi);
        Ok(interpolate(&self.source, &self.target, x))
    }

    /// Inverse map obtained by swapping the breakpoint series.
    ///
    /// `inverse(eval(x)) == x` for every `x` in the domain, and applying
    /// `inverse` twice returns breakpoint-identical lists.
    pub fn inverse(&self) -> PiecewiseLinear {
        PiecewiseLinear {
            source: self.target.clone(),
            target: self.source.clone(),
        }
    }

    /// Evaluation of the inverse without materializing it.
    pub fn eval_inverse(&self, y: f64) -> Result<f64, PwlError> {
        let (lo, hi) = self.range();
        if y < lo - BREAKPOINT_EPS || y > hi + BREAKPOINT_EPS {
            return Err(PwlError::OutOfDomain { x: y, lo, hi });
        }
        let y = y.clamp(lo, hi);
        Ok(interpolate(&self.target, &self.source, y))
    }
}

fn interpolate(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    // partition_point returns the first index with xs[i] > x; the bracketing
    // segment is [i-1, i].
    let i = xs.partition_point(|&v| v <= x);
    if i == 0 {
        return ys[0];
    }
    if i == xs.len() {
        return ys[ys.len() - 1];
    }
    let (x0, x1) = (xs[i - 1], xs[i]);
    let (y0, y1) = (ys[i - 1], ys[i]);
    if x == x0 {
        y0
    } else {
        y0 + (y1 - y0) * (x - x0) / (x1 - x0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eval_on_a_line() {
        let f = PiecewiseLinear::new(vec![0.0, 10.0], vec![0.0, 5.0]).unwrap();
        assert_eq!(f.eval(4.0).unwrap(), 2.0);
        assert_eq!(f.eval(0.0).unwrap(), 0.0);
        assert_eq!(f.eval(10.0).unwrap(), 5.0);
    }

    #[test]
    fn eval_on_second_segment() {
        // Segment (2,1)-(10,9) has slope 1, so x=6 lands on 5.
        let f = PiecewiseLinear::new(vec![0.0, 2.0, 10.0], vec![0.0, 1.0, 9.0]).unwrap();
        assert_eq!(f.eval(6.0).unwrap(), 5.0);
        assert_eq!(f.eval(2.0).unwrap(), 1.0);
    }

    #[test]
    fn eval_out_of_domain() {
        let f = PiecewiseLinear::new(vec![0.0, 10.0], vec![0.0, 5.0]).unwrap();
        assert!(matches!(f.eval(12.0), Err(PwlError::OutOfDomain { .. })));
        assert!(matches!(f.eval(-0.5), Err(PwlError::OutOfDomain { .. })));
    }

    #[test]
    fn inverse_swaps_series() {
        let f = PiecewiseLinear::new(vec![0.0, 10.0], vec![0.0, 5.0]).unwrap();
        let g = f.inverse();
        assert_eq!(g.source, vec![0.0, 5.0]);
        assert_eq!(g.target, vec![0.0, 10.0]);
        // Mirror of the eval example: inverse of {[0,2,10],[0,1,9]} at 5 is 6.
        let f = PiecewiseLinear::new(vec![0.0, 2.0, 10.0], vec![0.0, 1.0, 9.0]).unwrap();
        assert_eq!(f.inverse().eval(5.0).unwrap(), 6.0);
    }

    #[test]
    fn rejects_non_increasing() {
        assert!(matches!(
            PiecewiseLinear::new(vec![0.0, 5.0, 5.0], vec![0.0, 1.0, 2.0]),
            Err(PwlError::NonIncreasingSource(2))
        ));
        assert!(matches!(
            PiecewiseLinear::new(vec![0.0, 1.0, 2.0], vec![0.0, 3.0, 3.0]),
            Err(PwlError::NonIncreasingTarget(2))
        ));
        assert!(matches!(
            PiecewiseLinear::new(vec![0.0], vec![0.0]),
            Err(PwlError::BadShape { .. })
        ));
    }
}
