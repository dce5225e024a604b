//! Ordinary least-squares line fits used by the drift and noise calibrations.

use crate::error::{bail, Result};

/// `y ≈ intercept + slope · x`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
}

/// Unweighted least-squares line through `(x, y)`.
///
/// Uses centred sums, which keeps the slope exact to rounding for noiseless
/// data even when `x` has a large offset.
pub fn fit_line(x: &[f64], y: &[f64]) -> Result<LineFit> {
    if x.len() != y.len() {
        bail!(Argument, "x has {} points, y has {}", x.len(), y.len());
    }
    if x.len() < 2 {
        bail!(Argument, "a line fit needs at least 2 points, got {}", x.len());
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (a, b) in x.iter().zip(y) {
        let dx = a - mx;
        sxx += dx * dx;
        sxy += dx * (b - my);
    }
    if sxx == 0.0 {
        bail!(Argument, "all x values are identical");
    }
    let slope = sxy / sxx;
    Ok(LineFit {
        slope,
        intercept: my - slope * mx,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let x = [1.0, 2.0, 3.0, 10.0];
        let y: alloc::vec::Vec<f64> = x.iter().map(|v| 3.0 - 0.5 * v).collect();
        let f = fit_line(&x, &y).unwrap();
        assert!((f.slope + 0.5).abs() < 1e-14);
        assert!((f.intercept - 3.0).abs() < 1e-14);
    }

    #[test]
    fn degenerate_inputs() {
        assert!(fit_line(&[1.0], &[1.0]).is_err());
        assert!(fit_line(&[1.0, 1.0], &[1.0, 2.0]).is_err());
        assert!(fit_line(&[1.0, 2.0], &[1.0]).is_err());
    }
}
