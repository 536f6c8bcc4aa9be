use crate::data::Sample;
use crate::error::{ModalError, Result};

/// Local-linear mean regression of the second column of `s` on the first
/// with gaussian weights. `None` marks grid points where the weighted design
/// is singular.
pub fn local_linear_regression(s: &Sample, x_grid: &[f64], h: f64) -> Result<Vec<Option<f64>>> {
    if s.dim() != 2 {
        return Err(ModalError::DimensionMismatch { expected: 2, found: s.dim() });
    }
    local_linear(&s.column(0), &s.column(1), x_grid, h)
}

pub(crate) fn local_linear(xs: &[f64], ys: &[f64], x_grid: &[f64], h: f64) -> Result<Vec<Option<f64>>> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(ModalError::param("bandwidth must be positive and finite"));
    }
    if x_grid.iter().any(|x| !x.is_finite()) {
        return Err(ModalError::NonFinite("grid value".into()));
    }
    Ok(x_grid.iter().map(|&x0| fit_at(xs, ys, x0, h)).collect())
}

fn fit_at(xs: &[f64], ys: &[f64], x0: f64, h: f64) -> Option<f64> {
    let w: Vec<f64> = xs
        .iter()
        .map(|x| {
            let u = (x - x0) / h;
            (-0.5 * u * u).exp()
        })
        .collect();
    let s0: f64 = w.iter().sum();
    if !(s0 > 0.0) {
        return None;
    }
    // centred at the weighted means for stability
    let dbar = w.iter().zip(xs).map(|(w, x)| w * (x - x0)).sum::<f64>() / s0;
    let ybar = w.iter().zip(ys).map(|(w, y)| w * y).sum::<f64>() / s0;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for ((w, x), y) in w.iter().zip(xs).zip(ys) {
        let d = x - x0 - dbar;
        sxx += w * d * d;
        sxy += w * d * (y - ybar);
    }
    if !(sxx > 1e-12 * s0 * h * h) {
        return None;
    }
    Some(ybar - sxy / sxx * dbar)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_lines_and_constants() {
        let xs: Vec<f64> = (0..50).map(|i| (i as f64 * 0.37).sin() * 3.0).collect();
        let line: Vec<f64> = xs.iter().map(|x| 2.0 * x + 1.0).collect();
        let grid = [-2.0, -0.5, 0.0, 1.3, 2.9];
        for (g, m) in grid.iter().zip(local_linear(&xs, &line, &grid, 0.4).unwrap()) {
            assert!((m.unwrap() - (2.0 * g + 1.0)).abs() < 1e-10);
        }
        let flat = vec![4.25; 50];
        for m in local_linear(&xs, &flat, &grid, 0.4).unwrap() {
            assert!((m.unwrap() - 4.25).abs() < 1e-12);
        }
    }

    #[test]
    fn singular_design_is_marked() {
        let xs = [1.0, 1.0, 1.0];
        let ys = [0.0, 1.0, 2.0];
        assert_eq!(local_linear(&xs, &ys, &[1.0, 100.0], 0.5).unwrap(), vec![None, None]);
        assert!(local_linear(&xs, &ys, &[1.0], 0.0).is_err());
    }
}
