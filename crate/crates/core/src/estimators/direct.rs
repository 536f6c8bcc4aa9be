//! Direct univariate mode estimators built from order statistics.

use serde::{Deserialize, Serialize};

use crate::data::{order_statistics, Sample};
use crate::error::{ModalError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DirectMethod {
    Chernoff,
    DaleniusVenter,
    RobertsonCryer,
    Grenander,
}

/// Which of several equally short windows wins.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TieBreak {
    #[default]
    Leftmost,
    Rightmost,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpacingSummary {
    pub order: usize,
    pub used: usize,
    /// Zero spacings left out of both sums.
    pub zero_dropped: usize,
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub count: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub span: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub iterations: Option<usize>,
    /// Robertson-Cryer windows, one per shrink step.
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub steps: Vec<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub a_hat: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub b_hat: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub spacings: Option<SpacingSummary>,
    #[serde(skip_serializing_if = "std::ops::Not::not", default)]
    pub degenerate: bool,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectEstimate {
    pub method: DirectMethod,
    pub location: f64,
    pub window: [f64; 2],
    pub diagnostics: Diagnostics,
}

/// Tuning constants for the four direct estimators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DirectConfig {
    pub chernoff_half_width: f64,
    pub dv_count: usize,
    pub rc_proportion: f64,
    pub grenander_order: usize,
    pub grenander_power: f64,
}

impl DirectConfig {
    /// Range checks that do not depend on the sample size.
    pub fn validate(&self) -> Result<()> {
        if !(self.chernoff_half_width > 0.0) || !self.chernoff_half_width.is_finite() {
            return Err(ModalError::param("half-width a must be positive"));
        }
        if self.dv_count < 2 {
            return Err(ModalError::param("window count k must be at least 2"));
        }
        if !(self.rc_proportion > 0.0 && self.rc_proportion < 1.0) {
            return Err(ModalError::param("proportion p must lie in (0, 1)"));
        }
        if self.grenander_order < 1 {
            return Err(ModalError::param("spacing order must be at least 1"));
        }
        if !(self.grenander_power > 0.0) || !self.grenander_power.is_finite() {
            return Err(ModalError::param("power p must be positive"));
        }
        Ok(())
    }

    pub fn estimate(&self, method: DirectMethod, s: &Sample) -> Result<DirectEstimate> {
        self.validate()?;
        match method {
            DirectMethod::Chernoff => chernoff_mode(s, self.chernoff_half_width),
            DirectMethod::DaleniusVenter => dalenius_venter_mode(s, self.dv_count),
            DirectMethod::RobertsonCryer => robertson_cryer_mode(s, self.rc_proportion),
            DirectMethod::Grenander => grenander_mode(s, self.grenander_order, self.grenander_power),
        }
    }
}

fn midpoint(a: f64, b: f64) -> f64 {
    0.5 * (a + b)
}

/// Midpoint of the tightest data sub-range holding the largest number of
/// observations that fit in some interval of length `2a`.
pub fn chernoff_mode(s: &Sample, a: f64) -> Result<DirectEstimate> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(ModalError::param("half-width a must be positive"));
    }
    let x = order_statistics(s)?;
    let n = x.len();
    let width = 2.0 * a;
    let mut count = vec![0usize; n];
    let mut j = 0;
    for i in 0..n {
        j = j.max(i);
        while j + 1 < n && x[j + 1] - x[i] <= width {
            j += 1;
        }
        count[i] = j - i + 1;
    }
    let m = *count.iter().max().expect("sample is non-empty");
    let mut best = 0;
    let mut best_span = f64::INFINITY;
    for i in 0..=n - m {
        let span = x[i + m - 1] - x[i];
        if span <= width && span < best_span {
            best = i;
            best_span = span;
        }
    }
    let window = [x[best], x[best + m - 1]];
    Ok(DirectEstimate {
        method: DirectMethod::Chernoff,
        location: midpoint(window[0], window[1]),
        window,
        diagnostics: Diagnostics {
            count: Some(m),
            span: Some(best_span),
            ..Default::default()
        },
    })
}

/// Index of the shortest run of `t` consecutive order statistics.
fn shortest_window(x: &[f64], t: usize, tie: TieBreak) -> usize {
    let mut best = 0;
    let mut best_span = f64::INFINITY;
    for i in 0..=x.len() - t {
        let span = x[i + t - 1] - x[i];
        let better = match tie {
            TieBreak::Leftmost => span < best_span,
            TieBreak::Rightmost => span <= best_span,
        };
        if better {
            best = i;
            best_span = span;
        }
    }
    best
}

/// Midpoint of the shortest window holding `k` consecutive order statistics.
pub fn dalenius_venter_mode(s: &Sample, k: usize) -> Result<DirectEstimate> {
    let x = order_statistics(s)?;
    if k < 2 || k > x.len() {
        return Err(ModalError::param(format!("k = {k} outside [2, {}]", x.len())));
    }
    let i = shortest_window(&x, k, TieBreak::Leftmost);
    let window = [x[i], x[i + k - 1]];
    Ok(DirectEstimate {
        method: DirectMethod::DaleniusVenter,
        location: midpoint(window[0], window[1]),
        window,
        diagnostics: Diagnostics {
            count: Some(k),
            span: Some(window[1] - window[0]),
            ..Default::default()
        },
    })
}

/// `ceil(m p)`, forgiving rounding noise in the product.
pub(crate) fn ceil_count(m: usize, p: f64) -> usize {
    let v = m as f64 * p;
    let r = v.round();
    if (v - r).abs() <= 1e-9 * v.max(1.0) {
        r as usize
    } else {
        v.ceil() as usize
    }
}

pub fn robertson_cryer_mode(s: &Sample, p: f64) -> Result<DirectEstimate> {
    robertson_cryer_mode_with(s, p, TieBreak::Leftmost)
}

/// Repeatedly keeps the shortest window with at least `ceil(m p)` of the
/// current `m` points, until two or fewer remain.
pub fn robertson_cryer_mode_with(s: &Sample, p: f64, tie: TieBreak) -> Result<DirectEstimate> {
    if !(p > 0.0 && p < 1.0) {
        return Err(ModalError::param("proportion p must lie in (0, 1)"));
    }
    let x = order_statistics(s)?;
    let mut lo = 0;
    let mut m = x.len();
    let mut steps = Vec::new();
    while m > 2 {
        let t = ceil_count(m, p).clamp(2, m - 1);
        let i = lo + shortest_window(&x[lo..lo + m], t, tie);
        lo = i;
        m = t;
        steps.push([x[lo], x[lo + m - 1]]);
    }
    let window = [x[lo], x[lo + m - 1]];
    Ok(DirectEstimate {
        method: DirectMethod::RobertsonCryer,
        location: midpoint(window[0], window[1]),
        window,
        diagnostics: Diagnostics {
            count: Some(m),
            span: Some(window[1] - window[0]),
            iterations: Some(steps.len()),
            steps,
            ..Default::default()
        },
    })
}

/// Spacing-weighted average of order-statistic midpoints,
/// `sum D^-p (X(i+k) + X(i)) / 2 / sum D^-p` with `D = X(i+k) - X(i)`.
pub fn grenander_mode(s: &Sample, k: usize, p: f64) -> Result<DirectEstimate> {
    let x = order_statistics(s)?;
    let n = x.len();
    if k < 1 || k >= n {
        return Err(ModalError::param(format!("spacing order k = {k} outside [1, {})", n)));
    }
    if !(p > 0.0) || !p.is_finite() {
        return Err(ModalError::param("power p must be positive"));
    }
    let mut warnings = Vec::new();
    if p <= 1.0 {
        warnings.push(format!("power p = {p} is not above 1"));
    }
    if p >= k as f64 {
        warnings.push(format!("power p = {p} is not below the spacing order k = {k}"));
    }
    let spacings: Vec<(f64, f64, usize)> = (0..n - k)
        .map(|i| (x[i + k] - x[i], midpoint(x[i], x[i + k]), i))
        .collect();
    let positive: Vec<_> = spacings.iter().filter(|t| t.0 > 0.0).collect();
    let zero_dropped = spacings.len() - positive.len();
    if zero_dropped > 0 {
        warnings.push(format!("{zero_dropped} tied spacings dropped"));
    }
    if positive.is_empty() {
        return Ok(DirectEstimate {
            method: DirectMethod::Grenander,
            location: x[0],
            window: [x[0], x[0]],
            diagnostics: Diagnostics {
                spacings: Some(SpacingSummary { order: k, used: 0, zero_dropped, min: 0.0, max: 0.0 }),
                degenerate: true,
                warnings,
                ..Default::default()
            },
        });
    }
    let d_min = positive.iter().map(|t| t.0).fold(f64::INFINITY, f64::min);
    let d_max = positive.iter().map(|t| t.0).fold(0.0, f64::max);
    // weights relative to the smallest spacing keep D^-p in range
    let (mut sw, mut swm) = (0.0, 0.0);
    for (d, mid, _) in &positive {
        let w = (d / d_min).powf(-p);
        sw += w;
        swm += w * mid;
    }
    let location = swm / sw;
    let scale = (n as f64).powf(-(p + 1.0)) * d_min.powf(-p);
    let first = positive.first().unwrap().2;
    let last = positive.last().unwrap().2;
    Ok(DirectEstimate {
        method: DirectMethod::Grenander,
        location,
        window: [x[first], x[last + k]],
        diagnostics: Diagnostics {
            a_hat: Some(sw * scale),
            b_hat: Some(swm * scale),
            spacings: Some(SpacingSummary {
                order: k,
                used: positive.len(),
                zero_dropped,
                min: d_min,
                max: d_max,
            }),
            warnings,
            ..Default::default()
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(v: &[f64]) -> Sample {
        Sample::univariate(v.to_vec()).unwrap()
    }

    #[test]
    fn chernoff_examples() {
        let e = chernoff_mode(&s(&[0.0, 0.1, 0.2, 5.0]), 0.15).unwrap();
        assert!((e.location - 0.1).abs() < 1e-15);
        assert_eq!(e.diagnostics.count, Some(3));
        let e = chernoff_mode(&s(&[3.0, -1.0, 2.0]), 2.0).unwrap();
        assert_eq!(e.location, 1.0);
        assert_eq!(chernoff_mode(&s(&[7.0]), 0.3).unwrap().location, 7.0);
        assert!(chernoff_mode(&s(&[1.0]), 0.0).is_err());
    }

    #[test]
    fn dalenius_venter_examples() {
        let e = dalenius_venter_mode(&s(&[1.0, 2.0, 3.0, 10.0]), 3).unwrap();
        assert_eq!(e.window, [1.0, 3.0]);
        assert_eq!(e.location, 2.0);
        assert_eq!(dalenius_venter_mode(&s(&[4.0, 0.0, 2.0]), 3).unwrap().location, 2.0);
        let e = dalenius_venter_mode(&s(&[0.0, 1.0, 1.0, 1.0, 9.0]), 3).unwrap();
        assert_eq!(e.window, [1.0, 1.0]);
        assert!(dalenius_venter_mode(&s(&[0.0, 1.0]), 3).is_err());
        assert!(dalenius_venter_mode(&s(&[0.0, 1.0]), 1).is_err());
    }

    #[test]
    fn robertson_cryer_hand_trace() {
        let e = robertson_cryer_mode(&s(&[0.0, 1.0, 2.0, 3.0, 9.0]), 0.5).unwrap();
        assert_eq!(e.diagnostics.steps, vec![[0.0, 2.0], [0.0, 1.0]]);
        assert_eq!(e.location, 0.5);
        assert_eq!(e.diagnostics.iterations, Some(2));
        let e = robertson_cryer_mode(&s(&[4.0, 1.0]), 0.5).unwrap();
        assert_eq!((e.location, e.diagnostics.iterations), (2.5, Some(0)));
    }

    #[test]
    fn robertson_cryer_mirror() {
        let v = [-3.0, -1.0, -0.5, 0.5, 1.0, 3.0];
        let neg: Vec<f64> = v.iter().map(|x| -x).collect();
        let a = robertson_cryer_mode_with(&s(&v), 0.5, TieBreak::Leftmost).unwrap();
        let b = robertson_cryer_mode_with(&s(&neg), 0.5, TieBreak::Rightmost).unwrap();
        assert_eq!(a.location, -b.location);
    }

    #[test]
    fn ceil_count_is_robust() {
        assert_eq!(ceil_count(5, 0.5), 3);
        assert_eq!(ceil_count(10, 0.3), 3);
        assert_eq!(ceil_count(10, 0.31), 4);
    }

    #[test]
    fn grenander_examples() {
        let e = grenander_mode(&s(&[0.0, 1.0, 3.0]), 1, 1.0).unwrap();
        assert!((e.diagnostics.a_hat.unwrap() - 1.0 / 6.0).abs() < 1e-15);
        assert!((e.diagnostics.b_hat.unwrap() - 1.0 / 6.0).abs() < 1e-15);
        assert!((e.location - 1.0).abs() < 1e-15);
        assert!(!e.diagnostics.warnings.is_empty());
        let e = grenander_mode(&s(&[4.0; 5]), 2, 1.5).unwrap();
        assert!(e.diagnostics.degenerate);
        assert_eq!(e.location, 4.0);
        assert!(grenander_mode(&s(&[0.0, 1.0]), 2, 1.5).is_err());
        assert!(grenander_mode(&s(&[0.0, 1.0, 2.0]), 1, 0.0).is_err());
    }

    #[test]
    fn grenander_drops_ties() {
        let e = grenander_mode(&s(&[0.0, 0.0, 1.0, 3.0]), 1, 1.0).unwrap();
        let d = e.diagnostics.spacings.unwrap();
        assert_eq!((d.used, d.zero_dropped), (2, 1));
        assert!((e.location - 1.0).abs() < 1e-15);
    }

    #[test]
    fn json_shape() {
        let e = dalenius_venter_mode(&s(&[1.0, 2.0, 3.0, 10.0]), 3).unwrap();
        let v = serde_json::to_value(&e).unwrap();
        assert_eq!(v["method"], "dalenius_venter");
        assert_eq!(v["window"], serde_json::json!([1.0, 3.0]));
        assert_eq!(v["diagnostics"]["count"], 3);
    }

    #[test]
    fn config_dispatch() {
        let cfg = DirectConfig {
            chernoff_half_width: 0.15,
            dv_count: 3,
            rc_proportion: 0.5,
            grenander_order: 1,
            grenander_power: 1.0,
        };
        let x = s(&[0.0, 0.1, 0.2, 5.0]);
        assert_eq!(cfg.estimate(DirectMethod::Chernoff, &x).unwrap(), chernoff_mode(&x, 0.15).unwrap());
        assert!(DirectConfig { rc_proportion: 1.0, ..cfg }.validate().is_err());
    }
}
