use crate::data::Sample;
use crate::density::{check_dim, DensityModel};
use crate::error::{ModalError, Result};

/// Volume of the unit Euclidean ball, `pi^(d/2) / Gamma(1 + d/2)`, via the
/// recursion `v_d = v_{d-2} 2 pi / d`.
pub fn unit_ball_volume(d: usize) -> f64 {
    let mut v = if d % 2 == 0 { 1.0 } else { 2.0 };
    let mut k = if d % 2 == 0 { 2 } else { 3 };
    while k <= d {
        v *= 2.0 * std::f64::consts::PI / k as f64;
        k += 2;
    }
    v
}

/// k-nearest-neighbour density `k / (n v_d r_k(x)^d)`.
#[derive(Debug, Clone)]
pub struct NearestNeighborModel {
    sample: Sample,
    k: usize,
    volume: f64,
}

impl NearestNeighborModel {
    pub fn new(sample: Sample, k: usize) -> Result<Self> {
        if k == 0 || k > sample.len() {
            return Err(ModalError::param(format!(
                "k = {k} outside [1, {}]",
                sample.len()
            )));
        }
        let volume = unit_ball_volume(sample.dim());
        Ok(NearestNeighborModel { sample, k, volume })
    }

    pub fn sample(&self) -> &Sample {
        &self.sample
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn unit_ball_volume(&self) -> f64 {
        self.volume
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.sample.dim(), x)?;
        let mut dist: Vec<f64> = self.sample.points().map(|p| sq_dist(p, x)).collect();
        let r2 = kth_smallest(&mut dist, self.k);
        self.from_radius(r2.sqrt())
    }

    /// Density at sample point `i` with its own zero distance excluded: the
    /// k-th neighbour is taken among the other `n - 1` points.
    pub fn eval_leave_one_out(&self, i: usize) -> Result<f64> {
        if self.k >= self.sample.len() {
            return Err(ModalError::param(format!(
                "leave-one-out density needs k < n (k = {}, n = {})",
                self.k,
                self.sample.len()
            )));
        }
        let x = self.sample.point(i);
        let mut dist: Vec<f64> = self
            .sample
            .points()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, p)| sq_dist(p, x))
            .collect();
        let r2 = kth_smallest(&mut dist, self.k);
        self.from_radius(r2.sqrt())
    }

    fn from_radius(&self, r: f64) -> Result<f64> {
        if r == 0.0 {
            return Err(ModalError::InfiniteDensity);
        }
        let n = self.sample.len() as f64;
        Ok(self.k as f64 / (n * self.volume * r.powi(self.sample.dim() as i32)))
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum()
}

/// k-th order statistic (1-based) of the distances; ties resolve by value.
fn kth_smallest(v: &mut [f64], k: usize) -> f64 {
    let (_, kth, _) = v.select_nth_unstable_by(k - 1, |a, b| a.total_cmp(b));
    *kth
}

impl DensityModel for NearestNeighborModel {
    fn dim(&self) -> usize {
        self.sample.dim()
    }

    fn density(&self, x: &[f64]) -> Result<f64> {
        self.eval(x)
    }

    /// Median leave-one-out k-th neighbour distance.
    fn scale(&self) -> f64 {
        let n = self.sample.len();
        let m = n.min(200);
        let mut r: Vec<f64> = (0..m)
            .map(|i| {
                let x = self.sample.point(i * n / m);
                let mut d: Vec<f64> = self.sample.points().map(|p| sq_dist(p, x)).collect();
                let kk = (self.k + 1).min(n);
                kth_smallest(&mut d, kk).sqrt()
            })
            .collect();
        r.sort_by(|a, b| a.total_cmp(b));
        r[r.len() / 2].max(f64::MIN_POSITIVE)
    }

    fn support(&self) -> Vec<(f64, f64)> {
        self.sample.bounds()
    }
}

pub fn nn_density_eval(m: &NearestNeighborModel, x: &[f64]) -> Result<f64> {
    m.eval(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn model(v: &[f64], k: usize) -> NearestNeighborModel {
        NearestNeighborModel::new(Sample::univariate(v.to_vec()).unwrap(), k).unwrap()
    }

    #[test]
    fn unit_ball_volumes() {
        assert_eq!(unit_ball_volume(1), 2.0);
        assert!((unit_ball_volume(2) - PI).abs() < 1e-15);
        assert!((unit_ball_volume(3) - 4.0 * PI / 3.0).abs() < 1e-14);
        assert!((unit_ball_volume(4) - PI * PI / 2.0).abs() < 1e-14);
        // Gamma-function form
        for d in 1..10 {
            let g = statrs::function::gamma::gamma(1.0 + d as f64 / 2.0);
            assert!((unit_ball_volume(d) - PI.powf(d as f64 / 2.0) / g).abs() < 1e-12);
        }
    }

    #[test]
    fn definition_examples() {
        let m = model(&[0.0, 1.0, 3.0], 2);
        assert!((nn_density_eval(&m, &[0.5]).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        let m = model(&[0.0], 1);
        assert_eq!(nn_density_eval(&m, &[1.0]).unwrap(), 0.5);
    }

    #[test]
    fn duplicate_point_is_infinite() {
        let m = model(&[0.0, 1.0], 1);
        assert!(matches!(nn_density_eval(&m, &[1.0]), Err(ModalError::InfiniteDensity)));
        let m = model(&[1.0, 1.0, 4.0], 2);
        assert!(matches!(nn_density_eval(&m, &[1.0]), Err(ModalError::InfiniteDensity)));
        assert!(nn_density_eval(&m, &[4.0]).unwrap() > 0.0);
    }

    #[test]
    fn leave_one_out_skips_self() {
        let m = model(&[0.0, 1.0, 3.0], 1);
        // nearest other point to 3 is 1: 1 / (3 * 2 * 2)
        assert!((m.eval_leave_one_out(2).unwrap() - 1.0 / 12.0).abs() < 1e-15);
        assert!(model(&[0.0, 1.0], 2).eval_leave_one_out(0).is_err());
    }

    #[test]
    fn k_bounds() {
        let s = Sample::univariate(vec![0.0, 1.0]).unwrap();
        assert!(NearestNeighborModel::new(s.clone(), 0).is_err());
        assert!(NearestNeighborModel::new(s, 3).is_err());
    }

    #[test]
    fn positive_where_defined() {
        let m = model(&[0.0, 0.5, 2.0, 2.1, 7.0], 2);
        let mut x = -3.0;
        while x < 10.0 {
            if let Ok(v) = nn_density_eval(&m, &[x]) {
                assert!(v > 0.0 && v.is_finite());
            }
            x += 0.013;
        }
    }
}
