//! Gaussian mixtures: evaluation, EM fitting and BIC selection.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::mixture::covariance_matrix;
use crate::data::{MixtureSpec, Sample, SeedSpec};
use crate::density::{check_dim, DensityModel};
use crate::error::{ModalError, Result};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// A mixture specification with cached Cholesky factors.
#[derive(Debug, Clone)]
pub struct MixtureDensity {
    spec: MixtureSpec,
    chol: Vec<DMatrix<f64>>,
    /// `ln w_l - (d ln 2 pi + ln det S_l) / 2`
    log_norm: Vec<f64>,
    min_sd: f64,
}

impl MixtureDensity {
    pub fn new(spec: MixtureSpec) -> Result<Self> {
        spec.validate()?;
        let d = spec.dim() as f64;
        let mut chol = Vec::with_capacity(spec.components());
        let mut log_norm = Vec::with_capacity(spec.components());
        let mut min_eig = f64::INFINITY;
        for (w, c) in spec.weights.iter().zip(&spec.covariances) {
            let m = covariance_matrix(c);
            min_eig = min_eig.min(m.symmetric_eigenvalues().min());
            let l = m
                .cholesky()
                .ok_or_else(|| ModalError::InvalidMixture("covariance not positive definite".into()))?
                .l();
            let log_det: f64 = 2.0 * l.diagonal().iter().map(|v| v.ln()).sum::<f64>();
            log_norm.push(w.ln() - 0.5 * (d * LN_2PI + log_det));
            chol.push(l);
        }
        Ok(MixtureDensity {
            spec,
            chol,
            log_norm,
            min_sd: min_eig.sqrt(),
        })
    }

    pub fn spec(&self) -> &MixtureSpec {
        &self.spec
    }

    pub fn components(&self) -> usize {
        self.spec.components()
    }

    /// Whitened offset `L^-1 (x - mu_l)`.
    fn whiten(&self, l: usize, x: &[f64]) -> DVector<f64> {
        let diff = DVector::from_iterator(
            x.len(),
            x.iter().zip(&self.spec.means[l]).map(|(a, b)| a - b),
        );
        self.chol[l]
            .solve_lower_triangular(&diff)
            .expect("cholesky factor has a positive diagonal")
    }

    /// `ln(w_l f_l(x))` for every component.
    pub fn component_log_densities(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.spec.dim(), x)?;
        Ok((0..self.components())
            .map(|l| self.log_norm[l] - 0.5 * self.whiten(l, x).norm_squared())
            .collect())
    }

    pub fn log_density(&self, x: &[f64]) -> Result<f64> {
        Ok(log_sum_exp(&self.component_log_densities(x)?))
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        Ok(self.log_density(x)?.exp())
    }

    pub fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.spec.dim(), x)?;
        let mut g = DVector::zeros(x.len());
        for l in 0..self.components() {
            let y = self.whiten(l, x);
            let f = (self.log_norm[l] - 0.5 * y.norm_squared()).exp();
            // S^-1 (x - mu) = L^-T y
            let s_inv_diff = self.chol[l]
                .tr_solve_lower_triangular(&y)
                .expect("cholesky factor has a positive diagonal");
            g -= s_inv_diff * f;
        }
        Ok(g.iter().copied().collect())
    }
}

impl DensityModel for MixtureDensity {
    fn dim(&self) -> usize {
        self.spec.dim()
    }

    fn density(&self, x: &[f64]) -> Result<f64> {
        self.eval(x)
    }

    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        MixtureDensity::gradient(self, x)
    }

    fn has_gradient(&self) -> bool {
        true
    }

    fn scale(&self) -> f64 {
        self.min_sd
    }

    fn support(&self) -> Vec<(f64, f64)> {
        (0..self.spec.dim())
            .map(|j| {
                let mut lo = f64::INFINITY;
                let mut hi = f64::NEG_INFINITY;
                for (m, c) in self.spec.means.iter().zip(&self.spec.covariances) {
                    let s = c[j][j].sqrt();
                    lo = lo.min(m[j] - 3.0 * s);
                    hi = hi.max(m[j] + 3.0 * s);
                }
                (lo, hi)
            })
            .collect()
    }
}

pub(crate) fn log_sum_exp(v: &[f64]) -> f64 {
    let top = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if top == f64::NEG_INFINITY {
        return top;
    }
    top + v.iter().map(|x| (x - top).exp()).sum::<f64>().ln()
}

/// A maximum-likelihood Gaussian mixture fit.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(into = "GmmRecord", try_from = "GmmRecord")]
pub struct GaussianMixtureModel {
    density: MixtureDensity,
    pub log_likelihood: f64,
    pub bic: f64,
    /// Log-likelihood after every E-step of the winning initialisation.
    pub trace: Vec<f64>,
    /// Initialisations abandoned because a covariance collapsed.
    pub collapsed_restarts: usize,
}

#[derive(Serialize, Deserialize)]
struct GmmRecord {
    weights: Vec<f64>,
    means: Vec<Vec<f64>>,
    covariances: Vec<Vec<Vec<f64>>>,
    log_likelihood: f64,
    bic: f64,
}

impl From<GaussianMixtureModel> for GmmRecord {
    fn from(m: GaussianMixtureModel) -> Self {
        let spec = m.density.spec;
        GmmRecord {
            weights: spec.weights,
            means: spec.means,
            covariances: spec.covariances,
            log_likelihood: m.log_likelihood,
            bic: m.bic,
        }
    }
}

impl TryFrom<GmmRecord> for GaussianMixtureModel {
    type Error = ModalError;

    fn try_from(r: GmmRecord) -> Result<Self> {
        if !r.log_likelihood.is_finite() {
            return Err(ModalError::NonFinite("log-likelihood".into()));
        }
        let density = MixtureDensity::new(MixtureSpec {
            weights: r.weights,
            means: r.means,
            covariances: r.covariances,
        })?;
        Ok(GaussianMixtureModel {
            density,
            log_likelihood: r.log_likelihood,
            bic: r.bic,
            trace: Vec::new(),
            collapsed_restarts: 0,
        })
    }
}

impl GaussianMixtureModel {
    /// Wraps a known mixture, scoring it on `sample`.
    pub fn from_spec(spec: MixtureSpec, sample: &Sample) -> Result<Self> {
        let density = MixtureDensity::new(spec)?;
        let ll = sample
            .points()
            .map(|p| density.log_density(p))
            .sum::<Result<f64>>()?;
        let bic = bic(ll, density.components(), sample.dim(), sample.len());
        Ok(GaussianMixtureModel {
            density,
            log_likelihood: ll,
            bic,
            trace: vec![ll],
            collapsed_restarts: 0,
        })
    }

    pub fn density(&self) -> &MixtureDensity {
        &self.density
    }

    pub fn spec(&self) -> &MixtureSpec {
        self.density.spec()
    }

    pub fn components(&self) -> usize {
        self.density.components()
    }
}

/// Free parameters of an `l`-component full-covariance mixture in `d` dims.
pub fn parameter_count(l: usize, d: usize) -> usize {
    l - 1 + l * d + l * d * (d + 1) / 2
}

fn bic(ll: f64, l: usize, d: usize, n: usize) -> f64 {
    -2.0 * ll + parameter_count(l, d) as f64 * (n as f64).ln()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmConfig {
    /// Stop once the log-likelihood changes by less than this.
    pub tolerance: f64,
    pub max_iter: usize,
    pub restarts: usize,
    pub kmeans_iter: usize,
    /// Covariance eigenvalue floor, relative to the smallest data variance.
    pub collapse_floor: f64,
}

impl Default for EmConfig {
    fn default() -> Self {
        EmConfig {
            tolerance: 1e-8,
            max_iter: 500,
            restarts: 10,
            kmeans_iter: 20,
            collapse_floor: 1e-8,
        }
    }
}

struct Params {
    weights: Vec<f64>,
    means: Vec<Vec<f64>>,
    covs: Vec<DMatrix<f64>>,
}

struct Fit {
    params: Params,
    ll: f64,
    trace: Vec<f64>,
}

/// Fits an `l`-component full-covariance Gaussian mixture by EM, keeping the
/// best of several k-means++ initialisations.
pub fn fit_gmm_em(s: &Sample, l: usize, seed: SeedSpec) -> Result<GaussianMixtureModel> {
    fit_gmm_em_with(s, l, seed, &EmConfig::default())
}

pub fn fit_gmm_em_with(
    s: &Sample,
    l: usize,
    seed: SeedSpec,
    cfg: &EmConfig,
) -> Result<GaussianMixtureModel> {
    let (n, d) = (s.len(), s.dim());
    if l == 0 {
        return Err(ModalError::param("component count must be at least 1"));
    }
    if n < l * (d + 1) {
        return Err(ModalError::param(format!(
            "need at least {} points for {l} components in {d} dimensions, got {n}",
            l * (d + 1)
        )));
    }
    let data_var = s
        .variance()
        .iter()
        .map(|v| v * (n - 1) as f64 / n as f64)
        .fold(f64::INFINITY, f64::min);
    if !(data_var > 0.0) {
        return Err(ModalError::DegenerateFit { restarts: 0 });
    }
    let floor = cfg.collapse_floor * data_var;

    let mut best: Option<Fit> = None;
    let mut collapsed = 0;
    if l == 1 {
        let params = m_step(s, &vec![vec![1.0]; n], 1);
        if collapse(&params, floor) {
            return Err(ModalError::DegenerateFit { restarts: 1 });
        }
        let (_, ll) = e_step(s, &params)?;
        best = Some(Fit { params, ll, trace: vec![ll] });
    } else {
        for r in 0..cfg.restarts {
            let mut rng = seed.child(r as u64).rng();
            match run_em(s, l, &mut rng, cfg, floor) {
                Some(fit) => {
                    if best.as_ref().map_or(true, |b| fit.ll > b.ll) {
                        best = Some(fit);
                    }
                }
                None => collapsed += 1,
            }
        }
    }
    let fit = best.ok_or(ModalError::DegenerateFit { restarts: cfg.restarts })?;
    let spec = MixtureSpec {
        weights: fit.params.weights,
        means: fit.params.means,
        covariances: fit
            .params
            .covs
            .iter()
            .map(|c| (0..d).map(|i| (0..d).map(|j| 0.5 * (c[(i, j)] + c[(j, i)])).collect()).collect())
            .collect(),
    };
    // renormalise against accumulated rounding so validation's 1e-12 check holds
    let total: f64 = spec.weights.iter().sum();
    let spec = MixtureSpec {
        weights: spec.weights.iter().map(|w| w / total).collect(),
        ..spec
    };
    let density = MixtureDensity::new(spec)?;
    Ok(GaussianMixtureModel {
        density,
        log_likelihood: fit.ll,
        bic: bic(fit.ll, l, d, n),
        trace: fit.trace,
        collapsed_restarts: collapsed,
    })
}

fn run_em(s: &Sample, l: usize, rng: &mut impl Rng, cfg: &EmConfig, floor: f64) -> Option<Fit> {
    let labels = kmeans_pp(s, l, cfg.kmeans_iter, rng);
    let mut resp = vec![vec![0.0; l]; s.len()];
    for (r, &k) in resp.iter_mut().zip(&labels) {
        r[k] = 1.0;
    }
    let mut params = m_step(s, &resp, l);
    if collapse(&params, floor) {
        return None;
    }
    let mut trace = Vec::new();
    let mut prev = f64::NEG_INFINITY;
    for _ in 0..cfg.max_iter {
        let (r, ll) = e_step(s, &params).ok()?;
        if !ll.is_finite() {
            return None;
        }
        trace.push(ll);
        if (ll - prev).abs() < cfg.tolerance {
            return Some(Fit { params, ll, trace });
        }
        prev = ll;
        resp = r;
        params = m_step(s, &resp, l);
        if collapse(&params, floor) {
            return None;
        }
    }
    let (_, ll) = e_step(s, &params).ok()?;
    trace.push(ll);
    Some(Fit { params, ll, trace })
}

fn collapse(p: &Params, floor: f64) -> bool {
    p.weights.iter().any(|w| !(*w > 0.0))
        || p.covs.iter().any(|c| {
            let e = c.clone().symmetric_eigenvalues().min();
            !(e >= floor) || !e.is_finite()
        })
}

fn m_step(s: &Sample, resp: &[Vec<f64>], l: usize) -> Params {
    let (n, d) = (s.len(), s.dim());
    let mut mass = vec![0.0; l];
    let mut means = vec![vec![0.0; d]; l];
    for (p, r) in s.points().zip(resp) {
        for k in 0..l {
            mass[k] += r[k];
            for j in 0..d {
                means[k][j] += r[k] * p[j];
            }
        }
    }
    for k in 0..l {
        if mass[k] > 0.0 {
            means[k].iter_mut().for_each(|v| *v /= mass[k]);
        }
    }
    let mut covs = vec![DMatrix::zeros(d, d); l];
    for (p, r) in s.points().zip(resp) {
        for k in 0..l {
            if r[k] == 0.0 {
                continue;
            }
            for i in 0..d {
                let di = p[i] - means[k][i];
                for j in 0..=i {
                    covs[k][(i, j)] += r[k] * di * (p[j] - means[k][j]);
                }
            }
        }
    }
    for k in 0..l {
        for i in 0..d {
            for j in 0..=i {
                let v = if mass[k] > 0.0 { covs[k][(i, j)] / mass[k] } else { 0.0 };
                covs[k][(i, j)] = v;
                covs[k][(j, i)] = v;
            }
        }
    }
    Params {
        weights: mass.iter().map(|m| m / n as f64).collect(),
        means,
        covs,
    }
}

/// Responsibilities and total log-likelihood.
fn e_step(s: &Sample, p: &Params) -> Result<(Vec<Vec<f64>>, f64)> {
    let spec = MixtureSpec {
        weights: p.weights.clone(),
        means: p.means.clone(),
        covariances: p
            .covs
            .iter()
            .map(|c| (0..c.nrows()).map(|i| c.row(i).iter().copied().collect()).collect())
            .collect(),
    };
    let density = MixtureDensity::new_unchecked(spec)?;
    let mut ll = 0.0;
    let mut resp = Vec::with_capacity(s.len());
    for x in s.points() {
        let logs = density.component_log_densities(x)?;
        let lse = log_sum_exp(&logs);
        ll += lse;
        resp.push(logs.iter().map(|v| (v - lse).exp()).collect());
    }
    Ok((resp, ll))
}

impl MixtureDensity {
    /// Skips the weight-sum check, which accumulated EM rounding can trip.
    fn new_unchecked(spec: MixtureSpec) -> Result<Self> {
        let d = spec.dim() as f64;
        let mut chol = Vec::with_capacity(spec.components());
        let mut log_norm = Vec::with_capacity(spec.components());
        for (w, c) in spec.weights.iter().zip(&spec.covariances) {
            let l = covariance_matrix(c)
                .cholesky()
                .ok_or_else(|| ModalError::InvalidMixture("covariance not positive definite".into()))?
                .l();
            let log_det: f64 = 2.0 * l.diagonal().iter().map(|v| v.ln()).sum::<f64>();
            log_norm.push(w.ln() - 0.5 * (d * LN_2PI + log_det));
            chol.push(l);
        }
        Ok(MixtureDensity {
            spec,
            chol,
            log_norm,
            min_sd: f64::NAN,
        })
    }
}

/// k-means++ seeding followed by Lloyd iterations; returns hard labels.
fn kmeans_pp(s: &Sample, l: usize, iters: usize, rng: &mut impl Rng) -> Vec<usize> {
    let n = s.len();
    let dist2 = |a: &[f64], b: &[f64]| -> f64 { a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum() };
    let mut centers: Vec<Vec<f64>> = vec![s.point(rng.gen_range(0..n)).to_vec()];
    let mut nearest: Vec<f64> = s.points().map(|p| dist2(p, &centers[0])).collect();
    while centers.len() < l {
        let total: f64 = nearest.iter().sum();
        let idx = if total > 0.0 {
            let mut u = rng.gen::<f64>() * total;
            let mut pick = n - 1;
            for (i, d) in nearest.iter().enumerate() {
                if u < *d {
                    pick = i;
                    break;
                }
                u -= d;
            }
            pick
        } else {
            rng.gen_range(0..n)
        };
        centers.push(s.point(idx).to_vec());
        let c = centers.last().unwrap();
        for (m, p) in nearest.iter_mut().zip(s.points()) {
            *m = m.min(dist2(p, c));
        }
    }
    let mut labels = vec![0; n];
    for _ in 0..iters.max(1) {
        let mut changed = false;
        for (lab, p) in labels.iter_mut().zip(s.points()) {
            let best = (0..l)
                .min_by(|&a, &b| dist2(p, &centers[a]).total_cmp(&dist2(p, &centers[b])))
                .unwrap();
            if *lab != best {
                *lab = best;
                changed = true;
            }
        }
        let d = s.dim();
        let mut sums = vec![vec![0.0; d]; l];
        let mut counts = vec![0usize; l];
        for (lab, p) in labels.iter().zip(s.points()) {
            counts[*lab] += 1;
            for j in 0..d {
                sums[*lab][j] += p[j];
            }
        }
        for k in 0..l {
            if counts[k] > 0 {
                centers[k] = sums[k].iter().map(|v| v / counts[k] as f64).collect();
            }
        }
        if !changed {
            break;
        }
    }
    labels
}

/// Fits `L = 1..=max_components` and keeps the fit with the smallest BIC
/// (`-2 ln L + p ln n`), preferring fewer components on ties.
pub fn select_gmm_bic(s: &Sample, max_components: usize, seed: SeedSpec) -> Result<GaussianMixtureModel> {
    if max_components == 0 {
        return Err(ModalError::param("maximum component count must be at least 1"));
    }
    let mut best: Option<GaussianMixtureModel> = None;
    for l in 1..=max_components {
        let fit = fit_gmm_em(s, l, seed)?;
        if best.as_ref().map_or(true, |b| fit.bic < b.bic) {
            best = Some(fit);
        }
    }
    Ok(best.expect("at least one candidate"))
}
