//! Evaluatable density models: a Gaussian kernel density estimator and an
//! analytic Gaussian-mixture oracle behind one contract, exposing value,
//! gradient, Hessian, and the D²×D Hessian derivative.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{manifold_probes, ManifoldSpec, ManifoldWeight, PointCloud};
use crate::mat::Mat;

/// Density values below this are treated as numerical underflow by
/// `log_eval` and the mean-shift iteration. Points this far out in the
/// tails should have been removed by denoising.
pub const DENSITY_FLOOR: f64 = 1e-300;

/// One Gaussian mixture component with axis-aligned covariance.
///
/// `sigma` holds per-axis standard deviations; an isotropic component
/// simply repeats the same value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussComponent {
    pub weight: f64,
    pub mean: Vec<f64>,
    pub sigma: Vec<f64>,
}

impl GaussComponent {
    pub fn isotropic(weight: f64, mean: Vec<f64>, sigma: f64) -> Self {
        let sigma = vec![sigma; mean.len()];
        GaussComponent {
            weight,
            mean,
            sigma,
        }
    }

    pub fn diagonal(weight: f64, mean: Vec<f64>, sigma: Vec<f64>) -> Self {
        GaussComponent {
            weight,
            mean,
            sigma,
        }
    }
}

/// Density value and derivatives at a point.
#[derive(Debug, Clone)]
pub struct LocalDensityInfo {
    /// Density (or log-density, after `to_log`).
    pub p: f64,
    /// Gradient.
    pub g: Vec<f64>,
    /// Symmetric D×D Hessian.
    pub hess: Mat,
    /// Optional D²×D Jacobian of vec(H); column j is the partial
    /// derivative of the column-stacked Hessian with respect to x_j.
    pub hprime: Option<Mat>,
}

impl LocalDensityInfo {
    /// Transform a density evaluation into the log-density one:
    /// value ln p, gradient g/p, Hessian H/p - g gᵀ/p².
    pub fn to_log(&self) -> LocalDensityInfo {
        let p = self.p;
        let d = self.g.len();
        let g: Vec<f64> = self.g.iter().map(|x| x / p).collect();
        let mut hess = self.hess.scale(1.0 / p);
        for k in 0..d {
            for l in 0..d {
                hess[(k, l)] -= g[k] * g[l];
            }
        }
        LocalDensityInfo {
            p: p.ln(),
            g,
            hess,
            hprime: None,
        }
    }
}

/// An evaluatable density: either a Gaussian KDE over a data set or a
/// finite Gaussian mixture. Immutable after construction; evaluation is
/// pure and safe to call from many threads.
#[derive(Debug, Clone)]
pub struct DensityModel {
    dim: usize,
    kind: Kind,
}

#[derive(Debug, Clone)]
enum Kind {
    Kde { data: PointCloud, bandwidth: f64 },
    Mixture { components: Vec<GaussComponent> },
}

/// Serializable description of a model for experiment reproducibility.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ModelDescription {
    Kde {
        bandwidth: f64,
        n: usize,
        dim: usize,
    },
    Mixture {
        components: Vec<GaussComponent>,
    },
}

impl DensityModel {
    pub fn kde(data: PointCloud, bandwidth: f64) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::EmptyPointCloud);
        }
        if !(bandwidth > 0.0) || !bandwidth.is_finite() {
            return Err(Error::InvalidParameter("bandwidth must be > 0".into()));
        }
        Ok(DensityModel {
            dim: data.dim(),
            kind: Kind::Kde { data, bandwidth },
        })
    }

    pub fn mixture(components: Vec<GaussComponent>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidParameter("mixture needs components".into()));
        }
        let dim = components[0].mean.len();
        let mut total = 0.0;
        for c in &components {
            if c.mean.len() != dim || c.sigma.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: c.mean.len().max(c.sigma.len()),
                });
            }
            if c.sigma.iter().any(|s| !(*s > 0.0)) {
                return Err(Error::InvalidParameter(
                    "component sigma must be > 0".into(),
                ));
            }
            if !(c.weight > 0.0) {
                return Err(Error::InvalidParameter(
                    "component weight must be > 0".into(),
                ));
            }
            total += c.weight;
        }
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "mixture weights must sum to 1 (got {total})"
            )));
        }
        Ok(DensityModel {
            dim,
            kind: Kind::Mixture { components },
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn description(&self) -> ModelDescription {
        match &self.kind {
            Kind::Kde { data, bandwidth } => ModelDescription::Kde {
                bandwidth: *bandwidth,
                n: data.len(),
                dim: self.dim,
            },
            Kind::Mixture { components } => ModelDescription::Mixture {
                components: components.clone(),
            },
        }
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: x.len(),
            });
        }
        Ok(())
    }

    /// Density, gradient, Hessian (and optionally the Hessian derivative)
    /// at `x`. Underflow to p = 0 far from the data is legal.
    pub fn eval(&self, x: &[f64], with_hprime: bool) -> Result<LocalDensityInfo> {
        self.check_dim(x)?;
        let d = self.dim;
        let mut acc = Accum::new(d, with_hprime);
        let mut u = vec![0.0; d];
        match &self.kind {
            Kind::Kde { data, bandwidth } => {
                let inv_var = 1.0 / (bandwidth * bandwidth);
                let wnorm = gauss_norm_iso(d, *bandwidth) / data.len() as f64;
                for xi in data.iter() {
                    let c = gauss_term_iso(x, xi, inv_var, wnorm, &mut u);
                    if c > 0.0 {
                        acc.add(c, &u, |_| inv_var);
                    }
                }
            }
            Kind::Mixture { components } => {
                for comp in components {
                    let c = gauss_term_diag(x, comp, &mut u);
                    if c > 0.0 {
                        let sig = &comp.sigma;
                        acc.add(c, &u, |k| 1.0 / (sig[k] * sig[k]));
                    }
                }
            }
        }
        Ok(acc.finish())
    }

    /// Log-density with gradient g/p and Hessian H/p - g gᵀ/p².
    pub fn log_eval(&self, x: &[f64]) -> Result<LocalDensityInfo> {
        let info = self.eval(x, false)?;
        if info.p < DENSITY_FLOOR {
            return Err(Error::DensityUnderflow { at: x.to_vec() });
        }
        Ok(info.to_log())
    }

    /// Density value only (cheap path for denoising and diagnostics).
    pub fn density(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        let d = self.dim;
        let mut u = vec![0.0; d];
        let p = match &self.kind {
            Kind::Kde { data, bandwidth } => {
                let inv_var = 1.0 / (bandwidth * bandwidth);
                let wnorm = gauss_norm_iso(d, *bandwidth) / data.len() as f64;
                data.iter()
                    .map(|xi| gauss_term_iso(x, xi, inv_var, wnorm, &mut u))
                    .sum()
            }
            Kind::Mixture { components } => components
                .iter()
                .map(|comp| gauss_term_diag(x, comp, &mut u))
                .sum(),
        };
        Ok(p)
    }

    /// Kernel-weighted mean-shift target m(x): for a KDE the weighted
    /// average of the data points, for a mixture the responsibility- and
    /// precision-weighted average of component means (coordinatewise),
    /// which reduces to the KDE formula when all component scales match
    /// the bandwidth.
    pub fn mean_shift_target(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.eval_with_target(x).map(|(_, m)| m)
    }

    /// Fused evaluation for the SCMS inner loop: derivatives and the
    /// mean-shift target from a single pass over the kernel terms.
    /// Errors with `DensityUnderflow` when the density at `x` falls below
    /// the floor (the target is undefined there).
    pub fn eval_with_target(&self, x: &[f64]) -> Result<(LocalDensityInfo, Vec<f64>)> {
        self.check_dim(x)?;
        let d = self.dim;
        let mut acc = Accum::new(d, false);
        let mut u = vec![0.0; d];
        let mut num = vec![0.0; d];
        let mut den = vec![0.0; d];
        match &self.kind {
            Kind::Kde { data, bandwidth } => {
                let inv_var = 1.0 / (bandwidth * bandwidth);
                let wnorm = gauss_norm_iso(d, *bandwidth) / data.len() as f64;
                for xi in data.iter() {
                    let c = gauss_term_iso(x, xi, inv_var, wnorm, &mut u);
                    if c > 0.0 {
                        acc.add(c, &u, |_| inv_var);
                        for k in 0..d {
                            num[k] += c * xi[k];
                            den[k] += c;
                        }
                    }
                }
            }
            Kind::Mixture { components } => {
                for comp in components {
                    let c = gauss_term_diag(x, comp, &mut u);
                    if c > 0.0 {
                        let sig = &comp.sigma;
                        acc.add(c, &u, |k| 1.0 / (sig[k] * sig[k]));
                        for k in 0..d {
                            let iv = 1.0 / (sig[k] * sig[k]);
                            num[k] += c * comp.mean[k] * iv;
                            den[k] += c * iv;
                        }
                    }
                }
            }
        }
        let info = acc.finish();
        if info.p < DENSITY_FLOOR {
            return Err(Error::DensityUnderflow { at: x.to_vec() });
        }
        let target = num.iter().zip(&den).map(|(n, dd)| n / dd).collect();
        Ok((info, target))
    }
}

/// Normalization constant of the isotropic D-dimensional Gaussian kernel.
fn gauss_norm_iso(d: usize, h: f64) -> f64 {
    (2.0 * std::f64::consts::PI).powf(-(d as f64) / 2.0) * h.powi(-(d as i32))
}

/// Weighted kernel value at `x` for an isotropic center; fills `u` with
/// (x - center)/h².
#[inline]
fn gauss_term_iso(x: &[f64], center: &[f64], inv_var: f64, wnorm: f64, u: &mut [f64]) -> f64 {
    let mut q = 0.0;
    for ((uk, &xk), &ck) in u.iter_mut().zip(x).zip(center) {
        let dk = xk - ck;
        q += dk * dk;
        *uk = dk * inv_var;
    }
    wnorm * (-0.5 * q * inv_var).exp()
}

/// Weighted component value at `x` for a diagonal-covariance component;
/// fills `u` with (x - mean) ⊘ sigma².
#[inline]
fn gauss_term_diag(x: &[f64], comp: &GaussComponent, u: &mut [f64]) -> f64 {
    let d = x.len();
    let mut q = 0.0;
    let mut norm = (2.0 * std::f64::consts::PI).powf(-(d as f64) / 2.0) * comp.weight;
    for k in 0..d {
        let s = comp.sigma[k];
        let iv = 1.0 / (s * s);
        let dk = x[k] - comp.mean[k];
        q += dk * dk * iv;
        u[k] = dk * iv;
        norm /= s;
    }
    norm * (-0.5 * q).exp()
}

struct Accum {
    dim: usize,
    p: f64,
    g: Vec<f64>,
    hess: Mat,
    hprime: Option<Mat>,
}

impl Accum {
    fn new(dim: usize, with_hprime: bool) -> Self {
        Accum {
            dim,
            p: 0.0,
            g: vec![0.0; dim],
            hess: Mat::zeros(dim, dim),
            hprime: if with_hprime {
                Some(Mat::zeros(dim * dim, dim))
            } else {
                None
            },
        }
    }

    /// Add one weighted Gaussian term with kernel value `c` and scaled
    /// offset `u` = (x - center) ⊘ σ²; `inv_var(k)` is 1/σ_k².
    #[inline]
    fn add(&mut self, c: f64, u: &[f64], inv_var: impl Fn(usize) -> f64 + Copy) {
        let d = self.dim;
        self.p += c;
        for (gk, &uk) in self.g.iter_mut().zip(u) {
            *gk -= c * uk;
        }
        for k in 0..d {
            for l in k..d {
                let mut v = u[k] * u[l];
                if k == l {
                    v -= inv_var(k);
                }
                self.hess[(k, l)] += c * v;
            }
        }
        if let Some(hp) = self.hprime.as_mut() {
            for j in 0..d {
                let uj = u[j];
                let ivj = inv_var(j);
                for l in 0..d {
                    for k in 0..d {
                        let hkl = u[k] * u[l] - if k == l { inv_var(k) } else { 0.0 };
                        let mut val = -uj * hkl;
                        if k == j {
                            val += u[l] * ivj;
                        }
                        if l == j {
                            val += u[k] * ivj;
                        }
                        hp[(k + d * l, j)] += c * val;
                    }
                }
            }
        }
    }

    fn finish(mut self) -> LocalDensityInfo {
        for k in 0..self.dim {
            for l in (k + 1)..self.dim {
                self.hess[(l, k)] = self.hess[(k, l)];
            }
        }
        LocalDensityInfo {
            p: self.p,
            g: self.g,
            hess: self.hess,
            hprime: self.hprime,
        }
    }
}

/// Silverman normal-reference bandwidth: the mean of per-coordinate
/// sample standard deviations times (4/((D+2)·n))^{1/(D+4)}.
pub fn silverman_bandwidth(x: &PointCloud) -> Result<f64> {
    let n = x.len();
    if n < 2 {
        return Err(Error::InvalidParameter(
            "Silverman bandwidth needs at least 2 points".into(),
        ));
    }
    let d = x.dim();
    let mut mean = vec![0.0; d];
    for p in x.iter() {
        for k in 0..d {
            mean[k] += p[k];
        }
    }
    for m in mean.iter_mut() {
        *m /= n as f64;
    }
    let mut ssd = vec![0.0; d];
    for p in x.iter() {
        for k in 0..d {
            let dk = p[k] - mean[k];
            ssd[k] += dk * dk;
        }
    }
    let sbar = ssd
        .iter()
        .map(|s| (s / (n as f64 - 1.0)).sqrt())
        .sum::<f64>()
        / d as f64;
    if sbar == 0.0 {
        return Err(Error::InvalidParameter(
            "all points identical: zero variance in every coordinate".into(),
        ));
    }
    let exponent = 1.0 / (d as f64 + 4.0);
    Ok(sbar * (4.0 / ((d as f64 + 2.0) * n as f64)).powf(exponent))
}

/// Discretize the manifold-plus-Gaussian-noise density as a finite
/// mixture: `m` isotropic components at equal arclength spacing on the
/// manifold, with weights proportional to the weight density there
/// (the arclength element is constant by construction), normalized to 1.
pub fn manifold_oracle(
    manifold: &ManifoldSpec,
    weight: ManifoldWeight,
    sigma: f64,
    m: usize,
) -> Result<DensityModel> {
    if !(sigma > 0.0) {
        return Err(Error::InvalidParameter("sigma must be > 0".into()));
    }
    if m < 2 {
        return Err(Error::InvalidParameter(
            "quadrature component count must be >= 2".into(),
        ));
    }
    if let ManifoldWeight::CosineTilt { amplitude } = weight {
        if !(0.0..1.0).contains(&amplitude) {
            return Err(Error::InvalidParameter(
                "cosine tilt amplitude must lie in [0, 1)".into(),
            ));
        }
    }
    let raw_weights: Vec<f64> = match (manifold, weight) {
        (ManifoldSpec::Circle { .. }, ManifoldWeight::Uniform) => vec![1.0; m],
        (ManifoldSpec::Circle { .. }, ManifoldWeight::CosineTilt { amplitude }) => (0..m)
            .map(|k| {
                let theta = 2.0 * std::f64::consts::PI * k as f64 / m as f64;
                1.0 + amplitude * theta.cos()
            })
            .collect(),
        (ManifoldSpec::Segments(_), ManifoldWeight::Uniform) => vec![1.0; m],
        (ManifoldSpec::Segments(_), ManifoldWeight::CosineTilt { .. }) => {
            return Err(Error::InvalidParameter(
                "nonuniform weight is only supported on the circle".into(),
            ))
        }
        (ManifoldSpec::Points(_), _) => {
            return Err(Error::InvalidParameter(
                "manifold oracle requires a circle or segments manifold".into(),
            ))
        }
    };
    let positions = manifold_probes(manifold, m)?;
    let total: f64 = raw_weights.iter().sum();
    let components: Vec<GaussComponent> = raw_weights
        .iter()
        .zip(positions.iter())
        .map(|(&w, pos)| GaussComponent::isotropic(w / total, pos.to_vec(), sigma))
        .collect();
    DensityModel::mixture(components)
}
