//! Subspace-constrained mean shift, the full ridge-finding pipeline
//! (density estimation, low-density denoising, SCMS), an RK4 integrator
//! for the projected-gradient flow, and path-level diagnostics.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::density::{silverman_bandwidth, DensityModel, LocalDensityInfo, DENSITY_FLOOR};
use crate::error::{Error, Result};
use crate::geometry::PointCloud;
use crate::mat::{dist, norm, vaxpy, vsub};
use crate::spectral::{spectral_frame, SpectralFrame};

/// Pipeline configuration. `bandwidth: None` selects the Silverman rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfConfig {
    /// Target ridge dimension, 0 <= d < D.
    pub d: usize,
    /// Kernel bandwidth; defaults to the Silverman rule when absent.
    pub bandwidth: Option<f64>,
    /// Denoise cutoff as a fraction of the maximum mesh density.
    pub threshold_frac: f64,
    /// Ascend the log-density (projector from the log-Hessian) instead of
    /// the density itself.
    pub use_log: bool,
    /// Convergence threshold on the step displacement ||x_{t+1} - x_t||.
    pub step_tol: f64,
    /// Convergence threshold on the relative projected gradient ||G||/||g||.
    pub grad_tol: f64,
    pub max_iter: usize,
}

impl SurfConfig {
    pub fn new(d: usize) -> Self {
        SurfConfig {
            d,
            bandwidth: None,
            threshold_frac: 0.05,
            use_log: true,
            step_tol: 1e-7,
            grad_tol: 1e-6,
            max_iter: 500,
        }
    }

    fn validate(&self, dim: usize) -> Result<()> {
        if self.d >= dim {
            return Err(Error::InvalidParameter(format!(
                "ridge dimension d={} must be < D={dim}",
                self.d
            )));
        }
        if !(self.threshold_frac >= 0.0 && self.threshold_frac < 1.0) {
            return Err(Error::InvalidParameter(
                "threshold_frac must lie in [0, 1)".into(),
            ));
        }
        if !(self.step_tol > 0.0) || !(self.grad_tol > 0.0) {
            return Err(Error::InvalidParameter("tolerances must be > 0".into()));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidParameter("max_iter must be >= 1".into()));
        }
        if let Some(h) = self.bandwidth {
            if !(h > 0.0) {
                return Err(Error::InvalidParameter("bandwidth must be > 0".into()));
            }
        }
        Ok(())
    }
}

/// Why a mesh point stopped.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PointStatus {
    Converged { iterations: usize },
    MaxIterReached,
    Denoised,
    Underflow,
}

/// Convergence diagnostics evaluated at a trajectory's final point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointDiagnostics {
    /// Density at the destination.
    pub density: f64,
    /// ||G|| / ||g|| at the destination.
    pub grad_ratio: f64,
    /// λ_{d+1} of the (log-)Hessian at the destination.
    pub lambda_next: f64,
    /// λ_d - λ_{d+1} at the destination.
    pub eigengap: f64,
}

/// Outcome of one mesh point, in input order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeshPointOutcome {
    pub origin: Vec<f64>,
    pub status: PointStatus,
    /// Final iterate; present for converged and max-iter points.
    pub destination: Option<Vec<f64>>,
    pub diagnostics: Option<PointDiagnostics>,
}

/// Result of running SCMS over a mesh: one record per mesh point plus the
/// fully resolved configuration for reproducibility.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RidgeEstimate {
    pub dim: usize,
    pub config: SurfConfig,
    pub records: Vec<MeshPointOutcome>,
}

impl RidgeEstimate {
    /// Converged destinations, in mesh order.
    pub fn ridge_points(&self) -> PointCloud {
        let mut pc = PointCloud::empty(self.dim).expect("dim >= 1");
        for r in &self.records {
            if matches!(r.status, PointStatus::Converged { .. }) {
                pc.push(
                    r.destination
                        .as_ref()
                        .expect("converged point has destination"),
                )
                .expect("destination has model dimension");
            }
        }
        pc
    }

    /// Mesh points that produced the converged destinations, same order.
    pub fn origins(&self) -> PointCloud {
        let mut pc = PointCloud::empty(self.dim).expect("dim >= 1");
        for r in &self.records {
            if matches!(r.status, PointStatus::Converged { .. }) {
                pc.push(&r.origin).expect("origin has model dimension");
            }
        }
        pc
    }

    pub fn count(&self, pred: impl Fn(&PointStatus) -> bool) -> usize {
        self.records.iter().filter(|r| pred(&r.status)).count()
    }
}

/// Gradient/Hessian pair on the scale being ascended (p or log p), and
/// the raw density for diagnostics.
fn objective_info(info: LocalDensityInfo, use_log: bool) -> (f64, LocalDensityInfo) {
    let p = info.p;
    if use_log {
        (p, info.to_log())
    } else {
        (p, info)
    }
}

struct StepEval {
    next: Vec<f64>,
    grad_ratio: f64,
    p: f64,
    lambda_next: f64,
    eigengap: f64,
}

/// One SCMS evaluation at `x`: spectral frame of the (log-)Hessian,
/// relative projected gradient, and the projected mean-shift update
/// x + L(x)(m(x) - x).
fn eval_step(model: &DensityModel, x: &[f64], d: usize, use_log: bool) -> Result<StepEval> {
    let (raw, target) = model.eval_with_target(x)?;
    let (p, obj) = objective_info(raw, use_log);
    let frame = spectral_frame(&obj.g, &obj.hess, d)?;
    let gn = norm(&obj.g);
    let grad_ratio = if gn == 0.0 {
        0.0
    } else {
        norm(&frame.g_proj) / gn
    };
    let shift = vsub(&target, x);
    let next = vaxpy(x, 1.0, &frame.l.matvec(&shift));
    Ok(StepEval {
        next,
        grad_ratio,
        p,
        lambda_next: frame.lambda_next,
        eigengap: frame.eigengap,
    })
}

/// A single subspace-constrained mean-shift update of `x`.
pub fn scms_step(model: &DensityModel, x: &[f64], d: usize, use_log: bool) -> Result<Vec<f64>> {
    eval_step(model, x, d, use_log).map(|s| s.next)
}

fn run_point(model: &DensityModel, x0: &[f64], config: &SurfConfig) -> MeshPointOutcome {
    let mut x = x0.to_vec();
    let mut status = PointStatus::MaxIterReached;
    for iter in 0..config.max_iter {
        let step = match eval_step(model, &x, config.d, config.use_log) {
            Ok(s) => s,
            Err(Error::DensityUnderflow { .. }) => {
                return MeshPointOutcome {
                    origin: x0.to_vec(),
                    status: PointStatus::Underflow,
                    destination: None,
                    diagnostics: None,
                }
            }
            Err(e) => unreachable!("scms step cannot fail structurally: {e}"),
        };
        if step.grad_ratio <= config.grad_tol {
            status = PointStatus::Converged { iterations: iter };
            break;
        }
        let moved = dist(&step.next, &x);
        x = step.next;
        if moved <= config.step_tol {
            status = PointStatus::Converged {
                iterations: iter + 1,
            };
            break;
        }
    }
    // diagnostics at the final point
    let diagnostics = eval_step(model, &x, config.d, config.use_log)
        .ok()
        .map(|s| PointDiagnostics {
            density: s.p,
            grad_ratio: s.grad_ratio,
            lambda_next: s.lambda_next,
            eigengap: s.eigengap,
        });
    MeshPointOutcome {
        origin: x0.to_vec(),
        status,
        destination: Some(x),
        diagnostics,
    }
}

fn run_mesh(
    model: &DensityModel,
    mesh: &PointCloud,
    config: &SurfConfig,
    denoised: Option<&[bool]>,
) -> Vec<MeshPointOutcome> {
    (0..mesh.len())
        .into_par_iter()
        .map(|i| {
            if denoised.map(|m| m[i]).unwrap_or(false) {
                MeshPointOutcome {
                    origin: mesh.point(i).to_vec(),
                    status: PointStatus::Denoised,
                    destination: None,
                    diagnostics: None,
                }
            } else {
                run_point(model, mesh.point(i), config)
            }
        })
        .collect()
}

/// Run SCMS from every mesh point until the step displacement or the
/// relative projected gradient falls below tolerance. Per-point failures
/// are statuses, never errors; mesh points are independent, so parallel
/// execution matches sequential output point for point.
pub fn scms_run(
    model: &DensityModel,
    mesh: &PointCloud,
    config: &SurfConfig,
) -> Result<RidgeEstimate> {
    if mesh.is_empty() {
        return Err(Error::EmptyPointCloud);
    }
    if mesh.dim() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            actual: mesh.dim(),
        });
    }
    config.validate(model.dim())?;
    Ok(RidgeEstimate {
        dim: model.dim(),
        config: config.clone(),
        records: run_mesh(model, mesh, config, None),
    })
}

/// The full pipeline: build the kernel density estimator (Silverman
/// bandwidth unless one is given), take the data as the mesh, drop mesh
/// points below `threshold_frac` of the maximum mesh density, and run
/// SCMS on the survivors. The returned config has the bandwidth resolved.
pub fn surf(data: &PointCloud, config: &SurfConfig) -> Result<RidgeEstimate> {
    if data.len() < 2 {
        return Err(Error::InvalidParameter(
            "surf needs at least 2 data points".into(),
        ));
    }
    config.validate(data.dim())?;
    let bandwidth = match config.bandwidth {
        Some(h) => h,
        None => silverman_bandwidth(data)?,
    };
    let mut resolved = config.clone();
    resolved.bandwidth = Some(bandwidth);
    let model = DensityModel::kde(data.clone(), bandwidth)?;
    let densities: Vec<f64> = (0..data.len())
        .into_par_iter()
        .map(|i| {
            model
                .density(data.point(i))
                .expect("mesh point has model dimension")
        })
        .collect();
    let max_p = densities.iter().fold(0.0_f64, |a, &b| a.max(b));
    let threshold = resolved.threshold_frac * max_p;
    let denoised: Vec<bool> = densities.iter().map(|&p| p < threshold).collect();
    if denoised.iter().all(|&d| d) {
        return Err(Error::EmptyMeshAfterDenoise);
    }
    Ok(RidgeEstimate {
        dim: data.dim(),
        config: resolved.clone(),
        records: run_mesh(&model, data, &resolved, Some(&denoised)),
    })
}

/// One sample along an integrated ascent path.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveSample {
    /// Arclength from the start of the curve.
    pub s: f64,
    pub x: Vec<f64>,
    /// Objective at `x`: the density, or its log when the curve was
    /// integrated on the log scale.
    pub value: f64,
}

/// A numerically integrated trajectory of the unit-speed projected
/// gradient field G/||G||.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntegralCurve {
    pub samples: Vec<CurveSample>,
    pub destination: Vec<f64>,
    /// Set when max_len was exhausted before convergence.
    pub truncated: bool,
    pub use_log: bool,
    pub d: usize,
}

struct FieldEval {
    /// Unit ascent direction (zero vector exactly on the ridge).
    dir: Vec<f64>,
    grad_ratio: f64,
    value: f64,
}

fn field(model: &DensityModel, x: &[f64], d: usize, use_log: bool) -> Result<FieldEval> {
    let raw = if use_log {
        model.log_eval(x)?
    } else {
        let info = model.eval(x, false)?;
        if info.p < DENSITY_FLOOR {
            return Err(Error::DensityUnderflow { at: x.to_vec() });
        }
        info
    };
    let value = raw.p;
    let frame: SpectralFrame = spectral_frame(&raw.g, &raw.hess, d)?;
    let gn = norm(&raw.g);
    let pn = norm(&frame.g_proj);
    let grad_ratio = if gn == 0.0 { 0.0 } else { pn / gn };
    let dir = if pn == 0.0 {
        vec![0.0; x.len()]
    } else {
        frame.g_proj.iter().map(|v| v / pn).collect()
    };
    Ok(FieldEval {
        dir,
        grad_ratio,
        value,
    })
}

fn rk4_step(model: &DensityModel, x: &[f64], h: f64, d: usize, use_log: bool) -> Result<Vec<f64>> {
    let k1 = field(model, x, d, use_log)?.dir;
    let k2 = field(model, &vaxpy(x, 0.5 * h, &k1), d, use_log)?.dir;
    let k3 = field(model, &vaxpy(x, 0.5 * h, &k2), d, use_log)?.dir;
    let k4 = field(model, &vaxpy(x, h, &k3), d, use_log)?.dir;
    let mut next = x.to_vec();
    for k in 0..x.len() {
        next[k] += h / 6.0 * (k1[k] + 2.0 * k2[k] + 2.0 * k3[k] + k4[k]);
    }
    Ok(next)
}

/// Integrate the unit-speed ascent field +G/||G|| from `x0` with
/// fixed-arclength 4th-order Runge-Kutta steps.
///
/// Terminates when ||G||/||g|| <= grad_tol or when the ridge crossing has
/// been localized: a unit-speed field reverses across the ridge, so a
/// step whose endpoint direction opposes its start direction is retried
/// at half length, and the cascade bottoms out (at step·1e-8) exactly on
/// the ridge. Samples keep the configured spacing; the refinement
/// produces at most one final partial step, provided `step` is below the
/// curvature scale of the flow (halving then only triggers at the
/// ridge). Hitting `max_len` first sets the truncation flag instead.
pub fn integral_curve(
    model: &DensityModel,
    x0: &[f64],
    d: usize,
    use_log: bool,
    step: f64,
    grad_tol: f64,
    max_len: f64,
) -> Result<IntegralCurve> {
    if !(step > 0.0) || !(grad_tol > 0.0) || !(max_len > 0.0) {
        return Err(Error::InvalidParameter(
            "step, grad_tol and max_len must be > 0".into(),
        ));
    }
    let f0 = field(model, x0, d, use_log)?;
    let mut samples = vec![CurveSample {
        s: 0.0,
        x: x0.to_vec(),
        value: f0.value,
    }];
    let mut x = x0.to_vec();
    let mut s = 0.0;
    let mut cur_step = step;
    let mut partial_since_sample = false;
    let mut truncated = false;
    loop {
        let fe = field(model, &x, d, use_log)?;
        if fe.grad_ratio <= grad_tol || cur_step <= step * 1e-8 {
            break;
        }
        if s >= max_len {
            truncated = true;
            break;
        }
        let candidate = rk4_step(model, &x, cur_step, d, use_log)?;
        let dir_after = field(model, &candidate, d, use_log)?.dir;
        let advance = dist(&candidate, &x);
        // overshoot: the unit-speed field reverses across the ridge, so
        // either the endpoint direction opposes the start direction or
        // the stages cancel and the net advance collapses
        if crate::mat::dot(&dir_after, &fe.dir) < 0.0 || advance < 0.9 * cur_step {
            cur_step *= 0.5;
            continue;
        }
        x = candidate;
        s += cur_step;
        if cur_step == step {
            samples.push(CurveSample {
                s,
                x: x.clone(),
                value: field(model, &x, d, use_log)?.value,
            });
        } else {
            partial_since_sample = true;
        }
    }
    if partial_since_sample {
        samples.push(CurveSample {
            s,
            x: x.clone(),
            value: field(model, &x, d, use_log)?.value,
        });
    }
    Ok(IntegralCurve {
        samples,
        destination: x,
        truncated,
        use_log,
        d,
    })
}

/// Drop of the objective along an integrated path, measured from its
/// destination, together with the monotonicity and quadratic-lower-bound
/// checks. `xi[i]` corresponds to `samples[i]`, so the final entry is 0.
#[derive(Debug, Clone, PartialEq)]
pub struct PathDiagnostics {
    pub xi: Vec<f64>,
    /// ξ is nondecreasing in arclength-from-destination (equivalently the
    /// objective never decreases along the traversal).
    pub monotone: bool,
    /// ξ(s) >= (beta_est/4)·||destination - γ(s)||² at every sample.
    pub quadratic_lb_ok: bool,
    /// |λ_{d+1}| at the destination times the safety factor.
    pub beta_est: f64,
}

pub fn path_diagnostics(
    curve: &IntegralCurve,
    model: &DensityModel,
    safety: f64,
) -> Result<PathDiagnostics> {
    if curve.truncated {
        return Err(Error::TruncatedCurve);
    }
    if curve.samples.len() < 3 {
        return Err(Error::InvalidParameter(
            "path diagnostics need at least 3 samples".into(),
        ));
    }
    if !(safety > 0.0) {
        return Err(Error::InvalidParameter("safety factor must be > 0".into()));
    }
    let dest_value = curve.samples.last().expect("nonempty").value;
    let xi: Vec<f64> = curve
        .samples
        .iter()
        .map(|smp| dest_value - smp.value)
        .collect();
    // traversal runs toward the destination, so ξ must not increase
    let monotone = xi.windows(2).all(|w| w[1] <= w[0] + 1e-12);
    let raw = if curve.use_log {
        model.log_eval(&curve.destination)?
    } else {
        model.eval(&curve.destination, false)?
    };
    let frame = spectral_frame(&raw.g, &raw.hess, curve.d)?;
    let beta_est = frame.lambda_next.abs() * safety;
    let quadratic_lb_ok = curve.samples.iter().zip(&xi).all(|(smp, &xv)| {
        let r2 = dist(&curve.destination, &smp.x).powi(2);
        xv + 1e-12 >= 0.25 * beta_est * r2
    });
    Ok(PathDiagnostics {
        xi,
        monotone,
        quadratic_lb_ok,
        beta_est,
    })
}
