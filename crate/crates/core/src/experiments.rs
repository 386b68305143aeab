//! Scaling studies: estimation error against sample size, surrogate bias
//! against noise scale, and the bandwidth sweep, each emitting a
//! structured, reproducible report.

use std::time::Instant;

use serde::Serialize;

use crate::density::manifold_oracle;
use crate::error::{Error, Result};
use crate::geometry::{
    dilation_components, distance_to_set, hausdorff, hausdorff_to_manifold, manifold_probes,
    ManifoldSpec, PointCloud,
};
use crate::ridge::{scms_run, surf, PointStatus, SurfConfig};
use crate::rng::SplitMix64;
use crate::synth::HiddenManifoldModel;

/// One (setting, seed) execution.
///
/// Runtime is kept in memory for profiling but deliberately excluded from
/// the serialized report so identical runs produce identical JSON.
#[derive(Debug, Clone, Serialize)]
pub struct CellResult {
    pub setting: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub hausdorff: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub components: Option<usize>,
    pub failed: bool,
    #[serde(skip)]
    pub runtime_secs: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SettingSummary {
    pub setting: f64,
    pub median: Option<f64>,
    pub iqr: Option<f64>,
    pub failed_cells: usize,
}

/// Ordinary least squares fit of log(median) against log(setting).
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub kind: String,
    pub grid: Vec<f64>,
    pub cells: Vec<CellResult>,
    pub summary: Vec<SettingSummary>,
    /// Present only when at least 3 grid settings have a usable median.
    pub fitted_slope: Option<SlopeFit>,
    /// Complete resolved configuration; a report is reconstructible from
    /// its artifacts alone.
    pub config: serde_json::Value,
}

impl ExperimentReport {
    pub fn to_json_pretty(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// One row per cell for external plotting.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("setting,seed,hausdorff,components,failed\n");
        for c in &self.cells {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                crate::geometry::format_float(c.setting),
                c.seed.map(|s| s.to_string()).unwrap_or_default(),
                c.hausdorff
                    .map(crate::geometry::format_float)
                    .unwrap_or_default(),
                c.components.map(|k| k.to_string()).unwrap_or_default(),
                c.failed
            ));
        }
        out
    }
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let pos = q * (n - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

fn summarize(grid: &[f64], cells: &[CellResult]) -> Vec<SettingSummary> {
    grid.iter()
        .map(|&setting| {
            let mut values: Vec<f64> = cells
                .iter()
                .filter(|c| c.setting == setting && !c.failed)
                .filter_map(|c| c.hausdorff)
                .collect();
            let failed_cells = cells
                .iter()
                .filter(|c| c.setting == setting && c.failed)
                .count();
            values.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let (median, iqr) = if values.is_empty() {
                (None, None)
            } else {
                (
                    Some(quantile(&values, 0.5)),
                    Some(quantile(&values, 0.75) - quantile(&values, 0.25)),
                )
            };
            SettingSummary {
                setting,
                median,
                iqr,
                failed_cells,
            }
        })
        .collect()
}

fn fit_slope(summary: &[SettingSummary]) -> Option<SlopeFit> {
    let pts: Vec<(f64, f64)> = summary
        .iter()
        .filter_map(|s| s.median.map(|m| (s.setting.ln(), m.ln())))
        .collect();
    let k = pts.len();
    if k < 3 {
        return None;
    }
    let xbar = pts.iter().map(|p| p.0).sum::<f64>() / k as f64;
    let ybar = pts.iter().map(|p| p.1).sum::<f64>() / k as f64;
    let sxx: f64 = pts.iter().map(|p| (p.0 - xbar).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - xbar) * (p.1 - ybar)).sum();
    let slope = sxy / sxx;
    let intercept = ybar - slope * xbar;
    let ssr: f64 = pts
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum();
    let stderr = if k > 2 {
        (ssr / (k - 2) as f64 / sxx).sqrt()
    } else {
        f64::NAN
    };
    Some(SlopeFit { slope, stderr })
}

/// Reference set against which the recovered ridge is measured.
#[derive(Debug, Clone, Copy, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RateReference {
    /// Dense deterministic probes on the true manifold.
    Manifold { probes: usize },
    /// The ridge of the noise-convolved oracle density, computed once by
    /// running SCMS on the analytic mixture from on-manifold starts.
    OracleRidge { quadrature: usize, starts: usize },
}

#[derive(Debug, Clone, Serialize)]
pub struct RateConfig {
    pub n_grid: Vec<usize>,
    pub replications: usize,
    pub surf: SurfConfig,
    pub reference: RateReference,
    /// Converged points farther than this from the reference are
    /// discarded before the Hausdorff distance is taken (the theory
    /// restricts the estimate to a neighborhood of the reference).
    /// Default: 3 sigma²/r for a circle, 3 sigma² otherwise.
    pub delta_restrict: Option<f64>,
}

fn default_delta_restrict(model: &HiddenManifoldModel) -> f64 {
    let s2 = model.sigma * model.sigma;
    match &model.manifold {
        ManifoldSpec::Circle { radius, .. } => 3.0 * s2 / radius,
        _ => 3.0 * s2,
    }
}

/// Build the reference point set for a rate experiment.
fn build_reference(model: &HiddenManifoldModel, reference: &RateReference) -> Result<PointCloud> {
    match reference {
        RateReference::Manifold { probes } => manifold_probes(&model.manifold, *probes),
        RateReference::OracleRidge { quadrature, starts } => {
            let oracle = manifold_oracle(&model.manifold, model.weight, model.sigma, *quadrature)?;
            let start_points = manifold_probes(&model.manifold, *starts)?;
            let mut cfg = SurfConfig::new(1);
            cfg.use_log = true;
            let est = scms_run(&oracle, &start_points, &cfg)?;
            let pts = est.ridge_points();
            if pts.is_empty() {
                return Err(Error::InvalidParameter(
                    "oracle ridge computation produced no converged points".into(),
                ));
            }
            Ok(pts)
        }
    }
}

/// Estimation error against sample size: for each (n, replication) draw a
/// sample, run the pipeline, restrict the recovered ridge to the
/// neighborhood of the reference, and record the Hausdorff distance.
/// Replication r reuses the same derived seed across the whole n-grid, so
/// the samples are nested prefixes.
pub fn rate_experiment(model: &HiddenManifoldModel, cfg: &RateConfig) -> Result<ExperimentReport> {
    if cfg.n_grid.len() < 3 || cfg.n_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter(
            "n_grid must be strictly increasing with at least 3 values".into(),
        ));
    }
    if cfg.replications == 0 {
        return Err(Error::InvalidParameter("replications must be >= 1".into()));
    }
    let reference = build_reference(model, &cfg.reference)?;
    let delta = cfg
        .delta_restrict
        .unwrap_or_else(|| default_delta_restrict(model));
    let grid: Vec<f64> = cfg.n_grid.iter().map(|&n| n as f64).collect();
    let mut cells = Vec::new();
    for &n in &cfg.n_grid {
        for rep in 0..cfg.replications {
            let seed = SplitMix64::substream(model.seed, rep as u64).next_u64();
            let started = Instant::now();
            let mut rep_model = model.clone();
            rep_model.seed = seed;
            let outcome = run_rate_cell(&rep_model, n, &cfg.surf, &reference, delta);
            cells.push(CellResult {
                setting: n as f64,
                seed: Some(seed),
                hausdorff: outcome,
                components: None,
                failed: outcome.is_none(),
                runtime_secs: started.elapsed().as_secs_f64(),
            });
        }
    }
    let summary = summarize(&grid, &cells);
    let fitted_slope = fit_slope(&summary);
    let config = serde_json::json!({
        "n_grid": cfg.n_grid,
        "replications": cfg.replications,
        "surf": cfg.surf,
        "reference": cfg.reference,
        "delta_restrict": delta,
        "generator": model.manifest(0),
    });
    Ok(ExperimentReport {
        kind: "rate".into(),
        grid,
        cells,
        summary,
        fitted_slope,
        config,
    })
}

fn run_rate_cell(
    model: &HiddenManifoldModel,
    n: usize,
    surf_cfg: &SurfConfig,
    reference: &PointCloud,
    delta: f64,
) -> Option<f64> {
    let data = model.sample(n).ok()?;
    let est = surf(&data, surf_cfg).ok()?;
    let ridge = est.ridge_points();
    if ridge.is_empty() {
        return None;
    }
    let mut restricted = PointCloud::empty(ridge.dim()).ok()?;
    for p in ridge.iter() {
        if distance_to_set(p, reference).ok()? <= delta {
            restricted.push(p).ok()?;
        }
    }
    if restricted.is_empty() {
        return None;
    }
    hausdorff(&restricted, reference).ok()
}

#[derive(Debug, Clone, Serialize)]
pub struct BiasConfig {
    /// Strictly decreasing noise scales.
    pub sigma_grid: Vec<f64>,
    /// Mixture components per oracle.
    pub quadrature: usize,
    pub d: usize,
    pub use_log: bool,
    /// SCMS starting points sampled on the manifold.
    pub starts: usize,
    /// Probe count for the Hausdorff-to-manifold measurement.
    pub probe_count: usize,
}

impl BiasConfig {
    pub fn new(sigma_grid: Vec<f64>) -> Self {
        // starts and probes share the same equal-arclength construction
        // and count, so the manifold-to-ridge direction measures radial
        // displacement rather than the angular gap between destinations
        BiasConfig {
            sigma_grid,
            quadrature: 1024,
            d: 1,
            use_log: true,
            starts: 1024,
            probe_count: 1024,
        }
    }
}

/// Surrogate bias against noise scale: for each sigma, run SCMS on the
/// analytic oracle from on-manifold starts and measure the Hausdorff
/// distance between the recovered ridge and the manifold itself.
pub fn bias_experiment(manifold: &ManifoldSpec, cfg: &BiasConfig) -> Result<ExperimentReport> {
    if cfg.sigma_grid.len() < 3 || cfg.sigma_grid.windows(2).any(|w| w[0] <= w[1]) {
        return Err(Error::InvalidParameter(
            "sigma_grid must be strictly decreasing with at least 3 values".into(),
        ));
    }
    let mut cells = Vec::new();
    for &sigma in &cfg.sigma_grid {
        let started = Instant::now();
        let value = run_bias_cell(manifold, sigma, cfg);
        cells.push(CellResult {
            setting: sigma,
            seed: None,
            hausdorff: value,
            components: None,
            failed: value.is_none(),
            runtime_secs: started.elapsed().as_secs_f64(),
        });
    }
    let grid = cfg.sigma_grid.clone();
    let summary = summarize(&grid, &cells);
    let fitted_slope = fit_slope(&summary);
    let config = serde_json::json!({
        "sigma_grid": cfg.sigma_grid,
        "quadrature": cfg.quadrature,
        "d": cfg.d,
        "use_log": cfg.use_log,
        "starts": cfg.starts,
        "probe_count": cfg.probe_count,
    });
    Ok(ExperimentReport {
        kind: "bias".into(),
        grid,
        cells,
        summary,
        fitted_slope,
        config,
    })
}

fn run_bias_cell(manifold: &ManifoldSpec, sigma: f64, cfg: &BiasConfig) -> Option<f64> {
    let oracle = manifold_oracle(
        manifold,
        crate::geometry::ManifoldWeight::Uniform,
        sigma,
        cfg.quadrature,
    )
    .ok()?;
    let starts = manifold_probes(manifold, cfg.starts).ok()?;
    let mut scms_cfg = SurfConfig::new(cfg.d);
    scms_cfg.use_log = cfg.use_log;
    let est = scms_run(&oracle, &starts, &scms_cfg).ok()?;
    if est
        .records
        .iter()
        .any(|r| !matches!(r.status, PointStatus::Converged { .. }))
    {
        return None;
    }
    hausdorff_to_manifold(&est.ridge_points(), manifold, cfg.probe_count).ok()
}

/// Ridge structure across bandwidths: per h, the pipeline's Hausdorff
/// distance to the ground truth (when one is supplied) and the number of
/// dilation components of the recovered ridge set.
pub fn bandwidth_sweep(
    data: &PointCloud,
    h_grid: &[f64],
    surf_cfg: &SurfConfig,
    eps_connect: f64,
    truth: Option<&ManifoldSpec>,
) -> Result<ExperimentReport> {
    if h_grid.len() < 3 {
        return Err(Error::InvalidParameter(
            "h_grid needs at least 3 values".into(),
        ));
    }
    if !(eps_connect > 0.0) {
        return Err(Error::InvalidParameter("eps_connect must be > 0".into()));
    }
    let mut cells = Vec::new();
    for &h in h_grid {
        let started = Instant::now();
        let mut cfg = surf_cfg.clone();
        cfg.bandwidth = Some(h);
        let cell = match surf(data, &cfg) {
            Ok(est) => {
                let ridge = est.ridge_points();
                if ridge.is_empty() {
                    None
                } else {
                    let components = dilation_components(&ridge, eps_connect)?;
                    let hd = match truth {
                        Some(m) => Some(hausdorff_to_manifold(&ridge, m, 1024)?),
                        None => None,
                    };
                    Some((hd, components))
                }
            }
            Err(_) => None,
        };
        match cell {
            Some((hd, components)) => cells.push(CellResult {
                setting: h,
                seed: None,
                hausdorff: hd,
                components: Some(components),
                failed: false,
                runtime_secs: started.elapsed().as_secs_f64(),
            }),
            None => cells.push(CellResult {
                setting: h,
                seed: None,
                hausdorff: None,
                components: None,
                failed: true,
                runtime_secs: started.elapsed().as_secs_f64(),
            }),
        }
    }
    let grid = h_grid.to_vec();
    let summary = summarize(&grid, &cells);
    let config = serde_json::json!({
        "h_grid": h_grid,
        "surf": surf_cfg,
        "eps_connect": eps_connect,
        "truth": truth,
    });
    Ok(ExperimentReport {
        kind: "bandwidth_sweep".into(),
        grid,
        cells,
        summary,
        fitted_slope: None,
        config,
    })
}
