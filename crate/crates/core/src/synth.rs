//! Reproducible synthetic data: uniform background clutter on a box mixed
//! with manifold-supported signal blurred by isotropic Gaussian noise.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{ManifoldSpec, ManifoldWeight, PointCloud, Segment};
use crate::rng::SplitMix64;

/// Clutter-plus-signal generative model: with probability `1 - eta` a
/// point is uniform on the box, otherwise it is a draw from the weight
/// density on the manifold plus isotropic Gaussian noise of scale sigma.
///
/// Point `i` is generated from RNG substream `(seed, i)`, so a sample of
/// size n is a prefix of any longer sample with the same seed, and points
/// may be generated in parallel without changing the output.
#[derive(Debug, Clone)]
pub struct HiddenManifoldModel {
    pub manifold: ManifoldSpec,
    pub weight: ManifoldWeight,
    pub sigma: f64,
    pub eta: f64,
    /// Per-axis intervals of the compact clutter region.
    pub bounds: Vec<(f64, f64)>,
    pub seed: u64,
}

/// Serializable record of the generator parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GeneratorManifest {
    pub manifold: ManifoldSpec,
    pub weight: ManifoldWeight,
    pub sigma: f64,
    pub eta: f64,
    pub bounds: Vec<(f64, f64)>,
    pub seed: u64,
    pub n: usize,
}

impl HiddenManifoldModel {
    pub fn new(
        manifold: ManifoldSpec,
        weight: ManifoldWeight,
        sigma: f64,
        eta: f64,
        bounds: Vec<(f64, f64)>,
        seed: u64,
    ) -> Result<Self> {
        if !(0.0..=1.0).contains(&eta) {
            return Err(Error::InvalidParameter("eta must lie in [0, 1]".into()));
        }
        if !(sigma >= 0.0) || !sigma.is_finite() {
            return Err(Error::InvalidParameter("sigma must be >= 0".into()));
        }
        if bounds.len() != manifold.dim() {
            return Err(Error::DimensionMismatch {
                expected: manifold.dim(),
                actual: bounds.len(),
            });
        }
        for &(lo, hi) in &bounds {
            if !(hi >= lo) {
                return Err(Error::InvalidParameter("box interval has hi < lo".into()));
            }
            if eta < 1.0 && hi == lo {
                return Err(Error::InvalidParameter(
                    "degenerate box has zero volume but clutter is requested".into(),
                ));
            }
        }
        if let ManifoldWeight::CosineTilt { amplitude } = weight {
            if !(0.0..1.0).contains(&amplitude) {
                return Err(Error::InvalidParameter(
                    "cosine tilt amplitude must lie in [0, 1)".into(),
                ));
            }
            if !matches!(manifold, ManifoldSpec::Circle { .. }) {
                return Err(Error::InvalidParameter(
                    "nonuniform weight is only supported on the circle".into(),
                ));
            }
        }
        // the clutter region must contain the sigma-dilated manifold
        let bbox = manifold_bounding_box(&manifold);
        for (k, &(lo, hi)) in bounds.iter().enumerate() {
            if bbox[k].0 - sigma < lo || bbox[k].1 + sigma > hi {
                return Err(Error::InvalidParameter(format!(
                    "box axis {k} does not contain the sigma-dilated manifold"
                )));
            }
        }
        Ok(HiddenManifoldModel {
            manifold,
            weight,
            sigma,
            eta,
            bounds,
            seed,
        })
    }

    /// Draw `n` points. Deterministic given the seed; point `i` depends
    /// only on `(seed, i)`.
    pub fn sample(&self, n: usize) -> Result<PointCloud> {
        if n == 0 {
            return Err(Error::InvalidParameter("n must be >= 1".into()));
        }
        let dim = self.manifold.dim();
        let mut pc = PointCloud::empty(dim)?;
        for i in 0..n {
            let mut rng = SplitMix64::substream(self.seed, i as u64);
            pc.push(&self.draw_point(&mut rng))?;
        }
        Ok(pc)
    }

    /// Draw order within a substream: clutter/signal uniform first, then
    /// either one uniform per axis (clutter) or the manifold position
    /// draws followed by the Gaussian noise vector (signal).
    fn draw_point(&self, rng: &mut SplitMix64) -> Vec<f64> {
        let dim = self.manifold.dim();
        let is_signal = rng.next_f64() < self.eta;
        if !is_signal {
            return self
                .bounds
                .iter()
                .map(|&(lo, hi)| rng.next_range(lo, hi))
                .collect();
        }
        let z = match (&self.manifold, self.weight) {
            (ManifoldSpec::Circle { center, radius }, ManifoldWeight::Uniform) => {
                let theta = rng.next_range(0.0, std::f64::consts::TAU);
                circle_point(center, *radius, theta)
            }
            (ManifoldSpec::Circle { center, radius }, ManifoldWeight::CosineTilt { amplitude }) => {
                // rejection sampling of w(θ) ∝ 1 + a·cos θ
                loop {
                    let theta = rng.next_range(0.0, std::f64::consts::TAU);
                    let accept = rng.next_f64() * (1.0 + amplitude);
                    if accept <= 1.0 + amplitude * theta.cos() {
                        break circle_point(center, *radius, theta);
                    }
                }
            }
            (ManifoldSpec::Segments(segs), _) => {
                let total: f64 = segs.iter().map(Segment::length).sum();
                let mut s = rng.next_f64() * total;
                let mut chosen = &segs[segs.len() - 1];
                for seg in segs {
                    if s <= seg.length() {
                        chosen = seg;
                        break;
                    }
                    s -= seg.length();
                }
                chosen.at((s / chosen.length()).clamp(0.0, 1.0))
            }
            (ManifoldSpec::Points(pc), _) => {
                let idx = (rng.next_u64() % pc.len() as u64) as usize;
                pc.point(idx).to_vec()
            }
        };
        let noise = rng.gaussian_vec(dim);
        z.iter()
            .zip(&noise)
            .map(|(zk, ek)| zk + self.sigma * ek)
            .collect()
    }

    pub fn manifest(&self, n: usize) -> GeneratorManifest {
        GeneratorManifest {
            manifold: self.manifold.clone(),
            weight: self.weight,
            sigma: self.sigma,
            eta: self.eta,
            bounds: self.bounds.clone(),
            seed: self.seed,
            n,
        }
    }
}

fn circle_point(center: &[f64], radius: f64, theta: f64) -> Vec<f64> {
    let mut p = center.to_vec();
    p[0] += radius * theta.cos();
    p[1] += radius * theta.sin();
    p
}

fn manifold_bounding_box(m: &ManifoldSpec) -> Vec<(f64, f64)> {
    match m {
        ManifoldSpec::Circle { center, radius } => center
            .iter()
            .enumerate()
            .map(|(k, &c)| {
                if k < 2 {
                    (c - radius, c + radius)
                } else {
                    (c, c)
                }
            })
            .collect(),
        ManifoldSpec::Segments(segs) => {
            let dim = segs[0].a.len();
            let mut bbox = vec![(f64::INFINITY, f64::NEG_INFINITY); dim];
            for s in segs {
                for p in [&s.a, &s.b] {
                    for k in 0..dim {
                        bbox[k].0 = bbox[k].0.min(p[k]);
                        bbox[k].1 = bbox[k].1.max(p[k]);
                    }
                }
            }
            bbox
        }
        ManifoldSpec::Points(pc) => {
            let dim = pc.dim();
            let mut bbox = vec![(f64::INFINITY, f64::NEG_INFINITY); dim];
            for p in pc.iter() {
                for k in 0..dim {
                    bbox[k].0 = bbox[k].0.min(p[k]);
                    bbox[k].1 = bbox[k].1.max(p[k]);
                }
            }
            bbox
        }
    }
}

/// The stylized web of intersecting line segments used by the examples.
/// The layout itself is an artifact default: six segments crossing inside
/// the unit window [0, 10]².
pub fn default_web_layout() -> Vec<Segment> {
    let seg = |ax: f64, ay: f64, bx: f64, by: f64| Segment {
        a: vec![ax, ay],
        b: vec![bx, by],
    };
    vec![
        seg(0.5, 0.5, 9.5, 9.5),
        seg(0.5, 9.5, 9.5, 0.5),
        seg(0.5, 5.0, 9.5, 5.0),
        seg(5.0, 0.5, 5.0, 9.5),
        seg(0.5, 2.0, 9.0, 8.5),
        seg(2.0, 9.5, 8.5, 1.0),
    ]
}

/// Samples from a segments-variant hidden-manifold model together with
/// the ground-truth layout. `clutter_frac` is the expected fraction of
/// uniform background points (eta = 1 - clutter_frac).
pub fn cosmic_web(
    seed: u64,
    n: usize,
    layout: Vec<Segment>,
    sigma: f64,
    clutter_frac: f64,
) -> Result<(PointCloud, ManifoldSpec)> {
    if !(0.0..=1.0).contains(&clutter_frac) {
        return Err(Error::InvalidParameter(
            "clutter_frac must lie in [0, 1]".into(),
        ));
    }
    let manifold = ManifoldSpec::segments(layout)?;
    let bbox = manifold_bounding_box(&manifold);
    let pad = sigma.max(0.5);
    let bounds: Vec<(f64, f64)> = bbox.iter().map(|&(lo, hi)| (lo - pad, hi + pad)).collect();
    let model = HiddenManifoldModel::new(
        manifold.clone(),
        ManifoldWeight::Uniform,
        sigma,
        1.0 - clutter_frac,
        bounds,
        seed,
    )?;
    Ok((model.sample(n)?, manifold))
}
