//! Point clouds, distance functions, Hausdorff distance, dilation
//! connectivity, and distances to reference manifolds.

use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mat::{dist, vsub};

/// Floating-point output format used in every CSV artifact: 17 significant
/// digits, enough to round-trip an `f64` exactly.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// An ordered set of n points in D-dimensional Euclidean space.
///
/// Coordinates are stored flat, row-major. Every constructor rejects
/// non-finite coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    dim: usize,
    data: Vec<f64>,
}

impl PointCloud {
    pub fn empty(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("dim must be >= 1".into()));
        }
        Ok(PointCloud {
            dim,
            data: Vec::new(),
        })
    }

    /// Build from flat row-major coordinates.
    pub fn new(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("dim must be >= 1".into()));
        }
        if !data.len().is_multiple_of(dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: data.len() % dim,
            });
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(PointCloud { dim, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map(|r| r.len()).unwrap_or(0);
        if dim == 0 {
            return Err(Error::EmptyPointCloud);
        }
        let mut data = Vec::with_capacity(rows.len() * dim);
        for row in rows {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        PointCloud::new(dim, data)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }

    pub fn push(&mut self, p: &[f64]) -> Result<()> {
        if p.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: p.len(),
            });
        }
        if p.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite);
        }
        self.data.extend_from_slice(p);
        Ok(())
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.iter().map(|p| p.to_vec()).collect()
    }

    /// One point per row, comma separated, '.' decimal separator. With
    /// `header` an `x0,...,x{D-1}` title row is prepended.
    pub fn write_csv<W: Write>(&self, mut w: W, header: bool) -> Result<()> {
        if header {
            let names: Vec<String> = (0..self.dim).map(|k| format!("x{k}")).collect();
            writeln!(w, "{}", names.join(","))?;
        }
        for p in self.iter() {
            let fields: Vec<String> = p.iter().map(|&x| format_float(x)).collect();
            writeln!(w, "{}", fields.join(","))?;
        }
        Ok(())
    }

    /// Parse a CSV of points. A leading header row is detected (and
    /// skipped) when none of its fields parse as a number. NaN and
    /// infinities are rejected with the offending line number.
    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut dim = None;
        let mut data = Vec::new();
        let mut first_data_line = true;
        for (idx, line) in r.lines().enumerate() {
            let line_no = idx + 1;
            let line = line?;
            let trimmed = line.trim();
            if trimmed.is_empty() {
                continue;
            }
            let fields: Vec<&str> = trimmed.split(',').map(str::trim).collect();
            let parsed: Vec<std::result::Result<f64, _>> =
                fields.iter().map(|f| f.parse::<f64>()).collect();
            if first_data_line && parsed.iter().all(|p| p.is_err()) {
                // header row
                first_data_line = false;
                continue;
            }
            first_data_line = false;
            let mut row = Vec::with_capacity(fields.len());
            for (f, p) in fields.iter().zip(parsed) {
                match p {
                    Ok(v) if v.is_finite() => row.push(v),
                    Ok(_) => {
                        return Err(Error::Csv {
                            line: line_no,
                            message: format!("non-finite value `{f}`"),
                        })
                    }
                    Err(_) => {
                        return Err(Error::Csv {
                            line: line_no,
                            message: format!("cannot parse `{f}` as a number"),
                        })
                    }
                }
            }
            match dim {
                None => dim = Some(row.len()),
                Some(d) if d != row.len() => {
                    return Err(Error::Csv {
                        line: line_no,
                        message: format!("expected {d} columns, got {}", row.len()),
                    })
                }
                _ => {}
            }
            data.extend_from_slice(&row);
        }
        match dim {
            Some(d) => PointCloud::new(d, data),
            None => Err(Error::Csv {
                line: 0,
                message: "no data rows".into(),
            }),
        }
    }

    pub fn write_csv_path<P: AsRef<Path>>(&self, path: P, header: bool) -> Result<()> {
        let f = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(f), header)
    }

    pub fn read_csv_path<P: AsRef<Path>>(path: P) -> Result<Self> {
        let f = std::fs::File::open(path)?;
        Self::read_csv(std::io::BufReader::new(f))
    }

    /// JSON array-of-arrays alternative to CSV.
    pub fn read_json<R: std::io::Read>(r: R) -> Result<Self> {
        let rows: Vec<Vec<f64>> = serde_json::from_reader(r)?;
        PointCloud::from_rows(&rows)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&self.to_rows())?)
    }
}

/// Line segment between two distinct endpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

impl Segment {
    pub fn length(&self) -> f64 {
        dist(&self.a, &self.b)
    }

    /// Point at arclength fraction t in [0,1] from `a`.
    pub fn at(&self, t: f64) -> Vec<f64> {
        self.a
            .iter()
            .zip(&self.b)
            .map(|(x, y)| x + t * (y - x))
            .collect()
    }
}

/// A reference structure with a known geometry, used for evaluating how
/// close a recovered ridge is to the truth.
#[derive(Debug, Clone, PartialEq)]
pub enum ManifoldSpec {
    Circle { center: Vec<f64>, radius: f64 },
    Segments(Vec<Segment>),
    Points(PointCloud),
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum ManifoldSpecRepr {
    Circle { center: Vec<f64>, radius: f64 },
    Segments { segments: Vec<Segment> },
    Points { points: Vec<Vec<f64>> },
}

impl Serialize for ManifoldSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let repr = match self {
            ManifoldSpec::Circle { center, radius } => ManifoldSpecRepr::Circle {
                center: center.clone(),
                radius: *radius,
            },
            ManifoldSpec::Segments(segments) => ManifoldSpecRepr::Segments {
                segments: segments.clone(),
            },
            ManifoldSpec::Points(pc) => ManifoldSpecRepr::Points {
                points: pc.to_rows(),
            },
        };
        repr.serialize(s)
    }
}

impl<'de> Deserialize<'de> for ManifoldSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        match ManifoldSpecRepr::deserialize(d)? {
            ManifoldSpecRepr::Circle { center, radius } => {
                ManifoldSpec::circle(center, radius).map_err(D::Error::custom)
            }
            ManifoldSpecRepr::Segments { segments } => {
                ManifoldSpec::segments(segments).map_err(D::Error::custom)
            }
            ManifoldSpecRepr::Points { points } => Ok(ManifoldSpec::Points(
                PointCloud::from_rows(&points).map_err(D::Error::custom)?,
            )),
        }
    }
}

/// Sampling density on a manifold. `CosineTilt` is the smooth nonuniform
/// family w(θ) ∝ 1 + a·cos θ on a circle, with a in [0,1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ManifoldWeight {
    Uniform,
    CosineTilt { amplitude: f64 },
}

impl ManifoldSpec {
    pub fn circle(center: Vec<f64>, radius: f64) -> Result<Self> {
        if center.len() < 2 {
            return Err(Error::InvalidParameter(
                "circle requires dimension >= 2".into(),
            ));
        }
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::InvalidParameter("circle radius must be > 0".into()));
        }
        Ok(ManifoldSpec::Circle { center, radius })
    }

    pub fn segments(segments: Vec<Segment>) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::InvalidParameter("segment list is empty".into()));
        }
        let dim = segments[0].a.len();
        for s in &segments {
            if s.a.len() != dim || s.b.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: s.a.len().max(s.b.len()),
                });
            }
            if s.length() == 0.0 {
                return Err(Error::InvalidParameter(
                    "segment endpoints must be distinct".into(),
                ));
            }
        }
        Ok(ManifoldSpec::Segments(segments))
    }

    pub fn dim(&self) -> usize {
        match self {
            ManifoldSpec::Circle { center, .. } => center.len(),
            ManifoldSpec::Segments(segs) => segs[0].a.len(),
            ManifoldSpec::Points(pc) => pc.dim(),
        }
    }

    pub fn total_length(&self) -> Option<f64> {
        match self {
            ManifoldSpec::Circle { radius, .. } => Some(2.0 * std::f64::consts::PI * radius),
            ManifoldSpec::Segments(segs) => Some(segs.iter().map(Segment::length).sum()),
            ManifoldSpec::Points(_) => None,
        }
    }
}

/// d(x, A) = min over a in A of ||x - a||.
pub fn distance_to_set(x: &[f64], a: &PointCloud) -> Result<f64> {
    if a.is_empty() {
        return Err(Error::EmptyPointCloud);
    }
    if x.len() != a.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            actual: x.len(),
        });
    }
    Ok(a.iter().map(|p| dist(x, p)).fold(f64::INFINITY, f64::min))
}

/// Hausdorff distance between two finite point sets (exact, pairwise).
pub fn hausdorff(a: &PointCloud, b: &PointCloud) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyPointCloud);
    }
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            actual: b.dim(),
        });
    }
    let directed = |from: &PointCloud, to: &PointCloud| -> f64 {
        from.iter()
            .map(|p| to.iter().map(|q| dist(p, q)).fold(f64::INFINITY, f64::min))
            .fold(0.0_f64, f64::max)
    };
    Ok(directed(a, b).max(directed(b, a)))
}

/// Number of connected components of the union of eps-balls around the
/// points: points are adjacent when their balls overlap, i.e. when
/// ||a_i - a_j|| <= 2*eps.
pub fn dilation_components(a: &PointCloud, eps: f64) -> Result<usize> {
    if a.is_empty() {
        return Err(Error::EmptyPointCloud);
    }
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter("eps must be > 0".into()));
    }
    let n = a.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    let threshold = 2.0 * eps;
    for i in 0..n {
        for j in (i + 1)..n {
            if dist(a.point(i), a.point(j)) <= threshold {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri] = rj;
                }
            }
        }
    }
    let mut count = 0;
    for i in 0..n {
        if find(&mut parent, i) == i {
            count += 1;
        }
    }
    Ok(count)
}

fn point_segment_distance(x: &[f64], seg: &Segment) -> f64 {
    let ab = vsub(&seg.b, &seg.a);
    let ax = vsub(x, &seg.a);
    let denom = crate::mat::dot(&ab, &ab);
    let t = (crate::mat::dot(&ax, &ab) / denom).clamp(0.0, 1.0);
    dist(x, &seg.at(t))
}

/// Exact distance from a point to the manifold.
pub fn distance_to_manifold(x: &[f64], m: &ManifoldSpec) -> Result<f64> {
    if x.len() != m.dim() {
        return Err(Error::DimensionMismatch {
            expected: m.dim(),
            actual: x.len(),
        });
    }
    match m {
        ManifoldSpec::Circle { center, radius } => Ok((dist(x, center) - radius).abs()),
        ManifoldSpec::Segments(segs) => Ok(segs
            .iter()
            .map(|s| point_segment_distance(x, s))
            .fold(f64::INFINITY, f64::min)),
        ManifoldSpec::Points(pc) => distance_to_set(x, pc),
    }
}

/// Deterministic dense sample of the manifold: equal angles on a circle,
/// equal arclength spacing along a segment chain. For a point-set
/// manifold the points themselves are returned.
pub fn manifold_probes(m: &ManifoldSpec, count: usize) -> Result<PointCloud> {
    if count < 2 {
        return Err(Error::InvalidParameter("probe count must be >= 2".into()));
    }
    match m {
        ManifoldSpec::Circle { center, radius } => {
            if center.len() != 2 {
                return Err(Error::InvalidParameter(
                    "circle probes are only defined in dimension 2".into(),
                ));
            }
            let mut pc = PointCloud::empty(2)?;
            for k in 0..count {
                let theta = 2.0 * std::f64::consts::PI * k as f64 / count as f64;
                pc.push(&[
                    center[0] + radius * theta.cos(),
                    center[1] + radius * theta.sin(),
                ])?;
            }
            Ok(pc)
        }
        ManifoldSpec::Segments(segs) => {
            let total: f64 = segs.iter().map(Segment::length).sum();
            let step = total / count as f64;
            let mut pc = PointCloud::empty(m.dim())?;
            // probe at the midpoint of each arclength cell so shared
            // segment endpoints are not double-counted
            let mut seg_idx = 0;
            let mut seg_start = 0.0;
            for k in 0..count {
                let s = (k as f64 + 0.5) * step;
                while seg_idx + 1 < segs.len() && s > seg_start + segs[seg_idx].length() {
                    seg_start += segs[seg_idx].length();
                    seg_idx += 1;
                }
                let local = ((s - seg_start) / segs[seg_idx].length()).clamp(0.0, 1.0);
                pc.push(&segs[seg_idx].at(local))?;
            }
            Ok(pc)
        }
        ManifoldSpec::Points(pc) => Ok(pc.clone()),
    }
}

/// Hausdorff distance between a finite set and a manifold: the set side is
/// measured exactly, the manifold side through `probe_count` deterministic
/// probes.
pub fn hausdorff_to_manifold(a: &PointCloud, m: &ManifoldSpec, probe_count: usize) -> Result<f64> {
    if a.is_empty() {
        return Err(Error::EmptyPointCloud);
    }
    let probes = manifold_probes(m, probe_count)?;
    let mut set_to_manifold = 0.0_f64;
    for p in a.iter() {
        set_to_manifold = set_to_manifold.max(distance_to_manifold(p, m)?);
    }
    let mut manifold_to_set = 0.0_f64;
    for q in probes.iter() {
        manifold_to_set = manifold_to_set.max(distance_to_set(q, a)?);
    }
    Ok(set_to_manifold.max(manifold_to_set))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;

    fn random_cloud(rng: &mut SplitMix64, n: usize, dim: usize, lo: f64, hi: f64) -> PointCloud {
        let mut pc = PointCloud::empty(dim).unwrap();
        for _ in 0..n {
            let p: Vec<f64> = (0..dim).map(|_| rng.next_range(lo, hi)).collect();
            pc.push(&p).unwrap();
        }
        pc
    }

    #[test]
    fn distance_to_set_345() {
        let a = PointCloud::from_rows(&[vec![3.0, 4.0]]).unwrap();
        assert_eq!(distance_to_set(&[0.0, 0.0], &a).unwrap(), 5.0);
    }

    #[test]
    fn distance_to_set_membership() {
        let a = PointCloud::from_rows(&[vec![1.0, 1.0], vec![9.0, 9.0]]).unwrap();
        assert_eq!(distance_to_set(&[1.0, 1.0], &a).unwrap(), 0.0);
    }

    #[test]
    fn distance_to_set_matches_exhaustive_scan() {
        let mut rng = SplitMix64::new(11);
        let a = random_cloud(&mut rng, 100, 2, -1.0, 1.0);
        let x = [0.0, 0.0];
        let brute = a.iter().map(|p| dist(&x, p)).fold(f64::INFINITY, f64::min);
        assert_eq!(distance_to_set(&x, &a).unwrap(), brute);
    }

    #[test]
    fn distance_to_set_empty_errors() {
        let a = PointCloud::empty(2).unwrap();
        assert!(matches!(
            distance_to_set(&[0.0, 0.0], &a),
            Err(Error::EmptyPointCloud)
        ));
    }

    #[test]
    fn hausdorff_two_point_case() {
        let a = PointCloud::from_rows(&[vec![0.0, 0.0], vec![1.0, 0.0]]).unwrap();
        let b = PointCloud::from_rows(&[vec![0.5, 0.0]]).unwrap();
        assert!((hausdorff(&a, &b).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn hausdorff_identity_is_zero() {
        let mut rng = SplitMix64::new(3);
        for _ in 0..5 {
            let a = random_cloud(&mut rng, 17, 3, -2.0, 2.0);
            assert_eq!(hausdorff(&a, &a).unwrap(), 0.0);
        }
    }

    #[test]
    fn hausdorff_matches_brute_force_double_loop() {
        let mut rng = SplitMix64::new(21);
        let a = random_cloud(&mut rng, 50, 3, 0.0, 1.0);
        let b = random_cloud(&mut rng, 70, 3, 0.0, 1.0);
        // independent O(nm) oracle
        let mut d_ab = 0.0_f64;
        for p in a.iter() {
            let mut best = f64::INFINITY;
            for q in b.iter() {
                best = best.min(dist(p, q));
            }
            d_ab = d_ab.max(best);
        }
        let mut d_ba = 0.0_f64;
        for q in b.iter() {
            let mut best = f64::INFINITY;
            for p in a.iter() {
                best = best.min(dist(p, q));
            }
            d_ba = d_ba.max(best);
        }
        let oracle = d_ab.max(d_ba);
        assert!((hausdorff(&a, &b).unwrap() - oracle).abs() <= 1e-12);
    }

    #[test]
    fn hausdorff_symmetry_and_triangle_inequality() {
        let mut rng = SplitMix64::new(99);
        for _ in 0..100 {
            let a = random_cloud(&mut rng, 8, 2, -1.0, 1.0);
            let b = random_cloud(&mut rng, 12, 2, -1.0, 1.0);
            let c = random_cloud(&mut rng, 10, 2, -1.0, 1.0);
            let ab = hausdorff(&a, &b).unwrap();
            let ba = hausdorff(&b, &a).unwrap();
            assert_eq!(ab, ba);
            let ac = hausdorff(&a, &c).unwrap();
            let bc = hausdorff(&b, &c).unwrap();
            assert!(ac <= ab + bc + 1e-12);
        }
    }

    #[test]
    fn hausdorff_zero_iff_equal_as_sets() {
        let a = PointCloud::from_rows(&[vec![0.0, 1.0], vec![2.0, 3.0], vec![0.0, 1.0]]).unwrap();
        let b = PointCloud::from_rows(&[vec![2.0, 3.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(hausdorff(&a, &b).unwrap(), 0.0);
        let c = PointCloud::from_rows(&[vec![2.0, 3.0], vec![0.0, 1.0 + 1e-9]]).unwrap();
        assert!(hausdorff(&a, &c).unwrap() > 0.0);
    }

    #[test]
    fn hausdorff_dimension_mismatch() {
        let a = PointCloud::from_rows(&[vec![0.0, 0.0]]).unwrap();
        let b = PointCloud::from_rows(&[vec![0.0, 0.0, 0.0]]).unwrap();
        assert!(matches!(
            hausdorff(&a, &b),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn dilation_circle_is_one_component() {
        let m = ManifoldSpec::circle(vec![0.0, 0.0], 3.0).unwrap();
        let pts = manifold_probes(&m, 64).unwrap();
        assert_eq!(dilation_components(&pts, 0.5).unwrap(), 1);
    }

    #[test]
    fn dilation_disjoint_balls() {
        let a = PointCloud::from_rows(&[vec![0.0, 0.0], vec![10.0, 0.0]]).unwrap();
        assert_eq!(dilation_components(&a, 1.0).unwrap(), 2);
    }

    #[test]
    fn dilation_matches_explicit_adjacency_oracle() {
        let mut rng = SplitMix64::new(7);
        // three clusters plus scattered noise
        let mut pc = PointCloud::empty(2).unwrap();
        for c in [[0.0, 0.0], [5.0, 5.0], [-4.0, 6.0]] {
            for _ in 0..15 {
                pc.push(&[
                    c[0] + rng.next_range(-0.3, 0.3),
                    c[1] + rng.next_range(-0.3, 0.3),
                ])
                .unwrap();
            }
        }
        for eps in [0.1, 0.3, 0.8, 3.0] {
            // oracle: BFS over the explicit adjacency matrix
            let n = pc.len();
            let adj: Vec<Vec<bool>> = (0..n)
                .map(|i| {
                    (0..n)
                        .map(|j| dist(pc.point(i), pc.point(j)) <= 2.0 * eps)
                        .collect()
                })
                .collect();
            let mut seen = vec![false; n];
            let mut comps = 0;
            for s in 0..n {
                if seen[s] {
                    continue;
                }
                comps += 1;
                let mut stack = vec![s];
                seen[s] = true;
                while let Some(i) = stack.pop() {
                    for j in 0..n {
                        if adj[i][j] && !seen[j] {
                            seen[j] = true;
                            stack.push(j);
                        }
                    }
                }
            }
            assert_eq!(dilation_components(&pc, eps).unwrap(), comps, "eps={eps}");
        }
    }

    #[test]
    fn dilation_nonincreasing_in_eps() {
        let mut rng = SplitMix64::new(13);
        let pc = random_cloud(&mut rng, 60, 2, 0.0, 10.0);
        let mut last = usize::MAX;
        for k in 1..=20 {
            let eps = 0.1 * k as f64;
            let c = dilation_components(&pc, eps).unwrap();
            assert!(c <= last);
            last = c;
        }
    }

    #[test]
    fn manifold_distances() {
        let circle = ManifoldSpec::circle(vec![0.0, 0.0], 3.0).unwrap();
        assert_eq!(distance_to_manifold(&[3.0, 0.0], &circle).unwrap(), 0.0);
        assert_eq!(distance_to_manifold(&[0.0, 0.0], &circle).unwrap(), 3.0);

        let seg = ManifoldSpec::segments(vec![Segment {
            a: vec![0.0, 0.0],
            b: vec![2.0, 0.0],
        }])
        .unwrap();
        assert!((distance_to_manifold(&[1.0, 1.0], &seg).unwrap() - 1.0).abs() < 1e-15);
        // beyond an endpoint the distance is to the endpoint itself
        assert!((distance_to_manifold(&[3.0, 0.0], &seg).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn probes_cover_segment_chain() {
        let m = ManifoldSpec::segments(vec![
            Segment {
                a: vec![0.0, 0.0],
                b: vec![1.0, 0.0],
            },
            Segment {
                a: vec![1.0, 0.0],
                b: vec![1.0, 2.0],
            },
        ])
        .unwrap();
        let probes = manifold_probes(&m, 300).unwrap();
        assert_eq!(probes.len(), 300);
        for p in probes.iter() {
            assert!(distance_to_manifold(p, &m).unwrap() < 1e-12);
        }
        // first cell midpoint sits on the first segment
        assert!(probes.point(0)[1].abs() < 1e-12);
    }

    #[test]
    fn hausdorff_to_manifold_concentric_circles() {
        let m = ManifoldSpec::circle(vec![0.0, 0.0], 3.0).unwrap();
        let inner = ManifoldSpec::circle(vec![0.0, 0.0], 2.9).unwrap();
        let a = manifold_probes(&inner, 360).unwrap();
        let d = hausdorff_to_manifold(&a, &m, 1000).unwrap();
        // radial gap 0.1 plus a small tangential discretization term
        assert!((d - 0.1).abs() <= 4e-3, "d={d}");
        assert!(d >= 0.1);
    }

    #[test]
    fn hausdorff_to_manifold_own_probes_is_zero() {
        let m = ManifoldSpec::circle(vec![1.0, -2.0], 2.0).unwrap();
        let a = manifold_probes(&m, 500).unwrap();
        assert!(hausdorff_to_manifold(&a, &m, 500).unwrap() < 1e-12);
    }

    #[test]
    fn hausdorff_to_manifold_matches_denser_probe_oracle() {
        let mut rng = SplitMix64::new(31);
        let m = ManifoldSpec::segments(vec![
            Segment {
                a: vec![0.0, 0.0],
                b: vec![4.0, 0.0],
            },
            Segment {
                a: vec![2.0, -1.0],
                b: vec![2.0, 1.0],
            },
        ])
        .unwrap();
        let mut a = PointCloud::empty(2).unwrap();
        for _ in 0..200 {
            let t = rng.next_f64();
            let (x, y) = if rng.next_f64() < 0.5 {
                (4.0 * t, rng.next_range(-0.05, 0.05))
            } else {
                (2.0 + rng.next_range(-0.05, 0.05), 2.0 * t - 1.0)
            };
            a.push(&[x, y]).unwrap();
        }
        let coarse = hausdorff_to_manifold(&a, &m, 500).unwrap();
        let fine = hausdorff_to_manifold(&a, &m, 5000).unwrap();
        assert!((coarse - fine).abs() <= 1e-2);
    }

    #[test]
    fn probe_count_validation() {
        let m = ManifoldSpec::circle(vec![0.0, 0.0], 1.0).unwrap();
        let a = manifold_probes(&m, 8).unwrap();
        assert!(matches!(
            hausdorff_to_manifold(&a, &m, 1),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn csv_round_trip_and_header_detection() {
        let pc = PointCloud::from_rows(&[vec![1.5, -2.25], vec![0.1, 1e-17]]).unwrap();
        let mut buf = Vec::new();
        pc.write_csv(&mut buf, true).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("x0,x1\n"));
        let back = PointCloud::read_csv(&buf[..]).unwrap();
        assert_eq!(back, pc);

        let mut buf2 = Vec::new();
        pc.write_csv(&mut buf2, false).unwrap();
        let back2 = PointCloud::read_csv(&buf2[..]).unwrap();
        assert_eq!(back2, pc);
    }

    #[test]
    fn csv_round_trip_is_bit_exact_over_the_full_range() {
        let mut rng = SplitMix64::new(404);
        let mut rows = vec![
            vec![f64::MIN_POSITIVE, -f64::MIN_POSITIVE], // smallest normals
            vec![5e-324, -5e-324],                       // subnormals
            vec![f64::MAX, f64::MIN],
            vec![0.0, -0.0],
            vec![1.0 + f64::EPSILON, 1.0 - f64::EPSILON],
        ];
        for _ in 0..200 {
            let exp = rng.next_range(-300.0, 300.0);
            rows.push(vec![
                rng.next_range(-1.0, 1.0) * 10f64.powf(exp),
                rng.next_range(-1.0, 1.0),
            ]);
        }
        let pc = PointCloud::from_rows(&rows).unwrap();
        let mut buf = Vec::new();
        pc.write_csv(&mut buf, false).unwrap();
        let back = PointCloud::read_csv(&buf[..]).unwrap();
        for (a, b) in pc.iter().zip(back.iter()) {
            for (x, y) in a.iter().zip(b) {
                assert_eq!(x.to_bits(), y.to_bits(), "{x:e} did not round-trip");
            }
        }
    }

    #[test]
    fn csv_rejects_bad_input_with_line_numbers() {
        let bad = "1.0,2.0\n3.0,oops\n";
        match PointCloud::read_csv(bad.as_bytes()) {
            Err(Error::Csv { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected csv error, got {other:?}"),
        }
        let nan = "1.0,2.0\nNaN,0.0\n";
        match PointCloud::read_csv(nan.as_bytes()) {
            Err(Error::Csv { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected csv error, got {other:?}"),
        }
        let ragged = "1.0,2.0\n1.0\n";
        match PointCloud::read_csv(ragged.as_bytes()) {
            Err(Error::Csv { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected csv error, got {other:?}"),
        }
    }

    #[test]
    fn json_round_trip_rejects_nonfinite() {
        let pc = PointCloud::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let s = pc.to_json().unwrap();
        let back = PointCloud::read_json(s.as_bytes()).unwrap();
        assert_eq!(back, pc);
        assert!(PointCloud::read_json("[[1.0,null]]".as_bytes()).is_err());
    }

    #[test]
    fn distance_to_set_with_self_member() {
        let mut rng = SplitMix64::new(4);
        for _ in 0..20 {
            let mut a = random_cloud(&mut rng, 10, 3, -5.0, 5.0);
            let x: Vec<f64> = (0..3).map(|_| rng.next_range(-5.0, 5.0)).collect();
            a.push(&x).unwrap();
            assert_eq!(distance_to_set(&x, &a).unwrap(), 0.0);
        }
    }
}
