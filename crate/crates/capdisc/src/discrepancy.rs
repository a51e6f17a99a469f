//! Spherical cap discrepancy: exact supremum over a finite certificate
//! family, seeded Monte Carlo estimation, a polar lower-bound certificate,
//! and separation distance.
//!
//! The exact routine relies on the fact that an extremal cap can be moved
//! until its boundary is pinned by up to three points of the set; centers
//! of such caps are (up to sign) the points themselves, normalized sums of
//! pairs, and normals of point triples. Scanning every threshold for every
//! candidate center therefore realizes the true supremum.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lambert::{lambert_forward, Cap, UnitVec3};
use crate::lattice::{self, build_point_set, LatticeConfig, Perturbation, PlanarPointSet};
use crate::planar::Mat2;

/// Default refusal threshold for the exact mode; the candidate family
/// grows like N^3 and each candidate costs a sort, so larger sets should
/// use the estimator.
pub const EXACT_LIMIT_DEFAULT: usize = 600;

/// Points on the unit sphere, optionally remembering the planar set they
/// came from.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpherePointSet {
    points: Vec<UnitVec3>,
    origin: Option<PlanarPointSet>,
}

impl SpherePointSet {
    pub fn from_points(points: Vec<UnitVec3>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::TooFew { need: 1, got: 0 });
        }
        Ok(SpherePointSet {
            points,
            origin: None,
        })
    }

    /// Push a planar set through the equal-area map.
    pub fn from_planar(planar: &PlanarPointSet) -> Result<Self> {
        let mut points = Vec::with_capacity(planar.len());
        for &p in planar.points() {
            points.push(lambert_forward(p)?);
        }
        if points.is_empty() {
            return Err(Error::TooFew { need: 1, got: 0 });
        }
        Ok(SpherePointSet {
            points,
            origin: Some(planar.clone()),
        })
    }

    pub fn points(&self) -> &[UnitVec3] {
        &self.points
    }

    pub fn origin(&self) -> Option<&PlanarPointSet> {
        self.origin.as_ref()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Number of points inside the cap under its boundary convention.
    pub fn cap_count(&self, cap: Cap) -> usize {
        self.points.iter().filter(|&&p| cap.contains(p)).count()
    }

    /// Header: x,y,z. One row per point.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,y,z\n");
        for p in &self.points {
            out.push_str(&format!("{},{},{}\n", p.x(), p.y(), p.z()));
        }
        out
    }

    /// Rows must be unit vectors within 1e-6; they are renormalized on load.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        match lines.next() {
            Some(h) if h.trim() == "x,y,z" => {}
            other => {
                return Err(Error::DomainError(format!(
                    "expected header 'x,y,z', got {:?}",
                    other.unwrap_or("")
                )))
            }
        }
        let mut points = Vec::new();
        for (i, line) in lines.enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let mut vals = [0.0_f64; 3];
            let mut parts = line.split(',');
            for v in &mut vals {
                let field = parts.next().ok_or_else(|| {
                    Error::DomainError(format!("line {}: expected 3 fields", i + 2))
                })?;
                *v = field.trim().parse::<f64>().map_err(|e| {
                    Error::DomainError(format!("line {}: {e}", i + 2))
                })?;
            }
            if parts.next().is_some() {
                return Err(Error::DomainError(format!(
                    "line {}: expected 3 fields",
                    i + 2
                )));
            }
            let norm = (vals[0] * vals[0] + vals[1] * vals[1] + vals[2] * vals[2]).sqrt();
            if !norm.is_finite() || (norm - 1.0).abs() > 1e-6 {
                return Err(Error::DomainError(format!(
                    "line {}: row has norm {norm}, not a unit vector",
                    i + 2
                )));
            }
            points.push(UnitVec3::from_unnormalized(vals[0], vals[1], vals[2])?);
        }
        SpherePointSet::from_points(points)
    }
}

/// How a discrepancy value was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Method {
    /// Supremum over the full certificate family of caps.
    Exact,
    /// Maximum over seeded random cap centers, each scanned over every
    /// threshold.
    Estimate { trials: u64, seed: u64 },
    /// Closed-form polar cap argument; a lower bound, not a supremum.
    Certificate,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DiscrepancyReport {
    pub value: f64,
    pub witness: Cap,
    pub method: Method,
    pub points_in_witness: usize,
    pub n: usize,
}

impl DiscrepancyReport {
    /// |value| must match the witness cap's own count/area gap.
    pub fn witness_gap(&self, set: &SpherePointSet) -> f64 {
        let count = set.cap_count(self.witness) as f64;
        let emp = count / self.n as f64 - self.witness.normalized_area();
        (self.value - emp.abs()).abs()
    }
}

struct Best {
    value: f64,
    order: usize,
    t: f64,
    closed: bool,
    count: usize,
}

/// For a fixed center, the supremum over all heights t in [-1, 1] of
/// |count/N - (1-t)/2| is attained at a threshold equal to one of the dot
/// products, under either boundary convention. Between consecutive dots the
/// count is constant while the area term moves monotonically, so interior
/// heights are dominated by an endpoint; the limits t -> +-1 are dominated
/// the same way.
fn scan_center(points: &[UnitVec3], w: UnitVec3, dots: &mut Vec<f64>) -> (f64, f64, bool, usize) {
    let n = points.len();
    dots.clear();
    dots.extend(points.iter().map(|p| w.dot(*p).clamp(-1.0, 1.0)));
    dots.sort_unstable_by(f64::total_cmp);
    let nf = n as f64;
    let mut best = (-1.0, 0.0, true, 0usize);
    let mut i = 0;
    while i < n {
        let t = dots[i];
        let mut j = i;
        while j < n && dots[j] == t {
            j += 1;
        }
        let area = (1.0 - t) / 2.0;
        // closed cap keeps every dot >= t, open keeps > t
        for (count, closed) in [(n - i, true), (n - j, false)] {
            let value = (count as f64 / nf - area).abs();
            if value > best.0 {
                best = (value, t, closed, count);
            }
        }
        i = j;
    }
    best
}

fn reduce_best(a: Option<Best>, b: Option<Best>) -> Option<Best> {
    match (a, b) {
        (None, x) | (x, None) => x,
        (Some(a), Some(b)) => {
            // ties break toward the earlier candidate for determinism
            if b.value > a.value || (b.value == a.value && b.order < a.order) {
                Some(b)
            } else {
                Some(a)
            }
        }
    }
}

fn finish_report(
    set: &SpherePointSet,
    best: Best,
    center: UnitVec3,
    method: Method,
) -> Result<DiscrepancyReport> {
    let witness = Cap::new(center, best.t)?.with_closed(best.closed);
    let report = DiscrepancyReport {
        value: best.value,
        witness,
        method,
        points_in_witness: best.count,
        n: set.len(),
    };
    debug_assert!(report.witness_gap(set) <= 1e-12);
    Ok(report)
}

/// Exact cap discrepancy by enumerating every pinned cap.
///
/// Centers: +-p_i, +-normalize(p_i + p_j), and +-normals of point triples;
/// each is scanned over all point thresholds under both boundary
/// conventions. Cost grows like N^3 centers times N log N per scan, so sets
/// larger than `limit` are refused.
pub fn exact_discrepancy(set: &SpherePointSet, limit: usize) -> Result<DiscrepancyReport> {
    let n = set.len();
    if n == 0 {
        return Err(Error::TooFew { need: 1, got: 0 });
    }
    if n > limit {
        return Err(Error::TooLarge { n, limit });
    }
    let pts = set.points();

    let mut centers: Vec<UnitVec3> = Vec::new();
    for &p in pts {
        centers.push(p);
        centers.push(p.neg());
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let s = [
                pts[i].x() + pts[j].x(),
                pts[i].y() + pts[j].y(),
                pts[i].z() + pts[j].z(),
            ];
            let norm = (s[0] * s[0] + s[1] * s[1] + s[2] * s[2]).sqrt();
            if norm <= 1e-12 {
                continue; // antipodal pair has no midpoint direction
            }
            let w = UnitVec3::from_unnormalized(s[0], s[1], s[2])?;
            centers.push(w);
            centers.push(w.neg());
        }
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let u = [
                pts[j].x() - pts[i].x(),
                pts[j].y() - pts[i].y(),
                pts[j].z() - pts[i].z(),
            ];
            let nu = (u[0] * u[0] + u[1] * u[1] + u[2] * u[2]).sqrt();
            for k in (j + 1)..n {
                let v = [
                    pts[k].x() - pts[i].x(),
                    pts[k].y() - pts[i].y(),
                    pts[k].z() - pts[i].z(),
                ];
                let nv = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
                let c = [
                    u[1] * v[2] - u[2] * v[1],
                    u[2] * v[0] - u[0] * v[2],
                    u[0] * v[1] - u[1] * v[0],
                ];
                let nc = (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]).sqrt();
                if nc <= 1e-12 * nu * nv {
                    continue; // collinear triple spans no circle
                }
                let w = UnitVec3::from_unnormalized(c[0], c[1], c[2])?;
                centers.push(w);
                centers.push(w.neg());
            }
        }
    }

    let best = centers
        .par_iter()
        .enumerate()
        .map(|(order, &w)| {
            let mut dots = Vec::with_capacity(n);
            let (value, t, closed, count) = scan_center(pts, w, &mut dots);
            Some(Best {
                value,
                order,
                t,
                closed,
                count,
            })
        })
        .reduce(|| None, reduce_best)
        .expect("non-empty candidate family");
    let center = centers[best.order];
    finish_report(set, best, center, Method::Exact)
}

/// Monte Carlo lower estimate: seeded uniform random centers, each scanned
/// over every threshold. Never exceeds the exact value, and is monotone in
/// `trials` for a fixed seed because trial i draws from its own stream.
pub fn estimate_discrepancy(
    set: &SpherePointSet,
    trials: u64,
    seed: u64,
) -> Result<DiscrepancyReport> {
    if set.is_empty() {
        return Err(Error::TooFew { need: 1, got: 0 });
    }
    if trials == 0 {
        return Err(Error::InvalidConfig("estimate needs trials >= 1".into()));
    }
    let pts = set.points();
    let n = pts.len();

    let best = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = ChaCha8Rng::seed_from_u64(lattice::mix_seed(seed, trial as i64, -1));
            let w = loop {
                let x: f64 = rng.sample(StandardNormal);
                let y: f64 = rng.sample(StandardNormal);
                let z: f64 = rng.sample(StandardNormal);
                if (x * x + y * y + z * z).sqrt() >= 1e-6 {
                    break UnitVec3::from_unnormalized(x, y, z).expect("finite gaussian draw");
                }
            };
            let mut dots = Vec::with_capacity(n);
            let (value, t, closed, count) = scan_center(pts, w, &mut dots);
            Some((
                Best {
                    value,
                    order: trial as usize,
                    t,
                    closed,
                    count,
                },
                w,
            ))
        })
        .reduce(
            || None,
            |a, b| match (a, b) {
                (None, x) | (x, None) => x,
                (Some(a), Some(b)) => {
                    if b.0.value > a.0.value || (b.0.value == a.0.value && b.0.order < a.0.order) {
                        Some(b)
                    } else {
                        Some(a)
                    }
                }
            },
        )
        .expect("at least one trial");
    let (best, center) = best;
    finish_report(
        set,
        best,
        center,
        Method::Estimate { trials, seed },
    )
}

/// Lower-bound certificate from the empty polar cap of the centered unit
/// lattice: with rows at z = 1 - (2j + 1)/K, the cap about the north pole
/// with height t = 1 - 1/(2K) + delta contains no point, so the discrepancy
/// is at least its area (1 - t)/2 = 1/(4K) - delta/2.
pub fn polar_certificate(k: u32) -> Result<DiscrepancyReport> {
    if k == 0 {
        return Err(Error::InvalidConfig("certificate needs K >= 1".into()));
    }
    let config = LatticeConfig::new(Mat2::identity(), k, Perturbation::CellCenter);
    let planar = build_point_set(&config)?;
    let set = SpherePointSet::from_planar(&planar)?;
    let delta = 1e-9;
    let t = 1.0 - 1.0 / (2.0 * k as f64) + delta;
    let witness = Cap::new(UnitVec3::north_pole(), t)?;
    let count = set.cap_count(witness);
    let value = (count as f64 / set.len() as f64 - witness.normalized_area()).abs();
    Ok(DiscrepancyReport {
        value,
        witness,
        method: Method::Certificate,
        points_in_witness: count,
        n: set.len(),
    })
}

/// Smallest pairwise chordal distance, via a z-sweep with pruning.
pub fn separation_distance(set: &SpherePointSet) -> Result<f64> {
    let pts = set.points();
    let n = pts.len();
    if n < 2 {
        return Err(Error::TooFew { need: 2, got: n });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_unstable_by(|&a, &b| pts[a].z().total_cmp(&pts[b].z()));
    let mut best2 = f64::INFINITY;
    for (i, &a) in order.iter().enumerate() {
        for &b in &order[i + 1..] {
            let dz = pts[b].z() - pts[a].z();
            // chordal distance dominates the z gap
            if dz * dz >= best2 {
                break;
            }
            let d2 = (2.0 - 2.0 * pts[a].dot(pts[b])).max(0.0);
            if d2 < best2 {
                best2 = d2;
            }
        }
    }
    Ok(best2.sqrt())
}
