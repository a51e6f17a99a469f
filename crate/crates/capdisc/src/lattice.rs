//! Scaled lattice tilings of the plane and the point sets they induce on
//! the half-open unit square.
//!
//! A full-rank matrix `q` spans the lattice `q Z^2`. At scale `k` the plane
//! is tiled by the cells `(1/k)(q(n + [0,1)^2) + v)`, `n` ranging over `Z^2`,
//! and the point set keeps one chosen point per cell that lands inside
//! `[0,1) x (0,1)`. Cell membership is half-open, so every plane point
//! belongs to exactly one cell.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::planar::{Mat2, Vec2};

/// How the representative point of each cell is chosen.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Perturbation {
    /// Cell center: offset `(1/2, 1/2)` in lattice coordinates.
    CellCenter,
    /// The lattice point itself: offset `(0, 0)`.
    LatticePoint,
    /// Independent uniform offset in `[0,1)^2` per cell, drawn from a
    /// generator seeded by (seed, cell index), so the draw for a cell does
    /// not depend on enumeration order.
    UniformRandom { seed: u64 },
    /// One fixed offset `u in [0,1)^2` shared by every cell.
    CustomOffset { u: [f64; 2] },
}

impl Perturbation {
    fn offset(self, ix: i64, iy: i64) -> Result<Vec2> {
        match self {
            Perturbation::CellCenter => Ok(Vec2::new(0.5, 0.5)),
            Perturbation::LatticePoint => Ok(Vec2::new(0.0, 0.0)),
            Perturbation::UniformRandom { seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, ix, iy));
                Ok(Vec2::new(rng.random::<f64>(), rng.random::<f64>()))
            }
            Perturbation::CustomOffset { u } => {
                if !(0.0..1.0).contains(&u[0]) || !(0.0..1.0).contains(&u[1]) {
                    return Err(Error::InvalidConfig(format!(
                        "custom offset ({}, {}) outside [0,1)^2",
                        u[0], u[1]
                    )));
                }
                Ok(Vec2::new(u[0], u[1]))
            }
        }
    }
}

/// splitmix64-style mixing of a seed with a cell index.
pub(crate) fn mix_seed(seed: u64, ix: i64, iy: i64) -> u64 {
    let mut h = seed
        .wrapping_add((ix as u64).wrapping_mul(0x9E3779B97F4A7C15))
        .wrapping_add((iy as u64).wrapping_mul(0xC2B2AE3D27D4EB4F));
    h = (h ^ (h >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    h = (h ^ (h >> 27)).wrapping_mul(0x94D049BB133111EB);
    h ^ (h >> 31)
}

/// Recipe for a point set: lattice matrix, scale, tiling offset and the
/// per-cell choice rule.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticeConfig {
    pub matrix: Mat2,
    pub k: u32,
    #[serde(default)]
    pub offset: [f64; 2],
    pub perturbation: Perturbation,
}

impl LatticeConfig {
    pub fn new(matrix: Mat2, k: u32, perturbation: Perturbation) -> Self {
        LatticeConfig {
            matrix,
            k,
            offset: [0.0, 0.0],
            perturbation,
        }
    }

    pub fn with_offset(mut self, v: Vec2) -> Self {
        self.offset = [v.x, v.y];
        self
    }

    pub fn offset_vec(&self) -> Vec2 {
        Vec2::new(self.offset[0], self.offset[1])
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidConfig("scale k must be positive".into()));
        }
        if self.matrix.is_singular() {
            return Err(Error::SingularMatrix {
                det: self.matrix.det(),
            });
        }
        if !self.offset[0].is_finite() || !self.offset[1].is_finite() {
            return Err(Error::InvalidConfig("tiling offset must be finite".into()));
        }
        Ok(())
    }
}

/// A point set on the unit square together with the cell each point came
/// from. Points are ordered by cell index `(iy, ix)` ascending.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanarPointSet {
    pub config: LatticeConfig,
    points: Vec<Vec2>,
    provenance: Vec<[i64; 2]>,
}

impl PlanarPointSet {
    pub fn points(&self) -> &[Vec2] {
        &self.points
    }

    pub fn provenance(&self) -> &[[i64; 2]] {
        &self.provenance
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// `(1/k) |N - k^2 / |det q||`, the deviation of the point count from
    /// the area-predicted count.
    pub fn count_deviation(&self) -> f64 {
        let k = self.config.k as f64;
        let expected = k * k / self.config.matrix.det().abs();
        (self.len() as f64 - expected).abs() / k
    }

    /// CSV with header `px,py,ix,iy`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("px,py,ix,iy\n");
        for (p, idx) in self.points.iter().zip(&self.provenance) {
            out.push_str(&format!("{},{},{},{}\n", p.x, p.y, idx[0], idx[1]));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().unwrap_or("");
        if header.trim() != "px,py,ix,iy" {
            return Err(Error::InvalidConfig(format!(
                "expected header 'px,py,ix,iy', got '{header}'"
            )));
        }
        let mut points = Vec::new();
        let mut provenance = Vec::new();
        for (ln, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 4 {
                return Err(Error::InvalidConfig(format!(
                    "line {}: expected 4 columns, got {}",
                    ln + 2,
                    cols.len()
                )));
            }
            let px: f64 = cols[0].trim().parse().map_err(|_| {
                Error::InvalidConfig(format!("line {}: bad px '{}'", ln + 2, cols[0]))
            })?;
            let py: f64 = cols[1].trim().parse().map_err(|_| {
                Error::InvalidConfig(format!("line {}: bad py '{}'", ln + 2, cols[1]))
            })?;
            let ix: i64 = cols[2].trim().parse().map_err(|_| {
                Error::InvalidConfig(format!("line {}: bad ix '{}'", ln + 2, cols[2]))
            })?;
            let iy: i64 = cols[3].trim().parse().map_err(|_| {
                Error::InvalidConfig(format!("line {}: bad iy '{}'", ln + 2, cols[3]))
            })?;
            if !(0.0..1.0).contains(&px) || !(py > 0.0 && py < 1.0) {
                return Err(Error::InvalidConfig(format!(
                    "line {}: point ({px}, {py}) outside [0,1) x (0,1)",
                    ln + 2
                )));
            }
            points.push(Vec2::new(px, py));
            provenance.push([ix, iy]);
        }
        // CSV carries no matrix; record the identity recipe it no longer
        // depends on.
        Ok(PlanarPointSet {
            config: LatticeConfig::new(Mat2::identity(), 1, Perturbation::LatticePoint),
            points,
            provenance,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("point set serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))
    }
}

fn floor_snap(t: f64) -> i64 {
    let r = t.round();
    if (t - r).abs() <= 1e-9 * (1.0 + t.abs()) {
        r as i64
    } else {
        t.floor() as i64
    }
}

/// Index of the tiling cell containing `p` (in `[0,1)^2`-of-the-plane
/// coordinates): component-wise floor of `q^{-1} (k p - v)`, with snapping
/// so that a point computed as the image of an exact cell corner lands in
/// the cell that corner starts.
pub fn cell_index(config: &LatticeConfig, p: Vec2) -> Result<[i64; 2]> {
    config.validate()?;
    let inv = config.matrix.inverse()?;
    let k = config.k as f64;
    let u = inv.mul_vec(Vec2::new(k * p.x, k * p.y) - config.offset_vec());
    Ok([floor_snap(u.x), floor_snap(u.y)])
}

/// Build the point set: one representative per tiling cell, kept when it
/// falls inside `[0,1) x (0,1)`.
pub fn build_point_set(config: &LatticeConfig) -> Result<PlanarPointSet> {
    config.validate()?;
    let q = config.matrix;
    let inv = q.inverse()?;
    let k = config.k as f64;
    let v = config.offset_vec();

    // Lattice-coordinate bounding box of the square's corners, padded by one
    // cell so every cell that can reach the square is scanned.
    let mut lo_x = i64::MAX;
    let mut hi_x = i64::MIN;
    let mut lo_y = i64::MAX;
    let mut hi_y = i64::MIN;
    for corner in [
        Vec2::new(0.0, 0.0),
        Vec2::new(k, 0.0),
        Vec2::new(0.0, k),
        Vec2::new(k, k),
    ] {
        let u = inv.mul_vec(corner - v);
        lo_x = lo_x.min(u.x.floor() as i64);
        hi_x = hi_x.max(u.x.ceil() as i64);
        lo_y = lo_y.min(u.y.floor() as i64);
        hi_y = hi_y.max(u.y.ceil() as i64);
    }

    let mut points = Vec::new();
    let mut provenance = Vec::new();
    for iy in lo_y - 1..=hi_y + 1 {
        for ix in lo_x - 1..=hi_x + 1 {
            let u = config.perturbation.offset(ix, iy)?;
            let lattice = Vec2::new(ix as f64 + u.x, iy as f64 + u.y);
            let z = (q.mul_vec(lattice) + v) * (1.0 / k);
            if (0.0..1.0).contains(&z.x) && z.y > 0.0 && z.y < 1.0 {
                points.push(z);
                provenance.push([ix, iy]);
            }
        }
    }
    let set = PlanarPointSet {
        config: *config,
        points,
        provenance,
    };
    debug_assert!(set
        .points
        .iter()
        .zip(&set.provenance)
        .all(|(&p, &idx)| cell_index(config, p).unwrap() == idx));
    Ok(set)
}

/// Adjust the point count to exactly `round(k^2 / |det q|)`.
///
/// When the set is too large, the points closest to the boundary of the
/// square are removed (distance `min(x, 1-x, y, 1-y)`, ties broken by
/// lexicographic point order). When too small, the deficit is filled with
/// points on the line `y = 1/(2k)` at `x = (i + 1/2)/deficit`; a fill point
/// colliding with an existing point is nudged right by `1/(4 k deficit)`.
/// Fill points carry synthetic provenance on the row `iy = (min scanned iy)
/// - 2`, below every genuine cell row.
pub fn modified_point_set(config: &LatticeConfig) -> Result<PlanarPointSet> {
    let set = build_point_set(config)?;
    let k = config.k as f64;
    let target = (k * k / config.matrix.det().abs()).round() as usize;
    let n = set.len();

    if n == target {
        return Ok(set);
    }

    let mut points = set.points;
    let mut provenance = set.provenance;

    if n > target {
        let mut order: Vec<usize> = (0..n).collect();
        let edge_dist = |p: Vec2| p.x.min(1.0 - p.x).min(p.y).min(1.0 - p.y);
        order.sort_by(|&i, &j| {
            let di = edge_dist(points[i]);
            let dj = edge_dist(points[j]);
            di.total_cmp(&dj)
                .then(points[i].x.total_cmp(&points[j].x))
                .then(points[i].y.total_cmp(&points[j].y))
        });
        let mut drop = vec![false; n];
        for &i in order.iter().take(n - target) {
            drop[i] = true;
        }
        let mut kept_points = Vec::with_capacity(target);
        let mut kept_prov = Vec::with_capacity(target);
        for i in 0..n {
            if !drop[i] {
                kept_points.push(points[i]);
                kept_prov.push(provenance[i]);
            }
        }
        points = kept_points;
        provenance = kept_prov;
    } else {
        let deficit = target - n;
        let synth_row = provenance.iter().map(|p| p[1]).min().unwrap_or(0) - 2;
        let y = 1.0 / (2.0 * k);
        for i in 0..deficit {
            let mut x = (i as f64 + 0.5) / deficit as f64;
            let nudge = 1.0 / (4.0 * k * deficit as f64);
            while points.iter().any(|p| p.x == x && p.y == y) {
                x += nudge;
            }
            points.push(Vec2::new(x, y));
            provenance.push([i as i64, synth_row]);
        }
    }

    Ok(PlanarPointSet {
        config: *config,
        points,
        provenance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn identity_config(k: u32, pert: Perturbation) -> LatticeConfig {
        LatticeConfig::new(Mat2::identity(), k, pert)
    }

    #[test]
    fn lattice_points_at_scale_three() {
        // Unperturbed integer lattice at k = 3: interior points with
        // x in {0, 1/3, 2/3}, y in {1/3, 2/3}.
        let set = build_point_set(&identity_config(3, Perturbation::LatticePoint)).unwrap();
        assert_eq!(set.len(), 6);
        assert!((set.count_deviation() - 1.0).abs() < 1e-15);
        for p in set.points() {
            assert!(p.y > 0.0 && p.y < 1.0);
        }
    }

    #[test]
    fn centered_cells_fill_the_square_exactly() {
        for k in [1u32, 2, 5, 8] {
            let set = build_point_set(&identity_config(k, Perturbation::CellCenter)).unwrap();
            assert_eq!(set.len(), (k * k) as usize);
            assert_eq!(set.count_deviation(), 0.0);
        }
    }

    #[test]
    fn uniform_random_at_scale_two_keeps_four_points() {
        let set = build_point_set(&identity_config(
            2,
            Perturbation::UniformRandom { seed: 7 },
        ))
        .unwrap();
        assert_eq!(set.len(), 4);
    }

    #[test]
    fn uniform_random_is_deterministic_in_the_seed() {
        let cfg = identity_config(5, Perturbation::UniformRandom { seed: 42 });
        let a = build_point_set(&cfg).unwrap();
        let b = build_point_set(&cfg).unwrap();
        assert_eq!(a, b);
        let c = build_point_set(&identity_config(
            5,
            Perturbation::UniformRandom { seed: 43 },
        ))
        .unwrap();
        assert_ne!(a.points(), c.points());
    }

    #[test]
    fn provenance_matches_cell_index() {
        let cfg = LatticeConfig::new(
            Mat2::rotation_like(1.618033988749895),
            7,
            Perturbation::UniformRandom { seed: 3 },
        );
        let set = build_point_set(&cfg).unwrap();
        assert!(!set.is_empty());
        for (p, idx) in set.points().iter().zip(set.provenance()) {
            assert_eq!(cell_index(&cfg, *p).unwrap(), *idx);
        }
    }

    #[test]
    fn cell_index_snaps_exact_corners() {
        let cfg = identity_config(4, Perturbation::LatticePoint);
        // (0.25, 0.5) is the image of lattice point (1, 2); its cell is (1, 2).
        assert_eq!(cell_index(&cfg, Vec2::new(0.25, 0.5)).unwrap(), [1, 2]);
        assert_eq!(cell_index(&cfg, Vec2::new(0.0, 0.5)).unwrap(), [0, 2]);
    }

    #[test]
    fn custom_offset_matches_formula() {
        let cfg = LatticeConfig::new(
            Mat2::identity(),
            2,
            Perturbation::CustomOffset { u: [0.25, 0.75] },
        );
        let set = build_point_set(&cfg).unwrap();
        assert_eq!(set.len(), 4);
        for (p, idx) in set.points().iter().zip(set.provenance()) {
            let expect = Vec2::new(
                (idx[0] as f64 + 0.25) / 2.0,
                (idx[1] as f64 + 0.75) / 2.0,
            );
            assert!((p.x - expect.x).abs() < 1e-15);
            assert!((p.y - expect.y).abs() < 1e-15);
        }
        let bad = LatticeConfig::new(
            Mat2::identity(),
            2,
            Perturbation::CustomOffset { u: [1.0, 0.0] },
        );
        assert!(build_point_set(&bad).is_err());
    }

    #[test]
    fn tiling_offset_translates_the_pattern() {
        let base = identity_config(4, Perturbation::CellCenter);
        let shifted = base.with_offset(Vec2::new(0.125, 0.125));
        let a = build_point_set(&base).unwrap();
        let b = build_point_set(&shifted).unwrap();
        assert_eq!(a.len(), b.len());
        // Every shifted point is an original point plus v/k, up to wrap.
        for p in b.points() {
            let q = Vec2::new(p.x - 0.125 / 4.0, p.y - 0.125 / 4.0);
            assert!(a
                .points()
                .iter()
                .any(|r| (r.x - q.x).abs() < 1e-12 && (r.y - q.y).abs() < 1e-12
                    || (r.x - q.x - 1.0).abs() < 1e-12 && (r.y - q.y).abs() < 1e-12));
        }
    }

    #[test]
    fn modified_set_fills_deficit_on_the_bottom_line() {
        let cfg = identity_config(3, Perturbation::LatticePoint);
        let set = modified_point_set(&cfg).unwrap();
        assert_eq!(set.len(), 9);
        assert_eq!(set.count_deviation(), 0.0);
        let filled: Vec<&Vec2> = set
            .points()
            .iter()
            .filter(|p| (p.y - 1.0 / 6.0).abs() < 1e-15)
            .collect();
        assert_eq!(filled.len(), 3);
        let xs: Vec<f64> = filled.iter().map(|p| p.x).collect();
        assert!((xs[0] - 1.0 / 6.0).abs() < 1e-15);
        assert!((xs[1] - 0.5).abs() < 1e-15);
        assert!((xs[2] - 5.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn modified_set_trims_excess_near_the_boundary() {
        // det = 1.25 at k = 2: target round(4 / 1.25) = 3, built set has 4.
        let cfg = LatticeConfig::new(
            Mat2::diagonal(1.25, 1.0),
            2,
            Perturbation::CellCenter,
        );
        let built = build_point_set(&cfg).unwrap();
        let modified = modified_point_set(&cfg).unwrap();
        assert_eq!(
            modified.len(),
            (4.0f64 / 1.25).round() as usize,
            "target count"
        );
        assert!(modified.len() <= built.len());
        // Dropped points were the ones closest to the square's edge.
        let edge = |p: &Vec2| p.x.min(1.0 - p.x).min(p.y).min(1.0 - p.y);
        let dropped: Vec<&Vec2> = built
            .points()
            .iter()
            .filter(|p| !modified.points().contains(p))
            .collect();
        let min_kept = modified
            .points()
            .iter()
            .map(|p| edge(p))
            .fold(f64::INFINITY, f64::min);
        for d in dropped {
            assert!(edge(d) <= min_kept + 1e-15);
        }
    }

    #[test]
    fn csv_roundtrip_preserves_points_exactly() {
        let cfg = LatticeConfig::new(
            Mat2::rotation_like(0.5),
            5,
            Perturbation::UniformRandom { seed: 9 },
        );
        let set = build_point_set(&cfg).unwrap();
        let parsed = PlanarPointSet::from_csv(&set.to_csv()).unwrap();
        assert_eq!(set.points(), parsed.points());
        assert_eq!(set.provenance(), parsed.provenance());
    }

    #[test]
    fn json_roundtrip_preserves_everything() {
        let cfg = LatticeConfig::new(
            Mat2::rotation_like(0.5),
            4,
            Perturbation::UniformRandom { seed: 9 },
        );
        let set = build_point_set(&cfg).unwrap();
        let parsed = PlanarPointSet::from_json(&set.to_json()).unwrap();
        assert_eq!(set, parsed);
    }

    #[test]
    fn zero_scale_and_singular_matrices_are_rejected() {
        let cfg = LatticeConfig::new(Mat2::identity(), 0, Perturbation::CellCenter);
        assert!(build_point_set(&cfg).is_err());
        let cfg = LatticeConfig::new(
            Mat2::new(1.0, 2.0, 2.0, 4.0),
            3,
            Perturbation::CellCenter,
        );
        assert!(matches!(
            build_point_set(&cfg),
            Err(Error::SingularMatrix { .. })
        ));
    }
}
