//! Exact enumeration of tiling cells met by a polyline, and the closed-form
//! bound that enumeration can never exceed.
//!
//! A curve in the unit square is pulled back to lattice coordinates
//! `u = q^{-1}(k p - v)`, where the tiling cells are the integer unit cells
//! `[i, i+1) x [j, j+1)`. Each segment is then walked with an exact
//! grid-crossing sweep, so the visited-cell set is combinatorial, not
//! sampled.

use serde::{Deserialize, Serialize};
use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::planar::{Mat2, Polyline, Vec2};

fn floor_snap(t: f64) -> i64 {
    let r = t.round();
    if (t - r).abs() <= 1e-9 * (1.0 + t.abs()) {
        r as i64
    } else {
        t.floor() as i64
    }
}

/// Cell occupied as the parameter reaches the segment's endpoint. A segment
/// that stops exactly on a grid line never enters the far side, so the cell
/// is taken from the approach direction, not from half-open membership.
fn endpoint_cell(end: f64, d: f64, start_cell: i64) -> i64 {
    if d == 0.0 {
        return start_cell;
    }
    let r = end.round();
    let cell = if (end - r).abs() <= 1e-9 * (1.0 + end.abs()) {
        if d > 0.0 {
            r as i64 - 1
        } else {
            r as i64
        }
    } else {
        end.floor() as i64
    };
    // A sub-snap-width segment can place the endpoint cell behind the
    // snapped start cell; never walk against the direction of travel.
    if d > 0.0 {
        cell.max(start_cell)
    } else {
        cell.min(start_cell)
    }
}

/// Walk one segment through the integer grid, inserting every visited cell.
/// Boundary points count for the half-open cell they start; a pass through a
/// grid corner counts only the cell the parameter enters, and stopping on a
/// grid line does not count the far cell.
///
/// The walk is driven to the endpoint's cell, so the crossing parameters
/// only order the x/y steps; they are never compared against the parameter
/// range, which keeps the count stable when a crossing lands within float
/// noise of the endpoint.
fn walk_segment(a: Vec2, b: Vec2, cells: &mut HashSet<(i64, i64)>) {
    let start_x = floor_snap(a.x);
    let start_y = floor_snap(a.y);
    let mut cx = start_x;
    let mut cy = start_y;
    cells.insert((cx, cy));

    let dx = b.x - a.x;
    let dy = b.y - a.y;
    let ex = endpoint_cell(b.x, dx, start_x);
    let ey = endpoint_cell(b.y, dy, start_y);
    let step_x: i64 = if dx > 0.0 { 1 } else { -1 };
    let step_y: i64 = if dy > 0.0 { 1 } else { -1 };
    let mut t_max_x = if dx > 0.0 {
        ((cx + 1) as f64 - a.x) / dx
    } else if dx < 0.0 {
        (cx as f64 - a.x) / dx
    } else {
        f64::INFINITY
    };
    let mut t_max_y = if dy > 0.0 {
        ((cy + 1) as f64 - a.y) / dy
    } else if dy < 0.0 {
        (cy as f64 - a.y) / dy
    } else {
        f64::INFINITY
    };
    let t_delta_x = if dx != 0.0 { (1.0 / dx).abs() } else { f64::INFINITY };
    let t_delta_y = if dy != 0.0 { (1.0 / dy).abs() } else { f64::INFINITY };

    while (cx, cy) != (ex, ey) {
        let need_x = cx != ex;
        let need_y = cy != ey;
        if need_x && (!need_y || t_max_x < t_max_y) {
            cx += step_x;
            t_max_x += t_delta_x;
        } else if need_y && (!need_x || t_max_y < t_max_x) {
            cy += step_y;
            t_max_y += t_delta_y;
        } else {
            // Exact corner pass: enter the diagonal neighbor only.
            cx += step_x;
            cy += step_y;
            t_max_x += t_delta_x;
            t_max_y += t_delta_y;
        }
        cells.insert((cx, cy));
    }
}

/// Number of tiling cells `(1/k)(q(n + [0,1)^2) + v)` that `beta` meets.
pub fn intersection_number(beta: &Polyline, q: Mat2, k: u32, v: Vec2) -> Result<usize> {
    if k == 0 {
        return Err(Error::InvalidConfig("scale k must be positive".into()));
    }
    let inv = q.inverse()?;
    let kf = k as f64;
    let mapped: Vec<Vec2> = beta
        .vertices()
        .iter()
        .map(|&p| inv.mul_vec(Vec2::new(kf * p.x - v.x, kf * p.y - v.y)))
        .collect();
    let mut cells = HashSet::new();
    let n = mapped.len();
    let seg_count = if beta.is_closed() { n } else { n - 1 };
    for i in 0..seg_count {
        walk_segment(mapped[i], mapped[(i + 1) % n], &mut cells);
    }
    Ok(cells.len())
}

/// Closed-form ceiling for the intersection number of an `n`-convex curve
/// with `m` self-intersections:
/// `sqrt(2) k length(q^{-1} beta) + 19 n - m + 1`.
pub fn lemma_bound(beta: &Polyline, q: Mat2, k: u32) -> Result<f64> {
    let n = beta.convex_pieces().ok_or(Error::MissingConvexityData)?;
    let m = beta.self_intersections();
    let len = beta.transformed(q.inverse()?).length();
    Ok(2f64.sqrt() * k as f64 * len + 19.0 * n as f64 - m as f64 + 1.0)
}

/// Intersection count of a curve with a tiling, alongside the bound it is
/// guaranteed to respect.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntersectionReport {
    pub count: usize,
    pub bound: f64,
    /// Length of the curve in lattice coordinates, `length(q^{-1} beta)`.
    pub transformed_length: f64,
    /// Declared convex pieces of the curve.
    pub convex_pieces: usize,
    /// Declared self-intersections of the curve.
    pub self_intersections: usize,
    /// Vertex count of the polyline the walk ran on.
    pub resolution: usize,
}

impl IntersectionReport {
    pub fn compute(beta: &Polyline, q: Mat2, k: u32, v: Vec2) -> Result<Self> {
        let n = beta.convex_pieces().ok_or(Error::MissingConvexityData)?;
        let count = intersection_number(beta, q, k, v)?;
        let bound = lemma_bound(beta, q, k)?;
        Ok(IntersectionReport {
            count,
            bound,
            transformed_length: beta.transformed(q.inverse()?).length(),
            convex_pieces: n,
            self_intersections: beta.self_intersections(),
            resolution: beta.vertices().len(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curves;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ident() -> Mat2 {
        Mat2::identity()
    }

    fn origin() -> Vec2 {
        Vec2::new(0.0, 0.0)
    }

    #[test]
    fn diagonal_at_scale_five_meets_ten_cells() {
        let d = curves::translated_diagonal(0.05).unwrap();
        let n = intersection_number(&d, ident(), 5, origin()).unwrap();
        assert_eq!(n, 10);
    }

    #[test]
    fn axis_parallel_segment_meets_one_row() {
        let s = curves::segment(Vec2::new(0.05, 0.55), Vec2::new(0.95, 0.55)).unwrap();
        // At k = 10 the segment spans columns 0..9 of row 5.
        let n = intersection_number(&s, ident(), 10, origin()).unwrap();
        assert_eq!(n, 10);
    }

    #[test]
    fn corner_pass_enters_only_the_diagonal_cell() {
        // Through the corner (1, 1) of the k = 2 grid, exactly.
        let s = curves::segment(Vec2::new(0.25, 0.25), Vec2::new(0.75, 0.75)).unwrap();
        let n = intersection_number(&s, ident(), 2, origin()).unwrap();
        assert_eq!(n, 2);
    }

    #[test]
    fn zero_length_segment_meets_its_own_cell() {
        let s = curves::segment(Vec2::new(0.3, 0.3), Vec2::new(0.3, 0.3)).unwrap();
        assert_eq!(intersection_number(&s, ident(), 4, origin()).unwrap(), 1);
    }

    #[test]
    fn walk_matches_dense_sampling() {
        // Oracle: sample each segment at a million parameters and collect
        // the (half-open) cells of the samples.
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for trial in 0..100 {
            let a = Vec2::new(rng.random_range(0.0..1.0), rng.random_range(0.0..1.0));
            let b = Vec2::new(rng.random_range(0.0..1.0), rng.random_range(0.0..1.0));
            let k = rng.random_range(2u32..40);
            let s = curves::segment(a, b).unwrap();
            let walked = intersection_number(&s, ident(), k, origin()).unwrap();
            let kf = k as f64;
            let mut sampled: HashSet<(i64, i64)> = HashSet::new();
            let n = 1_000_000;
            for i in 0..=n {
                let t = i as f64 / n as f64;
                let p = Vec2::new(
                    kf * (a.x + t * (b.x - a.x)),
                    kf * (a.y + t * (b.y - a.y)),
                );
                sampled.insert((floor_snap(p.x), floor_snap(p.y)));
            }
            assert_eq!(walked, sampled.len(), "trial {trial}");
        }
    }

    #[test]
    fn count_respects_lemma_bound_for_standard_curves() {
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        for _ in 0..50 {
            let k = rng.random_range(1u32..60);
            let v = Vec2::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            let d = curves::translated_diagonal(rng.random_range(0.0..0.2)).unwrap();
            let c = curves::circle(
                Vec2::new(0.5, 0.5),
                rng.random_range(0.05..0.45),
                256,
            )
            .unwrap();
            for beta in [&d, &c] {
                let r = IntersectionReport::compute(beta, ident(), k, v).unwrap();
                assert!(
                    (r.count as f64) <= r.bound,
                    "count {} above bound {}",
                    r.count,
                    r.bound
                );
            }
        }
    }

    #[test]
    fn bound_requires_declared_convexity() {
        let bare = crate::planar::Polyline::open(vec![
            Vec2::new(0.0, 0.0),
            Vec2::new(1.0, 1.0),
        ])
        .unwrap();
        assert!(matches!(
            lemma_bound(&bare, ident(), 5),
            Err(Error::MissingConvexityData)
        ));
        assert!(intersection_number(&bare, ident(), 5, origin()).is_ok());
    }

    #[test]
    fn report_serializes_to_json() {
        let d = curves::translated_diagonal(0.05).unwrap();
        let r = IntersectionReport::compute(&d, ident(), 5, origin()).unwrap();
        let text = serde_json::to_string(&r).unwrap();
        let back: IntersectionReport = serde_json::from_str(&text).unwrap();
        assert_eq!(r, back);
    }
}
