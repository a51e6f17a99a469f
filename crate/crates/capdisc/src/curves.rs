//! Canonical test curves with declared convexity data.

use std::f64::consts::PI;

use crate::error::Result;
use crate::planar::{Polyline, Vec2};

/// Straight segment: one convex piece, no self-intersections.
pub fn segment(a: Vec2, b: Vec2) -> Result<Polyline> {
    Ok(Polyline::open(vec![a, b])?.with_convexity(1))
}

/// The unit diagonal translated right by `offset`:
/// `(offset, 0)` to `(1 + offset, 1)`.
pub fn translated_diagonal(offset: f64) -> Result<Polyline> {
    segment(Vec2::new(offset, 0.0), Vec2::new(1.0 + offset, 1.0))
}

/// Closed circle sampled at `vertices` points: one convex piece.
pub fn circle(center: Vec2, radius: f64, vertices: usize) -> Result<Polyline> {
    assert!(vertices >= 3, "a circle needs at least 3 vertices");
    assert!(radius > 0.0, "radius must be positive");
    let pts = (0..vertices)
        .map(|i| {
            let a = 2.0 * PI * i as f64 / vertices as f64;
            Vec2::new(center.x + radius * a.cos(), center.y + radius * a.sin())
        })
        .collect();
    Ok(Polyline::closed(pts)?.with_convexity(1))
}

/// Archimedean spiral `r = spacing * angle / (2 pi)` over `half_turns` half
/// turns: each half turn is one convex piece, and the spiral never crosses
/// itself.
pub fn archimedean_spiral(
    center: Vec2,
    spacing: f64,
    half_turns: usize,
    vertices: usize,
) -> Result<Polyline> {
    assert!(half_turns >= 1, "need at least one half turn");
    assert!(vertices >= 2 * half_turns, "too few vertices for the spiral");
    assert!(spacing > 0.0, "spacing must be positive");
    let total_angle = PI * half_turns as f64;
    let pts = (0..=vertices)
        .map(|i| {
            let a = total_angle * i as f64 / vertices as f64;
            let r = spacing * a / (2.0 * PI);
            Vec2::new(center.x + r * a.cos(), center.y + r * a.sin())
        })
        .collect();
    Ok(Polyline::open(pts)?.with_convexity(half_turns))
}
