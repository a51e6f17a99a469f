//! Planar primitives: 2-vectors, 2x2 matrices and polylines.
//!
//! Matrices use closed forms throughout (determinant, inverse, singular
//! values), so there is no iteration anywhere and results are reproducible
//! bit for bit. Polylines carry optional convexity metadata that downstream
//! cell-counting bounds require; the metadata is declared by the constructor
//! of the curve, not inferred.

use serde::{Deserialize, Serialize};
use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};

/// Relative determinant cutoff below which a matrix is treated as singular.
pub const SINGULAR_REL_TOL: f64 = 1e-12;
/// Relative singular-value cutoff separating rank 1 from rank 2.
pub const RANK_REL_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn norm2(self) -> f64 {
        self.x * self.x + self.y * self.y
    }

    pub fn dist(self, o: Vec2) -> f64 {
        (self - o).norm()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, s: f64) -> Vec2 {
        Vec2::new(self.x * s, self.y * s)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

/// Row-major 2x2 matrix `[[a, b], [c, d]]`.
///
/// Serialized as the flat array `[a, b, c, d]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mat2 {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Serialize for Mat2 {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        [self.a, self.b, self.c, self.d].serialize(s)
    }
}

impl<'de> Deserialize<'de> for Mat2 {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let [a, b, c, d] = <[f64; 4]>::deserialize(d)?;
        Ok(Mat2::new(a, b, c, d))
    }
}

impl Mat2 {
    pub const fn new(a: f64, b: f64, c: f64, d: f64) -> Self {
        Mat2 { a, b, c, d }
    }

    pub const fn identity() -> Self {
        Mat2::new(1.0, 0.0, 0.0, 1.0)
    }

    pub fn rotation(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Mat2::new(c, -s, s, c)
    }

    pub const fn diagonal(s1: f64, s2: f64) -> Self {
        Mat2::new(s1, 0.0, 0.0, s2)
    }

    /// The one-parameter family `[[x, -1], [1, x]]` with determinant `x^2 + 1`.
    pub const fn rotation_like(x: f64) -> Self {
        Mat2::new(x, -1.0, 1.0, x)
    }

    pub fn det(self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    pub fn frobenius(self) -> f64 {
        (self.a * self.a + self.b * self.b + self.c * self.c + self.d * self.d).sqrt()
    }

    pub fn transpose(self) -> Self {
        Mat2::new(self.a, self.c, self.b, self.d)
    }

    pub fn row(self, i: usize) -> Vec2 {
        match i {
            0 => Vec2::new(self.a, self.b),
            1 => Vec2::new(self.c, self.d),
            _ => panic!("row index out of range"),
        }
    }

    pub fn col(self, i: usize) -> Vec2 {
        match i {
            0 => Vec2::new(self.a, self.c),
            1 => Vec2::new(self.b, self.d),
            _ => panic!("column index out of range"),
        }
    }

    pub fn mul_vec(self, v: Vec2) -> Vec2 {
        Vec2::new(self.a * v.x + self.b * v.y, self.c * v.x + self.d * v.y)
    }

    pub fn mul_mat(self, o: Mat2) -> Mat2 {
        Mat2::new(
            self.a * o.a + self.b * o.c,
            self.a * o.b + self.b * o.d,
            self.c * o.a + self.d * o.c,
            self.c * o.b + self.d * o.d,
        )
    }

    pub fn scale(self, s: f64) -> Mat2 {
        Mat2::new(self.a * s, self.b * s, self.c * s, self.d * s)
    }

    /// Singular values `(sigma1, sigma2)` with `sigma1 >= sigma2 >= 0`, from
    /// the closed form `sigma^2 = (T +- sqrt(T^2 - 4 det^2)) / 2`,
    /// `T = frobenius^2`.
    pub fn singular_values(self) -> (f64, f64) {
        let t = self.a * self.a + self.b * self.b + self.c * self.c + self.d * self.d;
        let det = self.det();
        let disc = (t * t - 4.0 * det * det).max(0.0).sqrt();
        let s1 = ((t + disc) / 2.0).sqrt();
        // (T - disc)/2 cancels badly when det is tiny; sigma1*sigma2 = |det|
        // is exact, so recover sigma2 from the product.
        let s2 = if s1 > 0.0 {
            (det.abs() / s1).min(s1)
        } else {
            0.0
        };
        (s1, s2)
    }

    /// Numerical rank: 2 unless `sigma2 <= RANK_REL_TOL * sigma1`, 0 for the
    /// zero matrix.
    pub fn rank(self) -> u8 {
        let (s1, s2) = self.singular_values();
        if s1 == 0.0 {
            0
        } else if s2 <= RANK_REL_TOL * s1 {
            1
        } else {
            2
        }
    }

    /// True when `|det| <= SINGULAR_REL_TOL * frobenius^2` (the zero matrix
    /// included).
    pub fn is_singular(self) -> bool {
        let t = self.a * self.a + self.b * self.b + self.c * self.c + self.d * self.d;
        self.det().abs() <= SINGULAR_REL_TOL * t || t == 0.0
    }

    pub fn inverse(self) -> Result<Mat2> {
        if self.is_singular() {
            return Err(Error::SingularMatrix { det: self.det() });
        }
        let det = self.det();
        Ok(Mat2::new(
            self.d / det,
            -self.b / det,
            -self.c / det,
            self.a / det,
        ))
    }
}

/// Piecewise-linear curve, open or closed.
///
/// `convex_pieces` is the declared number of convex arcs the curve splits
/// into and `self_intersections` the declared number of transversal
/// self-crossings; both are contracts supplied by whoever built the curve.
/// `segment_marks` optionally records the vertex indices where the convex
/// pieces start.
#[derive(Clone, Debug, PartialEq)]
pub struct Polyline {
    vertices: Vec<Vec2>,
    closed: bool,
    convex_pieces: Option<usize>,
    segment_marks: Option<Vec<usize>>,
    self_intersections: usize,
}

impl Polyline {
    pub fn open(vertices: Vec<Vec2>) -> Result<Self> {
        Self::build(vertices, false, 2)
    }

    pub fn closed(vertices: Vec<Vec2>) -> Result<Self> {
        Self::build(vertices, true, 3)
    }

    fn build(vertices: Vec<Vec2>, closed: bool, min: usize) -> Result<Self> {
        if vertices.len() < min {
            return Err(Error::InvalidConfig(format!(
                "polyline needs at least {min} vertices, got {}",
                vertices.len()
            )));
        }
        if let Some(v) = vertices.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "polyline vertex ({}, {}) is not finite",
                v.x, v.y
            )));
        }
        Ok(Polyline {
            vertices,
            closed,
            convex_pieces: None,
            segment_marks: None,
            self_intersections: 0,
        })
    }

    /// Declare the number of convex pieces (and implicitly keep the
    /// self-intersection count already set).
    pub fn with_convexity(mut self, pieces: usize) -> Self {
        assert!(pieces >= 1, "a curve decomposes into at least one piece");
        self.convex_pieces = Some(pieces);
        self
    }

    pub fn with_self_intersections(mut self, m: usize) -> Self {
        self.self_intersections = m;
        self
    }

    /// Attach the vertex indices where convex pieces start. Indices must be
    /// strictly increasing, start at 0 and stay in range; their count must
    /// match the declared number of pieces.
    pub fn with_segment_marks(mut self, marks: Vec<usize>) -> Result<Self> {
        let pieces = self
            .convex_pieces
            .ok_or(Error::MissingConvexityData)?;
        if marks.len() != pieces {
            return Err(Error::InvalidConfig(format!(
                "{} segment marks for {} convex pieces",
                marks.len(),
                pieces
            )));
        }
        if marks.first() != Some(&0)
            || !marks.windows(2).all(|w| w[0] < w[1])
            || marks.last().copied().unwrap_or(0) >= self.vertices.len()
        {
            return Err(Error::InvalidConfig(
                "segment marks must be strictly increasing vertex indices starting at 0".into(),
            ));
        }
        self.segment_marks = Some(marks);
        Ok(self)
    }

    pub fn vertices(&self) -> &[Vec2] {
        &self.vertices
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn convex_pieces(&self) -> Option<usize> {
        self.convex_pieces
    }

    pub fn segment_marks(&self) -> Option<&[usize]> {
        self.segment_marks.as_deref()
    }

    pub fn self_intersections(&self) -> usize {
        self.self_intersections
    }

    /// Consecutive vertex pairs, including the closing segment when closed.
    pub fn segments(&self) -> impl Iterator<Item = (Vec2, Vec2)> + '_ {
        let n = self.vertices.len();
        let count = if self.closed { n } else { n - 1 };
        (0..count).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    pub fn length(&self) -> f64 {
        self.segments().map(|(a, b)| a.dist(b)).sum()
    }

    /// Image of the polyline under `m`, metadata carried over unchanged.
    /// The declared convexity stays valid whenever `m` is invertible.
    pub fn transformed(&self, m: Mat2) -> Polyline {
        Polyline {
            vertices: self.vertices.iter().map(|&v| m.mul_vec(v)).collect(),
            closed: self.closed,
            convex_pieces: self.convex_pieces,
            segment_marks: self.segment_marks.clone(),
            self_intersections: self.self_intersections,
        }
    }
}

/// Length of the image of `beta` under a rank-1 map, computed without
/// sampling: with `v` the unit direction orthogonal to `ker(a)`, the image of
/// any curve that is monotone along `v` is a segment of length
/// `|a v| * (max_t <beta(t), v> - min_t <beta(t), v>)`, and that is the value
/// returned. For non-monotone curves the image length is at least this.
pub fn rank1_projected_length(a: Mat2, beta: &Polyline) -> Result<f64> {
    let rank = a.rank();
    if rank != 1 {
        return Err(Error::RankError {
            expected: 1,
            got: rank,
        });
    }
    let r0 = a.row(0);
    let r1 = a.row(1);
    let r = if r0.norm2() >= r1.norm2() { r0 } else { r1 };
    let v = r * (1.0 / r.norm());
    let av = a.mul_vec(v).norm();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &p in beta.vertices() {
        let s = p.dot(v);
        lo = lo.min(s);
        hi = hi.max(s);
    }
    Ok(av * (hi - lo))
}
