//! Equal-area cylinder map between the half-open unit square and the unit
//! sphere, spherical caps, and planar preimages of cap boundaries.
//!
//! The square is `[0,1) x (0,1)`: the x coordinate wraps around the seam
//! meridian and the open y edges correspond to the poles, which the map does
//! not reach. Preimages of cap boundary circles are returned as polylines cut
//! at the seam and clipped to `y in [POLE_CLIP_Y, 1 - POLE_CLIP_Y]`; a cap
//! boundary splits into at most three such components and every component is
//! 7-convex with no self-intersections.

use serde::de::Error as _;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

use crate::error::{Error, Result};
use crate::planar::{Mat2, Polyline, Vec2};
use crate::quad::adaptive_simpson;

/// Pole clip half-width: preimages keep `y in [POLE_CLIP_Y, 1 - POLE_CLIP_Y]`.
pub const POLE_CLIP_Y: f64 = 1e-9;

/// Recursion floor for chord refinement of preimage polylines.
const REFINE_DEPTH: u32 = 26;

/// Unit vector on the sphere. Constructors normalize, so the stored
/// coordinates are unit to machine precision.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UnitVec3 {
    x: f64,
    y: f64,
    z: f64,
}

impl Serialize for UnitVec3 {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        [self.x, self.y, self.z].serialize(s)
    }
}

impl<'de> Deserialize<'de> for UnitVec3 {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let [x, y, z] = <[f64; 3]>::deserialize(d)?;
        UnitVec3::new(x, y, z).map_err(|e| D::Error::custom(e.to_string()))
    }
}

impl UnitVec3 {
    /// Build from coordinates that are already unit up to 1e-9, then
    /// renormalize exactly.
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self> {
        let n = (x * x + y * y + z * z).sqrt();
        if !n.is_finite() || (n - 1.0).abs() > 1e-9 {
            return Err(Error::DomainError(format!(
                "({x}, {y}, {z}) is not a unit vector (norm {n})"
            )));
        }
        Ok(UnitVec3 {
            x: x / n,
            y: y / n,
            z: z / n,
        })
    }

    pub fn from_unnormalized(x: f64, y: f64, z: f64) -> Result<Self> {
        let n = (x * x + y * y + z * z).sqrt();
        if !n.is_finite() || n < 1e-150 {
            return Err(Error::DomainError(
                "cannot normalize a (near-)zero vector".into(),
            ));
        }
        Ok(UnitVec3 {
            x: x / n,
            y: y / n,
            z: z / n,
        })
    }

    pub fn x(self) -> f64 {
        self.x
    }

    pub fn y(self) -> f64 {
        self.y
    }

    pub fn z(self) -> f64 {
        self.z
    }

    pub fn dot(self, o: UnitVec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn neg(self) -> UnitVec3 {
        UnitVec3 {
            x: -self.x,
            y: -self.y,
            z: -self.z,
        }
    }

    /// Raw cross product (not unit in general).
    pub fn cross(self, o: UnitVec3) -> [f64; 3] {
        [
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        ]
    }

    pub fn north_pole() -> UnitVec3 {
        UnitVec3 {
            x: 0.0,
            y: 0.0,
            z: 1.0,
        }
    }
}

/// Spherical cap `{ p : <p, w> >= t }` (or `> t` when open) with normalized
/// area `(1 - t) / 2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cap {
    w: UnitVec3,
    t: f64,
    closed: bool,
}

impl Cap {
    /// Closed cap (boundary included).
    pub fn new(w: UnitVec3, t: f64) -> Result<Self> {
        if !t.is_finite() || !(-1.0..=1.0).contains(&t) {
            return Err(Error::DomainError(format!(
                "cap height t = {t} outside [-1, 1]"
            )));
        }
        Ok(Cap { w, t, closed: true })
    }

    pub fn with_closed(mut self, closed: bool) -> Self {
        self.closed = closed;
        self
    }

    pub fn center(self) -> UnitVec3 {
        self.w
    }

    pub fn height(self) -> f64 {
        self.t
    }

    pub fn is_closed(self) -> bool {
        self.closed
    }

    /// Normalized surface measure of the cap.
    pub fn normalized_area(self) -> f64 {
        (1.0 - self.t) / 2.0
    }

    /// Membership under the cap's own boundary convention.
    pub fn contains(self, p: UnitVec3) -> bool {
        if self.closed {
            self.w.dot(p) >= self.t
        } else {
            self.w.dot(p) > self.t
        }
    }

    pub fn contains_closed(self, p: UnitVec3) -> bool {
        self.w.dot(p) >= self.t
    }

    pub fn contains_open(self, p: UnitVec3) -> bool {
        self.w.dot(p) > self.t
    }
}

/// Cap whose boundary is the equator tilted by `eps` towards the pole:
/// center `(cos eps, 0, sin eps)`, height 0.
pub fn tilted_equator_cap(eps: f64) -> Result<Cap> {
    if !(0.0..PI / 2.0).contains(&eps) || eps <= 0.0 {
        return Err(Error::DomainError(format!(
            "tilt eps = {eps} outside (0, pi/2)"
        )));
    }
    Cap::new(UnitVec3::new(eps.cos(), 0.0, eps.sin())?, 0.0)
}

/// Square to sphere: `(x, y)` to
/// `(2 sqrt(y - y^2) cos 2 pi x, 2 sqrt(y - y^2) sin 2 pi x, 1 - 2 y)`.
pub fn lambert_forward(p: Vec2) -> Result<UnitVec3> {
    if !(0.0..1.0).contains(&p.x) {
        return Err(Error::DomainError(format!("x = {} outside [0, 1)", p.x)));
    }
    if !(p.y > 0.0 && p.y < 1.0) {
        return Err(Error::DomainError(format!("y = {} outside (0, 1)", p.y)));
    }
    let r = 2.0 * (p.y - p.y * p.y).sqrt();
    let (s, c) = (TAU * p.x).sin_cos();
    // r^2 + z^2 = 4(y - y^2) + (1 - 2y)^2 = 1 exactly, so this is unit.
    Ok(UnitVec3 {
        x: r * c,
        y: r * s,
        z: 1.0 - 2.0 * p.y,
    })
}

/// Sphere to square, undefined at the poles.
/// Tolerance below which a point counts as one of the poles.
pub const POLE_TOL: f64 = 1e-12;

pub fn lambert_inverse(v: UnitVec3) -> Result<Vec2> {
    if 1.0 - v.z.abs() <= POLE_TOL || (v.x == 0.0 && v.y == 0.0) {
        return Err(Error::PoleError);
    }
    Ok(planar_from_xyz(v.x, v.y, v.z))
}

/// Normalized area of the image of the rectangle
/// `[x1, x2] x [y1, y2]` (a band sector on the sphere).
///
/// Invariant of the map: the image measure equals the planar Lebesgue
/// measure exactly, sigma = (x2 - x1) * (y2 - y1).
pub fn band_sector_area(x1: f64, x2: f64, y1: f64, y2: f64) -> Result<f64> {
    for v in [x1, x2, y1, y2] {
        if !v.is_finite() {
            return Err(Error::DomainError(format!("rectangle coord {v} not finite")));
        }
    }
    if !(0.0..=1.0).contains(&x1) || !(0.0..=1.0).contains(&x2) || x2 < x1 {
        return Err(Error::DomainError(format!(
            "sector [{x1}, {x2}] not inside [0, 1]"
        )));
    }
    if !(0.0..=1.0).contains(&y1) || !(0.0..=1.0).contains(&y2) || y2 < y1 {
        return Err(Error::DomainError(format!(
            "band [{y1}, {y2}] not inside [0, 1]"
        )));
    }
    // z = 1 - 2y, so the band's z extent is 2 (y2 - y1); a full band of
    // z width h has measure h / 2 and the sector keeps the fraction x2 - x1.
    let z_top = 1.0 - 2.0 * y1;
    let z_bot = 1.0 - 2.0 * y2;
    Ok((x2 - x1) * (z_top - z_bot) / 2.0)
}

fn phi01(x3: f64, y3: f64) -> f64 {
    let mut p = y3.atan2(x3);
    if p < 0.0 {
        p += TAU;
    }
    if p >= TAU {
        p -= TAU;
    }
    let x = p / TAU;
    if x >= 1.0 {
        0.0
    } else {
        x + 0.0
    }
}

fn planar_from_xyz(x3: f64, y3: f64, z3: f64) -> Vec2 {
    Vec2::new(phi01(x3, y3), (1.0 - z3) / 2.0)
}

/// Planar preimage of a cap boundary: open components end on the seam
/// (`x = 0` or `x = 1`) or on a pole clip line (`y = POLE_CLIP_Y` or
/// `y = 1 - POLE_CLIP_Y`); a boundary that meets neither stays one closed
/// component.
#[derive(Clone, Debug)]
pub struct CapPreimage {
    components: Vec<Polyline>,
}

impl CapPreimage {
    pub fn components(&self) -> &[Polyline] {
        &self.components
    }

    pub fn into_components(self) -> Vec<Polyline> {
        self.components
    }

    pub fn total_length(&self) -> f64 {
        self.components.iter().map(|c| c.length()).sum()
    }

    /// CSV with header `component,px,py`, one row per vertex.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("component,px,py\n");
        for (i, comp) in self.components.iter().enumerate() {
            for v in comp.vertices() {
                out.push_str(&format!("{i},{},{}\n", v.x, v.y));
            }
        }
        out
    }
}

/// Boundary circle of a cap in parametric form
/// `c(s) = t w + rho (u1 cos s + u2 sin s)`.
struct BoundaryCircle {
    center: [f64; 3],
    rho: f64,
    u1: [f64; 3],
    u2: [f64; 3],
}

fn dot3(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

impl BoundaryCircle {
    fn new(cap: Cap) -> Self {
        let w = [cap.w.x, cap.w.y, cap.w.z];
        // Orthonormal basis of the plane orthogonal to w, seeded from the
        // axis least aligned with w for stability.
        let ax = w[0].abs();
        let ay = w[1].abs();
        let az = w[2].abs();
        let seed = if ax <= ay && ax <= az {
            [1.0, 0.0, 0.0]
        } else if ay <= az {
            [0.0, 1.0, 0.0]
        } else {
            [0.0, 0.0, 1.0]
        };
        let d = dot3(seed, w);
        let mut u1 = [seed[0] - d * w[0], seed[1] - d * w[1], seed[2] - d * w[2]];
        let n = dot3(u1, u1).sqrt();
        u1 = [u1[0] / n, u1[1] / n, u1[2] / n];
        let u2 = cross3(w, u1);
        BoundaryCircle {
            center: [cap.t * w[0], cap.t * w[1], cap.t * w[2]],
            rho: (1.0 - cap.t * cap.t).max(0.0).sqrt(),
            u1,
            u2,
        }
    }

    fn point(&self, s: f64) -> [f64; 3] {
        let (sn, cs) = s.sin_cos();
        [
            self.center[0] + self.rho * (self.u1[0] * cs + self.u2[0] * sn),
            self.center[1] + self.rho * (self.u1[1] * cs + self.u2[1] * sn),
            self.center[2] + self.rho * (self.u1[2] * cs + self.u2[2] * sn),
        ]
    }

    fn planar(&self, s: f64) -> Vec2 {
        let p = self.point(s);
        planar_from_xyz(p[0], p[1], p[2])
    }

    /// Solve `coord(s) = rhs` for the coordinate with index `i`:
    /// `A cos s + B sin s = rhs - C`. Zero, one double-counted pair, or two
    /// roots in `[0, 2 pi)`.
    fn solve_coord(&self, i: usize, rhs: f64) -> Vec<f64> {
        let a = self.rho * self.u1[i];
        let b = self.rho * self.u2[i];
        let c = rhs - self.center[i];
        let r = a.hypot(b);
        if r < 1e-14 || c.abs() >= r {
            return Vec::new();
        }
        let psi = b.atan2(a);
        let d = (c / r).clamp(-1.0, 1.0).acos();
        vec![norm_angle(psi - d), norm_angle(psi + d)]
    }
}

fn norm_angle(s: f64) -> f64 {
    let mut s = s.rem_euclid(TAU);
    if s >= TAU {
        s = 0.0;
    }
    s
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum CutKind {
    Seam,
    NorthClip,
    SouthClip,
}

/// Compute the planar preimage of the boundary of `cap`.
///
/// `samples` controls resolution: the boundary is sampled on the global
/// parameter grid `s_i = 2 pi i / samples` and chords longer than
/// `1 / samples` are bisected recursively. Doubling `samples` refines the
/// vertex set of every component, so component lengths never decrease under
/// refinement.
pub fn cap_preimage(cap: Cap, samples: usize) -> Result<CapPreimage> {
    assert!(samples >= 16, "need at least 16 boundary samples");
    if cap.t.abs() >= 1.0 {
        return Err(Error::DegenerateCap { t: cap.t });
    }
    let circ = BoundaryCircle::new(cap);
    let z_hi = 1.0 - 2.0 * POLE_CLIP_Y;

    // Polar zones: parameter arcs where the circle is closer to a pole than
    // the clip line. At most one per pole.
    let mut zones: Vec<(f64, f64)> = Vec::new();
    for (rhs, north) in [(z_hi, true), (-z_hi, false)] {
        let roots = circ.solve_coord(2, rhs);
        if roots.is_empty() {
            let z0 = circ.point(0.0)[2];
            let inside = if north { z0 > rhs } else { z0 < rhs };
            if inside {
                // Whole boundary sits in a pole clip zone.
                return Err(Error::DegenerateCap { t: cap.t });
            }
            continue;
        }
        let (r1, r2) = if roots[0] <= roots[1] {
            (roots[0], roots[1])
        } else {
            (roots[1], roots[0])
        };
        for (lo, hi) in [(r1, r2), (r2, r1 + TAU)] {
            if hi - lo < 1e-13 {
                continue;
            }
            let zm = circ.point(0.5 * (lo + hi))[2];
            if (north && zm > rhs) || (!north && zm < rhs) {
                zones.push((norm_angle(lo), norm_angle(lo) + (hi - lo)));
            }
        }
    }
    zones.sort_by(|a, b| a.0.total_cmp(&b.0));

    // Kept arcs: complement of the zones on the circle. `None` means the
    // whole circle survives.
    let kept: Option<Vec<(f64, f64)>> = match zones.len() {
        0 => None,
        n => {
            let mut arcs = Vec::new();
            for i in 0..n {
                let hi_cur = zones[i].1;
                let lo_next = if i + 1 < n {
                    zones[i + 1].0
                } else {
                    zones[0].0 + TAU
                };
                let mut gap = lo_next - hi_cur;
                if gap < 0.0 {
                    gap += TAU;
                }
                if gap > 1e-12 {
                    arcs.push((norm_angle(hi_cur), norm_angle(hi_cur) + gap));
                }
            }
            if arcs.is_empty() {
                return Err(Error::DegenerateCap { t: cap.t });
            }
            Some(arcs)
        }
    };

    // Seam cuts: parameters with y3 = 0 on the x3 > 0 half-plane.
    let seam: Vec<f64> = circ
        .solve_coord(1, 0.0)
        .into_iter()
        .filter(|&s| circ.point(s)[0] > 0.0)
        .collect();

    let thresh = 1.0 / samples as f64;
    let mut components = Vec::new();

    match kept {
        None => {
            let mut cuts: Vec<f64> = seam;
            cuts.sort_by(f64::total_cmp);
            cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
            if cuts.is_empty() {
                components.push(closed_component(&circ, samples, thresh)?);
            } else {
                for i in 0..cuts.len() {
                    let lo = cuts[i];
                    let hi = if i + 1 < cuts.len() {
                        cuts[i + 1]
                    } else {
                        cuts[0] + TAU
                    };
                    components.push(open_component(
                        &circ,
                        (lo, hi),
                        (CutKind::Seam, CutKind::Seam),
                        samples,
                        thresh,
                    )?);
                }
            }
        }
        Some(arcs) => {
            // A zone-gap arc starts where a zone ends and ends where the
            // next zone starts; classify each end by the pole of that zone.
            let kind_of = |angle: f64| -> CutKind {
                if circ.point(angle)[2] > 0.0 {
                    CutKind::NorthClip
                } else {
                    CutKind::SouthClip
                }
            };
            for (lo, hi) in arcs {
                let klo = kind_of(lo);
                let khi = kind_of(hi);
                let mut inner: Vec<f64> = seam
                    .iter()
                    .map(|&r| {
                        let mut d = (r - lo).rem_euclid(TAU);
                        if d >= TAU {
                            d = 0.0;
                        }
                        lo + d
                    })
                    .filter(|&s| s > lo + 1e-12 && s < hi - 1e-12)
                    .collect();
                inner.sort_by(f64::total_cmp);
                let mut bounds = vec![(lo, klo)];
                for s in inner {
                    bounds.push((s, CutKind::Seam));
                }
                bounds.push((hi, khi));
                for w in bounds.windows(2) {
                    components.push(open_component(
                        &circ,
                        (w[0].0, w[1].0),
                        (w[0].1, w[1].1),
                        samples,
                        thresh,
                    )?);
                }
            }
        }
    }

    debug_assert!(components.len() <= 3, "cap preimage split into more than 3 components");
    Ok(CapPreimage { components })
}

/// Global parameter grid points strictly inside `(lo, hi)`. Using global
/// indices keeps grids nested when `samples` doubles.
fn grid_inside(lo: f64, hi: f64, samples: usize) -> Vec<f64> {
    let step = TAU / samples as f64;
    let first = (lo / step).floor() as i64 + 1;
    let last = (hi / step).ceil() as i64 - 1;
    let mut out = Vec::new();
    for i in first..=last {
        let s = step * i as f64;
        if s > lo + 1e-12 && s < hi - 1e-12 {
            out.push(s);
        }
    }
    out
}

fn refine_into(
    circ: &BoundaryCircle,
    sa: f64,
    pa: Vec2,
    sb: f64,
    pb: Vec2,
    thresh: f64,
    depth: u32,
    out: &mut Vec<Vec2>,
) {
    if depth == 0 || pa.dist(pb) <= thresh || sb - sa <= 1e-12 {
        out.push(pb);
        return;
    }
    let sm = 0.5 * (sa + sb);
    let pm = circ.planar(sm);
    refine_into(circ, sa, pa, sm, pm, thresh, depth - 1, out);
    refine_into(circ, sm, pm, sb, pb, thresh, depth - 1, out);
}

fn closed_component(circ: &BoundaryCircle, samples: usize, thresh: f64) -> Result<Polyline> {
    let step = TAU / samples as f64;
    let pts: Vec<(f64, Vec2)> = (0..samples)
        .map(|i| {
            let s = step * i as f64;
            (s, circ.planar(s))
        })
        .collect();
    let mut out = vec![pts[0].1];
    for i in 0..samples {
        let (sa, pa) = pts[i];
        let (sb, pb) = if i + 1 < samples {
            pts[i + 1]
        } else {
            (TAU, pts[0].1)
        };
        refine_into(circ, sa, pa, sb, pb, thresh, REFINE_DEPTH, &mut out);
    }
    out.pop();
    Ok(Polyline::closed(out)?.with_convexity(7))
}

fn endpoint_planar(circ: &BoundaryCircle, s: f64, kind: CutKind, into: f64, span: f64) -> Vec2 {
    let p = circ.point(s);
    match kind {
        CutKind::Seam => {
            let h = (0.4 * span).min(1e-6);
            let probe = circ.point(s + into * h);
            let x = if phi01(probe[0], probe[1]) < 0.5 { 0.0 } else { 1.0 };
            Vec2::new(x, (1.0 - p[2]) / 2.0)
        }
        CutKind::NorthClip => Vec2::new(phi01(p[0], p[1]), POLE_CLIP_Y),
        CutKind::SouthClip => Vec2::new(phi01(p[0], p[1]), 1.0 - POLE_CLIP_Y),
    }
}

fn open_component(
    circ: &BoundaryCircle,
    (lo, hi): (f64, f64),
    (klo, khi): (CutKind, CutKind),
    samples: usize,
    thresh: f64,
) -> Result<Polyline> {
    let span = hi - lo;
    let p_lo = endpoint_planar(circ, lo, klo, 1.0, span);
    let p_hi = endpoint_planar(circ, hi, khi, -1.0, span);
    let mut params = vec![(lo, p_lo)];
    for s in grid_inside(lo, hi, samples) {
        params.push((s, circ.planar(s)));
    }
    params.push((hi, p_hi));
    let mut out = vec![params[0].1];
    for w in params.windows(2) {
        refine_into(circ, w[0].0, w[0].1, w[1].0, w[1].1, thresh, REFINE_DEPTH, &mut out);
    }
    Ok(Polyline::open(out)?.with_convexity(7))
}

/// Integrand of the arc-length integral for the planar preimage of the
/// boundary of the tilted-equator cap: on `theta in (eps, pi - eps)`,
///
/// `sqrt( tan^2(eps) / (pi^2 sin^4(theta) (1 - tan^2(eps) cot^2(theta)))
///        + sin^2(theta) )`.
///
/// Integrating over the full interval gives the total preimage length;
/// the integrand is symmetric about `theta = pi/2`, so the integral over
/// `[eps, pi/2]` is exactly half of it.
pub fn polar_cap_length_integrand(theta: f64, eps: f64) -> Result<f64> {
    if !(eps > 0.0 && eps < PI / 2.0) {
        return Err(Error::DomainError(format!(
            "tilt eps = {eps} outside (0, pi/2)"
        )));
    }
    if !(theta > eps && theta < PI - eps) {
        return Err(Error::DomainError(format!(
            "theta = {theta} outside ({eps}, {})",
            PI - eps
        )));
    }
    let c = eps.tan();
    let s = theta.sin();
    let cot = theta.cos() / s;
    let g = 1.0 - c * c * cot * cot;
    if g <= 0.0 {
        return Err(Error::DomainError(format!(
            "theta = {theta} too close to the endpoint for eps = {eps}"
        )));
    }
    Ok((c * c / (g * PI * PI * s.powi(4)) + s * s).sqrt())
}

/// Half the preimage length of the tilted-equator cap boundary, by
/// quadrature of `polar_cap_length_integrand` over `[eps, pi/2]`. The
/// inverse-square-root endpoint singularity is removed with the
/// substitution `theta = eps + u^2`.
pub fn polar_cap_half_length(eps: f64) -> Result<f64> {
    if !(eps > 0.0 && eps < PI / 2.0) {
        return Err(Error::DomainError(format!(
            "tilt eps = {eps} outside (0, pi/2)"
        )));
    }
    let upper = (PI / 2.0 - eps).sqrt();
    let f = move |u: f64| {
        let theta = eps + u * u;
        match polar_cap_length_integrand(theta, eps) {
            Ok(v) => 2.0 * u * v,
            Err(_) => 0.0,
        }
    };
    // Skipping [0, 1e-7) loses O(1e-6) of an integrand bounded near the
    // removed singularity, far below the tolerance anyone uses this at.
    Ok(adaptive_simpson(&f, 1e-7, upper, 1e-10))
}

/// Full preimage length of the tilted-equator cap boundary.
pub fn polar_cap_full_length(eps: f64) -> Result<f64> {
    Ok(2.0 * polar_cap_half_length(eps)?)
}

fn halvings(mut n: usize) -> Vec<usize> {
    let mut v = Vec::new();
    while n >= 8 {
        v.push(n);
        n /= 2;
    }
    v
}

/// Lower estimate of the largest `q`-transformed preimage length over all
/// cap boundaries.
///
/// Candidate caps come from three nested families: spiral-distributed
/// centers crossed with an equispaced height grid, plus tilted-equator caps
/// with tilts `2^-k`, `k = 1..16`. Every family only gains members when
/// `centers`, `heights` or `samples` doubles, so the estimate is
/// nondecreasing under refinement, and it never exceeds the true supremum
/// because inscribed polylines undershoot arc length.
pub fn clq_estimate(q: Mat2, centers: usize, heights: usize, samples: usize) -> Result<f64> {
    assert!(centers >= 8, "need at least 8 cap centers");
    assert!(heights >= 8, "need at least 8 cap heights");
    let qinv = q.inverse()?;

    let golden = PI * (3.0 - 5f64.sqrt());
    let mut caps: Vec<Cap> = Vec::new();
    let mut ws: Vec<UnitVec3> = Vec::new();
    for c in halvings(centers) {
        for i in 0..c {
            let z = -1.0 + (2.0 * i as f64 + 1.0) / c as f64;
            let r = (1.0 - z * z).max(0.0).sqrt();
            let phi = golden * i as f64;
            ws.push(UnitVec3::from_unnormalized(
                r * phi.cos(),
                r * phi.sin(),
                z,
            )?);
        }
    }
    let mut ts: Vec<f64> = Vec::new();
    for h in halvings(heights) {
        for j in 0..h {
            ts.push(-1.0 + 2.0 * (j as f64 + 1.0) / (h as f64 + 1.0));
        }
    }
    for &w in &ws {
        for &t in &ts {
            caps.push(Cap::new(w, t)?);
        }
    }
    for k in 1..=16 {
        caps.push(tilted_equator_cap(2f64.powi(-k))?);
    }

    use rayon::prelude::*;
    let lengths = caps
        .par_iter()
        .map(|&cap| -> Result<f64> {
            let pre = cap_preimage(cap, samples)?;
            Ok(pre
                .components()
                .iter()
                .map(|c| c.transformed(qinv).length())
                .sum())
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(lengths.into_iter().fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_cap(rng: &mut ChaCha8Rng) -> Cap {
        loop {
            let x = rng.random_range(-1.0..1.0);
            let y = rng.random_range(-1.0..1.0);
            let z = rng.random_range(-1.0..1.0);
            let n = (x * x + y * y + z * z as f64).sqrt();
            if n < 0.1 || n > 1.0 {
                continue;
            }
            let w = UnitVec3::from_unnormalized(x, y, z).unwrap();
            let t = rng.random_range(-0.999..0.999);
            return Cap::new(w, t).unwrap();
        }
    }

    #[test]
    fn forward_formula_matches_definition() {
        let p = Vec2::new(0.3, 0.7);
        let v = lambert_forward(p).unwrap();
        let r = 2.0 * (0.7f64 - 0.49).sqrt();
        assert!((v.x() - r * (TAU * 0.3).cos()).abs() < 1e-15);
        assert!((v.y() - r * (TAU * 0.3).sin()).abs() < 1e-15);
        assert!((v.z() - (1.0 - 1.4)).abs() < 1e-15);
    }

    #[test]
    fn forward_rejects_out_of_domain() {
        assert!(lambert_forward(Vec2::new(1.0, 0.5)).is_err());
        assert!(lambert_forward(Vec2::new(-0.1, 0.5)).is_err());
        assert!(lambert_forward(Vec2::new(0.5, 0.0)).is_err());
        assert!(lambert_forward(Vec2::new(0.5, 1.0)).is_err());
    }

    #[test]
    fn inverse_rejects_poles() {
        let pole = UnitVec3::new(0.0, 0.0, 1.0).unwrap();
        assert!(matches!(lambert_inverse(pole), Err(Error::PoleError)));
    }

    #[test]
    fn roundtrip_is_tight_both_ways() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..10000 {
            let p = Vec2::new(rng.random_range(0.0..1.0), rng.random_range(1e-6..1.0 - 1e-6));
            let q = lambert_inverse(lambert_forward(p).unwrap()).unwrap();
            assert!((p.x - q.x).abs() < 1e-12 && (p.y - q.y).abs() < 1e-12);
        }
    }

    #[test]
    fn unit_vectors_are_normalized_and_validated() {
        assert!(UnitVec3::new(1.0, 1.0, 1.0).is_err());
        let v = UnitVec3::from_unnormalized(1.0, 1.0, 1.0).unwrap();
        assert!((v.dot(v) - 1.0).abs() < 1e-15);
        assert!(UnitVec3::from_unnormalized(0.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn cap_area_and_membership() {
        let w = UnitVec3::north_pole();
        let cap = Cap::new(w, 0.5).unwrap();
        assert!((cap.normalized_area() - 0.25).abs() < 1e-15);
        let inside = UnitVec3::new(0.0, 0.6, 0.8).unwrap();
        assert!(cap.contains_closed(inside));
        // rim coordinates chosen exactly representable: 0.8^2 + 0.6^2 = 1
        let cap = Cap::new(w, 0.6).unwrap();
        let rim = UnitVec3::new(0.0, 0.8, 0.6).unwrap();
        assert!(cap.contains_closed(rim));
        assert!(!cap.contains_open(rim));
        assert!(Cap::new(w, 1.5).is_err());
    }

    #[test]
    fn preimage_of_seam_plane_great_circle_is_two_vertical_lines() {
        // Boundary of the hemisphere centered on the y axis lies in the
        // x-z plane: the seam meridian plus the x = 1/2 meridian.
        let cap = Cap::new(UnitVec3::new(0.0, 1.0, 0.0).unwrap(), 0.0).unwrap();
        let pre = cap_preimage(cap, 256).unwrap();
        assert_eq!(pre.components().len(), 2);
        for comp in pre.components() {
            let x0 = comp.vertices()[0].x;
            assert!(x0 == 0.0 || x0 == 0.5 || x0 == 1.0, "x0 = {x0}");
            for v in comp.vertices() {
                assert!((v.x - x0).abs() < 1e-9);
            }
            assert!((comp.length() - 1.0).abs() < 1e-6);
        }
        assert!((pre.total_length() - 2.0).abs() < 1e-6);
    }

    #[test]
    fn preimage_of_pole_to_pole_great_circle_clips_at_both_poles() {
        let cap = Cap::new(UnitVec3::new(1.0, 0.0, 0.0).unwrap(), 0.0).unwrap();
        let pre = cap_preimage(cap, 256).unwrap();
        assert_eq!(pre.components().len(), 2);
        for comp in pre.components() {
            let x0 = comp.vertices()[0].x;
            assert!((x0 - 0.25).abs() < 1e-9 || (x0 - 0.75).abs() < 1e-9);
            assert!((comp.length() - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn preimage_of_parallel_circle_is_one_horizontal_component() {
        let cap = Cap::new(UnitVec3::north_pole(), 0.5).unwrap();
        let pre = cap_preimage(cap, 256).unwrap();
        assert_eq!(pre.components().len(), 1);
        let comp = &pre.components()[0];
        assert!(!comp.is_closed());
        let first = comp.vertices().first().unwrap();
        let last = comp.vertices().last().unwrap();
        assert_eq!(first.x, 0.0);
        assert_eq!(last.x, 1.0);
        for v in comp.vertices() {
            assert!((v.y - 0.25).abs() < 1e-12);
        }
        assert!((comp.length() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn preimage_away_from_seam_and_poles_is_closed() {
        let w = UnitVec3::from_unnormalized(1.0, 1.0, 0.3).unwrap();
        let cap = Cap::new(w, 0.8).unwrap();
        let pre = cap_preimage(cap, 256).unwrap();
        assert_eq!(pre.components().len(), 1);
        assert!(pre.components()[0].is_closed());
    }

    #[test]
    fn preimage_has_at_most_three_components_and_declares_convexity() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        for _ in 0..500 {
            let cap = random_cap(&mut rng);
            let pre = cap_preimage(cap, 64).unwrap();
            assert!(!pre.components().is_empty());
            assert!(pre.components().len() <= 3);
            for c in pre.components() {
                assert_eq!(c.convex_pieces(), Some(7));
                assert_eq!(c.self_intersections(), 0);
                for v in c.vertices() {
                    assert!((0.0..=1.0).contains(&v.x));
                    assert!(v.y >= POLE_CLIP_Y - 1e-15 && v.y <= 1.0 - POLE_CLIP_Y + 1e-15);
                }
            }
        }
    }

    #[test]
    fn preimage_length_grows_under_refinement() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..50 {
            let cap = random_cap(&mut rng);
            let coarse = cap_preimage(cap, 32).unwrap().total_length();
            let fine = cap_preimage(cap, 64).unwrap().total_length();
            let finest = cap_preimage(cap, 128).unwrap().total_length();
            assert!(coarse <= fine + 1e-12, "{coarse} > {fine}");
            assert!(fine <= finest + 1e-12, "{fine} > {finest}");
        }
    }

    #[test]
    fn degenerate_caps_are_rejected() {
        let w = UnitVec3::north_pole();
        assert!(matches!(
            cap_preimage(Cap::new(w, 1.0).unwrap(), 64),
            Err(Error::DegenerateCap { .. })
        ));
        // Boundary sits entirely inside the north clip zone.
        let t = 1.0 - 1e-12;
        assert!(matches!(
            cap_preimage(Cap::new(w, t).unwrap(), 64),
            Err(Error::DegenerateCap { .. })
        ));
    }

    #[test]
    fn integrand_matches_hand_computed_value_and_symmetry() {
        // At theta = pi/2 the integrand is sqrt(tan^2(eps)/pi^2 + 1);
        // for eps = 0.1 that is 1.0005098725 (hand computed).
        let v = polar_cap_length_integrand(PI / 2.0, 0.1).unwrap();
        assert!((v - 1.0005098725).abs() < 1e-9);
        for &th in &[0.3, 0.8, 1.2] {
            let a = polar_cap_length_integrand(th, 0.1).unwrap();
            let b = polar_cap_length_integrand(PI - th, 0.1).unwrap();
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn integrand_rejects_out_of_domain() {
        assert!(polar_cap_length_integrand(0.05, 0.1).is_err());
        assert!(polar_cap_length_integrand(0.1, 0.1).is_err());
        assert!(polar_cap_length_integrand(PI - 0.05, 0.1).is_err());
        assert!(polar_cap_length_integrand(1.0, 0.0).is_err());
        assert!(polar_cap_length_integrand(1.0, 2.0).is_err());
    }

    #[test]
    fn half_length_matches_half_of_sampled_preimage() {
        let eps = 0.1;
        let half = polar_cap_half_length(eps).unwrap();
        let pre = cap_preimage(tilted_equator_cap(eps).unwrap(), 8192).unwrap();
        assert!((2.0 * half - pre.total_length()).abs() < 1e-3);
    }

    #[test]
    fn full_lengths_increase_as_tilt_shrinks_and_stay_below_three() {
        let mut prev = 0.0;
        for &eps in &[0.1, 0.05, 0.01, 0.001] {
            let len = polar_cap_full_length(eps).unwrap();
            assert!(len > prev, "length not increasing at eps = {eps}");
            assert!(len <= 3.0 + 1e-3);
            assert!(len >= 2.0);
            prev = len;
        }
    }

    #[test]
    fn clq_estimate_brackets_identity_constant() {
        let v = clq_estimate(Mat2::identity(), 8, 8, 32).unwrap();
        assert!(v >= 2.0, "clq = {v}");
        assert!(v <= 3.0 + 1e-6, "clq = {v}");
    }

    #[test]
    fn clq_scales_inversely_with_uniform_dilation() {
        // Mapping curves through (2 * identity)^-1 halves every length, and
        // the same caps realize the supremum on both sides.
        let base = clq_estimate(Mat2::identity(), 8, 8, 32).unwrap();
        let scaled = clq_estimate(Mat2::identity().scale(2.0), 8, 8, 32).unwrap();
        assert!(
            (scaled - base / 2.0).abs() <= 1e-9,
            "scaled = {scaled}, base = {base}"
        );
    }

    #[test]
    fn clq_is_stable_under_rotation_of_the_matrix() {
        let base = clq_estimate(Mat2::identity(), 8, 8, 48).unwrap();
        let rot = clq_estimate(Mat2::rotation(0.7), 8, 8, 48).unwrap();
        // A rotation is an isometry of the plane, so only the discrete cap
        // family (not the lengths) can move the estimate.
        assert!((rot - base).abs() <= 1e-2, "rot = {rot}, base = {base}");
    }

    #[test]
    fn closed_flag_controls_membership() {
        let w = UnitVec3::north_pole();
        let rim = UnitVec3::new(0.8, 0.0, 0.6).unwrap();
        let closed = Cap::new(w, rim.z()).unwrap();
        let open = closed.with_closed(false);
        assert!(closed.is_closed());
        assert!(!open.is_closed());
        assert!(closed.contains(rim));
        assert!(!open.contains(rim));
    }

    #[test]
    fn near_pole_vectors_are_rejected_by_inverse() {
        let near = UnitVec3::from_unnormalized(1e-13, 0.0, 1.0).unwrap();
        assert!(matches!(lambert_inverse(near), Err(Error::PoleError)));
        let near_south = UnitVec3::from_unnormalized(0.0, 1e-13, -1.0).unwrap();
        assert!(matches!(lambert_inverse(near_south), Err(Error::PoleError)));
    }

    #[test]
    fn band_sector_area_is_planar_rectangle_area() {
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        for _ in 0..200 {
            let mut xs = [rng.random::<f64>(), rng.random::<f64>()];
            let mut ys = [rng.random::<f64>(), rng.random::<f64>()];
            xs.sort_by(f64::total_cmp);
            ys.sort_by(f64::total_cmp);
            let sigma = band_sector_area(xs[0], xs[1], ys[0], ys[1]).unwrap();
            let lebesgue = (xs[1] - xs[0]) * (ys[1] - ys[0]);
            assert!((sigma - lebesgue).abs() <= 1e-15, "sigma = {sigma}");
        }
        assert!(band_sector_area(0.5, 0.4, 0.0, 1.0).is_err());
        assert!(band_sector_area(0.0, 1.5, 0.0, 1.0).is_err());
    }
}
