//! Python bindings: thin wrappers over the capdisc library. Reports come
//! back as plain dicts (via their JSON form), point sets as nested lists.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};

use capdisc::bounds::{self, ClqChoice};
use capdisc::discrepancy::{self, SpherePointSet};
use capdisc::lambert::{self, Cap, UnitVec3};
use capdisc::lattice::{self, LatticeConfig, Perturbation};
use capdisc::planar::{Mat2, Polyline, Vec2};

fn err(e: capdisc::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn mat(m: [f64; 4]) -> Mat2 {
    Mat2::new(m[0], m[1], m[2], m[3])
}

fn json_to_py<'py>(py: Python<'py>, v: &serde_json::Value) -> PyResult<Bound<'py, PyAny>> {
    use serde_json::Value;
    Ok(match v {
        Value::Null => py.None().into_bound(py),
        Value::Bool(b) => (*b).into_pyobject(py)?.to_owned().into_any(),
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                i.into_pyobject(py)?.into_any()
            } else if let Some(u) = n.as_u64() {
                u.into_pyobject(py)?.into_any()
            } else {
                n.as_f64().unwrap_or(f64::NAN).into_pyobject(py)?.into_any()
            }
        }
        Value::String(s) => s.into_pyobject(py)?.into_any(),
        Value::Array(items) => {
            let list = PyList::empty(py);
            for item in items {
                list.append(json_to_py(py, item)?)?;
            }
            list.into_any()
        }
        Value::Object(map) => {
            let dict = PyDict::new(py);
            for (k, val) in map {
                dict.set_item(k, json_to_py(py, val)?)?;
            }
            dict.into_any()
        }
    })
}

fn report_to_py<'py, T: serde::Serialize>(py: Python<'py>, report: &T) -> PyResult<Bound<'py, PyAny>> {
    let value = serde_json::to_value(report)
        .map_err(|e| PyValueError::new_err(format!("report serialization: {e}")))?;
    json_to_py(py, &value)
}

fn perturbation_from(name: &str, seed: u64, u: Option<(f64, f64)>) -> PyResult<Perturbation> {
    Ok(match name {
        "center" => Perturbation::CellCenter,
        "lattice-point" => Perturbation::LatticePoint,
        "uniform" => Perturbation::UniformRandom { seed },
        "custom" => {
            let (ux, uy) = u.ok_or_else(|| {
                PyValueError::new_err("custom perturbation needs u=(ux, uy) in [0,1)^2")
            })?;
            Perturbation::CustomOffset { u: [ux, uy] }
        }
        other => {
            return Err(PyValueError::new_err(format!(
                "unknown perturbation {other:?}; use center, lattice-point, uniform or custom"
            )))
        }
    })
}

fn planar_set(
    matrix: [f64; 4],
    k: u32,
    perturbation: &str,
    seed: u64,
    offset: (f64, f64),
    u: Option<(f64, f64)>,
    modified: bool,
) -> PyResult<lattice::PlanarPointSet> {
    let config = LatticeConfig::new(mat(matrix), k, perturbation_from(perturbation, seed, u)?)
        .with_offset(Vec2::new(offset.0, offset.1));
    if modified {
        lattice::modified_point_set(&config).map_err(err)
    } else {
        lattice::build_point_set(&config).map_err(err)
    }
}

fn sphere_set_from(points: Vec<[f64; 3]>) -> PyResult<SpherePointSet> {
    let mut pts = Vec::with_capacity(points.len());
    for (i, p) in points.iter().enumerate() {
        let norm = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
        if !norm.is_finite() || (norm - 1.0).abs() > 1e-6 {
            return Err(PyValueError::new_err(format!(
                "point {i} has norm {norm}, not a unit vector"
            )));
        }
        pts.push(UnitVec3::from_unnormalized(p[0], p[1], p[2]).map_err(err)?);
    }
    SpherePointSet::from_points(pts).map_err(err)
}

/// Planar point set of the scaled lattice tiling, as a dict with the
/// points, their cell provenance, and the count deviation.
#[pyfunction]
#[pyo3(signature = (matrix, k, perturbation="center", seed=0, offset=(0.0, 0.0), u=None, modified=false))]
#[allow(clippy::too_many_arguments)]
fn build_points<'py>(
    py: Python<'py>,
    matrix: [f64; 4],
    k: u32,
    perturbation: &str,
    seed: u64,
    offset: (f64, f64),
    u: Option<(f64, f64)>,
    modified: bool,
) -> PyResult<Bound<'py, PyAny>> {
    let planar = planar_set(matrix, k, perturbation, seed, offset, u, modified)?;
    let dict = PyDict::new(py);
    let pts: Vec<(f64, f64)> = planar.points().iter().map(|p| (p.x, p.y)).collect();
    dict.set_item("points", pts)?;
    dict.set_item("provenance", planar.provenance().to_vec())?;
    dict.set_item("n", planar.len())?;
    dict.set_item("count_deviation", planar.count_deviation())?;
    Ok(dict.into_any())
}

/// Spherical image of the same construction, as a list of [x, y, z] rows.
#[pyfunction]
#[pyo3(signature = (matrix, k, perturbation="center", seed=0, offset=(0.0, 0.0), u=None, modified=false))]
#[allow(clippy::too_many_arguments)]
fn sphere_points(
    matrix: [f64; 4],
    k: u32,
    perturbation: &str,
    seed: u64,
    offset: (f64, f64),
    u: Option<(f64, f64)>,
    modified: bool,
) -> PyResult<Vec<[f64; 3]>> {
    let planar = planar_set(matrix, k, perturbation, seed, offset, u, modified)?;
    let set = SpherePointSet::from_planar(&planar).map_err(err)?;
    Ok(set
        .points()
        .iter()
        .map(|p| [p.x(), p.y(), p.z()])
        .collect())
}

#[pyfunction]
fn lambert_forward(px: f64, py_: f64) -> PyResult<(f64, f64, f64)> {
    let v = lambert::lambert_forward(Vec2::new(px, py_)).map_err(err)?;
    Ok((v.x(), v.y(), v.z()))
}

#[pyfunction]
fn lambert_inverse(x: f64, y: f64, z: f64) -> PyResult<(f64, f64)> {
    let u = UnitVec3::new(x, y, z).map_err(err)?;
    let p = lambert::lambert_inverse(u).map_err(err)?;
    Ok((p.x, p.y))
}

#[pyfunction]
fn band_sector_area(x1: f64, x2: f64, y1: f64, y2: f64) -> PyResult<f64> {
    lambert::band_sector_area(x1, x2, y1, y2).map_err(err)
}

/// Planar preimage of a cap boundary: dict with per-component vertex lists
/// and the total length.
#[pyfunction]
#[pyo3(signature = (w, t, samples=128))]
fn cap_preimage<'py>(
    py: Python<'py>,
    w: [f64; 3],
    t: f64,
    samples: usize,
) -> PyResult<Bound<'py, PyAny>> {
    let center = UnitVec3::new(w[0], w[1], w[2]).map_err(err)?;
    let cap = Cap::new(center, t).map_err(err)?;
    let preimage = lambert::cap_preimage(cap, samples).map_err(err)?;
    let dict = PyDict::new(py);
    let comps: Vec<Vec<(f64, f64)>> = preimage
        .components()
        .iter()
        .map(|c| c.vertices().iter().map(|v| (v.x, v.y)).collect())
        .collect();
    dict.set_item("components", comps)?;
    dict.set_item("total_length", preimage.total_length())?;
    Ok(dict.into_any())
}

#[pyfunction]
#[pyo3(signature = (matrix, centers=64, heights=64, samples=256))]
fn clq_estimate(matrix: [f64; 4], centers: usize, heights: usize, samples: usize) -> PyResult<f64> {
    lambert::clq_estimate(mat(matrix), centers, heights, samples).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (points, limit=600))]
fn exact_discrepancy<'py>(
    py: Python<'py>,
    points: Vec<[f64; 3]>,
    limit: usize,
) -> PyResult<Bound<'py, PyAny>> {
    let set = sphere_set_from(points)?;
    let report = discrepancy::exact_discrepancy(&set, limit).map_err(err)?;
    report_to_py(py, &report)
}

#[pyfunction]
#[pyo3(signature = (points, trials=10_000, seed=0))]
fn estimate_discrepancy<'py>(
    py: Python<'py>,
    points: Vec<[f64; 3]>,
    trials: u64,
    seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let set = sphere_set_from(points)?;
    let report = discrepancy::estimate_discrepancy(&set, trials, seed).map_err(err)?;
    report_to_py(py, &report)
}

#[pyfunction]
fn polar_certificate<'py>(py: Python<'py>, k: u32) -> PyResult<Bound<'py, PyAny>> {
    let report = discrepancy::polar_certificate(k).map_err(err)?;
    report_to_py(py, &report)
}

#[pyfunction]
fn separation_distance(points: Vec<[f64; 3]>) -> PyResult<f64> {
    let set = sphere_set_from(points)?;
    discrepancy::separation_distance(&set).map_err(err)
}

#[pyfunction]
fn theorem_bound(matrix: [f64; 4], n: usize, d: f64, clq: f64) -> PyResult<f64> {
    bounds::theorem_bound(mat(matrix), n, d, clq).map_err(err)
}

#[pyfunction]
fn corollary_bound(matrix: [f64; 4], n: usize) -> PyResult<f64> {
    bounds::corollary_bound(mat(matrix), n).map_err(err)
}

#[pyfunction]
fn d_lemma_bound(matrix: [f64; 4], k: u32) -> PyResult<f64> {
    bounds::d_lemma_bound(mat(matrix), k).map_err(err)
}

#[pyfunction]
fn d_lemma_bound_weak(matrix: [f64; 4], k: u32) -> PyResult<f64> {
    bounds::d_lemma_bound_weak(mat(matrix), k).map_err(err)
}

#[pyfunction]
fn s_k(matrix: [f64; 4], k: u32, n: usize) -> PyResult<f64> {
    bounds::s_k(mat(matrix), k, n).map_err(err)
}

/// Full bound report as a dict; `clq_source` is one of "analytic-3",
/// "certified-upper" or "numeric-estimate" (the last needs `clq_value`).
#[pyfunction]
#[pyo3(signature = (matrix, k, n, d, clq_source="certified-upper", clq_value=None))]
fn bound_report<'py>(
    py: Python<'py>,
    matrix: [f64; 4],
    k: u32,
    n: usize,
    d: f64,
    clq_source: &str,
    clq_value: Option<f64>,
) -> PyResult<Bound<'py, PyAny>> {
    let choice = match clq_source {
        "analytic-3" => ClqChoice::Analytic3,
        "certified-upper" => ClqChoice::CertifiedUpper,
        "numeric-estimate" => ClqChoice::NumericEstimate(clq_value.ok_or_else(|| {
            PyValueError::new_err("numeric-estimate needs clq_value")
        })?),
        other => {
            return Err(PyValueError::new_err(format!(
                "unknown clq_source {other:?}"
            )))
        }
    };
    let report = bounds::BoundReport::compute(mat(matrix), k, n, d, choice).map_err(err)?;
    report_to_py(py, &report)
}

fn polyline_from(vertices: Vec<(f64, f64)>, closed: bool) -> PyResult<Polyline> {
    let pts: Vec<Vec2> = vertices.iter().map(|&(x, y)| Vec2::new(x, y)).collect();
    if closed {
        Polyline::closed(pts).map_err(err)
    } else {
        Polyline::open(pts).map_err(err)
    }
}

/// Number of tiling cells the polyline touches.
#[pyfunction]
#[pyo3(signature = (vertices, matrix, k, closed=false, offset=(0.0, 0.0)))]
fn intersection_number(
    vertices: Vec<(f64, f64)>,
    matrix: [f64; 4],
    k: u32,
    closed: bool,
    offset: (f64, f64),
) -> PyResult<usize> {
    let beta = polyline_from(vertices, closed)?;
    capdisc::intersect::intersection_number(&beta, mat(matrix), k, Vec2::new(offset.0, offset.1))
        .map_err(err)
}

/// Count plus its guaranteed bound, as a dict; the curve must declare its
/// convex pieces.
#[pyfunction]
#[pyo3(signature = (vertices, matrix, k, convex_pieces, closed=false, offset=(0.0, 0.0), self_intersections=0))]
#[allow(clippy::too_many_arguments)]
fn intersection_report<'py>(
    py: Python<'py>,
    vertices: Vec<(f64, f64)>,
    matrix: [f64; 4],
    k: u32,
    convex_pieces: usize,
    closed: bool,
    offset: (f64, f64),
    self_intersections: usize,
) -> PyResult<Bound<'py, PyAny>> {
    let beta = polyline_from(vertices, closed)?
        .with_convexity(convex_pieces)
        .with_self_intersections(self_intersections);
    let report = capdisc::intersect::IntersectionReport::compute(
        &beta,
        mat(matrix),
        k,
        Vec2::new(offset.0, offset.1),
    )
    .map_err(err)?;
    report_to_py(py, &report)
}

#[pymodule]
fn capdisc_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("EXACT_LIMIT_DEFAULT", discrepancy::EXACT_LIMIT_DEFAULT)?;
    m.add_function(wrap_pyfunction!(build_points, m)?)?;
    m.add_function(wrap_pyfunction!(sphere_points, m)?)?;
    m.add_function(wrap_pyfunction!(lambert_forward, m)?)?;
    m.add_function(wrap_pyfunction!(lambert_inverse, m)?)?;
    m.add_function(wrap_pyfunction!(band_sector_area, m)?)?;
    m.add_function(wrap_pyfunction!(cap_preimage, m)?)?;
    m.add_function(wrap_pyfunction!(clq_estimate, m)?)?;
    m.add_function(wrap_pyfunction!(exact_discrepancy, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_discrepancy, m)?)?;
    m.add_function(wrap_pyfunction!(polar_certificate, m)?)?;
    m.add_function(wrap_pyfunction!(separation_distance, m)?)?;
    m.add_function(wrap_pyfunction!(theorem_bound, m)?)?;
    m.add_function(wrap_pyfunction!(corollary_bound, m)?)?;
    m.add_function(wrap_pyfunction!(d_lemma_bound, m)?)?;
    m.add_function(wrap_pyfunction!(d_lemma_bound_weak, m)?)?;
    m.add_function(wrap_pyfunction!(s_k, m)?)?;
    m.add_function(wrap_pyfunction!(bound_report, m)?)?;
    m.add_function(wrap_pyfunction!(intersection_number, m)?)?;
    m.add_function(wrap_pyfunction!(intersection_report, m)?)?;
    Ok(())
}
