//! Closed-form error bounds for the discrepancy of mapped lattice sets:
//! the leading theorem term, its Frobenius-norm weakening, the count
//! deviation bound, and the ring-spacing defect.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::planar::Mat2;

const SQRT2: f64 = std::f64::consts::SQRT_2;

fn require_invertible(q: Mat2) -> Result<f64> {
    if q.is_singular() {
        return Err(Error::SingularMatrix { det: q.det() });
    }
    Ok(q.det().abs())
}

/// Leading discrepancy bound (d + sqrt(2) clq) sqrt(|det Q|) / sqrt(N).
///
/// The true bound carries an additional O(1/N) remainder with no explicit
/// constant; callers comparing against measurements must add their own
/// slack for it.
pub fn theorem_bound(q: Mat2, n: usize, d: f64, clq: f64) -> Result<f64> {
    let det = require_invertible(q)?;
    if n == 0 {
        return Err(Error::InvalidConfig("theorem bound needs N >= 1".into()));
    }
    if !d.is_finite() || d < 0.0 {
        return Err(Error::InvalidConfig(format!(
            "count deviation d = {d} must be finite and nonnegative"
        )));
    }
    if !clq.is_finite() || clq <= 0.0 {
        return Err(Error::InvalidConfig(format!(
            "cap preimage length bound clq = {clq} must be finite and positive"
        )));
    }
    Ok((d + SQRT2 * clq) * det.sqrt() / (n as f64).sqrt())
}

/// Matrix-only weakening: (|Q|_F / sqrt(|det Q|)) (4 + 3 sqrt(2)) / sqrt(N).
pub fn corollary_bound(q: Mat2, n: usize) -> Result<f64> {
    let det = require_invertible(q)?;
    if n == 0 {
        return Err(Error::InvalidConfig("corollary bound needs N >= 1".into()));
    }
    Ok(q.frobenius() / det.sqrt() * (4.0 + 3.0 * SQRT2) / (n as f64).sqrt())
}

/// Bound on the count deviation of a K-scaled tiling:
/// 2 sqrt(2) (|Q^-1 e1| + |Q^-1 e2|) / |det Q| + 20 / K.
pub fn d_lemma_bound(q: Mat2, k: u32) -> Result<f64> {
    let det = require_invertible(q)?;
    if k == 0 {
        return Err(Error::InvalidConfig("count deviation bound needs K >= 1".into()));
    }
    let inv = q.inverse()?;
    let col_sum = inv.col(0).norm() + inv.col(1).norm();
    Ok(2.0 * SQRT2 * col_sum / det + 20.0 / k as f64)
}

/// Weaker form of the same bound: 4 |Q|_F / |det Q| + 20 / K.
/// Dominates the tight form whenever |det Q| >= 1.
pub fn d_lemma_bound_weak(q: Mat2, k: u32) -> Result<f64> {
    let det = require_invertible(q)?;
    if k == 0 {
        return Err(Error::InvalidConfig("count deviation bound needs K >= 1".into()));
    }
    Ok(4.0 * q.frobenius() / det + 20.0 / k as f64)
}

/// Defect s_K = sqrt(1/(|det Q| N)) - 1/K between the realized point count
/// and the area-predicted one; satisfies |s_K| <= d/N.
pub fn s_k(q: Mat2, k: u32, n: usize) -> Result<f64> {
    let det = require_invertible(q)?;
    if k == 0 || n == 0 {
        return Err(Error::InvalidConfig("s_K needs K >= 1 and N >= 1".into()));
    }
    Ok((1.0 / (det * n as f64)).sqrt() - 1.0 / k as f64)
}

/// Where the cap preimage length constant in a report came from.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClqSource {
    /// The identity-lattice constant 3.
    #[serde(rename = "analytic-3")]
    Analytic3,
    /// 3 |Q^-1|_F : the identity constant scaled by a certified operator
    /// bound, valid for every invertible Q.
    CertifiedUpper,
    /// A measured supremum over the sampled cap family.
    NumericEstimate,
}

/// How to pick the clq constant when assembling a [`BoundReport`].
#[derive(Clone, Copy, Debug)]
pub enum ClqChoice {
    Analytic3,
    CertifiedUpper,
    NumericEstimate(f64),
}

/// All bound evaluations for one (Q, K, N) instance, ready to serialize.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BoundReport {
    pub theorem_leading: f64,
    pub corollary_leading: f64,
    pub d_value: f64,
    pub d_lemma_bound: f64,
    pub clq_used: f64,
    pub clq_source: ClqSource,
    pub s_k: f64,
    pub n: usize,
    pub k: u32,
}

impl BoundReport {
    /// `d_value` is the count deviation used inside the theorem term;
    /// pass the measured one, or the lemma bound for an a priori report.
    pub fn compute(q: Mat2, k: u32, n: usize, d_value: f64, clq: ClqChoice) -> Result<Self> {
        let (clq_used, clq_source) = match clq {
            ClqChoice::Analytic3 => (3.0, ClqSource::Analytic3),
            ClqChoice::CertifiedUpper => (3.0 * q.inverse()?.frobenius(), ClqSource::CertifiedUpper),
            ClqChoice::NumericEstimate(v) => {
                if !v.is_finite() || v <= 0.0 {
                    return Err(Error::InvalidConfig(format!(
                        "numeric clq estimate {v} must be finite and positive"
                    )));
                }
                (v, ClqSource::NumericEstimate)
            }
        };
        Ok(BoundReport {
            theorem_leading: theorem_bound(q, n, d_value, clq_used)?,
            corollary_leading: corollary_bound(q, n)?,
            d_value,
            d_lemma_bound: d_lemma_bound(q, k)?,
            clq_used,
            clq_source,
            s_k: s_k(q, k, n)?,
            n,
            k,
        })
    }
}
