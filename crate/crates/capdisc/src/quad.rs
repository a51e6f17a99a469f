//! Adaptive Simpson quadrature for the one-dimensional length integrals.

/// Integrate `f` over `[a, b]` to absolute tolerance `tol`.
///
/// Plain adaptive Simpson with the usual 1/15 Richardson error estimate and
/// a depth cap; the integrands used in this crate are smooth on the interior
/// of their intervals (endpoint singularities are removed by substitution
/// before calling this).
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let m = 0.5 * (a + b);
    let fa = f(a);
    let fm = f(m);
    let fb = f(b);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    recurse(f, a, b, fa, fm, fb, whole, tol, 50)
}

#[allow(clippy::too_many_arguments)]
fn recurse(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        left + right + delta / 15.0
    } else {
        recurse(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
            + recurse(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn matches_known_integrals() {
        let sin = adaptive_simpson(&|x: f64| x.sin(), 0.0, PI, 1e-12);
        assert!((sin - 2.0).abs() < 1e-10);

        let cubic = adaptive_simpson(&|x: f64| x * x * x - x, -1.0, 2.0, 1e-12);
        assert!((cubic - 2.25).abs() < 1e-10);

        let exp = adaptive_simpson(&|x: f64| x.exp(), 0.0, 1.0, 1e-12);
        assert!((exp - (1f64.exp() - 1.0)).abs() < 1e-10);

        // sqrt has unbounded derivative at 0 and still converges.
        let root = adaptive_simpson(&|x: f64| x.sqrt(), 0.0, 1.0, 1e-12);
        assert!((root - 2.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn oscillatory_integrand_converges() {
        let v = adaptive_simpson(&|x: f64| (10.0 * x).cos(), 0.0, 1.0, 1e-12);
        assert!((v - 10f64.sin() / 10.0).abs() < 1e-10);
    }
}
