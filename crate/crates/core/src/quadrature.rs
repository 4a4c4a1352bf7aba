//! Small numerical integration helpers.

use crate::error::{Error, Result};

/// Adaptive Simpson integration of `f` over `[a, b]`.
///
/// `tol` is an absolute tolerance on the whole interval. Fails with a
/// numerical error (carrying the offending sub-interval) when the recursion
/// depth is exhausted before the local error estimate drops below its share
/// of the tolerance.
pub fn adaptive_simpson<F>(f: F, a: f64, b: f64, tol: f64, max_depth: u32) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    if !(a.is_finite() && b.is_finite()) || b < a {
        return Err(Error::param(format!("bad integration interval [{a}, {b}]")));
    }
    if a == b {
        return Ok(0.0);
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(&f, a, b, fa, fm, fb, whole, tol, max_depth)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if !delta.is_finite() {
        return Err(Error::Numerical(format!(
            "non-finite integrand on [{a}, {b}] (f({a})={fa}, f({m})={fm}, f({b})={fb})"
        )));
    }
    if delta.abs() <= 15.0 * tol {
        return Ok(left + right + delta / 15.0);
    }
    if depth == 0 {
        return Err(Error::Numerical(format!(
            "adaptive Simpson did not converge on [{a}, {b}]: error estimate {:.3e} > {:.3e}",
            delta.abs() / 15.0,
            tol
        )));
    }
    let l = simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?;
    let r = simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?;
    Ok(l + r)
}

/// Trapezoid rule over uniformly spaced samples.
pub fn trapezoid(values: &[f64], dx: f64) -> f64 {
    match values.len() {
        0 | 1 => 0.0,
        n => {
            let interior: f64 = values[1..n - 1].iter().sum();
            dx * (interior + 0.5 * (values[0] + values[n - 1]))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simpson_integrates_gaussian() {
        let f = |x: f64| (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let v = adaptive_simpson(f, -12.0, 12.0, 1e-13, 40).unwrap();
        assert!((v - 1.0).abs() < 1e-11, "{v}");
    }

    #[test]
    fn simpson_reports_non_convergence() {
        let f = |x: f64| if x > 0.3 { 1.0 } else { 0.0 };
        let err = adaptive_simpson(f, 0.0, 1.0, 1e-300, 5).unwrap_err();
        assert!(matches!(err, Error::Numerical(_)));
    }

    #[test]
    fn trapezoid_is_exact_for_linear() {
        let xs: Vec<f64> = (0..=10).map(|i| i as f64 * 0.1).collect();
        let v = trapezoid(&xs, 0.1);
        assert!((v - 0.5).abs() < 1e-14);
        assert_eq!(trapezoid(&[1.0], 0.1), 0.0);
    }
}
