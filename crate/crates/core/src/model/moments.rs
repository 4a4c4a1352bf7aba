//! Closed-form second moments, covariances and correlations of the pairwise
//! dependent random densities.

use super::matrices::{ConcentrationMatrix, GeometricMatrix, SelectionMatrix};
use crate::error::{Error, Result};

/// Moments of `K(x | θ)` under the base measure at a fixed `x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelMoments {
    /// `E[K(x|θ)^2]`
    pub second: f64,
    /// `(E[K(x|θ)])^2`
    pub mean_sq: f64,
}

impl KernelMoments {
    pub fn variance(&self) -> f64 {
        self.second - self.mean_sq
    }
}

/// `E[g(x)^2]` for a geometric stick-breaking random density.
pub fn second_moment_g(lambda: f64, kernel_second_moment: f64, kernel_mean_sq: f64) -> Result<f64> {
    if !(lambda > 0.0 && lambda <= 1.0) {
        return Err(Error::param(format!("lambda must lie in (0, 1], got {lambda}")));
    }
    Ok((lambda * kernel_second_moment + 2.0 * (1.0 - lambda) * kernel_mean_sq) / (2.0 - lambda))
}

fn distinct(j: usize, i: usize, m: usize) -> Result<()> {
    if j == i {
        return Err(Error::param("covariance between a group and itself; use the variance"));
    }
    if j >= m || i >= m {
        return Err(Error::param(format!("group index out of range for m={m}")));
    }
    Ok(())
}

/// `Cov(f_j(x), f_i(x)) = p_ji p_ij λ_ji / (2 - λ_ji) Var K(x|θ)`.
pub fn cov_pdgsbp(
    moments: &KernelMoments,
    p: &SelectionMatrix,
    lambda: &GeometricMatrix,
    j: usize,
    i: usize,
) -> Result<f64> {
    distinct(j, i, p.m())?;
    let lam = lambda.get(j, i);
    Ok(p.get(j, i) * p.get(i, j) * lam / (2.0 - lam) * moments.variance())
}

/// Kernel-free correlation for generic per-pair variance factors `s_jl`,
/// where `Var g_jl(x) = s_jl Var K(x|θ)`.
fn corr_generic(p: &SelectionMatrix, j: usize, i: usize, factor: impl Fn(usize, usize) -> f64) -> Result<f64> {
    distinct(j, i, p.m())?;
    let m = p.m();
    let row_sum = |a: usize| -> f64 { (0..m).map(|l| p.get(a, l).powi(2) * factor(a, l)).sum() };
    let denom = row_sum(j) * row_sum(i);
    if !(denom > 0.0) {
        return Err(Error::Numerical(format!(
            "correlation denominator vanishes for groups {} and {}",
            j + 1,
            i + 1
        )));
    }
    Ok(p.get(j, i) * p.get(i, j) * factor(j, i) / denom.sqrt())
}

pub fn corr_pdgsbp(p: &SelectionMatrix, lambda: &GeometricMatrix, j: usize, i: usize) -> Result<f64> {
    corr_generic(p, j, i, |a, b| {
        let lam = lambda.get(a, b);
        lam / (2.0 - lam)
    })
}

pub fn corr_rpddp(p: &SelectionMatrix, c: &ConcentrationMatrix, j: usize, i: usize) -> Result<f64> {
    corr_generic(p, j, i, |a, b| 1.0 / (1.0 + c.get(a, b)))
}

/// Which model yields the larger correlation between two groups under the
/// synchronization `λ = 1 / (1 + c)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorrelationOrder {
    GsbGreater,
    DpGreater,
    Equal,
}

/// `D12`; non-negative exactly when the geometric correlation does not
/// exceed the Dirichlet one.
pub fn d12(lambda11: f64, lambda22: f64, lambda12: f64, p: [[f64; 2]; 2]) -> f64 {
    let r1 = (2.0 - lambda12) / (2.0 - lambda11);
    let r2 = (2.0 - lambda12) / (2.0 - lambda22);
    let a = p[0][1].powi(2) * lambda12;
    let b = p[0][0].powi(2) * lambda11;
    let c = p[1][0].powi(2) * lambda12;
    let d = p[1][1].powi(2) * lambda22;
    (a + r1 * b) * (c + r2 * d) - (a + b) * (c + d)
}

/// Classify by the sign of `D12`. This agrees with the `λ` ordering when
/// `λ12` lies above or below both diagonal values and also settles the
/// intermediate configurations, which depend on `p`.
pub fn d12_case(lambda11: f64, lambda22: f64, lambda12: f64, p: [[f64; 2]; 2]) -> CorrelationOrder {
    let v = d12(lambda11, lambda22, lambda12, p);
    let a = p[0][1].powi(2) * lambda12;
    let b = p[0][0].powi(2) * lambda11;
    let c = p[1][0].powi(2) * lambda12;
    let d = p[1][1].powi(2) * lambda22;
    let scale = (a + b) * (c + d);
    if v.abs() <= 1e-12 * scale || scale == 0.0 {
        CorrelationOrder::Equal
    } else if v > 0.0 {
        CorrelationOrder::DpGreater
    } else {
        CorrelationOrder::GsbGreater
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::SymmetricMatrix;

    fn half() -> SelectionMatrix {
        SelectionMatrix::from_rows(&[vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap()
    }

    #[test]
    fn second_moment_values() {
        assert_eq!(second_moment_g(1.0, 2.5, 1.0).unwrap(), 2.5);
        assert!((second_moment_g(0.5, 2.0, 1.0).unwrap() - 4.0 / 3.0).abs() < 1e-15);
        assert!(second_moment_g(0.0, 2.0, 1.0).is_err());
    }

    #[test]
    fn covariance_cases() {
        let km = KernelMoments {
            second: 3.0,
            mean_sq: 1.0,
        };
        let lam = SymmetricMatrix::constant(2, 0.4);
        let p0 = SelectionMatrix::from_rows(&[vec![1.0, 0.0], vec![0.5, 0.5]]).unwrap();
        assert_eq!(cov_pdgsbp(&km, &p0, &lam, 0, 1).unwrap(), 0.0);
        let p1 = SelectionMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let lam1 = SymmetricMatrix::from_fn(2, |pr| if pr.is_diagonal() { 0.3 } else { 1.0 });
        assert_eq!(cov_pdgsbp(&km, &p1, &lam1, 0, 1).unwrap(), 2.0);
        assert!(cov_pdgsbp(&km, &p1, &lam1, 1, 1).is_err());
    }

    #[test]
    fn correlations_constant_parameters() {
        let p = half();
        let g = corr_pdgsbp(&p, &SymmetricMatrix::constant(2, 0.3), 0, 1).unwrap();
        let d = corr_rpddp(&p, &SymmetricMatrix::constant(2, 4.0), 0, 1).unwrap();
        assert!((g - 0.5).abs() < 1e-15 && (d - 0.5).abs() < 1e-15);
        let p0 = SelectionMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(corr_pdgsbp(&p0, &SymmetricMatrix::constant(2, 0.3), 0, 1).unwrap(), 0.0);
    }

    #[test]
    fn d12_classification_examples() {
        let p = [[0.5, 0.5], [0.5, 0.5]];
        assert_eq!(d12_case(0.3, 0.3, 0.3, p), CorrelationOrder::Equal);
        assert_eq!(d12_case(0.2, 0.3, 0.9, p), CorrelationOrder::GsbGreater);
        assert_eq!(d12_case(0.8, 0.9, 0.1, p), CorrelationOrder::DpGreater);
        let lam = SymmetricMatrix::from_fn(2, |pr| match (pr.lo(), pr.hi()) {
            (0, 0) => 0.8,
            (1, 1) => 0.9,
            _ => 0.1,
        });
        let c = SymmetricMatrix::from_fn(2, |pr| 1.0 / lam.get(pr.lo(), pr.hi()) - 1.0);
        let sp = half();
        assert!(corr_pdgsbp(&sp, &lam, 0, 1).unwrap() < corr_rpddp(&sp, &c, 0, 1).unwrap());
    }
}
