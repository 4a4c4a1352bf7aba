//! Geometric stick-breaking mixture formulas: weights, the joint density of
//! an observation with its slice variable, and the mixture weights that
//! result from conditioning on the slice.
//!
//! Indices in this module follow the 1-based convention of the model
//! (components `k >= 1`, slice values `r >= 1`); group indices are 0-based.

use super::matrices::{GeometricMatrix, SelectionMatrix};
use super::pair::AtomTable;
use crate::distributions::{kernel_pdf, nb2_pmf, KernelKind};
use crate::error::{Error, Result};

/// `λ (1 - λ)^(k - 1)`.
pub fn geometric_weight(lambda: f64, k: u64) -> Result<f64> {
    if k < 1 {
        return Err(Error::param("geometric weight index starts at 1"));
    }
    if !(lambda > 0.0 && lambda <= 1.0) {
        return Err(Error::param(format!("lambda must lie in (0, 1], got {lambda}")));
    }
    if lambda == 1.0 {
        return Ok(if k == 1 { 1.0 } else { 0.0 });
    }
    Ok((lambda.ln() + (k - 1) as f64 * (-lambda).ln_1p()).exp())
}

/// Weights `W(r | λ_jl) ∝ p_jl f_N(r | λ_jl)` over `l` for a fixed slice `r`.
pub fn conditional_mixture_weights(r: u64, p_row: &[f64], lambda_row: &[f64]) -> Result<Vec<f64>> {
    if r < 1 {
        return Err(Error::param("slice value starts at 1"));
    }
    if p_row.len() != lambda_row.len() || p_row.is_empty() {
        return Err(Error::param("selection and lambda rows must have equal, non-zero length"));
    }
    // Work on the log scale; f_N underflows for large r.
    let rf = r as f64;
    let logs: Vec<f64> = p_row
        .iter()
        .zip(lambda_row)
        .map(|(&p, &lam)| {
            if !(lam > 0.0 && lam < 1.0) {
                return Err(Error::param(format!("lambda must lie in (0, 1), got {lam}")));
            }
            Ok(p.ln() + 2.0 * lam.ln() + (rf - 1.0) * (-lam).ln_1p())
        })
        .collect::<Result<_>>()?;
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return Err(Error::Numerical(format!(
            "all conditional mixture weights vanish at r={r}"
        )));
    }
    let mut w: Vec<f64> = logs.iter().map(|&v| (v - max).exp()).collect();
    let s: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= s);
    Ok(w)
}

/// Read-only view of the quantities that define the PDGSBP densities
/// `f_j = Σ_l p_jl Σ_k q_jlk K(· | θ_jlk)`.
#[derive(Debug, Clone, Copy)]
pub struct GsbMixture<'a> {
    pub kind: KernelKind,
    pub p: &'a SelectionMatrix,
    pub lambda: &'a GeometricMatrix,
    pub atoms: &'a AtomTable,
}

impl<'a> GsbMixture<'a> {
    fn kernel(&self, x: f64, j: usize, l: usize, k: u64) -> Result<f64> {
        let theta = self.atoms.get(j, l, (k - 1) as usize).ok_or_else(|| {
            Error::Invariant(format!(
                "atom ({},{},{k}) is not instantiated (have {})",
                j + 1,
                l + 1,
                self.atoms.len(j, l)
            ))
        })?;
        Ok(kernel_pdf(self.kind, x, theta))
    }

    /// `f_j(x, N = r, d = k, δ = l) = p_jl f_N(r|λ_jl) r⁻¹ K(x|θ_jlk) 1(k <= r)`.
    pub fn term(&self, x: f64, r: u64, k: u64, j: usize, l: usize) -> Result<f64> {
        if r < 1 || k < 1 {
            return Err(Error::param("slice and component indices start at 1"));
        }
        if k > r {
            return Ok(0.0);
        }
        let nb = nb2_pmf(r, self.lambda.get(j, l))?;
        Ok(self.p.get(j, l) * nb / r as f64 * self.kernel(x, j, l, k)?)
    }

    /// `f_j(x, N = r) = r⁻¹ Σ_l p_jl f_N(r|λ_jl) Σ_{k<=r} K(x|θ_jlk)`.
    pub fn joint_density_with_slice(&self, x: f64, r: u64, j: usize) -> Result<f64> {
        if r < 1 {
            return Err(Error::param("slice value starts at 1"));
        }
        let m = self.p.m();
        let mut total = 0.0;
        for l in 0..m {
            let mut ks = 0.0;
            for k in 1..=r {
                ks += self.kernel(x, j, l, k)?;
            }
            total += self.p.get(j, l) * nb2_pmf(r, self.lambda.get(j, l))? * ks;
        }
        Ok(total / r as f64)
    }

    pub fn conditional_weights(&self, r: u64, j: usize) -> Result<Vec<f64>> {
        let m = self.p.m();
        let lam: Vec<f64> = (0..m).map(|l| self.lambda.get(j, l)).collect();
        conditional_mixture_weights(r, self.p.row(j), &lam)
    }
}
