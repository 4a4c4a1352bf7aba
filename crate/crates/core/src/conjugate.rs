//! Full conditionals of a kernel atom under the independent normal-gamma
//! base measure.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::distributions::{sample_base_measure, sample_gamma, BaseMeasureHyper, KernelParam};

/// Running count, mean and centred sum of squares of kernel-space values.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SuffStats {
    pub n: usize,
    mean: f64,
    m2: f64,
}

impl SuffStats {
    pub fn push(&mut self, y: f64) {
        self.n += 1;
        let delta = y - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (y - self.mean);
    }

    pub fn from_values(ys: &[f64]) -> Self {
        let mut s = Self::default();
        ys.iter().for_each(|&y| s.push(y));
        s
    }

    pub fn sum(&self) -> f64 {
        self.mean * self.n as f64
    }

    /// `Σ (y - mu)^2`
    pub fn sum_sq_about(&self, mu: f64) -> f64 {
        let d = self.mean - mu;
        self.m2 + self.n as f64 * d * d
    }
}

/// Mean and precision of `mu | tau, y`.
pub fn posterior_mu(stats: &SuffStats, tau: f64, hyper: &BaseMeasureHyper) -> (f64, f64) {
    let precision = hyper.tau0 + stats.n as f64 * tau;
    let mean = (hyper.tau0 * hyper.mu0 + tau * stats.sum()) / precision;
    (mean, precision)
}

/// Shape and rate of `tau | mu, y`.
pub fn posterior_tau(stats: &SuffStats, mu: f64, hyper: &BaseMeasureHyper) -> (f64, f64) {
    (
        hyper.eps1 + 0.5 * stats.n as f64,
        hyper.eps2 + 0.5 * stats.sum_sq_about(mu),
    )
}

/// One Gibbs pass over `(mu, tau)` for an atom; an atom without data is
/// redrawn from the base measure.
pub fn update_atom<R: Rng + ?Sized>(
    stats: &SuffStats,
    current: &KernelParam,
    hyper: &BaseMeasureHyper,
    rng: &mut R,
) -> KernelParam {
    if stats.n == 0 {
        return sample_base_measure(hyper, rng);
    }
    let (mean, precision) = posterior_mu(stats, current.tau, hyper);
    let mu = Normal::new(mean, precision.sqrt().recip())
        .expect("finite posterior")
        .sample(rng);
    let (shape, rate) = posterior_tau(stats, mu, hyper);
    let tau = sample_gamma(shape, rate, rng).expect("positive posterior parameters");
    KernelParam { mu, tau }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_observation_mu_posterior() {
        let hyper = BaseMeasureHyper::new(1.0, 0.5, 2.0, 1.0).unwrap();
        let stats = SuffStats::from_values(&[3.0]);
        let (mean, prec) = posterior_mu(&stats, 2.0, &hyper);
        assert!((prec - 2.5).abs() < 1e-15);
        assert!((mean - (0.5 * 1.0 + 2.0 * 3.0) / 2.5).abs() < 1e-15);
    }

    #[test]
    fn stats_match_direct_sums() {
        let ys = [1.0, 2.5, -0.5, 4.0];
        let s = SuffStats::from_values(&ys);
        assert!((s.sum() - 7.0).abs() < 1e-14);
        let direct: f64 = ys.iter().map(|y| (y - 0.3f64).powi(2)).sum();
        assert!((s.sum_sq_about(0.3) - direct).abs() < 1e-12);
        let hyper = BaseMeasureHyper::VAGUE;
        let (shape, rate) = posterior_tau(&s, 0.3, &hyper);
        assert!((shape - (1e-3 + 2.0)).abs() < 1e-15);
        assert!((rate - (1e-3 + 0.5 * direct)).abs() < 1e-12);
    }
}
