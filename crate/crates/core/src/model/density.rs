use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::matrices::SelectionMatrix;
use super::pair::PairMatrix;
use crate::distributions::{
    kernel_pdf, open01, sample_base_measure, BaseMeasureHyper, KernelKind, KernelParam,
    PriorPredictive,
};
use crate::error::Result;

/// The instantiated part of one pair measure: weights for the first
/// components and the mass left over for the uninstantiated tail.
#[derive(Debug, Clone, PartialEq)]
pub struct PairComponents {
    pub weights: Vec<f64>,
    pub atoms: Vec<KernelParam>,
    pub residual: f64,
}

/// How the uninstantiated tail mass of each pair measure is handled when
/// evaluating a density.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TailMode {
    /// Drop the tail and renormalize the instantiated weights.
    Truncate,
    /// Assign the tail to the prior predictive density.
    #[default]
    PriorPredictive,
}

/// Frozen random densities `f_j = Σ_l p_jl Σ_k w_jlk K(· | θ_jlk)` from one
/// sampler state.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureSnapshot {
    pub kind: KernelKind,
    pub p: SelectionMatrix,
    pub pairs: PairMatrix<PairComponents>,
}

impl MixtureSnapshot {
    pub fn m(&self) -> usize {
        self.p.m()
    }

    /// Density of group `j` at `x`, with the prior predictive value at `x`
    /// supplied by the caller (ignored under [`TailMode::Truncate`]).
    pub fn density_with_prior(&self, x: f64, j: usize, tail: TailMode, prior_at_x: f64) -> f64 {
        let mut total = 0.0;
        for l in 0..self.m() {
            let p = self.p.get(j, l);
            if p == 0.0 {
                continue;
            }
            let comp = self.pairs.get(j, l);
            let body: f64 = comp
                .weights
                .iter()
                .zip(&comp.atoms)
                .map(|(w, t)| w * kernel_pdf(self.kind, x, t))
                .sum();
            let g = match tail {
                TailMode::Truncate => {
                    let mass: f64 = comp.weights.iter().sum();
                    if mass > 0.0 {
                        body / mass
                    } else {
                        prior_at_x
                    }
                }
                TailMode::PriorPredictive => body + comp.residual * prior_at_x,
            };
            total += p * g;
        }
        total
    }

    pub fn density_eval(
        &self,
        x: f64,
        j: usize,
        tail: TailMode,
        prior: &PriorPredictive,
    ) -> Result<f64> {
        let needs_prior = tail == TailMode::PriorPredictive
            || (0..self.m()).any(|l| self.pairs.get(j, l).weights.is_empty());
        let pp = if needs_prior { prior.pdf(x)? } else { 0.0 };
        Ok(self.density_with_prior(x, j, tail, pp))
    }

    /// Evaluate group `j` on `xs` given prior predictive values cached on the
    /// same points.
    pub fn density_on_grid(&self, xs: &[f64], j: usize, tail: TailMode, prior_grid: &[f64]) -> Vec<f64> {
        debug_assert_eq!(xs.len(), prior_grid.len());
        xs.iter()
            .zip(prior_grid)
            .map(|(&x, &pp)| self.density_with_prior(x, j, tail, pp))
            .collect()
    }

    /// Draw one observation from `f_j`; tail mass maps to a fresh atom from
    /// the base measure.
    pub fn sample_observation<R: Rng + ?Sized>(
        &self,
        j: usize,
        hyper: &BaseMeasureHyper,
        rng: &mut R,
    ) -> f64 {
        let row = self.p.row(j);
        let l = categorical(row, open01(rng));
        let comp = self.pairs.get(j, l);
        let u = open01(rng);
        let mut acc = 0.0;
        let mut theta = None;
        for (w, t) in comp.weights.iter().zip(&comp.atoms) {
            acc += w;
            if u < acc {
                theta = Some(*t);
                break;
            }
        }
        let theta = theta.unwrap_or_else(|| sample_base_measure(hyper, rng));
        let y = Normal::new(theta.mu, theta.sd())
            .expect("positive precision")
            .sample(rng);
        match self.kind {
            KernelKind::Normal => y,
            KernelKind::LogNormal => y.exp(),
        }
    }
}

fn categorical(weights: &[f64], u: f64) -> usize {
    let total: f64 = weights.iter().sum();
    let target = u * total;
    let mut acc = 0.0;
    for (i, &w) in weights.iter().enumerate() {
        acc += w;
        if target < acc {
            return i;
        }
    }
    weights.len() - 1
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::chain_rng;
    use crate::quadrature::trapezoid;

    fn snapshot() -> MixtureSnapshot {
        let p = SelectionMatrix::from_rows(&[vec![0.3, 0.7], vec![1.0, 0.0]]).unwrap();
        let pairs = PairMatrix::from_fn(2, |pr| {
            let base = (pr.lo() * 2 + pr.hi()) as f64;
            PairComponents {
                weights: vec![0.5, 0.25],
                atoms: vec![
                    KernelParam::new(base, 1.0).unwrap(),
                    KernelParam::new(-base, 4.0).unwrap(),
                ],
                residual: 0.25,
            }
        });
        MixtureSnapshot {
            kind: KernelKind::Normal,
            p,
            pairs,
        }
    }

    #[test]
    fn degenerate_single_atom() {
        let theta = KernelParam::new(1.0, 2.0).unwrap();
        let s = MixtureSnapshot {
            kind: KernelKind::Normal,
            p: SelectionMatrix::uniform(1),
            pairs: PairMatrix::from_fn(1, |_| PairComponents {
                weights: vec![1.0],
                atoms: vec![theta],
                residual: 0.0,
            }),
        };
        let v = s.density_with_prior(0.3, 0, TailMode::PriorPredictive, 123.0);
        assert!((v - kernel_pdf(KernelKind::Normal, 0.3, &theta)).abs() < 1e-15);
    }

    #[test]
    fn prior_tail_integrates_to_one() {
        let s = snapshot();
        let hyper = BaseMeasureHyper::new(0.0, 0.1, 2.0, 1.0).unwrap();
        let pp = PriorPredictive::new(hyper, KernelKind::Normal).unwrap();
        let h = 0.05;
        let xs: Vec<f64> = (0..=16_000).map(|i| -400.0 + i as f64 * h).collect();
        let prior = pp.on_grid(&xs).unwrap();
        for j in 0..2 {
            for tail in [TailMode::PriorPredictive, TailMode::Truncate] {
                let total = trapezoid(&s.density_on_grid(&xs, j, tail, &prior), h);
                assert!((total - 1.0).abs() < 1e-3, "{j} {tail:?}: {total}");
            }
        }
    }

    #[test]
    fn selection_collapse() {
        let mut s = snapshot();
        let before = s.density_with_prior(0.7, 1, TailMode::Truncate, 0.0);
        s.pairs.get_mut(1, 1).atoms[0].mu = 40.0;
        let after = s.density_with_prior(0.7, 1, TailMode::Truncate, 0.0);
        assert_eq!(before, after);
    }

    #[test]
    fn sampled_observations_follow_density() {
        let s = snapshot();
        let hyper = BaseMeasureHyper::new(0.0, 0.1, 2.0, 1.0).unwrap();
        let mut rng = chain_rng(41, 0);
        let n = 200_000;
        let xs: Vec<f64> = (0..n).map(|_| s.sample_observation(1, &hyper, &mut rng)).collect();
        // Group 2 draws only from pair (1,2): mean 0.5*1 - 0.25*1 + 0.25*mu0.
        let mean = xs.iter().sum::<f64>() / n as f64;
        assert!((mean - 0.25).abs() < 0.05, "{mean}");
    }
}
