//! Gibbs sampler for the pairwise dependent geometric stick-breaking
//! mixture.
//!
//! Each sweep updates, in order: the atoms, the `(d, δ)` allocations as a
//! block over the finite grid `{1..N} x {1..m}`, the slice variables `N`,
//! the selection rows and finally the geometric probabilities `λ`.

use crate::chain::{run_chain, ChainConfig, ChainRng, ChainTrace, GibbsSampler, SweepStats};
use crate::common::{Common, SharedPrior};
use crate::distributions::{
    chain_rng, open01, sample_beta, sample_gamma, sample_truncated_geometric,
    sample_truncated_power,
};
use crate::error::{Error, Result};
use crate::model::{
    validate_geometric, AtomTable, GeometricMatrix, MixtureSnapshot, PairComponents, PairMatrix,
    SelectionMatrix, SymmetricMatrix,
};
use crate::sampling::{draw_from_log_weights, OpCounter};
use rand::Rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LambdaPrior {
    Beta { a: f64, b: f64 },
    /// Law of `1 / (1 + c)` with `c ~ Gamma(a, b)`; requires `a > 1`.
    TransformedGamma { a: f64, b: f64 },
}

impl Default for LambdaPrior {
    fn default() -> Self {
        LambdaPrior::TransformedGamma { a: 1.1, b: 1.1 }
    }
}

impl LambdaPrior {
    pub fn validate(&self) -> Result<()> {
        match *self {
            LambdaPrior::Beta { a, b } => {
                if !(a > 0.0 && b > 0.0) {
                    return Err(Error::Config(format!("beta lambda prior needs a, b > 0, got ({a}, {b})")));
                }
            }
            LambdaPrior::TransformedGamma { a, b } => {
                if !(a > 1.0) {
                    return Err(Error::Config(format!("transformed gamma lambda prior needs a > 1, got {a}")));
                }
                if !(b > 0.0) {
                    return Err(Error::Config(format!("transformed gamma lambda prior needs b > 0, got {b}")));
                }
            }
        }
        Ok(())
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64> {
        match *self {
            LambdaPrior::Beta { a, b } => sample_beta(a, b, rng),
            LambdaPrior::TransformedGamma { a, b } => {
                let c = sample_gamma(a, b, rng)?;
                Ok(interior(1.0 / (1.0 + c)))
            }
        }
    }
}

fn interior(v: f64) -> f64 {
    v.clamp(f64::MIN_POSITIVE, 1.0f64.next_down())
}

#[derive(Debug, Clone, PartialEq)]
pub struct PdgsbpPrior {
    pub shared: SharedPrior,
    pub lambda: LambdaPrior,
}

/// Counts entering the `λ_jl` update: `S` observations selecting the pair
/// and `S' = Σ (N - 1)` over those observations, pooled across both groups
/// for off-diagonal pairs.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LambdaStats {
    pub s: u64,
    pub s_prime: u64,
}

/// Beta posterior parameters of `λ` under a `Beta(a, b)` prior.
pub fn beta_lambda_posterior(a: f64, b: f64, stats: LambdaStats) -> (f64, f64) {
    (a + 2.0 * stats.s as f64, b + stats.s_prime as f64)
}

/// Support of `λ` after drawing the two auxiliary uniforms
/// `ν1 = U1 (1 - λ)^L` and `ν2 = U2 e^{-b/λ}`, given their logs.
pub fn tg_slice_interval(a: f64, b: f64, stats: LambdaStats, ln_nu1: f64, ln_nu2: f64) -> (f64, f64) {
    let l = stats.s_prime as f64 + a - 1.0;
    let mut lower = -b / ln_nu2;
    let mut upper = 1.0;
    if l > 0.0 {
        upper = -(ln_nu1 / l).exp_m1();
    } else if l < 0.0 {
        lower = lower.max(-(ln_nu1 / l).exp_m1());
    }
    (lower, upper)
}

/// One embedded slice cycle for `λ` under the transformed gamma prior.
pub fn tg_lambda_step<R: Rng + ?Sized>(
    lambda: f64,
    a: f64,
    b: f64,
    stats: LambdaStats,
    rng: &mut R,
) -> Result<f64> {
    let l = stats.s_prime as f64 + a - 1.0;
    let ln_nu1 = l * (-lambda).ln_1p() + open01(rng).ln();
    let ln_nu2 = -b / lambda + open01(rng).ln();
    let (lo, hi) = tg_slice_interval(a, b, stats, ln_nu1, ln_nu2);
    let exponent = 2.0 * stats.s as f64 - a - 1.0;
    match sample_truncated_power(exponent, lo, hi, rng) {
        Ok(v) => Ok(v),
        Err(Error::EmptyInterval { lo, hi }) => Err(Error::Invariant(format!(
            "empty lambda slice ({lo}, {hi}) from lambda={lambda}"
        ))),
        Err(e) => Err(e),
    }
}

pub struct PdgsbpSampler {
    core: Common,
    /// Slice variable `N` per observation (`d < N` in 0-based terms).
    slice: Vec<Vec<u32>>,
    lambda: GeometricMatrix,
    lambda_prior: LambdaPrior,
    ops: OpCounter,
    buf: Vec<f64>,
}

impl PdgsbpSampler {
    /// Initial state: `N = d = 1`, `δ_ji = j`, everything else from the prior.
    pub fn new(groups: &[Vec<f64>], prior: &PdgsbpPrior, rng: &mut ChainRng) -> Result<Self> {
        prior.lambda.validate()?;
        let core = Common::new(groups, &prior.shared, rng)?;
        let m = core.m;
        let mut lambda = SymmetricMatrix::constant(m, 0.5);
        for lo in 0..m {
            for hi in lo..m {
                lambda.set(lo, hi, prior.lambda.sample(rng)?);
            }
        }
        let slice = core.ys.iter().map(|g| vec![1u32; g.len()]).collect();
        let mut s = Self {
            core,
            slice,
            lambda,
            lambda_prior: prior.lambda,
            ops: OpCounter::default(),
            buf: Vec::new(),
        };
        s.extend_atoms(rng);
        Ok(s)
    }

    pub fn lambda(&self) -> &GeometricMatrix {
        &self.lambda
    }

    pub fn atoms(&self) -> &AtomTable {
        &self.core.atoms
    }

    pub fn allocations(&self, j: usize) -> (&[u32], &[u16], &[u32]) {
        (&self.core.d[j], &self.core.delta[j], &self.slice[j])
    }

    /// Largest slice value `N*` (0 when there is no data).
    pub fn max_slice(&self) -> usize {
        self.slice
            .iter()
            .flat_map(|g| g.iter())
            .copied()
            .max()
            .unwrap_or(0) as usize
    }

    fn extend_atoms(&mut self, rng: &mut ChainRng) {
        let n_star = self.max_slice();
        for lo in 0..self.core.m {
            for hi in lo..self.core.m {
                self.core.atoms.ensure_len(lo, hi, n_star, &self.core.hyper, rng);
            }
        }
    }

    fn trim_atoms(&mut self) {
        let n_star = self.max_slice();
        for lo in 0..self.core.m {
            for hi in lo..self.core.m {
                self.core.atoms.truncate(lo, hi, n_star);
            }
        }
    }

    pub fn update_locations(&mut self, rng: &mut ChainRng) {
        self.core.update_locations(rng);
    }

    /// Joint draw of `(d, δ)` for every observation. Given `N = n` a cell
    /// `(k, l)` with `k < n` has mass `p_jl λ_jl² (1-λ_jl)^(n-1) K(x | θ_jlk)`;
    /// the λ factor is constant in `k` but not in `l`.
    pub fn update_alloc_block(&mut self, rng: &mut ChainRng) {
        let m = self.core.m;
        let ln_p = self.core.ln_p();
        let ln_lam: Vec<(f64, f64)> = (0..m * m)
            .map(|c| {
                let lam = self.lambda.get(c / m, c % m);
                (2.0 * lam.ln(), (-lam).ln_1p())
            })
            .collect();
        for j in 0..m {
            for i in 0..self.core.ys[j].len() {
                let y = self.core.ys[j][i];
                let n = self.slice[j][i] as usize;
                self.buf.clear();
                for l in 0..m {
                    let (two_ln_lam, ln_q) = ln_lam[j * m + l];
                    let lp = ln_p[j * m + l] + two_ln_lam + (n - 1) as f64 * ln_q;
                    let atoms = &self.core.atoms.pair(j, l)[..n];
                    self.buf.extend(atoms.iter().map(|a| lp + a.ln_kernel(y)));
                }
                let (idx, steps) = draw_from_log_weights(&mut self.buf, open01(rng));
                self.core.delta[j][i] = (idx / n) as u16;
                self.core.d[j][i] = (idx % n) as u32;
                self.ops.kernel_evals += (m * n) as u64;
                self.ops.comparisons += steps;
                self.ops.updates += 1;
                debug_assert!(self.core.d[j][i] < self.slice[j][i]);
            }
        }
    }

    /// `N_ji ~ P(N = r) ∝ (1 - λ_{j δ})^r` on `r >= d_ji`, then grow atoms.
    pub fn update_slice(&mut self, rng: &mut ChainRng) -> Result<()> {
        for j in 0..self.core.m {
            for i in 0..self.slice[j].len() {
                let lam = self.lambda.get(j, self.core.delta[j][i] as usize);
                let lower = self.core.d[j][i] as u64 + 1;
                let n = sample_truncated_geometric(lam, lower, rng)?;
                self.slice[j][i] = u32::try_from(n).map_err(|_| {
                    Error::Numerical(format!("slice value {n} overflows (lambda={lam})"))
                })?;
                debug_assert!(self.core.d[j][i] < self.slice[j][i]);
            }
        }
        self.extend_atoms(rng);
        Ok(())
    }

    pub fn update_selection(&mut self, rng: &mut ChainRng) -> Result<()> {
        self.core.update_selection(rng)
    }

    pub fn lambda_stats(&self) -> PairMatrix<LambdaStats> {
        let mut st = PairMatrix::from_fn(self.core.m, |_| LambdaStats::default());
        for j in 0..self.core.m {
            for (&l, &n) in self.core.delta[j].iter().zip(&self.slice[j]) {
                let e = st.get_mut(j, l as usize);
                e.s += 1;
                e.s_prime += n as u64 - 1;
            }
        }
        st
    }

    pub fn update_lambda(&mut self, rng: &mut ChainRng) -> Result<()> {
        let stats = self.lambda_stats();
        for lo in 0..self.core.m {
            for hi in lo..self.core.m {
                let st = *stats.get(lo, hi);
                let new = match self.lambda_prior {
                    LambdaPrior::Beta { a, b } => {
                        let (pa, pb) = beta_lambda_posterior(a, b, st);
                        interior(sample_beta(pa, pb, rng)?)
                    }
                    LambdaPrior::TransformedGamma { a, b } => {
                        tg_lambda_step(self.lambda.get(lo, hi), a, b, st, rng)?
                    }
                };
                self.lambda.set(lo, hi, new);
            }
        }
        Ok(())
    }

    pub fn gibbs_sweep(&mut self, rng: &mut ChainRng) -> Result<SweepStats> {
        self.ops = OpCounter::default();
        self.update_locations(rng);
        self.update_alloc_block(rng);
        self.update_slice(rng)?;
        self.update_selection(rng)?;
        self.update_lambda(rng)?;
        self.trim_atoms();
        Ok(SweepStats {
            occupied: self.core.occupied_cells(),
            depth: self.max_slice(),
            ops: self.ops,
            extra: Vec::new(),
        })
    }
}

impl GibbsSampler for PdgsbpSampler {
    fn m(&self) -> usize {
        self.core.m
    }

    fn sweep(&mut self, rng: &mut ChainRng) -> Result<SweepStats> {
        self.gibbs_sweep(rng)
    }

    fn check_invariants(&self) -> Result<()> {
        validate_geometric(&self.lambda)?;
        self.core.check_allocations()?;
        let n_star = self.max_slice();
        for j in 0..self.core.m {
            for (i, (&k, &n)) in self.core.d[j].iter().zip(&self.slice[j]).enumerate() {
                if k >= n {
                    return Err(Error::Invariant(format!(
                        "observation ({},{}) has d={} > N={n}",
                        j + 1,
                        i + 1,
                        k + 1
                    )));
                }
            }
        }
        for p in self.core.atoms.pairs() {
            if self.core.atoms.len(p.lo(), p.hi()) != n_star {
                return Err(Error::Invariant(format!(
                    "pair ({},{}) holds {} atoms, expected N*={n_star}",
                    p.lo() + 1,
                    p.hi() + 1,
                    self.core.atoms.len(p.lo(), p.hi())
                )));
            }
        }
        Ok(())
    }

    fn snapshot(&self) -> MixtureSnapshot {
        let pairs = PairMatrix::from_fn(self.core.m, |p| {
            let lam = self.lambda.get(p.lo(), p.hi());
            let atoms = self.core.atoms.pair(p.lo(), p.hi());
            let ln_1m = (-lam).ln_1p();
            let weights = (0..atoms.len())
                .map(|k| (lam.ln() + k as f64 * ln_1m).exp())
                .collect();
            PairComponents {
                weights,
                atoms: atoms.iter().map(|a| a.param).collect(),
                residual: (atoms.len() as f64 * ln_1m).exp(),
            }
        });
        MixtureSnapshot {
            kind: self.core.kind,
            p: self.core.p.clone(),
            pairs,
        }
    }

    fn selection(&self) -> &SelectionMatrix {
        &self.core.p
    }

    fn pair_parameter(&self) -> &SymmetricMatrix {
        &self.lambda
    }

    fn pair_parameter_name(&self) -> &'static str {
        "lambda"
    }
}

/// Build a sampler from `seed` and run it.
pub fn run(
    groups: &[Vec<f64>],
    prior: &PdgsbpPrior,
    config: &ChainConfig,
    seed: u64,
) -> Result<(ChainTrace, PdgsbpSampler)> {
    config.validate()?;
    let mut rng = chain_rng(seed, 0);
    let mut s = PdgsbpSampler::new(groups, prior, &mut rng)?;
    let trace = run_chain(&mut s, config, &mut rng, crate::chain::no_observer)?;
    Ok((trace, s))
}
