//! Slice sampler for the randomized pairwise dependent Dirichlet process
//! mixture, with gamma priors on the concentrations.
//!
//! Sweep order: atoms, sticks, slice variables `u`, stick extension, the
//! `(d, δ)` block over the slice sets, selection rows, concentrations.

use crate::chain::{run_chain, ChainConfig, ChainRng, ChainTrace, GibbsSampler, SweepStats};
use crate::common::{Common, SharedPrior};
use crate::distributions::{chain_rng, open01, sample_beta, sample_gamma};
use crate::error::{Error, Result};
use crate::model::{
    validate_concentration, ConcentrationMatrix, MixtureSnapshot, PairComponents, PairMatrix,
    SelectionMatrix, SymmetricMatrix,
};
use crate::sampling::{draw_from_log_weights, OpCounter};
use rand::Rng;

/// Upper bound on instantiated sticks per pair; reaching it means the slice
/// variables have collapsed towards zero.
const MAX_STICKS: usize = 1_000_000;

/// Which sample size enters the concentration update of a pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WestCount {
    /// Observations currently allocated to the pair measure.
    #[default]
    Allocated,
    /// `n_j` for diagonal pairs and `n_j + n_l` otherwise.
    GroupSizes,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RpddpPrior {
    pub shared: SharedPrior,
    /// Gamma(shape, rate) prior on every `c_jl`; shape must exceed 1.
    pub conc_shape: f64,
    pub conc_rate: f64,
    pub west_count: WestCount,
}

impl RpddpPrior {
    pub fn validate(&self) -> Result<()> {
        if !(self.conc_shape > 1.0) {
            return Err(Error::Config(format!(
                "concentration prior shape must exceed 1, got {}",
                self.conc_shape
            )));
        }
        if !(self.conc_rate > 0.0) {
            return Err(Error::Config(format!(
                "concentration prior rate must be positive, got {}",
                self.conc_rate
            )));
        }
        Ok(())
    }
}

/// Indices `{k : w_k > u}` of one pair's weights, with the number of
/// comparisons spent.
#[derive(Debug, Clone, PartialEq)]
pub struct SliceSet {
    pub threshold: f64,
    pub members: Vec<usize>,
    pub comparisons: u64,
}

pub fn build_slice_set(weights: &[f64], u: f64) -> Result<SliceSet> {
    let members: Vec<usize> = (0..weights.len()).filter(|&k| weights[k] > u).collect();
    if members.is_empty() {
        return Err(Error::Invariant(format!(
            "slice threshold {u} exceeds all {} instantiated weights",
            weights.len()
        )));
    }
    Ok(SliceSet {
        threshold: u,
        members,
        comparisons: weights.len() as u64,
    })
}

/// Stick-breaking weights and residual mass from sticks `v`.
pub fn stick_weights(v: &[f64]) -> (Vec<f64>, f64) {
    let mut w = Vec::with_capacity(v.len());
    let mut rest = 1.0;
    for &vk in v {
        w.push(rest * vk);
        rest *= 1.0 - vk;
    }
    (w, rest)
}

/// Append `Beta(1, c)` sticks until the residual mass drops below `u_star`.
/// Returns the number of sticks added.
pub fn extend_sticks<R: Rng + ?Sized>(
    v: &mut Vec<f64>,
    w: &mut Vec<f64>,
    residual: &mut f64,
    c: f64,
    u_star: f64,
    rng: &mut R,
) -> Result<usize> {
    let start = v.len();
    while *residual >= u_star {
        if v.len() >= MAX_STICKS {
            return Err(Error::Numerical(format!(
                "stick extension exceeded {MAX_STICKS} sticks (c={c}, u*={u_star})"
            )));
        }
        let vk = sample_beta(1.0, c, rng)?;
        w.push(*residual * vk);
        v.push(vk);
        *residual *= 1.0 - vk;
    }
    Ok(v.len() - start)
}

/// Conjugate stick posteriors `Beta(1 + m_k, c + Σ_{r>k} m_r)`.
pub fn stick_posterior(counts: &[usize], c: f64) -> Vec<(f64, f64)> {
    let mut tail: usize = counts.iter().sum();
    counts
        .iter()
        .map(|&mk| {
            tail -= mk;
            (1.0 + mk as f64, c + tail as f64)
        })
        .collect()
}

/// Probability of the `Gamma(a + ρ, ·)` component in the concentration
/// update given the auxiliary `β`.
pub fn west_mixture_weight(a: f64, b: f64, n: usize, rho: usize, beta: f64) -> f64 {
    let odds = (a + rho as f64 - 1.0) / (n as f64 * (b - beta.ln()));
    odds / (1.0 + odds)
}

/// Concentration update for a pair with `n` observations in `rho` clusters;
/// `n = 0` reduces to a prior draw.
pub fn west_update<R: Rng + ?Sized>(c: f64, a: f64, b: f64, n: usize, rho: usize, rng: &mut R) -> Result<f64> {
    if n == 0 {
        return sample_gamma(a, b, rng);
    }
    let beta = sample_beta(c + 1.0, n as f64, rng)?;
    let rate = b - beta.ln();
    let pi = west_mixture_weight(a, b, n, rho, beta);
    let shape = if open01(rng) < pi {
        a + rho as f64
    } else {
        a + rho as f64 - 1.0
    };
    sample_gamma(shape, rate, rng)
}

struct Sticks {
    v: Vec<f64>,
    w: Vec<f64>,
    residual: f64,
}

impl Sticks {
    fn from_v(v: Vec<f64>) -> Self {
        let (w, residual) = stick_weights(&v);
        Self { v, w, residual }
    }
}

pub struct RpddpSampler {
    core: Common,
    sticks: PairMatrix<Sticks>,
    u: Vec<Vec<f64>>,
    c: ConcentrationMatrix,
    prior: RpddpPrior,
    ops: OpCounter,
    slice_card: u64,
    predicted_depth: f64,
    buf: Vec<f64>,
    cells: Vec<(u16, u32)>,
}

impl RpddpSampler {
    /// Initial state: `d = 1`, `δ_ji = j`, one stick per pair, everything else
    /// from the prior.
    pub fn new(groups: &[Vec<f64>], prior: &RpddpPrior, rng: &mut ChainRng) -> Result<Self> {
        prior.validate()?;
        let mut core = Common::new(groups, &prior.shared, rng)?;
        let m = core.m;
        let mut c = SymmetricMatrix::constant(m, 1.0);
        for lo in 0..m {
            for hi in lo..m {
                c.set(lo, hi, sample_gamma(prior.conc_shape, prior.conc_rate, rng)?);
            }
        }
        let mut sticks = PairMatrix::from_fn(m, |_| Sticks::from_v(Vec::new()));
        for lo in 0..m {
            for hi in lo..m {
                let v = sample_beta(1.0, c.get(lo, hi), rng)?;
                *sticks.get_mut(lo, hi) = Sticks::from_v(vec![v]);
                core.atoms.ensure_len(lo, hi, 1, &core.hyper, rng);
            }
        }
        let u = core.ys.iter().map(|g| vec![0.0; g.len()]).collect();
        let mut s = Self {
            core,
            sticks,
            u,
            c,
            prior: prior.clone(),
            ops: OpCounter::default(),
            slice_card: 0,
            predicted_depth: 0.0,
            buf: Vec::new(),
            cells: Vec::new(),
        };
        s.update_slice_u(rng);
        s.extend_all(rng)?;
        Ok(s)
    }

    pub fn concentration(&self) -> &ConcentrationMatrix {
        &self.c
    }

    pub fn weights(&self, j: usize, l: usize) -> &[f64] {
        &self.sticks.get(j, l).w
    }

    pub fn residual(&self, j: usize, l: usize) -> f64 {
        self.sticks.get(j, l).residual
    }

    pub fn slices(&self, j: usize) -> &[f64] {
        &self.u[j]
    }

    pub fn allocations(&self, j: usize) -> (&[u32], &[u16]) {
        (&self.core.d[j], &self.core.delta[j])
    }

    pub fn slice_set(&self, j: usize, l: usize, u: f64) -> Result<SliceSet> {
        build_slice_set(&self.sticks.get(j, l).w, u)
    }

    /// Smallest slice variable among the groups that can use pair `(j, l)`.
    pub fn u_star(&self, j: usize, l: usize) -> Option<f64> {
        let groups: &[usize] = if j == l { &[j] } else { &[j, l] };
        groups
            .iter()
            .flat_map(|&g| self.u[g].iter().copied())
            .reduce(f64::min)
    }

    fn trim_to_occupied(&mut self) {
        let depths = self.core.occupied_depths();
        for lo in 0..self.core.m {
            for hi in lo..self.core.m {
                let len = *depths.get(lo, hi);
                let st = self.sticks.get_mut(lo, hi);
                if st.v.len() > len {
                    st.v.truncate(len);
                    *st = Sticks::from_v(std::mem::take(&mut st.v));
                }
                self.core.atoms.truncate(lo, hi, len);
            }
        }
    }

    pub fn update_locations(&mut self, rng: &mut ChainRng) {
        self.trim_to_occupied();
        self.core.update_locations(rng);
    }

    pub fn update_sticks(&mut self, rng: &mut ChainRng) -> Result<()> {
        let counts = self.core.component_counts();
        for lo in 0..self.core.m {
            for hi in lo..self.core.m {
                let c = self.c.get(lo, hi);
                let v = stick_posterior(&counts.get(lo, hi)[..self.sticks.get(lo, hi).v.len()], c)
                    .into_iter()
                    .map(|(a, b)| sample_beta(a, b, rng).map(|x| x.min(1.0f64.next_down())))
                    .collect::<Result<Vec<_>>>()?;
                *self.sticks.get_mut(lo, hi) = Sticks::from_v(v);
            }
        }
        Ok(())
    }

    /// `u_ji ~ Uniform(0, w_{j δ_ji d_ji})`.
    pub fn update_slice_u(&mut self, rng: &mut ChainRng) {
        for j in 0..self.core.m {
            for i in 0..self.u[j].len() {
                let l = self.core.delta[j][i] as usize;
                let w = self.sticks.get(j, l).w[self.core.d[j][i] as usize];
                self.u[j][i] = w * open01(rng);
            }
        }
    }

    fn extend_all(&mut self, rng: &mut ChainRng) -> Result<()> {
        let mut predicted = 0.0;
        let mut pairs = 0usize;
        for lo in 0..self.core.m {
            for hi in lo..self.core.m {
                let Some(u_star) = self.u_star(lo, hi) else {
                    continue;
                };
                let c = self.c.get(lo, hi);
                predicted += 1.0 + c * (-u_star.ln());
                pairs += 1;
                let st = self.sticks.get_mut(lo, hi);
                extend_sticks(&mut st.v, &mut st.w, &mut st.residual, c, u_star, rng)?;
                let len = st.v.len();
                self.core.atoms.ensure_len(lo, hi, len, &self.core.hyper, rng);
            }
        }
        self.predicted_depth = if pairs > 0 { predicted / pairs as f64 } else { 0.0 };
        Ok(())
    }

    /// Joint draw of `(d, δ)` over the union of the slice sets of group `j`.
    pub fn update_alloc_block_dp(&mut self, rng: &mut ChainRng) -> Result<()> {
        let m = self.core.m;
        let ln_p = self.core.ln_p();
        for j in 0..m {
            for i in 0..self.core.ys[j].len() {
                let y = self.core.ys[j][i];
                let u = self.u[j][i];
                self.buf.clear();
                self.cells.clear();
                for l in 0..m {
                    let lp = ln_p[j * m + l];
                    let w = &self.sticks.get(j, l).w;
                    let atoms = self.core.atoms.pair(j, l);
                    self.ops.comparisons += w.len() as u64;
                    for (k, &wk) in w.iter().enumerate() {
                        if wk > u {
                            self.buf.push(lp + atoms[k].ln_kernel(y));
                            self.cells.push((l as u16, k as u32));
                        }
                    }
                }
                if self.buf.is_empty() {
                    return Err(Error::Invariant(format!(
                        "empty slice set union for observation ({},{}) at u={u}",
                        j + 1,
                        i + 1
                    )));
                }
                let (idx, steps) = draw_from_log_weights(&mut self.buf, open01(rng));
                let (l, k) = self.cells[idx];
                self.core.delta[j][i] = l;
                self.core.d[j][i] = k;
                self.ops.comparisons += steps;
                self.ops.kernel_evals += self.cells.len() as u64;
                self.ops.updates += 1;
                self.slice_card += self.cells.len() as u64;
                debug_assert!(self.sticks.get(j, l as usize).w[k as usize] > u);
            }
        }
        Ok(())
    }

    pub fn update_selection(&mut self, rng: &mut ChainRng) -> Result<()> {
        self.core.update_selection(rng)
    }

    /// Per pair, `(n, ρ)` for the concentration update.
    pub fn concentration_counts(&self) -> PairMatrix<(usize, usize)> {
        let counts = self.core.component_counts();
        PairMatrix::from_fn(self.core.m, |p| {
            let c = counts.get(p.lo(), p.hi());
            let rho = c.iter().filter(|&&n| n > 0).count();
            let n = match self.prior.west_count {
                WestCount::Allocated => c.iter().sum(),
                WestCount::GroupSizes => {
                    if p.is_diagonal() {
                        self.core.ys[p.lo()].len()
                    } else {
                        self.core.ys[p.lo()].len() + self.core.ys[p.hi()].len()
                    }
                }
            };
            (n, rho)
        })
    }

    pub fn update_concentration(&mut self, rng: &mut ChainRng) -> Result<()> {
        let counts = self.concentration_counts();
        let (a, b) = (self.prior.conc_shape, self.prior.conc_rate);
        for lo in 0..self.core.m {
            for hi in lo..self.core.m {
                let (n, rho) = *counts.get(lo, hi);
                let c = west_update(self.c.get(lo, hi), a, b, n, rho, rng)?;
                self.c.set(lo, hi, c);
            }
        }
        Ok(())
    }

    pub fn gibbs_sweep(&mut self, rng: &mut ChainRng) -> Result<SweepStats> {
        self.ops = OpCounter::default();
        self.slice_card = 0;
        self.update_locations(rng);
        self.update_sticks(rng)?;
        self.update_slice_u(rng);
        self.extend_all(rng)?;
        self.update_alloc_block_dp(rng)?;
        self.update_selection(rng)?;
        self.update_concentration(rng)?;
        let depth = self.sticks.values().iter().map(|s| s.v.len()).max().unwrap_or(0);
        let n = self.core.n_total();
        let mean_card = if n > 0 { self.slice_card as f64 / n as f64 } else { 0.0 };
        Ok(SweepStats {
            occupied: self.core.occupied_cells(),
            depth,
            ops: self.ops,
            extra: vec![mean_card, self.predicted_depth],
        })
    }
}

impl GibbsSampler for RpddpSampler {
    fn m(&self) -> usize {
        self.core.m
    }

    fn sweep(&mut self, rng: &mut ChainRng) -> Result<SweepStats> {
        self.gibbs_sweep(rng)
    }

    fn check_invariants(&self) -> Result<()> {
        validate_concentration(&self.c)?;
        self.core.check_allocations()?;
        for j in 0..self.core.m {
            for (i, ((&k, &l), &u)) in self.core.d[j]
                .iter()
                .zip(&self.core.delta[j])
                .zip(&self.u[j])
                .enumerate()
            {
                let w = self.sticks.get(j, l as usize).w[k as usize];
                if !(u > 0.0 && u < w) {
                    return Err(Error::Invariant(format!(
                        "slice u={u} of observation ({},{}) not below its weight {w}",
                        j + 1,
                        i + 1
                    )));
                }
            }
        }
        for (p, st) in self.sticks.iter() {
            let total: f64 = st.w.iter().sum();
            if !(st.residual >= 0.0) || (total + st.residual - 1.0).abs() > 1e-9 {
                return Err(Error::Invariant(format!(
                    "weights of pair ({},{}) sum to {total} with remainder {}",
                    p.lo() + 1,
                    p.hi() + 1,
                    st.residual
                )));
            }
            if let Some(u_star) = self.u_star(p.lo(), p.hi()) {
                if st.residual >= u_star {
                    return Err(Error::Invariant(format!(
                        "pair ({},{}) residual {} is not below u*={u_star}",
                        p.lo() + 1,
                        p.hi() + 1,
                        st.residual
                    )));
                }
            }
            if self.core.atoms.len(p.lo(), p.hi()) != st.v.len() {
                return Err(Error::Invariant(format!(
                    "pair ({},{}) has {} sticks but {} atoms",
                    p.lo() + 1,
                    p.hi() + 1,
                    st.v.len(),
                    self.core.atoms.len(p.lo(), p.hi())
                )));
            }
        }
        Ok(())
    }

    fn snapshot(&self) -> MixtureSnapshot {
        let pairs = PairMatrix::from_fn(self.core.m, |p| {
            let st = self.sticks.get(p.lo(), p.hi());
            PairComponents {
                weights: st.w.clone(),
                atoms: self.core.atoms.pair(p.lo(), p.hi()).iter().map(|a| a.param).collect(),
                residual: st.residual,
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
        &self.c
    }

    fn pair_parameter_name(&self) -> &'static str {
        "c"
    }

    fn extra_names(&self) -> &'static [&'static str] {
        &["mean_slice_card", "predicted_depth"]
    }
}

pub fn run(
    groups: &[Vec<f64>],
    prior: &RpddpPrior,
    config: &ChainConfig,
    seed: u64,
) -> Result<(ChainTrace, RpddpSampler)> {
    config.validate()?;
    let mut rng = chain_rng(seed, 0);
    let mut s = RpddpSampler::new(groups, prior, &mut rng)?;
    let trace = run_chain(&mut s, config, &mut rng, crate::chain::no_observer)?;
    Ok((trace, s))
}
