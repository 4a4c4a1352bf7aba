//! Mean execution time per 10³ sweeps, with hardware-free work counters.

use std::time::Instant;

use crate::distributions::chain_rng;
use crate::error::{Error, Result};
use crate::experiments::dataset::GroupedDataset;
use crate::experiments::fit::{build_sampler, ModelSpec, SamplerKind};
use crate::sampling::OpCounter;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BenchConfig {
    pub block_iterations: usize,
    /// Timed blocks after the discarded warm-up block.
    pub blocks: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            block_iterations: 200,
            blocks: 10,
        }
    }
}

impl BenchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.block_iterations == 0 {
            return Err(Error::Config("bench block_iterations must be at least 1".into()));
        }
        if self.blocks < 10 {
            return Err(Error::Config(format!(
                "bench needs at least 10 timed blocks, got {}",
                self.blocks
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchResult {
    pub sampler: SamplerKind,
    /// Seconds per 10³ sweeps, averaged over blocks.
    pub met: f64,
    /// Standard error of `met` across blocks.
    pub met_se: f64,
    pub block_mets: Vec<f64>,
    /// Work summed over the timed blocks.
    pub ops: OpCounter,
    pub iterations: usize,
}

impl BenchResult {
    pub fn comparisons_per_sweep(&self) -> f64 {
        self.ops.comparisons as f64 / self.iterations as f64
    }

    pub fn kernel_evals_per_sweep(&self) -> f64 {
        self.ops.kernel_evals as f64 / self.iterations as f64
    }
}

/// Time `cfg.blocks` blocks of sweeps after one discarded warm-up block.
/// Runs on the calling thread only.
pub fn benchmark_met(
    kind: SamplerKind,
    spec: &ModelSpec,
    data: &GroupedDataset,
    cfg: &BenchConfig,
    seed: u64,
) -> Result<BenchResult> {
    cfg.validate()?;
    let mut rng = chain_rng(seed, 0);
    let mut sampler = build_sampler(kind, spec, data, &mut rng)?;
    for _ in 0..cfg.block_iterations {
        sampler.sweep(&mut rng)?;
    }
    sampler.check_invariants()?;
    let mut ops = OpCounter::default();
    let mut block_mets = Vec::with_capacity(cfg.blocks);
    for _ in 0..cfg.blocks {
        let start = Instant::now();
        for _ in 0..cfg.block_iterations {
            ops += sampler.sweep(&mut rng)?.ops;
        }
        let secs = start.elapsed().as_secs_f64();
        block_mets.push(secs * 1e3 / cfg.block_iterations as f64);
        sampler.check_invariants()?;
    }
    let n = block_mets.len() as f64;
    let met = block_mets.iter().sum::<f64>() / n;
    let var = block_mets.iter().map(|v| (v - met).powi(2)).sum::<f64>() / (n - 1.0);
    Ok(BenchResult {
        sampler: kind,
        met,
        met_se: (var / n).sqrt(),
        block_mets,
        ops,
        iterations: cfg.blocks * cfg.block_iterations,
    })
}
