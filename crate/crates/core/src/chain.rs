//! Generic chain driver and per-iteration trace shared by both samplers.

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{MixtureSnapshot, SelectionMatrix, SymmetricMatrix};
use crate::sampling::OpCounter;

pub type ChainRng = ChaCha8Rng;

/// Summary of one sweep, as reported by the sampler.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepStats {
    /// Number of occupied (pair, component) cells.
    pub occupied: usize,
    /// Largest instantiated component depth over all pairs.
    pub depth: usize,
    pub ops: OpCounter,
    /// Sampler-specific scalar diagnostics, in a fixed order.
    pub extra: Vec<f64>,
}

/// A Gibbs sampler over a fixed grouped dataset.
pub trait GibbsSampler {
    fn m(&self) -> usize;

    /// One full sweep over all latent variables and parameters.
    fn sweep(&mut self, rng: &mut ChainRng) -> Result<SweepStats>;

    /// Verify every state invariant; used after each sweep.
    fn check_invariants(&self) -> Result<()>;

    fn snapshot(&self) -> MixtureSnapshot;

    fn selection(&self) -> &SelectionMatrix;

    /// The symmetric per-pair parameter (λ or c).
    fn pair_parameter(&self) -> &SymmetricMatrix;

    /// Column prefix for [`GibbsSampler::pair_parameter`].
    fn pair_parameter_name(&self) -> &'static str;

    /// Names of the values in [`SweepStats::extra`].
    fn extra_names(&self) -> &'static [&'static str] {
        &[]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChainConfig {
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    /// Keep a [`MixtureSnapshot`] for every retained iteration.
    pub keep_snapshots: bool,
}

impl ChainConfig {
    pub fn new(iterations: usize, burn_in: usize) -> Self {
        Self {
            iterations,
            burn_in,
            thin: 1,
            keep_snapshots: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.thin == 0 {
            return Err(Error::Config("thin must be at least 1".into()));
        }
        if self.burn_in > self.iterations {
            return Err(Error::Config(format!(
                "burn_in ({}) exceeds iterations ({})",
                self.burn_in, self.iterations
            )));
        }
        Ok(())
    }

    #[inline]
    pub fn is_retained(&self, iteration: usize) -> bool {
        iteration >= self.burn_in && (iteration - self.burn_in).is_multiple_of(self.thin)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    pub wall_nanos: u64,
    /// Index into [`ChainTrace::snapshots`] when the state was kept.
    pub snapshot_row: Option<usize>,
    pub occupied: usize,
    pub depth: usize,
    pub comparisons: u64,
    pub kernel_evals: u64,
    /// Row-major selection matrix.
    pub p: Vec<f64>,
    /// Upper triangle of λ or c.
    pub pair_parameter: Vec<f64>,
    pub extra: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainTrace {
    pub m: usize,
    pub pair_parameter_name: &'static str,
    pub extra_names: Vec<&'static str>,
    pub config: ChainConfig,
    pub records: Vec<IterationRecord>,
    pub snapshots: Vec<MixtureSnapshot>,
}

impl ChainTrace {
    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Records at or after the burn-in that pass the thinning filter.
    pub fn retained(&self) -> impl Iterator<Item = &IterationRecord> + '_ {
        self.records
            .iter()
            .filter(move |r| self.config.is_retained(r.iteration))
    }

    pub fn header(&self) -> Vec<String> {
        let mut h: Vec<String> = [
            "iteration",
            "wall_nanos",
            "snapshot_row",
            "occupied",
            "depth",
            "comparisons",
            "kernel_evals",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        for j in 1..=self.m {
            for l in 1..=self.m {
                h.push(format!("p_{j}_{l}"));
            }
        }
        for j in 1..=self.m {
            for l in j..=self.m {
                h.push(format!("{}_{j}_{l}", self.pair_parameter_name));
            }
        }
        h.extend(self.extra_names.iter().map(|s| s.to_string()));
        h
    }

    /// Write the trace as CSV. With `include_timing = false` the wall-clock
    /// column is zeroed so equal seeds give byte-identical files.
    pub fn write_csv<W: Write>(&self, out: W, include_timing: bool) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(self.header())?;
        for r in &self.records {
            let mut row = vec![
                r.iteration.to_string(),
                if include_timing { r.wall_nanos } else { 0 }.to_string(),
                r.snapshot_row.map(|v| v.to_string()).unwrap_or_default(),
                r.occupied.to_string(),
                r.depth.to_string(),
                r.comparisons.to_string(),
                r.kernel_evals.to_string(),
            ];
            row.extend(r.p.iter().map(|v| v.to_string()));
            row.extend(r.pair_parameter.iter().map(|v| v.to_string()));
            row.extend(r.extra.iter().map(|v| v.to_string()));
            w.write_record(&row)?;
        }
        w.flush().map_err(|e| Error::io("<trace>", e))?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path, include_timing: bool) -> Result<()> {
        let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(f), include_timing)
    }
}

/// Run `config.iterations` sweeps, checking invariants after each one and
/// calling `observer` on every retained state.
pub fn run_chain<S, F>(
    sampler: &mut S,
    config: &ChainConfig,
    rng: &mut ChainRng,
    mut observer: F,
) -> Result<ChainTrace>
where
    S: GibbsSampler + ?Sized,
    F: FnMut(usize, &S) -> Result<()>,
{
    config.validate()?;
    let mut trace = ChainTrace {
        m: sampler.m(),
        pair_parameter_name: sampler.pair_parameter_name(),
        extra_names: sampler.extra_names().to_vec(),
        config: *config,
        records: Vec::with_capacity(config.iterations),
        snapshots: Vec::new(),
    };
    for iteration in 0..config.iterations {
        let start = Instant::now();
        let stats = sampler.sweep(rng)?;
        let wall_nanos = start.elapsed().as_nanos() as u64;
        sampler.check_invariants()?;
        let mut snapshot_row = None;
        if config.is_retained(iteration) {
            if config.keep_snapshots {
                snapshot_row = Some(trace.snapshots.len());
                trace.snapshots.push(sampler.snapshot());
            }
            observer(iteration, sampler)?;
        }
        trace.records.push(IterationRecord {
            iteration,
            wall_nanos,
            snapshot_row,
            occupied: stats.occupied,
            depth: stats.depth,
            comparisons: stats.ops.comparisons,
            kernel_evals: stats.ops.kernel_evals,
            p: sampler.selection().as_slice().to_vec(),
            pair_parameter: sampler.pair_parameter().upper().to_vec(),
            extra: stats.extra,
        });
    }
    Ok(trace)
}

/// Observer that does nothing.
pub fn no_observer<S: ?Sized>(_: usize, _: &S) -> Result<()> {
    Ok(())
}
