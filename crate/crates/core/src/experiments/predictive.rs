//! Posterior predictive densities on a uniform grid.

use rand::Rng;

use crate::chain::ChainTrace;
use crate::distributions::{BaseMeasureHyper, KernelKind, PriorPredictive};
use crate::error::{Error, Result};
use crate::experiments::dataset::{GroupedDataset, MixtureSpec};
use crate::model::{MixtureSnapshot, TailMode};
use crate::quadrature::trapezoid;

pub const DEFAULT_GRID_POINTS: usize = 4096;

/// Uniform grid `lo + i·step`, `i = 0..n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl GridSpec {
    pub fn new(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() || n < 2 {
            return Err(Error::param(format!("invalid grid [{lo}, {hi}] with {n} points")));
        }
        Ok(Self { lo, hi, n })
    }

    /// Data range widened by four pooled standard deviations; clipped at 0
    /// for positive-support kernels.
    pub fn for_data(data: &GroupedDataset, kind: KernelKind, n: usize) -> Result<Self> {
        let (min, max) = data
            .min_max()
            .ok_or_else(|| Error::param("cannot size a grid for an empty dataset"))?;
        let sd = data.pooled_sd().max(1e-3);
        let mut lo = min - 4.0 * sd;
        if kind == KernelKind::LogNormal {
            lo = lo.max(0.0);
        }
        Self::new(lo, max + 4.0 * sd, n)
    }

    pub fn step(&self) -> f64 {
        (self.hi - self.lo) / (self.n - 1) as f64
    }

    pub fn points(&self) -> Vec<f64> {
        let h = self.step();
        (0..self.n).map(|i| self.lo + i as f64 * h).collect()
    }
}

/// Per-group density values on a shared grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityGrid {
    pub grid: GridSpec,
    pub values: Vec<Vec<f64>>,
}

impl DensityGrid {
    pub fn m(&self) -> usize {
        self.values.len()
    }

    pub fn integral(&self, j: usize) -> f64 {
        trapezoid(&self.values[j], self.grid.step())
    }

    /// Closed-form densities of the generating mixtures.
    pub fn from_truth(grid: GridSpec, truth: &[MixtureSpec]) -> Self {
        let xs = grid.points();
        Self {
            grid,
            values: truth
                .iter()
                .map(|s| xs.iter().map(|&x| s.pdf(x)).collect())
                .collect(),
        }
    }

    /// Rows as CSV: `x,f_1,...,f_m`.
    pub fn write_csv<W: std::io::Write>(&self, out: W, prefix: &str) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["x".to_string()];
        header.extend((1..=self.m()).map(|j| format!("{prefix}_{j}")));
        w.write_record(&header)?;
        for (i, x) in self.grid.points().iter().enumerate() {
            let mut row = vec![x.to_string()];
            row.extend(self.values.iter().map(|v| v[i].to_string()));
            w.write_record(&row)?;
        }
        w.flush().map_err(|e| Error::io("<density grid>", e))?;
        Ok(())
    }
}

/// Running pointwise average of snapshot densities. The prior predictive is
/// evaluated once per grid point.
#[derive(Debug, Clone)]
pub struct PredictiveAccumulator {
    grid: GridSpec,
    xs: Vec<f64>,
    tail: TailMode,
    prior_grid: Vec<f64>,
    sums: Vec<Vec<f64>>,
    count: usize,
}

impl PredictiveAccumulator {
    pub fn new(
        grid: GridSpec,
        m: usize,
        kind: KernelKind,
        hyper: &BaseMeasureHyper,
        tail: TailMode,
    ) -> Result<Self> {
        let xs = grid.points();
        let prior_grid = PriorPredictive::new(*hyper, kind)?.on_grid(&xs)?;
        Ok(Self {
            grid,
            xs,
            tail,
            prior_grid,
            sums: vec![vec![0.0; grid.n]; m],
            count: 0,
        })
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn add(&mut self, snap: &MixtureSnapshot) -> Result<()> {
        if snap.m() != self.sums.len() {
            return Err(Error::param(format!(
                "snapshot has {} groups, accumulator {}",
                snap.m(),
                self.sums.len()
            )));
        }
        for (j, sum) in self.sums.iter_mut().enumerate() {
            let vals = snap.density_on_grid(&self.xs, j, self.tail, &self.prior_grid);
            for (s, v) in sum.iter_mut().zip(vals) {
                *s += v;
            }
        }
        self.count += 1;
        Ok(())
    }

    pub fn finish(&self) -> Result<DensityGrid> {
        if self.count == 0 {
            return Err(Error::param("no retained states to average"));
        }
        let n = self.count as f64;
        Ok(DensityGrid {
            grid: self.grid,
            values: self
                .sums
                .iter()
                .map(|s| s.iter().map(|v| v / n).collect())
                .collect(),
        })
    }
}

/// Average the densities of all snapshots stored in `trace`.
pub fn predictive_grid(
    trace: &ChainTrace,
    grid: GridSpec,
    kind: KernelKind,
    hyper: &BaseMeasureHyper,
    tail: TailMode,
) -> Result<DensityGrid> {
    if trace.snapshots.is_empty() {
        return Err(Error::param(
            "trace holds no retained states; run with snapshots enabled",
        ));
    }
    let mut acc = PredictiveAccumulator::new(grid, trace.m, kind, hyper, tail)?;
    for s in &trace.snapshots {
        acc.add(s)?;
    }
    acc.finish()
}

/// Predictive draws per group, smoothed afterwards by a Gaussian KDE.
#[derive(Debug, Clone)]
pub struct KdeAccumulator {
    hyper: BaseMeasureHyper,
    draws: Vec<Vec<f64>>,
}

impl KdeAccumulator {
    pub fn new(m: usize, hyper: BaseMeasureHyper) -> Self {
        Self {
            hyper,
            draws: vec![Vec::new(); m],
        }
    }

    /// One predictive draw per group from `snap`.
    pub fn add<R: Rng + ?Sized>(&mut self, snap: &MixtureSnapshot, rng: &mut R) {
        for (j, d) in self.draws.iter_mut().enumerate() {
            d.push(snap.sample_observation(j, &self.hyper, rng));
        }
    }

    pub fn draws(&self) -> &[Vec<f64>] {
        &self.draws
    }

    pub fn finish(&self, grid: GridSpec) -> Result<DensityGrid> {
        let xs = grid.points();
        let values = self
            .draws
            .iter()
            .map(|d| gaussian_kde(d, &xs))
            .collect::<Result<_>>()?;
        Ok(DensityGrid { grid, values })
    }
}

/// Silverman's rule `0.9 min(sd, IQR/1.34) n^(-1/5)`.
pub fn silverman_bandwidth(sample: &[f64]) -> Result<f64> {
    let n = sample.len();
    if n < 2 {
        return Err(Error::param("bandwidth needs at least two points"));
    }
    let mean = sample.iter().sum::<f64>() / n as f64;
    let sd = (sample.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
    let mut sorted = sample.to_vec();
    sorted.sort_by(f64::total_cmp);
    let iqr = quantile(&sorted, 0.75) - quantile(&sorted, 0.25);
    let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
    if !(spread > 0.0) {
        return Err(Error::Numerical("sample has zero spread".into()));
    }
    Ok(0.9 * spread * (n as f64).powf(-0.2))
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let i = pos.floor() as usize;
    let frac = pos - i as f64;
    match sorted.get(i + 1) {
        Some(next) => sorted[i] + frac * (next - sorted[i]),
        None => sorted[i],
    }
}

pub fn gaussian_kde(sample: &[f64], xs: &[f64]) -> Result<Vec<f64>> {
    let h = silverman_bandwidth(sample)?;
    let norm = 1.0 / (sample.len() as f64 * h * (2.0 * std::f64::consts::PI).sqrt());
    let mut sorted = sample.to_vec();
    sorted.sort_by(f64::total_cmp);
    // Points further than 10 bandwidths contribute below 1e-21 each.
    let reach = 10.0 * h;
    Ok(xs
        .iter()
        .map(|&x| {
            let a = sorted.partition_point(|&s| s < x - reach);
            let b = sorted.partition_point(|&s| s <= x + reach);
            sorted[a..b]
                .iter()
                .map(|s| {
                    let z = (x - s) / h;
                    (-0.5 * z * z).exp()
                })
                .sum::<f64>()
                * norm
        })
        .collect())
}
