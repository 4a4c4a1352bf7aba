//! Synthetic and real datasets, predictive densities, Hellinger evaluation
//! and the runtime benchmark.

pub mod bench;
pub mod dataset;
pub mod fit;
pub mod generators;
pub mod metrics;
pub mod pbcseq;
pub mod predictive;

pub use bench::{benchmark_met, BenchConfig, BenchResult};
pub use dataset::{Family, GroupedDataset, MixtureSpec};
pub use fit::{build_sampler, fit, FitOptions, FitResult, ModelSpec, SamplerKind};
pub use generators::{gen_borrowing, gen_gamma_mix, gen_nested, gen_seven_mix, gen_sparse_scalable};
pub use metrics::{hellinger, hellinger_grids, median, posterior_selection_mean};
pub use pbcseq::{load_pbcseq, pbc_dirichlet_alpha, ColumnRef, PbcData, PbcLayout};
pub use predictive::{predictive_grid, DensityGrid, GridSpec, KdeAccumulator, PredictiveAccumulator};
