//! Measure representations shared by both samplers and the closed-form
//! density and moment formulas of the pairwise dependent mixtures.

mod density;
mod gsb;
mod matrices;
mod moments;
mod pair;

pub use density::{MixtureSnapshot, PairComponents, TailMode};
pub use gsb::{conditional_mixture_weights, geometric_weight, GsbMixture};
pub use matrices::{
    validate_concentration, validate_geometric, ConcentrationMatrix, GeometricMatrix,
    SelectionMatrix, SymmetricMatrix,
};
pub use moments::{
    corr_pdgsbp, corr_rpddp, cov_pdgsbp, d12, d12_case, second_moment_g, CorrelationOrder,
    KernelMoments,
};
pub use pair::{pair_count, Atom, AtomTable, PairIndex, PairMatrix};
