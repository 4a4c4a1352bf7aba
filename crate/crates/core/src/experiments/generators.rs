//! Synthetic grouped datasets with known generating densities.
//!
//! Every generator draws group `j` from its own stream `(seed, 1000 + j)`, so
//! changing one group's size leaves the other groups untouched.

use crate::distributions::{chain_rng, BaseMeasureHyper, KernelKind};
use crate::error::{Error, Result};
use crate::experiments::dataset::{Family, GroupedDataset, MixtureSpec};

const M_MATRIX: [[u8; 10]; 4] = [
    [1, 1, 1, 1, 0, 0, 0, 0, 0, 0],
    [0, 0, 1, 0, 1, 0, 0, 1, 1, 0],
    [0, 1, 0, 0, 0, 1, 0, 1, 0, 1],
    [1, 0, 0, 0, 0, 0, 1, 0, 1, 1],
];

/// Draw `sizes[j]` observations from `specs[j]`.
pub fn sample_groups(specs: Vec<MixtureSpec>, sizes: &[usize], seed: u64) -> Result<GroupedDataset> {
    if specs.len() != sizes.len() || specs.is_empty() {
        return Err(Error::param("one size per group specification is required"));
    }
    let groups = specs
        .iter()
        .zip(sizes)
        .enumerate()
        .map(|(j, (spec, &n))| {
            let mut rng = chain_rng(seed, 1000 + j as u64);
            (0..n).map(|_| spec.sample(&mut rng)).collect()
        })
        .collect();
    Ok(GroupedDataset {
        groups,
        truth: Some(specs),
    })
}

fn normal(mean: f64, sd: f64) -> Family {
    Family::Normal { mean, sd }
}

fn gamma(shape: f64, rate: f64) -> Family {
    Family::Gamma { shape, rate }
}

/// Group sizes used for the nested-model experiments.
pub fn nested_group_size(m: usize) -> Result<usize> {
    match m {
        2 => Ok(60),
        3 => Ok(120),
        4 => Ok(200),
        _ => Err(Error::param(format!("nested model needs m in 2..=4, got {m}"))),
    }
}

/// True densities of the nested model: group `j` is the equal-weight mixture
/// of N(10(k-6), 1) over the ones in row `j` of the selector matrix,
/// restricted to columns `5-m ..= 2(m+1)`.
pub fn nested_specs(m: usize) -> Result<Vec<MixtureSpec>> {
    nested_group_size(m)?;
    let cols = (5 - m)..=(2 * (m + 1));
    (0..m)
        .map(|j| {
            let means: Vec<f64> = cols
                .clone()
                .filter(|&k| M_MATRIX[j][k - 1] == 1)
                .map(|k| 10.0 * (k as f64 - 6.0))
                .collect();
            MixtureSpec::equal_normals(&means, 1.0)
        })
        .collect()
}

/// Nested-model data; `n_per_group` defaults to [`nested_group_size`].
pub fn gen_nested(m: usize, n_per_group: Option<usize>, seed: u64) -> Result<GroupedDataset> {
    let n = match n_per_group {
        Some(n) => {
            nested_group_size(m)?;
            n
        }
        None => nested_group_size(m)?,
    };
    sample_groups(nested_specs(m)?, &vec![n; m], seed)
}

/// Groups `j < m` are N((j-1)ξ, 1) with `n` points each; group `m` pools the
/// `m-1` modes with `n(m-1)` points.
pub fn gen_sparse_scalable(m: usize, n: usize, xi: f64, seed: u64) -> Result<GroupedDataset> {
    if m < 2 || n == 0 {
        return Err(Error::param(format!("sparse design needs m >= 2 and n >= 1, got m={m}, n={n}")));
    }
    let modes: Vec<f64> = (0..m - 1).map(|j| j as f64 * xi).collect();
    let mut specs: Vec<MixtureSpec> = modes
        .iter()
        .map(|&mu| MixtureSpec::equal_normals(&[mu], 1.0))
        .collect::<Result<_>>()?;
    specs.push(MixtureSpec::equal_normals(&modes, 1.0)?);
    let mut sizes = vec![n; m - 1];
    sizes.push(n * (m - 1));
    sample_groups(specs, &sizes, seed)
}

pub fn seven_mix_specs() -> Result<Vec<MixtureSpec>> {
    let g11 = MixtureSpec::new(vec![
        (2.0 / 7.0, normal(-8.0, 0.25)),
        (3.0 / 7.0, normal(1.0, 0.5)),
        (2.0 / 7.0, normal(10.0, 1.0)),
    ])?;
    let g12 = MixtureSpec::new(vec![
        (1.0 / 7.0, normal(-10.0, 0.5)),
        (3.0 / 7.0, normal(-3.0, 0.75)),
        (1.0 / 7.0, normal(3.0, 0.25)),
        (2.0 / 7.0, normal(7.0, 0.25)),
    ])?;
    let g21 = MixtureSpec::new(vec![
        (2.0 / 8.0, normal(-10.0, 0.5)),
        (3.0 / 8.0, normal(-3.0, 0.75)),
        (2.0 / 8.0, normal(3.0, 0.25)),
        (1.0 / 8.0, normal(7.0, 0.25)),
    ])?;
    let g22 = MixtureSpec::new(vec![
        (1.0 / 3.0, normal(-6.0, 0.5)),
        (1.0 / 3.0, normal(-1.0, 0.25)),
        (1.0 / 3.0, normal(5.0, 0.5)),
    ])?;
    Ok(vec![
        MixtureSpec::blend(&[(0.5, &g11), (0.5, &g12)])?,
        MixtureSpec::blend(&[(4.0 / 7.0, &g21), (3.0 / 7.0, &g22)])?,
    ])
}

pub fn gen_seven_mix(seed: u64) -> Result<GroupedDataset> {
    sample_groups(seven_mix_specs()?, &[200, 200], seed)
}

pub fn seven_mix_hyper() -> BaseMeasureHyper {
    BaseMeasureHyper::new(0.0, 1e-3, 1.0, 1e-2).expect("valid preset")
}

pub fn gamma_mix_specs() -> Result<Vec<MixtureSpec>> {
    let g11 = MixtureSpec::new(vec![(2.0 / 3.0, gamma(2.0, 1.1)), (1.0 / 3.0, gamma(80.0, 2.0))])?;
    let g12 = MixtureSpec::new(vec![
        (8.0 / 14.0, gamma(10.0, 0.9)),
        (6.0 / 14.0, gamma(200.0, 8.1)),
    ])?;
    let g22 = MixtureSpec::new(vec![(2.0 / 3.0, gamma(105.0, 3.0)), (1.0 / 3.0, gamma(500.0, 10.0))])?;
    Ok(vec![
        MixtureSpec::blend(&[(0.4, &g11), (0.6, &g12)])?,
        MixtureSpec::blend(&[(0.7, &g12), (0.3, &g22)])?,
    ])
}

/// Selection matrix that generated [`gen_gamma_mix`].
pub const GAMMA_MIX_P_TRUE: [[f64; 2]; 2] = [[0.4, 0.6], [0.7, 0.3]];

pub const GAMMA_MIX_KERNEL: KernelKind = KernelKind::LogNormal;

pub fn gen_gamma_mix(seed: u64) -> Result<GroupedDataset> {
    sample_groups(gamma_mix_specs()?, &[160, 160], seed)
}

/// Base-measure preset centred at the pooled mean of the log data.
pub fn gamma_mix_hyper(data: &GroupedDataset) -> Result<BaseMeasureHyper> {
    data.validate_for_fit(true)?;
    let n = data.pooled().count() as f64;
    let s_bar = data.pooled().map(f64::ln).sum::<f64>() / n;
    BaseMeasureHyper::new(s_bar, 0.5, 2.0, 0.01)
}

pub fn borrowing_specs(scenario: u8) -> Result<Vec<MixtureSpec>> {
    let q = match scenario {
        1 => 0.0,
        2 => 0.5,
        3 => 1.0,
        _ => return Err(Error::param(format!("borrowing scenario must be 1, 2 or 3, got {scenario}"))),
    };
    let f = MixtureSpec::new(vec![
        (0.3, normal(-10.0, 1.0)),
        (0.2, normal(-6.0, 1.0)),
        (0.2, normal(6.0, 1.0)),
        (0.3, normal(10.0, 1.0)),
    ])?;
    let g1 = MixtureSpec::equal_normals(&[-4.0, 4.0], 1.0)?;
    let g2 = MixtureSpec::equal_normals(&[-12.0, 12.0], 1.0)?;
    Ok(vec![
        MixtureSpec::blend(&[(1.0 - q, &f), (q, &g1)])?,
        f.clone(),
        MixtureSpec::blend(&[(1.0 - q, &f), (q, &g2)])?,
    ])
}

pub fn gen_borrowing(scenario: u8, seed: u64) -> Result<GroupedDataset> {
    sample_groups(borrowing_specs(scenario)?, &[200, 50, 200], seed)
}
