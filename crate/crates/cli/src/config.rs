//! Run configuration: one TOML tree with built-in defaults, optionally
//! layered over an experiment preset, then overridden by command-line flags.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};

use pairmix::distributions::{BaseMeasureHyper, KernelKind};
use pairmix::experiments::generators::{
    gamma_mix_hyper, gen_borrowing, gen_gamma_mix, gen_nested, gen_seven_mix, gen_sparse_scalable,
    seven_mix_hyper, GAMMA_MIX_P_TRUE,
};
use pairmix::experiments::{
    load_pbcseq, pbc_dirichlet_alpha, FitOptions, GridSpec, GroupedDataset, ModelSpec, PbcLayout,
    SamplerKind,
};
use pairmix::model::TailMode;
use pairmix::pdgsbp::LambdaPrior;
use pairmix::rpddp::WestCount;
use pairmix::ChainConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Master seed; required, there is no entropy fallback.
    pub seed: Option<u64>,
    pub sampler: SamplerSetting,
    pub out: PathBuf,
    pub jobs: usize,
    pub deterministic: bool,
    pub chain: ChainSection,
    pub prior: PriorSection,
    pub data: DataSection,
    pub grid: GridSection,
    pub bench: BenchSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: None,
            sampler: SamplerSetting::Pdgsbp,
            out: PathBuf::from("pairmix-out"),
            jobs: 1,
            deterministic: false,
            chain: ChainSection::default(),
            prior: PriorSection::default(),
            data: DataSection::default(),
            grid: GridSection::default(),
            bench: BenchSection::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplerSetting {
    Pdgsbp,
    Rpddp,
}

impl SamplerSetting {
    pub fn kind(self) -> SamplerKind {
        match self {
            SamplerSetting::Pdgsbp => SamplerKind::Pdgsbp,
            SamplerSetting::Rpddp => SamplerKind::Rpddp,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChainSection {
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
}

impl Default for ChainSection {
    fn default() -> Self {
        Self {
            iterations: 20_000,
            burn_in: 5_000,
            thin: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelSetting {
    /// Log-normal for the gamma-mixture generator, normal otherwise.
    Auto,
    Normal,
    Lognormal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum HyperSetting {
    /// `auto`, `vague`, `seven-mix` or `gamma-mix`.
    Preset(String),
    Values { mu0: f64, tau0: f64, eps1: f64, eps2: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LambdaKind {
    Tg,
    Beta,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WestSetting {
    Allocated,
    GroupSizes,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PriorSection {
    pub kernel: KernelSetting,
    pub hyper: HyperSetting,
    pub lambda: LambdaKind,
    /// Shape and rate of the λ prior (beta or transformed gamma).
    pub a: f64,
    pub b: f64,
    pub conc_shape: f64,
    pub conc_rate: f64,
    /// Dirichlet parameters, one row per group; all ones when absent.
    pub alpha: Option<Vec<Vec<f64>>>,
    pub west_count: WestSetting,
}

impl Default for PriorSection {
    fn default() -> Self {
        Self {
            kernel: KernelSetting::Auto,
            hyper: HyperSetting::Preset("auto".into()),
            lambda: LambdaKind::Tg,
            a: 1.1,
            b: 1.1,
            conc_shape: 1.1,
            conc_rate: 1.1,
            alpha: None,
            west_count: WestSetting::Allocated,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DataSource {
    Nested,
    Sparse,
    SevenMix,
    GammaMix,
    Borrowing,
    /// `group,value` CSV written by `generate`.
    File,
    Pbcseq,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataSection {
    pub source: DataSource,
    pub m: usize,
    /// Per-group (nested) or per-mode (sparse) sample size override.
    pub n: Option<usize>,
    pub xi: f64,
    pub scenario: u8,
    pub path: Option<PathBuf>,
    /// Seed of the generator; defaults to the master seed.
    pub seed: Option<u64>,
}

impl Default for DataSection {
    fn default() -> Self {
        Self {
            source: DataSource::Nested,
            m: 4,
            n: None,
            xi: 10.0,
            scenario: 1,
            path: None,
            seed: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TailSetting {
    Prior,
    Truncate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub points: usize,
    pub density_thin: usize,
    pub tail: TailSetting,
    pub kde: bool,
}

impl Default for GridSection {
    fn default() -> Self {
        Self {
            points: 4096,
            density_thin: 10,
            tail: TailSetting::Prior,
            kde: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Workload {
    Nested,
    Sparse,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchSection {
    pub block_iterations: usize,
    pub blocks: usize,
    pub m: Vec<usize>,
    pub workload: Workload,
}

impl Default for BenchSection {
    fn default() -> Self {
        Self {
            block_iterations: 200,
            blocks: 10,
            m: vec![2, 3, 4],
            workload: Workload::Nested,
        }
    }
}

/// Flags that override file values.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub jobs: Option<usize>,
    pub deterministic: bool,
    pub kde: bool,
    pub sampler: Option<SamplerSetting>,
}

fn merge(base: &mut toml::Table, over: toml::Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

/// Layer `file` over `base`, then apply `flags`, then validate.
pub fn resolve(base: RunConfig, file: Option<&Path>, flags: &Overrides) -> Result<RunConfig> {
    let mut cfg = base;
    if let Some(path) = file {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
        // Parse once on its own so errors carry file positions and key names.
        toml::from_str::<RunConfig>(&text).map_err(|e| anyhow!("config {}: {e}", path.display()))?;
        let over: toml::Table = toml::from_str(&text).map_err(|e| anyhow!("config {}: {e}", path.display()))?;
        let mut table = toml::Table::try_from(&cfg).context("serializing base config")?;
        merge(&mut table, over);
        cfg = table
            .try_into()
            .map_err(|e| anyhow!("config {}: {e}", path.display()))?;
    }
    if let Some(s) = flags.seed {
        cfg.seed = Some(s);
    }
    if let Some(o) = &flags.out {
        cfg.out = o.clone();
    }
    if let Some(j) = flags.jobs {
        cfg.jobs = j;
    }
    if flags.deterministic {
        cfg.deterministic = true;
    }
    if flags.kde {
        cfg.grid.kde = true;
    }
    if let Some(s) = flags.sampler {
        cfg.sampler = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

impl RunConfig {
    pub fn seed(&self) -> u64 {
        self.seed.expect("validated")
    }

    pub fn data_seed(&self) -> u64 {
        self.data.seed.unwrap_or(self.seed())
    }

    pub fn validate(&self) -> Result<()> {
        if self.seed.is_none() {
            bail!("seed: required (set `seed` in the config file or pass --seed)");
        }
        if self.jobs == 0 {
            bail!("jobs: must be at least 1");
        }
        let c = &self.chain;
        if c.iterations == 0 {
            bail!("chain.iterations: must be at least 1");
        }
        if c.iterations <= c.burn_in {
            bail!(
                "chain.iterations: must exceed chain.burn_in (iterations = {}, burn_in = {})",
                c.iterations,
                c.burn_in
            );
        }
        if c.thin == 0 {
            bail!("chain.thin: must be at least 1");
        }
        let p = &self.prior;
        for (name, v) in [("a", p.a), ("b", p.b), ("conc_shape", p.conc_shape), ("conc_rate", p.conc_rate)] {
            if !(v > 0.0 && v.is_finite()) {
                bail!("prior.{name}: must be positive and finite, got {v}");
            }
        }
        if p.lambda == LambdaKind::Tg && p.a <= 1.0 {
            bail!("prior.a: must exceed 1 with the transformed gamma lambda prior, got {}", p.a);
        }
        if p.conc_shape <= 1.0 {
            bail!("prior.conc_shape: must exceed 1 for the concentration update, got {}", p.conc_shape);
        }
        if let HyperSetting::Preset(name) = &p.hyper {
            if !["auto", "vague", "seven-mix", "gamma-mix"].contains(&name.as_str()) {
                bail!("prior.hyper: unknown preset {name:?} (expected auto, vague, seven-mix, gamma-mix or a table)");
            }
        }
        if let HyperSetting::Values { mu0, tau0, eps1, eps2 } = p.hyper {
            BaseMeasureHyper::new(mu0, tau0, eps1, eps2).map_err(|e| anyhow!("prior.hyper: {e}"))?;
        }
        if let Some(rows) = &p.alpha {
            for (j, row) in rows.iter().enumerate() {
                if row.len() != rows.len() {
                    bail!("prior.alpha: row {} has {} entries, expected {}", j + 1, row.len(), rows.len());
                }
                if let Some(v) = row.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
                    bail!("prior.alpha: row {} has a non-positive entry {v}", j + 1);
                }
            }
        }
        let d = &self.data;
        match d.source {
            DataSource::Nested if !(1..=4).contains(&d.m) => bail!("data.m: nested data needs m in 1..=4, got {}", d.m),
            DataSource::Sparse if d.m < 2 => bail!("data.m: sparse data needs m >= 2, got {}", d.m),
            DataSource::Borrowing if !(1..=3).contains(&d.scenario) => {
                bail!("data.scenario: must be 1, 2 or 3, got {}", d.scenario)
            }
            DataSource::File | DataSource::Pbcseq if d.path.is_none() => {
                bail!("data.path: required for source {:?}", d.source)
            }
            _ => {}
        }
        if d.n == Some(0) {
            bail!("data.n: must be at least 1");
        }
        if !(d.xi.is_finite() && d.xi > 0.0) {
            bail!("data.xi: must be positive, got {}", d.xi);
        }
        let g = &self.grid;
        if g.points < 2 {
            bail!("grid.points: must be at least 2, got {}", g.points);
        }
        if g.density_thin == 0 {
            bail!("grid.density_thin: must be at least 1");
        }
        let b = &self.bench;
        if b.block_iterations == 0 {
            bail!("bench.block_iterations: must be at least 1");
        }
        if b.blocks < 10 {
            bail!("bench.blocks: at least 10 timed blocks are needed, got {}", b.blocks);
        }
        if b.m.is_empty() {
            bail!("bench.m: list at least one group count");
        }
        for &m in &b.m {
            let ok = match b.workload {
                Workload::Nested => (1..=4).contains(&m),
                Workload::Sparse => m >= 2,
            };
            if !ok {
                bail!("bench.m: {m} is not valid for the {:?} workload", b.workload);
            }
        }
        Ok(())
    }

    pub fn kernel(&self) -> KernelKind {
        match self.prior.kernel {
            KernelSetting::Normal => KernelKind::Normal,
            KernelSetting::Lognormal => KernelKind::LogNormal,
            KernelSetting::Auto => match self.data.source {
                DataSource::GammaMix => KernelKind::LogNormal,
                _ => KernelKind::Normal,
            },
        }
    }

    /// Echo of the resolved configuration, as TOML.
    pub fn echo(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

/// A dataset with its known selection matrix, if any.
pub struct LoadedData {
    pub dataset: GroupedDataset,
    pub p_true: Option<Vec<Vec<f64>>>,
}

pub fn load_data(cfg: &RunConfig) -> Result<LoadedData> {
    let d = &cfg.data;
    let seed = cfg.data_seed();
    let mut p_true = None;
    let dataset = match d.source {
        DataSource::Nested => gen_nested(d.m, d.n, seed)?,
        DataSource::Sparse => gen_sparse_scalable(d.m, d.n.unwrap_or(20), d.xi, seed)?,
        DataSource::SevenMix => gen_seven_mix(seed)?,
        DataSource::GammaMix => {
            p_true = Some(GAMMA_MIX_P_TRUE.iter().map(|r| r.to_vec()).collect());
            gen_gamma_mix(seed)?
        }
        DataSource::Borrowing => gen_borrowing(d.scenario, seed)?,
        DataSource::File => {
            let path = d.path.as_ref().expect("validated");
            GroupedDataset::read_csv(path)?
        }
        DataSource::Pbcseq => {
            let path = d.path.as_ref().expect("validated");
            load_pbcseq(path, &PbcLayout::default())?.dataset
        }
    };
    Ok(LoadedData { dataset, p_true })
}

pub fn model_spec(cfg: &RunConfig, data: &GroupedDataset) -> Result<ModelSpec> {
    let kernel = cfg.kernel();
    let p = &cfg.prior;
    let hyper = match &p.hyper {
        HyperSetting::Values { mu0, tau0, eps1, eps2 } => BaseMeasureHyper::new(*mu0, *tau0, *eps1, *eps2)?,
        HyperSetting::Preset(name) => match (name.as_str(), cfg.data.source) {
            ("vague", _) => BaseMeasureHyper::VAGUE,
            ("seven-mix", _) => seven_mix_hyper(),
            ("gamma-mix", _) | ("auto", DataSource::GammaMix) => gamma_mix_hyper(data)?,
            ("auto", DataSource::SevenMix | DataSource::Borrowing) => seven_mix_hyper(),
            _ => BaseMeasureHyper::VAGUE,
        },
    };
    let mut spec = ModelSpec::new(kernel, hyper);
    let m = data.m();
    spec.dirichlet_alpha = match &p.alpha {
        Some(rows) => {
            if rows.len() != m {
                bail!("prior.alpha: has {} rows but the data have {m} groups", rows.len());
            }
            Some(rows.concat())
        }
        None if cfg.data.source == DataSource::Pbcseq && m == 3 => Some(pbc_dirichlet_alpha()),
        None => None,
    };
    spec.lambda_prior = match p.lambda {
        LambdaKind::Tg => LambdaPrior::TransformedGamma { a: p.a, b: p.b },
        LambdaKind::Beta => LambdaPrior::Beta { a: p.a, b: p.b },
    };
    spec.conc_shape = p.conc_shape;
    spec.conc_rate = p.conc_rate;
    spec.west_count = match p.west_count {
        WestSetting::Allocated => WestCount::Allocated,
        WestSetting::GroupSizes => WestCount::GroupSizes,
    };
    Ok(spec)
}

pub fn fit_options(cfg: &RunConfig, data: &GroupedDataset) -> Result<FitOptions> {
    let mut chain = ChainConfig::new(cfg.chain.iterations, cfg.chain.burn_in);
    chain.thin = cfg.chain.thin;
    let mut o = FitOptions::new(chain);
    o.grid = Some(GridSpec::for_data(data, cfg.kernel(), cfg.grid.points)?);
    o.density_thin = cfg.grid.density_thin;
    o.kde = cfg.grid.kde;
    o.tail = match cfg.grid.tail {
        TailSetting::Prior => TailMode::PriorPredictive,
        TailSetting::Truncate => TailMode::Truncate,
    };
    Ok(o)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(text: &str) -> tempfile::NamedTempFile {
        let f = tempfile::NamedTempFile::new().unwrap();
        std::fs::write(f.path(), text).unwrap();
        f
    }

    #[test]
    fn file_overrides_preset_and_flags_override_file() {
        let mut preset = RunConfig::default();
        preset.data.source = DataSource::GammaMix;
        preset.chain.burn_in = 7;
        let f = write("seed = 3\n[chain]\niterations = 50\n");
        let flags = Overrides {
            seed: Some(9),
            ..Overrides::default()
        };
        let cfg = resolve(preset, Some(f.path()), &flags).unwrap();
        assert_eq!(cfg.seed, Some(9));
        assert_eq!(cfg.chain.iterations, 50);
        assert_eq!(cfg.chain.burn_in, 7);
        assert_eq!(cfg.data.source, DataSource::GammaMix);
        assert_eq!(cfg.kernel(), KernelKind::LogNormal);
    }

    #[test]
    fn errors_name_the_field() {
        let flags = Overrides {
            seed: Some(1),
            ..Overrides::default()
        };
        let f = write("[chain]\niterations = 10\nburn_in = 10\n");
        let e = resolve(RunConfig::default(), Some(f.path()), &flags).unwrap_err().to_string();
        assert!(e.contains("chain.iterations"), "{e}");

        let f = write("[chain]\nitertions = 10\n");
        let e = resolve(RunConfig::default(), Some(f.path()), &flags).unwrap_err().to_string();
        assert!(e.contains("itertions"), "{e}");

        let f = write("[prior]\nlambda = \"tg\"\na = 0.5\n");
        let e = resolve(RunConfig::default(), Some(f.path()), &flags).unwrap_err().to_string();
        assert!(e.contains("prior.a"), "{e}");

        let e = resolve(RunConfig::default(), None, &Overrides::default()).unwrap_err().to_string();
        assert!(e.contains("seed"), "{e}");
    }

    #[test]
    fn hyper_table_and_echo_round_trip() {
        let f = write("seed = 2\n[prior]\nhyper = { mu0 = 1.0, tau0 = 0.5, eps1 = 2.0, eps2 = 0.1 }\n");
        let cfg = resolve(RunConfig::default(), Some(f.path()), &Overrides::default()).unwrap();
        let back: RunConfig = toml::from_str(&cfg.echo()).unwrap();
        assert_eq!(back, cfg);
        let data = load_data(&cfg).unwrap();
        let spec = model_spec(&cfg, &data.dataset).unwrap();
        assert_eq!(spec.hyper, BaseMeasureHyper::new(1.0, 0.5, 2.0, 0.1).unwrap());
    }
}
