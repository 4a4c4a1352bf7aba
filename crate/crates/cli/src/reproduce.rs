//! Built-in experiment presets. Each target pins its data source, prior and
//! seed; a config file may still override any field (chain length, say).

use std::fmt::Write as _;

use anyhow::Result;
use clap::ValueEnum;

use pairmix::experiments::{hellinger_grids, median, DensityGrid, SamplerKind};

use crate::commands::{bench_into, compare_on, run_fits, FitJob, Output};
use crate::svg::{line_chart, Series};
use crate::config::{fit_options, load_data, model_spec, DataSource, HyperSetting, RunConfig, Workload};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Target {
    /// Hellinger distances, four nested groups.
    Table1,
    /// Execution times on the nested workloads, m = 2, 3, 4.
    Table2,
    /// Hellinger distances, sparse scalable data with m = 10.
    Table3,
    /// Hellinger distances, the two 7-mixtures.
    Table4,
    /// Hellinger distances and selection matrices, gamma mixtures.
    Table5,
    /// Borrowing of strength over three scenarios and five seeds.
    Table6,
    /// Predictive KDEs, four nested groups.
    Fig2,
    /// Execution time against m on sparse scalable data, m = 2..10.
    Fig3,
    /// Predictive KDEs, sparse scalable data with m = 10.
    Fig4,
    /// Predictive densities, the two 7-mixtures.
    Fig5,
    /// Predictive KDEs, gamma mixtures.
    Fig6,
    /// Predictive densities for the three borrowing scenarios.
    Fig7,
    /// Predictive KDEs for the pbcseq SGOT data (needs data.path).
    Fig8,
}

impl Target {
    pub fn name(self) -> String {
        self.to_possible_value().expect("no skipped variants").get_name().to_string()
    }
}

pub fn preset(target: Target) -> RunConfig {
    let mut c = RunConfig {
        seed: Some(1),
        ..RunConfig::default()
    };
    c.out = format!("pairmix-{}", target.name()).into();
    let d = &mut c.data;
    match target {
        Target::Table1 | Target::Fig2 => {
            d.source = DataSource::Nested;
            d.m = 4;
        }
        Target::Table2 => {
            c.bench.workload = Workload::Nested;
            c.bench.m = vec![2, 3, 4];
        }
        Target::Fig3 => {
            c.bench.workload = Workload::Sparse;
            c.bench.m = (2..=10).collect();
        }
        Target::Table3 | Target::Fig4 => {
            d.source = DataSource::Sparse;
            d.m = 10;
        }
        Target::Table4 | Target::Fig5 => d.source = DataSource::SevenMix,
        Target::Table5 | Target::Fig6 => d.source = DataSource::GammaMix,
        Target::Table6 | Target::Fig7 => d.source = DataSource::Borrowing,
        Target::Fig8 => d.source = DataSource::Pbcseq,
    }
    if matches!(target, Target::Table2 | Target::Fig3) {
        c.prior.hyper = HyperSetting::Preset("vague".into());
    }
    if matches!(target, Target::Fig2 | Target::Fig4 | Target::Fig6 | Target::Fig8) {
        c.grid.kde = true;
    }
    c
}

pub fn run(target: Target, cfg: &RunConfig) -> Result<()> {
    let label = target.name();
    let out = Output::create(cfg, &format!("reproduce {label}"))?;
    let body = match target {
        Target::Table2 | Target::Fig3 => bench_into(&out, cfg, &label)?,
        Target::Table6 => borrowing_table(&out, cfg, &label)?,
        Target::Fig7 => {
            let mut body = String::new();
            for s in 1..=3u8 {
                let mut c = cfg.clone();
                c.data.scenario = s;
                let (b, _) = pdgsbp_only(&out, &c, &format!("{label}_s{s}"))?;
                body.push_str(&b);
            }
            body
        }
        _ => {
            let data = load_data(cfg)?;
            compare_on(&out, cfg, &label, &data)?.0
        }
    };
    out.report("report.txt", cfg, &body)?;
    print!("{body}");
    Ok(())
}

fn pdgsbp_only(out: &Output, cfg: &RunConfig, label: &str) -> Result<(String, Vec<f64>)> {
    let data = load_data(cfg)?;
    let spec = model_spec(cfg, &data.dataset)?;
    let opts = fit_options(cfg, &data.dataset)?;
    let job = FitJob {
        kind: SamplerKind::Pdgsbp,
        spec: &spec,
        data: &data.dataset,
        opts: &opts,
        seed: cfg.seed(),
    };
    let r = run_fits(&[job], cfg.jobs)?.remove(0);
    let pred = r.predictive.as_ref().expect("grid set");
    out.density(&format!("{label}_density_pdgsbp.csv"), pred, "f")?;
    let truth = DensityGrid::from_truth(pred.grid, data.dataset.truth.as_ref().expect("generated data"));
    let h = hellinger_grids(pred, &truth)?;
    let mut body = format!("[{label}] hellinger {}\n", fmt(&h));
    for row in &r.selection_mean {
        let _ = writeln!(body, "  p row {}", fmt(row));
    }
    let series: Vec<Series> = (0..data.dataset.m())
        .flat_map(|j| {
            [
                Series {
                    label: format!("true {}", j + 1),
                    xs: truth.grid.points(),
                    ys: truth.values[j].clone(),
                    dashed: true,
                },
                Series {
                    label: format!("pdgsbp {}", j + 1),
                    xs: pred.grid.points(),
                    ys: pred.values[j].clone(),
                    dashed: false,
                },
            ]
        })
        .collect();
    out.write(
        &format!("{label}.svg"),
        &line_chart(label, "x", "density", &series, cfg.deterministic),
    )?;
    Ok((body, h))
}

fn fmt(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.3}")).collect();
    parts.join(" ")
}

/// PDGSBP on each scenario for five consecutive seeds; the table reports
/// per-run distances and their medians.
fn borrowing_table(out: &Output, cfg: &RunConfig, label: &str) -> Result<String> {
    let base = cfg.seed();
    let mut runs = Vec::new();
    for s in 1..=3u8 {
        for seed in base..base + 5 {
            let mut c = cfg.clone();
            c.data.scenario = s;
            c.seed = Some(seed);
            c.data.seed = Some(seed);
            runs.push(c);
        }
    }
    let prepared = runs
        .iter()
        .map(|c| -> Result<_> {
            let data = load_data(c)?.dataset;
            let spec = model_spec(c, &data)?;
            let opts = fit_options(c, &data)?;
            Ok((data, spec, opts))
        })
        .collect::<Result<Vec<_>>>()?;
    let jobs: Vec<FitJob> = prepared
        .iter()
        .zip(&runs)
        .map(|((data, spec, opts), c)| FitJob {
            kind: SamplerKind::Pdgsbp,
            spec,
            data,
            opts,
            seed: c.seed(),
        })
        .collect();
    let results = run_fits(&jobs, cfg.jobs)?;
    let mut rows = Vec::new();
    let mut by_scenario: Vec<Vec<Vec<f64>>> = vec![Vec::new(); 3];
    for ((r, c), (data, _, _)) in results.iter().zip(&runs).zip(&prepared) {
        let pred = r.predictive.as_ref().expect("grid set");
        let truth = DensityGrid::from_truth(pred.grid, data.truth.as_ref().expect("generated data"));
        let h = hellinger_grids(pred, &truth)?;
        let mut row = vec![c.data.scenario.to_string(), c.seed().to_string()];
        row.extend(h.iter().map(|v| v.to_string()));
        rows.push(row);
        by_scenario[c.data.scenario as usize - 1].push(h);
    }
    let mut body = format!("[{label}] median hellinger distance over seeds {base}..{}\n", base + 4);
    let _ = writeln!(body, "  scenario  group1  group2  group3");
    for (s, hs) in by_scenario.iter().enumerate() {
        let med: Vec<f64> = (0..3)
            .map(|j| median(&hs.iter().map(|h| h[j]).collect::<Vec<_>>()).unwrap_or(f64::NAN))
            .collect();
        let _ = writeln!(body, "  {}         {}", s + 1, fmt(&med));
        let mut row = vec![(s + 1).to_string(), "median".to_string()];
        row.extend(med.iter().map(|v| v.to_string()));
        rows.push(row);
    }
    let header: Vec<String> = ["scenario", "seed", "h_1", "h_2", "h_3"].iter().map(|s| s.to_string()).collect();
    out.csv(&format!("{label}.csv"), &header, &rows)?;
    Ok(body)
}
