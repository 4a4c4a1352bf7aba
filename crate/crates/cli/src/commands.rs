//! Subcommand pipelines. Chains run on a rayon pool limited to `jobs`
//! threads; report assembly happens afterwards on the calling thread in a
//! fixed order, so outputs do not depend on scheduling.

use std::fmt::Write as _;
use std::path::PathBuf;

use anyhow::{Context, Result};
use rayon::prelude::*;

use pairmix::experiments::generators::{gen_nested, gen_sparse_scalable};
use pairmix::experiments::{
    benchmark_met, fit, hellinger_grids, BenchConfig, BenchResult, DensityGrid, FitOptions, FitResult,
    GroupedDataset, ModelSpec, SamplerKind,
};

use crate::config::{fit_options, load_data, model_spec, LoadedData, RunConfig, Workload};
use crate::svg::{line_chart, Series};

pub const VERSION: &str = env!("PAIRMIX_VERSION");

/// Output directory plus the settings every writer needs.
pub struct Output {
    dir: PathBuf,
    deterministic: bool,
    header: String,
}

impl Output {
    pub fn create(cfg: &RunConfig, command: &str) -> Result<Self> {
        std::fs::create_dir_all(&cfg.out).with_context(|| format!("cannot create {}", cfg.out.display()))?;
        let header = format!("# pairmix {VERSION}\n# command: {command}\n");
        let out = Self {
            dir: cfg.out.clone(),
            deterministic: cfg.deterministic,
            header,
        };
        out.write("config.toml", &format!("{}{}", out.header, cfg.echo()))?;
        Ok(out)
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn write(&self, name: &str, contents: &str) -> Result<()> {
        let p = self.path(name);
        std::fs::write(&p, contents).with_context(|| format!("cannot write {}", p.display()))
    }

    /// A text report that starts with the version and resolved config.
    pub fn report(&self, name: &str, cfg: &RunConfig, body: &str) -> Result<()> {
        let text = format!("{}\n[resolved config]\n{}\n{body}", self.header, cfg.echo());
        self.write(name, &text)
    }

    pub fn csv(&self, name: &str, header: &[String], rows: &[Vec<String>]) -> Result<()> {
        let mut text = header.join(",");
        text.push('\n');
        for r in rows {
            text.push_str(&r.join(","));
            text.push('\n');
        }
        self.write(name, &text)
    }

    pub fn density(&self, name: &str, grid: &DensityGrid, prefix: &str) -> Result<()> {
        let p = self.path(name);
        let f = std::fs::File::create(&p).with_context(|| format!("cannot write {}", p.display()))?;
        grid.write_csv(std::io::BufWriter::new(f), prefix)?;
        Ok(())
    }

    fn svg(&self, name: &str, title: &str, x_label: &str, y_label: &str, series: &[Series]) -> Result<()> {
        self.write(name, &line_chart(title, x_label, y_label, series, self.deterministic))
    }
}

fn num(v: f64) -> String {
    format!("{v}")
}

fn pool(jobs: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .context("cannot start worker threads")
}

pub struct FitJob<'a> {
    pub kind: SamplerKind,
    pub spec: &'a ModelSpec,
    pub data: &'a GroupedDataset,
    pub opts: &'a FitOptions,
    pub seed: u64,
}

/// Run independent chains concurrently; results keep the job order.
pub fn run_fits(jobs: &[FitJob<'_>], threads: usize) -> Result<Vec<FitResult>> {
    let results = pool(threads)?.install(|| {
        jobs.par_iter()
            .map(|j| fit(j.kind, j.spec, j.data, j.opts, j.seed))
            .collect::<Vec<_>>()
    });
    results.into_iter().map(|r| r.map_err(Into::into)).collect()
}

fn truth_grid(data: &GroupedDataset, opts: &FitOptions) -> Option<DensityGrid> {
    match (&data.truth, opts.grid) {
        (Some(t), Some(g)) => Some(DensityGrid::from_truth(g, t)),
        _ => None,
    }
}

/// The curve shown for a fit: the KDE when requested, else the
/// Rao-Blackwellized predictive.
fn shown(r: &FitResult) -> Option<&DensityGrid> {
    r.kde.as_ref().or(r.predictive.as_ref())
}

fn matrix_block(title: &str, rows: &[Vec<f64>]) -> Vec<String> {
    let mut lines = vec![title.to_string()];
    for r in rows {
        let cells: Vec<String> = r.iter().map(|v| format!("{v:.3}")).collect();
        lines.push(cells.join(" "));
    }
    lines
}

/// Print matrices next to each other, padded to equal column widths.
fn side_by_side(blocks: &[Vec<String>]) -> String {
    let widths: Vec<usize> = blocks
        .iter()
        .map(|b| b.iter().map(|l| l.chars().count()).max().unwrap_or(0))
        .collect();
    let height = blocks.iter().map(Vec::len).max().unwrap_or(0);
    let mut out = String::new();
    for i in 0..height {
        let cells: Vec<String> = blocks
            .iter()
            .zip(&widths)
            .map(|(b, &w)| format!("{:<w$}", b.get(i).map(String::as_str).unwrap_or("")))
            .collect();
        out.push_str(cells.join("    ").trim_end());
        out.push('\n');
    }
    out
}

fn pair_summary(r: &FitResult, m: usize) -> String {
    let name = if r.sampler == SamplerKind::Pdgsbp { "lambda" } else { "c" };
    let mut parts = Vec::new();
    let mut i = 0;
    for j in 1..=m {
        for l in j..=m {
            parts.push(format!("{name}_{j}{l}={:.3}", r.pair_parameter_mean[i]));
            i += 1;
        }
    }
    format!("{} posterior means: {}\n", r.sampler.name(), parts.join(" "))
}

/// Write traces, densities, Hellinger table and plots for a set of fits on
/// one dataset, and return the report body.
fn emit_fits(
    out: &Output,
    cfg: &RunConfig,
    label: &str,
    data: &LoadedData,
    opts: &FitOptions,
    results: &[FitResult],
) -> Result<(String, Option<Vec<Vec<f64>>>)> {
    let m = data.dataset.m();
    let mut body = String::new();
    let _ = writeln!(body, "[{label}] groups {m}, sizes {:?}", data.dataset.sizes());
    for r in results {
        let s = r.sampler.name();
        r.trace
            .save_csv(&out.path(&format!("{label}_trace_{s}.csv")), !cfg.deterministic)?;
        if let Some(p) = &r.predictive {
            out.density(&format!("{label}_density_{s}.csv"), p, "f")?;
        }
        if let Some(k) = &r.kde {
            out.density(&format!("{label}_kde_{s}.csv"), k, "kde")?;
        }
        body.push_str(&pair_summary(r, m));
    }

    let mut blocks: Vec<Vec<String>> = results
        .iter()
        .map(|r| matrix_block(&format!("E_{}(p | x)", r.sampler.name()), &r.selection_mean))
        .collect();
    if let Some(pt) = &data.p_true {
        blocks.push(matrix_block("p_true", pt));
    }
    body.push_str(&side_by_side(&blocks));

    let truth = truth_grid(&data.dataset, opts);
    if let Some(t) = &truth {
        out.density(&format!("{label}_density_true.csv"), t, "f")?;
    }
    let mut hellinger = None;
    if let Some(t) = &truth {
        let hs: Vec<Vec<f64>> = results
            .iter()
            .map(|r| hellinger_grids(r.predictive.as_ref().expect("grid set"), t))
            .collect::<pairmix::Result<_>>()?;
        let mut header = vec!["group".to_string()];
        header.extend(results.iter().map(|r| format!("h_{}", r.sampler.name())));
        let rows: Vec<Vec<String>> = (0..m)
            .map(|j| {
                let mut row = vec![(j + 1).to_string()];
                row.extend(hs.iter().map(|h| num(h[j])));
                row
            })
            .collect();
        out.csv(&format!("{label}_hellinger.csv"), &header, &rows)?;
        let _ = writeln!(body, "hellinger distances (group, {}):", header[1..].join(", "));
        for row in &rows {
            let _ = writeln!(body, "  {}", row.join("  "));
        }
        hellinger = Some((0..m).map(|j| hs.iter().map(|h| h[j]).collect()).collect());
    }

    for j in 0..m {
        let mut series = Vec::new();
        if let Some(t) = &truth {
            series.push(Series {
                label: "true".into(),
                xs: t.grid.points(),
                ys: t.values[j].clone(),
                dashed: false,
            });
        }
        for (i, r) in results.iter().enumerate() {
            if let Some(g) = shown(r) {
                series.push(Series {
                    label: r.sampler.name().into(),
                    xs: g.grid.points(),
                    ys: g.values[j].clone(),
                    dashed: i % 2 == 1,
                });
            }
        }
        out.svg(
            &format!("{label}_group{}.svg", j + 1),
            &format!("{label}: group {}", j + 1),
            "x",
            "density",
            &series,
        )?;
    }
    Ok((body, hellinger))
}

pub fn cmd_generate(cfg: &RunConfig) -> Result<()> {
    let out = Output::create(cfg, "generate")?;
    let data = load_data(cfg)?;
    data.dataset.write_csv(&out.path("data.csv"))?;
    let mut body = format!("groups {}, sizes {:?}\n", data.dataset.m(), data.dataset.sizes());
    if data.dataset.truth.is_some() {
        let opts = fit_options(cfg, &data.dataset)?;
        if let Some(t) = truth_grid(&data.dataset, &opts) {
            out.density("density_true.csv", &t, "f")?;
            body.push_str("true densities written to density_true.csv\n");
        }
    }
    out.report("report.txt", cfg, &body)?;
    println!("{}", out.path("data.csv").display());
    Ok(())
}

pub fn cmd_fit(cfg: &RunConfig) -> Result<()> {
    let out = Output::create(cfg, "fit")?;
    let data = load_data(cfg)?;
    let spec = model_spec(cfg, &data.dataset)?;
    let opts = fit_options(cfg, &data.dataset)?;
    let job = FitJob {
        kind: cfg.sampler.kind(),
        spec: &spec,
        data: &data.dataset,
        opts: &opts,
        seed: cfg.seed(),
    };
    let results = run_fits(&[job], cfg.jobs)?;
    let (body, _) = emit_fits(&out, cfg, "fit", &data, &opts, &results)?;
    out.report("report.txt", cfg, &body)?;
    print!("{body}");
    Ok(())
}

/// Both samplers on one dataset, side by side.
pub fn compare_on(out: &Output, cfg: &RunConfig, label: &str, data: &LoadedData) -> Result<(String, Option<Vec<Vec<f64>>>)> {
    let spec = model_spec(cfg, &data.dataset)?;
    let opts = fit_options(cfg, &data.dataset)?;
    let jobs: Vec<FitJob> = [SamplerKind::Pdgsbp, SamplerKind::Rpddp]
        .into_iter()
        .map(|kind| FitJob {
            kind,
            spec: &spec,
            data: &data.dataset,
            opts: &opts,
            seed: cfg.seed(),
        })
        .collect();
    let results = run_fits(&jobs, cfg.jobs)?;
    emit_fits(out, cfg, label, data, &opts, &results)
}

pub fn cmd_compare(cfg: &RunConfig) -> Result<()> {
    let out = Output::create(cfg, "compare")?;
    let data = load_data(cfg)?;
    let (body, _) = compare_on(&out, cfg, "compare", &data)?;
    out.report("report.txt", cfg, &body)?;
    print!("{body}");
    Ok(())
}

pub fn bench_dataset(cfg: &RunConfig, m: usize) -> Result<GroupedDataset> {
    let seed = cfg.data_seed();
    Ok(match cfg.bench.workload {
        Workload::Nested => gen_nested(m, cfg.data.n, seed)?,
        Workload::Sparse => gen_sparse_scalable(m, cfg.data.n.unwrap_or(20), cfg.data.xi, seed)?,
    })
}

/// Timed runs are sequential whatever `jobs` says, so they do not compete
/// for cores.
pub fn bench_into(out: &Output, cfg: &RunConfig, label: &str) -> Result<String> {
    let bc = BenchConfig {
        block_iterations: cfg.bench.block_iterations,
        blocks: cfg.bench.blocks,
    };
    let mut rows = Vec::new();
    let mut results: Vec<(usize, BenchResult, BenchResult)> = Vec::new();
    for &m in &cfg.bench.m {
        let data = bench_dataset(cfg, m)?;
        let spec = model_spec(cfg, &data)?;
        let g = benchmark_met(SamplerKind::Pdgsbp, &spec, &data, &bc, cfg.seed())?;
        let d = benchmark_met(SamplerKind::Rpddp, &spec, &data, &bc, cfg.seed())?;
        rows.push(vec![
            m.to_string(),
            data.pooled().count().to_string(),
            num(g.met),
            num(g.met_se),
            num(d.met),
            num(d.met_se),
            num(d.met / g.met),
            num(g.comparisons_per_sweep()),
            num(d.comparisons_per_sweep()),
            num(d.comparisons_per_sweep() / g.comparisons_per_sweep()),
            num(g.kernel_evals_per_sweep()),
            num(d.kernel_evals_per_sweep()),
        ]);
        results.push((m, g, d));
    }
    let header: Vec<String> = [
        "m",
        "n_total",
        "met_pdgsbp",
        "met_se_pdgsbp",
        "met_rpddp",
        "met_se_rpddp",
        "met_ratio",
        "comparisons_pdgsbp",
        "comparisons_rpddp",
        "comparison_ratio",
        "kernel_evals_pdgsbp",
        "kernel_evals_rpddp",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    out.csv(&format!("{label}_met.csv"), &header, &rows)?;

    let ms: Vec<f64> = results.iter().map(|r| r.0 as f64).collect();
    let series = vec![
        Series {
            label: "pdgsbp".into(),
            xs: ms.clone(),
            ys: results.iter().map(|r| r.1.met).collect(),
            dashed: false,
        },
        Series {
            label: "rpddp".into(),
            xs: ms,
            ys: results.iter().map(|r| r.2.met).collect(),
            dashed: true,
        },
    ];
    out.svg(
        &format!("{label}_met.svg"),
        "mean execution time per 1000 sweeps",
        "m",
        "seconds",
        &series,
    )?;

    let mut body = format!("[{label}] mean execution time in seconds per 1000 sweeps (timings vary by machine)\n");
    let _ = writeln!(body, "  m  pdgsbp    rpddp     ratio  comparisons ratio");
    for (m, g, d) in &results {
        let _ = writeln!(
            body,
            "  {m}  {:<8.4}  {:<8.4}  {:<5.2}  {:.2}",
            g.met,
            d.met,
            d.met / g.met,
            d.comparisons_per_sweep() / g.comparisons_per_sweep()
        );
    }
    Ok(body)
}

pub fn cmd_bench(cfg: &RunConfig) -> Result<()> {
    let out = Output::create(cfg, "bench")?;
    let body = bench_into(&out, cfg, "bench")?;
    out.report("report.txt", cfg, &body)?;
    print!("{body}");
    Ok(())
}
