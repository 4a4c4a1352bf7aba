use pairmix::distributions::{BaseMeasureHyper, KernelKind};
use pairmix::experiments::generators::{gen_nested, seven_mix_hyper};
use pairmix::experiments::{fit, FitOptions, GridSpec, GroupedDataset, ModelSpec, SamplerKind};
use pairmix::pdgsbp::{self, LambdaPrior, PdgsbpPrior};
use pairmix::rpddp::{self, RpddpPrior, WestCount};
use pairmix::{ChainConfig, SharedPrior};

fn trace_csv(trace: &pairmix::ChainTrace) -> String {
    let mut out = Vec::new();
    trace.write_csv(&mut out, false).unwrap();
    String::from_utf8(out).unwrap()
}

#[test]
fn equal_seeds_give_identical_traces() {
    let data = gen_nested(3, Some(30), 2).unwrap();
    let shared = SharedPrior::new(3, KernelKind::Normal, seven_mix_hyper());
    let cfg = ChainConfig::new(200, 50);
    let gp = PdgsbpPrior {
        shared: shared.clone(),
        lambda: LambdaPrior::Beta { a: 1.1, b: 1.1 },
    };
    let (a, _) = pdgsbp::run(&data.groups, &gp, &cfg, 5).unwrap();
    let (b, _) = pdgsbp::run(&data.groups, &gp, &cfg, 5).unwrap();
    let (c, _) = pdgsbp::run(&data.groups, &gp, &cfg, 6).unwrap();
    assert_eq!(trace_csv(&a), trace_csv(&b));
    assert_ne!(trace_csv(&a), trace_csv(&c));

    let dp = RpddpPrior {
        shared,
        conc_shape: 1.1,
        conc_rate: 1.1,
        west_count: WestCount::default(),
    };
    let (a, _) = rpddp::run(&data.groups, &dp, &cfg, 5).unwrap();
    let (b, _) = rpddp::run(&data.groups, &dp, &cfg, 5).unwrap();
    assert_eq!(trace_csv(&a), trace_csv(&b));
}

#[test]
fn trace_csv_layout() {
    let data = gen_nested(2, Some(20), 1).unwrap();
    let spec = ModelSpec::new(KernelKind::Normal, seven_mix_hyper());
    let r = fit(SamplerKind::Rpddp, &spec, &data, &FitOptions::new(ChainConfig::new(30, 10)), 3).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("trace.csv");
    r.trace.save_csv(&path, true).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(header[0], "iteration");
    assert!(header.contains(&"p_1_2"));
    assert!(header.contains(&"c_1_2"));
    assert!(!header.contains(&"c_2_1"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 30);
    for row in rows {
        assert_eq!(row.split(',').count(), header.len());
    }
}

#[test]
fn predictive_densities_integrate_to_one() {
    let data = gen_nested(2, Some(60), 3).unwrap();
    let spec = ModelSpec::new(KernelKind::Normal, BaseMeasureHyper::new(0.0, 1e-3, 1.0, 1e-2).unwrap());
    let mut opts = FitOptions::new(ChainConfig::new(1500, 500));
    opts.grid = Some(GridSpec::for_data(&data, KernelKind::Normal, 1024).unwrap());
    opts.density_thin = 5;
    opts.kde = true;
    for kind in [SamplerKind::Pdgsbp, SamplerKind::Rpddp] {
        let r = fit(kind, &spec, &data, &opts, 11).unwrap();
        let pred = r.predictive.unwrap();
        let kde = r.kde.unwrap();
        for j in 0..2 {
            assert!((pred.integral(j) - 1.0).abs() < 2e-2, "{kind:?} {}", pred.integral(j));
            assert!((kde.integral(j) - 1.0).abs() < 2e-2, "{kind:?} kde {}", kde.integral(j));
        }
        for row in &r.selection_mean {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }
}

#[test]
fn invalid_data_is_rejected() {
    let spec = ModelSpec::new(KernelKind::LogNormal, seven_mix_hyper());
    let data = GroupedDataset::new(vec![vec![1.0, 2.0], vec![-1.0, 3.0]]).unwrap();
    let opts = FitOptions::new(ChainConfig::new(10, 0));
    assert!(fit(SamplerKind::Pdgsbp, &spec, &data, &opts, 1).is_err());
    assert!(fit(SamplerKind::Rpddp, &spec, &data, &opts, 1).is_err());
}
