use crate::chain::ChainTrace;
use crate::error::{Error, Result};
use crate::experiments::predictive::DensityGrid;
use crate::quadrature::trapezoid;

/// Hellinger distance `sqrt(1 - ∫ sqrt(f g))` of two densities sampled on the
/// same uniform grid with spacing `dx`, using the trapezoid rule.
pub fn hellinger(f: &[f64], g: &[f64], dx: f64) -> Result<f64> {
    if f.len() != g.len() || f.len() < 2 {
        return Err(Error::param(format!(
            "density rows differ in length ({} vs {})",
            f.len(),
            g.len()
        )));
    }
    if !(dx > 0.0) {
        return Err(Error::param(format!("grid step must be positive, got {dx}")));
    }
    let root: Vec<f64> = f
        .iter()
        .zip(g)
        .map(|(a, b)| (a.max(0.0) * b.max(0.0)).sqrt())
        .collect();
    let bc = trapezoid(&root, dx);
    Ok((1.0 - bc).max(0.0).sqrt())
}

/// Per-group Hellinger distances between two density grids.
pub fn hellinger_grids(a: &DensityGrid, b: &DensityGrid) -> Result<Vec<f64>> {
    if a.grid != b.grid || a.m() != b.m() {
        return Err(Error::param("density grids do not share points and groups"));
    }
    (0..a.m())
        .map(|j| hellinger(&a.values[j], &b.values[j], a.grid.step()))
        .collect()
}

/// Elementwise posterior mean of the selection matrix over retained
/// iterations, as rows.
pub fn posterior_selection_mean(trace: &ChainTrace) -> Result<Vec<Vec<f64>>> {
    let m = trace.m;
    let mut sum = vec![0.0; m * m];
    let mut n = 0usize;
    for r in trace.retained() {
        for (s, v) in sum.iter_mut().zip(&r.p) {
            *s += v;
        }
        n += 1;
    }
    if n == 0 {
        return Err(Error::param("trace has no retained iterations"));
    }
    Ok(sum
        .chunks(m)
        .map(|row| row.iter().map(|v| v / n as f64).collect())
        .collect())
}

/// Posterior mean of the upper triangle of λ or c.
pub fn posterior_pair_parameter_mean(trace: &ChainTrace) -> Result<Vec<f64>> {
    let mut sum: Vec<f64> = Vec::new();
    let mut n = 0usize;
    for r in trace.retained() {
        if sum.is_empty() {
            sum = vec![0.0; r.pair_parameter.len()];
        }
        for (s, v) in sum.iter_mut().zip(&r.pair_parameter) {
            *s += v;
        }
        n += 1;
    }
    if n == 0 {
        return Err(Error::param("trace has no retained iterations"));
    }
    Ok(sum.into_iter().map(|v| v / n as f64).collect())
}

/// Median of a non-empty sample.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let k = v.len() / 2;
    Some(if v.len() % 2 == 1 { v[k] } else { 0.5 * (v[k - 1] + v[k]) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{ChainConfig, IterationRecord};

    fn normal_row(mu: f64, xs: &[f64]) -> Vec<f64> {
        xs.iter()
            .map(|x| (-0.5 * (x - mu).powi(2)).exp() / (2.0 * std::f64::consts::PI).sqrt())
            .collect()
    }

    #[test]
    fn closed_form_normal_distances() {
        let dx = 0.01;
        let xs: Vec<f64> = (0..=2200).map(|i| -10.0 + i as f64 * dx).collect();
        let f = normal_row(0.0, &xs);
        let g = normal_row(2.0, &xs);
        let expect = (1.0 - (-0.5f64).exp()).sqrt();
        assert!((hellinger(&f, &g, dx).unwrap() - expect).abs() < 1e-3);
        assert!((expect - 0.6273).abs() < 1e-4);
        assert!(hellinger(&f, &f, dx).unwrap() < 1e-7);
        let far = normal_row(10.0, &xs);
        assert!(hellinger(&f, &far, dx).unwrap() > 0.99999);
        assert!(hellinger(&f, &g[1..], dx).is_err());
    }

    fn record(p: Vec<f64>) -> IterationRecord {
        IterationRecord {
            iteration: 0,
            wall_nanos: 0,
            snapshot_row: None,
            occupied: 0,
            depth: 0,
            comparisons: 0,
            kernel_evals: 0,
            p,
            pair_parameter: vec![0.5; 3],
            extra: vec![],
        }
    }

    #[test]
    fn selection_mean_respects_burn_in() {
        let mut records: Vec<_> = (0..10)
            .map(|i| {
                let mut r = record(if i < 5 { vec![1.0, 0.0, 0.0, 1.0] } else { vec![0.3, 0.7, 0.6, 0.4] });
                r.iteration = i;
                r
            })
            .collect();
        records[7].p = vec![0.5, 0.5, 0.2, 0.8];
        let trace = ChainTrace {
            m: 2,
            pair_parameter_name: "lambda",
            extra_names: vec![],
            config: ChainConfig::new(10, 5),
            records,
            snapshots: vec![],
        };
        let mean = posterior_selection_mean(&trace).unwrap();
        assert!((mean[0][0] - (0.3 * 4.0 + 0.5) / 5.0).abs() < 1e-15);
        for row in &mean {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        assert_eq!(posterior_pair_parameter_mean(&trace).unwrap(), vec![0.5; 3]);
    }

    #[test]
    fn median_even_and_odd() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), Some(2.5));
        assert_eq!(median(&[]), None);
    }
}
