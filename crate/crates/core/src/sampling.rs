use std::ops::AddAssign;

/// Hardware-independent work counters for the allocation updates.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OpCounter {
    /// Scalar comparisons: slice-threshold tests plus categorical search steps.
    pub comparisons: u64,
    /// Kernel evaluations.
    pub kernel_evals: u64,
    /// Allocation updates performed.
    pub updates: u64,
}

impl AddAssign for OpCounter {
    fn add_assign(&mut self, o: Self) {
        self.comparisons += o.comparisons;
        self.kernel_evals += o.kernel_evals;
        self.updates += o.updates;
    }
}

impl OpCounter {
    pub fn comparisons_per_update(&self) -> f64 {
        if self.updates == 0 {
            0.0
        } else {
            self.comparisons as f64 / self.updates as f64
        }
    }
}

/// Draw an index with probability proportional to `exp(log_w[i])`, using
/// `u` in (0, 1). Overwrites `log_w` with unnormalized weights and returns
/// the index together with the number of search steps taken.
pub fn draw_from_log_weights(log_w: &mut [f64], u: f64) -> (usize, u64) {
    debug_assert!(!log_w.is_empty());
    let max = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        // Every entry is -inf (or NaN): fall back to uniform.
        let i = ((u * log_w.len() as f64) as usize).min(log_w.len() - 1);
        return (i, log_w.len() as u64);
    }
    let mut total = 0.0;
    for v in log_w.iter_mut() {
        *v = (*v - max).exp();
        total += *v;
    }
    let target = u * total;
    let mut acc = 0.0;
    for (i, &w) in log_w.iter().enumerate() {
        acc += w;
        if target < acc {
            return (i, i as u64 + 1);
        }
    }
    // Rounding left target at the very top; take the last positive weight.
    let last = log_w.iter().rposition(|&w| w > 0.0).unwrap_or(log_w.len() - 1);
    (last, log_w.len() as u64)
}

/// Normalized probabilities of the joint `(δ, d)` grid with mass
/// `p_l K_lk`; `kernel_values[l][k]`, output ordered by `l` then `k`.
pub fn block_probabilities(p_row: &[f64], kernel_values: &[Vec<f64>]) -> Vec<f64> {
    let raw: Vec<f64> = p_row
        .iter()
        .zip(kernel_values)
        .flat_map(|(&p, ks)| ks.iter().map(move |&k| p * k))
        .collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / total).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn block_probabilities_fixture() {
        let probs = block_probabilities(&[0.5, 0.5], &[vec![1.0, 3.0], vec![2.0, 2.0]]);
        let expected = [0.125, 0.375, 0.25, 0.25];
        for (a, b) in probs.iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn log_weights_survive_underflow() {
        let mut w = vec![-2000.0, -2001.0, -1e300];
        let (i, _) = draw_from_log_weights(&mut w, 0.5);
        assert_eq!(i, 0);
        let mut w = vec![-2000.0, -2001.0];
        let (i, _) = draw_from_log_weights(&mut w, 0.99);
        assert_eq!(i, 1);
        let mut w = vec![f64::NEG_INFINITY; 4];
        let (i, _) = draw_from_log_weights(&mut w, 0.6);
        assert_eq!(i, 2);
    }

    #[test]
    fn singleton_is_forced() {
        for u in [1e-9, 0.5, 1.0 - 1e-9] {
            assert_eq!(draw_from_log_weights(&mut [3.0], u).0, 0);
        }
    }
}
