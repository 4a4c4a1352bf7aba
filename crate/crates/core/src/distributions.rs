//! Random variate generation and density evaluation for everything the two
//! samplers draw from.
//!
//! All samplers take an explicit RNG handle and are deterministic given its
//! state. Gamma variates with shape below one are generated on the log
//! scale so that very small shapes (the default base measure uses 1e-3)
//! never collapse to an exact zero.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, Gamma, Normal, Open01};

use crate::error::{Error, Result};
use crate::quadrature::adaptive_simpson;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Density kernel used for the mixture components.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum KernelKind {
    #[default]
    Normal,
    /// Log-normal; `mu` and `tau` refer to the log-scale normal.
    LogNormal,
}

impl KernelKind {
    /// Map an observation into the space where the kernel is normal.
    #[inline]
    pub fn to_kernel_space(self, x: f64) -> f64 {
        match self {
            KernelKind::Normal => x,
            KernelKind::LogNormal => x.ln(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            KernelKind::Normal => "normal",
            KernelKind::LogNormal => "lognormal",
        }
    }
}

/// Location and precision of a kernel component.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelParam {
    pub mu: f64,
    pub tau: f64,
}

impl KernelParam {
    pub fn new(mu: f64, tau: f64) -> Result<Self> {
        if !mu.is_finite() {
            return Err(Error::param(format!("kernel location must be finite, got {mu}")));
        }
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::param(format!("kernel precision must be positive, got {tau}")));
        }
        Ok(Self { mu, tau })
    }

    pub fn sd(&self) -> f64 {
        self.tau.sqrt().recip()
    }
}

/// Hyperparameters of the independent normal-gamma base measure
/// `N(mu | mu0, 1/tau0) x Gamma(tau | eps1, eps2)` (shape/rate).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaseMeasureHyper {
    pub mu0: f64,
    pub tau0: f64,
    pub eps1: f64,
    pub eps2: f64,
}

impl BaseMeasureHyper {
    /// The vague default `(0, 1e-3, 1e-3, 1e-3)`.
    pub const VAGUE: BaseMeasureHyper = BaseMeasureHyper {
        mu0: 0.0,
        tau0: 1e-3,
        eps1: 1e-3,
        eps2: 1e-3,
    };

    pub fn new(mu0: f64, tau0: f64, eps1: f64, eps2: f64) -> Result<Self> {
        let h = Self {
            mu0,
            tau0,
            eps1,
            eps2,
        };
        h.validate()?;
        Ok(h)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.mu0.is_finite() {
            return Err(Error::param("mu0 must be finite"));
        }
        positive("tau0", self.tau0)?;
        positive("eps1", self.eps1)?;
        positive("eps2", self.eps2)
    }
}

impl Default for BaseMeasureHyper {
    fn default() -> Self {
        Self::VAGUE
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::param(format!("{name} must be positive and finite, got {v}")))
    }
}

fn unit_interior(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(Error::param(format!("{name} must lie in (0, 1), got {v}")))
    }
}

/// Independent RNG stream `stream` derived from `master_seed`.
pub fn chain_rng(master_seed: u64, stream: u64) -> ChaCha8Rng {
    use rand::SeedableRng;
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(stream);
    rng
}

/// Uniform draw on the open interval (0, 1).
#[inline]
pub fn open01<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    Open01.sample(rng)
}

pub fn sample_beta<R: Rng + ?Sized>(a: f64, b: f64, rng: &mut R) -> Result<f64> {
    positive("beta shape a", a)?;
    positive("beta shape b", b)?;
    let d = Beta::new(a, b).map_err(|e| Error::param(format!("beta({a}, {b}): {e}")))?;
    Ok(d.sample(rng))
}

/// Log of a Gamma(shape, rate) variate.
pub fn sample_ln_gamma<R: Rng + ?Sized>(shape: f64, rate: f64, rng: &mut R) -> Result<f64> {
    positive("gamma shape", shape)?;
    positive("gamma rate", rate)?;
    let ln = if shape >= 1.0 {
        let d = Gamma::new(shape, 1.0).map_err(|e| Error::param(e.to_string()))?;
        d.sample(rng).ln()
    } else {
        // G(a) = G(a + 1) * U^(1/a)
        let d = Gamma::new(shape + 1.0, 1.0).map_err(|e| Error::param(e.to_string()))?;
        let g: f64 = d.sample(rng);
        g.ln() + open01(rng).ln() / shape
    };
    Ok(ln - rate.ln())
}

/// Gamma(shape, rate) variate, mean `shape / rate`. Always strictly positive.
pub fn sample_gamma<R: Rng + ?Sized>(shape: f64, rate: f64, rng: &mut R) -> Result<f64> {
    if shape >= 1.0 {
        positive("gamma rate", rate)?;
        let d = Gamma::new(shape, rate.recip()).map_err(|e| Error::param(e.to_string()))?;
        return Ok(d.sample(rng).max(f64::MIN_POSITIVE));
    }
    Ok(sample_ln_gamma(shape, rate, rng)?.exp().max(f64::MIN_POSITIVE))
}

/// Dirichlet draw built from log-gamma variates. Components are strictly
/// positive and sum to one.
pub fn sample_dirichlet<R: Rng + ?Sized>(alpha: &[f64], rng: &mut R) -> Result<Vec<f64>> {
    if alpha.is_empty() {
        return Err(Error::param("dirichlet needs at least one component"));
    }
    let logs = alpha
        .iter()
        .map(|&a| sample_ln_gamma(a, 1.0, rng))
        .collect::<Result<Vec<_>>>()?;
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = logs
        .iter()
        .map(|&l| (l - max).exp().max(f64::MIN_POSITIVE))
        .collect();
    let total: f64 = out.iter().sum();
    out.iter_mut().for_each(|v| *v /= total);
    Ok(out)
}

/// Negative binomial NB(r | 2, lambda) = r lambda^2 (1 - lambda)^(r - 1) on r >= 1.
pub fn nb2_pmf(r: u64, lambda: f64) -> Result<f64> {
    unit_interior("lambda", lambda)?;
    if r == 0 {
        return Ok(0.0);
    }
    let rf = r as f64;
    Ok((rf.ln() + 2.0 * lambda.ln() + (rf - 1.0) * (-lambda).ln_1p()).exp())
}

/// Draw `N >= lower` with `P(N = r) ∝ (1 - lambda)^r`, by inverting the
/// geometric tail CDF.
pub fn sample_truncated_geometric<R: Rng + ?Sized>(
    lambda: f64,
    lower: u64,
    rng: &mut R,
) -> Result<u64> {
    unit_interior("lambda", lambda)?;
    let u = open01(rng);
    let steps = ((-u).ln_1p() / (-lambda).ln_1p()).floor();
    Ok(lower.saturating_add(steps as u64))
}

/// Unnormalized log-density of the transformed gamma prior on lambda,
/// i.e. the law of `1 / (1 + c)` for `c ~ Gamma(a, b)`.
pub fn tg_logpdf(lambda: f64, a: f64, b: f64) -> Result<f64> {
    if !(a > 1.0) {
        return Err(Error::param(format!("transformed gamma needs a > 1, got {a}")));
    }
    positive("transformed gamma b", b)?;
    if !(lambda > 0.0 && lambda < 1.0) {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(-(a + 1.0) * lambda.ln() - b / lambda + (a - 1.0) * (-lambda).ln_1p())
}

/// Draw from the density proportional to `x^exponent` on `(lo, hi)` by
/// inverse CDF, evaluated on the log scale so that large exponents do not
/// overflow.
pub fn sample_truncated_power<R: Rng + ?Sized>(
    exponent: f64,
    lo: f64,
    hi: f64,
    rng: &mut R,
) -> Result<f64> {
    if !(lo < hi) {
        return Err(Error::EmptyInterval { lo, hi });
    }
    if !(lo >= 0.0) || !exponent.is_finite() {
        return Err(Error::param(format!(
            "truncated power needs 0 <= lo and finite exponent, got lo={lo}, exponent={exponent}"
        )));
    }
    let k = exponent + 1.0;
    if k <= 1e-10 && lo == 0.0 {
        return Err(Error::param(format!(
            "x^{exponent} is not integrable at 0"
        )));
    }
    let u = open01(rng);
    let (ln_lo, ln_hi) = (lo.ln(), hi.ln());
    let ln_x = if k.abs() < 1e-10 {
        ln_lo + u * (ln_hi - ln_lo)
    } else if k > 0.0 {
        // x^k = hi^k (1 - (1 - u)(1 - (lo/hi)^k))
        let gap = -(k * (ln_lo - ln_hi)).exp_m1();
        ln_hi + (-(1.0 - u) * gap).ln_1p() / k
    } else {
        // x^k = lo^k (1 - u (1 - (hi/lo)^k))
        let gap = -(k * (ln_hi - ln_lo)).exp_m1();
        ln_lo + (-u * gap).ln_1p() / k
    };
    let x = ln_x.exp();
    Ok(if x <= lo {
        lo.next_up()
    } else if x >= hi {
        hi.next_down()
    } else {
        x
    })
}

/// Log normal density evaluated in kernel space.
#[inline]
pub fn normal_ln_pdf(y: f64, theta: &KernelParam) -> f64 {
    let d = y - theta.mu;
    0.5 * (theta.tau.ln() - LN_2PI) - 0.5 * theta.tau * d * d
}

pub fn kernel_ln_pdf(kind: KernelKind, x: f64, theta: &KernelParam) -> f64 {
    match kind {
        KernelKind::Normal => normal_ln_pdf(x, theta),
        KernelKind::LogNormal => {
            if x <= 0.0 {
                f64::NEG_INFINITY
            } else {
                let y = x.ln();
                normal_ln_pdf(y, theta) - y
            }
        }
    }
}

pub fn kernel_pdf(kind: KernelKind, x: f64, theta: &KernelParam) -> f64 {
    kernel_ln_pdf(kind, x, theta).exp()
}

/// Draw `(mu, tau)` from the base measure. `mu` and `tau` are independent.
pub fn sample_base_measure<R: Rng + ?Sized>(hyper: &BaseMeasureHyper, rng: &mut R) -> KernelParam {
    let tau = sample_gamma(hyper.eps1, hyper.eps2, rng).expect("validated hyperparameters");
    let normal = Normal::new(hyper.mu0, hyper.tau0.sqrt().recip()).expect("validated tau0");
    KernelParam {
        mu: normal.sample(rng),
        tau,
    }
}

/// Prior predictive density `∫ K(x|θ) G0(dθ)`.
///
/// Integrating `mu` out analytically leaves a one-dimensional integral over
/// the precision, which is done by adaptive quadrature in `s = ln tau`.
#[derive(Debug, Clone, Copy)]
pub struct PriorPredictive {
    hyper: BaseMeasureHyper,
    kind: KernelKind,
    ln_weight_const: f64,
}

impl PriorPredictive {
    pub fn new(hyper: BaseMeasureHyper, kind: KernelKind) -> Result<Self> {
        hyper.validate()?;
        let ln_weight_const = hyper.eps1 * hyper.eps2.ln() - libm::lgamma(hyper.eps1);
        Ok(Self {
            hyper,
            kind,
            ln_weight_const,
        })
    }

    pub fn hyper(&self) -> &BaseMeasureHyper {
        &self.hyper
    }

    fn ln_integrand(&self, s: f64, y: f64) -> f64 {
        let h = &self.hyper;
        let ln_w = self.ln_weight_const + h.eps1 * s - h.eps2 * s.exp();
        let var = (-s).exp() + h.tau0.recip();
        let d = y - h.mu0;
        ln_w - 0.5 * (LN_2PI + var.ln()) - 0.5 * d * d / var
    }

    fn normal_space_pdf(&self, y: f64) -> Result<f64> {
        const S_LO: f64 = -200.0;
        const STEP: f64 = 1.0;
        let h = &self.hyper;
        let s_hi = ((h.eps1 + 10.0 * h.eps1.sqrt() + 60.0) / h.eps2).ln() + 1.0;
        let n = ((s_hi - S_LO) / STEP).ceil() as usize + 1;
        let scan: Vec<f64> = (0..n)
            .map(|i| self.ln_integrand(S_LO + i as f64 * STEP, y))
            .collect();
        let peak = scan.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !peak.is_finite() {
            return Err(Error::Numerical(format!(
                "prior predictive integrand has no finite mass at y={y} ({h:?})"
            )));
        }
        let first = scan.iter().position(|&v| v > peak - 50.0).unwrap_or(0);
        let last = scan.iter().rposition(|&v| v > peak - 50.0).unwrap_or(n - 1);
        let a = S_LO + first.saturating_sub(1) as f64 * STEP;
        let b = S_LO + (last + 1).min(n - 1) as f64 * STEP;
        let coarse: f64 = scan[first..=last].iter().map(|v| (v - peak).exp()).sum::<f64>() * STEP;
        let tol = 1e-12 * coarse.max(STEP);
        let scaled = adaptive_simpson(|s| (self.ln_integrand(s, y) - peak).exp(), a, b, tol, 48)
            .map_err(|e| Error::Numerical(format!("prior predictive at y={y}: {e}")))?;
        Ok(scaled * peak.exp())
    }

    pub fn pdf(&self, x: f64) -> Result<f64> {
        match self.kind {
            KernelKind::Normal => self.normal_space_pdf(x),
            KernelKind::LogNormal => {
                if x <= 0.0 {
                    Ok(0.0)
                } else {
                    Ok(self.normal_space_pdf(x.ln())? / x)
                }
            }
        }
    }

    /// Values on a grid, computed once so repeated density evaluations can
    /// reuse them.
    pub fn on_grid(&self, xs: &[f64]) -> Result<Vec<f64>> {
        xs.iter().map(|&x| self.pdf(x)).collect()
    }
}

pub fn prior_predictive_pdf(hyper: &BaseMeasureHyper, kind: KernelKind, x: f64) -> Result<f64> {
    PriorPredictive::new(*hyper, kind)?.pdf(x)
}
