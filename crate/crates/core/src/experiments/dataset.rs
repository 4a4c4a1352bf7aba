use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Gamma, Normal};

use crate::distributions::open01;
use crate::error::{Error, Result};

/// Parametric mixture component of a synthetic truth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Family {
    Normal { mean: f64, sd: f64 },
    /// Shape/rate parametrization.
    Gamma { shape: f64, rate: f64 },
}

impl Family {
    pub fn pdf(&self, x: f64) -> f64 {
        match *self {
            Family::Normal { mean, sd } => {
                let z = (x - mean) / sd;
                (-0.5 * z * z).exp() / (sd * (2.0 * std::f64::consts::PI).sqrt())
            }
            Family::Gamma { shape, rate } => {
                if x <= 0.0 {
                    0.0
                } else {
                    (shape * rate.ln() - libm::lgamma(shape) + (shape - 1.0) * x.ln() - rate * x).exp()
                }
            }
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            Family::Normal { mean, .. } => mean,
            Family::Gamma { shape, rate } => shape / rate,
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            Family::Normal { sd, .. } => sd * sd,
            Family::Gamma { shape, rate } => shape / (rate * rate),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Family::Normal { mean, sd } => Normal::new(mean, sd).expect("valid normal").sample(rng),
            Family::Gamma { shape, rate } => Gamma::new(shape, 1.0 / rate)
                .expect("valid gamma")
                .sample(rng),
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            Family::Normal { mean, sd } if mean.is_finite() && sd > 0.0 => Ok(()),
            Family::Gamma { shape, rate } if shape > 0.0 && rate > 0.0 => Ok(()),
            f => Err(Error::param(format!("invalid mixture component {f:?}"))),
        }
    }
}

/// Finite mixture with weights on the simplex.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureSpec {
    components: Vec<(f64, Family)>,
}

impl MixtureSpec {
    pub fn new(components: Vec<(f64, Family)>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::param("mixture needs at least one component"));
        }
        let total: f64 = components.iter().map(|c| c.0).sum();
        if (total - 1.0).abs() > 1e-12 || components.iter().any(|c| !(c.0 >= 0.0)) {
            return Err(Error::param(format!("mixture weights sum to {total}")));
        }
        components.iter().try_for_each(|c| c.1.validate())?;
        Ok(Self { components })
    }

    /// Equally weighted normal components with a common sd.
    pub fn equal_normals(means: &[f64], sd: f64) -> Result<Self> {
        let w = 1.0 / means.len() as f64;
        Self::new(
            means
                .iter()
                .map(|&mean| (w, Family::Normal { mean, sd }))
                .collect(),
        )
    }

    /// `Σ_i w_i spec_i`; components with zero outer weight are dropped.
    pub fn blend(parts: &[(f64, &MixtureSpec)]) -> Result<Self> {
        let comps = parts
            .iter()
            .filter(|(w, _)| *w > 0.0)
            .flat_map(|(w, s)| s.components.iter().map(move |&(cw, f)| (w * cw, f)))
            .collect();
        Self::new(comps)
    }

    pub fn components(&self) -> &[(f64, Family)] {
        &self.components
    }

    pub fn pdf(&self, x: f64) -> f64 {
        self.components.iter().map(|(w, f)| w * f.pdf(x)).sum()
    }

    pub fn mean(&self) -> f64 {
        self.components.iter().map(|(w, f)| w * f.mean()).sum()
    }

    pub fn variance(&self) -> f64 {
        let mu = self.mean();
        self.components
            .iter()
            .map(|(w, f)| w * (f.variance() + (f.mean() - mu).powi(2)))
            .sum()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u = open01(rng);
        let mut acc = 0.0;
        for (w, f) in &self.components {
            acc += w;
            if u < acc {
                return f.sample(rng);
            }
        }
        self.components.last().expect("non-empty").1.sample(rng)
    }
}

/// `m` ordered groups of observations, optionally with the densities they
/// were drawn from.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupedDataset {
    pub groups: Vec<Vec<f64>>,
    pub truth: Option<Vec<MixtureSpec>>,
}

impl GroupedDataset {
    pub fn new(groups: Vec<Vec<f64>>) -> Result<Self> {
        if groups.is_empty() {
            return Err(Error::param("dataset needs at least one group"));
        }
        Ok(Self {
            groups,
            truth: None,
        })
    }

    pub fn m(&self) -> usize {
        self.groups.len()
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.groups.iter().map(Vec::len).collect()
    }

    pub fn pooled(&self) -> impl Iterator<Item = f64> + '_ {
        self.groups.iter().flat_map(|g| g.iter().copied())
    }

    pub fn min_max(&self) -> Option<(f64, f64)> {
        self.pooled().fold(None, |acc, x| match acc {
            None => Some((x, x)),
            Some((lo, hi)) => Some((lo.min(x), hi.max(x))),
        })
    }

    /// Standard deviation of all observations pooled together.
    pub fn pooled_sd(&self) -> f64 {
        let n = self.pooled().count() as f64;
        if n < 2.0 {
            return 0.0;
        }
        let mean = self.pooled().sum::<f64>() / n;
        (self.pooled().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    }

    /// Check that every group can be fitted; the log-normal kernel also
    /// needs strictly positive data.
    pub fn validate_for_fit(&self, positive: bool) -> Result<()> {
        for (j, g) in self.groups.iter().enumerate() {
            if g.is_empty() {
                return Err(Error::param(format!("group {} is empty", j + 1)));
            }
            if let Some(x) = g.iter().find(|x| !x.is_finite() || (positive && **x <= 0.0)) {
                return Err(Error::param(format!(
                    "group {} contains {x}, which the kernel cannot take",
                    j + 1
                )));
            }
        }
        Ok(())
    }

    /// CSV with header `group,value`; groups are 1-based.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["group", "value"])?;
        for (j, g) in self.groups.iter().enumerate() {
            for x in g {
                w.write_record([(j + 1).to_string(), x.to_string()])?;
            }
        }
        w.flush().map_err(|e| Error::io(path, e))?;
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut groups: Vec<Vec<f64>> = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if idx == 0 && fields.first().is_some_and(|f| f.eq_ignore_ascii_case("group")) {
                continue;
            }
            let parse_err = |msg: String| Error::Parse {
                path: path.to_path_buf(),
                line: line_no,
                msg,
            };
            if fields.len() != 2 {
                return Err(parse_err(format!("expected 2 fields, found {}", fields.len())));
            }
            let g: usize = fields[0]
                .parse()
                .map_err(|_| parse_err(format!("bad group index {:?}", fields[0])))?;
            if g == 0 {
                return Err(parse_err("group indices start at 1".into()));
            }
            let x: f64 = fields[1]
                .parse()
                .map_err(|_| parse_err(format!("bad value {:?}", fields[1])))?;
            if groups.len() < g {
                groups.resize(g, Vec::new());
            }
            groups[g - 1].push(x);
        }
        if groups.is_empty() {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: 0,
                msg: "no observations".into(),
            });
        }
        Ok(Self {
            groups,
            truth: None,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::adaptive_simpson;

    #[test]
    fn blend_and_moments() {
        let f = MixtureSpec::equal_normals(&[-1.0, 1.0], 1.0).unwrap();
        let g = MixtureSpec::equal_normals(&[5.0], 1.0).unwrap();
        let h = MixtureSpec::blend(&[(0.5, &f), (0.5, &g)]).unwrap();
        assert_eq!(h.components().len(), 3);
        assert!((h.mean() - 2.5).abs() < 1e-14);
        assert!(MixtureSpec::new(vec![(0.5, Family::Normal { mean: 0.0, sd: 1.0 })]).is_err());
    }

    #[test]
    fn gamma_density_integrates() {
        let f = Family::Gamma { shape: 2.0, rate: 1.1 };
        let v = adaptive_simpson(|x| f.pdf(x), 0.0, 60.0, 1e-10, 40).unwrap();
        assert!((v - 1.0).abs() < 1e-8);
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        let ds = GroupedDataset::new(vec![vec![1.5, -2.0], vec![3.25]]).unwrap();
        ds.write_csv(&path).unwrap();
        let back = GroupedDataset::read_csv(&path).unwrap();
        assert_eq!(back.groups, ds.groups);
    }

    #[test]
    fn csv_errors_carry_line_numbers() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "group,value\n1,0.5\n2,abc\n").unwrap();
        match GroupedDataset::read_csv(&path) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            GroupedDataset::read_csv(&dir.path().join("missing.csv")),
            Err(Error::Io { .. })
        ));
    }
}
