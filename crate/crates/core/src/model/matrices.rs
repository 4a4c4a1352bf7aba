use super::pair::PairMatrix;
use crate::error::{Error, Result};

const ROW_SUM_TOL: f64 = 1e-12;

/// Row-stochastic `m x m` matrix; row `j` gives the probabilities that an
/// observation of group `j` comes from the pair measure `(j, l)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionMatrix {
    m: usize,
    data: Vec<f64>,
}

impl SelectionMatrix {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let m = rows.len();
        if m == 0 {
            return Err(Error::param("selection matrix needs at least one row"));
        }
        let mut data = Vec::with_capacity(m * m);
        for (j, row) in rows.iter().enumerate() {
            if row.len() != m {
                return Err(Error::param(format!(
                    "selection row {} has {} entries, expected {m}",
                    j + 1,
                    row.len()
                )));
            }
            data.extend_from_slice(row);
        }
        let p = Self { m, data };
        p.validate()?;
        Ok(p)
    }

    /// Every row uniform.
    pub fn uniform(m: usize) -> Self {
        Self {
            m,
            data: vec![1.0 / m as f64; m * m],
        }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    #[inline]
    pub fn get(&self, j: usize, l: usize) -> f64 {
        self.data[j * self.m + l]
    }

    #[inline]
    pub fn row(&self, j: usize) -> &[f64] {
        &self.data[j * self.m..(j + 1) * self.m]
    }

    pub fn set_row(&mut self, j: usize, row: &[f64]) -> Result<()> {
        check_row(j, row)?;
        self.data[j * self.m..(j + 1) * self.m].copy_from_slice(row);
        Ok(())
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn validate(&self) -> Result<()> {
        (0..self.m).try_for_each(|j| check_row(j, self.row(j)))
    }
}

fn check_row(j: usize, row: &[f64]) -> Result<()> {
    if row.iter().any(|&v| !(0.0..=1.0).contains(&v)) {
        return Err(Error::Invariant(format!("selection row {} leaves [0, 1]: {row:?}", j + 1)));
    }
    let s: f64 = row.iter().sum();
    if (s - 1.0).abs() > ROW_SUM_TOL {
        return Err(Error::Invariant(format!("selection row {} sums to {s}", j + 1)));
    }
    Ok(())
}

/// Symmetric matrix stored once per unordered pair.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricMatrix {
    values: PairMatrix<f64>,
}

impl SymmetricMatrix {
    pub fn constant(m: usize, v: f64) -> Self {
        Self {
            values: PairMatrix::from_fn(m, |_| v),
        }
    }

    pub fn from_fn(m: usize, f: impl FnMut(super::PairIndex) -> f64) -> Self {
        Self {
            values: PairMatrix::from_fn(m, f),
        }
    }

    pub fn m(&self) -> usize {
        self.values.m()
    }

    #[inline]
    pub fn get(&self, j: usize, l: usize) -> f64 {
        *self.values.get(j, l)
    }

    pub fn set(&mut self, j: usize, l: usize, v: f64) {
        self.values.set(j, l, v);
    }

    /// Upper-triangle entries in canonical pair order.
    pub fn upper(&self) -> &[f64] {
        self.values.values()
    }

    pub fn pairs(&self) -> impl Iterator<Item = super::PairIndex> + '_ {
        self.values.pairs()
    }
}

/// Geometric success probabilities `λ_jl`, symmetric with entries in (0, 1).
pub type GeometricMatrix = SymmetricMatrix;

/// Dirichlet process concentrations `c_jl`, symmetric and positive.
pub type ConcentrationMatrix = SymmetricMatrix;

pub fn validate_geometric(lambda: &GeometricMatrix) -> Result<()> {
    for (pair, &v) in lambda.values.iter() {
        if !(v > 0.0 && v < 1.0) {
            return Err(Error::Invariant(format!(
                "lambda({},{}) = {v} outside (0, 1)",
                pair.lo() + 1,
                pair.hi() + 1
            )));
        }
    }
    Ok(())
}

pub fn validate_concentration(c: &ConcentrationMatrix) -> Result<()> {
    for (pair, &v) in c.values.iter() {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::Invariant(format!(
                "c({},{}) = {v} is not positive",
                pair.lo() + 1,
                pair.hi() + 1
            )));
        }
    }
    Ok(())
}
