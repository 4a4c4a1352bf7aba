//! State and updates shared by both samplers: data in kernel space, the
//! (d, δ) allocations, the atom table and the selection matrix.

use crate::conjugate::{update_atom, SuffStats};
use crate::distributions::{sample_dirichlet, BaseMeasureHyper, KernelKind};
use crate::error::{Error, Result};
use crate::model::{Atom, AtomTable, PairMatrix, SelectionMatrix};
use rand::Rng;

/// Prior settings common to both samplers.
#[derive(Debug, Clone, PartialEq)]
pub struct SharedPrior {
    pub kind: KernelKind,
    pub hyper: BaseMeasureHyper,
    /// Row-major `m x m` Dirichlet parameters for the selection rows.
    pub dirichlet_alpha: Vec<f64>,
}

impl SharedPrior {
    pub fn new(m: usize, kind: KernelKind, hyper: BaseMeasureHyper) -> Self {
        Self {
            kind,
            hyper,
            dirichlet_alpha: vec![1.0; m * m],
        }
    }

    pub fn validate(&self, m: usize) -> Result<()> {
        self.hyper.validate()?;
        if self.dirichlet_alpha.len() != m * m {
            return Err(Error::Config(format!(
                "dirichlet_alpha has {} entries, expected {}",
                self.dirichlet_alpha.len(),
                m * m
            )));
        }
        if let Some((i, a)) = self
            .dirichlet_alpha
            .iter()
            .enumerate()
            .find(|(_, &a)| !(a > 0.0 && a.is_finite()))
        {
            return Err(Error::Config(format!(
                "dirichlet_alpha[{}][{}] = {a} must be positive",
                i / m + 1,
                i % m + 1
            )));
        }
        Ok(())
    }
}

/// Dirichlet posterior parameters of one selection row.
pub fn selection_posterior(alpha_row: &[f64], counts: &[usize]) -> Vec<f64> {
    alpha_row
        .iter()
        .zip(counts)
        .map(|(&a, &n)| a + n as f64)
        .collect()
}

pub(crate) struct Common {
    pub kind: KernelKind,
    pub hyper: BaseMeasureHyper,
    pub alpha: Vec<f64>,
    pub m: usize,
    /// Observations mapped into kernel space.
    pub ys: Vec<Vec<f64>>,
    /// 0-based component index per observation.
    pub d: Vec<Vec<u32>>,
    /// Selected group per observation.
    pub delta: Vec<Vec<u16>>,
    pub atoms: AtomTable,
    pub p: SelectionMatrix,
}

impl Common {
    pub fn new<R: Rng + ?Sized>(groups: &[Vec<f64>], prior: &SharedPrior, rng: &mut R) -> Result<Self> {
        let m = groups.len();
        if m == 0 {
            return Err(Error::param("at least one group is required"));
        }
        if m > u16::MAX as usize {
            return Err(Error::param("too many groups"));
        }
        prior.validate(m)?;
        let mut ys = Vec::with_capacity(m);
        for (j, g) in groups.iter().enumerate() {
            let mut row = Vec::with_capacity(g.len());
            for (i, &x) in g.iter().enumerate() {
                if !x.is_finite() || (prior.kind == KernelKind::LogNormal && x <= 0.0) {
                    return Err(Error::param(format!(
                        "observation {} of group {} ({x}) is not valid for the {} kernel",
                        i + 1,
                        j + 1,
                        prior.kind.name()
                    )));
                }
                row.push(prior.kind.to_kernel_space(x));
            }
            ys.push(row);
        }
        let d = ys.iter().map(|g| vec![0u32; g.len()]).collect();
        let delta = ys
            .iter()
            .enumerate()
            .map(|(j, g)| vec![j as u16; g.len()])
            .collect();
        let mut rows = Vec::with_capacity(m);
        for j in 0..m {
            rows.push(sample_dirichlet(&prior.dirichlet_alpha[j * m..(j + 1) * m], rng)?);
        }
        Ok(Self {
            kind: prior.kind,
            hyper: prior.hyper,
            alpha: prior.dirichlet_alpha.clone(),
            m,
            ys,
            d,
            delta,
            atoms: AtomTable::empty(m),
            p: SelectionMatrix::from_rows(&rows)?,
        })
    }

    pub fn n_total(&self) -> usize {
        self.ys.iter().map(Vec::len).sum()
    }

    /// Per pair, number of observations allocated to each component, sized
    /// to the current atom length.
    pub fn component_counts(&self) -> PairMatrix<Vec<usize>> {
        let mut counts = PairMatrix::from_fn(self.m, |p| vec![0usize; self.atoms.len(p.lo(), p.hi())]);
        for j in 0..self.m {
            for (&k, &l) in self.d[j].iter().zip(&self.delta[j]) {
                let c = counts.get_mut(j, l as usize);
                let k = k as usize;
                if k >= c.len() {
                    c.resize(k + 1, 0);
                }
                c[k] += 1;
            }
        }
        counts
    }

    /// One past the largest occupied component per pair (0 when unused).
    pub fn occupied_depths(&self) -> PairMatrix<usize> {
        let mut depth = PairMatrix::from_fn(self.m, |_| 0usize);
        for j in 0..self.m {
            for (&k, &l) in self.d[j].iter().zip(&self.delta[j]) {
                let v = depth.get_mut(j, l as usize);
                *v = (*v).max(k as usize + 1);
            }
        }
        depth
    }

    pub fn occupied_cells(&self) -> usize {
        self.component_counts()
            .values()
            .iter()
            .map(|c| c.iter().filter(|&&n| n > 0).count())
            .sum()
    }

    /// Redraw every instantiated atom from its full conditional.
    pub fn update_locations<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        let mut stats = PairMatrix::from_fn(self.m, |p| {
            vec![SuffStats::default(); self.atoms.len(p.lo(), p.hi())]
        });
        for j in 0..self.m {
            for ((&y, &k), &l) in self.ys[j].iter().zip(&self.d[j]).zip(&self.delta[j]) {
                stats.get_mut(j, l as usize)[k as usize].push(y);
            }
        }
        for lo in 0..self.m {
            for hi in lo..self.m {
                let s = stats.get(lo, hi);
                let atoms = self.atoms.pair_mut(lo, hi);
                for (atom, st) in atoms.iter_mut().zip(s) {
                    *atom = Atom::new(update_atom(st, &atom.param, &self.hyper, rng));
                }
            }
        }
    }

    pub fn selection_counts(&self, j: usize) -> Vec<usize> {
        let mut c = vec![0usize; self.m];
        for &l in &self.delta[j] {
            c[l as usize] += 1;
        }
        c
    }

    pub fn update_selection<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<()> {
        for j in 0..self.m {
            let post = selection_posterior(&self.alpha[j * self.m..(j + 1) * self.m], &self.selection_counts(j));
            let row = sample_dirichlet(&post, rng)?;
            self.p.set_row(j, &row)?;
        }
        Ok(())
    }

    pub fn ln_p(&self) -> Vec<f64> {
        self.p.as_slice().iter().map(|v| v.ln()).collect()
    }

    pub fn check_allocations(&self) -> Result<()> {
        self.p.validate()?;
        for j in 0..self.m {
            for (i, (&k, &l)) in self.d[j].iter().zip(&self.delta[j]).enumerate() {
                if l as usize >= self.m {
                    return Err(Error::Invariant(format!(
                        "selector of observation ({},{}) out of range",
                        j + 1,
                        i + 1
                    )));
                }
                if k as usize >= self.atoms.len(j, l as usize) {
                    return Err(Error::Invariant(format!(
                        "observation ({},{}) points at uninstantiated atom {} of pair ({},{})",
                        j + 1,
                        i + 1,
                        k + 1,
                        j + 1,
                        l + 1
                    )));
                }
            }
        }
        Ok(())
    }
}
