use crate::distributions::{sample_base_measure, BaseMeasureHyper, KernelParam};
use crate::error::{Error, Result};
use rand::Rng;

/// Unordered pair of group indices (0-based), stored as `(lo, hi)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PairIndex {
    lo: usize,
    hi: usize,
}

impl PairIndex {
    pub fn new(j: usize, l: usize) -> Self {
        Self {
            lo: j.min(l),
            hi: j.max(l),
        }
    }

    pub fn lo(&self) -> usize {
        self.lo
    }

    pub fn hi(&self) -> usize {
        self.hi
    }

    pub fn is_diagonal(&self) -> bool {
        self.lo == self.hi
    }

    /// Position in row-major upper-triangle storage for `m` groups.
    #[inline]
    pub fn slot(&self, m: usize) -> usize {
        self.lo * m - self.lo * (self.lo + 1) / 2 + self.hi
    }
}

/// Number of unordered pairs (including diagonal) among `m` groups.
pub fn pair_count(m: usize) -> usize {
    m * (m + 1) / 2
}

/// Values indexed by unordered group pairs, so `(j, l)` and `(l, j)` always
/// alias the same entry.
#[derive(Debug, Clone, PartialEq)]
pub struct PairMatrix<T> {
    m: usize,
    data: Vec<T>,
}

impl<T> PairMatrix<T> {
    pub fn from_fn(m: usize, mut f: impl FnMut(PairIndex) -> T) -> Self {
        let mut data = Vec::with_capacity(pair_count(m));
        for lo in 0..m {
            for hi in lo..m {
                data.push(f(PairIndex::new(lo, hi)));
            }
        }
        Self { m, data }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    #[inline]
    fn index(&self, j: usize, l: usize) -> usize {
        debug_assert!(j < self.m && l < self.m, "group index out of range");
        PairIndex::new(j, l).slot(self.m)
    }

    #[inline]
    pub fn get(&self, j: usize, l: usize) -> &T {
        &self.data[self.index(j, l)]
    }

    #[inline]
    pub fn get_mut(&mut self, j: usize, l: usize) -> &mut T {
        let i = self.index(j, l);
        &mut self.data[i]
    }

    pub fn set(&mut self, j: usize, l: usize, value: T) {
        *self.get_mut(j, l) = value;
    }

    /// Pairs in canonical order `(0,0), (0,1), ..., (m-1,m-1)`.
    pub fn pairs(&self) -> impl Iterator<Item = PairIndex> + '_ {
        let m = self.m;
        (0..m).flat_map(move |lo| (lo..m).map(move |hi| PairIndex::new(lo, hi)))
    }

    pub fn iter(&self) -> impl Iterator<Item = (PairIndex, &T)> + '_ {
        self.pairs().zip(self.data.iter())
    }

    pub fn values(&self) -> &[T] {
        &self.data
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn map<U>(&self, mut f: impl FnMut(PairIndex, &T) -> U) -> PairMatrix<U> {
        PairMatrix {
            m: self.m,
            data: self.iter().map(|(p, v)| f(p, v)).collect(),
        }
    }
}

/// Kernel parameters together with the constants reused by every log-kernel
/// evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom {
    pub param: KernelParam,
    ln_norm: f64,
    half_tau: f64,
}

impl Atom {
    pub fn new(param: KernelParam) -> Self {
        Self {
            param,
            ln_norm: 0.5 * (param.tau.ln() - (2.0 * std::f64::consts::PI).ln()),
            half_tau: 0.5 * param.tau,
        }
    }

    /// Log normal density at `y` in kernel space.
    #[inline]
    pub fn ln_kernel(&self, y: f64) -> f64 {
        let d = y - self.param.mu;
        self.ln_norm - self.half_tau * d * d
    }
}

/// Per-pair growable sequences of atoms `θ_jl1, θ_jl2, ...`.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomTable {
    atoms: PairMatrix<Vec<Atom>>,
}

impl AtomTable {
    pub fn empty(m: usize) -> Self {
        Self {
            atoms: PairMatrix::from_fn(m, |_| Vec::new()),
        }
    }

    pub fn m(&self) -> usize {
        self.atoms.m()
    }

    /// Atoms of pair `(j, l)`; 0-based component index.
    #[inline]
    pub fn pair(&self, j: usize, l: usize) -> &[Atom] {
        self.atoms.get(j, l)
    }

    pub fn len(&self, j: usize, l: usize) -> usize {
        self.atoms.get(j, l).len()
    }

    pub fn get(&self, j: usize, l: usize, k: usize) -> Option<&KernelParam> {
        self.atoms.get(j, l).get(k).map(|a| &a.param)
    }

    /// Overwrite component `k` of pair `(j, l)`.
    pub fn set(&mut self, j: usize, l: usize, k: usize, param: KernelParam) -> Result<()> {
        let v = self.atoms.get_mut(j, l);
        match v.get_mut(k) {
            Some(slot) => {
                *slot = Atom::new(param);
                Ok(())
            }
            None => Err(Error::Invariant(format!(
                "atom ({j},{l},{k}) written beyond instantiated length {}",
                v.len()
            ))),
        }
    }

    pub fn push(&mut self, j: usize, l: usize, param: KernelParam) {
        self.atoms.get_mut(j, l).push(Atom::new(param));
    }

    /// Grow pair `(j, l)` to at least `len` atoms with fresh base-measure draws.
    pub fn ensure_len<R: Rng + ?Sized>(
        &mut self,
        j: usize,
        l: usize,
        len: usize,
        hyper: &BaseMeasureHyper,
        rng: &mut R,
    ) {
        let v = self.atoms.get_mut(j, l);
        while v.len() < len {
            v.push(Atom::new(sample_base_measure(hyper, rng)));
        }
    }

    pub fn truncate(&mut self, j: usize, l: usize, len: usize) {
        self.atoms.get_mut(j, l).truncate(len);
    }

    pub fn pairs(&self) -> impl Iterator<Item = PairIndex> + '_ {
        self.atoms.pairs()
    }

    pub(crate) fn pair_mut(&mut self, j: usize, l: usize) -> &mut Vec<Atom> {
        self.atoms.get_mut(j, l)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::chain_rng;

    #[test]
    fn index_is_symmetric_and_dense() {
        for m in 1..6 {
            let pm = PairMatrix::from_fn(m, |p| (p.lo(), p.hi()));
            for j in 0..m {
                for l in 0..m {
                    assert_eq!(*pm.get(j, l), (j.min(l), j.max(l)));
                }
            }
            assert_eq!(pm.values().len(), pair_count(m));
        }
    }

    #[test]
    fn atom_writes_alias_across_orientations() {
        let mut rng = chain_rng(0, 0);
        let mut t = AtomTable::empty(3);
        t.ensure_len(2, 0, 4, &BaseMeasureHyper::VAGUE, &mut rng);
        let theta = KernelParam::new(1.5, 2.0).unwrap();
        t.set(0, 2, 3, theta).unwrap();
        assert_eq!(t.get(2, 0, 3), Some(&theta));
        assert_eq!(t.len(0, 2), 4);
        assert!(t.set(1, 1, 0, theta).is_err());
    }

    #[test]
    fn ln_kernel_matches_density() {
        let theta = KernelParam::new(0.3, 4.0).unwrap();
        let a = Atom::new(theta);
        let direct = crate::distributions::normal_ln_pdf(1.1, &theta);
        assert!((a.ln_kernel(1.1) - direct).abs() < 1e-14);
    }
}
