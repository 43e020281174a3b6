//! Sector-sparse operator matrices.

use std::collections::BTreeMap;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::{Arc, OnceLock};

use nalgebra::{DMatrix, DVector};

use crate::hilbert::{Block, BlockDecomposition, HilbertSpec, Ket};
use crate::{Error, Result, C64};

/// Relative tolerance used to certify hermiticity.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Operator on a truncated space, stored as dense sub-matrices indexed by
/// (row sector, column sector). Absent pairs are zero.
#[derive(Clone, Debug)]
pub struct OperatorMatrix {
    space: Arc<HilbertSpec>,
    blocks: BTreeMap<(usize, usize), DMatrix<C64>>,
    hermitian: OnceLock<bool>,
}

impl OperatorMatrix {
    fn with_blocks(space: &Arc<HilbertSpec>, blocks: BTreeMap<(usize, usize), DMatrix<C64>>) -> Self {
        let mut op = OperatorMatrix {
            space: Arc::clone(space),
            blocks,
            hermitian: OnceLock::new(),
        };
        op.prune();
        op
    }

    fn prune(&mut self) {
        self.blocks.retain(|_, b| b.iter().any(|z| *z != C64::from(0.0)));
    }

    pub fn zeros(space: &Arc<HilbertSpec>) -> Self {
        Self::with_blocks(space, BTreeMap::new())
    }

    pub fn identity(space: &Arc<HilbertSpec>) -> Self {
        Self::diagonal(space, |_| C64::from(1.0))
    }

    /// Matrix of the operator defined by its action on basis kets. Output
    /// kets outside the truncation are dropped, so the result is the exact
    /// restriction of the untruncated operator.
    pub fn from_action<F>(space: &Arc<HilbertSpec>, action: F) -> Self
    where
        F: Fn(&Ket) -> Vec<(Ket, C64)>,
    {
        let mut blocks: BTreeMap<(usize, usize), DMatrix<C64>> = BTreeMap::new();
        for (col, ket) in space.kets().iter().enumerate() {
            let (cs, cl) = space.locate(col);
            for (out, amp) in action(ket) {
                let Some(row) = space.index_of(&out) else { continue };
                let (rs, rl) = space.locate(row);
                let block = blocks
                    .entry((rs, cs))
                    .or_insert_with(|| DMatrix::zeros(space.sector(rs).len(), space.sector(cs).len()));
                block[(rl, cl)] += amp;
            }
        }
        Self::with_blocks(space, blocks)
    }

    pub fn diagonal<F>(space: &Arc<HilbertSpec>, value: F) -> Self
    where
        F: Fn(&Ket) -> C64,
    {
        Self::from_action(space, |k| vec![(*k, value(k))])
    }

    pub fn from_dense(space: &Arc<HilbertSpec>, dense: &DMatrix<C64>) -> Result<Self> {
        if dense.nrows() != space.dim() || dense.ncols() != space.dim() {
            return Err(Error::DimensionMismatch {
                expected: space.dim(),
                found: dense.nrows().max(dense.ncols()),
            });
        }
        let mut blocks = BTreeMap::new();
        for rs in 0..space.sector_count() {
            for cs in 0..space.sector_count() {
                let (rows, cols) = (space.sector(rs), space.sector(cs));
                let b = DMatrix::from_fn(rows.len(), cols.len(), |i, j| dense[(rows[i], cols[j])]);
                blocks.insert((rs, cs), b);
            }
        }
        Ok(Self::with_blocks(space, blocks))
    }

    /// Reassemble an operator from one dense matrix per block of `decomposition`.
    pub fn from_block_matrices(
        space: &Arc<HilbertSpec>,
        decomposition: &BlockDecomposition,
        matrices: &[DMatrix<C64>],
    ) -> Result<Self> {
        if decomposition.dim() != space.dim() || matrices.len() != decomposition.blocks.len() {
            return Err(Error::DimensionMismatch {
                expected: decomposition.blocks.len(),
                found: matrices.len(),
            });
        }
        let mut blocks: BTreeMap<(usize, usize), DMatrix<C64>> = BTreeMap::new();
        for (block, m) in decomposition.blocks.iter().zip(matrices) {
            if m.nrows() != block.len() || m.ncols() != block.len() {
                return Err(Error::DimensionMismatch {
                    expected: block.len(),
                    found: m.nrows(),
                });
            }
            for (q, &col) in block.indices.iter().enumerate() {
                let (cs, cl) = space.locate(col);
                for (p, &row) in block.indices.iter().enumerate() {
                    let z = m[(p, q)];
                    if z == C64::from(0.0) {
                        continue;
                    }
                    let (rs, rl) = space.locate(row);
                    blocks
                        .entry((rs, cs))
                        .or_insert_with(|| DMatrix::zeros(space.sector(rs).len(), space.sector(cs).len()))[(rl, cl)] =
                        z;
                }
            }
        }
        Ok(Self::with_blocks(space, blocks))
    }

    pub fn space(&self) -> &Arc<HilbertSpec> {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    /// Number of stored sector pairs.
    pub fn stored_blocks(&self) -> usize {
        self.blocks.len()
    }

    fn check_space(&self, other: &Self) -> Result<()> {
        if Arc::ptr_eq(&self.space, &other.space) || *self.space == *other.space {
            Ok(())
        } else {
            Err(Error::SpaceMismatch)
        }
    }

    /// Iterator over nonzero entries as (row, column, value) global indices.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        self.blocks.iter().flat_map(move |(&(rs, cs), b)| {
            let rows = self.space.sector(rs);
            let cols = self.space.sector(cs);
            (0..b.ncols()).flat_map(move |j| {
                (0..b.nrows()).filter_map(move |i| {
                    let z = b[(i, j)];
                    (z != C64::from(0.0)).then_some((rows[i], cols[j], z))
                })
            })
        })
    }

    pub fn entry(&self, row: &Ket, col: &Ket) -> C64 {
        let (Some(r), Some(c)) = (self.space.index_of(row), self.space.index_of(col)) else {
            return C64::from(0.0);
        };
        self.entry_at(r, c)
    }

    pub fn entry_at(&self, row: usize, col: usize) -> C64 {
        let (rs, rl) = self.space.locate(row);
        let (cs, cl) = self.space.locate(col);
        self.blocks.get(&(rs, cs)).map_or(C64::from(0.0), |b| b[(rl, cl)])
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let mut m = DMatrix::zeros(self.dim(), self.dim());
        for (i, j, z) in self.entries() {
            m[(i, j)] = z;
        }
        m
    }

    /// Largest entry magnitude.
    pub fn max_norm(&self) -> f64 {
        self.blocks
            .values()
            .flat_map(|b| b.iter())
            .fold(0.0, |acc, z| acc.max(z.norm()))
    }

    pub fn scale(&self, factor: C64) -> Self {
        let blocks = self.blocks.iter().map(|(&k, b)| (k, b * factor)).collect();
        Self::with_blocks(&self.space, blocks)
    }

    pub fn adjoint(&self) -> Self {
        let blocks = self.blocks.iter().map(|(&(r, c), b)| ((c, r), b.adjoint())).collect();
        Self::with_blocks(&self.space, blocks)
    }

    fn combine(&self, other: &Self, sign: f64) -> Self {
        self.check_space(other).expect("operator spaces differ");
        let mut blocks = self.blocks.clone();
        for (&k, b) in &other.blocks {
            match blocks.get_mut(&k) {
                Some(acc) => *acc += b * C64::from(sign),
                None => {
                    blocks.insert(k, b * C64::from(sign));
                }
            }
        }
        Self::with_blocks(&self.space, blocks)
    }

    fn product(&self, other: &Self) -> Self {
        self.check_space(other).expect("operator spaces differ");
        let mut blocks: BTreeMap<(usize, usize), DMatrix<C64>> = BTreeMap::new();
        for (&(i, k), a) in &self.blocks {
            for (&(_, j), b) in other.blocks.range((k, 0)..=(k, usize::MAX)) {
                let ab = a * b;
                match blocks.get_mut(&(i, j)) {
                    Some(acc) => *acc += ab,
                    None => {
                        blocks.insert((i, j), ab);
                    }
                }
            }
        }
        Self::with_blocks(&self.space, blocks)
    }

    pub fn commutator(a: &Self, b: &Self) -> Self {
        &(a * b) - &(b * a)
    }

    /// ‖A − A†‖_max
    pub fn hermiticity_residual(&self) -> f64 {
        (self - &self.adjoint()).max_norm()
    }

    /// Certified against ‖A − A†‖_max ≤ 10⁻¹²·‖A‖_max; cached.
    pub fn is_hermitian(&self) -> bool {
        *self
            .hermitian
            .get_or_init(|| self.hermiticity_residual() <= HERMITIAN_TOL * self.max_norm())
    }

    /// ‖U†U − 1‖_max
    pub fn unitarity_residual(&self) -> f64 {
        (&(&self.adjoint() * self) - &Self::identity(&self.space)).max_norm()
    }

    pub fn apply(&self, psi: &DVector<C64>) -> DVector<C64> {
        assert_eq!(psi.len(), self.dim(), "state dimension mismatch");
        let mut out = DVector::zeros(self.dim());
        for (&(rs, cs), b) in &self.blocks {
            let cols = self.space.sector(cs);
            let x = DVector::from_iterator(cols.len(), cols.iter().map(|&c| psi[c]));
            let y = b * x;
            for (&r, z) in self.space.sector(rs).iter().zip(y.iter()) {
                out[r] += *z;
            }
        }
        out
    }

    /// ⟨ψ|A|ψ⟩
    pub fn expectation(&self, psi: &DVector<C64>) -> C64 {
        psi.dotc(&self.apply(psi))
    }

    /// Dense sub-matrix on the index set of `block`.
    pub fn restrict(&self, block: &Block) -> DMatrix<C64> {
        let mut local = vec![usize::MAX; self.dim()];
        for (p, &i) in block.indices.iter().enumerate() {
            local[i] = p;
        }
        let mut m = DMatrix::zeros(block.len(), block.len());
        for (i, j, z) in self.entries() {
            if local[i] != usize::MAX && local[j] != usize::MAX {
                m[(local[i], local[j])] = z;
            }
        }
        m
    }

    /// Largest entry connecting two different blocks.
    pub fn off_block_norm(&self, decomposition: &BlockDecomposition) -> f64 {
        self.entries()
            .filter(|&(i, j, _)| decomposition.position(i).0 != decomposition.position(j).0)
            .fold(0.0, |acc, (_, _, z)| acc.max(z.norm()))
    }

    pub fn is_block_diagonal(&self, decomposition: &BlockDecomposition) -> bool {
        self.off_block_norm(decomposition) == 0.0
    }
}

impl<'a> Add<&'a OperatorMatrix> for &'a OperatorMatrix {
    type Output = OperatorMatrix;
    fn add(self, rhs: &'a OperatorMatrix) -> OperatorMatrix {
        self.combine(rhs, 1.0)
    }
}

impl<'a> Sub<&'a OperatorMatrix> for &'a OperatorMatrix {
    type Output = OperatorMatrix;
    fn sub(self, rhs: &'a OperatorMatrix) -> OperatorMatrix {
        self.combine(rhs, -1.0)
    }
}

impl<'a> Mul<&'a OperatorMatrix> for &'a OperatorMatrix {
    type Output = OperatorMatrix;
    fn mul(self, rhs: &'a OperatorMatrix) -> OperatorMatrix {
        self.product(rhs)
    }
}

impl Neg for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn neg(self) -> OperatorMatrix {
        self.scale(C64::from(-1.0))
    }
}

impl std::iter::Sum for OperatorMatrix {
    fn sum<I: Iterator<Item = OperatorMatrix>>(mut iter: I) -> Self {
        let first = iter.next().expect("sum of an empty operator list");
        iter.fold(first, |acc, op| &acc + &op)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{annihilator, excitation_blocks, ConservedQuantity};

    #[test]
    fn dense_round_trip_and_products() {
        let sp = HilbertSpec::two_mode(4);
        let a1 = annihilator(&sp, 1).unwrap();
        let a2 = annihilator(&sp, 2).unwrap();
        let x = &(&a1.adjoint() * &a2) + &a1;
        let back = OperatorMatrix::from_dense(&sp, &x.to_dense()).unwrap();
        assert_eq!((&back - &x).max_norm(), 0.0);
        let dense = &x.to_dense() * &a2.adjoint().to_dense();
        assert_eq!(((&x * &a2.adjoint()).to_dense() - dense).camax(), 0.0);
        let v = DVector::from_fn(sp.dim(), |i, _| C64::new(i as f64, 1.0));
        assert_eq!((x.apply(&v) - x.to_dense() * &v).camax(), 0.0);
    }

    #[test]
    fn restrict_identity_and_graded_operator() {
        let sp = HilbertSpec::two_mode(5);
        let bd = excitation_blocks(&sp, ConservedQuantity::TotalPhoton);
        let id = OperatorMatrix::identity(&sp);
        let a1 = annihilator(&sp, 1).unwrap();
        for b in &bd.blocks {
            assert_eq!(id.restrict(b), DMatrix::identity(b.len(), b.len()));
            assert_eq!(a1.restrict(b).camax(), 0.0);
        }
        assert!(!a1.is_block_diagonal(&bd));
        let mats: Vec<_> = bd.blocks.iter().map(|b| id.restrict(b)).collect();
        let back = OperatorMatrix::from_block_matrices(&sp, &bd, &mats).unwrap();
        assert_eq!((&back - &id).max_norm(), 0.0);
    }

    #[test]
    fn hermitian_flag() {
        let sp = HilbertSpec::two_mode(3);
        let a1 = annihilator(&sp, 1).unwrap();
        assert!(!a1.is_hermitian());
        assert!((&a1 + &a1.adjoint()).is_hermitian());
        assert!(OperatorMatrix::zeros(&sp).is_hermitian());
    }

    #[test]
    fn rejects_wrong_dimension() {
        let sp = HilbertSpec::two_mode(2);
        assert!(OperatorMatrix::from_dense(&sp, &DMatrix::zeros(3, 3)).is_err());
    }
}
