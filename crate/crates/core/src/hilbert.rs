//! Truncated two-mode ⊗ two-level Hilbert space.
//!
//! The field is truncated on the photon simplex n₁+n₂ ≤ N_max. Every
//! passive mode operation and every term of the two-photon Hamiltonian is
//! block diagonal or block graded in n₁+n₂, so products written in normal
//! order (annihilators to the right) are exact on this space.
//!
//! Basis order: kets sorted by (n₁+n₂, n₁, σ) with σ = − before σ = +.
//! Internally the basis is grouped into *sectors* of fixed (n₁+n₂, σ);
//! operators are stored as dense matrices per (row sector, column sector).

use std::fmt;
use std::sync::Arc;

use crate::operator::OperatorMatrix;
use crate::{Error, Result, C64};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Spin {
    /// Ground level |−⟩.
    Down,
    /// Excited level |+⟩.
    Up,
}

impl Spin {
    pub fn sz(self) -> f64 {
        match self {
            Spin::Down => -0.5,
            Spin::Up => 0.5,
        }
    }

    /// S_z + ½: 0 for |−⟩, 1 for |+⟩.
    pub fn excitation(self) -> usize {
        self as usize
    }

    pub fn symbol(self) -> char {
        match self {
            Spin::Down => '-',
            Spin::Up => '+',
        }
    }

    const ALL: [Spin; 2] = [Spin::Down, Spin::Up];
}

/// Basis ket |n₁, n₂, σ⟩.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Ket {
    pub n1: usize,
    pub n2: usize,
    pub spin: Spin,
}

impl Ket {
    pub const fn new(n1: usize, n2: usize, spin: Spin) -> Self {
        Ket { n1, n2, spin }
    }

    pub fn photons(&self) -> usize {
        self.n1 + self.n2
    }

    pub fn with_spin(self, spin: Spin) -> Self {
        Ket { spin, ..self }
    }
}

impl fmt::Display for Ket {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|{},{},{}⟩", self.n1, self.n2, self.spin.symbol())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Modes {
    One,
    Two,
}

/// Truncated space with a deterministic basis enumeration.
#[derive(Debug)]
pub struct HilbertSpec {
    n_max: usize,
    modes: Modes,
    spin_ladder_scale: f64,
    kets: Vec<Ket>,
    /// sector id → global indices, ordered by n₁.
    sectors: Vec<Vec<usize>>,
    /// global index → (sector id, position inside the sector)
    locate: Vec<(usize, usize)>,
}

impl PartialEq for HilbertSpec {
    fn eq(&self, other: &Self) -> bool {
        self.n_max == other.n_max && self.modes == other.modes && self.spin_ladder_scale == other.spin_ladder_scale
    }
}

impl HilbertSpec {
    /// Two-mode space with n₁+n₂ ≤ `n_max`.
    pub fn two_mode(n_max: usize) -> Arc<Self> {
        Self::build(n_max, Modes::Two, 1.0)
    }

    /// One mode ⊗ atom, n₁ ≤ `n_max` (n₂ pinned to 0).
    pub fn single_mode(n_max: usize) -> Arc<Self> {
        Self::build(n_max, Modes::One, 1.0)
    }

    /// Same geometry with S₊|−⟩ = `scale`·|+⟩. The standard su(2) ladder is
    /// scale 1; ½ reproduces the literal two-level normalization that
    /// rescales every atom-field coupling by ½.
    pub fn with_spin_ladder_scale(&self, scale: f64) -> Result<Arc<Self>> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "spin_ladder_scale must be positive, got {scale}"
            )));
        }
        Ok(Self::build(self.n_max, self.modes, scale))
    }

    fn build(n_max: usize, modes: Modes, spin_ladder_scale: f64) -> Arc<Self> {
        let mut kets = Vec::new();
        for m in 0..=n_max {
            let n1_range = match modes {
                Modes::Two => 0..=m,
                Modes::One => m..=m,
            };
            for n1 in n1_range {
                for spin in Spin::ALL {
                    kets.push(Ket::new(n1, m - n1, spin));
                }
            }
        }
        let mut sectors = vec![Vec::new(); 2 * (n_max + 1)];
        let mut locate = Vec::with_capacity(kets.len());
        for (i, ket) in kets.iter().enumerate() {
            let s = Self::sector_id(ket);
            locate.push((s, sectors[s].len()));
            sectors[s].push(i);
        }
        Arc::new(HilbertSpec {
            n_max,
            modes,
            spin_ladder_scale,
            kets,
            sectors,
            locate,
        })
    }

    fn sector_id(ket: &Ket) -> usize {
        2 * ket.photons() + ket.spin.excitation()
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn modes(&self) -> Modes {
        self.modes
    }

    pub fn spin_ladder_scale(&self) -> f64 {
        self.spin_ladder_scale
    }

    pub fn dim(&self) -> usize {
        self.kets.len()
    }

    pub fn kets(&self) -> &[Ket] {
        &self.kets
    }

    pub fn ket(&self, index: usize) -> Ket {
        self.kets[index]
    }

    /// Closed-form inverse of the enumeration; `None` outside the truncation.
    pub fn index_of(&self, ket: &Ket) -> Option<usize> {
        let m = ket.photons();
        if m > self.n_max {
            return None;
        }
        let s = ket.spin.excitation();
        match self.modes {
            Modes::Two => Some(m * (m + 1) + 2 * ket.n1 + s),
            Modes::One if ket.n2 == 0 => Some(2 * m + s),
            Modes::One => None,
        }
    }

    pub fn contains(&self, ket: &Ket) -> bool {
        self.index_of(ket).is_some()
    }

    pub(crate) fn sector_count(&self) -> usize {
        self.sectors.len()
    }

    pub(crate) fn sector(&self, id: usize) -> &[usize] {
        &self.sectors[id]
    }

    pub(crate) fn locate(&self, index: usize) -> (usize, usize) {
        self.locate[index]
    }

    /// Basis states with n₁+n₂ ≤ N_max − `margin`.
    pub fn interior(&self, margin: usize) -> Vec<usize> {
        let limit = self.n_max.checked_sub(margin);
        self.kets
            .iter()
            .enumerate()
            .filter(|(_, k)| limit.is_some_and(|l| k.photons() <= l))
            .map(|(i, _)| i)
            .collect()
    }
}

/// Validating constructor for the two-mode space.
pub fn make_space(n_max: i64) -> Result<Arc<HilbertSpec>> {
    usize::try_from(n_max)
        .map(HilbertSpec::two_mode)
        .map_err(|_| Error::NegativeCutoff(n_max))
}

/// Bose annihilator α_μ, μ ∈ {1, 2}.
pub fn annihilator(space: &Arc<HilbertSpec>, mode: usize) -> Result<OperatorMatrix> {
    let lower: fn(&Ket) -> Option<(Ket, usize)> = match mode {
        1 => |k: &Ket| (k.n1 > 0).then(|| (Ket { n1: k.n1 - 1, ..*k }, k.n1)),
        2 => |k: &Ket| (k.n2 > 0).then(|| (Ket { n2: k.n2 - 1, ..*k }, k.n2)),
        _ => return Err(Error::InvalidMode(mode)),
    };
    Ok(OperatorMatrix::from_action(space, |k| {
        lower(k)
            .map(|(out, n)| vec![(out, C64::from((n as f64).sqrt()))])
            .unwrap_or_default()
    }))
}

/// n_μ = α_μ†α_μ, built diagonally.
pub fn number(space: &Arc<HilbertSpec>, mode: usize) -> Result<OperatorMatrix> {
    match mode {
        1 => Ok(OperatorMatrix::diagonal(space, |k| C64::from(k.n1 as f64))),
        2 => Ok(OperatorMatrix::diagonal(space, |k| C64::from(k.n2 as f64))),
        _ => Err(Error::InvalidMode(mode)),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpinOp {
    Z,
    Plus,
    Minus,
}

/// S_z|±⟩ = ±½|±⟩, S₊|−⟩ = κ|+⟩, S₋ = S₊† with κ the space's ladder scale.
pub fn spin_operator(space: &Arc<HilbertSpec>, which: SpinOp) -> OperatorMatrix {
    let kappa = C64::from(space.spin_ladder_scale());
    match which {
        SpinOp::Z => OperatorMatrix::diagonal(space, |k| C64::from(k.spin.sz())),
        SpinOp::Plus => OperatorMatrix::from_action(space, |k| match k.spin {
            Spin::Down => vec![(k.with_spin(Spin::Up), kappa)],
            Spin::Up => vec![],
        }),
        SpinOp::Minus => OperatorMatrix::from_action(space, |k| match k.spin {
            Spin::Up => vec![(k.with_spin(Spin::Down), kappa)],
            Spin::Down => vec![],
        }),
    }
}

/// Quantity whose eigenvalues label the blocks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ConservedQuantity {
    /// n₁+n₂
    TotalPhoton,
    /// n₁+n₂+2(S_z+½), conserved by the two-photon Hamiltonian.
    TotalExcitation,
    /// n₁+n₂+(S_z+½), conserved by the one-photon Hamiltonian.
    SingleExcitation,
    /// n₂, conserved in the decoupled frame.
    Mode2Photon,
    /// Whole space as one block.
    Trivial,
}

impl ConservedQuantity {
    pub fn value(self, ket: &Ket) -> usize {
        match self {
            Self::TotalPhoton => ket.photons(),
            Self::TotalExcitation => ket.photons() + 2 * ket.spin.excitation(),
            Self::SingleExcitation => ket.photons() + ket.spin.excitation(),
            Self::Mode2Photon => ket.n2,
            Self::Trivial => 0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::TotalPhoton => "total photon number",
            Self::TotalExcitation => "two-photon excitation number",
            Self::SingleExcitation => "one-photon excitation number",
            Self::Mode2Photon => "mode-2 photon number",
            Self::Trivial => "trivial grading",
        }
    }

    /// Diagonal operator whose eigenvalues are the block labels.
    pub fn operator(self, space: &Arc<HilbertSpec>) -> OperatorMatrix {
        OperatorMatrix::diagonal(space, |k| C64::from(self.value(k) as f64))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Block {
    pub value: usize,
    /// Global basis indices, ascending.
    pub indices: Vec<usize>,
}

impl Block {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// Partition of the basis by the eigenvalue of a conserved quantity.
#[derive(Clone, Debug)]
pub struct BlockDecomposition {
    pub quantity: ConservedQuantity,
    pub blocks: Vec<Block>,
    /// global index → (block position, position inside block)
    position: Vec<(usize, usize)>,
}

impl BlockDecomposition {
    pub fn dim(&self) -> usize {
        self.position.len()
    }

    pub fn position(&self, index: usize) -> (usize, usize) {
        self.position[index]
    }

    pub fn block_with_value(&self, value: usize) -> Option<&Block> {
        self.blocks.iter().find(|b| b.value == value)
    }

    /// Σ size³, the cost proxy for per-block dense diagonalization.
    pub fn cost(&self) -> usize {
        self.blocks.iter().map(|b| b.len().pow(3)).sum()
    }
}

pub fn excitation_blocks(space: &HilbertSpec, kind: ConservedQuantity) -> BlockDecomposition {
    let mut values: Vec<usize> = space.kets().iter().map(|k| kind.value(k)).collect();
    let labels = values.clone();
    values.sort_unstable();
    values.dedup();
    let mut blocks: Vec<Block> = values
        .iter()
        .map(|&value| Block {
            value,
            indices: Vec::new(),
        })
        .collect();
    let mut position = Vec::with_capacity(space.dim());
    for (i, label) in labels.iter().enumerate() {
        let b = values.binary_search(label).expect("label enumerated above");
        position.push((b, blocks[b].indices.len()));
        blocks[b].indices.push(i);
    }
    BlockDecomposition {
        quantity: kind,
        blocks,
        position,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense(op: &OperatorMatrix) -> nalgebra::DMatrix<C64> {
        op.to_dense()
    }

    #[test]
    fn dimensions() {
        assert_eq!(make_space(0).unwrap().dim(), 2);
        assert_eq!(make_space(1).unwrap().dim(), 6);
        // 2·(11·12/2)
        assert_eq!(make_space(10).unwrap().dim(), 132);
        assert!(matches!(make_space(-1), Err(Error::NegativeCutoff(-1))));
        let sp = make_space(0).unwrap();
        assert_eq!(sp.ket(0), Ket::new(0, 0, Spin::Down));
        assert_eq!(sp.ket(1), Ket::new(0, 0, Spin::Up));
        assert_eq!(HilbertSpec::single_mode(4).dim(), 10);
    }

    #[test]
    fn enumeration_is_sorted_and_bijective() {
        for space in [HilbertSpec::two_mode(7), HilbertSpec::single_mode(7)] {
            let key = |k: &Ket| (k.photons(), k.n1, k.spin);
            for (i, k) in space.kets().iter().enumerate() {
                assert_eq!(space.index_of(k), Some(i));
                if i > 0 {
                    assert!(key(&space.ket(i - 1)) < key(k));
                }
            }
        }
        let sp = HilbertSpec::two_mode(3);
        assert_eq!(sp.index_of(&Ket::new(2, 2, Spin::Down)), None);
        assert_eq!(HilbertSpec::single_mode(3).index_of(&Ket::new(0, 1, Spin::Up)), None);
    }

    #[test]
    fn annihilator_elements() {
        let sp = HilbertSpec::two_mode(6);
        let a1 = annihilator(&sp, 1).unwrap();
        let a2 = annihilator(&sp, 2).unwrap();
        assert_eq!(
            a1.entry(&Ket::new(0, 0, Spin::Down), &Ket::new(1, 0, Spin::Down)),
            C64::from(1.0)
        );
        assert_eq!(
            a2.entry(&Ket::new(3, 2, Spin::Up), &Ket::new(3, 3, Spin::Up)),
            C64::from(3f64.sqrt())
        );
        for n2 in 0..=6 {
            for spin in Spin::ALL {
                let col = sp.index_of(&Ket::new(0, n2, spin)).unwrap();
                assert!(dense(&a1).column(col).iter().all(|z| *z == C64::from(0.0)));
            }
        }
        assert!(matches!(annihilator(&sp, 3), Err(Error::InvalidMode(3))));
        // every element is real and non-negative
        for op in [&a1, &a2] {
            assert!(dense(op).iter().all(|z| z.im == 0.0 && z.re >= 0.0));
        }
    }

    #[test]
    fn spin_algebra() {
        let sp = HilbertSpec::two_mode(2);
        let sz = spin_operator(&sp, SpinOp::Z);
        let up = Ket::new(1, 0, Spin::Up);
        assert_eq!(sz.entry(&up, &up), C64::from(0.5));
        let plus = spin_operator(&sp, SpinOp::Plus);
        let minus = spin_operator(&sp, SpinOp::Minus);
        assert_eq!((&plus * &plus).max_norm(), 0.0);
        let comm = OperatorMatrix::commutator(&plus, &minus);
        assert_eq!((&comm - &sz.scale(C64::from(2.0))).max_norm(), 0.0);
        assert_eq!((&minus - &plus.adjoint()).max_norm(), 0.0);
    }

    #[test]
    fn ladder_scale_rescales_commutator() {
        let sp = HilbertSpec::two_mode(1).with_spin_ladder_scale(0.5).unwrap();
        let plus = spin_operator(&sp, SpinOp::Plus);
        let minus = spin_operator(&sp, SpinOp::Minus);
        let sz = spin_operator(&sp, SpinOp::Z);
        let comm = OperatorMatrix::commutator(&plus, &minus);
        assert!((&comm - &sz.scale(C64::from(0.5))).max_norm() < 1e-15);
        assert!(HilbertSpec::two_mode(1).with_spin_ladder_scale(-1.0).is_err());
    }

    #[test]
    fn blocks() {
        let sp = HilbertSpec::two_mode(1);
        let bd = excitation_blocks(&sp, ConservedQuantity::TotalPhoton);
        let sizes: Vec<(usize, usize)> = bd.blocks.iter().map(|b| (b.value, b.len())).collect();
        assert_eq!(sizes, vec![(0, 2), (1, 4)]);

        let sp = HilbertSpec::two_mode(2);
        let bd = excitation_blocks(&sp, ConservedQuantity::TotalExcitation);
        let mut kets: Vec<Ket> = bd
            .block_with_value(2)
            .unwrap()
            .indices
            .iter()
            .map(|&i| sp.ket(i))
            .collect();
        kets.sort_by_key(|k| (k.spin, k.n2));
        assert_eq!(
            kets,
            vec![
                Ket::new(2, 0, Spin::Down),
                Ket::new(1, 1, Spin::Down),
                Ket::new(0, 2, Spin::Down),
                Ket::new(0, 0, Spin::Up),
            ]
        );
    }

    #[test]
    fn blocks_partition_the_basis() {
        use ConservedQuantity::*;
        for n_max in 0..7 {
            let sp = HilbertSpec::two_mode(n_max);
            for kind in [TotalPhoton, TotalExcitation, SingleExcitation, Mode2Photon, Trivial] {
                let bd = excitation_blocks(&sp, kind);
                let mut all: Vec<usize> = bd.blocks.iter().flat_map(|b| b.indices.clone()).collect();
                all.sort_unstable();
                assert_eq!(all, (0..sp.dim()).collect::<Vec<_>>());
            }
        }
    }

    #[test]
    fn ccr_on_interior_and_mode_commutation() {
        let sp = HilbertSpec::two_mode(5);
        let a = [annihilator(&sp, 1).unwrap(), annihilator(&sp, 2).unwrap()];
        let id = OperatorMatrix::identity(&sp);
        let interior = sp.interior(1);
        for mu in 0..2 {
            for nu in 0..2 {
                let ccr = OperatorMatrix::commutator(&a[mu], &a[nu].adjoint());
                let expected = if mu == nu {
                    id.clone()
                } else {
                    OperatorMatrix::zeros(&sp)
                };
                let diff = dense(&(&ccr - &expected));
                for &j in &interior {
                    assert!(diff.column(j).iter().all(|z| z.norm() < 1e-14), "ccr {mu}{nu} col {j}");
                }
                // deviations live on the shell
                if mu == nu {
                    assert!(diff.camax() > 0.5);
                }
                if mu != nu {
                    // exact on the whole truncated space
                    assert_eq!(OperatorMatrix::commutator(&a[mu], &a[nu]).max_norm(), 0.0);
                    let up = OperatorMatrix::commutator(&a[mu].adjoint(), &a[nu].adjoint());
                    assert_eq!(up.max_norm(), 0.0);
                    let n = &a[mu].adjoint() * &a[mu];
                    assert_eq!(OperatorMatrix::commutator(&n, &a[nu]).max_norm(), 0.0);
                }
            }
        }
    }
}
