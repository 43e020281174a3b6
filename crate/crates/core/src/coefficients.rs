//! Projection of a hermitian operator onto the canonical quadratic basis
//! {1, S_z, n_μ, n_μS_z, α₁†α₂(S_z), α_μ², α₁α₂, α_μ²S₊, α₁α₂S₊} and h.c.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::ser::SerializeMap;
use serde::{Serialize, Serializer};

use crate::hilbert::HilbertSpec;
use crate::models::{ModelParams, Ops};
use crate::operator::OperatorMatrix;
use crate::{Error, Result, C64};

/// Reconstruction tolerance relative to max(‖H‖_max, 1).
pub const RECONSTRUCTION_TOL: f64 = 1e-10;

/// Smallest cutoff whose interior (n₁+n₂ ≤ N_max−2) separates every label.
pub const MIN_CUTOFF: usize = 4;

/// Unexplained elements listed in a failed projection.
const REPORTED_ELEMENTS: usize = 5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Label {
    One,
    Sz,
    N1,
    N2,
    N1Sz,
    N2Sz,
    A1dA2,
    A2dA1,
    A1dA2Sz,
    A2dA1Sz,
    A1A1,
    A1dA1d,
    A2A2,
    A2dA2d,
    A1A2,
    A1dA2d,
    A1A1Sp,
    A1dA1dSm,
    A2A2Sp,
    A2dA2dSm,
    A1A2Sp,
    A1dA2dSm,
}

impl Label {
    pub const ALL: [Label; 22] = [
        Label::One,
        Label::Sz,
        Label::N1,
        Label::N2,
        Label::N1Sz,
        Label::N2Sz,
        Label::A1dA2,
        Label::A2dA1,
        Label::A1dA2Sz,
        Label::A2dA1Sz,
        Label::A1A1,
        Label::A1dA1d,
        Label::A2A2,
        Label::A2dA2d,
        Label::A1A2,
        Label::A1dA2d,
        Label::A1A1Sp,
        Label::A1dA1dSm,
        Label::A2A2Sp,
        Label::A2dA2dSm,
        Label::A1A2Sp,
        Label::A1dA2dSm,
    ];

    /// Labels that survive in the decoupled frame.
    pub const TARGET: [Label; 8] = [
        Label::One,
        Label::Sz,
        Label::N1,
        Label::N2,
        Label::N1Sz,
        Label::N2Sz,
        Label::A1A1Sp,
        Label::A1dA1dSm,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Label::One => "1",
            Label::Sz => "Sz",
            Label::N1 => "n1",
            Label::N2 => "n2",
            Label::N1Sz => "n1 Sz",
            Label::N2Sz => "n2 Sz",
            Label::A1dA2 => "a1† a2",
            Label::A2dA1 => "a2† a1",
            Label::A1dA2Sz => "a1† a2 Sz",
            Label::A2dA1Sz => "a2† a1 Sz",
            Label::A1A1 => "a1²",
            Label::A1dA1d => "a1†²",
            Label::A2A2 => "a2²",
            Label::A2dA2d => "a2†²",
            Label::A1A2 => "a1 a2",
            Label::A1dA2d => "a1† a2†",
            Label::A1A1Sp => "a1² S+",
            Label::A1dA1dSm => "a1†² S-",
            Label::A2A2Sp => "a2² S+",
            Label::A2dA2dSm => "a2†² S-",
            Label::A1A2Sp => "a1 a2 S+",
            Label::A1dA2dSm => "a1† a2† S-",
        }
    }

    /// The label of the adjoint operator.
    pub fn conjugate(self) -> Label {
        use Label::*;
        match self {
            One | Sz | N1 | N2 | N1Sz | N2Sz => self,
            A1dA2 => A2dA1,
            A2dA1 => A1dA2,
            A1dA2Sz => A2dA1Sz,
            A2dA1Sz => A1dA2Sz,
            A1A1 => A1dA1d,
            A1dA1d => A1A1,
            A2A2 => A2dA2d,
            A2dA2d => A2A2,
            A1A2 => A1dA2d,
            A1dA2d => A1A2,
            A1A1Sp => A1dA1dSm,
            A1dA1dSm => A1A1Sp,
            A2A2Sp => A2dA2dSm,
            A2dA2dSm => A2A2Sp,
            A1A2Sp => A1dA2dSm,
            A1dA2dSm => A1A2Sp,
        }
    }

    pub fn is_forbidden(self) -> bool {
        !Label::TARGET.contains(&self)
    }

    fn operator(self, o: &Ops) -> OperatorMatrix {
        use Label::*;
        let d = |x: &OperatorMatrix| x.adjoint();
        match self {
            One => o.id.clone(),
            Sz => o.sz.clone(),
            N1 => o.n1.clone(),
            N2 => o.n2.clone(),
            N1Sz => &o.n1 * &o.sz,
            N2Sz => &o.n2 * &o.sz,
            A1dA2 => &d(&o.a1) * &o.a2,
            A2dA1 => &d(&o.a2) * &o.a1,
            A1dA2Sz => &(&d(&o.a1) * &o.a2) * &o.sz,
            A2dA1Sz => &(&d(&o.a2) * &o.a1) * &o.sz,
            A1A1 => &o.a1 * &o.a1,
            A1dA1d => d(&(&o.a1 * &o.a1)),
            A2A2 => &o.a2 * &o.a2,
            A2dA2d => d(&(&o.a2 * &o.a2)),
            A1A2 => &o.a1 * &o.a2,
            A1dA2d => d(&(&o.a1 * &o.a2)),
            A1A1Sp => &(&o.a1 * &o.a1) * &o.sp,
            A1dA1dSm => &d(&(&o.a1 * &o.a1)) * &o.sm,
            A2A2Sp => &(&o.a2 * &o.a2) * &o.sp,
            A2dA2dSm => &d(&(&o.a2 * &o.a2)) * &o.sm,
            A1A2Sp => &(&o.a1 * &o.a2) * &o.sp,
            A1dA2dSm => &d(&(&o.a1 * &o.a2)) * &o.sm,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl Serialize for Label {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

/// Coefficients over every label (absent labels are zero) and the
/// reconstruction residual on the interior.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CoefficientTable {
    coefficients: BTreeMap<Label, C64>,
    pub residual: f64,
}

impl CoefficientTable {
    pub fn from_pairs<I: IntoIterator<Item = (Label, C64)>>(pairs: I) -> Self {
        let mut table = Self::default();
        for (label, c) in pairs {
            *table.coefficients.entry(label).or_default() += c;
        }
        table
    }

    /// c·X + c*·X† for every listed non-hermitian label.
    fn hermitian_from(self_adjoint: &[(Label, f64)], pairs: &[(Label, C64)]) -> Self {
        let real = self_adjoint.iter().map(|&(l, x)| (l, C64::from(x)));
        let upper = pairs.iter().copied();
        let lower = pairs.iter().map(|&(l, c)| (l.conjugate(), c.conj()));
        Self::from_pairs(real.chain(upper).chain(lower))
    }

    /// Analytic table of the effective two-photon Hamiltonian.
    pub fn quadratic_model(p: &ModelParams) -> Self {
        use Label::*;
        Self::hermitian_from(
            &[(Sz, p.omega0), (N1, p.omega), (N2, p.omega), (N1Sz, p.s), (N2Sz, p.s)],
            &[
                (A2dA1, C64::from(p.r1)),
                (A2dA1Sz, C64::from(p.r2)),
                (A1A1Sp, p.lambda1),
                (A2A2Sp, p.lambda2),
                (A1A2Sp, p.g),
            ],
        )
    }

    /// Analytic table of the decoupled form with Λ = λ₁.
    pub fn transformed_target(p: &ModelParams) -> Self {
        use Label::*;
        Self::hermitian_from(
            &[
                (Sz, p.omega0),
                (N1, p.omega - p.r1),
                (N1Sz, p.s - p.r2),
                (N2, p.omega + p.r1),
                (N2Sz, p.s + p.r2),
            ],
            &[(A1A1Sp, p.lambda1 * 2.0)],
        )
    }

    pub fn get(&self, label: Label) -> C64 {
        self.coefficients.get(&label).copied().unwrap_or_default()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Label, C64)> + '_ {
        Label::ALL.iter().map(|&l| (l, self.get(l)))
    }

    /// Largest |c_L − c*_{L†}|.
    pub fn pairing_residual(&self) -> f64 {
        self.iter()
            .map(|(l, c)| (c - self.get(l.conjugate()).conj()).norm())
            .fold(0.0, f64::max)
    }

    /// Largest coefficient magnitude outside the decoupled-frame labels.
    pub fn forbidden_residual(&self) -> f64 {
        self.iter()
            .filter(|(l, _)| l.is_forbidden())
            .map(|(_, c)| c.norm())
            .fold(0.0, f64::max)
    }

    /// Largest coefficient difference, labelwise.
    pub fn distance(&self, other: &Self) -> f64 {
        self.iter().map(|(l, c)| (c - other.get(l)).norm()).fold(0.0, f64::max)
    }

    /// Σ c_L·Op(L) on `space`.
    pub fn reconstruct(&self, space: &Arc<HilbertSpec>) -> OperatorMatrix {
        let ops = Ops::new(space);
        self.iter()
            .filter(|(_, c)| *c != C64::from(0.0))
            .map(|(l, c)| l.operator(&ops).scale(c))
            .sum()
    }
}

impl Serialize for CoefficientTable {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(Label::ALL.len()))?;
        for (l, c) in self.iter() {
            map.serialize_entry(l.name(), &[c.re, c.im])?;
        }
        map.end()
    }
}

/// Least-squares projection of `h` onto the canonical labels, fitted and
/// checked on matrix elements between interior states (n₁+n₂ ≤ N_max−2),
/// where every label acts without truncation artefacts.
pub fn extract_coefficients(space: &Arc<HilbertSpec>, h: &OperatorMatrix) -> Result<CoefficientTable> {
    if h.space().as_ref() != space.as_ref() {
        return Err(Error::SpaceMismatch);
    }
    if space.n_max() < MIN_CUTOFF {
        return Err(Error::InsufficientCutoff {
            n_max: space.n_max(),
            required: MIN_CUTOFF,
        });
    }
    if !h.is_hermitian() {
        return Err(Error::NotHermitian {
            residual: h.hermiticity_residual(),
        });
    }
    let interior: Vec<bool> = {
        let mut mask = vec![false; space.dim()];
        for i in space.interior(2) {
            mask[i] = true;
        }
        mask
    };
    let inside = |i: usize, j: usize| interior[i] && interior[j];

    let ops = Ops::new(space);
    let label_ops: Vec<OperatorMatrix> = Label::ALL.iter().map(|l| l.operator(&ops)).collect();

    let mut rows: HashMap<(usize, usize), usize> = HashMap::new();
    let mut order = Vec::new();
    for op in &label_ops {
        for (i, j, _) in op.entries() {
            if inside(i, j) && !rows.contains_key(&(i, j)) {
                rows.insert((i, j), order.len());
                order.push((i, j));
            }
        }
    }
    let mut design = DMatrix::<C64>::zeros(order.len(), Label::ALL.len());
    for (k, op) in label_ops.iter().enumerate() {
        for (i, j, z) in op.entries() {
            if let Some(&r) = rows.get(&(i, j)) {
                design[(r, k)] = z;
            }
        }
    }
    let target = DVector::from_iterator(order.len(), order.iter().map(|&(i, j)| h.entry_at(i, j)));
    let solution = design
        .clone()
        .svd(true, true)
        .solve(&target, 1e-14)
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;

    let mut table = CoefficientTable::from_pairs(Label::ALL.iter().copied().zip(solution.iter().copied()));

    let fitted = &design * &solution;
    let mut unexplained: Vec<(f64, usize, usize)> = order
        .iter()
        .zip(fitted.iter().zip(target.iter()))
        .map(|(&(i, j), (f, t))| ((f - t).norm(), i, j))
        .collect();
    unexplained.extend(
        h.entries()
            .filter(|&(i, j, _)| inside(i, j) && !rows.contains_key(&(i, j)))
            .map(|(i, j, z)| (z.norm(), i, j)),
    );
    unexplained.sort_by(|a, b| b.0.total_cmp(&a.0));
    table.residual = unexplained.first().map_or(0.0, |e| e.0);

    let scale = h.max_norm().max(1.0);
    if table.residual > RECONSTRUCTION_TOL * scale {
        let largest = unexplained
            .iter()
            .take(REPORTED_ELEMENTS)
            .map(|&(r, i, j)| format!("H[{}, {}] off by {r:.3e}", space.ket(i), space.ket(j)))
            .collect();
        return Err(Error::NotInQuadraticFamily {
            residual: table.residual,
            largest,
        });
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{build_linear_hamiltonian, build_quadratic_hamiltonian, build_transformed_target};

    fn generic() -> ModelParams {
        ModelParams {
            omega0: 2.3,
            omega: 1.1,
            s: 0.4,
            r1: -0.3,
            r2: 0.7,
            g: C64::new(0.8, -0.2),
            lambda1: C64::new(0.3, 0.1),
            lambda2: C64::new(-0.5, 0.6),
            ..ModelParams::default()
        }
    }

    #[test]
    fn conjugate_is_an_involution() {
        for l in Label::ALL {
            assert_eq!(l.conjugate().conjugate(), l);
            assert_eq!(l.is_forbidden(), l.conjugate().is_forbidden());
        }
    }

    #[test]
    fn identity_projects_to_one() {
        let sp = HilbertSpec::two_mode(5);
        let t = extract_coefficients(&sp, &OperatorMatrix::identity(&sp)).unwrap();
        for (l, c) in t.iter() {
            let expect = if l == Label::One { 1.0 } else { 0.0 };
            assert!((c - C64::from(expect)).norm() < 1e-14, "{l}: {c}");
        }
    }

    #[test]
    fn quadratic_round_trip() {
        let sp = HilbertSpec::two_mode(6);
        let p = generic();
        let h = build_quadratic_hamiltonian(&sp, &p).unwrap();
        let t = extract_coefficients(&sp, &h).unwrap();
        assert!(t.distance(&CoefficientTable::quadratic_model(&p)) < 1e-12);
        assert!(t.pairing_residual() < 1e-12);
        let back = t.reconstruct(&sp);
        for i in sp.interior(2) {
            for j in sp.interior(2) {
                assert!((back.entry_at(i, j) - h.entry_at(i, j)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn target_table_matches_builder() {
        let sp = HilbertSpec::two_mode(5);
        let p = generic().with_decoupling_constraint();
        let h = build_transformed_target(&sp, &p).unwrap();
        let t = extract_coefficients(&sp, &h).unwrap();
        assert!(t.distance(&CoefficientTable::transformed_target(&p)) < 1e-12);
        assert!(t.forbidden_residual() < 1e-14);
    }

    #[test]
    fn linear_model_is_rejected() {
        let sp = HilbertSpec::two_mode(5);
        let p = ModelParams {
            g1: C64::from(0.4),
            ..ModelParams::default()
        };
        let h = build_linear_hamiltonian(&sp, &p).unwrap();
        match extract_coefficients(&sp, &h) {
            Err(Error::NotInQuadraticFamily { residual, largest }) => {
                assert!((residual - 0.4 * 3f64.sqrt()).abs() < 1e-12, "{residual} {largest:?}");
                assert_eq!(largest.len(), REPORTED_ELEMENTS);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn small_cutoff_and_non_hermitian_are_rejected() {
        let sp = HilbertSpec::two_mode(3);
        let id = OperatorMatrix::identity(&sp);
        assert!(matches!(
            extract_coefficients(&sp, &id),
            Err(Error::InsufficientCutoff { required: 4, .. })
        ));
        let sp = HilbertSpec::two_mode(4);
        let a = crate::hilbert::annihilator(&sp, 1).unwrap();
        assert!(matches!(extract_coefficients(&sp, &a), Err(Error::NotHermitian { .. })));
    }
}
