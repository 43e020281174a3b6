//! Hamiltonians of the bimodal cavity: the one-photon model, the effective
//! two-photon model, its decoupled form and the reduced one-mode model.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::hilbert::{annihilator, number, spin_operator, HilbertSpec, Modes, SpinOp};
use crate::operator::OperatorMatrix;
use crate::{Error, Result, C64};

/// Relative tolerance of the λ₁ = λ₂ = −g/2 check.
pub const CONSTRAINT_TOL: f64 = 1e-12;

/// Coupling constants, ħ = 1.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelParams {
    /// Atomic splitting ω₀.
    pub omega0: f64,
    /// Common mode frequency ω.
    pub omega: f64,
    /// Stark coefficient.
    pub s: f64,
    /// Rayleigh coefficients.
    pub r1: f64,
    pub r2: f64,
    /// Intermode two-photon coupling.
    pub g: C64,
    pub lambda1: C64,
    pub lambda2: C64,
    /// One-photon couplings of the linear model.
    pub g1: C64,
    pub g2: C64,
    /// Demand ω₀ = 2ω exactly.
    pub enforce_resonance: bool,
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams {
            omega0: 2.0,
            omega: 1.0,
            s: 0.0,
            r1: 0.0,
            r2: 0.0,
            g: C64::from(0.0),
            lambda1: C64::from(0.0),
            lambda2: C64::from(0.0),
            g1: C64::from(0.0),
            g2: C64::from(0.0),
            enforce_resonance: false,
        }
    }
}

impl ModelParams {
    /// Resonant, decoupling-compatible parameters in the dispersive Stark
    /// regime where the parity-dependent revival is visible: g = 1,
    /// λ₁ = λ₂ = −½, s = 4, r₂ = g²/s.
    pub fn parity_default() -> Self {
        ModelParams {
            g: C64::from(1.0),
            lambda1: C64::from(-0.5),
            lambda2: C64::from(-0.5),
            s: 4.0,
            r2: 0.25,
            enforce_resonance: true,
            ..Self::default()
        }
    }

    /// Copy with λ₁ = λ₂ = −g/2.
    pub fn with_decoupling_constraint(mut self) -> Self {
        self.lambda1 = -self.g * 0.5;
        self.lambda2 = self.lambda1;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let reals = [self.omega0, self.omega, self.s, self.r1, self.r2];
        let complexes = [self.g, self.lambda1, self.lambda2, self.g1, self.g2];
        if reals.iter().any(|x| !x.is_finite()) || complexes.iter().any(|z| !z.is_finite()) {
            return Err(Error::InvalidArgument("model parameters must be finite".into()));
        }
        if self.enforce_resonance && self.omega0 != 2.0 * self.omega {
            return Err(Error::InvalidArgument(format!(
                "resonance enforced but omega0 = {} ≠ 2·omega = {}",
                self.omega0,
                2.0 * self.omega
            )));
        }
        Ok(())
    }

    /// Scale for the λ₁ = λ₂ = −g/2 comparison.
    fn coupling_scale(&self) -> f64 {
        [self.g.norm(), self.lambda1.norm(), self.lambda2.norm(), 1.0]
            .into_iter()
            .fold(0.0, f64::max)
    }

    /// Checks λ₁ = λ₂ and λ₁ = −g/2; names the first violated relation.
    pub fn check_decoupling(&self) -> Result<()> {
        let tol = CONSTRAINT_TOL * self.coupling_scale();
        let d12 = (self.lambda1 - self.lambda2).norm();
        if d12 > tol {
            return Err(Error::ConstraintViolation {
                relation: "λ₁ = λ₂",
                residual: d12,
            });
        }
        let dg = (self.lambda1 + self.g * 0.5).norm();
        if dg > tol {
            return Err(Error::ConstraintViolation {
                relation: "λ₁ = −g/2",
                residual: dg,
            });
        }
        Ok(())
    }

    /// Flat key-value pairs, in the order used by every file header.
    pub fn to_pairs(&self) -> Vec<(&'static str, String)> {
        ModelSection::from(*self).pairs()
    }
}

/// Flat serialized form: complex couplings as `_re`/`_im` pairs.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    #[serde(default = "two")]
    pub omega0: f64,
    #[serde(default = "one")]
    pub omega: f64,
    #[serde(default)]
    pub s: f64,
    #[serde(default)]
    pub r1: f64,
    #[serde(default)]
    pub r2: f64,
    #[serde(default)]
    pub g_re: f64,
    #[serde(default)]
    pub g_im: f64,
    #[serde(default)]
    pub lambda1_re: f64,
    #[serde(default)]
    pub lambda1_im: f64,
    #[serde(default)]
    pub lambda2_re: f64,
    #[serde(default)]
    pub lambda2_im: f64,
    #[serde(default)]
    pub g1_re: f64,
    #[serde(default)]
    pub g1_im: f64,
    #[serde(default)]
    pub g2_re: f64,
    #[serde(default)]
    pub g2_im: f64,
    #[serde(default)]
    pub enforce_resonance: bool,
}

fn one() -> f64 {
    1.0
}

fn two() -> f64 {
    2.0
}

impl ModelSection {
    pub fn pairs(&self) -> Vec<(&'static str, String)> {
        vec![
            ("omega0", self.omega0.to_string()),
            ("omega", self.omega.to_string()),
            ("s", self.s.to_string()),
            ("r1", self.r1.to_string()),
            ("r2", self.r2.to_string()),
            ("g_re", self.g_re.to_string()),
            ("g_im", self.g_im.to_string()),
            ("lambda1_re", self.lambda1_re.to_string()),
            ("lambda1_im", self.lambda1_im.to_string()),
            ("lambda2_re", self.lambda2_re.to_string()),
            ("lambda2_im", self.lambda2_im.to_string()),
            ("g1_re", self.g1_re.to_string()),
            ("g1_im", self.g1_im.to_string()),
            ("g2_re", self.g2_re.to_string()),
            ("g2_im", self.g2_im.to_string()),
            ("enforce_resonance", self.enforce_resonance.to_string()),
        ]
    }
}

impl From<ModelParams> for ModelSection {
    fn from(p: ModelParams) -> Self {
        ModelSection {
            omega0: p.omega0,
            omega: p.omega,
            s: p.s,
            r1: p.r1,
            r2: p.r2,
            g_re: p.g.re,
            g_im: p.g.im,
            lambda1_re: p.lambda1.re,
            lambda1_im: p.lambda1.im,
            lambda2_re: p.lambda2.re,
            lambda2_im: p.lambda2.im,
            g1_re: p.g1.re,
            g1_im: p.g1.im,
            g2_re: p.g2.re,
            g2_im: p.g2.im,
            enforce_resonance: p.enforce_resonance,
        }
    }
}

impl From<ModelSection> for ModelParams {
    fn from(m: ModelSection) -> Self {
        ModelParams {
            omega0: m.omega0,
            omega: m.omega,
            s: m.s,
            r1: m.r1,
            r2: m.r2,
            g: C64::new(m.g_re, m.g_im),
            lambda1: C64::new(m.lambda1_re, m.lambda1_im),
            lambda2: C64::new(m.lambda2_re, m.lambda2_im),
            g1: C64::new(m.g1_re, m.g1_im),
            g2: C64::new(m.g2_re, m.g2_im),
            enforce_resonance: m.enforce_resonance,
        }
    }
}

/// Elementary operators of one space, built once per Hamiltonian.
pub(crate) struct Ops {
    pub a1: OperatorMatrix,
    pub a2: OperatorMatrix,
    pub n1: OperatorMatrix,
    pub n2: OperatorMatrix,
    pub sz: OperatorMatrix,
    pub sp: OperatorMatrix,
    pub sm: OperatorMatrix,
    pub id: OperatorMatrix,
}

impl Ops {
    pub fn new(space: &Arc<HilbertSpec>) -> Self {
        Ops {
            a1: annihilator(space, 1).expect("mode 1"),
            a2: annihilator(space, 2).expect("mode 2"),
            n1: number(space, 1).expect("mode 1"),
            n2: number(space, 2).expect("mode 2"),
            sz: spin_operator(space, SpinOp::Z),
            sp: spin_operator(space, SpinOp::Plus),
            sm: spin_operator(space, SpinOp::Minus),
            id: OperatorMatrix::identity(space),
        }
    }
}

fn c(x: f64) -> C64 {
    C64::from(x)
}

fn plus_hc(x: &OperatorMatrix) -> OperatorMatrix {
    x + &x.adjoint()
}

/// ω₀S_z + ωΣn_μ + Σ(g_μ α_μ†S₋ + g_μ* α_μS₊).
pub fn build_linear_hamiltonian(space: &Arc<HilbertSpec>, p: &ModelParams) -> Result<OperatorMatrix> {
    p.validate()?;
    let o = Ops::new(space);
    let free = &o.sz.scale(c(p.omega0)) + &(&o.n1 + &o.n2).scale(c(p.omega));
    let emit = &(&o.a1.adjoint() * &o.sm).scale(p.g1) + &(&o.a2.adjoint() * &o.sm).scale(p.g2);
    Ok(&free + &plus_hc(&emit))
}

/// Effective two-photon Hamiltonian
/// ω₀S_z + ωΣn_μ + sS_zΣn_μ + [(r₁ + r₂S_z)α₂†α₁ + h.c.]
/// + [(λ₁α₁² + λ₂α₂² + gα₁α₂)S₊ + h.c.].
pub fn build_quadratic_hamiltonian(space: &Arc<HilbertSpec>, p: &ModelParams) -> Result<OperatorMatrix> {
    p.validate()?;
    let o = Ops::new(space);
    let total = &o.n1 + &o.n2;
    let diag = [
        o.sz.scale(c(p.omega0)),
        total.scale(c(p.omega)),
        (&o.sz * &total).scale(c(p.s)),
    ]
    .into_iter()
    .sum::<OperatorMatrix>();
    let hop = &o.a2.adjoint() * &o.a1;
    let rayleigh = &hop.scale(c(p.r1)) + &(&hop * &o.sz).scale(c(p.r2));
    let pairs = [
        (&o.a1 * &o.a1).scale(p.lambda1),
        (&o.a2 * &o.a2).scale(p.lambda2),
        (&o.a1 * &o.a2).scale(p.g),
    ]
    .into_iter()
    .sum::<OperatorMatrix>();
    let absorb = &pairs * &o.sp;
    Ok(&(&diag + &plus_hc(&rayleigh)) + &plus_hc(&absorb))
}

/// Decoupled form after the 45° mode rotation:
/// ω₀S_z + [ω+(s−r₂)S_z−r₁]n₁ + [2Λα₁²S₊ + h.c.] + [ω+(s+r₂)S_z+r₁]n₂, Λ = λ₁.
/// Mode 1 is the coupled collective mode, mode 2 the free one.
pub fn build_transformed_target(space: &Arc<HilbertSpec>, p: &ModelParams) -> Result<OperatorMatrix> {
    p.validate()?;
    p.check_decoupling()?;
    let o = Ops::new(space);
    let coupled = &(&o.id.scale(c(p.omega - p.r1)) + &o.sz.scale(c(p.s - p.r2))) * &o.n1;
    let free = &(&o.id.scale(c(p.omega + p.r1)) + &o.sz.scale(c(p.s + p.r2))) * &o.n2;
    let absorb = (&(&o.a1 * &o.a1) * &o.sp).scale(p.lambda1 * 2.0);
    Ok([o.sz.scale(c(p.omega0)), coupled, plus_hc(&absorb), free]
        .into_iter()
        .sum())
}

/// One-mode model at fixed free-mode occupation n₂:
/// (ω₀+n₂(s+r₂))S_z + (ω+r₁)n₂ + [2Λα₁²S₊ + h.c.] + [ω+(s−r₂)S_z−r₁]n₁.
pub fn build_reduced_jcm(space_1mode: &Arc<HilbertSpec>, p: &ModelParams, n2: i64) -> Result<OperatorMatrix> {
    if space_1mode.modes() != Modes::One {
        return Err(Error::RequiresSingleMode);
    }
    let n2 =
        usize::try_from(n2).map_err(|_| Error::InvalidArgument(format!("n2 must be non-negative, got {n2}")))? as f64;
    p.validate()?;
    p.check_decoupling()?;
    let o = Ops::new(space_1mode);
    let atom = o.sz.scale(c(p.omega0 + n2 * (p.s + p.r2)));
    let offset = o.id.scale(c((p.omega + p.r1) * n2));
    let absorb = (&(&o.a1 * &o.a1) * &o.sp).scale(p.lambda1 * 2.0);
    let mode = &(&o.id.scale(c(p.omega - p.r1)) + &o.sz.scale(c(p.s - p.r2))) * &o.n1;
    Ok([atom, offset, plus_hc(&absorb), mode].into_iter().sum())
}
