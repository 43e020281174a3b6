//! Passive two-mode transformations: the canonical mode map, the beam
//! splitter S(θ), the generator K, the unitary V and the constraint system
//! under which V separates the field into a coupled and a free mode.

use std::f64::consts::{FRAC_PI_4, PI, TAU};
use std::sync::Arc;

use nalgebra::Matrix2;
use serde::Serialize;

use crate::hilbert::{annihilator, number, ConservedQuantity, HilbertSpec};
use crate::linalg::exp_i_hermitian;
use crate::models::ModelParams;
use crate::operator::OperatorMatrix;
use crate::{Error, Result, C64};

/// Residual allowed on the diagonalization condition when V is assembled.
pub const DIAGONAL_TOL: f64 = 1e-12;

/// Unitarity residual above which a frame change is refused.
pub const FRAME_UNITARITY_TOL: f64 = 1e-8;

/// (ã₁, ã₂)ᵀ = M (α₁, α₂)ᵀ.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModeMap(pub Matrix2<C64>);

impl ModeMap {
    pub fn unitarity_residual(&self) -> f64 {
        (self.0.adjoint() * self.0 - Matrix2::identity())
            .iter()
            .fold(0.0, |acc, z| acc.max(z.norm()))
    }

    pub fn entry(&self, mu: usize, nu: usize) -> C64 {
        self.0[(mu, nu)]
    }

    /// Largest elementwise distance.
    pub fn distance(&self, other: &ModeMap) -> f64 {
        (self.0 - other.0).iter().fold(0.0, |acc, z| acc.max(z.norm()))
    }
}

/// The two-parameter family
/// ã₁ = (cos²(θ/2) + e^{−iη}sin²(θ/2))α₁ + ½sinθ(1 − e^{−iη})α₂,
/// ã₂ = ½sinθ(e^{−iη} − 1)α₁ − (e^{−iη}cos²(θ/2) + sin²(θ/2))α₂.
pub fn mode_map(theta: f64, eta: f64) -> ModeMap {
    let phase = C64::from_polar(1.0, -eta);
    let (c2, s2) = ((theta / 2.0).cos().powi(2), (theta / 2.0).sin().powi(2));
    let half = 0.5 * theta.sin();
    let one = C64::from(1.0);
    ModeMap(Matrix2::new(
        phase * s2 + c2,
        (one - phase) * half,
        (phase - one) * half,
        -(phase * c2 + s2),
    ))
}

/// Coefficients of K = Ω₁n₁ + Ω₂n₂ + λ(α₁†α₂ + α₂†α₁) together with the
/// rotation angle θ of S(θ)†KS(θ) and the relative phase η.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TransformParams {
    pub theta: f64,
    pub eta: f64,
    pub omega1: f64,
    pub omega2: f64,
    pub lambda: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TildeCoefficients {
    pub omega1: f64,
    pub omega2: f64,
    pub lambda: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DiagonalAngle {
    pub theta: f64,
    /// Ω₁ = Ω₂ and λ = 0: every angle diagonalizes K.
    pub degenerate: bool,
}

impl TransformParams {
    /// Angle from the diagonalization condition, η = Ω̃₁ − Ω̃₂.
    pub fn from_generator(omega1: f64, omega2: f64, lambda: f64) -> Self {
        let theta = solve_diagonal_angle(omega1, omega2, lambda).theta;
        let mut tp = TransformParams {
            theta,
            eta: 0.0,
            omega1,
            omega2,
            lambda,
        };
        let t = tilde_coefficients(&tp);
        tp.eta = t.omega1 - t.omega2;
        tp
    }

    /// Generator whose V realizes `mode_map(theta_map, eta)`: the diagonal
    /// form Ω̃₁ = η/2, Ω̃₂ = −η/2 rotated back by θ = −θ_map/2.
    pub fn for_mode_map(theta_map: f64, eta: f64) -> Self {
        let theta = -0.5 * theta_map;
        let (w1, w2) = (0.5 * eta, -0.5 * eta);
        let (c2, s2) = (theta.cos().powi(2), theta.sin().powi(2));
        TransformParams {
            theta,
            eta,
            omega1: w1 * c2 + w2 * s2,
            omega2: w1 * s2 + w2 * c2,
            lambda: -0.5 * (2.0 * theta).sin() * eta,
        }
    }

    /// The 45° rotation with η = π that decouples the field.
    pub fn decoupling() -> Self {
        Self::for_mode_map(FRAC_PI_4, PI)
    }

    /// Angle of the mode map realized by V.
    pub fn mixing_angle(&self) -> f64 {
        -2.0 * self.theta
    }

    /// The mode map V†α_μV = Σ_ν M_{μν}α_ν of `build_v`.
    pub fn mode_map(&self) -> ModeMap {
        mode_map(self.mixing_angle(), self.eta)
    }

    /// (Ω₁ − Ω₂)sin2θ + 2λcos2θ.
    pub fn diagonal_residual(&self) -> f64 {
        let t2 = 2.0 * self.theta;
        (self.omega1 - self.omega2) * t2.sin() + 2.0 * self.lambda * t2.cos()
    }
}

/// S(θ) = exp[θ(α₁†α₂ − α₁α₂†)], exponentiated per photon-number block.
pub fn beam_splitter(space: &Arc<HilbertSpec>, theta: f64) -> OperatorMatrix {
    let a1 = annihilator(space, 1).expect("mode 1");
    let a2 = annihilator(space, 2).expect("mode 2");
    let hop = &a1.adjoint() * &a2;
    // θ(X − X†) = i·[−iθ(X − X†)] with the bracket hermitian
    let h = (&hop - &hop.adjoint()).scale(C64::new(0.0, -theta));
    exp_i_hermitian(&h, 1.0, ConservedQuantity::TotalPhoton).expect("generator is hermitian and photon-conserving")
}

/// K = Ω₁n₁ + Ω₂n₂ + λ(α₁†α₂ + α₂†α₁).
pub fn k_generator(space: &Arc<HilbertSpec>, tp: &TransformParams) -> OperatorMatrix {
    let a1 = annihilator(space, 1).expect("mode 1");
    let a2 = annihilator(space, 2).expect("mode 2");
    let hop = &a1.adjoint() * &a2;
    [
        number(space, 1).expect("mode 1").scale(C64::from(tp.omega1)),
        number(space, 2).expect("mode 2").scale(C64::from(tp.omega2)),
        (&hop + &hop.adjoint()).scale(C64::from(tp.lambda)),
    ]
    .into_iter()
    .sum()
}

/// Closed-form coefficients of S(θ)†KS(θ).
pub fn tilde_coefficients(tp: &TransformParams) -> TildeCoefficients {
    let (c2, s2) = (tp.theta.cos().powi(2), tp.theta.sin().powi(2));
    let sin2 = (2.0 * tp.theta).sin();
    let cos2 = (2.0 * tp.theta).cos();
    TildeCoefficients {
        omega1: tp.omega1 * c2 + tp.omega2 * s2 - tp.lambda * sin2,
        omega2: tp.omega1 * s2 + tp.omega2 * c2 + tp.lambda * sin2,
        lambda: 0.5 * (tp.omega1 - tp.omega2) * sin2 + tp.lambda * cos2,
    }
}

/// Representative θ ∈ (−π/4, π/4] of (Ω₁ − Ω₂)sin2θ = −2λcos2θ.
pub fn solve_diagonal_angle(omega1: f64, omega2: f64, lambda: f64) -> DiagonalAngle {
    let diff = omega2 - omega1;
    if diff == 0.0 {
        return if lambda == 0.0 {
            DiagonalAngle {
                theta: 0.0,
                degenerate: true,
            }
        } else {
            DiagonalAngle {
                theta: FRAC_PI_4,
                degenerate: false,
            }
        };
    }
    let mut theta = 0.5 * (2.0 * lambda / diff).atan();
    if theta <= -FRAC_PI_4 {
        theta += 0.5 * PI;
    }
    DiagonalAngle {
        theta,
        degenerate: false,
    }
}

fn wrap_phase(x: f64) -> f64 {
    let r = x.rem_euclid(TAU);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

/// V = e^{−iπn₂} e^{−iΩ̃₁(n₁+n₂)} e^{iK}.
pub fn build_v(space: &Arc<HilbertSpec>, tp: &TransformParams) -> Result<OperatorMatrix> {
    let scale = [tp.omega1, tp.omega2, tp.lambda, 1.0]
        .into_iter()
        .fold(0.0, |a: f64, x| a.max(x.abs()));
    let residual = tp.diagonal_residual();
    if residual.abs() > DIAGONAL_TOL * scale {
        return Err(Error::DiagonalCondition { residual });
    }
    let t = tilde_coefficients(tp);
    let expected = t.omega1 - t.omega2;
    if wrap_phase(tp.eta - expected).abs() > DIAGONAL_TOL * scale {
        return Err(Error::InconsistentPhase {
            expected,
            found: tp.eta,
        });
    }
    let k = exp_i_hermitian(&k_generator(space, tp), 1.0, ConservedQuantity::TotalPhoton)?;
    let phases = OperatorMatrix::diagonal(space, |ket| {
        C64::from_polar(1.0, -PI * ket.n2 as f64 - t.omega1 * ket.photons() as f64)
    });
    Ok(&phases * &k)
}

/// Residuals of the constraint system at θ = π/4, η = π.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConstraintReport {
    pub satisfied: bool,
    /// |λ₁sin²θ + λ₂cos²θ + ½g sin2θ|, |(λ₁−λ₂)sin2θ + g cos2θ|, |cos2θ|.
    pub residuals: [f64; 3],
    pub tolerance: f64,
    pub theta: f64,
    pub eta: f64,
    /// λ₁ = λ₂ = −g/2 as (re, im).
    pub suggested_lambda: [f64; 2],
}

impl ConstraintReport {
    pub fn worst(&self) -> f64 {
        self.residuals.iter().copied().fold(0.0, f64::max)
    }
}

pub fn decoupling_constraints(p: &ModelParams) -> ConstraintReport {
    let theta = FRAC_PI_4;
    let (s2, c2) = (theta.sin().powi(2), theta.cos().powi(2));
    let (sin2, cos2) = ((2.0 * theta).sin(), (2.0 * theta).cos());
    let residuals = [
        (p.lambda1 * s2 + p.lambda2 * c2 + p.g * (0.5 * sin2)).norm(),
        ((p.lambda1 - p.lambda2) * sin2 + p.g * cos2).norm(),
        cos2.abs(),
    ];
    let tolerance = crate::models::CONSTRAINT_TOL
        * [p.g.norm(), p.lambda1.norm(), p.lambda2.norm(), 1.0]
            .into_iter()
            .fold(0.0, f64::max);
    let lam = -p.g * 0.5;
    ConstraintReport {
        satisfied: residuals.iter().all(|&r| r <= tolerance),
        residuals,
        tolerance,
        theta,
        eta: PI,
        suggested_lambda: [lam.re, lam.im],
    }
}

/// U†HU.
pub fn conjugate_frame(u: &OperatorMatrix, h: &OperatorMatrix) -> Result<OperatorMatrix> {
    if u.space().as_ref() != h.space().as_ref() {
        return Err(Error::SpaceMismatch);
    }
    let residual = u.unitarity_residual();
    if residual > FRAME_UNITARITY_TOL {
        return Err(Error::NotUnitary { residual });
    }
    Ok(&(&u.adjoint() * h) * u)
}

/// ‖V†α_μV − Σ_ν M_{μν}α_ν‖_max, worst over μ.
pub fn mode_map_residual(v: &OperatorMatrix, m: &ModeMap) -> f64 {
    let space = v.space();
    let a = [
        annihilator(space, 1).expect("mode 1"),
        annihilator(space, 2).expect("mode 2"),
    ];
    let vd = v.adjoint();
    (0..2)
        .map(|mu| {
            let lhs = &(&vd * &a[mu]) * v;
            let rhs = &a[0].scale(m.entry(mu, 0)) + &a[1].scale(m.entry(mu, 1));
            (&lhs - &rhs).max_norm()
        })
        .fold(0.0, f64::max)
}
