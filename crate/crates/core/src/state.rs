//! Reduced phase space, body parameters and the conserved quantities.
//!
//! The reduced state lives in the inertial frame: position `x`, linear
//! momentum `p`, symmetry-axis direction `ν` and spin angular momentum `π`.
//! The Poisson bracket has Casimirs `C₁ = ν·ν` and `C₂ = ν·π`; rotation
//! about `e₃` is generated by `J₃ = π₃ + x₁p₂ − x₂p₁`.

use nalgebra::Rotation3;
use serde::{Deserialize, Serialize};

use crate::potential::Potential;
use crate::{Error, Result, Vec3};

/// A point of the 12-dimensional reduced phase space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReducedState {
    pub x: Vec3,
    pub p: Vec3,
    pub nu: Vec3,
    pub pi: Vec3,
}

impl ReducedState {
    pub fn new(x: Vec3, p: Vec3, nu: Vec3, pi: Vec3) -> Self {
        Self { x, p, nu, pi }
    }

    pub fn zeros() -> Self {
        Self::new(Vec3::zeros(), Vec3::zeros(), Vec3::zeros(), Vec3::zeros())
    }

    /// Flat layout `(x₁..x₃, p₁..p₃, ν₁..ν₃, π₁..π₃)`.
    pub fn to_array(&self) -> [f64; 12] {
        let mut out = [0.0; 12];
        for i in 0..3 {
            out[i] = self.x[i];
            out[3 + i] = self.p[i];
            out[6 + i] = self.nu[i];
            out[9 + i] = self.pi[i];
        }
        out
    }

    pub fn from_array(a: &[f64; 12]) -> Self {
        Self::new(
            Vec3::new(a[0], a[1], a[2]),
            Vec3::new(a[3], a[4], a[5]),
            Vec3::new(a[6], a[7], a[8]),
            Vec3::new(a[9], a[10], a[11]),
        )
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }

    /// Rigid rotation of every block about `e₃` by `angle`.
    pub fn rotated_z(&self, angle: f64) -> Self {
        let rot = Rotation3::from_axis_angle(&Vec3::z_axis(), angle);
        Self::new(rot * self.x, rot * self.p, rot * self.nu, rot * self.pi)
    }

    /// `self + h·rate`, treating `rate` as a tangent vector.
    pub fn axpy(&self, h: f64, rate: &ReducedState) -> Self {
        Self::new(self.x + rate.x * h, self.p + rate.p * h, self.nu + rate.nu * h, self.pi + rate.pi * h)
    }
}

/// Physical parameters of the top.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BodyParams {
    /// Mass `M` \[kg\].
    #[serde(rename = "M")]
    pub mass: f64,
    /// Transverse moment of inertia `I_⊥` (the `I₁ = I₂` of the symmetric top).
    #[serde(rename = "I_perp")]
    pub i_perp: f64,
    /// Axial moment of inertia; only enters the laboratory-energy report.
    #[serde(rename = "I3")]
    pub i3: f64,
    /// Dipole moment magnitude `μ`.
    pub mu: f64,
    /// Gravitational acceleration.
    pub g: f64,
}

impl BodyParams {
    pub fn new(mass: f64, i_perp: f64, i3: f64, mu: f64, g: f64) -> Result<Self> {
        let b = Self { mass, i_perp, i3, mu, g };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [("M", self.mass), ("I_perp", self.i_perp), ("I3", self.i3), ("mu", self.mu)];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.g.is_finite() && self.g >= 0.0) {
            return Err(Error::InvalidParameter(format!("g must be non-negative, got {}", self.g)));
        }
        Ok(())
    }
}

/// Lagrange multipliers of the augmented Hamiltonian.
///
/// `lambda = 2·lambda1 − lambda2²·I_⊥` is stored alongside the raw
/// multipliers and always kept consistent by the constructors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Multipliers {
    pub omega: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda: f64,
}

impl Multipliers {
    pub fn new(omega: f64, lambda1: f64, lambda2: f64, i_perp: f64) -> Self {
        Self { omega, lambda1, lambda2, lambda: 2.0 * lambda1 - lambda2 * lambda2 * i_perp }
    }

    /// Builds the multipliers from the combined `λ` instead of `λ₁`.
    pub fn from_lambda(omega: f64, lambda: f64, lambda2: f64, i_perp: f64) -> Self {
        Self { omega, lambda1: 0.5 * (lambda + lambda2 * lambda2 * i_perp), lambda2, lambda }
    }

    pub fn zero() -> Self {
        Self { omega: 0.0, lambda1: 0.0, lambda2: 0.0, lambda: 0.0 }
    }
}

/// `(C₁, C₂) = (ν·ν, ν·π)`.
pub fn casimirs(s: &ReducedState) -> (f64, f64) {
    (s.nu.dot(&s.nu), s.nu.dot(&s.pi))
}

pub fn momentum_j3(s: &ReducedState) -> f64 {
    s.pi[2] + s.x[0] * s.p[1] - s.x[1] * s.p[0]
}

/// Kinetic part `p²/2M + π²/2I_⊥`, without the Casimir term.
pub fn kinetic_energy(s: &ReducedState, b: &BodyParams) -> f64 {
    s.p.norm_squared() / (2.0 * b.mass) + s.pi.norm_squared() / (2.0 * b.i_perp)
}

/// Reduced Hamiltonian `h = p²/2M + π²/2I_⊥ + V(x, ν)`.
///
/// The Casimir term `(1/2I₃ − 1/2I_⊥)(ν·π)²` is constant on symplectic
/// leaves and left out; see [`lab_energy`] for the full value.
pub fn hamiltonian(s: &ReducedState, b: &BodyParams, v: &dyn Potential) -> Result<f64> {
    Ok(kinetic_energy(s, b) + v.value(&s.x, &s.nu)?)
}

/// Hamiltonian including the Casimir kinetic term, i.e. the laboratory energy
/// of the top with axial inertia `I₃`.
pub fn lab_energy(s: &ReducedState, b: &BodyParams, v: &dyn Potential) -> Result<f64> {
    let (_, c2) = casimirs(s);
    let casimir_term = (0.5 / b.i3 - 0.5 / b.i_perp) * c2 * c2;
    Ok(hamiltonian(s, b, v)? + casimir_term)
}

/// Bracket `{V, J₃}`; vanishes wherever `V` is invariant under rotations
/// about `e₃`.
pub fn axial_symmetry_residual(v: &dyn Potential, s: &ReducedState) -> Result<f64> {
    let gx = v.grad_x(&s.x, &s.nu)?;
    let gn = v.grad_nu(&s.x, &s.nu)?;
    Ok(s.x[0] * gx[1] - s.x[1] * gx[0] + s.nu[0] * gn[1] - s.nu[1] * gn[0])
}

/// `h^ξ = h − ω·J₃ + λ₁·C₁ + λ₂·C₂`.
pub fn augmented_hamiltonian(s: &ReducedState, b: &BodyParams, v: &dyn Potential, m: &Multipliers) -> Result<f64> {
    let (c1, c2) = casimirs(s);
    Ok(hamiltonian(s, b, v)? - m.omega * momentum_j3(s) + m.lambda1 * c1 + m.lambda2 * c2)
}
