//! Potential energy `V(x, ν)` of the top.
//!
//! [`DipolePotential`] is the magnetic dipole in an axisymmetric field plus
//! uniform gravity, `V = −μ⟨ν, B(x)⟩ + M·g·x₃`, with analytic first and second
//! derivatives assembled from field jets. Arbitrary potentials can be plugged
//! in through [`FnPotential`]; their derivatives come from central
//! differences and are considered experimental.

use nalgebra::{Matrix2, Matrix3x2, Matrix6, Vector2};

use crate::fields::{cartesian_hessian, cartesian_jacobian, eval_jet, field_at, AxiFieldModel};
use crate::state::BodyParams;
use crate::{Error, Result, Vec3};

/// Relative step of the finite-difference gradient fallback.
pub const FD_GRADIENT_STEP: f64 = 1e-6;
/// Relative step used when differentiating gradients for the Hessian.
pub const FD_HESSIAN_STEP: f64 = 1e-4;

/// `|ν₀⊥|` below which the rotated in-plane basis falls back to `(e₁, e₂)`.
pub const BASIS_EPS: f64 = 1e-12;

/// A potential on `(x, ν)`.
///
/// Only [`Potential::value`] is mandatory. Gradients and the 6×6 Hessian
/// (ordered `x₁, x₂, x₃, ν₁, ν₂, ν₃`) default to central differences.
pub trait Potential: Send + Sync {
    fn value(&self, x: &Vec3, nu: &Vec3) -> Result<f64>;

    fn grad_x(&self, x: &Vec3, nu: &Vec3) -> Result<Vec3> {
        let step = FD_GRADIENT_STEP * x.norm().max(1.0);
        central_gradient(|dx| self.value(&(x + dx), nu), step)
    }

    fn grad_nu(&self, x: &Vec3, nu: &Vec3) -> Result<Vec3> {
        let step = FD_GRADIENT_STEP * nu.norm().max(1.0);
        central_gradient(|dn| self.value(x, &(nu + dn)), step)
    }

    fn hessian(&self, x: &Vec3, nu: &Vec3) -> Result<Matrix6<f64>> {
        let hx = FD_HESSIAN_STEP * x.norm().max(1.0);
        let hn = FD_HESSIAN_STEP * nu.norm().max(1.0);
        let grad = |x: &Vec3, nu: &Vec3| -> Result<[f64; 6]> {
            let gx = self.grad_x(x, nu)?;
            let gn = self.grad_nu(x, nu)?;
            Ok([gx[0], gx[1], gx[2], gn[0], gn[1], gn[2]])
        };
        let mut out = Matrix6::zeros();
        for col in 0..6 {
            let mut dx = Vec3::zeros();
            let mut dn = Vec3::zeros();
            let step = if col < 3 {
                dx[col] = hx;
                hx
            } else {
                dn[col - 3] = hn;
                hn
            };
            let plus = grad(&(x + dx), &(nu + dn))?;
            let minus = grad(&(x - dx), &(nu - dn))?;
            for row in 0..6 {
                out[(row, col)] = (plus[row] - minus[row]) / (2.0 * step);
            }
        }
        Ok((out + out.transpose()) * 0.5)
    }
}

fn central_gradient<F>(f: F, step: f64) -> Result<Vec3>
where
    F: Fn(Vec3) -> Result<f64>,
{
    let mut g = Vec3::zeros();
    for i in 0..3 {
        let mut d = Vec3::zeros();
        d[i] = step;
        g[i] = (f(d)? - f(-d)?) / (2.0 * step);
    }
    Ok(g)
}

/// Adapter turning a closure `V(x, ν)` into a [`Potential`].
pub struct FnPotential<F> {
    f: F,
}

impl<F> FnPotential<F>
where
    F: Fn(&Vec3, &Vec3) -> f64 + Send + Sync,
{
    pub fn new(f: F) -> Self {
        Self { f }
    }
}

impl<F> Potential for FnPotential<F>
where
    F: Fn(&Vec3, &Vec3) -> f64 + Send + Sync,
{
    fn value(&self, x: &Vec3, nu: &Vec3) -> Result<f64> {
        let v = (self.f)(x, nu);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Potential(format!("non-finite value at x = {x:?}, nu = {nu:?}")))
        }
    }
}

/// Magnetic dipole of strength `μ` in an axisymmetric field, plus gravity.
#[derive(Debug, Clone, PartialEq)]
pub struct DipolePotential {
    pub model: AxiFieldModel,
    pub mu: f64,
    pub mass: f64,
    pub g: f64,
}

impl DipolePotential {
    pub fn new(model: AxiFieldModel, body: &BodyParams) -> Self {
        Self { model, mu: body.mu, mass: body.mass, g: body.g }
    }
}

impl Potential for DipolePotential {
    fn value(&self, x: &Vec3, nu: &Vec3) -> Result<f64> {
        potential_value(x, nu, &self.model, self.mu, self.mass, self.g)
    }

    fn grad_x(&self, x: &Vec3, nu: &Vec3) -> Result<Vec3> {
        let r = x[0].hypot(x[1]);
        let jet = eval_jet(&self.model, r, x[2])?;
        let j = cartesian_jacobian(&jet, x)?;
        Ok(-self.mu * j.transpose() * nu + Vec3::new(0.0, 0.0, self.mass * self.g))
    }

    fn grad_nu(&self, x: &Vec3, _nu: &Vec3) -> Result<Vec3> {
        Ok(-self.mu * field_at(&self.model, x)?)
    }

    fn hessian(&self, x: &Vec3, nu: &Vec3) -> Result<Matrix6<f64>> {
        let r = x[0].hypot(x[1]);
        let jet = eval_jet(&self.model, r, x[2])?;
        let j = cartesian_jacobian(&jet, x)?;
        let hb = cartesian_hessian(&jet, x)?;
        let mut out = Matrix6::zeros();
        for a in 0..3 {
            for c in 0..3 {
                out[(a, c)] = -self.mu * (0..3).map(|i| nu[i] * hb[i][(a, c)]).sum::<f64>();
                // ∂²V/∂x_a∂ν_i = −μ·∂B_i/∂x_a
                out[(a, 3 + c)] = -self.mu * j[(c, a)];
                out[(3 + c, a)] = out[(a, 3 + c)];
            }
        }
        Ok(out)
    }
}

/// `−μ(ν·B(x)) + M·g·x₃`.
pub fn potential_value(x: &Vec3, nu: &Vec3, model: &AxiFieldModel, mu: f64, mass: f64, g: f64) -> Result<f64> {
    Ok(-mu * nu.dot(&field_at(model, x)?) + mass * g * x[2])
}

/// In-plane orthonormal basis aligned with `ν₀⊥`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotatedBasis {
    pub e1: Vector2<f64>,
    pub e2: Vector2<f64>,
    /// Columns are `E₁`, `E₂` in `(e₁, e₂)` coordinates: `α_{BA} = ⟨e_B, E_A⟩`.
    pub alpha: Matrix2<f64>,
}

impl RotatedBasis {
    pub fn identity() -> Self {
        Self::from_e1(Vector2::new(1.0, 0.0))
    }

    fn from_e1(e1: Vector2<f64>) -> Self {
        // E₂ = e₃ × E₁ keeps E₁ × E₂ = e₃.
        let e2 = Vector2::new(-e1[1], e1[0]);
        Self { e1, e2, alpha: Matrix2::from_columns(&[e1, e2]) }
    }

    /// `E_A` embedded in 3-space.
    pub fn e(&self, a: usize) -> Vec3 {
        let v = if a == 0 { self.e1 } else { self.e2 };
        Vec3::new(v[0], v[1], 0.0)
    }
}

pub fn make_rotated_basis(nu0_perp: Vector2<f64>) -> RotatedBasis {
    let n = nu0_perp.norm();
    if n > BASIS_EPS {
        RotatedBasis::from_e1(nu0_perp / n)
    } else {
        RotatedBasis::identity()
    }
}

/// Second derivatives of `V` at the support point, with the `ν`-variations
/// resolved on `(E₁, E₂, e₃)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotentialHessianBlocks {
    /// `∂²V/∂x_i∂x_j`.
    pub vxx: nalgebra::Matrix3<f64>,
    /// `∂²V/∂x_i∂N_A`.
    pub vxn: Matrix3x2<f64>,
    /// `∂²V/∂x_i∂ν₃`.
    pub vx3: Vec3,
    /// `∂²V/∂N_A∂N_B`.
    pub vnn: Matrix2<f64>,
    /// `∂²V/∂N_A∂ν₃`.
    pub vn3: Vector2<f64>,
    /// `∂²V/∂ν₃²`.
    pub v33: f64,
}

impl PotentialHessianBlocks {
    /// Splits a Cartesian 6×6 Hessian using the in-plane basis.
    pub fn from_cartesian(h: &Matrix6<f64>, basis: &RotatedBasis) -> Self {
        let vxx = h.fixed_view::<3, 3>(0, 0).into_owned();
        let vxnu = h.fixed_view::<3, 3>(0, 3).into_owned();
        let vnunu = h.fixed_view::<3, 3>(3, 3).into_owned();
        let vx_perp: Matrix3x2<f64> = vxnu.fixed_view::<3, 2>(0, 0).into_owned();
        let vperp_perp: Matrix2<f64> = vnunu.fixed_view::<2, 2>(0, 0).into_owned();
        let vperp_3 = Vector2::new(vnunu[(0, 2)], vnunu[(1, 2)]);
        Self {
            vxx,
            vxn: vx_perp * basis.alpha,
            vx3: vxnu.column(2).into_owned(),
            vnn: basis.alpha.transpose() * vperp_perp * basis.alpha,
            vn3: basis.alpha.transpose() * vperp_3,
            v33: vnunu[(2, 2)],
        }
    }
}

/// Hessian blocks of `v` at `(x0, ν0)` in the basis aligned with `ν0⊥`.
pub fn hessian_blocks(x0: &Vec3, nu0: &Vec3, v: &dyn Potential) -> Result<PotentialHessianBlocks> {
    let r0 = x0[0].hypot(x0[1]);
    if r0 == 0.0 {
        return Err(Error::AxisDegeneracy { r: r0 });
    }
    let basis = make_rotated_basis(Vector2::new(nu0[0], nu0[1]));
    Ok(PotentialHessianBlocks::from_cartesian(&v.hessian(x0, nu0)?, &basis))
}

/// `(∂²V/∂x₁², ∂²V/∂x₁∂x₃, ∂²V/∂x₃²)` of the dipole potential at
/// `x = (r, 0, 0)`, `ν = (ν_r, 0, ν_z)`, written directly in terms of the
/// cylindrical jet.
pub fn dipole_support_vxx(jet: &crate::fields::FieldJet, r: f64, nu_r: f64, nu_z: f64, mu: f64) -> (f64, f64, f64) {
    let v11 = -mu * nu_z * jet.bz_rr + mu * nu_r * jet.bz_rz - mu * nu_r / r * (jet.bz_z + 2.0 * jet.br / r);
    let v13 = -mu * nu_z * jet.bz_rz - mu * nu_r * jet.bz_rr;
    let v33 = -mu * nu_z * jet.bz_zz - mu * nu_r * jet.bz_rz;
    (v11, v13, v33)
}
