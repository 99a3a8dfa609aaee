//! Relative equilibria of the dipole top: uniform rotation about `e₃` with
//! rate `ω`, represented by the support point `x₀ = r₀e₁`, `p₀ = Mωr₀e₂` and
//! an axis `ν₀ = (ν_r, 0, ν_z)` in the `(e₁, e₃)` plane.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::fields::{eval_jet, AxiFieldModel, FieldJet};
use crate::potential::Potential;
use crate::state::{BodyParams, Multipliers, ReducedState};
use crate::{Error, Result, Vec3};

/// Convergence tolerance of the multi-start Newton solver.
pub const NEWTON_TOL: f64 = 1e-13;
const NEWTON_MAX_ITER: usize = 100;
const NEWTON_STARTS: usize = 8;
/// `|B_r|` below this fraction of the local field scale counts as zero.
pub const MIRROR_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Equilibrium {
    pub r0: f64,
    pub omega: f64,
    pub nu0: Vec3,
    pub pi0: Vec3,
    pub p0: f64,
    pub mult: Multipliers,
    #[serde(rename = "C2")]
    pub c2: f64,
    /// Orientation sign `sign(ν_z)` with `sign(0) = +1`.
    pub sigma: f64,
}

fn sign(v: f64) -> f64 {
    if v < 0.0 {
        -1.0
    } else {
        1.0
    }
}

impl Equilibrium {
    /// Fills in `λ₂ = ων_z − C₂/I_⊥`, `λ₁`, `π₀ = I_⊥ωe₃ − λ₂I_⊥ν₀` and
    /// `p₀ = Mωr₀` from the primary unknowns.
    pub fn assemble(r0: f64, omega: f64, nu0: Vec3, lambda: f64, c2: f64, b: &BodyParams) -> Self {
        let lambda2 = omega * nu0[2] - c2 / b.i_perp;
        let pi0 = Vec3::z() * (b.i_perp * omega) - nu0 * (lambda2 * b.i_perp);
        Self {
            r0,
            omega,
            nu0,
            pi0,
            p0: b.mass * omega * r0,
            mult: Multipliers::from_lambda(omega, lambda, lambda2, b.i_perp),
            c2,
            sigma: sign(nu0[2]),
        }
    }

    pub fn nu_r(&self) -> f64 {
        self.nu0[0]
    }

    pub fn nu_z(&self) -> f64 {
        self.nu0[2]
    }

    /// `|ν₀⊥|`.
    pub fn nu_perp(&self) -> f64 {
        self.nu0[0].hypot(self.nu0[1])
    }

    pub fn support_state(&self) -> ReducedState {
        ReducedState::new(Vec3::new(self.r0, 0.0, 0.0), Vec3::new(0.0, self.p0, 0.0), self.nu0, self.pi0)
    }

    /// The time-reversed equilibrium: `ω, p, π, C₂, λ₂` change sign, `λ` is
    /// unchanged.
    pub fn time_reversed(&self) -> Self {
        Self {
            omega: -self.omega,
            pi0: -self.pi0,
            p0: -self.p0,
            c2: -self.c2,
            mult: Multipliers {
                omega: -self.mult.omega,
                lambda1: self.mult.lambda1,
                lambda2: -self.mult.lambda2,
                lambda: self.mult.lambda,
            },
            ..*self
        }
    }
}

/// Support state built from the equilibrium scalars.
pub fn build_support_state(eq: &Equilibrium, b: &BodyParams) -> ReducedState {
    let pi = Vec3::z() * (b.i_perp * eq.omega) - eq.nu0 * (eq.mult.lambda2 * b.i_perp);
    ReducedState::new(Vec3::new(eq.r0, 0.0, 0.0), Vec3::new(0.0, b.mass * eq.omega * eq.r0, 0.0), eq.nu0, pi)
}

/// Largest relative violation of the four first-order conditions
/// `p − Mω e₃×x`, `∇ₓV + ω e₃×p`, `π − I_⊥ωe₃ + λ₂I_⊥ν`, `∇_νV + 2λ₁ν + λ₂π`.
///
/// Each condition is divided by the sum of the norms of its terms, so the
/// value is dimensionless; all-zero terms give 0.
pub fn first_order_residual(eq: &Equilibrium, b: &BodyParams, v: &dyn Potential) -> Result<f64> {
    let s = eq.support_state();
    let m = &eq.mult;
    let e3 = Vec3::z();
    let gx = v.grad_x(&s.x, &s.nu)?;
    let gn = v.grad_nu(&s.x, &s.nu)?;
    let groups: [Vec<Vec3>; 4] = [
        vec![s.p, -(e3.cross(&s.x) * (b.mass * m.omega))],
        vec![gx, e3.cross(&s.p) * m.omega],
        vec![s.pi, -(e3 * (b.i_perp * m.omega)), s.nu * (m.lambda2 * b.i_perp)],
        vec![gn, s.nu * (2.0 * m.lambda1), s.pi * m.lambda2],
    ];
    Ok(groups
        .iter()
        .map(|terms| {
            let sum: Vec3 = terms.iter().sum();
            let scale: f64 = terms.iter().map(|t| t.norm()).sum();
            if scale == 0.0 {
                0.0
            } else {
                sum.amax() / scale
            }
        })
        .fold(0.0, f64::max))
}

/// Residuals of the planar force balance at `(r₀, 0)`:
/// `ν_zB_z,z + ν_rB_r,z − Mg/μ`, `ν_zB_r,z + ν_rB_r,r + Mω²r₀/μ`,
/// `ν_r² + ν_z² − 1`.
pub fn force_balance_residual(jet: &FieldJet, b: &BodyParams, r0: f64, nu_r: f64, nu_z: f64, omega2: f64) -> [f64; 3] {
    [
        nu_z * jet.bz_z + nu_r * jet.br_z - b.mass * b.g / b.mu,
        nu_z * jet.br_z + nu_r * jet.br_r + b.mass * omega2 * r0 / b.mu,
        nu_r * nu_r + nu_z * nu_z - 1.0,
    ]
}

fn newton_solve(jet: &FieldJet, b: &BodyParams, r0: f64, start: [f64; 3]) -> Option<[f64; 3]> {
    let force_scale = jet.bz_z.abs() + jet.br_z.abs() + jet.br_r.abs() + b.mass * b.g / b.mu;
    let norm = |f: &[f64; 3]| (f[0] / force_scale).abs().max((f[1] / force_scale).abs()).max(f[2].abs());
    let mut u = start;
    let mut f = force_balance_residual(jet, b, r0, u[0], u[1], u[2]);
    for _ in 0..NEWTON_MAX_ITER {
        if norm(&f) <= NEWTON_TOL {
            return Some(u);
        }
        let j =
            Matrix3::new(jet.br_z, jet.bz_z, 0.0, jet.br_r, jet.br_z, b.mass * r0 / b.mu, 2.0 * u[0], 2.0 * u[1], 0.0);
        let step = j.lu().solve(&Vector3::new(-f[0], -f[1], -f[2]))?;
        if !step.iter().all(|v| v.is_finite()) {
            return None;
        }
        let mut alpha = 1.0;
        loop {
            let trial = [u[0] + alpha * step[0], u[1] + alpha * step[1], u[2] + alpha * step[2]];
            let ft = force_balance_residual(jet, b, r0, trial[0], trial[1], trial[2]);
            if norm(&ft) < norm(&f) || alpha < 1e-6 {
                u = trial;
                f = ft;
                break;
            }
            alpha *= 0.5;
        }
    }
    (norm(&f) <= 1e3 * NEWTON_TOL).then_some(u)
}

/// Real roots `(ν_r, ν_z, ω²)` of the planar force balance with `ω² > 0`,
/// found by damped Newton from 8 starts on the unit circle × 2 `ω²` seeds.
pub fn force_balance_roots(jet: &FieldJet, b: &BodyParams, r0: f64) -> Vec<[f64; 3]> {
    let w_seed = {
        let w = (b.mu / b.mass * jet.bz_r / r0).abs();
        if w > 0.0 && w.is_finite() {
            w
        } else {
            1.0
        }
    };
    let mut roots: Vec<[f64; 3]> = Vec::new();
    for k in 0..NEWTON_STARTS {
        let theta = std::f64::consts::PI * (2.0 * k as f64 + 0.5) / NEWTON_STARTS as f64;
        for w in [w_seed, 0.5 * w_seed] {
            let Some(mut u) = newton_solve(jet, b, r0, [theta.cos(), theta.sin(), w]) else {
                continue;
            };
            // Polish: back onto the circle, then ω² from the radial equation.
            let n = u[0].hypot(u[1]);
            u[0] /= n;
            u[1] /= n;
            if u[0].abs() < 1e-12 {
                u[0] = 0.0;
                u[1] = sign(u[1]);
            }
            u[2] = -(b.mu / (b.mass * r0)) * (u[1] * jet.br_z + u[0] * jet.br_r);
            if !(u[2] > 0.0) {
                continue;
            }
            if roots.iter().all(|r| (r[0] - u[0]).abs() + (r[1] - u[1]).abs() > 1e-9) {
                roots.push(u);
            }
        }
    }
    roots.sort_by(|a, b| b[1].total_cmp(&a[1]).then(a[0].total_cmp(&b[0])));
    roots
}

/// All relative equilibria of the dipole at radius `r0` in the plane `z = 0`.
///
/// When `B_r ≠ 0` the multiplier follows from `ν_r = (μ/λ)B_r` and `C₂` is
/// fixed by `ωC₂ = −μB_z + (λ + I_⊥ω²)ν_z`; the `c2` argument is then not
/// used. When `B_r = 0` the axis must be vertical and `c2` selects the spin.
pub fn solve_dipole_equilibrium(model: &AxiFieldModel, b: &BodyParams, r0: f64, c2: f64) -> Result<Vec<Equilibrium>> {
    if !(r0 > 0.0) {
        return Err(Error::InvalidParameter(format!("r0 must be positive, got {r0}")));
    }
    let jet = eval_jet(model, r0, 0.0)?;
    let field_scale = jet.magnitude(r0);
    let br_is_zero = jet.br.abs() <= MIRROR_TOL * field_scale;
    let mut out = Vec::new();
    for [nu_r, nu_z, omega2] in force_balance_roots(&jet, b, r0) {
        let omega = omega2.sqrt();
        let nu0 = Vec3::new(nu_r, 0.0, nu_z);
        let eq = if br_is_zero {
            if nu_r != 0.0 {
                continue;
            }
            let lambda = b.mu * jet.bz / nu_z + omega * c2 / nu_z - b.i_perp * omega2;
            Equilibrium::assemble(r0, omega, nu0, lambda, c2, b)
        } else {
            if nu_r == 0.0 {
                continue;
            }
            let lambda = b.mu * jet.br / nu_r;
            let c2 = (-b.mu * jet.bz + (lambda + b.i_perp * omega2) * nu_z) / omega;
            Equilibrium::assemble(r0, omega, nu0, lambda, c2, b)
        };
        out.push(eq);
    }
    if out.is_empty() {
        return Err(Error::NoEquilibrium(format!("no real root with omega^2 > 0 at r0 = {r0}")));
    }
    Ok(out)
}

/// Equatorial equilibrium with vertical axis `ν₀ = σe₃` and spin `π₀e₃` in a
/// mirror-symmetric field without gravity. The positive root for `ω` is
/// returned; [`Equilibrium::time_reversed`] gives the other one.
pub fn solve_orbitron_equatorial(
    model: &AxiFieldModel,
    b: &BodyParams,
    r0: f64,
    pi0: f64,
    sigma: f64,
) -> Result<Equilibrium> {
    if sigma != 1.0 && sigma != -1.0 {
        return Err(Error::InvalidParameter(format!("sigma must be +1 or -1, got {sigma}")));
    }
    if !(r0 > 0.0) {
        return Err(Error::InvalidParameter(format!("r0 must be positive, got {r0}")));
    }
    if b.g != 0.0 {
        return Err(Error::GravityPresent { g: b.g });
    }
    let jet = eval_jet(model, r0, 0.0)?;
    if jet.br.abs() > MIRROR_TOL * jet.magnitude(r0) || jet.bz_z.abs() > MIRROR_TOL * jet.magnitude(r0) {
        return Err(Error::NotMirrorSymmetric { br: jet.br });
    }
    if !(-sigma * jet.bz_r > 0.0) {
        return Err(Error::WrongFieldSign { sigma, bz_r: jet.bz_r });
    }
    let omega = (-sigma * b.mu / b.mass * jet.bz_r / r0).sqrt();
    let lambda = sigma * b.mu * jet.bz + omega * (pi0 - b.i_perp * omega);
    Ok(Equilibrium::assemble(r0, omega, Vec3::new(0.0, 0.0, sigma), lambda, sigma * pi0, b))
}

/// Dimensionless levitation parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevitationParams {
    /// `B^O_{r,z} / B′`.
    pub beta: f64,
    /// `Mg / (μB′)`.
    pub kappa: f64,
    /// `ω²r/g`.
    pub xi2: f64,
    /// `|κ| − 1`.
    pub epsilon: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevitationSolution {
    pub nu_r: f64,
    pub nu_z: f64,
    pub xi2: f64,
}

/// Closed-form tilt and centrifugal parameter of the levitating equilibrium.
///
/// Uses the root that keeps `ξ²` positive near `|κ| = 1`: `+√` for `κ > 0`,
/// `−√` for `κ < 0`, which is the `|κ|` form below.
pub fn solve_levitation(beta: f64, kappa: f64) -> Result<LevitationSolution> {
    if !(beta < 0.0) {
        return Err(Error::BadSign(beta));
    }
    if kappa == 0.0 || !kappa.is_finite() {
        return Err(Error::InvalidParameter(format!("kappa must be finite and non-zero, got {kappa}")));
    }
    let b2 = beta * beta;
    let disc = 1.0 + b2 - kappa * kappa;
    if disc < 0.0 {
        return Err(Error::NoRealSolution(disc));
    }
    let root = disc.sqrt() / kappa.abs();
    let nu_r = kappa / (1.0 + b2) * (beta + root);
    let xi2 = -beta / (2.0 * (1.0 + b2)) + (0.5 + b2) / (1.0 + b2) * root;
    let nu_z = kappa - beta * nu_r;
    if !(xi2 > 0.0) {
        return Err(Error::NegativeCentrifugal(xi2));
    }
    let norm_err = (nu_r * nu_r + nu_z * nu_z - 1.0).abs();
    if norm_err > 1e-12 {
        return Err(Error::NoEquilibrium(format!("tilt off the unit circle by {norm_err:e}")));
    }
    Ok(LevitationSolution { nu_r, nu_z, xi2 })
}

/// Residuals of `ν_z + βν_r = κ`, `βν_z − ν_r/2 = −κξ²`, `ν_r² + ν_z² = 1`.
pub fn levitation_system_residual(beta: f64, kappa: f64, s: &LevitationSolution) -> [f64; 3] {
    [
        s.nu_z + beta * s.nu_r - kappa,
        beta * s.nu_z - 0.5 * s.nu_r + kappa * s.xi2,
        s.nu_r * s.nu_r + s.nu_z * s.nu_z - 1.0,
    ]
}

/// Sum of the gradients `B′` of the linear parts of `model`.
fn linear_gradient(model: &AxiFieldModel) -> f64 {
    match model {
        AxiFieldModel::Linear { b_prime, .. } => *b_prime,
        AxiFieldModel::DipolePair { .. } => 0.0,
        AxiFieldModel::Composite { parts } => parts.iter().map(linear_gradient).sum(),
    }
}

fn mirror_parts_symmetric(model: &AxiFieldModel) -> bool {
    match model {
        AxiFieldModel::Linear { .. } => true,
        AxiFieldModel::DipolePair { .. } => true,
        AxiFieldModel::Composite { parts } => parts.iter().all(mirror_parts_symmetric),
    }
}

/// `(β, κ)` of a linear-plus-mirror-symmetric field at radius `r0`.
pub fn levitation_parameters(model: &AxiFieldModel, b: &BodyParams, r0: f64) -> Result<(f64, f64)> {
    if !mirror_parts_symmetric(model) {
        return Err(Error::InvalidParameter("field is not linear plus mirror-symmetric".into()));
    }
    let b_prime = linear_gradient(model);
    if b_prime == 0.0 {
        return Err(Error::InvalidParameter("levitation needs a linear part with B' != 0".into()));
    }
    let jet = eval_jet(model, r0, 0.0)?;
    Ok((jet.br_z / b_prime, b.mass * b.g / (b.mu * b_prime)))
}

/// Levitating equilibrium at radius `r0` in the plane `z = 0`.
///
/// `λ = μB_r/ν_r` is forced by the tilt; the spin invariant then follows from
/// `ωC₂ = −μB_z + (λ + I_⊥ω²)ν_z`. The offset `B₀` of the linear part moves
/// `B_z` and therefore only the spin.
pub fn levitation_equilibrium(
    model: &AxiFieldModel,
    b: &BodyParams,
    r0: f64,
) -> Result<(Equilibrium, LevitationParams)> {
    if !(b.g > 0.0) {
        return Err(Error::InvalidParameter("levitation needs g > 0".into()));
    }
    let (beta, kappa) = levitation_parameters(model, b, r0)?;
    let sol = solve_levitation(beta, kappa)?;
    if sol.nu_r == 0.0 {
        return Err(Error::NoEquilibrium("untilted levitation branch (|kappa| = 1) has no finite lambda".into()));
    }
    let jet = eval_jet(model, r0, 0.0)?;
    let omega2 = sol.xi2 * b.g / r0;
    let omega = omega2.sqrt();
    let lambda = b.mu * jet.br / sol.nu_r;
    let c2 = (-b.mu * jet.bz + (lambda + b.i_perp * omega2) * sol.nu_z) / omega;
    let eq = Equilibrium::assemble(r0, omega, Vec3::new(sol.nu_r, 0.0, sol.nu_z), lambda, c2, b);
    let lev = LevitationParams { beta, kappa, xi2: sol.xi2, epsilon: kappa.abs() - 1.0 };
    Ok((eq, lev))
}
