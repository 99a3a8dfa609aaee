//! Constrained second variation of the augmented Hamiltonian at a relative
//! equilibrium, its positive-definiteness certificate by successive
//! elimination, the closed-form sufficient conditions at each specialization
//! level, and an eigenvalue oracle.

use nalgebra::{DMatrix, SMatrix};
use serde::{Deserialize, Serialize};

use crate::equilibrium::{Equilibrium, LevitationParams};
use crate::fields::{eval_jet, AxiFieldModel};
use crate::linalg::symmetric_eigenvalues;
use crate::potential::{
    dipole_support_vxx, hessian_blocks, make_rotated_basis, DipolePotential, Potential, PotentialHessianBlocks,
    RotatedBasis,
};
use crate::state::BodyParams;
use crate::{Error, Result};

/// Names of the free variations, in the fixed elimination order.
pub const LABELS: [&str; 8] = ["dp3", "dp1", "dPi2", "dPi1p", "dN2", "dN1", "dx1", "dx3"];
/// Pivots within this fraction of `‖Q‖` of zero are reported as marginal.
pub const MARGIN_BAND: f64 = 1e-10;
/// Pivots below this fraction of `‖Q‖` in magnitude stop the elimination.
pub const ZERO_PIVOT_TOL: f64 = 1e-14;
/// The eigenvalue oracle calls `Q` positive definite when `λ_min` exceeds
/// this fraction of `‖Q‖`.
pub const EIGEN_PD_TOL: f64 = 1e-12;
const POLAR_EPS: f64 = 1e-12;

const P3: usize = 0;
const P1: usize = 1;
const PI2: usize = 2;
const PI1: usize = 3;
const N2: usize = 4;
const N1: usize = 5;
const X1: usize = 6;
const X3: usize = 7;

/// Condition names reported for a failing pivot of the fixed order.
const PIVOT_CONDITIONS: [&str; 8] =
    ["kinetic_p3", "kinetic_p1", "kinetic_pi2", "kinetic_pi1", "lambda", "lambda_tilt", "A", "AC-B^2"];

pub type Matrix8 = SMatrix<f64, 8, 8>;
pub type Matrix12 = SMatrix<f64, 12, 12>;
pub type Matrix12x8 = SMatrix<f64, 12, 8>;

/// Second variation restricted to the 8 free variations [`LABELS`], stored so
/// that `Q(v, v) = vᵀ q v` is the full second differential.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedQuadraticForm {
    pub q: Matrix8,
}

impl ReducedQuadraticForm {
    pub fn labels(&self) -> [&'static str; 8] {
        LABELS
    }

    pub fn value(&self, v: &SMatrix<f64, 8, 1>) -> f64 {
        (v.transpose() * self.q * v)[(0, 0)]
    }

    pub fn to_dmatrix(&self) -> DMatrix<f64> {
        DMatrix::from_iterator(8, 8, self.q.iter().copied())
    }

    /// Largest `|q_ij − q_ji|` relative to the Frobenius norm.
    pub fn asymmetry(&self) -> f64 {
        let n = self.q.norm();
        if n == 0.0 {
            return 0.0;
        }
        (self.q - self.q.transpose()).amax() / n
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Stable,
    /// Some pivot lies within the margin band around zero.
    Marginal,
    NotCertified,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityCertificate {
    pub verdict: Verdict,
    /// Smallest pivot, each divided by the diagonal entry of its variable.
    pub margin: f64,
    /// `λ + d²V(E₂,E₂) > 0` and the tilt condition.
    pub lambda_ok: bool,
    #[serde(rename = "A")]
    pub a: f64,
    #[serde(rename = "B")]
    pub b: f64,
    #[serde(rename = "C")]
    pub c: f64,
    #[serde(skip)]
    pub abc_ok: bool,
    pub pivots: Vec<f64>,
    pub failed_condition: Option<String>,
}

impl StabilityCertificate {
    pub fn is_stable(&self) -> bool {
        self.verdict == Verdict::Stable
    }
}

/// Result of successive elimination in a given variable order.
#[derive(Debug, Clone, PartialEq)]
pub struct Elimination {
    /// Pivots in elimination order, truncated after the first failure.
    pub pivots: Vec<f64>,
    /// Variable eliminated at each step.
    pub order: Vec<usize>,
    /// Step at which the pivot was not positive.
    pub failed_at: Option<usize>,
    /// The failing pivot was below `ZERO_PIVOT_TOL·‖Q‖` in magnitude.
    pub zero_pivot: bool,
    /// Remaining 2×2 block `[[A, B], [B, C]]` once all but two variables are
    /// eliminated.
    pub trailing: Option<(f64, f64, f64)>,
    /// Frobenius norm of the input.
    pub norm: f64,
}

impl Elimination {
    pub fn completed(&self) -> bool {
        self.failed_at.is_none()
    }

    /// `Err(ZeroPivot)` for a degenerate form, otherwise the elimination.
    pub fn require_nondegenerate(self) -> Result<Self> {
        match (self.zero_pivot, self.failed_at) {
            (true, Some(index)) => Err(Error::ZeroPivot { index, pivot: self.pivots[index] }),
            _ => Ok(self),
        }
    }
}

/// Eigenvalue oracle verdict.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenCertificate {
    pub positive_definite: bool,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub norm: f64,
    /// `|λ_min| < MARGIN_BAND·‖Q‖`: the verdict is not meaningful.
    pub in_margin_band: bool,
}

struct Geometry {
    nu_perp: f64,
    nu_z: f64,
    basis: RotatedBasis,
}

fn geometry(eq: &Equilibrium) -> Result<Geometry> {
    if !(eq.r0 > 0.0) {
        return Err(Error::AxisDegeneracy { r: eq.r0 });
    }
    if eq.nu0[2].abs() < POLAR_EPS {
        return Err(Error::PolarDegeneracy { nu_z: eq.nu0[2] });
    }
    Ok(Geometry {
        nu_perp: eq.nu_perp(),
        nu_z: eq.nu0[2],
        basis: make_rotated_basis(nalgebra::Vector2::new(eq.nu0[0], eq.nu0[1])),
    })
}

/// Linear map from the 8 free variations to the 12 state variations
/// `(δx, δp, δν, δπ)` that keeps `C₁`, `C₂`, `J₃` fixed to first order and
/// fixes the orbit phase by `δx₂ = 0`.
pub fn variation_constraints(eq: &Equilibrium, b: &BodyParams) -> Result<Matrix12x8> {
    let g = geometry(eq)?;
    let (s, z) = (g.nu_perp, g.nu_z);
    let (e1, e2) = (g.basis.e(0), g.basis.e(1));
    let mut t = Matrix12x8::zeros();
    let mut set = |col: usize, offset: usize, v: &crate::Vec3| {
        for k in 0..3 {
            t[(offset + k, col)] += v[k];
        }
    };
    let e3 = crate::Vec3::z();
    set(P3, 3, &e3);
    set(P1, 3, &crate::Vec3::x());
    set(PI2, 9, &e2);
    set(PI1, 9, &(e1 - e3 * (s / z)));
    set(PI1, 3, &(crate::Vec3::y() * (s / (eq.r0 * z))));
    set(N2, 6, &e2);
    set(N1, 6, &(e1 - e3 * (s / z)));
    set(N1, 9, &(e1 * (b.i_perp * eq.omega / z)));
    set(X1, 0, &crate::Vec3::x());
    set(X1, 3, &(crate::Vec3::y() * (-b.mass * eq.omega)));
    set(X3, 0, &e3);
    Ok(t)
}

/// Hessian of `h^ξ` in the 12 state coordinates at the support point.
pub fn augmented_hessian(eq: &Equilibrium, b: &BodyParams, v: &dyn Potential) -> Result<Matrix12> {
    let s = eq.support_state();
    let hv = v.hessian(&s.x, &s.nu)?;
    let m = &eq.mult;
    let mut h = Matrix12::zeros();
    for i in 0..3 {
        for j in 0..3 {
            h[(i, j)] = hv[(i, j)];
            h[(i, 6 + j)] = hv[(i, 3 + j)];
            h[(6 + i, j)] = hv[(3 + i, j)];
            h[(6 + i, 6 + j)] = hv[(3 + i, 3 + j)];
        }
        h[(3 + i, 3 + i)] = 1.0 / b.mass;
        h[(9 + i, 9 + i)] = 1.0 / b.i_perp;
        h[(6 + i, 6 + i)] += 2.0 * m.lambda1;
        h[(6 + i, 9 + i)] = m.lambda2;
        h[(9 + i, 6 + i)] = m.lambda2;
    }
    // −ω(x₁p₂ − x₂p₁)
    h[(0, 4)] = -m.omega;
    h[(4, 0)] = -m.omega;
    h[(1, 3)] = m.omega;
    h[(3, 1)] = m.omega;
    Ok(h)
}

/// The reduced form computed as `TᵀHT` from the full 12×12 Hessian.
pub fn projected_hessian(eq: &Equilibrium, b: &BodyParams, v: &dyn Potential) -> Result<ReducedQuadraticForm> {
    let t = variation_constraints(eq, b)?;
    let h = augmented_hessian(eq, b, v)?;
    let q = t.transpose() * h * t;
    Ok(ReducedQuadraticForm { q: (q + q.transpose()) * 0.5 })
}

/// The reduced form assembled term by term from the kinetic, Casimir,
/// momentum and potential contributions.
pub fn reduced_hessian(
    eq: &Equilibrium,
    b: &BodyParams,
    blocks: &PotentialHessianBlocks,
) -> Result<ReducedQuadraticForm> {
    let g = geometry(eq)?;
    let (s, z) = (g.nu_perp, g.nu_z);
    let (m, i) = (b.mass, b.i_perp);
    let (w, l1, l2, r0) = (eq.mult.omega, eq.mult.lambda1, eq.mult.lambda2, eq.r0);
    let mut q = Matrix8::zeros();
    // Adds `c·v_a·v_b` to `Q(v, v)`.
    let mut add = |a: usize, bb: usize, c: f64| {
        if a == bb {
            q[(a, a)] += c;
        } else {
            q[(a, bb)] += 0.5 * c;
            q[(bb, a)] += 0.5 * c;
        }
    };
    add(P3, P3, 1.0 / m);
    add(P1, P1, 1.0 / m);
    // δp₂²/M
    add(X1, X1, m * w * w);
    add(X1, PI1, -2.0 * w * s / (r0 * z));
    add(PI1, PI1, s * s / (m * r0 * r0 * z * z));
    // δπ²/I_⊥
    add(PI1, PI1, 1.0 / (i * z * z));
    add(PI1, N1, 2.0 * w / z);
    add(N1, N1, i * w * w / (z * z));
    add(PI2, PI2, 1.0 / i);
    // 2λ₂⟨δπ, δν⟩
    add(PI1, N1, 2.0 * l2 / (z * z));
    add(PI2, N2, 2.0 * l2);
    add(N1, N1, 2.0 * l2 * i * w / z);
    // 2λ₁δν²
    add(N1, N1, 2.0 * l1 / (z * z));
    add(N2, N2, 2.0 * l1);
    // −2ω(δx₁δp₂ − δx₂δp₁)
    add(X1, X1, 2.0 * m * w * w);
    add(X1, PI1, -2.0 * w * s / (r0 * z));
    // Potential.
    let bl = blocks;
    add(X1, X1, bl.vxx[(0, 0)]);
    add(X1, X3, 2.0 * bl.vxx[(0, 2)]);
    add(X3, X3, bl.vxx[(2, 2)]);
    add(X1, N1, 2.0 * bl.vxn[(0, 0)]);
    add(X1, N2, 2.0 * bl.vxn[(0, 1)]);
    add(X3, N1, 2.0 * bl.vxn[(2, 0)]);
    add(X3, N2, 2.0 * bl.vxn[(2, 1)]);
    add(X1, N1, -2.0 * s / z * bl.vx3[0]);
    add(X3, N1, -2.0 * s / z * bl.vx3[2]);
    add(N1, N1, bl.vnn[(0, 0)]);
    add(N1, N2, 2.0 * bl.vnn[(0, 1)]);
    add(N2, N2, bl.vnn[(1, 1)]);
    add(N1, N1, -2.0 * s / z * bl.vn3[0]);
    add(N1, N2, -2.0 * s / z * bl.vn3[1]);
    add(N1, N1, s * s / (z * z) * bl.v33);
    Ok(ReducedQuadraticForm { q })
}

/// Successive elimination in the fixed order.
pub fn isolated_squares_reduce(q: &DMatrix<f64>) -> Elimination {
    let order: Vec<usize> = (0..q.nrows()).collect();
    isolated_squares_reduce_in_order(q, &order)
}

/// Successive elimination of isolated squares: each step takes the pivot
/// `A_k = Q_kk` and replaces the rest by the Schur complement
/// `Q′ − bbᵀ/A_k`. Stops at the first pivot that is not positive.
pub fn isolated_squares_reduce_in_order(q: &DMatrix<f64>, order: &[usize]) -> Elimination {
    let n = q.nrows();
    assert_eq!(order.len(), n, "order must list every variable once");
    let norm = q.norm();
    let mut a = (q + q.transpose()) * 0.5;
    let mut remaining: Vec<usize> = order.to_vec();
    let mut out = Elimination {
        pivots: Vec::with_capacity(n),
        order: order.to_vec(),
        failed_at: None,
        zero_pivot: false,
        trailing: None,
        norm,
    };
    for step in 0..n {
        if remaining.len() == 2 {
            let (i, j) = (remaining[0], remaining[1]);
            out.trailing = Some((a[(i, i)], a[(i, j)], a[(j, j)]));
        }
        let k = remaining.remove(0);
        let pivot = a[(k, k)];
        out.pivots.push(pivot);
        if pivot.abs() < ZERO_PIVOT_TOL * norm || pivot == 0.0 {
            out.failed_at = Some(step);
            out.zero_pivot = true;
            return out;
        }
        if !(pivot > 0.0) {
            out.failed_at = Some(step);
            return out;
        }
        for &i in &remaining {
            let f = a[(i, k)] / pivot;
            if f == 0.0 {
                continue;
            }
            for &j in &remaining {
                a[(i, j)] -= f * a[(k, j)];
            }
        }
    }
    out
}

/// Eigenvalue oracle (cyclic Jacobi).
pub fn eigen_certificate(q: &DMatrix<f64>) -> EigenCertificate {
    let ev = symmetric_eigenvalues(q);
    let norm = q.norm();
    let lambda_min = ev.first().copied().unwrap_or(0.0);
    EigenCertificate {
        positive_definite: lambda_min > EIGEN_PD_TOL * norm,
        lambda_min,
        lambda_max: ev.last().copied().unwrap_or(0.0),
        norm,
        in_margin_band: lambda_min.abs() < MARGIN_BAND * norm,
    }
}

/// Verdict and margin from a (possibly truncated) pivot list of the fixed
/// order; `scales` normalise each pivot.
fn classify(pivots: &[f64], scales: &[f64], norm: f64, n: usize) -> (Verdict, f64, Option<usize>) {
    let band = MARGIN_BAND * norm;
    let margin = pivots.iter().zip(scales).map(|(p, s)| p / s).fold(f64::INFINITY, f64::min);
    let failed = pivots.iter().position(|p| !(*p > 0.0));
    let verdict = match failed {
        Some(k) if pivots[k].abs() > band => Verdict::NotCertified,
        Some(_) => Verdict::Marginal,
        None if pivots.len() < n => Verdict::NotCertified,
        None if pivots.iter().any(|p| *p <= band) => Verdict::Marginal,
        None => Verdict::Stable,
    };
    (verdict, margin, failed)
}

fn pivot_scales(q: &Matrix8) -> Vec<f64> {
    let norm = q.norm();
    (0..8)
        .map(|k| {
            let d = q[(k, k)].abs();
            if d > 0.0 {
                d
            } else if norm > 0.0 {
                norm
            } else {
                1.0
            }
        })
        .collect()
}

/// Assembles a certificate from the 8 pivots of the fixed order (truncated at
/// the first failure) and the trailing `(A, B, C)`.
fn certificate_from_pivots(
    pivots: Vec<f64>,
    abc: (f64, f64, f64),
    q: &Matrix8,
    name: impl Fn(usize) -> String,
) -> StabilityCertificate {
    let (verdict, margin, failed) = classify(&pivots, &pivot_scales(q), q.norm(), 8);
    let (a, b, c) = abc;
    let lambda_ok = pivots.len() > N1 && pivots[N2] > 0.0 && pivots[N1] > 0.0;
    StabilityCertificate {
        verdict,
        margin,
        lambda_ok,
        a,
        b,
        c,
        abc_ok: a > 0.0 && c > 0.0 && a * c - b * b > 0.0,
        pivots,
        failed_condition: failed.map(name),
    }
}

/// Name of the failing condition among the pivots of the fixed order; for the
/// last pivot `C ≤ 0` is reported in preference to `AC − B²`.
fn default_condition_name(k: usize, c: f64) -> String {
    if k == X3 && !(c > 0.0) {
        "C".to_string()
    } else {
        PIVOT_CONDITIONS[k].to_string()
    }
}

/// Pivots `A` and `(AC − B²)/A` of the trailing block, truncated when `A`
/// fails.
fn trailing_pivots(pivots: &mut Vec<f64>, a: f64, b: f64, c: f64) {
    pivots.push(a);
    if a > 0.0 {
        pivots.push((a * c - b * b) / a);
    }
}

/// Certificate from successive elimination of `Q` in the fixed order.
pub fn elimination_certificate(form: &ReducedQuadraticForm) -> StabilityCertificate {
    let elim = isolated_squares_reduce(&form.to_dmatrix());
    let (a, b, c) = elim.trailing.unwrap_or((f64::NAN, f64::NAN, f64::NAN));
    certificate_from_pivots(elim.pivots, (a, b, c), &form.q, |k| default_condition_name(k, c))
}

/// Closed-form sufficient conditions for a general potential.
///
/// Every denominator coincides with an earlier pivot and is checked positive
/// before it is divided by; a failure ends the evaluation with that
/// condition named and the unreached coefficients left as NaN.
pub fn closed_form_conditions(
    eq: &Equilibrium,
    b: &BodyParams,
    blocks: &PotentialHessianBlocks,
) -> Result<StabilityCertificate> {
    let g = geometry(eq)?;
    let form = reduced_hessian(eq, b, blocks)?;
    let (s, z) = (g.nu_perp, g.nu_z);
    let (m, i, r0, w) = (b.mass, b.i_perp, eq.r0, eq.mult.omega);
    let (lambda, l2) = (eq.mult.lambda, eq.mult.lambda2);
    let bl = blocks;

    let big_g = i * s * s + m * r0 * r0;
    let mut pivots = vec![1.0 / m, 1.0 / m, 1.0 / i, big_g / (i * m * r0 * r0 * z * z)];
    let nan = (f64::NAN, f64::NAN, f64::NAN);
    let name = |k: usize, c: f64| default_condition_name(k, c);

    let k = lambda + bl.vnn[(1, 1)];
    pivots.push(k);
    if !(k > 0.0) {
        return Ok(certificate_from_pivots(pivots, nan, &form.q, |j| name(j, f64::NAN)));
    }
    // Contractions with ν₀⊤ = ν_zE₁ − |ν⊥|e₃.
    let d2_e2_t = z * bl.vnn[(0, 1)] - s * bl.vn3[1];
    let d2_e1_t = z * bl.vxn[(0, 0)] - s * bl.vx3[0];
    let d2_e3_t = z * bl.vxn[(2, 0)] - s * bl.vx3[2];
    let d2_tt = z * z * bl.vnn[(0, 0)] - 2.0 * s * z * bl.vn3[0] + s * s * bl.v33;
    let spin = z * w + l2;

    let d = lambda + d2_tt + i * i * s * s / big_g * spin * spin + s * s * i * w * w - d2_e2_t * d2_e2_t / k;
    pivots.push(d / (z * z));
    if !(d > 0.0) {
        return Ok(certificate_from_pivots(pivots, nan, &form.q, |j| name(j, f64::NAN)));
    }
    let x1 = 2.0 * i * s * eq.p0 / big_g * spin + d2_e1_t - bl.vxn[(0, 1)] * d2_e2_t / k;
    let x3 = d2_e3_t - bl.vxn[(2, 1)] * d2_e2_t / k;
    let a =
        m * w * w * (3.0 * m * r0 * r0 - i * s * s) / big_g + bl.vxx[(0, 0)] - bl.vxn[(0, 1)].powi(2) / k - x1 * x1 / d;
    let bb = bl.vxx[(0, 2)] - bl.vxn[(0, 1)] * bl.vxn[(2, 1)] / k - x1 * x3 / d;
    let c = bl.vxx[(2, 2)] - bl.vxn[(2, 1)].powi(2) / k - x3 * x3 / d;
    trailing_pivots(&mut pivots, a, bb, c);
    Ok(certificate_from_pivots(pivots, (a, bb, c), &form.q, |j| name(j, c)))
}

fn dipole_form(eq: &Equilibrium, b: &BodyParams, model: &AxiFieldModel) -> Result<ReducedQuadraticForm> {
    let v = DipolePotential::new(model.clone(), b);
    let s = eq.support_state();
    reduced_hessian(eq, b, &hessian_blocks(&s.x, &s.nu, &v)?)
}

/// Sufficient conditions for the dipole potential with the axis in the
/// `(e₁, e₃)` plane, written through the cylindrical field jet and the
/// force-balance identities.
pub fn dipole_conditions(eq: &Equilibrium, b: &BodyParams, model: &AxiFieldModel) -> Result<StabilityCertificate> {
    geometry(eq)?;
    if eq.nu0[1] != 0.0 {
        return Err(Error::InvalidParameter("axis must lie in the (e1, e3) plane".into()));
    }
    let form = dipole_form(eq, b, model)?;
    let jet = eval_jet(model, eq.r0, 0.0)?;
    let (nr, nz) = (eq.nu_r(), eq.nu_z());
    let (m, i, r, w, mu) = (b.mass, b.i_perp, eq.r0, eq.omega, b.mu);
    let l2 = eq.mult.lambda2;
    let lambda = mu * jet.bz / nz + w * eq.c2 / nz - i * w * w;
    let big_g = i * nr * nr + m * r * r;
    let spin = nz * w + l2;

    let mut pivots = vec![1.0 / m, 1.0 / m, 1.0 / i, big_g / (i * m * r * r * nz * nz), lambda];
    let nan = (f64::NAN, f64::NAN, f64::NAN);
    if !(lambda > 0.0) {
        return Ok(certificate_from_pivots(pivots, nan, &form.q, |j| default_condition_name(j, f64::NAN)));
    }
    let d = lambda + i * i * nr * nr / big_g * spin * spin + nr * nr * i * w * w;
    pivots.push(d / (nz * nz));
    let tilt = 2.0 * i * nr * eq.p0 / big_g * spin + (m * b.g + mu * jet.br / r * nz);
    let vert = m * w * w * r - mu * jet.br / r * nr;
    let (v11, v13, v33) = dipole_support_vxx(&jet, r, nr, nz, mu);
    let a = m * w * w * (3.0 * m * r * r - i * nr * nr) / big_g + v11 - tilt * tilt / d;
    let bb = v13 - tilt * vert / d;
    let c = v33 - vert * vert / d;
    trailing_pivots(&mut pivots, a, bb, c);
    Ok(certificate_from_pivots(pivots, (a, bb, c), &form.q, |j| default_condition_name(j, c)))
}

/// Conditions for an equatorial equilibrium with vertical axis in a
/// mirror-symmetric field.
///
/// The failing condition is named in the order `lambda`,
/// `geometric_vertical` (`−σB_z,zz > 0`), `geometric_radial`
/// (`−σ(3B_z,r/r + B_z,rr) > 0`), `spin`.
pub fn orbitron_conditions(eq: &Equilibrium, b: &BodyParams, model: &AxiFieldModel) -> Result<StabilityCertificate> {
    if eq.nu_perp() > POLAR_EPS {
        return Err(Error::NotEquatorial { nu_r: eq.nu_r() });
    }
    let form = dipole_form(eq, b, model)?;
    let jet = eval_jet(model, eq.r0, 0.0)?;
    let (m, i, r, w, mu, sigma) = (b.mass, b.i_perp, eq.r0, eq.omega, b.mu, eq.sigma);
    let pi0 = eq.pi0[2];
    let lambda = sigma * mu * jet.bz + w * pi0 - i * w * w;
    let a = 3.0 * m * w * w - mu * sigma * jet.bz_rr;
    let bb = 0.0;
    let c = if lambda > 0.0 { -sigma * mu * jet.bz_zz - (m * w * w * r).powi(2) / lambda } else { f64::NAN };

    let mut pivots = vec![1.0 / m, 1.0 / m, 1.0 / i, 1.0 / i, lambda];
    if lambda > 0.0 {
        pivots.push(lambda);
        trailing_pivots(&mut pivots, a, bb, c);
    }
    let failed = if !(lambda > 0.0) {
        Some("lambda")
    } else if !(-sigma * jet.bz_zz > 0.0) {
        Some("geometric_vertical")
    } else if !(-sigma * (3.0 * jet.bz_r / r + jet.bz_rr) > 0.0) {
        Some("geometric_radial")
    } else if !(w * pi0 > -sigma * mu * jet.bz + i * w * w + mu * jet.bz_r.powi(2) / (-sigma * jet.bz_zz)) {
        Some("spin")
    } else {
        None
    };
    let mut cert = certificate_from_pivots(pivots, (a, bb, c), &form.q, |j| default_condition_name(j, c));
    if let Some(name) = failed {
        cert.failed_condition = Some(name.to_string());
    }
    Ok(cert)
}

/// [`certify`] for an equatorial equilibrium, with a failure named by the
/// geometric conditions of [`orbitron_conditions`] instead of by pivot.
pub fn certify_orbitron(eq: &Equilibrium, b: &BodyParams, model: &AxiFieldModel) -> Result<StabilityCertificate> {
    let mut cert = certify(eq, b, &DipolePotential::new(model.clone(), b))?;
    if !cert.is_stable() {
        if let Some(name) = orbitron_conditions(eq, b, model)?.failed_condition {
            cert.failed_condition = Some(name);
        }
    }
    Ok(cert)
}

/// Levitation certificate with the scaled bookkeeping and the small-`ε`
/// diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevitationReport {
    pub certificate: StabilityCertificate,
    /// `rA/(Mg)`, `rB/(Mg)`, `rC/(Mg)`.
    pub a: f64,
    pub b: f64,
    pub c: f64,
    /// Leading terms of `a` and `c` as `ε → 0`.
    pub a_asymptotic: f64,
    pub c_asymptotic: f64,
    /// `−σB_z,zz > 0` and `−σ(3B_z,r/r + B_z,rr) > 0`.
    pub geometric_vertical: bool,
    pub geometric_radial: bool,
    /// `ωπ₀ − (−σμB_z + I_⊥ω² + Mgr)`, which must be large and positive.
    pub dynamic_excess: f64,
    /// `λ / (Mgr/2)`, which must be large.
    pub lambda_ratio: f64,
}

/// Exact `A, B, C` for the levitating equilibrium, using the linear part
/// `B_r = −B′r/2` and `νᵣ = −Mgr/(2κλ)`.
pub fn levitation_conditions(
    eq: &Equilibrium,
    lev: &LevitationParams,
    b: &BodyParams,
    model: &AxiFieldModel,
) -> Result<LevitationReport> {
    geometry(eq)?;
    let form = dipole_form(eq, b, model)?;
    let jet = eval_jet(model, eq.r0, 0.0)?;
    let (nr, nz) = (eq.nu_r(), eq.nu_z());
    let (m, i, r, w, mu, sigma) = (b.mass, b.i_perp, eq.r0, eq.omega, b.mu, eq.sigma);
    let (lambda, l2, kappa) = (eq.mult.lambda, eq.mult.lambda2, lev.kappa);
    let mg = m * b.g;
    let xi2 = w * w * r / b.g;
    let big_g = i * nr * nr + m * r * r;
    let spin = nz * w + l2;

    let mut pivots = vec![1.0 / m, 1.0 / m, 1.0 / i, big_g / (i * m * r * r * nz * nz), lambda];
    let mut abc = (f64::NAN, f64::NAN, f64::NAN);
    if lambda > 0.0 {
        let d = lambda + i * i * nr * nr / big_g * spin * spin + nr * nr * i * w * w;
        pivots.push(d / (nz * nz));
        let tilt = 2.0 * i * nr * eq.p0 / big_g * spin + mg * (1.0 - nz / (2.0 * kappa));
        let vert = mg * (xi2 - mg * r / (4.0 * kappa * kappa * lambda));
        let a = m * w * w * (3.0 * m * r * r - i * nr * nr) / big_g - mu * nz * jet.bz_rr - tilt * tilt / d;
        let bb = -mu * nr * jet.bz_rr - tilt * vert / d;
        let c = -mu * nz * jet.bz_zz - vert * vert / d;
        trailing_pivots(&mut pivots, a, bb, c);
        abc = (a, bb, c);
    }
    let certificate = certificate_from_pivots(pivots, abc, &form.q, |j| default_condition_name(j, abc.2));
    let scale = r / mg;
    let pi0 = sigma * eq.c2;
    Ok(LevitationReport {
        a: scale * abc.0,
        b: scale * abc.1,
        c: scale * abc.2,
        a_asymptotic: -sigma * mu * scale * (3.0 * jet.bz_r / r + jet.bz_rr),
        c_asymptotic: -sigma * mu * scale * jet.bz_zz,
        geometric_vertical: -sigma * jet.bz_zz > 0.0,
        geometric_radial: -sigma * (3.0 * jet.bz_r / r + jet.bz_rr) > 0.0,
        dynamic_excess: w * pi0 - (-sigma * mu * jet.bz + i * w * w + mg * r),
        lambda_ratio: lambda / (0.5 * mg * r),
        certificate,
    })
}

/// Certificate for any potential: the reduced form is assembled from the
/// potential's Hessian blocks and certified by successive elimination.
pub fn certify(eq: &Equilibrium, b: &BodyParams, v: &dyn Potential) -> Result<StabilityCertificate> {
    Ok(elimination_certificate(&certified_form(eq, b, v)?))
}

/// The reduced form used by [`certify`].
pub fn certified_form(eq: &Equilibrium, b: &BodyParams, v: &dyn Potential) -> Result<ReducedQuadraticForm> {
    let s = eq.support_state();
    reduced_hessian(eq, b, &hessian_blocks(&s.x, &s.nu, v)?)
}
