//! Axisymmetric, source-free magnetic field models.
//!
//! Every model provides its cylindrical "jet" at `(r, z)`: `B_r`, `B_z`, all
//! first partials and the second partials of `B_z`. Second partials of `B_r`
//! follow from the magnetostatic identities and are never stored.
//!
//! Cartesian Jacobian and Hessian of `B` are assembled from the jet off the
//! symmetry axis.

use std::ops::Add;

use serde::{Deserialize, Serialize};

use crate::{Error, Mat3, Result, Vec3};

/// Relative guard radius around dipole sources, in units of `h`.
pub const SOURCE_GUARD: f64 = 1e-9;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct FieldJet {
    pub br: f64,
    pub bz: f64,
    pub br_r: f64,
    pub br_z: f64,
    pub bz_r: f64,
    pub bz_z: f64,
    pub bz_rr: f64,
    pub bz_rz: f64,
    pub bz_zz: f64,
}

impl Add for FieldJet {
    type Output = FieldJet;

    fn add(self, o: FieldJet) -> FieldJet {
        FieldJet {
            br: self.br + o.br,
            bz: self.bz + o.bz,
            br_r: self.br_r + o.br_r,
            br_z: self.br_z + o.br_z,
            bz_r: self.bz_r + o.bz_r,
            bz_z: self.bz_z + o.bz_z,
            bz_rr: self.bz_rr + o.bz_rr,
            bz_rz: self.bz_rz + o.bz_rz,
            bz_zz: self.bz_zz + o.bz_zz,
        }
    }
}

impl FieldJet {
    /// `|B| + |∇B|·scale`, used to normalise residuals.
    pub fn magnitude(&self, scale: f64) -> f64 {
        let b = self.br.hypot(self.bz);
        let db = [self.br_r, self.br_z, self.bz_r, self.bz_z].iter().map(|v| v * v).sum::<f64>().sqrt();
        b + db * scale
    }

    /// `(3/r)·B_z,r + B_z,rr`; the radial curvature that enters the equatorial
    /// stability conditions.
    pub fn radial_combo(&self, r: f64) -> f64 {
        3.0 * self.bz_r / r + self.bz_rr
    }
}

/// Field model descriptor.
///
/// `DipolePair` is two coaxial dipoles at `z = ±h` with equal moments along
/// `e₃`; `q` already contains `μ₀/4π` (a negative `q` flips both moments).
/// `Linear` is the gradient field `B_z = B₀ + B′z`, `B_r = −B′r/2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum AxiFieldModel {
    DipolePair {
        q: f64,
        h: f64,
    },
    Linear {
        #[serde(rename = "B0")]
        b0: f64,
        #[serde(rename = "Bprime")]
        b_prime: f64,
    },
    Composite {
        parts: Vec<AxiFieldModel>,
    },
}

impl AxiFieldModel {
    pub fn dipole_pair(q: f64, h: f64) -> Self {
        AxiFieldModel::DipolePair { q, h }
    }

    pub fn linear(b0: f64, b_prime: f64) -> Self {
        AxiFieldModel::Linear { b0, b_prime }
    }

    pub fn composite(parts: Vec<AxiFieldModel>) -> Self {
        AxiFieldModel::Composite { parts }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            AxiFieldModel::DipolePair { q, h } => {
                if !(q.is_finite() && *q != 0.0) {
                    return Err(Error::InvalidParameter(format!("dipole pair q must be non-zero, got {q}")));
                }
                if !(h.is_finite() && *h > 0.0) {
                    return Err(Error::InvalidParameter(format!("dipole pair h must be positive, got {h}")));
                }
                Ok(())
            }
            AxiFieldModel::Linear { b0, b_prime } => {
                if b0.is_finite() && b_prime.is_finite() {
                    Ok(())
                } else {
                    Err(Error::InvalidParameter("linear field parameters must be finite".into()))
                }
            }
            AxiFieldModel::Composite { parts } => {
                if parts.is_empty() {
                    return Err(Error::InvalidParameter("composite field has no parts".into()));
                }
                parts.iter().try_for_each(|p| p.validate())
            }
        }
    }

    /// True when every part is symmetric under `z → −z` (up to a uniform
    /// offset, which `Linear` with `B′ = 0` is).
    pub fn is_mirror_symmetric(&self) -> bool {
        match self {
            AxiFieldModel::DipolePair { .. } => true,
            AxiFieldModel::Linear { b_prime, .. } => *b_prime == 0.0,
            AxiFieldModel::Composite { parts } => parts.iter().all(|p| p.is_mirror_symmetric()),
        }
    }

    /// Model with every source strength multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        match self {
            AxiFieldModel::DipolePair { q, h } => AxiFieldModel::DipolePair { q: q * factor, h: *h },
            AxiFieldModel::Linear { b0, b_prime } => {
                AxiFieldModel::Linear { b0: b0 * factor, b_prime: b_prime * factor }
            }
            AxiFieldModel::Composite { parts } => {
                AxiFieldModel::Composite { parts: parts.iter().map(|p| p.scaled(factor)).collect() }
            }
        }
    }
}

/// Jet of a single axial dipole of strength `q` at height `z0`, observed at
/// `(r, z)`; `u = z − z0`.
///
/// Terms odd in `u` are formed as `(even factor)·u` so that the two halves of
/// a mirror-symmetric pair cancel exactly on the mid-plane.
fn single_dipole_jet(q: f64, r: f64, u: f64) -> FieldJet {
    let r2 = r * r;
    let u2 = u * u;
    let d = r2 + u2;
    let d52 = d.powf(-2.5);
    let d72 = d52 / d;
    let d92 = d72 / d;
    let bz_r = 3.0 * q * r * (r2 - 4.0 * u2) * d72;
    FieldJet {
        br: (3.0 * q * r * d52) * u,
        bz: q * (2.0 * u2 - r2) * d52,
        br_r: (3.0 * q * (u2 - 4.0 * r2) * d72) * u,
        br_z: bz_r,
        bz_r,
        bz_z: (3.0 * q * (3.0 * r2 - 2.0 * u2) * d72) * u,
        bz_rr: 3.0 * q * (-4.0 * r2 * r2 + 27.0 * r2 * u2 - 4.0 * u2 * u2) * d92,
        bz_rz: (15.0 * q * r * (4.0 * u2 - 3.0 * r2) * d92) * u,
        bz_zz: 3.0 * q * (3.0 * r2 * r2 - 24.0 * r2 * u2 + 8.0 * u2 * u2) * d92,
    }
}

/// Analytic jet of `model` at cylindrical `(r, z)`, `r ≥ 0`.
pub fn eval_jet(model: &AxiFieldModel, r: f64, z: f64) -> Result<FieldJet> {
    if !(r.is_finite() && z.is_finite()) || r < 0.0 {
        return Err(Error::InvalidParameter(format!("bad evaluation point ({r}, {z})")));
    }
    match model {
        AxiFieldModel::DipolePair { q, h } => {
            let guard = SOURCE_GUARD * h;
            if r.hypot(z - h) < guard || r.hypot(z + h) < guard {
                return Err(Error::SourceSingularity { r, z });
            }
            Ok(single_dipole_jet(*q, r, z - h) + single_dipole_jet(*q, r, z + h))
        }
        AxiFieldModel::Linear { b0, b_prime } => Ok(FieldJet {
            br: -0.5 * b_prime * r,
            bz: b0 + b_prime * z,
            br_r: -0.5 * b_prime,
            bz_z: *b_prime,
            ..FieldJet::default()
        }),
        AxiFieldModel::Composite { parts } => {
            let mut acc = FieldJet::default();
            for p in parts {
                acc = acc + eval_jet(p, r, z)?;
            }
            Ok(acc)
        }
    }
}

/// Cartesian field vector at `x`.
pub fn field_at(model: &AxiFieldModel, x: &Vec3) -> Result<Vec3> {
    let r = x[0].hypot(x[1]);
    let jet = eval_jet(model, r, x[2])?;
    Ok(field_from_jet(&jet, x))
}

pub fn field_from_jet(jet: &FieldJet, x: &Vec3) -> Vec3 {
    let r = x[0].hypot(x[1]);
    if r == 0.0 {
        Vec3::new(0.0, 0.0, jet.bz)
    } else {
        Vec3::new(jet.br * x[0] / r, jet.br * x[1] / r, jet.bz)
    }
}

/// Mid-plane values of a dipole pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MidplaneValues {
    pub bz: f64,
    pub bz_r: f64,
    pub bz_zz: f64,
    /// `(3/r)·B_z,r + B_z,rr`.
    pub radial_combo: f64,
}

/// Closed-form mid-plane quantities of a dipole pair at radius `r0`.
///
/// The radial combination is `−6q(r⁴ − 18r²h² + 16h⁴)/D^{9/2}`.
pub fn dipole_pair_midplane(q: f64, h: f64, r0: f64) -> Result<MidplaneValues> {
    if !(r0 > 0.0 && q > 0.0 && h > 0.0) {
        return Err(Error::InvalidParameter(format!("need r0, q, h > 0 (got {r0}, {q}, {h})")));
    }
    let r2 = r0 * r0;
    let h2 = h * h;
    let d = r2 + h2;
    Ok(MidplaneValues {
        bz: 2.0 * q * (2.0 * h2 - r2) * d.powf(-2.5),
        bz_r: -6.0 * q * r0 * (4.0 * h2 - r2) * d.powf(-3.5),
        bz_zz: 6.0 * q * (3.0 * r2 * r2 - 24.0 * r2 * h2 + 8.0 * h2 * h2) * d.powf(-4.5),
        radial_combo: -6.0 * q * (r2 * r2 - 18.0 * r2 * h2 + 16.0 * h2 * h2) * d.powf(-4.5),
    })
}

/// `J[i][j] = ∂B_i/∂x_j`, symmetric for a curl-free field.
pub fn cartesian_jacobian(jet: &FieldJet, x: &Vec3) -> Result<Mat3> {
    let r = x[0].hypot(x[1]);
    if r == 0.0 {
        return Err(Error::AxisDegeneracy { r });
    }
    let br_over_r = jet.br / r;
    let mut j = Mat3::zeros();
    for a in 0..2 {
        for c in 0..2 {
            let delta = if a == c { 1.0 } else { 0.0 };
            j[(a, c)] = br_over_r * delta + (jet.br_r - br_over_r) * x[a] * x[c] / (r * r);
        }
        j[(2, a)] = jet.bz_r * x[a] / r;
        j[(a, 2)] = jet.br_z * x[a] / r;
    }
    j[(2, 2)] = jet.bz_z;
    Ok(j)
}

/// Second derivatives `H[i][(j, k)] = ∂²B_i/∂x_j∂x_k`.
///
/// `B = −∇ψ` with a harmonic ψ, so the tensor is symmetric in all three
/// indices and only the number of `z` indices matters.
pub fn cartesian_hessian(jet: &FieldJet, x: &Vec3) -> Result<[Mat3; 3]> {
    let r = x[0].hypot(x[1]);
    if r == 0.0 {
        return Err(Error::AxisDegeneracy { r });
    }
    let delta = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
    let tilt = (jet.bz_z + 2.0 * jet.br / r) / r;
    let r3 = r * r * r;
    let component = |i: usize, j: usize, k: usize| -> f64 {
        let mut planar: Vec<usize> = [i, j, k].into_iter().filter(|&n| n < 2).collect();
        match planar.len() {
            3 => {
                let (a, c, d) = (planar[0], planar[1], planar[2]);
                let xxx = x[a] * x[c] * x[d];
                -jet.bz_rz * xxx / r3
                    - tilt * ((x[a] * delta(c, d) + x[c] * delta(a, d) + x[d] * delta(a, c)) / r - 4.0 * xxx / r3)
            }
            2 => {
                let d = planar.pop().unwrap();
                let c = planar.pop().unwrap();
                jet.bz_r / r * delta(c, d) + (jet.bz_rr - jet.bz_r / r) * x[c] * x[d] / (r * r)
            }
            1 => jet.bz_rz * x[planar[0]] / r,
            _ => jet.bz_zz,
        }
    };
    let mut out = [Mat3::zeros(); 3];
    for (i, m) in out.iter_mut().enumerate() {
        for j in 0..3 {
            for k in 0..3 {
                m[(j, k)] = component(i, j, k);
            }
        }
    }
    Ok(out)
}

/// `(div, curl)` residuals of the cylindrical jet; `div` uses the on-axis
/// limit `2·B_r,r + B_z,z` at `r = 0`.
pub fn maxwell_residual(model: &AxiFieldModel, r: f64, z: f64) -> Result<(f64, f64)> {
    let jet = eval_jet(model, r, z)?;
    Ok(jet_maxwell_residual(&jet, r))
}

pub fn jet_maxwell_residual(jet: &FieldJet, r: f64) -> (f64, f64) {
    let div = if r > 0.0 { jet.bz_z + jet.br_r + jet.br / r } else { jet.bz_z + 2.0 * jet.br_r };
    (div, jet.br_z - jet.bz_r)
}

/// Residual of `B_z,zz + B_z,rr + B_z,r/r = 0` (requires `r > 0`).
pub fn harmonic_residual(jet: &FieldJet, r: f64) -> f64 {
    jet.bz_zz + jet.bz_rr + jet.bz_r / r
}
