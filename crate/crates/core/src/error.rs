use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("evaluation point ({r}, {z}) is within the guard radius of a dipole source")]
    SourceSingularity { r: f64, z: f64 },

    #[error("Cartesian assembly requested on the symmetry axis (r = {r})")]
    AxisDegeneracy { r: f64 },

    #[error("symmetry axis too close to the equatorial plane: nu_z = {nu_z}")]
    PolarDegeneracy { nu_z: f64 },

    #[error("potential evaluation failed: {0}")]
    Potential(String),

    #[error("state left the finite range at step {step}")]
    NonFinite { step: usize },

    #[error("no relative equilibrium: {0}")]
    NoEquilibrium(String),

    #[error("field is not mirror symmetric at the support point: |B_r| = {br}")]
    NotMirrorSymmetric { br: f64 },

    #[error("orbitron branch requires -sigma*B_z,r > 0 (sigma = {sigma}, B_z,r = {bz_r})")]
    WrongFieldSign { sigma: f64, bz_r: f64 },

    #[error("equatorial orbitron equilibria require g = 0 (got g = {g})")]
    GravityPresent { g: f64 },

    #[error("levitation discriminant 1 + beta^2 - kappa^2 = {0} is negative")]
    NoRealSolution(f64),

    #[error("levitation centrifugal parameter xi^2 = {0} is not positive")]
    NegativeCentrifugal(f64),

    #[error("levitation requires beta < 0 (got {0})")]
    BadSign(f64),

    #[error("equilibrium is not equatorial: nu_r = {nu_r}")]
    NotEquatorial { nu_r: f64 },

    #[error("degenerate quadratic form: pivot {index} = {pivot} is numerically zero")]
    ZeroPivot { index: usize, pivot: f64 },
}

impl Error {
    /// Short machine-readable code, used for error rows in scan tables.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidParameter(_) => "invalid_parameter",
            Error::SourceSingularity { .. } => "source_singularity",
            Error::AxisDegeneracy { .. } => "axis_degeneracy",
            Error::PolarDegeneracy { .. } => "polar_degeneracy",
            Error::Potential(_) => "potential",
            Error::NonFinite { .. } => "non_finite",
            Error::NoEquilibrium(_) => "no_equilibrium",
            Error::NotMirrorSymmetric { .. } => "not_mirror_symmetric",
            Error::WrongFieldSign { .. } => "wrong_field_sign",
            Error::GravityPresent { .. } => "gravity_present",
            Error::NoRealSolution(_) => "no_real_solution",
            Error::NegativeCentrifugal(_) => "negative_centrifugal",
            Error::BadSign(_) => "bad_sign",
            Error::NotEquatorial { .. } => "not_equatorial",
            Error::ZeroPivot { .. } => "zero_pivot",
        }
    }
}
