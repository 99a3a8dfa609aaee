//! Equations of motion on the reduced space and their numerical integration.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::equilibrium::Equilibrium;
use crate::potential::Potential;
use crate::state::{casimirs, hamiltonian, momentum_j3, BodyParams, ReducedState};
use crate::{Error, Result};

/// Points of the coarse phase grid used to align a state with an orbit.
pub const PHASE_GRID: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Rk4,
    /// RK4 followed by renormalisation of `ν` after every step.
    Rk4Projected,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub dt: f64,
    pub steps: usize,
    pub scheme: Scheme,
    pub record_every: usize,
}

impl IntegratorConfig {
    pub fn new(dt: f64, steps: usize, scheme: Scheme) -> Self {
        Self { dt, steps, scheme, record_every: 1 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::InvalidParameter(format!("dt must be positive, got {}", self.dt)));
        }
        if self.steps == 0 || self.record_every == 0 {
            return Err(Error::InvalidParameter("steps and record_every must be at least 1".into()));
        }
        Ok(())
    }
}

/// Default step: 2000 steps per revolution when `ω ≠ 0`, else 1 ms.
pub fn default_dt(omega: f64) -> f64 {
    if omega != 0.0 && omega.is_finite() {
        2.0 * PI / omega.abs() / 2000.0
    } else {
        1e-3
    }
}

/// `(h, J₃, C₁, C₂)` evaluated at one state.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Invariants {
    pub h: f64,
    #[serde(rename = "J3")]
    pub j3: f64,
    #[serde(rename = "C1")]
    pub c1: f64,
    #[serde(rename = "C2")]
    pub c2: f64,
}

impl Invariants {
    pub fn of(s: &ReducedState, b: &BodyParams, v: &dyn Potential) -> Result<Self> {
        let (c1, c2) = casimirs(s);
        Ok(Self { h: hamiltonian(s, b, v)?, j3: momentum_j3(s), c1, c2 })
    }

    /// Componentwise `|self − reference|`, divided by `|reference|` where that
    /// is non-zero.
    pub fn relative_drift(&self, reference: &Invariants) -> Invariants {
        let rel = |a: f64, r: f64| {
            let d = (a - r).abs();
            if r != 0.0 {
                d / r.abs()
            } else {
                d
            }
        };
        Invariants {
            h: rel(self.h, reference.h),
            j3: rel(self.j3, reference.j3),
            c1: rel(self.c1, reference.c1),
            c2: rel(self.c2, reference.c2),
        }
    }

    fn max_with(&self, o: &Invariants) -> Invariants {
        Invariants { h: self.h.max(o.h), j3: self.j3.max(o.j3), c1: self.c1.max(o.c1), c2: self.c2.max(o.c2) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample {
    pub t: f64,
    pub state: ReducedState,
    pub invariants: Invariants,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub samples: Vec<TrajectorySample>,
    /// Largest relative drift of each invariant over every step.
    pub max_drift: Invariants,
    /// Largest `| |ν|² − 1 |` seen before projection (`rk4_projected` only).
    pub max_projection_drift: f64,
    pub final_state: ReducedState,
}

/// Time derivative of the reduced state.
pub fn eom_rhs(s: &ReducedState, b: &BodyParams, v: &dyn Potential) -> Result<ReducedState> {
    let gx = v.grad_x(&s.x, &s.nu)?;
    let gn = v.grad_nu(&s.x, &s.nu)?;
    Ok(ReducedState::new(s.p / b.mass, -gx, s.pi.cross(&s.nu) / b.i_perp, gn.cross(&s.nu)))
}

/// One classic RK4 step.
pub fn rk4_step(s: &ReducedState, dt: f64, b: &BodyParams, v: &dyn Potential) -> Result<ReducedState> {
    let k1 = eom_rhs(s, b, v)?;
    let k2 = eom_rhs(&s.axpy(0.5 * dt, &k1), b, v)?;
    let k3 = eom_rhs(&s.axpy(0.5 * dt, &k2), b, v)?;
    let k4 = eom_rhs(&s.axpy(dt, &k3), b, v)?;
    Ok(ReducedState::new(
        s.x + (k1.x + 2.0 * k2.x + 2.0 * k3.x + k4.x) * (dt / 6.0),
        s.p + (k1.p + 2.0 * k2.p + 2.0 * k3.p + k4.p) * (dt / 6.0),
        s.nu + (k1.nu + 2.0 * k2.nu + 2.0 * k3.nu + k4.nu) * (dt / 6.0),
        s.pi + (k1.pi + 2.0 * k2.pi + 2.0 * k3.pi + k4.pi) * (dt / 6.0),
    ))
}

pub fn integrate(s0: &ReducedState, cfg: &IntegratorConfig, b: &BodyParams, v: &dyn Potential) -> Result<Trajectory> {
    cfg.validate()?;
    if !s0.is_finite() {
        return Err(Error::NonFinite { step: 0 });
    }
    let inv0 = Invariants::of(s0, b, v)?;
    let mut samples = Vec::with_capacity(cfg.steps / cfg.record_every + 2);
    samples.push(TrajectorySample { t: 0.0, state: *s0, invariants: inv0 });

    let mut s = *s0;
    let mut max_drift = Invariants::default();
    let mut max_projection_drift: f64 = 0.0;
    for step in 1..=cfg.steps {
        s = rk4_step(&s, cfg.dt, b, v).map_err(|e| match e {
            Error::SourceSingularity { .. } | Error::AxisDegeneracy { .. } => Error::NonFinite { step },
            other => other,
        })?;
        if cfg.scheme == Scheme::Rk4Projected {
            let n2 = s.nu.norm_squared();
            max_projection_drift = max_projection_drift.max((n2 - 1.0).abs());
            s.nu /= n2.sqrt();
        }
        if !s.is_finite() {
            return Err(Error::NonFinite { step });
        }
        let inv = Invariants::of(&s, b, v)?;
        max_drift = max_drift.max_with(&inv.relative_drift(&inv0));
        if step % cfg.record_every == 0 || step == cfg.steps {
            samples.push(TrajectorySample { t: step as f64 * cfg.dt, state: s, invariants: inv });
        }
    }
    Ok(Trajectory { samples, max_drift, max_projection_drift, final_state: s })
}

/// The relative-equilibrium orbit: the support state rotated by `ω·t` about `e₃`.
pub fn relative_equilibrium_orbit(eq: &Equilibrium, t: f64) -> ReducedState {
    eq.support_state().rotated_z(eq.omega * t)
}

/// Per-block normalisation used by [`orbit_distance`].
fn block_scales(reference: &ReducedState) -> [f64; 4] {
    let s = |n: f64| if n > 0.0 { n } else { 1.0 };
    [s(reference.x.norm()), s(reference.p.norm()), s(reference.nu.norm()), s(reference.pi.norm())]
}

fn block_distance(s: &ReducedState, reference: &ReducedState, scales: &[f64; 4]) -> f64 {
    [
        (s.x - reference.x).norm() / scales[0],
        (s.p - reference.p).norm() / scales[1],
        (s.nu - reference.nu).norm() / scales[2],
        (s.pi - reference.pi).norm() / scales[3],
    ]
    .into_iter()
    .fold(0.0, f64::max)
}

/// Distance from `s` to the orbit of `eq`: the largest relative Euclidean
/// distance over the four blocks, minimised over the rotation phase.
///
/// The phase is located on a [`PHASE_GRID`]-point grid and then refined by
/// golden-section search inside the best grid cell.
pub fn orbit_distance(s: &ReducedState, eq: &Equilibrium) -> f64 {
    let support = eq.support_state();
    let scales = block_scales(&support);
    let at = |phi: f64| block_distance(s, &support.rotated_z(phi), &scales);
    let step = 2.0 * PI / PHASE_GRID as f64;
    let (best_k, _) = (0..PHASE_GRID).map(|k| (k, at(k as f64 * step))).fold((0, f64::INFINITY), |acc, (k, d)| {
        if d < acc.1 {
            (k, d)
        } else {
            acc
        }
    });

    let inv_phi = 0.5 * (5f64.sqrt() - 1.0);
    let (mut lo, mut hi) = ((best_k as f64 - 1.0) * step, (best_k as f64 + 1.0) * step);
    let mut c = hi - inv_phi * (hi - lo);
    let mut d = lo + inv_phi * (hi - lo);
    let (mut fc, mut fd) = (at(c), at(d));
    for _ in 0..80 {
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = at(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = at(d);
        }
        if hi - lo < 1e-14 {
            break;
        }
    }
    fc.min(fd).min(at(best_k as f64 * step))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrbitDeviation {
    pub initial: f64,
    pub max: f64,
    pub final_distance: f64,
    /// Periods completed before stopping (less than requested when the
    /// deviation exceeded `stop_above`).
    pub periods_completed: f64,
}

/// How long and how closely [`orbit_deviation`] follows a trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrbitWatch {
    /// Revolutions of the equilibrium to integrate.
    pub periods: f64,
    pub steps_per_period: usize,
    /// Steps between distance evaluations.
    pub check_every: usize,
    /// Stop once the distance exceeds this.
    pub stop_above: f64,
}

/// Integrates `s0` for `watch.periods` revolutions of `eq` and tracks the
/// phase-aligned distance to the relative-equilibrium orbit once per
/// `watch.check_every` steps. Integration stops early once the distance
/// exceeds `watch.stop_above` or the state stops being finite.
pub fn orbit_deviation(
    eq: &Equilibrium,
    s0: &ReducedState,
    b: &BodyParams,
    v: &dyn Potential,
    watch: OrbitWatch,
) -> Result<OrbitDeviation> {
    let OrbitWatch { periods, steps_per_period, check_every, stop_above } = watch;
    if eq.omega == 0.0 {
        return Err(Error::InvalidParameter("orbit deviation needs omega != 0".into()));
    }
    let period = 2.0 * PI / eq.omega.abs();
    let dt = period / steps_per_period as f64;
    let total = (periods * steps_per_period as f64).round() as usize;
    let initial = orbit_distance(s0, eq);
    let mut s = *s0;
    let mut max = initial;
    let mut last = initial;
    for step in 1..=total {
        let next = rk4_step(&s, dt, b, v);
        match next {
            Ok(n) if n.is_finite() => s = n,
            _ => {
                return Ok(OrbitDeviation {
                    initial,
                    max: f64::INFINITY,
                    final_distance: f64::INFINITY,
                    periods_completed: step as f64 / steps_per_period as f64,
                })
            }
        }
        if step % check_every.max(1) == 0 || step == total {
            last = orbit_distance(&s, eq);
            max = max.max(last);
            if max > stop_above {
                return Ok(OrbitDeviation {
                    initial,
                    max,
                    final_distance: last,
                    periods_completed: step as f64 / steps_per_period as f64,
                });
            }
        }
    }
    Ok(OrbitDeviation { initial, max, final_distance: last, periods_completed: periods })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::FnPotential;
    use crate::Vec3;

    fn free() -> FnPotential<impl Fn(&Vec3, &Vec3) -> f64 + Send + Sync> {
        FnPotential::new(|_: &Vec3, _: &Vec3| 0.0)
    }

    #[test]
    fn free_precession_rhs() {
        let b = BodyParams::new(1.0, 1.0, 1.0, 1.0, 0.0).unwrap();
        let s = ReducedState::new(Vec3::zeros(), Vec3::zeros(), Vec3::x(), Vec3::z());
        let d = eom_rhs(&s, &b, &free()).unwrap();
        assert_eq!(d.nu, Vec3::y());
        assert_eq!(d.p, Vec3::zeros());
        assert_eq!(d.pi, Vec3::zeros());
    }

    #[test]
    fn free_top_conserves_c2() {
        let b = BodyParams::new(1.0, 0.7, 1.0, 1.0, 0.0).unwrap();
        let s = ReducedState::new(
            Vec3::new(0.1, 0.2, 0.3),
            Vec3::new(0.5, -0.1, 0.2),
            Vec3::new(0.6, 0.0, 0.8),
            Vec3::new(0.3, 1.1, -0.4),
        );
        let cfg = IntegratorConfig::new(1e-3, 10_000, Scheme::Rk4);
        let traj = integrate(&s, &cfg, &b, &free()).unwrap();
        assert!(traj.max_drift.c2 < 1e-12, "{:?}", traj.max_drift);
    }

    #[test]
    fn invalid_config() {
        let b = BodyParams::new(1.0, 1.0, 1.0, 1.0, 0.0).unwrap();
        let s = ReducedState::zeros();
        assert!(integrate(&s, &IntegratorConfig::new(0.0, 1, Scheme::Rk4), &b, &free()).is_err());
        assert!(integrate(&s, &IntegratorConfig::new(0.1, 0, Scheme::Rk4), &b, &free()).is_err());
    }

    #[test]
    fn blow_up_is_reported() {
        let b = BodyParams::new(1.0, 1.0, 1.0, 1.0, 0.0).unwrap();
        let v = FnPotential::new(|x: &Vec3, _: &Vec3| -x[0].powi(4));
        let s = ReducedState::new(Vec3::new(10.0, 0.0, 0.0), Vec3::zeros(), Vec3::z(), Vec3::zeros());
        let err = integrate(&s, &IntegratorConfig::new(0.1, 1000, Scheme::Rk4), &b, &v).unwrap_err();
        assert!(matches!(err, Error::NonFinite { .. }) || matches!(err, Error::Potential(_)));
    }

    #[test]
    fn record_every_and_projection() {
        let b = BodyParams::new(1.0, 0.5, 1.0, 1.0, 0.0).unwrap();
        let s = ReducedState::new(Vec3::zeros(), Vec3::zeros(), Vec3::new(0.6, 0.0, 0.8), Vec3::new(2.0, 1.0, 0.0));
        let mut cfg = IntegratorConfig::new(0.01, 100, Scheme::Rk4Projected);
        cfg.record_every = 10;
        let traj = integrate(&s, &cfg, &b, &free()).unwrap();
        assert_eq!(traj.samples.len(), 11);
        assert!((traj.samples[10].t - 1.0).abs() < 1e-12);
        assert!(traj.max_projection_drift > 0.0);
        assert!(traj.max_drift.c1 < 1e-15);
    }

    #[test]
    fn default_step() {
        assert!((default_dt(2.0 * PI) - 1.0 / 2000.0).abs() < 1e-18);
        assert_eq!(default_dt(0.0), 1e-3);
    }
}
