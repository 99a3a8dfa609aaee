//! The four subcommands.

use std::f64::consts::PI;
use std::path::Path;

use anyhow::anyhow;
use orbitron_core::dynamics::{
    default_dt, integrate, orbit_distance, relative_equilibrium_orbit, IntegratorConfig, Invariants, Scheme,
};
use orbitron_core::equilibrium::{
    first_order_residual, levitation_equilibrium, solve_dipole_equilibrium, solve_orbitron_equatorial, Equilibrium,
    LevitationParams,
};
use orbitron_core::fields::AxiFieldModel;
use orbitron_core::potential::DipolePotential;
use orbitron_core::scan::{
    dipoletron_window, levitation_model, levitation_sweep, linspace, refine_window, stability_map, verdict_code,
    Execution, MapFamily, ScanSpec, MAP_OUTPUTS,
};
use orbitron_core::stability::{
    certified_form, certify_orbitron, eigen_certificate, elimination_certificate, StabilityCertificate,
};
use orbitron_core::state::{lab_energy, ReducedState};
use orbitron_core::Vec3;
use serde::Serialize;

use crate::config::{EquilibriumTask, KappaValues, MapKind, RunConfig, ScanTask, SimulateTask};
use crate::output::{sidecar, write_json, write_text, CsvWriter};
use crate::Failure;

type CmdResult = std::result::Result<(), Failure>;

/// Whether a core error means "no such equilibrium" (a valid answer), a
/// configuration problem, or a numerical failure.
fn classify(e: orbitron_core::Error) -> Failure {
    use orbitron_core::Error as E;
    match e {
        E::InvalidParameter(_) | E::GravityPresent { .. } | E::NotMirrorSymmetric { .. } => Failure::Config(e.into()),
        _ => Failure::Numerical(e.into()),
    }
}

fn is_no_solution(e: &orbitron_core::Error) -> bool {
    use orbitron_core::Error as E;
    matches!(
        e,
        E::NoEquilibrium(_)
            | E::WrongFieldSign { .. }
            | E::NoRealSolution(_)
            | E::NegativeCentrifugal(_)
            | E::BadSign(_)
    )
}

struct Branch {
    eq: Equilibrium,
    model: AxiFieldModel,
    levitation: Option<LevitationParams>,
}

#[derive(Default)]
struct Solved {
    branches: Vec<Branch>,
    reasons: Vec<String>,
}

impl Solved {
    fn absorb(&mut self, label: String, r: orbitron_core::Result<Vec<Branch>>) -> CmdResult {
        match r {
            Ok(b) => self.branches.extend(b),
            Err(e) if is_no_solution(&e) => self.reasons.push(format!("{label}{e}")),
            Err(e) => return Err(classify(e)),
        }
        Ok(())
    }

    fn reason(&self) -> Option<String> {
        (!self.reasons.is_empty()).then(|| self.reasons.join("; "))
    }
}

fn solve(cfg: &RunConfig, task: &EquilibriumTask) -> std::result::Result<Solved, Failure> {
    let b = &cfg.body;
    let mut out = Solved::default();
    match *task {
        EquilibriumTask::Orbitron { r0, pi0, sigma } => {
            let sigmas = sigma.map_or(vec![1.0, -1.0], |s| vec![s]);
            for s in sigmas {
                let r = solve_orbitron_equatorial(&cfg.field, b, r0, pi0, s)
                    .map(|eq| vec![Branch { eq, model: cfg.field.clone(), levitation: None }]);
                out.absorb(format!("sigma = {s}: "), r)?;
            }
        }
        EquilibriumTask::General { r0, c2 } => {
            let r = solve_dipole_equilibrium(&cfg.field, b, r0, c2).map(|eqs| {
                eqs.into_iter().map(|eq| Branch { eq, model: cfg.field.clone(), levitation: None }).collect()
            });
            out.absorb(String::new(), r)?;
        }
        EquilibriumTask::Levitation { r0, beta, kappa, b0 } => {
            let model = match (beta, kappa) {
                (Some(beta), Some(kappa)) => match levitation_model(&cfg.field, b, r0, beta, kappa, b0) {
                    Ok(m) => m,
                    Err(e) => return Err(classify(e)),
                },
                (None, None) => cfg.field.clone(),
                _ => return Err(Failure::Config(anyhow!("levitation needs both `beta` and `kappa`, or neither"))),
            };
            let r = levitation_equilibrium(&model, b, r0)
                .map(|(eq, lev)| vec![Branch { eq, model: model.clone(), levitation: Some(lev) }]);
            out.absorb(String::new(), r)?;
        }
    }
    Ok(out)
}

fn pick(solved: Solved, branch: usize) -> std::result::Result<Branch, Failure> {
    let reason = solved.reason();
    let n = solved.branches.len();
    solved.branches.into_iter().nth(branch).ok_or_else(|| {
        if n == 0 {
            Failure::Numerical(anyhow!("no equilibrium found: {}", reason.unwrap_or_default()))
        } else {
            Failure::Config(anyhow!("branch {branch} requested but only {n} equilibria exist"))
        }
    })
}

// ---------------------------------------------------------------------------
// equilibrium

#[derive(Serialize)]
struct EquilibriumEntry {
    #[serde(flatten)]
    equilibrium: Equilibrium,
    residual: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    levitation: Option<LevitationParams>,
}

#[derive(Serialize)]
struct EquilibriumReport {
    equilibria: Vec<EquilibriumEntry>,
    reason: Option<String>,
}

pub fn equilibrium(cfg: &RunConfig, out: &Path) -> CmdResult {
    let task = cfg.equilibrium.as_ref().expect("validated task section");
    let solved = solve(cfg, task)?;
    let reason = solved.reason();
    let mut equilibria = Vec::new();
    for br in solved.branches {
        let v = DipolePotential::new(br.model, &cfg.body);
        let residual = first_order_residual(&br.eq, &cfg.body, &v).map_err(classify)?;
        equilibria.push(EquilibriumEntry { equilibrium: br.eq, residual, levitation: br.levitation });
    }
    write_json(out, &EquilibriumReport { equilibria, reason }).map_err(Failure::Io)
}

// ---------------------------------------------------------------------------
// certify

#[derive(Serialize)]
struct OracleReport {
    positive_definite: bool,
    lambda_min: f64,
    lambda_max: f64,
    norm: f64,
    in_margin_band: bool,
    agrees: bool,
}

#[derive(Serialize)]
struct CertifyReport {
    #[serde(flatten)]
    certificate: StabilityCertificate,
    equilibrium: Equilibrium,
    #[serde(skip_serializing_if = "Option::is_none")]
    oracle: Option<OracleReport>,
}

pub fn certify(cfg: &RunConfig, out: &Path, oracle: bool) -> CmdResult {
    let task = cfg.certify.as_ref().expect("validated task section");
    let br = pick(solve(cfg, &task.equilibrium)?, task.branch)?;
    let v = DipolePotential::new(br.model.clone(), &cfg.body);
    let form = certified_form(&br.eq, &cfg.body, &v).map_err(classify)?;
    let certificate = match task.equilibrium {
        EquilibriumTask::Orbitron { .. } => certify_orbitron(&br.eq, &cfg.body, &br.model).map_err(classify)?,
        _ => elimination_certificate(&form),
    };
    let oracle = oracle.then(|| {
        let e = eigen_certificate(&form.to_dmatrix());
        OracleReport {
            positive_definite: e.positive_definite,
            lambda_min: e.lambda_min,
            lambda_max: e.lambda_max,
            norm: e.norm,
            in_margin_band: e.in_margin_band,
            agrees: e.in_margin_band || e.positive_definite == certificate.is_stable(),
        }
    });
    let disagrees = oracle.as_ref().is_some_and(|o| !o.agrees);
    write_json(out, &CertifyReport { certificate, equilibrium: br.eq, oracle }).map_err(Failure::Io)?;
    if disagrees {
        return Err(Failure::Numerical(anyhow!("eigenvalue oracle disagrees with the elimination verdict")));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// simulate

#[derive(Serialize)]
struct SimulationSummary {
    max_drift: Invariants,
    steps: usize,
    dt: f64,
    scheme: Scheme,
    /// `reduced` (h without the Casimir term) or `laboratory`.
    energy: &'static str,
    max_projection_drift: f64,
    /// Largest per-component deviation of the final state from the rotated
    /// equilibrium, each block relative to its norm (equilibrium starts only).
    final_state_deviation: Option<f64>,
    /// Phase-aligned distance of the final state to the equilibrium orbit.
    final_orbit_distance: Option<f64>,
}

/// Deterministic relative kick of size `size` on every component.
fn perturb(s: &ReducedState, size: f64) -> ReducedState {
    let a = s.to_array();
    let mut out = [0.0; 12];
    for (k, v) in out.iter_mut().enumerate() {
        let block = &a[3 * (k / 3)..3 * (k / 3) + 3];
        let norm = block.iter().map(|x| x * x).sum::<f64>().sqrt();
        let scale = if norm > 0.0 { norm } else { 1.0 };
        // Weyl sequence in [-1, 1).
        let u = 2.0 * ((k as f64 + 1.0) * 0.754_877_666_246_692_7).fract() - 1.0;
        *v = a[k] + size * scale * u;
    }
    ReducedState::from_array(&out)
}

fn block_deviation(s: &ReducedState, target: &ReducedState) -> f64 {
    let scale = |v: Vec3| if v.norm() > 0.0 { v.norm() } else { 1.0 };
    [
        (s.x - target.x).amax() / scale(target.x),
        (s.p - target.p).amax() / scale(target.p),
        (s.nu - target.nu).amax() / scale(target.nu),
        (s.pi - target.pi).amax() / scale(target.pi),
    ]
    .into_iter()
    .fold(0.0, f64::max)
}

pub fn simulate(cfg: &RunConfig, out: &Path, include_casimir_energy: bool) -> CmdResult {
    let task: &SimulateTask = cfg.simulate.as_ref().expect("validated task section");
    let b = &cfg.body;
    let (s0, eq, model) = match (&task.initial, &task.equilibrium) {
        (Some(s), None) => (*s, None, cfg.field.clone()),
        (None, Some(eq_task)) => {
            let br = pick(solve(cfg, eq_task)?, task.branch)?;
            (br.eq.support_state(), Some(br.eq), br.model)
        }
        _ => unreachable!("validated initial condition"),
    };
    let s0 = if task.perturbation > 0.0 { perturb(&s0, task.perturbation) } else { s0 };
    let dt = task.dt.unwrap_or_else(|| default_dt(eq.map_or(0.0, |e| e.omega)));
    let steps = match (task.steps, task.periods, eq) {
        (Some(n), _, _) => n,
        (None, Some(periods), Some(e)) => (periods * 2.0 * PI / e.omega.abs() / dt).round() as usize,
        _ => unreachable!("validated step count"),
    };
    let config = IntegratorConfig { dt, steps, scheme: task.scheme, record_every: task.record_every };
    let v = DipolePotential::new(model, b);
    let traj = integrate(&s0, &config, b, &v).map_err(classify)?;

    let energy = |s: &ReducedState, inv: &Invariants| -> std::result::Result<f64, Failure> {
        if include_casimir_energy {
            lab_energy(s, b, &v).map_err(classify)
        } else {
            Ok(inv.h)
        }
    };
    let mut csv = CsvWriter::create(
        out,
        &["t", "x1", "x2", "x3", "p1", "p2", "p3", "nu1", "nu2", "nu3", "pi1", "pi2", "pi3", "h", "J3", "C1", "C2"],
    )
    .map_err(Failure::Io)?;
    let mut max_drift = traj.max_drift;
    if include_casimir_energy {
        max_drift.h = 0.0;
    }
    let e0 = energy(&traj.samples[0].state, &traj.samples[0].invariants)?;
    for sample in &traj.samples {
        let e = energy(&sample.state, &sample.invariants)?;
        if include_casimir_energy {
            let d = (e - e0).abs();
            max_drift.h = max_drift.h.max(if e0 != 0.0 { d / e0.abs() } else { d });
        }
        let mut row = Vec::with_capacity(17);
        row.push(sample.t);
        row.extend(sample.state.to_array());
        row.extend([e, sample.invariants.j3, sample.invariants.c1, sample.invariants.c2]);
        csv.row(&row).map_err(Failure::Io)?;
    }
    csv.finish().map_err(Failure::Io)?;

    let t_end = steps as f64 * dt;
    let summary = SimulationSummary {
        max_drift,
        steps,
        dt,
        scheme: task.scheme,
        energy: if include_casimir_energy { "laboratory" } else { "reduced" },
        max_projection_drift: traj.max_projection_drift,
        final_state_deviation: eq.map(|e| block_deviation(&traj.final_state, &relative_equilibrium_orbit(&e, t_end))),
        final_orbit_distance: eq.map(|e| orbit_distance(&traj.final_state, &e)),
    };
    write_json(&sidecar(out, "summary.json"), &summary).map_err(Failure::Io)
}

// ---------------------------------------------------------------------------
// scan

fn dipole_pair_of(model: &AxiFieldModel) -> Option<(f64, f64)> {
    match model {
        AxiFieldModel::DipolePair { q, h } => Some((*q, *h)),
        _ => None,
    }
}

pub fn scan(cfg: &RunConfig, out: &Path, refine: bool) -> CmdResult {
    let task = cfg.scan.as_ref().expect("validated task section");
    if refine && !matches!(task, ScanTask::Window { .. }) {
        return Err(Failure::Config(anyhow!("--refine applies to window scans only")));
    }
    match task {
        ScanTask::Window { q, h, range, n } => {
            let pair = dipole_pair_of(&cfg.field);
            let (q, h) = match (q.or(pair.map(|p| p.0)), h.or(pair.map(|p| p.1))) {
                (Some(q), Some(h)) => (q, h),
                _ => return Err(Failure::Config(anyhow!("window scan needs q and h or a dipole_pair field"))),
            };
            let scan = dipoletron_window(q, h, *range, *n, Execution::Auto).map_err(classify)?;
            let mut text = String::from("ratio,cond_vertical,cond_radial,poly_vertical,poly_radial,in_window\n");
            for r in &scan.rows {
                let nums = [r.ratio, r.cond_vertical, r.cond_radial, r.poly_vertical, r.poly_radial];
                let cells: Vec<String> = nums.iter().map(|v| orbitron_core::scan::format_f64(*v)).collect();
                text.push_str(&format!("{},{}\n", cells.join(","), r.in_window));
            }
            write_text(out, &text).map_err(Failure::Io)?;
            if refine {
                let ends = refine_window(q, h, &scan).map_err(|e| {
                    Failure::Config(anyhow!("scan range {range:?} does not bracket both window edges: {e}"))
                })?;
                write_json(&sidecar(out, "endpoints.json"), &ends).map_err(Failure::Io)?;
            }
            Ok(())
        }
        ScanTask::Map { family, sigma, axis1, axis2, fixed, outputs } => {
            let family = match family {
                MapKind::Orbitron => MapFamily::Orbitron { sigma: sigma.unwrap_or(1.0) },
                MapKind::Levitation => MapFamily::Levitation,
            };
            let spec = ScanSpec {
                family,
                axis1: axis1.clone(),
                axis2: axis2.clone(),
                body: cfg.body,
                field: cfg.field.clone(),
                fixed: *fixed,
                outputs: outputs.clone().unwrap_or_else(|| MAP_OUTPUTS.iter().map(|s| s.to_string()).collect()),
            };
            let table = stability_map(&spec, Execution::Auto).map_err(classify)?;
            write_text(out, &table.to_csv()).map_err(Failure::Io)
        }
        ScanTask::Levitation { r0, beta, b0, kappa } => {
            let kappas = match kappa {
                KappaValues::List(v) => v.clone(),
                KappaValues::Range { min, max, count } => linspace(*min, *max, *count),
            };
            if kappas.is_empty() {
                return Err(Failure::Config(anyhow!("levitation scan needs at least one kappa")));
            }
            let rows = levitation_sweep(&cfg.field, &cfg.body, *r0, *beta, *b0, &kappas, Execution::Auto);
            let f = orbitron_core::scan::format_f64;
            let mut text = String::from("kappa,epsilon,nu_r,nu_z,xi2,verdict,margin,A,B,C,lambda_ratio,error\n");
            for r in &rows {
                let (verdict, numbers) = match r.verdict {
                    Some(v) => {
                        (verdict_code(v).to_string(), [r.margin, r.a, r.b, r.c, r.lambda_ratio].map(f).join(","))
                    }
                    None => (String::new(), ",,,,".to_string()),
                };
                let head = if r.error.is_some() {
                    format!("{},{},,,", f(r.kappa), f(r.epsilon))
                } else {
                    [r.kappa, r.epsilon, r.nu_r, r.nu_z, r.xi2].map(f).join(",")
                };
                text.push_str(&format!("{head},{verdict},{numbers},{}\n", r.error.clone().unwrap_or_default()));
            }
            write_text(out, &text).map_err(Failure::Io)
        }
    }
}
