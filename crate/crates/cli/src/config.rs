//! Run configuration: one JSON document with the body, the field and exactly
//! one task section.

use std::path::Path;

use anyhow::{bail, Context, Result};
use orbitron_core::dynamics::Scheme;
use orbitron_core::fields::AxiFieldModel;
use orbitron_core::scan::{Axis, MapPoint};
use orbitron_core::state::{BodyParams, ReducedState};
use serde::Deserialize;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub body: BodyParams,
    pub field: AxiFieldModel,
    pub simulate: Option<SimulateTask>,
    pub equilibrium: Option<EquilibriumTask>,
    pub certify: Option<CertifyTask>,
    pub scan: Option<ScanTask>,
}

/// Which relative equilibrium to construct.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EquilibriumTask {
    /// Vertical axis in the mirror plane of a gravity-free field. Without
    /// `sigma` both orientations are tried.
    Orbitron { r0: f64, pi0: f64, sigma: Option<f64> },
    /// Every root of the planar force balance at `r0`; `C2` is used only
    /// when `B_r = 0` there.
    General {
        r0: f64,
        #[serde(rename = "C2", default)]
        c2: f64,
    },
    /// Levitating equilibrium. With `beta` and `kappa` the configured field
    /// is the mirror template, rescaled and combined with `B0 + B'z`;
    /// otherwise the configured field is used as is.
    Levitation {
        r0: f64,
        beta: Option<f64>,
        kappa: Option<f64>,
        #[serde(rename = "B0", default)]
        b0: f64,
    },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateTask {
    /// Explicit initial state …
    pub initial: Option<ReducedState>,
    /// … or the support state of an equilibrium.
    pub equilibrium: Option<EquilibriumTask>,
    #[serde(default)]
    pub branch: usize,
    /// Relative kick applied to every component of the initial state.
    #[serde(default)]
    pub perturbation: f64,
    pub dt: Option<f64>,
    pub steps: Option<usize>,
    /// Alternative to `steps` when starting from an equilibrium.
    pub periods: Option<f64>,
    #[serde(default = "default_scheme")]
    pub scheme: Scheme,
    #[serde(default = "one")]
    pub record_every: usize,
}

fn default_scheme() -> Scheme {
    Scheme::Rk4
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertifyTask {
    pub equilibrium: EquilibriumTask,
    #[serde(default)]
    pub branch: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScanTask {
    /// Field-level window conditions of a dipole pair over `r0/h`. `q` and
    /// `h` default to the configured dipole pair.
    Window {
        q: Option<f64>,
        h: Option<f64>,
        #[serde(default = "default_window_range")]
        range: (f64, f64),
        #[serde(default = "default_window_points")]
        n: usize,
    },
    /// Certificates over two parameters.
    Map { family: MapKind, sigma: Option<f64>, axis1: Axis, axis2: Axis, fixed: MapPoint, outputs: Option<Vec<String>> },
    /// Levitation equilibria over `kappa` with the configured field as the
    /// mirror template.
    Levitation {
        r0: f64,
        beta: f64,
        #[serde(rename = "B0", default)]
        b0: f64,
        kappa: KappaValues,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MapKind {
    Orbitron,
    Levitation,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum KappaValues {
    List(Vec<f64>),
    Range { min: f64, max: f64, count: usize },
}

fn default_window_range() -> (f64, f64) {
    (0.3, 1.5)
}

fn default_window_points() -> usize {
    121
}

/// The task a subcommand expects.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TaskKind {
    Simulate,
    Equilibrium,
    Certify,
    Scan,
}

impl TaskKind {
    pub fn name(self) -> &'static str {
        match self {
            TaskKind::Simulate => "simulate",
            TaskKind::Equilibrium => "equilibrium",
            TaskKind::Certify => "certify",
            TaskKind::Scan => "scan",
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let cfg: RunConfig = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn sections(&self) -> Vec<TaskKind> {
        [
            (self.simulate.is_some(), TaskKind::Simulate),
            (self.equilibrium.is_some(), TaskKind::Equilibrium),
            (self.certify.is_some(), TaskKind::Certify),
            (self.scan.is_some(), TaskKind::Scan),
        ]
        .into_iter()
        .filter_map(|(present, k)| present.then_some(k))
        .collect()
    }

    pub fn validate(&self) -> Result<()> {
        self.body.validate().context("body")?;
        self.field.validate().context("field")?;
        let sections = self.sections();
        if sections.len() != 1 {
            bail!("config must contain exactly one task section, found {}", sections.len());
        }
        if let Some(sim) = &self.simulate {
            if sim.initial.is_some() == sim.equilibrium.is_some() {
                bail!("simulate needs exactly one of `initial` and `equilibrium`");
            }
            if sim.steps.is_some() && sim.periods.is_some() {
                bail!("simulate takes `steps` or `periods`, not both");
            }
            if sim.periods.is_some() && sim.equilibrium.is_none() {
                bail!("`periods` needs an equilibrium to define the period");
            }
            if sim.steps.is_none() && sim.periods.is_none() {
                bail!("simulate needs `steps` or `periods`");
            }
            if !(sim.perturbation.is_finite() && sim.perturbation >= 0.0) {
                bail!("perturbation must be non-negative");
            }
        }
        Ok(())
    }

    /// Fails unless the config's task section matches the subcommand.
    pub fn require(&self, kind: TaskKind) -> Result<()> {
        let found = self.sections()[0];
        if found != kind {
            bail!("subcommand `{}` needs a `{}` section, config has `{}`", kind.name(), kind.name(), found.name());
        }
        Ok(())
    }
}
