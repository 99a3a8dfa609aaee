//! Parameter sweeps: the Dipoletron geometric window, levitation `κ`-sweeps
//! and two-parameter stability maps.
//!
//! Grid cells are independent. With the `parallel` feature they are evaluated
//! on a rayon pool (size from `ORBITRON_THREADS`, `0` or unset = automatic);
//! output order never depends on completion order.

use serde::{Deserialize, Serialize};

use crate::equilibrium::{levitation_equilibrium, solve_orbitron_equatorial, Equilibrium};
use crate::fields::{eval_jet, AxiFieldModel};
use crate::potential::DipolePotential;
use crate::stability::{certify, certify_orbitron, levitation_conditions, StabilityCertificate, Verdict};
use crate::state::BodyParams;
use crate::{Error, Result};

/// Bisection tolerance on `r₀/h` for window endpoints.
pub const WINDOW_TOL: f64 = 1e-12;
/// Environment variable capping scan parallelism.
pub const THREADS_ENV: &str = "ORBITRON_THREADS";

/// How grid cells are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    /// Rayon pool when the `parallel` feature is enabled, otherwise sequential.
    #[default]
    Auto,
    Sequential,
}

/// Thread count requested through `ORBITRON_THREADS` (`None` = automatic).
pub fn thread_limit() -> Option<usize> {
    std::env::var(THREADS_ENV).ok().and_then(|v| v.trim().parse::<usize>().ok()).filter(|&n| n > 0)
}

/// Order-preserving map over independent items.
pub fn map_cells<T, R, F>(items: &[T], exec: Execution, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    match exec {
        Execution::Sequential => items.iter().map(f).collect(),
        Execution::Auto => parallel_map(items, f),
    }
}

#[cfg(feature = "parallel")]
fn parallel_map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    use rayon::prelude::*;
    match thread_limit() {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| items.par_iter().map(&f).collect()),
            Err(_) => items.iter().map(f).collect(),
        },
        None => items.par_iter().map(f).collect(),
    }
}

#[cfg(not(feature = "parallel"))]
fn parallel_map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    F: Fn(&T) -> R,
{
    items.iter().map(f).collect()
}

/// `n` evenly spaced values from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect(),
    }
}

// ---------------------------------------------------------------------------
// Dipoletron window

/// One grid point of the window scan. The field-level values must be
/// positive; the polynomial cross-checks are `3x⁴ − 24x² + 8 < 0` and
/// `x⁴ − 18x² + 16 > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowRow {
    pub ratio: f64,
    /// `−σB_z,zz`.
    pub cond_vertical: f64,
    /// `−σ(3B_z,r/r + B_z,rr)`.
    pub cond_radial: f64,
    pub poly_vertical: f64,
    pub poly_radial: f64,
    pub in_window: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowEndpoints {
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowScan {
    pub rows: Vec<WindowRow>,
    /// Grid interval where the window opens, if seen.
    pub lower_bracket: Option<(f64, f64)>,
    /// Grid interval where the window closes, if seen.
    pub upper_bracket: Option<(f64, f64)>,
}

/// Field-level geometric conditions `(−σB_z,zz, −σ(3B_z,r/r + B_z,rr))` at
/// `r₀ = ratio·h` with `σ = −sign(B_z,r)` (the orientation with `ω² > 0`).
pub fn window_conditions(q: f64, h: f64, ratio: f64) -> Result<(f64, f64)> {
    let r = ratio * h;
    let jet = eval_jet(&AxiFieldModel::dipole_pair(q, h), r, 0.0)?;
    let sigma = if jet.bz_r > 0.0 { -1.0 } else { 1.0 };
    Ok((-sigma * jet.bz_zz, -sigma * (3.0 * jet.bz_r / r + jet.bz_rr)))
}

fn window_row(q: f64, h: f64, x: f64) -> Result<WindowRow> {
    let (cv, cr) = window_conditions(q, h, x)?;
    let x2 = x * x;
    Ok(WindowRow {
        ratio: x,
        cond_vertical: cv,
        cond_radial: cr,
        poly_vertical: 3.0 * x2 * x2 - 24.0 * x2 + 8.0,
        poly_radial: x2 * x2 - 18.0 * x2 + 16.0,
        in_window: cv > 0.0 && cr > 0.0,
    })
}

/// Coarse scan of the geometric conditions over `ratio_range` with `n`
/// points, bracketing where the window opens and closes.
pub fn dipoletron_window(q: f64, h: f64, ratio_range: (f64, f64), n: usize, exec: Execution) -> Result<WindowScan> {
    let (lo, hi) = ratio_range;
    if n < 2 || !(lo > 0.0) || !(hi > lo) || !hi.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "window scan needs n >= 2 and 0 < lo < hi, got n={n}, [{lo}, {hi}]"
        )));
    }
    if q == 0.0 || !(h > 0.0) {
        return Err(Error::InvalidParameter(format!("dipole pair needs q != 0 and h > 0, got q={q}, h={h}")));
    }
    let xs = linspace(lo, hi, n);
    let rows: Vec<WindowRow> = map_cells(&xs, exec, |&x| window_row(q, h, x)).into_iter().collect::<Result<_>>()?;
    let mut lower_bracket = None;
    let mut upper_bracket = None;
    for w in rows.windows(2) {
        match (w[0].in_window, w[1].in_window) {
            (false, true) if lower_bracket.is_none() => lower_bracket = Some((w[0].ratio, w[1].ratio)),
            (true, false) if upper_bracket.is_none() => upper_bracket = Some((w[0].ratio, w[1].ratio)),
            _ => {}
        }
    }
    Ok(WindowScan { rows, lower_bracket, upper_bracket })
}

/// Bisection to `WINDOW_TOL` of the condition that changes sign in `(a, b)`.
fn bisect_window_edge(q: f64, h: f64, (mut a, mut b): (f64, f64)) -> Result<f64> {
    let (va, vb) = (window_conditions(q, h, a)?, window_conditions(q, h, b)?);
    let pick: fn((f64, f64)) -> f64 = if (va.0 > 0.0) != (vb.0 > 0.0) { |c| c.0 } else { |c| c.1 };
    let sa = pick(va) > 0.0;
    if sa == (pick(vb) > 0.0) {
        return Err(Error::InvalidParameter(format!("no sign change in [{a}, {b}]")));
    }
    while b - a > WINDOW_TOL {
        let m = 0.5 * (a + b);
        if (pick(window_conditions(q, h, m)?) > 0.0) == sa {
            a = m;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

/// Window endpoints refined by bisection on the field-level conditions.
pub fn refine_window(q: f64, h: f64, scan: &WindowScan) -> Result<WindowEndpoints> {
    let (Some(lb), Some(ub)) = (scan.lower_bracket, scan.upper_bracket) else {
        return Err(Error::NoEquilibrium("window edges not bracketed by the scan range".into()));
    };
    Ok(WindowEndpoints { lower: bisect_window_edge(q, h, lb)?, upper: bisect_window_edge(q, h, ub)? })
}

/// Closed-form window edges `2√(1 − √(5/6))` and `√(9 − √65)`.
pub fn dipoletron_window_exact() -> WindowEndpoints {
    WindowEndpoints { lower: 2.0 * (1.0 - (5.0f64 / 6.0).sqrt()).sqrt(), upper: (9.0 - 65f64.sqrt()).sqrt() }
}

// ---------------------------------------------------------------------------
// Levitation sweep

/// Composite field `B₀ + B′z` (linear part) plus `template` rescaled so that
/// `B′ = Mg/(μκ)` and the mirror part has `B_r,z(r₀, 0) = βB′`.
pub fn levitation_model(
    template: &AxiFieldModel,
    b: &BodyParams,
    r0: f64,
    beta: f64,
    kappa: f64,
    b0: f64,
) -> Result<AxiFieldModel> {
    if kappa == 0.0 || !kappa.is_finite() {
        return Err(Error::InvalidParameter(format!("kappa must be finite and non-zero, got {kappa}")));
    }
    let b_prime = b.mass * b.g / (b.mu * kappa);
    let brz = eval_jet(template, r0, 0.0)?.br_z;
    if brz == 0.0 {
        return Err(Error::InvalidParameter("template has B_r,z = 0 at r0".into()));
    }
    Ok(AxiFieldModel::composite(vec![AxiFieldModel::linear(b0, b_prime), template.scaled(beta * b_prime / brz)]))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevitationRow {
    pub kappa: f64,
    pub epsilon: f64,
    pub nu_r: f64,
    pub nu_z: f64,
    pub xi2: f64,
    pub verdict: Option<Verdict>,
    pub margin: f64,
    /// Scaled `rA/(Mg)`, `rB/(Mg)`, `rC/(Mg)`.
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub lambda_ratio: f64,
    /// Reason code for a failed row.
    pub error: Option<String>,
}

impl LevitationRow {
    fn failed(kappa: f64, e: &Error) -> Self {
        Self {
            kappa,
            epsilon: kappa.abs() - 1.0,
            nu_r: f64::NAN,
            nu_z: f64::NAN,
            xi2: f64::NAN,
            verdict: None,
            margin: f64::NAN,
            a: f64::NAN,
            b: f64::NAN,
            c: f64::NAN,
            lambda_ratio: f64::NAN,
            error: Some(e.code().to_string()),
        }
    }
}

fn levitation_cell(
    template: &AxiFieldModel,
    b: &BodyParams,
    r0: f64,
    beta: f64,
    b0: f64,
    kappa: f64,
) -> Result<LevitationRow> {
    let model = levitation_model(template, b, r0, beta, kappa, b0)?;
    let (eq, lev) = levitation_equilibrium(&model, b, r0)?;
    let rep = levitation_conditions(&eq, &lev, b, &model)?;
    Ok(LevitationRow {
        kappa,
        epsilon: lev.epsilon,
        nu_r: eq.nu_r(),
        nu_z: eq.nu_z(),
        xi2: lev.xi2,
        verdict: Some(rep.certificate.verdict),
        margin: rep.certificate.margin,
        a: rep.a,
        b: rep.b,
        c: rep.c,
        lambda_ratio: rep.lambda_ratio,
        error: None,
    })
}

/// Levitation equilibrium and certificate for each `κ`; failures become
/// rows with a reason code and the sweep continues.
pub fn levitation_sweep(
    template: &AxiFieldModel,
    b: &BodyParams,
    r0: f64,
    beta: f64,
    b0: f64,
    kappas: &[f64],
    exec: Execution,
) -> Vec<LevitationRow> {
    map_cells(kappas, exec, |&k| {
        levitation_cell(template, b, r0, beta, b0, k).unwrap_or_else(|e| LevitationRow::failed(k, &e))
    })
}

// ---------------------------------------------------------------------------
// Stability maps

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub name: String,
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl Axis {
    pub fn new(name: &str, min: f64, max: f64, count: usize) -> Self {
        Self { name: name.to_string(), min, max, count }
    }

    pub fn values(&self) -> Vec<f64> {
        if self.count == 1 {
            vec![self.min]
        } else {
            linspace(self.min, self.max, self.count)
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = self.min.is_finite()
            && self.max.is_finite()
            && ((self.count >= 2 && self.min < self.max) || (self.count == 1 && self.min <= self.max));
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "axis {} needs finite min < max and count >= 2 (or count = 1)",
                self.name
            )))
        }
    }
}

/// Which equilibrium family a map certifies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum MapFamily {
    /// Equatorial vertical-axis equilibrium without gravity.
    Orbitron { sigma: f64 },
    /// Levitating equilibrium in `B₀ + B′z` plus the rescaled field.
    Levitation,
}

/// Values of the parameters not swept.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MapPoint {
    pub r0: f64,
    #[serde(default)]
    pub pi0: f64,
    #[serde(default)]
    pub beta: f64,
    #[serde(default)]
    pub kappa: f64,
    #[serde(default)]
    pub b0: f64,
}

/// Parameter names an axis may sweep.
pub const MAP_PARAMETERS: [&str; 9] = ["r0", "ratio", "pi0", "beta", "kappa", "b0", "mass", "i_perp", "mu"];
/// Certificate fields a map may record.
pub const MAP_OUTPUTS: [&str; 9] =
    ["verdict", "margin", "lambda_ok", "A", "B", "C", "omega", "lambda", "failed_condition"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanSpec {
    pub family: MapFamily,
    pub axis1: Axis,
    pub axis2: Axis,
    pub body: BodyParams,
    pub field: AxiFieldModel,
    pub fixed: MapPoint,
    #[serde(default = "default_outputs")]
    pub outputs: Vec<String>,
}

fn default_outputs() -> Vec<String> {
    MAP_OUTPUTS.iter().map(|s| s.to_string()).collect()
}

impl ScanSpec {
    pub fn validate(&self) -> Result<()> {
        self.axis1.validate()?;
        self.axis2.validate()?;
        self.body.validate()?;
        self.field.validate()?;
        for a in [&self.axis1, &self.axis2] {
            if !MAP_PARAMETERS.contains(&a.name.as_str()) {
                return Err(Error::InvalidParameter(format!("unknown axis parameter {}", a.name)));
            }
        }
        if self.axis1.name == self.axis2.name {
            return Err(Error::InvalidParameter("axes must sweep different parameters".into()));
        }
        if let Some(o) = self.outputs.iter().find(|o| !MAP_OUTPUTS.contains(&o.as_str())) {
            return Err(Error::InvalidParameter(format!("unknown output field {o}")));
        }
        if let MapFamily::Orbitron { sigma } = self.family {
            if sigma != 1.0 && sigma != -1.0 {
                return Err(Error::InvalidParameter(format!("sigma must be +1 or -1, got {sigma}")));
            }
        }
        Ok(())
    }
}

/// A CSV cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Cell {
    Num(f64),
    Bool(bool),
    Text(String),
    Empty,
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(v) => format_f64(*v),
            Cell::Bool(b) => b.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }
}

/// Round-trip-safe float formatting (17 significant digits).
pub fn format_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapRow {
    pub axis1: f64,
    pub axis2: f64,
    pub cells: Vec<Cell>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapTable {
    pub axis1: String,
    pub axis2: String,
    pub columns: Vec<String>,
    pub rows: Vec<MapRow>,
}

impl MapTable {
    /// CSV: axis values, requested fields, then `error`.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let header: Vec<&str> = [self.axis1.as_str(), self.axis2.as_str()]
            .into_iter()
            .chain(self.columns.iter().map(String::as_str))
            .chain(["error"])
            .collect();
        out.push_str(&header.join(","));
        out.push('\n');
        for r in &self.rows {
            let mut line = vec![format_f64(r.axis1), format_f64(r.axis2)];
            line.extend(r.cells.iter().map(Cell::render));
            line.push(r.error.clone().unwrap_or_default());
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }
}

fn dipole_pair_h(model: &AxiFieldModel) -> Option<f64> {
    match model {
        AxiFieldModel::DipolePair { h, .. } => Some(*h),
        AxiFieldModel::Composite { parts } => parts.iter().find_map(dipole_pair_h),
        AxiFieldModel::Linear { .. } => None,
    }
}

/// The equilibrium and certificate of one map cell.
pub fn evaluate_cell(spec: &ScanSpec, a1: f64, a2: f64) -> Result<(Equilibrium, StabilityCertificate)> {
    let mut body = spec.body;
    let mut pt = spec.fixed;
    for (name, value) in [(spec.axis1.name.as_str(), a1), (spec.axis2.name.as_str(), a2)] {
        match name {
            "r0" => pt.r0 = value,
            "ratio" => {
                let h = dipole_pair_h(&spec.field)
                    .ok_or_else(|| Error::InvalidParameter("ratio axis needs a dipole pair in the field".into()))?;
                pt.r0 = value * h;
            }
            "pi0" => pt.pi0 = value,
            "beta" => pt.beta = value,
            "kappa" => pt.kappa = value,
            "b0" => pt.b0 = value,
            "mass" => body.mass = value,
            "i_perp" => body.i_perp = value,
            "mu" => body.mu = value,
            other => return Err(Error::InvalidParameter(format!("unknown axis parameter {other}"))),
        }
    }
    body.validate()?;
    match spec.family {
        MapFamily::Orbitron { sigma } => {
            let eq = solve_orbitron_equatorial(&spec.field, &body, pt.r0, pt.pi0, sigma)?;
            Ok((eq, certify_orbitron(&eq, &body, &spec.field)?))
        }
        MapFamily::Levitation => {
            let model = levitation_model(&spec.field, &body, pt.r0, pt.beta, pt.kappa, pt.b0)?;
            let (eq, _) = levitation_equilibrium(&model, &body, pt.r0)?;
            let v = DipolePotential::new(model, &body);
            Ok((eq, certify(&eq, &body, &v)?))
        }
    }
}

fn output_cell(name: &str, eq: &Equilibrium, c: &StabilityCertificate) -> Cell {
    match name {
        "verdict" => Cell::Text(verdict_code(c.verdict).to_string()),
        "margin" => Cell::Num(c.margin),
        "lambda_ok" => Cell::Bool(c.lambda_ok),
        "A" => Cell::Num(c.a),
        "B" => Cell::Num(c.b),
        "C" => Cell::Num(c.c),
        "omega" => Cell::Num(eq.omega),
        "lambda" => Cell::Num(eq.mult.lambda),
        "failed_condition" => c.failed_condition.clone().map_or(Cell::Empty, Cell::Text),
        _ => Cell::Empty,
    }
}

pub fn verdict_code(v: Verdict) -> &'static str {
    match v {
        Verdict::Stable => "stable",
        Verdict::Marginal => "marginal",
        Verdict::NotCertified => "not_certified",
    }
}

/// Certificates over the grid `axis1 × axis2` (axis1 varies slowest).
pub fn stability_map(spec: &ScanSpec, exec: Execution) -> Result<MapTable> {
    spec.validate()?;
    let cells: Vec<(f64, f64)> =
        spec.axis1.values().into_iter().flat_map(|a| spec.axis2.values().into_iter().map(move |b| (a, b))).collect();
    let rows = map_cells(&cells, exec, |&(a1, a2)| match evaluate_cell(spec, a1, a2) {
        Ok((eq, cert)) => MapRow {
            axis1: a1,
            axis2: a2,
            cells: spec.outputs.iter().map(|o| output_cell(o, &eq, &cert)).collect(),
            error: None,
        },
        Err(e) => MapRow {
            axis1: a1,
            axis2: a2,
            cells: spec.outputs.iter().map(|_| Cell::Empty).collect(),
            error: Some(e.code().to_string()),
        },
    });
    Ok(MapTable { axis1: spec.axis1.name.clone(), axis2: spec.axis2.name.clone(), columns: spec.outputs.clone(), rows })
}

/// Certifies many equilibria of one potential.
pub fn certify_batch(
    eqs: &[Equilibrium],
    b: &BodyParams,
    v: &dyn crate::potential::Potential,
    exec: Execution,
) -> Vec<Result<StabilityCertificate>> {
    map_cells(eqs, exec, |eq| certify(eq, b, v))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn window_brackets_and_polynomials() {
        let scan = dipoletron_window(1.0, 1.0, (0.3, 1.5), 121, Execution::Sequential).unwrap();
        let exact = dipoletron_window_exact();
        let (lo, hi) = scan.lower_bracket.unwrap();
        assert!(lo <= exact.lower && exact.lower <= hi);
        let (lo, hi) = scan.upper_bracket.unwrap();
        assert!(lo <= exact.upper && exact.upper <= hi);
        for r in &scan.rows {
            assert_eq!(r.cond_vertical > 0.0, r.poly_vertical < 0.0, "{r:?}");
            assert_eq!(r.cond_radial > 0.0, r.poly_radial > 0.0, "{r:?}");
        }
    }

    #[test]
    fn window_refinement() {
        let scan = dipoletron_window(1.0, 1.0, (0.3, 1.5), 25, Execution::Auto).unwrap();
        let e = refine_window(1.0, 1.0, &scan).unwrap();
        let x = dipoletron_window_exact();
        assert!((e.lower - x.lower).abs() < 1e-10);
        assert!((e.upper - x.upper).abs() < 1e-10);
        assert!((x.lower - 0.590352).abs() < 1e-6 && (x.upper - 0.968371).abs() < 1e-6);
    }

    #[test]
    fn window_scan_validation() {
        assert!(dipoletron_window(1.0, 1.0, (0.3, 1.5), 1, Execution::Sequential).is_err());
        assert!(dipoletron_window(1.0, 1.0, (1.5, 0.3), 10, Execution::Sequential).is_err());
    }

    #[test]
    fn execution_modes_agree() {
        let xs: Vec<f64> = (0..100).map(f64::from).collect();
        let f = |x: &f64| x.sin() * x;
        assert_eq!(map_cells(&xs, Execution::Auto, f), map_cells(&xs, Execution::Sequential, f));
    }

    #[test]
    fn axis_values() {
        assert_eq!(Axis::new("r0", 1.0, 2.0, 3).values(), vec![1.0, 1.5, 2.0]);
        assert_eq!(Axis::new("r0", 1.0, 1.0, 1).values(), vec![1.0]);
        assert!(Axis::new("r0", 1.0, 1.0, 2).validate().is_err());
    }

    #[test]
    fn csv_number_format_round_trips() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23] {
            assert_eq!(format_f64(v).parse::<f64>().unwrap(), v);
        }
    }
}
