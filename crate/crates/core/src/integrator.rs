//! Positivity preserving explicit time stepping for `df/dt = Q(f, f)`.
//!
//! One step is the forward Euler update written in gain/loss form,
//!
//! ```text
//! f_next = (1 - dt (8/eps) mass(f)) f + dt Q+(f, f),
//! ```
//!
//! which is a nonnegative combination of nonnegative fields whenever
//! `dt <= eps / (8 mass(f))`. An optional moment projection restores the mass,
//! momentum and energy of the initial datum after each step.

use nalgebra::{Matrix5, Vector5};

use crate::collision::{q_gain, QuadratureSpec};
use crate::grid::{Distribution, GridSpec, MomentReport};
use crate::kernel::KernelParams;
use crate::{Error, Result};

/// Slack on the step-size condition so that `dt = eps / (8 mass)` itself is
/// not rejected by rounding in the product.
const STEP_SLACK: f64 = 1e-12;

/// Tolerances for the run monitors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonitorTolerances {
    /// Allowed entropy increase per step, relative to `|H(0)|`.
    pub entropy_rel: f64,
    /// Allowed relative drift of mass, momentum and energy when the
    /// conservation correction is on.
    pub conservation_rel: f64,
    /// Relative slack on the `L^p` ceiling.
    pub ceiling_rel: f64,
}

impl Default for MonitorTolerances {
    fn default() -> Self {
        Self {
            entropy_rel: 1e-6,
            conservation_rel: 1e-10,
            ceiling_rel: 1e-12,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    pub kernel: KernelParams,
    pub grid: GridSpec,
    pub quad: QuadratureSpec,
    pub dt: f64,
    pub t_end: f64,
    /// Steps between report rows; the first and last step are always reported.
    pub report_every: usize,
    pub lp_list: Vec<f64>,
    pub conservation_correction: bool,
    pub monitors: MonitorTolerances,
}

impl SimulationConfig {
    /// Config with default quadrature, monitors, `L^p` list `{1, 2, inf}`,
    /// a report every step and the correction off.
    pub fn new(kernel: KernelParams, grid: GridSpec, dt: f64, t_end: f64) -> Self {
        Self {
            kernel,
            grid,
            quad: QuadratureSpec::default(),
            dt,
            t_end,
            report_every: 1,
            lp_list: vec![1.0, 2.0, f64::INFINITY],
            conservation_correction: false,
            monitors: MonitorTolerances::default(),
        }
    }

    /// Checks everything that does not depend on the initial datum.
    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt >= 0.0) {
            return Err(Error::InvalidArgument(format!("dt must be >= 0, got {}", self.dt)));
        }
        if !(self.t_end.is_finite() && self.t_end > 0.0) {
            return Err(Error::InvalidArgument(format!("t_end must be > 0, got {}", self.t_end)));
        }
        if self.dt == 0.0 {
            return Err(Error::InvalidArgument("dt = 0 never reaches t_end".into()));
        }
        if self.report_every == 0 {
            return Err(Error::InvalidArgument("report_every must be >= 1".into()));
        }
        if let Some(p) = self.lp_list.iter().find(|p| p.is_nan() || **p < 1.0) {
            return Err(Error::InvalidExponent(*p));
        }
        let m = &self.monitors;
        for (name, v) in [
            ("entropy", m.entropy_rel),
            ("conservation", m.conservation_rel),
            ("ceiling", m.ceiling_rel),
        ] {
            if !(v >= 0.0) {
                return Err(Error::InvalidArgument(format!("{name} tolerance must be >= 0")));
            }
        }
        Ok(())
    }

    /// Number of steps needed to reach `t_end`.
    pub fn step_count(&self) -> usize {
        ((self.t_end / self.dt) - 1e-9).ceil().max(1.0) as usize
    }
}

/// Largest step that keeps the update nonnegative: `eps / (8 mass)`.
pub fn max_dt(f: &Distribution, params: &KernelParams) -> f64 {
    let mass = f.mass();
    if mass > 0.0 {
        1.0 / (params.total_rate() * mass)
    } else {
        f64::INFINITY
    }
}

/// Uniform-in-time `L^p` ceiling `max{16 exp(8 ||f0||_{L log L}), ||f0||_p}`
/// with `||f||_{L log L} = int f |log f|`.
pub fn lp_ceiling(f0: &Distribution, p: f64) -> Result<f64> {
    let norm = f0.lp_norm(p)?;
    Ok((16.0 * (8.0 * f0.llogl()).exp()).max(norm))
}

/// One forward Euler step without the conservation correction.
pub fn euler_step(f: &Distribution, params: &KernelParams, quad: &QuadratureSpec, dt: f64) -> Result<Distribution> {
    if !(dt.is_finite() && dt >= 0.0) {
        return Err(Error::InvalidArgument(format!("dt must be >= 0, got {dt}")));
    }
    if dt == 0.0 {
        return Ok(f.clone());
    }
    let keep = 1.0 - dt * params.total_rate() * f.mass();
    if keep < -STEP_SLACK {
        return Err(Error::StepRejected {
            dt,
            max_dt: max_dt(f, params),
        });
    }
    let keep = keep.max(0.0);
    let gain = q_gain(f, params, quad)?;
    let values = f
        .values()
        .iter()
        .zip(gain.values())
        .map(|(a, g)| keep * a + dt * g)
        .collect();
    Ok(Distribution::from_values_unchecked(*f.grid(), values))
}

/// Mass, momentum and energy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Conserved {
    pub mass: f64,
    pub momentum: crate::Vec3,
    pub energy: f64,
}

impl Conserved {
    pub fn of(f: &Distribution) -> Self {
        Self {
            mass: f.mass(),
            momentum: f.momentum(),
            energy: f.energy(),
        }
    }

    fn as_vector(&self) -> Vector5<f64> {
        Vector5::new(self.mass, self.momentum.x, self.momentum.y, self.momentum.z, self.energy)
    }

    /// Per-component scales for relative comparisons: mass, `sqrt(mass
    /// energy)` for momentum, energy.
    fn scales(&self) -> Vector5<f64> {
        let p = (self.mass * self.energy).sqrt().max(f64::MIN_POSITIVE);
        Vector5::new(self.mass, p, p, p, self.energy.max(f64::MIN_POSITIVE))
    }

    /// Largest relative deviation of `other` from `self`.
    pub fn relative_drift(&self, other: &Conserved) -> f64 {
        let d = other.as_vector() - self.as_vector();
        d.component_div(&self.scales()).amax()
    }
}

/// Multiplies `f` by `exp(a + b.v + c|v|^2)` with the five parameters chosen
/// so that the result has the moments in `target`. Returns the corrected
/// field and the fitted `(a, b, c)`.
pub fn conservation_correction(f: &Distribution, target: &Conserved) -> Result<(Distribution, Vector5<f64>)> {
    const MAX_ITER: usize = 50;
    const RESIDUAL_TOL: f64 = 1e-14;
    // Newton can cycle at the rounding floor of the moment sums just above
    // RESIDUAL_TOL; below this level a non-improving iterate is accepted.
    const STALL_TOL: f64 = 1e-12;
    let grid = *f.grid();
    let cell = grid.cell_volume();
    let basis: Vec<Vector5<f64>> = grid
        .nodes()
        .map(|v| Vector5::new(1.0, v.x, v.y, v.z, v.norm_squared()))
        .collect();
    let goal = target.as_vector();
    let scale = target.scales();
    let mut lambda = Vector5::zeros();
    let mut last = f64::INFINITY;
    for iter in 0..MAX_ITER {
        let mut moments = Vector5::zeros();
        let mut jac = Matrix5::zeros();
        for (&fv, psi) in f.values().iter().zip(&basis) {
            if fv == 0.0 {
                continue;
            }
            let w = fv * lambda.dot(psi).exp() * cell;
            moments += psi * w;
            jac += psi * psi.transpose() * w;
        }
        let residual = moments - goal;
        let rel = residual.component_div(&scale).amax();
        if rel <= RESIDUAL_TOL || (rel <= STALL_TOL && rel >= last) {
            log::debug!("conservation correction converged in {iter} iterations, multiplier {lambda:?}");
            let values = f
                .values()
                .iter()
                .zip(&basis)
                .map(|(fv, psi)| fv * lambda.dot(psi).exp())
                .collect();
            return Ok((Distribution::from_values_unchecked(grid, values), lambda));
        }
        let delta = jac
            .cholesky()
            .map(|c| c.solve(&residual))
            .or_else(|| jac.lu().solve(&residual))
            .ok_or_else(|| Error::InvalidDistribution("moment system is singular".into()))?;
        lambda -= delta;
        last = rel;
    }
    Err(Error::InvalidDistribution(format!(
        "conservation correction did not converge in {MAX_ITER} iterations"
    )))
}

/// One step as configured: the Euler update followed, if enabled, by the
/// moment projection onto `target`.
pub fn step(f: &Distribution, cfg: &SimulationConfig, dt: f64, target: &Conserved) -> Result<Distribution> {
    let next = euler_step(f, &cfg.kernel, &cfg.quad, dt)?;
    if cfg.conservation_correction && dt > 0.0 {
        Ok(conservation_correction(&next, target)?.0)
    } else {
        Ok(next)
    }
}

/// One row of the time series.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesRecord {
    pub step: usize,
    pub t: f64,
    pub moments: MomentReport,
    /// `(p, ceiling)` for every configured `p`.
    pub ceilings: Vec<(f64, f64)>,
    pub boundary_mass: f64,
}

fn p_label(p: f64) -> String {
    if p.is_infinite() {
        "inf".into()
    } else {
        format!("{p}")
    }
}

impl TimeSeriesRecord {
    /// Column names for the given `L^p` list.
    pub fn header(lp_list: &[f64]) -> String {
        let mut cols: Vec<String> = ["t", "mass", "px", "py", "pz", "energy", "entropy"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        cols.extend(lp_list.iter().map(|p| format!("lp_{}", p_label(*p))));
        cols.extend(lp_list.iter().map(|p| format!("ceiling_{}", p_label(*p))));
        cols.push("boundary_mass".into());
        cols.join(",")
    }

    pub fn to_row(&self) -> String {
        let m = &self.moments;
        let mut cols = vec![
            self.t.to_string(),
            m.mass.to_string(),
            m.momentum.x.to_string(),
            m.momentum.y.to_string(),
            m.momentum.z.to_string(),
            m.energy.to_string(),
            m.entropy.to_string(),
        ];
        cols.extend(m.lp_norms.iter().map(|(_, v)| v.to_string()));
        cols.extend(self.ceilings.iter().map(|(_, v)| v.to_string()));
        cols.push(self.boundary_mass.to_string());
        cols.join(",")
    }
}

/// State handed to the observer after every step (and once for the initial
/// datum with `step = 0`).
#[derive(Debug, Clone, Copy)]
pub struct Frame<'a> {
    pub step: usize,
    pub t: f64,
    pub state: &'a Distribution,
    /// Whether this step produced a report row.
    pub reported: bool,
}

/// Where and why a run stopped early.
#[derive(Debug, Clone, PartialEq)]
pub struct Breach {
    pub step: usize,
    pub t: f64,
    pub what: String,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub records: Vec<TimeSeriesRecord>,
    pub final_state: Distribution,
    pub steps_taken: usize,
    pub breach: Option<Breach>,
}

impl RunOutcome {
    /// `Err(MonitorBreach)` if a monitor tripped.
    pub fn check(&self) -> Result<()> {
        match &self.breach {
            None => Ok(()),
            Some(b) => Err(Error::MonitorBreach {
                t: b.t,
                what: b.what.clone(),
            }),
        }
    }
}

struct Monitors {
    tol: MonitorTolerances,
    h0_scale: f64,
    target: Conserved,
    ceilings: Vec<(f64, f64)>,
    check_conservation: bool,
}

impl Monitors {
    fn inspect(&self, prev_entropy: f64, f: &Distribution, report: &MomentReport) -> Option<String> {
        if let Some(idx) = f.values().iter().position(|v| !(*v >= 0.0)) {
            return Some(format!("negative or non-finite value {} at node {idx}", f.values()[idx]));
        }
        let rise = report.entropy - prev_entropy;
        if rise > self.tol.entropy_rel * self.h0_scale {
            return Some(format!(
                "entropy increased by {rise} (allowed {})",
                self.tol.entropy_rel * self.h0_scale
            ));
        }
        for ((p, norm), (_, ceiling)) in report.lp_norms.iter().zip(&self.ceilings) {
            if *norm > ceiling * (1.0 + self.tol.ceiling_rel) {
                return Some(format!("L^{} norm {norm} above ceiling {ceiling}", p_label(*p)));
            }
        }
        if self.check_conservation {
            let now = Conserved {
                mass: report.mass,
                momentum: report.momentum,
                energy: report.energy,
            };
            let drift = self.target.relative_drift(&now);
            if drift > self.tol.conservation_rel {
                return Some(format!("conserved quantities drifted by {drift} (relative)"));
            }
        }
        None
    }
}

/// Runs to `t_end`, checking the monitors after every step. A monitor breach
/// stops the run and is returned in [`RunOutcome::breach`] together with the
/// rows written so far; invalid input and step rejection are errors.
pub fn run(
    f0: &Distribution,
    cfg: &SimulationConfig,
    mut observer: impl FnMut(Frame<'_>) -> Result<()>,
) -> Result<RunOutcome> {
    cfg.validate()?;
    if *f0.grid() != cfg.grid {
        return Err(Error::GridMismatch);
    }
    let mass = f0.mass();
    if !(mass > 0.0) {
        return Err(Error::InvalidDistribution("initial mass must be positive".into()));
    }
    let limit = max_dt(f0, &cfg.kernel);
    if cfg.dt > limit * (1.0 + STEP_SLACK) {
        return Err(Error::StepRejected { dt: cfg.dt, max_dt: limit });
    }
    let ceilings = cfg
        .lp_list
        .iter()
        .map(|&p| lp_ceiling(f0, p).map(|c| (p, c)))
        .collect::<Result<Vec<_>>>()?;
    let record = |step: usize, t: f64, f: &Distribution, moments: MomentReport| TimeSeriesRecord {
        step,
        t,
        moments,
        ceilings: ceilings.clone(),
        boundary_mass: f.boundary_mass(),
    };

    let report0 = f0.moments(&cfg.lp_list)?;
    let monitors = Monitors {
        tol: cfg.monitors,
        h0_scale: report0.entropy.abs(),
        target: Conserved::of(f0),
        ceilings: ceilings.clone(),
        check_conservation: cfg.conservation_correction,
    };
    let total = cfg.step_count();
    let mut f = f0.clone();
    let mut prev_entropy = report0.entropy;
    let mut records = vec![record(0, 0.0, f0, report0)];
    observer(Frame {
        step: 0,
        t: 0.0,
        state: f0,
        reported: true,
    })?;
    for k in 1..=total {
        let t_prev = (k - 1) as f64 * cfg.dt;
        let t = if k == total { cfg.t_end } else { k as f64 * cfg.dt };
        f = step(&f, cfg, t - t_prev, &monitors.target)?;
        let report = f.moments(&cfg.lp_list)?;
        let breach = monitors.inspect(prev_entropy, &f, &report);
        prev_entropy = report.entropy;
        let reported = breach.is_some() || k == total || k % cfg.report_every == 0;
        if reported {
            records.push(record(k, t, &f, report));
        }
        observer(Frame {
            step: k,
            t,
            state: &f,
            reported,
        })?;
        if let Some(what) = breach {
            log::warn!("monitor breach at step {k}, t = {t}: {what}");
            return Ok(RunOutcome {
                records,
                final_state: f,
                steps_taken: k,
                breach: Some(Breach { step: k, t, what }),
            });
        }
    }
    Ok(RunOutcome {
        records,
        final_state: f,
        steps_taken: total,
        breach: None,
    })
}
