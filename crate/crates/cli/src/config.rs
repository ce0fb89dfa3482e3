//! TOML run configuration. Unknown keys are rejected in every section.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Deserialize;

use grazing_core::collision::QuadratureSpec;
use grazing_core::grid::{read_snapshot, Distribution, GridSpec};
use grazing_core::integrator::{MonitorTolerances, SimulationConfig};
use grazing_core::kernel::KernelParams;
use grazing_core::test_functions::TestFunction;
use grazing_core::Vec3;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSection {
    pub gamma: f64,
    /// Single value for `simulate`.
    pub eps: Option<f64>,
    /// List of values for `grazing`.
    pub eps_list: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub n: usize,
    pub v_max: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureSection {
    #[serde(default = "default_m_phi")]
    pub m_phi: usize,
}

impl Default for QuadratureSection {
    fn default() -> Self {
        Self { m_phi: default_m_phi() }
    }
}

fn default_m_phi() -> usize {
    grazing_core::collision::DEFAULT_M_PHI
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSection {
    pub dt: f64,
    pub t_end: f64,
    #[serde(default = "one")]
    pub report_every: usize,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SnapshotKind {
    Text,
    Bin,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
    #[serde(default = "default_lp")]
    pub lp_list: Vec<f64>,
    /// Steps between snapshots; 0 writes none.
    #[serde(default)]
    pub snapshot_every: usize,
    #[serde(default = "default_snapshot_kind")]
    pub snapshot_format: SnapshotKind,
}

fn default_lp() -> Vec<f64> {
    vec![1.0, 2.0, f64::INFINITY]
}

fn default_snapshot_kind() -> SnapshotKind {
    SnapshotKind::Text
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonitorSection {
    #[serde(default)]
    pub conservation_correction: bool,
    pub entropy_rel: Option<f64>,
    pub conservation_rel: Option<f64>,
    pub ceiling_rel: Option<f64>,
}

impl Default for MonitorSection {
    fn default() -> Self {
        Self {
            conservation_correction: false,
            entropy_rel: None,
            conservation_rel: None,
            ceiling_rel: None,
        }
    }
}

impl MonitorSection {
    fn tolerances(&self) -> MonitorTolerances {
        let d = MonitorTolerances::default();
        MonitorTolerances {
            entropy_rel: self.entropy_rel.unwrap_or(d.entropy_rel),
            conservation_rel: self.conservation_rel.unwrap_or(d.conservation_rel),
            ceiling_rel: self.ceiling_rel.unwrap_or(d.ceiling_rel),
        }
    }
}

/// Initial datum.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialSection {
    Maxwellian {
        #[serde(default = "unit")]
        mass: f64,
        #[serde(default)]
        bulk: [f64; 3],
        #[serde(default = "unit")]
        temperature: f64,
    },
    /// Two equal Maxwellians centred at `+-(offset, 0, 0)` with total `mass`.
    TwoBump {
        #[serde(default = "unit")]
        mass: f64,
        #[serde(default = "unit")]
        offset: f64,
        #[serde(default = "unit")]
        temperature: f64,
    },
    Snapshot {
        path: PathBuf,
    },
}

fn unit() -> f64 {
    1.0
}

impl InitialSection {
    /// Builds the datum on `grid`; snapshot paths are relative to `base`.
    pub fn build(&self, grid: GridSpec, base: &Path) -> Result<Distribution> {
        Ok(match self {
            Self::Maxwellian { mass, bulk, temperature } => {
                Distribution::maxwellian(grid, *mass, Vec3::from(*bulk), *temperature)?
            }
            Self::TwoBump { mass, offset, temperature } => {
                let shift = Vec3::new(*offset, 0.0, 0.0);
                let a = Distribution::maxwellian(grid, 0.5 * mass, shift, *temperature)?;
                let b = Distribution::maxwellian(grid, 0.5 * mass, -shift, *temperature)?;
                a.add(&b)?
            }
            Self::Snapshot { path } => {
                let (_, f) = read_snapshot(&base.join(path))
                    .with_context(|| format!("reading initial snapshot {}", path.display()))?;
                if *f.grid() != grid {
                    bail!("initial snapshot grid does not match [grid]");
                }
                f
            }
        })
    }

    pub fn id(&self) -> String {
        match self {
            Self::Maxwellian { mass, bulk, temperature } => {
                format!("maxwellian(mass={mass} bulk={bulk:?} T={temperature})")
            }
            Self::TwoBump { mass, offset, temperature } => {
                format!("two_bump(mass={mass} offset={offset} T={temperature})")
            }
            Self::Snapshot { path } => format!("snapshot({})", path.display()),
        }
    }
}

/// Test function for the grazing comparison.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TestFunctionSection {
    Constant { value: f64 },
    Coordinate { axis: usize },
    KineticEnergy,
    Bump { center: [f64; 3], radius: f64 },
    Gaussian { center: [f64; 3], width: f64 },
}

impl TestFunctionSection {
    pub fn build(&self) -> Result<TestFunction> {
        Ok(match self {
            Self::Constant { value } => TestFunction::Constant(*value),
            Self::Coordinate { axis } => {
                if *axis > 2 {
                    bail!("coordinate axis must be 0, 1 or 2");
                }
                TestFunction::Coordinate(*axis)
            }
            Self::KineticEnergy => TestFunction::KineticEnergy,
            Self::Bump { center, radius } => {
                if !(*radius > 0.0) {
                    bail!("bump radius must be positive");
                }
                TestFunction::Bump {
                    center: Vec3::from(*center),
                    radius: *radius,
                }
            }
            Self::Gaussian { center, width } => {
                if !(*width > 0.0) {
                    bail!("gaussian width must be positive");
                }
                TestFunction::Gaussian {
                    center: Vec3::from(*center),
                    width: *width,
                }
            }
        })
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateFile {
    pub kernel: KernelSection,
    pub grid: GridSection,
    #[serde(default)]
    pub quadrature: QuadratureSection,
    pub time: TimeSection,
    pub output: OutputSection,
    #[serde(default)]
    pub monitors: MonitorSection,
    pub initial: InitialSection,
}

impl SimulateFile {
    pub fn kernel(&self) -> Result<KernelParams> {
        if self.kernel.eps_list.is_some() {
            bail!("[kernel] eps_list is only used by `grazing`; use eps");
        }
        let eps = self.kernel.eps.context("[kernel] eps is required")?;
        Ok(KernelParams::new(eps, self.kernel.gamma)?)
    }

    pub fn simulation(&self) -> Result<SimulationConfig> {
        let cfg = SimulationConfig {
            kernel: self.kernel()?,
            grid: GridSpec::new(self.grid.n, self.grid.v_max)?,
            quad: QuadratureSpec::new(self.quadrature.m_phi)?,
            dt: self.time.dt,
            t_end: self.time.t_end,
            report_every: self.time.report_every,
            lp_list: self.output.lp_list.clone(),
            conservation_correction: self.monitors.conservation_correction,
            monitors: self.monitors.tolerances(),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GrazingOutput {
    pub dir: PathBuf,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GrazingFile {
    pub kernel: KernelSection,
    pub grid: GridSection,
    #[serde(default)]
    pub quadrature: QuadratureSection,
    pub test_function: TestFunctionSection,
    pub initial: InitialSection,
    pub output: GrazingOutput,
}

impl GrazingFile {
    pub fn kernels(&self) -> Result<Vec<KernelParams>> {
        if self.kernel.eps.is_some() {
            bail!("[kernel] eps is only used by `simulate`; use eps_list");
        }
        let list = self.kernel.eps_list.as_ref().context("[kernel] eps_list is required")?;
        if list.is_empty() {
            bail!("[kernel] eps_list is empty");
        }
        list.iter()
            .map(|&e| KernelParams::new(e, self.kernel.gamma).map_err(Into::into))
            .collect()
    }
}

/// Reads and parses a config file.
pub fn load<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<(T, Vec<u8>)> {
    let bytes = std::fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
    let text = std::str::from_utf8(&bytes).context("config is not UTF-8")?;
    let parsed = toml::from_str(text).with_context(|| format!("invalid config {}", path.display()))?;
    Ok((parsed, bytes))
}

#[cfg(test)]
mod tests {
    use super::*;

    const SIM: &str = r#"
[kernel]
eps = 0.5
gamma = -3.0

[grid]
n = 8
v_max = 4.0

[time]
dt = 0.01
t_end = 0.05

[output]
dir = "out"
lp_list = [1.0, 2.0, inf]

[initial]
kind = "two_bump"
offset = 1.0
temperature = 0.5
"#;

    #[test]
    fn parses_minimal_simulation() {
        let f: SimulateFile = toml::from_str(SIM).unwrap();
        let cfg = f.simulation().unwrap();
        assert_eq!(cfg.quad.m_phi(), 16);
        assert_eq!(cfg.report_every, 1);
        assert!(cfg.lp_list[2].is_infinite());
        assert!(!cfg.conservation_correction);
        let g = cfg.grid;
        let f0 = f.initial.build(g, Path::new(".")).unwrap();
        assert!((f0.mass() - 1.0).abs() < 1e-2);
    }

    #[test]
    fn unknown_keys_are_errors() {
        let typo = SIM.replace("t_end", "t_ends");
        assert!(toml::from_str::<SimulateFile>(&typo).is_err());
        let extra = format!("{SIM}\n[monitors]\nentropy_tol = 1e-6\n");
        assert!(toml::from_str::<SimulateFile>(&extra).is_err());
        let section = format!("{SIM}\n[extras]\nx = 1\n");
        assert!(toml::from_str::<SimulateFile>(&section).is_err());
    }

    #[test]
    fn eps_fields_are_command_specific() {
        let both = SIM.replace("eps = 0.5", "eps = 0.5\neps_list = [0.1]");
        let f: SimulateFile = toml::from_str(&both).unwrap();
        assert!(f.kernel().is_err());
    }
}
