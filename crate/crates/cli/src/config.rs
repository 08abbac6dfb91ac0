//! Declarative run configuration: TOML with dotted sections.
//!
//! ```toml
//! [model]
//! delta = -0.2
//! g0 = 0.5
//! drive = 0.1
//! kappa = 0.2
//! q_mech = 1e4
//! n_th = 3.0
//! n_cavity = 4
//! n_mech = 40
//!
//! [sweep]
//! variable = "detuning"            # detuning | n_mech | n_cavity
//! start = -1.0                     # or: values = [-1.0, 0.0, 1.0]
//! stop = 1.0
//! count = 21
//! methods = ["direct_lu", "gmres_ilu_rcm"]
//! repetitions = 3
//!
//! [ilu]
//! drop_tol = 1e-4
//! fill_factor = 100.0
//!
//! [solver]
//! restart = 10
//! max_iterations = 1000
//! tolerance = 1e-15
//!
//! [output]
//! path = "sweep.csv"
//! ```

use anyhow::{bail, Context, Result};
use optoss::{IluConfig, ModelParams, SolveMethod, SolverConfig, TruncationConfig};
use serde::Deserialize;
use std::path::Path;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub model: ModelSection,
    #[serde(default)]
    pub sweep: Option<SweepSection>,
    #[serde(default)]
    pub ilu: IluSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub output: Option<OutputSection>,
    #[serde(default)]
    pub figure5: Option<Figure5Section>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    #[serde(default)]
    pub delta: f64,
    #[serde(default = "one")]
    pub omega_m: f64,
    #[serde(default)]
    pub g0: f64,
    #[serde(default)]
    pub drive: f64,
    pub kappa: f64,
    #[serde(default = "default_q")]
    pub q_mech: f64,
    #[serde(default)]
    pub n_th: f64,
    pub n_cavity: usize,
    pub n_mech: usize,
}

fn one() -> f64 {
    1.0
}

fn default_q() -> f64 {
    1e4
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub variable: String,
    #[serde(default)]
    pub values: Option<Vec<f64>>,
    #[serde(default)]
    pub start: Option<f64>,
    #[serde(default)]
    pub stop: Option<f64>,
    #[serde(default)]
    pub count: Option<usize>,
    pub methods: Vec<String>,
    #[serde(default = "default_reps")]
    pub repetitions: usize,
}

fn default_reps() -> usize {
    3
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct IluSection {
    pub drop_tol: Option<f64>,
    pub fill_factor: Option<f64>,
    pub pivot_threshold: Option<f64>,
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub restart: Option<usize>,
    pub max_iterations: Option<usize>,
    pub tolerance: Option<f64>,
    pub shift: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub path: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Figure5Section {
    #[serde(default)]
    pub x_min: Option<f64>,
    #[serde(default)]
    pub x_max: Option<f64>,
    #[serde(default = "default_points")]
    pub points: usize,
    #[serde(default = "default_wigner_path")]
    pub wigner_path: String,
    #[serde(default = "default_distribution_path")]
    pub distribution_path: String,
}

fn default_points() -> usize {
    201
}

fn default_wigner_path() -> String {
    "wigner.csv".into()
}

fn default_distribution_path() -> String {
    "distribution.csv".into()
}

/// Which quantity a sweep varies.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepVariable {
    Detuning,
    NMech,
    NCavity,
}

impl SweepVariable {
    pub fn parse(s: &str) -> Result<SweepVariable> {
        match s {
            "detuning" => Ok(SweepVariable::Detuning),
            "n_mech" => Ok(SweepVariable::NMech),
            "n_cavity" => Ok(SweepVariable::NCavity),
            other => bail!("unknown sweep variable '{other}' (expected detuning, n_mech, or n_cavity)"),
        }
    }
}

/// Fully resolved sweep plan.
pub struct SweepConfig {
    pub base: ModelParams,
    pub variable: SweepVariable,
    pub values: Vec<f64>,
    pub methods: Vec<SolveMethod>,
    pub solver: SolverConfig,
    pub repetitions: usize,
    pub output_path: Option<String>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<FileConfig> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let cfg: FileConfig = toml::from_str(&text)
            .with_context(|| format!("parsing config {}", path.display()))?;
        Ok(cfg)
    }

    pub fn model_params(&self) -> Result<ModelParams> {
        let trunc = TruncationConfig::new(self.model.n_cavity, self.model.n_mech)?;
        let mut p = ModelParams::new(trunc);
        p.delta = self.model.delta;
        p.omega_m = self.model.omega_m;
        p.g0 = self.model.g0;
        p.drive = self.model.drive;
        p.kappa = self.model.kappa;
        p.q_mech = self.model.q_mech;
        p.n_th = self.model.n_th;
        p.validate()?;
        Ok(p)
    }

    pub fn solver_config(&self) -> SolverConfig {
        let mut cfg = SolverConfig::default();
        if let Some(r) = self.solver.restart {
            cfg.restart = r;
        }
        if let Some(m) = self.solver.max_iterations {
            cfg.max_iterations = m;
        }
        if let Some(t) = self.solver.tolerance {
            cfg.tolerance = t;
        }
        if let Some(s) = self.solver.shift {
            cfg.shift = s;
        }
        cfg.ilu = self.ilu_config();
        cfg
    }

    pub fn ilu_config(&self) -> IluConfig {
        let mut ilu = IluConfig::default();
        if let Some(d) = self.ilu.drop_tol {
            ilu.drop_tol = d;
        }
        if let Some(p) = self.ilu.fill_factor {
            ilu.fill_factor = p;
        }
        if let Some(t) = self.ilu.pivot_threshold {
            ilu.pivot_threshold = t;
        }
        ilu
    }

    pub fn sweep_config(&self) -> Result<SweepConfig> {
        let section = self
            .sweep
            .as_ref()
            .context("config has no [sweep] section")?;
        let variable = SweepVariable::parse(&section.variable)?;
        let values = match (&section.values, section.start, section.stop, section.count) {
            (Some(v), None, None, None) => v.clone(),
            (None, Some(a), Some(b), Some(n)) if n >= 2 => (0..n)
                .map(|i| a + (b - a) * i as f64 / (n as f64 - 1.0))
                .collect(),
            (None, Some(a), Some(_), Some(1)) => vec![a],
            _ => bail!("[sweep] needs either `values` or `start`/`stop`/`count`"),
        };
        if values.is_empty() {
            bail!("[sweep] values must be nonempty");
        }
        let methods = section
            .methods
            .iter()
            .map(|m| SolveMethod::parse(m).map_err(Into::into))
            .collect::<Result<Vec<_>>>()?;
        if methods.is_empty() {
            bail!("[sweep] methods must be nonempty");
        }
        if section.repetitions < 1 {
            bail!("[sweep] repetitions must be at least 1");
        }
        Ok(SweepConfig {
            base: self.model_params()?,
            variable,
            values,
            methods,
            solver: self.solver_config(),
            repetitions: section.repetitions,
            output_path: self.output.as_ref().map(|o| o.path.clone()),
        })
    }
}

/// Apply a sweep value to the base parameters.
pub fn apply_sweep(
    base: &ModelParams,
    variable: SweepVariable,
    value: f64,
) -> Result<ModelParams> {
    let mut p = *base;
    match variable {
        SweepVariable::Detuning => p.delta = value,
        SweepVariable::NMech => {
            let n = value.round() as usize;
            p.trunc = TruncationConfig::new(p.trunc.n_cavity, n)?;
        }
        SweepVariable::NCavity => {
            let n = value.round() as usize;
            p.trunc = TruncationConfig::new(n, p.trunc.n_mech)?;
        }
    }
    Ok(p)
}
