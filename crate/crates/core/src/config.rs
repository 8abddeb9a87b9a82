//! TOML run configuration shared by the CLI subcommands.
//!
//! Key names are documented in `docs/config.md`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::diagnostics::Thresholds;
use crate::error::{Error, Result};
use crate::fbsolver::{NumericsConfig, DEFAULT_MAX_TAU_STEPS, DEFAULT_N_CELLS};
use crate::model::{
    make_reaction, validate_history, BirthFunction, FamilyId, InitialHistory, ProblemSpec, RawHistory,
};
use crate::semiwave::{SemiwaveNumerics, SpeedAxis};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyName {
    BevertonHolt,
    LogisticDeath,
    StageStructured,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BirthName {
    BevertonHolt,
    Saturating,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub family: FamilyName,
    pub p: Option<f64>,
    pub q: Option<f64>,
    pub r: Option<f64>,
    pub birth: Option<BirthName>,
    pub d_i: Option<f64>,
    pub d: f64,
    #[serde(default)]
    pub tau: f64,
    #[serde(default = "one")]
    pub mu: f64,
}

fn one() -> f64 {
    1.0
}

fn need(v: Option<f64>, key: &str, family: &str) -> Result<f64> {
    v.ok_or_else(|| Error::Config(format!("problem.{key} is required for family {family}")))
}

impl ProblemConfig {
    pub fn family_id(&self) -> Result<FamilyId> {
        Ok(match self.family {
            FamilyName::BevertonHolt => FamilyId::BevertonHolt {
                p: need(self.p, "p", "beverton_holt")?,
                q: need(self.q, "q", "beverton_holt")?,
            },
            FamilyName::LogisticDeath => FamilyId::LogisticDeath {
                r: need(self.r, "r", "logistic_death")?,
            },
            FamilyName::StageStructured => {
                let p = need(self.p, "p", "stage_structured")?;
                let q = need(self.q, "q", "stage_structured")?;
                let birth = match self.birth.unwrap_or(BirthName::BevertonHolt) {
                    BirthName::BevertonHolt => BirthFunction::BevertonHolt { p, q },
                    BirthName::Saturating => BirthFunction::Saturating { p, q },
                };
                FamilyId::StageStructured {
                    birth,
                    d_i: need(self.d_i, "d_i", "stage_structured")?,
                    tau: self.tau,
                }
            }
        })
    }

    /// Validated reaction plus `(tau, mu)`.
    pub fn spec(&self) -> Result<ProblemSpec> {
        let reaction = make_reaction(self.family_id()?, self.d)?;
        ProblemSpec::new(reaction, self.tau, self.mu)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialKind {
    Cosine,
    Csv,
}

/// Initial history: a cosine bump on a fixed habitat, or two CSV files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitialConfig {
    pub kind: InitialKind,
    pub g0: f64,
    pub h0: f64,
    pub amplitude: f64,
    pub n_points: usize,
    pub n_thetas: usize,
    pub domain_csv: Option<PathBuf>,
    pub samples_csv: Option<PathBuf>,
}

impl Default for InitialConfig {
    fn default() -> Self {
        InitialConfig {
            kind: InitialKind::Cosine,
            g0: -2.0,
            h0: 2.0,
            amplitude: 0.5,
            n_points: 401,
            n_thetas: 3,
            domain_csv: None,
            samples_csv: None,
        }
    }
}

impl InitialConfig {
    /// Relative CSV paths are resolved against `base` (the config's directory).
    pub fn history(&self, spec: &ProblemSpec, base: &Path) -> Result<InitialHistory> {
        let raw = match self.kind {
            InitialKind::Cosine => {
                if !(self.h0 > self.g0) {
                    return Err(Error::Config(format!(
                        "initial.h0 = {} must exceed initial.g0 = {}",
                        self.h0, self.g0
                    )));
                }
                RawHistory::cosine(spec.tau, self.g0, self.h0, self.amplitude, self.n_thetas, self.n_points)
            }
            InitialKind::Csv => {
                let resolve = |p: &Option<PathBuf>, key: &str| -> Result<PathBuf> {
                    let p = p
                        .as_ref()
                        .ok_or_else(|| Error::Config(format!("initial.{key} is required for kind = \"csv\"")))?;
                    let full = if p.is_absolute() { p.clone() } else { base.join(p) };
                    if !full.exists() {
                        return Err(Error::Config(format!("{} does not exist", full.display())));
                    }
                    Ok(full)
                };
                RawHistory::from_csv(&resolve(&self.domain_csv, "domain_csv")?, &resolve(&self.samples_csv, "samples_csv")?)?
            }
        };
        validate_history(spec, raw)
    }
}

/// `[numerics]`; `dt` absent means automatic step selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NumericsSection {
    pub n_cells: usize,
    pub dt: Option<f64>,
    pub boundary_stencil_order: u8,
    pub t_end: f64,
    pub snapshot_every: f64,
    pub adapt_dt: bool,
    pub dt_max: Option<f64>,
    pub max_tau_steps: usize,
}

impl Default for NumericsSection {
    fn default() -> Self {
        NumericsSection {
            n_cells: DEFAULT_N_CELLS,
            dt: None,
            boundary_stencil_order: 2,
            t_end: 50.0,
            snapshot_every: 10.0,
            adapt_dt: true,
            dt_max: None,
            max_tau_steps: DEFAULT_MAX_TAU_STEPS,
        }
    }
}

impl NumericsSection {
    pub fn resolve(&self, spec: &ProblemSpec, initial_length: f64) -> Result<NumericsConfig> {
        let mut cfg = match self.dt {
            Some(dt) => {
                let mut c = NumericsConfig::with_dt(spec, self.n_cells, dt, self.t_end)?;
                c.adapt_dt = self.adapt_dt;
                c
            }
            None => {
                let mut c = NumericsConfig::auto_with(spec, initial_length, self.t_end, self.n_cells, self.max_tau_steps);
                c.adapt_dt = self.adapt_dt;
                c
            }
        };
        cfg.boundary_stencil_order = self.boundary_stencil_order;
        cfg.snapshot_every = self.snapshot_every;
        if let Some(m) = self.dt_max {
            cfg.dt_max = m;
        }
        cfg.validate(spec)?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { dir: PathBuf::from("out") }
    }
}

/// `[semiwave]`: solve at `c`, or at `c*` when `c` is absent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct SemiwaveSection {
    pub c: Option<f64>,
    pub length: Option<f64>,
    pub dz: Option<f64>,
    pub relax_tol: Option<f64>,
    pub max_steps: Option<usize>,
    pub check_truncation: bool,
}

impl SemiwaveSection {
    pub fn numerics(&self, spec: &ProblemSpec, c: f64) -> SemiwaveNumerics {
        let mut n = SemiwaveNumerics::for_speed(spec, c);
        if let Some(l) = self.length {
            n.length = l;
            n.dz = l / 2000.0;
        }
        if let Some(dz) = self.dz {
            n.dz = dz;
        }
        if let Some(t) = self.relax_tol {
            n.relax_tol = t;
        }
        if let Some(m) = self.max_steps {
            n.max_steps = m;
        }
        n.check_truncation = self.check_truncation;
        n
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpeedsSection {
    pub axis: SpeedAxis,
    pub values: Vec<f64>,
}

impl Default for SpeedsSection {
    fn default() -> Self {
        SpeedsSection { axis: SpeedAxis::Mu, values: vec![0.5, 1.0, 2.0, 4.0, 8.0] }
    }
}

/// `[characteristic]`: `c = c_fraction * c0(tau)` unless `c` is given.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CharacteristicSection {
    pub taus: Vec<f64>,
    pub c: Option<f64>,
    pub c_fraction: f64,
    pub n_steps: Option<usize>,
}

impl Default for CharacteristicSection {
    fn default() -> Self {
        CharacteristicSection { taus: vec![0.0, 0.1, 0.5, 1.0, 2.0], c: None, c_fraction: 0.5, n_steps: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClassifySection {
    pub eps_vanish: f64,
    pub length_slack: f64,
    pub stop_on_verdict: bool,
}

impl Default for ClassifySection {
    fn default() -> Self {
        let t = Thresholds::default();
        ClassifySection { eps_vanish: t.eps_vanish, length_slack: t.length_slack, stop_on_verdict: true }
    }
}

impl ClassifySection {
    pub fn thresholds(&self) -> Thresholds {
        Thresholds { eps_vanish: self.eps_vanish, length_slack: self.length_slack }
    }
}

/// `[compare]`: run B uses `initial_b`, run A uses `[initial]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CompareSection {
    pub tol: f64,
    pub initial_b: InitialConfig,
}

impl Default for CompareSection {
    fn default() -> Self {
        CompareSection {
            tol: 1e-6,
            initial_b: InitialConfig { amplitude: 0.25, ..InitialConfig::default() },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemConfig,
    #[serde(default)]
    pub initial: InitialConfig,
    #[serde(default)]
    pub numerics: NumericsSection,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub semiwave: SemiwaveSection,
    #[serde(default)]
    pub speeds: SpeedsSection,
    #[serde(default)]
    pub characteristic: CharacteristicSection,
    #[serde(default)]
    pub classify: ClassifySection,
    #[serde(default)]
    pub compare: CompareSection,
}

/// Parses `text`, applying `key.path=value` overrides to scalar entries first.
pub fn parse_with_overrides(text: &str, overrides: &[String]) -> Result<RunConfig> {
    let mut doc: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
    for item in overrides {
        apply_override(&mut doc, item)?;
    }
    toml::Value::Table(doc)
        .try_into()
        .map_err(|e: toml::de::Error| Error::Config(e.to_string()))
}

fn apply_override(doc: &mut toml::Table, item: &str) -> Result<()> {
    let (key, raw) = item
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override `{item}` is not key=value")))?;
    let parts: Vec<&str> = key.trim().split('.').collect();
    let (last, parents) = parts.split_last().expect("split yields at least one part");
    let mut table = doc;
    for p in parents {
        table = table
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("`{key}`: `{p}` is not a table")))?;
    }
    if matches!(table.get(*last), Some(toml::Value::Table(_))) {
        return Err(Error::Config(format!("`{key}` names a table; only scalars can be overridden")));
    }
    let raw = raw.trim();
    let value = format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    if matches!(value, toml::Value::Table(_)) {
        return Err(Error::Config(format!("`{key}`: tables cannot be set from the command line")));
    }
    table.insert(last.to_string(), value);
    Ok(())
}

pub fn load(path: &Path, overrides: &[String]) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_with_overrides(&text, overrides)
}
