//! TOML experiment configuration: parsing, `key=value` overrides, validation.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::potentials::PotentialSpec;
use crate::propagator::EvolutionConfig;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    GroundState,
    Thresholds,
    Evolve,
    DichotomyScan,
    VirialCheck,
    DispersiveCheck,
    DefocusingEvolve,
    InequalityFuzz,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 8] = [
        ExperimentKind::GroundState,
        ExperimentKind::Thresholds,
        ExperimentKind::Evolve,
        ExperimentKind::DichotomyScan,
        ExperimentKind::VirialCheck,
        ExperimentKind::DispersiveCheck,
        ExperimentKind::DefocusingEvolve,
        ExperimentKind::InequalityFuzz,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::GroundState => "ground-state",
            ExperimentKind::Thresholds => "thresholds",
            ExperimentKind::Evolve => "evolve",
            ExperimentKind::DichotomyScan => "dichotomy-scan",
            ExperimentKind::VirialCheck => "virial-check",
            ExperimentKind::DispersiveCheck => "dispersive-check",
            ExperimentKind::DefocusingEvolve => "defocusing-evolve",
            ExperimentKind::InequalityFuzz => "inequality-fuzz",
        }
    }

    fn needs_initial_data(self) -> bool {
        matches!(
            self,
            ExperimentKind::Evolve
                | ExperimentKind::VirialCheck
                | ExperimentKind::DispersiveCheck
                | ExperimentKind::DefocusingEvolve
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub n: usize,
    pub box_length: f64,
}

impl GridSpec {
    pub fn build(&self) -> Result<Grid> {
        Grid::new(self.n, self.box_length)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialData {
    /// `λ` times the ground state that generates the thresholds.
    ScaledGroundState {
        lambda: f64,
        #[serde(default)]
        center: [f64; 3],
    },
    /// `A exp(-|x - c|^2 / w^2) exp(i k0·x)`
    Gaussian {
        amplitude: f64,
        width: f64,
        #[serde(default)]
        center: [f64; 3],
        #[serde(default)]
        boost: [f64; 3],
    },
    /// Relative paths are taken from the directory of the config file.
    FromSnapshot { path: PathBuf },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanSettings {
    pub lambdas: Vec<f64>,
    /// Also evolve each scaled state and check that `g(t)` stays on its side of `α`.
    pub evolve: bool,
}

impl Default for ScanSettings {
    fn default() -> Self {
        Self {
            lambdas: vec![0.5, 0.8, 1.2],
            evolve: true,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VirialSettings {
    /// Cutoff radii; each needs `0 < 2R < L/2`.
    pub radii: Vec<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DispersiveSettings {
    /// Fit window; defaults to the last decade before the wraparound limit.
    pub window: Option<[f64; 2]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FuzzSettings {
    pub trials: usize,
}

impl Default for FuzzSettings {
    fn default() -> Self {
        Self { trials: 1000 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub grid: GridSpec,
    #[serde(default)]
    pub potential: PotentialSpec,
    #[serde(default)]
    pub evolution: EvolutionConfig,
    #[serde(default)]
    pub initial_data: Option<InitialData>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
    /// Write `.nlsf` snapshots of the initial, final and ground-state fields.
    #[serde(default)]
    pub save_snapshots: bool,
    #[serde(default)]
    pub scan: ScanSettings,
    #[serde(default)]
    pub virial: VirialSettings,
    #[serde(default)]
    pub dispersive: DispersiveSettings,
    #[serde(default)]
    pub fuzz: FuzzSettings,
    /// Directory that relative snapshot paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

/// Sets `key` (dotted path) in `table` to `raw`, parsed as a TOML value when
/// possible and as a bare string otherwise.
fn apply_override(table: &mut toml::Table, key: &str, raw: &str) -> std::result::Result<(), String> {
    let value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(format!("override key '{key}' is malformed"));
    }
    let mut cur = table;
    for part in &parts[..parts.len() - 1] {
        let entry = cur
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| format!("override key '{key}': '{part}' is not a table"))?;
    }
    cur.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

impl ExperimentConfig {
    /// Parses `text`, applying each `key=value` override first. Unknown keys
    /// and type errors are configuration errors.
    pub fn parse(text: &str, overrides: &[String], base_dir: &Path) -> Result<Self> {
        let mut table: toml::Table =
            toml::from_str(text).map_err(|e| Error::InvalidConfig(vec![format!("parse: {}", e.message())]))?;
        let mut problems = Vec::new();
        for ov in overrides {
            match ov.split_once('=') {
                Some((k, v)) => {
                    if let Err(e) = apply_override(&mut table, k.trim(), v.trim()) {
                        problems.push(e);
                    }
                }
                None => problems.push(format!("override '{ov}' is not of the form key=value")),
            }
        }
        if !problems.is_empty() {
            return Err(Error::InvalidConfig(problems));
        }
        let mut cfg: ExperimentConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| Error::InvalidConfig(vec![format!("parse: {}", e.message())]))?;
        cfg.base_dir = base_dir.to_path_buf();
        Ok(cfg)
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let cfg = Self::parse(&text, overrides, &base)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.base_dir.join(path)
        }
    }

    /// Every violated constraint, keyed by its config path.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let GridSpec { n, box_length } = self.grid;
        if !n.is_power_of_two() || n < 8 {
            out.push(format!("grid.n: {n} must be a power of two >= 8"));
        }
        if !(box_length > 0.0 && box_length.is_finite()) {
            out.push(format!("grid.box_length: {box_length} must be positive and finite"));
        }
        out.extend(self.potential.violations().into_iter().map(|v| format!("potential: {v}")));
        out.extend(self.evolution.violations("evolution."));

        match &self.initial_data {
            None if self.experiment.needs_initial_data() => {
                out.push(format!("initial_data: required by {}", self.experiment.name()));
            }
            Some(InitialData::ScaledGroundState { lambda, .. }) if !(lambda.is_finite() && *lambda > 0.0) => {
                out.push(format!("initial_data.lambda: {lambda} must be positive"));
            }
            Some(InitialData::Gaussian { amplitude, width, .. }) => {
                if !amplitude.is_finite() {
                    out.push(format!("initial_data.amplitude: {amplitude} must be finite"));
                }
                if !(width.is_finite() && *width > 0.0) {
                    out.push(format!("initial_data.width: {width} must be positive"));
                }
            }
            Some(InitialData::FromSnapshot { path }) => {
                let p = self.resolve(path);
                if !p.is_file() {
                    out.push(format!("initial_data.path: {} does not exist", p.display()));
                }
            }
            _ => {}
        }

        for (i, r) in self.virial.radii.iter().enumerate() {
            if !(*r > 0.0 && 2.0 * r < box_length / 2.0) {
                out.push(format!("virial.radii[{i}]: R = {r} needs 0 < 2R < L/2 = {}", box_length / 2.0));
            }
        }
        match self.experiment {
            ExperimentKind::VirialCheck if self.virial.radii.is_empty() => {
                out.push("virial.radii: virial-check needs at least one radius".into());
            }
            ExperimentKind::DispersiveCheck if self.evolution.sigma != 0 => {
                out.push(format!(
                    "evolution.sigma: dispersive-check runs the linear flow (sigma = 0), got {}",
                    self.evolution.sigma
                ));
            }
            ExperimentKind::DefocusingEvolve if self.evolution.sigma != -1 => {
                out.push(format!(
                    "evolution.sigma: defocusing-evolve needs sigma = -1, got {}",
                    self.evolution.sigma
                ));
            }
            ExperimentKind::DichotomyScan => {
                if self.scan.lambdas.is_empty() {
                    out.push("scan.lambdas: empty".into());
                }
                for (i, l) in self.scan.lambdas.iter().enumerate() {
                    if !(l.is_finite() && *l > 0.0) {
                        out.push(format!("scan.lambdas[{i}]: {l} must be positive"));
                    }
                }
                if self.evolution.sigma != 1 {
                    out.push(format!("evolution.sigma: dichotomy-scan is focusing (sigma = 1), got {}", self.evolution.sigma));
                }
            }
            ExperimentKind::InequalityFuzz if self.fuzz.trials == 0 => {
                out.push("fuzz.trials: must be at least 1".into());
            }
            _ => {}
        }
        if let Some([a, b]) = self.dispersive.window {
            if !(a > 0.0 && b >= 10.0 * a) {
                out.push(format!("dispersive.window: [{a}, {b}] must start after 0 and span a decade"));
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidConfig(v))
        }
    }
}
