//! Experiment configuration: a TOML file with one table per concern, plus
//! command-line overrides.
//!
//! ```toml
//! [model]
//! n = 6
//! m = 12
//! v0 = 0.3
//! seed = 31
//!
//! [ensemble]
//! realizations = 20
//!
//! [initial_state]
//! energy = "center"
//! count = 10
//! ```

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use tbri_core::ModelConfig;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelConfig,
    #[serde(default)]
    pub ensemble: EnsembleSpec,
    #[serde(default)]
    pub times: TimeSpec,
    #[serde(default)]
    pub initial_state: InitialState,
    #[serde(default)]
    pub analysis: AnalysisSpec,
    #[serde(default)]
    pub output: OutputSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleSpec {
    pub realizations: u64,
}

impl Default for EnsembleSpec {
    fn default() -> Self {
        Self { realizations: 1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum TimeUnit {
    /// Times are multiples of `1/Δ_E`, with `Δ_E` the ensemble-theory width.
    #[default]
    InverseDeltaE,
    /// Times are in units of `ħ/d0`.
    Absolute,
}

/// Logarithmic grid for the decay plus a linear window for the saturation
/// level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TimeSpec {
    pub unit: TimeUnit,
    pub log_start: f64,
    pub log_stop: f64,
    pub log_points: usize,
    pub saturation_start: f64,
    pub saturation_stop: f64,
    pub saturation_points: usize,
}

impl Default for TimeSpec {
    fn default() -> Self {
        Self {
            unit: TimeUnit::InverseDeltaE,
            log_start: 1e-3,
            log_stop: 50.0,
            log_points: 240,
            saturation_start: 50.0,
            saturation_stop: 1000.0,
            saturation_points: 2000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnergyName {
    /// Midpoint of the unperturbed many-body band.
    Center,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EnergyTarget {
    Named(EnergyName),
    Value(f64),
}

/// Which basis states to start from: one fixed index, or the `count` states
/// whose unperturbed energy is closest to a target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialState {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub index: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub energy: Option<EnergyTarget>,
    #[serde(default = "one")]
    pub count: usize,
}

fn one() -> usize {
    1
}

impl Default for InitialState {
    fn default() -> Self {
        Self {
            index: None,
            energy: Some(EnergyTarget::Named(EnergyName::Center)),
            count: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisSpec {
    /// `Γ₀/Δ_E` at and above which a run is labelled "gaussian".
    pub regime_threshold: f64,
    /// Bin width for the coupled-state density behind `Γ₀` (default `d0`).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coupling_bin: Option<f64>,
    pub dos_bins: usize,
    /// Strength-function bin width in units of the mean level spacing `D`.
    pub sf_bandwidth_spacings: f64,
    /// Smoothing width for `N_pc`, in units of `D`.
    pub npc_bandwidth_spacings: f64,
    /// States per realization whose `N_pc(t)` is tracked.
    pub npc_states: usize,
    /// Samples of `N_pc(t)` on `[2, 40]/Δ_E` for the oscillation period; 0 disables.
    pub oscillation_points: usize,
    /// Fit windows; `None` means `0.5Γ/Δ²`, `2Γ/Δ²` and the end of the grid.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub early_end: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub late_start: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub late_end: Option<f64>,
    /// Upper end of the crossover-time search (default: end of grid).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tc_scan_max: Option<f64>,
    pub dump_hamiltonian: bool,
}

impl Default for AnalysisSpec {
    fn default() -> Self {
        Self {
            regime_threshold: 1.0,
            coupling_bin: None,
            dos_bins: 40,
            sf_bandwidth_spacings: 5.0,
            npc_bandwidth_spacings: 5.0,
            npc_states: 1,
            oscillation_points: 400,
            early_end: None,
            late_start: None,
            late_end: None,
            tc_scan_max: None,
            dump_hamiltonian: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Csv,
    Json,
    #[default]
    Both,
}

impl Format {
    pub fn csv(self) -> bool {
        matches!(self, Self::Csv | Self::Both)
    }

    pub fn json(self) -> bool {
        matches!(self, Self::Json | Self::Both)
    }
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            "both" => Ok(Self::Both),
            other => Err(format!(
                "unknown format {other:?} (expected csv, json or both)"
            )),
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Csv => "csv",
            Self::Json => "json",
            Self::Both => "both",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    #[serde(default)]
    pub format: Format,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub realizations: Option<u64>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
}

pub const DEFAULT_OUT_DIR: &str = "tbri-out";

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
        Self::from_toml(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<()> {
        if let Some(seed) = o.seed {
            self.model.seed = seed;
        }
        if let Some(r) = o.realizations {
            self.ensemble.realizations = r;
        }
        if let Some(dir) = &o.out {
            self.output.dir = Some(dir.clone());
        }
        if let Some(format) = o.format {
            self.output.format = format;
        }
        self.validate()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(CliError::Config(msg));
        self.model
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        if self.ensemble.realizations < 1 {
            return bad("ensemble.realizations must be >= 1".into());
        }
        let t = &self.times;
        let finite_pos = |x: f64| x.is_finite() && x > 0.0;
        if !(finite_pos(t.log_start)
            && t.log_stop > t.log_start
            && t.log_stop.is_finite()
            && t.log_points >= 2)
        {
            return bad(format!(
                "times: need 0 < log_start < log_stop and log_points >= 2 (got {}, {}, {})",
                t.log_start, t.log_stop, t.log_points
            ));
        }
        if !(t.saturation_start >= 0.0
            && t.saturation_stop > t.saturation_start
            && t.saturation_stop.is_finite())
            || t.saturation_points < 2
        {
            return bad(format!(
                "times: need 0 <= saturation_start < saturation_stop and saturation_points >= 2 (got {}, {}, {})",
                t.saturation_start, t.saturation_stop, t.saturation_points
            ));
        }
        let s = &self.initial_state;
        match (s.index, s.energy) {
            (Some(_), Some(_)) | (None, None) => {
                return bad("initial_state: give exactly one of `index` or `energy`".into());
            }
            (Some(_), None) if s.count != 1 => {
                return bad("initial_state: `count` applies to `energy` only".into())
            }
            (None, Some(EnergyTarget::Value(e))) if !e.is_finite() => {
                return bad("initial_state.energy must be finite".into())
            }
            _ => {}
        }
        if s.count < 1 {
            return bad("initial_state.count must be >= 1".into());
        }
        let a = &self.analysis;
        if !(a.regime_threshold > 0.0 && a.regime_threshold.is_finite()) {
            return bad("analysis.regime_threshold must be > 0".into());
        }
        if a.coupling_bin.is_some_and(|w| !finite_pos(w)) {
            return bad("analysis.coupling_bin must be > 0".into());
        }
        if a.dos_bins < 2 {
            return bad("analysis.dos_bins must be >= 2".into());
        }
        if !finite_pos(a.sf_bandwidth_spacings) || !finite_pos(a.npc_bandwidth_spacings) {
            return bad("analysis bandwidths must be > 0".into());
        }
        if a.oscillation_points != 0 && a.oscillation_points < 5 {
            return bad("analysis.oscillation_points must be 0 or >= 5".into());
        }
        for (name, v) in [
            ("early_end", a.early_end),
            ("late_start", a.late_start),
            ("late_end", a.late_end),
            ("tc_scan_max", a.tc_scan_max),
        ] {
            if v.is_some_and(|x| !finite_pos(x)) {
                return bad(format!("analysis.{name} must be > 0"));
            }
        }
        Ok(())
    }

    pub fn out_dir(&self) -> PathBuf {
        self.output
            .dir
            .clone()
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
    }

    /// The config as recorded in outputs: everything that affects the
    /// numbers, nothing about where they are written.
    pub fn recorded(&self) -> Self {
        let mut c = self.clone();
        c.output.dir = None;
        c
    }

    /// Canonical TOML of [`Self::recorded`].
    pub fn canonical_toml(&self) -> String {
        toml::to_string(&self.recorded()).expect("config serializes to TOML")
    }

    /// SHA-256 of the canonical TOML, as lowercase hex.
    pub fn hash(&self) -> String {
        sha256_hex(self.canonical_toml().as_bytes())
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "[model]\nn = 2\nm = 5\nv0 = 0.1\nseed = 3\n";

    #[test]
    fn defaults_fill_in() {
        let c = ExperimentConfig::from_toml(MINIMAL).unwrap();
        assert_eq!(c.ensemble.realizations, 1);
        assert_eq!(
            c.initial_state.energy,
            Some(EnergyTarget::Named(EnergyName::Center))
        );
        assert_eq!(c.output.format, Format::Both);
    }

    #[test]
    fn canonical_form_round_trips() {
        let text = format!(
            "{MINIMAL}[initial_state]\nenergy = 4.5\ncount = 3\n[analysis]\nlate_start = 2.0\n"
        );
        let c = ExperimentConfig::from_toml(&text).unwrap();
        let canon = c.canonical_toml();
        let again = ExperimentConfig::from_toml(&canon).unwrap();
        assert_eq!(again, c.recorded());
        assert_eq!(again.canonical_toml(), canon);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = ExperimentConfig::from_toml("[model]\nn = 2\nm = 5\nv0 = \"x\"\nseed = 1\n")
            .unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 4"), "{msg}");
        assert_eq!(err.exit_code(), 2);
        let err = ExperimentConfig::from_toml(&format!("{MINIMAL}[times]\nlog_pionts = 3\n"))
            .unwrap_err();
        assert!(err.to_string().contains("log_pionts"));
    }

    #[test]
    fn selector_must_be_unique() {
        let both = format!("{MINIMAL}[initial_state]\nindex = 1\nenergy = 2.0\n");
        assert!(ExperimentConfig::from_toml(&both).is_err());
        let neither = format!("{MINIMAL}[initial_state]\ncount = 2\n");
        assert!(ExperimentConfig::from_toml(&neither).is_err());
        let zero = MINIMAL.replace("[model]", "[ensemble]\nrealizations = 0\n[model]");
        assert!(ExperimentConfig::from_toml(&zero).is_err());
    }

    #[test]
    fn hash_ignores_output_location() {
        let mut a = ExperimentConfig::from_toml(MINIMAL).unwrap();
        let h = a.hash();
        a.output.dir = Some("elsewhere".into());
        assert_eq!(a.hash(), h);
        a.model.seed += 1;
        assert_ne!(a.hash(), h);
    }
}
