//! Source configuration: TOML in conventional units (nm, cm, mW), validated
//! on load, with `section.key=value` overrides, a canonical echo and a
//! SHA-256 hash that tags every artifact.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::biphoton::Calibration;
use crate::cavity::{CavitySpec, ModeIndex};
use crate::dispersion::{Axis, DispersionData};
use crate::error::{Error, Result};
use crate::phasematch::Geometry;
use crate::units::{cm_to_m, mw_to_w, nm_to_m};

/// Built-in Sellmeier data sets, addressable as `builtin:<name>`.
const BUILTIN_DISPERSION: &[(&str, &str)] =
    &[("ktp_kato2002", include_str!("../data/ktp_kato2002.toml"))];

/// Poling period: `"auto"` (designed for the pump and signal) or a value in nm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PolingPeriod {
    Auto,
    Nm(f64),
}

impl Serialize for PolingPeriod {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            PolingPeriod::Auto => s.serialize_str("auto"),
            PolingPeriod::Nm(v) => s.serialize_f64(*v),
        }
    }
}

impl<'de> Deserialize<'de> for PolingPeriod {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(PolingPeriod::Nm(v)),
            Raw::Text(t) if t == "auto" => Ok(PolingPeriod::Auto),
            Raw::Text(t) => Err(serde::de::Error::custom(format!(
                "expected \"auto\" or a period in nm, got \"{t}\""
            ))),
        }
    }
}

fn default_dispersion() -> String {
    "builtin:ktp_kato2002".into()
}

fn default_geometry() -> Geometry {
    Geometry::Backward
}

fn default_auto() -> ModeIndex {
    ModeIndex::Auto
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrystalConfig {
    #[serde(default = "default_dispersion")]
    pub dispersion: String,
    pub length_cm: f64,
    pub poling_period_nm: PolingPeriod,
    pub qpm_order: u32,
    pub pump_axis: Axis,
    pub signal_axis: Axis,
    pub idler_axis: Axis,
    #[serde(default = "default_geometry")]
    pub geometry: Geometry,
    /// design (and target) signal wavelength
    pub signal_wavelength_nm: f64,
    /// reserved; temperature-dependent dispersion is not modeled
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub temperature_c: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CavityConfig {
    /// defaults to the crystal length
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub length_cm: Option<f64>,
    pub reflectivity_signal: f64,
    pub reflectivity_idler: f64,
    #[serde(default)]
    pub loss_signal: f64,
    #[serde(default)]
    pub loss_idler: f64,
    #[serde(default = "default_auto")]
    pub mode_q: ModeIndex,
    #[serde(default = "default_auto")]
    pub mode_r: ModeIndex,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PumpConfig {
    pub wavelength_nm: f64,
    pub power_mw: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationConfig {
    /// pair rate per watt of pump at exact phase matching, 1/(s W)
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate_per_watt: Option<f64>,
    /// explicit |kappa1| in rad/s
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa1_rad_s: Option<f64>,
    /// pump power at which `kappa1_rad_s` holds; defaults to the pump power
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa1_reference_mw: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    /// spectrum half-window in units of max(Gamma)
    pub spectrum_half_width_gamma: f64,
    pub spectrum_points: usize,
    /// tau half-window in units of 1/min(Gamma)
    pub tau_half_width_gamma: f64,
    pub tau_points: usize,
    /// free-space spectrum half-window, cm^-1
    pub freespace_half_width_cm: f64,
    pub freespace_points: usize,
    /// add the constant R1^2 term to G2
    pub include_accidentals: bool,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            spectrum_half_width_gamma: 40.0,
            spectrum_points: 4001,
            tau_half_width_gamma: 5.0,
            tau_points: 2001,
            freespace_half_width_cm: 5.0,
            freespace_points: 4001,
            include_accidentals: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EventConfig {
    pub duration_s: f64,
    pub seed: u64,
    /// coincidence half-window in units of 1/min(Gamma)
    pub histogram_window_gamma: f64,
    pub histogram_bins: usize,
    /// reserved; detectors are ideal
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detector_efficiency: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dark_count_rate: Option<f64>,
}

impl Default for EventConfig {
    fn default() -> Self {
        EventConfig {
            duration_s: 1.0,
            seed: 1,
            histogram_window_gamma: 10.0,
            histogram_bins: 200,
            detector_efficiency: None,
            dark_count_rate: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Svg,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub directory: String,
    pub formats: Vec<Format>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            directory: "out".into(),
            formats: vec![Format::Csv, Format::Svg],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceConfig {
    pub crystal: CrystalConfig,
    pub cavity: CavityConfig,
    pub pump: PumpConfig,
    #[serde(default)]
    pub calibration: CalibrationConfig,
    #[serde(default)]
    pub grids: GridConfig,
    #[serde(default)]
    pub events: EventConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} must be positive and finite, got {v}")))
    }
}

impl SourceConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: SourceConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let c = &self.crystal;
        if c.temperature_c.is_some() {
            return Err(Error::Unsupported(
                "crystal.temperature_c: temperature-dependent dispersion is not modeled".into(),
            ));
        }
        if self.events.detector_efficiency.is_some() || self.events.dark_count_rate.is_some() {
            return Err(Error::Unsupported("detector modeling is not implemented".into()));
        }
        positive("crystal.length_cm", c.length_cm)?;
        positive("crystal.signal_wavelength_nm", c.signal_wavelength_nm)?;
        if let PolingPeriod::Nm(v) = c.poling_period_nm {
            positive("crystal.poling_period_nm", v)?;
        }
        if c.qpm_order == 0 {
            return Err(Error::Config("crystal.qpm_order must be >= 1".into()));
        }
        positive("pump.wavelength_nm", self.pump.wavelength_nm)?;
        if !(self.pump.power_mw >= 0.0 && self.pump.power_mw.is_finite()) {
            return Err(Error::Config(format!("pump.power_mw must be >= 0, got {}", self.pump.power_mw)));
        }
        if self.pump.wavelength_nm >= c.signal_wavelength_nm {
            return Err(Error::Config("signal wavelength must be longer than the pump".into()));
        }
        if let Some(l) = self.cavity.length_cm {
            positive("cavity.length_cm", l)?;
        }
        self.cavity_spec()
            .validate()
            .map_err(|e| Error::Config(e.to_string()))?;
        let cal = &self.calibration;
        if cal.rate_per_watt.is_some() && cal.kappa1_rad_s.is_some() {
            return Err(Error::Config(
                "calibration: give either rate_per_watt or kappa1_rad_s, not both".into(),
            ));
        }
        if cal.kappa1_reference_mw.is_some() && cal.kappa1_rad_s.is_none() {
            return Err(Error::Config("calibration.kappa1_reference_mw needs kappa1_rad_s".into()));
        }
        for (name, v) in [
            ("calibration.rate_per_watt", cal.rate_per_watt),
            ("calibration.kappa1_reference_mw", cal.kappa1_reference_mw),
        ] {
            if let Some(v) = v {
                positive(name, v)?;
            }
        }
        if let Some(k) = cal.kappa1_rad_s {
            if !(k >= 0.0 && k.is_finite()) {
                return Err(Error::Config(format!("calibration.kappa1_rad_s must be >= 0, got {k}")));
            }
        }
        let g = &self.grids;
        positive("grids.spectrum_half_width_gamma", g.spectrum_half_width_gamma)?;
        positive("grids.tau_half_width_gamma", g.tau_half_width_gamma)?;
        positive("grids.freespace_half_width_cm", g.freespace_half_width_cm)?;
        for (name, n) in [
            ("grids.spectrum_points", g.spectrum_points),
            ("grids.tau_points", g.tau_points),
            ("grids.freespace_points", g.freespace_points),
        ] {
            if n < 11 {
                return Err(Error::Config(format!("{name} must be at least 11, got {n}")));
            }
        }
        positive("events.duration_s", self.events.duration_s)?;
        positive("events.histogram_window_gamma", self.events.histogram_window_gamma)?;
        if self.events.histogram_bins < 10 {
            return Err(Error::Config("events.histogram_bins must be at least 10".into()));
        }
        Ok(())
    }

    pub fn crystal_length(&self) -> f64 {
        cm_to_m(self.crystal.length_cm)
    }

    pub fn cavity_spec(&self) -> CavitySpec {
        let c = &self.cavity;
        CavitySpec {
            length: cm_to_m(c.length_cm.unwrap_or(self.crystal.length_cm)),
            reflectivity_signal: c.reflectivity_signal,
            reflectivity_idler: c.reflectivity_idler,
            loss_signal: c.loss_signal,
            loss_idler: c.loss_idler,
            mode_q: c.mode_q,
            mode_r: c.mode_r,
        }
    }

    pub fn pump_wavelength(&self) -> f64 {
        nm_to_m(self.pump.wavelength_nm)
    }

    pub fn signal_wavelength(&self) -> f64 {
        nm_to_m(self.crystal.signal_wavelength_nm)
    }

    pub fn pump_power(&self) -> f64 {
        mw_to_w(self.pump.power_mw)
    }

    pub fn poling_period(&self) -> Option<f64> {
        match self.crystal.poling_period_nm {
            PolingPeriod::Auto => None,
            PolingPeriod::Nm(v) => Some(nm_to_m(v)),
        }
    }

    pub fn calibration(&self) -> Option<Calibration> {
        let c = &self.calibration;
        if let Some(rho) = c.rate_per_watt {
            return Some(Calibration::RatePerWatt(rho));
        }
        c.kappa1_rad_s.map(|kappa1| Calibration::Kappa1 {
            kappa1,
            reference_power: mw_to_w(c.kappa1_reference_mw.unwrap_or(self.pump.power_mw)),
        })
    }

    /// Canonical TOML text; equal configs give equal text.
    pub fn canonical(&self) -> String {
        toml::to_string(self).expect("config is always serializable")
    }

    /// Hex SHA-256 of the canonical text.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical().as_bytes()))
    }

    /// Canonical text as `# `-prefixed comment lines.
    pub fn echo(&self) -> String {
        self.canonical()
            .lines()
            .map(|l| if l.is_empty() { "#".to_string() } else { format!("# {l}") })
            .collect::<Vec<_>>()
            .join("\n")
    }

    /// Inverse of [`SourceConfig::echo`].
    pub fn from_echo(echo: &str) -> Result<Self> {
        let text: Vec<&str> = echo
            .lines()
            .filter_map(|l| l.strip_prefix("# ").or(if l == "#" { Some("") } else { None }))
            .collect();
        Self::parse(&text.join("\n"))
    }
}

/// Apply `a.b.c=value` to a TOML table. The value is read as a TOML literal
/// and falls back to a bare string.
pub fn apply_override(table: &mut toml::Table, assignment: &str) -> Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override \"{assignment}\" is not key=value")))?;
    let path: Vec<&str> = key.trim().split('.').collect();
    if path.iter().any(|p| p.is_empty()) {
        return Err(Error::Config(format!("override key \"{key}\" is malformed")));
    }
    let raw = raw.trim();
    let value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    let (last, parents) = path.split_last().expect("path is non-empty");
    let mut node = table;
    for p in parents {
        node = node
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("override key \"{key}\": {p} is not a section")))?;
    }
    node.insert(last.to_string(), value);
    Ok(())
}

/// A validated configuration with its dispersion data resolved.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: SourceConfig,
    pub dispersion: DispersionData,
    pub hash: String,
    pub source: Option<PathBuf>,
}

impl LoadedConfig {
    pub fn from_text(text: &str, base_dir: &Path, overrides: &[String]) -> Result<Self> {
        let mut table: toml::Table = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let config: SourceConfig = table
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        config.validate()?;
        let dispersion = resolve_dispersion(&config.crystal.dispersion, base_dir)?;
        Ok(LoadedConfig {
            hash: config.hash(),
            config,
            dispersion,
            source: None,
        })
    }

    pub fn load(path: impl AsRef<Path>, overrides: &[String]) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        let mut loaded = Self::from_text(&text, base, overrides)?;
        loaded.source = Some(path.to_path_buf());
        Ok(loaded)
    }
}

/// `builtin:<name>` or a path relative to the config file.
pub fn resolve_dispersion(reference: &str, base_dir: &Path) -> Result<DispersionData> {
    if let Some(name) = reference.strip_prefix("builtin:") {
        let (_, text) = BUILTIN_DISPERSION
            .iter()
            .find(|(n, _)| *n == name)
            .ok_or_else(|| Error::Config(format!("unknown built-in dispersion data \"{name}\"")))?;
        return DispersionData::parse(text);
    }
    let path = base_dir.join(reference);
    if !path.is_file() {
        return Err(Error::Config(format!("dispersion file {} not found", path.display())));
    }
    DispersionData::load(&path).map_err(|e| match e {
        Error::Io { .. } => Error::Config(e.to_string()),
        other => other,
    })
}
