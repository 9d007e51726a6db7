//! Scan configuration: a line-oriented `key = value` format with `[section]`
//! headers, parsed into validated, fully resolved run descriptions.
//!
//! The same grammar serves three purposes: run configuration on disk, the
//! parameter echo embedded in every CSV header, and the round trip between
//! the two — parsing the header of an output file reconstructs the exact
//! configuration that produced it ([`ScanConfig::canonical`] /
//! [`ScanConfig::from_echo`]).
//!
//! Grammar: `#` starts a comment anywhere; blank lines are ignored;
//! `[section]` opens a section; `key = value` assigns within the current
//! section. Unknown sections or keys, duplicate keys, and malformed values
//! are rejected with the offending line number. Relative paths are resolved
//! against the directory containing the configuration file.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use otima::grating::CoefficientModel;
use otima::interferometer::DetectionMode;
use otima::{Error, Result};

/// Known sections and the keys each accepts; anything else is a typo and is
/// rejected with its line number.
const SCHEMA: &[(&str, &[&str])] = &[
    ("scenario", &["name"]),
    (
        "particle",
        &[
            "material",
            "materials_db",
            "mass_amu",
            "velocity_m_s",
            "beta",
        ],
    ),
    (
        "laser",
        &[
            "wavelength_nm",
            "profile",
            "waist_y_m",
            "waist_z_m",
            "area_m2",
        ],
    ),
    ("pulses", &["n0", "energy_mj", "scattering"]),
    (
        "sequence",
        &[
            "delay_over_tt",
            "delay_s",
            "multiple",
            "tau_s",
            "acceleration_m_s2",
        ],
    ),
    ("ensemble", &["velocity_spread_m_s", "cloud_extension_m"]),
    ("scan", &["axis", "unit", "start", "stop", "points"]),
    ("output", &["models", "modes", "path"]),
    ("verify", &["level", "samples"]),
];

/// One `key = value` assignment with its provenance.
#[derive(Debug, Clone)]
struct Entry {
    section: String,
    key: String,
    value: String,
    line: usize,
}

/// Parsed but untyped configuration text.
#[derive(Debug, Clone)]
pub struct RawConfig {
    entries: Vec<Entry>,
    label: String,
    base_dir: PathBuf,
}

impl RawConfig {
    /// Parses configuration text. `label` names the source in diagnostics;
    /// `base_dir` anchors relative paths.
    pub fn parse(text: &str, label: &str, base_dir: &Path) -> Result<Self> {
        let mut entries: Vec<Entry> = Vec::new();
        let mut section: Option<String> = None;
        for (idx, raw) in text.lines().enumerate() {
            let lineno = idx + 1;
            let line = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            };
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let name = name.strip_suffix(']').ok_or_else(|| {
                    Error::parse(label, lineno, "section header must end with ']'")
                })?;
                let name = name.trim();
                if !SCHEMA.iter().any(|(s, _)| *s == name) {
                    return Err(Error::parse(
                        label,
                        lineno,
                        format!(
                            "unknown section [{name}]; known sections: {}",
                            SCHEMA
                                .iter()
                                .map(|(s, _)| format!("[{s}]"))
                                .collect::<Vec<_>>()
                                .join(", ")
                        ),
                    ));
                }
                section = Some(name.to_string());
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::parse(
                    label,
                    lineno,
                    format!("expected 'key = value' or '[section]', got '{line}'"),
                )
            })?;
            let key = key.trim();
            let value = value.trim();
            let section = section.clone().ok_or_else(|| {
                Error::parse(
                    label,
                    lineno,
                    format!("key '{key}' appears before any [section]"),
                )
            })?;
            let allowed = SCHEMA
                .iter()
                .find(|(s, _)| *s == section)
                .map(|(_, keys)| *keys)
                .unwrap_or(&[]);
            if !allowed.contains(&key) {
                return Err(Error::parse(
                    label,
                    lineno,
                    format!(
                        "unknown key '{key}' in [{section}]; allowed: {}",
                        allowed.join(", ")
                    ),
                ));
            }
            if value.is_empty() {
                return Err(Error::parse(
                    label,
                    lineno,
                    format!("key '{key}' has an empty value"),
                ));
            }
            if entries.iter().any(|e| e.section == section && e.key == key) {
                return Err(Error::parse(
                    label,
                    lineno,
                    format!("duplicate key '{key}' in [{section}]"),
                ));
            }
            entries.push(Entry {
                section,
                key: key.to_string(),
                value: value.to_string(),
                line: lineno,
            });
        }
        Ok(RawConfig {
            entries,
            label: label.to_string(),
            base_dir: base_dir.to_path_buf(),
        })
    }

    /// Reads and parses a configuration file; relative paths inside it are
    /// resolved against the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Self::parse(&text, &path.display().to_string(), base)
    }

    fn entry(&self, section: &str, key: &str) -> Option<&Entry> {
        self.entries
            .iter()
            .find(|e| e.section == section && e.key == key)
    }

    fn str(&self, section: &str, key: &str) -> Option<&str> {
        self.entry(section, key).map(|e| e.value.as_str())
    }

    fn f64(&self, section: &str, key: &str) -> Result<Option<f64>> {
        match self.entry(section, key) {
            None => Ok(None),
            Some(e) => e.value.parse::<f64>().map(Some).map_err(|_| {
                Error::parse(
                    &self.label,
                    e.line,
                    format!("invalid number '{}' for {key}", e.value),
                )
            }),
        }
    }

    fn integer<T: std::str::FromStr>(&self, section: &str, key: &str) -> Result<Option<T>> {
        match self.entry(section, key) {
            None => Ok(None),
            Some(e) => e.value.parse::<T>().map(Some).map_err(|_| {
                Error::parse(
                    &self.label,
                    e.line,
                    format!("invalid integer '{}' for {key}", e.value),
                )
            }),
        }
    }

    fn path(&self, section: &str, key: &str) -> Option<PathBuf> {
        self.str(section, key).map(|s| self.base_dir.join(s))
    }

    fn missing(&self, section: &str, key: &str) -> Error {
        Error::Domain(format!(
            "config {}: missing required key '{key}' in [{section}]",
            self.label
        ))
    }

    fn value_error(&self, section: &str, key: &str, msg: impl std::fmt::Display) -> Error {
        match self.entry(section, key) {
            Some(e) => Error::parse(&self.label, e.line, format!("{key}: {msg}")),
            None => Error::Domain(format!("config {}: [{section}] {key}: {msg}", self.label)),
        }
    }
}

/// Fringe model requested for a scan column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Model {
    /// Coherent wave evolution.
    Quantum,
    /// Classical trajectories through the same gratings.
    Classical,
    /// Coherent evolution with the elastic-scattering kernel applied.
    Decohered,
}

impl Model {
    /// Stable lowercase name used in configs, flags, and column headers.
    pub fn name(self) -> &'static str {
        match self {
            Model::Quantum => "quantum",
            Model::Classical => "classical",
            Model::Decohered => "decohered",
        }
    }

    /// The library-side coefficient model.
    pub fn coefficient_model(self) -> CoefficientModel {
        match self {
            Model::Quantum => CoefficientModel::Quantum,
            Model::Classical => CoefficientModel::Classical,
            Model::Decohered => CoefficientModel::Decohered,
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "quantum" => Some(Model::Quantum),
            "classical" => Some(Model::Classical),
            "decohered" => Some(Model::Decohered),
            _ => None,
        }
    }
}

impl std::str::FromStr for Model {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Model::parse(s).ok_or_else(|| {
            format!("unknown model '{s}' (expected quantum, classical, or decohered)")
        })
    }
}

/// Third-pulse readout requested for a scan column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Mode {
    /// Count surviving neutrals.
    Neutral,
    /// Count the ions produced by the third pulse.
    Inverse,
}

impl Mode {
    /// Stable lowercase name used in configs and column headers.
    pub fn name(self) -> &'static str {
        match self {
            Mode::Neutral => "neutral",
            Mode::Inverse => "inverse",
        }
    }

    /// The library-side detection mode.
    pub fn detection_mode(self) -> DetectionMode {
        match self {
            Mode::Neutral => DetectionMode::Neutral,
            Mode::Inverse => DetectionMode::Inverse,
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "neutral" => Some(Mode::Neutral),
            "inverse" => Some(Mode::Inverse),
            _ => None,
        }
    }
}

/// Independent variable of a scan; exactly one per run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    /// Pulse separation T.
    Delay,
    /// Detuning τ of the second separation at fixed T.
    Tau,
    /// Photon number n₀ of the second pulse.
    Power2,
    /// Photon number n₀ of the third pulse.
    Power3,
    /// Detector (third-grating) offset x_S in units of the period.
    Signal,
}

impl Axis {
    /// Stable lowercase name used in configs and diagnostics.
    pub fn name(self) -> &'static str {
        match self {
            Axis::Delay => "delay",
            Axis::Tau => "tau",
            Axis::Power2 => "power2",
            Axis::Power3 => "power3",
            Axis::Signal => "signal",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "delay" => Some(Axis::Delay),
            "tau" => Some(Axis::Tau),
            "power2" => Some(Axis::Power2),
            "power3" => Some(Axis::Power3),
            "signal" => Some(Axis::Signal),
            _ => None,
        }
    }

    fn default_points(self) -> usize {
        match self {
            Axis::Delay | Axis::Tau => 300,
            Axis::Power2 | Axis::Power3 => 200,
            Axis::Signal => 256,
        }
    }
}

/// Unit of the delay axis and of a fixed `delay` value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DelayUnit {
    /// Multiples of the Talbot time.
    Talbot,
    /// Seconds.
    Seconds,
}

/// Fixed pulse separation, as given in the configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Delay {
    /// In multiples of the Talbot time.
    Talbot(f64),
    /// In seconds.
    Seconds(f64),
}

/// Transverse beam profile of the grating laser.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Profile {
    /// Gaussian with 1/e² intensity waists (m) along the two transverse
    /// directions.
    Gaussian {
        /// Waist along y (m).
        waist_y_m: f64,
        /// Waist along z (m).
        waist_z_m: f64,
    },
    /// Flat-top over an illuminated area (m²).
    FlatTop {
        /// Illuminated area (m²).
        area_m2: f64,
    },
}

/// One pulse-strength slot: a fixed value or the scan axis placeholder.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PowerValue {
    /// Fixed value.
    Fixed(f64),
    /// Supplied by the scan axis (`scan` in the config).
    Scan,
}

/// How the three pulse strengths are specified.
#[derive(Debug, Clone, PartialEq)]
pub enum PulseInput {
    /// Directly as peak absorbed-photon numbers n₀.
    PhotonNumbers([PowerValue; 3]),
    /// As pulse energies in millijoules; n₀ follows from the material's
    /// absorption cross-section and the beam profile.
    EnergiesMj([PowerValue; 3]),
}

/// Whether elastic Rayleigh scattering is folded into the pulses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scattering {
    /// Ignore elastic scattering (n_R = 0).
    None,
    /// Derive n_R = n₀·σ_R/σ_abs from the material record for every pulse.
    Auto,
}

/// Axis description of a scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanSpec {
    /// Independent variable.
    pub axis: Axis,
    /// Unit of the delay axis (ignored for other axes).
    pub unit: DelayUnit,
    /// First axis value.
    pub start: f64,
    /// Last axis value (exclusive of nothing; the grid includes both ends).
    pub stop: f64,
    /// Number of grid points (≥ 2, evenly spaced).
    pub points: usize,
}

impl ScanSpec {
    /// Axis value of grid point `i` (0-based).
    pub fn value(&self, i: usize) -> f64 {
        self.start + (self.stop - self.start) * i as f64 / (self.points - 1) as f64
    }
}

/// A fully validated scan description: every key resolved, defaults applied.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanConfig {
    /// Scenario name (free text, echoed into outputs).
    pub scenario: String,
    /// Material name, resolved against the database.
    pub material: String,
    /// Material database path (resolved).
    pub materials_db: PathBuf,
    /// Particle mass in atomic mass units.
    pub mass_amu: f64,
    /// Optional override of the material's β = n₀/(2φ₀) ratio.
    pub beta_override: Option<f64>,
    /// Optional forward velocity (m/s), used only by the material report.
    pub velocity_m_s: Option<f64>,
    /// Grating laser wavelength (nm); the period is half of it.
    pub wavelength_nm: f64,
    /// Transverse beam profile (used when pulses are given as energies).
    pub profile: Profile,
    /// Pulse strengths for the three gratings.
    pub pulses: PulseInput,
    /// Elastic-scattering treatment.
    pub scattering: Scattering,
    /// Fixed pulse separation; `None` exactly when the axis is `delay`.
    pub delay: Option<Delay>,
    /// Integer delay ratio N ≥ 1 (second separation N·T + τ).
    pub multiple: u32,
    /// Fixed detuning τ (s); `None` exactly when the axis is `tau`.
    pub tau_s: Option<f64>,
    /// Constant acceleration along the grating vector (m/s²).
    pub acceleration_m_s2: f64,
    /// Transverse velocity spread Δv (m/s).
    pub velocity_spread_m_s: f64,
    /// Cloud extension Δx (m).
    pub cloud_extension_m: f64,
    /// The scan axis.
    pub scan: ScanSpec,
    /// Requested fringe models, deduplicated, in canonical order.
    pub models: Vec<Model>,
    /// Requested readout modes, deduplicated, in canonical order.
    pub modes: Vec<Mode>,
    /// Output path from the configuration (the `--out` flag overrides it).
    pub out_path: Option<PathBuf>,
}

impl ScanConfig {
    /// Loads and validates a scan configuration file.
    pub fn load(path: &Path) -> Result<Self> {
        Self::from_raw(&RawConfig::load(path)?)
    }

    /// Parses and validates configuration text.
    pub fn parse_text(text: &str, label: &str, base_dir: &Path) -> Result<Self> {
        Self::from_raw(&RawConfig::parse(text, label, base_dir)?)
    }

    /// Validates a parsed configuration and applies defaults.
    pub fn from_raw(raw: &RawConfig) -> Result<Self> {
        let scenario = raw
            .str("scenario", "name")
            .ok_or_else(|| raw.missing("scenario", "name"))?
            .to_string();

        let particle = parse_particle(raw)?;
        let (wavelength_nm, profile) = parse_laser(raw)?;

        let pulses = parse_pulses(raw)?;
        let scattering = match raw.str("pulses", "scattering") {
            None | Some("none") => Scattering::None,
            Some("auto") => Scattering::Auto,
            Some(other) => {
                return Err(raw.value_error(
                    "pulses",
                    "scattering",
                    format!("expected 'none' or 'auto', got '{other}'"),
                ));
            }
        };

        let scan = parse_scan(raw)?;

        // Pulse-strength slots must match the axis: power axes scan one slot,
        // every other axis fixes all three.
        let slots = match &pulses {
            PulseInput::PhotonNumbers(v) | PulseInput::EnergiesMj(v) => *v,
        };
        let scanned_slot = match scan.axis {
            Axis::Power2 => Some(1),
            Axis::Power3 => Some(2),
            _ => None,
        };
        for (i, slot) in slots.iter().enumerate() {
            match (scanned_slot == Some(i), slot) {
                (true, PowerValue::Fixed(_)) => {
                    return Err(raw.value_error(
                        "pulses",
                        pulse_key(&pulses),
                        format!("pulse {} is the scan axis; write 'scan' in its slot", i + 1),
                    ));
                }
                (false, PowerValue::Scan) => {
                    return Err(raw.value_error(
                        "pulses",
                        pulse_key(&pulses),
                        format!(
                            "pulse {} says 'scan' but the scan axis is {}",
                            i + 1,
                            scan.axis.name()
                        ),
                    ));
                }
                _ => {}
            }
        }

        let delay = parse_delay(raw, scan.axis)?;
        let multiple = raw.integer::<u32>("sequence", "multiple")?.unwrap_or(1);
        if multiple < 1 {
            return Err(raw.value_error("sequence", "multiple", "must be at least 1"));
        }
        let tau_s = match (scan.axis, raw.f64("sequence", "tau_s")?) {
            (Axis::Tau, Some(_)) => {
                return Err(raw.value_error(
                    "sequence",
                    "tau_s",
                    "the tau axis supplies the detuning; remove this key",
                ));
            }
            (Axis::Tau, None) => None,
            (_, given) => Some(given.unwrap_or(0.0)),
        };
        let acceleration_m_s2 = raw.f64("sequence", "acceleration_m_s2")?.unwrap_or(0.0);
        if !acceleration_m_s2.is_finite() {
            return Err(raw.value_error("sequence", "acceleration_m_s2", "must be finite"));
        }

        let velocity_spread_m_s = raw.f64("ensemble", "velocity_spread_m_s")?.unwrap_or(1e-6);
        if !(velocity_spread_m_s > 0.0) || !velocity_spread_m_s.is_finite() {
            return Err(raw.value_error(
                "ensemble",
                "velocity_spread_m_s",
                "must be positive (use a small value such as 1e-6 for a cold ensemble)",
            ));
        }
        let cloud_extension_m = raw.f64("ensemble", "cloud_extension_m")?.unwrap_or(1e-3);
        if !(cloud_extension_m > 0.0) || !cloud_extension_m.is_finite() {
            return Err(raw.value_error("ensemble", "cloud_extension_m", "must be positive"));
        }

        let models = parse_models(raw)?;
        let modes = parse_modes(raw, scan.axis)?;
        let out_path = raw.path("output", "path");

        Ok(ScanConfig {
            scenario,
            material: particle.material,
            materials_db: particle.materials_db,
            mass_amu: particle.mass_amu,
            beta_override: particle.beta_override,
            velocity_m_s: particle.velocity_m_s,
            wavelength_nm,
            profile,
            pulses,
            scattering,
            delay,
            multiple,
            tau_s,
            acceleration_m_s2,
            velocity_spread_m_s,
            cloud_extension_m,
            scan,
            models,
            modes,
            out_path,
        })
    }

    /// Canonical serialization: a complete configuration (defaults included)
    /// that parses back, via [`ScanConfig::parse_text`], to a value equal to
    /// `self`. This is what scan outputs embed in their header.
    pub fn canonical(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "[scenario]");
        let _ = writeln!(s, "name = {}", self.scenario);
        let _ = writeln!(s, "[particle]");
        let _ = writeln!(s, "material = {}", self.material);
        let _ = writeln!(s, "materials_db = {}", self.materials_db.display());
        let _ = writeln!(s, "mass_amu = {}", self.mass_amu);
        if let Some(b) = self.beta_override {
            let _ = writeln!(s, "beta = {b}");
        }
        if let Some(v) = self.velocity_m_s {
            let _ = writeln!(s, "velocity_m_s = {v}");
        }
        let _ = writeln!(s, "[laser]");
        let _ = writeln!(s, "wavelength_nm = {}", self.wavelength_nm);
        match self.profile {
            Profile::Gaussian {
                waist_y_m,
                waist_z_m,
            } => {
                let _ = writeln!(s, "profile = gaussian");
                let _ = writeln!(s, "waist_y_m = {waist_y_m}");
                let _ = writeln!(s, "waist_z_m = {waist_z_m}");
            }
            Profile::FlatTop { area_m2 } => {
                let _ = writeln!(s, "profile = flat_top");
                let _ = writeln!(s, "area_m2 = {area_m2}");
            }
        }
        let _ = writeln!(s, "[pulses]");
        let (key, slots) = match &self.pulses {
            PulseInput::PhotonNumbers(v) => ("n0", v),
            PulseInput::EnergiesMj(v) => ("energy_mj", v),
        };
        let rendered: Vec<String> = slots
            .iter()
            .map(|p| match p {
                PowerValue::Fixed(x) => format!("{x}"),
                PowerValue::Scan => "scan".to_string(),
            })
            .collect();
        let _ = writeln!(s, "{key} = {}", rendered.join(", "));
        let _ = writeln!(
            s,
            "scattering = {}",
            match self.scattering {
                Scattering::None => "none",
                Scattering::Auto => "auto",
            }
        );
        let _ = writeln!(s, "[sequence]");
        match self.delay {
            Some(Delay::Talbot(x)) => {
                let _ = writeln!(s, "delay_over_tt = {x}");
            }
            Some(Delay::Seconds(x)) => {
                let _ = writeln!(s, "delay_s = {x}");
            }
            None => {}
        }
        let _ = writeln!(s, "multiple = {}", self.multiple);
        if let Some(tau) = self.tau_s {
            let _ = writeln!(s, "tau_s = {tau}");
        }
        let _ = writeln!(s, "acceleration_m_s2 = {}", self.acceleration_m_s2);
        let _ = writeln!(s, "[ensemble]");
        let _ = writeln!(s, "velocity_spread_m_s = {}", self.velocity_spread_m_s);
        let _ = writeln!(s, "cloud_extension_m = {}", self.cloud_extension_m);
        let _ = writeln!(s, "[scan]");
        let _ = writeln!(s, "axis = {}", self.scan.axis.name());
        if self.scan.axis == Axis::Delay {
            let _ = writeln!(
                s,
                "unit = {}",
                match self.scan.unit {
                    DelayUnit::Talbot => "talbot",
                    DelayUnit::Seconds => "seconds",
                }
            );
        }
        let _ = writeln!(s, "start = {}", self.scan.start);
        let _ = writeln!(s, "stop = {}", self.scan.stop);
        let _ = writeln!(s, "points = {}", self.scan.points);
        let _ = writeln!(s, "[output]");
        let _ = writeln!(
            s,
            "models = {}",
            self.models
                .iter()
                .map(|m| m.name())
                .collect::<Vec<_>>()
                .join(", ")
        );
        let _ = writeln!(
            s,
            "modes = {}",
            self.modes
                .iter()
                .map(|m| m.name())
                .collect::<Vec<_>>()
                .join(", ")
        );
        if let Some(p) = &self.out_path {
            let _ = writeln!(s, "path = {}", p.display());
        }
        s
    }

    /// Reconstructs the configuration from the `# config:` block embedded in
    /// a scan output, undoing [`ScanConfig::canonical`].
    pub fn from_echo(output: &str) -> Result<Self> {
        let mut block = String::new();
        let mut inside = false;
        for line in output.lines() {
            if line == "# config:" {
                inside = true;
                continue;
            }
            if line == "# end config" {
                break;
            }
            if inside {
                let content = line.strip_prefix("# ").or_else(|| line.strip_prefix('#'));
                match content {
                    Some(c) => {
                        block.push_str(c);
                        block.push('\n');
                    }
                    None => {
                        return Err(Error::Domain(
                            "malformed parameter echo: config block line lacks '# ' prefix".into(),
                        ));
                    }
                }
            }
        }
        if block.is_empty() {
            return Err(Error::Domain(
                "no '# config:' parameter echo found in the output header".into(),
            ));
        }
        Self::parse_text(&block, "<parameter echo>", Path::new("."))
    }

    /// Restricts the run to a single model (the `--model` flag).
    pub fn restrict_model(&mut self, model: Model) {
        self.models = vec![model];
    }
}

fn pulse_key(p: &PulseInput) -> &'static str {
    match p {
        PulseInput::PhotonNumbers(_) => "n0",
        PulseInput::EnergiesMj(_) => "energy_mj",
    }
}

fn parse_profile(raw: &RawConfig) -> Result<Profile> {
    let kind = raw.str("laser", "profile").unwrap_or("gaussian");
    match kind {
        "gaussian" => {
            if raw.entry("laser", "area_m2").is_some() {
                return Err(raw.value_error(
                    "laser",
                    "area_m2",
                    "only applies to profile = flat_top",
                ));
            }
            let waist_y_m = raw.f64("laser", "waist_y_m")?.unwrap_or(1e-3);
            let waist_z_m = raw.f64("laser", "waist_z_m")?.unwrap_or(20e-6);
            if !(waist_y_m > 0.0) || !(waist_z_m > 0.0) {
                return Err(raw.value_error("laser", "waist_y_m", "waists must be positive"));
            }
            Ok(Profile::Gaussian {
                waist_y_m,
                waist_z_m,
            })
        }
        "flat_top" => {
            for key in ["waist_y_m", "waist_z_m"] {
                if raw.entry("laser", key).is_some() {
                    return Err(raw.value_error(
                        "laser",
                        key,
                        "only applies to profile = gaussian",
                    ));
                }
            }
            let area_m2 = raw
                .f64("laser", "area_m2")?
                .ok_or_else(|| raw.missing("laser", "area_m2"))?;
            if !(area_m2 > 0.0) {
                return Err(raw.value_error("laser", "area_m2", "must be positive"));
            }
            Ok(Profile::FlatTop { area_m2 })
        }
        other => Err(raw.value_error(
            "laser",
            "profile",
            format!("expected 'gaussian' or 'flat_top', got '{other}'"),
        )),
    }
}

fn parse_power_list(raw: &RawConfig, key: &str) -> Result<[PowerValue; 3]> {
    let text = raw.str("pulses", key).expect("caller checked presence");
    let tokens: Vec<&str> = text.split(',').map(str::trim).collect();
    if tokens.len() != 3 {
        return Err(raw.value_error(
            "pulses",
            key,
            format!(
                "expected exactly 3 comma-separated values, got {}",
                tokens.len()
            ),
        ));
    }
    let mut out = [PowerValue::Fixed(0.0); 3];
    for (i, tok) in tokens.iter().enumerate() {
        out[i] = if *tok == "scan" {
            PowerValue::Scan
        } else {
            let x: f64 = tok.parse().map_err(|_| {
                raw.value_error(
                    "pulses",
                    key,
                    format!("slot {}: expected a number or 'scan', got '{tok}'", i + 1),
                )
            })?;
            if !(x >= 0.0) || !x.is_finite() {
                return Err(raw.value_error(
                    "pulses",
                    key,
                    format!("slot {}: must be finite and non-negative", i + 1),
                ));
            }
            PowerValue::Fixed(x)
        };
    }
    Ok(out)
}

fn parse_pulses(raw: &RawConfig) -> Result<PulseInput> {
    match (raw.entry("pulses", "n0"), raw.entry("pulses", "energy_mj")) {
        (Some(_), Some(e)) => Err(Error::parse(
            &raw.label,
            e.line,
            "give either n0 or energy_mj, not both",
        )),
        (Some(_), None) => Ok(PulseInput::PhotonNumbers(parse_power_list(raw, "n0")?)),
        (None, Some(_)) => Ok(PulseInput::EnergiesMj(parse_power_list(raw, "energy_mj")?)),
        (None, None) => Err(raw.missing("pulses", "n0")),
    }
}

fn parse_scan(raw: &RawConfig) -> Result<ScanSpec> {
    let axis_str = raw
        .str("scan", "axis")
        .ok_or_else(|| raw.missing("scan", "axis"))?;
    let axis = Axis::parse(axis_str).ok_or_else(|| {
        raw.value_error(
            "scan",
            "axis",
            format!("expected delay, tau, power2, power3, or signal; got '{axis_str}'"),
        )
    })?;
    let unit_str = raw.str("scan", "unit");
    let unit = if axis == Axis::Delay {
        match unit_str {
            None | Some("talbot") => DelayUnit::Talbot,
            Some("seconds") => DelayUnit::Seconds,
            Some(other) => {
                return Err(raw.value_error(
                    "scan",
                    "unit",
                    format!("expected 'talbot' or 'seconds', got '{other}'"),
                ));
            }
        }
    } else {
        if unit_str.is_some() {
            return Err(raw.value_error("scan", "unit", "only applies to the delay axis"));
        }
        DelayUnit::Talbot
    };
    let start = raw
        .f64("scan", "start")?
        .ok_or_else(|| raw.missing("scan", "start"))?;
    let stop = raw
        .f64("scan", "stop")?
        .ok_or_else(|| raw.missing("scan", "stop"))?;
    if !start.is_finite() || !stop.is_finite() || !(start < stop) {
        return Err(raw.value_error("scan", "start", "scan range needs finite start < stop"));
    }
    match axis {
        Axis::Delay => {
            if !(start > 0.0) {
                return Err(raw.value_error("scan", "start", "delays must be positive"));
            }
        }
        Axis::Power2 | Axis::Power3 => {
            if !(start >= 0.0) {
                return Err(raw.value_error("scan", "start", "powers must be non-negative"));
            }
        }
        Axis::Tau | Axis::Signal => {}
    }
    let points = raw
        .integer::<usize>("scan", "points")?
        .unwrap_or(axis.default_points());
    if points < 2 {
        return Err(raw.value_error("scan", "points", "need at least 2 grid points"));
    }
    Ok(ScanSpec {
        axis,
        unit,
        start,
        stop,
        points,
    })
}

/// Shared `[particle]` keys.
struct ParticleKeys {
    material: String,
    materials_db: PathBuf,
    mass_amu: f64,
    beta_override: Option<f64>,
    velocity_m_s: Option<f64>,
}

fn parse_particle(raw: &RawConfig) -> Result<ParticleKeys> {
    let material = raw
        .str("particle", "material")
        .ok_or_else(|| raw.missing("particle", "material"))?
        .to_string();
    let materials_db = raw
        .path("particle", "materials_db")
        .ok_or_else(|| raw.missing("particle", "materials_db"))?;
    let mass_amu = raw
        .f64("particle", "mass_amu")?
        .ok_or_else(|| raw.missing("particle", "mass_amu"))?;
    if !(mass_amu > 0.0) || !mass_amu.is_finite() {
        return Err(raw.value_error("particle", "mass_amu", "must be positive and finite"));
    }
    let beta_override = raw.f64("particle", "beta")?;
    if let Some(b) = beta_override {
        if b == 0.0 || !b.is_finite() {
            return Err(raw.value_error(
                "particle",
                "beta",
                "must be finite and nonzero (sets the dipole phase via phi0 = n0/(2 beta))",
            ));
        }
    }
    let velocity_m_s = raw.f64("particle", "velocity_m_s")?;
    if let Some(v) = velocity_m_s {
        if !(v > 0.0) || !v.is_finite() {
            return Err(raw.value_error("particle", "velocity_m_s", "must be positive"));
        }
    }
    Ok(ParticleKeys {
        material,
        materials_db,
        mass_amu,
        beta_override,
        velocity_m_s,
    })
}

fn parse_laser(raw: &RawConfig) -> Result<(f64, Profile)> {
    let wavelength_nm = raw
        .f64("laser", "wavelength_nm")?
        .ok_or_else(|| raw.missing("laser", "wavelength_nm"))?;
    if !(wavelength_nm > 0.0) || !wavelength_nm.is_finite() {
        return Err(raw.value_error("laser", "wavelength_nm", "must be positive"));
    }
    Ok((wavelength_nm, parse_profile(raw)?))
}

/// Fixed delay from `[sequence]`, if any; enforces that at most one of the
/// two delay keys is present and that the value is positive.
fn parse_fixed_delay(raw: &RawConfig) -> Result<Option<Delay>> {
    let delay = match (
        raw.f64("sequence", "delay_over_tt")?,
        raw.f64("sequence", "delay_s")?,
    ) {
        (Some(_), Some(_)) => {
            return Err(raw.value_error(
                "sequence",
                "delay_s",
                "give either delay_over_tt or delay_s, not both",
            ));
        }
        (Some(x), None) => Delay::Talbot(x),
        (None, Some(x)) => Delay::Seconds(x),
        (None, None) => return Ok(None),
    };
    let value = match delay {
        Delay::Talbot(x) | Delay::Seconds(x) => x,
    };
    if !(value > 0.0) || !value.is_finite() {
        return Err(raw.value_error("sequence", "delay_over_tt", "delay must be positive"));
    }
    Ok(Some(delay))
}

fn parse_delay(raw: &RawConfig, axis: Axis) -> Result<Option<Delay>> {
    let fixed = parse_fixed_delay(raw)?;
    if axis == Axis::Delay {
        return if fixed.is_some() {
            Err(raw.value_error(
                "sequence",
                if raw.entry("sequence", "delay_over_tt").is_some() {
                    "delay_over_tt"
                } else {
                    "delay_s"
                },
                "the delay axis supplies T; remove this key",
            ))
        } else {
            Ok(None)
        };
    }
    match fixed {
        Some(d) => Ok(Some(d)),
        None => Err(raw.missing("sequence", "delay_over_tt")),
    }
}

fn parse_models(raw: &RawConfig) -> Result<Vec<Model>> {
    let mut models = match raw.str("output", "models") {
        None => vec![Model::Quantum],
        Some(text) => {
            let mut v = Vec::new();
            for tok in text.split(',').map(str::trim) {
                let m = Model::parse(tok).ok_or_else(|| {
                    raw.value_error(
                        "output",
                        "models",
                        format!("expected quantum, classical, or decohered; got '{tok}'"),
                    )
                })?;
                if v.contains(&m) {
                    return Err(raw.value_error(
                        "output",
                        "models",
                        format!("duplicate model '{}'", m.name()),
                    ));
                }
                v.push(m);
            }
            if v.is_empty() {
                return Err(raw.value_error("output", "models", "need at least one model"));
            }
            v
        }
    };
    models.sort();
    Ok(models)
}

fn parse_modes(raw: &RawConfig, axis: Axis) -> Result<Vec<Mode>> {
    let mut modes = match raw.str("output", "modes") {
        None => match axis {
            Axis::Power2 | Axis::Power3 => vec![Mode::Neutral, Mode::Inverse],
            _ => vec![Mode::Neutral],
        },
        Some(text) => {
            let mut v = Vec::new();
            for tok in text.split(',').map(str::trim) {
                let m = Mode::parse(tok).ok_or_else(|| {
                    raw.value_error(
                        "output",
                        "modes",
                        format!("expected neutral or inverse, got '{tok}'"),
                    )
                })?;
                if v.contains(&m) {
                    return Err(raw.value_error(
                        "output",
                        "modes",
                        format!("duplicate mode '{}'", m.name()),
                    ));
                }
                v.push(m);
            }
            if v.is_empty() {
                return Err(raw.value_error("output", "modes", "need at least one mode"));
            }
            v
        }
    };
    modes.sort();
    if modes.len() > 1 && !matches!(axis, Axis::Power2 | Axis::Power3) {
        return Err(raw.value_error(
            "output",
            "modes",
            "delay, tau, and signal scans detect in a single mode; give exactly one",
        ));
    }
    Ok(modes)
}

/// Inputs of the material report: the particle, the laser, and enough of the
/// sequence to state planning numbers. Unlike a scan, no `[scan]` section is
/// needed, so any scan configuration also works here.
#[derive(Debug, Clone, PartialEq)]
pub struct MaterialInput {
    /// Material name, resolved against the database.
    pub material: String,
    /// Material database path (resolved).
    pub materials_db: PathBuf,
    /// Particle mass in atomic mass units.
    pub mass_amu: f64,
    /// Optional override of the material's β ratio (reported alongside).
    pub beta_override: Option<f64>,
    /// Optional forward velocity (m/s) for the de Broglie wavelength.
    pub velocity_m_s: Option<f64>,
    /// Grating laser wavelength (nm).
    pub wavelength_nm: f64,
    /// Transverse beam profile (for the photons-per-millijoule figure).
    pub profile: Profile,
    /// Integer delay ratio N of the sequence.
    pub multiple: u32,
    /// Pulse separation the planning numbers refer to; defaults to one
    /// Talbot time when the configuration scans the delay or omits it.
    pub delay: Delay,
}

impl MaterialInput {
    /// Loads the material-report inputs from a configuration file.
    pub fn load(path: &Path) -> Result<Self> {
        Self::from_raw(&RawConfig::load(path)?)
    }

    /// Extracts the material-report inputs from a parsed configuration.
    pub fn from_raw(raw: &RawConfig) -> Result<Self> {
        let particle = parse_particle(raw)?;
        let (wavelength_nm, profile) = parse_laser(raw)?;
        let multiple = raw.integer::<u32>("sequence", "multiple")?.unwrap_or(1);
        if multiple < 1 {
            return Err(raw.value_error("sequence", "multiple", "must be at least 1"));
        }
        let delay = parse_fixed_delay(raw)?.unwrap_or(Delay::Talbot(1.0));
        Ok(MaterialInput {
            material: particle.material,
            materials_db: particle.materials_db,
            mass_amu: particle.mass_amu,
            beta_override: particle.beta_override,
            velocity_m_s: particle.velocity_m_s,
            wavelength_nm,
            profile,
            multiple,
            delay,
        })
    }
}

/// Verification run parameters (the `verify` subcommand).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VerifyConfig {
    /// Run the Monte-Carlo trajectory comparison in addition to the
    /// quadrature checks.
    pub full: bool,
    /// Trajectory count for the full level.
    pub samples: u64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            full: false,
            samples: 300_000,
        }
    }
}

impl VerifyConfig {
    /// Reads the `[verify]` section of a configuration file; missing file
    /// sections fall back to the fast defaults.
    pub fn from_raw(raw: &RawConfig) -> Result<Self> {
        let full = match raw.str("verify", "level") {
            None | Some("fast") => false,
            Some("full") => true,
            Some(other) => {
                return Err(raw.value_error(
                    "verify",
                    "level",
                    format!("expected 'fast' or 'full', got '{other}'"),
                ));
            }
        };
        let samples = raw.integer::<u64>("verify", "samples")?.unwrap_or(300_000);
        if full && samples < 1000 {
            return Err(raw.value_error(
                "verify",
                "samples",
                "need at least 1000 trajectories for a meaningful comparison",
            ));
        }
        Ok(VerifyConfig { full, samples })
    }
}
