//! Optical material response of sub-wavelength particles and ingestion of
//! material records.
//!
//! Everything a grating pulse does to a particle is controlled by a handful
//! of derived quantities: the absorption cross-section σ_abs (sets the mean
//! photon number n₀ and with it the ionization probability), the static
//! polarizability α (sets the dipole phase), their ratio β (one number that
//! fixes the phase-per-absorbed-photon), and the Rayleigh scattering
//! cross-section relative to absorption (sets the elastic-scattering
//! decoherence strength). All of them follow from the bulk dielectric
//! function ε = ε₁ + iε₂ at the grating wavelength, the mass density, and
//! the particle mass in the point-particle (R ≪ λ) regime.
//!
//! Material data comes from a line-oriented text database: one record per
//! line, `key=value` tokens separated by whitespace, `#` starting a comment.
//! Records are validated on ingestion and rejected with line-precise
//! diagnostics.

use std::path::Path;

use crate::constants::{PLANCK, SPEED_OF_LIGHT};
use crate::error::{Error, Result};

/// Guard against the plasmon pole ε ≈ −2 where the point-dipole response
/// diverges; records and operations this close to the pole are rejected.
const POLE_GUARD: f64 = 1e-12;

/// Bulk optical data of one particle material at the grating wavelength.
#[derive(Debug, Clone, PartialEq)]
pub struct Material {
    /// Identifier used by configuration files (unique within a database).
    pub name: String,
    /// Mass density ϱ (kg/m³).
    pub density: f64,
    /// Real part ε₁ of the dielectric function at the grating wavelength.
    pub eps1: f64,
    /// Imaginary part ε₂ ≥ 0 of the dielectric function.
    pub eps2: f64,
    /// Bulk work function (eV), if known; needed only for ionization-energy
    /// planning output.
    pub work_function_ev: Option<f64>,
}

impl Material {
    /// Validating constructor.
    pub fn new(
        name: impl Into<String>,
        density: f64,
        eps1: f64,
        eps2: f64,
        work_function_ev: Option<f64>,
    ) -> Result<Self> {
        let m = Material {
            name: name.into(),
            density,
            eps1,
            eps2,
            work_function_ev,
        };
        m.validate().map_err(Error::Domain)?;
        Ok(m)
    }

    fn validate(&self) -> std::result::Result<(), String> {
        if !(self.density > 0.0) || !self.density.is_finite() {
            return Err(format!("density must be positive, got {}", self.density));
        }
        if !(self.eps2 >= 0.0) || !self.eps2.is_finite() || !self.eps1.is_finite() {
            return Err(format!(
                "dielectric function ({}, {}) invalid: eps2 must be >= 0 and both parts finite",
                self.eps1, self.eps2
            ));
        }
        if (self.eps1 + 2.0).powi(2) + self.eps2.powi(2) <= POLE_GUARD {
            return Err("dielectric function sits on the eps = -2 pole".into());
        }
        if let Some(w) = self.work_function_ev {
            if !(w > 0.0) || !w.is_finite() {
                return Err(format!("work function must be positive, got {w}"));
            }
        }
        Ok(())
    }
}

/// A particle species: a material plus a mass, with the radius derived from
/// the bulk density (ϱ = 3m / 4πR³).
#[derive(Debug, Clone)]
pub struct Particle {
    /// Material the particle is made of.
    pub material: Material,
    /// Particle mass (kg).
    pub mass: f64,
}

impl Particle {
    /// Validating constructor.
    pub fn new(material: Material, mass: f64) -> Result<Self> {
        if !(mass > 0.0) || !mass.is_finite() {
            return Err(Error::Domain(format!(
                "particle mass must be positive, got {mass}"
            )));
        }
        Ok(Particle { material, mass })
    }

    /// Particle radius R = (3m / 4πϱ)^{1/3} (m).
    pub fn radius(&self) -> f64 {
        (3.0 * self.mass / (4.0 * std::f64::consts::PI * self.material.density)).cbrt()
    }
}

/// Transverse intensity profile of the standing-wave pulse.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BeamProfile {
    /// Gaussian beam with 1/e² intensity waists along the two transverse
    /// directions; the on-axis mode function is f(0,0) = 2/(π w_y w_z).
    Gaussian {
        /// Waist along y (m).
        w_y: f64,
        /// Waist along z (m).
        w_z: f64,
    },
    /// Idealised flat-top profile with uniform illumination over an area;
    /// f(0,0) = 1/area.
    FlatTop {
        /// Illuminated area (m²).
        area: f64,
    },
}

/// One standing-wave grating pulse: wavelength, pulse energy and transverse
/// profile. The grating period is half the laser wavelength.
#[derive(Debug, Clone, PartialEq)]
pub struct LaserPulse {
    /// Laser wavelength λ_L (m).
    pub wavelength: f64,
    /// Pulse energy E_L (J).
    pub pulse_energy: f64,
    /// Transverse beam profile.
    pub profile: BeamProfile,
}

impl LaserPulse {
    /// Gaussian-profile pulse.
    pub fn gaussian(wavelength: f64, pulse_energy: f64, w_y: f64, w_z: f64) -> Result<Self> {
        if !(wavelength > 0.0) || !(pulse_energy >= 0.0) || !(w_y > 0.0) || !(w_z > 0.0) {
            return Err(Error::Domain(format!(
                "invalid pulse: wavelength {wavelength}, energy {pulse_energy}, waists ({w_y}, {w_z})"
            )));
        }
        Ok(LaserPulse {
            wavelength,
            pulse_energy,
            profile: BeamProfile::Gaussian { w_y, w_z },
        })
    }

    /// Flat-top-profile pulse.
    pub fn flat_top(wavelength: f64, pulse_energy: f64, area: f64) -> Result<Self> {
        if !(wavelength > 0.0) || !(pulse_energy >= 0.0) || !(area > 0.0) {
            return Err(Error::Domain(format!(
                "invalid pulse: wavelength {wavelength}, energy {pulse_energy}, area {area}"
            )));
        }
        Ok(LaserPulse {
            wavelength,
            pulse_energy,
            profile: BeamProfile::FlatTop { area },
        })
    }

    /// Grating period d = λ_L / 2 of the standing wave (m).
    pub fn grating_period(&self) -> f64 {
        0.5 * self.wavelength
    }

    /// Peak transverse mode function f(0,0) (m⁻²).
    pub fn mode_peak(&self) -> f64 {
        match self.profile {
            BeamProfile::Gaussian { w_y, w_z } => 2.0 / (std::f64::consts::PI * w_y * w_z),
            BeamProfile::FlatTop { area } => 1.0 / area,
        }
    }
}

/// Absorption cross-section of a spherical sub-wavelength particle (m²):
/// σ_abs = (18π m / ϱ λ_L) · ε₂ / ((ε₁+2)² + ε₂²). Linear in the mass.
pub fn absorption_cross_section(species: &Particle, wavelength: f64) -> Result<f64> {
    if !(wavelength > 0.0) {
        return Err(Error::Domain(format!(
            "wavelength must be positive, got {wavelength}"
        )));
    }
    let m = &species.material;
    let denom = (m.eps1 + 2.0).powi(2) + m.eps2.powi(2);
    if denom <= POLE_GUARD {
        return Err(Error::Singular(format!(
            "dielectric function ({}, {}) sits on the eps = -2 pole",
            m.eps1, m.eps2
        )));
    }
    Ok(18.0 * std::f64::consts::PI * species.mass / (m.density * wavelength) * m.eps2 / denom)
}

/// Static polarizability α = R³ Re[(ε−1)/(ε+2)] (m³); may be negative for
/// low-field-seeking materials.
pub fn polarizability(species: &Particle) -> Result<f64> {
    let m = &species.material;
    let denom = (m.eps1 + 2.0).powi(2) + m.eps2.powi(2);
    if denom <= POLE_GUARD {
        return Err(Error::Singular(format!(
            "dielectric function ({}, {}) sits on the eps = -2 pole",
            m.eps1, m.eps2
        )));
    }
    let r3 = 3.0 * species.mass / (4.0 * std::f64::consts::PI * m.density);
    Ok(r3 * (m.eps1.powi(2) + m.eps2.powi(2) + m.eps1 - 2.0) / denom)
}

/// Ratio β = 3ε₂ / (ε₁² + ε₂² + ε₁ − 2) of absorbed-photon number to twice
/// the dipole phase per pulse; its sign distinguishes high-field seekers
/// (β > 0) from low-field seekers.
pub fn beta(material: &Material) -> Result<f64> {
    let denom = material.eps1.powi(2) + material.eps2.powi(2) + material.eps1 - 2.0;
    if denom.abs() <= POLE_GUARD {
        return Err(Error::Singular(format!(
            "beta undefined: eps1^2 + eps2^2 + eps1 - 2 vanishes for ({}, {})",
            material.eps1, material.eps2
        )));
    }
    Ok(3.0 * material.eps2 / denom)
}

/// Ratio of Rayleigh-scattering to absorption cross-sections,
/// σ_R/σ_abs = (4π²/3) ((ε₁−1)² + ε₂²)/ε₂ · m/(ϱ λ_L³). Linear in the mass.
pub fn rayleigh_ratio(species: &Particle, wavelength: f64) -> Result<f64> {
    if !(wavelength > 0.0) {
        return Err(Error::Domain(format!(
            "wavelength must be positive, got {wavelength}"
        )));
    }
    let m = &species.material;
    if m.eps2 <= 0.0 {
        return Err(Error::Singular(
            "Rayleigh-to-absorption ratio undefined for a lossless particle (eps2 = 0)".into(),
        ));
    }
    let num = (m.eps1 - 1.0).powi(2) + m.eps2.powi(2);
    Ok(
        4.0 * std::f64::consts::PI.powi(2) / 3.0 * num / m.eps2 * species.mass
            / (m.density * wavelength.powi(3)),
    )
}

/// Peak mean number of absorbed photons per pulse,
/// n₀ = 4 σ_abs E_L λ_L f(0,0) / (h c).
pub fn n0_from_pulse(pulse: &LaserPulse, sigma_abs: f64) -> f64 {
    4.0 * sigma_abs * pulse.pulse_energy * pulse.wavelength * pulse.mode_peak()
        / (PLANCK * SPEED_OF_LIGHT)
}

/// Size-corrected ionization energy (eV): the bulk work function plus the
/// image-charge correction 0.42 e²/(4πε₀ R) that vanishes for large
/// particles.
pub fn ionization_energy(work_function_ev: f64, radius: f64) -> f64 {
    use crate::constants::{ELEMENTARY_CHARGE, VACUUM_PERMITTIVITY};
    // e/(4πε₀R) is a potential in volts; multiplied by the unit charge it is
    // numerically the energy in eV.
    let coulomb_ev =
        ELEMENTARY_CHARGE / (4.0 * std::f64::consts::PI * VACUUM_PERMITTIVITY * radius);
    work_function_ev + 0.42 * coulomb_ev
}

/// de Broglie wavelength λ = h/(m v) (m).
pub fn de_broglie(mass: f64, velocity: f64) -> f64 {
    PLANCK / (mass * velocity)
}

/// Loads and validates a material database file.
///
/// See [`parse_materials`] for the grammar.
pub fn load_materials(path: impl AsRef<Path>) -> Result<Vec<Material>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    parse_materials(&text, &path.display().to_string())
}

/// Parses a material database from text.
///
/// Grammar: one record per non-empty line; whitespace-separated `key=value`
/// tokens with keys `name`, `density_kg_m3`, `eps1`, `eps2` and optional
/// `work_function_ev`; `#` starts a comment that runs to the end of the
/// line. Duplicate names, unknown keys, and records violating the material
/// invariants are rejected with the offending line number.
pub fn parse_materials(text: &str, source_label: &str) -> Result<Vec<Material>> {
    let mut records: Vec<Material> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        };
        if line.trim().is_empty() {
            continue;
        }
        let mut name: Option<String> = None;
        let mut density: Option<f64> = None;
        let mut eps1: Option<f64> = None;
        let mut eps2: Option<f64> = None;
        let mut work: Option<f64> = None;
        for token in line.split_whitespace() {
            let (key, value) = token.split_once('=').ok_or_else(|| {
                Error::parse(
                    source_label,
                    lineno,
                    format!("expected key=value token, got '{token}'"),
                )
            })?;
            let num = |field: &str| -> Result<f64> {
                value.parse::<f64>().map_err(|_| {
                    Error::parse(
                        source_label,
                        lineno,
                        format!("invalid number '{value}' for {field}"),
                    )
                })
            };
            match key {
                "name" => name = Some(value.to_string()),
                "density_kg_m3" => density = Some(num("density_kg_m3")?),
                "eps1" => eps1 = Some(num("eps1")?),
                "eps2" => eps2 = Some(num("eps2")?),
                "work_function_ev" => work = Some(num("work_function_ev")?),
                other => {
                    return Err(Error::parse(
                        source_label,
                        lineno,
                        format!("unknown key '{other}' (single-wavelength records only)"),
                    ));
                }
            }
        }
        let require = |opt: Option<f64>, field: &str| {
            opt.ok_or_else(|| Error::parse(source_label, lineno, format!("missing key {field}")))
        };
        let name =
            name.ok_or_else(|| Error::parse(source_label, lineno, "missing key name".to_string()))?;
        if records.iter().any(|r| r.name == name) {
            return Err(Error::parse(
                source_label,
                lineno,
                format!("duplicate material name '{name}'"),
            ));
        }
        let record = Material::new(
            name,
            require(density, "density_kg_m3")?,
            require(eps1, "eps1")?,
            require(eps2, "eps2")?,
            work,
        )
        .map_err(|e| Error::parse(source_label, lineno, e.to_string()))?;
        records.push(record);
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::{amu_to_kg, nm_to_m};
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use proptest::prelude::*;

    fn gold() -> Material {
        Material::new("gold", 19320.0, 0.88, 3.12, Some(5.4)).unwrap()
    }

    const LAMBDA: f64 = 157.63e-9;

    #[test]
    fn beta_reference_values() {
        // 40-digit evaluations of the beta formula for the bundled records.
        assert_relative_eq!(
            beta(&gold()).unwrap(),
            0.99693251533742331,
            max_relative = 1e-14
        );
        let silver = Material::new("silver", 10490.0, 0.50, 1.293, Some(4.26)).unwrap();
        assert_relative_eq!(
            beta(&silver).unwrap(),
            9.19523336549334,
            max_relative = 1e-14
        );
        let cesium = Material::new("cesium", 1873.0, 0.836, 0.186, Some(2.14)).unwrap();
        assert_relative_eq!(
            beta(&cesium).unwrap(),
            -1.2961431611026973,
            max_relative = 1e-14
        );
    }

    #[test]
    fn absorption_reference_value() {
        let p = Particle::new(gold(), amu_to_kg(1e6)).unwrap();
        assert_relative_eq!(
            absorption_cross_section(&p, LAMBDA).unwrap(),
            5.3359684206899331e-18,
            max_relative = 1e-14
        );
    }

    #[test]
    fn lossless_particle_absorbs_nothing() {
        let m = Material::new("glassy", 2000.0, 2.25, 0.0, None).unwrap();
        let p = Particle::new(m, amu_to_kg(1e6)).unwrap();
        assert_eq!(absorption_cross_section(&p, LAMBDA).unwrap(), 0.0);
    }

    #[test]
    fn vacuum_like_particle_has_zero_polarizability() {
        let m = Material::new("ghost", 1000.0, 1.0, 0.0, None).unwrap();
        let p = Particle::new(m, 1e-20).unwrap();
        assert_abs_diff_eq!(polarizability(&p).unwrap(), 0.0, epsilon = 1e-40);
    }

    #[test]
    fn ideal_metal_polarizability_approaches_r_cubed() {
        let m = Material::new("mirror", 10000.0, 1e9, 0.0, None).unwrap();
        let p = Particle::new(m, 1e-18).unwrap();
        let r3 = p.radius().powi(3);
        assert_relative_eq!(polarizability(&p).unwrap(), r3, max_relative = 1e-8);
    }

    #[test]
    fn plasmon_pole_is_flagged() {
        // Constructed directly so the constructor guard is bypassed.
        let m = Material {
            name: "poley".into(),
            density: 1000.0,
            eps1: -2.0,
            eps2: 0.0,
            work_function_ev: None,
        };
        let p = Particle {
            material: m,
            mass: 1e-20,
        };
        assert!(matches!(
            absorption_cross_section(&p, LAMBDA),
            Err(Error::Singular(_))
        ));
        assert!(matches!(polarizability(&p), Err(Error::Singular(_))));
    }

    #[test]
    fn rayleigh_ratio_anchor_and_linearity() {
        let p9 = Particle::new(gold(), amu_to_kg(1e9)).unwrap();
        let r9 = rayleigh_ratio(&p9, LAMBDA).unwrap();
        assert_relative_eq!(r9, 0.90231961319729277, max_relative = 1e-14);
        let p8 = Particle::new(gold(), amu_to_kg(1e8)).unwrap();
        let r8 = rayleigh_ratio(&p8, LAMBDA).unwrap();
        assert_relative_eq!(r8, r9 / 10.0, max_relative = 1e-14);
        // Lossless limit is flagged rather than returned as infinity.
        let lossless = Material::new("glassy", 2000.0, 2.25, 0.0, None).unwrap();
        let p = Particle::new(lossless, amu_to_kg(1e6)).unwrap();
        assert!(matches!(
            rayleigh_ratio(&p, LAMBDA),
            Err(Error::Singular(_))
        ));
    }

    #[test]
    fn photon_number_reference_and_round_trip() {
        let p = Particle::new(gold(), amu_to_kg(1e6)).unwrap();
        let sigma = absorption_cross_section(&p, LAMBDA).unwrap();
        let pulse = LaserPulse::gaussian(LAMBDA, 1e-3, 1e-3, 20e-6).unwrap();
        let n0 = n0_from_pulse(&pulse, sigma);
        assert_relative_eq!(n0, 539120.08582987003, max_relative = 1e-13);
        // Solve the pulse energy for a target n0 and feed it back.
        let target = 8.0;
        let energy = target / n0 * 1e-3;
        let pulse8 = LaserPulse::gaussian(LAMBDA, energy, 1e-3, 20e-6).unwrap();
        assert_relative_eq!(n0_from_pulse(&pulse8, sigma), target, max_relative = 1e-12);
        // Zero energy means zero photons.
        let dark = LaserPulse::gaussian(LAMBDA, 0.0, 1e-3, 20e-6).unwrap();
        assert_eq!(n0_from_pulse(&dark, sigma), 0.0);
    }

    #[test]
    fn ionization_energy_reference() {
        assert_relative_eq!(
            ionization_energy(5.4, 1e-9),
            6.0047851100938782,
            max_relative = 1e-14
        );
        // Bulk limit: the size correction vanishes for large particles.
        assert_relative_eq!(ionization_energy(5.4, 1.0), 5.4, max_relative = 1e-9);
    }

    #[test]
    fn de_broglie_reference_values() {
        assert_relative_eq!(
            de_broglie(amu_to_kg(2e4), 40.0),
            4.9878908928404973e-13,
            max_relative = 1e-14
        );
        assert_relative_eq!(
            de_broglie(amu_to_kg(1e6), 3.0),
            1.3301042380907993e-13,
            max_relative = 1e-14
        );
        assert_relative_eq!(
            de_broglie(amu_to_kg(2e4), 80.0),
            0.5 * 4.9878908928404973e-13,
            max_relative = 1e-14
        );
    }

    #[test]
    fn database_parses_bundled_style_records() {
        let text = "\
# reference data at the grating wavelength
name=gold density_kg_m3=19320 eps1=0.88 eps2=3.12 work_function_ev=5.4
name=silver density_kg_m3=10490 eps1=0.50 eps2=1.293 work_function_ev=4.26 # noble
name=cesium density_kg_m3=1873 eps1=0.836 eps2=0.186 work_function_ev=2.14
";
        let records = parse_materials(text, "inline").unwrap();
        assert_eq!(records.len(), 3);
        assert_eq!(records[1].name, "silver");
        assert_eq!(records[2].work_function_ev, Some(2.14));
    }

    #[test]
    fn database_rejects_bad_records() {
        assert!(parse_materials("", "inline").unwrap().is_empty());
        let bad_eps = "name=x density_kg_m3=1000 eps1=1.0 eps2=-0.5";
        match parse_materials(bad_eps, "inline") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 1),
            other => panic!("expected parse error, got {other:?}"),
        }
        let dup = "name=x density_kg_m3=1000 eps1=1.0 eps2=0.5\nname=x density_kg_m3=1.0 eps1=1.0 eps2=0.5";
        match parse_materials(dup, "inline") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected duplicate-name error, got {other:?}"),
        }
        let unknown = "name=x density_kg_m3=1000 eps1=1.0 eps2=0.5 eps1_at_532nm=2.0";
        assert!(matches!(
            parse_materials(unknown, "inline"),
            Err(Error::Parse { .. })
        ));
        let missing = "name=x eps1=1.0 eps2=0.5";
        assert!(matches!(
            parse_materials(missing, "inline"),
            Err(Error::Parse { .. })
        ));
    }

    proptest! {
        /// The R-form and the m/ϱ-form of each optical quantity agree.
        #[test]
        fn dual_form_equality(
            eps1 in -10.0f64..10.0,
            eps2 in 0.01f64..10.0,
            density in 500.0f64..25000.0,
            mass_amu in 1e4f64..1e10,
        ) {
            prop_assume!((eps1 + 2.0).powi(2) + eps2.powi(2) > 1e-6);
            let m = Material::new("probe", density, eps1, eps2, None).unwrap();
            let p = Particle::new(m, amu_to_kg(mass_amu)).unwrap();
            let lambda = nm_to_m(157.63);
            let r = p.radius();
            let eps = num_complex::Complex64::new(eps1, eps2);
            let mie = (eps - 1.0) / (eps + 2.0);

            let sigma = absorption_cross_section(&p, lambda).unwrap();
            let k = 2.0 * std::f64::consts::PI / lambda;
            let sigma_r_form = 4.0 * std::f64::consts::PI * r.powi(3) * k * mie.im;
            prop_assert!((sigma - sigma_r_form).abs() <= 1e-12 * sigma.abs().max(1e-300));

            let alpha = polarizability(&p).unwrap();
            let alpha_r_form = r.powi(3) * mie.re;
            // The polarizability numerator can cancel; scale the tolerance by
            // the magnitude of the terms entering it, not the (possibly tiny)
            // result.
            let alpha_scale = r.powi(3) * (eps1 * eps1 + eps2 * eps2 + 3.0)
                / ((eps1 + 2.0).powi(2) + eps2.powi(2));
            prop_assert!((alpha - alpha_r_form).abs() <= 1e-12 * alpha_scale.max(alpha.abs()));

            let ratio = rayleigh_ratio(&p, lambda).unwrap();
            let ratio_r_form = 2.0 / 9.0 * ((eps1 - 1.0).powi(2) + eps2.powi(2)) / eps2
                * (k * r).powi(3);
            prop_assert!((ratio - ratio_r_form).abs() <= 1e-12 * ratio.abs());

            // beta ties the three together; skip the band where the shared
            // denominator cancels and amplifies rounding noise.
            if (eps1 * eps1 + eps2 * eps2 + eps1 - 2.0).abs() > 1e-3 {
                let b = beta(&p.material).unwrap();
                let b_from_sigma = lambda * sigma
                    / (8.0 * std::f64::consts::PI.powi(2) * alpha);
                prop_assert!((b - b_from_sigma).abs() <= 1e-9 * b.abs());
            }
        }

        /// Cross sections are non-negative and scale exactly linearly with
        /// mass and pulse energy.
        #[test]
        fn linear_scalings(
            eps1 in -5.0f64..5.0,
            eps2 in 0.01f64..5.0,
            mass_amu in 1e4f64..1e9,
            energy_mj in 0.0f64..10.0,
        ) {
            prop_assume!((eps1 + 2.0).powi(2) + eps2.powi(2) > 1e-6);
            let m = Material::new("probe", 5000.0, eps1, eps2, None).unwrap();
            let lambda = nm_to_m(157.63);
            let p1 = Particle::new(m.clone(), amu_to_kg(mass_amu)).unwrap();
            let p2 = Particle::new(m, amu_to_kg(2.0 * mass_amu)).unwrap();
            let s1 = absorption_cross_section(&p1, lambda).unwrap();
            let s2 = absorption_cross_section(&p2, lambda).unwrap();
            prop_assert!(s1 >= 0.0);
            prop_assert!((s2 - 2.0 * s1).abs() <= 1e-12 * s2.abs());
            let r1 = rayleigh_ratio(&p1, lambda).unwrap();
            let r2 = rayleigh_ratio(&p2, lambda).unwrap();
            prop_assert!((r2 - 2.0 * r1).abs() <= 1e-12 * r2.abs());
            let energy = energy_mj * 1e-3;
            let pulse1 = LaserPulse::gaussian(lambda, energy, 1e-3, 20e-6).unwrap();
            let pulse2 = LaserPulse::gaussian(lambda, 2.0 * energy, 1e-3, 20e-6).unwrap();
            let n1 = n0_from_pulse(&pulse1, s1);
            let n2 = n0_from_pulse(&pulse2, s1);
            prop_assert!(n1 >= 0.0);
            prop_assert!((n2 - 2.0 * n1).abs() <= 1e-12 * n2.abs().max(1e-300));
        }
    }
}
