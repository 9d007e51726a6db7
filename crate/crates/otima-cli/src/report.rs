//! Material report: derived optical response and experiment-planning
//! quantities for one particle species, printed as `key = value` lines.

use std::fmt::Write as _;

use otima::constants::{amu_to_kg, nm_to_m, STANDARD_GRAVITY};
use otima::interferometer::{free_fall_drop, talbot_time};
use otima::materials::{
    absorption_cross_section, beta, de_broglie, ionization_energy, load_materials, n0_from_pulse,
    polarizability, rayleigh_ratio, LaserPulse, Particle,
};
use otima::{Error, Result};

use crate::config::{Delay, MaterialInput, Profile};

/// Builds the material report: grating geometry, optical cross-sections,
/// photon numbers per pulse energy, Talbot time, free-fall budget, and the
/// size-corrected ionization energy.
pub fn material_report(input: &MaterialInput) -> Result<String> {
    let db = load_materials(&input.materials_db)?;
    let material = db
        .iter()
        .find(|m| m.name == input.material)
        .cloned()
        .ok_or_else(|| {
            Error::Domain(format!(
                "material '{}' not found in {}; available: {}",
                input.material,
                input.materials_db.display(),
                db.iter()
                    .map(|m| m.name.as_str())
                    .collect::<Vec<_>>()
                    .join(", ")
            ))
        })?;
    let mass_kg = amu_to_kg(input.mass_amu);
    let particle = Particle::new(material.clone(), mass_kg)?;
    let wavelength_m = nm_to_m(input.wavelength_nm);
    let period_m = 0.5 * wavelength_m;

    let sigma_abs = absorption_cross_section(&particle, wavelength_m)?;
    let alpha = polarizability(&particle)?;
    let beta_db = beta(&material)?;
    let ray_ratio = rayleigh_ratio(&particle, wavelength_m)?;
    let reference_pulse = match input.profile {
        Profile::Gaussian {
            waist_y_m,
            waist_z_m,
        } => LaserPulse::gaussian(wavelength_m, 1e-3, waist_y_m, waist_z_m)?,
        Profile::FlatTop { area_m2 } => LaserPulse::flat_top(wavelength_m, 1e-3, area_m2)?,
    };
    let n0_per_mj = n0_from_pulse(&reference_pulse, sigma_abs);

    let talbot_s = talbot_time(mass_kg, period_m)?;
    let delay_s = match input.delay {
        Delay::Talbot(x) => x * talbot_s,
        Delay::Seconds(x) => x,
    };
    let flight_s = f64::from(input.multiple + 1) * delay_s;
    let drop_m = free_fall_drop(STANDARD_GRAVITY, flight_s);

    let mut out = String::new();
    let _ = writeln!(out, "# otima material");
    let _ = writeln!(out, "material = {}", material.name);
    let _ = writeln!(out, "mass_amu = {}", input.mass_amu);
    let _ = writeln!(out, "wavelength_nm = {}", input.wavelength_nm);
    let _ = writeln!(out, "grating_period_m = {:e}", period_m);
    let _ = writeln!(out, "particle_radius_m = {:e}", particle.radius());
    let _ = writeln!(out, "absorption_cross_section_m2 = {:e}", sigma_abs);
    let _ = writeln!(out, "polarizability_m3 = {:e}", alpha);
    let _ = writeln!(out, "beta = {beta_db}");
    if let Some(b) = input.beta_override {
        let _ = writeln!(out, "beta_override = {b}");
    }
    let _ = writeln!(out, "rayleigh_to_absorption = {ray_ratio}");
    let _ = writeln!(out, "n0_per_mj = {n0_per_mj}");
    let _ = writeln!(out, "talbot_time_s = {talbot_s}");
    let _ = writeln!(out, "sequence_multiple = {}", input.multiple);
    let _ = writeln!(out, "sequence_delay_s = {delay_s}");
    let _ = writeln!(out, "total_flight_time_s = {flight_s}");
    let _ = writeln!(out, "free_fall_drop_m = {drop_m}");
    match material.work_function_ev {
        Some(w) => {
            let e_ion = ionization_energy(w, particle.radius());
            let _ = writeln!(out, "ionization_energy_ev = {e_ion}");
        }
        None => {
            let _ = writeln!(
                out,
                "ionization_energy_ev = n/a (material record has no work_function_ev)"
            );
        }
    }
    match input.velocity_m_s {
        Some(v) => {
            let _ = writeln!(
                out,
                "de_broglie_wavelength_m = {:e}",
                de_broglie(mass_kg, v)
            );
        }
        None => {
            let _ = writeln!(
                out,
                "de_broglie_wavelength_m = n/a (set velocity_m_s in [particle])"
            );
        }
    }
    Ok(out)
}
