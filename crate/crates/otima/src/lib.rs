//! Simulation library for a three-pulse optical-grating matter-wave
//! interferometer operated in the time domain.
//!
//! Three standing-wave laser pulses, fired at programmable delays, act on a
//! cloud of massive particles as absorptive phase gratings: particles located
//! near the antinodes absorb photons and are ionized (removed or tagged),
//! while the off-resonant dipole interaction imprints a periodic phase. The
//! near-field Talbot effect then turns the periodic transmission pattern into
//! a density grating whose contrast oscillates with the ratio of the pulse
//! delay to the Talbot time `T_T = m d² / h`.
//!
//! The crate is organised in layers:
//!
//! * [`specfun`] — integer-order Bessel functions (`J_n`, `I_n` for real and
//!   complex arguments) that appear in every closed-form coefficient.
//! * [`materials`] — optical material response: absorption cross-section,
//!   polarizability, the phase-to-absorption ratio `β`, Rayleigh scattering,
//!   and ingestion of material records from a small text database.
//! * [`grating`] — everything attached to a single pulse: the complex
//!   transmission function, its Fourier coefficients, and the quantum,
//!   classical, masking and decoherence-dressed Talbot-Lau coefficients.
//! * [`interferometer`] — assembly of three pulses and free flight into
//!   fringe patterns, detection signals, fringe shifts, and visibilities.
//! * [`oracle`] — independent brute-force validators (high-precision series,
//!   quadrature, Monte-Carlo trajectories) used to certify the closed forms.
//! * [`verify`] — a reportable self-test suite comparing every closed form
//!   against its oracle; exposed by the command-line tool.
//!
//! All internal arithmetic is SI; masses in amu, lengths in nm and energies
//! in eV are converted once at the API boundary (see [`constants`]).

// Validation deliberately writes `!(x > 0.0)` instead of `x <= 0.0`: the
// negated form also rejects NaN. Reference values are written with every
// published decimal digit even where f64 cannot hold them all.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::excessive_precision)]

pub mod constants;
pub mod error;
pub mod grating;
pub mod interferometer;
pub mod materials;
pub mod oracle;
pub mod specfun;
pub mod verify;

pub use error::{Error, Result};
