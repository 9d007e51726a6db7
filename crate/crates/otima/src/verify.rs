//! Self-certification suite: recomputes the library's closed forms from the
//! brute-force oracles and reports the agreement row by row.
//!
//! The closed-form side of every comparison is injected through [`Hooks`],
//! so the suite can demonstrate its own sensitivity: swapping in a tampered
//! evaluation must turn the report red. The oracle side always runs the
//! real quadrature and trajectory code from [`crate::oracle`].

use std::fmt;

use num_complex::Complex64;

use crate::constants::amu_to_kg;
use crate::error::{Error, Result};
use crate::grating::{fourier_b, rayleigh_R, tl_quantum, CoefficientModel, GratingPulse};
use crate::interferometer::{
    fringe, talbot_time, DetectionMode, Ensemble, FringeResult, PulseSequence,
};
use crate::oracle::{
    b_by_quadrature, classical_mc, B_by_kernel_quadrature, QuadratureSpec, R_by_sphere_quadrature,
};

/// Closed-form evaluators under test. Defaults wire the real library
/// implementations; tests substitute corrupted ones to prove the suite
/// catches them.
#[allow(clippy::type_complexity)] // fat callback signatures are the point
pub struct Hooks {
    /// Grating Fourier coefficient b_n.
    pub fourier_b: Box<dyn Fn(i32, &GratingPulse) -> Result<Complex64> + Send + Sync>,
    /// Coherent Talbot-Lau coefficient B_n(ξ).
    pub tl_quantum: Box<dyn Fn(i32, f64, &GratingPulse) -> Result<Complex64> + Send + Sync>,
    /// Elastic-scattering kernel component R_n(ξ).
    pub rayleigh: Box<dyn Fn(i32, f64, f64) -> Result<f64> + Send + Sync>,
    /// Classical fringe assembly (for the trajectory comparison).
    pub classical_fringe: Box<
        dyn Fn(&PulseSequence, &Ensemble, &[GratingPulse; 3]) -> Result<FringeResult> + Send + Sync,
    >,
}

impl Default for Hooks {
    fn default() -> Self {
        Hooks {
            fourier_b: Box::new(fourier_b),
            tl_quantum: Box::new(tl_quantum),
            rayleigh: Box::new(rayleigh_R),
            classical_fringe: Box::new(|seq, ensemble, pulses| {
                fringe(
                    seq,
                    ensemble,
                    pulses,
                    CoefficientModel::Classical,
                    DetectionMode::Neutral,
                )
            }),
        }
    }
}

/// Outcome of one equivalence check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    /// Closed form and oracle agree within tolerance.
    Pass,
    /// They disagree beyond tolerance.
    Mismatch,
    /// One side failed to converge; no comparison was possible.
    NotConverged,
    /// The statistical error is too large for the comparison to mean
    /// anything at the given sample count.
    Inconclusive,
}

/// One row of the verification report.
#[derive(Debug, Clone)]
pub struct CheckRow {
    /// What was compared.
    pub name: String,
    /// Closed-form value (display form).
    pub closed: String,
    /// Oracle value (display form).
    pub oracle: String,
    /// Absolute deviation between the two sides.
    pub deviation: f64,
    /// Tolerance the deviation was held against.
    pub tolerance: f64,
    /// Verdict.
    pub outcome: Outcome,
}

/// Complete verification report.
#[derive(Debug, Clone, Default)]
pub struct VerifyReport {
    /// Individual comparisons, in execution order.
    pub rows: Vec<CheckRow>,
}

impl VerifyReport {
    /// True when every row passed.
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.outcome == Outcome::Pass)
    }

    /// True when any row is a genuine value mismatch (as opposed to a
    /// convergence or statistics problem).
    pub fn has_mismatch(&self) -> bool {
        self.rows.iter().any(|r| r.outcome == Outcome::Mismatch)
    }

    fn compare(&mut self, name: &str, closed: Complex64, oracle: Complex64, tolerance: f64) {
        let deviation = (closed - oracle).norm();
        self.rows.push(CheckRow {
            name: name.to_string(),
            closed: format!("{:.12e}", closed),
            oracle: format!("{:.12e}", oracle),
            deviation,
            tolerance,
            outcome: if deviation <= tolerance {
                Outcome::Pass
            } else {
                Outcome::Mismatch
            },
        });
    }

    fn record_failure(&mut self, name: &str, error: &Error) {
        self.rows.push(CheckRow {
            name: format!("{name}: {error}"),
            closed: "-".into(),
            oracle: "-".into(),
            deviation: f64::NAN,
            tolerance: 0.0,
            outcome: Outcome::NotConverged,
        });
    }
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for row in &self.rows {
            let verdict = match row.outcome {
                Outcome::Pass => "PASS",
                Outcome::Mismatch => "MISMATCH",
                Outcome::NotConverged => "NO-CONVERGENCE",
                Outcome::Inconclusive => "INCONCLUSIVE",
            };
            writeln!(
                f,
                "{verdict:<14} {:<58} |closed-oracle| = {:9.3e} (tol {:7.1e})",
                row.name, row.deviation, row.tolerance
            )?;
        }
        let (passed, total) = (
            self.rows
                .iter()
                .filter(|r| r.outcome == Outcome::Pass)
                .count(),
            self.rows.len(),
        );
        writeln!(f, "{passed}/{total} checks passed")
    }
}

/// Runs the quadrature-based equivalence checks: grating Fourier
/// coefficients, Talbot-Lau coefficients, and the scattering kernel.
pub fn run_fast(hooks: &Hooks) -> VerifyReport {
    let mut report = VerifyReport::default();
    let spec = QuadratureSpec::default();

    // Grating Fourier coefficients against the period integral.
    for &n0 in &[1.0, 8.0] {
        for &phi0 in &[-4.0, 0.0, 4.0] {
            let name = format!("fourier b (n0={n0}, phi0={phi0}), orders 0,1,3,7");
            let result = (|| -> Result<(Complex64, Complex64, f64)> {
                let pulse = GratingPulse::new(n0, phi0)?;
                let mut worst = (Complex64::default(), Complex64::default(), -1.0);
                for n in [0, 1, 3, 7] {
                    let closed = (hooks.fourier_b)(n, &pulse)?;
                    let oracle = b_by_quadrature(n, &pulse, &spec)?;
                    let dev = (closed - oracle).norm();
                    if dev > worst.2 {
                        worst = (closed, oracle, dev);
                    }
                }
                Ok(worst)
            })();
            match result {
                Ok((closed, oracle, _)) => report.compare(&name, closed, oracle, 1e-10),
                Err(e) => report.record_failure(&name, &e),
            }
        }
    }

    // Coherent coefficients against the two-point kernel integral.
    for &(n0, phi0) in &[(8.0, 0.0), (8.0, 4.0), (4.0, -2.0)] {
        for &xi in &[0.0, 0.37, 1.0] {
            let name = format!("talbot-lau B (n0={n0}, phi0={phi0}, xi={xi}), orders 0..3");
            let result = (|| -> Result<(Complex64, Complex64, f64)> {
                let pulse = GratingPulse::new(n0, phi0)?;
                let mut worst = (Complex64::default(), Complex64::default(), -1.0);
                for n in 0..=3 {
                    let closed = (hooks.tl_quantum)(n, xi, &pulse)?;
                    let oracle = B_by_kernel_quadrature(n, xi, &pulse, &spec)?;
                    let dev = (closed - oracle).norm();
                    if dev > worst.2 {
                        worst = (closed, oracle, dev);
                    }
                }
                Ok(worst)
            })();
            match result {
                Ok((closed, oracle, _)) => report.compare(&name, closed, oracle, 1e-9),
                Err(e) => report.record_failure(&name, &e),
            }
        }
    }

    // Scattering kernel against the sphere quadrature.
    for &xi in &[0.0, 0.5, 1.0] {
        let name = format!("scattering R (nR=7.2, xi={xi}), orders 0..2");
        let result = (|| -> Result<(Complex64, Complex64, f64)> {
            let mut worst = (Complex64::default(), Complex64::default(), -1.0);
            for n in 0..=2 {
                let closed = (hooks.rayleigh)(n, xi, 7.2)?;
                let oracle = R_by_sphere_quadrature(n, xi, 7.2, &spec)?;
                let dev = (closed - oracle).abs();
                if dev > worst.2 {
                    worst = (closed.into(), oracle.into(), dev);
                }
            }
            Ok(worst)
        })();
        match result {
            Ok((closed, oracle, _)) => report.compare(&name, closed, oracle, 1e-8),
            Err(e) => report.record_failure(&name, &e),
        }
    }

    report
}

/// Runs the fast checks plus the classical trajectory comparison: the
/// closed-form classical fringe components must agree with the Monte-Carlo
/// simulation within five statistical standard errors.
pub fn run_full(hooks: &Hooks, samples: u64, seed: u64) -> VerifyReport {
    let mut report = run_fast(hooks);

    let name = format!("classical fringe vs {samples}-sample trajectory MC");
    let result = (|| -> Result<Vec<CheckRow>> {
        let period = 78.5e-9;
        let mass = amu_to_kg(1e6);
        let delay = talbot_time(mass, period)?;
        let seq = PulseSequence::new(delay, 1, 0.0, 0.0, period)?;
        let ensemble = Ensemble::new(mass, 1.0, 1e-3)?;
        let pulse = GratingPulse::new(8.0, 4.0)?;
        let pulses = [pulse, pulse, pulse];
        let closed = (hooks.classical_fringe)(&seq, &ensemble, &pulses)?;
        let mc = classical_mc(
            &seq,
            &ensemble,
            &pulses,
            DetectionMode::Neutral,
            samples,
            seed,
        )?;

        let mut rows = Vec::new();
        for ell in 0..=2i32 {
            let predicted = closed.coefficient(ell);
            let estimated = mc.components[ell as usize];
            let sigma = mc.std_err[ell as usize];
            let deviation = (predicted - estimated).norm();
            // The comparison only means something when five standard errors
            // resolve the signal scale.
            let conclusive = 5.0 * sigma <= 0.05 * closed.s0.max(1e-12);
            let outcome = if !conclusive {
                Outcome::Inconclusive
            } else if deviation <= 5.0 * sigma {
                Outcome::Pass
            } else {
                Outcome::Mismatch
            };
            rows.push(CheckRow {
                name: format!(
                    "classical MC component l={ell} (5 sigma = {:.2e})",
                    5.0 * sigma
                ),
                closed: format!("{:.12e}", predicted),
                oracle: format!("{:.12e}", estimated),
                deviation,
                tolerance: 5.0 * sigma,
                outcome,
            });
        }
        Ok(rows)
    })();
    match result {
        Ok(rows) => report.rows.extend(rows),
        Err(e) => report.record_failure(&name, &e),
    }

    report
}
