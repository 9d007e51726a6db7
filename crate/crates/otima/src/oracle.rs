//! Independent brute-force validators for every closed form in the library.
//!
//! Each oracle recomputes a quantity from its defining integral or from a
//! direct trajectory simulation, sharing nothing with the closed-form
//! evaluation path beyond the elementary transmission function itself:
//!
//! * [`b_by_quadrature`] — grating Fourier coefficients from the periodic
//!   trapezoid rule (spectrally accurate for smooth periodic integrands);
//! * [`B_by_kernel_quadrature`] — Talbot-Lau coefficients from the
//!   two-point transmission product;
//! * [`R_by_sphere_quadrature`] — the elastic-scattering kernel from a
//!   numerical integral of the dipole emission pattern over the unit
//!   sphere, followed by a Fourier decomposition in position;
//! * [`classical_mc`] — fringe components from classical trajectories with
//!   Bernoulli survival and dipole-force momentum kicks.
//!
//! The oracles ship in the library (not as test-only code) so the command
//! line can expose a verification mode; all of them either converge to the
//! requested tolerance or fail loudly.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::constants::HBAR;
use crate::error::{Error, Result};
use crate::grating::{transmission, GratingPulse};
use crate::interferometer::{DetectionMode, Ensemble, PulseSequence};

/// Number of Monte-Carlo samples per deterministic substream.
const MC_CHUNK: u64 = 16384;

/// Detector-offset grid used to extract fringe components from the
/// Monte-Carlo signal. Aliasing requires the mask Fourier content beyond
/// half this order to be negligible, which holds for any reasonable pulse.
const MC_GRID: usize = 128;

/// Fourier orders reported by the Monte-Carlo estimate.
const MC_ORDERS: usize = 8;

/// Quadrature controls shared by the integral oracles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    /// Starting abscissa count per axis (the oracles refine from here).
    pub count: usize,
    /// Quadrature family for the non-periodic axis.
    pub scheme: Scheme,
    /// Absolute agreement required between successive refinements.
    pub tolerance: f64,
}

/// Quadrature family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    /// Equal-weight trapezoid rule on a periodic interval.
    TrapezoidPeriodic,
    /// Gauss-Legendre nodes on a finite interval.
    GaussLegendre,
}

impl QuadratureSpec {
    /// Validating constructor.
    pub fn new(count: usize, scheme: Scheme, tolerance: f64) -> Result<Self> {
        if count < 64 {
            return Err(Error::Domain(format!(
                "quadrature needs at least 64 abscissas, got {count}"
            )));
        }
        if !(tolerance > 0.0) {
            return Err(Error::Domain(format!(
                "quadrature tolerance must be positive, got {tolerance}"
            )));
        }
        Ok(QuadratureSpec {
            count,
            scheme,
            tolerance,
        })
    }
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            count: 256,
            scheme: Scheme::TrapezoidPeriodic,
            tolerance: 1e-12,
        }
    }
}

/// Mean of `f` over the unit period at `count` equally spaced nodes — the
/// periodic trapezoid rule for (1/d)∫₀^d f dx in units of the period.
fn periodic_mean(count: usize, mut f: impl FnMut(f64) -> Result<Complex64>) -> Result<Complex64> {
    let mut sum = Complex64::new(0.0, 0.0);
    for k in 0..count {
        sum += f(k as f64 / count as f64)?;
    }
    Ok(sum / count as f64)
}

/// Runs a refinement loop, doubling the node count until two successive
/// levels agree to the tolerance.
fn refine_to_tolerance(
    start: usize,
    tolerance: f64,
    label: &str,
    mut eval: impl FnMut(usize) -> Result<Complex64>,
) -> Result<Complex64> {
    let mut count = start.next_power_of_two().max(64);
    let mut current = eval(count)?;
    for _ in 0..10 {
        count *= 2;
        let refined = eval(count)?;
        if (refined - current).norm() <= tolerance {
            return Ok(refined);
        }
        current = refined;
    }
    Err(Error::Precision(format!(
        "{label} quadrature did not converge to {tolerance:e} by {count} nodes"
    )))
}

/// Grating Fourier coefficient at fixed node `count` (no refinement).
pub(crate) fn b_raw(n: i32, pulse: &GratingPulse, count: usize) -> Result<Complex64> {
    periodic_mean(count, |u| {
        let phase = Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * f64::from(n) * u);
        Ok(transmission(u, 1.0, pulse)? * phase)
    })
}

/// Grating Fourier coefficient b_n = (1/d)∫₀^d t(x)·e^{−2πinx/d} dx by the
/// periodic trapezoid rule with refinement until two levels agree.
#[allow(non_snake_case)]
pub fn b_by_quadrature(n: i32, pulse: &GratingPulse, spec: &QuadratureSpec) -> Result<Complex64> {
    refine_to_tolerance(spec.count, spec.tolerance, "Fourier-coefficient", |count| {
        b_raw(n, pulse, count)
    })
}

/// Talbot-Lau coefficient at fixed node `count` (no refinement).
pub(crate) fn big_b_raw(n: i32, xi: f64, pulse: &GratingPulse, count: usize) -> Result<Complex64> {
    periodic_mean(count, |u| {
        let phase = Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * f64::from(n) * u);
        let left = transmission(u - 0.5 * xi, 1.0, pulse)?;
        let right = transmission(u + 0.5 * xi, 1.0, pulse)?;
        Ok(left * right.conj() * phase)
    })
}

/// Talbot-Lau coefficient
/// B_n(ξ) = (1/d)∫₀^d t(x − ξd/2)·conj(t(x + ξd/2))·e^{−2πinx/d} dx
/// by the periodic trapezoid rule with refinement.
#[allow(non_snake_case)]
pub fn B_by_kernel_quadrature(
    n: i32,
    xi: f64,
    pulse: &GratingPulse,
    spec: &QuadratureSpec,
) -> Result<Complex64> {
    refine_to_tolerance(spec.count, spec.tolerance, "two-point-kernel", |count| {
        big_b_raw(n, xi, pulse, count)
    })
}

/// Gauss-Legendre nodes and weights on [−1, 1] by Newton iteration on the
/// Legendre recurrence.
pub(crate) fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; m];
    let mut weights = vec![0.0; m];
    for i in 0..m.div_ceil(2) {
        // Tricomi's approximation to the i-th root, then Newton.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Evaluate P_m(x) and P_{m−1}(x) by upward recurrence.
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 2..=m {
                let k = k as f64;
                let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = m as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[m - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[m - 1 - i] = w;
    }
    (nodes, weights)
}

/// Mean of cos(q·u_x) over the dipole emission pattern N(u) = 3sin²θ/8π,
/// with the polarization axis orthogonal to the grating vector, computed by
/// product quadrature: Gauss-Legendre in cosθ × periodic trapezoid in
/// azimuth, `m` nodes each.
pub(crate) fn dipole_average_raw(q: f64, m: usize) -> f64 {
    let (nodes, weights) = gauss_legendre(m);
    let mut total = 0.0;
    for (&c, &w) in nodes.iter().zip(weights.iter()) {
        let sin_theta = (1.0 - c * c).sqrt();
        let mut azimuth = 0.0;
        for j in 0..m {
            let phi = 2.0 * std::f64::consts::PI * (j as f64 + 0.5) / m as f64;
            azimuth += (q * sin_theta * phi.cos()).cos();
        }
        azimuth /= m as f64;
        // N(u)·dΩ = (3/8π)·sin²θ·dcosθ·dφ; the azimuth mean above already
        // carries the 1/2π, leaving (3/4)·sin²θ·dcosθ.
        total += w * 0.75 * sin_theta * sin_theta * azimuth;
    }
    total
}

/// Scattering-kernel component at fixed quadrature orders (no refinement):
/// builds the two-point decoherence factor from the sphere integral and
/// Fourier-decomposes it over position.
pub(crate) fn r_raw(n: i32, xi: f64, n_rayleigh: f64, m: usize, x_count: usize) -> Result<f64> {
    let q = std::f64::consts::PI * xi;
    let g = dipole_average_raw(q, m);
    // Two-point decoherence exponent for paths separated by s = ξd in a
    // standing wave: ln η = E + F·cos(2πx/d) with x the path midpoint.
    let e = -0.5 * n_rayleigh * (1.0 - g * q.cos());
    let f = 0.5 * n_rayleigh * (g - q.cos());
    let value = periodic_mean(x_count, |u| {
        let eta = (e + f * (2.0 * std::f64::consts::PI * u).cos()).exp();
        let phase = Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * f64::from(n) * u);
        Ok(eta * phase)
    })?;
    Ok(value.re)
}

/// Elastic-scattering kernel component R_n(ξ) from first principles: the
/// decoherence factor of two paths separated by ξd is obtained by
/// integrating the dipole emission pattern over the unit sphere, and its
/// position dependence is Fourier-decomposed numerically. Both the sphere
/// and position quadratures are refined until the result is stable.
#[allow(non_snake_case)]
pub fn R_by_sphere_quadrature(
    n: i32,
    xi: f64,
    n_rayleigh: f64,
    spec: &QuadratureSpec,
) -> Result<f64> {
    if !(n_rayleigh >= 0.0) || !n_rayleigh.is_finite() {
        return Err(Error::Domain(format!(
            "mean scattered-photon number must be non-negative, got {n_rayleigh}"
        )));
    }
    let mut m = spec.count.next_power_of_two().max(64);
    let mut x_count = m.max(256);
    let mut current = r_raw(n, xi, n_rayleigh, m, x_count)?;
    for _ in 0..4 {
        m *= 2;
        x_count *= 2;
        let refined = r_raw(n, xi, n_rayleigh, m, x_count)?;
        if (refined - current).abs() <= spec.tolerance {
            return Ok(refined);
        }
        current = refined;
    }
    Err(Error::Precision(format!(
        "sphere quadrature did not converge to {:e} by order {m}",
        spec.tolerance
    )))
}

/// Monte-Carlo estimate of the fringe Fourier components, with statistical
/// errors from the scatter between independent substreams.
#[derive(Debug, Clone)]
pub struct McEstimate {
    /// Estimated signal components S_ℓ for ℓ = 0..=8.
    pub components: Vec<Complex64>,
    /// One-sigma statistical error of each component.
    pub std_err: Vec<f64>,
    /// Mean signal S₀.
    pub s0: f64,
    /// Statistical error of S₀.
    pub s0_err: f64,
    /// Sinusoidal visibility 2|S₁|/S₀ of the estimate.
    pub v_sin: f64,
    /// Propagated statistical error of the sinusoidal visibility.
    pub v_sin_err: f64,
    /// Number of trajectories actually simulated (the request is rounded up
    /// to a whole number of substreams).
    pub samples: u64,
}

impl McEstimate {
    /// True when `value` lies within `n_sigma` statistical errors of the
    /// estimated component `ell`.
    pub fn component_within(&self, ell: usize, value: Complex64, n_sigma: f64) -> bool {
        (self.components[ell] - value).norm() <= n_sigma * self.std_err[ell].max(1e-300)
    }
}

/// Per-substream accumulator: the signal summed over trajectories at each
/// detector offset.
struct ChunkSignal {
    grid: Vec<f64>,
}

/// Classical-trajectory simulation of the full three-pulse sequence.
///
/// Trajectories start uniformly distributed over one grating period with
/// Gaussian velocities. At each of the first two pulses a trajectory
/// survives ionization with probability e^{−n(x)} (Bernoulli) and receives
/// the classical dipole kick Δp = ħ·∂ₓφ(x); between pulses it flies freely
/// under the constant acceleration. The third pulse is applied as a
/// transmission (or ionization) weight on a grid of detector offsets, and
/// the fringe components are extracted by discrete Fourier transform.
///
/// The sample count (≥ 10⁵) is rounded up to a whole number of 16384-sample
/// substreams; each substream draws from its own counter-selected stream of
/// one explicitly seeded generator, so results are bit-for-bit reproducible
/// for a given seed regardless of thread scheduling.
pub fn classical_mc(
    seq: &PulseSequence,
    ensemble: &Ensemble,
    pulses: &[GratingPulse; 3],
    mode: DetectionMode,
    samples: u64,
    seed: u64,
) -> Result<McEstimate> {
    if samples < 100_000 {
        return Err(Error::Domain(format!(
            "Monte-Carlo comparison needs at least 1e5 samples, got {samples}"
        )));
    }
    ensemble.validate_against_period(seq.period)?;
    for pulse in pulses {
        // Surface parameter errors before spending time on trajectories.
        GratingPulse::with_rayleigh(pulse.n0, pulse.phi0, pulse.n_rayleigh)?;
    }

    let d = seq.period;
    let t1 = seq.t1();
    let t2 = seq.t2();
    let a = seq.acceleration;
    let kick1 = -HBAR * pulses[0].phi0 * std::f64::consts::PI / (d * ensemble.mass);
    let kick2 = -HBAR * pulses[1].phi0 * std::f64::consts::PI / (d * ensemble.mass);
    let velocity = Normal::new(0.0, ensemble.velocity_spread)
        .map_err(|e| Error::Domain(format!("velocity distribution rejected: {e}")))?;

    let n_chunks = samples.div_ceil(MC_CHUNK);
    let chunks: Vec<ChunkSignal> = (0..n_chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(chunk + 1);
            let mut grid = vec![0.0; MC_GRID];
            for _ in 0..MC_CHUNK {
                let x0 = rng.random::<f64>() * d;
                let v0 = velocity.sample(&mut rng);

                // Pulse 1: Bernoulli survival, then the dipole kick.
                let n1 = pulses[0].n0 * (std::f64::consts::PI * x0 / d).cos().powi(2);
                if rng.random::<f64>() >= (-n1).exp() {
                    continue;
                }
                let v1 = v0 + kick1 * (2.0 * std::f64::consts::PI * x0 / d).sin();

                // Free flight to pulse 2.
                let x1 = x0 + v1 * t1 + 0.5 * a * t1 * t1;
                let n2 = pulses[1].n0 * (std::f64::consts::PI * x1 / d).cos().powi(2);
                if rng.random::<f64>() >= (-n2).exp() {
                    continue;
                }
                let v2 = v1 + a * t1 + kick2 * (2.0 * std::f64::consts::PI * x1 / d).sin();

                // Free flight to the detection pulse.
                let x2 = x1 + v2 * t2 + 0.5 * a * t2 * t2;
                for (k, slot) in grid.iter_mut().enumerate() {
                    let offset = x2 - k as f64 * d / MC_GRID as f64;
                    let n3 = pulses[2].n0 * (std::f64::consts::PI * offset / d).cos().powi(2);
                    let transmitted = (-n3).exp();
                    *slot += match mode {
                        DetectionMode::Neutral => transmitted,
                        DetectionMode::Inverse => 1.0 - transmitted,
                    };
                }
            }
            ChunkSignal { grid }
        })
        .collect();

    // Per-substream Fourier components, combined in a fixed order.
    let mut per_chunk: Vec<Vec<Complex64>> = Vec::with_capacity(chunks.len());
    for chunk in &chunks {
        let mut comps = vec![Complex64::new(0.0, 0.0); MC_ORDERS + 1];
        for (k, &value) in chunk.grid.iter().enumerate() {
            let mean = value / MC_CHUNK as f64;
            for (ell, comp) in comps.iter_mut().enumerate() {
                let phase = -2.0 * std::f64::consts::PI * ell as f64 * k as f64 / MC_GRID as f64;
                *comp += mean * Complex64::from_polar(1.0, phase);
            }
        }
        for comp in &mut comps {
            *comp /= MC_GRID as f64;
        }
        per_chunk.push(comps);
    }

    let n = per_chunk.len() as f64;
    let mut components = vec![Complex64::new(0.0, 0.0); MC_ORDERS + 1];
    for comps in &per_chunk {
        for (mean, c) in components.iter_mut().zip(comps.iter()) {
            *mean += c;
        }
    }
    for mean in &mut components {
        *mean /= n;
    }
    let mut std_err = vec![0.0; MC_ORDERS + 1];
    if per_chunk.len() > 1 {
        for (ell, err) in std_err.iter_mut().enumerate() {
            let spread: f64 = per_chunk
                .iter()
                .map(|comps| (comps[ell] - components[ell]).norm_sqr())
                .sum();
            *err = (spread / (n * (n - 1.0))).sqrt();
        }
    }

    let s0 = components[0].re;
    let s1 = components[1].norm();
    let (v_sin, v_sin_err) = if s0 > 0.0 {
        let v = 2.0 * s1 / s0;
        let err = (2.0 / s0) * (std_err[1].powi(2) + (s1 * std_err[0] / s0).powi(2)).sqrt();
        (v, err)
    } else {
        (0.0, f64::INFINITY)
    };

    let s0_err = std_err[0];
    Ok(McEstimate {
        components,
        std_err,
        s0,
        s0_err,
        v_sin,
        v_sin_err,
        samples: n_chunks * MC_CHUNK,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::amu_to_kg;
    use crate::grating::{fourier_b, rayleigh_R, tl_mask, tl_quantum, CoefficientModel};
    use crate::interferometer::{fringe, talbot_time};
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use proptest::prelude::*;

    const PERIOD: f64 = 78.5e-9;

    #[test]
    fn quadrature_spec_validation() {
        assert!(QuadratureSpec::new(32, Scheme::TrapezoidPeriodic, 1e-10).is_err());
        assert!(QuadratureSpec::new(64, Scheme::TrapezoidPeriodic, 0.0).is_err());
        assert!(QuadratureSpec::new(64, Scheme::GaussLegendre, 1e-10).is_ok());
    }

    #[test]
    fn fourier_coefficients_match_quadrature() {
        let spec = QuadratureSpec::default();
        for &n0 in &[1.0, 8.0] {
            for &phi0 in &[-4.0, 0.0, 4.0] {
                let pulse = GratingPulse::new(n0, phi0).unwrap();
                for n in [0, 1, 3, 7] {
                    let closed = fourier_b(n, &pulse).unwrap();
                    let oracle = b_by_quadrature(n, &pulse, &spec).unwrap();
                    assert!(
                        (closed - oracle).norm() <= 1e-10,
                        "b_{n} mismatch at n0={n0}, phi0={phi0}: {closed} vs {oracle}"
                    );
                }
            }
        }
    }

    #[test]
    fn inert_grating_has_delta_coefficients() {
        let spec = QuadratureSpec::default();
        let off = GratingPulse::off();
        assert!((b_by_quadrature(0, &off, &spec).unwrap() - 1.0).norm() < 1e-14);
        assert!(b_by_quadrature(1, &off, &spec).unwrap().norm() < 1e-14);
    }

    #[test]
    fn coefficients_beyond_truncation_are_negligible() {
        let spec = QuadratureSpec::default();
        let pulse = GratingPulse::new(1.0, 0.0).unwrap();
        assert!(b_by_quadrature(40, &pulse, &spec).unwrap().norm() < 1e-14);
    }

    #[test]
    fn quadrature_error_collapses_under_refinement() {
        // Spectral convergence of the periodic trapezoid rule: each
        // doubling of the node count reduces the error far more than twice.
        let pulse = GratingPulse::new(8.0, 4.0).unwrap();
        let reference = b_raw(1, &pulse, 4096).unwrap();
        let e8 = (b_raw(1, &pulse, 8).unwrap() - reference).norm();
        let e16 = (b_raw(1, &pulse, 16).unwrap() - reference).norm();
        let e32 = (b_raw(1, &pulse, 32).unwrap() - reference).norm();
        assert!(
            e16 < 0.5 * e8,
            "expected better than halving: {e8} -> {e16}"
        );
        assert!(
            e32 < 0.5 * e16,
            "expected better than halving: {e16} -> {e32}"
        );
    }

    #[test]
    fn kernel_quadrature_matches_masks_at_zero_shear() {
        let spec = QuadratureSpec::default();
        let pulse = GratingPulse::new(8.0, 3.0).unwrap();
        for n in [0, 1, 2, 4] {
            let oracle = B_by_kernel_quadrature(n, 0.0, &pulse, &spec).unwrap();
            let mask = tl_mask(n, 8.0).unwrap();
            assert!(
                (oracle - mask).norm() < 1e-12,
                "order {n}: {oracle} vs {mask}"
            );
        }
    }

    #[test]
    fn kernel_quadrature_reference_point() {
        // Dark pulse at one full Talbot period of shear, second order.
        let spec = QuadratureSpec::default();
        let pulse = GratingPulse::new(8.0, 0.0).unwrap();
        let oracle = B_by_kernel_quadrature(2, 1.0, &pulse, &spec).unwrap();
        assert_abs_diff_eq!(oracle.re, 0.11762650147276903, epsilon = 1e-8);
        assert!(oracle.im.abs() < 1e-12);
    }

    #[test]
    fn dipole_average_limits() {
        // At zero momentum transfer the emission pattern integrates to 1.
        assert_relative_eq!(dipole_average_raw(0.0, 64), 1.0, max_relative = 1e-12);
        // Large-argument decay: the average falls off.
        assert!(dipole_average_raw(20.0, 128).abs() < 0.1);
    }

    #[test]
    fn sphere_quadrature_limits() {
        let spec = QuadratureSpec::default();
        for n in [0, 1, 3] {
            let at_zero_shear = R_by_sphere_quadrature(n, 0.0, 7.2, &spec).unwrap();
            let no_scattering = R_by_sphere_quadrature(n, 0.7, 0.0, &spec).unwrap();
            let expected = if n == 0 { 1.0 } else { 0.0 };
            assert_abs_diff_eq!(at_zero_shear, expected, epsilon = 1e-12);
            assert_abs_diff_eq!(no_scattering, expected, epsilon = 1e-12);
        }
    }

    #[test]
    fn sphere_quadrature_matches_closed_kernel() {
        let spec = QuadratureSpec::default();
        for &xi in &[0.5, 1.0] {
            for n in [0, 1, 2] {
                let closed = rayleigh_R(n, xi, 7.2).unwrap();
                let oracle = R_by_sphere_quadrature(n, xi, 7.2, &spec).unwrap();
                assert!(
                    (closed - oracle).abs() <= 1e-8,
                    "R_{n}({xi}) mismatch: {closed} vs {oracle}"
                );
            }
        }
    }

    fn mc_setup() -> (PulseSequence, Ensemble) {
        let tt = talbot_time(amu_to_kg(1e6), PERIOD).unwrap();
        let seq = PulseSequence::new(tt, 1, 0.0, 0.0, PERIOD).unwrap();
        let ensemble = Ensemble::new(amu_to_kg(1e6), 1.0, 1e-3).unwrap();
        (seq, ensemble)
    }

    #[test]
    fn trajectories_reproduce_classical_fringe_components() {
        let (seq, ensemble) = mc_setup();
        let pulse = GratingPulse::new(8.0, 4.0).unwrap();
        let estimate = classical_mc(
            &seq,
            &ensemble,
            &[pulse, pulse, pulse],
            DetectionMode::Neutral,
            200_000,
            7,
        )
        .unwrap();
        let closed = fringe(
            &seq,
            &ensemble,
            &[pulse, pulse, pulse],
            CoefficientModel::Classical,
            DetectionMode::Neutral,
        )
        .unwrap();
        for ell in 0..=2 {
            assert!(
                estimate.component_within(ell, closed.coefficient(ell as i32), 5.0),
                "component {ell}: MC {} ± {} vs closed {}",
                estimate.components[ell],
                estimate.std_err[ell],
                closed.coefficient(ell as i32)
            );
        }
        // The trajectory picture reproduces the mean transmission well.
        assert_relative_eq!(estimate.s0, closed.s0, max_relative = 0.05);
    }

    #[test]
    fn trajectories_are_seed_reproducible() {
        let (seq, ensemble) = mc_setup();
        let pulse = GratingPulse::new(6.0, 3.0).unwrap();
        let pulses = [pulse, pulse, pulse];
        let first = classical_mc(
            &seq,
            &ensemble,
            &pulses,
            DetectionMode::Neutral,
            100_000,
            42,
        )
        .unwrap();
        let second = classical_mc(
            &seq,
            &ensemble,
            &pulses,
            DetectionMode::Neutral,
            100_000,
            42,
        )
        .unwrap();
        assert_eq!(first.components, second.components);
        assert_eq!(first.std_err, second.std_err);
        let other = classical_mc(
            &seq,
            &ensemble,
            &pulses,
            DetectionMode::Neutral,
            100_000,
            43,
        )
        .unwrap();
        assert_ne!(first.components, other.components);
    }

    #[test]
    fn idle_pulses_give_exact_uniform_signal() {
        let (seq, ensemble) = mc_setup();
        let off = [GratingPulse::off(); 3];
        let estimate =
            classical_mc(&seq, &ensemble, &off, DetectionMode::Neutral, 100_000, 1).unwrap();
        // Every trajectory survives with unit weight: no statistical
        // noise, only rounding in the Fourier extraction.
        assert_eq!(estimate.s0, 1.0);
        assert!(estimate.components[1].norm() < 1e-13);
        assert!(estimate.v_sin < 1e-12);
    }

    #[test]
    fn estimator_noise_shrinks_with_sample_count() {
        let (seq, ensemble) = mc_setup();
        let pulse = GratingPulse::new(8.0, 4.0).unwrap();
        let pulses = [pulse, pulse, pulse];
        let small =
            classical_mc(&seq, &ensemble, &pulses, DetectionMode::Neutral, 100_000, 5).unwrap();
        let large =
            classical_mc(&seq, &ensemble, &pulses, DetectionMode::Neutral, 400_000, 5).unwrap();
        // Variance ∝ 1/samples: quadrupling the samples should halve the
        // statistical error, up to estimator noise.
        let ratio = small.std_err[1] / large.std_err[1];
        assert!(
            (1.2..3.4).contains(&ratio),
            "expected ratio near 2, got {ratio}"
        );
    }

    #[test]
    fn sample_floor_is_enforced() {
        let (seq, ensemble) = mc_setup();
        let off = [GratingPulse::off(); 3];
        assert!(matches!(
            classical_mc(&seq, &ensemble, &off, DetectionMode::Neutral, 50_000, 1),
            Err(Error::Domain(_))
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        /// The kernel quadrature agrees with the convolution evaluation
        /// across random pulses, orders, and shears.
        #[test]
        fn kernel_quadrature_matches_convolution(
            n0 in 0.0f64..12.0,
            phi0 in -5.0f64..5.0,
            xi in -1.5f64..1.5,
            n in -4i32..=4,
        ) {
            let pulse = GratingPulse::new(n0, phi0).unwrap();
            let spec = QuadratureSpec::default();
            let closed = tl_quantum(n, xi, &pulse).unwrap();
            let oracle = B_by_kernel_quadrature(n, xi, &pulse, &spec).unwrap();
            prop_assert!(
                (closed - oracle).norm() <= 1e-9,
                "mismatch: {} vs {}", closed, oracle
            );
        }

        /// The sphere quadrature agrees with the closed kernel across
        /// random shears and scattering strengths.
        #[test]
        fn sphere_quadrature_matches_closed_form(
            xi in 0.0f64..2.0,
            n_rayleigh in 0.0f64..12.0,
            n in 0i32..=3,
        ) {
            let spec = QuadratureSpec::default();
            let closed = rayleigh_R(n, xi, n_rayleigh).unwrap();
            let oracle = R_by_sphere_quadrature(n, xi, n_rayleigh, &spec).unwrap();
            prop_assert!(
                (closed - oracle).abs() <= 1e-8,
                "mismatch: {} vs {}", closed, oracle
            );
        }
    }
}
