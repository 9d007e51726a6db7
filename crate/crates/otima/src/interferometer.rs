//! Assembly of three grating pulses and free flight into interference
//! patterns.
//!
//! The sequence is: pulse 1 at t = 0, pulse 2 after the delay T₁ = T,
//! pulse 3 after a further T₂ = N·T + τ, and detection. Between pulses the
//! particles fly freely (with an optional constant acceleration along the
//! grating vector). The initial cloud is assumed spatially incoherent on
//! the scale of the grating period and is characterized by its transverse
//! momentum distribution, entering only through the Fourier transform
//! D̃(s) of that distribution.
//!
//! All observables are Fourier series in the detection coordinate with
//! coefficients built from products of single-pulse Talbot-Lau
//! coefficients, the dimensionless shear arguments being delay ratios
//! against the Talbot time T_T = m·d²/h. In the resonant configuration
//! (sharply peaked D̃, delays near integer ratios) each Fourier order ℓ
//! contributes a single product term; the general two-interval form keeps
//! the full double sum and is used to validate the resonant approximation.
//!
//! Detection either counts transmitted neutral particles behind a third
//! masking pulse or counts the ions that pulse produces (inverse mode).

use num_complex::Complex64;

use crate::constants::{HBAR, PLANCK};
use crate::error::{Error, Result};
use crate::grating::{inverse_mask, tl_coefficient, tl_mask, CoefficientModel, GratingPulse};

/// Relative tail threshold for the Fourier-order truncation: orders beyond
/// the last |S_ℓ| > TAIL_RATIO·|S₀| are dropped.
const TAIL_RATIO: f64 = 1e-14;

/// Hard cap on the Fourier order of the detection signal.
const MAX_FOURIER_ORDER: i32 = 64;

/// Coherence-function weights below this threshold are treated as zero when
/// windowing the general double sum (e^{−K²/2} with K ≈ 9.1).
const COHERENCE_FLOOR: f64 = 1e-18;

/// Largest number of terms admitted in the inner sum of the general
/// configuration before the request is rejected as unconverged.
const MAX_WINDOW_TERMS: usize = 4096;

/// Timing and geometry of the three-pulse sequence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseSequence {
    /// First pulse separation T₁ = T (s).
    pub delay: f64,
    /// Integer delay ratio N ≥ 1; the second separation is T₂ = N·T + τ.
    pub multiple: u32,
    /// Detuning τ (s) of the second separation, |τ| < T.
    pub detuning: f64,
    /// Constant acceleration along the grating vector (m/s²).
    pub acceleration: f64,
    /// Grating period d (m).
    pub period: f64,
}

impl PulseSequence {
    /// Validating constructor.
    pub fn new(
        delay: f64,
        multiple: u32,
        detuning: f64,
        acceleration: f64,
        period: f64,
    ) -> Result<Self> {
        if !(delay > 0.0) || !delay.is_finite() {
            return Err(Error::Domain(format!(
                "pulse delay must be positive, got {delay}"
            )));
        }
        if multiple < 1 {
            return Err(Error::Domain("delay ratio N must be at least 1".into()));
        }
        if !(detuning.abs() < delay) {
            return Err(Error::Domain(format!(
                "detuning must satisfy |tau| < T, got tau = {detuning}, T = {delay}"
            )));
        }
        if !(period > 0.0) || !acceleration.is_finite() {
            return Err(Error::Domain(format!(
                "invalid sequence: period {period}, acceleration {acceleration}"
            )));
        }
        Ok(PulseSequence {
            delay,
            multiple,
            detuning,
            acceleration,
            period,
        })
    }

    /// First pulse separation T₁.
    pub fn t1(&self) -> f64 {
        self.delay
    }

    /// Second pulse separation T₂ = N·T + τ.
    pub fn t2(&self) -> f64 {
        f64::from(self.multiple) * self.delay + self.detuning
    }

    /// Fringe shift of this sequence under its own acceleration,
    /// δx = −(a/2)·T₂·(T₁ + T₂).
    pub fn shift(&self) -> f64 {
        -0.5 * self.acceleration * self.t2() * (self.t1() + self.t2())
    }
}

/// Statistical model of the initial particle cloud: a transverse Gaussian
/// momentum distribution, spatially incoherent over the cloud extension.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ensemble {
    /// Particle mass (kg).
    pub mass: f64,
    /// Transverse velocity spread Δv (m/s), one standard deviation.
    pub velocity_spread: f64,
    /// Cloud extension Δx (m); must dwarf the grating period.
    pub cloud_extension: f64,
}

impl Ensemble {
    /// Validating constructor.
    pub fn new(mass: f64, velocity_spread: f64, cloud_extension: f64) -> Result<Self> {
        if !(mass > 0.0) || !(velocity_spread > 0.0) || !(cloud_extension > 0.0) {
            return Err(Error::Domain(format!(
                "ensemble parameters must be positive: mass {mass}, velocity spread \
                 {velocity_spread}, cloud extension {cloud_extension}"
            )));
        }
        Ok(Ensemble {
            mass,
            velocity_spread,
            cloud_extension,
        })
    }

    /// Checks the incoherent-illumination assumption Δx ≫ d. Extensions
    /// below 100·d are rejected; between 100·d and 1000·d a warning is
    /// returned.
    pub fn validate_against_period(&self, period: f64) -> Result<Option<String>> {
        if self.cloud_extension < 100.0 * period {
            return Err(Error::Domain(format!(
                "cloud extension {} m is below 100 grating periods ({} m); the incoherent \
                 ensemble model does not apply",
                self.cloud_extension,
                100.0 * period
            )));
        }
        if self.cloud_extension < 1000.0 * period {
            return Ok(Some(format!(
                "cloud extension {} m is below 1000 grating periods; the incoherent ensemble \
                 model is marginal",
                self.cloud_extension
            )));
        }
        Ok(None)
    }

    /// Fourier transform of the momentum distribution,
    /// D̃(s) = exp[−(s·m·Δv)²/(2ħ²)] for the Gaussian model. D̃(0) = 1 and
    /// D̃ decreases monotonically in |s|.
    pub fn coherence_ft(&self, s: f64) -> f64 {
        let u = s * self.mass * self.velocity_spread / HBAR;
        (-0.5 * u * u).exp()
    }
}

/// Fourier transform of the ensemble's momentum distribution at spatial
/// separation `s` (free-function form of [`Ensemble::coherence_ft`]).
pub fn coherence_ft(ensemble: &Ensemble, s: f64) -> f64 {
    ensemble.coherence_ft(s)
}

/// How the third pulse is read out.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DetectionMode {
    /// Count particles that survive the third pulse unionized.
    Neutral,
    /// Count the ions the third pulse produces.
    Inverse,
}

/// Fully assembled detection signal in Fourier form.
#[derive(Debug, Clone)]
pub struct FringeResult {
    /// Signal coefficients S_ℓ for ℓ = −L..=L (index ℓ + L); the
    /// acceleration-induced fringe shift is already folded in, so
    /// S(x_S) = Σ_ℓ S_ℓ·exp(2πiℓx_S/d). Satisfies S_{−ℓ} = conj(S_ℓ).
    pub coefficients: Vec<Complex64>,
    /// Mean signal S₀ (the transmissivity in neutral mode).
    pub s0: f64,
    /// Full fringe visibility (S_max − S_min)/(S_max + S_min) ∈ [0, 1].
    pub visibility: f64,
    /// Sinusoidal visibility 2|S₁|/S₀ (may exceed 1).
    pub visibility_sin: f64,
    /// Fringe shift δx (m) produced by the acceleration.
    pub shift: f64,
    /// Non-fatal diagnostics (e.g. marginal cloud extension).
    pub warnings: Vec<String>,
}

impl FringeResult {
    /// Largest retained Fourier order L.
    pub fn order_count(&self) -> i32 {
        (self.coefficients.len() as i32 - 1) / 2
    }

    /// Coefficient S_ℓ (zero beyond the retained orders).
    pub fn coefficient(&self, ell: i32) -> Complex64 {
        let idx = ell + self.order_count();
        if idx < 0 {
            return Complex64::new(0.0, 0.0);
        }
        match self.coefficients.get(idx as usize) {
            Some(v) => *v,
            None => Complex64::new(0.0, 0.0),
        }
    }

    /// Signal S(x_S) at detector offset x_S = `x_over_d`·d.
    pub fn signal_at(&self, x_over_d: f64) -> f64 {
        let l = self.order_count();
        let mut sum = Complex64::new(0.0, 0.0);
        for ell in -l..=l {
            let phase = 2.0 * std::f64::consts::PI * f64::from(ell) * x_over_d;
            sum += self.coefficient(ell) * Complex64::from_polar(1.0, phase);
        }
        sum.re
    }
}

/// Talbot time T_T = m·d²/h: the self-imaging timescale of a pulsed grating.
pub fn talbot_time(mass: f64, period: f64) -> Result<f64> {
    if !(mass > 0.0) || !(period > 0.0) {
        return Err(Error::Domain(format!(
            "talbot time needs positive mass and period, got {mass}, {period}"
        )));
    }
    Ok(mass * period * period / PLANCK)
}

/// Free-fall displacement a·t²/2 over a flight time t (m): how far the
/// cloud falls between release and detection, used for apparatus sizing.
pub fn free_fall_drop(acceleration: f64, time: f64) -> f64 {
    0.5 * acceleration * time * time
}

/// Fringe shift δx = −(a/2)·N(N+1)·T² of the resonant (τ = 0) sequence.
pub fn fringe_shift(acceleration: f64, multiple: u32, delay: f64) -> f64 {
    let n = f64::from(multiple);
    -0.5 * acceleration * n * (n + 1.0) * delay * delay
}

/// Outcome of evaluating one Fourier-order term.
enum TermValue {
    /// Fully evaluated coefficient.
    Known(Complex64),
    /// Evaluation hit an argument-range limit; the coefficient magnitude is
    /// bounded by the enclosed value.
    Bounded(f64),
}

/// Evaluates D̃·B⁽¹⁾·B⁽²⁾(·B⁽³⁾) for one Fourier order of the resonant
/// configuration, bounding instead of failing when a coefficient argument
/// exceeds the supported range (the true factor is then replaced by its
/// upper bound B₀(0) to decide whether the term can be dropped).
#[allow(clippy::too_many_arguments)]
fn resonant_term(
    ell: i32,
    seq: &PulseSequence,
    talbot: f64,
    coherence: &dyn Fn(f64) -> f64,
    model: CoefficientModel,
    first: &GratingPulse,
    second: &GratingPulse,
    third: Option<(&GratingPulse, DetectionMode)>,
) -> Result<TermValue> {
    let n = i64::from(seq.multiple);
    let order1 = (-n * i64::from(ell)) as i32;
    let order2 = ((n + 1) * i64::from(ell)) as i32;
    let xi1 = f64::from(ell) * seq.detuning / talbot;
    let xi2 = f64::from(ell) * seq.t2() / talbot;
    let weight = coherence(f64::from(ell) * seq.period * seq.detuning / talbot);

    let b3 = match third {
        None => 1.0,
        Some((pulse, DetectionMode::Neutral)) => tl_mask(-ell, pulse.n0)?,
        Some((pulse, DetectionMode::Inverse)) => inverse_mask(-ell, pulse.n0)?,
    };

    let mut bounded = false;
    let mut product = Complex64::new(weight * b3, 0.0);
    for (order, xi, pulse) in [(order1, xi1, first), (order2, xi2, second)] {
        match tl_coefficient(model, order, xi, pulse) {
            Ok(c) => product *= c.value,
            Err(Error::Domain(_)) => {
                // Out of supported Bessel range: bound this factor by the
                // mean transmission B₀(0) ≥ |B_n(ξ)|.
                bounded = true;
                product *= tl_mask(0, pulse.n0)?;
            }
            Err(e) => return Err(e),
        }
    }
    if bounded {
        Ok(TermValue::Bounded(product.norm()))
    } else {
        Ok(TermValue::Known(product))
    }
}

/// Shared ℓ-truncation driver: evaluates coefficients for ℓ = 0.. by the
/// supplied closure until the tail is provably below TAIL_RATIO·|C₀|,
/// returning C_0..=C_L.
fn truncated_orders(mut term: impl FnMut(i32) -> Result<TermValue>) -> Result<Vec<Complex64>> {
    let c0 = match term(0)? {
        TermValue::Known(c) => c,
        TermValue::Bounded(_) => {
            return Err(Error::Precision(
                "leading Fourier order could not be evaluated".into(),
            ));
        }
    };
    let reference = c0.norm().max(1e-30);
    let mut coefficients = vec![c0];
    let mut small_streak = 0;
    for ell in 1..=MAX_FOURIER_ORDER {
        match term(ell)? {
            TermValue::Known(c) => {
                coefficients.push(c);
                if c.norm() < TAIL_RATIO * reference {
                    small_streak += 1;
                    if small_streak >= 2 {
                        return Ok(coefficients);
                    }
                } else {
                    small_streak = 0;
                }
            }
            TermValue::Bounded(bound) => {
                // The shear arguments grow monotonically with ℓ, so every
                // later order is out of range as well; the tail is safe to
                // drop only if its first member provably is.
                if bound < TAIL_RATIO * reference {
                    return Ok(coefficients);
                }
                return Err(Error::Precision(format!(
                    "Fourier order {ell} exceeds the supported coefficient range and its bound \
                     {bound:.3e} is not negligible against |S0| = {reference:.3e}"
                )));
            }
        }
    }
    let last = coefficients.last().map_or(0.0, |c| c.norm());
    if last < TAIL_RATIO * reference {
        Ok(coefficients)
    } else {
        Err(Error::Precision(format!(
            "Fourier series not converged by order {MAX_FOURIER_ORDER}: |S_L|/|S_0| = {:.3e}",
            last / reference
        )))
    }
}

/// Fourier coefficients (orders 0..=L) of the particle density just before
/// the third pulse, in the resonant configuration, for a caller-supplied
/// coherence function.
pub fn density_components_resonant_with(
    seq: &PulseSequence,
    ensemble: &Ensemble,
    coherence: &dyn Fn(f64) -> f64,
    pulses: &[GratingPulse; 2],
    model: CoefficientModel,
) -> Result<Vec<Complex64>> {
    ensemble.validate_against_period(seq.period)?;
    let talbot = talbot_time(ensemble.mass, seq.period)?;
    truncated_orders(|ell| {
        resonant_term(
            ell, seq, talbot, coherence, model, &pulses[0], &pulses[1], None,
        )
    })
}

/// Fourier coefficients of the pre-detection density with the ensemble's
/// own Gaussian coherence function.
pub fn density_components_resonant(
    seq: &PulseSequence,
    ensemble: &Ensemble,
    pulses: &[GratingPulse; 2],
    model: CoefficientModel,
) -> Result<Vec<Complex64>> {
    density_components_resonant_with(seq, ensemble, &|s| ensemble.coherence_ft(s), pulses, model)
}

/// Particle density w(x) just before the third pulse, evaluated on a grid
/// of positions given in units of the grating period. Densities are
/// per-period normalized (the overall 1/Δx of the extended cloud is
/// dropped); with all pulses off the result is identically 1. The
/// acceleration-induced shift displaces the pattern by δx.
pub fn density_resonant(
    seq: &PulseSequence,
    ensemble: &Ensemble,
    pulses: &[GratingPulse; 2],
    model: CoefficientModel,
    x_over_d: &[f64],
) -> Result<Vec<f64>> {
    let components = density_components_resonant(seq, ensemble, pulses, model)?;
    Ok(evaluate_series(
        &components,
        seq.shift() / seq.period,
        x_over_d,
    ))
}

/// Fourier coefficients (orders 0..=L) of the density for arbitrary pulse
/// separations T₁, T₂ — the full double-sum form without the resonance
/// approximation, in the field-free case. The inner sum is windowed by the
/// decay of the coherence function.
pub fn density_components_general(
    t1: f64,
    t2: f64,
    period: f64,
    ensemble: &Ensemble,
    pulses: &[GratingPulse; 2],
    model: CoefficientModel,
) -> Result<Vec<Complex64>> {
    if !(t1 > 0.0) || !(t2 > 0.0) {
        return Err(Error::Domain(format!(
            "pulse separations must be positive, got {t1}, {t2}"
        )));
    }
    ensemble.validate_against_period(period)?;
    let talbot = talbot_time(ensemble.mass, period)?;

    // Half-width of the n-window: |D̃| ≥ COHERENCE_FLOOR within it.
    let k = (-2.0 * COHERENCE_FLOOR.ln()).sqrt();
    let reach = k * HBAR * talbot / (period * ensemble.mass * ensemble.velocity_spread * t1);
    if 2.0 * reach + 1.0 > MAX_WINDOW_TERMS as f64 {
        return Err(Error::Precision(format!(
            "coherence window spans {:.1e} terms; the velocity spread is too small for the \
             double-sum evaluation",
            2.0 * reach
        )));
    }

    truncated_orders(|ell| {
        let centre = -f64::from(ell) * t2 / t1;
        let lo = (centre - reach).floor() as i64;
        let hi = (centre + reach).ceil() as i64;
        let mut sum = Complex64::new(0.0, 0.0);
        for n in lo..=hi {
            let time = n as f64 * t1 + f64::from(ell) * t2;
            let weight = ensemble.coherence_ft(period * time / talbot);
            if weight < COHERENCE_FLOOR {
                continue;
            }
            let b1 = tl_coefficient(model, n as i32, time / talbot, &pulses[0])?;
            let b2 = tl_coefficient(
                model,
                (i64::from(ell) - n) as i32,
                f64::from(ell) * t2 / talbot,
                &pulses[1],
            )?;
            sum += weight * b1.value * b2.value;
        }
        Ok(TermValue::Known(sum))
    })
}

/// Density for arbitrary separations on a position grid in units of the
/// period (field-free configuration).
pub fn density_general(
    t1: f64,
    t2: f64,
    period: f64,
    ensemble: &Ensemble,
    pulses: &[GratingPulse; 2],
    model: CoefficientModel,
    x_over_d: &[f64],
) -> Result<Vec<f64>> {
    let components = density_components_general(t1, t2, period, ensemble, pulses, model)?;
    Ok(evaluate_series(&components, 0.0, x_over_d))
}

/// Evaluates Re Σ_ℓ C_ℓ·e^{2πiℓ(x + δx)/d} from one-sided coefficients.
fn evaluate_series(components: &[Complex64], shift_over_d: f64, x_over_d: &[f64]) -> Vec<f64> {
    x_over_d
        .iter()
        .map(|&x| {
            let mut sum = components[0].re;
            for (ell, c) in components.iter().enumerate().skip(1) {
                let phase = 2.0 * std::f64::consts::PI * ell as f64 * (x + shift_over_d);
                // C_{−ℓ} = conj(C_ℓ) folds the two orders into one term.
                sum += 2.0 * (c * Complex64::from_polar(1.0, phase)).re;
            }
            sum
        })
        .collect()
}

/// Assembles the full detection signal for a caller-supplied coherence
/// function. The acceleration-induced shift is folded into the returned
/// coefficients.
pub fn fringe_with_coherence(
    seq: &PulseSequence,
    ensemble: &Ensemble,
    coherence: &dyn Fn(f64) -> f64,
    pulses: &[GratingPulse; 3],
    model: CoefficientModel,
    mode: DetectionMode,
) -> Result<FringeResult> {
    let warning = ensemble.validate_against_period(seq.period)?;
    let talbot = talbot_time(ensemble.mass, seq.period)?;
    let one_sided = truncated_orders(|ell| {
        resonant_term(
            ell,
            seq,
            talbot,
            coherence,
            model,
            &pulses[0],
            &pulses[1],
            Some((&pulses[2], mode)),
        )
    })?;

    let shift = seq.shift();
    let l = (one_sided.len() - 1) as i32;
    let mut coefficients = vec![Complex64::new(0.0, 0.0); one_sided.len() * 2 - 1];
    for (ell, c) in one_sided.iter().enumerate() {
        let phase = -2.0 * std::f64::consts::PI * ell as f64 * shift / seq.period;
        let shifted = c * Complex64::from_polar(1.0, phase);
        coefficients[(l as usize) + ell] = shifted;
        coefficients[(l as usize) - ell] = shifted.conj();
    }

    let s0 = one_sided[0].re;
    let visibility_sin = if s0 > 0.0 {
        2.0 * one_sided.get(1).map_or(0.0, |c| c.norm()) / s0
    } else {
        0.0
    };

    let mut result = FringeResult {
        coefficients,
        s0,
        visibility: 0.0,
        visibility_sin,
        shift,
        warnings: warning.into_iter().collect(),
    };
    result.visibility = visibility_from_grid(&result, 1024);
    Ok(result)
}

/// Assembles the full detection signal: Fourier coefficients, mean signal,
/// both visibilities, and the fringe shift.
pub fn fringe(
    seq: &PulseSequence,
    ensemble: &Ensemble,
    pulses: &[GratingPulse; 3],
    model: CoefficientModel,
    mode: DetectionMode,
) -> Result<FringeResult> {
    fringe_with_coherence(
        seq,
        ensemble,
        &|s| ensemble.coherence_ft(s),
        pulses,
        model,
        mode,
    )
}

/// Detection signal S(x_S) for a detector (third-grating) offset x_S in
/// meters. Real and non-negative.
#[allow(clippy::too_many_arguments)]
pub fn signal(
    seq: &PulseSequence,
    ensemble: &Ensemble,
    pulses: &[GratingPulse; 3],
    model: CoefficientModel,
    mode: DetectionMode,
    x_s: f64,
) -> Result<f64> {
    let result = fringe(seq, ensemble, pulses, model, mode)?;
    Ok(result.signal_at(x_s / seq.period))
}

/// Sinusoidal visibility V_sin = 2|S₁|/S₀ of the detection signal. Errors
/// with a degenerate-signal condition when the mean signal vanishes.
pub fn visibility_sin(
    seq: &PulseSequence,
    ensemble: &Ensemble,
    pulses: &[GratingPulse; 3],
    model: CoefficientModel,
    mode: DetectionMode,
) -> Result<f64> {
    let result = fringe(seq, ensemble, pulses, model, mode)?;
    if result.s0 <= 0.0 {
        return Err(Error::Degenerate(format!(
            "mean signal S0 = {} leaves the sinusoidal visibility undefined",
            result.s0
        )));
    }
    Ok(result.visibility_sin)
}

/// Full fringe visibility V = (S_max − S_min)/(S_max + S_min) from a dense
/// sampling of the signal over one period; `grid_size` ≥ 256.
pub fn visibility_full(
    seq: &PulseSequence,
    ensemble: &Ensemble,
    pulses: &[GratingPulse; 3],
    model: CoefficientModel,
    mode: DetectionMode,
    grid_size: usize,
) -> Result<f64> {
    if grid_size < 256 {
        return Err(Error::Domain(format!(
            "visibility grid must have at least 256 points, got {grid_size}"
        )));
    }
    let result = fringe(seq, ensemble, pulses, model, mode)?;
    Ok(visibility_from_grid(&result, grid_size))
}

/// (S_max − S_min)/(S_max + S_min) over one period of the reconstructed
/// signal; zero for a flat (or empty) signal.
fn visibility_from_grid(result: &FringeResult, grid_size: usize) -> f64 {
    let mut s_min = f64::INFINITY;
    let mut s_max = f64::NEG_INFINITY;
    for i in 0..grid_size {
        let s = result.signal_at(i as f64 / grid_size as f64);
        s_min = s_min.min(s);
        s_max = s_max.max(s);
    }
    if s_max + s_min <= 0.0 {
        0.0
    } else {
        (s_max - s_min) / (s_max + s_min)
    }
}
