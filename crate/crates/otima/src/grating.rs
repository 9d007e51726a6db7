//! Everything attached to a single standing-wave grating pulse.
//!
//! A short laser pulse imprints two things on a polarizable particle: a
//! position-dependent ionization probability (particles at antinodes absorb
//! on average n₀ photons and are removed when ionized) and a dipole phase
//! (peak value φ₀). Both effects combine into the complex transmission
//! function
//!
//! ```text
//! t(x) = exp[(−n₀/2 + iφ₀)·cos²(πx/d)]
//! ```
//!
//! whose Fourier coefficients b_n feed the Talbot-Lau coefficients
//!
//! ```text
//! B_n(ξ) = Σ_j b_j·conj(b_{j−n})·exp[iπξ(n−2j)]
//! ```
//!
//! — the only quantities the interferometer ever needs. The convolution sum
//! above is the canonical evaluator; an equivalent closed form in terms of
//! Bessel functions of the parameters ζ_ion and ζ_coh is kept as an
//! independent cross-check and doubles as the evaluator for the classical
//! (trajectory-model) coefficients, which share its functional form with
//! non-oscillatory arguments. Elastic Rayleigh scattering of grating
//! photons decoheres the motion; its effect is a convolution of the
//! coherent coefficients with the kernel coefficients R_n(ξ).
//!
//! Sign convention: positive φ₀ describes high-field-seeking particles
//! (polarizability ratio β > 0); φ₀ = n₀/(2β) when a pulse is derived from
//! material data.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::materials::{beta, rayleigh_ratio, Particle};
use crate::specfun;

/// Relative cut-off below which Fourier coefficients are treated as zero.
const TABLE_CUTOFF: f64 = 1e-16;

/// One standing-wave ionization grating pulse.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GratingPulse {
    /// Peak mean number of absorbed photons n₀ ≥ 0 (at an antinode).
    pub n0: f64,
    /// Peak dipole phase shift φ₀ (rad); sign follows the material's β.
    pub phi0: f64,
    /// Peak mean number of elastically scattered photons n_R ≥ 0.
    pub n_rayleigh: f64,
}

impl GratingPulse {
    /// Pulse with ionization strength `n0` and phase strength `phi0` and no
    /// elastic scattering.
    pub fn new(n0: f64, phi0: f64) -> Result<Self> {
        Self::with_rayleigh(n0, phi0, 0.0)
    }

    /// Pulse that additionally scatters `n_rayleigh` photons elastically at
    /// the antinode.
    pub fn with_rayleigh(n0: f64, phi0: f64, n_rayleigh: f64) -> Result<Self> {
        if !(n0 >= 0.0) || !n0.is_finite() || !phi0.is_finite() {
            return Err(Error::Domain(format!(
                "pulse strengths must be finite with n0 >= 0, got n0 = {n0}, phi0 = {phi0}"
            )));
        }
        if !(n_rayleigh >= 0.0) || !n_rayleigh.is_finite() {
            return Err(Error::Domain(format!(
                "mean scattered photon number must be >= 0, got {n_rayleigh}"
            )));
        }
        Ok(GratingPulse {
            n0,
            phi0,
            n_rayleigh,
        })
    }

    /// Pulse derived from material data: the phase follows from
    /// φ₀ = n₀/(2β) and the scattering strength from the cross-section
    /// ratio, n_R = n₀·σ_R/σ_abs.
    pub fn from_particle(species: &Particle, wavelength: f64, n0: f64) -> Result<Self> {
        let b = beta(&species.material)?;
        if b == 0.0 {
            return Err(Error::Domain(
                "material has zero beta (no absorption); construct the pulse from n0 and phi0 \
                 directly"
                    .into(),
            ));
        }
        let ratio = rayleigh_ratio(species, wavelength)?;
        Self::with_rayleigh(n0, n0 / (2.0 * b), n0 * ratio)
    }

    /// A switched-off pulse: t ≡ 1.
    pub fn off() -> Self {
        GratingPulse {
            n0: 0.0,
            phi0: 0.0,
            n_rayleigh: 0.0,
        }
    }

    fn check(&self) -> Result<()> {
        if !(self.n0 >= 0.0) || !(self.n_rayleigh >= 0.0) || !self.phi0.is_finite() {
            return Err(Error::Domain(format!("invalid pulse {self:?}")));
        }
        Ok(())
    }
}

/// One Talbot-Lau coefficient together with the order and shear argument it
/// was evaluated at.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TLCoefficient {
    /// Coefficient value; |value| ≤ 1 for any physical pulse.
    pub value: Complex64,
    /// Fourier order n.
    pub order: i32,
    /// Dimensionless shear argument ξ.
    pub xi: f64,
}

/// Which dynamical model the coefficients describe.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoefficientModel {
    /// Coherent wave evolution; elastic scattering ignored.
    Quantum,
    /// Classical trajectories with the same gratings.
    Classical,
    /// Coherent evolution convolved with the elastic-scattering kernel of
    /// the pulse (reduces to `Quantum` at n_R = 0).
    Decohered,
}

/// Evaluates the Talbot-Lau coefficient of `pulse` for the requested model.
pub fn tl_coefficient(
    model: CoefficientModel,
    n: i32,
    xi: f64,
    pulse: &GratingPulse,
) -> Result<TLCoefficient> {
    let value = match model {
        CoefficientModel::Quantum => tl_quantum(n, xi, pulse)?,
        CoefficientModel::Classical => tl_classical(n, xi, pulse)?,
        CoefficientModel::Decohered => tl_decohered(n, xi, pulse)?,
    };
    Ok(TLCoefficient {
        value,
        order: n,
        xi,
    })
}

/// Complex grating transmission t(x) = exp[(−n₀/2 + iφ₀)·cos²(πx/d)].
///
/// d-periodic; |t|² ranges from e^{−n₀} at antinodes to 1 at nodes.
pub fn transmission(x: f64, d: f64, pulse: &GratingPulse) -> Result<Complex64> {
    pulse.check()?;
    if !(d > 0.0) {
        return Err(Error::Domain(format!(
            "grating period must be positive, got {d}"
        )));
    }
    let c2 = (std::f64::consts::PI * x / d).cos().powi(2);
    Ok((Complex64::new(-0.5 * pulse.n0, pulse.phi0) * c2).exp())
}

/// Table of grating Fourier coefficients b_n = e^w·I_n(w) with
/// w = −n₀/4 + iφ₀/2, stored for n = 0..=J and extended by the symmetry
/// b_{−n} = b_n. J is chosen per pulse so that the dropped tail is below
/// 1e-16 of the largest coefficient.
#[derive(Debug, Clone)]
pub struct FourierTable {
    b: Vec<Complex64>,
}

impl FourierTable {
    /// Builds the coefficient table for one pulse.
    pub fn new(pulse: &GratingPulse) -> Result<Self> {
        pulse.check()?;
        let w = Complex64::new(-0.25 * pulse.n0, 0.5 * pulse.phi0);
        if w.norm() == 0.0 {
            return Ok(FourierTable {
                b: vec![Complex64::new(1.0, 0.0)],
            });
        }
        let prefactor = w.exp();
        let mut n_max = ((w.norm().ceil() as usize) + 24).min(specfun::MAX_ORDER as usize);
        loop {
            let bessel = specfun::bessel_i_all(n_max, w)?;
            let b: Vec<Complex64> = bessel.iter().map(|i| prefactor * i).collect();
            let peak = b.iter().map(|v| v.norm()).fold(0.0, f64::max);
            let threshold = TABLE_CUTOFF * peak;
            if b[n_max].norm() < threshold {
                // Trim entries past the last coefficient above threshold.
                let keep = b.iter().rposition(|v| v.norm() >= threshold).unwrap_or(0);
                return Ok(FourierTable {
                    b: b[..=keep].to_vec(),
                });
            }
            if n_max >= specfun::MAX_ORDER as usize {
                return Err(Error::Precision(format!(
                    "grating Fourier table did not converge by order {n_max} \
                     (n0 = {}, phi0 = {})",
                    pulse.n0, pulse.phi0
                )));
            }
            n_max = (2 * n_max).min(specfun::MAX_ORDER as usize);
        }
    }

    /// Largest stored order J.
    pub fn max_order(&self) -> i32 {
        (self.b.len() - 1) as i32
    }

    /// Coefficient b_n, zero beyond the stored range.
    pub fn get(&self, n: i32) -> Complex64 {
        match self.b.get(n.unsigned_abs() as usize) {
            Some(v) => *v,
            None => Complex64::new(0.0, 0.0),
        }
    }

    /// Convolution sum B_n(ξ) = Σ_j b_j·conj(b_{j−n})·e^{iπξ(n−2j)} over the
    /// stored support.
    pub fn convolve(&self, n: i32, xi: f64) -> Complex64 {
        let j_max = self.max_order();
        let lo = (-j_max).max(n - j_max);
        let hi = j_max.min(n + j_max);
        let mut sum = Complex64::new(0.0, 0.0);
        for j in lo..=hi {
            let phase = std::f64::consts::PI * xi * f64::from(n - 2 * j);
            sum += self.get(j) * self.get(j - n).conj() * Complex64::from_polar(1.0, phase);
        }
        sum
    }
}

/// Grating Fourier coefficient b_n = exp(−n₀/4 + iφ₀/2)·I_n(−n₀/4 + iφ₀/2).
pub fn fourier_b(n: i32, pulse: &GratingPulse) -> Result<Complex64> {
    let table = FourierTable::new(pulse)?;
    Ok(table.get(n))
}

/// Quantum Talbot-Lau coefficient B_n(ξ), evaluated through the convolution
/// sum over the pulse's Fourier coefficients. Canonical evaluator for all
/// downstream physics; ξ may be any real number.
pub fn tl_quantum(n: i32, xi: f64, pulse: &GratingPulse) -> Result<Complex64> {
    let table = FourierTable::new(pulse)?;
    Ok(table.convolve(n, xi))
}

/// Grating mask coefficient B_n(0) = e^{−n₀/2}·I_n(−n₀/2): the Fourier
/// coefficients of the transmission probability |t(x)|². Real; odd orders
/// are negative; B₀(0) ∈ (0, 1] is the mean transmission.
pub fn tl_mask(n: i32, n0: f64) -> Result<f64> {
    if !(n0 >= 0.0) || !n0.is_finite() {
        return Err(Error::Domain(format!(
            "mean photon number must be >= 0, got {n0}"
        )));
    }
    let x = 0.5 * n0;
    let magnitude = (-x).exp() * specfun::bessel_i_real(n.unsigned_abs() as i32, x)?;
    // I_n(−x) = (−1)^n I_n(x).
    Ok(if n % 2 == 0 { magnitude } else { -magnitude })
}

/// Ion-detection complement of the mask: δ_{n,0} − e^{−n₀/2}·I_n(−n₀/2),
/// the Fourier coefficients of the ionization probability 1 − |t(x)|².
pub fn inverse_mask(n: i32, n0: f64) -> Result<f64> {
    let kronecker = if n == 0 { 1.0 } else { 0.0 };
    Ok(kronecker - tl_mask(n, n0)?)
}

/// Closed-form cross-check of [`tl_quantum`]: the same coefficient through
/// the branch-resolved Bessel expression with the oscillatory parameters
/// ζ_ion = (n₀/2)·cos(πξ) and ζ_coh = φ₀·sin(πξ).
///
/// Retained purely to certify the canonical convolution sum against an
/// algebraically independent evaluation path; simulation code should call
/// [`tl_quantum`].
pub fn tl_quantum_closed_form(n: i32, xi: f64, pulse: &GratingPulse) -> Result<Complex64> {
    pulse.check()?;
    let zeta_ion = 0.5 * pulse.n0 * (std::f64::consts::PI * xi).cos();
    let zeta_coh = pulse.phi0 * (std::f64::consts::PI * xi).sin();
    Ok(Complex64::new(
        tl_closed_form(n, zeta_ion, zeta_coh, pulse.n0)?,
        0.0,
    ))
}

/// Classical analog of the Talbot-Lau coefficient: the same closed form as
/// the quantum coefficient but with the non-oscillatory parameters
/// ζ_ion = n₀/2 and ζ_coh = φ₀·πξ, so no revivals occur.
pub fn tl_classical(n: i32, xi: f64, pulse: &GratingPulse) -> Result<Complex64> {
    pulse.check()?;
    let zeta_ion = 0.5 * pulse.n0;
    let zeta_coh = pulse.phi0 * std::f64::consts::PI * xi;
    Ok(Complex64::new(
        tl_closed_form(n, zeta_ion, zeta_coh, pulse.n0)?,
        0.0,
    ))
}

/// Closed-form Talbot-Lau coefficient for given ζ parameters (quantum when
/// they are the oscillatory pair, classical otherwise):
///
/// ```text
/// B_n = e^{−n₀/2}·(√A/√C)^n·I_n(√A·√C),   A = ζ_coh − ζ_ion,
///                                          C = −(ζ_coh + ζ_ion),
/// ```
///
/// with principal square roots. The result is always real: when A·C < 0 the
/// Bessel argument is imaginary and I_n reduces to the ordinary J_n with the
/// phases of the two factors cancelling. Coefficients of negative order
/// follow from swapping A and C.
pub(crate) fn tl_closed_form(n: i32, zeta_ion: f64, zeta_coh: f64, n0: f64) -> Result<f64> {
    if !(n0 >= 0.0) || !n0.is_finite() {
        return Err(Error::Domain(format!(
            "mean photon number must be >= 0, got {n0}"
        )));
    }
    let (mut a, mut c) = (zeta_coh - zeta_ion, -(zeta_coh + zeta_ion));
    if n < 0 {
        std::mem::swap(&mut a, &mut c);
    }
    let m = n.unsigned_abs() as i32;
    let prefactor = (-0.5 * n0).exp();

    if a == 0.0 || c == 0.0 {
        // Degenerate axes: only the leading series term survives. For c = 0
        // that term is e^{−n₀/2}·(a/2)^m/m!; for a = 0 it vanishes unless
        // m = 0.
        if a == 0.0 {
            return Ok(if m == 0 { prefactor } else { 0.0 });
        }
        let mut t = prefactor;
        for k in 1..=m {
            t *= a / f64::from(2 * k);
        }
        return Ok(t);
    }

    // The factor (A/C)^{m/2} overflows long before the product with the
    // Bessel function does; fall back on the everywhere-convergent power
    // series when the split evaluation cannot be represented.
    if f64::from(m) * (a.abs() / c.abs()).log10().abs() / 2.0 >= 200.0 {
        return Ok(closed_form_series(m, a, c, prefactor));
    }

    let ratio_pow = (a.abs() / c.abs()).powf(0.5 * f64::from(m));
    let y = (a.abs() * c.abs()).sqrt();
    if a * c > 0.0 {
        // Real Bessel branch; both parameters negative flips odd orders.
        let bessel = specfun::bessel_i_real(m, y)?;
        let sign = if a < 0.0 && m % 2 != 0 { -1.0 } else { 1.0 };
        Ok(sign * prefactor * bessel * ratio_pow)
    } else {
        // Imaginary branch: I_m(iy) = i^m·J_m(y); the phase of (√A/√C)^m
        // cancels it up to (−1)^m when A < 0.
        let bessel = specfun::bessel_j_wide(m, y)?;
        let sign = if a < 0.0 && m % 2 != 0 { -1.0 } else { 1.0 };
        Ok(sign * prefactor * bessel * ratio_pow)
    }
}

/// Power series Σ_k A^{m+k}·C^k / (2^{m+2k}·k!·(m+k)!) times the prefactor,
/// used where the ratio-form of the closed form is unrepresentable. The
/// prefactor is folded into the leading term so intermediates stay bounded.
fn closed_form_series(m: i32, a: f64, c: f64, prefactor: f64) -> f64 {
    let mut term = prefactor;
    for k in 1..=m {
        term *= a / f64::from(2 * k);
    }
    let mut sum = term;
    let mut peak = term.abs();
    let quarter_ac = 0.25 * a * c;
    for k in 0..600 {
        term *= quarter_ac / (f64::from(k + 1) * f64::from(m + k + 1));
        sum += term;
        peak = peak.max(term.abs());
        if term.abs() < 1e-17 * peak || term.abs() < 1e-305 {
            break;
        }
    }
    sum
}

/// Fourier coefficients R_n(ξ) of the elastic-scattering decoherence
/// kernel:
///
/// ```text
/// R_n(ξ) = exp{(3n_R/4)·[cos(πξ)·g(πξ) − 2/3]}·I_n[(3n_R/4)·(g(πξ) − (2/3)cos(πξ))]
/// ```
///
/// with g(q) = j₀(q) − j₁(q)/q built from spherical Bessel functions. At
/// ξ = 0 (or n_R = 0) this is δ_{n,0}: scattering never affects the
/// periodic masking, only the coherences.
#[allow(non_snake_case)]
pub fn rayleigh_R(n: i32, xi: f64, n_rayleigh: f64) -> Result<f64> {
    if !(n_rayleigh >= 0.0) || !n_rayleigh.is_finite() {
        return Err(Error::Domain(format!(
            "mean scattered photon number must be >= 0, got {n_rayleigh}"
        )));
    }
    if xi == 0.0 || n_rayleigh == 0.0 {
        // Exact algebraic limit: exponent and Bessel argument both vanish.
        return Ok(if n == 0 { 1.0 } else { 0.0 });
    }
    let q = std::f64::consts::PI * xi;
    let g = specfun::spherical_j0(q) - specfun::spherical_j1_over_x(q);
    let cosq = q.cos();
    let strength = 0.75 * n_rayleigh;
    let exponent = strength * (cosq * g - 2.0 / 3.0);
    let arg = strength * (g - 2.0 / 3.0 * cosq);
    let magnitude = specfun::bessel_i_real(n.unsigned_abs() as i32, arg.abs())?;
    // I_n(−x) = (−1)^n·I_n(x).
    let sign = if arg < 0.0 && n % 2 != 0 { -1.0 } else { 1.0 };
    Ok(sign * exponent.exp() * magnitude)
}

/// Decohered Talbot-Lau coefficient B̂_n(ξ) = Σ_j R_{n−j}(ξ)·B_j(ξ):
/// the coherent coefficients convolved with the scattering kernel of the
/// same pulse. Reduces to the quantum coefficient at n_R = 0 and to the
/// mask coefficient at ξ = 0.
pub fn tl_decohered(n: i32, xi: f64, pulse: &GratingPulse) -> Result<Complex64> {
    let table = FourierTable::new(pulse)?;
    if pulse.n_rayleigh == 0.0 {
        return Ok(table.convolve(n, xi));
    }
    // The kernel coefficients share the decay of I_j in the order, so the
    // same tail criterion as for the b-table applies.
    let mut kernel = vec![rayleigh_R(0, xi, pulse.n_rayleigh)?];
    let mut converged = false;
    for j in 1..=specfun::MAX_ORDER {
        let r = rayleigh_R(j, xi, pulse.n_rayleigh)?;
        let peak = kernel.iter().fold(r.abs(), |acc, v| acc.max(v.abs()));
        kernel.push(r);
        if r.abs() < TABLE_CUTOFF * peak {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::Precision(format!(
            "scattering kernel not converged by order {} (n_R = {})",
            specfun::MAX_ORDER,
            pulse.n_rayleigh
        )));
    }
    let r_max = (kernel.len() - 1) as i32;
    let b_max = 2 * table.max_order();
    let mut sum = Complex64::new(0.0, 0.0);
    for j in (n - r_max).max(-b_max)..=(n + r_max).min(b_max) {
        let r = kernel[(n - j).unsigned_abs() as usize];
        // R_{−n} = R_n: the kernel depends on the order only through I_n.
        sum += r * table.convolve(j, xi);
    }
    Ok(sum)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use proptest::prelude::*;

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn transmission_limits() {
        let off = GratingPulse::off();
        assert_eq!(
            transmission(0.3, 1.0, &off).unwrap(),
            Complex64::new(1.0, 0.0)
        );
        let pulse = GratingPulse::new(8.0, 0.0).unwrap();
        // Node: no light, full transmission.
        assert_relative_eq!(
            transmission(0.5, 1.0, &pulse).unwrap().re,
            1.0,
            max_relative = 1e-12
        );
        // Antinode: |t|² = e^{−8}.
        let t0 = transmission(0.0, 1.0, &pulse).unwrap();
        assert_relative_eq!(t0.norm_sqr(), 3.3546262790251184e-4, max_relative = 1e-12);
        // Periodicity and |t|² bounds.
        let phased = GratingPulse::new(3.0, 2.0).unwrap();
        for i in 0..40 {
            let x = -1.3 + 0.09 * i as f64;
            let t = transmission(x, 1.0, &phased).unwrap();
            let tp = transmission(x + 1.0, 1.0, &phased).unwrap();
            assert!(close(t, tp, 1e-12));
            assert!(t.norm_sqr() <= 1.0 + 1e-12 && t.norm_sqr() >= (-3.0f64).exp() - 1e-12);
        }
    }

    #[test]
    fn fourier_table_identity_pulse() {
        let table = FourierTable::new(&GratingPulse::off()).unwrap();
        assert_eq!(table.max_order(), 0);
        assert_eq!(table.get(0), Complex64::new(1.0, 0.0));
        assert_eq!(table.get(3), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn fourier_coefficients_reconstruct_transmission() {
        let pulse = GratingPulse::new(8.0, 4.0).unwrap();
        let table = FourierTable::new(&pulse).unwrap();
        for i in 0..1000 {
            let x = i as f64 / 1000.0;
            let mut sum = Complex64::new(0.0, 0.0);
            for n in -table.max_order()..=table.max_order() {
                let phase = 2.0 * std::f64::consts::PI * f64::from(n) * x;
                sum += table.get(n) * Complex64::from_polar(1.0, phase);
            }
            let t = transmission(x, 1.0, &pulse).unwrap();
            assert!(
                close(sum, t, 1e-10),
                "reconstruction off at x = {x}: {sum} vs {t}"
            );
        }
    }

    #[test]
    fn mask_reference_values() {
        // e^{−4}·I_n(4) for n = 0, 1, 2 (odd orders change sign).
        assert_relative_eq!(
            tl_mask(0, 8.0).unwrap(),
            0.2070019212239867,
            max_relative = 1e-13
        );
        assert_relative_eq!(
            tl_mask(1, 8.0).unwrap(),
            -0.17875083950243533,
            max_relative = 1e-13
        );
        assert_relative_eq!(
            tl_mask(2, 8.0).unwrap(),
            0.11762650147276903,
            max_relative = 1e-13
        );
        assert_relative_eq!(
            tl_mask(-1, 8.0).unwrap(),
            tl_mask(1, 8.0).unwrap(),
            max_relative = 1e-15
        );
        assert_eq!(tl_mask(0, 0.0).unwrap(), 1.0);
        assert_eq!(tl_mask(2, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn mask_row_reconstructs_transmission_probability() {
        let n0 = 8.0;
        for i in 0..1000 {
            let x = i as f64 / 1000.0;
            let mut sum = 0.0;
            for n in -60..=60 {
                sum +=
                    tl_mask(n, n0).unwrap() * (2.0 * std::f64::consts::PI * f64::from(n) * x).cos();
            }
            let expected = (-n0 * (std::f64::consts::PI * x).cos().powi(2)).exp();
            assert_abs_diff_eq!(sum, expected, epsilon = 1e-10);
        }
    }

    #[test]
    fn inverse_mask_complements_mask() {
        assert_relative_eq!(
            inverse_mask(0, 8.0).unwrap(),
            0.7929980787760133,
            max_relative = 1e-13
        );
        assert_eq!(inverse_mask(0, 0.0).unwrap(), 0.0);
        assert_eq!(inverse_mask(3, 0.0).unwrap(), 0.0);
        // A strong pulse ionizes almost everything, but the transmitted mean
        // e^{-n0/2} I_0(n0/2) only decays like 1/sqrt(π n0), so the captured
        // fraction approaches one slowly: at n0 = 400 it is ≈ 0.9718.
        let strong = inverse_mask(0, 400.0).unwrap();
        assert!(strong > 0.97 && strong < 1.0, "strong = {strong}");
    }

    #[test]
    fn quantum_coefficient_reference_points() {
        // Zero-strength gratings pass everything: δ_{n,0} at ξ = 0 even with
        // a pure phase pulse.
        let phase_only = GratingPulse::new(0.0, 5.0).unwrap();
        assert!(close(
            tl_quantum(0, 0.0, &phase_only).unwrap(),
            Complex64::new(1.0, 0.0),
            1e-12
        ));
        for n in 1..6 {
            assert!(tl_quantum(n, 0.0, &phase_only).unwrap().norm() < 1e-12);
        }
        // Full-period shear revives the mask values.
        let pulse = GratingPulse::new(8.0, 0.0).unwrap();
        let b21 = tl_quantum(2, 1.0, &pulse).unwrap();
        assert_relative_eq!(b21.re, 0.11762650147276903, max_relative = 1e-12);
        assert_abs_diff_eq!(b21.im, 0.0, epsilon = 1e-14);
        // ξ = 0 equals the mask for any phase strength.
        let mixed = GratingPulse::new(8.0, 3.0).unwrap();
        for n in -4..=4 {
            let q = tl_quantum(n, 0.0, &mixed).unwrap();
            assert_abs_diff_eq!(q.re, tl_mask(n, 8.0).unwrap(), epsilon = 1e-13);
            assert_abs_diff_eq!(q.im, 0.0, epsilon = 1e-13);
        }
    }

    #[test]
    fn closed_form_series_agrees_with_ratio_form() {
        // Both evaluation paths are defined at moderate parameters; they
        // must agree wherever they overlap.
        for &(m, a, c) in &[
            (0, 2.5, -1.2),
            (3, 2.5, -1.2),
            (5, -3.0, -0.7),
            (2, 1.8, 2.2),
            (7, -0.4, 6.0),
        ] {
            let prefactor = (-0.5f64 * 4.0).exp();
            let series = closed_form_series(m, a, c, prefactor);
            let n0 = 4.0;
            // Rebuild the ζ parameters that produce this (a, c) pair.
            let zeta_ion = -(a + c) / 2.0;
            let zeta_coh = (a - c) / 2.0;
            let split = tl_closed_form(m, zeta_ion, zeta_coh, n0).unwrap();
            assert_relative_eq!(series, split, max_relative = 1e-11, epsilon = 1e-14);
        }
    }

    #[test]
    fn classical_matches_quantum_at_zero_shear() {
        for &(n0, phi0) in &[(8.0, 8.0), (3.0, -2.0), (0.5, 12.0)] {
            let pulse = GratingPulse::new(n0, phi0).unwrap();
            for n in -5..=5 {
                let q = tl_quantum(n, 0.0, &pulse).unwrap();
                let c = tl_classical(n, 0.0, &pulse).unwrap();
                assert!(
                    close(q, c, 1e-12),
                    "n = {n}, n0 = {n0}, phi0 = {phi0}: {q} vs {c}"
                );
            }
        }
    }

    #[test]
    fn classical_phase_only_pulse_ignores_shear_when_dark() {
        let pulse = GratingPulse::new(6.0, 0.0).unwrap();
        let at_zero = tl_classical(2, 0.0, &pulse).unwrap();
        for &xi in &[0.3, 1.0, 2.7] {
            let v = tl_classical(2, xi, &pulse).unwrap();
            assert!(close(v, at_zero, 1e-13));
        }
    }

    #[test]
    fn scattering_kernel_reference_values() {
        assert_relative_eq!(
            rayleigh_R(0, 1.0, 7.2).unwrap(),
            0.24059611148821952,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            rayleigh_R(1, 0.5, 7.2).unwrap(),
            0.045300228853954208,
            max_relative = 1e-12
        );
        // δ_{n,0} limits: no shear or no scattering.
        assert_eq!(rayleigh_R(0, 0.0, 7.2).unwrap(), 1.0);
        assert_eq!(rayleigh_R(2, 0.0, 7.2).unwrap(), 0.0);
        assert_eq!(rayleigh_R(0, 0.7, 0.0).unwrap(), 1.0);
        assert_eq!(rayleigh_R(1, 0.7, 0.0).unwrap(), 0.0);
        assert_relative_eq!(
            rayleigh_R(-3, 0.8, 7.2).unwrap(),
            rayleigh_R(3, 0.8, 7.2).unwrap(),
            max_relative = 1e-15
        );
    }

    #[test]
    fn scattering_kernel_row_sum_matches_kernel_diagonal() {
        // Σ_n R_n(ξ) telescopes to exp[(n_R/2)(1 + cos πξ)(Φ(πξ) − 1)] with
        // Φ = (3/2)(j₀ − j₁/q): the decoherence kernel evaluated at maximal
        // separation. Checks the row sum against that closed expression.
        for &(xi, nr) in &[(0.25, 7.2), (0.5, 7.2), (1.0, 3.0), (1.7, 0.8)] {
            let q = std::f64::consts::PI * xi;
            let phi = 1.5 * (specfun::spherical_j0(q) - specfun::spherical_j1_over_x(q));
            let expected = (0.5 * nr * (1.0 + q.cos()) * (phi - 1.0)).exp();
            let mut sum = rayleigh_R(0, xi, nr).unwrap();
            for n in 1..=80 {
                sum += 2.0 * rayleigh_R(n, xi, nr).unwrap();
            }
            assert_relative_eq!(sum, expected, max_relative = 1e-11);
        }
    }

    #[test]
    fn decohered_reduces_to_quantum_without_scattering() {
        let pulse = GratingPulse::with_rayleigh(8.0, 8.0, 0.0).unwrap();
        for n in -4..=4 {
            let d = tl_decohered(n, 0.8, &pulse).unwrap();
            let q = tl_quantum(n, 0.8, &pulse).unwrap();
            assert!(close(d, q, 1e-13));
        }
    }

    #[test]
    fn decohered_mask_is_unchanged() {
        // Scattering never modifies the ξ = 0 (masking) coefficients.
        let pulse = GratingPulse::with_rayleigh(8.0, 4.0, 7.2).unwrap();
        for n in -4..=4 {
            let d = tl_decohered(n, 0.0, &pulse).unwrap();
            assert_abs_diff_eq!(d.re, tl_mask(n, 8.0).unwrap(), epsilon = 1e-12);
            assert_abs_diff_eq!(d.im, 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn decohered_suppresses_coherences() {
        let coherent = GratingPulse::new(8.0, 4.0).unwrap();
        let scattering = GratingPulse::with_rayleigh(8.0, 4.0, 7.2).unwrap();
        let q = tl_quantum(1, 1.0, &coherent).unwrap().norm();
        let d = tl_decohered(1, 1.0, &scattering).unwrap().norm();
        assert!(d < q, "scattering must reduce |B₁(1)|: {d} vs {q}");
    }

    #[test]
    fn model_dispatch_matches_direct_calls() {
        let pulse = GratingPulse::with_rayleigh(6.0, 3.0, 2.0).unwrap();
        let q = tl_coefficient(CoefficientModel::Quantum, 2, 0.6, &pulse).unwrap();
        assert_eq!(q.value, tl_quantum(2, 0.6, &pulse).unwrap());
        assert_eq!((q.order, q.xi), (2, 0.6));
        let c = tl_coefficient(CoefficientModel::Classical, 2, 0.6, &pulse).unwrap();
        assert_eq!(c.value, tl_classical(2, 0.6, &pulse).unwrap());
        let d = tl_coefficient(CoefficientModel::Decohered, 2, 0.6, &pulse).unwrap();
        assert_eq!(d.value, tl_decohered(2, 0.6, &pulse).unwrap());
    }

    #[test]
    fn invalid_inputs_are_rejected() {
        assert!(GratingPulse::new(-1.0, 0.0).is_err());
        assert!(GratingPulse::with_rayleigh(1.0, 0.0, -0.5).is_err());
        assert!(transmission(0.0, 0.0, &GratingPulse::off()).is_err());
        assert!(tl_mask(1, -2.0).is_err());
        assert!(rayleigh_R(0, 0.5, -1.0).is_err());
    }

    proptest! {
        /// The convolution sum and the closed form agree on both Bessel
        /// branches.
        #[test]
        fn convolution_matches_closed_form(
            n0 in 0.0f64..20.0,
            phi0 in -10.0f64..10.0,
            xi in -2.0f64..2.0,
            n in -8i32..=8,
        ) {
            let pulse = GratingPulse::new(n0, phi0).unwrap();
            let conv = tl_quantum(n, xi, &pulse).unwrap();
            let closed = tl_quantum_closed_form(n, xi, &pulse).unwrap();
            prop_assert!(
                (conv - closed).norm() <= 1e-10,
                "n = {}, xi = {}: convolution {} vs closed form {}",
                n, xi, conv, closed
            );
        }

        /// Coefficients of a positive kernel are bounded by its mean: no
        /// coefficient of any model exceeds the mean transmission B₀(0).
        #[test]
        fn coefficients_bounded_by_mean_transmission(
            n0 in 0.0f64..15.0,
            phi0 in -8.0f64..8.0,
            nr in 0.0f64..8.0,
            xi in -2.0f64..2.0,
            n in -10i32..=10,
        ) {
            let pulse = GratingPulse::with_rayleigh(n0, phi0, nr).unwrap();
            let bound = tl_mask(0, n0).unwrap() + 1e-10;
            for model in [
                CoefficientModel::Quantum,
                CoefficientModel::Classical,
                CoefficientModel::Decohered,
            ] {
                let v = tl_coefficient(model, n, xi, &pulse).unwrap().value;
                prop_assert!(
                    v.norm() <= bound,
                    "{model:?} coefficient {} exceeds mean transmission {}",
                    v.norm(), bound
                );
            }
        }

        /// The quantum and classical models converge for vanishing shear.
        #[test]
        fn quantum_meets_classical_at_small_shear(
            n0 in 0.0f64..12.0,
            phi0 in -6.0f64..6.0,
            n in -4i32..=4,
        ) {
            let pulse = GratingPulse::new(n0, phi0).unwrap();
            let q = tl_quantum(n, 1e-3, &pulse).unwrap();
            let c = tl_classical(n, 1e-3, &pulse).unwrap();
            prop_assert!((q - c).norm() <= 1e-4);
        }

        /// The coefficients are real for every model (the two-point kernel
        /// is symmetric), so the convolution's imaginary part is residue.
        #[test]
        fn coefficients_are_real(
            n0 in 0.0f64..15.0,
            phi0 in -8.0f64..8.0,
            xi in -2.0f64..2.0,
            n in -8i32..=8,
        ) {
            let pulse = GratingPulse::new(n0, phi0).unwrap();
            let q = tl_quantum(n, xi, &pulse).unwrap();
            prop_assert!(q.im.abs() <= 1e-12);
        }
    }
}
