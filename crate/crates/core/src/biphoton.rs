//! Resonant biphoton source: cavity input-output coefficients, spectrum,
//! linewidth, pair rate, Glauber correlation and spectral brightness.
//!
//! Frequencies: signal at `omega`, idler at `omega_p - omega`; cold-cavity
//! resonances `omega_q` (signal) and `omega_r` (idler). All rates are
//! angular (rad/s).

use std::f64::consts::{LN_2, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cavity::DecayRates;
use crate::error::{Error, Result};
use crate::numerics::{fourier_full_line, fwhm_from_samples, trapezoid};
use crate::phasematch::sinc;

/// |kappa1| / (sqrt(Gamma_s Gamma_i)/2) above which the small-gain
/// coefficients are flagged.
pub const SMALL_GAIN_RATIO_LIMIT: f64 = 0.3;

/// How the magnitude of kappa1 is fixed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Calibration {
    /// Paired count rate per watt of pump at exact phase matching, 1/(s W).
    RatePerWatt(f64),
    /// Explicit |kappa1| (rad/s) at exact phase matching and the given pump
    /// power (W).
    Kappa1 { kappa1: f64, reference_power: f64 },
}

/// Cavity coupling constant kappa1 (rad/s) at the given pump power.
///
/// The phase-matched magnitude comes from the calibration and scales as
/// sqrt(P); the mismatch `dk_prime` (1/m) over `length` contributes
/// `exp(i dk' L/2) sinc(dk' L/2)`.
pub fn kappa1_from_pump(
    pump_power: f64,
    calibration: Option<&Calibration>,
    rates: &DecayRates,
    dk_prime: f64,
    length: f64,
) -> Result<Complex64> {
    if !(pump_power >= 0.0) {
        return Err(Error::InvalidParameter(format!("pump power {pump_power} W")));
    }
    let magnitude = match calibration.ok_or(Error::MissingCalibration)? {
        Calibration::RatePerWatt(rho) => {
            if rates.coupling_s <= 0.0 || rates.coupling_i <= 0.0 {
                return Err(Error::ZeroDecay);
            }
            let rate = rho * pump_power;
            (rate * rates.decay_s * rates.decay_i * (rates.decay_s + rates.decay_i)
                / (4.0 * rates.coupling_s * rates.coupling_i))
                .sqrt()
        }
        Calibration::Kappa1 {
            kappa1,
            reference_power,
        } => {
            if !(*reference_power > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "kappa1 reference power {reference_power} W"
                )));
            }
            kappa1 * (pump_power / reference_power).sqrt()
        }
    };
    let x = dk_prime * length / 2.0;
    Ok(Complex64::from_polar(magnitude * sinc(x), x))
}

/// Equivalent traveling-wave coupling (1/m) of a cavity coupling |kappa1|:
/// kappa = 4 |kappa1| / sqrt(v_s v_i). Of the four traveling components of
/// the standing-wave product sin(q pi z/L) sin(r pi z/L) only one is phase
/// matched, with amplitude 1/4.
pub fn freespace_kappa_equivalent(kappa1: f64, v_s: f64, v_i: f64) -> f64 {
    4.0 * kappa1.abs() / (v_s * v_i).sqrt()
}

/// Parameters of the two coupled cavity modes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairedModes {
    pub rates: DecayRates,
    pub kappa1: Complex64,
    pub omega_q: f64,
    pub omega_r: f64,
    pub omega_pump: f64,
}

impl PairedModes {
    /// Doubly resonant pair (Omega_q + Omega_r = omega_p).
    pub fn resonant(rates: DecayRates, kappa1: Complex64, omega_q: f64, omega_r: f64) -> Self {
        PairedModes {
            rates,
            kappa1,
            omega_q,
            omega_r,
            omega_pump: omega_q + omega_r,
        }
    }

    fn signal_pole(&self, omega: f64) -> Complex64 {
        Complex64::new(self.rates.decay_s / 2.0, -(omega - self.omega_q))
    }

    fn idler_pole(&self, omega: f64) -> Complex64 {
        let idler_detuning = (self.omega_pump - omega) - self.omega_r;
        Complex64::new(self.rates.decay_i / 2.0, idler_detuning)
    }

    pub fn a1(&self, omega: f64) -> Complex64 {
        let r = &self.rates;
        Complex64::new(r.coupling_s - r.decay_s / 2.0, omega - self.omega_q) / self.signal_pole(omega)
    }

    pub fn b1(&self, omega: f64) -> Complex64 {
        let g = (self.rates.coupling_s * self.rates.coupling_i).sqrt();
        -Complex64::i() * self.kappa1 * g / (self.signal_pole(omega) * self.idler_pole(omega))
    }

    pub fn c1(&self, omega: f64) -> Complex64 {
        let g = (self.rates.coupling_s * self.rates.coupling_i).sqrt();
        Complex64::i() * self.kappa1 * g / (self.signal_pole(omega) * self.idler_pole(omega))
    }

    pub fn d1(&self, omega: f64) -> Complex64 {
        let r = &self.rates;
        let idler_detuning = (self.omega_pump - omega) - self.omega_r;
        Complex64::new(r.coupling_i - r.decay_i / 2.0, -idler_detuning) / self.idler_pole(omega)
    }

    /// Closed-form spectral density S1(omega), photons / s / (rad/s).
    pub fn spectral_density(&self, omega: f64) -> f64 {
        let r = &self.rates;
        let ds = omega - self.omega_q;
        let di = (self.omega_pump - omega) - self.omega_r;
        8.0 * r.coupling_s * r.coupling_i * self.kappa1.norm_sqr()
            / (PI
                * (4.0 * ds * ds + r.decay_s * r.decay_s)
                * (4.0 * di * di + r.decay_i * r.decay_i))
    }

    pub fn gain_too_large(&self) -> bool {
        self.kappa1.norm() / ((self.rates.decay_s * self.rates.decay_i).sqrt() / 2.0)
            > SMALL_GAIN_RATIO_LIMIT
    }
}

/// A1..D1 sampled on a signal-frequency grid.
#[derive(Debug, Clone)]
pub struct PairedModeCoefficients {
    pub modes: PairedModes,
    pub omega: Vec<f64>,
    pub a1: Vec<Complex64>,
    pub b1: Vec<Complex64>,
    pub c1: Vec<Complex64>,
    pub d1: Vec<Complex64>,
    pub gain_too_large: bool,
}

pub fn coefficients(modes: &PairedModes, omega_grid: &[f64]) -> Result<PairedModeCoefficients> {
    modes.rates.ensure_decaying()?;
    Ok(PairedModeCoefficients {
        modes: *modes,
        omega: omega_grid.to_vec(),
        a1: omega_grid.iter().map(|&w| modes.a1(w)).collect(),
        b1: omega_grid.iter().map(|&w| modes.b1(w)).collect(),
        c1: omega_grid.iter().map(|&w| modes.c1(w)).collect(),
        d1: omega_grid.iter().map(|&w| modes.d1(w)).collect(),
        gain_too_large: modes.gain_too_large(),
    })
}

/// Biphoton linewidth (FWHM of S1 at double resonance):
/// sqrt((sqrt(Gs^4 + 6 Gs^2 Gi^2 + Gi^4) - Gs^2 - Gi^2) / 2).
pub fn biphoton_linewidth(decay_s: f64, decay_i: f64) -> f64 {
    let (s2, i2) = (decay_s * decay_s, decay_i * decay_i);
    (((s2 * s2 + 6.0 * s2 * i2 + i2 * i2).sqrt() - s2 - i2) / 2.0).sqrt()
}

#[derive(Debug, Clone)]
pub struct Spectrum {
    pub omega: Vec<f64>,
    /// |B1|^2 / 2pi
    pub density: Vec<f64>,
    /// closed-form linewidth, rad/s
    pub linewidth: f64,
    /// FWHM read off the sampled grid, rad/s
    pub scanned_fwhm: Option<f64>,
}

pub fn spectrum(coeffs: &PairedModeCoefficients) -> Spectrum {
    let density: Vec<f64> = coeffs.b1.iter().map(|b| b.norm_sqr() / (2.0 * PI)).collect();
    Spectrum {
        scanned_fwhm: fwhm_from_samples(&coeffs.omega, &density),
        omega: coeffs.omega.clone(),
        density,
        linewidth: biphoton_linewidth(coeffs.modes.rates.decay_s, coeffs.modes.rates.decay_i),
    }
}

/// Total paired count rate R1 = 4 gs gi |k1|^2 / (Gs Gi (Gs + Gi)), 1/s.
pub fn pair_rate(rates: &DecayRates, kappa1: Complex64) -> Result<f64> {
    rates.ensure_decaying()?;
    Ok(4.0 * rates.coupling_s * rates.coupling_i * kappa1.norm_sqr()
        / (rates.decay_s * rates.decay_i * (rates.decay_s + rates.decay_i)))
}

/// Trapezoid integral of a sampled spectrum, 1/s.
pub fn pair_rate_quadrature(spectrum: &Spectrum) -> f64 {
    trapezoid(&spectrum.omega, &spectrum.density)
}

/// ln 2 (1/Gs + 1/Gi), s.
pub fn correlation_time(rates: &DecayRates) -> f64 {
    LN_2 * coherence_time(rates)
}

/// 1/Gs + 1/Gi, s.
pub fn coherence_time(rates: &DecayRates) -> f64 {
    1.0 / rates.decay_s + 1.0 / rates.decay_i
}

/// Closed-form G2(tau), 1/s^2; tau = t_i - t_s.
pub fn g2_closed_form(rates: &DecayRates, kappa1: Complex64, tau: f64) -> f64 {
    let (gs, gi) = (rates.decay_s, rates.decay_i);
    let peak = 4.0 * gs * gi * kappa1.norm_sqr() / ((gs + gi) * (gs + gi));
    if tau < 0.0 {
        peak * (gs * tau).exp()
    } else {
        peak * (-gi * tau).exp()
    }
}

/// First term of the Glauber correlation evaluated by direct quadrature of
/// |(1/2pi) int A1(w) C1*(w) e^{i w tau} dw|^2.
pub fn g2_fourier(modes: &PairedModes, tau: f64) -> f64 {
    let integrand = |delta: f64| {
        let w = modes.omega_q + delta;
        modes.a1(w) * modes.c1(w).conj()
    };
    let core = 40.0 * modes.rates.max_decay();
    (fourier_full_line(integrand, tau, core) / (2.0 * PI)).norm_sqr()
}

#[derive(Debug, Clone)]
pub struct G2Curve {
    pub tau: Vec<f64>,
    pub g2: Vec<f64>,
    pub peak: f64,
    /// R1^2, the tau-independent accidental term
    pub accidentals: f64,
    pub includes_accidentals: bool,
    pub correlation_time: f64,
    pub coherence_time: f64,
}

pub fn g2(
    rates: &DecayRates,
    kappa1: Complex64,
    tau_grid: &[f64],
    include_accidentals: bool,
) -> Result<G2Curve> {
    rates.ensure_decaying()?;
    let accidentals = pair_rate(rates, kappa1)?.powi(2);
    let offset = if include_accidentals { accidentals } else { 0.0 };
    Ok(G2Curve {
        tau: tau_grid.to_vec(),
        g2: tau_grid
            .iter()
            .map(|&t| g2_closed_form(rates, kappa1, t) + offset)
            .collect(),
        peak: g2_closed_form(rates, kappa1, 0.0),
        accidentals,
        includes_accidentals: include_accidentals,
        correlation_time: correlation_time(rates),
        coherence_time: coherence_time(rates),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Brightness {
    /// 1/s per rad/s
    pub per_rad_s: f64,
    /// 1/s per MHz
    pub per_mhz: f64,
    /// 1/s per MHz per mW of pump
    pub per_mhz_per_mw: f64,
}

/// Spectral brightness R1 / (linewidth / 2pi in MHz), plus the per-mW figure.
pub fn brightness(rate: f64, linewidth: f64, pump_power: f64) -> Result<Brightness> {
    if !(linewidth > 0.0) {
        return Err(Error::InvalidParameter(format!("linewidth {linewidth} rad/s")));
    }
    let per_mhz = rate / (linewidth / (2.0 * PI) * 1e-6);
    Ok(Brightness {
        per_rad_s: rate / linewidth,
        per_mhz,
        per_mhz_per_mw: per_mhz / (pump_power * 1e3),
    })
}

/// Rate, linewidth and pump power of a source, for brightness ratios.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SourceFigure {
    pub rate: f64,
    pub linewidth: f64,
    pub pump_power: f64,
}

impl SourceFigure {
    pub fn brightness(&self) -> f64 {
        self.rate / self.linewidth
    }
}

/// (R/dw) of the resonant source over (R/dw) of the reference source at the
/// same pump power.
pub fn resonant_vs_forward_ratio(resonant: &SourceFigure, forward: &SourceFigure) -> Result<f64> {
    let (a, b) = (resonant.pump_power, forward.pump_power);
    if (a - b).abs() > 1e-12 * a.abs().max(b.abs()) {
        return Err(Error::IncompatibleNormalization(a, b));
    }
    Ok(resonant.brightness() / forward.brightness())
}

/// Scalar outputs of a biphoton calculation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BiphotonReport {
    pub linewidth: f64,
    pub rate: f64,
    pub correlation_time: f64,
    pub coherence_time: f64,
    pub g2_peak: f64,
    pub accidentals: f64,
    pub brightness_per_mhz: f64,
    pub brightness_per_mhz_per_mw: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::linspace;

    const W0: f64 = 1.77e15;

    fn lossless(gs: f64, gi: f64) -> DecayRates {
        DecayRates::from_rates(gs, gi, gs, gi)
    }

    fn modes(rates: DecayRates, k1: f64) -> PairedModes {
        PairedModes::resonant(rates, Complex64::new(k1, 0.0), W0, W0 * 1.001)
    }

    #[test]
    fn explicit_kappa_passthrough_and_sqrt_power() {
        let rates = lossless(1e7, 1.1e7);
        let cal = Calibration::Kappa1 {
            kappa1: 3.0e5,
            reference_power: 1e-3,
        };
        let k = kappa1_from_pump(1e-3, Some(&cal), &rates, 0.0, 0.03).unwrap();
        assert_eq!(k, Complex64::new(3.0e5, 0.0));
        let k4 = kappa1_from_pump(4e-3, Some(&cal), &rates, 0.0, 0.03).unwrap();
        assert!((k4.norm() / k.norm() - 2.0).abs() < 1e-14);
        assert!(matches!(
            kappa1_from_pump(1e-3, None, &rates, 0.0, 0.03),
            Err(Error::MissingCalibration)
        ));
    }

    #[test]
    fn mismatch_applies_sinc_and_phase() {
        let rates = lossless(1e7, 1e7);
        let cal = Calibration::Kappa1 {
            kappa1: 1.0,
            reference_power: 1.0,
        };
        let l = 0.03;
        let dk = 2.0 / l; // dk L / 2 = 1
        let k = kappa1_from_pump(1.0, Some(&cal), &rates, dk, l).unwrap();
        assert!((k.norm() - 1f64.sin()).abs() < 1e-15);
        assert!((k.arg() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rate_calibration_back_solves() {
        let rates = DecayRates::from_rates(1.7e7, 1.6e7, 1.9e7, 1.6e7);
        let cal = Calibration::RatePerWatt(1.31e5 / 770e-6);
        let k = kappa1_from_pump(770e-6, Some(&cal), &rates, 0.0, 0.03).unwrap();
        let r = pair_rate(&rates, k).unwrap();
        assert!((r / 1.31e5 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn lossless_on_resonance() {
        let m = modes(lossless(1e7, 1.3e7), 1e5);
        assert!((m.a1(m.omega_q) - 1.0).norm() < 1e-15);
        let r = m.rates;
        let want = m.kappa1.norm_sqr() * r.coupling_s * r.coupling_i
            / ((r.decay_s / 2.0).powi(2) * (r.decay_i / 2.0).powi(2));
        assert!((m.b1(m.omega_q).norm_sqr() / want - 1.0).abs() < 1e-12);
    }

    #[test]
    fn coefficient_relations_on_grid() {
        let rates = DecayRates::from_rates(1e7, 1.2e7, 1.1e7, 1.25e7);
        let m = modes(rates, 2e5);
        let grid = linspace(W0 - 4e8, W0 + 4e8, 101);
        let c = coefficients(&m, &grid).unwrap();
        for i in 0..grid.len() {
            assert!((c.b1[i].norm_sqr() - c.c1[i].norm_sqr()).abs() <= 1e-12 * c.b1[i].norm_sqr());
            assert!((c.c1[i] + c.b1[i]).norm() <= 1e-12 * c.b1[i].norm());
            // with internal loss |A1| < 1
            assert!(c.a1[i].norm() < 1.0);
        }
    }

    #[test]
    fn symmetric_linewidth_reduction() {
        let g = 2.0e7;
        let lw = biphoton_linewidth(g, g);
        assert!((lw / (g * (2f64.sqrt() - 1.0).sqrt()) - 1.0).abs() < 1e-14);
        assert!((lw / g - 0.6436).abs() < 1e-4);
    }

    #[test]
    fn peak_density_at_double_resonance() {
        let rates = DecayRates::from_rates(1e7, 1.2e7, 1.1e7, 1.25e7);
        let m = modes(rates, 2e5);
        let want = 8.0 * rates.coupling_s * rates.coupling_i * 4e10
            / (PI * rates.decay_s.powi(2) * rates.decay_i.powi(2));
        assert!((m.spectral_density(m.omega_q) / want - 1.0).abs() < 1e-12);
    }

    #[test]
    fn symmetric_lossless_rate() {
        let g = 1.5e7;
        let k = Complex64::new(3e5, 0.0);
        let r = pair_rate(&lossless(g, g), k).unwrap();
        assert!((r / (2.0 * 9e10 / g) - 1.0).abs() < 1e-14);
        assert!(matches!(pair_rate(&lossless(0.0, g), k), Err(Error::ZeroDecay)));
    }

    #[test]
    fn g2_at_zero_and_symmetric_tc() {
        let g = 1.5e7;
        let rates = lossless(g, g);
        let k = Complex64::new(3e5, 0.0);
        assert!((g2_closed_form(&rates, k, 0.0) / 9e10 - 1.0).abs() < 1e-14);
        assert!((correlation_time(&rates) * g / (2.0 * LN_2) - 1.0).abs() < 1e-14);
        let asym = lossless(1e7, 2e7);
        let peak = 4.0 * 1e7 * 2e7 * 9e10 / 9e14;
        assert!((g2_closed_form(&asym, k, 0.0) / peak - 1.0).abs() < 1e-14);
    }

    #[test]
    fn g2_fourier_matches_closed_form() {
        let rates = lossless(1.0e7, 1.4e7);
        let m = modes(rates, 1e4);
        for tau in [-4e-7, -5e-8, -1e-10, 0.0, 2e-9, 1e-7, 3e-7] {
            let num = g2_fourier(&m, tau);
            let exact = g2_closed_form(&rates, m.kappa1, tau);
            assert!((num / exact - 1.0).abs() < 1e-6, "tau {tau}: {num} vs {exact}");
        }
    }

    #[test]
    fn accidentals_flag() {
        let rates = lossless(1e7, 1e7);
        let k = Complex64::new(1e5, 0.0);
        let without = g2(&rates, k, &[0.0, 1e-7], false).unwrap();
        let with = g2(&rates, k, &[0.0, 1e-7], true).unwrap();
        let r = pair_rate(&rates, k).unwrap();
        assert_eq!(without.accidentals, r * r);
        assert!((with.g2[1] - without.g2[1] - r * r).abs() <= 1e-12 * with.g2[1]);
    }

    #[test]
    fn brightness_from_quoted_values() {
        let b = brightness(1.31e5, 2.0 * PI * 2.1e6, 770e-6).unwrap();
        assert!((b.per_mhz / 6.25e4 - 1.0).abs() < 0.02);
        assert!((b.per_mhz_per_mw / 8.16e4 - 1.0).abs() < 0.02);
    }

    #[test]
    fn ratio_normalization() {
        let a = SourceFigure {
            rate: 1e5,
            linewidth: 1e7,
            pump_power: 1e-3,
        };
        assert_eq!(resonant_vs_forward_ratio(&a, &a).unwrap(), 1.0);
        let narrower = SourceFigure {
            linewidth: 0.5e7,
            ..a
        };
        assert!((resonant_vs_forward_ratio(&narrower, &a).unwrap() - 2.0).abs() < 1e-15);
        let other = SourceFigure {
            pump_power: 2e-3,
            ..a
        };
        assert!(matches!(
            resonant_vs_forward_ratio(&a, &other),
            Err(Error::IncompatibleNormalization(..))
        ));
    }
}
