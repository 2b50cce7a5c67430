//! Quasi-phase-matching design and the cavity-less (free-space) SPDC
//! spectrum for backward and forward geometries.
//!
//! Sign convention: the backward mismatch is `k_p - K_G - k_s + k_i` (idler
//! counter-propagating), the forward one `k_p - K_G - k_s - k_i`. With the
//! signal detuned by `dw` and the pump fixed, the backward mismatch moves as
//! `-(1/v_s + 1/v_i) dw` and the forward one as `-(1/v_s - 1/v_i) dw`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::biphoton::SourceFigure;
use crate::dispersion::{Axis, DispersionData, DispersionSample, SellmeierModel};
use crate::error::{Error, Result};
use crate::numerics::bisect;
use crate::units::wavelength_to_omega;

/// Half width x_h of sinc^2(x) at half maximum: sinc^2(x_h) = 1/2.
pub const SINC2_HALF_WIDTH: f64 = 1.391_557_378_251_510_2;

/// kappa*L above which the small-gain formulas are flagged.
pub const SMALL_GAIN_LIMIT: f64 = 0.3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Geometry {
    Backward,
    Forward,
}

/// sin(x)/x, with the removable singularity filled in.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        let x2 = x * x;
        1.0 - x2 / 6.0 + x2 * x2 / 120.0
    } else {
        x.sin() / x
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrystalSpec {
    /// m
    pub length: f64,
    /// m
    pub poling_period: f64,
    pub qpm_order: u32,
    pub pump_axis: Axis,
    pub signal_axis: Axis,
    pub idler_axis: Axis,
    pub geometry: Geometry,
    pub dispersion: DispersionData,
}

impl CrystalSpec {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        length: f64,
        poling_period: f64,
        qpm_order: u32,
        pump_axis: Axis,
        signal_axis: Axis,
        idler_axis: Axis,
        geometry: Geometry,
        dispersion: DispersionData,
    ) -> Result<Self> {
        let spec = CrystalSpec {
            length,
            poling_period,
            qpm_order,
            pump_axis,
            signal_axis,
            idler_axis,
            geometry,
            dispersion,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Same as [`CrystalSpec::new`] but with the poling period designed for
    /// exact phase matching at the given pump and signal angular frequencies.
    #[allow(clippy::too_many_arguments)]
    pub fn designed(
        length: f64,
        qpm_order: u32,
        pump_axis: Axis,
        signal_axis: Axis,
        idler_axis: Axis,
        geometry: Geometry,
        dispersion: DispersionData,
        omega_pump: f64,
        omega_signal: f64,
    ) -> Result<Self> {
        let mut spec = CrystalSpec {
            length,
            poling_period: 1.0,
            qpm_order,
            pump_axis,
            signal_axis,
            idler_axis,
            geometry,
            dispersion,
        };
        spec.validate()?;
        spec.poling_period = spec.poling_period_for(omega_pump, omega_signal)?;
        Ok(spec)
    }

    fn validate(&self) -> Result<()> {
        if !(self.length > 0.0 && self.length.is_finite()) {
            return Err(Error::InvalidParameter(format!("crystal length {} m", self.length)));
        }
        if !(self.poling_period > 0.0 && self.poling_period.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "poling period {} m",
                self.poling_period
            )));
        }
        if self.qpm_order < 1 {
            return Err(Error::InvalidParameter("QPM order must be >= 1".into()));
        }
        for axis in [self.pump_axis, self.signal_axis, self.idler_axis] {
            self.dispersion.axis(axis)?;
        }
        Ok(())
    }

    pub fn with_geometry(&self, geometry: Geometry) -> Self {
        CrystalSpec {
            geometry,
            ..self.clone()
        }
    }

    pub fn with_length(&self, length: f64) -> Self {
        CrystalSpec {
            length,
            ..self.clone()
        }
    }

    /// Grating wavevector K_G = 2 pi m / Lambda, 1/m.
    pub fn grating_wavevector(&self) -> f64 {
        2.0 * PI * self.qpm_order as f64 / self.poling_period
    }

    fn model(&self, axis: Axis) -> &SellmeierModel {
        // validated at construction
        self.dispersion.axis(axis).expect("axis checked in validate")
    }

    pub fn signal_sample(&self, omega_signal: f64) -> Result<DispersionSample> {
        self.model(self.signal_axis).dispersion_sample(omega_signal)
    }

    pub fn idler_sample(&self, omega_idler: f64) -> Result<DispersionSample> {
        self.model(self.idler_axis).dispersion_sample(omega_idler)
    }

    pub fn pump_sample(&self, omega_pump: f64) -> Result<DispersionSample> {
        self.model(self.pump_axis).dispersion_sample(omega_pump)
    }

    /// k-vector combination that the grating has to supply, 1/m.
    fn grating_target(&self, omega_pump: f64, omega_signal: f64) -> Result<f64> {
        let idler = self.idler_sample(omega_pump - omega_signal)?;
        let signal = self.signal_sample(omega_signal)?;
        let pump = self.pump_sample(omega_pump)?;
        Ok(match self.geometry {
            Geometry::Backward => pump.wavenumber() - signal.wavenumber() + idler.wavenumber(),
            Geometry::Forward => pump.wavenumber() - signal.wavenumber() - idler.wavenumber(),
        })
    }

    fn poling_period_for(&self, omega_pump: f64, omega_signal: f64) -> Result<f64> {
        let target = self.grating_target(omega_pump, omega_signal)?;
        if !(target > 0.0) {
            return Err(Error::NonPositiveDenominator { value: target });
        }
        Ok(2.0 * PI * self.qpm_order as f64 / target)
    }
}

/// Poling period that phase matches the given pump and signal wavelengths
/// (m) in the crystal's geometry and QPM order. The crystal's own period is
/// ignored.
pub fn qpm_poling_period(crystal: &CrystalSpec, lambda_pump: f64, lambda_signal: f64) -> Result<f64> {
    crystal.poling_period_for(wavelength_to_omega(lambda_pump), wavelength_to_omega(lambda_signal))
}

/// Exact phase mismatch (1/m) at the given signal and pump frequencies.
pub fn delta_k(crystal: &CrystalSpec, omega_signal: f64, omega_pump: f64) -> Result<f64> {
    Ok(crystal.grating_target(omega_pump, omega_signal)? - crystal.grating_wavevector())
}

/// Mismatch seen by a cavity mode pair, k_p - K_G - k_s(Omega_q) -+ k_i(Omega_r),
/// where the idler sign follows the geometry. Equals [`delta_k`] at
/// Omega_q when Omega_q + Omega_r = omega_p.
pub fn mode_pair_mismatch(
    crystal: &CrystalSpec,
    omega_pump: f64,
    omega_q: f64,
    omega_r: f64,
) -> Result<f64> {
    let kp = crystal.pump_sample(omega_pump)?.wavenumber();
    let ks = crystal.signal_sample(omega_q)?.wavenumber();
    let ki = crystal.idler_sample(omega_r)?.wavenumber();
    let idler = match crystal.geometry {
        Geometry::Backward => ki,
        Geometry::Forward => -ki,
    };
    Ok(kp - crystal.grating_wavevector() - ks + idler)
}

/// dDelta_k/domega_s at fixed pump, from group velocities (s/m).
pub fn delta_k_slope(crystal: &CrystalSpec, omega_signal: f64, omega_pump: f64) -> Result<f64> {
    let s = crystal.signal_sample(omega_signal)?;
    let i = crystal.idler_sample(omega_pump - omega_signal)?;
    Ok(match crystal.geometry {
        Geometry::Backward => -(s.inverse_group_velocity() + i.inverse_group_velocity()),
        Geometry::Forward => -(s.inverse_group_velocity() - i.inverse_group_velocity()),
    })
}

/// First-order expansion of the mismatch about `omega_center`.
pub fn delta_k_linearized(
    crystal: &CrystalSpec,
    omega_center: f64,
    detuning: f64,
    omega_pump: f64,
) -> Result<f64> {
    Ok(delta_k(crystal, omega_center, omega_pump)?
        + delta_k_slope(crystal, omega_center, omega_pump)? * detuning)
}

/// Ratio (1/v_s + 1/v_i) / |1/v_s - 1/v_i|: how much narrower the backward
/// gain is than the forward gain for the same crystal length.
pub fn backward_forward_ratio(crystal: &CrystalSpec, omega_signal: f64, omega_pump: f64) -> Result<f64> {
    let s = crystal.signal_sample(omega_signal)?.inverse_group_velocity();
    let i = crystal.idler_sample(omega_pump - omega_signal)?.inverse_group_velocity();
    let diff = (s - i).abs();
    if diff < 1e-9 * (s + i) {
        return Err(Error::DegenerateForward(diff));
    }
    Ok((s + i) / diff)
}

/// Linearized gain linewidth (FWHM of sinc^2, rad/s) for either geometry,
/// using the crystal's dispersion and length: 4 x_h / (|dDk/dw| L).
pub fn gain_linewidth(
    crystal: &CrystalSpec,
    geometry: Geometry,
    omega_signal: f64,
    omega_pump: f64,
) -> Result<f64> {
    let s = crystal.signal_sample(omega_signal)?.inverse_group_velocity();
    let i = crystal.idler_sample(omega_pump - omega_signal)?.inverse_group_velocity();
    let slope = match geometry {
        Geometry::Backward => s + i,
        Geometry::Forward => {
            let d = (s - i).abs();
            if d < 1e-9 * (s + i) {
                return Err(Error::DegenerateForward(d));
            }
            d
        }
    };
    Ok(4.0 * SINC2_HALF_WIDTH / (slope * crystal.length))
}

/// Signal frequency (rad/s) where the exact mismatch vanishes, searched
/// around `omega_guess`.
pub fn phase_matched_signal(crystal: &CrystalSpec, omega_pump: f64, omega_guess: f64) -> Result<f64> {
    let width = gain_linewidth(crystal, crystal.geometry, omega_guess, omega_pump)?;
    let f = |w: f64| delta_k(crystal, w, omega_pump).unwrap_or(f64::NAN);
    let mut span = width;
    for _ in 0..40 {
        if let Some(root) = bisect(f, omega_guess - span, omega_guess + span, 1e-15) {
            return Ok(root);
        }
        span *= 2.0;
        if span > 0.2 * omega_guess {
            break;
        }
    }
    Err(Error::InvalidParameter(format!(
        "no phase-matched signal frequency near {omega_guess:e} rad/s"
    )))
}

/// Gain linewidth from the exact mismatch: the two half-maximum points of
/// sinc^2(Dk L / 2) around the phase-matched center, found by bisection.
pub fn gain_linewidth_exact(crystal: &CrystalSpec, omega_pump: f64, omega_guess: f64) -> Result<f64> {
    let center = phase_matched_signal(crystal, omega_pump, omega_guess)?;
    let approx = gain_linewidth(crystal, crystal.geometry, center, omega_pump)?;
    let half = |w: f64| {
        let x = delta_k(crystal, w, omega_pump).unwrap_or(f64::NAN) * crystal.length / 2.0;
        sinc(x).powi(2) - 0.5
    };
    // the main lobe ends at |x| = pi; 0.9 of the linear half-width to the
    // first zero stays inside it
    let reach = approx * PI / (2.0 * SINC2_HALF_WIDTH) * 0.9;
    let hi = bisect(half, center, center + reach, 1e-15);
    let lo = bisect(half, center - reach, center, 1e-15);
    match (lo, hi) {
        (Some(lo), Some(hi)) => Ok(hi - lo),
        _ => Err(Error::InvalidParameter(
            "half-maximum points not bracketed inside the main lobe".into(),
        )),
    }
}

/// S(omega) = kappa^2 L^2 sinc^2(Dk L/2) / 2pi on the given signal grid
/// (photons per second per rad/s).
pub fn freespace_spectrum(
    crystal: &CrystalSpec,
    kappa: f64,
    omega_grid: &[f64],
    omega_pump: f64,
) -> Result<Vec<f64>> {
    let l = crystal.length;
    omega_grid
        .iter()
        .map(|&w| {
            let dk = delta_k(crystal, w, omega_pump)?;
            Ok(kappa * kappa * l * l * sinc(dk * l / 2.0).powi(2) / (2.0 * PI))
        })
        .collect()
}

/// Small-gain two-port coefficients of the backward interaction.
#[derive(Debug, Clone)]
pub struct FreeSpaceCoefficients {
    pub omega: Vec<f64>,
    pub a: Vec<Complex64>,
    pub b: Vec<Complex64>,
    pub c: Vec<Complex64>,
    pub d: Vec<Complex64>,
    /// 1/m
    pub kappa: f64,
    /// k_s + k_i at each grid point, 1/m
    pub k_sum: Vec<f64>,
    pub gain_too_large: bool,
}

pub fn freespace_coefficients(
    crystal: &CrystalSpec,
    kappa: f64,
    omega_grid: &[f64],
    omega_pump: f64,
) -> Result<FreeSpaceCoefficients> {
    if crystal.geometry != Geometry::Backward {
        return Err(Error::InvalidParameter(
            "two-port coefficients are defined for the backward geometry".into(),
        ));
    }
    let l = crystal.length;
    let n = omega_grid.len();
    let mut out = FreeSpaceCoefficients {
        omega: omega_grid.to_vec(),
        a: Vec::with_capacity(n),
        b: Vec::with_capacity(n),
        c: Vec::with_capacity(n),
        d: Vec::with_capacity(n),
        kappa,
        k_sum: Vec::with_capacity(n),
        gain_too_large: (kappa * l).abs() > SMALL_GAIN_LIMIT,
    };
    for &w in omega_grid {
        let ks = crystal.signal_sample(w)?.wavenumber();
        let ki = crystal.idler_sample(omega_pump - w)?.wavenumber();
        let dk = delta_k(crystal, w, omega_pump)?;
        let b = Complex64::i()
            * kappa
            * l
            * sinc(dk * l / 2.0)
            * Complex64::from_polar(1.0, (dk / 2.0 + ks + ki) * l);
        out.a.push(Complex64::from_polar(1.0, ks * l));
        out.d.push(Complex64::from_polar(1.0, ki * l));
        out.c.push(b.conj() * Complex64::from_polar(1.0, (ks + ki) * l));
        out.b.push(b);
        out.k_sum.push(ks + ki);
    }
    Ok(out)
}

/// Rate and gain linewidth of a non-resonant source, for brightness
/// comparisons. The rate integrates sinc^2 over the linearized mismatch:
/// R = kappa^2 L / |dDk/dw|.
pub fn freespace_source(
    crystal: &CrystalSpec,
    kappa: f64,
    omega_pump: f64,
    omega_guess: f64,
    pump_power: f64,
) -> Result<SourceFigure> {
    let center = phase_matched_signal(crystal, omega_pump, omega_guess)?;
    let slope = delta_k_slope(crystal, center, omega_pump)?.abs();
    if crystal.geometry == Geometry::Forward {
        let s = crystal.signal_sample(center)?.inverse_group_velocity();
        if slope < 1e-9 * s {
            return Err(Error::DegenerateForward(slope));
        }
    }
    Ok(SourceFigure {
        rate: kappa * kappa * crystal.length / slope,
        linewidth: gain_linewidth_exact(crystal, omega_pump, center)?,
        pump_power,
    })
}
