//! Assembles a configured source and evaluates every stage of the
//! calculation: grating design, free-space phase matching, cavity, biphoton
//! and the non-resonant forward reference.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::biphoton::{
    self, brightness, coefficients, freespace_kappa_equivalent, kappa1_from_pump, pair_rate,
    resonant_vs_forward_ratio, BiphotonReport, Brightness, Calibration, G2Curve, PairedModeCoefficients,
    PairedModes, SourceFigure, Spectrum,
};
use crate::cavity::{
    cluster_spacing_from_samples, decay_rates, resolve_mode_pair, single_mode_check, CavitySpec,
    ClusterSpacing, DecayRates, ModePair, SingleModeCheck,
};
use crate::config::{LoadedConfig, SourceConfig};
use crate::error::{Error, Result};
use crate::numerics::linspace;
use crate::oracle::{
    cavity_transfer_oracle, spatial_two_port, Integrator, SeededRun, SpatialProblem,
};
use crate::phasematch::{
    backward_forward_ratio, delta_k, freespace_coefficients, freespace_source, freespace_spectrum,
    gain_linewidth, gain_linewidth_exact, mode_pair_mismatch, CrystalSpec, Geometry,
};
use crate::units::{wavelength_to_omega, wavenumber_cm_to_rad_s};

#[derive(Debug, Clone)]
pub struct Model {
    pub config: SourceConfig,
    pub hash: String,
    /// crystal with the poling period in force
    pub crystal: CrystalSpec,
    pub cavity: CavitySpec,
    pub omega_pump: f64,
    /// design signal frequency
    pub omega_signal: f64,
    pub pump_power: f64,
    pub calibration: Option<Calibration>,
    pub modes: ModePair,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DesignReport {
    pub poling_period: f64,
    pub qpm_order: u32,
    pub grating_wavevector: f64,
    pub n_pump: f64,
    pub n_signal: f64,
    pub n_idler: f64,
    pub group_index_signal: f64,
    pub group_index_idler: f64,
    /// mismatch at the design point, 1/m
    pub delta_k: f64,
    /// forward-geometry period for the same wavelengths
    pub forward_poling_period: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhaseMatchReport {
    pub gain_linewidth_backward: f64,
    pub gain_linewidth_backward_exact: f64,
    pub gain_linewidth_forward: f64,
    pub backward_forward_ratio: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CavityReport {
    pub rates: DecayRates,
    pub modes: ModePair,
    pub cluster: ClusterSpacing,
    pub single_mode: SingleModeCheck,
    pub gain_linewidth: f64,
}

#[derive(Debug, Clone)]
pub struct BiphotonOutputs {
    pub modes: PairedModes,
    /// mismatch of the resonant mode pair, 1/m
    pub dk_prime: f64,
    pub coefficients: PairedModeCoefficients,
    pub spectrum: Spectrum,
    pub g2: G2Curve,
    pub rate: f64,
    pub brightness: Brightness,
    pub report: BiphotonReport,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ForwardReference {
    /// equivalent traveling-wave coupling, 1/m
    pub kappa: f64,
    pub poling_period: f64,
    pub figure: SourceFigure,
    pub ratio: f64,
}

/// Free-space spectra of both geometries plus the signal frequencies of
/// neighbouring cavity mode pairs.
#[derive(Debug, Clone)]
pub struct FreeSpaceOutputs {
    pub omega: Vec<f64>,
    pub center: f64,
    pub backward: Vec<f64>,
    pub forward: Vec<f64>,
    pub kappa: f64,
    pub mode_pair_markers: Vec<f64>,
}

/// Every scalar of the full report.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FullReport {
    pub design: DesignReport,
    pub phase_match: PhaseMatchReport,
    pub cavity: CavityReport,
    pub biphoton: BiphotonReport,
    pub kappa1: Complex64,
    pub dk_prime: f64,
    pub gain_too_large: bool,
    pub forward: ForwardReference,
    pub pump_power: f64,
}

impl Model {
    pub fn new(loaded: &LoadedConfig) -> Result<Self> {
        let cfg = &loaded.config;
        let omega_pump = wavelength_to_omega(cfg.pump_wavelength());
        let omega_signal = wavelength_to_omega(cfg.signal_wavelength());
        let c = &cfg.crystal;
        let design = |omega_signal: f64| {
            CrystalSpec::designed(
                cfg.crystal_length(),
                c.qpm_order,
                c.pump_axis,
                c.signal_axis,
                c.idler_axis,
                c.geometry,
                loaded.dispersion.clone(),
                omega_pump,
                omega_signal,
            )
        };
        let mut crystal = match cfg.poling_period() {
            Some(period) => CrystalSpec::new(
                cfg.crystal_length(),
                period,
                c.qpm_order,
                c.pump_axis,
                c.signal_axis,
                c.idler_axis,
                c.geometry,
                loaded.dispersion.clone(),
            )?,
            None => design(omega_signal)?,
        };
        let cavity = cfg.cavity_spec();
        let modes = resolve_mode_pair(&crystal, &cavity, omega_pump, omega_signal)?;
        if cfg.poling_period().is_none() {
            // put the gain peak on the resonant signal mode
            crystal = design(modes.omega_q)?;
        }
        Ok(Model {
            config: cfg.clone(),
            hash: loaded.hash.clone(),
            crystal,
            cavity,
            omega_pump,
            omega_signal,
            pump_power: cfg.pump_power(),
            calibration: cfg.calibration(),
            modes,
        })
    }

    fn forward_crystal(&self) -> Result<CrystalSpec> {
        let c = &self.crystal;
        CrystalSpec::designed(
            c.length,
            c.qpm_order,
            c.pump_axis,
            c.signal_axis,
            c.idler_axis,
            Geometry::Forward,
            c.dispersion.clone(),
            self.omega_pump,
            self.modes.omega_q,
        )
    }

    pub fn design(&self) -> Result<DesignReport> {
        let c = &self.crystal;
        let ws = self.omega_signal;
        let s = c.signal_sample(ws)?;
        let i = c.idler_sample(self.omega_pump - ws)?;
        let fwd = CrystalSpec::designed(
            c.length,
            c.qpm_order,
            c.pump_axis,
            c.signal_axis,
            c.idler_axis,
            Geometry::Forward,
            c.dispersion.clone(),
            self.omega_pump,
            ws,
        )?;
        Ok(DesignReport {
            poling_period: c.poling_period,
            qpm_order: c.qpm_order,
            grating_wavevector: c.grating_wavevector(),
            n_pump: c.pump_sample(self.omega_pump)?.n,
            n_signal: s.n,
            n_idler: i.n,
            group_index_signal: s.group_index,
            group_index_idler: i.group_index,
            delta_k: delta_k(c, ws, self.omega_pump)?,
            forward_poling_period: fwd.poling_period,
        })
    }

    pub fn phase_match(&self) -> Result<PhaseMatchReport> {
        let c = &self.crystal;
        let (ws, wp) = (self.modes.omega_q, self.omega_pump);
        Ok(PhaseMatchReport {
            gain_linewidth_backward: gain_linewidth(c, Geometry::Backward, ws, wp)?,
            gain_linewidth_backward_exact: gain_linewidth_exact(&c.with_geometry(Geometry::Backward), wp, ws)?,
            gain_linewidth_forward: gain_linewidth(c, Geometry::Forward, ws, wp)?,
            backward_forward_ratio: backward_forward_ratio(c, ws, wp)?,
        })
    }

    pub fn cavity(&self) -> Result<CavityReport> {
        let c = &self.crystal;
        let m = self.modes;
        let rates = decay_rates(&self.cavity, &c.signal_sample(m.omega_q)?, &c.idler_sample(m.omega_r)?)?;
        let cluster = cluster_spacing_from_samples(
            self.cavity.length,
            &c.signal_sample(self.omega_signal)?,
            &c.idler_sample(self.omega_pump - self.omega_signal)?,
        )?;
        let gain = gain_linewidth(c, Geometry::Backward, m.omega_q, self.omega_pump)?;
        Ok(CavityReport {
            rates,
            modes: m,
            cluster,
            single_mode: single_mode_check(cluster.spacing, gain),
            gain_linewidth: gain,
        })
    }

    /// Coupled cavity modes with kappa1 from the calibration.
    pub fn paired_modes(&self) -> Result<(PairedModes, f64)> {
        let cav = self.cavity()?;
        let m = self.modes;
        let dk = mode_pair_mismatch(&self.crystal, self.omega_pump, m.omega_q, m.omega_r)?;
        let kappa1 = kappa1_from_pump(
            self.pump_power,
            self.calibration.as_ref(),
            &cav.rates,
            dk,
            self.crystal.length,
        )?;
        Ok((
            PairedModes {
                rates: cav.rates,
                kappa1,
                omega_q: m.omega_q,
                omega_r: m.omega_r,
                omega_pump: self.omega_pump,
            },
            dk,
        ))
    }

    pub fn spectrum_grid(&self, rates: &DecayRates) -> Vec<f64> {
        let g = &self.config.grids;
        let half = g.spectrum_half_width_gamma * rates.max_decay();
        linspace(self.modes.omega_q - half, self.modes.omega_q + half, g.spectrum_points)
    }

    pub fn tau_grid(&self, rates: &DecayRates) -> Vec<f64> {
        let g = &self.config.grids;
        let half = g.tau_half_width_gamma / rates.min_decay();
        linspace(-half, half, g.tau_points)
    }

    pub fn biphoton(&self) -> Result<BiphotonOutputs> {
        let (modes, dk_prime) = self.paired_modes()?;
        let rates = modes.rates;
        let coeffs = coefficients(&modes, &self.spectrum_grid(&rates))?;
        let spectrum = biphoton::spectrum(&coeffs);
        let g2 = biphoton::g2(
            &rates,
            modes.kappa1,
            &self.tau_grid(&rates),
            self.config.grids.include_accidentals,
        )?;
        let rate = pair_rate(&rates, modes.kappa1)?;
        let b = brightness(rate, spectrum.linewidth, self.pump_power)?;
        let report = BiphotonReport {
            linewidth: spectrum.linewidth,
            rate,
            correlation_time: g2.correlation_time,
            coherence_time: g2.coherence_time,
            g2_peak: g2.peak,
            accidentals: g2.accidentals,
            brightness_per_mhz: b.per_mhz,
            brightness_per_mhz_per_mw: b.per_mhz_per_mw,
        };
        Ok(BiphotonOutputs {
            modes,
            dk_prime,
            coefficients: coeffs,
            spectrum,
            g2,
            rate,
            brightness: b,
            report,
        })
    }

    /// Traveling-wave coupling equivalent to the calibrated cavity coupling.
    pub fn freespace_kappa(&self, kappa1: Complex64) -> Result<f64> {
        let s = self.crystal.signal_sample(self.modes.omega_q)?;
        let i = self.crystal.idler_sample(self.omega_pump - self.modes.omega_q)?;
        Ok(freespace_kappa_equivalent(
            kappa1.norm(),
            s.group_velocity,
            i.group_velocity,
        ))
    }

    /// Non-resonant forward source of the same material, length and pump
    /// power, compared with the resonant source.
    pub fn forward_reference(&self, bi: &BiphotonOutputs) -> Result<ForwardReference> {
        // compare at exact phase matching: remove the mode-pair sinc
        let x = bi.dk_prime * self.crystal.length / 2.0;
        let kappa1 = bi.modes.kappa1.norm() / crate::phasematch::sinc(x).abs();
        let kappa = self.freespace_kappa(Complex64::new(kappa1, 0.0))?;
        let fwd = self.forward_crystal()?;
        let figure = freespace_source(&fwd, kappa, self.omega_pump, self.modes.omega_q, self.pump_power)?;
        let resonant = SourceFigure {
            rate: bi.rate,
            linewidth: bi.spectrum.linewidth,
            pump_power: self.pump_power,
        };
        Ok(ForwardReference {
            kappa,
            poling_period: fwd.poling_period,
            figure,
            ratio: resonant_vs_forward_ratio(&resonant, &figure)?,
        })
    }

    pub fn freespace(&self) -> Result<FreeSpaceOutputs> {
        let (modes, _) = self.paired_modes()?;
        let kappa = self.freespace_kappa(modes.kappa1)?;
        let g = &self.config.grids;
        let center = self.modes.omega_q;
        let half = wavenumber_cm_to_rad_s(g.freespace_half_width_cm);
        let omega = linspace(center - half, center + half, g.freespace_points);
        let backward = freespace_spectrum(&self.crystal.with_geometry(Geometry::Backward), kappa, &omega, self.omega_pump)?;
        let forward = freespace_spectrum(&self.forward_crystal()?, kappa, &omega, self.omega_pump)?;
        let spacing = self.cavity()?.cluster.spacing;
        let reach = (half / spacing).floor() as i64;
        let mode_pair_markers = (-reach..=reach).map(|k| center + k as f64 * spacing).collect();
        Ok(FreeSpaceOutputs {
            omega,
            center,
            backward,
            forward,
            kappa,
            mode_pair_markers,
        })
    }

    pub fn report(&self) -> Result<FullReport> {
        let bi = self.biphoton()?;
        Ok(FullReport {
            design: self.design()?,
            phase_match: self.phase_match()?,
            cavity: self.cavity()?,
            biphoton: bi.report,
            kappa1: bi.modes.kappa1,
            dk_prime: bi.dk_prime,
            gain_too_large: bi.coefficients.gain_too_large,
            forward: self.forward_reference(&bi)?,
            pump_power: self.pump_power,
        })
    }

    /// Run the time-domain and spatial oracles on this model's parameters.
    pub fn verify(&self) -> Result<Vec<Check>> {
        let (modes, _) = self.paired_modes()?;
        let rates = modes.rates;
        let mut checks = Vec::new();

        // small coupling keeps the O(kappa1^2) terms below the tolerance
        let probe = PairedModes {
            kappa1: Complex64::new(1e-4 * rates.min_decay(), 0.0),
            ..PairedModes::resonant(rates, modes.kappa1, modes.omega_q, modes.omega_r)
        };
        let mut worst = 0.0f64;
        for delta in linspace(-3.0 * rates.max_decay(), 3.0 * rates.max_decay(), 21) {
            let out = cavity_transfer_oracle(&probe, &SeededRun::for_modes(&probe, delta, Integrator::Rk4))?;
            let w = probe.omega_q + delta;
            worst = worst
                .max((out.signal_ratio - probe.a1(w)).norm() / probe.a1(w).norm())
                .max((out.idler_ratio - probe.c1(w)).norm() / probe.c1(w).norm());
        }
        checks.push(Check::new("cavity ODE vs A1/C1 over 21 detunings", worst, 1e-6));

        let bwd = self.crystal.with_geometry(Geometry::Backward);
        let kappa = 1e-5 / bwd.length;
        let width = gain_linewidth(&bwd, Geometry::Backward, modes.omega_q, self.omega_pump)?;
        let grid = [modes.omega_q, modes.omega_q + 0.7 * width, modes.omega_q - 1.9 * width];
        let closed = freespace_coefficients(&bwd, kappa, &grid, self.omega_pump)?;
        let mut worst = 0.0f64;
        for (j, &w) in grid.iter().enumerate() {
            let t = spatial_two_port(&SpatialProblem::from_crystal(&bwd, kappa, w, self.omega_pump)?)?;
            for (num, exact) in [(t.a, closed.a[j]), (t.b, closed.b[j]), (t.c, closed.c[j]), (t.d, closed.d[j])] {
                worst = worst.max((num - exact).norm() / exact.norm());
            }
        }
        checks.push(Check::new("spatial BVP vs A/B/C/D", worst, 1e-8));

        let mut zero = SpatialProblem::from_crystal(&bwd, 1e-3 / bwd.length, modes.omega_q, self.omega_pump)?;
        zero.delta_k = 2.0 * PI / bwd.length;
        let t = spatial_two_port(&zero)?;
        checks.push(Check::new("spatial BVP |B| at the sinc zero", t.b.norm(), 1e-8));
        Ok(checks)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub limit: f64,
    pub pass: bool,
}

impl Check {
    pub fn new(name: &str, value: f64, limit: f64) -> Self {
        Check {
            name: name.into(),
            value,
            limit,
            pass: value <= limit,
        }
    }
}

/// Error out if any check failed.
pub fn require(checks: &[Check]) -> Result<()> {
    let failed: Vec<String> = checks
        .iter()
        .filter(|c| !c.pass)
        .map(|c| format!("{} ({:e} > {:e})", c.name, c.value, c.limit))
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Error::Verification(failed.join("; ")))
    }
}
