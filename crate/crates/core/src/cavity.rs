//! Standing-wave cavity filled by the crystal: mode spacing, coupling and
//! decay rates, mode-pair selection, cluster spacing and the single-mode
//! test.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::dispersion::DispersionSample;
use crate::error::{Error, Result};
use crate::numerics::bisect;
use crate::phasematch::CrystalSpec;
use crate::units::SPEED_OF_LIGHT;

/// Longitudinal mode number selection; `"auto"` or an integer in config.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModeIndex {
    Auto,
    Index(u64),
}

impl Serialize for ModeIndex {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            ModeIndex::Auto => s.serialize_str("auto"),
            ModeIndex::Index(i) => s.serialize_u64(*i),
        }
    }
}

impl<'de> Deserialize<'de> for ModeIndex {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(u64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Int(i) => Ok(ModeIndex::Index(i)),
            Raw::Text(t) if t == "auto" => Ok(ModeIndex::Auto),
            Raw::Text(t) => Err(serde::de::Error::custom(format!(
                "expected \"auto\" or a mode number, got \"{t}\""
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CavitySpec {
    /// m
    pub length: f64,
    pub reflectivity_signal: f64,
    pub reflectivity_idler: f64,
    /// single-pass power loss in the crystal
    pub loss_signal: f64,
    pub loss_idler: f64,
    pub mode_q: ModeIndex,
    pub mode_r: ModeIndex,
}

impl CavitySpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.length > 0.0 && self.length.is_finite()) {
            return Err(Error::InvalidParameter(format!("cavity length {} m", self.length)));
        }
        for (name, r) in [("signal", self.reflectivity_signal), ("idler", self.reflectivity_idler)] {
            if !(r > 0.0 && r <= 1.0) {
                return Err(Error::InvalidParameter(format!(
                    "{name} mirror reflectivity {r} not in (0, 1]"
                )));
            }
        }
        for (name, xi) in [("signal", self.loss_signal), ("idler", self.loss_idler)] {
            if !(xi >= 0.0 && xi.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} single-pass loss {xi} < 0")));
            }
        }
        for idx in [self.mode_q, self.mode_r] {
            if idx == ModeIndex::Index(0) {
                return Err(Error::InvalidParameter("mode indices start at 1".into()));
            }
        }
        Ok(())
    }
}

/// Angular free spectral range of a standing-wave cavity of optical length
/// `n_group * length`: pi c / (n_g L).
pub fn mode_spacing(n_group: f64, length: f64) -> Result<f64> {
    if !(n_group >= 1.0) || !(length > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "mode spacing needs n_g >= 1 and L > 0 (got {n_group}, {length})"
        )));
    }
    Ok(PI * SPEED_OF_LIGHT / (n_group * length))
}

/// Per-band cavity rates, all in rad/s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayRates {
    pub spacing_s: f64,
    pub spacing_i: f64,
    /// output coupling, Delta (1 - r)
    pub coupling_s: f64,
    pub coupling_i: f64,
    /// total decay, 2 xi Delta + coupling
    pub decay_s: f64,
    pub decay_i: f64,
    pub finesse_s: f64,
    pub finesse_i: f64,
}

impl DecayRates {
    /// Build from explicit rates (spacing defaults to 1000x decay so that
    /// finesse is defined); used by tests and synthetic scenarios.
    pub fn from_rates(coupling_s: f64, coupling_i: f64, decay_s: f64, decay_i: f64) -> Self {
        let spacing_s = 1000.0 * decay_s;
        let spacing_i = 1000.0 * decay_i;
        DecayRates {
            spacing_s,
            spacing_i,
            coupling_s,
            coupling_i,
            decay_s,
            decay_i,
            finesse_s: spacing_s / decay_s,
            finesse_i: spacing_i / decay_i,
        }
    }

    pub fn is_zero_decay(&self) -> bool {
        self.decay_s == 0.0 || self.decay_i == 0.0
    }

    pub fn ensure_decaying(&self) -> Result<()> {
        if self.is_zero_decay() {
            Err(Error::ZeroDecay)
        } else {
            Ok(())
        }
    }

    pub fn is_lossless(&self) -> bool {
        self.coupling_s == self.decay_s && self.coupling_i == self.decay_i
    }

    pub fn max_decay(&self) -> f64 {
        self.decay_s.max(self.decay_i)
    }

    pub fn min_decay(&self) -> f64 {
        self.decay_s.min(self.decay_i)
    }
}

pub fn decay_rates(
    spec: &CavitySpec,
    signal: &DispersionSample,
    idler: &DispersionSample,
) -> Result<DecayRates> {
    spec.validate()?;
    let spacing_s = mode_spacing(signal.group_index, spec.length)?;
    let spacing_i = mode_spacing(idler.group_index, spec.length)?;
    let coupling_s = spacing_s * (1.0 - spec.reflectivity_signal);
    let coupling_i = spacing_i * (1.0 - spec.reflectivity_idler);
    let decay_s = 2.0 * spec.loss_signal * spacing_s + coupling_s;
    let decay_i = 2.0 * spec.loss_idler * spacing_i + coupling_i;
    Ok(DecayRates {
        spacing_s,
        spacing_i,
        coupling_s,
        coupling_i,
        decay_s,
        decay_i,
        finesse_s: spacing_s / decay_s,
        finesse_i: spacing_i / decay_i,
    })
}

/// Cold-cavity signal/idler resonances the pair is emitted into.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModePair {
    pub q: u64,
    pub r: u64,
    /// rad/s
    pub omega_q: f64,
    pub omega_r: f64,
    /// omega_p - Omega_q - Omega_r, rad/s; zero when doubly resonant
    pub mismatch: f64,
}

fn round_trip_phase_index(n: f64, omega: f64, length: f64) -> f64 {
    n * omega * length / (PI * SPEED_OF_LIGHT)
}

fn resonance(crystal: &CrystalSpec, signal_band: bool, index: u64, length: f64, near: f64) -> Result<f64> {
    let f = |w: f64| {
        let n = if signal_band {
            crystal.signal_sample(w).map(|s| s.n)
        } else {
            crystal.idler_sample(w).map(|s| s.n)
        };
        n.map(|n| round_trip_phase_index(n, w, length) - index as f64)
            .unwrap_or(f64::NAN)
    };
    let fsr = PI * SPEED_OF_LIGHT / length;
    let mut span = fsr;
    while span < 0.2 * near {
        if let Some(w) = bisect(f, near - span, near + span, 1e-15) {
            return Ok(w);
        }
        span *= 4.0;
    }
    Err(Error::InvalidParameter(format!("cavity mode {index} not found near {near:e} rad/s")))
}

/// Resolve the cavity mode pair. With `Auto` the signal mode nearest the
/// target signal frequency is taken and the idler is assumed tuned onto
/// omega_p - Omega_q (double resonance); explicit indices are solved from
/// their own resonance conditions and any residual mismatch is reported.
pub fn resolve_mode_pair(
    crystal: &CrystalSpec,
    cavity: &CavitySpec,
    omega_pump: f64,
    omega_signal_target: f64,
) -> Result<ModePair> {
    cavity.validate()?;
    let l = cavity.length;
    let q = match cavity.mode_q {
        ModeIndex::Index(q) => q,
        ModeIndex::Auto => {
            let n = crystal.signal_sample(omega_signal_target)?.n;
            round_trip_phase_index(n, omega_signal_target, l).round() as u64
        }
    };
    let omega_q = resonance(crystal, true, q, l, omega_signal_target)?;
    let (r, omega_r) = match cavity.mode_r {
        ModeIndex::Auto => {
            let w = omega_pump - omega_q;
            let n = crystal.idler_sample(w)?.n;
            (round_trip_phase_index(n, w, l).round() as u64, w)
        }
        ModeIndex::Index(r) => (r, resonance(crystal, false, r, l, omega_pump - omega_q)?),
    };
    Ok(ModePair {
        q,
        r,
        omega_q,
        omega_r,
        mismatch: omega_pump - omega_q - omega_r,
    })
}

/// Coefficients of M x^2 + N x = +-1 and the selected root.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClusterSpacing {
    /// s^2
    pub m: f64,
    /// s
    pub n: f64,
    /// rad/s
    pub spacing: f64,
}

/// M and N from the signal and idler dispersion samples (same crystal
/// length); the samples carry omega_s and omega_i.
pub fn cluster_coefficients(length: f64, signal: &DispersionSample, idler: &DispersionSample) -> (f64, f64) {
    let m = length / (2.0 * PI * SPEED_OF_LIGHT)
        * (2.0 * (signal.dn_domega + idler.dn_domega)
            + signal.omega * signal.d2n_domega2
            + idler.omega * idler.d2n_domega2);
    let n = length / (PI * SPEED_OF_LIGHT)
        * (signal.n - idler.n + signal.omega * signal.dn_domega - idler.omega * idler.dn_domega);
    (m, n)
}

/// Real roots of a x^2 + b x + c, computed without cancellation.
fn quadratic_roots(a: f64, b: f64, c: f64) -> Vec<f64> {
    if a == 0.0 {
        return if b == 0.0 { Vec::new() } else { vec![-c / b] };
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return Vec::new();
    }
    let q = -0.5 * (b + b.signum() * disc.sqrt());
    if q == 0.0 {
        return vec![0.0];
    }
    vec![q / a, c / q]
}

fn polish(m: f64, n: f64, rhs: f64, mut x: f64) -> f64 {
    for _ in 0..20 {
        let p = m * x * x + n * x - rhs;
        let dp = 2.0 * m * x + n;
        if dp == 0.0 {
            break;
        }
        let step = p / dp;
        x -= step;
        if step.abs() <= 1e-12 * x.abs() {
            break;
        }
    }
    x
}

/// Smallest strictly positive root over the right-hand sides in `order`.
pub fn smallest_positive_root(m: f64, n: f64, order: [f64; 2]) -> Result<f64> {
    let mut best: Option<f64> = None;
    for rhs in order {
        for root in quadratic_roots(m, n, -rhs) {
            let root = polish(m, n, rhs, root);
            if root > 0.0 && root.is_finite() {
                best = Some(best.map_or(root, |b: f64| b.min(root)));
            }
        }
    }
    best.ok_or(Error::NoPositiveRoot {
        disc_plus: n * n + 4.0 * m,
        disc_minus: n * n - 4.0 * m,
    })
}

pub fn cluster_spacing_from_samples(
    length: f64,
    signal: &DispersionSample,
    idler: &DispersionSample,
) -> Result<ClusterSpacing> {
    let (m, n) = cluster_coefficients(length, signal, idler);
    let spacing = smallest_positive_root(m, n, [1.0, -1.0])?;
    Ok(ClusterSpacing { m, n, spacing })
}

/// Cluster spacing of the crystal-filled cavity at the given signal and
/// pump frequencies.
pub fn cluster_spacing(crystal: &CrystalSpec, omega_signal: f64, omega_pump: f64) -> Result<ClusterSpacing> {
    let s = crystal.signal_sample(omega_signal)?;
    let i = crystal.idler_sample(omega_pump - omega_signal)?;
    cluster_spacing_from_samples(crystal.length, &s, &i)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingleModeCheck {
    pub single_mode: bool,
    /// cluster spacing / gain linewidth
    pub margin: f64,
}

pub fn single_mode_check(cluster: f64, gain_linewidth: f64) -> SingleModeCheck {
    debug_assert!(cluster > 0.0 && gain_linewidth > 0.0);
    SingleModeCheck {
        single_mode: cluster > gain_linewidth,
        margin: cluster / gain_linewidth,
    }
}
