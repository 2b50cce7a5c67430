//! Refractive index and its frequency derivatives for each crystal axis,
//! from Sellmeier data loaded at runtime.
//!
//! Two functional forms are supported, both in vacuum wavelength `l` (um):
//!
//! * `pole`:      n^2 = A + sum_j B_j / (l^2 - C_j) - D l^2
//! * `sellmeier`: n^2 = A + sum_j B_j l^2 / (l^2 - C_j) - D l^2
//!
//! Since `B l^2/(l^2 - C) = B + B C/(l^2 - C)`, the second form is stored
//! internally in pole form. Derivatives are taken analytically in wavelength
//! and chained to angular frequency; a Richardson-extrapolated central
//! difference in frequency is available as a cross-check.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::{omega_to_wavelength, SPEED_OF_LIGHT};

/// Principal crystal axis along which a field is polarized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    Y,
    Z,
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axis::Y => "y",
            Axis::Z => "z",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SellmeierForm {
    Pole,
    Sellmeier,
}

impl FromStr for SellmeierForm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pole" => Ok(SellmeierForm::Pole),
            "sellmeier" => Ok(SellmeierForm::Sellmeier),
            other => Err(Error::InvalidModel(format!("unknown form tag '{other}'"))),
        }
    }
}

/// How `dispersion_sample` obtains dn/domega and d2n/domega2.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Derivative {
    #[default]
    Analytic,
    /// Central differences with one Richardson step; `rel_step` is h/omega.
    FiniteDifference { rel_step: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SellmeierModel {
    axis: Axis,
    form: SellmeierForm,
    coefficients: BTreeMap<String, f64>,
    valid_range_um: (f64, f64),
    citation: String,
    // pole-form terms
    a: f64,
    poles: Vec<(f64, f64)>,
    d: f64,
}

/// Index and derivatives at one angular frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DispersionSample {
    pub omega: f64,
    pub n: f64,
    /// s/rad
    pub dn_domega: f64,
    /// s^2/rad^2
    pub d2n_domega2: f64,
    /// m/s
    pub group_velocity: f64,
    pub group_index: f64,
}

impl DispersionSample {
    fn from_parts(omega: f64, n: f64, dn: f64, d2n: f64) -> Self {
        let group_index = n + omega * dn;
        DispersionSample {
            omega,
            n,
            dn_domega: dn,
            d2n_domega2: d2n,
            group_velocity: SPEED_OF_LIGHT / group_index,
            group_index,
        }
    }

    /// Phase wavenumber n omega / c, 1/m.
    pub fn wavenumber(&self) -> f64 {
        self.n * self.omega / SPEED_OF_LIGHT
    }

    /// Inverse group velocity dk/domega, s/m.
    pub fn inverse_group_velocity(&self) -> f64 {
        self.group_index / SPEED_OF_LIGHT
    }
}

impl SellmeierModel {
    pub fn new(
        axis: Axis,
        form: SellmeierForm,
        coefficients: BTreeMap<String, f64>,
        valid_range_um: (f64, f64),
        citation: impl Into<String>,
    ) -> Result<Self> {
        let (lo, hi) = valid_range_um;
        if !(lo.is_finite() && hi.is_finite() && lo > 0.0 && hi > lo) {
            return Err(Error::InvalidModel(format!(
                "axis {axis}: valid range [{lo}, {hi}] um is not a positive interval"
            )));
        }
        for (name, v) in &coefficients {
            if !v.is_finite() {
                return Err(Error::InvalidModel(format!(
                    "axis {axis}: coefficient {name} is not finite"
                )));
            }
        }
        let a = *coefficients
            .get("A")
            .ok_or_else(|| Error::InvalidModel(format!("axis {axis}: missing coefficient A")))?;
        let d = coefficients.get("D").copied().unwrap_or(0.0);

        let mut raw_poles = Vec::new();
        let mut j = 1;
        loop {
            let b = coefficients.get(&format!("B{j}"));
            let c = coefficients.get(&format!("C{j}"));
            match (b, c) {
                (Some(&b), Some(&c)) => raw_poles.push((b, c)),
                (None, None) => break,
                _ => {
                    return Err(Error::InvalidModel(format!(
                        "axis {axis}: B{j} and C{j} must be given together"
                    )))
                }
            }
            j += 1;
        }
        let expected = 1 + usize::from(coefficients.contains_key("D")) + 2 * raw_poles.len();
        if coefficients.len() != expected {
            let known: Vec<&String> = coefficients
                .keys()
                .filter(|k| {
                    !(k.as_str() == "A"
                        || k.as_str() == "D"
                        || (1..=raw_poles.len())
                            .any(|i| **k == format!("B{i}") || **k == format!("C{i}")))
                })
                .collect();
            return Err(Error::InvalidModel(format!(
                "axis {axis}: unrecognized coefficients {known:?}"
            )));
        }

        let (a, poles) = match form {
            SellmeierForm::Pole => (a, raw_poles),
            SellmeierForm::Sellmeier => {
                let shift: f64 = raw_poles.iter().map(|(b, _)| b).sum();
                (a + shift, raw_poles.iter().map(|&(b, c)| (b * c, c)).collect())
            }
        };
        for &(b, c) in &poles {
            if b != 0.0 && c >= lo * lo && c <= hi * hi {
                return Err(Error::InvalidModel(format!(
                    "axis {axis}: pole at {:.4} um lies inside the valid range",
                    c.sqrt()
                )));
            }
        }

        let model = SellmeierModel {
            axis,
            form,
            coefficients,
            valid_range_um,
            citation: citation.into(),
            a,
            poles,
            d,
        };
        // n > 1 across the valid range
        for i in 0..=256 {
            let l = lo + (hi - lo) * i as f64 / 256.0;
            let (eps, _, _) = model.permittivity_um(l);
            if !(eps > 1.0) {
                return Err(Error::InvalidModel(format!(
                    "axis {axis}: n^2 = {eps} <= 1 at {l:.4} um"
                )));
            }
        }
        Ok(model)
    }

    /// Dispersionless model with n = sqrt(a) over the given range.
    pub fn constant(axis: Axis, n: f64, valid_range_um: (f64, f64)) -> Result<Self> {
        let coefficients = BTreeMap::from([("A".to_string(), n * n)]);
        Self::new(axis, SellmeierForm::Pole, coefficients, valid_range_um, "constant index")
    }

    pub fn axis(&self) -> Axis {
        self.axis
    }

    pub fn form(&self) -> SellmeierForm {
        self.form
    }

    pub fn coefficients(&self) -> &BTreeMap<String, f64> {
        &self.coefficients
    }

    pub fn valid_range_um(&self) -> (f64, f64) {
        self.valid_range_um
    }

    pub fn citation(&self) -> &str {
        &self.citation
    }

    /// n^2 and its first two wavelength derivatives (wavelength in um).
    fn permittivity_um(&self, l: f64) -> (f64, f64, f64) {
        let l2 = l * l;
        let mut eps = self.a - self.d * l2;
        let mut d1 = -2.0 * self.d * l;
        let mut d2 = -2.0 * self.d;
        for &(b, c) in &self.poles {
            let q = l2 - c;
            eps += b / q;
            d1 += -2.0 * b * l / (q * q);
            d2 += -2.0 * b / (q * q) + 8.0 * b * l2 / (q * q * q);
        }
        (eps, d1, d2)
    }

    fn check_range(&self, omega: f64) -> Result<f64> {
        let l_um = omega_to_wavelength(omega) * 1e6;
        let (lo, hi) = self.valid_range_um;
        if !(omega > 0.0) || !(l_um >= lo && l_um <= hi) {
            return Err(Error::OutOfRange {
                wavelength_um: l_um,
                min_um: lo,
                max_um: hi,
            });
        }
        Ok(l_um)
    }

    pub fn refractive_index(&self, omega: f64) -> Result<f64> {
        let l = self.check_range(omega)?;
        Ok(self.permittivity_um(l).0.sqrt())
    }

    pub fn dispersion_sample(&self, omega: f64) -> Result<DispersionSample> {
        self.dispersion_sample_with(omega, Derivative::Analytic)
    }

    pub fn dispersion_sample_with(&self, omega: f64, method: Derivative) -> Result<DispersionSample> {
        match method {
            Derivative::Analytic => self.analytic_sample(omega),
            Derivative::FiniteDifference { rel_step } => self.finite_difference_sample(omega, rel_step),
        }
    }

    fn analytic_sample(&self, omega: f64) -> Result<DispersionSample> {
        let l = self.check_range(omega)?;
        let (eps, e1, e2) = self.permittivity_um(l);
        let n = eps.sqrt();
        // wavelength derivatives (per um)
        let n_l = e1 / (2.0 * n);
        let n_ll = (0.5 * e2 - n_l * n_l) / n;
        // l = 2 pi c / omega:  dl/dw = -l/w,  d2l/dw2 = 2 l / w^2
        let dl = -l / omega;
        let d2l = 2.0 * l / (omega * omega);
        let dn = n_l * dl;
        let d2n = n_ll * dl * dl + n_l * d2l;
        Ok(DispersionSample::from_parts(omega, n, dn, d2n))
    }

    fn finite_difference_sample(&self, omega: f64, rel_step: f64) -> Result<DispersionSample> {
        let h = rel_step * omega;
        let n0 = self.refractive_index(omega)?;
        // stencil must stay inside the valid range
        let np = self.refractive_index(omega + h)?;
        let nm = self.refractive_index(omega - h)?;
        let np2 = self.refractive_index(omega + 0.5 * h)?;
        let nm2 = self.refractive_index(omega - 0.5 * h)?;

        let d1_h = (np - nm) / (2.0 * h);
        let d1_h2 = (np2 - nm2) / h;
        let dn = (4.0 * d1_h2 - d1_h) / 3.0;

        let d2_h = (np - 2.0 * n0 + nm) / (h * h);
        let d2_h2 = (np2 - 2.0 * n0 + nm2) / (0.25 * h * h);
        let d2n = (4.0 * d2_h2 - d2_h) / 3.0;
        Ok(DispersionSample::from_parts(omega, n0, dn, d2n))
    }
}

pub fn refractive_index(model: &SellmeierModel, omega: f64) -> Result<f64> {
    model.refractive_index(omega)
}

pub fn dispersion_sample(model: &SellmeierModel, omega: f64) -> Result<DispersionSample> {
    model.dispersion_sample(omega)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct DispersionFile {
    version: u32,
    crystal: String,
    axis: Vec<AxisRecord>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct AxisRecord {
    axis: Axis,
    form: SellmeierForm,
    valid_range_um: [f64; 2],
    citation: String,
    coefficients: BTreeMap<String, f64>,
}

/// All axis models of one crystal, as read from a dispersion data file.
#[derive(Debug, Clone, PartialEq)]
pub struct DispersionData {
    pub crystal: String,
    models: Vec<SellmeierModel>,
}

impl DispersionData {
    pub fn from_models(crystal: impl Into<String>, models: Vec<SellmeierModel>) -> Self {
        DispersionData {
            crystal: crystal.into(),
            models,
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let file: DispersionFile = toml::from_str(text)
            .map_err(|e| Error::InvalidModel(format!("dispersion file: {e}")))?;
        if file.version != 1 {
            return Err(Error::InvalidModel(format!(
                "unsupported dispersion file version {}",
                file.version
            )));
        }
        let mut models = Vec::with_capacity(file.axis.len());
        for rec in file.axis {
            if models.iter().any(|m: &SellmeierModel| m.axis == rec.axis) {
                return Err(Error::InvalidModel(format!("duplicate record for axis {}", rec.axis)));
            }
            models.push(SellmeierModel::new(
                rec.axis,
                rec.form,
                rec.coefficients,
                (rec.valid_range_um[0], rec.valid_range_um[1]),
                rec.citation,
            )?);
        }
        Ok(DispersionData {
            crystal: file.crystal,
            models,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn axis(&self, axis: Axis) -> Result<&SellmeierModel> {
        self.models
            .iter()
            .find(|m| m.axis == axis)
            .ok_or_else(|| Error::InvalidModel(format!("no dispersion record for axis {axis}")))
    }

    pub fn models(&self) -> &[SellmeierModel] {
        &self.models
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::wavelength_to_omega;

    fn ktp() -> DispersionData {
        DispersionData::parse(include_str!("../data/ktp_kato2002.toml")).unwrap()
    }

    #[test]
    fn ktp_z_index_at_1064() {
        // golden value from evaluating the shipped fit once: 1.829669
        let n = ktp().axis(Axis::Z).unwrap().refractive_index(wavelength_to_omega(1.064e-6)).unwrap();
        assert!((n - 1.83).abs() < 0.01);
        assert!((n - 1.829_669).abs() < 1e-6);
    }

    #[test]
    fn below_range_is_an_error() {
        let data = ktp();
        let err = data.axis(Axis::Y).unwrap().refractive_index(wavelength_to_omega(0.40e-6));
        assert!(matches!(err, Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn zeroed_resonances_give_sqrt_a() {
        let coeffs = BTreeMap::from([
            ("A".to_string(), 3.1),
            ("B1".to_string(), 0.0),
            ("C1".to_string(), 0.05),
            ("B2".to_string(), 0.0),
            ("C2".to_string(), 40.0),
        ]);
        let m = SellmeierModel::new(Axis::Y, SellmeierForm::Sellmeier, coeffs, (0.4, 4.0), "").unwrap();
        for l in [0.5e-6, 1.0e-6, 3.0e-6] {
            let n = m.refractive_index(wavelength_to_omega(l)).unwrap();
            assert!((n - 3.1f64.sqrt()).abs() < 1e-15);
        }
    }

    #[test]
    fn dispersionless_sample() {
        let m = SellmeierModel::constant(Axis::Y, 1.5, (0.4, 4.0)).unwrap();
        let s = m.dispersion_sample(wavelength_to_omega(1e-6)).unwrap();
        assert_eq!(s.dn_domega, 0.0);
        assert!((s.group_velocity - SPEED_OF_LIGHT / 1.5).abs() < 1e-6);
    }

    #[test]
    fn ktp_y_group_index() {
        let s = ktp().axis(Axis::Y).unwrap().dispersion_sample(wavelength_to_omega(1.064e-6)).unwrap();
        assert!(s.group_index > 1.7 && s.group_index < 1.9, "{}", s.group_index);
        assert!(s.group_velocity > 0.0 && s.group_velocity < SPEED_OF_LIGHT);
    }

    #[test]
    fn finite_difference_agrees_with_analytic() {
        let data = ktp();
        for axis in [Axis::Y, Axis::Z] {
            let m = data.axis(axis).unwrap();
            for l in [0.532e-6, 0.8e-6, 1.064e-6, 1.55e-6, 3.0e-6] {
                let w = wavelength_to_omega(l);
                let a = m.dispersion_sample(w).unwrap();
                let f = m
                    .dispersion_sample_with(w, Derivative::FiniteDifference { rel_step: 2e-3 })
                    .unwrap();
                let rel = ((f.dn_domega - a.dn_domega) / a.dn_domega).abs();
                assert!(rel < 1e-8, "axis {axis} l={l}: dn rel {rel}");
                let rel2 = ((f.d2n_domega2 - a.d2n_domega2) / a.d2n_domega2).abs();
                assert!(rel2 < 1e-5, "axis {axis} l={l}: d2n rel {rel2}");
            }
        }
    }

    #[test]
    fn richardson_step_halving() {
        let m = ktp().axis(Axis::Z).unwrap().clone();
        let w = wavelength_to_omega(1.064e-6);
        let a = m.dispersion_sample_with(w, Derivative::FiniteDifference { rel_step: 2e-3 }).unwrap();
        let b = m.dispersion_sample_with(w, Derivative::FiniteDifference { rel_step: 1e-3 }).unwrap();
        assert!(((a.dn_domega - b.dn_domega) / b.dn_domega).abs() < 1e-8);
    }

    #[test]
    fn stencil_outside_range_is_an_error() {
        let m = ktp().axis(Axis::Z).unwrap().clone();
        // 0.431 um is in range but a 1% stencil is not
        let w = wavelength_to_omega(0.431e-6);
        assert!(m.refractive_index(w).is_ok());
        let r = m.dispersion_sample_with(w, Derivative::FiniteDifference { rel_step: 1e-2 });
        assert!(matches!(r, Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn malformed_models_rejected() {
        let only_b = BTreeMap::from([("A".to_string(), 3.0), ("B1".to_string(), 0.1)]);
        assert!(SellmeierModel::new(Axis::Y, SellmeierForm::Pole, only_b, (0.4, 4.0), "").is_err());
        let stray = BTreeMap::from([("A".to_string(), 3.0), ("Q".to_string(), 0.1)]);
        assert!(SellmeierModel::new(Axis::Y, SellmeierForm::Pole, stray, (0.4, 4.0), "").is_err());
        let sub_unity = BTreeMap::from([("A".to_string(), 0.9)]);
        assert!(SellmeierModel::new(Axis::Y, SellmeierForm::Pole, sub_unity, (0.4, 4.0), "").is_err());
        let pole_in_range = BTreeMap::from([
            ("A".to_string(), 3.0),
            ("B1".to_string(), 0.1),
            ("C1".to_string(), 1.0),
        ]);
        assert!(SellmeierModel::new(Axis::Y, SellmeierForm::Pole, pole_in_range, (0.4, 4.0), "").is_err());
    }

    #[test]
    fn group_index_identity() {
        let data = ktp();
        let s = data.axis(Axis::Y).unwrap().dispersion_sample(wavelength_to_omega(0.9e-6)).unwrap();
        let ng = s.n + s.omega * s.dn_domega;
        assert!(((ng - s.group_index) / ng).abs() < 1e-10);
        assert!((s.group_velocity * s.group_index / SPEED_OF_LIGHT - 1.0).abs() < 1e-12);
    }
}
