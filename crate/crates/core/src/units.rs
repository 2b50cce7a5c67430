//! Conversions between the conventional units used in config files and
//! reports (nm, cm, mW, MHz, GHz, cm^-1, ns) and the SI angular-frequency
//! units used everywhere inside the library.
//!
//! Nothing outside this module and the config/report boundary should
//! multiply by 1e-9 or 2*pi to change units.

use std::f64::consts::PI;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

pub fn nm_to_m(nm: f64) -> f64 {
    nm * 1e-9
}

pub fn m_to_nm(m: f64) -> f64 {
    m * 1e9
}

pub fn um_to_m(um: f64) -> f64 {
    um * 1e-6
}

pub fn cm_to_m(cm: f64) -> f64 {
    cm * 1e-2
}

pub fn mw_to_w(mw: f64) -> f64 {
    mw * 1e-3
}

pub fn w_to_mw(w: f64) -> f64 {
    w * 1e3
}

pub fn s_to_ns(s: f64) -> f64 {
    s * 1e9
}

/// Vacuum wavelength (m) to angular frequency (rad/s).
pub fn wavelength_to_omega(lambda_m: f64) -> f64 {
    2.0 * PI * SPEED_OF_LIGHT / lambda_m
}

/// Angular frequency (rad/s) to vacuum wavelength (m).
pub fn omega_to_wavelength(omega: f64) -> f64 {
    2.0 * PI * SPEED_OF_LIGHT / omega
}

/// Angular frequency (rad/s) to ordinary frequency in MHz.
pub fn rad_s_to_mhz(omega: f64) -> f64 {
    omega / (2.0 * PI) * 1e-6
}

pub fn mhz_to_rad_s(mhz: f64) -> f64 {
    mhz * 1e6 * 2.0 * PI
}

pub fn rad_s_to_ghz(omega: f64) -> f64 {
    omega / (2.0 * PI) * 1e-9
}

/// Angular frequency (rad/s) to spectroscopic wavenumber in cm^-1,
/// i.e. the number quoted as `2pi x (value) cm^-1`.
pub fn rad_s_to_wavenumber_cm(omega: f64) -> f64 {
    omega / (2.0 * PI * SPEED_OF_LIGHT * 100.0)
}

pub fn wavenumber_cm_to_rad_s(nu_cm: f64) -> f64 {
    nu_cm * 2.0 * PI * SPEED_OF_LIGHT * 100.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wavelength_round_trip() {
        let w = wavelength_to_omega(1064e-9);
        assert!((omega_to_wavelength(w) - 1064e-9).abs() < 1e-21);
    }

    #[test]
    fn gain_linewidth_units_agree() {
        // 0.08 cm^-1 is 2.4 GHz
        let w = wavenumber_cm_to_rad_s(0.08);
        assert!((rad_s_to_ghz(w) - 2.398).abs() < 1e-3);
        assert!((rad_s_to_wavenumber_cm(w) - 0.08).abs() < 1e-15);
    }
}
