//! Measured quantities derived from a complex susceptibility.
//!
//! Dilute-medium linearizations are used throughout (|chi| <= 1e-3 here):
//! absorption depth alpha*l = k Im(chi) l and refractive index
//! n = 1 + Re(chi)/2, matching the k n l / alpha l form of the homodyne
//! signals.

use num_complex::Complex64;
use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::model::SPEED_OF_LIGHT;

/// Derived observables of one field at one scan point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObservablePoint {
    /// Optical depth alpha(omega) * l, dimensionless.
    pub alpha_l: f64,
    /// n - 1 = Re(chi) / 2.
    pub n_minus_1: f64,
    /// exp(-alpha l).
    pub transmission: f64,
    /// Homodyne quadrature signal, normalized units.
    pub dispersion_signal: f64,
    /// Group index, when the scan context provides the derivative.
    pub group_index: Option<f64>,
}

/// Vacuum wavenumber in 1/m from a wavelength in nm.
fn wavenumber_per_m(wavelength_nm: f64) -> f64 {
    TAU / (wavelength_nm * 1e-9)
}

/// Optical depth alpha * l = (2 pi / lambda) Im(chi) l.
pub fn absorption_depth(chi: Complex64, wavelength_nm: f64, cell_length_cm: f64) -> f64 {
    wavenumber_per_m(wavelength_nm) * chi.im * (cell_length_cm * 1e-2)
}

/// Refractive index offset n - 1 = Re(chi) / 2.
pub fn refractive_index(chi: Complex64) -> f64 {
    chi.re / 2.0
}

/// Transmitted intensity fraction exp(-alpha l).
pub fn transmission(alpha_l: f64) -> f64 {
    (-alpha_l).exp()
}

/// Homodyne dispersion signal at the pi/2 quadrature:
/// 2 E_R E exp(-alpha l / 2) k (n - 1) l.
pub fn homodyne_dispersion_signal(
    chi: Complex64,
    wavelength_nm: f64,
    cell_length_cm: f64,
    reference_amplitude: f64,
    field_amplitude: f64,
) -> f64 {
    let alpha_l = absorption_depth(chi, wavelength_nm, cell_length_cm);
    2.0 * reference_amplitude
        * field_amplitude
        * (-alpha_l / 2.0).exp()
        * wavenumber_per_m(wavelength_nm)
        * refractive_index(chi)
        * (cell_length_cm * 1e-2)
}

/// Group index n_g = 1 + Re(chi)/2 + (omega/2) d Re(chi)/d omega from a
/// uniformly sampled Re(chi) scan, via the central difference at `at`.
///
/// `spacing_mhz` is the scan step in linear-frequency MHz.
pub fn group_index(
    re_chi: &[f64],
    spacing_mhz: f64,
    wavelength_nm: f64,
    at: usize,
) -> Result<f64> {
    if re_chi.len() < 3 {
        return Err(Error::InsufficientSamples { needed: 3, got: re_chi.len() });
    }
    if at == 0 || at + 1 >= re_chi.len() {
        return Err(Error::InsufficientSamples { needed: at + 2, got: re_chi.len() });
    }
    let d_omega = crate::model::to_angular(spacing_mhz);
    let slope = (re_chi[at + 1] - re_chi[at - 1]) / (2.0 * d_omega);
    let omega = TAU * SPEED_OF_LIGHT / (wavelength_nm * 1e-9);
    Ok(1.0 + re_chi[at] / 2.0 + omega / 2.0 * slope)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn absorption_examples() {
        assert_eq!(absorption_depth(Complex64::new(0.5, 0.0), 795.0, 5.0), 0.0);
        // alpha l = 1.347 corresponds to 26% transmission (74% absorption).
        assert_relative_eq!(transmission(1.347), 0.26, epsilon = 1e-3);
        assert_relative_eq!(transmission(0.511), 0.60, epsilon = 1e-3);
        assert_eq!(transmission(0.0), 1.0);
    }

    #[test]
    fn refractive_index_examples() {
        assert_eq!(refractive_index(Complex64::new(2e-6, 0.0)), 1e-6);
        assert_eq!(refractive_index(Complex64::ZERO), 0.0);
    }

    #[test]
    fn transmission_of_depth_is_exponential_and_monotone() {
        let chi_small = Complex64::new(0.0, 1e-6);
        let chi_large = Complex64::new(0.0, 2e-6);
        let t = |chi| transmission(absorption_depth(chi, 795.0, 5.0));
        assert!(t(chi_small) > t(chi_large));
        let al = absorption_depth(chi_small, 795.0, 5.0);
        assert_eq!(t(chi_small), (-al).exp());
    }

    #[test]
    fn homodyne_signal_is_odd_in_re_chi() {
        let chi = Complex64::new(3e-7, 5e-7);
        let plus = homodyne_dispersion_signal(chi, 795.0, 5.0, 1.0, 1.0);
        let minus = homodyne_dispersion_signal(Complex64::new(-chi.re, chi.im), 795.0, 5.0, 1.0, 1.0);
        assert_relative_eq!(plus, -minus, max_relative = 1e-12);
        let zero = homodyne_dispersion_signal(Complex64::new(0.0, 5e-7), 795.0, 5.0, 1.0, 1.0);
        assert_eq!(zero, 0.0);
    }

    #[test]
    fn group_index_constant_scan_has_no_slope_term() {
        let re = [4e-6; 5];
        let ng = group_index(&re, 0.01, 795.0, 2).unwrap();
        assert_relative_eq!(ng, 1.0 + 2e-6, epsilon = 1e-12);
    }

    #[test]
    fn group_index_requires_enough_samples() {
        assert!(group_index(&[1.0, 2.0], 0.01, 795.0, 0).is_err());
        assert!(group_index(&[1.0, 2.0, 3.0], 0.01, 795.0, 2).is_err());
    }
}
