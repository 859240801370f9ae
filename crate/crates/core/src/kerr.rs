//! Cross-Kerr (XPM) coefficients and phase shifts.
//!
//! The XPM coefficient is defined operationally, mirroring the
//! blocked-beam measurement: n2 = [(n-1) with the perturbing weak field
//! on - (n-1) with it off] / I_perturber, evaluated at a fixed operating
//! point. The accumulated phase is Phi = (2 pi / lambda) n2 I l.

use crate::error::{Error, Result};
use crate::model::{Drives, FieldRole, TripodParams};
use crate::observables::{absorption_depth, refractive_index, transmission};
use crate::susceptibility::{chi_lambda, chi_total};
use std::f64::consts::TAU;

/// XPM extraction result at one operating point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XpmResult {
    /// Signed cross-Kerr coefficient, cm^2/W.
    pub n2_cm2_per_w: f64,
    /// Phase accumulated over the cell at the perturbing intensity, rad.
    pub phase_shift_rad: f64,
    /// Transmission of the target field with all fields on.
    pub transmission_at_point: f64,
    /// (dp, dt, dc) in MHz.
    pub operating_point: (f64, f64, f64),
}

fn perturber_of(target: FieldRole) -> Result<FieldRole> {
    match target {
        FieldRole::Probe => Ok(FieldRole::Trigger),
        FieldRole::Trigger => Ok(FieldRole::Probe),
        FieldRole::Coupling => Err(Error::InvalidDrives(
            "XPM is defined for the probe or trigger field".into(),
        )),
    }
}

fn index_difference(target: FieldRole, params: &TripodParams, drives: &Drives) -> Result<f64> {
    let record = chi_total(params, drives)?;
    let chi_on = match target {
        FieldRole::Probe => record.chi_p,
        FieldRole::Trigger => record.chi_t,
        FieldRole::Coupling => unreachable!(),
    };
    let chi_off = chi_lambda(target, params, drives)?;
    Ok(refractive_index(chi_on) - refractive_index(chi_off))
}

/// Cross-Kerr coefficient of `target` induced by the other weak field,
/// cm^2/W.
pub fn xpm_coefficient(
    target: FieldRole,
    params: &TripodParams,
    drives: &Drives,
    perturbing_intensity_w_cm2: f64,
) -> Result<f64> {
    perturber_of(target)?;
    if perturbing_intensity_w_cm2 <= 0.0 {
        return Err(Error::ZeroIntensity(perturbing_intensity_w_cm2));
    }
    Ok(index_difference(target, params, drives)? / perturbing_intensity_w_cm2)
}

/// Phase accumulated over the cell: Phi = (2 pi / lambda) n2 I l, rad.
/// Wavelength in nm, cell length in cm, intensity in W/cm^2.
pub fn xpm_phase_shift(
    n2_cm2_per_w: f64,
    intensity_w_cm2: f64,
    wavelength_nm: f64,
    cell_length_cm: f64,
) -> f64 {
    let wavelength_cm = wavelength_nm * 1e-7;
    TAU / wavelength_cm * n2_cm2_per_w * intensity_w_cm2 * cell_length_cm
}

/// The directly measured interferometer phase difference:
/// Phi = k l [(n-1) perturber on - (n-1) perturber off], rad.
pub fn phase_from_dispersion_difference(
    target: FieldRole,
    params: &TripodParams,
    drives: &Drives,
) -> Result<f64> {
    perturber_of(target)?;
    let k_per_m = TAU / (params.wavelength_nm * 1e-9);
    Ok(k_per_m * (params.cell_length_cm * 1e-2) * index_difference(target, params, drives)?)
}

/// Conditional phase shift Phi_p + Phi_T: the probe phase induced by the
/// trigger in the probe scenario plus the trigger phase induced by the
/// probe in the trigger scenario.
pub fn conditional_phase(
    params: &TripodParams,
    drives_probe_scenario: &Drives,
    drives_trigger_scenario: &Drives,
) -> Result<f64> {
    let phi_p = phase_from_dispersion_difference(FieldRole::Probe, params, drives_probe_scenario)?;
    let phi_t =
        phase_from_dispersion_difference(FieldRole::Trigger, params, drives_trigger_scenario)?;
    Ok(phi_p + phi_t)
}

/// Full XPM record at one operating point. The stored phase satisfies
/// phase = (2 pi / lambda) n2 I l by construction.
pub fn xpm_at_point(
    target: FieldRole,
    params: &TripodParams,
    drives: &Drives,
    perturbing_intensity_w_cm2: f64,
) -> Result<XpmResult> {
    let n2 = xpm_coefficient(target, params, drives, perturbing_intensity_w_cm2)?;
    let record = chi_total(params, drives)?;
    let chi = match target {
        FieldRole::Probe => record.chi_p,
        FieldRole::Trigger => record.chi_t,
        FieldRole::Coupling => unreachable!(),
    };
    Ok(XpmResult {
        n2_cm2_per_w: n2,
        phase_shift_rad: xpm_phase_shift(
            n2,
            perturbing_intensity_w_cm2,
            params.wavelength_nm,
            params.cell_length_cm,
        ),
        transmission_at_point: transmission(absorption_depth(
            chi,
            params.wavelength_nm,
            params.cell_length_cm,
        )),
        operating_point: drives.detunings_mhz(),
    })
}
