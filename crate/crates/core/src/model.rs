//! Physical parameters, unit conventions and the complex detuning algebra.
//!
//! All user-facing frequencies (Rabi frequencies, decay rates, detunings)
//! are linear-frequency MHz, matching how experimentalists quote them.
//! Internal evaluation converts to angular rad/s with [`to_angular`].
//! Lengths are cm, densities per cm^3, intensities W/cm^2.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use crate::error::{Error, Result};

/// Reduced Planck constant, J s.
pub const HBAR: f64 = 1.054_571_817e-34;
/// Vacuum permittivity, F/m.
pub const EPSILON_0: f64 = 8.854_187_812_8e-12;
/// Speed of light, m/s.
pub const SPEED_OF_LIGHT: f64 = 2.997_924_58e8;

/// Reduced dipole moment of the Rb D1 line, C m. Default scale for the
/// power-to-Rabi calibration; overridable everywhere it is used.
pub const RB_D1_DIPOLE_CM: f64 = 2.54e-29;

/// Linear-frequency MHz to angular rad/s.
pub fn to_angular(value_mhz: f64) -> f64 {
    TAU * 1.0e6 * value_mhz
}

fn check_finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name: name.to_string(),
            reason: format!("must be finite, got {v}"),
        })
    }
}

/// Which optical field a drive belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldRole {
    Probe,
    Coupling,
    Trigger,
}

impl std::fmt::Display for FieldRole {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FieldRole::Probe => write!(f, "probe"),
            FieldRole::Coupling => write!(f, "coupling"),
            FieldRole::Trigger => write!(f, "trigger"),
        }
    }
}

/// One optical field: bare Rabi frequency and detuning, both MHz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldDrive {
    pub role: FieldRole,
    pub rabi_mhz: f64,
    pub detuning_mhz: f64,
}

impl FieldDrive {
    pub fn new(role: FieldRole, rabi_mhz: f64, detuning_mhz: f64) -> Result<Self> {
        check_finite("rabi_mhz", rabi_mhz)?;
        check_finite("detuning_mhz", detuning_mhz)?;
        if rabi_mhz < 0.0 {
            return Err(Error::InvalidParameter {
                name: "rabi_mhz".into(),
                reason: format!("must be >= 0, got {rabi_mhz}"),
            });
        }
        Ok(Self { role, rabi_mhz, detuning_mhz })
    }
}

/// Effective decay rates entering the tilde detunings, MHz.
///
/// `gamma0` damps the optical coherences, `gamma1`/`gamma2`/`gamma3` the
/// probe-trigger, probe-coupling and trigger-coupling ground coherences.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayRates {
    pub gamma0_mhz: f64,
    pub gamma1_mhz: f64,
    pub gamma2_mhz: f64,
    pub gamma3_mhz: f64,
}

impl DecayRates {
    pub fn new(gamma0_mhz: f64, gamma1_mhz: f64, gamma2_mhz: f64, gamma3_mhz: f64) -> Result<Self> {
        for (name, v) in [
            ("gamma0_mhz", gamma0_mhz),
            ("gamma1_mhz", gamma1_mhz),
            ("gamma2_mhz", gamma2_mhz),
            ("gamma3_mhz", gamma3_mhz),
        ] {
            check_finite(name, v)?;
            if v < 0.0 {
                return Err(Error::InvalidParameter {
                    name: name.into(),
                    reason: format!("must be >= 0, got {v}"),
                });
            }
        }
        if gamma0_mhz <= 0.0 {
            return Err(Error::InvalidParameter {
                name: "gamma0_mhz".into(),
                reason: "must be > 0".into(),
            });
        }
        Ok(Self { gamma0_mhz, gamma1_mhz, gamma2_mhz, gamma3_mhz })
    }

    /// The reference rates: gamma0 = 3.5, gamma1 = 0.5, gamma2 = 1.5,
    /// gamma3 = 1.0 MHz.
    pub fn reference() -> Self {
        Self { gamma0_mhz: 3.5, gamma1_mhz: 0.5, gamma2_mhz: 1.5, gamma3_mhz: 1.0 }
    }
}

/// Dimensionless transition coefficients C relating each leg's dipole
/// moment to the reduced dipole scale, per subsystem (index 0 -> S1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransitionCoefficients {
    pub probe: [f64; 2],
    pub coupling: [f64; 2],
    pub trigger: [f64; 2],
}

impl TransitionCoefficients {
    pub fn new(probe: [f64; 2], coupling: [f64; 2], trigger: [f64; 2]) -> Result<Self> {
        for (name, arr) in [("probe", probe), ("coupling", coupling), ("trigger", trigger)] {
            for (i, c) in arr.iter().enumerate() {
                if !c.is_finite() || *c <= 0.0 || *c > 1.0 {
                    return Err(Error::InvalidParameter {
                        name: format!("coefficients.{name}[{i}]"),
                        reason: format!("must be in (0, 1], got {c}"),
                    });
                }
            }
        }
        Ok(Self { probe, coupling, trigger })
    }

    /// Reference coefficients. Probe and trigger values follow from the
    /// quoted effective-to-bare Rabi ratios (1.15/4, 2.83/4, 2/4); the
    /// coupling enters only through its bare Rabi frequency, so its
    /// coefficients default to 1.
    pub fn reference() -> Self {
        let c12 = 1.0 / 12.0_f64.sqrt();
        Self {
            probe: [c12, c12],
            coupling: [1.0, 1.0],
            trigger: [std::f64::consts::FRAC_1_SQRT_2, 0.5],
        }
    }

    pub fn for_role(&self, role: FieldRole) -> &[f64; 2] {
        match role {
            FieldRole::Probe => &self.probe,
            FieldRole::Coupling => &self.coupling,
            FieldRole::Trigger => &self.trigger,
        }
    }
}

/// Ground- and excited-state populations of the two tripod subsystems,
/// normalized jointly (all six entries plus the coupling ground states
/// sum to one).
///
/// `a[i]` is the population of the probe ground state of subsystem i+1
/// (level a_{i+2} in the usual labelling), `b[i]` the trigger ground
/// state, `e[i]` the excited state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Populations {
    pub a: [f64; 2],
    pub b: [f64; 2],
    pub e: [f64; 2],
}

impl Populations {
    pub fn new(a: [f64; 2], b: [f64; 2], e: [f64; 2]) -> Result<Self> {
        let mut sum = 0.0;
        for (name, arr) in [("rho_a", a), ("rho_b", b), ("rho_e", e)] {
            for (i, p) in arr.iter().enumerate() {
                if !p.is_finite() || *p < 0.0 || *p > 1.0 {
                    return Err(Error::InvalidParameter {
                        name: format!("populations.{name}[{i}]"),
                        reason: format!("must be in [0, 1], got {p}"),
                    });
                }
                sum += p;
            }
        }
        if sum > 1.0 + 1e-9 {
            return Err(Error::InvalidParameter {
                name: "populations".into(),
                reason: format!("entries sum to {sum} > 1"),
            });
        }
        Ok(Self { a, b, e })
    }

    /// The quoted steady-state quartet for the weak-field configuration:
    /// rho_a = (0.38, 0.30), rho_b = (0.12, 0.20), excited states empty.
    pub fn reference() -> Self {
        Self { a: [0.38, 0.30], b: [0.12, 0.20], e: [0.0, 0.0] }
    }
}

/// Complete atomic-medium description.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TripodParams {
    /// Number density, atoms per cm^3.
    pub density_per_cm3: f64,
    /// Reduced dipole scale mu, C m.
    pub dipole_cm: f64,
    pub coeffs: TransitionCoefficients,
    pub decay: DecayRates,
    pub populations: Populations,
    pub wavelength_nm: f64,
    pub cell_length_cm: f64,
}

impl TripodParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("density_per_cm3", self.density_per_cm3),
            ("dipole_cm", self.dipole_cm),
            ("wavelength_nm", self.wavelength_nm),
            ("cell_length_cm", self.cell_length_cm),
        ] {
            check_finite(name, v)?;
            if v <= 0.0 {
                return Err(Error::InvalidParameter {
                    name: name.into(),
                    reason: format!("must be > 0, got {v}"),
                });
            }
        }
        Ok(())
    }

    /// Reference configuration: N = 3.72e11 /cm^3, Rb D1 dipole scale,
    /// 795 nm, 5 cm cell, reference coefficients / decay / populations.
    pub fn reference() -> Self {
        Self {
            density_per_cm3: 3.72e11,
            dipole_cm: RB_D1_DIPOLE_CM,
            coeffs: TransitionCoefficients::reference(),
            decay: DecayRates::reference(),
            populations: Populations::reference(),
            wavelength_nm: 795.0,
            cell_length_cm: 5.0,
        }
    }

    /// Density in atoms per m^3.
    pub fn density_per_m3(&self) -> f64 {
        self.density_per_cm3 * 1.0e6
    }
}

/// The five complex detunings of the steady-state susceptibility, in
/// angular rad/s. Imaginary parts carry the decay rates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TildeDetunings {
    /// Probe one-photon: dp + i gamma0.
    pub d_p: Complex64,
    /// Trigger one-photon: dt + i gamma0.
    pub d_t: Complex64,
    /// Probe-trigger two-photon: dp - dt + i gamma1.
    pub d_pt: Complex64,
    /// Probe-coupling two-photon: dp - dc + i gamma2.
    pub d_pc: Complex64,
    /// Trigger-coupling two-photon: dt - dc + i gamma3.
    pub d_tc: Complex64,
}

/// Assemble the tilde detunings from MHz inputs, converting to angular
/// units. Two-photon entries depend only on detuning differences.
pub fn tilde_detunings(dp_mhz: f64, dt_mhz: f64, dc_mhz: f64, decay: &DecayRates) -> TildeDetunings {
    let c = |re_mhz: f64, im_mhz: f64| Complex64::new(to_angular(re_mhz), to_angular(im_mhz));
    TildeDetunings {
        d_p: c(dp_mhz, decay.gamma0_mhz),
        d_t: c(dt_mhz, decay.gamma0_mhz),
        d_pt: c(dp_mhz - dt_mhz, decay.gamma1_mhz),
        d_pc: c(dp_mhz - dc_mhz, decay.gamma2_mhz),
        d_tc: c(dt_mhz - dc_mhz, decay.gamma3_mhz),
    }
}

/// Effective Rabi frequency of `field` on subsystem 1 or 2: the bare Rabi
/// frequency scaled by the matching transition coefficient, MHz.
pub fn effective_rabi(
    field: &FieldDrive,
    coeffs: &TransitionCoefficients,
    subsystem: usize,
) -> Result<f64> {
    let idx = subsystem_index(subsystem)?;
    Ok(field.rabi_mhz * coeffs.for_role(field.role)[idx])
}

/// Map a 1-based subsystem label to an array index.
pub fn subsystem_index(subsystem: usize) -> Result<usize> {
    match subsystem {
        1 | 2 => Ok(subsystem - 1),
        other => Err(Error::InvalidSubsystem(other)),
    }
}

/// The three drives of a scenario, one per role.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Drives {
    pub probe: FieldDrive,
    pub coupling: FieldDrive,
    pub trigger: FieldDrive,
}

impl Drives {
    pub fn new(probe: FieldDrive, coupling: FieldDrive, trigger: FieldDrive) -> Result<Self> {
        if probe.role != FieldRole::Probe {
            return Err(Error::InvalidDrives(format!("probe slot holds a {} drive", probe.role)));
        }
        if coupling.role != FieldRole::Coupling {
            return Err(Error::InvalidDrives(format!(
                "coupling slot holds a {} drive",
                coupling.role
            )));
        }
        if trigger.role != FieldRole::Trigger {
            return Err(Error::InvalidDrives(format!(
                "trigger slot holds a {} drive",
                trigger.role
            )));
        }
        Ok(Self { probe, coupling, trigger })
    }

    /// Build from three drives in any order; exactly one of each role.
    pub fn from_slice(drives: &[FieldDrive; 3]) -> Result<Self> {
        let mut probe = None;
        let mut coupling = None;
        let mut trigger = None;
        for d in drives {
            let slot = match d.role {
                FieldRole::Probe => &mut probe,
                FieldRole::Coupling => &mut coupling,
                FieldRole::Trigger => &mut trigger,
            };
            if slot.replace(*d).is_some() {
                return Err(Error::InvalidDrives(format!("duplicate {} drive", d.role)));
            }
        }
        match (probe, coupling, trigger) {
            (Some(p), Some(c), Some(t)) => Drives::new(p, c, t),
            _ => Err(Error::InvalidDrives("need one probe, one coupling, one trigger".into())),
        }
    }

    /// Convenience constructor with detunings and Rabi frequencies in MHz.
    pub fn from_mhz(
        probe: (f64, f64),
        coupling: (f64, f64),
        trigger: (f64, f64),
    ) -> Result<Self> {
        Drives::new(
            FieldDrive::new(FieldRole::Probe, probe.0, probe.1)?,
            FieldDrive::new(FieldRole::Coupling, coupling.0, coupling.1)?,
            FieldDrive::new(FieldRole::Trigger, trigger.0, trigger.1)?,
        )
    }

    pub fn get(&self, role: FieldRole) -> &FieldDrive {
        match role {
            FieldRole::Probe => &self.probe,
            FieldRole::Coupling => &self.coupling,
            FieldRole::Trigger => &self.trigger,
        }
    }

    /// Copy with the given field's Rabi frequency replaced.
    pub fn with_rabi(&self, role: FieldRole, rabi_mhz: f64) -> Self {
        let mut out = *self;
        match role {
            FieldRole::Probe => out.probe.rabi_mhz = rabi_mhz,
            FieldRole::Coupling => out.coupling.rabi_mhz = rabi_mhz,
            FieldRole::Trigger => out.trigger.rabi_mhz = rabi_mhz,
        }
        out
    }

    /// Copy with the given field's detuning replaced.
    pub fn with_detuning(&self, role: FieldRole, detuning_mhz: f64) -> Self {
        let mut out = *self;
        match role {
            FieldRole::Probe => out.probe.detuning_mhz = detuning_mhz,
            FieldRole::Coupling => out.coupling.detuning_mhz = detuning_mhz,
            FieldRole::Trigger => out.trigger.detuning_mhz = detuning_mhz,
        }
        out
    }

    pub fn detunings_mhz(&self) -> (f64, f64, f64) {
        (self.probe.detuning_mhz, self.trigger.detuning_mhz, self.coupling.detuning_mhz)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn to_angular_examples() {
        assert_eq!(to_angular(0.0), 0.0);
        assert_relative_eq!(to_angular(1.0), 6.283_185_307_179_586e6, max_relative = 1e-12);
        assert_relative_eq!(to_angular(3.5), 2.199_114_857_512_855e7, max_relative = 1e-12);
    }

    #[test]
    fn tilde_detunings_at_reference_gammas() {
        let decay = DecayRates::new(3.5, 0.5, 1.5, 1.0).unwrap();
        let td = tilde_detunings(0.0, 0.0, 0.0, &decay);
        assert_eq!(td.d_p, Complex64::new(0.0, to_angular(3.5)));
        assert_eq!(td.d_pt, Complex64::new(0.0, to_angular(0.5)));
        assert_eq!(td.d_pc, Complex64::new(0.0, to_angular(1.5)));
        assert_eq!(td.d_tc, Complex64::new(0.0, to_angular(1.0)));

        // Operating point dp - dc = -0.5 MHz.
        let td = tilde_detunings(-0.5, 0.0, 0.0, &decay);
        assert_relative_eq!(td.d_pc.re, to_angular(-0.5), max_relative = 1e-12);
        assert_relative_eq!(td.d_pc.im, to_angular(1.5), max_relative = 1e-12);

        // Equal probe/trigger detunings zero the two-photon real part.
        let td = tilde_detunings(5.0, 5.0, 0.0, &decay);
        assert_eq!(td.d_pt.re, 0.0);
        assert_relative_eq!(td.d_pt.im, to_angular(0.5), max_relative = 1e-12);
    }

    #[test]
    fn tilde_detunings_common_shift_moves_only_one_photon_terms() {
        let decay = DecayRates::reference();
        let base = tilde_detunings(1.25, -0.75, 2.0, &decay);
        let shift = 7.5;
        let moved = tilde_detunings(1.25 + shift, -0.75 + shift, 2.0 + shift, &decay);
        assert_relative_eq!(moved.d_p.re - base.d_p.re, to_angular(shift), max_relative = 1e-12);
        assert_relative_eq!(moved.d_t.re - base.d_t.re, to_angular(shift), max_relative = 1e-12);
        assert_eq!(moved.d_pt, base.d_pt);
        assert_eq!(moved.d_pc, base.d_pc);
        assert_eq!(moved.d_tc, base.d_tc);
    }

    #[test]
    fn effective_rabi_examples() {
        let coeffs = TransitionCoefficients::reference();
        let probe = FieldDrive::new(FieldRole::Probe, 4.0, 0.0).unwrap();
        let om_p1 = effective_rabi(&probe, &coeffs, 1).unwrap();
        assert_relative_eq!(om_p1, 1.1547, epsilon = 1e-3);

        let trigger = FieldDrive::new(FieldRole::Trigger, 4.0, 0.0).unwrap();
        let om_t1 = effective_rabi(&trigger, &coeffs, 1).unwrap();
        assert_relative_eq!(om_t1, 2.8284, epsilon = 1e-3);
        let om_t2 = effective_rabi(&trigger, &coeffs, 2).unwrap();
        assert_relative_eq!(om_t2, 2.0, epsilon = 1e-12);

        let off = FieldDrive::new(FieldRole::Probe, 0.0, 0.0).unwrap();
        assert_eq!(effective_rabi(&off, &coeffs, 2).unwrap(), 0.0);

        assert!(matches!(
            effective_rabi(&probe, &coeffs, 3),
            Err(Error::InvalidSubsystem(3))
        ));
    }

    #[test]
    fn reference_populations_sum_to_one() {
        let p = Populations::reference();
        let sum: f64 = p.a.iter().chain(&p.b).chain(&p.e).sum();
        assert_relative_eq!(sum, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn drives_from_slice_rejects_duplicates() {
        let p = FieldDrive::new(FieldRole::Probe, 1.0, 0.0).unwrap();
        let c = FieldDrive::new(FieldRole::Coupling, 1.0, 0.0).unwrap();
        assert!(Drives::from_slice(&[p, c, p]).is_err());
        let t = FieldDrive::new(FieldRole::Trigger, 1.0, 0.0).unwrap();
        assert!(Drives::from_slice(&[t, p, c]).is_ok());
    }

    #[test]
    fn invalid_parameters_are_rejected() {
        assert!(DecayRates::new(0.0, 0.5, 1.5, 1.0).is_err());
        assert!(DecayRates::new(3.5, -0.1, 1.5, 1.0).is_err());
        assert!(FieldDrive::new(FieldRole::Probe, -1.0, 0.0).is_err());
        assert!(TransitionCoefficients::new([0.0, 0.5], [1.0, 1.0], [0.5, 0.5]).is_err());
        assert!(Populations::new([0.8, 0.8], [0.0, 0.0], [0.0, 0.0]).is_err());
    }
}
