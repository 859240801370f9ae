//! Perturbative probe and trigger susceptibilities of the coherently
//! prepared tripod pair, per subsystem and in total.
//!
//! The probe susceptibility of subsystem i is
//!
//! ```text
//! chi_Pi = K_Pi * { (rho_a - rho_e)
//!                   / (-Dp~ + |Wt|^2 / 4 Dpt~ + |Wc|^2 / 4 Dpc~)
//!                 - (|Wt|^2 / 4) (rho_b - rho_e)
//!                   / [ -Dpt~ (-Dt~* + |Wc|^2 / 4 Dtc~*) (-Dp~ + |Wc|^2 / 4 Dpc~) ] }
//! ```
//!
//! with K_Pi = N |C_Pi mu|^2 / (hbar eps0) and the trigger expression its
//! probe-trigger mirror image (Dpt~ -> -Dpt~* under the swap). The second
//! term is the cross-Kerr contribution responsible for XPM. The sign
//! convention is absorption-positive: Im chi >= 0 in passive regimes,
//! fixed once against the density-matrix solver in `oracle`.
//!
//! Ground decoherence keeps every composite denominator away from zero;
//! configurations with vanishing decay rates are guarded explicitly.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{
    effective_rabi, subsystem_index, tilde_detunings, to_angular, Drives, FieldRole,
    TildeDetunings, TripodParams, EPSILON_0, HBAR,
};

/// Weak-field validity of the perturbative expansion: squared ratios of
/// the weak Rabi frequencies to the coupling Rabi frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeakFieldValidity {
    pub probe_ratio_sq: f64,
    pub trigger_ratio_sq: f64,
}

impl WeakFieldValidity {
    /// True when |W_{P,T}|^2 / |W_C|^2 <= 0.05 for both weak fields.
    pub fn within_regime(&self) -> bool {
        self.probe_ratio_sq <= 0.05 && self.trigger_ratio_sq <= 0.05
    }

    fn of(drives: &Drives) -> Self {
        let c2 = drives.coupling.rabi_mhz.powi(2);
        let ratio = |w: f64| if c2 > 0.0 { w * w / c2 } else { f64::INFINITY };
        Self {
            probe_ratio_sq: ratio(drives.probe.rabi_mhz),
            trigger_ratio_sq: ratio(drives.trigger.rabi_mhz),
        }
    }
}

/// Complex susceptibilities of both fields at one detuning point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SusceptibilityRecord {
    pub chi_p_sub: [Complex64; 2],
    pub chi_t_sub: [Complex64; 2],
    pub chi_p: Complex64,
    pub chi_t: Complex64,
    /// (dp, dt, dc) in MHz.
    pub at: (f64, f64, f64),
    pub validity: WeakFieldValidity,
}

/// |W|^2 / (4 * dt~) with the limiting cases resolved: a zero numerator
/// kills the term, a vanishing tilde detuning under finite drive sends
/// the enclosing denominator to infinity.
enum DressTerm {
    Finite(Complex64),
    Divergent,
}

fn dressing(omega_sq_ang: f64, tilde: Complex64, guard: f64) -> DressTerm {
    if omega_sq_ang == 0.0 {
        DressTerm::Finite(Complex64::ZERO)
    } else if tilde.norm() < guard {
        DressTerm::Divergent
    } else {
        DressTerm::Finite(Complex64::from(omega_sq_ang / 4.0) / tilde)
    }
}

/// Per-subsystem ingredients shared by the probe and trigger expressions.
struct SubsystemInputs {
    td: TildeDetunings,
    /// Effective angular Rabi frequencies squared (probe, coupling, trigger).
    wp_sq: f64,
    wc_sq: f64,
    wt_sq: f64,
    rho_a: f64,
    rho_b: f64,
    rho_e: f64,
    /// Singularity guard, 1e-3 * gamma0 in angular units.
    guard: f64,
    at: (f64, f64, f64),
}

impl SubsystemInputs {
    fn build(subsystem: usize, params: &TripodParams, drives: &Drives) -> Result<Self> {
        params.validate()?;
        let idx = subsystem_index(subsystem)?;
        let (dp, dt, dc) = drives.detunings_mhz();
        let td = tilde_detunings(dp, dt, dc, &params.decay);
        let sq = |mhz: f64| to_angular(mhz).powi(2);
        Ok(Self {
            td,
            wp_sq: sq(effective_rabi(&drives.probe, &params.coeffs, subsystem)?),
            wc_sq: sq(effective_rabi(&drives.coupling, &params.coeffs, subsystem)?),
            wt_sq: sq(effective_rabi(&drives.trigger, &params.coeffs, subsystem)?),
            rho_a: params.populations.a[idx],
            rho_b: params.populations.b[idx],
            rho_e: params.populations.e[idx],
            guard: 1e-3 * to_angular(params.decay.gamma0_mhz),
            at: (dp, dt, dc),
        })
    }

    fn singular(&self, denominator: &'static str) -> Error {
        Error::SingularPoint {
            denominator,
            dp_mhz: self.at.0,
            dt_mhz: self.at.1,
            dc_mhz: self.at.2,
        }
    }
}

/// Prefactor N |C mu|^2 / (hbar eps0), angular rad/s. Dividing by the
/// angular-frequency denominators leaves chi dimensionless.
fn prefactor(params: &TripodParams, coeff: f64) -> f64 {
    let mu = coeff * params.dipole_cm;
    params.density_per_m3() * mu * mu / (HBAR * EPSILON_0)
}

/// Linear (EIT) and cross-Kerr parts of the probe susceptibility of one
/// subsystem, before the prefactor. Exposed for the analytic cross-term
/// checks in `kerr` and in tests.
fn probe_terms(s: &SubsystemInputs) -> Result<(Complex64, Complex64)> {
    let t_pt = dressing(s.wt_sq, s.td.d_pt, s.guard);
    let t_pc = dressing(s.wc_sq, s.td.d_pc, s.guard);

    let linear = match (&t_pt, &t_pc) {
        (DressTerm::Finite(a), DressTerm::Finite(b)) => {
            let d1 = -s.td.d_p + a + b;
            if d1.norm() < s.guard {
                return Err(s.singular("probe linear denominator"));
            }
            Complex64::from(s.rho_a - s.rho_e) / d1
        }
        // A diverging dressing term makes the denominator infinite.
        _ => Complex64::ZERO,
    };

    let cross_num = s.wt_sq * (s.rho_b - s.rho_e) / 4.0;
    let cross = if cross_num == 0.0 {
        Complex64::ZERO
    } else {
        let f2 = match dressing(s.wc_sq, s.td.d_tc.conj(), s.guard) {
            DressTerm::Finite(t) => -s.td.d_t.conj() + t,
            DressTerm::Divergent => return Ok((linear, Complex64::ZERO)),
        };
        let f3 = match dressing(s.wc_sq, s.td.d_pc, s.guard) {
            DressTerm::Finite(t) => -s.td.d_p + t,
            DressTerm::Divergent => return Ok((linear, Complex64::ZERO)),
        };
        if s.td.d_pt.norm() < s.guard {
            return Err(s.singular("probe cross-term two-photon factor"));
        }
        if f2.norm() < s.guard || f3.norm() < s.guard {
            return Err(s.singular("probe cross-term denominator"));
        }
        Complex64::from(cross_num) / ((-s.td.d_pt) * f2 * f3)
    };

    Ok((linear, cross))
}

/// Trigger-side mirror of [`probe_terms`], with the conjugated composite
/// detunings of the printed expression.
fn trigger_terms(s: &SubsystemInputs) -> Result<(Complex64, Complex64)> {
    let t_tp = dressing(s.wp_sq, s.td.d_pt.conj(), s.guard);
    let t_tc = dressing(s.wc_sq, s.td.d_tc, s.guard);

    let linear = match (&t_tp, &t_tc) {
        (DressTerm::Finite(a), DressTerm::Finite(b)) => {
            let d1 = -s.td.d_t - a + b;
            if d1.norm() < s.guard {
                return Err(s.singular("trigger linear denominator"));
            }
            Complex64::from(s.rho_b - s.rho_e) / d1
        }
        _ => Complex64::ZERO,
    };

    let cross_num = s.wp_sq * (s.rho_a - s.rho_e) / 4.0;
    let cross = if cross_num == 0.0 {
        Complex64::ZERO
    } else {
        let f2 = match dressing(s.wc_sq, s.td.d_pc.conj(), s.guard) {
            DressTerm::Finite(t) => -s.td.d_p.conj() + t,
            DressTerm::Divergent => return Ok((linear, Complex64::ZERO)),
        };
        let f3 = match dressing(s.wc_sq, s.td.d_tc, s.guard) {
            DressTerm::Finite(t) => -s.td.d_t + t,
            DressTerm::Divergent => return Ok((linear, Complex64::ZERO)),
        };
        if s.td.d_pt.norm() < s.guard {
            return Err(s.singular("trigger cross-term two-photon factor"));
        }
        if f2.norm() < s.guard || f3.norm() < s.guard {
            return Err(s.singular("trigger cross-term denominator"));
        }
        Complex64::from(cross_num) / (s.td.d_pt.conj() * f2 * f3)
    };

    Ok((linear, cross))
}


/// Probe susceptibility of subsystem 1 or 2 (dimensionless, complex).
pub fn chi_probe_sub(subsystem: usize, params: &TripodParams, drives: &Drives) -> Result<Complex64> {
    let s = SubsystemInputs::build(subsystem, params, drives)?;
    let idx = subsystem_index(subsystem)?;
    let (linear, cross) = probe_terms(&s)?;
    Ok(prefactor(params, params.coeffs.probe[idx]) * (linear - cross))
}

/// Trigger susceptibility of subsystem 1 or 2.
pub fn chi_trigger_sub(
    subsystem: usize,
    params: &TripodParams,
    drives: &Drives,
) -> Result<Complex64> {
    let s = SubsystemInputs::build(subsystem, params, drives)?;
    let idx = subsystem_index(subsystem)?;
    let (linear, cross) = trigger_terms(&s)?;
    Ok(prefactor(params, params.coeffs.trigger[idx]) * (linear - cross))
}

/// Both susceptibilities with their subsystem decomposition. The totals
/// are the exact sums of the stored subsystem values.
pub fn chi_total(params: &TripodParams, drives: &Drives) -> Result<SusceptibilityRecord> {
    let chi_p_sub = [
        chi_probe_sub(1, params, drives)?,
        chi_probe_sub(2, params, drives)?,
    ];
    let chi_t_sub = [
        chi_trigger_sub(1, params, drives)?,
        chi_trigger_sub(2, params, drives)?,
    ];
    Ok(SusceptibilityRecord {
        chi_p_sub,
        chi_t_sub,
        chi_p: chi_p_sub[0] + chi_p_sub[1],
        chi_t: chi_t_sub[0] + chi_t_sub[1],
        at: drives.detunings_mhz(),
        validity: WeakFieldValidity::of(drives),
    })
}

/// Three-level Lambda baseline: the susceptibility of `field` with the
/// other weak field switched off, summed over both subsystems.
pub fn chi_lambda(field: FieldRole, params: &TripodParams, drives: &Drives) -> Result<Complex64> {
    let stripped = match field {
        FieldRole::Probe => drives.with_rabi(FieldRole::Trigger, 0.0),
        FieldRole::Trigger => drives.with_rabi(FieldRole::Probe, 0.0),
        FieldRole::Coupling => {
            return Err(Error::InvalidDrives(
                "lambda baseline is defined for the probe or trigger field".into(),
            ))
        }
    };
    let chi = match field {
        FieldRole::Probe => {
            chi_probe_sub(1, params, &stripped)? + chi_probe_sub(2, params, &stripped)?
        }
        FieldRole::Trigger => {
            chi_trigger_sub(1, params, &stripped)? + chi_trigger_sub(2, params, &stripped)?
        }
        FieldRole::Coupling => unreachable!(),
    };
    Ok(chi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{DecayRates, Populations, TransitionCoefficients};
    use approx::assert_relative_eq;

    fn reference_drives(dp: f64, dt: f64, dc: f64) -> Drives {
        Drives::from_mhz((4.0, dp), (70.0, dc), (4.0, dt)).unwrap()
    }

    #[test]
    fn ideal_dark_state_is_exactly_zero() {
        // Trigger off, gamma2 = 0, probe and coupling on two-photon
        // resonance: the linear denominator diverges, the cross term
        // vanishes with the trigger drive.
        let mut params = TripodParams::reference();
        params.decay = DecayRates::new(3.5, 0.5, 0.0, 1.0).unwrap();
        let drives = Drives::from_mhz((4.0, 0.0), (70.0, 0.0), (0.0, 0.0)).unwrap();
        let chi = chi_probe_sub(1, &params, &drives).unwrap();
        assert_eq!(chi, Complex64::ZERO);
    }

    #[test]
    fn trigger_mirror_dark_state_is_zero() {
        let mut params = TripodParams::reference();
        params.decay = DecayRates::new(3.5, 0.5, 1.5, 0.0).unwrap();
        let drives = Drives::from_mhz((0.0, 0.0), (70.0, 0.0), (4.0, 0.0)).unwrap();
        let chi = chi_trigger_sub(1, &params, &drives).unwrap();
        assert_eq!(chi, Complex64::ZERO);
    }

    #[test]
    fn transparency_dip_at_line_center() {
        let params = TripodParams::reference();
        let on_res = chi_total(&params, &reference_drives(0.0, 0.0, 0.0)).unwrap();
        let detuned = chi_total(&params, &reference_drives(40.0, 0.0, 0.0)).unwrap();
        assert!(on_res.chi_p.im > 0.0);
        assert!(on_res.chi_p.im < 0.1 * detuned.chi_p.im);
    }

    #[test]
    fn totals_are_exact_sums() {
        let params = TripodParams::reference();
        let rec = chi_total(&params, &reference_drives(1.3, -0.4, 0.2)).unwrap();
        assert_eq!(rec.chi_p, rec.chi_p_sub[0] + rec.chi_p_sub[1]);
        assert_eq!(rec.chi_t, rec.chi_t_sub[0] + rec.chi_t_sub[1]);
    }

    #[test]
    fn symmetric_subsystems_double_the_total() {
        let mut params = TripodParams::reference();
        params.coeffs = TransitionCoefficients::new(
            [0.2887, 0.2887],
            [1.0, 1.0],
            [std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_1_SQRT_2],
        )
        .unwrap();
        params.populations = Populations::new([0.3, 0.3], [0.15, 0.15], [0.0, 0.0]).unwrap();
        let rec = chi_total(&params, &reference_drives(0.7, -0.2, 0.0)).unwrap();
        assert_eq!(rec.chi_p_sub[0], rec.chi_p_sub[1]);
        assert_eq!(rec.chi_p, 2.0 * rec.chi_p_sub[0]);
    }

    #[test]
    fn lambda_equals_sub_sum_with_trigger_off() {
        let params = TripodParams::reference();
        let drives = reference_drives(0.35, 0.1, 0.0);
        let lambda = chi_lambda(FieldRole::Probe, &params, &drives).unwrap();
        let stripped = drives.with_rabi(FieldRole::Trigger, 0.0);
        let manual =
            chi_probe_sub(1, &params, &stripped).unwrap() + chi_probe_sub(2, &params, &stripped).unwrap();
        assert_eq!(lambda, manual);
    }

    #[test]
    fn lambda_ideal_dark_state_zero() {
        let mut params = TripodParams::reference();
        params.decay = DecayRates::new(3.5, 0.5, 0.0, 1.0).unwrap();
        let drives = reference_drives(0.0, 0.3, 0.0);
        assert_eq!(chi_lambda(FieldRole::Probe, &params, &drives).unwrap(), Complex64::ZERO);
    }

    #[test]
    fn trigger_cross_term_is_quadratic_in_probe_rabi() {
        let params = TripodParams::reference();
        let base = reference_drives(0.0, 0.0, 0.0);
        let cross_at = |rabi_p: f64| {
            let drives = base.with_rabi(FieldRole::Probe, rabi_p);
            let s = SubsystemInputs::build(1, &params, &drives).unwrap();
            trigger_terms(&s).unwrap().1
        };
        let c1 = cross_at(2.0);
        let c2 = cross_at(4.0);
        assert_relative_eq!(c2.norm() / c1.norm(), 4.0, max_relative = 1e-12);
    }

    #[test]
    fn tripod_absorption_differs_from_lambda_near_two_photon_resonance() {
        // Strong trigger (18 MHz) reshapes the probe EIT window relative
        // to the Lambda baseline at fixed populations.
        let params = TripodParams::reference();
        let drives = Drives::from_mhz((3.0, 0.0), (70.0, 0.0), (18.0, 0.0)).unwrap();
        let tripod = chi_total(&params, &drives).unwrap().chi_p;
        let lambda = chi_lambda(FieldRole::Probe, &params, &drives).unwrap();
        assert!((tripod.im - lambda.im).abs() > 0.0);
    }

    #[test]
    fn validity_flag_tracks_weak_field_regime() {
        let params = TripodParams::reference();
        let ok = chi_total(&params, &reference_drives(0.0, 0.0, 0.0)).unwrap();
        assert!(ok.validity.within_regime());
        let strong = Drives::from_mhz((3.0, 0.0), (70.0, 0.0), (18.0, 0.0)).unwrap();
        let flagged = chi_total(&params, &strong).unwrap();
        assert!(!flagged.validity.within_regime());
        assert_relative_eq!(flagged.validity.trigger_ratio_sq, (18.0f64 / 70.0).powi(2), max_relative = 1e-12);
    }

    #[test]
    fn singular_point_reported_for_degenerate_gammas() {
        // gamma1 = 0 with the trigger on and probe-trigger two-photon
        // resonance makes the cross term genuinely divergent.
        let mut params = TripodParams::reference();
        params.decay = DecayRates::new(3.5, 0.0, 1.5, 1.0).unwrap();
        let drives = reference_drives(0.0, 0.0, 0.0);
        match chi_probe_sub(1, &params, &drives) {
            Err(Error::SingularPoint { denominator, .. }) => {
                assert!(denominator.contains("two-photon"));
            }
            other => panic!("expected singular point, got {other:?}"),
        }
    }
}
