//! Scenario engine: detuning sweeps over a locked detuning grid, feature
//! extraction (EIT window width, dispersion extrema), the coupling-detuning
//! XPM scan, and least-squares model fitting.
//!
//! Grid points are pure pointwise evaluations, so sweeps parallelize over
//! rows and give bit-identical output for any worker count.

pub mod fit;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calibration::intensity_from_rabi;
use crate::error::{Error, Result};
use crate::kerr::{xpm_at_point, XpmResult};
use crate::model::{Drives, FieldRole, TripodParams};
use crate::observables::{
    absorption_depth, group_index, homodyne_dispersion_signal, refractive_index, transmission,
    ObservablePoint,
};
use crate::susceptibility::{chi_total, SusceptibilityRecord};

pub use fit::{fit_parameters, FitObservable, FitOptions, FitProblem, FitResult, FreeParam};

/// Which detuning the scan varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanAxis {
    DeltaP,
    DeltaT,
    DeltaC,
}

impl ScanAxis {
    pub fn column_name(&self) -> &'static str {
        match self {
            ScanAxis::DeltaP => "delta_p_mhz",
            ScanAxis::DeltaT => "delta_t_mhz",
            ScanAxis::DeltaC => "delta_c_mhz",
        }
    }

    fn role(&self) -> FieldRole {
        match self {
            ScanAxis::DeltaP => FieldRole::Probe,
            ScanAxis::DeltaT => FieldRole::Trigger,
            ScanAxis::DeltaC => FieldRole::Coupling,
        }
    }
}

/// Constraint tying one detuning to the scan axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetuningLock {
    /// This detuning is the scanned axis.
    Axis,
    /// Held at a fixed value (MHz).
    Fixed(f64),
    /// Axis value plus a fixed offset (MHz).
    AxisOffset(f64),
}

impl DetuningLock {
    fn resolve(&self, axis_value: f64) -> f64 {
        match self {
            DetuningLock::Axis => axis_value,
            DetuningLock::Fixed(v) => *v,
            DetuningLock::AxisOffset(off) => axis_value + off,
        }
    }
}

/// Full scan scenario: grid, locks, medium, drives and switches.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanSpec {
    pub axis: ScanAxis,
    pub start_mhz: f64,
    pub stop_mhz: f64,
    pub points: usize,
    pub probe_lock: DetuningLock,
    pub trigger_lock: DetuningLock,
    pub coupling_lock: DetuningLock,
    pub params: TripodParams,
    pub drives: Drives,
    /// Weak-field switches; an "off" field scans as an infinitesimal
    /// test field (Rabi frequency zero).
    pub probe_on: bool,
    pub trigger_on: bool,
    /// Populate the per-row XPM records for both weak fields.
    pub compute_xpm: bool,
    /// Homodyne reference and signal amplitudes (normalized units).
    pub reference_amplitude: f64,
    pub field_amplitude: f64,
}

impl ScanSpec {
    /// A probe-detuning sweep with everything else on resonance.
    pub fn probe_sweep(params: TripodParams, drives: Drives, start: f64, stop: f64, points: usize) -> Self {
        Self {
            axis: ScanAxis::DeltaP,
            start_mhz: start,
            stop_mhz: stop,
            points,
            probe_lock: DetuningLock::Axis,
            trigger_lock: DetuningLock::Fixed(drives.trigger.detuning_mhz),
            coupling_lock: DetuningLock::Fixed(drives.coupling.detuning_mhz),
            params,
            drives,
            probe_on: true,
            trigger_on: true,
            compute_xpm: false,
            reference_amplitude: 1.0,
            field_amplitude: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if !(self.start_mhz.is_finite() && self.stop_mhz.is_finite()) || self.start_mhz >= self.stop_mhz {
            return Err(Error::Schema(format!(
                "scan.start_mhz must be below scan.stop_mhz (got {} .. {})",
                self.start_mhz, self.stop_mhz
            )));
        }
        if self.points < 3 {
            return Err(Error::Schema(format!("scan.points must be >= 3 (got {})", self.points)));
        }
        let locks = [
            (FieldRole::Probe, self.probe_lock),
            (FieldRole::Trigger, self.trigger_lock),
            (FieldRole::Coupling, self.coupling_lock),
        ];
        for (role, lock) in locks {
            let is_axis_field = role == self.axis.role();
            match (is_axis_field, lock) {
                (true, DetuningLock::Axis) => {}
                (true, _) => {
                    return Err(Error::Schema(format!(
                        "scan.locks.{role} must be the axis for axis {}",
                        self.axis.column_name()
                    )))
                }
                (false, DetuningLock::Axis) => {
                    return Err(Error::Schema(format!(
                        "scan.locks.{role} conflicts with axis {}",
                        self.axis.column_name()
                    )))
                }
                (false, _) => {}
            }
        }
        Ok(())
    }

    /// Grid value at index i: start + i * (stop - start) / (points - 1).
    /// The multiply-then-divide form keeps shared points bit-identical
    /// under grid doubling.
    pub fn axis_value(&self, index: usize) -> f64 {
        self.start_mhz
            + (index as f64 * (self.stop_mhz - self.start_mhz)) / ((self.points - 1) as f64)
    }

    pub fn spacing_mhz(&self) -> f64 {
        (self.stop_mhz - self.start_mhz) / ((self.points - 1) as f64)
    }

    /// Drives at one axis value, with locks and switches applied.
    pub fn drives_at(&self, axis_value: f64) -> Drives {
        let mut d = self.drives;
        d.probe.detuning_mhz = self.probe_lock.resolve(axis_value);
        d.trigger.detuning_mhz = self.trigger_lock.resolve(axis_value);
        d.coupling.detuning_mhz = self.coupling_lock.resolve(axis_value);
        if !self.probe_on {
            d.probe.rabi_mhz = 0.0;
        }
        if !self.trigger_on {
            d.trigger.rabi_mhz = 0.0;
        }
        d
    }
}

/// One evaluated grid row.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumRow {
    pub axis_mhz: f64,
    pub record: SusceptibilityRecord,
    pub probe: ObservablePoint,
    pub trigger: ObservablePoint,
    pub xpm_probe: Option<XpmResult>,
    pub xpm_trigger: Option<XpmResult>,
}

/// Ordered rows of derived observables over a scan axis.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumTable {
    pub axis: ScanAxis,
    pub rows: Vec<SpectrumRow>,
}

impl SpectrumTable {
    pub fn field_observables(&self, field: FieldRole) -> impl Iterator<Item = (f64, &ObservablePoint)> {
        self.rows.iter().map(move |r| {
            (
                r.axis_mhz,
                match field {
                    FieldRole::Probe => &r.probe,
                    _ => &r.trigger,
                },
            )
        })
    }
}

fn observables_for(
    chi: num_complex::Complex64,
    params: &TripodParams,
    reference_amplitude: f64,
    field_amplitude: f64,
) -> ObservablePoint {
    let alpha_l = absorption_depth(chi, params.wavelength_nm, params.cell_length_cm);
    ObservablePoint {
        alpha_l,
        n_minus_1: refractive_index(chi),
        transmission: transmission(alpha_l),
        dispersion_signal: homodyne_dispersion_signal(
            chi,
            params.wavelength_nm,
            params.cell_length_cm,
            reference_amplitude,
            field_amplitude,
        ),
        group_index: None,
    }
}

fn evaluate_point(spec: &ScanSpec, axis_value: f64) -> Result<SpectrumRow> {
    let drives = spec.drives_at(axis_value);
    let record = chi_total(&spec.params, &drives)?;
    let probe = observables_for(record.chi_p, &spec.params, spec.reference_amplitude, spec.field_amplitude);
    let trigger =
        observables_for(record.chi_t, &spec.params, spec.reference_amplitude, spec.field_amplitude);
    let (xpm_probe, xpm_trigger) = if spec.compute_xpm {
        let i_t = intensity_from_rabi(drives.trigger.rabi_mhz, spec.params.dipole_cm);
        let i_p = intensity_from_rabi(drives.probe.rabi_mhz, spec.params.dipole_cm);
        let xp = (i_t > 0.0)
            .then(|| xpm_at_point(FieldRole::Probe, &spec.params, &drives, i_t))
            .transpose()?;
        let xt = (i_p > 0.0)
            .then(|| xpm_at_point(FieldRole::Trigger, &spec.params, &drives, i_p))
            .transpose()?;
        (xp, xt)
    } else {
        (None, None)
    };
    Ok(SpectrumRow { axis_mhz: axis_value, record, probe, trigger, xpm_probe, xpm_trigger })
}

/// Evaluate the scenario over its grid. Rows are computed independently
/// and assembled in index order; singular points propagate with the
/// offending axis value.
pub fn sweep(spec: &ScanSpec) -> Result<SpectrumTable> {
    spec.validate()?;
    let rows: Vec<Result<SpectrumRow>> = (0..spec.points)
        .into_par_iter()
        .map(|i| {
            let x = spec.axis_value(i);
            evaluate_point(spec, x).map_err(|e| Error::ScanPoint { axis_mhz: x, source: Box::new(e) })
        })
        .collect();
    let mut out = Vec::with_capacity(spec.points);
    for row in rows {
        out.push(row?);
    }
    // Group index needs the scan context: central differences interior,
    // one-sided at the edges.
    let spacing = spec.spacing_mhz();
    for field in [FieldRole::Probe, FieldRole::Trigger] {
        let re_chi: Vec<f64> = out
            .iter()
            .map(|r| match field {
                FieldRole::Probe => r.record.chi_p.re,
                _ => r.record.chi_t.re,
            })
            .collect();
        for i in 0..out.len() {
            let ng = if i > 0 && i + 1 < out.len() {
                group_index(&re_chi, spacing, spec.params.wavelength_nm, i).ok()
            } else {
                None
            };
            let slot = match field {
                FieldRole::Probe => &mut out[i].probe,
                _ => &mut out[i].trigger,
            };
            slot.group_index = ng;
        }
    }
    Ok(SpectrumTable { axis: spec.axis, rows: out })
}

/// FWHM of the transparency dip of Im chi for `field`: the width at the
/// midpoint between the dip minimum and the surrounding maxima (or edge
/// shoulders), by linear interpolation of the crossings.
pub fn eit_window_width(table: &SpectrumTable, field: FieldRole) -> Result<f64> {
    let values: Vec<(f64, f64)> = table
        .rows
        .iter()
        .map(|r| {
            (
                r.axis_mhz,
                match field {
                    FieldRole::Probe => r.record.chi_p.im,
                    _ => r.record.chi_t.im,
                },
            )
        })
        .collect();
    if values.len() < 5 {
        return Err(Error::InsufficientSamples { needed: 5, got: values.len() });
    }
    // Shoulders: the two tallest local maxima when the scan contains the
    // surrounding absorption peaks, otherwise the edge shoulders. The
    // dip is then the minimum between the shoulders (the far Lorentzian
    // wings can lie below the transparency minimum).
    let mut maxima: Vec<usize> = (1..values.len() - 1)
        .filter(|&i| values[i].1 > values[i - 1].1 && values[i].1 >= values[i + 1].1)
        .collect();
    maxima.sort_by(|a, b| values[*b].1.total_cmp(&values[*a].1));
    let (left_idx, right_idx) = match (maxima.first(), maxima.get(1)) {
        (Some(&a), Some(&b)) if a.abs_diff(b) >= 2 => (a.min(b), a.max(b)),
        _ => (0, values.len() - 1),
    };
    let dip_idx = (left_idx + 1..right_idx)
        .min_by(|a, b| values[*a].1.total_cmp(&values[*b].1))
        .ok_or(Error::NoDipFound)?;
    let dip_val = values[dip_idx].1;
    let left_max = values[left_idx].1;
    let right_max = values[right_idx].1;
    if left_max <= dip_val || right_max <= dip_val {
        return Err(Error::NoDipFound);
    }

    // Walk outward from the dip to each shoulder until the curve rises
    // through the half level; interpolate the crossing linearly.
    let crossing = |from: usize, to: usize, level: f64| -> Option<f64> {
        let step: isize = if to < from { -1 } else { 1 };
        let mut i = from as isize;
        while i != to as isize {
            let j = i + step;
            let (x0, y0) = values[i as usize];
            let (x1, y1) = values[j as usize];
            let (lo, hi) = if y0 <= y1 { (y0, y1) } else { (y1, y0) };
            if lo <= level && level <= hi && hi > lo {
                return Some(x0 + (level - y0) / (y1 - y0) * (x1 - x0));
            }
            i = j;
        }
        None
    };

    let left_level = dip_val + (left_max - dip_val) / 2.0;
    let right_level = dip_val + (right_max - dip_val) / 2.0;
    let left = crossing(dip_idx, left_idx, left_level).ok_or(Error::NoDipFound)?;
    let right = crossing(dip_idx, right_idx, right_level).ok_or(Error::NoDipFound)?;
    Ok(right - left)
}

/// Local extrema of the homodyne dispersion signal by discrete neighbor
/// comparison. Plateau ties resolve toward the smaller axis value.
pub fn dispersion_extrema(table: &SpectrumTable, field: FieldRole) -> Vec<(f64, f64)> {
    let signal: Vec<(f64, f64)> = table
        .rows
        .iter()
        .map(|r| {
            (
                r.axis_mhz,
                match field {
                    FieldRole::Probe => r.probe.dispersion_signal,
                    _ => r.trigger.dispersion_signal,
                },
            )
        })
        .collect();
    let mut out = Vec::new();
    for i in 1..signal.len().saturating_sub(1) {
        let (x, y) = signal[i];
        let prev = signal[i - 1].1;
        let next = signal[i + 1].1;
        let is_max = y > prev && y >= next;
        let is_min = y < prev && y <= next;
        if is_max || is_min {
            out.push((x, y));
        }
    }
    out
}

/// Extrema whose magnitude reaches `rel_threshold` of the largest one.
pub fn dominant_extrema(table: &SpectrumTable, field: FieldRole, rel_threshold: f64) -> Vec<(f64, f64)> {
    let all = dispersion_extrema(table, field);
    let max_mag = all.iter().map(|(_, y)| y.abs()).fold(0.0, f64::max);
    all.into_iter().filter(|(_, y)| y.abs() >= rel_threshold * max_mag).collect()
}

/// How the trigger detuning follows the coupling-detuning scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TriggerLockMode {
    /// Trigger rides its own two-photon resonance with the coupling:
    /// dt = dc.
    CouplingLocked,
    /// Trigger shares the probe's two-photon condition: dt = dp.
    TwoPhotonLocked,
    /// Trigger held fixed (MHz) while dc scans.
    Fixed(f64),
}

/// The XPM-vs-coupling-detuning protocol: probe offset from the coupling
/// two-photon resonance by `offset_mhz`, both XPM coefficients and
/// transmissions evaluated per coupling detuning.
#[derive(Debug, Clone, PartialEq)]
pub struct Fig4Spec {
    pub params: TripodParams,
    pub drives: Drives,
    /// dp - dc, MHz.
    pub offset_mhz: f64,
    pub start_mhz: f64,
    pub stop_mhz: f64,
    pub points: usize,
    pub trigger_lock: TriggerLockMode,
}

impl Default for Fig4Spec {
    /// Reference protocol: 4 MHz weak fields, 70 MHz coupling, dp - dc =
    /// -0.5 MHz, trigger riding its own two-photon resonance (dt = dc),
    /// 25 points over 1..25 MHz.
    ///
    /// The grid starts past dc = 0.5 so the probe one-photon detuning
    /// does not cross zero inside the scan; the crossing produces a
    /// sub-1e-7 transmission dip that breaks strict monotonicity.
    fn default() -> Self {
        Self {
            params: TripodParams::reference(),
            drives: Drives::from_mhz((4.0, 0.5), (70.0, 1.0), (4.0, 1.0)).expect("valid drives"),
            offset_mhz: -0.5,
            start_mhz: 1.0,
            stop_mhz: 25.0,
            points: 25,
            trigger_lock: TriggerLockMode::CouplingLocked,
        }
    }
}

/// One row of the XPM-vs-coupling-detuning table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fig4Row {
    pub delta_c_mhz: f64,
    pub n2_p_cm2_per_w: f64,
    pub n2_t_cm2_per_w: f64,
    pub transmission_p: f64,
    pub transmission_t: f64,
}

/// Scan the coupling detuning with the probe locked `offset_mhz` away
/// from the two-photon resonance. Every row satisfies dp - dc =
/// offset_mhz exactly.
pub fn fig4_scan(spec: &Fig4Spec) -> Result<Vec<Fig4Row>> {
    spec.params.validate()?;
    if spec.points < 3 {
        return Err(Error::Schema(format!("fig4.points must be >= 3 (got {})", spec.points)));
    }
    if spec.start_mhz >= spec.stop_mhz {
        return Err(Error::Schema("fig4.start_mhz must be below fig4.stop_mhz".into()));
    }
    let i_probe = intensity_from_rabi(spec.drives.probe.rabi_mhz, spec.params.dipole_cm);
    let i_trigger = intensity_from_rabi(spec.drives.trigger.rabi_mhz, spec.params.dipole_cm);
    let rows: Vec<Result<Fig4Row>> = (0..spec.points)
        .into_par_iter()
        .map(|i| {
            let dc = spec.start_mhz
                + (i as f64 * (spec.stop_mhz - spec.start_mhz)) / ((spec.points - 1) as f64);
            let dp = dc + spec.offset_mhz;
            let dt = match spec.trigger_lock {
                TriggerLockMode::CouplingLocked => dc,
                TriggerLockMode::TwoPhotonLocked => dp,
                TriggerLockMode::Fixed(v) => v,
            };
            let drives = spec
                .drives
                .with_detuning(FieldRole::Probe, dp)
                .with_detuning(FieldRole::Trigger, dt)
                .with_detuning(FieldRole::Coupling, dc);
            let point = || -> Result<Fig4Row> {
                let xp = xpm_at_point(FieldRole::Probe, &spec.params, &drives, i_trigger)?;
                let xt = xpm_at_point(FieldRole::Trigger, &spec.params, &drives, i_probe)?;
                Ok(Fig4Row {
                    delta_c_mhz: dc,
                    n2_p_cm2_per_w: xp.n2_cm2_per_w,
                    n2_t_cm2_per_w: xt.n2_cm2_per_w,
                    transmission_p: xp.transmission_at_point,
                    transmission_t: xt.transmission_at_point,
                })
            };
            point().map_err(|e| Error::ScanPoint { axis_mhz: dc, source: Box::new(e) })
        })
        .collect();
    rows.into_iter().collect()
}
