//! Declarative scenario configs: a JSON document mirroring the medium,
//! the three drives, scan/XPM/fit sections, and parameter provenance.
//! Unknown keys are rejected; error messages name the offending key.
//!
//! Figure presets ship as config files under `presets/` and are embedded
//! verbatim, so every reconstruction is inspectable and diffable.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::model::{
    DecayRates, Drives, FieldRole, Populations, TransitionCoefficients, TripodParams,
};
use crate::oracle::{scenario_populations, Branching, DecayModelOptions};
use crate::scan::{
    DetuningLock, Fig4Spec, FitObservable, FreeParam, ScanAxis, ScanSpec, TriggerLockMode,
};

fn default_true() -> bool {
    true
}
fn default_one() -> f64 {
    1.0
}
fn default_weights() -> [f64; 2] {
    [0.5, 0.5]
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientsConfig {
    pub probe: [f64; 2],
    pub coupling: [f64; 2],
    pub trigger: [f64; 2],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecayConfig {
    pub gamma0_mhz: f64,
    pub gamma1_mhz: f64,
    pub gamma2_mhz: f64,
    pub gamma3_mhz: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MediumConfig {
    pub density_per_cm3: f64,
    pub dipole_cm: f64,
    pub wavelength_nm: f64,
    pub cell_length_cm: f64,
    pub coefficients: CoefficientsConfig,
    pub decay: DecayConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldConfig {
    pub rabi_mhz: f64,
    pub detuning_mhz: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldsConfig {
    pub probe: FieldConfig,
    pub coupling: FieldConfig,
    pub trigger: FieldConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PopulationsMode {
    /// Use the configured values as printed inputs.
    Configured,
    /// Solve the steady-state oracle at the configured drive detunings
    /// and use its populations (per weak-field branch).
    Oracle,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PopulationsConfig {
    pub mode: PopulationsMode,
    #[serde(default)]
    pub rho_a: Option<[f64; 2]>,
    #[serde(default)]
    pub rho_b: Option<[f64; 2]>,
    #[serde(default)]
    pub rho_e: Option<[f64; 2]>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BranchingConfig {
    Equal,
    CoefficientSquared,
    Custom([f64; 3]),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleConfig {
    pub gamma_laser_mhz: f64,
    pub ground_mixing_mhz: f64,
    pub branching: BranchingConfig,
    #[serde(default = "default_weights")]
    pub weights: [f64; 2],
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            gamma_laser_mhz: 0.625,
            ground_mixing_mhz: 0.001,
            branching: BranchingConfig::Equal,
            weights: [0.5, 0.5],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LocksConfig {
    pub probe: DetuningLock,
    pub trigger: DetuningLock,
    pub coupling: DetuningLock,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    pub axis: ScanAxis,
    pub start_mhz: f64,
    pub stop_mhz: f64,
    pub points: usize,
    pub locks: LocksConfig,
    #[serde(default = "default_true")]
    pub probe_on: bool,
    #[serde(default = "default_true")]
    pub trigger_on: bool,
    #[serde(default)]
    pub compute_xpm: bool,
    #[serde(default = "default_one")]
    pub reference_amplitude: f64,
    #[serde(default = "default_one")]
    pub field_amplitude: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmitQuantity {
    Absorption,
    Dispersion,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmitConfig {
    pub field: FieldRole,
    pub quantity: EmitQuantity,
    #[serde(default)]
    pub lambda_baseline: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fig4Config {
    pub offset_mhz: f64,
    pub start_mhz: f64,
    pub stop_mhz: f64,
    pub points: usize,
    pub trigger_lock: TriggerLockMode,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct XpmConfig {
    /// Scenario mode: which field's XPM to extract.
    #[serde(default)]
    pub target: Option<FieldRole>,
    /// Override for the perturbing intensity; defaults to the intensity
    /// matching the perturber's Rabi frequency.
    #[serde(default)]
    pub perturbing_intensity_w_per_cm2: Option<f64>,
    /// Arithmetic mode: a given coefficient instead of a scenario.
    #[serde(default)]
    pub n2_cm2_per_w: Option<f64>,
    #[serde(default)]
    pub intensity_w_per_cm2: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitBoundConfig {
    pub param: FreeParam,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitConfig {
    pub observable: FitObservable,
    pub free: Vec<FitBoundConfig>,
    #[serde(default)]
    pub max_iterations: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleCheckConfig {
    pub start_mhz: f64,
    pub stop_mhz: f64,
    pub points: usize,
}

/// Top-level scenario document.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub medium: MediumConfig,
    pub fields: FieldsConfig,
    pub populations: PopulationsConfig,
    #[serde(default)]
    pub oracle: OracleConfig,
    #[serde(default)]
    pub scan: Option<ScanConfig>,
    #[serde(default)]
    pub emit: Option<EmitConfig>,
    #[serde(default)]
    pub fig4: Option<Fig4Config>,
    #[serde(default)]
    pub xpm: Option<XpmConfig>,
    #[serde(default)]
    pub fit: Option<FitConfig>,
    #[serde(default)]
    pub oracle_check: Option<OracleCheckConfig>,
    /// Parameter provenance tags, emitted into output headers.
    #[serde(default)]
    pub provenance: BTreeMap<String, String>,
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn decay_model_options(&self) -> DecayModelOptions {
        DecayModelOptions {
            gamma_laser_mhz: self.oracle.gamma_laser_mhz,
            ground_mixing_mhz: self.oracle.ground_mixing_mhz,
            branching: match self.oracle.branching {
                BranchingConfig::Equal => Branching::Equal,
                BranchingConfig::CoefficientSquared => Branching::CoefficientSquared,
                BranchingConfig::Custom(w) => Branching::Custom(w),
            },
        }
    }

    pub fn drives(&self) -> Result<Drives> {
        Drives::from_mhz(
            (self.fields.probe.rabi_mhz, self.fields.probe.detuning_mhz),
            (self.fields.coupling.rabi_mhz, self.fields.coupling.detuning_mhz),
            (self.fields.trigger.rabi_mhz, self.fields.trigger.detuning_mhz),
        )
    }

    /// Medium parameters with populations left at the configured values
    /// (or the reference quartet when oracle mode gives none).
    pub fn base_params(&self) -> Result<TripodParams> {
        let m = &self.medium;
        let coeffs = TransitionCoefficients::new(
            m.coefficients.probe,
            m.coefficients.coupling,
            m.coefficients.trigger,
        )?;
        let decay = DecayRates::new(
            m.decay.gamma0_mhz,
            m.decay.gamma1_mhz,
            m.decay.gamma2_mhz,
            m.decay.gamma3_mhz,
        )?;
        let populations = match (&self.populations.rho_a, &self.populations.rho_b) {
            (Some(a), Some(b)) => {
                Populations::new(*a, *b, self.populations.rho_e.unwrap_or([0.0, 0.0]))?
            }
            _ if self.populations.mode == PopulationsMode::Oracle => Populations::reference(),
            _ => {
                return Err(Error::Schema(
                    "populations.rho_a and populations.rho_b are required in configured mode"
                        .into(),
                ))
            }
        };
        let params = TripodParams {
            density_per_cm3: m.density_per_cm3,
            dipole_cm: m.dipole_cm,
            coeffs,
            decay,
            populations,
            wavelength_nm: m.wavelength_nm,
            cell_length_cm: m.cell_length_cm,
        };
        params.validate()?;
        Ok(params)
    }

    /// Medium parameters with populations resolved for the given drive
    /// branch (oracle mode solves the steady state at those drives).
    pub fn params_for_branch(&self, drives: &Drives) -> Result<TripodParams> {
        let mut params = self.base_params()?;
        if self.populations.mode == PopulationsMode::Oracle {
            params.populations = scenario_populations(
                &params,
                drives,
                &self.decay_model_options(),
                self.oracle.weights,
            )?;
        }
        Ok(params)
    }

    fn scan_spec_with(&self, params: TripodParams, drives: Drives) -> Result<ScanSpec> {
        let sc = self
            .scan
            .as_ref()
            .ok_or_else(|| Error::Schema("missing required section `scan`".into()))?;
        let spec = ScanSpec {
            axis: sc.axis,
            start_mhz: sc.start_mhz,
            stop_mhz: sc.stop_mhz,
            points: sc.points,
            probe_lock: sc.locks.probe,
            trigger_lock: sc.locks.trigger,
            coupling_lock: sc.locks.coupling,
            params,
            drives,
            probe_on: sc.probe_on,
            trigger_on: sc.trigger_on,
            compute_xpm: sc.compute_xpm,
            reference_amplitude: sc.reference_amplitude,
            field_amplitude: sc.field_amplitude,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Scan spec for the full (all weak fields on) scenario.
    pub fn scan_spec(&self) -> Result<ScanSpec> {
        let drives = self.drives()?;
        let params = self.params_for_branch(&drives)?;
        self.scan_spec_with(params, drives)
    }

    /// Scan spec for the Lambda baseline of `field`: the other weak field
    /// off, populations re-resolved for that branch in oracle mode.
    pub fn lambda_scan_spec(&self, field: FieldRole) -> Result<ScanSpec> {
        let perturber = match field {
            FieldRole::Probe => FieldRole::Trigger,
            FieldRole::Trigger => FieldRole::Probe,
            FieldRole::Coupling => {
                return Err(Error::Schema("emit.field must be probe or trigger".into()))
            }
        };
        let drives = self.drives()?.with_rabi(perturber, 0.0);
        let params = self.params_for_branch(&drives)?;
        let mut spec = self.scan_spec_with(params, drives)?;
        match perturber {
            FieldRole::Probe => spec.probe_on = false,
            FieldRole::Trigger => spec.trigger_on = false,
            FieldRole::Coupling => unreachable!(),
        }
        Ok(spec)
    }

    /// The interferometer-measured XPM phase of `target` at the scenario
    /// operating point (optionally overriding the probe detuning): the
    /// (n - 1) difference between the perturber-on and perturber-off
    /// branches, each with its own resolved populations. In configured
    /// mode both branches share the same populations and this reduces to
    /// [`crate::kerr::phase_from_dispersion_difference`].
    pub fn measured_xpm_phase(
        &self,
        target: FieldRole,
        probe_detuning_override: Option<f64>,
    ) -> Result<f64> {
        let perturber = match target {
            FieldRole::Probe => FieldRole::Trigger,
            FieldRole::Trigger => FieldRole::Probe,
            FieldRole::Coupling => {
                return Err(Error::Schema("xpm target must be probe or trigger".into()))
            }
        };
        let mut drives_on = self.drives()?;
        if let Some(dp) = probe_detuning_override {
            drives_on = drives_on.with_detuning(FieldRole::Probe, dp);
        }
        let drives_off = drives_on.with_rabi(perturber, 0.0);
        let params_on = self.params_for_branch(&drives_on)?;
        let params_off = self.params_for_branch(&drives_off)?;
        let chi_on = crate::susceptibility::chi_total(&params_on, &drives_on)?;
        let chi_off = crate::susceptibility::chi_total(&params_off, &drives_off)?;
        let pick = |r: &crate::susceptibility::SusceptibilityRecord| match target {
            FieldRole::Probe => r.chi_p,
            _ => r.chi_t,
        };
        let dn = crate::observables::refractive_index(pick(&chi_on))
            - crate::observables::refractive_index(pick(&chi_off));
        let k_per_m = std::f64::consts::TAU / (params_on.wavelength_nm * 1e-9);
        Ok(k_per_m * (params_on.cell_length_cm * 1e-2) * dn)
    }

    pub fn fig4_spec(&self) -> Result<Fig4Spec> {
        let f = self
            .fig4
            .as_ref()
            .ok_or_else(|| Error::Schema("missing required section `fig4`".into()))?;
        let drives = self.drives()?;
        let params = self.params_for_branch(&drives)?;
        Ok(Fig4Spec {
            params,
            drives,
            offset_mhz: f.offset_mhz,
            start_mhz: f.start_mhz,
            stop_mhz: f.stop_mhz,
            points: f.points,
            trigger_lock: f.trigger_lock,
        })
    }
}

/// Embedded preset documents (also shipped as files under `presets/`).
pub const PRESETS: &[(&str, &str)] = &[
    ("fig2a", include_str!("../presets/fig2a.json")),
    ("fig2b", include_str!("../presets/fig2b.json")),
    ("fig3a", include_str!("../presets/fig3a.json")),
    ("fig3b", include_str!("../presets/fig3b.json")),
    ("fig3c", include_str!("../presets/fig3c.json")),
    ("fig3d", include_str!("../presets/fig3d.json")),
    ("fig3e", include_str!("../presets/fig3e.json")),
    ("fig3f", include_str!("../presets/fig3f.json")),
    ("fig3g", include_str!("../presets/fig3g.json")),
    ("fig3h", include_str!("../presets/fig3h.json")),
    ("fig4", include_str!("../presets/fig4.json")),
    ("single_photon", include_str!("../presets/single_photon.json")),
    ("oracle_check", include_str!("../presets/oracle_check.json")),
];

pub fn available_presets() -> Vec<&'static str> {
    PRESETS.iter().map(|(name, _)| *name).collect()
}

pub fn preset(name: &str) -> Result<ScenarioConfig> {
    PRESETS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| ScenarioConfig::from_json(text))
        .ok_or_else(|| {
            Error::Schema(format!(
                "unknown preset `{name}` (available: {})",
                available_presets().join(", ")
            ))
        })?
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_presets_parse_and_validate() {
        for name in available_presets() {
            let cfg = preset(name).unwrap_or_else(|e| panic!("preset {name}: {e}"));
            cfg.base_params().unwrap_or_else(|e| panic!("preset {name} params: {e}"));
            cfg.drives().unwrap_or_else(|e| panic!("preset {name} drives: {e}"));
        }
    }

    #[test]
    fn unknown_keys_are_rejected_by_name() {
        let cfg = preset("fig2a").unwrap();
        let mut value: serde_json::Value = serde_json::from_str(&cfg.to_json()).unwrap();
        value["mispelled_section"] = serde_json::json!(1);
        let err = ScenarioConfig::from_json(&value.to_string()).unwrap_err();
        assert!(err.to_string().contains("mispelled_section"), "{err}");
    }

    #[test]
    fn unknown_preset_lists_options() {
        let err = preset("fig9z").unwrap_err();
        assert!(err.to_string().contains("fig4"));
    }

    #[test]
    fn presets_embed_provenance() {
        for name in available_presets() {
            let cfg = preset(name).unwrap();
            assert!(!cfg.provenance.is_empty(), "preset {name} lacks provenance tags");
        }
    }

    #[test]
    fn configured_mode_requires_population_values() {
        let cfg = preset("fig4").unwrap();
        let mut value: serde_json::Value = serde_json::from_str(&cfg.to_json()).unwrap();
        value["populations"] = serde_json::json!({ "mode": "configured" });
        let cfg = ScenarioConfig::from_json(&value.to_string()).unwrap();
        assert!(cfg.base_params().is_err());
    }
}
