//! Steady-state simulator of double electromagnetically induced
//! transparency (EIT) and cross-phase modulation (XPM) in a four-level
//! tripod atomic medium.
//!
//! The medium is modeled as two coherently prepared tripod subsystems
//! sharing three optical fields (probe, coupling, trigger). The crate
//! provides:
//!
//! * analytic perturbative susceptibilities per subsystem and in total
//!   ([`susceptibility`]), with the three-level Lambda limit;
//! * an independent steady-state Lindblad solver used as a brute-force
//!   oracle for susceptibilities, populations and positivity ([`oracle`]);
//! * measurable quantities: absorption depth, refractive index,
//!   transmission, homodyne dispersion signal, group index
//!   ([`observables`]);
//! * cross-Kerr (XPM) coefficients and phase shifts ([`kerr`]);
//! * power/intensity/Rabi-frequency calibration ([`calibration`]);
//! * a scenario engine for detuning sweeps, feature extraction and
//!   least-squares model fitting ([`scan`]);
//! * declarative scenario configs and deterministic table output
//!   ([`config`], [`table_io`]).
//!
//! Frequencies are quoted in linear-frequency MHz throughout the public
//! API; lengths in cm, densities per cm^3, intensities in W/cm^2.

pub mod calibration;
pub mod config;
pub mod error;
pub mod kerr;
pub mod model;
pub mod observables;
pub mod oracle;
pub mod scan;
pub mod susceptibility;
pub mod table_io;

pub use error::{Error, Result};
pub use model::{
    to_angular, DecayRates, Drives, FieldDrive, FieldRole, Populations, TildeDetunings,
    TransitionCoefficients, TripodParams,
};
pub use susceptibility::{chi_lambda, chi_probe_sub, chi_total, chi_trigger_sub, SusceptibilityRecord};
