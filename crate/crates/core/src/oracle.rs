//! Independent steady-state Lindblad solver for a single four-level
//! tripod subsystem, basis (|a>, |b>, |b_c>, |e>) = (probe ground,
//! trigger ground, coupling ground, excited).
//!
//! This provides the brute-force ground truth the analytic expressions in
//! [`crate::susceptibility`] are checked against: steady-state coherences
//! (converted to susceptibilities), populations, and positivity.
//!
//! The effective rates gamma0..gamma3 are mapped onto an explicit
//! dissipator set (see [`DecayModel::from_rates`]): excited-state decay
//! with configurable branching, pure dephasing on the excited state and
//! on the ground pairs, and a small uniform ground-mixing (transit) rate
//! that makes the steady state unique.
//!
//! Internally the oracle works in angular rad/us so Hamiltonian and
//! dissipator entries stay O(1..1e3).

use nalgebra::{DMatrix, DVector, Matrix4};
use num_complex::Complex64;
use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::model::{
    effective_rabi, to_angular, Drives, FieldRole, Populations, TripodParams, EPSILON_0, HBAR,
};

type M4 = Matrix4<Complex64>;

const DIM: usize = 4;
const IDX_A: usize = 0;
const IDX_B: usize = 1;
const IDX_C: usize = 2;
const IDX_E: usize = 3;

/// Branching of the excited-state decay over the three ground states.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Branching {
    /// One third to each ground state.
    Equal,
    /// Proportional to the squared transition coefficients of the
    /// subsystem's three legs, normalized.
    CoefficientSquared,
    /// Explicit (a, b, c) weights, normalized internally.
    Custom([f64; 3]),
}

/// Knobs of the gamma -> Lindblad mapping.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayModelOptions {
    /// Laser-linewidth share of gamma0, MHz. The excited population decay
    /// is Gamma = 2 (gamma0 - gamma_laser); the default puts Gamma at the
    /// Rb D1 natural linewidth of 5.75 MHz for gamma0 = 3.5 MHz.
    pub gamma_laser_mhz: f64,
    /// Uniform ground-state mixing (transit relaxation), MHz.
    pub ground_mixing_mhz: f64,
    pub branching: Branching,
}

impl Default for DecayModelOptions {
    fn default() -> Self {
        Self {
            gamma_laser_mhz: 0.625,
            ground_mixing_mhz: 0.001,
            branching: Branching::Equal,
        }
    }
}

/// Explicit Lindblad rates of one subsystem, all in MHz (linear).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayModel {
    /// Total excited population decay rate Gamma.
    pub gamma_excited_mhz: f64,
    /// Branching fractions to (a, b, c); sum to 1.
    pub branching: [f64; 3],
    /// Extra pure dephasing of the excited state (laser linewidth share).
    pub excited_dephasing_mhz: f64,
    /// Pure ground-state dephasings (kappa_a, kappa_b, kappa_c).
    pub ground_dephasing_mhz: [f64; 3],
    /// Uniform ground-mixing rate per ordered pair.
    pub ground_mixing_mhz: f64,
}

impl DecayModel {
    /// Solve the dephasing split so the model realizes the requested
    /// effective rates:
    ///
    /// * ground coherence (i, j) decays at kappa_i + kappa_j + 2 gamma_g,
    ///   matched to gamma1, gamma2, gamma3;
    /// * the probe optical coherence decays at Gamma/2 + gamma_e,deph +
    ///   kappa_a + gamma_g, matched to gamma0 exactly.
    ///
    /// A pure-dephasing model cannot give both weak-field legs the same
    /// optical width when gamma2 != gamma3; the trigger leg then decays at
    /// gamma0 - (gamma2 - gamma3)/2. The probe leg is chosen exact because
    /// it is the scanned field.
    pub fn from_rates(rates: &crate::model::DecayRates, opts: &DecayModelOptions) -> Result<Self> {
        let gamma_excited_mhz = 2.0 * (rates.gamma0_mhz - opts.gamma_laser_mhz);
        if gamma_excited_mhz <= 0.0 {
            return Err(Error::InvalidParameter {
                name: "gamma_laser_mhz".into(),
                reason: "gamma0 - gamma_laser must be > 0".into(),
            });
        }
        let gm = opts.ground_mixing_mhz;
        if gm < 0.0 {
            return Err(Error::InvalidParameter {
                name: "ground_mixing_mhz".into(),
                reason: "must be >= 0".into(),
            });
        }
        let g1 = rates.gamma1_mhz - 2.0 * gm;
        let g2 = rates.gamma2_mhz - 2.0 * gm;
        let g3 = rates.gamma3_mhz - 2.0 * gm;
        let kappa_a = (g1 + g2 - g3) / 2.0;
        let kappa_b = (g1 + g3 - g2) / 2.0;
        let kappa_c = (g2 + g3 - g1) / 2.0;
        // The mixing correction can push a boundary-case split slightly
        // negative (the reference rates have gamma1 + gamma3 = gamma2
        // exactly); clamping to zero then over-realizes that pair rate by
        // at most 2 gamma_g. Anything below that is a real infeasibility.
        let tol = 2.0 * gm + 1e-12 * rates.gamma0_mhz;
        for (name, k) in [("kappa_a", kappa_a), ("kappa_b", kappa_b), ("kappa_c", kappa_c)] {
            if k < -tol {
                return Err(Error::InvalidParameter {
                    name: "decay".into(),
                    reason: format!(
                        "ground dephasing split infeasible: {name} = {k} < 0 \
                         (gamma1..gamma3 violate the pairwise triangle condition)"
                    ),
                });
            }
        }
        let excited_dephasing_mhz =
            rates.gamma0_mhz - gamma_excited_mhz / 2.0 - kappa_a.max(0.0) - gm;
        if excited_dephasing_mhz < -1e-12 {
            return Err(Error::InvalidParameter {
                name: "decay".into(),
                reason: format!(
                    "excited dephasing budget negative ({excited_dephasing_mhz} MHz); \
                     reduce gamma_laser or the ground dephasings"
                ),
            });
        }
        Ok(Self {
            gamma_excited_mhz,
            branching: [f64::NAN; 3], // resolved per subsystem below
            excited_dephasing_mhz: excited_dephasing_mhz.max(0.0),
            ground_dephasing_mhz: [kappa_a.max(0.0), kappa_b.max(0.0), kappa_c.max(0.0)],
            ground_mixing_mhz: gm,
        })
    }

    /// Resolve the branching fractions for a subsystem with the given
    /// squared-coefficient weights (probe, trigger, coupling legs).
    pub fn with_branching(mut self, opts: &DecayModelOptions, coeffs: [f64; 3]) -> Self {
        let raw = match opts.branching {
            Branching::Equal => [1.0, 1.0, 1.0],
            Branching::CoefficientSquared => {
                [coeffs[0] * coeffs[0], coeffs[1] * coeffs[1], coeffs[2] * coeffs[2]]
            }
            Branching::Custom(w) => w,
        };
        let sum: f64 = raw.iter().sum();
        self.branching = [raw[0] / sum, raw[1] / sum, raw[2] / sum];
        self
    }
}

/// Rotating-frame drive of a single subsystem: effective Rabi frequencies
/// and detunings, MHz.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubsystemDrive {
    pub rabi_probe_mhz: f64,
    pub rabi_coupling_mhz: f64,
    pub rabi_trigger_mhz: f64,
    pub detuning_probe_mhz: f64,
    pub detuning_trigger_mhz: f64,
    pub detuning_coupling_mhz: f64,
}

impl SubsystemDrive {
    /// Effective drives seen by subsystem 1 or 2 of the full scenario.
    pub fn from_scenario(params: &TripodParams, drives: &Drives, subsystem: usize) -> Result<Self> {
        Ok(Self {
            rabi_probe_mhz: effective_rabi(&drives.probe, &params.coeffs, subsystem)?,
            rabi_coupling_mhz: effective_rabi(&drives.coupling, &params.coeffs, subsystem)?,
            rabi_trigger_mhz: effective_rabi(&drives.trigger, &params.coeffs, subsystem)?,
            detuning_probe_mhz: drives.probe.detuning_mhz,
            detuning_trigger_mhz: drives.trigger.detuning_mhz,
            detuning_coupling_mhz: drives.coupling.detuning_mhz,
        })
    }
}

/// MHz (linear) to angular rad/us.
fn ang_us(mhz: f64) -> f64 {
    TAU * mhz
}

/// Hamiltonian (rad/us) plus the Lindblad operator list of one subsystem.
pub struct SubsystemGenerator {
    pub hamiltonian: M4,
    /// Collapse operators with rates absorbed (L appears as written).
    pub collapse_ops: Vec<M4>,
}

/// The rotating-frame generator: ground-state energies carry the
/// two-photon detunings, the excited state the probe detuning, and each
/// drive couples its ground state to |e> with -Omega/2.
pub fn build_generator(drive: &SubsystemDrive, model: &DecayModel) -> SubsystemGenerator {
    let dp = ang_us(drive.detuning_probe_mhz);
    let dt = ang_us(drive.detuning_trigger_mhz);
    let dc = ang_us(drive.detuning_coupling_mhz);
    let wp = ang_us(drive.rabi_probe_mhz);
    let wt = ang_us(drive.rabi_trigger_mhz);
    let wc = ang_us(drive.rabi_coupling_mhz);

    let mut h = M4::zeros();
    let re = |x: f64| Complex64::new(x, 0.0);
    h[(IDX_B, IDX_B)] = re(-(dp - dt));
    h[(IDX_C, IDX_C)] = re(-(dp - dc));
    h[(IDX_E, IDX_E)] = re(-dp);
    h[(IDX_E, IDX_A)] = re(-wp / 2.0);
    h[(IDX_A, IDX_E)] = re(-wp / 2.0);
    h[(IDX_E, IDX_B)] = re(-wt / 2.0);
    h[(IDX_B, IDX_E)] = re(-wt / 2.0);
    h[(IDX_E, IDX_C)] = re(-wc / 2.0);
    h[(IDX_C, IDX_E)] = re(-wc / 2.0);

    let mut ops = Vec::with_capacity(13);
    let gamma_e = ang_us(model.gamma_excited_mhz);
    for (g, br) in [(IDX_A, model.branching[0]), (IDX_B, model.branching[1]), (IDX_C, model.branching[2])]
    {
        if br > 0.0 {
            let mut l = M4::zeros();
            l[(g, IDX_E)] = re((gamma_e * br).sqrt());
            ops.push(l);
        }
    }
    // Pure dephasing: sqrt(2 kappa) |s><s| damps coherences of |s| at kappa.
    let mut push_dephasing = |state: usize, kappa_mhz: f64| {
        let k = ang_us(kappa_mhz);
        if k > 0.0 {
            let mut l = M4::zeros();
            l[(state, state)] = re((2.0 * k).sqrt());
            ops.push(l);
        }
    };
    push_dephasing(IDX_E, model.excited_dephasing_mhz);
    push_dephasing(IDX_A, model.ground_dephasing_mhz[0]);
    push_dephasing(IDX_B, model.ground_dephasing_mhz[1]);
    push_dephasing(IDX_C, model.ground_dephasing_mhz[2]);
    // Uniform ground mixing: population exchange between every ordered
    // ground pair at the transit rate.
    let gm = ang_us(model.ground_mixing_mhz);
    if gm > 0.0 {
        for i in [IDX_A, IDX_B, IDX_C] {
            for j in [IDX_A, IDX_B, IDX_C] {
                if i != j {
                    let mut l = M4::zeros();
                    l[(i, j)] = re(gm.sqrt());
                    ops.push(l);
                }
            }
        }
    }
    SubsystemGenerator { hamiltonian: h, collapse_ops: ops }
}

/// 16x16 matrix acting on the column-major vectorized density matrix.
pub struct Liouvillian {
    pub matrix: DMatrix<Complex64>,
}

/// Assemble the Liouvillian: L = -i (I (x) H - H^T (x) I) + sum_k D_k with
/// D_k = conj(L_k) (x) L_k - (I (x) L_k^+ L_k + (L_k^+ L_k)^T (x) I) / 2.
pub fn build_liouvillian(gen: &SubsystemGenerator) -> Liouvillian {
    let h = DMatrix::from_fn(DIM, DIM, |i, j| gen.hamiltonian[(i, j)]);
    let eye = DMatrix::<Complex64>::identity(DIM, DIM);
    let i = Complex64::new(0.0, 1.0);
    let mut l = (eye.kronecker(&h) - h.transpose().kronecker(&eye)) * (-i);
    for op in &gen.collapse_ops {
        let ld = DMatrix::from_fn(DIM, DIM, |r, c| op[(r, c)]);
        let ldag_l = ld.adjoint() * &ld;
        l += ld.map(|z| z.conj()).kronecker(&ld);
        l -= (eye.kronecker(&ldag_l) + ldag_l.transpose().kronecker(&eye)) * Complex64::from(0.5);
    }
    Liouvillian { matrix: l }
}

/// Steady-state density matrix of one subsystem. Construction validates
/// Hermiticity (1e-12), unit trace (1e-10) and positivity (eigenvalues
/// >= -1e-9).
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    rho: M4,
}

impl DensityMatrix {
    pub fn from_matrix(rho: M4) -> Result<Self> {
        let herm_defect = (rho - rho.adjoint()).norm();
        if herm_defect > 1e-12 {
            return Err(Error::SteadyStateSolve(format!(
                "Hermiticity defect {herm_defect:e} exceeds 1e-12"
            )));
        }
        let trace = rho.trace();
        if (trace.re - 1.0).abs() > 1e-10 || trace.im.abs() > 1e-10 {
            return Err(Error::SteadyStateSolve(format!("trace {trace} not 1 within 1e-10")));
        }
        let min_eig = min_eigenvalue(&rho);
        if min_eig < -1e-9 {
            return Err(Error::SteadyStateSolve(format!(
                "negative eigenvalue {min_eig:e} below -1e-9"
            )));
        }
        Ok(Self { rho })
    }

    pub fn matrix(&self) -> &M4 {
        &self.rho
    }

    pub fn population(&self, state: usize) -> f64 {
        self.rho[(state, state)].re
    }

    pub fn populations_abce(&self) -> [f64; 4] {
        [self.population(IDX_A), self.population(IDX_B), self.population(IDX_C), self.population(IDX_E)]
    }

    /// Optical coherence <e| rho |g> for the probe (g = a) or trigger
    /// (g = b) leg.
    pub fn optical_coherence(&self, field: FieldRole) -> Result<Complex64> {
        match field {
            FieldRole::Probe => Ok(self.rho[(IDX_E, IDX_A)]),
            FieldRole::Trigger => Ok(self.rho[(IDX_E, IDX_B)]),
            FieldRole::Coupling => Err(Error::InvalidDrives(
                "susceptibility extraction is defined for the probe or trigger field".into(),
            )),
        }
    }

    pub fn min_eigenvalue(&self) -> f64 {
        min_eigenvalue(&self.rho)
    }
}

fn min_eigenvalue(rho: &M4) -> f64 {
    // Hermitize before the symmetric eigensolve to stay in the
    // self-adjoint class despite rounding.
    let herm = (rho + rho.adjoint()) * Complex64::from(0.5);
    herm.symmetric_eigen().eigenvalues.min()
}

/// Solve L rho = 0 with unit trace by replacing the first row of the
/// linear system with the trace condition. Validates the result and
/// checks the residual against the 1e-9 * ||L|| bound.
pub fn steady_state(liouvillian: &Liouvillian) -> Result<DensityMatrix> {
    let l = &liouvillian.matrix;
    let n = DIM * DIM;
    let mut a = l.clone();
    let mut b = DVector::<Complex64>::zeros(n);
    for col in 0..n {
        a[(0, col)] = Complex64::ZERO;
    }
    for k in 0..DIM {
        a[(0, k * DIM + k)] = Complex64::ONE;
    }
    b[0] = Complex64::ONE;

    let solution = a
        .lu()
        .solve(&b)
        .ok_or_else(|| Error::SteadyStateSolve("trace-constrained system is singular".into()))?;

    let mut rho = M4::zeros();
    for j in 0..DIM {
        for i in 0..DIM {
            rho[(i, j)] = solution[j * DIM + i];
        }
    }
    // The exact steady state is Hermitian; project onto that class.
    rho = (rho + rho.adjoint()) * Complex64::from(0.5);

    // Residual check against the full (unmodified) Liouvillian.
    let vec_rho = DVector::from_fn(n, |k, _| rho[(k % DIM, k / DIM)]);
    let residual = (l * &vec_rho).norm();
    let scale = l.norm();
    if residual > 1e-9 * scale {
        let kernel_dim = kernel_dimension(l);
        if kernel_dim > 1 {
            return Err(Error::AmbiguousSteadyState { kernel_dim });
        }
        return Err(Error::SteadyStateSolve(format!(
            "residual {residual:e} exceeds 1e-9 * ||L|| = {:e}",
            1e-9 * scale
        )));
    }
    DensityMatrix::from_matrix(rho)
}

/// Number of singular values below 1e-8 of the spectral scale.
pub fn kernel_dimension(l: &DMatrix<Complex64>) -> usize {
    let sv = l.clone().svd(false, false).singular_values;
    let scale = sv.max();
    sv.iter().filter(|s| **s <= 1e-8 * scale).count()
}

/// Right-hand side d rho / dt evaluated directly from H and the collapse
/// operators (independent of the assembled 16x16 matrix).
pub fn rhs_direct(gen: &SubsystemGenerator, rho: &M4) -> M4 {
    let i = Complex64::new(0.0, 1.0);
    let mut drho = (gen.hamiltonian * rho - rho * gen.hamiltonian) * (-i);
    for l in &gen.collapse_ops {
        let ldag = l.adjoint();
        let ldag_l = ldag * l;
        drho += l * rho * ldag - (ldag_l * rho + rho * ldag_l) * Complex64::from(0.5);
    }
    drho
}

/// Fixed-step RK4 integration of d rho / dt, used as the cross-method
/// check against the linear solve.
pub fn evolve_rk4(gen: &SubsystemGenerator, rho0: &M4, dt_us: f64, steps: usize) -> M4 {
    let mut rho = *rho0;
    let half = Complex64::from(dt_us / 2.0);
    let full = Complex64::from(dt_us);
    let sixth = Complex64::from(dt_us / 6.0);
    let two = Complex64::from(2.0);
    for _ in 0..steps {
        let k1 = rhs_direct(gen, &rho);
        let k2 = rhs_direct(gen, &(rho + k1 * half));
        let k3 = rhs_direct(gen, &(rho + k2 * half));
        let k4 = rhs_direct(gen, &(rho + k3 * full));
        rho += (k1 + k2 * two + k3 * two + k4) * sixth;
    }
    rho
}

/// Susceptibility of a weak field from the steady-state coherence:
/// chi = 2 N_w mu_leg^2 <e|rho|g> / (eps0 hbar Omega_eff), with N_w the
/// subsystem's share of the density. The sign is fixed by the rotating
/// frame of [`build_generator`] and gives Im chi >= 0 in absorptive
/// regimes.
pub fn chi_from_coherence(
    rho: &DensityMatrix,
    field: &crate::model::FieldDrive,
    params: &TripodParams,
    subsystem: usize,
    subsystem_weight: f64,
) -> Result<Complex64> {
    let omega_eff_mhz = effective_rabi(field, &params.coeffs, subsystem)?;
    if omega_eff_mhz <= 0.0 {
        return Err(Error::ZeroField(match field.role {
            FieldRole::Probe => "probe",
            FieldRole::Trigger => "trigger",
            FieldRole::Coupling => "coupling",
        }));
    }
    let idx = crate::model::subsystem_index(subsystem)?;
    let coherence = rho.optical_coherence(field.role)?;
    let mu = params.coeffs.for_role(field.role)[idx] * params.dipole_cm;
    let n_w = subsystem_weight * params.density_per_m3();
    Ok(coherence * Complex64::from(2.0 * n_w * mu * mu / (EPSILON_0 * HBAR * to_angular(omega_eff_mhz))))
}

/// Map the two subsystem steady states onto the joint [`Populations`].
pub fn oracle_populations(
    rho1: &DensityMatrix,
    rho2: &DensityMatrix,
    weights: [f64; 2],
) -> Populations {
    Populations {
        a: [weights[0] * rho1.population(IDX_A), weights[1] * rho2.population(IDX_A)],
        b: [weights[0] * rho1.population(IDX_B), weights[1] * rho2.population(IDX_B)],
        e: [weights[0] * rho1.population(IDX_E), weights[1] * rho2.population(IDX_E)],
    }
}

/// Solve both subsystems of a scenario and return their steady states.
pub fn solve_scenario(
    params: &TripodParams,
    drives: &Drives,
    opts: &DecayModelOptions,
) -> Result<[DensityMatrix; 2]> {
    let base = DecayModel::from_rates(&params.decay, opts)?;
    let mut out = Vec::with_capacity(2);
    for subsystem in [1usize, 2] {
        let idx = subsystem - 1;
        let coeffs = [
            params.coeffs.probe[idx],
            params.coeffs.trigger[idx],
            params.coeffs.coupling[idx],
        ];
        let model = base.with_branching(opts, coeffs);
        let drive = SubsystemDrive::from_scenario(params, drives, subsystem)?;
        let gen = build_generator(&drive, &model);
        let liou = build_liouvillian(&gen);
        out.push(steady_state(&liou)?);
    }
    Ok([out.remove(0), out.remove(0)])
}

/// Joint populations of a scenario from the oracle steady states.
pub fn scenario_populations(
    params: &TripodParams,
    drives: &Drives,
    opts: &DecayModelOptions,
    weights: [f64; 2],
) -> Result<Populations> {
    let [rho1, rho2] = solve_scenario(params, drives, opts)?;
    Ok(oracle_populations(&rho1, &rho2, weights))
}

/// One grid point of the analytic-vs-oracle comparison.
#[derive(Debug, Clone, Copy)]
pub struct EquivalencePoint {
    pub axis_mhz: f64,
    pub chi_p_analytic: Complex64,
    pub chi_p_oracle: Complex64,
    pub chi_t_analytic: Complex64,
    pub chi_t_oracle: Complex64,
    pub rel_err_p: f64,
    pub rel_err_t: f64,
}

/// Compare Eq.-level susceptibilities against the oracle over a probe
/// detuning grid. The analytic side is fed the oracle's own populations
/// point by point; both routes share the subsystem weights.
pub fn equivalence_scan(
    params: &TripodParams,
    drives: &Drives,
    opts: &DecayModelOptions,
    grid_mhz: &[f64],
    weights: [f64; 2],
) -> Result<Vec<EquivalencePoint>> {
    let mut out = Vec::with_capacity(grid_mhz.len());
    for &dp in grid_mhz {
        let d = drives.with_detuning(FieldRole::Probe, dp);
        let [rho1, rho2] = solve_scenario(params, &d, opts)?;
        let mut fed = *params;
        fed.populations = oracle_populations(&rho1, &rho2, weights);
        let record = crate::susceptibility::chi_total(&fed, &d)?;
        let chi_p_oracle = chi_from_coherence(&rho1, &d.probe, params, 1, weights[0])?
            + chi_from_coherence(&rho2, &d.probe, params, 2, weights[1])?;
        let chi_t_oracle = chi_from_coherence(&rho1, &d.trigger, params, 1, weights[0])?
            + chi_from_coherence(&rho2, &d.trigger, params, 2, weights[1])?;
        out.push(EquivalencePoint {
            axis_mhz: dp,
            chi_p_analytic: record.chi_p,
            chi_p_oracle,
            chi_t_analytic: record.chi_t,
            chi_t_oracle,
            rel_err_p: (record.chi_p - chi_p_oracle).norm() / chi_p_oracle.norm(),
            rel_err_t: (record.chi_t - chi_t_oracle).norm() / chi_t_oracle.norm(),
        });
    }
    Ok(out)
}

/// Maximum relative error over an equivalence scan, probe and trigger.
pub fn max_equivalence_error(points: &[EquivalencePoint]) -> (f64, f64) {
    let max_p = points.iter().map(|p| p.rel_err_p).fold(0.0, f64::max);
    let max_t = points.iter().map(|p| p.rel_err_t).fold(0.0, f64::max);
    (max_p, max_t)
}
