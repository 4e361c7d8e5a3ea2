//! Time evolution of the density matrix.
//!
//! The rotating-frame problem is integrated in Hilbert–Schmidt form,
//! dΨ/dt = −iLΨ. The lab-frame problem keeps the explicit time dependence of
//! the drive and is integrated in operator form. Both use fixed-step RK4.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::exceptional::classify;
use crate::model::{
    devectorize, hamiltonian_rwa, rotate_to_lab, vectorize, ComplexMatrix2, DensityMatrix,
    HsVector, LabParams, ModelParams, PHYSICAL_TOL,
};
use crate::spectrum::{eigenvectors_closed_form, EigenPair, Spectrum};
use crate::superop::{build_lindblad, equilibrium_state, lindblad_rhs};

/// Trace deviation that aborts an integration.
pub const TRACE_LIMIT: f64 = 1e-8;
/// Upper bound on the number of saved snapshots (plus the initial state).
pub const MAX_SNAPSHOTS: usize = 1000;

const MINUS_I: Complex64 = Complex64::new(0.0, -1.0);

/// A state that RK4 can combine linearly.
pub trait RkState: Copy {
    /// self + a·x
    fn axpy(&self, a: f64, x: &Self) -> Self;
}

impl RkState for f64 {
    fn axpy(&self, a: f64, x: &Self) -> Self {
        self + a * x
    }
}

impl<const N: usize> RkState for [Complex64; N] {
    fn axpy(&self, a: f64, x: &Self) -> Self {
        std::array::from_fn(|i| self[i] + a * x[i])
    }
}

impl RkState for HsVector {
    fn axpy(&self, a: f64, x: &Self) -> Self {
        HsVector(self.0.axpy(a, &x.0))
    }
}

impl RkState for ComplexMatrix2 {
    fn axpy(&self, a: f64, x: &Self) -> Self {
        *self + x.scale(Complex64::new(a, 0.0))
    }
}

/// One classical fourth-order Runge–Kutta step of ẏ = f(t, y).
pub fn step_rk4<S, F>(derivative: F, t: f64, state: &S, dt: f64) -> S
where
    S: RkState,
    F: Fn(f64, &S) -> S,
{
    let half = 0.5 * dt;
    let k1 = derivative(t, state);
    let k2 = derivative(t + half, &state.axpy(half, &k1));
    let k3 = derivative(t + half, &state.axpy(half, &k2));
    let k4 = derivative(t + dt, &state.axpy(dt, &k3));
    let sum = k1.axpy(2.0, &k2).axpy(2.0, &k3).axpy(1.0, &k4);
    state.axpy(dt / 6.0, &sum)
}

/// Saved snapshots of an integration with per-snapshot diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix>,
    /// |Tr ρ − 1|.
    pub trace_dev: Vec<f64>,
    /// ‖ρ − ρ†‖_max.
    pub herm_dev: Vec<f64>,
    /// ‖ρ − ρ_eq‖_max; NaN when the equilibrium is not unique.
    pub dist_eq: Vec<f64>,
}

impl Trajectory {
    fn with_capacity(n: usize) -> Self {
        Self {
            times: Vec::with_capacity(n),
            states: Vec::with_capacity(n),
            trace_dev: Vec::with_capacity(n),
            herm_dev: Vec::with_capacity(n),
            dist_eq: Vec::with_capacity(n),
        }
    }

    fn push(&mut self, t: f64, rho: DensityMatrix, reference: Option<&DensityMatrix>) {
        self.times.push(t);
        self.trace_dev.push(rho.trace_deviation());
        self.herm_dev.push(rho.hermiticity_defect());
        self.dist_eq
            .push(reference.map_or(f64::NAN, |eq| rho.max_abs_diff(eq)));
        self.states.push(rho);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_state(&self) -> Option<&DensityMatrix> {
        self.states.last()
    }

    pub fn final_dist_eq(&self) -> Option<f64> {
        self.dist_eq.last().copied()
    }

    pub fn max_trace_dev(&self) -> f64 {
        self.trace_dev.iter().copied().fold(0.0, f64::max)
    }

    pub fn max_herm_dev(&self) -> f64 {
        self.herm_dev.iter().copied().fold(0.0, f64::max)
    }
}

/// Step count, effective step and snapshot stride for an integration to
/// `t_max`. The step is adjusted so that the grid ends exactly at `t_max`.
struct Grid {
    steps: usize,
    dt: f64,
    stride: usize,
}

impl Grid {
    fn new(t_max: f64, dt: f64) -> Result<Self> {
        if !(t_max.is_finite() && dt.is_finite() && dt > 0.0 && dt <= t_max) {
            return Err(Error::InvalidParameter(format!(
                "need 0 < dt <= t_max, got dt = {dt}, t_max = {t_max}"
            )));
        }
        let steps = ((t_max / dt).round() as usize).max(1);
        Ok(Self {
            steps,
            dt: t_max / steps as f64,
            stride: steps.div_ceil(MAX_SNAPSHOTS),
        })
    }

    fn time(&self, k: usize) -> f64 {
        k as f64 * self.dt
    }

    fn is_saved(&self, k: usize) -> bool {
        k.is_multiple_of(self.stride) || k == self.steps
    }
}

fn check_initial(rho0: &DensityMatrix) -> Result<()> {
    rho0.validate(PHYSICAL_TOL)
}

fn check_step(rho: &DensityMatrix, time: f64, dt: f64) -> Result<()> {
    let deviation = rho.trace_deviation();
    if deviation.is_finite() && rho.as_matrix().is_finite() && deviation <= TRACE_LIMIT {
        return Ok(());
    }
    // The RK4 stability interval scales like 1/‖L‖, so a few halvings suffice.
    let suggested_dt = if deviation.is_finite() && deviation > 0.0 {
        (0.5 * dt * (TRACE_LIMIT / deviation).powf(0.25)).min(0.5 * dt)
    } else {
        0.125 * dt
    };
    Err(Error::StepSize {
        time,
        deviation,
        limit: TRACE_LIMIT,
        suggested_dt,
    })
}

/// Integrates dΨ/dt = −iLΨ from `rho0`.
pub fn evolve_rotating(
    params: &ModelParams,
    rho0: &DensityMatrix,
    t_max: f64,
    dt: f64,
) -> Result<Trajectory> {
    check_initial(rho0)?;
    let grid = Grid::new(t_max, dt)?;
    let l = build_lindblad(params);
    let eq = equilibrium_state(params).ok();
    let rhs = |_t: f64, psi: &HsVector| l.apply(psi).scale(MINUS_I);

    let mut traj = Trajectory::with_capacity(grid.steps / grid.stride + 2);
    let mut psi = vectorize(rho0);
    traj.push(0.0, *rho0, eq.as_ref());
    for k in 1..=grid.steps {
        psi = step_rk4(rhs, grid.time(k - 1), &psi, grid.dt);
        let rho = devectorize(&psi);
        check_step(&rho, grid.time(k), grid.dt)?;
        if grid.is_saved(k) {
            traj.push(grid.time(k), rho, eq.as_ref());
        }
    }
    Ok(traj)
}

/// Integrates the lab-frame Lindblad equation with the time-dependent drive.
/// Distances are measured to the rotated equilibrium U(t) ρ_eq U(t)†.
pub fn evolve_lab(
    params: &LabParams,
    rho0: &DensityMatrix,
    t_max: f64,
    dt: f64,
) -> Result<Trajectory> {
    check_initial(rho0)?;
    let grid = Grid::new(t_max, dt)?;
    let eq = equilibrium_state(&params.rotating()).ok();
    let gamma = params.gamma;
    let rhs = |t: f64, m: &ComplexMatrix2| {
        lindblad_rhs(
            &hamiltonian_rwa(params, t),
            gamma,
            &DensityMatrix::from_matrix(m),
        )
    };
    let reference = |t: f64| eq.map(|eq| rotate_to_lab(&eq, params.omega, t));

    let mut traj = Trajectory::with_capacity(grid.steps / grid.stride + 2);
    let mut m = rho0.as_matrix();
    traj.push(0.0, *rho0, reference(0.0).as_ref());
    for k in 1..=grid.steps {
        m = step_rk4(rhs, grid.time(k - 1), &m, grid.dt);
        let rho = DensityMatrix::from_matrix(&m);
        let t = grid.time(k);
        check_step(&rho, t, grid.dt)?;
        if grid.is_saved(k) {
            traj.push(t, rho, reference(t).as_ref());
        }
    }
    Ok(traj)
}

/// max over saved times of ‖ρ_lab(t) − U(t) ρ̃(t) U(t)†‖_max, where ρ̃ evolves in
/// the rotating frame with δ = Δ − ω.
pub fn verify_frame_equivalence(
    params: &LabParams,
    rho0: &DensityMatrix,
    t_max: f64,
    dt: f64,
) -> Result<f64> {
    let lab = evolve_lab(params, rho0, t_max, dt)?;
    let rotating = evolve_rotating(&params.rotating(), rho0, t_max, dt)?;
    let worst = lab
        .times
        .iter()
        .zip(&lab.states)
        .zip(&rotating.states)
        .map(|((&t, rho), rho_tilde)| rho.max_abs_diff(&rotate_to_lab(rho_tilde, params.omega, t)))
        .fold(0.0, f64::max);
    Ok(worst)
}

/// Ψ(t) = Σν e^{−izν t} (Φ^L_ν·Ψ(0)) Φ^R_ν.
///
/// Refused at exceptional points and wherever an eigenvector pair cannot be
/// normalized; the RK4 path covers those parameters.
pub fn spectral_evolve(
    params: &ModelParams,
    rho0: &DensityMatrix,
    t: f64,
) -> Result<DensityMatrix> {
    if params.delta != 0.0 {
        let point = classify(params)?;
        if point.region.is_exceptional() {
            return Err(Error::NearDegenerate {
                nu: 2,
                overlap: 0.0,
            });
        }
    }
    let spectrum = Spectrum::compute(params);
    let pairs: Vec<EigenPair> = spectrum
        .pairs
        .iter()
        .enumerate()
        .map(|(nu, pair)| pair.ok_or_else(|| missing_pair(params, &spectrum, nu)))
        .collect::<Result<_>>()?;

    let psi0 = vectorize(rho0);
    let psi = pairs.iter().fold(HsVector::zero(), |acc, pair| {
        let weight = (MINUS_I * pair.eigenvalue * t).exp() * pair.left.dot(&psi0);
        acc + pair.right.scale(weight)
    });
    Ok(devectorize(&psi))
}

fn missing_pair(params: &ModelParams, spectrum: &Spectrum, nu: usize) -> Error {
    if nu == 0 {
        if equilibrium_state(params).is_err() {
            return Error::DegenerateParameters;
        }
        return Error::NearDegenerate { nu, overlap: 0.0 };
    }
    match eigenvectors_closed_form(params, nu, spectrum.eigenvalues[nu]) {
        Err(e) => e,
        Ok(_) => Error::NearDegenerate { nu, overlap: 0.0 },
    }
}
