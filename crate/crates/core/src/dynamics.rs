//! Time evolution over piecewise-constant schedules.
//!
//! Noiseless runs propagate the state vector with exact segment
//! propagators. Noisy runs integrate
//!
//! `dρ/dt = −i[H, ρ] + Σ_k (2 L_k ρ L_k† − L_k† L_k ρ − ρ L_k† L_k)`
//!
//! with fixed-step classical RK4. The jump operators carry `√Γ`, so a
//! single decay channel empties its source level at rate `2Γ`.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{build_hamiltonian, build_lindblads, ModelParams, NoiseConfig};
use crate::protocol::{canonical_entangling_schedule, initial_state, pulse_unitary, PulseSpec, Schedule};
use crate::tensor::{
    matrix_exponential_hermitian_generator, CMatrix, DenseOperator, DensityMatrix, SpaceDescriptor,
    StateVector,
};

/// Sub-steps per segment at which the noiseless path samples diagnostics.
const UNITARY_SAMPLES: usize = 32;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegratorConfig {
    pub dt: f64,
    pub positivity_tolerance: f64,
    pub trace_tolerance: f64,
    /// Largest acceptable population of the top retained Fock level.
    pub fock_tolerance: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self { dt: 1e-3, positivity_tolerance: 1e-7, trace_tolerance: 1e-8, fock_tolerance: 1e-6 }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        for (field, v) in [
            ("integrator.dt", self.dt),
            ("integrator.positivity_tolerance", self.positivity_tolerance),
            ("integrator.trace_tolerance", self.trace_tolerance),
            ("integrator.fock_tolerance", self.fock_tolerance),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParam { field: field.into(), reason: "must be positive".into() });
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub max_trace_drift: f64,
    pub min_eigenvalue: f64,
    pub max_top_fock_population: f64,
    pub steps_taken: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub enum FinalState {
    Pure(StateVector),
    Mixed(DensityMatrix),
}

impl FinalState {
    pub fn density(&self) -> DensityMatrix {
        match self {
            FinalState::Pure(psi) => psi.to_density(),
            FinalState::Mixed(rho) => rho.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvolutionResult {
    pub final_state: FinalState,
    pub diagnostics: Diagnostics,
    /// Tolerances that were exceeded. Empty for a healthy run.
    pub breaches: Vec<String>,
}

impl EvolutionResult {
    pub fn failed(&self) -> bool {
        !self.breaches.is_empty()
    }
}

/// Where in the schedule an observed state sits.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stage {
    AfterPrePulses,
    Segment(usize),
    AfterPostPulses,
}

/// Snapshot handed to observers of [`evolve_master_observed`].
pub struct Checkpoint<'a> {
    pub stage: Stage,
    pub time: f64,
    pub rho: &'a CMatrix,
}

/// Nonzero entries of an operator, used by the RK4 kernel.
#[derive(Clone, Debug)]
struct Entries(Vec<(usize, usize, C64)>);

impl Entries {
    fn from_matrix(m: &CMatrix) -> Self {
        let mut v = Vec::new();
        for j in 0..m.ncols() {
            for i in 0..m.nrows() {
                let z = m[(i, j)];
                if z != C64::new(0.0, 0.0) {
                    v.push((i, j, z));
                }
            }
        }
        Self(v)
    }

    /// `out += s · A · x`
    fn left_mul_into(&self, s: C64, x: &CMatrix, out: &mut CMatrix) {
        let n = x.ncols();
        let xs = x.as_slice();
        let nrows = x.nrows();
        let os = out.as_mut_slice();
        for &(i, k, v) in &self.0 {
            let sv = s * v;
            for j in 0..n {
                os[j * nrows + i] += sv * xs[j * nrows + k];
            }
        }
    }

    /// `out += s · x · A†`
    fn right_mul_adjoint_into(&self, s: C64, x: &CMatrix, out: &mut CMatrix) {
        let nrows = x.nrows();
        let xs = x.as_slice();
        let os = out.as_mut_slice();
        // (x A†)(:, j) = Σ_k x(:, k) conj(A(j, k))
        for &(j, k, v) in &self.0 {
            let sv = s * v.conj();
            let (src, dst) = (k * nrows, j * nrows);
            for r in 0..nrows {
                os[dst + r] += sv * xs[src + r];
            }
        }
    }
}

/// Right-hand side of the master equation for a fixed Hamiltonian and set
/// of jump operators.
#[derive(Clone, Debug)]
pub struct MasterEquation {
    dim: usize,
    /// `H − i Σ L†L`
    effective: Entries,
    jumps: Vec<Entries>,
}

impl MasterEquation {
    pub fn new(hamiltonian: &DenseOperator, jumps: &[DenseOperator]) -> Result<Self> {
        if !hamiltonian.is_hermitian(crate::tensor::HERMITIAN_TOL) {
            return Err(Error::NotHermitian(crate::tensor::hermiticity_defect(hamiltonian.matrix())));
        }
        let dim = hamiltonian.space().total_dim();
        let mut effective = hamiltonian.matrix().clone();
        for l in jumps {
            if l.space() != hamiltonian.space() {
                return Err(Error::DimensionMismatch { expected: dim, found: l.space().total_dim() });
            }
            effective -= (l.matrix().adjoint() * l.matrix()) * C64::new(0.0, 1.0);
        }
        Ok(Self {
            dim,
            effective: Entries::from_matrix(&effective),
            jumps: jumps
                .iter()
                .map(|l| Entries::from_matrix(l.matrix()))
                .filter(|e| !e.0.is_empty())
                .collect(),
        })
    }

    /// `dρ/dt` for a Hermitian `ρ`.
    pub fn derivative(&self, rho: &CMatrix) -> CMatrix {
        let n = self.dim;
        let mut a = CMatrix::zeros(n, n);
        self.effective.left_mul_into(C64::new(0.0, -1.0), rho, &mut a);
        // −i H_eff ρ + (−i H_eff ρ)† = −i(H_eff ρ − ρ H_eff†)
        let mut out = &a + a.adjoint();
        let mut tmp = CMatrix::zeros(n, n);
        for l in &self.jumps {
            tmp.fill(C64::new(0.0, 0.0));
            l.left_mul_into(C64::new(1.0, 0.0), rho, &mut tmp);
            l.right_mul_adjoint_into(C64::new(2.0, 0.0), &tmp, &mut out);
        }
        out
    }

    pub fn rk4_step(&self, rho: &CMatrix, dt: f64) -> CMatrix {
        let h = C64::new(dt, 0.0);
        let half = C64::new(dt / 2.0, 0.0);
        let k1 = self.derivative(rho);
        let k2 = self.derivative(&(rho + &k1 * half));
        let k3 = self.derivative(&(rho + &k2 * half));
        let k4 = self.derivative(&(rho + &k3 * h));
        let mut next = rho + (k1 + (k2 + k3) * C64::new(2.0, 0.0) + k4) * C64::new(dt / 6.0, 0.0);
        symmetrize(&mut next);
        next
    }

    /// Integrates for `duration` in equal steps no longer than `max_dt`,
    /// calling `each_step` after every step with the elapsed time.
    pub fn propagate(
        &self,
        rho: &CMatrix,
        duration: f64,
        max_dt: f64,
        mut each_step: impl FnMut(f64, &CMatrix),
    ) -> (CMatrix, usize) {
        let steps = steps_for(duration, max_dt);
        let mut state = rho.clone();
        if steps == 0 {
            return (state, 0);
        }
        let dt = duration / steps as f64;
        for s in 1..=steps {
            state = self.rk4_step(&state, dt);
            each_step(s as f64 * dt, &state);
        }
        (state, steps)
    }
}

fn steps_for(duration: f64, max_dt: f64) -> usize {
    if duration <= 0.0 {
        0
    } else {
        (duration / max_dt).ceil() as usize
    }
}

fn symmetrize(m: &mut CMatrix) {
    let adj = m.adjoint();
    *m += adj;
    m.unscale_mut(2.0);
}

fn top_fock_population(rho: &CMatrix, space: &SpaceDescriptor) -> f64 {
    let cav = space.slots() - 1;
    let top = space.dims()[cav] - 1;
    // The cavity is the fastest-varying slot.
    let d = space.dims()[cav];
    (0..space.total_dim()).filter(|i| i % d == top).map(|i| rho[(i, i)].re).sum()
}

fn check_space(params: &ModelParams, space: &SpaceDescriptor) -> Result<()> {
    if *space != params.space() {
        return Err(Error::InvalidSpace(format!(
            "state dims {:?} do not match model dims {:?}",
            space.dims(),
            params.space().dims()
        )));
    }
    Ok(())
}

fn pulse_product(pulses: &[PulseSpec], space: &SpaceDescriptor) -> Result<DenseOperator> {
    let mut u = DenseOperator::identity(space);
    for p in pulses {
        u = pulse_unitary(p, space)?.mul(&u);
    }
    Ok(u)
}

/// Exact noiseless propagation.
pub fn evolve_unitary(state: &StateVector, schedule: &Schedule, params: &ModelParams) -> Result<EvolutionResult> {
    check_space(params, state.space())?;
    schedule.validate(params)?;
    let space = state.space().clone();
    let mut psi = state.apply(&pulse_product(&schedule.pre_pulses, &space)?);
    let mut diag = Diagnostics::default();
    let d = space.dims()[space.slots() - 1];
    let top = |psi: &StateVector| -> f64 {
        psi.amplitudes().iter().enumerate().filter(|(i, _)| i % d == d - 1).map(|(_, z)| z.norm_sqr()).sum()
    };
    for seg in &schedule.segments {
        if seg.duration == 0.0 {
            continue;
        }
        let h = build_hamiltonian(params, seg.delta)?;
        let u = matrix_exponential_hermitian_generator(&h, seg.duration / UNITARY_SAMPLES as f64)?;
        for _ in 0..UNITARY_SAMPLES {
            psi = psi.apply(&u);
            diag.max_top_fock_population = diag.max_top_fock_population.max(top(&psi));
            diag.max_trace_drift = diag.max_trace_drift.max((psi.norm().powi(2) - 1.0).abs());
        }
        diag.steps_taken += UNITARY_SAMPLES;
    }
    psi = psi.apply(&pulse_product(&schedule.post_pulses, &space)?);
    diag.max_trace_drift = diag.max_trace_drift.max((psi.norm().powi(2) - 1.0).abs());
    let mut breaches = Vec::new();
    if (psi.norm() - 1.0).abs() > 1e-10 {
        breaches.push(format!("norm drift {:.3e}", (psi.norm() - 1.0).abs()));
    }
    Ok(EvolutionResult { final_state: FinalState::Pure(psi), diagnostics: diag, breaches })
}

/// RK4 integration of the master equation over a schedule.
pub fn evolve_master(
    rho: &DensityMatrix,
    schedule: &Schedule,
    params: &ModelParams,
    noise: &NoiseConfig,
    cfg: &IntegratorConfig,
) -> Result<EvolutionResult> {
    evolve_master_observed(rho, schedule, params, noise, cfg, |_| {})
}

/// [`evolve_master`] with a callback after the pre-pulses, after every
/// integration step, and after the post-pulses.
pub fn evolve_master_observed(
    rho: &DensityMatrix,
    schedule: &Schedule,
    params: &ModelParams,
    noise: &NoiseConfig,
    cfg: &IntegratorConfig,
    mut observer: impl FnMut(Checkpoint<'_>),
) -> Result<EvolutionResult> {
    cfg.validate()?;
    check_space(params, rho.space())?;
    schedule.validate(params)?;
    let space = rho.space().clone();
    let lindblads = build_lindblads(noise, &space)?;

    let pre = pulse_product(&schedule.pre_pulses, &space)?;
    let mut state = rho.conjugate_by(&pre).matrix().clone();
    observer(Checkpoint { stage: Stage::AfterPrePulses, time: 0.0, rho: &state });

    let mut diag = Diagnostics { min_eigenvalue: f64::INFINITY, ..Default::default() };
    let track = |m: &CMatrix, diag: &mut Diagnostics| {
        diag.max_trace_drift = diag.max_trace_drift.max((m.trace().re - 1.0).abs());
        diag.max_top_fock_population = diag.max_top_fock_population.max(top_fock_population(m, &space));
    };
    track(&state, &mut diag);

    let mut t0 = 0.0;
    for (k, seg) in schedule.segments.iter().enumerate() {
        let eq = MasterEquation::new(&build_hamiltonian(params, seg.delta)?, &lindblads)?;
        let (next, steps) = eq.propagate(&state, seg.duration, cfg.dt, |t, m| {
            track(m, &mut diag);
            observer(Checkpoint { stage: Stage::Segment(k), time: t0 + t, rho: m });
        });
        state = next;
        diag.steps_taken += steps;
        diag.min_eigenvalue = diag.min_eigenvalue.min(crate::tensor::hermitian_eigenvalues(&state)?[0]);
        t0 += seg.duration;
    }

    let post = pulse_product(&schedule.post_pulses, &space)?;
    state = &post.matrix().clone() * &state * post.matrix().adjoint();
    symmetrize(&mut state);
    track(&state, &mut diag);
    diag.min_eigenvalue = diag.min_eigenvalue.min(crate::tensor::hermitian_eigenvalues(&state)?[0]);
    observer(Checkpoint { stage: Stage::AfterPostPulses, time: t0, rho: &state });

    let mut breaches = Vec::new();
    if diag.max_trace_drift > cfg.trace_tolerance {
        breaches.push(format!("trace drift {:.3e} exceeds {:.1e}", diag.max_trace_drift, cfg.trace_tolerance));
    }
    if diag.min_eigenvalue < -cfg.positivity_tolerance {
        breaches.push(format!(
            "min eigenvalue {:.3e} below -{:.1e}",
            diag.min_eigenvalue, cfg.positivity_tolerance
        ));
    }
    if diag.max_top_fock_population > cfg.fock_tolerance {
        breaches.push(format!(
            "top Fock population {:.3e} exceeds {:.1e}",
            diag.max_top_fock_population, cfg.fock_tolerance
        ));
    }
    Ok(EvolutionResult {
        final_state: FinalState::Mixed(DensityMatrix::from_raw(space, state)),
        diagnostics: diag,
        breaches,
    })
}

/// Prepares the product input, runs the canonical schedule and returns
/// the final state. Noiseless configurations take the exact unitary path.
pub fn run_protocol(params: &ModelParams, noise: &NoiseConfig, cfg: &IntegratorConfig) -> Result<EvolutionResult> {
    let schedule = canonical_entangling_schedule(params)?;
    let psi = initial_state(&params.space())?;
    if noise.is_noiseless() {
        evolve_unitary(&psi, &schedule, params)
    } else {
        evolve_master(&psi.to_density(), &schedule, params, noise, cfg)
    }
}
