//! Operators of the dot–cavity system.
//!
//! Dot levels keep the labels used throughout this crate:
//!
//! * `|1⟩`: ground state (logical one),
//! * `|0⟩`: lowest excited state, optically dark (logical zero),
//! * `|2⟩`: auxiliary level, dipole-coupled to `|1⟩` through the cavity.
//!
//! Slots `0..dot_count` are dots (dimension 3); the final slot is the
//! cavity mode truncated at `n_max` photons. Frequencies and rates are in
//! the same unit as `g`, and time in units of `1/g`.

use std::fmt;

use log::warn;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{embed, CMatrix, DenseOperator, SpaceDescriptor};

pub const DOT_DIM: usize = 3;

/// Minimum `|Δω_A − Δω_B| / g` for the two dots to count as spectrally
/// separated.
pub const MIN_SEPARATION_RATIO: f64 = 10.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub g: f64,
    /// Per-dot resonance offsets; dot `d` is resonant when the applied
    /// detuning equals `delta_omega[d]`.
    pub delta_omega: Vec<f64>,
    pub n_max: usize,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self { g: 1.0, delta_omega: vec![20.0, 0.0], n_max: 2 }
    }
}

impl ModelParams {
    pub fn new(g: f64, delta_omega: Vec<f64>, n_max: usize) -> Result<Self> {
        let p = Self { g, delta_omega, n_max };
        p.validate()?;
        Ok(p)
    }

    /// Dot A offset by `delta_omega`, dot B at zero offset.
    pub fn two_dot(g: f64, delta_omega: f64, n_max: usize) -> Result<Self> {
        Self::new(g, vec![delta_omega, 0.0], n_max)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.g > 0.0 && self.g.is_finite()) {
            return Err(invalid("g", "must be positive and finite"));
        }
        if self.n_max < 1 {
            return Err(invalid("n_max", "must be at least 1"));
        }
        if self.delta_omega.is_empty() {
            return Err(invalid("delta_omega", "at least one dot is required"));
        }
        if self.delta_omega.iter().any(|d| !d.is_finite()) {
            return Err(invalid("delta_omega", "entries must be finite"));
        }
        Ok(())
    }

    pub fn dot_count(&self) -> usize {
        self.delta_omega.len()
    }

    pub fn cavity_slot(&self) -> usize {
        self.dot_count()
    }

    pub fn space(&self) -> SpaceDescriptor {
        let mut dims = vec![DOT_DIM; self.dot_count()];
        dims.push(self.n_max + 1);
        SpaceDescriptor::new(dims).expect("dimensions are at least 2")
    }

    /// Ratio of the two-dot frequency separation to `g`. Logs a warning
    /// when the dots are too close for selective addressing.
    pub fn separation_ratio(&self) -> Option<f64> {
        if self.dot_count() != 2 {
            return None;
        }
        let r = (self.delta_omega[0] - self.delta_omega[1]).abs() / self.g;
        if r < MIN_SEPARATION_RATIO {
            warn!("dot separation |Δω_A − Δω_B|/g = {r:.3} is below {MIN_SEPARATION_RATIO}");
        }
        Some(r)
    }
}

fn invalid(field: &str, reason: &str) -> Error {
    Error::InvalidParam { field: field.into(), reason: reason.into() }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    /// Pure dephasing of the qubit levels, `√Γ |0⟩⟨0|` per dot.
    #[serde(alias = "DephasingQubit")]
    Dephasing,
    /// Spontaneous decay `|2⟩ → |1⟩`, `√Γ |1⟩⟨2|` per dot.
    #[serde(alias = "RadiativeDecay")]
    RadiativeDecay,
    /// Photon loss from the cavity, `√Γ â`.
    #[serde(alias = "CavityLoss")]
    CavityLoss,
    #[serde(alias = "None")]
    None,
}

impl NoiseKind {
    pub const ALL_CHANNELS: [NoiseKind; 3] =
        [NoiseKind::Dephasing, NoiseKind::CavityLoss, NoiseKind::RadiativeDecay];

    pub fn as_str(self) -> &'static str {
        match self {
            NoiseKind::Dephasing => "dephasing",
            NoiseKind::RadiativeDecay => "radiative_decay",
            NoiseKind::CavityLoss => "cavity_loss",
            NoiseKind::None => "none",
        }
    }
}

impl fmt::Display for NoiseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseConfig {
    pub kind: NoiseKind,
    pub gamma: f64,
}

impl NoiseConfig {
    pub fn new(kind: NoiseKind, gamma: f64) -> Result<Self> {
        if !(gamma >= 0.0 && gamma.is_finite()) {
            return Err(invalid("gamma", "must be non-negative and finite"));
        }
        Ok(Self { kind, gamma })
    }

    pub fn noiseless() -> Self {
        Self { kind: NoiseKind::None, gamma: 0.0 }
    }

    pub fn is_noiseless(&self) -> bool {
        self.kind == NoiseKind::None || self.gamma == 0.0
    }
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self::noiseless()
    }
}

/// Laboratory scales used to translate dimensionless results into
/// physical units. Never consulted by the dynamics.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PhysicalCalibration {
    /// Dot–cavity coupling rate in 1/s.
    pub g_physical: f64,
    pub q_factor: f64,
    /// Vacuum field at the sphere surface in V/cm.
    pub vacuum_field: f64,
    pub wavelength_nm: f64,
}

impl Default for PhysicalCalibration {
    fn default() -> Self {
        Self { g_physical: 1e9, q_factor: 1e9, vacuum_field: 150.0, wavelength_nm: 600.0 }
    }
}

impl PhysicalCalibration {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("calibration.g_physical", self.g_physical),
            ("calibration.q_factor", self.q_factor),
            ("calibration.vacuum_field", self.vacuum_field),
            ("calibration.wavelength_nm", self.wavelength_nm),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(name, "must be positive"));
            }
        }
        Ok(())
    }

    /// Seconds per unit of simulation time.
    pub fn time_unit_seconds(&self) -> f64 {
        1.0 / self.g_physical
    }

    /// Converts a rate given in units of g to 1/s.
    pub fn rate_per_second(&self, rate_over_g: f64) -> f64 {
        rate_over_g * self.g_physical
    }

    /// Cavity-loss Γ/g implied by the quality factor. Photon number decays
    /// at `2Γ` in this crate's master-equation convention, and at `ω/Q`
    /// physically.
    pub fn cavity_gamma_over_g(&self) -> f64 {
        let omega = 2.0 * std::f64::consts::PI * 2.997_924_58e8 / (self.wavelength_nm * 1e-9);
        omega / self.q_factor / 2.0 / self.g_physical
    }
}

/// `|i⟩⟨j|` on a single dot.
pub fn dot_projector(i: usize, j: usize) -> Result<CMatrix> {
    for l in [i, j] {
        if l >= DOT_DIM {
            return Err(Error::LevelOutOfRange { level: l, dim: DOT_DIM });
        }
    }
    let mut m = CMatrix::zeros(DOT_DIM, DOT_DIM);
    m[(i, j)] = C64::new(1.0, 0.0);
    Ok(m)
}

/// Truncated photon annihilation operator with `⟨n−1|â|n⟩ = √n`.
pub fn annihilation(n_max: usize) -> Result<CMatrix> {
    if n_max < 1 {
        return Err(invalid("n_max", "must be at least 1"));
    }
    let d = n_max + 1;
    let mut a = CMatrix::zeros(d, d);
    for n in 1..d {
        a[(n - 1, n)] = C64::new((n as f64).sqrt(), 0.0);
    }
    Ok(a)
}

/// Rotating-frame Hamiltonian for an instantaneous detuning `delta`:
///
/// `H = Σ_d ig(|2⟩⟨1|_d â − |1⟩⟨2|_d â†) + Σ_d (delta − Δω_d)|1⟩⟨1|_d`
pub fn build_hamiltonian(params: &ModelParams, delta: f64) -> Result<DenseOperator> {
    params.validate()?;
    let space = params.space();
    let a = embed(&annihilation(params.n_max)?, params.cavity_slot(), &space)?;
    let a_dag = a.adjoint();
    let ig = C64::new(0.0, params.g);

    let mut h = DenseOperator::zeros(&space);
    for (d, &offset) in params.delta_omega.iter().enumerate() {
        let raise = embed(&dot_projector(2, 1)?, d, &space)?;
        let lower = embed(&dot_projector(1, 2)?, d, &space)?;
        let exchange = raise.mul(&a).sub(&lower.mul(&a_dag)).scale(ig);
        let ground = embed(&dot_projector(1, 1)?, d, &space)?;
        h = h.add(&exchange).add(&ground.scale(C64::new(delta - offset, 0.0)));
    }
    Ok(h)
}

/// Jump operators for one noise channel, each already carrying `√Γ`.
pub fn build_lindblads(config: &NoiseConfig, space: &SpaceDescriptor) -> Result<Vec<DenseOperator>> {
    let amp = C64::new(config.gamma.sqrt(), 0.0);
    let dots = space.slots() - 1;
    let cavity = space.slots() - 1;
    let per_dot = |i, j| -> Result<Vec<DenseOperator>> {
        let p = dot_projector(i, j)?;
        (0..dots).map(|d| Ok(embed(&p, d, space)?.scale(amp))).collect()
    };
    match config.kind {
        NoiseKind::Dephasing => per_dot(0, 0),
        NoiseKind::RadiativeDecay => per_dot(1, 2),
        NoiseKind::CavityLoss => {
            let n_max = space.dims()[cavity] - 1;
            Ok(vec![embed(&annihilation(n_max)?, cavity, space)?.scale(amp)])
        }
        NoiseKind::None => Ok(Vec::new()),
    }
}

/// Total excitation number `â†â + Σ_d |2⟩⟨2|_d`.
pub fn excitation_number(params: &ModelParams) -> Result<DenseOperator> {
    let space = params.space();
    let a = annihilation(params.n_max)?;
    let mut n = embed(&(a.adjoint() * &a), params.cavity_slot(), &space)?;
    for d in 0..params.dot_count() {
        n = n.add(&embed(&dot_projector(2, 2)?, d, &space)?);
    }
    Ok(n)
}
