//! The entangling pulse/detuning schedule and the states it acts on.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{dot_projector, ModelParams};
use crate::tensor::{embed, matrix_exponential_hermitian_generator, CVector, DenseOperator, SpaceDescriptor, StateVector};

pub const DOT_A: usize = 0;
pub const DOT_B: usize = 1;

/// Instantaneous rotation on the `|1⟩ ↔ |2⟩` transition of one dot.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PulseSpec {
    pub target_dot: usize,
    pub angle: f64,
}

impl PulseSpec {
    pub fn pi(target_dot: usize) -> Self {
        Self { target_dot, angle: PI }
    }
}

/// Constant detuning held for a fixed time.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub delta: f64,
    pub duration: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub pre_pulses: Vec<PulseSpec>,
    pub segments: Vec<Segment>,
    pub post_pulses: Vec<PulseSpec>,
}

impl Schedule {
    pub fn total_duration(&self) -> f64 {
        self.segments.iter().map(|s| s.duration).sum()
    }

    pub fn validate(&self, params: &ModelParams) -> Result<()> {
        for p in self.pre_pulses.iter().chain(&self.post_pulses) {
            if p.target_dot >= params.dot_count() {
                return Err(Error::InvalidParam {
                    field: "schedule.target_dot".into(),
                    reason: format!("dot {} does not exist", p.target_dot),
                });
            }
            if !p.angle.is_finite() {
                return Err(Error::InvalidParam {
                    field: "schedule.angle".into(),
                    reason: "must be finite".into(),
                });
            }
        }
        for s in &self.segments {
            if !(s.duration >= 0.0 && s.duration.is_finite()) || !s.delta.is_finite() {
                return Err(Error::InvalidParam {
                    field: "schedule.segments".into(),
                    reason: format!("bad segment {s:?}"),
                });
            }
        }
        Ok(())
    }

    /// Analytic phase picked up by `|1⟩` of each dot from the detuning
    /// terms alone, `exp(−i Σ_seg (δ − Δω_d)·τ)`. These are local phases
    /// that the exchange dynamics does not produce; the truth-table check
    /// divides them out.
    pub fn local_ground_phases(&self, params: &ModelParams) -> Vec<C64> {
        params
            .delta_omega
            .iter()
            .map(|&offset| {
                let theta: f64 = self.segments.iter().map(|s| (s.delta - offset) * s.duration).sum();
                C64::from_polar(1.0, -theta)
            })
            .collect()
    }
}

/// π-pulse on dot A, exchange with dot A resonant for a half swap, dot B
/// resonant for a full cycle, dot A resonant again, and a closing π-pulse
/// on dot A.
pub fn canonical_entangling_schedule(params: &ModelParams) -> Result<Schedule> {
    if params.dot_count() != 2 {
        return Err(Error::InvalidParam {
            field: "model.delta_omega".into(),
            reason: format!("the entangling schedule needs 2 dots, got {}", params.dot_count()),
        });
    }
    params.validate()?;
    params.separation_ratio();
    let half = PI / (2.0 * params.g);
    let resonant_a = params.delta_omega[DOT_A];
    let resonant_b = params.delta_omega[DOT_B];
    Ok(Schedule {
        pre_pulses: vec![PulseSpec::pi(DOT_A)],
        segments: vec![
            Segment { delta: resonant_a, duration: half },
            Segment { delta: resonant_b, duration: 2.0 * half },
            Segment { delta: resonant_a, duration: half },
        ],
        post_pulses: vec![PulseSpec::pi(DOT_A)],
    })
}

/// `exp(−i(θ/2)(|2⟩⟨1| + |1⟩⟨2|))` on the target dot. A π-pulse sends
/// `|1⟩ → −i|2⟩` and `|2⟩ → −i|1⟩`.
pub fn pulse_unitary(spec: &PulseSpec, space: &SpaceDescriptor) -> Result<DenseOperator> {
    let x = dot_projector(2, 1)? + dot_projector(1, 2)?;
    let generator = embed(&x, spec.target_dot, space)?;
    matrix_exponential_hermitian_generator(&generator, spec.angle / 2.0)
}

fn check_two_dots(space: &SpaceDescriptor) -> Result<()> {
    if space.slots() != 3 || space.dims()[0] != 3 || space.dims()[1] != 3 {
        return Err(Error::InvalidSpace(format!(
            "expected two dots and a cavity, got dims {:?}",
            space.dims()
        )));
    }
    Ok(())
}

/// `½(|0⟩ + |1⟩) ⊗ (|0⟩ + |1⟩) ⊗ |vac⟩`.
pub fn initial_state(space: &SpaceDescriptor) -> Result<StateVector> {
    check_two_dots(space)?;
    let mut v = CVector::zeros(space.total_dim());
    for a in 0..2 {
        for b in 0..2 {
            v[space.index(&[a, b, 0])?] = C64::new(0.5, 0.0);
        }
    }
    StateVector::new(space.clone(), v)
}

/// Computational basis input `|b_A, b_B, vac⟩`.
pub fn basis_input(b_a: usize, b_b: usize, space: &SpaceDescriptor) -> Result<StateVector> {
    check_two_dots(space)?;
    for b in [b_a, b_b] {
        if b > 1 {
            return Err(Error::LevelOutOfRange { level: b, dim: 2 });
        }
    }
    StateVector::basis(space, &[b_a, b_b, 0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::CMatrix;

    fn space() -> SpaceDescriptor {
        ModelParams::default().space()
    }

    #[test]
    fn canonical_schedule_shape() {
        let p = ModelParams::default();
        let s = canonical_entangling_schedule(&p).unwrap();
        assert_eq!(s.segments.len(), 3);
        assert_eq!(s.segments[0], Segment { delta: 20.0, duration: PI / 2.0 });
        assert_eq!(s.segments[1], Segment { delta: 0.0, duration: PI });
        assert_eq!(s.segments[2], Segment { delta: 20.0, duration: PI / 2.0 });
        assert!((s.total_duration() - 2.0 * PI).abs() < 1e-15);
        assert_eq!(s.pre_pulses, vec![PulseSpec::pi(DOT_A)]);
        assert_eq!(s.post_pulses, vec![PulseSpec::pi(DOT_A)]);
        assert_eq!(s.segments[1].duration, 2.0 * s.segments[0].duration);
    }

    #[test]
    fn canonical_schedule_scales_with_g() {
        let p = ModelParams::two_dot(2.0, 40.0, 2).unwrap();
        let s = canonical_entangling_schedule(&p).unwrap();
        assert!((s.total_duration() - PI).abs() < 1e-15);
    }

    #[test]
    fn canonical_schedule_requires_two_dots() {
        let p = ModelParams::new(1.0, vec![20.0, 0.0, -20.0], 2).unwrap();
        assert!(canonical_entangling_schedule(&p).is_err());
    }

    #[test]
    fn zero_angle_pulse_is_identity() {
        let u = pulse_unitary(&PulseSpec { target_dot: 0, angle: 0.0 }, &space()).unwrap();
        assert!((u.matrix() - CMatrix::identity(27, 27)).norm() < 1e-14);
    }

    #[test]
    fn pi_pulse_action() {
        let s = space();
        let u = pulse_unitary(&PulseSpec::pi(DOT_A), &s).unwrap();
        assert!((u.matrix().adjoint() * u.matrix() - CMatrix::identity(27, 27)).norm() < 1e-12);

        let dark = StateVector::basis(&s, &[0, 1, 0]).unwrap().apply(&u);
        assert!((dark.amplitude(&[0, 1, 0]).unwrap() - C64::new(1.0, 0.0)).norm() < 1e-12);

        let ground = StateVector::basis(&s, &[1, 0, 0]).unwrap().apply(&u);
        assert!((ground.amplitude(&[2, 0, 0]).unwrap() - C64::new(0.0, -1.0)).norm() < 1e-12);
        let aux = StateVector::basis(&s, &[2, 0, 0]).unwrap().apply(&u);
        assert!((aux.amplitude(&[1, 0, 0]).unwrap() - C64::new(0.0, -1.0)).norm() < 1e-12);
    }

    #[test]
    fn two_pi_pulses_flip_sign_outside_dark_state() {
        let s = SpaceDescriptor::new(vec![3]).unwrap();
        let u = pulse_unitary(&PulseSpec::pi(0), &s).unwrap();
        let uu = u.mul(&u);
        // exp(−iπX) on span{|1⟩,|2⟩} is −1.
        let expected = CMatrix::from_diagonal(&CVector::from_vec(vec![
            C64::new(1.0, 0.0),
            C64::new(-1.0, 0.0),
            C64::new(-1.0, 0.0),
        ]));
        assert!((uu.matrix() - expected).norm() < 1e-12);
    }

    #[test]
    fn pulse_commutes_with_other_slots() {
        let s = space();
        let u = pulse_unitary(&PulseSpec::pi(DOT_A), &s).unwrap();
        let on_b = embed(&(dot_projector(2, 1).unwrap() + dot_projector(0, 2).unwrap()), DOT_B, &s).unwrap();
        let a = crate::model::annihilation(2).unwrap();
        let on_cav = embed(&a, 2, &s).unwrap();
        assert!(u.commutator(&on_b).matrix().norm() < 1e-12);
        assert!(u.commutator(&on_cav).matrix().norm() < 1e-12);
    }

    #[test]
    fn initial_state_amplitudes() {
        let s = space();
        let psi = initial_state(&s).unwrap();
        assert!((psi.norm() - 1.0).abs() < 1e-12);
        assert!((psi.amplitude(&[0, 1, 0]).unwrap() - C64::new(0.5, 0.0)).norm() < 1e-15);
        for a in 0..3 {
            for b in 0..3 {
                assert_eq!(psi.amplitude(&[a, b, 1]).unwrap(), C64::new(0.0, 0.0));
            }
        }
        let wrong = SpaceDescriptor::new(vec![3, 3, 3, 3]).unwrap();
        assert!(initial_state(&wrong).is_err());
    }

    #[test]
    fn basis_inputs_are_orthonormal() {
        let s = space();
        let states: Vec<_> = [(0, 0), (0, 1), (1, 0), (1, 1)]
            .iter()
            .map(|&(a, b)| basis_input(a, b, &s).unwrap())
            .collect();
        for (i, x) in states.iter().enumerate() {
            for (j, y) in states.iter().enumerate() {
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((x.inner(y) - C64::new(expected, 0.0)).norm() < 1e-15);
            }
        }
        assert_eq!(states[3].amplitude(&[1, 1, 0]).unwrap(), C64::new(1.0, 0.0));
        assert!(basis_input(2, 0, &s).is_err());
    }

    #[test]
    fn local_phases_vanish_when_commensurate() {
        for k in [1, 5, 10, 100] {
            let p = ModelParams::two_dot(1.0, 2.0 * k as f64, 2).unwrap();
            let s = canonical_entangling_schedule(&p).unwrap();
            for ph in s.local_ground_phases(&p) {
                assert!((ph - C64::new(1.0, 0.0)).norm() < 1e-9);
            }
        }
        let p = ModelParams::two_dot(1.0, 21.0, 2).unwrap();
        let s = canonical_entangling_schedule(&p).unwrap();
        for ph in s.local_ground_phases(&p) {
            assert!((ph - C64::new(-1.0, 0.0)).norm() < 1e-9);
        }
    }
}
