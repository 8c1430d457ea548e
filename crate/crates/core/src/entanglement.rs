//! Two-qubit reduction of the dot pair, Wootters concurrence and
//! entanglement of formation.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{hermitian_eigh, CMatrix, CVector, DensityMatrix};

/// Eigenvalues of the renormalized qubit state in `[-CLAMP_TOL, 0)` are
/// set to zero; anything more negative is rejected. Matches the default
/// integrator positivity tolerance, since RK4 leaves the null space of an
/// initially pure state slightly negative.
pub const CLAMP_TOL: f64 = 1e-7;

/// Qubit-pair state over `{|00⟩, |01⟩, |10⟩, |11⟩}` (dot A first) with the
/// population lost outside the qubit levels.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoQubitState {
    rho: CMatrix,
    leakage: f64,
}

impl TwoQubitState {
    /// Takes a 4×4 density matrix; renormalizes and clamps as
    /// [`reduce_to_qubits`] does.
    pub fn from_matrix(rho: CMatrix, leakage: f64) -> Result<Self> {
        if rho.nrows() != 4 || rho.ncols() != 4 {
            return Err(Error::DimensionMismatch { expected: 4, found: rho.nrows() });
        }
        let tr = rho.trace().re;
        if tr <= f64::EPSILON {
            return Err(Error::FullLeakage);
        }
        let (vals, vecs) = hermitian_eigh(&rho.unscale(tr))?;
        if vals[0] < -CLAMP_TOL {
            return Err(Error::InvalidState(format!("qubit state eigenvalue {:.3e} is negative", vals[0])));
        }
        let clamped: Vec<f64> = vals.iter().map(|&l| l.max(0.0)).collect();
        let norm: f64 = clamped.iter().sum();
        let d = CVector::from_iterator(4, clamped.iter().map(|&l| C64::new(l / norm, 0.0)));
        let rho = &vecs * CMatrix::from_diagonal(&d) * vecs.adjoint();
        Ok(Self { rho, leakage: leakage.clamp(0.0, 1.0) })
    }

    pub fn pure(amplitudes: [C64; 4]) -> Result<Self> {
        let v = CVector::from_row_slice(&amplitudes);
        Self::from_matrix(&v * v.adjoint(), 0.0)
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.rho
    }

    pub fn leakage(&self) -> f64 {
        self.leakage
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntanglementReport {
    pub concurrence: f64,
    pub eof: f64,
    pub leakage: f64,
}

/// Traces out the cavity, projects both dots onto `{|0⟩, |1⟩}`, and
/// renormalizes. Leakage is the population removed by the projection.
pub fn reduce_to_qubits(rho_full: &DensityMatrix) -> Result<TwoQubitState> {
    let space = rho_full.space();
    if space.slots() != 3 || space.dims()[0] != 3 || space.dims()[1] != 3 {
        return Err(Error::InvalidSpace(format!("expected two dots and a cavity, got {:?}", space.dims())));
    }
    let (_, dots) = rho_full.partial_trace(&[0, 1])?;
    let total = dots.trace().re;
    let qubit_index = |k: usize| 3 * (k / 2) + (k % 2);
    let projected = CMatrix::from_fn(4, 4, |i, j| dots[(qubit_index(i), qubit_index(j))]);
    let kept = projected.trace().re;
    let leakage = 1.0 - kept / total;
    if kept <= total * 1e-12 {
        return Err(Error::FullLeakage);
    }
    TwoQubitState::from_matrix(projected, leakage)
}

/// `(σy⊗σy) ρ* (σy⊗σy)`
fn spin_flip(rho: &CMatrix) -> CMatrix {
    // σy⊗σy is real in this basis: anti-diagonal (−1, 1, 1, −1).
    let signs = [-1.0, 1.0, 1.0, -1.0];
    CMatrix::from_fn(4, 4, |i, j| rho[(3 - i, 3 - j)].conj() * (signs[i] * signs[j]))
}

/// Wootters concurrence `max(0, λ₁ − λ₂ − λ₃ − λ₄)`.
///
/// The `λ_i` are the singular values of `M = √ρ √ρ̃`, since
/// `M M† = √ρ ρ̃ √ρ`. They are read off as the positive eigenvalues of the
/// Hermitian block matrix `[[0, M], [M†, 0]]`, which keeps the absolute
/// error at round-off level instead of the square root of it.
pub fn concurrence(state: &TwoQubitState) -> Result<f64> {
    let (vals, vecs) = hermitian_eigh(state.matrix())?;
    let sqrt_vals = CVector::from_iterator(4, vals.iter().map(|&l| C64::new(l.max(0.0).sqrt(), 0.0)));
    let sqrt_rho = &vecs * CMatrix::from_diagonal(&sqrt_vals) * vecs.adjoint();
    // √ρ̃ = (σy⊗σy) (√ρ)* (σy⊗σy)
    let m = &sqrt_rho * spin_flip(&sqrt_rho);
    let mut block = CMatrix::zeros(8, 8);
    block.view_mut((0, 4), (4, 4)).copy_from(&m);
    block.view_mut((4, 0), (4, 4)).copy_from(&m.adjoint());
    let (mu, _) = hermitian_eigh(&block)?;
    // Ascending; the top four are the singular values.
    let lambda: Vec<f64> = mu[4..].iter().rev().map(|&l| l.max(0.0)).collect();
    Ok((lambda[0] - lambda[1] - lambda[2] - lambda[3]).clamp(0.0, 1.0))
}

/// Binary entropy in bits with `0·log 0 = 0`.
pub fn binary_entropy(x: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        return 0.0;
    }
    -x * x.log2() - (1.0 - x) * (1.0 - x).log2()
}

/// Entanglement of formation as a function of concurrence.
pub fn eof(c: f64) -> f64 {
    let c = c.clamp(0.0, 1.0);
    if c == 0.0 {
        return 0.0;
    }
    if c == 1.0 {
        return 1.0;
    }
    binary_entropy((1.0 + (1.0 - c * c).sqrt()) / 2.0)
}

pub fn report(rho_full: &DensityMatrix) -> Result<EntanglementReport> {
    let q = reduce_to_qubits(rho_full)?;
    let c = concurrence(&q)?;
    Ok(EntanglementReport { concurrence: c, eof: eof(c), leakage: q.leakage() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelParams;
    use crate::tensor::StateVector;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    fn random_qubit_unitary(rng: &mut ChaCha8Rng) -> CMatrix {
        let (a, b, g) = (rng.gen_range(0.0..6.3), rng.gen_range(0.0..6.3), rng.gen_range(0.0..6.3));
        let th: f64 = rng.gen_range(0.0..3.2);
        let (ct, st) = ((th / 2.0).cos(), (th / 2.0).sin());
        CMatrix::from_row_slice(
            2,
            2,
            &[
                C64::from_polar(ct, a),
                -C64::from_polar(st, a + g),
                C64::from_polar(st, a + b),
                C64::from_polar(ct, a + b + g),
            ],
        )
    }

    fn random_state(rng: &mut ChaCha8Rng) -> CMatrix {
        let a = CMatrix::from_fn(4, 4, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        let p = &a * a.adjoint();
        let t = p.trace();
        p / t
    }

    #[test]
    fn product_vacuum_reduces_cleanly() {
        let s = ModelParams::default().space();
        let rho = StateVector::basis(&s, &[0, 0, 0]).unwrap().to_density();
        let q = reduce_to_qubits(&rho).unwrap();
        assert_eq!(q.leakage(), 0.0);
        let mut expected = CMatrix::zeros(4, 4);
        expected[(0, 0)] = c(1.0);
        assert!((q.matrix() - expected).norm() < 1e-12);
    }

    #[test]
    fn full_leakage_is_an_error() {
        let s = ModelParams::default().space();
        let rho = StateVector::basis(&s, &[2, 1, 0]).unwrap().to_density();
        assert!(matches!(reduce_to_qubits(&rho), Err(Error::FullLeakage)));
    }

    #[test]
    fn target_state_reduces_to_pure_qubit_state() {
        let s = ModelParams::default().space();
        let mut v = CVector::zeros(27);
        for (a, b, sign) in [(0, 0, 1.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, -1.0)] {
            v[s.index(&[a, b, 0]).unwrap()] = c(0.5 * sign);
        }
        let rho = StateVector::new(s, v).unwrap().to_density();
        let q = reduce_to_qubits(&rho).unwrap();
        assert!(q.leakage().abs() < 1e-15);
        let expected = CVector::from_vec(vec![c(0.5), c(0.5), c(0.5), c(-0.5)]);
        assert!((q.matrix() - &expected * expected.adjoint()).norm() < 1e-12);
        let r = report(&rho).unwrap();
        assert!((r.concurrence - 1.0).abs() < 1e-10);
        assert!((r.eof - 1.0).abs() < 1e-9);
    }

    #[test]
    fn leakage_is_reported_and_renormalized() {
        let s = ModelParams::default().space();
        let mut v = CVector::zeros(27);
        v[s.index(&[0, 0, 0]).unwrap()] = c(0.8f64.sqrt());
        v[s.index(&[2, 0, 0]).unwrap()] = c(0.2f64.sqrt());
        let q = reduce_to_qubits(&StateVector::new(s, v).unwrap().to_density()).unwrap();
        assert!((q.leakage() - 0.2).abs() < 1e-12);
        assert!((q.matrix().trace() - c(1.0)).norm() < 1e-12);
    }

    #[test]
    fn product_states_have_zero_concurrence() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..50 {
            let ua = random_qubit_unitary(&mut rng);
            let ub = random_qubit_unitary(&mut rng);
            let a = ua.column(0).into_owned();
            let b = ub.column(0).into_owned();
            let v = a.kronecker(&b);
            let q = TwoQubitState::pure([v[0], v[1], v[2], v[3]]).unwrap();
            assert!(concurrence(&q).unwrap() < 1e-7);
        }
    }

    #[test]
    fn target_amplitudes_are_maximally_entangled() {
        let q = TwoQubitState::pure([c(0.5), c(0.5), c(0.5), c(-0.5)]).unwrap();
        assert!((concurrence(&q).unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn werner_state_at_half() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let bell = CVector::from_vec(vec![c(s), c(0.0), c(0.0), c(s)]);
        let p = 0.5;
        let rho = &bell * bell.adjoint() * c(p) + CMatrix::identity(4, 4) * c((1.0 - p) / 4.0);
        let q = TwoQubitState::from_matrix(rho, 0.0).unwrap();
        assert!((concurrence(&q).unwrap() - 0.25).abs() < 1e-9);
    }

    #[test]
    fn eof_values() {
        assert_eq!(eof(0.0), 0.0);
        assert_eq!(eof(1.0), 1.0);
        let oracle = -0.9 * 0.9f64.log2() - 0.1 * 0.1f64.log2();
        assert!((eof(0.6) - oracle).abs() < 1e-14);
        assert!((eof(0.6) - 0.4690).abs() < 1e-4);
        assert_eq!(binary_entropy(0.5), 1.0);
        assert_eq!(binary_entropy(0.0), 0.0);
        assert_eq!(binary_entropy(1.0), 0.0);
    }

    #[test]
    fn eof_is_strictly_increasing() {
        let xs: Vec<f64> = (0..=1000).map(|i| i as f64 / 1000.0).collect();
        for w in xs.windows(2) {
            assert!(eof(w[1]) > eof(w[0]), "{} {}", w[0], w[1]);
        }
    }

    #[test]
    fn concurrence_is_local_unitary_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        for _ in 0..100 {
            let rho = random_state(&mut rng);
            let u = random_qubit_unitary(&mut rng).kronecker(&random_qubit_unitary(&mut rng));
            let a = TwoQubitState::from_matrix(rho.clone(), 0.0).unwrap();
            let b = TwoQubitState::from_matrix(&u * rho * u.adjoint(), 0.0).unwrap();
            assert!((concurrence(&a).unwrap() - concurrence(&b).unwrap()).abs() < 1e-9);
        }
    }

    #[test]
    fn separable_mixtures_have_zero_eof() {
        let mut rng = ChaCha8Rng::seed_from_u64(44);
        for _ in 0..100 {
            let mut rho = CMatrix::zeros(4, 4);
            let k = rng.gen_range(1..6);
            let mut total = 0.0;
            for _ in 0..k {
                let w: f64 = rng.gen_range(0.0..1.0);
                let a = random_qubit_unitary(&mut rng).column(0).into_owned();
                let b = random_qubit_unitary(&mut rng).column(0).into_owned();
                let v = a.kronecker(&b);
                rho += &v * v.adjoint() * c(w);
                total += w;
            }
            let q = TwoQubitState::from_matrix(rho.unscale(total), 0.0).unwrap();
            assert!(eof(concurrence(&q).unwrap()) < 1e-12);
        }
    }

    #[test]
    fn rejects_strongly_negative_input() {
        let rho = CMatrix::from_diagonal(&CVector::from_vec(vec![c(1.0 + 1e-6), c(-1e-6), c(0.0), c(0.0)]));
        assert!(TwoQubitState::from_matrix(rho, 0.0).is_err());
    }
}
