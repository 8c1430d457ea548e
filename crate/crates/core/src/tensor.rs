//! Dense complex linear algebra over small tensor-product Hilbert spaces.
//!
//! Index convention is slot-major: the leftmost slot varies slowest, so for
//! a two-slot space the flat index is `i_a * dim_b + i_b`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Relative tolerance for treating a matrix as Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-10;

/// Ordered subsystem dimensions defining the tensor layout.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SpaceDescriptor {
    dims: Vec<usize>,
}

impl SpaceDescriptor {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::InvalidSpace("no subsystems".into()));
        }
        if let Some(d) = dims.iter().find(|&&d| d < 2) {
            return Err(Error::InvalidSpace(format!("subsystem dimension {d} < 2")));
        }
        Ok(Self { dims })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn slots(&self) -> usize {
        self.dims.len()
    }

    pub fn total_dim(&self) -> usize {
        self.dims.iter().product()
    }

    /// Flat index of a product basis state.
    pub fn index(&self, levels: &[usize]) -> Result<usize> {
        if levels.len() != self.dims.len() {
            return Err(Error::DimensionMismatch {
                expected: self.dims.len(),
                found: levels.len(),
            });
        }
        let mut idx = 0;
        for (&l, &d) in levels.iter().zip(&self.dims) {
            if l >= d {
                return Err(Error::LevelOutOfRange { level: l, dim: d });
            }
            idx = idx * d + l;
        }
        Ok(idx)
    }

    /// Inverse of [`index`](Self::index).
    pub fn levels(&self, mut idx: usize) -> Vec<usize> {
        let mut out = vec![0; self.dims.len()];
        for (slot, &d) in self.dims.iter().enumerate().rev() {
            out[slot] = idx % d;
            idx /= d;
        }
        out
    }

    pub fn basis_vector(&self, levels: &[usize]) -> Result<CVector> {
        let mut v = CVector::zeros(self.total_dim());
        v[self.index(levels)?] = C64::new(1.0, 0.0);
        Ok(v)
    }

    fn check_slot(&self, slot: usize) -> Result<()> {
        if slot >= self.dims.len() {
            Err(Error::SlotOutOfRange { slot, slots: self.dims.len() })
        } else {
            Ok(())
        }
    }
}

/// Square operator on the full space of a [`SpaceDescriptor`].
#[derive(Clone, Debug, PartialEq)]
pub struct DenseOperator {
    space: SpaceDescriptor,
    matrix: CMatrix,
}

impl DenseOperator {
    pub fn new(space: SpaceDescriptor, matrix: CMatrix) -> Result<Self> {
        let n = space.total_dim();
        if matrix.nrows() != n || matrix.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, found: matrix.nrows() });
        }
        Ok(Self { space, matrix })
    }

    pub fn zeros(space: &SpaceDescriptor) -> Self {
        let n = space.total_dim();
        Self { space: space.clone(), matrix: CMatrix::zeros(n, n) }
    }

    pub fn identity(space: &SpaceDescriptor) -> Self {
        let n = space.total_dim();
        Self { space: space.clone(), matrix: CMatrix::identity(n, n) }
    }

    pub fn space(&self) -> &SpaceDescriptor {
        &self.space
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn adjoint(&self) -> Self {
        Self { space: self.space.clone(), matrix: self.matrix.adjoint() }
    }

    pub fn scale(&self, s: C64) -> Self {
        Self { space: self.space.clone(), matrix: &self.matrix * s }
    }

    pub fn mul(&self, other: &Self) -> Self {
        debug_assert_eq!(self.space, other.space);
        Self { space: self.space.clone(), matrix: &self.matrix * &other.matrix }
    }

    pub fn add(&self, other: &Self) -> Self {
        debug_assert_eq!(self.space, other.space);
        Self { space: self.space.clone(), matrix: &self.matrix + &other.matrix }
    }

    pub fn sub(&self, other: &Self) -> Self {
        debug_assert_eq!(self.space, other.space);
        Self { space: self.space.clone(), matrix: &self.matrix - &other.matrix }
    }

    pub fn commutator(&self, other: &Self) -> Self {
        self.mul(other).sub(&other.mul(self))
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        hermiticity_defect(&self.matrix) <= tol * self.matrix.norm().max(1.0)
    }
}

/// Normalized pure state.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    space: SpaceDescriptor,
    amplitudes: CVector,
}

impl StateVector {
    /// Builds a state, normalizing the amplitudes. Fails on a zero vector.
    pub fn new(space: SpaceDescriptor, amplitudes: CVector) -> Result<Self> {
        if amplitudes.len() != space.total_dim() {
            return Err(Error::DimensionMismatch {
                expected: space.total_dim(),
                found: amplitudes.len(),
            });
        }
        let norm = amplitudes.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::InvalidState("zero or non-finite norm".into()));
        }
        Ok(Self { space, amplitudes: amplitudes.unscale(norm) })
    }

    pub fn basis(space: &SpaceDescriptor, levels: &[usize]) -> Result<Self> {
        Ok(Self { space: space.clone(), amplitudes: space.basis_vector(levels)? })
    }

    pub fn space(&self) -> &SpaceDescriptor {
        &self.space
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn amplitude(&self, levels: &[usize]) -> Result<C64> {
        Ok(self.amplitudes[self.space.index(levels)?])
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    pub fn inner(&self, other: &Self) -> C64 {
        self.amplitudes.dotc(&other.amplitudes)
    }

    /// Applies an operator without renormalizing.
    pub fn apply(&self, op: &DenseOperator) -> Self {
        Self { space: self.space.clone(), amplitudes: op.matrix() * &self.amplitudes }
    }

    pub fn to_density(&self) -> DensityMatrix {
        DensityMatrix {
            space: self.space.clone(),
            matrix: &self.amplitudes * self.amplitudes.adjoint(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    space: SpaceDescriptor,
    matrix: CMatrix,
}

impl DensityMatrix {
    /// Wraps a matrix after checking shape and Hermiticity. Trace and
    /// positivity are left to the caller, since integrators produce states
    /// that are only approximately normalized.
    pub fn new(space: SpaceDescriptor, matrix: CMatrix) -> Result<Self> {
        let n = space.total_dim();
        if matrix.nrows() != n || matrix.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, found: matrix.nrows() });
        }
        if hermiticity_defect(&matrix) > HERMITIAN_TOL * matrix.norm().max(1.0) {
            return Err(Error::NotHermitian(hermiticity_defect(&matrix)));
        }
        Ok(Self { space, matrix })
    }

    pub(crate) fn from_raw(space: SpaceDescriptor, matrix: CMatrix) -> Self {
        Self { space, matrix }
    }

    pub fn maximally_mixed(space: &SpaceDescriptor) -> Self {
        let n = space.total_dim();
        Self {
            space: space.clone(),
            matrix: CMatrix::identity(n, n).unscale(n as f64),
        }
    }

    pub fn space(&self) -> &SpaceDescriptor {
        &self.space
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    pub fn purity(&self) -> f64 {
        (&self.matrix * &self.matrix).trace().re
    }

    pub fn expectation(&self, op: &DenseOperator) -> C64 {
        (&self.matrix * op.matrix()).trace()
    }

    /// Population of a single product basis state.
    pub fn population(&self, levels: &[usize]) -> Result<f64> {
        let i = self.space.index(levels)?;
        Ok(self.matrix[(i, i)].re)
    }

    pub fn conjugate_by(&self, u: &DenseOperator) -> Self {
        Self {
            space: self.space.clone(),
            matrix: u.matrix() * &self.matrix * u.matrix().adjoint(),
        }
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        hermitian_eigenvalues(&self.matrix)
    }

    /// Trace distance ½‖ρ − σ‖₁.
    pub fn trace_distance(&self, other: &Self) -> Result<f64> {
        let diff = &self.matrix - &other.matrix;
        Ok(0.5 * hermitian_eigenvalues(&diff)?.iter().map(|l| l.abs()).sum::<f64>())
    }

    pub fn partial_trace(&self, keep: &[usize]) -> Result<(SpaceDescriptor, CMatrix)> {
        partial_trace(&self.matrix, &self.space, keep)
    }
}

/// Frobenius norm of `m - m†`.
pub fn hermiticity_defect(m: &CMatrix) -> f64 {
    (m - m.adjoint()).norm()
}

/// Kronecker product, `index = i_a * dim_b + i_b`.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Places `op` on `slot`, identity elsewhere.
pub fn embed(op: &CMatrix, slot: usize, space: &SpaceDescriptor) -> Result<DenseOperator> {
    space.check_slot(slot)?;
    let d = space.dims()[slot];
    if op.nrows() != d || op.ncols() != d {
        return Err(Error::DimensionMismatch { expected: d, found: op.nrows() });
    }
    let left: usize = space.dims()[..slot].iter().product();
    let right: usize = space.dims()[slot + 1..].iter().product();
    let m = kron(&kron(&CMatrix::identity(left, left), op), &CMatrix::identity(right, right));
    DenseOperator::new(space.clone(), m)
}

fn check_hermitian(m: &CMatrix) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch { expected: m.nrows(), found: m.ncols() });
    }
    let defect = hermiticity_defect(m);
    if defect > HERMITIAN_TOL * m.norm().max(1.0) {
        return Err(Error::NotHermitian(defect));
    }
    Ok(())
}

/// Ascending eigenvalues of a Hermitian matrix.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Result<Vec<f64>> {
    Ok(hermitian_eigh(m)?.0)
}

/// Ascending eigenvalues with matching eigenvector columns.
pub fn hermitian_eigh(m: &CMatrix) -> Result<(Vec<f64>, CMatrix)> {
    check_hermitian(m)?;
    // Symmetrize so the solver sees an exactly Hermitian input.
    let sym = (m + m.adjoint()).unscale(2.0);
    let eig = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_columns(
        &order.iter().map(|&i| eig.eigenvectors.column(i).into_owned()).collect::<Vec<_>>(),
    );
    Ok((values, vectors))
}

/// `exp(-i H t)` through the spectral decomposition of `H`.
pub fn matrix_exponential_hermitian_generator(h: &DenseOperator, t: f64) -> Result<DenseOperator> {
    let (values, vectors) = hermitian_eigh(h.matrix())?;
    let phases = CVector::from_iterator(
        values.len(),
        values.iter().map(|&l| C64::from_polar(1.0, -l * t)),
    );
    let mut scaled = vectors.clone();
    for (mut col, p) in scaled.column_iter_mut().zip(phases.iter()) {
        col *= *p;
    }
    DenseOperator::new(h.space().clone(), scaled * vectors.adjoint())
}

/// Traces out every slot not listed in `keep`. The result is expressed on
/// the kept slots in their original order.
pub fn partial_trace(
    m: &CMatrix,
    space: &SpaceDescriptor,
    keep: &[usize],
) -> Result<(SpaceDescriptor, CMatrix)> {
    if keep.is_empty() {
        return Err(Error::EmptyKeepSet);
    }
    let n = space.total_dim();
    if m.nrows() != n || m.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, found: m.nrows() });
    }
    let mut kept: Vec<usize> = keep.to_vec();
    kept.sort_unstable();
    kept.dedup();
    for &s in &kept {
        space.check_slot(s)?;
    }
    let reduced = SpaceDescriptor::new(kept.iter().map(|&s| space.dims()[s]).collect())?;
    let traced: Vec<usize> = (0..space.slots()).filter(|s| !kept.contains(s)).collect();

    let k = reduced.total_dim();
    let mut out = CMatrix::zeros(k, k);
    // Walk the full basis once and accumulate diagonal blocks of the
    // traced slots.
    let levels: Vec<Vec<usize>> = (0..n).map(|i| space.levels(i)).collect();
    let reduced_index = |lv: &[usize]| kept.iter().fold(0, |acc, &s| acc * space.dims()[s] + lv[s]);
    for i in 0..n {
        let ri = reduced_index(&levels[i]);
        for j in 0..n {
            if traced.iter().all(|&s| levels[i][s] == levels[j][s]) {
                out[(ri, reduced_index(&levels[j]))] += m[(i, j)];
            }
        }
    }
    Ok((reduced, out))
}
