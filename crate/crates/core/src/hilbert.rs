//! Operator algebra on the truncated atom ⊗ cavity product space.
//!
//! Basis ordering is fixed everywhere in the crate: the atom is the outer
//! (slow) factor and the cavity Fock index the inner (fast) one, so the
//! product state `|s, n⟩` sits at index `s * fock_dim + n` with `s = 0` the
//! ground state `|g⟩` and `s = 1` the excited state `|e⟩`.

use std::ops::{Add, Mul, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

pub(crate) const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub(crate) const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Atomic basis label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AtomState {
    Ground,
    Excited,
}

impl AtomState {
    pub fn index(self) -> usize {
        match self {
            AtomState::Ground => 0,
            AtomState::Excited => 1,
        }
    }
}

/// Dimensions of the truncated product space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SpaceDims {
    fock_dim: usize,
}

impl SpaceDims {
    pub const ATOM_DIM: usize = 2;

    /// `fock_dim` is `N_max + 1`, the number of retained photon-number states.
    pub fn new(fock_dim: usize) -> Result<Self> {
        if fock_dim < 2 {
            return Err(Error::InvalidDimension(format!("fock_dim must be at least 2, got {fock_dim}")));
        }
        Ok(Self { fock_dim })
    }

    pub fn with_max_photons(n_max: usize) -> Result<Self> {
        Self::new(n_max + 1)
    }

    pub fn atom_dim(&self) -> usize {
        Self::ATOM_DIM
    }

    pub fn fock_dim(&self) -> usize {
        self.fock_dim
    }

    pub fn max_photons(&self) -> usize {
        self.fock_dim - 1
    }

    pub fn total(&self) -> usize {
        Self::ATOM_DIM * self.fock_dim
    }

    pub fn index(&self, atom: AtomState, photons: usize) -> usize {
        debug_assert!(photons < self.fock_dim);
        atom.index() * self.fock_dim + photons
    }

    /// Basis vector `|atom, photons⟩`.
    pub fn basis_state(&self, atom: AtomState, photons: usize) -> Result<nalgebra::DVector<Complex64>> {
        if photons >= self.fock_dim {
            return Err(Error::InvalidDimension(format!(
                "photon number {photons} outside truncated space of dimension {}",
                self.fock_dim
            )));
        }
        let mut v = nalgebra::DVector::from_element(self.total(), ZERO);
        v[self.index(atom, photons)] = ONE;
        Ok(v)
    }
}

/// A square complex operator on the product space.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    dims: SpaceDims,
    data: CMatrix,
}

impl OperatorMatrix {
    pub fn new(dims: SpaceDims, data: CMatrix) -> Result<Self> {
        let n = dims.total();
        if data.nrows() != n || data.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, found: data.nrows().max(data.ncols()) });
        }
        Ok(Self { dims, data })
    }

    pub fn zeros(dims: SpaceDims) -> Self {
        let n = dims.total();
        Self { dims, data: CMatrix::zeros(n, n) }
    }

    pub fn identity(dims: SpaceDims) -> Self {
        let n = dims.total();
        Self { dims, data: CMatrix::identity(n, n) }
    }

    pub fn dims(&self) -> SpaceDims {
        self.dims
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.data
    }

    pub fn into_matrix(self) -> CMatrix {
        self.data
    }

    pub fn dagger(&self) -> Self {
        Self { dims: self.dims, data: self.data.adjoint() }
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self { dims: self.dims, data: &self.data * Complex64::new(factor, 0.0) }
    }

    pub fn trace(&self) -> Complex64 {
        self.data.trace()
    }

    pub fn commutator(&self, other: &Self) -> Self {
        self * other - other * self
    }

    /// Largest absolute deviation from Hermiticity.
    pub fn hermiticity_error(&self) -> f64 {
        max_abs_diff(&self.data, &self.data.adjoint())
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_error() <= tol
    }
}

impl<'a> Mul<&'a OperatorMatrix> for &'a OperatorMatrix {
    type Output = OperatorMatrix;

    fn mul(self, rhs: &'a OperatorMatrix) -> OperatorMatrix {
        assert_eq!(self.dims, rhs.dims, "operator dimensions differ");
        OperatorMatrix { dims: self.dims, data: &self.data * &rhs.data }
    }
}

impl Add for OperatorMatrix {
    type Output = OperatorMatrix;

    fn add(self, rhs: OperatorMatrix) -> OperatorMatrix {
        assert_eq!(self.dims, rhs.dims, "operator dimensions differ");
        OperatorMatrix { dims: self.dims, data: self.data + rhs.data }
    }
}

impl Sub for OperatorMatrix {
    type Output = OperatorMatrix;

    fn sub(self, rhs: OperatorMatrix) -> OperatorMatrix {
        assert_eq!(self.dims, rhs.dims, "operator dimensions differ");
        OperatorMatrix { dims: self.dims, data: self.data - rhs.data }
    }
}

pub(crate) fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Ladder operator `a` on a bare Fock space of dimension `fock_dim`.
pub fn fock_annihilation(fock_dim: usize) -> CMatrix {
    let mut a = CMatrix::zeros(fock_dim, fock_dim);
    for n in 1..fock_dim {
        a[(n - 1, n)] = Complex64::new((n as f64).sqrt(), 0.0);
    }
    a
}

/// Two-level lowering operator with `σ|e⟩ = |g⟩`.
pub fn two_level_lowering() -> CMatrix {
    let mut s = CMatrix::zeros(2, 2);
    s[(AtomState::Ground.index(), AtomState::Excited.index())] = ONE;
    s
}

/// `atom_op ⊗ cavity_op` in the crate's atom ⊗ cavity ordering.
pub fn tensor_embed(atom_op: &CMatrix, cavity_op: &CMatrix, dims: SpaceDims) -> Result<OperatorMatrix> {
    if atom_op.nrows() != dims.atom_dim() || atom_op.ncols() != dims.atom_dim() {
        return Err(Error::DimensionMismatch {
            expected: dims.atom_dim(),
            found: atom_op.nrows().max(atom_op.ncols()),
        });
    }
    if cavity_op.nrows() != dims.fock_dim() || cavity_op.ncols() != dims.fock_dim() {
        return Err(Error::DimensionMismatch {
            expected: dims.fock_dim(),
            found: cavity_op.nrows().max(cavity_op.ncols()),
        });
    }
    OperatorMatrix::new(dims, atom_op.kronecker(cavity_op))
}

/// `I_atom ⊗ a`.
pub fn annihilation_operator(dims: SpaceDims) -> Result<OperatorMatrix> {
    let dims = SpaceDims::new(dims.fock_dim())?;
    tensor_embed(&CMatrix::identity(2, 2), &fock_annihilation(dims.fock_dim()), dims)
}

/// `σ ⊗ I_cavity`.
pub fn atomic_lowering_operator(dims: SpaceDims) -> Result<OperatorMatrix> {
    tensor_embed(&two_level_lowering(), &CMatrix::identity(dims.fock_dim(), dims.fock_dim()), dims)
}

/// Photon number `a†a`.
pub fn number_operator(dims: SpaceDims) -> Result<OperatorMatrix> {
    let a = annihilation_operator(dims)?;
    Ok(&a.dagger() * &a)
}

/// Operators used throughout a simulation, built once.
#[derive(Debug, Clone)]
pub struct Operators {
    pub a: OperatorMatrix,
    pub a_dag: OperatorMatrix,
    pub sigma: OperatorMatrix,
    pub sigma_dag: OperatorMatrix,
    pub n: OperatorMatrix,
}

impl Operators {
    pub fn new(dims: SpaceDims) -> Result<Self> {
        let a = annihilation_operator(dims)?;
        let sigma = atomic_lowering_operator(dims)?;
        let a_dag = a.dagger();
        let sigma_dag = sigma.dagger();
        let n = &a_dag * &a;
        Ok(Self { a, a_dag, sigma, sigma_dag, n })
    }
}
