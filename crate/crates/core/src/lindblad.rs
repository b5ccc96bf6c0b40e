//! Liouvillian construction, steady state and time propagation.
//!
//! Density matrices are vectorized by column stacking, `vec(ρ)[i + j·d] =
//! ρ[i, j]`, which is nalgebra's native storage order. With this convention
//! `vec(A ρ B) = (Bᵀ ⊗ A) vec(ρ)` and the master equation
//!
//! ```text
//! ρ̇ = −i[H, ρ] + Σᵢ (2 Cᵢ ρ Cᵢ† − ρ Cᵢ†Cᵢ − Cᵢ†Cᵢ ρ),   C₁ = √γ σ,  C₂ = √κ a
//! ```
//!
//! becomes `vec(ρ̇) = 𝓛 vec(ρ)` with
//! `𝓛 = −i(I⊗H − Hᵀ⊗I) + Σᵢ [2 C̄ᵢ⊗Cᵢ − I⊗Cᵢ†Cᵢ − (Cᵢ†Cᵢ)ᵀ⊗I]`.
//! κ and γ are amplitude decay rates: populations decay at 2κ and 2γ.

use nalgebra::DVector;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hilbert::{max_abs_diff, AtomState, CMatrix, OperatorMatrix, Operators, SpaceDims, ONE, ZERO};
use crate::jcmodel::{hamiltonian_with, SystemParams};
use crate::sparse::{expm_action, CsrMatrix, TripletBuilder};

/// Hermitian, unit-trace state of the atom–cavity system.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    dims: SpaceDims,
    data: CMatrix,
}

impl DensityMatrix {
    pub const TOLERANCE: f64 = 1e-10;

    /// Validates Hermiticity and unit trace to [`Self::TOLERANCE`].
    pub fn new(dims: SpaceDims, data: CMatrix) -> Result<Self> {
        let n = dims.total();
        if data.nrows() != n || data.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, found: data.nrows().max(data.ncols()) });
        }
        let rho = Self { dims, data };
        if rho.hermiticity_error() > Self::TOLERANCE {
            return Err(Error::InvalidParameter("density matrix is not Hermitian".into()));
        }
        if (rho.trace() - 1.0).abs() > Self::TOLERANCE {
            return Err(Error::InvalidParameter(format!("density matrix trace {} ≠ 1", rho.trace())));
        }
        Ok(rho)
    }

    pub(crate) fn from_raw(dims: SpaceDims, data: CMatrix) -> Self {
        Self { dims, data }
    }

    pub fn from_pure(dims: SpaceDims, psi: &DVector<Complex64>) -> Result<Self> {
        if psi.len() != dims.total() {
            return Err(Error::DimensionMismatch { expected: dims.total(), found: psi.len() });
        }
        let psi = psi.normalize();
        Self::new(dims, &psi * psi.adjoint())
    }

    /// `|atom, photons⟩⟨atom, photons|`.
    pub fn basis(dims: SpaceDims, atom: AtomState, photons: usize) -> Result<Self> {
        Self::from_pure(dims, &dims.basis_state(atom, photons)?)
    }

    /// `|0,g⟩⟨0,g|`.
    pub fn ground(dims: SpaceDims) -> Self {
        Self::basis(dims, AtomState::Ground, 0).expect("vacuum is always in the truncated space")
    }

    pub fn dims(&self) -> SpaceDims {
        self.dims
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.data
    }

    pub fn trace(&self) -> f64 {
        self.data.trace().re
    }

    pub fn hermiticity_error(&self) -> f64 {
        max_abs_diff(&self.data, &self.data.adjoint())
    }

    /// Smallest eigenvalue of the Hermitian part.
    pub fn min_eigenvalue(&self) -> f64 {
        let herm = (&self.data + self.data.adjoint()) * Complex64::new(0.5, 0.0);
        herm.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Column-stacked vectorization.
    pub fn to_vec(&self) -> Vec<Complex64> {
        self.data.as_slice().to_vec()
    }

    pub(crate) fn from_vec(dims: SpaceDims, v: Vec<Complex64>) -> Self {
        let n = dims.total();
        Self { dims, data: CMatrix::from_vec(n, n, v) }
    }
}

/// Linear generator acting on column-stacked density matrices.
#[derive(Debug, Clone)]
pub struct Superoperator {
    dims: SpaceDims,
    matrix: CsrMatrix,
}

impl Superoperator {
    pub fn dims(&self) -> SpaceDims {
        self.dims
    }

    /// Side length `(2·fock_dim)²`.
    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn nnz(&self) -> usize {
        self.matrix.nnz()
    }

    pub fn to_dense(&self) -> CMatrix {
        self.matrix.to_dense()
    }

    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        self.matrix.matvec(v)
    }

    /// `vec(I)ᵀ 𝓛`, which vanishes for a trace-preserving generator.
    pub fn trace_row(&self) -> Vec<Complex64> {
        self.matrix.vecmat(&identity_vec(self.dims))
    }

    pub fn norm1(&self) -> f64 {
        self.matrix.norm1()
    }

    /// Steps `v0` along a non-decreasing grid of non-negative times,
    /// calling `visit(i, exp(𝓛 tᵢ) v0)` at each node.
    pub fn evolve_on_grid<F>(&self, v0: Vec<Complex64>, times: &[f64], visit: F) -> Result<()>
    where
        F: FnMut(usize, &[Complex64]),
    {
        evolve(&self.matrix, v0, times, visit)
    }

    /// Same as [`Self::evolve_on_grid`] with the transposed generator, used
    /// to evolve observables backwards into the Heisenberg picture:
    /// `tr(O exp(𝓛t) X) = (exp(𝓛ᵀt) vec(Oᵀ))ᵀ vec(X)`.
    pub fn evolve_observable_on_grid<F>(&self, observable: &OperatorMatrix, times: &[f64], visit: F) -> Result<()>
    where
        F: FnMut(usize, &[Complex64]),
    {
        let w0 = observable.matrix().transpose().as_slice().to_vec();
        evolve(&self.matrix.transpose(), w0, times, visit)
    }
}

fn evolve<F>(m: &CsrMatrix, mut v: Vec<Complex64>, times: &[f64], mut visit: F) -> Result<()>
where
    F: FnMut(usize, &[Complex64]),
{
    let mut now = 0.0;
    for (i, &t) in times.iter().enumerate() {
        if t < 0.0 {
            return Err(Error::NegativeTime(t));
        }
        if t < now {
            return Err(Error::InvalidParameter("evolution grid must be non-decreasing".into()));
        }
        if t > now {
            v = expm_action(m, &v, t - now);
            now = t;
        }
        visit(i, &v);
    }
    Ok(())
}

fn identity_vec(dims: SpaceDims) -> Vec<Complex64> {
    let d = dims.total();
    let mut v = vec![ZERO; d * d];
    for i in 0..d {
        v[i + i * d] = ONE;
    }
    v
}

/// Builds 𝓛 from the Hamiltonian and the two collapse channels.
pub fn liouvillian(params: &SystemParams) -> Result<Superoperator> {
    params.validate()?;
    let dims = params.dims;
    let ops = Operators::new(dims)?;
    let h = hamiltonian_with(params, &ops);
    let d = dims.total();
    let id = CMatrix::identity(d, d);
    let minus_i = Complex64::new(0.0, -1.0);

    let mut b = TripletBuilder::new(d * d);
    b.add_kron(&id, h.matrix(), minus_i);
    b.add_kron(&h.matrix().transpose(), &id, -minus_i);

    let channels = [(params.gamma, &ops.sigma), (params.kappa, &ops.a)];
    for (rate, op) in channels {
        if rate == 0.0 {
            continue;
        }
        let c = op.matrix() * Complex64::new(rate.sqrt(), 0.0);
        let cdc = c.adjoint() * &c;
        b.add_kron(&c.conjugate(), &c, Complex64::new(2.0, 0.0));
        b.add_kron(&id, &cdc, -ONE);
        b.add_kron(&cdc.transpose(), &id, -ONE);
    }
    Ok(Superoperator { dims, matrix: b.build() })
}

/// Unique fixed point of 𝓛 with unit trace.
///
/// Solves the bordered system in which the `ρ₀₀` equation is replaced by the
/// trace constraint, scaled to the magnitude of 𝓛 to keep the system balanced.
pub fn steady_state(l: &Superoperator) -> Result<DensityMatrix> {
    let dims = l.dims;
    let d = dims.total();
    let mut m = l.to_dense();
    let scale = m.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1.0);
    for col in 0..d * d {
        m[(0, col)] = ZERO;
    }
    for i in 0..d {
        m[(0, i + i * d)] = Complex64::new(scale, 0.0);
    }
    let mut rhs = DVector::from_element(d * d, ZERO);
    rhs[0] = Complex64::new(scale, 0.0);

    let lu = m.lu();
    let pivots: Vec<f64> = {
        let u = lu.u();
        (0..d * d).map(|i| u[(i, i)].norm()).collect()
    };
    let max_pivot = pivots.iter().copied().fold(0.0, f64::max);
    let min_pivot = pivots.iter().copied().fold(f64::INFINITY, f64::min);
    if !(min_pivot > 1e-13 * max_pivot) {
        return Err(Error::DegenerateSteadyState);
    }
    let x = lu.solve(&rhs).ok_or(Error::DegenerateSteadyState)?;

    let raw = CMatrix::from_vec(d, d, x.as_slice().to_vec());
    let herm = (&raw + raw.adjoint()) * Complex64::new(0.5, 0.0);
    let tr = herm.trace().re;
    if !tr.is_finite() || tr.abs() < f64::MIN_POSITIVE {
        return Err(Error::Numerical("steady-state trace vanished".into()));
    }
    Ok(DensityMatrix::from_raw(dims, herm / Complex64::new(tr, 0.0)))
}

/// `‖𝓛 vec(ρ)‖₂`.
pub fn residual_norm(l: &Superoperator, rho: &DensityMatrix) -> f64 {
    l.apply(&rho.to_vec()).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `exp(𝓛 τ) ρ₀` for `τ ≥ 0`.
pub fn propagate(l: &Superoperator, rho0: &DensityMatrix, tau: f64) -> Result<DensityMatrix> {
    if tau < 0.0 || tau.is_nan() {
        return Err(Error::NegativeTime(tau));
    }
    if rho0.dims != l.dims {
        return Err(Error::DimensionMismatch { expected: l.dims.total(), found: rho0.dims.total() });
    }
    let v = expm_action(&l.matrix, &rho0.to_vec(), tau);
    Ok(DensityMatrix::from_vec(l.dims, v))
}

/// `tr(O ρ)`.
pub fn expectation(op: &OperatorMatrix, rho: &DensityMatrix) -> Result<Complex64> {
    if op.dims() != rho.dims {
        return Err(Error::DimensionMismatch { expected: rho.dims.total(), found: op.dims().total() });
    }
    Ok(trace_product(op.matrix(), &rho.data))
}

/// `tr(A B)` without forming the product.
pub(crate) fn trace_product(a: &CMatrix, b: &CMatrix) -> Complex64 {
    let n = a.nrows();
    let mut acc = ZERO;
    for i in 0..n {
        for j in 0..n {
            acc += a[(i, j)] * b[(j, i)];
        }
    }
    acc
}
