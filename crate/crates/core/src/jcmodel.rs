//! Driven Jaynes–Cummings Hamiltonian, dressed states and effective
//! dressed-basis drive strengths.
//!
//! All frequencies are angular (rad/s) with ħ = 1. Detunings follow
//! `Δ = ω_drive − ω`, and the atom–cavity detuning is reported as
//! `Δ_ac = ω_a − ω_c = Δ_c − Δ_a`.

use std::fmt;

use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{AtomState, CMatrix, OperatorMatrix, Operators, SpaceDims};

/// Which subsystem the coherent probe couples to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DriveKind {
    Atom,
    Cavity,
}

impl fmt::Display for DriveKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DriveKind::Atom => f.write_str("atom"),
            DriveKind::Cavity => f.write_str("cavity"),
        }
    }
}

/// Coherent drive with its strength η in rad/s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Drive {
    None,
    Atom(f64),
    Cavity(f64),
}

impl Drive {
    pub fn new(kind: DriveKind, eta: f64) -> Self {
        match kind {
            DriveKind::Atom => Drive::Atom(eta),
            DriveKind::Cavity => Drive::Cavity(eta),
        }
    }

    pub fn kind(&self) -> Option<DriveKind> {
        match self {
            Drive::None => None,
            Drive::Atom(_) => Some(DriveKind::Atom),
            Drive::Cavity(_) => Some(DriveKind::Cavity),
        }
    }

    pub fn strength(&self) -> f64 {
        match *self {
            Drive::None => 0.0,
            Drive::Atom(eta) | Drive::Cavity(eta) => eta,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    /// Atom–cavity coupling g.
    pub g: f64,
    /// Cavity field decay rate κ.
    pub kappa: f64,
    /// Atomic polarization decay rate γ.
    pub gamma: f64,
    /// Δ_a = ω_d − ω_a.
    pub delta_a: f64,
    /// Δ_c = ω_d − ω_c.
    pub delta_c: f64,
    pub drive: Drive,
    pub dims: SpaceDims,
}

impl SystemParams {
    pub fn new(
        g: f64,
        kappa: f64,
        gamma: f64,
        delta_a: f64,
        delta_c: f64,
        drive: Drive,
        dims: SpaceDims,
    ) -> Result<Self> {
        let p = Self { g, kappa, gamma, delta_a, delta_c, drive, dims };
        p.validate()?;
        Ok(p)
    }

    /// Parameters with the probe detuned by `delta_c` from the cavity and the
    /// atom offset from the cavity by `delta_ac = ω_a − ω_c`.
    pub fn with_cavity_detuning(
        g: f64,
        kappa: f64,
        gamma: f64,
        delta_c: f64,
        delta_ac: f64,
        drive: Drive,
        dims: SpaceDims,
    ) -> Result<Self> {
        Self::new(g, kappa, gamma, delta_c - delta_ac, delta_c, drive, dims)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.g, self.kappa, self.gamma, self.delta_a, self.delta_c, self.drive.strength()]
            .iter()
            .all(|x| x.is_finite());
        if !finite {
            return Err(Error::InvalidParameter("parameters must be finite".into()));
        }
        for (name, value) in [("g", self.g), ("kappa", self.kappa), ("gamma", self.gamma)] {
            if value < 0.0 {
                return Err(Error::InvalidParameter(format!("{name} must be non-negative, got {value}")));
            }
        }
        if self.drive.strength() < 0.0 {
            return Err(Error::InvalidParameter("drive strength must be non-negative".into()));
        }
        Ok(())
    }

    /// Δ_ac = ω_a − ω_c.
    pub fn delta_ac(&self) -> f64 {
        self.delta_c - self.delta_a
    }

    pub fn with_drive(mut self, drive: Drive) -> Self {
        self.drive = drive;
        self
    }

    pub fn with_dims(mut self, dims: SpaceDims) -> Self {
        self.dims = dims;
        self
    }

    /// Lifetime ((κ+γ)/2)⁻¹ of the excited dressed states.
    pub fn dressed_lifetime(&self) -> f64 {
        2.0 / (self.kappa + self.gamma)
    }
}

/// Drive term `H_d` alone.
pub fn drive_hamiltonian(ops: &Operators, drive: Drive) -> OperatorMatrix {
    match drive {
        Drive::None => OperatorMatrix::zeros(ops.a.dims()),
        Drive::Cavity(eta) => (ops.a.clone() + ops.a_dag.clone()).scale(eta),
        Drive::Atom(eta) => (ops.sigma.clone() + ops.sigma_dag.clone()).scale(eta),
    }
}

fn bare_hamiltonian(params: &SystemParams, ops: &Operators) -> OperatorMatrix {
    let atom = (&ops.sigma_dag * &ops.sigma).scale(params.delta_a);
    let cavity = ops.n.scale(params.delta_c);
    let coupling = (&ops.a_dag * &ops.sigma + &ops.sigma_dag * &ops.a).scale(params.g);
    atom + cavity + coupling
}

/// `H = Δ_a σ†σ + Δ_c a†a + g(a†σ + σ†a) + H_d`.
pub fn build_hamiltonian(params: &SystemParams) -> OperatorMatrix {
    let ops = Operators::new(params.dims).expect("SpaceDims is valid by construction");
    hamiltonian_with(params, &ops)
}

pub(crate) fn hamiltonian_with(params: &SystemParams, ops: &Operators) -> OperatorMatrix {
    bare_hamiltonian(params, ops) + drive_hamiltonian(ops, params.drive)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Branch {
    Plus,
    Minus,
}

impl Branch {
    pub fn sign(self) -> f64 {
        match self {
            Branch::Plus => 1.0,
            Branch::Minus => -1.0,
        }
    }
}

/// A level of the undriven ladder: the ground state `|0,g⟩` or a dressed
/// state `|n,±⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Level {
    Ground,
    Dressed { manifold: usize, branch: Branch },
}

impl Level {
    pub fn plus(manifold: usize) -> Self {
        Level::Dressed { manifold, branch: Branch::Plus }
    }

    pub fn minus(manifold: usize) -> Self {
        Level::Dressed { manifold, branch: Branch::Minus }
    }

    pub fn manifold(&self) -> usize {
        match self {
            Level::Ground => 0,
            Level::Dressed { manifold, .. } => *manifold,
        }
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Level::Ground => f.write_str("|0,g>"),
            Level::Dressed { manifold, branch: Branch::Plus } => write!(f, "|{manifold},+>"),
            Level::Dressed { manifold, branch: Branch::Minus } => write!(f, "|{manifold},->"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DressedState {
    pub manifold: usize,
    pub branch: Branch,
    /// Amplitudes on the full product space.
    pub amplitudes: DVector<Complex64>,
    /// Eigenenergy in the drive frame (rad/s).
    pub energy: f64,
}

/// Eigenstates `|n,+⟩` (higher energy) and `|n,−⟩` of the undriven
/// Hamiltonian within the n-excitation manifold `{|n,g⟩, |n−1,e⟩}`.
///
/// The drive term is not included. Eigenvectors are phase-fixed so that the
/// `|n,g⟩` amplitude is real and positive (the `|n−1,e⟩` amplitude takes that
/// role when the former vanishes).
pub fn dressed_states(params: &SystemParams, manifold: usize) -> Result<(DressedState, DressedState)> {
    let dims = params.dims;
    if manifold == 0 {
        return Err(Error::InvalidParameter("dressed manifolds start at n = 1".into()));
    }
    if manifold > dims.max_photons() {
        return Err(Error::ManifoldOutOfRange { manifold, n_max: dims.max_photons() });
    }
    let ops = Operators::new(dims)?;
    let h = bare_hamiltonian(params, &ops);
    let basis = [dims.index(AtomState::Ground, manifold), dims.index(AtomState::Excited, manifold - 1)];
    let block = CMatrix::from_fn(2, 2, |i, j| h.matrix()[(basis[i], basis[j])]);
    let eig = block.symmetric_eigen();

    let (hi, lo) = if eig.eigenvalues[0] >= eig.eigenvalues[1] { (0, 1) } else { (1, 0) };
    let make = |col: usize, branch: Branch| {
        let local = eig.eigenvectors.column(col).into_owned();
        let pivot = if local[0].norm() > 1e-12 { local[0] } else { local[1] };
        let phase = pivot.conj() / pivot.norm();
        let mut amplitudes = DVector::from_element(dims.total(), Complex64::new(0.0, 0.0));
        for (k, &idx) in basis.iter().enumerate() {
            amplitudes[idx] = local[k] * phase;
        }
        DressedState { manifold, branch, amplitudes, energy: eig.eigenvalues[col] }
    };
    Ok((make(hi, Branch::Plus), make(lo, Branch::Minus)))
}

fn level_vector(params: &SystemParams, level: Level) -> Result<DVector<Complex64>> {
    match level {
        Level::Ground => params.dims.basis_state(AtomState::Ground, 0),
        Level::Dressed { manifold, branch } => {
            let (plus, minus) = dressed_states(params, manifold)?;
            Ok(match branch {
                Branch::Plus => plus.amplitudes,
                Branch::Minus => minus.amplitudes,
            })
        }
    }
}

/// Effective drive strength η̃ between adjacent ladder levels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransitionStrength {
    pub from: Level,
    pub to: Level,
    pub eta_tilde: f64,
}

/// η̃ = 2⟨to|H_d|from⟩, evaluated from the phase-fixed dressed eigenvectors.
pub fn effective_drive_strength(params: &SystemParams, from: Level, to: Level) -> Result<TransitionStrength> {
    if params.drive.kind().is_none() || params.drive.strength() == 0.0 {
        return Err(Error::NoDrive);
    }
    if to.manifold() != from.manifold() + 1 {
        return Err(Error::InvalidParameter(format!("transition {from} -> {to} does not connect adjacent manifolds")));
    }
    let ops = Operators::new(params.dims)?;
    let hd = drive_hamiltonian(&ops, params.drive);
    let lower = level_vector(params, from)?;
    let upper = level_vector(params, to)?;
    let element = (upper.adjoint() * hd.matrix() * lower)[(0, 0)];
    Ok(TransitionStrength { from, to, eta_tilde: 2.0 * element.re })
}

/// Resonant closed form of η̃ for a unit-free check against the matrix
/// elements: `±√2 η_a`, `√2 η_c` from the ground state; `(√(n+1) ± √n) η_c`
/// and `±η_a` between excited manifolds.
pub fn closed_form_strength(kind: DriveKind, eta: f64, from: Level, to: Level) -> Option<f64> {
    let Level::Dressed { manifold: upper, branch: to_branch } = to else {
        return None;
    };
    match from {
        Level::Ground if upper == 1 => Some(match kind {
            DriveKind::Atom => to_branch.sign() * 2f64.sqrt() * eta,
            DriveKind::Cavity => 2f64.sqrt() * eta,
        }),
        Level::Dressed { manifold: n, branch } if upper == n + 1 => {
            let (lo, hi) = ((n as f64).sqrt(), ((n + 1) as f64).sqrt());
            Some(match kind {
                DriveKind::Atom => to_branch.sign() * eta,
                DriveKind::Cavity => (hi + branch.sign() * to_branch.sign() * lo) * eta,
            })
        }
        _ => None,
    }
}

/// All allowed transitions from the ground state up through the step from
/// manifold `n_max` to `n_max + 1`.
pub fn transition_table(params: &SystemParams, n_max: usize) -> Result<Vec<TransitionStrength>> {
    if params.drive.kind().is_none() || params.drive.strength() == 0.0 {
        return Err(Error::NoDrive);
    }
    let mut table = Vec::with_capacity(2 + 4 * n_max);
    for upper in [Level::plus(1), Level::minus(1)] {
        table.push(effective_drive_strength(params, Level::Ground, upper)?);
    }
    for n in 1..=n_max {
        for from in [Level::plus(n), Level::minus(n)] {
            for to in [Level::plus(n + 1), Level::minus(n + 1)] {
                table.push(effective_drive_strength(params, from, to)?);
            }
        }
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::mhz;

    fn resonant(drive: Drive, fock: usize) -> SystemParams {
        SystemParams::new(mhz(16.38), 0.0, 0.0, 0.0, 0.0, drive, SpaceDims::new(fock).unwrap()).unwrap()
    }

    #[test]
    fn rejects_negative_rates() {
        let dims = SpaceDims::new(3).unwrap();
        assert!(SystemParams::new(-1.0, 0.0, 0.0, 0.0, 0.0, Drive::None, dims).is_err());
        assert!(SystemParams::new(1.0, 0.0, -2.0, 0.0, 0.0, Drive::None, dims).is_err());
        assert!(SystemParams::new(1.0, 0.0, 0.0, 0.0, 0.0, Drive::Atom(-1.0), dims).is_err());
    }

    #[test]
    fn delta_ac_sign_convention() {
        let dims = SpaceDims::new(3).unwrap();
        let p = SystemParams::with_cavity_detuning(1.0, 0.1, 0.1, 5.0, -2.0, Drive::None, dims).unwrap();
        assert_eq!(p.delta_a, 7.0);
        assert_eq!(p.delta_ac(), -2.0);
    }

    #[test]
    fn hamiltonian_is_hermitian_for_all_drives() {
        for drive in [Drive::None, Drive::Atom(mhz(0.5)), Drive::Cavity(mhz(1.1))] {
            let dims = SpaceDims::new(6).unwrap();
            let p = SystemParams::new(mhz(16.0), mhz(2.0), mhz(3.0), mhz(-4.0), mhz(9.0), drive, dims).unwrap();
            let h = build_hamiltonian(&p);
            assert!(h.hermiticity_error() < 1e-6, "{drive:?}");
        }
    }

    #[test]
    fn single_and_double_excitation_energies() {
        let p = resonant(Drive::None, 6);
        let g = p.g;
        let (plus, minus) = dressed_states(&p, 1).unwrap();
        assert!((plus.energy - g).abs() < 1e-10 * g);
        assert!((minus.energy + g).abs() < 1e-10 * g);
        let (plus, minus) = dressed_states(&p, 2).unwrap();
        assert!((plus.energy - 2f64.sqrt() * g).abs() < 1e-10 * g);
        assert!((plus.energy - minus.energy - 2.0 * 2f64.sqrt() * g).abs() < 1e-10 * g);
        let (plus, minus) = dressed_states(&p, 3).unwrap();
        assert!((plus.energy - minus.energy - 2.0 * 3f64.sqrt() * g).abs() < 1e-10 * g);
    }

    #[test]
    fn resonant_dressed_state_matches_closed_form() {
        let p = resonant(Drive::None, 4);
        let d = p.dims;
        let (plus, minus) = dressed_states(&p, 1).unwrap();
        let g1 = d.basis_state(AtomState::Ground, 1).unwrap();
        let e0 = d.basis_state(AtomState::Excited, 0).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let expected_plus = (&g1 + &e0) * Complex64::new(s, 0.0);
        let expected_minus = (&g1 - &e0) * Complex64::new(s, 0.0);
        assert!(((plus.amplitudes.adjoint() * expected_plus)[(0, 0)].norm_sqr() - 1.0).abs() < 1e-12);
        assert!(((minus.amplitudes.adjoint() * expected_minus)[(0, 0)].norm_sqr() - 1.0).abs() < 1e-12);
        // phase convention: |n,g> amplitude real positive
        let ig = d.index(AtomState::Ground, 1);
        assert!(plus.amplitudes[ig].re > 0.0 && plus.amplitudes[ig].im == 0.0);
    }

    #[test]
    fn manifold_out_of_range() {
        let p = resonant(Drive::None, 3);
        assert!(matches!(dressed_states(&p, 3), Err(Error::ManifoldOutOfRange { manifold: 3, n_max: 2 })));
        assert!(dressed_states(&p, 2).is_ok());
    }

    #[test]
    fn ground_transitions() {
        let eta = mhz(0.3);
        let p = resonant(Drive::Atom(eta), 4);
        let plus = effective_drive_strength(&p, Level::Ground, Level::plus(1)).unwrap();
        let minus = effective_drive_strength(&p, Level::Ground, Level::minus(1)).unwrap();
        assert!((plus.eta_tilde - 2f64.sqrt() * eta).abs() < 1e-12 * eta);
        assert!((minus.eta_tilde + 2f64.sqrt() * eta).abs() < 1e-12 * eta);

        let p = resonant(Drive::Cavity(eta), 4);
        for to in [Level::plus(1), Level::minus(1)] {
            let t = effective_drive_strength(&p, Level::Ground, to).unwrap();
            assert!((t.eta_tilde - 2f64.sqrt() * eta).abs() < 1e-12 * eta);
        }
    }

    #[test]
    fn cavity_drive_symmetry_conserving_enhancement() {
        let eta = mhz(0.55);
        let p = resonant(Drive::Cavity(eta), 5);
        let same = effective_drive_strength(&p, Level::plus(1), Level::plus(2)).unwrap();
        let flip = effective_drive_strength(&p, Level::plus(1), Level::minus(2)).unwrap();
        assert!((same.eta_tilde - (2f64.sqrt() + 1.0) * eta).abs() < 1e-12 * eta);
        assert!((flip.eta_tilde - (2f64.sqrt() - 1.0) * eta).abs() < 1e-12 * eta);
    }

    #[test]
    fn table_sizes_and_magnitudes() {
        let eta = mhz(1.0);
        let p = resonant(Drive::Atom(eta), 4);
        let table = transition_table(&p, 1).unwrap();
        assert_eq!(table.len(), 6);
        for t in &table {
            let m = t.eta_tilde.abs();
            assert!((m - eta).abs() < 1e-12 * eta || (m - 2f64.sqrt() * eta).abs() < 1e-12 * eta);
        }

        let p = resonant(Drive::Cavity(eta), 4);
        let table = transition_table(&p, 1).unwrap();
        let allowed = [2f64.sqrt(), 2f64.sqrt() + 1.0, 2f64.sqrt() - 1.0];
        for t in &table {
            assert!(allowed.iter().any(|k| (t.eta_tilde.abs() - k * eta).abs() < 1e-12 * eta));
        }
    }

    #[test]
    fn undriven_table_is_an_error() {
        let p = resonant(Drive::None, 4);
        assert_eq!(transition_table(&p, 1), Err(Error::NoDrive));
        let p = resonant(Drive::Cavity(0.0), 4);
        assert_eq!(transition_table(&p, 1), Err(Error::NoDrive));
    }

    #[test]
    fn cavity_drive_strength_bound_between_excited_manifolds() {
        let eta = 1.0;
        let p = resonant(Drive::Cavity(eta), 6);
        for t in transition_table(&p, 4).unwrap().iter().filter(|t| t.from != Level::Ground) {
            let n = t.from.manifold() as f64;
            assert!(t.eta_tilde.abs() <= ((n + 1.0).sqrt() + n.sqrt()) * eta + 1e-12);
        }
    }
}
