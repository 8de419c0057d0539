//! Two-qubit charge model: constants, Hamiltonian, thermal state and readout.
//!
//! Basis index is `b = 2u + l` for upper-qubit bit `u` and lower-qubit bit `l`,
//! i.e. the order is |00⟩, |01⟩, |10⟩, |11⟩ with the upper qubit written first.
//! Qubit state |0⟩ is the low-energy charge configuration at negative detuning.
//!
//! Units throughout: energies in μeV, times in ps, temperatures in K.

use nalgebra::{Matrix4, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{check, Error, Result};

/// 4×4 real matrix, row-major.
pub type Mat4 = [[f64; 4]; 4];
/// 4×4 complex matrix, row-major.
pub type CMat4 = [[Complex64; 4]; 4];

/// Reduced Planck constant, μeV·ps.
pub const HBAR: f64 = 658.211_956_9;
/// Planck constant, μeV·ps.
pub const PLANCK_H: f64 = 4_135.667_696;
/// Planck constant per GHz, μeV/GHz.
pub const PLANCK_H_PER_GHZ: f64 = 4.135_667_696;
/// Boltzmann constant, μeV/K.
pub const K_BOLTZMANN: f64 = 86.173_332_62;

/// Physical constants in the simulator's unit system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    /// μeV·ps
    pub hbar: f64,
    /// μeV·ps
    pub planck_h: f64,
    /// μeV/K
    pub k_boltzmann: f64,
}

impl PhysicalConstants {
    pub const CODATA: PhysicalConstants = PhysicalConstants {
        hbar: HBAR,
        planck_h: PLANCK_H,
        k_boltzmann: K_BOLTZMANN,
    };
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self::CODATA
    }
}

/// Photon energy of a frequency: `E = h f`.
pub fn ghz_to_uev(frequency_ghz: f64) -> f64 {
    PLANCK_H_PER_GHZ * frequency_ghz
}

pub fn uev_to_ghz(energy_uev: f64) -> f64 {
    energy_uev / PLANCK_H_PER_GHZ
}

/// Parameters of the coupled qubit pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QubitPairParams {
    /// Upper tunnel splitting Δ_U = 2t_U, μeV.
    pub delta_u: f64,
    /// Lower tunnel splitting Δ_L = 2t_L, μeV.
    pub delta_l: f64,
    /// Inter-qubit Coulomb coupling J, μeV.
    pub j_coupling: f64,
    /// Baseline upper detuning, μeV.
    pub eps_u0: f64,
    /// Baseline lower detuning, μeV.
    pub eps_l0: f64,
    /// Electron temperature, K.
    pub temperature: f64,
}

impl QubitPairParams {
    pub fn new(
        delta_u: f64,
        delta_l: f64,
        j_coupling: f64,
        eps_u0: f64,
        eps_l0: f64,
        temperature: f64,
    ) -> Result<Self> {
        let p = Self {
            delta_u,
            delta_l,
            j_coupling,
            eps_u0,
            eps_l0,
            temperature,
        };
        p.validate()?;
        Ok(p)
    }

    /// Device values: Δ_U = 6.2 GHz, Δ_L = 6.0 GHz, J = 119 μeV, baselines −200 μeV, 10 mK.
    pub fn device() -> Self {
        Self {
            delta_u: ghz_to_uev(6.2),
            delta_l: ghz_to_uev(6.0),
            j_coupling: 119.0,
            eps_u0: -200.0,
            eps_l0: -200.0,
            temperature: 0.010,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check(
            self.delta_u > 0.0 && self.delta_u.is_finite(),
            "delta_u",
            "must be > 0",
        )?;
        check(
            self.delta_l > 0.0 && self.delta_l.is_finite(),
            "delta_l",
            "must be > 0",
        )?;
        check(
            self.j_coupling >= 0.0 && self.j_coupling.is_finite(),
            "j_coupling",
            "must be >= 0",
        )?;
        check(self.eps_u0.is_finite(), "eps_u0", "must be finite")?;
        check(self.eps_l0.is_finite(), "eps_l0", "must be finite")?;
        check(
            self.temperature > 0.0 && !self.temperature.is_nan(),
            "temperature",
            "must be > 0",
        )?;
        Ok(())
    }

    /// Whether the baselines sit in the `|ε| ≫ J ≫ Δ` operating regime.
    ///
    /// "≫" is read as a factor of at least `ratio`. Informational only.
    pub fn in_operating_regime(&self, ratio: f64) -> bool {
        let delta = self.delta_u.max(self.delta_l);
        let eps = self.eps_u0.abs().min(self.eps_l0.abs());
        eps >= ratio * self.j_coupling && self.j_coupling >= ratio * delta
    }

    pub fn with_j(mut self, j: f64) -> Self {
        self.j_coupling = j;
        self
    }

    pub fn with_baselines(mut self, eps_u0: f64, eps_l0: f64) -> Self {
        self.eps_u0 = eps_u0;
        self.eps_l0 = eps_l0;
        self
    }
}

impl Default for QubitPairParams {
    fn default() -> Self {
        Self::device()
    }
}

/// Real symmetric two-qubit Hamiltonian in the charge basis, μeV.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hamiltonian4 {
    pub entries: Mat4,
}

impl Hamiltonian4 {
    /// Hamiltonian from raw energies, without validating signs.
    ///
    /// `H = (ε_U σz + Δ_U σx)/2 ⊗ I + I ⊗ (ε_L σz + Δ_L σx)/2 + J |11⟩⟨11|`.
    pub fn from_energies(delta_u: f64, delta_l: f64, j: f64, eps_u: f64, eps_l: f64) -> Self {
        let hu = 0.5 * delta_u;
        let hl = 0.5 * delta_l;
        let entries = [
            [0.5 * (eps_u + eps_l), hl, hu, 0.0],
            [hl, 0.5 * (eps_u - eps_l), 0.0, hu],
            [hu, 0.0, 0.5 * (-eps_u + eps_l), hl],
            [0.0, hu, hl, 0.5 * (-eps_u - eps_l) + j],
        ];
        Self { entries }
    }

    /// Largest absolute entry; a cheap bound on the energy scale.
    pub fn max_abs(&self) -> f64 {
        self.entries
            .iter()
            .flatten()
            .fold(0.0_f64, |m, &x| m.max(x.abs()))
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.entries
            .iter()
            .flatten()
            .map(|x| x * x)
            .sum::<f64>()
            .sqrt()
    }

    /// Spectral radius bound (max absolute row sum).
    pub fn row_sum_bound(&self) -> f64 {
        self.entries
            .iter()
            .map(|r| r.iter().map(|x| x.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

pub fn build_hamiltonian(params: &QubitPairParams, eps_u: f64, eps_l: f64) -> Hamiltonian4 {
    Hamiltonian4::from_energies(
        params.delta_u,
        params.delta_l,
        params.j_coupling,
        eps_u,
        eps_l,
    )
}

/// Eigen-decomposition of a [`Hamiltonian4`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Eigen4 {
    /// Ascending eigenvalues, μeV.
    pub values: [f64; 4],
    /// `vectors[k]` is the normalized eigenvector for `values[k]`, with its
    /// largest-magnitude component made positive.
    pub vectors: Mat4,
}

pub fn eigen_symmetric(h: &Hamiltonian4) -> Eigen4 {
    let m = Matrix4::from_fn(|i, j| h.entries[i][j]);
    let eig = SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..4).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

    let mut values = [0.0; 4];
    let mut vectors = [[0.0; 4]; 4];
    for (k, &src) in order.iter().enumerate() {
        values[k] = eig.eigenvalues[src];
        let col = eig.eigenvectors.column(src);
        let pivot = (0..4)
            .max_by(|&a, &b| col[a].abs().total_cmp(&col[b].abs()))
            .unwrap();
        let sign = if col[pivot] < 0.0 { -1.0 } else { 1.0 };
        for i in 0..4 {
            vectors[k][i] = sign * col[i];
        }
    }
    Eigen4 { values, vectors }
}

/// 4×4 complex density matrix in the charge basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix {
    pub entries: CMat4,
}

/// Real companion `W = Re(ρ) + Im(ρ)` of a density matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RealStateMatrix {
    pub entries: Mat4,
}

const HERMITIAN_TOL: f64 = 1e-10;
const TRACE_TOL: f64 = 1e-9;

impl DensityMatrix {
    /// Validated constructor.
    pub fn new(entries: CMat4) -> Result<Self> {
        let rho = Self { entries };
        rho.validate()?;
        Ok(rho)
    }

    /// Wraps entries without checking invariants.
    pub fn from_entries_unchecked(entries: CMat4) -> Self {
        Self { entries }
    }

    /// `|b⟩⟨b|` for basis index `b`.
    pub fn basis_state(b: usize) -> Self {
        let mut entries = [[Complex64::new(0.0, 0.0); 4]; 4];
        entries[b][b] = Complex64::new(1.0, 0.0);
        Self { entries }
    }

    /// Diagonal (classical mixture) state.
    pub fn diagonal(pops: [f64; 4]) -> Result<Self> {
        let mut entries = [[Complex64::new(0.0, 0.0); 4]; 4];
        for (b, p) in pops.iter().enumerate() {
            entries[b][b] = Complex64::new(*p, 0.0);
        }
        Self::new(entries)
    }

    /// `|ψ⟩⟨ψ|` for a normalized state vector.
    pub fn pure(psi: [Complex64; 4]) -> Result<Self> {
        let mut entries = [[Complex64::new(0.0, 0.0); 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                entries[i][j] = psi[i] * psi[j].conj();
            }
        }
        Self::new(entries)
    }

    pub fn validate(&self) -> Result<()> {
        for i in 0..4 {
            for j in 0..4 {
                let d = self.entries[i][j] - self.entries[j][i].conj();
                if !(d.norm() <= HERMITIAN_TOL) {
                    return Err(Error::StateInvalid(format!(
                        "not Hermitian at ({i},{j}): deviation {:.3e}",
                        d.norm()
                    )));
                }
            }
        }
        let tr = self.trace();
        if !((tr - 1.0).abs() <= TRACE_TOL) {
            return Err(Error::StateInvalid(format!("trace {tr} != 1")));
        }
        for b in 0..4 {
            let p = self.entries[b][b].re;
            if !(-TRACE_TOL..=1.0 + TRACE_TOL).contains(&p) {
                return Err(Error::StateInvalid(format!(
                    "population {p} of basis state {b} outside [0, 1]"
                )));
            }
        }
        Ok(())
    }

    pub fn trace(&self) -> f64 {
        (0..4).map(|b| self.entries[b][b].re).sum()
    }

    /// `tr(ρ²)`.
    pub fn purity(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                s += (self.entries[i][j] * self.entries[j][i]).re;
            }
        }
        s
    }

    /// Largest `|ρ_ij − conj(ρ_ji)|`.
    pub fn hermiticity_error(&self) -> f64 {
        let mut e = 0.0_f64;
        for i in 0..4 {
            for j in 0..4 {
                e = e.max((self.entries[i][j] - self.entries[j][i].conj()).norm());
            }
        }
        e
    }

    /// Charge-basis populations `ρ_bb`.
    pub fn populations(&self) -> [f64; 4] {
        std::array::from_fn(|b| self.entries[b][b].re)
    }
}

impl RealStateMatrix {
    pub fn trace(&self) -> f64 {
        (0..4).map(|b| self.entries[b][b]).sum()
    }

    pub fn populations(&self) -> [f64; 4] {
        std::array::from_fn(|b| self.entries[b][b])
    }
}

pub fn to_real_form(rho: &DensityMatrix) -> RealStateMatrix {
    let mut w = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            w[i][j] = rho.entries[i][j].re + rho.entries[i][j].im;
        }
    }
    RealStateMatrix { entries: w }
}

/// Inverse of [`to_real_form`]: `Re ρ = (W + Wᵀ)/2`, `Im ρ = (W − Wᵀ)/2`.
pub fn from_real_form(w: &RealStateMatrix) -> DensityMatrix {
    let mut entries = [[Complex64::new(0.0, 0.0); 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            let a = w.entries[i][j];
            let b = w.entries[j][i];
            entries[i][j] = Complex64::new(0.5 * (a + b), 0.5 * (a - b));
        }
    }
    DensityMatrix { entries }
}

/// Relative overlap margin below which two eigenvectors count as tied.
const OVERLAP_TIE_TOL: f64 = 1e-6;

/// Thermal populations at the initialization detunings, placed on the
/// charge-basis diagonal.
///
/// Each basis state takes the Boltzmann weight of the eigenvalue whose
/// eigenvector overlaps it most.
pub fn thermal_initial_state(
    params: &QubitPairParams,
    eps_u: f64,
    eps_l: f64,
) -> Result<DensityMatrix> {
    check(
        params.temperature > 0.0 && !params.temperature.is_nan(),
        "temperature",
        "must be > 0",
    )?;
    let eig = eigen_symmetric(&build_hamiltonian(params, eps_u, eps_l));
    let kt = K_BOLTZMANN * params.temperature;

    let mut assigned = [0usize; 4];
    for (b, slot) in assigned.iter_mut().enumerate() {
        let mut overlaps: Vec<(usize, f64)> =
            (0..4).map(|k| (k, eig.vectors[k][b].powi(2))).collect();
        overlaps.sort_by(|x, y| y.1.total_cmp(&x.1));
        if overlaps[0].1 - overlaps[1].1 <= OVERLAP_TIE_TOL {
            return Err(Error::OverlapAmbiguity { basis: b });
        }
        *slot = overlaps[0].0;
    }
    let mut seen = [false; 4];
    for (b, &k) in assigned.iter().enumerate() {
        if seen[k] {
            return Err(Error::OverlapAmbiguity { basis: b });
        }
        seen[k] = true;
    }

    // Shift by the ground energy so the exponentials cannot underflow to 0/0.
    let e0 = eig.values[0];
    let weights: [f64; 4] = std::array::from_fn(|b| {
        let e = eig.values[assigned[b]] - e0;
        if kt.is_infinite() {
            1.0
        } else {
            (-e / kt).exp()
        }
    });
    let z: f64 = weights.iter().sum();
    let mut entries = [[Complex64::new(0.0, 0.0); 4]; 4];
    for b in 0..4 {
        entries[b][b] = Complex64::new(weights[b] / z, 0.0);
    }
    Ok(DensityMatrix { entries })
}

/// Probability of each qubit being in |0⟩.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbabilityPair {
    pub p_u0: f64,
    pub p_l0: f64,
}

impl ProbabilityPair {
    pub fn from_populations(pops: &[f64; 4]) -> Self {
        Self {
            p_u0: pops[0] + pops[1],
            p_l0: pops[0] + pops[2],
        }
    }
}

pub fn probabilities(rho: &DensityMatrix) -> ProbabilityPair {
    ProbabilityPair::from_populations(&rho.populations())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn planck_constants_consistent() {
        assert_relative_eq!(
            PLANCK_H,
            2.0 * std::f64::consts::PI * HBAR,
            max_relative = 1e-9
        );
        assert_relative_eq!(PLANCK_H_PER_GHZ * 1000.0, PLANCK_H, max_relative = 1e-12);
    }

    #[test]
    fn frequency_conversion() {
        assert_eq!(ghz_to_uev(0.0), 0.0);
        assert!((ghz_to_uev(6.2) - 25.641).abs() < 5e-4);
        // J ≈ 119 μeV ↔ ≈ 29.0 GHz
        assert!((ghz_to_uev(29.0) - 119.0).abs() / 119.0 < 0.01);
        for f in [0.1, 6.0, 29.0, 1234.5] {
            assert_relative_eq!(uev_to_ghz(ghz_to_uev(f)), f, max_relative = 1e-12);
        }
    }

    #[test]
    fn hamiltonian_structure_at_zero_detuning() {
        let p = QubitPairParams {
            delta_u: 25.64,
            delta_l: 24.81,
            j_coupling: 119.0,
            ..QubitPairParams::device()
        };
        let h = build_hamiltonian(&p, 0.0, 0.0).entries;
        assert_eq!([h[0][0], h[1][1], h[2][2], h[3][3]], [0.0, 0.0, 0.0, 119.0]);
        for (i, j) in [(0, 2), (1, 3)] {
            assert_eq!(h[i][j], 12.82);
            assert_eq!(h[j][i], 12.82);
        }
        for (i, j) in [(0, 1), (2, 3)] {
            assert_relative_eq!(h[i][j], 12.405, epsilon = 1e-12);
            assert_eq!(h[i][j], h[j][i]);
        }
        assert_eq!(h[0][3], 0.0);
        assert_eq!(h[1][2], 0.0);
    }

    #[test]
    fn hamiltonian_diagonal_limit() {
        let h = Hamiltonian4::from_energies(0.0, 0.0, 0.0, 10.0, 4.0).entries;
        for i in 0..4 {
            for j in 0..4 {
                let want = if i == j {
                    [7.0, 3.0, -3.0, -7.0][i]
                } else {
                    0.0
                };
                assert_eq!(h[i][j], want);
            }
        }
    }

    #[test]
    fn coupling_only_raises_doubly_occupied_state() {
        let p = QubitPairParams::device();
        let a = build_hamiltonian(&p, -37.0, 51.0).entries;
        let b = build_hamiltonian(&p.with_j(0.0), -37.0, 51.0).entries;
        for i in 0..4 {
            for j in 0..4 {
                let want = if (i, j) == (3, 3) { 119.0 } else { 0.0 };
                assert_relative_eq!(a[i][j] - b[i][j], want, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn eigen_of_diagonal_and_single_qubit_block() {
        let e = eigen_symmetric(&Hamiltonian4::from_energies(0.0, 0.0, 0.0, 10.0, 4.0));
        assert_eq!(e.values, [-7.0, -3.0, 3.0, 7.0]);

        // Upper qubit alone at its balance point: ±Δ/2, each doubly degenerate.
        let e = eigen_symmetric(&Hamiltonian4::from_energies(30.0, 0.0, 0.0, 0.0, 0.0));
        let want = [-15.0, -15.0, 15.0, 15.0];
        for k in 0..4 {
            assert_relative_eq!(e.values[k], want[k], epsilon = 1e-12);
        }
    }

    #[test]
    fn thermal_state_at_base_temperature_is_ground_state() {
        let p = QubitPairParams::device();
        let rho = thermal_initial_state(&p, -300.0, -300.0).unwrap();
        // 1 − ρ₀₀ is below f64 resolution; check the excited weight directly.
        let excited: f64 = (1..4).map(|b| rho.entries[b][b].re).sum();
        assert!(excited < 1e-30);
        assert_eq!(rho.entries[0][0].re, 1.0);
        assert_eq!(
            probabilities(&rho),
            ProbabilityPair {
                p_u0: 1.0,
                p_l0: 1.0
            }
        );
    }

    #[test]
    fn thermal_state_at_infinite_temperature_is_maximally_mixed() {
        let p = QubitPairParams {
            temperature: f64::INFINITY,
            ..QubitPairParams::device()
        };
        let rho = thermal_initial_state(&p, -300.0, -300.0).unwrap();
        for b in 0..4 {
            assert_eq!(rho.entries[b][b].re, 0.25);
        }
    }

    #[test]
    fn thermal_state_is_exactly_diagonal() {
        let p = QubitPairParams {
            temperature: 0.7,
            ..QubitPairParams::device()
        };
        let rho = thermal_initial_state(&p, -150.0, 80.0).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                if i != j {
                    assert_eq!(rho.entries[i][j], c(0.0, 0.0));
                }
            }
            assert_eq!(rho.entries[i][i].im, 0.0);
        }
        assert!((rho.trace() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn thermal_state_rejects_bad_temperature_and_ties() {
        let p = QubitPairParams {
            temperature: 0.0,
            ..QubitPairParams::device()
        };
        assert!(matches!(
            thermal_initial_state(&p, -300.0, -300.0),
            Err(Error::InvalidParameter {
                name: "temperature",
                ..
            })
        ));
        // Upper qubit exactly at its balance point with J = 0: |00⟩ splits
        // evenly between two eigenvectors.
        let p = QubitPairParams {
            j_coupling: 0.0,
            ..QubitPairParams::device()
        };
        assert!(matches!(
            thermal_initial_state(&p, 0.0, -300.0),
            Err(Error::OverlapAmbiguity { .. })
        ));
    }

    #[test]
    fn probability_extraction() {
        assert_eq!(
            probabilities(&DensityMatrix::basis_state(0)),
            ProbabilityPair {
                p_u0: 1.0,
                p_l0: 1.0
            }
        );
        assert_eq!(
            probabilities(&DensityMatrix::basis_state(3)),
            ProbabilityPair {
                p_u0: 0.0,
                p_l0: 0.0
            }
        );
        let mix = DensityMatrix::diagonal([0.5, 0.0, 0.5, 0.0]).unwrap();
        assert_eq!(
            probabilities(&mix),
            ProbabilityPair {
                p_u0: 0.5,
                p_l0: 1.0
            }
        );
    }

    #[test]
    fn real_form_examples() {
        let rho = DensityMatrix::diagonal([0.1, 0.2, 0.3, 0.4]).unwrap();
        let w = to_real_form(&rho);
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(w.entries[i][j], rho.entries[i][j].re);
            }
        }

        let mut e = DensityMatrix::diagonal([0.5, 0.5, 0.0, 0.0])
            .unwrap()
            .entries;
        e[0][1] = c(0.0, 0.1);
        e[1][0] = c(0.0, -0.1);
        let rho = DensityMatrix::new(e).unwrap();
        let w = to_real_form(&rho);
        assert_eq!(w.entries[0][1], 0.1);
        assert_eq!(w.entries[1][0], -0.1);
        assert_eq!(from_real_form(&w), rho);
    }

    #[test]
    fn density_matrix_validation() {
        let mut e = DensityMatrix::basis_state(0).entries;
        e[0][1] = c(0.1, 0.0);
        assert!(matches!(DensityMatrix::new(e), Err(Error::StateInvalid(_))));
        assert!(DensityMatrix::diagonal([0.5, 0.5, 0.5, 0.0]).is_err());
        assert!(DensityMatrix::diagonal([1.5, -0.5, 0.0, 0.0]).is_err());
    }

    #[test]
    fn params_validation() {
        assert!(QubitPairParams::new(25.6, 24.8, 119.0, -200.0, -200.0, 0.01).is_ok());
        assert!(QubitPairParams::new(0.0, 24.8, 119.0, -200.0, -200.0, 0.01).is_err());
        assert!(QubitPairParams::new(25.6, 24.8, -1.0, -200.0, -200.0, 0.01).is_err());
        assert!(QubitPairParams::new(25.6, 24.8, 119.0, -200.0, -200.0, 0.0).is_err());
        let p = QubitPairParams::device();
        assert!(p.in_operating_regime(1.5));
        assert!(!p.with_baselines(-50.0, -200.0).in_operating_regime(1.5));
    }
}
