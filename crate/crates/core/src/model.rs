//! Physical parameters and 2×2 building blocks of the driven, damped
//! two-level system: Hamiltonians, jump operators, the density matrix and
//! its Hilbert–Schmidt vector, and the rotating-frame unitary.
//!
//! Energies are in units with ħ = 1. Basis order is (|e⟩, |g⟩).

use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};

/// Tolerance for identities that are pure arithmetic (unitarity, round trips).
pub const STRUCTURAL_TOL: f64 = 1e-14;
/// Tolerance for physical-state checks (trace, Hermiticity, positivity).
pub const PHYSICAL_TOL: f64 = 1e-12;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Rotating-frame parameters: detuning δ, drive amplitude d and coupling Γ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModelParams {
    pub delta: f64,
    pub d: f64,
    pub gamma: f64,
}

impl ModelParams {
    pub fn new(delta: f64, d: f64, gamma: f64) -> Result<Self> {
        if !(delta.is_finite() && d.is_finite() && gamma.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "non-finite parameters (δ={delta}, d={d}, Γ={gamma})"
            )));
        }
        if gamma < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "Γ must be ≥ 0, got {gamma}"
            )));
        }
        Ok(Self { delta, d, gamma })
    }

    /// Parameters at δ = 1 with the scaled drive d̃ and coupling Γ̃.
    pub fn scaled(d_tilde: f64, gamma_tilde: f64) -> Result<Self> {
        Self::new(1.0, d_tilde, gamma_tilde)
    }

    /// (d/δ, Γ/δ). Fails for δ = 0, where the scaled coordinates do not exist.
    pub fn scaled_coordinates(&self) -> Result<(f64, f64)> {
        if self.delta == 0.0 {
            return Err(Error::Domain(
                "δ = 0: the scaled coordinates d̃ = d/δ and Γ̃ = Γ/δ are undefined".into(),
            ));
        }
        Ok((self.d / self.delta, self.gamma / self.delta))
    }

    /// δ² + d² + Γ², the natural squared energy scale.
    pub fn energy_scale_sq(&self) -> f64 {
        self.delta * self.delta + self.d * self.d + self.gamma * self.gamma
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            delta: s * self.delta,
            d: s * self.d,
            gamma: s * self.gamma,
        }
    }
}

/// Lab-frame parameters: level splitting Δ = E_e − E_g, drive frequency ω,
/// drive amplitude d and coupling Γ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LabParams {
    pub splitting: f64,
    pub omega: f64,
    pub d: f64,
    pub gamma: f64,
}

impl LabParams {
    pub fn new(splitting: f64, omega: f64, d: f64, gamma: f64) -> Result<Self> {
        ModelParams::new(splitting - omega, d, gamma)?;
        if !omega.is_finite() || !splitting.is_finite() {
            return Err(Error::InvalidParameter("non-finite Δ or ω".into()));
        }
        Ok(Self {
            splitting,
            omega,
            d,
            gamma,
        })
    }

    pub fn detuning(&self) -> f64 {
        self.splitting - self.omega
    }

    /// The time-independent problem seen from the rotating frame.
    pub fn rotating(&self) -> ModelParams {
        ModelParams {
            delta: self.detuning(),
            d: self.d,
            gamma: self.gamma,
        }
    }
}

/// A 2×2 complex matrix in the (|e⟩, |g⟩) basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexMatrix2(pub [[Complex64; 2]; 2]);

impl ComplexMatrix2 {
    pub fn zero() -> Self {
        Self([[Complex64::new(0.0, 0.0); 2]; 2])
    }

    pub fn identity() -> Self {
        Self::diag(c(1.0), c(1.0))
    }

    pub fn diag(a: Complex64, b: Complex64) -> Self {
        Self([[a, c(0.0)], [c(0.0), b]])
    }

    pub fn from_real(m: [[f64; 2]; 2]) -> Self {
        Self([[c(m[0][0]), c(m[0][1])], [c(m[1][0]), c(m[1][1])]])
    }

    pub fn adjoint(&self) -> Self {
        let m = &self.0;
        Self([
            [m[0][0].conj(), m[1][0].conj()],
            [m[0][1].conj(), m[1][1].conj()],
        ])
    }

    pub fn trace(&self) -> Complex64 {
        self.0[0][0] + self.0[1][1]
    }

    pub fn scale(&self, s: Complex64) -> Self {
        let m = &self.0;
        Self([[s * m[0][0], s * m[0][1]], [s * m[1][0], s * m[1][1]]])
    }

    pub fn commutator(&self, other: &Self) -> Self {
        *self * *other - *other * *self
    }

    /// Largest entrywise modulus.
    pub fn max_norm(&self) -> f64 {
        self.0
            .iter()
            .flatten()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        (*self - *other).max_norm()
    }

    pub fn hermiticity_defect(&self) -> f64 {
        self.max_abs_diff(&self.adjoint())
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().flatten().all(|z| z.is_finite())
    }
}

impl Add for ComplexMatrix2 {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        let (a, b) = (&self.0, &rhs.0);
        Self([
            [a[0][0] + b[0][0], a[0][1] + b[0][1]],
            [a[1][0] + b[1][0], a[1][1] + b[1][1]],
        ])
    }
}

impl Sub for ComplexMatrix2 {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        let (a, b) = (&self.0, &rhs.0);
        Self([
            [a[0][0] - b[0][0], a[0][1] - b[0][1]],
            [a[1][0] - b[1][0], a[1][1] - b[1][1]],
        ])
    }
}

impl Mul for ComplexMatrix2 {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let (a, b) = (&self.0, &rhs.0);
        let mut out = [[c(0.0); 2]; 2];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, entry) in row.iter_mut().enumerate() {
                *entry = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        Self(out)
    }
}

/// Density matrix [[ρ_ee, ρ_eg], [ρ_ge, ρ_gg]].
///
/// Construction does not enforce the physical invariants, since intermediate
/// integrator states and perturbed matrices also use this type. Call
/// [`DensityMatrix::validate`] where a physical state is required.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix {
    pub ee: Complex64,
    pub eg: Complex64,
    pub ge: Complex64,
    pub gg: Complex64,
}

impl DensityMatrix {
    pub fn new(ee: Complex64, eg: Complex64, ge: Complex64, gg: Complex64) -> Self {
        Self { ee, eg, ge, gg }
    }

    /// Hermitian state from real populations and the coherence ρ_eg.
    pub fn hermitian(ee: f64, gg: f64, eg: Complex64) -> Self {
        Self::new(c(ee), eg, eg.conj(), c(gg))
    }

    pub fn excited() -> Self {
        Self::hermitian(1.0, 0.0, c(0.0))
    }

    pub fn ground() -> Self {
        Self::hermitian(0.0, 1.0, c(0.0))
    }

    /// Maximally mixed state I/2.
    pub fn mixed() -> Self {
        Self::hermitian(0.5, 0.5, c(0.0))
    }

    /// Equal superposition (|e⟩ + |g⟩)/√2.
    pub fn coherent() -> Self {
        Self::hermitian(0.5, 0.5, c(0.5))
    }

    pub fn from_matrix(m: &ComplexMatrix2) -> Self {
        Self::new(m.0[0][0], m.0[0][1], m.0[1][0], m.0[1][1])
    }

    pub fn as_matrix(&self) -> ComplexMatrix2 {
        ComplexMatrix2([[self.ee, self.eg], [self.ge, self.gg]])
    }

    pub fn trace(&self) -> Complex64 {
        self.ee + self.gg
    }

    pub fn trace_deviation(&self) -> f64 {
        (self.trace() - c(1.0)).norm()
    }

    pub fn hermiticity_defect(&self) -> f64 {
        self.as_matrix().hermiticity_defect()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.as_matrix().max_abs_diff(&other.as_matrix())
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn eigenvalues(&self) -> [f64; 2] {
        let h = (self.as_matrix() + self.as_matrix().adjoint()).scale(c(0.5));
        let (a, b, off) = (h.0[0][0].re, h.0[1][1].re, h.0[0][1].norm());
        let mean = 0.5 * (a + b);
        let radius = (0.25 * (a - b) * (a - b) + off * off).sqrt();
        [mean - radius, mean + radius]
    }

    /// Checks Hermiticity, unit trace and positivity to `tol`.
    pub fn validate(&self, tol: f64) -> Result<()> {
        let herm = self.hermiticity_defect();
        if herm > tol {
            return Err(Error::InvalidParameter(format!(
                "density matrix is not Hermitian (defect {herm:e})"
            )));
        }
        let tr = self.trace_deviation();
        if tr > tol {
            return Err(Error::InvalidParameter(format!(
                "density matrix trace deviates from 1 by {tr:e}"
            )));
        }
        let low = self.eigenvalues()[0];
        if low < -tol {
            return Err(Error::InvalidParameter(format!(
                "density matrix has negative eigenvalue {low:e}"
            )));
        }
        Ok(())
    }
}

/// Hilbert–Schmidt vector Ψ = (ρ_eg, ρ_ge, ρ_ee, ρ_gg). The component order
/// is part of the public contract.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HsVector(pub [Complex64; 4]);

impl HsVector {
    pub const EG: usize = 0;
    pub const GE: usize = 1;
    pub const EE: usize = 2;
    pub const GG: usize = 3;

    pub fn zero() -> Self {
        Self([c(0.0); 4])
    }

    /// Bilinear product Σ aᵢ bᵢ (no conjugation), used for left·right pairings.
    pub fn dot(&self, other: &Self) -> Complex64 {
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self(self.0.map(|z| s * z))
    }

    pub fn max_norm(&self) -> f64 {
        self.0.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn l2_norm(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// |ρ_eg − conj(ρ_ge)| together with the imaginary parts of the populations.
    pub fn hermiticity_defect(&self) -> f64 {
        let [eg, ge, ee, gg] = self.0;
        (eg - ge.conj()).norm().max(ee.im.abs()).max(gg.im.abs())
    }
}

impl Add for HsVector {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self(std::array::from_fn(|i| self.0[i] + rhs.0[i]))
    }
}

impl Sub for HsVector {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self(std::array::from_fn(|i| self.0[i] - rhs.0[i]))
    }
}

pub fn vectorize(rho: &DensityMatrix) -> HsVector {
    HsVector([rho.eg, rho.ge, rho.ee, rho.gg])
}

pub fn devectorize(psi: &HsVector) -> DensityMatrix {
    let [eg, ge, ee, gg] = psi.0;
    DensityMatrix { ee, eg, ge, gg }
}

/// Like [`devectorize`], but also reports the Hermiticity defect when it
/// exceeds `tol`. The conversion itself always succeeds.
pub fn devectorize_flagged(psi: &HsVector, tol: f64) -> (DensityMatrix, Option<f64>) {
    let defect = psi.hermiticity_defect();
    (devectorize(psi), (defect > tol).then_some(defect))
}

/// Lab-frame Hamiltonian after the rotating-wave approximation,
/// [[Δ, (d/2)e^{−iωt}], [(d/2)e^{iωt}, 0]].
pub fn hamiltonian_rwa(params: &LabParams, t: f64) -> ComplexMatrix2 {
    let phase = Complex64::from_polar(1.0, -params.omega * t);
    let half = 0.5 * params.d;
    ComplexMatrix2([
        [c(params.splitting), phase * half],
        [phase.conj() * half, c(0.0)],
    ])
}

/// Time-independent rotating-frame Hamiltonian [[δ, d/2], [d/2, 0]].
pub fn hamiltonian_rotating(params: &ModelParams) -> ComplexMatrix2 {
    let half = 0.5 * params.d;
    ComplexMatrix2::from_real([[params.delta, half], [half, 0.0]])
}

/// Jump operators (c, c†): c = |g⟩⟨e| relaxes, c† = |e⟩⟨g| excites.
pub fn jump_operators() -> (ComplexMatrix2, ComplexMatrix2) {
    let lower = ComplexMatrix2::from_real([[0.0, 0.0], [1.0, 0.0]]);
    let raise = ComplexMatrix2::from_real([[0.0, 1.0], [0.0, 0.0]]);
    (lower, raise)
}

/// U(t) = diag(e^{−iωt}, 1): a phase on the excited level only.
pub fn frame_unitary(omega: f64, t: f64) -> ComplexMatrix2 {
    ComplexMatrix2::diag(Complex64::from_polar(1.0, -omega * t), c(1.0))
}

/// ρ = U(t) ρ̃ U(t)†. Populations are untouched; ρ_eg picks up e^{−iωt}.
pub fn rotate_to_lab(rho_tilde: &DensityMatrix, omega: f64, t: f64) -> DensityMatrix {
    let phase = Complex64::from_polar(1.0, -omega * t);
    DensityMatrix {
        ee: rho_tilde.ee,
        eg: phase * rho_tilde.eg,
        ge: phase.conj() * rho_tilde.ge,
        gg: rho_tilde.gg,
    }
}

/// Inverse of [`rotate_to_lab`]: ρ̃ = U(t)† ρ U(t).
pub fn rotate_to_frame(rho: &DensityMatrix, omega: f64, t: f64) -> DensityMatrix {
    rotate_to_lab(rho, -omega, t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn lab(splitting: f64, omega: f64, d: f64) -> LabParams {
        LabParams::new(splitting, omega, d, 0.1).unwrap()
    }

    #[test]
    fn rwa_hamiltonian_special_values() {
        let h = hamiltonian_rwa(&lab(1.0, 0.0, 2.0), 0.0);
        assert!(h.max_abs_diff(&ComplexMatrix2::from_real([[1.0, 1.0], [1.0, 0.0]])) < 1e-15);

        let h = hamiltonian_rwa(&lab(1.0, PI, 2.0), 1.0);
        assert!(h.max_abs_diff(&ComplexMatrix2::from_real([[1.0, -1.0], [-1.0, 0.0]])) < 1e-15);
    }

    #[test]
    fn rotating_hamiltonian_special_values() {
        let h = hamiltonian_rotating(&ModelParams::new(1.0, 0.0, 3.0).unwrap());
        assert_eq!(h, ComplexMatrix2::diag(c(1.0), c(0.0)));
        let h = hamiltonian_rotating(&ModelParams::new(1.0, 1.0, 0.0).unwrap());
        assert_eq!(h, ComplexMatrix2::from_real([[1.0, 0.5], [0.5, 0.0]]));
    }

    #[test]
    fn rotating_hamiltonian_is_rwa_at_t0_minus_frame_term() {
        for &omega in &[0.0, 0.3, -1.7, 5.0] {
            let p = ModelParams::new(0.8, 1.3, 0.2).unwrap();
            let lab = LabParams::new(p.delta + omega, omega, p.d, p.gamma).unwrap();
            let shifted = hamiltonian_rwa(&lab, 0.0) - ComplexMatrix2::diag(c(omega), c(0.0));
            assert!(shifted.max_abs_diff(&hamiltonian_rotating(&p)) < 1e-14);
        }
    }

    #[test]
    fn jump_operator_algebra() {
        let (lower, raise) = jump_operators();
        // c|e⟩ = |g⟩
        let e = [c(1.0), c(0.0)];
        let image = [
            lower.0[0][0] * e[0] + lower.0[0][1] * e[1],
            lower.0[1][0] * e[0] + lower.0[1][1] * e[1],
        ];
        assert_eq!(image, [c(0.0), c(1.0)]);
        assert_eq!(raise * lower, ComplexMatrix2::diag(c(1.0), c(0.0)));
        assert_eq!(raise.adjoint(), lower);
    }

    #[test]
    fn frame_unitary_values() {
        assert_eq!(frame_unitary(2.3, 0.0), ComplexMatrix2::identity());
        let u = frame_unitary(PI, 1.0);
        assert!(u.max_abs_diff(&ComplexMatrix2::diag(c(-1.0), c(1.0))) < 1e-15);
    }

    #[test]
    fn rotate_to_lab_fixed_cases() {
        let diag = DensityMatrix::hermitian(0.3, 0.7, c(0.0));
        assert_eq!(rotate_to_lab(&diag, 1.9, 4.2), diag);
        let rho = DensityMatrix::hermitian(0.4, 0.6, Complex64::new(0.1, -0.2));
        assert_eq!(rotate_to_lab(&rho, 3.0, 0.0), rho);
    }

    #[test]
    fn vectorize_ordering() {
        let psi = vectorize(&DensityMatrix::hermitian(0.3, 0.7, c(0.0)));
        assert_eq!(psi.0, [c(0.0), c(0.0), c(0.3), c(0.7)]);

        let psi = vectorize(&DensityMatrix::hermitian(
            0.5,
            0.5,
            Complex64::new(0.1, 0.2),
        ));
        assert_eq!(psi.0[HsVector::EG], Complex64::new(0.1, 0.2));
        assert_eq!(psi.0[HsVector::GE], Complex64::new(0.1, -0.2));
    }

    #[test]
    fn devectorize_flags_broken_pairing() {
        let psi = HsVector([c(0.1), c(0.3), c(0.5), c(0.5)]);
        let (rho, flag) = devectorize_flagged(&psi, PHYSICAL_TOL);
        assert_eq!(rho.eg, c(0.1));
        assert!((flag.unwrap() - 0.2).abs() < 1e-15);

        let good = vectorize(&DensityMatrix::coherent());
        assert_eq!(devectorize_flagged(&good, PHYSICAL_TOL).1, None);
    }

    #[test]
    fn presets_are_physical() {
        for rho in [
            DensityMatrix::excited(),
            DensityMatrix::ground(),
            DensityMatrix::mixed(),
            DensityMatrix::coherent(),
        ] {
            rho.validate(PHYSICAL_TOL).unwrap();
        }
        assert!(DensityMatrix::hermitian(1.5, -0.5, c(0.0))
            .validate(PHYSICAL_TOL)
            .is_err());
    }

    #[test]
    fn params_validation() {
        assert!(ModelParams::new(1.0, 1.0, -0.1).is_err());
        assert!(ModelParams::new(f64::NAN, 1.0, 0.1).is_err());
        assert!(ModelParams::new(0.0, 1.0, 1.0)
            .unwrap()
            .scaled_coordinates()
            .is_err());
        let lab = LabParams::new(2.0, 0.5, 1.0, 0.3).unwrap();
        assert_eq!(lab.detuning(), 1.5);
    }
}
