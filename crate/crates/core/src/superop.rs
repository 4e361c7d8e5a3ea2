//! The 4×4 Lindblad super-operator acting on Hilbert–Schmidt vectors, the
//! operator-form right-hand side, and the stationary state.
//!
//! Convention: the equation of motion is i dΨ/dt = L Ψ, so L is kept free of
//! the factor −i. The integrators in [`crate::dynamics`] apply it.

use std::ops::Mul;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{jump_operators, ComplexMatrix2, DensityMatrix, HsVector, ModelParams};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Superoperator(pub [[Complex64; 4]; 4]);

impl Superoperator {
    pub fn identity() -> Self {
        let mut m = [[Complex64::new(0.0, 0.0); 4]; 4];
        for (i, row) in m.iter_mut().enumerate() {
            row[i] = Complex64::new(1.0, 0.0);
        }
        Self(m)
    }

    pub fn diag(entries: [Complex64; 4]) -> Self {
        let mut m = [[Complex64::new(0.0, 0.0); 4]; 4];
        for (i, row) in m.iter_mut().enumerate() {
            row[i] = entries[i];
        }
        Self(m)
    }

    /// L Ψ.
    pub fn apply(&self, psi: &HsVector) -> HsVector {
        HsVector(std::array::from_fn(|i| {
            self.0[i].iter().zip(&psi.0).map(|(a, b)| a * b).sum()
        }))
    }

    /// Row vector times L: (Φ L)_j = Σ_i Φ_i L_ij.
    pub fn apply_left(&self, row: &HsVector) -> HsVector {
        HsVector(std::array::from_fn(|j| {
            (0..4).map(|i| row.0[i] * self.0[i][j]).sum()
        }))
    }

    pub fn max_norm(&self) -> f64 {
        self.0
            .iter()
            .flatten()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    pub fn trace(&self) -> Complex64 {
        (0..4).map(|i| self.0[i][i]).sum()
    }

    /// L − z I.
    pub fn shifted(&self, z: Complex64) -> Self {
        let mut m = self.0;
        for (i, row) in m.iter_mut().enumerate() {
            row[i] -= z;
        }
        Self(m)
    }

    /// Largest entry of row(ρ_ee) + row(ρ_gg); zero iff d/dt Tr ρ = 0.
    pub fn trace_preservation_defect(&self) -> f64 {
        (0..4)
            .map(|j| (self.0[HsVector::EE][j] + self.0[HsVector::GG][j]).norm())
            .fold(0.0, f64::max)
    }

    /// ‖P(−L*)P − L‖_max where P exchanges the first two indices.
    pub fn conjugation_symmetry_defect(&self) -> f64 {
        let swap = |k: usize| match k {
            0 => 1,
            1 => 0,
            k => k,
        };
        let mut worst: f64 = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                let mirrored = -self.0[swap(i)][swap(j)].conj();
                worst = worst.max((mirrored - self.0[i][j]).norm());
            }
        }
        worst
    }
}

impl Mul<&HsVector> for &Superoperator {
    type Output = HsVector;
    fn mul(self, rhs: &HsVector) -> HsVector {
        self.apply(rhs)
    }
}

/// The super-operator of the rotating-frame problem, row by row:
///
/// ```text
/// [ δ−iΓ/2     0       −d/2   d/2 ]
/// [   0     −δ−iΓ/2    d/2   −d/2 ]
/// [ −d/2      d/2      −iΓ     0  ]
/// [  d/2     −d/2       iΓ     0  ]
/// ```
pub fn build_lindblad(params: &ModelParams) -> Superoperator {
    let ModelParams { delta, d, gamma } = *params;
    let r = |x: f64| Complex64::new(x, 0.0);
    let h = 0.5 * d;
    Superoperator([
        [Complex64::new(delta, -0.5 * gamma), r(0.0), r(-h), r(h)],
        [r(0.0), Complex64::new(-delta, -0.5 * gamma), r(h), r(-h)],
        [r(-h), r(h), Complex64::new(0.0, -gamma), r(0.0)],
        [r(h), r(-h), Complex64::new(0.0, gamma), r(0.0)],
    ])
}

/// dρ/dt = −i[H, ρ] + Γ(cρc† − ½c†cρ − ½ρc†c).
pub fn lindblad_rhs(h: &ComplexMatrix2, gamma: f64, rho: &DensityMatrix) -> ComplexMatrix2 {
    let (lower, raise) = jump_operators();
    let r = rho.as_matrix();
    let unitary = h.commutator(&r).scale(Complex64::new(0.0, -1.0));
    let number = raise * lower;
    let dissipator = lower * r * raise - (number * r + r * number).scale(Complex64::new(0.5, 0.0));
    unitary + dissipator.scale(Complex64::new(gamma, 0.0))
}

fn null_norm(params: &ModelParams) -> Result<f64> {
    let ModelParams { delta, d, gamma } = *params;
    let n0 = 4.0 * delta * delta + 2.0 * d * d + gamma * gamma;
    if n0 == 0.0 {
        return Err(Error::DegenerateParameters);
    }
    Ok(n0)
}

/// Left and right eigenvectors of the null eigenvalue z₀ = 0, normalized so
/// that left·right = 1. The left vector is the trace functional (0, 0, 1, 1).
pub fn null_eigenvectors(params: &ModelParams) -> Result<(HsVector, HsVector)> {
    let n0 = null_norm(params)?;
    let ModelParams { delta, d, gamma } = *params;
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    let left = HsVector([zero, zero, one, one]);
    let right = HsVector([
        -d * Complex64::new(2.0 * delta, gamma),
        -d * Complex64::new(2.0 * delta, -gamma),
        Complex64::new(d * d, 0.0),
        Complex64::new(4.0 * delta * delta + d * d + gamma * gamma, 0.0),
    ])
    .scale(Complex64::new(1.0 / n0, 0.0));
    Ok((left, right))
}

/// The stationary state
/// ρ_eq = [[d², −d(2δ+iΓ)], [−d(2δ−iΓ), 4δ²+d²+Γ²]] / (4δ²+2d²+Γ²).
pub fn equilibrium_state(params: &ModelParams) -> Result<DensityMatrix> {
    let n0 = null_norm(params)?;
    let ModelParams { delta, d, gamma } = *params;
    let ee = d * d / n0;
    let gg = (4.0 * delta * delta + d * d + gamma * gamma) / n0;
    let eg = -d * Complex64::new(2.0 * delta, gamma) / n0;
    Ok(DensityMatrix::hermitian(ee, gg, eg))
}
