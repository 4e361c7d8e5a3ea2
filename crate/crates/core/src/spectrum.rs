//! Eigenvalues and biorthogonal eigenvectors of the super-operator.
//!
//! The three non-null eigenvalues are the roots of a depressed cubic and are
//! evaluated with Cardano's formulas,
//!
//! ```text
//! z₁ = −i(2Γ/3 + u + v)
//! z₂ = −i(2Γ/3 + e^{2πi/3} u + e^{−2πi/3} v)
//! z₃ = −i(2Γ/3 + e^{−2πi/3} u + e^{2πi/3} v)
//! ```
//!
//! with u³ = q + √(p³+q²), v³ = q − √(p³+q²) and uv = −p. An independent
//! dense eigensolver ([`eigenvalues_numeric`]) and the characteristic
//! determinant ([`characteristic_residual`]) serve as cross-checks.

use std::f64::consts::FRAC_PI_3;

use nalgebra::Matrix4;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{HsVector, ModelParams};
use crate::superop::{build_lindblad, null_eigenvectors, Superoperator};

/// Below this magnitude u (or v) is treated as zero when forming v = −p/u.
const CUBE_ROOT_FLOOR: f64 = 1e-100;
/// Relative threshold on max(|p|, |q|) for the triple-root shortcut.
pub const TRIPLE_ROOT_TOL: f64 = 1e-12;
/// Relative pair gap below which two eigenvalues are treated as coalesced.
pub const COALESCENCE_TOL: f64 = 1e-6;
/// Relative |Φ^L·Φ^R| below which the eigenvector normalization is refused.
pub const OVERLAP_TOL: f64 = 1e-10;

const SCHUR_MAX_ITER: usize = 10_000;

/// Cubic parameters of the non-null eigenvalue problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CardanoParams {
    pub p: f64,
    pub q: f64,
    /// p³ + q².
    pub disc: f64,
    pub u: Complex64,
    pub v: Complex64,
    /// Set when p and q are both below the triple-root threshold; u = v = 0.
    pub triple: bool,
}

pub fn cubic_pq(params: &ModelParams) -> (f64, f64) {
    let ModelParams { delta, d, gamma } = *params;
    let (d2, g2, delta2) = (d * d, gamma * gamma, delta * delta);
    let p = (delta2 + d2 - g2 / 12.0) / 3.0;
    let q = gamma / 6.0 * (delta2 - d2 / 2.0 + g2 / 36.0);
    (p, q)
}

pub fn cardano_params(params: &ModelParams) -> CardanoParams {
    let (p, q) = cubic_pq(params);
    let disc = p * p * p + q * q;
    let zero = Complex64::new(0.0, 0.0);

    if p.abs().max(q.abs()) < TRIPLE_ROOT_TOL * params.energy_scale_sq().max(1.0) {
        return CardanoParams {
            p,
            q,
            disc,
            u: zero,
            v: zero,
            triple: true,
        };
    }

    let (u, v) = if disc >= 0.0 {
        let s = disc.sqrt();
        // Take the cube root of whichever radicand avoids cancellation and
        // recover the other from uv = −p.
        let (u, v) = if q >= 0.0 {
            let u = (q + s).cbrt();
            let v = if u.abs() > CUBE_ROOT_FLOOR {
                -p / u
            } else {
                (q - s).cbrt()
            };
            (u, v)
        } else {
            let v = (q - s).cbrt();
            let u = if v.abs() > CUBE_ROOT_FLOOR {
                -p / v
            } else {
                (q + s).cbrt()
            };
            (u, v)
        };
        (Complex64::new(u, 0.0), Complex64::new(v, 0.0))
    } else {
        // √disc = +i√|disc|; then |u|² = −p and v = −p/u = conj(u). The
        // cube root nearest the real root of q keeps z₂ = z₃ as the pair
        // that coalesces on both EP2 curves.
        let radicand = Complex64::new(q, (-disc).sqrt());
        let mut theta = radicand.arg() / 3.0;
        if q < 0.0 {
            theta += 2.0 * FRAC_PI_3;
        }
        let u = Complex64::from_polar(radicand.norm().cbrt(), theta);
        (u, u.conj())
    };

    CardanoParams {
        p,
        q,
        disc,
        u,
        v,
        triple: false,
    }
}

/// (z₀, z₁, z₂, z₃) in the labeling of the Cardano formulas, not sorted.
pub fn eigenvalues_closed_form(params: &ModelParams) -> [Complex64; 4] {
    let cp = cardano_params(params);
    let shift = 2.0 * params.gamma / 3.0;
    let zero = Complex64::new(0.0, 0.0);

    if cp.triple {
        let z = Complex64::new(0.0, -shift);
        return [zero, z, z, z];
    }

    if cp.disc >= 0.0 {
        // Real u, v: z₂ and z₃ are mirror images across the imaginary axis.
        let (u, v) = (cp.u.re, cp.v.re);
        let re = 0.5 * 3f64.sqrt() * (u - v);
        let im = -(shift - 0.5 * (u + v));
        [
            zero,
            Complex64::new(0.0, -(shift + u + v)),
            Complex64::new(re, im),
            Complex64::new(-re, im),
        ]
    } else {
        // v = conj(u): each bracket is 2 Re(e^{iφ} u), so all three are imaginary.
        let (r, theta) = (cp.u.norm(), cp.u.arg());
        let bracket = |phi: f64| 2.0 * r * (theta + phi).cos();
        [
            zero,
            Complex64::new(0.0, -(shift + bracket(0.0))),
            Complex64::new(0.0, -(shift + bracket(2.0 * FRAC_PI_3))),
            Complex64::new(0.0, -(shift + bracket(-2.0 * FRAC_PI_3))),
        ]
    }
}

/// A left/right eigenvector pair with left·right = 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenPair {
    pub eigenvalue: Complex64,
    pub left: HsVector,
    pub right: HsVector,
}

impl EigenPair {
    /// max(‖L r − z r‖/‖r‖, ‖l L − z l‖/‖l‖) in the max norm.
    pub fn relative_residual(&self, l: &Superoperator) -> f64 {
        let z = self.eigenvalue;
        let right = (l.apply(&self.right) - self.right.scale(z)).max_norm() / self.right.max_norm();
        let left =
            (l.apply_left(&self.left) - self.left.scale(z)).max_norm() / self.left.max_norm();
        right.max(left)
    }
}

/// Closed-form eigenvectors of the non-null eigenvalue `z` (label `nu` ∈ 1..=3).
///
/// The left vector is returned as printed in closed form; the right vector
/// carries the normalization 1/N so that left·right = 1.
pub fn eigenvectors_closed_form(
    params: &ModelParams,
    nu: usize,
    z: Complex64,
) -> Result<EigenPair> {
    if !(1..=3).contains(&nu) {
        return Err(Error::InvalidParameter(format!(
            "eigenvalue label must be 1..=3, got {nu}"
        )));
    }
    let ModelParams { delta, d, gamma } = *params;
    let ig = Complex64::new(0.0, gamma);
    let w = ig + 2.0 * delta + 2.0 * z;
    // a = (iΓ + z)w − d² cancels to O(d⁴) for the coherence eigenvalue near
    // −δ − iΓ/2. The first row of L gives the equivalent a = d²w/s, which is
    // accurate whenever |s| ≥ |w|.
    let s = ig - 2.0 * delta + 2.0 * z;
    let a = if s.norm() >= w.norm() && s.norm() > 0.0 {
        d * d * w / s
    } else {
        (ig + z) * w - d * d
    };

    let left = HsVector([
        2.0 * z * a,
        -2.0 * d * d * z,
        -d * (z - ig) * w,
        d * (ig + z) * w,
    ]);
    let raw_right = HsVector([2.0 * a, Complex64::new(-2.0 * d * d, 0.0), -d * w, d * w]);

    let scale = left.l2_norm() * raw_right.l2_norm();
    if scale == 0.0 || !scale.is_finite() {
        return Err(Error::VanishingEigenvector { nu });
    }
    let n = left.dot(&raw_right);
    let overlap = n.norm() / scale;
    if overlap < OVERLAP_TOL {
        return Err(Error::NearDegenerate { nu, overlap });
    }
    Ok(EigenPair {
        eigenvalue: z,
        left,
        right: raw_right.scale(n.inv()),
    })
}

fn coalesced(a: Complex64, b: Complex64) -> bool {
    (a - b).norm() < COALESCENCE_TOL * a.norm().max(1.0)
}

/// Eigenvalues, eigenvectors where they are well defined, and diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub eigenvalues: [Complex64; 4],
    /// `None` for eigenvalues involved in a coalescence or where the closed
    /// form vanishes.
    pub pairs: [Option<EigenPair>; 4],
    /// Relative eigenvector residuals, see [`EigenPair::relative_residual`].
    pub residuals: [Option<f64>; 4],
    /// |det(L − zν I)| per eigenvalue.
    pub char_residuals: [f64; 4],
    /// `degenerate[a][b]` is set when za and zb are within the coalescence threshold.
    pub degenerate: [[bool; 4]; 4],
}

impl Spectrum {
    pub fn compute(params: &ModelParams) -> Self {
        let l = build_lindblad(params);
        let eigenvalues = eigenvalues_closed_form(params);

        let mut degenerate = [[false; 4]; 4];
        for a in 0..4 {
            for b in 0..4 {
                degenerate[a][b] = a != b && coalesced(eigenvalues[a], eigenvalues[b]);
            }
        }
        let is_simple = |nu: usize| !degenerate[nu].iter().any(|&f| f);

        let mut pairs = [None; 4];
        if is_simple(0) {
            if let Ok((left, right)) = null_eigenvectors(params) {
                pairs[0] = Some(EigenPair {
                    eigenvalue: eigenvalues[0],
                    left,
                    right,
                });
            }
        }
        for nu in 1..4 {
            if is_simple(nu) {
                pairs[nu] = eigenvectors_closed_form(params, nu, eigenvalues[nu]).ok();
            }
        }
        let residuals = pairs.map(|p| p.map(|p| p.relative_residual(&l)));
        let char_residuals = eigenvalues.map(|z| characteristic_residual(&l, z));

        Self {
            eigenvalues,
            pairs,
            residuals,
            char_residuals,
            degenerate,
        }
    }

    pub fn has_coalescence(&self) -> bool {
        self.degenerate.iter().flatten().any(|&f| f)
    }

    /// [left_μ · right_ν]; `None` unless all four pairs exist.
    pub fn biorthogonality(&self) -> Option<[[Complex64; 4]; 4]> {
        let pairs: Vec<EigenPair> = self.pairs.iter().copied().collect::<Option<_>>()?;
        Some(std::array::from_fn(|m| {
            std::array::from_fn(|n| pairs[m].left.dot(&pairs[n].right))
        }))
    }
}

/// |det(L − zI)| by LU factorization with partial pivoting.
pub fn characteristic_residual(l: &Superoperator, z: Complex64) -> f64 {
    determinant(&l.shifted(z)).norm()
}

pub fn determinant(m: &Superoperator) -> Complex64 {
    let mut a = m.0;
    let mut det = Complex64::new(1.0, 0.0);
    for k in 0..4 {
        let pivot = (k..4)
            .max_by(|&i, &j| a[i][k].norm().total_cmp(&a[j][k].norm()))
            .unwrap_or(k);
        if a[pivot][k].norm() == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        if pivot != k {
            a.swap(pivot, k);
            det = -det;
        }
        det *= a[k][k];
        for i in k + 1..4 {
            let factor = a[i][k] / a[k][k];
            for j in k..4 {
                let update = factor * a[k][j];
                a[i][j] -= update;
            }
        }
    }
    det
}

/// Coefficients c₀..c₄ of det(zI − L) = Σ cₖ zᵏ (c₄ = 1), by Faddeev–LeVerrier.
pub fn characteristic_polynomial(l: &Superoperator) -> [Complex64; 5] {
    let n = 4;
    let mut coeffs = [Complex64::new(0.0, 0.0); 5];
    coeffs[n] = Complex64::new(1.0, 0.0);
    let mut m = [[Complex64::new(0.0, 0.0); 4]; 4];
    for k in 1..=n {
        // M_k = L M_{k−1} + c_{n−k+1} I
        let mut next = [[Complex64::new(0.0, 0.0); 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                next[i][j] = (0..4).map(|r| l.0[i][r] * m[r][j]).sum();
            }
            next[i][i] += coeffs[n - k + 1];
        }
        m = next;
        let trace: Complex64 = (0..4)
            .map(|i| (0..4).map(|r| l.0[i][r] * m[r][i]).sum::<Complex64>())
            .sum();
        coeffs[n - k] = -trace / k as f64;
    }
    coeffs
}

/// d/dz det(zI − L) at z.
pub fn characteristic_derivative(l: &Superoperator, z: Complex64) -> Complex64 {
    let c = characteristic_polynomial(l);
    (1..5)
        .rev()
        .fold(Complex64::new(0.0, 0.0), |acc, k| acc * z + c[k] * k as f64)
}

/// The four eigenvalues of `l` from a dense complex Schur decomposition,
/// independent of the Cardano formulas.
pub fn eigenvalues_numeric(l: &Superoperator) -> Result<[Complex64; 4]> {
    let m = Matrix4::from_fn(|i, j| l.0[i][j]);
    let schur = m
        .try_schur(f64::EPSILON, SCHUR_MAX_ITER)
        .ok_or(Error::NonConvergence {
            iterations: SCHUR_MAX_ITER,
        })?;
    let ev = schur.eigenvalues().ok_or(Error::NonConvergence {
        iterations: SCHUR_MAX_ITER,
    })?;
    Ok([ev[0], ev[1], ev[2], ev[3]])
}

/// Smallest, over all pairings, of the largest distance between paired entries.
pub fn matched_distance(a: &[Complex64; 4], b: &[Complex64; 4]) -> f64 {
    let mut best = f64::INFINITY;
    let mut perm = [0, 1, 2, 3];
    permute(&mut perm, 0, &mut |p| {
        let worst = (0..4).map(|i| (a[i] - b[p[i]]).norm()).fold(0.0, f64::max);
        best = best.min(worst);
    });
    best
}

fn permute(perm: &mut [usize; 4], k: usize, visit: &mut impl FnMut(&[usize; 4])) {
    if k == perm.len() {
        visit(perm);
        return;
    }
    for i in k..perm.len() {
        perm.swap(k, i);
        permute(perm, k + 1, visit);
        perm.swap(k, i);
    }
}

/// Matched distance between {z} and {−z*}.
pub fn mirror_symmetry_defect(z: &[Complex64; 4]) -> f64 {
    matched_distance(z, &z.map(|z| -z.conj()))
}
