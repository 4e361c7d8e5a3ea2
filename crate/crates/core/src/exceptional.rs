//! Exceptional points of the super-operator and the (d̃, Γ̃) phase plane.
//!
//! The non-null eigenvalues z₂ and z₃ coalesce where the Cardano
//! discriminant p³ + q² vanishes. As a function of G = Γ̃² the discriminant
//! is quadratic, so for every d̃ ≥ 2√2 there are two EP2 couplings; the two
//! curves meet at the EP3 point (2√2, 6√3) where all three non-null
//! eigenvalues coalesce at −4√3 i δ.

use std::f64::consts::SQRT_2;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::spectrum::{cardano_params, eigenvalues_closed_form};

/// Relative width of the EP band on the discriminant: |disc| ≤ EP_BAND·max(1, S³)
/// with S = δ² + d² + Γ².
pub const EP_BAND: f64 = 1e-10;
/// Inside the EP band, points with |p| ≤ EP3_TOL·S and |q| ≤ EP3_TOL·S^{3/2}
/// are labeled EP3.
pub const EP3_TOL: f64 = 1e-5;
/// Gaps below this are rejected by [`splitting_exponent`].
pub const MIN_FIT_GAP: f64 = 1e-12;

/// d̃ at the third-order exceptional point.
pub fn ep3_d_tilde() -> f64 {
    2.0 * SQRT_2
}

/// Γ̃ at the third-order exceptional point.
pub fn ep3_gamma_tilde() -> f64 {
    6.0 * 3f64.sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    /// One imaginary eigenvalue plus a pair mirrored across the imaginary axis.
    SplitPair,
    /// All three non-null eigenvalues on the imaginary axis.
    AllImaginary,
    #[serde(rename = "ep2_plus")]
    Ep2Plus,
    #[serde(rename = "ep2_minus")]
    Ep2Minus,
    #[serde(rename = "ep3")]
    Ep3,
}

impl Region {
    pub fn as_str(&self) -> &'static str {
        match self {
            Region::SplitPair => "split_pair",
            Region::AllImaginary => "all_imaginary",
            Region::Ep2Plus => "ep2_plus",
            Region::Ep2Minus => "ep2_minus",
            Region::Ep3 => "ep3",
        }
    }

    pub fn is_exceptional(&self) -> bool {
        matches!(self, Region::Ep2Plus | Region::Ep2Minus | Region::Ep3)
    }
}

impl std::fmt::Display for Region {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    Minus,
    Plus,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhasePoint {
    pub d_tilde: f64,
    pub gamma_tilde: f64,
    /// p³ + q² evaluated at δ = 1.
    pub disc: f64,
    pub region: Region,
    /// sign(Im z₁ − Im z₂) in the split-pair region, 0 elsewhere.
    pub ordering: i8,
}

pub fn discriminant(params: &ModelParams) -> f64 {
    cardano_params(params).disc
}

fn ep_band(scale_sq: f64) -> f64 {
    EP_BAND * scale_sq.powi(3).max(1.0)
}

/// |disc| / max(1, S³): the discriminant in units of the EP band scale.
pub fn scaled_discriminant_residual(params: &ModelParams) -> f64 {
    discriminant(params).abs() / params.energy_scale_sq().powi(3).max(1.0)
}

/// Region of the (d̃, Γ̃) plane that `params` falls in. Requires δ ≠ 0.
pub fn classify(params: &ModelParams) -> Result<PhasePoint> {
    let (d_tilde, gamma_tilde) = params.scaled_coordinates()?;
    // disc depends on d and Γ only through d² and Γ².
    let unit = ModelParams::new(1.0, d_tilde.abs(), gamma_tilde.abs())?;
    let cp = cardano_params(&unit);
    let s = unit.energy_scale_sq();
    let band = ep_band(s);

    let region = if cp.disc < -band {
        Region::AllImaginary
    } else if cp.disc > band {
        Region::SplitPair
    } else if cp.p.abs() <= EP3_TOL * s && cp.q.abs() <= EP3_TOL * s.powf(1.5) {
        Region::Ep3
    } else {
        let d2 = unit.d * unit.d;
        let vertex = d2 * d2 / 2.0 + 10.0 * d2 - 4.0;
        if unit.gamma * unit.gamma >= vertex {
            Region::Ep2Plus
        } else {
            Region::Ep2Minus
        }
    };

    let ordering = if region == Region::SplitPair {
        let z = eigenvalues_closed_form(&unit);
        match (z[1].im - z[2].im).partial_cmp(&0.0) {
            Some(std::cmp::Ordering::Greater) => 1,
            Some(std::cmp::Ordering::Less) => -1,
            _ => 0,
        }
    } else {
        0
    };

    Ok(PhasePoint {
        d_tilde,
        gamma_tilde,
        disc: cp.disc,
        region,
        ordering,
    })
}

pub fn classify_scaled(d_tilde: f64, gamma_tilde: f64) -> Result<PhasePoint> {
    classify(&ModelParams::scaled(d_tilde, gamma_tilde)?)
}

fn check_ep_domain(d_tilde: f64) -> Result<f64> {
    if !(d_tilde >= ep3_d_tilde()) {
        return Err(Error::Domain(format!(
            "d̃ = {d_tilde} is below 2√2; the EP2 curves leave the real parameter plane"
        )));
    }
    // d̃ ≥ 2√2 in floating point can still round d̃² − 8 slightly negative.
    Ok((d_tilde * d_tilde - 8.0).max(0.0))
}

/// The two EP2 couplings (Γ̃⁻, Γ̃⁺) at scaled drive d̃ ≥ 2√2:
/// Γ̃^± = √(d̃⁴/2 + 10d̃² − 4 ± (d̃/2)(d̃² − 8)^{3/2}).
pub fn ep2_gamma(d_tilde: f64) -> Result<(f64, f64)> {
    let excess = check_ep_domain(d_tilde)?;
    let d2 = d_tilde * d_tilde;
    let centre = d2 * d2 / 2.0 + 10.0 * d2 - 4.0;
    let half_width = 0.5 * d_tilde * excess.powf(1.5);
    Ok(((centre - half_width).sqrt(), (centre + half_width).sqrt()))
}

/// The coalesced eigenvalue z₂ = z₃ on an EP2 curve, in units of δ:
/// z/δ = −(2i/3)[Γ̃^± ∓ ¼√(d̃⁴/2 − 2d̃² − 16 ± (d̃/2)(d̃² − 8)^{3/2})].
///
/// On a curve u = v = ∛q, so z = −i(2Γ/3 − ∛q) and the radical term is
/// 6|∛q|. q is positive on the plus curve and negative on the minus curve,
/// which fixes the sign in front of the radical.
pub fn ep2_eigenvalue(d_tilde: f64, branch: Branch) -> Result<Complex64> {
    let excess = check_ep_domain(d_tilde)?;
    let (minus, plus) = ep2_gamma(d_tilde)?;
    let d2 = d_tilde * d_tilde;
    let half_width = 0.5 * d_tilde * excess.powf(1.5);
    let (gamma, inner, sign) = match branch {
        Branch::Minus => (minus, d2 * d2 / 2.0 - 2.0 * d2 - 16.0 - half_width, -1.0),
        Branch::Plus => (plus, d2 * d2 / 2.0 - 2.0 * d2 - 16.0 + half_width, 1.0),
    };
    // The inner radical should be non-negative on both branches; verify rather than assume.
    let slack = 1e-12 * (d2 * d2).max(1.0);
    if inner < -slack {
        return Err(Error::Domain(format!(
            "EP2 eigenvalue radical is negative ({inner:e}) at d̃ = {d_tilde}, {branch:?} branch"
        )));
    }
    let bracket = gamma - sign * 0.25 * inner.max(0.0).sqrt();
    Ok(Complex64::new(0.0, -2.0 / 3.0 * bracket))
}

/// (d̃, Γ̃, z/δ) at the third-order exceptional point.
pub fn ep3_point() -> (f64, f64, Complex64) {
    (
        ep3_d_tilde(),
        ep3_gamma_tilde(),
        Complex64::new(0.0, -4.0 * 3f64.sqrt()),
    )
}

/// One abscissa of the EP2 curves with verification residuals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EpCurvePoint {
    pub d_tilde: f64,
    pub gamma_minus: f64,
    pub gamma_plus: f64,
    pub im_z_minus: f64,
    pub im_z_plus: f64,
    /// Scaled |p³ + q²| on each curve, see [`scaled_discriminant_residual`].
    pub disc_minus: f64,
    pub disc_plus: f64,
}

pub fn ep_curve_point(d_tilde: f64) -> Result<EpCurvePoint> {
    let (gamma_minus, gamma_plus) = ep2_gamma(d_tilde)?;
    let z_minus = ep2_eigenvalue(d_tilde, Branch::Minus)?;
    let z_plus = ep2_eigenvalue(d_tilde, Branch::Plus)?;
    let residual =
        |g: f64| ModelParams::scaled(d_tilde, g).map(|p| scaled_discriminant_residual(&p));
    Ok(EpCurvePoint {
        d_tilde,
        gamma_minus,
        gamma_plus,
        im_z_minus: z_minus.im,
        im_z_plus: z_plus.im,
        disc_minus: residual(gamma_minus)?,
        disc_plus: residual(gamma_plus)?,
    })
}

/// Evenly spaced samples `min, …, max`; a single sample sits at `min`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl Axis {
    pub fn new(min: f64, max: f64, count: usize) -> Result<Self> {
        if !(min.is_finite() && max.is_finite()) || max < min || count == 0 {
            return Err(Error::InvalidParameter(format!(
                "axis needs finite min <= max and count >= 1, got [{min}, {max}] x {count}"
            )));
        }
        Ok(Self { min, max, count })
    }

    pub fn value(&self, i: usize) -> f64 {
        if self.count == 1 {
            return self.min;
        }
        if i + 1 == self.count {
            return self.max;
        }
        self.min + (self.max - self.min) * i as f64 / (self.count - 1) as f64
    }

    pub fn step(&self) -> f64 {
        if self.count == 1 {
            0.0
        } else {
            (self.max - self.min) / (self.count - 1) as f64
        }
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.count).map(|i| self.value(i))
    }
}

/// Classifies every grid point, row-major with d̃ as the outer index. Rows are
/// evaluated on the current rayon pool and reassembled in index order.
pub fn phase_diagram(d_axis: &Axis, gamma_axis: &Axis) -> Result<Vec<PhasePoint>> {
    let rows: Vec<Vec<PhasePoint>> = (0..d_axis.count)
        .into_par_iter()
        .map(|i| {
            let d_tilde = d_axis.value(i);
            gamma_axis
                .values()
                .map(|g| classify_scaled(d_tilde, g))
                .collect()
        })
        .collect::<Result<_>>()?;
    Ok(rows.into_iter().flatten().collect())
}

/// Numerical EP2 couplings at δ = 1: the roots in Γ > 0 of p³ + q² = 0,
/// bracketed and bisected with exactly evaluated discriminant signs.
pub fn ep2_locate_numeric(d_tilde: f64) -> Result<(f64, f64)> {
    if !d_tilde.is_finite() {
        return Err(Error::NoRoot { d_tilde });
    }
    let quad = exact::QuadraticInG::at(d_tilde);
    if !quad.has_real_roots() {
        return Err(Error::NoRoot { d_tilde });
    }
    let vertex_g = quad.vertex_f64();
    if !(vertex_g > 0.0) {
        return Err(Error::NoRoot { d_tilde });
    }
    let vertex = vertex_g.sqrt();
    // At the vertex the discriminant is non-positive unless both roots lie
    // within rounding of it.
    if quad.sign_at_gamma(vertex) > 0 {
        return Ok((vertex, vertex));
    }
    let mut hi = 2.0 * vertex;
    while quad.sign_at_gamma(hi) <= 0 {
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(Error::NoRoot { d_tilde });
        }
    }
    if quad.sign_at_gamma(0.0) <= 0 {
        return Err(Error::NoRoot { d_tilde });
    }
    let minus = bisect(0.0, vertex, |g| quad.sign_at_gamma(g) > 0);
    let plus = bisect(hi, vertex, |g| quad.sign_at_gamma(g) > 0);
    Ok((minus, plus))
}

/// Bisects between `outside` (where `is_outside` holds) and `inside` down
/// to adjacent floats; returns the midpoint of the final bracket.
fn bisect(mut outside: f64, mut inside: f64, is_outside: impl Fn(f64) -> bool) -> f64 {
    loop {
        let mid = 0.5 * (outside + inside);
        if mid == outside || mid == inside {
            return mid;
        }
        if is_outside(mid) {
            outside = mid;
        } else {
            inside = mid;
        }
    }
}

/// Numerically locates the merge point of the two EP2 branches: bisection
/// over d̃ on whether p³ + q² = 0 has real roots in Γ̃². Returns (d̃, Γ̃).
pub fn locate_ep3_numeric() -> (f64, f64) {
    let has_roots = |d: f64| exact::QuadraticInG::at(d).has_real_roots();
    let (mut below, mut above) = (2.0, 4.0);
    debug_assert!(!has_roots(below) && has_roots(above));
    loop {
        let mid = 0.5 * (below + above);
        if mid == below || mid == above {
            break;
        }
        if has_roots(mid) {
            above = mid;
        } else {
            below = mid;
        }
    }
    let gamma = exact::QuadraticInG::at(above).vertex_f64().sqrt();
    (above, gamma)
}

/// Least-squares slope of ln(gap) against ln(ε), where the gap is measured
/// among the coalescing eigenvalues after displacing `base` by ε along
/// `direction` in the (d̃, Γ̃) plane.
///
/// For an EP2 the gap is the smallest pairwise distance among z₁..z₃; for the
/// EP3 it is the largest.
pub fn splitting_exponent(
    base: &PhasePoint,
    direction: (f64, f64),
    epsilons: &[f64],
) -> Result<f64> {
    if !base.region.is_exceptional() {
        return Err(Error::Domain(format!(
            "splitting exponent needs an exceptional base point, got {}",
            base.region
        )));
    }
    let norm = direction.0.hypot(direction.1);
    if !(norm > 0.0 && norm.is_finite()) {
        return Err(Error::DegenerateFit(
            "direction must be a nonzero finite vector".into(),
        ));
    }
    let (ux, uy) = (direction.0 / norm, direction.1 / norm);
    if epsilons.len() < 2 {
        return Err(Error::DegenerateFit(
            "need at least two displacements".into(),
        ));
    }
    if let Some(bad) = epsilons.iter().find(|e| !(**e > 0.0 && e.is_finite())) {
        return Err(Error::DegenerateFit(format!(
            "displacement {bad} is not positive"
        )));
    }
    let (lo, hi) = epsilons
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), &e| {
            (lo.min(e), hi.max(e))
        });
    if hi / lo < 100.0 {
        return Err(Error::DegenerateFit(format!(
            "displacements span {:.2} decades, need at least 2",
            (hi / lo).log10()
        )));
    }

    let mut points = Vec::with_capacity(epsilons.len());
    for &eps in epsilons {
        let params = ModelParams::new(1.0, base.d_tilde + eps * ux, base.gamma_tilde + eps * uy)?;
        let z = eigenvalues_closed_form(&params);
        let gaps = [
            (z[1] - z[2]).norm(),
            (z[1] - z[3]).norm(),
            (z[2] - z[3]).norm(),
        ];
        let gap = if base.region == Region::Ep3 {
            gaps.iter().copied().fold(0.0, f64::max)
        } else {
            gaps.iter().copied().fold(f64::INFINITY, f64::min)
        };
        if !(gap > MIN_FIT_GAP) {
            return Err(Error::DegenerateFit(format!(
                "gap {gap:e} at ε = {eps:e} is below {MIN_FIT_GAP:e}"
            )));
        }
        points.push((eps.ln(), gap.ln()));
    }

    let n = points.len() as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    Ok(sxy / sxx)
}

/// Exact rational evaluation of the discriminant, used by the numerical
/// locators so that sign decisions are not limited by cancellation near the
/// triple root.
mod exact {
    use num_bigint::{BigInt, Sign};
    use num_rational::BigRational;
    use num_traits::{Float, Signed, ToPrimitive};

    fn rat(x: f64) -> BigRational {
        BigRational::from_float(x).expect("finite input")
    }

    fn int(n: i64) -> BigRational {
        BigRational::from_integer(BigInt::from(n))
    }

    /// p³ + q² at δ = 1 as a function of D = d² and G = Γ².
    fn disc(d2: &BigRational, g: &BigRational) -> BigRational {
        let one = int(1);
        let p = (&one + d2 - g / int(12)) / int(3);
        let bracket = &one - d2 / int(2) + g / int(36);
        // q² = (G/36)·bracket²
        let q2 = g / int(36) * &bracket * &bracket;
        &p * &p * &p + q2
    }

    /// disc(G) = a G² + b G + c for fixed d̃, with exact coefficients
    /// recovered from three exact samples.
    pub struct QuadraticInG {
        a: BigRational,
        b: BigRational,
        c: BigRational,
        /// a, b, c over a common denominator, for fast sign evaluation.
        ints: [BigInt; 3],
    }

    impl QuadraticInG {
        pub fn at(d_tilde: f64) -> Self {
            let d = rat(d_tilde);
            let d2 = &d * &d;
            let f0 = disc(&d2, &int(0));
            let f1 = disc(&d2, &int(1));
            let f2 = disc(&d2, &int(2));
            let a = (&f2 - &f1 * int(2) + &f0) / int(2);
            let b = &f1 - &f0 - &a;
            debug_assert!(disc(&d2, &int(3)) == &a * int(9) + &b * int(3) + &f0);
            let den = a.denom() * b.denom() * f0.denom();
            let ints = [&a, &b, &f0].map(|r| r.numer() * (&den / r.denom()));
            Self { a, b, c: f0, ints }
        }

        fn roots_discriminant(&self) -> BigRational {
            &self.b * &self.b - &self.a * &self.c * int(4)
        }

        pub fn has_real_roots(&self) -> bool {
            self.a.is_positive() && !self.roots_discriminant().is_negative()
        }

        pub fn vertex_f64(&self) -> f64 {
            (-&self.b / (&self.a * int(2))).to_f64().unwrap_or(f64::NAN)
        }

        /// Sign of p³ + q² at Γ (δ = 1, the stored d̃).
        pub fn sign_at_gamma(&self, gamma: f64) -> i8 {
            // Γ = m·2^e, so G = m²·2^{2e}; clear the power of two to stay in integers.
            let (m, e, _) = gamma.integer_decode();
            let m2 = BigInt::from(m) * BigInt::from(m);
            let [a, b, c] = &self.ints;
            let value = if e >= 0 {
                let g = m2 << (2 * e as usize);
                a * &g * &g + b * &g + c
            } else {
                let k = (-2 * e as i32) as usize;
                a * &m2 * &m2 + ((b * &m2) << k) + (c << (2 * k))
            };
            match value.sign() {
                Sign::NoSign => 0,
                Sign::Plus => 1,
                Sign::Minus => -1,
            }
        }
    }
}
