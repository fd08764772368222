//! Closed-form e-values and p-values for mean-variance nulls.
//!
//! The null hypothesis constrains a single observation X to `E[X] <= mu` and
//! `Var[X] <= sigma^2`, optionally with a shape restriction. All formulas are
//! expressed in the standardized statistic `z = (x - mu) / sigma` and its
//! positive part `z+ = max(z, 0)`:
//!
//! | shape class          | e-value   | p-value                                        |
//! |----------------------|-----------|------------------------------------------------|
//! | plain                | `z+^2`    | `1 / (1 + z+^2)`                               |
//! | symmetric            | `2 z+^2`  | `min{ 1/(2 z+^2), 1/(1 + z+^2) }`              |
//! | unimodal             | `z+^2`    | `max{ (4/9) P0, (4 P0 - 1)/3 }`, `P0 = 1/(1+z+^2)` |
//! | unimodal + symmetric | `2 z+^2`  | `2/(9 z+^2)` if `z+^2 >= 4/3`; `(3 - sqrt(3) z+)/6` if `0 < z+^2 < 4/3`; `1` if `z+ = 0` |
//!
//! Each e-value has mean at most one under every null distribution, and each
//! p-value column is the exact tail bound for the corresponding family
//! (Cantelli's inequality for the plain class and its refinements under
//! symmetry and unimodality), attained by an extremal two-point, three-point,
//! or uniform-mixture distribution. The plain and symmetric bounds are
//! precise at every level; the unimodal bounds are semi-precise (precise at
//! levels below the branch point). All of them remain valid when the null
//! states `E[X] = mu` rather than `E[X] <= mu`, so the same functions serve
//! both formulations.
//!
//! For an interval null `mu_lower <= E[X] <= mu_upper` (two-sided testing)
//! the e-value is `((x - mu_upper)+^2 + (x - mu_lower)-^2) / sigma^2`, which
//! vanishes exactly on the interval.

use thiserror::Error;

use crate::Scalar;

/// Errors from constructing hypotheses or evaluating evidence maps.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvidenceError {
    /// An observation or parameter was NaN or infinite where a finite value
    /// is required.
    #[error("{0} must be finite")]
    NonFinite(&'static str),
    /// The standard deviation bound must be strictly positive and finite.
    #[error("sigma must be a finite positive number")]
    InvalidSigma,
    /// Two-sided mean intervals need finite bounds with `lower <= upper`.
    #[error("mean interval requires finite bounds with lower <= upper")]
    InvalidInterval,
    /// Interval nulls carry no shape information beyond the variance bound.
    #[error("two-sided hypotheses support only the plain shape class")]
    IntervalShape,
    /// Quantile bounds are defined for levels strictly inside (0, 1).
    #[error("alpha must lie strictly between 0 and 1")]
    AlphaOutOfRange,
}

fn c<T: Scalar>(x: f64) -> T {
    T::from_f64(x).expect("constant representable in every float type")
}

/// Mean and standard deviation bounds `E[X] <= mu`, `Var[X] <= sigma^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanVarSpec<T> {
    mu: T,
    sigma: T,
}

impl<T: Scalar> MeanVarSpec<T> {
    /// Requires finite `mu` and finite `sigma > 0`.
    pub fn new(mu: T, sigma: T) -> Result<Self, EvidenceError> {
        if !mu.is_finite() {
            return Err(EvidenceError::NonFinite("mu"));
        }
        if !sigma.is_finite() || sigma <= T::zero() {
            return Err(EvidenceError::InvalidSigma);
        }
        Ok(Self { mu, sigma })
    }

    pub fn mu(&self) -> T {
        self.mu
    }

    pub fn sigma(&self) -> T {
        self.sigma
    }
}

/// Shape restriction imposed on the null family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ShapeClass {
    /// Mean and variance bounds only.
    Plain,
    /// Distributions symmetric about their mean.
    Symmetric,
    /// Unimodal distributions (mode at the mean).
    Unimodal,
    /// Unimodal and symmetric about the mean.
    UnimodalSymmetric,
}

impl ShapeClass {
    /// Stable identifier used in CLI flags and CSV output.
    pub fn name(self) -> &'static str {
        match self {
            ShapeClass::Plain => "plain",
            ShapeClass::Symmetric => "symmetric",
            ShapeClass::Unimodal => "unimodal",
            ShapeClass::UnimodalSymmetric => "unimodal-symmetric",
        }
    }

    /// Symmetric families admit the doubled e-value `2 z+^2`.
    pub fn is_symmetric(self) -> bool {
        matches!(self, ShapeClass::Symmetric | ShapeClass::UnimodalSymmetric)
    }
}

/// Direction of the alternative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Sidedness<T> {
    /// Alternative `E[X] > mu`; evidence grows with `z+`.
    OneSidedUpper,
    /// Alternative `E[X] outside [lower, upper]`; evidence grows away from
    /// the interval on both sides.
    TwoSided { lower: T, upper: T },
}

/// A fully specified null hypothesis: moment bounds, shape class, sidedness.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hypothesis<T> {
    spec: MeanVarSpec<T>,
    shape: ShapeClass,
    side: Sidedness<T>,
}

impl<T: Scalar> Hypothesis<T> {
    /// One-sided null with the given moment bounds and shape class.
    pub fn one_sided(spec: MeanVarSpec<T>, shape: ShapeClass) -> Self {
        Self {
            spec,
            shape,
            side: Sidedness::OneSidedUpper,
        }
    }

    /// Interval null `lower <= E[X] <= upper`, `Var[X] <= sigma^2`. The shape
    /// class is necessarily [`ShapeClass::Plain`]: the interval e-value does
    /// not sharpen under symmetry or unimodality.
    pub fn two_sided(lower: T, upper: T, sigma: T) -> Result<Self, EvidenceError> {
        if !lower.is_finite() || !upper.is_finite() || lower > upper {
            return Err(EvidenceError::InvalidInterval);
        }
        let midpoint = (lower + upper) / c(2.0);
        Ok(Self {
            spec: MeanVarSpec::new(midpoint, sigma)?,
            shape: ShapeClass::Plain,
            side: Sidedness::TwoSided { lower, upper },
        })
    }

    /// General constructor; rejects two-sided nulls with a non-plain shape
    /// or a malformed interval.
    pub fn new(
        spec: MeanVarSpec<T>,
        shape: ShapeClass,
        side: Sidedness<T>,
    ) -> Result<Self, EvidenceError> {
        if let Sidedness::TwoSided { lower, upper } = side {
            if shape != ShapeClass::Plain {
                return Err(EvidenceError::IntervalShape);
            }
            if !lower.is_finite() || !upper.is_finite() || lower > upper {
                return Err(EvidenceError::InvalidInterval);
            }
        }
        Ok(Self { spec, shape, side })
    }

    pub fn spec(&self) -> &MeanVarSpec<T> {
        &self.spec
    }

    pub fn shape(&self) -> ShapeClass {
        self.shape
    }

    pub fn side(&self) -> Sidedness<T> {
        self.side
    }

    /// Evidence against this null carried by a single observation.
    ///
    /// One-sided nulls use the closed-form pair for the shape class. For
    /// two-sided nulls only the e-value has a closed form; its p companion is
    /// the Markov calibration `min{1, 1/e}`.
    pub fn evidence(&self, x: T) -> Result<Evidence<T>, EvidenceError> {
        match self.side {
            Sidedness::OneSidedUpper => {
                let z = standardize(x, &self.spec)?;
                Ok(Evidence {
                    e: e_value(z, self.shape),
                    p: p_value(z, self.shape),
                })
            }
            Sidedness::TwoSided { lower, upper } => {
                let e = e_value_two_sided(x, lower, upper, self.spec.sigma)?;
                let p = if e > T::one() { e.recip() } else { T::one() };
                Ok(Evidence { e, p })
            }
        }
    }
}

/// Paired e-value and p-value for one observation under one null.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evidence<T> {
    /// Nonnegative, possibly infinite; mean at most one under the null.
    pub e: T,
    /// In `[0, 1]`; super-uniform under the null at the bound's levels.
    pub p: T,
}

/// Standardizes an observation: `z = (x - mu) / sigma`.
pub fn standardize<T: Scalar>(x: T, spec: &MeanVarSpec<T>) -> Result<T, EvidenceError> {
    if !x.is_finite() {
        return Err(EvidenceError::NonFinite("observation"));
    }
    Ok((x - spec.mu()) / spec.sigma())
}

fn positive_part<T: Scalar>(z: T) -> T {
    if z > T::zero() {
        z
    } else {
        T::zero()
    }
}

/// E-value in the standardized statistic: `z+^2`, doubled for symmetric
/// shape classes. Infinite `z` yields an infinite e-value.
pub fn e_value<T: Scalar>(z: T, shape: ShapeClass) -> T {
    let zp = positive_part(z);
    let base = zp * zp;
    if shape.is_symmetric() {
        c::<T>(2.0) * base
    } else {
        base
    }
}

/// P-value in the standardized statistic (see the module table). Infinite
/// `z` yields zero.
pub fn p_value<T: Scalar>(z: T, shape: ShapeClass) -> T {
    let zp = positive_part(z);
    let zp2 = zp * zp;
    // Cantelli bound, the plain-class p-value and the anchor for the rest.
    let p0 = (T::one() + zp2).recip();
    match shape {
        ShapeClass::Plain => p0,
        ShapeClass::Symmetric => {
            if zp > T::zero() {
                (c::<T>(2.0) * zp2).recip().min(p0)
            } else {
                T::one()
            }
        }
        ShapeClass::Unimodal => {
            let low = c::<T>(4.0 / 9.0) * p0;
            let high = (c::<T>(4.0) * p0 - T::one()) / c::<T>(3.0);
            low.max(high)
        }
        ShapeClass::UnimodalSymmetric => {
            if zp2 >= c(4.0 / 3.0) {
                c::<T>(2.0 / 9.0) / zp2
            } else if zp > T::zero() {
                (c::<T>(3.0) - (c::<T>(3.0) * zp2).sqrt()) / c::<T>(6.0)
            } else {
                T::one()
            }
        }
    }
}

/// E-value for the interval null `lower <= E[X] <= upper` with
/// `Var[X] <= sigma^2`:
///
/// ```text
/// e = ( (x - upper)+^2 + (x - lower)-^2 ) / sigma^2
/// ```
///
/// Zero exactly when `x` lies inside the interval; with `lower == upper`
/// this is the two-sided point statistic `(x - mu)^2 / sigma^2`.
pub fn e_value_two_sided<T: Scalar>(
    x: T,
    lower: T,
    upper: T,
    sigma: T,
) -> Result<T, EvidenceError> {
    if !x.is_finite() {
        return Err(EvidenceError::NonFinite("observation"));
    }
    if !lower.is_finite() || !upper.is_finite() || lower > upper {
        return Err(EvidenceError::InvalidInterval);
    }
    if !sigma.is_finite() || sigma <= T::zero() {
        return Err(EvidenceError::InvalidSigma);
    }
    let above = positive_part(x - upper);
    let below = positive_part(lower - x);
    Ok((above * above + below * below) / (sigma * sigma))
}

/// Smallest standardized threshold `q` such that a unimodal-symmetric null
/// puts at most `alpha` probability on `{z >= q}`:
///
/// ```text
/// q(alpha) = sqrt(2 / (9 alpha))      for alpha in (0, 1/6]
///          = sqrt(3) (1 - 2 alpha)    for alpha in (1/6, 1/2]
///          = 0                        for alpha in (1/2, 1)
/// ```
///
/// Inverse of [`p_value`] for that class: `p_value(q(alpha)) == alpha` on
/// `(0, 1/2]`.
pub fn quantile_bound_us<T: Scalar>(alpha: T) -> Result<T, EvidenceError> {
    if !(alpha > T::zero() && alpha < T::one()) {
        return Err(EvidenceError::AlphaOutOfRange);
    }
    if alpha <= c(1.0 / 6.0) {
        Ok((c::<T>(2.0 / 9.0) / alpha).sqrt())
    } else if alpha <= c(0.5) {
        Ok(c::<T>(3.0).sqrt() * (T::one() - c::<T>(2.0) * alpha))
    } else {
        // Above 1/2 the tail bound is vacuous: any threshold above the mean
        // works, so the infimum is zero.
        Ok(T::zero())
    }
}

/// Smallest standardized threshold `q` such that a unimodal null puts at
/// most `alpha` probability on `{z >= q}`:
///
/// ```text
/// q(alpha) = max{ sqrt(4/(9 alpha) - 1), sqrt((3 - 3 alpha)/(1 + 3 alpha)) }
/// ```
///
/// Inverse of [`p_value`] for the unimodal class on all of `(0, 1)`.
pub fn quantile_bound_unimodal<T: Scalar>(alpha: T) -> Result<T, EvidenceError> {
    if !(alpha > T::zero() && alpha < T::one()) {
        return Err(EvidenceError::AlphaOutOfRange);
    }
    // The first branch is vacuous (negative radicand) once alpha > 4/9.
    let tail = (c::<T>(4.0 / 9.0) / alpha - T::one()).max(T::zero()).sqrt();
    let three = c::<T>(3.0);
    let body = ((three - three * alpha) / (T::one() + three * alpha)).sqrt();
    Ok(tail.max(body))
}
