//! Fixed-sample combination of p-values and batch statistics.
//!
//! Two classical combiners for a vector of p-values:
//!
//! * Fisher: `-2 sum log P_i` is chi-square with `2n` degrees of freedom
//!   when the `P_i` are independent uniforms, so the combined p-value is the
//!   chi-square survival function at the statistic. Valid for independent
//!   precise p-values.
//! * Simes: `min_i (n/i) P_(i)` over the order statistics, capped at one.
//!   Valid under independence and various positive-dependence conditions.
//!
//! Both are conservative when the inputs are super-uniform rather than
//! exactly uniform, which is the situation for the shape-class p-values of
//! [`crate::evidence`].
//!
//! The batch alternatives work on the sample mean directly: for `n`
//! observations with null mean `mu` and variance bound `sigma^2`, the
//! standardized mean `sqrt(n) (mean(x) - mu) / sigma` has mean zero and
//! variance at most one under the null, so the single-observation e/p maps
//! apply to it. Averaging preserves symmetry but not unimodality, so the
//! batch maps collapse the unimodal classes onto their non-unimodal
//! counterparts.
//!
//! The chi-square survival function is computed through the regularized
//! incomplete gamma pair `(P, Q)` with the standard two-regime scheme: a
//! power series for the lower function when `x < a + 1`, a Lentz-style
//! continued fraction for the upper function otherwise, both iterated to
//! relative `1e-15`.

use thiserror::Error;

use crate::evidence::{self, EvidenceError, MeanVarSpec, ShapeClass};
use crate::Scalar;

/// Errors from p-value combination and batch statistics.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum PCombineError {
    /// Combiners and batch statistics need at least one input.
    #[error("input must be nonempty")]
    EmptyInput,
    /// P-values live in `[0, 1]`.
    #[error("p-value at index {0} is outside [0, 1]")]
    ValueOutOfRange(usize),
    /// The chi-square survival function is implemented for positive even
    /// degrees of freedom (Fisher's statistic always has even df).
    #[error("degrees of freedom must be a positive even integer")]
    InvalidDegreesOfFreedom,
    /// The chi-square statistic must not be NaN.
    #[error("statistic must not be NaN")]
    NanStatistic,
    #[error(transparent)]
    Evidence(#[from] EvidenceError),
}

fn c<T: Scalar>(x: f64) -> T {
    T::from_f64(x).expect("constant representable in every float type")
}

/// A validated nonempty vector of p-values, each in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PVector<T>(Vec<T>);

impl<T: Scalar> PVector<T> {
    pub fn new(values: Vec<T>) -> Result<Self, PCombineError> {
        if values.is_empty() {
            return Err(PCombineError::EmptyInput);
        }
        for (i, p) in values.iter().enumerate() {
            if !(*p >= T::zero() && *p <= T::one()) {
                return Err(PCombineError::ValueOutOfRange(i));
            }
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &[T] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Underflow guard for Fisher's statistic: exact zeros are clamped here, so
/// a zero input combines to (numerically) zero rather than an error.
const MIN_P: f64 = 1e-300;

/// Fisher's combination: chi-square survival of `-2 sum log P_i` with `2n`
/// degrees of freedom.
pub fn fisher_combine<T: Scalar>(ps: &PVector<T>) -> T {
    let floor = c::<T>(MIN_P);
    let mut stat = T::zero();
    for &p in ps.values() {
        stat = stat - c::<T>(2.0) * p.max(floor).ln();
    }
    chi2_sf(stat, 2 * ps.len()).expect("even df and finite statistic")
}

/// Simes' combination: `min_i (n/i) P_(i)`, capped at one.
pub fn simes_combine<T: Scalar>(ps: &PVector<T>) -> T {
    let mut sorted = ps.values().to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("validated p-values are not NaN"));
    let n = c::<T>(sorted.len() as f64);
    let mut best = T::infinity();
    for (i, &p) in sorted.iter().enumerate() {
        let scaled = p * n / c::<T>((i + 1) as f64);
        best = best.min(scaled);
    }
    best.min(T::one())
}

/// Batch e-value on the sample mean: `n ((mean - mu)+ / sigma)^2`, doubled
/// for symmetric shape classes.
pub fn e_batch<T: Scalar>(
    xs: &[T],
    spec: &MeanVarSpec<T>,
    shape: ShapeClass,
) -> Result<T, PCombineError> {
    let z = batch_statistic(xs, spec)?;
    Ok(evidence::e_value(z, shape))
}

/// Batch p-value on the sample mean. Averaging keeps symmetry but not
/// unimodality, so the unimodal classes fall back to their non-unimodal
/// bounds: Cantelli for plain/unimodal, the symmetric tail bound otherwise.
pub fn p_batch<T: Scalar>(
    xs: &[T],
    spec: &MeanVarSpec<T>,
    shape: ShapeClass,
) -> Result<T, PCombineError> {
    let z = batch_statistic(xs, spec)?;
    let batch_shape = if shape.is_symmetric() {
        ShapeClass::Symmetric
    } else {
        ShapeClass::Plain
    };
    Ok(evidence::p_value(z, batch_shape))
}

/// Standardized sample mean `sqrt(n) (mean - mu) / sigma`.
fn batch_statistic<T: Scalar>(xs: &[T], spec: &MeanVarSpec<T>) -> Result<T, PCombineError> {
    if xs.is_empty() {
        return Err(PCombineError::EmptyInput);
    }
    let n = c::<T>(xs.len() as f64);
    let mut sum = T::zero();
    for &x in xs {
        if !x.is_finite() {
            return Err(PCombineError::Evidence(EvidenceError::NonFinite(
                "observation",
            )));
        }
        sum = sum + x;
    }
    let mean = sum / n;
    Ok(n.sqrt() * evidence::standardize(mean, spec)?)
}

/// Chi-square survival function `P(X >= x)` for positive even degrees of
/// freedom, accurate to about `1e-14` absolute.
///
/// Negative statistics return one, an infinite statistic returns zero, NaN
/// is an error.
pub fn chi2_sf<T: Scalar>(x: T, df: usize) -> Result<T, PCombineError> {
    if df == 0 || df % 2 != 0 {
        return Err(PCombineError::InvalidDegreesOfFreedom);
    }
    if x.is_nan() {
        return Err(PCombineError::NanStatistic);
    }
    if x <= T::zero() {
        return Ok(T::one());
    }
    if x.is_infinite() {
        return Ok(T::zero());
    }
    let a = c::<T>(df as f64 / 2.0);
    let y = x / c(2.0);
    // Series converges fastest left of the mean, the continued fraction
    // right of it; either is accurate at the split point.
    if y < a + T::one() {
        Ok(T::one() - lower_regularized_series(a, y))
    } else {
        Ok(upper_regularized_cf(a, y))
    }
}

const MAX_ITER: usize = 800;
const REL_EPS: f64 = 1e-15;

/// Lower regularized incomplete gamma `P(a, x)` by power series, for
/// `x < a + 1`.
pub(crate) fn lower_regularized_series<T: Scalar>(a: T, x: T) -> T {
    if x <= T::zero() {
        return T::zero();
    }
    let eps = c::<T>(REL_EPS);
    let mut ap = a;
    let mut term = a.recip();
    let mut sum = term;
    for _ in 0..MAX_ITER {
        ap = ap + T::one();
        term = term * x / ap;
        sum = sum + term;
        if term.abs() < sum.abs() * eps {
            break;
        }
    }
    sum * (a * x.ln() - x - ln_gamma(a)).exp()
}

/// Upper regularized incomplete gamma `Q(a, x)` by modified Lentz continued
/// fraction, for `x >= a + 1`.
pub(crate) fn upper_regularized_cf<T: Scalar>(a: T, x: T) -> T {
    let eps = c::<T>(REL_EPS);
    let tiny = c::<T>(1e-300);
    let mut b = x + T::one() - a;
    let mut cc = c::<T>(1e300);
    let mut d = b.recip();
    let mut h = d;
    for i in 1..=MAX_ITER {
        let fi = c::<T>(i as f64);
        let an = -fi * (fi - a);
        b = b + c(2.0);
        d = an * d + b;
        if d.abs() < tiny {
            d = tiny;
        }
        cc = b + an / cc;
        if cc.abs() < tiny {
            cc = tiny;
        }
        d = d.recip();
        let delta = d * cc;
        h = h * delta;
        if (delta - T::one()).abs() < eps {
            break;
        }
    }
    h * (a * x.ln() - x - ln_gamma(a)).exp()
}

/// Log-gamma by the Lanczos approximation (g = 7, 9 coefficients), relative
/// error below `1e-13` for arguments `>= 0.5`; callers here always pass
/// `a >= 1`.
fn ln_gamma<T: Scalar>(z: T) -> T {
    const COEFFS: [f64; 8] = [
        676.5203681218851,
        -1259.1392167224028,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507343278686905,
        -0.13857109526572012,
        9.984_369_578_019_572e-6,
        1.5056327351493116e-7,
    ];
    const BASE: f64 = 0.999_999_999_999_809_9;
    let half_log_two_pi = c::<T>(0.918_938_533_204_672_7);
    let mut acc = c::<T>(BASE);
    for (k, &coeff) in COEFFS.iter().enumerate() {
        acc = acc + c::<T>(coeff) / (z + c::<T>(k as f64));
    }
    let t = z + c::<T>(6.5);
    half_log_two_pi + (z - c::<T>(0.5)) * t.ln() - t + acc.ln()
}
