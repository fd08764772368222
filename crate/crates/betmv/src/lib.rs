//! Anytime-valid tests of means and variances.
//!
//! Everything in this crate is built around two objects:
//!
//! * an *e-value*: a realization of a nonnegative random variable whose mean
//!   is at most one under every null distribution, so large values are
//!   evidence against the null (by Markov, `P(E >= 1/a) <= a`);
//! * a *p-value*: a realization of a random variable that is stochastically
//!   dominated by the uniform distribution under the null, possibly only at
//!   the usual rejection levels (a "semi-precise" p-variable).
//!
//! The nulls treated here constrain only the mean and variance of a single
//! observation, `E[X] <= mu` and `Var[X] <= sigma^2`, optionally refined by a
//! shape restriction (symmetry, unimodality, or both). For each shape class
//! there is a closed-form e-value and p-value in the standardized statistic
//! `z = (x - mu) / sigma`; see [`evidence`].
//!
//! [`eprocess`] turns the per-observation e-values into sequential tests by
//! betting: the wealth process `M_t = prod_i (1 - l_i + l_i E_i)` with
//! predictable stakes `l_i` is an e-process, and Ville's inequality makes the
//! first crossing of `1/alpha` an anytime-valid level-`alpha` rejection rule.
//! [`pcombine`] provides the fixed-sample alternatives (Fisher and Simes
//! combination, batch e/p-values on the sample mean). [`sim`] contains the
//! data generators and Monte Carlo experiment runners used to validate
//! calibration and compare power, and [`monitor`] applies the sequential
//! machinery to loss series derived from price histories.
//!
//! The numeric kernels ([`evidence`], [`eprocess`], [`pcombine`]) are generic
//! over the floating-point scalar via [`Scalar`]; `f64` aliases for the main
//! types are exported at the crate root. The simulation and monitoring layers
//! are `f64` only, since they are tied to RNG output and file formats.

pub mod eprocess;
pub mod evidence;
pub mod monitor;
pub mod pcombine;
pub mod sim;

use core::fmt;

/// Floating-point scalar usable by the numeric kernels (`f32` or `f64`).
///
/// The bound is a trait alias: any type with `num_traits::Float` semantics,
/// primitive conversions, and value semantics qualifies automatically.
pub trait Scalar:
    num_traits::Float + num_traits::FromPrimitive + fmt::Debug + fmt::Display + Send + Sync + 'static
{
}

impl<T> Scalar for T where
    T: num_traits::Float
        + num_traits::FromPrimitive
        + fmt::Debug
        + fmt::Display
        + Send
        + Sync
        + 'static
{
}

pub use evidence::{Evidence, Hypothesis, MeanVarSpec, ShapeClass, Sidedness};

/// Double-precision aliases for the scalar-generic core types.
pub type MeanVarSpec64 = evidence::MeanVarSpec<f64>;
pub type Hypothesis64 = evidence::Hypothesis<f64>;
pub type Sidedness64 = evidence::Sidedness<f64>;
pub type Evidence64 = evidence::Evidence<f64>;
pub type BettingStrategy64 = eprocess::BettingStrategy<f64>;
pub type EProcess64 = eprocess::EProcess<f64>;
pub type DetectionReport64 = eprocess::DetectionReport<f64>;

/// Formats a value with 12 significant digits, the precision used by every
/// text serialization in this crate (CLI output included).
pub fn sig12(x: f64) -> String {
    format!("{x:.11e}")
}
