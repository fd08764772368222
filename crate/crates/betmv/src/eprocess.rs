//! Sequential tests by betting.
//!
//! Given a stream of observations and a per-observation e-value map (see
//! [`crate::evidence`]), the wealth process
//!
//! ```text
//! M_0 = 1,    M_t = prod_{i<=t} (1 - l_i + l_i E_i),    l_i in [0, 1)
//! ```
//!
//! is an e-process whenever each stake `l_i` is predictable (computed from
//! observations strictly before `i`): each factor has conditional mean at
//! most one under the null, so `E[M_t] <= 1` at every `t`. Ville's
//! inequality then bounds `P(sup_t M_t >= 1/alpha) <= alpha`, which makes
//! "stop the first time `M_t >= 1/alpha`" an anytime-valid level-`alpha`
//! test. Wealth never goes negative: stakes below one keep every factor
//! nonnegative even when the e-value is zero.
//!
//! Four stake rules are provided:
//!
//! * [`BettingStrategy::EMixture`]: a fixed grid of stakes, each run as its
//!   own wealth process; the reported wealth is their arithmetic mean, which
//!   is again an e-process.
//! * [`BettingStrategy::EGree`]: at each step the stake maximizes the
//!   realized log-growth of the past e-values, `sum_j log(1 - l + l E_j)`,
//!   capped at `cap` (default 1/2). The objective is concave in `l`, so a
//!   golden-section search over `[0, cap]` finds the maximizer.
//! * [`BettingStrategy::Grapa`] (growth rate adaptive to the particular
//!   alternative): for `[0, 1]`-valued observations and a point null mean
//!   `mu`, bets directly on the centered observation with factor
//!   `1 + l_i (X_i - mu)`, choosing `l_i` as the exact root of the empirical
//!   log-growth derivative `sum_j (X_j - mu) / (1 + l (X_j - mu))`.
//! * [`BettingStrategy::Agrapa`]: the same bet with the Taylor plug-in
//!   `l = (mean - mu) / (var + (mean - mu)^2)` of past observations instead
//!   of the exact root.
//!
//! GRAPA stakes are clamped to `[-c/(1-mu), c/mu]`, which caps the
//! worst-case per-round loss at a fraction `c` of wealth; with a one-sided
//! hypothesis the stake is further restricted to be nonnegative.

use thiserror::Error;

use crate::evidence::{EvidenceError, Hypothesis, Sidedness};
use crate::Scalar;

/// Errors from strategy configuration or sequential updates.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum EProcessError {
    /// Mixture grids must be nonempty with every stake in `[0, 1)`.
    #[error("mixture grid must be nonempty with every stake in [0, 1)")]
    InvalidGrid,
    /// The e-GREE stake cap must lie in `(0, 1)`.
    #[error("stake cap must lie strictly between 0 and 1")]
    InvalidCap,
    /// The GRAPA loss-fraction bound must lie in `(0, 1]`.
    #[error("loss-fraction bound must lie in (0, 1]")]
    InvalidLossBound,
    /// GRAPA bets on `X - mu` for `[0, 1]`-valued data, which needs
    /// `0 < mu < 1` for a nondegenerate stake range.
    #[error("GRAPA strategies require a null mean strictly inside (0, 1)")]
    MeanOutsideUnit,
    /// GRAPA tests a point mean; interval nulls must have equal endpoints.
    #[error("GRAPA strategies test a point mean; interval endpoints must coincide")]
    IntervalNotPoint,
    /// Observations must be finite.
    #[error("observation must be finite")]
    NonFiniteObservation,
    /// GRAPA strategies are defined for observations in `[0, 1]` only.
    #[error("GRAPA strategies require observations in [0, 1]")]
    ObservationOutsideUnit,
    /// Stake selectors need at least one past observation.
    #[error("history must be nonempty")]
    EmptyHistory,
    /// Detection thresholds must be nonempty and each greater than one.
    #[error("thresholds must be nonempty, finite, and greater than 1")]
    InvalidThresholds,
    /// Averaging two e-processes requires equal step counts.
    #[error("processes must have the same length to be averaged")]
    LengthMismatch,
    /// The averaged two-sided construction reflects observations, so it is
    /// incompatible with bounded-support (GRAPA) strategies.
    #[error("averaged two-sided processes support only e-value strategies")]
    UnsupportedStrategy,
    #[error(transparent)]
    Evidence(#[from] EvidenceError),
}

fn c<T: Scalar>(x: f64) -> T {
    T::from_f64(x).expect("constant representable in every float type")
}

/// Rule for choosing the predictable stake at each step.
#[derive(Debug, Clone, PartialEq)]
pub enum BettingStrategy<T> {
    /// Fixed grid of stakes in `[0, 1)`; wealth is the grid average.
    EMixture { grid: Vec<T> },
    /// Greedy empirical log-growth maximizer over `[0, cap]`, `cap` in `(0, 1)`.
    EGree { cap: T },
    /// Exact empirical growth-rate root for `[0, 1]`-valued data; `exact:
    /// false` falls back to the same plug-in stake as [`Self::Agrapa`].
    Grapa { c: T, exact: bool },
    /// First-order (Taylor) approximation to [`Self::Grapa`].
    Agrapa { c: T },
}

impl<T: Scalar> BettingStrategy<T> {
    /// The standard mixture grid `{0.01, 0.02, ..., 0.20}`.
    pub fn default_mixture() -> Self {
        let grid = (1..=20).map(|k| c(k as f64 / 100.0)).collect();
        BettingStrategy::EMixture { grid }
    }

    /// e-GREE with the standard cap of one half.
    pub fn egree() -> Self {
        BettingStrategy::EGree { cap: c(0.5) }
    }

    /// Exact GRAPA with the standard loss-fraction bound of one half.
    pub fn grapa() -> Self {
        BettingStrategy::Grapa {
            c: c(0.5),
            exact: true,
        }
    }

    /// aGRAPA with the standard loss-fraction bound of one half.
    pub fn agrapa() -> Self {
        BettingStrategy::Agrapa { c: c(0.5) }
    }

    /// True for the strategies that bet on raw `[0, 1]`-valued observations
    /// rather than on e-values.
    pub fn bets_on_raw_observations(&self) -> bool {
        matches!(
            self,
            BettingStrategy::Grapa { .. } | BettingStrategy::Agrapa { .. }
        )
    }

    fn validate(&self) -> Result<(), EProcessError> {
        match self {
            BettingStrategy::EMixture { grid } => {
                let ok = !grid.is_empty()
                    && grid.iter().all(|l| *l >= T::zero() && *l < T::one());
                if ok {
                    Ok(())
                } else {
                    Err(EProcessError::InvalidGrid)
                }
            }
            BettingStrategy::EGree { cap } => {
                if *cap > T::zero() && *cap < T::one() {
                    Ok(())
                } else {
                    Err(EProcessError::InvalidCap)
                }
            }
            BettingStrategy::Grapa { c, .. } | BettingStrategy::Agrapa { c } => {
                if *c > T::zero() && *c <= T::one() {
                    Ok(())
                } else {
                    Err(EProcessError::InvalidLossBound)
                }
            }
        }
    }
}

impl<T: Scalar> Default for BettingStrategy<T> {
    fn default() -> Self {
        Self::default_mixture()
    }
}

/// Wealth process state for one null hypothesis and one stake rule.
#[derive(Debug, Clone)]
pub struct EProcess<T> {
    hypothesis: Hypothesis<T>,
    strategy: BettingStrategy<T>,
    t: usize,
    wealth: T,
    per_lambda_wealth: Vec<T>,
    history: Vec<T>,
    stakes: Vec<T>,
}

impl<T: Scalar> EProcess<T> {
    /// Starts a process at wealth one. GRAPA strategies additionally require
    /// a null mean strictly inside `(0, 1)` and, if two-sided, a point
    /// interval.
    pub fn new(
        hypothesis: Hypothesis<T>,
        strategy: BettingStrategy<T>,
    ) -> Result<Self, EProcessError> {
        strategy.validate()?;
        if strategy.bets_on_raw_observations() {
            let mu = hypothesis.spec().mu();
            if !(mu > T::zero() && mu < T::one()) {
                return Err(EProcessError::MeanOutsideUnit);
            }
            if let Sidedness::TwoSided { lower, upper } = hypothesis.side() {
                if lower != upper {
                    return Err(EProcessError::IntervalNotPoint);
                }
            }
        }
        let per_lambda_wealth = match &strategy {
            BettingStrategy::EMixture { grid } => vec![T::one(); grid.len()],
            _ => Vec::new(),
        };
        Ok(Self {
            hypothesis,
            strategy,
            t: 0,
            wealth: T::one(),
            per_lambda_wealth,
            history: Vec::new(),
            stakes: Vec::new(),
        })
    }

    /// Step count so far.
    pub fn len(&self) -> usize {
        self.t
    }

    pub fn is_empty(&self) -> bool {
        self.t == 0
    }

    /// Current wealth `M_t` (`M_0 = 1`).
    pub fn wealth(&self) -> T {
        self.wealth
    }

    pub fn hypothesis(&self) -> &Hypothesis<T> {
        &self.hypothesis
    }

    pub fn strategy(&self) -> &BettingStrategy<T> {
        &self.strategy
    }

    /// Stored stream: e-values for e-value strategies, raw observations for
    /// GRAPA strategies.
    pub fn history(&self) -> &[T] {
        &self.history
    }

    /// Stakes actually used, one per step (empty for the mixture, whose
    /// stakes are the fixed grid). Each entry is reproducible from the
    /// history prefix before it via [`next_stake`](Self::next_stake).
    pub fn stakes(&self) -> &[T] {
        &self.stakes
    }

    /// Per-stake wealths for the mixture strategy (empty otherwise); their
    /// arithmetic mean is the reported wealth.
    pub fn per_lambda_wealth(&self) -> &[T] {
        &self.per_lambda_wealth
    }

    /// The stake the strategy will use for the next observation, `None` for
    /// the mixture strategy. This is the exact code path used by
    /// [`update`](Self::update), so replaying a history prefix reproduces
    /// the recorded stakes bit for bit.
    pub fn next_stake(&self) -> Result<Option<T>, EProcessError> {
        match &self.strategy {
            BettingStrategy::EMixture { .. } => Ok(None),
            BettingStrategy::EGree { cap } => {
                if self.history.is_empty() {
                    Ok(Some(T::zero()))
                } else {
                    gree_lambda(&self.history, *cap).map(Some)
                }
            }
            BettingStrategy::Grapa { c, exact } => {
                self.raw_bet_stake(*c, *exact).map(Some)
            }
            BettingStrategy::Agrapa { c } => self.raw_bet_stake(*c, false).map(Some),
        }
    }

    fn raw_bet_stake(&self, c: T, exact: bool) -> Result<T, EProcessError> {
        if self.history.is_empty() {
            return Ok(T::zero());
        }
        let mu = self.hypothesis.spec().mu();
        let stake = if exact {
            grapa_lambda_exact(&self.history, mu, c)?
        } else {
            let (mean, var) = history_moments(&self.history);
            agrapa_lambda(self.history.len(), mean, var, mu, c)?
        };
        // One-sided nulls only reward upward deviations, so short stakes are
        // disallowed.
        if matches!(self.hypothesis.side(), Sidedness::OneSidedUpper) {
            Ok(stake.max(T::zero()))
        } else {
            Ok(stake)
        }
    }

    /// Feeds one observation and returns the updated wealth.
    pub fn update(&mut self, x: T) -> Result<T, EProcessError> {
        if !x.is_finite() {
            return Err(EProcessError::NonFiniteObservation);
        }
        match &self.strategy {
            BettingStrategy::EMixture { grid } => {
                let e = self.hypothesis.evidence(x)?.e;
                let mut sum = T::zero();
                for (w, l) in self.per_lambda_wealth.iter_mut().zip(grid.iter()) {
                    *w = *w * (T::one() - *l + *l * e);
                    sum = sum + *w;
                }
                self.wealth = sum / c(grid.len() as f64);
                self.history.push(e);
            }
            BettingStrategy::EGree { .. } => {
                let stake = self.next_stake()?.expect("e-GREE always has a stake");
                let e = self.hypothesis.evidence(x)?.e;
                self.wealth = self.wealth * (T::one() - stake + stake * e);
                self.stakes.push(stake);
                self.history.push(e);
            }
            BettingStrategy::Grapa { .. } | BettingStrategy::Agrapa { .. } => {
                if x < T::zero() || x > T::one() {
                    return Err(EProcessError::ObservationOutsideUnit);
                }
                let stake = self.next_stake()?.expect("GRAPA always has a stake");
                let mu = self.hypothesis.spec().mu();
                self.wealth = self.wealth * (T::one() + stake * (x - mu));
                self.stakes.push(stake);
                self.history.push(x);
            }
        }
        self.t += 1;
        Ok(self.wealth)
    }

    /// Runs a fresh process over a slice and returns the wealth trajectory
    /// `M_1, ..., M_n`.
    pub fn run(
        hypothesis: Hypothesis<T>,
        strategy: BettingStrategy<T>,
        xs: &[T],
    ) -> Result<Vec<T>, EProcessError> {
        let mut process = Self::new(hypothesis, strategy)?;
        xs.iter().map(|&x| process.update(x)).collect()
    }
}

/// Sample mean and population variance (denominator `n`) of a slice.
pub fn history_moments<T: Scalar>(history: &[T]) -> (T, T) {
    let n = c::<T>(history.len() as f64);
    let mut sum = T::zero();
    for &x in history {
        sum = sum + x;
    }
    let mean = sum / n;
    let mut ss = T::zero();
    for &x in history {
        let d = x - mean;
        ss = ss + d * d;
    }
    (mean, ss / n)
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;
const GOLDEN_ITERS: usize = 60;

/// e-GREE stake: maximizer of the realized log-growth
/// `sum_j log(1 - l + l e_j)` over `l in [0, cap]`.
///
/// The objective is concave, so golden-section search converges to the
/// constrained maximizer; 60 iterations shrink the bracket below 1e-12,
/// comfortably inside the 1e-6 contract.
pub fn gree_lambda<T: Scalar>(history: &[T], cap: T) -> Result<T, EProcessError> {
    if history.is_empty() {
        return Err(EProcessError::EmptyHistory);
    }
    if !(cap > T::zero() && cap < T::one()) {
        return Err(EProcessError::InvalidCap);
    }
    let growth = |l: T| {
        let mut g = T::zero();
        for &e in history {
            g = g + (T::one() - l + l * e).ln();
        }
        g
    };
    let inv_phi = c::<T>(INV_PHI);
    let mut a = T::zero();
    let mut b = cap;
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let mut f1 = growth(x1);
    let mut f2 = growth(x2);
    for _ in 0..GOLDEN_ITERS {
        if f1 >= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = growth(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = growth(x2);
        }
    }
    Ok((a + b) / c(2.0))
}

/// aGRAPA stake from the running moments of past observations:
///
/// ```text
/// l = (mean - mu) / (var + (mean - mu)^2)
/// ```
///
/// clamped to `[-c/(1-mu), c/mu]`. With zero variance the ratio collapses to
/// `1/(mean - mu)` (or zero when the mean sits exactly on the null).
/// `n_prev == 0` yields the neutral stake zero.
pub fn agrapa_lambda<T: Scalar>(
    n_prev: usize,
    mean_prev: T,
    var_prev: T,
    mu: T,
    c_bound: T,
) -> Result<T, EProcessError> {
    if !(mu > T::zero() && mu < T::one()) {
        return Err(EProcessError::MeanOutsideUnit);
    }
    if !(c_bound > T::zero() && c_bound <= T::one()) {
        return Err(EProcessError::InvalidLossBound);
    }
    if n_prev == 0 {
        return Ok(T::zero());
    }
    let gap = mean_prev - mu;
    let denom = var_prev + gap * gap;
    let raw = if denom > T::zero() {
        gap / denom
    } else {
        T::zero()
    };
    let lo = -c_bound / (T::one() - mu);
    let hi = c_bound / mu;
    Ok(raw.max(lo).min(hi))
}

const BISECT_ITERS: usize = 80;

/// Exact GRAPA stake: the root of the empirical log-growth derivative
///
/// ```text
/// psi(l) = sum_j (x_j - mu) / (1 + l (x_j - mu))
/// ```
///
/// on the stake domain `(-1/(1-mu), 1/mu)`, clamped to `[-c/(1-mu), c/mu]`.
/// `psi` is strictly decreasing wherever some `x_j != mu`, so when it keeps
/// one sign over the clamp interval the growth optimum sits at the matching
/// endpoint; otherwise bisection pins the root to 1e-8.
pub fn grapa_lambda_exact<T: Scalar>(
    history: &[T],
    mu: T,
    c_bound: T,
) -> Result<T, EProcessError> {
    if history.is_empty() {
        return Err(EProcessError::EmptyHistory);
    }
    if !(mu > T::zero() && mu < T::one()) {
        return Err(EProcessError::MeanOutsideUnit);
    }
    if !(c_bound > T::zero() && c_bound <= T::one()) {
        return Err(EProcessError::InvalidLossBound);
    }
    if history.iter().any(|&x| x < T::zero() || x > T::one()) {
        return Err(EProcessError::ObservationOutsideUnit);
    }
    let psi = |l: T| {
        let mut s = T::zero();
        for &x in history {
            let d = x - mu;
            s = s + d / (T::one() + l * d);
        }
        s
    };
    // A balanced history makes zero an exact root; return it directly so
    // symmetric inputs do not pick up bisection noise.
    if psi(T::zero()) == T::zero() {
        return Ok(T::zero());
    }
    let mut lo = -c_bound / (T::one() - mu);
    let mut hi = c_bound / mu;
    if psi(lo) < T::zero() {
        return Ok(lo);
    }
    if psi(hi) > T::zero() {
        return Ok(hi);
    }
    // Invariant: psi(lo) >= 0 >= psi(hi).
    for _ in 0..BISECT_ITERS {
        let mid = (lo + hi) / c(2.0);
        if psi(mid) >= T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo + hi) / c(2.0))
}

/// First-crossing summary of a wealth trajectory over a set of thresholds.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionReport<T> {
    /// Thresholds in the order given (each finite and greater than one).
    pub thresholds: Vec<T>,
    /// For each threshold, the 1-based index of the first `M_t >=`
    /// threshold, or `None` if the trajectory never reaches it.
    pub crossings: Vec<Option<usize>>,
}

impl<T: Scalar> DetectionReport<T> {
    /// Crossing index for a given threshold, if that threshold was queried.
    pub fn crossing(&self, threshold: T) -> Option<Option<usize>> {
        self.thresholds
            .iter()
            .position(|&t| t == threshold)
            .map(|i| self.crossings[i])
    }
}

impl DetectionReport<f64> {
    /// CSV rendering with header `threshold,crossing_index`; `-` marks
    /// thresholds that were never crossed.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("threshold,crossing_index\n");
        for (thr, crossing) in self.thresholds.iter().zip(&self.crossings) {
            match crossing {
                Some(idx) => out.push_str(&format!("{},{}\n", crate::sig12(*thr), idx)),
                None => out.push_str(&format!("{},-\n", crate::sig12(*thr))),
            }
        }
        out
    }
}

/// Scans a wealth trajectory for the first crossing of each threshold.
///
/// Crossing indices are non-decreasing in the threshold: reaching a higher
/// level implies having reached every lower one.
pub fn first_crossing<T: Scalar>(
    trajectory: &[T],
    thresholds: &[T],
) -> Result<DetectionReport<T>, EProcessError> {
    if thresholds.is_empty()
        || thresholds
            .iter()
            .any(|t| !(*t > T::one()) || !t.is_finite())
    {
        return Err(EProcessError::InvalidThresholds);
    }
    let crossings = thresholds
        .iter()
        .map(|&thr| trajectory.iter().position(|&m| m >= thr).map(|i| i + 1))
        .collect();
    Ok(DetectionReport {
        thresholds: thresholds.to_vec(),
        crossings,
    })
}

/// Average wealth of two e-processes of equal length. The average of two
/// e-processes for the same null is again an e-process.
pub fn two_sided_avg<T: Scalar>(
    upper: &EProcess<T>,
    lower: &EProcess<T>,
) -> Result<T, EProcessError> {
    if upper.len() != lower.len() {
        return Err(EProcessError::LengthMismatch);
    }
    Ok((upper.wealth() + lower.wealth()) / c(2.0))
}

/// Two-sided test of `lower <= E[X] <= upper` built from two one-sided
/// processes: one fed `x` against the null mean `upper`, one fed `-x`
/// against the null mean `-lower`. Unlike the interval e-value of
/// [`crate::evidence::e_value_two_sided`], this construction keeps shape
/// information (each side may use the symmetric or unimodal e-value).
#[derive(Debug, Clone)]
pub struct TwoSidedAverage<T> {
    upper: EProcess<T>,
    lower: EProcess<T>,
}

impl<T: Scalar> TwoSidedAverage<T> {
    pub fn new(
        lower_mean: T,
        upper_mean: T,
        sigma: T,
        shape: crate::evidence::ShapeClass,
        strategy: BettingStrategy<T>,
    ) -> Result<Self, EProcessError> {
        if strategy.bets_on_raw_observations() {
            return Err(EProcessError::UnsupportedStrategy);
        }
        if lower_mean > upper_mean {
            return Err(EProcessError::Evidence(EvidenceError::InvalidInterval));
        }
        let up = Hypothesis::one_sided(
            crate::evidence::MeanVarSpec::new(upper_mean, sigma)?,
            shape,
        );
        let down = Hypothesis::one_sided(
            crate::evidence::MeanVarSpec::new(-lower_mean, sigma)?,
            shape,
        );
        Ok(Self {
            upper: EProcess::new(up, strategy.clone())?,
            lower: EProcess::new(down, strategy)?,
        })
    }

    /// Feeds one observation to both sides and returns the averaged wealth.
    pub fn update(&mut self, x: T) -> Result<T, EProcessError> {
        self.upper.update(x)?;
        self.lower.update(-x)?;
        self.wealth()
    }

    pub fn wealth(&self) -> Result<T, EProcessError> {
        two_sided_avg(&self.upper, &self.lower)
    }

    pub fn upper(&self) -> &EProcess<T> {
        &self.upper
    }

    pub fn lower(&self) -> &EProcess<T> {
        &self.lower
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evidence::{MeanVarSpec, ShapeClass};
    use approx::assert_relative_eq;

    fn plain_null() -> Hypothesis<f64> {
        Hypothesis::one_sided(MeanVarSpec::new(0.0, 1.0).unwrap(), ShapeClass::Plain)
    }

    fn unit_null(mu: f64) -> Hypothesis<f64> {
        Hypothesis::one_sided(MeanVarSpec::new(mu, 1.0).unwrap(), ShapeClass::Plain)
    }

    #[test]
    fn default_mixture_grid() {
        let BettingStrategy::EMixture { grid } = BettingStrategy::<f64>::default_mixture() else {
            panic!("default is a mixture");
        };
        assert_eq!(grid.len(), 20);
        assert_relative_eq!(grid[0], 0.01);
        assert_relative_eq!(grid[19], 0.20);
        let process = EProcess::new(plain_null(), BettingStrategy::default_mixture()).unwrap();
        assert_eq!(process.per_lambda_wealth().len(), 20);
        assert_eq!(process.wealth(), 1.0);
        assert_eq!(process.len(), 0);
    }

    #[test]
    fn single_stake_mixture_compounds() {
        let strategy = BettingStrategy::EMixture { grid: vec![0.5] };
        let mut process = EProcess::new(plain_null(), strategy).unwrap();
        // Observations with z = sqrt(2) have plain e-value 2, so each factor
        // is 1 - 0.5 + 0.5 * 2 = 1.5.
        let x = 2.0_f64.sqrt();
        assert_relative_eq!(process.update(x).unwrap(), 1.5, epsilon = 1e-12);
        assert_relative_eq!(process.update(x).unwrap(), 2.25, epsilon = 1e-12);
    }

    #[test]
    fn mixture_wealth_is_mean_of_per_stake_wealths() {
        let mut process =
            EProcess::new(plain_null(), BettingStrategy::default_mixture()).unwrap();
        for &x in &[1.5, -0.3, 2.2, 0.0, 3.1] {
            process.update(x).unwrap();
        }
        let mean: f64 =
            process.per_lambda_wealth().iter().sum::<f64>() / process.per_lambda_wealth().len() as f64;
        assert_relative_eq!(process.wealth(), mean, epsilon = 1e-15);
    }

    #[test]
    fn egree_first_stake_is_zero() {
        let mut process = EProcess::new(plain_null(), BettingStrategy::egree()).unwrap();
        assert_eq!(process.next_stake().unwrap(), Some(0.0));
        // A huge first e-value cannot move wealth because nothing is staked.
        assert_relative_eq!(process.update(5.0).unwrap(), 1.0);
        // Afterwards the stake hits the cap: past e-value 25 rewards betting.
        assert_relative_eq!(
            process.next_stake().unwrap().unwrap(),
            0.5,
            epsilon = 1e-6
        );
    }

    #[test]
    fn gree_lambda_analytic_examples() {
        // All-zero histories reward no bet.
        let flat: f64 = gree_lambda(&[0.0, 0.0, 0.0], 0.5).unwrap();
        assert!(flat.abs() <= 1e-6);
        // log(1 + l) is increasing, so the cap binds.
        assert_relative_eq!(gree_lambda(&[2.0], 0.5).unwrap(), 0.5, epsilon = 1e-6);
        // d/dl [log(1 - l) + log(1 + 2l)] = 0 at l = 1/4.
        assert_relative_eq!(gree_lambda(&[0.0, 3.0], 0.5).unwrap(), 0.25, epsilon = 1e-6);
    }

    #[test]
    fn gree_lambda_input_validation() {
        assert_eq!(
            gree_lambda::<f64>(&[], 0.5).unwrap_err(),
            EProcessError::EmptyHistory
        );
        assert_eq!(
            gree_lambda(&[1.0], 0.0).unwrap_err(),
            EProcessError::InvalidCap
        );
        assert_eq!(
            gree_lambda(&[1.0], 1.0).unwrap_err(),
            EProcessError::InvalidCap
        );
    }

    #[test]
    fn agrapa_lambda_examples() {
        // No data yet: neutral stake.
        assert_eq!(agrapa_lambda(0, 0.0, 0.0, 0.2, 0.5).unwrap(), 0.0);
        // Raw stake 0.1 / (0.01 + 0.01) = 5 clamps to 0.5 / 0.2 = 2.5.
        assert_relative_eq!(agrapa_lambda(4, 0.3, 0.01, 0.2, 0.5).unwrap(), 2.5);
        // Mean on the null with zero variance: nothing to exploit.
        assert_eq!(agrapa_lambda(3, 0.2, 0.0, 0.2, 0.5).unwrap(), 0.0);
        // Zero variance off the null collapses to 1/(mean - mu).
        assert_relative_eq!(
            agrapa_lambda(3, 0.9, 0.0, 0.2, 1.0).unwrap(),
            1.0 / 0.7,
            epsilon = 1e-12
        );
        // Downward gap clamps at -c/(1-mu).
        assert_relative_eq!(agrapa_lambda(5, 0.0, 0.001, 0.5, 0.5).unwrap(), -1.0);
        assert_eq!(
            agrapa_lambda(1, 0.5, 0.1, 1.5, 0.5).unwrap_err(),
            EProcessError::MeanOutsideUnit
        );
    }

    #[test]
    fn grapa_lambda_exact_examples() {
        // Constant-sign derivative: clamp endpoint c/mu.
        assert_relative_eq!(grapa_lambda_exact(&[0.9], 0.2, 0.5).unwrap(), 2.5);
        // History pinned on the null mean: zero is an exact root.
        assert_eq!(grapa_lambda_exact(&[0.2], 0.2, 0.5).unwrap(), 0.0);
        // Balanced history (dyadic values, so the gaps cancel exactly):
        // zero by symmetry, no bisection noise.
        assert_eq!(grapa_lambda_exact(&[0.375, 0.125], 0.25, 0.5).unwrap(), 0.0);
        // Interior root: 0.2/(1 + 0.2 l) = 0.15/(1 - 0.15 l) at l = 5/6.
        assert_relative_eq!(
            grapa_lambda_exact(&[0.4, 0.05], 0.2, 0.5).unwrap(),
            5.0 / 6.0,
            epsilon = 1e-8
        );
        // Constant negative sign: clamp endpoint -c/(1-mu).
        assert_relative_eq!(grapa_lambda_exact(&[0.0, 0.1], 0.5, 0.5).unwrap(), -1.0);
        assert_eq!(
            grapa_lambda_exact(&[1.2], 0.2, 0.5).unwrap_err(),
            EProcessError::ObservationOutsideUnit
        );
    }

    #[test]
    fn grapa_root_solves_derivative() {
        // Mixed wins and losses put the growth optimum strictly inside the
        // stake domain, so the returned stake must zero the derivative.
        let history = [0.85, 0.1, 0.7, 0.2, 0.55];
        let mu = 0.4;
        let l = grapa_lambda_exact(&history, mu, 1.0).unwrap();
        assert!(l > 0.0 && l < 1.0 / mu, "expected an interior root, got {l}");
        let psi: f64 = history.iter().map(|x| (x - mu) / (1.0 + l * (x - mu))).sum();
        assert!(psi.abs() < 1e-6, "psi({l}) = {psi}");
    }

    #[test]
    fn grapa_stake_clamps_when_growth_is_monotone() {
        // Every observation beats the null mean strongly enough that the
        // log-growth derivative stays positive across the whole clamp
        // interval; the stake must sit at the endpoint c/mu.
        let history = [0.85, 0.3, 0.7, 0.9, 0.55];
        let l = grapa_lambda_exact(&history, 0.4, 1.0).unwrap();
        assert_relative_eq!(l, 2.5);
    }

    #[test]
    fn stakes_are_reproducible_from_history_prefixes() {
        let data = [0.3, 1.7, -0.4, 2.6, 0.9, 1.1, -1.2, 2.0];
        let mut process = EProcess::new(plain_null(), BettingStrategy::egree()).unwrap();
        for &x in &data {
            process.update(x).unwrap();
        }
        let history = process.history().to_vec();
        for (i, &stake) in process.stakes().iter().enumerate() {
            let expected = if i == 0 {
                0.0
            } else {
                gree_lambda(&history[..i], 0.5).unwrap()
            };
            assert_eq!(stake.to_bits(), expected.to_bits(), "stake {i}");
        }

        let raw = [0.3, 0.8, 0.1, 0.65, 0.95, 0.4];
        let mut agrapa = EProcess::new(unit_null(0.5), BettingStrategy::agrapa()).unwrap();
        for &x in &raw {
            agrapa.update(x).unwrap();
        }
        for (i, &stake) in agrapa.stakes().iter().enumerate() {
            let expected = if i == 0 {
                0.0
            } else {
                let (mean, var) = history_moments(&raw[..i]);
                // One-sided hypothesis: short stakes are floored at zero.
                agrapa_lambda(i, mean, var, 0.5, 0.5).unwrap().max(0.0)
            };
            assert_eq!(stake.to_bits(), expected.to_bits(), "stake {i}");
        }
    }

    #[test]
    fn grapa_requires_unit_interval_setup() {
        let bad_mean = Hypothesis::one_sided(
            MeanVarSpec::new(1.5, 1.0).unwrap(),
            ShapeClass::Plain,
        );
        assert_eq!(
            EProcess::new(bad_mean, BettingStrategy::grapa()).unwrap_err(),
            EProcessError::MeanOutsideUnit
        );
        let interval = Hypothesis::two_sided(0.2, 0.4, 1.0).unwrap();
        assert_eq!(
            EProcess::new(interval, BettingStrategy::grapa()).unwrap_err(),
            EProcessError::IntervalNotPoint
        );
        let mut ok = EProcess::new(unit_null(0.5), BettingStrategy::grapa()).unwrap();
        assert_eq!(
            ok.update(1.2).unwrap_err(),
            EProcessError::ObservationOutsideUnit
        );
        assert_eq!(
            ok.update(f64::NAN).unwrap_err(),
            EProcessError::NonFiniteObservation
        );
    }

    #[test]
    fn two_sided_point_null_uses_squared_statistic() {
        let h = Hypothesis::two_sided(0.0, 0.0, 1.0).unwrap();
        let mut process = EProcess::new(h, BettingStrategy::EMixture { grid: vec![0.5] }).unwrap();
        // e = x^2, so the factor at x = 2 is 1 - 0.5 + 0.5 * 4 = 2.5.
        assert_relative_eq!(process.update(2.0).unwrap(), 2.5, epsilon = 1e-12);
        // Downward deviations count equally.
        assert_relative_eq!(process.update(-2.0).unwrap(), 6.25, epsilon = 1e-12);
    }

    #[test]
    fn averaged_two_sided_process() {
        let mut avg = TwoSidedAverage::new(
            -1.0,
            1.0,
            1.0,
            ShapeClass::Symmetric,
            BettingStrategy::EMixture { grid: vec![0.5] },
        )
        .unwrap();
        // x = 3: upper side sees z = 2 (e = 8), lower side sees z = -4 (e = 0).
        let w = avg.update(3.0).unwrap();
        assert_relative_eq!(w, (4.5 + 0.5) / 2.0, epsilon = 1e-12);
        assert_eq!(avg.upper().len(), avg.lower().len());

        let mismatch = two_sided_avg(
            avg.upper(),
            &EProcess::new(plain_null(), BettingStrategy::egree()).unwrap(),
        );
        assert_eq!(mismatch.unwrap_err(), EProcessError::LengthMismatch);

        assert_eq!(
            TwoSidedAverage::new(
                -1.0,
                1.0,
                1.0,
                ShapeClass::Plain,
                BettingStrategy::<f64>::grapa()
            )
            .unwrap_err(),
            EProcessError::UnsupportedStrategy
        );
    }

    #[test]
    fn first_crossing_reports_one_based_indices() {
        let trajectory = [0.5, 1.2, 0.8, 2.0, 5.0, 4.0, 25.0];
        let report = first_crossing(&trajectory, &[2.0, 5.0, 10.0, 20.0]).unwrap();
        assert_eq!(report.crossings, vec![Some(4), Some(5), Some(7), Some(7)]);
        assert_eq!(report.crossing(5.0), Some(Some(5)));
        assert_eq!(report.crossing(3.0), None);

        let none = first_crossing(&trajectory, &[100.0]).unwrap();
        assert_eq!(none.crossings, vec![None]);
        assert_eq!(
            first_crossing::<f64>(&trajectory, &[]).unwrap_err(),
            EProcessError::InvalidThresholds
        );
        assert_eq!(
            first_crossing(&trajectory, &[1.0]).unwrap_err(),
            EProcessError::InvalidThresholds
        );
    }

    #[test]
    fn detection_report_csv_uses_dash_sentinel() {
        let report = first_crossing(&[0.5, 3.0], &[2.0, 20.0]).unwrap();
        let csv = report.to_csv();
        assert!(csv.starts_with("threshold,crossing_index\n"));
        assert!(csv.contains(",2\n"));
        assert!(csv.ends_with(",-\n"));
    }

    #[test]
    fn strategy_validation() {
        assert!(EProcess::new(
            plain_null(),
            BettingStrategy::EMixture { grid: vec![] }
        )
        .is_err());
        assert!(EProcess::new(
            plain_null(),
            BettingStrategy::EMixture { grid: vec![1.0] }
        )
        .is_err());
        assert!(EProcess::new(plain_null(), BettingStrategy::EGree { cap: 1.0 }).is_err());
        assert!(
            EProcess::new(unit_null(0.5), BettingStrategy::Agrapa { c: 1.5 }).is_err()
        );
    }
}
