//! Scalar quantities: the entropy-equation thresholds for 1- and
//! 2-expansion, the augmentation yield `ζ`, per-step success probabilities and
//! a two-sided Chernoff tail.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `log2(27/4)`, equal to `3 log2(3) - 2`.
pub const LOG2_27_OVER_4: f64 = 2.754_887_502_163_468;

/// Default bracket width for [`solve_threshold`].
pub const DEFAULT_TOLERANCE: f64 = 1e-12;

const BRACKET_EPS: f64 = 1e-9;
const MAX_BISECTIONS: usize = 200;

/// `-x log2 x - (1-x) log2(1-x)` with `0 log 0 = 0`.
pub fn binary_entropy(x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain(format!("entropy argument {x} outside [0, 1]")));
    }
    Ok(xlog2x_neg(x) + xlog2x_neg(1.0 - x))
}

fn xlog2x_neg(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        -x * x.log2()
    }
}

/// Which expansion factor the threshold belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Which {
    /// `β = 1`, root of `2(k+1)x + H(2x) - kH(x)` on `(0, 1/2)`.
    Alpha1,
    /// `β = 2`, root of `log2(27/4)(k+1)x + H(3x) - kH(x)` on `(0, 1/3)`.
    Alpha2,
}

impl Which {
    pub fn upper_limit(self) -> f64 {
        match self {
            Which::Alpha1 => 0.5,
            Which::Alpha2 => 1.0 / 3.0,
        }
    }

    pub fn min_k(self) -> u32 {
        match self {
            Which::Alpha1 => 3,
            Which::Alpha2 => 4,
        }
    }

    pub fn eval(self, x: f64, k: u32) -> Result<f64> {
        match self {
            Which::Alpha1 => f1(x, k),
            Which::Alpha2 => f2(x, k),
        }
    }
}

impl std::str::FromStr for Which {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "alpha1" => Ok(Which::Alpha1),
            "alpha2" => Ok(Which::Alpha2),
            other => Err(Error::InvalidParameter(format!("unknown threshold family {other:?}"))),
        }
    }
}

pub fn f1(x: f64, k: u32) -> Result<f64> {
    if !(0.0..=0.5).contains(&x) {
        return Err(Error::Domain(format!("f1 argument {x} outside [0, 1/2]")));
    }
    let k = f64::from(k);
    Ok(2.0 * (k + 1.0) * x + binary_entropy(2.0 * x)? - k * binary_entropy(x)?)
}

pub fn f2(x: f64, k: u32) -> Result<f64> {
    if !(0.0..=1.0 / 3.0).contains(&x) {
        return Err(Error::Domain(format!("f2 argument {x} outside [0, 1/3]")));
    }
    let k = f64::from(k);
    // 3x can exceed 1 by an ulp at the right end
    let three_x = (3.0 * x).min(1.0);
    Ok(LOG2_27_OVER_4 * (k + 1.0) * x + binary_entropy(three_x)? - k * binary_entropy(x)?)
}

/// Root of the threshold equation with its final bisection bracket.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdSolution {
    pub k: u32,
    pub which: Which,
    pub root: f64,
    pub bracket: (f64, f64),
    pub tolerance: f64,
}

/// Bisection from `[1e-9, limit - 1e-9]` until the bracket is narrower than `tol`.
pub fn solve_threshold(k: u32, which: Which, tol: f64) -> Result<ThresholdSolution> {
    if k < which.min_k() {
        return Err(Error::Domain(format!("{which:?} needs k >= {}, got {k}", which.min_k())));
    }
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::InvalidParameter(format!("tolerance must be positive, got {tol}")));
    }
    let mut lo = BRACKET_EPS;
    let mut hi = which.upper_limit() - BRACKET_EPS;
    let f_lo = which.eval(lo, k)?;
    let f_hi = which.eval(hi, k)?;
    if f_lo.signum() == f_hi.signum() {
        return Err(Error::NoSignChange { k });
    }
    let lo_negative = f_lo < 0.0;
    for _ in 0..MAX_BISECTIONS {
        if hi - lo <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let f_mid = which.eval(mid, k)?;
        if f_mid == 0.0 {
            lo = mid;
            hi = mid;
            break;
        }
        if (f_mid < 0.0) == lo_negative {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(ThresholdSolution { k, which, root: 0.5 * (lo + hi), bracket: (lo, hi), tolerance: tol })
}

/// `α - 1/(k+1) + (1-α)^(k+1)/(k+1)`.
pub fn zeta(alpha: f64, k: u32) -> f64 {
    let k1 = f64::from(k) + 1.0;
    alpha - 1.0 / k1 + (1.0 - alpha).powf(k1) / k1
}

/// `ζ` together with the deficit (matchings) or path fraction (cycles) it is compared to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AugmentationScalars {
    pub alpha: f64,
    pub k: u32,
    pub zeta: f64,
    pub compared_to: f64,
}

impl AugmentationScalars {
    /// Matching case: perfect matching expected when `ζ > γ/2`.
    pub fn for_matching(alpha: f64, k: u32, gamma: f64) -> Self {
        Self { alpha, k, zeta: zeta(alpha, k), compared_to: gamma / 2.0 }
    }

    /// Path case: Hamilton cycle expected when `ζ > 1 - λ`.
    pub fn for_path(alpha: f64, k: u32, lambda: f64) -> Self {
        Self { alpha, k, zeta: zeta(alpha, k), compared_to: 1.0 - lambda }
    }

    pub fn succeeds(&self) -> bool {
        self.zeta > self.compared_to
    }
}

/// `1 - (1 - (αn - (i-1))/n)^k` for step `1 <= i <= αn`.
pub fn step_success_prob(alpha: f64, i: u64, n: u64, k: u32) -> Result<f64> {
    let span = alpha * n as f64;
    if i == 0 || i as f64 > span {
        return Err(Error::Domain(format!("step {i} outside [1, {span}]")));
    }
    let hit = (span - (i as f64 - 1.0)) / n as f64;
    let p = 1.0 - (1.0 - hit).powi(k as i32);
    Ok(p.clamp(0.0, 1.0))
}

/// `∫_0^α 1 - (1 - (α - x))^k dx`, which equals [`zeta`].
pub fn expected_success_total(alpha: f64, k: u32) -> f64 {
    let k1 = f64::from(k) + 1.0;
    // antiderivative of 1 - (1 - u)^k is u + (1 - u)^(k+1)/(k+1)
    (alpha + (1.0 - alpha).powf(k1) / k1) - 1.0 / k1
}

/// `2 exp(-ε² μ / 3)`, valid for `0 < ε < 3/2`.
pub fn chernoff_bound(mu: f64, eps: f64) -> Result<f64> {
    if mu < 0.0 {
        return Err(Error::Domain(format!("mean {mu} is negative")));
    }
    if !(eps > 0.0 && eps < 1.5) {
        return Err(Error::Domain(format!("epsilon {eps} outside (0, 3/2)")));
    }
    Ok(2.0 * (-eps * eps * mu / 3.0).exp())
}
