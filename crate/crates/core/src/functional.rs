//! Separable convex potentials and their Bregman distances.
//!
//! Every potential is a sum of a scalar function over components, so the
//! scalar value, derivative and inverse derivative are all that the
//! projection code needs.

use std::f64::consts::E;
use std::fmt;
use std::str::FromStr;

use crate::error::{check_len, Error, Result};

const INV_E: f64 = 1.0 / E;

/// Which Bregman potential drives the projections.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FunctionalKind {
    /// `g(v) = v^2`; D-projections are orthogonal projections.
    Euclidean,
    /// `g(v) = v ln v` on `v >= 0`; projections are the multiplicative MART update.
    PositiveEntropy,
    /// `g(v) = (|v| + 1/e) ln(|v| + 1/e) + 1/e`, defined on all reals.
    ShiftedEntropy,
}

impl FunctionalKind {
    pub const ALL: [FunctionalKind; 3] = [
        FunctionalKind::Euclidean,
        FunctionalKind::PositiveEntropy,
        FunctionalKind::ShiftedEntropy,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FunctionalKind::Euclidean => "euclidean",
            FunctionalKind::PositiveEntropy => "positive-entropy",
            FunctionalKind::ShiftedEntropy => "shifted-entropy",
        }
    }

    fn domain_error(self, value: f64) -> Error {
        Error::Domain { kind: self.name(), value }
    }

    /// Scalar potential `g(v)`.
    ///
    /// The shifted entropy is evaluated as `(|v| + 1/e) ln(1 + e|v|) - |v|`,
    /// which is algebraically identical and keeps full precision near zero.
    pub fn potential(self, v: f64) -> Result<f64> {
        match self {
            FunctionalKind::Euclidean => Ok(v * v),
            FunctionalKind::PositiveEntropy => {
                if v < 0.0 || v.is_nan() {
                    Err(self.domain_error(v))
                } else if v == 0.0 {
                    Ok(0.0)
                } else {
                    Ok(v * v.ln())
                }
            }
            FunctionalKind::ShiftedEntropy => {
                let a = v.abs();
                Ok((a + INV_E) * (E * a).ln_1p() - a)
            }
        }
    }

    /// Derivative `g'(v)`. Zero at the origin for the shifted entropy.
    pub fn gradient(self, v: f64) -> Result<f64> {
        match self {
            FunctionalKind::Euclidean => Ok(2.0 * v),
            FunctionalKind::PositiveEntropy => {
                if v > 0.0 {
                    Ok(v.ln() + 1.0)
                } else {
                    Err(self.domain_error(v))
                }
            }
            FunctionalKind::ShiftedEntropy => Ok(shifted_gradient(v)),
        }
    }

    /// The unique `v` with `g'(v) = u`. Total on the reals for all three kinds.
    pub fn gradient_inverse(self, u: f64) -> f64 {
        match self {
            FunctionalKind::Euclidean => 0.5 * u,
            FunctionalKind::PositiveEntropy => (u - 1.0).exp(),
            FunctionalKind::ShiftedEntropy => shifted_gradient_inverse(u),
        }
    }

    /// Derivative of [`gradient_inverse`](Self::gradient_inverse) at `u`,
    /// i.e. `1 / g''(v)` at `v = (g')^{-1}(u)`.
    pub fn gradient_inverse_slope(self, u: f64) -> f64 {
        match self {
            FunctionalKind::Euclidean => 0.5,
            FunctionalKind::PositiveEntropy => (u - 1.0).exp(),
            FunctionalKind::ShiftedEntropy => u.abs().exp_m1() * INV_E + INV_E,
        }
    }

    /// `sum_n g(v_n)`.
    pub fn total_potential(self, v: &[f64]) -> Result<f64> {
        v.iter().map(|&x| self.potential(x)).sum()
    }

    /// Bregman distance `D(a, b) = g(a) - g(b) - <g'(b), a - b>`.
    ///
    /// This is the standard argument order: the gradient is taken at the
    /// second argument. A D-projection of `s0` onto a set minimizes
    /// `D(s, s0)` over `s` in the set. For the Euclidean kind the result is
    /// the squared distance `|a - b|^2`.
    pub fn bregman_distance(self, a: &[f64], b: &[f64]) -> Result<f64> {
        check_len(a.len(), b.len())?;
        let mut total = 0.0;
        for (&p, &q) in a.iter().zip(b) {
            total += match self {
                FunctionalKind::Euclidean => (p - q) * (p - q),
                FunctionalKind::PositiveEntropy => {
                    if p < 0.0 {
                        return Err(self.domain_error(p));
                    }
                    let gq = self.gradient(q)?;
                    self.potential(p)? - self.potential(q)? - gq * (p - q)
                }
                FunctionalKind::ShiftedEntropy => {
                    self.potential(p)? - self.potential(q)? - shifted_gradient(q) * (p - q)
                }
            };
        }
        Ok(total)
    }
}

/// `sgn(v) (ln(|v| + 1/e) + 1)`, written as `sgn(v) ln(1 + e|v|)`.
fn shifted_gradient(v: f64) -> f64 {
    if v == 0.0 {
        0.0
    } else {
        (E * v.abs()).ln_1p().copysign(v)
    }
}

/// `sgn(u) (e^{|u| - 1} - 1/e)`, written as `sgn(u) expm1(|u|) / e`.
fn shifted_gradient_inverse(u: f64) -> f64 {
    if u == 0.0 {
        0.0
    } else {
        (u.abs().exp_m1() * INV_E).copysign(u)
    }
}

impl fmt::Display for FunctionalKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FunctionalKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euclidean" => Ok(FunctionalKind::Euclidean),
            "positive-entropy" => Ok(FunctionalKind::PositiveEntropy),
            "shifted-entropy" => Ok(FunctionalKind::ShiftedEntropy),
            other => Err(Error::InvalidArgument(format!("unknown functional kind '{other}'"))),
        }
    }
}
