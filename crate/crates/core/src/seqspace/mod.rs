//! Finite-sequence numerics for `ℓ^p` spaces.
//!
//! Every finite sequence is identified with its zero padding, so `pnorm_pow`
//! of a finite sequence is the `p`-power sum of the corresponding element of
//! `c_00`. For `p >= 1` that is the `p`-th power of the norm, for `p < 1` it
//! is `d_p(x, 0)`.
//!
//! Strict inequalities are checked through [`certified_less`], which demands a
//! slack of `eta` so that rounding cannot flip a strict bound.

mod finseq;
mod ladder;
mod sum;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use finseq::{zip_padded, Count, FinSeq, Run};
pub use ladder::ExpLadder;
pub use sum::NeumaierSum;

/// A strictly positive exponent.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct Exponent(f64);

impl Exponent {
    pub fn new(value: f64) -> Result<Self> {
        if value.is_finite() && value > 0.0 {
            Ok(Self(value))
        } else {
            Err(Error::invalid(format!(
                "exponent must be finite and > 0, got {value}"
            )))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Exponent {
    type Error = Error;

    fn try_from(value: f64) -> Result<Self> {
        Exponent::new(value)
    }
}

/// Slack required by strict comparisons.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Margin {
    eta: f64,
}

impl Margin {
    pub const DEFAULT_ETA: f64 = 1.0 / 1_048_576.0;

    pub fn new(eta: f64) -> Result<Self> {
        if eta.is_finite() && eta >= 0.0 {
            Ok(Self { eta })
        } else {
            Err(Error::invalid(format!(
                "margin must be finite and >= 0, got {eta}"
            )))
        }
    }

    pub fn eta(self) -> f64 {
        self.eta
    }
}

impl Default for Margin {
    fn default() -> Self {
        Self {
            eta: Self::DEFAULT_ETA,
        }
    }
}

/// `lhs + eta < rhs`.
pub fn certified_less(lhs: f64, rhs: f64, m: Margin) -> bool {
    lhs + m.eta < rhs
}

/// `Σ |x(n)|^p` over the entries of `x`, with compensated accumulation.
pub fn pnorm_pow(x: &FinSeq, p: Exponent) -> Result<f64> {
    let mut acc = NeumaierSum::new();
    for r in x.runs() {
        if !r.value.is_finite() {
            return Err(Error::invalid(format!(
                "non-finite entry {} in sequence",
                r.value
            )));
        }
        acc += r.count as f64 * r.value.abs().powf(p.value());
    }
    Ok(acc.value())
}

/// `u ⌢ v`.
pub fn concat(u: &FinSeq, v: &FinSeq) -> FinSeq {
    u.concat(v)
}

/// `d_p(x, y) = Σ |x_n - y_n|^p` for `0 < p < 1`.
pub fn dp_metric(x: &FinSeq, y: &FinSeq, p: Exponent) -> Result<f64> {
    if p.value() >= 1.0 {
        return Err(Error::domain(format!(
            "d_p is the metric for 0 < p < 1; got p = {} (use the p-norm)",
            p.value()
        )));
    }
    pnorm_pow(&x.sub(y), p)
}

/// A truncation of an infinite series with a certified bound on the omitted tail.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Truncated {
    pub value: f64,
    pub tail_bound: f64,
}

/// The first `terms` summands of `d_{>b}(x, y)` where `b = ladder.floor()`.
///
/// For `b >= 1` the i-th term uses `‖x - y‖_{p_i}`, for `b < 1` it uses
/// `d_{p_i}(x, y)`; every weighted summand is below `2^-(i+1)`, so the tail
/// after `terms` summands is at most `2^-terms`.
pub fn frechet_metric(
    x: &FinSeq,
    y: &FinSeq,
    ladder: &ExpLadder,
    terms: usize,
) -> Result<Truncated> {
    if terms == 0 {
        return Err(Error::invalid("frechet_metric needs at least one term"));
    }
    let b = ladder.floor();
    if b < 1.0 && ladder.p(0) >= 1.0 {
        return Err(Error::invalid(format!(
            "for b = {b} < 1 the ladder must start below 1, got p_0 = {}",
            ladder.p(0)
        )));
    }
    let diff = x.sub(y);
    let mut acc = NeumaierSum::new();
    let mut weight = 1.0;
    for i in 0..terms {
        weight *= 0.5;
        let p = ladder.exponent(i);
        let t = if b >= 1.0 {
            pnorm_pow(&diff, p)?.powf(1.0 / p.value())
        } else {
            pnorm_pow(&diff, p)?
        };
        acc += weight * (t / (1.0 + t));
    }
    Ok(Truncated {
        value: acc.value(),
        tail_bound: weight,
    })
}

/// `max |x(n)|`, zero for the empty sequence.
pub fn sup_norm(x: &FinSeq) -> f64 {
    x.runs().iter().map(|r| r.value.abs()).fold(0.0, f64::max)
}
