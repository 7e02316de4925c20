use serde::{Deserialize, Serialize};

use super::Exponent;
use crate::error::{Error, Result};

/// A strictly decreasing exponent sequence `p_0 > p_1 > ... ↓ floor`, capped by `top > p_0`.
///
/// In the main construction `floor` is `a` and `top` is the target space exponent `q`;
/// for the Fréchet metric `d_{>b}` the floor is `b`. Without an override the ladder is
/// `p_i = floor + (top - floor) * 2^-(i+1)`. An override list supplies the first entries;
/// past its end the distance to the floor keeps halving.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpLadder {
    floor: f64,
    top: f64,
    explicit: Vec<f64>,
}

impl ExpLadder {
    pub fn new(floor: f64, top: f64) -> Result<Self> {
        Self::with_override(floor, top, Vec::new())
    }

    pub fn with_override(floor: f64, top: f64, explicit: Vec<f64>) -> Result<Self> {
        if !(floor.is_finite() && top.is_finite()) || floor < 0.0 || floor >= top {
            return Err(Error::invalid(format!(
                "ladder needs 0 <= floor < top, got floor={floor}, top={top}"
            )));
        }
        let mut prev = top;
        for (i, &p) in explicit.iter().enumerate() {
            if !p.is_finite() || p >= prev || p <= floor {
                return Err(Error::invalid(format!(
                    "ladder override must satisfy top > p_0 > p_1 > ... > floor; p_{i}={p} breaks it"
                )));
            }
            prev = p;
        }
        Ok(Self {
            floor,
            top,
            explicit,
        })
    }

    /// Default ladder for `d_{>b}`: entries stay below 1 when `b < 1`.
    pub fn for_frechet(b: f64) -> Result<Self> {
        let top = if b < 1.0 { 1.0 } else { b + 1.0 };
        Self::new(b, top)
    }

    pub fn floor(&self) -> f64 {
        self.floor
    }

    pub fn top(&self) -> f64 {
        self.top
    }

    pub fn overrides(&self) -> &[f64] {
        &self.explicit
    }

    pub fn p(&self, i: usize) -> f64 {
        match self.explicit.last() {
            None => self.floor + (self.top - self.floor) * half_pow(i + 1),
            Some(_) if i < self.explicit.len() => self.explicit[i],
            Some(&last) => self.floor + (last - self.floor) * half_pow(i + 1 - self.explicit.len()),
        }
    }

    pub fn exponent(&self, i: usize) -> Exponent {
        Exponent::new(self.p(i)).expect("ladder entries are positive")
    }

    pub fn top_exponent(&self) -> Exponent {
        Exponent::new(self.top).expect("ladder top is positive")
    }
}

fn half_pow(n: usize) -> f64 {
    0.5f64.powi(i32::try_from(n).unwrap_or(i32::MAX))
}
