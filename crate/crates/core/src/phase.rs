//! Rational numbers modulo 1, used as exponents of roots of unity.

use crate::error::{Error, Result};
use num_integer::Integer;
use serde::{Deserialize, Serialize};
use std::fmt;

/// The class of `num/den` in `Q/Z`, kept reduced with `0 ≤ num < den`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Phase {
    num: u64,
    den: u64,
}

impl Phase {
    pub const ZERO: Phase = Phase { num: 0, den: 1 };
    pub const HALF: Phase = Phase { num: 1, den: 2 };

    pub fn new(num: i128, den: u64) -> Phase {
        assert!(den > 0, "phase denominator must be positive");
        let n = num.rem_euclid(den as i128) as u64;
        let g = n.gcd(&den);
        Phase {
            num: n / g,
            den: den / g,
        }
    }

    pub fn num(&self) -> u64 {
        self.num
    }

    pub fn den(&self) -> u64 {
        self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num == 0
    }

    pub fn add(&self, o: &Phase) -> Phase {
        let den = self.den.lcm(&o.den);
        let n = self.num as i128 * (den / self.den) as i128 + o.num as i128 * (den / o.den) as i128;
        Phase::new(n, den)
    }

    pub fn sub(&self, o: &Phase) -> Phase {
        self.add(&o.neg())
    }

    pub fn neg(&self) -> Phase {
        Phase::new(-(self.num as i128), self.den)
    }

    pub fn scale(&self, k: i64) -> Phase {
        Phase::new(self.num as i128 * k as i128, self.den)
    }

    /// Both square roots of `self` in `Q/Z`.
    pub fn halves(&self) -> [Phase; 2] {
        let h = Phase::new(self.num as i128, self.den * 2);
        [h, h.add(&Phase::HALF)]
    }

    /// The exponent as a multiple of `1/order`.
    pub fn in_units(&self, order: u64) -> Result<u64> {
        if !order.is_multiple_of(self.den) {
            return Err(Error::DenominatorMismatch {
                den: self.den,
                order,
            });
        }
        Ok(self.num * (order / self.den))
    }

    /// `±1` for phases `0` and `1/2`, `None` otherwise.
    pub fn as_sign(&self) -> Option<i8> {
        match (self.num, self.den) {
            (0, _) => Some(1),
            (1, 2) => Some(-1),
            _ => None,
        }
    }

    pub fn from_sign(s: i8) -> Phase {
        if s < 0 {
            Phase::HALF
        } else {
            Phase::ZERO
        }
    }

    pub fn to_f64(&self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

impl fmt::Debug for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

impl std::str::FromStr for Phase {
    type Err = Error;
    fn from_str(s: &str) -> Result<Phase> {
        let bad = || Error::BadEncoding(s.to_string());
        let (n, d) = s.split_once('/').ok_or_else(bad)?;
        let n: i128 = n.trim().parse().map_err(|_| bad())?;
        let d: u64 = d.trim().parse().map_err(|_| bad())?;
        if d == 0 {
            return Err(bad());
        }
        Ok(Phase::new(n, d))
    }
}
