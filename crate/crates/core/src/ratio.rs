//! 128-bit nonnegative rationals with overflow detection.
//!
//! Every operation reduces to lowest terms and reports overflow instead of
//! wrapping; evaluation treats overflow as loss of exactness and aborts.

use num_integer::Integer;
use thiserror::Error;

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
#[error("128-bit rational overflow")]
pub struct RatOverflow;

/// Reduced fraction `num/den` with `den > 0`.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct Rat128 {
    num: u128,
    den: u128,
}

impl Rat128 {
    pub const ZERO: Rat128 = Rat128 { num: 0, den: 1 };
    pub const ONE: Rat128 = Rat128 { num: 1, den: 1 };

    pub fn new(num: u128, den: u128) -> Result<Self, RatOverflow> {
        if den == 0 {
            return Err(RatOverflow);
        }
        let g = num.gcd(&den);
        Ok(Rat128 {
            num: num / g,
            den: den / g,
        })
    }

    pub fn num(&self) -> u128 {
        self.num
    }

    pub fn den(&self) -> u128 {
        self.den
    }

    pub fn is_integer(&self) -> bool {
        self.den == 1
    }

    pub fn checked_add(&self, other: &Rat128) -> Result<Rat128, RatOverflow> {
        let g = self.den.gcd(&other.den);
        let da = self.den / g;
        let db = other.den / g;
        // lcm = da * db * g
        let lhs = self.num.checked_mul(db).ok_or(RatOverflow)?;
        let rhs = other.num.checked_mul(da).ok_or(RatOverflow)?;
        let num = lhs.checked_add(rhs).ok_or(RatOverflow)?;
        let den = da.checked_mul(other.den).ok_or(RatOverflow)?;
        Rat128::new(num, den)
    }

    /// Multiply by the fraction `a/b`.
    pub fn checked_mul_frac(&self, a: u64, b: u64) -> Result<Rat128, RatOverflow> {
        let mut a = a as u128;
        let mut b = b as u128;
        if b == 0 {
            return Err(RatOverflow);
        }
        let g0 = a.gcd(&b);
        a /= g0;
        b /= g0;
        let g1 = self.num.gcd(&b);
        let n1 = self.num / g1;
        b /= g1;
        let g2 = a.gcd(&self.den);
        a /= g2;
        let d1 = self.den / g2;
        // cross-cancelled factors are pairwise coprime, so the result is reduced
        Ok(Rat128 {
            num: n1.checked_mul(a).ok_or(RatOverflow)?,
            den: d1.checked_mul(b).ok_or(RatOverflow)?,
        })
    }

    pub fn to_f64(&self) -> f64 {
        self.num as f64 / self.den as f64
    }
}
