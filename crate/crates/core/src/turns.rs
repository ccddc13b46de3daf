//! Fixed-point points of the circle R/Z.
//!
//! A [`Turns`] stores a fraction of a full turn as a 256-bit numerator over
//! 2^256, split into two `u128` words. Addition wraps exactly, so rotations by
//! rationals with large denominators stay exact up to the rounding of the
//! angle itself, and `freq * theta` keeps its fractional part for any `u128`
//! frequency.

use core::ops::{Add, AddAssign, Neg, Sub, SubAssign};

use num_bigint::BigUint;
use num_integer::Integer;

const TWO_POW_128: f64 = 340_282_366_920_938_463_463_374_607_431_768_211_456.0;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Turns {
    pub hi: u128,
    pub lo: u128,
}

impl Turns {
    pub const ZERO: Turns = Turns { hi: 0, lo: 0 };
    pub const HALF: Turns = Turns { hi: 1u128 << 127, lo: 0 };

    pub const fn from_words(hi: u128, lo: u128) -> Turns {
        Turns { hi, lo }
    }

    /// Reduces `x` mod 1. Exact for every finite input.
    pub fn from_f64(x: f64) -> Turns {
        if !x.is_finite() {
            return Turns::ZERO;
        }
        let f = x - libm::trunc(x);
        if f >= 0.0 {
            scaled(f)
        } else {
            -scaled(-f)
        }
    }

    /// Representative in [0, 1).
    pub fn to_f64(self) -> f64 {
        let v = self.hi as f64 / TWO_POW_128 + self.lo as f64 / TWO_POW_128 / TWO_POW_128;
        if v >= 1.0 {
            0.0
        } else {
            v
        }
    }

    /// Representative in [-1/2, 1/2].
    pub fn to_signed_f64(self) -> f64 {
        if self.hi >> 127 == 1 {
            -(-self).to_f64()
        } else {
            self.to_f64()
        }
    }

    /// `k * self` mod 1.
    pub fn times(self, k: u128) -> Turns {
        let (carry, lo) = widening_mul(self.lo, k);
        Turns { hi: self.hi.wrapping_mul(k).wrapping_add(carry), lo }
    }

    /// Phase of `freq * self` in [0, 1), exact before the final rounding.
    pub fn phase(self, freq: u128) -> f64 {
        self.times(freq).to_f64()
    }

    /// Numerator over 2^256.
    pub fn to_biguint(self) -> BigUint {
        (BigUint::from(self.hi) << 128u32) | BigUint::from(self.lo)
    }

    /// Nearest fixed-point value to `p/q` mod 1.
    pub fn from_ratio(p: &BigUint, q: &BigUint) -> Turns {
        let r = p.mod_floor(q);
        let num: BigUint = (r << 256u32) + (q >> 1u32);
        let v: BigUint = num / q;
        let d = v.to_u64_digits();
        let w = |i: usize| d.get(i).copied().unwrap_or(0) as u128;
        Turns { hi: w(2) | (w(3) << 64), lo: w(0) | (w(1) << 64) }
    }

    pub fn distance(self, other: Turns) -> f64 {
        libm::fabs((self - other).to_signed_f64())
    }
}

fn widening_mul(a: u128, b: u128) -> (u128, u128) {
    const M: u128 = u64::MAX as u128;
    let (a0, a1) = (a & M, a >> 64);
    let (b0, b1) = (b & M, b >> 64);
    let p00 = a0 * b0;
    let p01 = a0 * b1;
    let p10 = a1 * b0;
    let p11 = a1 * b1;
    let mid = (p00 >> 64) + (p01 & M) + (p10 & M);
    let lo = (p00 & M) | (mid << 64);
    let hi = p11 + (p01 >> 64) + (p10 >> 64) + (mid >> 64);
    (hi, lo)
}

// f in [0, 1); f * 2^128 is exact, and so is its fractional part
fn scaled(f: f64) -> Turns {
    let s = f * TWO_POW_128;
    if s >= TWO_POW_128 {
        return Turns::ZERO;
    }
    let hi = s as u128;
    let rest = s - hi as f64;
    Turns { hi, lo: (rest * TWO_POW_128) as u128 }
}

impl Add for Turns {
    type Output = Turns;
    fn add(self, o: Turns) -> Turns {
        let (lo, c) = self.lo.overflowing_add(o.lo);
        Turns { hi: self.hi.wrapping_add(o.hi).wrapping_add(c as u128), lo }
    }
}

impl Sub for Turns {
    type Output = Turns;
    fn sub(self, o: Turns) -> Turns {
        let (lo, b) = self.lo.overflowing_sub(o.lo);
        Turns { hi: self.hi.wrapping_sub(o.hi).wrapping_sub(b as u128), lo }
    }
}

impl Neg for Turns {
    type Output = Turns;
    fn neg(self) -> Turns {
        Turns::ZERO - self
    }
}

impl AddAssign for Turns {
    fn add_assign(&mut self, o: Turns) {
        *self = *self + o;
    }
}

impl SubAssign for Turns {
    fn sub_assign(&mut self, o: Turns) {
        *self = *self - o;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wraps_exactly() {
        let a = Turns::from_f64(0.75);
        let b = Turns::from_f64(0.5);
        assert_eq!((a + b).to_f64(), 0.25);
        assert_eq!(Turns::from_f64(-0.25).to_f64(), 0.75);
        assert_eq!(Turns::from_f64(3.5).to_f64(), 0.5);
    }

    #[test]
    fn tiny_negative_offsets_survive() {
        let t = Turns::from_f64(-1e-21);
        assert!((t.to_signed_f64() + 1e-21).abs() < 1e-35);
    }

    #[test]
    fn ratio_rounding() {
        let t = Turns::from_ratio(&BigUint::from(1u32), &BigUint::from(4u32));
        assert_eq!(t, Turns::from_words(1u128 << 126, 0));
        let third = Turns::from_ratio(&BigUint::from(1u32), &BigUint::from(3u32));
        let e = third.times(3);
        assert_eq!(e.min(-e), Turns::from_words(0, 1));
    }

    #[test]
    fn widening_products() {
        assert_eq!(widening_mul(u128::MAX, u128::MAX), (u128::MAX - 1, 1));
        assert_eq!(widening_mul(1 << 100, 1 << 100), (1 << 72, 0));
        let t = Turns::from_words(3, u128::MAX);
        assert_eq!(t.times(2), Turns::from_words(7, u128::MAX - 1));
    }

    #[test]
    fn huge_frequency_phase() {
        let q = BigUint::from(3u32) * (BigUint::from(1u32) << 120u32);
        let t = Turns::from_ratio(&BigUint::from(1u32), &q);
        let f = 3u128 << 120;
        let ph = t.phase(f);
        assert!(ph < 1e-30 || ph > 1.0 - 1e-30, "{ph}");
        assert!((t.phase(f / 2) - 0.5).abs() < 1e-30);
        assert!((Turns::from_f64(1e-40).to_f64() / 1e-40 - 1.0).abs() < 1e-15);
    }

    #[test]
    fn phase_of_lattice_point() {
        let t = Turns::from_ratio(&BigUint::from(5u32), &BigUint::from(36u32));
        assert!(t.phase(36) < 1e-30 || t.phase(36) > 1.0 - 1e-30);
        assert!((t.phase(18) - 0.5).abs() < 1e-30);
    }
}
