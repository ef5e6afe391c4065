//! Double-double arithmetic.
//!
//! A value is the unevaluated sum `hi + lo` with `|lo| <= ulp(hi)/2`, giving
//! roughly 106 bits of significand. Only the operations needed for phase
//! reduction are provided: the four basic operations, `exp`, `ln`, floor and
//! fractional part.

use std::ops::{Add, Div, Mul, Neg, Sub};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DoubleDouble {
    pub hi: f64,
    pub lo: f64,
}

pub const LN2: DoubleDouble = DoubleDouble::new(std::f64::consts::LN_2, 2.3190468138462996e-17);
pub const TWO_PI: DoubleDouble = DoubleDouble::new(std::f64::consts::TAU, 2.4492935982947064e-16);

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let e = (a - (s - bb)) + (b - bb);
    (s, e)
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let e = b - (s - a);
    (s, e)
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    let e = a.mul_add(b, -p);
    (p, e)
}

impl DoubleDouble {
    pub const ZERO: DoubleDouble = DoubleDouble::new(0.0, 0.0);
    pub const ONE: DoubleDouble = DoubleDouble::new(1.0, 0.0);

    pub const fn new(hi: f64, lo: f64) -> Self {
        Self { hi, lo }
    }

    pub const fn from_f64(x: f64) -> Self {
        Self { hi: x, lo: 0.0 }
    }

    /// Exact conversion of any `u64`.
    pub fn from_u64(x: u64) -> Self {
        let hi = x as f64;
        // `hi` may round above `x`; the signed remainder is exact in i128.
        let rem = x as i128 - hi as i128;
        let (hi, lo) = quick_two_sum(hi, rem as f64);
        Self { hi, lo }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub fn mul_f64(self, b: f64) -> Self {
        let (p, e) = two_prod(self.hi, b);
        let e = self.lo.mul_add(b, e);
        let (hi, lo) = quick_two_sum(p, e);
        Self { hi, lo }
    }

    /// Multiplication by a power of two, exact barring overflow.
    fn scale_pow2(self, k: i32) -> Self {
        let s = 2f64.powi(k);
        Self {
            hi: self.hi * s,
            lo: self.lo * s,
        }
    }

    pub fn floor(self) -> Self {
        let fh = self.hi.floor();
        if fh == self.hi {
            let (hi, lo) = quick_two_sum(fh, self.lo.floor());
            Self { hi, lo }
        } else {
            Self { hi: fh, lo: 0.0 }
        }
    }

    /// Fractional part `x - floor(x)` as an `f64` in `[0, 1)`.
    pub fn frac(self) -> f64 {
        let r = self - self.floor();
        let mut f = r.hi + r.lo;
        if f < 0.0 {
            f += 1.0;
        }
        if f >= 1.0 {
            f -= 1.0;
        }
        if !(0.0..1.0).contains(&f) {
            0.0
        } else {
            f
        }
    }

    pub fn exp(self) -> Self {
        if self.hi > 709.0 {
            return Self::from_f64(f64::INFINITY);
        }
        if self.hi < -745.0 {
            return Self::ZERO;
        }
        let k = (self.hi / LN2.hi).round();
        let r = (self - LN2.mul_f64(k)).scale_pow2(-10);

        // expm1(r) by Horner, |r| < 3.5e-4 so eleven terms reach 1e-40.
        let mut s = Self::ONE;
        for n in (2..=11).rev() {
            s = Self::ONE + (r / Self::from_f64(n as f64)) * s;
        }
        let mut s = r * s;
        // Undo the 2^-10 scaling: expm1(2t) = expm1(t) * (expm1(t) + 2).
        for _ in 0..10 {
            s = s * (s + Self::from_f64(2.0));
        }
        (s + Self::ONE).scale_pow2(k as i32)
    }

    /// Natural logarithm by one Newton step on `exp(y) = x`.
    pub fn ln(self) -> Self {
        debug_assert!(self.hi > 0.0, "ln of non-positive value");
        let y = Self::from_f64(self.hi.ln());
        y + self * (-y).exp() - Self::ONE
    }
}

impl From<f64> for DoubleDouble {
    fn from(x: f64) -> Self {
        Self::from_f64(x)
    }
}

impl Neg for DoubleDouble {
    type Output = Self;
    fn neg(self) -> Self {
        Self {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

impl Add for DoubleDouble {
    type Output = Self;
    fn add(self, b: Self) -> Self {
        let (s1, s2) = two_sum(self.hi, b.hi);
        let (t1, t2) = two_sum(self.lo, b.lo);
        let (s1, s2) = quick_two_sum(s1, s2 + t1);
        let (hi, lo) = quick_two_sum(s1, s2 + t2);
        Self { hi, lo }
    }
}

impl Sub for DoubleDouble {
    type Output = Self;
    fn sub(self, b: Self) -> Self {
        self + (-b)
    }
}

impl Mul for DoubleDouble {
    type Output = Self;
    fn mul(self, b: Self) -> Self {
        let (p, e) = two_prod(self.hi, b.hi);
        let e = e + (self.hi * b.lo + self.lo * b.hi);
        let (hi, lo) = quick_two_sum(p, e);
        Self { hi, lo }
    }
}

impl Div for DoubleDouble {
    type Output = Self;
    fn div(self, b: Self) -> Self {
        let q1 = self.hi / b.hi;
        let r = self - b.mul_f64(q1);
        let q2 = r.hi / b.hi;
        let r = r - b.mul_f64(q2);
        let q3 = r.hi / b.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        Self { hi, lo } + Self::from_f64(q3)
    }
}
