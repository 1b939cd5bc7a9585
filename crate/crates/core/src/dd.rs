//! Double-double scalar (~32 significant digits) for the covariance algebra.
//!
//! Strongly squeezed states have covariance entries of order `e^{2r}` whose
//! physically relevant combinations are of order `e^{-2r}`; in `f64` that
//! difference drowns in rounding once `r` is a few units. [`DoubleDouble`]
//! wraps [`twofloat::TwoFloat`] and implements the nalgebra scalar traits, so
//! every generic routine in this crate runs on it unchanged.

use std::fmt;
use std::ops::{
    Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Rem, RemAssign, Sub, SubAssign,
};

use approx::{AbsDiffEq, RelativeEq, UlpsEq};
use nalgebra::{ComplexField, Field, RealField, SimdValue};
use num_traits::{FromPrimitive, Num, One, Signed, ToPrimitive, Zero};
use simba::scalar::SubsetOf;
use twofloat::{consts, TwoFloat};

use crate::scalar::Real;

/// Unit roundoff of double-double arithmetic, `2^-104`.
const DD_EPSILON: f64 = 4.930380657631324e-32;

#[derive(Clone, Copy, Default, PartialEq, PartialOrd)]
pub struct DoubleDouble(pub TwoFloat);

impl DoubleDouble {
    pub const fn from_f64_exact(value: f64) -> Self {
        Self(TwoFloat::from_f64(value))
    }

    pub fn hi(self) -> f64 {
        self.0.hi()
    }

    pub fn lo(self) -> f64 {
        self.0.lo()
    }

    /// Nearest `f64`.
    pub fn to_f64_round(self) -> f64 {
        self.0.hi() + self.0.lo()
    }
}

impl From<f64> for DoubleDouble {
    fn from(value: f64) -> Self {
        Self(TwoFloat::from(value))
    }
}

impl From<DoubleDouble> for f64 {
    fn from(value: DoubleDouble) -> Self {
        value.to_f64_round()
    }
}

impl fmt::Debug for DoubleDouble {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DoubleDouble({:e} + {:e})", self.0.hi(), self.0.lo())
    }
}

impl fmt::Display for DoubleDouble {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.0, f)
    }
}

macro_rules! binop {
    ($Tr:ident, $f:ident, $TrA:ident, $fa:ident) => {
        impl $Tr for DoubleDouble {
            type Output = Self;
            #[inline]
            fn $f(self, rhs: Self) -> Self {
                Self($Tr::$f(self.0, rhs.0))
            }
        }
        impl $TrA for DoubleDouble {
            #[inline]
            fn $fa(&mut self, rhs: Self) {
                $TrA::$fa(&mut self.0, rhs.0)
            }
        }
    };
}

binop!(Add, add, AddAssign, add_assign);
binop!(Sub, sub, SubAssign, sub_assign);
binop!(Mul, mul, MulAssign, mul_assign);

// `TwoFloat / TwoFloat` forms its reciprocal residual `1 − b·(1/b)` without a
// fused multiply-add, which cancels to zero and leaves a quotient that is
// only `f64`-accurate. Long division with two correction steps restores the
// full double-double precision.
fn dd_div(a: TwoFloat, b: TwoFloat) -> TwoFloat {
    let q1 = a.hi() / b.hi();
    let r = a - b * q1;
    let q2 = r.hi() / b.hi();
    let r = r - b * q2;
    let q3 = r.hi() / b.hi();
    TwoFloat::new_add(q1, q2) + q3
}

impl Div for DoubleDouble {
    type Output = Self;
    #[inline]
    fn div(self, rhs: Self) -> Self {
        Self(dd_div(self.0, rhs.0))
    }
}

impl DivAssign for DoubleDouble {
    #[inline]
    fn div_assign(&mut self, rhs: Self) {
        *self = *self / rhs
    }
}

binop!(Rem, rem, RemAssign, rem_assign);

impl Neg for DoubleDouble {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Self(-self.0)
    }
}

impl Zero for DoubleDouble {
    fn zero() -> Self {
        Self(TwoFloat::from(0.0))
    }
    fn is_zero(&self) -> bool {
        self.0.is_zero()
    }
}

impl One for DoubleDouble {
    fn one() -> Self {
        Self(TwoFloat::from(1.0))
    }
}

impl Num for DoubleDouble {
    type FromStrRadixErr = <TwoFloat as Num>::FromStrRadixErr;
    fn from_str_radix(s: &str, radix: u32) -> Result<Self, Self::FromStrRadixErr> {
        TwoFloat::from_str_radix(s, radix).map(Self)
    }
}

impl Signed for DoubleDouble {
    fn abs(&self) -> Self {
        Self(self.0.abs())
    }
    fn abs_sub(&self, other: &Self) -> Self {
        Self(Signed::abs_sub(&self.0, &other.0))
    }
    fn signum(&self) -> Self {
        Self(self.0.signum())
    }
    fn is_positive(&self) -> bool {
        Signed::is_positive(&self.0)
    }
    fn is_negative(&self) -> bool {
        Signed::is_negative(&self.0)
    }
}

impl FromPrimitive for DoubleDouble {
    fn from_i64(n: i64) -> Option<Self> {
        TwoFloat::from_i64(n).map(Self)
    }
    fn from_u64(n: u64) -> Option<Self> {
        TwoFloat::from_u64(n).map(Self)
    }
    fn from_f64(n: f64) -> Option<Self> {
        Some(Self::from(n))
    }
    fn from_f32(n: f32) -> Option<Self> {
        Some(Self::from(n as f64))
    }
}

impl ToPrimitive for DoubleDouble {
    fn to_i64(&self) -> Option<i64> {
        self.0.to_i64()
    }
    fn to_u64(&self) -> Option<u64> {
        self.0.to_u64()
    }
    fn to_f64(&self) -> Option<f64> {
        Some(self.to_f64_round())
    }
}

impl AbsDiffEq for DoubleDouble {
    type Epsilon = Self;
    fn default_epsilon() -> Self {
        Self::from(DD_EPSILON)
    }
    fn abs_diff_eq(&self, other: &Self, epsilon: Self) -> bool {
        (*self - *other).0.abs() <= epsilon.0
    }
}

impl RelativeEq for DoubleDouble {
    fn default_max_relative() -> Self {
        Self::from(DD_EPSILON)
    }
    fn relative_eq(&self, other: &Self, epsilon: Self, max_relative: Self) -> bool {
        if self == other {
            return true;
        }
        let diff = (*self - *other).0.abs();
        if diff <= epsilon.0 {
            return true;
        }
        let largest = self.0.abs().max(other.0.abs());
        diff <= largest * max_relative.0
    }
}

impl UlpsEq for DoubleDouble {
    fn default_max_ulps() -> u32 {
        4
    }
    fn ulps_eq(&self, other: &Self, epsilon: Self, max_ulps: u32) -> bool {
        if self.abs_diff_eq(other, epsilon) {
            return true;
        }
        // Ulps of the combined significand, approximated through the
        // relative spacing of double-double numbers.
        let diff = (*self - *other).0.abs();
        let largest = self.0.abs().max(other.0.abs());
        diff <= largest * (DD_EPSILON * max_ulps as f64)
    }
}

// Elementary functions. twofloat's own versions route through its
// reduced-accuracy division and are off by up to ~1e-12 relative, so they are
// rebuilt here from the corrected arithmetic: Taylor series after argument
// reduction, or a single Newton step from the `f64` value (which doubles the
// number of correct digits).
impl DoubleDouble {
    fn scale_pow2(self, k: i32) -> Self {
        let half = k / 2;
        let a = 2f64.powi(half);
        let b = 2f64.powi(k - half);
        Self(self.0 * a * b)
    }

    /// `e^r − 1` for `|r| ≤ ln(2)/2`, via `r/2^10`, a short Taylor series and
    /// ten squarings of the form `m ← m(2 + m)`.
    fn exp_m1_reduced(r: Self) -> Self {
        const SQUARINGS: i32 = 10;
        let s = r.scale_pow2(-SQUARINGS);
        let inv = inverse_factorials();
        let mut m = Self::zero();
        for k in (1..=10).rev() {
            m = (m + inv[k]) * s;
        }
        let two = Self::from(2.0);
        for _ in 0..SQUARINGS {
            m = m * (two + m);
        }
        m
    }

    pub fn exp(self) -> Self {
        if self.hi() > 709.78 {
            return Self::from(f64::INFINITY);
        }
        if self.hi() < -745.2 {
            return Self::zero();
        }
        if self.hi().is_nan() {
            return self;
        }
        let k = (self.hi() / std::f64::consts::LN_2).round();
        let r = self - Self(consts::LN_2) * Self::from(k);
        (Self::exp_m1_reduced(r) + Self::one()).scale_pow2(k as i32)
    }

    pub fn exp_m1(self) -> Self {
        if self.hi().abs() <= 0.5 * std::f64::consts::LN_2 {
            Self::exp_m1_reduced(self)
        } else {
            self.exp() - Self::one()
        }
    }

    pub fn ln(self) -> Self {
        if self.hi() < 0.0 || self.hi().is_nan() {
            return Self::from(f64::NAN);
        }
        if self.is_zero() {
            return Self::from(f64::NEG_INFINITY);
        }
        if self.hi().is_infinite() {
            return self;
        }
        let y = Self::from(self.hi().ln());
        y + self * (-y).exp() - Self::one()
    }

    pub fn sin_cos(self) -> (Self, Self) {
        if !self.hi().is_finite() {
            return (Self::from(f64::NAN), Self::from(f64::NAN));
        }
        let half_pi = Self(consts::FRAC_PI_2);
        let k = (self.hi() / std::f64::consts::FRAC_PI_2).round();
        let r = self - half_pi * Self::from(k);
        let inv = inverse_factorials();
        let r2 = r * r;
        // sin r = r Σ (−r²)^n/(2n+1)!, cos r = Σ (−r²)^n/(2n)!
        let (mut s, mut c) = (Self::zero(), Self::zero());
        for n in (0..16).rev() {
            let sign = if n % 2 == 0 { Self::one() } else { -Self::one() };
            s = s * r2 + sign * inv[2 * n + 1];
            c = c * r2 + sign * inv[2 * n];
        }
        let s = s * r;
        match (k as i64).rem_euclid(4) {
            0 => (s, c),
            1 => (c, -s),
            2 => (-s, -c),
            _ => (-c, s),
        }
    }

    pub fn atan2(self, x: Self) -> Self {
        let y = self;
        if y.is_zero() && x.is_zero() {
            return Self::zero();
        }
        let r = (x * x + y * y).sqrt();
        let mut z = Self::from(y.hi().atan2(x.hi()));
        // f(z) = y cos z − x sin z = r sin(θ − z); one Newton step.
        let (s, c) = z.sin_cos();
        z += (y * c - x * s) / r;
        z
    }
}

fn inverse_factorials() -> &'static [DoubleDouble; 33] {
    static TABLE: std::sync::OnceLock<[DoubleDouble; 33]> = std::sync::OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = [DoubleDouble::one(); 33];
        for k in 1..33 {
            t[k] = t[k - 1] / DoubleDouble::from(k as f64);
        }
        t
    })
}

impl SimdValue for DoubleDouble {
    const LANES: usize = 1;
    type Element = Self;
    type SimdBool = bool;

    #[inline]
    fn splat(val: Self) -> Self {
        val
    }
    #[inline]
    fn extract(&self, _: usize) -> Self {
        *self
    }
    #[inline]
    unsafe fn extract_unchecked(&self, _: usize) -> Self {
        *self
    }
    #[inline]
    fn replace(&mut self, _: usize, val: Self) {
        *self = val
    }
    #[inline]
    unsafe fn replace_unchecked(&mut self, _: usize, val: Self) {
        *self = val
    }
    #[inline]
    fn select(self, cond: bool, other: Self) -> Self {
        if cond {
            self
        } else {
            other
        }
    }
}

impl Field for DoubleDouble {}

impl SubsetOf<DoubleDouble> for DoubleDouble {
    fn to_superset(&self) -> DoubleDouble {
        *self
    }
    fn from_superset_unchecked(element: &DoubleDouble) -> Self {
        *element
    }
    fn is_in_subset(_: &DoubleDouble) -> bool {
        true
    }
}

impl SubsetOf<DoubleDouble> for f64 {
    fn to_superset(&self) -> DoubleDouble {
        DoubleDouble::from(*self)
    }
    fn from_superset_unchecked(element: &DoubleDouble) -> Self {
        element.to_f64_round()
    }
    fn is_in_subset(_: &DoubleDouble) -> bool {
        true
    }
}

impl SubsetOf<DoubleDouble> for f32 {
    fn to_superset(&self) -> DoubleDouble {
        DoubleDouble::from(*self as f64)
    }
    fn from_superset_unchecked(element: &DoubleDouble) -> Self {
        element.to_f64_round() as f32
    }
    fn is_in_subset(_: &DoubleDouble) -> bool {
        true
    }
}

macro_rules! unary {
    ($($f:ident),*) => {$(
        #[inline]
        fn $f(self) -> Self {
            Self(self.0.$f())
        }
    )*};
}

impl ComplexField for DoubleDouble {
    type RealField = Self;

    fn from_real(re: Self) -> Self {
        re
    }
    fn real(self) -> Self {
        self
    }
    fn imaginary(self) -> Self {
        Self::zero()
    }
    fn modulus(self) -> Self {
        Self(self.0.abs())
    }
    fn modulus_squared(self) -> Self {
        self * self
    }
    fn argument(self) -> Self {
        if self >= Self::zero() {
            Self::zero()
        } else {
            Self::pi()
        }
    }
    fn norm1(self) -> Self {
        Self(self.0.abs())
    }
    fn scale(self, factor: Self) -> Self {
        self * factor
    }
    fn unscale(self, factor: Self) -> Self {
        self / factor
    }
    fn mul_add(self, a: Self, b: Self) -> Self {
        self * a + b
    }
    fn abs(self) -> Self {
        Self(self.0.abs())
    }
    fn hypot(self, other: Self) -> Self {
        (self * self + other * other).sqrt()
    }
    fn conjugate(self) -> Self {
        self
    }
    fn recip(self) -> Self {
        Self::one() / self
    }
    fn sin_cos(self) -> (Self, Self) {
        DoubleDouble::sin_cos(self)
    }
    fn sin(self) -> Self {
        self.sin_cos().0
    }
    fn cos(self) -> Self {
        self.sin_cos().1
    }
    fn tan(self) -> Self {
        let (s, c) = self.sin_cos();
        s / c
    }
    fn asin(self) -> Self {
        self.atan2((Self::one() - self * self).sqrt())
    }
    fn acos(self) -> Self {
        (Self::one() - self * self).sqrt().atan2(self)
    }
    fn atan(self) -> Self {
        self.atan2(Self::one())
    }
    fn exp(self) -> Self {
        DoubleDouble::exp(self)
    }
    fn exp_m1(self) -> Self {
        DoubleDouble::exp_m1(self)
    }
    fn exp2(self) -> Self {
        DoubleDouble::exp(self * Self::ln_2())
    }
    fn ln(self) -> Self {
        DoubleDouble::ln(self)
    }
    fn ln_1p(self) -> Self {
        // Newton on exp_m1 keeps full relative accuracy near zero.
        let y = Self::from(self.hi().ln_1p());
        let e = DoubleDouble::exp_m1(y);
        y - (e - self) / (e + Self::one())
    }
    fn log(self, base: Self) -> Self {
        self.ln() / base.ln()
    }
    fn log2(self) -> Self {
        self.ln() / Self::ln_2()
    }
    fn log10(self) -> Self {
        self.ln() / Self::ln_10()
    }
    fn sinh(self) -> Self {
        let m = DoubleDouble::exp_m1(self);
        (m + m / (m + Self::one())) * Self::from(0.5)
    }
    fn cosh(self) -> Self {
        let e = DoubleDouble::exp(self);
        (e + e.recip()) * Self::from(0.5)
    }
    fn tanh(self) -> Self {
        self.sinh() / self.cosh()
    }
    fn asinh(self) -> Self {
        let a = self.abs();
        let r = (a + (a * a + Self::one()).sqrt()).ln();
        if self.is_negative() {
            -r
        } else {
            r
        }
    }
    fn acosh(self) -> Self {
        (self + (self * self - Self::one()).sqrt()).ln()
    }
    fn atanh(self) -> Self {
        ((Self::one() + self) / (Self::one() - self)).ln() * Self::from(0.5)
    }
    fn powi(self, n: i32) -> Self {
        let mut base = if n < 0 { self.recip() } else { self };
        let mut k = n.unsigned_abs();
        let mut acc = Self::one();
        while k > 0 {
            if k & 1 == 1 {
                acc *= base;
            }
            base *= base;
            k >>= 1;
        }
        acc
    }
    fn powf(self, n: Self) -> Self {
        (self.ln() * n).exp()
    }
    fn powc(self, n: Self) -> Self {
        self.powf(n)
    }
    fn cbrt(self) -> Self {
        if self.is_zero() {
            return self;
        }
        let y = Self::from(self.hi().cbrt());
        y - (y * y * y - self) / (Self::from(3.0) * y * y)
    }
    fn is_finite(&self) -> bool {
        self.0.hi().is_finite() && self.0.lo().is_finite()
    }
    fn try_sqrt(self) -> Option<Self> {
        if self >= Self::zero() {
            Some(Self(self.0.sqrt()))
        } else {
            None
        }
    }

    unary!(floor, ceil, round, trunc, fract, sqrt);
}

impl RealField for DoubleDouble {
    fn is_sign_positive(&self) -> bool {
        self.0.is_sign_positive()
    }
    fn is_sign_negative(&self) -> bool {
        self.0.is_sign_negative()
    }
    fn copysign(self, sign: Self) -> Self {
        Self(self.0.copysign(&sign.0))
    }
    fn max(self, other: Self) -> Self {
        Self(self.0.max(other.0))
    }
    fn min(self, other: Self) -> Self {
        Self(self.0.min(other.0))
    }
    fn clamp(self, min: Self, max: Self) -> Self {
        if self < min {
            min
        } else if self > max {
            max
        } else {
            self
        }
    }
    fn atan2(self, other: Self) -> Self {
        DoubleDouble::atan2(self, other)
    }
    fn min_value() -> Option<Self> {
        Some(Self(TwoFloat::MIN))
    }
    fn max_value() -> Option<Self> {
        Some(Self(TwoFloat::MAX))
    }
    fn pi() -> Self {
        Self(consts::PI)
    }
    fn two_pi() -> Self {
        Self(consts::TAU)
    }
    fn frac_pi_2() -> Self {
        Self(consts::FRAC_PI_2)
    }
    fn frac_pi_3() -> Self {
        Self(consts::FRAC_PI_3)
    }
    fn frac_pi_4() -> Self {
        Self(consts::FRAC_PI_4)
    }
    fn frac_pi_6() -> Self {
        Self(consts::FRAC_PI_6)
    }
    fn frac_pi_8() -> Self {
        Self(consts::FRAC_PI_8)
    }
    fn frac_1_pi() -> Self {
        Self(consts::FRAC_1_PI)
    }
    fn frac_2_pi() -> Self {
        Self(consts::FRAC_2_PI)
    }
    fn frac_2_sqrt_pi() -> Self {
        Self(consts::FRAC_2_SQRT_PI)
    }
    fn e() -> Self {
        Self(consts::E)
    }
    fn log2_e() -> Self {
        Self(consts::LOG2_E)
    }
    fn log10_e() -> Self {
        Self(consts::LOG10_E)
    }
    fn ln_2() -> Self {
        Self(consts::LN_2)
    }
    fn ln_10() -> Self {
        Self(consts::LN_10)
    }
}

impl Real for DoubleDouble {}
