use super::{GlPair, Real};
use std::sync::OnceLock;
use num_traits::{Num, One, Zero};
use rug::float::Constant;
use rug::ops::Pow;
use rug::Float;
use std::ops::{Add, Div, Mul, Neg, Rem, Sub};

/// Working precision of [`Mp`] in bits.
pub const MP_BITS: u32 = 128;

/// 128-bit MPFR real.
#[derive(Clone, Debug, PartialEq, PartialOrd)]
pub struct Mp(pub Float);

impl Mp {
    pub fn new(x: f64) -> Self {
        Mp(Float::with_val(MP_BITS, x))
    }
}

macro_rules! binop {
    ($tr:ident, $m:ident, $op:tt) => {
        impl $tr for Mp {
            type Output = Mp;
            fn $m(self, rhs: Mp) -> Mp {
                Mp(self.0 $op rhs.0)
            }
        }
    };
}
binop!(Add, add, +);
binop!(Sub, sub, -);
binop!(Mul, mul, *);
binop!(Div, div, /);
binop!(Rem, rem, %);

impl Neg for Mp {
    type Output = Mp;
    fn neg(self) -> Mp {
        Mp(-self.0)
    }
}

impl Zero for Mp {
    fn zero() -> Self {
        Mp(Float::with_val(MP_BITS, 0))
    }
    fn is_zero(&self) -> bool {
        self.0.is_zero()
    }
}

impl One for Mp {
    fn one() -> Self {
        Mp(Float::with_val(MP_BITS, 1))
    }
}

impl Num for Mp {
    type FromStrRadixErr = rug::float::ParseFloatError;
    fn from_str_radix(s: &str, radix: u32) -> Result<Self, Self::FromStrRadixErr> {
        let parsed = Float::parse_radix(s, radix as i32)?;
        Ok(Mp(Float::with_val(MP_BITS, parsed)))
    }
}

impl Real for Mp {
    fn from_f64(x: f64) -> Self {
        Mp::new(x)
    }
    fn to_f64(&self) -> f64 {
        self.0.to_f64()
    }
    fn pi() -> Self {
        Mp(Float::with_val(MP_BITS, Constant::Pi))
    }
    fn epsilon() -> f64 {
        2f64.powi(-(MP_BITS as i32) + 1)
    }
    fn digits() -> u32 {
        38
    }
    fn exp(&self) -> Self {
        Mp(self.0.clone().exp())
    }
    fn ln(&self) -> Self {
        Mp(self.0.clone().ln())
    }
    fn sin(&self) -> Self {
        Mp(self.0.clone().sin())
    }
    fn cos(&self) -> Self {
        Mp(self.0.clone().cos())
    }
    fn sinh(&self) -> Self {
        Mp(self.0.clone().sinh())
    }
    fn cosh(&self) -> Self {
        Mp(self.0.clone().cosh())
    }
    fn sqrt(&self) -> Self {
        Mp(self.0.clone().sqrt())
    }
    fn atan2(&self, x: &Self) -> Self {
        Mp(self.0.clone().atan2(&x.0))
    }
    fn abs(&self) -> Self {
        Mp(self.0.clone().abs())
    }
    fn floor(&self) -> Self {
        Mp(self.0.clone().floor())
    }
    fn from_i64(n: i64) -> Self {
        Mp(Float::with_val(MP_BITS, n))
    }
    fn is_finite(&self) -> bool {
        self.0.is_finite()
    }
    fn gl_pair() -> &'static GlPair<Mp> {
        static RULE: OnceLock<GlPair<Mp>> = OnceLock::new();
        RULE.get_or_init(|| GlPair::new(48))
    }
}

impl Mp {
    pub fn powi(&self, n: i32) -> Self {
        Mp(self.0.clone().pow(n))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn carries_more_than_thirty_digits() {
        let third = Mp::one() / Mp::from_f64(3.0);
        let back = third * Mp::from_f64(3.0) - Mp::one();
        assert!(back.abs().0 < 1e-36);
        let s = Mp::pi().sin();
        assert!(s.abs().0 < 1e-37);
        let e = Mp::one().exp().ln() - Mp::one();
        assert!(e.abs().0 < 1e-37);
    }
}
