//! Thin high-precision floating layer over dashu's binary big floats.
//! Series evaluation defaults to 50 decimal digits; everything takes an
//! explicit [`Precision`] so callers can push it higher.

use dashu::base::SquareRoot;
use dashu::float::round::mode::HalfEven;
use dashu::float::FBig;
use dashu::integer::IBig;
use dashu::rational::RBig;

use crate::quadfield::FieldElement;

pub type Real = FBig<HalfEven, 2>;

/// Working precision in binary digits.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Precision {
    pub bits: usize,
}

pub const DEFAULT_DECIMAL_DIGITS: u32 = 50;

impl Precision {
    pub fn decimal_digits(digits: u32) -> Self {
        let bits = (digits as f64 * std::f64::consts::LOG2_10).ceil() as usize + 32;
        Self { bits }
    }

    pub fn default_digits() -> Self {
        Self::decimal_digits(DEFAULT_DECIMAL_DIGITS)
    }
}

pub fn from_i64(x: i64, p: Precision) -> Real {
    Real::from(x).with_precision(p.bits).value()
}

pub fn from_f64(x: f64, p: Precision) -> Real {
    Real::try_from(x).expect("finite f64").with_precision(p.bits).value()
}

pub fn from_ibig(x: &IBig, p: Precision) -> Real {
    from_rbig(&RBig::from(x.clone()), p)
}

pub fn from_rbig(x: &RBig, p: Precision) -> Real {
    x.to_float(p.bits).value()
}

/// ι_i of a field element at full working precision.
pub fn from_field(x: &FieldElement, p: Precision, embedding: u8) -> Real {
    let e = if embedding == 2 { x.conj() } else { x.clone() };
    let a = from_ibig(e.coeff_a(), p);
    let b = from_ibig(e.coeff_b(), p);
    let c = from_ibig(e.coeff_c(), p);
    let sqrt_d = from_i64(e.d() as i64, p).sqrt();
    (a + b * sqrt_d) / c
}

/// x^s for rational x > 0 and floating exponent.
pub fn rational_pow(x: &RBig, s: f64, p: Precision) -> Real {
    from_rbig(x, p).powf(&from_f64(s, p))
}

pub fn to_f64(x: &Real) -> f64 {
    x.to_f64().value()
}

pub fn abs(x: &Real) -> Real {
    if x < &Real::ZERO {
        -x.clone()
    } else {
        x.clone()
    }
}
