//! Arbitrary-precision dyadic interval arithmetic.
//!
//! Values are `mantissa * 2^exponent` with big-integer mantissas; intervals
//! round outward to a working precision after every operation, so every
//! returned interval is a certified enclosure. Logarithms use the atanh
//! series after range reduction to `[1, 2)`; exponentials use the Taylor
//! series after halving into `[-1/2, 1/2]` and repeated squaring. Series
//! remainders are added to the upper endpoint explicitly.

use num::bigint::BigInt;
use num::integer::Integer;
use num::rational::BigRational;
use num::traits::{One, Signed, ToPrimitive, Zero};

/// Exact dyadic rational `mant * 2^exp`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dyadic {
    pub mant: BigInt,
    pub exp: i64,
}

fn shr_floor(x: &BigInt, k: u64) -> BigInt {
    x.div_floor(&(BigInt::one() << k))
}

fn shr_ceil(x: &BigInt, k: u64) -> BigInt {
    -shr_floor(&-x, k)
}

impl Dyadic {
    pub fn new(mant: BigInt, exp: i64) -> Self {
        Dyadic { mant, exp }
    }

    pub fn zero() -> Self {
        Dyadic::new(BigInt::zero(), 0)
    }

    pub fn from_int(v: i64) -> Self {
        Dyadic::new(BigInt::from(v), 0)
    }

    pub fn is_zero(&self) -> bool {
        self.mant.is_zero()
    }

    fn bits(&self) -> u64 {
        self.mant.bits()
    }

    /// Keep at most `prec` significant bits, rounding toward `-inf`
    /// (`up = false`) or `+inf` (`up = true`).
    pub fn round(&self, prec: u32, up: bool) -> Dyadic {
        let bits = self.bits();
        if bits <= prec as u64 {
            return self.clone();
        }
        let k = bits - prec as u64;
        let mant = if up { shr_ceil(&self.mant, k) } else { shr_floor(&self.mant, k) };
        Dyadic::new(mant, self.exp + k as i64)
    }

    fn aligned(&self, other: &Dyadic) -> (BigInt, BigInt, i64) {
        let e = self.exp.min(other.exp);
        let a = &self.mant << (self.exp - e) as u64;
        let b = &other.mant << (other.exp - e) as u64;
        (a, b, e)
    }

    pub fn add_exact(&self, other: &Dyadic) -> Dyadic {
        let (a, b, e) = self.aligned(other);
        Dyadic::new(a + b, e)
    }

    pub fn neg(&self) -> Dyadic {
        Dyadic::new(-&self.mant, self.exp)
    }

    pub fn mul_exact(&self, other: &Dyadic) -> Dyadic {
        Dyadic::new(&self.mant * &other.mant, self.exp + other.exp)
    }

    /// Directed quotient with roughly `prec` significant bits.
    pub fn div_dir(&self, other: &Dyadic, prec: u32, up: bool) -> Dyadic {
        assert!(!other.mant.is_zero(), "division by zero");
        let shift = (prec as u64 + other.bits() + 2).saturating_sub(self.bits());
        let num = &self.mant << shift;
        let q = if up { -((-&num).div_floor(&other.mant)) } else { num.div_floor(&other.mant) };
        Dyadic::new(q, self.exp - other.exp - shift as i64).round(prec, up)
    }

    pub fn cmp_value(&self, other: &Dyadic) -> std::cmp::Ordering {
        let (a, b, _) = self.aligned(other);
        a.cmp(&b)
    }

    /// Smallest integer not below the value.
    pub fn ceil_bigint(&self) -> BigInt {
        if self.exp >= 0 {
            &self.mant << self.exp as u64
        } else {
            shr_ceil(&self.mant, (-self.exp) as u64)
        }
    }

    pub fn to_f64(&self) -> f64 {
        let r = BigRational::new(self.mant.clone(), BigInt::one());
        r.to_f64().unwrap_or(f64::NAN) * 2f64.powi(self.exp.clamp(-2000, 2000) as i32)
    }

    /// Decimal rendering with the given number of fractional digits,
    /// truncated toward zero.
    pub fn to_decimal(&self, digits: u32) -> String {
        let scale = BigInt::from(10u32).pow(digits);
        let scaled = if self.exp >= 0 {
            (&self.mant << self.exp as u64) * &scale
        } else {
            (&self.mant * &scale).div_floor(&(BigInt::one() << (-self.exp) as u64))
        };
        let negative = scaled.is_negative();
        let abs = scaled.abs();
        let s = abs.to_string();
        let (int_part, frac_part) = if s.len() > digits as usize {
            let cut = s.len() - digits as usize;
            (s[..cut].to_string(), s[cut..].to_string())
        } else {
            ("0".to_string(), format!("{:0>width$}", s, width = digits as usize))
        };
        format!("{}{}.{}", if negative { "-" } else { "" }, int_part, frac_part)
    }
}

/// A closed enclosure `[lo, hi]` with a working precision.
#[derive(Debug, Clone)]
pub struct Interval {
    pub lo: Dyadic,
    pub hi: Dyadic,
    pub prec: u32,
}

impl Interval {
    pub fn point(d: Dyadic, prec: u32) -> Self {
        Interval { lo: d.clone(), hi: d, prec }
    }

    pub fn from_int(v: i64, prec: u32) -> Self {
        Interval::point(Dyadic::from_int(v), prec)
    }

    pub fn from_bigint(v: &BigInt, prec: u32) -> Self {
        Interval::point(Dyadic::new(v.clone(), 0), prec)
    }

    pub fn from_ratio(r: &BigRational, prec: u32) -> Self {
        let num = Dyadic::new(r.numer().clone(), 0);
        let den = Dyadic::new(r.denom().clone(), 0);
        Interval {
            lo: num.div_dir(&den, prec, false),
            hi: num.div_dir(&den, prec, true),
            prec,
        }
    }

    pub fn width(&self) -> Dyadic {
        self.hi.add_exact(&self.lo.neg())
    }

    pub fn contains_ratio(&self, r: &BigRational) -> bool {
        let v = Interval::from_ratio(r, self.prec + 8);
        self.lo.cmp_value(&v.lo) != std::cmp::Ordering::Greater
            && self.hi.cmp_value(&v.hi) != std::cmp::Ordering::Less
    }

    pub fn contains_interval(&self, other: &Interval) -> bool {
        self.lo.cmp_value(&other.lo) != std::cmp::Ordering::Greater
            && self.hi.cmp_value(&other.hi) != std::cmp::Ordering::Less
    }

    pub fn add(&self, other: &Interval) -> Interval {
        Interval {
            lo: self.lo.add_exact(&other.lo).round(self.prec, false),
            hi: self.hi.add_exact(&other.hi).round(self.prec, true),
            prec: self.prec,
        }
    }

    pub fn sub(&self, other: &Interval) -> Interval {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Interval {
        Interval { lo: self.hi.neg(), hi: self.lo.neg(), prec: self.prec }
    }

    pub fn mul(&self, other: &Interval) -> Interval {
        let cands = [
            self.lo.mul_exact(&other.lo),
            self.lo.mul_exact(&other.hi),
            self.hi.mul_exact(&other.lo),
            self.hi.mul_exact(&other.hi),
        ];
        let mut lo = cands[0].clone();
        let mut hi = cands[0].clone();
        for c in &cands[1..] {
            if c.cmp_value(&lo) == std::cmp::Ordering::Less {
                lo = c.clone();
            }
            if c.cmp_value(&hi) == std::cmp::Ordering::Greater {
                hi = c.clone();
            }
        }
        Interval { lo: lo.round(self.prec, false), hi: hi.round(self.prec, true), prec: self.prec }
    }

    /// Division, requiring the divisor to be sign-definite.
    pub fn div(&self, other: &Interval) -> Interval {
        let pos = other.lo.mant.is_positive();
        let negd = other.hi.mant.is_negative();
        assert!(pos || negd, "interval division by a sign-indefinite divisor");
        let mut cands = Vec::with_capacity(4);
        for (a, b) in [
            (&self.lo, &other.lo),
            (&self.lo, &other.hi),
            (&self.hi, &other.lo),
            (&self.hi, &other.hi),
        ] {
            cands.push(a.div_dir(b, self.prec + 4, false));
            cands.push(a.div_dir(b, self.prec + 4, true));
        }
        let mut lo = cands[0].clone();
        let mut hi = cands[0].clone();
        for c in &cands[1..] {
            if c.cmp_value(&lo) == std::cmp::Ordering::Less {
                lo = c.clone();
            }
            if c.cmp_value(&hi) == std::cmp::Ordering::Greater {
                hi = c.clone();
            }
        }
        Interval { lo: lo.round(self.prec, false), hi: hi.round(self.prec, true), prec: self.prec }
    }

    pub fn powi(&self, mut n: u32) -> Interval {
        let mut base = self.clone();
        let mut acc = Interval::from_int(1, self.prec);
        while n > 0 {
            if n & 1 == 1 {
                acc = acc.mul(&base);
            }
            base = base.mul(&base);
            n >>= 1;
        }
        acc
    }

    /// Certified integer ceiling, when both endpoints agree on it.
    pub fn ceil_unique(&self) -> Option<BigInt> {
        let a = self.lo.ceil_bigint();
        let b = self.hi.ceil_bigint();
        (a == b).then_some(a)
    }

    pub fn midpoint_f64(&self) -> f64 {
        0.5 * (self.lo.to_f64() + self.hi.to_f64())
    }
}

/// Enclosure of `ln 2` at the given precision, via `2 atanh(1/3)`.
pub fn ln2(prec: u32) -> Interval {
    let third = Interval::from_ratio(&BigRational::new(BigInt::one(), BigInt::from(3)), prec + 16);
    atanh(&third, prec + 16).mul(&Interval::from_int(2, prec + 16))
}

/// Enclosure of `atanh(t)` for `0 <= t <= 1/2`, by the odd power series
/// with an explicit remainder.
fn atanh(t: &Interval, prec: u32) -> Interval {
    let t2 = t.mul(t);
    let mut term = t.clone();
    let mut sum = Interval::from_int(0, prec);
    let mut j = 0u32;
    loop {
        let denom = Interval::from_int((2 * j + 1) as i64, prec);
        sum = sum.add(&term.div(&denom));
        term = term.mul(&t2);
        j += 1;
        // Terms shrink at least geometrically by t^2 <= 1/4.
        let mag = magnitude_bound(&term);
        if mag.is_zero() || (mag.exp + mag.bits() as i64) < -(prec as i64 + 8) {
            break;
        }
        assert!(j < 4 * prec, "atanh series failed to converge");
    }
    // Remainder: sum over k > j of t^(2k+1)/(2k+1) is bounded in magnitude
    // by |term| / (1 - t^2) <= |term| * 4/3 for |t| <= 1/2.
    let rem = magnitude_bound(&term)
        .mul_exact(&Dyadic::from_int(4))
        .div_dir(&Dyadic::from_int(3), prec, true);
    Interval {
        lo: sum.lo.add_exact(&rem.neg()).round(prec, false),
        hi: sum.hi.add_exact(&rem).round(prec, true),
        prec,
    }
}

/// A dyadic upper bound on `max(|lo|, |hi|)`.
fn magnitude_bound(i: &Interval) -> Dyadic {
    let a = Dyadic::new(i.lo.mant.abs(), i.lo.exp);
    let b = Dyadic::new(i.hi.mant.abs(), i.hi.exp);
    if a.cmp_value(&b) == std::cmp::Ordering::Greater {
        a
    } else {
        b
    }
}

/// Enclosure of `ln x` for a strictly positive dyadic point.
pub fn ln_point(x: &Dyadic, prec: u32) -> Interval {
    assert!(x.mant.is_positive(), "ln of a nonpositive value");
    let wp = prec + 24;
    // x = m * 2^k with m in [1, 2).
    let k = x.exp + x.bits() as i64 - 1;
    let m = Dyadic::new(x.mant.clone(), -(x.bits() as i64 - 1));
    let mi = Interval::point(m, wp);
    let one = Interval::from_int(1, wp);
    let t = mi.sub(&one).div(&mi.add(&one));
    let ln_m = atanh(&t, wp).mul(&Interval::from_int(2, wp));
    let kf = Interval::from_int(k, wp);
    let out = ln_m.add(&kf.mul(&ln2(wp)));
    Interval { lo: out.lo.round(prec, false), hi: out.hi.round(prec, true), prec }
}

/// Enclosure of `ln` over an interval with positive lower endpoint.
pub fn ln_interval(x: &Interval, prec: u32) -> Interval {
    let lo = ln_point(&x.lo, prec + 8);
    let hi = ln_point(&x.hi, prec + 8);
    Interval { lo: lo.lo.round(prec, false), hi: hi.hi.round(prec, true), prec }
}

/// Enclosure of `exp x` for a dyadic point.
pub fn exp_point(x: &Dyadic, prec: u32) -> Interval {
    let wp = prec + 32;
    // Halve until |y| <= 1/2, evaluate the series, then square back.
    let mag = x.exp + x.bits() as i64; // |x| < 2^mag
    let halvings = (mag + 1).max(0) as u32;
    let y = Dyadic::new(x.mant.clone(), x.exp - halvings as i64);
    let yi = Interval::point(y, wp);
    let mut term = Interval::from_int(1, wp);
    let mut sum = Interval::from_int(0, wp);
    let mut j = 1i64;
    loop {
        sum = sum.add(&term);
        term = term.mul(&yi).div(&Interval::from_int(j, wp));
        j += 1;
        let mag = magnitude_bound(&term);
        if mag.is_zero() || (mag.exp + mag.bits() as i64) < -(wp as i64 + 8) {
            break;
        }
        assert!(j < 4 * wp as i64, "exp series failed to converge");
    }
    // Remainder is bounded in magnitude by 2 |term| for |y| <= 1/2.
    let rem = magnitude_bound(&term).mul_exact(&Dyadic::from_int(2));
    let lo = sum.lo.add_exact(&rem.neg());
    let hi = sum.hi.add_exact(&rem);
    let mut out = Interval { lo: lo.round(wp, false), hi: hi.round(wp, true), prec: wp };
    for _ in 0..halvings {
        out = out.mul(&out);
    }
    Interval { lo: out.lo.round(prec, false), hi: out.hi.round(prec, true), prec }
}

/// Enclosure of `exp` over an interval.
pub fn exp_interval(x: &Interval, prec: u32) -> Interval {
    let lo = exp_point(&x.lo, prec + 8);
    let hi = exp_point(&x.hi, prec + 8);
    Interval { lo: lo.lo.round(prec, false), hi: hi.hi.round(prec, true), prec }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn decimal_prefix(i: &Interval, digits: u32) -> (String, String) {
        (i.lo.to_decimal(digits), i.hi.to_decimal(digits))
    }

    #[test]
    fn ln2_matches_reference_digits() {
        // ln 2 = 0.69314718055994530941723212145817656807550013436026...
        let enc = ln2(256);
        let (lo, hi) = decimal_prefix(&enc, 45);
        let reference = "0.693147180559945309417232121458176568075500134";
        assert!(lo.as_str() <= reference && reference <= hi.as_str(), "[{lo}, {hi}]");
        assert!(enc.width().to_f64() < 1e-60);
    }

    #[test]
    fn exp_one_matches_reference_digits() {
        // e = 2.71828182845904523536028747135266249775724709369995...
        let enc = exp_point(&Dyadic::from_int(1), 256);
        let (lo, hi) = decimal_prefix(&enc, 40);
        let reference = "2.7182818284590452353602874713526624977572";
        assert!(lo.as_str() <= reference && reference <= hi.as_str(), "[{lo}, {hi}]");
    }

    #[test]
    fn ln_of_rational_brackets_reference() {
        // ln(129/128) = 0.0077821404420549188...
        let r = BigRational::new(num::BigInt::from(129), num::BigInt::from(128));
        let x = Interval::from_ratio(&r, 256);
        let enc = ln_interval(&x, 256);
        let mid = enc.midpoint_f64();
        assert!((mid - 0.007782140442054949).abs() < 1e-15, "mid {mid}");
    }

    #[test]
    fn interval_operations_round_outward() {
        let third = Interval::from_ratio(&BigRational::new(BigInt::one(), BigInt::from(3)), 64);
        assert!(third.lo.cmp_value(&third.hi) == std::cmp::Ordering::Less);
        let nine = third.mul(&third).mul(&Interval::from_int(27, 64));
        // 27 * (1/3)^2 = 3 must be inside.
        assert!(nine.contains_ratio(&BigRational::from_integer(BigInt::from(3))));
    }

    #[test]
    fn exp_ln_roundtrip_contains_value() {
        let x = Dyadic::new(BigInt::from(7), -1); // 3.5
        let back = exp_interval(&ln_point(&x, 192), 192);
        assert!(back.contains_ratio(&BigRational::new(BigInt::from(7), BigInt::from(2))));
    }

    #[test]
    fn doubling_precision_shrinks_enclosures() {
        let a = ln2(128);
        let b = ln2(256);
        assert!(a.contains_interval(&b));
        assert!(b.width().cmp_value(&a.width()) == std::cmp::Ordering::Less);
    }
}
