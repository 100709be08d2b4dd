//! Exact scalars: rationals with a machine-word fast path, Gaussian
//! rationals, and truncated formal power series in `t`.

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Exact rational number, always in lowest terms with positive denominator.
///
/// Values whose numerator and denominator fit in `i64` are stored inline;
/// everything else falls back to `BigRational`.
#[derive(Clone)]
pub enum Rational {
    Small(i64, i64),
    Big(BigRational),
}

fn gcd_i128(mut a: i128, mut b: i128) -> i128 {
    a = a.abs();
    b = b.abs();
    while b != 0 {
        let r = a % b;
        a = b;
        b = r;
    }
    a
}

impl Rational {
    pub fn zero() -> Self {
        Rational::Small(0, 1)
    }

    pub fn one() -> Self {
        Rational::Small(1, 1)
    }

    pub fn from_int(n: i64) -> Self {
        Rational::Small(n, 1)
    }

    /// `n / d`; panics on `d == 0`.
    pub fn new(n: i64, d: i64) -> Self {
        assert!(d != 0, "zero denominator");
        Self::from_i128(n as i128, d as i128)
    }

    fn from_i128(n: i128, d: i128) -> Self {
        let (mut n, mut d) = (n, d);
        if d < 0 {
            n = -n;
            d = -d;
        }
        let g = gcd_i128(n, d);
        if g > 1 {
            n /= g;
            d /= g;
        }
        if n == 0 {
            return Rational::Small(0, 1);
        }
        match (i64::try_from(n), i64::try_from(d)) {
            (Ok(a), Ok(b)) => Rational::Small(a, b),
            _ => Rational::Big(BigRational::new_raw(BigInt::from(n), BigInt::from(d))),
        }
    }

    fn from_big(r: BigRational) -> Self {
        // BigRational arithmetic keeps values reduced with positive denominator.
        if let (Some(n), Some(d)) = (r.numer().to_i64(), r.denom().to_i64()) {
            Rational::Small(n, d)
        } else {
            Rational::Big(r)
        }
    }

    pub fn to_big(&self) -> BigRational {
        match self {
            Rational::Small(n, d) => BigRational::new_raw(BigInt::from(*n), BigInt::from(*d)),
            Rational::Big(r) => r.clone(),
        }
    }

    pub fn numer(&self) -> BigInt {
        match self {
            Rational::Small(n, _) => BigInt::from(*n),
            Rational::Big(r) => r.numer().clone(),
        }
    }

    pub fn denom(&self) -> BigInt {
        match self {
            Rational::Small(_, d) => BigInt::from(*d),
            Rational::Big(r) => r.denom().clone(),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Rational::Small(0, _))
    }

    pub fn is_one(&self) -> bool {
        matches!(self, Rational::Small(1, 1))
    }

    pub fn is_integer(&self) -> bool {
        match self {
            Rational::Small(_, d) => *d == 1,
            Rational::Big(r) => r.is_integer(),
        }
    }

    pub fn signum(&self) -> i32 {
        match self {
            Rational::Small(n, _) => n.signum() as i32,
            Rational::Big(r) => {
                if r.is_positive() {
                    1
                } else if r.is_negative() {
                    -1
                } else {
                    0
                }
            }
        }
    }

    pub fn add(&self, o: &Self) -> Self {
        match (self, o) {
            (Rational::Small(a, b), Rational::Small(c, d)) => {
                if *b == 1 && *d == 1 {
                    if let Some(s) = a.checked_add(*c) {
                        return Rational::Small(s, 1);
                    }
                }
                let (a, b, c, d) = (*a as i128, *b as i128, *c as i128, *d as i128);
                match (a.checked_mul(d), c.checked_mul(b)) {
                    (Some(x), Some(y)) => match x.checked_add(y) {
                        Some(n) => Self::from_i128(n, b * d),
                        None => Self::from_big(self.to_big() + o.to_big()),
                    },
                    _ => Self::from_big(self.to_big() + o.to_big()),
                }
            }
            _ => Self::from_big(self.to_big() + o.to_big()),
        }
    }

    pub fn neg(&self) -> Self {
        match self {
            Rational::Small(n, d) => match n.checked_neg() {
                Some(m) => Rational::Small(m, *d),
                None => Self::from_big(-self.to_big()),
            },
            Rational::Big(r) => Self::from_big(-r.clone()),
        }
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.neg())
    }

    pub fn mul(&self, o: &Self) -> Self {
        match (self, o) {
            (Rational::Small(a, b), Rational::Small(c, d)) => {
                if *a == 0 || *c == 0 {
                    return Rational::zero();
                }
                if *b == 1 && *d == 1 {
                    if let Some(p) = a.checked_mul(*c) {
                        return Rational::Small(p, 1);
                    }
                }
                let (a, b, c, d) = (*a as i128, *b as i128, *c as i128, *d as i128);
                let g1 = gcd_i128(a, d);
                let g2 = gcd_i128(c, b);
                Self::from_i128((a / g1) * (c / g2), (b / g2) * (d / g1))
            }
            _ => Self::from_big(self.to_big() * o.to_big()),
        }
    }

    pub fn inv(&self) -> Option<Self> {
        if self.is_zero() {
            return None;
        }
        Some(match self {
            Rational::Small(n, d) => Self::from_i128(*d as i128, *n as i128),
            Rational::Big(r) => Self::from_big(r.recip()),
        })
    }

    pub fn div(&self, o: &Self) -> Option<Self> {
        o.inv().map(|i| self.mul(&i))
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut acc = Rational::one();
        for _ in 0..k {
            acc = acc.mul(self);
        }
        acc
    }
}

impl PartialEq for Rational {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Rational::Small(a, b), Rational::Small(c, d)) => a == c && b == d,
            (Rational::Big(x), Rational::Big(y)) => x == y,
            _ => false,
        }
    }
}

impl Eq for Rational {}

impl Hash for Rational {
    fn hash<H: Hasher>(&self, state: &mut H) {
        match self {
            Rational::Small(a, b) => {
                0u8.hash(state);
                a.hash(state);
                b.hash(state);
            }
            Rational::Big(r) => {
                1u8.hash(state);
                r.numer().hash(state);
                r.denom().hash(state);
            }
        }
    }
}

impl PartialOrd for Rational {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Rational {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Rational::Small(a, b), Rational::Small(c, d)) => {
                ((*a as i128) * (*d as i128)).cmp(&((*c as i128) * (*b as i128)))
            }
            _ => self.to_big().cmp(&other.to_big()),
        }
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rational::Small(n, 1) => write!(f, "{n}"),
            Rational::Small(n, d) => write!(f, "{n}/{d}"),
            Rational::Big(r) => {
                if r.is_integer() {
                    write!(f, "{}", r.numer())
                } else {
                    write!(f, "{}/{}", r.numer(), r.denom())
                }
            }
        }
    }
}

impl fmt::Debug for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for Rational {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("not a rational: {s:?}"));
        let s = s.trim();
        let (n, d) = match s.split_once('/') {
            Some((n, d)) => (n.trim(), d.trim()),
            None => (s, "1"),
        };
        let valid = |x: &str| {
            let digits = x.strip_prefix(['-', '+']).unwrap_or(x);
            !digits.is_empty() && digits.len() <= 4096 && digits.bytes().all(|b| b.is_ascii_digit())
        };
        if !valid(n) || !valid(d) {
            return Err(bad());
        }
        let n: BigInt = n.parse().map_err(|_| bad())?;
        let d: BigInt = d.parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        Ok(Self::from_big(BigRational::new(n, d)))
    }
}

impl Serialize for Rational {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Rational {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

impl From<i64> for Rational {
    fn from(n: i64) -> Self {
        Rational::from_int(n)
    }
}

impl From<BigRational> for Rational {
    fn from(r: BigRational) -> Self {
        Rational::from_big(r)
    }
}

impl Default for Rational {
    fn default() -> Self {
        Rational::zero()
    }
}

/// `re + i·im` with exact rational parts.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct GaussianRational {
    pub re: Rational,
    pub im: Rational,
}

impl GaussianRational {
    pub fn new(re: Rational, im: Rational) -> Self {
        GaussianRational { re, im }
    }

    pub fn i() -> Self {
        GaussianRational::new(Rational::zero(), Rational::one())
    }

    pub fn is_real(&self) -> bool {
        self.im.is_zero()
    }

    /// `z ↦ z̄`.
    pub fn conjugate(&self) -> Self {
        GaussianRational::new(self.re.clone(), self.im.neg())
    }

    /// `|z|²`, always a nonnegative rational.
    pub fn norm_sqr(&self) -> Rational {
        self.re.mul(&self.re).add(&self.im.mul(&self.im))
    }
}

impl fmt::Display for GaussianRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.im.is_zero() {
            write!(f, "{}", self.re)
        } else if self.re.is_zero() {
            write!(f, "({})i", self.im)
        } else {
            write!(f, "{} + ({})i", self.re, self.im)
        }
    }
}

impl fmt::Debug for GaussianRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl Serialize for GaussianRational {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("GaussianRational", 2)?;
        st.serialize_field("re", &self.re)?;
        st.serialize_field("im", &self.im)?;
        st.end()
    }
}

impl<'de> Deserialize<'de> for GaussianRational {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Raw {
            re: Rational,
            im: Rational,
        }
        let r = Raw::deserialize(d)?;
        Ok(GaussianRational::new(r.re, r.im))
    }
}

/// Coefficient field used throughout: `Rational` or `GaussianRational`.
pub trait Scalar:
    Clone + PartialEq + Eq + Hash + fmt::Debug + fmt::Display + Send + Sync + Serialize + 'static
{
    fn zero() -> Self;
    fn one() -> Self;
    fn is_zero(&self) -> bool;
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn neg(&self) -> Self;
    fn inv(&self) -> Option<Self>;
    fn from_rational(r: &Rational) -> Self;
    /// Complex conjugation; the identity on real scalars.
    fn conj(&self) -> Self;
    /// The imaginary unit, if the field has one.
    fn imag_unit() -> Option<Self>;

    fn from_int(n: i64) -> Self {
        Self::from_rational(&Rational::from_int(n))
    }

    fn is_one(&self) -> bool {
        *self == Self::one()
    }

    fn add_assign(&mut self, o: &Self) {
        *self = Scalar::add(self, o);
    }
}

impl Scalar for Rational {
    fn zero() -> Self {
        Rational::zero()
    }
    fn one() -> Self {
        Rational::one()
    }
    fn is_zero(&self) -> bool {
        Rational::is_zero(self)
    }
    fn add(&self, o: &Self) -> Self {
        Rational::add(self, o)
    }
    fn sub(&self, o: &Self) -> Self {
        Rational::sub(self, o)
    }
    fn mul(&self, o: &Self) -> Self {
        Rational::mul(self, o)
    }
    fn neg(&self) -> Self {
        Rational::neg(self)
    }
    fn inv(&self) -> Option<Self> {
        Rational::inv(self)
    }
    fn from_rational(r: &Rational) -> Self {
        r.clone()
    }
    fn conj(&self) -> Self {
        self.clone()
    }
    fn imag_unit() -> Option<Self> {
        None
    }
}

impl Scalar for GaussianRational {
    fn zero() -> Self {
        GaussianRational::default()
    }
    fn one() -> Self {
        GaussianRational::new(Rational::one(), Rational::zero())
    }
    fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }
    fn add(&self, o: &Self) -> Self {
        GaussianRational::new(self.re.add(&o.re), self.im.add(&o.im))
    }
    fn sub(&self, o: &Self) -> Self {
        GaussianRational::new(self.re.sub(&o.re), self.im.sub(&o.im))
    }
    fn mul(&self, o: &Self) -> Self {
        if self.im.is_zero() && o.im.is_zero() {
            return GaussianRational::new(self.re.mul(&o.re), Rational::zero());
        }
        GaussianRational::new(
            self.re.mul(&o.re).sub(&self.im.mul(&o.im)),
            self.re.mul(&o.im).add(&self.im.mul(&o.re)),
        )
    }
    fn neg(&self) -> Self {
        GaussianRational::new(self.re.neg(), self.im.neg())
    }
    fn inv(&self) -> Option<Self> {
        let n = self.norm_sqr().inv()?;
        Some(GaussianRational::new(self.re.mul(&n), self.im.neg().mul(&n)))
    }
    fn from_rational(r: &Rational) -> Self {
        GaussianRational::new(r.clone(), Rational::zero())
    }
    fn conj(&self) -> Self {
        self.conjugate()
    }
    fn imag_unit() -> Option<Self> {
        Some(GaussianRational::i())
    }
}

/// `z ↦ z̄` on Gaussian rationals.
pub fn conjugate(z: &GaussianRational) -> GaussianRational {
    z.conjugate()
}

/// Elements of a module over a scalar field: the coefficient type stored in
/// sparse maps everywhere in the crate.
pub trait Coef: Clone + PartialEq + fmt::Debug + Send + Sync {
    type Field: Scalar;
    fn zero() -> Self;
    fn is_zero(&self) -> bool;
    fn add_assign(&mut self, rhs: &Self);
    fn scale(&self, s: &Self::Field) -> Self;

    fn neg(&self) -> Self {
        self.scale(&<Self::Field as Scalar>::from_int(-1))
    }

    fn sub_assign(&mut self, rhs: &Self) {
        self.add_assign(&rhs.neg());
    }
}

impl Coef for Rational {
    type Field = Rational;
    fn zero() -> Self {
        Rational::zero()
    }
    fn is_zero(&self) -> bool {
        Rational::is_zero(self)
    }
    fn add_assign(&mut self, rhs: &Self) {
        *self = Rational::add(self, rhs);
    }
    fn scale(&self, s: &Self) -> Self {
        Rational::mul(s, self)
    }
}

impl Coef for GaussianRational {
    type Field = GaussianRational;
    fn zero() -> Self {
        GaussianRational::default()
    }
    fn is_zero(&self) -> bool {
        Scalar::is_zero(self)
    }
    fn add_assign(&mut self, rhs: &Self) {
        *self = Scalar::add(self, rhs);
    }
    fn scale(&self, s: &Self) -> Self {
        Scalar::mul(s, self)
    }
}

/// Formal power series in `t` truncated at `t^cap`.
#[derive(Clone, PartialEq, Debug)]
pub struct TruncatedSeries<T> {
    coeffs: Vec<T>,
}

impl<T: Coef> TruncatedSeries<T> {
    pub fn zero(cap: usize) -> Self {
        TruncatedSeries { coeffs: vec![T::zero(); cap + 1] }
    }

    /// Builds a series from leading coefficients; missing ones are zero and
    /// coefficients beyond the cap are dropped.
    pub fn from_coeffs(mut coeffs: Vec<T>, cap: usize) -> Self {
        coeffs.truncate(cap + 1);
        while coeffs.len() < cap + 1 {
            coeffs.push(T::zero());
        }
        TruncatedSeries { coeffs }
    }

    pub fn cap(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeff(&self, k: usize) -> &T {
        &self.coeffs[k]
    }

    pub fn coeff_mut(&mut self, k: usize) -> &mut T {
        &mut self.coeffs[k]
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<T> {
        self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(Coef::is_zero)
    }

    fn check_caps(&self, other: &Self) -> Result<()> {
        if self.cap() != other.cap() {
            return Err(Error::Config(format!(
                "order caps differ: {} vs {}",
                self.cap(),
                other.cap()
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_caps(other)?;
        let mut out = self.clone();
        for (a, b) in out.coeffs.iter_mut().zip(&other.coeffs) {
            a.add_assign(b);
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_caps(other)?;
        let mut out = self.clone();
        for (a, b) in out.coeffs.iter_mut().zip(&other.coeffs) {
            a.sub_assign(b);
        }
        Ok(out)
    }

    pub fn scale(&self, s: &T::Field) -> Self {
        TruncatedSeries { coeffs: self.coeffs.iter().map(|c| c.scale(s)).collect() }
    }

    /// Cauchy product with a caller-supplied coefficient product.
    pub fn mul_with(&self, other: &Self, mul: impl Fn(&T, &T) -> T) -> Result<Self> {
        self.check_caps(other)?;
        let cap = self.cap();
        let mut out = Self::zero(cap);
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate().take(cap + 1 - i) {
                if b.is_zero() {
                    continue;
                }
                out.coeffs[i + j].add_assign(&mul(a, b));
            }
        }
        Ok(out)
    }
}

/// Cauchy product of scalar series, truncated at the common cap.
pub fn series_mul<S: Scalar + Coef<Field = S>>(
    a: &TruncatedSeries<S>,
    b: &TruncatedSeries<S>,
) -> Result<TruncatedSeries<S>> {
    a.mul_with(b, |x, y| Scalar::mul(x, y))
}

/// `n!` as a rational.
pub fn factorial(n: u32) -> Rational {
    let mut acc = Rational::one();
    for k in 2..=n {
        acc = acc.mul(&Rational::from_int(k as i64));
    }
    acc
}

/// Binomial coefficient `C(n, k)`.
pub fn binomial(n: u32, k: u32) -> Rational {
    if k > n {
        return Rational::zero();
    }
    let mut acc = Rational::one();
    for j in 0..k {
        acc = acc.mul(&Rational::new((n - j) as i64, (j + 1) as i64));
    }
    acc
}

/// Bernoulli numbers `B_0..=B_n` with `B_1 = -1/2`, so that
/// `x / (e^x - 1) = Σ B_k x^k / k!`.
pub fn bernoulli(n: usize) -> Vec<Rational> {
    let mut b = vec![Rational::one()];
    for m in 1..=n {
        let mut acc = Rational::zero();
        for (k, bk) in b.iter().enumerate() {
            acc = acc.add(&binomial(m as u32 + 1, k as u32).mul(bk));
        }
        b.push(acc.neg().mul(&Rational::new(1, m as i64 + 1)));
    }
    b
}

impl Rational {
    /// The value as `i64` when it is an integer that fits.
    pub fn to_i64(&self) -> Option<i64> {
        match self {
            Rational::Small(n, 1) => Some(*n),
            Rational::Small(..) => None,
            Rational::Big(r) => {
                if r.is_integer() {
                    r.numer().to_i64()
                } else {
                    None
                }
            }
        }
    }

    pub fn abs(&self) -> Self {
        if self.signum() < 0 {
            self.neg()
        } else {
            self.clone()
        }
    }

}
