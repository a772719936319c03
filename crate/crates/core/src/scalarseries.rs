//! Exact rational scalars and truncated Laurent series in one variable.
//!
//! A [`LaurentSeries`] carries an explicit precision: coefficients of
//! exponents `>= order` are unknown, never assumed zero. Every operation
//! computes the largest order it can certify.

use std::fmt;
use std::str::FromStr;
use std::sync::{Mutex, OnceLock};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// The coefficient field: arbitrary precision rationals, always reduced.
pub type Scalar = BigRational;

pub fn int(n: i64) -> Scalar {
    Scalar::from_integer(BigInt::from(n))
}

pub fn frac(p: i64, q: i64) -> Scalar {
    Scalar::new(BigInt::from(p), BigInt::from(q))
}

/// Parses `"p/q"`, `"p"` or `"-p/q"`.
pub fn parse_scalar(s: &str) -> Result<Scalar> {
    let t = s.trim();
    let v = Scalar::from_str(t).map_err(|_| Error::InvalidInput(format!("not a rational: {s:?}")))?;
    Ok(v)
}

/// Renders a scalar as `"p/q"` (or `"p"` for integers), lowest terms.
pub fn format_scalar(x: &Scalar) -> String {
    x.to_string()
}

/// `n!!` for `n >= -1`, with `(-1)!! = 0!! = 1`.
pub fn double_factorial(n: i64) -> BigInt {
    assert!(n >= -1, "double factorial of {n}");
    static CACHE: OnceLock<Mutex<Vec<BigInt>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(vec![BigInt::one(), BigInt::one()]));
    let mut c = cache.lock().unwrap();
    let idx = (n + 1) as usize;
    while c.len() <= idx {
        let m = c.len() as i64 - 1;
        let prev = if m >= 1 { c[(m - 1) as usize].clone() } else { BigInt::one() };
        c.push(prev * BigInt::from(m.max(1)));
    }
    c[idx].clone()
}

/// `(2k-1)!!` as a scalar, for `k >= 0`.
pub fn odd_df(k: i64) -> Scalar {
    Scalar::from_integer(double_factorial(2 * k - 1))
}

pub fn factorial(n: u64) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, i| acc * BigInt::from(i))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    fn of(e: i64) -> Parity {
        if e.rem_euclid(2) == 0 {
            Parity::Even
        } else {
            Parity::Odd
        }
    }

    fn times(self, other: Parity) -> Parity {
        if self == other {
            Parity::Even
        } else {
            Parity::Odd
        }
    }
}

/// A truncated Laurent series `sum_{e >= low} c_e z^e + O(z^order)`.
#[derive(Debug, Clone)]
pub struct LaurentSeries {
    low: i64,
    coeffs: Vec<Scalar>,
    order: i64,
    parity: Option<Parity>,
}

impl PartialEq for LaurentSeries {
    fn eq(&self, other: &Self) -> bool {
        if self.order != other.order {
            return false;
        }
        let lo = self.low.min(other.low);
        (lo..self.order).all(|e| self.get(e) == other.get(e))
    }
}

impl LaurentSeries {
    /// Coefficients `coeffs[i]` of `z^(low+i)`, known modulo `O(z^order)`.
    /// Entries at exponents `>= order` are discarded.
    pub fn new(low: i64, mut coeffs: Vec<Scalar>, order: i64) -> Self {
        let known = (order - low).max(0) as usize;
        coeffs.truncate(known);
        coeffs.resize(known, Scalar::zero());
        LaurentSeries { low, coeffs, order, parity: None }
    }

    pub fn zero(order: i64) -> Self {
        LaurentSeries::new(order, vec![], order)
    }

    pub fn monomial(c: Scalar, e: i64, order: i64) -> Self {
        LaurentSeries::new(e, vec![c], order)
    }

    /// Builds from `(exponent, coefficient)` pairs.
    pub fn from_terms(terms: &[(i64, Scalar)], order: i64) -> Self {
        let low = terms.iter().map(|t| t.0).min().unwrap_or(order).min(order);
        let mut coeffs = vec![Scalar::zero(); (order - low).max(0) as usize];
        for (e, c) in terms {
            if *e < order {
                coeffs[(e - low) as usize] += c;
            }
        }
        LaurentSeries::new(low, coeffs, order)
    }

    /// The identity series `z + O(z^order)`.
    pub fn z(order: i64) -> Self {
        LaurentSeries::monomial(Scalar::one(), 1, order)
    }

    /// Declares a parity; fails if a known coefficient contradicts it.
    pub fn with_parity(mut self, p: Parity) -> Result<Self> {
        for (i, c) in self.coeffs.iter().enumerate() {
            let e = self.low + i as i64;
            if !c.is_zero() && Parity::of(e) != p {
                return Err(Error::InvalidInput(format!("exponent {e} violates {p:?} parity")));
            }
        }
        self.parity = Some(p);
        Ok(self)
    }

    pub fn parity(&self) -> Option<Parity> {
        self.parity
    }

    pub fn order(&self) -> i64 {
        self.order
    }

    pub fn low(&self) -> i64 {
        self.low
    }

    fn get(&self, e: i64) -> Scalar {
        if e < self.low || e >= self.order {
            Scalar::zero()
        } else {
            self.coeffs[(e - self.low) as usize].clone()
        }
    }

    /// Coefficient of `z^e`; an error if `e` is beyond the known order.
    pub fn coeff(&self, e: i64) -> Result<Scalar> {
        if e >= self.order {
            return Err(Error::Precision(format!("coefficient z^{e} requested, series known to O(z^{})", self.order)));
        }
        Ok(self.get(e))
    }

    /// Lowest exponent with a nonzero known coefficient.
    pub fn valuation(&self) -> Option<i64> {
        self.coeffs.iter().position(|c| !c.is_zero()).map(|i| self.low + i as i64)
    }

    fn val_or_order(&self) -> i64 {
        self.valuation().unwrap_or(self.order)
    }

    /// Known nonzero terms in ascending exponent order.
    pub fn terms(&self) -> Vec<(i64, Scalar)> {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(i, c)| (self.low + i as i64, c.clone()))
            .collect()
    }

    /// Text form: a list of `(exponent, "num/den")` pairs.
    pub fn render(&self) -> String {
        let parts: Vec<String> =
            self.terms().iter().map(|(e, c)| format!("({e}, \"{}\")", format_scalar(c))).collect();
        format!("[{}] + O(z^{})", parts.join(", "), self.order)
    }

    pub fn truncate(&self, order: i64) -> Self {
        let o = order.min(self.order);
        let mut s = LaurentSeries::new(self.low.min(o), (self.low.min(o)..o).map(|e| self.get(e)).collect(), o);
        s.parity = self.parity;
        s
    }

    pub fn scale(&self, c: &Scalar) -> Self {
        let mut s = self.clone();
        for x in s.coeffs.iter_mut() {
            *x *= c;
        }
        s
    }

    /// Multiplication by `z^k`.
    pub fn shift(&self, k: i64) -> Self {
        let mut s = LaurentSeries::new(self.low + k, self.coeffs.clone(), self.order + k);
        s.parity = self.parity.map(|p| if k.rem_euclid(2) == 0 { p } else { p.times(Parity::Odd) });
        s
    }

    pub fn add(&self, other: &Self) -> Self {
        let order = self.order.min(other.order);
        let low = self.low.min(other.low).min(order);
        let coeffs = (low..order).map(|e| self.get(e) + other.get(e)).collect();
        let mut s = LaurentSeries::new(low, coeffs, order);
        if self.parity == other.parity {
            s.parity = self.parity;
        }
        s
    }

    pub fn neg(&self) -> Self {
        self.scale(&-Scalar::one())
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Self) -> Self {
        let va = self.val_or_order();
        let vb = other.val_or_order();
        let order = (self.order + vb).min(other.order + va);
        let low = (va + vb).min(order);
        let mut coeffs = vec![Scalar::zero(); (order - low).max(0) as usize];
        for (ea, ca) in self.terms() {
            for (eb, cb) in other.terms() {
                let e = ea + eb;
                if e >= order {
                    break;
                }
                coeffs[(e - low) as usize] += &ca * &cb;
            }
        }
        let mut s = LaurentSeries::new(low, coeffs, order);
        if let (Some(p), Some(q)) = (self.parity, other.parity) {
            s.parity = Some(p.times(q));
        }
        s
    }

    /// Multiplicative inverse; requires a known nonzero leading term.
    pub fn inverse(&self) -> Result<Self> {
        let v = self
            .valuation()
            .ok_or_else(|| Error::Precision("inverse of a series with no known nonzero term".into()))?;
        let a0 = self.get(v);
        let rel = self.order - v;
        let mut out = vec![Scalar::zero(); rel as usize];
        out[0] = a0.recip();
        for n in 1..rel {
            let mut acc = Scalar::zero();
            for k in 1..=n {
                let a = self.get(v + k);
                if !a.is_zero() {
                    acc += a * &out[(n - k) as usize];
                }
            }
            out[n as usize] = -acc / &a0;
        }
        let mut s = LaurentSeries::new(-v, out, -v + rel);
        s.parity = self.parity;
        Ok(s)
    }

    /// Integer power, negative exponents through [`inverse`](Self::inverse).
    pub fn pow(&self, n: i64) -> Result<Self> {
        if n == 0 {
            let v = self.val_or_order();
            return Ok(LaurentSeries::monomial(Scalar::one(), 0, self.order - v));
        }
        let base = if n < 0 { self.inverse()? } else { self.clone() };
        let mut e = n.unsigned_abs();
        let mut acc: Option<LaurentSeries> = None;
        let mut b = base;
        while e > 0 {
            if e & 1 == 1 {
                acc = Some(match acc {
                    None => b.clone(),
                    Some(a) => a.mul(&b),
                });
            }
            e >>= 1;
            if e > 0 {
                b = b.mul(&b);
            }
        }
        Ok(acc.unwrap())
    }

    pub fn derivative(&self) -> Self {
        let coeffs = (self.low..self.order).map(|e| self.get(e) * int(e)).collect::<Vec<_>>();
        let mut s = LaurentSeries::new(self.low - 1, coeffs, self.order - 1);
        s.parity = self.parity.map(|p| p.times(Parity::Odd));
        s
    }

    /// The part with nonnegative exponents, `(g)_+`.
    pub fn positive_part(&self) -> Self {
        let low = 0.max(self.low).min(self.order.max(0));
        let order = self.order;
        let coeffs = (low..order).map(|e| self.get(e)).collect();
        let mut s = LaurentSeries::new(low, coeffs, order);
        s.parity = self.parity;
        s
    }
}

/// `outer(inner(z))` for `inner` of positive valuation.
pub fn series_compose(outer: &LaurentSeries, inner: &LaurentSeries) -> Result<LaurentSeries> {
    let w = inner
        .valuation()
        .ok_or_else(|| Error::InvalidInput("inner series has no known nonzero term".into()))?;
    if w <= 0 {
        return Err(Error::InvalidInput(format!("inner series has valuation {w} <= 0")));
    }
    let rel = inner.order - w;
    let vo = outer.valuation().unwrap_or(outer.order);
    let mut order = outer.order * w;
    if outer.valuation().is_some() {
        order = order.min(vo * w + rel);
    }
    if order <= vo * w && outer.valuation().is_some() {
        return Err(Error::Precision("composition determines no coefficient".into()));
    }
    let mut acc = LaurentSeries::zero(order);
    let terms = outer.terms();
    if let Some(&(e0, _)) = terms.first() {
        let mut p = inner.pow(e0)?;
        let mut cur = e0;
        for (e, c) in terms {
            while cur < e {
                p = p.mul(inner);
                cur += 1;
            }
            acc = acc.add(&p.scale(&c).truncate(order));
        }
    }
    let mut out = acc.truncate(order);
    if let (Some(po), Some(Parity::Odd)) = (outer.parity, inner.parity) {
        out.parity = Some(po);
    }
    Ok(out)
}

/// Compositional inverse of `f = z + O(z^3)` with odd exponents only.
pub fn series_reverse(f: &LaurentSeries) -> Result<LaurentSeries> {
    for (e, c) in f.terms() {
        if e.rem_euclid(2) == 0 {
            return Err(Error::InvalidInput(format!("even exponent {e} in series to reverse")));
        }
        if e < 1 {
            return Err(Error::InvalidInput("series to reverse has exponent below 1".into()));
        }
        if e == 1 && !c.is_one() {
            return Err(Error::InvalidInput("series to reverse has non-unit leading coefficient".into()));
        }
    }
    if f.order <= 1 || !f.get(1).is_one() {
        return Err(Error::InvalidInput("series to reverse must start with z".into()));
    }
    let order = f.order;
    let mut h = LaurentSeries::z(order);
    let mut n = 3;
    while n < order {
        // f(h) = h + (terms fixed by lower coefficients of h) at order n
        let c = series_compose(f, &h)?.coeff(n)?;
        let mut hc: Vec<Scalar> = (1..order).map(|e| h.get(e)).collect();
        hc[(n - 1) as usize] -= c;
        h = LaurentSeries::new(1, hc, order);
        n += 2;
    }
    h.with_parity(Parity::Odd)
}

/// `(1 + u)^(1/root)` for `u` of positive valuation and odd `root > 0`.
pub fn binomial_power(u: &LaurentSeries, root: i64) -> Result<LaurentSeries> {
    if root <= 0 || root % 2 == 0 {
        return Err(Error::InvalidInput(format!("root must be a positive odd integer, got {root}")));
    }
    if let Some(v) = u.valuation() {
        if v < 1 {
            return Err(Error::InvalidInput("binomial_power needs u with positive valuation".into()));
        }
    }
    let order = u.order;
    if order <= 0 {
        return Err(Error::Precision("binomial_power of a series with no known terms".into()));
    }
    let a = frac(1, root);
    let p = |k: i64| if k == 0 { Scalar::one() } else { u.get(k) };
    // Miller's recurrence for P^a with P = 1 + u
    let mut g = vec![Scalar::one()];
    for n in 1..order {
        let mut acc = Scalar::zero();
        for k in 1..=n {
            let pk = p(k);
            if !pk.is_zero() {
                acc += (&(&a + Scalar::one()) * int(k) - int(n)) * pk * &g[(n - k) as usize];
            }
        }
        g.push(acc / int(n));
    }
    let mut s = LaurentSeries::new(0, g, order);
    if u.parity == Some(Parity::Even) {
        s.parity = Some(Parity::Even);
    }
    Ok(s)
}

/// Coefficient of `z^-1`.
pub fn residue(s: &LaurentSeries) -> Result<Scalar> {
    s.coeff(-1)
}

impl fmt::Display for LaurentSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

/// Small integer power of a scalar, allowing negative exponents.
pub fn scalar_pow(x: &Scalar, n: i64) -> Scalar {
    let mut acc = Scalar::one();
    for _ in 0..n.unsigned_abs() {
        acc *= x;
    }
    if n < 0 {
        acc.recip()
    } else {
        acc
    }
}

pub fn is_integer_valued(x: &Scalar) -> Option<i64> {
    if x.is_integer() {
        x.to_integer().to_i64()
    } else {
        None
    }
}

pub fn abs(x: &Scalar) -> Scalar {
    x.abs()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn s(terms: &[(i64, i64)], order: i64) -> LaurentSeries {
        let t: Vec<(i64, Scalar)> = terms.iter().map(|&(e, c)| (e, int(c))).collect();
        LaurentSeries::from_terms(&t, order)
    }

    #[test]
    fn double_factorials() {
        assert_eq!(double_factorial(-1), BigInt::one());
        assert_eq!(double_factorial(1), BigInt::one());
        assert_eq!(double_factorial(7), BigInt::from(105));
        assert_eq!(double_factorial(6), BigInt::from(48));
        assert_eq!(odd_df(3), int(15));
        assert_eq!(odd_df(0), int(1));
    }

    #[test]
    fn parse_and_format() {
        assert_eq!(parse_scalar("-6/4").unwrap(), frac(-3, 2));
        assert_eq!(format_scalar(&frac(-3, 2)), "-3/2");
        assert!(parse_scalar("x").is_err());
    }

    #[test]
    fn compose_square() {
        let out = series_compose(&s(&[(2, 1)], 20), &s(&[(1, 1), (3, 1)], 5)).unwrap();
        assert_eq!(out, s(&[(2, 1), (4, 2)], 6));
    }

    #[test]
    fn compose_inverse_square() {
        let inner = s(&[(1, 1), (3, -1)], 7);
        let out = series_compose(&s(&[(-2, 1)], 20), &inner).unwrap();
        assert_eq!(out.order(), 4);
        assert_eq!(out.terms(), vec![(-2, int(1)), (0, int(2)), (2, int(3))]);
        let back = out.mul(&inner.pow(2).unwrap());
        assert_eq!(back.terms(), vec![(0, int(1))]);
    }

    #[test]
    fn compose_rejects_constant_inner() {
        assert!(series_compose(&s(&[(2, 1)], 9), &s(&[(0, 1), (1, 1)], 9)).is_err());
    }

    #[test]
    fn reverse_cubic() {
        let c = frac(2, 3);
        let f = LaurentSeries::from_terms(&[(1, int(1)), (3, -c.clone())], 9);
        let h = series_reverse(&f).unwrap();
        assert_eq!(h.coeff(3).unwrap(), c);
        assert_eq!(h.coeff(5).unwrap(), int(3) * &c * &c);
        assert_eq!(series_compose(&f, &h).unwrap().truncate(9), LaurentSeries::z(9));
        assert_eq!(series_reverse(&h).unwrap(), f);
    }

    #[test]
    fn reverse_rejects_bad_shapes() {
        assert!(series_reverse(&s(&[(1, 2)], 7)).is_err());
        assert!(series_reverse(&s(&[(1, 1), (2, 1)], 7)).is_err());
        assert_eq!(series_reverse(&LaurentSeries::z(9)).unwrap(), LaurentSeries::z(9));
    }

    #[test]
    fn cube_root() {
        let c = frac(1, 5);
        let u = LaurentSeries::from_terms(&[(2, -int(3) * &c)], 8);
        let g = binomial_power(&u, 3).unwrap();
        assert_eq!(g.coeff(2).unwrap(), -c.clone());
        assert_eq!(g.coeff(4).unwrap(), -(&c * &c));
        assert_eq!(g.pow(3).unwrap().truncate(8), u.add(&s(&[(0, 1)], 8)));
        assert!(binomial_power(&u, 2).is_err());
        assert_eq!(binomial_power(&LaurentSeries::zero(6), 3).unwrap(), s(&[(0, 1)], 6));
    }

    #[test]
    fn residues() {
        assert_eq!(residue(&s(&[(3, 1), (-1, 2)], 5)).unwrap(), int(2));
        assert_eq!(residue(&s(&[(-2, 1), (0, 4)], 5)).unwrap(), int(0));
        let h = LaurentSeries::from_terms(&[(1, int(1)), (3, frac(7, 2))], 11);
        let lg = h.derivative().mul(&h.inverse().unwrap());
        assert_eq!(residue(&lg).unwrap(), int(1));
        assert!(residue(&LaurentSeries::zero(-3)).is_err());
    }

    fn odd_series() -> impl Strategy<Value = LaurentSeries> {
        proptest::collection::vec(-4i64..5, 4).prop_map(|cs| {
            let mut t = vec![(1, int(1))];
            for (i, c) in cs.into_iter().enumerate() {
                t.push((3 + 2 * i as i64, frac(c, 3)));
            }
            LaurentSeries::from_terms(&t, 11)
        })
    }

    proptest! {
        #[test]
        fn reverse_is_two_sided(f in odd_series()) {
            let h = series_reverse(&f).unwrap();
            prop_assert_eq!(series_compose(&f, &h).unwrap(), LaurentSeries::z(11));
            prop_assert_eq!(series_compose(&h, &f).unwrap(), LaurentSeries::z(11));
        }

        #[test]
        fn binomial_power_roundtrip(cs in proptest::collection::vec(-5i64..6, 5), r in prop_oneof![Just(1i64), Just(3i64)]) {
            let t: Vec<(i64, Scalar)> = cs.iter().enumerate().map(|(i, &c)| (i as i64 + 1, frac(c, 2))).collect();
            let u = LaurentSeries::from_terms(&t, 9);
            let g = binomial_power(&u, r).unwrap();
            prop_assert_eq!(g.pow(r).unwrap().truncate(9), u.add(&LaurentSeries::monomial(int(1), 0, 9)));
        }

        #[test]
        fn odd_compose_odd_is_odd(f in odd_series(), g in odd_series()) {
            let c = series_compose(&f, &g).unwrap();
            prop_assert!(c.terms().iter().all(|(e, _)| e % 2 != 0));
            prop_assert!(f.derivative().terms().iter().all(|(e, _)| e % 2 == 0));
        }

        #[test]
        fn residue_stable_under_precision(f in odd_series(), j in 1i64..4) {
            let lo = f.truncate(7);
            let r_lo = residue(&f.derivative().mul(&lo.pow(-2 * j).unwrap()));
            let r_hi = residue(&f.derivative().mul(&f.pow(-2 * j).unwrap())).unwrap();
            if let Ok(r) = r_lo {
                prop_assert_eq!(r, r_hi);
            }
        }
    }
}
