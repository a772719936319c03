//! Sparse polynomials in the variables `T[a][k]` and truncated series in ℏ.
//!
//! Sectors are stored zero-based and printed one-based. The degree of
//! `T[a][k]` is `2k+1`.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::scalarseries::{format_scalar, int, Scalar};

/// The variable `T_level^sector` (sector zero-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var {
    pub sector: u16,
    pub level: u16,
}

impl Var {
    pub fn new(sector: usize, level: usize) -> Var {
        Var { sector: sector as u16, level: level as u16 }
    }

    pub fn degree(self) -> i64 {
        2 * self.level as i64 + 1
    }
}

/// A monomial: sorted `(variable, exponent)` pairs with positive exponents.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Monomial(Vec<(Var, u32)>);

impl Monomial {
    pub fn one() -> Monomial {
        Monomial(Vec::new())
    }

    pub fn var(v: Var) -> Monomial {
        Monomial(vec![(v, 1)])
    }

    pub fn from_pairs(pairs: &[(Var, u32)]) -> Monomial {
        let mut m = Monomial::one();
        for &(v, e) in pairs {
            m.multiply_var(v, e);
        }
        m
    }

    pub fn factors(&self) -> &[(Var, u32)] {
        &self.0
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn exponent(&self, v: Var) -> u32 {
        match self.0.binary_search_by(|p| p.0.cmp(&v)) {
            Ok(i) => self.0[i].1,
            Err(_) => 0,
        }
    }

    pub fn multiply_var(&mut self, v: Var, e: u32) {
        if e == 0 {
            return;
        }
        match self.0.binary_search_by(|p| p.0.cmp(&v)) {
            Ok(i) => self.0[i].1 += e,
            Err(i) => self.0.insert(i, (v, e)),
        }
    }

    /// Removes `e` copies of `v`; returns the falling factorial
    /// `x(x-1)...(x-e+1)` of the old exponent, or `None` if it vanishes.
    pub fn differentiate(&mut self, v: Var, e: u32) -> Option<u64> {
        if e == 0 {
            return Some(1);
        }
        let i = self.0.binary_search_by(|p| p.0.cmp(&v)).ok()?;
        let x = self.0[i].1;
        if x < e {
            return None;
        }
        let ff = (x - e + 1..=x).map(|t| t as u64).product();
        if x == e {
            self.0.remove(i);
        } else {
            self.0[i].1 = x - e;
        }
        Some(ff)
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let mut m = self.clone();
        for &(v, e) in &other.0 {
            m.multiply_var(v, e);
        }
        m
    }

    pub fn degree(&self) -> i64 {
        self.0.iter().map(|(v, e)| v.degree() * *e as i64).sum()
    }

    pub fn sector_degree(&self, sector: usize) -> i64 {
        self.0.iter().filter(|(v, _)| v.sector as usize == sector).map(|(v, e)| v.degree() * *e as i64).sum()
    }

    pub fn max_level(&self) -> Option<usize> {
        self.0.iter().map(|(v, _)| v.level as usize).max()
    }

    /// Canonical text: `T[a][k]^e * ...`, one-based sectors, `1` when empty.
    pub fn render(&self) -> String {
        if self.0.is_empty() {
            return "1".to_string();
        }
        self.0
            .iter()
            .map(|(v, e)| format!("T[{}][{}]^{}", v.sector + 1, v.level, e))
            .collect::<Vec<_>>()
            .join(" * ")
    }

    /// Inverse of [`render`](Self::render).
    pub fn parse(s: &str) -> Result<Monomial> {
        let s = s.trim();
        let mut m = Monomial::one();
        if s == "1" {
            return Ok(m);
        }
        let bad = || Error::InvalidInput(format!("bad monomial {s:?}"));
        for f in s.split('*') {
            let f = f.trim();
            let rest = f.strip_prefix("T[").ok_or_else(bad)?;
            let (a, rest) = rest.split_once("][").ok_or_else(bad)?;
            let (k, rest) = rest.split_once(']').ok_or_else(bad)?;
            let e = match rest.strip_prefix('^') {
                Some(e) => e.parse::<u32>().map_err(|_| bad())?,
                None if rest.is_empty() => 1,
                None => return Err(bad()),
            };
            let a: usize = a.parse().map_err(|_| bad())?;
            let k: usize = k.parse().map_err(|_| bad())?;
            if a == 0 {
                return Err(bad());
            }
            m.multiply_var(Var::new(a - 1, k), e);
        }
        Ok(m)
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

/// A polynomial in the `T` variables with exact coefficients.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TPolynomial {
    terms: BTreeMap<Monomial, Scalar>,
}

impl TPolynomial {
    pub fn zero() -> Self {
        TPolynomial::default()
    }

    pub fn constant(c: Scalar) -> Self {
        let mut p = TPolynomial::zero();
        p.add_term(Monomial::one(), c);
        p
    }

    pub fn one() -> Self {
        TPolynomial::constant(Scalar::one())
    }

    pub fn var(v: Var) -> Self {
        TPolynomial::monomial(Monomial::var(v), Scalar::one())
    }

    pub fn monomial(m: Monomial, c: Scalar) -> Self {
        let mut p = TPolynomial::zero();
        p.add_term(m, c);
        p
    }

    pub fn add_term(&mut self, m: Monomial, c: Scalar) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Scalar)> {
        self.terms.iter()
    }

    pub fn coeff(&self, m: &Monomial) -> Scalar {
        self.terms.get(m).cloned().unwrap_or_else(Scalar::zero)
    }

    pub fn constant_term(&self) -> Scalar {
        self.coeff(&Monomial::one())
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut p = self.clone();
        p.add_assign(other);
        p
    }

    pub fn add_assign(&mut self, other: &Self) {
        for (m, c) in &other.terms {
            self.add_term(m.clone(), c.clone());
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(&-Scalar::one()))
    }

    pub fn scale(&self, c: &Scalar) -> Self {
        if c.is_zero() {
            return TPolynomial::zero();
        }
        TPolynomial { terms: self.terms.iter().map(|(m, x)| (m.clone(), x * c)).collect() }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut p = TPolynomial::zero();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                p.add_term(ma.mul(mb), ca * cb);
            }
        }
        p
    }

    pub fn derivative(&self, v: Var) -> Self {
        let mut p = TPolynomial::zero();
        for (m, c) in &self.terms {
            let mut m2 = m.clone();
            if let Some(ff) = m2.differentiate(v, 1) {
                p.add_term(m2, c * int(ff as i64));
            }
        }
        p
    }

    /// Largest monomial degree; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<i64> {
        self.terms.keys().map(|m| m.degree()).max()
    }

    pub fn sector_degree(&self, sector: usize) -> Option<i64> {
        self.terms.keys().map(|m| m.sector_degree(sector)).max()
    }

    pub fn max_level(&self) -> Option<usize> {
        self.terms.keys().filter_map(|m| m.max_level()).max()
    }

    /// Homogeneous components keyed by degree.
    pub fn graded_parts(&self) -> BTreeMap<i64, TPolynomial> {
        let mut out: BTreeMap<i64, TPolynomial> = BTreeMap::new();
        for (m, c) in &self.terms {
            out.entry(m.degree()).or_default().add_term(m.clone(), c.clone());
        }
        out
    }

    pub fn is_homogeneous_of_degree(&self, d: i64) -> bool {
        self.terms.keys().all(|m| m.degree() == d)
    }

    /// Replaces every `T[a][k]` by `sum_b psi[a][b] T[b][k]`.
    pub fn substitute_basis(&self, psi: &[Vec<Scalar>]) -> Self {
        let mut out = TPolynomial::zero();
        for (m, c) in &self.terms {
            let mut acc = TPolynomial::constant(c.clone());
            for &(v, e) in m.factors() {
                let mut lin = TPolynomial::zero();
                for (b, x) in psi[v.sector as usize].iter().enumerate() {
                    lin.add_term(Monomial::var(Var::new(b, v.level as usize)), x.clone());
                }
                for _ in 0..e {
                    acc = acc.mul(&lin);
                }
            }
            out.add_assign(&acc);
        }
        out
    }

    pub fn render(&self) -> String {
        if self.terms.is_empty() {
            return "0".into();
        }
        self.terms
            .iter()
            .map(|(m, c)| format!("{} * {}", format_scalar(c), m.render()))
            .collect::<Vec<_>>()
            .join(" + ")
    }
}

impl fmt::Display for TPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

/// An element of `Q[T][[ℏ]]` known through `ℏ^order_k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HbarSeries {
    coeffs: Vec<TPolynomial>,
}

impl HbarSeries {
    pub fn new(coeffs: Vec<TPolynomial>) -> Self {
        assert!(!coeffs.is_empty(), "an ℏ-series needs at least the ℏ^0 coefficient");
        HbarSeries { coeffs }
    }

    pub fn zero(order_k: usize) -> Self {
        HbarSeries { coeffs: vec![TPolynomial::zero(); order_k + 1] }
    }

    pub fn one(order_k: usize) -> Self {
        let mut s = HbarSeries::zero(order_k);
        s.coeffs[0] = TPolynomial::one();
        s
    }

    pub fn order_k(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeff(&self, m: usize) -> &TPolynomial {
        &self.coeffs[m]
    }

    pub fn coeff_mut(&mut self, m: usize) -> &mut TPolynomial {
        &mut self.coeffs[m]
    }

    pub fn coeffs(&self) -> &[TPolynomial] {
        &self.coeffs
    }

    pub fn truncate(&self, order_k: usize) -> Self {
        assert!(order_k <= self.order_k(), "cannot extend a truncated series");
        HbarSeries { coeffs: self.coeffs[..=order_k].to_vec() }
    }

    pub fn add(&self, other: &Self) -> Self {
        let k = self.order_k().min(other.order_k());
        HbarSeries { coeffs: (0..=k).map(|m| self.coeffs[m].add(&other.coeffs[m])).collect() }
    }

    pub fn sub(&self, other: &Self) -> Self {
        let k = self.order_k().min(other.order_k());
        HbarSeries { coeffs: (0..=k).map(|m| self.coeffs[m].sub(&other.coeffs[m])).collect() }
    }

    pub fn scale(&self, c: &Scalar) -> Self {
        HbarSeries { coeffs: self.coeffs.iter().map(|p| p.scale(c)).collect() }
    }

    /// Product truncated at the smaller of the two orders.
    pub fn mul(&self, other: &Self) -> Self {
        let k = self.order_k().min(other.order_k());
        let mut out = HbarSeries::zero(k);
        for i in 0..=k {
            if self.coeffs[i].is_zero() {
                continue;
            }
            for j in 0..=k - i {
                out.coeffs[i + j].add_assign(&self.coeffs[i].mul(&other.coeffs[j]));
            }
        }
        out
    }

    /// Multiplies the ℏ^m coefficient by `c^m`.
    pub fn rescale_hbar(&self, c: &Scalar) -> Self {
        let mut f = Scalar::one();
        let mut out = Vec::with_capacity(self.coeffs.len());
        for p in &self.coeffs {
            out.push(p.scale(&f));
            f *= c;
        }
        HbarSeries { coeffs: out }
    }

    pub fn max_degree(&self) -> Option<i64> {
        self.coeffs.iter().filter_map(|p| p.degree()).max()
    }

    pub fn max_level(&self) -> Option<usize> {
        self.coeffs.iter().filter_map(|p| p.max_level()).max()
    }

    /// Replaces `T[a][k]` by `sum_b psi[a][b] T[b][k]` in every coefficient.
    pub fn substitute_basis(&self, psi: &[Vec<Scalar>]) -> Result<Self> {
        matrix_inverse(psi)?;
        Ok(HbarSeries { coeffs: self.coeffs.iter().map(|p| p.substitute_basis(psi)).collect() })
    }

    /// Rows `(hbar_order, monomial, coefficient)` in deterministic order.
    pub fn rows(&self) -> Vec<(usize, &Monomial, &Scalar)> {
        let mut out = Vec::new();
        for (m, p) in self.coeffs.iter().enumerate() {
            for (mono, c) in p.terms() {
                out.push((m, mono, c));
            }
        }
        out
    }

    /// First `(order, monomial)` where the two series differ, through the
    /// smaller of the two orders.
    pub fn first_difference(&self, other: &Self) -> Option<(usize, Monomial, Scalar, Scalar)> {
        let k = self.order_k().min(other.order_k());
        for m in 0..=k {
            let d = self.coeffs[m].sub(&other.coeffs[m]);
            let first = d.terms().next().map(|(x, _)| x.clone());
            if let Some(mono) = first {
                let (a, b) = (self.coeffs[m].coeff(&mono), other.coeffs[m].coeff(&mono));
                return Some((m, mono, a, b));
            }
        }
        None
    }
}

/// Exact inverse of a square matrix; singular input is an error.
pub fn matrix_inverse(a: &[Vec<Scalar>]) -> Result<Vec<Vec<Scalar>>> {
    let n = a.len();
    if a.iter().any(|r| r.len() != n) {
        return Err(Error::InvalidInput("matrix is not square".into()));
    }
    let mut m: Vec<Vec<Scalar>> = a
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut row = r.clone();
            row.extend((0..n).map(|j| if i == j { Scalar::one() } else { Scalar::zero() }));
            row
        })
        .collect();
    for col in 0..n {
        let piv = (col..n)
            .find(|&r| !m[r][col].is_zero())
            .ok_or_else(|| Error::InvalidInput("singular matrix".into()))?;
        m.swap(col, piv);
        let p = m[col][col].clone();
        for x in m[col].iter_mut() {
            *x /= &p;
        }
        for r in 0..n {
            if r != col && !m[r][col].is_zero() {
                let f = m[r][col].clone();
                let pivot_row = m[col].clone();
                for (x, y) in m[r].iter_mut().zip(pivot_row.iter()) {
                    *x -= &f * y;
                }
            }
        }
    }
    Ok(m.into_iter().map(|r| r[n..].to_vec()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalarseries::frac;
    use proptest::prelude::*;

    fn t(a: usize, k: usize) -> TPolynomial {
        TPolynomial::var(Var::new(a, k))
    }

    #[test]
    fn degrees() {
        assert_eq!(t(0, 0).degree(), Some(1));
        assert_eq!(t(0, 2).mul(&t(0, 2)).mul(&t(0, 2)).degree(), Some(15));
        assert_eq!(TPolynomial::constant(int(5)).degree(), Some(0));
        assert_eq!(TPolynomial::zero().degree(), None);
    }

    #[test]
    fn graded() {
        let p = t(0, 0).mul(&t(0, 0)).mul(&t(0, 0)).add(&t(0, 1));
        let g = p.graded_parts();
        assert_eq!(g.len(), 1);
        assert_eq!(g[&3], p);
        let q = t(0, 0).add(&t(0, 0).mul(&t(0, 0)));
        let g = q.graded_parts();
        assert_eq!(g[&1], t(0, 0));
        assert_eq!(g[&2], t(0, 0).mul(&t(0, 0)));
        assert!(TPolynomial::zero().graded_parts().is_empty());
    }

    #[test]
    fn monomial_text_roundtrip() {
        let m = Monomial::from_pairs(&[(Var::new(1, 3), 2), (Var::new(0, 0), 1)]);
        assert_eq!(m.render(), "T[1][0]^1 * T[2][3]^2");
        assert_eq!(Monomial::parse(&m.render()).unwrap(), m);
        assert_eq!(Monomial::parse("1").unwrap(), Monomial::one());
        assert!(Monomial::parse("T[0][1]").is_err());
    }

    #[test]
    fn basis_change() {
        let s = HbarSeries::new(vec![TPolynomial::one(), t(0, 0).mul(&t(0, 0))]);
        let id = vec![vec![int(1)]];
        assert_eq!(s.substitute_basis(&id).unwrap(), s);
        let two = vec![vec![int(2)]];
        assert_eq!(s.substitute_basis(&two).unwrap().coeff(1), &t(0, 0).mul(&t(0, 0)).scale(&int(4)));
        assert!(s.substitute_basis(&[vec![int(0)]]).is_err());
    }

    #[test]
    fn inverse_matrix() {
        let a = vec![vec![int(1), int(2)], vec![int(3), int(4)]];
        let b = matrix_inverse(&a).unwrap();
        assert_eq!(b, vec![vec![int(-2), int(1)], vec![frac(3, 2), frac(-1, 2)]]);
    }

    fn poly() -> impl Strategy<Value = TPolynomial> {
        proptest::collection::vec((0usize..2, 0usize..3, 1u32..3, -3i64..4), 1..4).prop_map(|ts| {
            let mut p = TPolynomial::zero();
            for (a, k, e, c) in ts {
                p.add_term(Monomial::from_pairs(&[(Var::new(a, k), e)]), int(c));
            }
            p
        })
    }

    fn invertible() -> impl Strategy<Value = Vec<Vec<Scalar>>> {
        (-3i64..4, -3i64..4, -3i64..4, -3i64..4)
            .prop_filter("singular", |(a, b, c, d)| a * d - b * c != 0)
            .prop_map(|(a, b, c, d)| vec![vec![int(a), int(b)], vec![int(c), int(d)]])
    }

    proptest! {
        #[test]
        fn degree_is_additive(p in poly(), q in poly()) {
            prop_assume!(!p.is_zero() && !q.is_zero());
            prop_assert_eq!(p.mul(&q).degree(), Some(p.degree().unwrap() + q.degree().unwrap()));
        }

        #[test]
        fn basis_roundtrip(p in poly(), psi in invertible()) {
            let s = HbarSeries::new(vec![TPolynomial::one(), p]);
            let inv = matrix_inverse(&psi).unwrap();
            let there = s.substitute_basis(&psi).unwrap();
            for (d, part) in there.coeff(1).graded_parts() {
                prop_assert!(s.coeff(1).graded_parts().contains_key(&d) || part.is_zero());
            }
            prop_assert_eq!(there.substitute_basis(&inv).unwrap(), s);
        }
    }
}
