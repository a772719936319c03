//! The Heisenberg mode algebra.
//!
//! `J[a][k]` acts as `(2k-1)!! d/dT[a][k-1]` for `k > 0` and as
//! multiplication by `T[a][-k] / (2|k|-1)!!` for `k <= 0`. Operators are
//! stored normal-ordered: every monomial lists its modes in ascending
//! index, which puts all creations (index `<= 0`) left of all
//! annihilations. Each monomial carries its own power of ℏ.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::scalarseries::{double_factorial, factorial, format_scalar, int, odd_df, Scalar};
use crate::tpoly::{HbarSeries, Monomial, TPolynomial, Var};

/// The mode `J[sector][index]`, sector zero-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Mode {
    pub index: i32,
    pub sector: u16,
}

impl Mode {
    pub fn new(sector: usize, index: i32) -> Mode {
        Mode { index, sector: sector as u16 }
    }

    pub fn degree(self) -> i64 {
        1 - 2 * self.index as i64
    }

    pub fn is_creation(self) -> bool {
        self.index <= 0
    }

    /// The variable touched by this mode.
    pub fn var(self) -> Var {
        let level = if self.index <= 0 { -self.index } else { self.index - 1 };
        Var::new(self.sector as usize, level as usize)
    }

    /// `[self, other]` as a scalar.
    pub fn bracket(self, other: Mode) -> Scalar {
        if self.sector != other.sector || self.index + other.index != 1 {
            return Scalar::zero();
        }
        int(2 * self.index as i64 - 1)
    }
}

/// A normal-ordered monomial: sorted modes and a power of ℏ.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TermKey {
    pub hbar: i32,
    pub modes: Vec<Mode>,
}

impl TermKey {
    pub fn new(mut modes: Vec<Mode>, hbar: i32) -> TermKey {
        modes.sort();
        TermKey { hbar, modes }
    }

    pub fn degree(&self) -> i64 {
        self.modes.iter().map(|m| m.degree()).sum()
    }

    pub fn creations(&self) -> impl Iterator<Item = &Mode> {
        self.modes.iter().filter(|m| m.is_creation())
    }

    pub fn annihilations(&self) -> impl Iterator<Item = &Mode> {
        self.modes.iter().filter(|m| !m.is_creation())
    }

    pub fn arity(&self) -> usize {
        self.modes.len()
    }
}

/// Truncation window for operator computations.
///
/// A term is kept when each annihilation index is at most `max_level + 1`
/// and its degree is at least `-max_degree`. Dropped terms annihilate every
/// series whose coefficients have degree at most `max_degree`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WindowSpec {
    pub max_level: usize,
    pub max_degree: i64,
}

impl WindowSpec {
    /// Window for series of degree at most `d`: `max_level = ceil((d-1)/2)`.
    pub fn for_degree(d: i64) -> WindowSpec {
        let d = d.max(1);
        WindowSpec { max_level: (d as usize) / 2, max_degree: d }
    }

    /// Window for a run targeting `ℏ^k`; the degree bound is `3k` when
    /// some sector is regular and `k` otherwise.
    pub fn for_order(k: usize, any_regular: bool) -> WindowSpec {
        let d = if any_regular { 3 * k } else { k } as i64;
        WindowSpec::for_degree(d)
    }

    pub fn enlarged(self, extra: usize) -> WindowSpec {
        WindowSpec { max_level: self.max_level + extra, max_degree: self.max_degree + 2 * extra as i64 }
    }

    pub fn max_annihilation(&self) -> i32 {
        self.max_level as i32 + 1
    }

    pub fn keeps(&self, key: &TermKey) -> bool {
        key.annihilations().all(|m| m.index <= self.max_annihilation()) && key.degree() >= -self.max_degree
    }
}

/// A finite normal-ordered polynomial in the modes.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ModeOperator {
    terms: BTreeMap<TermKey, Scalar>,
}

impl ModeOperator {
    pub fn zero() -> Self {
        ModeOperator::default()
    }

    pub fn scalar(c: Scalar) -> Self {
        ModeOperator::term(vec![], 0, c)
    }

    pub fn mode(m: Mode) -> Self {
        ModeOperator::term(vec![m], 0, Scalar::one())
    }

    /// The normal-ordered monomial `c ℏ^hbar :modes:`.
    pub fn term(modes: Vec<Mode>, hbar: i32, c: Scalar) -> Self {
        let mut op = ModeOperator::zero();
        op.add_term(TermKey::new(modes, hbar), c);
        op
    }

    /// Multiplication by `T[v]`.
    pub fn times_var(v: Var) -> Self {
        ModeOperator::term(vec![Mode::new(v.sector as usize, -(v.level as i32))], 0, odd_df(v.level as i64))
    }

    /// The derivative `d/dT[v]`.
    pub fn d_var(v: Var) -> Self {
        let l = v.level as i64;
        ModeOperator::term(vec![Mode::new(v.sector as usize, v.level as i32 + 1)], 0, odd_df(l + 1).recip())
    }

    pub fn add_term(&mut self, key: TermKey, c: Scalar) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(key) {
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

    pub fn terms(&self) -> impl Iterator<Item = (&TermKey, &Scalar)> {
        self.terms.iter()
    }

    pub fn coeff(&self, key: &TermKey) -> Scalar {
        self.terms.get(key).cloned().unwrap_or_else(Scalar::zero)
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut o = self.clone();
        o.add_assign(other);
        o
    }

    pub fn add_assign(&mut self, other: &Self) {
        for (k, c) in &other.terms {
            self.add_term(k.clone(), c.clone());
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(&-Scalar::one()))
    }

    pub fn scale(&self, c: &Scalar) -> Self {
        if c.is_zero() {
            return ModeOperator::zero();
        }
        ModeOperator { terms: self.terms.iter().map(|(k, x)| (k.clone(), x * c)).collect() }
    }

    /// Multiplies every term by `ℏ^s`.
    pub fn shift_hbar(&self, s: i32) -> Self {
        ModeOperator {
            terms: self
                .terms
                .iter()
                .map(|(k, x)| (TermKey { hbar: k.hbar + s, modes: k.modes.clone() }, x.clone()))
                .collect(),
        }
    }

    pub fn retain(&self, w: &WindowSpec) -> Self {
        ModeOperator { terms: self.terms.iter().filter(|(k, _)| w.keeps(k)).map(|(k, c)| (k.clone(), c.clone())).collect() }
    }

    pub fn filter(&self, mut pred: impl FnMut(&TermKey) -> bool) -> Self {
        ModeOperator { terms: self.terms.iter().filter(|(k, _)| pred(k)).map(|(k, c)| (k.clone(), c.clone())).collect() }
    }

    /// The part with the given power of ℏ.
    pub fn hbar_part(&self, h: i32) -> Self {
        self.filter(|k| k.hbar == h)
    }

    pub fn max_degree(&self) -> Option<i64> {
        self.terms.keys().map(|k| k.degree()).max()
    }

    pub fn min_hbar(&self) -> Option<i32> {
        self.terms.keys().map(|k| k.hbar).min()
    }

    /// Normal-ordered form of the composition `self ∘ other`.
    pub fn mul(&self, other: &Self) -> Self {
        let mut out = ModeOperator::zero();
        for (ka, ca) in &self.terms {
            let (cre_a, ann_a): (Vec<Mode>, Vec<Mode>) = ka.modes.iter().partition(|m| m.is_creation());
            for (kb, cb) in &other.terms {
                let (cre_b, ann_b): (Vec<Mode>, Vec<Mode>) = kb.modes.iter().partition(|m| m.is_creation());
                let c = ca * cb;
                let hbar = ka.hbar + kb.hbar;
                wick(&ann_a, &cre_b, &mut |w, left_cre, left_ann| {
                    let mut modes = cre_a.clone();
                    modes.extend(left_cre);
                    modes.extend(left_ann);
                    modes.extend(ann_b.iter().copied());
                    out.add_term(TermKey::new(modes, hbar), &c * w);
                });
            }
        }
        out
    }

    pub fn commutator(&self, other: &Self) -> Self {
        self.mul(other).sub(&other.mul(self))
    }

    /// Acts on an ℏ-series. Annihilations differentiate, creations
    /// multiply, and the ℏ exponent shifts by each term's power.
    pub fn apply(&self, s: &HbarSeries) -> Result<HbarSeries> {
        let k = s.order_k() as i64;
        let min_h = self.min_hbar().unwrap_or(0).min(0) as i64;
        let k_out = k + min_h;
        if k_out < 0 {
            return Err(Error::Precision(format!(
                "operator with ℏ^{min_h} needs more than the {k} known orders"
            )));
        }
        let index = ApplyIndex::new(self);
        let mut out = vec![TPolynomial::zero(); k_out as usize + 1];
        for n in 0..=k {
            let p = s.coeff(n as usize);
            if p.is_zero() {
                continue;
            }
            let lo = -n;
            let hi = k_out - n;
            index.apply_poly(p, |h, mono, c| {
                let h = h as i64;
                if h < lo || h > hi {
                    if h < lo {
                        return Err(Error::Precision(format!("negative ℏ power ℏ^{} produced", n + h)));
                    }
                    return Ok(());
                }
                out[(n + h) as usize].add_term(mono, c);
                Ok(())
            })?;
        }
        Ok(HbarSeries::new(out))
    }

    /// Acts on a polynomial, ignoring ℏ powers.
    pub fn apply_poly(&self, p: &TPolynomial) -> TPolynomial {
        let index = ApplyIndex::new(self);
        let mut out = TPolynomial::zero();
        index
            .apply_poly(p, |_, mono, c| {
                out.add_term(mono, c);
                Ok(())
            })
            .expect("polynomial action cannot fail");
        out
    }

    /// Rewrites in the basis `T[a] = sum_b psi[a][b] Ť[b]`.
    pub fn change_basis(&self, psi: &[Vec<Scalar>], psi_inv: &[Vec<Scalar>]) -> Self {
        let n = psi.len();
        let image = |m: &Mode| -> ModeOperator {
            let mut op = ModeOperator::zero();
            for b in 0..n {
                let c = if m.is_creation() {
                    psi[m.sector as usize][b].clone()
                } else {
                    psi_inv[b][m.sector as usize].clone()
                };
                op.add_term(TermKey::new(vec![Mode::new(b, m.index)], 0), c);
            }
            op
        };
        let mut out = ModeOperator::zero();
        for (k, c) in &self.terms {
            let mut acc = ModeOperator::term(vec![], k.hbar, c.clone());
            for m in &k.modes {
                acc = acc.mul(&image(m));
            }
            out.add_assign(&acc);
        }
        out
    }

    /// One term per line: `coeff * hbar^s * J[a][k] * ...`, creations first.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        for (k, c) in &self.terms {
            s.push_str(&format!("{} * hbar^{}", format_scalar(c), k.hbar));
            for m in &k.modes {
                s.push_str(&format!(" * J[{}][{}]", m.sector + 1, m.index));
            }
            s.push('\n');
        }
        s
    }
}

impl fmt::Display for ModeOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.dump())
    }
}

/// Enumerates Wick contractions of `ann · cre` (annihilations on the left).
/// Calls `emit(weight, uncontracted creations, uncontracted annihilations)`.
fn wick(ann: &[Mode], cre: &[Mode], emit: &mut dyn FnMut(Scalar, Vec<Mode>, Vec<Mode>)) {
    fn rec(
        ann: &[Mode],
        cre: &[Mode],
        i: usize,
        used: &mut Vec<bool>,
        w: Scalar,
        kept: &mut Vec<Mode>,
        emit: &mut dyn FnMut(Scalar, Vec<Mode>, Vec<Mode>),
    ) {
        if i == ann.len() {
            let left: Vec<Mode> = cre.iter().zip(used.iter()).filter(|(_, u)| !**u).map(|(m, _)| *m).collect();
            emit(w, left, kept.clone());
            return;
        }
        kept.push(ann[i]);
        rec(ann, cre, i + 1, used, w.clone(), kept, emit);
        kept.pop();
        for j in 0..cre.len() {
            if used[j] {
                continue;
            }
            let b = ann[i].bracket(cre[j]);
            if b.is_zero() {
                continue;
            }
            used[j] = true;
            rec(ann, cre, i + 1, used, &w * b, kept, emit);
            used[j] = false;
        }
    }
    let mut used = vec![false; cre.len()];
    rec(ann, cre, 0, &mut used, Scalar::one(), &mut Vec::new(), emit);
}

struct IndexedTerm {
    hbar: i32,
    creations: Vec<(Var, u32)>,
    coeff: Scalar,
}

/// Terms grouped by the multiset of variables they differentiate.
struct ApplyIndex {
    by_ann: HashMap<Vec<(Var, u32)>, Vec<IndexedTerm>>,
    max_ann: u32,
}

fn collect_vars(modes: &[Mode]) -> Vec<(Var, u32)> {
    let mut out: Vec<(Var, u32)> = Vec::new();
    for m in modes {
        let v = m.var();
        match out.iter_mut().find(|(w, _)| *w == v) {
            Some(p) => p.1 += 1,
            None => out.push((v, 1)),
        }
    }
    out.sort();
    out
}

impl ApplyIndex {
    fn new(op: &ModeOperator) -> Self {
        let mut by_ann: HashMap<Vec<(Var, u32)>, Vec<IndexedTerm>> = HashMap::new();
        let mut max_ann = 0;
        for (k, c) in &op.terms {
            let cre: Vec<Mode> = k.creations().copied().collect();
            let ann: Vec<Mode> = k.annihilations().copied().collect();
            let mut coeff = c.clone();
            for m in &ann {
                coeff *= Scalar::from_integer(double_factorial(2 * m.index as i64 - 1));
            }
            for m in &cre {
                coeff /= Scalar::from_integer(double_factorial(-2 * m.index as i64 - 1));
            }
            max_ann = max_ann.max(ann.len() as u32);
            by_ann.entry(collect_vars(&ann)).or_default().push(IndexedTerm {
                hbar: k.hbar,
                creations: collect_vars(&cre),
                coeff,
            });
        }
        ApplyIndex { by_ann, max_ann }
    }

    fn apply_poly(
        &self,
        p: &TPolynomial,
        mut emit: impl FnMut(i32, Monomial, Scalar) -> Result<()>,
    ) -> Result<()> {
        for (mono, c) in p.terms() {
            let factors = mono.factors();
            let mut chosen: Vec<(Var, u32)> = Vec::new();
            let mut err = None;
            submultisets(factors, 0, self.max_ann, &mut chosen, &mut |sub| {
                if err.is_some() {
                    return;
                }
                let Some(list) = self.by_ann.get(sub) else { return };
                let mut base = mono.clone();
                let mut ff: u64 = 1;
                for &(v, e) in sub {
                    ff *= base.differentiate(v, e).expect("sub-multiset of the monomial");
                }
                let cf = c * int(ff as i64);
                for t in list {
                    let mut m = base.clone();
                    for &(v, e) in &t.creations {
                        m.multiply_var(v, e);
                    }
                    if let Err(e) = emit(t.hbar, m, &cf * &t.coeff) {
                        err = Some(e);
                        return;
                    }
                }
            });
            if let Some(e) = err {
                return Err(e);
            }
        }
        Ok(())
    }
}

fn submultisets(
    factors: &[(Var, u32)],
    i: usize,
    budget: u32,
    chosen: &mut Vec<(Var, u32)>,
    f: &mut dyn FnMut(&[(Var, u32)]),
) {
    if i == factors.len() {
        f(chosen);
        return;
    }
    let (v, e) = factors[i];
    submultisets(factors, i + 1, budget, chosen, f);
    for take in 1..=e.min(budget) {
        chosen.push((v, take));
        submultisets(factors, i + 1, budget - take, chosen, f);
        chosen.pop();
    }
}

/// `exp(g)` applied to `s` as the terminating sum `sum g^n s / n!`.
/// Every term of `g` must lower the degree and carry no ℏ.
pub fn apply_exponential(g: &ModeOperator, s: &HbarSeries) -> Result<HbarSeries> {
    check_generator(g)?;
    let mut out = s.clone();
    let mut cur = s.clone();
    let mut n: u64 = 1;
    loop {
        cur = g.apply(&cur)?.scale(&int(n as i64).recip());
        if cur.coeffs().iter().all(|p| p.is_zero()) {
            break;
        }
        out = out.add(&cur);
        n += 1;
    }
    Ok(out)
}

fn check_generator(g: &ModeOperator) -> Result<()> {
    for (k, _) in g.terms() {
        if k.degree() >= 0 {
            return Err(Error::InvalidInput(format!("generator term of degree {} is not degree-lowering", k.degree())));
        }
        if k.hbar != 0 {
            return Err(Error::InvalidInput("generator term carries a power of ℏ".into()));
        }
    }
    Ok(())
}

/// `exp(g) x exp(-g)` within `window`, for `g` of arity at most two.
///
/// Each mode is conjugated separately (the result is a linear form, since
/// `g` is at most quadratic) and each monomial of `x` is rebuilt as a
/// normal-ordered product of the images.
pub fn conjugate_by_exponential(x: &ModeOperator, g: &ModeOperator, window: &WindowSpec) -> Result<ModeOperator> {
    Ok(conjugate_each(&[x], g, window)?.pop().expect("one operator in, one out"))
}

/// Largest annihilation index of `g` that can reach the operators `xs`:
/// conjugation raises indices, so a mode of `g` above this never meets a
/// creation of `xs` or of their images.
pub fn conjugation_cutoff(xs: &[&ModeOperator], window: &WindowSpec) -> i32 {
    let min_creation =
        xs.iter().flat_map(|x| x.terms().flat_map(|(k, _)| k.creations().map(|m| m.index))).min().unwrap_or(0);
    window.max_annihilation().max(1 - min_creation)
}

/// [`conjugate_by_exponential`] for several operators sharing one table
/// of mode images.
pub fn conjugate_each(xs: &[&ModeOperator], g: &ModeOperator, window: &WindowSpec) -> Result<Vec<ModeOperator>> {
    check_generator(g)?;
    if let Some((k, _)) = g.terms().find(|(k, _)| k.arity() > 2) {
        return Err(Error::InvalidInput(format!("generator term of arity {} is not supported", k.arity())));
    }
    if g.is_zero() {
        return Ok(xs.iter().map(|x| x.retain(window)).collect());
    }
    let cutoff = conjugation_cutoff(xs, window);
    let mut conj = ModeConjugator::new(g, cutoff);
    let mut outs = Vec::with_capacity(xs.len());
    for x in xs {
        let mut out = ModeOperator::zero();
        for (k, c) in x.terms() {
            let images: Vec<ModeOperator> = k.modes.iter().map(|m| conj.image(*m)).collect();
            let mut tail_deg: Vec<i64> = vec![0; images.len() + 1];
            for i in (0..images.len()).rev() {
                tail_deg[i] = tail_deg[i + 1] + k.modes[i].degree();
            }
            let mut acc = ModeOperator::term(vec![], k.hbar, c.clone());
            for (i, img) in images.iter().enumerate() {
                acc = acc.mul(img);
                let rest = tail_deg[i + 1];
                acc = acc.filter(|t| t.degree() + rest >= -window.max_degree);
            }
            out.add_assign(&acc.retain(window));
        }
        outs.push(out);
    }
    Ok(outs)
}

/// Memoized images `exp(g) J exp(-g)` of single modes.
pub struct ModeConjugator<'a> {
    g: &'a ModeOperator,
    cutoff: i32,
    memo: HashMap<Mode, ModeOperator>,
}

impl<'a> ModeConjugator<'a> {
    /// Images keep annihilations up to index `cutoff`.
    pub fn new(g: &'a ModeOperator, cutoff: i32) -> Self {
        ModeConjugator { g, cutoff, memo: HashMap::new() }
    }

    pub fn image(&mut self, m: Mode) -> ModeOperator {
        if let Some(op) = self.memo.get(&m) {
            return op.clone();
        }
        let cutoff = self.cutoff;
        let keep = |t: &TermKey| t.annihilations().all(|a| a.index <= cutoff);
        let mut out = ModeOperator::mode(m);
        let mut cur = out.clone();
        let mut n = 1i64;
        loop {
            cur = self.g.commutator(&cur).filter(keep).scale(&int(n).recip());
            if cur.is_zero() {
                break;
            }
            out.add_assign(&cur);
            n += 1;
        }
        self.memo.insert(m, out.clone());
        out
    }
}

/// `n!` as a scalar.
pub fn factorial_scalar(n: u64) -> Scalar {
    Scalar::from_integer(factorial(n))
}
