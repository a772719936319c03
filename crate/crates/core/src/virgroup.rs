//! Virasoro group elements attached to translations: the series `v`, `f`
//! and `h`, the coefficients `χ_k`, and the action of `V̂ = exp(Σ χ_k L_k)`.

use std::collections::BTreeMap;

use num_traits::Zero;

use crate::cutjoin::tau_alpha_sector;
use crate::error::{Error, Result};
use crate::generators::make_virasoro;
use crate::giventaldata::{inner_order, translate, GiventalData, Margins};
use crate::modeops::{apply_exponential, ModeOperator, WindowSpec};
use crate::scalarseries::{binomial_power, frac, int, odd_df, series_reverse, LaurentSeries, Parity, Scalar};
use crate::tpoly::{HbarSeries, Monomial};

/// `v^a(z) = √Δ_a Σ_k ΔT_k^a z^(2k+1) / (2k+1)!!`, known to `O(z^order)`.
pub fn v_from_translation(d: &GiventalData, a: usize, order: i64) -> LaurentSeries {
    let s = &d.sectors[a];
    let terms: Vec<(i64, Scalar)> = s
        .delta_t
        .iter()
        .map(|(&k, c)| (2 * k as i64 + 1, &s.sqrt_delta * c / odd_df(k as i64 + 1)))
        .collect();
    LaurentSeries::from_terms(&terms, order)
}

/// `f(z) = z (1 - (2α+1) v(z) / z^(2α+1))^(1/(2α+1))`.
pub fn f_from_v(alpha: u8, v: &LaurentSeries) -> Result<LaurentSeries> {
    let p = 2 * alpha as i64 + 1;
    let v = v.clone().with_parity(Parity::Odd)?;
    if let Some(e) = v.valuation() {
        if e < 2 + p {
            return Err(Error::InvalidInput(format!("v starts at z^{e}, below z^{}", 2 + p)));
        }
    }
    let u = v.shift(-p).scale(&int(-p));
    Ok(binomial_power(&u, p)?.shift(1).with_parity(Parity::Odd)?)
}

/// The inverse relation `v = (z^(2α+1) - f^(2α+1)) / (2α+1)`.
pub fn v_from_f(alpha: u8, f: &LaurentSeries) -> Result<LaurentSeries> {
    let p = 2 * alpha as i64 + 1;
    let fp = f.pow(p)?;
    let zp = LaurentSeries::monomial(int(1), p, fp.order());
    Ok(zp.sub(&fp).scale(&frac(1, p)))
}

/// `Σ_k χ_k l_k` applied to `g`, with `l_k = -z^(2k+1) d/dz`.
fn vector_field(chi: &BTreeMap<usize, Scalar>, g: &LaurentSeries, order: i64) -> LaurentSeries {
    let dg = g.derivative();
    let mut out = LaurentSeries::zero(order);
    for (&k, c) in chi {
        if c.is_zero() {
            continue;
        }
        out = out.add(&dg.shift(2 * k as i64 + 1).scale(&-c).truncate(order));
    }
    out.truncate(order)
}

/// `f = exp(Σ χ_k l_k) z` to `O(z^order)`.
pub fn f_from_chi(chi: &BTreeMap<usize, Scalar>, order: i64) -> LaurentSeries {
    let mut out = LaurentSeries::z(order);
    let mut cur = out.clone();
    let mut n = 1i64;
    loop {
        cur = vector_field(chi, &cur, order).scale(&frac(1, n));
        if cur.valuation().is_none() {
            break;
        }
        out = out.add(&cur);
        n += 1;
    }
    out
}

/// The `χ_k`, `k <= k_max`, with `exp(Σ χ_k l_k) z = f`, solved lowest
/// `k` first: only `χ_k` enters the `z^(2k+1)` coefficient linearly, with
/// weight `-1`.
pub fn chi_from_f(f: &LaurentSeries, k_max: usize) -> Result<BTreeMap<usize, Scalar>> {
    let f = f.clone().with_parity(Parity::Odd)?;
    if f.coeff(1)? != int(1) || f.valuation() != Some(1) {
        return Err(Error::InvalidInput("f must start with z".into()));
    }
    if f.order() < 2 * k_max as i64 + 2 {
        return Err(Error::Precision(format!("f known to O(z^{}) cannot fix χ_{k_max}", f.order())));
    }
    let order = 2 * k_max as i64 + 2;
    let mut chi = BTreeMap::new();
    for k in 1..=k_max {
        let e = 2 * k as i64 + 1;
        let cur = f_from_chi(&chi, order);
        let c = cur.coeff(e)? - f.coeff(e)?;
        if !c.is_zero() {
            chi.insert(k, c);
        }
    }
    Ok(chi)
}

/// `V̂^a = exp(Σ_k χ_k L^a_k)` together with its series `f` and `h`.
#[derive(Debug, Clone, PartialEq)]
pub struct VirGroupElement {
    pub sector: usize,
    /// Every `χ_k` with `k <= k_max` is known (absent entries are zero).
    pub k_max: usize,
    pub chi: BTreeMap<usize, Scalar>,
    pub f: LaurentSeries,
    pub h: LaurentSeries,
}

impl VirGroupElement {
    /// The element attached to the `√Δ`-scaled translation of sector `a`.
    pub fn from_data(d: &GiventalData, a: usize, k_max: usize) -> Result<VirGroupElement> {
        let alpha = d.sectors[a].alpha;
        let order = 2 * k_max as i64 + 3;
        let v = v_from_translation(d, a, order + 2 * alpha as i64);
        let f = f_from_v(alpha, &v)?;
        let chi = chi_from_f(&f, k_max)?;
        let h = series_reverse(&f)?;
        Ok(VirGroupElement { sector: a, k_max, chi, f, h })
    }

    pub fn from_chi(sector: usize, chi: BTreeMap<usize, Scalar>, k_max: usize) -> Result<VirGroupElement> {
        if chi.keys().any(|&k| k == 0) {
            return Err(Error::InvalidInput("χ must be supported on k >= 1".into()));
        }
        let f = f_from_chi(&chi, 2 * k_max as i64 + 3);
        let h = series_reverse(&f)?;
        Ok(VirGroupElement { sector, k_max, chi, f, h })
    }

    pub fn is_identity(&self) -> bool {
        self.chi.values().all(|c| c.is_zero())
    }

    pub fn inverse(&self) -> VirGroupElement {
        VirGroupElement {
            sector: self.sector,
            k_max: self.k_max,
            chi: self.chi.iter().map(|(&k, c)| (k, -c)).collect(),
            f: self.h.clone(),
            h: self.f.clone(),
        }
    }

    /// `Σ χ_k L_k` with annihilations up to index `max_annihilation`.
    pub fn generator(&self, max_annihilation: i32) -> Result<ModeOperator> {
        let top = chi_needed(max_annihilation);
        if top > self.k_max {
            return Err(Error::Precision(format!("χ known to k = {}, generator needs k = {top}", self.k_max)));
        }
        let mut g = ModeOperator::zero();
        if max_annihilation < 1 {
            return Ok(g);
        }
        let w = WindowSpec { max_level: max_annihilation as usize - 1, max_degree: i64::MAX / 4 };
        for (&k, c) in self.chi.range(1..=top) {
            g.add_assign(&make_virasoro(self.sector, k as i32, &w).scale(c));
        }
        Ok(g)
    }
}

/// Largest `k` for which `L_k` still has a term with every annihilation at
/// most `max_annihilation`: the pair `J_M J_M` sits in `L_(2M-1)`.
pub fn chi_needed(max_annihilation: i32) -> usize {
    (2 * max_annihilation - 1).max(1) as usize
}

/// One element per sector, each knowing `χ_k` for `k <= k_max`.
pub fn vir_elements(d: &GiventalData, k_max: usize) -> Result<Vec<VirGroupElement>> {
    (0..d.n()).map(|a| VirGroupElement::from_data(d, a, k_max)).collect()
}

/// Sum of the generators; the sectors commute, so order is immaterial.
pub fn combined_generator(elems: &[VirGroupElement], max_annihilation: i32) -> Result<ModeOperator> {
    let mut g = ModeOperator::zero();
    for e in elems {
        g.add_assign(&e.generator(max_annihilation)?);
    }
    Ok(g)
}

/// `V̂ s` as a terminating exponential.
pub fn apply_v(elems: &[VirGroupElement], s: &HbarSeries) -> Result<HbarSeries> {
    let top = s.max_level().map_or(1, |l| l as i32 + 1);
    apply_exponential(&combined_generator(elems, top)?, s)
}

/// Outcome of comparing the translation and Virasoro-group paths.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VirtosReport {
    pub sector: usize,
    pub order_k: usize,
    pub first_difference: Option<(usize, Monomial, Scalar, Scalar)>,
}

impl VirtosReport {
    pub fn ok(&self) -> bool {
        self.first_difference.is_none()
    }

    pub fn render(&self) -> String {
        match &self.first_difference {
            None => format!("sector {}: translation and group action agree through hbar^{}", self.sector + 1, self.order_k),
            Some((m, mono, a, b)) => format!(
                "sector {}: differ at hbar^{m} {mono}: translation {a}, group {b}",
                self.sector + 1
            ),
        }
    }
}

/// Computes `exp(ℏ^-1 Σ √Δ ΔT_k ∂/∂T_k) τ_α` and `V̂ τ_α` for sector `a`
/// independently and compares them through `ℏ^k`.
pub fn check_virtos(d: &GiventalData, a: usize, k: usize, margins: Margins) -> Result<VirtosReport> {
    d.validate()?;
    let s = &d.sectors[a];
    let kin = inner_order(d, a, k)? + margins.extra_inner;
    let tau = tau_alpha_sector(a, s.alpha, kin, margins.extra_window);
    let mut slopes = vec![1; d.n()];
    slopes[a] = s.slope();
    let translated = translate(&tau, &d.sector_shifts(a, true), &slopes, k)?;
    let base = tau.truncate(k);
    let top = base.max_level().unwrap_or(0) + margins.extra_window;
    let elem = VirGroupElement::from_data(d, a, chi_needed(top as i32 + 1))?;
    let grouped = apply_v(&[elem], &base)?;
    Ok(VirtosReport { sector: a, order_k: k, first_difference: translated.first_difference(&grouped) })
}
