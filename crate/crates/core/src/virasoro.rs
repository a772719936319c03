//! Virasoro constraints for the ancestor potential and the solver that
//! reconstructs `Z` from them.
//!
//! Sector `a` contributes `L^a_m`, `m >= -α_a`: the constrained operator of
//! `τ_{α_a}` with its `ℏ^-1` part divided by `√Δ_a`, shifted by the
//! translation, and conjugated by `R̂`. The `ℏ^-1` parts are linear in
//! annihilations and triangular in the level, which lets them be solved
//! for `∂Z/∂T^a_ℓ`.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::generators::{make_constrained_virasoro, make_virasoro};
use crate::giventaldata::{r_hat, GiventalData, Margins};
use crate::modeops::{conjugate_by_exponential, conjugate_each, conjugation_cutoff, Mode, ModeOperator, TermKey, WindowSpec};
use crate::scalarseries::{format_scalar, frac, int, odd_df, Scalar};
use crate::tpoly::{HbarSeries, Monomial, TPolynomial, Var};
use crate::virgroup::{chi_needed, combined_generator, vir_elements};

/// The operators `L^a_m` keyed by `(a, m)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VirasoroFamily {
    pub members: BTreeMap<(usize, i32), ModeOperator>,
    pub window: WindowSpec,
}

fn family_for(d: &GiventalData, keys: &[(usize, i32)], window: &WindowSpec) -> Result<VirasoroFamily> {
    d.validate()?;
    // the ℏ^-1 parts act one order up, beyond the degree bound of the window
    let window = &WindowSpec { max_level: window.max_level, max_degree: i64::MAX / 4 };
    let mut ops = Vec::with_capacity(keys.len());
    for &(a, m) in keys {
        let s = &d.sectors[a];
        let base = make_constrained_virasoro(a, s.alpha, m, window)?;
        let mut op = base.hbar_part(0).add(&base.hbar_part(-1).scale(&s.sqrt_delta.recip()));
        for (&l, c) in &s.delta_t {
            let idx = m + l as i32 + 1;
            if idx < 1 {
                return Err(Error::InvalidInput(format!("translation at level {l} meets L_{m} in a creation")));
            }
            op.add_term(TermKey::new(vec![Mode::new(a, idx)], -1), frac(1, 2) * c / odd_df(l as i64));
        }
        ops.push(op.retain(window));
    }
    if d.has_r() {
        let refs: Vec<&ModeOperator> = ops.iter().collect();
        let g = r_hat(d, conjugation_cutoff(&refs, window));
        ops = conjugate_each(&refs, &g, window)?;
    }
    Ok(VirasoroFamily { members: keys.iter().copied().zip(ops).collect(), window: *window })
}

/// `L^a_m` for every sector and `-α_a <= m <= m_max`.
pub fn build_l_family(d: &GiventalData, m_max: i32, window: &WindowSpec) -> Result<VirasoroFamily> {
    let mut keys = Vec::new();
    for (a, s) in d.sectors.iter().enumerate() {
        for m in -(s.alpha as i32)..=m_max {
            keys.push((a, m));
        }
    }
    family_for(d, &keys, window)
}

/// First nonzero coefficient of `L^a_m Z`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstraintViolation {
    pub sector: usize,
    pub m: i32,
    pub order: usize,
    pub monomial: Monomial,
    pub coeff: Scalar,
}

impl fmt::Display for ConstraintViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "L[{}]_{} Z has ℏ^{} coefficient {} at {}",
            self.sector + 1,
            self.m,
            self.order,
            format_scalar(&self.coeff),
            self.monomial
        )
    }
}

/// Checks `L Z = 0` through `ℏ^k` for every member; `z` must be known
/// through `ℏ^(k+1)` because of the `ℏ^-1` parts.
pub fn check_constraints(fam: &VirasoroFamily, z: &HbarSeries, k: usize) -> Result<Option<ConstraintViolation>> {
    if z.order_k() < k + 1 {
        return Err(Error::Precision(format!("constraints through ℏ^{k} need Z through ℏ^{}", k + 1)));
    }
    for (&(sector, m), op) in &fam.members {
        let out = op.apply(z)?;
        for order in 0..=k {
            if let Some((mono, c)) = out.coeff(order).terms().next() {
                return Ok(Some(ConstraintViolation { sector, m, order, monomial: mono.clone(), coeff: c.clone() }));
            }
        }
    }
    Ok(None)
}

/// Triangular recombination of the family.
///
/// `k_hat[v]` has the single `ℏ^-1` term `u_diag[v] J_{ℓ+1}` for
/// `v = T^a_ℓ`; `k_tilde[v]` is the ℏ-free operator with
/// `∂Z/∂v = ℏ k_tilde[v] Z`; `q[v]` records the multiples of higher
/// `k_hat` subtracted from `L^a_{ℓ-α_a}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KFamily {
    pub k_hat: BTreeMap<Var, ModeOperator>,
    pub k_tilde: BTreeMap<Var, ModeOperator>,
    pub u_diag: BTreeMap<Var, Scalar>,
    pub q: BTreeMap<Var, BTreeMap<Var, Scalar>>,
    pub window: WindowSpec,
}

pub fn build_k_family(d: &GiventalData, window: &WindowSpec) -> Result<KFamily> {
    let top = window.max_level;
    let mut keys = Vec::new();
    for (a, s) in d.sectors.iter().enumerate() {
        for l in 0..=top {
            keys.push((a, l as i32 - s.alpha as i32));
        }
    }
    let fam = family_for(d, &keys, window)?;
    let mut kf = KFamily {
        k_hat: BTreeMap::new(),
        k_tilde: BTreeMap::new(),
        u_diag: BTreeMap::new(),
        q: BTreeMap::new(),
        window: *window,
    };
    for l in (0..=top).rev() {
        for (a, s) in d.sectors.iter().enumerate() {
            let v = Var::new(a, l);
            let lop = &fam.members[&(a, l as i32 - s.alpha as i32)];
            let mut k = lop.clone();
            let mut row = BTreeMap::new();
            let mut diag = Scalar::zero();
            for (key, c) in lop.hbar_part(-1).terms() {
                let [m] = key.modes.as_slice() else {
                    return Err(Error::Mismatch(format!("ℏ^-1 part of L[{}]_{} is not linear", a + 1, l)));
                };
                if m.is_creation() {
                    return Err(Error::Mismatch(format!("ℏ^-1 part of L[{}]_{} contains a creation", a + 1, l)));
                }
                let w = m.var();
                if w == v {
                    diag = c.clone();
                } else if w.level as usize > l {
                    let coef = c / &kf.u_diag[&w];
                    k = k.sub(&kf.k_hat[&w].scale(&coef));
                    row.insert(w, coef);
                } else {
                    return Err(Error::Mismatch(format!("ℏ^-1 part of L at T[{}][{l}] reaches level {}", a + 1, w.level)));
                }
            }
            if diag.is_zero() {
                return Err(Error::Mismatch(format!("no ℏ^-1 pivot at T[{}][{l}]", a + 1)));
            }
            let rest = k.sub(&k.hbar_part(-1));
            if rest.terms().any(|(key, _)| key.hbar != 0) {
                return Err(Error::Mismatch(format!("unexpected ℏ power in K at T[{}][{l}]", a + 1)));
            }
            let kt = rest.scale(&-(&diag * odd_df(l as i64 + 1)).recip());
            kf.k_hat.insert(v, k);
            kf.k_tilde.insert(v, kt);
            kf.u_diag.insert(v, diag);
            kf.q.insert(v, row);
        }
    }
    Ok(kf)
}

/// `Ô = Σ (2ℓ+1) T^a_ℓ K̃_{ℓ;a}`, so that `E Z = ℏ Ô Z` for the Euler
/// operator `E`.
pub fn build_o(kf: &KFamily) -> ModeOperator {
    let mut op = ModeOperator::zero();
    for (&v, kt) in &kf.k_tilde {
        op.add_assign(&ModeOperator::times_var(v).mul(kt).scale(&int(2 * v.level as i64 + 1)));
    }
    op
}

/// `Ĥ` with `ℏ ∂Z/∂ℏ = Ĥ Z`: the per-sector Euler operators weighted by
/// `1/(2α_a+1)` and conjugated by `V̂` and `R̂`.
pub fn build_h(d: &GiventalData, window: &WindowSpec) -> Result<ModeOperator> {
    let mut e = ModeOperator::zero();
    for (a, s) in d.sectors.iter().enumerate() {
        e.add_assign(&make_virasoro(a, 0, window).scale(&frac(1, 2 * s.alpha as i64 + 1)));
    }
    let cutoff = conjugation_cutoff(&[&e], window);
    let elems = vir_elements(d, chi_needed(cutoff))?;
    let mut h = conjugate_by_exponential(&e, &combined_generator(&elems, cutoff)?, window)?;
    if d.has_r() {
        let cutoff = conjugation_cutoff(&[&h], window);
        h = conjugate_by_exponential(&h, &r_hat(d, cutoff), window)?;
    }
    Ok(h)
}

fn check_hbar_free(op: &ModeOperator, name: &str) -> Result<()> {
    match op.terms().find(|(k, _)| k.hbar != 0) {
        Some((k, _)) => Err(Error::Mismatch(format!("{name} carries ℏ^{}", k.hbar))),
        None => Ok(()),
    }
}

/// Solver C: `Z` from `d Z^(m)_d = [Ô Z^(m-1)]_d` for `d >= 1` and
/// `(m - c) Z^(m)_0 = [Ĥ' Z^(m)]_0`, where `c` is the constant of `Ĥ`.
pub fn solve_from_constraints(d: &GiventalData) -> Result<HbarSeries> {
    solve_from_constraints_with(d, Margins::default())
}

pub fn solve_from_constraints_with(d: &GiventalData, margins: Margins) -> Result<HbarSeries> {
    let window = d.window(margins);
    let kf = build_k_family(d, &window)?;
    let o = build_o(&kf);
    let h = build_h(d, &window)?;
    check_hbar_free(&o, "Ô")?;
    check_hbar_free(&h, "Ĥ")?;
    let unit = TermKey::new(vec![], 0);
    let c_h = h.coeff(&unit);
    let h_rest = h.filter(|k| !k.modes.is_empty());
    let mut coeffs = vec![TPolynomial::one()];
    for m in 1..=d.order_k {
        let y = o.apply_poly(&coeffs[m - 1]);
        let mut z = TPolynomial::zero();
        for (deg, part) in y.graded_parts() {
            if deg == 0 {
                return Err(Error::Mismatch(format!("Ô Z^({}) has a constant term", m - 1)));
            }
            z.add_assign(&part.scale(&frac(1, deg)));
        }
        let gap = int(m as i64) - &c_h;
        if gap.is_zero() {
            return Err(Error::Mismatch(format!("dimension constraint is degenerate at ℏ^{m}")));
        }
        let c0 = h_rest.apply_poly(&z).constant_term() / gap;
        z.add_term(Monomial::one(), c0);
        coeffs.push(z);
    }
    Ok(HbarSeries::new(coeffs))
}
