//! The cut-and-join operator `Ŵ = R̂ V̂ Ŵ_Δ V̂^-1 R̂^-1`: residue
//! coefficients of `Ŵ_V`, its cubic normal form, conjugation by `R̂`, the
//! recursion `Z^(m) = Ŵ Z^(m-1) / m`, and shifts by operators that
//! annihilate `Z`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::generators::{make_virasoro, make_w_alpha, make_w_delta};
use crate::giventaldata::{r_hat, GiventalData, Margins};
use crate::modeops::{conjugate_by_exponential, conjugation_cutoff, Mode, ModeOperator, TermKey, WindowSpec};
use crate::scalarseries::{format_scalar, frac, int, series_reverse, LaurentSeries, Scalar};
use crate::tpoly::{HbarSeries, TPolynomial, Var};
use crate::virasoro::KFamily;
use crate::virgroup::{chi_needed, combined_generator, f_from_v, v_from_translation, vir_elements};

/// A cubic plus linear operator in normal order, free of `T` and `ℏ`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CutJoinOperator {
    /// Keys are mode triples sorted by index (then sector).
    pub cubic: BTreeMap<[Mode; 3], Scalar>,
    pub linear: BTreeMap<Mode, Scalar>,
    pub window: WindowSpec,
}

impl CutJoinOperator {
    pub fn from_mode_operator(op: &ModeOperator, window: WindowSpec) -> Result<CutJoinOperator> {
        let mut cubic = BTreeMap::new();
        let mut linear = BTreeMap::new();
        for (k, c) in op.terms() {
            if k.hbar != 0 {
                return Err(Error::Mismatch(format!("cut-and-join term carries ℏ^{}", k.hbar)));
            }
            match k.modes.as_slice() {
                [m] => {
                    linear.insert(*m, c.clone());
                }
                [x, y, z] => {
                    cubic.insert([*x, *y, *z], c.clone());
                }
                _ => return Err(Error::Mismatch(format!("cut-and-join term of arity {}", k.arity()))),
            }
        }
        Ok(CutJoinOperator { cubic, linear, window })
    }

    pub fn to_mode_operator(&self) -> ModeOperator {
        let mut op = ModeOperator::zero();
        for (m, c) in &self.cubic {
            op.add_term(TermKey::new(m.to_vec(), 0), c.clone());
        }
        for (m, c) in &self.linear {
            op.add_term(TermKey::new(vec![*m], 0), c.clone());
        }
        op
    }

    /// `A a b c i j k p/q` and `B a j p/q` lines, sectors counted from 1.
    pub fn export(&self) -> String {
        let mut out = String::new();
        for (m, c) in &self.cubic {
            let _ = writeln!(
                out,
                "A {} {} {} {} {} {} {}",
                m[0].sector + 1,
                m[1].sector + 1,
                m[2].sector + 1,
                m[0].index,
                m[1].index,
                m[2].index,
                format_scalar(c)
            );
        }
        for (m, c) in &self.linear {
            let _ = writeln!(out, "B {} {} {}", m.sector + 1, m.index, format_scalar(c));
        }
        out
    }

    pub fn len(&self) -> usize {
        self.cubic.len() + self.linear.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// `Z^(0) = 1`, `Z^(m) = w Z^(m-1) / m` for an ℏ-free operator.
pub fn run_recursion_op(w: &ModeOperator, k: usize) -> HbarSeries {
    let mut coeffs = vec![TPolynomial::one()];
    for m in 1..=k {
        let next = w.apply_poly(&coeffs[m - 1]).scale(&frac(1, m as i64));
        coeffs.push(next);
    }
    HbarSeries::new(coeffs)
}

pub fn run_recursion(w: &CutJoinOperator, k: usize) -> HbarSeries {
    run_recursion_op(&w.to_mode_operator(), k)
}

/// `τ_α` through `ℏ^k` in the variables of `sector`.
pub fn tau_alpha_sector(sector: usize, alpha: u8, k: usize, extra_window: usize) -> HbarSeries {
    let w = WindowSpec::for_degree((2 * alpha as i64 + 1) * k as i64).enlarged(extra_window);
    run_recursion_op(&make_w_alpha(sector, alpha, &w), k)
}

/// `τ_α = exp(ℏ Ŵ_α) 1` through `ℏ^k`.
pub fn tau_alpha(alpha: u8, k: usize) -> HbarSeries {
    tau_alpha_sector(0, alpha, k, 0)
}

/// Coefficients of `Ŵ_V^a = Σ A^{i,j} J_i L_j + Σ B^j J_j`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct VCoefficients {
    pub a: BTreeMap<(i32, i32), Scalar>,
    pub b: BTreeMap<i32, Scalar>,
}

/// `[z^t] (x y)`, failing when either factor is not known far enough.
fn product_coeff(x: &LaurentSeries, y: &LaurentSeries, t: i64) -> Result<Scalar> {
    let (Some(vx), Some(vy)) = (x.valuation(), y.valuation()) else {
        return Ok(Scalar::zero());
    };
    let mut acc = Scalar::zero();
    for e in vx..=(t - vy) {
        let cx = x.coeff(e)?;
        if cx.is_zero() {
            continue;
        }
        acc += cx * y.coeff(t - e)?;
    }
    Ok(acc)
}

/// Residue coefficients of sector `a`:
///
/// `A^{i,j} = √Δ/(2α+1) Res z^(1-2α) (h'/h^(2i))_+ h'^2/h^(2j+2)`,
/// `B^j = 1/(2α+1) Res (Δ ΔT_2 δ_{α,1}/30 + √Δ/(8 z^(2α))) h'/(z h^(2j))`,
///
/// for the `(i, j)` whose terms survive in `window`.
pub fn coefficients_av_bv(d: &GiventalData, a: usize, window: &WindowSpec) -> Result<VCoefficients> {
    let s = &d.sectors[a];
    let alpha = s.alpha as i64;
    let top = window.max_level as i64;
    // J_i L_{-α} contracts to J_{i-α}, so i runs α past the window
    let (j_max, i_max) = (2 * top + 1, top + 1 + alpha);
    let i_min = -j_max - alpha;
    let order = 2 * (j_max + i_max) + 2 * alpha + 5;
    let f = f_from_v(s.alpha, &v_from_translation(d, a, order + 2 * alpha))?;
    let h = series_reverse(&f)?;
    let hp = h.derivative();
    let hp2 = hp.mul(&hp);
    let pw = |n: i64| -> Result<LaurentSeries> { h.pow(n) };
    let mut g = BTreeMap::new();
    for i in i_min..=i_max {
        g.insert(i, hp.mul(&pw(-2 * i)?));
    }
    let norm = frac(1, 2 * alpha + 1);
    let mut out = VCoefficients::default();
    for j in -alpha..=j_max {
        let y = hp2.mul(&pw(-2 * j - 2)?);
        for i in (-j - alpha)..=i_max {
            // degree of J_i L_j is 1 - 2i - 2j
            if 1 - 2 * (i + j) < -window.max_degree {
                continue;
            }
            let x = g[&i].positive_part();
            let c = product_coeff(&x, &y, 2 * alpha - 2)? * &s.sqrt_delta * &norm;
            if !c.is_zero() {
                out.a.insert((i as i32, j as i32), c);
            }
        }
    }
    let c0 = if alpha == 1 {
        &s.sqrt_delta * &s.sqrt_delta * s.delta_t.get(&2).cloned().unwrap_or_else(Scalar::zero) * frac(1, 30)
    } else {
        Scalar::zero()
    };
    for j in -alpha..=(top + 1) {
        let gj = hp.mul(&pw(-2 * j)?);
        let c = (&c0 * gj.coeff(0)? + &s.sqrt_delta * frac(1, 8) * gj.coeff(2 * alpha)?) * &norm;
        if !c.is_zero() {
            out.b.insert(j as i32, c);
        }
    }
    Ok(out)
}

/// `Ŵ_V` assembled from the residue coefficients and normal-ordered.
pub fn assemble_w_v(d: &GiventalData, window: &WindowSpec) -> Result<ModeOperator> {
    let inner = WindowSpec { max_level: window.max_level, max_degree: i64::MAX / 4 };
    let mut op = ModeOperator::zero();
    for a in 0..d.n() {
        let co = coefficients_av_bv(d, a, window)?;
        let mut ls: BTreeMap<i32, ModeOperator> = BTreeMap::new();
        for (&(i, j), c) in &co.a {
            let l = ls.entry(j).or_insert_with(|| make_virasoro(a, j, &inner));
            op.add_assign(&ModeOperator::mode(Mode::new(a, i)).mul(l).scale(c));
        }
        for (&j, c) in &co.b {
            op.add_term(TermKey::new(vec![Mode::new(a, j)], 0), c.clone());
        }
    }
    Ok(op.retain(window))
}

/// `Ŵ_V = V̂ Ŵ_Δ V̂^-1` computed by conjugating mode by mode; an
/// independent route to the same operator as [`assemble_w_v`].
pub fn w_v_by_conjugation(d: &GiventalData, window: &WindowSpec) -> Result<ModeOperator> {
    let sd: Vec<Scalar> = d.sectors.iter().map(|s| s.sqrt_delta.clone()).collect();
    let w_delta = make_w_delta(&sd, &d.alphas(), window)?;
    let cutoff = conjugation_cutoff(&[&w_delta], window);
    let elems = vir_elements(d, chi_needed(cutoff))?;
    let g = combined_generator(&elems, cutoff)?;
    conjugate_by_exponential(&w_delta, &g, window)
}

/// `Ŵ = R̂ Ŵ_V R̂^-1`, packed.
pub fn conjugate_w(d: &GiventalData, w_v: &ModeOperator, window: &WindowSpec) -> Result<CutJoinOperator> {
    d.validate()?;
    let w = if d.has_r() {
        let cutoff = conjugation_cutoff(&[w_v], window);
        conjugate_by_exponential(w_v, &r_hat(d, cutoff), window)?
    } else {
        w_v.retain(window)
    };
    CutJoinOperator::from_mode_operator(&w, *window)
}

/// The full cut-and-join operator for `d` in its default window.
pub fn build_cut_and_join(d: &GiventalData, margins: Margins) -> Result<CutJoinOperator> {
    d.validate()?;
    let window = d.window(margins);
    let w_v = assemble_w_v(d, &window)?;
    conjugate_w(d, &w_v, &window)
}

/// Solver B: `Z = exp(ℏ Ŵ) 1` through `ℏ^order_k`.
pub fn cutjoin_potential(d: &GiventalData, margins: Margins) -> Result<HbarSeries> {
    Ok(run_recursion(&build_cut_and_join(d, margins)?, d.order_k))
}

/// `M̂(u, v) = ∂_v K̃_u - ∂_u K̃_v`, which annihilates `Z`.
pub fn ambiguity_operator(u: Var, v: Var, kf: &KFamily) -> Result<ModeOperator> {
    let kt = |x: Var| {
        kf.k_tilde
            .get(&x)
            .ok_or_else(|| Error::Window(format!("no K̃ operator for T[{}][{}] in the window", x.sector + 1, x.level)))
    };
    let (ku, kv) = (kt(u)?, kt(v)?);
    if u == v {
        return Ok(ModeOperator::zero());
    }
    let m = ModeOperator::d_var(v).mul(ku).sub(&ModeOperator::d_var(u).mul(kv));
    Ok(m.retain(&kf.window))
}

/// `w + Σ C(u, v) M̂(u, v)`, repacked.
pub fn ambiguity_shift(w: &CutJoinOperator, c: &BTreeMap<(Var, Var), Scalar>, kf: &KFamily) -> Result<CutJoinOperator> {
    let mut op = w.to_mode_operator();
    for (&(u, v), x) in c {
        op.add_assign(&ambiguity_operator(u, v, kf)?.scale(x));
    }
    CutJoinOperator::from_mode_operator(&op.retain(&w.window), w.window)
}

/// `m Z^(m) = Ŵ Z^(m-1)` for every `m`; returns the first failing order.
pub fn check_cut_and_join_equation(w: &CutJoinOperator, z: &HbarSeries) -> Option<usize> {
    let op = w.to_mode_operator();
    (1..=z.order_k()).find(|&m| op.apply_poly(z.coeff(m - 1)) != z.coeff(m).scale(&int(m as i64)))
}
