//! Named operators: Virasoro modes, constrained Virasoro operators, the
//! single-sector cut-and-join operators and the Euler grading operator.

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::modeops::{Mode, ModeOperator, TermKey, WindowSpec};
use crate::scalarseries::{frac, int, Scalar};

/// `L_m = 1/2 sum_{j+k=m+1} :J_j J_k:` in one sector.
pub fn make_virasoro(sector: usize, m: i32, window: &WindowSpec) -> ModeOperator {
    let top = window.max_annihilation();
    let mut op = ModeOperator::zero();
    let half = frac(1, 2);
    for j in (m - top - 1)..=(top + 1) {
        let k = m + 1 - j;
        let key = TermKey::new(vec![Mode::new(sector, j), Mode::new(sector, k)], 0);
        if window.keeps(&key) {
            op.add_term(key, half.clone());
        }
    }
    op
}

/// `L_k^α = 1/2 L_k - (2k+2α+1)!!/(2ℏ) d/dT_{k+α} + δ_{k,0}/16`.
pub fn make_constrained_virasoro(sector: usize, alpha: u8, k: i32, window: &WindowSpec) -> Result<ModeOperator> {
    let a = alpha as i32;
    if k < -a {
        return Err(Error::InvalidInput(format!("constrained Virasoro index {k} below -α = {}", -a)));
    }
    let mut op = make_virasoro(sector, k, window).scale(&frac(1, 2));
    // (2k+2α+1)!! d/dT_{k+α} = J_{k+α+1}
    op.add_term(TermKey::new(vec![Mode::new(sector, k + a + 1)], -1), frac(-1, 2));
    if k == 0 {
        op.add_term(TermKey::new(vec![], 0), frac(1, 16));
    }
    Ok(op)
}

/// `W_α = 1/(2α+1) sum_k J_{-k} (L_{k-α} + δ_{k,α}/8)`, normal-ordered.
pub fn make_w_alpha(sector: usize, alpha: u8, window: &WindowSpec) -> ModeOperator {
    let a = alpha as i32;
    let mut op = ModeOperator::zero();
    // the outer creator restores the degree lost by the inner annihilators
    let inner_window = WindowSpec { max_level: window.max_level, max_degree: i64::MAX / 4 };
    for k in 0..=(2 * window.max_annihilation() + a + 1) {
        let mut inner = make_virasoro(sector, k - a, &inner_window);
        if k == a {
            inner.add_term(TermKey::new(vec![], 0), frac(1, 8));
        }
        op.add_assign(&ModeOperator::mode(Mode::new(sector, -k)).mul(&inner));
    }
    op.scale(&frac(1, 2 * a as i64 + 1)).retain(window)
}

/// `W_Δ = sum_a sqrt(Δ_a) W_{α_a}` with sector `a` carrying its own variables.
pub fn make_w_delta(sqrt_delta: &[Scalar], alpha: &[u8], window: &WindowSpec) -> Result<ModeOperator> {
    if sqrt_delta.len() != alpha.len() {
        return Err(Error::InvalidInput("sqrt_delta and alpha lengths differ".into()));
    }
    let mut op = ModeOperator::zero();
    for (a, (d, &al)) in sqrt_delta.iter().zip(alpha).enumerate() {
        if d.is_zero() {
            return Err(Error::InvalidInput(format!("sqrt_delta of sector {} is zero", a + 1)));
        }
        op.add_assign(&make_w_alpha(a, al, window).scale(d));
    }
    Ok(op)
}

/// `sum_a sum_k (2k+1) T[a][k] d/dT[a][k]`.
pub fn make_euler(sectors: usize, window: &WindowSpec) -> ModeOperator {
    let mut op = ModeOperator::zero();
    for a in 0..sectors {
        for k in 0..=window.max_level as i32 {
            op.add_term(TermKey::new(vec![Mode::new(a, -k), Mode::new(a, k + 1)], 0), Scalar::one());
        }
    }
    op
}

/// Outcome of one identity in the commutation suite.
#[derive(Debug, Clone)]
pub struct IdentityCheck {
    pub name: String,
    pub holds: bool,
}

/// Checks `[J_k, J_m]`, `[L_k, J_m]` and `[L_k, L_m]` for `|k|, |m| <= bound`
/// as operator identities. The operators are built in a window enlarged by
/// `bound + 2` and compared inside `window`.
pub fn check_commutation_relations(bound: i32, window: &WindowSpec) -> Vec<IdentityCheck> {
    let big = window.enlarged(bound as usize + 2);
    let big = WindowSpec { max_level: big.max_level, max_degree: big.max_degree + 4 * bound as i64 };
    let mut out = Vec::new();
    let j = |k: i32| ModeOperator::mode(Mode::new(0, k));
    let l: Vec<ModeOperator> = (-2 * bound..=2 * bound).map(|m| make_virasoro(0, m, &big)).collect();
    let lv = |m: i32| &l[(m + 2 * bound) as usize];
    for k in -bound..=bound {
        for m in -bound..=bound {
            let lhs = j(k).commutator(&j(m));
            let rhs = if k + m == 1 { ModeOperator::scalar(int(2 * k as i64 - 1)) } else { ModeOperator::zero() };
            out.push(IdentityCheck { name: format!("[J_{k}, J_{m}]"), holds: lhs == rhs });

            let lhs = lv(k).commutator(&j(m)).retain(window);
            let rhs = j(k + m).scale(&int(-(2 * m as i64 - 1))).retain(window);
            out.push(IdentityCheck { name: format!("[L_{k}, J_{m}]"), holds: lhs == rhs });

            let lhs = lv(k).commutator(lv(m)).retain(window);
            let mut rhs = lv(k + m).scale(&int(2 * (k - m) as i64));
            if k + m == 0 {
                let kk = k as i64;
                rhs.add_term(TermKey::new(vec![], 0), frac(kk * (2 * kk * kk + 1), 6));
            }
            out.push(IdentityCheck { name: format!("[L_{k}, L_{m}]"), holds: lhs == rhs.retain(window) });
        }
    }
    out
}
