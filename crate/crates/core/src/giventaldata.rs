//! Input data for a generalized ancestor potential, its validation, and
//! the three elementary actions Δ̂, T̂ and R̂ together with the direct
//! pipeline `Z = R̂ T̂ Δ̂ Π τ`.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::cutjoin::tau_alpha_sector;
use crate::error::{Error, Result};
use crate::modeops::{apply_exponential, Mode, ModeOperator, TermKey, WindowSpec};
use crate::scalarseries::{format_scalar, frac, odd_df, parse_scalar, Scalar};
use crate::tpoly::{HbarSeries, TPolynomial, Var};

/// One sector: its seed type, `√Δ` and translation coefficients by level.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SectorData {
    pub alpha: u8,
    pub sqrt_delta: Scalar,
    pub delta_t: BTreeMap<usize, Scalar>,
}

impl SectorData {
    pub fn trivial(alpha: u8) -> SectorData {
        SectorData { alpha, sqrt_delta: Scalar::one(), delta_t: BTreeMap::new() }
    }

    pub fn slope(&self) -> i64 {
        2 * self.alpha as i64 + 1
    }
}

/// Sectors are indexed from 0 internally and from 1 in files and reports.
/// `r_jets[k-1][a][b]` is `(r_k)_a^b`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GiventalData {
    pub sectors: Vec<SectorData>,
    pub r_jets: Vec<Vec<Vec<Scalar>>>,
    pub order_k: usize,
}

/// Extra room added to every window and inner order, used to confirm
/// that results do not depend on truncation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Margins {
    pub extra_window: usize,
    pub extra_inner: usize,
}

impl Margins {
    pub fn uniform(extra: usize) -> Margins {
        Margins { extra_window: extra, extra_inner: extra }
    }
}

/// A located validation failure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub location: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.location, self.message)
    }
}

impl From<Violation> for Error {
    fn from(v: Violation) -> Error {
        Error::Validation(v.to_string())
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawData {
    #[serde(rename = "N")]
    n: usize,
    sectors: Vec<RawSector>,
    #[serde(default)]
    r_jets: Vec<Vec<Vec<String>>>,
    #[serde(rename = "order_K")]
    order_k: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSector {
    alpha: u8,
    sqrt_delta: String,
    #[serde(rename = "delta_T", default)]
    delta_t: BTreeMap<usize, String>,
}

fn violation(location: impl Into<String>, message: impl Into<String>) -> Violation {
    Violation { location: location.into(), message: message.into() }
}

impl GiventalData {
    /// All sectors trivial: `√Δ = 1`, no translation, no R-matrix.
    pub fn trivial(alphas: &[u8], order_k: usize) -> GiventalData {
        GiventalData { sectors: alphas.iter().map(|&a| SectorData::trivial(a)).collect(), r_jets: vec![], order_k }
    }

    pub fn n(&self) -> usize {
        self.sectors.len()
    }

    pub fn alphas(&self) -> Vec<u8> {
        self.sectors.iter().map(|s| s.alpha).collect()
    }

    pub fn any_regular(&self) -> bool {
        self.sectors.iter().any(|s| s.alpha == 1)
    }

    pub fn has_r(&self) -> bool {
        self.r_jets.iter().flatten().flatten().any(|c| !c.is_zero())
    }

    /// Degree bound of the `ℏ^order_k` coefficient of `Z`.
    pub fn max_degree(&self) -> i64 {
        let s = self.sectors.iter().map(|s| s.slope()).max().unwrap_or(1);
        s * self.order_k as i64
    }

    pub fn window(&self, margins: Margins) -> WindowSpec {
        WindowSpec::for_order(self.order_k, self.any_regular()).enlarged(margins.extra_window)
    }

    /// Translation amounts of one sector, optionally multiplied by `√Δ`.
    pub fn sector_shifts(&self, a: usize, scaled: bool) -> BTreeMap<Var, Scalar> {
        let s = &self.sectors[a];
        s.delta_t
            .iter()
            .filter(|(_, c)| !c.is_zero())
            .map(|(&k, c)| (Var::new(a, k), if scaled { c * &s.sqrt_delta } else { c.clone() }))
            .collect()
    }

    pub fn shifts(&self, scaled: bool) -> BTreeMap<Var, Scalar> {
        (0..self.n()).flat_map(|a| self.sector_shifts(a, scaled)).collect()
    }

    pub fn slopes(&self) -> Vec<i64> {
        self.sectors.iter().map(|s| s.slope()).collect()
    }

    /// Parses the JSON config format. Structural problems are reported
    /// as validation errors; the mathematical checks live in `validate`.
    pub fn from_json(text: &str) -> Result<GiventalData> {
        let raw: RawData = serde_json::from_str(text).map_err(|e| Error::InvalidInput(format!("config: {e}")))?;
        if raw.n != raw.sectors.len() {
            return Err(violation("N", format!("N = {} but {} sectors are listed", raw.n, raw.sectors.len())).into());
        }
        let mut sectors = Vec::with_capacity(raw.n);
        for (i, s) in raw.sectors.iter().enumerate() {
            let loc = format!("sectors[{}]", i + 1);
            let sqrt_delta =
                parse_scalar(&s.sqrt_delta).map_err(|e| violation(format!("{loc}.sqrt_delta"), e.to_string()))?;
            let mut delta_t = BTreeMap::new();
            for (&k, v) in &s.delta_t {
                let c = parse_scalar(v).map_err(|e| violation(format!("{loc}.delta_T[{k}]"), e.to_string()))?;
                delta_t.insert(k, c);
            }
            sectors.push(SectorData { alpha: s.alpha, sqrt_delta, delta_t });
        }
        let mut r_jets = Vec::with_capacity(raw.r_jets.len());
        for (k, m) in raw.r_jets.iter().enumerate() {
            let mut rows = Vec::with_capacity(m.len());
            for (a, row) in m.iter().enumerate() {
                let mut out = Vec::with_capacity(row.len());
                for (b, v) in row.iter().enumerate() {
                    let c = parse_scalar(v)
                        .map_err(|e| violation(format!("r_jets[{}][{}][{}]", k + 1, a + 1, b + 1), e.to_string()))?;
                    out.push(c);
                }
                rows.push(out);
            }
            r_jets.push(rows);
        }
        Ok(GiventalData { sectors, r_jets, order_k: raw.order_k })
    }

    pub fn to_json(&self) -> String {
        let raw = RawData {
            n: self.n(),
            sectors: self
                .sectors
                .iter()
                .map(|s| RawSector {
                    alpha: s.alpha,
                    sqrt_delta: format_scalar(&s.sqrt_delta),
                    delta_t: s.delta_t.iter().map(|(&k, c)| (k, format_scalar(c))).collect(),
                })
                .collect(),
            r_jets: self
                .r_jets
                .iter()
                .map(|m| m.iter().map(|row| row.iter().map(format_scalar).collect()).collect())
                .collect(),
            order_k: self.order_k,
        };
        serde_json::to_string_pretty(&raw).expect("config serializes")
    }

    /// Checks the data and reports the first violation found.
    pub fn validate(&self) -> std::result::Result<(), Violation> {
        let n = self.n();
        if n == 0 {
            return Err(violation("sectors", "at least one sector is required"));
        }
        for (i, s) in self.sectors.iter().enumerate() {
            let loc = format!("sectors[{}]", i + 1);
            if s.alpha > 1 {
                return Err(violation(format!("{loc}.alpha"), format!("alpha must be 0 or 1, got {}", s.alpha)));
            }
            if s.sqrt_delta.is_zero() {
                return Err(violation(format!("{loc}.sqrt_delta"), "sqrt_delta must be nonzero"));
            }
            for (&k, c) in &s.delta_t {
                if !c.is_zero() && k < 1 + s.alpha as usize {
                    return Err(violation(
                        format!("{loc}.delta_T[{k}]"),
                        format!("translation allowed only at levels >= {} for alpha = {}", 1 + s.alpha, s.alpha),
                    ));
                }
            }
        }
        for (i, m) in self.r_jets.iter().enumerate() {
            let k = i + 1;
            if m.len() != n || m.iter().any(|r| r.len() != n) {
                return Err(violation(format!("r_jets[{k}]"), format!("r_{k} must be {n}x{n}")));
            }
            let sign = if k % 2 == 1 { Scalar::one() } else { -Scalar::one() };
            for a in 0..n {
                for b in 0..n {
                    if m[b][a] != &sign * &m[a][b] {
                        let kind = if k % 2 == 1 { "self-adjoint" } else { "skew-self-adjoint" };
                        return Err(violation(
                            format!("r_jets[{k}][{}][{}]", a + 1, b + 1),
                            format!("r_{k} must be {kind}: entry {} against transposed {}", m[a][b], m[b][a]),
                        ));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Names accepted by [`preset`].
pub const PRESETS: &[&str] = &["airy", "bessel", "mixed-n2"];

const MIXED_N2: &str = include_str!("../data/mixed_n2.json");

/// Built-in data: `airy` is `τ_1` through `ℏ^3`, `bessel` is `τ_0` through
/// `ℏ^2`, `mixed-n2` is the bundled two-sector example.
pub fn preset(name: &str) -> Result<GiventalData> {
    match name {
        "airy" => Ok(GiventalData::trivial(&[1], 3)),
        "bessel" => Ok(GiventalData::trivial(&[0], 2)),
        "mixed-n2" => GiventalData::from_json(MIXED_N2),
        _ => Err(Error::InvalidInput(format!("unknown preset {name:?}; known: {}", PRESETS.join(", ")))),
    }
}

/// Expansion coefficients of `y` near one ramification point.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocalPoint {
    pub alpha: u8,
    /// `y_k` keyed by the exponent `k`.
    pub y: BTreeMap<i64, Scalar>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocalCurveData {
    pub points: Vec<LocalPoint>,
}

/// `√Δ_a = 1/y_{2α-1}` and `ΔT_k = -(2k-1)!! y_{2k-1}/y_{2α-1}` for `k >= 1+α`.
pub fn from_local_curve(c: &LocalCurveData, order_k: usize) -> Result<GiventalData> {
    let mut sectors = Vec::new();
    for (i, p) in c.points.iter().enumerate() {
        if p.alpha > 1 {
            return Err(violation(format!("points[{}].alpha", i + 1), "alpha must be 0 or 1").into());
        }
        let lead_e = 2 * p.alpha as i64 - 1;
        if let Some((&e, _)) = p.y.iter().find(|(&e, c)| e < lead_e && !c.is_zero()) {
            return Err(violation(format!("points[{}].y[{e}]", i + 1), "term below the leading exponent").into());
        }
        let lead = p.y.get(&lead_e).cloned().unwrap_or_else(Scalar::zero);
        if lead.is_zero() {
            return Err(violation(format!("points[{}].y[{lead_e}]", i + 1), "leading coefficient is zero").into());
        }
        let mut delta_t = BTreeMap::new();
        for (&e, y) in &p.y {
            if e.rem_euclid(2) == 0 || y.is_zero() {
                continue;
            }
            let k = (e + 1) / 2;
            if k >= 1 + p.alpha as i64 {
                delta_t.insert(k as usize, -(odd_df(k) * y / &lead));
            }
        }
        sectors.push(SectorData { alpha: p.alpha, sqrt_delta: lead.recip(), delta_t });
    }
    Ok(GiventalData { sectors, r_jets: vec![], order_k })
}

/// `Δ̂`: rescales `ℏ` by `√Δ_a` in the seed of sector `a` and multiplies.
/// Each seed must use only the variables of its own sector.
pub fn apply_delta_product(d: &GiventalData, taus: &[HbarSeries]) -> Result<HbarSeries> {
    if taus.len() != d.n() {
        return Err(Error::InvalidInput(format!("{} seeds given for {} sectors", taus.len(), d.n())));
    }
    let mut out: Option<HbarSeries> = None;
    for (s, tau) in d.sectors.iter().zip(taus) {
        let scaled = tau.rescale_hbar(&s.sqrt_delta);
        out = Some(match out {
            None => scaled,
            Some(acc) => acc.mul(&scaled),
        });
    }
    Ok(out.expect("at least one sector"))
}

/// Checks that the `ℏ^n` coefficient is a sum of monomials whose sector
/// degrees are `slope_a · n_a` with `sum n_a = n`.
pub fn check_grading(s: &HbarSeries, slopes: &[i64]) -> Result<()> {
    for (n, mono, _) in s.rows() {
        if let Some((v, _)) = mono.factors().iter().find(|(v, _)| v.sector as usize >= slopes.len()) {
            return Err(Error::InvalidInput(format!("variable {v:?} outside the {} sectors", slopes.len())));
        }
        let mut total = 0i64;
        for (a, &sl) in slopes.iter().enumerate() {
            let deg = mono.sector_degree(a);
            if deg % sl != 0 {
                return Err(Error::InvalidInput(format!("ℏ^{n} term {mono} breaks the grading in sector {}", a + 1)));
            }
            total += deg / sl;
        }
        if total != n as i64 {
            return Err(Error::InvalidInput(format!("ℏ^{n} term {mono} breaks the grading")));
        }
    }
    Ok(())
}

/// Smallest input order that determines `exp(ℏ^-1 D)·s` through `ℏ^k_out`.
///
/// A sector of slope `s` and smallest translated degree `d` loses at most
/// `floor(s n_a / d)` powers of ℏ from its share `n_a`; the required order
/// is the largest `n` whose best split still lands at or below `k_out`.
pub fn required_inner_order(slopes: &[i64], drops: &[Option<i64>], k_out: usize) -> Result<usize> {
    for (&s, d) in slopes.iter().zip(drops) {
        if let Some(d) = d {
            if *d <= s {
                return Err(Error::InvalidInput(format!("translation of degree {d} does not outpace slope {s}")));
            }
        }
    }
    let g = |a: usize, n: i64| -> i64 {
        match drops[a] {
            Some(d) => n - (slopes[a] * n).div_euclid(d),
            None => n,
        }
    };
    let best = |n: i64| -> i64 {
        let mut cur = vec![0i64; n as usize + 1];
        for t in 1..=n {
            cur[t as usize] = g(0, t);
        }
        for a in 1..slopes.len() {
            let mut next = vec![i64::MAX; n as usize + 1];
            for t in 0..=n {
                for u in 0..=t {
                    let v = cur[(t - u) as usize] + g(a, u);
                    if v < next[t as usize] {
                        next[t as usize] = v;
                    }
                }
            }
            cur = next;
        }
        cur[n as usize]
    };
    let k = k_out as i64;
    let mut n = k;
    while best(n + 1) <= k {
        n += 1;
    }
    Ok(n as usize)
}

/// `exp(ℏ^-1 Σ c_v ∂/∂v) · s` through `ℏ^k_out`, for `s` graded by `slopes`.
/// The input order must meet `required_inner_order`.
pub fn translate(
    s: &HbarSeries,
    shifts: &BTreeMap<Var, Scalar>,
    slopes: &[i64],
    k_out: usize,
) -> Result<HbarSeries> {
    check_grading(s, slopes)?;
    let mut drops: Vec<Option<i64>> = vec![None; slopes.len()];
    for (v, c) in shifts {
        let a = v.sector as usize;
        if a >= slopes.len() {
            return Err(Error::InvalidInput(format!("shift of {v:?} outside the {} sectors", slopes.len())));
        }
        if !c.is_zero() {
            drops[a] = Some(drops[a].map_or(v.degree(), |d: i64| d.min(v.degree())));
        }
    }
    let need = required_inner_order(slopes, &drops, k_out)?;
    if s.order_k() < need {
        return Err(Error::Precision(format!(
            "translation through ℏ^{k_out} needs the input through ℏ^{need}, got ℏ^{}",
            s.order_k()
        )));
    }
    let mut out = HbarSeries::zero(k_out);
    for n in 0..=s.order_k() {
        let mut p = s.coeff(n).clone();
        let mut j = 0usize;
        while !p.is_zero() {
            if j > n {
                return Err(Error::Mismatch(format!("translation of ℏ^{n} produced ℏ^-{}", j - n)));
            }
            if n - j <= k_out {
                out.coeff_mut(n - j).add_assign(&p);
            }
            j += 1;
            let mut next = TPolynomial::zero();
            for (v, c) in shifts {
                next.add_assign(&p.derivative(*v).scale(c));
            }
            p = next.scale(&frac(1, j as i64));
        }
    }
    Ok(out)
}

/// `T̂ s` with the translations as given.
pub fn apply_t(d: &GiventalData, s: &HbarSeries, k_out: usize) -> Result<HbarSeries> {
    translate(s, &d.shifts(false), &d.slopes(), k_out)
}

/// The translation with amounts `√Δ_a ΔT_k^a`, the form it takes once
/// moved to the right of `Δ̂`.
pub fn apply_t_scaled(d: &GiventalData, s: &HbarSeries, k_out: usize) -> Result<HbarSeries> {
    translate(s, &d.shifts(true), &d.slopes(), k_out)
}

/// Order to which the seed of sector `a` is needed for a result through `ℏ^k`.
pub fn inner_order(d: &GiventalData, a: usize, k: usize) -> Result<usize> {
    let s = &d.sectors[a];
    let drop = d.sector_shifts(a, false).keys().map(|v| v.degree()).min();
    required_inner_order(&[s.slope()], &[drop], k)
}

/// `r̂` in modes, keeping annihilations up to index `max_annihilation`.
///
/// `T_j^a ∂/∂T_{k+j}^b` becomes `(2j-1)!!/(2k+2j+1)!! J^a_{-j} J^b_{k+j+1}`
/// and `∂²/∂T_j^a ∂T_{k-j-1}^b` becomes
/// `J^a_{j+1} J^b_{k-j} / ((2j+1)!! (2k-2j-1)!!)`.
pub fn r_hat(d: &GiventalData, max_annihilation: i32) -> ModeOperator {
    let n = d.n();
    let mut op = ModeOperator::zero();
    for (i, m) in d.r_jets.iter().enumerate() {
        let k = i as i64 + 1;
        for a in 0..n {
            for b in 0..n {
                let r = &m[a][b];
                if r.is_zero() {
                    continue;
                }
                let mut j = 0i64;
                while k + j + 1 <= max_annihilation as i64 {
                    let c = r * odd_df(j) / odd_df(k + j + 1);
                    op.add_term(TermKey::new(vec![Mode::new(a, -j as i32), Mode::new(b, (k + j + 1) as i32)], 0), c);
                    j += 1;
                }
                for j in 0..k {
                    let (p, q) = (j + 1, k - j);
                    if p > max_annihilation as i64 || q > max_annihilation as i64 {
                        continue;
                    }
                    let sign = if j % 2 == 0 { -Scalar::one() } else { Scalar::one() };
                    let c = frac(1, 2) * sign * r / (odd_df(j + 1) * odd_df(k - j));
                    op.add_term(TermKey::new(vec![Mode::new(a, p as i32), Mode::new(b, q as i32)], 0), c);
                }
            }
        }
    }
    op
}

/// `R̂ s = exp(r̂) s`.
pub fn apply_r(d: &GiventalData, s: &HbarSeries) -> Result<HbarSeries> {
    if !d.has_r() {
        return Ok(s.clone());
    }
    let top = s.max_level().map_or(1, |l| l as i32 + 1);
    apply_exponential(&r_hat(d, top), s)
}

/// The seed of each sector, translated by `√Δ ΔT` and ready for `Δ̂`.
pub fn translated_seeds(d: &GiventalData, margins: Margins) -> Result<Vec<HbarSeries>> {
    let k = d.order_k;
    let mut out = Vec::with_capacity(d.n());
    for (a, s) in d.sectors.iter().enumerate() {
        let kin = inner_order(d, a, k)? + margins.extra_inner;
        let tau = tau_alpha_sector(a, s.alpha, kin, margins.extra_window);
        let mut slopes = vec![1; d.n()];
        slopes[a] = s.slope();
        out.push(translate(&tau, &d.sector_shifts(a, true), &slopes, k)?);
    }
    Ok(out)
}

/// Solver A: `Z = R̂ T̂ Δ̂ Π τ_{α_a}` through `ℏ^order_k`.
pub fn direct_ancestor_potential(d: &GiventalData) -> Result<HbarSeries> {
    direct_ancestor_potential_with(d, Margins::default())
}

pub fn direct_ancestor_potential_with(d: &GiventalData, margins: Margins) -> Result<HbarSeries> {
    d.validate()?;
    let seeds = translated_seeds(d, margins)?;
    let z = apply_delta_product(d, &seeds)?;
    apply_r(d, &z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cutjoin::tau_alpha;
    use crate::scalarseries::int;
    use crate::tpoly::Monomial;

    fn mono(pairs: &[(usize, usize, u32)]) -> Monomial {
        Monomial::from_pairs(&pairs.iter().map(|&(a, k, e)| (Var::new(a, k), e)).collect::<Vec<_>>())
    }

    fn sample() -> GiventalData {
        let mut d = GiventalData::trivial(&[1, 0], 3);
        d.sectors[1].sqrt_delta = frac(3, 2);
        d.sectors[0].delta_t.insert(2, frac(1, 2));
        d.sectors[1].delta_t.insert(1, frac(-1, 3));
        d.r_jets = vec![
            vec![vec![frac(1, 2), frac(1, 3)], vec![frac(1, 3), frac(-1, 4)]],
            vec![vec![int(0), frac(1, 5)], vec![frac(-1, 5), int(0)]],
        ];
        d
    }

    #[test]
    fn presets_validate() {
        for name in PRESETS {
            preset(name).unwrap().validate().unwrap();
        }
        let d = preset("mixed-n2").unwrap();
        assert_eq!(d.alphas(), vec![1, 0]);
        assert_eq!(d.order_k, 4);
        assert!(preset("nope").is_err());
    }

    #[test]
    fn validation_reports_location() {
        assert!(sample().validate().is_ok());
        let mut d = sample();
        d.r_jets[1][0][1] = frac(1, 5);
        d.r_jets[1][1][0] = frac(1, 5);
        let v = d.validate().unwrap_err();
        assert!(v.location.starts_with("r_jets[2]"), "{v}");
        let mut d = sample();
        d.sectors[1].sqrt_delta = int(0);
        assert_eq!(d.validate().unwrap_err().location, "sectors[2].sqrt_delta");
        let mut d = sample();
        d.sectors[0].delta_t.insert(1, int(1));
        assert_eq!(d.validate().unwrap_err().location, "sectors[1].delta_T[1]");
        let mut d = sample();
        d.r_jets[0][0][1] = frac(2, 7);
        assert_eq!(d.validate().unwrap_err().location, "r_jets[1][1][2]");
    }

    #[test]
    fn json_roundtrip_and_unknown_fields() {
        let d = sample();
        let back = GiventalData::from_json(&d.to_json()).unwrap();
        assert_eq!(back, d);
        let bad = d.to_json().replacen("\"order_K\"", "\"orderK\"", 1);
        assert!(GiventalData::from_json(&bad).is_err());
        let extra = d.to_json().replacen("{", "{\"colour\": 1,", 1);
        assert!(GiventalData::from_json(&extra).is_err());
        let wrong_n = d.to_json().replacen("\"N\": 2", "\"N\": 3", 1);
        assert!(matches!(GiventalData::from_json(&wrong_n), Err(Error::Validation(_))));
    }

    #[test]
    fn local_curve_dictionary() {
        let airy = LocalCurveData { points: vec![LocalPoint { alpha: 1, y: [(1, int(1))].into() }] };
        let d = from_local_curve(&airy, 2).unwrap();
        assert_eq!(d.sectors[0].sqrt_delta, int(1));
        assert!(d.sectors[0].delta_t.is_empty());
        let bessel = LocalCurveData { points: vec![LocalPoint { alpha: 0, y: [(-1, int(1))].into() }] };
        let d = from_local_curve(&bessel, 2).unwrap();
        assert_eq!(d.sectors[0].sqrt_delta, int(1));
        assert!(d.sectors[0].delta_t.is_empty());
        let c = frac(2, 7);
        let curve = LocalCurveData { points: vec![LocalPoint { alpha: 1, y: [(1, int(1)), (3, c.clone())].into() }] };
        let d = from_local_curve(&curve, 2).unwrap();
        assert_eq!(d.sectors[0].delta_t, [(2, -(int(3) * &c))].into());
        let scaled = LocalCurveData { points: vec![LocalPoint { alpha: 0, y: [(-1, int(2)), (1, int(1))].into() }] };
        let d = from_local_curve(&scaled, 2).unwrap();
        assert_eq!(d.sectors[0].sqrt_delta, frac(1, 2));
        assert_eq!(d.sectors[0].delta_t, [(1, frac(-1, 2))].into());
        let zero = LocalCurveData { points: vec![LocalPoint { alpha: 1, y: [(3, int(1))].into() }] };
        assert!(from_local_curve(&zero, 2).is_err());
    }

    #[test]
    fn delta_product() {
        let t1 = tau_alpha(1, 3);
        let d = GiventalData::trivial(&[1], 3);
        assert_eq!(apply_delta_product(&d, &[t1.clone()]).unwrap(), t1);
        let mut d = GiventalData::trivial(&[0], 3);
        d.sectors[0].sqrt_delta = frac(2, 3);
        let out = apply_delta_product(&d, &[tau_alpha(0, 3)]).unwrap();
        assert_eq!(out.coeff(1), &TPolynomial::monomial(mono(&[(0, 0, 1)]), frac(2, 3) * frac(1, 8)));
        let d = GiventalData::trivial(&[1, 0], 2);
        let out =
            apply_delta_product(&d, &[tau_alpha_sector(0, 1, 2, 0), tau_alpha_sector(1, 0, 2, 0)]).unwrap();
        let expected = tau_alpha_sector(0, 1, 2, 0).coeff(1).add(tau_alpha_sector(1, 0, 2, 0).coeff(1));
        assert_eq!(out.coeff(1), &expected);
    }

    #[test]
    fn translation_examples() {
        let s = HbarSeries::new(vec![TPolynomial::zero(), TPolynomial::monomial(mono(&[(0, 2, 1)]), int(1))]);
        let c = frac(3, 5);
        let shifts: BTreeMap<Var, Scalar> = [(Var::new(0, 2), c.clone())].into();
        // a shift no heavier than the slope never terminates
        assert!(matches!(translate(&s, &shifts, &[5], 1), Err(Error::InvalidInput(_))));
        let t1 = tau_alpha(1, 5);
        let out = translate(&t1, &shifts, &[3], 2).unwrap();
        assert_eq!(out.coeff(0), &TPolynomial::one());
        assert!(translate(&t1.truncate(3), &shifts, &[3], 2).is_err());
        let none = translate(&t1, &BTreeMap::new(), &[3], 4).unwrap();
        assert_eq!(none, t1.truncate(4));
    }

    #[test]
    fn inner_orders() {
        let k = |s: i64, d: Option<i64>, k: usize| required_inner_order(&[s], &[d], k).unwrap();
        assert_eq!(k(3, None, 4), 4);
        assert_eq!(k(3, Some(5), 4), 10);
        assert_eq!(k(1, Some(3), 4), 6);
        for kk in 1..8 {
            assert!(k(3, Some(5), kk) <= (5 * kk + 1) / 2);
            assert!(k(1, Some(3), kk) <= (3 * kk + 1) / 2);
        }
        // two sectors share the budget
        let g0 = |n: i64| n - 3 * n / 5;
        let g1 = |n: i64| n - n / 3;
        let brute = (0..40i64).filter(|&n| (0..=n).any(|u| g0(n - u) + g1(u) <= 3)).max().unwrap();
        assert_eq!(required_inner_order(&[3, 1], &[Some(5), Some(3)], 3).unwrap(), brute as usize);
    }

    #[test]
    fn ordering_identity() {
        // T̂ after Δ̂ equals Δ̂ after the √Δ-scaled translation
        let mut d = sample();
        d.r_jets.clear();
        let k = 3;
        let kin: Vec<usize> = vec![
            required_inner_order(&[3, 1], &[Some(5), Some(3)], k).unwrap(),
            required_inner_order(&[3, 1], &[Some(5), Some(3)], k).unwrap(),
        ];
        let seeds = [tau_alpha_sector(0, 1, kin[0], 0), tau_alpha_sector(1, 0, kin[1], 0)];
        let lhs = apply_t(&d, &apply_delta_product(&d, &seeds).unwrap(), k).unwrap();
        let moved: Vec<HbarSeries> = seeds.iter().map(|s| apply_t_scaled(&d, s, k).unwrap()).collect();
        let rhs = apply_delta_product(&d, &moved).unwrap();
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn r_hat_actions() {
        let rho = frac(2, 5);
        let mut d = GiventalData::trivial(&[1], 2);
        d.r_jets = vec![vec![vec![rho.clone()]]];
        let t0sq = TPolynomial::monomial(mono(&[(0, 0, 2)]), int(1));
        let g = r_hat(&d, 3);
        assert_eq!(g.apply_poly(&t0sq), TPolynomial::constant(-rho.clone()));
        let s = HbarSeries::new(vec![t0sq.clone()]);
        let out = apply_r(&d, &s).unwrap();
        assert_eq!(out.coeff(0), &t0sq.add(&TPolynomial::constant(-rho)));
        assert_eq!(apply_r(&sample(), &HbarSeries::one(3)).unwrap(), HbarSeries::one(3));
        // T_0 ∂/∂T_1 from r_1
        let t0t1 = TPolynomial::monomial(mono(&[(0, 1, 1)]), int(1));
        assert_eq!(g.apply_poly(&t0t1), TPolynomial::monomial(mono(&[(0, 0, 1)]), frac(2, 5)));
    }

    #[test]
    fn r_hat_matches_variable_form() {
        let d = sample();
        let g = r_hat(&d, 6);
        let mut expected = ModeOperator::zero();
        for (i, m) in d.r_jets.iter().enumerate() {
            let k = i + 1;
            for a in 0..2 {
                for b in 0..2 {
                    let r = &m[a][b];
                    for j in 0..=(5 - k) {
                        expected.add_assign(
                            &ModeOperator::times_var(Var::new(a, j)).mul(&ModeOperator::d_var(Var::new(b, k + j))).scale(r),
                        );
                    }
                    for j in 0..k {
                        let sign = if j % 2 == 0 { -Scalar::one() } else { Scalar::one() };
                        let c = frac(1, 2) * sign * r;
                        expected.add_assign(
                            &ModeOperator::d_var(Var::new(a, j)).mul(&ModeOperator::d_var(Var::new(b, k - j - 1))).scale(&c),
                        );
                    }
                }
            }
        }
        assert_eq!(g, expected);
    }

    #[test]
    fn direct_pipeline_trivial_cases() {
        let d = GiventalData::trivial(&[1], 3);
        assert_eq!(direct_ancestor_potential(&d).unwrap(), tau_alpha(1, 3));
        let mut d = GiventalData::trivial(&[0], 4);
        d.sectors[0].sqrt_delta = frac(-3, 7);
        let z = direct_ancestor_potential(&d).unwrap();
        assert_eq!(z, tau_alpha(0, 4).rescale_hbar(&frac(-3, 7)));
        let z = direct_ancestor_potential(&sample()).unwrap();
        assert_eq!(z.coeff(0), &TPolynomial::one());
        assert_eq!(z.order_k(), 3);
    }

    #[test]
    fn pipeline_stable_under_margins() {
        let d = sample();
        let a = direct_ancestor_potential(&d).unwrap();
        let b = direct_ancestor_potential_with(&d, Margins::uniform(2)).unwrap();
        assert_eq!(a, b);
    }
}
