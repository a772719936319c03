//! One line per acceptance criterion; exits nonzero if any line fails.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use ancestor::cutjoin::{ambiguity_shift, build_cut_and_join, run_recursion, tau_alpha, tau_alpha_sector};
use ancestor::generators::check_commutation_relations;
use ancestor::giventaldata::{direct_ancestor_potential_with, preset, GiventalData, Margins};
use ancestor::modeops::WindowSpec;
use ancestor::scalarseries::{format_scalar, frac, int, odd_df, Scalar};
use ancestor::tpoly::{HbarSeries, Monomial, TPolynomial, Var};
use ancestor::virasoro::{build_h, build_k_family, build_l_family, check_constraints, solve_from_constraints, solve_from_constraints_with};
use ancestor::virgroup::check_virtos;
use rand::{rngs::StdRng, Rng, SeedableRng};

type Outcome = Result<String, String>;

fn t(k: usize) -> Var {
    Var::new(0, k)
}

fn mono(pairs: &[(usize, u32)]) -> Monomial {
    Monomial::from_pairs(&pairs.iter().map(|&(k, e)| (t(k), e)).collect::<Vec<_>>())
}

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn homogeneous(z: &HbarSeries, slope: i64) -> bool {
    (0..=z.order_k()).all(|m| z.coeff(m).is_homogeneous_of_degree(slope * m as i64))
}

/// The BGW cut-and-join operator written out as a differential operator,
/// applied with polynomial derivatives only.
fn w0_by_hand(p: &TPolynomial, levels: usize) -> TPolynomial {
    let mut out = p.mul(&TPolynomial::var(t(0))).scale(&frac(1, 8));
    for k in 0..levels {
        for m in 0..levels {
            let (ki, mi) = (k as i64, m as i64);
            let c = frac(1, 2) * odd_df(ki + 1) * odd_df(mi + 1) / odd_df(ki + mi + 1);
            let dd = p.derivative(t(k)).derivative(t(m));
            out.add_assign(&dd.mul(&TPolynomial::var(t(k + m + 1))).scale(&c));
            let c = odd_df(ki + mi + 1) / (odd_df(ki) * odd_df(mi));
            let d = p.derivative(t(k + m));
            out.add_assign(&d.mul(&TPolynomial::var(t(k))).mul(&TPolynomial::var(t(m))).scale(&c));
        }
    }
    out
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let z = tau_alpha(1, 5);
    let took = start.elapsed();
    ensure(took < Duration::from_secs(60), format!("took {took:?}"))?;
    let expected = TPolynomial::monomial(mono(&[(0, 3)]), frac(1, 6)).add(&TPolynomial::monomial(mono(&[(1, 1)]), frac(1, 24)));
    ensure(z.coeff(1) == &expected, format!("hbar^1 is {}", z.coeff(1)))?;
    ensure(homogeneous(&z, 3), "not homogeneous of degree 3k")?;
    Ok(format!("tau_1 through hbar^5 in {:.2}s, hbar^1 = {}, degrees 3k", took.as_secs_f64(), z.coeff(1)))
}

fn criterion_2() -> Outcome {
    let z = tau_alpha(0, 6);
    ensure(z.coeff(1) == &TPolynomial::monomial(mono(&[(0, 1)]), frac(1, 8)), format!("hbar^1 is {}", z.coeff(1)))?;
    let by_hand = w0_by_hand(&w0_by_hand(&TPolynomial::one(), 2), 2).scale(&frac(1, 2));
    ensure(z.coeff(2) == &by_hand, format!("hbar^2 is {}, by hand {}", z.coeff(2), by_hand))?;
    ensure(z.coeff(2) == &TPolynomial::monomial(mono(&[(0, 2)]), frac(9, 128)), "hbar^2 is not 9/128 T_0^2")?;
    ensure(homogeneous(&z, 1), "not homogeneous of degree k")?;
    Ok(format!("tau_0: hbar^1 = {}, hbar^2 = {}, degrees k", z.coeff(1), z.coeff(2)))
}

fn criterion_3() -> Outcome {
    let by_recursion = tau_alpha(1, 3);
    let by_constraints = solve_from_constraints(&GiventalData::trivial(&[1], 3)).map_err(|e| e.to_string())?;
    let m4 = mono(&[(4, 1)]);
    let at = |z: &HbarSeries, k: usize| z.coeff(k).coeff(&m4);
    ensure(at(&by_recursion, 2) == at(&by_constraints, 2), "paths disagree at hbar^2")?;
    let (a, b) = (at(&by_recursion, 3), at(&by_constraints, 3));
    ensure(a == b, format!("paths disagree at hbar^3: {} vs {}", format_scalar(&a), format_scalar(&b)))?;
    ensure(a == frac(1, 1152), format!("T_4 coefficient is {}", format_scalar(&a)))?;
    ensure(by_recursion == by_constraints, "full series differ")?;
    Ok(format!(
        "T_4: both paths give {} at hbar^2 and {} at hbar^3 (degree 9 sits at hbar^3)",
        format_scalar(&at(&by_recursion, 2)),
        format_scalar(&a)
    ))
}

fn criterion_4() -> Outcome {
    let start = Instant::now();
    let checks = check_commutation_relations(6, &WindowSpec::for_degree(12));
    let took = start.elapsed();
    let bad: Vec<_> = checks.iter().filter(|c| !c.holds).map(|c| c.name.as_str()).collect();
    ensure(bad.is_empty(), format!("failing: {}", bad.join(", ")))?;
    ensure(took < Duration::from_secs(10), format!("took {took:?}"))?;
    Ok(format!("{} identities for |k|, |m| <= 6 in {:.2}s", checks.len(), took.as_secs_f64()))
}

fn criterion_5() -> Outcome {
    let mut n = 0;
    for alpha in [0u8, 1] {
        for sd in [int(1), frac(2, 3)] {
            let lo = 1 + alpha as usize;
            let mut d = GiventalData::trivial(&[alpha], 3);
            d.sectors[0].sqrt_delta = sd.clone();
            d.sectors[0].delta_t.insert(lo, frac(1, 2));
            d.sectors[0].delta_t.insert(lo + 1, frac(-2, 3));
            let r = check_virtos(&d, 0, 3, Margins::default()).map_err(|e| e.to_string())?;
            ensure(r.ok(), r.render())?;
            n += 1;
        }
    }
    Ok(format!("{n} cases agree through hbar^3"))
}

struct Mixed {
    data: GiventalData,
    direct: HbarSeries,
}

fn criterion_6(m: &Mixed) -> Outcome {
    let start = Instant::now();
    let d = &m.data;
    let w = build_cut_and_join(d, Margins::default()).map_err(|e| e.to_string())?;
    let b = run_recursion(&w, d.order_k);
    let c = solve_from_constraints(d).map_err(|e| e.to_string())?;
    let took = start.elapsed();
    for (name, z) in [("cut-and-join", &b), ("constraints", &c)] {
        if let Some((k, mono, x, y)) = m.direct.first_difference(z) {
            return Err(format!("direct vs {name} at hbar^{k} {mono}: {} vs {}", format_scalar(&x), format_scalar(&y)));
        }
    }
    ensure(took < Duration::from_secs(300), format!("took {took:?}"))?;
    Ok(format!("{} coefficients through hbar^{} agree, constant terms included", m.direct.rows().len(), d.order_k))
}

fn criterion_7(m: &Mixed) -> Outcome {
    let d = &m.data;
    let win = d.window(Margins::default());
    let mut below = d.clone();
    below.order_k = 3;
    let fam = build_l_family(&below, 3, &win).map_err(|e| e.to_string())?;
    if let Some(v) = check_constraints(&fam, &m.direct, 3).map_err(|e| e.to_string())? {
        return Err(v.to_string());
    }
    let h = build_h(d, &win).map_err(|e| e.to_string())?;
    for k in 0..=4 {
        let z = m.direct.coeff(k);
        ensure(h.apply_poly(z) == z.scale(&int(k as i64)), format!("H Z^({k}) != {k} Z^({k})"))?;
    }
    Ok(format!("{} operators vanish through hbar^3; H Z^(m) = m Z^(m) for m <= 4", fam.members.len()))
}

fn criterion_8(m: &Mixed) -> Outcome {
    let d = &m.data;
    let win = d.window(Margins::default());
    let kf = build_k_family(d, &win).map_err(|e| e.to_string())?;
    let w = build_cut_and_join(d, Margins::default()).map_err(|e| e.to_string())?;
    let vars: Vec<Var> = kf.k_tilde.keys().copied().filter(|v| v.degree() <= 5).collect();
    let mut rng = StdRng::seed_from_u64(20_240_611);
    let mut used = Vec::new();
    for _ in 0..3 {
        let (u, v) = loop {
            let u = vars[rng.gen_range(0..vars.len())];
            let v = vars[rng.gen_range(0..vars.len())];
            if u != v {
                break (u, v);
            }
        };
        let c = Scalar::new(rng.gen_range(-9i64..=9).max(1).into(), rng.gen_range(1i64..=7).into());
        let map: BTreeMap<(Var, Var), Scalar> = [((u, v), c.clone())].into();
        let shifted = ambiguity_shift(&w, &map, &kf).map_err(|e| e.to_string())?;
        ensure(shifted != w, format!("shift by C({u:?},{v:?}) left W unchanged"))?;
        let z = run_recursion(&shifted, d.order_k);
        if let Some((k, mono, _, _)) = m.direct.first_difference(&z) {
            return Err(format!("C({u:?},{v:?}) = {} changes hbar^{k} {mono}", format_scalar(&c)));
        }
        used.push(format!("T[{}][{}],T[{}][{}]", u.sector + 1, u.level, v.sector + 1, v.level));
    }
    Ok(format!("Z unchanged through hbar^4 under shifts at ({})", used.join("), (")))
}

fn criterion_9() -> Outcome {
    let sym = r#"{"N": 2, "sectors": [{"alpha": 1, "sqrt_delta": "1"}, {"alpha": 0, "sqrt_delta": "1"}],
        "r_jets": [[["0", "0"], ["0", "0"]], [["0", "1/3"], ["1/3", "0"]]], "order_K": 2}"#;
    let d = GiventalData::from_json(sym).map_err(|e| e.to_string())?;
    let v = d.validate().err().ok_or("symmetric r_2 accepted")?;
    ensure(v.location.starts_with("r_jets[2]"), format!("located at {}", v.location))?;
    let zero = r#"{"N": 1, "sectors": [{"alpha": 1, "sqrt_delta": "0"}], "order_K": 2}"#;
    let d = GiventalData::from_json(zero).map_err(|e| e.to_string())?;
    let z = d.validate().err().ok_or("sqrt_delta = 0 accepted")?;
    Ok(format!("rejected at {} and at {}", v.location, z.location))
}

fn criterion_10(m: &Mixed) -> Outcome {
    let a = tau_alpha_sector(0, 1, 5, 2);
    ensure(a == tau_alpha(1, 5), "tau_1 moves with the window")?;
    let b = tau_alpha_sector(0, 0, 6, 2);
    ensure(b == tau_alpha(0, 6), "tau_0 moves with the window")?;
    let d = &m.data;
    let wide = Margins::uniform(2);
    let direct = direct_ancestor_potential_with(d, wide).map_err(|e| e.to_string())?;
    ensure(direct == m.direct, "direct solver moves with the margins")?;
    let cj = run_recursion(&build_cut_and_join(d, wide).map_err(|e| e.to_string())?, d.order_k);
    ensure(cj == m.direct, "cut-and-join solver moves with the margins")?;
    let vc = solve_from_constraints_with(d, wide).map_err(|e| e.to_string())?;
    ensure(vc == m.direct, "constraint solver moves with the margins")?;
    Ok("criteria 1, 2 and 6 unchanged with windows and inner orders +2".into())
}

fn main() {
    let data = preset("mixed-n2").expect("bundled data");
    let direct = direct_ancestor_potential_with(&data, Margins::default()).expect("direct solver");
    let mixed = Mixed { data, direct };
    let criteria: Vec<(usize, Box<dyn Fn() -> Outcome + '_>)> = vec![
        (1, Box::new(criterion_1)),
        (2, Box::new(criterion_2)),
        (3, Box::new(criterion_3)),
        (4, Box::new(criterion_4)),
        (5, Box::new(criterion_5)),
        (6, Box::new(|| criterion_6(&mixed))),
        (7, Box::new(|| criterion_7(&mixed))),
        (8, Box::new(|| criterion_8(&mixed))),
        (9, Box::new(criterion_9)),
        (10, Box::new(|| criterion_10(&mixed))),
    ];
    let mut failed = 0;
    for (n, f) in criteria {
        match f() {
            Ok(msg) => println!("criterion {n:>2} PASS  {msg}"),
            Err(msg) => {
                failed += 1;
                println!("criterion {n:>2} FAIL  {msg}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
