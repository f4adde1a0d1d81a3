//! Acceptance criteria AC1–AC8, one PASS/FAIL line each.
//!
//! The global sweeps (AC4–AC7) visit, per configuration and degree, the first
//! `PER_DEGREE` divisors whose base has at most `MAX_BASES` points. Setting
//! `FFRTF_FULL=1` lifts both caps.

use std::collections::BTreeMap;
use std::io::Write;

use num_traits::{Signed, Zero};

use ffrtf::algebra::{ExtField, Poly, PrimeField};
use ffrtf::local::{act_and_char, printed_j_ramified, LocalPlace, LocalRep, LocalTestFunction};
use ffrtf::moduli::Setting;
use ffrtf::orbital::{check_threshold, orbital_all, orbital_via_local_product, orbital_via_x};
use ffrtf::places::{enumerate_effective_divisors, Divisor, DoubleCover, Place, SigmaData};
use ffrtf::report::Check;
use ffrtf::suites::{
    eta_suite, j_functional_checks, local_chars_ramified, local_chars_steinberg, local_lemmas_for, m_vs_n_checks,
    orbital_checks, picard_sanity, regularized_checks,
};

const PER_DEGREE: usize = 2;
const MAX_BASES: u64 = 3125;
const MAX_DEG: usize = 4;

fn full() -> bool {
    std::env::var("FFRTF_FULL").is_ok_and(|v| v == "1")
}

fn field(p: u32) -> PrimeField {
    PrimeField::new(p).unwrap()
}

fn cover(p: u32, f: &[i64]) -> DoubleCover {
    DoubleCover::new(Poly::from_i64(field(p), f)).unwrap()
}

fn setting(p: u32, f: &[i64], plus: &[&[i64]], minus: &[&[i64]]) -> (String, Setting) {
    let k = field(p);
    let cv = cover(p, f);
    let pl: Vec<Poly> = plus.iter().map(|c| Poly::from_i64(k, c)).collect();
    let mi: Vec<Poly> = minus.iter().map(|c| Poly::from_i64(k, c)).collect();
    let name = format!(
        "q={p} f={} S+=[{}] S-=[{}]",
        cv.f(),
        pl.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(","),
        mi.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
    );
    let sigma = SigmaData::new(&cv, pl, mi).unwrap();
    (name, Setting::new(cv, sigma))
}

/// CFG-A and CFG-B, each with Σ = ∅, one split place in Σ₊, one degree-1
/// place in Σ₋, and one place in each.
fn global_configs() -> Vec<(String, Setting)> {
    vec![
        setting(3, &[1, 0, 1], &[], &[]),
        setting(3, &[1, 0, 1], &[&[0, 1]], &[]),
        setting(3, &[1, 0, 1], &[], &[&[-1, 1]]),
        setting(3, &[1, 0, 1], &[&[0, 1]], &[&[-1, 1]]),
        setting(5, &[0, -1, 1], &[], &[]),
        setting(5, &[0, -1, 1], &[&[-3, 1]], &[]),
        setting(5, &[0, -1, 1], &[], &[&[-2, 1]]),
        setting(5, &[0, -1, 1], &[&[-3, 1]], &[&[-2, 1]]),
    ]
}

fn base_size(set: &Setting, d: usize) -> u64 {
    (set.q() as u64).pow((d + set.rho() - set.sigma.n() + 1) as u32)
}

/// Divisors visited for one configuration, with their count before capping.
fn divisors(set: &Setting, keep: impl Fn(&Divisor) -> bool) -> (Vec<Divisor>, usize) {
    let mut avoid = set.cover.ramified_places();
    avoid.extend(set.sigma.places());
    let mut out = Vec::new();
    let mut total = 0;
    for d in 0..=MAX_DEG {
        let all: Vec<Divisor> = enumerate_effective_divisors(set.field(), d, &avoid).into_iter().filter(&keep).collect();
        total += all.len();
        if !full() && base_size(set, d) > MAX_BASES {
            continue;
        }
        let cap = if full() { usize::MAX } else { PER_DEGREE };
        out.extend(all.into_iter().take(cap));
    }
    (out, total)
}

fn m_threshold(set: &Setting) -> i64 {
    (set.sigma.n() as i64 - 1).max(0)
}

struct Outcome {
    checks: usize,
    failures: Vec<String>,
}

impl Outcome {
    fn new() -> Self {
        Outcome { checks: 0, failures: Vec::new() }
    }

    fn absorb(&mut self, ctx: &str, checks: Vec<Check>) {
        for c in checks {
            self.checks += 1;
            if !c.pass {
                self.failures.push(format!("{ctx}: {} [{}] left={} right={}", c.id, c.inputs, c.left, c.right));
            }
        }
    }

    fn pass(&self) -> bool {
        self.failures.is_empty() && self.checks > 0
    }
}

// Written to the process stdout so the lines survive libtest's capture.
fn emit(s: String) {
    let mut out = std::io::stdout().lock();
    writeln!(out, "{s}").unwrap();
    out.flush().unwrap();
}

fn line(ac: &str, pass: bool, what: &str) -> bool {
    emit(format!("{ac} {} {what}", if pass { "PASS" } else { "FAIL" }));
    pass
}

fn detail(o: &Outcome) {
    for f in o.failures.iter().take(10) {
        emit(format!("    {f}"));
    }
}

fn ac1() -> bool {
    let mut o = Outcome::new();
    for (p, m) in [(3u32, vec![0i64, 1]), (5, vec![0, 1]), (3, vec![1, 0, 1])] {
        let k = ExtField::new(&Poly::from_i64(field(p), &m)).unwrap();
        o.absorb(&format!("q_x={}", k.size()), local_lemmas_for(&k));
    }
    detail(&o);
    line("AC1", o.pass(), &format!("local test-function lemmas, q_x in {{3,5,9}} ({} checks)", o.checks))
}

/// Ramified places of degree 1 and 2 over q ∈ {3, 5, 7}, Steinberg places of
/// degree 1 and 2 over q ∈ {3, 5}. Returns (criterion verdict, sign-conflict
/// confirmed): at q_x ≡ 3 mod 4 the computed 𝕁(h□) = 𝕁(f□) is exactly
/// η̄(−1) = −1 times the printed closed form.
fn ac2() -> (bool, bool) {
    let alpha: Vec<_> = [2i64, 3, 5].iter().map(|&a| ffrtf::algebra::rint(a)).collect();
    let mut o = Outcome::new();
    let mut conflict = Vec::new();
    let mut conflict_is_exact_sign = true;
    let ramified_covers: [(u32, &[i64]); 5] =
        [(3, &[1, 0, 1]), (5, &[0, -1, 1]), (3, &[1, 0, 0, 0, 1]), (3, &[0, -1, 1]), (7, &[0, -1, 1])];
    for (p, f) in ramified_covers {
        let cv = cover(p, f);
        for pi in cv.ramified() {
            let checks = local_chars_ramified(&cv, pi, &alpha);
            let lp = LocalPlace::new(&cv, &Place::Finite(pi.clone())).unwrap();
            let eta_m1 = lp.eta_bar(lp.k.neg(lp.k.one()));
            if checks.iter().any(|c| !c.pass) && eta_m1 == -1 {
                conflict.push(format!("q={p} x={pi} (q_x={})", lp.q_x()));
                let printed = printed_j_ramified(&lp).unwrap().value.neg();
                for a in &alpha {
                    let rep = LocalRep::Unramified { alpha: a.clone() };
                    for f in [LocalTestFunction::Hsq, LocalTestFunction::Fsq] {
                        conflict_is_exact_sign &= act_and_char(&lp, &rep, &f).unwrap().value == printed;
                    }
                }
                o.checks += checks.len();
                o.failures.push(format!(
                    "q={p} x={pi}: computed = -(printed) at eta(-1) = -1, e.g. {} vs {}",
                    checks[0].left, checks[0].right
                ));
            } else {
                o.absorb(&format!("q={p} f={}", cv.f()), checks);
            }
        }
    }
    for (p, f, places) in [
        (3u32, &[1i64, 0, 1][..], vec![vec![0i64, 1], vec![-1, 1], vec![2, 1, 1]]),
        (5, &[0, -1, 1][..], vec![vec![-3, 1], vec![-2, 1], vec![2, 0, 1]]),
    ] {
        let cv = cover(p, f);
        for pl in places {
            o.absorb(&format!("q={p}"), local_chars_steinberg(&cv, &Poly::from_i64(field(p), &pl)));
        }
    }
    detail(&o);
    let what = if conflict.is_empty() {
        format!("local spherical characters ({} checks)", o.checks)
    } else {
        format!(
            "local spherical characters ({} checks): printed h/f closed form is off by eta_x(-1) at {}; \
             Steinberg identities and all q_x = 1 mod 4 places hold",
            o.checks,
            conflict.join(", ")
        )
    };
    let only_conflict = o.failures.len() == conflict.len();
    (line("AC2", o.pass(), &what), !conflict.is_empty() && conflict_is_exact_sign && only_conflict)
}

fn ac3() -> bool {
    let mut o = Outcome::new();
    for (p, f) in [(3u32, &[1i64, 0, 1][..]), (5, &[0, -1, 1]), (3, &[1, 0, 0, 0, 1]), (7, &[0, -1, 1])] {
        let cv = cover(p, f);
        o.absorb(&format!("q={p} f={}", cv.f()), eta_suite(&cv));
    }
    detail(&o);
    line("AC3", o.pass(), &format!("eta machinery ({} checks)", o.checks))
}

/// J's total mass at s = 0 has denominator dividing 2^ρ.
fn mass_denominator_ok(set: &Setting, dv: &Divisor) -> Check {
    let bound = num_bigint::BigInt::from(2u32).pow(set.rho() as u32);
    let bad = orbital_all(set, dv)
        .unwrap()
        .iter()
        .filter(|(_, _, j)| (&bound % j.eval_at_zero().denom()).abs() != num_bigint::BigInt::zero())
        .count();
    Check::new("mass-denominator", format!("D={dv}"), bad, 0)
}

fn ac4() -> bool {
    let mut o = Outcome::new();
    let mut visited = 0;
    let mut available = 0;
    for (name, set) in global_configs() {
        let (ds, total) = divisors(&set, |d| d.degree() >= m_threshold(&set));
        visited += ds.len();
        available += total;
        let mut widened = BTreeMap::new();
        for dv in &ds {
            o.absorb(&name, orbital_checks(&set, dv));
            o.absorb(&name, vec![mass_denominator_ok(&set, dv)]);
            // Stability of the local-product bounds: widen by 2 on one D per degree.
            if widened.insert(dv.degree(), ()).is_none() {
                let mut bad = 0;
                for (u, _, jx) in orbital_all(&set, dv).unwrap() {
                    if orbital_via_local_product(&set, dv, &u, 2).unwrap() != jx {
                        bad += 1;
                    }
                }
                o.absorb(&name, vec![Check::new("X=local(widen 2)", format!("D={dv}"), bad, 0)]);
            }
        }
    }
    detail(&o);
    let scope = if full() { "full".to_string() } else { format!("scoped: {visited} of {available} divisors") };
    line("AC4", o.pass(), &format!("flagship orbital identity, {scope} ({} checks)", o.checks))
}

fn ac5() -> bool {
    let mut o = Outcome::new();
    for (name, set) in global_configs() {
        if !set.sigma.minus.is_empty() && !set.sigma.plus.is_empty() {
            continue;
        }
        let (ds, _) = divisors(&set, |d| check_threshold(&set, d).is_ok());
        for dv in &ds {
            o.absorb(&name, regularized_checks(&set, dv));
        }
    }
    detail(&o);
    line("AC5", o.pass(), &format!("regularized orbits and tail vanishing ({} checks)", o.checks))
}

fn ac6() -> bool {
    let mut o = Outcome::new();
    for (name, set) in global_configs() {
        let (ds, _) = divisors(&set, |d| d.degree() >= m_threshold(&set));
        for dv in &ds {
            o.absorb(&name, m_vs_n_checks(&set, dv));
        }
    }
    detail(&o);
    line("AC6", o.pass(), &format!("count_M = sum of count_N over every base point ({} checks)", o.checks))
}

fn ac7() -> bool {
    let mut o = Outcome::new();
    for (name, set) in global_configs() {
        let (ds, _) = divisors(&set, |d| d.degree() >= m_threshold(&set) && check_threshold(&set, d).is_ok());
        for dv in &ds {
            o.absorb(&name, j_functional_checks(&set, dv));
        }
    }
    detail(&o);
    line("AC7", o.pass(), &format!("derivative functional, symbolic = weighted, r+ + r- <= 3 ({} checks)", o.checks))
}

fn ac8() -> bool {
    let cv = cover(3, &[1, 0, 0, 0, 1]);
    let mut o = Outcome::new();
    o.absorb("CFG-C", picard_sanity(&cv));
    detail(&o);
    line("AC8", o.pass(), &format!("|Pic0(X')(F_3)| = P(1) for f = {} ({} checks)", cv.f(), o.checks))
}

#[test]
fn acceptance_criteria() {
    let ac1 = ac1();
    let (ac2_pass, ac2_conflict) = ac2();
    let results = [("AC1", ac1), ("AC3", ac3()), ("AC4", ac4()), ("AC5", ac5()), ("AC6", ac6()), ("AC7", ac7()), ("AC8", ac8())];
    for (name, pass) in results {
        assert!(pass, "{name} failed");
    }
    // AC2 fails only through the η_x(−1) sign of the printed closed form,
    // and exactly by that sign.
    assert!(ac2_pass || ac2_conflict, "AC2 failed beyond the known sign conflict");
}

#[test]
fn orbital_vanishes_off_the_image() {
    // u = t⁵ is not inv_D of any base point when deg D = 1.
    let (_, set) = setting(3, &[1, 0, 1], &[], &[]);
    let k = set.field();
    let dv = Divisor::point(Place::Finite(Poly::from_i64(k, &[-1, 1])), 1);
    let u = ffrtf::orbital::FRat::new(Poly::t(k).pow(5), Poly::one(k)).unwrap();
    assert!(orbital_via_x(&set, &dv, &u).unwrap().is_zero());
}
