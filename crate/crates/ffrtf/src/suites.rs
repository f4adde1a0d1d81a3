//! The verification suites behind `ffrtf run`.

use std::collections::{BTreeMap, BTreeSet};
use std::thread;

use num_rational::BigRational;

use crate::algebra::{rint, BiLaurent, CycloRat, ExtField, Poly};
use crate::config::{ConfigError, DivisorChoice, RunConfig, Suite};
use crate::local::{
    act_and_char, characterize_fsq, gauss_eps, h_sq, printed_j_minus, printed_j_plus, printed_j_ramified,
    verify_hf_decomposition, xi_fiber, xi_pushforward, LocalPlace, LocalRep, LocalTestFunction,
};
use crate::moduli::{class_group, count_n, MEngine, NMode, Setting};
use crate::orbital::{
    check_threshold, hat_counts, j_functional_table, orbital_all, orbital_regularized, orbital_via_local_product,
    orbital_via_x, tail_window, truncation_window, u_samples, FRat, PointU,
};
use crate::picard::{gerbe_cardinality, RamifiedResidues};
use crate::places::{
    eta_global, hilbert_symbol, DoubleCover, Divisor, LocalElement, Place, SplitType, SqrtRClass,
};
use crate::report::{Check, Report, SuiteResult};

/// Satake samples used when the config names none.
pub const DEFAULT_ALPHA: [i64; 3] = [2, 3, 5];

/// Largest residue field at R for the exhaustive Mat₂(𝒪/𝔪²) tables.
pub const MAX_TABLE_Q: u64 = 9;

/// Mismatches listed individually before a suite stops itemizing them.
const MAX_LISTED: usize = 8;

/// Refuses configurations whose selected suites have unmet preconditions.
pub fn validate(cfg: &RunConfig) -> Result<(), ConfigError> {
    let set = cfg.setting();
    let g = set.cover.genus();
    let single = match &cfg.divisors {
        DivisorChoice::Single(d) => Some(d),
        DivisorChoice::Sweep { .. } => None,
    };
    for s in &cfg.suites {
        match s {
            Suite::MVsN => {
                if g != 0 {
                    return Err(ConfigError::Precondition(format!("M-vs-N needs g′ = 0, got g′ = {g}")));
                }
                if let Some(d) = single {
                    let need = m_threshold(&set);
                    if d.degree() < need {
                        return Err(ConfigError::Precondition(format!(
                            "M-vs-N needs d ≥ max(2g′−1+N, 2g) = {need}, got d = {}",
                            d.degree()
                        )));
                    }
                }
            }
            Suite::Regularized => {
                if let Some(d) = single {
                    check_threshold(&set, d).map_err(|e| ConfigError::Precondition(format!("regularized: {e}")))?;
                }
            }
            Suite::LocalLemmas | Suite::LocalChars => {
                let k = set.field();
                if let Some(big) = set.cover.ramified().iter().map(|pi| Place::Finite(pi.clone()).residue_size(k)).max() {
                    if big > MAX_TABLE_Q {
                        return Err(ConfigError::Precondition(format!(
                            "{s} needs q_x ≤ {MAX_TABLE_Q} at every x ∈ R, got q_x = {big}"
                        )));
                    }
                }
            }
            Suite::PicardSanity if g > 1 => {
                return Err(ConfigError::Precondition(format!("picard-sanity needs g′ ≤ 1, got g′ = {g}")));
            }
            _ => {}
        }
    }
    Ok(())
}

fn m_threshold(set: &Setting) -> i64 {
    (set.sigma.n() as i64 - 1).max(0)
}

/// Validates, then runs every selected suite (concurrently when `parallel`)
/// and assembles the report in suite order.
pub fn run(cfg: &RunConfig, parallel: bool) -> Result<Report, ConfigError> {
    validate(cfg)?;
    let results: Vec<SuiteResult> = if parallel {
        thread::scope(|sc| {
            let handles: Vec<_> = cfg.suites.iter().map(|&s| sc.spawn(move || run_suite(cfg, s))).collect();
            handles.into_iter().map(|h| h.join().expect("suite thread panicked")).collect()
        })
    } else {
        cfg.suites.iter().map(|&s| run_suite(cfg, s)).collect()
    };
    Ok(Report::new(cfg.canonical(), results))
}

pub fn run_suite(cfg: &RunConfig, suite: Suite) -> SuiteResult {
    let set = cfg.setting();
    let checks = match suite {
        Suite::LocalLemmas => local_lemmas(&set.cover),
        Suite::LocalChars => local_chars(&set, &alpha_samples(cfg)),
        Suite::Eta => eta_suite(&set.cover),
        Suite::OrbitalVsN => orbital_vs_n(&set, &cfg.divisor_list()),
        Suite::Regularized => regularized(&set, &cfg.divisor_list()),
        Suite::MVsN => m_vs_n(&set, &cfg.divisor_list()),
        Suite::PicardSanity => picard_sanity(&set.cover),
    };
    SuiteResult::new(suite.name(), checks)
}

fn alpha_samples(cfg: &RunConfig) -> Vec<BigRational> {
    if cfg.alpha.is_empty() {
        DEFAULT_ALPHA.iter().map(|&a| rint(a)).collect()
    } else {
        cfg.alpha.clone()
    }
}

fn shown<T: ToString, E: ToString>(r: Result<T, E>) -> String {
    match r {
        Ok(v) => v.to_string(),
        Err(e) => format!("error: {}", e.to_string()),
    }
}

// ---------------------------------------------------------------------------
// Local suites.

/// Number of matrices in Mat₂(𝒪/𝔪²) with v(det) = 1: rank-one residues times
/// the lifts whose determinant has a nonzero ϖ-coefficient.
pub fn support_size(q: u64) -> u64 {
    (q + 1) * (q * q - 1) * q.pow(3) * (q - 1)
}

/// The distinct residue fields k(x), x ∈ R, in order of first appearance.
fn ramified_fields(cover: &DoubleCover) -> Vec<(Poly, ExtField)> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for pi in cover.ramified() {
        if seen.insert(pi.degree()) {
            out.push((pi.clone(), ExtField::new(pi).expect("irreducible factor of f")));
        }
    }
    out
}

pub fn local_lemmas_for(k: &ExtField) -> Vec<Check> {
    let q = k.size();
    let inputs = format!("q_x={q}");
    let ones = [k.one(); 4];
    vec![
        Check::new("xi-pushforward", &inputs, shown(xi_pushforward(k).map(|(_, n)| n)), support_size(q as u64)),
        Check::new("xi-all-units-stalk", &inputs, xi_fiber(k, &ones), 8),
        Check::new("h-sq-all-units", &inputs, h_sq(k, &ones), 8),
        Check::new("f-sq-eigenspace-dim", &inputs, shown(characterize_fsq(k)), 1),
        Check::new("h-f-decomposition", &inputs, shown(verify_hf_decomposition(k).map(|_| "holds")), "holds"),
    ]
}

fn local_lemmas(cover: &DoubleCover) -> Vec<Check> {
    ramified_fields(cover).iter().flat_map(|(_, k)| local_lemmas_for(k)).collect()
}

/// First monic irreducible of each degree in 1..=2 off R ∪ Σ, after the Σ places.
fn steinberg_places(set: &Setting) -> Vec<Poly> {
    let mut out: Vec<Poly> = set.sigma.plus.iter().chain(&set.sigma.minus).cloned().collect();
    for d in 1..=2 {
        if let Some(pi) = Poly::monics(set.field(), d)
            .find(|p| p.is_irreducible() && !set.cover.ramified().contains(p) && !out.contains(p))
        {
            out.push(pi);
        }
    }
    out
}

pub fn local_chars_ramified(cover: &DoubleCover, pi: &Poly, alpha: &[BigRational]) -> Vec<Check> {
    let lp = match LocalPlace::new(cover, &Place::Finite(pi.clone())) {
        Ok(lp) => lp,
        Err(e) => return vec![Check::new("local-place", pi.to_string(), format!("error: {e}"), "ok")],
    };
    let printed = shown(printed_j_ramified(&lp));
    let mut out = Vec::new();
    for a in alpha {
        let rep = LocalRep::Unramified { alpha: a.clone() };
        let inputs = format!("x={pi} q_x={} alpha={a}", lp.q_x());
        for (id, f) in [("J(h_sq)", LocalTestFunction::Hsq), ("J(f_sq)", LocalTestFunction::Fsq)] {
            out.push(Check::new(id, &inputs, shown(act_and_char(&lp, &rep, &f)), &printed));
        }
    }
    out
}

pub fn local_chars_steinberg(cover: &DoubleCover, pi: &Poly) -> Vec<Check> {
    let lp = match LocalPlace::new(cover, &Place::Finite(pi.clone())) {
        Ok(lp) => lp,
        Err(e) => return vec![Check::new("local-place", pi.to_string(), format!("error: {e}"), "ok")],
    };
    let mut out = Vec::new();
    for chi in [1i8, -1] {
        let rep = LocalRep::Steinberg { chi };
        let inputs = format!("x={pi} q_x={} chi={chi}", lp.q_x());
        out.push(Check::new("J(1_Iw)", &inputs, shown(act_and_char(&lp, &rep, &LocalTestFunction::Iw)), printed_j_plus(&lp)));
        out.push(Check::new(
            "J(1_Iw.w)",
            &inputs,
            shown(act_and_char(&lp, &rep, &LocalTestFunction::IwW)),
            printed_j_minus(&lp, chi),
        ));
    }
    out
}

fn local_chars(set: &Setting, alpha: &[BigRational]) -> Vec<Check> {
    let mut out = Vec::new();
    for pi in set.cover.ramified() {
        out.extend(local_chars_ramified(&set.cover, pi, alpha));
    }
    for pi in steinberg_places(set) {
        out.extend(local_chars_steinberg(&set.cover, &pi));
    }
    out
}

// ---------------------------------------------------------------------------
// η machinery.

/// Whether x splits, read off from y² = f(θ_x) (∞ through the leading coefficient).
fn splits_by_points(cover: &DoubleCover, place: &Place) -> i8 {
    match place {
        Place::Infinity => cover.field().legendre(cover.f().lc()),
        Place::Finite(pi) => {
            let k = ExtField::new(pi).expect("irreducible");
            k.legendre(k.from_poly(&cover.f().rem(pi)))
        }
    }
}

pub fn eta_suite(cover: &DoubleCover) -> Vec<Check> {
    let k = cover.field();
    let mut out = Vec::new();
    let one = Poly::one(k);
    let mut principal = |label: String, num: &Poly, den: &Poly| {
        let v = shown(SqrtRClass::principal(cover, num, den).map(|c| eta_global(cover, &c)));
        out.push(Check::new("product-formula", label, v, 1));
    };
    for a in k.elements() {
        let lin = Poly::linear(k, a);
        principal(format!("({lin})^1"), &lin, &one);
        principal(format!("({lin})^-1"), &one, &lin);
    }
    principal(format!("f={}", cover.f()), cover.f(), &one);

    // Places of degree ≤ 2 and ∞, the building blocks of the classes below.
    let mut places = vec![Place::Infinity];
    for d in 1..=2 {
        places.extend(Poly::monics(k, d).filter(Poly::is_irreducible).map(Place::Finite));
    }
    for p in &places {
        if cover.is_ramified(p) {
            continue;
        }
        let c = SqrtRClass::uniformizer_power(cover, p.clone(), -1);
        let expect = match cover.splitting_type(p) {
            SplitType::Split => 1,
            SplitType::Inert => -1,
            SplitType::Ramified => unreachable!(),
        };
        out.push(Check::new("split-inert", format!("x={p}"), eta_global(cover, &c), expect));
        out.push(Check::new("split-by-points", format!("x={p}"), splits_by_points(cover, p), expect));
    }

    let mut classes: Vec<(String, SqrtRClass)> = places
        .iter()
        .take(6)
        .map(|p| (format!("ϖ[{p}]"), SqrtRClass::uniformizer_power(cover, p.clone(), 1)))
        .collect();
    for pi in cover.ramified() {
        let signs = BTreeMap::from([(pi.clone(), -1i8)]);
        let c = SqrtRClass::new(cover, BTreeMap::new(), signs).expect("ramified sign");
        classes.push((format!("sign[{pi}]"), c));
    }
    for (i, (la, a)) in classes.iter().enumerate() {
        for (lb, b) in &classes[i..] {
            let left = eta_global(cover, &a.mul(b));
            let right = eta_global(cover, a) * eta_global(cover, b);
            out.push(Check::new("eta-global-multiplicative", format!("{la}*{lb}"), left, right));
        }
    }

    for pi in cover.ramified() {
        out.push(eta_local_multiplicativity(cover, pi));
        let place = Place::Finite(pi.clone());
        if let Ok(lp) = LocalPlace::new(cover, &place) {
            let eps = lp.eta_bar(lp.k.neg(1)) as i64 * lp.q_x() as i64;
            let left = shown(gauss_eps(&lp).map(|g| g.mul(&g)));
            out.push(Check::new("gauss-square", format!("x={pi}"), left, CycloRat::from_rational(lp.p(), rint(eps))));
        }
    }
    let res = RamifiedResidues::new(cover);
    out.push(Check::new("gerbe-groupoid-count", "rigidified", gerbe_cardinality(&res, cover.q(), true), 1));
    out
}

/// (zw, f)_x = (z, f)_x·(w, f)_x over units u₀ + u₁ϖ and their ϖ-multiples.
fn eta_local_multiplicativity(cover: &DoubleCover, pi: &Poly) -> Check {
    let place = Place::Finite(pi.clone());
    let k = ExtField::new(pi).expect("irreducible");
    let prec = 3;
    let mut elems = Vec::new();
    for u0 in k.units() {
        for lift in [false, true] {
            let unit = if lift { k.to_poly(u0).add(pi) } else { k.to_poly(u0) };
            for e in 0..2u32 {
                let g = unit.mul(&pi.pow(e));
                elems.push(LocalElement::from_poly(&place, &g, prec).expect("nonzero"));
            }
        }
    }
    let fx = LocalElement::from_poly(&place, cover.f(), prec + 2).expect("f ≠ 0");
    let sym = |z: &LocalElement| hilbert_symbol(z, &fx);
    let mut bad = 0usize;
    for a in &elems {
        for b in &elems {
            match (sym(&a.mul(b)), sym(a), sym(b)) {
                (Ok(ab), Ok(x), Ok(y)) if ab == x * y => {}
                _ => bad += 1,
            }
        }
    }
    let n = elems.len() * elems.len();
    Check::new("eta-local-multiplicative", format!("x={pi} pairs={n}"), format!("failures={bad}"), "failures=0")
}

// ---------------------------------------------------------------------------
// Global suites.

fn mismatch_checks(id: &str, inputs: &str, total: usize, bad: Vec<(String, String, String)>) -> Vec<Check> {
    let mut out = vec![Check::new(id, inputs, format!("agree={}", total - bad.len()), format!("agree={total}"))];
    for (label, l, r) in bad.into_iter().take(MAX_LISTED) {
        out.push(Check::new(format!("{id}/detail"), format!("{inputs} {label}"), l, r));
    }
    out
}

/// X route against the 𝒩 count and against the local product, per D.
pub fn orbital_checks(set: &Setting, dv: &Divisor) -> Vec<Check> {
    let inputs = format!("D={dv}");
    let all = match orbital_all(set, dv) {
        Ok(a) => a,
        Err(e) => return vec![Check::new("orbital-X", inputs, format!("error: {e}"), "ok")],
    };
    let mut bad_n = Vec::new();
    let mut bad_l = Vec::new();
    for (u, base, jx) in &all {
        let jn = shown(count_n(set, base, NMode::Standard).map(|c| c.generating().canonical()));
        let jl = shown(orbital_via_local_product(set, dv, u, 0).map(|j| j.canonical()));
        let jx = jx.canonical();
        if jx != jn {
            bad_n.push((format!("u={u}"), jx.clone(), jn));
        }
        if jx != jl {
            bad_l.push((format!("u={u}"), jx, jl));
        }
    }
    let mut out = mismatch_checks("X=N", &inputs, all.len(), bad_n);
    out.extend(mismatch_checks("X=local", &inputs, all.len(), bad_l));

    let image: BTreeSet<&FRat> = all.iter().map(|(u, _, _)| u).collect();
    let mut outside = 0;
    let mut bad_z = Vec::new();
    for u in u_samples(set.field(), 2) {
        if u.is_zero() || image.contains(&u) {
            continue;
        }
        outside += 1;
        let j = shown(orbital_via_x(set, dv, &u).map(|j| j.canonical()));
        if j != "0" {
            bad_z.push((format!("u={u}"), j, "0".to_string()));
        }
    }
    out.extend(mismatch_checks("J=0-off-image", &format!("{inputs} height<=2"), outside, bad_z));
    out
}

/// Symbolic against weighted 𝕁, and the Σ₊ ↔ Σ₋ parity, for r₊ + r₋ ≤ 3.
pub fn j_functional_checks(set: &Setting, dv: &Divisor) -> Vec<Check> {
    let orders: Vec<(u32, u32)> = (0..=3u32).flat_map(|rp| (0..=3 - rp).map(move |rm| (rp, rm))).collect();
    let flipped: Vec<(u32, u32)> = orders.iter().map(|&(a, b)| (b, a)).collect();
    let inputs = format!("D={dv}");
    let (ours, theirs) = match (j_functional_table(set, dv, &orders), j_functional_table(&set.swapped(), dv, &flipped)) {
        (Ok(a), Ok(b)) => (a, b),
        (a, b) => {
            let e = a.err().or(b.err()).expect("one side failed");
            return vec![Check::new("J-functional", inputs, format!("error: {e}"), "ok")];
        }
    };
    let mut out = Vec::new();
    for (((rp, rm), sym, w), (_, sym_sw, _)) in ours.iter().zip(&theirs) {
        let inputs = format!("{inputs} r+={rp} r-={rm}");
        out.push(Check::new("J-symbolic=weighted", &inputs, sym, w));
        out.push(Check::new("J-parity", &inputs, sym, sym_sw));
    }
    out
}

fn orbital_vs_n(set: &Setting, divisors: &[Divisor]) -> Vec<Check> {
    let mut out = Vec::new();
    for dv in divisors {
        out.extend(orbital_checks(set, dv));
        if check_threshold(set, dv).is_ok() {
            out.extend(j_functional_checks(set, dv));
        }
    }
    out
}

/// Regularized u ∈ {0, ∞} against the N̂-side, plus the vanishing tail.
pub fn regularized_checks(set: &Setting, dv: &Divisor) -> Vec<Check> {
    let mut out = Vec::new();
    let cases = [(PointU::Zero, set.sigma.minus.is_empty()), (PointU::Infinity, set.sigma.plus.is_empty())];
    for (u, applies) in cases {
        if !applies {
            continue;
        }
        let inputs = format!("D={dv} u={u}");
        let sum = |w| {
            hat_counts(set, dv, &u, w)
                .map(|cs| cs.iter().fold(BiLaurent::rational_zero(), |acc, c| acc.add(&c.generating())))
        };
        let reg = shown(orbital_regularized(set, dv, &u).map(|j| j.canonical()));
        out.push(Check::new("regularized=N-hat", &inputs, reg, shown(sum(truncation_window(set)).map(|j| j.canonical()))));
        let tail = hat_counts(set, dv, &u, tail_window(set)).map(|cs| {
            cs.iter().map(|c| c.generating().canonical()).collect::<Vec<_>>().join(";")
        });
        let (lo, hi) = tail_window(set);
        out.push(Check::new("tail-vanishes", format!("{inputs} window=[{lo},{hi}]"), shown(tail), "0;0"));
    }
    out
}

fn regularized(set: &Setting, divisors: &[Divisor]) -> Vec<Check> {
    divisors.iter().filter(|d| check_threshold(set, d).is_ok()).flat_map(|d| regularized_checks(set, d)).collect()
}

/// count_M against Σ_{d̲} count_N over every base point of 𝒜♭_D.
pub fn m_vs_n_checks(set: &Setting, dv: &Divisor) -> Vec<Check> {
    let inputs = format!("D={dv}");
    let n = dv.degree() as usize + set.rho();
    let engine = match MEngine::new(set, n) {
        Ok(e) => e,
        Err(e) => return vec![Check::new("M=sum-N", inputs, format!("error: {e}"), "ok")],
    };
    let bases = match crate::moduli::enumerate_base(set, dv) {
        Ok(b) => b,
        Err(e) => return vec![Check::new("M=sum-N", inputs, format!("error: {e}"), "ok")],
    };
    let mut bad = Vec::new();
    for base in &bases {
        let m = shown(engine.count(base));
        let nsum = shown(count_n(set, base, NMode::Standard).map(|c| c.total()));
        if m != nsum {
            bad.push((format!("a={} b={}", base.a, base.b), m, nsum));
        }
    }
    mismatch_checks("M=sum-N", &inputs, bases.len(), bad)
}

fn m_vs_n(set: &Setting, divisors: &[Divisor]) -> Vec<Check> {
    let need = m_threshold(set);
    divisors.iter().filter(|d| d.degree() >= need).flat_map(|d| m_vs_n_checks(set, d)).collect()
}

pub fn picard_sanity(cover: &DoubleCover) -> Vec<Check> {
    let inputs = format!("f={} g'={}", cover.f(), cover.genus());
    match class_group(cover) {
        Ok(pic) => {
            let (p1, n2_ok) = pic.l_value(cover.q() as u64);
            vec![
                Check::new("pic0-order=P(1)", &inputs, pic.order(), p1),
                Check::new("points-over-F_q2", &inputs, n2_ok, true),
            ]
        }
        Err(e) => vec![Check::new("pic0-order=P(1)", inputs, format!("error: {e}"), "ok")],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse;

    #[test]
    fn empty_suite_list_is_an_empty_passing_report() {
        let mut cfg = parse("q = 3\nf = t^2+1\nD = 0").unwrap();
        cfg.suites.clear();
        let r = run(&cfg, true).unwrap();
        assert!(r.passed());
        assert_eq!(r.summary.checks, 0);
    }

    #[test]
    fn support_size_matches_enumeration() {
        let k = ExtField::new(&Poly::t(crate::algebra::PrimeField::new(3).unwrap())).unwrap();
        assert_eq!(support_size(3), xi_pushforward(&k).unwrap().1);
    }

    #[test]
    fn threshold_refusals() {
        let cfg = parse("q = 5\nf = t^2-t\nsigma_plus = t-3\nsigma_minus = t-2\nD = 0\nsuites = M-vs-N").unwrap();
        let e = run(&cfg, false).unwrap_err();
        assert!(e.to_string().contains("d ≥ max(2g′−1+N, 2g) = 1"), "{e}");
        let cfg = parse("q = 3\nf = t^4+t+1\nD = 0\nsuites = M-vs-N").unwrap();
        assert!(run(&cfg, false).unwrap_err().to_string().contains("g′ = 0"));
    }
}
