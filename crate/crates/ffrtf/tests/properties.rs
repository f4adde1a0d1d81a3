use num_bigint::BigInt;
use num_rational::BigRational;
use proptest::prelude::*;

use ffrtf::algebra::{BiLaurent, Poly, PrimeField, Ring};
use ffrtf::config::parse;
use ffrtf::places::{eta_global, DoubleCover, LocalElement, Place, SqrtRClass, SplitType};

fn covers() -> Vec<(u32, Vec<i64>)> {
    vec![(3, vec![1, 0, 1]), (5, vec![0, -1, 1]), (3, vec![1, 0, 0, 0, 1]), (7, vec![1, 0, 1]), (5, vec![2, 0, 1])]
}

fn poly(p: u32, c: &[i64]) -> Poly {
    Poly::from_i64(PrimeField::new(p).unwrap(), c)
}

fn places_of(polys: &[&Poly]) -> Vec<Place> {
    let mut out = vec![Place::Infinity];
    for g in polys {
        for (pi, _) in g.factor().unwrap().factors {
            let x = Place::Finite(pi);
            if !out.contains(&x) {
                out.push(x);
            }
        }
    }
    out
}

fn nonzero_poly(max_len: usize) -> impl Strategy<Value = Vec<i64>> {
    prop::collection::vec(0i64..7, 1..=max_len).prop_filter("nonzero", |c| c.iter().any(|&a| a != 0))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Hilbert reciprocity, computed from canonical local symbols, and η on
    /// the principal class, computed from the chosen uniformizers, are both 1.
    #[test]
    fn reciprocity_two_routes(ci in 0usize..5, num in nonzero_poly(5), den in nonzero_poly(4)) {
        let (p, fc) = &covers()[ci];
        let cover = DoubleCover::new(poly(*p, fc)).unwrap();
        let (num, den) = (poly(*p, &num), poly(*p, &den));
        prop_assume!(!num.is_zero() && !den.is_zero());
        let mut product = 1i8;
        for x in places_of(&[&num, &den, cover.f()]) {
            let z = LocalElement::from_rational(&x, &num, &den, 2).unwrap();
            product *= cover.eta_local(&z).unwrap();
        }
        prop_assert_eq!(product, 1);
        let class = SqrtRClass::principal(&cover, &num, &den).unwrap();
        prop_assert_eq!(eta_global(&cover, &class), 1);
    }

    /// η_x(ϖ) at an unramified x does not depend on the uniformizer chosen.
    #[test]
    fn unramified_sign_ignores_uniformizer(ci in 0usize..5, deg in 1usize..=2, pick in 0usize..64, unit in nonzero_poly(4)) {
        let (p, fc) = &covers()[ci];
        let cover = DoubleCover::new(poly(*p, fc)).unwrap();
        let k = cover.field();
        let irr: Vec<Poly> = Poly::monics(k, deg).filter(Poly::is_irreducible).collect();
        let pi = irr[pick % irr.len()].clone();
        let x = Place::Finite(pi.clone());
        prop_assume!(!cover.is_ramified(&x));
        let u = poly(*p, &unit);
        prop_assume!(!u.rem(&pi).is_zero());
        let other = LocalElement::from_poly(&x, &pi.mul(&u), 2).unwrap();
        let expect = if cover.splitting_type(&x) == SplitType::Split { 1 } else { -1 };
        prop_assert_eq!(cover.eta_local(&other).unwrap(), expect);
        prop_assert_eq!(cover.eta_uniformizer(&x), expect);
    }

    #[test]
    fn bilaurent_canonical_roundtrip(terms in prop::collection::vec((-6i64..6, -6i64..6, -40i64..40, 1i64..12), 0..8)) {
        let mut x = BiLaurent::zero(Ring::Rational);
        for (a, b, n, d) in terms {
            let c = BigRational::new(BigInt::from(n), BigInt::from(d));
            x = x.add(&BiLaurent::monomial(c, a, b));
        }
        let s = x.canonical();
        let y = BiLaurent::parse(Ring::Rational, &s).unwrap();
        prop_assert_eq!(&y, &x);
        prop_assert_eq!(y.canonical(), s);
    }

    #[test]
    fn config_canonical_roundtrip(
        ci in 0usize..2,
        single in any::<bool>(),
        mult in 1u32..4,
        max_deg in 0usize..4,
        suites in prop::sample::subsequence(vec!["local-lemmas", "eta", "orbital-vs-N", "M-vs-N", "picard-sanity"], 0..=5),
        alpha in prop::collection::vec((1i64..9, 1i64..9), 1..4),
    ) {
        let (q, f, sig) = [(3, "t^2+1", "sigma_plus = t"), (5, "t^2-t", "sigma_minus = t-2")][ci];
        let d = if single { format!("D = t+1^{mult}") } else { format!("max_deg = {max_deg}") };
        let alpha: Vec<String> = alpha.iter().map(|(n, d)| format!("{n}/{d}")).collect();
        let src = format!(
            "version = 1\nq = {q}\nf = {f}\n{sig}\n{d}\nsuites = {}\nalpha = {}\n",
            suites.join(", "),
            alpha.join(", ")
        );
        let cfg = parse(&src).unwrap();
        let canon = cfg.canonical();
        prop_assert_eq!(parse(&canon).unwrap().canonical(), canon);
    }
}
