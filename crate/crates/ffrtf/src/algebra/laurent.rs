use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use super::{AlgebraError, CycloRat};

/// Coefficient ring tag carried by every [`BiLaurent`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Ring {
    Rational,
    Cyclo(u32),
}

impl fmt::Display for Ring {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ring::Rational => write!(f, "Q"),
            Ring::Cyclo(p) => write!(f, "Q(zeta_{p})"),
        }
    }
}

pub trait Coeff: Clone + PartialEq + fmt::Debug {
    fn ring(&self) -> Ring;
    fn zero_in(ring: Ring) -> Self;
    fn one_in(ring: Ring) -> Self;
    fn is_zero(&self) -> bool;
    fn add(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn neg(&self) -> Self;
    fn scale(&self, r: &BigRational) -> Self;
    fn render(&self) -> String;
    fn parse_in(ring: Ring, s: &str) -> Result<Self, AlgebraError>;
}

impl Coeff for BigRational {
    fn ring(&self) -> Ring {
        Ring::Rational
    }
    fn zero_in(_: Ring) -> Self {
        BigRational::zero()
    }
    fn one_in(_: Ring) -> Self {
        BigRational::one()
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn neg(&self) -> Self {
        -self
    }
    fn scale(&self, r: &BigRational) -> Self {
        self * r
    }
    fn render(&self) -> String {
        format!("{}/{}", self.numer(), self.denom())
    }
    fn parse_in(_: Ring, s: &str) -> Result<Self, AlgebraError> {
        parse_rational(s)
    }
}

impl Coeff for CycloRat {
    fn ring(&self) -> Ring {
        Ring::Cyclo(self.p())
    }
    fn zero_in(ring: Ring) -> Self {
        match ring {
            Ring::Cyclo(p) => CycloRat::zero(p),
            Ring::Rational => panic!("CycloRat requires a cyclotomic ring tag"),
        }
    }
    fn one_in(ring: Ring) -> Self {
        match ring {
            Ring::Cyclo(p) => CycloRat::one(p),
            Ring::Rational => panic!("CycloRat requires a cyclotomic ring tag"),
        }
    }
    fn is_zero(&self) -> bool {
        CycloRat::is_zero(self)
    }
    fn add(&self, o: &Self) -> Self {
        CycloRat::add(self, o)
    }
    fn mul(&self, o: &Self) -> Self {
        CycloRat::mul(self, o)
    }
    fn neg(&self) -> Self {
        CycloRat::neg(self)
    }
    fn scale(&self, r: &BigRational) -> Self {
        CycloRat::scale(self, r)
    }
    fn render(&self) -> String {
        self.to_string()
    }
    fn parse_in(ring: Ring, s: &str) -> Result<Self, AlgebraError> {
        let Ring::Cyclo(p) = ring else {
            return Err(AlgebraError::Parse("expected cyclotomic ring".into()));
        };
        let inner = s
            .strip_prefix('[')
            .and_then(|r| r.strip_suffix(']'))
            .ok_or_else(|| AlgebraError::Parse(format!("cyclotomic coefficient `{s}`")))?;
        let coeffs = inner.split(',').map(parse_rational).collect::<Result<Vec<_>, _>>()?;
        CycloRat::from_coeffs(p, coeffs)
    }
}

pub fn parse_rational(s: &str) -> Result<BigRational, AlgebraError> {
    let bad = || AlgebraError::Parse(format!("rational `{s}`"));
    let (n, d) = match s.split_once('/') {
        Some((n, d)) => (n, d),
        None => (s, "1"),
    };
    let valid = |t: &str, signed: bool| {
        let t = if signed { t.strip_prefix('-').unwrap_or(t) } else { t };
        !t.is_empty() && t.len() <= 4096 && t.bytes().all(|b| b.is_ascii_digit())
    };
    if !valid(n, true) || !valid(d, false) {
        return Err(bad());
    }
    let n: BigInt = n.parse().map_err(|_| bad())?;
    let d: BigInt = d.parse().map_err(|_| bad())?;
    if d.is_zero() {
        return Err(bad());
    }
    Ok(BigRational::new(n, d))
}

/// Exact Laurent polynomial in Q1 = q^{s1}, Q2 = q^{s2}.
#[derive(Clone, Debug, PartialEq)]
pub struct BiLaurent<C: Coeff = BigRational> {
    ring: Ring,
    terms: BTreeMap<(i64, i64), C>,
}

impl<C: Coeff> BiLaurent<C> {
    pub fn zero(ring: Ring) -> Self {
        BiLaurent { ring, terms: BTreeMap::new() }
    }

    pub fn one(ring: Ring) -> Self {
        Self::monomial(C::one_in(ring), 0, 0)
    }

    pub fn monomial(c: C, a: i64, b: i64) -> Self {
        let ring = c.ring();
        let mut out = BiLaurent::zero(ring);
        if !c.is_zero() {
            out.terms.insert((a, b), c);
        }
        out
    }

    pub fn ring(&self) -> Ring {
        self.ring
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&(i64, i64), &C)> {
        self.terms.iter()
    }

    pub fn coeff(&self, a: i64, b: i64) -> C {
        self.terms.get(&(a, b)).cloned().unwrap_or_else(|| C::zero_in(self.ring))
    }

    pub fn add_term(&mut self, a: i64, b: i64, c: &C) {
        if c.is_zero() {
            return;
        }
        let slot = self.terms.entry((a, b)).or_insert_with(|| C::zero_in(self.ring));
        *slot = slot.add(c);
        if slot.is_zero() {
            self.terms.remove(&(a, b));
        }
    }

    fn check(&self, o: &Self) -> Result<(), AlgebraError> {
        if self.ring != o.ring {
            return Err(AlgebraError::MixedRings(self.ring, o.ring));
        }
        Ok(())
    }

    pub fn try_add(&self, o: &Self) -> Result<Self, AlgebraError> {
        self.check(o)?;
        let mut out = self.clone();
        for ((a, b), c) in &o.terms {
            out.add_term(*a, *b, c);
        }
        Ok(out)
    }

    pub fn try_mul(&self, o: &Self) -> Result<Self, AlgebraError> {
        self.check(o)?;
        let mut out = BiLaurent::zero(self.ring);
        for ((a1, b1), c1) in &self.terms {
            for ((a2, b2), c2) in &o.terms {
                out.add_term(a1 + a2, b1 + b2, &c1.mul(c2));
            }
        }
        Ok(out)
    }

    pub fn add(&self, o: &Self) -> Self {
        self.try_add(o).expect("same coefficient ring")
    }

    pub fn mul(&self, o: &Self) -> Self {
        self.try_mul(o).expect("same coefficient ring")
    }

    pub fn neg(&self) -> Self {
        BiLaurent { ring: self.ring, terms: self.terms.iter().map(|(k, c)| (*k, c.neg())).collect() }
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.neg())
    }

    pub fn scalar(&self, c: &C) -> Self {
        let mut out = BiLaurent::zero(self.ring);
        for ((a, b), x) in &self.terms {
            out.add_term(*a, *b, &x.mul(c));
        }
        out
    }

    pub fn scale(&self, r: &BigRational) -> Self {
        let mut out = BiLaurent::zero(self.ring);
        for ((a, b), x) in &self.terms {
            out.add_term(*a, *b, &x.scale(r));
        }
        out
    }

    /// Multiply by Q1^a Q2^b.
    pub fn shift(&self, a: i64, b: i64) -> Self {
        BiLaurent { ring: self.ring, terms: self.terms.iter().map(|((x, y), c)| ((x + a, y + b), c.clone())).collect() }
    }

    /// Value at s1 = s2 = 0: the sum of the coefficients.
    pub fn eval_at_zero(&self) -> C {
        self.terms.values().fold(C::zero_in(self.ring), |acc, c| acc.add(c))
    }

    /// Terms in lexicographic (a, b) order, each `c*Q1^a*Q2^b`, joined by ` + `.
    pub fn canonical(&self) -> String {
        if self.terms.is_empty() {
            return "0".to_string();
        }
        self.terms
            .iter()
            .map(|((a, b), c)| format!("{}*Q1^{a}*Q2^{b}", c.render()))
            .collect::<Vec<_>>()
            .join(" + ")
    }

    pub fn parse(ring: Ring, s: &str) -> Result<Self, AlgebraError> {
        let s = s.trim();
        let mut out = BiLaurent::zero(ring);
        if s == "0" {
            return Ok(out);
        }
        let mut last: Option<(i64, i64)> = None;
        for term in s.split(" + ") {
            let bad = || AlgebraError::Parse(format!("term `{term}`"));
            let (rest, b) = term.rsplit_once("*Q2^").ok_or_else(bad)?;
            let (c, a) = rest.rsplit_once("*Q1^").ok_or_else(bad)?;
            let a: i64 = a.parse().map_err(|_| bad())?;
            let b: i64 = b.parse().map_err(|_| bad())?;
            let c = C::parse_in(ring, c)?;
            if c.is_zero() || last.is_some_and(|l| l >= (a, b)) {
                return Err(AlgebraError::Parse(format!("non-canonical term `{term}`")));
            }
            last = Some((a, b));
            out.terms.insert((a, b), c);
        }
        Ok(out)
    }
}

impl BiLaurent<BigRational> {
    pub fn rational_zero() -> Self {
        BiLaurent::zero(Ring::Rational)
    }

    /// Promote to a cyclotomic coefficient ring.
    pub fn promote(&self, p: u32) -> BiLaurent<CycloRat> {
        let mut out = BiLaurent::zero(Ring::Cyclo(p));
        for ((a, b), c) in &self.terms {
            out.add_term(*a, *b, &CycloRat::from_rational(p, c.clone()));
        }
        out
    }
}

impl<C: Coeff> fmt::Display for BiLaurent<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.canonical())
    }
}

/// Σ c·a^{r+}·b^{r-} over the terms c·Q1^a·Q2^b: the (log q)-normalized
/// mixed derivative at s1 = s2 = 0.
pub fn derivative_functional(p: &BiLaurent<BigRational>, r_plus: u32, r_minus: u32) -> BigRational {
    let mut acc = BigRational::zero();
    for ((a, b), c) in p.terms() {
        let w = BigInt::from(*a).pow(r_plus) * BigInt::from(*b).pow(r_minus);
        acc += c * BigRational::from_integer(w);
    }
    acc
}
