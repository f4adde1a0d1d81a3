//! The base curve ℙ¹ over F_q, its places, completions, the quadratic cover
//! y² = f(t) and the character η attached to it.

use std::collections::BTreeMap;
use std::fmt;

use crate::algebra::{AlgebraError, Poly, PrimeField};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PlaceError {
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error("local element known only to precision {have}, query needs {need}")]
    Precision { have: u32, need: u32 },
    #[error("zero has no leading coefficient")]
    ZeroElement,
    #[error("{0} is not a monic irreducible polynomial")]
    NotAPlace(String),
    #[error("invalid cover: {0}")]
    BadCover(String),
    #[error("invalid Σ data: {0}")]
    BadSigma(String),
}

/// A closed point of ℙ¹: a monic irreducible π_x(t), or ∞.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Place {
    Finite(Poly),
    Infinity,
}

impl Place {
    pub fn finite(pi: Poly) -> Result<Place, PlaceError> {
        if !pi.is_monic() || !pi.is_irreducible() {
            return Err(PlaceError::NotAPlace(pi.to_string()));
        }
        Ok(Place::Finite(pi))
    }

    pub fn degree(&self) -> usize {
        match self {
            Place::Finite(pi) => pi.degree(),
            Place::Infinity => 1,
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, Place::Infinity)
    }

    pub fn poly(&self) -> Option<&Poly> {
        match self {
            Place::Finite(pi) => Some(pi),
            Place::Infinity => None,
        }
    }

    /// Order of a nonzero polynomial at this place (−deg at ∞).
    pub fn valuation(&self, g: &Poly) -> i64 {
        match self {
            Place::Finite(pi) => g.valuation(pi) as i64,
            Place::Infinity => -(g.degree() as i64),
        }
    }

    /// Residue-field cardinality q_x.
    pub fn residue_size(&self, field: PrimeField) -> u64 {
        (field.p() as u64).pow(self.degree() as u32)
    }

    pub fn parse(field: PrimeField, s: &str) -> Result<Place, PlaceError> {
        if s.trim() == "inf" {
            return Ok(Place::Infinity);
        }
        Place::finite(Poly::parse(field, s)?)
    }
}

impl fmt::Display for Place {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Place::Finite(pi) => write!(f, "{pi}"),
            Place::Infinity => write!(f, "inf"),
        }
    }
}

/// Quadratic character of k(x) on a residue class (a polynomial mod π_x):
/// 0, +1 or −1.
pub fn residue_legendre(pi: &Poly, r: &Poly) -> i8 {
    let r = r.rem(pi);
    if r.is_zero() {
        return 0;
    }
    let q = (pi.field().p() as u64).pow(pi.degree() as u32);
    if r.powmod((q - 1) / 2, pi).is_one() {
        1
    } else {
        -1
    }
}

/// An element ϖ^v·u of the completion F_x, with the unit u known modulo ϖ^prec.
///
/// At finite places the local parameter is π_x(t) and units are stored as
/// polynomials in t modulo π_x^prec. At ∞ the parameter is w = 1/t and the
/// unit is stored as a polynomial in w modulo w^prec.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LocalElement {
    place: Place,
    v: i64,
    unit: Poly,
    prec: u32,
    zero: bool,
}

impl LocalElement {
    fn modulus(place: &Place, field: PrimeField, prec: u32) -> Poly {
        match place {
            Place::Finite(pi) => pi.pow(prec),
            Place::Infinity => Poly::t(field).pow(prec),
        }
    }

    /// Expansion of the rational function num/den at `place`.
    pub fn from_rational(place: &Place, num: &Poly, den: &Poly, prec: u32) -> Result<Self, PlaceError> {
        if den.is_zero() {
            return Err(AlgebraError::DivisionByZero.into());
        }
        let field = num.field();
        if num.is_zero() {
            return Ok(LocalElement { place: place.clone(), v: 0, unit: Poly::zero(field), prec, zero: true });
        }
        let (vn, un) = split(place, num);
        let (vd, ud) = split(place, den);
        let m = LocalElement::modulus(place, field, prec);
        let unit = if prec == 0 {
            Poly::zero(field)
        } else {
            un.mul(&ud.inv_mod(&m).expect("unit part is invertible")).rem(&m)
        };
        Ok(LocalElement { place: place.clone(), v: vn - vd, unit, prec, zero: false })
    }

    pub fn from_poly(place: &Place, g: &Poly, prec: u32) -> Result<Self, PlaceError> {
        LocalElement::from_rational(place, g, &Poly::one(g.field()), prec)
    }

    /// The uniformizer ϖ_x (π_x(t), or 1/t at ∞).
    pub fn uniformizer(place: &Place, field: PrimeField, prec: u32) -> Self {
        let unit = if prec == 0 { Poly::zero(field) } else { Poly::one(field) };
        LocalElement { place: place.clone(), v: 1, unit, prec, zero: false }
    }

    pub fn place(&self) -> &Place {
        &self.place
    }

    pub fn precision(&self) -> u32 {
        self.prec
    }

    pub fn is_zero(&self) -> bool {
        self.zero
    }

    pub fn valuation(&self) -> Result<i64, PlaceError> {
        if self.zero {
            return Err(PlaceError::ZeroElement);
        }
        Ok(self.v)
    }

    /// Residue of the unit part, as a polynomial of degree < d_x.
    pub fn leading_residue(&self) -> Result<Poly, PlaceError> {
        self.digit(0)
    }

    /// k-th digit of the unit part in base ϖ_x.
    pub fn digit(&self, k: u32) -> Result<Poly, PlaceError> {
        if self.zero {
            return Err(PlaceError::ZeroElement);
        }
        if k >= self.prec {
            return Err(PlaceError::Precision { have: self.prec, need: k + 1 });
        }
        let field = self.unit.field();
        let pi = match &self.place {
            Place::Finite(pi) => pi.clone(),
            Place::Infinity => Poly::t(field),
        };
        let mut g = self.unit.clone();
        for _ in 0..k {
            g = g.divrem(&pi).expect("nonzero").0;
        }
        Ok(g.rem(&pi))
    }

    pub fn mul(&self, o: &LocalElement) -> LocalElement {
        assert_eq!(self.place, o.place, "local elements at different places");
        let field = self.unit.field();
        if self.zero || o.zero {
            return LocalElement { place: self.place.clone(), v: 0, unit: Poly::zero(field), prec: 0, zero: true };
        }
        let prec = self.prec.min(o.prec);
        let m = LocalElement::modulus(&self.place, field, prec);
        let unit = if prec == 0 { Poly::zero(field) } else { self.unit.mul(&o.unit).rem(&m) };
        LocalElement { place: self.place.clone(), v: self.v + o.v, unit, prec, zero: false }
    }

    pub fn inv(&self) -> Result<LocalElement, PlaceError> {
        if self.zero {
            return Err(AlgebraError::DivisionByZero.into());
        }
        let field = self.unit.field();
        let m = LocalElement::modulus(&self.place, field, self.prec);
        let unit = if self.prec == 0 { Poly::zero(field) } else { self.unit.inv_mod(&m).expect("unit") };
        Ok(LocalElement { place: self.place.clone(), v: -self.v, unit, prec: self.prec, zero: false })
    }
}

/// (valuation, unit part in the local parameter) of a nonzero polynomial.
fn split(place: &Place, g: &Poly) -> (i64, Poly) {
    match place {
        Place::Finite(pi) => {
            let v = g.valuation(pi);
            let u = (0..v).fold(g.clone(), |acc, _| acc.exact_div(pi).expect("divides"));
            (v as i64, u)
        }
        Place::Infinity => {
            let n = g.degree();
            (-(n as i64), g.reversed(n))
        }
    }
}

/// The modulus whose residues represent k(x).
fn residue_modulus(place: &Place, field: PrimeField) -> Poly {
    match place {
        Place::Finite(pi) => pi.clone(),
        Place::Infinity => Poly::t(field),
    }
}

/// Tame Hilbert symbol (a, b)_x = η̄((−1)^{v(a)v(b)} a₀^{v(b)} / b₀^{v(a)}).
pub fn hilbert_symbol(a: &LocalElement, b: &LocalElement) -> Result<i8, PlaceError> {
    assert_eq!(a.place, b.place, "local elements at different places");
    let (va, vb) = (a.valuation()?, b.valuation()?);
    let (a0, b0) = (a.leading_residue()?, b.leading_residue()?);
    let field = a0.field();
    let m = residue_modulus(&a.place, field);
    let sign = if (va * vb).rem_euclid(2) == 1 { field.p() - 1 } else { 1 };
    let num = pow_mod_signed(&a0, vb, &m).scale(sign);
    let den = pow_mod_signed(&b0, va, &m);
    let z = num.mul(&den.inv_mod(&m).expect("unit")).rem(&m);
    Ok(residue_legendre(&m, &z))
}

fn pow_mod_signed(g: &Poly, e: i64, m: &Poly) -> Poly {
    let base = if e < 0 { g.inv_mod(m).expect("unit") } else { g.clone() };
    base.powmod(e.unsigned_abs(), m)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SplitType {
    Split,
    Inert,
    Ramified,
}

/// The cover y² = f(t) of ℙ¹, f squarefree of even degree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DoubleCover {
    field: PrimeField,
    f: Poly,
    ramified: Vec<Poly>,
}

impl DoubleCover {
    pub fn new(f: Poly) -> Result<Self, PlaceError> {
        let field = f.field();
        let n = f.deg().ok_or_else(|| PlaceError::BadCover("f = 0".into()))?;
        if n == 0 || n % 2 == 1 {
            return Err(PlaceError::BadCover(format!("deg f = {n} must be even and positive")));
        }
        if !f.is_squarefree() {
            return Err(PlaceError::BadCover(format!("{f} is not squarefree")));
        }
        let ramified = f.factor()?.factors.into_iter().map(|(g, _)| g).collect();
        Ok(DoubleCover { field, f, ramified })
    }

    pub fn field(&self) -> PrimeField {
        self.field
    }

    pub fn q(&self) -> u32 {
        self.field.p()
    }

    pub fn f(&self) -> &Poly {
        &self.f
    }

    /// Irreducible factors of f, i.e. the ramified places.
    pub fn ramified(&self) -> &[Poly] {
        &self.ramified
    }

    pub fn ramified_places(&self) -> Vec<Place> {
        self.ramified.iter().cloned().map(Place::Finite).collect()
    }

    pub fn is_ramified(&self, place: &Place) -> bool {
        place.poly().is_some_and(|pi| self.ramified.contains(pi))
    }

    /// ρ = deg R.
    pub fn rho(&self) -> usize {
        self.f.degree()
    }

    pub fn genus(&self) -> usize {
        self.f.degree() / 2 - 1
    }

    pub fn splitting_type(&self, place: &Place) -> SplitType {
        if self.is_ramified(place) {
            return SplitType::Ramified;
        }
        let chi = match place {
            Place::Finite(pi) => residue_legendre(pi, &self.f),
            Place::Infinity => self.field.legendre(self.f.lc()),
        };
        if chi == 1 {
            SplitType::Split
        } else {
            SplitType::Inert
        }
    }

    /// η_x(z) = (z, f)_x.
    pub fn eta_local(&self, z: &LocalElement) -> Result<i8, PlaceError> {
        let fx = LocalElement::from_poly(z.place(), &self.f, 1)?;
        hilbert_symbol(z, &fx)
    }

    /// η_x(ϖ_x).
    pub fn eta_uniformizer(&self, place: &Place) -> i8 {
        let w = LocalElement::uniformizer(place, self.field, 1);
        self.eta_local(&w).expect("precision 1 suffices")
    }

    /// η̄_x on a residue of k(x) at a ramified place.
    pub fn eta_bar(&self, pi: &Poly, r: &Poly) -> i8 {
        residue_legendre(pi, r)
    }

    /// η_∞(t) = η̄(lc f).
    pub fn eta_inf_t(&self) -> i8 {
        self.field.legendre(self.f.lc())
    }
}

/// Finitely supported ℤ-valued function on places.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Divisor {
    m: BTreeMap<Place, i64>,
}

impl Divisor {
    pub fn zero() -> Self {
        Divisor::default()
    }

    pub fn point(place: Place, mult: i64) -> Self {
        let mut d = Divisor::zero();
        d.add_at(place, mult);
        d
    }

    /// Zeros of a nonzero form of degree n (polynomial plus n − deg at ∞).
    pub fn of_form(g: &Poly, n: usize) -> Result<Self, PlaceError> {
        let mut d = Divisor::zero();
        for (pi, m) in g.factor()?.factors {
            d.add_at(Place::Finite(pi), m as i64);
        }
        d.add_at(Place::Infinity, n as i64 - g.degree() as i64);
        Ok(d)
    }

    /// Divisor of a rational function num/den.
    pub fn of_rational(num: &Poly, den: &Poly) -> Result<Self, PlaceError> {
        let n = Divisor::of_form(num, num.degree())?;
        let d = Divisor::of_form(den, den.degree())?;
        let mut out = n.sub(&d);
        out.add_at(Place::Infinity, den.degree() as i64 - num.degree() as i64);
        Ok(out)
    }

    pub fn add_at(&mut self, place: Place, mult: i64) {
        if mult == 0 {
            return;
        }
        let e = self.m.entry(place.clone()).or_insert(0);
        *e += mult;
        if *e == 0 {
            self.m.remove(&place);
        }
    }

    pub fn mult(&self, place: &Place) -> i64 {
        self.m.get(place).copied().unwrap_or(0)
    }

    pub fn support(&self) -> impl Iterator<Item = (&Place, &i64)> {
        self.m.iter()
    }

    pub fn degree(&self) -> i64 {
        self.m.iter().map(|(p, m)| m * p.degree() as i64).sum()
    }

    pub fn is_effective(&self) -> bool {
        self.m.values().all(|&m| m >= 0)
    }

    pub fn add(&self, o: &Divisor) -> Divisor {
        let mut out = self.clone();
        for (p, m) in &o.m {
            out.add_at(p.clone(), *m);
        }
        out
    }

    pub fn sub(&self, o: &Divisor) -> Divisor {
        let mut out = self.clone();
        for (p, m) in &o.m {
            out.add_at(p.clone(), -*m);
        }
        out
    }

    /// self ≤ o pointwise.
    pub fn le(&self, o: &Divisor) -> bool {
        o.sub(self).is_effective()
    }

    pub fn avoids(&self, places: &[Place]) -> bool {
        places.iter().all(|p| self.mult(p) == 0)
    }

    /// (monic polynomial of the finite part, multiplicity at ∞) for an effective divisor.
    pub fn to_form(&self, field: PrimeField) -> (Poly, usize) {
        let mut g = Poly::one(field);
        let mut inf = 0;
        for (p, &m) in &self.m {
            match p {
                Place::Finite(pi) => g = g.mul(&pi.pow(m as u32)),
                Place::Infinity => inf = m as usize,
            }
        }
        (g, inf)
    }

    /// Text form `poly^mult,...` with `inf` for ∞; `0` for the zero divisor.
    pub fn render(&self) -> String {
        if self.m.is_empty() {
            return "0".into();
        }
        self.m.iter().map(|(p, m)| format!("{p}^{m}")).collect::<Vec<_>>().join(",")
    }
}

impl fmt::Display for Divisor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

/// All effective divisors of degree d on ℙ¹ avoiding `avoid`.
pub fn enumerate_effective_divisors(field: PrimeField, d: usize, avoid: &[Place]) -> Vec<Divisor> {
    let inf_ok = !avoid.contains(&Place::Infinity);
    let mut out = Vec::new();
    for k in (0..=d).rev() {
        if k < d && !inf_ok {
            break;
        }
        for g in Poly::monics(field, k) {
            let div = Divisor::of_form(&g, d).expect("monic is nonzero");
            if div.avoids(avoid) {
                out.push(div);
            }
        }
    }
    out.sort();
    out
}

/// An element of Div^√R(X) = 𝔸^×/𝒪^×_√R: valuations plus a square class at each ramified place.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SqrtRClass {
    vals: BTreeMap<Place, i64>,
    signs: BTreeMap<Poly, i8>,
}

impl SqrtRClass {
    pub fn identity(cover: &DoubleCover) -> Self {
        SqrtRClass { vals: BTreeMap::new(), signs: cover.ramified().iter().map(|pi| (pi.clone(), 1)).collect() }
    }

    pub fn new(cover: &DoubleCover, vals: BTreeMap<Place, i64>, signs: BTreeMap<Poly, i8>) -> Result<Self, PlaceError> {
        let mut out = SqrtRClass::identity(cover);
        for (pi, s) in signs {
            if !cover.ramified().contains(&pi) || (s != 1 && s != -1) {
                return Err(PlaceError::BadCover(format!("sign {s} at non-ramified place {pi}")));
            }
            out.signs.insert(pi, s);
        }
        out.vals = vals.into_iter().filter(|(_, v)| *v != 0).collect();
        Ok(out)
    }

    /// The class of the idèle ϖ_x^m at one place, with unit part 1.
    pub fn uniformizer_power(cover: &DoubleCover, place: Place, m: i64) -> Self {
        let mut out = SqrtRClass::identity(cover);
        if m != 0 {
            out.vals.insert(place, m);
        }
        out
    }

    /// Class of the principal idèle of num/den.
    pub fn principal(cover: &DoubleCover, num: &Poly, den: &Poly) -> Result<Self, PlaceError> {
        let div = Divisor::of_rational(num, den)?;
        let mut out = SqrtRClass::identity(cover);
        out.vals = div.support().map(|(p, m)| (p.clone(), *m)).collect();
        for pi in cover.ramified() {
            let z = LocalElement::from_rational(&Place::Finite(pi.clone()), num, den, 1)?;
            out.signs.insert(pi.clone(), residue_legendre(pi, &z.leading_residue()?));
        }
        Ok(out)
    }

    pub fn valuation(&self, place: &Place) -> i64 {
        self.vals.get(place).copied().unwrap_or(0)
    }

    pub fn sign(&self, pi: &Poly) -> i8 {
        self.signs.get(pi).copied().unwrap_or(1)
    }

    pub fn degree(&self) -> i64 {
        self.vals.iter().map(|(p, v)| v * p.degree() as i64).sum()
    }

    pub fn mul(&self, o: &SqrtRClass) -> SqrtRClass {
        let mut vals = self.vals.clone();
        for (p, v) in &o.vals {
            *vals.entry(p.clone()).or_insert(0) += v;
        }
        vals.retain(|_, v| *v != 0);
        let signs = self.signs.iter().map(|(pi, s)| (pi.clone(), s * o.sign(pi))).collect();
        SqrtRClass { vals, signs }
    }

    pub fn inv(&self) -> SqrtRClass {
        SqrtRClass { vals: self.vals.iter().map(|(p, v)| (p.clone(), -v)).collect(), signs: self.signs.clone() }
    }
}

/// η on Div^√R(X): the product of the local characters over an idèle representative.
pub fn eta_global(cover: &DoubleCover, c: &SqrtRClass) -> i8 {
    let mut acc = 1i8;
    for (p, v) in &c.vals {
        if v.rem_euclid(2) == 1 {
            acc *= cover.eta_uniformizer(p);
        }
    }
    for pi in cover.ramified() {
        acc *= c.sign(pi);
    }
    acc
}

/// Σ = Σ₊ ⊔ Σ₋, finite unramified places.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SigmaData {
    pub plus: Vec<Poly>,
    pub minus: Vec<Poly>,
}

impl SigmaData {
    pub fn new(cover: &DoubleCover, plus: Vec<Poly>, minus: Vec<Poly>) -> Result<Self, PlaceError> {
        for pi in plus.iter().chain(&minus) {
            if !pi.is_monic() || !pi.is_irreducible() {
                return Err(PlaceError::NotAPlace(pi.to_string()));
            }
            if cover.ramified().contains(pi) {
                return Err(PlaceError::BadSigma(format!("{pi} lies in R")));
            }
        }
        for pi in &plus {
            if minus.contains(pi) {
                return Err(PlaceError::BadSigma(format!("{pi} lies in both Σ₊ and Σ₋")));
            }
        }
        let dedup = |v: &Vec<Poly>| v.iter().collect::<std::collections::BTreeSet<_>>().len() == v.len();
        if !dedup(&plus) || !dedup(&minus) {
            return Err(PlaceError::BadSigma("repeated place".into()));
        }
        Ok(SigmaData { plus, minus })
    }

    pub fn n_plus(&self) -> usize {
        self.plus.iter().map(Poly::degree).sum()
    }

    pub fn n_minus(&self) -> usize {
        self.minus.iter().map(Poly::degree).sum()
    }

    pub fn n(&self) -> usize {
        self.n_plus() + self.n_minus()
    }

    pub fn sigma_plus_poly(&self, field: PrimeField) -> Poly {
        self.plus.iter().fold(Poly::one(field), |a, b| a.mul(b))
    }

    pub fn sigma_minus_poly(&self, field: PrimeField) -> Poly {
        self.minus.iter().fold(Poly::one(field), |a, b| a.mul(b))
    }

    pub fn places(&self) -> Vec<Place> {
        self.plus.iter().chain(&self.minus).cloned().map(Place::Finite).collect()
    }

    pub fn swapped(&self) -> SigmaData {
        SigmaData { plus: self.minus.clone(), minus: self.plus.clone() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fld(p: u32) -> PrimeField {
        PrimeField::new(p).unwrap()
    }

    #[test]
    fn splitting_examples() {
        let f5 = fld(5);
        let c = DoubleCover::new(Poly::from_i64(f5, &[0, -1, 1])).unwrap();
        assert_eq!(c.splitting_type(&Place::Finite(Poly::linear(f5, 2))), SplitType::Inert);
        assert_eq!(c.splitting_type(&Place::Finite(Poly::t(f5))), SplitType::Ramified);
        let f3 = fld(3);
        let c3 = DoubleCover::new(Poly::from_i64(f3, &[1, 0, 1])).unwrap();
        assert_eq!(c3.splitting_type(&Place::Infinity), SplitType::Split);
    }

    #[test]
    fn ramified_unit_with_nonsquare_residue() {
        // f = t²+1 over F_3 is irreducible; k(x) = F_9, where 2 is a square.
        // Use f = t²−t over F_3 instead: x = (t) has k(x) = F_3.
        let f3 = fld(3);
        let c = DoubleCover::new(Poly::from_i64(f3, &[0, -1, 1])).unwrap();
        let x = Place::Finite(Poly::t(f3));
        let z = LocalElement::from_poly(&x, &Poly::constant(f3, 2), 3).unwrap();
        assert_eq!(c.eta_local(&z).unwrap(), -1);
    }

    #[test]
    fn precision_is_enforced() {
        let f3 = fld(3);
        let x = Place::Finite(Poly::t(f3));
        let z = LocalElement::from_poly(&x, &Poly::from_i64(f3, &[1, 1]), 2).unwrap();
        assert!(z.digit(1).is_ok());
        assert!(matches!(z.digit(2), Err(PlaceError::Precision { .. })));
    }

    #[test]
    fn divisor_counts() {
        let f3 = fld(3);
        assert_eq!(enumerate_effective_divisors(f3, 0, &[]).len(), 1);
        assert_eq!(enumerate_effective_divisors(f3, 1, &[]).len(), 4);
        assert_eq!(enumerate_effective_divisors(f3, 2, &[Place::Infinity]).len(), 9);
    }
}
