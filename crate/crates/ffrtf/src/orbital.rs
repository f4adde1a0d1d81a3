//! Orbital integrals J(γ, h_D^{Σ±}, s₁, s₂): a global route through divisor
//! data on X, a product of local double-coset sums, and the regularized
//! values at u ∈ {0, ∞}.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::algebra::{derivative_functional, rat, AlgebraError, BiLaurent, ExtField, Poly, PrimeField, Ring};
use crate::local::h_sq;
use crate::moduli::{
    base_infinity, base_zero, count_n, enumerate_base, s8_index, s8_table, BasePoint, CountError, Entry, NCount,
    NMode, Setting,
};
use crate::places::{enumerate_effective_divisors, Divisor, Place};

/// A rational function num/den on ℙ¹, reduced with den monic; 0 is 0/1.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FRat {
    num: Poly,
    den: Poly,
}

impl FRat {
    pub fn new(num: Poly, den: Poly) -> Result<Self, CountError> {
        if den.is_zero() {
            return Err(AlgebraError::DivisionByZero.into());
        }
        let k = den.field();
        if num.is_zero() {
            return Ok(FRat { num, den: Poly::one(k) });
        }
        let g = num.gcd(&den);
        let (num, den) = (num.exact_div(&g).expect("gcd divides"), den.exact_div(&g).expect("gcd divides"));
        let c = k.inv(den.lc())?;
        Ok(FRat { num: num.scale(c), den: den.scale(c) })
    }

    pub fn constant(k: PrimeField, c: u32) -> Self {
        FRat { num: Poly::constant(k, c), den: Poly::one(k) }
    }

    pub fn num(&self) -> &Poly {
        &self.num
    }

    pub fn den(&self) -> &Poly {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.num == self.den
    }

    pub fn mul(&self, o: &FRat) -> FRat {
        FRat::new(self.num.mul(&o.num), self.den.mul(&o.den)).expect("nonzero denominators")
    }

    pub fn sub(&self, o: &FRat) -> FRat {
        let num = self.num.mul(&o.den).sub(&o.num.mul(&self.den));
        FRat::new(num, self.den.mul(&o.den)).expect("nonzero denominators")
    }

    /// 1 − self.
    pub fn one_minus(&self) -> FRat {
        FRat::constant(self.num.field(), 1).sub(self)
    }

    pub fn divisor(&self) -> Result<Divisor, CountError> {
        if self.is_zero() {
            return Err(AlgebraError::ZeroPolynomial.into());
        }
        Ok(Divisor::of_rational(&self.num, &self.den)?)
    }

    pub fn valuation(&self, place: &Place) -> i64 {
        place.valuation(&self.num) - place.valuation(&self.den)
    }

    /// Residue of self·π_x^{−v_x(self)} at the finite place x = (π), in k(x).
    pub fn leading_at(&self, ext: &ExtField, pi: &Poly) -> u32 {
        let strip = |g: &Poly| {
            let v = g.valuation(pi);
            g.exact_div(&pi.pow(v)).expect("π^v divides")
        };
        let n = ext.from_poly(&strip(&self.num));
        let d = ext.from_poly(&strip(&self.den));
        ext.div(n, d).expect("unit after stripping π")
    }
}

impl fmt::Display for FRat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den.is_one() {
            write!(f, "{}", self.num)
        } else {
            write!(f, "({})/({})", self.num, self.den)
        }
    }
}

/// A point of ℙ¹(F) − {1}.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PointU {
    Zero,
    Infinity,
    Regular(FRat),
}

impl PointU {
    pub fn from_frat(u: FRat) -> Result<Self, CountError> {
        if u.is_one() {
            return Err(CountError::Precondition("u = 1 is not an invariant of a regular orbit".into()));
        }
        Ok(if u.is_zero() { PointU::Zero } else { PointU::Regular(u) })
    }
}

impl fmt::Display for PointU {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PointU::Zero => f.write_str("0"),
            PointU::Infinity => f.write_str("inf"),
            PointU::Regular(u) => write!(f, "{u}"),
        }
    }
}

/// inv((a b; c d)) = bc/ad.
pub fn inv(m: &[FRat; 4]) -> Result<PointU, CountError> {
    let ad = m[0].mul(&m[3]);
    let bc = m[1].mul(&m[2]);
    if ad == bc {
        return Err(CountError::Precondition("γ is not invertible".into()));
    }
    if ad.is_zero() {
        return Ok(PointU::Infinity);
    }
    let u = bc.mul(&FRat::new(ad.den().clone(), ad.num().clone())?);
    PointU::from_frat(u)
}

/// inv_D(a, b) = b/a.
pub fn inv_base(base: &BasePoint) -> Result<PointU, CountError> {
    if base.a.is_zero() {
        return Ok(PointU::Infinity);
    }
    PointU::from_frat(FRat::new(base.b.clone(), base.a.clone())?)
}

/// Representatives of the A(F)×A(F) double cosets with a given invariant.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CosetTag {
    /// γ̃(u) = (1 u; 1 1).
    Generic,
    Identity,
    NPlus,
    NMinus,
    W0,
    NPlusW0,
    NMinusW0,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OrbitRep {
    pub u: PointU,
    pub tag: CosetTag,
}

impl OrbitRep {
    pub fn new(u: PointU, tag: CosetTag) -> Result<Self, CountError> {
        let ok = match (&u, tag) {
            (PointU::Regular(_), CosetTag::Generic) => true,
            (PointU::Zero, CosetTag::Identity | CosetTag::NPlus | CosetTag::NMinus) => true,
            (PointU::Infinity, CosetTag::W0 | CosetTag::NPlusW0 | CosetTag::NMinusW0) => true,
            _ => false,
        };
        if !ok {
            return Err(CountError::Precondition(format!("coset {tag:?} does not lie over u = {u}")));
        }
        Ok(OrbitRep { u, tag })
    }

    pub fn matrix(&self, k: PrimeField) -> [FRat; 4] {
        let c = |a: u32| FRat::constant(k, a);
        let m1 = k.neg(1);
        match (&self.u, self.tag) {
            (PointU::Regular(u), _) => [c(1), u.clone(), c(1), c(1)],
            (_, CosetTag::Identity) => [c(1), c(0), c(0), c(1)],
            (_, CosetTag::NPlus) => [c(1), c(1), c(0), c(1)],
            (_, CosetTag::NMinus) => [c(1), c(0), c(1), c(1)],
            (_, CosetTag::W0) => [c(0), c(1), c(m1), c(0)],
            (_, CosetTag::NPlusW0) => [c(1), c(1), c(1), c(0)],
            (_, CosetTag::NMinusW0) => [c(0), c(1), c(1), c(1)],
            (_, CosetTag::Generic) => unreachable!("validated in new"),
        }
    }
}

// ---------------------------------------------------------------------------
// The global route.

struct Global<'a> {
    set: &'a Setting,
    /// D + R.
    dr: Divisor,
    plus: Vec<Place>,
    minus: Vec<Place>,
    ram: Vec<Place>,
    eta: RefCell<HashMap<Place, i8>>,
}

impl<'a> Global<'a> {
    fn new(set: &'a Setting, dv: &Divisor) -> Result<Self, CountError> {
        set.check_divisor(dv)?;
        Ok(Global {
            set,
            dr: dv.add(&set.r_divisor()),
            plus: set.sigma.plus.iter().cloned().map(Place::Finite).collect(),
            minus: set.sigma.minus.iter().cloned().map(Place::Finite).collect(),
            ram: set.cover.ramified_places(),
            eta: RefCell::new(HashMap::new()),
        })
    }

    fn eta_pi(&self, p: &Place) -> i8 {
        *self.eta.borrow_mut().entry(p.clone()).or_insert_with(|| {
            let flip = match self.set.eta_flip() {
                Some(x) if self.ram.get(x) == Some(p) => -1,
                _ => 1,
            };
            flip * self.set.cover.eta_uniformizer(p)
        })
    }

    /// Σ over (E₁, E₂) of q^{−deg(E₁−E₂+E₁′)s₁ − deg(−E₁+E₂+E₁′)s₂}·η(E₁^♮−E₂^♮), with
    /// E₂′ = 0, E₁′ forced by div det φ = D + R, the square-root data at R
    /// summed in closed form.
    fn sum(&self, gamma: &[FRat; 4], e1s: &[Divisor], e2s: &[Divisor]) -> Result<BiLaurent, CountError> {
        let r = self.ram.len();
        let divs: Vec<Option<Divisor>> =
            gamma.iter().map(|g| if g.is_zero() { Ok(None) } else { g.divisor().map(Some) }).collect::<Result<_, _>>()?;
        let det = gamma[0].mul(&gamma[3]).sub(&gamma[1].mul(&gamma[2]));
        let ddet = det.divisor()?;
        let lcchi: Vec<Vec<i8>> = gamma
            .iter()
            .map(|g| {
                self.set
                    .ram_fields()
                    .iter()
                    .map(|ext| {
                        if g.is_zero() { 0 } else { ext.legendre(g.leading_at(ext, ext.modulus())) }
                    })
                    .collect()
            })
            .collect();
        let table = s8_table();
        let base = ddet.sub(&self.dr);
        let mut acc: BTreeMap<(i64, i64), i128> = BTreeMap::new();
        for e1 in e1s {
            for e2 in e2s {
                let e12 = e1.add(e2);
                let e1p = e12.add(&base);
                let shifts = [e1.sub(&e1p), e2.sub(&e1p), e1.clone(), e2.clone()];
                let mut fs: [Option<Divisor>; 4] = Default::default();
                let mut ok = true;
                for i in 0..4 {
                    if let Some(dg) = &divs[i] {
                        let fi = dg.add(&shifts[i]);
                        if !fi.is_effective() {
                            ok = false;
                            break;
                        }
                        fs[i] = Some(fi);
                    }
                }
                if !ok || !self.sigma_ok(&fs) {
                    continue;
                }
                let diff = e1.sub(e2);
                let mut sign = 1i128;
                for (p, &m) in diff.support() {
                    if m % 2 != 0 {
                        sign *= self.eta_pi(p) as i128;
                    }
                }
                let mut prod = 1i128;
                for (x, px) in self.ram.iter().enumerate() {
                    let mut z = [0i8; 4];
                    for i in 0..4 {
                        if let Some(fi) = &fs[i] {
                            if fi.mult(px) == 0 {
                                z[i] = lcchi[i][x];
                            }
                        }
                    }
                    prod *= table[s8_index(z)] as i128;
                    if prod == 0 {
                        break;
                    }
                }
                if prod == 0 {
                    continue;
                }
                let a = -(diff.degree() + e1p.degree());
                let b = -(-diff.degree() + e1p.degree());
                *acc.entry((a, b)).or_default() += sign * prod;
            }
        }
        let den = BigInt::from(8u64).pow(r as u32);
        let mut out = BiLaurent::zero(Ring::Rational);
        for ((a, b), v) in acc {
            out.add_term(a, b, &BigRational::new(BigInt::from(v), den.clone()));
        }
        Ok(out)
    }

    /// Σ₊: φ₂₁ vanishes, φ₁₁ and φ₂₂ do not. Σ₋: φ₂₂ vanishes, φ₁₂ and φ₂₁ do not.
    fn sigma_ok(&self, fs: &[Option<Divisor>; 4]) -> bool {
        let vanishes = |f: &Option<Divisor>, p: &Place| f.as_ref().is_none_or(|d| d.mult(p) > 0);
        let unit = |f: &Option<Divisor>, p: &Place| f.as_ref().is_some_and(|d| d.mult(p) == 0);
        self.plus.iter().all(|p| vanishes(&fs[2], p) && unit(&fs[0], p) && unit(&fs[3], p))
            && self.minus.iter().all(|p| vanishes(&fs[3], p) && unit(&fs[1], p) && unit(&fs[2], p))
    }

    fn sigma_divisor(places: &[Place]) -> Divisor {
        let mut d = Divisor::zero();
        for p in places {
            d.add_at(p.clone(), 1);
        }
        d
    }

    /// Free effective divisors lower + E with deg E in `window`.
    fn free(&self, lower: &[Place], window: (i64, i64)) -> Vec<Divisor> {
        let low = Self::sigma_divisor(lower);
        let mut out = Vec::new();
        for k in window.0.max(0)..=window.1 {
            for e in enumerate_effective_divisors(self.set.field(), k as usize, &[]) {
                out.push(e.add(&low));
            }
        }
        out
    }

    fn generic(&self, u: &FRat) -> Result<BiLaurent, CountError> {
        let k = self.set.field();
        let gamma = OrbitRep::new(PointU::Regular(u.clone()), CosetTag::Generic)?.matrix(k);
        let w = u.one_minus().divisor()?;
        let z1 = self.dr.sub(&w);
        let z2 = u.divisor()?.sub(&w).add(&self.dr);
        if !z1.is_effective() || !z2.is_effective() {
            return Ok(BiLaurent::zero(Ring::Rational));
        }
        let e2s = subdivisors(&z1, &Self::sigma_divisor(&self.minus));
        let e1s = subdivisors(&z2, &Self::sigma_divisor(&self.plus));
        self.sum(&gamma, &e1s, &e2s)
    }

    /// J at a non-generic coset with the free section's reduced degree in `window`.
    fn coset(&self, tag: CosetTag, window: (i64, i64)) -> Result<BiLaurent, CountError> {
        let k = self.set.field();
        let u = match tag {
            CosetTag::NPlus | CosetTag::NMinus => PointU::Zero,
            _ => PointU::Infinity,
        };
        let gamma = OrbitRep::new(u, tag)?.matrix(k);
        let (e1s, e2s) = match tag {
            CosetTag::NPlus => {
                let e1s = self.free(&[], window).iter().map(|f| self.dr.sub(f)).collect();
                (e1s, subdivisors(&self.dr, &Self::sigma_divisor(&self.minus)))
            }
            CosetTag::NMinus => (self.free(&self.plus, window), subdivisors(&self.dr, &Self::sigma_divisor(&self.minus))),
            CosetTag::NPlusW0 => {
                let e2s = self.free(&[], window).iter().map(|f| self.dr.sub(f)).collect();
                (subdivisors(&self.dr, &Self::sigma_divisor(&self.plus)), e2s)
            }
            CosetTag::NMinusW0 => (subdivisors(&self.dr, &Self::sigma_divisor(&self.plus)), self.free(&self.minus, window)),
            _ => return Err(CountError::Unsupported(format!("coset {tag:?} has no finite truncation"))),
        };
        self.sum(&gamma, &e1s, &e2s)
    }
}

/// All E with lower ≤ E ≤ upper.
pub fn subdivisors(upper: &Divisor, lower: &Divisor) -> Vec<Divisor> {
    if !lower.le(upper) {
        return Vec::new();
    }
    let slots: Vec<(Place, i64, i64)> =
        upper.support().map(|(p, &m)| (p.clone(), lower.mult(p), m)).collect();
    let mut out = vec![Divisor::zero()];
    for (p, lo, hi) in slots {
        let mut next = Vec::with_capacity(out.len() * (hi - lo + 1) as usize);
        for d in &out {
            for m in lo..=hi {
                let mut e = d.clone();
                e.add_at(p.clone(), m);
                next.push(e);
            }
        }
        out = next;
    }
    out
}

/// J(γ̃(u), h_D^{Σ±}, s₁, s₂) through divisor data on X.
pub fn orbital_via_x(set: &Setting, dv: &Divisor, u: &FRat) -> Result<BiLaurent, CountError> {
    if u.is_zero() || u.is_one() {
        return Err(CountError::Precondition("u ∈ {0, 1, ∞} needs orbital_regularized".into()));
    }
    Global::new(set, dv)?.generic(u)
}

// ---------------------------------------------------------------------------
// The local route.

/// Data of one place for the local double-coset sum.
struct LocalSite {
    deg: i64,
    /// v(det) = D_x (+1 at R).
    n: i64,
    vu: i64,
    vw: i64,
    plus: bool,
    minus: bool,
    eta_pi: i8,
    ram: Option<usize>,
}

/// Average over (ū₁, ū₂, ū₁′) ∈ k(x)^×³ of η̄(ū₁ū₂)·h̃□(m̄), where m̄ has the
/// residues of (ū₁/ū₁′, c·ū₂/ū₁′, ū₁, ū₂) on the entries flagged as units.
fn residue_average(ext: &ExtField, units: [bool; 4], c: u32) -> BigRational {
    let mut acc = BigRational::zero();
    for u1 in ext.units() {
        for u2 in ext.units() {
            let s = ext.legendre(ext.mul(u1, u2)) as i64;
            for u1p in ext.units() {
                let i1p = ext.inv(u1p).expect("unit");
                let raw = [ext.mul(u1, i1p), ext.mul(c, ext.mul(u2, i1p)), u1, u2];
                let mut m = [0u32; 4];
                for i in 0..4 {
                    if units[i] {
                        m[i] = raw[i];
                    }
                }
                acc += h_sq(ext, &m) * BigRational::from_integer(s.into());
            }
        }
    }
    let qx = ext.size() as i64 - 1;
    acc / rat(qx * qx * qx, 1)
}

/// J(γ̃(u), h_D^{Σ±}) as a product over places of sums over the valuations
/// (v₁, v₂) of t₁, t₂ (t₂′ = 1, t₁′ forced by the determinant). `widen`
/// enlarges the derived valuation box; integrality is always re-checked.
pub fn orbital_via_local_product(set: &Setting, dv: &Divisor, u: &FRat, widen: i64) -> Result<BiLaurent, CountError> {
    set.check_divisor(dv)?;
    if u.is_zero() || u.is_one() {
        return Err(CountError::Precondition("u ∈ {0, 1, ∞} has no convergent local product".into()));
    }
    let w = u.one_minus();
    let mut places: BTreeSet<Place> = BTreeSet::new();
    places.extend(dv.support().map(|(p, _)| p.clone()));
    places.extend(set.cover.ramified_places());
    places.extend(set.sigma.places());
    places.extend(u.divisor()?.support().map(|(p, _)| p.clone()));
    places.extend(w.divisor()?.support().map(|(p, _)| p.clone()));
    places.insert(Place::Infinity);
    let ram = set.cover.ramified_places();
    let mut out = BiLaurent::one(Ring::Rational);
    let mut cache: HashMap<(usize, [bool; 4], u32), BigRational> = HashMap::new();
    for p in &places {
        let ri = ram.iter().position(|x| x == p);
        let site = LocalSite {
            deg: p.degree() as i64,
            n: dv.mult(p) + i64::from(ri.is_some()),
            vu: u.valuation(p),
            vw: w.valuation(p),
            plus: p.poly().is_some_and(|pi| set.sigma.plus.contains(pi)),
            minus: p.poly().is_some_and(|pi| set.sigma.minus.contains(pi)),
            eta_pi: set.cover.eta_uniformizer(p),
            ram: ri,
        };
        let lcu = ri.map(|i| {
            let ext = &set.ram_fields()[i];
            u.leading_at(ext, ext.modulus())
        });
        let mut factor = BiLaurent::zero(Ring::Rational);
        let hi1 = site.n + site.vu - site.vw + widen;
        let hi2 = site.n - site.vw + widen;
        for v1 in -widen..=hi1 {
            for v2 in -widen..=hi2 {
                let v1p = v1 + v2 + site.vw - site.n;
                let vals = [v1 - v1p, v2 + site.vu - v1p, v1, v2];
                if vals.iter().any(|&v| v < 0) {
                    continue;
                }
                if site.plus && !(vals[2] >= 1 && vals[0] == 0 && vals[3] == 0) {
                    continue;
                }
                if site.minus && !(vals[3] >= 1 && vals[1] == 0 && vals[2] == 0) {
                    continue;
                }
                let mut c = if (v1 - v2).rem_euclid(2) == 1 { rat(site.eta_pi as i64, 1) } else { BigRational::one() };
                if let (Some(i), Some(lc)) = (site.ram, lcu) {
                    let units = vals.map(|v| v == 0);
                    let avg = cache
                        .entry((i, units, lc))
                        .or_insert_with(|| residue_average(&set.ram_fields()[i], units, lc))
                        .clone();
                    c *= avg;
                }
                let a = -site.deg * (v1 - v2 + v1p);
                let b = -site.deg * (-v1 + v2 + v1p);
                factor.add_term(a, b, &c);
            }
        }
        out = out.mul(&factor);
        if out.is_zero() {
            break;
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Regularized values.

/// The window [0, ρ−2] = [0, 2g−2+ρ] on the free section's reduced degree.
pub fn truncation_window(set: &Setting) -> (i64, i64) {
    (0, set.rho() as i64 - 2)
}

/// The discarded tail [ρ−1, ρ+1] checked numerically.
pub fn tail_window(set: &Setting) -> (i64, i64) {
    (set.rho() as i64 - 1, set.rho() as i64 + 1)
}

pub fn check_threshold(set: &Setting, dv: &Divisor) -> Result<(), CountError> {
    let d = dv.degree();
    let need = set.rho() as i64 + set.sigma.n() as i64 - 3;
    if d < need {
        return Err(CountError::Precondition(format!("d = {d} < ρ + N − 3 = {need}")));
    }
    Ok(())
}

/// J(0) = J(n₊) + J(n₋) and J(∞) = J(n₊w₀) + J(n₋w₀), each truncated to the
/// window where the free section has reduced degree ≤ ρ − 2 (J(1) = J(w₀) = 0).
pub fn orbital_regularized(set: &Setting, dv: &Divisor, u: &PointU) -> Result<BiLaurent, CountError> {
    check_threshold(set, dv)?;
    let g = Global::new(set, dv)?;
    let win = truncation_window(set);
    match u {
        PointU::Zero if set.sigma.minus.is_empty() => Ok(g.coset(CosetTag::NPlus, win)?.add(&g.coset(CosetTag::NMinus, win)?)),
        PointU::Infinity if set.sigma.plus.is_empty() => {
            Ok(g.coset(CosetTag::NPlusW0, win)?.add(&g.coset(CosetTag::NMinusW0, win)?))
        }
        PointU::Zero | PointU::Infinity => Ok(BiLaurent::zero(Ring::Rational)),
        PointU::Regular(_) => Err(CountError::Precondition("regular u needs orbital_via_x".into())),
    }
}

/// The N̂-side of the regularized value over the degenerate base in a window
/// of reduced degrees: N̂⁺ + N̂⁻ at u = 0, their w₀-analogues at u = ∞.
pub fn hat_counts(set: &Setting, dv: &Divisor, u: &PointU, window: (i64, i64)) -> Result<Vec<NCount>, CountError> {
    let (base, zeros) = match u {
        PointU::Zero => (base_zero(set, dv), [Entry::E21, Entry::E12]),
        PointU::Infinity => (base_infinity(set, dv), [Entry::E22, Entry::E11]),
        PointU::Regular(_) => return Err(CountError::Precondition("hat counts live over u ∈ {0, ∞}".into())),
    };
    let Some(base) = base else {
        return Ok(Vec::new());
    };
    zeros.iter().map(|&zero| count_n(set, &base, NMode::Hat { zero, window })).collect()
}

// ---------------------------------------------------------------------------
// Sums over u and the derivative functional.

/// (u, base, J(u)) for every base point with regular u, in base order.
pub fn orbital_all(set: &Setting, dv: &Divisor) -> Result<Vec<(FRat, BasePoint, BiLaurent)>, CountError> {
    let g = Global::new(set, dv)?;
    let mut out = Vec::new();
    for base in enumerate_base(set, dv)? {
        if let PointU::Regular(u) = inv_base(&base)? {
            let j = g.generic(&u)?;
            out.push((u, base, j));
        }
    }
    Ok(out)
}

/// Σ_u J(u, h_D^{Σ±}, s₁, s₂) including the regularized u ∈ {0, ∞}.
pub fn orbital_total(set: &Setting, dv: &Divisor) -> Result<BiLaurent, CountError> {
    let mut total = BiLaurent::zero(Ring::Rational);
    for (_, _, j) in orbital_all(set, dv)? {
        total = total.add(&j);
    }
    if base_zero(set, dv).is_some() {
        total = total.add(&orbital_regularized(set, dv, &PointU::Zero)?);
    }
    if base_infinity(set, dv).is_some() {
        total = total.add(&orbital_regularized(set, dv, &PointU::Infinity)?);
    }
    Ok(total)
}

/// Every base point of 𝒜♭_D(k); the degenerate ones (u ∈ {0, ∞}) are among them.
pub fn all_bases(set: &Setting, dv: &Divisor) -> Result<Vec<BasePoint>, CountError> {
    enumerate_base(set, dv)
}

/// Both evaluations of 𝕁(h_D^{Σ±}) at (r₊, r₋): the mixed derivative of
/// q^{N₊s₁+N₋s₂}·Σ_u J(u), and the 𝒩-side weighted sum.
pub fn j_functional(set: &Setting, dv: &Divisor, r_plus: u32, r_minus: u32) -> Result<(BigRational, BigRational), CountError> {
    let table = j_functional_table(set, dv, &[(r_plus, r_minus)])?;
    Ok(table.into_iter().next().map(|(_, s, w)| (s, w)).expect("one entry"))
}

/// `j_functional` at several (r₊, r₋), sharing the orbital and 𝒩 enumerations.
pub fn j_functional_table(
    set: &Setting,
    dv: &Divisor,
    orders: &[(u32, u32)],
) -> Result<Vec<((u32, u32), BigRational, BigRational)>, CountError> {
    let (np, nm) = (set.n_plus(), set.n_minus());
    let total = orbital_total(set, dv)?.shift(np as i64, nm as i64);
    let counts = all_bases(set, dv)?
        .iter()
        .map(|b| count_n(set, b, NMode::Standard))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(orders
        .iter()
        .map(|&(rp, rm)| {
            let sym = derivative_functional(&total, rp, rm);
            let weighted = counts.iter().map(|c| c.weighted(np, nm, rp, rm)).sum();
            ((rp, rm), sym, weighted)
        })
        .collect())
}

/// All u = g/h ∉ {0, 1} with g, h coprime, h monic, max(deg g, deg h) ≤ height.
pub fn u_samples(k: PrimeField, height: usize) -> Vec<FRat> {
    let q = k.p() as u64;
    let mut seen = BTreeSet::new();
    let polys: Vec<Poly> = (1..q.pow(height as u32 + 1)).map(|i| Poly::from_index(k, i)).collect();
    for g in &polys {
        for h in polys.iter().filter(|h| h.is_monic()) {
            if !g.gcd(h).is_one() {
                continue;
            }
            let u = FRat::new(g.clone(), h.clone()).expect("h ≠ 0");
            if !u.is_one() {
                seen.insert(u);
            }
        }
    }
    seen.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::places::{DoubleCover, SigmaData};

    fn setting(p: u32, f: &[i64], plus: &[&[i64]], minus: &[&[i64]]) -> Setting {
        let k = PrimeField::new(p).unwrap();
        let cover = DoubleCover::new(Poly::from_i64(k, f)).unwrap();
        let pl = plus.iter().map(|c| Poly::from_i64(k, c)).collect();
        let mi = minus.iter().map(|c| Poly::from_i64(k, c)).collect();
        let sigma = SigmaData::new(&cover, pl, mi).unwrap();
        Setting::new(cover, sigma)
    }

    fn point(set: &Setting, c: &[i64], m: i64) -> Divisor {
        Divisor::point(Place::Finite(Poly::from_i64(set.field(), c)), m)
    }

    #[test]
    fn inv_conventions() {
        let k = PrimeField::new(5).unwrap();
        let u = FRat::new(Poly::t(k), Poly::linear(k, 2)).unwrap();
        let g = OrbitRep::new(PointU::Regular(u.clone()), CosetTag::Generic).unwrap();
        assert_eq!(inv(&g.matrix(k)).unwrap(), PointU::Regular(u));
        let np = OrbitRep::new(PointU::Zero, CosetTag::NPlus).unwrap();
        assert_eq!(inv(&np.matrix(k)).unwrap(), PointU::Zero);
        let w0 = OrbitRep::new(PointU::Infinity, CosetTag::W0).unwrap();
        assert_eq!(inv(&w0.matrix(k)).unwrap(), PointU::Infinity);
        assert!(OrbitRep::new(PointU::Zero, CosetTag::W0).is_err());
    }

    #[test]
    fn inv_d_is_injective() {
        let set = setting(3, &[1, 0, 1], &[], &[]);
        let dv = point(&set, &[-1, 1], 2);
        let bases = all_bases(&set, &dv).unwrap();
        let us: BTreeSet<PointU> = bases.iter().map(|b| inv_base(b).unwrap()).collect();
        assert_eq!(us.len(), bases.len());
    }

    #[test]
    fn routes_agree_cfg_a_small() {
        let set = setting(3, &[1, 0, 1], &[], &[]);
        let dv = point(&set, &[-1, 1], 1);
        for (u, base, jx) in orbital_all(&set, &dv).unwrap() {
            let jl = orbital_via_local_product(&set, &dv, &u, 0).unwrap();
            let jn = count_n(&set, &base, NMode::Standard).unwrap().generating();
            assert_eq!(jx, jl, "u = {u}");
            assert_eq!(jx, jn, "u = {u}");
        }
    }
}
