//! The base 𝒜♭_D(k), η-weighted point counts of 𝒩_d̲ and N̂_d̲ over a base
//! point, groupoid counts of ℳ_d for a rational cover, and the Picard engine.

use std::collections::{BTreeMap, HashMap};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;

use crate::algebra::{rat, AlgebraError, BiLaurent, ExtField, Poly, PrimeField, Ring};
use crate::cover::{l_polynomial_genus_one, BinForm, ClassGroup, ConicParam, QuarticModel};
use crate::places::{
    enumerate_effective_divisors, hilbert_symbol, DoubleCover, Divisor, LocalElement, Place, PlaceError, SigmaData,
    SplitType,
};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CountError {
    #[error(transparent)]
    Place(#[from] PlaceError),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
}

/// Cover, Σ± and the residue fields at R, shared by every count.
#[derive(Clone, Debug)]
pub struct Setting {
    pub cover: DoubleCover,
    pub sigma: SigmaData,
    ram: Vec<ExtField>,
    nu: u32,
    eta_flip: Option<usize>,
}

impl Setting {
    pub fn new(cover: DoubleCover, sigma: SigmaData) -> Self {
        let ram = cover.ramified().iter().map(|pi| ExtField::new(pi).expect("irreducible factor")).collect();
        let nu = cover.field().nonsquare();
        Setting { cover, sigma, ram, nu, eta_flip: None }
    }

    pub fn field(&self) -> PrimeField {
        self.cover.field()
    }

    pub fn q(&self) -> u32 {
        self.cover.q()
    }

    pub fn rho(&self) -> usize {
        self.cover.rho()
    }

    pub fn ram_fields(&self) -> &[ExtField] {
        &self.ram
    }

    pub fn sigma_plus(&self) -> Poly {
        self.sigma.sigma_plus_poly(self.field())
    }

    pub fn sigma_minus(&self) -> Poly {
        self.sigma.sigma_minus_poly(self.field())
    }

    pub fn n_plus(&self) -> usize {
        self.sigma.n_plus()
    }

    pub fn n_minus(&self) -> usize {
        self.sigma.n_minus()
    }

    pub fn swapped(&self) -> Setting {
        Setting { sigma: self.sigma.swapped(), ..self.clone() }
    }

    /// Mutation hook: the X route negates η̄ at the ramified place with index `x`.
    pub fn with_eta_flip(self, x: usize) -> Setting {
        Setting { eta_flip: Some(x), ..self }
    }

    pub fn eta_flip(&self) -> Option<usize> {
        self.eta_flip
    }

    /// χ_x(g(θ_x)) at each ramified x.
    pub fn chi(&self, g: &Poly) -> Vec<i8> {
        self.ram.iter().map(|k| k.legendre(k.from_poly(g))).collect()
    }

    /// χ_x of a scalar of F_q, i.e. its Legendre symbol to the power deg x.
    fn chi_scalar(&self, i: usize, c: u32) -> i8 {
        self.ram[i].legendre(self.ram[i].scalar(c))
    }

    /// R as a divisor.
    pub fn r_divisor(&self) -> Divisor {
        let mut r = Divisor::zero();
        for p in self.cover.ramified_places() {
            r.add_at(p, 1);
        }
        r
    }

    /// D must be effective and supported away from R ∪ Σ.
    pub fn check_divisor(&self, dv: &Divisor) -> Result<(), CountError> {
        if !dv.is_effective() {
            return Err(CountError::Precondition(format!("D = {dv} is not effective")));
        }
        let mut bad = self.cover.ramified_places();
        bad.extend(self.sigma.places());
        if !dv.avoids(&bad) {
            return Err(CountError::Precondition(format!("D = {dv} meets R ∪ Σ")));
        }
        Ok(())
    }
}

/// A k-point (a, b) of 𝒜♭_D, forms of degree n = deg D + ρ normalized by a − b = P_D·f.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BasePoint {
    pub n: usize,
    pub a: Poly,
    pub b: Poly,
}

fn vanishes_at(g: &Poly, pi: &Poly) -> bool {
    g.rem(pi).is_zero()
}

/// P_D·f, the form of degree n with divisor D + R.
pub fn difference_form(set: &Setting, dv: &Divisor) -> Poly {
    let (pd, _) = dv.to_form(set.field());
    pd.mul(set.cover.f())
}

impl BasePoint {
    /// Conditions (1)–(4) of the base checked literally against D.
    pub fn is_valid(&self, set: &Setting, dv: &Divisor) -> bool {
        let diff = self.a.sub(&self.b);
        if diff.is_zero() || (!self.a.is_zero() && self.a.degree() > self.n) || (!self.b.is_zero() && self.b.degree() > self.n) {
            return false;
        }
        match Divisor::of_form(&diff, self.n) {
            Ok(div) if div == dv.add(&set.r_divisor()) => {}
            _ => return false,
        }
        let plus_ok = set.sigma.plus.iter().all(|pi| !vanishes_at(&self.a, pi) && vanishes_at(&self.b, pi));
        let minus_ok = set.sigma.minus.iter().all(|pi| vanishes_at(&self.a, pi) && !vanishes_at(&self.b, pi));
        plus_ok && minus_ok
    }
}

/// All of 𝒜♭_D(k), one representative per F_q^×-class; q^{n−N+1} points when n ≥ N.
pub fn enumerate_base(set: &Setting, dv: &Divisor) -> Result<Vec<BasePoint>, CountError> {
    set.check_divisor(dv)?;
    let k = set.field();
    let n = dv.degree() as usize + set.rho();
    let pdf = difference_form(set, dv);
    let sm = set.sigma_minus();
    let sp = set.sigma_plus();
    let (nm, np) = (set.n_minus(), set.n_plus());
    let c0 = if np == 0 {
        Poly::zero(k)
    } else {
        let inv = sm.inv_mod(&sp).ok_or_else(|| CountError::Precondition("Σ₊ and Σ₋ overlap".into()))?;
        pdf.mul(&inv).rem(&sp)
    };
    let mut out = Vec::new();
    let push = |c: Poly, out: &mut Vec<BasePoint>| {
        let a = sm.mul(&c);
        let b = a.sub(&pdf);
        out.push(BasePoint { n, a, b });
    };
    if n < nm + np {
        if c0.is_zero() || c0.degree() + nm <= n {
            push(c0, &mut out);
        }
    } else {
        let free = n - nm - np;
        let q = k.p() as u64;
        for idx in 0..q.pow(free as u32 + 1) {
            let e = Poly::from_index(k, idx);
            push(c0.add(&sp.mul(&e)), &mut out);
        }
    }
    out.sort();
    Ok(out)
}

/// The degenerate base with b = 0 (u = 0), present iff Σ₋ = ∅.
pub fn base_zero(set: &Setting, dv: &Divisor) -> Option<BasePoint> {
    let n = dv.degree() as usize + set.rho();
    set.sigma.minus.is_empty().then(|| BasePoint { n, a: difference_form(set, dv), b: Poly::zero(set.field()) })
}

/// The degenerate base with a = 0 (u = ∞), present iff Σ₊ = ∅.
pub fn base_infinity(set: &Setting, dv: &Divisor) -> Option<BasePoint> {
    let n = dv.degree() as usize + set.rho();
    set.sigma.plus.is_empty().then(|| BasePoint { n, a: Poly::zero(set.field()), b: difference_form(set, dv).neg() })
}

// ---------------------------------------------------------------------------
// 𝒩 counts.

/// One of the four entries φ_ij.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Entry {
    E11,
    E12,
    E21,
    E22,
}

/// `Standard` counts 𝒩_d̲ (condition (5) in force); `Hat` counts N̂ on the
/// stratum where `zero` vanishes, condition (5) dropped, with the reduced
/// degree of the partner entry (d₁₂, d₂₁−N₊, d₁₁ or d₂₂−N₋) in `window`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NMode {
    Standard,
    Hat { zero: Entry, window: (i64, i64) },
}

/// 8·S(z) for z ∈ {−1,0,1}⁴ in the order (z₁₁, z₁₂, z₂₁, z₂₂): the sign-twisted
/// average of h̃□ over the rank-three group of patterns (ε′_iε_j).
pub(crate) fn s8_table() -> [i64; 81] {
    let mut t = [0i64; 81];
    for (idx, slot) in t.iter_mut().enumerate() {
        let z = [(idx / 27) as i64 - 1, ((idx / 9) % 3) as i64 - 1, ((idx / 3) % 3) as i64 - 1, (idx % 3) as i64 - 1];
        let mut acc = 0;
        for e1 in [1i64, -1] {
            for e2 in [1i64, -1] {
                for e1p in [1i64, -1] {
                    let w = [z[0] * e1 * e1p, z[1] * e2 * e1p, z[2] * e1, z[3] * e2];
                    let prod: i64 = w.iter().map(|x| 1 + x).product();
                    let h = if w.iter().all(|&x| x != 0) { prod / 2 } else { prod };
                    acc += h * e1 * e2;
                }
            }
        }
        *slot = acc;
    }
    t
}

pub(crate) fn s8_index(z: [i8; 4]) -> usize {
    z.iter().fold(0, |acc, &x| acc * 3 + (x + 1) as usize)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum Vanishing {
    Neither,
    First,
    Second,
}

/// A factorization s = φ_first·φ_second up to scalars, with χ-values at R.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
struct SideKey {
    d1: i64,
    d2: i64,
    z1: Vec<i8>,
    z2: Vec<i8>,
    zero: Vanishing,
}

/// What a side may look like when its product s is 0.
#[derive(Clone, Copy, Debug)]
struct FreeSpec {
    /// The second entry vanishes; range of d_first.
    first: Option<(i64, i64)>,
    /// The first entry vanishes; range of d_second − N_second.
    second: Option<(i64, i64)>,
}

/// One side (φ₁₁, φ₂₂ over a, or φ₁₂, φ₂₁ over b). `second_sigma` are the
/// places where φ_second must vanish; `avoid` those where neither may.
fn side_items(
    set: &Setting,
    s: &Poly,
    n: usize,
    second_sigma: &[Poly],
    avoid: &[Place],
    free: FreeSpec,
) -> Result<HashMap<SideKey, u64>, CountError> {
    let k = set.field();
    let r = set.ram.len();
    let mut out: HashMap<SideKey, u64> = HashMap::new();
    let n_second: i64 = second_sigma.iter().map(|p| p.degree() as i64).sum();
    if s.is_zero() {
        if let Some((lo, hi)) = free.first {
            for d1 in lo.max(0)..=hi {
                for e in enumerate_effective_divisors(k, d1 as usize, avoid) {
                    let (g, _) = e.to_form(k);
                    let key =
                        SideKey { d1, d2: n as i64 - d1, z1: set.chi(&g), z2: vec![0; r], zero: Vanishing::Second };
                    *out.entry(key).or_default() += 1;
                }
            }
        }
        if let Some((lo, hi)) = free.second {
            let sig: Poly = second_sigma.iter().fold(Poly::one(k), |acc, p| acc.mul(p));
            for e2 in lo.max(0)..=hi {
                for e in enumerate_effective_divisors(k, e2 as usize, avoid) {
                    let (g, _) = e.to_form(k);
                    let d2 = e2 + n_second;
                    let key = SideKey {
                        d1: n as i64 - d2,
                        d2,
                        z1: vec![0; r],
                        z2: set.chi(&g.mul(&sig)),
                        zero: Vanishing::First,
                    };
                    *out.entry(key).or_default() += 1;
                }
            }
        }
        return Ok(out);
    }
    let div = Divisor::of_form(s, n)?;
    let parts: Vec<(Place, i64, Vec<i8>)> = div
        .support()
        .map(|(p, &m)| {
            let chi = match p {
                Place::Finite(pi) => set.chi(pi),
                Place::Infinity => vec![1; r],
            };
            (p.clone(), m, chi)
        })
        .collect();
    for pi in second_sigma {
        if div.mult(&Place::Finite(pi.clone())) == 0 {
            return Ok(out);
        }
    }
    if !div.avoids(avoid) {
        return Ok(out);
    }
    let lc_chi = set.chi(&Poly::constant(k, s.lc()));
    // Upper bound of the first exponent at each place of div s.
    let caps: Vec<i64> = parts
        .iter()
        .map(|(p, m, _)| {
            let in_second = p.poly().is_some_and(|pi| second_sigma.contains(pi));
            if in_second {
                m - 1
            } else {
                *m
            }
        })
        .collect();
    let mut e = vec![0i64; parts.len()];
    loop {
        let mut d1 = 0i64;
        let mut z1 = vec![1i8; r];
        let mut z2 = lc_chi.clone();
        for (j, (p, m, chi)) in parts.iter().enumerate() {
            d1 += e[j] * p.degree() as i64;
            for x in 0..r {
                if chi[x] == 0 {
                    if e[j] > 0 {
                        z1[x] = 0;
                    }
                    if m - e[j] > 0 {
                        z2[x] = 0;
                    }
                } else if chi[x] == -1 {
                    if e[j] % 2 == 1 {
                        z1[x] = -z1[x];
                    }
                    if (m - e[j]) % 2 == 1 {
                        z2[x] = -z2[x];
                    }
                }
            }
        }
        let key = SideKey { d1, d2: n as i64 - d1, z1, z2, zero: Vanishing::Neither };
        *out.entry(key).or_default() += 1;
        // Odometer over 0 ≤ e_j ≤ caps_j.
        let mut j = 0;
        loop {
            if j == e.len() {
                return Ok(out);
            }
            if e[j] < caps[j] {
                e[j] += 1;
                break;
            }
            e[j] = 0;
            j += 1;
        }
    }
}

/// η-weighted groupoid counts of 𝒩_d̲ (or N̂_d̲) over one base point, keyed by (d₁₁, d₁₂).
#[derive(Clone, Debug, PartialEq)]
pub struct NCount {
    pub n: usize,
    pub counts: BTreeMap<(i64, i64), BigRational>,
}

impl NCount {
    pub fn total(&self) -> BigRational {
        self.counts.values().fold(BigRational::zero(), |a, c| a + c)
    }

    pub fn get(&self, d11: i64, d12: i64) -> BigRational {
        self.counts.get(&(d11, d12)).cloned().unwrap_or_else(BigRational::zero)
    }

    /// Σ_d̲ Q1^{2d₁₂−n} Q2^{2d₁₁−n}·count.
    pub fn generating(&self) -> BiLaurent {
        let n = self.n as i64;
        let mut out = BiLaurent::zero(Ring::Rational);
        for (&(d11, d12), c) in &self.counts {
            out.add_term(2 * d12 - n, 2 * d11 - n, c);
        }
        out
    }

    /// Σ_d̲ count·(2d₁₂−n+N₊)^{r₊}(2d₁₁−n+N₋)^{r₋}.
    pub fn weighted(&self, n_plus: usize, n_minus: usize, r_plus: u32, r_minus: u32) -> BigRational {
        let n = self.n as i64;
        let mut acc = BigRational::zero();
        for (&(d11, d12), c) in &self.counts {
            let w = BigInt::from(2 * d12 - n + n_plus as i64).pow(r_plus)
                * BigInt::from(2 * d11 - n + n_minus as i64).pow(r_minus);
            acc += c * BigRational::from_integer(w);
        }
        acc
    }
}

fn free_specs(mode: NMode, n: i64, set: &Setting) -> (FreeSpec, FreeSpec) {
    let none = FreeSpec { first: None, second: None };
    match mode {
        NMode::Standard => (
            FreeSpec { first: Some((0, n)), second: Some((0, n - set.n_minus() as i64)) },
            FreeSpec { first: Some((0, n)), second: Some((0, n - set.n_plus() as i64)) },
        ),
        NMode::Hat { zero, window } => match zero {
            Entry::E22 => (FreeSpec { first: Some(window), second: None }, none),
            Entry::E11 => (FreeSpec { first: None, second: Some(window) }, none),
            Entry::E21 => (none, FreeSpec { first: Some(window), second: None }),
            Entry::E12 => (none, FreeSpec { first: None, second: Some(window) }),
        },
    }
}

fn mode_admits(mode: NMode, set: &Setting, a: &SideKey, b: &SideKey) -> bool {
    match mode {
        NMode::Standard => {
            let c5a = if a.d1 < a.d2 - set.n_minus() as i64 { a.zero != Vanishing::First } else { a.zero != Vanishing::Second };
            let c5b = if b.d1 < b.d2 - set.n_plus() as i64 { b.zero != Vanishing::First } else { b.zero != Vanishing::Second };
            c5a && c5b
        }
        NMode::Hat { zero, .. } => {
            let (za, zb) = match zero {
                Entry::E11 => (Vanishing::First, Vanishing::Neither),
                Entry::E22 => (Vanishing::Second, Vanishing::Neither),
                Entry::E12 => (Vanishing::Neither, Vanishing::First),
                Entry::E21 => (Vanishing::Neither, Vanishing::Second),
            };
            a.zero == za && b.zero == zb
        }
    }
}

/// η-weighted count of 𝒩_d̲ (or N̂_d̲) over `base` for every d̲ at once.
///
/// Presentation: φ₁₁ = c₁₁P₁₁, φ₂₂ = a/(μc₁₁P₁₁), φ₁₂ = c₁₂P₁₂, φ₂₁ = b/(μc₁₂P₁₂)
/// with P monic; the scalars (c₁₁, c₁₂, μ) are averaged over (F_q^×)³, which
/// only sees their square classes.
pub fn count_n(set: &Setting, base: &BasePoint, mode: NMode) -> Result<NCount, CountError> {
    let n = base.n;
    let r = set.ram.len();
    let (fa, fb) = free_specs(mode, n as i64, set);
    let plus_places: Vec<Place> = set.sigma.plus.iter().cloned().map(Place::Finite).collect();
    let minus_places: Vec<Place> = set.sigma.minus.iter().cloned().map(Place::Finite).collect();
    let a_items = side_items(set, &base.a, n, &set.sigma.minus, &plus_places, fa)?;
    let b_items = side_items(set, &base.b, n, &set.sigma.plus, &minus_places, fb)?;
    let table = s8_table();
    let eta_inf = set.cover.eta_inf_t() as i64;
    // Square classes of (c₁₁, c₁₂, μ), and the induced signs on the four entries.
    let scalars: Vec<[u32; 3]> = (0..8u32)
        .map(|m| {
            let pick = |bit: u32| if m >> bit & 1 == 1 { set.nu } else { 1 };
            [pick(0), pick(1), pick(2)]
        })
        .collect();
    let signs: Vec<Vec<[i8; 4]>> = scalars
        .iter()
        .map(|&[c11, c12, mu]| {
            let k = set.field();
            (0..r)
                .map(|x| {
                    [
                        set.chi_scalar(x, c11),
                        set.chi_scalar(x, c12),
                        set.chi_scalar(x, k.mul(mu, c12)),
                        set.chi_scalar(x, k.mul(mu, c11)),
                    ]
                })
                .collect()
        })
        .collect();
    let mut acc: BTreeMap<(i64, i64), i128> = BTreeMap::new();
    for (ka, ma) in &a_items {
        for (kb, mb) in &b_items {
            if !mode_admits(mode, set, ka, kb) {
                continue;
            }
            let mut sum = 0i128;
            for sg in &signs {
                let mut prod = 1i128;
                for x in 0..r {
                    let z = [ka.z1[x] * sg[x][0], kb.z1[x] * sg[x][1], kb.z2[x] * sg[x][2], ka.z2[x] * sg[x][3]];
                    prod *= table[s8_index(z)] as i128;
                    if prod == 0 {
                        break;
                    }
                }
                sum += prod;
            }
            if sum == 0 {
                continue;
            }
            let sign = if (ka.d1 + kb.d1).rem_euclid(2) == 1 { eta_inf as i128 } else { 1 };
            *acc.entry((ka.d1, kb.d1)).or_default() += sign * sum * (*ma as i128) * (*mb as i128);
        }
    }
    let den = BigInt::from(8u64).pow(r as u32 + 1);
    let counts = acc
        .into_iter()
        .filter(|(_, v)| *v != 0)
        .map(|(key, v)| (key, BigRational::new(BigInt::from(v), den.clone())))
        .collect();
    Ok(NCount { n, counts })
}

// ---------------------------------------------------------------------------
// ℳ counts for g′ = 0.

/// Norm tables of a rational cover X′ ≅ ℙ¹_s, built once per (m_a, m_b).
pub struct MEngine<'a> {
    set: &'a Setting,
    par: ConicParam,
    n: usize,
    ma: usize,
    mb: usize,
    table_a: HashMap<Poly, Vec<NormEntry>>,
    table_b: HashMap<Poly, Vec<NormEntry>>,
    /// c_x = σ₋(θ_x)κ_x^{(m_a)} / (σ₊(θ_x)κ_x^{(m_b)}).
    c: Vec<u32>,
}

#[derive(Clone, Debug)]
struct NormEntry {
    /// α(x′) at each ramification point.
    at_ram: Vec<u32>,
    /// Leading coefficient of Nm α as a polynomial.
    lc: u32,
}

fn norm_table(par: &ConicParam, m: usize) -> HashMap<Poly, Vec<NormEntry>> {
    let k = par.field();
    let mut out: HashMap<Poly, Vec<NormEntry>> = HashMap::new();
    for alpha in BinForm::all(k, m).filter(|f| f.leading() == 1) {
        let nm = par.norm(&alpha);
        let at_ram = par.ram.iter().map(|(ext, pt)| ConicParam::eval(ext, &alpha, *pt)).collect();
        out.entry(nm.monic()).or_default().push(NormEntry { at_ram, lc: nm.lc() });
    }
    out
}

impl<'a> MEngine<'a> {
    pub fn new(set: &'a Setting, n: usize) -> Result<Self, CountError> {
        if set.rho() != 2 {
            return Err(CountError::Unsupported(format!("ℳ counts need g′ = 0, got ρ = {}", set.rho())));
        }
        let par = ConicParam::new(&set.cover)?;
        let (nm, np) = (set.n_minus(), set.n_plus());
        if n < nm.max(np) {
            return Err(CountError::Precondition(format!("n = {n} < max(N₊, N₋)")));
        }
        let (ma, mb) = (n - nm, n - np);
        let table_a = norm_table(&par, ma);
        let table_b = if mb == ma { table_a.clone() } else { norm_table(&par, mb) };
        let sm = set.sigma_minus();
        let sp = set.sigma_plus();
        let c = (0..par.ram.len())
            .map(|i| {
                let ext = &par.ram[i].0;
                let num = ext.mul(ext.from_poly(&sm), par.kappa(i, ma));
                let den = ext.mul(ext.from_poly(&sp), par.kappa(i, mb));
                ext.div(num, den).expect("Σ avoids R")
            })
            .collect();
        Ok(MEngine { set, par, n, ma, mb, table_a, table_b, c })
    }

    pub fn degrees(&self) -> (usize, usize) {
        (self.ma, self.mb)
    }

    fn roots(ext: &ExtField, v: u32) -> u64 {
        (1 + ext.legendre(v) as i64) as u64
    }

    /// Σ 1/|Aut| over ℳ_d-points above `base`.
    pub fn count(&self, base: &BasePoint) -> Result<BigRational, CountError> {
        if base.n != self.n {
            return Err(CountError::Precondition("base degree does not match the engine".into()));
        }
        let k = self.set.field();
        let q = k.p() as i64;
        let ga = base.a.exact_div(&self.set.sigma_minus());
        let gb = base.b.exact_div(&self.set.sigma_plus());
        let (Some(ga), Some(gb)) = (ga, gb) else {
            return Ok(BigRational::zero());
        };
        let ram = &self.par.ram;
        let empty = Vec::new();
        if !base.a.is_zero() && !base.b.is_zero() {
            let la = self.table_a.get(&ga.monic()).unwrap_or(&empty);
            let lb = self.table_b.get(&gb.monic()).unwrap_or(&empty);
            let mut total = 0u64;
            for al in la {
                let lambda = k.mul(base.a.lc(), k.inv(al.lc)?);
                for be in lb {
                    let j0 = k.mul(k.mul(lambda, be.lc), k.inv(base.b.lc())?);
                    let mut prod = 1u64;
                    for (i, (ext, _)) in ram.iter().enumerate() {
                        if al.at_ram[i] != 0 {
                            let ratio = ext.div(be.at_ram[i], al.at_ram[i])?;
                            debug_assert_eq!(ext.mul(ratio, ratio), ext.mul(ext.scalar(j0), self.c[i]));
                            continue;
                        }
                        prod *= Self::roots(ext, ext.mul(ext.scalar(j0), self.c[i]));
                        if prod == 0 {
                            break;
                        }
                    }
                    total += prod;
                }
            }
            return Ok(rat(total as i64, 1));
        }
        // One of a, b vanishes: the surviving norm fixes its form up to the
        // scalar j₀, which then runs freely over F_q^×.
        let list = if base.a.is_zero() {
            self.table_b.get(&gb.monic()).map_or(0, Vec::len)
        } else {
            self.table_a.get(&ga.monic()).map_or(0, Vec::len)
        };
        let mut per = 0i64;
        for j0 in 1..k.p() {
            let mut prod = 1i64;
            for (i, (ext, _)) in ram.iter().enumerate() {
                prod *= Self::roots(ext, ext.mul(ext.scalar(j0), self.c[i])) as i64;
            }
            per += prod;
        }
        Ok(rat(per * list as i64, q - 1))
    }
}

/// ℳ_d count over a regular base from local data only:
/// lifts(div a − Σ₋)·lifts(div b − Σ₊)·∏_{x∈R, a(x)=0}(1 + (a,f)_x(b,f)_x),
/// where lifts(E) counts effective E′ on X′ with ν_*E′ = E.
pub fn count_m_local(set: &Setting, base: &BasePoint) -> Result<BigRational, CountError> {
    if base.a.is_zero() || base.b.is_zero() {
        return Err(CountError::Unsupported("local ℳ formula needs a, b ≠ 0".into()));
    }
    let lifts = |div: &Divisor| -> u64 {
        div.support()
            .map(|(p, &m)| match set.cover.splitting_type(p) {
                SplitType::Split => m as u64 + 1,
                SplitType::Inert => u64::from(m % 2 == 0),
                SplitType::Ramified => 1,
            })
            .product()
    };
    let mut sm = Divisor::zero();
    for pi in &set.sigma.minus {
        sm.add_at(Place::Finite(pi.clone()), 1);
    }
    let mut sp = Divisor::zero();
    for pi in &set.sigma.plus {
        sp.add_at(Place::Finite(pi.clone()), 1);
    }
    let da = Divisor::of_form(&base.a, base.n)?.sub(&sm);
    let db = Divisor::of_form(&base.b, base.n)?.sub(&sp);
    if !da.is_effective() || !db.is_effective() {
        return Ok(BigRational::zero());
    }
    let mut total = lifts(&da) * lifts(&db);
    for x in set.cover.ramified_places() {
        if da.mult(&x) == 0 {
            continue;
        }
        let prec = da.mult(&x).max(db.mult(&x)) as u32 + 2;
        let fx = LocalElement::from_poly(&x, set.cover.f(), prec)?;
        let ea = hilbert_symbol(&LocalElement::from_poly(&x, &base.a, prec)?, &fx)?;
        let eb = hilbert_symbol(&LocalElement::from_poly(&x, &base.b, prec)?, &fx)?;
        total *= (1 + ea * eb) as u64;
    }
    Ok(rat(total as i64, 1))
}

// ---------------------------------------------------------------------------
// Picard engine.

/// Pic⁰_{X′}(F_q): trivial for g′ = 0, an explicit table for g′ = 1.
#[derive(Clone, Debug)]
pub enum CoverPicard {
    Trivial,
    GenusOne { group: ClassGroup, n1: u64, n2: u64 },
}

impl CoverPicard {
    pub fn order(&self) -> usize {
        match self {
            CoverPicard::Trivial => 1,
            CoverPicard::GenusOne { group, .. } => group.order(),
        }
    }

    /// P(1) from #X′(F_q), together with whether #X′(F_{q²}) matches the
    /// L-polynomial's prediction.
    pub fn l_value(&self, q: u64) -> (u64, bool) {
        match self {
            CoverPicard::Trivial => (1, true),
            CoverPicard::GenusOne { n1, n2, .. } => {
                let (c1, pred) = l_polynomial_genus_one(q, *n1);
                ((1 + c1 + q as i64) as u64, pred == *n2)
            }
        }
    }
}

pub fn class_group(cover: &DoubleCover) -> Result<CoverPicard, CountError> {
    match cover.genus() {
        0 => Ok(CoverPicard::Trivial),
        1 => {
            let model = QuarticModel::new(cover)?;
            let group = model.class_group()?;
            Ok(CoverPicard::GenusOne { group, n1: model.count_points(1), n2: model.count_points(2) })
        }
        g => Err(CountError::Unsupported(format!("class group for g′ = {g}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::local::xi_fiber;

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
    fn base_size_and_validity() {
        let set = setting(3, &[1, 0, 1], &[&[0, 1]], &[]);
        let dv = point(&set, &[-1, 1], 1);
        let bases = enumerate_base(&set, &dv).unwrap();
        assert_eq!(bases.len(), 3usize.pow(3 - 1 + 1));
        assert!(bases.iter().all(|b| b.is_valid(&set, &dv)));
    }

    #[test]
    fn base_matches_literal_filter() {
        let set = setting(3, &[1, 0, 1], &[&[0, 1]], &[&[1, 1]]);
        let dv = point(&set, &[-1, 1], 1);
        let n = 3;
        let k = set.field();
        let pdf = difference_form(&set, &dv);
        let mut lit = Vec::new();
        for idx in 0..3u64.pow(n as u32 + 1) {
            let a = Poly::from_index(k, idx);
            let bp = BasePoint { n, b: a.sub(&pdf), a };
            if bp.is_valid(&set, &dv) {
                lit.push(bp);
            }
        }
        lit.sort();
        assert_eq!(enumerate_base(&set, &dv).unwrap(), lit);
    }

    #[test]
    fn s8_entries() {
        let t = s8_table();
        assert_eq!(t[s8_index([1, 1, 1, 1])], 8);
        assert_eq!(t[s8_index([0, 0, 0, 0])], 0);
        assert!(t.iter().all(|v| v % 2 == 0));
    }

    /// Literal enumeration: all forms φ₁₁, φ₁₂ and scalars μ, the other two
    /// entries by exact division, conditions (1), (2), (5) by evaluation, and
    /// at each x ∈ R the residue sum over (ū₁, ū₂, ū₁′) ∈ k(x)^×³ of η̄(ū₁ū₂)
    /// times the number of rank-one square roots of the twisted residue matrix.
    fn brute_force_n(set: &Setting, base: &BasePoint) -> BTreeMap<(i64, i64), BigRational> {
        let k = set.field();
        let q = k.p() as u64;
        let n = base.n;
        let forms = |d: usize| (0..q.pow(d as u32 + 1)).map(move |i| Poly::from_index(k, i)).filter(|g| !g.is_zero());
        let div_form = |s: &Poly, g: &Poly, dg: usize| -> Option<Poly> {
            if s.is_zero() {
                return Some(Poly::zero(k));
            }
            let h = s.exact_div(g)?;
            (h.degree() <= n - dg).then_some(h)
        };
        let mut out: BTreeMap<(i64, i64), BigRational> = BTreeMap::new();
        let nm = set.n_minus() as i64;
        let np = set.n_plus() as i64;
        for d11 in 0..=n {
            for d12 in 0..=n {
                let (d22, d21) = ((n - d11) as i64, (n - d12) as i64);
                let mut acc = BigRational::zero();
                let phi11s: Vec<Poly> = if base.a.is_zero() {
                    forms(d11).chain([Poly::zero(k)]).collect()
                } else {
                    forms(d11).collect()
                };
                let phi12s: Vec<Poly> = if base.b.is_zero() {
                    forms(d12).chain([Poly::zero(k)]).collect()
                } else {
                    forms(d12).collect()
                };
                for p11 in &phi11s {
                    for p12 in &phi12s {
                        for mu in 1..k.p() {
                            let mu_inv = k.inv(mu).unwrap();
                            let cands22: Vec<Poly> = if base.a.is_zero() {
                                if p11.is_zero() { forms(n - d11).collect() } else { vec![Poly::zero(k)] }
                            } else {
                                match div_form(&base.a.scale(mu_inv), p11, d11) {
                                    Some(h) => vec![h],
                                    None => vec![],
                                }
                            };
                            let cands21: Vec<Poly> = if base.b.is_zero() {
                                if p12.is_zero() { forms(n - d12).collect() } else { vec![Poly::zero(k)] }
                            } else {
                                match div_form(&base.b.scale(mu_inv), p12, d12) {
                                    Some(h) => vec![h],
                                    None => vec![],
                                }
                            };
                            for p22 in &cands22 {
                                for p21 in &cands21 {
                                    let nz = |g: &Poly, pi: &Poly| !g.is_zero() && !vanishes_at(g, pi);
                                    let z = |g: &Poly, pi: &Poly| g.is_zero() || vanishes_at(g, pi);
                                    let ok1 = set.sigma.minus.iter().all(|pi| z(p22, pi))
                                        && set.sigma.plus.iter().all(|pi| nz(p11, pi) && nz(p22, pi));
                                    let ok2 = set.sigma.plus.iter().all(|pi| z(p21, pi))
                                        && set.sigma.minus.iter().all(|pi| nz(p12, pi) && nz(p21, pi));
                                    let ok5a = if (d11 as i64) < d22 - nm { !p11.is_zero() } else { !p22.is_zero() };
                                    let ok5b = if (d12 as i64) < d21 - np { !p12.is_zero() } else { !p21.is_zero() };
                                    if !(ok1 && ok2 && ok5a && ok5b) {
                                        continue;
                                    }
                                    let mut w = if (d11 + d12) % 2 == 1 {
                                        BigRational::from_integer(set.cover.eta_inf_t().into())
                                    } else {
                                        rat(1, 1)
                                    };
                                    for ext in set.ram_fields() {
                                        let v = [p11, p12, p21, p22].map(|g| ext.from_poly(g));
                                        let mut s = 0i64;
                                        for u1 in ext.units() {
                                            for u2 in ext.units() {
                                                for u1p in ext.units() {
                                                    let inv = ext.inv(u1p).unwrap();
                                                    let m = [
                                                        ext.mul(v[0], ext.mul(u1, inv)),
                                                        ext.mul(v[1], ext.mul(u2, inv)),
                                                        ext.mul(v[2], u1),
                                                        ext.mul(v[3], u2),
                                                    ];
                                                    s += ext.legendre(ext.mul(u1, u2)) as i64 * xi_fiber(ext, &m) as i64;
                                                }
                                            }
                                        }
                                        w *= rat(s, (ext.size() as i64 - 1).pow(3));
                                    }
                                    acc += w;
                                }
                            }
                        }
                    }
                }
                acc /= rat((q as i64 - 1).pow(3), 1);
                if !acc.is_zero() {
                    out.insert((d11 as i64, d12 as i64), acc);
                }
            }
        }
        out
    }

    #[test]
    fn count_n_matches_brute_force_cfg_a() {
        let set = setting(3, &[1, 0, 1], &[], &[]);
        let dv = point(&set, &[-1, 1], 1);
        let bases = enumerate_base(&set, &dv).unwrap();
        assert!(bases.contains(&base_zero(&set, &dv).unwrap()));
        assert!(bases.contains(&base_infinity(&set, &dv).unwrap()));
        for b in &bases {
            let fast = count_n(&set, b, NMode::Standard).unwrap();
            assert_eq!(fast.counts, brute_force_n(&set, b), "base {b:?}");
        }
    }

    #[test]
    fn count_n_matches_brute_force_with_sigma() {
        let set = setting(5, &[0, -1, 1], &[&[-3, 1]], &[&[-2, 1]]);
        let dv = Divisor::zero();
        for b in &enumerate_base(&set, &dv).unwrap() {
            let fast = count_n(&set, b, NMode::Standard).unwrap();
            assert_eq!(fast.counts, brute_force_n(&set, b), "base {b:?}");
        }
    }

    #[test]
    fn condition_five_kills_large_d11() {
        let set = setting(5, &[0, -1, 1], &[], &[&[-2, 1]]);
        let dv = point(&set, &[-4, 1], 1);
        let n = 3i64;
        for b in enumerate_base(&set, &dv).unwrap() {
            let c = count_n(&set, &b, NMode::Standard).unwrap();
            for &(d11, d12) in c.counts.keys() {
                assert!(d11 <= n - set.n_minus() as i64 && d12 <= n - set.n_plus() as i64);
            }
        }
    }

    #[test]
    fn local_m_formula_matches_engine() {
        for set in [setting(3, &[1, 0, 1], &[], &[]), setting(5, &[0, -1, 1], &[&[-3, 1]], &[])] {
            for d in 0..=2usize {
                let eng = MEngine::new(&set, d + 2).unwrap();
                for dv in enumerate_effective_divisors(set.field(), d, &set.cover.ramified_places()) {
                    if set.check_divisor(&dv).is_err() {
                        continue;
                    }
                    for b in enumerate_base(&set, &dv).unwrap() {
                        if b.a.is_zero() || b.b.is_zero() {
                            continue;
                        }
                        assert_eq!(eng.count(&b).unwrap(), count_m_local(&set, &b).unwrap(), "{b:?}");
                    }
                }
            }
        }
    }

    #[test]
    fn m_count_equals_n_total() {
        for set in [
            setting(3, &[1, 0, 1], &[], &[]),
            setting(3, &[1, 0, 1], &[&[0, 1]], &[]),
            setting(5, &[0, -1, 1], &[&[-3, 1]], &[&[-2, 1]]),
            setting(5, &[0, -1, 1], &[], &[&[-2, 1]]),
        ] {
            for d in 0..=2usize {
                let eng = MEngine::new(&set, d + 2).unwrap();
                for dv in enumerate_effective_divisors(set.field(), d, &[]) {
                    if set.check_divisor(&dv).is_err() {
                        continue;
                    }
                    for b in enumerate_base(&set, &dv).unwrap() {
                        let n = count_n(&set, &b, NMode::Standard).unwrap().total();
                        assert_eq!(eng.count(&b).unwrap(), n, "D={dv} {b:?}");
                    }
                }
            }
        }
    }

    #[test]
    fn genus_zero_picard_is_trivial() {
        let set = setting(3, &[1, 0, 1], &[], &[]);
        assert_eq!(class_group(&set.cover).unwrap().order(), 1);
    }
}
