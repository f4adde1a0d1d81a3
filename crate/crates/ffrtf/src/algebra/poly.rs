use std::cmp::Ordering;
use std::fmt;

use super::{AlgebraError, PrimeField};

/// Dense univariate polynomial over F_p in the variable `t`, low degree first.
/// The coefficient vector never ends in a zero.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Poly {
    f: PrimeField,
    c: Vec<u32>,
}

impl PartialOrd for Poly {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Degree first, then coefficients from the top down.
impl Ord for Poly {
    fn cmp(&self, other: &Self) -> Ordering {
        self.c
            .len()
            .cmp(&other.c.len())
            .then_with(|| self.c.iter().rev().cmp(other.c.iter().rev()))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Factorization {
    pub unit: u32,
    /// Monic irreducible factors with multiplicities, sorted.
    pub factors: Vec<(Poly, u32)>,
}

impl Poly {
    pub fn new(f: PrimeField, coeffs: Vec<u32>) -> Self {
        let mut c: Vec<u32> = coeffs.into_iter().map(|a| a % f.p()).collect();
        while c.last() == Some(&0) {
            c.pop();
        }
        Poly { f, c }
    }

    pub fn from_i64(f: PrimeField, coeffs: &[i64]) -> Self {
        Poly::new(f, coeffs.iter().map(|&a| f.reduce(a)).collect())
    }

    pub fn zero(f: PrimeField) -> Self {
        Poly { f, c: Vec::new() }
    }

    pub fn one(f: PrimeField) -> Self {
        Poly::constant(f, 1)
    }

    pub fn constant(f: PrimeField, a: u32) -> Self {
        Poly::new(f, vec![a])
    }

    /// The polynomial `t`.
    pub fn t(f: PrimeField) -> Self {
        Poly::new(f, vec![0, 1])
    }

    /// `t - a`.
    pub fn linear(f: PrimeField, a: u32) -> Self {
        Poly::new(f, vec![f.neg(a % f.p()), 1])
    }

    pub fn field(&self) -> PrimeField {
        self.f
    }

    pub fn coeffs(&self) -> &[u32] {
        &self.c
    }

    pub fn coeff(&self, i: usize) -> u32 {
        self.c.get(i).copied().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.c.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.c == [1]
    }

    /// Degree, with `None` for the zero polynomial.
    pub fn deg(&self) -> Option<usize> {
        self.c.len().checked_sub(1)
    }

    /// Degree with the zero polynomial reported as 0.
    pub fn degree(&self) -> usize {
        self.c.len().saturating_sub(1)
    }

    pub fn lc(&self) -> u32 {
        self.c.last().copied().unwrap_or(0)
    }

    pub fn is_monic(&self) -> bool {
        self.lc() == 1
    }

    pub fn add(&self, o: &Poly) -> Poly {
        let n = self.c.len().max(o.c.len());
        Poly::new(self.f, (0..n).map(|i| self.f.add(self.coeff(i), o.coeff(i))).collect())
    }

    pub fn sub(&self, o: &Poly) -> Poly {
        let n = self.c.len().max(o.c.len());
        Poly::new(self.f, (0..n).map(|i| self.f.sub(self.coeff(i), o.coeff(i))).collect())
    }

    pub fn neg(&self) -> Poly {
        Poly::new(self.f, self.c.iter().map(|&a| self.f.neg(a)).collect())
    }

    pub fn scale(&self, a: u32) -> Poly {
        Poly::new(self.f, self.c.iter().map(|&x| self.f.mul(x, a)).collect())
    }

    pub fn mul(&self, o: &Poly) -> Poly {
        if self.is_zero() || o.is_zero() {
            return Poly::zero(self.f);
        }
        let p = self.f.p();
        let mut acc = vec![0u32; self.c.len() + o.c.len() - 1];
        for (i, &a) in self.c.iter().enumerate() {
            if a == 0 {
                continue;
            }
            for (j, &b) in o.c.iter().enumerate() {
                acc[i + j] = (acc[i + j] + a * b) % p;
            }
        }
        Poly::new(self.f, acc)
    }

    pub fn pow(&self, mut e: u32) -> Poly {
        let mut base = self.clone();
        let mut acc = Poly::one(self.f);
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            base = base.mul(&base);
            e >>= 1;
        }
        acc
    }

    pub fn divrem(&self, d: &Poly) -> Result<(Poly, Poly), AlgebraError> {
        if d.is_zero() {
            return Err(AlgebraError::DivisionByZero);
        }
        let f = self.f;
        let mut r = self.c.clone();
        if r.len() < d.c.len() {
            return Ok((Poly::zero(f), self.clone()));
        }
        let inv = f.inv(d.lc())?;
        let dl = d.c.len();
        let mut q = vec![0u32; r.len() - dl + 1];
        for k in (0..q.len()).rev() {
            let coef = f.mul(r[k + dl - 1], inv);
            q[k] = coef;
            if coef != 0 {
                for (j, &b) in d.c.iter().enumerate() {
                    r[k + j] = f.sub(r[k + j], f.mul(coef, b));
                }
            }
        }
        Ok((Poly::new(f, q), Poly::new(f, r)))
    }

    pub fn rem(&self, d: &Poly) -> Poly {
        self.divrem(d).expect("nonzero divisor").1
    }

    /// Quotient when `d` divides `self`, otherwise `None`.
    pub fn exact_div(&self, d: &Poly) -> Option<Poly> {
        let (q, r) = self.divrem(d).ok()?;
        r.is_zero().then_some(q)
    }

    pub fn monic(&self) -> Poly {
        if self.is_zero() {
            return self.clone();
        }
        let inv = self.f.inv(self.lc()).expect("nonzero leading coefficient");
        self.scale(inv)
    }

    pub fn gcd(&self, o: &Poly) -> Poly {
        let (mut a, mut b) = (self.clone(), o.clone());
        while !b.is_zero() {
            let r = a.rem(&b);
            a = b;
            b = r;
        }
        a.monic()
    }

    pub fn derivative(&self) -> Poly {
        Poly::new(
            self.f,
            self.c.iter().enumerate().skip(1).map(|(i, &a)| self.f.mul(a, (i as u32) % self.f.p())).collect(),
        )
    }

    pub fn eval(&self, x: u32) -> u32 {
        self.c.iter().rev().fold(0, |acc, &a| self.f.add(self.f.mul(acc, x), a))
    }

    pub fn powmod(&self, mut e: u64, m: &Poly) -> Poly {
        let mut base = self.rem(m);
        let mut acc = Poly::one(self.f).rem(m);
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base).rem(m);
            }
            base = base.mul(&base).rem(m);
            e >>= 1;
        }
        acc
    }

    /// Inverse modulo `m`, when `self` and `m` are coprime.
    pub fn inv_mod(&self, m: &Poly) -> Option<Poly> {
        let (mut r0, mut r1) = (m.clone(), self.rem(m));
        let (mut s0, mut s1) = (Poly::zero(self.f), Poly::one(self.f));
        while !r1.is_zero() {
            let (q, r) = r0.divrem(&r1).expect("nonzero divisor");
            r0 = std::mem::replace(&mut r1, r);
            let s = s0.sub(&q.mul(&s1));
            s0 = std::mem::replace(&mut s1, s);
        }
        if r0.degree() != 0 {
            return None;
        }
        let c = self.f.inv(r0.lc()).ok()?;
        Some(s0.scale(c).rem(m))
    }

    /// `t^n · self(1/t)`; requires `n >= deg`.
    pub fn reversed(&self, n: usize) -> Poly {
        let mut c = vec![0; n + 1];
        for (i, &a) in self.c.iter().enumerate() {
            c[n - i] = a;
        }
        Poly::new(self.f, c)
    }

    /// Multiplicity of `pi` in `self` (`self` nonzero).
    pub fn valuation(&self, pi: &Poly) -> u32 {
        let mut v = 0;
        let mut g = self.clone();
        while let Some(q) = g.exact_div(pi) {
            if g.is_zero() {
                break;
            }
            g = q;
            v += 1;
        }
        v
    }

    /// Base-p digit encoding of the coefficient vector.
    pub fn to_index(&self) -> u64 {
        self.c.iter().rev().fold(0u64, |acc, &a| acc * self.f.p() as u64 + a as u64)
    }

    pub fn from_index(f: PrimeField, mut idx: u64) -> Poly {
        let p = f.p() as u64;
        let mut c = Vec::new();
        while idx > 0 {
            c.push((idx % p) as u32);
            idx /= p;
        }
        Poly::new(f, c)
    }

    /// All monic polynomials of exact degree `n`.
    pub fn monics(f: PrimeField, n: usize) -> impl Iterator<Item = Poly> {
        let count = (f.p() as u64).pow(n as u32);
        (0..count).map(move |i| {
            let mut c = Poly::from_index(f, i).c;
            c.resize(n, 0);
            c.push(1);
            Poly { f, c }
        })
    }

    pub fn is_irreducible(&self) -> bool {
        match self.deg() {
            None | Some(0) => false,
            Some(1) => true,
            Some(_) => self.factor().map(|fz| fz.factors.len() == 1 && fz.factors[0].1 == 1).unwrap_or(false),
        }
    }

    pub fn is_squarefree(&self) -> bool {
        !self.is_zero() && self.gcd(&self.derivative()).is_one()
    }

    pub fn factor(&self) -> Result<Factorization, AlgebraError> {
        if self.is_zero() {
            return Err(AlgebraError::ZeroPolynomial);
        }
        let unit = self.lc();
        let mut factors = Vec::new();
        for (sq, m) in squarefree_parts(&self.monic()) {
            for (g, k) in distinct_degree(&sq) {
                for h in equal_degree(&g, k) {
                    factors.push((h, m));
                }
            }
        }
        factors.sort();
        let mut merged: Vec<(Poly, u32)> = Vec::new();
        for (h, m) in factors {
            match merged.last_mut() {
                Some((g, k)) if *g == h => *k += m,
                _ => merged.push((h, m)),
            }
        }
        Ok(Factorization { unit, factors: merged })
    }

    pub fn parse(f: PrimeField, s: &str) -> Result<Poly, AlgebraError> {
        parse_poly(f, s)
    }
}

impl Factorization {
    pub fn expand(&self, f: PrimeField) -> Poly {
        self.factors.iter().fold(Poly::constant(f, self.unit), |acc, (g, m)| acc.mul(&g.pow(*m)))
    }
}

fn pth_root(g: &Poly) -> Poly {
    let p = g.f.p() as usize;
    Poly::new(g.f, g.c.iter().step_by(p).copied().collect())
}

fn squarefree_parts(g: &Poly) -> Vec<(Poly, u32)> {
    let mut out = Vec::new();
    if g.degree() == 0 {
        return out;
    }
    let p = g.f.p();
    let d = g.derivative();
    if d.is_zero() {
        for (h, m) in squarefree_parts(&pth_root(g)) {
            out.push((h, m * p));
        }
        return out;
    }
    let mut c = g.gcd(&d);
    let mut w = g.exact_div(&c).expect("gcd divides");
    let mut i = 1;
    while !w.is_one() {
        let y = w.gcd(&c);
        let z = w.exact_div(&y).expect("gcd divides");
        if z.degree() > 0 {
            out.push((z, i));
        }
        i += 1;
        c = c.exact_div(&y).expect("gcd divides");
        w = y;
    }
    if !c.is_one() {
        for (h, m) in squarefree_parts(&pth_root(&c)) {
            out.push((h, m * p));
        }
    }
    out
}

fn distinct_degree(g: &Poly) -> Vec<(Poly, usize)> {
    let f = g.f;
    let x = Poly::t(f);
    let mut out = Vec::new();
    let mut rem = g.clone();
    let mut h = x.clone();
    let mut i = 1;
    while rem.degree() >= 2 * i {
        h = h.powmod(f.p() as u64, &rem);
        let d = h.sub(&x).gcd(&rem);
        if !d.is_one() {
            rem = rem.exact_div(&d).expect("gcd divides");
            h = h.rem(&rem);
            out.push((d, i));
        }
        i += 1;
    }
    if rem.degree() > 0 {
        let k = rem.degree();
        out.push((rem, k));
    }
    out
}

fn equal_degree(g: &Poly, k: usize) -> Vec<Poly> {
    if g.degree() == k {
        return vec![g.clone()];
    }
    let f = g.f;
    let e = ((f.p() as u64).pow(k as u32) - 1) / 2;
    let mut state: u64 = 0x9E37_79B9_7F4A_7C15 ^ g.to_index();
    loop {
        let coeffs = (0..g.degree())
            .map(|_| {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                ((state >> 33) % f.p() as u64) as u32
            })
            .collect();
        let a = Poly::new(f, coeffs);
        if a.degree() == 0 {
            continue;
        }
        let b = a.powmod(e, g).sub(&Poly::one(f));
        let d = b.gcd(g);
        if d.degree() > 0 && d.degree() < g.degree() {
            let mut out = equal_degree(&d, k);
            out.extend(equal_degree(&g.exact_div(&d).expect("gcd divides"), k));
            return out;
        }
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(out, "0");
        }
        let mut first = true;
        for (i, &a) in self.c.iter().enumerate().rev() {
            if a == 0 {
                continue;
            }
            if !first {
                write!(out, "+")?;
            }
            first = false;
            match (i, a) {
                (0, _) => write!(out, "{a}")?,
                (1, 1) => write!(out, "t")?,
                (1, _) => write!(out, "{a}*t")?,
                (_, 1) => write!(out, "t^{i}")?,
                _ => write!(out, "{a}*t^{i}")?,
            }
        }
        Ok(())
    }
}

/// Grammar: signed sum of terms `c`, `c*t`, `t^e`, `c*t^e`, `c t^e`; whitespace ignored.
fn parse_poly(f: PrimeField, s: &str) -> Result<Poly, AlgebraError> {
    let err = |m: &str| AlgebraError::Parse(format!("polynomial `{s}`: {m}"));
    let src: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    if src.is_empty() {
        return Err(err("empty"));
    }
    let bytes = src.as_bytes();
    let mut acc: Vec<i64> = Vec::new();
    let mut i = 0;
    let mut first = true;
    while i < bytes.len() {
        let mut sign = 1i64;
        if bytes[i] == b'+' || bytes[i] == b'-' {
            if bytes[i] == b'-' {
                sign = -1;
            }
            i += 1;
        } else if !first {
            return Err(err("expected + or -"));
        }
        first = false;
        let start = i;
        while i < bytes.len() && bytes[i].is_ascii_digit() {
            i += 1;
        }
        let coef: i64 = if i > start {
            src[start..i].parse::<i64>().map_err(|_| err("coefficient too large"))? % f.p() as i64
        } else {
            1
        };
        if i < bytes.len() && bytes[i] == b'*' {
            i += 1;
            if i >= bytes.len() || bytes[i] != b't' {
                return Err(err("expected t after *"));
            }
        }
        let mut exp = 0usize;
        if i < bytes.len() && bytes[i] == b't' {
            i += 1;
            exp = 1;
            if i < bytes.len() && bytes[i] == b'^' {
                i += 1;
                let es = i;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                if es == i {
                    return Err(err("missing exponent"));
                }
                exp = src[es..i].parse().map_err(|_| err("bad exponent"))?;
                if exp > 64 {
                    return Err(err("exponent too large"));
                }
            }
        } else if i == start {
            return Err(err("empty term"));
        }
        if acc.len() <= exp {
            acc.resize(exp + 1, 0);
        }
        acc[exp] += sign * coef;
    }
    Ok(Poly::from_i64(f, &acc))
}
