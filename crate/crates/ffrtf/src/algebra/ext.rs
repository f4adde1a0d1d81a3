use super::{AlgebraError, Poly, PrimeField};

/// F_p[θ]/(π(θ)) for a monic irreducible π.
///
/// Elements are `u32` codes: the base-p digits of the coefficient vector in
/// the basis 1, θ, θ², ….  Multiplication goes through discrete log tables.
#[derive(Clone, Debug)]
pub struct ExtField {
    base: PrimeField,
    modulus: Poly,
    d: usize,
    size: u32,
    exp: Vec<u32>,
    log: Vec<u32>,
}

const NO_LOG: u32 = u32::MAX;

impl ExtField {
    pub fn new(modulus: &Poly) -> Result<Self, AlgebraError> {
        let base = modulus.field();
        if !modulus.is_monic() || !modulus.is_irreducible() {
            return Err(AlgebraError::Reducible);
        }
        let d = modulus.degree();
        let size = base.p().pow(d as u32);
        let order = (size - 1) as u64;
        let primes: Vec<u64> = (2..=order).filter(|&l| order % l == 0 && (2..l).all(|m| l % m != 0)).collect();
        let gen = (1..size as u64)
            .map(|i| Poly::from_index(base, i))
            .find(|g| primes.iter().all(|&l| !g.powmod(order / l, modulus).is_one()))
            .expect("multiplicative group is cyclic");
        let mut exp = vec![0u32; (size - 1) as usize];
        let mut log = vec![NO_LOG; size as usize];
        let mut cur = Poly::one(base);
        for (k, slot) in exp.iter_mut().enumerate() {
            let code = cur.to_index() as u32;
            *slot = code;
            log[code as usize] = k as u32;
            cur = cur.mul(&gen).rem(modulus);
        }
        Ok(ExtField { base, modulus: modulus.clone(), d, size, exp, log })
    }

    pub fn base(&self) -> PrimeField {
        self.base
    }

    pub fn modulus(&self) -> &Poly {
        &self.modulus
    }

    pub fn degree(&self) -> usize {
        self.d
    }

    pub fn size(&self) -> u32 {
        self.size
    }

    pub fn zero(&self) -> u32 {
        0
    }

    pub fn one(&self) -> u32 {
        1
    }

    /// The class of θ, the root of the modulus.
    pub fn theta(&self) -> u32 {
        self.from_poly(&Poly::t(self.base))
    }

    pub fn elements(&self) -> std::ops::Range<u32> {
        0..self.size
    }

    pub fn units(&self) -> std::ops::Range<u32> {
        1..self.size
    }

    /// Embed a base-field scalar.
    pub fn scalar(&self, a: u32) -> u32 {
        a % self.base.p()
    }

    pub fn from_poly(&self, g: &Poly) -> u32 {
        g.rem(&self.modulus).to_index() as u32
    }

    pub fn to_poly(&self, a: u32) -> Poly {
        Poly::from_index(self.base, a as u64)
    }

    pub fn add(&self, a: u32, b: u32) -> u32 {
        let p = self.base.p();
        let (mut a, mut b) = (a, b);
        let mut out = 0;
        let mut scale = 1;
        while a > 0 || b > 0 {
            out += ((a % p + b % p) % p) * scale;
            a /= p;
            b /= p;
            scale *= p;
        }
        out
    }

    pub fn neg(&self, a: u32) -> u32 {
        let p = self.base.p();
        let mut a = a;
        let mut out = 0;
        let mut scale = 1;
        while a > 0 {
            out += ((p - a % p) % p) * scale;
            a /= p;
            scale *= p;
        }
        out
    }

    pub fn sub(&self, a: u32, b: u32) -> u32 {
        self.add(a, self.neg(b))
    }

    #[inline]
    pub fn mul(&self, a: u32, b: u32) -> u32 {
        if a == 0 || b == 0 {
            return 0;
        }
        let n = self.size - 1;
        let k = (self.log[a as usize] + self.log[b as usize]) % n;
        self.exp[k as usize]
    }

    pub fn inv(&self, a: u32) -> Result<u32, AlgebraError> {
        if a == 0 {
            return Err(AlgebraError::DivisionByZero);
        }
        let n = self.size - 1;
        Ok(self.exp[((n - self.log[a as usize]) % n) as usize])
    }

    pub fn div(&self, a: u32, b: u32) -> Result<u32, AlgebraError> {
        Ok(self.mul(a, self.inv(b)?))
    }

    pub fn pow(&self, a: u32, e: i64) -> u32 {
        if a == 0 {
            return if e == 0 { 1 } else { 0 };
        }
        let n = (self.size - 1) as i64;
        let k = (self.log[a as usize] as i64 * e.rem_euclid(n)).rem_euclid(n);
        self.exp[k as usize]
    }

    pub fn frobenius(&self, a: u32) -> u32 {
        self.pow(a, self.base.p() as i64)
    }

    /// Quadratic character of k(x): 0, +1 or -1.
    #[inline]
    pub fn legendre(&self, a: u32) -> i8 {
        if a == 0 {
            0
        } else if self.log[a as usize] % 2 == 0 {
            1
        } else {
            -1
        }
    }

    pub fn sqrt(&self, a: u32) -> Option<u32> {
        if a == 0 {
            return Some(0);
        }
        let l = self.log[a as usize];
        (l % 2 == 0).then(|| self.exp[(l / 2) as usize])
    }

    pub fn norm(&self, a: u32) -> u32 {
        let e = ((self.size - 1) / (self.base.p() - 1)) as i64;
        let n = self.pow(a, e);
        debug_assert!(n < self.base.p());
        n
    }

    pub fn trace(&self, a: u32) -> u32 {
        let mut acc = 0;
        let mut cur = a;
        for _ in 0..self.d {
            acc = self.add(acc, cur);
            cur = self.frobenius(cur);
        }
        debug_assert!(acc < self.base.p());
        acc
    }

    /// Evaluate a polynomial over the base field at an element of this field.
    pub fn eval(&self, g: &Poly, x: u32) -> u32 {
        g.coeffs().iter().rev().fold(0, |acc, &c| self.add(self.mul(acc, x), self.scalar(c)))
    }

    pub fn nonsquare(&self) -> u32 {
        self.exp[1]
    }
}
