use std::fmt;

use num_rational::BigRational;
use num_traits::{One, Zero};

use super::AlgebraError;

/// An element of Q[Z]/Φ_p(Z), stored in the basis 1, Z, …, Z^{p-2}.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CycloRat {
    p: u32,
    c: Vec<BigRational>,
}

impl CycloRat {
    pub fn zero(p: u32) -> Self {
        CycloRat { p, c: vec![BigRational::zero(); (p - 1) as usize] }
    }

    pub fn from_rational(p: u32, r: BigRational) -> Self {
        let mut z = CycloRat::zero(p);
        z.c[0] = r;
        z
    }

    pub fn one(p: u32) -> Self {
        CycloRat::from_rational(p, BigRational::one())
    }

    /// Z^k for any integer k.
    pub fn zeta_pow(p: u32, k: i64) -> Self {
        let mut full = vec![BigRational::zero(); p as usize];
        full[k.rem_euclid(p as i64) as usize] = BigRational::one();
        CycloRat::reduce(p, full)
    }

    /// Reduce a vector indexed by exponents mod p using 1 + Z + … + Z^{p-1} = 0.
    fn reduce(p: u32, mut full: Vec<BigRational>) -> Self {
        let top = full.pop().expect("length p");
        for a in full.iter_mut() {
            *a -= &top;
        }
        CycloRat { p, c: full }
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn coeffs(&self) -> &[BigRational] {
        &self.c
    }

    pub fn from_coeffs(p: u32, coeffs: Vec<BigRational>) -> Result<Self, AlgebraError> {
        if coeffs.len() != (p - 1) as usize {
            return Err(AlgebraError::Parse(format!("cyclotomic element needs {} coefficients", p - 1)));
        }
        Ok(CycloRat { p, c: coeffs })
    }

    pub fn is_zero(&self) -> bool {
        self.c.iter().all(Zero::is_zero)
    }

    /// The rational value, if the element lies in Q.
    pub fn as_rational(&self) -> Option<BigRational> {
        self.c[1..].iter().all(Zero::is_zero).then(|| self.c[0].clone())
    }

    fn check(&self, o: &Self) -> Result<(), AlgebraError> {
        if self.p != o.p {
            return Err(AlgebraError::MixedRings(super::Ring::Cyclo(self.p), super::Ring::Cyclo(o.p)));
        }
        Ok(())
    }

    pub fn try_add(&self, o: &Self) -> Result<Self, AlgebraError> {
        self.check(o)?;
        Ok(CycloRat { p: self.p, c: self.c.iter().zip(&o.c).map(|(a, b)| a + b).collect() })
    }

    pub fn try_mul(&self, o: &Self) -> Result<Self, AlgebraError> {
        self.check(o)?;
        let p = self.p as usize;
        let mut full = vec![BigRational::zero(); p];
        for (i, a) in self.c.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in o.c.iter().enumerate() {
                if b.is_zero() {
                    continue;
                }
                full[(i + j) % p] += a * b;
            }
        }
        Ok(CycloRat::reduce(self.p, full))
    }

    pub fn add(&self, o: &Self) -> Self {
        self.try_add(o).expect("same cyclotomic ring")
    }

    pub fn mul(&self, o: &Self) -> Self {
        self.try_mul(o).expect("same cyclotomic ring")
    }

    pub fn neg(&self) -> Self {
        CycloRat { p: self.p, c: self.c.iter().map(|a| -a).collect() }
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.neg())
    }

    pub fn scale(&self, r: &BigRational) -> Self {
        CycloRat { p: self.p, c: self.c.iter().map(|a| a * r).collect() }
    }

    /// Complex conjugation Z ↦ Z^{-1}.
    pub fn conj(&self) -> Self {
        let p = self.p as usize;
        let mut full = vec![BigRational::zero(); p];
        for (i, a) in self.c.iter().enumerate() {
            full[(p - i) % p] += a;
        }
        CycloRat::reduce(self.p, full)
    }
}

impl fmt::Display for CycloRat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, a) in self.c.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}/{}", a.numer(), a.denom())?;
        }
        write!(f, "]")
    }
}
