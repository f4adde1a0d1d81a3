use std::fmt;

use num_rational::BigRational;
use num_traits::{One, Zero};

use super::AlgebraError;

/// Univariate polynomial over Q, coefficients low to high, trimmed.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct QPoly {
    c: Vec<BigRational>,
}

impl QPoly {
    pub fn new(mut c: Vec<BigRational>) -> Self {
        while c.last().is_some_and(Zero::is_zero) {
            c.pop();
        }
        QPoly { c }
    }

    pub fn zero() -> Self {
        QPoly { c: vec![] }
    }

    pub fn constant(a: BigRational) -> Self {
        QPoly::new(vec![a])
    }

    pub fn one() -> Self {
        QPoly::constant(BigRational::one())
    }

    /// The formal variable.
    pub fn x() -> Self {
        QPoly::new(vec![BigRational::zero(), BigRational::one()])
    }

    pub fn coeffs(&self) -> &[BigRational] {
        &self.c
    }

    pub fn is_zero(&self) -> bool {
        self.c.is_empty()
    }

    pub fn deg(&self) -> Option<usize> {
        self.c.len().checked_sub(1)
    }

    pub fn lc(&self) -> BigRational {
        self.c.last().cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn add(&self, o: &QPoly) -> QPoly {
        let n = self.c.len().max(o.c.len());
        let z = BigRational::zero();
        QPoly::new((0..n).map(|i| self.c.get(i).unwrap_or(&z) + o.c.get(i).unwrap_or(&z)).collect())
    }

    pub fn neg(&self) -> QPoly {
        QPoly { c: self.c.iter().map(|a| -a).collect() }
    }

    pub fn sub(&self, o: &QPoly) -> QPoly {
        self.add(&o.neg())
    }

    pub fn scale(&self, r: &BigRational) -> QPoly {
        QPoly::new(self.c.iter().map(|a| a * r).collect())
    }

    pub fn mul(&self, o: &QPoly) -> QPoly {
        if self.is_zero() || o.is_zero() {
            return QPoly::zero();
        }
        let mut out = vec![BigRational::zero(); self.c.len() + o.c.len() - 1];
        for (i, a) in self.c.iter().enumerate() {
            for (j, b) in o.c.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        QPoly::new(out)
    }

    pub fn divrem(&self, d: &QPoly) -> Result<(QPoly, QPoly), AlgebraError> {
        let dd = d.deg().ok_or(AlgebraError::DivisionByZero)?;
        let inv = BigRational::one() / d.lc();
        let mut r = self.c.clone();
        let mut q = vec![BigRational::zero(); self.c.len().saturating_sub(dd)];
        while r.len() > dd && !r.is_empty() {
            let k = r.len() - 1 - dd;
            let coef = r.last().unwrap() * &inv;
            for (i, b) in d.c.iter().enumerate() {
                r[k + i] -= &coef * b;
            }
            q[k] = coef;
            r.pop();
            while r.last().is_some_and(Zero::is_zero) {
                r.pop();
            }
        }
        Ok((QPoly::new(q), QPoly::new(r)))
    }

    pub fn monic(&self) -> QPoly {
        if self.is_zero() {
            return QPoly::zero();
        }
        self.scale(&(BigRational::one() / self.lc()))
    }

    pub fn gcd(&self, o: &QPoly) -> QPoly {
        let (mut a, mut b) = (self.clone(), o.clone());
        while !b.is_zero() {
            let r = a.divrem(&b).expect("nonzero divisor").1;
            a = b;
            b = r;
        }
        a.monic()
    }

    pub fn eval(&self, x: &BigRational) -> BigRational {
        self.c.iter().rev().fold(BigRational::zero(), |acc, a| acc * x + a)
    }
}

impl fmt::Display for QPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.c.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .c
            .iter()
            .enumerate()
            .filter(|(_, a)| !a.is_zero())
            .map(|(i, a)| match i {
                0 => format!("{a}"),
                1 => format!("({a})*X"),
                _ => format!("({a})*X^{i}"),
            })
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

/// Rational function in one variable with monic, coprime denominator.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RatFunc1 {
    num: QPoly,
    den: QPoly,
}

impl RatFunc1 {
    pub fn new(num: QPoly, den: QPoly) -> Result<Self, AlgebraError> {
        if den.is_zero() {
            return Err(AlgebraError::DivisionByZero);
        }
        let g = num.gcd(&den);
        let g = if g.is_zero() { den.clone() } else { g };
        let num = num.divrem(&g)?.0;
        let den = den.divrem(&g)?.0;
        let lc = den.lc();
        let inv = BigRational::one() / lc;
        Ok(RatFunc1 { num: num.scale(&inv), den: den.scale(&inv) })
    }

    pub fn from_poly(p: QPoly) -> Self {
        RatFunc1 { num: p, den: QPoly::one() }
    }

    pub fn constant(a: BigRational) -> Self {
        RatFunc1::from_poly(QPoly::constant(a))
    }

    pub fn num(&self) -> &QPoly {
        &self.num
    }

    pub fn den(&self) -> &QPoly {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn add(&self, o: &Self) -> Self {
        RatFunc1::new(self.num.mul(&o.den).add(&o.num.mul(&self.den)), self.den.mul(&o.den)).expect("nonzero")
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.neg())
    }

    pub fn neg(&self) -> Self {
        RatFunc1 { num: self.num.neg(), den: self.den.clone() }
    }

    pub fn mul(&self, o: &Self) -> Self {
        RatFunc1::new(self.num.mul(&o.num), self.den.mul(&o.den)).expect("nonzero")
    }

    pub fn div(&self, o: &Self) -> Result<Self, AlgebraError> {
        if o.is_zero() {
            return Err(AlgebraError::DivisionByZero);
        }
        RatFunc1::new(self.num.mul(&o.den), self.den.mul(&o.num))
    }

    pub fn eval(&self, x: &BigRational) -> Result<BigRational, AlgebraError> {
        let d = self.den.eval(x);
        if d.is_zero() {
            return Err(AlgebraError::DivisionByZero);
        }
        Ok(self.num.eval(x) / d)
    }

    /// The polynomial, when the denominator is 1.
    pub fn as_poly(&self) -> Option<&QPoly> {
        (self.den.deg() == Some(0)).then_some(&self.num)
    }
}

impl fmt::Display for RatFunc1 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})/({})", self.num, self.den)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::rint;

    #[test]
    fn reduces_common_factor() {
        let x = QPoly::x();
        let one = QPoly::one();
        let xm1 = x.sub(&one);
        let r = RatFunc1::new(xm1.mul(&x), xm1.scale(&rint(3))).unwrap();
        assert_eq!(r.den(), &QPoly::one());
        assert_eq!(r.num(), &x.scale(&(BigRational::one() / rint(3))));
    }

    #[test]
    fn geometric_series_closed_form() {
        // 1/(1-X) * (1-X) = 1
        let x = QPoly::x();
        let g = RatFunc1::new(QPoly::one(), QPoly::one().sub(&x)).unwrap();
        let back = g.mul(&RatFunc1::from_poly(QPoly::one().sub(&x)));
        assert_eq!(back, RatFunc1::constant(rint(1)));
    }
}
