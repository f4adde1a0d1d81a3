//! k-points of Pic^√R, X̂^√R_n and the rank-one weight η∘AJ^√R.

use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::algebra::{rat, ExtField, Poly};
use crate::places::{DoubleCover, PlaceError};

/// Residue fields k(x) of the ramified places, in `cover.ramified()` order.
#[derive(Clone, Debug)]
pub struct RamifiedResidues {
    pub fields: Vec<ExtField>,
}

impl RamifiedResidues {
    pub fn new(cover: &DoubleCover) -> Self {
        let fields = cover.ramified().iter().map(|pi| ExtField::new(pi).expect("irreducible factor")).collect();
        RamifiedResidues { fields }
    }

    /// s(θ_x) for each ramified x.
    pub fn values(&self, s: &Poly) -> Vec<u32> {
        self.fields.iter().map(|k| k.from_poly(s)).collect()
    }
}

/// A k-point of X̂^√R_n: a form s of degree n, plus at each ramified x a
/// square-root structure of class `twist_x` (the square class of ι(e⊗e) in a
/// chart) and a root α_x with α_x²·λ_x = s(θ_x), where λ_x = 1 for twist +1
/// and the fixed nonsquare of k(x) for twist −1.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SqrtSectionPoint {
    pub n: usize,
    pub s: Poly,
    pub alpha: Vec<u32>,
    pub twist: Vec<i8>,
}

impl SqrtSectionPoint {
    /// A point with the trivial square-root structure everywhere on R.
    pub fn new(res: &RamifiedResidues, n: usize, s: Poly, alpha: Vec<u32>) -> Result<Self, PlaceError> {
        let twist = vec![1; res.fields.len()];
        SqrtSectionPoint::with_twist(res, n, s, alpha, twist)
    }

    pub fn with_twist(
        res: &RamifiedResidues,
        n: usize,
        s: Poly,
        alpha: Vec<u32>,
        twist: Vec<i8>,
    ) -> Result<Self, PlaceError> {
        if !s.is_zero() && s.degree() > n {
            return Err(PlaceError::BadCover(format!("section {s} exceeds degree {n}")));
        }
        if alpha.len() != res.fields.len() || twist.len() != res.fields.len() {
            return Err(PlaceError::BadCover("one root per ramified place".into()));
        }
        let p = SqrtSectionPoint { n, s, alpha, twist };
        for (i, k) in res.fields.iter().enumerate() {
            let lhs = k.mul(k.mul(p.alpha[i], p.alpha[i]), lambda(k, p.twist[i]));
            if lhs != k.from_poly(&p.s) {
                return Err(PlaceError::BadCover(format!("α² ≠ s at ramified place {}", k.modulus())));
            }
        }
        Ok(p)
    }

    /// The degree-0 unit point (1, α ≡ 1).
    pub fn unit(res: &RamifiedResidues, field: crate::algebra::PrimeField) -> Self {
        let r = res.fields.len();
        SqrtSectionPoint { n: 0, s: Poly::one(field), alpha: vec![1; r], twist: vec![1; r] }
    }

    /// ∞-multiplicity n − deg s.
    pub fn inf_mult(&self) -> usize {
        self.n - self.s.degree()
    }

    /// Number of ramified places where the section vanishes; |Aut| = 2^this.
    pub fn zeros_on_r(&self) -> u32 {
        self.alpha.iter().filter(|&&a| a == 0).count() as u32
    }
}

fn lambda(k: &ExtField, twist: i8) -> u32 {
    if twist == 1 {
        1
    } else {
        k.nonsquare()
    }
}

/// (s₁s₂, α₁α₂) with the product structure.
pub fn add_points(res: &RamifiedResidues, p1: &SqrtSectionPoint, p2: &SqrtSectionPoint) -> SqrtSectionPoint {
    let mut alpha = Vec::with_capacity(res.fields.len());
    let mut twist = Vec::with_capacity(res.fields.len());
    for (i, k) in res.fields.iter().enumerate() {
        let t = p1.twist[i] * p2.twist[i];
        let mut a = k.mul(p1.alpha[i], p2.alpha[i]);
        if p1.twist[i] == -1 && p2.twist[i] == -1 {
            // λ·λ = ν², rescale the root so α²·1 = s.
            a = k.mul(a, k.nonsquare());
        }
        alpha.push(a);
        twist.push(t);
    }
    SqrtSectionPoint { n: p1.n + p2.n, s: p1.s.mul(&p2.s), alpha, twist }
}

/// η of the √R-class of the point: η_∞(t)^n · ∏_{x∈R} (square class of λ_x).
pub fn weight(cover: &DoubleCover, p: &SqrtSectionPoint) -> Result<i8, PlaceError> {
    if p.s.is_zero() {
        return Err(PlaceError::BadCover("weight is undefined on the zero section".into()));
    }
    let mut w = if p.n % 2 == 1 { cover.eta_inf_t() } else { 1 };
    for t in &p.twist {
        w *= t;
    }
    Ok(w)
}

/// Groupoid count of the α-data over a fixed section, with the trivial
/// square-root structure: ∏ w_x, w_x ∈ {1, 0, 1/2}.
pub fn groupoid_count_fiber(res: &RamifiedResidues, s: &Poly) -> Result<BigRational, PlaceError> {
    if s.is_zero() {
        return Err(PlaceError::BadCover("fiber over the zero section".into()));
    }
    let mut acc = BigRational::one();
    for k in &res.fields {
        let v = k.from_poly(s);
        // Presentation: roots {α : α² = v} modulo μ₂ acting by sign.
        let roots = k.elements().filter(|&a| k.mul(a, a) == v).count() as i64;
        acc *= rat(roots, 2);
        if acc.is_zero() {
            break;
        }
    }
    Ok(acc)
}

/// Degree plus the square class of the √R-structure at each ramified place.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PicSqrtClass {
    pub degree: i64,
    pub signs: Vec<i8>,
}

impl PicSqrtClass {
    pub fn of_point(p: &SqrtSectionPoint) -> Self {
        PicSqrtClass { degree: p.n as i64, signs: p.twist.clone() }
    }

    pub fn eta(&self, cover: &DoubleCover) -> i8 {
        let mut w = if self.degree.rem_euclid(2) == 1 { cover.eta_inf_t() } else { 1 };
        for s in &self.signs {
            w *= s;
        }
        w
    }
}

/// Groupoid cardinality of Pic^{√R,d}(k) from the presentation
/// S = ∏_{x∈R} k(x)^× (the values ι(e⊗e)), G = Aut(O(d)) × ∏ k(x)^× acting by
/// λ ↦ λ·κ²/c.  With `rigidified`, Aut(O(d)) is cut down to {1}, which is
/// the convention |Pic^d_X(k)| = 1.
pub fn gerbe_cardinality(res: &RamifiedResidues, q: u32, rigidified: bool) -> BigRational {
    // Orbit-stabilizer, done literally: enumerate orbits and their stabilizers.
    let sizes: Vec<u32> = res.fields.iter().map(|k| k.size() - 1).collect();
    let total: u64 = sizes.iter().map(|&s| s as u64).product();
    let scalars: Vec<u32> = if rigidified { vec![1] } else { (1..q).collect() };
    let mut seen = vec![false; total as usize];
    let mut acc = BigRational::zero();
    let decode = |mut idx: u64| -> Vec<u32> {
        sizes
            .iter()
            .map(|&s| {
                let v = (idx % s as u64) as u32 + 1;
                idx /= s as u64;
                v
            })
            .collect()
    };
    let encode = |v: &[u32]| -> u64 {
        v.iter().zip(&sizes).rev().fold(0u64, |acc, (&a, &s)| acc * s as u64 + (a - 1) as u64)
    };
    let group_order: u64 = scalars.len() as u64 * total;
    for start in 0..total {
        if seen[start as usize] {
            continue;
        }
        let lam = decode(start);
        let mut orbit = 0u64;
        for &c in &scalars {
            for g in 0..total {
                let kap = decode(g);
                let img: Vec<u32> = res
                    .fields
                    .iter()
                    .enumerate()
                    .map(|(i, k)| {
                        let c = k.scalar(c);
                        k.div(k.mul(lam[i], k.mul(kap[i], kap[i])), c).expect("unit")
                    })
                    .collect();
                let e = encode(&img);
                if !seen[e as usize] {
                    seen[e as usize] = true;
                    orbit += 1;
                }
            }
        }
        let stab = group_order / orbit;
        acc += rat(1, stab as i64);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::PrimeField;

    fn cover_b() -> (DoubleCover, RamifiedResidues) {
        let f5 = PrimeField::new(5).unwrap();
        let c = DoubleCover::new(Poly::from_i64(f5, &[0, -1, 1])).unwrap();
        let r = RamifiedResidues::new(&c);
        (c, r)
    }

    #[test]
    fn fiber_counts() {
        let (c, r) = cover_b();
        let f = c.field();
        // R = {0, 1}; s = 1 has square values → 1.
        assert_eq!(groupoid_count_fiber(&r, &Poly::one(f)).unwrap(), rat(1, 1));
        // s = 2: nonsquare mod 5 → 0.
        assert_eq!(groupoid_count_fiber(&r, &Poly::constant(f, 2)).unwrap(), rat(0, 1));
        // s = t + 1: zero at... s(0)=1, s(1)=2 → 0; s = t·(t+3): s(0)=0, s(1)=4 → 1/2.
        let s = Poly::from_i64(f, &[0, 3, 1]);
        assert_eq!(groupoid_count_fiber(&r, &s).unwrap(), rat(1, 2));
    }

    #[test]
    fn gerbe_sanity() {
        let (c, r) = cover_b();
        assert_eq!(gerbe_cardinality(&r, c.q(), true), rat(1, 1));
        assert_eq!(gerbe_cardinality(&r, c.q(), false), rat(1, c.q() as i64 - 1));
    }
}
