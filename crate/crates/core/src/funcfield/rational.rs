use std::fmt;

use crate::error::{Error, Result};
use crate::ff::Fq;

use super::Poly;

/// Element of `K = F_q(t)` in lowest terms with a monic denominator.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct RationalFunction {
    num: Poly,
    den: Poly,
}

impl RationalFunction {
    pub fn new(num: Poly, den: Poly) -> Result<RationalFunction> {
        if den.is_zero() {
            return Err(Error::DivisionByZero);
        }
        let field = num.field().clone();
        if num.is_zero() {
            return Ok(RationalFunction {
                num,
                den: Poly::one(&field),
            });
        }
        let g = num.gcd(&den);
        let mut n = num.exact_div(&g).expect("gcd divides");
        let mut d = den.exact_div(&g).expect("gcd divides");
        let lc_inv = field.inv(d.lc())?;
        n = n.scale(lc_inv);
        d = d.scale(lc_inv);
        Ok(RationalFunction { num: n, den: d })
    }

    pub fn from_poly(p: Poly) -> RationalFunction {
        let field = p.field().clone();
        RationalFunction {
            num: p,
            den: Poly::one(&field),
        }
    }

    pub fn zero(field: &Fq) -> RationalFunction {
        RationalFunction::from_poly(Poly::zero(field))
    }

    pub fn one(field: &Fq) -> RationalFunction {
        RationalFunction::from_poly(Poly::one(field))
    }

    pub fn num(&self) -> &Poly {
        &self.num
    }

    pub fn den(&self) -> &Poly {
        &self.den
    }

    pub fn field(&self) -> &Fq {
        self.num.field()
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_polynomial(&self) -> bool {
        self.den.is_one()
    }

    pub fn add(&self, other: &RationalFunction) -> RationalFunction {
        if self.den == other.den {
            return RationalFunction::new(self.num.add(&other.num), self.den.clone())
                .expect("nonzero denominator");
        }
        let n = self.num.mul(&other.den).add(&other.num.mul(&self.den));
        RationalFunction::new(n, self.den.mul(&other.den)).expect("nonzero denominator")
    }

    pub fn neg(&self) -> RationalFunction {
        RationalFunction {
            num: self.num.neg(),
            den: self.den.clone(),
        }
    }

    pub fn sub(&self, other: &RationalFunction) -> RationalFunction {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &RationalFunction) -> RationalFunction {
        // cross-cancel before multiplying to keep degrees down
        let g1 = self.num.gcd(&other.den);
        let g2 = other.num.gcd(&self.den);
        if self.is_zero() || other.is_zero() {
            return RationalFunction::zero(self.field());
        }
        let n1 = self.num.exact_div(&g1).expect("gcd divides");
        let d2 = other.den.exact_div(&g1).expect("gcd divides");
        let n2 = other.num.exact_div(&g2).expect("gcd divides");
        let d1 = self.den.exact_div(&g2).expect("gcd divides");
        let den = d1.mul(&d2);
        let lc_inv = self.field().inv(den.lc()).expect("nonzero");
        RationalFunction {
            num: n1.mul(&n2).scale(lc_inv),
            den: den.scale(lc_inv),
        }
    }

    pub fn inv(&self) -> Result<RationalFunction> {
        if self.is_zero() {
            return Err(Error::DivisionByZero);
        }
        RationalFunction::new(self.den.clone(), self.num.clone())
    }

    pub fn div(&self, other: &RationalFunction) -> Result<RationalFunction> {
        Ok(self.mul(&other.inv()?))
    }

    pub fn scale(&self, c: crate::ff::Fe) -> RationalFunction {
        RationalFunction {
            num: self.num.scale(c),
            den: self.den.clone(),
        }
    }

    pub fn square(&self) -> RationalFunction {
        RationalFunction {
            num: self.num.mul(&self.num),
            den: self.den.mul(&self.den),
        }
    }

    /// Degree of `f` as a map `P^1 -> P^1`.
    pub fn height(&self) -> u64 {
        if self.is_zero() {
            return 0;
        }
        self.num.deg().max(self.den.deg()) as u64
    }
}

impl fmt::Display for RationalFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den.is_one() {
            write!(f, "{}", self.num)
        } else {
            write!(f, "({}) / ({})", self.num, self.den)
        }
    }
}

impl fmt::Debug for RationalFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RationalFunction({self})")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lowest_terms_and_field_ops() {
        let f = Fq::new(7, 1).unwrap();
        let a = Poly::from_i64s(&f, &[1, 1]);
        let b = Poly::from_i64s(&f, &[2, 3, 1]); // (t+1)(t+2)
        let r = RationalFunction::new(a.clone(), b.scale(f.from_i64(3))).unwrap();
        assert_eq!(r.den(), &Poly::from_i64s(&f, &[2, 1]));
        assert!(r.den().is_monic());
        let s = RationalFunction::new(Poly::t(&f), a).unwrap();
        let back = r.add(&s).sub(&s);
        assert_eq!(back, r);
        let prod = r.mul(&r.inv().unwrap());
        assert_eq!(prod, RationalFunction::one(&f));
        assert_eq!(RationalFunction::new(Poly::one(&f), Poly::zero(&f)), Err(Error::DivisionByZero));
    }
}
