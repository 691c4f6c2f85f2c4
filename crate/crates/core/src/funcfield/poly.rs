use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigUint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::ff::{ExtElement, ExtField, Fe, Fq, TableField};

/// Polynomial over `F_q`, coefficients little-endian with no trailing zeros.
#[derive(Clone)]
pub struct Poly {
    field: Fq,
    coeffs: Vec<Fe>,
}

impl PartialEq for Poly {
    fn eq(&self, other: &Self) -> bool {
        self.coeffs == other.coeffs
    }
}

impl Eq for Poly {}

impl std::hash::Hash for Poly {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.coeffs.hash(state)
    }
}

/// Degree first, then coefficients from the top.
impl Ord for Poly {
    fn cmp(&self, other: &Self) -> Ordering {
        self.coeffs
            .len()
            .cmp(&other.coeffs.len())
            .then_with(|| self.coeffs.iter().rev().cmp(other.coeffs.iter().rev()))
    }
}

impl PartialOrd for Poly {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Poly {
    pub fn new(field: &Fq, mut coeffs: Vec<Fe>) -> Poly {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        Poly {
            field: field.clone(),
            coeffs,
        }
    }

    pub fn from_i64s(field: &Fq, coeffs: &[i64]) -> Poly {
        Poly::new(field, coeffs.iter().map(|&c| field.from_i64(c)).collect())
    }

    pub fn zero(field: &Fq) -> Poly {
        Poly::new(field, Vec::new())
    }

    pub fn one(field: &Fq) -> Poly {
        Poly::constant(field, field.one())
    }

    pub fn constant(field: &Fq, c: Fe) -> Poly {
        Poly::new(field, vec![c])
    }

    /// The variable `t`.
    pub fn t(field: &Fq) -> Poly {
        Poly::monomial(field, field.one(), 1)
    }

    pub fn monomial(field: &Fq, c: Fe, k: usize) -> Poly {
        let mut v = vec![Fe::ZERO; k + 1];
        v[k] = c;
        Poly::new(field, v)
    }

    /// The monic polynomial of degree `deg` whose lower coefficients are the
    /// base-`q` digits of `index` (constant term fastest).
    pub fn monic_from_index(field: &Fq, deg: usize, mut index: u128) -> Poly {
        let q = field.q() as u128;
        let mut v = Vec::with_capacity(deg + 1);
        for _ in 0..deg {
            v.push(field.element((index % q) as u32).expect("digit below q"));
            index /= q;
        }
        v.push(field.one());
        Poly::new(field, v)
    }

    pub fn field(&self) -> &Fq {
        &self.field
    }

    pub fn coeffs(&self) -> &[Fe] {
        &self.coeffs
    }

    pub fn coeff(&self, i: usize) -> Fe {
        self.coeffs.get(i).copied().unwrap_or(Fe::ZERO)
    }

    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    /// Degree with the zero polynomial at `-1`.
    pub fn deg(&self) -> i64 {
        self.coeffs.len() as i64 - 1
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.coeffs.len() == 1 && self.coeffs[0] == self.field.one()
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.len() <= 1
    }

    pub fn lc(&self) -> Fe {
        self.coeffs.last().copied().unwrap_or(Fe::ZERO)
    }

    pub fn is_monic(&self) -> bool {
        self.lc() == self.field.one()
    }

    pub fn scale(&self, c: Fe) -> Poly {
        let f = &self.field;
        Poly::new(f, self.coeffs.iter().map(|&a| f.mul(a, c)).collect())
    }

    pub fn monic(&self) -> Poly {
        if self.is_zero() {
            return self.clone();
        }
        let inv = self.field.inv(self.lc()).expect("nonzero leading coefficient");
        self.scale(inv)
    }

    /// Multiplication by `t^k`.
    pub fn shift(&self, k: usize) -> Poly {
        if self.is_zero() {
            return self.clone();
        }
        let mut v = vec![Fe::ZERO; k];
        v.extend_from_slice(&self.coeffs);
        Poly::new(&self.field, v)
    }

    /// `t^k f(1/t)` for `k >= deg f`.
    pub fn reversed(&self, k: usize) -> Poly {
        assert!(self.deg() <= k as i64, "reversal length below degree");
        let v = (0..=k).map(|i| self.coeff(k - i)).collect();
        Poly::new(&self.field, v)
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let f = &self.field;
        let n = self.coeffs.len().max(other.coeffs.len());
        Poly::new(
            f,
            (0..n).map(|i| f.add(self.coeff(i), other.coeff(i))).collect(),
        )
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        let f = &self.field;
        let n = self.coeffs.len().max(other.coeffs.len());
        Poly::new(
            f,
            (0..n).map(|i| f.sub(self.coeff(i), other.coeff(i))).collect(),
        )
    }

    pub fn neg(&self) -> Poly {
        let f = &self.field;
        Poly::new(f, self.coeffs.iter().map(|&c| f.neg(c)).collect())
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        if self.is_zero() || other.is_zero() {
            return Poly::zero(&self.field);
        }
        let f = &self.field;
        let p = f.p();
        if f.e() == 1 {
            // accumulate in u64 and reduce lazily
            let limit = u64::MAX / ((p - 1) * (p - 1)).max(1);
            let mut acc = vec![0u64; self.coeffs.len() + other.coeffs.len() - 1];
            let mut cnt = vec![0u64; acc.len()];
            for (i, a) in self.coeffs.iter().enumerate() {
                let a = a.index() as u64;
                if a == 0 {
                    continue;
                }
                for (j, b) in other.coeffs.iter().enumerate() {
                    let k = i + j;
                    acc[k] += a * b.index() as u64;
                    cnt[k] += 1;
                    if cnt[k] >= limit - 1 {
                        acc[k] %= p;
                        cnt[k] = 1;
                    }
                }
            }
            return Poly::new(f, acc.into_iter().map(|c| f.from_i64((c % p) as i64)).collect());
        }
        let mut v = vec![Fe::ZERO; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, &b) in other.coeffs.iter().enumerate() {
                v[i + j] = f.add(v[i + j], f.mul(a, b));
            }
        }
        Poly::new(f, v)
    }

    pub fn pow(&self, mut k: u64) -> Poly {
        let mut base = self.clone();
        let mut acc = Poly::one(&self.field);
        while k > 0 {
            if k & 1 == 1 {
                acc = acc.mul(&base);
            }
            k >>= 1;
            if k > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    /// Euclidean division.
    pub fn divmod(&self, divisor: &Poly) -> Result<(Poly, Poly)> {
        if divisor.is_zero() {
            return Err(Error::DivisionByZero);
        }
        let f = &self.field;
        let dd = divisor.coeffs.len() - 1;
        if self.coeffs.len() <= dd {
            return Ok((Poly::zero(f), self.clone()));
        }
        let inv_lc = f.inv(divisor.lc())?;
        let mut rem = self.coeffs.clone();
        let mut quot = vec![Fe::ZERO; rem.len() - dd];
        for k in (dd..rem.len()).rev() {
            let c = rem[k];
            if c.is_zero() {
                continue;
            }
            let factor = f.mul(c, inv_lc);
            quot[k - dd] = factor;
            for (j, &d) in divisor.coeffs.iter().enumerate() {
                rem[k - dd + j] = f.sub(rem[k - dd + j], f.mul(factor, d));
            }
        }
        rem.truncate(dd);
        Ok((Poly::new(f, quot), Poly::new(f, rem)))
    }

    pub fn rem(&self, divisor: &Poly) -> Result<Poly> {
        Ok(self.divmod(divisor)?.1)
    }

    /// Quotient when `divisor` divides `self` exactly.
    pub fn exact_div(&self, divisor: &Poly) -> Option<Poly> {
        let (q, r) = self.divmod(divisor).ok()?;
        r.is_zero().then_some(q)
    }

    /// Monic gcd; `gcd(0, 0) = 0`.
    pub fn gcd(&self, other: &Poly) -> Poly {
        let mut a = self.clone();
        let mut b = other.clone();
        while !b.is_zero() {
            let r = a.rem(&b).expect("nonzero divisor");
            a = b;
            b = r;
        }
        a.monic()
    }

    /// Extended gcd: `(g, s, t)` with `s*self + t*other = g`, `g` monic.
    pub fn xgcd(&self, other: &Poly) -> (Poly, Poly, Poly) {
        let f = &self.field;
        let (mut r0, mut r1) = (self.clone(), other.clone());
        let (mut s0, mut s1) = (Poly::one(f), Poly::zero(f));
        let (mut t0, mut t1) = (Poly::zero(f), Poly::one(f));
        while !r1.is_zero() {
            let (q, r) = r0.divmod(&r1).expect("nonzero divisor");
            r0 = std::mem::replace(&mut r1, r);
            let s = s0.sub(&q.mul(&s1));
            s0 = std::mem::replace(&mut s1, s);
            let t = t0.sub(&q.mul(&t1));
            t0 = std::mem::replace(&mut t1, t);
        }
        if r0.is_zero() {
            return (r0, s0, t0);
        }
        let inv = f.inv(r0.lc()).expect("nonzero");
        (r0.scale(inv), s0.scale(inv), t0.scale(inv))
    }

    pub fn mul_mod(&self, other: &Poly, modulus: &Poly) -> Poly {
        self.mul(other).rem(modulus).expect("nonzero modulus")
    }

    pub fn pow_mod(&self, k: &BigUint, modulus: &Poly) -> Poly {
        let mut acc = Poly::one(&self.field).rem(modulus).expect("nonzero modulus");
        let base = self.rem(modulus).expect("nonzero modulus");
        for i in (0..k.bits()).rev() {
            acc = acc.mul_mod(&acc, modulus);
            if k.bit(i) {
                acc = acc.mul_mod(&base, modulus);
            }
        }
        acc
    }

    pub fn derivative(&self) -> Poly {
        let f = &self.field;
        Poly::new(
            f,
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, &c)| f.mul(c, f.from_i64(i as i64)))
                .collect(),
        )
    }

    pub fn eval(&self, x: Fe) -> Fe {
        let f = &self.field;
        self.coeffs
            .iter()
            .rev()
            .fold(Fe::ZERO, |acc, &c| f.add(f.mul(acc, x), c))
    }

    pub fn eval_ext(&self, ext: &ExtField, x: &ExtElement) -> ExtElement {
        self.coeffs.iter().rev().fold(ext.zero(), |acc, &c| {
            ext.add(&ext.mul(&acc, x), &ext.embed(c))
        })
    }

    /// Evaluation at a table-field element given by index.
    #[inline]
    pub fn eval_table(&self, tab: &TableField, x: u32) -> u32 {
        self.coeffs
            .iter()
            .rev()
            .fold(0u32, |acc, &c| tab.add(tab.mul(acc, x), tab.embed(c)))
    }

    /// Multiplicity of the irreducible `pi` in `self` (`self != 0`).
    pub fn multiplicity(&self, pi: &Poly) -> u32 {
        let mut k = 0;
        let mut cur = self.clone();
        while let Some(q) = cur.exact_div(pi) {
            cur = q;
            k += 1;
        }
        k
    }

    /// `t^(q^k) mod self`, iterating the `q`-power map.
    fn frobenius_powers(&self, upto: usize) -> Vec<Poly> {
        let q = BigUint::from(self.field.q());
        let mut out = Vec::with_capacity(upto + 1);
        let mut h = Poly::t(&self.field).rem(self).expect("nonzero");
        out.push(h.clone());
        for _ in 0..upto {
            h = h.pow_mod(&q, self);
            out.push(h.clone());
        }
        out
    }

    /// Rabin's irreducibility test.
    pub fn is_irreducible(&self) -> bool {
        let n = match self.degree() {
            None | Some(0) => return false,
            Some(1) => return true,
            Some(n) => n,
        };
        let powers = self.frobenius_powers(n);
        let t = Poly::t(&self.field);
        if powers[n] != t.rem(self).expect("nonzero") {
            return false;
        }
        crate::ff::prime_factors(n as u128).into_iter().all(|r| {
            let h = &powers[n / r as usize];
            self.gcd(&h.sub(&t)).is_one()
        })
    }

    /// Square root in `F_q[t]`, if `self` is a perfect square.
    pub fn sqrt(&self) -> Option<Poly> {
        let f = &self.field;
        if self.is_zero() {
            return Some(self.clone());
        }
        let d = self.degree()?;
        if d % 2 == 1 {
            return None;
        }
        let lead = f.sqrt(self.lc())?;
        let m = d / 2;
        // root coefficients from the top down
        let mut r = vec![Fe::ZERO; m + 1];
        r[m] = lead;
        let two_lead_inv = f.inv(f.add(lead, lead)).ok()?;
        for k in (0..m).rev() {
            // coefficient of t^(m + k) in r^2 determines r[k]
            let mut s = Fe::ZERO;
            for i in (k + 1)..=m {
                let j = m + k - i;
                if j > k && j <= m {
                    s = f.add(s, f.mul(r[i], r[j]));
                }
            }
            let target = self.coeff(m + k);
            r[k] = f.mul(f.sub(target, s), two_lead_inv);
        }
        let root = Poly::new(f, r);
        (root.mul(&root) == *self).then_some(root)
    }

    fn pth_root(&self) -> Poly {
        let f = &self.field;
        let p = f.p() as usize;
        let exp = f.q() as u128 / f.p() as u128;
        let n = self.coeffs.len().div_ceil(p);
        Poly::new(f, (0..n).map(|i| f.pow(self.coeff(i * p), exp)).collect())
    }

    /// Square-free decomposition of a monic polynomial.
    pub fn squarefree_factorization(&self) -> Vec<(Poly, u32)> {
        let f = &self.field;
        let mut out = Vec::new();
        if self.is_constant() {
            return out;
        }
        let p = f.p() as u32;
        let d = self.derivative();
        let mut c = self.gcd(&d);
        let mut w = self.exact_div(&c).expect("gcd divides");
        let mut i = 1u32;
        while !w.is_one() {
            let y = w.gcd(&c);
            let fac = w.exact_div(&y).expect("gcd divides");
            if !fac.is_one() {
                out.push((fac.monic(), i));
            }
            w = y;
            c = c.exact_div(&w).expect("gcd divides");
            i += 1;
        }
        if !c.is_one() {
            for (g, j) in c.pth_root().squarefree_factorization() {
                out.push((g, j * p));
            }
        }
        out
    }

    fn distinct_degree(&self) -> Vec<(Poly, usize)> {
        let f = &self.field;
        let q = BigUint::from(f.q());
        let t = Poly::t(f);
        let mut g = self.clone();
        let mut h = t.clone();
        let mut out = Vec::new();
        let mut i = 1;
        while g.deg() >= 2 * i as i64 {
            h = h.pow_mod(&q, &g);
            let d = g.gcd(&h.sub(&t));
            if !d.is_one() {
                g = g.exact_div(&d).expect("gcd divides");
                h = h.rem(&g).expect("nonzero");
                out.push((d, i));
            }
            i += 1;
        }
        if g.deg() > 0 {
            let deg = g.degree().unwrap();
            out.push((g, deg));
        }
        out
    }

    fn equal_degree(&self, d: usize, rng: &mut ChaCha8Rng, out: &mut Vec<Poly>) {
        let n = self.degree().unwrap_or(0);
        if n == d {
            out.push(self.monic());
            return;
        }
        let f = &self.field;
        let e = (BigUint::from(f.q()).pow(d as u32) - 1u32) >> 1;
        loop {
            let a = Poly::new(
                f,
                (0..n).map(|_| Fe(rng.gen_range(0..f.q() as u32))).collect(),
            );
            if a.is_constant() {
                continue;
            }
            let b = a.pow_mod(&e, self).sub(&Poly::one(f));
            let g = self.gcd(&b);
            if !g.is_constant() && g.deg() < n as i64 {
                let h = self.exact_div(&g).expect("gcd divides");
                g.equal_degree(d, rng, out);
                h.equal_degree(d, rng, out);
                return;
            }
        }
    }

    /// Factorization into monic irreducibles with multiplicities, sorted.
    pub fn factor(&self) -> Vec<(Poly, u32)> {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        let mut out = Vec::new();
        for (sf, mult) in self.monic().squarefree_factorization() {
            for (block, d) in sf.distinct_degree() {
                let mut pieces = Vec::new();
                block.equal_degree(d, &mut rng, &mut pieces);
                out.extend(pieces.into_iter().map(|p| (p, mult)));
            }
        }
        out.sort();
        out
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(out, "0");
        }
        let e = self.field.e();
        let show = |c: Fe| -> String {
            if e == 1 {
                c.index().to_string()
            } else {
                let v: Vec<String> = self
                    .field
                    .coefficients(c)
                    .iter()
                    .map(|d| d.to_string())
                    .collect();
                format!("[{}]", v.join(","))
            }
        };
        let mut first = true;
        for (i, &c) in self.coeffs.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            if !first {
                write!(out, " + ")?;
            }
            first = false;
            let one = c == self.field.one();
            match i {
                0 => write!(out, "{}", show(c))?,
                1 if one => write!(out, "t")?,
                1 => write!(out, "{}*t", show(c))?,
                _ if one => write!(out, "t^{i}")?,
                _ => write!(out, "{}*t^{i}", show(c))?,
            }
        }
        Ok(())
    }
}

impl fmt::Debug for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Poly({self})")
    }
}

impl Add for &Poly {
    type Output = Poly;
    fn add(self, rhs: &Poly) -> Poly {
        Poly::add(self, rhs)
    }
}

impl Sub for &Poly {
    type Output = Poly;
    fn sub(self, rhs: &Poly) -> Poly {
        Poly::sub(self, rhs)
    }
}

impl Mul for &Poly {
    type Output = Poly;
    fn mul(self, rhs: &Poly) -> Poly {
        Poly::mul(self, rhs)
    }
}

impl Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        Poly::neg(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f5() -> Fq {
        Fq::new(5, 1).unwrap()
    }

    #[test]
    fn gcd_is_monic() {
        let f = f5();
        let a = Poly::from_i64s(&f, &[-1, 0, 1]);
        let b = Poly::from_i64s(&f, &[-1, 1]);
        assert_eq!(a.gcd(&b), Poly::from_i64s(&f, &[4, 1]));
    }

    #[test]
    fn small_products_and_division() {
        let f = f5();
        let t1 = Poly::from_i64s(&f, &[1, 1]);
        assert_eq!(&t1 * &t1, Poly::from_i64s(&f, &[1, 2, 1]));
        let t3 = Poly::monomial(&f, f.one(), 3);
        let t2 = Poly::monomial(&f, f.one(), 2);
        let (q, r) = t3.divmod(&t2).unwrap();
        assert_eq!(q, Poly::t(&f));
        assert!(r.is_zero());
        assert_eq!(t3.divmod(&Poly::zero(&f)).unwrap_err(), Error::DivisionByZero);
    }

    #[test]
    fn factor_recovers_product() {
        let f = Fq::new(7, 1).unwrap();
        let a = Poly::from_i64s(&f, &[3, 0, 1]); // t^2 + 3 irreducible mod 7
        let b = Poly::from_i64s(&f, &[1, 1]);
        let c = Poly::from_i64s(&f, &[2, 1, 0, 1]);
        let prod = a.mul(&b).mul(&b).mul(&c).scale(f.from_i64(3));
        let factors = prod.factor();
        let mut rebuilt = Poly::constant(&f, f.from_i64(3));
        for (g, m) in &factors {
            assert!(g.is_irreducible());
            assert!(g.is_monic());
            rebuilt = rebuilt.mul(&g.pow(*m as u64));
        }
        assert_eq!(rebuilt, prod);
    }

    #[test]
    fn factor_handles_pth_powers() {
        let f = f5();
        let a = Poly::from_i64s(&f, &[2, 0, 1]);
        let prod = a.pow(5).mul(&Poly::t(&f));
        let factors = prod.factor();
        assert_eq!(factors, vec![(Poly::t(&f), 1), (a, 5)]);
    }

    #[test]
    fn sqrt_of_square() {
        let f = Fq::new(13, 1).unwrap();
        let r = Poly::from_i64s(&f, &[3, 0, 5, 2]);
        let sq = r.mul(&r);
        let s = sq.sqrt().unwrap();
        assert!(s == r || s == r.neg());
        assert!(Poly::from_i64s(&f, &[2, 0, 1]).mul(&Poly::t(&f)).sqrt().is_none());
    }

    #[test]
    fn xgcd_bezout() {
        let f = f5();
        let a = Poly::from_i64s(&f, &[1, 2, 0, 3]);
        let b = Poly::from_i64s(&f, &[4, 0, 1]);
        let (g, s, t) = a.xgcd(&b);
        assert_eq!(&(&s * &a) + &(&t * &b), g);
    }
}
