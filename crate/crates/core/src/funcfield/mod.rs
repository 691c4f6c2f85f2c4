//! The rational function field `K = F_q(t)` and the places of `P^1`.
//!
//! Finite places are monic irreducible polynomials; the place at infinity is
//! handled through the chart `t = 1/u`.

mod poly;
mod rational;

use std::cmp::Ordering;
use std::fmt;

pub use poly::Poly;
pub use rational::RationalFunction;

use crate::error::{Error, Result};
use crate::ff::{ExtElement, ExtField, Fe, Fq, TABLE_LIMIT};

/// A closed point of `P^1` over `F_q`.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum Place {
    Finite(Poly),
    Infinity,
}

impl Place {
    /// Wraps a monic irreducible polynomial.
    pub fn finite(pi: Poly) -> Result<Place> {
        if !pi.is_monic() || !pi.is_irreducible() {
            return Err(Error::Invalid(format!("{pi} is not monic irreducible")));
        }
        Ok(Place::Finite(pi))
    }

    pub fn degree(&self) -> usize {
        match self {
            Place::Finite(pi) => pi.degree().expect("irreducible is nonconstant"),
            Place::Infinity => 1,
        }
    }

    pub fn is_infinity(&self) -> bool {
        matches!(self, Place::Infinity)
    }

    /// `k(v)` as an extension of `F_q`.
    pub fn residue_field(&self, fq: &Fq) -> ExtField {
        fq.tower(self.degree())
    }

    /// `N(v) = q^deg(v)`.
    pub fn norm(&self, q: u64) -> u128 {
        (q as u128).pow(self.degree() as u32)
    }
}

impl Ord for Place {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Place::Infinity, Place::Infinity) => Ordering::Equal,
            (Place::Infinity, _) => Ordering::Greater,
            (_, Place::Infinity) => Ordering::Less,
            (Place::Finite(a), Place::Finite(b)) => a.cmp(b),
        }
    }
}

impl PartialOrd for Place {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
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

/// All places of degree `<= max_degree`: finite ones by degree, then
/// coefficient order; infinity last.
pub fn enumerate_places(fq: &Fq, max_degree: usize) -> Vec<Place> {
    let mut out = Vec::new();
    for deg in 1..=max_degree {
        out.extend(places_of_degree(fq, deg));
    }
    out.push(Place::Infinity);
    out
}

/// Finite places of exactly the given degree.
pub fn places_of_degree(fq: &Fq, deg: usize) -> Vec<Place> {
    let q = fq.q() as u128;
    let total = q.pow(deg as u32);
    (0..total)
        .map(|k| Poly::monic_from_index(fq, deg, k))
        .filter(|p| p.is_irreducible())
        .map(Place::Finite)
        .collect()
}

/// Number of monic irreducibles of degree `m` over `F_q`.
pub fn necklace_count(q: u64, m: usize) -> u128 {
    fn mobius(mut n: usize) -> i128 {
        let mut sign = 1;
        let mut d = 2;
        while d * d <= n {
            if n.is_multiple_of(d) {
                n /= d;
                if n.is_multiple_of(d) {
                    return 0;
                }
                sign = -sign;
            }
            d += 1;
        }
        if n > 1 {
            sign = -sign;
        }
        sign
    }
    let total: i128 = (1..=m)
        .filter(|k| m.is_multiple_of(*k))
        .map(|k| mobius(k) * (q as i128).pow((m / k) as u32))
        .sum();
    (total / m as i128) as u128
}

/// `v(f)`: order of vanishing of `f` at `v`.
pub fn valuation(f: &RationalFunction, v: &Place) -> Result<i64> {
    if f.is_zero() {
        return Err(Error::ZeroValuation);
    }
    Ok(match v {
        Place::Finite(pi) => f.num().multiplicity(pi) as i64 - f.den().multiplicity(pi) as i64,
        Place::Infinity => f.den().deg() - f.num().deg(),
    })
}

/// Valuation of a nonzero polynomial; `None` for the zero polynomial.
pub fn poly_valuation(f: &Poly, v: &Place) -> Option<i64> {
    if f.is_zero() {
        return None;
    }
    Some(match v {
        Place::Finite(pi) => f.multiplicity(pi) as i64,
        Place::Infinity => -f.deg(),
    })
}

/// The least root (in index order) of the irreducible `pi` inside the
/// extension `ext`, which must contain one.
pub fn least_root(ext: &ExtField, pi: &Poly) -> Result<ExtElement> {
    let fq = ext.base();
    let mut key = pi.coeffs().to_vec();
    key.push(Fe(ext.degree() as u32));
    if let Some(r) = fq.cached_root(&key) {
        return Ok(r);
    }
    let root = if pi.degree() == Some(1) {
        // monic t + c: root is -c in F_q
        Some(ext.embed(fq.neg(pi.coeff(0))))
    } else if let Some(tab) = ext.table() {
        (0..tab.order())
            .find(|&x| pi.eval_table(tab, x) == 0)
            .map(|x| ext.from_index(x as u128))
    } else {
        let order = ext.order().unwrap_or(u128::MAX);
        if order > TABLE_LIMIT << 4 {
            return Err(Error::FieldTooLarge(order));
        }
        ext.elements().find(|x| pi.eval_ext(ext, x).is_zero())
    };
    let root = root.ok_or_else(|| Error::Internal(format!("{pi} has no root in {ext:?}")))?;
    fq.store_root(key, root.clone());
    Ok(root)
}

/// Reduction of `f` at `v`, as an element of `k(v) = F_{q^deg v}`.
///
/// Finite places evaluate at the least root of `pi_v`; infinity evaluates
/// `f(1/u)` at `u = 0`.
pub fn residue(f: &RationalFunction, v: &Place) -> Result<ExtElement> {
    let fq = f.num().field().clone();
    if f.is_zero() {
        return Ok(v.residue_field(&fq).zero());
    }
    if valuation(f, v)? < 0 {
        return Err(Error::PoleAtPlace(v.to_string()));
    }
    match v {
        Place::Finite(pi) => {
            let ext = v.residue_field(&fq);
            let root = least_root(&ext, pi)?;
            let n = f.num().eval_ext(&ext, &root);
            let d = f.den().eval_ext(&ext, &root);
            ext.div(&n, &d)
        }
        Place::Infinity => {
            let ext = fq.tower(1);
            if f.num().deg() < f.den().deg() {
                return Ok(ext.zero());
            }
            let c = fq.div(f.num().lc(), f.den().lc())?;
            Ok(ext.embed(c))
        }
    }
}

/// Reduction of a polynomial at a finite place (or its chart value at `u = 0`).
pub fn poly_residue(f: &Poly, v: &Place) -> Result<ExtElement> {
    residue(&RationalFunction::from_poly(f.clone()), v)
}

/// Parses `"inf"` or a monic irreducible polynomial such as `"t^2 + 2"`.
pub fn parse_place(fq: &Fq, s: &str) -> Result<Place> {
    let trimmed = s.trim();
    if trimmed.eq_ignore_ascii_case("inf") || trimmed.eq_ignore_ascii_case("infinity") {
        return Ok(Place::Infinity);
    }
    Place::finite(parse_poly(fq, trimmed)?)
}

/// Parses a polynomial in `t` with integer coefficients (or `[d0,d1,..]`
/// coordinate vectors when `q` is not prime).
pub fn parse_poly(fq: &Fq, s: &str) -> Result<Poly> {
    let bad = || Error::Invalid(format!("cannot parse polynomial {s:?}"));
    let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    if compact.is_empty() {
        return Err(bad());
    }
    // split into signed terms, ignoring commas inside brackets
    let mut terms: Vec<(bool, String)> = Vec::new();
    let mut cur = String::new();
    let mut negative = false;
    let mut depth = 0;
    for ch in compact.chars() {
        match ch {
            '[' => {
                depth += 1;
                cur.push(ch);
            }
            ']' => {
                depth -= 1;
                cur.push(ch);
            }
            '+' | '-' if depth == 0 => {
                if !cur.is_empty() {
                    terms.push((negative, std::mem::take(&mut cur)));
                } else if ch == '+' && !terms.is_empty() {
                    return Err(bad());
                }
                negative = ch == '-';
            }
            _ => cur.push(ch),
        }
    }
    if cur.is_empty() {
        return Err(bad());
    }
    terms.push((negative, cur));
    let mut acc = Poly::zero(fq);
    for (neg, term) in terms {
        let (coef_str, power) = match term.find('t') {
            None => (term.as_str(), 0usize),
            Some(pos) => {
                let rest = &term[pos + 1..];
                let power = if rest.is_empty() {
                    1
                } else {
                    rest.strip_prefix('^')
                        .and_then(|r| r.parse().ok())
                        .ok_or_else(bad)?
                };
                let coef = term[..pos].trim_end_matches('*');
                (coef, power)
            }
        };
        let c = if coef_str.is_empty() {
            fq.one()
        } else if let Some(inner) = coef_str.strip_prefix('[').and_then(|r| r.strip_suffix(']')) {
            let digits: std::result::Result<Vec<i64>, _> =
                inner.split(',').map(|d| d.parse::<i64>()).collect();
            fq.from_coefficients(&digits.map_err(|_| bad())?)?
        } else {
            fq.from_i64(coef_str.parse::<i64>().map_err(|_| bad())?)
        };
        let c = if neg { fq.neg(c) } else { c };
        acc = acc.add(&Poly::monomial(fq, c, power));
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f5() -> Fq {
        Fq::new(5, 1).unwrap()
    }

    #[test]
    fn degree_one_places_over_f5() {
        let f = f5();
        let places = enumerate_places(&f, 1);
        assert_eq!(places.len(), 6);
        assert!(places.iter().all(|p| p.degree() == 1));
        assert_eq!(places.last(), Some(&Place::Infinity));
    }

    #[test]
    fn place_counts_match_necklace_formula() {
        let f = f5();
        assert_eq!(places_of_degree(&f, 2).len(), 10);
        let f7 = Fq::new(7, 1).unwrap();
        assert_eq!(places_of_degree(&f7, 3).len(), 112);
        assert_eq!(necklace_count(7, 3), 112);
        for q in [5u64, 7, 13] {
            let fq = Fq::new(q, 1).unwrap();
            let dmax = if q == 13 { 3 } else { 4 };
            for d in 1..=dmax {
                assert_eq!(places_of_degree(&fq, d).len() as u128, necklace_count(q, d));
            }
        }
    }

    #[test]
    fn valuation_examples() {
        let f = f5();
        let t = Poly::t(&f);
        let t_place = Place::finite(t.clone()).unwrap();
        let t1 = Poly::from_i64s(&f, &[1, 1]);
        let t1_place = Place::finite(t1.clone()).unwrap();
        let sq = RationalFunction::from_poly(t.mul(&t));
        assert_eq!(valuation(&sq, &t_place).unwrap(), 2);
        assert_eq!(valuation(&sq, &Place::Infinity).unwrap(), -2);
        let g = RationalFunction::new(t1.clone(), t.clone()).unwrap();
        assert_eq!(valuation(&g, &t_place).unwrap(), -1);
        assert_eq!(valuation(&g, &t1_place).unwrap(), 1);
        assert_eq!(valuation(&g, &Place::Infinity).unwrap(), 0);
        let zero = RationalFunction::from_poly(Poly::zero(&f));
        assert_eq!(valuation(&zero, &t_place), Err(Error::ZeroValuation));
    }

    #[test]
    fn product_formula_on_cubic() {
        // t^3 + 2 over F_5, checked against every place of degree <= 3
        let f = f5();
        let g = RationalFunction::from_poly(Poly::from_i64s(&f, &[2, 0, 0, 1]));
        let total: i64 = enumerate_places(&f, 3)
            .iter()
            .map(|v| v.degree() as i64 * valuation(&g, v).unwrap())
            .sum();
        assert_eq!(total, 0);
    }

    #[test]
    fn residue_examples() {
        let f = f5();
        let t = Poly::t(&f);
        let t_place = Place::finite(t.clone()).unwrap();
        let g = RationalFunction::from_poly(Poly::from_i64s(&f, &[1, 1]));
        let r = residue(&g, &t_place).unwrap();
        assert_eq!(r, f.tower(1).one());
        let h = RationalFunction::new(Poly::from_i64s(&f, &[1, 0, 1]), t.mul(&t)).unwrap();
        assert_eq!(residue(&h, &Place::Infinity).unwrap(), f.tower(1).one());
        let pole = RationalFunction::new(Poly::one(&f), t.clone()).unwrap();
        assert!(matches!(residue(&pole, &t_place), Err(Error::PoleAtPlace(_))));
        // t at a degree-2 place is the stored root
        let pi = Poly::from_i64s(&f, &[2, 0, 1]);
        let v = Place::finite(pi.clone()).unwrap();
        let ext = v.residue_field(&f);
        let root = residue(&RationalFunction::from_poly(t), &v).unwrap();
        assert!(pi.eval_ext(&ext, &root).is_zero());
        let other = ext.frobenius(&root);
        assert!(ext.index(&root) < ext.index(&other));
    }

    #[test]
    fn parse_roundtrip() {
        let f = f5();
        let p = parse_poly(&f, "t^2 + 2").unwrap();
        assert_eq!(p, Poly::from_i64s(&f, &[2, 0, 1]));
        assert_eq!(parse_poly(&f, "-t+1").unwrap(), Poly::from_i64s(&f, &[1, -1]));
        assert_eq!(parse_poly(&f, "3*t^3 - 2*t").unwrap(), Poly::from_i64s(&f, &[0, -2, 0, 3]));
        assert_eq!(parse_place(&f, "inf").unwrap(), Place::Infinity);
        assert!(parse_place(&f, "t^2 + 1").is_err());
        assert!(parse_poly(&f, "t^").is_err());
    }
}
