//! The L-function `L(T) = prod_v P_v(T^deg v)^(-1)`, `T = q^(-s)`, as an
//! integer polynomial of degree `deg n - 4`.
//!
//! Two independent constructions are provided: fiber-by-fiber trace sums
//! over `P^1(F_{q^n})` fed through `exp(sum A_n T^n / n)`, and the truncated
//! Euler product over places of degree at most `D`.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::curve::{reduced_discriminant, Curve};
use crate::error::{Error, Result};
use crate::ff::{Fe, Fq, TableField};
use crate::funcfield::{necklace_count, Place, Poly};
use crate::localred::{conductor_degree_of, Kodaira, LocalData};
use crate::par::{self, Exec};

/// A closed point of `P^1` over `F_{q^n}`: a field element by table index, or
/// the point at infinity.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Fiber {
    Finite(u32),
    Infinity,
}

/// Trace of Frobenius on one fiber, weighted by the size of its Frobenius
/// orbit.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct FiberTrace {
    pub fiber: Fiber,
    pub weight: u32,
    pub trace: i64,
}

/// `A_n = sum over x in P^1(F_{q^n})` of the fiber trace.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceSum {
    pub n: usize,
    pub a_n: i128,
    /// One entry per Frobenius orbit, in enumeration order.
    pub fibers: Vec<FiberTrace>,
}

impl TraceSum {
    pub fn from_fibers(n: usize, fibers: Vec<FiberTrace>) -> TraceSum {
        let a_n = fibers
            .iter()
            .map(|f| f.weight as i128 * f.trace as i128)
            .sum();
        TraceSum { n, a_n, fibers }
    }

    /// `|A_n| <= (q^n + 1) * ceil(2 sqrt(q^n))`.
    pub fn within_hasse_bound(&self, q: u64) -> bool {
        let qn = (q as u128).pow(self.n as u32);
        let mut s = (qn as f64).sqrt() as u128;
        while s * s < qn {
            s += 1;
        }
        let bound = (qn + 1) * (2 * s);
        self.a_n.unsigned_abs() <= bound
    }
}

/// Curve data needed to classify and count fibers.
pub struct FiberModel {
    curve: Curve,
    disc: Poly,
    finite_special: Vec<LocalData>,
    infinity: LocalData,
    conductor_degree: u64,
}

impl FiberModel {
    pub fn new(curve: &Curve, local: &[LocalData]) -> Result<FiberModel> {
        let infinity = local
            .iter()
            .find(|d| d.place.is_infinity())
            .cloned()
            .ok_or_else(|| Error::Internal("local data at infinity missing".into()))?;
        let finite_special = local
            .iter()
            .filter(|d| !d.place.is_infinity())
            .cloned()
            .collect();
        Ok(FiberModel {
            curve: curve.clone(),
            disc: reduced_discriminant(curve.a(), curve.b()),
            finite_special,
            infinity,
            conductor_degree: conductor_degree_of(local)?,
        })
    }

    pub fn curve(&self) -> &Curve {
        &self.curve
    }

    pub fn field(&self) -> &Fq {
        self.curve.field()
    }

    pub fn conductor_degree(&self) -> u64 {
        self.conductor_degree
    }

    /// `D = deg n - 4`.
    pub fn l_degree(&self) -> usize {
        (self.conductor_degree - 4) as usize
    }

    fn special(&self, place: &Place) -> Option<&LocalData> {
        match place {
            Place::Infinity => Some(&self.infinity),
            Place::Finite(_) => self.finite_special.iter().find(|d| &d.place == place),
        }
    }

    fn classify(&self, tab: &TableField, data: &LocalData, a0: u32, b0: u32) -> Result<i64> {
        Ok(match data.kodaira {
            Kodaira::I0 => good_trace(tab, a0, b0)?,
            Kodaira::In(_) => {
                let two_ab = tab.mul(tab.embed(tab.base().from_i64(-2)), tab.mul(a0, b0));
                tab.chi(two_ab) as i64
            }
            _ => 0,
        })
    }

    /// Trace of Frobenius on the fiber over `x`, in `F_{q^n}` given by `tab`.
    pub fn fiber_trace(&self, tab: &TableField, fiber: Fiber) -> Result<i64> {
        match fiber {
            Fiber::Infinity => {
                let d = &self.infinity;
                let a0 = tab.embed(d.min_a.coeff(0));
                let b0 = tab.embed(d.min_b.coeff(0));
                self.classify(tab, d, a0, b0)
            }
            Fiber::Finite(x) => {
                if self.disc.eval_table(tab, x) != 0 {
                    let a0 = self.curve.a().eval_table(tab, x);
                    let b0 = self.curve.b().eval_table(tab, x);
                    return good_trace(tab, a0, b0);
                }
                let data = self
                    .finite_special
                    .iter()
                    .find(|d| d.uniformizer.eval_table(tab, x) == 0)
                    .ok_or_else(|| Error::Internal("singular fiber over no special place".into()))?;
                let a0 = data.min_a.eval_table(tab, x);
                let b0 = data.min_b.eval_table(tab, x);
                self.classify(tab, data, a0, b0)
            }
        }
    }
}

fn good_trace(tab: &TableField, a0: u32, b0: u32) -> Result<i64> {
    let trace = tab.frobenius_trace(a0, b0);
    let q = tab.order() as i64;
    if trace * trace > 4 * q {
        return Err(Error::Internal(format!("Hasse bound violated: a = {trace}, q = {q}")));
    }
    Ok(trace)
}

fn table_for(fq: &Fq, n: usize) -> Result<crate::ff::ExtField> {
    let ext = fq.tower(n);
    if ext.table().is_none() {
        return Err(Error::FieldTooLarge(ext.order().unwrap_or(u128::MAX)));
    }
    Ok(ext)
}

/// Frobenius orbit representatives (least index in each orbit) with orbit
/// sizes, followed by the point at infinity.
pub fn fiber_orbits(tab: &TableField) -> Vec<(Fiber, u32)> {
    let mut out = Vec::new();
    for x in 0..tab.order() {
        let mut y = tab.frobenius(x);
        let mut size = 1u32;
        let mut least = true;
        while y != x {
            if y < x {
                least = false;
                break;
            }
            y = tab.frobenius(y);
            size += 1;
        }
        if least {
            out.push((Fiber::Finite(x), size));
        }
    }
    out.push((Fiber::Infinity, 1));
    out
}

pub fn trace_sum(model: &FiberModel, n: usize, exec: Exec) -> Result<TraceSum> {
    let ext = table_for(model.field(), n)?;
    let tab = ext.table().expect("checked");
    let orbits = fiber_orbits(tab);
    let fibers = par::map(exec, &orbits, |&(fiber, weight)| {
        model.fiber_trace(tab, fiber).map(|trace| FiberTrace {
            fiber,
            weight,
            trace,
        })
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    Ok(TraceSum::from_fibers(n, fibers))
}

/// Recomputes one fiber's trace over `F_{q^n}` (used for cache validation).
pub fn recompute_fiber(model: &FiberModel, n: usize, fiber: Fiber) -> Result<i64> {
    let ext = table_for(model.field(), n)?;
    model.fiber_trace(ext.table().expect("checked"), fiber)
}

/// `exp(sum_{n<=D} A_n T^n / n)` truncated at degree `D`, via Newton's
/// identities `n l_n = sum_k A_k l_{n-k}`; fails if a coefficient is not an
/// integer.
pub fn l_from_traces(degree: usize, traces: &[i128]) -> Result<Vec<BigInt>> {
    if traces.len() < degree {
        return Err(Error::Internal("not enough trace sums".into()));
    }
    let mut l = vec![BigInt::one()];
    for n in 1..=degree {
        let s: BigInt = (1..=n).map(|k| BigInt::from(traces[k - 1]) * &l[n - k]).sum();
        let nn = BigInt::from(n);
        if !(&s % &nn).is_zero() {
            return Err(Error::Internal(format!(
                "non-integral L-coefficient {s}/{n} at T^{n}"
            )));
        }
        l.push(s / nn);
    }
    Ok(l)
}

/// `A_1..A_count` implied by `L`, inverting `n l_n = sum_k A_k l_{n-k}`.
pub fn traces_from_l(coeffs: &[BigInt], count: usize) -> Vec<BigInt> {
    let l = |i: usize| coeffs.get(i).cloned().unwrap_or_default();
    let mut a: Vec<BigInt> = Vec::with_capacity(count);
    for n in 1..=count {
        let mut s = BigInt::from(n) * l(n);
        for k in 1..n {
            s -= &a[k - 1] * l(n - k);
        }
        a.push(s);
    }
    a
}

/// Inverse of `p(T^step)` modulo `T^(len)`, for `p(0) = 1`.
fn inverse_series(p: &[i128], step: usize, len: usize) -> Vec<BigInt> {
    let m = (len - 1) / step + 1;
    let coeff = |i: usize| p.get(i).map_or(BigInt::zero(), |&c| BigInt::from(c));
    let mut inv = vec![BigInt::zero(); m];
    inv[0] = BigInt::one();
    for k in 1..m {
        let s: BigInt = (1..=k).map(|j| coeff(j) * &inv[k - j]).sum();
        inv[k] = -s;
    }
    let mut out = vec![BigInt::zero(); len];
    for (k, c) in inv.into_iter().enumerate() {
        out[k * step] = c;
    }
    out
}

fn mul_trunc(a: &[BigInt], b: &[BigInt]) -> Vec<BigInt> {
    let len = a.len();
    let mut out = vec![BigInt::zero(); len];
    for (i, x) in a.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate().take(len - i) {
            out[i + j] += x * y;
        }
    }
    out
}

/// Minimal polynomials (as coefficient vectors over `F_q`) of the elements of
/// exact degree `e` in `F_{q^e}`, mapped to their least root.
fn least_roots_by_minpoly(tab: &TableField, e: usize) -> HashMap<Vec<Fe>, u32> {
    let fq = tab.base();
    let mut out = HashMap::new();
    for (fiber, size) in fiber_orbits(tab) {
        let Fiber::Finite(x) = fiber else { continue };
        if size as usize != e {
            continue;
        }
        // prod over conjugates of (X - x^(q^i)), low-degree first
        let mut poly = vec![1u32];
        let mut c = x;
        for _ in 0..e {
            let neg = tab.neg(c);
            let mut next = vec![0u32; poly.len() + 1];
            for (i, &pc) in poly.iter().enumerate() {
                next[i + 1] = tab.add(next[i + 1], pc);
                next[i] = tab.add(next[i], tab.mul(pc, neg));
            }
            poly = next;
            c = tab.frobenius(c);
        }
        let key: Vec<Fe> = poly
            .iter()
            .map(|&i| fq.element(i).expect("minimal polynomial over F_q"))
            .collect();
        out.insert(key, x);
    }
    out
}

/// Truncated Euler product over all places of degree `<= D`.
pub fn l_from_euler(model: &FiberModel, degree: usize) -> Result<Vec<BigInt>> {
    let fq = model.field();
    let len = degree + 1;
    let mut acc = vec![BigInt::zero(); len];
    acc[0] = BigInt::one();
    if degree == 0 {
        return Ok(acc);
    }
    let a = model.curve.a();
    let b = model.curve.b();
    for e in 1..=degree {
        let ext = table_for(fq, e)?;
        let tab = ext.table().expect("checked");
        let mut roots: Vec<(Vec<Fe>, u32)> = least_roots_by_minpoly(tab, e).into_iter().collect();
        roots.sort_unstable();
        let expected = necklace_count(fq.q(), e);
        if roots.len() as u128 != expected {
            return Err(Error::Internal(format!(
                "{} orbits of degree {e} but {expected} places",
                roots.len()
            )));
        }
        let mut places: Vec<(Place, Option<u32>)> = roots
            .into_iter()
            .map(|(coeffs, x)| (Place::Finite(Poly::new(fq, coeffs)), Some(x)))
            .collect();
        if e == 1 {
            places.push((Place::Infinity, None));
        }
        for (v, root) in &places {
            let factor = match (model.special(v), root) {
                (Some(data), _) => data.euler_factor()?,
                (None, Some(x)) => {
                    let trace = good_trace(tab, a.eval_table(tab, *x), b.eval_table(tab, *x))?;
                    vec![1, -(trace as i128), tab.order() as i128]
                }
                (None, None) => unreachable!("infinity is special"),
            };
            acc = mul_trunc(&acc, &inverse_series(&factor, e, len));
        }
    }
    Ok(acc)
}

/// `L(T)` with its functional-equation sign, analytic rank and leading value.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LSeries {
    pub q: u64,
    pub degree: usize,
    pub coeffs: Vec<BigInt>,
    pub epsilon: i8,
    pub r_an: usize,
    /// `M(1/q)` where `L(T) = (1 - qT)^r M(T)`.
    pub leading: BigRational,
}

impl LSeries {
    /// Validates `L(0) = 1` and the functional equation
    /// `l_{D-i} = eps q^(D-2i) l_i`.
    pub fn new(q: u64, coeffs: Vec<BigInt>) -> Result<LSeries> {
        let degree = coeffs.len() - 1;
        if !coeffs[0].is_one() {
            return Err(Error::Internal("L(0) != 1".into()));
        }
        let qb = BigInt::from(q);
        let qd = qb.pow(degree as u32);
        let top = &coeffs[degree];
        let epsilon: i8 = if *top == qd {
            1
        } else if *top == -&qd {
            -1
        } else {
            return Err(Error::Internal(format!(
                "leading coefficient {top} is not +-q^{degree}"
            )));
        };
        for i in 0..=degree {
            // l_{D-i} q^i = eps q^(D-i) l_i
            let lhs = &coeffs[degree - i] * qb.pow(i as u32);
            let rhs = BigInt::from(epsilon) * qb.pow((degree - i) as u32) * &coeffs[i];
            if lhs != rhs {
                return Err(Error::Internal(format!("functional equation fails at T^{i}")));
            }
        }
        let (r_an, leading) = rank_and_leading(q, &coeffs);
        Ok(LSeries {
            q,
            degree,
            coeffs,
            epsilon,
            r_an,
            leading,
        })
    }

    /// `L(1/q^s)` evaluated at `T = 1/q`.
    pub fn value_at_one(&self) -> BigRational {
        eval(&self.coeffs, &BigRational::new(BigInt::one(), BigInt::from(self.q)))
    }

    pub fn coeffs_i128(&self) -> Option<Vec<i128>> {
        self.coeffs.iter().map(|c| c.to_i128()).collect()
    }
}

fn eval(coeffs: &[BigInt], x: &BigRational) -> BigRational {
    coeffs
        .iter()
        .rev()
        .fold(BigRational::zero(), |acc, c| acc * x + BigRational::from_integer(c.clone()))
}

/// Order of vanishing at `T = 1/q` and `M(1/q)`.
pub fn rank_and_leading(q: u64, coeffs: &[BigInt]) -> (usize, BigRational) {
    let qb = BigInt::from(q);
    let at = BigRational::new(BigInt::one(), qb.clone());
    let mut cur = coeffs.to_vec();
    let mut r = 0;
    loop {
        if cur.iter().all(|c| c.is_zero()) {
            return (r, BigRational::zero());
        }
        let value = eval(&cur, &at);
        if !value.is_zero() {
            return (r, value);
        }
        // synthetic division by (1 - qT)
        let mut quotient = Vec::with_capacity(cur.len() - 1);
        let mut carry = BigInt::zero();
        for c in &cur[..cur.len() - 1] {
            carry = c + &qb * &carry;
            quotient.push(carry.clone());
        }
        cur = quotient;
        r += 1;
    }
}

/// Both constructions of `L`, cross-checked.
#[derive(Clone, Debug)]
pub struct LComputation {
    pub series: LSeries,
    pub traces: Vec<TraceSum>,
    pub euler_coeffs: Vec<BigInt>,
}

pub fn assemble_l_exp(model: &FiberModel, traces: &[TraceSum]) -> Result<LSeries> {
    let d = model.l_degree();
    let a: Vec<i128> = traces.iter().take(d).map(|t| t.a_n).collect();
    LSeries::new(model.field().q(), l_from_traces(d, &a)?)
}

pub fn assemble_l_euler(model: &FiberModel) -> Result<LSeries> {
    LSeries::new(model.field().q(), l_from_euler(model, model.l_degree())?)
}

/// Computes the trace sums `A_1..A_D` and both forms of `L`, failing on any
/// disagreement.
pub fn compute_l(model: &FiberModel, exec: Exec) -> Result<LComputation> {
    let traces = (1..=model.l_degree())
        .map(|n| trace_sum(model, n, exec))
        .collect::<Result<Vec<_>>>()?;
    compute_l_with_traces(model, traces)
}

pub fn compute_l_with_traces(model: &FiberModel, traces: Vec<TraceSum>) -> Result<LComputation> {
    for t in &traces {
        if !t.within_hasse_bound(model.field().q()) {
            return Err(Error::Internal(format!("A_{} outside the Hasse bound", t.n)));
        }
    }
    let series = assemble_l_exp(model, &traces)?;
    let euler_coeffs = l_from_euler(model, model.l_degree())?;
    if euler_coeffs != series.coeffs {
        return Err(Error::Internal(
            "Euler product and trace-sum L-functions disagree".into(),
        ));
    }
    Ok(LComputation {
        series,
        traces,
        euler_coeffs,
    })
}

/// `true` when the coefficients of `L` have no sign issues with `i128`.
pub fn fits_i128(coeffs: &[BigInt]) -> bool {
    coeffs.iter().all(|c| c.abs().to_i128().is_some())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::localred::all_local_data;

    fn model(a: &[i64], b: &[i64]) -> FiberModel {
        let f = Fq::new(5, 1).unwrap();
        let c = Curve::new(Poly::from_i64s(&f, a), Poly::from_i64s(&f, b)).unwrap();
        let local = all_local_data(&c).unwrap();
        FiberModel::new(&c, &local).unwrap()
    }

    fn big(v: &[i64]) -> Vec<BigInt> {
        v.iter().map(|&x| BigInt::from(x)).collect()
    }

    #[test]
    fn e1_traces_vanish() {
        let m = model(&[1], &[0, 1]);
        assert_eq!(m.l_degree(), 0);
        for n in 1..=3 {
            assert_eq!(trace_sum(&m, n, Exec::Sequential).unwrap().a_n, 0, "n = {n}");
        }
        let l = compute_l(&m, Exec::Sequential).unwrap();
        assert_eq!(l.series.coeffs, big(&[1]));
        assert_eq!(l.series.r_an, 0);
        assert!(l.series.leading.is_one());
    }

    #[test]
    fn e2_degree_one() {
        let m = model(&[0, -1], &[0, 1]);
        assert_eq!(m.conductor_degree(), 5);
        let l = compute_l(&m, Exec::Sequential).unwrap();
        assert_eq!(l.series.degree, 1);
        assert_eq!(l.series.coeffs[1].abs(), BigInt::from(5));
    }

    #[test]
    fn orbits_cover_field() {
        let f = Fq::new(5, 1).unwrap();
        let ext = f.tower(3);
        let tab = ext.table().unwrap();
        let orbits = fiber_orbits(tab);
        let total: u32 = orbits.iter().map(|&(_, w)| w).sum();
        assert_eq!(total, 126);
        let deg3 = orbits.iter().filter(|&&(_, w)| w == 3).count();
        assert_eq!(deg3, 40);
    }

    #[test]
    fn rank_examples() {
        assert_eq!(rank_and_leading(5, &big(&[1])), (0, BigRational::one()));
        assert_eq!(rank_and_leading(5, &big(&[1, -5])), (1, BigRational::one()));
        assert_eq!(
            rank_and_leading(5, &big(&[1, 0, -25])),
            (1, BigRational::from_integer(2.into()))
        );
        assert_eq!(rank_and_leading(5, &big(&[1, -10, 25])).0, 2);
    }

    #[test]
    fn functional_equation_checks() {
        assert_eq!(LSeries::new(5, big(&[1, -5])).unwrap().epsilon, -1);
        assert_eq!(LSeries::new(5, big(&[1, 5])).unwrap().epsilon, 1);
        assert_eq!(LSeries::new(5, big(&[1, 2, 5 * 5])).unwrap().epsilon, 1);
        assert!(LSeries::new(5, big(&[1, 2, 3])).is_err());
        assert!(LSeries::new(5, big(&[1, 1, 25])).is_ok());
        assert!(LSeries::new(5, big(&[1, 1, -25])).is_err());
    }

    #[test]
    fn geometric_inversion() {
        // (1 - aT + qT^2)^-1 = 1 + aT + (a^2 - q)T^2 + ...
        let inv = inverse_series(&[1, -2, 5], 1, 3);
        assert_eq!(inv, big(&[1, 2, -1]));
        let inv2 = inverse_series(&[1, 1], 2, 5);
        assert_eq!(inv2, big(&[1, 0, -1, 0, 1]));
    }

    #[test]
    fn non_integral_series_rejected() {
        assert!(l_from_traces(1, &[1]).is_ok());
        assert!(l_from_traces(2, &[1, 0]).is_err());
    }

    #[test]
    fn traces_round_trip_through_l() {
        let l = big(&[1, 2, 5]);
        let a: Vec<i128> = traces_from_l(&l, 2).iter().map(|x| x.to_i128().unwrap()).collect();
        assert_eq!(l_from_traces(2, &a).unwrap(), l);
        // L = 1 - 5T: A_n = -5^n
        assert_eq!(traces_from_l(&big(&[1, -5]), 3), big(&[-5, -25, -125]));
    }
}
