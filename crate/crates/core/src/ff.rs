//! Finite fields `F_q` (`q = p^e`) and their extensions `F_{q^n}`.
//!
//! Elements of `F_q` are stored as a packed index: the base-`p` digits of the
//! index are the coordinates of the element over `F_p`, constant term first.
//! Extension elements are coefficient vectors over `F_q` modulo a fixed monic
//! irreducible `m_n`; the same digit convention extends to an index in
//! `[0, q^n)`, which is also the order used for every "least element" choice.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use num_bigint::BigUint;

use crate::error::{Error, Result};
use crate::funcfield::Poly;

/// Largest field order for which log/Zech tables are built.
pub const TABLE_LIMIT: u128 = 1 << 21;

/// An element of `F_q`, identified by its packed index.
#[derive(Copy, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Fe(pub(crate) u32);

impl Fe {
    pub const ZERO: Fe = Fe(0);

    pub fn index(self) -> u32 {
        self.0
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }
}

impl fmt::Debug for Fe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Parameters of the base field: characteristic, degree, and the defining
/// polynomial of `F_q` over `F_p` (little-endian, monic).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FieldSpec {
    pub p: u64,
    pub e: usize,
    pub base_modulus: Vec<u64>,
}

fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u64;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

pub(crate) fn prime_factors(mut n: u128) -> Vec<u128> {
    let mut out = Vec::new();
    let mut d = 2u128;
    while d * d <= n {
        if n.is_multiple_of(d) {
            out.push(d);
            while n.is_multiple_of(d) {
                n /= d;
            }
        }
        d += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

/// Shared handle to `F_q`. Cheap to clone; immutable apart from the
/// single-initialization caches of extension fields and roots.
#[derive(Clone)]
pub struct Fq(Arc<FqInner>);

struct FqInner {
    spec: FieldSpec,
    p: u32,
    q: u32,
    // log/exp tables, only for e > 1
    exp: Vec<u32>,
    log: Vec<u32>,
    towers: Mutex<BTreeMap<usize, ExtField>>,
    roots: Mutex<HashMap<Vec<Fe>, ExtElement>>,
}

impl fmt::Debug for Fq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "F_{}", self.0.q)
    }
}

impl PartialEq for Fq {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || self.0.spec == other.0.spec
    }
}

impl Eq for Fq {}

impl Fq {
    /// Builds `F_{p^e}`. Rejects composite `p` and `p < 5`.
    pub fn new(p: u64, e: usize) -> Result<Fq> {
        if !is_prime(p) {
            return Err(Error::NotPrime(p));
        }
        if p < 5 {
            return Err(Error::UnsupportedCharacteristic(p));
        }
        if e == 0 {
            return Err(Error::Invalid("extension degree must be >= 1".into()));
        }
        if p >= 1 << 31 {
            return Err(Error::FieldTooLarge(p as u128));
        }
        let q = (p as u128).pow(e as u32);
        if e > 1 && q > TABLE_LIMIT {
            return Err(Error::FieldTooLarge(q));
        }
        let prime = Fq::prime_field(p as u32);
        if e == 1 {
            return Ok(prime);
        }
        let modulus = first_irreducible(&prime, e);
        let base_modulus: Vec<u64> = modulus.coeffs().iter().map(|c| c.0 as u64).collect();
        let (exp, log) = build_base_tables(p as u32, &base_modulus, q as u32);
        Ok(Fq(Arc::new(FqInner {
            spec: FieldSpec {
                p,
                e,
                base_modulus,
            },
            p: p as u32,
            q: q as u32,
            exp,
            log,
            towers: Mutex::new(BTreeMap::new()),
            roots: Mutex::new(HashMap::new()),
        })))
    }

    /// Builds `F_q` from a prime power `q`.
    pub fn with_order(q: u64) -> Result<Fq> {
        let factors = prime_factors(q as u128);
        if factors.len() != 1 {
            return Err(Error::Invalid(format!("{q} is not a prime power")));
        }
        let p = factors[0] as u64;
        let mut e = 0;
        let mut r = q;
        while r > 1 {
            r /= p;
            e += 1;
        }
        Fq::new(p, e)
    }

    fn prime_field(p: u32) -> Fq {
        Fq(Arc::new(FqInner {
            spec: FieldSpec {
                p: p as u64,
                e: 1,
                base_modulus: vec![0, 1],
            },
            p,
            q: p,
            exp: Vec::new(),
            log: Vec::new(),
            towers: Mutex::new(BTreeMap::new()),
            roots: Mutex::new(HashMap::new()),
        }))
    }

    pub fn spec(&self) -> &FieldSpec {
        &self.0.spec
    }

    pub fn p(&self) -> u64 {
        self.0.p as u64
    }

    pub fn e(&self) -> usize {
        self.0.spec.e
    }

    pub fn q(&self) -> u64 {
        self.0.q as u64
    }

    pub fn zero(&self) -> Fe {
        Fe(0)
    }

    pub fn one(&self) -> Fe {
        Fe(1)
    }

    /// Element with the given packed index.
    pub fn element(&self, index: u32) -> Result<Fe> {
        if index >= self.0.q {
            return Err(Error::Invalid(format!("index {index} outside F_{}", self.0.q)));
        }
        Ok(Fe(index))
    }

    /// Image of an integer under `Z -> F_p -> F_q`.
    pub fn from_i64(&self, n: i64) -> Fe {
        Fe(n.rem_euclid(self.0.p as i64) as u32)
    }

    /// Coordinates over `F_p`, constant term first.
    pub fn coefficients(&self, x: Fe) -> Vec<u32> {
        let p = self.0.p;
        let mut v = x.0;
        (0..self.e())
            .map(|_| {
                let d = v % p;
                v /= p;
                d
            })
            .collect()
    }

    pub fn from_coefficients(&self, coeffs: &[i64]) -> Result<Fe> {
        if coeffs.len() > self.e() {
            return Err(Error::Invalid(format!(
                "expected at most {} coordinates over F_p",
                self.e()
            )));
        }
        let p = self.0.p as i64;
        let mut idx = 0u32;
        for &c in coeffs.iter().rev() {
            idx = idx * self.0.p + c.rem_euclid(p) as u32;
        }
        Ok(Fe(idx))
    }

    pub fn elements(&self) -> impl Iterator<Item = Fe> {
        (0..self.0.q).map(Fe)
    }

    pub fn add(&self, x: Fe, y: Fe) -> Fe {
        let p = self.0.p;
        if self.0.spec.e == 1 {
            let s = x.0 + y.0;
            return Fe(if s >= p { s - p } else { s });
        }
        let (mut a, mut b) = (x.0, y.0);
        let mut out = 0u32;
        let mut place = 1u32;
        for _ in 0..self.0.spec.e {
            let d = (a % p + b % p) % p;
            out += d * place;
            place *= p;
            a /= p;
            b /= p;
        }
        Fe(out)
    }

    pub fn neg(&self, x: Fe) -> Fe {
        let p = self.0.p;
        if self.0.spec.e == 1 {
            return Fe(if x.0 == 0 { 0 } else { p - x.0 });
        }
        let mut a = x.0;
        let mut out = 0u32;
        let mut place = 1u32;
        for _ in 0..self.0.spec.e {
            let d = (p - a % p) % p;
            out += d * place;
            place *= p;
            a /= p;
        }
        Fe(out)
    }

    pub fn sub(&self, x: Fe, y: Fe) -> Fe {
        self.add(x, self.neg(y))
    }

    pub fn mul(&self, x: Fe, y: Fe) -> Fe {
        if self.0.spec.e == 1 {
            return Fe(((x.0 as u64 * y.0 as u64) % self.0.p as u64) as u32);
        }
        if x.0 == 0 || y.0 == 0 {
            return Fe(0);
        }
        let m = self.0.q - 1;
        let l = (self.0.log[x.0 as usize] + self.0.log[y.0 as usize]) % m;
        Fe(self.0.exp[l as usize])
    }

    pub fn pow(&self, x: Fe, mut k: u128) -> Fe {
        let mut base = x;
        let mut acc = self.one();
        while k > 0 {
            if k & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            k >>= 1;
        }
        acc
    }

    pub fn inv(&self, x: Fe) -> Result<Fe> {
        if x.is_zero() {
            return Err(Error::DivisionByZero);
        }
        Ok(self.pow(x, self.0.q as u128 - 2))
    }

    pub fn div(&self, x: Fe, y: Fe) -> Result<Fe> {
        Ok(self.mul(x, self.inv(y)?))
    }

    /// Quadratic character: 0, +1 on nonzero squares, -1 otherwise.
    pub fn chi(&self, x: Fe) -> i8 {
        if x.is_zero() {
            return 0;
        }
        if self.0.spec.e > 1 {
            return if self.0.log[x.0 as usize].is_multiple_of(2) { 1 } else { -1 };
        }
        if self.pow(x, (self.0.q as u128 - 1) / 2) == self.one() {
            1
        } else {
            -1
        }
    }

    /// A square root, if one exists (the smaller index of the two).
    pub fn sqrt(&self, x: Fe) -> Option<Fe> {
        if x.is_zero() {
            return Some(x);
        }
        if self.chi(x) != 1 {
            return None;
        }
        let r = if self.0.spec.e > 1 {
            Fe(self.0.exp[(self.0.log[x.0 as usize] / 2) as usize])
        } else {
            tonelli_shanks(self, x)
        };
        let s = self.neg(r);
        Some(if s < r { s } else { r })
    }

    /// The degree-`n` extension `F_{q^n}`, built once and cached.
    pub fn tower(&self, n: usize) -> ExtField {
        let mut towers = self.0.towers.lock().expect("tower cache poisoned");
        towers
            .entry(n)
            .or_insert_with(|| build_tower(self, n))
            .clone()
    }

    pub(crate) fn cached_root(&self, key: &[Fe]) -> Option<ExtElement> {
        self.0.roots.lock().expect("root cache poisoned").get(key).cloned()
    }

    pub(crate) fn store_root(&self, key: Vec<Fe>, root: ExtElement) {
        self.0.roots.lock().expect("root cache poisoned").insert(key, root);
    }
}

fn tonelli_shanks(f: &Fq, n: Fe) -> Fe {
    let p = f.q() as u128;
    let mut q = p - 1;
    let mut s = 0u32;
    while q.is_multiple_of(2) {
        q /= 2;
        s += 1;
    }
    let mut z = f.from_i64(2);
    while f.chi(z) != -1 {
        z = f.add(z, f.one());
    }
    let mut m = s;
    let mut c = f.pow(z, q);
    let mut t = f.pow(n, q);
    let mut r = f.pow(n, q.div_ceil(2));
    while t != f.one() {
        let mut i = 0;
        let mut t2 = t;
        while t2 != f.one() {
            t2 = f.mul(t2, t2);
            i += 1;
        }
        let b = f.pow(c, 1u128 << (m - i - 1));
        m = i;
        c = f.mul(b, b);
        t = f.mul(t, c);
        r = f.mul(r, b);
    }
    r
}

/// Multiplication in `F_p[x]/(modulus)` on packed digit indices; used only
/// while building the log tables of `F_q`.
fn base_mul_slow(p: u32, modulus: &[u64], x: u32, y: u32) -> u32 {
    let e = modulus.len() - 1;
    let digits = |mut v: u32| -> Vec<u64> {
        (0..e)
            .map(|_| {
                let d = v % p;
                v /= p;
                d as u64
            })
            .collect()
    };
    let (a, b) = (digits(x), digits(y));
    let p64 = p as u64;
    let mut prod = vec![0u64; 2 * e];
    for i in 0..e {
        for j in 0..e {
            prod[i + j] = (prod[i + j] + a[i] * b[j]) % p64;
        }
    }
    for k in (e..2 * e).rev() {
        let c = prod[k];
        if c == 0 {
            continue;
        }
        for (j, &mj) in modulus.iter().enumerate().take(e) {
            prod[k - e + j] = (prod[k - e + j] + (p64 - c) * mj) % p64;
        }
        prod[k] = 0;
    }
    let mut idx = 0u32;
    for k in (0..e).rev() {
        idx = idx * p + prod[k] as u32;
    }
    idx
}

fn build_base_tables(p: u32, modulus: &[u64], q: u32) -> (Vec<u32>, Vec<u32>) {
    let m = (q - 1) as u128;
    let factors = prime_factors(m);
    let pow = |mut b: u32, mut k: u128| -> u32 {
        let mut acc = 1u32;
        while k > 0 {
            if k & 1 == 1 {
                acc = base_mul_slow(p, modulus, acc, b);
            }
            b = base_mul_slow(p, modulus, b, b);
            k >>= 1;
        }
        acc
    };
    let g = (2..q)
        .find(|&g| factors.iter().all(|&l| pow(g, m / l) != 1))
        .expect("multiplicative group of a finite field is cyclic");
    let mut exp = vec![0u32; (q - 1) as usize];
    let mut log = vec![0u32; q as usize];
    let mut x = 1u32;
    for (i, slot) in exp.iter_mut().enumerate() {
        *slot = x;
        log[x as usize] = i as u32;
        x = base_mul_slow(p, modulus, x, g);
    }
    (exp, log)
}

/// First monic irreducible of degree `n` over `f`, scanning monic polynomials
/// with the constant term varying fastest.
fn first_irreducible(f: &Fq, n: usize) -> Poly {
    let q = f.q() as u128;
    let total = q.pow(n as u32);
    for k in 0..total {
        let mut coeffs = Vec::with_capacity(n + 1);
        let mut v = k;
        for _ in 0..n {
            coeffs.push(Fe((v % q) as u32));
            v /= q;
        }
        coeffs.push(f.one());
        let poly = Poly::new(f, coeffs);
        if poly.is_irreducible() {
            return poly;
        }
    }
    unreachable!("irreducible polynomials exist in every degree")
}

/// Builds `F_{q^n} = F_q[u]/(m_n)` with `m_n` the first monic irreducible of
/// degree `n`. Deterministic; prefer [`Fq::tower`], which caches the result.
pub fn build_tower(f: &Fq, n: usize) -> ExtField {
    assert!(n >= 1, "extension degree must be positive");
    let modulus = first_irreducible(f, n);
    let order = (f.q() as u128).checked_pow(n as u32);
    ExtField(Arc::new(ExtInner {
        base: f.clone(),
        degree: n,
        modulus,
        order,
        table: OnceLock::new(),
    }))
}

/// `F_{q^n}` as a quotient ring of `F_q[u]`.
#[derive(Clone)]
pub struct ExtField(Arc<ExtInner>);

struct ExtInner {
    base: Fq,
    degree: usize,
    modulus: Poly,
    order: Option<u128>,
    table: OnceLock<Option<TableField>>,
}

impl fmt::Debug for ExtField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "F_{}^{} mod {}", self.0.base.q(), self.0.degree, self.0.modulus)
    }
}

/// Element of an [`ExtField`]: `degree` coefficients over `F_q`.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct ExtElement(Vec<Fe>);

impl ExtElement {
    pub fn coefficients(&self) -> &[Fe] {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|c| c.is_zero())
    }
}

impl ExtField {
    pub fn base(&self) -> &Fq {
        &self.0.base
    }

    pub fn degree(&self) -> usize {
        self.0.degree
    }

    /// The defining polynomial `m_n`.
    pub fn modulus(&self) -> &Poly {
        &self.0.modulus
    }

    /// `q^n`, or `None` if it does not fit in 128 bits.
    pub fn order(&self) -> Option<u128> {
        self.0.order
    }

    fn order_big(&self) -> BigUint {
        BigUint::from(self.0.base.q()).pow(self.0.degree as u32)
    }

    pub fn zero(&self) -> ExtElement {
        ExtElement(vec![Fe::ZERO; self.0.degree])
    }

    pub fn one(&self) -> ExtElement {
        self.embed(self.0.base.one())
    }

    /// The class of `u`.
    pub fn generator(&self) -> ExtElement {
        if self.0.degree == 1 {
            // u = -m_1(0) in F_q
            let c = self.0.modulus.coeff(0);
            return self.embed(self.0.base.neg(c));
        }
        let mut v = vec![Fe::ZERO; self.0.degree];
        v[1] = self.0.base.one();
        ExtElement(v)
    }

    /// Inclusion `F_q -> F_{q^n}`.
    pub fn embed(&self, c: Fe) -> ExtElement {
        let mut v = vec![Fe::ZERO; self.0.degree];
        v[0] = c;
        ExtElement(v)
    }

    pub fn from_coefficients(&self, coeffs: &[Fe]) -> ExtElement {
        let mut v = vec![Fe::ZERO; self.0.degree];
        for (slot, c) in v.iter_mut().zip(coeffs) {
            *slot = *c;
        }
        ExtElement(v)
    }

    /// Element with packed index `idx` (constant coefficient least significant).
    pub fn from_index(&self, mut idx: u128) -> ExtElement {
        let q = self.0.base.q() as u128;
        ExtElement(
            (0..self.0.degree)
                .map(|_| {
                    let c = Fe((idx % q) as u32);
                    idx /= q;
                    c
                })
                .collect(),
        )
    }

    pub fn index(&self, x: &ExtElement) -> u128 {
        let q = self.0.base.q() as u128;
        x.0.iter().rev().fold(0u128, |acc, c| acc * q + c.0 as u128)
    }

    pub fn add(&self, x: &ExtElement, y: &ExtElement) -> ExtElement {
        let f = &self.0.base;
        ExtElement(x.0.iter().zip(&y.0).map(|(a, b)| f.add(*a, *b)).collect())
    }

    pub fn sub(&self, x: &ExtElement, y: &ExtElement) -> ExtElement {
        let f = &self.0.base;
        ExtElement(x.0.iter().zip(&y.0).map(|(a, b)| f.sub(*a, *b)).collect())
    }

    pub fn neg(&self, x: &ExtElement) -> ExtElement {
        let f = &self.0.base;
        ExtElement(x.0.iter().map(|a| f.neg(*a)).collect())
    }

    pub fn mul(&self, x: &ExtElement, y: &ExtElement) -> ExtElement {
        let f = &self.0.base;
        let n = self.0.degree;
        let mut prod = vec![Fe::ZERO; 2 * n - 1];
        for (i, &a) in x.0.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, &b) in y.0.iter().enumerate() {
                prod[i + j] = f.add(prod[i + j], f.mul(a, b));
            }
        }
        let m = self.0.modulus.coeffs();
        for k in (n..2 * n - 1).rev() {
            let c = prod[k];
            if c.is_zero() {
                continue;
            }
            for j in 0..n {
                prod[k - n + j] = f.sub(prod[k - n + j], f.mul(c, m[j]));
            }
            prod[k] = Fe::ZERO;
        }
        prod.truncate(n);
        ExtElement(prod)
    }

    pub fn pow(&self, x: &ExtElement, k: &BigUint) -> ExtElement {
        let mut acc = self.one();
        let bits = k.bits();
        for i in (0..bits).rev() {
            acc = self.mul(&acc, &acc);
            if k.bit(i) {
                acc = self.mul(&acc, x);
            }
        }
        acc
    }

    pub fn pow_u64(&self, x: &ExtElement, k: u64) -> ExtElement {
        self.pow(x, &BigUint::from(k))
    }

    pub fn inv(&self, x: &ExtElement) -> Result<ExtElement> {
        if x.is_zero() {
            return Err(Error::DivisionByZero);
        }
        let e = self.order_big() - 2u32;
        Ok(self.pow(x, &e))
    }

    pub fn div(&self, x: &ExtElement, y: &ExtElement) -> Result<ExtElement> {
        Ok(self.mul(x, &self.inv(y)?))
    }

    /// The arithmetic Frobenius `x -> x^q`.
    pub fn frobenius(&self, x: &ExtElement) -> ExtElement {
        self.pow_u64(x, self.0.base.q())
    }

    /// Quadratic character in `F_{q^n}`.
    pub fn chi(&self, x: &ExtElement) -> i8 {
        if x.is_zero() {
            return 0;
        }
        if let Some(t) = self.table() {
            return t.chi(self.index(x) as u32);
        }
        let e = (self.order_big() - 1u32) >> 1;
        if self.pow(x, &e) == self.one() {
            1
        } else {
            -1
        }
    }

    /// Iterates all elements in index order. Panics if `q^n` overflows.
    pub fn elements(&self) -> impl Iterator<Item = ExtElement> + '_ {
        let n = self.0.order.expect("field too large to enumerate");
        (0..n).map(move |i| self.from_index(i))
    }

    /// Log/Zech tables, built on first use when `q^n <= 2^20`.
    pub fn table(&self) -> Option<&TableField> {
        self.0
            .table
            .get_or_init(|| match self.0.order {
                Some(n) if n <= TABLE_LIMIT => Some(TableField::build(self)),
                _ => None,
            })
            .as_ref()
    }
}

/// Sentinel in the Zech table for `1 + g^k = 0`.
const NO_LOG: u32 = u32::MAX;

/// `F_{q^n}` with elements as packed indices, multiplication by discrete logs
/// and addition by Zech logarithms. Used by the point-counting kernels.
pub struct TableField {
    order: u32,
    q: u32,
    base: Fq,
    degree: usize,
    exp: Vec<u32>,
    log: Vec<u32>,
    zech: Vec<u32>,
}

impl TableField {
    fn build(ext: &ExtField) -> TableField {
        let order = ext.order().expect("checked by caller") as u32;
        let m = (order - 1) as u128;
        let factors = prime_factors(m);
        let one = ext.one();
        let g = (1..order as u128)
            .map(|i| ext.from_index(i))
            .find(|g| {
                factors
                    .iter()
                    .all(|&l| ext.pow(g, &BigUint::from(m / l)) != one)
            })
            .expect("multiplicative group of a finite field is cyclic");
        let mut exp = vec![0u32; m as usize];
        let mut log = vec![0u32; order as usize];
        let mut x = one;
        for (i, slot) in exp.iter_mut().enumerate() {
            let idx = ext.index(&x) as u32;
            *slot = idx;
            log[idx as usize] = i as u32;
            x = ext.mul(&x, &g);
        }
        let base = ext.base().clone();
        let q = base.q() as u32;
        let zech = exp
            .iter()
            .map(|&idx| {
                let c = Fe(idx % q);
                let shifted = idx - c.0 + base.add(c, base.one()).0;
                if shifted == 0 {
                    NO_LOG
                } else {
                    log[shifted as usize]
                }
            })
            .collect();
        TableField {
            order,
            q,
            base,
            degree: ext.degree(),
            exp,
            log,
            zech,
        }
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn base(&self) -> &Fq {
        &self.base
    }

    /// Index of the image of `c in F_q`.
    #[inline]
    pub fn embed(&self, c: Fe) -> u32 {
        c.0
    }

    /// Discrete log of a nonzero element.
    #[inline]
    pub fn log(&self, x: u32) -> u32 {
        self.log[x as usize]
    }

    #[inline]
    pub fn exp(&self, l: u32) -> u32 {
        self.exp[l as usize]
    }

    #[inline]
    pub fn mul(&self, x: u32, y: u32) -> u32 {
        if x == 0 || y == 0 {
            return 0;
        }
        let m = self.order - 1;
        let mut l = self.log[x as usize] + self.log[y as usize];
        if l >= m {
            l -= m;
        }
        self.exp[l as usize]
    }

    #[inline]
    pub fn add(&self, x: u32, y: u32) -> u32 {
        if x == 0 {
            return y;
        }
        if y == 0 {
            return x;
        }
        let m = self.order - 1;
        let lx = self.log[x as usize];
        let ly = self.log[y as usize];
        let d = if ly >= lx { ly - lx } else { ly + m - lx };
        let z = self.zech[d as usize];
        if z == NO_LOG {
            return 0;
        }
        let mut l = lx + z;
        if l >= m {
            l -= m;
        }
        self.exp[l as usize]
    }

    #[inline]
    pub fn neg(&self, x: u32) -> u32 {
        if x == 0 {
            return 0;
        }
        let m = self.order - 1;
        let mut l = self.log[x as usize] + m / 2;
        if l >= m {
            l -= m;
        }
        self.exp[l as usize]
    }

    pub fn sub(&self, x: u32, y: u32) -> u32 {
        self.add(x, self.neg(y))
    }

    pub fn inv(&self, x: u32) -> Result<u32> {
        if x == 0 {
            return Err(Error::DivisionByZero);
        }
        let m = self.order - 1;
        let l = self.log[x as usize];
        Ok(self.exp[((m - l) % m) as usize])
    }

    #[inline]
    pub fn chi(&self, x: u32) -> i8 {
        if x == 0 {
            0
        } else if self.log[x as usize] & 1 == 0 {
            1
        } else {
            -1
        }
    }

    /// `x -> x^q`.
    pub fn frobenius(&self, x: u32) -> u32 {
        if x == 0 {
            return 0;
        }
        let m = (self.order - 1) as u64;
        let l = (self.log[x as usize] as u64 * self.q as u64) % m;
        self.exp[l as usize]
    }

    /// `sum_{x in F_{q^n}} chi(x^3 + alpha x + beta)`.
    pub fn cubic_character_sum(&self, alpha: u32, beta: u32) -> i64 {
        let m = self.order - 1;
        let half = m / 2;
        let zech = &self.zech;
        let mut sum = self.chi(beta) as i64;
        let lb = if beta == 0 { 0 } else { self.log[beta as usize] };
        let la = if alpha == 0 { 0 } else { self.log[alpha as usize] };
        // x = g^i; track log(x^3) and log(alpha x)
        let mut l3 = 0u32;
        let mut lt = la;
        let step3 = 3 % m;
        for _ in 0..m {
            // s = x^3 + alpha x, as (is_zero, log)
            let (s_zero, ls) = if alpha == 0 {
                (false, l3)
            } else {
                let d = if lt >= l3 { lt - l3 } else { lt + m - l3 };
                if d == half {
                    (true, 0)
                } else {
                    let mut l = l3 + zech[d as usize];
                    if l >= m {
                        l -= m;
                    }
                    (false, l)
                }
            };
            let c = if s_zero {
                self.chi(beta) as i64
            } else if beta == 0 {
                if ls & 1 == 0 {
                    1
                } else {
                    -1
                }
            } else {
                let d = if lb >= ls { lb - ls } else { lb + m - ls };
                if d == half {
                    0
                } else if (ls + zech[d as usize]) & 1 == 0 {
                    1
                } else {
                    -1
                }
            };
            sum += c;
            l3 += step3;
            if l3 >= m {
                l3 -= m;
            }
            lt += 1;
            if lt >= m {
                lt -= m;
            }
        }
        sum
    }

    /// Affine-plus-infinity point count of `y^2 = x^3 + alpha x + beta`.
    pub fn count_points(&self, alpha: u32, beta: u32) -> i64 {
        self.order as i64 + 1 + self.cubic_character_sum(alpha, beta)
    }

    /// `q^n + 1 - #E` for the nonsingular curve `y^2 = x^3 + alpha x + beta`.
    ///
    /// Finds the group order in the Hasse interval as the unique multiple
    /// of the orders of a few points; falls back to the character sum when
    /// the field is small or the points leave more than one candidate.
    pub fn frobenius_trace(&self, alpha: u32, beta: u32) -> i64 {
        const NAIVE_BELOW: u32 = 1024;
        const MAX_POINTS: usize = 6;
        let naive = || -self.cubic_character_sum(alpha, beta);
        if self.order < NAIVE_BELOW {
            return naive();
        }
        let q = self.order as u64;
        let mut width = ((4 * q) as f64).sqrt() as u64;
        while (width + 1) * (width + 1) <= 4 * q {
            width += 1;
        }
        while width * width > 4 * q {
            width -= 1;
        }
        let low = q + 1 - width;
        let mut candidates: Vec<u64> = (0..=2 * width).collect();
        let mut used = 0;
        for x in 1..self.order {
            if used == MAX_POINTS {
                break;
            }
            let fx = self.add(self.mul(self.add(self.mul(x, x), alpha), x), beta);
            if self.chi(fx) != 1 {
                continue;
            }
            used += 1;
            let p = Some((x, self.exp(self.log(fx) / 2)));
            let Some(found) = self.multiples_killing(alpha, p, low, 2 * width) else {
                continue;
            };
            let next: Vec<u64> = candidates.into_iter().filter(|c| found.contains(c)).collect();
            candidates = next;
            match candidates.len() {
                0 => break,
                1 => return q as i64 + 1 - (low + candidates[0]) as i64,
                _ => {}
            }
        }
        naive()
    }

    /// All `k in [0, span]` with `(low + k) P = O`, by baby-step giant-step.
    /// `None` if `P` has order too small for the baby steps to be distinct.
    fn multiples_killing(
        &self,
        alpha: u32,
        p: Option<(u32, u32)>,
        low: u64,
        span: u64,
    ) -> Option<Vec<u64>> {
        let mut m = (span as f64 + 1.0).sqrt().ceil() as u64;
        while m * m <= span {
            m += 1;
        }
        // jP for 1 <= j <= m, keyed by x
        let mut baby = HashMap::with_capacity(m as usize);
        let mut jp = p;
        for j in 1..=m {
            let (x, y) = jp?;
            if baby.insert(x, (y, j)).is_some() {
                return None;
            }
            jp = self.ec_add(alpha, jp, p);
        }
        let step = self.ec_mul(alpha, p, m);
        let mut s = self.ec_mul(alpha, p, low);
        let mut found = Vec::new();
        let mut i = 0u64;
        while i * m <= span + m {
            let base = i * m;
            match s {
                None => found.push(base),
                Some((x, y)) => {
                    if let Some(&(yj, j)) = baby.get(&x) {
                        // s = -jP or s = jP
                        let k = if yj == y { base.checked_sub(j) } else { Some(base + j) };
                        found.extend(k);
                    }
                }
            }
            s = self.ec_add(alpha, s, step);
            i += 1;
        }
        found.retain(|&k| k <= span);
        found.sort_unstable();
        found.dedup();
        Some(found)
    }

    fn ec_add(&self, alpha: u32, p: Option<(u32, u32)>, r: Option<(u32, u32)>) -> Option<(u32, u32)> {
        let (Some((x1, y1)), Some((x2, y2))) = (p, r) else {
            return p.or(r);
        };
        let lambda = if x1 == x2 {
            if y1 != y2 || y1 == 0 {
                return None;
            }
            let three = self.embed(self.base.from_i64(3));
            let num = self.add(self.mul(three, self.mul(x1, x1)), alpha);
            self.mul(num, self.inv(self.add(y1, y1)).expect("y != 0"))
        } else {
            self.mul(self.sub(y2, y1), self.inv(self.sub(x2, x1)).expect("x1 != x2"))
        };
        let x3 = self.sub(self.sub(self.mul(lambda, lambda), x1), x2);
        let y3 = self.sub(self.mul(lambda, self.sub(x1, x3)), y1);
        Some((x3, y3))
    }

    fn ec_mul(&self, alpha: u32, p: Option<(u32, u32)>, mut k: u64) -> Option<(u32, u32)> {
        let mut acc = None;
        let mut base = p;
        while k > 0 {
            if k & 1 == 1 {
                acc = self.ec_add(alpha, acc, base);
            }
            base = self.ec_add(alpha, base, base);
            k >>= 1;
        }
        acc
    }
}

/// Quadratic character of `x` in `F_{q^n}` (see [`ExtField::chi`]).
pub fn quadratic_character(field: &ExtField, x: &ExtElement) -> i8 {
    field.chi(x)
}

/// `x -> x^q` in `F_{q^n}`.
pub fn frobenius(field: &ExtField, x: &ExtElement) -> ExtElement {
    field.frobenius(x)
}

impl fmt::Display for ExtElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|c| c.0.to_string()).collect();
        write!(f, "[{}]", parts.join(","))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prime_field_examples() {
        let f = Fq::new(5, 1).unwrap();
        assert_eq!(f.add(f.from_i64(2), f.from_i64(4)), f.from_i64(1));
        assert_eq!(f.inv(f.from_i64(3)).unwrap(), f.from_i64(2));
        assert_eq!(f.inv(f.zero()), Err(Error::DivisionByZero));
        assert_eq!(f.chi(f.from_i64(4)), 1);
        assert_eq!(f.chi(f.zero()), 0);
        assert_eq!(f.chi(f.from_i64(2)), -1);
    }

    #[test]
    fn rejects_small_or_composite_characteristic() {
        assert_eq!(Fq::new(3, 1).unwrap_err(), Error::UnsupportedCharacteristic(3));
        assert_eq!(Fq::new(2, 4).unwrap_err(), Error::UnsupportedCharacteristic(2));
        assert_eq!(Fq::new(9, 1).unwrap_err(), Error::NotPrime(9));
        assert!(Fq::with_order(49).is_ok());
        assert!(Fq::with_order(15).is_err());
    }

    #[test]
    fn squares_mod_five_by_exhaustion() {
        let f = Fq::new(5, 1).unwrap();
        let squares: Vec<Fe> = f.elements().map(|x| f.mul(x, x)).collect();
        for x in f.elements() {
            let expect = if x.is_zero() {
                0
            } else if squares.contains(&x) {
                1
            } else {
                -1
            };
            assert_eq!(f.chi(x), expect);
        }
    }

    #[test]
    fn degree_one_tower_is_identity_extension() {
        let f = Fq::new(5, 1).unwrap();
        let t = build_tower(&f, 1);
        assert_eq!(t.modulus().coeffs(), &[f.zero(), f.one()]);
        assert_eq!(t.order(), Some(5));
    }

    #[test]
    fn quadratic_tower_over_f5() {
        let f = Fq::new(5, 1).unwrap();
        let t = build_tower(&f, 2);
        assert!(t.modulus().is_irreducible());
        assert_eq!(t.modulus().degree(), Some(2));
        // first irreducible in constant-fastest order: t^2 + 2
        assert_eq!(t.modulus().coeffs(), &[f.from_i64(2), f.zero(), f.one()]);
    }

    #[test]
    fn tower_is_deterministic() {
        let f = Fq::new(5, 1).unwrap();
        let a = build_tower(&f, 3);
        let g = Fq::new(5, 1).unwrap();
        let b = build_tower(&g, 3);
        assert_eq!(a.modulus().coeffs(), b.modulus().coeffs());
    }

    #[test]
    fn lagrange_in_extension() {
        let f = Fq::new(5, 1).unwrap();
        let t = f.tower(3);
        let e = BigUint::from(124u32);
        for i in 1..125u128 {
            let x = t.from_index(i);
            assert_eq!(t.pow(&x, &e), t.one());
        }
    }

    #[test]
    fn frobenius_fixes_base_and_has_order_n() {
        let f = Fq::new(7, 1).unwrap();
        let t = f.tower(3);
        for c in f.elements() {
            let x = t.embed(c);
            assert_eq!(t.frobenius(&x), x);
        }
        for x in t.elements().take(60) {
            let mut y = x.clone();
            for _ in 0..3 {
                y = t.frobenius(&y);
            }
            assert_eq!(y, x);
        }
    }

    #[test]
    fn frobenius_of_generator_is_other_root() {
        // roots of m_2 in F_25 by exhaustion
        let f = Fq::new(5, 1).unwrap();
        let t = f.tower(2);
        let m = t.modulus().clone();
        let roots: Vec<ExtElement> = t
            .elements()
            .filter(|x| m.eval_ext(&t, x).is_zero())
            .collect();
        assert_eq!(roots.len(), 2);
        let u = t.generator();
        assert!(roots.contains(&u));
        let fu = t.frobenius(&u);
        assert_ne!(fu, u);
        assert!(roots.contains(&fu));
    }

    #[test]
    fn non_prime_base_field() {
        let f = Fq::new(5, 2).unwrap();
        assert_eq!(f.q(), 25);
        for x in f.elements().skip(1) {
            assert_eq!(f.mul(x, f.inv(x).unwrap()), f.one());
            let s = f.mul(x, x);
            assert_eq!(f.chi(s), 1);
            let r = f.sqrt(s).unwrap();
            assert_eq!(f.mul(r, r), s);
        }
        let nonsquares = f.elements().filter(|&x| f.chi(x) == -1).count();
        assert_eq!(nonsquares, 12);
    }

    #[test]
    fn table_matches_generic_arithmetic() {
        let f = Fq::new(5, 1).unwrap();
        let t = f.tower(3);
        let tab = t.table().unwrap();
        for i in (0..125u32).step_by(7) {
            for j in (0..125u32).step_by(11) {
                let (x, y) = (t.from_index(i as u128), t.from_index(j as u128));
                assert_eq!(tab.add(i, j) as u128, t.index(&t.add(&x, &y)));
                assert_eq!(tab.mul(i, j) as u128, t.index(&t.mul(&x, &y)));
                assert_eq!(tab.sub(i, j) as u128, t.index(&t.sub(&x, &y)));
            }
            let x = t.from_index(i as u128);
            assert_eq!(tab.frobenius(i) as u128, t.index(&t.frobenius(&x)));
        }
    }

    #[test]
    fn cubic_sum_matches_brute_force() {
        let f = Fq::new(7, 1).unwrap();
        let t = f.tower(2);
        let tab = t.table().unwrap();
        for (alpha, beta) in [(0u32, 3u32), (5, 0), (12, 30), (48, 1), (0, 0)] {
            let mut brute = 0i64;
            for x in 0..tab.order() {
                let x3 = tab.mul(x, tab.mul(x, x));
                let v = tab.add(tab.add(x3, tab.mul(alpha, x)), beta);
                brute += tab.chi(v) as i64;
            }
            assert_eq!(tab.cubic_character_sum(alpha, beta), brute);
        }
    }

    #[test]
    fn group_order_search_matches_character_sum() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for (p, n) in [(5u64, 5usize), (7, 4), (13, 3), (5, 6)] {
            let t = Fq::new(p, 1).unwrap().tower(n);
            let tab = t.table().unwrap();
            let mut tried = 0;
            while tried < 25 {
                let alpha = rng.gen_range(0..tab.order());
                let beta = rng.gen_range(0..tab.order());
                let four_a3 = tab.mul(tab.embed(tab.base().from_i64(4)), tab.mul(alpha, tab.mul(alpha, alpha)));
                let b2 = tab.mul(tab.embed(tab.base().from_i64(27)), tab.mul(beta, beta));
                if tab.add(four_a3, b2) == 0 {
                    continue;
                }
                tried += 1;
                assert_eq!(
                    tab.frobenius_trace(alpha, beta),
                    -tab.cubic_character_sum(alpha, beta),
                    "p={p} n={n} alpha={alpha} beta={beta}"
                );
            }
        }
    }
}
