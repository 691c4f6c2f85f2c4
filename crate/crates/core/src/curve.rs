//! Elliptic curves `y^2 = x^3 + a x + b` over `K = F_q(t)`, the group law on
//! `A(K)`, and degree-normalized canonical heights.

use std::collections::HashSet;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::ff::Fq;
use crate::funcfield::{enumerate_places, Place, Poly, RationalFunction};
use crate::localred::local_data;

/// Short Weierstrass model with polynomial coefficients.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Curve {
    a: Poly,
    b: Poly,
}

impl fmt::Debug for Curve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "y^2 = x^3 + ({})x + ({}) over {:?}(t)", self.a, self.b, self.field())
    }
}

impl fmt::Display for Curve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "y^2 = x^3 + ({})*x + ({}) over F_{}(t)", self.a, self.b, self.field().q())
    }
}

/// `4a^3 + 27b^2`, the discriminant up to the unit `-16`.
pub fn reduced_discriminant(a: &Poly, b: &Poly) -> Poly {
    let f = a.field();
    let a3 = a.mul(a).mul(a).scale(f.from_i64(4));
    let b2 = b.mul(b).scale(f.from_i64(27));
    a3.add(&b2)
}

impl Curve {
    pub fn new(a: Poly, b: Poly) -> Result<Curve> {
        if reduced_discriminant(&a, &b).is_zero() {
            return Err(Error::SingularCurve);
        }
        Ok(Curve { a, b })
    }

    pub fn field(&self) -> &Fq {
        self.a.field()
    }

    pub fn a(&self) -> &Poly {
        &self.a
    }

    pub fn b(&self) -> &Poly {
        &self.b
    }

    pub fn c4(&self) -> Poly {
        self.a.scale(self.field().from_i64(-48))
    }

    pub fn c6(&self) -> Poly {
        self.b.scale(self.field().from_i64(-864))
    }

    /// `Delta = -16 (4a^3 + 27b^2)`.
    pub fn discriminant(&self) -> Poly {
        reduced_discriminant(&self.a, &self.b).scale(self.field().from_i64(-16))
    }

    /// True when `j = 1728 * 4a^3 / (4a^3 + 27 b^2)` is constant.
    pub fn is_isotrivial(&self) -> bool {
        if self.a.is_zero() || self.b.is_zero() {
            return true;
        }
        let a3 = self.a.mul(&self.a).mul(&self.a);
        let b2 = self.b.mul(&self.b);
        a3.scale(b2.lc()) == b2.scale(a3.lc())
    }

    /// Smallest `w` with `deg a <= 4w` and `deg b <= 6w`: the chart weight at
    /// infinity.
    pub fn weight(&self) -> usize {
        let da = self.a.deg().max(0) as usize;
        let db = self.b.deg().max(0) as usize;
        da.div_ceil(4).max(db.div_ceil(6))
    }

    fn rhs(&self, x: &RationalFunction) -> RationalFunction {
        let a = RationalFunction::from_poly(self.a.clone());
        let b = RationalFunction::from_poly(self.b.clone());
        x.square().mul(x).add(&a.mul(x)).add(&b)
    }

    pub fn contains(&self, p: &KPoint) -> bool {
        match p {
            KPoint::Identity => true,
            KPoint::Affine { x, y } => y.square() == self.rhs(x),
        }
    }

    pub fn point(&self, x: RationalFunction, y: RationalFunction) -> Result<KPoint> {
        let p = KPoint::Affine { x, y };
        if !self.contains(&p) {
            return Err(Error::PointNotOnCurve);
        }
        Ok(p)
    }

    pub fn neg(&self, p: &KPoint) -> KPoint {
        match p {
            KPoint::Identity => KPoint::Identity,
            KPoint::Affine { x, y } => KPoint::Affine {
                x: x.clone(),
                y: y.neg(),
            },
        }
    }

    pub fn double(&self, p: &KPoint) -> KPoint {
        let (x, y) = match p {
            KPoint::Identity => return KPoint::Identity,
            KPoint::Affine { x, y } => (x, y),
        };
        if y.is_zero() {
            return KPoint::Identity;
        }
        let f = self.field();
        let a = RationalFunction::from_poly(self.a.clone());
        let num = x.square().scale(f.from_i64(3)).add(&a);
        let den = y.scale(f.from_i64(2));
        let lambda = num.div(&den).expect("y nonzero");
        let x3 = lambda.square().sub(&x.scale(f.from_i64(2)));
        let y3 = lambda.mul(&x.sub(&x3)).sub(y);
        KPoint::Affine { x: x3, y: y3 }
    }

    pub fn add(&self, p: &KPoint, q: &KPoint) -> KPoint {
        let ((x1, y1), (x2, y2)) = match (p, q) {
            (KPoint::Identity, _) => return q.clone(),
            (_, KPoint::Identity) => return p.clone(),
            (KPoint::Affine { x: x1, y: y1 }, KPoint::Affine { x: x2, y: y2 }) => {
                ((x1, y1), (x2, y2))
            }
        };
        if x1 == x2 {
            if *y1 == y2.neg() {
                return KPoint::Identity;
            }
            return self.double(p);
        }
        let lambda = y2.sub(y1).div(&x2.sub(x1)).expect("distinct x");
        let x3 = lambda.square().sub(x1).sub(x2);
        let y3 = lambda.mul(&x1.sub(&x3)).sub(y1);
        KPoint::Affine { x: x3, y: y3 }
    }

    pub fn sub(&self, p: &KPoint, q: &KPoint) -> KPoint {
        self.add(p, &self.neg(q))
    }

    /// `[n]P` by double-and-add.
    pub fn mul(&self, n: i64, p: &KPoint) -> KPoint {
        let base = if n < 0 { self.neg(p) } else { p.clone() };
        let mut k = n.unsigned_abs();
        let mut acc = KPoint::Identity;
        let mut pow = base;
        while k > 0 {
            if k & 1 == 1 {
                acc = self.add(&acc, &pow);
            }
            k >>= 1;
            if k > 0 {
                pow = self.double(&pow);
            }
        }
        acc
    }

    /// Order of `p` if it divides `bound`.
    pub fn order_dividing(&self, p: &KPoint, bound: u64) -> Option<u64> {
        let mut acc = p.clone();
        for n in 1..=bound {
            if acc.is_identity() {
                return bound.is_multiple_of(n).then_some(n);
            }
            acc = self.add(&acc, p);
        }
        None
    }

    /// Subgroup generated by `points`, provided its order stays `<= cap`.
    #[allow(clippy::mutable_key_type)]
    pub fn generated_subgroup(&self, points: &[KPoint], cap: usize) -> Option<Vec<KPoint>> {
        let mut group: Vec<KPoint> = vec![KPoint::Identity];
        let mut seen: HashSet<KPoint> = group.iter().cloned().collect();
        let mut frontier = group.clone();
        while let Some(cur) = frontier.pop() {
            for g in points {
                let next = self.add(&cur, g);
                if seen.insert(next.clone()) {
                    if seen.len() > cap {
                        return None;
                    }
                    group.push(next.clone());
                    frontier.push(next);
                }
            }
        }
        group.sort();
        Some(group)
    }

    /// Points with polynomial `x` of degree `<= 2 * weight`, found by
    /// exhaustion. `None` when the search space exceeds `limit` candidates.
    pub fn integral_points(&self, limit: u128) -> Option<Vec<KPoint>> {
        let f = self.field();
        let max_deg = 2 * self.weight();
        let q = f.q() as u128;
        let total = q.checked_pow(max_deg as u32 + 1)?;
        if total > limit {
            return None;
        }
        let mut out = Vec::new();
        for idx in 0..total {
            let mut v = idx;
            let coeffs = (0..=max_deg)
                .map(|_| {
                    let c = f.element((v % q) as u32).expect("digit below q");
                    v /= q;
                    c
                })
                .collect();
            let x = Poly::new(f, coeffs);
            let rhs = x.mul(&x).mul(&x).add(&self.a.mul(&x)).add(&self.b);
            if let Some(y) = rhs.sqrt() {
                let xr = RationalFunction::from_poly(x.clone());
                let yr = RationalFunction::from_poly(y.clone());
                out.push(KPoint::Affine {
                    x: xr.clone(),
                    y: yr.clone(),
                });
                if !y.is_zero() {
                    out.push(KPoint::Affine { x: xr, y: yr.neg() });
                }
            }
        }
        Some(out)
    }

    /// The torsion subgroup, found among integral points whose order divides
    /// `bound`. Torsion sections do not meet the zero section on an integral
    /// model, so they all appear in [`Curve::integral_points`].
    pub fn torsion_subgroup(&self, bound: u64, limit: u128) -> Option<Vec<KPoint>> {
        let mut pts: Vec<KPoint> = self
            .integral_points(limit)?
            .into_iter()
            .filter(|p| self.order_dividing(p, bound).is_some())
            .collect();
        pts.push(KPoint::Identity);
        pts.sort();
        pts.dedup();
        Some(pts)
    }
}

/// A `K`-rational point.
#[derive(Clone, PartialEq, Eq, Hash)]
pub enum KPoint {
    Identity,
    Affine {
        x: RationalFunction,
        y: RationalFunction,
    },
}

impl KPoint {
    pub fn is_identity(&self) -> bool {
        matches!(self, KPoint::Identity)
    }

    pub fn x(&self) -> Option<&RationalFunction> {
        match self {
            KPoint::Identity => None,
            KPoint::Affine { x, .. } => Some(x),
        }
    }

    pub fn y(&self) -> Option<&RationalFunction> {
        match self {
            KPoint::Identity => None,
            KPoint::Affine { y, .. } => Some(y),
        }
    }
}

impl Ord for KPoint {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        use std::cmp::Ordering;
        match (self, other) {
            (KPoint::Identity, KPoint::Identity) => Ordering::Equal,
            (KPoint::Identity, _) => Ordering::Less,
            (_, KPoint::Identity) => Ordering::Greater,
            (KPoint::Affine { x: x1, y: y1 }, KPoint::Affine { x: x2, y: y2 }) => (x1.num(), x1.den(), y1.num(), y1.den())
                .cmp(&(x2.num(), x2.den(), y2.num(), y2.den())),
        }
    }
}

impl PartialOrd for KPoint {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for KPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KPoint::Identity => write!(f, "O"),
            KPoint::Affine { x, y } => write!(f, "({x}, {y})"),
        }
    }
}

impl fmt::Debug for KPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// User-supplied Mordell–Weil data.
#[derive(Clone, Debug, Default)]
pub struct MWInput {
    pub generators: Vec<KPoint>,
    pub torsion_points: Vec<KPoint>,
    pub claimed_torsion_order: Option<u64>,
}

/// Degree of `x(P)` as a map to `P^1`; 0 for the identity.
pub fn naive_height(p: &KPoint) -> u64 {
    p.x().map_or(0, |x| x.height())
}

/// Rounding and iteration parameters for canonical heights.
#[derive(Clone, Debug)]
pub struct HeightConfig {
    /// Heights are rounded to the nearest multiple of `1/n0`.
    pub n0: u64,
    pub max_doublings: u32,
}

impl HeightConfig {
    /// `N0 = 2 * c(A)^2`.
    pub fn from_tamagawa(c: u64) -> HeightConfig {
        HeightConfig {
            n0: 2 * c * c,
            max_doublings: 12,
        }
    }
}

fn round_to(x: &BigRational, n0: &BigInt) -> BigRational {
    let scaled = x * BigRational::from_integer(n0.clone());
    BigRational::new(scaled.round().to_integer(), n0.clone())
}

/// `lim 4^-n h(2^n P)`, rounded to `1/N0` once consecutive estimates agree to
/// within `1/(3 N0)`.
pub fn canonical_height(curve: &Curve, p: &KPoint, cfg: &HeightConfig) -> Result<BigRational> {
    if p.is_identity() {
        return Ok(BigRational::zero());
    }
    let n0 = BigInt::from(cfg.n0);
    let tol = BigRational::new(BigInt::one(), BigInt::from(3u64 * cfg.n0));
    let mut current = p.clone();
    let mut prev = BigRational::from_integer(naive_height(p).into());
    let mut scale = BigInt::one();
    for k in 1..=cfg.max_doublings {
        current = curve.double(&current);
        if current.is_identity() {
            return Ok(BigRational::zero());
        }
        scale *= 4;
        let est = BigRational::new(naive_height(&current).into(), scale.clone());
        if k >= 2 && (&est - &prev).abs() < tol {
            let rounded = round_to(&est, &n0);
            if (&est - &rounded).abs() < tol {
                return Ok(rounded);
            }
        }
        prev = est;
    }
    Err(Error::HeightDidNotStabilize(cfg.max_doublings))
}

/// Gram matrix of the height pairing `<P,Q> = (h(P+Q) - h(P) - h(Q)) / 2`.
#[derive(Clone, Debug)]
pub struct HeightPairingMatrix {
    pub entries: Vec<Vec<BigRational>>,
    pub basis: Vec<KPoint>,
}

impl HeightPairingMatrix {
    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    /// Exact determinant; 1 for the empty basis.
    pub fn determinant(&self) -> BigRational {
        determinant(&self.entries)
    }

    pub fn is_dependent(&self) -> bool {
        self.determinant().is_zero()
    }

    /// All leading principal minors positive.
    pub fn is_positive_definite(&self) -> bool {
        (1..=self.rank()).all(|k| {
            let minor: Vec<Vec<BigRational>> = self.entries[..k]
                .iter()
                .map(|row| row[..k].to_vec())
                .collect();
            determinant(&minor).is_positive()
        })
    }
}

pub fn determinant(m: &[Vec<BigRational>]) -> BigRational {
    let n = m.len();
    let mut a: Vec<Vec<BigRational>> = m.to_vec();
    let mut det = BigRational::one();
    for col in 0..n {
        let Some(pivot) = (col..n).find(|&r| !a[r][col].is_zero()) else {
            return BigRational::zero();
        };
        if pivot != col {
            a.swap(pivot, col);
            det = -det;
        }
        let pv = a[col][col].clone();
        det *= &pv;
        for r in (col + 1)..n {
            if a[r][col].is_zero() {
                continue;
            }
            let factor = &a[r][col] / &pv;
            #[allow(clippy::needless_range_loop)]
            for c in col..n {
                let delta = &factor * &a[col][c];
                a[r][c] -= delta;
            }
        }
    }
    det
}

pub fn height_pairing(
    curve: &Curve,
    generators: &[KPoint],
    cfg: &HeightConfig,
) -> Result<HeightPairingMatrix> {
    let heights: Vec<BigRational> = generators
        .iter()
        .map(|p| canonical_height(curve, p, cfg))
        .collect::<Result<_>>()?;
    let n = generators.len();
    let mut entries = vec![vec![BigRational::zero(); n]; n];
    for i in 0..n {
        entries[i][i] = heights[i].clone();
        for j in (i + 1)..n {
            let sum = curve.add(&generators[i], &generators[j]);
            let hs = canonical_height(curve, &sum, cfg)?;
            let b = (hs - &heights[i] - &heights[j]) / BigRational::from_integer(2.into());
            entries[i][j] = b.clone();
            entries[j][i] = b;
        }
    }
    Ok(HeightPairingMatrix {
        entries,
        basis: generators.to_vec(),
    })
}

/// `gcd #E(k(v))` over the given places of good reduction; the order of
/// `A(K)_tor` divides it.
pub fn torsion_bound(curve: &Curve, places: &[Place]) -> Result<u64> {
    if places.len() < 2 {
        return Err(Error::Invalid("torsion bound needs two good places".into()));
    }
    let mut g = 0u64;
    for v in places {
        let data = local_data(curve, v)?;
        if !data.kodaira.is_good() {
            return Err(Error::BadPlace(v.to_string()));
        }
        let count = u64::try_from(data.count_points(1)?)
            .map_err(|_| Error::FieldTooLarge(data.norm()))?;
        g = g.gcd(&count);
    }
    Ok(g)
}

/// Good places of degree at most 2, up to `limit` of them.
pub fn good_places(curve: &Curve, limit: usize) -> Result<Vec<Place>> {
    let mut out = Vec::new();
    for v in enumerate_places(curve.field(), 2) {
        if out.len() == limit {
            break;
        }
        if local_data(curve, &v)?.kodaira.is_good() {
            out.push(v);
        }
    }
    Ok(out)
}
