//! Assembly of the special-value formula at `s = 1`.
//!
//! Everything here is exact: measures are powers of `q` times rationals and
//! `log q` only appears as a symbolic normalization of the leading term.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::curve::{
    good_places, height_pairing, torsion_bound, Curve, HeightConfig, HeightPairingMatrix, KPoint,
    MWInput,
};
use crate::error::{Error, Result};
use crate::funcfield::{valuation, Place, Poly, RationalFunction};
use crate::localred::{eval_at_inverse, LocalData};
use crate::lseries::LSeries;

/// Global invariants read off the local data.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GlobalInvariants {
    /// `sum_v deg(v) v(Delta_min)`.
    pub deg_delta_min: i64,
    /// `deg(omega) = sum_v deg(v) v(omega)`.
    pub deg_omega: i64,
    /// `chi(S, Lie A) = 1 - deg(omega)` on `P^1`.
    pub chi_lie: i64,
    /// `c(A) = prod_v c_v`.
    pub tamagawa: u64,
    pub conductor_degree: u64,
}

pub fn global_invariants(local: &[LocalData]) -> Result<GlobalInvariants> {
    let deg_delta_min: i64 = local
        .iter()
        .map(|d| d.degree() as i64 * d.v_delta_min as i64)
        .sum();
    if deg_delta_min % 12 != 0 {
        return Err(Error::Internal(format!(
            "deg(Delta_min) = {deg_delta_min} is not divisible by 12"
        )));
    }
    let deg_omega: i64 = local.iter().map(|d| d.degree() as i64 * d.v_omega).sum();
    if deg_omega * 12 != deg_delta_min {
        return Err(Error::Internal(format!(
            "sum of v(omega) is {deg_omega}, expected deg(Delta_min)/12 = {}",
            deg_delta_min / 12
        )));
    }
    let tamagawa = local.iter().map(|d| d.c_v).product();
    let conductor_degree = local.iter().map(|d| d.f_v as u64 * d.degree() as u64).sum();
    Ok(GlobalInvariants {
        deg_delta_min,
        deg_omega,
        chi_lie: 1 - deg_omega,
        tamagawa,
        conductor_degree,
    })
}

/// Cohomology of `Lie(A) = O(-deg omega)` on `P^1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RiemannRoch {
    pub bundle_degree: i64,
    pub h0: i64,
    pub h1: i64,
    pub euler_characteristic: i64,
    pub expected: i64,
    pub pass: bool,
}

/// `h^0(O(n)) = max(0, n+1)`, `h^1(O(n)) = max(0, -n-1)`.
pub fn line_bundle_cohomology(n: i64) -> (i64, i64) {
    ((n + 1).max(0), (-n - 1).max(0))
}

pub fn riemann_roch_check(inv: &GlobalInvariants) -> RiemannRoch {
    let n = -inv.deg_omega;
    let (h0, h1) = line_bundle_cohomology(n);
    // d * chi(S, O_S) + deg(det Lie) with d = 1, g = 0
    let expected = 1 + n;
    RiemannRoch {
        bundle_degree: n,
        h0,
        h1,
        euler_characteristic: h0 - h1,
        expected,
        pass: h0 - h1 == expected && expected == inv.chi_lie,
    }
}

/// `q^k` as an exact rational.
pub fn q_power(q: u64, k: i64) -> BigRational {
    let base = BigInt::from(q).pow(k.unsigned_abs() as u32);
    if k >= 0 {
        BigRational::from_integer(base)
    } else {
        BigRational::new(BigInt::one(), base)
    }
}

/// One exact identity with both sides.
#[derive(Clone, Debug, PartialEq)]
pub struct IdentityCheck {
    pub name: String,
    pub lhs: BigRational,
    pub rhs: BigRational,
    pub pass: bool,
}

impl IdentityCheck {
    fn new(name: impl Into<String>, lhs: BigRational, rhs: BigRational) -> Self {
        let pass = lhs == rhs;
        IdentityCheck {
            name: name.into(),
            lhs,
            rhs,
            pass,
        }
    }
}

/// The chain of measure identities over a finite set `Sigma` of places.
#[derive(Clone, Debug)]
pub struct MeasureTrace {
    pub sigma: Vec<Place>,
    pub identities: Vec<IdentityCheck>,
    /// `vol(prod_{v in Sigma} A(K_v)) / prod_{v in Sigma} P_v(1/N(v))`; equals
    /// `c(A) q^chi` whatever `Sigma` is.
    pub normalized_volume: BigRational,
}

impl MeasureTrace {
    pub fn pass(&self) -> bool {
        self.identities.iter().all(|i| i.pass)
    }
}

/// Checks the local measure identities, the Lie-algebra volumes, the
/// Riemann–Roch instance and the global volume formula over
/// `Sigma = special places + extra`. `extra` should be good places.
pub fn measure_identity_trace(
    q: u64,
    inv: &GlobalInvariants,
    special: &[LocalData],
    extra: &[LocalData],
) -> Result<MeasureTrace> {
    let sigma: Vec<&LocalData> = special.iter().chain(extra).collect();
    let mut identities = Vec::new();
    let mut vol_local = BigRational::one();
    let mut euler_product = BigRational::one();
    let mut lie_volume = BigRational::one();
    let mut tamagawa = 1u64;
    for d in &sigma {
        let n = d.norm();
        let n_omega = q_power(q, -(d.degree() as i64) * d.v_omega);
        let c = BigRational::from_integer(d.c_v.into());
        let count = BigRational::new(BigInt::from(d.count_points(1)?), BigInt::from(n));
        let p_at = eval_at_inverse(&d.euler_factor()?, n);
        let lhs = &c * &n_omega * count;
        let rhs = &c * &n_omega * &p_at;
        identities.push(IdentityCheck::new(
            format!("local measure at {}", d.place),
            lhs.clone(),
            rhs,
        ));
        vol_local *= lhs;
        euler_product *= p_at;
        lie_volume *= n_omega;
        tamagawa *= d.c_v;
    }
    identities.push(IdentityCheck::new(
        "volume of Lie(O_A)",
        lie_volume.clone(),
        q_power(q, -inv.deg_omega),
    ));
    let (h0, h1) = line_bundle_cohomology(-inv.deg_omega);
    let quotient = &lie_volume * q_power(q, h1 - h0);
    identities.push(IdentityCheck::new(
        "volume of Lie(A)/Lie(K)",
        quotient.clone(),
        q_power(q, -inv.deg_omega - inv.chi_lie),
    ));
    identities.push(IdentityCheck::new(
        "Riemann-Roch volume q^(-chi(O_S))",
        q_power(q, -inv.deg_omega - inv.chi_lie),
        q_power(q, -1),
    ));
    identities.push(IdentityCheck::new(
        "Tamagawa factor over Sigma",
        BigRational::from_integer(tamagawa.into()),
        BigRational::from_integer(inv.tamagawa.into()),
    ));
    let volume = &vol_local / &quotient;
    let rhs = BigRational::from_integer(inv.tamagawa.into()) * q_power(q, inv.chi_lie) * &euler_product;
    identities.push(IdentityCheck::new("global volume", volume.clone(), rhs));
    Ok(MeasureTrace {
        sigma: sigma.iter().map(|d| d.place.clone()).collect(),
        identities,
        normalized_volume: volume / euler_product,
    })
}

/// Which determinant of the height pairing plays the role of the regulator.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq)]
pub enum HeightNormalization {
    /// `R = det <,>`.
    #[default]
    A,
    /// `R = 2^r det <,>`.
    B,
}

impl HeightNormalization {
    pub fn scale(self, rank: usize) -> BigRational {
        match self {
            HeightNormalization::A => BigRational::one(),
            HeightNormalization::B => BigRational::from_integer(BigInt::from(2).pow(rank as u32)),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            HeightNormalization::A => "A",
            HeightNormalization::B => "B",
        }
    }
}

#[derive(Clone, Debug)]
pub struct BsdOptions {
    pub normalization: HeightNormalization,
    pub known_sha: Option<u64>,
    /// Largest integral-point search space used for the torsion subgroup.
    pub torsion_search_limit: u128,
    /// Number of good places feeding the torsion bound.
    pub torsion_places: usize,
}

impl Default for BsdOptions {
    fn default() -> Self {
        BsdOptions {
            normalization: HeightNormalization::A,
            known_sha: None,
            torsion_search_limit: 2_000_000,
            torsion_places: 12,
        }
    }
}

#[derive(Clone, Debug)]
pub struct TorsionData {
    pub order: u64,
    pub bound: u64,
    /// Whether `order` comes from an exhaustive search.
    pub searched: bool,
    pub claimed: Option<u64>,
    pub points: Vec<KPoint>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ShaValue {
    Determined(BigRational),
    Undetermined(String),
}

impl ShaValue {
    pub fn value(&self) -> Option<&BigRational> {
        match self {
            ShaValue::Determined(v) => Some(v),
            ShaValue::Undetermined(_) => None,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct BsdFlags {
    pub rank_match: bool,
    pub sha_integral: bool,
    pub sha_square: bool,
    pub torsion_consistent: bool,
    pub index_caveat: bool,
}

#[derive(Clone, Debug)]
pub struct BsdReport {
    pub lseries: LSeries,
    pub invariants: GlobalInvariants,
    pub torsion: TorsionData,
    pub pairing: HeightPairingMatrix,
    pub n0: u64,
    pub normalization: HeightNormalization,
    /// `det <,>` before normalization.
    pub pairing_determinant: BigRational,
    pub regulator: BigRational,
    pub r_alg: usize,
    pub sha_analytic: ShaValue,
    /// The same quantity solved from the Weil-étale Euler characteristic.
    pub sha_weil_etale: ShaValue,
    /// `chi(H_W(S, A), e)`.
    pub chi_weil_etale: Option<BigRational>,
    pub paths_agree: bool,
    pub known_sha_check: Option<bool>,
    /// Whether every generator reduces into the identity component at every
    /// bad place; `None` without generators.
    pub identity_components: Option<bool>,
    /// `[B(K) : B^0(S)]` when it can be determined.
    pub component_index: Option<u64>,
    pub flags: BsdFlags,
}

fn is_square_rational(x: &BigRational) -> bool {
    if !x.is_integer() || x.is_negative() {
        return false;
    }
    let n = x.to_integer();
    let r = n.sqrt();
    &r * &r == n
}

fn torsion_data(curve: &Curve, mw: &MWInput, opts: &BsdOptions) -> Result<TorsionData> {
    let places = good_places(curve, opts.torsion_places)?;
    let bound = torsion_bound(curve, &places)?;
    let claimed_group = if mw.torsion_points.is_empty() {
        None
    } else {
        let group = curve
            .generated_subgroup(&mw.torsion_points, bound as usize)
            .ok_or_else(|| Error::Invalid("torsion points generate a group above the bound".into()))?;
        Some(group)
    };
    if let (Some(group), Some(claim)) = (&claimed_group, mw.claimed_torsion_order) {
        if group.len() as u64 != claim {
            return Err(Error::Invalid(format!(
                "torsion points generate a group of order {}, claimed {claim}",
                group.len()
            )));
        }
    }
    let claimed = mw
        .claimed_torsion_order
        .or(claimed_group.as_ref().map(|g| g.len() as u64));
    match curve.torsion_subgroup(bound, opts.torsion_search_limit) {
        Some(points) => Ok(TorsionData {
            order: points.len() as u64,
            bound,
            searched: true,
            claimed,
            points,
        }),
        None => Ok(TorsionData {
            order: claimed.unwrap_or(1),
            bound,
            searched: false,
            claimed,
            points: claimed_group.unwrap_or_else(|| vec![KPoint::Identity]),
        }),
    }
}

/// `u^m f(1/u)` as a rational function of `u`.
fn chart_at_infinity(f: &RationalFunction, m: i64) -> RationalFunction {
    let field = f.field();
    let (num, den) = (f.num(), f.den());
    let dn = num.deg().max(0);
    let dd = den.deg().max(0);
    let mut nr = num.reversed(dn as usize);
    let mut dr = den.reversed(dd as usize);
    let e = m + dd - dn;
    let u = Poly::t(field);
    if e >= 0 {
        nr = nr.mul(&u.pow(e as u64));
    } else {
        dr = dr.mul(&u.pow((-e) as u64));
    }
    RationalFunction::new(nr, dr).expect("nonzero denominator")
}

/// Whether `p` reduces to a smooth point of the minimal model at `d`.
fn on_identity_component(curve: &Curve, d: &LocalData, p: &KPoint) -> Result<bool> {
    let KPoint::Affine { x, y } = p else { return Ok(true) };
    if d.kodaira.is_good() {
        return Ok(true);
    }
    let pi = &d.uniformizer;
    let (xc, yc) = match d.place {
        Place::Finite(_) => (x.clone(), y.clone()),
        Place::Infinity => {
            let w = curve.weight() as i64;
            (chart_at_infinity(x, 2 * w), chart_at_infinity(y, 3 * w))
        }
    };
    let k = d.scaling;
    let scale = RationalFunction::from_poly(pi.pow(k as u64));
    let xm = xc.div(&scale.square())?;
    let ym = yc.div(&scale.square().mul(&scale))?;
    let chart_place = Place::Finite(pi.clone());
    if xm.is_zero() || valuation(&xm, &chart_place)? >= 0 {
        let a = RationalFunction::from_poly(d.min_a.clone());
        let slope = xm.square().scale(curve.field().from_i64(3)).add(&a);
        let vy = if ym.is_zero() { i64::MAX } else { valuation(&ym, &chart_place)? };
        let vs = if slope.is_zero() { i64::MAX } else { valuation(&slope, &chart_place)? };
        return Ok(!(vy > 0 && vs > 0));
    }
    Ok(true)
}

/// Solves the special-value formula for the order of Sha, by the
/// leading-term formula and separately through the Weil-étale Euler
/// characteristic.
pub fn assemble_report(
    curve: &Curve,
    local: &[LocalData],
    lseries: &LSeries,
    inv: &GlobalInvariants,
    mw: &MWInput,
    opts: &BsdOptions,
) -> Result<BsdReport> {
    for p in mw.generators.iter().chain(&mw.torsion_points) {
        if !curve.contains(p) {
            return Err(Error::PointNotOnCurve);
        }
    }
    let q = lseries.q;
    let torsion = torsion_data(curve, mw, opts)?;
    let cfg = HeightConfig::from_tamagawa(inv.tamagawa);
    let pairing = height_pairing(curve, &mw.generators, &cfg)?;
    let det = pairing.determinant();
    if det.is_zero() {
        return Err(Error::DependentGenerators);
    }
    let r_alg = pairing.rank();
    let regulator = &det * opts.normalization.scale(r_alg);
    let tau2 = BigRational::from_integer(BigInt::from(torsion.order).pow(2));
    let c = BigRational::from_integer(inv.tamagawa.into());
    let m = lseries.leading.clone();

    let rank_match = r_alg == lseries.r_an;
    let (sha_analytic, sha_weil_etale, chi) = if !rank_match {
        let why = if r_alg == 0 {
            "undetermined (regulator unknown)".to_string()
        } else {
            format!("undetermined (rank mismatch: {} generators, r_an = {})", r_alg, lseries.r_an)
        };
        (ShaValue::Undetermined(why.clone()), ShaValue::Undetermined(why), None)
    } else {
        // leading-term formula: M(1/q) = Sha R c q^chi / tau^2
        let sha = &m * &tau2 / (&regulator * &c * q_power(q, inv.chi_lie));
        // Weil-étale: chi(H_W, e)^(-1) = M(1/q) q^(-chi_lie), Sha = chi^(-1) tau^2 / (R c)
        let chi_inv = &m * q_power(q, -inv.chi_lie);
        let sha_we = &chi_inv * &tau2 / (&regulator * &c);
        let chi = if chi_inv.is_zero() {
            None
        } else {
            Some(chi_inv.recip())
        };
        (ShaValue::Determined(sha), ShaValue::Determined(sha_we), chi)
    };
    let paths_agree = match (&sha_analytic, &sha_weil_etale) {
        (ShaValue::Determined(a), ShaValue::Determined(b)) => {
            let chi_ok = chi.as_ref().is_some_and(|x| *x == &tau2 / (a * &regulator * &c));
            a == b && chi_ok
        }
        (ShaValue::Undetermined(_), ShaValue::Undetermined(_)) => true,
        _ => false,
    };
    let known_sha_check = opts.known_sha.filter(|_| rank_match).map(|s| {
        let lhs = &m * q_power(q, -inv.chi_lie);
        let rhs = BigRational::from_integer(s.into()) * &regulator * &c / &tau2;
        lhs == rhs
    });
    let identity_components = if mw.generators.is_empty() {
        None
    } else {
        let mut all = true;
        for d in local {
            for p in &mw.generators {
                all &= on_identity_component(curve, d, p)?;
            }
        }
        Some(all)
    };
    let component_index = (r_alg == 0 && torsion.order == 1 && torsion.searched).then_some(1);
    let sha_value = sha_analytic.value();
    let flags = BsdFlags {
        rank_match,
        sha_integral: sha_value.is_some_and(|s| s.is_integer()),
        sha_square: sha_value.is_some_and(is_square_rational),
        torsion_consistent: torsion.bound % torsion.order == 0
            && torsion.claimed.is_none_or(|c| c == torsion.order || !torsion.searched),
        index_caveat: !mw.generators.is_empty(),
    };
    Ok(BsdReport {
        lseries: lseries.clone(),
        invariants: inv.clone(),
        torsion,
        pairing,
        n0: cfg.n0,
        normalization: opts.normalization,
        pairing_determinant: det,
        regulator,
        r_alg,
        sha_analytic,
        sha_weil_etale,
        chi_weil_etale: chi,
        paths_agree,
        known_sha_check,
        identity_components,
        component_index,
        flags,
    })
}

/// `chi(H_W(S, A), e)^(-1) = Sha R c(A) / tau^2`.
pub fn chi_weil_etale_inverse(sha: &BigRational, regulator: &BigRational, tamagawa: u64, torsion: u64) -> BigRational {
    let tau2 = BigRational::from_integer(BigInt::from(torsion).pow(2));
    sha * regulator * BigRational::from_integer(tamagawa.into()) / tau2
}
