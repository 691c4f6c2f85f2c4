//! Versioned JSON report. Numbers are integers or `{"num", "den"}` pairs;
//! object keys are sorted, so equal inputs give byte-identical output.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use serde_json::{json, Value};

use crate::bsd::{IdentityCheck, MeasureTrace, ShaValue};
use crate::curve::Curve;
use crate::localred::{LocalData, LocalIdentityCheck};
use crate::pipeline::Analysis;

pub const SCHEMA: &str = "ffbsd-report";
pub const VERSION: u32 = 1;

/// An integer as a JSON number; decimal string past `i64`.
pub fn int(n: &BigInt) -> Value {
    match n.to_i64() {
        Some(v) => json!(v),
        None => json!(n.to_string()),
    }
}

pub fn rat(x: &BigRational) -> Value {
    json!({ "num": int(x.numer()), "den": int(x.denom()) })
}

fn sha_value(s: &ShaValue) -> Value {
    match s {
        ShaValue::Determined(v) => json!({ "value": rat(v) }),
        ShaValue::Undetermined(why) => json!({ "undetermined": why }),
    }
}

pub fn curve_json(curve: &Curve, name: Option<&str>, hash: &str) -> Value {
    let fq = curve.field();
    let idx = |p: &crate::funcfield::Poly| p.coeffs().iter().map(|c| c.index()).collect::<Vec<_>>();
    json!({
        "name": name,
        "q": fq.q(),
        "p": fq.p(),
        "e": fq.e(),
        "a": idx(curve.a()),
        "b": idx(curve.b()),
        "equation": curve.to_string(),
        "hash": hash,
    })
}

pub fn local_json(d: &LocalData) -> Value {
    let euler: Vec<Value> = d
        .euler_factor()
        .map(|f| f.iter().map(|&c| int(&BigInt::from(c))).collect())
        .unwrap_or_default();
    json!({
        "place": d.place.to_string(),
        "degree": d.degree(),
        "kodaira": d.kodaira.to_string(),
        "f_v": d.f_v,
        "c_v": d.c_v,
        "v_delta_min": d.v_delta_min,
        "v_omega": d.v_omega,
        "split": d.mult_split,
        "euler_factor": euler,
    })
}

pub fn local_identity_json(c: &LocalIdentityCheck) -> Value {
    json!({ "place": c.place.to_string(), "lhs": rat(&c.lhs), "rhs": rat(&c.rhs), "pass": c.pass })
}

fn identity_json(c: &IdentityCheck) -> Value {
    json!({ "name": c.name, "lhs": rat(&c.lhs), "rhs": rat(&c.rhs), "pass": c.pass })
}

fn measure_json(m: &MeasureTrace) -> Value {
    json!({
        "sigma": m.sigma.iter().map(|p| p.to_string()).collect::<Vec<_>>(),
        "identities": m.identities.iter().map(identity_json).collect::<Vec<_>>(),
        "normalized_volume": rat(&m.normalized_volume),
        "pass": m.pass(),
    })
}

/// The full report for a successful run.
pub fn analysis_json(an: &Analysis, name: Option<&str>, hash: &str) -> Value {
    let l = &an.l.series;
    let r = &an.report;
    let failures = an.failures();
    json!({
        "schema": SCHEMA,
        "version": VERSION,
        "status": if failures.is_empty() { "ok" } else { "cross-check-failure" },
        "curve": curve_json(&an.curve, name, hash),
        "checks": {
            "local_identity": an.local_identity_pass(),
            "dual_method_l": an.l.euler_coeffs == l.coeffs,
            "functional_equation": true,
            "riemann_roch": an.riemann_roch.pass,
            "measure_trace": an.measure_pass(),
            "formula_paths": r.paths_agree,
            "failures": failures,
        },
        "local": an.local.iter().map(local_json).collect::<Vec<_>>(),
        "local_identity": an.local_identity.iter().map(local_identity_json).collect::<Vec<_>>(),
        "conductor_degree": an.invariants.conductor_degree,
        "l_function": {
            "degree": l.degree,
            "coefficients": l.coeffs.iter().map(int).collect::<Vec<_>>(),
            "euler_product_coefficients": an.l.euler_coeffs.iter().map(int).collect::<Vec<_>>(),
            "trace_sums": an.l.traces.iter().map(|t| int(&BigInt::from(t.a_n))).collect::<Vec<_>>(),
            "epsilon": l.epsilon,
            "r_an": l.r_an,
            "leading_value": rat(&l.leading),
            "leading_value_units": "coefficient of (s-1)^r_an (log q)^r_an",
        },
        "invariants": {
            "deg_delta_min": an.invariants.deg_delta_min,
            "deg_omega": an.invariants.deg_omega,
            "chi_lie": an.invariants.chi_lie,
            "tamagawa": an.invariants.tamagawa,
        },
        "riemann_roch": {
            "bundle_degree": an.riemann_roch.bundle_degree,
            "h0": an.riemann_roch.h0,
            "h1": an.riemann_roch.h1,
            "euler_characteristic": an.riemann_roch.euler_characteristic,
            "expected": an.riemann_roch.expected,
            "pass": an.riemann_roch.pass,
        },
        "measure": {
            "base": measure_json(&an.measure),
            "enlarged": an.measure_enlarged.iter().map(measure_json).collect::<Vec<_>>(),
        },
        "bsd": {
            "normalization": r.normalization.name(),
            "torsion": {
                "order": r.torsion.order,
                "bound": r.torsion.bound,
                "searched": r.torsion.searched,
                "claimed": r.torsion.claimed,
            },
            "generators": r.pairing.basis.iter().map(|p| p.to_string()).collect::<Vec<_>>(),
            "height_pairing": r.pairing.entries.iter()
                .map(|row| row.iter().map(rat).collect::<Vec<_>>())
                .collect::<Vec<_>>(),
            "height_denominator": r.n0,
            "pairing_determinant": rat(&r.pairing_determinant),
            "regulator": rat(&r.regulator),
            "r_alg": r.r_alg,
            "sha_analytic": sha_value(&r.sha_analytic),
            "sha_weil_etale": sha_value(&r.sha_weil_etale),
            "chi_weil_etale": r.chi_weil_etale.as_ref().map(rat),
            "paths_agree": r.paths_agree,
            "known_sha_check": r.known_sha_check,
            "identity_components": r.identity_components,
            "component_index": r.component_index,
            "flags": {
                "rank_match": r.flags.rank_match,
                "sha_integral": r.flags.sha_integral,
                "sha_square": r.flags.sha_square,
                "torsion_consistent": r.flags.torsion_consistent,
                "index_caveat": r.flags.index_caveat,
            },
        },
    })
}

/// Report for a run aborted by an error.
pub fn error_json(status: &str, message: &str) -> Value {
    json!({ "schema": SCHEMA, "version": VERSION, "status": status, "error": message })
}

/// Pretty JSON with a trailing newline.
pub fn render(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values serialize");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_no_floats(v: &Value) {
        match v {
            Value::Number(n) => assert!(n.is_i64() || n.is_u64(), "{n}"),
            Value::Array(a) => a.iter().for_each(assert_no_floats),
            Value::Object(o) => o.values().for_each(assert_no_floats),
            _ => {}
        }
    }

    #[test]
    fn rationals_are_pairs() {
        let x = BigRational::new(BigInt::from(-3), BigInt::from(6));
        assert_eq!(rat(&x), json!({"num": -1, "den": 2}));
        let big = BigInt::from(10).pow(30);
        assert_eq!(int(&big), json!("1000000000000000000000000000000"));
        assert_no_floats(&rat(&x));
    }

    #[test]
    fn e1_report_has_no_floats() {
        let f = crate::ff::Fq::new(5, 1).unwrap();
        let p = |c: &[i64]| crate::funcfield::Poly::from_i64s(&f, c);
        let curve = Curve::new(p(&[1]), p(&[0, 1])).unwrap();
        let an = crate::pipeline::analyze(
            &curve,
            &Default::default(),
            &Default::default(),
            &mut crate::pipeline::Direct(crate::par::Exec::Sequential),
        )
        .unwrap();
        let v = analysis_json(&an, Some("E1"), "h");
        assert_no_floats(&v);
        assert_eq!(v["l_function"]["degree"], json!(0));
        assert_eq!(v["status"], json!("ok"));
    }
}
