//! JSON curve files.
//!
//! ```json
//! {
//!   "name": "E2",
//!   "q": 5,
//!   "a": [0, -1],
//!   "b": [0, 1],
//!   "mw": { "generators": [{ "x": [1], "y": [1] }] },
//!   "known_sha": 1,
//!   "height_normalization": "A"
//! }
//! ```
//!
//! Polynomials are little-endian coefficient arrays. Over `F_q` with `q = p^e`,
//! `e > 1`, each coefficient is an array of `e` integers (coordinates over
//! `F_p`, constant first); an integer is read through `Z -> F_p`. Point
//! coordinates are polynomials or `{"num": poly, "den": poly}`.

use std::path::Path;

use serde::Deserialize;

use crate::bsd::HeightNormalization;
use crate::curve::{Curve, KPoint, MWInput};
use crate::error::{Error, Result};
use crate::ff::{Fe, Fq};
use crate::funcfield::{Poly, RationalFunction};

#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum Coefficient {
    Int(i64),
    Vector(Vec<i64>),
}

#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum FunctionSpec {
    Poly(Vec<Coefficient>),
    Fraction {
        num: Vec<Coefficient>,
        den: Vec<Coefficient>,
    },
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointSpec {
    pub x: FunctionSpec,
    pub y: FunctionSpec,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MwSpec {
    #[serde(default)]
    pub generators: Vec<PointSpec>,
    #[serde(default)]
    pub torsion_points: Vec<PointSpec>,
    pub torsion_order: Option<u64>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum NormalizationSpec {
    Name(String),
    Factor(u64),
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveSpecFile {
    pub name: Option<String>,
    pub q: u64,
    pub a: Vec<Coefficient>,
    pub b: Vec<Coefficient>,
    #[serde(default)]
    pub mw: MwSpec,
    pub known_sha: Option<u64>,
    pub height_normalization: Option<NormalizationSpec>,
}

/// A parsed and validated curve file.
#[derive(Clone, Debug)]
pub struct CurveInput {
    pub name: Option<String>,
    pub curve: Curve,
    pub mw: MWInput,
    pub known_sha: Option<u64>,
    pub normalization: Option<HeightNormalization>,
}

pub fn parse_normalization(s: &str) -> Result<HeightNormalization> {
    match s.trim() {
        "A" | "a" | "1" => Ok(HeightNormalization::A),
        "B" | "b" | "2^r" => Ok(HeightNormalization::B),
        other => Err(Error::Invalid(format!(
            "unknown height normalization {other:?} (expected A, B, 1 or 2^r)"
        ))),
    }
}

fn coefficient(fq: &Fq, c: &Coefficient) -> Result<Fe> {
    match c {
        Coefficient::Int(n) => Ok(fq.from_i64(*n)),
        Coefficient::Vector(v) => fq.from_coefficients(v),
    }
}

fn poly(fq: &Fq, coeffs: &[Coefficient]) -> Result<Poly> {
    let c = coeffs.iter().map(|c| coefficient(fq, c)).collect::<Result<Vec<_>>>()?;
    Ok(Poly::new(fq, c))
}

fn function(fq: &Fq, f: &FunctionSpec) -> Result<RationalFunction> {
    match f {
        FunctionSpec::Poly(c) => Ok(RationalFunction::from_poly(poly(fq, c)?)),
        FunctionSpec::Fraction { num, den } => RationalFunction::new(poly(fq, num)?, poly(fq, den)?),
    }
}

fn point(curve: &Curve, p: &PointSpec) -> Result<KPoint> {
    let fq = curve.field();
    curve.point(function(fq, &p.x)?, function(fq, &p.y)?)
}

impl CurveSpecFile {
    pub fn from_json(text: &str) -> Result<CurveSpecFile> {
        serde_json::from_str(text).map_err(|e| Error::Invalid(format!("curve file: {e}")))
    }

    pub fn load(path: &Path) -> Result<CurveSpecFile> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Invalid(format!("cannot read {}: {e}", path.display())))?;
        CurveSpecFile::from_json(&text)
    }

    pub fn field(&self) -> Result<Fq> {
        Fq::with_order(self.q)
    }

    pub fn build(&self) -> Result<CurveInput> {
        let fq = self.field()?;
        let curve = Curve::new(poly(&fq, &self.a)?, poly(&fq, &self.b)?)?;
        let generators = self
            .mw
            .generators
            .iter()
            .map(|p| point(&curve, p))
            .collect::<Result<Vec<_>>>()?;
        let torsion_points = self
            .mw
            .torsion_points
            .iter()
            .map(|p| point(&curve, p))
            .collect::<Result<Vec<_>>>()?;
        if self.known_sha == Some(0) {
            return Err(Error::Invalid("known_sha must be a positive integer".into()));
        }
        let normalization = match &self.height_normalization {
            None => None,
            Some(NormalizationSpec::Name(s)) => Some(parse_normalization(s)?),
            Some(NormalizationSpec::Factor(1)) => Some(HeightNormalization::A),
            Some(NormalizationSpec::Factor(n)) => {
                return Err(Error::Invalid(format!(
                    "height_normalization factor {n} (expected 1 or \"2^r\")"
                )))
            }
        };
        Ok(CurveInput {
            name: self.name.clone(),
            curve,
            mw: MWInput {
                generators,
                torsion_points,
                claimed_torsion_order: self.mw.torsion_order,
            },
            known_sha: self.known_sha,
            normalization,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_e2_with_generator() {
        let spec = CurveSpecFile::from_json(
            r#"{"q": 5, "a": [0, -1], "b": [0, 1], "mw": {"generators": [{"x": [1], "y": [1]}]}}"#,
        )
        .unwrap();
        let input = spec.build().unwrap();
        assert_eq!(input.mw.generators.len(), 1);
        assert_eq!(input.curve.a(), &Poly::from_i64s(input.curve.field(), &[0, 4]));
    }

    #[test]
    fn fraction_coordinates_and_vectors() {
        let spec = CurveSpecFile::from_json(
            r#"{"q": 25, "a": [[1, 0]], "b": [[0, 0], [1, 0]],
                "mw": {"generators": [{"x": {"num": [1], "den": [1]}, "y": [1]}]}}"#,
        )
        .unwrap();
        // (1, 1) is not on y^2 = x^3 + x + t
        assert_eq!(spec.build().unwrap_err(), Error::PointNotOnCurve);
    }

    #[test]
    fn rejects_small_characteristic() {
        let spec = CurveSpecFile::from_json(r#"{"q": 3, "a": [1], "b": [0, 1]}"#).unwrap();
        assert_eq!(spec.build().unwrap_err(), Error::UnsupportedCharacteristic(3));
    }

    #[test]
    fn normalization_switch() {
        let spec = CurveSpecFile::from_json(
            r#"{"q": 5, "a": [1], "b": [0, 1], "height_normalization": "2^r"}"#,
        )
        .unwrap();
        assert_eq!(spec.build().unwrap().normalization, Some(HeightNormalization::B));
        assert!(CurveSpecFile::from_json(r#"{"q": 5, "a": [1], "b": [0, 1], "extra": 1}"#).is_err());
    }
}
