//! Small text formats: per-face curvature tables and conformal factor files.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::geometry::{ConformalFactor, FaceCurvature};
use crate::mesh::content_lines;

/// 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Parses either the literal `const:<negative>` or the contents of a
/// curvature file made of `k <face_id> <negative>` lines.
pub fn parse_curvature(spec: &str, face_count: usize) -> Result<FaceCurvature> {
    if let Some(rest) = spec.trim().strip_prefix("const:") {
        let value: f64 = rest.trim().parse().map_err(|_| Error::Parse {
            line: 1,
            message: format!("invalid curvature constant '{rest}'"),
        })?;
        return FaceCurvature::constant(face_count, value);
    }

    let mut values = vec![None; face_count];
    for (n, line) in content_lines(spec) {
        let toks: Vec<&str> = line.split_whitespace().collect();
        let err = |message: String| Error::Parse { line: n, message };
        match toks.as_slice() {
            ["k", id, value] => {
                let id: usize = id.parse().map_err(|_| err(format!("invalid face id '{id}'")))?;
                let value: f64 = value
                    .parse()
                    .map_err(|_| err(format!("invalid curvature '{value}'")))?;
                let slot = values
                    .get_mut(id)
                    .ok_or_else(|| err(format!("face id {id} out of range (mesh has {face_count} faces)")))?;
                if slot.replace(value).is_some() {
                    return Err(err(format!("face {id} given twice")));
                }
            }
            _ => return Err(err(format!("expected 'k <face_id> <value>', got '{line}'"))),
        }
    }
    let values = values
        .into_iter()
        .enumerate()
        .map(|(f, v)| v.ok_or(Error::MissingId { kind: "face", missing: f }))
        .collect::<Result<Vec<_>>>()?;
    FaceCurvature::new(values)
}

pub fn write_curvature(kappa: &FaceCurvature) -> String {
    let mut out = String::new();
    for (f, k) in kappa.iter().enumerate() {
        let _ = writeln!(out, "k {f} {}", fmt_f64(k));
    }
    out
}

/// `u <vertex_id> <value>` lines in ascending vertex order.
pub fn write_conformal_factor(u: &ConformalFactor) -> String {
    let mut out = String::new();
    for (v, x) in u.iter().enumerate() {
        let _ = writeln!(out, "u {v} {}", fmt_f64(x));
    }
    out
}

pub fn parse_conformal_factor(text: &str, vertex_count: usize) -> Result<ConformalFactor> {
    let mut values = vec![None; vertex_count];
    for (n, line) in content_lines(text) {
        let toks: Vec<&str> = line.split_whitespace().collect();
        let err = |message: String| Error::Parse { line: n, message };
        match toks.as_slice() {
            ["u", id, value] => {
                let id: usize = id.parse().map_err(|_| err(format!("invalid vertex id '{id}'")))?;
                let value: f64 = value.parse().map_err(|_| err(format!("invalid value '{value}'")))?;
                *values
                    .get_mut(id)
                    .ok_or_else(|| err(format!("vertex id {id} out of range")))? = Some(value);
            }
            _ => return Err(err(format!("expected 'u <vertex_id> <value>', got '{line}'"))),
        }
    }
    let values = values
        .into_iter()
        .enumerate()
        .map(|(v, x)| x.ok_or(Error::MissingId { kind: "vertex", missing: v }))
        .collect::<Result<Vec<_>>>()?;
    Ok(ConformalFactor::new(values))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formats_seventeen_digits() {
        assert_eq!(fmt_f64(0.1), "1.0000000000000001e-1");
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02e23] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn constant_curvature_literal() {
        let k = parse_curvature("const:-1.5", 3).unwrap();
        assert_eq!(k.as_slice(), &[-1.5, -1.5, -1.5]);
        assert!(matches!(
            parse_curvature("const:0.5", 3),
            Err(Error::NonNegativeCurvature { .. })
        ));
    }

    #[test]
    fn curvature_file_round_trip() {
        let k = FaceCurvature::new(vec![-1.0, -0.25, -3.5]).unwrap();
        let again = parse_curvature(&write_curvature(&k), 3).unwrap();
        assert_eq!(again, k);
        assert!(matches!(
            parse_curvature("k 0 -1\nk 2 -1\n", 3),
            Err(Error::MissingId { missing: 1, .. })
        ));
    }

    #[test]
    fn conformal_factor_round_trip() {
        let u = ConformalFactor::new(vec![0.0, -1.25, 3.0e-7]);
        assert_eq!(parse_conformal_factor(&write_conformal_factor(&u), 3).unwrap(), u);
    }
}
