//! Browser bindings for the static demo page in `www/`.
//!
//! Every export returns a JSON string so the page needs no glue beyond
//! `JSON.parse`. Errors come back as `{"error": "..."}`.

use std::fmt::Write as _;

use wasm_bindgen::prelude::*;

use dcpm_core::geometry::{acuteness_margin, hyperbolic_angles, max_length, model_length};
use dcpm_core::jacobian::{lambda_factor, tilde_theta};
use dcpm_core::solver::{continuation_solve, ContinuationConfig, SolveConfig};
use dcpm_core::surfaces::{convergence_study, octagon_at_level, KappaSpec};
use dcpm_core::{ConformalFactor, FaceCurvature};

/// Refinement depth cap for the browser; level 4 already has 1022 vertices.
const MAX_LEVEL: usize = 4;

fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        "null".to_owned()
    }
}

fn array(xs: impl IntoIterator<Item = f64>) -> String {
    let items: Vec<String> = xs.into_iter().map(num).collect();
    format!("[{}]", items.join(","))
}

fn error_json(message: impl std::fmt::Display) -> String {
    let escaped = message.to_string().replace('\\', "\\\\").replace('"', "\\\"");
    format!("{{\"error\":\"{escaped}\"}}")
}

/// Angles, half-angle combinations and λ factors of one face with scaled
/// side lengths `l0, l1, l2` on background curvature `kappa`.
#[wasm_bindgen]
pub fn triangle_explorer(l0: f64, l1: f64, l2: f64, kappa: f64) -> String {
    if !(kappa < 0.0) {
        return error_json("curvature must be negative");
    }
    let lens = [l0, l1, l2];
    if lens.iter().any(|&x| !(x > 0.0)) {
        return error_json("lengths must be positive");
    }
    let h = lens.map(|x| model_length(kappa, x));
    let Some(angles) = hyperbolic_angles(h) else {
        return error_json(format!("model lengths {h:?} violate the triangle inequality"));
    };
    let tilde = tilde_theta(angles);
    let sum: f64 = angles.iter().sum();
    format!(
        "{{\"model_lengths\":{},\"angles\":{},\"tilde\":{},\"lambda\":{},\"deficit\":{},\"margin\":{}}}",
        array(h),
        array(angles),
        array(tilde),
        array(lens.map(|x| lambda_factor(kappa, x))),
        num(std::f64::consts::PI - sum),
        num(angles.iter().fold(f64::INFINITY, |m, &t| m.min(std::f64::consts::FRAC_PI_2 - t))),
    )
}

/// Newton solves on the octagon fixture at levels `0..=max_level`, with the
/// error against the smooth solution for constant `kappa`.
#[wasm_bindgen]
pub fn convergence_table(max_level: usize, kappa: f64) -> String {
    if !(kappa < 0.0) {
        return error_json("curvature must be negative");
    }
    let levels: Vec<usize> = (0..=max_level.min(MAX_LEVEL)).collect();
    match convergence_study(&levels, KappaSpec::Constant(kappa), &SolveConfig::default()) {
        Ok(rows) => {
            let mut out = String::from("{\"rows\":[");
            for (i, r) in rows.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                let _ = write!(
                    out,
                    "{{\"level\":{},\"max_len\":{},\"margin\":{},\"iters\":{},\"residual\":{},\"error_inf\":{},\"converged\":{}}}",
                    r.level,
                    num(r.max_len),
                    num(r.margin),
                    r.iters,
                    num(r.residual),
                    r.error_inf.map_or_else(|| "null".to_owned(), num),
                    r.converged
                );
            }
            out.push_str("]}");
            out
        }
        Err(e) => error_json(e),
    }
}

/// Continuation flow from u = 0 on the octagon fixture at `level`, returning
/// the residual and linearity defect along t.
#[wasm_bindgen]
pub fn continuation_trace(level: usize, kappa: f64, steps: usize) -> String {
    if !(kappa < 0.0) {
        return error_json("curvature must be negative");
    }
    let m = match octagon_at_level(level.min(MAX_LEVEL)) {
        Ok(m) => m,
        Err(e) => return error_json(e),
    };
    let k = match FaceCurvature::constant(m.mesh.face_count(), kappa) {
        Ok(k) => k,
        Err(e) => return error_json(e),
    };
    let cfg = ContinuationConfig {
        steps: steps.max(1),
        newton_polish: false,
        trace_every: (steps / 50).max(1),
        ..ContinuationConfig::default()
    };
    let u0 = ConformalFactor::zeros(m.mesh.vertex_count());
    match continuation_solve(&m.mesh, &k, &m.lengths, &u0, &cfg) {
        Ok(out) => {
            let margin = acuteness_margin(&m.mesh, &k, &m.lengths).unwrap_or(f64::NAN);
            format!(
                "{{\"t\":{},\"residual\":{},\"defect\":{},\"final_residual\":{},\"linearity_defect\":{},\"u_max_abs\":{},\"max_len\":{},\"margin\":{}}}",
                array(out.trace.iter().map(|p| p.t)),
                array(out.trace.iter().map(|p| p.residual_inf)),
                array(out.trace.iter().map(|p| p.linearity_defect)),
                num(out.result.residual_inf),
                num(out.linearity_defect),
                num(out.result.u.max_abs()),
                num(max_length(&m.lengths)),
                num(margin),
            )
        }
        Err(e) => error_json(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn explorer_reports_equilateral_angles() {
        // κ = −1 and scaled length 2·sinh(1/2) give model length 1.
        let s = 2.0 * 0.5_f64.sinh();
        let json = triangle_explorer(s, s, s, -1.0);
        assert!(json.contains("\"angles\":[9.18797872178"), "{json}");
        assert!(triangle_explorer(1.0, 1.0, 5.0, -1.0).contains("error"));
        assert!(triangle_explorer(1.0, 1.0, 1.0, 0.5).contains("error"));
    }

    #[test]
    fn convergence_rows_shrink() {
        let json = convergence_table(2, -1.0);
        assert_eq!(json.matches("\"level\"").count(), 3, "{json}");
        assert!(!json.contains("\"converged\":false"));
    }

    #[test]
    fn trace_starts_at_zero_time() {
        let json = continuation_trace(1, -1.0, 40);
        assert!(json.starts_with("{\"t\":[0.0000000000000000e0,"), "{json}");
    }
}
