//! Solvers for `K(u) = 0`.
//!
//! [`newton_solve`] runs damped Newton on the gradient `K` of the convex
//! energy with Hessian `D − Δ_η`. [`continuation_solve`] integrates the path
//! `K(u(t)) = (1 − t)·K(u₀)` with RK4 and serves as an independent method.

use std::f64::consts::FRAC_PI_4;
use std::num::NonZeroUsize;

use gauss_quad::GaussLegendre;

use crate::calculus::VertexField;
use crate::error::{Error, Result};
use crate::geometry::{
    check_factor, discrete_curvature, margin_of, ConformalFactor, EdgeLengths, FaceCurvature, VertexCurvature,
};
use crate::jacobian::{evaluate, Evaluation, JacobianParts};
use crate::linalg::{max_abs, SymmetricMatrix};
use crate::mesh::{validate_topology, SurfaceMesh};

/// Steps are rejected once the acuteness margin drops below this.
pub const MIN_STEP_MARGIN: f64 = -FRAC_PI_4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Backtracking {
    pub shrink: f64,
    pub slope: f64,
    pub max_backtracks: usize,
}

impl Default for Backtracking {
    fn default() -> Self {
        Self {
            shrink: 0.5,
            slope: 1e-4,
            max_backtracks: 40,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveConfig {
    /// Stop once `‖K‖_∞ ≤ tolerance`.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Starting point; zero when absent.
    pub initial_u: Option<ConformalFactor>,
    pub damping: Backtracking,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            tolerance: 1e-10,
            max_iterations: 100,
            initial_u: None,
            damping: Backtracking::default(),
        }
    }
}

impl SolveConfig {
    fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) {
            return Err(Error::Config(format!("tolerance must be positive, got {}", self.tolerance)));
        }
        if self.max_iterations < 1 {
            return Err(Error::Config("max_iterations must be at least 1".to_owned()));
        }
        let d = &self.damping;
        if !(d.shrink > 0.0 && d.shrink < 1.0) || !(d.slope > 0.0 && d.slope < 0.5) {
            return Err(Error::Config(format!("invalid backtracking parameters {d:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub iteration: usize,
    /// `‖K‖_∞` before the step.
    pub residual: f64,
    /// Accepted step length, zero if no step was accepted.
    pub step_length: f64,
    /// Acuteness margin before the step.
    pub margin: f64,
    /// Gradient step taken because `D − Δ_η` was not certified positive definite.
    pub gradient_fallback: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub u: ConformalFactor,
    pub residual_inf: f64,
    pub iterations: usize,
    pub step_log: Vec<StepRecord>,
    pub converged: bool,
}

fn require_eligible(mesh: &SurfaceMesh) -> Result<()> {
    let report = validate_topology(mesh);
    if !report.is_valid() {
        return Err(Error::InvalidTopology(report.violations.join("; ")));
    }
    if report.genus < 2 {
        return Err(Error::GenusTooSmall(report.genus));
    }
    Ok(())
}

/// Solves `(D − Δ_η)·d = rhs`; the residual is checked after the solve.
pub fn solve_linear_spd(mesh: &SurfaceMesh, parts: &JacobianParts, rhs: &VertexField) -> Result<VertexField> {
    solve_spd(&parts.matrix(mesh), rhs)
}

pub fn solve_spd(matrix: &SymmetricMatrix, rhs: &VertexField) -> Result<VertexField> {
    let d = matrix.cholesky()?.solve(&rhs.0);
    let r = matrix.apply(&d);
    let err = r.iter().zip(&rhs.0).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
    let scale = max_abs(&rhs.0);
    if err > 1e-10 * scale.max(f64::MIN_POSITIVE) && err > 0.0 {
        return Err(Error::LinearSolve(format!(
            "residual {err:e} exceeds 1e-10 relative to |rhs| = {scale:e}"
        )));
    }
    Ok(VertexField(d))
}

fn axpy(u: &ConformalFactor, s: f64, d: &[f64]) -> ConformalFactor {
    ConformalFactor::new(u.iter().zip(d).map(|(a, b)| a + s * b).collect())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Evaluation at `u`, or `None` if `u` leaves the admissible step domain.
fn admissible(
    mesh: &SurfaceMesh,
    kappa: &FaceCurvature,
    u: &ConformalFactor,
    l: &EdgeLengths,
) -> Option<Evaluation> {
    let eval = evaluate(mesh, kappa, u, l).ok()?;
    (margin_of(&eval.angles) >= MIN_STEP_MARGIN).then_some(eval)
}

/// Damped Newton iteration for `K(u) = 0`.
pub fn newton_solve(
    mesh: &SurfaceMesh,
    kappa: &FaceCurvature,
    l: &EdgeLengths,
    cfg: &SolveConfig,
) -> Result<SolveResult> {
    cfg.validate()?;
    require_eligible(mesh)?;
    let mut u = match &cfg.initial_u {
        Some(u0) => u0.clone(),
        None => ConformalFactor::zeros(mesh.vertex_count()),
    };
    check_factor(mesh, &u)?;
    let mut eval = evaluate(mesh, kappa, &u, l)?;
    let mut log = Vec::new();
    let damping = cfg.damping;

    for iteration in 0..cfg.max_iterations {
        let k = &eval.curvature;
        let residual = k.max_abs();
        let margin = margin_of(&eval.angles);
        if residual <= cfg.tolerance {
            break;
        }

        let neg_k = VertexField(k.0.iter().map(|x| -x).collect());
        let newton = if eval.parts.min_diag() > 0.0 {
            solve_linear_spd(mesh, &eval.parts, &neg_k).ok()
        } else {
            None
        };
        let gradient_fallback = newton.is_none();
        let direction = newton.unwrap_or(neg_k).0;

        let k_sq = dot(&k.0, &k.0);
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..=damping.max_backtracks {
            let trial = axpy(&u, step, &direction);
            if let Some(next) = admissible(mesh, kappa, &trial, l) {
                let sufficient = if gradient_fallback {
                    // Armijo on the energy, whose gradient is K.
                    energy_along_path(mesh, kappa, l, &u, &trial, 4)
                        .is_ok_and(|de| de <= -damping.slope * step * k_sq)
                } else {
                    let next_sq = dot(&next.curvature.0, &next.curvature.0);
                    next_sq <= (1.0 - 2.0 * damping.slope * step) * k_sq
                };
                if sufficient {
                    accepted = Some((trial, next));
                    break;
                }
            }
            step *= damping.shrink;
        }

        match accepted {
            Some((trial, next)) => {
                log.push(StepRecord {
                    iteration,
                    residual,
                    step_length: step,
                    margin,
                    gradient_fallback,
                });
                u = trial;
                eval = next;
            }
            None => {
                log.push(StepRecord {
                    iteration,
                    residual,
                    step_length: 0.0,
                    margin,
                    gradient_fallback,
                });
                break;
            }
        }
    }

    let residual_inf = eval.curvature.max_abs();
    Ok(SolveResult {
        iterations: log.iter().filter(|r| r.step_length > 0.0).count(),
        converged: residual_inf <= cfg.tolerance,
        residual_inf,
        step_log: log,
        u,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContinuationConfig {
    /// Equal RK4 steps over t ∈ [0, 1].
    pub steps: usize,
    pub newton_polish: bool,
    /// Used by the optional polish and for the `converged` flag.
    pub tolerance: f64,
    /// Record a trace point every this many steps (quarter points are always recorded).
    pub trace_every: usize,
}

impl Default for ContinuationConfig {
    fn default() -> Self {
        Self {
            steps: 1000,
            newton_polish: true,
            tolerance: 1e-10,
            trace_every: 10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TracePoint {
    pub t: f64,
    pub residual_inf: f64,
    /// `‖K(u(t)) − (1 − t)·K(u₀)‖_∞`.
    pub linearity_defect: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContinuationResult {
    pub result: SolveResult,
    /// Endpoint of the integration before any polish.
    pub endpoint: ConformalFactor,
    /// Max linearity defect over the checkpoints t ≈ 0.25, 0.5, 0.75.
    pub linearity_defect: f64,
    pub trace: Vec<TracePoint>,
}

/// Integrates `u′(t) = (Δ_η(u) − D(u))⁻¹·K(u₀)` from t = 0 to 1 with RK4.
pub fn continuation_solve(
    mesh: &SurfaceMesh,
    kappa: &FaceCurvature,
    l: &EdgeLengths,
    u0: &ConformalFactor,
    cfg: &ContinuationConfig,
) -> Result<ContinuationResult> {
    if cfg.steps < 1 {
        return Err(Error::Config("continuation needs at least one step".to_owned()));
    }
    require_eligible(mesh)?;
    check_factor(mesh, u0)?;
    let k0 = discrete_curvature(mesh, kappa, u0, l)?;
    let n = cfg.steps;
    let h = 1.0 / n as f64;

    let velocity = |u: &ConformalFactor, t: f64| -> Result<Vec<f64>> {
        let wrap = |e: Error| Error::ContinuationInfeasible { t, source: Box::new(e) };
        let eval = evaluate(mesh, kappa, u, l).map_err(wrap)?;
        // (Δ_η − D)⁻¹ K₀ = −(D − Δ_η)⁻¹ K₀
        let neg_k0 = VertexField(k0.0.iter().map(|x| -x).collect());
        Ok(solve_linear_spd(mesh, &eval.parts, &neg_k0).map_err(wrap)?.0)
    };

    let quarter_steps: Vec<usize> = [0.25, 0.5, 0.75]
        .iter()
        .map(|q| ((q * n as f64).round() as usize).clamp(1, n))
        .collect();
    let trace_every = cfg.trace_every.max(1);

    let mut u = u0.clone();
    let mut trace = vec![TracePoint {
        t: 0.0,
        residual_inf: k0.max_abs(),
        linearity_defect: 0.0,
    }];
    let mut linearity_defect: f64 = 0.0;

    for step in 0..n {
        let t = step as f64 * h;
        let k1 = velocity(&u, t)?;
        let k2 = velocity(&axpy(&u, 0.5 * h, &k1), t + 0.5 * h)?;
        let k3 = velocity(&axpy(&u, 0.5 * h, &k2), t + 0.5 * h)?;
        let k4 = velocity(&axpy(&u, h, &k3), t + h)?;
        let incr: Vec<f64> = (0..u.len())
            .map(|i| (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) / 6.0)
            .collect();
        u = axpy(&u, h, &incr);

        let done = step + 1;
        let is_quarter = quarter_steps.contains(&done);
        if is_quarter || done % trace_every == 0 || done == n {
            let t_now = done as f64 * h;
            let k = discrete_curvature(mesh, kappa, &u, l).map_err(|e| Error::ContinuationInfeasible {
                t: t_now,
                source: Box::new(e),
            })?;
            let defect = k
                .0
                .iter()
                .zip(&k0.0)
                .fold(0.0_f64, |m, (a, b)| m.max((a - (1.0 - t_now) * b).abs()));
            if is_quarter {
                linearity_defect = linearity_defect.max(defect);
            }
            trace.push(TracePoint {
                t: t_now,
                residual_inf: k.max_abs(),
                linearity_defect: defect,
            });
        }
    }

    let endpoint = u.clone();
    let result = if cfg.newton_polish {
        let polish = newton_solve(
            mesh,
            kappa,
            l,
            &SolveConfig {
                tolerance: cfg.tolerance,
                initial_u: Some(u),
                ..SolveConfig::default()
            },
        )?;
        SolveResult {
            iterations: n + polish.iterations,
            ..polish
        }
    } else {
        let residual_inf = discrete_curvature(mesh, kappa, &u, l)?.max_abs();
        SolveResult {
            u,
            residual_inf,
            iterations: n,
            step_log: Vec::new(),
            converged: residual_inf <= cfg.tolerance,
        }
    };

    Ok(ContinuationResult {
        result,
        endpoint,
        linearity_defect,
        trace,
    })
}

/// `∫₀¹ Σ_i K_i(u(t))·(u_end − u_start)_i dt` along the straight segment,
/// by Gauss–Legendre quadrature with `points` nodes.
pub fn energy_along_path(
    mesh: &SurfaceMesh,
    kappa: &FaceCurvature,
    l: &EdgeLengths,
    u_start: &ConformalFactor,
    u_end: &ConformalFactor,
    points: usize,
) -> Result<f64> {
    let points = NonZeroUsize::new(points).ok_or_else(|| Error::Config("quadrature needs at least one point".to_owned()))?;
    check_factor(mesh, u_start)?;
    check_factor(mesh, u_end)?;
    let delta: Vec<f64> = u_end.iter().zip(u_start.iter()).map(|(b, a)| b - a).collect();
    if delta.iter().all(|&d| d == 0.0) {
        return Ok(0.0);
    }
    let rule = GaussLegendre::new(points);
    let mut total = 0.0;
    for &(node, weight) in rule.as_node_weight_pairs() {
        let t = 0.5 * (node + 1.0);
        let k: VertexCurvature = discrete_curvature(mesh, kappa, &axpy(u_start, t, &delta), l)?;
        total += 0.5 * weight * dot(&k.0, &delta);
    }
    Ok(total)
}
