//! Derivative of the discrete curvature, `∂K/∂u = D(u) − Δ_{η(u)}`.
//!
//! For a face with corners i, j, k and edge ij opposite k:
//!
//!   θ̃ᵏ = ½(π + θᵏ − θⁱ − θʲ),   λ_ij = κ²ℓ²/(κ²ℓ² + 4)  with ℓ = (u*l)_ij,
//!
//! the face adds `½·cot θ̃ᵏ·(1 − λ_ij)` to η_ij and `cot θ̃ᵏ·λ_ij` to both
//! D_ii and D_jj.

use std::f64::consts::PI;

use crate::calculus::{laplacian_matrix, EdgeWeight, Graph};
use crate::error::{Error, Result};
use crate::geometry::{
    check_factor, curvature_from_angles, hyperbolic_angles, model_length, scale_lengths, ConformalFactor,
    CornerAngles, EdgeLengths, FaceCurvature, VertexCurvature,
};
use crate::linalg::SymmetricMatrix;
use crate::mesh::SurfaceMesh;

/// Half-angles within this distance of 0 or π are treated as singular.
pub const COT_GUARD: f64 = 1e-12;

/// `θ̃^c = ½(π + θ^c − θ^{c+1} − θ^{c+2})` for each corner.
pub fn tilde_theta(angles: [f64; 3]) -> [f64; 3] {
    let [a, b, c] = angles;
    [
        0.5 * (PI + a - b - c),
        0.5 * (PI + b - c - a),
        0.5 * (PI + c - a - b),
    ]
}

/// `κ²s²/(κ²s² + 4)`, which equals `tanh²(H/2)` for the model length H of s.
pub fn lambda_factor(kappa: f64, scaled_length: f64) -> f64 {
    let q = kappa * kappa * scaled_length * scaled_length;
    q / (q + 4.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct JacobianParts {
    /// η per edge; entries on loops do not enter the Laplacian.
    pub eta: EdgeWeight,
    /// D_ii per vertex.
    pub diag: Vec<f64>,
    /// θ̃ per face, indexed by corner slot.
    pub corner_tilde: Vec<[f64; 3]>,
    /// λ per face, indexed by edge slot (the edge opposite corner `slot + 2`).
    pub lambda: Vec<[f64; 3]>,
}

impl JacobianParts {
    /// Δ_η on the mesh skeleton.
    pub fn laplacian(&self, mesh: &SurfaceMesh) -> SymmetricMatrix {
        laplacian_matrix(&Graph::skeleton(mesh), &self.eta)
    }

    /// The full symmetric matrix `D − Δ_η`.
    pub fn matrix(&self, mesh: &SurfaceMesh) -> SymmetricMatrix {
        let mut m = SymmetricMatrix::new(mesh.vertex_count());
        for (i, &d) in self.diag.iter().enumerate() {
            m.add_diag(i, d);
        }
        for (e, &[a, b]) in mesh.edges().iter().enumerate() {
            if a != b {
                let w = self.eta.0[e];
                m.add_sym(a, b, -w);
                m.add_diag(a, w);
                m.add_diag(b, w);
            }
        }
        m
    }

    pub fn min_eta(&self, mesh: &SurfaceMesh) -> f64 {
        (0..mesh.edge_count())
            .filter(|&e| !mesh.is_loop(e))
            .map(|e| self.eta.0[e])
            .fold(f64::INFINITY, f64::min)
    }

    pub fn min_diag(&self) -> f64 {
        self.diag.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Angles, curvature and Jacobian at one conformal factor.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub angles: CornerAngles,
    pub curvature: VertexCurvature,
    pub parts: JacobianParts,
}

struct FaceTerms {
    angles: [f64; 3],
    tilde: [f64; 3],
    lambda: [f64; 3],
    cot: [f64; 3],
}

fn face_terms(mesh: &SurfaceMesh, kappa: &FaceCurvature, scaled: &EdgeLengths, f: usize) -> Result<FaceTerms> {
    let k = kappa[f];
    let lens = mesh.face_edges(f).map(|e| scaled[e]);
    let h = lens.map(|s| model_length(k, s));
    let angles = hyperbolic_angles(h).ok_or(Error::InfeasibleFace { face: f, lengths: h })?;
    let tilde = tilde_theta(angles);
    let mut cot = [0.0; 3];
    for (c, &t) in tilde.iter().enumerate() {
        if t < COT_GUARD || t > PI - COT_GUARD {
            return Err(Error::CotSingularity {
                face: f,
                corner: c,
                value: t,
            });
        }
        cot[c] = t.cos() / t.sin();
    }
    Ok(FaceTerms {
        angles,
        tilde,
        lambda: lens.map(|s| lambda_factor(k, s)),
        cot,
    })
}

/// Angles, K and `∂K/∂u` in one pass over the faces.
pub fn evaluate(
    mesh: &SurfaceMesh,
    kappa: &FaceCurvature,
    u: &ConformalFactor,
    l: &EdgeLengths,
) -> Result<Evaluation> {
    check_factor(mesh, u)?;
    let scaled = scale_lengths(mesh, u, l);
    let terms = crate::par::map_faces(mesh.face_count(), |f| face_terms(mesh, kappa, &scaled, f))?;

    let mut eta = vec![0.0; mesh.edge_count()];
    let mut diag = vec![0.0; mesh.vertex_count()];
    for (f, t) in terms.iter().enumerate() {
        let verts = mesh.face_vertices(f);
        let edges = mesh.face_edges(f);
        for s in 0..3 {
            let opposite = (s + 2) % 3;
            let cot = t.cot[opposite];
            let lam = t.lambda[s];
            eta[edges[s]] += 0.5 * cot * (1.0 - lam);
            diag[verts[s]] += cot * lam;
            diag[verts[(s + 1) % 3]] += cot * lam;
        }
    }

    let angles = CornerAngles(terms.iter().map(|t| t.angles).collect());
    let curvature = curvature_from_angles(mesh, &angles);
    Ok(Evaluation {
        angles,
        curvature,
        parts: JacobianParts {
            eta: EdgeWeight(eta),
            diag,
            corner_tilde: terms.iter().map(|t| t.tilde).collect(),
            lambda: terms.iter().map(|t| t.lambda).collect(),
        },
    })
}

pub fn assemble_jacobian(
    mesh: &SurfaceMesh,
    kappa: &FaceCurvature,
    u: &ConformalFactor,
    l: &EdgeLengths,
) -> Result<JacobianParts> {
    evaluate(mesh, kappa, u, l).map(|e| e.parts)
}
