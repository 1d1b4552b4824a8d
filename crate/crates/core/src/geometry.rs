//! Per-face geometry of negatively curved polyhedral surfaces.
//!
//! Every face carries a constant background curvature κ < 0. Angles are
//! evaluated on the curvature −1 model triangle whose side lengths are
//! `H = 2·asinh((−κ/2)·ℓ)`, where ℓ is the (conformally scaled) edge length.

use std::f64::consts::{FRAC_PI_2, PI};
use std::ops::Index;

use crate::error::{Error, Result};
use crate::mesh::SurfaceMesh;

/// Relative slack in the strict triangle inequality on model lengths.
pub const FEASIBILITY_TOLERANCE: f64 = 1e-12;

/// Strictly positive length per edge.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeLengths(Vec<f64>);

impl EdgeLengths {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some((edge, &value)) = values
            .iter()
            .enumerate()
            .find(|(_, &x)| !(x > 0.0 && x.is_finite()))
        {
            return Err(Error::NonPositiveLength { edge, value });
        }
        Ok(Self(values))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.0.iter().copied()
    }

    /// Multiplies every length by `factor > 0`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.0.iter().map(|x| x * factor).collect())
    }
}

impl Index<usize> for EdgeLengths {
    type Output = f64;
    fn index(&self, e: usize) -> &f64 {
        &self.0[e]
    }
}

/// Log scale factor per vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct ConformalFactor(Vec<f64>);

impl ConformalFactor {
    pub fn new(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn zeros(vertex_count: usize) -> Self {
        Self(vec![0.0; vertex_count])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.0.iter().copied()
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, x| m.max(x.abs()))
    }
}

impl Index<usize> for ConformalFactor {
    type Output = f64;
    fn index(&self, v: usize) -> &f64 {
        &self.0[v]
    }
}

/// Strictly negative background curvature per face.
#[derive(Debug, Clone, PartialEq)]
pub struct FaceCurvature(Vec<f64>);

impl FaceCurvature {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some((face, &value)) = values
            .iter()
            .enumerate()
            .find(|(_, &k)| !(k < 0.0 && k.is_finite()))
        {
            return Err(Error::NonNegativeCurvature { face, value });
        }
        Ok(Self(values))
    }

    pub fn constant(face_count: usize, kappa: f64) -> Result<Self> {
        Self::new(vec![kappa; face_count])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.0.iter().copied()
    }
}

impl Index<usize> for FaceCurvature {
    type Output = f64;
    fn index(&self, f: usize) -> &f64 {
        &self.0[f]
    }
}

/// Inner angles per face, indexed by corner slot.
#[derive(Debug, Clone, PartialEq)]
pub struct CornerAngles(pub Vec<[f64; 3]>);

impl CornerAngles {
    pub fn face(&self, f: usize) -> [f64; 3] {
        self.0[f]
    }

    /// π minus the angle sum of each face (positive in negative curvature).
    pub fn face_deficits(&self) -> impl Iterator<Item = f64> + '_ {
        self.0.iter().map(|t| PI - (t[0] + t[1] + t[2]))
    }
}

/// Angle defect `K_i = 2π − Σ θ` per vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct VertexCurvature(pub Vec<f64>);

impl VertexCurvature {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn norm2(&self) -> f64 {
        self.0.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

/// `(u*l)_e = exp((u_a + u_b)/2)·l_e`; a loop at `a` scales by `exp(u_a)`.
pub fn scale_lengths(mesh: &SurfaceMesh, u: &ConformalFactor, l: &EdgeLengths) -> EdgeLengths {
    let scaled = mesh
        .edges()
        .iter()
        .zip(l.iter())
        .map(|(&[a, b], len)| (0.5 * (u[a] + u[b])).exp() * len)
        .collect();
    EdgeLengths(scaled)
}

/// Geodesic edge length `(2/(−κ))·asinh((−κ/2)·l)` on the face of curvature κ.
pub fn constant_curvature_edge_length(kappa: f64, l: f64) -> f64 {
    2.0 / (-kappa) * (-0.5 * kappa * l).asinh()
}

/// Curvature −1 length `2·asinh((−κ/2)·l)` used for all angle computations.
pub fn model_length(kappa: f64, l: f64) -> f64 {
    2.0 * (-0.5 * kappa * l).asinh()
}

/// Whether three curvature −1 side lengths span a non-degenerate triangle.
pub fn is_feasible(h: [f64; 3]) -> bool {
    let total = h[0] + h[1] + h[2];
    let max = h[0].max(h[1]).max(h[2]);
    max < (total - max) - FEASIBILITY_TOLERANCE * max
}

/// Inner angles of the hyperbolic triangle whose slot-`s` side has length
/// `h[s]` and joins corners `s` and `s + 1`. `None` when infeasible.
///
/// Uses the half-angle form of the hyperbolic law of cosines,
/// `tan²(θ/2) = sinh(p−b)·sinh(p−c) / (sinh p·sinh(p−a))` with `p` the
/// semi-perimeter, which stays accurate for tiny triangles.
pub fn hyperbolic_angles(h: [f64; 3]) -> Option<[f64; 3]> {
    if !is_feasible(h) {
        return None;
    }
    let p = 0.5 * (h[0] + h[1] + h[2]);
    let sinh_p = p.sinh();
    // Excess of the semi-perimeter over each side, computed without cancellation.
    let ex = [
        0.5 * (h[1] + h[2] - h[0]),
        0.5 * (h[2] + h[0] - h[1]),
        0.5 * (h[0] + h[1] - h[2]),
    ];
    let sh = ex.map(f64::sinh);
    let mut out = [0.0; 3];
    for (c, angle) in out.iter_mut().enumerate() {
        let opposite = (c + 1) % 3;
        let adj1 = c;
        let adj2 = (c + 2) % 3;
        let t = (sh[adj1] * sh[adj2] / (sinh_p * sh[opposite])).sqrt();
        *angle = 2.0 * t.atan();
    }
    Some(out)
}

/// Model lengths of face `f` under curvature `kappa[f]` and lengths `l`.
pub fn face_model_lengths(mesh: &SurfaceMesh, kappa: &FaceCurvature, l: &EdgeLengths, f: usize) -> [f64; 3] {
    mesh.face_edges(f).map(|e| model_length(kappa[f], l[e]))
}

pub fn corner_angles(
    mesh: &SurfaceMesh,
    kappa: &FaceCurvature,
    l: &EdgeLengths,
    face: usize,
) -> Result<[f64; 3]> {
    let h = face_model_lengths(mesh, kappa, l, face);
    hyperbolic_angles(h).ok_or(Error::InfeasibleFace { face, lengths: h })
}

fn check_sizes(mesh: &SurfaceMesh, kappa: &FaceCurvature, l: &EdgeLengths) -> Result<()> {
    if kappa.len() != mesh.face_count() {
        return Err(Error::SizeMismatch {
            what: "face curvature",
            expected: mesh.face_count(),
            got: kappa.len(),
        });
    }
    if l.len() != mesh.edge_count() {
        return Err(Error::SizeMismatch {
            what: "edge lengths",
            expected: mesh.edge_count(),
            got: l.len(),
        });
    }
    Ok(())
}

pub(crate) fn check_factor(mesh: &SurfaceMesh, u: &ConformalFactor) -> Result<()> {
    if u.len() != mesh.vertex_count() {
        return Err(Error::SizeMismatch {
            what: "conformal factor",
            expected: mesh.vertex_count(),
            got: u.len(),
        });
    }
    Ok(())
}

/// Angles of every face; per-face work may run in parallel.
pub fn all_corner_angles(mesh: &SurfaceMesh, kappa: &FaceCurvature, l: &EdgeLengths) -> Result<CornerAngles> {
    check_sizes(mesh, kappa, l)?;
    let angles = crate::par::map_faces(mesh.face_count(), |f| corner_angles(mesh, kappa, l, f))?;
    Ok(CornerAngles(angles))
}

/// Sums corner angles into `2π − Σθ` in ascending face order.
pub fn curvature_from_angles(mesh: &SurfaceMesh, angles: &CornerAngles) -> VertexCurvature {
    let mut k = vec![2.0 * PI; mesh.vertex_count()];
    for (f, theta) in angles.0.iter().enumerate() {
        for (slot, &v) in mesh.face_vertices(f).iter().enumerate() {
            k[v] -= theta[slot];
        }
    }
    VertexCurvature(k)
}

pub fn discrete_curvature(
    mesh: &SurfaceMesh,
    kappa: &FaceCurvature,
    u: &ConformalFactor,
    l: &EdgeLengths,
) -> Result<VertexCurvature> {
    check_factor(mesh, u)?;
    let scaled = scale_lengths(mesh, u, l);
    let angles = all_corner_angles(mesh, kappa, &scaled)?;
    Ok(curvature_from_angles(mesh, &angles))
}

/// `Σ K_i − Σ_σ (π − Σθ) − 2πχ`, zero up to roundoff.
pub fn gauss_bonnet_defect(mesh: &SurfaceMesh, angles: &CornerAngles, k: &VertexCurvature) -> f64 {
    let total_k: f64 = k.0.iter().sum();
    let total_deficit: f64 = angles.face_deficits().sum();
    total_k - total_deficit - 2.0 * PI * mesh.euler_characteristic() as f64
}

/// Minimum of `π/2 − θ` over all corners; the surface is ε-acute iff this is ≥ ε.
pub fn acuteness_margin(mesh: &SurfaceMesh, kappa: &FaceCurvature, l: &EdgeLengths) -> Result<f64> {
    let angles = all_corner_angles(mesh, kappa, l)?;
    Ok(margin_of(&angles))
}

pub(crate) fn margin_of(angles: &CornerAngles) -> f64 {
    angles
        .0
        .iter()
        .flatten()
        .fold(f64::INFINITY, |m, &t| m.min(FRAC_PI_2 - t))
}

/// `|l|_∞`.
pub fn max_length(l: &EdgeLengths) -> f64 {
    l.iter().fold(0.0, f64::max)
}
