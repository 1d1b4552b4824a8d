//! Genus-2 hyperbolic fixtures with exact geodesic edge lengths.
//!
//! The base surface is the regular hyperbolic octagon with interior angles
//! π/4, sides glued by the word `a b a⁻¹ b⁻¹ c d c⁻¹ d⁻¹` and cut into eight
//! triangles from the centre. Refinement splits every face at its edge
//! midpoints, measured in the hyperboloid model, so each level is the same
//! curvature −1 surface with a finer geodesic triangulation.

use std::f64::consts::{FRAC_PI_8, PI};

use crate::error::{Error, Result};
use crate::geometry::{hyperbolic_angles, max_length, EdgeLengths, FaceCurvature};
use crate::mesh::{DirectedEdge, SurfaceMesh};
use crate::solver::{newton_solve, SolveConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct ModelSurface {
    pub mesh: SurfaceMesh,
    /// Geodesic lengths on the curvature −1 surface.
    pub lengths: EdgeLengths,
    pub level: usize,
    pub provenance: String,
}

/// Point on the hyperboloid `−t² + x² + y² = −1`, `t > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HyperboloidPoint(pub [f64; 3]);

impl HyperboloidPoint {
    fn minkowski(a: [f64; 3], b: [f64; 3]) -> f64 {
        -a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
    }

    /// `2·asinh(|p − q|/2)`, where `|p − q|` is the (spacelike) Minkowski norm.
    pub fn distance(self, other: Self) -> f64 {
        let d = [0, 1, 2].map(|i| self.0[i] - other.0[i]);
        let chord = Self::minkowski(d, d).max(0.0).sqrt();
        2.0 * (0.5 * chord).asinh()
    }

    pub fn midpoint(self, other: Self) -> Self {
        let s = [0, 1, 2].map(|i| self.0[i] + other.0[i]);
        let norm = (-Self::minkowski(s, s)).sqrt();
        Self(s.map(|x| x / norm))
    }
}

/// Places a triangle with slot lengths `h` (slot `s` joins corners `s`, `s+1`).
pub fn embed_triangle(h: [f64; 3]) -> Option<[HyperboloidPoint; 3]> {
    let angles = hyperbolic_angles(h)?;
    let (c, b, theta) = (h[0], h[2], angles[0]);
    Some([
        HyperboloidPoint([1.0, 0.0, 0.0]),
        HyperboloidPoint([c.cosh(), c.sinh(), 0.0]),
        HyperboloidPoint([b.cosh(), b.sinh() * theta.cos(), b.sinh() * theta.sin()]),
    ])
}

/// Spoke (centre to corner) length of the regular octagon: `arccosh(cot²(π/8))`.
pub fn octagon_spoke_length() -> f64 {
    let cot = 1.0 / FRAC_PI_8.tan();
    (cot * cot).acosh()
}

/// Side length `2·asinh(sin(π/8)·sinh r)` of the regular octagon.
pub fn octagon_side_length() -> f64 {
    2.0 * (FRAC_PI_8.sin() * octagon_spoke_length().sinh()).asinh()
}

/// Vertex 0 is the centre, vertex 1 the single glued corner. Edges 0..8 are
/// the spokes (centre → corner m), edges 8..12 the side loops a, b, c, d.
pub fn gen_octagon_genus2() -> ModelSurface {
    let r = octagon_spoke_length();
    let a = octagon_side_length();
    let mut edges = vec![[0, 1]; 8];
    edges.extend([[1, 1]; 4]);
    let mut lengths = vec![r; 8];
    lengths.extend([a; 4]);

    // Side m of the octagon as (loop, direction) in the word a b a⁻¹ b⁻¹ c d c⁻¹ d⁻¹.
    let word = [(0, true), (1, true), (0, false), (1, false), (2, true), (3, true), (2, false), (3, false)];
    let faces = (0..8)
        .map(|m| {
            let (side, forward) = word[m];
            [
                DirectedEdge::new(m, true),
                DirectedEdge::new(8 + side, forward),
                DirectedEdge::new((m + 1) % 8, false),
            ]
        })
        .collect();

    ModelSurface {
        mesh: SurfaceMesh::new(2, edges, faces).expect("octagon gluing is a valid Δ-complex"),
        lengths: EdgeLengths::new(lengths).expect("positive lengths"),
        level: 0,
        provenance: "regular hyperbolic octagon, angles pi/4, gluing a b a^-1 b^-1 c d c^-1 d^-1".to_owned(),
    }
}

/// Splits every face into four at its edge midpoints.
///
/// Numbering: old vertices keep their ids and the midpoint of edge `e` is
/// vertex `|V| + e`. Edge `e` becomes halves `2e` (tail → midpoint) and
/// `2e + 1` (midpoint → head); face `f` adds interior edges `2|E| + 3f + s`
/// joining the midpoints of slots `s` and `s + 1`. Face `f` becomes faces
/// `4f + s` (corner `s`) and `4f + 3` (centre).
pub fn refine_midpoint(m: &ModelSurface) -> Result<ModelSurface> {
    let mesh = &m.mesh;
    let nv = mesh.vertex_count();
    let ne = mesh.edge_count();
    let nf = mesh.face_count();

    let mut edges = Vec::with_capacity(2 * ne + 3 * nf);
    let mut lengths = Vec::with_capacity(2 * ne + 3 * nf);
    for (e, &[a, b]) in mesh.edges().iter().enumerate() {
        edges.push([a, nv + e]);
        edges.push([nv + e, b]);
        lengths.extend([0.5 * m.lengths[e]; 2]);
    }

    let mut faces = Vec::with_capacity(4 * nf);
    for f in 0..nf {
        let face = mesh.face(f);
        let h = mesh.face_edges(f).map(|e| m.lengths[e]);
        let pts = embed_triangle(h).ok_or(Error::InfeasibleFace { face: f, lengths: h })?;
        let mids: [HyperboloidPoint; 3] = [0, 1, 2].map(|s| pts[s].midpoint(pts[(s + 1) % 3]));
        for s in 0..3 {
            let [a, b] = [face[s].edge, face[(s + 1) % 3].edge];
            edges.push([nv + a, nv + b]);
            lengths.push(mids[s].distance(mids[(s + 1) % 3]));
        }

        let interior = |s: usize| 2 * ne + 3 * f + s;
        for s in 0..3 {
            let out = face[s];
            let into = face[(s + 2) % 3];
            // Half of slot s leaving corner s, half of slot s − 1 entering it.
            let first = if out.forward {
                DirectedEdge::new(2 * out.edge, true)
            } else {
                DirectedEdge::new(2 * out.edge + 1, false)
            };
            let last = if into.forward {
                DirectedEdge::new(2 * into.edge + 1, true)
            } else {
                DirectedEdge::new(2 * into.edge, false)
            };
            faces.push([first, DirectedEdge::new(interior((s + 2) % 3), false), last]);
        }
        faces.push([0, 1, 2].map(|s| DirectedEdge::new(interior(s), true)));
    }

    Ok(ModelSurface {
        mesh: SurfaceMesh::new(nv + ne, edges, faces)?,
        lengths: EdgeLengths::new(lengths)?,
        level: m.level + 1,
        provenance: m.provenance.clone(),
    })
}

/// The octagon fixture refined `levels` times.
pub fn octagon_at_level(levels: usize) -> Result<ModelSurface> {
    let mut m = gen_octagon_genus2();
    for _ in 0..levels {
        m = refine_midpoint(&m)?;
    }
    Ok(m)
}

/// Largest `|Σθ − 2π|` over vertices, with true curvature −1 angles of the stored lengths.
pub fn angle_sum_defect(m: &ModelSurface) -> Result<f64> {
    let mut sums = vec![0.0; m.mesh.vertex_count()];
    for f in 0..m.mesh.face_count() {
        let h = m.mesh.face_edges(f).map(|e| m.lengths[e]);
        let t = hyperbolic_angles(h).ok_or(Error::InfeasibleFace { face: f, lengths: h })?;
        for (slot, &v) in m.mesh.face_vertices(f).iter().enumerate() {
            sums[v] += t[slot];
        }
    }
    Ok(sums.iter().fold(0.0_f64, |acc, s| acc.max((s - 2.0 * PI).abs())))
}

/// Dual-graph distance of every face from `marked`, through shared edges.
pub fn dual_distances(mesh: &SurfaceMesh, marked: usize) -> Vec<usize> {
    let mut dist = vec![usize::MAX; mesh.face_count()];
    let mut queue = std::collections::VecDeque::from([marked]);
    dist[marked] = 0;
    while let Some(f) = queue.pop_front() {
        for e in mesh.face_edges(f) {
            for c in mesh.edge_faces(e) {
                if dist[c.face] == usize::MAX {
                    dist[c.face] = dist[f] + 1;
                    queue.push_back(c.face);
                }
            }
        }
    }
    dist
}

/// Background curvature assignments for fixtures.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KappaSpec {
    Constant(f64),
    /// `κ(σ) = −1 + amplitude·s(σ)`, `s` the dual distance from face 0 scaled to [0, 1].
    DualDistance { amplitude: f64 },
}

impl KappaSpec {
    pub fn build(&self, mesh: &SurfaceMesh) -> Result<FaceCurvature> {
        match *self {
            KappaSpec::Constant(k) => FaceCurvature::constant(mesh.face_count(), k),
            KappaSpec::DualDistance { amplitude } => {
                let d = dual_distances(mesh, 0);
                let far = d.iter().copied().max().unwrap_or(0).max(1) as f64;
                FaceCurvature::new(d.iter().map(|&x| -1.0 + amplitude * x as f64 / far).collect())
            }
        }
    }

    /// The smooth conformal factor on the curvature −1 fixture, when known:
    /// `e^{2ū}` rescales curvature −1 to κ for `ū = −½·ln(−κ)`.
    pub fn smooth_solution(&self) -> Option<f64> {
        match *self {
            KappaSpec::Constant(k) => Some(-0.5 * (-k).ln()),
            KappaSpec::DualDistance { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub level: usize,
    pub max_len: f64,
    pub margin: f64,
    pub iters: usize,
    pub residual: f64,
    /// `‖u − ū‖_∞` when the smooth solution is known.
    pub error_inf: Option<f64>,
    pub converged: bool,
}

pub const CONVERGENCE_HEADER: &str = "level,max_len,margin,iters,residual,error_inf";

impl ConvergenceRow {
    pub fn to_csv(&self) -> String {
        use crate::io::fmt_f64;
        format!(
            "{},{},{},{},{},{}",
            self.level,
            fmt_f64(self.max_len),
            fmt_f64(self.margin),
            self.iters,
            fmt_f64(self.residual),
            self.error_inf.map_or_else(|| "nan".to_owned(), fmt_f64),
        )
    }
}

/// Solves on the octagon fixture at each requested level (ascending) and
/// records the error against the smooth solution.
pub fn convergence_study(levels: &[usize], kappa: KappaSpec, cfg: &SolveConfig) -> Result<Vec<ConvergenceRow>> {
    let mut levels = levels.to_vec();
    levels.sort_unstable();
    levels.dedup();
    let mut rows = Vec::with_capacity(levels.len());
    let mut m = gen_octagon_genus2();
    for level in levels {
        while m.level < level {
            m = refine_midpoint(&m)?;
        }
        let k = kappa.build(&m.mesh)?;
        let margin = crate::geometry::acuteness_margin(&m.mesh, &k, &m.lengths)?;
        let r = newton_solve(&m.mesh, &k, &m.lengths, cfg)?;
        let error_inf = kappa
            .smooth_solution()
            .map(|ubar| r.u.iter().fold(0.0_f64, |acc, x| acc.max((x - ubar).abs())));
        rows.push(ConvergenceRow {
            level,
            max_len: max_length(&m.lengths),
            margin,
            iters: r.iterations,
            residual: r.residual_inf,
            error_inf,
            converged: r.converged,
        });
    }
    Ok(rows)
}
