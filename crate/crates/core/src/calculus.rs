//! Discrete calculus on a graph: weighted gradients of vertex functions,
//! divergence of flows, weighted Laplacians, isoperimetry, and a numeric
//! harness for the divergence-form elliptic estimate.
//!
//! Each undirected edge is stored once with a canonical direction from the
//! lower to the higher vertex id. A [`Flow`] holds one value per edge, read
//! with the opposite sign in the reverse direction. Loops are allowed and
//! carry no flow.

use crate::error::{Error, Result};
use crate::geometry::EdgeLengths;
use crate::linalg::{max_abs, SymmetricMatrix};
use crate::mesh::SurfaceMesh;

/// Exhaustive isoperimetric enumeration limit.
pub const MAX_ENUMERATION_VERTICES: usize = 24;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    vertex_count: usize,
    edges: Vec<[usize; 2]>,
    incident: Vec<Vec<usize>>,
}

impl Graph {
    /// Edge endpoints are reordered so that each edge runs low → high.
    pub fn new(vertex_count: usize, edges: impl IntoIterator<Item = [usize; 2]>) -> Self {
        let edges: Vec<[usize; 2]> = edges.into_iter().map(|[a, b]| [a.min(b), a.max(b)]).collect();
        let mut incident = vec![Vec::new(); vertex_count];
        for (e, &[a, b]) in edges.iter().enumerate() {
            assert!(b < vertex_count, "edge {e} references vertex {b} >= {vertex_count}");
            incident[a].push(e);
            if b != a {
                incident[b].push(e);
            }
        }
        Self {
            vertex_count,
            edges,
            incident,
        }
    }

    /// The 1-skeleton of a mesh, edge ids preserved.
    pub fn skeleton(mesh: &SurfaceMesh) -> Self {
        Self::new(mesh.vertex_count(), mesh.edges().iter().copied())
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    pub fn incident(&self, v: usize) -> &[usize] {
        &self.incident[v]
    }

    pub fn is_connected(&self) -> bool {
        if self.vertex_count == 0 {
            return false;
        }
        let mut seen = vec![false; self.vertex_count];
        let mut stack = vec![0];
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = stack.pop() {
            for &e in &self.incident[v] {
                let [a, b] = self.edges[e];
                let w = if a == v { b } else { a };
                if !seen[w] {
                    seen[w] = true;
                    count += 1;
                    stack.push(w);
                }
            }
        }
        count == self.vertex_count
    }
}

/// Real value per vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct VertexField(pub Vec<f64>);

impl VertexField {
    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn max_abs(&self) -> f64 {
        max_abs(&self.0)
    }
}

/// Symmetric value per undirected edge.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeWeight(pub Vec<f64>);

/// Antisymmetric edge function, stored in the canonical (low → high) direction.
#[derive(Debug, Clone, PartialEq)]
pub struct Flow(Vec<f64>);

impl Flow {
    /// Values in canonical direction; entries on loops are forced to zero.
    pub fn new(graph: &Graph, mut values: Vec<f64>) -> Self {
        assert_eq!(values.len(), graph.edge_count());
        for (x, &[a, b]) in values.iter_mut().zip(graph.edges()) {
            if a == b {
                *x = 0.0;
            }
        }
        Self(values)
    }

    pub fn canonical(&self) -> &[f64] {
        &self.0
    }

    /// Value of edge `e` read leaving vertex `from`.
    pub fn get(&self, graph: &Graph, e: usize, from: usize) -> f64 {
        let [a, b] = graph.edges()[e];
        debug_assert!(from == a || from == b);
        if from == a {
            self.0[e]
        } else {
            -self.0[e]
        }
    }

    pub fn max_abs(&self) -> f64 {
        max_abs(&self.0)
    }
}

/// `(∇f)_{ij} = η_{ij}(f_j − f_i)`.
pub fn gradient(graph: &Graph, eta: &EdgeWeight, f: &VertexField) -> Flow {
    let values = graph
        .edges()
        .iter()
        .zip(&eta.0)
        .map(|(&[a, b], w)| w * (f.0[b] - f.0[a]))
        .collect();
    Flow::new(graph, values)
}

/// `div(x)_i = Σ_{j∼i} x_{ij}`, accumulated in edge order.
pub fn divergence(graph: &Graph, x: &Flow) -> VertexField {
    let mut out = vec![0.0; graph.vertex_count()];
    for (&[a, b], &v) in graph.edges().iter().zip(&x.0) {
        if a != b {
            out[a] += v;
            out[b] -= v;
        }
    }
    VertexField(out)
}

/// `(Δf)_i = Σ_{j∼i} η_{ij}(f_j − f_i)`.
pub fn laplacian_apply(graph: &Graph, eta: &EdgeWeight, f: &VertexField) -> VertexField {
    divergence(graph, &gradient(graph, eta, f))
}

/// Matrix of Δ_η: off-diagonal η summed over parallel edges, diagonal −Σ η.
pub fn laplacian_matrix(graph: &Graph, eta: &EdgeWeight) -> SymmetricMatrix {
    let mut m = SymmetricMatrix::new(graph.vertex_count());
    for (&[a, b], &w) in graph.edges().iter().zip(&eta.0) {
        if a != b {
            m.add_sym(a, b, w);
            m.add_diag(a, -w);
            m.add_diag(b, -w);
        }
    }
    m
}

/// −Δ_η, positive semi-definite for η > 0.
pub(crate) fn negated_laplacian(graph: &Graph, eta: &EdgeWeight) -> SymmetricMatrix {
    let mut m = SymmetricMatrix::new(graph.vertex_count());
    for (&[a, b], &w) in graph.edges().iter().zip(&eta.0) {
        if a != b {
            m.add_sym(a, b, -w);
            m.add_diag(a, w);
            m.add_diag(b, w);
        }
    }
    m
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerimeterArea {
    pub perimeter: f64,
    pub area: f64,
    pub total_area: f64,
}

/// `|V_l|_l = Σ_e l_e²` over all edges, loops included.
pub fn total_area(l: &EdgeLengths) -> f64 {
    l.iter().map(|x| x * x).sum()
}

/// `|∂V₀|_l` and `|V₀|_l` for the subset marked `true` in `subset`.
pub fn perimeter_area(graph: &Graph, l: &EdgeLengths, subset: &[bool]) -> PerimeterArea {
    let mut perimeter = 0.0;
    let mut area = 0.0;
    for (e, &[a, b]) in graph.edges().iter().enumerate() {
        match (subset[a], subset[b]) {
            (true, true) => area += l[e] * l[e],
            (true, false) | (false, true) => perimeter += l[e],
            (false, false) => {}
        }
    }
    PerimeterArea {
        perimeter,
        area,
        total_area: total_area(l),
    }
}

/// Smallest C such that `min{|V₀|, |V| − |V₀|} ≤ C·|∂V₀|²` for every vertex subset.
///
/// Vertices are decided depth first and each edge is charged once both of its
/// ends are decided, so every subset's sums are accumulated from scratch along
/// its own branch.
pub fn isoperimetric_constant(graph: &Graph, l: &EdgeLengths) -> Result<f64> {
    let n = graph.vertex_count();
    if n > MAX_ENUMERATION_VERTICES {
        return Err(Error::TooManyVertices {
            vertices: n,
            limit: MAX_ENUMERATION_VERTICES,
        });
    }
    if !graph.is_connected() {
        return Err(Error::Disconnected);
    }

    // Edges charged at their higher endpoint, paired with the lower one.
    let mut charged: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    for (e, &[a, b]) in graph.edges().iter().enumerate() {
        charged[b].push((e, a));
    }

    struct Search<'a> {
        charged: &'a [Vec<(usize, usize)>],
        l: &'a EdgeLengths,
        total: f64,
        inside: Vec<bool>,
        best: f64,
    }

    impl Search<'_> {
        fn visit(&mut self, v: usize, perimeter: f64, area: f64) {
            if v == self.charged.len() {
                // Only ∅ and V have zero perimeter on a connected graph.
                if perimeter > 0.0 {
                    let ratio = area.min(self.total - area) / (perimeter * perimeter);
                    self.best = self.best.max(ratio);
                }
                return;
            }
            for take in [false, true] {
                self.inside[v] = take;
                let (mut p, mut a) = (perimeter, area);
                for &(e, other) in &self.charged[v] {
                    let other_in = self.inside[other];
                    let len = self.l[e];
                    if take && other_in {
                        a += len * len;
                    } else if take != other_in {
                        p += len;
                    }
                }
                self.visit(v + 1, p, a);
            }
            self.inside[v] = false;
        }
    }

    let mut search = Search {
        charged: &charged,
        l,
        total: total_area(l),
        inside: vec![false; n],
        best: 0.0,
    };
    search.visit(0, 0.0, 0.0);
    Ok(search.best)
}

/// Constants of the divergence-form elliptic estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EllipticConstants {
    /// Isoperimetric constant of (G, l).
    pub c1: f64,
    /// `|x_ij| ≤ c2·l_ij²`.
    pub c2: f64,
    /// `η_ij ≥ c3`.
    pub c3: f64,
    /// `|y_i| ≤ c4·D_ii·|l|·|V|_l^{1/2}`.
    pub c4: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EllipticReport {
    /// Mean-zero solution of Δ_η h = div(x).
    pub h_inf: f64,
    pub bound_laplacian: f64,
    pub ratio_laplacian: f64,
    /// Solution of (D − Δ_η) w = div(x) + y, when D is given.
    pub w_inf: Option<f64>,
    pub bound_shifted: Option<f64>,
    pub ratio_shifted: Option<f64>,
    pub violations: Vec<String>,
}

impl EllipticReport {
    pub fn pass(&self) -> bool {
        self.violations.is_empty()
            && self.ratio_laplacian <= 1.0
            && self.ratio_shifted.is_none_or(|r| r <= 1.0)
    }
}

fn ratio(value: f64, bound: f64) -> f64 {
    if value == 0.0 {
        0.0
    } else {
        value / bound
    }
}

/// Numerically checks both parts of the elliptic estimate on one instance.
///
/// Precondition failures are listed in the report rather than returned as
/// errors; only a singular system is an error.
pub fn elliptic_estimate_check(
    graph: &Graph,
    l: &EdgeLengths,
    eta: &EdgeWeight,
    x: &Flow,
    y: Option<&VertexField>,
    d: Option<&VertexField>,
    c: EllipticConstants,
) -> Result<EllipticReport> {
    let n = graph.vertex_count();
    let mut violations = Vec::new();
    let scale = crate::geometry::max_length(l) * total_area(l).sqrt();

    for (e, &w) in eta.0.iter().enumerate() {
        let [a, b] = graph.edges()[e];
        if a != b && !(w >= c.c3) {
            violations.push(format!("eta[{e}] = {w} < C3 = {}", c.c3));
        }
    }
    for (e, &v) in x.canonical().iter().enumerate() {
        let cap = c.c2 * l[e] * l[e];
        if v.abs() > cap {
            violations.push(format!("|x[{e}]| = {} > C2*l^2 = {cap}", v.abs()));
        }
    }
    if let Some(d) = d {
        if d.0.iter().any(|&v| v < 0.0) {
            violations.push("D has a negative entry".to_owned());
        }
        if d.0.iter().all(|&v| v == 0.0) {
            violations.push("D is zero".to_owned());
        }
        if let Some(y) = y {
            for (i, (&yi, &di)) in y.0.iter().zip(&d.0).enumerate() {
                let cap = c.c4 * di * scale;
                if yi.abs() > cap {
                    violations.push(format!("|y[{i}]| = {} > C4*D*|l|*|V|^1/2 = {cap}", yi.abs()));
                }
            }
        }
    } else if y.is_some() {
        violations.push("y given without D".to_owned());
    }

    let div = divergence(graph, x);
    let neg_lap = negated_laplacian(graph, eta);

    // −Δ_η is positive definite once one vertex is pinned; pin the last one,
    // then shift to the mean-zero representative.
    let mut h = vec![0.0; n];
    if n > 1 {
        let reduced = neg_lap.leading_block(n - 1);
        let rhs: Vec<f64> = div.0[..n - 1].iter().map(|v| -v).collect();
        let sol = reduced.cholesky()?.solve(&rhs);
        h[..n - 1].copy_from_slice(&sol);
        let mean = h.iter().sum::<f64>() / n as f64;
        h.iter_mut().for_each(|v| *v -= mean);
    }
    let sqrt_c1 = (c.c1 + 1.0).sqrt();
    let bound_laplacian = 4.0 * c.c2 * sqrt_c1 / c.c3 * scale;
    let h_inf = max_abs(&h);

    let (w_inf, bound_shifted) = match d {
        Some(d) => {
            let mut shifted = neg_lap;
            for (i, &di) in d.0.iter().enumerate() {
                shifted.add_diag(i, di);
            }
            let rhs: Vec<f64> = match y {
                Some(y) => div.0.iter().zip(&y.0).map(|(a, b)| a + b).collect(),
                None => div.0.clone(),
            };
            let w = shifted.cholesky()?.solve(&rhs);
            let bound = (c.c4 + 8.0 * c.c2 * sqrt_c1 / c.c3) * scale;
            (Some(max_abs(&w)), Some(bound))
        }
        None => (None, None),
    };

    Ok(EllipticReport {
        h_inf,
        bound_laplacian,
        ratio_laplacian: ratio(h_inf, bound_laplacian),
        w_inf,
        bound_shifted,
        ratio_shifted: w_inf.zip(bound_shifted).map(|(v, b)| ratio(v, b)),
        violations,
    })
}
