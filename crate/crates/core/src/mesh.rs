//! Closed oriented triangulated surfaces stored as Δ-complexes.
//!
//! Edges carry explicit ids so that parallel edges and loops are allowed.
//! A face is an oriented triple of directed edges chaining head to tail:
//! slot `s` runs from corner `s` to corner `s + 1 (mod 3)`, so the corner
//! opposite slot `s` is `s + 2 (mod 3)`.

use std::collections::{BTreeSet, HashSet};
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::geometry::EdgeLengths;
use crate::io::fmt_f64;

/// An edge traversed in a given direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DirectedEdge {
    pub edge: usize,
    /// `true` when traversed from `endpoint_a` to `endpoint_b`.
    pub forward: bool,
}

impl DirectedEdge {
    pub fn new(edge: usize, forward: bool) -> Self {
        Self { edge, forward }
    }

    pub fn reversed(self) -> Self {
        Self {
            edge: self.edge,
            forward: !self.forward,
        }
    }
}

/// Position of a corner: face id and slot 0..3.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Corner {
    pub face: usize,
    pub slot: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceMesh {
    vertex_count: usize,
    edges: Vec<[usize; 2]>,
    faces: Vec<[DirectedEdge; 3]>,
    corners: Vec<[usize; 3]>,
    edge_faces: Vec<Vec<Corner>>,
    vertex_edges: Vec<Vec<usize>>,
    vertex_corners: Vec<Vec<Corner>>,
}

impl SurfaceMesh {
    /// Builds a mesh and its incidence tables.
    ///
    /// Structural defects (unknown ids, broken chains, edges not used by
    /// exactly two face slots) are errors. Orientation, connectivity and
    /// Euler characteristic are checked by [`validate_topology`].
    pub fn new(
        vertex_count: usize,
        edges: Vec<[usize; 2]>,
        faces: Vec<[DirectedEdge; 3]>,
    ) -> Result<Self> {
        for (e, &[a, b]) in edges.iter().enumerate() {
            for v in [a, b] {
                if v >= vertex_count {
                    return Err(Error::UnknownVertex {
                        edge: e,
                        vertex: v,
                        vertex_count,
                    });
                }
            }
        }

        let mut edge_faces = vec![Vec::new(); edges.len()];
        let mut corners = Vec::with_capacity(faces.len());
        for (f, face) in faces.iter().enumerate() {
            for d in face {
                if d.edge >= edges.len() {
                    return Err(Error::UnknownEdge {
                        face: f,
                        edge: d.edge,
                    });
                }
            }
            let tail = |d: DirectedEdge| edges[d.edge][if d.forward { 0 } else { 1 }];
            let head = |d: DirectedEdge| edges[d.edge][if d.forward { 1 } else { 0 }];
            for s in 0..3 {
                if head(face[s]) != tail(face[(s + 1) % 3]) {
                    return Err(Error::BrokenChain { face: f });
                }
            }
            corners.push([tail(face[0]), tail(face[1]), tail(face[2])]);
            for (slot, d) in face.iter().enumerate() {
                edge_faces[d.edge].push(Corner { face: f, slot });
            }
        }
        for (e, uses) in edge_faces.iter().enumerate() {
            match uses.len() {
                2 => {}
                n if n > 2 => return Err(Error::NonManifoldEdge { edge: e, uses: n }),
                n => return Err(Error::DanglingEdge { edge: e, uses: n }),
            }
        }

        let mut vertex_edges = vec![Vec::new(); vertex_count];
        for (e, &[a, b]) in edges.iter().enumerate() {
            vertex_edges[a].push(e);
            if b != a {
                vertex_edges[b].push(e);
            }
        }
        let mut vertex_corners = vec![Vec::new(); vertex_count];
        for (f, cs) in corners.iter().enumerate() {
            for (slot, &v) in cs.iter().enumerate() {
                vertex_corners[v].push(Corner { face: f, slot });
            }
        }

        Ok(Self {
            vertex_count,
            edges,
            faces,
            corners,
            edge_faces,
            vertex_edges,
            vertex_corners,
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    pub fn edge(&self, e: usize) -> [usize; 2] {
        self.edges[e]
    }

    pub fn faces(&self) -> &[[DirectedEdge; 3]] {
        &self.faces
    }

    pub fn face(&self, f: usize) -> [DirectedEdge; 3] {
        self.faces[f]
    }

    /// Corner vertices of face `f`, indexed by slot.
    pub fn face_vertices(&self, f: usize) -> [usize; 3] {
        self.corners[f]
    }

    /// Edge ids of face `f`, indexed by slot.
    pub fn face_edges(&self, f: usize) -> [usize; 3] {
        let [a, b, c] = self.faces[f];
        [a.edge, b.edge, c.edge]
    }

    /// The two face slots using edge `e`.
    pub fn edge_faces(&self, e: usize) -> &[Corner] {
        &self.edge_faces[e]
    }

    pub fn vertex_edges(&self, v: usize) -> &[usize] {
        &self.vertex_edges[v]
    }

    pub fn vertex_corners(&self, v: usize) -> &[Corner] {
        &self.vertex_corners[v]
    }

    pub fn is_loop(&self, e: usize) -> bool {
        self.edges[e][0] == self.edges[e][1]
    }

    /// χ = |V| − |E| + |F|.
    pub fn euler_characteristic(&self) -> i64 {
        self.vertex_count as i64 - self.edges.len() as i64 + self.faces.len() as i64
    }

    /// Connectivity of the 1-skeleton. A mesh without vertices counts as disconnected.
    pub fn is_connected(&self) -> bool {
        if self.vertex_count == 0 {
            return false;
        }
        let mut seen = vec![false; self.vertex_count];
        let mut stack = vec![0];
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = stack.pop() {
            for &e in &self.vertex_edges[v] {
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

    pub fn is_simplicial(&self) -> bool {
        if (0..self.edge_count()).any(|e| self.is_loop(e)) {
            return false;
        }
        let mut pairs = HashSet::new();
        for &[a, b] in &self.edges {
            if !pairs.insert((a.min(b), a.max(b))) {
                return false;
            }
        }
        let mut triples = HashSet::new();
        for cs in &self.corners {
            let mut t = *cs;
            t.sort_unstable();
            if t[0] == t[1] || t[1] == t[2] || !triples.insert(t) {
                return false;
            }
        }
        true
    }

    pub fn max_vertex_degree(&self) -> usize {
        self.vertex_corners.iter().map(Vec::len).max().unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TopologyReport {
    pub chi: i64,
    pub genus: i64,
    pub is_simplicial: bool,
    pub max_vertex_degree: usize,
    pub violations: Vec<String>,
}

impl TopologyReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    /// Valid closed surface of genus at least 2.
    pub fn solver_eligible(&self) -> bool {
        self.is_valid() && self.genus >= 2
    }
}

pub fn validate_topology(mesh: &SurfaceMesh) -> TopologyReport {
    let mut violations = Vec::new();

    for e in 0..mesh.edge_count() {
        let uses = mesh.edge_faces(e);
        let [c0, c1] = [uses[0], uses[1]];
        let d0 = mesh.face(c0.face)[c0.slot];
        let d1 = mesh.face(c1.face)[c1.slot];
        if d0.forward == d1.forward {
            violations.push(format!(
                "edge {e} is traversed in the same direction by faces {} and {}",
                c0.face, c1.face
            ));
        }
    }
    if !mesh.is_connected() {
        violations.push("surface is not connected".to_owned());
    }
    let chi = mesh.euler_characteristic();
    if chi % 2 != 0 {
        violations.push(format!("Euler characteristic {chi} is odd"));
    }
    if 3 * mesh.face_count() != 2 * mesh.edge_count() {
        violations.push(format!(
            "3|F| = {} differs from 2|E| = {}",
            3 * mesh.face_count(),
            2 * mesh.edge_count()
        ));
    }
    if mesh.face_count() == 0 {
        violations.push("mesh has no faces".to_owned());
    }

    TopologyReport {
        chi,
        genus: (2 - chi).div_euclid(2),
        is_simplicial: mesh.is_simplicial(),
        max_vertex_degree: mesh.max_vertex_degree(),
        violations,
    }
}

/// Contents of a mesh file: the combinatorics plus edge lengths.
#[derive(Debug, Clone, PartialEq)]
pub struct MeshFile {
    pub mesh: SurfaceMesh,
    pub lengths: EdgeLengths,
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn parse_num<T: std::str::FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<T> {
    let tok = tok.ok_or_else(|| parse_err(line, format!("missing {what}")))?;
    tok.parse()
        .map_err(|_| parse_err(line, format!("invalid {what} '{tok}'")))
}

fn parse_signed_edge(tok: Option<&str>, line: usize) -> Result<DirectedEdge> {
    let tok = tok.ok_or_else(|| parse_err(line, "face needs three signed edge ids"))?;
    let (forward, digits) = match tok.as_bytes().first() {
        Some(b'-') => (false, &tok[1..]),
        Some(b'+') => (true, &tok[1..]),
        _ => (true, tok),
    };
    let edge = digits
        .parse()
        .map_err(|_| parse_err(line, format!("invalid signed edge id '{tok}'")))?;
    Ok(DirectedEdge { edge, forward })
}

/// Collects `(id, value)` records into a dense vector indexed by id.
fn densify<T>(records: Vec<(usize, T)>, kind: &'static str) -> Result<Vec<T>> {
    let n = records.len();
    let mut slots: Vec<Option<T>> = (0..n).map(|_| None).collect();
    for (id, value) in records {
        if id >= n {
            // Some id below n must then be missing.
            let missing = slots.iter().position(Option::is_none).unwrap_or(n);
            return Err(Error::MissingId { kind, missing });
        }
        slots[id] = Some(value);
    }
    slots
        .into_iter()
        .enumerate()
        .map(|(i, s)| s.ok_or(Error::MissingId { kind, missing: i }))
        .collect()
}

/// Strips comments and surrounding whitespace, yielding `(line number, content)`.
pub(crate) fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, raw)| {
        let line = raw.split('#').next().unwrap_or("").trim();
        (!line.is_empty()).then_some((i + 1, line))
    })
}

pub fn load_mesh(text: &str) -> Result<MeshFile> {
    let mut lines = content_lines(text);
    match lines.next() {
        Some((_, "DCPM 1")) => {}
        Some((n, other)) => return Err(parse_err(n, format!("expected header 'DCPM 1', got '{other}'"))),
        None => return Err(parse_err(1, "empty mesh file")),
    }

    let mut vertex_count = None;
    let mut edges = Vec::new();
    let mut faces = Vec::new();
    let mut seen_edges = BTreeSet::new();
    let mut seen_faces = BTreeSet::new();

    for (n, line) in lines {
        let mut toks = line.split_whitespace();
        let tag = toks.next().unwrap_or_default();
        match tag {
            "v" => {
                if vertex_count.is_some() {
                    return Err(parse_err(n, "vertex count given twice"));
                }
                vertex_count = Some(parse_num::<usize>(toks.next(), n, "vertex count")?);
            }
            "e" => {
                let id: usize = parse_num(toks.next(), n, "edge id")?;
                let a: usize = parse_num(toks.next(), n, "vertex id")?;
                let b: usize = parse_num(toks.next(), n, "vertex id")?;
                let len: f64 = parse_num(toks.next(), n, "edge length")?;
                if !(len > 0.0 && len.is_finite()) {
                    return Err(parse_err(n, format!("edge length {len} must be positive")));
                }
                if !seen_edges.insert(id) {
                    return Err(Error::DuplicateEdge(id));
                }
                edges.push((id, ([a, b], len)));
            }
            "f" => {
                let id: usize = parse_num(toks.next(), n, "face id")?;
                let d = [
                    parse_signed_edge(toks.next(), n)?,
                    parse_signed_edge(toks.next(), n)?,
                    parse_signed_edge(toks.next(), n)?,
                ];
                if !seen_faces.insert(id) {
                    return Err(Error::DuplicateFace(id));
                }
                faces.push((id, d));
            }
            other => return Err(parse_err(n, format!("unknown record '{other}'"))),
        }
        if toks.next().is_some() {
            return Err(parse_err(n, "trailing tokens"));
        }
    }

    let vertex_count = vertex_count.ok_or_else(|| parse_err(1, "missing 'v <count>' line"))?;
    let edges = densify(edges, "edge")?;
    let faces = densify(faces, "face")?;
    let (ends, lens): (Vec<_>, Vec<_>) = edges.into_iter().unzip();
    let mesh = SurfaceMesh::new(vertex_count, ends, faces)?;
    let lengths = EdgeLengths::new(lens)?;
    Ok(MeshFile { mesh, lengths })
}

/// Serializes in the format read by [`load_mesh`], lengths at 17 significant digits.
pub fn write_mesh(mesh: &SurfaceMesh, lengths: &EdgeLengths) -> String {
    let mut out = String::from("DCPM 1\n");
    let _ = writeln!(out, "v {}", mesh.vertex_count());
    for (e, &[a, b]) in mesh.edges().iter().enumerate() {
        let _ = writeln!(out, "e {e} {a} {b} {}", fmt_f64(lengths[e]));
    }
    for (f, face) in mesh.faces().iter().enumerate() {
        let _ = write!(out, "f {f}");
        for d in face {
            let _ = write!(out, " {}{}", if d.forward { '+' } else { '-' }, d.edge);
        }
        out.push('\n');
    }
    out
}
