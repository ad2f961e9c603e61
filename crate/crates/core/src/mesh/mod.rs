//! Triangle meshes of the unit square `[-1/2, 1/2]^2`.
//!
//! A [`Mesh`] is immutable once built. Every constructor validates that the
//! triangles reference existing vertices and are counter-clockwise with
//! strictly positive area; [`Mesh::check_conformity`] additionally verifies
//! that the triangles form a conforming triangulation of a simply connected
//! region.

mod io;
mod macro_grid;

use std::collections::HashMap;
use std::fmt;

use crate::error::{Error, Result};

pub use io::{load_mesh, parse_mesh, save_mesh, write_mesh};
pub use macro_grid::{build_macro_mesh, MacroGeometry};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dist(self, other: Point2) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Provenance of a mesh.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MacroKind {
    /// Macroelement grid whose 14 triangles are all acute.
    Acute,
    /// Same topology as [`MacroKind::Acute`], with interior vertices moved so
    /// that every macroelement contains obtuse triangles.
    NonAcute,
    /// Anything not produced by [`build_macro_mesh`].
    External,
}

impl MacroKind {
    pub fn as_str(self) -> &'static str {
        match self {
            MacroKind::Acute => "acute",
            MacroKind::NonAcute => "nonacute",
            MacroKind::External => "external",
        }
    }
}

impl fmt::Display for MacroKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for MacroKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "acute" => Ok(MacroKind::Acute),
            "nonacute" | "obtuse" => Ok(MacroKind::NonAcute),
            "external" => Ok(MacroKind::External),
            _ => Err(Error::InvalidConfig(format!("unknown mesh kind `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    vertices: Vec<Point2>,
    triangles: Vec<[usize; 3]>,
    boundary_vertices: Vec<usize>,
    macro_kind: MacroKind,
    nsquare: Option<usize>,
}

/// Extreme interior angles over all triangles of a mesh.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngleReport {
    pub max_angle_deg: f64,
    pub min_angle_deg: f64,
    pub is_acute: bool,
    /// Triangle holding the largest angle.
    pub worst_triangle: usize,
}

impl AngleReport {
    /// `β` in `max angle = 90° - β`, in degrees. Negative for non-acute meshes.
    pub fn acuteness_margin_deg(&self) -> f64 {
        90.0 - self.max_angle_deg
    }
}

/// Twice the signed area of the triangle `(a, b, c)`.
#[inline]
pub(crate) fn cross(a: Point2, b: Point2, c: Point2) -> f64 {
    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
}

impl Mesh {
    /// Builds an externally supplied mesh, validating indices and orientation.
    pub fn new(vertices: Vec<Point2>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        Self::with_provenance(vertices, triangles, MacroKind::External, None)
    }

    pub(crate) fn with_provenance(
        vertices: Vec<Point2>,
        triangles: Vec<[usize; 3]>,
        macro_kind: MacroKind,
        nsquare: Option<usize>,
    ) -> Result<Self> {
        if let Some((i, p)) = vertices
            .iter()
            .enumerate()
            .find(|(_, p)| !p.x.is_finite() || !p.y.is_finite())
        {
            return Err(Error::InvalidMesh(format!(
                "vertex {i} has non-finite coordinates ({}, {})",
                p.x, p.y
            )));
        }
        for (t, tri) in triangles.iter().enumerate() {
            if let Some(&bad) = tri.iter().find(|&&i| i >= vertices.len()) {
                return Err(Error::InvalidMesh(format!(
                    "triangle {t} references vertex {bad}, but the mesh has {} vertices",
                    vertices.len()
                )));
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(Error::InvalidMesh(format!(
                    "triangle {t} repeats a vertex: {tri:?}"
                )));
            }
            let area = 0.5 * cross(vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]);
            if area.is_nan() || area <= 0.0 {
                return Err(Error::DegenerateTriangle { index: t, area });
            }
        }
        let boundary_vertices = boundary_vertices_of(&triangles);
        Ok(Self {
            vertices,
            triangles,
            boundary_vertices,
            macro_kind,
            nsquare,
        })
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    /// Sorted indices of vertices lying on a boundary edge.
    pub fn boundary_vertices(&self) -> &[usize] {
        &self.boundary_vertices
    }

    pub fn macro_kind(&self) -> MacroKind {
        self.macro_kind
    }

    pub fn nsquare(&self) -> Option<usize> {
        self.nsquare
    }

    pub fn triangle_points(&self, t: usize) -> [Point2; 3] {
        self.triangles[t].map(|i| self.vertices[i])
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangle_points(t);
        0.5 * cross(a, b, c)
    }

    pub fn total_area(&self) -> f64 {
        (0..self.n_triangles()).map(|t| self.triangle_area(t)).sum()
    }

    /// Unique undirected edges `(i, j)` with `i < j`, in first-seen order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut seen = HashMap::with_capacity(self.triangles.len() * 3 / 2 + 8);
        let mut edges = Vec::with_capacity(self.triangles.len() * 3 / 2 + 8);
        for tri in &self.triangles {
            for k in 0..3 {
                let e = ordered(tri[k], tri[(k + 1) % 3]);
                if seen.insert(e, ()).is_none() {
                    edges.push(e);
                }
            }
        }
        edges
    }

    /// Largest triangle diameter, i.e. the longest edge in the mesh.
    pub fn mesh_size(&self) -> Result<f64> {
        if self.triangles.is_empty() {
            return Err(Error::EmptyMesh);
        }
        let h = (0..self.n_triangles())
            .map(|t| {
                let [a, b, c] = self.triangle_points(t);
                a.dist(b).max(b.dist(c)).max(c.dist(a))
            })
            .fold(0.0, f64::max);
        Ok(h)
    }

    /// Exact extreme angles over all `3T` triangle corners.
    pub fn acuteness_report(&self) -> Result<AngleReport> {
        if self.triangles.is_empty() {
            return Err(Error::EmptyMesh);
        }
        let mut report = AngleReport {
            max_angle_deg: f64::NEG_INFINITY,
            min_angle_deg: f64::INFINITY,
            is_acute: false,
            worst_triangle: 0,
        };
        for t in 0..self.n_triangles() {
            let area = self.triangle_area(t);
            if area.is_nan() || area <= 0.0 {
                return Err(Error::DegenerateTriangle { index: t, area });
            }
            for angle in triangle_angles_deg(self.triangle_points(t)) {
                if angle > report.max_angle_deg {
                    report.max_angle_deg = angle;
                    report.worst_triangle = t;
                }
                report.min_angle_deg = report.min_angle_deg.min(angle);
            }
        }
        report.is_acute = report.max_angle_deg < 90.0;
        Ok(report)
    }

    /// Checks that the triangles form a conforming triangulation of a simply
    /// connected region: every edge is shared by at most two triangles with
    /// opposite orientations, no vertex is isolated, no vertex hangs in the
    /// middle of a boundary edge, and `V - E + T = 1`.
    pub fn check_conformity(&self) -> Result<()> {
        if self.triangles.is_empty() {
            return Err(Error::EmptyMesh);
        }
        // directed edge -> triangle
        let mut directed: HashMap<(usize, usize), usize> =
            HashMap::with_capacity(self.triangles.len() * 3);
        for (t, tri) in self.triangles.iter().enumerate() {
            for k in 0..3 {
                let e = (tri[k], tri[(k + 1) % 3]);
                if let Some(other) = directed.insert(e, t) {
                    return Err(Error::InvalidMesh(format!(
                        "triangles {other} and {t} traverse edge {e:?} in the same direction"
                    )));
                }
            }
        }
        let mut used = vec![false; self.vertices.len()];
        for tri in &self.triangles {
            for &i in tri {
                used[i] = true;
            }
        }
        if let Some(i) = used.iter().position(|u| !u) {
            return Err(Error::InvalidMesh(format!(
                "vertex {i} belongs to no triangle"
            )));
        }

        let n_edges = self.edges().len();
        let euler = self.vertices.len() as i64 - n_edges as i64 + self.triangles.len() as i64;
        if euler != 1 {
            return Err(Error::InvalidMesh(format!(
                "Euler characteristic V - E + T = {euler}, expected 1"
            )));
        }

        let boundary_edges: Vec<(usize, usize)> = directed
            .keys()
            .filter(|&&(a, b)| !directed.contains_key(&(b, a)))
            .copied()
            .collect();
        self.check_hanging_nodes(&boundary_edges)
    }

    fn check_hanging_nodes(&self, boundary_edges: &[(usize, usize)]) -> Result<()> {
        let h = self.mesh_size()?;
        let (mut xmin, mut ymin) = (f64::INFINITY, f64::INFINITY);
        for p in &self.vertices {
            xmin = xmin.min(p.x);
            ymin = ymin.min(p.y);
        }
        let cell = h.max(f64::MIN_POSITIVE);
        let key = |p: Point2| {
            (
                ((p.x - xmin) / cell).floor() as i64,
                ((p.y - ymin) / cell).floor() as i64,
            )
        };
        let mut buckets: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
        for (i, &p) in self.vertices.iter().enumerate() {
            buckets.entry(key(p)).or_default().push(i);
        }
        for &(a, b) in boundary_edges {
            let (pa, pb) = (self.vertices[a], self.vertices[b]);
            let len = pa.dist(pb);
            let (ka, kb) = (key(pa), key(pb));
            for bx in ka.0.min(kb.0)..=ka.0.max(kb.0) {
                for by in ka.1.min(kb.1)..=ka.1.max(kb.1) {
                    let Some(candidates) = buckets.get(&(bx, by)) else {
                        continue;
                    };
                    for &c in candidates {
                        if c == a || c == b {
                            continue;
                        }
                        let pc = self.vertices[c];
                        let off_line = cross(pa, pb, pc).abs() / len;
                        let along = (pc.x - pa.x) * (pb.x - pa.x) + (pc.y - pa.y) * (pb.y - pa.y);
                        if off_line <= 1e-12 * len && along > 0.0 && along < len * len {
                            return Err(Error::InvalidMesh(format!(
                                "vertex {c} hangs on boundary edge ({a}, {b})"
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

fn ordered(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

fn boundary_vertices_of(triangles: &[[usize; 3]]) -> Vec<usize> {
    let mut count: HashMap<(usize, usize), u32> = HashMap::with_capacity(triangles.len() * 3);
    for tri in triangles {
        for k in 0..3 {
            *count.entry(ordered(tri[k], tri[(k + 1) % 3])).or_insert(0) += 1;
        }
    }
    let mut boundary: Vec<usize> = count
        .into_iter()
        .filter(|&(_, c)| c == 1)
        .flat_map(|((a, b), _)| [a, b])
        .collect();
    boundary.sort_unstable();
    boundary.dedup();
    boundary
}

/// Interior angles in degrees at the three corners, in vertex order.
pub fn triangle_angles_deg(p: [Point2; 3]) -> [f64; 3] {
    let angle_at = |a: Point2, b: Point2, c: Point2| {
        let (ux, uy) = (b.x - a.x, b.y - a.y);
        let (vx, vy) = (c.x - a.x, c.y - a.y);
        let dot = ux * vx + uy * vy;
        let crs = ux * vy - uy * vx;
        crs.abs().atan2(dot).to_degrees()
    };
    [
        angle_at(p[0], p[1], p[2]),
        angle_at(p[1], p[2], p[0]),
        angle_at(p[2], p[0], p[1]),
    ]
}

/// Free-function form of [`Mesh::acuteness_report`].
pub fn acuteness_report(mesh: &Mesh) -> Result<AngleReport> {
    mesh.acuteness_report()
}

/// Free-function form of [`Mesh::mesh_size`].
pub fn mesh_size(mesh: &Mesh) -> Result<f64> {
    mesh.mesh_size()
}
