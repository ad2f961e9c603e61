//! Uniform grid of square macroelements, each split into 14 triangles.
//!
//! In macro-local coordinates `[0, 1]^2` a macroelement has corners `C0..C3`
//! (counter-clockwise from the origin), edge midpoints `M0..M3` (`M_q` on the
//! edge leaving `C_q`) and four interior vertices
//!
//! ```text
//!   P0 = (p, p)   P1 = (1 - r, r)   P2 = (1 - p, 1 - p)   P3 = (r, 1 - r)
//! ```
//!
//! `P_q` sits on the diagonal through corner `C_q`. The inner quadrilateral
//! `P0 P1 P2 P3` is a rhombus, split along `P0 P2`. The triangles are
//!
//! ```text
//!   (C_q, M_q, P_q), (C_q, P_q, M_{q-1}), (M_q, P_{q+1}, P_q)   q = 0..3
//!   (P0, P1, P2), (P0, P2, P3)
//! ```
//!
//! With `p > r` the split runs along the short diagonal of the rhombus and,
//! for the default offsets, every angle is below 76 degrees. Pulling `P1` and
//! `P3` toward the centre (`r > p`) turns the split into the long diagonal and
//! creates obtuse angles at `P1` and `P3`.

use super::{MacroKind, Mesh, Point2};

/// Offsets of the interior macroelement vertices, in macro-local units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MacroGeometry {
    /// Distance of `P0` and `P2` from their corners along each axis.
    pub p: f64,
    /// Distance of `P1` and `P3` from their corners along each axis.
    pub r: f64,
}

impl MacroGeometry {
    /// Max angle 75.3 degrees; `sqrt(2) p / nsquare` is the mesh size.
    pub const ACUTE: MacroGeometry = MacroGeometry { p: 0.358, r: 0.316 };
    /// Obtuse angles of about 121 degrees at `P1` and `P3`.
    pub const NON_ACUTE: MacroGeometry = MacroGeometry { p: 0.358, r: 0.42 };

    pub fn for_kind(kind: MacroKind) -> MacroGeometry {
        match kind {
            MacroKind::NonAcute => Self::NON_ACUTE,
            _ => Self::ACUTE,
        }
    }
}

/// Number of vertices of an `n x n` macroelement mesh.
pub fn macro_vertex_count(n: usize) -> usize {
    (n + 1) * (n + 1) + 2 * n * (n + 1) + 4 * n * n
}

/// Builds the `nsquare x nsquare` macroelement triangulation of
/// `[-1/2, 1/2]^2` with `14 nsquare^2` triangles.
///
/// Vertex numbering is deterministic: macro corners row by row, then
/// midpoints of horizontal macro edges, then midpoints of vertical macro
/// edges, then the four interior vertices of each macroelement.
///
/// # Panics
///
/// Panics if `nsquare == 0` or `kind` is [`MacroKind::External`].
pub fn build_macro_mesh(nsquare: usize, kind: MacroKind) -> Mesh {
    assert!(nsquare >= 1, "nsquare must be positive");
    assert!(
        kind != MacroKind::External,
        "external meshes are not generated"
    );
    build_with_geometry(nsquare, kind, MacroGeometry::for_kind(kind))
}

pub(crate) fn build_with_geometry(n: usize, kind: MacroKind, geo: MacroGeometry) -> Mesh {
    let nf = n as f64;
    let coord = |cell: usize, local: f64| -0.5 + (cell as f64 + local) / nf;

    let corner = |i: usize, j: usize| j * (n + 1) + i;
    let h_base = (n + 1) * (n + 1);
    let hmid = |i: usize, j: usize| h_base + j * n + i;
    let v_base = h_base + n * (n + 1);
    let vmid = |i: usize, j: usize| v_base + j * (n + 1) + i;
    let p_base = v_base + n * (n + 1);
    let interior = |i: usize, j: usize, q: usize| p_base + 4 * (j * n + i) + q;

    let mut vertices = vec![Point2::default(); macro_vertex_count(n)];
    for j in 0..=n {
        for i in 0..=n {
            vertices[corner(i, j)] = Point2::new(coord(i, 0.0), coord(j, 0.0));
        }
    }
    for j in 0..=n {
        for i in 0..n {
            vertices[hmid(i, j)] = Point2::new(coord(i, 0.5), coord(j, 0.0));
        }
    }
    for j in 0..n {
        for i in 0..=n {
            vertices[vmid(i, j)] = Point2::new(coord(i, 0.0), coord(j, 0.5));
        }
    }
    let MacroGeometry { p, r } = geo;
    let local_interior = [(p, p), (1.0 - r, r), (1.0 - p, 1.0 - p), (r, 1.0 - r)];
    for j in 0..n {
        for i in 0..n {
            for (q, &(lx, ly)) in local_interior.iter().enumerate() {
                vertices[interior(i, j, q)] = Point2::new(coord(i, lx), coord(j, ly));
            }
        }
    }

    let mut triangles = Vec::with_capacity(14 * n * n);
    for j in 0..n {
        for i in 0..n {
            let c = [
                corner(i, j),
                corner(i + 1, j),
                corner(i + 1, j + 1),
                corner(i, j + 1),
            ];
            let m = [hmid(i, j), vmid(i + 1, j), hmid(i, j + 1), vmid(i, j)];
            let pv = [0, 1, 2, 3].map(|q| interior(i, j, q));
            for q in 0..4 {
                let prev = (q + 3) % 4;
                let next = (q + 1) % 4;
                triangles.push([c[q], m[q], pv[q]]);
                triangles.push([c[q], pv[q], m[prev]]);
                triangles.push([m[q], pv[next], pv[q]]);
            }
            triangles.push([pv[0], pv[1], pv[2]]);
            triangles.push([pv[0], pv[2], pv[3]]);
        }
    }

    Mesh::with_provenance(vertices, triangles, kind, Some(n))
        .expect("macroelement construction yields valid triangles")
}
