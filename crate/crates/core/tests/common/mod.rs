//! Brute-force P1 oracles shared by the integration tests.
//!
//! Nothing here touches the assembly code: basis functions come from
//! inverting the 3x3 vertex matrix of each triangle, integrals from edge
//! midpoint quadrature (exact for quadratics), and stiffness entries from the
//! cotangent formula.

#![allow(dead_code)]

use ks_core::mesh::{build_macro_mesh, MacroKind, Mesh, Point2};
use nalgebra::{DMatrix, Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Coefficients `(a, b, c)` of `φ_k = a + b x + c y` for each vertex.
pub fn basis(p: [Point2; 3]) -> [Vector3<f64>; 3] {
    let m = Matrix3::new(
        1.0, p[0].x, p[0].y, 1.0, p[1].x, p[1].y, 1.0, p[2].x, p[2].y,
    );
    let inv = m.try_inverse().expect("non-degenerate");
    [0, 1, 2].map(|k| inv.column(k).into_owned())
}

pub fn area(p: [Point2; 3]) -> f64 {
    0.5 * ((p[1].x - p[0].x) * (p[2].y - p[0].y) - (p[1].y - p[0].y) * (p[2].x - p[0].x))
}

/// `∫_T f` with the three edge-midpoint rule.
pub fn quad(p: [Point2; 3], f: impl Fn(f64, f64) -> f64) -> f64 {
    let mid = |a: Point2, b: Point2| ((a.x + b.x) / 2.0, (a.y + b.y) / 2.0);
    let pts = [mid(p[0], p[1]), mid(p[1], p[2]), mid(p[2], p[0])];
    area(p) / 3.0 * pts.iter().map(|&(x, y)| f(x, y)).sum::<f64>()
}

pub fn oracle_mass(mesh: &Mesh) -> Vec<f64> {
    let mut m = vec![0.0; mesh.n_vertices()];
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let p = mesh.triangle_points(t);
        let phi = basis(p);
        for k in 0..3 {
            let c = phi[k];
            // ∫ I_h(φ_i) = ∫ φ_i since φ_i is already piecewise linear.
            m[tri[k]] += quad(p, |x, y| c[0] + c[1] * x + c[2] * y);
        }
    }
    m
}

pub fn cot(a: Point2, b: Point2, c: Point2) -> f64 {
    // cotangent of the angle at `a`
    let (ux, uy, vx, vy) = (b.x - a.x, b.y - a.y, c.x - a.x, c.y - a.y);
    (ux * vx + uy * vy) / (ux * vy - uy * vx).abs()
}

pub fn oracle_stiffness(mesh: &Mesh) -> DMatrix<f64> {
    let n = mesh.n_vertices();
    let mut a = DMatrix::zeros(n, n);
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let p = mesh.triangle_points(t);
        for k in 0..3 {
            let (i, j) = (tri[(k + 1) % 3], tri[(k + 2) % 3]);
            let w = 0.5 * cot(p[k], p[(k + 1) % 3], p[(k + 2) % 3]);
            a[(i, j)] -= w;
            a[(j, i)] -= w;
            a[(i, i)] += w;
            a[(j, j)] += w;
        }
    }
    a
}

/// `(C(v) u)_i = Σ_T |T| ∇v·∇φ_i ū_T`, evaluated matrix-free.
pub fn oracle_chemotaxis_apply(mesh: &Mesh, v: &[f64], u: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; mesh.n_vertices()];
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let p = mesh.triangle_points(t);
        let phi = basis(p);
        let grad_v = (0..3).fold([0.0, 0.0], |g, k| {
            [g[0] + v[tri[k]] * phi[k][1], g[1] + v[tri[k]] * phi[k][2]]
        });
        let bary_u = quad(p, |x, y| {
            (0..3)
                .map(|k| u[tri[k]] * (phi[k][0] + phi[k][1] * x + phi[k][2] * y))
                .sum()
        }) / area(p);
        for k in 0..3 {
            out[tri[k]] += area(p) * (grad_v[0] * phi[k][1] + grad_v[1] * phi[k][2]) * bary_u;
        }
    }
    out
}

/// Macro meshes plus randomly perturbed variants, all with <= 200 triangles.
pub fn small_meshes() -> Vec<Mesh> {
    let mut meshes = vec![];
    for n in 1..=3 {
        meshes.push(build_macro_mesh(n, MacroKind::Acute));
        meshes.push(build_macro_mesh(n, MacroKind::NonAcute));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for n in [2, 3] {
        let base = build_macro_mesh(n, MacroKind::Acute);
        let boundary = base.boundary_vertices().to_vec();
        let jitter = 0.05 / n as f64;
        let verts: Vec<Point2> = base
            .vertices()
            .iter()
            .enumerate()
            .map(|(i, p)| {
                if boundary.binary_search(&i).is_ok() {
                    *p
                } else {
                    Point2::new(
                        p.x + rng.gen_range(-jitter..jitter),
                        p.y + rng.gen_range(-jitter..jitter),
                    )
                }
            })
            .collect();
        meshes.push(
            Mesh::new(verts, base.triangles().to_vec()).expect("small jitter keeps orientation"),
        );
    }
    assert!(meshes.iter().all(|m| m.n_triangles() <= 200));
    meshes
}
