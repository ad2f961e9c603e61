//! Assembled operators against independent brute-force evaluations.

mod common;

use common::{oracle_chemotaxis_apply, oracle_mass, oracle_stiffness, small_meshes};
use ks_core::fem::P1Space;
use ks_core::mesh::{build_macro_mesh, MacroKind};
use ks_core::{discrete_laplacian, nodal_interpolate, FeFunction};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn lumped_mass_matches_oracle() {
    for mesh in small_meshes() {
        let m = P1Space::new(&mesh).lumped_mass();
        let oracle = oracle_mass(&mesh);
        for (a, b) in m.diagonal().iter().zip(&oracle) {
            assert!((a - b).abs() <= 1e-12, "{a} vs {b}");
            assert!(*a > 0.0);
        }
        assert!((m.diagonal().iter().sum::<f64>() - 1.0).abs() <= 1e-12);
    }
}

#[test]
fn stiffness_matches_cotangent_oracle() {
    for mesh in small_meshes() {
        let a = P1Space::new(&mesh).stiffness();
        let oracle = oracle_stiffness(&mesh);
        let dense = a.to_dense();
        for i in 0..mesh.n_vertices() {
            for j in 0..mesh.n_vertices() {
                assert!((dense[i][j] - oracle[(i, j)]).abs() <= 1e-12, "({i},{j})");
            }
        }
        assert!(a.is_symmetric());
        assert!(a.max_asymmetry() <= 1e-14);
        assert!(a.row_sums().iter().all(|s| s.abs() <= 1e-12));
    }
}

#[test]
fn stiffness_is_positive_semidefinite_with_constant_kernel() {
    for n in 1..=4 {
        for kind in [MacroKind::Acute, MacroKind::NonAcute] {
            let mesh = build_macro_mesh(n, kind);
            let dense = P1Space::new(&mesh).stiffness().to_dense();
            let nv = mesh.n_vertices();
            let mat = DMatrix::from_fn(nv, nv, |i, j| dense[i][j]);
            let mut eig = mat.symmetric_eigenvalues().as_slice().to_vec();
            eig.sort_by(f64::total_cmp);
            assert!(eig[0] >= -1e-10, "{eig:?}");
            assert!(eig[0].abs() <= 1e-10);
            // connected mesh: one-dimensional kernel
            assert!(eig[1] > 1e-6);
        }
    }
}

#[test]
fn chemotaxis_matches_oracle_and_row_sums() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for mesh in small_meshes() {
        let space = P1Space::new(&mesh);
        let a = space.stiffness();
        let nv = mesh.n_vertices();
        for _ in 0..20 {
            let v: Vec<f64> = (0..nv).map(|_| rng.gen_range(-5.0..5.0)).collect();
            let u: Vec<f64> = (0..nv).map(|_| rng.gen_range(0.0..3.0)).collect();
            let c = space.chemotaxis(&FeFunction::new(v.clone())).unwrap();
            let av = a.mul_vec(&v);
            for (s, t) in c.row_sums().iter().zip(&av) {
                assert!((s - t).abs() <= 1e-12 * (1.0 + t.abs()), "{s} vs {t}");
            }
            let cu = c.mul_vec(&u);
            for (x, y) in cu.iter().zip(oracle_chemotaxis_apply(&mesh, &v, &u)) {
                assert!((x - y).abs() <= 1e-12 * (1.0 + y.abs()), "{x} vs {y}");
            }
            // Column sums vanish: the transport term conserves mass.
            let mut col = vec![0.0; nv];
            for i in 0..nv {
                for (j, val) in c.row_entries(i) {
                    col[j] += val;
                }
            }
            assert!(col.iter().all(|s| s.abs() <= 1e-11));
        }
    }
}

#[test]
fn acute_meshes_give_m_matrix_sign_pattern() {
    for n in [1, 4, 10] {
        let acute = P1Space::new(&build_macro_mesh(n, MacroKind::Acute)).stiffness();
        assert!(acute.edge_entries().all(|(_, _, a)| a < 0.0));
        assert!(acute.diagonal().iter().all(|&d| d > 0.0));
        let obtuse = P1Space::new(&build_macro_mesh(n, MacroKind::NonAcute)).stiffness();
        assert!(obtuse.edge_entries().any(|(_, _, a)| a >= -1e-14));
    }
}

#[test]
fn discrete_laplacian_identity_on_random_fields() {
    let mesh = build_macro_mesh(5, MacroKind::Acute);
    let space = P1Space::new(&mesh);
    let (m, a) = (space.lumped_mass(), space.stiffness());
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..10 {
        let v = FeFunction::new(
            (0..mesh.n_vertices())
                .map(|_| rng.gen_range(-1.0..1.0))
                .collect(),
        );
        let w = discrete_laplacian(&v, &m, &a);
        let av = a.mul_vec(v.values());
        let scale = av.iter().fold(0.0f64, |s, x| s.max(x.abs()));
        for ((mi, wi), ai) in m.diagonal().iter().zip(w.values()).zip(&av) {
            assert!((mi * wi + ai).abs() <= 1e-12 * scale);
        }
    }
}

/// Mean absolute deviation of the discrete Laplacian of `x² + y²` from 4
/// over interior nodes.
fn laplacian_error(n: usize) -> f64 {
    let mesh = build_macro_mesh(n, MacroKind::Acute);
    let space = P1Space::new(&mesh);
    let v = nodal_interpolate(|p| p.x * p.x + p.y * p.y, &mesh).unwrap();
    let w = discrete_laplacian(&v, &space.lumped_mass(), &space.stiffness());
    let boundary = mesh.boundary_vertices();
    let interior: Vec<f64> = (0..mesh.n_vertices())
        .filter(|i| boundary.binary_search(i).is_err())
        .map(|i| (w.values()[i] - 4.0).abs())
        .collect();
    interior.iter().sum::<f64>() / interior.len() as f64
}

#[test]
fn discrete_laplacian_refinement_trend() {
    let errs: Vec<f64> = [4, 8, 16].iter().map(|&n| laplacian_error(n)).collect();
    assert!(errs[1] < errs[0] && errs[2] < errs[1], "{errs:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn chemotaxis_row_sums_equal_stiffness_action(
        n in 1usize..4,
        seed in any::<u64>(),
        obtuse in any::<bool>(),
    ) {
        let kind = if obtuse { MacroKind::NonAcute } else { MacroKind::Acute };
        let mesh = build_macro_mesh(n, kind);
        let space = P1Space::new(&mesh);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v: Vec<f64> = (0..mesh.n_vertices()).map(|_| rng.gen_range(-10.0..10.0)).collect();
        let c = space.chemotaxis(&FeFunction::new(v.clone())).unwrap();
        let av = space.stiffness().mul_vec(&v);
        for (s, t) in c.row_sums().iter().zip(&av) {
            prop_assert!((s - t).abs() <= 1e-12 * (1.0 + t.abs()));
        }
    }

    #[test]
    fn macro_meshes_tile_the_square(n in 1usize..12, obtuse in any::<bool>()) {
        let kind = if obtuse { MacroKind::NonAcute } else { MacroKind::Acute };
        let mesh = build_macro_mesh(n, kind);
        prop_assert!(mesh.check_conformity().is_ok());
        prop_assert!((mesh.total_area() - 1.0).abs() <= 1e-12);
        prop_assert!((0..mesh.n_triangles()).all(|t| mesh.triangle_area(t) > 0.0));
        let h = mesh.mesh_size().unwrap();
        let h1 = build_macro_mesh(1, kind).mesh_size().unwrap();
        prop_assert!((h * n as f64 - h1).abs() <= 1e-12);
    }
}
