//! Scheme and diagnostics invariants on small meshes.

use ks_core::diagnostics::{emit_records, read_records, scan_b2, CSV_HEADER};
use ks_core::fem::P1Space;
use ks_core::initial::{interpolate_pair, nonblowup_data};
use ks_core::linsolve::SolverKind;
use ks_core::{
    build_macro_mesh, moser_trudinger_pair, nodal_interpolate, restriction_indicators, run,
    FeFunction, IndicatorConfig, MacroKind, Scheme, SchemeConfig, SchemeState,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_field(n: usize, lo: f64, hi: f64, seed: u64) -> FeFunction {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    FeFunction::new((0..n).map(|_| rng.gen_range(lo..hi)).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn one_step_preserves_mass_and_v_recursion(
        n in 1usize..5,
        seed in any::<u64>(),
        k in 1e-5f64..1e-2,
        obtuse in any::<bool>(),
    ) {
        let kind = if obtuse { MacroKind::NonAcute } else { MacroKind::Acute };
        let mesh = build_macro_mesh(n, kind);
        let nv = mesh.n_vertices();
        let u0 = random_field(nv, 0.1, 5.0, seed);
        let v0 = random_field(nv, 0.0, 20.0, seed.wrapping_add(1));
        let out = run(&mesh, u0, v0, SchemeConfig::new(k, 3)).unwrap();
        let m0 = out.records[0].mass_u;
        for r in &out.records {
            prop_assert!((r.mass_u - m0).abs() <= 1e-12 * m0);
        }
        for r in &out.records[1..] {
            let res = r.v_mass_residual.unwrap();
            prop_assert!(res.abs() <= 1e-12 * r.mass_v.max(1.0));
        }
    }

    #[test]
    fn small_steps_keep_acute_solutions_nonnegative(n in 1usize..5, seed in any::<u64>()) {
        let mesh = build_macro_mesh(n, MacroKind::Acute);
        let nv = mesh.n_vertices();
        let u0 = random_field(nv, 0.5, 2.0, seed);
        let v0 = random_field(nv, 0.0, 1.0, seed ^ 0xabcd);
        let out = run(&mesh, u0, v0, SchemeConfig::new(1e-4, 5)).unwrap();
        for r in &out.records {
            prop_assert!(r.positivity_u);
            prop_assert!(r.min_v >= -1e-12 * r.max_v);
            // L1 bound on v while positivity holds
            prop_assert!(r.mass_v <= out.records[0].mass_v + out.records[0].mass_u + 1e-9);
        }
    }

    #[test]
    fn moser_trudinger_lhs_scales_by_exp_shift(seed in any::<u64>(), c in -20.0f64..20.0) {
        let mesh = build_macro_mesh(3, MacroKind::Acute);
        let space = P1Space::new(&mesh);
        let (m, a) = (space.lumped_mass(), space.stiffness());
        let u = random_field(mesh.n_vertices(), 0.1, 3.0, seed);
        let shifted = FeFunction::new(u.values().iter().map(|x| x + c).collect());
        let cfg = IndicatorConfig::default();
        let base = moser_trudinger_pair(&u, &m, &a, &cfg);
        let moved = moser_trudinger_pair(&shifted, &m, &a, &cfg);
        prop_assert!((moved.log_lhs - base.log_lhs - c).abs() <= 1e-12 * (1.0 + base.log_lhs.abs() + c.abs()));
    }
}

#[test]
fn direct_runs_are_bit_identical() {
    let mesh = build_macro_mesh(6, MacroKind::Acute);
    let (u0, v0) = interpolate_pair(&mesh, nonblowup_data(60.0)).unwrap();
    let a = run(&mesh, u0.clone(), v0.clone(), SchemeConfig::new(1e-4, 5)).unwrap();
    let b = run(&mesh, u0, v0, SchemeConfig::new(1e-4, 5)).unwrap();
    assert_eq!(a.final_state.u.values(), b.final_state.u.values());
    assert_eq!(a.final_state.v.values(), b.final_state.v.values());
    let dir = tempfile::tempdir().unwrap();
    let (pa, pb) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    emit_records(&a.records, &pa).unwrap();
    emit_records(&b.records, &pb).unwrap();
    assert_eq!(std::fs::read(&pa).unwrap(), std::fs::read(&pb).unwrap());
}

#[test]
fn iterative_solver_agrees_with_direct() {
    let mesh = build_macro_mesh(8, MacroKind::Acute);
    let (u0, v0) = interpolate_pair(&mesh, nonblowup_data(50.0)).unwrap();
    let direct = run(&mesh, u0.clone(), v0.clone(), SchemeConfig::new(1e-4, 4)).unwrap();
    let cfg = SchemeConfig::new(1e-4, 4).with_solver(SolverKind::Iterative);
    let iter = run(&mesh, u0, v0, cfg).unwrap();
    let scale = direct.final_state.u.max();
    for (x, y) in direct
        .final_state
        .u
        .values()
        .iter()
        .zip(iter.final_state.u.values())
    {
        assert!((x - y).abs() <= 1e-9 * scale);
    }
}

#[test]
fn stepper_matches_run_records() {
    let mesh = build_macro_mesh(4, MacroKind::NonAcute);
    let (u0, v0) = interpolate_pair(&mesh, nonblowup_data(45.0)).unwrap();
    let cfg = SchemeConfig::new(2e-4, 3);
    let out = run(&mesh, u0.clone(), v0.clone(), cfg).unwrap();
    let mut scheme = Scheme::new(&mesh, cfg).unwrap();
    let mut state = SchemeState::initial(u0, v0);
    for _ in 0..3 {
        state = scheme.step(&state).unwrap();
    }
    assert_eq!(state.n, 3);
    assert_eq!(state.u.values(), out.final_state.u.values());
}

#[test]
fn csv_round_trip_and_header() {
    let mesh = build_macro_mesh(3, MacroKind::Acute);
    let (u0, v0) = interpolate_pair(&mesh, nonblowup_data(40.0)).unwrap();
    let out = run(&mesh, u0, v0, SchemeConfig::new(1e-4, 1)).unwrap();
    assert_eq!(out.records.len(), 2);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.csv");
    emit_records(&out.records, &path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().next().unwrap(), CSV_HEADER.join(","));
    assert_eq!(text.lines().count(), 3);
    let back = read_records(&path).unwrap();
    assert!(back[1].e0.is_nan());
    let again = dir.path().join("again.csv");
    emit_records(&back, &again).unwrap();
    assert_eq!(std::fs::read(&again).unwrap(), text.as_bytes());
}

#[test]
fn negative_density_invalidates_indicators() {
    let mesh = build_macro_mesh(2, MacroKind::Acute);
    let space = P1Space::new(&mesh);
    let (m, a) = (space.lumped_mass(), space.stiffness());
    let u = nodal_interpolate(|p| p.x, &mesh).unwrap();
    let v = FeFunction::constant(mesh.n_vertices(), 1.0);
    let ind =
        restriction_indicators(&u, &v, &m, &a, &mesh, 1e-4, &IndicatorConfig::default()).unwrap();
    assert!(!ind.valid);
    assert!(ind.b2.is_nan());
    assert!(!ind.cond_hk && !ind.cond_h);
}

#[test]
fn indicators_on_reference_data() {
    let mesh = build_macro_mesh(10, MacroKind::Acute);
    let space = P1Space::new(&mesh);
    let (m, a) = (space.lumped_mass(), space.stiffness());
    let (u0, v0) = interpolate_pair(&mesh, nonblowup_data(70.0)).unwrap();
    let cfg = IndicatorConfig::default();
    let ind = restriction_indicators(&u0, &v0, &m, &a, &mesh, 1e-4, &cfg).unwrap();
    assert!(ind.valid);
    assert!((ind.b2 - (ind.e0 + ind.b0 + ind.b1)).abs() <= 1e-9 * ind.b2.abs());
    assert!(ind.log_f.is_finite());
    assert!(ind.c_neg > 0.0);
    // F is astronomically large for this data: the k/h² condition cannot hold.
    assert!(!ind.cond_hk);
    let scan = scan_b2(ind.e0, ind.u0_l1, ind.v0_l1, &cfg, 10, ind.b2);
    assert!(scan.distance <= 1e-9 * ind.b2);
}
