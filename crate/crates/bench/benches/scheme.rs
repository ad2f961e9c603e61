use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use ks_bench::fixture;
use ks_core::{
    build_macro_mesh, MacroKind, P1Space, Scheme, SchemeConfig, SchemeState, SolverKind,
};

fn mesh_build(c: &mut Criterion) {
    let mut g = c.benchmark_group("mesh");
    for n in [10, 50] {
        g.bench_with_input(BenchmarkId::new("build_macro_mesh", n), &n, |b, &n| {
            b.iter(|| build_macro_mesh(black_box(n), MacroKind::Acute))
        });
    }
    g.finish();
}

fn assembly(c: &mut Criterion) {
    let (mesh, _, v0) = fixture(50);
    let space = P1Space::new(&mesh);
    let mut g = c.benchmark_group("assembly_n50");
    g.bench_function("space", |b| b.iter(|| P1Space::new(black_box(&mesh))));
    g.bench_function("lumped_mass", |b| b.iter(|| space.lumped_mass()));
    g.bench_function("stiffness", |b| b.iter(|| space.stiffness()));
    g.bench_function("chemotaxis", |b| {
        b.iter(|| space.chemotaxis(black_box(&v0)).unwrap())
    });
    g.finish();
}

fn time_step(c: &mut Criterion) {
    let (mesh, u0, v0) = fixture(50);
    let state = SchemeState::initial(u0, v0);
    let mut g = c.benchmark_group("step_n50");
    g.sample_size(20);
    for kind in [SolverKind::Direct, SolverKind::Iterative] {
        let mut scheme = Scheme::new(&mesh, SchemeConfig::new(1e-4, 1).with_solver(kind)).unwrap();
        g.bench_function(format!("{kind:?}").to_lowercase(), |b| {
            b.iter(|| scheme.step(black_box(&state)).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, mesh_build, assembly, time_step);
criterion_main!(benches);
