use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use hdg_bench::Fixture;
use hdg_core::global::{assemble_global, solve};
use hdg_core::local::{assemble_local, condense};
use hdg_core::solver::condense_all;
use hdg_core::{solve_stokes, MeshFamily};

fn local_condensation(c: &mut Criterion) {
    let mut group = c.benchmark_group("local_condensation");
    for (family, k) in [
        (MeshFamily::Tri1, 2),
        (MeshFamily::Quad, 2),
        (MeshFamily::Quad, 3),
        (MeshFamily::Tet, 2),
        (MeshFamily::Hex, 2),
    ] {
        let f = Fixture::new(family, k, 1);
        group.bench_function(BenchmarkId::from_parameter(f.label()), |b| {
            b.iter(|| {
                let sys = assemble_local(&f.disc, &f.mesh, 0, f.problem.as_ref()).unwrap();
                black_box(condense(&f.disc, &sys).unwrap())
            })
        });
    }
    group.finish();
}

fn assembly(c: &mut Criterion) {
    let mut group = c.benchmark_group("global_assembly");
    group.sample_size(20);
    for (family, k, level) in [(MeshFamily::Quad, 2, 4), (MeshFamily::Tet, 1, 2)] {
        let f = Fixture::new(family, k, level);
        let condensed = condense_all(&f.disc, &f.mesh, f.problem.as_ref()).unwrap();
        group.bench_function(BenchmarkId::from_parameter(f.label()), |b| {
            b.iter(|| black_box(assemble_global(&f.mesh, &f.disc, &condensed).unwrap()))
        });
    }
    group.finish();
}

fn global_solve(c: &mut Criterion) {
    let mut group = c.benchmark_group("global_solve");
    group.sample_size(10);
    for (family, k, level) in [(MeshFamily::Quad, 2, 4), (MeshFamily::Tri2, 2, 4), (MeshFamily::Hex, 1, 3)] {
        let f = Fixture::new(family, k, level);
        let condensed = condense_all(&f.disc, &f.mesh, f.problem.as_ref()).unwrap();
        let sys = assemble_global(&f.mesh, &f.disc, &condensed).unwrap();
        group.bench_function(BenchmarkId::from_parameter(f.label()), |b| b.iter(|| black_box(solve(&sys).unwrap())));
    }
    group.finish();
}

fn full_pipeline(c: &mut Criterion) {
    let mut group = c.benchmark_group("solve_stokes");
    group.sample_size(10);
    let f = Fixture::new(MeshFamily::Quad, 2, 4);
    group.bench_function(BenchmarkId::from_parameter(f.label()), |b| {
        b.iter(|| black_box(solve_stokes(&f.mesh, &f.disc, f.problem.as_ref()).unwrap()))
    });
    group.finish();
}

criterion_group!(benches, local_condensation, assembly, global_solve, full_pipeline);
criterion_main!(benches);
