use std::hint::black_box;

use calorix_core::trefftz::{assemble_system, solve_dirichlet, BoundaryData, DEFAULT_RCOND};
use calorix_core::{build_mesh, CaloricBasis, CoefficientMatrix, CrossSection, MeshResolution, Parity};
use criterion::{criterion_group, criterion_main, Criterion};

fn basis(c: &mut Criterion) {
    let a = CoefficientMatrix::new(2, &[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
    c.bench_function("caloric basis n=2 degree 12", |b| b.iter(|| CaloricBasis::new(&a, Parity::V, black_box(12)).unwrap()));
}

fn fit(c: &mut Criterion) {
    let a = CoefficientMatrix::identity(2);
    let mesh = build_mesh(&CrossSection::Disk { r: 1.0 }, &a, 0.5, MeshResolution::new(64, 16, 16)).unwrap();
    let data = BoundaryData::from_fn(&mesh, Parity::V, "abs", |x, _| x[0].abs()).unwrap();
    c.bench_function("assemble degree 10", |b| b.iter(|| assemble_system(&mesh, Parity::V, black_box(10)).unwrap()));
    c.bench_function("solve degree 10", |b| b.iter(|| solve_dirichlet(&mesh, Parity::V, black_box(10), &data, DEFAULT_RCOND).unwrap()));
}

criterion_group!(benches, basis, fit);
criterion_main!(benches);
