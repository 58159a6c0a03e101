use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use num_complex::Complex64;
use qdrop2d_core::*;

fn setup(n: usize) -> (SharedGrid, PotentialFields, ModelParams, ComplexField) {
    let g = Grid2::new(n, n, 8.0, 8.0).unwrap();
    let p = exact_params(1.0, 1.0).unwrap();
    let fields = build_pt_hog(&g, &p);
    let phi = exact_droplet(&g, 1.0);
    (g, fields, p, phi)
}

fn bench_spectral(c: &mut Criterion) {
    let (_, _, _, phi) = setup(128);
    c.bench_function("laplacian 128x128", |b| {
        b.iter(|| laplacian(std::hint::black_box(&phi)))
    });
    c.bench_function("gradient 128x128", |b| {
        b.iter(|| gradient(std::hint::black_box(&phi)))
    });
}

fn bench_residual(c: &mut Criterion) {
    let (_, fields, p, phi) = setup(128);
    c.bench_function("stationary residual 128x128", |b| {
        b.iter(|| residual(&fields, &p, std::hint::black_box(&phi)).unwrap())
    });
    let p_rot = p.with_omega(0.5);
    c.bench_function("stationary residual 128x128 rotating", |b| {
        b.iter(|| residual(&fields, &p_rot, std::hint::black_box(&phi)).unwrap())
    });
}

fn bench_step(c: &mut Criterion) {
    let (g, fields, p, phi) = setup(128);
    let p_rot = p.with_omega(1.0);
    let plan = StepPlan::new(&g, &fields, &p_rot, 1e-3).unwrap();
    c.bench_function("split step 128x128 rotating", |b| {
        b.iter_batched(
            || phi.data().to_vec(),
            |mut data: Vec<Complex64>| plan.step_in_place(&mut data, false),
            BatchSize::LargeInput,
        )
    });
}

criterion_group!(kernels, bench_spectral, bench_residual, bench_step);
criterion_main!(kernels);
