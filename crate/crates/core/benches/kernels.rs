use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use mswave_core::dynamics::{step, IntegratorConfig};
use mswave_core::estimates::{magnetic_ratios, solenoidal, Ensemble};
use mswave_core::spectral::{leray_project, Grid, ScalarField, VectorField};
use mswave_core::state::{current_density, SimState};
use num_complex::Complex64;

fn packet(g: &Grid) -> SimState {
    let c = 0.5 * g.len();
    let u = ScalarField::from_fn(g, |x| {
        let r2 = (x[0] - c).powi(2) + (x[1] - c).powi(2) + (x[2] - c).powi(2);
        Complex64::from_polar((-r2 / 3.38).exp(), 0.5 * x[0])
    });
    let a = leray_project(&VectorField::from_real_fn(g, |x| {
        let r2 = (x[0] - c).powi(2) + (x[1] - c).powi(2) + (x[2] - c).powi(2);
        let e = 0.3 * (-r2 / 4.0).exp();
        [-(x[1] - c) * e, (x[0] - c) * e, 0.0]
    }));
    SimState::new(0.0, u, a, VectorField::zeros(g), 2.0, 0.0).unwrap()
}

/// Runs each kernel on a one-thread pool and on the default pool.
fn pools() -> Vec<(&'static str, rayon::ThreadPool)> {
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let all = rayon::ThreadPoolBuilder::new().build().unwrap();
    vec![("sequential", one), ("parallel", all)]
}

fn kernels(c: &mut Criterion) {
    let pools = pools();
    for n in [16, 32] {
        let g = Grid::new(n, 16.0).unwrap();
        let s = packet(&g);
        let cfg = IntegratorConfig::default();

        let mut group = c.benchmark_group(format!("n{n}"));
        group.sample_size(10);
        for (label, pool) in &pools {
            group.bench_function(BenchmarkId::new("fft_round_trip", label), |b| {
                b.iter(|| pool.install(|| s.u.spectrum().into_field()))
            });
            group.bench_function(BenchmarkId::new("leray", label), |b| b.iter(|| pool.install(|| leray_project(&s.a))));
            group.bench_function(BenchmarkId::new("current", label), |b| {
                b.iter(|| pool.install(|| current_density(&s.u, &s.a)))
            });
            group.bench_function(BenchmarkId::new("step", label), |b| {
                b.iter(|| pool.install(|| step(&s, 1e-3, &cfg).unwrap()))
            });
        }
        group.finish();
    }

    let g = Grid::new(16, 16.0).unwrap();
    let d = &Ensemble::default().draw(4)[0];
    let u = d[0].sample(&g);
    let a = solenoidal(&d[1..], &g, 0.5);
    let mut group = c.benchmark_group("probes");
    group.sample_size(10);
    for (label, pool) in &pools {
        group.bench_function(BenchmarkId::new("magnetic_ratios", label), |b| {
            b.iter(|| pool.install(|| magnetic_ratios(&u, &a).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(benches, kernels);
criterion_main!(benches);
