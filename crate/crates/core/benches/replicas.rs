use contact_core::harris::Backend;
use contact_core::{delta_sensitivity, DeltaMode, Execution, RunConfig, WindowSetup};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn executions() -> Vec<(&'static str, Execution)> {
    let mut out = vec![("sequential", Execution::Sequential)];
    #[cfg(feature = "parallel")]
    out.push(("parallel", Execution::Parallel { workers: 0 }));
    out
}

fn delta_by_execution(c: &mut Criterion) {
    let setup = WindowSetup::new(0.7, 0.9, 5, 10.0).unwrap();
    let mut group = c.benchmark_group("delta_2048_replicas");
    group.sample_size(10);
    for (name, exec) in executions() {
        for backend in [Backend::Jump, Backend::Graphical] {
            let cfg = RunConfig::new(1, 2048).with_exec(exec).with_backend(backend);
            let id = BenchmarkId::new(name, format!("{backend:?}"));
            group.bench_with_input(id, &cfg, |b, cfg| {
                b.iter(|| delta_sensitivity(1.5, 2.0, &setup, cfg, DeltaMode::Coupled).unwrap())
            });
        }
    }
    group.finish();
}

criterion_group!(benches, delta_by_execution);
criterion_main!(benches);
