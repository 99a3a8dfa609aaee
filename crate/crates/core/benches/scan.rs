//! Parallel versus sequential evaluation of the scan workloads.
//!
//! `Execution::Auto` runs on the rayon pool when the `parallel` feature is
//! enabled; building with `--no-default-features` turns it into a second
//! sequential run, which is a useful baseline for the dispatch overhead.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use orbitron_core::equilibrium::solve_orbitron_equatorial;
use orbitron_core::fields::AxiFieldModel;
use orbitron_core::potential::DipolePotential;
use orbitron_core::scan::{
    certify_batch, dipoletron_window, levitation_sweep, linspace, stability_map, Axis, Execution, MapFamily, MapPoint,
    ScanSpec,
};
use orbitron_core::state::BodyParams;

const MODES: [(&str, Execution); 2] = [("parallel", Execution::Auto), ("sequential", Execution::Sequential)];

fn body(g: f64) -> BodyParams {
    BodyParams::new(1.0, 0.1, 0.2, 1.0, g).unwrap()
}

fn bench_stability_map(c: &mut Criterion) {
    let mut group = c.benchmark_group("stability_map");
    for side in [8, 32, 64] {
        let spec = ScanSpec {
            family: MapFamily::Orbitron { sigma: 1.0 },
            axis1: Axis::new("ratio", 0.4, 1.3, side),
            axis2: Axis::new("pi0", 0.1, 30.0, side),
            body: body(0.0),
            field: AxiFieldModel::dipole_pair(1.0, 1.0),
            fixed: MapPoint { r0: 0.8, pi0: 10.0, beta: 0.0, kappa: 0.0, b0: 0.0 },
            outputs: vec!["verdict".into(), "margin".into(), "A".into(), "B".into(), "C".into()],
        };
        group.throughput(Throughput::Elements((side * side) as u64));
        for (name, exec) in MODES {
            group.bench_with_input(BenchmarkId::new(name, side * side), &spec, |b, spec| {
                b.iter(|| stability_map(black_box(spec), exec).unwrap())
            });
        }
    }
    group.finish();
}

fn bench_window(c: &mut Criterion) {
    let mut group = c.benchmark_group("dipoletron_window");
    for n in [256, 4096] {
        group.throughput(Throughput::Elements(n as u64));
        for (name, exec) in MODES {
            group.bench_with_input(BenchmarkId::new(name, n), &n, |b, &n| {
                b.iter(|| dipoletron_window(1.0, 1.0, (0.3, 1.5), black_box(n), exec).unwrap())
            });
        }
    }
    group.finish();
}

fn bench_levitation_sweep(c: &mut Criterion) {
    let template = AxiFieldModel::dipole_pair(1.0, 1.0);
    let b = body(9.81);
    let mut group = c.benchmark_group("levitation_sweep");
    for n in [64, 1024] {
        let kappas = linspace(1.0001, 1.04, n);
        group.throughput(Throughput::Elements(n as u64));
        for (name, exec) in MODES {
            group.bench_with_input(BenchmarkId::new(name, n), &kappas, |bch, kappas| {
                bch.iter(|| levitation_sweep(&template, &b, 0.8, -0.3, 0.0, black_box(kappas), exec))
            });
        }
    }
    group.finish();
}

fn bench_certify_batch(c: &mut Criterion) {
    let b = body(0.0);
    let model = AxiFieldModel::dipole_pair(1.0, 1.0);
    let v = DipolePotential::new(model.clone(), &b);
    let eqs: Vec<_> = linspace(0.45, 1.25, 512)
        .into_iter()
        .map(|r| solve_orbitron_equatorial(&model, &b, r, 10.0, 1.0).unwrap())
        .collect();
    let mut group = c.benchmark_group("certify_batch");
    group.throughput(Throughput::Elements(eqs.len() as u64));
    for (name, exec) in MODES {
        group.bench_function(name, |bch| bch.iter(|| certify_batch(black_box(&eqs), &b, &v, exec)));
    }
    group.finish();
}

criterion_group!(benches, bench_stability_map, bench_window, bench_levitation_sweep, bench_certify_batch);
criterion_main!(benches);
