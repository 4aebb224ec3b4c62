use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use podlab::experiment::{ControllerKind, StudySetup};
use podlab::grid::C64;
use podlab::modal::analyze;
use podlab::pod::{Pod, PodConfig};

fn estimator(c: &mut Criterion) {
    let mut cfg = PodConfig::new(2.0 * std::f64::consts::PI, 0.02);
    cfg.gain = 10.0;
    cfg.residue = Some(C64::new(-0.03, 0.014));
    c.bench_function("kalman_tick_1000", |b| {
        b.iter(|| {
            let mut pod = Pod::new(cfg.clone()).unwrap();
            for k in 0..1000 {
                let t = k as f64 * 0.02;
                let u = pod.step(t, black_box((6.0 * t).sin()));
                pod.applied(u);
            }
            pod.estimate().copied()
        })
    });
}

fn simulation(c: &mut Criterion) {
    let setup = StudySetup::smib().unwrap();
    let r = setup.design.residue();
    let mut g = c.benchmark_group("simulation");
    g.sample_size(10);
    g.bench_function("smib_20s_cim", |b| {
        b.iter(|| setup.run_kind(ControllerKind::Cim, 15.0, r).unwrap().metrics)
    });
    g.finish();
}

fn modal(c: &mut Criterion) {
    let setup = StudySetup::ieee39().unwrap();
    let mut g = c.benchmark_group("modal");
    g.sample_size(10);
    g.bench_function("ieee39_analyze", |b| {
        b.iter(|| {
            analyze(&setup.model, setup.model.base_conditions(), setup.probe, setup.actuator, (0.1, 3.0), 5)
                .unwrap()
                .modes
                .len()
        })
    });
    g.finish();
}

criterion_group!(benches, estimator, simulation, modal);
criterion_main!(benches);
