use criterion::{criterion_group, criterion_main, Criterion};
use mqrc::dv::DensityMatrix;
use mqrc::metrics::{mixing_capacity, MixingOptions};
use mqrc::numerics::{Prng, Stream};
use mqrc::readout::FeatureMatrix;
use mqrc::tasks::uniform_streams;
use mqrc::{AnyReservoir, EncodingMethod, Hyperparams, Reservoir, ReservoirSpec, SystemKind, Table};
use std::hint::black_box;

fn reservoir(system: SystemKind, n: usize) -> AnyReservoir {
    let spec = ReservoirSpec { system, encoding: EncodingMethod::Global, n, input_dim: 2 };
    spec.instantiate(Hyperparams { coupling: 1.0, epsilon: 0.5, gamma: 1.0 }, 1, 0).unwrap()
}

/// Cost of one input window, measured over 20 windows.
fn windows(c: &mut Criterion) {
    let u = uniform_streams(2, 2, 20).unwrap();
    let mut g = c.benchmark_group("20 windows");
    g.sample_size(10);
    for n in [3, 4, 6] {
        let AnyReservoir::Dv(r) = reservoir(SystemKind::Dv, n) else { unreachable!() };
        g.bench_function(format!("spin n={n}"), |b| {
            b.iter(|| r.run_from(DensityMatrix::all_down(n), black_box(&u), |_, _| Ok(())).unwrap())
        });
    }
    for n in [3, 6] {
        let r = reservoir(SystemKind::Cv, n);
        g.bench_function(format!("oscillator n={n}"), |b| b.iter(|| r.run(black_box(&u)).unwrap()));
    }
    g.finish();
}

fn capacity(c: &mut Criterion) {
    let steps = 10_000;
    let mut p = Prng::new(3, Stream::Custom(1));
    let cols: Vec<Vec<f64>> = (0..18).map(|_| (0..steps).map(|_| p.normal()).collect()).collect();
    let features = FeatureMatrix::from_observations(&Table::from_columns(&cols).unwrap()).unwrap();
    let streams = uniform_streams(4, 2, steps + 15).unwrap();
    let mut g = c.benchmark_group("mixing capacity");
    g.sample_size(10);
    g.bench_function("T=10000, 19 features, tau_max=15", |b| {
        b.iter(|| mixing_capacity(black_box(&features), &streams, &MixingOptions::default()).unwrap())
    });
    g.finish();
}

criterion_group!(benches, windows, capacity);
criterion_main!(benches);
