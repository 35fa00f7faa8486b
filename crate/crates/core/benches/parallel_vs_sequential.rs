use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use multitime::born::{born_distribution, Dynamics};
use multitime::linalg::c;
use multitime::spacetime::Hypersurface;
use multitime::zerorange::{surface_norm, InitialData2P, Packet, SliceGrid, ZeroRangeModel};
use multitime::Exec;

const MODES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn zero_range_norm(c_: &mut Criterion) {
    let theta = 0.7;
    let spinor = [c(0.8, 0.0), c(0.0, 0.6)];
    let model = ZeroRangeModel::new(theta, InitialData2P::head_on(4.0, 0.3, spinor, theta).unwrap()).unwrap();
    let surface = Hypersurface::new(vec![[-6.0, 1.0], [0.0, 1.6], [6.0, 1.2]]).unwrap();
    let mut group = c_.benchmark_group("surface_norm");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| surface_norm(black_box(&model), &surface, (-6.0, 6.0), exec))
        });
    }
    group.finish();
}

fn bloch_born(c_: &mut Criterion) {
    let spinor = [c(0.8, 0.0), c(0.0, 0.6)];
    let d = Dynamics::Bloch2 { first: Packet::new(-4.5, 0.5, 0.0, spinor), second: Packet::new(4.5, 0.5, 0.0, spinor) };
    let surface = Hypersurface::new(vec![[-10.0, 1.0], [-1.5, 1.0], [1.5, 2.0], [10.0, 2.0]]).unwrap();
    let grid = SliceGrid::covering(-10.0, 10.0, 0.1);
    let mut group = c_.benchmark_group("born_distribution");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| born_distribution(black_box(&d), &surface, grid, exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, zero_range_norm, bloch_born);
criterion_main!(benches);
