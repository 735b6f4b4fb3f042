use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use num_complex::Complex64;

use dsa_core::channel::{los_transimpedance_with, ring_index, ring_test_points, ReceiverKind};
use dsa_core::em::{assemble_impedance_matrix_with, wavelength, DiskLayout, VaractorParams};
use dsa_core::linalg::{CMat, CVec};
use dsa_core::multiport::MatchingMode;
use dsa_core::optimizer::{fd_gradient, objective, Network, ObjectiveKind, Problem, Subcarrier};
use dsa_core::targets::{beam_target, radiation_pattern, SphereGrid};
use dsa_core::Exec;

const F: f64 = 2.4e9;
const MODES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn bench(c: &mut Criterion) {
    let l = wavelength(F);
    let g = DiskLayout::new(l, l / 4.0, 5, 1, 1).build().unwrap();
    let pts = ring_test_points(120, 100.0, ReceiverKind::Isotropic).unwrap();

    let mut group = c.benchmark_group("impedance_matrix");
    for (name, exec) in MODES {
        group.bench_function(name, |b| b.iter(|| assemble_impedance_matrix_with(black_box(&g), F, exec).unwrap()));
    }
    group.finish();

    let z = assemble_impedance_matrix_with(&g, F, Exec::Sequential).unwrap();
    let hc = los_transimpedance_with(&g, &pts, F, Exec::Sequential).unwrap().h;
    let h_opt = beam_target(120, &[vec![ring_index(120, 180.0)]], 1e-4).unwrap().h_opt.remove(0);
    let sub = Subcarrier {
        network: Network::General(z),
        hc,
        h_opt,
        svd: None,
    };
    let p = Problem::new(vec![sub], MatchingMode::simplified(50.0), VaractorParams::default(), false, ObjectiveKind::Frobenius)
        .unwrap();
    let psi: Vec<f64> = (0..p.n_psi()).map(|i| ((i * 37 % 11) as f64 - 5.0) * 0.2).collect();
    let wd = vec![CMat::identity(1, 1) * Complex64::new(200f64.sqrt(), 0.0)];
    let alpha = [1.0];
    let f0 = objective(&psi, &alpha, &wd, &p);

    let mut group = c.benchmark_group("fd_gradient");
    group.sample_size(20);
    for (name, exec) in MODES {
        group.bench_function(name, |b| {
            b.iter(|| fd_gradient(black_box(&psi), f0, &alpha, &wd, &p, ObjectiveKind::Frobenius, 1e-6, exec))
        });
    }
    group.finish();

    let i = CVec::from_fn(g.len(), |n, _| Complex64::from_polar(1.0, 0.3 * n as f64));
    let grid = SphereGrid::one_degree();
    let mut group = c.benchmark_group("radiation_pattern");
    group.sample_size(20);
    for (name, exec) in MODES {
        group.bench_function(name, |b| b.iter(|| radiation_pattern(black_box(&i), &g, F, &grid, 1.0, exec).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, bench);
criterion_main!(benches);
