use std::hint::black_box;
use std::sync::Arc;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use ebingeom_core::cone::dist_prime;
use ebingeom_core::isometry::torus_affine_diffeo;
use ebingeom_core::sampling::{random_cone_point, random_field, random_fiber_isometry, random_spd};
use ebingeom_core::spd::dist_affine_invariant;
use ebingeom_core::{ebin_distance, l2_geodesic, DiscreteManifold, EbinIsometry, FiberSection};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn fibre(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut group = c.benchmark_group("fibre");
    for n in [2, 3, 5] {
        let (x, y) = (random_spd(&mut rng, n, 1.0), random_spd(&mut rng, n, 1.0));
        group.bench_with_input(BenchmarkId::new("affine_invariant", n), &n, |b, _| {
            b.iter(|| dist_affine_invariant(black_box(&x), black_box(&y)).unwrap())
        });
        let (p, q) = (random_cone_point(&mut rng, n, 3.0, 1.0), random_cone_point(&mut rng, n, 3.0, 1.0));
        group.bench_with_input(BenchmarkId::new("dist_prime", n), &n, |b, _| {
            b.iter(|| dist_prime(black_box(&p), black_box(&q)).unwrap())
        });
    }
    group.finish();
}

fn fields(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let manifold = Arc::new(DiscreteManifold::torus_euclidean(&[64, 64]).unwrap());
    let f = random_field(&mut rng, &manifold, 1.0, 0.05).unwrap();
    let g = random_field(&mut rng, &manifold, 1.0, 0.05).unwrap();
    let mut group = c.benchmark_group("fields_64x64");
    group.bench_function("ebin_distance", |b| b.iter(|| ebin_distance(black_box(&f), black_box(&g)).unwrap()));
    group.bench_function("l2_geodesic", |b| b.iter(|| l2_geodesic(black_box(&f), black_box(&g), 0.3).unwrap()));

    let grid = manifold.grid().expect("torus grid");
    let diffeo = torus_affine_diffeo(grid, &[vec![2, 1], vec![1, 1]], &[3, 0]).unwrap();
    let section =
        FiberSection::new((0..manifold.vertex_count()).map(|_| random_fiber_isometry(&mut rng, 2)).collect()).unwrap();
    let iso = EbinIsometry::new(Arc::clone(&manifold), section, diffeo).unwrap();
    group.bench_function("isometry_apply", |b| b.iter(|| iso.apply(black_box(&f)).unwrap()));
    group.finish();
}

criterion_group!(benches, fibre, fields);
criterion_main!(benches);
