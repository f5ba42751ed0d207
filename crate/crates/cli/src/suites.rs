//! Invariant suites behind `ebingeom invariants`.
//!
//! Every check draws from its own ChaCha stream, so one suite's results do not
//! depend on which other suites ran.

use std::f64::consts::PI;
use std::sync::Arc;

use clap::ValueEnum;
use ebingeom_core::affine::{is_dilation, product_factor_check, radial_square, ConeSpace, MapProbe, Product};
use ebingeom_core::cone::{dist_prime, fibre_dist, geodesic_prime, raw_angle, ConePoint, FiberDilation};
use ebingeom_core::fields::{alpha_density, compensated_sum, ebin_distance, l2_geodesic};
use ebingeom_core::isometry::{pullback, torus_affine_diffeo, DiffeoAction, EbinIsometry, FiberSection, L2NormalForm};
use ebingeom_core::sampling::{
    random_backgrounds, random_cone_point, random_field, random_fiber_isometry, random_invertible, random_spd,
};
use ebingeom_core::spd::{dist_affine_invariant, geodesic_affine_invariant, split};
use ebingeom_core::{DiscreteManifold, MetricField, Result, SpdMatrix};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::oracle::brute_force_distance;
use crate::report::Check;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Spd,
    Fiber,
    Fields,
    Isometry,
    Affine,
    All,
}

impl Suite {
    pub fn name(self) -> &'static str {
        match self {
            Suite::Spd => "spd",
            Suite::Fiber => "fiber",
            Suite::Fields => "fields",
            Suite::Isometry => "isometry",
            Suite::Affine => "affine",
            Suite::All => "all",
        }
    }

    pub fn run(self, seed: u64) -> Vec<Check> {
        match self {
            Suite::Spd => spd(seed),
            Suite::Fiber => fiber(seed),
            Suite::Fields => fields(seed),
            Suite::Isometry => isometry(seed),
            Suite::Affine => affine(seed),
            Suite::All => [spd, fiber, fields, isometry, affine].iter().flat_map(|s| s(seed)).collect(),
        }
    }
}

fn stream(seed: u64, tag: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(tag);
    r
}

fn at_most(suite: &'static str, name: &'static str, tol: f64, f: impl FnOnce() -> Result<f64>) -> Check {
    match f() {
        Ok(v) => Check::at_most(suite, name, v, tol),
        Err(_) => Check::broken(suite, name, tol),
    }
}

fn at_least(suite: &'static str, name: &'static str, min: f64, f: impl FnOnce() -> Result<f64>) -> Check {
    match f() {
        Ok(v) => Check::at_least(suite, name, v, min),
        Err(_) => Check::broken(suite, name, min),
    }
}

fn relative(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

fn curved(r: &mut ChaCha8Rng, dims: &[usize], spread: f64) -> Result<Arc<DiscreteManifold>> {
    let flat = DiscreteManifold::torus_euclidean(dims)?;
    let bgs = random_backgrounds(r, &flat, spread);
    Ok(Arc::new(DiscreteManifold::torus_from_backgrounds(dims, bgs)?))
}

fn torus_maps() -> [(Vec<Vec<i64>>, Vec<i64>); 4] {
    [
        (vec![vec![1, 0], vec![0, 1]], vec![1, 2]),
        (vec![vec![1, 1], vec![0, 1]], vec![0, 1]),
        (vec![vec![0, -1], vec![1, 0]], vec![2, 0]),
        (vec![vec![2, 1], vec![1, 1]], vec![1, 1]),
    ]
}

fn spd(seed: u64) -> Vec<Check> {
    const S: &str = "spd";
    vec![
        at_most(S, "congruence invariance", 1e-8, || {
            let mut r = stream(seed, 11);
            let mut worst: f64 = 0.0;
            for k in 0..500 {
                let n = 2 + k % 3;
                let (x, y) = (random_spd(&mut r, n, 0.8), random_spd(&mut r, n, 0.8));
                let a = random_invertible(&mut r, n);
                let d = dist_affine_invariant(&x, &y)?;
                let moved = dist_affine_invariant(&x.congruence(&a)?, &y.congruence(&a)?)?;
                worst = worst.max((moved - d).abs() / (1.0 + d));
            }
            Ok(worst)
        }),
        at_most(S, "inversion invariance", 1e-8, || {
            let mut r = stream(seed, 12);
            let mut worst: f64 = 0.0;
            for k in 0..500 {
                let n = 2 + k % 3;
                let (x, y) = (random_spd(&mut r, n, 0.8), random_spd(&mut r, n, 0.8));
                let d = dist_affine_invariant(&x, &y)?;
                worst = worst.max((dist_affine_invariant(&x.inverse(), &y.inverse())? - d).abs());
            }
            Ok(worst)
        }),
        at_most(S, "splitting product identity", 1e-8, || {
            let mut r = stream(seed, 13);
            let mut worst: f64 = 0.0;
            for k in 0..500 {
                let n = 2 + k % 3;
                let (x, y) = (random_spd(&mut r, n, 0.8), random_spd(&mut r, n, 0.8));
                let ((sx, px), (sy, py)) = (split(&x), split(&y));
                let d = dist_affine_invariant(&x, &y)?;
                let dp = dist_affine_invariant(px.as_spd(), py.as_spd())?;
                worst = worst.max((d * d - (sx - sy).powi(2) - dp * dp).abs());
            }
            Ok(worst)
        }),
        at_most(S, "triangle inequality", 1e-9, || {
            let mut r = stream(seed, 14);
            let mut worst: f64 = 0.0;
            for k in 0..1000 {
                let n = 2 + k % 3;
                let (x, y, z) = (random_spd(&mut r, n, 0.8), random_spd(&mut r, n, 0.8), random_spd(&mut r, n, 0.8));
                let excess = dist_affine_invariant(&x, &z)? - dist_affine_invariant(&x, &y)? - dist_affine_invariant(&y, &z)?;
                worst = worst.max(excess);
            }
            Ok(worst)
        }),
        at_most(S, "geodesic additivity", 1e-9, || {
            let mut r = stream(seed, 15);
            let mut worst: f64 = 0.0;
            for k in 0..200 {
                let n = 2 + k % 3;
                let (x, y) = (random_spd(&mut r, n, 0.8), random_spd(&mut r, n, 0.8));
                let m = geodesic_affine_invariant(&x, &y, r.random())?;
                let gap = dist_affine_invariant(&x, &m)? + dist_affine_invariant(&m, &y)? - dist_affine_invariant(&x, &y)?;
                worst = worst.max(gap.abs());
            }
            Ok(worst)
        }),
    ]
}

fn scalar(n: usize, a: f64) -> Result<ConePoint> {
    Ok(ConePoint::from_spd(&SpdMatrix::scaled_identity(n, a)?))
}

fn radial_closed_form(n: usize, a: f64, b: f64) -> f64 {
    let q = n as f64 / 4.0;
    4.0 / (n as f64).sqrt() * (a.powf(q) - b.powf(q)).abs()
}

fn fiber(seed: u64) -> Vec<Check> {
    const S: &str = "fiber";
    vec![
        at_most(S, "radial law", 1e-10, || {
            let mut r = stream(seed, 21);
            let mut worst: f64 = 0.0;
            for n in [2, 3] {
                for _ in 0..100 {
                    let a = 10f64.powf(r.random_range(-2.0..2.0));
                    let b = 10f64.powf(r.random_range(-2.0..2.0));
                    worst = worst.max((dist_prime(&scalar(n, a)?, &scalar(n, b)?)? - radial_closed_form(n, a, b)).abs());
                }
            }
            Ok(worst)
        }),
        at_most(S, "oracle agreement", 0.01, || {
            let mut r = stream(seed, 22);
            let mut worst: f64 = 0.0;
            for n in [2, 3] {
                for _ in 0..25 {
                    let (x, y) = (random_spd(&mut r, n, 0.4), random_spd(&mut r, n, 0.4));
                    let d = dist_prime(&ConePoint::from_spd(&x), &ConePoint::from_spd(&y))?;
                    worst = worst.max(relative(d, brute_force_distance(&x.to_dense(), &y.to_dense(), 32)));
                }
            }
            Ok(worst)
        }),
        at_most(S, "dilation law", 1e-8, || {
            let mut r = stream(seed, 23);
            let mut worst: f64 = 0.0;
            for k in 0..1000 {
                let n = 2 + k % 2;
                let (x, y) = (random_spd(&mut r, n, 0.6), random_spd(&mut r, n, 0.6));
                let j = random_invertible(&mut r, n);
                let before = dist_prime(&ConePoint::from_spd(&x), &ConePoint::from_spd(&y))?;
                let after = dist_prime(&ConePoint::from_spd(&x.congruence(&j)?), &ConePoint::from_spd(&y.congruence(&j)?))?;
                worst = worst.max((after / before - j.determinant().abs().sqrt()).abs());
            }
            Ok(worst)
        }),
        at_least(S, "CN inequality slack", -1e-9, || {
            let mut r = stream(seed, 24);
            let mut worst = f64::INFINITY;
            for k in 0..1000 {
                let n = 2 + k % 2;
                let spread = if k % 2 == 0 { 0.5 } else { 3.0 };
                let x = if k % 25 == 0 { ConePoint::tip(n)? } else { random_cone_point(&mut r, n, 3.0, spread) };
                let y = random_cone_point(&mut r, n, 3.0, spread);
                let z = random_cone_point(&mut r, n, 3.0, spread);
                let m = geodesic_prime(&y, &z, 0.5)?;
                let (dxy, dxz, dyz, dxm) = (dist_prime(&x, &y)?, dist_prime(&x, &z)?, dist_prime(&y, &z)?, dist_prime(&x, &m)?);
                worst = worst.min(0.5 * dxy * dxy + 0.5 * dxz * dxz - 0.25 * dyz * dyz - dxm * dxm);
            }
            Ok(worst)
        }),
        at_most(S, "incompleteness witness", 1e-12, || {
            let mut worst: f64 = 0.0;
            for n in [2, 3] {
                let to_tip = |k: usize| dist_prime(&scalar(n, 1.0 / k as f64)?, &ConePoint::tip(n)?);
                let mut last = f64::INFINITY;
                for k in 1..=40 {
                    let t = to_tip(k)?;
                    if t >= last {
                        return Ok(f64::INFINITY);
                    }
                    last = t;
                    worst = worst.max((t - radial_closed_form(n, 1.0 / k as f64, 0.0)).abs());
                    for m in 1..=40 {
                        let d = dist_prime(&scalar(n, 1.0 / k as f64)?, &scalar(n, 1.0 / m as f64)?)?;
                        worst = worst.max((d - radial_closed_form(n, 1.0 / k as f64, 1.0 / m as f64)).abs());
                    }
                }
            }
            Ok(worst)
        }),
        at_most(S, "angular clamp", 0.0, || {
            let mut r = stream(seed, 26);
            let (mut worst, mut found): (f64, usize) = (0.0, 0);
            for k in 0..4000 {
                let n = 2 + k % 2;
                let (a, b) = (random_cone_point(&mut r, n, 3.0, 3.0), random_cone_point(&mut r, n, 3.0, 3.0));
                if raw_angle(&a, &b)? >= PI {
                    found += 1;
                    worst = worst.max((dist_prime(&a, &b)? - (a.radius() + b.radius())).abs());
                }
            }
            Ok(if found == 0 { f64::INFINITY } else { worst })
        }),
    ]
}

fn fields(seed: u64) -> Vec<Check> {
    const S: &str = "fields";
    vec![
        at_most(S, "constant-field reduction", 1e-12, || {
            let mut r = stream(seed, 31);
            let mut worst: f64 = 0.0;
            for _ in 0..20 {
                let g0 = random_spd(&mut r, 2, 0.5);
                let bg = g0.clone();
                let man = Arc::new(DiscreteManifold::torus(&[4, 4], move |_| bg.clone())?.unit_mass());
                let (x, y) = (random_cone_point(&mut r, 2, 3.0, 0.7), random_cone_point(&mut r, 2, 3.0, 0.7));
                let d = ebin_distance(&MetricField::constant(Arc::clone(&man), &x)?, &MetricField::constant(man, &y)?)?;
                worst = worst.max((d - fibre_dist(&g0, x, y)?).abs() / (1.0 + d));
            }
            Ok(worst)
        }),
        at_most(S, "mass homogeneity", 1e-12, || {
            let mut r = stream(seed, 32);
            let man = curved(&mut r, &[4, 4], 0.5)?;
            let mut worst: f64 = 0.0;
            for _ in 0..50 {
                let c = 10f64.powf(r.random_range(-1.0..1.0));
                let scaled = Arc::new(man.scaled_weights(c)?);
                let (f, g) = (random_field(&mut r, &man, 1.0, 0.1)?, random_field(&mut r, &man, 1.0, 0.1)?);
                let d = ebin_distance(&f, &g)?;
                let dc = ebin_distance(&f.with_manifold(Arc::clone(&scaled))?, &g.with_manifold(scaled)?)?;
                worst = worst.max(relative(dc, c.sqrt() * d));
            }
            Ok(worst)
        }),
        at_most(S, "Monod normalization", 1e-10, || {
            let mut r = stream(seed, 33);
            let mut worst: f64 = 0.0;
            for _ in 0..100 {
                let man = curved(&mut r, &[4, 4], 0.5)?;
                let (f, g) = (random_field(&mut r, &man, 1.0, 0.1)?, random_field(&mut r, &man, 1.0, 0.1)?);
                let alpha = alpha_density(&f, &g)?;
                let mass = compensated_sum(alpha.iter().zip(man.weights()).map(|(a, w)| w * a * a));
                worst = worst.max((mass - 1.0).abs());
            }
            Ok(worst)
        }),
        at_most(S, "section geodesic additivity", 1e-9, || {
            let mut r = stream(seed, 34);
            let mut worst: f64 = 0.0;
            for _ in 0..50 {
                let man = curved(&mut r, &[4, 4], 0.5)?;
                let (f, g) = (random_field(&mut r, &man, 1.0, 0.1)?, random_field(&mut r, &man, 1.0, 0.1)?);
                let d = ebin_distance(&f, &g)?;
                let (s, t): (f64, f64) = (r.random(), r.random());
                let between = ebin_distance(&l2_geodesic(&f, &g, s)?, &l2_geodesic(&f, &g, t)?)?;
                worst = worst.max((between - (s - t).abs() * d).abs() / d.max(1.0));
            }
            Ok(worst)
        }),
        at_most(S, "background independence", 1e-9, || {
            let mut r = stream(seed, 35);
            let base = Arc::new(DiscreteManifold::torus_euclidean(&[4, 4])?);
            let changes = (0..2)
                .map(|_| base.background_change(random_backgrounds(&mut r, &base, 0.7)).map(Arc::new))
                .collect::<Result<Vec<_>>>()?;
            let mut worst: f64 = 0.0;
            for _ in 0..50 {
                let (f, g) = (random_field(&mut r, &base, 1.0, 0.1)?, random_field(&mut r, &base, 1.0, 0.1)?);
                let d0 = ebin_distance(&f, &g)?;
                for man in &changes {
                    let d1 = ebin_distance(&f.with_manifold(Arc::clone(man))?, &g.with_manifold(Arc::clone(man))?)?;
                    worst = worst.max(relative(d1, d0));
                }
            }
            Ok(worst)
        }),
        at_most(S, "completion membership", 1e-9, || {
            let mut r = stream(seed, 36);
            let man = curved(&mut r, &[4, 4], 0.5)?;
            let mut worst: f64 = 0.0;
            for _ in 0..100 {
                let f = random_field(&mut r, &man, 1.0, 0.4)?;
                let g = random_field(&mut r, &man, 1.0, 0.4)?;
                let h = random_field(&mut r, &man, 1.0, 0.4)?;
                let d = |a: &MetricField, b: &MetricField| ebin_distance(a, b);
                worst = worst
                    .max(d(&f, &f)?)
                    .max((d(&f, &g)? - d(&g, &f)?).abs())
                    .max(d(&f, &h)? - d(&f, &g)? - d(&g, &h)?);
            }
            Ok(worst)
        }),
    ]
}

/// Same grid with the tip at `v` and the identity elsewhere.
fn tip_marker(man: &Arc<DiscreteManifold>, v: usize) -> Result<MetricField> {
    let id = ConePoint::from_spd(&SpdMatrix::identity(man.n())?);
    let tip = ConePoint::tip(man.n())?;
    let values = (0..man.vertex_count()).map(|u| if u == v { tip.clone() } else { id.clone() }).collect();
    MetricField::new(Arc::clone(man), values)
}

fn isometry(seed: u64) -> Vec<Check> {
    const S: &str = "isometry";
    vec![
        at_most(S, "normality of sections", 1e-10, || {
            let mut r = stream(seed, 41);
            let man = curved(&mut r, &[4, 4], 0.3)?;
            let mut worst: f64 = 0.0;
            for (m, s) in torus_maps() {
                for _ in 0..10 {
                    let phi = torus_affine_diffeo(man.grid().expect("torus"), &m, &s)?;
                    let sec = |r: &mut ChaCha8Rng| FiberSection::new((0..16).map(|_| random_fiber_isometry(r, 2)).collect());
                    let gamma = EbinIsometry::new(Arc::clone(&man), sec(&mut r)?, phi)?;
                    let beta = EbinIsometry::from_section(Arc::clone(&man), sec(&mut r)?)?;
                    let conj = gamma.compose(&beta)?.compose(&gamma.inverse()?)?;
                    let d = conj.diffeo();
                    for v in 0..d.vertex_count() {
                        if d.perm()[v] != v {
                            return Ok(f64::INFINITY);
                        }
                        let dev = d.jacobian(v) - nalgebra::DMatrix::identity(2, 2);
                        worst = worst.max(dev.amax());
                    }
                }
            }
            Ok(worst)
        }),
        at_most(S, "sections meet diffeos trivially", 0.0, || {
            // A section keeps every tip where it is; a nontrivial pullback moves one.
            let man = Arc::new(DiscreteManifold::torus_euclidean(&[4, 4])?);
            let mut failures = 0.0;
            let identity = (vec![vec![1, 0], vec![0, 1]], vec![0, 0]);
            for (m, s) in torus_maps().into_iter().chain([identity]) {
                let phi = torus_affine_diffeo(man.grid().expect("torus"), &m, &s)?;
                let moves = (0..16).any(|v| phi.perm()[v] != v);
                let as_iso = EbinIsometry::from_diffeo(Arc::clone(&man), phi.clone())?;
                let tip_moved = (0..16).any(|v| {
                    let moved = pullback(&phi, &tip_marker(&man, v).expect("valid marker")).expect("same grid");
                    !moved.value(v).is_tip()
                });
                if moves != tip_moved || moves == as_iso.is_pure_section(1e-12) {
                    failures += 1.0;
                }
            }
            Ok(failures)
        }),
        at_most(S, "isometries preserve d_E", 1e-10, || {
            let mut r = stream(seed, 43);
            let flat = Arc::new(DiscreteManifold::torus_euclidean(&[4, 4])?);
            let bent = curved(&mut r, &[4, 4], 0.3)?;
            let mut worst: f64 = 0.0;
            for (k, (m, s)) in torus_maps().into_iter().enumerate() {
                let man = if k % 2 == 0 { &flat } else { &bent };
                let phi = torus_affine_diffeo(man.grid().expect("torus"), &m, &s)?;
                let sec = FiberSection::new((0..16).map(|_| random_fiber_isometry(&mut r, 2)).collect())?;
                let iso = EbinIsometry::new(Arc::clone(man), sec, phi)?;
                for _ in 0..50 {
                    let (f, g) = (random_field(&mut r, man, 1.0, 0.1)?, random_field(&mut r, man, 1.0, 0.1)?);
                    let d = ebin_distance(&f, &g)?;
                    worst = worst.max(relative(ebin_distance(&iso.apply(&f)?, &iso.apply(&g)?)?, d));
                }
            }
            Ok(worst)
        }),
        at_most(S, "normal-form isometry", 1e-9, || {
            let mut r = stream(seed, 44);
            let man = Arc::new(curved(&mut r, &[4, 4], 0.5)?.unit_mass());
            let mut worst: f64 = 0.0;
            for _ in 0..50 {
                let mut perm: Vec<usize> = (0..16).collect();
                perm.shuffle(&mut r);
                let isos = (0..16).map(|_| random_fiber_isometry(&mut r, 2)).collect();
                let nf = L2NormalForm::isometric(Arc::clone(&man), perm, isos)?;
                let (f, g) = (random_field(&mut r, &man, 1.0, 0.1)?, random_field(&mut r, &man, 1.0, 0.1)?);
                worst = worst.max(relative(ebin_distance(&nf.apply(&f)?, &nf.apply(&g)?)?, ebin_distance(&f, &g)?));
            }
            Ok(worst)
        }),
        at_least(S, "factor-law sensitivity", 1e-4, || {
            let mut r = stream(seed, 45);
            let man = Arc::new(curved(&mut r, &[4, 4], 0.5)?.unit_mass());
            let mut weakest = f64::INFINITY;
            for _ in 0..50 {
                let mut perm: Vec<usize> = (0..16).collect();
                perm.shuffle(&mut r);
                let isos = (0..16).map(|_| random_fiber_isometry(&mut r, 2)).collect();
                let nf = L2NormalForm::isometric(Arc::clone(&man), perm.clone(), isos)?;
                let u = r.random_range(0..16);
                let mut dil = nf.dilations().to_vec();
                dil[u] = FiberDilation::new(dil[u].factor() * 1.01, dil[u].iso().clone())?;
                let bent = L2NormalForm::new(Arc::clone(&man), perm, dil)?;
                // Witness pair differing only at the perturbed vertex.
                let f = random_field(&mut r, &man, 1.0, 0.0)?;
                let mut vals = f.values().to_vec();
                vals[u] = ConePoint::from_spd(&random_spd(&mut r, 2, 1.0));
                let h = MetricField::new(Arc::clone(&man), vals)?;
                weakest = weakest.min(relative(ebin_distance(&bent.apply(&f)?, &bent.apply(&h)?)?, ebin_distance(&f, &h)?));
            }
            Ok(weakest)
        }),
        at_most(S, "pullback dilation factor", 1e-10, || {
            let mut r = stream(seed, 46);
            let man = DiscreteManifold::torus_euclidean(&[4, 4])?;
            let mut worst: f64 = 0.0;
            for _ in 0..20 {
                let mut perm: Vec<usize> = (0..16).collect();
                perm.shuffle(&mut r);
                let jac = (0..16).map(|_| random_invertible(&mut r, 2)).collect::<Vec<_>>();
                let d = DiffeoAction::new(perm, jac, false)?;
                for v in 0..16 {
                    let expected = d.jacobian(v).determinant().abs().sqrt();
                    let k = d.fibre_action(&man, v)?;
                    let (x, y) = (random_cone_point(&mut r, 2, 3.0, 0.7), random_cone_point(&mut r, 2, 3.0, 0.7));
                    let ratio = dist_prime(&k.apply(&x)?, &k.apply(&y)?)? / dist_prime(&x, &y)?;
                    worst = worst.max(relative(k.factor(), expected)).max(relative(ratio, expected));
                }
            }
            Ok(worst)
        }),
    ]
}

fn cone_geodesics(r: &mut ChaCha8Rng, n: usize, count: usize) -> Vec<(ConePoint, ConePoint)> {
    (0..count)
        .map(|_| (random_cone_point(r, n, 3.0, 0.6), random_cone_point(r, n, 3.0, 0.6)))
        .collect()
}

fn affine(seed: u64) -> Vec<Check> {
    const S: &str = "affine";
    vec![
        at_most(S, "dilations pass the harness", 1e-6, || {
            let mut r = stream(seed, 51);
            let mut worst: f64 = 0.0;
            for n in [2, 3] {
                for _ in 0..3 {
                    let d = FiberDilation::new(r.random_range(0.3..3.0), random_fiber_isometry(&mut r, n))?;
                    let probe = MapProbe::new(ConeSpace, ConeSpace, |c: &ConePoint| d.apply(c));
                    let v = is_dilation(&probe, &cone_geodesics(&mut r, n, 20), 1e-6)?;
                    worst = worst.max(if v.verdict { v.factor_spread } else { f64::INFINITY });
                }
            }
            Ok(worst)
        }),
        at_most(S, "product factors recovered", 1e-6, || {
            let mut r = stream(seed, 52);
            let space = Product(ConeSpace, ConeSpace);
            let (l, m) = (r.random_range(0.5..3.0), r.random_range(0.5..3.0));
            let d1 = FiberDilation::new(l, random_fiber_isometry(&mut r, 2))?;
            let d2 = FiberDilation::new(m, random_fiber_isometry(&mut r, 2))?;
            let probe = MapProbe::new(space, space, |p: &(ConePoint, ConePoint)| Ok((d1.apply(&p.0)?, d2.apply(&p.1)?)));
            let xg = cone_geodesics(&mut r, 2, 5);
            let yb: Vec<_> = cone_geodesics(&mut r, 2, 2).into_iter().map(|p| p.0).collect();
            let yg = cone_geodesics(&mut r, 2, 5);
            let xb: Vec<_> = cone_geodesics(&mut r, 2, 2).into_iter().map(|p| p.0).collect();
            let pf = product_factor_check(&probe, &xg, &yb, &yg, &xb)?;
            Ok((pf.lambda - l).abs().max((pf.mu - m).abs()).max(pf.lambda_spread).max(pf.mu_spread))
        }),
        at_least(S, "radial square rejected", 1e-3, || {
            let mut r = stream(seed, 53);
            let probe = MapProbe::new(ConeSpace, ConeSpace, radial_square);
            let v = is_dilation(&probe, &cone_geodesics(&mut r, 2, 20), 1e-3)?;
            Ok(v.factor_spread.max(v.max_residual))
        }),
    ]
}
