//! Random generators for matrices, cone points, fibre maps and fields.

use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::cone::{ConePoint, FiberIsometry};
use crate::error::Result;
use crate::fields::{DiscreteManifold, MetricField};
use crate::spd::{spd_exp, Matrix, SpdMatrix, SymMatrix, UnimodularSpd};

fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

/// Symmetric matrix with independent `N(0, scale²)` upper-triangle entries.
pub fn random_sym<R: Rng + ?Sized>(rng: &mut R, n: usize, scale: f64) -> SymMatrix {
    SymMatrix::from_fn(n, |_, _| scale * normal(rng)).expect("valid dimension")
}

/// `exp(S)` for a random symmetric `S`; `spread` controls the log-scale.
pub fn random_spd<R: Rng + ?Sized>(rng: &mut R, n: usize, spread: f64) -> SpdMatrix {
    spd_exp(&random_sym(rng, n, spread))
}

pub fn random_unimodular<R: Rng + ?Sized>(rng: &mut R, n: usize, spread: f64) -> UnimodularSpd {
    UnimodularSpd::new(random_spd(rng, n, spread))
}

/// Cone point with radius uniform in `[0, max_radius)` and a random direction.
pub fn random_cone_point<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    max_radius: f64,
    spread: f64,
) -> ConePoint {
    let r = rng.random::<f64>() * max_radius;
    ConePoint::new(r, random_unimodular(rng, n, spread)).expect("valid radius")
}

/// Gaussian matrix, resampled until `|det|` is not tiny.
pub fn random_invertible<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Matrix {
    loop {
        let m = Matrix::from_fn(n, n, |_, _| normal(rng));
        if m.determinant().abs() > 0.05 {
            return m;
        }
    }
}

/// Uniformly distributed orthogonal matrix (QR of a Gaussian, signs fixed).
pub fn random_orthogonal<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Matrix {
    let qr = Matrix::from_fn(n, n, |_, _| normal(rng)).qr();
    let (q, r) = (qr.q(), qr.r());
    let mut q = q;
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// `Q exp(S)` with `Q` orthogonal and `S` traceless symmetric, so the
/// condition number stays near `exp(spread)` instead of the heavy tail of
/// normalized Gaussian matrices.
pub fn random_fiber_isometry_spread<R: Rng + ?Sized>(rng: &mut R, n: usize, spread: f64) -> FiberIsometry {
    let q = random_orthogonal(rng, n);
    let s = random_sym(rng, n, spread);
    let shift = s.trace() / n as f64;
    let s = s.sub(&SymMatrix::identity(n).expect("valid dimension").scale(shift)).expect("same dimension");
    let a = q * spd_exp(&s).to_dense();
    let invert = rng.random::<bool>();
    FiberIsometry::normalized(a, invert).expect("invertible by construction")
}

pub fn random_fiber_isometry<R: Rng + ?Sized>(rng: &mut R, n: usize) -> FiberIsometry {
    random_fiber_isometry_spread(rng, n, 0.5)
}

/// Random field: each vertex is a random SPD value, or the tip with
/// probability `tip_prob`.
pub fn random_field<R: Rng + ?Sized>(
    rng: &mut R,
    manifold: &Arc<DiscreteManifold>,
    spread: f64,
    tip_prob: f64,
) -> Result<MetricField> {
    let n = manifold.n();
    let values = (0..manifold.vertex_count())
        .map(|_| {
            if rng.random::<f64>() < tip_prob {
                ConePoint::tip(n).expect("valid dimension")
            } else {
                ConePoint::from_spd(&random_spd(rng, n, spread))
            }
        })
        .collect();
    MetricField::new(Arc::clone(manifold), values)
}

/// Random background metrics for every vertex.
pub fn random_backgrounds<R: Rng + ?Sized>(
    rng: &mut R,
    manifold: &DiscreteManifold,
    spread: f64,
) -> Vec<SpdMatrix> {
    (0..manifold.vertex_count())
        .map(|_| random_spd(rng, manifold.n(), spread))
        .collect()
}
