//! Sampling tests for affine maps and dilations between metric spaces.
//!
//! A map is affine when it sends geodesics to linearly reparametrized
//! geodesics. The checks here sample that property on finitely many
//! geodesics; they verify, they do not prove.

use rayon::prelude::*;

use crate::cone::{dist_prime, geodesic_prime, ConePoint};
use crate::error::{GeomError, Result};
use crate::spd::{dist_affine_invariant, geodesic_affine_invariant, SpdMatrix, UnimodularSpd};

/// Segments shorter than this count as degenerate.
pub const DEGENERATE_EPS: f64 = 1e-12;
/// Tolerance for the domain geodesic oracle and for flat embeddings.
pub const ORACLE_TOL: f64 = 1e-9;
/// Sample count used when none is given.
pub const DEFAULT_SAMPLES: usize = 9;

/// A metric space with a geodesic oracle.
pub trait MetricSpace: Sync {
    type Point: Clone + Send + Sync;

    fn dist(&self, a: &Self::Point, b: &Self::Point) -> Result<f64>;

    /// Constant-speed geodesic from `a` to `b` evaluated at `t ∈ [0, 1]`.
    fn geodesic(&self, a: &Self::Point, b: &Self::Point, t: f64) -> Result<Self::Point>;
}

/// The completion `C₀(P₁(n))` with the `d′` metric.
#[derive(Clone, Copy, Debug, Default)]
pub struct ConeSpace;

impl MetricSpace for ConeSpace {
    type Point = ConePoint;

    fn dist(&self, a: &ConePoint, b: &ConePoint) -> Result<f64> {
        dist_prime(a, b)
    }

    fn geodesic(&self, a: &ConePoint, b: &ConePoint, t: f64) -> Result<ConePoint> {
        geodesic_prime(a, b, t)
    }
}

/// `P(n)` with the affine-invariant metric.
#[derive(Clone, Copy, Debug, Default)]
pub struct SpdSpace;

impl MetricSpace for SpdSpace {
    type Point = SpdMatrix;

    fn dist(&self, a: &SpdMatrix, b: &SpdMatrix) -> Result<f64> {
        dist_affine_invariant(a, b)
    }

    fn geodesic(&self, a: &SpdMatrix, b: &SpdMatrix, t: f64) -> Result<SpdMatrix> {
        geodesic_affine_invariant(a, b, t)
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct EuclideanPlane;

impl MetricSpace for EuclideanPlane {
    type Point = [f64; 2];

    fn dist(&self, a: &[f64; 2], b: &[f64; 2]) -> Result<f64> {
        Ok((a[0] - b[0]).hypot(a[1] - b[1]))
    }

    fn geodesic(&self, a: &[f64; 2], b: &[f64; 2], t: f64) -> Result<[f64; 2]> {
        Ok([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])])
    }
}

/// Metric product with `d² = d_X² + d_Y²`.
#[derive(Clone, Copy, Debug, Default)]
pub struct Product<X, Y>(pub X, pub Y);

impl<X: MetricSpace, Y: MetricSpace> MetricSpace for Product<X, Y> {
    type Point = (X::Point, Y::Point);

    fn dist(&self, a: &Self::Point, b: &Self::Point) -> Result<f64> {
        Ok(self.0.dist(&a.0, &b.0)?.hypot(self.1.dist(&a.1, &b.1)?))
    }

    fn geodesic(&self, a: &Self::Point, b: &Self::Point, t: f64) -> Result<Self::Point> {
        Ok((self.0.geodesic(&a.0, &b.0, t)?, self.1.geodesic(&a.1, &b.1, t)?))
    }
}

/// A map together with the oracles needed to test it.
///
/// Implementations must be pure: the harness evaluates them concurrently.
pub trait MetricMapProbe: Sync {
    type Domain: Clone + Send + Sync;
    type Codomain: Clone + Send + Sync;

    fn map(&self, x: &Self::Domain) -> Result<Self::Codomain>;
    fn dist_domain(&self, a: &Self::Domain, b: &Self::Domain) -> Result<f64>;
    fn dist_codomain(&self, a: &Self::Codomain, b: &Self::Codomain) -> Result<f64>;
    fn geodesic_domain(&self, a: &Self::Domain, b: &Self::Domain, t: f64) -> Result<Self::Domain>;
}

/// Probe built from two metric spaces and a closure.
pub struct MapProbe<S, T, F> {
    pub domain: S,
    pub codomain: T,
    pub f: F,
}

impl<S, T, F> MapProbe<S, T, F>
where
    S: MetricSpace,
    T: MetricSpace,
    F: Fn(&S::Point) -> Result<T::Point> + Sync,
{
    pub fn new(domain: S, codomain: T, f: F) -> Self {
        MapProbe { domain, codomain, f }
    }
}

impl<S, T, F> MetricMapProbe for MapProbe<S, T, F>
where
    S: MetricSpace,
    T: MetricSpace,
    F: Fn(&S::Point) -> Result<T::Point> + Sync,
{
    type Domain = S::Point;
    type Codomain = T::Point;

    fn map(&self, x: &S::Point) -> Result<T::Point> {
        (self.f)(x)
    }

    fn dist_domain(&self, a: &S::Point, b: &S::Point) -> Result<f64> {
        self.domain.dist(a, b)
    }

    fn dist_codomain(&self, a: &T::Point, b: &T::Point) -> Result<f64> {
        self.codomain.dist(a, b)
    }

    fn geodesic_domain(&self, a: &S::Point, b: &S::Point, t: f64) -> Result<S::Point> {
        self.domain.geodesic(a, b, t)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Reparam {
    pub factor: f64,
    /// Deviation from linear reparametrization, relative to the image length.
    pub residual: f64,
}

fn sample_times(samples: usize) -> impl Iterator<Item = f64> {
    (0..samples).map(move |k| k as f64 / (samples - 1) as f64)
}

/// Reparametrization factor of `probe` along the domain geodesic from `a` to `b`.
///
/// Also checks the domain geodesic oracle at the sampled parameters.
pub fn reparam_factor<P: MetricMapProbe + ?Sized>(
    probe: &P,
    a: &P::Domain,
    b: &P::Domain,
    samples: usize,
) -> Result<Reparam> {
    if samples < 3 {
        return Err(GeomError::InvalidInput(format!("need at least 3 samples, got {samples}")));
    }
    let len = probe.dist_domain(a, b)?;
    if len <= DEGENERATE_EPS {
        return Err(GeomError::DegenerateGeodesic(len));
    }
    let fa = probe.map(a)?;
    let fb = probe.map(b)?;
    let image = probe.dist_codomain(&fa, &fb)?;
    let scale = if image > DEGENERATE_EPS { image } else { 1.0 };
    let mut residual = 0.0_f64;
    let mut oracle_err = 0.0_f64;
    for t in sample_times(samples) {
        let g = probe.geodesic_domain(a, b, t)?;
        let from_a = probe.dist_domain(a, &g)?;
        let to_b = probe.dist_domain(&g, b)?;
        oracle_err = oracle_err
            .max((from_a - t * len).abs())
            .max((from_a + to_b - len).abs());
        let fg = probe.map(&g)?;
        let d = probe.dist_codomain(&fa, &fg)?;
        residual = residual.max((d - t * image).abs() / scale);
    }
    if oracle_err > ORACLE_TOL * (1.0 + len) {
        return Err(GeomError::BadGeodesicOracle(oracle_err));
    }
    let factor = if image > DEGENERATE_EPS { image / len } else { 0.0 };
    Ok(Reparam { factor, residual })
}

#[derive(Clone, Debug, PartialEq)]
pub struct DilationVerdict {
    pub verdict: bool,
    pub factor_spread: f64,
    pub max_residual: f64,
    pub factors: Vec<f64>,
}

impl DilationVerdict {
    pub fn mean_factor(&self) -> f64 {
        self.factors.iter().sum::<f64>() / self.factors.len() as f64
    }
}

/// Whether `probe` acts as a dilation on the given geodesics, at the default sample count.
pub fn is_dilation<P: MetricMapProbe + ?Sized>(
    probe: &P,
    geodesics: &[(P::Domain, P::Domain)],
    tol: f64,
) -> Result<DilationVerdict> {
    is_dilation_sampled(probe, geodesics, tol, DEFAULT_SAMPLES)
}

pub fn is_dilation_sampled<P: MetricMapProbe + ?Sized>(
    probe: &P,
    geodesics: &[(P::Domain, P::Domain)],
    tol: f64,
    samples: usize,
) -> Result<DilationVerdict> {
    if geodesics.len() < 2 {
        return Err(GeomError::InvalidInput(format!(
            "need at least 2 geodesics, got {}",
            geodesics.len()
        )));
    }
    let reps = geodesics
        .par_iter()
        .map(|(a, b)| reparam_factor(probe, a, b, samples))
        .collect::<Result<Vec<_>>>()?;
    let factors: Vec<f64> = reps.iter().map(|r| r.factor).collect();
    let factor_spread = spread(&factors);
    let max_residual = reps.iter().map(|r| r.residual).fold(0.0, f64::max);
    Ok(DilationVerdict {
        verdict: factor_spread <= tol && max_residual <= tol,
        factor_spread,
        max_residual,
        factors,
    })
}

fn spread(xs: &[f64]) -> f64 {
    let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if xs.is_empty() {
        0.0
    } else {
        hi - lo
    }
}

/// A flat 2-dimensional sector of the cone.
///
/// `(t cos α, t sin α)` with `t ≥ 0` and `α ∈ [0, π]` maps to the cone point
/// with radius `t` and direction `η(α)`, where `η` is the unit-speed geodesic
/// of `(P₁(n), (√n/4) d)` from `base` towards `toward`. This is an isometry
/// from the closed upper half plane onto its image.
#[derive(Clone, Debug)]
pub struct ConeSector {
    base: SpdMatrix,
    toward: SpdMatrix,
    angle: f64,
}

impl ConeSector {
    pub fn new(base: &UnimodularSpd, toward: &UnimodularSpd) -> Result<Self> {
        let n = base.n();
        let angle = (n as f64).sqrt() / 4.0 * dist_affine_invariant(base.as_spd(), toward.as_spd())?;
        if angle <= DEGENERATE_EPS {
            return Err(GeomError::DegenerateGeodesic(angle));
        }
        Ok(ConeSector {
            base: base.as_spd().clone(),
            toward: toward.as_spd().clone(),
            angle,
        })
    }

    /// Points of the closed upper half plane only.
    pub fn embed(&self, p: [f64; 2]) -> Result<ConePoint> {
        if p[1] < -ORACLE_TOL {
            return Err(GeomError::InvalidInput(format!(
                "point {p:?} is outside the upper half plane"
            )));
        }
        let r = p[0].hypot(p[1]);
        let alpha = p[1].max(0.0).atan2(p[0]);
        let dir = geodesic_affine_invariant(&self.base, &self.toward, alpha / self.angle)?;
        ConePoint::new(r, UnimodularSpd::new(dir))
    }
}

/// Axis-aligned rectangle `[x0, x1] × [y0, y1]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Rect {
    pub fn contains(&self, p: [f64; 2]) -> bool {
        let e = ORACLE_TOL;
        p[0] >= self.x0 - e && p[0] <= self.x1 + e && p[1] >= self.y0 - e && p[1] <= self.y1 + e
    }

    fn corners(&self) -> [[f64; 2]; 4] {
        [
            [self.x0, self.y0],
            [self.x1, self.y0],
            [self.x0, self.y1],
            [self.x1, self.y1],
        ]
    }
}

/// Factor spread of `probe` along parallel segments of a flat rectangle.
///
/// Each anchor `p` gives the segment from `p` to `p + direction`; both ends
/// must lie in `rect`. The embedding is checked against Euclidean distances on
/// the corners and the segment endpoints before any factor is computed.
pub fn parallel_rectangle_check<P, E>(
    probe: &P,
    embed: E,
    rect: Rect,
    direction: [f64; 2],
    anchors: &[[f64; 2]],
) -> Result<f64>
where
    P: MetricMapProbe + ?Sized,
    E: Fn([f64; 2]) -> Result<P::Domain> + Sync,
{
    let step = direction[0].hypot(direction[1]);
    if step <= DEGENERATE_EPS {
        return Err(GeomError::DegenerateGeodesic(step));
    }
    if anchors.is_empty() {
        return Err(GeomError::InvalidInput("no anchors given".into()));
    }
    let mut planar: Vec<[f64; 2]> = rect.corners().to_vec();
    for a in anchors {
        let end = [a[0] + direction[0], a[1] + direction[1]];
        if !rect.contains(*a) || !rect.contains(end) {
            return Err(GeomError::InvalidInput(format!(
                "segment from {a:?} leaves the rectangle"
            )));
        }
        planar.push(*a);
        planar.push(end);
    }
    let embedded = planar
        .par_iter()
        .map(|p| embed(*p))
        .collect::<Result<Vec<_>>>()?;

    let mut flat_err = 0.0_f64;
    for i in 0..planar.len() {
        for j in i + 1..planar.len() {
            let eu = EuclideanPlane.dist(&planar[i], &planar[j])?;
            let d = probe.dist_domain(&embedded[i], &embedded[j])?;
            flat_err = flat_err.max((d - eu).abs() / (1.0 + eu));
        }
    }
    if flat_err > ORACLE_TOL {
        return Err(GeomError::NotFlat(flat_err));
    }

    let factors = (0..anchors.len())
        .into_par_iter()
        .map(|k| {
            let a = &embedded[4 + 2 * k];
            let b = &embedded[5 + 2 * k];
            let image = probe.dist_codomain(&probe.map(a)?, &probe.map(b)?)?;
            Ok(image / step)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(factors
        .iter()
        .map(|f| (f - factors[0]).abs())
        .fold(0.0, f64::max))
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProductFactors {
    pub lambda: f64,
    pub mu: f64,
    pub lambda_spread: f64,
    pub mu_spread: f64,
    pub max_residual: f64,
}

/// Per-factor constants of a map on `X × Y`.
///
/// `λ` comes from the fibres `X × {y}` for `y ∈ y_bases` along `x_geodesics`,
/// `μ` from the fibres `{x} × Y` for `x ∈ x_bases` along `y_geodesics`.
pub fn product_factor_check<P, X, Y>(
    probe: &P,
    x_geodesics: &[(X, X)],
    y_bases: &[Y],
    y_geodesics: &[(Y, Y)],
    x_bases: &[X],
) -> Result<ProductFactors>
where
    P: MetricMapProbe<Domain = (X, Y)> + ?Sized,
    X: Clone + Send + Sync,
    Y: Clone + Send + Sync,
{
    if x_bases.len() < 2 || y_bases.len() < 2 {
        return Err(GeomError::InvalidInput(
            "need at least 2 base points in each factor".into(),
        ));
    }
    if x_geodesics.is_empty() || y_geodesics.is_empty() {
        return Err(GeomError::InvalidInput("need fibre geodesics in each factor".into()));
    }
    let mut x_fibres = Vec::new();
    for y in y_bases {
        for (a, b) in x_geodesics {
            x_fibres.push(((a.clone(), y.clone()), (b.clone(), y.clone())));
        }
    }
    let mut y_fibres = Vec::new();
    for x in x_bases {
        for (a, b) in y_geodesics {
            y_fibres.push(((x.clone(), a.clone()), (x.clone(), b.clone())));
        }
    }
    let run = |segs: &[(P::Domain, P::Domain)]| {
        segs.par_iter()
            .map(|(a, b)| reparam_factor(probe, a, b, DEFAULT_SAMPLES))
            .collect::<Result<Vec<_>>>()
    };
    let xs = run(&x_fibres)?;
    let ys = run(&y_fibres)?;
    let fx: Vec<f64> = xs.iter().map(|r| r.factor).collect();
    let fy: Vec<f64> = ys.iter().map(|r| r.factor).collect();
    let max_residual = xs.iter().chain(&ys).map(|r| r.residual).fold(0.0, f64::max);
    Ok(ProductFactors {
        lambda: fx.iter().sum::<f64>() / fx.len() as f64,
        mu: fy.iter().sum::<f64>() / fy.len() as f64,
        lambda_spread: spread(&fx),
        mu_spread: spread(&fy),
        max_residual,
    })
}

/// Negative control: `(r, p) ↦ (r², p)` on the cone.
pub fn radial_square(c: &ConePoint) -> Result<ConePoint> {
    ConePoint::new(c.radius() * c.radius(), c.dir().clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cone::{congruence_dilation, FiberDilation};
    use crate::sampling::{random_cone_point, random_fiber_isometry, random_unimodular};
    use crate::spd::Matrix;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cone_pairs(seed: u64, n: usize, count: usize) -> Vec<(ConePoint, ConePoint)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count)
            .map(|_| {
                (
                    random_cone_point(&mut rng, n, 3.0, 0.5),
                    random_cone_point(&mut rng, n, 3.0, 0.5),
                )
            })
            .collect()
    }

    fn sector(n: usize, seed: u64) -> ConeSector {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = random_unimodular(&mut rng, n, 0.4);
        let q = random_unimodular(&mut rng, n, 0.4);
        ConeSector::new(&p, &q).unwrap()
    }

    #[test]
    fn reparam_examples() {
        let id = MapProbe::new(ConeSpace, ConeSpace, |c: &ConePoint| Ok(c.clone()));
        for (a, b) in cone_pairs(1, 2, 5) {
            let r = reparam_factor(&id, &a, &b, 7).unwrap();
            assert!((r.factor - 1.0).abs() < 1e-12 && r.residual <= 1e-9);
        }

        let d = congruence_dilation(&Matrix::from_diagonal(&vec![2.0, 1.0].into())).unwrap();
        let cong = MapProbe::new(ConeSpace, ConeSpace, |c: &ConePoint| d.apply(c));
        for (a, b) in cone_pairs(2, 2, 10) {
            let r = reparam_factor(&cong, &a, &b, 9).unwrap();
            assert!((r.factor - 2f64.sqrt()).abs() < 1e-9, "{}", r.factor);
            assert!(r.residual <= 1e-8);
        }

        let proj = MapProbe::new(Product(ConeSpace, ConeSpace), ConeSpace, |p: &(ConePoint, ConePoint)| {
            Ok(p.0.clone())
        });
        let (a, b) = &cone_pairs(3, 2, 1)[0];
        let r = reparam_factor(&proj, &(a.clone(), a.clone()), &(b.clone(), b.clone()), 9).unwrap();
        assert!((r.factor - 0.5f64.sqrt()).abs() < 1e-12);
        assert!(r.residual <= 1e-9);
    }

    #[test]
    fn reparam_rejects_degenerate() {
        let id = MapProbe::new(ConeSpace, ConeSpace, |c: &ConePoint| Ok(c.clone()));
        let a = ConePoint::from_spd(&SpdMatrix::identity(2).unwrap());
        assert!(matches!(
            reparam_factor(&id, &a, &a, 5),
            Err(GeomError::DegenerateGeodesic(_))
        ));
        let b = ConePoint::from_spd(&SpdMatrix::scaled_identity(2, 2.0).unwrap());
        assert!(reparam_factor(&id, &a, &b, 2).is_err());
    }

    #[test]
    fn bad_oracle_is_detected() {
        struct Bent;
        impl MetricSpace for Bent {
            type Point = [f64; 2];
            fn dist(&self, a: &[f64; 2], b: &[f64; 2]) -> Result<f64> {
                EuclideanPlane.dist(a, b)
            }
            fn geodesic(&self, a: &[f64; 2], b: &[f64; 2], t: f64) -> Result<[f64; 2]> {
                Ok([a[0] + t * t * (b[0] - a[0]), a[1] + t * t * (b[1] - a[1])])
            }
        }
        let id = MapProbe::new(Bent, EuclideanPlane, |p: &[f64; 2]| Ok(*p));
        assert!(matches!(
            reparam_factor(&id, &[0.0, 0.0], &[1.0, 0.0], 5),
            Err(GeomError::BadGeodesicOracle(_))
        ));
    }

    #[test]
    fn collapsed_image_reports_zero_factor() {
        let konst = MapProbe::new(EuclideanPlane, EuclideanPlane, |_: &[f64; 2]| Ok([1.0, 1.0]));
        let r = reparam_factor(&konst, &[0.0, 0.0], &[1.0, 2.0], 5).unwrap();
        assert_eq!(r.factor, 0.0);
        assert_eq!(r.residual, 0.0);
    }

    #[test]
    fn dilation_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for n in [2, 3] {
            let d = FiberDilation::new(1.7, random_fiber_isometry(&mut rng, n)).unwrap();
            let probe = MapProbe::new(ConeSpace, ConeSpace, |c: &ConePoint| d.apply(c));
            let v = is_dilation(&probe, &cone_pairs(5 + n as u64, n, 20), 1e-6).unwrap();
            assert!(v.verdict && v.factor_spread <= 1e-6, "{v:?}");
            assert!((v.mean_factor() - 1.7).abs() < 1e-9);
        }

        let id = MapProbe::new(ConeSpace, ConeSpace, |c: &ConePoint| Ok(c.clone()));
        let v = is_dilation(&id, &cone_pairs(9, 2, 5), 1e-9).unwrap();
        assert!(v.verdict && v.factor_spread == 0.0);

        let sq = MapProbe::new(ConeSpace, ConeSpace, radial_square);
        let v = is_dilation(&sq, &cone_pairs(10, 2, 20), 1e-3).unwrap();
        assert!(!v.verdict);
    }

    #[test]
    fn projection_speed_ratios_vary() {
        let proj = MapProbe::new(Product(ConeSpace, ConeSpace), ConeSpace, |p: &(ConePoint, ConePoint)| {
            Ok(p.0.clone())
        });
        let xs = cone_pairs(11, 2, 20);
        let ys = cone_pairs(12, 2, 20);
        let geos: Vec<_> = xs
            .iter()
            .zip(&ys)
            .map(|((a, b), (c, d))| ((a.clone(), c.clone()), (b.clone(), d.clone())))
            .collect();
        let v = is_dilation(&proj, &geos, 1e-3).unwrap();
        assert!(!v.verdict && v.factor_spread >= 0.1, "{v:?}");
        assert!(is_dilation(&proj, &geos[..1], 1e-3).is_err());
    }

    #[test]
    fn rectangle_examples() {
        let s = sector(2, 13);
        let rect = Rect { x0: 0.5, x1: 2.0, y0: 0.2, y1: 1.5 };
        let anchors = [[0.5, 0.2], [1.0, 0.5], [0.6, 1.0], [1.5, 0.3]];
        let dir = [0.4, 0.3];
        let embed = |p| s.embed(p);

        let id = MapProbe::new(ConeSpace, ConeSpace, |c: &ConePoint| Ok(c.clone()));
        let sp = parallel_rectangle_check(&id, embed, rect, dir, &anchors).unwrap();
        assert!(sp <= 1e-9, "{sp}");

        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let d = FiberDilation::new(0.6, random_fiber_isometry(&mut rng, 2)).unwrap();
        let dil = MapProbe::new(ConeSpace, ConeSpace, |c: &ConePoint| d.apply(c));
        let sp = parallel_rectangle_check(&dil, embed, rect, dir, &anchors).unwrap();
        assert!(sp <= 1e-8, "{sp}");

        let sq = MapProbe::new(ConeSpace, ConeSpace, radial_square);
        let sp = parallel_rectangle_check(&sq, embed, rect, dir, &anchors).unwrap();
        assert!(sp > 0.05, "{sp}");
    }

    #[test]
    fn rectangle_rejects_curved_embedding() {
        let s = sector(2, 15);
        // Doubling the angle doubles angular distances, so the image is not flat.
        let bent = |p: [f64; 2]| {
            let r = p[0].hypot(p[1]);
            let a = 2.0 * p[1].atan2(p[0]);
            s.embed([r * a.cos(), r * a.sin()])
        };
        let rect = Rect { x0: 0.5, x1: 1.0, y0: 0.1, y1: 0.4 };
        let id = MapProbe::new(ConeSpace, ConeSpace, |c: &ConePoint| Ok(c.clone()));
        let res = parallel_rectangle_check(&id, bent, rect, [0.2, 0.1], &[[0.6, 0.1]]);
        assert!(matches!(res, Err(GeomError::NotFlat(_))));
        let res = parallel_rectangle_check(&id, |p| s.embed(p), rect, [2.0, 0.0], &[[0.6, 0.1]]);
        assert!(matches!(res, Err(GeomError::InvalidInput(_))));
    }

    #[test]
    fn product_examples() {
        let space = Product(ConeSpace, ConeSpace);
        let xg = cone_pairs(16, 2, 4);
        let yg = cone_pairs(17, 2, 4);
        let xb: Vec<ConePoint> = cone_pairs(18, 2, 2).into_iter().map(|p| p.0).collect();
        let yb: Vec<ConePoint> = cone_pairs(19, 2, 2).into_iter().map(|p| p.1).collect();

        let mut rng = ChaCha8Rng::seed_from_u64(20);
        let i1 = random_fiber_isometry(&mut rng, 2);
        let i2 = random_fiber_isometry(&mut rng, 2);
        let iso = MapProbe::new(space, space, |p: &(ConePoint, ConePoint)| {
            Ok((i1.apply(&p.0)?, i2.apply(&p.1)?))
        });
        let r = product_factor_check(&iso, &xg, &yb, &yg, &xb).unwrap();
        assert!((r.lambda - 1.0).abs() < 1e-9 && (r.mu - 1.0).abs() < 1e-9);
        assert!(r.lambda_spread <= 1e-9 && r.mu_spread <= 1e-9);

        let d2 = FiberDilation::new(2.0, i1.clone()).unwrap();
        let d3 = FiberDilation::new(3.0, i2.clone()).unwrap();
        let dil = MapProbe::new(space, space, |p: &(ConePoint, ConePoint)| {
            Ok((d2.apply(&p.0)?, d3.apply(&p.1)?))
        });
        let r = product_factor_check(&dil, &xg, &yb, &yg, &xb).unwrap();
        assert!((r.lambda - 2.0).abs() < 1e-6 && (r.mu - 3.0).abs() < 1e-6, "{r:?}");

        let proj = MapProbe::new(space, ConeSpace, |p: &(ConePoint, ConePoint)| Ok(p.0.clone()));
        let r = product_factor_check(&proj, &xg, &yb, &yg, &xb).unwrap();
        assert!((r.lambda - 1.0).abs() < 1e-9 && r.mu == 0.0, "{r:?}");

        assert!(product_factor_check(&proj, &xg, &yb[..1], &yg, &xb).is_err());
    }

    #[test]
    fn sector_is_flat_through_the_tip() {
        let s = sector(3, 21);
        let pts = [[1.0, 0.0], [-1.0, 0.0], [0.0, 0.0], [0.3, 0.7], [-0.8, 0.2]];
        for p in pts {
            for q in pts {
                let d = dist_prime(&s.embed(p).unwrap(), &s.embed(q).unwrap()).unwrap();
                let e = EuclideanPlane.dist(&p, &q).unwrap();
                assert!((d - e).abs() < 1e-9, "{p:?} {q:?} {d} {e}");
            }
        }
    }
}
