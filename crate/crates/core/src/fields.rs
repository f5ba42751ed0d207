//! Discretized manifolds and metric fields with the integrated fibre
//! distance `d_E(f, g) = (Σ_v w_v d_v(f(v), g(v))²)^{1/2}`.
//!
//! A [`DiscreteManifold`] is a finite weighted vertex set where each vertex
//! carries a background metric `G₀(v)`; the weight `w_v` plays the role of
//! the background volume element. Field values are stored as cone points in
//! raw coordinates, so completion points (the tip) are ordinary values.
//! Every fibre computation goes through the vertex's [`FibreChart`].
//!
//! Per-vertex work may run in parallel; reductions are compensated sums in
//! fixed vertex order, so results do not depend on scheduling.

use std::sync::Arc;

use rayon::prelude::*;

use crate::cone::{dist_prime, geodesic_prime, ConePoint, FibreChart};
use crate::error::{GeomError, Result};
use crate::spd::SpdMatrix;

/// Tolerance used when checking that a measure has unit mass.
pub const UNIT_MASS_TOL: f64 = 1e-12;

/// Neumaier-compensated sum in iteration order.
pub fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0_f64;
    let mut comp = 0.0_f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Regular grid on the unit torus `ℝᵏ/ℤᵏ`; vertex `i` sits at `i/N`
/// componentwise and owns the cell centred on it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TorusGrid {
    dims: Vec<usize>,
}

impl TorusGrid {
    pub fn new(dims: &[usize]) -> Result<Self> {
        if dims.is_empty() {
            return Err(GeomError::InvalidInput("empty grid".into()));
        }
        if let Some(&bad) = dims.iter().find(|&&d| d < 2) {
            return Err(GeomError::InvalidInput(format!("grid axis of size {bad} (need >= 2)")));
        }
        Ok(Self { dims: dims.to_vec() })
    }

    #[inline]
    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    #[inline]
    pub fn rank(&self) -> usize {
        self.dims.len()
    }

    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cell_volume(&self) -> f64 {
        self.dims.iter().map(|&d| 1.0 / d as f64).product()
    }

    /// Row-major multi-index: the first axis varies slowest.
    pub fn multi_index(&self, mut v: usize) -> Vec<usize> {
        let mut idx = vec![0; self.rank()];
        for k in (0..self.rank()).rev() {
            idx[k] = v % self.dims[k];
            v /= self.dims[k];
        }
        idx
    }

    /// Linear index of a multi-index, reduced modulo the grid.
    pub fn linear_index(&self, idx: &[i64]) -> usize {
        idx.iter().zip(&self.dims).fold(0usize, |acc, (&i, &d)| {
            acc * d + i.rem_euclid(d as i64) as usize
        })
    }

    pub fn position(&self, v: usize) -> Vec<f64> {
        self.multi_index(v)
            .iter()
            .zip(&self.dims)
            .map(|(&i, &d)| i as f64 / d as f64)
            .collect()
    }
}

/// Finite weighted vertex space with a background metric per vertex.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteManifold {
    n: usize,
    weights: Vec<f64>,
    charts: Vec<FibreChart>,
    grid: Option<TorusGrid>,
    total_mass: f64,
}

impl DiscreteManifold {
    pub fn new(
        n: usize,
        weights: Vec<f64>,
        backgrounds: Vec<SpdMatrix>,
        grid: Option<TorusGrid>,
    ) -> Result<Self> {
        if weights.is_empty() {
            return Err(GeomError::InvalidInput("manifold without vertices".into()));
        }
        if weights.len() != backgrounds.len() {
            return Err(GeomError::InvalidInput(format!(
                "{} weights for {} backgrounds",
                weights.len(),
                backgrounds.len()
            )));
        }
        if let Some(g) = &grid {
            if g.len() != weights.len() {
                return Err(GeomError::InvalidInput("grid size does not match vertex count".into()));
            }
        }
        if let Some((v, w)) = weights.iter().enumerate().find(|(_, w)| !(**w > 0.0) || !w.is_finite()) {
            return Err(GeomError::InvalidInput(format!("weight {w} at vertex {v}")));
        }
        let charts = backgrounds
            .into_iter()
            .enumerate()
            .map(|(v, g)| {
                if g.n() != n {
                    return Err(GeomError::BadBackground {
                        vertex: v,
                        reason: format!("dimension {} instead of {n}", g.n()),
                    });
                }
                FibreChart::new(g).map_err(|e| GeomError::BadBackground {
                    vertex: v,
                    reason: e.to_string(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let total_mass = compensated_sum(weights.iter().copied());
        Ok(Self {
            n,
            weights,
            charts,
            grid,
            total_mass,
        })
    }

    /// Torus grid where vertex weights are `√det G₀(v) · cell_volume`.
    pub fn torus_from_backgrounds(dims: &[usize], backgrounds: Vec<SpdMatrix>) -> Result<Self> {
        let grid = TorusGrid::new(dims)?;
        let n = grid.rank();
        if !(2..=3).contains(&n) {
            return Err(GeomError::InvalidInput(format!("torus dimension {n} (supported: 2, 3)")));
        }
        if backgrounds.len() != grid.len() {
            return Err(GeomError::InvalidInput(format!(
                "{} backgrounds for {} vertices",
                backgrounds.len(),
                grid.len()
            )));
        }
        let cell = grid.cell_volume();
        let weights = backgrounds
            .iter()
            .enumerate()
            .map(|(v, g)| {
                if g.n() != n {
                    return Err(GeomError::BadBackground {
                        vertex: v,
                        reason: format!("dimension {} instead of {n}", g.n()),
                    });
                }
                Ok((0.5 * g.log_det()).exp() * cell)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(n, weights, backgrounds, Some(grid))
    }

    /// Torus grid with the background given as a function of position.
    pub fn torus(dims: &[usize], background: impl Fn(&[f64]) -> SpdMatrix) -> Result<Self> {
        let grid = TorusGrid::new(dims)?;
        let bgs = (0..grid.len()).map(|v| background(&grid.position(v))).collect();
        Self::torus_from_backgrounds(dims, bgs)
    }

    pub fn torus_euclidean(dims: &[usize]) -> Result<Self> {
        let n = dims.len();
        let id = SpdMatrix::identity(n.max(1))?;
        Self::torus(dims, |_| id.clone())
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn vertex_count(&self) -> usize {
        self.weights.len()
    }

    #[inline]
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    #[inline]
    pub fn weight(&self, v: usize) -> f64 {
        self.weights[v]
    }

    #[inline]
    pub fn chart(&self, v: usize) -> &FibreChart {
        &self.charts[v]
    }

    pub fn background(&self, v: usize) -> &SpdMatrix {
        self.charts[v].background()
    }

    pub fn backgrounds(&self) -> Vec<SpdMatrix> {
        self.charts.iter().map(|c| c.background().clone()).collect()
    }

    #[inline]
    pub fn grid(&self) -> Option<&TorusGrid> {
        self.grid.as_ref()
    }

    #[inline]
    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    pub fn is_unit_mass(&self) -> bool {
        (self.total_mass - 1.0).abs() <= UNIT_MASS_TOL
    }

    /// Copy with every weight multiplied by `c`.
    pub fn scaled_weights(&self, c: f64) -> Result<Self> {
        let weights = self.weights.iter().map(|w| w * c).collect();
        Self::new(self.n, weights, self.backgrounds(), self.grid.clone())
    }

    /// Copy normalized to total mass one.
    pub fn unit_mass(&self) -> Self {
        let mut out = self.clone();
        for w in &mut out.weights {
            *w /= self.total_mass;
        }
        out.total_mass = compensated_sum(out.weights.iter().copied());
        out
    }

    /// Replaces the background metric; weights rescale by
    /// `√(det G₀′ / det G₀)` per vertex.
    pub fn background_change(&self, new_backgrounds: Vec<SpdMatrix>) -> Result<Self> {
        background_change(self, new_backgrounds)
    }

    pub fn same_as(&self, other: &DiscreteManifold) -> bool {
        std::ptr::eq(self, other) || self == other
    }
}

pub fn torus_grid(dims: &[usize], background: impl Fn(&[f64]) -> SpdMatrix) -> Result<DiscreteManifold> {
    DiscreteManifold::torus(dims, background)
}

pub fn background_change(
    man: &DiscreteManifold,
    new_backgrounds: Vec<SpdMatrix>,
) -> Result<DiscreteManifold> {
    if new_backgrounds.len() != man.vertex_count() {
        return Err(GeomError::InvalidInput(format!(
            "{} backgrounds for {} vertices",
            new_backgrounds.len(),
            man.vertex_count()
        )));
    }
    let weights = new_backgrounds
        .iter()
        .enumerate()
        .map(|(v, g)| {
            if g.n() != man.n() {
                return Err(GeomError::BadBackground {
                    vertex: v,
                    reason: format!("dimension {} instead of {}", g.n(), man.n()),
                });
            }
            let ratio = (0.5 * (g.log_det() - man.background(v).log_det())).exp();
            Ok(man.weight(v) * ratio)
        })
        .collect::<Result<Vec<_>>>()?;
    DiscreteManifold::new(man.n(), weights, new_backgrounds, man.grid.clone())
}

/// Section of the completed fibre bundle: one cone point per vertex.
#[derive(Clone, Debug)]
pub struct MetricField {
    manifold: Arc<DiscreteManifold>,
    values: Vec<ConePoint>,
}

impl MetricField {
    pub fn new(manifold: Arc<DiscreteManifold>, values: Vec<ConePoint>) -> Result<Self> {
        if values.len() != manifold.vertex_count() {
            return Err(GeomError::InvalidInput(format!(
                "{} values for {} vertices",
                values.len(),
                manifold.vertex_count()
            )));
        }
        if let Some(bad) = values.iter().find(|c| c.n() != manifold.n()) {
            return Err(GeomError::DimensionMismatch {
                left: manifold.n(),
                right: bad.n(),
            });
        }
        Ok(Self { manifold, values })
    }

    pub fn from_matrices(manifold: Arc<DiscreteManifold>, values: &[SpdMatrix]) -> Result<Self> {
        Self::new(manifold, values.iter().map(ConePoint::from_spd).collect())
    }

    pub fn constant(manifold: Arc<DiscreteManifold>, value: &ConePoint) -> Result<Self> {
        let values = vec![value.clone(); manifold.vertex_count()];
        Self::new(manifold, values)
    }

    pub fn from_fn(
        manifold: Arc<DiscreteManifold>,
        f: impl Fn(usize) -> Result<ConePoint>,
    ) -> Result<Self> {
        let values = (0..manifold.vertex_count()).map(f).collect::<Result<Vec<_>>>()?;
        Self::new(manifold, values)
    }

    #[inline]
    pub fn manifold(&self) -> &Arc<DiscreteManifold> {
        &self.manifold
    }

    #[inline]
    pub fn values(&self) -> &[ConePoint] {
        &self.values
    }

    #[inline]
    pub fn value(&self, v: usize) -> &ConePoint {
        &self.values[v]
    }

    pub fn into_values(self) -> Vec<ConePoint> {
        self.values
    }

    /// Same raw values over another manifold with the same vertex set.
    pub fn with_manifold(&self, manifold: Arc<DiscreteManifold>) -> Result<Self> {
        Self::new(manifold, self.values.clone())
    }

    /// Values in the standard fibre picture of each vertex.
    pub fn trivialized(&self) -> Result<Vec<ConePoint>> {
        self.values
            .iter()
            .enumerate()
            .map(|(v, c)| self.manifold.chart(v).trivialize(c))
            .collect()
    }
}

pub(crate) fn check_same(f: &MetricField, g: &MetricField) -> Result<()> {
    if Arc::ptr_eq(&f.manifold, &g.manifold) || f.manifold.same_as(&g.manifold) {
        Ok(())
    } else {
        Err(GeomError::ManifoldMismatch)
    }
}

/// Per-vertex squared fibre distances `d_v(f(v), g(v))²`.
pub fn fibre_sq_dists(f: &MetricField, g: &MetricField) -> Result<Vec<f64>> {
    check_same(f, g)?;
    let man = &f.manifold;
    (0..man.vertex_count())
        .into_par_iter()
        .map(|v| man.chart(v).dist(&f.values[v], &g.values[v]).map(|d| d * d))
        .collect()
}

/// Weighted squared-distance contributions `w_v d_v²`.
pub fn weighted_contributions(f: &MetricField, g: &MetricField) -> Result<Vec<f64>> {
    let sq = fibre_sq_dists(f, g)?;
    Ok(sq.iter().zip(f.manifold.weights()).map(|(d, w)| d * w).collect())
}

/// Integrated fibre distance between two metric fields.
pub fn ebin_distance(f: &MetricField, g: &MetricField) -> Result<f64> {
    Ok(compensated_sum(weighted_contributions(f, g)?).max(0.0).sqrt())
}

/// Pointwise cone geodesic; each vertex moves at its own speed
/// `α(v) · d_E(f, g)`.
pub fn l2_geodesic(f: &MetricField, g: &MetricField, t: f64) -> Result<MetricField> {
    check_same(f, g)?;
    let man = &f.manifold;
    let values = (0..man.vertex_count())
        .into_par_iter()
        .map(|v| {
            let chart = man.chart(v);
            let a = chart.trivialize(&f.values[v])?;
            let b = chart.trivialize(&g.values[v])?;
            chart.untrivialize(&geodesic_prime(&a, &b, t)?)
        })
        .collect::<Result<Vec<_>>>()?;
    MetricField::new(Arc::clone(man), values)
}

/// Speed density `α(v) = d_v(f, g) / d_E(f, g)`, normalized so that
/// `Σ w_v α(v)² = 1`.
pub fn alpha_density(f: &MetricField, g: &MetricField) -> Result<Vec<f64>> {
    let sq = fibre_sq_dists(f, g)?;
    let total = compensated_sum(sq.iter().zip(f.manifold.weights()).map(|(d, w)| d * w))
        .max(0.0)
        .sqrt();
    if total <= 1e-12 {
        return Err(GeomError::ZeroDistance(total));
    }
    Ok(sq.iter().map(|d| d.sqrt() / total).collect())
}

/// CN slack `½d(x,y)² + ½d(x,z)² − ¼d(y,z)² − d(x,m)²` with `m` the
/// midpoint of `y` and `z`; non-negative in a CAT(0) space.
pub fn cn_check(x: &MetricField, y: &MetricField, z: &MetricField) -> Result<f64> {
    check_same(x, y)?;
    check_same(x, z)?;
    let m = l2_geodesic(y, z, 0.5)?;
    let dxy = ebin_distance(x, y)?;
    let dxz = ebin_distance(x, z)?;
    let dyz = ebin_distance(y, z)?;
    let dxm = ebin_distance(x, &m)?;
    Ok(0.5 * dxy * dxy + 0.5 * dxz * dxz - 0.25 * dyz * dyz - dxm * dxm)
}

/// CN slack for three points of a single fibre.
pub fn cone_cn_slack(x: &ConePoint, y: &ConePoint, z: &ConePoint) -> Result<f64> {
    let m = geodesic_prime(y, z, 0.5)?;
    let dxy = dist_prime(x, y)?;
    let dxz = dist_prime(x, z)?;
    let dyz = dist_prime(y, z)?;
    let dxm = dist_prime(x, &m)?;
    Ok(0.5 * dxy * dxy + 0.5 * dxz * dxz - 0.25 * dyz * dyz - dxm * dxm)
}
