//! Fibre geometry: `P(n)` with the conformally scaled metric
//! `g′_x(a, b) = tr(x⁻¹ a x⁻¹ b) √det x` and its completion.
//!
//! The completion is the Euclidean cone over `(P₁(n), (√n/4)·d_P)`. A matrix
//! `x` sits at radius `r = (4/√n) det(x)^{1/4}` in direction
//! `det(x)^{-1/n} x`. Distances follow the cone cosine law with the angle
//! clamped at `π`. Points at radius `≤ TIP_EPS` are the tip, which has no
//! matrix representative.

use std::f64::consts::PI;

use crate::error::{GeomError, Result};
use crate::spd::{
    dist_affine_invariant, geodesic_affine_invariant, square_det, Matrix, SpdMatrix,
    UnimodularSpd, MAX_DIM,
};

/// Radii at or below this value are identified with the tip.
pub const TIP_EPS: f64 = 1e-12;

/// Tolerance on `||det A| - 1|` for fibre isometries.
pub const UNIMODULAR_TOL: f64 = 1e-10;

/// Point of the cone completion `C₀(P₁(n))`.
#[derive(Clone, Debug)]
pub struct ConePoint {
    radius: f64,
    dir: UnimodularSpd,
}

impl ConePoint {
    pub fn tip(n: usize) -> Result<Self> {
        Ok(Self {
            radius: 0.0,
            dir: UnimodularSpd::identity(n)?,
        })
    }

    /// Radii at or below [`TIP_EPS`] collapse to the tip.
    pub fn new(radius: f64, dir: UnimodularSpd) -> Result<Self> {
        if !radius.is_finite() || radius < 0.0 {
            return Err(GeomError::InvalidInput(format!("cone radius {radius}")));
        }
        if radius <= TIP_EPS {
            return Self::tip(dir.n());
        }
        Ok(Self { radius, dir })
    }

    pub fn from_spd(x: &SpdMatrix) -> Self {
        let n = x.n() as f64;
        let radius = 4.0 / n.sqrt() * (x.log_det() / 4.0).exp();
        Self {
            radius,
            dir: UnimodularSpd::new(x.clone()),
        }
    }

    /// Matrix `det^{1/n} · dir` with `det = (r √n / 4)^4`.
    pub fn to_spd(&self) -> Result<SpdMatrix> {
        if self.is_tip() {
            return Err(GeomError::TipHasNoMatrix);
        }
        let n = self.n() as f64;
        let scale = (self.radius * n.sqrt() / 4.0).powf(4.0 / n);
        self.dir.as_spd().scale(scale)
    }

    #[inline]
    pub fn radius(&self) -> f64 {
        self.radius
    }

    #[inline]
    pub fn dir(&self) -> &UnimodularSpd {
        &self.dir
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.dir.n()
    }

    #[inline]
    pub fn is_tip(&self) -> bool {
        self.radius <= TIP_EPS
    }
}

impl PartialEq for ConePoint {
    fn eq(&self, other: &Self) -> bool {
        if self.n() != other.n() {
            return false;
        }
        match (self.is_tip(), other.is_tip()) {
            (true, true) => true,
            (false, false) => self.radius == other.radius && self.dir == other.dir,
            _ => false,
        }
    }
}

impl From<&SpdMatrix> for ConePoint {
    fn from(x: &SpdMatrix) -> Self {
        ConePoint::from_spd(x)
    }
}

impl From<SpdMatrix> for ConePoint {
    fn from(x: SpdMatrix) -> Self {
        ConePoint::from_spd(&x)
    }
}

pub fn to_cone(x: &SpdMatrix) -> ConePoint {
    ConePoint::from_spd(x)
}

pub fn from_cone(c: &ConePoint) -> Result<SpdMatrix> {
    c.to_spd()
}

fn same_dim(a: usize, b: usize) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(GeomError::DimensionMismatch { left: a, right: b })
    }
}

/// Unclamped cone angle `(√n/4)·d_P(dir₁, dir₂)`.
pub fn raw_angle(c1: &ConePoint, c2: &ConePoint) -> Result<f64> {
    same_dim(c1.n(), c2.n())?;
    let n = c1.n() as f64;
    Ok(n.sqrt() / 4.0 * dist_affine_invariant(c1.dir.as_spd(), c2.dir.as_spd())?)
}

/// Completed fibre distance `d′`.
pub fn dist_prime(c1: &ConePoint, c2: &ConePoint) -> Result<f64> {
    same_dim(c1.n(), c2.n())?;
    if c1.is_tip() {
        return Ok(c2.radius());
    }
    if c2.is_tip() {
        return Ok(c1.radius());
    }
    let theta = raw_angle(c1, c2)?;
    let (r1, r2) = (c1.radius, c2.radius);
    if theta >= PI {
        return Ok(r1 + r2);
    }
    // (r₁ − r₂)² + 4 r₁ r₂ sin²(θ/2) avoids cancellation for nearby points.
    let h = (0.5 * theta).sin();
    Ok(((r1 - r2).powi(2) + 4.0 * r1 * r2 * h * h).sqrt())
}

/// Constant-speed geodesic in the completed fibre.
///
/// Geodesics are computed in the comparison half-plane spanned by the two
/// radial rays and transported back along the `P₁(n)` geodesic. When the
/// angle reaches `π` the path runs through the tip.
pub fn geodesic_prime(c1: &ConePoint, c2: &ConePoint, t: f64) -> Result<ConePoint> {
    same_dim(c1.n(), c2.n())?;
    if !(0.0..=1.0).contains(&t) {
        return Err(GeomError::InvalidInput(format!("geodesic parameter {t} outside [0, 1]")));
    }
    if t == 0.0 {
        return Ok(c1.clone());
    }
    if t == 1.0 {
        return Ok(c2.clone());
    }
    let (r1, r2) = (c1.radius, c2.radius);
    if c1.is_tip() || c2.is_tip() {
        let dir = if c1.is_tip() { c2.dir.clone() } else { c1.dir.clone() };
        return ConePoint::new((1.0 - t) * r1 + t * r2, dir);
    }
    let theta = raw_angle(c1, c2)?;
    if theta >= PI {
        let s = t * (r1 + r2);
        return if s < r1 {
            ConePoint::new(r1 - s, c1.dir.clone())
        } else {
            ConePoint::new(s - r1, c2.dir.clone())
        };
    }
    let px = (1.0 - t) * r1 + t * r2 * theta.cos();
    let py = t * r2 * theta.sin();
    let radius = px.hypot(py);
    let phi = py.atan2(px);
    let frac = if theta > 0.0 { (phi / theta).clamp(0.0, 1.0) } else { 0.0 };
    let dir = geodesic_affine_invariant(c1.dir.as_spd(), c2.dir.as_spd(), frac)?;
    ConePoint::new(radius, UnimodularSpd::new(dir))
}

/// Isometry `p ↦ A p^{±1} Aᵀ` of `P₁(n)` with `|det A| = 1`; it acts on the
/// cone by fixing the radius.
#[derive(Clone, Debug, PartialEq)]
pub struct FiberIsometry {
    a: Matrix,
    invert: bool,
}

impl FiberIsometry {
    pub fn new(a: Matrix, invert: bool) -> Result<Self> {
        let n = a.nrows();
        if n == 0 || n > MAX_DIM {
            return Err(GeomError::UnsupportedDimension(n));
        }
        let det = square_det(&a, n)?;
        if !((det.abs() - 1.0).abs() <= UNIMODULAR_TOL) {
            return Err(GeomError::InvalidInput(format!(
                "fibre isometry needs |det A| = 1, got {det}"
            )));
        }
        Ok(Self { a, invert })
    }

    /// Rescales an invertible matrix to `|det| = 1` first.
    pub fn normalized(a: Matrix, invert: bool) -> Result<Self> {
        let n = a.nrows();
        let det = square_det(&a, n)?;
        if det == 0.0 || !det.is_finite() {
            return Err(GeomError::SingularInput("fibre isometry matrix is singular".into()));
        }
        let a = a / det.abs().powf(1.0 / n as f64);
        Self::new(a, invert)
    }

    pub fn identity(n: usize) -> Result<Self> {
        Self::new(Matrix::identity(n, n), false)
    }

    #[inline]
    pub fn matrix(&self) -> &Matrix {
        &self.a
    }

    #[inline]
    pub fn inverts(&self) -> bool {
        self.invert
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    pub fn apply_dir(&self, p: &UnimodularSpd) -> Result<UnimodularSpd> {
        same_dim(self.n(), p.n())?;
        // Work on the factor `p = L Lᵀ` so the image is formed as a Gram
        // matrix `F Fᵀ`; that keeps small eigenvalues accurate.
        let l = p.as_spd().cholesky();
        let f = if self.invert {
            l.solve_lower_triangular(&self.a.transpose())
                .ok_or_else(|| GeomError::SingularInput("direction factor".into()))?
                .transpose()
        } else {
            &self.a * l
        };
        let moved = SpdMatrix::from_dense(&(&f * f.transpose()))?;
        Ok(UnimodularSpd::new(moved))
    }

    pub fn apply(&self, c: &ConePoint) -> Result<ConePoint> {
        same_dim(self.n(), c.n())?;
        if c.is_tip() {
            return Ok(c.clone());
        }
        ConePoint::new(c.radius(), self.apply_dir(c.dir())?)
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &FiberIsometry) -> Result<FiberIsometry> {
        same_dim(self.n(), other.n())?;
        let inner = if self.invert {
            other
                .a
                .clone()
                .try_inverse()
                .ok_or_else(|| GeomError::SingularInput("isometry matrix".into()))?
                .transpose()
        } else {
            other.a.clone()
        };
        FiberIsometry::normalized(&self.a * inner, self.invert ^ other.invert)
    }

    pub fn inverse(&self) -> Result<FiberIsometry> {
        if self.invert {
            FiberIsometry::normalized(self.a.transpose(), true)
        } else {
            let inv = self
                .a
                .clone()
                .try_inverse()
                .ok_or_else(|| GeomError::SingularInput("isometry matrix".into()))?;
            FiberIsometry::normalized(inv, false)
        }
    }
}

/// Dilation `(r, p) ↦ (factor · r, iso(p))` of the completed fibre.
#[derive(Clone, Debug, PartialEq)]
pub struct FiberDilation {
    factor: f64,
    iso: FiberIsometry,
}

impl FiberDilation {
    pub fn new(factor: f64, iso: FiberIsometry) -> Result<Self> {
        if !(factor > 0.0) || !factor.is_finite() {
            return Err(GeomError::InvalidInput(format!("dilation factor {factor}")));
        }
        Ok(Self { factor, iso })
    }

    pub fn identity(n: usize) -> Result<Self> {
        Self::new(1.0, FiberIsometry::identity(n)?)
    }

    #[inline]
    pub fn factor(&self) -> f64 {
        self.factor
    }

    #[inline]
    pub fn iso(&self) -> &FiberIsometry {
        &self.iso
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.iso.n()
    }

    pub fn apply(&self, c: &ConePoint) -> Result<ConePoint> {
        same_dim(self.n(), c.n())?;
        if c.is_tip() {
            return Ok(c.clone());
        }
        ConePoint::new(self.factor * c.radius(), self.iso.apply_dir(c.dir())?)
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &FiberDilation) -> Result<FiberDilation> {
        FiberDilation::new(self.factor * other.factor, self.iso.compose(&other.iso)?)
    }

    pub fn inverse(&self) -> Result<FiberDilation> {
        FiberDilation::new(1.0 / self.factor, self.iso.inverse()?)
    }
}

pub fn apply_dilation(d: &FiberDilation, c: &ConePoint) -> Result<ConePoint> {
    d.apply(c)
}

/// The congruence `x ↦ J x Jᵀ` as a fibre dilation: factor `|det J|^{1/2}`,
/// angular part `J / |det J|^{1/n}`.
pub fn congruence_dilation(j: &Matrix) -> Result<FiberDilation> {
    let n = j.nrows();
    if n == 0 || n > MAX_DIM {
        return Err(GeomError::UnsupportedDimension(n));
    }
    let det = square_det(j, n)?;
    if det == 0.0 || !det.is_finite() {
        return Err(GeomError::SingularInput("congruence by singular matrix".into()));
    }
    let factor = det.abs().sqrt();
    FiberDilation::new(factor, FiberIsometry::normalized(j.clone(), false)?)
}

/// Trivialization of one fibre against a background metric `G₀ = L Lᵀ`:
/// `x ↦ L⁻¹ x L⁻ᵀ` carries the fibre metric onto the standard `d′`.
#[derive(Clone, Debug, PartialEq)]
pub struct FibreChart {
    background: SpdMatrix,
    to_standard: FiberDilation,
    from_standard: FiberDilation,
    standard: bool,
}

impl FibreChart {
    /// Uses the Cholesky factor of `background`.
    pub fn new(background: SpdMatrix) -> Result<Self> {
        let l = background.cholesky();
        let standard = background == SpdMatrix::identity(background.n())?;
        let mut chart = Self::with_factor_unchecked(background, l)?;
        chart.standard = standard;
        Ok(chart)
    }

    /// Uses an arbitrary factor `L` with `L Lᵀ = background`.
    pub fn with_factor(background: SpdMatrix, l: Matrix) -> Result<Self> {
        let n = background.n();
        square_det(&l, n)?;
        let llt = &l * l.transpose();
        let scale = 1.0 + background.as_sym().frobenius_norm();
        let err = (llt - background.to_dense()).abs().max();
        if err > 1e-10 * scale {
            return Err(GeomError::InvalidInput(format!(
                "factor does not reproduce the background (error {err:e})"
            )));
        }
        Self::with_factor_unchecked(background, l)
    }

    fn with_factor_unchecked(background: SpdMatrix, l: Matrix) -> Result<Self> {
        let l_inv = l
            .clone()
            .try_inverse()
            .ok_or_else(|| GeomError::SingularInput("background factor".into()))?;
        Ok(Self {
            to_standard: congruence_dilation(&l_inv)?,
            from_standard: congruence_dilation(&l)?,
            background,
            standard: false,
        })
    }

    #[inline]
    pub fn background(&self) -> &SpdMatrix {
        &self.background
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.background.n()
    }

    /// Dilation taking raw fibre values to the standard fibre.
    pub fn to_standard(&self) -> &FiberDilation {
        &self.to_standard
    }

    pub fn from_standard(&self) -> &FiberDilation {
        &self.from_standard
    }

    pub fn trivialize(&self, c: &ConePoint) -> Result<ConePoint> {
        if self.standard {
            same_dim(self.n(), c.n())?;
            return Ok(c.clone());
        }
        self.to_standard.apply(c)
    }

    pub fn untrivialize(&self, c: &ConePoint) -> Result<ConePoint> {
        if self.standard {
            same_dim(self.n(), c.n())?;
            return Ok(c.clone());
        }
        self.from_standard.apply(c)
    }

    pub fn dist(&self, x: &ConePoint, y: &ConePoint) -> Result<f64> {
        dist_prime(&self.trivialize(x)?, &self.trivialize(y)?)
    }
}

/// Fibre distance over a point with background metric `g0`.
pub fn fibre_dist(
    g0: &SpdMatrix,
    x: impl Into<ConePoint>,
    y: impl Into<ConePoint>,
) -> Result<f64> {
    FibreChart::new(g0.clone())?.dist(&x.into(), &y.into())
}
