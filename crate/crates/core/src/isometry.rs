//! Isometries of the space of metric fields.
//!
//! Two families act on fields: pullbacks by (discrete) diffeomorphisms and
//! fibrewise isometry sections. An [`EbinIsometry`] is the pair
//! `(section, diffeo)` acting as `g ↦ section(pullback(diffeo, g))`;
//! composition keeps that normal form. On finite weighted spaces the
//! general measure-theoretic form is [`L2NormalForm`]: a vertex bijection
//! `φ` together with per-vertex dilations whose factors are tied to the
//! weight ratio `w_{φ⁻¹(u)} / w_u`.
//!
//! Composition convention: `(a ∘ b)(g) = a(b(g))`.

use std::sync::Arc;

use crate::cone::{congruence_dilation, FiberDilation, FiberIsometry};
use crate::error::{GeomError, Result};
use crate::fields::{check_same, compensated_sum, fibre_sq_dists, DiscreteManifold, MetricField, TorusGrid};
use crate::spd::Matrix;

/// Anything that maps metric fields to metric fields with the output at
/// `v` depending only on the input at `vertex_map()[v]`.
pub trait FieldMap {
    fn apply(&self, f: &MetricField) -> Result<MetricField>;
    fn vertex_map(&self) -> Vec<usize>;
}

fn check_bijection(perm: &[usize]) -> Result<()> {
    let mut seen = vec![false; perm.len()];
    for (v, &p) in perm.iter().enumerate() {
        if p >= perm.len() {
            return Err(GeomError::NotBijective(format!("vertex {v} maps to {p}, out of range")));
        }
        if std::mem::replace(&mut seen[p], true) {
            return Err(GeomError::NotBijective(format!("vertex {p} hit twice")));
        }
    }
    Ok(())
}

fn invert_perm(perm: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; perm.len()];
    for (v, &p) in perm.iter().enumerate() {
        inv[p] = v;
    }
    inv
}

fn check_field_shape(f: &MetricField, vertices: usize, n: usize) -> Result<()> {
    if f.manifold().vertex_count() != vertices || f.manifold().n() != n {
        Err(GeomError::ManifoldMismatch)
    } else {
        Ok(())
    }
}

/// Discrete diffeomorphism: `π(v)` is the image of vertex `v` and `J_v` the
/// Jacobian there. The pullback reads `g(π(v))` and transforms it by
/// `x ↦ J_vᵀ x J_v`.
#[derive(Clone, Debug, PartialEq)]
pub struct DiffeoAction {
    perm: Vec<usize>,
    jacobians: Vec<Matrix>,
    exact: bool,
}

impl DiffeoAction {
    pub fn new(perm: Vec<usize>, jacobians: Vec<Matrix>, exact: bool) -> Result<Self> {
        check_bijection(&perm)?;
        if jacobians.len() != perm.len() {
            return Err(GeomError::InvalidInput(format!(
                "{} Jacobians for {} vertices",
                jacobians.len(),
                perm.len()
            )));
        }
        let n = jacobians.first().map_or(0, |j| j.nrows());
        for (v, j) in jacobians.iter().enumerate() {
            if j.nrows() != n || j.ncols() != n {
                return Err(GeomError::DimensionMismatch { left: n, right: j.nrows() });
            }
            let det = j.determinant();
            if det == 0.0 || !det.is_finite() {
                return Err(GeomError::SingularInput(format!("Jacobian at vertex {v}")));
            }
        }
        Ok(Self { perm, jacobians, exact })
    }

    pub fn identity(vertices: usize, n: usize) -> Self {
        Self {
            perm: (0..vertices).collect(),
            jacobians: vec![Matrix::identity(n, n); vertices],
            exact: true,
        }
    }

    #[inline]
    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    #[inline]
    pub fn jacobian(&self, v: usize) -> &Matrix {
        &self.jacobians[v]
    }

    #[inline]
    pub fn is_exact(&self) -> bool {
        self.exact
    }

    #[inline]
    pub fn vertex_count(&self) -> usize {
        self.perm.len()
    }

    pub fn n(&self) -> usize {
        self.jacobians.first().map_or(0, |j| j.nrows())
    }

    /// The pullback composite `self ∘ other`, i.e. `g ↦ self(other(g))`:
    /// the vertex map is `v ↦ π_other(π_self(v))` and the Jacobians follow
    /// the chain rule.
    pub fn compose(&self, other: &DiffeoAction) -> Result<DiffeoAction> {
        if self.vertex_count() != other.vertex_count() || self.n() != other.n() {
            return Err(GeomError::ManifoldMismatch);
        }
        let perm = self.perm.iter().map(|&p| other.perm[p]).collect();
        let jacobians = (0..self.vertex_count())
            .map(|v| &other.jacobians[self.perm[v]] * &self.jacobians[v])
            .collect();
        DiffeoAction::new(perm, jacobians, self.exact && other.exact)
    }

    pub fn inverse(&self) -> Result<DiffeoAction> {
        let inv = invert_perm(&self.perm);
        let jacobians = inv
            .iter()
            .map(|&u| {
                self.jacobians[u]
                    .clone()
                    .try_inverse()
                    .ok_or_else(|| GeomError::SingularInput(format!("Jacobian at vertex {u}")))
            })
            .collect::<Result<Vec<_>>>()?;
        DiffeoAction::new(inv, jacobians, self.exact)
    }

    pub fn is_identity(&self, tol: f64) -> bool {
        let n = self.n();
        self.perm.iter().enumerate().all(|(v, &p)| v == p)
            && self
                .jacobians
                .iter()
                .all(|j| (j - Matrix::identity(n, n)).abs().max() <= tol)
    }

    /// Order of the vertex permutation.
    pub fn permutation_order(&self) -> usize {
        let mut seen = vec![false; self.perm.len()];
        let mut order = 1usize;
        for start in 0..self.perm.len() {
            if seen[start] {
                continue;
            }
            let mut len = 0usize;
            let mut v = start;
            while !seen[v] {
                seen[v] = true;
                v = self.perm[v];
                len += 1;
            }
            order = lcm(order, len);
        }
        order
    }

    /// Fibre action at `v` in trivialized coordinates: the dilation
    /// `T_v ∘ (x ↦ J_vᵀ x J_v) ∘ T_{π(v)}⁻¹`.
    pub fn fibre_action(&self, manifold: &DiscreteManifold, v: usize) -> Result<FiberDilation> {
        let u = self.perm[v];
        let l_u = manifold.background(u).cholesky();
        let k = manifold
            .background(v)
            .cholesky()
            .solve_lower_triangular(&(self.jacobians[v].transpose() * l_u))
            .ok_or_else(|| GeomError::SingularInput("background factor".into()))?;
        congruence_dilation(&k)
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn lcm(a: usize, b: usize) -> usize {
    a / gcd(a, b) * b
}

/// Pullback of a field: `(φ* g)(v) = J_vᵀ g(π(v)) J_v`.
pub fn pullback(d: &DiffeoAction, f: &MetricField) -> Result<MetricField> {
    check_field_shape(f, d.vertex_count(), d.n())?;
    let values = (0..d.vertex_count())
        .map(|v| congruence_dilation(&d.jacobians[v].transpose())?.apply(f.value(d.perm[v])))
        .collect::<Result<Vec<_>>>()?;
    MetricField::new(Arc::clone(f.manifold()), values)
}

impl FieldMap for DiffeoAction {
    fn apply(&self, f: &MetricField) -> Result<MetricField> {
        pullback(self, f)
    }

    fn vertex_map(&self) -> Vec<usize> {
        self.perm.clone()
    }
}

/// Grid-exact torus map `i ↦ M i + s` on grid indices.
///
/// `M` must be an integer matrix with `|det M| = 1` that maps the grid
/// lattice to itself. On the unit torus the map has constant Jacobian
/// `D⁻¹ M D` with `D = diag(N₁, …, N_k)`, which is `M` on square grids.
pub fn torus_affine_diffeo(grid: &TorusGrid, matrix: &[Vec<i64>], shift: &[i64]) -> Result<DiffeoAction> {
    let k = grid.rank();
    if matrix.len() != k || matrix.iter().any(|row| row.len() != k) {
        return Err(GeomError::NotLatticeCompatible(format!("matrix must be {k}×{k}")));
    }
    if shift.len() != k {
        return Err(GeomError::NotLatticeCompatible(format!("shift must have {k} entries")));
    }
    let dims = grid.dims();
    let m = Matrix::from_fn(k, k, |i, j| matrix[i][j] as f64);
    let det = m.determinant().round();
    if det.abs() != 1.0 {
        return Err(GeomError::NotLatticeCompatible(format!("determinant {det}, need ±1")));
    }
    for a in 0..k {
        for b in 0..k {
            if (matrix[a][b] * dims[b] as i64).rem_euclid(dims[a] as i64) != 0 {
                return Err(GeomError::NotLatticeCompatible(format!(
                    "entry ({a},{b}) does not preserve the {dims:?} lattice"
                )));
            }
        }
    }
    let perm = (0..grid.len())
        .map(|v| {
            let idx = grid.multi_index(v);
            let image: Vec<i64> = (0..k)
                .map(|a| (0..k).map(|b| matrix[a][b] * idx[b] as i64).sum::<i64>() + shift[a])
                .collect();
            grid.linear_index(&image)
        })
        .collect();
    let jac = Matrix::from_fn(k, k, |a, b| matrix[a][b] as f64 * dims[b] as f64 / dims[a] as f64);
    DiffeoAction::new(perm, vec![jac; grid.len()], true)
}

/// One fibre isometry per vertex, acting in trivialized coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct FiberSection {
    isos: Vec<FiberIsometry>,
}

impl FiberSection {
    pub fn new(isos: Vec<FiberIsometry>) -> Result<Self> {
        let n = isos.first().map_or(0, |i| i.n());
        if let Some(bad) = isos.iter().find(|i| i.n() != n) {
            return Err(GeomError::DimensionMismatch { left: n, right: bad.n() });
        }
        Ok(Self { isos })
    }

    pub fn identity(vertices: usize, n: usize) -> Result<Self> {
        Ok(Self {
            isos: vec![FiberIsometry::identity(n)?; vertices],
        })
    }

    pub fn constant(vertices: usize, iso: FiberIsometry) -> Self {
        Self {
            isos: vec![iso; vertices],
        }
    }

    #[inline]
    pub fn isos(&self) -> &[FiberIsometry] {
        &self.isos
    }

    #[inline]
    pub fn get(&self, v: usize) -> &FiberIsometry {
        &self.isos[v]
    }

    pub fn vertex_count(&self) -> usize {
        self.isos.len()
    }

    pub fn n(&self) -> usize {
        self.isos.first().map_or(0, |i| i.n())
    }

    /// Fibrewise `self ∘ other`.
    pub fn compose(&self, other: &FiberSection) -> Result<FiberSection> {
        if self.vertex_count() != other.vertex_count() {
            return Err(GeomError::ManifoldMismatch);
        }
        let isos = self
            .isos
            .iter()
            .zip(&other.isos)
            .map(|(a, b)| a.compose(b))
            .collect::<Result<Vec<_>>>()?;
        FiberSection::new(isos)
    }

    pub fn inverse(&self) -> Result<FiberSection> {
        FiberSection::new(self.isos.iter().map(|i| i.inverse()).collect::<Result<Vec<_>>>()?)
    }

    /// `P ∘ self ∘ P⁻¹` as a section, for the pullback `P` of `d`.
    pub fn conjugate_by(&self, d: &DiffeoAction, manifold: &DiscreteManifold) -> Result<FiberSection> {
        if d.vertex_count() != self.vertex_count() {
            return Err(GeomError::ManifoldMismatch);
        }
        let isos = (0..self.vertex_count())
            .map(|v| {
                let k = d.fibre_action(manifold, v)?;
                let c = k.iso();
                c.compose(&self.isos[d.perm()[v]])?.compose(&c.inverse()?)
            })
            .collect::<Result<Vec<_>>>()?;
        FiberSection::new(isos)
    }

    pub fn is_identity(&self, tol: f64) -> bool {
        // A and -A act identically.
        self.isos.iter().all(|i| {
            let id = Matrix::identity(i.n(), i.n());
            !i.inverts()
                && ((i.matrix() - &id).abs().max() <= tol || (i.matrix() + &id).abs().max() <= tol)
        })
    }
}

/// `α(g)(v) = α_v(g(v))` with `α_v` applied in the chart at `v`.
pub fn apply_section(s: &FiberSection, f: &MetricField) -> Result<MetricField> {
    let man = f.manifold();
    check_field_shape(f, s.vertex_count(), s.n())?;
    let values = (0..man.vertex_count())
        .map(|v| {
            let chart = man.chart(v);
            chart.untrivialize(&s.isos[v].apply(&chart.trivialize(f.value(v))?)?)
        })
        .collect::<Result<Vec<_>>>()?;
    MetricField::new(Arc::clone(man), values)
}

impl FieldMap for FiberSection {
    fn apply(&self, f: &MetricField) -> Result<MetricField> {
        apply_section(self, f)
    }

    fn vertex_map(&self) -> Vec<usize> {
        (0..self.vertex_count()).collect()
    }
}

/// Element `(α, φ)` of the semidirect product, acting by `g ↦ α(φ* g)`.
#[derive(Clone, Debug)]
pub struct EbinIsometry {
    manifold: Arc<DiscreteManifold>,
    section: FiberSection,
    diffeo: DiffeoAction,
}

impl EbinIsometry {
    pub fn new(manifold: Arc<DiscreteManifold>, section: FiberSection, diffeo: DiffeoAction) -> Result<Self> {
        let (vc, n) = (manifold.vertex_count(), manifold.n());
        if section.vertex_count() != vc || diffeo.vertex_count() != vc || section.n() != n || diffeo.n() != n {
            return Err(GeomError::ManifoldMismatch);
        }
        Ok(Self {
            manifold,
            section,
            diffeo,
        })
    }

    pub fn identity(manifold: Arc<DiscreteManifold>) -> Result<Self> {
        let (vc, n) = (manifold.vertex_count(), manifold.n());
        Self::new(manifold, FiberSection::identity(vc, n)?, DiffeoAction::identity(vc, n))
    }

    pub fn from_section(manifold: Arc<DiscreteManifold>, section: FiberSection) -> Result<Self> {
        let (vc, n) = (manifold.vertex_count(), manifold.n());
        Self::new(manifold, section, DiffeoAction::identity(vc, n))
    }

    pub fn from_diffeo(manifold: Arc<DiscreteManifold>, diffeo: DiffeoAction) -> Result<Self> {
        let (vc, n) = (manifold.vertex_count(), manifold.n());
        Self::new(manifold, FiberSection::identity(vc, n)?, diffeo)
    }

    #[inline]
    pub fn section(&self) -> &FiberSection {
        &self.section
    }

    #[inline]
    pub fn diffeo(&self) -> &DiffeoAction {
        &self.diffeo
    }

    #[inline]
    pub fn manifold(&self) -> &Arc<DiscreteManifold> {
        &self.manifold
    }

    pub fn apply(&self, f: &MetricField) -> Result<MetricField> {
        if !f.manifold().same_as(&self.manifold) {
            return Err(GeomError::ManifoldMismatch);
        }
        apply_section(&self.section, &pullback(&self.diffeo, f)?)
    }

    /// `self ∘ other` in `(section, diffeo)` normal form:
    /// `α_a P_a α_b P_b = (α_a · P_a α_b P_a⁻¹) (P_a P_b)`.
    pub fn compose(&self, other: &EbinIsometry) -> Result<EbinIsometry> {
        if !self.manifold.same_as(&other.manifold) {
            return Err(GeomError::ManifoldMismatch);
        }
        let moved = other.section.conjugate_by(&self.diffeo, &self.manifold)?;
        let section = self.section.compose(&moved)?;
        let diffeo = self.diffeo.compose(&other.diffeo)?;
        EbinIsometry::new(Arc::clone(&self.manifold), section, diffeo)
    }

    /// `(α P)⁻¹ = (P⁻¹ α⁻¹ P) P⁻¹`.
    pub fn inverse(&self) -> Result<EbinIsometry> {
        let inv_diffeo = self.diffeo.inverse()?;
        let section = self.section.inverse()?.conjugate_by(&inv_diffeo, &self.manifold)?;
        EbinIsometry::new(Arc::clone(&self.manifold), section, inv_diffeo)
    }

    pub fn is_pure_section(&self, tol: f64) -> bool {
        self.diffeo.is_identity(tol)
    }
}

impl FieldMap for EbinIsometry {
    fn apply(&self, f: &MetricField) -> Result<MetricField> {
        EbinIsometry::apply(self, f)
    }

    fn vertex_map(&self) -> Vec<usize> {
        self.diffeo.perm.clone()
    }
}

/// `compose(a, b)`: the action `g ↦ a(b(g))`.
pub fn compose(a: &EbinIsometry, b: &EbinIsometry) -> Result<EbinIsometry> {
    a.compose(b)
}

/// Factors `δ(u)^{-1/2}` with `δ(u) = w_{φ⁻¹(u)} / w_u`, i.e. the dilation
/// factor to attach at vertex `u` so that `f ↦ ρ(φ(·))(f(φ(·)))` is an
/// isometry.
pub fn required_dilation_factors(perm: &[usize], weights: &[f64]) -> Result<Vec<f64>> {
    check_bijection(perm)?;
    if perm.len() != weights.len() {
        return Err(GeomError::InvalidInput("vertex map and weights differ in length".into()));
    }
    let inv = invert_perm(perm);
    Ok((0..perm.len()).map(|u| (weights[u] / weights[inv[u]]).sqrt()).collect())
}

/// `γ(f)(v) = ρ(φ(v))(f(φ(v)))` over a unit-mass weighted vertex space,
/// with `ρ` acting between the charts at `φ(v)` and `v`.
#[derive(Clone, Debug)]
pub struct L2NormalForm {
    manifold: Arc<DiscreteManifold>,
    perm: Vec<usize>,
    dilations: Vec<FiberDilation>,
}

impl L2NormalForm {
    /// Arbitrary factors; the map is an isometry only when they obey
    /// [`required_dilation_factors`].
    pub fn new(manifold: Arc<DiscreteManifold>, perm: Vec<usize>, dilations: Vec<FiberDilation>) -> Result<Self> {
        check_bijection(&perm)?;
        if !manifold.is_unit_mass() {
            return Err(GeomError::NonUnitMass(manifold.total_mass()));
        }
        if perm.len() != manifold.vertex_count() || dilations.len() != perm.len() {
            return Err(GeomError::ManifoldMismatch);
        }
        if let Some(bad) = dilations.iter().find(|d| d.n() != manifold.n()) {
            return Err(GeomError::DimensionMismatch {
                left: manifold.n(),
                right: bad.n(),
            });
        }
        Ok(Self {
            manifold,
            perm,
            dilations,
        })
    }

    /// Attaches the factor law to the given angular parts.
    pub fn isometric(manifold: Arc<DiscreteManifold>, perm: Vec<usize>, isos: Vec<FiberIsometry>) -> Result<Self> {
        let factors = required_dilation_factors(&perm, manifold.weights())?;
        if isos.len() != factors.len() {
            return Err(GeomError::ManifoldMismatch);
        }
        let dilations = factors
            .into_iter()
            .zip(isos)
            .map(|(f, iso)| FiberDilation::new(f, iso))
            .collect::<Result<Vec<_>>>()?;
        let nf = Self::new(manifold, perm, dilations)?;
        debug_assert!(nf.factor_law_residual() <= 1e-10);
        Ok(nf)
    }

    #[inline]
    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    #[inline]
    pub fn dilations(&self) -> &[FiberDilation] {
        &self.dilations
    }

    #[inline]
    pub fn manifold(&self) -> &Arc<DiscreteManifold> {
        &self.manifold
    }

    pub fn factors(&self) -> Vec<f64> {
        self.dilations.iter().map(|d| d.factor()).collect()
    }

    /// Largest deviation of the factors from the isometry law.
    pub fn factor_law_residual(&self) -> f64 {
        let required = required_dilation_factors(&self.perm, self.manifold.weights()).expect("validated bijection");
        required
            .iter()
            .zip(&self.dilations)
            .map(|(r, d)| (r - d.factor()).abs())
            .fold(0.0, f64::max)
    }

    pub fn apply(&self, f: &MetricField) -> Result<MetricField> {
        if !f.manifold().same_as(&self.manifold) {
            return Err(GeomError::ManifoldMismatch);
        }
        let man = &self.manifold;
        let values = (0..man.vertex_count())
            .map(|v| {
                let u = self.perm[v];
                let std = man.chart(u).trivialize(f.value(u))?;
                man.chart(v).untrivialize(&self.dilations[u].apply(&std)?)
            })
            .collect::<Result<Vec<_>>>()?;
        MetricField::new(Arc::clone(man), values)
    }

    /// `self ∘ other`: vertex map `v ↦ φ_other(φ_self(v))` and dilations
    /// `ρ(u) = ρ_self(φ_other⁻¹(u)) ∘ ρ_other(u)`.
    pub fn compose(&self, other: &L2NormalForm) -> Result<L2NormalForm> {
        if !self.manifold.same_as(&other.manifold) {
            return Err(GeomError::ManifoldMismatch);
        }
        let perm: Vec<usize> = self.perm.iter().map(|&p| other.perm[p]).collect();
        let other_inv = invert_perm(&other.perm);
        let dilations = (0..perm.len())
            .map(|u| self.dilations[other_inv[u]].compose(&other.dilations[u]))
            .collect::<Result<Vec<_>>>()?;
        L2NormalForm::new(Arc::clone(&self.manifold), perm, dilations)
    }
}

impl FieldMap for L2NormalForm {
    fn apply(&self, f: &MetricField) -> Result<MetricField> {
        L2NormalForm::apply(self, f)
    }

    fn vertex_map(&self) -> Vec<usize> {
        self.perm.clone()
    }
}

/// The field map described by a normal form.
pub fn normal_form_map(nf: &L2NormalForm) -> impl Fn(&MetricField) -> Result<MetricField> + '_ {
    move |f| nf.apply(f)
}

/// `|Σ_{v∈A} w_v d_v²(f, g) − Σ_{v∈φ⁻¹(A)} w_v d_v²(γf, γg)|`.
pub fn localization_check(
    map: &dyn FieldMap,
    vertex_map: &[usize],
    subset: &[usize],
    f: &MetricField,
    g: &MetricField,
) -> Result<f64> {
    check_same(f, g)?;
    let man = f.manifold();
    if vertex_map.len() != man.vertex_count() {
        return Err(GeomError::ManifoldMismatch);
    }
    let mut in_subset = vec![false; man.vertex_count()];
    for &v in subset {
        *in_subset.get_mut(v).ok_or_else(|| GeomError::InvalidInput(format!("vertex {v} out of range")))? = true;
    }
    let before = fibre_sq_dists(f, g)?;
    let after = fibre_sq_dists(&map.apply(f)?, &map.apply(g)?)?;
    let w = man.weights();
    let lhs = compensated_sum((0..w.len()).filter(|&v| in_subset[v]).map(|v| w[v] * before[v]));
    let rhs = compensated_sum((0..w.len()).filter(|&v| in_subset[vertex_map[v]]).map(|v| w[v] * after[v]));
    Ok((lhs - rhs).abs())
}
