use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fem::quadrature::{quadrature_rule, QuadratureRule};
use crate::mesh::{on_boundary, CellGeometry, Mesh};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Degree {
    P1,
    P2,
}

impl Degree {
    pub fn local_dofs(self) -> usize {
        match self {
            Degree::P1 => 3,
            Degree::P2 => 6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ValueKind {
    Scalar,
    Vector2,
    /// Symmetric 2×2 tensor stored as (xx, xy, yy).
    SymTensor2,
}

impl ValueKind {
    pub fn components(self) -> usize {
        match self {
            ValueKind::Scalar => 1,
            ValueKind::Vector2 => 2,
            ValueKind::SymTensor2 => 3,
        }
    }
}

/// Lagrange space on a mesh. Multi-component spaces use a blocked layout:
/// component `c` of scalar dof `s` is global dof `c * n_scalar + s`.
#[derive(Debug)]
pub struct FeSpace {
    mesh: Arc<Mesh>,
    degree: Degree,
    kind: ValueKind,
    n_scalar: usize,
    cell_dofs: Vec<[usize; 6]>,
    dof_points: Vec<[f64; 2]>,
}

impl FeSpace {
    pub fn new(mesh: Arc<Mesh>, degree: Degree, kind: ValueKind) -> Arc<Self> {
        let nv = mesh.n_vertices();
        let (n_scalar, cell_dofs, dof_points) = match degree {
            Degree::P1 => {
                let dofs = mesh.triangles().iter().map(|t| [t[0], t[1], t[2], 0, 0, 0]).collect();
                (nv, dofs, mesh.vertices().to_vec())
            }
            Degree::P2 => {
                let dofs = mesh
                    .triangles()
                    .iter()
                    .zip(mesh.triangle_edges())
                    .map(|(t, e)| [t[0], t[1], t[2], nv + e[0], nv + e[1], nv + e[2]])
                    .collect();
                let mut points = mesh.vertices().to_vec();
                points.extend((0..mesh.n_edges()).map(|e| mesh.edge_midpoint(e)));
                (nv + mesh.n_edges(), dofs, points)
            }
        };
        Arc::new(FeSpace { mesh, degree, kind, n_scalar, cell_dofs, dof_points })
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn degree(&self) -> Degree {
        self.degree
    }

    pub fn kind(&self) -> ValueKind {
        self.kind
    }

    pub fn n_components(&self) -> usize {
        self.kind.components()
    }

    /// Number of scalar (per-component) dofs.
    pub fn n_scalar(&self) -> usize {
        self.n_scalar
    }

    pub fn dof_count(&self) -> usize {
        self.n_scalar * self.n_components()
    }

    /// Scalar dofs of a cell in local order: vertices, then edges 01, 12, 20.
    pub fn cell_dofs(&self, cell: usize) -> &[usize] {
        &self.cell_dofs[cell][..self.degree.local_dofs()]
    }

    /// Nodal points of the scalar dofs.
    pub fn dof_points(&self) -> &[[f64; 2]] {
        &self.dof_points
    }

    pub fn global(&self, component: usize, scalar_dof: usize) -> usize {
        component * self.n_scalar + scalar_dof
    }

    /// Scalar dofs whose nodes lie on ∂Ω.
    pub fn boundary_scalar_dofs(&self) -> Vec<usize> {
        (0..self.n_scalar).filter(|&s| on_boundary(self.dof_points[s])).collect()
    }

    pub fn same_mesh(&self, other: &FeSpace) -> bool {
        Arc::ptr_eq(&self.mesh, &other.mesh)
    }

    pub(crate) fn check_mesh(&self, other: &FeSpace) -> Result<()> {
        if self.same_mesh(other) {
            Ok(())
        } else {
            Err(Error::MeshMismatch)
        }
    }
}

/// Shape function values and barycentric derivatives at one reference point.
#[derive(Debug, Clone, Copy)]
pub(crate) struct RefShapes {
    pub values: [f64; 6],
    pub d_bary: [[f64; 3]; 6],
}

pub(crate) fn ref_shapes(degree: Degree, l: [f64; 3]) -> RefShapes {
    let mut values = [0.0; 6];
    let mut d_bary = [[0.0; 3]; 6];
    match degree {
        Degree::P1 => {
            for k in 0..3 {
                values[k] = l[k];
                d_bary[k][k] = 1.0;
            }
        }
        Degree::P2 => {
            for k in 0..3 {
                values[k] = l[k] * (2.0 * l[k] - 1.0);
                d_bary[k][k] = 4.0 * l[k] - 1.0;
                let (a, b) = (k, (k + 1) % 3);
                values[3 + k] = 4.0 * l[a] * l[b];
                d_bary[3 + k][a] = 4.0 * l[b];
                d_bary[3 + k][b] = 4.0 * l[a];
            }
        }
    }
    RefShapes { values, d_bary }
}

/// Physical value and gradient of one local shape function.
#[derive(Debug, Clone, Copy, Default)]
pub struct ShapeEval {
    pub value: f64,
    pub grad: [f64; 2],
}

pub(crate) fn physical_shapes(degree: Degree, geom: &CellGeometry, l: [f64; 3]) -> [ShapeEval; 6] {
    let r = ref_shapes(degree, l);
    let mut out = [ShapeEval::default(); 6];
    for a in 0..degree.local_dofs() {
        let mut g = [0.0; 2];
        for k in 0..3 {
            g[0] += r.d_bary[a][k] * geom.grad_bary[k][0];
            g[1] += r.d_bary[a][k] * geom.grad_bary[k][1];
        }
        out[a] = ShapeEval { value: r.values[a], grad: g };
    }
    out
}

/// A quadrature point in physical space.
#[derive(Debug, Clone, Copy)]
pub struct QPoint {
    pub cell: usize,
    pub bary: [f64; 3],
    pub x: [f64; 2],
    /// Physical quadrature weight (includes the Jacobian).
    pub weight: f64,
}

/// Visits every quadrature point of the mesh, cell by cell.
pub fn for_each_qpoint(mesh: &Mesh, rule: &QuadratureRule, mut f: impl FnMut(&CellGeometry, &QPoint)) {
    for cell in 0..mesh.n_triangles() {
        let geom = mesh.cell(cell);
        for (bary, w) in rule.points.iter().zip(&rule.weights) {
            let qp = QPoint { cell, bary: *bary, x: geom.point(*bary), weight: 2.0 * geom.area * w };
            f(&geom, &qp);
        }
    }
}

/// ∫_Ω f with the rule of the given order.
pub fn integrate(mesh: &Mesh, order: usize, f: impl Fn(&QPoint) -> f64) -> Result<f64> {
    let rule = quadrature_rule(order)?;
    let mut sum = 0.0;
    for_each_qpoint(mesh, &rule, |_, qp| sum += qp.weight * f(qp));
    Ok(sum)
}

/// Coefficient vector bound to a space.
#[derive(Debug, Clone)]
pub struct FeFunction {
    space: Arc<FeSpace>,
    coeffs: Vec<f64>,
}

impl FeFunction {
    pub fn zeros(space: &Arc<FeSpace>) -> Self {
        FeFunction { space: space.clone(), coeffs: vec![0.0; space.dof_count()] }
    }

    pub fn from_coeffs(space: &Arc<FeSpace>, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != space.dof_count() {
            return Err(Error::SpaceMismatch(format!(
                "{} coefficients for a space with {} dofs",
                coeffs.len(),
                space.dof_count()
            )));
        }
        Ok(FeFunction { space: space.clone(), coeffs })
    }

    /// Nodal interpolant; `f(point, component)` gives the field value.
    pub fn interpolate(space: &Arc<FeSpace>, f: impl Fn([f64; 2], usize) -> f64) -> Self {
        let n = space.n_scalar();
        let mut coeffs = vec![0.0; space.dof_count()];
        for c in 0..space.n_components() {
            for (s, p) in space.dof_points().iter().enumerate() {
                coeffs[c * n + s] = f(*p, c);
            }
        }
        FeFunction { space: space.clone(), coeffs }
    }

    pub fn constant(space: &Arc<FeSpace>, values: &[f64]) -> Self {
        assert_eq!(values.len(), space.n_components());
        Self::interpolate(space, |_, c| values[c])
    }

    pub fn space(&self) -> &Arc<FeSpace> {
        &self.space
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    /// Coefficients of one component.
    pub fn component(&self, c: usize) -> &[f64] {
        let n = self.space.n_scalar();
        &self.coeffs[c * n..(c + 1) * n]
    }

    /// Value of component `c` at a quadrature point.
    pub fn value_at(&self, qp: &QPoint, c: usize) -> f64 {
        let r = ref_shapes(self.space.degree(), qp.bary);
        let base = c * self.space.n_scalar();
        self.space
            .cell_dofs(qp.cell)
            .iter()
            .zip(&r.values)
            .map(|(&s, v)| v * self.coeffs[base + s])
            .sum()
    }

    /// Gradient of component `c` at a quadrature point of `geom`.
    pub fn grad_at(&self, geom: &CellGeometry, qp: &QPoint, c: usize) -> [f64; 2] {
        let r = ref_shapes(self.space.degree(), qp.bary);
        let base = c * self.space.n_scalar();
        let mut d = [0.0; 3];
        for (a, &s) in self.space.cell_dofs(qp.cell).iter().enumerate() {
            let u = self.coeffs[base + s];
            for k in 0..3 {
                d[k] += u * r.d_bary[a][k];
            }
        }
        let gb = &geom.grad_bary;
        [
            d[0] * gb[0][0] + d[1] * gb[1][0] + d[2] * gb[2][0],
            d[0] * gb[0][1] + d[1] * gb[1][1] + d[2] * gb[2][1],
        ]
    }

    /// All components at a physical point.
    pub fn evaluate(&self, p: [f64; 2]) -> Result<Vec<f64>> {
        let mesh = self.space.mesh();
        let (cell, bary) = mesh.locate(p).ok_or(Error::PointOutsideDomain(p[0], p[1]))?;
        let qp = QPoint { cell, bary, x: p, weight: 0.0 };
        Ok((0..self.space.n_components()).map(|c| self.value_at(&qp, c)).collect())
    }

    /// `self = a * self + b * other`, coefficientwise.
    pub fn axpby(&mut self, a: f64, b: f64, other: &FeFunction) {
        debug_assert_eq!(self.coeffs.len(), other.coeffs.len());
        for (x, y) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *x = a * *x + b * y;
        }
    }

    /// `a * x + b * y` coefficientwise.
    pub fn combine(a: f64, x: &FeFunction, b: f64, y: &FeFunction) -> FeFunction {
        let mut out = x.clone();
        out.axpby(a, b, y);
        out
    }

    /// L² norm over all components, computed with the given quadrature order.
    pub fn l2_norm(&self, order: usize) -> Result<f64> {
        let ncomp = self.space.n_components();
        let weights = component_weights(self.space.kind());
        let sq = integrate(self.space.mesh(), order, |qp| {
            (0..ncomp).map(|c| weights[c] * self.value_at(qp, c).powi(2)).sum()
        })?;
        Ok(sq.max(0.0).sqrt())
    }

    /// L² distance to a closed-form field `f(x, component)`.
    pub fn l2_distance_to(&self, order: usize, f: impl Fn([f64; 2], usize) -> f64) -> Result<f64> {
        let ncomp = self.space.n_components();
        let weights = component_weights(self.space.kind());
        let sq = integrate(self.space.mesh(), order, |qp| {
            (0..ncomp).map(|c| weights[c] * (self.value_at(qp, c) - f(qp.x, c)).powi(2)).sum()
        })?;
        Ok(sq.max(0.0).sqrt())
    }
}

/// Multiplicities making the component sum a Frobenius contraction.
pub(crate) fn component_weights(kind: ValueKind) -> &'static [f64] {
    match kind {
        ValueKind::Scalar => &[1.0],
        ValueKind::Vector2 => &[1.0, 1.0],
        ValueKind::SymTensor2 => &[1.0, 2.0, 1.0],
    }
}
