//! Cellwise assembly of the bilinear and linear forms used by the solvers.

use crate::error::{Error, Result};
use crate::fem::quadrature::quadrature_rule;
use crate::fem::space::{physical_shapes, Degree, FeFunction, FeSpace, QPoint, ShapeEval, ValueKind};
use crate::fem::sparse::{CsrMatrix, TripletBuilder};
use crate::mesh::CellGeometry;

/// Scalar coefficient of a form.
#[derive(Clone, Copy)]
pub enum Weight<'a> {
    Constant(f64),
    Field(&'a dyn Fn(&CellGeometry, &QPoint) -> f64),
}

impl Weight<'_> {
    #[inline]
    pub fn eval(&self, geom: &CellGeometry, qp: &QPoint) -> f64 {
        match self {
            Weight::Constant(c) => *c,
            Weight::Field(f) => f(geom, qp),
        }
    }

    fn is_constant(&self) -> bool {
        matches!(self, Weight::Constant(_))
    }
}

/// Degree-2 rule for constant-coefficient P1×P1 forms, degree 4 otherwise.
pub fn default_order(row: &FeSpace, col: &FeSpace, weight: &Weight) -> usize {
    if row.degree() == Degree::P1 && col.degree() == Degree::P1 && weight.is_constant() {
        2
    } else {
        4
    }
}

/// Generic bilinear-form assembly.
///
/// `prepare` runs once per quadrature point; `kernel(ctx, ci, test, cj, trial)`
/// gives the integrand for test component `ci` and trial component `cj`.
/// With `diagonal_only`, pairs with `ci != cj` are skipped.
pub fn assemble_form<C>(
    row: &FeSpace,
    col: &FeSpace,
    order: usize,
    diagonal_only: bool,
    prepare: impl Fn(&CellGeometry, &QPoint) -> C,
    kernel: impl Fn(&C, usize, &ShapeEval, usize, &ShapeEval) -> f64,
) -> Result<CsrMatrix> {
    row.check_mesh(col)?;
    let rule = quadrature_rule(order)?;
    let mesh = row.mesh();
    let (nlr, nlc) = (row.degree().local_dofs(), col.degree().local_dofs());
    let (ncr, ncc) = (row.n_components(), col.n_components());
    let (lr, lc) = (nlr * ncr, nlc * ncc);
    let mut local = vec![0.0; lr * lc];
    let pairs_per_cell = if diagonal_only { ncr * nlr * nlc } else { lr * lc };
    let mut trip = TripletBuilder::with_capacity(row.dof_count(), col.dof_count(), pairs_per_cell * mesh.n_triangles());

    for cell in 0..mesh.n_triangles() {
        let geom = mesh.cell(cell);
        local.iter_mut().for_each(|v| *v = 0.0);
        for (bary, w) in rule.points.iter().zip(&rule.weights) {
            let qp = QPoint { cell, bary: *bary, x: geom.point(*bary), weight: 2.0 * geom.area * w };
            let ctx = prepare(&geom, &qp);
            let sr = physical_shapes(row.degree(), &geom, *bary);
            let sc = physical_shapes(col.degree(), &geom, *bary);
            for ci in 0..ncr {
                for a in 0..nlr {
                    let li = ci * nlr + a;
                    for cj in 0..ncc {
                        if diagonal_only && ci != cj {
                            continue;
                        }
                        for b in 0..nlc {
                            local[li * lc + cj * nlc + b] += qp.weight * kernel(&ctx, ci, &sr[a], cj, &sc[b]);
                        }
                    }
                }
            }
        }
        let (rd, cd) = (row.cell_dofs(cell), col.cell_dofs(cell));
        for ci in 0..ncr {
            for (a, &ra) in rd.iter().enumerate() {
                let gi = row.global(ci, ra);
                let li = ci * nlr + a;
                for cj in 0..ncc {
                    if diagonal_only && ci != cj {
                        continue;
                    }
                    for (b, &cb) in cd.iter().enumerate() {
                        trip.push(gi, col.global(cj, cb), local[li * lc + cj * nlc + b]);
                    }
                }
            }
        }
    }
    Ok(trip.build())
}

/// M[i,j] = ∫ w ψ_i ψ_j, block diagonal over components.
pub fn assemble_mass(space: &FeSpace, weight: Weight) -> Result<CsrMatrix> {
    let order = default_order(space, space, &weight);
    assemble_mass_with_order(space, weight, order)
}

pub fn assemble_mass_with_order(space: &FeSpace, weight: Weight, order: usize) -> Result<CsrMatrix> {
    assemble_form(space, space, order, true, |g, q| weight.eval(g, q), |w, _, t, _, s| w * t.value * s.value)
}

/// K[i,j] = ∫ w ∇ψ_i·∇ψ_j, block diagonal over components.
pub fn assemble_stiffness(space: &FeSpace, weight: Weight) -> Result<CsrMatrix> {
    let order = default_order(space, space, &weight);
    assemble_form(
        space,
        space,
        order,
        true,
        |g, q| weight.eval(g, q),
        |w, _, t, _, s| w * (t.grad[0] * s.grad[0] + t.grad[1] * s.grad[1]),
    )
}

/// C[i,j] = ∫ w (a·∇ψ_j) ψ_i for an arbitrary advecting field `a`.
pub fn assemble_advection(
    space: &FeSpace,
    advect: &dyn Fn(&CellGeometry, &QPoint) -> [f64; 2],
    weight: Weight,
) -> Result<CsrMatrix> {
    assemble_form(
        space,
        space,
        4,
        true,
        |g, q| {
            let a = advect(g, q);
            let w = weight.eval(g, q);
            [w * a[0], w * a[1]]
        },
        |a, _, t, _, s| t.value * (a[0] * s.grad[0] + a[1] * s.grad[1]),
    )
}

/// C[i,j] = ∫ w (v·∇ψ_j) ψ_i with `v` a vector finite-element function.
pub fn assemble_convection(space: &FeSpace, velocity: &FeFunction, weight: Weight) -> Result<CsrMatrix> {
    space.check_mesh(velocity.space())?;
    if velocity.space().kind() != ValueKind::Vector2 {
        return Err(Error::SpaceMismatch("convection velocity must be a vector field".into()));
    }
    assemble_advection(space, &|_, q| [velocity.value_at(q, 0), velocity.value_at(q, 1)], weight)
}

/// A[i,j] = ∫ 2μ D(ψ_j):D(ψ_i) on a vector space.
pub fn assemble_vector_laplacian_and_symgrad(space: &FeSpace, viscosity: Weight) -> Result<CsrMatrix> {
    if space.kind() != ValueKind::Vector2 {
        return Err(Error::SpaceMismatch("symmetric-gradient form needs a vector space".into()));
    }
    let order = default_order(space, space, &viscosity);
    // For ψ = e_a N and ζ = e_b M: D(ψ):D(ζ) = ½(δ_ab ∇N·∇M + ∂_b N ∂_a M).
    assemble_form(
        space,
        space,
        order,
        false,
        |g, q| viscosity.eval(g, q),
        |mu, ci, t, cj, s| {
            let diag = if ci == cj { t.grad[0] * s.grad[0] + t.grad[1] * s.grad[1] } else { 0.0 };
            mu * (diag + s.grad[ci] * t.grad[cj])
        },
    )
}

/// B[i,j] = ∫ q_i ∇·ψ_j with q in a scalar space and ψ in a vector space.
pub fn assemble_divergence(v_space: &FeSpace, p_space: &FeSpace) -> Result<CsrMatrix> {
    if v_space.kind() != ValueKind::Vector2 || p_space.kind() != ValueKind::Scalar {
        return Err(Error::SpaceMismatch("divergence form needs (vector, scalar) spaces".into()));
    }
    assemble_form(p_space, v_space, 4, false, |_, _| (), |_, _, q, cj, s| q.value * s.grad[cj])
}

/// b[i] = ∫ f(ctx, component, ψ_i) for every test function of `space`.
pub fn assemble_load<C>(
    space: &FeSpace,
    order: usize,
    prepare: impl Fn(&CellGeometry, &QPoint) -> C,
    integrand: impl Fn(&C, usize, &ShapeEval) -> f64,
) -> Result<Vec<f64>> {
    let rule = quadrature_rule(order)?;
    let mesh = space.mesh();
    let nl = space.degree().local_dofs();
    let mut b = vec![0.0; space.dof_count()];
    for cell in 0..mesh.n_triangles() {
        let geom = mesh.cell(cell);
        let dofs = space.cell_dofs(cell);
        for (bary, w) in rule.points.iter().zip(&rule.weights) {
            let qp = QPoint { cell, bary: *bary, x: geom.point(*bary), weight: 2.0 * geom.area * w };
            let ctx = prepare(&geom, &qp);
            let shapes = physical_shapes(space.degree(), &geom, *bary);
            for c in 0..space.n_components() {
                for a in 0..nl {
                    b[space.global(c, dofs[a])] += qp.weight * integrand(&ctx, c, &shapes[a]);
                }
            }
        }
    }
    Ok(b)
}

/// Constrained dofs with prescribed values.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DirichletSet {
    entries: Vec<(usize, f64)>,
}

impl DirichletSet {
    pub fn new(mut entries: Vec<(usize, f64)>) -> Self {
        entries.sort_by_key(|e| e.0);
        entries.dedup_by_key(|e| e.0);
        DirichletSet { entries }
    }

    pub fn homogeneous(dofs: impl IntoIterator<Item = usize>) -> Self {
        Self::new(dofs.into_iter().map(|d| (d, 0.0)).collect())
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    /// Shifts every constrained index by `offset` (for block systems).
    pub fn shifted(&self, offset: usize) -> Self {
        DirichletSet { entries: self.entries.iter().map(|&(d, v)| (d + offset, v)).collect() }
    }

    pub fn extend(&mut self, other: &DirichletSet) {
        self.entries.extend_from_slice(&other.entries);
        let merged = std::mem::take(&mut self.entries);
        *self = Self::new(merged);
    }
}

/// Symmetric elimination: constrained rows become identity rows, constrained
/// columns are moved to the right-hand side.
pub fn apply_dirichlet(matrix: &CsrMatrix, rhs: &[f64], dofs: &DirichletSet) -> (CsrMatrix, Vec<f64>) {
    let n = matrix.nrows();
    assert_eq!(n, matrix.ncols(), "Dirichlet elimination needs a square matrix");
    assert_eq!(rhs.len(), n);
    let mut value = vec![None; n];
    for &(d, v) in dofs.entries() {
        value[d] = Some(v);
    }
    let mut b = rhs.to_vec();
    let mut row_ptr = Vec::with_capacity(n + 1);
    let mut col_idx = Vec::with_capacity(matrix.nnz());
    let mut vals = Vec::with_capacity(matrix.nnz());
    row_ptr.push(0);
    for i in 0..n {
        if let Some(g) = value[i] {
            col_idx.push(i);
            vals.push(1.0);
            b[i] = g;
        } else {
            for (j, a) in matrix.row(i) {
                match value[j] {
                    Some(g) => b[i] -= a * g,
                    None => {
                        col_idx.push(j);
                        vals.push(a);
                    }
                }
            }
        }
        row_ptr.push(col_idx.len());
    }
    (CsrMatrix::from_raw(n, n, row_ptr, col_idx, vals), b)
}
